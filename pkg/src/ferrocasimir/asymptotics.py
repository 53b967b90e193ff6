"""Closed forms for the zero-frequency (thermal) pressure terms.

All pressures are in Pa with lengths in nm; negative means attraction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .constants import EV_PER_NM3_TO_PA, K_B_EV_PER_K

ZETA = {2: math.pi**2 / 6.0, 3: 1.2020569031595942853997}

# zeta(s - k) for the expansion about x = 1; zeta(-m) = -B_{m+1}/(m+1)
_BERNOULLI = [
    1.0, -0.5, 1.0 / 6.0, 0.0, -1.0 / 30.0, 0.0, 1.0 / 42.0, 0.0, -1.0 / 30.0, 0.0,
    5.0 / 66.0, 0.0, -691.0 / 2730.0, 0.0, 7.0 / 6.0, 0.0, -3617.0 / 510.0, 0.0,
    43867.0 / 798.0, 0.0, -174611.0 / 330.0, 0.0, 854513.0 / 138.0, 0.0,
    -236364091.0 / 2730.0, 0.0, 8553103.0 / 6.0, 0.0, -23749461029.0 / 870.0, 0.0,
    8615841276005.0 / 14322.0,
]


def _zeta_int(s: int) -> float:
    if s in ZETA:
        return ZETA[s]
    if s == 0:
        return -0.5
    if s < 0:
        m = -s
        return -_BERNOULLI[m + 1] / (m + 1)
    raise ValueError(f"zeta({s}) not tabulated")


def _series(s: int, x: float) -> float:
    term_pow, j = x, 1
    terms = []
    while True:
        t = term_pow / j**s
        terms.append(t)
        if abs(t) < 1e-18:
            break
        j += 1
        term_pow *= x
    return math.fsum(terms)


def _near_one(s: int, x: float) -> float:
    # Li_s(e^m) = m^(s-1)/(s-1)! [H_{s-1} - ln(-m)] + sum_{k != s-1} zeta(s-k) m^k / k!
    m = math.log(x)
    harmonic = math.fsum(1.0 / i for i in range(1, s))
    terms = [m ** (s - 1) / math.factorial(s - 1) * (harmonic - math.log(-m))]
    for k in range(0, 29):
        if k == s - 1:
            continue
        terms.append(_zeta_int(s - k) * m**k / math.factorial(k))
    return math.fsum(terms)


def polylog(s: int, x: float) -> float:
    """Li_s(x) for s in {2, 3} and real x in [-1, 1]."""
    if s not in (2, 3):
        raise ValueError(f"polylog order must be 2 or 3, got {s}")
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"polylog argument outside [-1, 1]: {x}")
    if x == 1.0:
        return ZETA[s]
    if x == 0.0:
        return 0.0
    if x < 0.0:
        if x >= -0.5:
            return _series(s, x)
        # Li_s(x) + Li_s(-x) = 2^(1-s) Li_s(x^2)
        return 2.0 ** (1 - s) * polylog(s, x * x) - polylog(s, -x)
    if x <= 0.5:
        return _series(s, x)
    return _near_one(s, x)


def _prefactor(ell: float, temperature_k: float) -> float:
    """k_B T / (8 pi ell^3) in Pa."""
    if ell <= 0:
        raise ValueError(f"separation must be positive, got {ell}")
    return K_B_EV_PER_K * temperature_k / (8.0 * math.pi * ell**3) * EV_PER_NM3_TO_PA


@dataclass(frozen=True)
class StaticTriple:
    eps_a0: float
    eps_m0: float
    eps_b1_0: float

    def __post_init__(self) -> None:
        if min(self.eps_a0, self.eps_m0, self.eps_b1_0) < 1.0:
            raise ValueError(f"static permittivities must be >= 1: {self}")

    @property
    def a(self) -> float:
        return (self.eps_a0 - self.eps_m0) / (self.eps_a0 + self.eps_m0)

    @property
    def b(self) -> float:
        return (self.eps_b1_0 - self.eps_m0) / (self.eps_b1_0 + self.eps_m0)


def te_thermal(ell: float, mu0: float, temperature_k: float = 300.0) -> float:
    """TE n=0 pressure across a gap with static permeability ``mu0``."""
    r = (mu0 - 1.0) / (mu0 + 1.0)
    return -_prefactor(ell, temperature_k) * polylog(3, r * r)


def tm_R(x: float, triple: StaticTriple) -> float:
    a, b = triple.a, triple.b
    return a * (b + x) / (1.0 + b * x)


def tm_thermal(ell: float, b1: float, triple: StaticTriple, temperature_k: float = 300.0) -> float:
    """TM n=0 pressure with the coating factor frozen at exp(-2 b1/ell)."""
    return -_prefactor(ell, temperature_k) * polylog(3, tm_R(math.exp(-2.0 * b1 / ell), triple))


def tm_thermal_large_gap(ell: float, b1: float, triple: StaticTriple, temperature_k: float = 300.0) -> float:
    """ell >> b1: the coating enters only through a first-order b1/ell correction."""
    a = triple.a
    corr = 2.0 * triple.eps_m0 / triple.eps_b1_0 * polylog(2, a) * (b1 / ell)
    return -_prefactor(ell, temperature_k) * (polylog(3, a) - corr)


def tm_thermal_small_gap(ell: float, triple: StaticTriple, temperature_k: float = 300.0) -> float:
    """ell << b1: the metal is screened by the coating."""
    return -_prefactor(ell, temperature_k) * polylog(3, triple.a * triple.b)


class SignRegime(str, enum.Enum):
    ATTRACT_SMALL_REPEL_LARGE = "ATTRACT_SMALL_REPEL_LARGE"
    REPEL_SMALL_ATTRACT_LARGE = "REPEL_SMALL_ATTRACT_LARGE"
    ALWAYS_ATTRACT = "ALWAYS_ATTRACT"


class UnclassifiedOrdering(ValueError):
    pass


def sign_regime(triple: StaticTriple) -> SignRegime:
    """Sign pattern of the TM n=0 term from the ordering of the statics."""
    ea, em, eb1 = triple.eps_a0, triple.eps_m0, triple.eps_b1_0
    if eb1 < ea < em:
        return SignRegime.ATTRACT_SMALL_REPEL_LARGE
    if eb1 < em < ea:
        return SignRegime.REPEL_SMALL_ATTRACT_LARGE
    if em < eb1 < ea:
        return SignRegime.ALWAYS_ATTRACT
    raise UnclassifiedOrdering(f"unclassified static ordering: {triple}")
