"""Lifshitz pressure of the four-layer stack as a Matsubara sum.

For each Matsubara order n and polarization the transverse-wavevector
integral is rewritten with y = 2 kz_m ell, which gives

    term_n = -(k_B T / 2 pi) w_n / (4 ell^3) * Int_{y_min}^{y_min + y_cut}
             y^2 r1 r2 e^-y / (1 - r1 r2 e^-y) dy,

with w_0 = 1/2, w_n = 1 otherwise, y_min = 2 ell sqrt(eps_m mu_m) xi_n / hbar c,
r1 = R_Am and r2 = R_eff. Negative pressure means attraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .constants import EV_PER_NM3_TO_PA, HBAR_C_EV_NM, K_B_EV_PER_K, perfect_conductor_pressure
from .quadrature import QuadratureError, integrate_rows
from .stack import TE, TM, FourLayerStack, Mode, StackResponse, reflection_pair, stack_response

ENGINE_VERSION = __version__
_CHUNK = 48
_ABS_FLOOR = 1e-30


class EngineError(RuntimeError):
    """Numerical failure while evaluating the pressure."""


class ConvergenceError(EngineError):
    def __init__(self, message: str, n: int | None = None, mode: str | None = None, ell: float | None = None):
        super().__init__(message)
        self.n, self.mode, self.ell = n, mode, ell


class TruncationError(EngineError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    temperature_k: float = 300.0
    rel_tol: float = 1e-9
    y_cut: float = 60.0
    n_cap: int = 10000
    tail_stop: int = 3

    def __post_init__(self) -> None:
        if not self.temperature_k > 0:
            raise ValueError("temperature must be positive")
        if not 0 < self.rel_tol <= 1e-3:
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if not self.y_cut >= 30:
            raise ValueError(f"y_cut must be >= 30, got {self.y_cut}")
        if self.n_cap < 1 or self.tail_stop < 1:
            raise ValueError("n_cap and tail_stop must be >= 1")


@dataclass(frozen=True)
class PressureBreakdown:
    te0: float
    tm0: float
    te_pos: float
    tm_pos: float
    total: float
    normalized: float
    n_used: int
    quad_evals: int
    truncated: bool = False

    def components(self) -> tuple[float, float, float, float]:
        return (self.te0, self.tm0, self.te_pos, self.tm_pos)


def matsubara_energy(n: int, temperature_k: float) -> float:
    """hbar xi_n = 2 pi n k_B T in eV."""
    if n < 0:
        raise ValueError("Matsubara index must be >= 0")
    return 2.0 * math.pi * n * K_B_EV_PER_K * temperature_k


def _check_temperature(stack: FourLayerStack, cfg: EngineConfig) -> None:
    if not math.isclose(stack.gap.temperature_k, cfg.temperature_k, rel_tol=1e-12):
        raise ValueError(
            f"ferrofluid temperature {stack.gap.temperature_k} K differs from engine "
            f"temperature {cfg.temperature_k} K"
        )


def _scale(ell: float, temperature_k: float) -> float:
    # -(k_B T / 2pi) * 1/(4 ell^3), converted to Pa
    return -K_B_EV_PER_K * temperature_k / (2.0 * math.pi) / (4.0 * ell**3) * EV_PER_NM3_TO_PA


def _batch_terms(
    mode: Mode,
    responses: list[StackResponse],
    ell: float,
    b1: float,
    cfg: EngineConfig,
) -> tuple[np.ndarray, int]:
    """Unweighted y-integrals for a list of frequencies, one row each."""
    xi = np.array([r.xi for r in responses])
    eps_m = np.array([r.eps_m for r in responses])
    mu_m = np.array([r.mu_m for r in responses])
    y_min = 2.0 * ell * np.sqrt(eps_m * mu_m) * xi / HBAR_C_EV_NM
    static = responses[0].static
    if static:
        # a single static row: coefficients are constants, k_par = y / 2 ell
        resp = responses[0]

        def integrand(rows, y):
            k = y / (2.0 * ell)
            r1, r2 = reflection_pair(mode, k, resp, b1, kz_m=k)
            rr = r1 * r2 * np.exp(-y)
            return y * y * rr / (1.0 - rr)
    else:
        cols = {
            name: np.array([getattr(r, name) for r in responses])
            for name in ("xi", "eps_a", "eps_m", "mu_m", "eps_b1", "eps_b")
        }

        def integrand(rows, y):
            lo = y_min[rows][:, None]
            resp = StackResponse(**{name: v[rows][:, None] for name, v in cols.items()})
            k = np.sqrt((y - lo) * (y + lo)) / (2.0 * ell)
            r1, r2 = reflection_pair(mode, k, resp, b1)
            rr = r1 * r2 * np.exp(-y)
            return y * y * rr / (1.0 - rr)

    # integrals are O(1) for an ideal reflector; anything below the floor is noise
    res = integrate_rows(integrand, y_min, y_min + cfg.y_cut, cfg.rel_tol, abs_tol=_ABS_FLOOR)
    return res.values, res.evaluations


def _terms(
    mode: Mode, ns: list[int], ell: float, stack: FourLayerStack, cfg: EngineConfig
) -> tuple[np.ndarray, int]:
    """Weighted pressure terms (Pa) for Matsubara orders ``ns`` (all zero or all positive)."""
    responses = [stack_response(stack, matsubara_energy(n, cfg.temperature_k)) for n in ns]
    try:
        values, evals = _batch_terms(mode, responses, ell, stack.b1_nm, cfg)
    except QuadratureError as exc:
        n_bad = ns[exc.rows[0]]
        raise ConvergenceError(
            f"quadrature failed for n={n_bad}, mode={mode.value}, ell={ell} nm",
            n=n_bad, mode=mode.value, ell=ell,
        ) from exc
    weights = np.array([0.5 if n == 0 else 1.0 for n in ns])
    return _scale(ell, cfg.temperature_k) * weights * values, evals


def mode_term(n: int, mode: Mode, ell: float, stack: FourLayerStack, cfg: EngineConfig = EngineConfig()) -> float:
    """Contribution (Pa) of Matsubara order ``n`` and one polarization."""
    if not ell > 0:
        raise ValueError(f"separation must be positive, got {ell}")
    _check_temperature(stack, cfg)
    values, _ = _terms(Mode(mode), [n], ell, stack, cfg)
    return float(values[0])


def casimir_pressure(ell: float, stack: FourLayerStack, cfg: EngineConfig = EngineConfig()) -> PressureBreakdown:
    """Total Lifshitz pressure at separation ``ell`` (nm) with its decomposition."""
    if not ell > 0:
        raise ValueError(f"separation must be positive, got {ell}")
    _check_temperature(stack, cfg)

    te: list[float] = []
    tm: list[float] = []
    evals = 0
    scale_terms: list[float] = []
    quiet = 0
    last_loud = 0
    stopped = False
    n_next = 0
    while not stopped and n_next <= cfg.n_cap:
        if n_next == 0:
            ns = [0]
        else:
            ns = list(range(n_next, min(n_next + _CHUNK, cfg.n_cap + 1)))
        te_vals, e1 = _terms(TE, ns, ell, stack, cfg)
        tm_vals, e2 = _terms(TM, ns, ell, stack, cfg)
        evals += e1 + e2
        for n, t_e, t_m in zip(ns, te_vals.tolist(), tm_vals.tolist()):
            te.append(t_e)
            tm.append(t_m)
            scale_terms.extend((abs(t_e), abs(t_m)))
            bound = cfg.rel_tol * math.fsum(scale_terms)
            if abs(t_e) <= bound and abs(t_m) <= bound:
                quiet += 1
            else:
                quiet = 0
                last_loud = n
            if quiet >= cfg.tail_stop:
                stopped = True
                break
        n_next = ns[-1] + 1

    truncated = not stopped
    if truncated:
        scale = math.fsum(scale_terms)
        if abs(te[-1]) + abs(tm[-1]) > 1e-6 * scale:
            raise TruncationError(
                f"Matsubara sum not converged at n_cap={cfg.n_cap} (ell={ell} nm)"
            )
        n_used = len(te)
    else:
        # the closing run of negligible orders is not counted or summed
        n_used = last_loud + 1

    te0, tm0 = te[0], tm[0]
    te_pos = math.fsum(te[1:n_used])
    tm_pos = math.fsum(tm[1:n_used])
    total = math.fsum((te0, tm0, te_pos, tm_pos))
    normalized = total / abs(perfect_conductor_pressure(ell))
    return PressureBreakdown(te0, tm0, te_pos, tm_pos, total, normalized, n_used, evals, truncated)


def brute_force_pressure(ell: float, stack: FourLayerStack, n_max: int, grid_points: int) -> float:
    """Fixed-grid reference evaluation of the same Matsubara sum (slow; for tests).

    Each transverse-wavevector integral uses the trapezoid rule in ln(k_par)
    on ``grid_points`` geometric nodes spanning [1e-7, 40] / ell, with the
    reflection coefficients written out directly.
    """
    temperature_k = stack.gap.temperature_k
    t = np.linspace(math.log(1e-7 / ell), math.log(40.0 / ell), grid_points)
    k = np.exp(t)
    dt = t[1] - t[0]
    w = np.full(grid_points, dt)
    w[0] = w[-1] = 0.5 * dt

    def tm_coef(e_i, kz_i, e_j, kz_j):
        return (kz_j * e_i - kz_i * e_j) / (kz_j * e_i + kz_i * e_j)

    def te_coef(m_i, kz_i, m_j, kz_j):
        return (kz_j * m_i - kz_i * m_j) / (kz_j * m_i + kz_i * m_j)

    terms = []
    for n in range(n_max + 1):
        xi = 2.0 * math.pi * n * K_B_EV_PER_K * temperature_k
        q2 = (xi / HBAR_C_EV_NM) ** 2
        r = stack_response(stack, xi)
        kz_m = np.sqrt(k * k + r.eps_m * r.mu_m * q2)
        if n == 0:
            mu = r.mu_m
            coef_te = ((1 - mu) / (1 + mu), (1 - mu) / (1 + mu), 0.0)

            def stat(e_i, w_i, e_j, w_j):
                if math.isinf(e_i) and math.isinf(e_j):
                    return (w_i - w_j) / (w_i + w_j)
                if math.isinf(e_i):
                    return 1.0
                if math.isinf(e_j):
                    return -1.0
                return (e_i - e_j) / (e_i + e_j)

            coef_tm = (
                stat(r.eps_a, r.w_a, r.eps_m, 0.0),
                stat(r.eps_b1, r.w_b1, r.eps_m, 0.0),
                stat(r.eps_b, r.w_b, r.eps_b1, r.w_b1),
            )
            kz_b1 = k
            pairs = []
            for r_am, r_b1m, r_bb1 in (coef_te, coef_tm):
                e = np.exp(-2.0 * kz_b1 * stack.b1_nm)
                pairs.append((r_am, (r_b1m + r_bb1 * e) / (1 + r_b1m * r_bb1 * e)))
            weight = 0.5
        else:
            kz_a = np.sqrt(k * k + r.eps_a * q2)
            kz_b1 = np.sqrt(k * k + r.eps_b1 * q2)
            kz_b = np.sqrt(k * k + r.eps_b * q2)
            e = np.exp(-2.0 * kz_b1 * stack.b1_nm)
            pairs = []
            for coef, (pa, pm, pb1, pb) in (
                (te_coef, (1.0, 1.0, 1.0, 1.0)),
                (tm_coef, (r.eps_a, r.eps_m, r.eps_b1, r.eps_b)),
            ):
                r_am = coef(pa, kz_a, pm, kz_m)
                r_b1m = coef(pb1, kz_b1, pm, kz_m)
                r_bb1 = coef(pb, kz_b, pb1, kz_b1)
                pairs.append((r_am, (r_b1m + r_bb1 * e) / (1 + r_b1m * r_bb1 * e)))
            weight = 1.0
        damp = np.exp(-2.0 * kz_m * ell)
        for r1, r2 in pairs:
            rr = r1 * r2 * damp
            g = k * 2.0 * kz_m * rr / (1.0 - rr)
            terms.append(weight * float(np.dot(g * k, w)))
    return -K_B_EV_PER_K * temperature_k / (2.0 * math.pi) * math.fsum(terms) * EV_PER_NM3_TO_PA
