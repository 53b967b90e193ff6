"""Four-layer geometry A | gap m | coating B1 | substrate B and its reflection.

Interface coefficients follow the i/j convention

    R_ij^TM = (kz_j eps_i - kz_i eps_j) / (kz_j eps_i + kz_i eps_j)
    R_ij^TE = (kz_j mu_i  - kz_i mu_j)  / (kz_j mu_i  + kz_i mu_j)

so that R_Am and R_B1m describe waves in the gap striking A and B1 and
R_BB1 a wave inside the coating striking the substrate. All functions accept
numpy arrays for ``k_par`` and broadcast.

At xi = 0 every kz equals k_par and a Drude layer is an ideal static metal
(eps -> infinity): TM coefficients against it are +-1, TE coefficients
depend on the permeabilities only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .constants import HBAR_C_EV_NM
from .materials import (
    FerrofluidSpec,
    MaterialRecord,
    MaterialValidationError,
    eval_permittivity,
    ferrofluid_permittivity,
    is_metal,
)


class Mode(str, enum.Enum):
    TE = "TE"
    TM = "TM"


TE, TM = Mode.TE, Mode.TM


@dataclass(frozen=True)
class LayerOptics:
    eps: float
    mu: float
    kz: float | np.ndarray
    ideal_metal_static: bool = False
    # omega_p^2/gamma of a Drude layer; only used when two static metals touch.
    static_weight: float = 0.0


@dataclass(frozen=True)
class FourLayerStack:
    a: MaterialRecord
    gap: FerrofluidSpec
    coating: MaterialRecord
    b1_nm: float
    substrate: MaterialRecord

    def __post_init__(self) -> None:
        if not self.b1_nm > 0:
            raise MaterialValidationError(f"coating thickness must be positive, got {self.b1_nm}")

    def describe(self) -> dict:
        return {
            "a": self.a.name,
            "ferrofluid": self.gap.to_json(),
            "coating": self.coating.name,
            "b1_nm": self.b1_nm,
            "substrate": self.substrate.name,
        }


def kz(k_par, eps, mu, xi):
    """z-wavevector sqrt(k_par^2 + eps mu (xi/hbar c)^2) in nm^-1."""
    q = xi / HBAR_C_EV_NM
    return np.sqrt(np.square(k_par) + eps * mu * q * q)


def _static_tm(eps_i, w_i, eps_j, w_j):
    inf_i, inf_j = np.isinf(eps_i), np.isinf(eps_j)
    if inf_i and inf_j:
        return (w_i - w_j) / (w_i + w_j)
    if inf_i:
        return 1.0
    if inf_j:
        return -1.0
    return (eps_i - eps_j) / (eps_i + eps_j)


def _dynamic(mode, eps_i, mu_i, kz_i, eps_j, mu_j, kz_j):
    if mode == TM:
        a, b = kz_j * eps_i, kz_i * eps_j
    else:
        a, b = kz_j * mu_i, kz_i * mu_j
    return (a - b) / (a + b)


def fresnel(mode: Mode, side_i: LayerOptics, side_j: LayerOptics):
    """Single-interface coefficient R_ij for ``mode``."""
    mode = Mode(mode)
    if side_i.ideal_metal_static or side_j.ideal_metal_static:
        if mode == TE:
            return (side_i.mu - side_j.mu) / (side_i.mu + side_j.mu)
        eps_i = np.inf if side_i.ideal_metal_static else side_i.eps
        eps_j = np.inf if side_j.ideal_metal_static else side_j.eps
        return _static_tm(eps_i, side_i.static_weight, eps_j, side_j.static_weight)
    return _dynamic(mode, side_i.eps, side_i.mu, side_i.kz, side_j.eps, side_j.mu, side_j.kz)


def coated_reflection(r_near, r_far, kz_layer, thickness):
    """Compose two interfaces separated by a film of ``thickness`` (nm)."""
    e = np.exp(-2.0 * kz_layer * thickness)
    return (r_near + r_far * e) / (1.0 + r_near * r_far * e)


@dataclass(frozen=True)
class StackResponse:
    """Layer permittivities/permeabilities of a stack at one frequency.

    Metals are ``inf`` at xi = 0 with their Drude static weight alongside.
    """

    xi: float
    eps_a: float
    eps_m: float
    mu_m: float
    eps_b1: float
    eps_b: float
    w_a: float = 0.0
    w_b1: float = 0.0
    w_b: float = 0.0

    @property
    def static(self) -> bool:
        return np.ndim(self.xi) == 0 and self.xi == 0


def _layer_eps(record: MaterialRecord, xi: float) -> tuple[float, float]:
    if xi == 0 and is_metal(record.model):
        return np.inf, record.model.static_weight
    return eval_permittivity(record.model, xi), 0.0


def stack_response(stack: FourLayerStack, xi: float) -> StackResponse:
    """Evaluate every layer of ``stack`` at photon energy ``xi`` (eV).

    The gap permeability differs from 1 only for the static term.
    """
    eps_a, w_a = _layer_eps(stack.a, xi)
    eps_b1, w_b1 = _layer_eps(stack.coating, xi)
    eps_b, w_b = _layer_eps(stack.substrate, xi)
    eps_m = ferrofluid_permittivity(stack.gap, xi)
    mu_m = stack.gap.mu0 if xi == 0 else 1.0
    return StackResponse(xi, eps_a, eps_m, mu_m, eps_b1, eps_b, w_a, w_b1, w_b)


def interface_coefficients(mode: Mode, k_par, resp: StackResponse, kz_m=None):
    """Return (R_Am, R_B1m, R_BB1, kz_B1) at ``k_par`` for one frequency.

    ``kz_m`` may be supplied when the caller already knows it exactly.
    """
    mode = Mode(mode)
    if resp.static:
        if mode == TE:
            # all permeabilities except the gap's are 1
            r_am = (1.0 - resp.mu_m) / (1.0 + resp.mu_m)
            r_b1m = r_am
            r_bb1 = 0.0
        else:
            r_am = _static_tm(resp.eps_a, resp.w_a, resp.eps_m, 0.0)
            r_b1m = _static_tm(resp.eps_b1, resp.w_b1, resp.eps_m, 0.0)
            r_bb1 = _static_tm(resp.eps_b, resp.w_b, resp.eps_b1, resp.w_b1)
        return r_am, r_b1m, r_bb1, np.asarray(k_par, dtype=float)

    xi = resp.xi
    if kz_m is None:
        kz_m = kz(k_par, resp.eps_m, resp.mu_m, xi)
    kz_a = kz(k_par, resp.eps_a, 1.0, xi)
    kz_b1 = kz(k_par, resp.eps_b1, 1.0, xi)
    kz_b = kz(k_par, resp.eps_b, 1.0, xi)
    r_am = _dynamic(mode, resp.eps_a, 1.0, kz_a, resp.eps_m, resp.mu_m, kz_m)
    r_b1m = _dynamic(mode, resp.eps_b1, 1.0, kz_b1, resp.eps_m, resp.mu_m, kz_m)
    r_bb1 = _dynamic(mode, resp.eps_b, 1.0, kz_b, resp.eps_b1, 1.0, kz_b1)
    return r_am, r_b1m, r_bb1, kz_b1


def reflection_pair(mode: Mode, k_par, resp: StackResponse, b1_nm: float, kz_m=None):
    """(R_Am, R_eff) entering the Lifshitz integrand."""
    r_am, r_b1m, r_bb1, kz_b1 = interface_coefficients(mode, k_par, resp, kz_m)
    return r_am, coated_reflection(r_b1m, r_bb1, kz_b1, b1_nm)


def effective_reflection(mode: Mode, k_par, xi: float, stack: FourLayerStack):
    """Reflection of the coated substrate B1+B seen from the gap."""
    return reflection_pair(mode, k_par, stack_response(stack, xi), stack.b1_nm)[1]


def gap_reflection_Am(mode: Mode, k_par, xi: float, stack: FourLayerStack):
    """Reflection at the A/m interface seen from the gap."""
    r_am = interface_coefficients(mode, k_par, stack_response(stack, xi))[0]
    return np.broadcast_to(r_am, np.shape(k_par)) if np.ndim(k_par) else r_am


def layer_optics(stack: FourLayerStack, k_par: float, xi: float) -> dict[str, LayerOptics]:
    """Per-layer optics (eps, mu, kz) keyed 'A', 'm', 'B1', 'B'."""
    resp = stack_response(stack, xi)
    out = {}
    for key, eps, mu, w in (
        ("A", resp.eps_a, 1.0, resp.w_a),
        ("m", resp.eps_m, resp.mu_m, 0.0),
        ("B1", resp.eps_b1, 1.0, resp.w_b1),
        ("B", resp.eps_b, 1.0, resp.w_b),
    ):
        ideal = bool(np.isinf(eps))
        out[key] = LayerOptics(
            eps=eps,
            mu=mu,
            kz=k_par if ideal else kz(k_par, eps, mu, xi),
            ideal_metal_static=ideal,
            static_weight=w,
        )
    return out
