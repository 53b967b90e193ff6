"""Pressure curves, equilibrium search and parameter sweeps."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .constants import perfect_conductor_pressure
from .engine import EngineConfig, EngineError, PressureBreakdown, casimir_pressure
from .materials import MaterialRecord
from .stack import FourLayerStack

__all__ = [
    "perfect_conductor_pressure",
    "CurvePoint",
    "CurveError",
    "DegenerateRootError",
    "Stability",
    "Equilibrium",
    "pressure_curve",
    "find_equilibria",
    "SweepAxis",
    "SweepEntry",
    "sweep",
    "default_ells",
]


def default_ells(count: int = 60, lo: float = 10.0, hi: float = 1000.0) -> list[float]:
    """Log-spaced separations (nm) used when no grid is given."""
    return [float(x) for x in np.geomspace(lo, hi, count)]


@dataclass(frozen=True)
class CurvePoint:
    ell: float
    breakdown: PressureBreakdown


class CurveError(EngineError):
    """An engine failure at a specific point of a curve."""

    def __init__(self, message: str, ell: float):
        super().__init__(message)
        self.ell = ell


class DegenerateRootError(EngineError):
    """Both ends of a bracket are zero within the engine tolerance."""


class Stability(str, enum.Enum):
    STABLE = "STABLE"
    UNSTABLE = "UNSTABLE"


@dataclass(frozen=True)
class Equilibrium:
    ell_star: float
    kind: Stability
    bracket: tuple[float, float]
    residual: float
    iterations: int

    def to_json(self) -> dict:
        return {
            "ell_star_nm": self.ell_star,
            "kind": self.kind.value,
            "bracket_nm": list(self.bracket),
            "residual_pa": self.residual,
            "iterations": self.iterations,
        }


def pressure_curve(
    ells: Sequence[float], stack: FourLayerStack, cfg: EngineConfig = EngineConfig()
) -> list[CurvePoint]:
    """Evaluate the pressure breakdown at each separation in ``ells`` (nm)."""
    ells = [float(x) for x in ells]
    if any(x <= 0 for x in ells):
        raise ValueError("separations must be positive")
    if any(b <= a for a, b in zip(ells, ells[1:])):
        raise ValueError("separations must be strictly increasing")
    curve = []
    for ell in ells:
        try:
            curve.append(CurvePoint(ell, casimir_pressure(ell, stack, cfg)))
        except EngineError as exc:
            raise CurveError(f"at ell={ell!r} nm: {exc}", ell) from exc
    return curve


def _refine(
    pressure: Callable[[float], float],
    lo: float,
    p_lo: float,
    hi: float,
    p_hi: float,
    tol_nm: float,
    zero_tol: Callable[[float], float],
) -> tuple[float, float, float, float, int]:
    # only the grid bracket is tested; refined ends approach zero by design
    if abs(p_lo) <= zero_tol(lo) and abs(p_hi) <= zero_tol(hi):
        raise DegenerateRootError(
            f"pressure vanishes at both ends of [{lo}, {hi}] nm; root is not isolated"
        )
    iterations = 0
    while hi - lo > tol_nm:
        mid = 0.5 * (lo + hi)
        p_mid = pressure(mid)
        iterations += 1
        if p_mid == 0.0:
            return mid, p_mid, mid, p_mid, iterations
        if (p_mid > 0) == (p_lo > 0):
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid
    return lo, p_lo, hi, p_hi, iterations


def find_equilibria(
    curve: Sequence[CurvePoint],
    stack: FourLayerStack | None = None,
    cfg: EngineConfig = EngineConfig(),
    refine_tol_nm: float = 0.01,
    pressure: Callable[[float], float] | None = None,
) -> list[Equilibrium]:
    """Locate zeros of the total pressure between adjacent curve points.

    Each sign change is narrowed by bisection until the bracket is at most
    ``refine_tol_nm`` wide. A change from repulsion (+) to attraction (-)
    with growing separation is a STABLE equilibrium. ``pressure`` replaces
    the engine, which is handy for synthetic curves.
    """
    if len(curve) < 2:
        raise ValueError("need at least two curve points")
    if not refine_tol_nm > 0:
        raise ValueError("refine_tol_nm must be positive")
    if pressure is None:
        if stack is None:
            raise ValueError("either a stack or a pressure function is required")

        def pressure(ell: float) -> float:
            try:
                return casimir_pressure(ell, stack, cfg).total
            except EngineError as exc:
                raise CurveError(f"at ell={ell!r} nm: {exc}", ell) from exc

    def zero_tol(ell: float) -> float:
        return cfg.rel_tol * abs(perfect_conductor_pressure(ell))

    ells = [p.ell for p in curve]
    totals = [p.breakdown.total for p in curve]
    found: list[Equilibrium] = []
    for i in range(len(curve) - 1):
        p0, p1 = totals[i], totals[i + 1]
        if p0 == 0.0:
            # an exact zero on the grid is a root if its neighbours disagree
            if 0 < i and totals[i - 1] * p1 < 0:
                kind = Stability.STABLE if totals[i - 1] > 0 else Stability.UNSTABLE
                found.append(Equilibrium(ells[i], kind, (ells[i], ells[i]), 0.0, 0))
            continue
        if p1 == 0.0 or (p0 > 0) == (p1 > 0):
            continue
        kind = Stability.STABLE if p0 > 0 else Stability.UNSTABLE
        lo, p_lo, hi, p_hi, its = _refine(pressure, ells[i], p0, ells[i + 1], p1, refine_tol_nm, zero_tol)
        if lo == hi:
            ell_star, residual = lo, abs(p_lo)
        else:
            # secant estimate inside the final bracket
            ell_star = lo + (hi - lo) * p_lo / (p_lo - p_hi)
            ell_star = min(max(ell_star, lo), hi)
            residual = abs(pressure(ell_star))
        found.append(Equilibrium(ell_star, kind, (lo, hi), residual, its))
    return sorted(found, key=lambda e: e.ell_star)


class SweepAxis(str, enum.Enum):
    METAL = "METAL"
    B1_THICKNESS = "B1_THICKNESS"
    PHI = "PHI"
    DIAMETER = "DIAMETER"
    SOLVENT = "SOLVENT"


@dataclass(frozen=True)
class SweepEntry:
    value: object
    stack: FourLayerStack
    curve: list[CurvePoint]
    equilibria: list[Equilibrium]


def _variant(axis: SweepAxis, value, base: FourLayerStack, db: Mapping[str, MaterialRecord] | None):
    if axis in (SweepAxis.METAL, SweepAxis.SOLVENT):
        if db is None:
            raise ValueError(f"a material database is needed to sweep {axis.value}")
        record = db[value]
        if axis == SweepAxis.METAL:
            return dataclasses.replace(base, substrate=record)
        return dataclasses.replace(base, gap=dataclasses.replace(base.gap, solvent=record))
    value = float(value)
    if axis == SweepAxis.B1_THICKNESS:
        return dataclasses.replace(base, b1_nm=value)
    if axis == SweepAxis.PHI:
        return dataclasses.replace(base, gap=dataclasses.replace(base.gap, phi=value))
    return dataclasses.replace(base, gap=dataclasses.replace(base.gap, diameter_nm=value))


def sweep(
    axis: SweepAxis | str,
    values: Sequence,
    base_stack: FourLayerStack,
    ells: Sequence[float] | None = None,
    cfg: EngineConfig = EngineConfig(),
    db: Mapping[str, MaterialRecord] | None = None,
    refine_tol_nm: float = 0.01,
) -> list[SweepEntry]:
    """One curve and its equilibria per value of ``axis``, in input order.

    Every variant is built (and every name resolved) before any pressure is
    computed, so a bad value fails fast.
    """
    axis = SweepAxis(axis)
    ells = default_ells() if ells is None else list(ells)
    stacks = [_variant(axis, v, base_stack, db) for v in values]
    out = []
    for value, stack in zip(values, stacks):
        curve = pressure_curve(ells, stack, cfg)
        eq = find_equilibria(curve, stack, cfg, refine_tol_nm) if len(curve) >= 2 else []
        out.append(SweepEntry(value, stack, curve, eq))
    return out

