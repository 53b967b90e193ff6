"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict (with the measured value and
the elapsed time) that is printed in the pytest terminal summary.
"""

from __future__ import annotations

import dataclasses
import math
import time

import numpy as np
import pytest

from conftest import const, constant_stack, drude, make_default_stack, record_acceptance
from ferrocasimir import asymptotics
from ferrocasimir.analysis import Stability, default_ells, find_equilibria, pressure_curve
from ferrocasimir.asymptotics import SignRegime, StaticTriple, polylog, sign_regime
from ferrocasimir.cli import main
from ferrocasimir.constants import perfect_conductor_pressure
from ferrocasimir.engine import EngineConfig, brute_force_pressure, casimir_pressure, mode_term
from ferrocasimir.materials import (
    Drude,
    FerrofluidSpec,
    MaterialRecord,
    Oscillators,
    eval_permittivity,
    ferrofluid_permittivity,
    ms_for_permeability,
)
from ferrocasimir.stack import TE, TM, FourLayerStack


class Verdict:
    def __init__(self, number: int, title: str, limit_s: float):
        self.number, self.title, self.limit_s = number, title, limit_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        self.detail = ""
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        ok = exc_type is None and elapsed < self.limit_s
        why = self.detail if exc_type is None else f"{exc_type.__name__}: {exc}".splitlines()[0]
        record_acceptance(
            f"criterion {self.number}: {'PASS' if ok else 'FAIL'} {self.title} | {why} | {elapsed:.2f}s (limit {self.limit_s:g}s)"
        )
        if exc_type is None:
            assert elapsed < self.limit_s, f"criterion {self.number} took {elapsed:.1f}s"
        return False


def test_criterion_1_polylog_gate():
    with Verdict(1, "polylog gate", 1.0) as v:
        e3 = abs(polylog(3, 1.0) - 1.2020569032)
        e2 = abs(polylog(2, -1.0) + math.pi**2 / 12)
        v.detail = f"|Li3(1)-zeta3|={e3:.1e}, |Li2(-1)+pi^2/12|={e2:.1e}"
        assert e3 < 1e-10
        assert e2 < 1e-12


def test_criterion_2_ideal_limit():
    with Verdict(2, "ideal-limit gate", 10.0) as v:
        pm = perfect_conductor_pressure(100.0)
        metal = drude("near-ideal", 1.0e4, 1.0e-6)
        stack = FourLayerStack(metal, FerrofluidSpec.pure(const("vacuum", 1.0)), metal, 10.0, metal)
        norm = casimir_pressure(50.0, stack).normalized
        v.detail = f"P_m(100nm)={pm:.4f} Pa, normalized(50nm)={norm:.5f}"
        assert abs(pm / -13.002 - 1.0) < 1e-3
        assert -1.00 <= norm <= -0.98


def test_criterion_3_te_thermal_oracle(db):
    with Verdict(3, "TE n=0 vs closed form", 10.0) as v:
        worst = 0.0
        for mu in (1.1, 2.0, 5.0):
            ms = ms_for_permeability(mu, 0.05, 20.0, 300.0)
            stack = make_default_stack(db, ms=ms)
            assert stack.gap.mu0 == pytest.approx(mu, rel=1e-12)
            for ell in (10.0, 100.0, 1000.0):
                got = mode_term(0, TE, ell, stack)
                want = asymptotics.te_thermal(ell, stack.gap.mu0, 300.0)
                worst = max(worst, abs(got / want - 1.0))
        v.detail = f"max rel err {worst:.1e}"
        assert worst < 1e-6


def test_criterion_4_tm_limit_oracles():
    with Verdict(4, "TM n=0 small/large-gap limits", 10.0) as v:
        worst_small = worst_large = 0.0
        for triple in ((2.4, 2.2, 2.1), (2.4, 3.0, 2.1)):
            st = StaticTriple(*triple)
            ell = 10.0
            got = mode_term(0, TM, ell, constant_stack(*triple, b1=1e3 * ell))
            worst_small = max(worst_small, abs(got / asymptotics.tm_thermal_small_gap(ell, st) - 1))
            ell = 1.0e4
            got = mode_term(0, TM, ell, constant_stack(*triple, b1=1e-4 * ell))
            want = asymptotics.tm_thermal_large_gap(ell, 1e-4 * ell, st)
            worst_large = max(worst_large, abs(got / want - 1))
        v.detail = f"small-gap {worst_small:.1e}, large-gap {worst_large:.1e}"
        assert worst_small < 1e-3
        assert worst_large < 1e-3


def test_criterion_5_sign_regimes():
    with Verdict(5, "sign-regime table", 30.0) as v:
        expected = {
            SignRegime.ATTRACT_SMALL_REPEL_LARGE: (-1.0, 1.0),
            SignRegime.REPEL_SMALL_ATTRACT_LARGE: (1.0, -1.0),
            SignRegime.ALWAYS_ATTRACT: (-1.0, -1.0),
        }
        b1 = 100.0
        cells = 0
        for triple in ((2.4, 3.0, 2.1), (2.4, 2.2, 2.1), (2.4, 1.8, 2.1)):
            want = expected[sign_regime(StaticTriple(*triple))]
            stack = constant_stack(*triple, b1=b1)
            got = tuple(math.copysign(1.0, mode_term(0, TM, f * b1, stack)) for f in (1e-2, 1e2))
            assert got == want, triple
            cells += 2
        v.detail = f"{cells}/6 cells match"


def _random_stack(seed: int) -> FourLayerStack:
    rng = np.random.default_rng(seed)

    def osc(name):
        terms = [(rng.uniform(0.02, 0.3), rng.uniform(0.05, 0.5)), (rng.uniform(0.5, 2.0), rng.uniform(5.0, 15.0))]
        return MaterialRecord(name, Oscillators(tuple(terms)), "random fixture")

    metal = MaterialRecord("metal", Drude(rng.uniform(5.0, 12.0), rng.uniform(0.01, 0.2)), "random fixture")
    gap = FerrofluidSpec(
        osc("solvent"), osc("particle"), rng.uniform(0.0, 0.1), rng.uniform(5.0, 20.0), rng.uniform(1e5, 4e5), 300.0
    )
    return FourLayerStack(osc("a"), gap, osc("b1"), rng.uniform(2.0, 40.0), metal)


def test_criterion_6_brute_force_equivalence():
    with Verdict(6, "brute-force equivalence", 300.0) as v:
        worst = 0.0
        for seed in (11, 23, 37, 41, 59):
            stack = _random_stack(seed)
            for ell in (20.0, 100.0, 500.0):
                fast = casimir_pressure(ell, stack)
                slow = brute_force_pressure(ell, stack, fast.n_used - 1, 6001)
                worst = max(worst, abs(fast.total / slow - 1.0))
        v.detail = f"max rel diff {worst:.1e} over 15 cases"
        assert worst < 1e-6


def test_criterion_7_te0_invariance(db):
    with Verdict(7, "te0 independent of b1 and metal", 60.0) as v:
        metals = ("gold", "silver", "aluminum", "lithium")
        for ell in (10.0, 100.0, 1000.0):
            values = {
                casimir_pressure(ell, make_default_stack(db, b1=b1, metal=m)).te0
                for b1 in (5.0, 10.0, 15.0, 20.0)
                for m in metals
            }
            assert len(values) == 1, (ell, values)
        v.detail = "16 stacks bit-identical at each of 3 separations"


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(np.abs(y)), 1)[0])


def test_criterion_8_scaling_exponents(db):
    with Verdict(8, "te0 scaling in phi, D and ell", 60.0) as v:
        ms = 1.0e4  # keeps mu - 1 of order 1e-3
        base = make_default_stack(db, ms=ms)
        phis = np.geomspace(0.005, 0.05, 6)
        te_phi = [mode_term(0, TE, 100.0, dataclasses.replace(base, gap=dataclasses.replace(base.gap, phi=p)))
                  for p in phis]
        ds = np.geomspace(2.0, 20.0, 6)
        te_d = [mode_term(0, TE, 100.0, dataclasses.replace(base, gap=dataclasses.replace(base.gap, diameter_nm=d)))
                for d in ds]
        s_phi, s_d = _slope(phis, te_phi), _slope(ds, te_d)
        stack = make_default_stack(db)
        scaled = [mode_term(0, TE, ell, stack) * ell**3 for ell in np.geomspace(10.0, 1000.0, 9)]
        spread = max(abs(s / scaled[0] - 1.0) for s in scaled)
        v.detail = f"slope(phi)={s_phi:.4f}, slope(D)={s_d:.4f}, te0*ell^3 spread {spread:.1e}"
        assert abs(s_phi - 2.0) <= 0.01
        assert abs(s_d - 6.0) <= 0.03
        assert spread < 1e-9


def _static_triple(db, stack):
    return StaticTriple(
        eval_permittivity(stack.a.model, 0.0),
        ferrofluid_permittivity(stack.gap, 0.0),
        eval_permittivity(stack.coating.model, 0.0),
    )


def test_criterion_9_trapping(db):
    with Verdict(9, "trapping with the shipped database", 120.0) as v:
        stack = make_default_stack(db)
        curve = pressure_curve(default_ells(), stack)
        eqs = find_equilibria(curve, stack)
        stable = [e.ell_star for e in eqs if e.kind is Stability.STABLE and 10.0 <= e.ell_star <= 300.0]
        assert stable, eqs
        toluene = sign_regime(_static_triple(db, stack))
        assert toluene is SignRegime.ATTRACT_SMALL_REPEL_LARGE
        patterns = {}
        for solvent in ("toluene", "cyclohexane", "n-octane"):
            st = make_default_stack(db, solvent=solvent)
            regime = sign_regime(_static_triple(db, st))
            b1 = st.b1_nm
            signs = tuple(math.copysign(1.0, mode_term(0, TM, f * b1, st)) for f in (1e-2, 1e2))
            patterns[solvent] = (regime, signs)
        for solvent in ("cyclohexane", "n-octane"):
            regime, signs = patterns[solvent]
            assert regime is SignRegime.REPEL_SMALL_ATTRACT_LARGE
            assert signs == (1.0, -1.0)
        assert patterns["toluene"][1] == (-1.0, 1.0)
        v.detail = (
            f"stable ell*={', '.join(f'{x:.1f}' for x in stable)} nm (Ms {stack.gap.ms:.2e} A/m); "
            f"TM n=0 small/large-gap signs: toluene {patterns['toluene'][1]}, "
            f"cyclohexane {patterns['cyclohexane'][1]}, n-octane {patterns['n-octane'][1]}"
        )


def test_criterion_10_determinism(tmp_path):
    with Verdict(10, "byte-identical curve output", 60.0) as v:
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["curve", "--out", str(a)]) == 0
        assert main(["curve", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        v.detail = f"{len(a.read_bytes())} bytes identical"
