from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import const
from ferrocasimir.materials import (
    Constant,
    Drude,
    FerrofluidSpec,
    MaterialParseError,
    MaterialRecord,
    MaterialValidationError,
    Oscillators,
    StaticMetalError,
    Table,
    Vacuum,
    eval_permittivity,
    ferrofluid_permittivity,
    load_material_db,
    mix_rayleigh,
    ms_for_permeability,
    static_permeability,
)

# Gaussian-unit evaluation, mu = 1 + 4 pi phi Ms^2 (pi D^3/6) / (3 k_B T),
# done in mpmath with Ms in emu/cm^3 and D in cm.
MU0_BULK_MS = 5.880059984695846  # phi=0.05, Ms=4.8e5 A/m, D=20 nm, T=300 K
MU0_SHIPPED_MS = 2.906273431521815  # same with Ms=3.0e5 A/m


def test_vacuum_is_one():
    assert eval_permittivity(Vacuum(), 3.7) == 1.0


def test_drude_hand_value():
    assert eval_permittivity(Drude(9.0, 0.03), 9.0) == pytest.approx(1.99668, abs=5e-6)


def test_oscillator_hand_value():
    assert eval_permittivity(Oscillators(((1.0, 1.0),)), 1.0) == 1.5


def test_drude_static_raises():
    with pytest.raises(StaticMetalError, match="static metal permittivity is infinite"):
        eval_permittivity(Drude(9.0, 0.03), 0.0)


def test_negative_frequency_rejected():
    with pytest.raises(ValueError):
        eval_permittivity(Constant(2.0), -1.0)


def test_table_hits_nodes_and_clamps():
    t = Table((0.0, 1.0, 10.0), (5.0, 3.0, 1.5))
    assert eval_permittivity(t, 1.0) == pytest.approx(3.0, rel=1e-14)
    diag: list = []
    assert eval_permittivity(t, 50.0, diag) == pytest.approx(1.5)
    assert diag == [("extrapolated", 50.0)]
    diag.clear()
    eval_permittivity(t, 5.0, diag)
    assert diag == []


def test_table_is_log_linear_in_eps_minus_one():
    t = Table((1.0, 3.0), (5.0, 2.0))
    # ln(eps - 1) is linear in xi: halfway gives the geometric mean of 4 and 1
    assert eval_permittivity(t, 2.0) == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("xi, eps", [((1.0, 0.5), (2.0, 2.0)), ((0.0, 1.0), (2.0, 0.5)), ((0.0,), (2.0,)), ((0.0, 1.0), (2.0,))])
def test_table_validation(xi, eps):
    with pytest.raises(MaterialValidationError):
        Table(xi, eps)


@given(st.floats(0.0, 200.0))
def test_oscillators_are_monotone_and_above_one(xi):
    m = Oscillators(((0.5, 0.1), (1.2, 8.0)))
    assert 1.0 <= eval_permittivity(m, xi) <= m.static_value
    assert eval_permittivity(m, xi) >= eval_permittivity(m, xi + 1.0)


def test_mix_rayleigh_examples():
    assert mix_rayleigh(2.0, 5.0, 0.0) == 2.0
    assert mix_rayleigh(2.0, 2.0, 0.3) == 2.0
    assert mix_rayleigh(2.0, 5.0, 0.05) == pytest.approx(2.0 * (1 + 2 * 0.05 / 3) / (1 - 0.05 / 3), rel=1e-15)
    assert mix_rayleigh(2.0, 5.0, 0.05) == pytest.approx(2.10169, abs=1e-5)


@given(st.floats(1.0, 10.0), st.floats(1.0, 50.0), st.floats(0.0, 0.3))
def test_mix_rayleigh_lies_between_constituents(eps_s, eps_p, phi):
    eps = mix_rayleigh(eps_s, eps_p, phi)
    lo, hi = min(eps_s, eps_p), max(eps_s, eps_p)
    assert lo - 1e-12 <= eps <= hi + 1e-12


def test_static_permeability_examples():
    assert static_permeability(0.0, 4.8e5, 20.0, 300.0) == 1.0
    assert static_permeability(0.05, 4.8e5, 20.0, 300.0) == pytest.approx(MU0_BULK_MS, rel=1e-8)
    assert static_permeability(0.05, 3.0e5, 20.0, 300.0) == pytest.approx(MU0_SHIPPED_MS, rel=1e-8)


@given(st.floats(1e-4, 0.5), st.floats(1e3, 6e5), st.floats(1.0, 40.0))
def test_static_permeability_scaling(phi, ms, d):
    x = static_permeability(phi, ms, d, 300.0) - 1.0
    assert static_permeability(phi, ms, 2 * d, 300.0) - 1.0 == pytest.approx(8 * x, rel=1e-9)
    assert static_permeability(2 * phi, ms, d, 300.0) - 1.0 == pytest.approx(2 * x, rel=1e-9)


@given(st.floats(1.01, 20.0), st.floats(1e-3, 0.3), st.floats(2.0, 40.0))
def test_ms_for_permeability_round_trip(mu, phi, d):
    assert static_permeability(phi, ms_for_permeability(mu, phi, d, 300.0), d, 300.0) == pytest.approx(mu, rel=1e-12)


def test_empty_database():
    db = load_material_db("[]")
    assert len(db) == 0
    assert len(db.sha256) == 64


def test_duplicate_names_rejected():
    rec = {"name": "x", "model": {"type": "vacuum"}, "provenance": "p"}
    with pytest.raises(MaterialValidationError, match="duplicate"):
        load_material_db(json.dumps([rec, rec]))


def test_parse_error_reports_position():
    with pytest.raises(MaterialParseError, match="line 2"):
        load_material_db('[\n{"name": }]')


@pytest.mark.parametrize(
    "rec, match",
    [
        ({"name": "x", "model": {"type": "laser"}, "provenance": "p"}, "unknown model"),
        ({"name": "x", "model": {"type": "drude", "omega_p_ev": 9}, "provenance": "p"}, "gamma_ev"),
        ({"name": "x", "model": {"type": "constant", "eps": "2"}, "provenance": "p"}, "number"),
        ({"model": {"type": "vacuum"}, "provenance": "p"}, "name"),
    ],
)
def test_bad_records(rec, match):
    with pytest.raises((MaterialParseError, MaterialValidationError), match=match):
        load_material_db(json.dumps([rec]))


def test_invalid_values_name_the_record():
    rec = {"name": "bad", "model": {"type": "drude", "omega_p_ev": -1, "gamma_ev": 0.1}, "provenance": "p"}
    with pytest.raises(MaterialValidationError, match="'bad'"):
        load_material_db(json.dumps([rec]))


def test_shipped_database(db):
    expected = {"gold": (9.0, 0.03), "silver": (8.9, 0.02), "aluminum": (12.04, 0.13), "lithium": (6.45, 0.13)}
    for name, (wp, g) in expected.items():
        assert db[name].model == Drude(wp, g)
    for rec in db.values():
        assert rec.provenance.strip()
    assert db["magnetite"].ms_a_per_m == 3.0e5
    with pytest.raises(KeyError, match="unobtainium"):
        db["unobtainium"]


def test_shipped_solvent_statics(db):
    # static values are the squared optical indices
    for name, n0 in (("toluene", 1.4969), ("benzene", 1.5011), ("cyclohexane", 1.4262), ("n-octane", 1.3974)):
        assert eval_permittivity(db[name].model, 0.0) == pytest.approx(n0**2, abs=5e-4)
    assert eval_permittivity(db["polystyrene"].model, 0.0) == pytest.approx(2.4)
    assert eval_permittivity(db["teflon"].model, 0.0) == pytest.approx(2.1)


def test_ferrofluid_phi_zero_is_solvent(db):
    spec = FerrofluidSpec(db["toluene"], db["magnetite"], 0.0, 20.0, 3e5)
    for xi in (0.0, 0.3, 7.0):
        assert ferrofluid_permittivity(spec, xi) == eval_permittivity(db["toluene"].model, xi)
    assert spec.mu0 == 1.0


def test_ferrofluid_constant_constituents():
    spec = FerrofluidSpec(const("s", 2.0), const("p", 5.0), 0.05, 20.0, 0.0)
    for xi in (0.0, 1.0, 30.0):
        assert ferrofluid_permittivity(spec, xi) == pytest.approx(2.10169, abs=1e-5)


def test_ferrofluid_concentration_ordering(db):
    lo = FerrofluidSpec(db["toluene"], db["magnetite"], 0.01, 20.0, 3e5)
    hi = FerrofluidSpec(db["toluene"], db["magnetite"], 0.05, 20.0, 3e5)
    assert ferrofluid_permittivity(hi, 0.1) > ferrofluid_permittivity(lo, 0.1)


@pytest.mark.parametrize(
    "kw",
    [dict(phi=-0.1), dict(phi=1.0), dict(diameter_nm=0.0), dict(ms=-1.0), dict(temperature_k=0.0)],
)
def test_ferrofluid_invariants(kw):
    base = dict(solvent=const("s", 2.0), particle=const("p", 5.0), phi=0.05, diameter_nm=20.0, ms=1e5)
    with pytest.raises(MaterialValidationError):
        FerrofluidSpec(**{**base, **kw})


def test_ferrofluid_json_round_trip(db):
    spec = FerrofluidSpec.from_json({"solvent": "toluene", "particle": "magnetite", "phi": 0.05, "diameter_nm": 20}, db)
    assert spec.ms == db["magnetite"].ms_a_per_m
    assert FerrofluidSpec.from_json(spec.to_json(), db) == spec
    with pytest.raises(MaterialValidationError):
        FerrofluidSpec.from_json({"solvent": "toluene", "particle": "toluene", "phi": 0.05, "diameter_nm": 20}, db)


def test_record_requires_provenance():
    with pytest.raises(MaterialValidationError):
        MaterialRecord("x", Vacuum(), "  ")
