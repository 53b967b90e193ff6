from __future__ import annotations

import pytest

from ferrocasimir.materials import Constant, Drude, FerrofluidSpec, MaterialRecord, default_db
from ferrocasimir.stack import FourLayerStack

_ACCEPTANCE: list[str] = []


def record_acceptance(line: str) -> None:
    _ACCEPTANCE.append(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def const(name: str, eps: float) -> MaterialRecord:
    return MaterialRecord(name, Constant(eps), "test fixture")


def drude(name: str = "metal", omega_p: float = 9.0, gamma: float = 0.03) -> MaterialRecord:
    return MaterialRecord(name, Drude(omega_p, gamma), "test fixture")


def constant_stack(eps_a: float, eps_m: float, eps_b1: float, b1: float, substrate=None):
    """Dispersionless layers, by default on a gold-like Drude substrate."""
    substrate = drude() if substrate is None else substrate
    gap = FerrofluidSpec.pure(const("m", eps_m))
    return FourLayerStack(const("a", eps_a), gap, const("b1", eps_b1), b1, substrate)


@pytest.fixture(scope="session")
def db():
    return default_db()


def make_default_stack(db, solvent: str = "toluene", phi: float = 0.05, diameter_nm: float = 20.0,
                       b1: float = 10.0, metal: str = "gold", ms: float | None = None) -> FourLayerStack:
    particle = db["magnetite"]
    gap = FerrofluidSpec(db[solvent], particle, phi, diameter_nm,
                         particle.ms_a_per_m if ms is None else ms, 300.0)
    return FourLayerStack(db["polystyrene"], gap, db["teflon"], b1, db[metal])


@pytest.fixture(scope="session")
def default_stack(db):
    return make_default_stack(db)
