"""Dielectric response along the imaginary frequency axis.

Every model is evaluated at a photon energy ``xi`` (hbar*xi in eV) and
returns the real permittivity eps(i*xi) >= 1. The ferrofluid gap medium is
built from a solvent and a particle model by Rayleigh mixing and carries
a static permeability from the Langevin susceptibility of the particles.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from types import MappingProxyType
from typing import Iterator, Mapping, Union

import numpy as np

from .constants import K_B_J_PER_K, MU_0

log = logging.getLogger(__name__)

DEFAULT_DB_RESOURCE = "materials_v1.json"


class MaterialError(ValueError):
    """Base class for material model problems."""


class StaticMetalError(MaterialError):
    """A Drude model was asked for its (infinite) static permittivity."""


class MaterialParseError(MaterialError):
    """The database text does not follow the schema."""


class MaterialValidationError(MaterialError):
    """A database record violates a model invariant."""


# --------------------------------------------------------------------------
# Permittivity models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Drude:
    omega_p: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.omega_p > 0 and self.gamma > 0):
            raise MaterialValidationError(
                f"Drude needs omega_p > 0 and gamma > 0, got {self.omega_p}, {self.gamma}"
            )

    @property
    def static_weight(self) -> float:
        """Limit of xi*eps(i xi) as xi -> 0, i.e. omega_p^2/gamma."""
        return self.omega_p**2 / self.gamma


@dataclass(frozen=True)
class Oscillators:
    terms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple((float(c), float(w)) for c, w in self.terms))
        for c, w in self.terms:
            if not (c >= 0 and w > 0 and math.isfinite(c) and math.isfinite(w)):
                raise MaterialValidationError(f"oscillator term needs C >= 0, omega > 0: ({c}, {w})")

    @property
    def static_value(self) -> float:
        return 1.0 + math.fsum(c for c, _ in self.terms)


@dataclass(frozen=True)
class Table:
    xi: tuple[float, ...]
    eps: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        if len(self.xi) != len(self.eps):
            raise MaterialValidationError("table xi and eps lengths differ")
        if len(self.xi) < 2:
            raise MaterialValidationError("table needs at least 2 samples")
        if self.xi[0] < 0 or any(b <= a for a, b in zip(self.xi, self.xi[1:])):
            raise MaterialValidationError("table xi must be >= 0 and strictly increasing")
        if any(not (e >= 1.0) or not math.isfinite(e) for e in self.eps):
            raise MaterialValidationError("table eps values must be finite and >= 1")

    def extrapolates(self, xi: float) -> bool:
        return xi < self.xi[0] or xi > self.xi[-1]

    def __call__(self, xi: float) -> float:
        xs, es = self.xi, self.eps
        if xi <= xs[0]:
            return es[0]
        if xi >= xs[-1]:
            return es[-1]
        j = int(np.searchsorted(xs, xi, side="right"))
        x0, x1 = xs[j - 1], xs[j]
        e0, e1 = es[j - 1] - 1.0, es[j] - 1.0
        t = (xi - x0) / (x1 - x0)
        if e0 > 0 and e1 > 0:
            # log of (eps - 1) interpolated linearly in xi
            return 1.0 + math.exp((1.0 - t) * math.log(e0) + t * math.log(e1))
        return 1.0 + (1.0 - t) * e0 + t * e1


@dataclass(frozen=True)
class Constant:
    eps: float

    def __post_init__(self) -> None:
        if not (self.eps >= 1.0 and math.isfinite(self.eps)):
            raise MaterialValidationError(f"constant permittivity must be >= 1, got {self.eps}")


@dataclass(frozen=True)
class Vacuum:
    pass


PermittivityModel = Union[Drude, Oscillators, Table, Constant, Vacuum]


def eval_permittivity(model: PermittivityModel, xi: float, diagnostics: list | None = None) -> float:
    """Return eps(i*xi) for ``model`` at photon energy ``xi`` (eV).

    Table models clamp outside their sample range; when ``diagnostics`` is
    given, an ``("extrapolated", xi)`` entry is appended in that case.
    """
    if xi < 0:
        raise MaterialError(f"xi must be >= 0, got {xi}")
    if isinstance(model, Vacuum):
        return 1.0
    if isinstance(model, Constant):
        return model.eps
    if isinstance(model, Drude):
        if xi == 0:
            raise StaticMetalError(
                "static metal permittivity is infinite; use zero-frequency reflection conventions"
            )
        return 1.0 + model.omega_p**2 / (xi * (xi + model.gamma))
    if isinstance(model, Oscillators):
        return 1.0 + math.fsum(c / (1.0 + (xi / w) ** 2) for c, w in model.terms)
    if isinstance(model, Table):
        if model.extrapolates(xi):
            log.debug("table evaluated outside sample range at xi=%g eV", xi)
            if diagnostics is not None:
                diagnostics.append(("extrapolated", xi))
        return model(xi)
    raise TypeError(f"unknown permittivity model {model!r}")


def is_metal(model: PermittivityModel) -> bool:
    return isinstance(model, Drude)


# --------------------------------------------------------------------------
# Records and database
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MaterialRecord:
    name: str
    model: PermittivityModel
    provenance: str
    # Saturation magnetization of a magnetic particle material (A/m), if known.
    ms_a_per_m: float | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise MaterialValidationError("record name must be non-empty")
        if not self.provenance or not self.provenance.strip():
            raise MaterialValidationError(f"record {self.name!r}: provenance must be non-empty")
        if self.ms_a_per_m is not None and not self.ms_a_per_m >= 0:
            raise MaterialValidationError(f"record {self.name!r}: ms_a_per_m must be >= 0")


class MaterialDB(Mapping[str, MaterialRecord]):
    """Immutable name -> record mapping, remembering the hash of its source."""

    def __init__(self, records: tuple[MaterialRecord, ...] = (), sha256: str = ""):
        names = [r.name for r in records]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise MaterialValidationError(f"duplicate material names: {', '.join(dupes)}")
        self._records = MappingProxyType({r.name: r for r in records})
        self.sha256 = sha256

    def __getitem__(self, name: str) -> MaterialRecord:
        try:
            return self._records[name]
        except KeyError:
            raise KeyError(f"unknown material {name!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __repr__(self) -> str:
        return f"MaterialDB({list(self._records)})"


def _number(rec: dict, key: str, where: str) -> float:
    if key not in rec:
        raise MaterialParseError(f"{where}: missing field {key!r}")
    val = rec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise MaterialParseError(f"{where}: field {key!r} must be a number")
    return float(val)


def _parse_model(spec: object, where: str) -> PermittivityModel:
    if not isinstance(spec, dict):
        raise MaterialParseError(f"{where}: field 'model' must be an object")
    kind = spec.get("type")
    where = f"{where}.model"
    if kind == "drude":
        return Drude(_number(spec, "omega_p_ev", where), _number(spec, "gamma_ev", where))
    if kind == "oscillators":
        terms = spec.get("terms")
        if not isinstance(terms, list):
            raise MaterialParseError(f"{where}: field 'terms' must be a list")
        parsed = []
        for i, t in enumerate(terms):
            if not isinstance(t, dict):
                raise MaterialParseError(f"{where}.terms[{i}]: must be an object")
            parsed.append((_number(t, "c", f"{where}.terms[{i}]"), _number(t, "omega_ev", f"{where}.terms[{i}]")))
        return Oscillators(tuple(parsed))
    if kind == "table":
        xi, eps = spec.get("xi_ev"), spec.get("eps")
        if not isinstance(xi, list) or not isinstance(eps, list):
            raise MaterialParseError(f"{where}: table needs list fields 'xi_ev' and 'eps'")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in xi + eps):
            raise MaterialParseError(f"{where}: table entries must be numbers")
        return Table(tuple(xi), tuple(eps))
    if kind == "constant":
        return Constant(_number(spec, "eps", where))
    if kind == "vacuum":
        return Vacuum()
    raise MaterialParseError(f"{where}: unknown model type {kind!r}")


def load_material_db(text: bytes | str) -> MaterialDB:
    """Parse and validate a JSON material database."""
    raw = text.encode("utf-8") if isinstance(text, str) else bytes(text)
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise MaterialParseError(f"database is not UTF-8: {exc}") from None
    except json.JSONDecodeError as exc:
        raise MaterialParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, list):
        raise MaterialParseError("top level must be an array of records")

    records = []
    for i, rec in enumerate(doc):
        where = f"record[{i}]"
        if not isinstance(rec, dict):
            raise MaterialParseError(f"{where}: must be an object")
        name = rec.get("name")
        if not isinstance(name, str):
            raise MaterialParseError(f"{where}: field 'name' must be a string")
        where = f"{where} ({name!r})"
        prov = rec.get("provenance")
        if not isinstance(prov, str):
            raise MaterialParseError(f"{where}: field 'provenance' must be a string")
        ms = rec.get("ms_a_per_m")
        if ms is not None:
            ms = _number(rec, "ms_a_per_m", where)
        try:
            records.append(MaterialRecord(name, _parse_model(rec.get("model"), where), prov, ms))
        except MaterialValidationError as exc:
            if str(exc).startswith("record "):
                raise
            raise MaterialValidationError(f"record {name!r}: {exc}") from None
    return MaterialDB(tuple(records), hashlib.sha256(raw).hexdigest())


def default_db() -> MaterialDB:
    """The material database shipped with the package."""
    data = resources.files("ferrocasimir.data").joinpath(DEFAULT_DB_RESOURCE).read_bytes()
    return load_material_db(data)


# --------------------------------------------------------------------------
# Ferrofluid
# --------------------------------------------------------------------------


def mix_rayleigh(eps_solvent: float, eps_particle: float, phi: float) -> float:
    """Effective permittivity of dilute spheres (``eps_particle``) in a host."""
    chi = (eps_particle - eps_solvent) / (eps_particle + 2.0 * eps_solvent)
    u = chi * phi
    assert u != 1.0, "Rayleigh mixing pole reached"
    return eps_solvent * (1.0 + 2.0 * u) / (1.0 - u)


def static_permeability(phi: float, ms: float, diameter_nm: float, temperature_k: float) -> float:
    """Zero-frequency permeability of a ferrofluid (Langevin, SI units).

    mu = 1 + (pi/18) * phi * mu_0 * Ms^2 * D^3 / (k_B T), with Ms in A/m.
    This is the SI form of the Gaussian expression 1 + (2 pi^2/9) phi Ms^2 D^3/(k_B T)
    (Ms_gauss^2 = mu_0 Ms_SI^2 / 4pi).
    """
    d_m = diameter_nm * 1e-9
    return 1.0 + (math.pi / 18.0) * phi * MU_0 * ms**2 * d_m**3 / (K_B_J_PER_K * temperature_k)


def ms_for_permeability(mu: float, phi: float, diameter_nm: float, temperature_k: float) -> float:
    """Saturation magnetization (A/m) giving ``static_permeability == mu``."""
    if phi <= 0:
        raise ValueError("phi must be positive to reach a target permeability")
    d_m = diameter_nm * 1e-9
    return math.sqrt((mu - 1.0) * K_B_J_PER_K * temperature_k / ((math.pi / 18.0) * phi * MU_0 * d_m**3))


@dataclass(frozen=True)
class FerrofluidSpec:
    solvent: MaterialRecord
    particle: MaterialRecord
    phi: float
    diameter_nm: float
    ms: float
    temperature_k: float = 300.0
    mu0: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.phi < 1.0:
            raise MaterialValidationError(f"volume fraction must be in [0, 1), got {self.phi}")
        if not self.diameter_nm > 0:
            raise MaterialValidationError("particle diameter must be positive")
        if not self.ms >= 0:
            raise MaterialValidationError("saturation magnetization must be >= 0")
        if not self.temperature_k > 0:
            raise MaterialValidationError("temperature must be positive")
        object.__setattr__(
            self, "mu0", static_permeability(self.phi, self.ms, self.diameter_nm, self.temperature_k)
        )

    @classmethod
    def pure(cls, solvent: MaterialRecord, temperature_k: float = 300.0) -> "FerrofluidSpec":
        """A gap filled with ``solvent`` only (no particles, mu = 1)."""
        return cls(solvent, solvent, 0.0, 1.0, 0.0, temperature_k)

    @classmethod
    def from_json(cls, obj: dict, db: Mapping[str, MaterialRecord], temperature_k: float = 300.0):
        particle = db[obj["particle"]]
        ms = obj.get("ms_a_per_m", particle.ms_a_per_m)
        if ms is None:
            raise MaterialValidationError(
                f"no ms_a_per_m given and particle {particle.name!r} has no default"
            )
        return cls(
            db[obj["solvent"]],
            particle,
            float(obj["phi"]),
            float(obj["diameter_nm"]),
            float(ms),
            temperature_k,
        )

    def to_json(self) -> dict:
        return {
            "solvent": self.solvent.name,
            "particle": self.particle.name,
            "phi": self.phi,
            "diameter_nm": self.diameter_nm,
            "ms_a_per_m": self.ms,
        }


def ferrofluid_permittivity(spec: FerrofluidSpec, xi: float, diagnostics: list | None = None) -> float:
    eps_s = eval_permittivity(spec.solvent.model, xi, diagnostics)
    if spec.phi == 0.0:
        return eps_s
    eps_p = eval_permittivity(spec.particle.model, xi, diagnostics)
    return mix_rayleigh(eps_s, eps_p, spec.phi)
