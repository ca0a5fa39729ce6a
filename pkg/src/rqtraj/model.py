"""Value types shared by every module: units, particle data, microstate
constants and potentials.

All types are frozen dataclasses. Functions accept scalars or numpy arrays
for positions and broadcast.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidConstants

DEFAULT_DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class UnitSystem:
    """Values of hbar and c. Natural units by default."""

    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive and finite, got {self.hbar!r}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"c must be positive and finite, got {self.c!r}")

    def scaled(self, hbar_factor: float = 1.0, c_factor: float = 1.0) -> "UnitSystem":
        return UnitSystem(self.hbar * hbar_factor, self.c * c_factor)


NATURAL = UnitSystem()


@dataclass(frozen=True)
class ParticleSpec:
    """Rest mass ``m0`` (zero for a photon) and total energy ``E``
    (rest energy included)."""

    m0: float
    E: float

    def __post_init__(self):
        if not (self.m0 >= 0 and math.isfinite(self.m0)):
            raise ValueError(f"m0 must be >= 0, got {self.m0!r}")
        if not (self.E > 0 and math.isfinite(self.E)):
            raise ValueError(f"E must be > 0, got {self.E!r}")

    @property
    def is_photon(self) -> bool:
        return self.m0 == 0.0

    def rest_energy(self, u: UnitSystem) -> float:
        return self.m0 * u.c**2


@dataclass(frozen=True)
class Microstate:
    """Hidden constants ``(a, b)`` of the reduced action plus the trajectory
    offsets ``(x0, t0)``. ``(1, 0)`` is the classical microstate."""

    a: float = 1.0
    b: float = 0.0
    x0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "x0", "t0"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidConstants(f"{name} must be finite")
        if self.a == 0:
            raise InvalidConstants("a = 0 makes the reduced action constant and the momentum vanish")

    @property
    def is_classical(self) -> bool:
        return self.a == 1.0 and self.b == 0.0

    def replace(self, **changes) -> "Microstate":
        values = dict(a=self.a, b=self.b, x0=self.x0, t0=self.t0)
        values.update(changes)
        return Microstate(**values)


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Potential:
    """Static potential with exact first and second derivatives.

    Use the constructors :meth:`free`, :meth:`constant`, :meth:`linear` or
    :meth:`custom` rather than instantiating directly.
    """

    tag: str
    params: tuple = ()
    value: Callable = field(default=_zero, repr=False, compare=False)
    first: Callable = field(default=_zero, repr=False, compare=False)
    second: Callable = field(default=_zero, repr=False, compare=False)

    def __call__(self, x):
        """Return ``(V, V', V'')`` at ``x``."""
        return self.value(x), self.first(x), self.second(x)

    @property
    def is_free(self) -> bool:
        return self.tag == "free"

    @classmethod
    def free(cls) -> "Potential":
        return cls("free")

    @classmethod
    def constant(cls, v0: float) -> "Potential":
        v0 = float(v0)
        return cls(
            "constant",
            (v0,),
            value=lambda x: np.full_like(np.asarray(x, dtype=float), v0),
        )

    @classmethod
    def linear(cls, slope: float, offset: float = 0.0) -> "Potential":
        """``V(x) = slope * x + offset``."""
        slope, offset = float(slope), float(offset)
        return cls(
            "linear",
            (slope, offset),
            value=lambda x: slope * np.asarray(x, dtype=float) + offset,
            first=lambda x: np.full_like(np.asarray(x, dtype=float), slope),
        )

    @classmethod
    def custom(cls, value: Callable, first: Callable, second: Callable, params: tuple = ()) -> "Potential":
        return cls("custom", tuple(params), value=value, first=first, second=second)

    @classmethod
    def from_tag(cls, tag: str, params=()) -> "Potential":
        params = tuple(float(p) for p in params)
        if tag == "free":
            if params and any(params):
                raise ValueError("free potential takes no parameters")
            return cls.free()
        if tag == "constant":
            if len(params) != 1:
                raise ValueError("constant potential takes one parameter (V0)")
            return cls.constant(*params)
        if tag == "linear":
            if len(params) not in (1, 2):
                raise ValueError("linear potential takes slope[,offset]")
            return cls.linear(*params)
        raise ValueError(f"unknown potential tag {tag!r} (custom potentials are built in code)")


class Region(enum.Enum):
    ALLOWED = "allowed"
    FORBIDDEN = "forbidden"
    DEGENERATE = "degenerate"


def energy_gap(p: ParticleSpec, pot: Potential, u: UnitSystem, x):
    """(E - V(x))^2 - m0^2 c^4: positive in allowed regions."""
    eps = p.E - pot.value(x)
    return eps**2 - p.rest_energy(u) ** 2


def classify_region(p: ParticleSpec, pot: Potential, u: UnitSystem, x, tol: float = DEFAULT_DEGENERACY_TOL) -> Region:
    gap = float(energy_gap(p, pot, u, x))
    if gap > tol:
        return Region.ALLOWED
    if gap < -tol:
        return Region.FORBIDDEN
    return Region.DEGENERATE


def kinetic_energy(p: ParticleSpec, pot: Potential, u: UnitSystem, x):
    """T = E - V(x) - m0 c^2."""
    return p.E - pot.value(x) - p.rest_energy(u)
