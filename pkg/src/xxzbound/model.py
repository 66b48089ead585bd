"""Chain and reservoir specifications and the single-excitation spin matrix.

Sites are labelled 1..N in every public interface; arrays are 0-based
internally.  All energies are in units of the hopping ``J`` (default 1).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import ConfigurationError

QUASIRANDOM_BETA = 532 / 738
QUASIRANDOM_PHI = 1 / 0.6188333

PERIODIC = "periodic"
OPEN = "open"


@dataclass(frozen=True)
class Uniform:
    h0: float = 0.0


@dataclass(frozen=True)
class Quasirandom:
    """Incommensurate on-site field ``Delta * cos(2 pi beta i + phi)``."""

    Delta: float = 0.0
    beta: float = QUASIRANDOM_BETA
    phi: float = QUASIRANDOM_PHI

    def __post_init__(self):
        if self.Delta < 0:
            raise ConfigurationError(f"Delta must be >= 0, got {self.Delta}")


@dataclass(frozen=True)
class Explicit:
    h: tuple

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(float(x) for x in self.h))


FieldSpec = Union[Uniform, Quasirandom, Explicit]


@dataclass(frozen=True)
class ChainSpec:
    N: int
    J: float = 1.0
    U: float = 1.0
    boundary: str = PERIODIC
    field: FieldSpec = field(default_factory=Uniform)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if self.boundary not in (PERIODIC, OPEN):
            raise ConfigurationError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        if self.boundary == PERIODIC and self.N == 1:
            raise ConfigurationError("a periodic chain needs N >= 2")
        if isinstance(self.field, Explicit) and len(self.field.h) != self.N:
            raise ConfigurationError(
                f"explicit field has {len(self.field.h)} entries but N = {self.N}")

    @property
    def is_uniform(self) -> bool:
        return isinstance(self.field, Uniform)

    def with_(self, **changes) -> "ChainSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class ReservoirSpec:
    """Spectral density ``J(w) = eta * w * (w/omega_c)**(s-1) * exp(-w/omega_c)``.

    ``eta = 0`` is accepted and means a decoupled reservoir.
    """

    eta: float = 0.1
    s: float = 1.0
    omega_c: float = 3.0

    def __post_init__(self):
        if self.eta < 0:
            raise ConfigurationError(f"eta must be >= 0, got {self.eta}")
        if self.s <= 0:
            raise ConfigurationError(f"s must be > 0, got {self.s}")
        if self.omega_c <= 0:
            raise ConfigurationError(f"omega_c must be > 0, got {self.omega_c}")

    @property
    def kind(self) -> str:
        if self.s < 1:
            return "sub-Ohmic"
        if self.s > 1:
            return "super-Ohmic"
        return "Ohmic"

    def spectral_density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (self.eta * omega * (omega / self.omega_c) ** (self.s - 1)
                * np.exp(-omega / self.omega_c))


def build_field(spec: FieldSpec, N: int) -> np.ndarray:
    """On-site fields h_1..h_N as a length-N array."""
    if N < 1:
        raise ConfigurationError(f"N must be >= 1, got {N}")
    if isinstance(spec, Uniform):
        return np.full(N, float(spec.h0))
    if isinstance(spec, Quasirandom):
        i = np.arange(1, N + 1)
        if spec.Delta == 0:
            return np.zeros(N)
        return spec.Delta * np.cos(2 * np.pi * spec.beta * i + spec.phi)
    if isinstance(spec, Explicit):
        if len(spec.h) != N:
            raise ConfigurationError(f"explicit field has {len(spec.h)} entries but N = {N}")
        return np.array(spec.h, dtype=float)
    raise ConfigurationError(f"unknown field specification {spec!r}")


def assemble_spin_matrix(chain: ChainSpec) -> np.ndarray:
    """Dense single-excitation matrix of the spin chain (reservoir excluded).

    Diagonal ``h_i - U``, nearest-neighbour elements ``J/2``.  For a
    periodic chain the bonds ``i -> i+1 (mod N)`` are added literally, so
    the N=2 ring carries a double bond and its off-diagonal element is J.
    """
    N = chain.N
    H = np.diag(build_field(chain.field, N) - chain.U)
    half = 0.5 * chain.J
    nbonds = N if chain.boundary == PERIODIC else N - 1
    for i in range(nbonds):
        j = (i + 1) % N
        H[i, j] += half
        H[j, i] += half
    return H


def band_bottom(chain: ChainSpec) -> float | None:
    """Lowest eigenvalue of the infinite uniform chain, ``h0 - U - |J|``.

    This is the energy of the alternating state on even periodic rings and
    separates pseudo-bound from true bound states.  None for non-uniform fields.
    """
    if not chain.is_uniform:
        return None
    return chain.field.h0 - chain.U - abs(chain.J)
