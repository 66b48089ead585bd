"""Self-consistent bound states of the chain + reservoir in the single-excitation sector.

Eliminating the reservoir amplitudes leaves the nonlinear eigenproblem

    A(E) alpha = E alpha,   A(E) = H_spin + Sigma(E) * 1 1^T

on E < 0.  Every sorted eigenvalue of A(E) is non-increasing in E, so each
branch function g_k(E) = lambda_k(A(E)) - E has slope <= -1 and at most one
root; roots are located by bisection branch by branch.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import selfenergy
from .errors import NumericalError
from .model import PERIODIC, ChainSpec, ReservoirSpec, assemble_spin_matrix, band_bottom
from .selfenergy import EPS_E

TRUE_BOUND = "true_bound"
PSEUDO_BOUND = "pseudo_bound"

DEFAULT_THRESHOLD = 0.01
MERGE_TOL = 1e-8
BISECT_XTOL = 1e-12
RESIDUAL_TOL = 1e-10
CRITICAL_TOL = 1e-6


@dataclass
class BoundState:
    E: float
    alpha: np.ndarray
    c: np.ndarray
    d: float
    level_index: int = 0
    multiplicity: int = 1
    classification: str = TRUE_BOUND
    critical: bool = False

    @property
    def N(self) -> int:
        return len(self.alpha)

    def total_probability(self) -> float:
        return float(np.sum(self.c) + self.d)


@dataclass
class Level:
    """States sharing one energy; the summed occupations are basis independent."""

    E: float
    multiplicity: int
    c: np.ndarray
    d: float
    states: list = field(default_factory=list)


@dataclass
class SpectrumReport:
    states: list
    n_branches: int
    n_roots_found: int

    @property
    def energies(self) -> np.ndarray:
        return np.array([st.E for st in self.states])

    @property
    def critical_flags(self) -> list:
        return [st.critical for st in self.states]

    def levels(self) -> list:
        out = []
        for st in self.states:
            if out and abs(st.E - out[-1].E) <= MERGE_TOL:
                lev = out[-1]
                lev.c = lev.c + st.c
                lev.d += st.d
                lev.states.append(st)
            else:
                out.append(Level(st.E, st.multiplicity, st.c.copy(), st.d, [st]))
        return out

    def count(self, classification: str) -> int:
        return sum(st.classification == classification for st in self.states)


def effective_matrix(H: np.ndarray, E: float, res: ReservoirSpec) -> np.ndarray:
    """``A(E) = H + Sigma(E) * 1 1^T``."""
    return H + selfenergy.sigma(E, res)


def branch_value(E: float, k: int, chain: ChainSpec, res: ReservoirSpec) -> float:
    """``g_k(E) = lambda_k(A(E)) - E`` for the k-th (1-based, ascending) branch."""
    N = chain.N
    if not 1 <= k <= N:
        raise IndexError(f"branch index {k} outside 1..{N}")
    lam = _eigvalsh(effective_matrix(assemble_spin_matrix(chain), E, res))
    return float(lam[k - 1] - E)


def _eigvalsh(A):
    try:
        return np.linalg.eigvalsh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed: {exc}") from exc


def _eigh(A):
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver failed: {exc}") from exc
    return w, _fix_signs(V)


def _fix_signs(V):
    # first component above noise level made positive, column by column
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-10 * np.max(np.abs(col)))
        if col[big[0]] < 0:
            V[:, j] = -col
    return V


def classify(state: BoundState, threshold: float = DEFAULT_THRESHOLD) -> str:
    return PSEUDO_BOUND if state.d > threshold else TRUE_BOUND


def normalize_state(E: float, alpha_raw, res: ReservoirSpec, *, threshold: float = DEFAULT_THRESHOLD,
                    level_index: int = 0, multiplicity: int = 1,
                    critical_energy: float | None = None) -> BoundState:
    """Scale a bound-state eigenvector so that ``sum(c) + d = 1``.

    The reservoir weight is ``d = |sum(alpha)|^2 K(E)``.
    """
    v = np.asarray(alpha_raw, dtype=float)
    norm2 = float(v @ v)
    if norm2 == 0.0:
        raise ValueError("cannot normalize a zero vector")
    S = float(v.sum())
    K = selfenergy.kappa(E, res)
    scale = 1.0 / np.sqrt(norm2 + S * S * K)
    alpha = v * scale
    c = alpha ** 2
    d = (S * scale) ** 2 * K
    st = BoundState(E=float(E), alpha=alpha, c=c, d=float(d), level_index=level_index,
                    multiplicity=multiplicity)
    st.classification = classify(st, threshold)
    if critical_energy is not None:
        st.critical = abs(E - critical_energy) <= CRITICAL_TOL
    return st


def _branch_root(H, k, res, lo, hi):
    ones = np.ones(H.shape[0])

    def g(E):
        return _eigvalsh(effective_matrix(H, E, res))[k] - E

    glo = g(lo)
    if not glo > 0:
        raise NumericalError(
            f"bracket failure on branch {k + 1}: g({lo:.6g}) = {glo:.3e} is not positive")
    E = optimize.bisect(g, lo, hi, xtol=BISECT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)
    # one Newton step: g'(E) = -K (v.1)^2 - 1
    w, V = np.linalg.eigh(effective_matrix(H, E, res))
    gE = w[k] - E
    slope = -selfenergy.kappa(E, res) * (V[:, k] @ ones) ** 2 - 1.0
    E_new = E - gE / slope
    if abs(E_new - E) <= BISECT_XTOL and E_new <= hi:
        E = E_new
    return E


def find_bound_states(chain: ChainSpec, res: ReservoirSpec,
                      threshold: float = DEFAULT_THRESHOLD) -> SpectrumReport:
    """All bound states (E < 0) of the chain coupled to the reservoir, sorted by energy."""
    H = assemble_spin_matrix(chain)
    N = chain.N
    hi = -EPS_E
    lam_at_edge = _eigvalsh(effective_matrix(H, hi, res))
    active = [k for k in range(N) if lam_at_edge[k] - hi < 0]
    if not active:
        return SpectrumReport(states=[], n_branches=N, n_roots_found=0)

    lo = float(_eigvalsh(H)[0]) + N * selfenergy.sigma(hi, res) - 1.0
    roots = sorted((_branch_root(H, k, res, lo, hi), k) for k in active)

    clusters = [[roots[0]]]
    for r in roots[1:]:
        if r[0] - clusters[-1][-1][0] <= MERGE_TOL:
            clusters[-1].append(r)
        else:
            clusters.append([r])

    crit = band_bottom(chain)
    states = []
    for cl in clusters:
        E = float(np.mean([r[0] for r in cl]))
        A = effective_matrix(H, E, res)
        _, V = _eigh(A)
        for _, k in sorted(cl, key=lambda r: r[1]):
            v = V[:, k]
            resid = np.linalg.norm(A @ v - E * v)
            if resid > RESIDUAL_TOL * np.linalg.norm(v):
                raise NumericalError(
                    f"residual {resid:.2e} above tolerance for state at E = {E:.12g}")
            states.append(normalize_state(E, v, res, threshold=threshold,
                                          level_index=len(states), multiplicity=len(cl),
                                          critical_energy=crit))
    return SpectrumReport(states=states, n_branches=N, n_roots_found=len(roots))


@dataclass
class UniformState:
    N: int
    E: float
    d: float


def solve_uniform_state(N: int, res: ReservoirSpec, *, J: float = 1.0, h0: float = 0.0,
                        U: float = 1.0) -> UniformState | None:
    """Bound state of a uniform periodic ring with ``alpha_i = 1/sqrt(N)``.

    Solves the scalar equation ``E = J + h0 - U + N Sigma(E)``; for N = 1 the
    hopping term is absent.  Returns None when there is no root on E < 0.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    const = (J if N >= 2 else 0.0) + h0 - U
    hi = -EPS_E

    def g(E):
        return const + N * selfenergy.sigma(E, res) - E

    if not g(hi) < 0:
        return None
    lo = const + N * selfenergy.sigma(hi, res) - 1.0
    E = optimize.bisect(g, lo, hi, xtol=BISECT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=400)
    K = N * selfenergy.kappa(E, res)
    return UniformState(N=N, E=float(E), d=float(K / (1 + K)))


def isotropy(state: BoundState) -> float:
    """``sum_i (|alpha_i| - 1/sqrt(N))^2 / N`` on the reservoir-normalized amplitudes."""
    N = state.N
    return float(np.sum((np.abs(state.alpha) - 1 / np.sqrt(N)) ** 2) / N)


def is_periodic_uniform(chain: ChainSpec) -> bool:
    return chain.boundary == PERIODIC and chain.is_uniform
