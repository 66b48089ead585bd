"""Single-excitation dynamics of the chain coupled to the reservoir.

Two independent integrators:

* ``evolve_volterra`` integrates the memory-kernel equation

      i d(alpha_i)/dt = (H_spin alpha)_i - i int_0^t f(t - tau) S(tau) dtau,
      S = sum_j alpha_j,

  where every site couples to the collective amplitude ``S``.
* ``evolve_discrete_bath`` replaces the continuum by M explicit modes and
  integrates the (N + M)-dimensional Schroedinger equation directly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import integrate, special

from . import selfenergy
from .errors import AccuracyWarning, ConfigurationError
from .model import ChainSpec, ReservoirSpec, assemble_spin_matrix

MAX_STEPS = 10 ** 6
CONVERGENCE_TOL = 1e-4
RECURRENCE_FRACTION = 0.25


@dataclass(frozen=True)
class SiteExcitation:
    i0: int


@dataclass(frozen=True)
class Amplitudes:
    alpha0: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha0", tuple(complex(a) for a in self.alpha0))


InitialState = Union[SiteExcitation, Amplitudes]


def initial_vector(init: InitialState, N: int) -> np.ndarray:
    if isinstance(init, SiteExcitation):
        if not 1 <= init.i0 <= N:
            raise ConfigurationError(f"initial site {init.i0} outside 1..{N}")
        v = np.zeros(N, dtype=complex)
        v[init.i0 - 1] = 1.0
        return v
    v = np.array(init.alpha0, dtype=complex)
    if v.shape != (N,):
        raise ConfigurationError(f"initial amplitudes have length {v.size}, expected {N}")
    if np.vdot(v, v).real > 1 + 1e-12:
        raise ConfigurationError("initial amplitudes have norm > 1")
    return v


@dataclass
class Trajectory:
    times: np.ndarray
    alpha: np.ndarray
    convergence_delta: Optional[float] = None
    reference: Optional["Trajectory"] = None

    @property
    def c(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def spin_norm(self) -> np.ndarray:
        return np.sum(self.c, axis=1)

    @property
    def d_t(self) -> np.ndarray:
        return 1.0 - self.spin_norm

    @property
    def N(self) -> int:
        return self.alpha.shape[1]

    def time_average(self, t_start: float, t_stop: float | None = None) -> np.ndarray:
        """Mean of each c_i over ``t_start <= t <= t_stop``."""
        mask = self.times >= t_start - 1e-12
        if t_stop is not None:
            mask &= self.times <= t_stop + 1e-12
        return self.c[mask].mean(axis=0)


def survival_probability(traj: Trajectory, i: int) -> np.ndarray:
    """Occupation ``c_i(t)`` of site i (1-based)."""
    if not 1 <= i <= traj.N:
        raise IndexError(f"site {i} outside 1..{traj.N}")
    return traj.c[:, i - 1]


def _time_grid(t_max, h):
    if h <= 0:
        raise ConfigurationError(f"time step must be positive, got {h}")
    if t_max < 0:
        raise ConfigurationError(f"t_max must be >= 0, got {t_max}")
    n = int(round(t_max / h))
    if n > MAX_STEPS:
        raise ConfigurationError(f"t_max/h = {n} exceeds {MAX_STEPS} steps")
    return n, np.arange(n + 1) * h


def _propagator(H, h):
    w, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * w * h)) @ V.T


def _volterra_run(H, a0, f, h, n, window):
    N = len(a0)
    P = _propagator(H, h)
    ones = np.ones(N)
    P1 = P @ ones
    A = np.empty((n + 1, N), dtype=complex)
    S = np.empty(n + 1, dtype=complex)
    A[0] = a0
    S[0] = a0.sum()
    f0 = f[0]
    denom = 1.0 + N * h * h * f0 / 4.0
    F = 0.0j  # memory integral at the current time
    for k in range(n):
        m = k + 1
        # trapezoid over lags 1..m, excluding the implicit j = m endpoint
        jlo = 1 if window is None else max(1, m - window)
        hist = np.dot(f[m - jlo:0:-1], S[jlo:m]) if m > jlo else 0.0j
        if window is None or m <= window:
            hist += 0.5 * f[m] * S[0]
        hist *= h
        y = P @ A[k] - (0.5 * h * F) * P1
        S_new = (y.sum() - 0.5 * h * N * hist) / denom
        F = hist + 0.5 * h * f0 * S_new
        A[k + 1] = y - (0.5 * h * F) * ones
        S[k + 1] = S_new
    return A


def evolve_volterra(chain: ChainSpec, res: ReservoirSpec, init: InitialState,
                    t_max: float = 100.0, h: float = 0.01, *,
                    memory_window: float | None = None,
                    kernel_fn: Callable | None = None,
                    check_convergence: bool = False) -> Trajectory:
    """Integrate the memory-kernel equation on a uniform grid.

    The spin Hamiltonian is propagated exactly over each step and the
    memory term is handled by the implicit trapezoid rule,

        y_{n+1} = P y_n - h/2 (P F_n + F_{n+1}) 1,   P = exp(-i H h),

    with ``F`` the trapezoid convolution of the sampled kernel with ``S``.
    The only implicit unknown is ``S_{n+1}``, which enters linearly and is
    solved for in closed form.  Second order in ``h``; exactly unitary when
    the reservoir is decoupled.

    ``memory_window`` drops kernel contributions with lag above the given
    time.  ``kernel_fn(t_array, res)`` overrides the closed-form kernel.
    With ``check_convergence`` a second run at ``h/2`` is made; if the
    amplitudes differ by more than ``1e-4`` an ``AccuracyWarning`` is issued.
    Both runs are kept (``traj.reference``).
    """
    n, times = _time_grid(t_max, h)
    H = assemble_spin_matrix(chain)
    a0 = initial_vector(init, chain.N)
    kern = kernel_fn or selfenergy.kernel
    f = np.asarray(kern(times, res), dtype=complex)
    window = None if memory_window is None else int(math.floor(memory_window / h + 1e-9))
    traj = Trajectory(times=times, alpha=_volterra_run(H, a0, f, h, n, window))
    if check_convergence:
        ref = evolve_volterra(chain, res, init, t_max, h / 2, memory_window=memory_window,
                              kernel_fn=kernel_fn)
        delta = float(np.max(np.abs(ref.alpha[::2][: n + 1] - traj.alpha)))
        traj.convergence_delta = delta
        traj.reference = ref
        if delta > CONVERGENCE_TOL:
            warnings.warn(
                f"step-halving check: max amplitude change {delta:.2e} exceeds {CONVERGENCE_TOL}",
                AccuracyWarning, stacklevel=2)
    return traj


@dataclass(frozen=True)
class DiscreteBath:
    """Uniform-in-frequency discretization of the reservoir.

    Mode k sits at the bin midpoint; its squared coupling is the spectral
    weight of the bin (``weights="integrated"``) or ``J(w_k) dw``
    (``weights="midpoint"``).
    """

    omega: np.ndarray
    g: np.ndarray

    @property
    def M(self) -> int:
        return self.omega.size

    @property
    def spacing(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def recurrence_time(self) -> float:
        return 2 * np.pi / self.spacing


def discretize_bath(res: ReservoirSpec, M: int, omega_max: float,
                    weights: str = "integrated") -> DiscreteBath:
    dw = omega_max / M
    omega = (np.arange(M) + 0.5) * dw
    if weights == "midpoint":
        g2 = res.spectral_density(omega) * dw
    elif weights == "integrated":
        # int_0^x J = eta omega_c^2 Gamma(s+1) P(s+1, x/omega_c)
        edges = np.arange(M + 1) * dw
        cum = (res.eta * res.omega_c ** 2 * math.gamma(res.s + 1)
               * special.gammainc(res.s + 1, edges / res.omega_c))
        g2 = np.diff(cum)
    else:
        raise ConfigurationError(f"unknown bath weights {weights!r}")
    return DiscreteBath(omega=omega, g=np.sqrt(np.clip(g2, 0.0, None)))


def discrete_bath_hamiltonian(chain: ChainSpec, bath: DiscreteBath) -> np.ndarray:
    """Dense (N + M)-dimensional single-excitation Hamiltonian, spins first."""
    N, M = chain.N, bath.M
    Hf = np.zeros((N + M, N + M))
    Hf[:N, :N] = assemble_spin_matrix(chain)
    Hf[N:, N:] = np.diag(bath.omega)
    Hf[:N, N:] = bath.g[None, :]
    Hf[N:, :N] = bath.g[:, None]
    return Hf


def evolve_discrete_bath(chain: ChainSpec, res: ReservoirSpec, init: InitialState,
                         t_max: float = 50.0, M: int = 4000, omega_max: float = 60.0, *,
                         h: float = 0.01, method: str = "ode",
                         weights: str = "integrated") -> Trajectory:
    """Brute-force dynamics with an explicit, finite set of bath modes.

    ``method="ode"`` integrates the linear system with DOP853 (rtol 1e-11);
    ``method="eigh"`` diagonalizes the full matrix (N + M <= 5000).
    Runs longer than a quarter of the recurrence time ``2 pi / dw`` are
    rejected.
    """
    if M < 100:
        raise ConfigurationError(f"M must be >= 100, got {M}")
    if omega_max < 10 * res.omega_c:
        raise ConfigurationError(
            f"omega_max = {omega_max} must be at least 10 * omega_c = {10 * res.omega_c}")
    bath = discretize_bath(res, M, omega_max, weights)
    t_rec = bath.recurrence_time
    if t_max > RECURRENCE_FRACTION * t_rec:
        raise ConfigurationError(
            f"t_max = {t_max} too long for the discretized bath: revivals occur at "
            f"2*pi/dw = {t_rec:.4g}; keep t_max <= {RECURRENCE_FRACTION * t_rec:.4g} "
            "or increase M")
    _, times = _time_grid(t_max, h)
    N = chain.N
    psi0 = np.zeros(N + M, dtype=complex)
    psi0[:N] = initial_vector(init, N)

    if method == "eigh":
        if N + M > 5000:
            raise ConfigurationError("method='eigh' limited to N + M <= 5000")
        w, V = np.linalg.eigh(discrete_bath_hamiltonian(chain, bath))
        coef = V.T @ psi0
        alpha = np.empty((times.size, N), dtype=complex)
        Vs = V[:N]
        for j, t in enumerate(times):
            alpha[j] = Vs @ (coef * np.exp(-1j * w * t))
        return Trajectory(times=times, alpha=alpha)
    if method != "ode":
        raise ConfigurationError(f"unknown method {method!r}")

    Hs = assemble_spin_matrix(chain)
    om, g = bath.omega, bath.g

    def rhs(_t, y):
        a, b = y[:N], y[N:]
        out = np.empty_like(y)
        out[:N] = Hs @ a + (g @ b)
        out[N:] = om * b + g * a.sum()
        return -1j * out

    sol = integrate.solve_ivp(rhs, (0.0, times[-1]), psi0, method="DOP853", t_eval=times,
                              rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise RuntimeError(f"discrete-bath integration failed: {sol.message}")
    return Trajectory(times=times, alpha=sol.y[:N].T.copy())


def bound_energies_discrete(chain: ChainSpec, res: ReservoirSpec, M: int = 4000,
                            omega_max: float | None = None) -> np.ndarray:
    """Eigenvalues below zero of the discretized (N + M) Hamiltonian."""
    bath = discretize_bath(res, M, omega_max or 20 * res.omega_c)
    w = np.linalg.eigvalsh(discrete_bath_hamiltonian(chain, bath))
    return w[w < 0]
