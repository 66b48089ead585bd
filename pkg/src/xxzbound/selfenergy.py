"""Reservoir self-energy, its energy derivative and the time-domain memory kernel.

With ``x = w / omega_c`` and ``a = -E / omega_c > 0`` the two energy-domain
integrals reduce to

    Sigma(E) = -eta * omega_c * I1(a),   I1(a) = int_0^inf x^s e^-x / (x + a) dx
    K(E)     =  eta * I2(a),             I2(a) = int_0^inf x^s e^-x / (x + a)^2 dx

which are evaluated with a generalized Gauss-Laguerre rule (weight x^s e^-x)
and an adaptive fallback when the rule has not converged (small ``a``).
"""
from __future__ import annotations

import math
import warnings
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DomainError
from .model import ReservoirSpec

EPS_E = 1e-6
REL_TOL = 1e-10
_GL_ORDERS = (96, 192)


def _check_energy(E):
    if not E <= -EPS_E:
        raise DomainError(
            f"self-energy evaluated too close to continuum edge: E = {E!r} > -{EPS_E}")


@lru_cache(maxsize=None)
def _gl_rule(n, s):
    x, w = special.roots_genlaguerre(n, s)
    return x, w


def _gauss_laguerre(a, s, power):
    vals = []
    for n in _GL_ORDERS:
        x, w = _gl_rule(n, s)
        vals.append(float(np.sum(w / (x + a) ** power)))
    lo, hi = vals
    return hi, abs(hi - lo)


def _adaptive(a, s, power):
    """Piecewise adaptive quadrature; the x^s endpoint factor goes in the weight."""
    total, err = 0.0, 0.0
    b = min(a, 1.0)
    val, e = integrate.quad(lambda x: math.exp(-x) / (x + a) ** power, 0.0, b,
                            weight="alg", wvar=(s, 0.0), epsabs=0.0, epsrel=1e-13, limit=200)
    total += val
    err += e
    f = lambda x: x ** s * math.exp(-x) / (x + a) ** power
    edges = [b]
    while edges[-1] < 60.0:
        edges.append(min(edges[-1] * 4.0, 60.0) if edges[-1] < 15.0 else 60.0)
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)
        total += val
        err += e
    val, e = integrate.quad(f, edges[-1], np.inf, epsabs=0.0, epsrel=1e-13, limit=200)
    return total + val, err + e


def _reduced_integral(a, s, power):
    value, err = _gauss_laguerre(a, s, power)
    if err <= 1e-2 * REL_TOL * abs(value):
        return value
    value, err = _adaptive(a, s, power)
    if err > REL_TOL * abs(value):
        raise AccuracyError(
            f"quadrature for a={a}, s={s} reached only relative error {err / abs(value):.2e}",
            estimate=err)
    return value


@lru_cache(maxsize=1 << 16)
def _sigma_cached(E, res):
    if res.eta == 0:
        return 0.0
    a = -E / res.omega_c
    return -(res.eta * (res.omega_c * _reduced_integral(a, res.s, 1)))


@lru_cache(maxsize=1 << 16)
def _kappa_cached(E, res):
    if res.eta == 0:
        return 0.0
    a = -E / res.omega_c
    return res.eta * _reduced_integral(a, res.s, 2)


def sigma(E: float, res: ReservoirSpec) -> float:
    """Self-energy ``int_0^inf J(w) / (E - w) dw`` for ``E <= -EPS_E``."""
    _check_energy(E)
    return _sigma_cached(float(E), res)


def kappa(E: float, res: ReservoirSpec) -> float:
    """``int_0^inf J(w) / (E - w)^2 dw``, equal to ``-dSigma/dE``."""
    _check_energy(E)
    return _kappa_cached(float(E), res)


def clear_cache():
    _sigma_cached.cache_clear()
    _kappa_cached.cache_clear()


def total_coupling(res: ReservoirSpec) -> float:
    """``int_0^inf J(w) dw = eta * Gamma(s+1) * omega_c^2``."""
    return res.eta * math.gamma(res.s + 1) * res.omega_c ** 2


def sigma_edge_limit(res: ReservoirSpec) -> float:
    """``Sigma(0^-) = -eta * Gamma(s) * omega_c``."""
    return -res.eta * math.gamma(res.s) * res.omega_c


def _scaled_e1(a):
    # e^a E1(a) at extended precision
    return mpmath.exp(a) * mpmath.e1(a)


def sigma_closed_form(E: float, res: ReservoirSpec) -> float:
    """Exponential-integral expression of Sigma for s = 1 and s = 2.

    With ``G(a) = e^a E1(a)``:
      s=1: I1 = 1 - a G
      s=2: I1 = 1 - a + a^2 G
    """
    _check_energy(E)
    with mpmath.workdps(40):
        a = mpmath.mpf(-E) / res.omega_c
        G = _scaled_e1(a)
        if res.s == 1:
            i1 = 1 - a * G
        elif res.s == 2:
            i1 = 1 - a + a * a * G
        else:
            raise ValueError("closed form available only for s = 1 and s = 2")
        return float(-res.eta * res.omega_c * i1)


def kappa_closed_form(E: float, res: ReservoirSpec) -> float:
    """Closed form of K for s = 1 (``(1+a)G - 1``) and s = 2 (``1 + a - (2a + a^2)G``)."""
    _check_energy(E)
    with mpmath.workdps(40):
        a = mpmath.mpf(-E) / res.omega_c
        G = _scaled_e1(a)
        if res.s == 1:
            i2 = (1 + a) * G - 1
        elif res.s == 2:
            i2 = 1 + a - (2 * a + a * a) * G
        else:
            raise ValueError("closed form available only for s = 1 and s = 2")
        return float(res.eta * i2)


def kernel(t, res: ReservoirSpec):
    """Memory kernel ``f(t) = eta omega_c^(1-s) Gamma(s+1) / (i t + 1/omega_c)^(s+1)``.

    Accepts a scalar or an array of times ``t >= 0``; this is the Fourier
    transform ``int_0^inf J(w) exp(-i w t) dw`` of the spectral density.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("kernel is defined for t >= 0")
    pref = res.eta * res.omega_c ** (1 - res.s) * math.gamma(res.s + 1)
    out = pref / (1j * t + 1 / res.omega_c) ** (res.s + 1)
    return out[()] if out.ndim == 0 else out


def kernel_quadrature(t, res: ReservoirSpec):
    """Independent evaluation of ``int_0^inf J(w) exp(-i w t) dw`` by oscillatory quadrature."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _kernel_quadrature(t, res)


KERNEL_TAIL_CUT = 90.0  # x^s e^-x is far below 1e-20 beyond this for s <= 5


def _kernel_quadrature(t, res):
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(ts.shape, dtype=complex)
    s = res.s
    scale = res.eta * res.omega_c ** 2
    top = KERNEL_TAIL_CUT + 10.0 * max(0.0, s - 5.0)
    for n, tt in enumerate(ts):
        k = res.omega_c * tt
        parts = []
        for wt, trig in (("cos", math.cos), ("sin", math.sin)):
            head, _ = integrate.quad(lambda x: math.exp(-x) * trig(k * x), 0.0, 1.0,
                                     weight="alg", wvar=(s, 0.0), epsabs=1e-15, epsrel=1e-13,
                                     limit=400)
            # finite-range oscillatory rule; QAWF on [1, inf) breaks down for small k
            tail, _ = integrate.quad(lambda x: x ** s * math.exp(-x), 1.0, top,
                                     weight=wt, wvar=k, epsabs=1e-15, epsrel=1e-13, limit=800)
            parts.append(head + tail)
        out[n] = scale * (parts[0] - 1j * parts[1])
    return out[0] if np.ndim(t) == 0 else out


def table(energies, res: ReservoirSpec):
    """Rows ``(E, sigma, kappa)`` on an energy grid."""
    return [(float(E), sigma(E, res), kappa(E, res)) for E in energies]
