"""Invariant suite behind ``xxzbound verify``.

Each check is small enough to run in a few seconds.  Functions under test
are looked up through their modules at call time so a patched
implementation is what gets checked.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import boundstates, evolution, model, selfenergy
from .model import ChainSpec, Quasirandom, ReservoirSpec, Uniform

CANON = ReservoirSpec(eta=0.1, s=1.0, omega_c=3.0)


@dataclass
class Check:
    name: str
    group: str
    fn: Callable


@dataclass
class Result:
    name: str
    group: str
    passed: bool
    detail: str
    seconds: float


CHECKS: list = []


def check(group):
    def deco(fn):
        CHECKS.append(Check(fn.__name__.replace("_", "-"), group, fn))
        return fn
    return deco


@check("model")
def spin_matrix_symmetry():
    worst = 0.0
    for N in (2, 3, 7, 12):
        for bc in ("periodic", "open"):
            H = model.assemble_spin_matrix(ChainSpec(N, boundary=bc, field=Quasirandom(2.0)))
            worst = max(worst, float(np.max(np.abs(H - H.T))))
    return worst == 0.0, f"max |H - H^T| = {worst:g}"


@check("model")
def translation_and_reflection():
    worst = 0.0
    for N in (3, 6, 11):
        H = model.assemble_spin_matrix(ChainSpec(N, field=Uniform(0.3)))
        T = np.roll(np.eye(N), 1, axis=0)
        worst = max(worst, float(np.max(np.abs(H @ T - T @ H))))
        H = model.assemble_spin_matrix(ChainSpec(N, boundary="open", field=Uniform(0.3)))
        R = np.eye(N)[::-1]
        worst = max(worst, float(np.max(np.abs(H @ R - R @ H))))
    return worst <= 1e-14, f"max commutator entry {worst:g}"


@check("selfenergy")
def derivative_identity():
    worst = 0.0
    for s in (0.5, 1.0, 2.0):
        res = ReservoirSpec(0.1, s, 3.0)
        for E in -np.logspace(-3, 2, 12):
            delta = 1e-5 * min(1.0, abs(E))
            fd = -(selfenergy.sigma(E + delta, res) - selfenergy.sigma(E - delta, res)) / (2 * delta)
            k = selfenergy.kappa(E, res)
            worst = max(worst, abs(fd - k) / abs(k))
    return worst <= 1e-6, f"max rel |dSigma/dE + K| / K = {worst:.2e}"


@check("selfenergy")
def closed_form_agreement():
    worst = 0.0
    for s in (1.0, 2.0):
        res = ReservoirSpec(0.1, s, 3.0)
        for E in -np.logspace(-5, 4, 10):
            for f, g in ((selfenergy.sigma, selfenergy.sigma_closed_form),
                         (selfenergy.kappa, selfenergy.kappa_closed_form)):
                ref = g(E, res)
                worst = max(worst, abs(f(E, res) - ref) / abs(ref))
    return worst <= 1e-10, f"max rel deviation {worst:.2e}"


@check("selfenergy")
def sigma_monotone_negative():
    Es = -np.logspace(-5, 3, 40)[::-1]  # increasing energies
    vals = np.array([selfenergy.sigma(E, CANON) for E in Es])
    ok = bool(np.all(vals < 0) and np.all(np.diff(vals) < 0))
    return ok, f"Sigma in [{vals.min():.4g}, {vals.max():.4g}]"


@check("selfenergy")
def kernel_fourier_identity():
    ts = np.array([0.0, 0.1, 1.0, 5.0, 10.0])
    worst = 0.0
    for s in (0.5, 1.0, 2.0):
        res = ReservoirSpec(0.1, s, 3.0)
        worst = max(worst, float(np.max(np.abs(selfenergy.kernel(ts, res)
                                                - selfenergy.kernel_quadrature(ts, res)))))
    return worst <= 1e-8, f"max |f - FT[J]| = {worst:.2e}"


@check("boundstates")
def decoupled_reduction():
    worst = 0.0
    ok = True
    res = ReservoirSpec(eta=0.0)
    for chain in (ChainSpec(6), ChainSpec(7, boundary="open", field=Quasirandom(2.0), U=0.5)):
        lam = np.linalg.eigvalsh(model.assemble_spin_matrix(chain))
        neg = lam[lam < -selfenergy.EPS_E]
        rep = boundstates.find_bound_states(chain, res)
        ok &= len(rep.states) == len(neg)
        if ok:
            worst = max(worst, float(np.max(np.abs(rep.energies - neg))))
            ok &= all(st.d == 0 for st in rep.states)
    return ok and worst <= 1e-10, f"max |E - lambda| = {worst:.2e}"


@check("boundstates")
def residuals_and_normalization():
    worst_r, worst_n = 0.0, 0.0
    for chain in (ChainSpec(8), ChainSpec(9, boundary="open"),
                  ChainSpec(10, boundary="open", field=Quasirandom(3.0), U=3.2)):
        H = model.assemble_spin_matrix(chain)
        for st in boundstates.find_bound_states(chain, CANON).states:
            A = boundstates.effective_matrix(H, st.E, CANON)
            worst_r = max(worst_r, np.linalg.norm(A @ st.alpha - st.E * st.alpha)
                          / np.linalg.norm(st.alpha))
            worst_n = max(worst_n, abs(st.total_probability() - 1))
    return worst_r <= 1e-10 and worst_n <= 1e-12, f"residual {worst_r:.1e}, norm {worst_n:.1e}"


@check("boundstates")
def branch_monotonicity():
    rng = np.random.default_rng(7)
    ok = True
    for _ in range(4):
        N = int(rng.integers(2, 9))
        chain = ChainSpec(N, boundary="open", U=float(rng.uniform(-1, 2)),
                          field=model.Explicit(tuple(rng.uniform(-2, 2, N))))
        Es = np.sort(-np.exp(rng.uniform(np.log(1e-4), np.log(8), 12)))
        for k in range(1, N + 1):
            g = [boundstates.branch_value(E, k, chain, CANON) for E in Es]
            ok &= bool(np.all(np.diff(g) < 0))
    return ok, "g_k strictly decreasing on random chains"


@check("boundstates")
def symmetry_invariants():
    worst = 0.0
    for N in (6, 9):
        for lv in boundstates.find_bound_states(ChainSpec(N), CANON).levels():
            worst = max(worst, float(np.ptp(lv.c)))
    for N in (7, 10):
        for st in boundstates.find_bound_states(ChainSpec(N, boundary="open"), CANON).states:
            if st.multiplicity == 1:
                worst = max(worst, float(np.max(np.abs(st.c - st.c[::-1]))))
    return worst <= 1e-10, f"max symmetry violation {worst:.1e}"


@check("boundstates")
def even_odd_pattern():
    bad = []
    for N in range(2, 9):
        rep = boundstates.find_bound_states(ChainSpec(N), CANON)
        nondeg = sum(lv.multiplicity == 1 for lv in rep.levels())
        pseudo = sum(st.d > 0.1 for st in rep.states)
        if rep.n_roots_found != N or nondeg != (2 if N % 2 == 0 else 1) or pseudo != 1:
            bad.append(N)
    return not bad, "failing N: " + (",".join(map(str, bad)) or "none")


@check("boundstates")
def alternating_critical_state():
    worst = 0.0
    for N in (2, 4, 6):
        rep = boundstates.find_bound_states(ChainSpec(N), CANON)
        st = min(rep.states, key=lambda s: abs(s.E + 2))
        worst = max(worst, abs(st.E + 2), st.d, float(np.max(np.abs(st.c - 1 / N))))
    return worst <= 1e-8, f"max deviation {worst:.1e}"


@check("boundstates")
def uniform_solver_agreement():
    st = boundstates.solve_uniform_state(14, CANON)
    E0 = boundstates.find_bound_states(ChainSpec(14), CANON).states[0]
    dev = max(abs(st.E - E0.E), abs(st.d - E0.d))
    return dev <= 1e-9, f"|scalar - dense| = {dev:.1e}"


@check("evolution")
def closed_chain_unitarity():
    chain = ChainSpec(5, boundary="open", field=Quasirandom(2.0))
    traj = evolution.evolve_volterra(chain, ReservoirSpec(eta=0.0), evolution.SiteExcitation(2),
                                     t_max=20.0, h=0.01)
    dev = float(np.max(np.abs(traj.spin_norm - 1)))
    return dev <= 1e-10, f"max |norm - 1| = {dev:.1e}"


@check("evolution")
def two_site_rabi():
    # the N=2 ring carries a double bond, so the Rabi frequency is J
    traj = evolution.evolve_volterra(ChainSpec(2), ReservoirSpec(eta=0.0),
                                     evolution.SiteExcitation(1), t_max=20.0, h=0.01)
    dev = float(np.max(np.abs(traj.c[:, 0] - np.cos(traj.times) ** 2)))
    return dev <= 1e-10, f"max |c_1 - cos^2| = {dev:.1e}"


@check("evolution")
def oracle_equivalence_small():
    chain = ChainSpec(2)
    init = evolution.SiteExcitation(1)
    v = evolution.evolve_volterra(chain, CANON, init, t_max=50.0, h=0.0025)
    b = evolution.evolve_discrete_bath(chain, CANON, init, t_max=50.0, M=4000, omega_max=60.0,
                                       h=0.01)
    dev = float(np.max(np.abs(v.alpha[::4] - b.alpha)))
    return dev <= 1e-3, f"max |alpha_volterra - alpha_bath| = {dev:.1e}"


def run(groups=None) -> list:
    results = []
    for c in CHECKS:
        if groups and c.group not in groups:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = c.fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(Result(c.name, c.group, bool(ok), detail, time.perf_counter() - t0))
    return results


def format_table(results) -> str:
    w = max((len(r.name) for r in results), default=4)
    lines = [f"{'group':<12} {'check':<{w}}  status  detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.group:<12} {r.name:<{w}}  {status:<6}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)
