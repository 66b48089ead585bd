import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxzbound import boundstates, selfenergy
from xxzbound.boundstates import (PSEUDO_BOUND, TRUE_BOUND, BoundState, branch_value, classify,
                                  find_bound_states, isotropy, normalize_state,
                                  solve_uniform_state)
from xxzbound.errors import NumericalError
from xxzbound.evolution import bound_energies_discrete
from xxzbound.model import (ChainSpec, Explicit, Quasirandom, ReservoirSpec, Uniform,
                            assemble_spin_matrix)

# roots of E = 2 Sigma(E) and E = N Sigma(E) (Ohmic, eta=0.1, omega_c=3), found by
# 200-step bisection on the exponential-integral form of Sigma at 30 digits
N2_SYMMETRIC_ROOT = -0.447372169698480861
N2_SYMMETRIC_D = 0.161102804025602599
N3200_ROOT = -50.8864844240293
N1E5_D = 0.495095992027662


def test_branch_value_decoupled_is_linear():
    chain = ChainSpec(5, boundary="open", field=Quasirandom(1.5))
    lam = np.linalg.eigvalsh(assemble_spin_matrix(chain))
    res = ReservoirSpec(eta=0.0)
    for k in range(1, 6):
        for E in (-0.5, -3.0):
            assert branch_value(E, k, chain, res) == pytest.approx(lam[k - 1] - E, abs=1e-14)


def test_branch_value_index_range(canon):
    with pytest.raises(IndexError):
        branch_value(-1.0, 0, ChainSpec(3), canon)
    with pytest.raises(IndexError):
        branch_value(-1.0, 4, ChainSpec(3), canon)


def test_sum_zero_branch_ignores_reservoir(canon):
    # the alternating vector on a 4-ring sums to zero, so -2 stays an eigenvalue of A(E)
    H = assemble_spin_matrix(ChainSpec(4))
    for E in (-0.1, -1.0, -2.0, -5.0):
        lam = np.linalg.eigvalsh(boundstates.effective_matrix(H, E, canon))
        assert np.min(np.abs(lam + 2.0)) <= 1e-14
    rep = find_bound_states(ChainSpec(4), canon)
    assert np.min(np.abs(rep.energies + 2.0)) <= 1e-12


def test_two_site_ring_symmetric_root(canon):
    rep = find_bound_states(ChainSpec(2), canon)
    pseudo = [s for s in rep.states if s.classification == PSEUDO_BOUND]
    assert len(pseudo) == 1
    assert pseudo[0].E == pytest.approx(N2_SYMMETRIC_ROOT, abs=1e-11)
    assert pseudo[0].d == pytest.approx(N2_SYMMETRIC_D, abs=1e-10)
    # the same level from the scalar uniform-state equation
    u = solve_uniform_state(2, canon)
    assert u.E == pytest.approx(N2_SYMMETRIC_ROOT, abs=1e-11)


def test_periodic_n14_ground_state(canon):
    s0 = find_bound_states(ChainSpec(14), canon).states[0]
    assert s0.E == pytest.approx(-2.01932, abs=5e-4)
    assert s0.d == pytest.approx(0.289168, abs=5e-3)
    assert s0.classification == PSEUDO_BOUND


def test_open_n13_ground_state(canon):
    s0 = find_bound_states(ChainSpec(13, boundary="open"), canon).states[0]
    assert s0.E == pytest.approx(-2.01274, abs=5e-4)
    assert s0.d == pytest.approx(0.209038, abs=5e-3)


@pytest.mark.parametrize("chain", [
    ChainSpec(6),
    ChainSpec(7, boundary="open"),
    ChainSpec(9, boundary="open", field=Quasirandom(3.0), U=0.2),
])
def test_decoupled_reservoir_gives_spin_eigenvalues(chain):
    lam = np.linalg.eigvalsh(assemble_spin_matrix(chain))
    rep = find_bound_states(chain, ReservoirSpec(eta=0.0))
    neg = lam[lam < -selfenergy.EPS_E]
    assert rep.n_roots_found == len(neg)
    assert np.allclose(rep.energies, neg, atol=1e-10, rtol=0)
    assert all(s.d == 0 for s in rep.states)


def test_no_roots_is_empty_report(canon):
    chain = ChainSpec(12, boundary="open", U=-7.0, field=Quasirandom(6.0))
    rep = find_bound_states(chain, canon)
    assert rep.n_roots_found == 0 and rep.states == [] and rep.n_branches == 12


def test_bracket_failure_is_reported(monkeypatch, canon):
    # branches look active at the edge but never turn positive below
    real = boundstates._eigvalsh
    calls = []

    def broken(A):
        calls.append(1)
        return real(A) if len(calls) <= 2 else np.full(A.shape[0], -1e12)

    monkeypatch.setattr(boundstates, "_eigvalsh", broken)
    with pytest.raises(NumericalError, match="bracket"):
        find_bound_states(ChainSpec(3), canon)


def test_normalize_alternating_vector(canon):
    N = 6
    v = np.array([(-1.0) ** i for i in range(N)])
    st_ = normalize_state(-2.0, 3.7 * v, canon)
    assert st_.d == 0.0
    assert np.allclose(st_.c, 1 / N, atol=1e-15)
    assert st_.classification == TRUE_BOUND


def test_normalize_uniform_vector_at_n100_root(canon):
    u = solve_uniform_state(100, canon)
    st_ = normalize_state(u.E, np.ones(100), canon)
    assert st_.d == pytest.approx(0.391086, abs=1e-6)
    assert st_.d == pytest.approx(u.d, abs=1e-14)


def test_normalize_zero_vector(canon):
    with pytest.raises(ValueError):
        normalize_state(-1.0, np.zeros(3), canon)


@settings(max_examples=50, deadline=None)
@given(v=st.lists(st.floats(-5, 5), min_size=1, max_size=12).filter(lambda x: any(abs(a) > 1e-3 for a in x)),
       E=st.floats(-30, -1e-4))
def test_normalization_sums_to_one(v, E):
    st_ = normalize_state(E, np.array(v), ReservoirSpec())
    assert abs(st_.total_probability() - 1) <= 1e-12
    assert 0 <= st_.d <= 1


def _state(d):
    return BoundState(E=-1.0, alpha=np.ones(2), c=np.ones(2), d=d)


def test_classify_threshold():
    assert classify(_state(0.289168)) == PSEUDO_BOUND
    assert classify(_state(0.0)) == TRUE_BOUND
    assert classify(_state(0.005)) == TRUE_BOUND
    assert classify(_state(0.005), threshold=0.001) == PSEUDO_BOUND


def test_uniform_state_n100(canon):
    u = solve_uniform_state(100, canon)
    assert u.E == pytest.approx(-7.33804, abs=1e-5)
    assert u.d == pytest.approx(0.391086, abs=1e-6)


def test_uniform_state_large_n_matches_oracle(canon):
    u = solve_uniform_state(3200, canon)
    assert u.E == pytest.approx(N3200_ROOT, rel=1e-11)
    assert u.d == pytest.approx(0.474613, abs=1e-6)
    assert solve_uniform_state(10 ** 5, canon).d == pytest.approx(N1E5_D, abs=1e-9)


def test_uniform_state_matches_dense_solver(canon):
    u = solve_uniform_state(22, canon)
    s0 = find_bound_states(ChainSpec(22), canon).states[0]
    assert u.E == pytest.approx(s0.E, abs=1e-10)
    assert u.d == pytest.approx(s0.d, abs=1e-10)
    assert u.E == pytest.approx(-2.7672, abs=5e-4)
    assert u.d == pytest.approx(0.316325, abs=5e-3)


def test_uniform_state_single_spin(canon):
    # N=1: E = h0 - U + Sigma(E), the same equation as a one-site open chain
    u = solve_uniform_state(1, canon, h0=0.0, U=0.5)
    assert u.E == pytest.approx(-0.5 + selfenergy.sigma(u.E, canon), abs=1e-12)
    s0 = find_bound_states(ChainSpec(1, boundary="open", U=0.5), canon).states[0]
    assert u.E == pytest.approx(s0.E, abs=1e-11)
    assert u.d == pytest.approx(s0.d, abs=1e-10)


def test_uniform_state_absent(canon):
    assert solve_uniform_state(3, canon, h0=5.0, U=0.0) is None


def test_isotropy_examples(canon):
    w = BoundState(E=-1.0, alpha=np.full(5, 1 / np.sqrt(5)), c=np.full(5, 0.2), d=0.0)
    assert isotropy(w) == 0.0
    rep = find_bound_states(ChainSpec(8), canon)
    alt = min(rep.states, key=lambda s: abs(s.E + 2))
    assert isotropy(alt) <= 1e-20
    open13 = find_bound_states(ChainSpec(13, boundary="open"), canon).states[0]
    open22 = find_bound_states(ChainSpec(22, boundary="open"), canon).states[0]
    assert isotropy(open22) < isotropy(open13)


def test_residuals_of_returned_states(canon):
    for chain in (ChainSpec(12), ChainSpec(11, boundary="open", field=Quasirandom(4.0), U=4.2)):
        H = assemble_spin_matrix(chain)
        for s in find_bound_states(chain, canon).states:
            A = boundstates.effective_matrix(H, s.E, canon)
            assert np.linalg.norm(A @ s.alpha - s.E * s.alpha) <= 1e-10 * np.linalg.norm(s.alpha)
            assert abs(s.d - s.alpha.sum() ** 2 * selfenergy.kappa(s.E, canon)) <= 1e-14


def test_sign_convention_and_ordering(canon):
    rep = find_bound_states(ChainSpec(9, boundary="open", field=Quasirandom(2.0), U=2.5), canon)
    assert np.all(np.diff(rep.energies) >= 0)
    assert [s.level_index for s in rep.states] == list(range(len(rep.states)))
    for s in rep.states:
        first = s.alpha[np.flatnonzero(np.abs(s.alpha) > 1e-10 * np.abs(s.alpha).max())[0]]
        assert first > 0


def test_deterministic(canon):
    a = find_bound_states(ChainSpec(10), canon)
    selfenergy.clear_cache()
    b = find_bound_states(ChainSpec(10), canon)
    assert np.array_equal(a.energies, b.energies)
    for x, y in zip(a.states, b.states):
        assert np.array_equal(x.alpha, y.alpha)


chains = st.builds(
    lambda N, U, h, open_: ChainSpec(N, U=U, boundary="open" if open_ or N == 1 else "periodic",
                                     field=Explicit(tuple(h[:N]))),
    N=st.integers(1, 12), U=st.floats(-1, 3),
    h=st.lists(st.floats(-3, 3), min_size=12, max_size=12), open_=st.booleans())


@settings(max_examples=15, deadline=None)
@given(chain=chains, s=st.sampled_from([0.5, 1.0, 2.0]))
def test_branches_strictly_decreasing(chain, s):
    res = ReservoirSpec(0.1, s, 3.0)
    Es = -np.logspace(-4, 1, 9)[::-1]
    for k in range(1, chain.N + 1):
        g = [branch_value(E, k, chain, res) for E in Es]
        assert np.all(np.diff(g) < 0)


@settings(max_examples=15, deadline=None)
@given(chain=chains)
def test_root_count_bounded(chain):
    rep = find_bound_states(chain, ReservoirSpec())
    assert rep.n_roots_found <= chain.N
    assert len(rep.states) == rep.n_roots_found


@pytest.mark.parametrize("N", [4, 6, 9, 12])
def test_periodic_level_sums_are_site_independent(canon, N):
    for lv in find_bound_states(ChainSpec(N), canon).levels():
        assert np.ptp(lv.c) <= 1e-10


@pytest.mark.parametrize("N", [5, 8, 13])
def test_open_states_mirror_symmetric(canon, N):
    for s in find_bound_states(ChainSpec(N, boundary="open"), canon).states:
        if s.multiplicity == 1:
            assert np.max(np.abs(s.c - s.c[::-1])) <= 1e-10


@pytest.mark.parametrize("N", range(2, 13))
def test_periodic_structure(canon, N):
    rep = find_bound_states(ChainSpec(N), canon)
    levels = rep.levels()
    assert rep.n_roots_found == N
    assert sum(lv.multiplicity == 1 for lv in levels) == (2 if N % 2 == 0 else 1)
    assert sum(lv.d > 0.1 for lv in levels) == 1


def test_pseudo_bound_level_positions(canon):
    # E_2 for N=3, E_3 for even N, E_4 for N=9 (state ordinals, degenerate states counted)
    expected = {3: 2, 4: 3, 6: 3, 8: 3, 9: 4, 10: 3, 12: 3}
    for N, idx in expected.items():
        rep = find_bound_states(ChainSpec(N), canon)
        pseudo = [s.level_index for s in rep.states if s.d > 0.1]
        assert pseudo == [idx]


def test_critical_flag(canon):
    rep = find_bound_states(ChainSpec(6), canon)
    flagged = [s for s in rep.states if s.critical]
    assert len(flagged) == 1 and flagged[0].E == pytest.approx(-2.0, abs=1e-12)
    assert rep.critical_flags == [s.critical for s in rep.states]


@pytest.mark.parametrize("chain,s", [
    (ChainSpec(2), 1.0),
    (ChainSpec(4, boundary="open"), 0.5),
    (ChainSpec(6, boundary="open", field=Quasirandom(2.0), U=2.5), 2.0),
])
def test_discrete_bath_bound_energies(chain, s):
    res = ReservoirSpec(0.1, s, 3.0)
    discrete = np.sort(bound_energies_discrete(chain, res, M=4000))
    exact = find_bound_states(chain, res).energies
    assert discrete.shape == exact.shape
    assert np.max(np.abs(discrete - exact)) <= 1e-3
