from fractions import Fraction

import pytest

from greenberg_lab import _fallback, stochastic as S
from greenberg_lab.formulas import FieldInstance, InconsistentDataError
from greenberg_lab.pgroup import AbelianPGroup, subgroup_generated, trivial_subgroup, whole_group

M = S.SimModel.from_exponents


def test_make_model():
    inst = FieldInstance("x", 3, 1, ck=AbelianPGroup(3, (2,)), rk_nr=AbelianPGroup(3, (1,)),
                         tk=AbelianPGroup(3, (3, 2)))
    assert S.make_model(inst).junk_valuation == 2
    with pytest.raises(InconsistentDataError):
        S.make_model(FieldInstance("y", 3, 1, ck=AbelianPGroup(3, (1,)),
                                   rk_nr=AbelianPGroup(3, (1,)), tk=AbelianPGroup(3, (1,))))
    with pytest.raises(InconsistentDataError):
        S.make_model(FieldInstance("z", 3, 1))


def test_draw_step_cases():
    model = M(3, (1,), (1,))
    full = S.SimState(whole_group(model.class_part), whole_group(model.norm_part))
    stream = _fallback.SplitMix64(5)
    for _ in range(20):
        full, case = S.draw_step(model, full, stream)
        assert case is S.Case.BII
    # class case takes precedence whenever c is new
    seen_a = 0
    for seed in range(30):
        state = S.SimState.initial(model)
        new, case = S.draw_step(model, state, _fallback.SplitMix64(seed))
        if case is S.Case.A:
            seen_a += 1
            assert new.H_C.is_whole() and new.H_R.is_trivial()
    assert seen_a > 0


def test_forced_norm_transition():
    model = M(3, (), (1,))
    stream = _fallback.SplitMix64(0)
    state = S.SimState.initial(model)
    while True:
        state, case = S.draw_step(model, state, stream)
        if case is S.Case.BI:
            assert state.H_R.is_whole()
            break
        assert case is S.Case.BII


def test_empty_model():
    model = M(3)
    assert S.run_trial(model, 123).b == 0
    d = S.monte_carlo(model, 100, 7)
    assert d.histogram == {0: 100} and d.prob_b_le_1 == 1.0
    assert S.exact_expected_steps(model) == 0


@pytest.mark.parametrize("policy", list(S.Policy))
@pytest.mark.parametrize("shape", [((1,), ()), ((), (1,)), ((1, 1), (1,)), ((2,), (1, 1)), ((2, 1), ())])
def test_kernel_matches_reference(policy, shape):
    model = M(3, *shape, policy=policy)
    for t in range(40):
        key = S.trial_key(9, t)
        ref = S.reference_trial(model, key)
        assert S.run_trial(model, key) == ref
        fb = _fallback.run_trial(model.class_part.moduli, model.norm_part.moduli,
                                 policy is S.Policy.SINGLE, model.max_steps, key)
        assert (fb[0], tuple(fb[1:4])) == (ref.b, ref.case_counts)


def test_growth_bounds():
    model = M(2, (2, 1), (1,))
    for t in range(200):
        r = S.run_trial(model, S.trial_key(1, t))
        a, bi, bii = r.case_counts
        assert a <= 3 and bi <= 1 and r.b == a + bi + bii


def test_geometric_law():
    d = S.monte_carlo(M(3, (), (1,)), 30000, 4)
    n = d.trials
    for k in (1, 2, 3):
        expected = n * (1 / 3) ** (k - 1) * (2 / 3)
        assert abs(d.histogram[k] - expected) < 5 * expected**0.5
    same = S.monte_carlo(M(3, (1,), ()), 30000, 4)
    assert same.histogram == d.histogram


def test_oracle_values():
    assert S.exact_expected_steps(M(3, (), (1,))) == Fraction(3, 2)
    assert S.exact_expected_steps(M(3, (1, 1), ())) == Fraction(21, 8)
    assert S.exact_expected_steps(M(3, (2,), ())) == Fraction(3, 2)
    with pytest.raises(S.LatticeTooLargeError):
        S.exact_expected_steps(M(3, (3, 2), ()))
    with pytest.raises(ValueError):
        S.exact_expected_steps(M(3, (1,), (), policy="saturate"))


@pytest.mark.parametrize("shape,target", [(((), (1,)), 1.5), (((1, 1), ()), 21 / 8)])
def test_monte_carlo_means(shape, target):
    d = S.monte_carlo(M(3, *shape), 100_000, 2026)
    assert abs(d.mean - target) < 0.05
    assert abs(d.mean - target) < 4 * d.std_error


def test_determinism_across_threads():
    model = M(3, (2, 1), (1,))
    runs = [S.monte_carlo(model, 5000, 17, threads=t) for t in (1, 2, 4, 7)]
    assert all(r == runs[0] for r in runs)
    assert S.monte_carlo(model, 5000, 18) != runs[0]


def test_divergence_flagged():
    d = S.monte_carlo(M(3, (2, 2), (1,), max_steps=2), 50, 1)
    assert d.divergence_count > 0
    assert sum(d.histogram.values()) == 50


def test_statistics():
    d = S.BDistribution(4, {0: 1, 2: 3})
    assert d.mean == 1.5 and d.variance == pytest.approx(1.0)
    assert d.prob_b_le_1 == 0.25


def test_thread_env(monkeypatch):
    monkeypatch.setenv(S.THREADS_ENV, "3")
    assert S.thread_count() == 3
    monkeypatch.setenv(S.THREADS_ENV, "0")
    with pytest.raises(ValueError):
        S.thread_count()


def test_big_moduli_use_fallback():
    model = M(2, (40,), ())
    assert S._backend_for(model) is _fallback
    r = S.run_trial(model, S.trial_key(0, 0))
    assert r.b >= 1 and not r.diverged


def test_lattice_matches_subgroups():
    G = AbelianPGroup(3, (2, 1))
    lat = _fallback.Lattice(G.moduli)
    H = trivial_subgroup(G)
    stream = _fallback.SplitMix64(3)
    for _ in range(6):
        x = [stream.below(m) for m in G.moduli]
        assert lat.contains(x) == H.contains(G.element(*x))
        lat.insert(x)
        H = subgroup_generated(G, list(H.generators) + [G.element(*x)])
        assert lat.order() == H.order


def test_splitmix_reference_values():
    # published SplitMix64 outputs for seed 0
    s = _fallback.SplitMix64(0)
    assert s.next_u64() == 0xE220A8397B1DCDAF
    assert s.next_u64() == 0x6E789E6AA1B965F4
