import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenberg_lab.filtration import FiltrationTrace
from greenberg_lab.formulas import (
    FieldInstance,
    FitStatus,
    InconsistentDataError,
    IwasawaInvariants,
    Layer,
    StepQuotient,
    Verdict,
    auto_rebase_fit,
    check_greenberg_equivalences,
    check_theorem_bounds,
    chevalley_order,
    factors_within_bounds,
    fit_from_layers,
    genus_order,
    iwasawa_fit,
    rebase_invariants,
    stabilization_analysis,
    step_quotient_order,
)
from greenberg_lab.pgroup import AbelianPGroup


def G(*e):
    return AbelianPGroup(3, tuple(e))


def test_chevalley_examples():
    assert chevalley_order(2, 1, 2, 1) == 2
    assert all(chevalley_order(0, n, 1, 0) == 0 for n in range(5))
    assert chevalley_order(2, 2, 2, 0) == 4
    with pytest.raises(InconsistentDataError):
        chevalley_order(1, 1, 2, 2)


def test_step_quotient_examples():
    assert step_quotient_order(2, 2, 1, 2, 1).total == 0
    q = step_quotient_order(2, 1, 1, 2, 0)
    assert q == StepQuotient(1, 1) and q.total == 2
    with pytest.raises(InconsistentDataError):
        step_quotient_order(1, 2, 1, 2, 0)


@given(st.integers(0, 10), st.integers(0, 6), st.integers(1, 5), st.data())
def test_step_zero_is_chevalley(ck, n, s, data):
    u = data.draw(st.integers(0, n * (s - 1)))
    assert step_quotient_order(ck, 0, n, s, u).total == chevalley_order(ck, n, s, u)


def test_factor_bounds_and_genus():
    inst = FieldInstance("x", 3, 1, ck=G(2), rk_nr=G(1))
    assert genus_order(inst) == 3
    assert factors_within_bounds(StepQuotient(2, 1), inst)
    assert not factors_within_bounds(StepQuotient(3, 0), inst)
    assert genus_order(FieldInstance("y", 3, 1, ck=G(2), rk_nr=G(3))) == 5
    assert genus_order(FieldInstance("z", 3, 1, ck=G(), rk_nr=G())) == 0


def test_rebase_examples():
    assert rebase_invariants(1, 0, 2, 3, 3) == (1, 0, 5)
    assert rebase_invariants(0, 1, 0, 1, 3) == (0, 3, 0)
    assert rebase_invariants(0, 0, 0, 4, 5) == (0, 0, 0)


@given(st.integers(0, 10), st.integers(0, 10), st.integers(-20, 20),
       st.integers(0, 5), st.integers(0, 5), st.sampled_from([2, 3, 5]))
def test_rebase_composes(lam, mu, nu, a, b, p):
    once = rebase_invariants(lam, mu, nu, a + b, p)
    assert rebase_invariants(*rebase_invariants(lam, mu, nu, a, p), b, p) == once
    inv, shifted = IwasawaInvariants(lam, mu, nu), IwasawaInvariants(*once)
    assert all(shifted.value(n, p) == inv.value(n + a + b, p) for n in range(4))


def test_fit_examples():
    assert iwasawa_fit([2, 4, 5], 3).status is FitStatus.NO_FIT
    f = iwasawa_fit([1, 2, 3], 3)
    assert (f.status, f.lam, f.mu, f.nu) == (FitStatus.EXACT, 1, 0, 1)
    assert iwasawa_fit([0, 0, 0], 3).invariants.as_tuple() == (0, 0, 0)
    assert iwasawa_fit([1, 2], 3).status is FitStatus.UNDERDETERMINED


@given(st.integers(0, 10), st.integers(0, 10), st.integers(0, 20), st.sampled_from([2, 3, 5]))
def test_fit_round_trip(lam, mu, nu_off, p):
    nu = nu_off - mu if abs(nu_off - mu) <= 20 else 0
    vals = [lam * n + mu * p**n + nu for n in range(4)]
    if min(vals) < 0:
        return
    f = iwasawa_fit(vals, p)
    assert f.status is FitStatus.EXACT and (f.lam, f.mu, f.nu) == (lam, mu, nu)


def test_window_and_auto_rebase():
    # orders 0,5,6,7: not Iwasawa from n=0, but lambda=1 from n=1
    layers = tuple(Layer(n, order_valuation=v) for n, v in enumerate([0, 5, 6, 7]))
    inst = FieldInstance("w", 3, 1, layers=layers)
    assert fit_from_layers(inst).status is FitStatus.NO_FIT
    w = fit_from_layers(inst, 1, 3)
    assert w.status is FitStatus.EXACT and (w.lam, w.mu, w.nu) == (1, 0, 5)
    a = auto_rebase_fit(inst)
    assert a.status is FitStatus.EXACT and a.base_shift == 1
    short = FieldInstance("s", 3, 1, layers=layers[:3])
    assert auto_rebase_fit(short).status is not FitStatus.EXACT


def _tower(bs, inv, ck=G(1), rk_nr=G()):
    layers = tuple(Layer(n, order_valuation=inv.value(n, 3), b=b) for n, b in enumerate(bs))
    return FieldInstance("t", 3, 1, ck=ck, rk_nr=rk_nr, layers=layers, invariants=inv)


def test_bounds_examples():
    inst = FieldInstance("0", 3, 1, ck=G(), rk_nr=G(),
                         layers=tuple(Layer(n, order_valuation=0, b=0) for n in range(3)),
                         invariants=IwasawaInvariants(0, 0, 0))
    assert check_theorem_bounds(inst).ok
    assert check_theorem_bounds(_tower([1, 1, 1], IwasawaInvariants(0, 0, 1))).ok
    bad = check_theorem_bounds(_tower([2, 1], IwasawaInvariants(0, 0, 2), rk_nr=G(1)))
    assert [f.name for f in bad.violations] == ["monotone"]


def test_bounds_undecidable_without_genus():
    inst = FieldInstance("u", 3, 1, layers=(Layer(0, order_valuation=1, b=1),))
    rep = check_theorem_bounds(inst)
    assert rep.ok and any(f.name == "upper" for f in rep.undecidable)


def test_equivalences():
    const = FieldInstance("c", 3, 1, ck=G(1), rk_nr=G(),
                          layers=tuple(Layer(n, G(1)) for n in range(3)))
    eq = check_greenberg_equivalences(const)
    assert eq.consistent_with_greenberg is True
    growing = FieldInstance("g", 3, 1, ck=G(1), rk_nr=G(),
                            layers=tuple(Layer(n, order_valuation=n + 1) for n in range(3)))
    assert check_greenberg_equivalences(growing).conditions["ii"] is Verdict.FAIL
    norm = FieldInstance("n", 3, 1, ck=G(1), rk_nr=G(1),
                         layers=tuple(Layer(n, G(1)) for n in range(3)))
    eq = check_greenberg_equivalences(norm)
    assert eq.conditions["iii"] is Verdict.FAIL and eq.consistent_with_greenberg is False
    empty = check_greenberg_equivalences(FieldInstance("e", 3, 1))
    assert set(empty.conditions.values()) == {Verdict.UNDECIDABLE}


def test_equivalence_inconsistency_flag():
    inst = FieldInstance("i", 3, 1, ck=G(1), layers=(Layer(1, G(1), b=2),))
    assert check_greenberg_equivalences(inst).inconsistencies


def _trace(qs, fs=None):
    return FiltrationTrace.from_quotients(qs, fs)


def test_stabilization_examples():
    rep = stabilization_analysis([_trace([]), _trace([])])
    assert rep.consistent and rep.tail_limit == 0
    traces = [_trace([1]), _trace([2]), _trace([2]), _trace([2])]
    rep = stabilization_analysis(traces)
    assert rep.sequences[0].values == (1, 2, 2, 2) and rep.sequences[0].limit == 2
    rep = stabilization_analysis([_trace([2]), _trace([1])])
    assert not rep.consistent


def test_stabilization_split():
    traces = [_trace([2, 1], [(1, 1), (1, 0)]), _trace([2, 1], [(1, 1), (1, 0)])]
    rep = stabilization_analysis(traces)
    assert rep.consistent
    assert rep.sequences[0].class_limit == 1 and rep.sequences[0].norm_limit == 1


def test_instance_validation():
    with pytest.raises(InconsistentDataError):
        FieldInstance("bad", 3, 1, ck=G(2), tk=G(1))
    with pytest.raises(InconsistentDataError):
        FieldInstance("bad", 3, 1, rk=G(1), rk_nr=G(2))
    with pytest.raises(InconsistentDataError):
        FieldInstance("bad", 3, 1, layers=(Layer(0, order_valuation=1), Layer(0, order_valuation=1)))
    with pytest.raises(InconsistentDataError):
        Layer(0, G(1), order_valuation=2)
