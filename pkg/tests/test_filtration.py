import numpy as np
import pytest

from greenberg_lab.filtration import (
    FiltrationTrace,
    GModule,
    InvalidModuleError,
    filtration_level,
    filtration_trace,
    random_gmodule,
    verify_filtration_properties,
)
from greenberg_lab.pgroup import AbelianPGroup, PHom, hom_kernel, whole_group


@pytest.fixture
def m27_3():
    return GModule.from_matrix(3, (3, 1), [[1, 9], [0, 1]], n=1)


def test_levels_of_fixture(m27_3):
    assert filtration_level(m27_3, 0).is_trivial()
    lvl1 = filtration_level(m27_3, 1)
    assert lvl1.order == 27 and lvl1.structure.exponents == (3,)
    assert filtration_level(m27_3, 2).is_whole()
    brute = {x for x in m27_3.group.elements() if m27_3.sigma(x) == x}
    assert lvl1.elements() == brute


def test_trace_of_fixture(m27_3):
    t = filtration_trace(m27_3)
    assert t.b == 2
    assert t.quotient_orders == (3, 1)
    assert t.total_order == 4
    assert [r.level_order for r in t.levels] == [0, 3, 4]


def test_trivial_and_invariant_modules():
    t = filtration_trace(GModule.from_matrix(3, (), [], n=1))
    assert t.b == 0 and t.quotient_orders == ()
    t = filtration_trace(GModule.from_matrix(3, (1,), [[1]], n=1))
    assert t.b == 1 and t.quotient_orders == (1,)
    assert verify_filtration_properties(GModule.from_matrix(3, (), [], n=0)).ok


def test_invalid_modules():
    with pytest.raises(InvalidModuleError):
        GModule.from_matrix(3, (3, 1), [[1, 9], [0, 1]], n=0)
    with pytest.raises(InvalidModuleError):
        GModule.from_matrix(3, (1,), [[0]], n=1)
    with pytest.raises(InvalidModuleError):
        GModule.from_matrix(3, (1,), [[1]], n=-1)


def test_verify_reports_all_pass(m27_3):
    report = verify_filtration_properties(m27_3)
    assert report.ok, report.failures
    names = {c.name for c in report.checks}
    assert {"kernel", "non-increasing", "injective", "product-formula", "fixed-points"} <= names


def test_from_quotients():
    t = FiltrationTrace.from_quotients([2, 1], factors=[(1, 1), (1, 0)])
    assert t.b == 2 and t.total_order == 3
    assert t.levels[0].class_factor == 1
    with pytest.raises(ValueError):
        FiltrationTrace.from_quotients([2], factors=[(1, 0)])


@pytest.mark.parametrize("p", [2, 3, 5])
def test_random_modules_properties(p):
    rng = np.random.default_rng(p)
    shapes = [(1,), (2,), (1, 1), (2, 1), (1, 1, 1), (3,), (2, 2)]
    for k in range(40):
        G = AbelianPGroup(p, shapes[k % len(shapes)])
        M = random_gmodule(G, rng)
        assert M.sigma.power(p**M.n) == PHom.identity(G)
        report = verify_filtration_properties(M, enumeration_bound=p**6)
        assert report.ok, report.failures
        t = report.trace
        assert t.b <= G.valuation
        assert filtration_level(M, t.b) == whole_group(G)
        assert filtration_level(M, 1) == hom_kernel(M.one_minus_sigma())
        for i in range(t.b):
            assert filtration_level(M, i) != filtration_level(M, i + 1)
