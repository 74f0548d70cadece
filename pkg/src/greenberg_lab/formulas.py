"""Order bookkeeping for the filtration in a cyclotomic tower.

Every order is carried as a p-adic valuation. The functions here evaluate
the ambiguous class number formula and its step-by-step generalization,
fit Iwasawa's formula ``v_p(#C_n) = lambda*n + mu*p^n + nu`` to layer data,
and audit supplied tower data against the bounds relating the filtration
length ``b_n`` to the Iwasawa invariants.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .filtration import FiltrationTrace
from .pgroup import AbelianPGroup, is_prime


class InconsistentDataError(ValueError):
    """Inputs that cannot come from an actual tower (e.g. a negative order)."""


# ---------------------------------------------------------------------------
# Field data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Layer:
    """Data for the layer ``k_n``: class group structure or just its valuation."""

    n: int
    class_group: AbelianPGroup | None = None
    order_valuation: int | None = None
    b: int | None = None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InconsistentDataError("layer index must be non-negative")
        if self.class_group is not None:
            v = self.class_group.valuation
            if self.order_valuation is not None and self.order_valuation != v:
                raise InconsistentDataError(
                    f"layer {self.n}: order_valuation {self.order_valuation} disagrees "
                    f"with class group valuation {v}")
            object.__setattr__(self, "order_valuation", v)
        if self.order_valuation is not None and self.order_valuation < 0:
            raise InconsistentDataError(f"layer {self.n}: negative order valuation")
        if self.b is not None and self.b < 0:
            raise InconsistentDataError(f"layer {self.n}: negative b")


@dataclass(frozen=True)
class IwasawaInvariants:
    lam: int
    mu: int
    nu: int

    def __post_init__(self) -> None:
        if self.lam < 0 or self.mu < 0:
            raise InconsistentDataError("lambda and mu must be non-negative")

    def value(self, n: int, p: int) -> int:
        return self.lam * n + self.mu * p**n + self.nu

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.lam, self.mu, self.nu)


@dataclass(frozen=True)
class FieldInstance:
    """Arithmetic data of ``(k, p)`` as far as the algorithm needs it.

    ``ck``, ``tk``, ``rk``, ``rk_nr`` and ``wk`` are the p-groups ``C_k``,
    ``T_k``, ``R_k``, ``R_k^nr`` and the ``W_k`` quotient; any of them may be
    unknown (``None``).
    """

    label: str
    p: int
    s_count: int
    ck: AbelianPGroup | None = None
    tk: AbelianPGroup | None = None
    rk: AbelianPGroup | None = None
    rk_nr: AbelianPGroup | None = None
    wk: AbelianPGroup | None = None
    layers: tuple[Layer, ...] = ()
    invariants: IwasawaInvariants | None = None
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise InconsistentDataError(f"p={self.p} is not prime")
        if self.s_count < 1:
            raise InconsistentDataError("s_count must be at least 1")
        for name in ("ck", "tk", "rk", "rk_nr", "wk"):
            g = getattr(self, name)
            if g is not None and g.p != self.p:
                raise InconsistentDataError(f"{name} is a {g.p}-group, expected p={self.p}")
        v = self.valuations()
        if "rk_nr" in v and "rk" in v and v["rk_nr"] > v["rk"]:
            raise InconsistentDataError("#R_k^nr must divide #R_k")
        if "tk" in v:
            for name in ("ck", "rk"):
                if name in v and v[name] > v["tk"]:
                    raise InconsistentDataError(f"#{name} exceeds #T_k")
        layers = tuple(sorted(self.layers, key=lambda L: L.n))
        if len({L.n for L in layers}) != len(layers):
            raise InconsistentDataError("duplicate layer index")
        object.__setattr__(self, "layers", layers)

    def valuations(self) -> dict[str, int]:
        return {name: g.valuation for name in ("ck", "tk", "rk", "rk_nr", "wk")
                if (g := getattr(self, name)) is not None}

    @property
    def wk_valuation(self) -> int | None:
        return None if self.wk is None else self.wk.valuation

    def layer(self, n: int) -> Layer | None:
        return next((L for L in self.layers if L.n == n), None)

    def order_series(self) -> dict[int, int]:
        return {L.n: L.order_valuation for L in self.layers if L.order_valuation is not None}

    def b_series(self) -> dict[int, int]:
        return {L.n: L.b for L in self.layers if L.b is not None}


# ---------------------------------------------------------------------------
# Order formulas
# ---------------------------------------------------------------------------

def chevalley_order(ck_val: int, n: int, s_count: int, unit_norm_index_val: int) -> int:
    """Valuation of the ambiguous class group ``#C_{k_n}^{G_n}``.

    ``ck_val + n*(#S - 1) - v_p(E_k : E_k ∩ N(k_n^x))``.
    """
    if ck_val < 0 or n < 0 or s_count < 1:
        raise InconsistentDataError("ck_val, n must be >= 0 and s_count >= 1")
    ramification = n * (s_count - 1)
    if not 0 <= unit_norm_index_val <= ramification:
        raise InconsistentDataError(
            f"unit norm index valuation {unit_norm_index_val} outside [0, {ramification}]")
    return ck_val + ramification - unit_norm_index_val


@dataclass(frozen=True)
class StepQuotient:
    class_factor: int
    norm_factor: int

    @property
    def total(self) -> int:
        return self.class_factor + self.norm_factor


def step_quotient_order(ck_val: int, norm_image_val: int, n: int, s_count: int,
                        lambda_index_val: int) -> StepQuotient:
    """Valuation of ``#(M^{i+1}/M^i)`` split into class and norm factors.

    The class factor is ``v_p(#C_k) - v_p(#N(M^i))`` and the norm factor
    ``n*(#S - 1) - v_p(Lambda^i : Lambda^i ∩ N(k_n^x))``.
    """
    if not 0 <= norm_image_val <= ck_val:
        raise InconsistentDataError(
            f"norm image valuation {norm_image_val} outside [0, {ck_val}]")
    if n < 0 or s_count < 1:
        raise InconsistentDataError("n must be >= 0 and s_count >= 1")
    ramification = n * (s_count - 1)
    if not 0 <= lambda_index_val <= ramification:
        raise InconsistentDataError(
            f"norm index valuation {lambda_index_val} outside [0, {ramification}]")
    return StepQuotient(ck_val - norm_image_val, ramification - lambda_index_val)


def factors_within_bounds(step: StepQuotient, inst: FieldInstance) -> bool:
    """Class factor divides ``#C_k`` and norm factor divides ``#R_k^nr``."""
    if inst.ck is None or inst.rk_nr is None:
        raise InconsistentDataError("C_k and R_k^nr are required")
    return step.class_factor <= inst.ck.valuation and step.norm_factor <= inst.rk_nr.valuation


def genus_order(inst: FieldInstance) -> int:
    """``v_p(#G_k) = v_p(#C_k) + v_p(#R_k^nr)``."""
    if inst.ck is None or inst.rk_nr is None:
        raise InconsistentDataError("genus order needs C_k and R_k^nr")
    return inst.ck.valuation + inst.rk_nr.valuation


def rebase_invariants(lam: int, mu: int, nu: int, n0: int, p: int) -> tuple[int, int, int]:
    """Invariants relative to the base ``K = k_{n0}``."""
    if n0 < 0:
        raise ValueError("n0 must be non-negative")
    return lam, p**n0 * mu, nu + lam * n0


# ---------------------------------------------------------------------------
# Iwasawa fitting
# ---------------------------------------------------------------------------

class FitStatus(str, Enum):
    EXACT = "exact-fit"
    NO_FIT = "no-fit"
    UNDERDETERMINED = "underdetermined"


@dataclass(frozen=True)
class IwasawaFit:
    status: FitStatus
    lam: int | None = None
    mu: int | None = None
    nu: int | None = None
    fitted_from: tuple[int, int] | None = None
    base_shift: int = 0

    @property
    def invariants(self) -> IwasawaInvariants | None:
        if self.status is not FitStatus.EXACT:
            return None
        return IwasawaInvariants(self.lam, self.mu, self.nu)


def iwasawa_fit(order_vals: Sequence[int], p: int, *, start: int = 0,
                lambda_max: int = 10, mu_max: int = 10, nu_bound: int = 20) -> IwasawaFit:
    """Exhaustive search for ``(lambda, mu, nu)`` matching consecutive layers.

    ``order_vals[j]`` is ``v_p(#C_{k_n})`` at ``n = j`` counted from the base
    of the fit; ``start`` only labels the window. Three or more layers pin
    the solution down uniquely.
    """
    vals = [int(v) for v in order_vals]
    window = (start, start + len(vals) - 1) if vals else None
    if any(v < 0 for v in vals):
        raise InconsistentDataError("order valuations must be non-negative")
    if len(vals) < 3:
        return IwasawaFit(FitStatus.UNDERDETERMINED, fitted_from=window, base_shift=start)
    hits = []
    for lam, mu in itertools.product(range(lambda_max + 1), range(mu_max + 1)):
        nu = vals[0] - mu
        if abs(nu) > nu_bound:
            continue
        if all(lam * n + mu * p**n + nu == v for n, v in enumerate(vals)):
            hits.append((lam, mu, nu))
    if len(hits) == 1:
        lam, mu, nu = hits[0]
        return IwasawaFit(FitStatus.EXACT, lam, mu, nu, window, start)
    if not hits:
        return IwasawaFit(FitStatus.NO_FIT, fitted_from=window, base_shift=start)
    return IwasawaFit(FitStatus.UNDERDETERMINED, fitted_from=window, base_shift=start)


def fit_from_layers(inst: FieldInstance, n0: int | None = None, n1: int | None = None,
                    **bounds) -> IwasawaFit:
    """Fit the consecutive layers ``n0..n1`` of ``inst``, taking ``k_{n0}`` as base."""
    orders = inst.order_series()
    if not orders:
        return IwasawaFit(FitStatus.UNDERDETERMINED)
    lo = min(orders) if n0 is None else n0
    hi = max(orders) if n1 is None else n1
    vals = []
    for n in range(lo, hi + 1):
        if n not in orders:
            break
        vals.append(orders[n])
    return iwasawa_fit(vals, inst.p, start=lo, **bounds)


def auto_rebase_fit(inst: FieldInstance, **bounds) -> IwasawaFit:
    """Smallest base ``k_{n0}`` above which the remaining layers fit exactly.

    Returns the last attempted (non-exact) fit if the data run out first.
    """
    orders = inst.order_series()
    if not orders:
        return IwasawaFit(FitStatus.UNDERDETERMINED)
    last = IwasawaFit(FitStatus.UNDERDETERMINED)
    for n0 in range(min(orders), max(orders) + 1):
        fit = fit_from_layers(inst, n0, None, **bounds)
        if fit.status is FitStatus.EXACT:
            return fit
        if fit.status is FitStatus.UNDERDETERMINED:
            break
        last = fit
    return last


# ---------------------------------------------------------------------------
# Bound checks
# ---------------------------------------------------------------------------

class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    UNDECIDABLE = "undecidable"


@dataclass(frozen=True)
class Finding:
    name: str
    verdict: Verdict
    n: int | None = None
    detail: str = ""


@dataclass
class BoundReport:
    findings: list[Finding] = field(default_factory=list)
    invariants: IwasawaInvariants | None = None
    source: str = "none"

    def add(self, name: str, verdict: Verdict, n: int | None = None, detail: str = "") -> None:
        self.findings.append(Finding(name, verdict, n, detail))

    @property
    def violations(self) -> list[Finding]:
        return [f for f in self.findings if f.verdict is Verdict.FAIL]

    @property
    def undecidable(self) -> list[Finding]:
        return [f for f in self.findings if f.verdict is Verdict.UNDECIDABLE]

    @property
    def ok(self) -> bool:
        return not self.violations


def _pass_fail(ok: bool) -> Verdict:
    return Verdict.PASS if ok else Verdict.FAIL


def _tower_invariants(inst: FieldInstance) -> tuple[IwasawaInvariants | None, str]:
    if inst.invariants is not None:
        return inst.invariants, "supplied"
    fit = fit_from_layers(inst)
    if fit.status is FitStatus.EXACT and fit.base_shift == 0:
        return fit.invariants, "fitted"
    return None, "none"


def check_theorem_bounds(inst: FieldInstance) -> BoundReport:
    """Audit per-layer ``b_n`` against the invariants.

    For each layer with known ``b_n`` checks
    ``b_n <= lambda*n + mu*p^n + nu <= v_p(#C_k * #R_k^nr) * b_n``; the middle
    term comes from supplied invariants, an exact fit of the layers, or the
    layer's own order valuation, in that order of preference. Also checks
    that ``b_n`` is non-decreasing in ``n`` and the trivial-case equivalence
    ``b_1 = 0 <=> lambda = mu = nu = 0 <=> C_k = R_k^nr = 1``.
    """
    report = BoundReport()
    inv, source = _tower_invariants(inst)
    report.invariants, report.source = inv, source
    genus = None
    if inst.ck is not None and inst.rk_nr is not None:
        genus = genus_order(inst)
    orders = inst.order_series()
    bs = inst.b_series()

    for n, b in bs.items():
        if inv is not None:
            mid = inv.value(n, inst.p)
        elif n in orders:
            mid = orders[n]
        else:
            report.add("lower", Verdict.UNDECIDABLE, n, "no invariants or layer order")
            report.add("upper", Verdict.UNDECIDABLE, n, "no invariants or layer order")
            continue
        report.add("lower", _pass_fail(b <= mid), n, f"b={b} <= {mid}")
        if genus is None:
            report.add("upper", Verdict.UNDECIDABLE, n, "C_k or R_k^nr unknown")
        else:
            report.add("upper", _pass_fail(mid <= genus * b), n, f"{mid} <= {genus}*{b}")
        if inv is not None and n in orders and source == "supplied":
            report.add("formula-matches-layer", _pass_fail(orders[n] == mid), n,
                       f"layer order {orders[n]} vs formula {mid}")

    ns = sorted(bs)
    for n, m in zip(ns, ns[1:]):
        report.add("monotone", _pass_fail(bs[m] >= bs[n]), m, f"b_{m}={bs[m]} >= b_{n}={bs[n]}")

    # trivial case: b_1 = 0 <=> invariants vanish <=> C_k = R_k^nr = 1
    statements = []
    if 1 in bs:
        statements.append(("b_1=0", bs[1] == 0))
    if inv is not None:
        statements.append(("invariants=0", inv.as_tuple() == (0, 0, 0)))
    if genus is not None:
        statements.append(("C_k=R_k^nr=1", genus == 0))
    if len(statements) >= 2:
        values = {v for _, v in statements}
        report.add("trivial-equivalence", _pass_fail(len(values) == 1), None,
                   ", ".join(f"{k}:{v}" for k, v in statements))
    else:
        report.add("trivial-equivalence", Verdict.UNDECIDABLE, None, "fewer than two statements known")
    return report


@dataclass
class EquivalenceReport:
    conditions: dict[str, Verdict] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)
    inconsistencies: list[str] = field(default_factory=list)

    def set(self, key: str, verdict: Verdict, detail: str) -> None:
        self.conditions[key] = verdict
        self.details[key] = detail

    @property
    def consistent_with_greenberg(self) -> bool | None:
        """False if any condition fails, True if all hold, otherwise undecided."""
        verdicts = set(self.conditions.values())
        if Verdict.FAIL in verdicts:
            return False
        if verdicts == {Verdict.PASS}:
            return True
        return None


def check_greenberg_equivalences(inst: FieldInstance) -> EquivalenceReport:
    """Evaluate the conditions equivalent to ``lambda = mu = 0`` on the data.

    (i)   the norms ``C_{k_n} -> C_k`` are isomorphisms;
    (ii)  ``#C_{k_n}^{G_n} = #C_{k_n} = #C_k``;
    (iii) ``C_{k_n}^{G_n} = C_{k_n}`` and ``R_k^nr = 1``;
    (b)   ``b_n <= 1``.

    Finitely many layers can refute a condition but only support it on the
    layers given; a PASS means "holds on every supplied layer".
    """
    report = EquivalenceReport()
    orders = inst.order_series()
    bs = inst.b_series()
    ck = inst.ck

    for n, b in bs.items():
        if n in orders and (b == 0) != (orders[n] == 0):
            report.inconsistencies.append(f"n={n}: b_n={b} but v_p(#C_kn)={orders[n]}")
        if ck is not None and orders.get(n) == ck.valuation and b >= 2:
            report.inconsistencies.append(
                f"n={n}: #C_kn = #C_k makes every class ambiguous, yet b_n={b}")

    if ck is None or not orders:
        report.set("i", Verdict.UNDECIDABLE, "needs C_k and layer class groups")
        report.set("ii", Verdict.UNDECIDABLE, "needs C_k and layer class groups")
    else:
        bad = [n for n, v in orders.items() if v != ck.valuation]
        # surjective norms are isomorphisms iff the orders agree; structure must then agree too
        bad_struct = [L.n for L in inst.layers
                      if L.class_group is not None and L.class_group != ck]
        report.set("i", _pass_fail(not bad and not bad_struct),
                   f"order differs at n={bad}" if bad else
                   (f"structure differs at n={bad_struct}" if bad_struct else "orders constant"))
        ambiguous_short = [n for n, b in bs.items() if b >= 2]
        if bad:
            report.set("ii", Verdict.FAIL, f"#C_kn != #C_k at n={bad}")
        elif ambiguous_short:
            report.set("ii", Verdict.FAIL, f"b_n >= 2 (non-ambiguous classes) at n={ambiguous_short}")
        else:
            report.set("ii", Verdict.PASS, "#C_kn = #C_k forces all classes ambiguous")

    # b_n <= 1 exactly when every class of k_n is ambiguous
    ambiguous = {n: _all_ambiguous(inst, n) for n in sorted(set(orders) | set(bs))}
    big = [n for n, v in ambiguous.items() if v is False]
    if big:
        report.set("b", Verdict.FAIL, f"b_n > 1 at n={big}")
    elif ambiguous and all(ambiguous.values()):
        report.set("b", Verdict.PASS, "b_n <= 1")
    else:
        report.set("b", Verdict.UNDECIDABLE, "b_n not determined on every layer")

    # (iii): every layer all-ambiguous, plus R_k^nr trivial
    parts = []
    if inst.rk_nr is not None and not inst.rk_nr.is_trivial():
        parts.append("R_k^nr nontrivial")
    if any(v is False for v in ambiguous.values()):
        parts.append(f"non-ambiguous classes at n={[n for n, v in ambiguous.items() if v is False]}")
    if parts:
        report.set("iii", Verdict.FAIL, "; ".join(parts))
    elif inst.rk_nr is None or not ambiguous or any(v is None for v in ambiguous.values()):
        report.set("iii", Verdict.UNDECIDABLE, "R_k^nr or ambiguity of some C_kn unknown")
    else:
        report.set("iii", Verdict.PASS, "all classes ambiguous and R_k^nr = 1")
    return report


def _all_ambiguous(inst: FieldInstance, n: int) -> bool | None:
    """Whether ``C_{k_n}^{G_n} = C_{k_n}``, if the data decide it."""
    L = inst.layer(n)
    if L is not None and L.b is not None:
        return L.b <= 1
    if L is None or L.order_valuation is None or inst.ck is None:
        return None
    if L.order_valuation > chevalley_upper(inst.ck.valuation, n, inst.s_count):
        return False
    if L.order_valuation == inst.ck.valuation:
        # the ambiguous part has order >= #C_k, which is already everything
        return True
    return None


def chevalley_upper(ck_val: int, n: int, s_count: int) -> int:
    """Largest possible ``v_p(#C_{k_n}^{G_n})`` (unit norm index trivial)."""
    return ck_val + n * (s_count - 1)


# ---------------------------------------------------------------------------
# Stabilization in n
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndexSequence:
    i: int
    values: tuple[int, ...]
    class_values: tuple[int, ...] | None
    norm_values: tuple[int, ...] | None
    non_decreasing: bool
    settled: bool

    @property
    def limit(self) -> int:
        return self.values[-1]

    @property
    def class_limit(self) -> int | None:
        return None if self.class_values is None else self.class_values[-1]

    @property
    def norm_limit(self) -> int | None:
        return None if self.norm_values is None else self.norm_values[-1]


@dataclass
class StabilizationReport:
    sequences: list[IndexSequence]
    b_values: tuple[int, ...]
    c: int | None
    rho: int | None
    tail_limit: int | None
    inconsistencies: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.inconsistencies


def _non_decreasing(xs: Sequence[int]) -> bool:
    return all(b >= a for a, b in zip(xs, xs[1:]))


def stabilization_analysis(traces: Sequence[FiltrationTrace]) -> StabilizationReport:
    """Limits in ``n`` of the step quotients, for each fixed step ``i``.

    ``traces`` are the filtration traces of consecutive layers in increasing
    ``n``. For fixed ``i`` the quotient valuations must be non-decreasing in
    ``n``; a decrease is recorded as an inconsistency. Limits are read off
    the last layer. A step ``i`` counts as settled when the last two layers
    agree on it.

    The tail ``(c, rho)`` is the class/norm split of the limit at the
    smallest ``i`` from which all limits coincide, reported only when ``b_n``
    itself is stationary over the last two layers and every step in the tail
    is settled; otherwise it is left as ``None``.
    """
    if len(traces) < 2:
        raise ValueError("at least two layers are needed")
    b_values = tuple(t.b for t in traces)
    top = max(b_values)
    have_split = all(
        r.class_factor is not None and r.norm_factor is not None
        for t in traces for r in t.steps
    )

    def value(t: FiltrationTrace, i: int, attr: str) -> int:
        return getattr(t.levels[i], attr) if i < t.b else 0

    sequences = []
    problems = []
    for i in range(top + 1):
        vals = tuple(value(t, i, "quotient_order") for t in traces)
        cls_vals = nrm_vals = None
        if have_split:
            cls_vals = tuple(value(t, i, "class_factor") for t in traces)
            nrm_vals = tuple(value(t, i, "norm_factor") for t in traces)
        mono = _non_decreasing(vals)
        if not mono:
            problems.append(f"step {i}: quotient orders decrease in n: {vals}")
        sequences.append(IndexSequence(i, vals, cls_vals, nrm_vals, mono, vals[-1] == vals[-2]))

    limits = [s.limit for s in sequences]
    for i in range(1, len(limits)):
        if limits[i] > limits[i - 1]:
            problems.append(f"limits increase in i at step {i}: {limits}")
            break
    if have_split:
        for attr in ("class_limit", "norm_limit"):
            seq = [getattr(s, attr) for s in sequences]
            if any(b > a for a, b in zip(seq, seq[1:])):
                problems.append(f"{attr} increases in i: {seq}")

    c = rho = tail = None
    if b_values[-1] == b_values[-2]:
        start = len(limits) - 1
        while start > 0 and limits[start - 1] == limits[-1]:
            start -= 1
        if all(s.settled for s in sequences[start:]):
            tail = limits[-1]
            if have_split:
                c, rho = sequences[-1].class_limit, sequences[-1].norm_limit
    return StabilizationReport(sequences, b_values, c, rho, tail, problems)
