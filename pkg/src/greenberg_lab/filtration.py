"""Unscrewing filtration of a module under a cyclic p-group.

For ``M`` with generator ``sigma`` of ``G = <sigma>`` (order dividing ``p^n``)
the filtration is ``M^0 = 1`` and ``M^{i+1}/M^i = (M/M^i)^G``, which is the
same as ``M^i = Ker (1 - sigma)^i``. The length ``b`` is the least ``i`` with
``M^i = M``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .pgroup import (
    AbelianPGroup,
    GroupError,
    PHom,
    Subgroup,
    hom_kernel,
    subgroup_generated,
    trivial_subgroup,
)

DEFAULT_ENUMERATION_BOUND = 3**6


class InvalidModuleError(GroupError):
    """``sigma`` is not an automorphism of order dividing ``p^n``."""


@dataclass(frozen=True)
class GModule:
    group: AbelianPGroup
    sigma: PHom
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InvalidModuleError("layer index n must be non-negative")
        if self.sigma.source != self.group or self.sigma.target != self.group:
            raise InvalidModuleError("sigma must be an endomorphism of the group")
        if not self.sigma.is_well_defined():
            raise InvalidModuleError("sigma matrix does not define a homomorphism")
        if not hom_kernel(self.sigma).is_trivial():
            raise InvalidModuleError("sigma is not an automorphism (nontrivial kernel)")
        if self.sigma.power(self.group.p**self.n) != PHom.identity(self.group):
            raise InvalidModuleError(f"sigma^(p^{self.n}) is not the identity")

    @classmethod
    def from_matrix(cls, p: int, exponents: Sequence[int], sigma: Sequence[Sequence[int]],
                    n: int) -> "GModule":
        G = AbelianPGroup(p, tuple(exponents))
        return cls(G, PHom(G, G, tuple(tuple(r) for r in sigma)), n)

    @property
    def p(self) -> int:
        return self.group.p

    def one_minus_sigma(self) -> PHom:
        return PHom.identity(self.group) - self.sigma


@dataclass(frozen=True)
class LevelRecord:
    """Step ``i``: valuations of ``#M^i`` and ``#(M^{i+1}/M^i)``.

    ``class_factor``/``norm_factor`` split the quotient valuation when that
    arithmetic decomposition is known; a module alone does not determine it.
    """

    i: int
    level_order: int
    quotient_order: int
    class_factor: int | None = None
    norm_factor: int | None = None


@dataclass(frozen=True)
class FiltrationTrace:
    levels: tuple[LevelRecord, ...]
    b: int
    total_order: int

    @property
    def steps(self) -> tuple[LevelRecord, ...]:
        """Records with a nontrivial quotient (``i < b``)."""
        return self.levels[: self.b]

    @property
    def quotient_orders(self) -> tuple[int, ...]:
        return tuple(r.quotient_order for r in self.steps)

    @classmethod
    def from_quotients(cls, quotients: Sequence[int],
                       factors: Sequence[tuple[int, int]] | None = None) -> "FiltrationTrace":
        """Trace from the quotient valuations of the nontrivial steps.

        ``factors`` optionally gives the ``(class, norm)`` split of each step.
        """
        if factors is not None and len(factors) != len(quotients):
            raise ValueError("one (class, norm) pair per quotient is required")
        records = []
        level = 0
        for i, q in enumerate(quotients):
            cf, nf = factors[i] if factors is not None else (None, None)
            if cf is not None and cf + nf != q:
                raise ValueError(f"step {i}: class + norm factor != quotient valuation")
            records.append(LevelRecord(i, level, q, cf, nf))
            level += q
        b = len(quotients)
        zero = (0, 0) if factors is not None else (None, None)
        records.append(LevelRecord(b, level, 0, *zero))
        return cls(tuple(records), b, level)


def filtration_level(M: GModule, i: int) -> Subgroup:
    """``M^i = Ker (1 - sigma)^i``."""
    if i < 0:
        raise ValueError("filtration index must be non-negative")
    if i == 0:
        return trivial_subgroup(M.group)
    return hom_kernel(M.one_minus_sigma().power(i))


def iter_levels(M: GModule) -> Iterator[tuple[int, Subgroup]]:
    """Yield ``(i, M^i)`` for ``i = 0..b`` (the last one is the whole module)."""
    f = M.one_minus_sigma()
    power = PHom.identity(M.group)
    total = M.group.valuation
    i = 0
    while True:
        level = trivial_subgroup(M.group) if i == 0 else hom_kernel(power)
        yield i, level
        if level.valuation == total:
            return
        if i > total:
            raise RuntimeError("filtration failed to reach the whole module")
        power = f.compose(power)
        i += 1


def filtration_trace(M: GModule) -> FiltrationTrace:
    vals = [level.valuation for _, level in iter_levels(M)]
    b = len(vals) - 1
    records = [LevelRecord(i, vals[i], vals[i + 1] - vals[i]) for i in range(b)]
    records.append(LevelRecord(b, vals[b], 0))
    return FiltrationTrace(tuple(records), b, M.group.valuation)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    step: int | None = None
    detail: str = ""


@dataclass
class PropertyReport:
    checks: list[CheckResult] = field(default_factory=list)
    trace: FiltrationTrace | None = None

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, name: str, passed: bool, step: int | None = None, detail: str = "") -> None:
        self.checks.append(CheckResult(name, bool(passed), step, detail))


def enumerate_elements(G: AbelianPGroup) -> np.ndarray:
    """All elements of ``G`` as rows of an ``(#G, rank)`` integer array."""
    if G.is_trivial():
        return np.zeros((1, 0), dtype=object)
    grids = np.meshgrid(*(np.arange(m, dtype=np.int64) for m in G.moduli), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _brute_kernel_size(M: GModule, i: int) -> int:
    """``#{x : (1 - sigma)^i x = 0}`` by applying the matrix to every element."""
    G = M.group
    if G.is_trivial():
        return 1
    elems = enumerate_elements(G)
    if max(G.moduli) ** 2 * G.rank >= 2**62:
        elems = elems.astype(object)
    mat = np.array(M.one_minus_sigma().matrix, dtype=elems.dtype)
    moduli = np.array(G.moduli, dtype=elems.dtype)
    x = elems
    for _ in range(i):
        x = (x @ mat.T) % moduli
    return int(np.count_nonzero(~x.any(axis=1)))


def _apply_power(f: PHom, x, i: int):
    for _ in range(i):
        x = f(x)
    return x


def verify_filtration_properties(M: GModule,
                                 enumeration_bound: int = DEFAULT_ENUMERATION_BOUND) -> PropertyReport:
    """Check the filtration properties step by step.

    * kernel: ``M^i`` equals ``{x : (1 - sigma)^i x = 0}`` by enumeration when
      ``#M <= enumeration_bound`` (generators annihilated and equal counts);
    * nesting and non-increasing quotient orders;
    * ``1 - sigma`` maps ``M^{i+1}`` into ``M^i`` and induces injections
      ``M^{i+1}/M^i -> M^i/M^{i-1}`` (checked by counting the image);
    * product formula: the quotient valuations sum to ``v_p(#M)``;
    * ``M^1`` is the fixed-point subgroup.
    """
    report = PropertyReport()
    levels = [lv for _, lv in iter_levels(M)]
    trace = filtration_trace(M)
    report.trace = trace
    b = trace.b
    f = M.one_minus_sigma()
    G = M.group

    if G.order <= enumeration_bound:
        for i, level in enumerate(levels):
            brute = _brute_kernel_size(M, i)
            inside = all(_apply_power(f, g, i).is_zero() for g in level.generators)
            report.add("kernel", inside and brute == level.order, i,
                       "" if brute == level.order else f"#brute={brute} #level={level.order}")
        report.add("stationary", _brute_kernel_size(M, b + 1) == G.order, b + 1)

    q = trace.quotient_orders
    for i in range(len(levels) - 1):
        report.add("nested", levels[i].issubset(levels[i + 1]), i)
        report.add("positive-quotient", levels[i + 1].valuation > levels[i].valuation, i)
    for i in range(1, len(q)):
        report.add("non-increasing", q[i] <= q[i - 1], i,
                   "" if q[i] <= q[i - 1] else f"{q[i]} > {q[i - 1]}")

    for i in range(1, b):
        upper, mid, low = levels[i + 1], levels[i], levels[i - 1]
        imgs = [f(g) for g in upper.generators]
        report.add("maps-into", all(mid.contains(y) for y in imgs), i)
        spanned = subgroup_generated(G, list(low.generators) + imgs)
        image_val = spanned.valuation - low.valuation
        report.add("injective", image_val == q[i], i,
                   "" if image_val == q[i] else f"image valuation {image_val} != {q[i]}")

    report.add("product-formula", sum(q) == G.valuation, None,
               f"sum={sum(q)} total={G.valuation}")
    report.add("bounded-length", b <= G.valuation, None)
    if b >= 1:
        fixed = all(M.sigma(g) == g for g in levels[1].generators)
        report.add("fixed-points", fixed and hom_kernel(f) == levels[1], 1)
    return report


# ---------------------------------------------------------------------------
# Random modules (test and benchmark generator)
# ---------------------------------------------------------------------------

def random_endomorphism(G: AbelianPGroup, rng: np.random.Generator) -> PHom:
    """Uniform endomorphism: entry ``(i, j)`` ranges over ``Hom(Z/p^ej, Z/p^ei)``."""
    p, e = G.p, G.exponents
    rows = []
    for i in range(G.rank):
        row = []
        for j in range(G.rank):
            shift = max(0, e[i] - e[j])
            row.append(p**shift * int(rng.integers(0, p ** min(e[i], e[j]))))
        rows.append(tuple(row))
    return PHom(G, G, tuple(rows))


def _unipotent_mod_p(sigma: PHom) -> bool:
    """Whether ``sigma`` acts unipotently on ``M/pM``.

    Automorphisms trivial on the Frattini quotient form a p-group, so an
    automorphism has p-power order exactly when this holds.
    """
    p, r = sigma.source.p, sigma.source.rank
    if r == 0:
        return True
    nil = (np.array(sigma.matrix, dtype=np.int64) - np.eye(r, dtype=np.int64)) % p
    acc = np.eye(r, dtype=np.int64)
    for _ in range(r):
        acc = (acc @ nil) % p
    return not acc.any()


def random_gmodule(G: AbelianPGroup, rng: np.random.Generator, max_n: int = 3,
                   max_tries: int = 10_000) -> GModule:
    """Rejection-sample an automorphism of ``p``-power order at most ``p^max_n``.

    ``n`` is then drawn uniformly between that order's exponent and ``max_n``.
    """
    identity = PHom.identity(G)
    for _ in range(max_tries):
        sigma = random_endomorphism(G, rng)
        if not _unipotent_mod_p(sigma):
            continue
        power = sigma
        for k in range(max_n + 1):
            if power == identity:
                if not hom_kernel(sigma).is_trivial():
                    break
                n = int(rng.integers(k, max_n + 1))
                return GModule(G, sigma, n)
            power = power.power(G.p)
    return GModule(G, identity, int(rng.integers(0, max_n + 1)))
