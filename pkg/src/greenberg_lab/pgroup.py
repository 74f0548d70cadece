"""Finite abelian p-groups in invariant-factor form.

A group is stored as ``Z/p^e1 + ... + Z/p^er`` with ``e1 >= ... >= er >= 1``.
Elements are coordinate tuples reduced modulo the factor moduli, homomorphisms
are integer matrices acting on coordinate columns, and every structural
question (subgroup structure, quotients, kernels) is answered through the
Smith normal form of an integer relation matrix.

All arithmetic uses Python integers, so moduli of any size are handled
exactly; no value is ever truncated to a machine word.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

Matrix = list[list[int]]


class GroupError(ValueError):
    """Invalid group data or an element used with the wrong parent."""


class HomomorphismError(GroupError):
    """A matrix that does not define a homomorphism between the given groups."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def p_valuation(n: int, p: int) -> int:
    """Exponent of ``p`` in the nonzero integer ``n``."""
    if n == 0:
        raise ValueError("valuation of zero is infinite")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# Smith normal form
# ---------------------------------------------------------------------------

def _identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _snf_decompose(matrix: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(D, U, V)`` with ``U @ A @ V == D`` and ``D`` diagonal.

    ``U`` and ``V`` are unimodular. The nonzero diagonal entries come first,
    are positive, and form a divisibility chain. Pivots are chosen as the
    entry of smallest absolute value, first in row-major order.
    """
    a = [[int(x) for x in row] for row in matrix]
    m = len(a)
    n = len(a[0]) if m else 0
    if any(len(row) != n for row in a):
        raise ValueError("ragged matrix")
    u = _identity(m)
    v = _identity(n)

    def swap_rows(i: int, j: int) -> None:
        if i != j:
            a[i], a[j] = a[j], a[i]
            u[i], u[j] = u[j], u[i]

    def swap_cols(i: int, j: int) -> None:
        if i != j:
            for row in a:
                row[i], row[j] = row[j], row[i]
            for row in v:
                row[i], row[j] = row[j], row[i]

    def add_row(dst: int, src: int, q: int) -> None:
        # row_dst += q * row_src
        if q:
            ra, rs = a[dst], a[src]
            for k in range(n):
                ra[k] += q * rs[k]
            ua, us = u[dst], u[src]
            for k in range(m):
                ua[k] += q * us[k]

    def add_col(dst: int, src: int, q: int) -> None:
        if q:
            for row in a:
                row[dst] += q * row[src]
            for row in v:
                row[dst] += q * row[src]

    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                x = a[i][j]
                if x and (best is None or abs(x) < abs(a[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])

        while True:
            piv = a[t][t]
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // piv))
            rest = [i for i in range(t + 1, m) if a[i][t]]
            if rest:
                i = min(rest, key=lambda r: (abs(a[r][t]), r))
                if abs(a[i][t]) < abs(piv):
                    swap_rows(t, i)
                else:
                    add_row(t, i, 1)
                continue
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // piv))
            rest = [j for j in range(t + 1, n) if a[t][j]]
            if rest:
                j = min(rest, key=lambda c: (abs(a[t][c]), c))
                if abs(a[t][j]) < abs(piv):
                    swap_cols(t, j)
                else:
                    add_col(t, j, 1)
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % piv),
                None,
            )
            if bad is not None:
                add_row(t, bad, 1)
                continue
            break

        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            u[t] = [-x for x in u[t]]
    return a, u, v


def smith_normal_form(matrix: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Nontrivial invariant factors ``d1 | d2 | ...`` (each > 1) of ``matrix``.

    Zero diagonal entries (free rank) are not reported.

    >>> smith_normal_form([[3, 3], [0, 9]])
    (3, 9)
    >>> smith_normal_form([[1, 0], [0, 1]])
    ()
    """
    if not matrix or not len(matrix[0]):
        return ()
    d, _, _ = _snf_decompose(matrix)
    diag = [d[i][i] for i in range(min(len(d), len(d[0])))]
    return tuple(x for x in diag if x > 1)


def integer_nullspace(matrix: Sequence[Sequence[int]], ncols: int | None = None) -> Matrix:
    """A basis (list of column vectors) of ``{x in Z^n : A x = 0}``."""
    if not matrix:
        n = ncols or 0
        return [[int(i == j) for i in range(n)] for j in range(n)]
    d, _, v = _snf_decompose(matrix)
    m, n = len(d), len(d[0])
    rank = sum(1 for i in range(min(m, n)) if d[i][i])
    return [[v[i][j] for i in range(n)] for j in range(rank, n)]


# ---------------------------------------------------------------------------
# Groups and elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbelianPGroup:
    """``Z/p^e1 + ... + Z/p^er`` with exponents in non-increasing order."""

    p: int
    exponents: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "exponents", tuple(int(e) for e in self.exponents))
        if not is_prime(self.p):
            raise GroupError(f"p={self.p} is not prime")
        if any(e < 1 for e in self.exponents):
            raise GroupError(f"exponents must be positive: {self.exponents}")
        if any(a < b for a, b in zip(self.exponents, self.exponents[1:])):
            raise GroupError(f"exponents must be non-increasing: {self.exponents}")

    @classmethod
    def from_factors(cls, p: int, factors: Iterable[int]) -> "AbelianPGroup":
        """Build from invariant factors such as ``(3, 9)`` (any order, 1s ignored)."""
        exps = []
        for f in factors:
            if f == 1:
                continue
            e = p_valuation(f, p)
            if p**e != f:
                raise GroupError(f"factor {f} is not a power of {p}")
            exps.append(e)
        return cls(p, tuple(sorted(exps, reverse=True)))

    @classmethod
    def trivial(cls, p: int) -> "AbelianPGroup":
        return cls(p, ())

    @property
    def rank(self) -> int:
        return len(self.exponents)

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(self.p**e for e in self.exponents)

    @property
    def valuation(self) -> int:
        return sum(self.exponents)

    @property
    def order(self) -> int:
        return self.p**self.valuation

    def is_trivial(self) -> bool:
        return not self.exponents

    def element(self, *coords: int) -> "Element":
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        if len(coords) != self.rank:
            raise GroupError(f"expected {self.rank} coordinates, got {len(coords)}")
        return Element(self, tuple(int(c) % m for c, m in zip(coords, self.moduli)))

    @property
    def identity(self) -> "Element":
        return Element(self, (0,) * self.rank)

    def generators(self) -> list["Element"]:
        return [self.element(*[int(i == j) for j in range(self.rank)]) for i in range(self.rank)]

    def elements(self) -> Iterator["Element"]:
        """Every element, in lexicographic coordinate order."""
        for coords in itertools.product(*(range(m) for m in self.moduli)):
            yield Element(self, coords)

    def __str__(self) -> str:
        if not self.exponents:
            return "1"
        return " + ".join(f"Z/{self.p}^{e}" if e > 1 else f"Z/{self.p}" for e in self.exponents)


@dataclass(frozen=True)
class Element:
    parent: AbelianPGroup
    coords: tuple[int, ...]

    def _check(self, other: "Element") -> None:
        if other.parent != self.parent:
            raise GroupError("elements belong to different groups")

    def __add__(self, other: "Element") -> "Element":
        self._check(other)
        return self.parent.element(*(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "Element") -> "Element":
        self._check(other)
        return self.parent.element(*(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "Element":
        return self.parent.element(*(-a for a in self.coords))

    def __mul__(self, k: int) -> "Element":
        return self.parent.element(*(k * a for a in self.coords))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.coords)

    def order_valuation(self) -> int:
        """Exponent ``k`` such that the element has order ``p^k``."""
        p = self.parent.p
        v = 0
        for c, e in zip(self.coords, self.parent.exponents):
            if c:
                v = max(v, e - p_valuation(c, p))
        return v


# ---------------------------------------------------------------------------
# Subgroups and quotients
# ---------------------------------------------------------------------------

def _column_matrix(G: AbelianPGroup, gens: Sequence[Element]) -> Matrix:
    """``r x k`` matrix whose columns are the generator coordinates."""
    return [[g.coords[i] for g in gens] for i in range(G.rank)]


def _structure_of_span(G: AbelianPGroup, gens: Sequence[Element]) -> AbelianPGroup:
    if not gens or G.is_trivial():
        return AbelianPGroup.trivial(G.p)
    k = len(gens)
    # Z^k -> G has kernel {a : sum a_i g_i in diag(moduli) Z^r}.
    cols = _column_matrix(G, gens)
    moduli = G.moduli
    system = [cols[i] + [-moduli[j] if j == i else 0 for j in range(G.rank)] for i in range(G.rank)]
    relations = [vec[:k] for vec in integer_nullspace(system)]
    return AbelianPGroup.from_factors(G.p, smith_normal_form(relations))


@dataclass(frozen=True, eq=False)
class Subgroup:
    """The subgroup of ``parent`` spanned by ``generators``.

    Equality is equality of the underlying sets of elements.
    """

    parent: AbelianPGroup
    generators: tuple[Element, ...]
    structure: AbelianPGroup = field(repr=True)

    @property
    def order(self) -> int:
        return self.structure.order

    @property
    def valuation(self) -> int:
        return self.structure.valuation

    def is_trivial(self) -> bool:
        return self.structure.is_trivial()

    def is_whole(self) -> bool:
        return self.structure.valuation == self.parent.valuation

    def contains(self, x: Element) -> bool:
        if x.parent != self.parent:
            raise GroupError("element/parent mismatch")
        if x.is_zero():
            return True
        return _structure_of_span(self.parent, self.generators + (x,)).valuation == self.valuation

    def __contains__(self, x: Element) -> bool:
        return self.contains(x)

    def issubset(self, other: "Subgroup") -> bool:
        if other.parent != self.parent:
            raise GroupError("subgroups of different groups")
        return all(other.contains(g) for g in self.generators)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subgroup):
            return NotImplemented
        return (
            self.parent == other.parent
            and self.structure == other.structure
            and self.issubset(other)
        )

    def __hash__(self) -> int:
        return hash((self.parent, self.structure))

    def extend(self, *gens: Element) -> "Subgroup":
        return subgroup_generated(self.parent, list(self.generators) + list(gens))

    def elements(self) -> set[Element]:
        """Enumerate the subgroup (closure under addition); intended for small groups."""
        seen = {self.parent.identity}
        frontier = [self.parent.identity]
        while frontier:
            nxt = []
            for x in frontier:
                for g in self.generators:
                    y = x + g
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
            frontier = nxt
        return seen


def subgroup_generated(G: AbelianPGroup, gens: Iterable[Element]) -> Subgroup:
    """Subgroup of ``G`` spanned by ``gens`` together with its invariant factors."""
    gens = tuple(gens)
    for g in gens:
        if g.parent != G:
            raise GroupError("element/parent mismatch")
    kept = tuple(g for g in gens if not g.is_zero())
    return Subgroup(G, kept, _structure_of_span(G, kept))


def whole_group(G: AbelianPGroup) -> Subgroup:
    return Subgroup(G, tuple(G.generators()), G)


def trivial_subgroup(G: AbelianPGroup) -> Subgroup:
    return Subgroup(G, (), AbelianPGroup.trivial(G.p))


def quotient(G: AbelianPGroup, H: Subgroup) -> AbelianPGroup:
    """Invariant factors of ``G / H``."""
    if H.parent != G:
        raise GroupError("subgroup does not belong to this group")
    if G.is_trivial():
        return G
    cols = _column_matrix(G, H.generators)
    moduli = G.moduli
    rel = [cols[i] + [moduli[j] if j == i else 0 for j in range(G.rank)] for i in range(G.rank)]
    return AbelianPGroup.from_factors(G.p, smith_normal_form(rel))


# ---------------------------------------------------------------------------
# Homomorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PHom:
    """Homomorphism ``source -> target`` given by a ``target.rank x source.rank`` matrix.

    Column ``j`` is the image of the ``j``-th source generator. Entries are
    stored reduced modulo the target row moduli.
    """

    source: AbelianPGroup
    target: AbelianPGroup
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = [list(r) for r in self.matrix]
        if len(rows) != self.target.rank or any(len(r) != self.source.rank for r in rows):
            raise HomomorphismError(
                f"matrix shape must be {self.target.rank}x{self.source.rank}"
            )
        tm = self.target.moduli
        object.__setattr__(
            self, "matrix", tuple(tuple(int(x) % tm[i] for x in r) for i, r in enumerate(rows))
        )

    @classmethod
    def identity(cls, G: AbelianPGroup) -> "PHom":
        return cls(G, G, tuple(map(tuple, _identity(G.rank))))

    @classmethod
    def zero(cls, source: AbelianPGroup, target: AbelianPGroup) -> "PHom":
        return cls(source, target, tuple((0,) * source.rank for _ in range(target.rank)))

    def is_well_defined(self) -> bool:
        """Every column times its source order vanishes in the target."""
        sm, tm = self.source.moduli, self.target.moduli
        return all(
            (sm[j] * self.matrix[i][j]) % tm[i] == 0
            for i in range(self.target.rank)
            for j in range(self.source.rank)
        )

    def check(self) -> "PHom":
        if not self.is_well_defined():
            raise HomomorphismError("matrix does not define a homomorphism (order condition fails)")
        return self

    def __call__(self, x: Element) -> Element:
        if x.parent != self.source:
            raise GroupError("element/parent mismatch")
        return self.target.element(
            *(sum(a * c for a, c in zip(row, x.coords)) for row in self.matrix)
        )

    def compose(self, inner: "PHom") -> "PHom":
        """``self o inner``."""
        if inner.target != self.source:
            raise HomomorphismError("cannot compose: target/source mismatch")
        prod = [
            [sum(self.matrix[i][k] * inner.matrix[k][j] for k in range(self.source.rank))
             for j in range(inner.source.rank)]
            for i in range(self.target.rank)
        ]
        return PHom(inner.source, self.target, tuple(map(tuple, prod)))

    def __add__(self, other: "PHom") -> "PHom":
        self._same_shape(other)
        return PHom(self.source, self.target, tuple(
            tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.matrix, other.matrix)
        ))

    def __sub__(self, other: "PHom") -> "PHom":
        self._same_shape(other)
        return PHom(self.source, self.target, tuple(
            tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.matrix, other.matrix)
        ))

    def _same_shape(self, other: "PHom") -> None:
        if (self.source, self.target) != (other.source, other.target):
            raise HomomorphismError("homomorphisms between different groups")

    def power(self, k: int) -> "PHom":
        """``k``-fold composition of an endomorphism (square-and-multiply)."""
        if self.source != self.target:
            raise HomomorphismError("power of a non-endomorphism")
        if k < 0:
            raise ValueError("negative power")
        result = PHom.identity(self.source)
        base = self
        while k:
            if k & 1:
                result = base.compose(result)
            base = base.compose(base)
            k >>= 1
        return result

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.matrix)


def hom_kernel(f: PHom) -> Subgroup:
    """``{x in f.source : f(x) = 0}``."""
    f.check()
    S, T = f.source, f.target
    if S.is_trivial():
        return trivial_subgroup(S)
    if T.is_trivial():
        return whole_group(S)
    tm = T.moduli
    # Solve M x - diag(tm) y = 0 over Z and keep the x-part.
    system = [list(f.matrix[i]) + [-tm[j] if j == i else 0 for j in range(T.rank)]
              for i in range(T.rank)]
    gens = [S.element(*vec[:S.rank]) for vec in integer_nullspace(system)]
    return subgroup_generated(S, gens)


def hom_image(f: PHom) -> Subgroup:
    f.check()
    return subgroup_generated(f.target, [f(g) for g in f.source.generators()])


# ---------------------------------------------------------------------------
# Sampling and valuations
# ---------------------------------------------------------------------------

_INT64_MAX = 2**63 - 1


def _uniform_below(rng: np.random.Generator, m: int) -> int:
    if m <= _INT64_MAX:
        return int(rng.integers(0, m))
    # Moduli beyond int64: rejection sampling on raw bytes.
    nbytes = (m.bit_length() + 7) // 8
    limit = (256**nbytes // m) * m
    while True:
        x = int.from_bytes(rng.bytes(nbytes), "little")
        if x < limit:
            return x % m


def uniform_element(G: AbelianPGroup, rng: np.random.Generator) -> Element:
    """Exactly uniform element of ``G``: independent uniform coordinates."""
    return Element(G, tuple(_uniform_below(rng, m) for m in G.moduli))


def order_valuation(G: AbelianPGroup) -> int:
    return G.valuation
