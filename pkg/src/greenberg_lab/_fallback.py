"""Pure-Python trial kernel.

This module and the compiled ``_kernel`` extension implement the same
functions with the same random draws, so results are bit-identical whichever
backend is active.

Random numbers come from SplitMix64 used as a counter-based generator: the
``i``-th output of a stream with key ``k`` is ``mix64(k + (i + 1) * GAMMA)``.
Trial ``t`` of a run seeded with ``s`` uses the key
``mix64(mix64(s) + (t + 1) * GAMMA)``; distinct trials therefore get distinct
keys and streams never share state.

Subgroups of ``Z/m_0 + ... + Z/m_{r-1}`` are kept as the upper-triangular
Hermite basis of the preimage lattice in ``Z^r`` (which always contains
``diag(m)``). Membership is a single triangular reduction and adding a
generator is one extended-gcd sweep.
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, trial: int) -> int:
    return mix64(mix64(seed) + (trial + 1) * GAMMA)


class SplitMix64:
    """Counter-based stream: output ``i`` depends only on ``(key, i)``."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int) -> None:
        self.key = key & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self.key + self.counter * GAMMA)

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by rejection on 64-bit outputs."""
        threshold = ((1 << 64) - bound) % bound
        while True:
            u = self.next_u64()
            if u >= threshold:
                return u % bound


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


class Lattice:
    """Subgroup of ``Z/m_0 + ... + Z/m_{r-1}`` in Hermite form."""

    __slots__ = ("moduli", "rows")

    def __init__(self, moduli: tuple[int, ...]) -> None:
        self.moduli = moduli
        r = len(moduli)
        self.rows = [[moduli[i] if i == j else 0 for j in range(r)] for i in range(r)]

    def is_full(self) -> bool:
        return all(self.rows[j][j] == 1 for j in range(len(self.moduli)))

    def order(self) -> int:
        out = 1
        for j, m in enumerate(self.moduli):
            out *= m // self.rows[j][j]
        return out

    def contains(self, x: list[int]) -> bool:
        m = self.moduli
        x = [c % mj for c, mj in zip(x, m)]
        for j, row in enumerate(self.rows):
            xj = x[j]
            if not xj:
                continue
            d = row[j]
            if xj % d:
                return False
            q = xj // d
            for k in range(j, len(m)):
                x[k] = (x[k] - q * row[k]) % m[k]
        return True

    def insert(self, v: list[int]) -> None:
        m = self.moduli
        r = len(m)
        v = [c % mj for c, mj in zip(v, m)]
        for j in range(r):
            xj = v[j]
            if not xj:
                continue
            row = self.rows[j]
            d = row[j]
            if xj % d == 0:
                q = xj // d
                for k in range(j, r):
                    v[k] = (v[k] - q * row[k]) % m[k]
                continue
            g, a, b = _xgcd(d, xj)
            dg, xg = d // g, xj // g
            new_row = [0] * r
            for k in range(j, r):
                new_row[k] = (a * row[k] + b * v[k]) % m[k]
                v[k] = (dg * v[k] - xg * row[k]) % m[k]
            new_row[j] = g
            self.rows[j] = new_row


CASE_A, CASE_BI, CASE_BII = 0, 1, 2


def classify_draw(hc: Lattice, hr: Lattice, c: list[int], r: list[int]) -> int:
    """Apply one draw ``(c, r)`` to the pair of subgroups; return the case."""
    if not hc.contains(c):
        hc.insert(c)
        return CASE_A
    if not hr.contains(r):
        hr.insert(r)
        return CASE_BI
    return CASE_BII


def run_trial(class_moduli, norm_moduli, single, max_steps, key):
    """One trial; returns ``(b, n_a, n_bi, n_bii, diverged)``."""
    class_moduli = tuple(class_moduli)
    norm_moduli = tuple(norm_moduli)
    hc = Lattice(class_moduli)
    hr = Lattice(norm_moduli)
    rng = SplitMix64(key)
    counts = [0, 0, 0]
    grown = 0
    step = 0
    while not (hc.is_full() and hr.is_full()):
        if step >= max_steps:
            return step, counts[0], counts[1], counts[2], True
        step += 1
        draws = 1 if single else grown + 1
        for _ in range(draws):
            c = [rng.below(m) for m in class_moduli]
            r = [rng.below(m) for m in norm_moduli]
            case = classify_draw(hc, hr, c, r)
            counts[case] += 1
            if case != CASE_BII:
                grown += 1
    return step, counts[0], counts[1], counts[2], False


def run_trials(class_moduli, norm_moduli, single, max_steps, seed, start, stop):
    """Trials ``start..stop-1``; returns ``(histogram, (n_a, n_bi, n_bii), diverged)``."""
    hist: dict[int, int] = {}
    totals = [0, 0, 0]
    diverged = 0
    for t in range(start, stop):
        b, na, nbi, nbii, div = run_trial(
            class_moduli, norm_moduli, single, max_steps, stream_key(seed, t)
        )
        hist[b] = hist.get(b, 0) + 1
        totals[0] += na
        totals[1] += nbi
        totals[2] += nbii
        diverged += div
    return hist, tuple(totals), diverged
