"""Random-draw model of the filtration algorithm.

Each step draws a pair ``(c, r)`` uniformly from ``class_part x norm_part``
(standing in for the class of a random fundamental ideal and the image of a
generator in the regulator quotient). The running subgroups ``H_C`` and
``H_R`` grow as follows:

* ``c`` not in ``H_C``: case A, ``H_C <- <H_C, c>`` (class factor drops);
* otherwise ``r`` not in ``H_R``: case B(i), ``H_R <- <H_R, r>`` (norm factor drops);
* otherwise: case B(ii), nothing changes.

The number of steps until both subgroups are full is the simulated ``b``.
``T_k`` is modeled as ``class_part x norm_part x junk`` and the junk factor
never influences the state.

Trials run in a compiled kernel when the ``_kernel`` extension is built and
in ``_fallback`` otherwise; both consume identical random streams (see
``_fallback`` for the generator) and give identical results.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

from . import _fallback
from .formulas import FieldInstance, InconsistentDataError
from .pgroup import AbelianPGroup, Element, Subgroup, trivial_subgroup

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

if os.environ.get("GREENBERG_LAB_PURE_PYTHON"):
    _compiled = None

BACKEND = "cython" if _compiled is not None else "python"

DEFAULT_MAX_STEPS = 10_000
DEFAULT_ORACLE_MAX_ORDER = 3**4
THREADS_ENV = "GREENBERG_LAB_THREADS"


class Policy(str, Enum):
    SINGLE = "single"
    SATURATE = "saturate"


class Case(str, Enum):
    A = "A"
    BI = "B(i)"
    BII = "B(ii)"


class LatticeTooLargeError(ValueError):
    """The exact oracle was asked for a model beyond its size limit."""


@dataclass(frozen=True)
class SimModel:
    p: int
    class_part: AbelianPGroup
    norm_part: AbelianPGroup
    junk_valuation: int = 0
    policy: Policy = Policy.SINGLE
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self) -> None:
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.class_part.p != self.p or self.norm_part.p != self.p:
            raise InconsistentDataError("model parts must be p-groups for the model's p")
        if self.junk_valuation < 0:
            raise InconsistentDataError("junk valuation must be non-negative")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    @classmethod
    def from_exponents(cls, p: int, class_exponents=(), norm_exponents=(), **kw) -> "SimModel":
        return cls(p, AbelianPGroup(p, tuple(class_exponents)),
                   AbelianPGroup(p, tuple(norm_exponents)), **kw)

    @property
    def is_empty(self) -> bool:
        return self.class_part.is_trivial() and self.norm_part.is_trivial()

    @property
    def lattice_valuation(self) -> int:
        return self.class_part.valuation + self.norm_part.valuation


def make_model(inst: FieldInstance, policy: Policy | str = Policy.SINGLE,
               max_steps: int = DEFAULT_MAX_STEPS) -> SimModel:
    """Model with ``class_part = C_k``, ``norm_part = R_k^nr`` and the rest of ``T_k`` as junk."""
    missing = [name for name in ("ck", "rk_nr", "tk") if getattr(inst, name) is None]
    if missing:
        raise InconsistentDataError(f"simulation needs groups: {', '.join(missing)}")
    junk = inst.tk.valuation - inst.ck.valuation - inst.rk_nr.valuation
    if junk < 0:
        raise InconsistentDataError(
            f"#T_k is smaller than #C_k * #R_k^nr (junk valuation {junk})")
    return SimModel(inst.p, inst.ck, inst.rk_nr, junk, Policy(policy), max_steps)


# ---------------------------------------------------------------------------
# Reference path on Subgroup objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimState:
    H_C: Subgroup
    H_R: Subgroup
    step: int = 0
    case_counts: tuple[int, int, int] = (0, 0, 0)

    @classmethod
    def initial(cls, model: SimModel) -> "SimState":
        return cls(trivial_subgroup(model.class_part), trivial_subgroup(model.norm_part))

    def is_terminal(self) -> bool:
        return self.H_C.is_whole() and self.H_R.is_whole()


def _draw(G: AbelianPGroup, stream: _fallback.SplitMix64) -> Element:
    return Element(G, tuple(stream.below(m) for m in G.moduli))


def draw_step(model: SimModel, state: SimState,
              stream: _fallback.SplitMix64) -> tuple[SimState, Case]:
    """One draw of ``(c, r)`` and the resulting case; ``step`` is left unchanged."""
    c = _draw(model.class_part, stream)
    r = _draw(model.norm_part, stream)
    a, bi, bii = state.case_counts
    if not state.H_C.contains(c):
        return SimState(state.H_C.extend(c), state.H_R, state.step, (a + 1, bi, bii)), Case.A
    if not state.H_R.contains(r):
        return SimState(state.H_C, state.H_R.extend(r), state.step, (a, bi + 1, bii)), Case.BI
    return SimState(state.H_C, state.H_R, state.step, (a, bi, bii + 1)), Case.BII


@dataclass(frozen=True)
class TrialResult:
    b: int
    case_counts: tuple[int, int, int]
    diverged: bool = False


def reference_trial(model: SimModel, key: int) -> TrialResult:
    """A trial driven by :func:`draw_step`; slow, used to cross-check the kernels."""
    stream = _fallback.SplitMix64(key)
    state = SimState.initial(model)
    grown = 0
    while not state.is_terminal():
        if state.step >= model.max_steps:
            return TrialResult(state.step, state.case_counts, True)
        draws = 1 if model.policy is Policy.SINGLE else grown + 1
        state = SimState(state.H_C, state.H_R, state.step + 1, state.case_counts)
        for _ in range(draws):
            state, case = draw_step(model, state, stream)
            grown += case is not Case.BII
    return TrialResult(state.step, state.case_counts, False)


# ---------------------------------------------------------------------------
# Kernel dispatch
# ---------------------------------------------------------------------------

def _backend_for(model: SimModel):
    if _compiled is None:
        return _fallback
    moduli = model.class_part.moduli + model.norm_part.moduli
    if (max(model.class_part.rank, model.norm_part.rank) > _compiled.MAX_RANK
            or any(m >= _compiled.MAX_MODULUS for m in moduli)):
        # int64 kernel cannot hold these; Python integers can
        return _fallback
    return _compiled


def trial_key(seed: int, trial: int) -> int:
    return _fallback.stream_key(seed, trial)


def run_trial(model: SimModel, key: int) -> TrialResult:
    """One trial on the stream with the given key (see :func:`trial_key`)."""
    impl = _backend_for(model)
    b, na, nbi, nbii, div = impl.run_trial(
        model.class_part.moduli, model.norm_part.moduli,
        model.policy is Policy.SINGLE, model.max_steps, key)
    return TrialResult(int(b), (int(na), int(nbi), int(nbii)), bool(div))


@dataclass(frozen=True)
class BDistribution:
    trials: int
    histogram: Mapping[int, int]
    divergence_count: int = 0
    case_totals: tuple[int, int, int] = (0, 0, 0)
    model_assumptions: tuple[str, ...] = field(default=(
        "T_k modeled as a direct product class x norm x junk",
        "draws uniform and independent in class and norm parts",
    ))

    @property
    def mean(self) -> float:
        return float(Fraction(sum(b * k for b, k in self.histogram.items()), self.trials))

    @property
    def variance(self) -> float:
        """Unbiased sample variance of ``b``."""
        if self.trials < 2:
            return 0.0
        s1 = sum(b * k for b, k in self.histogram.items())
        s2 = sum(b * b * k for b, k in self.histogram.items())
        return float(Fraction(s2 * self.trials - s1 * s1, self.trials * (self.trials - 1)))

    @property
    def std_error(self) -> float:
        return (self.variance / self.trials) ** 0.5

    @property
    def prob_b_le_1(self) -> float:
        return (self.histogram.get(0, 0) + self.histogram.get(1, 0)) / self.trials


def thread_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer")
        return n
    return os.cpu_count() or 1


def monte_carlo(model: SimModel, trials: int, seed: int, threads: int | None = None) -> BDistribution:
    """Simulate ``trials`` independent trials; trial ``t`` uses ``trial_key(seed, t)``.

    The result depends only on ``(model, trials, seed)``, not on ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    threads = thread_count() if threads is None else threads
    impl = _backend_for(model)
    args = (model.class_part.moduli, model.norm_part.moduli,
            model.policy is Policy.SINGLE, model.max_steps, seed)
    nchunks = max(1, min(trials, threads * 4))
    bounds = [trials * j // nchunks for j in range(nchunks + 1)]
    chunks = list(zip(bounds, bounds[1:]))

    def work(chunk):
        return impl.run_trials(*args, chunk[0], chunk[1])

    if threads > 1 and nchunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]

    hist: dict[int, int] = {}
    totals = [0, 0, 0]
    diverged = 0
    for h, counts, div in parts:
        for b, k in h.items():
            hist[int(b)] = hist.get(int(b), 0) + int(k)
        for j in range(3):
            totals[j] += int(counts[j])
        diverged += int(div)
    return BDistribution(trials, dict(sorted(hist.items())), diverged, tuple(totals))


# ---------------------------------------------------------------------------
# Exact oracle
# ---------------------------------------------------------------------------

def _span_with(H: frozenset, x: tuple, moduli: tuple) -> frozenset:
    """``<H, x>`` for a subgroup ``H`` given as a set of coordinate tuples."""
    out = set(H)
    mult = x
    while True:
        shifted = {tuple((a + b) % m for a, b, m in zip(h, mult, moduli)) for h in H}
        if shifted <= out:
            return frozenset(out)
        out |= shifted
        mult = tuple((a + b) % m for a, b, m in zip(mult, x, moduli))


def exact_expected_steps(model: SimModel, max_order: int = DEFAULT_ORACLE_MAX_ORDER) -> Fraction:
    """Expected ``b`` under the single-draw policy, as an exact fraction.

    Builds the absorbing chain on pairs of subgroups (enumerated as sets of
    elements) and solves for the absorption time state by state; the chain
    only moves up the subgroup lattice, so each state depends on larger ones.
    """
    if model.policy is not Policy.SINGLE:
        raise ValueError("the exact oracle covers the single-draw policy only")
    size = model.class_part.order * model.norm_part.order
    if size > max_order:
        raise LatticeTooLargeError(
            f"#class_part * #norm_part = {size} exceeds oracle bound {max_order}")
    cm, nm = model.class_part.moduli, model.norm_part.moduli
    C = [e.coords for e in model.class_part.elements()]
    R = [e.coords for e in model.norm_part.elements()]
    zero_c, zero_r = frozenset({(0,) * len(cm)}), frozenset({(0,) * len(nm)})
    nC, nR = len(C), len(R)

    @lru_cache(maxsize=None)
    def expected(hc: frozenset, hr: frozenset) -> Fraction:
        if len(hc) == nC and len(hr) == nR:
            return Fraction(0)
        acc = Fraction(1)
        for c in C:
            if c not in hc:
                acc += Fraction(1, nC) * expected(_span_with(hc, c, cm), hr)
        stay_c = Fraction(len(hc), nC)
        for r in R:
            if r not in hr:
                acc += stay_c * Fraction(1, nR) * expected(hc, _span_with(hr, r, nm))
        stay = stay_c * Fraction(len(hr), nR)
        return acc / (1 - stay)

    return expected(zero_c, zero_r)
