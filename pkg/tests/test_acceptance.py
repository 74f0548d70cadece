"""Acceptance criteria 1-8; each test records one PASS/FAIL summary line."""
import itertools
import os
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from greenberg_lab import stochastic as S
from greenberg_lab.filtration import _brute_kernel_size, filtration_level, random_gmodule, verify_filtration_properties
from greenberg_lab.formulas import (
    FieldInstance,
    FitStatus,
    IwasawaInvariants,
    Layer,
    check_theorem_bounds,
    chevalley_order,
    iwasawa_fit,
    rebase_invariants,
    step_quotient_order,
)
from greenberg_lab.io import parse_instance
from greenberg_lab.pgroup import AbelianPGroup


def cli(*argv, env=None):
    return subprocess.run([sys.executable, "-m", "greenberg_lab", *map(str, argv)],
                          capture_output=True, text=True, env={**os.environ, **(env or {})})


def partitions(n, largest=None):
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for k in range(min(n, largest), 0, -1):
        for rest in partitions(n - k, k):
            yield (k,) + rest


def test_1_fixture_reproduction(fixtures_dir, tmp_path, acceptance_log):
    out = tmp_path / "trace.csv"
    t0 = time.perf_counter()
    proc = cli("filtrate", "--module", fixtures_dir / "module_27_3.json", "--csv", out)
    elapsed = time.perf_counter() - t0
    rows = out.read_text().splitlines()[1:]
    quotients = tuple(int(r.split(",")[2]) for r in rows)
    ok = proc.returncode == 0 and "b = 2" in proc.stdout and quotients == (3, 1) and elapsed < 1.0
    acceptance_log(1, ok, f"filtrate Z/27+Z/3: b={len(rows)} quotients={quotients} "
                          f"in {elapsed:.2f}s (< 1 s)")
    assert ok


def test_2_filtration_suite(acceptance_log):
    rng = np.random.default_rng(20260101)
    shapes = {p: [s for k in range(1, 7) for s in partitions(k)] for p in (2, 3, 5)}
    failures = 0
    t0 = time.perf_counter()
    for j in range(1000):
        p = (2, 3, 5)[j % 3]
        G = AbelianPGroup(p, shapes[p][int(rng.integers(len(shapes[p])))])
        M = random_gmodule(G, rng)
        report = verify_filtration_properties(M, enumeration_bound=p**6)
        t = report.trace
        kernel_ok = all(_brute_kernel_size(M, i) == filtration_level(M, i).order
                        for i in range(t.b + 1))
        q = t.quotient_orders
        ok = (report.ok and kernel_ok and all(b <= a for a, b in zip(q, q[1:]))
              and sum(q) == G.valuation and t.b <= G.valuation)
        failures += not ok
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 60
    acceptance_log(2, ok, f"1000 random modules (p in 2,3,5; #M <= p^6): {failures} failures "
                          f"in {elapsed:.1f}s (< 60 s)")
    assert ok


def test_3_formula_consistency(acceptance_log):
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(500):
        ck, n, s = int(rng.integers(0, 20)), int(rng.integers(0, 10)), int(rng.integers(1, 6))
        u = int(rng.integers(0, n * (s - 1) + 1))
        bad += step_quotient_order(ck, 0, n, s, u).total != chevalley_order(ck, n, s, u)
        lam, mu, nu = int(rng.integers(0, 11)), int(rng.integers(0, 11)), int(rng.integers(-20, 21))
        a, b, p = int(rng.integers(0, 6)), int(rng.integers(0, 6)), int(rng.choice([2, 3, 5, 7]))
        bad += rebase_invariants(*rebase_invariants(lam, mu, nu, a, p), b, p) != \
            rebase_invariants(lam, mu, nu, a + b, p)
    acceptance_log(3, bad == 0, f"500 random inputs: step-0 quotient = ambiguous order and "
                                f"rebase composition, {bad} mismatches")
    assert bad == 0


def test_4_iwasawa_fitting(fixtures_dir, acceptance_log):
    proc = cli("fit", "--instance", fixtures_dir / "q6559.json")
    no_fit = proc.returncode == 0 and "status: no-fit" in proc.stdout
    rng = np.random.default_rng(4)
    misses = 0
    done = 0
    while done < 200:
        lam, mu, nu = int(rng.integers(0, 11)), int(rng.integers(0, 11)), int(rng.integers(-20, 21))
        p = int(rng.choice([2, 3, 5]))
        vals = [lam * n + mu * p**n + nu for n in range(4)]
        if min(vals) < 0:
            continue
        f = iwasawa_fit(vals, p)
        misses += f.status is not FitStatus.EXACT or (f.lam, f.mu, f.nu) != (lam, mu, nu)
        done += 1
    ok = no_fit and misses == 0
    acceptance_log(4, ok, f"q6559 orders (2,4,5) -> {'no-fit' if no_fit else 'UNEXPECTED'}; "
                          f"200 round-trips, {misses} misses")
    assert ok


def _synthetic_tower(rng, p=3):
    g = int(rng.integers(1, 4))
    ck_val = int(rng.integers(0, g + 1))
    inv = IwasawaInvariants(int(rng.integers(0, 3)), int(rng.integers(0, 2)), int(rng.integers(1, 5)))
    bs, mids, prev = [], [], 0
    for n in range(4):
        mid = inv.value(n, p)
        lo = max(prev, -(-mid // g))
        prev = int(rng.integers(lo, mid + 1))
        bs.append(prev)
        mids.append(mid)
    return g, ck_val, inv, bs, mids


def _instance(g, ck_val, inv, bs, mids, p=3):
    ck = AbelianPGroup(p, (1,) * ck_val)
    rk_nr = AbelianPGroup(p, (1,) * (g - ck_val))
    layers = tuple(Layer(n, order_valuation=m, b=b) for n, (b, m) in enumerate(zip(bs, mids)))
    return FieldInstance("synthetic", p, 1, ck=ck, rk_nr=rk_nr, layers=layers, invariants=inv)


def test_5_bound_checking(acceptance_log):
    rng = np.random.default_rng(5)
    wrong_accept = wrong_reject = 0
    for k in range(100):
        g, ck_val, inv, bs, mids = _synthetic_tower(rng)
        wrong_reject += not check_theorem_bounds(_instance(g, ck_val, inv, bs, mids)).ok
        mutated = list(bs)
        kind = k % 3
        if kind == 0:  # break monotonicity
            n = int(rng.integers(1, 4))
            mutated[n] = mutated[n - 1] - 1 if mutated[n - 1] > 0 else -1
            if mutated[n] < 0:
                mutated[n - 1], mutated[n] = mutated[n] + 2, 0
        elif kind == 1:  # break b_n <= formula value
            n = int(rng.integers(0, 4))
            mutated[n] = mids[n] + 1
        else:  # break formula value <= genus * b_n
            n = int(rng.integers(0, 4))
            mutated[n] = -(-mids[n] // g) - 1
        wrong_accept += check_theorem_bounds(_instance(g, ck_val, inv, mutated, mids)).ok
    ok = wrong_accept == wrong_reject == 0
    acceptance_log(5, ok, f"100 consistent towers + 100 mutations: {wrong_reject} false rejects, "
                          f"{wrong_accept} false accepts")
    assert ok


def test_6_oracle_equivalence(acceptance_log):
    t0 = time.perf_counter()
    shapes = [(c, r) for total in range(5) for a in range(total + 1)
              for c in partitions(a) for r in partitions(total - a)]
    outside = []
    specific = {}
    for c, r in shapes:
        model = S.SimModel.from_exponents(3, c, r)
        exact = S.exact_expected_steps(model)
        d = S.monte_carlo(model, 10_000, 606)
        se = d.std_error
        if abs(d.mean - float(exact)) > 3 * se if se > 0 else d.mean != exact:
            outside.append((c, r, d.mean, exact))
        specific[(c, r)] = exact
    elapsed = time.perf_counter() - t0
    values_ok = (specific[((), (1,))] == Fraction(3, 2)
                 and specific[((1, 1), ())] == Fraction(21, 8))
    ok = len(shapes) == 38 and not outside and values_ok and elapsed < 120
    acceptance_log(6, ok, f"{len(shapes)} shapes over p=3: {len(outside)} outside 3 SE; "
                          f"norm Z/3 -> {specific[((), (1,))]}, class Z/3+Z/3 -> "
                          f"{specific[((1, 1), ())]}; {elapsed:.1f}s (< 120 s)")
    assert ok, outside


def test_7_determinism(fixtures_dir, tmp_path, acceptance_log):
    paths = []
    for threads in ("1", str(os.cpu_count() or 1), "1", "5"):
        out = tmp_path / f"hist_{len(paths)}.csv"
        proc = cli("simulate", "--instance", fixtures_dir / "class_z3z3.json", "--trials", 20000,
                   "--seed", 77, "--csv", out, env={S.THREADS_ENV: threads})
        assert proc.returncode == 0, proc.stderr
        paths.append(out.read_bytes())
    ok = len(set(paths)) == 1
    acceptance_log(7, ok, f"simulate CSV identical across repeats and thread counts "
                          f"1/{os.cpu_count()}/5 (backend {S.BACKEND})")
    assert ok


def test_8_trivial_instance(fixtures_dir, acceptance_log):
    inst = parse_instance(fixtures_dir / "trivial.json")
    d = S.monte_carlo(S.make_model(inst), 1000, 8)
    ok = d.prob_b_le_1 == 1.0 and d.histogram == {0: 1000} and check_theorem_bounds(inst).ok
    acceptance_log(8, ok, f"trivial instance: P(b <= 1) = {d.prob_b_le_1}, histogram {d.histogram}")
    assert ok
