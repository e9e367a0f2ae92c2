"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line to the terminal. Run
``pytest tests/test_acceptance.py -v`` to see the summary.
"""

import io
import time

import numpy as np
import pytest
from scipy import integrate, stats

from oracles import behavior_table, ctc_mode, enumerate_paths, random_dag, random_posterior, random_sfst
from sfst.algebra import conflate_epsilon_cycles, grand_total, normalize, shortest_path
from sfst.cli import main
from sfst.ctc import (
    CtcPosterior,
    DecodeConfig,
    StopReason,
    Strategy,
    build_labeling_fst,
    build_lattice,
    collapse_labeling,
    ctc_decode,
    labeling_probability,
    naive_decode,
    occurrence_exceed_prob,
    unseen_mode_prob,
    write_posterior,
)
from sfst.fst import EPSILON, Arc, Wfst, is_epsilon_acyclic, write_text
from sfst.sampling import Rng, Sampler, rand_paths


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return emit


def cycle_graph(m, w=0.5):
    f = Wfst()
    f.add_states(m)
    f.set_start(0)
    for i in range(m):
        f.add_arc(i, Arc(EPSILON, EPSILON, w, (i + 1) % m))
    f.set_final(0, 1.0 - w)
    return f


def lattice_suite(count=500, seed=2024):
    rng = np.random.default_rng(seed)
    suite = []
    for _ in range(count):
        T, L = int(rng.integers(1, 7)), int(rng.integers(2, 5))
        post = CtcPosterior(random_posterior(rng, T, L), [f"s{j}" for j in range(L)], L - 1)
        mode, _ = ctc_mode(post.probs, post.blank_id)
        suite.append((post, build_lattice(post), build_labeling_fst(L, post.blank_id), mode))
    return suite


@pytest.fixture(scope="module")
def suite():
    return lattice_suite()


def decode_suite(suite, strategy):
    results = []
    for i, (_, lattice, B, _) in enumerate(suite):
        results.append(ctc_decode(lattice, B, DecodeConfig(600, 0.01, strategy, seed=i)))
    return results


def soundness(suite, results):
    certain_failures = sum(
        r.stop_reason is StopReason.MODE_CERTAIN and r.labeling != mode for r, (*_, mode) in zip(results, suite)
    )
    accuracy = np.mean([r.labeling == mode for r, (*_, mode) in zip(results, suite)])
    return certain_failures, accuracy


def test_criterion_1_normalization(report):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_outflow = worst_behavior = 0.0
    cyclic = 0
    for _ in range(200):
        f = random_sfst(rng, int(rng.integers(1, 11)), int(rng.integers(1, 4)))
        g = normalize(f)
        for q in g.states():
            outflow = g.final(q) + sum(a.weight for a in g.arcs(q))
            worst_outflow = max(worst_outflow, abs(outflow - 1.0))
        cyclic += not is_epsilon_acyclic(g)
        total = grand_total(f)
        before, after = behavior_table(f, 4), behavior_table(g, 4)
        for key in set(before) | set(after):
            worst_behavior = max(worst_behavior, abs(after.get(key, 0.0) - before.get(key, 0.0) / total))
    elapsed = time.perf_counter() - start
    ok = worst_outflow < 1e-9 and cyclic == 0 and worst_behavior < 1e-9 and elapsed < 30
    report(1, ok, f"max outflow err {worst_outflow:.1e}, epsilon-cyclic {cyclic}, "
                  f"max behavior err {worst_behavior:.1e}, {elapsed:.1f}s")


def test_criterion_2_conflation_size(report):
    counts = {}
    for m in range(2, 9):
        g = conflate_epsilon_cycles(cycle_graph(m), trim=False)
        counts[m] = (g.num_states(), g.num_arcs())
    ok = all(counts[m] == (2 * m, m * m) for m in counts)
    report(2, ok, f"(states, arcs) by m: {counts}")


def test_criterion_3_epsilon_loop(report):
    f = Wfst()
    f.add_states(2)
    f.set_start(0)
    f.add_arc(0, Arc(EPSILON, EPSILON, 0.9, 0))
    f.add_arc(0, Arc(1, 1, 0.1, 1))
    f.set_final(1, 1.0)
    start = time.perf_counter()
    choices = Sampler(f, allow_epsilon_cycles=True).draw_choices(Rng(3), 100000)
    loops = float((choices == 1).sum(axis=1).mean())
    g = normalize(f)
    eps_per_path = np.mean([sum(a.is_epsilon() for _, a in p.arcs) for p in rand_paths(g, Rng(4), 100000)])
    elapsed = time.perf_counter() - start
    ok = abs(loops - 9.0) <= 0.15 and eps_per_path <= 1.0 and elapsed < 10
    report(3, ok, f"mean loops {loops:.3f}, epsilon arcs per path after conflation {eps_per_path:.3f}, "
                  f"{elapsed:.1f}s")


def test_criterion_4_sampler_exactness(report):
    rng = np.random.default_rng(4)
    n = 200000
    pvalues = []
    for k in range(20):
        f = random_dag(rng, int(rng.integers(3, 8)), max_paths=50)
        paths = enumerate_paths(f)
        index = {key: i for i, (key, _) in enumerate(paths)}
        observed = np.zeros(len(paths))
        for row in Sampler(f).draw_choices(Rng(100 + k), n):
            observed[index[tuple(int(c) for c in row if c >= 0)]] += 1
        expected = np.array([w for _, w in paths]) * n
        if len(paths) == 1:
            pvalues.append(1.0)
        else:
            pvalues.append(stats.chisquare(observed, expected * (n / expected.sum())).pvalue)
    passing = sum(p > 0.001 for p in pvalues)
    report(4, passing >= 19, f"{passing}/20 with p > 0.001, min p {min(pvalues):.3g}")


def test_criterion_5_posterior_consistency(report):
    rng = np.random.default_rng(5)
    worst_entry = worst_sum = 0.0
    for _ in range(100):
        T, L = int(rng.integers(1, 6)), int(rng.integers(2, 4))
        post = CtcPosterior(random_posterior(rng, T, L), [f"s{j}" for j in range(L)], L - 1)
        lattice, B = build_lattice(post), build_labeling_fst(L, post.blank_id)
        _, dist = ctc_mode(post.probs, post.blank_id)
        probs = {lab: labeling_probability(lattice, B, lab) for lab in dist}
        worst_entry = max(worst_entry, max(abs(probs[lab] - p) for lab, p in dist.items()))
        worst_sum = max(worst_sum, abs(sum(probs.values()) - 1.0))
    report(5, worst_entry <= 1e-12 and worst_sum <= 1e-9,
           f"max per-labeling err {worst_entry:.1e}, max sum err {worst_sum:.1e}")


def test_criterion_6_mode_soundness(report, suite):
    results = decode_suite(suite, Strategy.SECOND_OCCURRENCE)
    failures, accuracy = soundness(suite, results)
    certain = sum(r.stop_reason is StopReason.MODE_CERTAIN for r in results)
    report(6, failures == 0 and accuracy >= 0.99,
           f"ModeCertain {certain}/500 with {failures} wrong, accuracy {accuracy:.3f}")


def test_criterion_7_strategy_efficiency(report, suite):
    second = decode_suite(suite, Strategy.SECOND_OCCURRENCE)
    always = decode_suite(suite, Strategy.ALWAYS)
    mean_second = np.mean([r.probs_computed for r in second])
    mean_always = np.mean([r.probs_computed for r in always])
    failures = soundness(suite, second)[0] + soundness(suite, always)[0]
    report(7, mean_second < mean_always and failures == 0,
           f"mean probs computed second {mean_second:.2f} vs always {mean_always:.2f}, "
           f"ModeCertain failures {failures}")


def near_tie_suite(count=100, seed=8):
    rng = np.random.default_rng(seed)
    suite = []
    for _ in range(count):
        L = int(rng.integers(3, 5))
        delta = rng.uniform(0.005, 0.03)
        # the remaining mass stays below top - delta
        top = rng.uniform(0.35, 0.45)
        row = np.zeros(L)
        rest = 1.0 - 2 * top + delta
        row[:2] = top, top - delta
        row[2:] = rest * rng.dirichlet(np.ones(L - 2))
        row = row[rng.permutation(L)]
        post = CtcPosterior([row], [f"s{j}" for j in range(L)], L - 1)
        mode, _ = ctc_mode(post.probs, post.blank_id)
        suite.append((build_lattice(post), build_labeling_fst(L, post.blank_id), mode))
    return suite


def test_criterion_8_baselines(report, suite):
    best_path_mismatch = 0
    for post, lattice, B, _ in suite:
        res = ctc_decode(lattice, B, DecodeConfig(0, 0.0, Strategy.NEVER))
        expected = collapse_labeling(shortest_path(lattice).ilabels, post.blank_id)
        best_path_mismatch += res.labeling != expected
    ties = near_tie_suite()
    acc = {}
    for draws in (600, 6000):
        acc[draws] = np.mean([naive_decode(A, B, draws, seed=i).labeling == mode
                              for i, (A, B, mode) in enumerate(ties)])
    report(8, best_path_mismatch == 0 and acc[6000] > acc[600],
           f"best-path mismatches {best_path_mismatch}, naive accuracy 600: {acc[600]:.2f}, "
           f"6000: {acc[6000]:.2f}")


def test_criterion_9_stopping_formulas(report):
    rng = np.random.default_rng(9)
    worst_mc = 0.0
    grid = [(p, t, n) for p, t, n in zip(rng.uniform(0, 0.6, 20), rng.uniform(0, 0.6, 20), rng.integers(0, 30, 20))]
    for p, t, n in grid:
        draws = rng.beta(1, n + 1, size=10**6)
        mc = np.mean((draws >= p) & (draws <= 1 - t))
        worst_mc = max(worst_mc, abs(mc - unseen_mode_prob(p, t, int(n))))
    worst_quad = 0.0
    for n in range(31):
        for c in range(n + 1):
            for p, t in ((0.05, 0.1), (0.3, 0.4), (0.5, 0.2), (0.0, 0.0)):
                a, b = c + 1, n - c + 2
                lo, hi = p, 1 - t
                mode = (a - 1) / (a + b - 2)
                pts = [mode] if lo < mode < hi else None
                ref, _ = integrate.quad(lambda x: stats.beta.pdf(x, a, b), lo, hi, points=pts,
                                        epsabs=1e-14, epsrel=1e-13, limit=200)
                worst_quad = max(worst_quad, abs(occurrence_exceed_prob(c, n, p, t) - ref))
    report(9, worst_mc <= 0.002 and worst_quad <= 1e-9,
           f"max Monte Carlo gap {worst_mc:.4f}, max quadrature gap {worst_quad:.1e}")


def test_criterion_10_cli_determinism(report, tmp_path):
    rng = np.random.default_rng(10)
    raw = tmp_path / "raw.fst"
    raw.write_bytes(write_text(random_sfst(rng, 6, 3)))
    norm = tmp_path / "norm.fst"
    norm.write_bytes(write_text(normalize(random_sfst(rng, 6, 3))))
    post_path = tmp_path / "post.txt"
    post = CtcPosterior(random_posterior(rng, 5, 4), ["a", "b", "c", "_"], 3)
    post_path.write_bytes(write_posterior(post))
    runs = [
        ["push", "--in", str(raw)],
        ["conflate", "--in", str(raw)],
        ["normalize", "--in", str(raw)],
        ["total", "--in", str(raw)],
        ["total", "--in", str(raw), "--format", "json"],
        ["sample", "--in", str(norm), "--n", "50", "--seed", "42"],
        ["sample", "--in", str(norm), "--n", "50", "--seed", "42", "--format", "json"],
        ["ctc-eval", "--in", str(post_path), "--labeling", "a b"],
        *[["ctc-decode", "--in", str(post_path), "--seed", "7", "--strategy", s] for s in ("never", "always", "second", "beta")],
    ]
    differing = []
    for argv in runs:
        outputs = []
        for _ in range(2):
            out = io.BytesIO()
            code = main(argv, stdin=io.BytesIO(), stdout=out, stderr=io.StringIO())
            outputs.append((code, out.getvalue()))
        if outputs[0] != outputs[1] or outputs[0][0] != 0:
            differing.append(argv[0])
    report(10, not differing, f"{len(runs)} invocations, non-identical or failing: {differing or 'none'}")
