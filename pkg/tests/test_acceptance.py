"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line (outside
pytest's capture) before asserting, so the suite doubles as a report.
Run directly with ``pytest tests/test_acceptance.py -v``.
"""

import json
import math
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

from eslees import (
    SignPattern,
    SolveSettings,
    Verdict,
    assemble,
    build_circle,
    build_flat_torus,
    build_icosphere,
    build_sphere,
    classify_operator,
    classify_second_order,
    orthogonality_check,
    random_nsd_field,
    random_potential,
    scaled_inverse_metric,
    second_eigenvalue,
    shifted_nsd,
    solve_dense,
    solve_minimizer,
    verify_holder,
    verify_shift_invariance,
    verify_theorem,
)
from eslees.classify import classify_matrices, hypothesis_for, lowest_cluster_certificate_ok, mass_mean, rms

# dense-solve orthogonality and certificate means collected by criteria 3 and 5
_LEDGER = {"orth": [], "means": []}


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return emit


def _certificate_mean_ratio(disc, M, report):
    return abs(mass_mean(disc, M, report.certificate)) / rms(disc, M, report.certificate)


def test_criterion_01_circle_exactness(report):
    t0 = time.perf_counter()
    disc = build_circle(16, 1.0)
    mats = assemble(disc, scaled_inverse_metric(disc, -1.0))
    vals = solve_dense(mats, 5).eigenvalues[:5]
    elapsed = time.perf_counter() - t0
    k = np.array([0, 1, 1, 2, 2])
    err = float(np.abs(vals - (k**4 - k**2)).max())
    ok = err <= 1e-8 and elapsed < 1.0
    report(1, ok, f"max |mu - (k^4 - k^2)| = {err:.2e} (tol 1e-8), {elapsed:.3f} s (< 1 s)")
    assert ok


def test_criterion_02_sphere_exactness(report):
    t0 = time.perf_counter()
    disc = build_sphere(8, 1.0)
    A = scaled_inverse_metric(disc, -2.0)
    mats = assemble(disc, A)
    rep = classify_operator(disc, A)
    elapsed = time.perf_counter() - t0
    ell = np.array([0, 1, 1, 1, 2])
    ref = (ell * (ell + 1)) ** 2 - 2 * ell * (ell + 1)
    err = float(np.abs(rep.eigenvalues[:5] - ref).max())
    in_zero_cluster = abs(rep.lowest_eigenvalue) <= 1e-9 and lowest_cluster_certificate_ok(rep, mats)
    ok = (
        err <= 1e-7
        and rep.verdict.category == "non-ESLEES"
        and rep.sign_pattern is SignPattern.SIGN_CHANGING
        and in_zero_cluster
        and elapsed < 5.0
    )
    report(
        2,
        ok,
        f"max error {err:.2e} (tol 1e-7), verdict {rep.verdict.value}, certificate "
        f"{rep.sign_pattern.value} in 0-cluster={in_zero_cluster}, {elapsed:.2f} s (< 5 s)",
    )
    assert ok


def test_criterion_03_theorem_sweep(report):
    t0 = time.perf_counter()
    backends = {"flat_torus": build_flat_torus(6, 6, 2 * math.pi, 2 * math.pi), "sphere": build_sphere(6, 1.0)}
    failures, verdicts, branches = [], Counter(), Counter()
    for name, disc in backends.items():
        for seed in range(100):
            T = random_nsd_field(disc, seed)
            chk = verify_theorem(disc, T)
            rep = chk.report
            mats = assemble(disc, shifted_nsd(disc, T, rep.hypothesis.lambda2))
            _LEDGER["orth"].append(orthogonality_check(solve_dense(mats, 8), mats))
            verdicts[rep.verdict.value] += 1
            branches[chk.branch] += 1
            hyp = rep.hypothesis.max_ratio <= -rep.hypothesis.lambda2 + 1e-10
            if not (hyp and chk.conclusion_ok):
                failures.append((name, seed))
            if rep.lowest_eigenvalue < -1e-8:
                _LEDGER["means"].append(_certificate_mean_ratio(disc, mats.M, rep))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 120.0
    report(
        3,
        ok,
        f"{200 - len(failures)}/200 trials ok, verdicts {dict(sorted(verdicts.items()))}, "
        f"branches {dict(sorted(branches.items()))}, {elapsed:.1f} s (< 120 s)",
    )
    assert ok, failures[:5]


def test_criterion_04_holder_suite(report):
    t0 = time.perf_counter()
    backends = {
        "circle": build_circle(8),
        "flat_torus": build_flat_torus(6, 6, 2 * math.pi, 2 * math.pi),
        "sphere": build_sphere(6),
        "icosphere": build_icosphere(3),
    }
    worst = {name: verify_holder(disc, 1000, seed=i).worst for i, (name, disc) in enumerate(backends.items())}
    elapsed = time.perf_counter() - t0
    w = min(worst.values())
    ok = w >= -1e-10 and elapsed < 30.0
    report(4, ok, f"4000 vectors, worst gap/scale {w:.2e} (>= -1e-10), {elapsed:.2f} s (< 30 s)")
    assert ok, worst


def _oracle_triples():
    discs = [build_circle(8), build_flat_torus(6, 6, 2 * math.pi, 2 * math.pi), build_sphere(6), build_icosphere(2)]
    rng = np.random.default_rng(5)
    for i in range(20):
        disc = discs[i % 4]
        lam2, _ = second_eigenvalue(disc)
        family = (i // 4) % 3
        if family == 0:
            A = shifted_nsd(disc, random_nsd_field(disc, i), lam2)
        elif family == 1:
            A = scaled_inverse_metric(disc, float(rng.uniform(-3.0, 1.0)) * lam2)
        else:
            A = random_nsd_field(disc, 100 + i, amplitude=3.0)
        yield disc, A, float(rng.uniform(-5.0, 5.0))


def test_criterion_05_oracle_agreement(report):
    t0 = time.perf_counter()
    settings = SolveSettings()
    worst1 = worst2 = 0.0
    for disc, A, shift in _oracle_triples():
        mats = assemble(disc, A, shift)
        dense = solve_dense(mats, 8, settings)
        mini = solve_minimizer(mats, len(dense.clusters[0]) + 1, settings)
        mu = dense.eigenvalues[0]
        worst1 = max(worst1, abs(mini.eigenvalues[0] - mu) / max(1.0, abs(mu)))
        second = dense.cluster_values()[1]
        worst2 = max(worst2, abs(mini.cluster_values()[1] - second) / max(1.0, abs(second)))
        _LEDGER["orth"].append(orthogonality_check(dense, mats))
        rep = classify_matrices(disc, mats, hypothesis_for(disc, A, settings), settings, 1e-6, 8, spectrum=dense)
        # constants sit at the shift, so the mean-zero premise is on mu1 - shift
        if rep.lowest_eigenvalue - shift < -1e-8:
            _LEDGER["means"].append(_certificate_mean_ratio(disc, mats.M, rep))
    elapsed = time.perf_counter() - t0
    ok = worst1 <= 1e-6 and worst2 <= 1e-5 and elapsed < 60.0
    report(
        5,
        ok,
        f"20 triples, worst mu1 rel diff {worst1:.2e} (1e-6), second cluster {worst2:.2e} (1e-5), "
        f"{elapsed:.2f} s (< 60 s)",
    )
    assert ok


def test_criterion_06_mean_zero_and_orthogonality(report):
    # depends on the data gathered by criteria 3 and 5; refill if run alone
    if not _LEDGER["orth"]:
        for disc, A, shift in _oracle_triples():
            mats = assemble(disc, A, shift)
            _LEDGER["orth"].append(orthogonality_check(solve_dense(mats, 8), mats))
            rep = classify_matrices(disc, mats, hypothesis_for(disc, A, SolveSettings()), SolveSettings(), 1e-6, 8)
            if rep.lowest_eigenvalue - shift < -1e-8:
                _LEDGER["means"].append(_certificate_mean_ratio(disc, mats.M, rep))
    orth = max(_LEDGER["orth"])
    mean = max(_LEDGER["means"], default=0.0)
    ok = orth <= 1e-9 and mean <= 1e-8 and len(_LEDGER["means"]) > 0
    report(
        6,
        ok,
        f"{len(_LEDGER['means'])} negative-branch certificates, worst |mean|/rms {mean:.2e} (1e-8); "
        f"{len(_LEDGER['orth'])} dense solves, worst cross-cluster |u^T M v| {orth:.2e} (1e-9)",
    )
    assert ok


def test_criterion_07_shift_invariance(report):
    lambdas = [-5.0, 0.0, 5.0]
    circle = build_circle(8)
    torus = build_flat_torus(6, 6, 2 * math.pi, 2 * math.pi)
    checks = [
        verify_shift_invariance(circle, scaled_inverse_metric(circle, -1.0), lambdas),
        verify_shift_invariance(torus, shifted_nsd(torus, random_nsd_field(torus, 0), second_eigenvalue(torus)[0]), lambdas),
    ]
    ok = all(c.ok for c in checks)
    e = max(c.max_eigen_error for c in checks)
    cats = [sorted(set(c.verdicts.values())) for c in checks]
    report(7, ok, f"max eigenvalue shift error {e:.2e} (1e-9 relative), verdicts per case {cats}")
    assert ok


def test_criterion_08_krein_rutman_control(report):
    t0 = time.perf_counter()
    backends = {
        "circle": build_circle(8),
        "flat_torus": build_flat_torus(6, 6, 2 * math.pi, 2 * math.pi),
        "sphere": build_sphere(6),
        "icosphere": build_icosphere(3),
    }
    bad = []
    for name, disc in backends.items():
        for seed in range(20):
            rep = classify_second_order(disc, random_potential(disc, seed))
            if rep.verdict is not Verdict.ESLEES or rep.lowest_cluster_dim != 1 or not rep.sign_pattern.signed:
                bad.append((name, seed, rep.verdict.value))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 30.0
    report(8, ok, f"{80 - len(bad)}/80 control operators ESLEES, {elapsed:.2f} s (< 30 s)")
    assert ok, bad[:5]


def test_criterion_09_mesh_convergence(report):
    t0 = time.perf_counter()
    tolerances = {2: 0.10, 3: 0.04, 4: 0.02}
    rows, ok = [], True
    for level, tol in tolerances.items():
        disc = build_icosphere(level)
        lam2, _ = second_eigenvalue(disc)
        rel = abs(lam2 - 2.0) / 2.0
        rep = classify_operator(disc, scaled_inverse_metric(disc, -lam2))
        good = rel <= tol and rep.verdict.category == "non-ESLEES"
        ok &= good
        rows.append(f"V={disc.n_dof}: lambda2={lam2:.6f} err {100 * rel:.4f}% (<{100 * tol:.0f}%) {rep.verdict.value}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 120.0
    report(9, ok, "; ".join(rows) + f"; {elapsed:.1f} s (< 120 s)")
    assert ok


def _strip_timings(text):
    out = []
    for line in text.splitlines():
        doc = json.loads(line)
        doc.pop("timings", None)
        out.append(json.dumps(doc, sort_keys=True))
    return "\n".join(out).encode()


def test_criterion_10_cli_determinism(report, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps({"verify": {"trials": 5, "seed": 7, "backends": ["circle", "torus", "sphere", "icosphere"]}})
    )
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        proc = subprocess.run(
            [sys.executable, "-m", "eslees", "verify", "all", "--config", str(cfg), "--seed", "7",
             "--out", str(out), "--no-figures"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(
            (_strip_timings((out / "verify.jsonl").read_text()), (out / "verify_summary.json").read_bytes())
        )
    ok = outputs[0] == outputs[1]
    n = outputs[0][0].count(b"\n") + 1
    report(10, ok, f"two 'verify all' runs, {n} JSON lines each, byte-identical without timings: {ok}")
    assert ok
