"""Command-line front end.

Commands: ``laplace``, ``spectrum``, ``classify``, ``verify``.

Exit codes: 0 success, 1 a verifier assertion failed, 2 configuration or
input error, 3 minimizer/dense disagreement (``spectrum --oracle``),
4 indeterminate verdict (``classify``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plotting
from .assembly import assemble, assemble_second_order, export_matrices
from .classify import (
    Verdict,
    classify_matrices,
    classify_second_order,
    hypothesis_for,
    verify_holder,
    verify_shift_invariance,
    verify_theorem,
)
from .config import BACKEND_PRESETS, RunConfig, build_backend, build_potential, build_tensor, normalize_backend
from .eigensolve import solve_dense, solve_minimizer
from .errors import ConfigurationError, EsleesError, NonConvergence
from .manifold import laplace_eigenpairs, second_eigenvalue
from .tensorfield import random_nsd_field, shifted_nsd

log = logging.getLogger("eslees")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ORACLE, EXIT_INDETERMINATE = 0, 1, 2, 3, 4
ORACLE_TOL = 1e-6
HOLDER_TOL = 1e-10


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("global options")
    g.add_argument("--config", metavar="PATH", help="JSON run configuration (all keys optional)")
    g.add_argument("--seed", type=int, help="seed for solver start vectors and verify trials (default 0)")
    g.add_argument("--out", metavar="DIR", help="output directory (default eslees-out)")
    g.add_argument("--oracle", action="store_true", help="cross-check the dense solve with the Rayleigh minimizer")
    g.add_argument(
        "--backend",
        help=f"backend preset ({', '.join(BACKEND_PRESETS)}) or 'mesh' with --mesh (default circle)",
    )
    g.add_argument("--mesh", metavar="OFF", help="closed triangle mesh in OFF format")
    g.add_argument("--tensor", metavar="JSON", help="tensor spec as JSON (default: A = -lambda2 g^-1)")
    g.add_argument("--shift", type=float, help="constant zeroth-order shift (default 0)")
    g.add_argument("--count", type=int, help="number of eigenpairs (default 10)")
    g.add_argument("--gap-rel-tol", type=float, help="relative gap for multiplicity clusters (default 1e-6)")
    g.add_argument("--sign-tol", type=float, help="relative sign threshold (default 1e-6)")
    g.add_argument("--no-figures", action="store_true", help="skip PNG/data figure output")
    g.add_argument("--dump-matrices", action="store_true", help="write M, K, B, K_A as plain text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eslees",
        description="Spectra of Delta^2 - div(A d) + shift on closed manifolds and ESLEES checks.",
        epilog="Log verbosity is read from the ESLEES_LOG environment variable (e.g. DEBUG, INFO).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("laplace", help="lowest eigenvalues of -Delta with multiplicities")
    _common(p)

    p = sub.add_parser("spectrum", help="lowest eigenvalues of the fourth-order operator")
    _common(p)

    p = sub.add_parser("classify", help="ESLEES verdict with certificate")
    _common(p)
    p.add_argument("--control", action="store_true", help="classify -Delta + h instead (h from config, default 1)")

    p = sub.add_parser("verify", help="run theorem / Hoelder / shift verifiers")
    _common(p)
    p.add_argument("mode", nargs="?", choices=["theorem", "holder", "shift", "all"], help="default all")
    p.add_argument("--trials", type=int, help="random trials (default 10)")
    p.add_argument("--lambdas", help="comma-separated shifts for the shift check (default -5,0,5)")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.mesh:
        cfg.backend = normalize_backend({"kind": "mesh", "path": args.mesh})
    elif args.backend:
        if args.backend == "mesh":
            raise ConfigurationError("--backend mesh needs --mesh PATH")
        cfg.backend = normalize_backend(args.backend)
    if args.tensor:
        try:
            spec = json.loads(args.tensor)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"--tensor is not valid JSON: {exc}") from None
        cfg = RunConfig.from_dict({**_as_doc(cfg), "tensor": spec})
    if args.shift is not None:
        cfg.shift = args.shift
    if args.count is not None:
        cfg.count = args.count
    if args.sign_tol is not None:
        cfg.sign_tol = args.sign_tol
    if args.gap_rel_tol is not None:
        cfg.solver = replace(cfg.solver, gap_rel_tol=args.gap_rel_tol)
    if args.seed is not None:
        cfg.solver = replace(cfg.solver, seed=args.seed)
        cfg.verify.seed = args.seed
    if args.out:
        cfg.out_dir = args.out
    if args.no_figures:
        cfg.figures = False
    if args.dump_matrices:
        cfg.dump_matrices = True
    if getattr(args, "mode", None):
        cfg.verify.mode = args.mode
    if getattr(args, "trials", None) is not None:
        cfg.verify.trials = args.trials
    if getattr(args, "lambdas", None):
        try:
            cfg.verify.lambdas = [float(x) for x in args.lambdas.split(",") if x.strip()]
        except ValueError:
            raise ConfigurationError(f"--lambdas must be comma-separated numbers, got {args.lambdas!r}") from None
    return cfg


def _as_doc(cfg: RunConfig) -> dict:
    return {
        "backend": cfg.backend,
        "tensor": cfg.tensor,
        "operator": cfg.operator,
        "potential": cfg.potential,
        "shift": cfg.shift,
        "sign_tol": cfg.sign_tol,
        "count": cfg.count,
        "solver": {
            "gap_rel_tol": cfg.solver.gap_rel_tol,
            "residual_tol": cfg.solver.residual_tol,
            "max_iters": cfg.solver.max_iters,
            "seed": cfg.solver.seed,
        },
        "output": {"dir": cfg.out_dir, "figures": cfg.figures, "dump_matrices": cfg.dump_matrices},
    }


def _out(cfg: RunConfig) -> Path:
    path = Path(cfg.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fourth_order(cfg: RunConfig, disc):
    lam2, _ = second_eigenvalue(disc)
    A = build_tensor(disc, cfg.tensor, lam2)
    return assemble(disc, A, cfg.shift), A


def cmd_laplace(cfg: RunConfig) -> int:
    disc = build_backend(cfg.backend)
    res = laplace_eigenpairs(disc, min(cfg.count, disc.n_dof), cfg.solver.gap_rel_tol)
    table = res.cluster_table()
    out = _out(cfg)
    print(f"{'eigenvalue':>22} {'multiplicity':>12}")
    for value, mult in table:
        print(f"{value:22.12g} {mult:12d}")
    with open(out / "laplace.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eigenvalue", "multiplicity"])
        for value, mult in table:
            w.writerow([repr(float(value)), mult])
    if cfg.figures:
        ref = None
        if disc.analytic_spectrum:
            ref = np.repeat([v for v, _ in disc.analytic_spectrum], [m for _, m in disc.analytic_spectrum])[: len(res)]
        plotting.plot_spectrum(res.eigenvalues, out / "laplace_spectrum", ref, "-Delta")
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, oracle: bool = False) -> int:
    disc = build_backend(cfg.backend)
    if cfg.operator == "second_order":
        mats = assemble_second_order(disc, build_potential(disc, cfg.potential), cfg.shift)
    else:
        mats, _ = _fourth_order(cfg, disc)
    out = _out(cfg)
    if cfg.dump_matrices:
        export_matrices(mats, out / "matrices")
    t0 = time.perf_counter()
    res = solve_dense(mats, min(cfg.count, mats.n), cfg.solver)
    timings = {"dense_s": time.perf_counter() - t0}
    with open(out / "spectrum.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "eigenvalue", "cluster"])
        for c, idx in enumerate(res.clusters):
            for i in idx:
                w.writerow([i, repr(float(res.eigenvalues[i])), c])
    for i, v in enumerate(res.eigenvalues):
        print(f"{i:4d} {v:22.12g}")
    doc = {
        "backend": disc.describe(),
        "n_dof": disc.n_dof,
        "tensor_label": mats.label,
        "shift": mats.shift,
        "eigenvalues": [float(v) for v in res.eigenvalues],
        "multiplicities": [len(c) for c in res.clusters],
    }
    code = EXIT_OK
    if oracle:
        t0 = time.perf_counter()
        try:
            mres = solve_minimizer(mats, len(res.clusters[0]) + 1, cfg.solver)
        except NonConvergence as exc:
            mres = None
            doc["oracle"] = {"error": str(exc)}
            code = EXIT_ORACLE
        timings["minimizer_s"] = time.perf_counter() - t0
        if mres is not None:
            mu_d, mu_m = float(res.eigenvalues[0]), float(mres.eigenvalues[0])
            diff = abs(mu_d - mu_m)
            agree = diff <= ORACLE_TOL * max(1.0, abs(mu_d))
            doc["oracle"] = {"dense_mu1": mu_d, "minimizer_mu1": mu_m, "abs_diff": diff, "agree": agree}
            print(f"oracle: dense mu1 = {mu_d:.12g}, minimizer mu1 = {mu_m:.12g}, |diff| = {diff:.3e}")
            if not agree:
                code = EXIT_ORACLE
    doc["timings"] = timings
    _dump_json(doc, out / "spectrum.json")
    if cfg.figures:
        plotting.plot_spectrum(res.eigenvalues, out / "spectrum", title=mats.label)
    return code


def cmd_classify(cfg: RunConfig, control: bool = False) -> int:
    disc = build_backend(cfg.backend)
    out = _out(cfg)
    if control or cfg.operator == "second_order":
        report = classify_second_order(
            disc, build_potential(disc, cfg.potential), cfg.shift, cfg.solver, cfg.sign_tol, cfg.count
        )
    else:
        mats, A = _fourth_order(cfg, disc)
        if cfg.dump_matrices:
            export_matrices(mats, out / "matrices")
        report = classify_matrices(disc, mats, hypothesis_for(disc, A, cfg.solver), cfg.solver, cfg.sign_tol, cfg.count)
    doc = report.to_dict()
    doc["verdict_category"] = report.verdict.category
    _dump_json(doc, out / "report.json")
    print(json.dumps(doc, sort_keys=True))
    if cfg.figures:
        plotting.plot_certificate(disc, report.certificate, out / "certificate", report.verdict.value)
    return EXIT_INDETERMINATE if report.verdict is Verdict.INDETERMINATE else EXIT_OK


def _theorem_lines(cfg: RunConfig, disc, name: str):
    opts = cfg.verify
    for trial in range(opts.trials):
        seed = opts.seed + trial
        T = random_nsd_field(disc, seed, opts.smoothness, opts.amplitude)
        chk = verify_theorem(disc, T, cfg.solver, cfg.sign_tol)
        r = chk.report
        yield {
            "check": "theorem",
            "backend": name,
            "trial": trial,
            "seed": seed,
            "ok": chk.hypothesis_ok and chk.conclusion_ok,
            "hypothesis_ok": chk.hypothesis_ok,
            "conclusion_ok": chk.conclusion_ok,
            "branch": chk.branch,
            "lambda2": r.hypothesis.lambda2,
            "max_ratio": r.hypothesis.max_ratio,
            "lowest_eigenvalue": r.lowest_eigenvalue,
            "lowest_cluster_dim": r.lowest_cluster_dim,
            "verdict": r.verdict.value,
            "certificate_mean": r.mean_value,
            "chain_value": chk.chain_value,
            "timings": r.timings,
        }


def _holder_lines(cfg: RunConfig, disc, name: str):
    trials = max(cfg.verify.trials, 1)
    t0 = time.perf_counter()
    chk = verify_holder(disc, trials, cfg.verify.seed)
    yield {
        "check": "holder",
        "backend": name,
        "trials": trials,
        "seed": cfg.verify.seed,
        "worst_gap": chk.worst,
        "constant_gap": float(chk.gaps[0]),
        "ok": chk.worst >= -HOLDER_TOL,
        "timings": {"total_s": time.perf_counter() - t0},
    }


def _shift_lines(cfg: RunConfig, disc, name: str):
    lam2, _ = second_eigenvalue(disc)
    tensors = [build_tensor(disc, cfg.tensor, lam2)]
    tensors.append(shifted_nsd(disc, random_nsd_field(disc, cfg.verify.seed, cfg.verify.smoothness), lam2))
    for i, A in enumerate(tensors):
        t0 = time.perf_counter()
        chk = verify_shift_invariance(disc, A, cfg.verify.lambdas, cfg.solver, cfg.sign_tol)
        yield {
            "check": "shift",
            "backend": name,
            "trial": i,
            "tensor_label": A.label,
            "lambdas": [float(x) for x in cfg.verify.lambdas],
            "ok": chk.ok,
            "max_eigen_error": chk.max_eigen_error,
            "max_certificate_error": chk.max_certificate_error,
            "verdicts": {repr(k): v for k, v in chk.verdicts.items()},
            "timings": {"total_s": time.perf_counter() - t0},
        }


def cmd_verify(cfg: RunConfig) -> int:
    mode = cfg.verify.mode
    backends = cfg.verify.backends or [cfg.backend]
    out = _out(cfg)
    lines = []
    for spec in backends:
        spec = normalize_backend(spec)
        disc = build_backend(spec)
        name = spec["kind"]
        if mode in ("theorem", "all"):
            lines += list(_theorem_lines(cfg, disc, name))
        if mode in ("holder", "all"):
            lines += list(_holder_lines(cfg, disc, name))
        if mode in ("shift", "all"):
            lines += list(_shift_lines(cfg, disc, name))
    ok = all(line["ok"] for line in lines)
    with open(out / "verify.jsonl", "w") as fh:
        for line in lines:
            text = json.dumps(line, sort_keys=True)
            fh.write(text + "\n")
            print(text)
    summary = {
        "mode": mode,
        "seed": cfg.verify.seed,
        "checks": len(lines),
        "failures": sum(not line["ok"] for line in lines),
        "ok": ok,
    }
    _dump_json(summary, out / "verify_summary.json")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ESLEES_LOG", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "laplace":
            return cmd_laplace(cfg)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.oracle)
        if args.command == "classify":
            return cmd_classify(cfg, args.control)
        return cmd_verify(cfg)
    except (EsleesError, OSError) as exc:
        print(f"eslees: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
