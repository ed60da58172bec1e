"""Command-line entry point: ``pimsner-lab <subcommand> task.json``.

Exit codes: 0 pass, 1 certified failure, 2 input error.  Every report is
written with sorted keys; wall-clock data goes to a separate ``.meta.json``.
"""
from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from .correspondence import TensorPowerCache
from .dimcalc import CalculusConfig, explain, propagate
from .errors import ArgumentError, CutoffError, InfeasibleError, InputError, PimsnerLabError, StructuralError
from .factorization import verify_factorization
from .fixtures import band_label, build_band, build_correspondence, build_tower, word_tensor
from .fock import quasicentral_check
from .io import load_task, write_csv, write_json
from .rokhlin import check_tower, synthesize_cyclic_tower
from .suites import nonincreasing, relation_report, relation_suite, sweep_over_p, sweep_rows, thread_count

DEFAULT_TOL = {
    "check_tower": 1e-12,
    "synthesize_tower": 1e-12,
    "verify_factorization": 1e-6,
    "sweep": 1e-6,
    "quasicentral_check": 1e-10,
    "bounds": 0.0,
    "relations": 1e-10,
}

SUBCOMMANDS = {
    "check-tower": "check_tower",
    "synthesize-tower": "synthesize_tower",
    "verify-factorization": "verify_factorization",
    "sweep": "sweep",
    "check-qc-unit": "quasicentral_check",
    "bounds": "bounds",
    "relations": "relations",
}


class Outcome:
    def __init__(self, report: dict, passed: bool, csv: tuple[list[dict], list[str]] | None = None):
        self.report = report
        self.passed = passed
        self.csv = csv


def _tower_levels(t) -> list:
    return [[np.real(f.flat()).tolist() for f in row] for row in t.elements]


def run_check_tower(task: dict, tol: float, seed: int) -> Outcome:
    H = build_correspondence(task["correspondence"])
    t = build_tower(task["tower"], H.algebra)
    cache = TensorPowerCache(H)
    vectors = [word_tensor(cache, w) for w in task["vectors"]] if "vectors" in task else None
    defects = check_tower(t, H, vectors, cache=cache)
    eps = task.get("eps", tol)
    ok = defects.max() <= eps
    return Outcome({"anchor": "Rokhlin tower defects: orthogonality, unit, shift, centrality",
                    "d": t.d, "p": t.p, "eps": eps, "defects": defects.as_dict(), "admissible": ok}, ok)


def run_synthesize_tower(task: dict, tol: float, seed: int) -> Outcome:
    from .fixtures import cyclic_crossed_product
    n, p, d = task["n"], task["p"], task.get("d", 0)
    t = synthesize_cyclic_tower(n, p, d)
    defects = check_tower(t, cyclic_crossed_product(n))
    return Outcome({"anchor": "cyclic Rokhlin tower synthesis for the rotation on Z/n", "n": n, "p": p, "d": t.d,
                    "levels": _tower_levels(t), "defects": defects.as_dict(), "max_defect": defects.max()}, True)


def run_verify_factorization(task: dict, tol: float, seed: int) -> Outcome:
    H = build_correspondence(task["correspondence"])
    t = build_tower(task["tower"], H.algebra)
    cache = TensorPowerCache(H)
    bands = [build_band(cache, f) for f in task["F"]]
    cert = verify_factorization(cache, t, bands, task["epsilon"], task["q_max"],
                                labels=[band_label(f) for f in task["F"]], sweep_tol=tol, workers=thread_count())
    return Outcome(cert.as_dict(), cert.passed,
                   (cert.csv_rows(), ["element", "p", "q", "measured", "bound"]))


def run_sweep(task: dict, tol: float, seed: int) -> Outcome:
    kw = {k: task[k] for k in ("d", "F", "q_extra", "epsilon") if k in task}
    certs = sweep_over_p(task["p"], **kw)
    rows = sweep_rows(certs)
    mono = nonincreasing([r["measured_error"] for r in rows])
    within = all(r["measured_error"] <= r["analytic_bound"] + 1e-6 for r in rows)
    converged = all(r["q_converged"] >= 0 for r in rows)
    ok = mono and within and converged
    report = {"anchor": "epsilon versus p tradeoff of the factorization estimate", "rows": rows,
              "nonincreasing": mono, "within_bound": within, "converged": converged, "passed": ok}
    return Outcome(report, ok, (rows, ["p", "analytic_bound", "measured_error", "q_converged"]))


def run_quasicentral(task: dict, tol: float, seed: int) -> Outcome:
    H = build_correspondence(task["correspondence"])
    reports = [quasicentral_check(H, task["p"], n).as_dict() for n in task["n"]]
    ok = all(r["defect"] <= tol for r in reports if r["n"] >= H.rank)
    return Outcome({"anchor": "quasicentral projection unit in D_p", "rank": H.rank, "tol": tol,
                    "reports": reports, "passed": ok}, ok)


def run_bounds(task: dict, tol: float, seed: int) -> Outcome:
    cfg = CalculusConfig(r9_variant=task.get("r9_variant", "statement"))
    facts = propagate(task["graph"], cfg)
    trees = {fid: explain(facts, fid) for fid in task.get("explain", [])}
    return Outcome({"anchor": "dimension inequality propagation", "r9_variant": cfg.r9_variant,
                    "facts": facts.as_json(), "explanations": trees}, True)


def run_relations(task: dict, tol: float, seed: int) -> Outcome:
    limits = {k: task[k] for k in ("max_blocks", "max_block_size", "max_rank", "max_cutoff") if k in task}
    inst = relation_suite(task.get("count", 100), seed, **limits)
    rep = relation_report(inst, tol)
    rep["seed"] = seed
    return Outcome(rep, rep["passed"])


RUNNERS: dict[str, Callable[[dict, float, int], Outcome]] = {
    "check_tower": run_check_tower,
    "synthesize_tower": run_synthesize_tower,
    "verify_factorization": run_verify_factorization,
    "sweep": run_sweep,
    "quasicentral_check": run_quasicentral,
    "bounds": run_bounds,
    "relations": run_relations,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="reports", help="directory for reports (default: reports)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default: 0)")
    common.add_argument("--tol", type=float, default=None, help="tolerance override (module default otherwise)")
    parser = argparse.ArgumentParser(prog="pimsner-lab", description="Fock-space and Rokhlin-tower certificates.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, task in SUBCOMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=f"run a {task} task file")
        p.add_argument("task", help="path to the JSON task file")
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    task_name = SUBCOMMANDS[args.command]
    started = time.perf_counter()
    try:
        task = load_task(args.task, task_name)
        tol = args.tol if args.tol is not None else DEFAULT_TOL[task_name]
        outcome = RUNNERS[task_name](task, tol, args.seed)
    except (InputError, ArgumentError, CutoffError, InfeasibleError, StructuralError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PimsnerLabError as exc:
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    stem = Path(args.task).stem
    report = dict(outcome.report, task=task_name, seed=args.seed, tol=tol, passed=outcome.passed)
    path = write_json(out / f"{stem}.{task_name}.json", report)
    if outcome.csv is not None:
        rows, cols = outcome.csv
        write_csv(out / f"{stem}.{task_name}.csv", rows, cols)
    write_json(out / f"{stem}.{task_name}.meta.json", {
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "finished": datetime.now(timezone.utc).isoformat(),
        "seconds": time.perf_counter() - started,
        "threads": thread_count(),
    })
    print(f"{task_name}: {'pass' if outcome.passed else 'FAIL'} -> {path}")
    return 0 if outcome.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
