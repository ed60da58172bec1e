"""Measured factorization error against the analytic bound on the rotation fixture n = p.

    python scripts/sweep_p.py --p 5 9 17 33 65 --out reports/sweep.csv
"""
import argparse
from dataclasses import dataclass, field

from pimsner_lab.io import write_csv
from pimsner_lab.suites import sweep_over_p, sweep_rows


@dataclass
class SweepConfig:
    p: list[int] = field(default_factory=lambda: [5, 9, 17, 33])
    d: int = 0
    q_extra: int = 6
    out: str = "reports/sweep.csv"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, nargs="+", default=SweepConfig().p)
    ap.add_argument("--d", type=int, default=0, choices=[0, 1])
    ap.add_argument("--q-extra", type=int, default=6)
    ap.add_argument("--out", default=SweepConfig.out)
    a = ap.parse_args()
    cfg = SweepConfig(a.p, a.d, a.q_extra, a.out)
    rows = sweep_rows(sweep_over_p(cfg.p, d=cfg.d, q_extra=cfg.q_extra))
    print(f"{'p':>4} {'bound':>10} {'measured':>10} {'q_conv':>7}")
    for r in rows:
        print(f"{r['p']:>4} {r['analytic_bound']:>10.4f} {r['measured_error']:>10.4f} {r['q_converged']:>7}")
    write_csv(cfg.out, rows, ["p", "analytic_bound", "measured_error", "q_converged"])
    print(f"wrote {cfg.out}")


if __name__ == "__main__":
    main()
