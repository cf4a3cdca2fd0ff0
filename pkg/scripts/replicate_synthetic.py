"""Teacher vs SGD/BSGD on the three synthetic learners, over several seeds.

Writes one trace CSV and summary JSON per (preset, seed) into --out and
prints the median final learner bias per strategy.
"""
import argparse
from pathlib import Path

import numpy as np

from oneshot.config import preset_config
from oneshot.harness import run_comparison, summary_json, write_trace_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--presets", nargs="+", default=["lsr", "svm", "lr"], choices=["lsr", "svm", "lr"])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--iterations", type=int, default=None, help="override baseline iterations")
    ap.add_argument("--out", type=Path, default=Path("runs/synthetic"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name in args.presets:
        finals: dict[str, list[float]] = {}
        for seed in range(args.seeds):
            cfg = preset_config(name, seed)
            if args.iterations is not None:
                for b in cfg.baselines:
                    b.iterations = args.iterations
            comp = run_comparison(cfg)
            write_trace_csv(comp.records, args.out / f"{name}_seed{seed}.csv")
            (args.out / f"{name}_seed{seed}.json").write_text(summary_json(comp.summary))
            for strat, entry in comp.summary["strategies"].items():
                finals.setdefault(strat, []).append(entry["final"]["learner_bias"])
        cells = "  ".join(f"{s}={np.median(v):.4g}" for s, v in finals.items())
        print(f"{name}: median final bias over {args.seeds} seeds: {cells}")


if __name__ == "__main__":
    main()
