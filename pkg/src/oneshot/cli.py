"""``oneshot`` command line.

Exit status: 0 success, 1 the requested teaching is infeasible (reported,
not crashed), 2 usage or configuration error. Where a subcommand accepts
``--config``, explicit flags override config fields, which override defaults.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESET_NAMES, ExperimentConfig, load_config, preset_config
from .datagen import (
    PRESETS,
    load_pool_csv,
    mnist_binary_pool,
    preset_pool,
    read_mnist,
    synthetic_digits,
    write_idx,
    write_pool_csv,
)
from .errors import ConfigError, InfeasibleScalarError, TeachingError
from .harness import run_comparison, summary_json, summary_table, trace_csv
from .learner import LossKind
from .numerics import RngStream, SolverConfig
from .teacher import LabelPolicy, Teacher, TeacherKind, feasibility, teach

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    # json renders floats with repr, the shortest round-trip form
    return json.dumps(obj, indent=2)


def _write(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8", newline="")


# teaching problem assembly ----------------------------------------------------

def _problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="experiment config JSON; task and teachers[0] supply defaults")
    p.add_argument("--loss", choices=[k.value for k in LossKind])
    p.add_argument("--eta", type=float, help="learner step size")
    p.add_argument("--theta0", type=float, nargs="+", metavar="V", help="initial parameter (default zeros)")
    p.add_argument("--theta-star", type=float, nargs="+", metavar="V", help="target parameter")
    p.add_argument("--teacher", choices=[k.value for k in TeacherKind], help="teacher kind (default complete)")
    p.add_argument("--pool", help="pool CSV for combinable, scalable and naive teachers")
    p.add_argument("--policy", help="label policy: auto, self, +1, -1 or fixed:Y")


def _problem(args) -> dict:
    cfg: ExperimentConfig | None = load_config(args.config) if args.config else None
    task = cfg.task if cfg else None
    tc = cfg.teachers[0] if cfg and cfg.teachers else None

    loss = args.loss or (task.loss if task else None)
    if loss is None:
        raise UsageError("--loss is required without --config")
    eta = args.eta if args.eta is not None else (task.eta if task else None)
    if eta is None:
        raise UsageError("--eta is required without --config")
    if not eta > 0:
        raise UsageError("--eta must be positive")

    theta_star = args.theta_star
    if theta_star is None and task is not None:
        if isinstance(task.theta_star, str):
            raise UsageError("config asks for a pretrained theta_star; pass --theta-star or use compare")
        theta_star = task.theta_star
    if theta_star is None:
        raise UsageError("--theta-star is required without --config")
    theta_star = np.asarray(theta_star, dtype=np.float64)
    theta0 = args.theta0 if args.theta0 is not None else (task.theta0 if task else None)
    theta0 = np.zeros_like(theta_star) if theta0 is None else np.asarray(theta0, dtype=np.float64)
    if theta0.shape != theta_star.shape:
        raise UsageError(f"theta0 has {theta0.size} entries, theta_star has {theta_star.size}")

    kind = TeacherKind.parse(args.teacher or (tc.kind if tc else "complete"))
    pool_path = args.pool or (tc.pool_path if tc else None)
    if kind is TeacherKind.COMPLETE:
        teacher = Teacher.complete()
    else:
        if pool_path is None:
            raise UsageError(f"a {kind.value} teacher needs --pool")
        teacher = Teacher(kind, load_pool_csv(pool_path).X)

    policy_text = args.policy or (tc.policy if tc else None)
    try:
        policy = LabelPolicy.parse(policy_text) if policy_text else None
    except ValueError as exc:
        raise UsageError(f"--policy: {exc}") from None
    return dict(cfg=cfg, tc=tc, loss=LossKind.parse(loss), eta=float(eta), theta0=theta0,
                theta_star=theta_star, teacher=teacher, policy=policy)


def cmd_teach(args) -> int:
    prob = _problem(args)
    tc = prob["tc"]
    solver = tc.solver if tc else None
    step = args.step_size if args.step_size is not None else (solver.step_size if solver else None)
    tol = args.tol if args.tol is not None else (solver.tol if solver else 1e-10)
    max_iter = args.max_iter if args.max_iter is not None else (solver.max_iter if solver else 100_000)
    exact = args.exact or bool(solver and solver.exact)
    seed = args.seed if args.seed is not None else (prob["cfg"].eval.seed if prob["cfg"] else 0)
    try:
        result = teach(prob["teacher"], prob["loss"], prob["eta"], prob["theta0"], prob["theta_star"],
                       prob["policy"], SolverConfig(step, tol, max_iter),
                       RngStream(seed, 300).generator(), exact=exact)
    except InfeasibleScalarError as exc:
        print(_dump({"feasible": False, "error": str(exc), "min_abs_label": exc.min_abs_label}))
        return EXIT_INFEASIBLE
    print(_dump(result.to_dict()))
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_feasibility(args) -> int:
    prob = _problem(args)
    report = feasibility(prob["teacher"], prob["loss"], prob["eta"], prob["theta0"], prob["theta_star"],
                         prob["policy"])
    print(_dump({"teacher": prob["teacher"].kind.value, **report.to_dict()}))
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


# experiments -------------------------------------------------------------------

def _experiment(args) -> ExperimentConfig:
    if (args.config is None) == (args.preset is None):
        raise UsageError("pass exactly one of --config, --preset")
    cfg = load_config(args.config) if args.config else preset_config(args.preset)
    if args.seed is not None:
        cfg.eval.seed = args.seed
    if args.iterations is not None:
        for b in cfg.baselines:
            b.iterations = args.iterations
    if args.stoch_batch is not None:
        cfg.eval.stoch_batch = args.stoch_batch
    return cfg.validate()


def cmd_simulate(args) -> int:
    cfg = _experiment(args)
    comp = run_comparison(cfg, only={args.strategy})
    _write(args.out, trace_csv(comp.records))
    final = comp.summary["strategies"][args.strategy]["final"]
    print(_dump({"strategy": args.strategy, "trace": args.out, "final": final}))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _experiment(args)
    comp = run_comparison(cfg)
    if args.trace:
        _write(args.trace, trace_csv(comp.records))
    if args.summary:
        _write(args.summary, summary_json(comp.summary))
    print(summary_table(comp.summary))
    return EXIT_OK


# data --------------------------------------------------------------------------

def cmd_datagen(args) -> int:
    root = RngStream(args.seed)
    if args.preset in PRESETS:
        write_pool_csv(preset_pool(args.preset, root.substream(100).generator()), args.out)
        written = [args.out]
        if args.test_out:
            write_pool_csv(preset_pool(args.preset, root.substream(101).generator()), args.test_out)
            written.append(args.test_out)
    else:
        if not args.labels_out:
            raise UsageError("--preset digits writes IDX images to --out and needs --labels-out")
        images, labels = synthetic_digits(args.per_class, 10, root.substream(102).generator())
        write_idx(args.out, images)
        write_idx(args.labels_out, labels)
        written = [args.out, args.labels_out]
    print(_dump({"preset": args.preset, "seed": args.seed, "written": written}))
    return EXIT_OK


def _classes(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two class labels like 0,1") from None
    return a, b


def cmd_mnist_prep(args) -> int:
    images, labels = read_mnist(args.images, args.labels)
    pool, proj = mnist_binary_pool(images, labels, args.classes, args.dim, args.seed, args.per_class)
    write_pool_csv(pool, args.out)
    info = {"out": args.out, "examples": len(pool), "dim": pool.dim, "classes": list(args.classes),
            "projection": {"shape": list(proj.shape), "seed": proj.seed}}
    print(_dump(info))
    return EXIT_OK


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oneshot", description="One-shot teaching of gradient-descent linear learners.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("teach", help="print the optimal single teaching example")
    _problem_args(p)
    p.add_argument("--step-size", type=float, help="coefficient solver step (default: automatic)")
    p.add_argument("--tol", type=float, help="coefficient solver loss tolerance")
    p.add_argument("--max-iter", type=int, help="coefficient solver iteration cap")
    p.add_argument("--exact", action="store_true", help="solve coefficients by direct least squares")
    p.add_argument("--seed", type=int, help="seed for the coefficient solver start")
    p.set_defaults(func=cmd_teach)

    p = sub.add_parser("feasibility", help="report whether one-shot teaching is possible")
    _problem_args(p)
    p.set_defaults(func=cmd_feasibility)

    for name, func, helptext in (("simulate", cmd_simulate, "run one strategy and write its trace CSV"),
                                 ("compare", cmd_compare, "run all strategies of an experiment")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--preset", choices=PRESET_NAMES, help="built-in experiment")
        p.add_argument("--seed", type=int, help="overrides eval.seed")
        p.add_argument("--iterations", type=int, help="overrides every baseline's iteration count")
        p.add_argument("--stoch-batch", type=int, help="overrides eval.stoch_batch")
        if name == "simulate":
            p.add_argument("--strategy", required=True, help="strategy name from the config, e.g. OSTS or SGD")
            p.add_argument("--out", required=True, help="trace CSV path")
        else:
            p.add_argument("--trace", help="trace CSV path")
            p.add_argument("--summary", help="summary JSON path")
        p.set_defaults(func=func)

    p = sub.add_parser("datagen", help="write a synthetic pool (CSV) or digit images (IDX)")
    p.add_argument("--preset", required=True, choices=[*PRESETS, "digits"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="pool CSV, or IDX image file for digits")
    p.add_argument("--test-out", help="held-out pool CSV drawn from an independent stream")
    p.add_argument("--labels-out", help="IDX label file (digits)")
    p.add_argument("--per-class", type=int, default=1000, help="images per digit (digits)")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("mnist-prep", help="project two digit classes of an IDX dataset into a pool CSV")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--dim", type=int, default=24)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=_classes, default=(0, 1))
    p.add_argument("--per-class", type=int, help="subsample this many images per class")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mnist_prep)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InfeasibleScalarError as exc:
        print(f"oneshot {args.command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, ConfigError, TeachingError, ValueError) as exc:
        print(f"oneshot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        where = f" {exc.filename}" if exc.filename else ""
        print(f"oneshot {args.command}: error:{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
