"""Command-line entry point: data generation, training, gradient checks, analyses.

Every command writes one manifest.json echoing the full configuration and
the produced artifact paths, so a run can be reproduced bit-exactly from
its manifest. Exit codes: 0 success / criterion met, 1 usage error,
2 budget exhausted, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, analysis, grad as grad_mod, linalg, optim, regularizer, tasks
from .model import Activation, LossSpec, RnnParams, forward, init_params, \
    load_checkpoint, save_checkpoint, error_signals
from .optim import ClipPolicy, TrainConfig, fmt17
from .tasks import TaskSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BUDGET = 2
EXIT_DIVERGED = 3


def _git_describe() -> str | None:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5)
        return out.stdout.strip() or None
    except OSError:
        return None


def _args_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "cmd")}


def _write_manifest(out_dir: Path, command: str, config: dict, seed,
                    artifacts: list[str], status: str, t0: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "artifacts": artifacts,
        "wall_clock_s": time.time() - t0,
        "version": {"package": __version__, "git": _git_describe()},
        "status": status,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))


def _derived_seeds(seed: int) -> dict[str, int]:
    init_s, stream_s, test_s = (int(s) for s in
                                np.random.SeedSequence(seed).generate_state(3))
    return {"init": init_s, "stream": stream_s, "test": test_s}


# ---------------------------------------------------------------------------
# gen-data

def cmd_gen_data(args) -> int:
    t0 = time.time()
    spec = TaskSpec(kind=args.task, T=args.T, pattern_len=args.pattern_len,
                    symbols=args.symbols, rng_seed=args.seed)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    with open(out_path, "w") as fh:
        for _ in range(args.n):
            fh.write(json.dumps(tasks.sample_to_json(tasks.generate(spec, rng))))
            fh.write("\n")
    _write_manifest(out_path.parent, "gen-data", _args_dict(args),
                    args.seed, [str(out_path)], "success", t0)
    print(f"wrote {args.n} samples to {out_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train

TRAIN_DEFAULTS = {
    "task": None, "T": None, "dataset": None, "mode": None,
    "hidden": 50, "activation": "tanh", "lr": 0.001,
    "clip": "none", "threshold": 0.0, "alpha": 0.0, "alpha_schedule": "const",
    "batch": 16, "max_updates": 10000, "eval_every": 5000, "eval_samples": 10000,
    "seed": 0, "lr_halving": False, "epoch_size": 1000, "time_reduction": "sum",
    "pattern_len": 5, "symbols": 2, "out_dir": "runs/out",
}

_SCHEDULE_NAMES = {"const": "const", "inv-t": "inv_t", "inv-2t": "inv_2t",
                   "inv_t": "inv_t", "inv_2t": "inv_2t"}


def load_flat_config(path: Path) -> dict:
    """Flat JSON object, or key=value lines with JSON-decoded values."""
    text = path.read_text()
    try:
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ValueError("config must be a flat JSON object")
        return doc
    except json.JSONDecodeError:
        doc = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected key=value")
            key, _, value = line.partition("=")
            try:
                doc[key.strip()] = json.loads(value.strip())
            except json.JSONDecodeError:
                doc[key.strip()] = value.strip()
        return doc


def validate_train_config(cfg: dict) -> list[str]:
    """All schema violations at once, each with its field path."""
    problems = []
    for key in cfg:
        if key not in TRAIN_DEFAULTS:
            problems.append(f"{key}: unknown field")
    mode = cfg.get("mode")
    if mode is not None and mode not in ("SGD", "SGD-C", "SGD-CR"):
        problems.append(f"mode: must be SGD, SGD-C or SGD-CR, got {mode!r}")
    if cfg.get("task") is None and cfg.get("dataset") is None:
        problems.append("task: either task or dataset is required")
    if cfg.get("task") is not None and cfg["task"] not in tasks.KINDS:
        problems.append(f"task: unknown kind {cfg['task']!r}")
    if cfg.get("task") is not None and cfg.get("T") is None:
        problems.append("T: required when task is set")
    T = cfg.get("T")
    if T is not None:
        t_list = T if isinstance(T, (list, tuple)) else [T]
        if not all(isinstance(t, int) and t >= 10 for t in t_list):
            problems.append("T: must be an int >= 10 (or a list of them)")
    if cfg.get("activation", "tanh") not in ("tanh", "sigmoid", "identity"):
        problems.append(f"activation: unknown kind {cfg.get('activation')!r}")
    if cfg.get("clip", "none") not in optim.CLIP_KINDS:
        problems.append(f"clip: must be one of {optim.CLIP_KINDS}")
    if cfg.get("clip", "none") != "none" and not cfg.get("threshold", 0) > 0:
        problems.append("threshold: must be > 0 when clipping is enabled")
    if cfg.get("alpha_schedule", "const") not in _SCHEDULE_NAMES:
        problems.append(f"alpha_schedule: must be one of {sorted(set(_SCHEDULE_NAMES))}")
    for key, kind in (("hidden", int), ("batch", int), ("max_updates", int),
                      ("eval_every", int), ("eval_samples", int), ("epoch_size", int)):
        v = cfg.get(key)
        if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 0):
            problems.append(f"{key}: must be a nonnegative integer")
    for key in ("lr", "alpha"):
        v = cfg.get(key)
        if v is not None and not isinstance(v, (int, float)):
            problems.append(f"{key}: must be a number")
    if isinstance(cfg.get("lr"), (int, float)) and not cfg.get("lr", 1) > 0:
        problems.append("lr: must be > 0")
    if cfg.get("time_reduction", "sum") not in optim.TIME_REDUCTIONS:
        problems.append(f"time_reduction: must be one of {optim.TIME_REDUCTIONS}")
    return problems


def resolve_mode(cfg: dict) -> dict:
    """Expand the SGD / SGD-C / SGD-CR shorthand into clip and alpha settings."""
    mode = cfg.get("mode")
    if mode == "SGD":
        cfg = cfg | {"clip": "none", "alpha": 0.0}
    elif mode == "SGD-C":
        cfg = cfg | {"clip": "norm", "alpha": 0.0}
    elif mode == "SGD-CR":
        cfg = cfg | {"clip": "norm"}
    return cfg


def build_train_setup(cfg: dict):
    """(params, task or samples, TrainConfig, test_set, rule, resolved cfg)."""
    cfg = dict(TRAIN_DEFAULTS) | cfg
    cfg = resolve_mode(cfg)
    seeds = _derived_seeds(cfg["seed"])
    activation = Activation(cfg["activation"])

    curriculum = None
    T = cfg["T"]
    if isinstance(T, (list, tuple)):
        curriculum = tuple(int(t) for t in T)
        T = curriculum[0]

    if cfg["dataset"] is not None:
        samples = [tasks.sample_from_json(json.loads(line))
                   for line in Path(cfg["dataset"]).read_text().splitlines() if line]
        if not samples:
            raise ValueError("dataset: file holds no samples")
        kind = samples[0].kind
        spec = TaskSpec(kind=kind, T=samples[0].T,
                        pattern_len=cfg["pattern_len"], symbols=cfg["symbols"]) \
            if kind == "noiseless_memorization" else TaskSpec(kind=kind, T=samples[0].T)
        task: TaskSpec | list = samples
    else:
        spec = TaskSpec(kind=cfg["task"], T=T, pattern_len=cfg["pattern_len"],
                        symbols=cfg["symbols"], rng_seed=seeds["stream"])
        task = spec

    params = init_params(cfg["hidden"], tasks.input_dim(spec),
                         tasks.output_dim(spec), activation, seeds["init"])
    config = TrainConfig(
        learning_rate=float(cfg["lr"]), max_updates=cfg["max_updates"],
        clip=ClipPolicy(cfg["clip"], float(cfg["threshold"]))
        if cfg["clip"] != "none" else ClipPolicy(),
        alpha0=float(cfg["alpha"]), alpha_schedule=_SCHEDULE_NAMES[cfg["alpha_schedule"]],
        minibatch=cfg["batch"], eval_every=cfg["eval_every"], rng_seed=seeds["stream"],
        lr_halving=bool(cfg["lr_halving"]), epoch_size=cfg["epoch_size"],
        time_reduction=cfg["time_reduction"], curriculum_T=curriculum,
    )
    rule = optim.SuccessRule.for_task(spec)
    test_set = tasks.make_test_set(spec, cfg["eval_samples"], seeds["test"]) \
        if cfg["eval_samples"] > 0 else None
    return params, task, config, test_set, rule, cfg


def cmd_train(args) -> int:
    t0 = time.time()
    cfg = load_flat_config(Path(args.config)) if args.config else {}
    for key in TRAIN_DEFAULTS:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = flag
    problems = validate_train_config(cfg)
    if problems:
        for p in problems:
            print(f"config error - {p}", file=sys.stderr)
        return EXIT_USAGE

    params, task, config, test_set, rule, resolved = build_train_setup(cfg)
    out_dir = Path(resolved["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    result = optim.train(params, task, config, test_set, rule)

    ckpt = out_dir / "checkpoint.json"
    save_checkpoint(result.params, ckpt, seed=resolved["seed"])
    log_csv = out_dir / "train_log.csv"
    result.log.to_csv(log_csv)
    eval_csv = out_dir / "eval_log.csv"
    result.log.evals_to_csv(eval_csv)
    metrics = {
        "status": result.status,
        "updates_run": result.updates_run,
        "final_error_rate": result.log.evals[-1][1] if result.log.evals else None,
        "final_loss": result.log.updates[-1][1] if result.log.updates else None,
    }
    metrics_json = out_dir / "metrics.json"
    metrics_json.write_text(json.dumps(metrics, indent=2))
    artifacts = [str(p) for p in (ckpt, log_csv, eval_csv, metrics_json)]
    _write_manifest(out_dir, "train", resolved, resolved["seed"], artifacts,
                    result.status, t0)
    print(f"status={result.status} updates={result.updates_run} "
          f"final_error_rate={metrics['final_error_rate']}")
    return {"success": EXIT_OK, "budget_exhausted": EXIT_BUDGET,
            "diverged": EXIT_DIVERGED}[result.status]


# ---------------------------------------------------------------------------
# grad-check

def cmd_grad_check(args) -> int:
    activation = Activation(args.activation)
    rng = np.random.default_rng(args.seed)
    m, o = 3, 3
    params = init_params(args.n, m, o, activation, args.seed)
    x0 = np.zeros(args.n)
    inputs = rng.normal(0.0, 1.0, (args.T, m))
    spec = LossSpec("xent_final")
    targets = np.array([int(rng.integers(0, o))])
    scored = [args.T]

    table = grad_mod.gradient_check(params, x0, inputs, spec, scored, targets,
                                    eps=args.eps)

    traj = forward(params, x0, inputs)
    _, dE_dx, dE_dy = error_signals(params, traj, spec, scored, targets)
    report = grad_mod.bptt(params, traj, dE_dx, dE_dy)
    pen_grad, _ = regularizer.penalty_grad_immediate(params, traj, report.deltas)
    fd_pen = _frozen_penalty_fd(params, traj, report.deltas, eps=1e-6)
    abs_err = float(np.max(np.abs(pen_grad - fd_pen)))
    scale = max(float(np.max(np.abs(fd_pen))), 1e-12)
    table["penalty_wrec"] = (abs_err, abs_err / scale)

    failed = False
    print(f"{'block':>14} {'max abs err':>14} {'max rel err':>14}   result")
    for name, (a, r) in table.items():
        ok = r <= 1e-4
        failed |= not ok
        print(f"{name:>14} {a:14.3e} {r:14.3e}   {'pass' if ok else 'FAIL'}")
    return EXIT_USAGE if failed else EXIT_OK


def _frozen_penalty_fd(params: RnnParams, traj, deltas, eps: float) -> np.ndarray:
    """Finite differences of the penalty with states and error rows held fixed."""
    base = params.w_rec.copy()
    fd = np.zeros_like(base)
    for i in range(base.shape[0]):
        for j in range(base.shape[1]):
            for sign in (1.0, -1.0):
                w = base.copy()
                w[i, j] += sign * eps
                p = params.with_blocks((w, params.w_in, params.b,
                                        params.w_out, params.b_out))
                fd[i, j] += sign * regularizer.penalty(p, traj, deltas).total
            fd[i, j] /= 2.0 * eps
    return fd


# ---------------------------------------------------------------------------
# analyze

def cmd_analyze(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.what == "conditions":
        if args.checkpoint:
            params, _ = load_checkpoint(args.checkpoint)
        else:
            params = init_params(args.hidden, 1, 1, Activation(args.activation),
                                 args.seed)
        report = analysis.check_conditions(params)
        doc = asdict(report)
        path = out_dir / "conditions.json"
        path.write_text(json.dumps(doc, indent=2))
        print(json.dumps(doc, indent=2))
        _write_manifest(out_dir, "analyze conditions", _args_dict(args), args.seed,
                        [str(path)], "success", t0)
        return EXIT_OK

    if args.what == "bifurcation":
        b_values = np.linspace(args.b_min, args.b_max, args.steps)
        sweep = analysis.bifurcation_sweep(args.w, b_values)
        path = out_dir / "bifurcation.csv"
        with open(path, "w") as fh:
            fh.write("b,n_attractors,attractors,n_cycle,n_unresolved\n")
            for row in sweep.rows:
                pts = ";".join(fmt17(p) for p in row.points)
                fh.write(f"{fmt17(row.b)},{len(row.points)},{pts},"
                         f"{row.n_cycle},{row.n_unresolved}\n")
        bounds = out_dir / "boundaries.json"
        bounds.write_text(json.dumps({"w": args.w,
                                      "boundaries": list(sweep.boundaries)}))
        print(f"boundaries: {[round(b, 6) for b in sweep.boundaries]}")
        _write_manifest(out_dir, "analyze bifurcation", _args_dict(args), None,
                        [str(path), str(bounds)], "success", t0)
        return EXIT_OK

    if args.what == "surface":
        w_grid = np.linspace(args.w_min, args.w_max, args.w_steps)
        b_grid = np.linspace(args.b_min, args.b_max, args.b_steps)
        scan = analysis.error_surface_scan(w_grid, b_grid, x0=args.x0, T=args.T,
                                           target=args.target)
        path = out_dir / "surface.csv"
        with open(path, "w") as fh:
            fh.write("w,b,loss,grad_norm,saturated\n")
            for i, w in enumerate(scan.w_grid):
                for j, b in enumerate(scan.b_grid):
                    fh.write(f"{fmt17(float(w))},{fmt17(float(b))},"
                             f"{fmt17(float(scan.loss[i, j]))},"
                             f"{fmt17(float(scan.grad_norm[i, j]))},"
                             f"{int(scan.saturated[i, j])}\n")
        print(f"wrote {scan.loss.size} cells to {path}")
        _write_manifest(out_dir, "analyze surface", _args_dict(args), None,
                        [str(path)], "success", t0)
        return EXIT_OK

    if args.what == "direction":
        if args.checkpoint:
            params, _ = load_checkpoint(args.checkpoint)
            w_rec = params.w_rec
        else:
            # orthogonal basis with a spread spectrum: always diagonalizable
            rng = np.random.default_rng(args.seed)
            q, _ = np.linalg.qr(rng.standard_normal((args.n, args.n)))
            lams = np.linspace(args.radius, args.radius / 4.0, args.n)
            w_rec = q @ np.diag(lams) @ q.T
        if w_rec.shape[0] > 8:
            print("direction: matrices larger than 8x8 are unsupported",
                  file=sys.stderr)
            return EXIT_USAGE
        rng = np.random.default_rng(args.seed + 1)
        error_row = rng.standard_normal(w_rec.shape[0])
        try:
            res = analysis.exploding_direction(w_rec, error_row, args.l)
        except analysis.UnsupportedMatrixError as exc:
            print(f"direction: {exc}", file=sys.stderr)
            return EXIT_USAGE
        doc = {"l": args.l, "rel_error": res.rel_error,
               "dominant_eigenvalue": res.dominant_eigenvalue,
               "exact": res.exact.tolist(), "approx": res.approx.tolist()}
        path = out_dir / "direction.json"
        path.write_text(json.dumps(doc, indent=2))
        print(f"rel_error={res.rel_error:.3e} "
              f"dominant_eigenvalue={res.dominant_eigenvalue:.6f}")
        _write_manifest(out_dir, "analyze direction", _args_dict(args), args.seed,
                        [str(path)], "success", t0)
        return EXIT_OK

    if args.what == "suggest-threshold":
        spec = TaskSpec(kind=args.task, T=args.T, rng_seed=args.seed)
        params = init_params(args.hidden, tasks.input_dim(spec),
                             tasks.output_dim(spec), Activation(args.activation),
                             args.seed)
        config = TrainConfig(learning_rate=args.lr, max_updates=args.updates,
                             minibatch=args.batch, eval_every=0, rng_seed=args.seed)
        mean, peak = optim.suggest_threshold(params, spec, config, args.updates)
        doc = {"mean_grad_norm": mean, "max_grad_norm": peak,
               "updates": args.updates}
        path = out_dir / "threshold.json"
        path.write_text(json.dumps(doc, indent=2))
        print(f"mean ||g|| = {mean:.6g}   max ||g|| = {peak:.6g} "
              f"over {args.updates} unclipped updates")
        _write_manifest(out_dir, "analyze suggest-threshold", _args_dict(args),
                        args.seed, [str(path)], "success", t0)
        return EXIT_OK

    print(f"unknown analyze subcommand {args.what!r}", file=sys.stderr)
    return EXIT_USAGE


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rnnlab",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen-data", help="write a JSON-lines dataset")
    g.add_argument("--task", required=True, choices=tasks.KINDS)
    g.add_argument("--T", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--pattern-len", dest="pattern_len", type=int, default=5)
    g.add_argument("--symbols", type=int, default=2)
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a network; exit 0/2/3 per outcome")
    t.add_argument("--config", help="flat JSON or key=value config file")
    t.add_argument("--task", choices=tasks.KINDS)
    t.add_argument("--T", type=_int_or_list)
    t.add_argument("--dataset")
    t.add_argument("--mode", choices=("SGD", "SGD-C", "SGD-CR"))
    t.add_argument("--hidden", type=int)
    t.add_argument("--activation", choices=("tanh", "sigmoid", "identity"))
    t.add_argument("--lr", type=float)
    t.add_argument("--clip", choices=optim.CLIP_KINDS)
    t.add_argument("--threshold", type=float)
    t.add_argument("--alpha", type=float)
    t.add_argument("--alpha-schedule", dest="alpha_schedule",
                   choices=sorted(set(_SCHEDULE_NAMES)))
    t.add_argument("--batch", type=int)
    t.add_argument("--max-updates", dest="max_updates", type=int)
    t.add_argument("--eval-every", dest="eval_every", type=int)
    t.add_argument("--eval-samples", dest="eval_samples", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--epoch-size", dest="epoch_size", type=int)
    t.add_argument("--lr-halving", dest="lr_halving", action="store_const", const=True)
    t.add_argument("--time-reduction", dest="time_reduction",
                   choices=optim.TIME_REDUCTIONS)
    t.add_argument("--pattern-len", dest="pattern_len", type=int)
    t.add_argument("--symbols", type=int)
    t.add_argument("--out-dir", dest="out_dir")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("grad-check", help="BPTT and penalty gradients vs finite differences")
    c.add_argument("--n", type=int, default=20)
    c.add_argument("--T", type=int, default=10)
    c.add_argument("--activation", default="tanh",
                   choices=("tanh", "sigmoid", "identity"))
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--eps", type=float, default=1e-5)
    c.set_defaults(func=cmd_grad_check)

    a = sub.add_parser("analyze", help="dynamics and conditioning diagnostics")
    asub = a.add_subparsers(dest="what", required=True)

    ac = asub.add_parser("conditions")
    ac.add_argument("--checkpoint")
    ac.add_argument("--hidden", type=int, default=50)
    ac.add_argument("--activation", default="tanh",
                    choices=("tanh", "sigmoid", "identity"))
    ac.add_argument("--seed", type=int, default=0)
    ac.add_argument("--out-dir", dest="out_dir", default="runs/analyze")
    ac.set_defaults(func=cmd_analyze)

    ab = asub.add_parser("bifurcation")
    ab.add_argument("--w", type=float, default=5.0)
    ab.add_argument("--b-min", dest="b_min", type=float, default=-5.0)
    ab.add_argument("--b-max", dest="b_max", type=float, default=0.0)
    ab.add_argument("--steps", type=int, default=101)
    ab.add_argument("--out-dir", dest="out_dir", default="runs/analyze")
    ab.set_defaults(func=cmd_analyze)

    asf = asub.add_parser("surface")
    asf.add_argument("--w-min", dest="w_min", type=float, default=-1.0)
    asf.add_argument("--w-max", dest="w_max", type=float, default=6.0)
    asf.add_argument("--w-steps", dest="w_steps", type=int, default=71)
    asf.add_argument("--b-min", dest="b_min", type=float, default=-4.0)
    asf.add_argument("--b-max", dest="b_max", type=float, default=1.0)
    asf.add_argument("--b-steps", dest="b_steps", type=int, default=51)
    asf.add_argument("--T", type=int, default=50)
    asf.add_argument("--x0", type=float, default=0.5)
    asf.add_argument("--target", type=float, default=0.7)
    asf.add_argument("--out-dir", dest="out_dir", default="runs/analyze")
    asf.set_defaults(func=cmd_analyze)

    ad = asub.add_parser("direction")
    ad.add_argument("--checkpoint")
    ad.add_argument("--n", type=int, default=4)
    ad.add_argument("--radius", type=float, default=1.3,
                    help="dominant eigenvalue of the generated matrix")
    ad.add_argument("--seed", type=int, default=0)
    ad.add_argument("--l", type=int, default=50)
    ad.add_argument("--out-dir", dest="out_dir", default="runs/analyze")
    ad.set_defaults(func=cmd_analyze)

    at = asub.add_parser("suggest-threshold")
    at.add_argument("--task", required=True, choices=tasks.KINDS)
    at.add_argument("--T", type=int, required=True)
    at.add_argument("--hidden", type=int, default=50)
    at.add_argument("--activation", default="tanh",
                    choices=("tanh", "sigmoid", "identity"))
    at.add_argument("--lr", type=float, default=0.001)
    at.add_argument("--batch", type=int, default=16)
    at.add_argument("--seed", type=int, default=0)
    at.add_argument("--updates", type=int, default=200)
    at.add_argument("--out-dir", dest="out_dir", default="runs/analyze")
    at.set_defaults(func=cmd_analyze)

    return parser


def _int_or_list(text: str):
    if "," in text:
        return [int(t) for t in text.split(",") if t]
    return int(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, linalg.DimensionError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
