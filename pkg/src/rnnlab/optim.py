"""Minibatch SGD with gradient clipping, penalty scheduling, and success tracking.

The objective per update is E + alpha_t * P, where E is the task loss
(mean over the minibatch, sum over scored steps by default) and P the
norm-preservation penalty. The clip policy is applied to the gradient of
the combined objective, flattened over every parameter block.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import grad as grad_mod
from . import regularizer, tasks
from .model import NonFiniteStateError, RnnParams, forward_batch, _softmax
from .tasks import TaskSample, TaskSpec

CLIP_KINDS = ("none", "norm", "elementwise")
ALPHA_SCHEDULES = ("const", "inv_t", "inv_2t")
TIME_REDUCTIONS = ("sum", "mean")

UPDATE_COLUMNS = ("update", "loss", "grad_norm", "grad_norm_clipped", "clip_fired",
                  "penalty", "mean_ratio", "alpha", "lr")
EVAL_COLUMNS = ("update", "error_rate", "success")


@dataclass(frozen=True)
class ClipPolicy:
    kind: str = "none"
    threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in CLIP_KINDS:
            raise ValueError(f"unknown clip kind {self.kind!r}")
        if self.kind != "none" and not self.threshold > 0:
            raise ValueError("clip threshold must be positive")


def clip_norm(g, threshold: float) -> np.ndarray:
    """Rescale g to norm == threshold when ||g|| >= threshold; direction kept."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient passed to clip_norm")
    norm = float(np.linalg.norm(g))
    if norm >= threshold and norm > 0.0:
        return g * (threshold / norm)
    return g.copy()


def clip_elementwise(g, threshold: float) -> np.ndarray:
    """Clamp every entry to [-threshold, threshold]."""
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient passed to clip_elementwise")
    return np.clip(g, -threshold, threshold)


def sgd_step(params: RnnParams, gradient_blocks: Sequence[np.ndarray],
             lr: float) -> RnnParams:
    """theta <- theta - lr * g over every parameter block."""
    return params.with_blocks(tuple(p - lr * g for p, g
                                    in zip(params.blocks(), gradient_blocks)))


@dataclass(frozen=True)
class SuccessRule:
    kind: str                 # classification | regression
    tol: float = 0.04         # per-sequence |prediction - target| bound

    @staticmethod
    def for_task(spec_or_kind) -> "SuccessRule":
        kind = spec_or_kind.kind if isinstance(spec_or_kind, TaskSpec) else spec_or_kind
        return SuccessRule("regression" if tasks.is_regression(kind) else "classification")


@dataclass
class TrainConfig:
    learning_rate: float
    max_updates: int
    clip: ClipPolicy = ClipPolicy()
    alpha0: float = 0.0
    alpha_schedule: str = "const"
    minibatch: int = 16
    eval_every: int = 5000
    rng_seed: int = 0
    lr_halving: bool = False
    epoch_size: int = 1000     # updates per epoch for lr halving / alpha schedules
    time_reduction: str = "sum"
    curriculum_T: tuple[int, ...] | None = None  # sample T per update from this set

    def __post_init__(self):
        if self.learning_rate <= 0 or self.minibatch <= 0 or self.epoch_size <= 0:
            raise ValueError("rates and sizes must be positive")
        if self.max_updates < 0 or self.eval_every < 0:
            raise ValueError("update counts must be nonnegative")
        if self.alpha_schedule not in ALPHA_SCHEDULES:
            raise ValueError(f"unknown alpha schedule {self.alpha_schedule!r}")
        if self.time_reduction not in TIME_REDUCTIONS:
            raise ValueError(f"unknown time reduction {self.time_reduction!r}")

    def alpha_at_epoch(self, epoch: int) -> float:
        if self.alpha_schedule == "inv_t":
            return self.alpha0 / epoch
        if self.alpha_schedule == "inv_2t":
            return self.alpha0 / (2 * epoch)
        return self.alpha0


@dataclass
class TrainLog:
    updates: list[tuple] = field(default_factory=list)
    evals: list[tuple] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        idx = UPDATE_COLUMNS.index(name)
        return np.array([row[idx] for row in self.updates])

    def to_csv(self, path) -> None:
        _write_csv(path, UPDATE_COLUMNS, self.updates)

    def evals_to_csv(self, path) -> None:
        _write_csv(path, EVAL_COLUMNS, self.evals)


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt17(v) for v in row])


def fmt17(v):
    """Serialize floats with 17 significant digits (exact float64 round trip)."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


@dataclass
class TrainResult:
    params: RnnParams
    log: TrainLog
    status: str          # success | budget_exhausted | diverged
    updates_run: int


# ---------------------------------------------------------------------------
# batched loss plumbing

def _assemble_inputs(samples: Sequence[TaskSample], m: int) -> np.ndarray:
    t_max = max(s.T_realized for s in samples)
    u = np.zeros((t_max, len(samples), m))
    for si, s in enumerate(samples):
        u[:s.T_realized, si, :] = s.inputs
    return u


def _scored_index(samples: Sequence[TaskSample]):
    """Flattened (step, sample) index pairs plus targets and per-row weights."""
    ts, ss, rows_per_sample = [], [], []
    for si, s in enumerate(samples):
        rows_per_sample.append(len(s.scored_steps))
        ts.extend(s.scored_steps)
        ss.extend([si] * len(s.scored_steps))
    return np.asarray(ts), np.asarray(ss), rows_per_sample


def batch_loss_signals(params: RnnParams, btraj, samples: Sequence[TaskSample],
                       time_reduction: str = "sum"):
    """Mean loss over the batch plus dE/dx and dE/dy arrays for the sweep."""
    classification = not tasks.is_regression(samples[0].kind)
    ts, ss, rows_per_sample = _scored_index(samples)
    feats = btraj.act_states[ts, ss]                     # (K, n)
    y = feats @ params.w_out + params.b_out              # (K, o)
    if classification:
        labels = np.concatenate([np.asarray(s.targets, dtype=np.int64) for s in samples])
        if labels.min() < 0 or labels.max() >= params.o:
            raise ValueError(f"label out of range for {params.o} classes")
        p = _softmax(y)
        row_loss = -np.log(np.maximum(p[np.arange(len(ts)), labels], 1e-300))
        dy = p
        dy[np.arange(len(ts)), labels] -= 1.0
    else:
        targets = np.concatenate([np.asarray(s.targets, dtype=np.float64) for s in samples])
        diff = y - targets
        row_loss = (diff * diff).sum(axis=1)
        dy = 2.0 * diff
    if time_reduction == "mean":
        w = np.concatenate([np.full(r, 1.0 / r) for r in rows_per_sample])
        row_loss = row_loss * w
        dy = dy * w[:, None]
    total = float(row_loss.sum()) / len(samples)

    dE_dx = np.zeros_like(btraj.states)
    dE_dy = np.zeros(btraj.states.shape[:2] + (params.o,))
    dE_dx[ts, ss] = (dy @ params.w_out.T) * btraj.act_deriv[ts, ss]
    dE_dy[ts, ss] = dy
    return total, dE_dx, dE_dy


# ---------------------------------------------------------------------------
# evaluation

def evaluate(params: RnnParams, test_set: Sequence[TaskSample], rule: SuccessRule,
             chunk: int = 512) -> tuple[float, bool]:
    """Fraction of failed sequences and whether it clears the 1% bar.

    Classification sequences fail when any judged step mispredicts under
    argmax; regression sequences fail when |prediction - target| is not
    below rule.tol.
    """
    if len(test_set) == 0:
        raise ValueError("empty test set")
    failures = 0
    for lo in range(0, len(test_set), chunk):
        group = test_set[lo:lo + chunk]
        btraj = forward_batch(params, np.zeros(params.n), _assemble_inputs(group, params.m))
        ts, ss = [], []
        for si, s in enumerate(group):
            ts.extend(s.eval_steps)
            ss.extend([si] * len(s.eval_steps))
        y = btraj.act_states[np.asarray(ts), np.asarray(ss)] @ params.w_out + params.b_out
        pos = 0
        for s in group:
            k = len(s.eval_steps)
            ys = y[pos:pos + k]
            pos += k
            scored_pos = [s.scored_steps.index(t) for t in s.eval_steps]
            if rule.kind == "classification":
                want = np.asarray(s.targets)[scored_pos]
                ok = bool(np.all(ys.argmax(axis=1) == want))
            else:
                want = np.asarray(s.targets, dtype=np.float64)[scored_pos]
                ok = bool(np.all(np.abs(ys - want) < rule.tol))
            failures += not ok
    error_rate = failures / len(test_set)
    return error_rate, error_rate <= 0.01


# ---------------------------------------------------------------------------
# training loop

def _batch_iter(task, config: TrainConfig):
    """Yield minibatches; TaskSpec streams fresh samples, datasets cycle."""
    if isinstance(task, TaskSpec):
        rng = np.random.default_rng(config.rng_seed)
        choices = config.curriculum_T
        def batches():
            while True:
                spec = task if not choices else replace(task, T=int(rng.choice(choices)))
                yield [tasks.generate(spec, rng) for _ in range(config.minibatch)]
        return batches()
    pool = list(task)
    if not pool:
        raise ValueError("empty training dataset")
    cycled = itertools.cycle(pool)
    def dataset_batches():
        while True:
            yield [next(cycled) for _ in range(config.minibatch)]
    return dataset_batches()


def train(params: RnnParams, task: TaskSpec | Iterable[TaskSample],
          config: TrainConfig, test_set: Sequence[TaskSample] | None = None,
          rule: SuccessRule | None = None) -> TrainResult:
    """Run minibatch SGD on E + alpha_t * penalty until success or budget.

    Divergence (non-finite loss, state, or gradient) terminates with status
    'diverged' rather than raising. The returned log has one row per update
    and one per evaluation.
    """
    log = TrainLog()
    if config.max_updates == 0:
        return TrainResult(params, log, "budget_exhausted", 0)
    if rule is None and isinstance(task, TaskSpec):
        rule = SuccessRule.for_task(task)
    x0 = np.zeros(params.n)
    lr = config.learning_rate
    epoch = 1
    alpha_t = config.alpha_at_epoch(epoch)
    epoch_loss_sum, epoch_loss_count, prev_epoch_mean = 0.0, 0, None
    status = "budget_exhausted"
    update = 0

    for update, batch in enumerate(_batch_iter(task, config), start=1):
        try:
            # overflow here is an outcome (divergence), handled via isfinite checks
            with np.errstate(over="ignore", invalid="ignore"):
                btraj = forward_batch(params, x0, _assemble_inputs(batch, params.m))
                loss, dE_dx, dE_dy = batch_loss_signals(params, btraj, batch,
                                                        config.time_reduction)
                if not np.isfinite(loss):
                    raise NonFiniteStateError(0)
                report, deltas = grad_mod.bptt_batch(params, btraj, dE_dx, dE_dy)
                pen, mean_ratio = 0.0, 0.0
                blocks = list(report.blocks())
                if alpha_t != 0.0:
                    pen, mean_ratio, pen_grad = regularizer.penalty_batch(params, btraj, deltas)
                    blocks[0] = blocks[0] + alpha_t * pen_grad
        except (NonFiniteStateError, grad_mod.NonFiniteGradientError):
            status = "diverged"
            update -= 1
            break

        gnorm = float(np.sqrt(sum(float((b * b).sum()) for b in blocks)))
        if not np.isfinite(gnorm):
            status = "diverged"
            update -= 1
            break
        fired = False
        if config.clip.kind == "norm" and gnorm >= config.clip.threshold:
            scale = config.clip.threshold / gnorm
            blocks = [b * scale for b in blocks]
            fired = True
            gnorm_after = config.clip.threshold
        elif config.clip.kind == "elementwise":
            clipped = [np.clip(b, -config.clip.threshold, config.clip.threshold)
                       for b in blocks]
            fired = any(not np.array_equal(c, b) for c, b in zip(clipped, blocks))
            blocks = clipped
            gnorm_after = float(np.sqrt(sum(float((b * b).sum()) for b in blocks)))
        else:
            gnorm_after = gnorm
        params = sgd_step(params, blocks, lr)
        log.updates.append((update, loss, gnorm, gnorm_after, fired, pen,
                            mean_ratio, alpha_t, lr))

        epoch_loss_sum += loss
        epoch_loss_count += 1
        if epoch_loss_count == config.epoch_size:
            mean = epoch_loss_sum / epoch_loss_count
            if config.lr_halving and prev_epoch_mean is not None and mean > prev_epoch_mean:
                lr /= 2.0
            prev_epoch_mean = mean
            epoch_loss_sum, epoch_loss_count = 0.0, 0
            epoch += 1
            alpha_t = config.alpha_at_epoch(epoch)

        at_budget = update >= config.max_updates
        due = config.eval_every > 0 and update % config.eval_every == 0
        if test_set is not None and rule is not None and (due or at_budget):
            error_rate, ok = evaluate(params, test_set, rule)
            log.evals.append((update, error_rate, ok))
            if ok:
                status = "success"
                break
        if at_budget:
            break

    return TrainResult(params, log, status, update)


def suggest_threshold(params: RnnParams, task: TaskSpec, config: TrainConfig,
                      n_updates: int = 200) -> tuple[float, float]:
    """Mean and max unclipped gradient norm over a short probe run."""
    probe = replace(config, clip=ClipPolicy(), max_updates=n_updates, eval_every=0)
    result = train(params, task, probe)
    norms = result.log.column("grad_norm")
    if norms.size == 0:
        raise RuntimeError("probe run produced no updates")
    return float(norms.mean()), float(norms.max())
