"""Linear-model training harnesses for the ranking losses.

A linear model scores each sample by an inner product with its feature
vector.  Training iterates one of four updates:

* ``error_driven_ap``  -- the error-driven ranking update: each pairwise
  loss term pushes its positive's and negative's scores apart through the
  feature difference, generalizing perceptron learning.  On linearly
  separable data this reaches exact zero loss in finitely many steps.
* ``smoothed_ap_gd``   -- plain gradient descent on the sigmoid-smoothed
  loss (the differentiable baseline).
* ``auc``              -- error-driven update for the pair-counting loss.
* ``inseparable_ap``   -- the margin-modified update (ramp numerator, hard
  rank denominator).  With step size delta / R^2 its accumulated exact
  loss obeys a regret-style bound against any comparator weight vector,
  which ``verify_regret_bound`` checks numerically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import SmoothedApConfig, _smoothed_core, _auc_core
from .batch import SampleBatch
from .gradients import GradOptions, _accelerated_core
from .losses import _ap_loss_core
from .steps import (
    HEAVISIDE,
    PIECEWISE_KIND,
    StepConfig,
    ramp_integral,
    step_value,
)

LOSS_KINDS = ("error_driven_ap", "smoothed_ap_gd", "auc", "inseparable_ap")


@dataclass(frozen=True)
class LinearModel:
    """Weight vector of a linear scorer."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise ValueError("theta must be one-dimensional")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        return int(self.theta.shape[0])


@dataclass(frozen=True)
class RankingDataset:
    """Feature rows plus ternary labels and group ids.

    ``margin`` and ``separator`` are optional certificates from the
    synthetic generator: under the separator every positive outscores
    every negative by at least the margin.
    """

    features: np.ndarray
    labels: np.ndarray
    group_ids: np.ndarray | None = None
    margin: float | None = None
    separator: np.ndarray | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array (samples x dim)")
        if features.shape[0] != labels.shape[0]:
            raise ValueError("features and labels must agree in sample count")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        if labels.size and not np.isin(labels, (-1, 0, 1)).all():
            raise ValueError("labels must be in {-1, 0, 1}")
        if self.group_ids is None:
            group_ids = np.zeros(labels.shape[0], dtype=np.int64)
        else:
            group_ids = np.asarray(self.group_ids, dtype=np.int64)
            if group_ids.shape != labels.shape:
                raise ValueError("group_ids must match labels in length")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "group_ids", group_ids)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def groups(self) -> list[int]:
        return np.unique(self.group_ids).tolist()

    def group_rows(self, gid: int) -> np.ndarray:
        return np.flatnonzero(self.group_ids == gid)

    def subset(self, index: np.ndarray) -> "RankingDataset":
        return RankingDataset(
            self.features[index],
            self.labels[index],
            self.group_ids[index],
            margin=self.margin,
            separator=self.separator,
        )


@dataclass
class TrainConfig:
    """Knobs for one training run.

    ``step_size=None`` resolves per loss kind: 1.0 for the error-driven
    and baseline updates, delta / R^2 for the inseparable update (the
    value its accumulated-loss bound assumes).  ``update_scope`` picks
    between joint updates on the whole dataset and online updates on one
    group at a time (a group with nonzero exact loss, chosen by seeded
    uniform draw).
    """

    loss_kind: str = "error_driven_ap"
    step_size: float | None = None
    max_iters: int = 1000
    step_cfg: StepConfig = HEAVISIDE
    stop_at_zero_loss: bool = True
    grad_opts: GradOptions = field(default_factory=GradOptions)
    smoothed: SmoothedApConfig = field(default_factory=SmoothedApConfig)
    update_scope: str = "joint"
    seed: int = 0
    record_weights: bool = False

    def __post_init__(self):
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r}; expected one of {LOSS_KINDS}")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.update_scope not in ("joint", "per_group"):
            raise ValueError("update_scope must be 'joint' or 'per_group'")
        if self.loss_kind == "inseparable_ap" and self.step_cfg.kind != PIECEWISE_KIND:
            raise ValueError("inseparable_ap requires a piecewise step_cfg (supplies delta)")


@dataclass
class TrainTrace:
    """Per-iteration record of one training run.

    ``ap_loss`` holds the exact hard-step loss of the batch used at each
    step, evaluated before the update; ``surrogate`` holds the value of
    whatever objective the update rule itself optimizes.  Weight snapshots
    (pre-update) and chosen group ids are kept when requested so the
    accumulated-loss bound can be replayed afterwards.
    """

    loss_kind: str
    step_size: float
    delta: float | None = None
    ap_loss: list[float] = field(default_factory=list)
    surrogate: list[float] = field(default_factory=list)
    wall_ns: list[int] = field(default_factory=list)
    pruned_neg: list[int] = field(default_factory=list)
    group_id: list[int] = field(default_factory=list)
    thetas: list[np.ndarray] | None = None
    final_joint_ap_loss: float = float("nan")

    @property
    def iterations(self) -> int:
        return len(self.ap_loss)

    def rows(self):
        """Yield (iter, loss_kind, ap_loss, surrogate, wall_ns, pruned_neg)."""
        for t in range(self.iterations):
            yield (
                t + 1,
                self.loss_kind,
                self.ap_loss[t],
                self.surrogate[t],
                self.wall_ns[t],
                self.pruned_neg[t],
            )


def score_dataset(model: LinearModel, data: RankingDataset) -> SampleBatch:
    """Score every sample with the model: one inner product per row."""
    if model.dim != data.dim:
        raise ValueError(f"model dim {model.dim} does not match feature dim {data.dim}")
    return SampleBatch(data.features @ model.theta, data.labels, data.group_ids)


def _partition_rows(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.flatnonzero(labels == 1), np.flatnonzero(labels == 0)


def _error_driven_grad(
    scores: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    n: int,
    cfg: StepConfig,
    opts: GradOptions,
) -> tuple[float, np.ndarray, int]:
    """Error-driven gradient on raw arrays (hot path, no batch wrapper)."""
    res = _accelerated_core(scores, pos, neg, n, cfg, opts)
    return res.loss, res.grad, res.pruned_negatives


def _inseparable_grad(
    scores: np.ndarray, pos: np.ndarray, neg: np.ndarray, n: int, delta: float
) -> tuple[float, np.ndarray]:
    """Margin-modified update: ramp numerator over a hard-rank denominator.

    Returns the smooth surrogate value (ramp-integral numerator over the
    same denominators) and the normalized score gradient; the update is
    exactly gradient descent on that surrogate with the denominators
    frozen at the current weights.
    """
    grad = np.zeros(n)
    p = pos.shape[0]
    if p == 0 or neg.shape[0] == 0:
        return 0.0, grad
    valid = np.concatenate([pos, neg])
    diffs = scores[valid][None, :] - scores[pos][:, None]
    hard = step_value(diffs, HEAVISIDE)
    rows = np.arange(p)
    denom = 1.0 + hard.sum(axis=1) - hard[rows, rows]
    soft = step_value(diffs[:, p:], StepConfig.piecewise(delta))
    terms = soft / denom[:, None]
    grad[pos] = -terms.sum(axis=1) / p
    grad[neg] = terms.sum(axis=0) / p
    surrogate = float((ramp_integral(diffs[:, p:], delta).sum(axis=1) / denom).sum() / p)
    return surrogate, grad


def jacobian_norm_bound(data: RankingDataset) -> float:
    """Upper bound R on the norm of the score-difference Jacobian.

    Uses the Frobenius norm of the positive-minus-negative feature
    difference rows stacked over the whole dataset: a valid (conservative)
    upper bound on the induced 2-norm of the pairwise-difference map for
    the full batch and for every group within it.
    """
    fpos = data.features[data.labels == 1]
    fneg = data.features[data.labels == 0]
    if fpos.shape[0] == 0 or fneg.shape[0] == 0:
        return 0.0
    sq = (
        fneg.shape[0] * (fpos**2).sum()
        + fpos.shape[0] * (fneg**2).sum()
        - 2.0 * fpos.sum(axis=0) @ fneg.sum(axis=0)
    )
    return float(np.sqrt(max(sq, 0.0)))


def _resolve_step_size(cfg: TrainConfig, data: RankingDataset) -> float:
    if cfg.step_size is not None:
        return cfg.step_size
    if cfg.loss_kind == "inseparable_ap":
        r = jacobian_norm_bound(data)
        if r == 0.0:
            raise ValueError("cannot derive step size: dataset has no positive-negative pair")
        return cfg.step_cfg.delta / (r * r)
    return 1.0


def error_driven_step(model: LinearModel, data: RankingDataset, cfg: TrainConfig) -> LinearModel:
    """One joint error-driven update of the weights.

    New weights are theta - eta * features^T g, with g the error-driven
    score gradient under ``cfg.grad_opts`` (the classic convergence
    argument uses the unnormalized form, ``normalize_by_positives=False``).
    """
    scores = data.features @ model.theta
    pos, neg = _partition_rows(data.labels)
    _, grad, _ = _error_driven_grad(scores, pos, neg, data.n, cfg.step_cfg, cfg.grad_opts)
    eta = _resolve_step_size(cfg, data)
    return LinearModel(model.theta - eta * (data.features.T @ grad))


def inseparable_step(model: LinearModel, data: RankingDataset, cfg: TrainConfig) -> LinearModel:
    """One joint margin-modified update (step size defaults to delta/R^2)."""
    scores = data.features @ model.theta
    pos, neg = _partition_rows(data.labels)
    _, grad = _inseparable_grad(scores, pos, neg, data.n, cfg.step_cfg.delta)
    eta = _resolve_step_size(cfg, data)
    return LinearModel(model.theta - eta * (data.features.T @ grad))


def _update_eval(
    kind: str,
    scores: np.ndarray,
    pos: np.ndarray,
    neg: np.ndarray,
    n: int,
    cfg: TrainConfig,
) -> tuple[float, float, np.ndarray, int]:
    """(exact hard-step loss, surrogate, score gradient, pruned count)."""
    exact = _ap_loss_core(scores, pos, neg, HEAVISIDE)
    if kind == "error_driven_ap":
        surrogate, grad, pruned = _error_driven_grad(
            scores, pos, neg, n, cfg.step_cfg, cfg.grad_opts
        )
        return exact, surrogate, grad, pruned
    if kind == "smoothed_ap_gd":
        surrogate, grad = _smoothed_core(scores, pos, neg, n, cfg.smoothed)
        return exact, surrogate, grad, 0
    if kind == "auc":
        surrogate, grad = _auc_core(scores, pos, neg, n, cfg.step_cfg)
        return exact, surrogate, grad, 0
    surrogate, grad = _inseparable_grad(scores, pos, neg, n, cfg.step_cfg.delta)
    return exact, surrogate, grad, 0


def train(
    model: LinearModel,
    data: RankingDataset,
    cfg: TrainConfig,
    timing: bool = False,
) -> tuple[LinearModel, TrainTrace]:
    """Run the configured update until zero exact loss or the iteration cap.

    Each iteration evaluates the update batch (whole dataset, or one
    erring group in ``per_group`` scope) at the current weights, records a
    trace row, and then applies the weight update.  Non-convergence is a
    recorded outcome, not an error.  ``timing`` fills the trace's wall_ns
    column with measured gradient-computation times; otherwise the column
    is zero so traces stay byte-reproducible.
    """
    if model.dim != data.dim:
        raise ValueError(f"model dim {model.dim} does not match feature dim {data.dim}")
    theta = np.array(model.theta, dtype=np.float64)
    features = data.features
    eta = _resolve_step_size(cfg, data)
    delta = cfg.step_cfg.delta if cfg.step_cfg.kind == PIECEWISE_KIND else None
    trace = TrainTrace(cfg.loss_kind, eta, delta)
    if cfg.record_weights:
        trace.thetas = []

    joint_pos, joint_neg = _partition_rows(data.labels)
    per_group = cfg.update_scope == "per_group"
    if per_group:
        gids = data.groups()
        group_rows = [data.group_rows(g) for g in gids]
        group_parts = [_partition_rows(data.labels[rows]) for rows in group_rows]
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))

    for _ in range(cfg.max_iters):
        scores = features @ theta
        if per_group:
            group_losses = [
                _ap_loss_core(scores[rows], p_, n_, HEAVISIDE)
                for rows, (p_, n_) in zip(group_rows, group_parts)
            ]
            erring = [k for k, v in enumerate(group_losses) if v > 0.0]
            if not erring:
                if cfg.stop_at_zero_loss:
                    break
                erring = list(range(len(gids)))
            chosen = erring[int(rng.integers(len(erring)))]
            rows = group_rows[chosen]
            pos, neg = group_parts[chosen]
            sub_scores = scores[rows]
            gid = gids[chosen]
        else:
            rows = None
            pos, neg = joint_pos, joint_neg
            sub_scores = scores
            gid = -1

        if timing:
            t0 = time.perf_counter_ns()
        exact, surrogate, grad, pruned = _update_eval(
            cfg.loss_kind, sub_scores, pos, neg, sub_scores.shape[0], cfg
        )
        wall = time.perf_counter_ns() - t0 if timing else 0

        trace.ap_loss.append(float(exact))
        trace.surrogate.append(float(surrogate))
        trace.wall_ns.append(int(wall))
        trace.pruned_neg.append(int(pruned))
        trace.group_id.append(int(gid))
        if cfg.record_weights:
            trace.thetas.append(theta.copy())

        if not per_group and cfg.stop_at_zero_loss and exact == 0.0:
            break
        if rows is None:
            theta -= eta * (features.T @ grad)
        else:
            theta -= eta * (features[rows].T @ grad)

    final = LinearModel(theta)
    final_scores = features @ theta
    trace.final_joint_ap_loss = _ap_loss_core(final_scores, joint_pos, joint_neg, HEAVISIDE)
    return final, trace


def surrogate_loss(
    u: np.ndarray, data: RankingDataset, theta_hat: np.ndarray, delta: float
) -> float:
    """Smooth surrogate of the ranking loss at comparator weights ``u``.

    Numerators are ramp integrals of the pairwise differences scored by
    ``u``; denominators are the hard ranks scored by ``theta_hat`` (a
    training trajectory point).  Always at least delta/4 times the exact
    loss when both arguments coincide.
    """
    u = np.asarray(u, dtype=np.float64)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if u.shape[0] != data.dim or theta_hat.shape[0] != data.dim:
        raise ValueError("weight dimension does not match feature dimension")
    pos, neg = _partition_rows(data.labels)
    p = pos.shape[0]
    if p == 0 or neg.shape[0] == 0:
        return 0.0
    su = data.features @ u
    sh = data.features @ theta_hat
    valid = np.concatenate([pos, neg])
    hard = step_value(sh[valid][None, :] - sh[pos][:, None], HEAVISIDE)
    rows = np.arange(p)
    denom = 1.0 + hard.sum(axis=1) - hard[rows, rows]
    q = ramp_integral(su[neg][None, :] - su[pos][:, None], delta)
    return float((q.sum(axis=1) / denom).sum() / p)


@dataclass(frozen=True)
class BoundReport:
    """Both sides of the accumulated-loss bound for one comparator."""

    T: int
    accumulated_ap_loss: float
    bound_value: float
    surrogate_sum_at_u: float
    R: float
    Z_u: float | None
    satisfied: bool
    # Offline (fixed update batch) refinements of the average loss bound;
    # None when the run used varying groups.
    offline_bound_log: float | None = None
    offline_bound_saturating: float | None = None
    offline_satisfied: bool | None = None


def _ramp_row_sums(u: np.ndarray, data: RankingDataset, delta: float) -> np.ndarray:
    """Per-positive sums of ramp integrals at comparator ``u``."""
    pos, neg = _partition_rows(data.labels)
    su = data.features @ u
    return ramp_integral(su[neg][None, :] - su[pos][:, None], delta).sum(axis=1)


def verify_regret_bound(
    trace: TrainTrace,
    data: RankingDataset,
    u: np.ndarray,
    delta: float,
    R: float | None = None,
    tol: float = 1e-9,
) -> BoundReport:
    """Check the accumulated-loss bound of the margin-modified update.

    The summed exact loss over the run must not exceed (8/delta) times the
    summed surrogate at the comparator plus (4 R^2 / delta^2) times the
    squared distance from the initial weights to the comparator.  Requires
    a trace recorded with weight snapshots and the step size delta / R^2
    the bound's derivation assumes.
    """
    if trace.loss_kind != "inseparable_ap":
        raise ValueError("bound verification requires an inseparable_ap training trace")
    if trace.thetas is None or len(trace.thetas) != trace.iterations:
        raise ValueError("trace must carry a weight snapshot for every iteration")
    if R is None:
        R = jacobian_norm_bound(data)
    expected_eta = delta / (R * R)
    if abs(trace.step_size - expected_eta) > 1e-9 * max(expected_eta, 1.0):
        raise ValueError(
            f"step size {trace.step_size} does not match delta/R^2 = {expected_eta}; "
            "the bound derivation assumes that step size"
        )
    u = np.asarray(u, dtype=np.float64)
    T = trace.iterations
    group_cache: dict[int, RankingDataset] = {}

    def group_data(gid: int) -> RankingDataset:
        if gid not in group_cache:
            group_cache[gid] = data if gid == -1 else data.subset(data.group_rows(gid))
        return group_cache[gid]

    surrogate_sum = 0.0
    for t in range(T):
        surrogate_sum += surrogate_loss(u, group_data(trace.group_id[t]), trace.thetas[t], delta)

    accumulated = float(np.sum(trace.ap_loss))
    distance_sq = float(np.sum((u - trace.thetas[0]) ** 2))
    bound = (8.0 / delta) * surrogate_sum + (4.0 * R * R / delta**2) * distance_sq
    satisfied = accumulated <= bound + tol

    z_u = None
    b_log = b_sat = off_ok = None
    if len(set(trace.group_id)) == 1:
        gdata = group_data(trace.group_id[0])
        row_sums = _ramp_row_sums(u, gdata, delta)
        if row_sums.size:
            z_u = float(row_sums.max())
            p = row_sums.shape[0]
            tail = (4.0 * R * R / delta**2) * distance_sq / T
            b_log = (np.log(p) + 1.0) / p * (8.0 / delta) * z_u + tail
            zb = (8.0 / delta) * z_u
            b_sat = zb / (1.0 + zb) + tail
            off_ok = accumulated / T <= min(b_log, b_sat) + tol

    return BoundReport(
        T=T,
        accumulated_ap_loss=accumulated,
        bound_value=bound,
        surrogate_sum_at_u=surrogate_sum,
        R=R,
        Z_u=z_u,
        satisfied=satisfied,
        offline_bound_log=b_log,
        offline_bound_saturating=b_sat,
        offline_satisfied=off_ok,
    )
