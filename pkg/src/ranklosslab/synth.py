"""Seeded synthetic ranking datasets with controlled imbalance.

Positives and negatives are Gaussian clouds centered at +/-(margin/2)
along a random unit direction ``u``.  With a non-negative margin the noise
is confined to the orthogonal complement of ``u``, so ``u`` certifies
linear separability with exactly the requested margin at any noise level;
a negative margin swaps the class means by its magnitude and uses fully
isotropic noise, producing overlapping (inseparable) data.  Per-group
offsets along a second direction orthogonal to ``u`` inject the
score-shift scenario without breaking joint separability.

All randomness flows through numpy's PCG64 generator seeded from the
config, so a (config, seed) pair reproduces the dataset bit for bit on
any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trainer import RankingDataset


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs.

    ``positives`` and ``negatives`` are totals, split across ``groups``
    round-robin.  ``margin >= 0`` requests certified separable data;
    ``margin < 0`` requests overlap of that magnitude.  ``score_shift``
    scales the per-group feature offset (group g is shifted by
    g * score_shift along the shift direction).
    """

    dim: int = 20
    positives: int = 30
    negatives: int = 300
    groups: int = 1
    margin: float = 0.1
    noise_sigma: float = 1.0
    seed: int = 0
    score_shift: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if self.positives < 0 or self.negatives < 0:
            raise ValueError("sample counts must be non-negative")
        if self.groups < 1:
            raise ValueError("groups must be at least 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


def _split_counts(total: int, groups: int) -> list[int]:
    base, extra = divmod(total, groups)
    return [base + (1 if g < extra else 0) for g in range(groups)]


def generate(cfg: SynthConfig) -> RankingDataset:
    """Draw a dataset; deterministic for a fixed config.

    When ``margin >= 0`` the returned dataset carries the certifying unit
    vector as ``separator`` (and the margin), verified by scoring before
    returning.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    u = rng.standard_normal(cfg.dim)
    u /= np.linalg.norm(u) if np.linalg.norm(u) > 0 else 1.0

    # Shift direction orthogonal to the separator; degenerates to zero in
    # one dimension, where no orthogonal direction exists.
    v = rng.standard_normal(cfg.dim)
    v -= (v @ u) * u
    vnorm = np.linalg.norm(v)
    v = v / vnorm if vnorm > 1e-12 else np.zeros(cfg.dim)

    pos_counts = _split_counts(cfg.positives, cfg.groups)
    neg_counts = _split_counts(cfg.negatives, cfg.groups)

    separable = cfg.margin >= 0
    blocks, labels, gids = [], [], []
    for g in range(cfg.groups):
        n_g = pos_counts[g] + neg_counts[g]
        if n_g == 0:
            continue
        noise = rng.standard_normal((n_g, cfg.dim)) * cfg.noise_sigma
        if separable:
            noise -= np.outer(noise @ u, u)
        mean = np.where(
            np.arange(n_g)[:, None] < pos_counts[g],
            (cfg.margin / 2.0) * u,
            (-cfg.margin / 2.0) * u,
        )
        block = mean + noise + (cfg.score_shift * g) * v
        blocks.append(block)
        labels.append(np.concatenate([np.ones(pos_counts[g]), np.zeros(neg_counts[g])]))
        gids.append(np.full(n_g, g))

    if blocks:
        features = np.concatenate(blocks)
        label_arr = np.concatenate(labels).astype(np.int64)
        gid_arr = np.concatenate(gids).astype(np.int64)
    else:
        features = np.empty((0, cfg.dim))
        label_arr = np.empty(0, dtype=np.int64)
        gid_arr = np.empty(0, dtype=np.int64)

    data = RankingDataset(
        features,
        label_arr,
        gid_arr,
        margin=cfg.margin if separable else None,
        separator=u if separable else None,
    )
    if separable and cfg.positives > 0 and cfg.negatives > 0:
        scores = features @ u
        gap = scores[label_arr == 1].min() - scores[label_arr == 0].max()
        if gap < cfg.margin - 1e-9:
            raise AssertionError(
                f"separability certificate failed: gap {gap} < margin {cfg.margin}"
            )
    return data
