import numpy as np
import pytest

from ranklosslab import (
    LinearModel,
    SampleBatch,
    SynthConfig,
    ap_loss,
    auc_loss,
    generate,
    score_dataset,
)


class TestDeterminism:
    def test_same_seed_identical(self):
        cfg = SynthConfig(dim=7, positives=5, negatives=30, margin=0.1, seed=42)
        a, b = generate(cfg), generate(cfg)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.group_ids, b.group_ids)

    def test_different_seeds_differ(self):
        cfg = SynthConfig(dim=7, positives=5, negatives=30, margin=0.1, seed=42)
        other = generate(SynthConfig(dim=7, positives=5, negatives=30, margin=0.1, seed=43))
        assert not np.array_equal(generate(cfg).features, other.features)


class TestSeparability:
    @pytest.mark.parametrize("sigma", [0.0, 0.5, 2.0])
    def test_certificate_holds_at_any_noise_level(self, sigma):
        cfg = SynthConfig(dim=12, positives=10, negatives=80, margin=0.3, noise_sigma=sigma, seed=7)
        data = generate(cfg)
        assert data.separator is not None
        scores = data.features @ data.separator
        gap = scores[data.labels == 1].min() - scores[data.labels == 0].max()
        assert gap >= cfg.margin - 1e-9

    def test_certificate_survives_group_shifts(self):
        cfg = SynthConfig(
            dim=12, positives=10, negatives=80, groups=4, margin=0.3, seed=8, score_shift=5.0
        )
        data = generate(cfg)
        scores = data.features @ data.separator
        gap = scores[data.labels == 1].min() - scores[data.labels == 0].max()
        assert gap >= cfg.margin - 1e-9

    def test_negative_margin_overlaps(self):
        cfg = SynthConfig(dim=6, positives=20, negatives=40, margin=-0.5, noise_sigma=1.0, seed=9)
        data = generate(cfg)
        assert data.separator is None and data.margin is None
        # The class means are swapped, so the zero model's loss landscape
        # starts badly misordered.
        batch = score_dataset(LinearModel(np.ones(6)), data)
        assert ap_loss(batch) > 0.0


class TestStructure:
    def test_counts_split_across_groups(self):
        cfg = SynthConfig(dim=3, positives=7, negatives=10, groups=3, margin=0.1, seed=1)
        data = generate(cfg)
        assert (data.labels == 1).sum() == 7
        assert (data.labels == 0).sum() == 10
        assert data.groups() == [0, 1, 2]
        sizes = [data.group_rows(g).size for g in data.groups()]
        assert sum(sizes) == 17 and max(sizes) - min(sizes) <= 2

    def test_no_positives_means_zero_losses(self):
        cfg = SynthConfig(dim=4, positives=0, negatives=15, margin=0.1, seed=2)
        data = generate(cfg)
        batch = SampleBatch(data.features @ np.ones(4), data.labels)
        assert ap_loss(batch) == 0.0 and auc_loss(batch) == 0.0

    def test_one_dimensional_features(self):
        cfg = SynthConfig(dim=1, positives=3, negatives=5, margin=0.2, noise_sigma=1.0, seed=3)
        data = generate(cfg)
        assert data.features.shape == (8, 1)
        scores = data.features @ data.separator
        assert scores[data.labels == 1].min() - scores[data.labels == 0].max() >= 0.2 - 1e-9

    def test_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(dim=0)
        with pytest.raises(ValueError):
            SynthConfig(positives=-1)
        with pytest.raises(ValueError):
            SynthConfig(groups=0)
        with pytest.raises(ValueError):
            SynthConfig(noise_sigma=-0.1)
