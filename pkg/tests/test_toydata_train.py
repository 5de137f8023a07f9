import numpy as np
import pytest

from gunet.errors import NumericsError
from gunet.rng import Rng
from gunet.toydata import make_natural_images, make_toy_dataset
from gunet.train import load_checkpoint, save_checkpoint, train_toy
from gunet.unet import FusionKind, NetworkSpec, build_network, forward


def tiny_spec(arch="gunet", seed=0):
    return NetworkSpec(fusion=FusionKind.from_arch(arch), levels=(4, 6),
                       bottleneck_blocks=1, seed=seed)


class TestToyDataset:
    def test_ldr_in_unit_range(self):
        data = make_toy_dataset(Rng(0), 12, size=32)
        for s in data:
            assert s.ldr.min() >= 0.0 and s.ldr.max() <= 1.0

    def test_hdr_exceeds_unit_in_most_samples(self):
        data = make_toy_dataset(Rng(1), 40, size=32)
        frac = np.mean([s.hdr.max() > 1.0 for s in data])
        assert frac >= 0.9

    def test_hdr_nonnegative(self):
        data = make_toy_dataset(Rng(2), 10, size=32)
        for s in data:
            assert s.hdr.min() >= 0.0

    def test_tone_mapping_consistency(self):
        for s in make_toy_dataset(Rng(3), 5, size=16):
            want = np.clip(s.gain * s.hdr ** (1.0 / s.gamma), 0.0, 1.0)
            np.testing.assert_allclose(s.ldr, want)

    def test_same_seed_identical(self):
        a = make_toy_dataset(Rng(7), 4, size=16)
        b = make_toy_dataset(Rng(7), 4, size=16)
        for sa, sb in zip(a, b):
            np.testing.assert_array_equal(sa.hdr, sb.hdr)
            np.testing.assert_array_equal(sa.ldr, sb.ldr)

    def test_gamma_gain_ranges(self):
        for s in make_toy_dataset(Rng(9), 20, size=16):
            assert 1.8 <= s.gamma <= 2.4
            assert 0.5 <= s.gain <= 2.0


class TestNaturalImages:
    def test_shape_and_range(self):
        imgs = make_natural_images(Rng(0), 2, size=64)
        for img in imgs:
            assert img.shape == (1, 3, 64, 64)
            assert img.min() >= 0.0 and img.max() <= 1.0

    def test_deterministic(self):
        a = make_natural_images(Rng(4), 2, size=32)
        b = make_natural_images(Rng(4), 2, size=32)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])


class TestTrainToy:
    def test_zero_lr_constant_loss(self):
        # dataset size == batch so every iteration sees the same batch
        data = make_toy_dataset(Rng(5), 4, size=16)
        res = train_toy(tiny_spec(), data, lr=0.0, batch=4, iters=4, seed=5)
        assert np.ptp(res.losses) == 0.0

    def test_loss_logged_to_csv(self, tmp_path):
        data = make_toy_dataset(Rng(5), 6, size=16)
        log = tmp_path / "loss.csv"
        train_toy(tiny_spec(), data, lr=1e-3, batch=2, iters=3, seed=5, log_path=log)
        lines = log.read_text().strip().splitlines()
        assert lines[0] == "iter,loss"
        assert len(lines) == 4

    def test_smooth_l1_option(self):
        data = make_toy_dataset(Rng(6), 4, size=16)
        res = train_toy(tiny_spec(), data, lr=1e-3, batch=2, iters=2, loss_kind="smooth_l1")
        assert np.isfinite(res.losses).all()

    def test_non_finite_loss_aborts(self):
        data = make_toy_dataset(Rng(7), 4, size=16)
        data[0].hdr[0, 0, 0, 0] = np.nan
        with pytest.raises(NumericsError, match="non-finite"):
            train_toy(tiny_spec(), data, lr=1e-3, batch=4, iters=2)

    def test_batch_larger_than_dataset_rejected(self):
        data = make_toy_dataset(Rng(8), 2, size=16)
        with pytest.raises(ValueError, match="batch"):
            train_toy(tiny_spec(), data, batch=4, iters=1)

    def test_resume_reproduces_next_step_bit_exactly(self, tmp_path):
        data = make_toy_dataset(Rng(9), 6, size=16)
        spec = tiny_spec(seed=21)

        straight = train_toy(spec, data, lr=1e-3, batch=2, iters=5, seed=21)

        ck = tmp_path / "ck"
        train_toy(spec, data, lr=1e-3, batch=2, iters=3, seed=21, checkpoint_path=ck)
        resumed = train_toy(spec, data, lr=1e-3, batch=2, iters=5, seed=21, resume_from=ck)

        np.testing.assert_array_equal(resumed.losses, straight.losses[3:])
        for (n1, p1), (n2, p2) in zip(straight.net.store.items(), resumed.net.store.items()):
            np.testing.assert_array_equal(p1.value, p2.value)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        net = build_network(tiny_spec(seed=31))
        img = rng.uniform(0, 1, (1, 3, 16, 16))
        before = forward(net, img)
        save_checkpoint(tmp_path / "ck", net, iteration=17)
        loaded, it = load_checkpoint(tmp_path / "ck")
        assert it == 17
        np.testing.assert_array_equal(forward(loaded, img), before)
        for (n1, p1), (n2, p2) in zip(net.store.items(), loaded.store.items()):
            assert n1 == n2
            np.testing.assert_array_equal(p1.value, p2.value)

    def test_bad_index_rejected(self, tmp_path):
        (tmp_path / "ck.json").write_text('{"format": "something-else"}')
        (tmp_path / "ck.bin").write_bytes(b"")
        with pytest.raises(NumericsError, match="checkpoint"):
            load_checkpoint(tmp_path / "ck")
