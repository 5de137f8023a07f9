import numpy as np
import pytest

from gunet import tensor_ops as T
from gunet.backends import available_backends, get_backend
from gunet.errors import ShapeError

from conftest import box_mean_oracle, conv2d_oracle, transposed_conv2d_oracle

BACKENDS = available_backends()


class TestConv2d:
    def test_identity_kernel(self, rng):
        x = rng.normal((1, 1, 5, 5))
        w = np.zeros((1, 1, 3, 3))
        w[0, 0, 1, 1] = 1.0
        np.testing.assert_allclose(T.conv2d(x, w, np.zeros(1), stride=1, pad=1), x)

    def test_1x1_doubling(self, rng):
        x = rng.normal((2, 3, 4, 4))
        w = np.zeros((3, 3, 1, 1))
        for c in range(3):
            w[c, c, 0, 0] = 2.0
        np.testing.assert_allclose(T.conv2d(x, w, np.zeros(3)), 2 * x)

    def test_matches_naive_oracle(self, rng):
        x = rng.normal((1, 2, 5, 5))
        w = rng.normal((3, 2, 3, 3))
        b = rng.normal((3,))
        want = conv2d_oracle(x, w, b, stride=1, pad=1)
        got = T.conv2d(x, w, b, stride=1, pad=1)
        assert np.abs(got - want).max() <= 1e-12

    def test_channel_mismatch_names_dims(self, rng):
        with pytest.raises(ShapeError, match="2 channels.*expects 3"):
            T.conv2d(rng.normal((1, 2, 4, 4)), rng.normal((1, 3, 3, 3)))

    def test_bad_bias_shape(self, rng):
        with pytest.raises(ShapeError, match="bias"):
            T.conv2d(rng.normal((1, 2, 4, 4)), rng.normal((3, 2, 3, 3)), np.zeros(4))

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_fuzz_against_oracle(self, backend, rng):
        k = get_backend(backend)
        for case in range(25):
            r = rng.child(case)
            n, ci, co = r.integers(1, 3), r.integers(1, 4), r.integers(1, 4)
            kh, kw = r.integers(1, 4), r.integers(1, 4)
            h = int(r.integers(kh, kh + 5))
            w = int(r.integers(kw, kw + 5))
            stride, pad = int(r.integers(1, 3)), int(r.integers(0, 2))
            x = r.normal((n, ci, h, w))
            wt = r.normal((co, ci, kh, kw))
            want = conv2d_oracle(x, wt, None, stride, pad)
            got = k.conv2d_forward(x, wt, stride, pad)
            assert np.abs(got - want).max() <= 1e-10


class TestTransposedConv2d:
    def test_single_pixel_stamp(self):
        x = np.full((1, 1, 1, 1), 3.5)
        w = np.ones((1, 1, 4, 4))
        got = T.transposed_conv2d(x, w, np.zeros(1), stride=2, pad=1)
        want = transposed_conv2d_oracle(x, w, np.zeros(1), 2, 1)
        assert got.shape == (1, 1, 2, 2)
        np.testing.assert_allclose(got, want)
        np.testing.assert_allclose(got, 3.5)

    def test_odd_kernel_checkerboard_mechanism(self):
        # constant input, 3x3 kernel, stride 2: overlap counts alternate
        x = np.ones((1, 1, 3, 3))
        w = np.ones((1, 1, 3, 3))
        got = T.transposed_conv2d(x, w, np.zeros(1), stride=2, pad=0)
        want = transposed_conv2d_oracle(x, w, np.zeros(1), 2, 0)
        np.testing.assert_allclose(got, want)
        assert got.max() > got.min()  # NOT constant: the checkerboard source

    def test_4x4_stride2_constant_interior(self):
        x = np.ones((1, 1, 4, 4))
        w = np.ones((1, 1, 4, 4))
        got = T.transposed_conv2d(x, w, np.zeros(1), stride=2, pad=1)
        interior = got[:, :, 1:-1, 1:-1]
        np.testing.assert_allclose(interior, interior[0, 0, 0, 0])

    def test_matches_stamp_oracle(self, rng):
        x = rng.normal((2, 3, 4, 5))
        w = rng.normal((3, 2, 4, 4))
        b = rng.normal((2,))
        got = T.transposed_conv2d(x, w, b, stride=2, pad=1)
        want = transposed_conv2d_oracle(x, w, b, 2, 1)
        assert np.abs(got - want).max() <= 1e-12

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_fuzz_against_oracle(self, backend, rng):
        k = get_backend(backend)
        for case in range(25):
            r = rng.child(1000 + case)
            n, ci, co = r.integers(1, 3), r.integers(1, 3), r.integers(1, 3)
            kh, kw = int(r.integers(2, 5)), int(r.integers(2, 5))
            stride = int(r.integers(1, 3))
            pad = int(r.integers(0, min(kh, kw) // 2 + 1))
            # include 1-pixel maps: kernel taps that fall entirely outside
            h, w = int(r.integers(1, 6)), int(r.integers(1, 6))
            x = r.normal((n, ci, h, w))
            wt = r.normal((ci, co, kh, kw))
            oh = (h - 1) * stride - 2 * pad + kh
            ow = (w - 1) * stride - 2 * pad + kw
            if oh < 1 or ow < 1:
                continue
            want = transposed_conv2d_oracle(x, wt, None, stride, pad)
            got = k.conv2d_grad_input(x, wt, stride, pad, oh, ow)
            assert np.abs(got - want).max() <= 1e-10

    def test_channel_mismatch(self, rng):
        with pytest.raises(ShapeError, match="channels"):
            T.transposed_conv2d(rng.normal((1, 2, 4, 4)), rng.normal((3, 2, 4, 4)))


class TestBoxMean:
    def test_constant_input(self):
        x = np.full((1, 2, 5, 5), 4.25)
        np.testing.assert_allclose(T.box_mean(x, 2), x)

    def test_radius_zero_identity(self, rng):
        x = rng.normal((1, 1, 4, 4))
        np.testing.assert_array_equal(T.box_mean(x, 0), x)

    def test_matches_naive_oracle(self, rng):
        x = rng.normal((1, 1, 6, 6))
        assert np.abs(T.box_mean(x, 1) - box_mean_oracle(x, 1)).max() <= 1e-12

    def test_radius_larger_than_image_is_global_mean(self, rng):
        x = rng.normal((1, 2, 5, 4))
        got = T.box_mean(x, 100)
        want = np.broadcast_to(x.mean(axis=(2, 3), keepdims=True), x.shape)
        np.testing.assert_allclose(got, want)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_fuzz_against_oracle(self, backend, rng):
        k = get_backend(backend)
        for case in range(25):
            r = rng.child(2000 + case)
            n, c = int(r.integers(1, 3)), int(r.integers(1, 3))
            h, w = int(r.integers(1, 9)), int(r.integers(1, 9))
            radius = int(r.integers(0, 5))
            x = r.normal((n, c, h, w))
            counts = T.window_counts(h, w, radius)
            got = k.box_sum(x, radius) / counts
            assert np.abs(got - box_mean_oracle(x, radius)).max() <= 1e-10

    def test_output_within_input_range(self, rng):
        x = rng.normal((2, 3, 8, 8))
        out = T.box_mean(x, 2)
        for b in range(2):
            for c in range(3):
                assert out[b, c].min() >= x[b, c].min() - 1e-12
                assert out[b, c].max() <= x[b, c].max() + 1e-12


class TestResize:
    def test_nearest_single_pixel(self):
        out = T.resize_nearest(np.full((1, 1, 1, 1), 7.0))
        np.testing.assert_array_equal(out, np.full((1, 1, 2, 2), 7.0))

    def test_nearest_block_replication(self):
        x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
        out = T.resize_nearest(x)
        want = np.array([[[[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]]]], dtype=float)
        np.testing.assert_array_equal(out, want)

    def test_nearest_then_subsample_recovers(self, rng):
        x = rng.normal((1, 2, 3, 5))
        up = T.resize_nearest(x)
        np.testing.assert_array_equal(up[:, :, ::2, ::2], x)

    def test_nearest_composes_with_box_radius0(self, rng):
        x = rng.normal((1, 1, 3, 3))
        np.testing.assert_array_equal(T.box_mean(T.resize_nearest(x), 0), T.resize_nearest(x))

    def test_bilinear_constant(self):
        x = np.full((1, 2, 3, 3), 1.5)
        np.testing.assert_allclose(T.resize_bilinear(x, 7, 5), 1.5)

    def test_bilinear_half_pixel_convention(self):
        # hand evaluation of src = (dst + 0.5) * 0.5 - 0.5 on [0, 1]
        x = np.array([[[[0.0, 1.0]]]])
        np.testing.assert_allclose(T.resize_bilinear(x, 1, 4).ravel(),
                                   [0.0, 0.25, 0.75, 1.0])

    def test_bilinear_down_up_ramp_error_bounded(self):
        ramp = np.arange(16, dtype=float).reshape(1, 1, 4, 4) % 4
        down = T.resize_bilinear(ramp, 2, 2)
        up = T.resize_bilinear(down, 4, 4)
        assert np.abs(up - ramp).max() <= 1.0  # one ramp step

    def test_bilinear_zero_target_error(self, rng):
        with pytest.raises(ShapeError, match="target dims"):
            T.resize_bilinear(rng.normal((1, 1, 4, 4)), 0, 4)

    def test_bilinear_adjoint_inner_product(self, rng):
        x = rng.normal((1, 2, 5, 6))
        g = rng.normal((1, 2, 9, 4))
        lhs = (T.resize_bilinear(x, 9, 4) * g).sum()
        rhs = (x * T.resize_bilinear_adjoint(g, 5, 6)).sum()
        assert abs(lhs - rhs) <= 1e-10


class TestHelpers:
    def test_avg_pool2(self, rng):
        x = rng.normal((1, 1, 4, 4))
        out = T.avg_pool2(x)
        np.testing.assert_allclose(out[0, 0, 0, 0], x[0, 0, :2, :2].mean())

    def test_center_crop(self):
        x = np.arange(36, dtype=float).reshape(1, 1, 6, 6)
        out = T.center_crop(x, 2)
        np.testing.assert_array_equal(out[0, 0], x[0, 0, 2:4, 2:4])

    def test_ops_do_not_mutate_inputs(self, rng):
        x = rng.normal((1, 2, 6, 6))
        snapshot = x.copy()
        T.conv2d(x, rng.normal((2, 2, 3, 3)), np.zeros(2), 1, 1)
        T.box_mean(x, 2)
        T.resize_bilinear(x, 5, 5)
        T.resize_nearest(x)
        np.testing.assert_array_equal(x, snapshot)
