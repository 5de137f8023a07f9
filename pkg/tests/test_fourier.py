import numpy as np
import pytest

from gunet.errors import ShapeError
from gunet.fourier import ComplexPlane, dft2d

from conftest import dft2d_oracle


def test_impulse_flat_magnitude():
    plane = np.zeros((8, 8))
    plane[0, 0] = 1.0
    np.testing.assert_allclose(dft2d(plane).magnitude(), 1.0)


def test_constant_plane_dc_only():
    v = 2.75
    z = dft2d(np.full((8, 8), v))
    mag = z.magnitude()
    assert abs(mag[0, 0] - v * 64) <= 1e-9
    mag[0, 0] = 0.0
    assert mag.max() <= 1e-9


def test_checkerboard_single_nyquist_bin():
    idx = np.indices((8, 8)).sum(axis=0)
    cb = np.where(idx % 2 == 0, 1.0, -1.0)
    mag = dft2d(cb).magnitude()
    want = dft2d_oracle(cb)
    assert np.abs((dft2d(cb).re + 1j * dft2d(cb).im) - want).max() <= 1e-9
    hot = np.argwhere(mag > 1e-9)
    assert hot.shape == (1, 2) and tuple(hot[0]) == (4, 4)


def test_matches_naive_oracle(rng):
    for case, (h, w) in enumerate([(2, 2), (4, 8), (8, 8), (16, 4)]):
        plane = rng.child(case).normal((h, w))
        got = dft2d(plane)
        want = dft2d_oracle(plane)
        assert np.abs((got.re + 1j * got.im) - want).max() <= 1e-9


def test_parseval(rng):
    plane = rng.normal((16, 16))
    energy_spatial = (plane ** 2).sum() * plane.size
    energy_freq = (dft2d(plane).magnitude() ** 2).sum()
    assert abs(energy_spatial - energy_freq) / energy_spatial <= 1e-9


def test_linearity(rng):
    a = rng.normal((8, 8))
    b = rng.child(1).normal((8, 8))
    alpha, beta = 1.7, -0.3
    za, zb, zc = dft2d(a), dft2d(b), dft2d(alpha * a + beta * b)
    np.testing.assert_allclose(zc.re, alpha * za.re + beta * zb.re, atol=1e-9)
    np.testing.assert_allclose(zc.im, alpha * za.im + beta * zb.im, atol=1e-9)


def test_non_power_of_two_rejected():
    with pytest.raises(ShapeError, match="power"):
        dft2d(np.zeros((6, 8)))
    with pytest.raises(ShapeError, match="crop"):
        dft2d(np.zeros((8, 12)))


def test_non_2d_rejected():
    with pytest.raises(ShapeError):
        dft2d(np.zeros((2, 2, 2)))


def test_complex_plane_round_trip(rng):
    z = rng.normal((4, 4)) + 1j * rng.child(1).normal((4, 4))
    cp = ComplexPlane.from_complex(z)
    np.testing.assert_array_equal(cp.re + 1j * cp.im, z)
    np.testing.assert_allclose(cp.magnitude(), np.abs(z))
