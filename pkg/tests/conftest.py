import numpy as np
import pytest

from gunet.rng import Rng

_ACCEPTANCE_LINES = []


def record_acceptance(line: str):
    _ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return Rng(20240901)


# ---------------------------------------------------------------- oracles

def conv2d_oracle(x, w, bias, stride, pad):
    """Six-nested-loop dense cross-correlation."""
    n, c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    y = np.zeros((n, c_out, oh, ow))
    for b in range(n):
        for co in range(c_out):
            for oy in range(oh):
                for ox in range(ow):
                    s = bias[co] if bias is not None else 0.0
                    for ci in range(c_in):
                        for ky in range(kh):
                            for kx in range(kw):
                                s += w[co, ci, ky, kx] * xp[b, ci, oy * stride + ky, ox * stride + kx]
                    y[b, co, oy, ox] = s
    return y


def transposed_conv2d_oracle(x, w, bias, stride, pad):
    """Stamp-and-sum: every input pixel stamps the scaled kernel."""
    n, c_in, h, wd = x.shape
    _, c_out, kh, kw = w.shape
    oh = (h - 1) * stride - 2 * pad + kh
    ow = (wd - 1) * stride - 2 * pad + kw
    full = np.zeros((n, c_out, (h - 1) * stride + kh, (wd - 1) * stride + kw))
    for b in range(n):
        for ci in range(c_in):
            for iy in range(h):
                for ix in range(wd):
                    v = x[b, ci, iy, ix]
                    for co in range(c_out):
                        full[b, co, iy * stride:iy * stride + kh,
                             ix * stride:ix * stride + kw] += v * w[ci, co]
    out = full[:, :, pad:pad + oh, pad:pad + ow]
    if bias is not None:
        out = out + bias[None, :, None, None]
    return out


def box_mean_oracle(x, radius):
    """Per-window clipped averaging with explicit loops."""
    n, c, h, w = x.shape
    out = np.zeros_like(x)
    for b in range(n):
        for ch in range(c):
            for i in range(h):
                for j in range(w):
                    ys, ye = max(i - radius, 0), min(i + radius, h - 1) + 1
                    xs, xe = max(j - radius, 0), min(j + radius, w - 1) + 1
                    out[b, ch, i, j] = x[b, ch, ys:ye, xs:xe].mean()
    return out


def dft2d_oracle(plane):
    """Direct O(N^4) evaluation of the DFT definition."""
    h, w = plane.shape
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    out = np.zeros((h, w), dtype=np.complex128)
    for u in range(h):
        for v in range(w):
            out[u, v] = (plane * np.exp(-2j * np.pi * (u * yy / h + v * xx / w))).sum()
    return out
