"""Parameter store, initialization, Adam, losses, and the gradient checker."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Node, backward
from .errors import ShapeError
from .rng import Rng


def he_init(shape, fan_in: int, rng: Rng) -> np.ndarray:
    """Zero-mean Gaussian with std sqrt(2 / fan_in); fan_in = c_in * kh * kw."""
    if fan_in <= 0:
        raise ShapeError(f"he_init: fan_in must be positive, got {fan_in}")
    return rng.normal(tuple(shape), std=np.sqrt(2.0 / fan_in))


class ParamStore:
    """Ordered named parameters plus their Adam state."""

    def __init__(self):
        self._params: dict[str, Node] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.t = 0

    def add(self, name: str, value: np.ndarray) -> Node:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        node = Node(value, requires_grad=True)
        self._params[name] = node
        self._m[name] = np.zeros_like(node.value)
        self._v[name] = np.zeros_like(node.value)
        return node

    def __getitem__(self, name: str) -> Node:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def param_count(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.grad = None

    def adam_state(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        return self._m[name], self._v[name]

    def load_adam_state(self, name: str, m: np.ndarray, v: np.ndarray) -> None:
        if m.shape != self._params[name].value.shape:
            raise ShapeError(f"adam state for {name!r} has shape {m.shape}, "
                             f"expected {self._params[name].value.shape}")
        self._m[name] = m.astype(np.float64)
        self._v[name] = v.astype(np.float64)


def adam_step(store: ParamStore, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """Bias-corrected Adam update over every parameter; grads are cleared after."""
    store.t += 1
    bc1 = 1.0 - beta1 ** store.t
    bc2 = 1.0 - beta2 ** store.t
    for name, p in store.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.value)
        m = store._m[name]
        v = store._v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        p.grad = None


_NORM_FLOOR = 1e-12  # cosine terms with a vector norm below this contribute 0


def loss_l1_cosine(pred: Node, target: np.ndarray, lam: float = 5.0) -> Node:
    """Mean absolute error plus lam * mean per-pixel cosine dissimilarity.

    The cosine term compares the C-dimensional channel vector at each pixel
    of pred and target; pixels where either vector is (near-)zero are
    skipped so the loss stays finite.
    """
    target = np.asarray(target, dtype=np.float64)
    pv = pred.value
    if pv.shape != target.shape:
        raise ShapeError(f"loss_l1_cosine: pred shape {pv.shape} != target shape {target.shape}")
    n_el = pv.size
    n_px = pv.shape[0] * pv.shape[2] * pv.shape[3]

    diff = pv - target
    l1 = np.abs(diff).mean()

    dot = (pv * target).sum(axis=1)          # (n, h, w)
    np_norm = np.sqrt((pv * pv).sum(axis=1))
    nt_norm = np.sqrt((target * target).sum(axis=1))
    valid = (np_norm >= _NORM_FLOOR) & (nt_norm >= _NORM_FLOOR)
    denom = np.where(valid, np_norm * nt_norm, 1.0)
    cos = np.where(valid, dot / denom, 1.0)  # skipped pixels contribute 0
    cos_term = (1.0 - cos).sum() / n_px

    def vjp(g):
        g = float(g)
        grad = np.sign(diff) / n_el
        # d(1 - cos)/dpred = cos * p / |p|^2 - t / (|p| |t|), per valid pixel
        safe_np2 = np.where(valid, np_norm * np_norm, 1.0)
        gc = (cos / safe_np2)[:, None] * pv - target / denom[:, None]
        grad = grad + (lam / n_px) * np.where(valid[:, None], gc, 0.0)
        return g * grad

    return Node(np.float64(l1 + lam * cos_term), parents=(pred,), vjps=(vjp,))


def loss_smooth_l1(pred: Node, target: np.ndarray) -> Node:
    """Huber loss with the transition at |d| = 1, mean-reduced."""
    target = np.asarray(target, dtype=np.float64)
    pv = pred.value
    if pv.shape != target.shape:
        raise ShapeError(f"loss_smooth_l1: pred shape {pv.shape} != target shape {target.shape}")
    d = pv - target
    ad = np.abs(d)
    quad = ad < 1.0
    vals = np.where(quad, 0.5 * d * d, ad - 0.5)
    n_el = pv.size

    def vjp(g):
        return float(g) * np.where(quad, d, np.sign(d)) / n_el

    return Node(np.float64(vals.mean()), parents=(pred,), vjps=(vjp,))


@dataclass
class GradCheckReport:
    max_rel_error: float
    tol: float
    n_coords: int
    worst_input: int
    worst_coord: tuple

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def gradient_check(fn, inputs, tol: float, rng: Rng | None = None,
                   n_coords: int = 64, step: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients of a scalar-valued fn against central
    finite differences on a random coordinate subset.

    fn takes one Node per entry of inputs and returns a scalar Node. The
    relative error uses a unit floor: |a - n| / max(1, |a|, |n|).
    """
    rng = rng or Rng(0)
    inputs = [np.asarray(x, dtype=np.float64) for x in inputs]
    nodes = [Node(x.copy(), requires_grad=True) for x in inputs]
    loss = fn(*nodes)
    if loss.value.size != 1:
        raise ShapeError(f"gradient_check: fn must return a scalar, got shape {loss.value.shape}")
    backward(loss)
    grads = [n.grad if n.grad is not None else np.zeros_like(n.value) for n in nodes]

    coords = [(i, j) for i, x in enumerate(inputs) for j in range(x.size)]
    if len(coords) > n_coords:
        idx = rng.choice(len(coords), n_coords)
        coords = [coords[k] for k in idx]

    def eval_at(perturbed):
        frozen = [Node(x, requires_grad=False) for x in perturbed]
        return float(fn(*frozen).value)

    max_err = 0.0
    worst_i, worst_c = 0, (0,)
    for i, j in coords:
        flat = inputs[i].reshape(-1)
        orig = flat[j]
        flat[j] = orig + step
        f_plus = eval_at(inputs)
        flat[j] = orig - step
        f_minus = eval_at(inputs)
        flat[j] = orig
        numeric = (f_plus - f_minus) / (2.0 * step)
        analytic = grads[i].reshape(-1)[j]
        err = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
        if err > max_err:
            max_err = err
            worst_i = i
            worst_c = np.unravel_index(j, inputs[i].shape)
    return GradCheckReport(max_rel_error=max_err, tol=tol, n_coords=len(coords),
                           worst_input=worst_i, worst_coord=tuple(int(c) for c in worst_c))
