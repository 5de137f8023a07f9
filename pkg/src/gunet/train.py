"""Toy inverse-tone-mapping training: LDR in, HDR out, desk scale.

Batches are drawn by per-iteration child RNGs, so a resumed run samples
the exact same batches as an uninterrupted one. Checkpoints are a flat
binary of named float64 tensors (parameters plus Adam moments) with a
JSON index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Node, backward
from .errors import NumericsError
from .nn import adam_step, loss_l1_cosine, loss_smooth_l1
from .rng import Rng
from .toydata import ToyItmSample
from .unet import Network, NetworkSpec, build_network


def save_checkpoint(path, net: Network, iteration: int, extra: dict | None = None) -> None:
    """Write <path>.bin (flat tensors) and <path>.json (index + metadata)."""
    path = Path(path)
    bin_path = path.with_suffix(".bin")
    index = []
    offset = 0
    with open(bin_path, "wb") as f:
        for name, p in net.store.items():
            m, v = net.store.adam_state(name)
            for kind, arr in (("param", p.value), ("adam_m", m), ("adam_v", v)):
                data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
                f.write(data)
                index.append({
                    "name": name,
                    "kind": kind,
                    "offset": offset,
                    "shape": list(arr.shape),
                })
                offset += len(data)
    doc = {
        "format": "gunet-checkpoint-v1",
        "dtype": "<f8",
        "spec": net.spec.to_json(),
        "iteration": iteration,
        "adam_t": net.store.t,
        "tensors": index,
    }
    if extra:
        doc["extra"] = extra
    with open(path.with_suffix(".json"), "w") as f:
        json.dump(doc, f, indent=2)


def load_checkpoint(path) -> tuple[Network, int]:
    """Rebuild the network from a checkpoint; returns (net, iteration)."""
    path = Path(path)
    with open(path.with_suffix(".json")) as f:
        doc = json.load(f)
    if doc.get("format") != "gunet-checkpoint-v1":
        raise NumericsError(f"{path}: not a recognized checkpoint index")
    spec = NetworkSpec.from_json(doc["spec"])
    net = build_network(spec)
    blob = open(path.with_suffix(".bin"), "rb").read()
    loaded = {}
    for entry in doc["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count,
                            offset=entry["offset"]).reshape(shape).copy()
        loaded[(entry["name"], entry["kind"])] = arr
    for name, p in net.store.items():
        p.value[...] = loaded[(name, "param")]
        net.store.load_adam_state(name, loaded[(name, "adam_m")], loaded[(name, "adam_v")])
    net.store.t = int(doc["adam_t"])
    return net, int(doc["iteration"])


@dataclass
class TrainResult:
    losses: np.ndarray        # per-iteration loss values
    iterations: int
    net: Network


def train_toy(spec: NetworkSpec, dataset: list[ToyItmSample], lr: float = 3e-4,
              batch: int = 4, iters: int = 500, loss_kind: str = "l1cos",
              lam: float = 5.0, seed: int | None = None, log_path=None,
              resume_from=None, checkpoint_path=None,
              betas: tuple[float, float] = (0.9, 0.999), adam_eps: float = 1e-8,
              ) -> TrainResult:
    """Minimize the reconstruction loss of forward(ldr) against hdr.

    Aborts with NumericsError on a non-finite loss. Loss values are
    appended per iteration to log_path as CSV when given.
    """
    if not dataset:
        raise ValueError("train_toy: empty dataset")
    if batch > len(dataset):
        raise ValueError(f"train_toy: batch {batch} exceeds dataset size {len(dataset)}")
    if loss_kind not in ("l1cos", "smooth_l1"):
        raise ValueError(f"train_toy: unknown loss {loss_kind!r}")

    start_iter = 0
    if resume_from is not None:
        net, start_iter = load_checkpoint(resume_from)
        if net.spec.to_json() != spec.to_json():
            raise ValueError("train_toy: checkpoint spec differs from the requested spec")
    else:
        net = build_network(spec)
    batch_rng = Rng(seed if seed is not None else spec.seed, spawn_key=(0xBA7C,))

    losses = []
    log_file = open(log_path, "a") if log_path else None
    try:
        if log_file and start_iter == 0:
            log_file.write("iter,loss\n")
        for it in range(start_iter, iters):
            idx = batch_rng.child(it).choice(len(dataset), batch)
            ldr = np.concatenate([dataset[i].ldr for i in idx], axis=0)
            hdr = np.concatenate([dataset[i].hdr for i in idx], axis=0)
            pred = net.forward_node(Node(ldr, requires_grad=False))
            if loss_kind == "l1cos":
                loss = loss_l1_cosine(pred, hdr, lam=lam)
            else:
                loss = loss_smooth_l1(pred, hdr)
            lv = float(loss.value)
            if not np.isfinite(lv):
                raise NumericsError(
                    f"train_toy: non-finite loss {lv} at iteration {it} "
                    f"(lr={lr}, batch indices {list(map(int, idx))})"
                )
            backward(loss)
            adam_step(net.store, lr, beta1=betas[0], beta2=betas[1], eps=adam_eps)
            losses.append(lv)
            if log_file:
                log_file.write(f"{it},{lv:.17g}\n")
    finally:
        if log_file:
            log_file.close()

    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, net, iters)
    return TrainResult(losses=np.asarray(losses), iterations=iters, net=net)
