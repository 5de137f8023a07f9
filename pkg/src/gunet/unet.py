"""Declarative construction and execution of the encoder-decoder variants.

Each level of the recursion owns: a 1x1 Pre-Skip conv producing the
high-res feature x, a stride-2 Down conv producing the low-res feature y,
a Post-Down conv feeding the child level, a 1x1 alignment conv mapping the
child output back to the level width (z), a fusion stage that combines
x/y/z according to the chosen variant, and a 1x1 Post-Fuse conv.

Fusion variants: a plain autoencoder (upsample z, ignore x and y), three
concatenation UNets differing in how z is upsampled (transposed conv,
nearest-resize conv, bilinear-resize conv), and guided fusion, which is
parameter free: it filters z under y and applies the upsampled
coefficients to x.

The innermost child is a bottleneck of pre-activation residual blocks
(BN -> ReLU -> conv, twice, plus identity). All other convs with spatial
extent are also pre-activation units; 1x1 convs are left plain so detail
is not filtered at those points. The output head is linear.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Node
from .errors import ShapeError
from .guided_filter import GifParams, guided_upsample
from .nn import ParamStore, he_init
from .rng import Rng

FUSION_KINDS = ("autoencoder", "concat_tc", "concat_nn", "concat_bi", "guided")

# short CLI-facing architecture names
ARCH_TO_KIND = {
    "ae": "autoencoder",
    "tc": "concat_tc",
    "nn": "concat_nn",
    "bi": "concat_bi",
    "gunet": "guided",
}
KIND_TO_ARCH = {v: k for k, v in ARCH_TO_KIND.items()}
ARCH_LABELS = {
    "ae": "Autoencoder",
    "tc": "TC-UNet",
    "nn": "NN-UNet",
    "bi": "BI-UNet",
    "gunet": "GUNet",
}


@dataclass(frozen=True)
class FusionKind:
    kind: str
    gif: GifParams | None = None

    def __post_init__(self):
        if self.kind not in FUSION_KINDS:
            raise ValueError(f"unknown fusion kind {self.kind!r}; expected one of {FUSION_KINDS}")
        if self.kind == "guided" and self.gif is None:
            object.__setattr__(self, "gif", GifParams())
        if self.kind != "guided" and self.gif is not None:
            raise ValueError(f"fusion kind {self.kind!r} takes no guided-filter params")

    @classmethod
    def from_arch(cls, arch: str, gif: GifParams | None = None) -> "FusionKind":
        if arch not in ARCH_TO_KIND:
            raise ValueError(f"unknown architecture {arch!r}; expected one of {sorted(ARCH_TO_KIND)}")
        kind = ARCH_TO_KIND[arch]
        return cls(kind, gif if kind == "guided" else None)

    @property
    def arch(self) -> str:
        return KIND_TO_ARCH[self.kind]

    @property
    def label(self) -> str:
        return ARCH_LABELS[self.arch]

    def to_json(self):
        d = {"kind": self.kind}
        if self.gif is not None:
            d["gif"] = self.gif.to_json()
        return d

    @classmethod
    def from_json(cls, d) -> "FusionKind":
        gif = GifParams.from_json(d["gif"]) if "gif" in d else None
        return cls(d["kind"], gif)


@dataclass(frozen=True)
class NetworkSpec:
    fusion: FusionKind
    levels: tuple[int, ...] = (16, 32, 64, 128)
    bottleneck_blocks: int = 4
    in_channels: int = 3
    out_channels: int = 3
    conv_kernel: int = 3
    skip_kernel: int = 1
    tc_kernel: int = 4
    seed: int = 0
    bn_batch_stats: bool = True  # False: normalize with running statistics

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(c) for c in self.levels))
        if not self.levels or any(c <= 0 for c in self.levels):
            raise ValueError(f"levels must be non-empty positive widths, got {self.levels}")
        if self.bottleneck_blocks < 0:
            raise ValueError("bottleneck_blocks must be >= 0")
        if self.conv_kernel % 2 != 1:
            raise ValueError("conv_kernel must be odd (same-size padding)")

    def with_seed(self, seed: int) -> "NetworkSpec":
        return replace(self, seed=int(seed))

    def to_json(self):
        return {
            "fusion": self.fusion.to_json(),
            "levels": list(self.levels),
            "bottleneck_blocks": self.bottleneck_blocks,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "conv_kernel": self.conv_kernel,
            "skip_kernel": self.skip_kernel,
            "tc_kernel": self.tc_kernel,
            "seed": self.seed,
            "bn_batch_stats": self.bn_batch_stats,
        }

    @classmethod
    def from_json(cls, d) -> "NetworkSpec":
        return cls(
            fusion=FusionKind.from_json(d["fusion"]),
            levels=tuple(d["levels"]),
            bottleneck_blocks=int(d["bottleneck_blocks"]),
            in_channels=int(d["in_channels"]),
            out_channels=int(d["out_channels"]),
            conv_kernel=int(d["conv_kernel"]),
            skip_kernel=int(d["skip_kernel"]),
            tc_kernel=int(d["tc_kernel"]),
            seed=int(d["seed"]),
            bn_batch_stats=bool(d.get("bn_batch_stats", True)),
        )

    def to_json_str(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json_str(cls, s: str) -> "NetworkSpec":
        return cls.from_json(json.loads(s))


class BatchNorm:
    """Per-channel normalization; batch statistics by default, with running
    buffers maintained for the switchable running-stats mode."""

    eps = 1e-5
    momentum = 0.1

    def __init__(self, store: ParamStore, name: str, channels: int):
        self.gamma = store.add(f"{name}.gamma", np.ones(channels))
        self.beta = store.add(f"{name}.beta", np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)

    def __call__(self, x: Node, batch_stats: bool = True) -> Node:
        if batch_stats:
            xv = x.value
            self.running_mean += self.momentum * (xv.mean(axis=(0, 2, 3)) - self.running_mean)
            self.running_var += self.momentum * (xv.var(axis=(0, 2, 3)) - self.running_var)
            return ad.batchnorm(x, self.gamma, self.beta, eps=self.eps)
        scale = 1.0 / np.sqrt(self.running_var + self.eps)
        xn = (x - self.running_mean[None, :, None, None]) * scale[None, :, None, None]
        return ad.channel_scale_shift(xn, self.gamma, self.beta)


class ConvUnit:
    """Conv layer, optionally as a pre-activation unit (BN -> ReLU -> conv)."""

    def __init__(self, store: ParamStore, name: str, c_in: int, c_out: int, kernel: int,
                 rng: Rng, stride: int = 1, prenorm: bool = False, transposed: bool = False):
        self.stride = stride
        self.pad = (kernel - 1) // 2 if not transposed else (kernel - 2) // 2
        self.transposed = transposed
        self.bn = BatchNorm(store, f"{name}.norm", c_in) if prenorm else None
        shape = (c_in, c_out, kernel, kernel) if transposed else (c_out, c_in, kernel, kernel)
        self.w = store.add(f"{name}.w", he_init(shape, fan_in=c_in * kernel * kernel, rng=rng))
        self.b = store.add(f"{name}.b", np.zeros(c_out))

    def __call__(self, x: Node, batch_stats: bool = True) -> Node:
        if self.bn is not None:
            x = ad.relu(self.bn(x, batch_stats))
        if self.transposed:
            return ad.transposed_conv2d(x, self.w, self.b, stride=self.stride, pad=self.pad)
        return ad.conv2d(x, self.w, self.b, stride=self.stride, pad=self.pad)


class ResidualBlock:
    """Pre-activation residual unit: x + conv(relu(bn(conv(relu(bn(x)))))) ."""

    def __init__(self, store: ParamStore, name: str, channels: int, kernel: int, rng: Rng):
        self.unit1 = ConvUnit(store, f"{name}.unit1", channels, channels, kernel, rng, prenorm=True)
        self.unit2 = ConvUnit(store, f"{name}.unit2", channels, channels, kernel, rng, prenorm=True)

    def __call__(self, x: Node, batch_stats: bool = True) -> Node:
        return x + self.unit2(self.unit1(x, batch_stats), batch_stats)


class Bottleneck:
    def __init__(self, store: ParamStore, spec: NetworkSpec, channels: int, rng: Rng):
        self.blocks = [
            ResidualBlock(store, f"bottleneck.block{i}", channels, spec.conv_kernel, rng)
            for i in range(spec.bottleneck_blocks)
        ]

    def forward(self, x: Node, batch_stats: bool = True) -> Node:
        for block in self.blocks:
            x = block(x, batch_stats)
        return x


class Level:
    """One recursive stage: encode, recurse, fuse, emit."""

    def __init__(self, store: ParamStore, spec: NetworkSpec, depth: int,
                 c_in: int, c_out: int, rng: Rng):
        c = spec.levels[depth]
        self.depth = depth
        self.width = c
        self.kind = spec.fusion.kind
        self.gif = spec.fusion.gif
        name = f"level{depth}"
        k, sk, tk = spec.conv_kernel, spec.skip_kernel, spec.tc_kernel

        self.pre_skip = ConvUnit(store, f"{name}.pre_skip", c_in, c, sk, rng)
        self.down = ConvUnit(store, f"{name}.down", c, c, k, rng, stride=2, prenorm=True)
        deeper = depth + 1 < len(spec.levels)
        child_c = spec.levels[depth + 1] if deeper else spec.levels[-1]
        self.post_down = ConvUnit(store, f"{name}.post_down", c, child_c, k, rng, prenorm=True)
        if deeper:
            self.child = Level(store, spec, depth + 1, c_in=child_c, c_out=child_c, rng=rng)
        else:
            self.child = Bottleneck(store, spec, child_c, rng)
        self.z_align = ConvUnit(store, f"{name}.z_align", child_c, c, sk, rng)

        if self.kind in ("autoencoder", "concat_tc"):
            self.upsample = ConvUnit(store, f"{name}.up", c, c, tk, rng, stride=2,
                                     prenorm=True, transposed=True)
        elif self.kind in ("concat_nn", "concat_bi"):
            self.upsample = ConvUnit(store, f"{name}.up", c, c, k, rng, prenorm=True)
        else:
            self.upsample = None
        if self.kind.startswith("concat"):
            self.fuse = ConvUnit(store, f"{name}.fuse", 2 * c, c, sk, rng)
        else:
            self.fuse = None

        self.post_fuse = ConvUnit(store, f"{name}.post_fuse", c, c_out, sk, rng)

    def fuse_features(self, x: Node, y: Node, z: Node, batch_stats: bool = True) -> Node:
        """Combine the high-res skip x with the low-res y/z per the variant."""
        if self.kind == "guided":
            # parameter-free: x, y, z share the level width by construction
            assert x.value.shape[1] == y.value.shape[1] == z.value.shape[1] == self.width
            return guided_upsample(x, y, z, self.gif)
        if self.kind == "autoencoder":
            return self.upsample(z, batch_stats)
        if self.kind == "concat_tc":
            up = self.upsample(z, batch_stats)
        elif self.kind == "concat_nn":
            up = self.upsample(ad.resize_nearest(z), batch_stats)
        else:  # concat_bi
            h, w = z.value.shape[2], z.value.shape[3]
            up = self.upsample(ad.resize_bilinear(z, 2 * h, 2 * w), batch_stats)
        return self.fuse(ad.concat_channels(x, up))

    def forward(self, inp: Node, batch_stats: bool = True) -> Node:
        x = self.pre_skip(inp)
        y = self.down(x, batch_stats)
        down = self.post_down(y, batch_stats)
        child_out = self.child.forward(down, batch_stats)
        z = self.z_align(child_out)
        fused = self.fuse_features(x, y, z, batch_stats)
        return self.post_fuse(fused)


class Network:
    def __init__(self, spec: NetworkSpec, store: ParamStore, root: Level):
        self.spec = spec
        self.store = store
        self.root = root

    @property
    def arch(self) -> str:
        return self.spec.fusion.arch

    def forward_node(self, image: Node) -> Node:
        v = image.value
        if v.ndim != 4 or v.shape[1] != self.spec.in_channels:
            raise ShapeError(
                f"forward: expected (n, {self.spec.in_channels}, h, w) input, got {v.shape}"
            )
        div = 2 ** len(self.spec.levels)
        if v.shape[2] % div or v.shape[3] % div or v.shape[2] < div or v.shape[3] < div:
            raise ShapeError(
                f"forward: spatial dims {v.shape[2]}x{v.shape[3]} must be divisible by {div} "
                f"({len(self.spec.levels)} downsampling levels)"
            )
        return self.root.forward(image, batch_stats=self.spec.bn_batch_stats)


def build_network(spec: NetworkSpec, rng: Rng | None = None) -> Network:
    """Instantiate parameters for a spec; construction order is fixed, so a
    given (spec, rng) pair always yields identical parameters."""
    rng = rng or Rng(spec.seed)
    store = ParamStore()
    root = Level(store, spec, depth=0, c_in=spec.in_channels, c_out=spec.out_channels, rng=rng)
    return Network(spec, store, root)


def forward(net: Network, image: np.ndarray) -> np.ndarray:
    """Run an image batch through the network, returning a plain array."""
    out = net.forward_node(Node(image, requires_grad=False))
    return out.value


def param_count(net: Network) -> int:
    """Exact learnable scalar tally."""
    return net.store.param_count()


def param_count_breakdown(net: Network) -> dict[str, int]:
    return {name: p.value.size for name, p in net.store.items()}
