"""Run manifests: everything needed to reproduce a CLI invocation bit for bit.

Every command writes one next to its outputs. ``gunet replay`` re-executes
the recorded command. The conventions block pins the choices the file
formats and numerics depend on but that the command line does not spell
out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .backends import backend_name

CONVENTIONS = {
    "dtype": "float64",
    "conv": "cross-correlation, zero padding",
    "bilinear_alignment": "half-pixel centres, clamped",
    "box_mean_borders": "normalized by clipped window size",
    "adam": {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
    "batchnorm": "batch statistics (eps 1e-5) unless spec says otherwise",
    "spectrum_layout": "raw DFT (DC at corners, Nyquist at centre)",
}


@dataclass
class RunManifest:
    command: str
    options: dict
    seed: int | None = None
    spec: dict | None = None
    tool_version: str = __version__
    kernel_backend: str = field(default_factory=backend_name)
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "options": self.options,
            "seed": self.seed,
            "spec": self.spec,
            "tool_version": self.tool_version,
            "kernel_backend": self.kernel_backend,
            "conventions": self.conventions,
        }

    def write(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(Path(path)) as f:
            d = json.load(f)
        m = cls(command=d["command"], options=d["options"], seed=d.get("seed"),
                spec=d.get("spec"))
        m.tool_version = d.get("tool_version", "unknown")
        m.kernel_backend = d.get("kernel_backend", "unknown")
        m.conventions = d.get("conventions", {})
        return m
