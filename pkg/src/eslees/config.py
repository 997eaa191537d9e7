"""Run configuration: a JSON document with every key optional.

Example::

    {
      "backend": {"kind": "sphere", "max_degree": 6, "radius": 1.0},
      "tensor": {"kind": "shifted_nsd",
                 "T": {"kind": "random_nsd", "seed": 3, "smoothness": 2}},
      "operator": "fourth_order",
      "shift": 0.0,
      "solver": {"gap_rel_tol": 1e-6, "residual_tol": 1e-9, "max_iters": 5000, "seed": 0},
      "sign_tol": 1e-6,
      "count": 10,
      "verify": {"trials": 10, "seed": 0, "lambdas": [-5, 0, 5]},
      "output": {"dir": "eslees-out", "figures": true}
    }

Unknown keys are rejected at every level.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import manifold
from .errors import ConfigurationError
from .manifold import ManifoldDiscretization
from .spectrum import SolveSettings
from .tensorfield import (
    TensorField,
    random_nsd_field,
    random_potential,
    scaled_inverse_metric,
    shifted_nsd,
    tabulated,
)

BACKEND_PRESETS = {
    "circle": {"kind": "circle", "num_modes": 8, "radius": 1.0},
    "torus": {"kind": "flat_torus", "modes1": 6, "modes2": 6, "period1": 2 * math.pi, "period2": 2 * math.pi},
    "sphere": {"kind": "sphere", "max_degree": 6, "radius": 1.0},
    "icosphere": {"kind": "icosphere", "level": 3, "radius": 1.0},
}

BACKEND_KEYS = {
    "circle": {"num_modes", "radius"},
    "flat_torus": {"modes1", "modes2", "period1", "period2"},
    "sphere": {"max_degree", "radius"},
    "mesh": {"path"},
    "icosphere": {"level", "radius"},
}

DEFAULT_TENSOR = {"kind": "shifted_nsd", "T": {"kind": "scaled_inverse_metric", "coefficient": 0.0}}

TOP_KEYS = {
    "backend", "tensor", "operator", "potential", "shift", "solver",
    "sign_tol", "count", "verify", "output",
}
VERIFY_KEYS = {"mode", "trials", "seed", "lambdas", "smoothness", "amplitude", "backends"}
OUTPUT_KEYS = {"dir", "figures", "dump_matrices"}
SOLVER_KEYS = {"gap_rel_tol", "residual_tol", "max_iters", "seed"}


def _reject_unknown(section: str, given: dict, allowed: set) -> None:
    if not isinstance(given, dict):
        raise ConfigurationError(f"'{section}' must be a JSON object")
    extra = sorted(set(given) - allowed)
    if extra:
        raise ConfigurationError(f"unknown key(s) in '{section}': {', '.join(extra)}")


@dataclass
class VerifyOptions:
    mode: str = "all"
    trials: int = 10
    seed: int = 0
    lambdas: list = field(default_factory=lambda: [-5.0, 0.0, 5.0])
    smoothness: int = 2
    amplitude: float = 1.0
    backends: Optional[list] = None


@dataclass
class RunConfig:
    backend: dict = field(default_factory=lambda: dict(BACKEND_PRESETS["circle"]))
    tensor: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_TENSOR))
    operator: str = "fourth_order"
    potential: Optional[dict] = None
    shift: float = 0.0
    solver: SolveSettings = field(default_factory=SolveSettings)
    sign_tol: float = 1e-6
    count: int = 10
    verify: VerifyOptions = field(default_factory=VerifyOptions)
    out_dir: str = "eslees-out"
    figures: bool = True
    dump_matrices: bool = False

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        _reject_unknown("config", doc, TOP_KEYS)
        cfg = cls()
        if "backend" in doc:
            cfg.backend = normalize_backend(doc["backend"])
        if "tensor" in doc:
            _check_tensor_spec(doc["tensor"])
            cfg.tensor = doc["tensor"]
        if "operator" in doc:
            if doc["operator"] not in ("fourth_order", "second_order"):
                raise ConfigurationError("operator must be 'fourth_order' or 'second_order'")
            cfg.operator = doc["operator"]
        if "potential" in doc:
            _check_potential_spec(doc["potential"])
            cfg.potential = doc["potential"]
        if "shift" in doc:
            cfg.shift = float(doc["shift"])
        if "solver" in doc:
            _reject_unknown("solver", doc["solver"], SOLVER_KEYS)
            cfg.solver = SolveSettings(**doc["solver"])
        if "sign_tol" in doc:
            cfg.sign_tol = float(doc["sign_tol"])
            if not 0 < cfg.sign_tol < 1:
                raise ConfigurationError("sign_tol must lie in (0, 1)")
        if "count" in doc:
            cfg.count = int(doc["count"])
            if cfg.count < 1:
                raise ConfigurationError("count must be positive")
        if "verify" in doc:
            _reject_unknown("verify", doc["verify"], VERIFY_KEYS)
            cfg.verify = VerifyOptions(**doc["verify"])
            if cfg.verify.mode not in ("theorem", "holder", "shift", "all"):
                raise ConfigurationError("verify.mode must be theorem, holder, shift or all")
        if "output" in doc:
            _reject_unknown("output", doc["output"], OUTPUT_KEYS)
            out = doc["output"]
            cfg.out_dir = str(out.get("dir", cfg.out_dir))
            cfg.figures = bool(out.get("figures", cfg.figures))
            cfg.dump_matrices = bool(out.get("dump_matrices", cfg.dump_matrices))
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def normalize_backend(spec: Any) -> dict:
    if isinstance(spec, str):
        if spec not in BACKEND_PRESETS:
            raise ConfigurationError(f"unknown backend preset '{spec}' (choose from {', '.join(BACKEND_PRESETS)})")
        return dict(BACKEND_PRESETS[spec])
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("backend must be a preset name or an object with a 'kind'")
    kind = spec["kind"]
    if kind == "torus":
        kind = "flat_torus"
    if kind not in BACKEND_KEYS:
        raise ConfigurationError(f"unknown backend kind '{kind}'")
    _reject_unknown("backend", {k: v for k, v in spec.items() if k != "kind"}, BACKEND_KEYS[kind])
    preset = next((p for p in BACKEND_PRESETS.values() if p["kind"] == kind), {"kind": kind})
    return {**preset, **spec, "kind": kind}


def build_backend(spec: dict) -> ManifoldDiscretization:
    spec = normalize_backend(spec)
    kind = spec["kind"]
    if kind == "circle":
        return manifold.build_circle(int(spec["num_modes"]), float(spec["radius"]))
    if kind == "flat_torus":
        return manifold.build_flat_torus(
            int(spec["modes1"]), int(spec["modes2"]), float(spec["period1"]), float(spec["period2"])
        )
    if kind == "sphere":
        return manifold.build_sphere(int(spec["max_degree"]), float(spec["radius"]))
    if kind == "icosphere":
        return manifold.build_icosphere(int(spec["level"]), float(spec.get("radius", 1.0)))
    if "path" not in spec:
        raise ConfigurationError("mesh backend needs a 'path'")
    path = Path(spec["path"])
    if not path.is_file():
        raise ConfigurationError(f"mesh file not found: {path}")
    return manifold.load_mesh(path)


def _check_tensor_spec(spec: Any) -> None:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("tensor must be an object with a 'kind'")
    allowed = {
        "scaled_inverse_metric": {"coefficient"},
        "random_nsd": {"seed", "smoothness", "amplitude"},
        "tabulated": {"values", "label"},
        "shifted_nsd": {"T"},
    }
    kind = spec["kind"]
    if kind not in allowed:
        raise ConfigurationError(f"unknown tensor kind '{kind}'")
    _reject_unknown("tensor", {k: v for k, v in spec.items() if k != "kind"}, allowed[kind])
    if kind == "shifted_nsd":
        _check_tensor_spec(spec.get("T", {"kind": "scaled_inverse_metric"}))


def _check_potential_spec(spec: Any) -> None:
    if spec is None:
        return
    if not isinstance(spec, dict) or spec.get("kind") not in ("constant", "random"):
        raise ConfigurationError("potential must be {'kind': 'constant', ...} or {'kind': 'random', ...}")
    allowed = {"constant": {"value"}, "random": {"seed", "smoothness", "amplitude"}}[spec["kind"]]
    _reject_unknown("potential", {k: v for k, v in spec.items() if k != "kind"}, allowed)


def build_tensor(disc: ManifoldDiscretization, spec: dict, lambda2: Optional[float] = None) -> TensorField:
    """Evaluate a tensor spec; ``shifted_nsd`` needs ``lambda2``."""
    _check_tensor_spec(spec)
    kind = spec["kind"]
    if kind == "scaled_inverse_metric":
        return scaled_inverse_metric(disc, float(spec.get("coefficient", 0.0)))
    if kind == "random_nsd":
        return random_nsd_field(
            disc, int(spec.get("seed", 0)), int(spec.get("smoothness", 2)), float(spec.get("amplitude", 1.0))
        )
    if kind == "tabulated":
        if "values" not in spec:
            raise ConfigurationError("tabulated tensor needs 'values'")
        return tabulated(disc, spec["values"], spec.get("label", "tabulated"))
    if lambda2 is None:
        raise ConfigurationError("shifted_nsd tensor needs lambda2")
    T = build_tensor(disc, spec.get("T", {"kind": "scaled_inverse_metric", "coefficient": 0.0}))
    return shifted_nsd(disc, T, lambda2)


def build_potential(disc: ManifoldDiscretization, spec: Optional[dict]) -> np.ndarray:
    n = len(disc.node_coords)
    if spec is None:
        return np.ones(n)
    if spec["kind"] == "constant":
        return np.full(n, float(spec.get("value", 1.0)))
    return random_potential(
        disc, int(spec.get("seed", 0)), int(spec.get("smoothness", 2)), float(spec.get("amplitude", 1.0))
    )
