"""Experiment configuration: a single JSON file describing model, noise, run, and outputs.

All numbers are decimal, matrices are row-major nested arrays; the format is
diffable and hand-editable.  Validation failures carry the offending key
path (and line/column for parse errors) so broken configs are quick to fix.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .levy import LevySpec
from .sim import BROWNIAN_STEPS_PER_UNIT, ModelParams

#: environment variable overriding the output directory
OUTPUT_DIR_ENV = "MUCOGARCH_OUT"

KNOWN_REPORTS = ("paths", "moments", "check")


@dataclass(frozen=True)
class RunSettings:
    horizon: float
    grid_step: float
    delta: float
    n_paths: int
    seed: int
    burn_in: float = 0.0
    eps_ladder: tuple[float, ...] | None = None
    steps_per_unit: int = BROWNIAN_STEPS_PER_UNIT

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError("run.horizon: must be positive")
        if self.grid_step <= 0 or self.grid_step > self.horizon:
            raise ConfigError("run.grid_step: must lie in (0, horizon]")
        if self.burn_in < 0:
            raise ConfigError("run.burn_in: must be nonnegative")
        if self.n_paths < 1:
            raise ConfigError("run.n_paths: must be at least 1")
        if self.steps_per_unit < 1:
            raise ConfigError("run.steps_per_unit: must be at least 1")
        ratio = self.delta / self.grid_step
        if self.delta <= 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("run.delta: must be a positive multiple of run.grid_step")
        if self.eps_ladder is not None:
            lad = tuple(float(v) for v in self.eps_ladder)
            if any(v <= 0 for v in lad) or any(b >= a for a, b in zip(lad, lad[1:], strict=False)):
                raise ConfigError("run.eps_ladder: must be positive and strictly decreasing")
            object.__setattr__(self, "eps_ladder", lad)

    @property
    def grid(self) -> np.ndarray:
        n = int(round(self.horizon / self.grid_step))
        return self.grid_step * np.arange(n + 1)

    def to_dict(self) -> dict:
        out = {
            "horizon": self.horizon,
            "grid_step": self.grid_step,
            "delta": self.delta,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "burn_in": self.burn_in,
            "steps_per_unit": self.steps_per_unit,
        }
        if self.eps_ladder is not None:
            out["eps_ladder"] = list(self.eps_ladder)
        return out


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "out"
    reports: tuple[str, ...] = ("paths",)
    figures: bool = True

    def __post_init__(self):
        for r in self.reports:
            if r not in KNOWN_REPORTS:
                raise ConfigError(f"outputs.reports: unknown report {r!r} (choose from {KNOWN_REPORTS})")

    def to_dict(self) -> dict:
        return {"directory": self.directory, "reports": list(self.reports), "figures": self.figures}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    levy: LevySpec
    run: RunSettings
    outputs: OutputSettings = field(default_factory=OutputSettings)

    def __post_init__(self):
        if self.levy.dim != self.model.dim:
            raise ConfigError(
                f"levy.dim: driving noise dimension {self.levy.dim} does not match model dimension {self.model.dim}"
            )

    def to_dict(self) -> dict:
        return {
            "model": {
                "A": self.model.a.tolist(),
                "B": self.model.b.tolist(),
                "C": self.model.c.tolist(),
            },
            "levy": self.levy.to_dict(),
            "run": self.run.to_dict(),
            "outputs": self.outputs.to_dict(),
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()

    def output_dir(self, cli_out: str | None = None) -> Path:
        """Resolve the output directory: CLI flag, then environment, then config."""
        if cli_out:
            return Path(cli_out)
        env = os.environ.get(OUTPUT_DIR_ENV)
        if env:
            return Path(env)
        return Path(self.outputs.directory)


def _matrix(node, path: str) -> np.ndarray:
    try:
        m = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric matrix ({exc})") from exc
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"{path}: must be a square matrix, got shape {m.shape}")
    return m


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected an object")
    for key in ("model", "levy", "run"):
        if key not in data:
            raise ConfigError(f"{key}: missing section")
    mnode = data["model"]
    for key in ("A", "B", "C"):
        if key not in mnode:
            raise ConfigError(f"model.{key}: missing matrix")
    try:
        model = ModelParams(
            a=_matrix(mnode["A"], "model.A"),
            b=_matrix(mnode["B"], "model.B"),
            c=_matrix(mnode["C"], "model.C"),
        )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    try:
        spec = LevySpec.from_dict({"dim": model.dim, **data["levy"]})
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"levy: {exc}") from exc
    rnode = data["run"]
    try:
        run = RunSettings(
            horizon=float(rnode["horizon"]),
            grid_step=float(rnode["grid_step"]),
            delta=float(rnode.get("delta", rnode["grid_step"])),
            n_paths=int(rnode["n_paths"]),
            seed=int(rnode["seed"]),
            burn_in=float(rnode.get("burn_in", 0.0)),
            eps_ladder=(tuple(rnode["eps_ladder"]) if rnode.get("eps_ladder") else None),
            steps_per_unit=int(rnode.get("steps_per_unit", BROWNIAN_STEPS_PER_UNIT)),
        )
    except KeyError as exc:
        raise ConfigError(f"run.{exc.args[0]}: missing") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"run: {exc}") from exc
    onode = data.get("outputs", {})
    outputs = OutputSettings(
        directory=str(onode.get("directory", "out")),
        reports=tuple(onode.get("reports", ["paths"])),
        figures=bool(onode.get("figures", True)),
    )
    return ExperimentConfig(model=model, levy=spec, run=run, outputs=outputs)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(data)


def default_config() -> ExperimentConfig:
    """A small, stable demonstration setup used when no config file is given."""
    return config_from_dict(
        {
            "model": {
                "A": [[0.30, 0.05], [0.00, 0.25]],
                "B": [[-1.5, 0.3], [0.0, -2.0]],
                "C": [[1.00, 0.25], [0.25, 1.50]],
            },
            "levy": {
                "kind": "compound_poisson",
                "rate": 2.0,
                "epsilon": {"law": "constant", "value": 1.0},
                "sigma_w": 0.5,
            },
            "run": {
                "horizon": 40.0,
                "grid_step": 0.05,
                "delta": 0.5,
                "n_paths": 3,
                "seed": 20250809,
                "burn_in": 5.0,
                "eps_ladder": [0.5, 0.25, 0.125, 0.0625],
            },
            "outputs": {"directory": "out", "reports": ["paths", "moments", "check"], "figures": True},
        }
    )
