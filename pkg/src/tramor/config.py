"""Experiment configuration schema (JSON) with field-path validation errors."""

import hashlib
import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .fom import MODEL_KINDS
from .integrators import SCHEMES
from .numerics import IDENTITY, PERIODIC_SHIFT, VIRTUAL_SHIFT
from .rom import PHASES


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(field path, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{loc}: {msg}" for loc, msg in self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IntegratorConfig(_Strict):
    scheme: Literal[SCHEMES] = "implicit_trapezoid"
    tau: float = Field(5e-3, gt=0)
    rel_tol: float = Field(1e-3, gt=0)
    abs_tol: float = Field(1e-6, gt=0)


class InitialCondition(_Strict):
    center: float = 0.5
    width: float = Field(0.1, gt=0)
    sign: float = -1.0


class ModelConfig(_Strict):
    kind: Literal[MODEL_KINDS] = "advection_diffusion"
    n: int = Field(200, ge=8)
    c: float = 1.0
    mu: float = Field(2e-3, ge=0)
    dxi: float | None = Field(None, gt=0)
    t_end: float = Field(1.0, gt=0)
    ic: InitialCondition = InitialCondition()

    @model_validator(mode="after")
    def _bounded_needs_dxi(self):
        if self.kind == "advection_diffusion_dirichlet_neumann" and self.dxi is None:
            raise ValueError("the Dirichlet/Neumann model needs 'dxi'")
        return self


class FomConfig(_Strict):
    source: Literal["simulate", "analytic"] = "simulate"
    integrator: IntegratorConfig = IntegratorConfig()
    samples: int | None = Field(None, ge=2)


class FrameConfig(_Strict):
    transform: Literal[IDENTITY, PERIODIC_SHIFT, VIRTUAL_SHIFT] = PERIODIC_SHIFT
    rank: int = Field(..., gt=0)
    path: Literal["analytic", "estimated", "file"] = "analytic"
    velocity: float = 1.0
    file: Path | None = None

    @model_validator(mode="after")
    def _file_exists(self):
        if self.path == "file":
            if self.file is None:
                raise ValueError("path source 'file' needs 'file'")
            if not Path(self.file).is_file():
                raise ValueError(f"path file {self.file} does not exist")
        return self


class OfflineConfig(_Strict):
    method: Literal["spod", "pod"] = "spod"
    frames: list[FrameConfig] = Field(default_factory=lambda: [FrameConfig(rank=2)], min_length=1)
    sweeps: int = Field(10, gt=0)
    hidden_weight: float = Field(1e-4, gt=0)


class RomConfig(_Strict):
    phase: Literal[PHASES] = "residual"
    integrator: IntegratorConfig = IntegratorConfig()
    regularization: float = Field(0.0, ge=0)
    per_mode_paths: bool = False


class SweepConfig(_Strict):
    c_start: float = -5.0
    c_stop: float = 5.0
    c_step: float = Field(0.2, gt=0)
    spod_rank: int = Field(2, gt=0)
    pod_ranks: list[int] = Field(default_factory=lambda: [3, 11])
    integrator: IntegratorConfig = IntegratorConfig(scheme="rk45", rel_tol=1e-6, abs_tol=1e-9)


class StepsConfig(_Strict):
    schemes: list[Literal["rk45", "rk23"]] = Field(default_factory=lambda: ["rk45", "rk23"])
    rel_tol: float = Field(1e-3, gt=0)
    abs_tol: float = Field(1e-6, gt=0)
    pod_error_target: float = Field(1e-2, gt=0)


class GridStudyConfig(_Strict):
    dxi: list[float] = Field(default_factory=lambda: [5e-3, 2.5e-3, 1.25e-3, 6.25e-4], min_length=1)
    ranks: list[int] = Field(default_factory=lambda: [4], min_length=1)


class AnalysisConfig(_Strict):
    C_tilde: float = Field(1.0, ge=1)
    omega: float = Field(0.0, ge=0)
    compare_pod_ranks: list[int] = Field(default_factory=list)
    sweep: SweepConfig | None = None
    steps: StepsConfig | None = None
    grid_study: GridStudyConfig | None = None


class IoConfig(_Strict):
    out_dir: Path = Path("out")
    formats: list[Literal["csv", "bin"]] = Field(default_factory=lambda: ["csv", "bin"])


class ExperimentConfig(_Strict):
    name: str = "experiment"
    model: ModelConfig = ModelConfig()
    fom: FomConfig = FomConfig()
    offline: OfflineConfig = OfflineConfig()
    rom: RomConfig = RomConfig()
    analysis: AnalysisConfig = AnalysisConfig()
    io: IoConfig = IoConfig()

    def canonical_json(self):
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def _errors(exc):
    out = []
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        out.append((loc, e["msg"]))
    return out


def parse_config(data):
    """Validate a mapping; raises :class:`ConfigError` with field paths."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_errors(exc)) from None


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([("<file>", str(exc))]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("<json>", f"line {exc.lineno}: {exc.msg}")]) from None
    return parse_config(data)
