"""Experiment configuration: a pydantic model plus INI-style config files.

Config files are flat ``key = value`` pairs grouped in sections; section
names are only for readability, every key maps to one field.
"""
from __future__ import annotations

import configparser
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator

from .column import ColumnConfig, LearningMode
from .dataio import EncoderConfig
from .plasticity import PlasticityParams

DATA_DIR = Path(__file__).resolve().parents[2] / "data"

SECTIONS = {
    "column": ["p", "q", "theta", "mode", "init_weights", "lfsr_width", "shared_lfsr"],
    "plasticity": ["mu_capture", "mu_backoff", "mu_search", "mu_min"],
    "data": ["images", "labels", "cutoff", "limit"],
    "run": ["seed", "engine", "budget", "out_dir", "export_every", "eval_samples"],
    "convergence": ["window", "dw_epsilon", "cosine_threshold", "purity_threshold"],
    "incremental": ["phase1_budget", "phase2_budget", "hidden_class", "acquire_margin", "checkpoint"],
}


class ExperimentConfig(BaseModel):
    # column geometry and learning
    p: int = Field(256, ge=1)
    q: int = Field(10, ge=1)
    theta: int = Field(64, ge=1)
    mode: LearningMode = LearningMode.RSTDP
    init_weights: str = "3"
    lfsr_width: Literal[8, 16, 24, 32] = 32
    shared_lfsr: bool = False
    # learning rates tuned by a coarse sweep on the bundled 10k subset
    mu_capture: float = Field(0.6, ge=0, le=1)
    mu_backoff: float = Field(0.5, ge=0, le=1)
    mu_search: float = Field(0.01, ge=0, le=1)
    mu_min: float = Field(0.25, ge=0, le=1)
    # data
    images: str = str(DATA_DIR / "mnist10k-images-idx3-ubyte.gz")
    labels: str = str(DATA_DIR / "mnist10k-labels-idx1-ubyte.gz")
    cutoff: int = Field(64, ge=0, le=255)
    limit: Optional[int] = Field(None, ge=1)
    # run
    seed: int = 1
    engine: Literal["cycle", "functional"] = "functional"
    budget: int = Field(20_000, ge=1)
    out_dir: str = "runs/train"
    export_every: int = Field(5_000, ge=0)
    eval_samples: Optional[int] = Field(None, ge=1)
    # convergence / centroid criteria
    window: int = Field(1_000, ge=1)
    dw_epsilon: float = Field(0.01, gt=0)
    cosine_threshold: float = Field(0.6, ge=0, le=1)
    purity_threshold: float = Field(0.5, ge=0, le=1)
    # incremental acquisition
    phase1_budget: int = Field(10_000, ge=1)
    phase2_budget: int = Field(2_000, ge=1)
    hidden_class: int = Field(9, ge=0)
    acquire_margin: float = Field(0.05, ge=0)
    checkpoint: Optional[str] = None

    @field_validator("lfsr_width", mode="before")
    @classmethod
    def _width_from_text(cls, v):
        return int(v) if isinstance(v, str) and v.strip().isdigit() else v

    @field_validator("init_weights")
    @classmethod
    def _check_init(cls, v):
        if v != "uniform" and not (v.isdigit() and 0 <= int(v) <= 7):
            raise ValueError("init_weights must be 'uniform' or an integer 0..7")
        return v

    def plasticity(self) -> PlasticityParams:
        return PlasticityParams(self.mu_capture, self.mu_backoff, self.mu_search, self.mu_min)

    def column(self, mode: LearningMode | None = None) -> ColumnConfig:
        init = self.init_weights if self.init_weights == "uniform" else int(self.init_weights)
        return ColumnConfig(p=self.p, q=self.q, theta=self.theta, params=self.plasticity(),
                            mode=mode or self.mode, seed=self.seed, lfsr_width=self.lfsr_width,
                            shared_lfsr=self.shared_lfsr, init_weights=init)

    def encoder(self) -> EncoderConfig:
        return EncoderConfig(cutoff=self.cutoff)


class ConfigError(ValueError):
    pass


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path) as f:
                parser.read_file(f)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for section in parser.sections():
            for key, value in parser.items(section):
                if key not in ExperimentConfig.model_fields:
                    raise ConfigError(f"unknown config key {key!r} in [{section}]")
                values[key] = None if value.strip().lower() in ("", "none") else value
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig.model_validate(values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def dump_config(cfg: ExperimentConfig) -> str:
    parser = configparser.ConfigParser()
    data = cfg.model_dump(mode="json")
    for section, keys in SECTIONS.items():
        parser[section] = {k: "none" if data[k] is None else str(data[k]) for k in keys}
    lines = []
    for section in parser.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in parser[section].items())
        lines.append("")
    return "\n".join(lines)
