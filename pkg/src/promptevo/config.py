"""Run configuration file: strict JSON schema and loaders for referenced files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .optimizer.loop import OptimizerConfig


class ConfigError(Exception):
    """Invalid or inconsistent configuration; the CLI exits with status 2."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class OptimizerSection(_Strict):
    seed_count: int = 5
    new_prompts_per_iteration: int = 2
    max_iterations: int = 5
    eps: float = 0.3
    min_pts: int = 2
    reflection_k: int = 3
    parallelism: int = 1
    rng_seed: int = 0
    template_dir: str | None = None
    max_subclasses: int = 8
    max_argument_types: int = 6
    distinctness_threshold: float = 0.3
    validation_fraction: float = 1.0


class HttpLLM(_Strict):
    mode: Literal["http"]
    base_url: str
    model: str
    path: str = "/v1/chat/completions"
    auth_env: str | None = "OPENAI_API_KEY"
    max_retries: int = 3
    backoff: float = 0.5
    timeout: float = 120.0
    max_tokens: int = 2048
    temperatures: dict[str, float] = Field(default_factory=dict)


class RecordLLM(HttpLLM):
    mode: Literal["record"]  # type: ignore[assignment]
    cassette: str


class ReplayLLM(_Strict):
    mode: Literal["replay"]
    cassette: str
    match: Literal["exact_hash", "substring", "sequence"] = "exact_hash"
    max_tokens: int = 2048
    temperatures: dict[str, float] = Field(default_factory=dict)


LLMSection = Annotated[Union[HttpLLM, RecordLLM, ReplayLLM], Field(discriminator="mode")]


class SimulatedHarnessSection(_Strict):
    mode: Literal["simulated"]
    scenario: str


class ExternalHarnessSection(_Strict):
    mode: Literal["external"]
    compile_command: str
    run_command: str
    coverage_report: str
    test_dir: str
    workspaces: list[str]
    compile_timeout: float = 60.0
    run_timeout: float = 120.0
    totals: dict[str, tuple[int, int]] | None = None

    @field_validator("workspaces")
    @classmethod
    def _non_empty(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("at least one workspace is required")
        return v


HarnessSection = Annotated[Union[SimulatedHarnessSection, ExternalHarnessSection], Field(discriminator="mode")]


class ProjectSection(_Strict):
    source_root: str
    dev_set: str
    extensions: list[str] = Field(default_factory=lambda: [".java"])


class RunConfig(_Strict):
    optimizer: OptimizerSection = Field(default_factory=OptimizerSection)
    llm: LLMSection
    harness: HarnessSection
    project: ProjectSection
    seeds: str
    output_dir: str = "out"

    @model_validator(mode="after")
    def _check_optimizer(self) -> RunConfig:
        try:
            self.optimizer_config()
        except ValueError as exc:
            raise ValueError(f"optimizer: {exc}") from None
        return self

    def optimizer_config(self, **overrides: object) -> OptimizerConfig:
        return OptimizerConfig(**{**self.optimizer.model_dump(), **overrides})


def _resolve(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else (base / p))


def load_config(path: str | Path, *, check_files: bool = True) -> RunConfig:
    """Parse ``path``; relative paths inside are taken relative to its directory.

    With ``check_files`` every input file the run needs must already exist.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    base = path.resolve().parent
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"{path}: invalid configuration:\n{exc}") from None
    cfg = _with_resolved_paths(cfg, base)
    if check_files:
        missing = [p for p in required_files(cfg) if not Path(p).exists()]
        if missing:
            raise ConfigError("missing file(s) referenced by config: " + ", ".join(missing))
    return cfg


def _with_resolved_paths(cfg: RunConfig, base: Path) -> RunConfig:
    llm = cfg.llm
    if isinstance(llm, (RecordLLM, ReplayLLM)):
        llm = llm.model_copy(update={"cassette": _resolve(base, llm.cassette)})
    harness = cfg.harness
    if isinstance(harness, SimulatedHarnessSection):
        harness = harness.model_copy(update={"scenario": _resolve(base, harness.scenario)})
    else:
        # coverage_report and test_dir stay relative to each workspace
        harness = harness.model_copy(update={"workspaces": [_resolve(base, w) for w in harness.workspaces]})
    project = cfg.project.model_copy(
        update={"source_root": _resolve(base, cfg.project.source_root), "dev_set": _resolve(base, cfg.project.dev_set)}
    )
    optimizer = cfg.optimizer.model_copy(update={"template_dir": _resolve(base, cfg.optimizer.template_dir)})
    return cfg.model_copy(
        update={
            "llm": llm,
            "harness": harness,
            "project": project,
            "optimizer": optimizer,
            "seeds": _resolve(base, cfg.seeds),
            "output_dir": _resolve(base, cfg.output_dir),
        }
    )


def required_files(cfg: RunConfig) -> list[str]:
    files = [cfg.seeds, cfg.project.source_root, cfg.project.dev_set]
    if isinstance(cfg.llm, ReplayLLM):
        files.append(cfg.llm.cassette)
    if isinstance(cfg.harness, SimulatedHarnessSection):
        files.append(cfg.harness.scenario)
    else:
        files.extend(cfg.harness.workspaces)
    if cfg.optimizer.template_dir:
        files.append(cfg.optimizer.template_dir)
    return files


def read_seeds(path: str | Path) -> list[str]:
    """One prompt per line; blank lines and ``#`` comments are skipped."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def read_dev_set(path: str | Path) -> list[str]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data) or not data:
        raise ConfigError(f"{path}: dev set must be a non-empty JSON array of focal method ids")
    return data
