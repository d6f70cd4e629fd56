"""
Configuration loading utilities.

This module knows how to:
- locate the default config file (config/default.yaml)
- parse it
- expose it as simple Python dataclasses

It also supports environment overrides (optionally from a local .env file) so
the package can be used as a CLI tool without editing YAML files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import yaml
from dotenv import load_dotenv

from tonal_coherence.analysis.filters import DEFAULT_EXCLUDED_GENRES, FilterRules
from tonal_coherence.utils.errors import ConfigurationError

MAX_K = 17


# ---------- Data classes ----------

@dataclass
class AnalysisConfig:
    k: int = 3
    k_range: Tuple[int, int] = (2, 7)
    group_by: str = "group"
    jobs: int = 1
    key_perturbation: bool = False

    @property
    def ks(self) -> list[int]:
        lo, hi = self.k_range
        return list(range(lo, hi + 1))


@dataclass
class OutputConfig:
    output_dir: str = "results"


@dataclass
class AppConfig:
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    filters: FilterRules = field(default_factory=FilterRules)
    output: OutputConfig = field(default_factory=OutputConfig)


# ---------- Loader functions ----------

def get_project_root() -> Path:
    """
    Return the project root directory (the folder that contains `src/` and `config/`).

    This assumes this file lives under: src/tonal_coherence/config/loader.py
    """
    # loader.py -> config -> tonal_coherence -> src -> PROJECT_ROOT
    return Path(__file__).resolve().parents[3]


def get_default_config_path() -> Path:
    """Return the config path.

    Priority:
      1) TONAL_COHERENCE_CONFIG env var (absolute or relative to project root)
      2) <project_root>/config/default.yaml
    """
    env_path = os.getenv("TONAL_COHERENCE_CONFIG")
    if env_path:
        p = Path(env_path)
        if not p.is_absolute():
            p = get_project_root() / p
        return p
    return get_project_root() / "config" / "default.yaml"


def parse_k_range(value) -> Tuple[int, int]:
    """Accept [2, 7], (2, 7), '2..7' or '2-7'."""
    if isinstance(value, str):
        text = value.replace("..", "-")
        parts = [s for s in text.split("-") if s.strip()]
        if len(parts) != 2:
            raise ConfigurationError(f"Cannot parse k range {value!r}")
        value = parts
    try:
        lo, hi = (int(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"Cannot parse k range {value!r}")
    return lo, hi


def validate_config(cfg: AppConfig) -> AppConfig:
    a = cfg.analysis
    if not 0 <= a.k <= MAX_K:
        raise ConfigurationError(f"analysis.k must be in 0..{MAX_K}, got {a.k}")
    lo, hi = a.k_range
    if not 0 <= lo <= hi <= MAX_K:
        raise ConfigurationError(f"analysis.k_range must satisfy 0 <= lo <= hi <= {MAX_K}, got {a.k_range}")
    if a.jobs < 1:
        raise ConfigurationError(f"analysis.jobs must be >= 1, got {a.jobs}")
    return cfg


def _filters_from_raw(raw: dict) -> FilterRules:
    try:
        bounds = raw.get("pitch_entropy_bits", (1.5, 3.2))
        return FilterRules(
            min_unique_pcs=int(raw.get("min_unique_pcs", 5)),
            pitch_entropy_bits=(float(bounds[0]), float(bounds[1])),
            max_single_pc_share=float(raw.get("max_single_pc_share", 0.5)),
            min_focus_k3=float(raw.get("min_focus_k3", 0.3)),
            excluded_genres=frozenset(raw.get("excluded_genres", DEFAULT_EXCLUDED_GENRES)),
        )
    except (TypeError, ValueError, IndexError) as e:
        raise ConfigurationError(f"Invalid filters section: {e}") from e


def load_config(path: Path | None = None) -> AppConfig:
    """
    Load configuration from a YAML file.

    If `path` is None, use config/default.yaml (or TONAL_COHERENCE_CONFIG
    override); when that default file does not exist the built-in defaults
    are used.
    """
    load_dotenv()

    explicit = path is not None or bool(os.getenv("TONAL_COHERENCE_CONFIG"))
    if path is None:
        path = get_default_config_path()

    raw: dict = {}
    if path.exists():
        with path.open("r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    elif explicit:
        raise FileNotFoundError(f"Config file not found: {path}")

    # ----- analysis -----
    analysis_raw = raw.get("analysis", {}) or {}
    try:
        analysis_cfg = AnalysisConfig(
            k=int(analysis_raw.get("k", 3)),
            k_range=parse_k_range(analysis_raw.get("k_range", (2, 7))),
            group_by=str(analysis_raw.get("group_by", "group")),
            jobs=int(analysis_raw.get("jobs", 1)),
            key_perturbation=bool(analysis_raw.get("key_perturbation", False)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid analysis section: {e}") from e

    # ----- filters -----
    filters_cfg = _filters_from_raw(raw.get("filters", {}) or {})

    # ----- output -----
    output_raw = raw.get("output", {}) or {}
    output_cfg = OutputConfig(output_dir=str(output_raw.get("output_dir", "results")))

    # ----- env overrides (optional) -----
    output_dir_override = os.getenv("TONAL_COHERENCE_OUTPUT_DIR")
    if output_dir_override:
        output_cfg.output_dir = output_dir_override

    jobs_override = os.getenv("TONAL_COHERENCE_JOBS")
    if jobs_override:
        try:
            analysis_cfg.jobs = int(jobs_override)
        except ValueError:
            raise ConfigurationError(f"TONAL_COHERENCE_JOBS must be an integer, got {jobs_override!r}")

    return validate_config(
        AppConfig(analysis=analysis_cfg, filters=filters_cfg, output=output_cfg)
    )
