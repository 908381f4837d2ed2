"""Pipeline configuration.

Each stage reads its own frozen dataclass. ``RunConfig`` bundles them for the
command line, and ``load_config_file`` turns a ``key = value`` file into the
default map the CLI hands to click, so explicit flags always win.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Optional, Tuple

from dotenv import dotenv_values

from icgtm.errors import ConfigError


class PayoffMode(str, Enum):
    GEO = "geo"
    RT = "rt"
    DES = "des"
    RT_PLUS_GEO = "rt+geo"

    @property
    def uses_ratio(self) -> bool:
        return self in (PayoffMode.RT, PayoffMode.RT_PLUS_GEO)

    @property
    def uses_geometry(self) -> bool:
        return self in (PayoffMode.GEO, PayoffMode.RT_PLUS_GEO)


def _positive(name: str, value: float):
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class GridConfig:
    rows: int = 5
    cols: int = 5
    min_count: int = 4
    mutual_best: bool = False

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("grid needs at least one row and one column")
        if self.min_count < 1:
            raise ConfigError("min_count must be at least 1")

    @property
    def num_blocks(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class PayoffParams:
    """Payoff scales. ``beta=None`` means half the median matched-descriptor distance."""

    sigma: float = 10.0
    alpha: float = 0.5
    beta: Optional[float] = None
    mode: PayoffMode = PayoffMode.RT_PLUS_GEO
    literal_projection: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", PayoffMode(self.mode))
        _positive("sigma", self.sigma)
        _positive("alpha", self.alpha)
        if self.beta is not None:
            _positive("beta", self.beta)


@dataclass(frozen=True)
class GameConfig:
    max_iters: int = 200
    tol: float = 1e-6
    otsu_bins: int = 256

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        _positive("tol", self.tol)
        if self.otsu_bins < 2:
            raise ConfigError("otsu_bins must be at least 2")


@dataclass(frozen=True)
class ClusterConfig:
    min_cluster_size: int = 4
    reproj_threshold: float = 5.0
    ransac_iters: int = 1000
    ransac_tol: float = 3.0
    max_outer_rounds: int = 20
    membership: str = "both"
    min_support: int = 0
    reiterate: bool = False
    max_passes: int = 3
    drop_redundant: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.min_cluster_size < 4:
            raise ConfigError("min_cluster_size must be at least 4")
        _positive("reproj_threshold", self.reproj_threshold)
        _positive("ransac_tol", self.ransac_tol)
        if self.ransac_iters < 1 or self.max_outer_rounds < 1 or self.max_passes < 1:
            raise ConfigError("iteration bounds must be at least 1")
        if self.membership not in ("both", "either"):
            raise ConfigError(f"membership must be 'both' or 'either', got {self.membership!r}")
        if self.min_support < 0:
            raise ConfigError("min_support cannot be negative")


@dataclass(frozen=True)
class SynthConfig:
    k: int = 3
    inliers_per: int = 100
    outlier_ratio: float = 0.4
    noise_sigma: float = 1.0
    image_size: Tuple[int, int] = (640, 480)
    descriptor_dim: int = 128
    seed: int = 0
    rotation_max_deg: float = 30.0
    scale_range: Tuple[float, float] = (0.7, 1.4)
    projective_max: float = 1e-4
    descriptor_spread: float = 0.3
    descriptor_noise: float = 0.05

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.inliers_per < 4:
            raise ConfigError("inliers_per must be at least 4")
        if not (0.0 <= self.outlier_ratio < 1.0):
            raise ConfigError("outlier_ratio must lie in [0, 1)")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma cannot be negative")
        if self.image_size[0] <= 0 or self.image_size[1] <= 0:
            raise ConfigError("image_size must be positive")
        if self.descriptor_dim < 1:
            raise ConfigError("descriptor_dim must be at least 1")
        lo, hi = self.scale_range
        if not (0 < lo <= hi):
            raise ConfigError("scale_range must be positive and ordered")


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    payoff: PayoffParams = field(default_factory=PayoffParams)
    game: GameConfig = field(default_factory=GameConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    skip_clustering: bool = False
    paper_literal_f: bool = False
    method: str = "icgtm"
    threads: Optional[int] = None
    input_path: Optional[Path] = None
    output_path: Optional[Path] = None

    def __post_init__(self):
        if self.method not in ("icgtm", "gtm", "ransac"):
            raise ConfigError(f"unknown method {self.method!r}")


def load_config_file(path) -> Dict[str, str]:
    """Read ``key = value`` lines; keys are normalised to CLI parameter names."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {key.strip().lower().replace("-", "_"): value for key, value in values.items() if value is not None}
