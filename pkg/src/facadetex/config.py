"""Pipeline configuration with the published defaults for every stage.

Values can be overridden from a TOML file and/or a JSON string; unknown
keys are rejected so that a typo never silently falls back to a default.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError


@dataclass
class PipelineConfig:
    # camera integration
    camera_height: float = 1.7          # m above the building lower bound
    near_offset: float = 0.01           # m offset of the ray origin toward the facade

    # field-of-view sampling
    fov_h_samples: int = 10             # horizontal angle samples between adjusted bounds
    fov_inward_fraction: float = 0.05   # inward offset = width * this, per side (1/20)
    fov_pitch_samples: int = 5          # pitch samples around the optimal pitch
    fov_pitch_range: float = 5.0        # degrees, +/- around the optimal pitch
    boundary_sample_spacing: float = 0.5  # m, footprint densification for occlusion tests
    buffer_radius: float = 50.0         # m, sampling-point visibility buffer

    # facade detection / simplification
    ray_grid_h: int = 10                # rays per candidate view, horizontal
    ray_grid_v: int = 5                 # rays per candidate view, vertical
    view_offset_weight: float = 1.0     # hits traded per meter of horizontal offset
    planarity_threshold: float = 10.0   # degrees of allowed face-normal spread

    # panorama rectification
    tile_fov: float = 90.0              # degrees per extracted tile
    tile_overlap: float = 0.5           # fraction of overlap between adjacent tiles
    vertical_tolerance: float = 30.0    # degrees from image vertical for zenith segments
    heading_histogram_min_segments: int = 20

    # facade mask combination
    clip_threshold: float = 0.05        # minimum similarity for the facade label
    min_component_area: int = 2000      # px, smaller components are dropped
    clean_kernel: int = 25              # px, opening/closing kernel (25..100)

    # mask preprocessing & quadrilateral fitting
    blur_kernel: int = 25               # px, Gaussian blur before morphology
    quadfit_kernel: int = 15            # px, closing/opening structuring element
    quad_max_vertices: int = 10
    quad_eps_init: float = 0.1
    quad_eps_max: float = 0.4
    quad_eps_step: float = 0.02
    quad_margin: float = 0.0

    # matching / stitching
    match_ratio: float = 0.75
    ransac_reproj_px: float = 3.0
    ransac_iters: int = 2000
    min_inliers: int = 15
    max_features: int = 1000

    # texturing
    px_per_m: float = 50.0

    # evaluation alignment search
    align_scale_min: float = 0.75
    align_scale_max: float = 1.2
    align_scale_step: float = 0.05
    align_scale_step_fine: float = 0.01
    align_shift_max: int = 100          # px
    align_shift_step: int = 10
    align_shift_step_fine: int = 2
    opening_group_distance: float = 0.1  # m, proximity grouping of openings

    # misc
    iou_raster_resolution: int = 1024   # px on the longer side for polygon IoU
    seed: int = 0
    workers: int = 0                    # 0 = number of logical cores
    top_k_masks: int = 0                # 0 = keep all manifest masks

    def validated(self) -> "PipelineConfig":
        if not 0 < self.fov_inward_fraction < 0.5:
            raise ConfigError("fov_inward_fraction must be in (0, 0.5)")
        if self.quad_eps_init <= 0 or self.quad_eps_init > self.quad_eps_max:
            raise ConfigError("quadrilateral epsilon schedule out of range")
        if not 0 <= self.tile_overlap < 1:
            raise ConfigError("tile_overlap must be in [0, 1)")
        if not 0 < self.align_scale_min <= 1 <= self.align_scale_max:
            raise ConfigError("alignment scale bounds must bracket 1.0")
        if self.px_per_m <= 0:
            raise ConfigError("px_per_m must be positive")
        if self.camera_height <= 0:
            raise ConfigError("camera_height must be positive")
        return self

    def replace(self, **kwargs) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs).validated()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _apply(config: PipelineConfig, overrides: dict, source: str) -> PipelineConfig:
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ConfigError(f"unknown config keys in {source}: {', '.join(unknown)}")
    return config.replace(**overrides)


def load_config(toml_path=None, json_overrides=None, **flag_overrides) -> PipelineConfig:
    """Resolve a config: defaults < TOML file < JSON string < explicit flags."""
    config = PipelineConfig()
    if toml_path is not None:
        with open(toml_path, "rb") as fh:
            data = tomllib.load(fh)
        config = _apply(config, data, str(toml_path))
    if json_overrides:
        config = _apply(config, json.loads(json_overrides), "JSON overrides")
    cleaned = {k: v for k, v in flag_overrides.items() if v is not None}
    if cleaned:
        config = _apply(config, cleaned, "command-line flags")
    return config.validated()
