"""Ortho-rectified facade texturing for semantic 3D building models.

Reconstructs facade textures for low-detail CityGML buildings from
geo-referenced equirectangular street-level panoramas, and evaluates
predicted facade-opening masks against LoD3 ground truth.
"""

__version__ = "0.1.0"

from .config import PipelineConfig, load_config  # noqa: F401
