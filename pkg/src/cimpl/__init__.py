"""Circular-statistics direction-of-arrival estimation for binaural hearing-aid arrays."""

from .config import RunConfig, load_config
from .geometry import ArrayGeometry, PairId
from .pipeline import EstimateResult, estimate
from .scenegen import SceneSpec, SourceSpec, DiffuseSpec, Trajectory, render_scene
from .stft import AudioBlock, StftConfig

__version__ = "0.1.0"
