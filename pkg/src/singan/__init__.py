"""Single-image generative modeling toolkit.

Train a pyramid of patch-adversarial generators on one natural image,
sample new images of arbitrary size, and manipulate images through scale
injection: harmonization, editing, paint-to-image, super-resolution and
single-image animation, with Fréchet-feature and diversity evaluation.
"""

from .imaging import (
    InvalidInputError,
    ScaleSchedule,
    build_scale_schedule,
    downsample,
    load_image,
    save_image,
    upsample,
)
from .nets import Discriminator, Generator, PaddingMode, receptive_field
from .stack import GeneratorStack
from .training import TrainConfig, TrainingDivergedError, toy_config, train_pyramid
from .sampling import SampleRequest, corner_variability, diversity_map, generate
from .applications import (
    AnimationParams,
    InjectionRequest,
    SuperResConfig,
    animate,
    edit,
    harmonize,
    inject,
    paint_to_image,
    plan_super_resolution,
    super_resolve,
)
from .metrics import RandomConvExtractor, frechet_distance, rmse, sifid
from .presets import load_registry
from . import store

__version__ = "0.1.0"

__all__ = [
    "AnimationParams",
    "Discriminator",
    "Generator",
    "GeneratorStack",
    "InjectionRequest",
    "InvalidInputError",
    "PaddingMode",
    "RandomConvExtractor",
    "SampleRequest",
    "ScaleSchedule",
    "SuperResConfig",
    "TrainConfig",
    "TrainingDivergedError",
    "animate",
    "build_scale_schedule",
    "corner_variability",
    "diversity_map",
    "downsample",
    "edit",
    "frechet_distance",
    "generate",
    "harmonize",
    "inject",
    "load_image",
    "load_registry",
    "paint_to_image",
    "plan_super_resolution",
    "receptive_field",
    "rmse",
    "save_image",
    "sifid",
    "store",
    "super_resolve",
    "toy_config",
    "train_pyramid",
    "upsample",
]
