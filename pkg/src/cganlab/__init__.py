"""Conditional GANs on dense numpy networks, with the synthetic studies and risk applications built on them."""

from .gan import GanSpec, GanVariant, TrainConfig, TrainingTrace, build_gan, generate, train
from .nn import Mlp, init_mlp

__all__ = [
    "GanSpec",
    "GanVariant",
    "Mlp",
    "TrainConfig",
    "TrainingTrace",
    "build_gan",
    "generate",
    "init_mlp",
    "train",
]
