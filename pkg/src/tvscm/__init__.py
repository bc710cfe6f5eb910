"""Two-valued symmetric circulant (TVSCM) layers, a dense baseline, and benchmarks."""

__version__ = "0.1.0"

from .structmat import (
    SymmetricCirculant,
    TwoValueCirculant,
    TwoValueParams,
    build_defining_vector,
    mask_decomposition,
    materialize,
    matvec_fft,
    matvec_naive,
    spectrum,
    symmetrize,
)
from .nn import DenseLayer, Model, TVSCMLayer, build_model, count_parameters
from .data import Dataset
from .train import TrainConfig, TrainReport, evaluate, init_parameters, train

__all__ = [
    "Dataset",
    "DenseLayer",
    "Model",
    "SymmetricCirculant",
    "TVSCMLayer",
    "TrainConfig",
    "TrainReport",
    "TwoValueCirculant",
    "TwoValueParams",
    "build_defining_vector",
    "build_model",
    "count_parameters",
    "evaluate",
    "init_parameters",
    "mask_decomposition",
    "materialize",
    "matvec_fft",
    "matvec_naive",
    "spectrum",
    "symmetrize",
    "train",
]
