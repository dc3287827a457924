"""
Models module - spline / wavelet KANs and the chain of KANs.
"""
from .chain import ChainModel, causal_input, chain_forward, chain_gradients
from .checkpoints import load_model, save_model
from .factory import ModelSpec, build_model, parse_architecture
from .kan import (
    KanNetwork,
    SplineGrid,
    SplineKanLayer,
    WaveletKanLayer,
    bspline_basis,
    init_network,
    mexican_hat,
    network_forward,
    network_gradients,
    spline_layer_forward,
    wav_layer_forward,
)

__all__ = [
    "ChainModel",
    "KanNetwork",
    "ModelSpec",
    "SplineGrid",
    "SplineKanLayer",
    "WaveletKanLayer",
    "bspline_basis",
    "build_model",
    "causal_input",
    "chain_forward",
    "chain_gradients",
    "init_network",
    "load_model",
    "mexican_hat",
    "network_forward",
    "network_gradients",
    "parse_architecture",
    "save_model",
    "spline_layer_forward",
    "wav_layer_forward",
]
