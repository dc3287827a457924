"""
Data module - dataset recipes, scaling, splitting and persistence.
"""
from .datasets import (
    Dataset,
    DatasetRecipe,
    ScalerParams,
    Split,
    amplitude_grid,
    apply_scaler,
    fit_scaler,
    frequency_grid,
    generate_dataset,
    invert_scaler,
    split_train_test,
)
from .storage import load_dataset, save_dataset

__all__ = [
    "Dataset",
    "DatasetRecipe",
    "ScalerParams",
    "Split",
    "amplitude_grid",
    "apply_scaler",
    "fit_scaler",
    "frequency_grid",
    "generate_dataset",
    "invert_scaler",
    "load_dataset",
    "save_dataset",
    "split_train_test",
]
