"""
JSON checkpoints for single networks and chains of KANs.
"""
import json
import logging
from pathlib import Path

import torch

from src.config import Config
from src.errors import DataError
from .chain import ChainModel
from .kan import KanNetwork, SplineGrid

logger = logging.getLogger(__name__)


def _layer_arrays(state: dict[str, torch.Tensor]) -> list[dict]:
    """Group a state dict by layer: [{param: {shape, values}}, ...]."""
    layers: dict[int, dict] = {}
    for name, value in state.items():
        _, index, param = name.split(".")
        layers.setdefault(int(index), {})[param] = {
            "shape": list(value.shape),
            "values": value.detach().reshape(-1).tolist(),
        }
    return [layers[i] for i in sorted(layers)]


def _state_from_layers(layers: list[dict], expected: dict[str, torch.Tensor], source: str) -> dict[str, torch.Tensor]:
    state = {}
    for name, reference in expected.items():
        _, index, param = name.split(".")
        try:
            entry = layers[int(index)][param]
        except (IndexError, KeyError) as e:
            raise DataError(f"{source}: checkpoint lacks parameter {name}") from e
        if list(entry["shape"]) != list(reference.shape) or len(entry["values"]) != reference.numel():
            raise DataError(
                f"{source}: parameter {name} has shape {entry['shape']}, architecture needs {list(reference.shape)}"
            )
        state[name] = torch.tensor(entry["values"], dtype=reference.dtype).reshape(reference.shape)
    return state


def model_to_dict(model: KanNetwork | ChainModel) -> dict:
    """Serialize a model to plain JSON types."""
    if isinstance(model, ChainModel):
        stacked = model.body.state_dict()
        return {
            "format_version": Config.FORMAT_VERSION,
            "model": "chain",
            "kind": model.kind,
            "n_members": model.n_members,
            "window": model.window,
            "architecture": list(model.architecture),
            "grid": model.grid.to_dict(),
            "members": [
                _layer_arrays({name: value[k] for name, value in stacked.items()})
                for k in range(model.n_members)
            ],
        }
    return {
        "format_version": Config.FORMAT_VERSION,
        "model": "network",
        "kind": model.kind,
        "architecture": list(model.architecture),
        "grid": model.grid.to_dict(),
        "layers": _layer_arrays(model.state_dict()),
    }


def model_from_dict(data: dict, source: str = "<memory>") -> KanNetwork | ChainModel:
    """
    Rebuild a model and validate every parameter shape against its architecture.

    Raises:
        DataError: On version mismatch, unknown model type or shape mismatch.
    """
    if data.get("format_version") != Config.FORMAT_VERSION:
        raise DataError(f"{source}: unsupported checkpoint format_version {data.get('format_version')}")
    try:
        grid = SplineGrid.from_dict(data["grid"])
        architecture = [int(w) for w in data["architecture"]]
        kind = data["kind"]
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{source}: malformed checkpoint header: {e}") from e

    if data.get("model") == "chain":
        n_members = int(data["n_members"])
        model = ChainModel(n_members, int(data["window"]), hidden=architecture[1:-1], kind=kind, grid=grid)
        if len(data["members"]) != n_members:
            raise DataError(f"{source}: {len(data['members'])} members stored, header says {n_members}")
        single = model.body.state_dict()
        per_member = [
            _state_from_layers(layers, {n: v[0] for n, v in single.items()}, source)
            for layers in data["members"]
        ]
        model.body.load_state_dict({name: torch.stack([m[name] for m in per_member]) for name in single})
        return model

    if data.get("model") != "network":
        raise DataError(f"{source}: unknown model type {data.get('model')!r}")
    model = KanNetwork(architecture, kind=kind, grid=grid)
    model.load_state_dict(_state_from_layers(data["layers"], model.state_dict(), source))
    return model


def save_model(model: KanNetwork | ChainModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f)
    logger.info("Saved %s checkpoint to %s", type(model).__name__, path)
    return path


def load_model(path: str | Path) -> KanNetwork | ChainModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"Checkpoint not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: checkpoint is not valid JSON ({e.msg})") from e
    return model_from_dict(data, source=str(path))
