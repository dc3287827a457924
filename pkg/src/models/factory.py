"""
Model specification and construction from the [I, a, ..., O] notation.
"""
import re
from dataclasses import dataclass, field
from typing import Literal

from src.errors import ConfigError
from .chain import ChainModel
from .kan import KanNetwork, LayerKind, SplineGrid, init_network

ModelKind = Literal["kan", "wavkan", "chain"]

_TOKEN = re.compile(r"^\d+$")


def parse_architecture(text: str) -> tuple[int, ...]:
    """
    Parse "[500, 100, 500]" into (500, 100, 500).

    Raises:
        ConfigError: Naming the first token that is not a positive integer.
    """
    body = text.strip()
    if body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    tokens = [t.strip() for t in body.split(",")]
    widths = []
    for token in tokens:
        if not _TOKEN.match(token) or int(token) < 1:
            raise ConfigError(f"Invalid architecture {text!r}: token {token!r} is not a positive integer")
        widths.append(int(token))
    if len(widths) < 2:
        raise ConfigError(f"Invalid architecture {text!r}: need at least input and output widths")
    return tuple(widths)


@dataclass(frozen=True)
class ModelSpec:
    """kan / wavkan: full-sequence network; chain: per-step members [W, a, ..., 1] built from `layer` layers."""
    kind: ModelKind = "kan"
    architecture: tuple[int, ...] = (500, 100, 500)
    window: int | None = None
    grid: SplineGrid = field(default_factory=SplineGrid)
    layer: LayerKind = "spline"

    def __post_init__(self):
        if self.kind not in ("kan", "wavkan", "chain"):
            raise ConfigError(f"Unknown model kind {self.kind!r}; use kan, wavkan or chain")
        object.__setattr__(self, "architecture", tuple(int(w) for w in self.architecture))
        if self.layer not in ("spline", "wavelet"):
            raise ConfigError(f"Unknown layer {self.layer!r}; use spline or wavelet")
        if self.kind != "chain":
            object.__setattr__(self, "layer", "spline" if self.kind == "kan" else "wavelet")
        else:
            if self.architecture[-1] != 1:
                raise ConfigError(f"Chain members must output one value, got architecture {list(self.architecture)}")
            if self.window is not None and self.window != self.architecture[0]:
                raise ConfigError(
                    f"Chain window {self.window} conflicts with member input width {self.architecture[0]}"
                )

    @property
    def input_width(self) -> int:
        return self.architecture[0]

    @property
    def label(self) -> str:
        """kind, plus the layer family for wavelet chains."""
        return "chain-wavelet" if self.kind == "chain" and self.layer == "wavelet" else self.kind

    def check_steps(self, n_steps: int) -> None:
        """Reject a spec whose shape cannot consume N_T-step series."""
        if self.kind == "chain":
            if self.input_width > n_steps:
                raise ConfigError(f"Chain window {self.input_width} exceeds N_T={n_steps}")
        elif self.architecture[0] != n_steps or self.architecture[-1] != n_steps:
            raise ConfigError(
                f"Architecture {list(self.architecture)} does not map N_T={n_steps} inputs to N_T outputs"
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "architecture": list(self.architecture),
            "window": self.input_width if self.kind == "chain" else None,
            "grid": self.grid.to_dict(),
            "layer": self.layer,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        architecture = data.get("architecture", (500, 100, 500))
        if isinstance(architecture, str):
            architecture = parse_architecture(architecture)
        grid = SplineGrid.from_dict(data["grid"]) if data.get("grid") else SplineGrid()
        return cls(kind=data.get("kind", "kan"), architecture=tuple(architecture), window=data.get("window"),
                   grid=grid, layer=data.get("layer", "spline"))


def build_model(spec: ModelSpec, n_steps: int, seed: int = 0) -> KanNetwork | ChainModel:
    """Instantiate a freshly initialized model for N_T-step series."""
    spec.check_steps(n_steps)
    if spec.kind == "chain":
        return ChainModel(n_steps, spec.input_width, hidden=spec.architecture[1:-1],
                          kind=spec.layer, grid=spec.grid, seed=seed)
    return init_network(spec.architecture, kind=spec.layer, seed=seed, grid=spec.grid)
