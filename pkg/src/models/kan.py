"""
Kolmogorov-Arnold network layers.

Two edge-function families share one network container:

- spline: Efficient-KAN style, out_i = sum_j w_ij silu(x_j) + sum_j sum_m c_ijm B_m(x_j)
- wavelet: Wav-KAN style, out_i = sum_j w_ij psi((x_j - t_ij) / s_ij), psi the Mexican hat

Every parameter tensor may carry a leading member axis so a whole chain of
equally shaped networks evaluates in one batched einsum.
"""
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from src.config import Config

LayerKind = Literal["spline", "wavelet"]

MEXICAN_HAT_NORM = 2.0 / (math.sqrt(3.0) * math.pi ** 0.25)


@dataclass(frozen=True)
class SplineGrid:
    """Uniform extended knot vector of a degree-k spline with G interior intervals."""
    grid_size: int = Config.GRID_SIZE
    order: int = Config.SPLINE_ORDER
    domain: tuple[float, float] = Config.GRID_DOMAIN

    def __post_init__(self):
        if self.grid_size < 1:
            raise ValueError(f"grid_size must be >= 1, got {self.grid_size}")
        if self.order < 0:
            raise ValueError(f"order must be >= 0, got {self.order}")
        if not self.domain[1] > self.domain[0]:
            raise ValueError(f"Invalid grid domain {self.domain}")

    @property
    def spacing(self) -> float:
        return (self.domain[1] - self.domain[0]) / self.grid_size

    @property
    def n_basis(self) -> int:
        return self.grid_size + self.order

    def knots(self, dtype: torch.dtype = torch.float64) -> torch.Tensor:
        """G + 2k + 1 knots, k of them outside each end of the domain."""
        steps = torch.arange(-self.order, self.grid_size + self.order + 1, dtype=dtype)
        return steps * self.spacing + self.domain[0]

    def to_dict(self) -> dict:
        return {"grid_size": self.grid_size, "order": self.order, "domain": list(self.domain)}

    @classmethod
    def from_dict(cls, data: dict) -> "SplineGrid":
        return cls(int(data["grid_size"]), int(data["order"]), tuple(data["domain"]))


def bspline_basis(x: torch.Tensor | float, grid: SplineGrid) -> torch.Tensor:
    """
    Cox-de Boor recursion for all G + k basis functions.

    Args:
        x: Input of any shape; values outside the knot span give all-zero bases.
        grid: Knot layout.

    Returns:
        torch.Tensor: Shape x.shape + (G + k,).
    """
    x = torch.as_tensor(x, dtype=torch.float64) if not torch.is_tensor(x) else x
    knots = grid.knots(x.dtype).to(x.device)
    x = x.unsqueeze(-1)
    bases = ((x >= knots[:-1]) & (x < knots[1:])).to(x.dtype)
    for k in range(1, grid.order + 1):
        left = (x - knots[: -(k + 1)]) / (knots[k:-1] - knots[: -(k + 1)])
        right = (knots[k + 1:] - x) / (knots[k + 1:] - knots[1:-k])
        bases = left * bases[..., :-1] + right * bases[..., 1:]
    return bases


def mexican_hat(u: torch.Tensor) -> torch.Tensor:
    """psi(u) = 2 / (sqrt(3) pi^(1/4)) (1 - u^2) exp(-u^2 / 2)."""
    u2 = u * u
    return MEXICAN_HAT_NORM * (1.0 - u2) * torch.exp(-0.5 * u2)


def _check_input(x: torch.Tensor, in_dim: int) -> None:
    if x.shape[-1] != in_dim:
        raise ValueError(f"Layer expects {in_dim} input features, got {x.shape[-1]}")


def _select(param: torch.Tensor, members: slice | None) -> torch.Tensor:
    return param if members is None else param[members]


class SplineKanLayer(nn.Module):
    """Base SiLU path plus trainable B-spline path on every edge."""

    def __init__(self, in_dim: int, out_dim: int, grid: SplineGrid = SplineGrid(),
                 members: int | None = None, dtype: torch.dtype = torch.float64):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.grid = grid
        lead = () if members is None else (members,)
        self.base_weight = nn.Parameter(torch.zeros(*lead, out_dim, in_dim, dtype=dtype))
        self.spline_weight = nn.Parameter(torch.zeros(*lead, out_dim, in_dim, grid.n_basis, dtype=dtype))

    @torch.no_grad()
    def reset_parameters(self, generator: torch.Generator) -> None:
        bound = math.sqrt(6.0 / self.in_dim)
        self.base_weight.copy_(_uniform(self.base_weight.shape, -bound, bound, generator, self.base_weight.dtype))
        std = 0.1 / math.sqrt(self.in_dim)
        self.spline_weight.copy_(
            torch.randn(self.spline_weight.shape, generator=generator, dtype=self.spline_weight.dtype) * std
        )

    def forward(self, x: torch.Tensor, members: slice | None = None) -> torch.Tensor:
        return spline_layer_forward(x, self, members)


class WaveletKanLayer(nn.Module):
    """Mexican-hat edge functions with learnable weight, translation and log-scale."""

    def __init__(self, in_dim: int, out_dim: int, grid: SplineGrid = SplineGrid(),
                 members: int | None = None, dtype: torch.dtype = torch.float64):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.grid = grid
        lead = () if members is None else (members,)
        self.weight = nn.Parameter(torch.zeros(*lead, out_dim, in_dim, dtype=dtype))
        self.translation = nn.Parameter(torch.zeros(*lead, out_dim, in_dim, dtype=dtype))
        self.log_scale = nn.Parameter(torch.zeros(*lead, out_dim, in_dim, dtype=dtype))

    @torch.no_grad()
    def reset_parameters(self, generator: torch.Generator) -> None:
        bound = math.sqrt(6.0 / self.in_dim)
        self.weight.copy_(_uniform(self.weight.shape, -bound, bound, generator, self.weight.dtype))
        lo, hi = self.grid.domain
        self.translation.copy_(_uniform(self.translation.shape, lo, hi, generator, self.translation.dtype))
        self.log_scale.zero_()

    def forward(self, x: torch.Tensor, members: slice | None = None) -> torch.Tensor:
        return wav_layer_forward(x, self, members)


def _uniform(shape, lo: float, hi: float, generator: torch.Generator, dtype: torch.dtype) -> torch.Tensor:
    return torch.rand(shape, generator=generator, dtype=dtype) * (hi - lo) + lo


def spline_layer_forward(x: torch.Tensor, layer: SplineKanLayer, members: slice | None = None) -> torch.Tensor:
    """
    Evaluate a spline KAN layer.

    Args:
        x: (batch, in_dim), or (batch, members, in_dim) for member-stacked layers.
        layer: Layer parameters.
        members: Optional slice of the member axis.

    Returns:
        torch.Tensor: (batch, [members,] out_dim).
    """
    _check_input(x, layer.in_dim)
    base = torch.einsum("b...i,...oi->b...o", F.silu(x), _select(layer.base_weight, members))
    spline = torch.einsum(
        "b...ik,...oik->b...o", bspline_basis(x, layer.grid), _select(layer.spline_weight, members)
    )
    return base + spline


def wav_layer_forward(x: torch.Tensor, layer: WaveletKanLayer, members: slice | None = None) -> torch.Tensor:
    """Evaluate a wavelet KAN layer; shapes as in spline_layer_forward."""
    _check_input(x, layer.in_dim)
    translation = _select(layer.translation, members)
    scale = torch.exp(_select(layer.log_scale, members))
    u = (x.unsqueeze(-2) - translation) / scale
    return (_select(layer.weight, members) * mexican_hat(u)).sum(dim=-1)


class KanNetwork(nn.Module):
    """Layer stack described by its width tuple [I, a, ..., O]."""

    def __init__(self, architecture: Sequence[int], kind: LayerKind = "spline",
                 grid: SplineGrid = SplineGrid(), members: int | None = None,
                 dtype: torch.dtype = torch.float64):
        super().__init__()
        architecture = tuple(int(w) for w in architecture)
        if len(architecture) < 2 or any(w < 1 for w in architecture):
            raise ValueError(f"Invalid architecture {list(architecture)}: need >= 2 positive widths")
        if kind not in ("spline", "wavelet"):
            raise ValueError(f"Unknown layer kind {kind!r}; use 'spline' or 'wavelet'")
        self.kind = kind
        self.grid = grid
        self.members = members
        layer_cls = SplineKanLayer if kind == "spline" else WaveletKanLayer
        self.layers = nn.ModuleList(
            layer_cls(i, o, grid=grid, members=members, dtype=dtype)
            for i, o in zip(architecture, architecture[1:])
        )

    @property
    def architecture(self) -> tuple[int, ...]:
        return (self.layers[0].in_dim, *(layer.out_dim for layer in self.layers))

    def forward(self, x: torch.Tensor, members: slice | None = None) -> torch.Tensor:
        return network_forward(x, self, members)


def network_forward(x: torch.Tensor, net: KanNetwork, members: slice | None = None) -> torch.Tensor:
    """Compose the layers; a 1-D input is treated as a batch of one and returned 1-D."""
    single = x.dim() == 1
    if single:
        x = x.unsqueeze(0)
    for layer in net.layers:
        x = layer(x, members)
    return x.squeeze(0) if single else x


def init_network(architecture: Sequence[int], kind: LayerKind = "spline", seed: int = 0,
                 grid: SplineGrid = SplineGrid(), members: int | None = None) -> KanNetwork:
    """
    Build a network with seeded initialization.

    base / wavelet weights ~ U(+-sqrt(6/in_dim)), spline coefficients ~
    N(0, 0.1/sqrt(in_dim)), translations ~ U(domain), log-scales = 0.
    """
    net = KanNetwork(architecture, kind=kind, grid=grid, members=members)
    generator = torch.Generator().manual_seed(seed)
    for layer in net.layers:
        layer.reset_parameters(generator)
    return net


@dataclass
class NetworkGradients:
    parameters: dict[str, torch.Tensor]
    input: torch.Tensor


def network_gradients(net: KanNetwork, x: torch.Tensor, upstream: torch.Tensor) -> NetworkGradients:
    """
    Reverse-mode gradients of <upstream, net(x)> w.r.t. every parameter and the input.

    Raises:
        ValueError: If upstream does not match the output shape.
    """
    x = x.detach().clone().requires_grad_(True)
    out = net(x)
    if upstream.shape != out.shape:
        raise ValueError(f"Upstream gradient shape {tuple(upstream.shape)} != output shape {tuple(out.shape)}")
    names, params = zip(*net.named_parameters())
    grads = torch.autograd.grad(out, (x, *params), grad_outputs=upstream)
    return NetworkGradients(parameters=dict(zip(names, grads[1:])), input=grads[0])
