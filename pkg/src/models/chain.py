"""
Chain of KANs: one network per output time step, each seeing only h_1..h_k.

All members share the architecture [W, a, ..., 1] and are stored as
member-stacked parameters of a single KanNetwork; member k reads the window
[h_{k-W+1}, ..., h_k] with positions before h_1 zero-padded.
"""
from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn
from torch.utils.checkpoint import checkpoint

from .kan import KanNetwork, LayerKind, SplineGrid, init_network

# Upper bound on elements of one chunk's basis tensor (batch x members x window x basis)
CHUNK_ELEMENTS = 1 << 24


def causal_input(h: torch.Tensor, k: int, window: int) -> torch.Tensor:
    """
    Inputs visible to member k (1-based): [h_{k-W+1}, ..., h_k], left zero-padded.

    Raises:
        ValueError: If k is outside 1..N_T.
    """
    n_steps = h.shape[-1]
    if not 1 <= k <= n_steps:
        raise ValueError(f"Time index k={k} outside 1..{n_steps}")
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    visible = h[..., max(0, k - window):k]
    return F.pad(visible, (window - visible.shape[-1], 0))


def causal_windows(h: torch.Tensor, window: int) -> torch.Tensor:
    """All causal inputs at once: (batch, N_T) -> (batch, N_T, W)."""
    return F.pad(h, (window - 1, 0)).unfold(-1, window, 1)


class ChainModel(nn.Module):
    """Per-time-step family of causal KANs."""

    def __init__(self, n_members: int, window: int, hidden: Sequence[int] = (3,),
                 kind: LayerKind = "spline", grid: SplineGrid = SplineGrid(), seed: int = 0):
        super().__init__()
        if not 1 <= window <= n_members:
            raise ValueError(f"window must lie in 1..{n_members}, got {window}")
        self.n_members = n_members
        self.window = window
        self.kind = kind
        self.grid = grid
        self.body = init_network((window, *hidden, 1), kind=kind, seed=seed, grid=grid, members=n_members)

    @property
    def architecture(self) -> tuple[int, ...]:
        """Member architecture [W, a, ..., 1]."""
        return self.body.architecture

    def member(self, k: int) -> KanNetwork:
        """Standalone copy of member k (1-based)."""
        if not 1 <= k <= self.n_members:
            raise ValueError(f"Member index k={k} outside 1..{self.n_members}")
        single = KanNetwork(self.architecture, kind=self.kind, grid=self.grid)
        stacked = self.body.state_dict()
        single.load_state_dict({name: value[k - 1].clone() for name, value in stacked.items()})
        return single

    @property
    def members(self) -> list[KanNetwork]:
        return [self.member(k) for k in range(1, self.n_members + 1)]

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        return chain_forward(h, self)

    def _chunk_forward(self, windows: torch.Tensor, start: int, stop: int) -> torch.Tensor:
        return self.body(windows, members=slice(start, stop))


def _chunk_size(model: ChainModel, batch: int) -> int:
    per_member = batch * model.window * model.grid.n_basis
    return max(1, min(model.n_members, CHUNK_ELEMENTS // max(1, per_member)))


def chain_forward(h: torch.Tensor, model: ChainModel) -> torch.Tensor:
    """
    Y_k = member_k(causal_input(h, k, W)) for every k.

    Members are evaluated in chunks; under autograd each chunk is checkpointed
    and recomputed in the backward pass.

    Args:
        h: (batch, N_T) or (N_T,) scaled input.

    Returns:
        torch.Tensor: Same leading shape as h.
    """
    single = h.dim() == 1
    if single:
        h = h.unsqueeze(0)
    if h.shape[-1] != model.n_members:
        raise ValueError(f"Input length {h.shape[-1]} != number of chain members {model.n_members}")

    windows = causal_windows(h, model.window)
    chunk = _chunk_size(model, h.shape[0])
    outputs = []
    for start in range(0, model.n_members, chunk):
        stop = min(start + chunk, model.n_members)
        part = windows[:, start:stop]
        if torch.is_grad_enabled() and chunk < model.n_members:
            outputs.append(checkpoint(model._chunk_forward, part, start, stop, use_reentrant=False))
        else:
            outputs.append(model._chunk_forward(part, start, stop))
    y = torch.cat(outputs, dim=1).squeeze(-1)
    return y.squeeze(0) if single else y


def chain_gradients(model: ChainModel, h: torch.Tensor, upstream: torch.Tensor) -> list[dict[str, torch.Tensor]]:
    """
    Per-member parameter gradients of <upstream, chain_forward(h)>.

    `upstream` is dLoss/dY for every (sample, step); with the Ehrenfest
    penalty it carries the finite-difference stencil of steps k-1, k, k+1.

    Returns:
        list[dict]: Entry k-1 maps parameter names to member k's gradients.
    """
    out = chain_forward(h, model)
    if upstream.shape != out.shape:
        raise ValueError(f"Upstream gradient shape {tuple(upstream.shape)} != output shape {tuple(out.shape)}")
    names, params = zip(*model.body.named_parameters())
    grads = torch.autograd.grad(out, params, grad_outputs=upstream)
    return [
        {name: grad[k] for name, grad in zip(names, grads)}
        for k in range(model.n_members)
    ]
