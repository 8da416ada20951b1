"""Variational multi-mode trajectory decoding.

Each of the K modes owns a learned embedding. Mean and log-variance heads
condition on the pooled encoding concatenated with that embedding; the
latent is reparameterized (z = mu + eps * exp(0.5 * logvar)) so gradients
flow to the heads but not the noise. A single MLP expands the conditioned
input to the whole future at once; per-step linear heads emit both modality
trajectories. No recurrence anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Tensor, clamp, concat, exp, mul, narrow, reshape, tensor
from .engine.rng import Rng
from .params import Linear, Mlp, linear, mlp, uniform_init

LOGVAR_RANGE = 10.0  # clamp before exponentiation


@dataclass
class DecoderParams:
    mode_embed: Tensor  # (K, d)
    mu_head: Linear  # 2d -> J
    logvar_head: Linear  # 2d -> J
    expand: Mlp  # 2d + J -> 4d -> T_fut * d
    ais_head: Linear  # d -> 2
    cctv_head: Linear  # d -> 2


@dataclass
class ModeOutput:
    """Tensors for one decoded mode (graph-connected for the loss)."""

    ais: Tensor  # (T_fut, 2)
    cctv: Tensor  # (T_fut, 2)
    features: Tensor  # (T_fut, d) pre-head decoder features
    z: Tensor  # (1, J)
    mu: Tensor  # (1, J)
    logvar: Tensor  # (1, J)


@dataclass
class PredictionSet:
    """Plain-array view of K candidate futures per modality."""

    ais: np.ndarray  # (K, T_fut, 2)
    cctv: np.ndarray  # (K, T_fut, 2)
    latents: np.ndarray  # (K, J)
    mu: np.ndarray  # (K, J)
    logvar: np.ndarray  # (K, J)


def init_decoder(rng: Rng, cfg) -> DecoderParams:
    d, j = cfg.d_model, cfg.latent_dim
    return DecoderParams(
        mode_embed=uniform_init(rng, (cfg.modes, d), d),
        mu_head=linear(rng, 2 * d, j),
        logvar_head=linear(rng, 2 * d, j),
        expand=mlp(rng, 2 * d + j, 4 * d, cfg.t_fut * d),
        ais_head=linear(rng, d, 2),
        cctv_head=linear(rng, d, 2),
    )


def sample_latent(
    p: DecoderParams,
    f_enc: Tensor,
    k: int,
    rng: Rng | None = None,
    eps: np.ndarray | None = None,
) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Draw z for mode k; pass eps explicitly to pin the noise (tests, replay)."""
    if k >= p.mode_embed.shape[0]:
        raise IndexError(f"mode {k} out of range for K={p.mode_embed.shape[0]}")
    e_k = narrow(p.mode_embed, 0, k, 1)
    h = concat([f_enc, e_k], axis=1)
    mu = p.mu_head(h)
    logvar = clamp(p.logvar_head(h), -LOGVAR_RANGE, LOGVAR_RANGE)
    j = mu.shape[1]
    if eps is None:
        eps = np.array(rng.normals(j))
    noise = tensor(np.asarray(eps, dtype=np.float64).reshape(1, j))
    z = mu + mul(exp(mul(logvar, 0.5)), noise)
    return z, mu, logvar, e_k


def decode(p: DecoderParams, f_enc: Tensor, z: Tensor, e_k: Tensor, t_fut: int) -> tuple[Tensor, Tensor, Tensor]:
    """One-shot expansion of (encoding, latent, mode) into both trajectories."""
    d = f_enc.shape[1]
    flat = p.expand(concat([f_enc, z, e_k], axis=1))
    features = reshape(flat, (t_fut, d))
    return p.ais_head(features), p.cctv_head(features), features


def predict_modes(
    p: DecoderParams,
    f_enc: Tensor,
    k_modes: int,
    t_fut: int,
    rng: Rng | None = None,
    eps: np.ndarray | None = None,
) -> list[ModeOutput]:
    """Decode modes k = 0..K-1 in order; each consumes J noise draws from rng.

    eps, when given, is a (K, J) array overriding the rng stream.
    """
    modes = []
    for k in range(k_modes):
        eps_k = None if eps is None else eps[k]
        z, mu, logvar, e_k = sample_latent(p, f_enc, k, rng=rng, eps=eps_k)
        ais, cctv, features = decode(p, f_enc, z, e_k, t_fut)
        modes.append(ModeOutput(ais=ais, cctv=cctv, features=features, z=z, mu=mu, logvar=logvar))
    return modes


def to_prediction_set(modes: list[ModeOutput]) -> PredictionSet:
    return PredictionSet(
        ais=np.stack([m.ais.data for m in modes]),
        cctv=np.stack([m.cctv.data for m in modes]),
        latents=np.stack([m.z.data[0] for m in modes]),
        mu=np.stack([m.mu.data[0] for m in modes]),
        logvar=np.stack([m.logvar.data[0] for m in modes]),
    )
