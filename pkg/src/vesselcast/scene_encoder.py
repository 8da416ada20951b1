"""Target-aware scene encoding.

Per frame, a small strided conv stem produces a feature map from which three
spatial descriptors are pooled: a box-aligned target embedding, a global
average context, and an encoded bounding box. A two-layer convolutional LSTM
over the frame features supplies temporal context, exponentially weighted so
the most recent frame always carries weight 1. Each timestep's spatial and
temporal vectors fuse through an output MLP into one row of the (T x d)
scene representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data.types import SceneFrame
from .engine import (
    Tensor,
    add,
    concat,
    conv2d,
    mul,
    narrow,
    relu,
    reshape,
    roi_align,
    sigmoid,
    tanh,
    tensor,
    tmean,
    zeros,
)
from .engine.rng import Rng
from .params import Linear, Mlp, linear, mlp, uniform_init


@dataclass
class ConvLayer:
    kernel: Tensor  # (C_out, C_in, kh, kw)
    bias: Tensor  # (C_out, 1, 1)


@dataclass
class ConvLstmCell:
    kernel: Tensor  # (4*C, 2*C, 3, 3), gate order i, f, g, o
    bias: Tensor  # (4*C, 1, 1); forget slice initialized to 1.0


@dataclass
class SceneEncoderParams:
    stem1: ConvLayer
    stem2: ConvLayer
    stem3: ConvLayer
    target_proj: Linear  # C_f * P * P -> d
    global_proj: Linear  # C_f -> d // 2
    bbox_mlp: Mlp  # 4 -> bbox_dim -> bbox_dim
    fuse_mlp: Mlp  # d + d//2 + bbox_dim -> hidden -> d
    cell1: ConvLstmCell
    cell2: ConvLstmCell
    temporal_proj: Linear  # C_f -> d
    out_mlp: Mlp  # 2d -> 2d -> d


def _conv_layer(rng: Rng, c_out: int, c_in: int, k: int) -> ConvLayer:
    fan_in = c_in * k * k
    return ConvLayer(
        kernel=uniform_init(rng, (c_out, c_in, k, k), fan_in),
        bias=uniform_init(rng, (c_out, 1, 1), fan_in),
    )


def _convlstm_cell(rng: Rng, channels: int) -> ConvLstmCell:
    fan_in = 2 * channels * 9
    cell = ConvLstmCell(
        kernel=uniform_init(rng, (4 * channels, 2 * channels, 3, 3), fan_in),
        bias=uniform_init(rng, (4 * channels, 1, 1), fan_in),
    )
    cell.bias.data[channels : 2 * channels] = 1.0  # forget gate open at init
    return cell


def init_scene_encoder(rng: Rng, cfg) -> SceneEncoderParams:
    c1, c2, c_f = cfg.stem_channels
    d = cfg.d_model
    return SceneEncoderParams(
        stem1=_conv_layer(rng, c1, 3, 3),
        stem2=_conv_layer(rng, c2, c1, 3),
        stem3=_conv_layer(rng, c_f, c2, 3),
        target_proj=linear(rng, c_f * cfg.roi_size * cfg.roi_size, d),
        global_proj=linear(rng, c_f, d // 2),
        bbox_mlp=mlp(rng, 4, cfg.bbox_dim, cfg.bbox_dim),
        fuse_mlp=mlp(rng, d + d // 2 + cfg.bbox_dim, 2 * d, d),
        cell1=_convlstm_cell(rng, c_f),
        cell2=_convlstm_cell(rng, c_f),
        temporal_proj=linear(rng, c_f, d),
        out_mlp=mlp(rng, 2 * d, 2 * d, d),
    )


def stem_forward(p: SceneEncoderParams, raster: np.ndarray) -> Tensor:
    """Three convs, stride 4 overall: raster (3,S,S) -> feature map (C_f, S/4, S/4)."""
    x = tensor(np.asarray(raster, dtype=np.float64))
    x = relu(add(conv2d(x, p.stem1.kernel, stride=2, padding=1), p.stem1.bias))
    x = relu(add(conv2d(x, p.stem2.kernel, stride=2, padding=1), p.stem2.bias))
    return relu(add(conv2d(x, p.stem3.kernel, stride=1, padding=1), p.stem3.bias))


def _global_avg(fmap: Tensor) -> Tensor:
    c = fmap.shape[0]
    return reshape(tmean(reshape(fmap, (c, -1)), axis=1), (1, c))


def spatial_features(p: SceneEncoderParams, fmap: Tensor, scene: SceneFrame, cfg) -> Tensor:
    """Box-pooled target embedding + global context + box encoding -> (1, d)."""
    spatial_scale = fmap.shape[1] / scene.raster.shape[1]
    pooled = roi_align(fmap, scene.bbox, cfg.roi_size, spatial_scale)
    f_tar = p.target_proj(reshape(pooled, (1, -1)))
    f_glo = p.global_proj(_global_avg(fmap))
    box_norm = np.asarray(scene.bbox, dtype=np.float64) / scene.raster.shape[1]
    f_box = p.bbox_mlp(tensor(box_norm.reshape(1, 4)))
    return p.fuse_mlp(concat([f_tar, f_glo, f_box], axis=1))


def convlstm_step(cell: ConvLstmCell, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
    channels = h.shape[0]
    z = add(conv2d(concat([x, h], axis=0), cell.kernel, stride=1, padding=1), cell.bias)
    i = sigmoid(narrow(z, 0, 0, channels))
    f = sigmoid(narrow(z, 0, channels, channels))
    g = tanh(narrow(z, 0, 2 * channels, channels))
    o = sigmoid(narrow(z, 0, 3 * channels, channels))
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next


def temporal_context(p: SceneEncoderParams, fmaps: list[Tensor], decay: float) -> list[Tensor]:
    """Two stacked ConvLSTM layers, pooled, projected, and decay-weighted.

    Step t (0-based, most recent last) gets weight exp(decay * (t - (T-1))),
    so weights lie in (0, 1] and the newest frame always has weight 1.
    """
    if not fmaps:
        raise ValueError("temporal_context needs a nonempty frame sequence")
    shape = fmaps[0].shape
    h1 = zeros(shape)
    c1 = zeros(shape)
    h2 = zeros(shape)
    c2 = zeros(shape)
    t_obs = len(fmaps)
    rows = []
    for t, fmap in enumerate(fmaps):
        h1, c1 = convlstm_step(p.cell1, fmap, h1, c1)
        h2, c2 = convlstm_step(p.cell2, h1, h2, c2)
        weight = math.exp(decay * (t - (t_obs - 1)))
        rows.append(mul(p.temporal_proj(_global_avg(h2)), weight))
    return rows


def encode_scene_sequence(p: SceneEncoderParams, scenes: list[SceneFrame], cfg) -> Tensor:
    """Full scene path: per-step concat(spatial, temporal) through the output MLP."""
    fmaps = [stem_forward(p, fr.raster) for fr in scenes]
    spatial = [spatial_features(p, fmap, fr, cfg) for fmap, fr in zip(fmaps, scenes)]
    temporal = temporal_context(p, fmaps, cfg.decay)
    rows = [p.out_mlp(concat([s, t], axis=1)) for s, t in zip(spatial, temporal)]
    return concat(rows, axis=0)
