"""Prototype trajectory bank: offline clustering, cosine retrieval, gated refinement.

The bank stores verbatim copies of real observed/future track pairs. Each
candidate key is the observed track shifted to start at the origin and
scaled by its end-to-start displacement, flattened. Clustering is seeded
k-means with farthest-point initialization; each cluster contributes the
member closest to the cluster's mean feature (a medoid, never a synthetic
average). Online, the query feature retrieves the best entry by cosine
similarity, and a learned offset plus a gate blend the retrieved future
with the network's own prediction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import Tensor, add, concat, mul, reshape, sigmoid, sub, tensor
from .engine.rng import Rng
from .params import Linear, Mlp, linear, mlp

COSINE_EPS = 1e-8
DISPLACEMENT_FLOOR = 1e-8
KMEANS_MAX_ITERS = 100


def motion_feature(track: np.ndarray) -> np.ndarray:
    """Translation- and scale-invariant key: (track - start) / displacement, flat.

    Stationary tracks hit the displacement floor and come out all-zero.
    """
    track = np.asarray(track, dtype=np.float64)
    rel = track - track[0]
    scale = max(float(np.linalg.norm(track[-1] - track[0])), DISPLACEMENT_FLOOR)
    return (rel / scale).reshape(-1)


@dataclass
class BankEntry:
    obs: np.ndarray  # (T_obs, 2)
    fut: np.ndarray  # (T_fut, 2)
    feat: np.ndarray  # (2 * T_obs,)


@dataclass
class TrajectoryBank:
    entries: list[BankEntry]
    t_obs: int
    t_fut: int
    seed: int

    def __len__(self) -> int:
        return len(self.entries)


def _farthest_point_init(feats: np.ndarray, k: int, rng: Rng) -> np.ndarray:
    n = feats.shape[0]
    chosen = [rng.randint(n)]
    d2 = ((feats - feats[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, ((feats - feats[nxt]) ** 2).sum(axis=1))
    return feats[chosen].copy()


def kmeans_assign(feats: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((feats[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def kmeans_objective(feats: np.ndarray, centers: np.ndarray, assign: np.ndarray) -> float:
    return float(((feats - centers[assign]) ** 2).sum())


def _kmeans(feats: np.ndarray, k: int, rng: Rng) -> np.ndarray:
    centers = _farthest_point_init(feats, k, rng)
    assign = kmeans_assign(feats, centers)
    for _ in range(KMEANS_MAX_ITERS):
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = feats[members].mean(axis=0)
            else:
                # reseed an empty cluster to the feature farthest from its center
                d2 = ((feats - centers[assign]) ** 2).sum(axis=1)
                centers[c] = feats[int(np.argmax(d2))]
        new_assign = kmeans_assign(feats, centers)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return assign


def build_bank(
    tracks: list[np.ndarray], k_max: int, t_obs: int, t_fut: int, seed: int
) -> TrajectoryBank:
    """Cluster observed-segment features and keep one medoid pair per cluster."""
    from .data.generate import split_window

    if not tracks:
        raise ValueError("cannot build a bank from an empty dataset")
    pairs = [split_window(np.asarray(t, dtype=np.float64), t_obs, t_fut) for t in tracks]
    feats = np.stack([motion_feature(obs) for obs, _ in pairs])
    n = feats.shape[0]
    k = min(k_max, n)
    rng = Rng(seed).child("bank-kmeans")
    if k == n:
        assign = np.arange(n)
    else:
        assign = _kmeans(feats, k, rng)
    entries = []
    for c in range(k):
        members = np.flatnonzero(assign == c)
        if members.size == 0:
            continue
        mean = feats[members].mean(axis=0)
        dist = np.linalg.norm(feats[members] - mean, axis=1)
        medoid = int(members[int(np.argmin(dist))])  # argmin takes the lowest index on ties
        obs, fut = pairs[medoid]
        entries.append(BankEntry(obs=obs.copy(), fut=fut.copy(), feat=feats[medoid].copy()))
    return TrajectoryBank(entries=entries, t_obs=t_obs, t_fut=t_fut, seed=seed)


def bank_from_samples(samples, k_max: int, seed: int) -> TrajectoryBank:
    tracks = [np.vstack([s.obs_ais, s.fut_ais]) for s in samples]
    t_obs = samples[0].t_obs
    t_fut = samples[0].t_fut
    return build_bank(tracks, k_max, t_obs, t_fut, seed)


def search(bank: TrajectoryBank, observed: np.ndarray) -> tuple[int, np.ndarray, float]:
    """Best entry by cosine similarity; lowest index wins ties."""
    if not bank.entries:
        raise ValueError("search on an empty bank")
    fv = motion_feature(observed)
    nv = np.linalg.norm(fv)
    best_k, best_s = 0, -np.inf
    for k, entry in enumerate(bank.entries):
        s = float(fv @ entry.feat / (nv * np.linalg.norm(entry.feat) + COSINE_EPS))
        if s > best_s:
            best_k, best_s = k, s
    return best_k, bank.entries[best_k].fut, best_s


# ---------------------------------------------------------------------------
# refinement

@dataclass
class RefinementParams:
    offset_mlp: Mlp  # flat(prior) ++ flat(decoder features) -> hidden -> flat offset
    gate: Linear  # pooled encoding -> 1 (squashed to [0, 1])


def init_refinement(rng: Rng, cfg) -> RefinementParams:
    t, d = cfg.t_fut, cfg.d_model
    return RefinementParams(
        offset_mlp=mlp(rng, 2 * t + t * d, cfg.offset_hidden, 2 * t),
        gate=linear(rng, d, 1),
    )


def refine_and_fuse(
    p: RefinementParams,
    base: Tensor,
    prior: np.ndarray,
    features: Tensor,
    f_enc: Tensor,
    offset_scale: float,
    direction: str = "prior",
) -> Tensor:
    """Blend the retrieved future (plus a learned, scaled offset) with the base.

    direction selects which operand the gate weights: "prior" puts beta on
    the refined prior (the default), "base" mirrors it.
    """
    t_fut = base.shape[0]
    prior_t = tensor(np.asarray(prior, dtype=np.float64))
    flat_prior = reshape(prior_t, (1, 2 * t_fut))
    flat_feat = reshape(features, (1, -1))
    offset = reshape(p.offset_mlp(concat([flat_prior, flat_feat], axis=1)), (t_fut, 2))
    refined = add(prior_t, mul(offset, offset_scale))
    beta = sigmoid(p.gate(f_enc))  # (1, 1), broadcasts over (T, 2)
    if direction == "prior":
        return add(mul(beta, refined), mul(sub(1.0, beta), base))
    if direction == "base":
        return add(mul(beta, base), mul(sub(1.0, beta), refined))
    raise ValueError(f"unknown fusion direction '{direction}'")


# ---------------------------------------------------------------------------
# persistence: JSON with a header and verbatim entry arrays

def save_bank(path: str | Path, bank: TrajectoryBank) -> None:
    payload = {
        "t_obs": bank.t_obs,
        "t_fut": bank.t_fut,
        "k": len(bank.entries),
        "seed": bank.seed,
        "entries": [
            {
                "obs": [[float(x), float(y)] for x, y in e.obs],
                "fut": [[float(x), float(y)] for x, y in e.fut],
                "feat": [float(v) for v in e.feat],
            }
            for e in bank.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, separators=(",", ":"))
        fh.write("\n")


def load_bank(path: str | Path) -> TrajectoryBank:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    for key in ("t_obs", "t_fut", "k", "seed", "entries"):
        if key not in payload:
            raise ValueError(f"bank file {path} is missing '{key}'")
    entries = [
        BankEntry(
            obs=np.asarray(e["obs"], dtype=np.float64),
            fut=np.asarray(e["fut"], dtype=np.float64),
            feat=np.asarray(e["feat"], dtype=np.float64),
        )
        for e in payload["entries"]
    ]
    if len(entries) != payload["k"]:
        raise ValueError(f"bank file {path}: header k={payload['k']} but {len(entries)} entries")
    return TrajectoryBank(
        entries=entries, t_obs=payload["t_obs"], t_fut=payload["t_fut"], seed=payload["seed"]
    )
