"""End-to-end predictor: scene encoding, cross-modal fusion, variational
decoding, and prototype-bank refinement of the positional head."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bank import RefinementParams, TrajectoryBank, init_refinement, refine_and_fuse, search
from .config import TrainConfig, architecture_hash
from .data.types import VesselSample
from .decoder import DecoderParams, ModeOutput, PredictionSet, init_decoder, predict_modes
from .engine import Tensor, no_grad
from .engine.rng import Rng
from .fusion import FusionParams, encode_and_fuse, init_fusion
from .losses import sample_losses, total_loss
from .params import collect_params
from .scene_encoder import SceneEncoderParams, encode_scene_sequence, init_scene_encoder


@dataclass
class ModelParams:
    scene: SceneEncoderParams
    fusion: FusionParams
    decoder: DecoderParams
    refine: RefinementParams


@dataclass
class SampleForward:
    """Graph-connected outputs for one vessel sample."""

    modes: list[ModeOutput]  # positional head already refined when a bank applies
    f_enc: Tensor
    prior_index: int | None  # retrieved bank entry, None when refinement skipped
    prior_similarity: float | None


class Model:
    def __init__(self, cfg: TrainConfig, seed: int | None = None):
        cfg.validate()
        self.cfg = cfg
        rng = Rng(cfg.seed if seed is None else seed).child("init")
        self.params = ModelParams(
            scene=init_scene_encoder(rng, cfg),
            fusion=init_fusion(rng, cfg),
            decoder=init_decoder(rng, cfg),
            refine=init_refinement(rng, cfg),
        )
        self.named = collect_params(self.params)

    # ------------------------------------------------------------------
    def forward_sample(
        self,
        sample: VesselSample,
        rng: Rng | None = None,
        eps: np.ndarray | None = None,
        bank: TrajectoryBank | None = None,
    ) -> SampleForward:
        """Run the full pipeline on one sample.

        Latent noise comes from `rng` (K * J draws in mode order) unless a
        (K, J) `eps` array pins it. Bank refinement applies to the positional
        head only, per mode, and is skipped for dark vessels: without any
        broadcast track there is no retrieval key.
        """
        cfg = self.cfg
        scene_feats = (
            encode_scene_sequence(self.params.scene, sample.scenes, cfg) if cfg.use_scene else None
        )
        _, f_enc = encode_and_fuse(
            self.params.fusion,
            sample.obs_ais,
            sample.ais_mask,
            sample.obs_cctv,
            scene_feats,
            cfg.heads,
            use_cctv=cfg.use_cctv,
        )
        modes = predict_modes(self.params.decoder, f_enc, cfg.modes, cfg.t_fut, rng=rng, eps=eps)

        prior_index = None
        prior_sim = None
        if bank is not None and cfg.use_bank and sample.ais_mask.any():
            prior_index, prior_fut, prior_sim = search(bank, sample.obs_ais)
            for m in modes:
                m.ais = refine_and_fuse(
                    self.params.refine,
                    m.ais,
                    prior_fut,
                    m.features,
                    f_enc,
                    cfg.offset_scale,
                    direction=cfg.fusion_direction,
                )
        return SampleForward(modes=modes, f_enc=f_enc, prior_index=prior_index, prior_similarity=prior_sim)

    def loss_batch(
        self,
        samples: list[VesselSample],
        rng: Rng | None = None,
        eps: np.ndarray | None = None,
        bank: TrajectoryBank | None = None,
    ) -> tuple[Tensor, Tensor, Tensor, list[int]]:
        """Batch-mean (total, rec, kl) tensors plus per-sample winning modes.

        eps, when given, has shape (batch, K, J).
        """
        recs = []
        kls = []
        winners = []
        for i, sample in enumerate(samples):
            eps_i = None if eps is None else eps[i]
            fwd = self.forward_sample(sample, rng=rng, eps=eps_i, bank=bank)
            rec, kl, winner = sample_losses(fwd.modes, sample.fut_ais, sample.fut_cctv)
            recs.append(rec)
            kls.append(kl)
            winners.append(winner)
        inv = 1.0 / len(samples)
        rec = sum(recs[1:], recs[0]) * inv
        kl = sum(kls[1:], kls[0]) * inv
        return total_loss(rec, kl, self.cfg.kl_weight), rec, kl, winners

    def predict(
        self,
        sample: VesselSample,
        rng: Rng | None = None,
        eps: np.ndarray | None = None,
        bank: TrajectoryBank | None = None,
    ) -> PredictionSet:
        """Inference-only candidate set (refined positional head, raw camera head)."""
        with no_grad():
            fwd = self.forward_sample(sample, rng=rng, eps=eps, bank=bank)
        return PredictionSet(
            ais=np.stack([m.ais.data for m in fwd.modes]),
            cctv=np.stack([m.cctv.data for m in fwd.modes]),
            latents=np.stack([m.z.data[0] for m in fwd.modes]),
            mu=np.stack([m.mu.data[0] for m in fwd.modes]),
            logvar=np.stack([m.logvar.data[0] for m in fwd.modes]),
        )

    # ------------------------------------------------------------------
    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self.named.items()}

    def architecture_hash(self) -> int:
        return architecture_hash(self.cfg)
