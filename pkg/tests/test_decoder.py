import numpy as np
import pytest

from conftest import micro_config
from vesselcast.decoder import decode, init_decoder, predict_modes, sample_latent, to_prediction_set
from vesselcast.engine import Rng, finite_diff_check, tensor, tsum
from vesselcast.metrics import ade_fde
from vesselcast.params import collect_params


def rand(rng, shape, lo=-1.0, hi=1.0):
    return np.array(rng.uniforms(int(np.prod(shape)), lo, hi)).reshape(shape)


def make_params(cfg, seed=0):
    return init_decoder(Rng(seed).child("init"), cfg)


def test_zero_eps_gives_mu_exactly(micro_cfg):
    p = make_params(micro_cfg)
    f_enc = tensor(rand(Rng(1), (1, micro_cfg.d_model)))
    z, mu, logvar, _ = sample_latent(p, f_enc, 0, eps=np.zeros(micro_cfg.latent_dim))
    assert np.array_equal(z.data, mu.data)


def test_unit_eps_with_zero_logvar(micro_cfg):
    p = make_params(micro_cfg)
    p.logvar_head.w.data[...] = 0.0
    p.logvar_head.b.data[...] = 0.0
    f_enc = tensor(rand(Rng(2), (1, micro_cfg.d_model)))
    z, mu, _, _ = sample_latent(p, f_enc, 0, eps=np.ones(micro_cfg.latent_dim))
    assert np.allclose(z.data, mu.data + 1.0, atol=1e-15)


def test_sample_mean_approaches_mu(micro_cfg):
    p = make_params(micro_cfg)
    f_enc = tensor(rand(Rng(3), (1, micro_cfg.d_model)))
    rng = Rng(99)
    draws = []
    mu = None
    for _ in range(10_000):
        z, mu, logvar, _ = sample_latent(p, f_enc, 1, rng=rng)
        draws.append(z.data[0])
    draws = np.array(draws)
    sigma = np.exp(0.5 * logvar.data[0])
    # Monte-Carlo oracle: mean within 3 sigma / sqrt(n)
    tol = 3.0 * sigma / np.sqrt(len(draws))
    assert np.all(np.abs(draws.mean(axis=0) - mu.data[0]) < tol)


def test_zero_decoder_outputs_repeated_biases(micro_cfg):
    p = make_params(micro_cfg)
    for t in collect_params(p).values():
        t.data[...] = 0.0
    p.ais_head.b.data[...] = np.array([0.3, -0.2])
    p.cctv_head.b.data[...] = np.array([1.5, 2.5])
    f_enc = tensor(rand(Rng(4), (1, micro_cfg.d_model)))
    z, _, _, e_k = sample_latent(p, f_enc, 0, eps=np.zeros(micro_cfg.latent_dim))
    ais, cctv, _ = decode(p, f_enc, z, e_k, micro_cfg.t_fut)
    assert np.allclose(ais.data, np.tile([0.3, -0.2], (micro_cfg.t_fut, 1)))
    assert np.allclose(cctv.data, np.tile([1.5, 2.5], (micro_cfg.t_fut, 1)))


def test_different_latents_decode_differently(micro_cfg):
    p = make_params(micro_cfg)
    f_enc = tensor(rand(Rng(5), (1, micro_cfg.d_model)))
    _, _, _, e_k = sample_latent(p, f_enc, 0, eps=np.zeros(micro_cfg.latent_dim))
    z1 = tensor(rand(Rng(6), (1, micro_cfg.latent_dim)))
    z2 = tensor(rand(Rng(7), (1, micro_cfg.latent_dim)))
    a1, _, _ = decode(p, f_enc, z1, e_k, micro_cfg.t_fut)
    a2, _, _ = decode(p, f_enc, z2, e_k, micro_cfg.t_fut)
    assert ade_fde(a1.data, a2.data)[0] > 0


def test_predict_modes_shapes_and_determinism(micro_cfg):
    p = make_params(micro_cfg)
    f_enc = tensor(rand(Rng(8), (1, micro_cfg.d_model)))
    k, t, j = micro_cfg.modes, micro_cfg.t_fut, micro_cfg.latent_dim
    preds1 = to_prediction_set(predict_modes(p, f_enc, k, t, rng=Rng(55)))
    preds2 = to_prediction_set(predict_modes(p, f_enc, k, t, rng=Rng(55)))
    assert preds1.ais.shape == (k, t, 2)
    assert preds1.cctv.shape == (k, t, 2)
    assert preds1.latents.shape == (k, j)
    assert np.array_equal(preds1.ais, preds2.ais)
    assert np.array_equal(preds1.latents, preds2.latents)


def test_k1_predict_modes(micro_cfg):
    cfg = micro_config(modes=1)
    p = make_params(cfg)
    f_enc = tensor(rand(Rng(9), (1, cfg.d_model)))
    preds = to_prediction_set(predict_modes(p, f_enc, 1, cfg.t_fut, rng=Rng(1)))
    assert preds.ais.shape == (1, cfg.t_fut, 2)


def test_distinct_modes_give_distinct_candidates(micro_cfg):
    cfg = micro_config(modes=5)
    p = make_params(cfg)
    f_enc = tensor(rand(Rng(10), (1, cfg.d_model)))
    preds = to_prediction_set(predict_modes(p, f_enc, 5, cfg.t_fut, eps=np.zeros((5, cfg.latent_dim))))
    for i in range(5):
        for j in range(i + 1, 5):
            assert ade_fde(preds.ais[i], preds.ais[j])[0] > 0


def test_decoder_gradients(micro_cfg):
    p = make_params(micro_cfg)
    rng = Rng(11)
    f_enc = tensor(rand(rng, (1, micro_cfg.d_model)))
    eps = rand(rng, (micro_cfg.latent_dim,))
    coeff_a = 0.2 * rand(rng, (micro_cfg.t_fut, 2))
    coeff_c = 0.2 * rand(rng, (micro_cfg.t_fut, 2))

    def f(_):
        z, mu, logvar, e_k = sample_latent(p, f_enc, 0, eps=eps)
        ais, cctv, _ = decode(p, f_enc, z, e_k, micro_cfg.t_fut)
        return tsum(ais * coeff_a) + tsum(cctv * coeff_c) + tsum(mu * mu) + tsum(logvar * 0.1)

    for target in (p.expand.fc1.w, p.mu_head.w, p.logvar_head.w, p.mode_embed, p.ais_head.w):
        assert finite_diff_check(f, target) < 1e-4
