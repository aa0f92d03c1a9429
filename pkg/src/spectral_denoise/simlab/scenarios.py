"""The registered Monte Carlo scenarios.

Each scenario exposes defaults, a grouping of its grid columns, and a
``replicate(params, seed)`` function returning one metrics row per grid
point.  All randomness inside a replicate flows from the single seed it
is handed, so replicates are independent jobs and reruns are bitwise
reproducible.
"""

from __future__ import annotations

import numpy as np

from ..applications import (NoiseCovariances, SamplingPattern,
                            estimate_noise_covariances, missing_data_denoise,
                            shrink_submatrix_baseline, submatrix_denoise,
                            whiten_denoise)
from ..denoise import spectral_denoise, svs_shrink
from ..geometry import WeightOperator
from ..localized import Partition, localized_denoise, make_equispaced_partition
from .._svd import svd_head_above, top_svd
from ..spiked import bulk_edge, cosines, naive_rank
from .metrics import relative_error, weighted_loss
from .noise import NoiseSpec, derive_seed, gen_noise, make_rng
from .signals import SignalSpec, gen_signal, two_block_vectors

__all__ = ["SCENARIOS", "offset_partition"]


def _noise_spec(params: dict, seed: int, scale: float | None) -> NoiseSpec:
    dist = params.get("dist", "gaussian")
    df = None
    if isinstance(dist, (int, float)):
        dist, df = "student_t", float(dist)
    elif dist.startswith("t"):
        try:
            df = float(dist[1:].lstrip("_"))
            dist = "student_t"
        except ValueError:
            pass
    return NoiseSpec(dist=dist, df=df, scale=scale, seed=seed)


def offset_partition(dim: int, num_blocks: int, offset: int) -> Partition:
    """Equispaced partition whose block boundaries are shifted by ``offset``.

    A nonzero offset makes one block wrap around, which is how block /
    cell misalignment is exercised.
    """
    base = make_equispaced_partition(dim, num_blocks)
    if offset % dim == 0:
        return base
    rolled = [(np.sort((b + offset) % dim)) for b in base.blocks]
    return Partition(dim, tuple(rolled))


# ---------------------------------------------------------------------------
# localized-checkerboard
# ---------------------------------------------------------------------------

def _localized_checkerboard_replicate(params: dict, seed: int) -> list[dict]:
    n = int(params["n"])
    p = int(round(params.get("gamma", 1.0) * n))
    f = float(params["f"])
    cells = int(params.get("cells", 8))
    sig = gen_signal(SignalSpec("checkerboard", p, n, f=f, cells=cells))
    sd_scale = float(params.get("noise_sd_scale", 0.1))
    sigma = sd_scale / np.sqrt(n)

    rows = offset_partition(p, int(params.get("row_blocks", 4)),
                            int(params.get("row_offset", 0)))
    cols = offset_partition(n, int(params.get("col_blocks", 4)),
                            int(params.get("col_offset", 0)))

    noise = gen_noise(_noise_spec(params, seed, sigma), p, n)
    Y = sig.X + noise
    model = 1.0 / (sigma * np.sqrt(n))  # rescale so noise variance is 1/n
    Ym = Y * model

    shr = svs_shrink(Ym)
    loc = localized_denoise(Ym, rows, cols)
    X_shr = shr.estimate / model
    X_loc = loc.estimate / model
    sig_energy = float(np.sum(sig.X**2))
    return [{
        "f": f,
        "rel_err_shrink": relative_error(X_shr, sig.X),
        "rel_err_localized": relative_error(X_loc, sig.X),
        "loss_shrink": weighted_loss(X_shr, sig.X),
        "loss_localized": weighted_loss(X_loc, sig.X),
        "amse_shrink": shr.amse_estimate / model**2,
        "amse_localized": loc.amse_estimate / model**2,
        "signal_energy": sig_energy,
        "rank_detected": shr.rank,
    }]


# ---------------------------------------------------------------------------
# submatrix
# ---------------------------------------------------------------------------

def _submatrix_replicate(params: dict, seed: int) -> list[dict]:
    p = int(params["p"])
    n = int(params["n"])
    gamma = p / n
    t = gamma**0.25 + float(params.get("t_offset", 0.5))
    rows_idx = np.arange(p // 2)
    cols_idx = np.arange(n // 2)
    out = []
    for k, f in enumerate(params["f_grid"]):
        sig = gen_signal(SignalSpec("piecewise_constant", p, n, t=(t,),
                                    energy_fraction=np.sqrt(f)))
        X0 = sig.X[np.ix_(rows_idx, cols_idx)]
        noise = gen_noise(_noise_spec(params, derive_seed(seed, k), None), p, n)
        Y = sig.X + noise

        weighted = submatrix_denoise(Y, rows_idx, cols_idx)
        baseline = shrink_submatrix_baseline(Y, rows_idx, cols_idx)
        whole = svs_shrink(Y).estimate[np.ix_(rows_idx, cols_idx)]
        out.append({
            "f": float(f),
            "rel_err_weighted": relative_error(weighted.estimate, X0),
            "rel_err_sub_baseline": relative_error(baseline.estimate, X0),
            "rel_err_global_shrink": relative_error(whole, X0),
            "baseline_rank": baseline.denoise.rank,
        })
    return out


# ---------------------------------------------------------------------------
# heteroscedastic
# ---------------------------------------------------------------------------

def _heteroscedastic_replicate(params: dict, seed: int) -> list[dict]:
    p = int(params["p"])
    n = int(params["n"])
    gamma = p / n
    r = int(params.get("rank", 5))
    t = tuple(gamma**0.25 + 0.5 + k for k in range(r))[::-1]
    out = []
    for k, kappa in enumerate(params["kappa_grid"]):
        rng = make_rng(derive_seed(seed, 2 * k))
        sig = gen_signal(SignalSpec("random_orthonormal", p, n, t=t), rng)
        cov = NoiseCovariances(np.linspace(1.0 / kappa, 1.0, p),
                               np.linspace(1.0 / kappa, 1.0, n))
        G = gen_noise(_noise_spec(params, derive_seed(seed, 2 * k + 1), None), p, n)
        Y = sig.X + np.sqrt(cov.row_cov)[:, None] * G * np.sqrt(cov.col_cov)[None, :]

        oracle = whiten_denoise(Y, cov)
        est_cov = estimate_noise_covariances(Y)
        estimated = whiten_denoise(Y, est_cov)
        # Homoscedastic baseline: shrinkage after matching the average
        # noise variance, the best a white-noise model can do here.
        ts, _, tt, _ = cov.trace_stats()
        s = np.sqrt(ts * tt)
        plain = svs_shrink(Y / s).estimate * s
        out.append({
            "kappa": float(kappa),
            "rel_err_whiten_oracle": relative_error(oracle.estimate, sig.X),
            "rel_err_whiten_estimated": relative_error(estimated.estimate, sig.X),
            "rel_err_shrink": relative_error(plain, sig.X),
        })
    return out


# ---------------------------------------------------------------------------
# missing-data
# ---------------------------------------------------------------------------

def _missing_data_replicate(params: dict, seed: int) -> list[dict]:
    p = int(params["p"])
    n = int(params["n"])
    gamma = p / n
    r = int(params.get("rank", 5))
    t = tuple(np.sqrt(np.sqrt(gamma) + 200.0 * k) for k in range(r, 0, -1))
    q_row = np.linspace(*params.get("q_row_range", (0.3, 0.7)), p)
    q_col = np.linspace(*params.get("q_col_range", (0.3, 0.7)), n)
    out = []
    for k, sigma in enumerate(params["sigma_grid"]):
        rng = make_rng(derive_seed(seed, 3 * k))
        sig = gen_signal(SignalSpec("random_orthonormal", p, n, t=t), rng)
        noise = gen_noise(_noise_spec(params, derive_seed(seed, 3 * k + 1), sigma), p, n)
        mask_rng = make_rng(derive_seed(seed, 3 * k + 2))
        mask = (mask_rng.random((p, n)) < np.outer(q_row, q_col))
        # Unit-variance convention: divide observations by sigma, scale back.
        pattern = SamplingPattern.from_dense((sig.X + noise) / sigma, mask, q_row, q_col)
        res = missing_data_denoise(pattern, margin=float(params.get("margin", 0.0)))
        out.append({
            "sigma": float(sigma),
            "rel_err": relative_error(sigma * res.estimate, sig.X),
            "rank_detected": res.denoise.rank,
        })
    return out


# ---------------------------------------------------------------------------
# weighted-inner-products
# ---------------------------------------------------------------------------

def _two_block_signal(p: int, n: int, gamma: float, offsets=(3.0, 2.0)):
    """Rank-2 constant/sign-flip design; larger value on the flip pair."""
    u_const, u_flip = two_block_vectors(p)
    v_const, v_flip = two_block_vectors(n)
    t = np.array([gamma**0.25 + offsets[0], gamma**0.25 + offsets[1]])
    U = np.column_stack([u_flip, u_const])
    V = np.column_stack([v_flip, v_const])
    return gen_signal(SignalSpec("custom", p, n, t=tuple(t), U=U, V=V))


def _weighted_inner_products_replicate(params: dict, seed: int) -> list[dict]:
    gamma = float(params.get("gamma", 2.0))
    frac = float(params.get("omega_fraction", 0.75))
    out = []
    k = 0
    for n in params["n_grid"]:
        n = int(n)
        p = int(round(gamma * n))
        sig = _two_block_signal(p, n, gamma)
        keep = int(round(frac * p))
        mu = keep / p
        Uk = sig.U[:keep]
        pop_gram = Uk.T @ Uk
        c, ct, s, st = cosines(sig.t, gamma)
        gram_pred = np.outer(c, c) * pop_gram
        np.fill_diagonal(gram_pred, c**2 * np.diag(pop_gram) + s**2 * mu)
        cross_pred = c[:, None] * pop_gram
        for dist in params["dists"]:
            local = dict(params, dist=dist)
            noise = gen_noise(_noise_spec(local, derive_seed(seed, k), None), p, n)
            k += 1
            Y = sig.X + noise
            U_emp, _, _, _ = top_svd(Y, 2)
            W = U_emp[:keep]
            gram_emp = W.T @ W
            cross_emp = W.T @ Uk
            out.append({
                "n": n,
                "dist": str(dist),
                "rel_err_cross": float(np.linalg.norm(np.abs(cross_emp) - np.abs(cross_pred))
                                       / np.linalg.norm(cross_pred)),
                "rel_err_gram": float(np.linalg.norm(np.abs(gram_emp) - np.abs(gram_pred))
                                      / np.linalg.norm(gram_pred)),
            })
    return out


# ---------------------------------------------------------------------------
# rank-estimation
# ---------------------------------------------------------------------------

def _rank_estimation_replicate(params: dict, seed: int) -> list[dict]:
    p = int(params["p"])
    n = int(params["n"])
    gamma = p / n
    sig = _two_block_signal(p, n, gamma, offsets=(2.0, 1.0))
    oracle_rank = sig.t.size
    omega = WeightOperator.from_diagonal(np.linspace(1.0 / p, 1.0, p))
    pi = WeightOperator.from_diagonal(np.linspace(1.0 / p, 1.0 / gamma, n))
    out = []
    for k, dist in enumerate(params["dists"]):
        local = dict(params, dist=dist)
        noise = gen_noise(_noise_spec(local, derive_seed(seed, k), None), p, n)
        Y = sig.X + noise
        _, _, _, spectrum = svd_head_above(Y, bulk_edge(gamma))
        detected = naive_rank(spectrum, gamma)
        res_oracle = spectral_denoise(Y, omega, pi, rank=oracle_rank)
        res_naive = spectral_denoise(Y, omega, pi, rank=detected)
        wrel = lambda est: relative_error(est, sig.X,
                                          omega=np.linspace(1.0 / p, 1.0, p),
                                          pi=np.linspace(1.0 / p, 1.0 / gamma, n))
        out.append({
            "dist": str(dist),
            "naive_rank": detected,
            "rel_err_oracle": wrel(res_oracle.estimate),
            "rel_err_naive": wrel(res_naive.estimate),
        })
    return out


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

def _scale_localized(params: dict, scale: float) -> dict:
    cells = int(params.get("cells", 8))
    blocks = max(int(params.get("row_blocks", 4)), int(params.get("col_blocks", 4)))
    quantum = cells * blocks
    n = max(quantum, int(round(params["n"] * scale / quantum)) * quantum)
    return dict(params, n=n)


def _scale_pn(params: dict, scale: float) -> dict:
    n = max(8, int(round(params["n"] * scale)))
    p = max(4, int(round(params["p"] * scale)))
    return dict(params, p=p, n=n)


def _scale_n_grid(params: dict, scale: float) -> dict:
    grid = [max(8, int(round(v * scale))) for v in params["n_grid"]]
    return dict(params, n_grid=grid)


class Scenario:
    def __init__(self, name, replicate, defaults, group_keys, apply_scale=None):
        self.name = name
        self.replicate = replicate
        self.defaults = defaults
        self.group_keys = group_keys
        self.apply_scale = apply_scale or (lambda params, scale: params)


SCENARIOS = {
    # One partition block per checkerboard cell: inside a block both signal
    # components restrict to the same constant direction, and the per-tile
    # least squares pools them.  Blocks spanning two cells cancel the cross
    # inner products and the localized gain collapses to shrinkage.
    "localized-checkerboard": Scenario(
        "localized-checkerboard", _localized_checkerboard_replicate,
        {"n": 800, "gamma": 1.0, "f": 0.7, "cells": 4, "row_blocks": 4,
         "col_blocks": 4, "row_offset": 0, "col_offset": 0,
         "noise_sd_scale": 0.1, "dist": "gaussian"},
        ["f"], _scale_localized),
    "submatrix": Scenario(
        "submatrix", _submatrix_replicate,
        {"p": 500, "n": 1000, "t_offset": 0.5,
         "f_grid": [0.05, 0.25, 0.95], "dist": "gaussian"},
        ["f"], _scale_pn),
    "heteroscedastic": Scenario(
        "heteroscedastic", _heteroscedastic_replicate,
        {"p": 500, "n": 1000, "rank": 5, "kappa_grid": [1.0, 10.0],
         "dist": "gaussian"},
        ["kappa"], _scale_pn),
    "missing-data": Scenario(
        "missing-data", _missing_data_replicate,
        {"p": 200, "n": 400, "rank": 5, "sigma_grid": [0.125, 0.25, 0.5],
         "q_row_range": (0.3, 0.7), "q_col_range": (0.3, 0.7),
         "dist": "gaussian"},
        ["sigma"], _scale_pn),
    "weighted-inner-products": Scenario(
        "weighted-inner-products", _weighted_inner_products_replicate,
        {"gamma": 2.0, "n_grid": [500], "dists": ["gaussian"],
         "omega_fraction": 0.75},
        ["n", "dist"], _scale_n_grid),
    "rank-estimation": Scenario(
        "rank-estimation", _rank_estimation_replicate,
        {"p": 300, "n": 600, "dists": ["gaussian"]},
        ["dist"], _scale_pn),
}
