"""Spectral denoisers for weighted and unweighted Frobenius loss.

A spectral denoiser keeps the top left/right singular subspaces of the
observed matrix and replaces the singular values by an ``r x r``
coefficient matrix.  For a weighted loss the optimal coefficients solve
a small least-squares problem parameterized by the weighted geometry of
the singular vectors; with uniform weights this collapses to classical
singular value shrinkage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._svd import svd_head_above, top_svd
from .geometry import (WeightedGeometry, as_weight_operator,
                       recover_population_geometry, trace_weight, weighted_gram,
                       _empty_geometry)
from .spiked import (SpikeParams, bulk_edge, cosines, detection_point,
                     estimate_spike_params, forward_singular_value, naive_rank)

__all__ = [
    "DenoiseResult",
    "optimal_coefficients",
    "amse_estimate",
    "spectral_denoise",
    "diagonal_denoise",
    "svs_shrink",
    "ShrinkageReport",
    "check_shrinkage_properties",
]

#: Relative eigenvalue cutoff for the symmetric pseudoinverses of the
#: weighted Grams; a weight can annihilate an empirical direction, making
#: the Gram exactly singular.
PINV_RCOND = 1e-8


def _sym_pinv(m: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Pseudoinverse of a symmetric PSD matrix via eigendecomposition."""
    if m.size == 0:
        return m.copy()
    vals, vecs = np.linalg.eigh((m + m.T) / 2.0)
    cutoff = rcond * max(np.max(np.abs(vals)), np.finfo(float).tiny)
    inv = np.where(np.abs(vals) > cutoff, 1.0 / np.where(vals == 0, 1.0, vals), 0.0)
    return (vecs * inv) @ vecs.T


@dataclass(frozen=True)
class DenoiseResult:
    """Output of a spectral denoiser.

    ``estimate`` is the denoised matrix, equal to ``U @ coefficients @ V.T``
    for the top singular vectors of the input, so its rank never exceeds
    the detected rank.  ``amse_estimate`` is the plug-in estimate of the
    asymptotic weighted mean squared error (clamped at 0; ``amse_clamped``
    records whether clamping fired).
    """

    coefficients: np.ndarray
    estimate: np.ndarray
    amse_estimate: float
    spikes: SpikeParams
    geometry: WeightedGeometry
    clipped_components: tuple = field(default=())
    amse_clamped: bool = False

    @property
    def rank(self) -> int:
        return self.spikes.rank


def optimal_coefficients(geom: WeightedGeometry) -> np.ndarray:
    """Coefficient matrix minimizing the asymptotic weighted loss.

    Solves the least-squares problem over all ``r x r`` coefficient
    matrices; the minimizer is
    ``pinv(D) @ C @ diag(t) @ C~.T @ pinv(D~)`` in terms of the
    empirical weighted Grams ``D``/``D~`` and the recovered population
    cross matrices ``C``/``C~``.
    """
    if geom.rank == 0:
        return np.zeros((0, 0))
    left = _sym_pinv(geom.gram_left)
    right = _sym_pinv(geom.gram_right)
    return left @ geom.cross_left @ np.diag(geom.t) @ geom.cross_right.T @ right


def _amse_raw(geom: WeightedGeometry) -> float:
    if geom.rank == 0:
        return 0.0
    t = np.diag(geom.t)
    left = _sym_pinv(geom.gram_left)
    right = _sym_pinv(geom.gram_right)
    inner = (geom.pop_gram_left @ t @ geom.pop_gram_right
             - geom.cross_left.T @ left @ geom.cross_left @ t
             @ geom.cross_right.T @ right @ geom.cross_right)
    return float(np.sum(inner * t))


def amse_estimate(geom: WeightedGeometry) -> float:
    """Plug-in asymptotic weighted MSE of the optimal spectral denoiser.

    The limit quantity is a squared norm; negative values produced by
    round-off are clamped to 0.
    """
    return max(_amse_raw(geom), 0.0)


def _detect_and_estimate(Y: np.ndarray, rank: int | None, margin: float):
    """Shared head: top SVD, rank detection, spike parameter recovery."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y must be a 2-D matrix")
    if not np.all(np.isfinite(Y)):
        raise ValueError("Y must have finite entries")
    p, n = Y.shape
    gamma = p / n
    if rank is None:
        threshold = bulk_edge(gamma) + float(margin)
        U, s, V, spectrum = svd_head_above(Y, threshold)
        r = naive_rank(spectrum, gamma, margin=margin)
        spikes = estimate_spike_params(spectrum, gamma, rank=r)
    else:
        r = int(rank)
        if r < 0 or r > min(p, n):
            raise ValueError(f"rank must be between 0 and {min(p, n)}")
        U, s, V, spectrum = top_svd(Y, r)
        spikes = estimate_spike_params(s, gamma, rank=r)
    return Y, U[:, :spikes.rank], V[:, :spikes.rank], spikes


def _zero_result(Y: np.ndarray, spikes: SpikeParams, mu: float, nu: float) -> DenoiseResult:
    geom = _empty_geometry(mu, nu)
    return DenoiseResult(np.zeros((0, 0)), np.zeros_like(Y), 0.0, spikes, geom)


def spectral_denoise(Y, omega=None, pi=None, rank: int | None = None,
                     margin: float = 0.0) -> DenoiseResult:
    """Optimal spectral denoiser for the weighted Frobenius loss.

    Parameters
    ----------
    Y : (p, n) array
        Observed matrix, assumed to follow the spiked model with noise
        variance ``1/n`` per entry.
    omega, pi : weight specifications, optional
        Row- and column-side weights (anything accepted by
        :func:`as_weight_operator`); ``None`` means uniform weights.
    rank : int, optional
        Number of components to keep.  Detected from the singular values
        when omitted; forcing a rank whose singular values do not clear
        the bulk edge raises :class:`BelowDetectionThresholdError`.
    margin : float
        Additive safety margin on the detection threshold.

    With uniform weights the result coincides with singular value
    shrinkage.  A detected rank of 0 returns the zero matrix with a zero
    error estimate.
    """
    Y, U, V, spikes = _detect_and_estimate(Y, rank, margin)
    p, n = Y.shape
    omega = as_weight_operator(omega, p)
    pi = as_weight_operator(pi, n)
    mu = trace_weight(omega, p)
    nu = trace_weight(pi, n)
    if spikes.rank == 0:
        return _zero_result(Y, spikes, mu, nu)

    gram_left = weighted_gram(U, omega)
    gram_right = weighted_gram(V, pi)
    geom = recover_population_geometry(gram_left, gram_right, spikes, mu, nu)
    coeff = optimal_coefficients(geom)
    estimate = U @ coeff @ V.T
    raw = _amse_raw(geom)
    return DenoiseResult(coeff, estimate, max(raw, 0.0), spikes, geom,
                         geom.clipped, raw < 0)


def diagonal_denoise(Y, omega=None, pi=None, rank: int | None = None,
                     margin: float = 0.0) -> DenoiseResult:
    """Best spectral denoiser with a diagonal coefficient matrix.

    Each kept singular value becomes ``t c c~ * eta`` where the
    correction factor

        eta = alpha / (c**2 alpha + s**2 mu) * beta / (c~**2 beta + s~**2 nu)

    measures how the component's weighted energy compares with the bulk
    weight mass.  Under weighted orthogonality this matches the full
    optimal spectral denoiser.
    """
    Y, U, V, spikes = _detect_and_estimate(Y, rank, margin)
    p, n = Y.shape
    omega = as_weight_operator(omega, p)
    pi = as_weight_operator(pi, n)
    mu = trace_weight(omega, p)
    nu = trace_weight(pi, n)
    if spikes.rank == 0:
        return _zero_result(Y, spikes, mu, nu)

    gram_left = weighted_gram(U, omega)
    gram_right = weighted_gram(V, pi)
    geom = recover_population_geometry(gram_left, gram_right, spikes, mu, nu)
    c, ct, s, st = spikes.c, spikes.c_tilde, spikes.s, spikes.s_tilde
    eta_left = geom.alpha / (c**2 * geom.alpha + s**2 * mu)
    eta_right = geom.beta / (ct**2 * geom.beta + st**2 * nu)
    values = geom.t * c * ct * eta_left * eta_right
    coeff = np.diag(values)
    estimate = (U * values) @ V.T
    amse = float(np.sum(geom.t**2 * geom.alpha * geom.beta
                        * (1.0 - c**2 * ct**2 * eta_left * eta_right)))
    return DenoiseResult(coeff, estimate, max(amse, 0.0), spikes, geom,
                         geom.clipped, amse < 0)


def _identity_geometry(spikes: SpikeParams) -> WeightedGeometry:
    """Weighted geometry induced by uniform weights (exact limits)."""
    r = spikes.rank
    eye = np.eye(r)
    ones = np.ones(r)
    return WeightedGeometry(r, spikes.t.copy(), eye, eye.copy(), eye.copy(),
                            eye.copy(), np.diag(spikes.c), np.diag(spikes.c_tilde),
                            1.0, 1.0, ones, ones.copy())


def svs_shrink(Y, rank: int | None = None, margin: float = 0.0) -> DenoiseResult:
    """Optimal singular value shrinkage for unweighted Frobenius loss.

    Keeps the detected components with singular values ``t c c~`` and an
    error estimate ``sum(t**2 (1 - c**2 c~**2))``.  This is the uniform-
    weight special case of :func:`spectral_denoise`, computed in closed
    form.
    """
    Y, U, V, spikes = _detect_and_estimate(Y, rank, margin)
    if spikes.rank == 0:
        return _zero_result(Y, spikes, 1.0, 1.0)
    values = spikes.t * spikes.c * spikes.c_tilde
    estimate = (U * values) @ V.T
    amse = float(np.sum(spikes.t**2 * (1.0 - spikes.c**2 * spikes.c_tilde**2)))
    return DenoiseResult(np.diag(values), estimate, amse, spikes,
                         _identity_geometry(spikes))


@dataclass(frozen=True)
class ShrinkageReport:
    """Behaviour of the diagonal-denoiser singular value map over a grid."""

    t_grid: np.ndarray
    observed: np.ndarray
    denoised: np.ndarray
    shrinks: np.ndarray          # denoised(t) <= observed(t), pointwise
    nondecreasing: np.ndarray    # denoised nondecreasing between consecutive ts
    hypothesis_holds: bool       # alpha <= mu or beta <= nu
    shrinkage_violations: tuple
    monotonicity_violations: tuple

    @property
    def all_shrink(self) -> bool:
        return len(self.shrinkage_violations) == 0

    @property
    def all_nondecreasing(self) -> bool:
        return len(self.monotonicity_violations) == 0


def check_shrinkage_properties(gamma: float, alpha: float, beta: float,
                               mu: float, nu: float, t_grid) -> ShrinkageReport:
    """Check shrinkage and monotonicity of the diagonal denoiser map.

    Whenever ``alpha <= mu`` or ``beta <= nu`` the denoised singular
    value never exceeds the observed one and is nondecreasing in it; for
    large enough energies both properties can fail, which the report
    flags rather than raises.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a nonempty 1-D vector")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if np.any(t <= detection_point(gamma)):
        raise ValueError("t_grid must lie above the detection point gamma**0.25")

    lam = np.asarray(forward_singular_value(t, gamma))
    c, ct, s, st = cosines(t, gamma)
    eta = (alpha / (c**2 * alpha + s**2 * mu)) * (beta / (ct**2 * beta + st**2 * nu))
    denoised = t * c * ct * eta

    tol = 1e-12
    shrinks = denoised <= lam + tol
    steps = np.diff(denoised)
    nondec = steps >= -tol
    return ShrinkageReport(
        t_grid=t,
        observed=lam,
        denoised=denoised,
        shrinks=shrinks,
        nondecreasing=nondec,
        hypothesis_holds=(alpha <= mu or beta <= nu),
        shrinkage_violations=tuple(np.nonzero(~shrinks)[0].tolist()),
        monotonicity_violations=tuple(np.nonzero(~nondec)[0].tolist()),
    )
