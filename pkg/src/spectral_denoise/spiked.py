"""Closed-form asymptotics of the spiked model.

The observation model is ``Y = X + G`` with ``X`` of fixed low rank and
``G`` an iid noise matrix whose entries have variance ``1/n``, in the
proportional regime ``p/n -> gamma``.  Each population singular value
``t`` above the detection point ``gamma**0.25`` produces an observed
singular value above the bulk edge ``1 + sqrt(gamma)``, with known
cosines between the corresponding population and empirical singular
vectors.  This module holds the forward and inverse maps between the
two, plus rank detection and the per-component parameter recovery every
denoiser in the package starts from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BelowDetectionThresholdError

__all__ = [
    "bulk_edge",
    "detection_point",
    "forward_singular_value",
    "invert_singular_value",
    "cosines",
    "naive_rank",
    "SpikeParams",
    "estimate_spike_params",
]


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma <= 0:
        raise ValueError(f"aspect ratio gamma must be positive and finite, got {gamma}")
    return gamma


def bulk_edge(gamma: float) -> float:
    """Asymptotic largest singular value of pure noise, ``1 + sqrt(gamma)``."""
    return 1.0 + np.sqrt(_check_gamma(gamma))


def detection_point(gamma: float) -> float:
    """Smallest population singular value that rises above the bulk, ``gamma**(1/4)``."""
    return _check_gamma(gamma) ** 0.25


def forward_singular_value(t, gamma: float):
    """Observed singular value produced by a population singular value ``t``.

    Returns ``sqrt((t**2 + 1) * (1 + gamma / t**2))`` above the detection
    point and the bulk edge ``1 + sqrt(gamma)`` below it.  Accepts scalars
    or arrays; the two branches agree at ``t = gamma**0.25``.
    """
    gamma = _check_gamma(gamma)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("population singular value t must be positive and finite")
    t2 = t_arr**2
    above = np.sqrt((t2 + 1.0) * (1.0 + gamma / t2))
    lam = np.where(t_arr > gamma**0.25, above, 1.0 + np.sqrt(gamma))
    return float(lam) if np.isscalar(t) or t_arr.ndim == 0 else lam


def invert_singular_value(lam, gamma: float):
    """Population singular value behind an observed singular value ``lam``.

    Inverts :func:`forward_singular_value` on the detectable branch.
    Requires ``lam > 1 + sqrt(gamma)``; at or below the bulk edge the map
    is not invertible and :class:`BelowDetectionThresholdError` is raised.
    """
    gamma = _check_gamma(gamma)
    lam_arr = np.asarray(lam, dtype=float)
    edge = 1.0 + np.sqrt(gamma)
    if np.any(lam_arr <= edge):
        bad = int(np.argmax(lam_arr <= edge)) if lam_arr.ndim else None
        raise BelowDetectionThresholdError(
            f"observed singular value must exceed the bulk edge {edge:.6g}",
            index=bad,
        )
    m = lam_arr**2 - 1.0 - gamma
    t = np.sqrt((m + np.sqrt(m**2 - 4.0 * gamma)) / 2.0)
    return float(t) if np.isscalar(lam) or lam_arr.ndim == 0 else t


def cosines(t, gamma: float):
    """Limiting alignments between population and empirical singular vectors.

    For a population singular value ``t`` above the detection point the
    squared cosines are

        c**2 = (t**4 - gamma) / (t**4 + gamma * t**2)   (left vectors)
        c_tilde**2 = (t**4 - gamma) / (t**4 + t**2)     (right vectors)

    and both are 0 below it.  Returns ``(c, c_tilde, s, s_tilde)`` with
    ``s = sqrt(1 - c**2)``; all values lie in [0, 1] and the non-negative
    sign convention is used throughout.  The numerators are evaluated as
    ``t**4 - gamma`` to avoid cancellation near the detection point.
    """
    gamma = _check_gamma(gamma)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("population singular value t must be positive and finite")
    t2 = t_arr**2
    t4 = t2**2
    num = np.maximum(t4 - gamma, 0.0)
    c2 = np.where(t4 > gamma, num / (t4 + gamma * t2), 0.0)
    ct2 = np.where(t4 > gamma, num / (t4 + t2), 0.0)
    c2 = np.clip(c2, 0.0, 1.0)
    ct2 = np.clip(ct2, 0.0, 1.0)
    c = np.sqrt(c2)
    ct = np.sqrt(ct2)
    s = np.sqrt(1.0 - c2)
    st = np.sqrt(1.0 - ct2)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(c), float(ct), float(s), float(st)
    return c, ct, s, st


def naive_rank(singular_values, gamma: float, margin: float = 0.0) -> int:
    """Count singular values exceeding ``1 + sqrt(gamma) + margin``.

    Input must be sorted in descending order.  The margin shifts the
    threshold upward to guard against bulk-edge fluctuations at finite n.
    """
    gamma = _check_gamma(gamma)
    margin = float(margin)
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    sv = np.asarray(singular_values, dtype=float)
    if sv.ndim != 1:
        raise ValueError("singular_values must be a 1-D vector")
    if sv.size and np.any(np.diff(sv) > 0):
        raise ValueError("singular_values must be sorted in descending order")
    return int(np.sum(sv > 1.0 + np.sqrt(gamma) + margin))


@dataclass(frozen=True)
class SpikeParams:
    """Recovered per-component spiked-model parameters.

    All vectors have length ``rank`` and are ordered by descending
    observed singular value.  ``observed`` holds the empirical singular
    values, ``t`` the recovered population ones, and ``(c, c_tilde)`` /
    ``(s, s_tilde)`` the left/right cosine and sine pairs, each
    satisfying ``c**2 + s**2 == 1``.
    """

    rank: int
    observed: np.ndarray
    t: np.ndarray
    c: np.ndarray
    c_tilde: np.ndarray
    s: np.ndarray
    s_tilde: np.ndarray
    gamma: float

    def __post_init__(self):
        for name in ("observed", "t", "c", "c_tilde", "s", "s_tilde"):
            v = getattr(self, name)
            if v.shape != (self.rank,):
                raise ValueError(f"SpikeParams.{name} must have length rank={self.rank}")


def estimate_spike_params(singular_values, gamma: float, rank: int | None = None,
                          margin: float = 0.0) -> SpikeParams:
    """Recover population parameters from the top observed singular values.

    When ``rank`` is omitted it is detected with :func:`naive_rank`.
    When given, every one of the top ``rank`` singular values must exceed
    the bulk edge, otherwise :class:`BelowDetectionThresholdError` names
    the offending index.

    Exactly tied observed singular values are processed as distinct
    components; the asymptotic theory behind the recovery assumes strictly
    separated population values and does not cover exact ties.
    """
    gamma = _check_gamma(gamma)
    sv = np.asarray(singular_values, dtype=float)
    if sv.ndim != 1:
        raise ValueError("singular_values must be a 1-D vector")
    if sv.size and np.any(np.diff(sv) > 0):
        raise ValueError("singular_values must be sorted in descending order")

    if rank is None:
        rank = naive_rank(sv, gamma, margin=margin)
    else:
        rank = int(rank)
        if rank < 0:
            raise ValueError("rank must be nonnegative")
        if rank > sv.size:
            raise ValueError(f"rank {rank} exceeds the {sv.size} singular values supplied")
        edge = 1.0 + np.sqrt(gamma)
        below = np.nonzero(sv[:rank] <= edge)[0]
        if below.size:
            k = int(below[0])
            raise BelowDetectionThresholdError(
                f"singular value {sv[k]:.6g} at index {k} does not exceed "
                f"the bulk edge {edge:.6g}",
                index=k,
            )

    head = sv[:rank]
    if rank == 0:
        z = np.zeros(0)
        return SpikeParams(0, z, z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), gamma)
    t = np.atleast_1d(invert_singular_value(head, gamma))
    c, ct, s, st = cosines(t, gamma)
    return SpikeParams(rank, head.copy(), t, np.atleast_1d(c), np.atleast_1d(ct),
                       np.atleast_1d(s), np.atleast_1d(st), gamma)
