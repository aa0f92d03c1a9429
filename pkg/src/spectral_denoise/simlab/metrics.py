"""Loss metrics used across experiments."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatchError, UndefinedMetricError
from ..geometry import as_weight_operator

__all__ = ["relative_error", "weighted_loss"]


def weighted_loss(A, B, omega=None, pi=None) -> float:
    """Squared weighted Frobenius distance ``||W_r (A - B) W_c^T||_F**2``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionMismatchError(f"shape mismatch: {A.shape} vs {B.shape}")
    p, n = A.shape
    om = as_weight_operator(omega, p)
    pm = as_weight_operator(pi, n)
    diff = om.apply(A - B)
    diff = pm.apply(diff.T).T
    return float(np.sum(diff**2))


def relative_error(X_hat, X, omega=None, pi=None) -> float:
    """Weighted relative error ``||W_r (X_hat - X) W_c^T|| / ||W_r X W_c^T||``.

    Uniform weights when ``omega``/``pi`` are omitted.  Raises
    :class:`UndefinedMetricError` when the weighted norm of ``X`` is zero.
    """
    X_hat = np.asarray(X_hat, dtype=float)
    X = np.asarray(X, dtype=float)
    if X_hat.shape != X.shape:
        raise DimensionMismatchError(f"shape mismatch: {X_hat.shape} vs {X.shape}")
    p, n = X.shape
    om = as_weight_operator(omega, p)
    pm = as_weight_operator(pi, n)
    ref = pm.apply(om.apply(X).T).T
    denom = np.linalg.norm(ref)
    if denom == 0:
        raise UndefinedMetricError("reference matrix has zero weighted norm")
    diff = pm.apply(om.apply(X_hat - X).T).T
    return float(np.linalg.norm(diff) / denom)
