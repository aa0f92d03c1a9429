"""Weight operators and recovery of the population weighted geometry.

A weight operator is any matrix with a fixed number of columns that is
applied to row or column vectors of the data matrix when measuring loss.
Three representations are supported and normalized behind one interface:
a dense matrix, a diagonal (stored as a vector), and a coordinate
projection (stored as an index set).  The diagonal and index forms avoid
ever materializing a dense ``p x p`` matrix, which is what the localized
and application pipelines use almost exclusively.

The recovery formulas are stated for the limits of the weighted inner
products; this code necessarily works with their finite-size values and
cannot detect sequences for which those limits fail to exist.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, IllConditionedRecoveryError
from .spiked import SpikeParams

__all__ = [
    "WeightOperator",
    "as_weight_operator",
    "trace_weight",
    "weighted_gram",
    "WeightedGeometry",
    "recover_population_geometry",
]

#: Lower clip for recovered per-component weighted energies.  Finite-sample
#: diagonal estimates can dip below zero even though the model requires
#: positivity; clipped components are reported, not silently accepted.
ALPHA_FLOOR = 1e-8

#: Cosines below this are too small to divide by when solving for the
#: population cross inner products.
MIN_COSINE = 1e-6


class WeightOperator:
    """A linear weight map acting on vectors of length ``dim``."""

    def __init__(self, kind: str, data, dim: int):
        self.kind = kind
        self.data = data
        self.dim = int(dim)
        self._op_norm = None

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_matrix(cls, matrix) -> "WeightOperator":
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("dense weight must be a 2-D matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("weight matrix must have finite entries")
        return cls("dense", m, m.shape[1])

    @classmethod
    def from_diagonal(cls, diag) -> "WeightOperator":
        d = np.asarray(diag, dtype=float)
        if d.ndim != 1:
            raise ValueError("diagonal weight must be a 1-D vector")
        if not np.all(np.isfinite(d)):
            raise ValueError("diagonal weight must have finite entries")
        return cls("diag", d, d.size)

    @classmethod
    def from_indices(cls, indices, dim: int) -> "WeightOperator":
        idx = np.asarray(indices, dtype=np.intp)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("index weight must be a nonempty 1-D index set")
        if np.any(idx < 0) or np.any(idx >= dim):
            raise ValueError(f"indices must lie in [0, {dim})")
        idx = np.unique(idx)
        return cls("indices", idx, dim)

    @classmethod
    def identity(cls, dim: int) -> "WeightOperator":
        return cls("identity", None, dim)

    # -- behaviour ------------------------------------------------------
    def apply(self, vectors: np.ndarray) -> np.ndarray:
        """Apply the weight to the rows of ``vectors`` (shape ``(dim, k)``)."""
        v = np.asarray(vectors, dtype=float)
        rows = v.shape[0]
        if rows != self.dim:
            raise DimensionMismatchError(
                f"weight operator acts on length-{self.dim} vectors, got {rows}")
        if self.kind == "identity":
            return v
        if self.kind == "diag":
            return self.data[:, None] * v if v.ndim == 2 else self.data * v
        if self.kind == "indices":
            return v[self.data]
        return self.data @ v

    def trace_gram(self) -> float:
        """``tr(W^T W)``, the squared Frobenius norm of the weight."""
        if self.kind == "identity":
            return float(self.dim)
        if self.kind == "diag":
            return float(np.sum(self.data**2))
        if self.kind == "indices":
            return float(self.data.size)
        return float(np.sum(self.data**2))

    @property
    def op_norm_bound(self) -> float:
        if self._op_norm is None:
            if self.kind in ("identity", "indices"):
                self._op_norm = 1.0
            elif self.kind == "diag":
                self._op_norm = float(np.max(np.abs(self.data))) if self.data.size else 0.0
            else:
                self._op_norm = float(np.linalg.norm(self.data, 2))
        return self._op_norm

    def __repr__(self):
        return f"WeightOperator(kind={self.kind!r}, dim={self.dim})"


def as_weight_operator(weight, dim: int) -> WeightOperator:
    """Coerce ``weight`` to a :class:`WeightOperator` acting on length ``dim``.

    ``None`` means the identity; 1-D arrays are diagonals; 2-D arrays are
    dense operators.  Index sets must be constructed explicitly through
    :meth:`WeightOperator.from_indices` since a 1-D integer array is
    indistinguishable from a diagonal.
    """
    if weight is None:
        return WeightOperator.identity(dim)
    if isinstance(weight, WeightOperator):
        if weight.dim != dim:
            raise DimensionMismatchError(
                f"weight operator has {weight.dim} columns, expected {dim}")
        return weight
    arr = np.asarray(weight, dtype=float)
    if arr.ndim == 1:
        op = WeightOperator.from_diagonal(arr)
    elif arr.ndim == 2:
        op = WeightOperator.from_matrix(arr)
    else:
        raise ValueError("weight must be None, a 1-D diagonal, a 2-D matrix, "
                         "or a WeightOperator")
    if op.dim != dim:
        raise DimensionMismatchError(f"weight has {op.dim} columns, expected {dim}")
    return op


def trace_weight(omega: WeightOperator, dim: int) -> float:
    """Normalized weight trace ``tr(W^T W) / dim``."""
    if omega.dim != int(dim):
        raise DimensionMismatchError(
            f"weight operator has {omega.dim} columns, expected {dim}")
    return omega.trace_gram() / float(dim)


def weighted_gram(vectors, omega: WeightOperator) -> np.ndarray:
    """Gram matrix of weighted vectors: entry ``(j, k) = <W v_j, W v_k>``.

    Columns of ``vectors`` must be unit norm (checked to 1e-8).  The
    result is symmetrized to kill round-off asymmetry.
    """
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2:
        raise ValueError("vectors must be a 2-D matrix with unit columns")
    norms = np.linalg.norm(v, axis=0)
    if v.shape[1] and np.max(np.abs(norms - 1.0)) > 1e-8:
        raise ValueError("columns must be unit vectors (within 1e-8)")
    w = omega.apply(v)
    gram = w.T @ w
    return (gram + gram.T) / 2.0


@dataclass(frozen=True)
class WeightedGeometry:
    """Weighted inner-product structure of one side pair of weights.

    ``gram_left``/``gram_right`` are the empirical weighted Grams of the
    top left/right singular vectors of the data.  ``pop_gram_left`` /
    ``pop_gram_right`` hold the recovered population weighted Grams with
    the diagonal replaced by the per-component energies ``alpha`` /
    ``beta``; ``cross_left``/``cross_right`` are the recovered weighted
    population-empirical inner products.  ``mu`` and ``nu`` are the
    normalized weight traces.
    """

    rank: int
    t: np.ndarray
    gram_left: np.ndarray
    gram_right: np.ndarray
    pop_gram_left: np.ndarray
    pop_gram_right: np.ndarray
    cross_left: np.ndarray
    cross_right: np.ndarray
    mu: float
    nu: float
    alpha: np.ndarray
    beta: np.ndarray
    clipped: tuple = field(default=())

    def __post_init__(self):
        r = self.rank
        for name in ("gram_left", "gram_right", "pop_gram_left", "pop_gram_right",
                     "cross_left", "cross_right"):
            m = getattr(self, name)
            if m.shape != (r, r):
                raise ValueError(f"WeightedGeometry.{name} must be {r}x{r}")
        for name in ("t", "alpha", "beta"):
            v = getattr(self, name)
            if v.shape != (r,):
                raise ValueError(f"WeightedGeometry.{name} must have length {r}")


def _empty_geometry(mu: float, nu: float) -> WeightedGeometry:
    z = np.zeros((0, 0))
    v = np.zeros(0)
    return WeightedGeometry(0, v, z, z.copy(), z.copy(), z.copy(), z.copy(), z.copy(),
                            mu, nu, v.copy(), v.copy())


def recover_population_geometry(gram_left, gram_right, spikes: SpikeParams,
                                mu: float, nu: float,
                                alpha_floor: float = ALPHA_FLOOR) -> WeightedGeometry:
    """Invert the weighted-Gram limit formulas for the population geometry.

    Given the empirical weighted Grams ``D``/``D~`` of the top singular
    vectors, the recovered quantities are

        alpha_k = (D_kk - s_k**2 mu) / c_k**2
        e_jk    = D_jk / (c_j c_k)              (j != k)
        C_jk    = e_jk c_j   with   e_kk = alpha_k

    and symmetrically on the right with ``beta``, ``nu``.  Energies that
    fall below ``alpha_floor`` are clipped up to it and their component
    indices recorded in ``clipped``.
    """
    D = np.asarray(gram_left, dtype=float)
    Dt = np.asarray(gram_right, dtype=float)
    r = spikes.rank
    if D.shape != (r, r) or Dt.shape != (r, r):
        raise DimensionMismatchError(
            f"grams must be {r}x{r} to match spikes.rank={r}")
    mu = float(mu)
    nu = float(nu)
    if mu <= 0 or nu <= 0:
        raise ValueError("normalized weight traces mu, nu must be positive")
    if r == 0:
        return _empty_geometry(mu, nu)

    c, ct, s, st = spikes.c, spikes.c_tilde, spikes.s, spikes.s_tilde
    small = np.nonzero((c < MIN_COSINE) | (ct < MIN_COSINE))[0]
    if small.size:
        k = int(small[0])
        raise IllConditionedRecoveryError(
            f"component {k} has cosine below {MIN_COSINE:g}; too close to the "
            "detection threshold to recover weighted geometry")

    def _one_side(gram, cos, sin, mass):
        energy_raw = (np.diag(gram) - sin**2 * mass) / cos**2
        clip = np.nonzero(energy_raw < alpha_floor)[0]
        energy = np.maximum(energy_raw, alpha_floor)
        pop = gram / np.outer(cos, cos)
        np.fill_diagonal(pop, energy)
        cross = cos[:, None] * pop
        return energy, pop, cross, clip

    alpha, E, C, clip_l = _one_side(D, c, s, mu)
    beta, Et, Ct, clip_r = _one_side(Dt, ct, st, nu)
    clipped = tuple(sorted(set(clip_l.tolist()) | set(clip_r.tolist())))

    return WeightedGeometry(r, spikes.t.copy(), D, Dt, E, Et, C, Ct,
                            mu, nu, alpha, beta, clipped)
