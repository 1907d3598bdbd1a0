"""Seedable sampling primitives and dense SPD linear algebra.

Every sampler here is a deterministic function of an :class:`Rng` and its
parameters: the same (seed, stream) always reproduces the same draw sequence,
because the underlying bit generator (Philox, counter based) is fixed by
the numpy Generator API.

Parameterization note
---------------------
All Gamma-family samplers in this package use the (shape, rate)
parameterization: ``mean = shape / rate``. Inverse-Gamma(shape, rate) is the
reciprocal of Gamma(shape, rate) and has mean ``rate / (shape - 1)`` for
shape > 1. Empirical-Bayes penalty updates elsewhere in the package rely on
this convention; do not swap rate for scale.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla


class NotPositiveDefinite(Exception):
    """A matrix required to be symmetric positive definite is not."""


class InvalidParameter(Exception):
    """A distribution parameter is outside its valid domain."""


class DegreesOfFreedomTooSmall(Exception):
    """Wishart degrees of freedom must exceed dimension - 1."""


class Rng:
    """Deterministic random stream keyed by (seed, stream).

    A stream id may be an int or a tuple of ints; :meth:`child` derives
    further independent streams by extending the tuple, so replicate- or
    chain-level parallelism cannot change results. The generator algorithm
    is Philox (counter based), seeded through numpy's SeedSequence with
    ``entropy=seed`` and ``spawn_key=stream``.
    """

    def __init__(self, seed: int, stream: int | tuple[int, ...] = 0):
        if isinstance(stream, int):
            stream = (stream,)
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        self.generator = np.random.Generator(np.random.Philox(ss))

    def child(self, *key: int) -> "Rng":
        """Independent stream with id ``self.stream + key``."""
        return Rng(self.seed, self.stream + tuple(int(k) for k in key))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"


def _as_spd(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParameter(f"expected a square matrix, got shape {m.shape}")
    return m


def cholesky(m) -> np.ndarray:
    """Lower-triangular L with L @ L.T == m.

    Raises NotPositiveDefinite when a pivot is <= 0, which signals an
    improper conditional covariance upstream.
    """
    m = _as_spd(m)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def spd_solve(m, b) -> np.ndarray:
    """Solve m @ x = b for SPD m via Cholesky (no explicit inverse)."""
    low = cholesky(m)
    return sla.cho_solve((low, True), np.asarray(b, dtype=float))


def spd_inverse(m) -> np.ndarray:
    """Explicit inverse of an SPD matrix, for when the covariance itself
    is required (conditional covariances, weight matrices)."""
    m = _as_spd(m)
    inv = spd_solve(m, np.eye(m.shape[0]))
    return symmetrize(inv)


def symmetrize(m) -> np.ndarray:
    """(m + m.T)/2, killing round-off drift before factorizations."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def sample_mvnormal(rng: Rng, mean, cov, size: int | None = None) -> np.ndarray:
    """Multivariate normal draw(s): mean + L z with L = cholesky(cov).

    Returns shape (p,) for size=None, else (size, p).
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    low = cholesky(cov)
    if size is None:
        z = rng.generator.standard_normal(mean.shape[0])
        return mean + low @ z
    z = rng.generator.standard_normal((size, mean.shape[0]))
    return mean[None, :] + z @ low.T


def sample_mvnormal_rows(rng: Rng, means, cov) -> np.ndarray:
    """One draw per row of ``means`` (n x p), all sharing covariance ``cov``."""
    means = np.asarray(means, dtype=float)
    n, p = means.shape
    if n == 0:
        return means.copy()
    low = cholesky(cov)
    z = rng.generator.standard_normal((n, p))
    return means + z @ low.T


def _bartlett_factor(rng: Rng, d: float, p: int, size: int) -> np.ndarray:
    """Stack of lower-triangular Bartlett factors A with A A' ~ W(d, I_p)."""
    a = np.zeros((size, p, p))
    rows, cols = np.tril_indices(p, k=-1)
    if rows.size:
        a[:, rows, cols] = rng.generator.standard_normal((size, rows.size))
    for i in range(p):
        # chi^2 with d - i dof, as Gamma((d - i)/2, scale 2)
        a[:, i, i] = np.sqrt(2.0 * rng.generator.standard_gamma((d - i) / 2.0, size=size))
    return a


def sample_wishart(rng: Rng, d: float, scale, size: int | None = None) -> np.ndarray:
    """Wishart draw(s) W(d, scale) via the Bartlett decomposition.

    The mean of W(d, S) is d*S. Requires d > p - 1 where p is the
    dimension of the scale matrix; d may be non-integer.
    """
    scale = _as_spd(scale)
    p = scale.shape[0]
    if not d > p - 1:
        raise DegreesOfFreedomTooSmall(f"need d > {p - 1}, got d={d}")
    low = cholesky(scale)
    n = 1 if size is None else size
    a = _bartlett_factor(rng, float(d), p, n)
    la = low[None, :, :] @ a
    w = la @ np.transpose(la, (0, 2, 1))
    return symmetrize(w[0]) if size is None else 0.5 * (w + np.transpose(w, (0, 2, 1)))


def sample_gamma(rng: Rng, shape: float, rate: float, size: int | None = None):
    """Gamma(shape, rate) draw(s); mean = shape/rate (rate, not scale)."""
    if not (shape > 0 and rate > 0):
        raise InvalidParameter(f"gamma needs shape>0 and rate>0, got ({shape}, {rate})")
    return rng.generator.standard_gamma(shape, size=size) / rate


def sample_inverse_gamma(rng: Rng, shape: float, rate: float, size: int | None = None):
    """Reciprocal of a Gamma(shape, rate) draw; mean = rate/(shape-1) for shape>1."""
    return 1.0 / sample_gamma(rng, shape, rate, size=size)
