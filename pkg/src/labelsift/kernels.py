"""Numerical kernels shared by the detectors.

Jensen-Shannon divergence (base-2, so values live in [0, 1]), power iteration
for the dominant eigenvector of a gram matrix, a two-component 1-D Gaussian
mixture fitted by EM, and the greedy minimum-pairwise-distance subset used for
coreset-style selection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LOG2 = np.log(2.0)


def _kl_bits(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """KL(p || q) in bits along the last axis; 0*log(0) terms contribute 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * (np.log(p) - np.log(q)) / _LOG2, 0.0)
    return terms.sum(axis=-1)


def jsd(p, q) -> np.ndarray | float:
    """Jensen-Shannon divergence between distributions, base-2 logs.

    Accepts vectors or row-stacked matrices (rowwise divergence). Zero
    probabilities are handled via the lim x->0 x log x = 0 convention; the
    mixture m = (p+q)/2 is positive wherever either argument is, so no
    division by zero can occur. Result is clipped to [0, 1] to absorb
    floating-point dust at the boundaries.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {q.shape}")
    m = 0.5 * (p + q)
    out = 0.5 * (_kl_bits(p, m) + _kl_bits(q, m))
    return float(np.clip(out, 0.0, 1.0)) if out.ndim == 0 else np.clip(out, 0.0, 1.0)


def jsd_to_onehot(label_prob) -> np.ndarray | float:
    """JSD(onehot(c), p) as a closed form of q = p[c] alone.

    With m = (onehot + p)/2 the divergence reduces to
    0.5 * (-log2((1+q)/2) + (1-q) + q*log2(2q/(1+q))); q = 1 gives 0 and
    q = 0 gives 1.
    """
    q = np.asarray(label_prob, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(q > 0.0, q * np.log(2.0 * q / (1.0 + q)) / _LOG2, 0.0)
    out = 0.5 * (-np.log((1.0 + q) / 2.0) / _LOG2 + (1.0 - q) + tail)
    return float(np.clip(out, 0.0, 1.0)) if out.ndim == 0 else np.clip(out, 0.0, 1.0)


def power_iteration(
    mat: np.ndarray, max_iter: int = 10000, tol: float = 1e-12
) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of a symmetric PSD matrix.

    Stops when the residual ||A v - lam v|| falls below tol * max(1, lam).
    The start vector comes from a fixed-seed generator so repeated calls are
    bit-identical.
    """
    mat = np.asarray(mat, dtype=np.float64)
    n = mat.shape[0]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = mat @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # v fell into the nullspace; any unit vector is a valid answer
            return 0.0, v
        v = w / norm
        lam = float(v @ (mat @ v))
        residual = np.linalg.norm(mat @ v - lam * v)
        if residual <= tol * max(1.0, abs(lam)):
            break
    return lam, v


@dataclass
class GaussianMixture1D:
    """Two-component 1-D Gaussian mixture fitted by EM.

    Means initialize at the 25th/75th percentiles, variances share the sample
    variance, weights start equal. EM runs until the log-likelihood moves by
    less than tol or max_iter is hit. A component weight below 1e-6 or a
    pre-floor variance below 1e-12 marks the fit degenerate; callers are
    expected to fall back to a median split in that case.
    """

    max_iter: int = 100
    tol: float = 1e-6
    var_floor: float = 1e-8

    means_: np.ndarray | None = None
    vars_: np.ndarray | None = None
    weights_: np.ndarray | None = None
    degenerate_: bool = False

    def fit(self, x: np.ndarray) -> "GaussianMixture1D":
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size < 2:
            raise ValueError("need at least 2 points to fit a mixture")
        means = np.percentile(x, [25.0, 75.0]).astype(np.float64)
        var0 = max(float(np.var(x)), self.var_floor)
        variances = np.array([var0, var0])
        weights = np.array([0.5, 0.5])
        prev_ll = -np.inf
        for _ in range(self.max_iter):
            resp, ll = self._e_step(x, means, variances, weights)
            weights = resp.mean(axis=0)
            if weights.min() < 1e-6:
                self.degenerate_ = True
                break
            totals = resp.sum(axis=0)
            means = (resp * x[:, None]).sum(axis=0) / totals
            variances = (resp * (x[:, None] - means) ** 2).sum(axis=0) / totals
            if variances.min() < 1e-12:
                self.degenerate_ = True
            variances = np.maximum(variances, self.var_floor)
            if abs(ll - prev_ll) < self.tol:
                break
            prev_ll = ll
        self.means_, self.vars_, self.weights_ = means, variances, weights
        return self

    @staticmethod
    def _e_step(x, means, variances, weights):
        log_pdf = (
            -0.5 * (x[:, None] - means) ** 2 / variances
            - 0.5 * np.log(2.0 * np.pi * variances)
            + np.log(weights)
        )
        shift = log_pdf.max(axis=1, keepdims=True)
        joint = np.exp(log_pdf - shift)
        norm = joint.sum(axis=1, keepdims=True)
        ll = float((np.log(norm).ravel() + shift.ravel()).sum())
        return joint / norm, ll

    def posterior_high(self, x: np.ndarray) -> np.ndarray:
        """Posterior probability of the higher-mean component at each point."""
        if self.means_ is None:
            raise RuntimeError("fit() must run first")
        resp, _ = self._e_step(
            np.asarray(x, dtype=np.float64).ravel(), self.means_, self.vars_, self.weights_
        )
        return resp[:, int(np.argmax(self.means_))]


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix between rows of x."""
    x = np.asarray(x, dtype=np.float64)
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)

def greedy_min_distance_subset(dist: np.ndarray, size: int) -> np.ndarray:
    """Greedy accretion toward the subset minimizing the pairwise distance sum.

    Seeds with the row of minimum total distance, then repeatedly adds the
    point with the smallest incremental distance to the chosen set. Ties break
    toward the smaller index. On planted tight-cluster instances this matches
    the brute-force optimum; in general it is a deterministic heuristic.
    """
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    if not 1 <= size <= n:
        raise ValueError(f"subset size {size} outside [1, {n}]")
    chosen = np.zeros(n, dtype=bool)
    first = int(np.argmin(dist.sum(axis=1)))
    chosen[first] = True
    incremental = dist[:, first].copy()
    for _ in range(size - 1):
        scores = np.where(chosen, np.inf, incremental)
        nxt = int(np.argmin(scores))
        chosen[nxt] = True
        incremental += dist[:, nxt]
    return np.flatnonzero(chosen)
