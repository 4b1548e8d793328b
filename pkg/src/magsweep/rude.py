"""Unsupervised anomaly confidence for scalar time series (RUDE).

A series is cut into consecutive equal-length intervals (a trajectory
matrix), each interval is projected onto its top two principal
components, and a one-class SVM separates outlier intervals from the
nominal cloud.  Repeating this across several window lengths and voting
yields a per-sample confidence in [0, 1].

The one-class SVM is solved directly: SMO on the dual quadratic program
with second-order working-set selection, RBF kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_WINDOW_LENGTHS = (64, 128, 256, 512, 1024)
DEFAULT_NU = 0.1


class OcsvmConvergenceError(RuntimeError):
    """SMO failed to reach the KKT tolerance within the iteration budget."""

    def __init__(self, iterations, gap):
        super().__init__(
            f"one-class SVM did not converge after {iterations} iterations "
            f"(KKT gap {gap:.3e})")
        self.iterations = iterations
        self.gap = gap


@dataclass
class TrajectoryMatrix:
    """Consecutive non-overlapping intervals of a series, one per column."""

    data: np.ndarray        # (window_length, n_intervals)
    window_length: int
    n_intervals: int


@dataclass
class ReducedPoints:
    """Top-2 principal-component coordinates of each interval."""

    points: np.ndarray      # (n_intervals, 2)


@dataclass
class ConfidenceSeries:
    """Per-sample anomaly confidence plus the window lengths that voted."""

    scores: np.ndarray
    window_lengths: tuple


def build_trajectory(series, window_length):
    """Reshape a series into the (L x R) trajectory matrix.

    Column j holds samples ``j*L .. (j+1)*L - 1``; a trailing remainder
    shorter than L is dropped.
    """
    series = np.asarray(series, dtype=float)
    L = int(window_length)
    if L < 2:
        raise ValueError("window_length must be >= 2")
    if len(series) < 2 * L:
        raise ValueError("series must contain at least two windows")
    R = len(series) // L
    data = series[:L * R].reshape(R, L).T.copy()
    return TrajectoryMatrix(data, L, R)


def pca2(matrix):
    """Project intervals onto their top two principal components.

    Centers the intervals, takes the SVD, and fixes each component's sign
    so its largest-magnitude entry is positive.  A constant (rank-0)
    matrix maps to all-zero points.
    """
    data = matrix.data
    if matrix.n_intervals < 3:
        raise ValueError("need at least 3 intervals for PCA")
    centered = data - data.mean(axis=1, keepdims=True)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    points = np.zeros((matrix.n_intervals, 2))
    for comp in range(2):
        if comp >= len(s) or s[comp] <= 0.0:
            continue
        vec = u[:, comp]
        sign = 1.0 if vec[np.argmax(np.abs(vec))] >= 0.0 else -1.0
        points[:, comp] = sign * s[comp] * vt[comp]
    return ReducedPoints(points)


def median_heuristic_gamma(points):
    """RBF bandwidth 1 / (2 * median pairwise squared distance)."""
    diff = points[:, None, :] - points[None, :, :]
    sq = np.sum(diff * diff, axis=-1)
    iu = np.triu_indices(len(points), k=1)
    med = np.median(sq[iu]) if len(iu[0]) else 0.0
    return 1.0 / (2.0 * med) if med > 0.0 else 1.0


def ocsvm_fit_predict(points, nu=DEFAULT_NU, gamma=None, tol=1e-6, max_iter=200000):
    """One-class SVM outlier labels for a 2-D point cloud.

    Solves the dual program  min 0.5 a'Qa  s.t.  0 <= a_i <= 1/(nu n),
    sum a = 1  by SMO with second-order working-set selection, where Q is
    the RBF kernel matrix.  A point is anomalous when its decision value
    sum_j a_j k(x_j, x) - rho is negative.

    Returns a boolean array, True for anomalous points.
    """
    if isinstance(points, ReducedPoints):
        points = points.points
    x = np.asarray(points, dtype=float)
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 points")
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    if gamma is None:
        gamma = median_heuristic_gamma(x)

    diff = x[:, None, :] - x[None, :, :]
    q = np.exp(-gamma * np.sum(diff * diff, axis=-1))

    c = 1.0 / (nu * n)
    alpha = np.zeros(n)
    n_full = int(np.floor(nu * n))
    alpha[:n_full] = c
    if n_full < n:
        alpha[n_full] = 1.0 - n_full * c
    grad = q @ alpha

    eps_bound = 1e-12
    tau = 1e-12
    for iteration in range(max_iter):
        up = alpha < c - eps_bound
        low = alpha > eps_bound
        neg_g = -grad
        i = int(np.argmax(np.where(up, neg_g, -np.inf)))
        g_max = neg_g[i]
        g_min = np.min(np.where(low, neg_g, np.inf))
        if g_max - g_min < tol:
            break
        # second-order selection of the partner index
        b_vec = g_max + grad
        a_vec = q[i, i] + np.diag(q) - 2.0 * q[i]
        a_vec = np.maximum(a_vec, tau)
        gain = np.where(low & (b_vec > 0.0), -(b_vec * b_vec) / a_vec, np.inf)
        j = int(np.argmin(gain))
        if not np.isfinite(gain[j]):
            break
        const = alpha[i] + alpha[j]
        delta = b_vec[j] / a_vec[j]
        new_i = np.clip(alpha[i] + delta, max(0.0, const - c), min(c, const))
        new_j = const - new_i
        d_i, d_j = new_i - alpha[i], new_j - alpha[j]
        alpha[i], alpha[j] = new_i, new_j
        grad += q[i] * d_i + q[j] * d_j
    else:
        raise OcsvmConvergenceError(max_iter, float(g_max - g_min))

    free = (alpha > 1e-8 * c) & (alpha < c * (1.0 - 1e-8))
    if np.any(free):
        rho = float(np.mean(grad[free]))
    else:
        upper = grad[alpha >= c * (1.0 - 1e-8)]
        lower = grad[alpha <= 1e-8 * c]
        hi = float(np.max(upper)) if len(upper) else -np.inf
        lo = float(np.min(lower)) if len(lower) else np.inf
        rho = 0.5 * (hi + lo) if np.isfinite(hi) and np.isfinite(lo) \
            else float(np.mean(grad))
    return grad - rho < 0.0


def confidence(series, window_lengths=DEFAULT_WINDOW_LENGTHS, nu=DEFAULT_NU,
               gamma=None):
    """Multi-window anomaly confidence per sample.

    Each window length votes: samples inside an interval labeled
    anomalous inherit a 1, others a 0; the score is the vote sum divided
    by the number of window lengths whose trajectory matrix covers the
    sample.  Uncovered trailing samples score 0.
    """
    series = np.asarray(series, dtype=float)
    n = len(series)
    votes = np.zeros(n)
    covered = np.zeros(n)
    for L in window_lengths:
        traj = build_trajectory(series, L)
        labels = ocsvm_fit_predict(pca2(traj), nu=nu, gamma=gamma)
        span = traj.window_length * traj.n_intervals
        covered[:span] += 1.0
        flagged = np.repeat(labels, traj.window_length)
        votes[:span] += flagged
    scores = np.divide(votes, covered, out=np.zeros(n), where=covered > 0)
    return ConfidenceSeries(scores, tuple(int(L) for L in window_lengths))
