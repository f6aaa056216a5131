"""Linear-kernel Gram matrices and the empirical HSIC estimator."""

from __future__ import annotations

import numpy as np


def linear_gram(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    k = w @ w.T
    return 0.5 * (k + k.T)


def center(k) -> np.ndarray:
    """Return HKH with H = I - 11^T/n, applied as row/column mean removal."""
    k = np.asarray(k, dtype=np.float64)
    row = k.mean(axis=1, keepdims=True)
    col = k.mean(axis=0, keepdims=True)
    return k - row - col + k.mean()


def _check_pair(k1, k2):
    k1 = np.asarray(k1, dtype=np.float64)
    k2 = np.asarray(k2, dtype=np.float64)
    if k1.ndim != 2 or k1.shape[0] != k1.shape[1] or k1.shape != k2.shape:
        raise ValueError(f"shape mismatch: {k1.shape} vs {k2.shape}")
    return k1, k2


def empirical_hsic(k1, k2) -> float:
    """(n-1)^-2 tr(K1 H K2 H)."""
    k1, k2 = _check_pair(k1, k2)
    n = k1.shape[0]
    if n < 2:
        raise ValueError("HSIC undefined for n<2")
    return float(np.sum(center(k1) * center(k2))) / (n - 1) ** 2


def _centered_cross(a, b) -> float:
    # tr(H AA^T H BB^T) = ||(HA)^T (HB)||_F^2 without forming n x n matrices
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    return float(np.sum((a.T @ b) ** 2))


def dependence_objective(w1, w2, y) -> float:
    """Unnormalised three-way HSIC sum tr(HK1HK2) + tr(HK1HKY) + tr(HK2HKY)."""
    w1 = np.asarray(w1, dtype=np.float64)
    w2 = np.asarray(w2, dtype=np.float64)
    y = np.asarray(getattr(y, "values", y), dtype=np.float64)
    if not (w1.shape[0] == w2.shape[0] == y.shape[0]):
        raise ValueError(f"shape mismatch: n = {w1.shape[0]}, {w2.shape[0]}, {y.shape[0]}")
    return _centered_cross(w1, w2) + _centered_cross(w1, y) + _centered_cross(w2, y)
