"""Label cosine-similarity graph and its Laplacian."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SemanticGraph:
    similarity: np.ndarray
    laplacian: np.ndarray

    @property
    def n(self) -> int:
        return self.similarity.shape[0]


def cosine_similarity(y) -> np.ndarray:
    y = np.asarray(getattr(y, "values", y), dtype=np.float64)
    norms = np.linalg.norm(y, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"zero label row at index {zero[0]}")
    u = y / norms[:, None]
    s = np.clip(u @ u.T, -1.0, 1.0)
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 1.0)
    return s


def build_graph(y) -> SemanticGraph:
    s = cosine_similarity(y)
    lap = np.diag(s.sum(axis=1)) - s
    return SemanticGraph(s, lap)


def laplacian_quadratic(z, g: SemanticGraph) -> float:
    """tr(z^T L z), i.e. half the similarity-weighted pairwise squared distances."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] != g.n:
        raise ValueError(f"shape mismatch: z has {z.shape[0]} rows, graph has {g.n} nodes")
    return float(np.sum(z * (g.laplacian @ z)))
