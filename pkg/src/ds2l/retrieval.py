"""Normalized-correlation ranking and MAP / CMC evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RankedList:
    query_index: int
    ordered_indices: np.ndarray
    scores: np.ndarray


def normalized_correlation(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero-norm projection")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def _unit_rows(m, what):
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"zero-norm projection in {what} row {zero[0]}")
    return m / norms[:, None]


def score_matrix(queries, gallery) -> np.ndarray:
    return _unit_rows(queries, "query") @ _unit_rows(gallery, "gallery").T


def rank_all(queries, gallery) -> list[RankedList]:
    """Order the gallery by descending NC per query; ties go to the lower index."""
    scores = score_matrix(queries, gallery)
    order = np.argsort(-scores, axis=1, kind="stable")
    return [RankedList(i, order[i], scores[i, order[i]]) for i in range(scores.shape[0])]


def relevance(labels_q, labels_g) -> np.ndarray:
    """True where query and gallery item share at least one category."""
    yq = np.asarray(getattr(labels_q, "values", labels_q))
    yg = np.asarray(getattr(labels_g, "values", labels_g))
    return (yq @ yg.T) > 0


def ap_from_hits(hits) -> float:
    hits = np.asarray(hits, dtype=bool)
    r = hits.sum()
    if r == 0:
        return 0.0
    precision = np.cumsum(hits) / np.arange(1, hits.size + 1)
    return float(precision[hits].sum() / r)


def average_precision(ranked: RankedList, relevant, m: int | None = None) -> float:
    """AP over the top-m list, normalised by the relevant items found there.

    ``relevant`` is a boolean vector over gallery indices for this query.
    """
    relevant = np.asarray(relevant, dtype=bool)
    m = len(ranked.ordered_indices) if m is None else m
    if m > len(ranked.ordered_indices):
        raise ValueError("m exceeds gallery size")
    return ap_from_hits(relevant[ranked.ordered_indices[:m]])


def mean_average_precision(rankings, labels_q, labels_g, m: int | None = None) -> float:
    if not rankings:
        raise ValueError("empty query set")
    rel = relevance(labels_q, labels_g)
    return float(np.mean([average_precision(r, rel[r.query_index], m) for r in rankings]))


def cmc_curve(rankings, labels_q, labels_g, max_l: int) -> np.ndarray:
    """Fraction of queries with a relevant item within the top-l, l = 1..max_l."""
    if not rankings:
        raise ValueError("empty query set")
    rel = relevance(labels_q, labels_g)
    if max_l < 1 or max_l > rel.shape[1]:
        raise ValueError(f"max_l must lie in [1, {rel.shape[1]}]")
    first_hit = np.cumsum(
        np.array([rel[r.query_index][r.ordered_indices[:max_l]] for r in rankings]), axis=1
    ) > 0
    return first_hit.mean(axis=0)


def evaluate_projections(z1, z2, labels, direction: str = "both", max_l: int = 10) -> dict:
    """MAP for I2T (modality-1 queries, modality-2 gallery) and/or T2I, plus CMC.

    The CMC curve is averaged over the evaluated directions.
    """
    if direction not in ("i2t", "t2i", "both"):
        raise ValueError(f"unknown direction {direction!r}")
    max_l = min(max_l, np.asarray(z1).shape[0])
    out, curves = {}, []
    pairs = {"i2t": (z1, z2), "t2i": (z2, z1)}
    for name in (("i2t", "t2i") if direction == "both" else (direction,)):
        q, gal = pairs[name]
        ranks = rank_all(q, gal)
        out[f"MAP_{name.upper()}"] = mean_average_precision(ranks, labels, labels)
        curves.append(cmc_curve(ranks, labels, labels, max_l))
    out["MAP_AVG"] = float(np.mean([v for k, v in out.items() if k.startswith("MAP_")]))
    out["CMC"] = np.mean(curves, axis=0)
    return out


def format_report(metrics: dict, fmt: str = "text") -> str:
    keys = [k for k in ("MAP_I2T", "MAP_T2I", "MAP_AVG") if k in metrics]
    cmc = metrics.get("CMC", [])
    if fmt == "text":
        lines = [f"{k} {metrics[k]:.6f}" for k in keys]
        lines += [f"CMC {l} {v:.6f}" for l, v in enumerate(cmc, start=1)]
    elif fmt == "csv":
        lines = ["metric,value"]
        lines += [f"{k},{metrics[k]:.6f}" for k in keys]
        lines += [f"CMC@{l},{v:.6f}" for l, v in enumerate(cmc, start=1)]
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return "\n".join(lines) + "\n"
