"""DS2L objective, sub-problem gradients and the alternating solver."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .data import Dataset
from .hsic import dependence_objective
from .semantics import SemanticGraph, build_graph, laplacian_quadratic
from .stiefel import CgOptions, OptimizationError, cg_minimize, orthonormality_error, random_point

MODEL_MAGIC = "DS2L-MODEL 1"


@dataclass(frozen=True)
class Hyperparams:
    alpha1: float = 1.0
    alpha2: float = 1.0
    lambda1: float = 0.01
    lambda2: float = 0.01
    theta: float = 1.0
    beta: float = 1.0
    k: int = 10
    max_outer_iter: int = 100
    inner_cg_iter: int = 20
    inner_grad_tol: float = 1e-6
    outer_tol: float = 1e-6
    row_norm_floor: float = 1e-8

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ValueError(f"{f.name} must be finite")
        for name in ("alpha1", "alpha2", "lambda1", "lambda2", "theta", "beta",
                     "inner_grad_tol", "outer_tol"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.row_norm_floor <= 0:
            raise ValueError("row_norm_floor must be > 0")
        if self.k < 1 or self.max_outer_iter < 0 or self.inner_cg_iter < 0:
            raise ValueError("k must be >= 1 and iteration budgets >= 0")


@dataclass
class TrainedModel:
    p1: np.ndarray
    p2: np.ndarray
    column_means1: np.ndarray
    column_means2: np.ndarray
    hyper: Hyperparams
    objective_trace: list = field(default_factory=list)
    feasibility_trace: list = field(default_factory=list)

    @property
    def dims(self):
        return self.p1.shape[0], self.p2.shape[0], self.p1.shape[1]


def _arr(x):
    return np.asarray(getattr(x, "values", x), dtype=np.float64)


def row_weights(p, floor: float = 1e-8) -> np.ndarray:
    """Diagonal of the l2,1 reweighting matrix: 1 / (2 max(||p_i||, floor))."""
    if floor <= 0:
        raise ValueError("floor must be > 0")
    norms = np.linalg.norm(np.asarray(p, dtype=np.float64), axis=1)
    return 1.0 / (2.0 * np.maximum(norms, floor))


def l21_norm(p) -> float:
    return float(np.linalg.norm(np.asarray(p, dtype=np.float64), axis=1).sum())


def _weighted_trace(p, dw) -> float:
    # tr(P^T diag(dw) P)
    return float(np.sum(np.asarray(dw)[:, None] * p * p))


def _check(x1, x2, y, g, p1, p2):
    n = y.shape[0]
    if x1.shape[0] != n or x2.shape[0] != n or (g is not None and g.n != n):
        raise ValueError("shape mismatch: sample counts differ")
    if p1 is not None and p1.shape[0] != x1.shape[1]:
        raise ValueError(f"shape mismatch: P1 has {p1.shape[0]} rows, X1 has {x1.shape[1]} columns")
    if p2 is not None and p2.shape[0] != x2.shape[1]:
        raise ValueError(f"shape mismatch: P2 has {p2.shape[0]} rows, X2 has {x2.shape[1]} columns")


def objective(x1, x2, y, g: SemanticGraph, p1, p2, d1w, d2w, h: Hyperparams) -> float:
    """Trace form of the DS2L objective for fixed reweighting diagonals d1w, d2w."""
    x1, x2, y = _arr(x1), _arr(x2), _arr(y)
    p1, p2 = np.asarray(p1, dtype=np.float64), np.asarray(p2, dtype=np.float64)
    _check(x1, x2, y, g, p1, p2)
    w1, w2 = x1 @ p1, x2 @ p2
    value = 0.0
    if h.beta:
        value -= h.beta * dependence_objective(w1, w2, y)
    if h.alpha1:
        value += h.alpha1 * (laplacian_quadratic(w1, g) + h.lambda1 * _weighted_trace(p1, d1w))
    if h.alpha2:
        value += h.alpha2 * (laplacian_quadratic(w2, g) + h.lambda2 * _weighted_trace(p2, d2w))
    if h.theta:
        value += h.theta * float(np.sum((y @ y.T - w1 @ w2.T) ** 2))
    if not np.isfinite(value):
        raise OptimizationError("non-finite objective")
    return value


def l21_objective(x1, x2, y, g, p1, p2, h: Hyperparams) -> float:
    """Objective with the exact l2,1 penalties (reweighting at 1/||p_i||)."""
    d1w = 2.0 * row_weights(p1, h.row_norm_floor)
    d2w = 2.0 * row_weights(p2, h.row_norm_floor)
    return objective(x1, x2, y, g, p1, p2, d1w, d2w, h)


def _modalities(which, x1, x2):
    if which == 1:
        return x1, x2
    if which == 2:
        return x2, x1
    raise ValueError("which must be 1 or 2")


def q_matrix(which, x1, x2, y, g: SemanticGraph, p_other, dw, h: Hyperparams) -> np.ndarray:
    """Quadratic coefficient of the single-modality sub-problem.

    Q = beta (Xv^T H Xo Po Po^T Xo^T H Xv + Xv^T H YY^T H Xv)
        - alpha_v Xv^T L Xv - alpha_v lambda_v diag(dw)
    """
    x1, x2, y = _arr(x1), _arr(x2), _arr(y)
    xv, xo = _modalities(which, x1, x2)
    p_other = np.asarray(p_other, dtype=np.float64)
    if p_other.shape[0] != xo.shape[1] or len(dw) != xv.shape[1]:
        raise ValueError("shape mismatch between features, projection and weights")
    _check(x1, x2, y, g, None, None)
    alpha, lam = (h.alpha1, h.lambda1) if which == 1 else (h.alpha2, h.lambda2)
    hx = xv - xv.mean(axis=0)
    c1 = hx.T @ (xo @ p_other - (xo @ p_other).mean(axis=0))
    c2 = hx.T @ (y - y.mean(axis=0))
    q = h.beta * (c1 @ c1.T + c2 @ c2.T)
    q -= alpha * (xv.T @ g.laplacian @ xv)
    q -= alpha * lam * np.diag(dw)
    return 0.5 * (q + q.T)


def sub_objective(which, x1, x2, y, p_v, p_other, q, h: Hyperparams) -> float:
    """theta ||YY^T - W1 W2^T||^2 - tr(Pv^T Q Pv) for the modality being updated."""
    x1, x2, y = _arr(x1), _arr(x2), _arr(y)
    xv, xo = _modalities(which, x1, x2)
    r = y @ y.T - (xv @ p_v) @ (xo @ p_other).T
    return h.theta * float(np.sum(r * r)) - float(np.sum(p_v * (q @ p_v)))


def _sub_gradient(xv, xo, yy, p_v, p_other, q, theta):
    b = xo @ p_other
    r = yy - (xv @ p_v) @ b.T
    return -2.0 * theta * (xv.T @ (r @ b)) - 2.0 * (q @ p_v)


def euclid_grad_p1(x1, x2, y, g, p1, p2, d1w, h: Hyperparams) -> np.ndarray:
    x1, x2, y = _arr(x1), _arr(x2), _arr(y)
    q = q_matrix(1, x1, x2, y, g, p2, d1w, h)
    return _sub_gradient(x1, x2, y @ y.T, np.asarray(p1, dtype=np.float64), p2, q, h.theta)


def euclid_grad_p2(x1, x2, y, g, p1, p2, d2w, h: Hyperparams) -> np.ndarray:
    x1, x2, y = _arr(x1), _arr(x2), _arr(y)
    q = q_matrix(2, x1, x2, y, g, p1, d2w, h)
    return _sub_gradient(x2, x1, y @ y.T, np.asarray(p2, dtype=np.float64), p1, q, h.theta)


def _solve_block(which, x1, x2, y, yy, g, p_v, p_other, h):
    floor = h.row_norm_floor
    dw = row_weights(p_v, floor)
    q = q_matrix(which, x1, x2, y, g, p_other, dw, h)
    xv, xo = _modalities(which, x1, x2)
    b = xo @ p_other

    def cost(p):
        r = yy - (xv @ p) @ b.T
        return h.theta * float(np.sum(r * r)) - float(np.sum(p * (q @ p)))

    def grad(p):
        r = yy - (xv @ p) @ b.T
        return -2.0 * h.theta * (xv.T @ (r @ b)) - 2.0 * (q @ p)

    opts = CgOptions(max_iter=h.inner_cg_iter, grad_tol=h.inner_grad_tol)
    p_new, _ = cg_minimize(cost, grad, p_v, opts)
    return p_new


def train(ds: Dataset, h: Hyperparams | None = None, seed: int = 0, callback=None) -> TrainedModel:
    """Alternating Stiefel-CG minimisation over P1 and P2.

    Each outer iteration recomputes both reweighting diagonals from the current
    projections, then runs a bounded CG solve for P1 (P2 fixed) followed by
    one for P2 (P1 fixed). The recorded trace is the objective with exact
    l2,1 penalties, which the reweighting scheme cannot increase.
    """
    h = h or Hyperparams()
    x1_raw, x2_raw, y = ds.modality1.values, ds.modality2.values, ds.labels.values
    d1, d2 = x1_raw.shape[1], x2_raw.shape[1]
    if h.k > min(d1, d2):
        raise ValueError(f"k={h.k} exceeds min(d1, d2)={min(d1, d2)}")
    mean1, mean2 = x1_raw.mean(axis=0), x2_raw.mean(axis=0)
    x1, x2 = x1_raw - mean1, x2_raw - mean2
    g = build_graph(y)
    yy = y @ y.T

    rng = np.random.default_rng(seed)
    p1 = random_point(d1, h.k, rng)
    p2 = random_point(d2, h.k, rng)

    def record(it):
        f = l21_objective(x1, x2, y, g, p1, p2, h)
        if not np.isfinite(f):
            raise OptimizationError(f"non-finite objective at outer iteration {it}")
        trace.append(f)
        feas.append(max(orthonormality_error(p1), orthonormality_error(p2)))
        if callback is not None:
            callback(it, p1, p2, f)
        return f

    trace, feas = [], []
    f_prev = record(0)
    for it in range(1, h.max_outer_iter + 1):
        # both diagonals come from the iterate at the start of the sweep
        p1_start, p2_start = p1, p2
        p1 = _solve_block(1, x1, x2, y, yy, g, p1_start, p2_start, h)
        p2 = _solve_block(2, x1, x2, y, yy, g, p2_start, p1, h)
        f = record(it)
        if abs(f_prev - f) < h.outer_tol * max(abs(f_prev), np.finfo(float).tiny):
            break
        f_prev = f

    return TrainedModel(p1, p2, mean1, mean2, h, trace, feas)


def project(m: TrainedModel, x, modality: int) -> np.ndarray:
    """Centre with the stored training means and map into the common space."""
    x = _arr(x)
    if modality == 1:
        p, mu = m.p1, m.column_means1
    elif modality == 2:
        p, mu = m.p2, m.column_means2
    else:
        raise ValueError("modality must be 1 or 2")
    if x.ndim != 2 or x.shape[1] != p.shape[0]:
        raise ValueError(f"dimension mismatch: model expects {p.shape[0]} columns for modality {modality}, got {x.shape[-1]}")
    return (x - mu) @ p


def random_model(ds: Dataset, k: int, seed: int = 0) -> TrainedModel:
    """Seeded random orthonormal projections; a sanity baseline."""
    rng = np.random.default_rng(seed)
    x1, x2 = ds.modality1.values, ds.modality2.values
    p1 = random_point(x1.shape[1], k, rng)
    p2 = random_point(x2.shape[1], k, rng)
    return TrainedModel(p1, p2, x1.mean(axis=0), x2.mean(axis=0), Hyperparams(k=k))


def _fmt(row) -> str:
    return " ".join("%.17g" % v for v in row)


def save_model(m: TrainedModel, path):
    d1, d2, k = m.dims
    h = m.hyper
    lines = [MODEL_MAGIC, f"{d1} {d2} {k}"]
    lines += [_fmt(r) for r in m.p1]
    lines += [_fmt(r) for r in m.p2]
    lines.append(_fmt(m.column_means1))
    lines.append(_fmt(m.column_means2))
    lines.append(_fmt([h.alpha1, h.alpha2, h.lambda1, h.lambda2, h.theta, h.beta]))
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> TrainedModel:
    path = Path(path)
    if not path.exists():
        raise ValueError(f"no such model file: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise ValueError(f"{path}: not a DS2L model file")
    try:
        d1, d2, k = (int(v) for v in lines[1].split())
        body = [np.array([float(v) for v in ln.split()]) for ln in lines[2:]]
    except (ValueError, IndexError):
        raise ValueError(f"{path}: malformed model file") from None
    if len(body) != d1 + d2 + 3:
        raise ValueError(f"{path}: expected {d1 + d2 + 3} data lines, found {len(body)}")
    try:
        p1 = np.vstack(body[:d1]).reshape(d1, k)
        p2 = np.vstack(body[d1:d1 + d2]).reshape(d2, k)
    except ValueError:
        raise ValueError(f"{path}: projection rows must have {k} entries") from None
    mu1, mu2, hp = body[d1 + d2:]
    if mu1.size != d1 or mu2.size != d2 or hp.size != 6:
        raise ValueError(f"{path}: malformed mean or hyperparameter line")
    h = Hyperparams(*hp.tolist(), k=k)
    return TrainedModel(p1, p2, mu1, mu2, h)
