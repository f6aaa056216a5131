"""Stiefel-manifold primitives and a geodesic conjugate-gradient minimizer.

Points are d x k arrays with orthonormal columns; tangent vectors at P are
d x k arrays Z with P^T Z skew-symmetric. Plain numpy arrays are used for both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm


class OptimizationError(RuntimeError):
    pass


def orthonormality_error(p) -> float:
    p = np.asarray(p)
    return float(np.linalg.norm(p.T @ p - np.eye(p.shape[1])))


def tangency_error(p, z) -> float:
    a = p.T @ z
    return float(np.linalg.norm(a + a.T))


def random_point(d: int, k: int, rng) -> np.ndarray:
    """Orthonormalised Gaussian matrix (compact QR, sign-fixed)."""
    if not d >= k >= 1:
        raise ValueError(f"need d >= k >= 1, got d={d}, k={k}")
    q, r = np.linalg.qr(rng.standard_normal((d, k)))
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s


def _sym(a):
    return 0.5 * (a + a.T)


def _skew(a):
    return 0.5 * (a - a.T)


def project_tangent(p, z):
    return z - p @ _sym(p.T @ z)


def riemannian_gradient(p, euclid_grad):
    """Canonical-metric gradient G - P G^T P."""
    p = np.asarray(p, dtype=np.float64)
    g = np.asarray(euclid_grad, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: point {p.shape}, gradient {g.shape}")
    return g - p @ g.T @ p


def _complement_vector(a, fixed):
    # unit vector orthogonal to a and to the columns of `fixed`
    basis = np.column_stack([a, fixed]) if fixed.size else a[:, None]
    for e in np.eye(a.size):
        v = e - basis @ np.linalg.lstsq(basis, e, rcond=None)[0]
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            return v / nv
    return None


def _reflect(m, w):
    return m - 2.0 * np.outer(w, w @ m)


def parallel_transport(h, frm, to, tol: float = 1e-8):
    """Carry tangent vector h at `frm` to the tangent space at `to`.

    Builds an orthogonal map U with U @ frm == to as a product of plane
    rotations (two reflections per column, each rotating the current image of
    a column onto its target inside the plane they span) and returns
    U @ h, re-projected to clean rounding. U is an isometry, so the result is
    norm-preserving; for k = 1 it is exact great-circle transport.
    """
    h = np.asarray(h, dtype=np.float64)
    frm = np.asarray(frm, dtype=np.float64)
    to = np.asarray(to, dtype=np.float64)
    if not (h.shape == frm.shape == to.shape):
        raise ValueError(f"shape mismatch: {h.shape}, {frm.shape}, {to.shape}")
    if tangency_error(frm, h) > tol * max(1.0, np.linalg.norm(h)):
        raise ValueError("vector is not tangent at the source point")

    x = frm.copy()
    v = h.copy()
    k = frm.shape[1]
    for j in range(k):
        a, b = x[:, j], to[:, j]
        w = a + b
        nw = np.linalg.norm(w)
        if nw < 1e-8:
            # a == -b: rotate by pi through a spare direction, or, when none
            # is left (d == k), the reflection below alone maps a onto b
            w = _complement_vector(a, to[:, :j])
        else:
            w = w / nw
        if w is not None:
            x = _reflect(x, w)
            v = _reflect(v, w)
        x = _reflect(x, b)
        v = _reflect(v, b)
    return project_tangent(to, v)


def geodesic_step(p, h, t: float):
    """Point at time t on the canonical geodesic from p with velocity h.

    P(t) = P M(t) + Q N(t), where QR = (I - PP^T)H and [M; N] is the first
    block column of expm(t [[A, -R^T], [R, 0]]), A = P^T H.
    """
    p = np.asarray(p, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if p.shape != h.shape:
        raise ValueError(f"shape mismatch: point {p.shape}, direction {h.shape}")
    if t == 0:
        return p.copy()
    k = p.shape[1]
    a = _skew(p.T @ h)
    q, r = np.linalg.qr(h - p @ (p.T @ h))
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    q = q * s
    r = s[:, None] * r
    block = np.zeros((2 * k, 2 * k))
    block[:k, :k] = a
    block[:k, k:] = -r.T
    block[k:, :k] = r
    mn = expm(t * block)[:, :k]
    return p @ mn[:k] + q @ mn[k:]


@dataclass
class CgOptions:
    max_iter: int = 20
    grad_tol: float = 1e-6
    c1: float = 1e-4
    shrink: float = 0.5
    t0: float = 1.0
    restart_every: int = 10
    max_backtracks: int = 60


@dataclass
class CgState:
    point: np.ndarray
    direction: np.ndarray
    prev_gradient: np.ndarray
    iteration: int = 0
    step: float = 1.0
    trace: list = field(default_factory=list)


def _finite(value, what, it):
    if not np.all(np.isfinite(value)):
        raise OptimizationError(f"non-finite {what} at iteration {it}")
    return value


def cg_minimize(cost, euclid_grad, p0, opts: CgOptions | None = None):
    """Riemannian conjugate gradient on the Stiefel manifold.

    Polak-Ribiere+ directions with transported gradients, restarted every
    ``opts.restart_every`` iterations, and backtracking Armijo search along
    the geodesic. The first trial step is ``opts.t0``; later searches start
    from twice the previously accepted step. Returns (point, trace) where
    trace[i] is the cost after i iterations.
    """
    opts = opts or CgOptions()
    p = np.asarray(p0, dtype=np.float64)
    f = float(_finite(cost(p), "cost", 0))
    eg = _finite(euclid_grad(p), "gradient", 0)
    grad = riemannian_gradient(p, eg)
    state = CgState(point=p, direction=-grad, prev_gradient=grad, step=opts.t0, trace=[f])

    for it in range(1, opts.max_iter + 1):
        if np.linalg.norm(grad) <= opts.grad_tol:
            break
        h = state.direction
        slope = float(np.sum(eg * h))
        if slope >= 0:
            h = -grad
            slope = float(np.sum(eg * h))
        if slope >= 0:
            break

        t = 2.0 * state.step if it > 1 else opts.t0
        for _ in range(opts.max_backtracks):
            cand = geodesic_step(p, h, t)
            fc = float(_finite(cost(cand), "cost", it))
            if fc <= f + opts.c1 * t * slope:
                break
            t *= opts.shrink
        else:
            # no admissible step: already at numerical precision
            break

        eg = _finite(euclid_grad(cand), "gradient", it)
        new_grad = riemannian_gradient(cand, eg)
        if opts.restart_every and it % opts.restart_every == 0:
            gamma = 0.0
        else:
            old_grad = parallel_transport(grad, p, cand, tol=np.inf)
            denom = float(np.sum(grad * grad))
            gamma = max(0.0, float(np.sum(new_grad * (new_grad - old_grad))) / denom) if denom > 0 else 0.0
        direction = -new_grad
        if gamma > 0:
            direction = direction + gamma * parallel_transport(h, p, cand, tol=np.inf)

        p, f, grad = cand, fc, new_grad
        state.point, state.direction, state.prev_gradient = p, direction, grad
        state.iteration, state.step = it, t
        state.trace.append(f)

    return state.point, state.trace
