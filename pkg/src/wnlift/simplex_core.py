"""Projection onto the truncated simplex and the envelope functions built on it.

The truncated simplex is ``{alpha in R^N : alpha >= 0, sum(alpha) <= 1}``.
For a point ``x`` we work with

* ``f(x) = min_alpha |x - alpha|^2``, the squared distance to the simplex,
* ``g(x) = f(x) - |x|^2``, extended to arguments equal to ``-inf``,
* ``L(x)``, the right derivative of ``g`` along ``e = (1, ..., 1)``.

All functions accept a single vector of shape ``(N,)`` or a batch of shape
``(..., N)`` and broadcast over the leading axes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

NEG_INF = float("-inf")

# residual below which a simplex constraint counts as binding
FACE_TOL = 1e-12


def _as_vectors(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValueError("expected a vector with at least one entry")
    return x


def _check_extended(x: np.ndarray) -> None:
    if np.isnan(x).any() or np.isposinf(x).any():
        raise ValueError("entries must be finite or -inf")


def _check_finite(x: np.ndarray) -> None:
    if not np.isfinite(x).all():
        raise ValueError("entries must be finite")


def project_standard_simplex(x) -> np.ndarray:
    """Euclidean projection onto ``{alpha >= 0, sum(alpha) = 1}`` along the last axis.

    Sort-and-threshold: find the water level ``lam`` with
    ``sum(max(x - lam, 0)) = 1``. Entries equal to ``-inf`` project to 0.
    """
    x = _as_vectors(x)
    n = x.shape[-1]
    u = -np.sort(-x, axis=-1)
    with np.errstate(invalid="ignore"):
        css = np.cumsum(u, axis=-1)
        k = np.arange(1, n + 1, dtype=float)
        cond = u - (css - 1.0) / k > 0
    # last index where cond holds; cond[..., 0] is always true for finite u[0]
    rho = n - 1 - np.argmax(cond[..., ::-1], axis=-1)
    lam = (np.take_along_axis(css, rho[..., None], axis=-1) - 1.0) / (rho[..., None] + 1.0)
    return np.maximum(x - lam, 0.0)


def project_simplex(x) -> np.ndarray:
    """Closest point of the truncated simplex to ``x`` (last axis).

    Clamp to the positive orthant; where the clamped sum exceeds 1 the
    constraint ``sum = 1`` is binding and the standard-simplex projection
    applies. ``-inf`` entries project to 0.

    >>> project_simplex([1.0, 1.0])
    array([0.5, 0.5])
    """
    x = _as_vectors(x)
    _check_extended(x)
    if x.shape[-1] == 1:
        return np.clip(x, 0.0, 1.0)
    y = np.maximum(x, 0.0)
    over = y.sum(axis=-1) > 1.0
    if over.ndim == 0:
        return project_standard_simplex(x) if over else y
    if over.any():
        y[over] = project_standard_simplex(x[over])
    return y


@dataclass(frozen=True)
class FacePattern:
    """Open face of the truncated simplex together with the affine piece of the projection.

    ``zero_set`` holds 0-based indices of coordinates clamped to zero and
    ``sum_active`` records whether ``sum(alpha) = 1`` binds. On the region
    projecting into this face, ``project_simplex(x) == affine_matrix @ x + affine_offset``.
    """

    zero_set: frozenset
    sum_active: bool
    affine_matrix: np.ndarray
    affine_offset: np.ndarray

    @property
    def dim(self) -> int:
        return self.affine_offset.shape[0]

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.affine_matrix.T + self.affine_offset


def face_pattern(n: int, zero_set, sum_active: bool) -> FacePattern:
    """Build the affine piece for a given set of active constraints."""
    zero_set = frozenset(int(i) for i in zero_set)
    free = [i for i in range(n) if i not in zero_set]
    mat = np.zeros((n, n))
    off = np.zeros(n)
    if sum_active:
        if not free:
            raise ValueError("sum constraint cannot bind with every coordinate at zero")
        k = len(free)
        for i in free:
            off[i] = 1.0 / k
            for j in free:
                mat[i, j] = (1.0 if i == j else 0.0) - 1.0 / k
    else:
        for i in free:
            mat[i, i] = 1.0
    return FacePattern(zero_set, bool(sum_active), mat, off)


def active_face(x, tol: float = FACE_TOL) -> FacePattern:
    """Face of the truncated simplex containing ``project_simplex(x)``.

    Constraints within ``tol`` of binding are treated as active; a point that
    is both on a coordinate face and on the sum face carries both.
    """
    x = _as_vectors(x)
    if x.ndim != 1:
        raise ValueError("active_face takes a single vector")
    _check_finite(x)
    p = project_simplex(x)
    zero_set = {i for i in range(p.size) if p[i] <= tol}
    sum_active = abs(p.sum() - 1.0) <= tol
    return face_pattern(p.size, zero_set, sum_active)


def all_faces(n: int):
    """Every face of the truncated simplex in R^n (``2**(n+1) - 1`` of them)."""
    faces = []
    for r in range(n + 1):
        for zs in itertools.combinations(range(n), r):
            faces.append(face_pattern(n, zs, False))
            if r < n:
                faces.append(face_pattern(n, zs, True))
    return faces


def f_value(x) -> np.ndarray | float:
    """Squared distance from ``x`` to the truncated simplex."""
    x = _as_vectors(x)
    _check_finite(x)
    d = x - project_simplex(x)
    out = np.sum(d * d, axis=-1)
    return float(out) if out.ndim == 0 else out


def g_value(x) -> np.ndarray | float:
    """``f(x) - |x|^2`` on ``[-inf, inf)^N``.

    With ``p = project_simplex(x)`` this is ``sum(p**2 - 2 x p)``. Coordinates
    equal to ``-inf`` have ``p = 0`` and drop out, which is exactly the
    inductive extension ``g_N(x_1..x_M, -inf, ...) = g_M(x_1..x_M)``, ``g_0 = 0``.
    """
    x = _as_vectors(x)
    _check_extended(x)
    p = project_simplex(x)
    with np.errstate(invalid="ignore"):
        terms = np.where(p > 0, p * p - 2.0 * x * p, 0.0)
    out = terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def L_value(x) -> np.ndarray | float:
    """Right derivative of ``g`` along ``e``: ``-2 * sum(project_simplex(x))``.

    ``g`` is C^1 with gradient ``-2 * project_simplex(x)`` (envelope theorem on
    the distance function), so the one-sided limit is the directional
    derivative. Values lie in ``[-2, 0]``.
    """
    x = _as_vectors(x)
    _check_extended(x)
    # the projected sum can exceed 1 by an ulp; clip so that |L| <= 2 holds exactly
    out = -2.0 * np.minimum(project_simplex(x).sum(axis=-1), 1.0)
    return float(out) if out.ndim == 0 else out


def fd_directional_derivative(x, steps=(1e-6, 1e-7)) -> np.ndarray | float:
    """Oracle for :func:`L_value`: forward differences of ``g`` along ``e``.

    Two step sizes ``t1 > t2`` are combined linearly to cancel the ``O(t)``
    term; along a ray ``g`` is piecewise quadratic, so the result is exact up
    to rounding unless a face change falls inside ``(0, t1)``.
    """
    x = _as_vectors(x)
    _check_finite(x)
    t1, t2 = steps
    g0 = np.asarray(g_value(x))
    d1 = (np.asarray(g_value(x + t1)) - g0) / t1
    d2 = (np.asarray(g_value(x + t2)) - g0) / t2
    out = (t1 * d2 - t2 * d1) / (t1 - t2)
    return float(out) if out.ndim == 0 else out


def simplex_lattice(n: int, resolution: float) -> np.ndarray:
    """Points of ``resolution * Z^n`` inside the truncated simplex, for n in {1, 2}."""
    if n not in (1, 2):
        raise NotImplementedError("lattice enumeration supports n <= 2")
    steps = int(math.floor(1.0 / resolution + 1e-9))
    grid = np.arange(steps + 1)
    if n == 1:
        return (grid * resolution)[:, None]
    a, b = np.meshgrid(grid, grid, indexing="ij")
    keep = a + b <= steps
    pts = np.stack([a[keep], b[keep]], axis=-1)
    return pts * resolution


def brute_force_f(x, resolution: float) -> np.ndarray | float:
    """Lattice oracle for :func:`f_value`, independent of the projection code.

    Minimizes ``|x - alpha|^2`` over ``resolution * Z^N`` intersected with the
    simplex. The first ``N - 1`` coordinates are enumerated exhaustively; for
    each of them the best lattice value of the last coordinate is the lattice
    point nearest to ``x_N`` clamped to its admissible segment, which is the
    exact discrete minimizer of a one-variable convex quadratic.
    """
    x = _as_vectors(x)
    _check_finite(x)
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    n = x.shape[-1]
    if n > 3:
        raise NotImplementedError("brute-force enumeration supports N <= 3")
    steps = int(math.floor(1.0 / resolution + 1e-9))
    flat = x.reshape(-1, n)
    out = np.empty(flat.shape[0])
    if n == 1:
        heads = np.zeros((1, 0))
        budget = np.array([steps])
    else:
        heads = simplex_lattice(n - 1, resolution)
        budget = steps - np.rint(heads.sum(axis=1) / resolution).astype(int)
    chunk = max(1, 2_000_000 // max(1, heads.shape[0]))
    for s in range(0, flat.shape[0], chunk):
        xs = flat[s : s + chunk]
        head_cost = ((xs[:, None, : n - 1] - heads[None]) ** 2).sum(axis=-1)
        k_last = np.clip(np.rint(xs[:, None, n - 1] / resolution), 0, budget[None])
        last_cost = (xs[:, None, n - 1] - k_last * resolution) ** 2
        out[s : s + chunk] = (head_cost + last_cost).min(axis=1)
    out = out.reshape(x.shape[:-1])
    return float(out) if out.ndim == 0 else out
