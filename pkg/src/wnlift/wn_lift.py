"""Pointwise Witt Nystrom lift on ``X x P^N``.

For a potential ``phi`` on ``X`` the lift is the upper envelope over the
truncated simplex

    sup_alpha (1 - |alpha|)(eta + C0 l_0) + |alpha| phi + C0 sum_a alpha_a l_a - |alpha|^2,

where ``l_A = log |Z_A|^2_omega = log(|Z_A|^2 / sum_B |Z_B|^2)``. Completing the
square turns the sup into ``C0 l_0 + eta - g(alpha_hat)`` with

    alpha_hat_a = (C0 (l_a - l_0) + phi - eta) / 2,

and ``l_a - l_0 = log |z_a|^2`` in the affine chart ``z_a = Z_a / Z_0``.

Log-metric values are passed around as arrays whose last axis has length
``N + 1`` (index 0 is the hyperplane coordinate ``Z_0``), so the same code
evaluates single points and whole product grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .simplex_core import NEG_INF, L_value, g_value, project_standard_simplex, simplex_lattice


@dataclass(frozen=True)
class FsPoint:
    """Point ``[Z_0 : ... : Z_N]`` of projective space."""

    homogeneous: tuple

    def __post_init__(self):
        z = np.asarray(self.homogeneous, dtype=complex)
        if z.ndim != 1 or z.size < 2:
            raise ValueError("need at least two homogeneous coordinates")
        if not np.isfinite(z).all() or not np.any(z != 0):
            raise ValueError("homogeneous coordinates must be finite and not all zero")
        object.__setattr__(self, "homogeneous", tuple(complex(c) for c in z))

    @classmethod
    def from_chart(cls, z) -> "FsPoint":
        """Point with ``Z_0 = 1`` and affine coordinates ``z``."""
        return cls((1.0,) + tuple(np.atleast_1d(np.asarray(z, dtype=complex))))

    @property
    def N(self) -> int:
        return len(self.homogeneous) - 1

    @property
    def on_hyperplane(self) -> bool:
        return self.homogeneous[0] == 0

    def chart(self) -> np.ndarray:
        """Affine coordinates ``z_a = Z_a / Z_0``."""
        if self.on_hyperplane:
            raise ValueError("point lies on the hyperplane Z_0 = 0")
        z = np.asarray(self.homogeneous)
        return z[1:] / z[0]

    def log_fs(self) -> np.ndarray:
        """All ``log |Z_A|^2_omega`` at once, ``-inf`` where ``Z_A = 0``."""
        mod2 = np.abs(np.asarray(self.homogeneous)) ** 2
        with np.errstate(divide="ignore"):
            return np.log(mod2 / mod2.sum())


def fs_metric_log(p: FsPoint, a: int) -> float:
    """``log(|Z_a|^2 / sum_B |Z_B|^2)``, or ``NEG_INF`` when ``Z_a = 0``."""
    if not 0 <= a <= p.N:
        raise IndexError(f"index {a} out of range for N={p.N}")
    return float(p.log_fs()[a])


@dataclass(frozen=True)
class LiftConfig:
    """Constants of the lift: simplex dimension ``N``, coupling ``C0`` and the model potential ``eta``.

    ``eta`` is a constant here (the flat-torus case uses ``eta = 0``) and must
    satisfy ``eta <= 0``; ``C0`` lies in ``(0, 1]``, the range in which every
    branch of the envelope is ``theta_N``-psh.
    """

    N: int = 1
    C0: float = 1.0
    eta: float = 0.0
    theta_mass: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not 0.0 < self.C0 <= 1.0:
            raise ValueError("C0 must lie in (0, 1]")
        if not (math.isfinite(self.eta) and self.eta <= 0.0):
            raise ValueError("eta must be finite and <= 0")
        if self.theta_mass <= 0:
            raise ValueError("theta_mass must be positive")


@dataclass(frozen=True)
class BoundedPair:
    """Two potentials with ``sup |first - second| <= bound`` (same singularity type)."""

    first: np.ndarray
    second: np.ndarray
    bound: float

    def __post_init__(self):
        a = np.asarray(self.first, dtype=float)
        b = np.asarray(self.second, dtype=float)
        if a.shape != b.shape:
            raise ValueError("pair members must share a grid")
        gap = float(np.max(np.abs(a - b))) if a.size else 0.0
        if not gap <= self.bound:
            raise ValueError(f"sup |first - second| = {gap:.3e} exceeds bound {self.bound:.3e}")

    @property
    def difference(self) -> np.ndarray:
        return np.asarray(self.first, dtype=float) - np.asarray(self.second, dtype=float)


def alpha_hat(phi_val: float, eta_val: float, z, cfg: LiftConfig) -> np.ndarray:
    """``(C0 log |z_a|^2 + phi - eta) / 2`` per chart coordinate, ``NEG_INF`` where ``z_a = 0``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.size != cfg.N:
        raise ValueError(f"expected {cfg.N} chart coordinates, got {z.size}")
    if not (math.isfinite(phi_val) and math.isfinite(eta_val)):
        raise ValueError("phi and eta values must be finite")
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(z) ** 2)
    return (cfg.C0 * logs + phi_val - eta_val) / 2.0


def alpha_hat_from_logs(phi, eta, log_fs, c0: float = 1.0) -> np.ndarray:
    """Vectorised ``alpha_hat`` from log-metric values ``log_fs[..., 0:N+1]``.

    On the hyperplane (``log_fs[..., 0] = -inf``) the entries are ``+inf``
    and are handled by :func:`lift_from_logs`.
    """
    log_fs = np.asarray(log_fs, dtype=float)
    phi = np.asarray(phi, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    with np.errstate(invalid="ignore"):
        rel = log_fs[..., 1:] - log_fs[..., :1]
    rel = np.where(np.isneginf(log_fs[..., 1:]), NEG_INF, rel)
    return (c0 * rel + phi - eta) / 2.0


def lift_from_logs(phi, eta, log_fs, c0: float = 1.0) -> np.ndarray:
    """Lifted potential ``C0 l_0 + eta - g(alpha_hat)`` for arrays of points.

    ``phi`` and ``eta`` broadcast against ``log_fs[..., 0]``. On the
    hyperplane ``l_0 = -inf`` every branch with ``|alpha| < 1`` is ``-inf``,
    so the envelope equals
    ``phi + max_{|alpha| = 1} (C0 sum alpha_a l_a - |alpha|^2)``, which is
    finite and is the limit of the off-hyperplane values.
    """
    log_fs = np.asarray(log_fs, dtype=float)
    l0 = log_fs[..., 0]
    ah = alpha_hat_from_logs(phi, eta, log_fs, c0)
    on_h = np.isneginf(l0)
    safe = np.where(on_h[..., None], 0.0, ah)
    out = c0 * np.where(on_h, 0.0, l0) + np.asarray(eta, dtype=float) - np.asarray(g_value(safe))
    if np.any(on_h):
        out = np.where(on_h, _sum_face_value(phi, log_fs, c0), out)
    return out


def _sum_face_value(phi, log_fs, c0: float) -> np.ndarray:
    """``phi + sup_{alpha >= 0, |alpha| = 1} (C0 sum alpha_a l_a - |alpha|^2)`` via the standard-simplex projection."""
    x = c0 * np.asarray(log_fs, dtype=float)[..., 1:] / 2.0
    p = project_standard_simplex(x)
    with np.errstate(invalid="ignore"):
        val = np.where(p > 0, 2.0 * x * p - p * p, 0.0).sum(axis=-1)
    return np.asarray(phi, dtype=float) + val


def lift_value(phi_val: float, eta_val: float, p: FsPoint, cfg: LiftConfig) -> float:
    """Closed-form lift at one point of ``X x P^N``."""
    if p.N != cfg.N:
        raise ValueError(f"point has N={p.N}, config has N={cfg.N}")
    if not (math.isfinite(phi_val) and math.isfinite(eta_val)):
        raise ValueError("phi and eta values must be finite")
    return float(lift_from_logs(phi_val, eta_val, p.log_fs(), cfg.C0))


def branch_value(alpha, phi, eta, log_fs, c0: float = 1.0) -> np.ndarray:
    """One branch ``(1 - |alpha|)(eta + C0 l_0) + |alpha| phi + C0 sum alpha_a l_a - |alpha|^2``.

    Terms with a zero coefficient are dropped, so ``-inf`` log values only
    contribute where their coefficient is positive.
    """
    alpha = np.asarray(alpha, dtype=float)
    log_fs = np.asarray(log_fs, dtype=float)
    s = alpha.sum()
    l0 = log_fs[..., 0]
    base = np.asarray(eta, dtype=float) + c0 * l0 if s < 1 else 0.0
    out = (1.0 - s) * base + s * np.asarray(phi, dtype=float) - float(alpha @ alpha)
    for a, w in enumerate(alpha):
        if w > 0:
            out = out + c0 * w * log_fs[..., a + 1]
    return out


def lift_sup_oracle(phi_val: float, eta_val: float, p: FsPoint, cfg: LiftConfig, resolution: float) -> float:
    """Maximise the defining branches over ``resolution``-spaced simplex points (``N <= 2``)."""
    if p.N != cfg.N:
        raise ValueError(f"point has N={p.N}, config has N={cfg.N}")
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    alphas, s, sq = _lattice_terms(cfg.N, float(resolution))
    logs = p.log_fs()
    l0 = logs[0]
    with np.errstate(invalid="ignore"):
        base = np.where(s < 1, (1.0 - s) * (eta_val + cfg.C0 * l0), 0.0)
        fib = np.where(alphas > 0, cfg.C0 * alphas * logs[1:], 0.0).sum(axis=1)
    vals = base + s * phi_val + fib - sq
    return float(np.max(vals))


@lru_cache(maxsize=8)
def _lattice_terms(N: int, resolution: float) -> tuple:
    alphas = simplex_lattice(N, resolution)
    return alphas, alphas.sum(axis=1), (alphas * alphas).sum(axis=1)


def a_field(a: float, psi1, psi2, gamma, log_fs, cfg: LiftConfig, eta=None) -> np.ndarray:
    """``Phi[a psi1 + b gamma] - Phi[a psi2 + b gamma]`` with ``b = 1 - a``.

    The ``C0 l_0`` and ``eta`` terms cancel, leaving
    ``g(alpha_hat[a psi2 + b gamma]) - g(alpha_hat[a psi1 + b gamma])``.
    Base fields carry trailing singleton axes so they broadcast against
    ``log_fs[..., 0]``.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError("a must lie in [0, 1]")
    eta = cfg.eta if eta is None else eta
    b = 1.0 - a
    u1 = a * np.asarray(psi1, dtype=float) + b * np.asarray(gamma, dtype=float)
    u2 = a * np.asarray(psi2, dtype=float) + b * np.asarray(gamma, dtype=float)
    g1 = g_value(alpha_hat_from_logs(u1, eta, log_fs, cfg.C0))
    g2 = g_value(alpha_hat_from_logs(u2, eta, log_fs, cfg.C0))
    return np.asarray(g2) - np.asarray(g1)


def l_alpha_hat(phi, log_fs, cfg: LiftConfig, eta=None) -> np.ndarray:
    """``L(alpha_hat[phi])`` on an array of points."""
    eta = cfg.eta if eta is None else eta
    return np.asarray(L_value(alpha_hat_from_logs(phi, eta, log_fs, cfg.C0)))


def log_fs_affine(z: np.ndarray) -> np.ndarray:
    """``log |Z_A|^2_omega`` for affine points ``z`` of shape ``(..., N)`` (``Z_0 = 1``)."""
    z = np.asarray(z, dtype=complex)
    mod2 = np.concatenate([np.ones(z.shape[:-1] + (1,)), np.abs(z) ** 2], axis=-1)
    with np.errstate(divide="ignore"):
        return np.log(mod2) - np.log(mod2.sum(axis=-1, keepdims=True))


def branch_psh_check(
    alpha,
    phi: Callable,
    cfg: LiftConfig,
    base_points,
    fibre_points,
    h: float = 1e-3,
    tol: float = 1e-8,
) -> float:
    """Smallest eigenvalue of the complex Hessian of ``branch + local potential of theta_N``.

    ``phi`` maps complex base points of shape ``(k,)`` to values. Near a base
    point ``w_p`` the flat form ``theta`` has local potential
    ``pi * theta_mass * |w - w_p|^2`` and ``omega`` has ``log(1 + |z|^2)`` in the
    affine chart, so the branch is ``theta_N``-psh at the point exactly when
    the sum is psh there. Returns the minimum eigenvalue found over the
    sample; raises ``AssertionError`` if it falls below ``-tol``.
    """
    from .kahler_grid import complex_hessian

    alpha = np.asarray(alpha, dtype=float)
    worst = math.inf
    for wp in np.atleast_1d(np.asarray(base_points, dtype=complex)):
        for zp in np.atleast_2d(np.asarray(fibre_points, dtype=complex)):

            def total(pts, wp=wp):
                w = pts[:, 0]
                z = pts[:, 1:]
                val = branch_value(alpha, phi(w), cfg.eta, log_fs_affine(z), cfg.C0)
                local = math.pi * cfg.theta_mass * np.abs(w - wp) ** 2 + np.log1p((np.abs(z) ** 2).sum(axis=1))
                return val + local

            H = complex_hessian(total, np.concatenate([[wp], zp]), h=h)
            lam = float(np.linalg.eigvalsh(H).min())
            worst = min(worst, lam)
            if lam < -tol:
                raise AssertionError(f"branch alpha={alpha.tolist()} fails psh test at w={wp}, z={zp}: eigenvalue {lam:.3e}")
    return worst


def product_lift_rows(phi, geom, cfg: LiftConfig) -> Callable[[int], np.ndarray]:
    """Row source for the lift of a base field ``phi`` on a :class:`~wnlift.kahler_grid.ProductGeometry`.

    Returns ``i -> Phi[i]`` of shape ``(M, 2, K+2, K+2)``, the form expected by
    :func:`wnlift.kahler_grid.ma_lift`.
    """
    if cfg.N != 1:
        raise ValueError("product grids carry a single fibre (N = 1)")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != geom.base.shape:
        raise ValueError(f"base field shape {phi.shape} does not match {geom.base.shape}")
    logs = geom.log_fs[None]

    def row(i):
        return lift_from_logs(phi[i][:, None, None, None], cfg.eta, logs, cfg.C0)

    return row


def product_field(base, geom) -> np.ndarray:
    """Base field broadcast to the product grid layout ``(M, M, 1, 1, 1)``."""
    return np.asarray(base, dtype=float)[..., None, None, None]
