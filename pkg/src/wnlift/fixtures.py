"""Smooth test potentials on flat tori.

All potentials are trigonometric, so their ``ddc`` is known in closed form and
``theta``-positivity can be checked by hand. On the one-dimensional torus with
``theta = 1`` a term ``c * cos(2 pi x)`` has ``ddc`` density ``-pi c cos(2 pi x)``,
so amplitudes below ``1 / pi`` keep ``theta + ddc`` positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kahler_grid import TorusGeometry

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OrderedTriple:
    """Potentials ``psi1 >= psi2 >= gamma`` on a common grid, with ``v = psi1 - psi2``."""

    psi1: np.ndarray
    psi2: np.ndarray
    gamma: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.psi1 - self.psi2

    def check_order(self, tol: float = 1e-14) -> None:
        for name, hi, lo in (("psi1 >= psi2", self.psi1, self.psi2), ("psi2 >= gamma", self.psi2, self.gamma)):
            bad = np.argwhere(hi < lo - tol)
            if bad.size:
                raise ValueError(f"ordering {name} violated at cell {tuple(int(i) for i in bad[0])}")


def standard_triple(geom: TorusGeometry, eps: float = 0.1) -> OrderedTriple:
    """``psi1 = 0``, ``psi2 = -eps (1 - cos 2 pi x)``, ``gamma = psi2 - eps (1 - cos 2 pi y)``."""
    x, y = geom.coords()[:2]
    psi1 = np.zeros(geom.shape)
    psi2 = -eps * (1.0 - np.cos(TWO_PI * x))
    gamma = psi2 - eps * (1.0 - np.cos(TWO_PI * y))
    return OrderedTriple(psi1, psi2, gamma)


def sine_potential(geom: TorusGeometry, amp: float = 0.1) -> np.ndarray:
    """``amp * sin(2 pi x)`` along the first real axis."""
    return amp * np.sin(TWO_PI * geom.coords()[0])


def bump(s: np.ndarray) -> np.ndarray:
    """``exp(-1 / (1 - s^2))`` on ``|s| < 1``, zero outside."""
    out = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def cutoff(geom: TorusGeometry, centre: float = 0.5, radius: float = 0.25) -> np.ndarray:
    """Smooth nonnegative cutoff supported on a half-period window around ``centre``."""
    x, y = geom.coords()[:2]
    return bump((x - centre) / radius) * bump((y - centre) / radius)


def ibp_pair_n1(geom: TorusGeometry, eps: float = 0.1) -> tuple:
    """Two unrelated smooth differences ``u``, ``v`` on the one-dimensional torus."""
    x, y = geom.coords()
    u = eps * (np.sin(TWO_PI * x) + 0.5 * np.cos(TWO_PI * (x + y)))
    v = eps * (np.cos(TWO_PI * (x - y)) + 0.7 * np.sin(TWO_PI * y))
    return u, v


def ibp_fixtures_n2(geom: TorusGeometry, eps: float = 0.05, gamma_amp: float = 0.02) -> tuple:
    """``(u, v, gamma)`` on the two-dimensional torus.

    The Fourier modes are chosen so that ``u``, ``v`` and ``gamma`` form
    resonant triads: the discrete integration-by-parts residual is then
    nonzero and shrinks at the stencil's second order. With only one active
    real axis, or without resonance, the discrete residual vanishes
    identically or converges at fourth order and says nothing about the
    stencil error.
    """
    x1, y1, x2, _ = geom.coords()
    u = eps * (np.sin(TWO_PI * (x1 + x2)) + np.cos(TWO_PI * y1))
    v = eps * (np.sin(TWO_PI * x1) + np.cos(TWO_PI * y1))
    gamma = gamma_amp * np.cos(TWO_PI * (2.0 * x1 + x2))
    return u, v, gamma


def intres_u(geom: TorusGeometry, amp: float = 0.1) -> np.ndarray:
    """Difference potential whose pairing with the standard ``v`` is nonzero."""
    x, y = geom.coords()
    return amp * np.cos(TWO_PI * x) + 0.5 * amp * np.sin(TWO_PI * y)


def log_pole(geom: TorusGeometry, strength: float = 0.05) -> np.ndarray:
    """Periodic potential with a mollified logarithmic pole at the origin.

    ``strength * log(sin^2(pi x) + sin^2(pi y) + h^2)``; the mollification
    scale is the grid step ``h``.
    """
    x, y = geom.coords()
    r2 = np.sin(math.pi * x) ** 2 + np.sin(math.pi * y) ** 2
    return strength * np.log(r2 + geom.h**2)
