"""Finite-difference Kahler geometry on flat tori and on torus x P^1.

Conventions
-----------
``ddc = (i / 2 pi) d d-bar``, so ``ddc log|z|^2`` is the unit point mass and in
one complex variable ``ddc u = Laplacian(u) / (4 pi) dx dy``.

A (1,1)-form field is stored with a leading component axis holding densities
with respect to the coordinate area forms ``dx_j dy_j``:

* ``n = 1``: shape ``(1, M, M)``, the single density;
* ``n = 2``: shape ``(4, M, M, M, M)``, components ``(a11, a22, re12, im12)`` of
  the Hermitian matrix ``a``; ``a11`` and ``a22`` are densities and ``a12`` is the
  mixed coefficient ``(1/pi) d^2 u / dz_1 d zbar_2``.

With that normalisation the wedge of two forms has density
``a11 b22 + a22 b11 - 2 Re(a12 conj(b12))`` and a form squared is ``2 det a``.
Measures are arrays of mass per cell.

Torus grids are cell centred on ``[0, 1)^(2n)`` with axes ``(x1, y1[, x2, y2])``.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

FOUR_PI = 4.0 * math.pi


def hermitian_components(mat) -> np.ndarray:
    """Layout ``(a11, a22, re a12, im a12)`` of a constant Hermitian 2x2 matrix."""
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (2, 2) or not np.allclose(mat, mat.conj().T):
        raise ValueError("expected a Hermitian 2x2 matrix")
    return np.array([mat[0, 0].real, mat[1, 1].real, mat[0, 1].real, mat[0, 1].imag])


@dataclass(frozen=True)
class TorusGeometry:
    """Periodic grid on the flat complex torus of dimension ``n`` (1 or 2).

    ``theta`` is the constant background form. For ``n = 1`` it is the scalar
    ``theta_mass`` (area is 1). For ``n = 2`` the default is
    ``diag(m, m)`` with ``m = theta_mass / sqrt(2)``, which makes the total
    mass of ``theta ^ theta`` equal to ``theta_mass ** 2``; ``theta_matrix``
    overrides it with any constant Hermitian 2x2 matrix.
    """

    n: int
    M: int
    theta_mass: float = 1.0
    theta_matrix: tuple | None = None

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError("torus dimension must be 1 or 2")
        if self.M < 3:
            raise ValueError("need at least 3 grid points per axis")
        if self.theta_mass <= 0:
            raise ValueError("theta_mass must be positive")
        if self.theta_matrix is not None and self.n != 2:
            raise ValueError("theta_matrix only applies to n = 2")

    @property
    def h(self) -> float:
        return 1.0 / self.M

    @property
    def shape(self) -> tuple:
        return (self.M,) * (2 * self.n)

    @property
    def cell_volume(self) -> float:
        return self.h ** (2 * self.n)

    @property
    def theta_components(self) -> np.ndarray:
        """Constant components of ``theta`` in the form-field layout."""
        if self.n == 1:
            return np.array([self.theta_mass])
        if self.theta_matrix is None:
            m = self.theta_mass / math.sqrt(2.0)
            return np.array([m, m, 0.0, 0.0])
        return hermitian_components(self.theta_matrix)

    def coords(self) -> tuple:
        """Meshgrid of cell-centre coordinates, one array per real axis."""
        t = (np.arange(self.M) + 0.5) * self.h
        return np.meshgrid(*([t] * (2 * self.n)), indexing="ij")

    def sample(self, fn: Callable) -> np.ndarray:
        """Evaluate ``fn(*coords)`` on the grid."""
        return np.broadcast_to(np.asarray(fn(*self.coords()), dtype=float), self.shape).copy()

    def background(self) -> np.ndarray:
        comps = self.theta_components
        out = np.empty((comps.size,) + self.shape)
        out[:] = comps.reshape((-1,) + (1,) * (2 * self.n))
        return out


def _check_field(phi, geom: TorusGeometry) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != geom.shape:
        raise ValueError(f"field shape {phi.shape} does not match grid {geom.shape}")
    if not np.isfinite(phi).all():
        raise ValueError("field must be finite on the grid")
    return phi


def second_difference(f: np.ndarray, p: int, q: int, h: float) -> np.ndarray:
    """Periodic centred approximation of ``d^2 f / dx_p dx_q``."""
    if p == q:
        return (np.roll(f, -1, p) - 2.0 * f + np.roll(f, 1, p)) / (h * h)
    fp = np.roll(f, -1, p)
    fm = np.roll(f, 1, p)
    return (np.roll(fp, -1, q) - np.roll(fp, 1, q) - np.roll(fm, -1, q) + np.roll(fm, 1, q)) / (4.0 * h * h)


def ddc(phi, geom: TorusGeometry) -> np.ndarray:
    """``ddc phi`` as a form field (see module docstring for the layout).

    ``n = 1`` uses the 5-point periodic Laplacian, so the total mass
    telescopes to zero. ``n = 2`` uses centred mixed second differences.
    """
    phi = _check_field(phi, geom)
    h = geom.h
    if geom.n == 1:
        lap = second_difference(phi, 0, 0, h) + second_difference(phi, 1, 1, h)
        return (lap / FOUR_PI)[None]
    d = lambda p, q: second_difference(phi, p, q, h)
    a11 = (d(0, 0) + d(1, 1)) / FOUR_PI
    a22 = (d(2, 2) + d(3, 3)) / FOUR_PI
    re12 = (d(0, 2) + d(1, 3)) / FOUR_PI
    im12 = (d(0, 3) - d(1, 2)) / FOUR_PI
    return np.stack([a11, a22, re12, im12])


def theta_form(geom: TorusGeometry, phi=None, theta=None) -> np.ndarray:
    """``theta + ddc phi`` (just ``theta`` when ``phi`` is None).

    ``theta`` overrides the geometry's background with other constant
    components in the form-field layout.
    """
    if theta is None:
        out = geom.background()
    else:
        comps = np.asarray(theta, dtype=float)
        if comps.shape != geom.theta_components.shape:
            raise ValueError("background components do not match the torus dimension")
        out = np.empty((comps.size,) + geom.shape)
        out[:] = comps.reshape((-1,) + (1,) * (2 * geom.n))
    if phi is not None:
        out += ddc(phi, geom)
    return out


def min_eigenvalue(form: np.ndarray) -> np.ndarray:
    """Pointwise smallest eigenvalue of a form field."""
    if form.shape[0] == 1:
        return form[0]
    a11, a22, re12, im12 = form
    half_tr = 0.5 * (a11 + a22)
    rad = np.sqrt((0.5 * (a11 - a22)) ** 2 + re12**2 + im12**2)
    return half_tr - rad


def check_theta_psh(phi, geom: TorusGeometry, theta=None, tol: float = 1e-10, name: str = "potential"):
    """Raise ``ValueError`` naming the first cell where ``theta + ddc phi`` fails to be PSD."""
    form = theta_form(geom, phi, theta)
    lam = min_eigenvalue(form)
    bad = np.argwhere(lam < -tol)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise ValueError(f"{name} is not theta-psh on the grid: eigenvalue {lam[idx]:.3e} at cell {idx}")


def wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Density of ``a ^ b`` for two forms on a 2-dimensional torus; symmetric bit for bit."""
    return a[0] * b[1] + b[0] * a[1] - 2.0 * (a[2] * b[2] + a[3] * b[3])


def mixed_ma(forms: Sequence[np.ndarray], geom: TorusGeometry) -> np.ndarray:
    """Mixed Monge-Ampere measure ``forms[0] ^ ... ^ forms[n-1]`` as mass per cell."""
    if len(forms) != geom.n:
        raise ValueError(f"need {geom.n} forms on an n={geom.n} torus, got {len(forms)}")
    ncomp = 1 if geom.n == 1 else 4
    for f in forms:
        if f.shape != (ncomp,) + geom.shape:
            raise ValueError("form does not live on this geometry")
    dens = forms[0][0] if geom.n == 1 else wedge(forms[0], forms[1])
    return dens * geom.cell_volume


def integrate(f, mu) -> float:
    """``sum f * mu`` for a field and a measure on the same grid."""
    f = np.asarray(f, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if f.shape != mu.shape:
        raise ValueError(f"field shape {f.shape} does not match measure shape {mu.shape}")
    return float(np.sum(f * mu))


def total_variation(mu, nu=None) -> float:
    """Total-variation norm ``sum |mu - nu|`` of a signed grid measure (``nu`` defaults to 0)."""
    d = np.asarray(mu, dtype=float)
    if nu is not None:
        d = d - np.asarray(nu, dtype=float)
    return float(np.abs(d).sum())


def complex_hessian(fn: Callable, point, h: float = 1e-3, n_circle: int = 16) -> np.ndarray:
    """Hermitian matrix ``d^2 fn / dz_j d zbar_k`` at ``point`` from circle means.

    For a unit direction ``xi`` the mean of ``fn`` over the circle
    ``point + h e^{it} xi`` minus ``fn(point)`` equals
    ``h^2 sum_jk H_jk xi_j conj(xi_k) + O(h^4)``,
    and the ``n_circle``-point trapezoid mean is exact to order
    ``(h/r)^n_circle`` for pluriharmonic terms with a singularity at distance
    ``r``. Off-diagonal entries come from polarization. ``fn`` takes an array of
    complex points of shape ``(k, d)`` and returns ``k`` values.
    """
    p = np.asarray(point, dtype=complex)
    d = p.size
    ang = np.exp(2j * np.pi * np.arange(n_circle) / n_circle)
    f0 = float(np.asarray(fn(p[None]))[0])

    def along(xi):
        pts = p[None] + h * ang[:, None] * xi[None]
        return (float(np.mean(fn(pts))) - f0) / (h * h)

    eye = np.eye(d, dtype=complex)
    H = np.zeros((d, d), dtype=complex)
    for j in range(d):
        H[j, j] = along(eye[j])
    for j, k in itertools.combinations(range(d), 2):
        s = (eye[j] + eye[k]) / math.sqrt(2.0)
        t = (eye[j] + 1j * eye[k]) / math.sqrt(2.0)
        mean_jk = 0.5 * (H[j, j].real + H[k, k].real)
        re = along(s) - mean_jk
        im = along(t) - mean_jk
        H[j, k] = re + 1j * im
        H[k, j] = re - 1j * im
    return H


def dini_right(h: Callable[[float], float], a0: float = 0.1) -> float:
    """Right derivative of ``h`` at 0 by Richardson extrapolation.

    Uses the one-sided quotients ``(h(a) - h(0)) / a`` at ``a0, a0/2, a0/4``
    and eliminates their first- and second-order terms.
    """
    if a0 <= 0:
        raise ValueError("a0 must be positive")
    h0 = float(h(0.0))
    vals = []
    for a in (a0, a0 / 2, a0 / 4):
        ha = float(h(a))
        if not (math.isfinite(ha) and math.isfinite(h0)):
            raise ValueError(f"non-finite evaluation at a={a}")
        vals.append((ha - h0) / a)
    q1, q2, q3 = vals
    r1 = 2.0 * q2 - q1
    r2 = 2.0 * q3 - q2
    return (4.0 * r2 - r1) / 3.0


# ---------------------------------------------------------------------------
# torus x P^1


@dataclass(frozen=True)
class ProductGeometry:
    """Grid on ``T x P^1`` with ``T`` a one-dimensional torus.

    ``P^1`` is covered by two stereographic unit-disk charts: chart 0 uses
    ``z = Z1 / Z0`` and chart 1 uses ``w = Z0 / Z1``, so the hyperplane
    ``H = {Z0 = 0}`` is ``w = 0``. Each chart carries ``K x K`` cell centres on
    ``[-1, 1]^2`` plus one padding ring, giving arrays of shape
    ``(2, K + 2, K + 2)``; padding cells hold stencil neighbours only. A cell
    contributes with the fraction of its area inside the disk (closed in
    chart 0, open in chart 1), estimated by ``supersample**2`` sub-points, so
    the two charts tile ``P^1`` up to a null set.
    """

    base: TorusGeometry
    K: int
    supersample: int = 16

    def __post_init__(self):
        if self.base.n != 1:
            raise ValueError("product geometry needs a one-dimensional base")
        if self.K < 4:
            raise ValueError("need at least 4 fibre points per axis")

    @property
    def hf(self) -> float:
        return 2.0 / self.K

    @property
    def fibre_shape(self) -> tuple:
        return (2, self.K + 2, self.K + 2)

    @property
    def shape(self) -> tuple:
        return self.base.shape + self.fibre_shape

    @cached_property
    def chart_points(self) -> np.ndarray:
        c = -1.0 + (np.arange(-1, self.K + 1) + 0.5) * self.hf
        u, v = np.meshgrid(c, c, indexing="ij")
        z = u + 1j * v
        return np.stack([z, z])

    @cached_property
    def log_fs(self) -> np.ndarray:
        """``log |Z_A|^2_omega`` for ``A = 0, 1`` at every chart point, shape ``(2, K+2, K+2, 2)``."""
        r2 = np.abs(self.chart_points[0]) ** 2
        with np.errstate(divide="ignore"):
            lr = np.log(r2)
        lp = np.log1p(r2)
        out = np.empty(self.fibre_shape + (2,))
        out[0, ..., 0] = -lp
        out[0, ..., 1] = lr - lp
        out[1, ..., 0] = lr - lp
        out[1, ..., 1] = -lp
        return out

    @cached_property
    def omega(self) -> np.ndarray:
        """Fubini-Study density ``(1/pi)(1 + |z|^2)^-2`` at chart points (either chart)."""
        r2 = np.abs(self.chart_points) ** 2
        return 1.0 / (math.pi * (1.0 + r2) ** 2)

    @cached_property
    def _coverage(self) -> tuple:
        s = self.supersample
        off = ((np.arange(s) + 0.5) / s - 0.5) * self.hf
        z = self.chart_points[0]
        frac = np.zeros(z.shape)
        mass = np.zeros(z.shape)
        for du in off:
            for dv in off:
                r2 = (z.real + du) ** 2 + (z.imag + dv) ** 2
                inside = r2 <= 1.0
                frac += inside
                mass += inside / (math.pi * (1.0 + r2) ** 2)
        frac /= s * s
        mass *= self.hf**2 / (s * s)
        for arr in (frac, mass):
            arr[[0, -1], :] = 0.0
            arr[:, [0, -1]] = 0.0
        return frac, mass

    @cached_property
    def frac(self) -> np.ndarray:
        """Disk-coverage fraction per fibre cell, shape ``(2, K+2, K+2)``; 0 on padding."""
        f = self._coverage[0]
        return np.stack([f, f])

    @cached_property
    def fs_raw_mass(self) -> float:
        """Supersampled Fubini-Study mass of both charts before normalisation (ideally 1)."""
        return 2.0 * float(self._coverage[1].sum())

    @cached_property
    def fs_weight(self) -> np.ndarray:
        """Fubini-Study mass per fibre cell, normalised to total 1."""
        m = self._coverage[1]
        return np.stack([m, m]) / self.fs_raw_mass

    @property
    def fibre_drift(self) -> float:
        return abs(self.fs_raw_mass - 1.0)

    @cached_property
    def cell_area(self) -> np.ndarray:
        """Lebesgue chart area per fibre cell (coverage-weighted)."""
        return self.frac * self.hf**2

    @cached_property
    def h_band(self) -> np.ndarray:
        """Chart-1 cells within one cell of ``w = 0`` (the hyperplane ``Z0 = 0``)."""
        band = np.zeros(self.fibre_shape, dtype=bool)
        w = self.chart_points[1]
        band[1] = np.maximum(np.abs(w.real), np.abs(w.imag)) <= 1.5 * self.hf
        return band


def fibre_laplacian(P: np.ndarray, hf: float) -> np.ndarray:
    """5-point Laplacian over the last two axes; the padding ring is set to 0."""
    out = np.zeros_like(P)
    c = P[..., 1:-1, 1:-1]
    out[..., 1:-1, 1:-1] = (
        P[..., 2:, 1:-1] + P[..., :-2, 1:-1] + P[..., 1:-1, 2:] + P[..., 1:-1, :-2] - 4.0 * c
    ) / (hf * hf)
    return out


def fibre_form_mass(P: np.ndarray, geom: ProductGeometry) -> np.ndarray:
    """Fibre mass per cell of ``omega + ddc_fibre P`` for lifted values ``P`` of shape ``(..., 2, K+2, K+2)``.

    This is the fibre-fibre component of ``theta_N + ddc P``; wedged with a
    top-degree form from the one-dimensional base it is the only part that
    survives.
    """
    dens = geom.omega + fibre_laplacian(P, geom.hf) / FOUR_PI
    return dens * geom.cell_area


@dataclass
class LiftMeasure:
    """Result of :func:`ma_lift`.

    ``base_mass`` is the push-forward to the base (mass per base cell) of the
    clamped Monge-Ampere measure, H-band cells excluded. ``cell_mass`` is kept
    only on request.
    """

    base_mass: np.ndarray
    total: float
    clamped_mass: float
    h_band_mass: float
    masked_mass: float
    negative_cells: int
    cell_mass: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def _row_source(Phi, geom: ProductGeometry) -> Callable[[int], np.ndarray]:
    if callable(Phi):
        return Phi
    Phi = np.asarray(Phi, dtype=float)
    if Phi.shape != geom.shape:
        raise ValueError(f"lifted field shape {Phi.shape} does not match {geom.shape}")
    return lambda i: Phi[i]


def ma_lift(
    Phi,
    geom: ProductGeometry,
    mask: Callable[[int], np.ndarray] | None = None,
    keep_cells: bool = False,
    eig_tol: float = 1e-3,
) -> LiftMeasure:
    """Monge-Ampere measure ``(theta_1 + ddc Phi)^2`` on ``T x P^1``.

    ``Phi`` is either an array of shape ``geom.shape`` or a callable returning
    the slab ``Phi[i]`` of shape ``(M, 2, K+2, K+2)`` for base row ``i``; slabs are
    requested in order with a window of three, so the full field never needs
    to be stored. Per cell the 2x2 Hermitian matrix (base, fibre) is built from
    centred second differences, its doubled determinant is the density, and
    negative values are clamped to 0 with the clamped mass reported. ``mask(i)``
    (boolean, slab shaped) selects cells whose mass is tallied in
    ``masked_mass``.
    """
    src = _row_source(Phi, geom)
    M = geom.base.M
    hb = geom.base.h
    hf = geom.hf
    theta = geom.base.theta_mass
    vol = geom.cell_area * hb * hb
    keep = ~geom.h_band

    cache: dict[int, np.ndarray] = {}

    def row(i):
        i %= M
        if i not in cache:
            cache[i] = np.asarray(src(i), dtype=float)
        return cache[i]

    def du(A):
        out = np.zeros_like(A)
        out[..., 1:-1, 1:-1] = (A[..., 2:, 1:-1] - A[..., :-2, 1:-1]) / (2 * hf)
        return out

    def dv(A):
        out = np.zeros_like(A)
        out[..., 1:-1, 1:-1] = (A[..., 1:-1, 2:] - A[..., 1:-1, :-2]) / (2 * hf)
        return out

    base_mass = np.zeros((M, M))
    cells = np.zeros(geom.shape) if keep_cells else None
    clamped = band = masked = 0.0
    negative = 0
    for i in range(M):
        P0, Pm, Pp = row(i), row(i - 1), row(i + 1)
        for k in [k for k in cache if k not in {(i - 1) % M, i, (i + 1) % M}]:
            del cache[k]
        Yp = np.roll(P0, -1, axis=0)
        Ym = np.roll(P0, 1, axis=0)
        lap_b = (Pp + Pm + Yp + Ym - 4.0 * P0) / (hb * hb)
        Pxu = (du(Pp) - du(Pm)) / (2 * hb)
        Pxv = (dv(Pp) - dv(Pm)) / (2 * hb)
        Pyu = (du(Yp) - du(Ym)) / (2 * hb)
        Pyv = (dv(Yp) - dv(Ym)) / (2 * hb)
        d_bb = theta + lap_b / FOUR_PI
        d_ff = geom.omega + fibre_laplacian(P0, hf) / FOUR_PI
        off2 = ((Pxu + Pyv) ** 2 + (Pxv - Pyu) ** 2) / (FOUR_PI**2)
        dens = 2.0 * (d_bb * d_ff - off2)
        mass = dens * vol
        live = vol > 0
        lam = 0.5 * (d_bb + d_ff) - np.sqrt((0.5 * (d_bb - d_ff)) ** 2 + off2)
        negative += int(np.count_nonzero((lam < -eig_tol) & live))
        neg = mass < 0
        clamped += float(-mass[neg].sum())
        mass = np.where(neg, 0.0, mass)
        band += float(mass[:, ~keep].sum())
        mass = np.where(keep, mass, 0.0)
        if mask is not None:
            masked += float(mass[np.asarray(mask(i), dtype=bool)].sum())
        base_mass[i] = mass.reshape(M, -1).sum(axis=1)
        if cells is not None:
            cells[i] = mass
    if negative:
        import warnings

        warnings.warn(
            f"{negative} cells have an eigenvalue below -{eig_tol:g} (lift is only C^1,1)",
            RuntimeWarning,
            stacklevel=2,
        )
    return LiftMeasure(
        base_mass=base_mass,
        total=float(base_mass.sum()),
        clamped_mass=clamped,
        h_band_mass=band,
        masked_mass=masked,
        negative_cells=negative,
        cell_mass=cells,
    )


def pushforward(mu: np.ndarray, geom: ProductGeometry) -> np.ndarray:
    """Sum a product measure over the fibre of each base cell."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != geom.shape:
        raise ValueError(f"measure shape {mu.shape} does not match {geom.shape}")
    return mu.reshape(geom.base.shape + (-1,)).sum(axis=-1)


def export_csv(values: np.ndarray, path) -> None:
    """Write a grid snapshot as ``i, j[, k, l], value`` rows in row-major order."""
    values = np.asarray(values)
    names = ["i", "j", "k", "l", "m", "n", "o"][: values.ndim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["value"])
        for idx in np.ndindex(values.shape):
            w.writerow(list(idx) + [repr(float(values[idx]))])
