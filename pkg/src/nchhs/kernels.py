"""Interaction kernels and their discrete convolutions over the domain.

The operator stores, for every lattice offset ``d = (di, dj)``, the average of
``J`` (and of both components of ``grad J``) over the offset cell
``[di hx - hx/2, di hx + hx/2] x [dj hy - hy/2, dj hy + hy/2]``; the discrete
convolution is then

    (J * f)_i = area * sum_j K[i - j] f_j,

the midpoint-in-f, exact-in-J quadrature of ``int_Omega J(x_i - y) f(y) dy``.
In neumann mode the sum runs over the bounded domain only (zero padding); in
periodic mode offsets are taken by minimum image on the torus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import erf

from .grid import FaceField, Grid

KernelFamily = Literal["newtonian2d", "gaussian"]

_GAUSS2 = np.array([-1.0, 1.0]) / np.sqrt(3.0)


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily = "gaussian"
    strength: float = 1.0
    width: float = 0.1

    def __post_init__(self):
        if self.family not in ("newtonian2d", "gaussian"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if not self.strength > 0:
            raise ValueError("kernel strength must be positive")
        if self.family == "gaussian" and not self.width > 0:
            raise ValueError("gaussian kernel width must be positive")

    def value(self, x, y):
        """Pointwise J(x, y)."""
        r2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
        if self.family == "gaussian":
            return self.strength * np.exp(-r2 / (2 * self.width ** 2))
        return -0.5 * self.strength * np.log(r2)

    def grad(self, x, y):
        r2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
        if self.family == "gaussian":
            g = -self.strength * np.exp(-r2 / (2 * self.width ** 2)) / self.width ** 2
            return g * x, g * y
        return -self.strength * x / r2, -self.strength * y / r2


# -- closed-form cell integrals of the logarithmic kernel ------------------
def _log_antiderivative(x, y):
    """G with d^2 G / dx dy = ln(x^2 + y^2)."""
    r2 = x * x + y * y
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(r2 > 0, x * y * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        t2 = np.where(x != 0, x * x * np.arctan(y / np.where(x != 0, x, 1.0)), 0.0)
        t3 = np.where(y != 0, y * y * np.arctan(x / np.where(y != 0, y, 1.0)), 0.0)
    return t1 - 3 * x * y + t2 + t3


def _log_line(a, y):
    """H with dH/dy = ln(a^2 + y^2)."""
    r2 = a * a + y * y
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(r2 > 0, y * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        t2 = np.where(a != 0, 2 * a * np.arctan(y / np.where(a != 0, a, 1.0)), 0.0)
    return t1 - 2 * y + t2


def _rect(fn, x0, x1, y0, y1):
    return fn(x1, y1) - fn(x0, y1) - fn(x1, y0) + fn(x0, y0)


def log_cell_integral(x0, x1, y0, y1):
    """Exact integral of ln|x| = (1/2) ln(x^2 + y^2) over a rectangle."""
    return 0.5 * _rect(_log_antiderivative, x0, x1, y0, y1)


def inv_r2_x_cell_integral(x0, x1, y0, y1):
    """Exact integral of x / (x^2 + y^2) over a rectangle."""
    return 0.5 * ((_log_line(x1, y1) - _log_line(x1, y0)) - (_log_line(x0, y1) - _log_line(x0, y0)))


def _erf_diff(a, b, w):
    s = np.sqrt(2.0) * w
    return np.sqrt(np.pi / 2) * w * (erf(b / s) - erf(a / s))


class KernelOperator:
    """Precomputed convolution tables for J and grad J on one grid."""

    def __init__(self, spec: KernelSpec | None, grid: Grid, *, null: bool = False):
        self.spec = spec
        self.grid = grid
        self.null = null
        nx, ny = grid.nx, grid.ny
        self._ox = np.arange(-(nx - 1), nx)
        self._oy = np.arange(-(ny - 1), ny)
        if null:
            shape = (2 * nx - 1, 2 * ny - 1)
            self.table = np.zeros(shape)
            self.gx_table = np.zeros(shape)
            self.gy_table = np.zeros(shape)
        else:
            self.table, self.gx_table, self.gy_table = self._build_tables()
        self._prepare_fft()
        self.a_const = self._sup_row_sum(np.abs(self.table))
        self.b_const = self._sup_row_sum(np.hypot(self.gx_table, self.gy_table))

    @classmethod
    def zero(cls, grid: Grid) -> KernelOperator:
        """The operator of J = 0 (used to switch the nonlocal term off)."""
        return cls(None, grid, null=True)

    # -- tables ------------------------------------------------------------
    def _offsets(self):
        g = self.grid
        di, dj = np.meshgrid(self._ox, self._oy, indexing="ij")
        if g.periodic:
            di = (di + g.nx // 2) % g.nx - g.nx // 2
            dj = (dj + g.ny // 2) % g.ny - g.ny // 2
        return di, dj

    def _build_tables(self):
        g, sp = self.grid, self.spec
        hx, hy = g.hx, g.hy
        di, dj = self._offsets()
        # compute on |offset| and restore signs, making even/odd symmetry exact
        ai, aj = np.abs(di), np.abs(dj)
        xc, yc = ai * hx, aj * hy
        x0, x1, y0, y1 = xc - hx / 2, xc + hx / 2, yc - hy / 2, yc + hy / 2
        if sp.family == "gaussian":
            w, A = sp.width, sp.strength
            ex, ey = _erf_diff(x0, x1, w), _erf_diff(y0, y1, w)
            k = A * ex * ey / (hx * hy)
            gxa = -A * (np.exp(-x0 ** 2 / (2 * w * w)) - np.exp(-x1 ** 2 / (2 * w * w))) * ey
            gya = -A * (np.exp(-y0 ** 2 / (2 * w * w)) - np.exp(-y1 ** 2 / (2 * w * w))) * ex
            gx, gy = gxa / (hx * hy), gya / (hx * hy)
        else:
            j2 = sp.strength
            near = (ai <= 1) & (aj <= 1)
            k = np.empty(di.shape)
            gx = np.empty(di.shape)
            gy = np.empty(di.shape)
            k[near] = -j2 * log_cell_integral(x0[near], x1[near], y0[near], y1[near]) / (hx * hy)
            gx[near] = -j2 * inv_r2_x_cell_integral(x0[near], x1[near], y0[near], y1[near]) / (hx * hy)
            gy[near] = -j2 * inv_r2_x_cell_integral(y0[near], y1[near], x0[near], x1[near]) / (hx * hy)
            far = ~near
            kf = np.zeros(far.sum())
            gxf = np.zeros(far.sum())
            gyf = np.zeros(far.sum())
            for qx in _GAUSS2:
                for qy in _GAUSS2:
                    px = xc[far] + 0.5 * hx * qx
                    py = yc[far] + 0.5 * hy * qy
                    kf += 0.25 * sp.value(px, py)
                    a, b = sp.grad(px, py)
                    gxf += 0.25 * a
                    gyf += 0.25 * b
            k[far], gx[far], gy[far] = kf, gxf, gyf
        gx = gx * np.sign(di)
        gy = gy * np.sign(dj)
        if self.grid.periodic:
            # offsets at exactly half the period are their own mirror image
            gx = np.where((self.grid.nx % 2 == 0) & (np.abs(di) == self.grid.nx // 2), 0.0, gx)
            gy = np.where((self.grid.ny % 2 == 0) & (np.abs(dj) == self.grid.ny // 2), 0.0, gy)
        return k, gx, gy

    def table_at(self, di: int, dj: int) -> float:
        return float(self.table[di + self.grid.nx - 1, dj + self.grid.ny - 1])

    # -- fast path ---------------------------------------------------------
    def _prepare_fft(self):
        g = self.grid
        nx, ny = g.nx, g.ny
        if g.periodic:
            self._pshape = (nx, ny)
            idx_i = self._ox % nx
            idx_j = self._oy % ny
        else:
            self._pshape = (2 * nx, 2 * ny)
            idx_i = self._ox % (2 * nx)
            idx_j = self._oy % (2 * ny)
        self._hat = []
        for t in (self.table, self.gx_table, self.gy_table):
            c = np.zeros(self._pshape)
            if g.periodic:
                # every torus offset appears once for |d| < n/2 and the mirror pair
                # both map to the same slot; keep the table entries at
                # central offsets d in [-(n//2), n - n//2)
                ci = np.arange(-(nx // 2), nx - nx // 2)
                cj = np.arange(-(ny // 2), ny - ny // 2)
                sub = t[np.ix_(ci + nx - 1, cj + ny - 1)]
                c[np.ix_(ci % nx, cj % ny)] = sub
            else:
                c[np.ix_(idx_i, idx_j)] = t
            self._hat.append(np.fft.rfft2(c))

    def _apply(self, which: int, f: np.ndarray) -> np.ndarray:
        g = self.grid
        if f.shape != g.shape:
            raise ValueError(f"field shape {f.shape} does not match kernel grid {g.shape}")
        if self.null:
            return np.zeros(g.shape)
        fp = np.zeros(self._pshape)
        fp[: g.nx, : g.ny] = f
        out = np.fft.irfft2(np.fft.rfft2(fp) * self._hat[which], s=self._pshape)
        return g.area * out[: g.nx, : g.ny]

    def convolve(self, f: np.ndarray) -> np.ndarray:
        """J * f on the cell centers."""
        return self._apply(0, f)

    def convolve_grad(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(grad J) * f on the cell centers, from the analytic gradient tables."""
        return self._apply(1, f), self._apply(2, f)

    def convolve_grad_faces(self, f: np.ndarray) -> FaceField:
        """(grad J) * f face-normal components, by face averaging; zero on walls."""
        gx, gy = self.convolve_grad(f)
        g = self.grid
        fx = g.face_average(gx).x
        fy = g.face_average(gy).y
        if not g.periodic:
            fx[0] = fx[-1] = 0.0
            fy[:, 0] = fy[:, -1] = 0.0
        return FaceField(fx, fy)

    # -- reference path ----------------------------------------------------
    def _direct(self, table: np.ndarray, f: np.ndarray) -> np.ndarray:
        g = self.grid
        nx, ny = g.nx, g.ny
        out = np.zeros(g.shape)
        if g.periodic:
            ci = np.arange(-(nx // 2), nx - nx // 2)
            cj = np.arange(-(ny // 2), ny - ny // 2)
            circ = np.zeros((nx, ny))
            circ[np.ix_(ci % nx, cj % ny)] = table[np.ix_(ci + nx - 1, cj + ny - 1)]
            for i in range(nx):
                for j in range(ny):
                    if f[i, j] != 0.0:
                        out += f[i, j] * np.roll(np.roll(circ, i, 0), j, 1)
        else:
            for i in range(nx):
                for j in range(ny):
                    if f[i, j] != 0.0:
                        # entries K[p - i, q - j] for all target cells (p, q)
                        out += f[i, j] * table[nx - 1 - i: 2 * nx - 1 - i, ny - 1 - j: 2 * ny - 1 - j]
        return g.area * out

    def convolve_direct(self, f: np.ndarray) -> np.ndarray:
        """Direct-sum J * f (reference path, intended for grids up to 64^2)."""
        self.grid.check(f)
        return self._direct(self.table, f)

    def convolve_grad_direct(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        self.grid.check(f)
        return self._direct(self.gx_table, f), self._direct(self.gy_table, f)

    # -- assumption constants ----------------------------------------------
    def _sup_row_sum(self, abstable: np.ndarray) -> float:
        if self.null:
            return 0.0
        save = self._hat
        self._hat = [None]
        g = self.grid
        c = np.zeros(self._pshape)
        if g.periodic:
            ci = np.arange(-(g.nx // 2), g.nx - g.nx // 2)
            cj = np.arange(-(g.ny // 2), g.ny - g.ny // 2)
            c[np.ix_(ci % g.nx, cj % g.ny)] = abstable[np.ix_(ci + g.nx - 1, cj + g.ny - 1)]
        else:
            c[np.ix_(self._ox % self._pshape[0], self._oy % self._pshape[1])] = abstable
        self._hat = [np.fft.rfft2(c)]
        rows = self._apply(0, np.ones(g.shape))
        self._hat = save
        return float(np.max(rows))

    def integral(self) -> float:
        """Discrete int J over one period (periodic) or the full offset lattice."""
        return float(self.convolve(np.ones(self.grid.shape)).max()) if self.grid.periodic else float(
            self.grid.area * self.table.sum())
