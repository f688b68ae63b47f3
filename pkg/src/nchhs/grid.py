"""Rectangular cell-centered grids and the discrete operators used by every solver.

Scalar fields are plain ``ndarray`` of shape ``(nx, ny)`` sampled at cell
centers ``x_i = (i + 1/2) hx``.  Conservative quantities live on faces:

* neumann mode: x-faces have shape ``(nx + 1, ny)`` and y-faces ``(nx, ny + 1)``;
  index 0 and the last index are boundary faces.
* periodic mode: x-faces have shape ``(nx, ny)``; ``fx[i]`` is the left face of
  cell ``i`` (between cells ``i - 1`` and ``i``, wrapping around).

All inner products are weighted by the cell area ``hx * hy`` so that
``divergence = -face_gradient^T`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.sparse as sp

BoundaryMode = Literal["neumann", "periodic"]


@dataclass
class FaceField:
    """Face-normal components of a vector field on the staggered layout."""

    x: np.ndarray
    y: np.ndarray

    def copy(self) -> FaceField:
        return FaceField(self.x.copy(), self.y.copy())

    def __add__(self, other: FaceField) -> FaceField:
        return FaceField(self.x + other.x, self.y + other.y)

    def __sub__(self, other: FaceField) -> FaceField:
        return FaceField(self.x - other.x, self.y - other.y)

    def __mul__(self, c) -> FaceField:
        if isinstance(c, FaceField):
            return FaceField(self.x * c.x, self.y * c.y)
        return FaceField(self.x * c, self.y * c)

    __rmul__ = __mul__

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x.ravel(), self.y.ravel()])

    def max_abs(self) -> float:
        return float(max(np.abs(self.x).max(initial=0.0), np.abs(self.y).max(initial=0.0)))


@dataclass(frozen=True)
class Grid:
    lx: float
    ly: float
    nx: int
    ny: int
    boundary_mode: BoundaryMode = "neumann"

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid needs nx, ny >= 8, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain lengths must be positive")
        if self.boundary_mode not in ("neumann", "periodic"):
            raise ValueError(f"unknown boundary mode {self.boundary_mode!r}")

    # -- geometry ---------------------------------------------------------
    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def measure(self) -> float:
        return self.lx * self.ly

    @property
    def periodic(self) -> bool:
        return self.boundary_mode == "periodic"

    @property
    def xface_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny) if self.periodic else (self.nx + 1, self.ny)

    @property
    def yface_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny) if self.periodic else (self.nx, self.ny + 1)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as two ``(nx, ny)`` arrays."""
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def xface_coords(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.nx if self.periodic else self.nx + 1
        x = np.arange(n) * self.hx
        y = (np.arange(self.ny) + 0.5) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def yface_coords(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.ny if self.periodic else self.ny + 1
        x = (np.arange(self.nx) + 0.5) * self.hx
        y = np.arange(n) * self.hy
        return np.meshgrid(x, y, indexing="ij")

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def zero_faces(self) -> FaceField:
        return FaceField(np.zeros(self.xface_shape), np.zeros(self.yface_shape))

    def coarsen(self) -> Grid:
        return Grid(self.lx, self.ly, self.nx // 2, self.ny // 2, self.boundary_mode)

    def check(self, f: np.ndarray) -> None:
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")

    # -- cell <-> face interpolation -------------------------------------
    def _face_pairs(self, f: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Values left/right of every interior (and, periodic, wrapped) face."""
        if self.periodic:
            return np.roll(f, 1, axis=axis), f
        if axis == 0:
            return f[:-1, :], f[1:, :]
        return f[:, :-1], f[:, 1:]

    def _embed(self, interior: np.ndarray, axis: int, boundary) -> np.ndarray:
        """Place interior face values into a full face array (neumann mode)."""
        if self.periodic:
            return interior
        shape = self.xface_shape if axis == 0 else self.yface_shape
        out = np.empty(shape)
        if axis == 0:
            out[1:-1, :] = interior
            out[0, :] = np.ravel(boundary[0])
            out[-1, :] = np.ravel(boundary[1])
        else:
            out[:, 1:-1] = interior
            out[:, 0] = np.ravel(boundary[0])
            out[:, -1] = np.ravel(boundary[1])
        return out

    def face_average(self, f: np.ndarray) -> FaceField:
        """Arithmetic face means; boundary faces take the adjacent cell value."""
        out = []
        for axis in (0, 1):
            a, b = self._face_pairs(f, axis)
            edge = (f[:1, :], f[-1:, :]) if axis == 0 else (f[:, :1], f[:, -1:])
            out.append(self._embed(0.5 * (a + b), axis, edge))
        return FaceField(*out)

    def face_harmonic(self, f: np.ndarray) -> FaceField:
        """Harmonic face means of a nonnegative cell field (0 if either side is 0)."""
        out = []
        for axis in (0, 1):
            a, b = self._face_pairs(f, axis)
            s = a + b
            with np.errstate(divide="ignore", invalid="ignore"):
                h = np.where(s > 0, 2.0 * a * b / np.where(s > 0, s, 1.0), 0.0)
            edge = (f[:1, :], f[-1:, :]) if axis == 0 else (f[:, :1], f[:, -1:])
            out.append(self._embed(h, axis, edge))
        return FaceField(*out)

    def face_secant(self, f: np.ndarray, g: np.ndarray, dg: np.ndarray) -> FaceField:
        """Divided differences ``(g_b - g_a) / (f_b - f_a)`` on faces.

        ``g`` is a function of ``f`` sampled cellwise and ``dg`` its derivative,
        used where the two cell values coincide.  Gives the exact discrete chain
        rule ``D g(f) = secant * D f``.
        """
        out = []
        for axis in (0, 1):
            fa, fb = self._face_pairs(f, axis)
            ga, gb = self._face_pairs(g, axis)
            da, db = self._face_pairs(dg, axis)
            df = fb - fa
            tiny = 1e-7 * (1.0 + np.abs(fa))
            close = np.abs(df) < tiny
            with np.errstate(divide="ignore", invalid="ignore"):
                sec = np.where(close, 0.5 * (da + db), (gb - ga) / np.where(close, 1.0, df))
            edge = (dg[:1, :], dg[-1:, :]) if axis == 0 else (dg[:, :1], dg[:, -1:])
            out.append(self._embed(sec, axis, edge))
        return FaceField(*out)

    def cell_average(self, v: FaceField) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centered components from face values."""
        if self.periodic:
            return 0.5 * (v.x + np.roll(v.x, -1, 0)), 0.5 * (v.y + np.roll(v.y, -1, 1))
        return 0.5 * (v.x[:-1] + v.x[1:]), 0.5 * (v.y[:, :-1] + v.y[:, 1:])

    # -- differential operators ------------------------------------------
    def face_gradient(self, f: np.ndarray) -> FaceField:
        """Two-point gradient normal to each face; zero on neumann boundary faces."""
        out = []
        for axis, h in ((0, self.hx), (1, self.hy)):
            a, b = self._face_pairs(f, axis)
            out.append(self._embed((b - a) / h, axis, (0.0, 0.0)))
        return FaceField(*out)

    def divergence(self, v: FaceField) -> np.ndarray:
        """Conservative flux-difference divergence of face-normal components."""
        if self.periodic:
            return (np.roll(v.x, -1, 0) - v.x) / self.hx + (np.roll(v.y, -1, 1) - v.y) / self.hy
        return (v.x[1:] - v.x[:-1]) / self.hx + (v.y[:, 1:] - v.y[:, :-1]) / self.hy

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """5-point Laplacian, realized as ``divergence(face_gradient(f))``."""
        return self.divergence(self.face_gradient(f))

    def gradient(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centered gradient by centered differences.

        Neumann mode uses even ghost reflection, periodic mode wraps around.
        """
        mode = "wrap" if self.periodic else "symmetric"
        g = np.pad(f, 1, mode=mode)
        gx = (g[2:, 1:-1] - g[:-2, 1:-1]) / (2 * self.hx)
        gy = (g[1:-1, 2:] - g[1:-1, :-2]) / (2 * self.hy)
        return gx, gy

    # -- quadrature and norms ---------------------------------------------
    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(f) * self.area)

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(f * g) * self.area)

    def face_inner(self, v: FaceField, w: FaceField) -> float:
        return float((np.sum(v.x * w.x) + np.sum(v.y * w.y)) * self.area)

    def l2_norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(np.sum(f * f) * self.area))

    def face_norm(self, v: FaceField) -> float:
        return float(np.sqrt(max(self.face_inner(v, v), 0.0)))

    def h1_seminorm(self, f: np.ndarray) -> float:
        return self.face_norm(self.face_gradient(f))

    def linf_norm(self, f: np.ndarray) -> float:
        return float(np.max(np.abs(f)))

    def lp_norm(self, f: np.ndarray, p: float) -> float:
        return float((np.sum(np.abs(f) ** p) * self.area) ** (1.0 / p))

    # -- sparse matrices (flattened C order, index i*ny + j) --------------
    def _diff_1d(self, n: int, h: float) -> sp.csr_matrix:
        """Two-point difference from n cells to faces (n faces periodic, n+1 bounded)."""
        if self.periodic:
            d = sp.diags([np.ones(n), -np.ones(n - 1)], [0, -1], shape=(n, n), format="lil")
            d[0, n - 1] = -1.0
            return sp.csr_matrix(d) / h
        d = sp.lil_matrix((n + 1, n))
        for k in range(1, n):
            d[k, k] = 1.0
            d[k, k - 1] = -1.0
        return sp.csr_matrix(d) / h

    def gradient_matrix(self) -> sp.csr_matrix:
        """Sparse face_gradient: cells -> [x-faces; y-faces]."""
        dx = sp.kron(self._diff_1d(self.nx, self.hx), sp.identity(self.ny))
        dy = sp.kron(sp.identity(self.nx), self._diff_1d(self.ny, self.hy))
        return sp.vstack([dx, dy]).tocsr()

    def split_faces(self, flat: np.ndarray) -> FaceField:
        nxf = int(np.prod(self.xface_shape))
        return FaceField(flat[:nxf].reshape(self.xface_shape), flat[nxf:].reshape(self.yface_shape))
