"""Constitutive laws: viscosity, degenerate mobility, logarithmic potential and
their regularized counterparts, plus the derived functions lambda = m F'',
its primitive B and the entropy function M (m M'' = 1, M(0) = M'(0) = 0).

All functions are vectorized over numpy arrays.  ``eps = 0`` selects the
original degenerate/singular laws; evaluating a singular quantity outside its
domain raises :class:`LawDomainError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

SAFE_MARGIN = 1e-9
LAMBDA_TABLE_NODES = 4096


class LawDomainError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialParams:
    theta: float = 1.0
    theta0: float = 1.5
    nu1: float = 1.0
    nu2: float = 1.0
    eps: float = 0.0
    law_mode: Literal["reference", "custom-hook"] = "reference"

    def __post_init__(self):
        errors = self.violations()
        if errors:
            raise ValueError("; ".join(errors))

    def violations(self) -> list[str]:
        out = []
        if not self.theta > 0:
            out.append("theta > 0 required")
        if not self.theta0 > self.theta:
            out.append("theta0 > theta required")
        if not (self.nu1 > 0 and self.nu2 > 0):
            out.append("nu1, nu2 > 0 required")
        if not 0 <= self.eps < 1:
            out.append("eps in [0,1) required")
        if self.law_mode not in ("reference", "custom-hook"):
            out.append(f"unknown law_mode {self.law_mode!r}")
        return out


@dataclass(frozen=True)
class LawConstants:
    eta1: float
    eta_inf: float
    c0: float
    alpha0: float
    m_inf: float
    lambda_inf: float
    lambda_const: float | None = None


# Growth constants fitted by scripts/fit_law_constants.py over s in [-10, 10]
# and eps in {0.2, 0.1, 0.05, 0.025} at theta = 1.  k1, k2 are uniform in eps;
# the F' bound has eps-dependent constants (the linear Taylor term scales like
# F''(1 - eps) ~ theta / (2 eps)).
GROWTH_K1 = 0.5
GROWTH_K2 = 0.0
GROWTH_K3K4 = {
    0.2: (3.25, 0.079),
    0.1: (3.25, 0.079),
    0.05: (4.0, 0.064),
    0.025: (6.5, 0.108),
}


def _as_array(s):
    return np.asarray(s, dtype=float)


def _ret(x, like):
    return float(x) if np.ndim(like) == 0 else x


class MaterialLaws:
    """Evaluates the laws for one parameter set.

    In ``custom-hook`` mode ``mobility`` and ``potential`` (a triple of F, F',
    F'' callables on (-1, 1)) replace the reference closed forms; the
    regularization parameter is then ignored and B, M are tabulated.
    """

    def __init__(self, params: MaterialParams, mobility: Callable | None = None,
                 potential: tuple[Callable, Callable, Callable] | None = None):
        self.p = params
        self.clamp_count = 0
        self._mob_hook = mobility
        self._pot_hook = potential
        if params.law_mode == "custom-hook":
            if mobility is None or potential is None:
                raise ValueError("custom-hook laws need mobility and potential callables")
            self._build_tables()
        self.constants = self._constants()

    # -- helpers ----------------------------------------------------------
    @property
    def eps(self) -> float:
        return 0.0 if self.p.law_mode == "custom-hook" else self.p.eps

    @property
    def reference(self) -> bool:
        return self.p.law_mode == "reference"

    def _check_closed(self, s):
        if self.eps == 0 and np.any(np.abs(s) > 1):
            raise LawDomainError("|s| <= 1 required for eps = 0 laws")

    def _check_open(self, s):
        if self.eps == 0 and np.any(np.abs(s) >= 1):
            raise LawDomainError("|s| < 1 required for singular evaluation at eps = 0")

    def safe(self, s):
        """Clamp to the safe evaluation margin (eps = 0 only), counting clamps."""
        s = _as_array(s)
        if self.eps > 0:
            return s
        lim = 1.0 - SAFE_MARGIN
        n = int(np.count_nonzero(np.abs(s) > lim))
        if n:
            self.clamp_count += n
            s = np.clip(s, -lim, lim)
        return s

    def _clip(self, s):
        a = 1.0 - self.eps
        return np.clip(s, -a, a)

    # -- viscosity and mobility ------------------------------------------
    def viscosity(self, s):
        s = _as_array(s)
        self._check_closed(s)
        c = self._clip(s)
        p = self.p
        return _ret(p.nu1 * (1 + c) / 2 + p.nu2 * (1 - c) / 2, s)

    def mobility(self, s):
        s = _as_array(s)
        self._check_closed(s)
        if self._mob_hook is not None and not self.reference:
            return _ret(self._mob_hook(s), s)
        c = self._clip(s)
        return _ret(1.0 - c * c, s)

    def mobility_d1(self, s):
        s = _as_array(s)
        if not self.reference:
            h = 1e-6
            return _ret((self._mob_hook(s + h) - self._mob_hook(s - h)) / (2 * h), s)
        a = 1.0 - self.eps
        return _ret(np.where(np.abs(s) <= a, -2.0 * s, 0.0), s)

    # -- potential -------------------------------------------------------
    def _f(self, s):
        th = self.p.theta
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(1 + s > 0, (1 + s) * np.log(np.where(1 + s > 0, 1 + s, 1.0)), 0.0)
            t2 = np.where(1 - s > 0, (1 - s) * np.log(np.where(1 - s > 0, 1 - s, 1.0)), 0.0)
        return 0.5 * th * (t1 + t2)

    def _f1(self, s):
        return 0.5 * self.p.theta * (np.log1p(s) - np.log1p(-s))

    def _f2(self, s):
        return self.p.theta / (1.0 - s * s)

    def _f3(self, s):
        return 2.0 * self.p.theta * s / (1.0 - s * s) ** 2

    def potential(self, s):
        s = _as_array(s)
        if not self.reference:
            self._check_closed(s)
            return _ret(self._pot_hook[0](s), s)
        if self.eps == 0:
            self._check_closed(s)
            return _ret(self._f(s), s)
        a = 1.0 - self.eps
        c = self._clip(s)
        d = s - c
        out = self._f(c) + self._f1(c) * d + 0.5 * self._f2(c) * d * d + np.abs(d) ** 3
        return _ret(out, s)

    def potential_d1(self, s):
        s = _as_array(s)
        if not self.reference:
            self._check_open(s)
            return _ret(self._pot_hook[1](s), s)
        if self.eps == 0:
            self._check_open(s)
            return _ret(self._f1(s), s)
        c = self._clip(s)
        d = s - c
        return _ret(self._f1(c) + self._f2(c) * d + 3.0 * d * np.abs(d), s)

    def potential_d2(self, s):
        s = _as_array(s)
        if not self.reference:
            self._check_open(s)
            return _ret(self._pot_hook[2](s), s)
        if self.eps == 0:
            self._check_open(s)
            return _ret(self._f2(s), s)
        c = self._clip(s)
        d = s - c
        return _ret(self._f2(c) + 6.0 * np.abs(d), s)

    # -- lambda, B, M ----------------------------------------------------
    def lam(self, s):
        """lambda = m F''; continuous extension at +-1 for the reference laws."""
        s = _as_array(s)
        self._check_closed(s)
        if not self.reference:
            return _ret(self._lam_hook(s), s)
        if self.eps == 0:
            return _ret(np.full_like(s, self.p.theta), s)
        a = 1.0 - self.eps
        c = np.clip(s, -a, a)
        d = np.abs(s - c)
        return _ret(np.where(d > 0, (1 - a * a) * (self._f2(a) + 6.0 * d), self.p.theta), s)

    def _lam_hook(self, s):
        s = np.clip(s, -1 + SAFE_MARGIN, 1 - SAFE_MARGIN)
        return self._mob_hook(s) * self._pot_hook[2](s)

    def b_primitive(self, s):
        """B(s) = integral of lambda from 0 to s."""
        s = _as_array(s)
        self._check_closed(s)
        if not self.reference:
            return _ret(self._b_table(s), s)
        th = self.p.theta
        if self.eps == 0:
            return _ret(th * s, s)
        a = 1.0 - self.eps
        c = np.clip(s, -a, a)
        d = s - c
        ma = 1 - a * a
        return _ret(th * c + ma * (self._f2(a) * d + 3.0 * d * np.abs(d)), s)

    def entropy(self, s):
        """M with m M'' = 1 (M_eps for eps > 0, built from m_eps)."""
        s = _as_array(s)
        if not self.reference:
            self._check_open(s)
            return _ret(self._m_table(s), s)
        if self.eps == 0:
            self._check_open(s)
            return _ret(self._m_closed(s), s)
        a = 1.0 - self.eps
        c = self._clip(s)
        d = s - c
        out = self._m_closed(c) + np.arctanh(c) * d + 0.5 * d * d / (1 - a * a)
        return _ret(out, s)

    def entropy_d1(self, s):
        s = _as_array(s)
        if self.eps == 0:
            self._check_open(s)
            return _ret(np.arctanh(s), s)
        a = 1.0 - self.eps
        c = self._clip(s)
        return _ret(np.arctanh(c) + (s - c) / (1 - a * a), s)

    @staticmethod
    def _m_closed(s):
        return s * np.arctanh(s) + 0.5 * np.log1p(-s * s)

    # -- tables for custom laws ------------------------------------------
    def _build_tables(self):
        lam = lambda t: float(self._lam_hook(np.asarray(t)))
        nodes = np.linspace(-1.0, 1.0, LAMBDA_TABLE_NODES)
        b = self._cumulative(lam, nodes)
        self._b_interp = PchipInterpolator(nodes, b)
        # M' = int_0^s 1/m, M = int_0^s M'
        inner = np.linspace(-1 + 1e-6, 1 - 1e-6, LAMBDA_TABLE_NODES + 1)
        inv_m = lambda t: 1.0 / float(self._mob_hook(np.asarray(t)))
        mprime = self._cumulative(inv_m, inner)
        mp_interp = PchipInterpolator(inner, mprime)
        self._m_interp = PchipInterpolator(inner, self._cumulative(lambda t: float(mp_interp(t)), inner))

    @staticmethod
    def _cumulative(fn, nodes):
        """Values of int_0^x fn at the nodes, by adaptive quadrature per interval."""
        pieces = np.array([integrate.quad(fn, a, b, epsabs=1e-13, epsrel=1e-11)[0]
                           for a, b in zip(nodes[:-1], nodes[1:])])
        vals = np.concatenate([[0.0], np.cumsum(pieces)])
        k = int(np.searchsorted(nodes, 0.0))
        k = min(max(k, 1), len(nodes) - 1)
        zero = vals[k - 1] + integrate.quad(fn, nodes[k - 1], 0.0, epsabs=1e-13)[0]
        return vals - zero

    def _b_table(self, s):
        return self._b_interp(s)

    def _m_table(self, s):
        return self._m_interp(s)

    # -- assumption constants -------------------------------------------
    def _constants(self) -> LawConstants:
        p = self.p
        if self.reference:
            lam_inf = p.theta if self.eps == 0 else self.lam(1.0)
            return LawConstants(eta1=min(p.nu1, p.nu2), eta_inf=max(p.nu1, p.nu2),
                                c0=p.theta, alpha0=p.theta, m_inf=1.0,
                                lambda_inf=lam_inf, lambda_const=p.theta if self.eps == 0 else None)
        s = np.linspace(-1 + 1e-6, 1 - 1e-6, 10001)
        lam = self._lam_hook(s)
        return LawConstants(eta1=min(p.nu1, p.nu2), eta_inf=max(p.nu1, p.nu2),
                            c0=float(np.min(self._pot_hook[2](s))), alpha0=float(lam.min()),
                            m_inf=float(np.max(self._mob_hook(s))), lambda_inf=float(lam.max()))

    def local_potential(self, s):
        """W(s) = F(s) - theta0 s^2 / 2 of the local model, reported only."""
        return self.potential(s) - 0.5 * self.p.theta0 * _as_array(s) ** 2
