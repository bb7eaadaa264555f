"""Closed-form scalar functions with analytic gradients, vectorized over points.

Planar fields take ``(..., 2)`` arrays; sphere fields take ambient ``(..., 3)``
arrays and return the ambient gradient (only its tangential part matters).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ScalarField:
    dim = 2

    def value(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return SumField((self, other))

    def __mul__(self, c: float) -> "ScalarField":
        return ScaledField(self, float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScaledField(self, -1.0)


@dataclass(frozen=True, eq=False)
class SumField(ScalarField):
    terms: tuple

    def __post_init__(self):
        dims = {t.dim for t in self.terms}
        if len(dims) != 1:
            raise ValueError("cannot add fields of different dimension")
        object.__setattr__(self, "dim", dims.pop())

    def value(self, p):
        return sum(t.value(p) for t in self.terms)

    def grad(self, p):
        return sum(t.grad(p) for t in self.terms)


@dataclass(frozen=True, eq=False)
class ScaledField(ScalarField):
    base: ScalarField
    factor: float

    def __post_init__(self):
        object.__setattr__(self, "dim", self.base.dim)

    def value(self, p):
        return self.factor * self.base.value(p)

    def grad(self, p):
        return self.factor * self.base.grad(p)


class ZeroField(ScalarField):
    def __init__(self, dim: int = 2):
        self.dim = dim

    def value(self, p):
        return np.zeros(np.shape(p)[:-1])

    def grad(self, p):
        return np.zeros(np.shape(p))


def _bump(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(1 - s^2)^4`` for |s| < 1, else 0 (a C^3 bump); returns value and d/ds."""
    s = np.asarray(s, dtype=float)
    q = np.clip(1.0 - s * s, 0.0, None)
    q3 = q * q * q
    return q3 * q, -8.0 * s * q3


@dataclass(frozen=True, eq=False)
class Quadratic(ScalarField):
    """``c (x^2 + y^2) / 2``: rigid rotation with angular speed ``c``."""

    c: float = 1.0

    def value(self, p):
        return 0.5 * self.c * np.einsum("...i,...i->...", p, p)

    def grad(self, p):
        return self.c * np.asarray(p, dtype=float)


@dataclass(frozen=True, eq=False)
class RadialBump(ScalarField):
    """``amplitude * (1 - (r/radius)^2)^4`` around ``center``, zero outside."""

    center: tuple = (0.0, 0.0)
    radius: float = 0.9
    amplitude: float = 1.0

    def _q(self, p):
        p = np.asarray(p, dtype=float)
        dx = p[..., 0] - self.center[0]
        dy = p[..., 1] - self.center[1]
        q = 1.0 - (dx * dx + dy * dy) * (1.0 / self.radius**2)
        np.maximum(q, 0.0, out=q)
        return dx, dy, q

    def value(self, p):
        q = self._q(p)[2]
        q *= q
        return self.amplitude * q * q

    def grad(self, p):
        dx, dy, q = self._q(p)
        coef = (-8.0 * self.amplitude / self.radius**2) * q * q * q
        out = np.empty(dx.shape + (2,))
        out[..., 0] = coef * dx
        out[..., 1] = coef * dy
        return out

    def integral(self) -> float:
        """Planar integral ``2 pi R^2 A int_0^1 s (1 - s^2)^4 ds = pi R^2 A / 5``."""
        return float(np.pi * self.radius**2 * self.amplitude / 5.0)


@dataclass(frozen=True, eq=False)
class ShearBump(ScalarField):
    """Elongated product bump ``A b(u / length) b(v / width)``.

    ``(u, v)`` are coordinates about ``center`` rotated by ``angle``.  Away
    from the two ends the level sets run along the long axis, so the flow
    shears the strip: one side moves forward, the other back.
    """

    center: tuple = (0.0, 0.0)
    angle: float = 0.0
    length: float = 0.9
    width: float = 0.3
    amplitude: float = 1.0

    def _frame(self, p):
        d = np.asarray(p, dtype=float) - np.asarray(self.center)
        c, s = np.cos(self.angle), np.sin(self.angle)
        return d[..., 0] * c + d[..., 1] * s, -d[..., 0] * s + d[..., 1] * c, c, s

    def value(self, p):
        u, v, _, _ = self._frame(p)
        return self.amplitude * _bump(u / self.length)[0] * _bump(v / self.width)[0]

    def grad(self, p):
        u, v, c, s = self._frame(p)
        bu, dbu = _bump(u / self.length)
        bv, dbv = _bump(v / self.width)
        gu = self.amplitude * dbu / self.length * bv
        gv = self.amplitude * bu * dbv / self.width
        return np.stack([gu * c - gv * s, gu * s + gv * c], axis=-1)


@dataclass(frozen=True, eq=False)
class AnnulusWell(ScalarField):
    """``f(r) (1 + eps cos 4(psi - psi0))`` in polar coordinates about ``center``.

    ``f`` is a bump in ``r`` supported on ``[r_in, r_out]``.  The function is
    invariant under quarter turns about ``center``, so it is compatible with
    an octagon edge gluing that rotates about that point.
    """

    center: tuple
    r_in: float
    r_out: float
    amplitude: float = 1.0
    eps: float = 0.2
    psi0: float = 0.0

    def _parts(self, p):
        d = np.asarray(p, dtype=float) - np.asarray(self.center)
        r = np.sqrt(np.einsum("...i,...i->...", d, d))
        mid = 0.5 * (self.r_in + self.r_out)
        half = 0.5 * (self.r_out - self.r_in)
        f, fp = _bump((r - mid) / half)
        psi = np.arctan2(d[..., 1], d[..., 0])
        c4 = np.cos(4 * (psi - self.psi0))
        s4 = np.sin(4 * (psi - self.psi0))
        return d, r, self.amplitude * f, self.amplitude * fp / half, c4, s4

    def value(self, p):
        _, _, f, _, c4, _ = self._parts(p)
        return f * (1 + self.eps * c4)

    def grad(self, p):
        d, r, f, fp, c4, s4 = self._parts(p)
        rs = np.where(r > 0, r, 1.0)
        er = d / rs[..., None]
        et = np.stack([-er[..., 1], er[..., 0]], axis=-1)
        dr = fp * (1 + self.eps * c4)
        dpsi = f * (-4 * self.eps * s4) / rs
        return dr[..., None] * er + dpsi[..., None] * et


@dataclass(frozen=True, eq=False)
class Height(ScalarField):
    """Sphere: ``scale * z + quad * x^2`` (ambient coordinates)."""

    scale: float = 1.0
    quad: float = 0.0
    dim = 3

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return self.scale * p[..., 2] + self.quad * p[..., 0] ** 2

    def grad(self, p):
        p = np.asarray(p, dtype=float)
        g = np.zeros_like(p)
        g[..., 2] = self.scale
        g[..., 0] = 2 * self.quad * p[..., 0]
        return g


@dataclass(frozen=True, eq=False)
class GaussianWell(ScalarField):
    """Sphere: ``amplitude * exp(-|p - c|^2 / width^2)`` in ambient coordinates."""

    center: tuple
    width: float = 0.8
    amplitude: float = 1.0
    dim = 3

    def value(self, p):
        d = np.asarray(p, dtype=float) - np.asarray(self.center)
        return self.amplitude * np.exp(-np.einsum("...i,...i->...", d, d) / self.width**2)

    def grad(self, p):
        d = np.asarray(p, dtype=float) - np.asarray(self.center)
        v = self.amplitude * np.exp(-np.einsum("...i,...i->...", d, d) / self.width**2)
        return (-2.0 * v / self.width**2)[..., None] * d


class ExpressionField(ScalarField):
    """A field given as text in ``x, y`` (planar) or ``x, y, z`` (sphere).

    Parsed and differentiated symbolically with sympy; ``^`` means power.
    """

    def __init__(self, text: str, dim: int = 2):
        import sympy

        self.text = text
        self.dim = dim
        names = sympy.symbols("x y z")[:dim]
        allowed = {str(s): s for s in names}
        allowed.update({"sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp, "pi": sympy.pi})
        expr = sympy.sympify(text.replace("^", "**"), locals=allowed)
        stray = {str(s) for s in expr.free_symbols} - set(allowed)
        if stray:
            raise ValueError(f"unknown symbols {sorted(stray)} in {text!r}")
        self._f = sympy.lambdify(names, expr, "numpy")
        self._g = [sympy.lambdify(names, sympy.diff(expr, s), "numpy") for s in names]

    def _args(self, p):
        p = np.asarray(p, dtype=float)
        return [p[..., i] for i in range(self.dim)]

    def value(self, p):
        args = self._args(p)
        return np.broadcast_to(self._f(*args), args[0].shape).astype(float)

    def grad(self, p):
        args = self._args(p)
        return np.stack(
            [np.broadcast_to(g(*args), args[0].shape).astype(float) for g in self._g], axis=-1
        )


class GridField(ScalarField):
    """Planar field sampled on a rectangular grid, bicubic spline interpolation."""

    def __init__(self, xs, ys, values):
        from scipy.interpolate import RectBivariateSpline

        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys, dtype=float)
        self._spline = RectBivariateSpline(self.xs, self.ys, np.asarray(values, dtype=float), kx=3, ky=3)

    @classmethod
    def from_file(cls, path) -> "GridField":
        """Text grid: first line x nodes, second line y nodes, then one row per x."""
        with open(path) as fh:
            rows = [line.split() for line in fh if line.strip() and not line.startswith("#")]
        xs = [float(v) for v in rows[0]]
        ys = [float(v) for v in rows[1]]
        vals = [[float(v) for v in row] for row in rows[2:]]
        return cls(xs, ys, vals)

    def _eval(self, p, dx=0, dy=0):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, 2)
        x = np.clip(flat[:, 0], self.xs[0], self.xs[-1])
        y = np.clip(flat[:, 1], self.ys[0], self.ys[-1])
        return self._spline.ev(x, y, dx=dx, dy=dy).reshape(p.shape[:-1])

    def value(self, p):
        return self._eval(p)

    def grad(self, p):
        return np.stack([self._eval(p, dx=1), self._eval(p, dy=1)], axis=-1)
