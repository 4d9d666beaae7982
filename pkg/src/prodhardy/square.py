"""Product area integral, Hardy norm and tent spaces on the discrete half-space.

Cones use the strict condition |x_i - y_i| < a t_i between cell centres and
are clipped at the domain boundary.  Every scale cell carries the weight
(dt/t) from :class:`ScaleGrid`, so the cone measure dy dt / t^2 becomes
h * w / t per axis.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Axis, GridFunction, OpenSet, ScaleGrid, lp_array
from .product import ProductOperatorPair, psi_area


def cone_halfwidth(t, h: float, aperture: float = 1.0) -> np.ndarray:
    """Number of neighbours m with m*h < aperture*t (strict)."""
    t = np.asarray(t, dtype=float)
    return np.maximum(np.ceil(aperture * t / h - 1e-12).astype(int) - 1, 0)


def box_sum(a: np.ndarray, m, axis: int) -> np.ndarray:
    """Sum of ``a`` over index windows [k - m, k + m] along ``axis``, clipped.

    ``m`` may be a scalar or an array broadcastable against ``a`` with the
    summed axis removed (one half-width per slice).
    """
    a = np.moveaxis(np.asarray(a), axis, -1)
    n = a.shape[-1]
    P = np.concatenate([np.zeros(a.shape[:-1] + (1,), dtype=a.dtype),
                        np.cumsum(a, axis=-1)], axis=-1)
    k = np.arange(n)
    m = np.asarray(m)[..., None]
    hi = np.minimum(k + m + 1, n)
    lo = np.maximum(k - m, 0)
    shape = np.broadcast_shapes(a.shape[:-1] + (n,), hi.shape)
    hi = np.broadcast_to(hi, shape)
    lo = np.broadcast_to(lo, shape)
    P = np.broadcast_to(P, shape[:-1] + (n + 1,))
    out = np.take_along_axis(P, hi, -1) - np.take_along_axis(P, lo, -1)
    return np.moveaxis(out, -1, axis)


def cone_matrix(n: int, m: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """K[(s, y), x] = weights[s] * 1{|x - y| <= m[s]}, flattened to (S*n, n).

    Summing E[.., s, y] against K performs the clipped window sums of every
    scale and the weighted scale sum in one matrix product.
    """
    k = np.arange(n)
    d = np.abs(k[:, None] - k[None, :])
    K = (d[None, :, :] <= np.asarray(m)[:, None, None]) * np.asarray(weights)[:, None, None]
    return K.reshape(-1, n)


def default_scales(axis: Axis, per_octave: int = 8) -> ScaleGrid:
    return ScaleGrid.for_axis(axis, per_octave)


@dataclass(frozen=True, eq=False)
class TentFunction:
    axis1: Axis
    axis2: Axis
    scales1: ScaleGrid
    scales2: ScaleGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        want = (self.axis1.n_cells, self.axis2.n_cells, len(self.scales1), len(self.scales2))
        if v.shape != want:
            raise ValueError(f"tent values shape {v.shape} != {want}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite sample")
        object.__setattr__(self, "values", v)

    def like(self, values) -> "TentFunction":
        return TentFunction(self.axis1, self.axis2, self.scales1, self.scales2, values)

    def measure_weights(self) -> np.ndarray:
        """Weights of dy dt/(t1 t2) per (t1, t2) cell, shape (T1, T2)."""
        w1 = self.scales1.weights * self.axis1.h
        w2 = self.scales2.weights * self.axis2.h
        return np.outer(w1, w2)

    def l2_norm(self) -> float:
        """|F|_{L^2(dy dt/(t1 t2))}."""
        e = np.abs(self.values) ** 2
        return float(np.sqrt(np.einsum("abij,ij->", e, self.measure_weights())))

    def scale_energy(self) -> np.ndarray:
        """Per-scale energy table used in reports."""
        e = np.abs(self.values) ** 2
        return e.sum(axis=(0, 1)) * self.measure_weights()

    @classmethod
    def from_q(cls, f: GridFunction, pair: ProductOperatorPair,
               scales1: ScaleGrid, scales2: ScaleGrid) -> "TentFunction":
        """F(y, t) = psi(t1 sqrt L1) psi(t2 sqrt L2) f (y) for all scale cells."""
        coef = pair.to_coefficients(f.values)
        a = psi_area(np.multiply.outer(scales1.values, np.sqrt(pair.L1.eigenvalues)))
        b = psi_area(np.multiply.outer(scales2.values, np.sqrt(pair.L2.eigenvalues)))
        U1, U2 = pair.L1.eigenvectors, pair.L2.eigenvectors
        # (x1, x2, t1, t2) = U1[x1,j] a[t1,j] coef[j,k] b[t2,k] U2[x2,k]
        G = np.einsum("xj,sj,jk->xsk", U1, a, coef, optimize=True)
        vals = np.einsum("xsk,uk,yk->xysu", G, b, U2, optimize=True)
        return cls(f.axis1, f.axis2, scales1, scales2, vals)


def _cone_weights(scales: ScaleGrid, h: float, aperture: float):
    t = scales.values
    return cone_halfwidth(t, h, aperture), scales.weights * h / t


def area_integral(f: GridFunction, pair: ProductOperatorPair,
                  scales1: ScaleGrid | None = None, scales2: ScaleGrid | None = None,
                  aperture: float = 1.0) -> GridFunction:
    """Sf(x) = (sum over the cone of |Q_t f(y)|^2 dy dt/(t1^2 t2^2))^{1/2}."""
    pair.check(f)
    s1 = scales1 or default_scales(f.axis1)
    s2 = scales2 or default_scales(f.axis2)
    n1, n2 = pair.shape
    m1, c1 = _cone_weights(s1, f.axis1.h, aperture)
    m2, c2 = _cone_weights(s2, f.axis2.h, aperture)
    coef = pair.to_coefficients(f.values)
    if not np.any(coef):
        return f.like(np.zeros(pair.shape))
    a = psi_area(np.multiply.outer(s1.values, np.sqrt(pair.L1.eigenvalues)))
    b = psi_area(np.multiply.outer(s2.values, np.sqrt(pair.L2.eigenvalues)))
    U1, U2 = pair.L1.eigenvectors, pair.L2.eigenvectors
    W2 = (b[:, :, None] * U2.T[None, :, :])           # (t2, k, x2)
    W2 = W2.transpose(1, 0, 2).reshape(n2, -1)       # (k, t2*x2)
    K2 = cone_matrix(n2, m2, c2)
    acc = np.zeros((n1, n2))
    for i in range(len(s1)):
        if not np.any(a[i]):
            continue
        G = U1 @ (a[i][:, None] * coef)              # (x1, k)
        E = np.abs(G @ W2) ** 2                      # (x1, t2*y2)
        acc += c1[i] * box_sum(E @ K2, m1[i], axis=0)
    return f.like(np.sqrt(np.maximum(acc, 0.0)))


def hardy_norm(f: GridFunction, pair: ProductOperatorPair, **kw) -> float:
    """|Sf|_1."""
    S = area_integral(f, pair, **kw)
    return lp_array(S.values, 1, f.cell_area)


def tent_a_functional(F: TentFunction, aperture: float = 1.0) -> GridFunction:
    """AF(x): cone-restricted L^2(dy dt/(t1^2 t2^2)) norm of F."""
    m1, c1 = _cone_weights(F.scales1, F.axis1.h, aperture)
    m2, c2 = _cone_weights(F.scales2, F.axis2.h, aperture)
    E = np.abs(F.values) ** 2
    n1, n2 = E.shape[:2]
    K2 = cone_matrix(n2, m2, c2)
    acc = np.zeros((n1, n2))
    for i in range(E.shape[2]):
        Ei = E[:, :, i, :]
        if not Ei.any():
            continue
        Ei = Ei.transpose(0, 2, 1).reshape(n1, -1)   # (x1, t2*y2)
        acc += c1[i] * box_sum(Ei @ K2, m1[i], axis=0)
    return GridFunction(F.axis1, F.axis2, np.sqrt(acc))


def tent_norm(F: TentFunction, p: float = 1.0, aperture: float = 1.0) -> float:
    A = tent_a_functional(F, aperture)
    return lp_array(A.values, p, A.cell_area)


def tent_over(omega: OpenSet, scales1: ScaleGrid, scales2: ScaleGrid,
              aperture: float = 1.0) -> np.ndarray:
    """T(Omega) as a boolean array over (y1, y2, t1, t2).

    (y, t) belongs to the tent when its clipped shadow
    {x : |x_i - y_i| < t_i} lies inside Omega.
    """
    if omega.is_empty():
        raise ValueError("empty open set")
    m1 = cone_halfwidth(scales1.values, omega.axis1.h, aperture)
    m2 = cone_halfwidth(scales2.values, omega.axis2.h, aperture)
    return _tent_from_mask(omega.mask, m1, m2)


def _tent_from_mask(mask: np.ndarray, m1, m2) -> np.ndarray:
    n1, n2 = mask.shape
    out = np.zeros((n1, n2, len(m1), len(m2)), dtype=bool)
    outside = (~mask).astype(np.int64)
    cache1 = {}
    for a in np.unique(m1):
        cache1[a] = box_sum(outside, a, axis=0)
    for i, a in enumerate(m1):
        rows = cache1[a]
        for b in np.unique(m2):
            ok = box_sum(rows, b, axis=1) == 0
            out[:, :, i, m2 == b] = ok[:, :, None]
    return out
