"""Kernel conditions for product singular integrals, double Riesz transforms,
and the per-atom H^1 -> L^1 harness.

Operators act on raw (n1, n2) arrays so that outputs may live on a different
grid (the Dirichlet gradient lands on the n + 1 cell edges).  Kernels follow
the density convention (T f)(x) = sum_y h1 h2 K(x, y) f(y).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import lp_array
from .linalg import ConvergenceError, power_iteration
from .operators import AxisOperator
from .product import ProductOperatorPair

GAMMAS = (2, 3, 4, 6, 8, 12, 16)


@dataclass(frozen=True, eq=False)
class ProductKernelOperator:
    """Linear map on product-grid arrays, optionally a tensor T1 (x) T2.

    For tensor operators ``factors`` holds the two matrices (action
    f -> A1 f A2^T) and the kernel is A1 (x) A2 / (h1 h2).
    """

    name: str
    action: Callable
    adjoint: Callable | None = None
    in_h: tuple = (1.0, 1.0)
    out_positions: tuple | None = None     # output sample coordinates per axis
    factors: tuple | None = field(default=None, repr=False)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        return self.action(f)

    @classmethod
    def tensor(cls, name, A1, A2, h=(1.0, 1.0), out_positions=None):
        A1 = np.asarray(A1)
        A2 = np.asarray(A2)
        return cls(name, lambda f: A1 @ f @ A2.T, lambda g: A1.T @ g @ A2,
                   tuple(h), out_positions, (A1, A2))

    @classmethod
    def identity(cls, pair: ProductOperatorPair):
        h = (pair.L1.h, pair.L2.h)
        pos = (pair.L1.axis.centers, pair.L2.axis.centers)
        return cls("identity", lambda f: np.array(f, dtype=float), lambda g: np.array(g),
                   h, pos, (np.eye(pair.L1.n), np.eye(pair.L2.n)))

    @classmethod
    def zero(cls, pair: ProductOperatorPair):
        n1, n2 = pair.shape
        return cls.tensor("zero", np.zeros((n1, n1)), np.zeros((n2, n2)),
                          (pair.L1.h, pair.L2.h),
                          (pair.L1.axis.centers, pair.L2.axis.centers))

    def kernel(self) -> np.ndarray:
        """Explicit K(x1, y1, x2, y2); only for tensor operators."""
        if self.factors is None:
            raise ValueError("operator has no explicit kernel")
        A1, A2 = self.factors
        return np.einsum("ab,cd->abcd", A1, A2) / (self.in_h[0] * self.in_h[1])

    def swapped(self) -> "ProductKernelOperator":
        """The same operator with the roles of the two axes exchanged."""
        act, adj = self.action, self.adjoint
        pos = None if self.out_positions is None else self.out_positions[::-1]
        fac = None if self.factors is None else self.factors[::-1]
        return ProductKernelOperator(
            self.name + "^T", lambda f: act(f.T).T,
            None if adj is None else (lambda g: adj(g.T).T),
            self.in_h[::-1], pos, fac)

    def norm(self, shape, **kw) -> float:
        if self.adjoint is None:
            raise ValueError("operator norm needs the adjoint action")
        return power_iteration(self.action, self.adjoint, shape, **kw)


def heat_composed(T: ProductKernelOperator, pair: ProductOperatorPair, t1: float, t2: float):
    """T o (e^{-t1 L1} x e^{-t2 L2})."""
    E1 = pair.L1.function(lambda lam: np.exp(-t1 * lam))
    E2 = pair.L2.function(lambda lam: np.exp(-t2 * lam))
    if T.factors is not None:
        A1, A2 = T.factors
        return ProductKernelOperator.tensor(f"{T.name}*heat", A1 @ E1, A2 @ E2, T.in_h,
                                            T.out_positions)
    adj = None if T.adjoint is None else (lambda g: E1 @ T.adjoint(g) @ E2)
    return ProductKernelOperator(f"{T.name}*heat", lambda f: T(E1 @ f @ E2), adj,
                                 T.in_h, T.out_positions)


def check_linearity(T: ProductKernelOperator, shape, rng, tol=1e-10) -> float:
    f, g = rng.standard_normal(shape), rng.standard_normal(shape)
    a, b = rng.standard_normal(2)
    lhs = T(a * f + b * g)
    rhs = a * T(f) + b * T(g)
    scale = max(np.abs(rhs).max(), 1e-300)
    err = float(np.abs(lhs - rhs).max() / scale)
    if err > tol:
        raise ValueError(f"operator {T.name} is not linear (error {err:.2e})")
    return err


# ----------------------------------------------------------- slice opnorms

def batched_top_singular(S: np.ndarray, tol: float = 1e-6, max_iter: int = 500,
                         seed: int = 0) -> np.ndarray:
    """Largest singular value of each matrix in a stack (B, m, n) by power iteration."""
    S = np.asarray(S, dtype=float)
    B, _, n = S.shape
    out = np.zeros(B)
    live = np.flatnonzero(np.abs(S).reshape(B, -1).max(axis=1) > 0)
    if live.size == 0:
        return out
    Sl = S[live]
    x = np.random.default_rng(seed).standard_normal((live.size, n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    est = np.zeros(live.size)
    for _ in range(max_iter):
        y = np.einsum("bmn,bn->bm", Sl, x)
        new = np.linalg.norm(y, axis=1)
        if np.all(np.abs(new - est) <= tol * new):
            out[live] = new
            return out
        est = new
        x = np.einsum("bmn,bm->bn", Sl, y)
        nx = np.linalg.norm(x, axis=1, keepdims=True)
        x = np.where(nx > 0, x / np.where(nx > 0, nx, 1), x)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def _probe_slices(T: ProductKernelOperator, u1: np.ndarray, n2: int, h2: float) -> np.ndarray:
    """D[x1, x2, y2] = T(u1 (x) delta_{y2})(x1, x2) for every y2."""
    cols = []
    for y2 in range(n2):
        f = np.zeros((u1.size, n2))
        f[:, y2] = u1 / h2
        cols.append(T(f))
    return np.stack(cols, axis=-1)


def kernel_slice_opnorm(T: ProductKernelOperator, x1: int, y1: int,
                        shape=None, tol: float = 1e-6) -> float:
    """||K~(1)(x1, y1)||: top singular value of the axis-2 kernel slice, h2-weighted."""
    h1, h2 = T.in_h
    if T.factors is not None:
        A1, A2 = T.factors
        S = A1[x1, y1] / h1 * A2 / h2
    else:
        n1, n2 = shape
        u = np.zeros(n1)
        u[y1] = 1.0 / h1
        S = _probe_slices(T, u, n2, h2)[x1]
    if not S.any():
        return 0.0
    sig = power_iteration(lambda v: S @ v, lambda v: S.T @ v, S.shape[1], tol=tol)
    return float(h2 * sig)


# ----------------------------------------------------------- conditions

def region_weights(positions: np.ndarray, y: float, radius: float, h: float) -> np.ndarray:
    """Fraction of each cell [x - h/2, x + h/2] lying in {|x - y| > radius}."""
    d = np.abs(positions - y)
    return np.clip((d + h / 2 - radius) / h, 0.0, 1.0)


@dataclass
class ConditionReport:
    condition: str
    rows: list            # dicts with t1, t2, gamma1, gamma2, integral, empty
    fit_C: float = float("nan")
    fit_delta: float = float("nan")
    residual: float = float("nan")

    COLUMNS = ("condition", "t1", "t2", "gamma1", "gamma2", "integral",
               "fit_C", "fit_delta", "residual")

    def table(self) -> list[tuple]:
        return [(self.condition, r["t1"], r["t2"], r["gamma1"], r["gamma2"],
                 r["integral"], self.fit_C, self.fit_delta, self.residual)
                for r in self.rows]

    def integrals(self, t=None) -> dict:
        return {(r["gamma1"], r["gamma2"]): r["integral"] for r in self.rows
                if t is None or (r["t1"], r["t2"]) == t}


def fit_decay(gammas, values, rel_floor: float = 1e-12):
    """Least squares fit log v = log C - delta log gamma.

    Points below ``rel_floor * max(v)`` sit at roundoff level and are skipped
    along with empty regions.
    """
    g = np.asarray(gammas, dtype=float)
    v = np.asarray(values, dtype=float)
    top = np.nanmax(v) if v.size else 0.0
    ok = np.isfinite(v) & (v > max(rel_floor * top, 1e-300))
    if ok.sum() < 2:
        return float("nan"), float("nan"), float("nan")
    A = np.stack([np.ones(ok.sum()), -np.log(g[ok])], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(v[ok]), rcond=None)
    res = np.log(v[ok]) - A @ coef
    return float(np.exp(coef[0])), float(coef[1]), float(np.sqrt(np.mean(res ** 2)))


def _default_y(n: int, k: int = 8) -> list[int]:
    return sorted(set(np.linspace(n // 8, n - 1 - n // 8, k).astype(int).tolist()))


def _condition_axis1(T, pair, t_list, gamma_list, y_samples, label):
    L1 = pair.L1
    n1, n2 = pair.shape
    h1, h2 = L1.h, pair.L2.h
    pos = T.out_positions[0] if T.out_positions is not None else L1.axis.centers
    ys = _default_y(n1) if y_samples is None else list(y_samples)
    rows = []
    for t in t_list:
        E = L1.function(lambda lam: np.exp(-t * t * lam))
        best = {g: 0.0 for g in gamma_list}
        empty = {g: True for g in gamma_list}
        for y in ys:
            u = -E[:, y] / h1
            u[y] += 1.0 / h1
            if T.factors is not None:
                A1, A2 = T.factors
                k = A1 @ u                              # (x1,)
                op = np.abs(k) * _matrix_norm(A2)       # |k| * ||T2||
            else:
                D = _probe_slices(T, u, n2, h2)         # (x1, x2, y2)
                op = h2 * batched_top_singular(D)
            for g in gamma_list:
                w = region_weights(pos, L1.axis.centers[y], g * t, h1)
                if w.any():
                    empty[g] = False
                best[g] = max(best[g], float(h1 * np.sum(w * op)))
        for g in gamma_list:
            rows.append({"t1": t, "t2": 0.0, "gamma1": g, "gamma2": 0.0,
                         "integral": 0.0 if empty[g] else best[g], "empty": empty[g]})
    return _fit_report(label, rows, "gamma1")


def _matrix_norm(A):
    A = np.asarray(A)
    if not A.any():
        return 0.0
    return float(np.linalg.norm(A, 2))


def _fit_report(label, rows, key):
    good = [r for r in rows if not r["empty"]]
    if key == "both":
        g = [r["gamma1"] * r["gamma2"] for r in good]
    else:
        g = [r[key] for r in good]
    C, d, res = fit_decay(g, [r["integral"] for r in good])
    return ConditionReport(label, rows, C, d, res)


def condition1_check(T, pair, t1_list, gamma_list=GAMMAS, y_samples=None) -> ConditionReport:
    """int_{|x1-y1|>g t1} ||K~(1)(x1,y1) - K~(1)_(t1^2,0)(x1,y1)|| dx1, max over y1."""
    return _condition_axis1(T, pair, t1_list, gamma_list, y_samples, "cond1")


def condition2_check(T, pair, t2_list, gamma_list=GAMMAS, y_samples=None) -> ConditionReport:
    swapped = ProductOperatorPair(pair.L2, pair.L1)
    rep = _condition_axis1(T.swapped(), swapped, t2_list, gamma_list, y_samples, "cond2")
    for r in rep.rows:
        r["t1"], r["t2"] = r["t2"], r["t1"]
        r["gamma1"], r["gamma2"] = r["gamma2"], r["gamma1"]
    return rep


def condition3_check(T, pair, t_pairs, gamma_pairs, y_samples=None) -> ConditionReport:
    """Double integral of |Delta K_(t1^2, t2^2)| off the two strips, max over (y1, y2)."""
    L1, L2 = pair.L1, pair.L2
    n1, n2 = pair.shape
    h1, h2 = L1.h, L2.h
    pos = T.out_positions or (L1.axis.centers, L2.axis.centers)
    if y_samples is None:
        y_samples = [(a, b) for a in _default_y(n1, 3) for b in _default_y(n2, 3)]
    rows = []
    for t1, t2 in t_pairs:
        E1 = L1.function(lambda lam: np.exp(-t1 * t1 * lam))
        E2 = L2.function(lambda lam: np.exp(-t2 * t2 * lam))
        best = {g: 0.0 for g in gamma_pairs}
        empty = {g: True for g in gamma_pairs}
        for y1, y2 in y_samples:
            u1 = -E1[:, y1] / h1
            u1[y1] += 1.0 / h1
            u2 = -E2[:, y2] / h2
            u2[y2] += 1.0 / h2
            if T.factors is not None:
                A1, A2 = T.factors
                dK = np.outer(A1 @ u1, A2 @ u2)
            else:
                dK = T(np.outer(u1, u2))
            for g1, g2 in gamma_pairs:
                w1 = region_weights(pos[0], L1.axis.centers[y1], g1 * t1, h1)
                w2 = region_weights(pos[1], L2.axis.centers[y2], g2 * t2, h2)
                if w1.any() and w2.any():
                    empty[(g1, g2)] = False
                val = float(h1 * h2 * (w1 @ np.abs(dK) @ w2))
                best[(g1, g2)] = max(best[(g1, g2)], val)
        for g1, g2 in gamma_pairs:
            rows.append({"t1": t1, "t2": t2, "gamma1": g1, "gamma2": g2,
                         "integral": 0.0 if empty[(g1, g2)] else best[(g1, g2)],
                         "empty": empty[(g1, g2)]})
    return _fit_report("cond3", rows, "both")


# ----------------------------------------------------------------- Riesz

def edge_positions(L: AxisOperator) -> np.ndarray:
    """Sample points of D g: cell edges (Dirichlet) or right edges (periodic)."""
    a = L.axis
    if a.boundary == "dirichlet":
        return a.origin + np.arange(a.n_cells + 1) * a.h
    return a.origin + (np.arange(a.n_cells) + 1.0) * a.h


def _inv_sqrt(L: AxisOperator, project_zero: bool):
    lam = L.eigenvalues
    zero = lam <= 1e-10 * max(1.0, L.lam_max)
    if zero.any() and not project_zero:
        raise ValueError("singular operator")
    s = np.zeros_like(lam)
    s[~zero] = lam[~zero] ** -0.5
    return s


def riesz_axis(L: AxisOperator, project_zero: bool = False) -> np.ndarray:
    """D L^{-1/2} as a dense matrix, (n+1) x n for Dirichlet axes."""
    U = L.eigenvectors
    return L.gradient @ ((U * _inv_sqrt(L, project_zero)) @ U.T)


def riesz_quadrature(L: AxisOperator, n_points: int = 200, s_min=None, s_max=None) -> np.ndarray:
    """(1/sqrt(pi)) int_0^inf D e^{-sL} ds/sqrt(s) by the trapezoid rule in log s."""
    lam = L.eigenvalues
    pos = lam[lam > 1e-10 * max(1.0, L.lam_max)]
    s_min = 1e-10 / L.lam_max if s_min is None else s_min
    s_max = 60.0 / pos.min() if s_max is None else s_max
    s = np.geomspace(s_min, s_max, n_points)
    w = np.full(n_points, np.log(s[1] / s[0]))
    w[[0, -1]] *= 0.5
    sym = (w * np.sqrt(s)) @ np.exp(-np.multiply.outer(s, lam)) / np.sqrt(np.pi)
    U = L.eigenvectors
    return L.gradient @ ((U * sym) @ U.T)


def riesz_tail_report(L: AxisOperator, t_list, gamma_list=GAMMAS, y_samples=None) -> ConditionReport:
    """int_{|x-y|>g t} |k_(t^2,0)(x,y)| dx for the kernel of D L^{-1/2}(I - e^{-t^2 L})."""
    R = riesz_axis(L)
    pos = edge_positions(L)
    ys = _default_y(L.n, 4) if y_samples is None else list(y_samples)
    rows = []
    for t in t_list:
        K = (R - R @ L.function(lambda lam: np.exp(-t * t * lam))) / L.h
        for g in gamma_list:
            best, empty = 0.0, True
            for y in ys:
                w = region_weights(pos, L.axis.centers[y], g * t, L.h)
                if w.any():
                    empty = False
                best = max(best, float(L.h * np.sum(w * np.abs(K[:, y]))))
            rows.append({"t1": t, "t2": 0.0, "gamma1": g, "gamma2": 0.0,
                         "integral": 0.0 if empty else best, "empty": empty})
    return _fit_report("riesz_tail", rows, "gamma1")


def double_riesz(pair: ProductOperatorPair, project_zero: bool = False) -> ProductKernelOperator:
    R1 = riesz_axis(pair.L1, project_zero)
    R2 = riesz_axis(pair.L2, project_zero)
    return ProductKernelOperator.tensor(
        "double_riesz", R1, R2, (pair.L1.h, pair.L2.h),
        (edge_positions(pair.L1), edge_positions(pair.L2)))


def operator_from_symbol(name: str, F, pair: ProductOperatorPair) -> ProductKernelOperator:
    """F(L1, L2) as a ProductKernelOperator (separable symbols become tensors)."""
    S = pair.symbol_table(F)

    def act(f):
        return pair.from_coefficients(S * pair.to_coefficients(f))

    def adj(g):
        return pair.from_coefficients(np.conj(S) * pair.to_coefficients(g))

    return ProductKernelOperator(name, act, adj, (pair.L1.h, pair.L2.h),
                                 (pair.L1.axis.centers, pair.L2.axis.centers))


def atom_image_l1(T: ProductKernelOperator, a) -> float:
    """|T a|_1 with the output cell weights h1 h2."""
    vals = a.values().values if hasattr(a, "values") and callable(a.values) else np.asarray(a)
    out = T(vals)
    return lp_array(out, 1, T.in_h[0] * T.in_h[1])
