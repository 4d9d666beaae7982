"""Joint spectral multipliers: dyadic windows, Sobolev norms of windowed
symbols, the Marcinkiewicz constant, and off-diagonal kernel checks.

Symbols are functions F(l1, l2) of the two spectral variables.  Sobolev norms
are evaluated on a rescaled box: a windowed variable lives in [0, 1.25]; an
unwindowed ("open") one is sampled on [-1, 3], extended to negative values by
a C^2 reflection and rolled off smoothly outside [-1/2, 2].
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import lp_array
from .linalg import power_iteration
from .product import ProductOperatorPair
from .singular import fit_decay, region_weights

# --------------------------------------------------------------- windows

def smooth_step(v):
    """C-infinity step: 0 for v <= 0, 1 for v >= 1."""
    v = np.asarray(v, dtype=float)
    a = np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)
    w = 1.0 - v
    b = np.where(w > 0, np.exp(-1.0 / np.where(w > 0, w, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class DyadicWindow:
    """omega(2^u) = rho(u + 2) - rho(u + 1): support (1/4, 1), dyadic partition of unity."""

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        pos = lam > 0
        u = np.log2(np.where(pos, lam, 1.0))
        return np.where(pos, smooth_step(u + 2) - smooth_step(u + 1), 0.0)

    def partition_residual(self, lam, levels: int = 80) -> float:
        """max |sum_l omega(2^-l lam) - 1| over the given positive lam."""
        lam = np.asarray(lam, dtype=float)
        ell = np.arange(-levels, levels + 1)
        s = self(np.multiply.outer(2.0 ** -ell, lam)).sum(axis=0)
        return float(np.abs(s - 1.0).max())

    def level_range(self, lam_min: float, lam_max: float) -> range:
        """Levels l with omega(2^-l .) non-zero somewhere on [lam_min, lam_max]."""
        return range(int(np.floor(np.log2(lam_min))), int(np.ceil(np.log2(lam_max))) + 2)


def window_pieces(F, window: DyadicWindow, lam1, lam2, levels) -> np.ndarray:
    """omega(2^-l l1) F(l1, l2) tabulated on the spectral grid, one slice per level."""
    l1 = np.asarray(lam1, dtype=float)[:, None]
    l2 = np.asarray(lam2, dtype=float)[None, :]
    Fv = np.broadcast_to(F(l1, l2), (l1.size, l2.size))
    return np.stack([window(2.0 ** -ell * l1) * Fv for ell in levels])


# --------------------------------------------------------------- Sobolev

@dataclass(frozen=True)
class SobolevParams:
    s1: float = 1.25
    s2: float = 1.25
    resolution: int = 256       # samples per length 2 of a rescaled variable
    padding: int = 4
    refinements: int = 2        # resolution doublings tried before "undersampled"

    def __post_init__(self):
        if self.s1 < 0 or self.s2 < 0:
            raise ValueError("Sobolev orders must be non-negative")
        if self.resolution < 8 or self.padding < 1:
            raise ValueError("resolution >= 8 and padding >= 1 required")

    @property
    def dx(self) -> float:
        return 2.0 / self.resolution

    def with_orders(self, s1, s2) -> "SobolevParams":
        return SobolevParams(s1, s2, self.resolution, self.padding, self.refinements)


def sobolev_norm(G: np.ndarray, dx: float, dy: float, params: SobolevParams,
                 tail_tol: float = 0.01, tail_floor: float = 1e-8) -> float:
    """(sum |G^(xi)|^2 (1+xi1^2)^s1 (1+xi2^2)^s2 dxi / (2 pi)^2)^{1/2}.

    ``G`` holds samples on a uniform grid enclosing its support; it is zero
    padded by ``params.padding`` and transformed with continuum normalization.
    The outer quarter of the band must hold at most ``tail_tol`` of the norm
    (or less than ``tail_floor`` in absolute terms).
    """
    G = np.asarray(G)
    if not np.all(np.isfinite(G)):
        raise ValueError("non-finite sample")
    if not G.any():
        return 0.0
    n1, n2 = G.shape
    N1, N2 = params.padding * n1, params.padding * n2
    if np.iscomplexobj(G):
        Gh = np.fft.fft2(G, s=(N1, N2)) * dx * dy
        xi2 = 2 * np.pi * np.fft.fftfreq(N2, dy)
        mult = np.ones(N2)
    else:
        Gh = np.fft.rfft2(G, s=(N1, N2)) * dx * dy
        xi2 = 2 * np.pi * np.fft.rfftfreq(N2, dy)
        mult = np.full(xi2.size, 2.0)          # conjugate-symmetric half
        mult[0] = 1.0
        if N2 % 2 == 0:
            mult[-1] = 1.0
    xi1 = 2 * np.pi * np.fft.fftfreq(N1, dx)
    w = np.outer((1 + xi1 ** 2) ** params.s1, mult * (1 + xi2 ** 2) ** params.s2)
    e = np.abs(Gh) ** 2 * w
    total = e.sum()
    if not total > 0:
        return 0.0
    # outer quarter of the resolved band
    outer = (np.abs(xi1)[:, None] > 0.75 * np.pi / dx) | (np.abs(xi2)[None, :] > 0.75 * np.pi / dy)
    dxi = (2 * np.pi) ** 2 / (N1 * dx * N2 * dy)
    tail = np.sqrt(e[outer].sum() * dxi) / (2 * np.pi)
    if tail > max(tail_tol * np.sqrt(total * dxi) / (2 * np.pi), tail_floor):
        raise ValueError("undersampled symbol")
    return float(np.sqrt(total * dxi) / (2 * np.pi))


_OPEN = (-1.0, 3.0)
_WINDOWED = (0.0, 1.25)


def _axis_samples(windowed: bool, dx: float) -> tuple[np.ndarray, float]:
    """Sample points of one rescaled variable; open axes are sampled twice as
    finely since the reflection compresses F by a factor of three."""
    lo, hi = _WINDOWED if windowed else _OPEN
    if not windowed:
        dx = dx / 2
    n = int(round((hi - lo) / dx))
    return lo + (np.arange(n) + 0.5) * dx, dx


def _rolloff(v):
    return smooth_step(2 * (v + 1)) * (1 - smooth_step(v - 2))


def _reflected(F, v, axis: int, other):
    """F on [0, inf) in variable ``v`` extended by 6F(x) - 8F(2x) + 3F(3x) at -x."""
    def ev(x):
        return F(x, other) if axis == 0 else F(other, x)
    neg = v < 0
    x = np.where(neg, -v, v)
    return np.where(neg, 6 * ev(x) - 8 * ev(2 * x) + 3 * ev(3 * x), ev(x))


def sample_symbol(G, windowed: tuple[bool, bool], dx: float):
    """Samples of G on the rescaled box, extended across 0 on open axes.

    Returns the sample array and the two spacings.
    """
    v1, d1 = _axis_samples(windowed[0], dx)
    v2, d2 = _axis_samples(windowed[1], dx)
    v1, v2 = v1[:, None], v2[None, :]
    if windowed[0] and windowed[1]:
        vals = G(v1, v2)
    elif windowed[0]:
        vals = _reflected(G, v2, 1, v1) * _rolloff(v2)
    elif windowed[1]:
        vals = _reflected(G, v1, 0, v2) * _rolloff(v1)
    else:
        def G1(a, b):
            return _reflected(G, b, 1, a)
        vals = _reflected(G1, v1, 0, v2) * _rolloff(v1) * _rolloff(v2)
    return np.broadcast_to(vals, (v1.size, v2.size)), d1, d2


def symbol_sobolev(G, windowed: tuple[bool, bool], params: SobolevParams) -> float:
    """Sobolev norm of the sampled symbol, doubling the resolution while undersampled."""
    res = params.resolution
    for k in range(params.refinements + 1):
        vals, d1, d2 = sample_symbol(G, windowed, 2.0 / res)
        try:
            return sobolev_norm(vals, d1, d2, params)
        except ValueError as e:
            if "undersampled" not in str(e) or k == params.refinements:
                raise
        res *= 2


# --------------------------------------------------------------- symbols

@dataclass(frozen=True)
class MultiplierSymbol:
    name: str
    evaluator: Callable
    smoothness: str = "marcinkiewicz"     # or "divergent"

    def __call__(self, l1, l2):
        return self.evaluator(np.asarray(l1, dtype=float), np.asarray(l2, dtype=float))

    @property
    def at_origin(self) -> float:
        return float(self(0.0, 0.0))


def _ratio(l1, l2):
    s = l1 + l2
    return np.divide(l1, s, out=np.zeros(np.broadcast(l1, l2).shape), where=s > 0)


SYMBOLS = {
    "one": MultiplierSymbol("one", lambda a, b: np.ones(np.broadcast(a, b).shape)),
    "heat": MultiplierSymbol("heat", lambda a, b: np.exp(-a - b)),
    "ratio": MultiplierSymbol("ratio", _ratio),
    "riesz-like": MultiplierSymbol("riesz-like", lambda a, b: a * b / ((1 + a) * (1 + b))),
    "sin-divergent": MultiplierSymbol(
        "sin-divergent", lambda a, b: np.sin(a) * np.ones(np.broadcast(a, b).shape),
        "divergent"),
}


def get_symbol(name: str) -> MultiplierSymbol:
    try:
        return SYMBOLS[name]
    except KeyError:
        raise ValueError(f"unknown symbol {name!r}; choose from {sorted(SYMBOLS)}") from None


# ----------------------------------------------------- Marcinkiewicz constant

def dyadic_t_grid(lam_min: float, lam_max: float, per_octave: int = 2,
                  max_points: int = 40) -> np.ndarray:
    """t = 2^(k/per_octave) with omega(./t) meeting [lam_min, lam_max]."""
    lo = int(np.floor(per_octave * np.log2(lam_min)))
    hi = int(np.ceil(per_octave * np.log2(4 * lam_max)))
    k = np.arange(lo, hi + 1)
    if k.size > max_points:
        k = k[(k.size - max_points) // 2:][:max_points]
    return 2.0 ** (k / per_octave)


@dataclass
class MarcinkiewiczReport:
    value: float
    terms: tuple                 # the three suprema
    profiles: dict = field(repr=False)   # term -> (t values, norms)
    divergent: bool = False
    reasons: list = field(default_factory=list)

    @property
    def finite(self) -> bool:
        return not self.divergent and np.isfinite(self.value)


def _edge_slope(t, v, k=4) -> float:
    """Log-log growth rate over the last ``k`` points of the t grid.

    Only the upper end moves when the grid is refined (it tracks lam_max); the
    lower end is pinned by lam_min, which stays bounded below.
    """
    t, v = np.asarray(t, float), np.asarray(v, float)
    if t.size < 2:
        return 0.0
    k = min(k, t.size)
    lt, lv = np.log(t[-k:]), np.log(np.maximum(v[-k:], 1e-300))
    return float(np.polyfit(lt, lv, 1)[0])


def marcinkiewicz_constant(F, window: DyadicWindow, params: SobolevParams,
                           t1_grid, t2_grid, *, growth_tol: float = 0.5) -> MarcinkiewiczReport:
    """Sum of the three windowed Sobolev suprema of the dilated symbol.

    A term is flagged divergent when the symbol is unresolvable at some t or
    its norms grow faster than t^growth_tol at an end of the t grid.
    """
    t1_grid = np.asarray(t1_grid, dtype=float)
    t2_grid = np.asarray(t2_grid, dtype=float)
    profiles, terms, reasons = {}, [], []

    def measure(label, ts, make, windowed):
        vals = []
        for t in ts:
            try:
                vals.append(symbol_sobolev(make(t), windowed, params))
            except ValueError as e:
                if "undersampled" not in str(e):
                    raise
                vals.append(np.inf)
        vals = np.array(vals)
        profiles[label] = (ts, vals)
        if not np.all(np.isfinite(vals)):
            reasons.append(f"{label}: undersampled at t = {ts[~np.isfinite(vals)][0]:.6g}")
            return np.inf
        if ts.ndim == 1 and _edge_slope(ts, vals) > growth_tol:
            reasons.append(f"{label}: growing at the edge of the t grid")
        return float(vals.max())

    terms.append(measure("eta1", t1_grid,
                         lambda t: (lambda a, b: window(a) * F(t * a, b)), (True, False)))
    terms.append(measure("eta2", t2_grid,
                         lambda t: (lambda a, b: window(b) * F(a, t * b)), (False, True)))
    pairs = np.array([(a, b) for a in t1_grid for b in t2_grid])
    vals = []
    for a, b in pairs:
        try:
            vals.append(symbol_sobolev(lambda x, y, a=a, b=b: window(x) * window(y) * F(a * x, b * y),
                                       (True, True), params))
        except ValueError as e:
            if "undersampled" not in str(e):
                raise
            vals.append(np.inf)
    vals = np.array(vals).reshape(t1_grid.size, t2_grid.size)
    profiles["eta12"] = ((t1_grid, t2_grid), vals)
    if not np.all(np.isfinite(vals)):
        reasons.append("eta12: undersampled")
        terms.append(np.inf)
    else:
        for row, ts in ((vals.max(axis=1), t1_grid), (vals.max(axis=0), t2_grid)):
            if _edge_slope(ts, row) > growth_tol:
                reasons.append("eta12: growing at the edge of the t grid")
                break
        terms.append(float(vals.max()))
    return MarcinkiewiczReport(float(sum(terms)), tuple(terms), profiles, bool(reasons), reasons)


def growth_profile(F, window: DyadicWindow, params: SobolevParams, t_grid) -> np.ndarray:
    """|eta1 delta_(t,1) F| in W^2 for each t; used to measure divergence rates."""
    return np.array([symbol_sobolev(lambda a, b, t=t: window(a) * F(t * a, b), (True, False), params)
                     for t in t_grid])


# ----------------------------------------------------------- atom harness

@dataclass
class MultiplierAtomReport:
    symbol: str
    max_l1: float
    max_l1_reduced: float        # F - F(0,0) part
    origin_value: float
    ratio_to_constant: float
    op_norm: float
    sup_symbol: float
    l1_values: np.ndarray = field(repr=False)


def multiplier_operator_norm(F, pair: ProductOperatorPair, **kw) -> float:
    S = pair.symbol_table(F)

    def A(v):
        return pair.from_coefficients(S * pair.to_coefficients(v))

    return power_iteration(A, A, pair.shape, **kw)


def multiplier_atom_harness(F: MultiplierSymbol, atoms, pair: ProductOperatorPair,
                            constant: float | None = None,
                            project_zero: bool = False) -> MultiplierAtomReport:
    """Apply F(L1, L2) = (F - F(0,0)) + F(0,0) I to each atom and record L^1 norms."""
    c0 = F.at_origin
    S_full = pair.symbol_table(F)
    S = S_full - c0
    if project_zero:
        P = pair.zero_mode_projector()
        S, S_full = S * P, S_full * P
    h = pair.L1.h * pair.L2.h
    full, reduced = [], []
    for a in atoms:
        coef = a.a_coef()
        reduced.append(lp_array(pair.from_coefficients(S * coef), 1, h))
        # the full symbol directly: S + c0 cancels when F is tiny on the spectrum
        full.append(lp_array(pair.from_coefficients(S_full * coef), 1, h))
    full = np.array(full)
    sup = float(np.abs(S_full).max())
    op = multiplier_operator_norm(lambda a, b: S_full, pair) if sup > 0 else 0.0
    ratio = float(full.max() / constant) if constant else float("nan")
    return MultiplierAtomReport(F.name, float(full.max()), float(max(reduced)), c0,
                                ratio, op, sup, full)


# ----------------------------------------------------------- off-diagonal

@dataclass
class OffDiagonalReport:
    case: int
    R: tuple
    rows: list                   # dicts t, gamma, integral (square root of the weighted L^2)
    fit_C: float
    fit_eta: float
    residual: float
    sobolev_factor: float

    def integrals(self, gamma) -> dict:
        return {r["t"]: r["integral"] for r in self.rows if r["gamma"] == gamma}

    def small_t_ratios(self, gamma) -> np.ndarray:
        """integral / (t R)^2 across t (both factors for case 3); flat when the
        quadratic scaling holds."""
        d = self.integrals(gamma)
        if self.case == 3:
            scale = (self.R[0] * self.R[1]) ** 2
            return np.array([v / (t ** 4 * scale) for t, v in sorted(d.items())])
        R = self.R[0] if self.case != 2 else self.R[1]
        return np.array([v / (t * R) ** 2 for t, v in sorted(d.items())])


def cutoff(lam, R2: float):
    """Smooth cut to [0, R^2]: 1 below R^2/2, 0 above R^2."""
    return 1.0 - smooth_step(2.0 * np.asarray(lam) / R2 - 1.0)


def _windowed_symbol(F, case, R):
    R1, R2 = R
    if case == 1:
        return lambda a, b: F(a, b) * cutoff(a, R1 ** 2)
    if case == 2:
        return lambda a, b: F(a, b) * cutoff(b, R2 ** 2)
    if case == 3:
        return lambda a, b: F(a, b) * cutoff(a, R1 ** 2) * cutoff(b, R2 ** 2)
    raise ValueError(f"unsupported support pattern (case {case!r})")


def prop53_offdiag_check(F, pair: ProductOperatorPair, case: int, t_list, gamma_list,
                         R: tuple, s: tuple = (1.5, 1.5), eps: float = 0.1,
                         params: SobolevParams | None = None, y_samples=None,
                         with_sobolev: bool = True) -> OffDiagonalReport:
    """Weighted off-diagonal L^2 integrals of F(L1,L2)(I - e^{-t^2 L}) kernels.

    Case 1 and 2 use the operator norm of the kernel slice (diagonal in the
    other axis' eigenbasis, so exact); case 3 uses the pointwise kernel with
    t = (t, t).  ``integral`` is the square root of the weighted squared
    integral, maximized over the y samples.
    """
    Fw = _windowed_symbol(F, case, R)
    if case == 2:
        swapped = ProductOperatorPair(pair.L2, pair.L1)
        rep = prop53_offdiag_check(lambda a, b: F(b, a), swapped, 1, t_list, gamma_list,
                                   (R[1], R[0]), (s[1], s[0]), eps, params, y_samples,
                                   with_sobolev)
        rep.case, rep.R = 2, tuple(R)
        return rep
    L1, L2 = pair.L1, pair.L2
    G = pair.symbol_table(Fw)
    U1, U2 = L1.eigenvectors, L2.eigenvectors
    h1, h2 = L1.h, L2.h
    x1, x2 = L1.axis.centers, L2.axis.centers
    n1, n2 = pair.shape
    if y_samples is None:
        y1s = np.linspace(n1 // 4, n1 - 1 - n1 // 4, 3).astype(int)
        y2s = np.linspace(n2 // 4, n2 - 1 - n2 // 4, 3).astype(int)
        y_samples = [(a, b) for a in y1s for b in y2s] if case == 3 else [(a, n2 // 2) for a in y1s]
    R1, R2 = R
    rows = []
    for t in t_list:
        damp1 = 1 - np.exp(-t * t * L1.eigenvalues)
        if case == 1:
            Gt = G * damp1[:, None]
        else:
            Gt = G * np.outer(damp1, 1 - np.exp(-t * t * L2.eigenvalues))
        best = {g: 0.0 for g in gamma_list}
        for y1, y2 in y_samples:
            if case == 1:
                C = (U1 * U1[y1]) @ Gt / h1          # (x1, k): slice eigenvalues
                op = np.abs(C).max(axis=1)
                wt = (1 + R1 * np.abs(x1 - x1[y1])) ** s[0]
                for g in gamma_list:
                    w = region_weights(x1, x1[y1], g * t, h1)
                    best[g] = max(best[g], float(np.sqrt(h1 * np.sum(w * wt * op ** 2))))
            else:
                K = ((U1 * U1[y1]) @ Gt @ (U2 * U2[y2]).T) / (h1 * h2)
                wt1 = (1 + R1 * np.abs(x1 - x1[y1])) ** s[0]
                wt2 = (1 + R2 * np.abs(x2 - x2[y2])) ** s[1]
                for g in gamma_list:
                    w1 = region_weights(x1, x1[y1], g * t, h1) * wt1
                    w2 = region_weights(x2, x2[y2], g * t, h2) * wt2
                    val = h1 * h2 * (w1 @ (K ** 2) @ w2)
                    best[g] = max(best[g], float(np.sqrt(val)))
        for g in gamma_list:
            rows.append({"t": float(t), "gamma": float(g), "integral": best[g]})
    g_all = [r["gamma"] for r in rows]
    if case == 3:
        g_all = [g * g for g in g_all]
    C, eta, res = fit_decay(g_all, [r["integral"] ** 2 for r in rows])
    factor = float("nan")
    if with_sobolev:
        params = params or SobolevParams()
        orders = ((s[0] + 1 + eps) / 2, s[1] / 2) if case == 1 else \
                 ((s[0] + 1 + eps) / 2, (s[1] + 1 + eps) / 2)
        scale2 = 1.0 if case == 1 else R2 ** 2
        factor = symbol_sobolev(lambda a, b: Fw(R1 ** 2 * a, scale2 * b), (False, False),
                                params.with_orders(*orders))
    return OffDiagonalReport(case, tuple(R), rows, C, eta, res, factor)
