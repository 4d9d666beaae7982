"""One-axis self-adjoint operators with a dense spectral calculus.

An :class:`AxisOperator` stores ``L = D^T D + diag(V)`` together with its full
eigendecomposition, so every function of ``L`` is a diagonal scaling in the
eigenbasis.  Kernels use the density convention: the action of an operator
with kernel ``K`` on ``g`` is ``h * K @ g``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import roots_legendre

from .grid import Axis, ScaleGrid

EIG_CLAMP = 1e-10
NEG_KERNEL_TOL = 1e-10


def laplacian_matrices(n: int, h: float = 1.0, boundary: str = "dirichlet"):
    """Gradient ``D`` and ``L0 = D^T D`` for ``n`` cells of width ``h``.

    Dirichlet: ``D`` is (n+1) x n with zero ghost values on both sides, so
    ``L0`` is the familiar tridiag(-1, 2, -1) / h^2.  Periodic: ``D`` is the
    n x n circulant forward difference.
    """
    if boundary == "dirichlet":
        D = np.zeros((n + 1, n))
        i = np.arange(n)
        D[i, i] = -1.0
        D[i + 1, i] = 1.0
        D = -D  # (u_i - u_{i-1}) with u_{-1} = u_n = 0
    elif boundary == "periodic":
        D = -np.eye(n) + np.roll(np.eye(n), 1, axis=1)
    else:
        raise ValueError(f"unknown boundary {boundary!r}")
    D /= h
    return D, D.T @ D


@dataclass(frozen=True)
class Potential:
    samples: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite sample")
        if np.any(v < 0):
            raise ValueError("potential must be non-negative")
        object.__setattr__(self, "samples", v)

    @classmethod
    def zero(cls, axis: Axis) -> "Potential":
        return cls(np.zeros(axis.n_cells))

    @classmethod
    def constant(cls, axis: Axis, v0: float) -> "Potential":
        return cls(np.full(axis.n_cells, float(v0)))

    @classmethod
    def random_bounded(cls, axis: Axis, rng, vmax: float = 1.0) -> "Potential":
        return cls(rng.uniform(0.0, vmax, axis.n_cells))


@dataclass(frozen=True, eq=False)
class AxisOperator:
    axis: Axis
    matrix: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    gradient: np.ndarray = field(repr=False)
    potential: np.ndarray = field(repr=False)

    @classmethod
    def from_matrix(cls, axis, matrix, gradient, potential):
        M = np.asarray(matrix, dtype=float)
        if not np.allclose(M, M.T, atol=1e-12 * np.abs(M).max()):
            raise ValueError("operator matrix is not symmetric")
        lam, U = np.linalg.eigh(M)
        if lam[0] < -EIG_CLAMP * max(1.0, abs(lam[-1])):
            raise ValueError(f"negative eigenvalue {lam[0]:.3e}")
        lam = np.maximum(lam, 0.0)
        return cls(axis, M, lam, U, gradient, np.asarray(potential, dtype=float))

    @property
    def n(self) -> int:
        return self.axis.n_cells

    @property
    def h(self) -> float:
        return self.axis.h

    @property
    def lam_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def has_zero_mode(self) -> bool:
        return bool(self.eigenvalues[0] <= EIG_CLAMP * max(1.0, self.lam_max))

    def symbol(self, F) -> np.ndarray:
        """F evaluated on the spectrum, with a check for non-finite values."""
        vals = np.asarray(F(self.eigenvalues))
        vals = np.broadcast_to(vals, self.eigenvalues.shape)
        bad = ~np.isfinite(vals)
        if bad.any():
            k = int(np.argmax(bad))
            raise ValueError(
                f"symbol is not finite at eigenvalue {self.eigenvalues[k]!r}")
        return vals

    def function(self, F) -> np.ndarray:
        """Dense matrix of F(L) in the cell basis."""
        U = self.eigenvectors
        return (U * self.symbol(F)) @ U.T

    def to_text(self) -> str:
        buf = io.StringIO()
        a = self.axis
        buf.write(f"axis {a.n_cells} {a.h!r} {a.origin!r} {a.boundary}\n")
        buf.write("potential " + " ".join("%.17g" % v for v in self.potential) + "\n")
        buf.write("eigenvalues " + " ".join("%.17g" % v for v in self.eigenvalues) + "\n")
        for row in self.eigenvectors:
            buf.write(" ".join("%.17g" % v for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "AxisOperator":
        lines = text.strip("\n").split("\n")
        _, n, h, origin, boundary = lines[0].split()
        axis = Axis(int(n), float(h), float(origin), boundary)
        V = np.array(lines[1].split()[1:], dtype=float)
        lam = np.array(lines[2].split()[1:], dtype=float)
        U = np.array([ln.split() for ln in lines[3:3 + axis.n_cells]], dtype=float)
        D, _ = laplacian_matrices(axis.n_cells, axis.h, axis.boundary)
        M = (U * lam) @ U.T
        return cls(axis, M, lam, U, D, V)


def build_laplacian(axis: Axis) -> AxisOperator:
    """Free operator ``D^T D`` with the axis boundary condition."""
    D, L0 = laplacian_matrices(axis.n_cells, axis.h, axis.boundary)
    return AxisOperator.from_matrix(axis, L0, D, np.zeros(axis.n_cells))


def build_schrodinger(axis: Axis, V: Potential | np.ndarray | None = None) -> AxisOperator:
    """``-Delta + V`` discretized as ``D^T D + diag(V)``."""
    if V is None:
        return build_laplacian(axis)
    if not isinstance(V, Potential):
        V = Potential(V)
    if V.samples.shape != (axis.n_cells,):
        raise ValueError("potential length does not match axis")
    D, L0 = laplacian_matrices(axis.n_cells, axis.h, axis.boundary)
    return AxisOperator.from_matrix(axis, L0 + np.diag(V.samples), D, V.samples)


def spectral_apply(F, L: AxisOperator, g: np.ndarray) -> np.ndarray:
    """U F(Lambda) U^T g; ``g`` may carry extra trailing columns."""
    U = L.eigenvectors
    s = L.symbol(F)
    c = U.T @ g
    c = c * (s[:, None] if c.ndim == 2 else s)
    return U @ c


def heat_kernel(L: AxisOperator, t: float) -> np.ndarray:
    """p_t(x, y) in the density convention (action = h * p_t @ g)."""
    if not t > 0:
        raise ValueError("t must be positive")
    K = L.function(lambda lam: np.exp(-t * lam)) / L.h
    K = 0.5 * (K + K.T)
    if L.axis.boundary == "dirichlet" or not L.has_zero_mode:
        low = K.min()
        if low < -NEG_KERNEL_TOL * max(1.0, np.abs(K).max()):
            raise ValueError(f"heat kernel has negative entry {low:.3e}")
        K = np.maximum(K, 0.0)
    return K


def heat_derivative_kernel(L: AxisOperator, t: float, k: int = 1) -> np.ndarray:
    """Kernel of L^k e^{-tL}, i.e. (-d/dt)^k p_t."""
    if not t > 0:
        raise ValueError("t must be positive")
    return L.function(lambda lam: lam ** k * np.exp(-t * lam)) / L.h


def wave_kernel(L: AxisOperator, t: float) -> np.ndarray:
    """Kernel of cos(t sqrt(L))."""
    if not t > 0:
        raise ValueError("t must be positive")
    return L.function(lambda lam: np.cos(t * np.sqrt(lam))) / L.h


# ------------------------------------------------------------- Gaussian bound

@dataclass(frozen=True)
class HeatKernelFit:
    C: float
    c: float
    max_violation: float
    k: int = 0
    worst: tuple = ()


def default_time_samples(L: AxisOperator, n_times: int = 20) -> np.ndarray:
    return np.geomspace(L.h ** 2, (L.axis.length / 4) ** 2, n_times)


def fit_gaussian_bound(L: AxisOperator, t_samples=None, *, k: int = 0,
                       margin_cells: int = 4, c_grid=None, c_max: float = 64.0,
                       C_max: float = 1e3, tol: float = 1e-10) -> HeatKernelFit:
    """Fit p_t(x,y) <= C t^{-1/2-k} exp(-|x-y|^2/(c t)) + tol.

    For every c on a geometric sweep the smallest admissible C is exact (a
    max over samples).  Among those pairs we keep the one with the smallest
    Gaussian mass C*sqrt(c); minimizing C alone always drifts to c -> 0,
    where the bound degenerates into a sup bound.  ``k`` selects the
    time-derivative kernel L^k e^{-tL}.
    """
    if t_samples is None:
        ts = default_time_samples(L)
    elif isinstance(t_samples, ScaleGrid):
        ts = t_samples.values
    else:
        ts = np.asarray(t_samples, dtype=float)
    cs = np.geomspace(0.5, c_max, 241) if c_grid is None else np.asarray(c_grid)
    x = L.axis.centers
    if L.axis.boundary == "dirichlet":
        lo, hi = x[0] - L.h / 2, x[-1] + L.h / 2
        inner = (x - lo > margin_cells * L.h) & (hi - x > margin_cells * L.h)
    else:
        inner = np.ones(L.n, dtype=bool)
    xi = x[inner]
    d = np.abs(xi[:, None] - xi[None, :])
    if L.axis.boundary == "periodic":
        d = np.minimum(d, L.axis.length - d)
    d2 = d ** 2

    U = L.eigenvectors
    best = np.full(cs.size, -np.inf)
    arg = [None] * cs.size
    for t in ts:
        s = L.eigenvalues ** k * np.exp(-t * L.eigenvalues)
        p = ((U[inner] * s) @ U[inner].T) / L.h
        if k:
            p = np.abs(p)
        ok = p > tol
        if not ok.any():
            continue
        logp = np.log(p[ok] - tol) + (0.5 + k) * np.log(t)
        dd = d2[ok]
        # log C(c) candidates: rows are c values
        vals = logp[None, :] + dd[None, :] / (cs[:, None] * t)
        j = vals.argmax(axis=1)
        m = vals[np.arange(cs.size), j]
        upd = m > best
        idx = np.flatnonzero(ok.ravel())
        for ci in np.flatnonzero(upd):
            r, col = divmod(int(idx[j[ci]]), xi.size)
            arg[ci] = (float(t), float(xi[r]), float(xi[col]))
        best = np.maximum(best, m)
    Cs = np.exp(best) * (1 + 1e-12)
    feasible = Cs <= C_max
    if not feasible.any():
        ci = int(np.argmin(Cs))
        raise ValueError(
            f"Gaussian bound violated: C={Cs[ci]:.4g} at c={cs[ci]:.4g}, "
            f"worst (t, x, y) = {arg[ci]}")
    obj = np.where(feasible, Cs * np.sqrt(cs), np.inf)
    ci = int(np.argmin(obj))
    C, c = float(Cs[ci]), float(cs[ci])

    viol = -np.inf
    for t in ts:
        s = L.eigenvalues ** k * np.exp(-t * L.eigenvalues)
        p = ((U[inner] * s) @ U[inner].T) / L.h
        if k:
            p = np.abs(p)
        bound = C * t ** (-0.5 - k) * np.exp(-d2 / (c * t)) + tol
        viol = max(viol, float((p - bound).max()))
    return HeatKernelFit(C, c, viol, k, arg[ci] or ())


def feynman_kac_gap(L: AxisOperator, L0: AxisOperator, t: float) -> float:
    """max(p_t^L - p_t^{L0}); non-positive when L = L0 + V with V >= 0."""
    return float((heat_kernel(L, t) - heat_kernel(L0, t)).max())


# ------------------------------------------------------------ spectral window

@dataclass(frozen=True)
class SpectralWindow:
    """Even bump phi on (-1, 1) with integral 2 pi, and Phi = its Fourier transform.

    Phi^{(m)}(s) = int phi(xi) xi^m cos(s xi + m pi/2) dxi, evaluated by
    Gauss-Legendre quadrature.  The node count grows with |s| so the
    oscillatory integrand stays resolved.
    """

    n_nodes: int = 512

    @cached_property
    def _norm(self) -> float:
        xi, w = _gauss(1024)
        return 2 * np.pi / np.sum(w * np.exp(-1.0 / (1.0 - xi ** 2)))

    def phi(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        inside = np.abs(xi) < 1
        out[inside] = self._norm * np.exp(-1.0 / (1.0 - xi[inside] ** 2))
        return out

    def Phi(self, s, m: int = 0):
        s = np.asarray(s, dtype=float)
        smax = float(np.abs(s).max()) if s.size else 0.0
        nodes = max(self.n_nodes, 1 << int(np.ceil(np.log2(2 * smax + 64))))
        xi, w = _gauss(nodes)
        wt = w * self.phi(xi) * xi ** m
        flat = s.ravel()
        out = np.empty(flat.size)
        step = max(1, 2 ** 22 // nodes)
        for a in range(0, flat.size, step):
            arg = np.multiply.outer(flat[a:a + step], xi) + m * np.pi / 2
            out[a:a + step] = np.cos(arg) @ wt
        return out.reshape(s.shape)

    def phi_derivative_max(self, order: int) -> float:
        """max |phi^{(order)}| on a fine grid (finite differences of the bump)."""
        z = np.linspace(-1, 1, 20001)
        dz = z[1] - z[0]
        v = self.phi(z)
        for _ in range(order):
            v = np.gradient(v, dz)
        return float(np.abs(v).max())


_GAUSS_CACHE: dict[int, tuple] = {}


def _gauss(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = roots_legendre(n)
    return _GAUSS_CACHE[n]


def window_kernel(L: AxisOperator, t: float, window: SpectralWindow | None = None,
                  kappa: int = 0, m: int = 0) -> np.ndarray:
    """Kernel of (t^2 L)^kappa Phi^{(m)}(t sqrt(L))."""
    window = window or SpectralWindow()
    r = t * np.sqrt(L.eigenvalues)
    s = (r * r) ** kappa * window.Phi(r, m)
    U = L.eigenvectors
    return (U * s) @ U.T / L.h


def _distance(L: AxisOperator) -> np.ndarray:
    x = L.axis.centers
    d = np.abs(x[:, None] - x[None, :])
    if L.axis.boundary == "periodic":
        d = np.minimum(d, L.axis.length - d)
    return d


def propagation_leakage(L: AxisOperator, t: float, buffer: float = 0.0,
                        window: SpectralWindow | None = None, kappa: int = 0,
                        m: int = 0) -> float:
    """max |K(x, y)| over |x - y| > t + buffer for K the windowed kernel."""
    if not t > 0:
        raise ValueError("t must be positive")
    K = window_kernel(L, t, window, kappa, m)
    out = _distance(L) > t + buffer
    return float(np.abs(K[out]).max()) if out.any() else 0.0


def on_cone_max(L: AxisOperator, t: float, window: SpectralWindow | None = None,
                kappa: int = 0, m: int = 0) -> float:
    """max |K(x, y)| over |x - y| <= t."""
    K = window_kernel(L, t, window, kappa, m)
    return float(np.abs(K[_distance(L) <= t]).max())


def quadratic_sum(L: AxisOperator, g: np.ndarray, scales: ScaleGrid, psi=None) -> float:
    """sum_t |psi(t sqrt L) g|^2 dt/t with psi(u) = u^2 exp(-u^2) by default."""
    if psi is None:
        def psi(u):
            return u * u * np.exp(-u * u)
    c = L.eigenvectors.T @ g
    r = np.sqrt(L.eigenvalues)
    vals = psi(np.multiply.outer(scales.values, r)) ** 2
    return float(np.sum(vals @ (c * c)) * scales.log_step * L.h)
