"""Tent-space atoms, the pi lift to Hardy atoms, and f = sum lambda_j a_j.

Tent atoms are stored sparsely (flat cell indices into the (y1, y2, t1, t2)
array) because a decomposition produces one atom per level and each level
touches only part of the half-space.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .grid import (DyadicRectangle, GridFunction, OpenSet, ScaleGrid, enlarge,
                   lp_array, maximal_dyadic_subrectangles)
from .operators import SpectralWindow
from .product import ProductOperatorPair, psi_area
from .square import (TentFunction, cone_halfwidth,
                     tent_a_functional, tent_norm, _tent_from_mask)

TENT_DILATE = 5.0
ATOM_DILATE = 5.0
SUPPORT_BUFFER = 8


# ------------------------------------------------------------------ tent atoms

@dataclass(frozen=True, eq=False)
class TentAtom:
    omega: OpenSet
    scales1: ScaleGrid
    scales2: ScaleGrid
    index: np.ndarray          # flat indices into (n1, n2, T1, T2)
    values: np.ndarray
    labels: np.ndarray         # piece number of every stored cell
    rects: tuple               # piece keys, R in m(omega)
    tent_dilate: float = TENT_DILATE

    @property
    def shape(self):
        n1, n2 = self.omega.shape
        return (n1, n2, len(self.scales1), len(self.scales2))

    def _dense(self, mask=None) -> np.ndarray:
        out = np.zeros(int(np.prod(self.shape)), dtype=self.values.dtype)
        if mask is None:
            out[self.index] = self.values
        else:
            out[self.index[mask]] = self.values[mask]
        return out.reshape(self.shape)

    def dense(self) -> TentFunction:
        return TentFunction(self.omega.axis1, self.omega.axis2, self.scales1,
                            self.scales2, self._dense())

    def piece(self, i: int) -> TentFunction:
        return TentFunction(self.omega.axis1, self.omega.axis2, self.scales1,
                            self.scales2, self._dense(self.labels == i))

    def _cell_weights(self) -> np.ndarray:
        n1, n2, T1, T2 = self.shape
        _, _, s, u = np.unravel_index(self.index, self.shape)
        h = self.omega.axis1.h * self.omega.axis2.h
        return h * self.scales1.log_step * self.scales2.log_step * np.ones_like(s, dtype=float)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2 * self._cell_weights())))

    def piece_norms(self) -> np.ndarray:
        e = np.abs(self.values) ** 2 * self._cell_weights()
        return np.sqrt(np.bincount(self.labels, weights=e, minlength=len(self.rects)))

    def coordinates(self):
        return np.unravel_index(self.index, self.shape)


def _dilated_tent_factors(rect: DyadicRectangle, shape, m1, m2, factor):
    """Per-axis membership of (y_i, t_i) in T(factor * R), split by axis."""
    s1, s2 = rect.dilate_slices(shape, factor)
    out = []
    for s, m, n in ((s1, m1, shape[0]), (s2, m2, shape[1])):
        y = np.arange(n)[:, None]
        lo = np.maximum(y - m[None, :], 0)
        hi = np.minimum(y + m[None, :], n - 1)
        out.append((lo >= s.start) & (hi <= s.stop - 1))
    return out


def tent_atom_check(atom: TentAtom, rtol: float = 1e-12) -> dict:
    """Measured slack of the tent-atom conditions (positive slack = satisfied)."""
    meas = atom.omega.measure
    shape = atom.omega.shape
    m1 = cone_halfwidth(atom.scales1.values, atom.omega.axis1.h)
    m2 = cone_halfwidth(atom.scales2.values, atom.omega.axis2.h)
    y1, y2, s, u = atom.coordinates()
    outside = 0
    for i, R in enumerate(atom.rects):
        f1, f2 = _dilated_tent_factors(R, shape, m1, m2, atom.tent_dilate)
        sel = atom.labels == i
        outside += int(np.sum(~(f1[y1[sel], s[sel]] & f2[y2[sel], u[sel]])))
    norm = atom.l2_norm()
    pieces = atom.piece_norms()
    return {
        "size": meas ** -0.5 * (1 + rtol) - norm,
        "piece_sum": meas ** -1 * (1 + rtol) - float(np.sum(pieces ** 2)),
        "cells_outside_tents": outside,
    }


def tent_decompose(F: TentFunction, *, threshold: float = 0.5,
                   tent_dilate: float = TENT_DILATE, depth: int = 64,
                   aperture: float = 1.0) -> list[tuple[float, TentAtom]]:
    """Split F into lambda_j A_j with A_j = F 1_{S_j} / lambda_j.

    Levels are Omega_j = {AF > 2^j}; S_j = T(Omega*_j) minus T(Omega*_{j+1})
    with Omega* = enlarge(Omega, threshold).  At most ``depth`` levels below
    the top are kept; the bottom level uses {AF > 0} so every cell of the
    support still lands in some S_j.
    """
    vals = F.values
    if not np.any(vals):
        return []
    AF = tent_a_functional(F, aperture).values
    top = int(np.floor(np.log2(AF.max())))
    pos = AF[AF > 0]
    low = max(int(np.floor(np.log2(pos.min()))), top - depth)
    m1 = cone_halfwidth(F.scales1.values, F.axis1.h, aperture)
    m2 = cone_halfwidth(F.scales2.values, F.axis2.h, aperture)
    shape4 = vals.shape
    flat = vals.ravel()
    support = flat != 0

    levels = list(range(low, top + 1))
    stars = []
    for j in levels:
        mask = AF > 0 if j == low else AF > 2.0 ** j
        stars.append(enlarge(OpenSet(F.axis1, F.axis2, mask), threshold)
                     if mask.any() else None)

    def tent(q):
        if q >= len(stars) or stars[q] is None:
            return None
        return _tent_from_mask(stars[q].mask, m1, m2).ravel()

    # the tents are nested, so S_q = T_q minus T_{q+1}; stream them pairwise
    owner = np.full(flat.size, -1)
    cur = tent(0)
    for q in range(len(levels)):
        nxt = tent(q + 1)
        if cur is not None:
            sel = cur & support
            if nxt is not None:
                sel &= ~nxt
            owner[sel] = q
        cur = nxt
    left = np.flatnonzero(support & (owner < 0))
    if left.size:
        # fallback: the coarsest level whose enlarged set holds the base point
        y1, y2, _, _ = np.unravel_index(left, shape4)
        for q, star in enumerate(stars):
            if star is None:
                continue
            hit = (owner[left] < 0) & star.mask[y1, y2]
            owner[left[hit]] = q
        owner[left[owner[left] < 0]] = 0

    h = F.axis1.h * F.axis2.h
    wcell = h * F.scales1.log_step * F.scales2.log_step
    out = []
    for q, star in enumerate(stars):
        idx = np.flatnonzero(owner == q)
        if idx.size == 0:
            continue
        piece_vals = flat[idx]
        lam = float(np.sqrt(np.sum(np.abs(piece_vals) ** 2) * wcell) * np.sqrt(star.measure))
        rects = maximal_dyadic_subrectangles(star)
        labels = _assign_pieces(idx, shape4, rects, m1, m2, tent_dilate)
        used = np.unique(labels)
        remap = np.full(len(rects), -1)
        remap[used] = np.arange(used.size)
        atom = TentAtom(star, F.scales1, F.scales2, idx, piece_vals / lam,
                        remap[labels], tuple(rects[i] for i in used), tent_dilate)
        out.append((lam, atom))
    return out


def _assign_pieces(idx, shape4, rects, m1, m2, factor):
    y1, y2, s, u = np.unravel_index(idx, shape4)
    labels = np.full(idx.size, -1)
    for i, R in enumerate(rects):
        todo = labels < 0
        if not todo.any():
            break
        f1, f2 = _dilated_tent_factors(R, shape4[:2], m1, m2, factor)
        hit = todo & f1[y1, s] & f2[y2, u]
        labels[hit] = i
    if np.any(labels < 0):
        raise ValueError(
            f"{int(np.sum(labels < 0))} tent cells lie outside every T({factor:g}R); "
            "increase tent_dilate")
    return labels


# --------------------------------------------------------------- pi and atoms

def _profile_b(scales: ScaleGrid, lam: np.ndarray, M: int, window: SpectralWindow):
    """t^{2M} Phi(t sqrt(lam)) on (scale, eigenvalue), including the dt/t weight."""
    t = scales.values
    r = np.multiply.outer(t, np.sqrt(lam))
    return scales.log_step * t[:, None] ** (2 * M) * window.Phi(r)


def _contract(values4, U1, U2, g1, g2, lo=None):
    """sum_{s,u} g1[s,j] g2[u,k] (U1^T A(., ., s, u) U2)[j, k] over a box.

    ``lo`` gives the box origin (x1, x2, s, u) of ``values4`` inside the full
    array; the box keeps the cost proportional to the support.
    """
    a1, a2, a3, a4 = (0, 0, 0, 0) if lo is None else lo
    n1, n2, T1, T2 = values4.shape
    X = np.einsum("xj,xysu->jysu", U1[a1:a1 + n1], values4, optimize=True)
    X = np.einsum("jysu,sj->jyu", X, g1[a3:a3 + T1], optimize=True)
    X = np.einsum("jyu,yk->jku", X, U2[a2:a2 + n2], optimize=True)
    return np.einsum("jku,uk->jk", X, g2[a4:a4 + T2], optimize=True)


def _box(index, shape4):
    coords = np.unravel_index(index, shape4)
    lo = tuple(int(c.min()) for c in coords)
    hi = tuple(int(c.max()) + 1 for c in coords)
    return coords, lo, hi


def _sparse_contract(index, values, shape4, U1, U2, g1, g2):
    if index.size == 0:
        return np.zeros((U1.shape[1], U2.shape[1]))
    coords, lo, hi = _box(index, shape4)
    box = np.zeros(tuple(b - a for a, b in zip(lo, hi)), dtype=values.dtype)
    box[tuple(c - a for c, a in zip(coords, lo))] = values
    return _contract(box, U1, U2, g1, g2, lo)


def pi_operator(A: TentFunction, M: int, pair: ProductOperatorPair,
                window: SpectralWindow | None = None) -> GridFunction:
    """sum_t psi(t1 sqrt L1) psi(t2 sqrt L2) A(., t) dt1/t1 dt2/t2, psi = x^{2M} Phi."""
    if M < 1:
        raise ValueError("M must be >= 1")
    window = window or SpectralWindow()
    lam, mu = pair.L1.eigenvalues, pair.L2.eigenvalues
    g1 = _profile_b(A.scales1, lam, M, window) * lam[None, :] ** M
    g2 = _profile_b(A.scales2, mu, M, window) * mu[None, :] ** M
    nz = np.flatnonzero(A.values.ravel())
    C = _sparse_contract(nz, A.values.ravel()[nz], A.values.shape,
                         pair.L1.eigenvectors, pair.L2.eigenvectors, g1, g2)
    return GridFunction(A.axis1, A.axis2, pair.from_coefficients(C))


@dataclass(frozen=True, eq=False)
class HardyAtom:
    """a = sum_R (L1^M x L2^M) b_R, with the b_R kept as joint eigen-coefficients."""

    omega: OpenSet
    M: int
    pair: ProductOperatorPair
    rects: tuple = ()
    b_coef: np.ndarray = field(default=None, repr=False)   # (P, n1, n2)

    def __post_init__(self):
        if self.b_coef is None:
            object.__setattr__(self, "b_coef", np.zeros((0,) + self.omega.shape))

    def scaled(self, alpha: float) -> "HardyAtom":
        return HardyAtom(self.omega, self.M, self.pair, self.rects, alpha * self.b_coef)

    def _power(self, k1, k2):
        lam, mu = self.pair.L1.eigenvalues, self.pair.L2.eigenvalues
        return np.outer(lam ** k1, mu ** k2)

    def a_coef(self) -> np.ndarray:
        if not len(self.rects):
            return np.zeros(self.omega.shape)
        return self._power(self.M, self.M) * self.b_coef.sum(axis=0)

    def values(self) -> GridFunction:
        a1, a2 = self.omega.axis1, self.omega.axis2
        return GridFunction(a1, a2, self.pair.from_coefficients(self.a_coef()))

    def piece(self, i: int, k1: int | None = None, k2: int | None = None) -> np.ndarray:
        """(L1^k1 x L2^k2) b_R on the grid; default k = M gives a_R."""
        k1 = self.M if k1 is None else k1
        k2 = self.M if k2 is None else k2
        return self.pair.from_coefficients(self._power(k1, k2) * self.b_coef[i])

    def weighted_sums(self) -> np.ndarray:
        """Condition (iii) sums, one per (k1, k2) in [0, M]^2."""
        M = self.M
        out = np.zeros((M + 1, M + 1))
        h = self.omega.axis1.h * self.omega.axis2.h
        for i, R in enumerate(self.rects):
            l1 = R.i1.side(self.omega.axis1)
            l2 = R.i2.side(self.omega.axis2)
            for k1 in range(M + 1):
                for k2 in range(M + 1):
                    c = self._power(k1, k2) * self.b_coef[i]
                    nrm2 = np.sum(np.abs(c) ** 2) * h
                    out[k1, k2] += l1 ** (4 * k1 - 4 * M) * l2 ** (4 * k2 - 4 * M) * nrm2
        return out


def required_normalization(a: HardyAtom) -> float:
    """Smallest C such that a / C meets the size conditions."""
    if not len(a.rects):
        return 0.0
    meas = a.omega.measure
    nrm = lp_array(a.values().values, 2, a.omega.axis1.h * a.omega.axis2.h)
    return float(max(nrm * np.sqrt(meas), np.sqrt(a.weighted_sums().max() * meas)))


def lift_tent_atom(atom: TentAtom, M: int, pair: ProductOperatorPair,
                   window: SpectralWindow | None = None,
                   buffer: int = SUPPORT_BUFFER) -> HardyAtom:
    """pi_{L1,L2,M}(A) as an (unnormalized) Hardy atom.

    The open set is the union of the tent dilates of the pieces, widened by
    ``buffer`` cells to absorb the discrete leakage of Phi(t sqrt L).  Pieces
    are regrouped onto the first maximal rectangle of that set containing them.
    """
    window = window or SpectralWindow()
    lam, mu = pair.L1.eigenvalues, pair.L2.eigenvalues
    g1 = _profile_b(atom.scales1, lam, M, window)
    g2 = _profile_b(atom.scales2, mu, M, window)
    U1, U2 = pair.L1.eigenvectors, pair.L2.eigenvectors
    shape = atom.omega.shape
    mask = atom.omega.mask.copy()
    for R in atom.rects:
        mask |= R.dilate_mask(shape, atom.tent_dilate, buffer)
    omega_h = OpenSet(atom.omega.axis1, atom.omega.axis2, mask)
    big = maximal_dyadic_subrectangles(omega_h)
    groups: dict[int, np.ndarray] = {}
    for i, R in enumerate(atom.rects):
        sel = atom.labels == i
        b = _sparse_contract(atom.index[sel], atom.values[sel], atom.shape, U1, U2, g1, g2)
        g = next(k for k, Rb in enumerate(big) if Rb.contains(R))
        groups[g] = groups.get(g, 0) + b
    keys = sorted(groups)
    coef = np.stack([groups[k] for k in keys]) if keys else None
    return HardyAtom(omega_h, M, pair, tuple(big[k] for k in keys), coef)


@dataclass
class AtomValidation:
    checks: dict          # name -> (passed, slack)

    @property
    def passed(self) -> bool:
        return all(p for p, _ in self.checks.values())


def hardy_atom_validate(a: HardyAtom, tol: float = 1e-6, *,
                        atom_dilate: float = ATOM_DILATE,
                        buffer: int = SUPPORT_BUFFER) -> AtomValidation:
    """Check supports, factorization through L^M, L^2 size and the weighted sums.

    Support conditions compare the L^2 mass outside the allowed region with
    the total mass.  Slack is reported so that positive means satisfied.
    """
    if not len(a.rects):
        inf = float("inf")
        return AtomValidation({k: (True, inf) for k in
                               ("support_a", "support_b", "factorization",
                                "l2_size", "weighted_sum")})
    shape = a.omega.shape
    h = a.omega.axis1.h * a.omega.axis2.h
    meas = a.omega.measure
    av = a.values().values
    tot = np.sum(np.abs(av) ** 2)
    out_a = np.sum(np.abs(av[~a.omega.mask]) ** 2)
    rel_a = np.sqrt(out_a / tot) if tot > 0 else 0.0

    worst_b = 0.0
    worst_f = 0.0
    L1M = np.linalg.matrix_power(a.pair.L1.matrix, a.M)
    L2M = np.linalg.matrix_power(a.pair.L2.matrix, a.M)
    for i, R in enumerate(a.rects):
        allowed = R.dilate_mask(shape, atom_dilate, buffer)
        for k1 in range(a.M + 1):
            for k2 in range(a.M + 1):
                v = a.piece(i, k1, k2)
                t = np.sum(v * v)
                if t > 0:
                    worst_b = max(worst_b, float(np.sqrt(np.sum(v[~allowed] ** 2) / t)))
        b = a.piece(i, 0, 0)
        ar = a.piece(i)
        direct = L1M @ b @ L2M.T
        scale = np.abs(ar).max()
        if scale > 0:
            worst_f = max(worst_f, float(np.abs(direct - ar).max() / scale))
    size = lp_array(av, 2, h)
    wsum = float(a.weighted_sums().max())
    checks = {
        "support_a": (rel_a <= tol, tol - rel_a),
        "support_b": (worst_b <= tol, tol - worst_b),
        "factorization": (worst_f <= 1e-8, 1e-8 - worst_f),
        "l2_size": (size <= meas ** -0.5 * (1 + tol), meas ** -0.5 * (1 + tol) - size),
        "weighted_sum": (wsum <= (1 + tol) / meas, (1 + tol) / meas - wsum),
    }
    return AtomValidation(checks)


# ----------------------------------------------------- Calderon normalization

def _continuum_calderon(M: int, window: SpectralWindow) -> float:
    u = np.geomspace(1e-6, 60.0, 20001)
    g = u ** (2 * M) * window.Phi(u) * psi_area(u)
    return float(trapezoid(g, np.log(u)))


@dataclass(frozen=True)
class CalderonConstant:
    c1: float
    c2: float
    resolved1: np.ndarray
    resolved2: np.ndarray
    m1: np.ndarray          # c1 * raw per-axis sums, 1 on resolved eigenvalues
    m2: np.ndarray

    @property
    def c_psi(self) -> float:
        return self.c1 * self.c2


def _axis_calderon(scales: ScaleGrid, lam: np.ndarray, M: int, window):
    t = scales.values
    r = np.multiply.outer(t, np.sqrt(lam))
    raw = scales.log_step * np.sum(r ** (2 * M) * window.Phi(r) * psi_area(r), axis=0)
    ref = 1.0 / np.sqrt(t[0] * t[-1])
    rr = np.array([ref]) * t
    raw_ref = scales.log_step * float(np.sum(rr ** (2 * M) * window.Phi(rr) * psi_area(rr)))
    return raw, raw_ref


def calderon_constant(pair: ProductOperatorPair, scales1: ScaleGrid, scales2: ScaleGrid,
                      M: int = 1, window: SpectralWindow | None = None,
                      rtol: float = 1e-3) -> CalderonConstant:
    """c with c * sum_t psi_M(t sqrt lam) q(t sqrt lam) dt/t = 1 at mid-spectrum, per axis."""
    window = window or SpectralWindow()
    cont = _continuum_calderon(M, window)
    out = []
    for sc, L in ((scales1, pair.L1), (scales2, pair.L2)):
        raw, raw_ref = _axis_calderon(sc, L.eigenvalues, M, window)
        if abs(raw_ref / cont - 1) > rtol:
            raise ValueError(
                f"calderon calibration: scale grid reproduces {raw_ref:.6g} "
                f"against {cont:.6g}")
        c = 1.0 / raw_ref
        out.append((c, np.abs(c * raw - 1) <= rtol, c * raw))
    (c1, r1, m1), (c2, r2, m2) = out
    return CalderonConstant(c1, c2, r1, r2, m1, m2)


# -------------------------------------------------------- full decomposition

def decomposition_scales(axis, per_octave: int = 8) -> ScaleGrid:
    """h/16 .. 2L: wide enough that truncating the dt/t integral costs < 1e-5."""
    return ScaleGrid(axis.h / 16, 2 * axis.length, per_octave)


@dataclass
class AtomicRepresentation:
    terms: list                  # (lambda_j, HardyAtom) with atoms normalized by C_M
    residual: GridFunction
    coefficient_l1: float
    C_M: float = 0.0
    c_psi: float = 1.0
    tent_terms: list = field(default_factory=list, repr=False)
    validations: list = field(default_factory=list, repr=False)

    def reconstruction(self) -> GridFunction:
        f = self.residual.like(np.zeros(self.residual.values.shape))
        for lam, a in self.terms:
            f = f + a.values() * lam
        return f


def hardy_decompose(f: GridFunction, M: int, pair: ProductOperatorPair, *,
                    per_octave: int = 8, scales1: ScaleGrid | None = None,
                    scales2: ScaleGrid | None = None,
                    window: SpectralWindow | None = None, C_M: float | None = None,
                    buffer: int = SUPPORT_BUFFER, tent_dilate: float = TENT_DILATE,
                    depth: int = 64, validate: bool = False,
                    tol: float = 1e-6) -> AtomicRepresentation:
    """f = c_psi sum_j lambda_j pi(A_j), regrouped as sum_j (c_psi C_M lambda_j) a_j.

    With ``C_M`` unset the normalization is the largest one required by the
    atoms of this decomposition.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    pair.check(f)
    window = window or SpectralWindow()
    s1 = scales1 or decomposition_scales(f.axis1, per_octave)
    s2 = scales2 or decomposition_scales(f.axis2, per_octave)
    cal = calderon_constant(pair, s1, s2, M, window)
    if not np.any(f.values):
        return AtomicRepresentation([], f.like(np.zeros_like(f.values)), 0.0,
                                    0.0 if C_M is None else C_M, cal.c_psi)
    F = TentFunction.from_q(f, pair, s1, s2)
    tents = tent_decompose(F, tent_dilate=tent_dilate, depth=depth)
    atoms = [lift_tent_atom(A, M, pair, window, buffer) for _, A in tents]
    need = max(required_normalization(a) for a in atoms)
    CM = need if C_M is None else C_M
    terms = [(cal.c_psi * CM * lam, a.scaled(1.0 / CM)) for (lam, _), a in zip(tents, atoms)]
    total = sum(lam * a.a_coef() for lam, a in terms)
    residual = f.like(f.values - pair.from_coefficients(total))
    rep = AtomicRepresentation(terms, residual, float(sum(abs(l) for l, _ in terms)),
                               CM, cal.c_psi, tents)
    if validate:
        rep.validations = [hardy_atom_validate(a, tol, atom_dilate=max(ATOM_DILATE, tent_dilate),
                                               buffer=buffer) for _, a in terms]
    return rep


def renormalized(rep: AtomicRepresentation, C_M: float) -> AtomicRepresentation:
    """The same decomposition with atoms normalized by a different constant C_M."""
    if not C_M > 0:
        raise ValueError("C_M must be positive")
    if rep.C_M <= 0:
        return rep
    r = C_M / rep.C_M
    terms = [(lam * r, a.scaled(1.0 / r)) for lam, a in rep.terms]
    return AtomicRepresentation(terms, rep.residual, rep.coefficient_l1 * r, C_M,
                                rep.c_psi, rep.tent_terms, [])


def calderon_residual_coefficients(f: GridFunction, pair: ProductOperatorPair,
                                   cal: CalderonConstant) -> np.ndarray:
    """Spectral form of f - c_psi pi(Q f): (1 - m1 m2) times the coefficients."""
    return (1 - np.outer(cal.m1, cal.m2)) * pair.to_coefficients(f.values)


def random_tent_function(axis1, axis2, rng, scales1: ScaleGrid, scales2: ScaleGrid,
                         n_blobs: int | None = None) -> TentFunction:
    """Random F supported in a few tents, with random scale bands and signs."""
    from .grid import random_open_set
    vals = np.zeros((axis1.n_cells, axis2.n_cells, len(scales1), len(scales2)))
    k = int(rng.integers(1, 4)) if n_blobs is None else n_blobs
    m1 = cone_halfwidth(scales1.values, axis1.h)
    m2 = cone_halfwidth(scales2.values, axis2.h)
    for _ in range(k):
        om = random_open_set(axis1, axis2, rng, n_rects=1, max_side=0.5)
        T = _tent_from_mask(om.mask, m1, m2)
        amp = rng.standard_normal(T.shape) * 10.0 ** rng.uniform(-1, 1)
        vals += np.where(T, amp, 0.0)
    return TentFunction(axis1, axis2, scales1, scales2, vals)


def tent_summary(F: TentFunction) -> dict:
    return {"T11": tent_norm(F, 1.0), "L2": F.l2_norm()}


def atom_family(pair: ProductOperatorPair, rng, n_atoms: int, M: int = 1, *,
                per_octave: int = 4, window: SpectralWindow | None = None,
                normalize: str = "each", max_tries: int = 1000) -> list[HardyAtom]:
    """Lift tent atoms of random tent functions into ``n_atoms`` Hardy atoms.

    ``normalize="each"`` divides every atom by its own required constant;
    ``"family"`` uses the largest constant over the family (a uniform C_M).
    """
    if normalize not in ("each", "family"):
        raise ValueError("normalize must be 'each' or 'family'")
    window = window or SpectralWindow()
    a1, a2 = pair.axes
    s1 = ScaleGrid.for_axis(a1, per_octave)
    s2 = ScaleGrid.for_axis(a2, per_octave)
    atoms, need = [], []
    for _ in range(max_tries):
        if len(atoms) >= n_atoms:
            break
        F = random_tent_function(a1, a2, rng, s1, s2)
        for _, A in tent_decompose(F):
            a = lift_tent_atom(A, M, pair, window)
            c = required_normalization(a)
            if c > 0:
                atoms.append(a)
                need.append(c)
            if len(atoms) >= n_atoms:
                break
    if normalize == "family":
        CM = max(need)
        return [a.scaled(1.0 / CM) for a in atoms]
    return [a.scaled(1.0 / c) for a, c in zip(atoms, need)]
