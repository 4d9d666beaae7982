"""Named verification suites.

Each suite takes a :class:`Context` and returns a :class:`Report` of pass/fail
metrics.  Suite options default to the desk-scale sizes used by the
acceptance tests and can be overridden per suite from the config.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import erfc

from . import __version__
from .atomic import (atom_family, hardy_atom_validate, hardy_decompose, lift_tent_atom,
                     random_tent_function, renormalized, required_normalization,
                     tent_decompose)
from .grid import Axis, GridFunction, ScaleGrid, journe_sum, lp_array, random_open_set
from .multiplier import (DyadicWindow, SobolevParams, dyadic_t_grid, get_symbol,
                         growth_profile, marcinkiewicz_constant, multiplier_atom_harness,
                         prop53_offdiag_check)
from .operators import (Potential, build_laplacian, build_schrodinger, default_time_samples,
                        feynman_kac_gap, fit_gaussian_bound, on_cone_max, propagation_leakage)
from .product import ProductOperatorPair
from .report import Metric, Report, Table
from .singular import (ConditionReport, ProductKernelOperator, atom_image_l1, condition1_check,
                       condition2_check, condition3_check, double_riesz, riesz_axis,
                       riesz_quadrature, riesz_tail_report)
from .square import area_integral, hardy_norm, tent_norm


# ------------------------------------------------------------------ context

@dataclass
class PotentialSpec:
    kind: str = "random"          # zero | constant | random | file
    value: float = 0.0
    vmax: float = 50.0
    samples: np.ndarray | None = None

    def make(self, axis: Axis, rng) -> Potential:
        if self.kind == "zero":
            return Potential.zero(axis)
        if self.kind == "constant":
            return Potential.constant(axis, self.value)
        if self.kind == "random":
            return Potential.random_bounded(axis, rng, self.vmax)
        v = np.asarray(self.samples, dtype=float)
        if v.size != axis.n_cells:
            # sampled potentials are given on their own grid; resample by cell
            x = (np.arange(axis.n_cells) + 0.5) / axis.n_cells
            v = v[np.minimum((x * v.size).astype(int), v.size - 1)]
        return Potential(v)


@dataclass
class Context:
    seed: int = 0
    length: tuple = (1.0, 1.0)
    boundary: tuple = ("dirichlet", "dirichlet")
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    options: dict = field(default_factory=dict)

    def rng(self, suite: str, *salt) -> np.random.Generator:
        key = zlib.crc32(":".join([suite, *map(str, salt)]).encode())
        return np.random.default_rng([self.seed, key])

    def axis(self, n: int, which: int = 0) -> Axis:
        return Axis(n, self.length[which] / n, 0.0, self.boundary[which])

    def opts(self, suite: str) -> dict:
        merged = dict(SUITES[suite].defaults)
        merged.update(self.options.get(suite, {}))
        return merged


def _rel_change(a: float, b: float) -> float:
    return abs(b - a) / max(abs(a), 1e-300)


# ------------------------------------------------------------------ helpers

def random_sine_function(axis1: Axis, axis2: Axis, rng, modes=(2, 8)) -> GridFunction:
    """Random combination of sin(j pi x / L1) sin(k pi y / L2), j, k in ``modes``.

    Depends only on the generator state, not the resolution.
    """
    j = np.arange(modes[0], modes[1] + 1)
    c = rng.standard_normal((j.size, j.size))
    x1 = (axis1.centers - axis1.origin) / axis1.length
    x2 = (axis2.centers - axis2.origin) / axis2.length
    S1 = np.sin(np.pi * np.outer(x1, j))
    S2 = np.sin(np.pi * np.outer(x2, j))
    return GridFunction(axis1, axis2, S1 @ c @ S2.T)


@lru_cache(maxsize=16)
def _shared_family(n: int, seed: int, n_atoms: int, M: int, vmax: float, per_pair: int,
                   length: float, boundary: str):
    """Atoms generated for random-potential pairs; shared by riesz and multiplier."""
    rng = np.random.default_rng([seed, n, M, 7])
    axis = Axis(n, length / n, 0.0, boundary)
    out = []
    while sum(len(a) for _, a in out) < n_atoms:
        pair = ProductOperatorPair(
            build_schrodinger(axis, Potential.random_bounded(axis, rng, vmax)),
            build_schrodinger(axis, Potential.random_bounded(axis, rng, vmax)))
        out.append((pair, atom_family(pair, rng, per_pair, M)))
    return out


def shared_family(ctx: Context, n: int, n_atoms: int, M: int = 1, per_pair: int = 10):
    return _shared_family(n, ctx.seed, n_atoms, M, ctx.potential.vmax, per_pair,
                          ctx.length[0], ctx.boundary[0])


# ------------------------------------------------------------------ suites

def run_gaussian_bound(ctx: Context) -> Report:
    o = ctx.opts("gaussian-bound")
    rep = Report("gaussian-bound")
    rng = ctx.rng("gaussian-bound")
    axis = ctx.axis(o["n_cells"])
    L0 = build_laplacian(axis)
    rows, viol, gap = [], -np.inf, -np.inf
    for i in range(o["n_potentials"]):
        L = build_schrodinger(axis, ctx.potential.make(axis, rng))
        fit = fit_gaussian_bound(L, default_time_samples(L, o["n_times"]))
        g = max(feynman_kac_gap(L, L0, t) for t in default_time_samples(L, o["n_times"]))
        rows.append((i, fit.C, fit.c, fit.max_violation, g))
        viol, gap = max(viol, fit.max_violation), max(gap, g)
    free = fit_gaussian_bound(L0, default_time_samples(L0, o["n_times"]))
    rep.add(Metric.at_most("max_violation", viol, 0.0))
    rep.add(Metric.at_most("feynman_kac_gap", gap, o["fk_tol"]))
    rep.add(Metric.at_most("fit_C_max", max(r[1] for r in rows), o["C_max"]))
    rep.add(Metric.at_most("free_max_violation", free.max_violation, 0.0))
    rep.tables.append(Table("fits", ("potential", "C", "c", "max_violation", "fk_gap"), rows))
    return rep


def run_propagation(ctx: Context) -> Report:
    o = ctx.opts("propagation")
    rep = Report("propagation")
    axis = ctx.axis(o["n_cells"])
    L = build_laplacian(axis)
    rows, buffer_monotone = [], True
    for k in o["t_cells"]:
        t = k * axis.h
        cone = on_cone_max(L, t)
        leaks = [propagation_leakage(L, t, b * axis.h) for b in range(o["buffer_cells"] + 1)]
        buffer_monotone &= bool(np.all(np.diff(leaks) <= 0))
        rel = leaks[-1] / cone
        rows.append((t, leaks[-1], rel, cone * t, on_cone_max(L, t, kappa=2) * t))
        if k in o["checked_t_cells"]:
            rep.add(Metric.at_most(f"relative_leakage_t{k}h", rel, o["leak_tol"]))
    cones = [r[3] for r in rows]
    rep.add(Metric.at_most("on_cone_scaled_spread", max(cones) / min(cones), o["cone_spread"]))
    rep.add(Metric.flag("leakage_monotone_in_buffer", buffer_monotone))
    rep.tables.append(Table("leakage", ("t", "leakage", "relative_leakage", "on_cone_times_t",
                                        "kappa2_on_cone_times_t"), rows))
    return rep


def _ratio_bracket(ctx, n, count, p, modes):
    rng = ctx.rng("square-equivalence", "bracket")
    a1, a2 = ctx.axis(n, 0), ctx.axis(n, 1)
    pair = ProductOperatorPair(build_laplacian(a1), build_laplacian(a2))
    vals = {q: [] for q in p}
    for _ in range(count):
        f = random_sine_function(a1, a2, rng, modes)
        S = area_integral(f, pair)
        for q in p:
            vals[q].append(lp_array(S.values, q, f.cell_area) / lp_array(f.values, q, f.cell_area))
    return {q: (min(v), max(v)) for q, v in vals.items()}


def l2_ratios(ctx: Context, n: int, count: int, per_octave: int, modes) -> list[float]:
    """|Sf|_2 / |f|_2 for ``count`` random spectrally resolved f on an n x n grid."""
    a1, a2 = ctx.axis(n, 0), ctx.axis(n, 1)
    pair = ProductOperatorPair(build_laplacian(a1), build_laplacian(a2))
    s1, s2 = ScaleGrid.for_axis(a1, per_octave), ScaleGrid.for_axis(a2, per_octave)
    rng = ctx.rng("square-equivalence", "l2")
    return [area_integral(f, pair, s1, s2).norm(2) / f.norm(2)
            for f in (random_sine_function(a1, a2, rng, modes) for _ in range(count))]


def run_square_equivalence(ctx: Context) -> Report:
    o = ctx.opts("square-equivalence")
    rep = Report("square-equivalence")
    n = o["n_cells"]
    ratios = l2_ratios(ctx, n, o["n_functions"], o["per_octave"], tuple(o["modes"]))
    rep.add(Metric.at_most("l2_ratio_error", max(abs(r - 0.25) for r in ratios), o["l2_tol"]))
    p = tuple(o["p_values"])
    coarse = _ratio_bracket(ctx, n, o["n_refine_functions"], p, tuple(o["modes"]))
    fine = _ratio_bracket(ctx, o["refine_cells"], o["n_refine_functions"], p, tuple(o["modes"]))
    rows = []
    for q in p:
        for end, name in ((0, "lo"), (1, "hi")):
            rep.add(Metric.at_most(f"p{q:g}_bracket_{name}_shift",
                                   _rel_change(coarse[q][end], fine[q][end]), o["bracket_tol"]))
        rows.append((q, *coarse[q], *fine[q]))
    rep.tables.append(Table("l2_ratios", ("index", "ratio"), list(enumerate(ratios))))
    rep.tables.append(Table("lp_brackets", ("p", "lo_coarse", "hi_coarse", "lo_fine", "hi_fine"),
                            rows))
    return rep


def _journe_constant(ctx, n, count, delta):
    rng = ctx.rng("journe")
    a1, a2 = ctx.axis(n, 0), ctx.axis(n, 1)
    c = 0.0
    for _ in range(count):
        om = random_open_set(a1, a2, rng)
        s1, s2 = journe_sum(om, delta)
        c = max(c, s1 / om.measure, s2 / om.measure)
    return c


def run_journe(ctx: Context) -> Report:
    o = ctx.opts("journe")
    rep = Report("journe")
    c0 = _journe_constant(ctx, o["n_cells"], o["n_sets"], o["delta"])
    c1 = _journe_constant(ctx, o["refine_cells"], o["n_sets"], o["delta"])
    rep.add(Metric.at_most("journe_c", c0, o["c_bound"]))
    rep.add(Metric.at_most("journe_c_refined", c1, o["c_bound"]))
    rep.add(Metric.at_most("journe_c_shift", _rel_change(c0, c1), o["stability_tol"]))
    return rep


def run_tent_decomp(ctx: Context) -> Report:
    o = ctx.opts("tent-decomp")
    rep = Report("tent-decomp")
    rng = ctx.rng("tent-decomp")
    a1, a2 = ctx.axis(o["n_cells"], 0), ctx.axis(o["n_cells"], 1)
    s1, s2 = ScaleGrid.for_axis(a1, o["per_octave"]), ScaleGrid.for_axis(a2, o["per_octave"])
    recon, ratio, monotone, rows = 0.0, 0.0, True, []
    for i in range(o["n_functions"]):
        F = random_tent_function(a1, a2, rng, s1, s2)
        dec = tent_decompose(F)
        acc = np.zeros_like(F.values)
        tails = []
        for lam, A in dec:
            acc += lam * A.dense().values
            tails.append(F.like(F.values - acc).l2_norm())
        err = float(np.abs(acc - F.values).max() / np.abs(F.values).max())
        r = sum(abs(lam) for lam, _ in dec) / tent_norm(F, 1.0)
        monotone &= bool(np.all(np.diff(tails) <= 1e-12 * F.l2_norm()))
        recon, ratio = max(recon, err), max(ratio, r)
        rows.append((i, len(dec), err, r))
    rep.add(Metric.at_most("reconstruction_error", recon, o["recon_tol"]))
    rep.add(Metric.at_most("coefficient_ratio_max", ratio, o["C_bound"]))
    rep.add(Metric.flag("t22_tail_monotone", monotone))
    rep.tables.append(Table("decompositions", ("index", "levels", "recon_error", "ratio"), rows))
    return rep


def _tent_atoms(ctx, n, count, per_octave, salt):
    rng = ctx.rng("atom-validate", salt)
    a1, a2 = ctx.axis(n, 0), ctx.axis(n, 1)
    s1, s2 = ScaleGrid.for_axis(a1, per_octave), ScaleGrid.for_axis(a2, per_octave)
    out = []
    while len(out) < count:
        F = random_tent_function(a1, a2, rng, s1, s2)
        out.extend(A for _, A in tent_decompose(F))
    return out[:count]


def run_atom_validate(ctx: Context) -> Report:
    o = ctx.opts("atom-validate")
    rep = Report("atom-validate")
    rows, sa = [], {}
    for n in o["n_cells"]:
        a1, a2 = ctx.axis(n, 0), ctx.axis(n, 1)
        pair = ProductOperatorPair(build_laplacian(a1), build_laplacian(a2))
        tents = _tent_atoms(ctx, n, o["n_atoms"], o["per_octave"], n)
        for M in o["M"]:
            lifted = [lift_tent_atom(A, M, pair) for A in tents]
            need = [required_normalization(a) for a in lifted]
            CM = max(need)
            ok = sum(hardy_atom_validate(a.scaled(1 / CM), o["tol"]).passed for a in lifted)
            rep.add(Metric.at_least(f"validated_fraction_n{n}_M{M}", ok / len(lifted), 1.0))
            rows.append((n, M, CM, ok, len(lifted)))
            if M == o["M"][0]:
                sa[n] = max(hardy_norm(a.scaled(1 / c).values(), pair)
                            for a, c in zip(lifted, need))
                rep.add(Metric.at_most(f"area_l1_max_n{n}", sa[n], o["S_bound"]))
    ns = list(o["n_cells"])
    rep.add(Metric.at_most("area_l1_shift", _rel_change(sa[ns[0]], sa[ns[-1]]),
                           o["stability_tol"]))
    rep.tables.append(Table("normalization", ("n", "M", "C_M", "validated", "atoms"), rows))
    return rep


def run_hardy_decomp(ctx: Context) -> Report:
    o = ctx.opts("hardy-decomp")
    rep = Report("hardy-decomp")
    rng = ctx.rng("hardy-decomp")
    a1, a2 = ctx.axis(o["n_cells"], 0), ctx.axis(o["n_cells"], 1)
    pair = ProductOperatorPair(build_laplacian(a1), build_laplacian(a2))
    fs = [random_sine_function(a1, a2, rng, tuple(o["modes"])) for _ in range(o["n_functions"])]
    rows = []
    for po, tol in zip(o["per_octave"], o["residual_tol"]):
        reps = [hardy_decompose(f, o["M"], pair, per_octave=po) for f in fs]
        CM = max(r.C_M for r in reps)
        res = max(r.residual.norm(2) / f.norm(2) for r, f in zip(reps, fs))
        rep.add(Metric.at_most(f"residual_po{po}", res, tol))
        ratios = [renormalized(r, CM).coefficient_l1 / hardy_norm(f, pair)
                  for r, f in zip(reps, fs)]
        rep.add(Metric.at_most(f"coefficient_ratio_max_po{po}", max(ratios), o["ratio_bound"]))
        rows += [(po, i, r.residual.norm(2) / f.norm(2), q, r.C_M)
                 for i, (r, f, q) in enumerate(zip(reps, fs, ratios))]
    rep.tables.append(Table("decompositions",
                            ("per_octave", "index", "residual", "coef_ratio", "C_M"), rows))
    return rep


def _identity_pair(n_long, n_short, which):
    long_ax = Axis(n_long, 1.0 / n_long)
    short_ax = Axis(n_short, 1.0 / n_short)
    Ll, Ls = _laplacian(long_ax), _laplacian(short_ax)
    return ProductOperatorPair(Ll, Ls) if which == 1 else ProductOperatorPair(Ls, Ll)


@lru_cache(maxsize=4)
def _laplacian(axis: Axis):
    return build_laplacian(axis)


def _condition_table(reps: list[ConditionReport]) -> Table:
    return Table("conditions", ConditionReport.COLUMNS, [r for c in reps for r in c.table()])


def run_conditions_identity(ctx: Context) -> Report:
    o = ctx.opts("conditions-identity")
    rep = Report("conditions-identity")
    n = o["n_cells"]
    h = 1.0 / n
    t = o["t_cells"] * h
    mid = n // 2
    gam = tuple(o["gammas"])
    p1 = _identity_pair(n, 4, 1)
    c1 = condition1_check(ProductKernelOperator.identity(p1), p1, [t], gam, [mid])
    p2 = _identity_pair(n, 4, 2)
    c2 = condition2_check(ProductKernelOperator.identity(p2), p2, [t], gam, [mid])
    p3 = ProductOperatorPair(_laplacian(Axis(n, h)), _laplacian(Axis(n, h)))
    gp = [(g, g) for g in o["oracle_gammas"]]
    c3 = condition3_check(ProductKernelOperator.identity(p3), p3, [(t, t)], gp, [(mid, mid)])
    rep.add(Metric.at_least("cond1_delta", c1.fit_delta, o["delta_min"]))
    rep.add(Metric.at_least("cond2_delta", c2.fit_delta, o["delta_min"]))
    e1 = max(abs(c1.integrals()[(g, 0.0)] / erfc(g / 2) - 1) for g in o["oracle_gammas"])
    e2 = max(abs(c2.integrals()[(0.0, g)] / erfc(g / 2) - 1) for g in o["oracle_gammas"])
    e3 = max(abs(c3.integrals()[(g, g)] / erfc(g / 2) ** 2 - 1) for g in o["oracle_gammas"])
    fac = max(abs(c3.integrals()[(g, g)] / c1.integrals()[(g, 0.0)] ** 2 - 1)
              for g in o["oracle_gammas"])
    rep.add(Metric.at_most("cond1_erfc_error", e1, o["oracle_tol"]))
    rep.add(Metric.at_most("cond2_erfc_error", e2, o["oracle_tol"]))
    rep.add(Metric.at_most("cond3_erfc2_error", e3, o["oracle_tol"]))
    rep.add(Metric.at_most("cond3_factorization_error", fac, o["factor_tol"]))
    mono = all(np.all(np.diff([r["integral"] for r in c.rows]) <= 0) for c in (c1, c2))
    rep.add(Metric.flag("gamma_monotone", mono))
    rep.tables.append(_condition_table([c1, c2, c3]))
    return rep


def _riesz_atom_max(ctx, n, count):
    vals = []
    for pair, atoms in shared_family(ctx, n, count):
        T = double_riesz(pair)
        vals += [atom_image_l1(T, a) for a in atoms]
    return max(vals), min(vals), len(vals)


def run_riesz(ctx: Context) -> Report:
    o = ctx.opts("riesz")
    rep = Report("riesz")
    axis = ctx.axis(o["n_cells"])
    L = build_laplacian(axis)
    R = riesz_axis(L)
    rep.add(Metric.at_most("norm_error_free", abs(np.linalg.norm(R, 2) - 1), 1e-10))
    Lv = build_schrodinger(axis, Potential.constant(axis, o["v0"]))
    Rv = riesz_axis(Lv)
    pred = np.sqrt(L.lam_max / (L.lam_max + o["v0"]))
    pow_est = np.linalg.norm(Rv, 2)
    rep.add(Metric.at_most("norm_error_constant_v", abs(pow_est - pred), 1e-8))
    Q = riesz_quadrature(L, o["quad_points"])
    rep.add(Metric.at_most("quadrature_error", np.linalg.norm(Q - R, 2), o["quad_tol"]))
    tail_axis = ctx.axis(o["tail_cells"])
    tail = riesz_tail_report(build_laplacian(tail_axis),
                             [k * tail_axis.h for k in o["tail_t_cells"]], tuple(o["gammas"]))
    rep.add(Metric.at_least("tail_exponent", tail.fit_delta, o["tail_min"]))
    pair = ProductOperatorPair(L, L)
    pair = ProductOperatorPair(L, L)
    A1, A2 = double_riesz(pair).factors
    rep.add(Metric.at_most("double_norm_error",
                           abs(np.linalg.norm(A1, 2) * np.linalg.norm(A2, 2) - 1), 1e-10))
    maxes = {}
    for n in o["atom_cells"]:
        hi, lo, cnt = _riesz_atom_max(ctx, n, o["n_atoms"])
        maxes[n] = hi
        rep.add(Metric.at_least(f"atoms_n{n}", cnt, o["n_atoms"]))
        rep.add(Metric.at_most(f"atom_l1_max_n{n}", hi, o["atom_bound"]))
    ns = list(o["atom_cells"])
    rep.add(Metric.at_most("atom_l1_shift", _rel_change(maxes[ns[0]], maxes[ns[-1]]),
                           o["stability_tol"]))
    rep.tables.append(_condition_table([tail]))
    return rep


def run_multiplier(ctx: Context) -> Report:
    o = ctx.opts("multiplier")
    rep = Report("multiplier")
    w = DyadicWindow()
    params = SobolevParams(o["s"][0], o["s"][1], o["resolution"], o["padding"])
    L = build_laplacian(ctx.axis(o["marcinkiewicz_cells"]))
    tg = dyadic_t_grid(L.eigenvalues[0], L.lam_max, o["t_per_octave"])
    rows = []
    consts = {}
    for name in o["finite_symbols"]:
        mr = marcinkiewicz_constant(get_symbol(name), w, params, tg, tg)
        consts[name] = mr.value
        rep.add(Metric.flag(f"finite_{name}", mr.finite, "; ".join(mr.reasons)))
        rows.append((name, mr.value, *mr.terms, mr.divergent))
    div = o["divergent_symbol"]
    mr = marcinkiewicz_constant(get_symbol(div), w, params, tg, tg)
    rep.add(Metric.flag(f"divergent_{div}", mr.divergent))
    rows.append((div, mr.value, *mr.terms, mr.divergent))
    lo, hi = o["growth_t"]
    gt = 2.0 ** np.arange(np.log2(lo), np.log2(hi) + 0.25, 0.5)
    g = growth_profile(get_symbol(div), w, params, gt) / gt ** params.s1
    rep.add(Metric.at_most("divergent_growth_spread", g.max() / g.min(), o["growth_factor"]))
    maxes, one_err, heat_excess, op_excess, atom_max = {}, 0.0, -np.inf, -np.inf, 0.0
    for n in o["atom_cells"]:
        for name in o["harness_symbols"]:
            vals = []
            for pair, atoms in shared_family(ctx, n, o["n_atoms"]):
                hr = multiplier_atom_harness(get_symbol(name), atoms, pair, consts.get(name))
                a_l1 = np.array([a.values().norm(1) for a in atoms])
                atom_max = max(atom_max, float(a_l1.max()))
                op_excess = max(op_excess, hr.op_norm - hr.sup_symbol)
                if name == "one":
                    one_err = max(one_err, float(np.abs(hr.l1_values - a_l1).max()))
                if name == "heat":
                    heat_excess = max(heat_excess, float((hr.l1_values - a_l1).max()))
                vals.append(hr.max_l1)
            maxes[(n, name)] = max(vals)
    rep.add(Metric.at_most("atom_l1_max", atom_max, 1.0))
    rep.add(Metric.at_most("identity_harness_error", one_err, 1e-12))
    rep.add(Metric.at_most("heat_contraction_excess", heat_excess, 1e-12))
    rep.add(Metric.at_most("op_norm_minus_sup", op_excess, 1e-6))
    ns = list(o["atom_cells"])
    for name in o["uniform_symbols"]:
        rep.add(Metric.at_most(f"harness_l1_shift_{name}",
                               _rel_change(maxes[(ns[0], name)], maxes[(ns[-1], name)]),
                               o["stability_tol"]))
    rep.tables.append(Table("marcinkiewicz", ("symbol", "constant", "eta1", "eta2", "eta12",
                                              "divergent"), rows))
    rep.tables.append(Table("harness", ("n", "symbol", "max_l1"),
                            [(n, s, v) for (n, s), v in sorted(maxes.items())]))
    return rep


def run_prop53(ctx: Context) -> Report:
    o = ctx.opts("prop53")
    rep = Report("prop53")
    w = DyadicWindow()
    n = o["n_cells"]
    a1, a2 = ctx.axis(n, 0), ctx.axis(n, 1)
    pair = ProductOperatorPair(build_laplacian(a1), build_laplacian(a2))
    R = (1.0 / (o["R_cells"] * a1.h), 1.0 / (o["R_cells"] * a2.h))
    params = SobolevParams(o["s"][0], o["s"][1], o["resolution"], o["padding"])
    cases = {
        1: lambda a, b: w(a / R[0] ** 2) * np.ones(np.broadcast(a, b).shape),
        2: lambda a, b: w(b / R[1] ** 2) * np.ones(np.broadcast(a, b).shape),
        3: lambda a, b: w(a / R[0] ** 2) * w(b / R[1] ** 2),
    }
    rows = []
    for case, F in cases.items():
        tR = np.asarray(o["tR"], dtype=float)
        Rc = R[0] if case != 2 else R[1]
        small = prop53_offdiag_check(F, pair, case, tR / Rc, [2.0], R, tuple(o["s"]),
                                     params=params, with_sobolev=False)
        ratios = small.small_t_ratios(2.0)
        rep.add(Metric.at_most(f"case{case}_small_t_spread", ratios.max() / ratios.min(),
                               o["scaling_factor"]))
        rows += [(case, float(t), float(r)) for t, r in zip(tR, ratios)]
    F = cases[1]
    decay = prop53_offdiag_check(F, pair, 1, [1.0 / R[0]], tuple(o["gammas"]), R, tuple(o["s"]),
                                 params=params)
    rep.add(Metric.at_least("case1_eta", decay.fit_eta, 1e-3))
    rep.add(Metric.flag("case1_sobolev_finite", np.isfinite(decay.sobolev_factor)))
    rep.tables.append(Table("small_t", ("case", "tR", "ratio"), rows))
    rep.tables.append(Table("gamma_decay", ("t", "gamma", "integral"),
                            [(r["t"], r["gamma"], r["integral"]) for r in decay.rows]))
    return rep


# ------------------------------------------------------------------ registry

@dataclass(frozen=True)
class Suite:
    name: str
    func: Callable
    criteria: tuple
    description: str
    defaults: dict


SUITES: dict[str, Suite] = {}


def _register(name, func, criteria, description, **defaults):
    SUITES[name] = Suite(name, func, criteria, description, defaults)


_register("gaussian-bound", run_gaussian_bound, (1,),
          "Gaussian upper bound fit and Feynman-Kac domination for random potentials.",
          n_cells=64, n_potentials=10, n_times=20, fk_tol=1e-8, C_max=1e3)
_register("propagation", run_propagation, (),
          "Leakage of the windowed wave-type kernel outside the propagation cone.",
          n_cells=64, t_cells=[8, 16, 32], checked_t_cells=[8, 16], buffer_cells=4, leak_tol=1e-6,
          cone_spread=1.5)
_register("square-equivalence", run_square_equivalence, (2, 3),
          "L2 identity of the area integral and Lp norm-ratio stability under refinement.",
          n_cells=64, refine_cells=128, n_functions=20, n_refine_functions=20, per_octave=8,
          modes=[2, 8], l2_tol=0.0125, p_values=[1.5, 3.0], bracket_tol=0.2)
_register("journe", run_journe, (4,),
          "Journe covering sums against |Omega| for random open sets.",
          n_cells=64, refine_cells=128, n_sets=100, delta=1.0, c_bound=100.0,
          stability_tol=0.25)
_register("tent-decomp", run_tent_decomp, (5,),
          "Tent-space atomic decomposition: reconstruction, coefficient bound, tail decay.",
          n_cells=32, per_octave=4, n_functions=50, recon_tol=1e-12, C_bound=4.0)
_register("atom-validate", run_atom_validate, (6,),
          "Lift of tent atoms to Hardy atoms: validation and area-integral bounds.",
          n_cells=[32, 64], n_atoms=50, per_octave=4, M=[1, 2], tol=1e-6, S_bound=1.0,
          stability_tol=0.3)
_register("hardy-decomp", run_hardy_decomp, (7,),
          "Hardy atomic decomposition round trip at two scale densities.",
          n_cells=16, n_functions=20, M=1, modes=[1, 4], per_octave=[8, 16],
          residual_tol=[1e-3, 1e-4], ratio_bound=100.0)
_register("conditions-identity", run_conditions_identity, (8,),
          "Kernel conditions on the identity operator against the erfc oracle.",
          n_cells=1024, t_cells=32, gammas=[2, 3, 4, 6, 8], oracle_gammas=[2, 4, 8],
          oracle_tol=0.05, factor_tol=1e-8, delta_min=2.0)
_register("riesz", run_riesz, (9,),
          "Riesz transforms: norms, quadrature form, tail decay, double Riesz on atoms.",
          n_cells=64, v0=50.0, quad_points=200, quad_tol=1e-3, tail_cells=256,
          tail_t_cells=[2, 4, 8, 16, 32], gammas=[2, 3, 4, 6, 8, 12, 16], tail_min=0.4,
          atom_cells=[32, 64], n_atoms=50, atom_bound=10.0, stability_tol=0.3)
_register("multiplier", run_multiplier, (10,),
          "Marcinkiewicz constants of registry symbols and the multiplier atom harness.",
          marcinkiewicz_cells=64, s=[1.25, 1.25], resolution=256, padding=4, t_per_octave=2,
          finite_symbols=["one", "heat", "ratio", "riesz-like"],
          divergent_symbol="sin-divergent", growth_t=[8.0, 64.0], growth_factor=2.0,
          harness_symbols=["one", "heat", "ratio", "riesz-like"],
          uniform_symbols=["one", "ratio", "riesz-like"], atom_cells=[32, 64],
          n_atoms=50, stability_tol=0.3)
_register("prop53", run_prop53, (10,),
          "Weighted off-diagonal estimates: small-t scaling and gamma decay.",
          n_cells=128, R_cells=16, tR=[1 / 16, 1 / 8, 1 / 4], gammas=[2, 4, 8, 16],
          s=[1.25, 1.25], resolution=256, padding=2, scaling_factor=2.0)

# dependency order: operators, square function, decompositions, then the rest
ORDER = ["gaussian-bound", "propagation", "square-equivalence", "journe", "tent-decomp",
         "atom-validate", "hardy-decomp", "conditions-identity", "riesz", "multiplier",
         "prop53"]

CRITERIA = {1: ["gaussian-bound"], 2: ["square-equivalence"], 3: ["square-equivalence"],
            4: ["journe"], 5: ["tent-decomp"], 6: ["atom-validate"], 7: ["hardy-decomp"],
            8: ["conditions-identity"], 9: ["riesz"], 10: ["multiplier", "prop53"],
            11: list(ORDER)}


def run_suite(name: str, ctx: Context) -> Report:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    rep = SUITES[name].func(ctx)
    rep.provenance = {"code_version": __version__, "seed": ctx.seed}
    return rep
