"""Derivatives of the correlation hierarchy with respect to the pair potential.

The solved hierarchy (I - z*A) rho = z*e1 is differentiated implicitly:
along a direction v the derivative dr solves (I - z*A) dr = z*A'(v) rho,
where A' = D'(v)*K + D*K'(v) combines the diagonal derivative (pointwise
multiplication by -beta times the pivot sum of v) with kernel blocks built
from the Mayer derivative -beta*exp(-beta*u)*v.  The extension blocks of K
are constants in u and drop out of K'.

Both rho and dr come from the same Neumann fixed-point loop; the resolvent
is never formed.  Pivot indices are pinned to the unperturbed potential
everywhere, which makes the discrete derivative algebra exact along the
ray u + t*v and is what the finite-difference harness verifies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, EmbeddingError, GateError
from .potentials import (PairPotential, Perturbation, RegularityReport,
                         shifted_potential)
from .quadrature import Box, Grid, GridFunction, ImbeddingSpec, build_grid, restrict
from .ks import (CorrelationVector, DirectionTables, KSConfig, OperatorTables,
                 SolveReport, cv_xnorm, jstar, solve_ks)

__all__ = [
    "DerivativeRequest",
    "DerivativeResult",
    "FDTable",
    "SweepResult",
    "mayer_derivative",
    "d_derivative",
    "k_prime",
    "apply_Kprime",
    "apply_Aprime",
    "derivative_rho",
    "finite_difference_defect",
    "mayer_remainder_l1",
    "d_remainder_sup",
    "fit_loglog_slope",
    "limit_sweep",
]


# ---------------------------------------------------------------------------
# pointwise derivative kernels
# ---------------------------------------------------------------------------

def mayer_derivative(u: PairPotential, beta: float, v: Perturbation, r: float) -> float:
    """Derivative of the Mayer function along v: -beta*exp(-beta*u(r))*v(r).

    Zero on hard cores, where the Boltzmann factor vanishes.
    """
    if r <= 0:
        raise ValueError("separation must be positive")
    val = u(r)
    if math.isinf(val):
        return 0.0
    return -beta * math.exp(-beta * val) * v(r)


def d_derivative(u: PairPotential, beta: float, v: Perturbation, positions) -> float:
    """Derivative of the pivot Boltzmann product: -beta*d_m * sum_{i != j*} v(|R_i - R_j*|).

    The pivot is selected from ``u`` alone, never from a perturbed
    potential, so the same index serves the whole ray u + t*v.
    """
    pts = np.asarray(positions, dtype=float)
    m = pts.shape[0]
    if m == 1:
        return 0.0
    j = jstar(u, pts) - 1
    dm = 1.0
    vsum = 0.0
    for i in range(m):
        if i == j:
            continue
        r = float(np.linalg.norm(pts[i] - pts[j]))
        val = u(r)
        dm = 0.0 if math.isinf(val) else dm * math.exp(-beta * val)
        vsum += v(r)
    return -beta * dm * vsum


def k_prime(u: PairPotential, beta: float, v: Perturbation, R, Rp) -> float:
    """Product-rule derivative of the n-factor kernel:
    sum_i (df v)(|R'_i - R|) * prod_{j != i} f(|R'_j - R|)."""
    R = np.asarray(R, dtype=float)
    pts = np.asarray(Rp, dtype=float)
    n = pts.shape[0]
    radii = [float(np.linalg.norm(pts[i] - R)) for i in range(n)]
    fs = []
    dfs = []
    for r in radii:
        val = u(r)
        if math.isinf(val):
            fs.append(-1.0)
            dfs.append(0.0)
        else:
            fs.append(math.expm1(-beta * val))
            dfs.append(-beta * math.exp(-beta * val) * v(r))
    total = 0.0
    for i in range(n):
        term = dfs[i]
        for j in range(n):
            if j != i:
                term *= fs[j]
        total += term
    return total


# ---------------------------------------------------------------------------
# operator wrappers
# ---------------------------------------------------------------------------

def apply_Kprime(cfg: KSConfig, u: PairPotential, beta: float, v: Perturbation,
                 grid: Grid, phi: CorrelationVector) -> CorrelationVector:
    tables = OperatorTables(u, beta, grid, cfg.m_max)
    direction = DirectionTables(tables, v)
    return CorrelationVector(grid, tables.apply_Kprime(cfg, direction, phi.phis))


def apply_Aprime(cfg: KSConfig, u: PairPotential, beta: float, v: Perturbation,
                 grid: Grid, phi: CorrelationVector) -> CorrelationVector:
    tables = OperatorTables(u, beta, grid, cfg.m_max)
    direction = DirectionTables(tables, v)
    return CorrelationVector(grid, tables.apply_Aprime(cfg, direction, phi.phis))


# ---------------------------------------------------------------------------
# implicit derivative of the solved hierarchy
# ---------------------------------------------------------------------------

@dataclass
class DerivativeRequest:
    """One derivative computation: base potential, direction, and solver setup.

    ``v_norm`` is the measured weighted norm of v (callers compute it via
    ``vu_norm`` with their envelope); it feeds the perturbation gates.
    ``t`` scales the direction in finite-difference studies.
    """

    u: PairPotential
    v: Perturbation
    beta: float
    z: float
    grid: Grid
    ks: KSConfig
    report: RegularityReport | None = None
    t: float = 1.0
    v_norm: float | None = None
    t0: float = 0.5
    stability_B: float = 0.0
    override_gate: bool = False

    def __post_init__(self):
        if self.v_norm is not None and not math.isfinite(self.v_norm):
            raise GateError("direction lies outside the perturbation space (infinite norm)")

    @property
    def B(self) -> float:
        return self.report.B if self.report is not None else self.stability_B


@dataclass
class DerivativeResult:
    """Grid values of the directional derivative with solve diagnostics."""

    dr: CorrelationVector
    report: SolveReport
    bound_check: dict
    rho: CorrelationVector
    rho_report: SolveReport


def derivative_rho(req: DerivativeRequest, *,
                   rho: CorrelationVector | None = None,
                   rho_report: SolveReport | None = None,
                   tables: OperatorTables | None = None,
                   direction: DirectionTables | None = None,
                   budget: int | None = None) -> DerivativeResult:
    """Solve (I - z*A) dr = z*A'(v) rho by the shared Neumann loop.

    Runs (or reuses) the base solve for rho, assembles the right-hand side
    z*A'(v) rho once, and iterates dr <- z*A dr + rhs to the solver
    tolerance.  The returned bound check compares ||dr|| against
    z*||A' rho|| / (1 - z*c_beta*e^(2 beta B + 1)), with the lattice
    contraction certificate substituted when c_beta degenerates to zero.
    """
    if not req.override_gate and req.v_norm is not None and req.v_norm > req.t0:
        raise GateError(
            f"direction norm {req.v_norm:.6g} exceeds the gate t0 = {req.t0:.6g}")
    if tables is None:
        tables = OperatorTables(req.u, req.beta, req.grid, req.ks.m_max, budget=budget)
    if direction is None:
        direction = DirectionTables(tables, req.v)
    if rho is None:
        rho, rho_report = solve_ks(
            req.ks, req.u, req.beta, req.z, req.grid, req.report,
            override_gate=req.override_gate, tables=tables,
            stability_B=req.stability_B, budget=budget)
    elif rho_report is None:
        raise ValueError("pass rho_report together with a precomputed rho")

    z = req.z
    gamma = rho_report.weight
    rhs = [z * a for a in tables.apply_Aprime(req.ks, direction, rho.phis, budget)]
    rhs_norm = cv_xnorm(rhs, gamma)

    phis = [np.zeros_like(a) for a in rhs]
    residuals: list[float] = []
    ratios: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, req.ks.max_iters + 1):
        new = [z * a + b for a, b in zip(tables.apply_A(req.ks, phis, budget), rhs)]
        res = cv_xnorm([a - b for a, b in zip(new, phis)], gamma)
        if residuals and residuals[-1] > 0.0:
            ratios.append(res / residuals[-1])
        residuals.append(res)
        phis = new
        if res <= req.ks.neumann_tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"derivative residual {residuals[-1]:.3e} above tolerance "
            f"{req.ks.neumann_tol:.3e} after {req.ks.max_iters} iterations")

    c_b = req.report.c_beta if req.report is not None else 0.0
    bb = req.beta * req.B
    if c_b > 0:
        kappa = z * c_b * math.exp(2.0 * bb + 1.0)
    else:
        chat = tables.kernel_l1
        kappa = z * rho_report.weight * math.exp(chat / rho_report.weight) * math.exp(2.0 * bb) \
            if rho_report.weight > 0 else 0.0
    norm_dr = cv_xnorm(phis, gamma)
    bound = rhs_norm / (1.0 - kappa) if kappa < 1.0 else math.inf
    bound_check = {
        "norm_dr": norm_dr,
        "rhs_norm": rhs_norm,
        "kappa": kappa,
        "bound": bound,
        "ok": bool(norm_dr <= bound + 10.0 * req.ks.neumann_tol),
    }
    if not bound_check["ok"]:
        warnings.warn(f"derivative norm {norm_dr:.6g} exceeds its a-priori bound "
                      f"{bound:.6g}", RuntimeWarning, stacklevel=2)

    report = SolveReport(
        iterations=iterations,
        residuals=residuals,
        contraction_estimate=max(ratios) if ratios else 0.0,
        contraction_ratios=ratios,
        contraction_ceiling=rho_report.contraction_ceiling,
        contraction_ok=(max(ratios) if ratios else 0.0) <= rho_report.contraction_ceiling + 1e-6,
        tail_bounds=rho_report.tail_bounds,
        weight=gamma,
        norm_x=norm_dr,
        ruelle_bound=bound,
        ruelle_ok=bound_check["ok"],
        min_value=min(float(p.min()) for p in phis),
        notes=[],
    )
    return DerivativeResult(
        dr=CorrelationVector(req.grid, phis),
        report=report,
        bound_check=bound_check,
        rho=rho,
        rho_report=rho_report,
    )


# ---------------------------------------------------------------------------
# finite-difference verification
# ---------------------------------------------------------------------------

@dataclass
class FDTable:
    """Defect table of a finite-difference differentiability check."""

    epsilons: list
    defects: list
    slope: float

    def rows(self):
        return list(zip(self.epsilons, self.defects))


def fit_loglog_slope(epsilons: Sequence[float], defects: Sequence[float]) -> float:
    """Least-squares slope of log defect against log epsilon.

    Zero defects (exact directions) are excluded; with fewer than two
    usable points the slope is reported as nan.
    """
    xs, ys = [], []
    for e, d in zip(epsilons, defects):
        if d > 0.0:
            xs.append(math.log10(e))
            ys.append(math.log10(d))
    if len(xs) < 2:
        return math.nan
    return float(np.polyfit(xs, ys, 1)[0])


def finite_difference_defect(req: DerivativeRequest, epsilons: Sequence[float], *,
                             result: DerivativeResult | None = None,
                             budget: int | None = None) -> FDTable:
    """Defect ||rho(u + eps*v) - rho(u) - eps*dr|| per epsilon, plus its slope.

    Every perturbed solve pins pivot selection to the base potential and
    reuses the base solve's norm weight, so the defect isolates the
    quadratic remainder of the derivative.  Each epsilon must keep
    eps*||v|| within half the gate t0.
    """
    if req.v_norm is None:
        raise GateError("finite-difference runs need the measured direction norm")
    for eps in epsilons:
        if eps <= 0:
            raise ValueError("epsilons must be positive")
        if eps * req.v_norm > req.t0 / 2.0 + 1e-15:
            raise GateError(
                f"eps = {eps:g} pushes eps*||v|| = {eps * req.v_norm:.6g} beyond t0/2 = "
                f"{req.t0 / 2.0:.6g}")

    tables = OperatorTables(req.u, req.beta, req.grid, req.ks.m_max, budget=budget)
    if result is None:
        result = derivative_rho(req, tables=tables, budget=budget)
    rho, dr = result.rho, result.dr
    gamma = result.rho_report.weight

    defects = []
    for eps in epsilons:
        u_eps = shifted_potential(req.u, req.v, eps)
        tab_eps = OperatorTables(u_eps, req.beta, req.grid, req.ks.m_max,
                                 pivot_energies=tables.energies, budget=budget)
        rho_eps, _ = solve_ks(req.ks, u_eps, req.beta, req.z, req.grid, None,
                              override_gate=True, tables=tab_eps, weight=gamma,
                              stability_B=req.B, budget=budget)
        diff = [pe - p0 - eps * pd
                for pe, p0, pd in zip(rho_eps.phis, rho.phis, dr.phis)]
        defects.append(cv_xnorm(diff, gamma))
    return FDTable(list(epsilons), defects, fit_loglog_slope(epsilons, defects))


def mayer_remainder_l1(u: PairPotential, beta: float, v: Perturbation, eps: float,
                       r_max: float, tol: float = 1e-12) -> float:
    """Radial L1 remainder of the Mayer derivative at step eps:
    4*pi * int |f(u + eps*v) - f(u) + eps*beta*exp(-beta*u)*v| r^2 dr."""
    from scipy import integrate

    def integrand(r):
        uu = u(r)
        if math.isinf(uu):
            return 0.0
        vv = v(r)
        e = math.exp(-beta * uu)
        return 4.0 * math.pi * e * abs(math.expm1(-beta * eps * vv) + beta * eps * vv) * r * r

    pts = sorted(p for p in (tuple(u.breakpoints) + tuple(v.breakpoints)) if 0 < p < r_max)
    value, _ = integrate.quad(integrand, 0.0, r_max, points=pts or None,
                              epsabs=tol, epsrel=1e-12, limit=200)
    return value


def d_remainder_sup(u: PairPotential, beta: float, v: Perturbation, eps: float,
                    order: int, box: Box, n_samples: int = 64,
                    seed: int = 0) -> float:
    """Sup over sampled tuples of |d_m(u+eps*v) - d_m(u) - eps*(dd_m)v|.

    Tuples are drawn uniformly from the box; the pivot comes from the base
    potential for every term, matching the solver's pinning rule.
    """
    if order < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        pts = rng.uniform(-box.side / 2.0, box.side / 2.0, size=(order, 3))
        try:
            j = jstar(u, pts) - 1
        except Exception:
            continue
        base = 1.0
        pert = 1.0
        vsum = 0.0
        for i in range(order):
            if i == j:
                continue
            r = float(np.linalg.norm(pts[i] - pts[j]))
            uu = u(r)
            vv = v(r)
            if math.isinf(uu):
                base = 0.0
                pert = 0.0
            else:
                base *= math.exp(-beta * uu)
                pert *= math.exp(-beta * (uu + eps * vv))
            vsum += vv
        defect = abs(pert - base + eps * beta * base * vsum)
        worst = max(worst, defect)
    return worst


# ---------------------------------------------------------------------------
# box-size sweep toward the bulk limit
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    side: float
    rho_diff: list
    dr_diff: list
    per_order_bound: list


@dataclass
class SweepResult:
    """Inner-box sup differences of rho and dr against the largest box."""

    inner_side: float
    inner_ng: int
    reference_side: float
    rows: list

    def csv_rows(self):
        out = []
        for row in self.rows:
            out.append([row.side] + list(row.rho_diff) + list(row.dr_diff))
        return out


def limit_sweep(u: PairPotential, v: Perturbation, beta: float, z: float,
                inner_box: Box, inner_ng: int, outer_sides: Sequence[float],
                cfg: KSConfig, report: RegularityReport | None = None, *,
                v_norm: float | None = None, t0: float = 0.5,
                stability_B: float = 0.0, override_gate: bool = False,
                budget: int | None = None) -> SweepResult:
    """Solve rho and dr on growing boxes sharing one node lattice and report
    inner-box sup differences against the largest box.

    The largest box stands in for the bulk limit; differences are reported
    raw, next to the per-order truncation bounds of each solve, and no
    rate is fitted.  Outer sides must extend the inner lattice by whole
    node steps or the imbedding is refused.
    """
    sides = sorted(float(s) for s in outer_sides)
    if len(sides) < 1:
        raise ValueError("need at least one outer box")
    h = inner_box.side / inner_ng
    inner_grid = build_grid(inner_box, inner_ng)

    restricted = []
    bounds = []
    for side in sides:
        ng = side / h
        if abs(ng - round(ng)) > 1e-9:
            raise EmbeddingError(
                f"outer side {side:g} is not a whole number of node steps {h:g}")
        grid_l = build_grid(Box(side), int(round(ng)))
        spec = ImbeddingSpec.build(grid_l, inner_grid)
        tables = OperatorTables(u, beta, grid_l, cfg.m_max, budget=budget)
        req = DerivativeRequest(u=u, v=v, beta=beta, z=z, grid=grid_l, ks=cfg,
                                report=report, v_norm=v_norm, t0=t0,
                                stability_B=stability_B, override_gate=override_gate)
        result = derivative_rho(req, tables=tables, budget=budget)
        rho_in = [restrict(spec, gf).values for gf in result.rho.gridfunctions()]
        dr_in = [restrict(spec, gf).values for gf in result.dr.gridfunctions()]
        restricted.append((side, rho_in, dr_in))
        bounds.append(result.rho_report.tail_bounds.get("per_order_sup",
                                                        [0.0] * cfg.m_max))

    _, rho_ref, dr_ref = restricted[-1]
    rows = []
    for (side, rho_in, dr_in), bnd in zip(restricted, bounds):
        rho_diff = [float(np.max(np.abs(a - b))) for a, b in zip(rho_in, rho_ref)]
        dr_diff = [float(np.max(np.abs(a - b))) for a, b in zip(dr_in, dr_ref)]
        rows.append(SweepRow(side=side, rho_diff=rho_diff, dr_diff=dr_diff,
                             per_order_bound=list(bnd)))
    return SweepResult(inner_side=inner_box.side, inner_ng=inner_ng,
                       reference_side=sides[-1], rows=rows)
