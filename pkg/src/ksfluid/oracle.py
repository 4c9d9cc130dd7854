"""Brute-force grand-canonical sums on the shared grid, plus explicit
derivative formulas for the partition function and the first two
distribution functions.

This module is the independent ground truth for the hierarchy solver.  It
sums the truncated grand-canonical series for Xi and the correlation
numerators Z^(m) directly over node configurations, using the exact same
midpoint quadrature, so solver and reference agree up to their respective
truncations (order closure and kernel truncation on one side, the
particle-number cutoff N_max on the other), each of which carries a
computable bound.

Configuration sums exploit permutation symmetry: instead of all M^K node
tuples for K free particles, only nondecreasing index multisets are
enumerated, weighted by their permutation count K!/prod(c_i!).  The two
enumerations are algebraically identical; the multiset form is what makes
N_max = 6 affordable on desk-size grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetError, GateError
from .potentials import PairPotential, Perturbation, R_CLAMP, shifted_potential
from .quadrature import Grid, GridFunction, tuple_budget
from .ks import CorrelationVector, pair_matrices

__all__ = [
    "OracleConfig",
    "GrandCanonicalSums",
    "u_total",
    "v_total",
    "compute_grand_sums",
    "partition_function",
    "brute_rho",
    "deriv_xi",
    "deriv_rho1",
    "deriv_rho2",
    "deriv_xi_from",
    "deriv_rho1_from",
    "deriv_rho2_from",
    "fd_brute",
    "v_pair_matrix",
    "mean_particle_number",
    "comparison_report",
]


@dataclass(frozen=True)
class OracleConfig:
    """Particle-number truncation and grid for the reference sums."""

    N_max: int
    grid: Grid
    budget: int | None = None

    def __post_init__(self):
        if self.N_max < 2:
            raise ValueError("particle-number cutoff must be at least 2")


@dataclass(eq=False)
class GrandCanonicalSums:
    """Truncated partition function, numerators, and distribution functions.

    ``tails`` reports the stability-based bounds on everything dropped
    beyond N_max: each omitted term of Xi is at most (z|L|e^{bB})^N/N!.
    """

    xi: float
    z_m: list
    rho: list
    tails: dict

    def rho_values(self, m: int) -> np.ndarray:
        return self.rho[m - 1].values


# ---------------------------------------------------------------------------
# configuration energies
# ---------------------------------------------------------------------------

def u_total(u: PairPotential, positions) -> float:
    """Total pair energy of a labeled configuration; +inf on core overlap.

    Empty and single-particle configurations have zero energy.
    """
    pts = np.asarray(positions, dtype=float).reshape(-1, 3)
    n = pts.shape[0]
    if n <= 1:
        return 0.0
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(pts[i] - pts[j]))
            total += u(max(r, R_CLAMP))
            if math.isinf(total):
                return math.inf
    return total


def v_total(v: Perturbation, positions) -> float:
    """Same pairwise sum for a perturbation; always finite."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 3)
    n = pts.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            r = float(np.linalg.norm(pts[i] - pts[j]))
            total += v(max(r, R_CLAMP))
    return total


# ---------------------------------------------------------------------------
# multiset machinery
# ---------------------------------------------------------------------------

def _multiset_indices(M: int, K: int) -> tuple[np.ndarray, np.ndarray]:
    """All nondecreasing K-tuples over M node ids, with permutation counts.

    Rows come in lexicographic order.  The multiplicity of a row with run
    lengths c_1, c_2, ... is K!/(c_1! c_2! ...), the number of ordered
    tuples it represents.
    """
    if K == 0:
        return np.zeros((1, 0), dtype=np.int32), np.ones(1)
    rows = np.arange(M, dtype=np.int32).reshape(M, 1)
    for _ in range(K - 1):
        last = rows[:, -1].astype(np.int64)
        counts = M - last
        total = int(counts.sum())
        rep = np.repeat(rows, counts, axis=0)
        ends = np.cumsum(counts)
        offsets = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)
        newcol = (np.repeat(last, counts) + offsets).astype(np.int32)
        rows = np.concatenate([rep, newcol[:, None]], axis=1)
    denom = np.ones(rows.shape[0])
    run = np.ones(rows.shape[0])
    for a in range(1, K):
        same = rows[:, a] == rows[:, a - 1]
        run = np.where(same, run + 1.0, 1.0)
        denom *= np.where(same, run, 1.0)
    return rows, math.factorial(K) / denom


def _internal_energy(U: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Pair energy within each multiset row; repeated nodes hit the clamped
    diagonal, exactly as ordered tuples would."""
    C, K = idx.shape
    energy = np.zeros(C)
    for a in range(K):
        for b in range(a + 1, K):
            energy += U[idx[:, a], idx[:, b]]
    return energy


def _combo_contract(EB: np.ndarray, idx: np.ndarray, weights: np.ndarray,
                    m: int) -> np.ndarray | float:
    """sum_c weights[c] * prod_{a<=m} EB[t_a, c-th multiset] as an m-index array.

    The per-node cross factor of a multiset is the column product of EB
    over its members; contraction over the multiset axis is chunked so
    intermediates stay small, in a fixed order.
    """
    if m == 0:
        return float(np.sum(weights))
    if m > 4:
        raise ValueError("reference sums support fixed orders up to 4")
    M = EB.shape[0]
    chunk = 262_144 if m <= 2 else 65_536
    out = np.zeros((M,) * m)
    for lo in range(0, idx.shape[0], chunk):
        hi = min(idx.shape[0], lo + chunk)
        sub = idx[lo:hi]
        wts = weights[lo:hi]
        q = np.ones((M, hi - lo))
        for a in range(sub.shape[1]):
            q *= EB[:, sub[:, a]]
        if m == 1:
            out += q @ wts
        elif m == 2:
            out += (q * wts) @ q.T
        elif m == 3:
            out += np.einsum("ac,bc,dc,c->abd", q, q, q, wts, optimize=True)
        else:
            out += np.einsum("ac,bc,dc,ec,c->abde", q, q, q, q, wts, optimize=True)
    return out


def _fixed_boltzmann(EB: np.ndarray, m: int) -> np.ndarray:
    """exp(-beta * U_m) over all m-tuples of fixed coordinates."""
    M = EB.shape[0]
    out = np.ones((M,) * m)
    for a in range(m):
        for b in range(a + 1, m):
            shape = [1] * m
            shape[a] = M
            shape[b] = M
            out = out * EB.reshape(shape)
    return out


def _poisson_tail(y: float, k0: int) -> float:
    """sum_{K > k0} y^K / K! by direct accumulation."""
    term = 1.0
    for k in range(1, k0 + 2):
        term *= y / k
    total = 0.0
    k = k0 + 1
    while term > 0.0 and k < k0 + 500:
        total += term
        k += 1
        term *= y / k
        if term < total * 1e-18:
            total += term
            break
    return total


# ---------------------------------------------------------------------------
# grand-canonical sums
# ---------------------------------------------------------------------------

def compute_grand_sums(cfg: OracleConfig, u: PairPotential, beta: float, z: float,
                       m_max: int, B: float = 0.0) -> GrandCanonicalSums:
    """Truncated Xi and Z^(m), rho^(m) for m = 1..m_max on the shared grid.

    Each N-particle term fixes m coordinates on the grid and sums the
    Boltzmann weight over multisets of the remaining N-m; the series is
    cut at N_max with the stability tail bound reported per quantity.
    """
    if z <= 0:
        raise ValueError("activity must be positive")
    if m_max > cfg.N_max:
        raise ValueError(f"need N_max >= m_max, got N_max={cfg.N_max} < m_max={m_max}")
    grid = cfg.grid
    M = grid.n_nodes
    w = grid.weight
    limit = tuple_budget(cfg.budget)
    for K in range(cfg.N_max + 1):
        count = math.comb(M + K - 1, K)
        if count > limit:
            raise BudgetError(
                f"{count} multisets of {K} free particles exceed the budget of {limit}; "
                "lower N_max or raise KS_MAX_TUPLES")

    _, U, EB, _ = pair_matrices(u, beta, grid)
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for K in range(cfg.N_max + 1):
        idx, mult = _multiset_indices(M, K)
        with np.errstate(over="ignore", under="ignore"):
            weights = mult * np.exp(-beta * _internal_energy(U, idx))
        cache[K] = (idx, weights)

    xi = 0.0
    for N in range(cfg.N_max + 1):
        idx, weights = cache[N]
        xi += z ** N / math.factorial(N) * w ** N * float(np.sum(weights))

    y = z * grid.box.volume * math.exp(beta * B)
    xi_tail = _poisson_tail(y, cfg.N_max)

    z_funcs = []
    rho_funcs = []
    z_tails = []
    rho_tails = []
    for m in range(1, m_max + 1):
        fixed = _fixed_boltzmann(EB, m)
        vals = np.zeros((M,) * m)
        for N in range(m, cfg.N_max + 1):
            K = N - m
            idx, weights = cache[K]
            coeff = z ** N / math.factorial(K) * w ** K
            vals += coeff * _combo_contract(EB, idx, weights, m)
        vals *= fixed
        z_tail = z ** m * math.exp(beta * B * m) * _poisson_tail(y, cfg.N_max - m)
        rho_vals = vals / xi
        z_funcs.append(GridFunction(order=m, grid=grid, values=vals))
        rho_funcs.append(GridFunction(order=m, grid=grid, values=rho_vals))
        z_tails.append(z_tail)
        rho_tails.append((z_tail + float(np.max(rho_vals)) * xi_tail) / xi)

    return GrandCanonicalSums(
        xi=xi,
        z_m=z_funcs,
        rho=rho_funcs,
        tails={"xi": xi_tail, "z": z_tails, "rho": rho_tails},
    )


def partition_function(cfg: OracleConfig, u: PairPotential, beta: float, z: float,
                       B: float = 0.0) -> tuple[float, float]:
    """Truncated grand partition function and its stability tail bound."""
    sums = compute_grand_sums(cfg, u, beta, z, m_max=0, B=B)
    return sums.xi, sums.tails["xi"]


def brute_rho(cfg: OracleConfig, u: PairPotential, beta: float, z: float, m: int,
              B: float = 0.0, sums: GrandCanonicalSums | None = None
              ) -> tuple[GridFunction, float]:
    """Distribution function of order m from the direct sums, with tail bound."""
    if m < 1:
        raise ValueError("order must be at least 1")
    if cfg.N_max < m:
        raise ValueError(f"N_max = {cfg.N_max} cannot resolve order {m}")
    if sums is None or len(sums.rho) < m:
        sums = compute_grand_sums(cfg, u, beta, z, m_max=m, B=B)
    return sums.rho[m - 1], sums.tails["rho"][m - 1]


def mean_particle_number(sums: GrandCanonicalSums) -> float:
    """<N> as the grid integral of the singlet distribution."""
    rho1 = sums.rho[0]
    return float(rho1.grid.weight * np.sum(rho1.values))


# ---------------------------------------------------------------------------
# explicit derivative formulas
# ---------------------------------------------------------------------------

def v_pair_matrix(v: Perturbation, grid: Grid) -> np.ndarray:
    """v evaluated on all node-pair separations, diagonal clamped."""
    delta = grid.nodes[:, None, :] - grid.nodes[None, :, :]
    dist = np.sqrt((delta * delta).sum(axis=-1))
    np.fill_diagonal(dist, R_CLAMP)
    return v.values(dist)


def deriv_xi_from(z2: np.ndarray, vmat: np.ndarray, w: float, beta: float) -> float:
    """-(beta/2) * double integral of v(|R-R'|) against the pair numerator.

    Pair symmetry collapses the series derivative of the partition function
    onto the unnormalized Z^(2); dividing by Xi instead would produce the
    derivative of log Xi and break the finite-difference check.
    """
    return float(-0.5 * beta * w * w * np.einsum("ij,ij->", vmat, z2))


def deriv_rho1_from(rho1: np.ndarray, rho2: np.ndarray, rho3: np.ndarray,
                    vmat: np.ndarray, w: float, beta: float) -> np.ndarray:
    """Quotient-rule derivative of the singlet distribution.

    Three terms: the direct pair coupling against rho2, the background
    pair coupling against rho3, and the compensating product term from
    differentiating 1/Xi.
    """
    t_pair = -beta * w * np.einsum("ij,ij->i", vmat, rho2)
    t_bg = -0.5 * beta * w * w * np.einsum("jk,ijk->i", vmat, rho3)
    t_comp = 0.5 * beta * w * w * rho1 * np.einsum("jk,jk->", vmat, rho2)
    return t_pair + t_bg + t_comp


def deriv_rho2_from(rho2: np.ndarray, rho3: np.ndarray, rho4: np.ndarray,
                    vmat: np.ndarray, w: float, beta: float) -> np.ndarray:
    """Quotient-rule derivative of the pair distribution.

    Five terms: the contact term, two single integrals against rho3 (one
    per fixed particle), the half-weighted double integral against rho4
    (each unordered second pair is visited twice during integration), and
    the compensating rho2*rho2 term.
    """
    contact = -beta * vmat * rho2
    t_one = -beta * w * np.einsum("ik,ijk->ij", vmat, rho3)
    t_two = -beta * w * np.einsum("jk,ijk->ij", vmat, rho3)
    t_four = -0.5 * beta * w * w * np.einsum("kl,ijkl->ij", vmat, rho4)
    t_comp = 0.5 * beta * w * w * rho2 * np.einsum("kl,kl->", vmat, rho2)
    return contact + t_one + t_two + t_four + t_comp


def deriv_xi(cfg: OracleConfig, u: PairPotential, beta: float, z: float,
             v: Perturbation, B: float = 0.0,
             sums: GrandCanonicalSums | None = None) -> float:
    if sums is None or len(sums.z_m) < 2:
        sums = compute_grand_sums(cfg, u, beta, z, m_max=2, B=B)
    vmat = v_pair_matrix(v, cfg.grid)
    return deriv_xi_from(sums.z_m[1].values, vmat, cfg.grid.weight, beta)


def deriv_rho1(cfg: OracleConfig, u: PairPotential, beta: float, z: float,
               v: Perturbation, B: float = 0.0,
               sums: GrandCanonicalSums | None = None) -> GridFunction:
    if sums is None or len(sums.rho) < 3:
        sums = compute_grand_sums(cfg, u, beta, z, m_max=3, B=B)
    vmat = v_pair_matrix(v, cfg.grid)
    vals = deriv_rho1_from(sums.rho_values(1), sums.rho_values(2), sums.rho_values(3),
                           vmat, cfg.grid.weight, beta)
    return GridFunction(order=1, grid=cfg.grid, values=vals)


def deriv_rho2(cfg: OracleConfig, u: PairPotential, beta: float, z: float,
               v: Perturbation, B: float = 0.0,
               sums: GrandCanonicalSums | None = None) -> GridFunction:
    if cfg.N_max < 4:
        raise ValueError("the pair-derivative formula needs N_max >= 4 to resolve rho4")
    if sums is None or len(sums.rho) < 4:
        sums = compute_grand_sums(cfg, u, beta, z, m_max=4, B=B)
    vmat = v_pair_matrix(v, cfg.grid)
    vals = deriv_rho2_from(sums.rho_values(2), sums.rho_values(3), sums.rho_values(4),
                           vmat, cfg.grid.weight, beta)
    return GridFunction(order=2, grid=cfg.grid, values=vals)


def fd_brute(cfg: OracleConfig, u: PairPotential, v: Perturbation, beta: float,
             z: float, eps: float, orders: Sequence[int] = (1, 2), *,
             v_norm: float, t0: float = 0.5, B: float = 0.0) -> dict:
    """Finite-difference derivative (rho(u + eps*v) - rho(u))/eps per order."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps * v_norm > t0 / 2.0 + 1e-15:
        raise GateError(
            f"eps*||v|| = {eps * v_norm:.6g} beyond the gate t0/2 = {t0 / 2.0:.6g}")
    m_top = max(orders)
    base = compute_grand_sums(cfg, u, beta, z, m_max=m_top, B=B)
    pert = compute_grand_sums(cfg, shifted_potential(u, v, eps), beta, z,
                              m_max=m_top, B=B)
    out = {}
    for m in orders:
        diff = (pert.rho_values(m) - base.rho_values(m)) / eps
        out[m] = GridFunction(order=m, grid=cfg.grid, values=diff)
    return out


# ---------------------------------------------------------------------------
# solver comparison
# ---------------------------------------------------------------------------

def comparison_report(solver_rho: CorrelationVector, solver_bounds: dict,
                      sums: GrandCanonicalSums, rel_tol: float | None = None) -> dict:
    """Nodewise solver-vs-reference comparison with the combined budget.

    Per order m the budget adds the solver's a-priori truncation bound to
    the reference tail bound; ``rel_tol`` optionally adds an empirical
    relative criterion against the largest reference value of that order.
    """
    per_order = solver_bounds.get("per_order_sup", [])
    rows = []
    for m in range(1, min(solver_rho.m_max, len(sums.rho)) + 1):
        diff = float(np.max(np.abs(solver_rho.phis[m - 1] - sums.rho_values(m))))
        budget = (per_order[m - 1] if m - 1 < len(per_order) else math.inf) \
            + sums.tails["rho"][m - 1]
        sup_rho = float(np.max(np.abs(sums.rho_values(m))))
        row = {
            "order": m,
            "sup_diff": diff,
            "budget": budget,
            "within_budget": bool(diff <= budget),
            "sup_rho": sup_rho,
        }
        if rel_tol is not None:
            row["rel_threshold"] = rel_tol * sup_rho
            row["within_rel"] = bool(diff <= rel_tol * sup_rho)
        rows.append(row)
    report = {
        "orders": rows,
        "xi": sums.xi,
        "tails": {k: (list(val) if isinstance(val, list) else val)
                  for k, val in sums.tails.items()},
        "pass": all(r["within_budget"] and r.get("within_rel", True) for r in rows),
    }
    return report
