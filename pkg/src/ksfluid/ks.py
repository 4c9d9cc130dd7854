"""Kirkwood-Salsburg hierarchy on a fixed grid and its Neumann-series solution.

The semi-infinite linear system (I - z*A) rho = z*e1 couples all
correlation orders; A = D*K factors into a diagonal multiplication by the
pivot Boltzmann products d_m and a block integral operator K whose row m
collects the kernel blocks K_{m,n} acting on order m+n-1 plus, for m >= 2,
the extension of order m-1.  Everything here operates on one shared
midpoint grid, for which the hierarchy identities hold exactly for the
induced atomic measure; the only approximations are the order closure
(phi_m = 0 beyond m_max) and the kernel-sum truncation at n_max, both of
which carry computable bounds that are reported with every solve.

Pivot convention: for a tuple R the pivot j* is the smallest index
maximizing sum_{i != j} u(|R_i - R_j|), which realizes the stability
bound S_{j*} >= -2B.  Derivative computations pin the pivot to the
unperturbed potential so that the discrete derivative algebra is exact
along the whole perturbation ray.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateConfigurationError, GateError
from .potentials import PairPotential, Perturbation, R_CLAMP, RegularityReport
from .quadrature import Grid, GridFunction, check_budget

__all__ = [
    "KSConfig",
    "CorrelationVector",
    "OperatorTables",
    "DirectionTables",
    "SolveReport",
    "pair_matrices",
    "jstar",
    "project_pi",
    "d_m",
    "k_n",
    "apply_K",
    "apply_D",
    "apply_A",
    "solve_ks",
    "cv_xnorm",
]

_MAX_TAIL_TERMS = 80


@dataclass(frozen=True)
class KSConfig:
    """Truncation and iteration parameters of the hierarchy solver."""

    m_max: int = 3
    n_max: int = 4
    neumann_tol: float = 1e-10
    max_iters: int = 200

    def __post_init__(self):
        if self.m_max < 2:
            raise ValueError("need at least two correlation orders")
        if self.n_max < 1:
            raise ValueError("kernel sums need at least one term")
        if not self.neumann_tol > 0:
            raise ValueError("residual tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("need at least one iteration")


@dataclass(eq=False)
class CorrelationVector:
    """Truncated sequence (phi_1, ..., phi_m_max) on one shared grid.

    ``phis[k]`` holds order k+1 as an array of shape (n_nodes,) * (k+1);
    orders beyond the list are treated as zero (the closure rule).
    """

    grid: Grid
    phis: list
    closure: str = "zero"

    @property
    def m_max(self) -> int:
        return len(self.phis)

    @classmethod
    def zeros(cls, grid: Grid, m_max: int) -> "CorrelationVector":
        M = grid.n_nodes
        return cls(grid, [np.zeros((M,) * m) for m in range(1, m_max + 1)])

    @classmethod
    def unit_first(cls, grid: Grid, m_max: int) -> "CorrelationVector":
        out = cls.zeros(grid, m_max)
        out.phis[0][:] = 1.0
        return out

    def copy(self) -> "CorrelationVector":
        return CorrelationVector(self.grid, [p.copy() for p in self.phis], self.closure)

    def gridfunctions(self) -> list[GridFunction]:
        return [GridFunction(order=m + 1, grid=self.grid, values=p)
                for m, p in enumerate(self.phis)]

    def min_value(self) -> float:
        return min(float(p.min()) for p in self.phis)


def cv_xnorm(phis: Sequence[np.ndarray] | CorrelationVector, weight: float) -> float:
    """max_m weight^m * sup|phi_m| over the truncated sequence."""
    arrays = phis.phis if isinstance(phis, CorrelationVector) else phis
    best = 0.0
    for m, p in enumerate(arrays, start=1):
        best = max(best, weight ** m * float(np.max(np.abs(p))))
    return best


# ---------------------------------------------------------------------------
# pointwise operations on explicit position tuples
# ---------------------------------------------------------------------------

def _as_positions(positions) -> np.ndarray:
    pts = np.asarray(positions, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("positions must be an (m, 3) array-like")
    return pts


def jstar(u: PairPotential, positions) -> int:
    """Pivot index (1-based) of a particle tuple: the smallest index
    maximizing S_j = sum_{i != j} u(|R_i - R_j|).

    Any maximizer satisfies S_{j*} >= -2B for a B-stable potential because
    the S_j sum to twice the configuration energy.  Coincident positions
    make the pivot ill-defined and are rejected.
    """
    pts = _as_positions(positions)
    m = pts.shape[0]
    if m < 2:
        raise ValueError("pivot selection needs at least two particles")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=-1))
    off = ~np.eye(m, dtype=bool)
    if np.any(dist[off] < 1e-12):
        raise DegenerateConfigurationError("coincident particle positions")
    np.fill_diagonal(dist, 1.0)  # keep self-separations out of the evaluator
    vals = u.energies(dist)
    np.fill_diagonal(vals, 0.0)
    s = vals.sum(axis=0)
    return int(np.argmax(s)) + 1


def project_pi(positions, jstar_index: int):
    """Remove the pivot coordinate, preserving the order of the rest."""
    pts = _as_positions(positions)
    m = pts.shape[0]
    if m < 2:
        raise ValueError("cannot project a single-particle tuple")
    if not 1 <= jstar_index <= m:
        raise ValueError(f"pivot index {jstar_index} outside 1..{m}")
    return np.delete(pts, jstar_index - 1, axis=0)


def d_m(u: PairPotential, beta: float, positions) -> float:
    """Boltzmann product over pairs (i, j*) of the tuple; 1 for m = 1.

    Bounded by exp(2*beta*B) for a B-stable potential through the pivot
    inequality.
    """
    pts = _as_positions(positions)
    m = pts.shape[0]
    if m == 1:
        return 1.0
    j = jstar(u, pts) - 1
    out = 1.0
    for i in range(m):
        if i == j:
            continue
        val = u(float(np.linalg.norm(pts[i] - pts[j])))
        if math.isinf(val):
            return 0.0
        out *= math.exp(-beta * val)
    return out


def k_n(u: PairPotential, beta: float, R, Rp) -> float:
    """Kernel value prod_i f(|R'_i - R|) with f the Mayer function."""
    R = np.asarray(R, dtype=float)
    pts = _as_positions(Rp)
    out = 1.0
    for i in range(pts.shape[0]):
        r = float(np.linalg.norm(pts[i] - R))
        val = u(r) if r > 0 else u(R_CLAMP)
        out *= -1.0 if math.isinf(val) else math.expm1(-beta * val)
    return out


# ---------------------------------------------------------------------------
# grid tables
# ---------------------------------------------------------------------------

def pair_matrices(u: PairPotential, beta: float, grid: Grid):
    """Distance, energy, Boltzmann, and Mayer matrices over all node pairs.

    The diagonal (two particles on one node) is evaluated at the clamped
    separation; hard cores take the exp(-inf) = 0 branch there.
    """
    delta = grid.nodes[:, None, :] - grid.nodes[None, :, :]
    dist = np.sqrt((delta * delta).sum(axis=-1))
    np.fill_diagonal(dist, R_CLAMP)
    energies = u.energies(dist)
    with np.errstate(over="ignore", under="ignore"):
        boltzmann = np.exp(-beta * energies)
    mayer = boltzmann - 1.0
    return dist, energies, boltzmann, mayer


def _tuple_array(M: int, m: int) -> np.ndarray:
    flat = np.arange(M ** m)
    return np.stack(np.unravel_index(flat, (M,) * m), axis=1).astype(np.int32)


def _pivot_positions(U: np.ndarray, tuples: np.ndarray) -> np.ndarray:
    n_tup, m = tuples.shape
    if m == 1:
        return np.zeros(n_tup, dtype=np.int64)
    s = np.zeros((n_tup, m))
    for j in range(m):
        col = tuples[:, j]
        for k in range(m):
            if k != j:
                s[:, j] += U[tuples[:, k], col]
    # argmax returns the first maximizer, which is the lowest-index tie-break
    return np.argmax(s, axis=1)


@dataclass(eq=False)
class _OrderBook:
    tuples: np.ndarray
    pivot: np.ndarray
    pivot_node: np.ndarray
    kept_flat: np.ndarray
    d: np.ndarray


def _build_book(M: int, m: int, U_pivot: np.ndarray, EB: np.ndarray) -> _OrderBook:
    tuples = _tuple_array(M, m)
    pivot = _pivot_positions(U_pivot, tuples)
    pivot_node = tuples[np.arange(tuples.shape[0]), pivot].astype(np.int64)
    kept = np.zeros(tuples.shape[0], dtype=np.int64)
    if m >= 2:
        for j in range(m):
            mask = pivot == j
            if not np.any(mask):
                continue
            flat = np.zeros(int(mask.sum()), dtype=np.int64)
            for c in range(m):
                if c != j:
                    flat = flat * M + tuples[mask, c]
            kept[mask] = flat
    d = np.ones(tuples.shape[0])
    for k in range(m):
        vals = EB[tuples[:, k], pivot_node]
        d *= np.where(pivot == k, 1.0, vals)
    return _OrderBook(tuples=tuples, pivot=pivot, pivot_node=pivot_node,
                      kept_flat=kept, d=d)


def _contract_pivot(phi: np.ndarray, mats: Sequence[np.ndarray]) -> np.ndarray:
    """sum_{j_1..j_n} phi[..., j_1..j_n] * prod_a mats[a][j_a, b] -> [..., b].

    All matrices share the output pivot axis b.  The last tuple axis is
    contracted by one matrix product; the remaining ones by per-axis
    einsum reductions, so evaluation order is fixed.
    """
    n = len(mats)
    M = mats[0].shape[0]
    lead = phi.shape[:-n]
    x = phi.reshape(-1, M) @ mats[-1]
    x = x.reshape(lead + (M,) * (n - 1) + (M,))
    for a in range(n - 2, -1, -1):
        x = np.einsum("...jb,jb->...b", x, mats[a])
    return x


class OperatorTables:
    """Node-pair data and per-order pivot bookkeeping for one (u, beta, grid).

    ``pivot_energies`` may be supplied to pin pivot selection to a
    different (base) potential than the one whose Boltzmann factors enter
    the operators; derivative computations rely on this.
    """

    def __init__(self, u: PairPotential, beta: float, grid: Grid, m_top: int,
                 pivot_energies: np.ndarray | None = None,
                 budget: int | None = None):
        if m_top < 1:
            raise ValueError("need at least one correlation order")
        M = grid.n_nodes
        for m in range(1, m_top + 1):
            check_budget(M ** m, f"correlation order {m} on this grid", budget)
        self.u = u
        self.beta = float(beta)
        self.grid = grid
        self.m_top = int(m_top)
        self.M = M
        self.dist, self.energies, self.boltzmann, self.mayer = pair_matrices(u, beta, grid)
        if np.isfinite(self.energies[0, 0]):
            warnings.warn(
                "potential is finite at contact; coincident-node tuples are "
                f"evaluated at the clamped separation {R_CLAMP:g}",
                RuntimeWarning, stacklevel=2)
        self.pivot_energies = self.energies if pivot_energies is None else pivot_energies
        self.WF = grid.weight * self.mayer
        # lattice L1 bound on the one-particle kernel, sup_b sum_j w*|f_jb|;
        # plays the role of the regularity constant for the atomic measure
        self.kernel_l1 = float(np.max(np.abs(self.WF).sum(axis=0)))
        self.books = {m: _build_book(M, m, self.pivot_energies, self.boltzmann)
                      for m in range(1, m_top + 1)}

    # -- linear operators ---------------------------------------------------

    def apply_K(self, cfg: KSConfig, phis: Sequence[np.ndarray],
                budget: int | None = None) -> list[np.ndarray]:
        """Row m: sum_n K_{m,n} phi_{m+n-1} plus the extension of phi_{m-1}."""
        self._check_cfg(cfg, budget)
        M = self.M
        out = []
        for m in range(1, cfg.m_max + 1):
            acc = np.zeros((M ** (m - 1), M))
            for n in range(1, cfg.n_max + 1):
                q = m + n - 1
                if q > cfg.m_max:
                    break  # closure: higher orders are zero
                c = _contract_pivot(phis[q - 1], [self.WF] * n)
                acc += c.reshape(M ** (m - 1), M) / math.factorial(n)
            book = self.books[m]
            if m == 1:
                row = acc[0].copy()
            else:
                row = acc[book.kept_flat, book.pivot_node]
                row += phis[m - 2].reshape(-1)[book.kept_flat]
            out.append(row.reshape((M,) * m))
        return out

    def apply_D(self, phis: Sequence[np.ndarray]) -> list[np.ndarray]:
        return [p * self.books[m + 1].d.reshape(p.shape) for m, p in enumerate(phis)]

    def apply_A(self, cfg: KSConfig, phis: Sequence[np.ndarray],
                budget: int | None = None) -> list[np.ndarray]:
        return self.apply_D(self.apply_K(cfg, phis, budget))

    def apply_Kprime(self, cfg: KSConfig, direction: "DirectionTables",
                     phis: Sequence[np.ndarray], budget: int | None = None) -> list[np.ndarray]:
        """Kernel-derivative blocks: k_n replaced by its product-rule
        derivative, no extension blocks."""
        self._check_cfg(cfg, budget)
        M = self.M
        out = []
        for m in range(1, cfg.m_max + 1):
            acc = np.zeros((M ** (m - 1), M))
            for n in range(1, cfg.n_max + 1):
                q = m + n - 1
                if q > cfg.m_max:
                    break
                total = np.zeros((M ** (m - 1), M))
                for i in range(n):
                    mats = [self.WF] * n
                    mats[i] = direction.WG
                    c = _contract_pivot(phis[q - 1], mats)
                    total += c.reshape(M ** (m - 1), M)
                acc += total / math.factorial(n)
            book = self.books[m]
            if m == 1:
                row = acc[0].copy()
            else:
                row = acc[book.kept_flat, book.pivot_node]
            out.append(row.reshape((M,) * m))
        return out

    def apply_Dprime(self, direction: "DirectionTables",
                     phis: Sequence[np.ndarray]) -> list[np.ndarray]:
        """Diagonal-derivative rows: multiply by d_m first, then by the
        pivot-sum factor, which keeps hard-core zeros exact."""
        out = []
        for m, p in enumerate(phis, start=1):
            book = self.books[m]
            factor = book.d * (-self.beta) * direction.vsum[m]
            out.append(p * factor.reshape(p.shape))
        return out

    def apply_Aprime(self, cfg: KSConfig, direction: "DirectionTables",
                     phis: Sequence[np.ndarray], budget: int | None = None) -> list[np.ndarray]:
        kp = self.apply_Kprime(cfg, direction, phis, budget)
        dp = self.apply_Dprime(direction, self.apply_K(cfg, phis, budget))
        return [a + b for a, b in zip(self.apply_D(kp), dp)]

    def _check_cfg(self, cfg: KSConfig, budget: int | None) -> None:
        if cfg.m_max > self.m_top:
            raise ValueError(
                f"tables were built for orders up to {self.m_top}, config needs {cfg.m_max}")
        n_used = min(cfg.n_max, cfg.m_max)
        check_budget(self.M ** n_used, f"kernel integration over {n_used} box factors", budget)


class DirectionTables:
    """Direction-dependent pair data for derivatives along a perturbation v."""

    def __init__(self, tables: OperatorTables, v: Perturbation):
        self.v = v
        self.v_pair = v.values(tables.dist)
        if not np.all(np.isfinite(self.v_pair)):
            raise ValueError("perturbations must be finite at all node separations")
        # pairwise Mayer derivative -beta * exp(-beta u) * v; zero on hard cores
        self.g_pair = -tables.beta * tables.boltzmann * self.v_pair
        self.WG = tables.grid.weight * self.g_pair
        self.kernel_l1 = float(np.max(np.abs(self.WG).sum(axis=0)))
        self.vsum = {}
        for m, book in tables.books.items():
            total = np.zeros(book.tuples.shape[0])
            for k in range(m):
                vals = self.v_pair[book.tuples[:, k], book.pivot_node]
                total += np.where(book.pivot == k, 0.0, vals)
            self.vsum[m] = total


# ---------------------------------------------------------------------------
# functional wrappers with the operator signatures
# ---------------------------------------------------------------------------

def apply_K(cfg: KSConfig, u: PairPotential, beta: float, grid: Grid,
            phi: CorrelationVector) -> CorrelationVector:
    tables = OperatorTables(u, beta, grid, cfg.m_max)
    return CorrelationVector(grid, tables.apply_K(cfg, phi.phis))


def apply_D(u: PairPotential, beta: float, grid: Grid,
            phi: CorrelationVector) -> CorrelationVector:
    tables = OperatorTables(u, beta, grid, phi.m_max)
    return CorrelationVector(grid, tables.apply_D(phi.phis))


def apply_A(cfg: KSConfig, u: PairPotential, beta: float, grid: Grid,
            phi: CorrelationVector) -> CorrelationVector:
    tables = OperatorTables(u, beta, grid, cfg.m_max)
    return CorrelationVector(grid, tables.apply_A(cfg, phi.phis))


# ---------------------------------------------------------------------------
# Neumann solver
# ---------------------------------------------------------------------------

@dataclass
class SolveReport:
    """Convergence diagnostics and truncation bounds of one hierarchy solve."""

    iterations: int
    residuals: list
    contraction_estimate: float
    contraction_ratios: list
    contraction_ceiling: float
    contraction_ok: bool
    tail_bounds: dict
    weight: float
    norm_x: float
    ruelle_bound: float
    ruelle_ok: bool
    min_value: float
    notes: list

    def to_json_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residuals": list(self.residuals),
            "contraction_estimate": self.contraction_estimate,
            "contraction_ceiling": self.contraction_ceiling,
            "contraction_ok": self.contraction_ok,
            "tail_bounds": dict(self.tail_bounds),
            "weight": self.weight,
            "norm_x": self.norm_x,
            "ruelle_bound": self.ruelle_bound,
            "ruelle_ok": self.ruelle_ok,
            "min_value": self.min_value,
            "notes": list(self.notes),
        }


def _omitted_inverse_factorials(cfg: KSConfig, m: int) -> float:
    """sum of 1/n! over kernel indices dropped from row m by either truncation."""
    total = 0.0
    for n in range(1, _MAX_TAIL_TERMS):
        if n > cfg.n_max or m + n - 1 > cfg.m_max:
            total += 1.0 / math.factorial(n)
    return total


def truncation_bounds(cfg: KSConfig, z: float, beta_b: float, chat: float) -> dict:
    """A-priori sup-norm bounds on the truncation error of the solved hierarchy.

    ``chat`` is the lattice L1 bound on the one-particle kernel and
    ``beta_b`` the product beta*B.  With the weight chat the block
    operator is bounded by chat*e and the diagonal by exp(2*beta_b),
    giving the contraction certificate kappa and the order-q bound
    R_q <= z * chat^(1-q) / (1-kappa) for the untruncated solution.
    Dropping the kernel block of index n from row m removes a source of
    at most exp(2*beta_b) * chat^n/n! * R_{m+n-1}, and pushing the total
    through the resolvent costs another factor z/(1-kappa); per-order sup
    bounds follow by unweighting the sequence-norm bound.
    """
    exp2bb = math.exp(2.0 * beta_b)
    if chat <= 0.0:
        return {"m_closure": 0.0, "n_truncation": 0.0,
                "per_order_sup": [0.0] * cfg.m_max,
                "kernel_l1": chat, "kappa_lattice": 0.0}
    kappa = z * chat * exp2bb * math.e
    if kappa >= 1.0:
        inf = math.inf
        return {"m_closure": inf, "n_truncation": inf,
                "per_order_sup": [inf] * cfg.m_max,
                "kernel_l1": chat, "kappa_lattice": kappa}
    scale = (z ** 2) * exp2bb * chat ** 2 / (1.0 - kappa) ** 2
    closure_sum = 0.0
    worst_row = 0.0
    for m in range(1, cfg.m_max + 1):
        worst_row = max(worst_row, _omitted_inverse_factorials(cfg, m))
        closure_sum = max(closure_sum, sum(
            1.0 / math.factorial(n) for n in range(1, _MAX_TAIL_TERMS)
            if n <= cfg.n_max and m + n - 1 > cfg.m_max))
    ntail_sum = sum(1.0 / math.factorial(n)
                    for n in range(cfg.n_max + 1, _MAX_TAIL_TERMS))
    err_x = scale * worst_row
    per_order = [err_x / chat ** m for m in range(1, cfg.m_max + 1)]
    return {
        "m_closure": scale * closure_sum,
        "n_truncation": scale * ntail_sum,
        "per_order_sup": per_order,
        "kernel_l1": chat,
        "kappa_lattice": kappa,
    }


def solve_ks(cfg: KSConfig, u: PairPotential, beta: float, z: float, grid: Grid,
             report: RegularityReport | None = None, *,
             override_gate: bool = False,
             tables: OperatorTables | None = None,
             weight: float | None = None,
             stability_B: float | None = None,
             budget: int | None = None) -> tuple[CorrelationVector, SolveReport]:
    """Solve (I - z*A) rho = z*e1 by the fixed-point iteration rho <- z*e1 + z*A*rho.

    The activity gate z < z_max from the regularity report is enforced
    unless ``override_gate`` is set (required for the non-interacting test
    family, whose potential is not admissible).  The residual is measured
    in the weighted sup norm; the weight defaults to c_beta and falls back
    to the lattice kernel bound (or 1) when that degenerates to zero.
    """
    if z <= 0:
        raise ValueError("activity must be positive")
    if not override_gate:
        if report is None:
            raise GateError("activity gate needs a regularity report "
                            "(or override_gate=True for test families)")
        if not report.admissible:
            raise GateError("potential is not admissible for its envelope; "
                            "use override_gate=True to force")
        if not z < report.z_max:
            raise GateError(
                f"activity z = {z:.6g} is not below the activity bound {report.z_max:.6g}")

    B = report.B if report is not None else (0.0 if stability_B is None else stability_B)
    c_b = report.c_beta if report is not None else 0.0
    if tables is None:
        tables = OperatorTables(u, beta, grid, cfg.m_max, budget=budget)
    chat = tables.kernel_l1
    gamma = weight if weight is not None else (c_b if c_b > 0 else (chat if chat > 0 else 1.0))

    bb = beta * B
    if c_b > 0:
        ceiling = z * c_b * math.exp(2.0 * bb + 1.0)
    else:
        # degenerate weight: operator norm with weight gamma is
        # gamma * exp(chat/gamma) * exp(2 beta B)
        ceiling = z * gamma * math.exp(chat / gamma) * math.exp(2.0 * bb)

    M = grid.n_nodes
    phis = [np.zeros((M,) * m) for m in range(1, cfg.m_max + 1)]
    residuals: list[float] = []
    ratios: list[float] = []
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        new = [z * a for a in tables.apply_A(cfg, phis, budget)]
        new[0] += z
        res = cv_xnorm([a - b for a, b in zip(new, phis)], gamma)
        if residuals and residuals[-1] > 0.0:
            ratios.append(res / residuals[-1])
        residuals.append(res)
        phis = new
        if res <= cfg.neumann_tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"residual {residuals[-1]:.3e} above tolerance {cfg.neumann_tol:.3e} "
            f"after {cfg.max_iters} iterations")

    notes = []
    min_value = min(float(p.min()) for p in phis)
    if min_value < -10.0 * cfg.neumann_tol:
        notes.append(f"negative values down to {min_value:.3e} (truncation artifact)")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)

    norm_x = cv_xnorm(phis, gamma)
    kappa_spec = z * c_b * math.exp(2.0 * bb + 1.0)
    if kappa_spec < 1.0:
        ruelle_bound = z * math.exp(2.0 * bb + 1.0) / (1.0 - kappa_spec)
    else:
        ruelle_bound = math.inf
    ruelle_ok = norm_x <= ruelle_bound + 10.0 * cfg.neumann_tol
    if not ruelle_ok:
        notes.append(f"weighted norm {norm_x:.6g} exceeds its bound {ruelle_bound:.6g}")

    contraction_estimate = max(ratios) if ratios else 0.0
    contraction_ok = contraction_estimate <= ceiling + 1e-6
    if not contraction_ok:
        notes.append(
            f"contraction ratio {contraction_estimate:.6g} exceeds ceiling {ceiling:.6g}")

    rep = SolveReport(
        iterations=iterations,
        residuals=residuals,
        contraction_estimate=contraction_estimate,
        contraction_ratios=ratios,
        contraction_ceiling=ceiling,
        contraction_ok=contraction_ok,
        tail_bounds=truncation_bounds(cfg, z, bb, chat),
        weight=gamma,
        norm_x=norm_x,
        ruelle_bound=ruelle_bound,
        ruelle_ok=ruelle_ok,
        min_value=min_value,
        notes=notes,
    )
    return CorrelationVector(grid, phis), rep
