"""Cubic boxes, midpoint tensor grids, and weighted integration over box powers.

The midpoint rule is used everywhere on purpose: the hierarchy solver and
the brute-force reference share one fixed quadrature, so their comparison
isolates truncation error from discretization error, and no node ever
sits on the box boundary where hard cores live.  Node-tuple enumeration
is row-major over axis-major node indices and is part of the on-disk
format, so it is fixed for good.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BudgetError, EmbeddingError

__all__ = [
    "Box",
    "Grid",
    "GridFunction",
    "ImbeddingSpec",
    "build_grid",
    "integrate_n",
    "xnorm",
    "restrict",
    "tuple_budget",
    "DEFAULT_TUPLE_BUDGET",
    "check_symmetry",
    "gridfunction_to_csv",
    "write_gridfunction",
    "read_gridfunction",
]

DEFAULT_TUPLE_BUDGET = 2 ** 24
BUDGET_ENV_VAR = "KS_MAX_TUPLES"


def tuple_budget(override: int | None = None) -> int:
    """Active node-tuple budget: explicit override, else environment, else default."""
    if override is not None:
        return int(override)
    env = os.environ.get(BUDGET_ENV_VAR)
    return int(env) if env else DEFAULT_TUPLE_BUDGET


def check_budget(count: int, what: str, budget: int | None = None) -> None:
    limit = tuple_budget(budget)
    if count > limit:
        raise BudgetError(
            f"{what} needs {count} node tuples, exceeding the budget of {limit}; "
            f"raise {BUDGET_ENV_VAR} or coarsen the grid")


@dataclass(frozen=True)
class Box:
    """Cube of side L centered at the origin."""

    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError(f"box side must be positive, got {self.side}")

    @property
    def volume(self) -> float:
        return self.side ** 3


@dataclass(frozen=True, eq=False)
class Grid:
    """Midpoint tensor grid over a box.

    ``axis`` holds the per-axis midpoint coordinates, ``nodes`` the
    n_g^3 x 3 array of node positions in axis-major order (node id
    ix*n_g^2 + iy*n_g + iz), ``weights`` the uniform per-node volume.
    """

    box: Box
    nodes_per_axis: int
    axis: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def weight(self) -> float:
        return float(self.weights[0])

    @property
    def spacing(self) -> float:
        return self.box.side / self.nodes_per_axis


def build_grid(box: Box, n_g: int) -> Grid:
    """Midpoint tensor grid with n_g nodes per axis and weight (L/n_g)^3."""
    if n_g < 2:
        raise ValueError(f"need at least 2 nodes per axis, got {n_g}")
    L = box.side
    h = L / n_g
    axis = -L / 2.0 + h * (np.arange(n_g) + 0.5)
    ix, iy, iz = np.meshgrid(axis, axis, axis, indexing="ij")
    nodes = np.stack([ix.ravel(), iy.ravel(), iz.ravel()], axis=1)
    weights = np.full(n_g ** 3, h ** 3)
    return Grid(box=box, nodes_per_axis=int(n_g), axis=axis, nodes=nodes, weights=weights)


@dataclass(eq=False)
class GridFunction:
    """Values of a function on the tensor grid of the m-fold box power.

    ``values`` has shape (n_nodes,) * order in the fixed row-major tuple
    enumeration.
    """

    order: int
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be at least 1")
        expected = (self.grid.n_nodes,) * self.order
        if self.values.shape != expected:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid tuple shape {expected}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def check_symmetry(f: GridFunction, n_checks: int = 16, tol: float = 1e-10,
                   seed: int = 0) -> bool:
    """Spot-check invariance under random permutations of the tuple slots."""
    if f.order == 1:
        return True
    rng = np.random.default_rng(seed)
    for _ in range(n_checks):
        perm = rng.permutation(f.order)
        if np.max(np.abs(f.values - f.values.transpose(perm))) > tol:
            return False
    return True


def integrate_n(grid: Grid, n: int, f: Callable[..., float],
                budget: int | None = None) -> float:
    """Weighted sum of f over all n-tuples of grid nodes.

    ``f`` receives n position vectors and returns a real.  Tuples are
    visited in the fixed row-major order and accumulated with Neumaier
    compensation, so the result does not depend on any parallel schedule.
    """
    if n < 1:
        raise ValueError("tuple length must be at least 1")
    M = grid.n_nodes
    check_budget(M ** n, f"integrating over {n} box factors", budget)
    wn = grid.weight ** n
    nodes = grid.nodes
    total = 0.0
    comp = 0.0
    for tup in itertools.product(range(M), repeat=n):
        val = wn * float(f(*(nodes[i] for i in tup)))
        t = total + val
        if abs(total) >= abs(val):
            comp += (total - t) + val
        else:
            comp += (val - t) + total
        total = t
    return total + comp


def _phi_arrays(phis) -> list[np.ndarray]:
    out = []
    for p in phis:
        out.append(p.values if isinstance(p, GridFunction) else np.asarray(p))
    return out


def xnorm(phis: Iterable, c_beta: float) -> float:
    """Weighted sup norm max_m c_beta^m * sup|phi_m| of a truncated sequence.

    ``phis`` lists the orders m = 1, 2, ... in turn; entries may be
    GridFunctions or bare arrays.  A positive weight is required because
    the norm degenerates at c_beta = 0.
    """
    if not c_beta > 0:
        raise ValueError("the sequence norm needs a positive weight")
    best = 0.0
    for m, values in enumerate(_phi_arrays(phis), start=1):
        if values.size:
            best = max(best, c_beta ** m * float(np.max(np.abs(values))))
    return best


@dataclass(frozen=True, eq=False)
class ImbeddingSpec:
    """Exact node correspondence between a sub-box grid and an enclosing grid.

    ``node_map[i]`` is the outer node id holding inner node i.  Built by
    index arithmetic and verified coordinate by coordinate; any mismatch
    is an error, interpolation is never attempted.
    """

    outer: Grid
    inner: Grid
    node_map: np.ndarray

    @classmethod
    def build(cls, outer: Grid, inner: Grid) -> "ImbeddingSpec":
        if inner.box.side > outer.box.side + 1e-12:
            raise EmbeddingError("inner box does not fit inside the outer box")
        axis_map = _axis_map(outer, inner)
        n_in, n_out = inner.nodes_per_axis, outer.nodes_per_axis
        grid_ids = (axis_map[:, None, None] * n_out * n_out
                    + axis_map[None, :, None] * n_out
                    + axis_map[None, None, :])
        return cls(outer=outer, inner=inner, node_map=grid_ids.reshape(n_in ** 3))


def _axis_map(outer: Grid, inner: Grid) -> np.ndarray:
    h_out, h_in = outer.spacing, inner.spacing
    scale = max(1.0, outer.box.side)
    if abs(h_out - h_in) > 1e-12 * scale:
        raise EmbeddingError(
            f"grid spacings differ ({h_in:g} inner vs {h_out:g} outer); nodes cannot coincide")
    idx = np.rint((inner.axis + outer.box.side / 2.0) / h_out - 0.5).astype(int)
    if np.any(idx < 0) or np.any(idx >= outer.nodes_per_axis):
        raise EmbeddingError("inner axis nodes fall outside the outer grid")
    if np.max(np.abs(outer.axis[idx] - inner.axis)) > 1e-12 * scale:
        raise EmbeddingError(
            "inner nodes are offset from outer nodes; boxes must differ by whole node steps")
    return idx


def restrict(spec: ImbeddingSpec, f: GridFunction) -> GridFunction:
    """Copy values at inner-node tuples from a function on the outer grid."""
    if f.grid is not spec.outer and f.grid.n_nodes != spec.outer.n_nodes:
        raise EmbeddingError("grid function does not live on the outer grid of the spec")
    take = np.ix_(*([spec.node_map] * f.order))
    return GridFunction(order=f.order, grid=spec.inner, values=f.values[take].copy())


# ---------------------------------------------------------------------------
# on-disk formats
# ---------------------------------------------------------------------------

def gridfunction_to_csv(f: GridFunction, path: str) -> None:
    """One row per node tuple: the 3m coordinates followed by the value,
    in the fixed enumeration order, full round-trip precision."""
    M = f.grid.n_nodes
    nodes = f.grid.nodes
    flat = f.values.reshape(-1)
    with open(path, "w", encoding="utf-8") as fh:
        coords = ",".join(f"x{k+1},y{k+1},z{k+1}" for k in range(f.order))
        fh.write(coords + ",value\n")
        for flat_idx in range(flat.size):
            idx = np.unravel_index(flat_idx, (M,) * f.order)
            cols = []
            for node_id in idx:
                cols.extend(format(c, ".17g") for c in nodes[node_id])
            cols.append(format(flat[flat_idx], ".17g"))
            fh.write(",".join(cols) + "\n")


def write_gridfunction(f: GridFunction, path_prefix: str) -> tuple[str, str]:
    """Compact form: JSON header plus little-endian float64 payload."""
    header = {
        "order": f.order,
        "nodes_per_axis": f.grid.nodes_per_axis,
        "box_side": f.grid.box.side,
        "dtype": "<f8",
        "count": int(f.values.size),
    }
    json_path = path_prefix + ".json"
    bin_path = path_prefix + ".bin"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(header, fh, sort_keys=True)
        fh.write("\n")
    f.values.astype("<f8").tofile(bin_path)
    return json_path, bin_path


def read_gridfunction(path_prefix: str) -> GridFunction:
    with open(path_prefix + ".json", encoding="utf-8") as fh:
        header = json.load(fh)
    grid = build_grid(Box(header["box_side"]), header["nodes_per_axis"])
    values = np.fromfile(path_prefix + ".bin", dtype="<f8")
    if values.size != header["count"]:
        raise ValueError(f"payload holds {values.size} values, header says {header['count']}")
    shape = (grid.n_nodes,) * header["order"]
    return GridFunction(order=header["order"], grid=grid, values=values.reshape(shape))
