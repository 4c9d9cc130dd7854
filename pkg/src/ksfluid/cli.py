"""Command-line front end: config loading, run orchestration, data export.

Subcommands: check | solve | derivative | limit-sweep | oracle.  Every run
writes a manifest holding the config hash, library version, gating
constants, and truncation bounds; a rerun with an identical config file
produces byte-identical outputs.  Exit codes: 0 success, 1 numerical or
gate failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AdmissibilityError, BudgetError, ConfigError,
                     ConvergenceError, EmbeddingError, GateError,
                     KsfluidError, QuadratureError)
from .potentials import (Envelope, PairPotential, Perturbation, SamplingConfig,
                         envelope_from_forms, exp_tail_perturbation, hard_sphere,
                         lennard_jones, regularity_report, stability_sample_check,
                         tabulated, truncated_lennard_jones, vu_norm,
                         zero_perturbation, zero_potential)
from .quadrature import (Box, build_grid, gridfunction_to_csv, read_gridfunction,
                         write_gridfunction)
from .ks import KSConfig, solve_ks
from .derivative import (DerivativeRequest, derivative_rho,
                         finite_difference_defect, limit_sweep)
from .oracle import (OracleConfig, comparison_report, compute_grand_sums,
                     deriv_rho1, deriv_rho2, deriv_xi, v_pair_matrix)

DEFAULT_FD_EPSILONS = [10.0 ** (-1.0 - 0.5 * k) for k in range(5)]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    raw: dict
    sha256: str
    potential: PairPotential
    envelope: Envelope
    beta: float
    z: float | None
    z_factor: float | None
    stability_B: float
    t0: float
    grid_side: float
    grid_ng: int
    ks: KSConfig
    oracle_N_max: int
    perturbation: Perturbation | None
    fd_epsilons: list
    sweep: dict | None
    out_dir: str
    formats: list

    def activity(self, z_max: float) -> float:
        if self.z is not None:
            return self.z
        return self.z_factor * z_max


def _require(cfg: dict, key: str, where: str):
    if key not in cfg:
        raise ConfigError(f"missing {key!r} in {where}")
    return cfg[key]


def _build_potential(section: dict) -> PairPotential:
    kind = _require(section, "kind", "potential")
    params = section.get("params", {})
    try:
        if kind == "hard-sphere":
            return hard_sphere(_require(params, "a", "hard-sphere params"))
        if kind == "lennard-jones":
            return lennard_jones(params.get("epsilon", 1.0), params.get("sigma", 1.0))
        if kind == "truncated-lennard-jones":
            return truncated_lennard_jones(
                params.get("epsilon", 1.0), params.get("sigma", 1.0),
                _require(params, "r_cut", "truncated-lennard-jones params"),
                params.get("shift", False))
        if kind == "tabulated":
            path = _require(params, "path", "tabulated params")
            rows = np.loadtxt(path, delimiter=",", ndmin=2)
            tail = _build_tail(params.get("tail"))
            return tabulated(rows[:, 0], rows[:, 1], tail=tail,
                             core=params.get("core", "hard"))
        if kind == "zero":
            return zero_potential()
    except (ValueError, OSError) as exc:
        raise ConfigError(f"potential section: {exc}") from exc
    raise ConfigError(f"unknown potential kind {kind!r}")


def _build_tail(spec: dict | None):
    if spec is None or spec.get("form", "zero") == "zero":
        return None
    form = spec["form"]
    if form == "exponential":
        a, k = spec["amplitude"], spec["rate"]
        return lambda r: a * np.exp(-k * r)
    if form == "inverse-power":
        a, p = spec["amplitude"], spec["exponent"]
        return lambda r: a * r ** (-p)
    raise ConfigError(f"unknown tail form {form!r}")


def _build_envelope(section: dict) -> Envelope:
    s = _require(section, "s", "envelope")
    lower = dict(_require(section, "lower", "envelope"))
    upper = dict(_require(section, "upper", "envelope"))
    try:
        return envelope_from_forms(
            s, (lower.pop("form"), lower), (upper.pop("form"), upper))
    except (KeyError, AdmissibilityError) as exc:
        raise ConfigError(f"envelope section: {exc}") from exc


def _build_perturbation(section: dict | None) -> Perturbation | None:
    if section is None:
        return None
    kind = _require(section, "kind", "perturbation")
    params = section.get("params", {})
    if kind == "zero":
        return zero_perturbation()
    if kind == "exp-tail":
        return exp_tail_perturbation(
            _require(params, "amplitude", "exp-tail params"),
            params.get("rate", 1.0), params.get("r_min", 0.0))
    raise ConfigError(f"unknown perturbation kind {kind!r}")


def load_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc

    thermo = _require(raw, "thermo", "config")
    beta = _require(thermo, "beta", "thermo")
    if beta <= 0:
        raise ConfigError("thermo.beta must be positive")
    z = thermo.get("z")
    z_factor = thermo.get("z_factor")
    if (z is None) == (z_factor is None):
        raise ConfigError("thermo needs exactly one of z or z_factor")
    if z is not None and z <= 0:
        raise ConfigError("thermo.z must be positive")
    if z_factor is not None and not 0 < z_factor:
        raise ConfigError("thermo.z_factor must be positive")

    grid = _require(raw, "grid", "config")
    ks_raw = raw.get("ks", {})
    try:
        ks = KSConfig(
            m_max=ks_raw.get("m_max", 3),
            n_max=ks_raw.get("n_max", 4),
            neumann_tol=ks_raw.get("neumann_tol", 1e-10),
            max_iters=ks_raw.get("max_iters", 200),
        )
    except ValueError as exc:
        raise ConfigError(f"ks section: {exc}") from exc
    t0 = raw.get("t0", 0.5)
    if not 0 < t0 < 1:
        raise ConfigError("t0 must lie in (0, 1)")
    b_stab = raw.get("stability_B", 0.0)
    if b_stab < 0:
        raise ConfigError("stability_B must be nonnegative")
    n_max_oracle = raw.get("oracle", {}).get("N_max", 6)
    if n_max_oracle < ks.m_max:
        raise ConfigError(
            f"oracle.N_max = {n_max_oracle} cannot resolve orders up to {ks.m_max}")
    outputs = raw.get("outputs", {})

    eps = raw.get("fd_epsilons", DEFAULT_FD_EPSILONS)
    if not all(isinstance(e, (int, float)) and e > 0 for e in eps):
        raise ConfigError("fd_epsilons must be positive numbers")

    try:
        grid_side = float(_require(grid, "L", "grid"))
        grid_ng = int(_require(grid, "n_g", "grid"))
        if grid_ng < 2:
            raise ConfigError("grid.n_g must be at least 2")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid section: {exc}") from exc

    return RunConfig(
        raw=raw,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        potential=_build_potential(_require(raw, "potential", "config")),
        envelope=_build_envelope(_require(raw, "envelope", "config")),
        beta=float(beta),
        z=None if z is None else float(z),
        z_factor=None if z_factor is None else float(z_factor),
        stability_B=float(b_stab),
        t0=float(t0),
        grid_side=grid_side,
        grid_ng=grid_ng,
        ks=ks,
        oracle_N_max=int(n_max_oracle),
        perturbation=_build_perturbation(raw.get("perturbation")),
        fd_epsilons=[float(e) for e in eps],
        sweep=raw.get("sweep"),
        out_dir=outputs.get("dir", "."),
        formats=outputs.get("formats", ["csv", "json"]),
    )


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _write_manifest(out: Path, command: str, cfg: RunConfig, constants: dict,
                    bounds: dict, files: list) -> None:
    manifest = {
        "command": command,
        "config_sha256": cfg.sha256,
        "library_version": __version__,
        "constants": constants,
        "truncation_bounds": bounds,
        "files": sorted(files),
        "tuple_budget_env": os.environ.get("KS_MAX_TUPLES"),
    }
    _dump_json(manifest, out / "manifest.json")


def _write_correlation(out: Path, stem: str, cv, formats) -> list:
    files = []
    for gf in cv.gridfunctions():
        base = f"{stem}_{gf.order}"
        if "csv" in formats:
            gridfunction_to_csv(gf, str(out / f"{base}.csv"))
            files.append(f"{base}.csv")
        if "json" in formats:
            write_gridfunction(gf, str(out / base))
            files.extend([f"{base}.json", f"{base}.bin"])
    return files


def _csv_rows(path: Path, header: list, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(x, ".17g") if isinstance(x, float) else x
                             for x in row])


def _gates(cfg: RunConfig, args) -> tuple:
    """Regularity report plus the resolved activity; enforces the gates."""
    report = regularity_report(cfg.potential, cfg.envelope, cfg.beta,
                               cfg.stability_B, cfg.t0)
    z = cfg.activity(report.z_max)
    if not args.override_admissibility:
        if not report.admissible:
            raise GateError("potential is not admissible for its envelope: "
                            + "; ".join(report.diagnostics[:3]))
        if not z < report.z_max:
            raise GateError(f"z = {z:.6g} is not below z_max = {report.z_max:.6g}")
    return report, z


def _constants(report, z, cfg: RunConfig) -> dict:
    return {
        "beta": cfg.beta,
        "z": z,
        "c_beta": report.c_beta,
        "B": report.B,
        "t0": report.t0,
        "z_max": report.z_max,
    }


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out if args.out is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    cfg = load_config(args.config)
    report = regularity_report(cfg.potential, cfg.envelope, cfg.beta,
                               cfg.stability_B, cfg.t0)
    z = cfg.activity(report.z_max)
    sample = stability_sample_check(cfg.potential, cfg.stability_B, seed=args.seed)
    payload = report.to_json_dict()
    payload.update({
        "z": z,
        "z_gate_ok": bool(z < report.z_max),
        "c_beta_d_at_s": report.c_beta_d(cfg.envelope.s),
        "stability_sample": sample,
    })
    print(json.dumps(payload, sort_keys=True, indent=2))
    out = _out_dir(args, cfg)
    _dump_json(payload, out / "check_report.json")
    _write_manifest(out, "check", cfg, _constants(report, z, cfg), {},
                    ["check_report.json"])
    ok = report.admissible and z < report.z_max
    return 0 if ok else 1


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    report, z = _gates(cfg, args)
    grid = build_grid(Box(cfg.grid_side), cfg.grid_ng)
    rho, solve_rep = solve_ks(cfg.ks, cfg.potential, cfg.beta, z, grid, report,
                              override_gate=args.override_admissibility)
    out = _out_dir(args, cfg)
    files = _write_correlation(out, "rho", rho, cfg.formats)
    _dump_json(solve_rep.to_json_dict(), out / "solve_report.json")
    files.append("solve_report.json")
    _write_manifest(out, "solve", cfg, _constants(report, z, cfg),
                    solve_rep.tail_bounds, files)
    print(f"solved {cfg.ks.m_max} orders in {solve_rep.iterations} iterations; "
          f"residual {solve_rep.residuals[-1]:.3e}")
    return 0


def cmd_derivative(args) -> int:
    cfg = load_config(args.config)
    if cfg.perturbation is None:
        raise ConfigError("derivative runs need a perturbation section")
    report, z = _gates(cfg, args)
    v_norm = vu_norm(cfg.perturbation, cfg.potential, cfg.envelope)
    if not args.override_admissibility and v_norm > cfg.t0:
        raise GateError(f"perturbation norm {v_norm:.6g} exceeds t0 = {cfg.t0:.6g}")
    for eps in cfg.fd_epsilons:
        if eps * v_norm > cfg.t0 / 2.0 and not args.override_admissibility:
            raise GateError(f"fd epsilon {eps:g} pushes eps*||v|| beyond t0/2")

    grid = build_grid(Box(cfg.grid_side), cfg.grid_ng)
    req = DerivativeRequest(u=cfg.potential, v=cfg.perturbation, beta=cfg.beta,
                            z=z, grid=grid, ks=cfg.ks, report=report,
                            v_norm=v_norm, t0=cfg.t0,
                            stability_B=cfg.stability_B,
                            override_gate=args.override_admissibility)
    result = derivative_rho(req)
    fd = finite_difference_defect(req, cfg.fd_epsilons, result=result)

    out = _out_dir(args, cfg)
    files = _write_correlation(out, "dr", result.dr, cfg.formats)
    _csv_rows(out / "fd_table.csv", ["epsilon", "defect"], fd.rows())
    files.append("fd_table.csv")

    ocfg = OracleConfig(N_max=cfg.oracle_N_max, grid=grid)
    sums = compute_grand_sums(ocfg, cfg.potential, cfg.beta, z,
                              m_max=min(4, cfg.oracle_N_max), B=cfg.stability_B)
    explicit_1 = deriv_rho1(ocfg, cfg.potential, cfg.beta, z, cfg.perturbation, sums=sums)
    explicit = {"order_1_sup_diff": float(np.max(np.abs(
        result.dr.phis[0] - explicit_1.values)))}
    if cfg.ks.m_max >= 2 and cfg.oracle_N_max >= 4:
        explicit_2 = deriv_rho2(ocfg, cfg.potential, cfg.beta, z, cfg.perturbation,
                                sums=sums)
        explicit["order_2_sup_diff"] = float(np.max(np.abs(
            result.dr.phis[1] - explicit_2.values)))

    payload = {
        "fd_slope": fd.slope,
        "fd_defects": fd.defects,
        "fd_epsilons": fd.epsilons,
        "v_norm": v_norm,
        "bound_check": result.bound_check,
        "explicit_vs_implicit": explicit,
        "solve": result.report.to_json_dict(),
    }
    _dump_json(payload, out / "derivative_report.json")
    files.append("derivative_report.json")
    _write_manifest(out, "derivative", cfg, _constants(report, z, cfg),
                    result.rho_report.tail_bounds, files)
    print(f"derivative done; fd slope {fd.slope:.3f}; "
          f"explicit-vs-implicit {explicit}")
    return 0


def cmd_limit_sweep(args) -> int:
    cfg = load_config(args.config)
    if cfg.sweep is None:
        raise ConfigError("limit-sweep runs need a sweep section")
    if cfg.perturbation is None:
        raise ConfigError("limit-sweep runs need a perturbation section")
    report, z = _gates(cfg, args)
    v_norm = vu_norm(cfg.perturbation, cfg.potential, cfg.envelope)
    inner_side = float(_require(cfg.sweep, "inner_L", "sweep"))
    inner_ng = int(_require(cfg.sweep, "inner_ng", "sweep"))
    sides = _require(cfg.sweep, "outer_sides", "sweep")
    result = limit_sweep(cfg.potential, cfg.perturbation, cfg.beta, z,
                         Box(inner_side), inner_ng, sides, cfg.ks, report,
                         v_norm=v_norm, t0=cfg.t0, stability_B=cfg.stability_B,
                         override_gate=args.override_admissibility)
    out = _out_dir(args, cfg)
    header = (["L"]
              + [f"rho_diff_m{m}" for m in range(1, cfg.ks.m_max + 1)]
              + [f"dr_diff_m{m}" for m in range(1, cfg.ks.m_max + 1)])
    _csv_rows(out / "sweep.csv", header, result.csv_rows())
    _write_manifest(out, "limit-sweep", cfg, _constants(report, z, cfg),
                    {"per_order_sup": result.rows[-1].per_order_bound}, ["sweep.csv"])
    print(f"swept {len(result.rows)} boxes; reference side {result.reference_side:g}")
    return 0


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    report, z = _gates(cfg, args)
    grid = build_grid(Box(cfg.grid_side), cfg.grid_ng)
    ocfg = OracleConfig(N_max=cfg.oracle_N_max, grid=grid)
    m_top = min(4, max(cfg.ks.m_max, 2 if cfg.perturbation is None else 4),
                cfg.oracle_N_max)
    sums = compute_grand_sums(ocfg, cfg.potential, cfg.beta, z, m_max=m_top,
                              B=cfg.stability_B)
    out = _out_dir(args, cfg)
    files = []
    for m, (zf, rf) in enumerate(zip(sums.z_m, sums.rho), start=1):
        if "csv" in cfg.formats:
            gridfunction_to_csv(zf, str(out / f"oracle_z_{m}.csv"))
            gridfunction_to_csv(rf, str(out / f"oracle_rho_{m}.csv"))
            files.extend([f"oracle_z_{m}.csv", f"oracle_rho_{m}.csv"])
        if "json" in cfg.formats:
            write_gridfunction(rf, str(out / f"oracle_rho_{m}"))
            files.extend([f"oracle_rho_{m}.json", f"oracle_rho_{m}.bin"])

    payload = {"xi": sums.xi, "tails": sums.tails}
    if cfg.perturbation is not None:
        payload["deriv_xi"] = deriv_xi(ocfg, cfg.potential, cfg.beta, z,
                                       cfg.perturbation, sums=sums)
        d1 = deriv_rho1(ocfg, cfg.potential, cfg.beta, z, cfg.perturbation, sums=sums)
        gridfunction_to_csv(d1, str(out / "oracle_deriv_rho_1.csv"))
        files.append("oracle_deriv_rho_1.csv")
        if cfg.oracle_N_max >= 4 and m_top >= 4:
            d2 = deriv_rho2(ocfg, cfg.potential, cfg.beta, z, cfg.perturbation,
                            sums=sums)
            gridfunction_to_csv(d2, str(out / "oracle_deriv_rho_2.csv"))
            files.append("oracle_deriv_rho_2.csv")

    solver_prefix = out / "rho_1"
    if solver_prefix.with_suffix(".json").exists():
        from .ks import CorrelationVector
        phis = []
        for m in range(1, cfg.ks.m_max + 1):
            gf = read_gridfunction(str(out / f"rho_{m}"))
            phis.append(gf.values)
        cv = CorrelationVector(grid, phis)
        solve_report = json.loads((out / "solve_report.json").read_text())
        payload["comparison"] = comparison_report(
            cv, solve_report.get("tail_bounds", {}), sums, rel_tol=5e-3)

    _dump_json(payload, out / "oracle_report.json")
    files.append("oracle_report.json")
    _write_manifest(out, "oracle", cfg, _constants(report, z, cfg),
                    {"oracle_tails": sums.tails}, files)
    print(f"oracle sums done; Xi = {sums.xi:.12g} (tail {sums.tails['xi']:.3e})")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _thread_limit(n: int | None):
    if n is None:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
        return threadpool_limits(limits=n)
    except ImportError:  # pragma: no cover - depends on environment
        return contextlib.nullcontext()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksfluid",
        description="Distribution functions of a classical fluid from the "
                    "truncated Kirkwood-Salsburg hierarchy")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, doc in (
            ("check", cmd_check, "admissibility and activity gates"),
            ("solve", cmd_solve, "solve the hierarchy for rho"),
            ("derivative", cmd_derivative, "directional derivative of rho"),
            ("limit-sweep", cmd_limit_sweep, "box-size sweep on a shared lattice"),
            ("oracle", cmd_oracle, "brute-force reference sums")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="cap BLAS worker threads")
        p.add_argument("--override-admissibility", action="store_true",
                       help="run despite failing admissibility (test families)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for randomized property sampling")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (GateError, BudgetError, ConvergenceError, EmbeddingError,
            QuadratureError, AdmissibilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KsfluidError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
