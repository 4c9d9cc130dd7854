"""Pair potentials, admissibility envelopes, and stability/regularity constants.

Every downstream computation is gated by two classical properties of the
pair potential: *stability* (the energy of any N-particle configuration is
bounded below by ``-B*N``) and *regularity* (the Mayer function is
absolutely integrable, with ``c_beta`` denoting ``4*pi`` times its radial
L1 norm).  Instead of certifying these directly, admissibility is checked
against a two-sided envelope: a positive decreasing minorant ``u_*`` with
divergent core integral on ``(0, s]`` and a positive decreasing integrable
majorant ``u^*`` on ``[s, inf)``.  The same envelope induces the weighted
supremum norm of the perturbation space in which all derivatives are
taken:

    ||v|| = max( sup_{0<r<s} |v(r)|/u(r),  sup_{r>s} |v(r)|/u*(r) ).

Supremum norms over continua are approximated by geometric sampling; all
results of that kind are sampled certificates, not proofs.  ``+inf``
potential values are first class and encode hard cores; Boltzmann factors
branch on them before any arithmetic so that no nan can appear.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import AdmissibilityError, GateError, QuadratureError

__all__ = [
    "PairPotential",
    "Envelope",
    "Perturbation",
    "ThermoParams",
    "SamplingConfig",
    "RegularityReport",
    "RadialIntegral",
    "hard_sphere",
    "lennard_jones",
    "truncated_lennard_jones",
    "tabulated",
    "custom_potential",
    "zero_potential",
    "envelope_from_forms",
    "zero_perturbation",
    "exp_tail_perturbation",
    "custom_perturbation",
    "check_admissible",
    "vu_norm",
    "mayer_f",
    "c_beta",
    "c_beta_tail",
    "activity_bound",
    "perturbed",
    "regularity_report",
    "stability_sample_check",
    "tail_cutoff",
]

# Separation substituted when two particles sit on the same grid node and the
# potential is finite at contact; hard cores take the +inf branch instead.
R_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairPotential:
    """Radially symmetric pair interaction u(r).

    ``energies`` is the vectorized evaluator used for node-pair tables;
    scalar evaluation goes through ``__call__``.  ``breakpoints`` lists
    radii where u is discontinuous or non-smooth so radial quadrature can
    split there.
    """

    kind: str
    params: dict
    fn: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple = ()

    def __call__(self, r: float) -> float:
        return float(self.fn(np.asarray([r], dtype=float))[0])

    def energies(self, r) -> np.ndarray:
        return self.fn(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class Envelope:
    """Two-sided admissibility envelope around a pair potential.

    ``lower`` is u_* on (0, s], ``upper`` is u^* on [s, inf); both are
    vectorized.  ``tail_integral(d)`` returns ``4*pi * int_d^inf u^*(r) r^2 dr``.
    """

    s: float
    lower: Callable[[np.ndarray], np.ndarray]
    upper: Callable[[np.ndarray], np.ndarray]
    tail_integral: Callable[[float], float]

    def scaled(self, lower_factor: float, upper_factor: float) -> "Envelope":
        """Envelope with u_* and u^* multiplied by the given positive factors."""
        if lower_factor <= 0 or upper_factor <= 0:
            raise ValueError("envelope scale factors must be positive")
        lo, up, tail = self.lower, self.upper, self.tail_integral
        return Envelope(
            s=self.s,
            lower=lambda r, f=lower_factor: f * lo(r),
            upper=lambda r, f=upper_factor: f * up(r),
            tail_integral=lambda d, f=upper_factor: f * tail(d),
        )


@dataclass(frozen=True)
class Perturbation:
    """Direction v(r) in which the pair potential is varied.  Always finite."""

    tag: str
    fn: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple = ()

    def __call__(self, r: float) -> float:
        return float(self.fn(np.asarray([r], dtype=float))[0])

    def values(self, r) -> np.ndarray:
        return self.fn(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class ThermoParams:
    """Inverse temperature and activity of the grand-canonical ensemble."""

    beta: float
    z: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.z > 0:
            raise ValueError(f"z must be positive, got {self.z}")


@dataclass(frozen=True)
class SamplingConfig:
    """Geometric-sampling density for sup-norm certificates."""

    points_per_decade: int = 512
    r_min_factor: float = 1e-4
    tail_threshold: float = 1e-12


class RadialIntegral(NamedTuple):
    """Value of a truncated radial integral with its cutoff error bar."""

    value: float
    tail_bound: float
    abserr: float


@dataclass(frozen=True)
class RegularityReport:
    """Stability/regularity constants gating one (potential, beta) pair.

    ``c_beta_d`` maps a radius d to the tail constant
    ``4*pi * int_d^inf |exp(-beta*u) - 1| r^2 dr``.  ``B`` is configured,
    not derived; ``stability_sample_check`` provides a non-certifying
    sanity check for it.
    """

    c_beta: float
    B: float
    t0: float
    z_max: float
    c_beta_d: Callable[[float], float]
    admissible: bool
    diagnostics: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "c_beta": self.c_beta,
            "B": self.B,
            "t0": self.t0,
            "z_max": self.z_max,
            "admissible": self.admissible,
            "diagnostics": list(self.diagnostics),
        }


# ---------------------------------------------------------------------------
# potential factories
# ---------------------------------------------------------------------------

def hard_sphere(a: float) -> PairPotential:
    """Hard spheres of diameter ``a``: +inf inside the core, zero outside."""
    if a <= 0:
        raise ValueError("core diameter must be positive")

    def fn(r, a=float(a)):
        out = np.zeros_like(r)
        out[r < a] = np.inf
        return out

    return PairPotential("hard-sphere", {"a": float(a)}, fn, breakpoints=(float(a),))


def lennard_jones(epsilon: float = 1.0, sigma: float = 1.0) -> PairPotential:
    """u(r) = 4*eps*((sigma/r)^12 - (sigma/r)^6)."""
    if epsilon <= 0 or sigma <= 0:
        raise ValueError("epsilon and sigma must be positive")

    def fn(r, e=float(epsilon), s=float(sigma)):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            x = (s / r) ** 6
            out = 4.0 * e * (x * x - x)
        return np.where(np.isfinite(x), out, np.inf)  # r = 0 is a hard wall

    return PairPotential("lennard-jones", {"epsilon": float(epsilon), "sigma": float(sigma)}, fn)


def truncated_lennard_jones(epsilon: float, sigma: float, r_cut: float,
                            shift: bool = False) -> PairPotential:
    """Lennard-Jones cut to zero beyond ``r_cut``, optionally shifted to be
    continuous at the cutoff."""
    if r_cut <= 0:
        raise ValueError("cutoff must be positive")
    base = lennard_jones(epsilon, sigma)
    offset = base(r_cut) if shift else 0.0

    def fn(r, b=base.fn, rc=float(r_cut), off=offset):
        out = b(r) - off
        out[r >= rc] = 0.0
        return out

    params = {"epsilon": float(epsilon), "sigma": float(sigma),
              "r_cut": float(r_cut), "shift": bool(shift)}
    return PairPotential("truncated-lennard-jones", params, fn, breakpoints=(float(r_cut),))


def tabulated(r_nodes: Sequence[float], u_nodes: Sequence[float],
              tail: Callable[[np.ndarray], np.ndarray] | None = None,
              core: str = "hard") -> PairPotential:
    """Potential from a table of (r, u) samples.

    Between nodes the table is interpolated with a monotone-safe local
    cubic (PCHIP), which cannot overshoot the data.  Below the first
    abscissa the declared core applies ("hard" for +inf, "clamp" to hold
    the first value); above the last abscissa the declared ``tail``
    callable applies (zero when omitted).
    """
    r_nodes = np.asarray(r_nodes, dtype=float)
    u_nodes = np.asarray(u_nodes, dtype=float)
    if r_nodes.ndim != 1 or r_nodes.shape != u_nodes.shape or r_nodes.size < 2:
        raise ValueError("table needs two equal-length 1-d columns with >= 2 rows")
    if not np.all(np.diff(r_nodes) > 0):
        raise ValueError("table abscissae must be strictly increasing")
    if core not in ("hard", "clamp"):
        raise ValueError(f"unknown core policy {core!r}")
    interp = PchipInterpolator(r_nodes, u_nodes, extrapolate=False)
    r_lo, r_hi = float(r_nodes[0]), float(r_nodes[-1])
    u_lo = float(u_nodes[0])

    def fn(r):
        out = np.empty_like(r)
        below = r < r_lo
        above = r > r_hi
        mid = ~(below | above)
        out[mid] = interp(r[mid])
        out[below] = np.inf if core == "hard" else u_lo
        out[above] = 0.0 if tail is None else tail(r[above])
        return out

    params = {"r_min": r_lo, "r_max": r_hi, "rows": int(r_nodes.size), "core": core}
    return PairPotential("tabulated", params, fn, breakpoints=(r_lo, r_hi))


def custom_potential(fn: Callable[[np.ndarray], np.ndarray], params: dict | None = None,
                     breakpoints: tuple = ()) -> PairPotential:
    return PairPotential("custom", params or {}, fn, breakpoints=breakpoints)


def zero_potential() -> PairPotential:
    """The non-interacting reference, u(r) = 0.  Not admissible under any
    envelope; useful only with explicit admissibility overrides."""
    return PairPotential("custom", {"zero": True}, lambda r: np.zeros_like(r))


# ---------------------------------------------------------------------------
# envelope factories
# ---------------------------------------------------------------------------

def _inverse_power(amplitude: float, exponent: float):
    def fn(r, c=float(amplitude), p=float(exponent)):
        with np.errstate(divide="ignore", over="ignore"):
            return c * r ** (-p)
    return fn


def _exponential(amplitude: float, rate: float):
    def fn(r, c=float(amplitude), k=float(rate)):
        return c * np.exp(-k * r)
    return fn


def envelope_from_forms(s: float, lower: tuple, upper: tuple) -> Envelope:
    """Build an envelope from closed-form sides.

    Each side is ("inverse-power", {"amplitude", "exponent"}) or
    ("exponential", {"amplitude", "rate"}).  The lower side must have a
    divergent core integral (inverse power with exponent >= 3); the upper
    side must be integrable against r^2, which gives the closed-form
    ``tail_integral``.
    """
    if s <= 0:
        raise AdmissibilityError(f"split radius must be positive, got {s}")
    lo_form, lo_p = lower
    up_form, up_p = upper
    if lo_form == "inverse-power":
        if lo_p["exponent"] < 3:
            raise AdmissibilityError(
                "lower envelope r^-p with p < 3 has a convergent core integral")
        lower_fn = _inverse_power(**lo_p)
    elif lo_form == "exponential":
        raise AdmissibilityError("an exponential lower envelope cannot diverge at the core")
    else:
        raise AdmissibilityError(f"unknown lower envelope form {lo_form!r}")

    if up_form == "inverse-power":
        c, p = up_p["amplitude"], up_p["exponent"]
        if p <= 3:
            raise AdmissibilityError(
                "upper envelope r^-p needs p > 3 for a finite tail integral")
        upper_fn = _inverse_power(c, p)

        def tail(d, c=float(c), p=float(p)):
            return 4.0 * math.pi * c * d ** (3.0 - p) / (p - 3.0)
    elif up_form == "exponential":
        c, k = up_p["amplitude"], up_p["rate"]
        if k <= 0:
            raise AdmissibilityError("upper exponential envelope needs a positive rate")
        upper_fn = _exponential(c, k)

        def tail(d, c=float(c), k=float(k)):
            return 4.0 * math.pi * c * math.exp(-k * d) * (d * d / k + 2 * d / k**2 + 2 / k**3)
    else:
        raise AdmissibilityError(f"unknown upper envelope form {up_form!r}")

    return Envelope(s=float(s), lower=lower_fn, upper=upper_fn, tail_integral=tail)


# ---------------------------------------------------------------------------
# perturbation factories
# ---------------------------------------------------------------------------

def zero_perturbation() -> Perturbation:
    return Perturbation("zero", lambda r: np.zeros_like(r))


def exp_tail_perturbation(amplitude: float, rate: float = 1.0,
                          r_min: float = 0.0) -> Perturbation:
    """v(r) = amplitude * exp(-rate*r) for r > r_min, zero inside.

    Against an exponential upper envelope with the same rate the norm of
    this direction is exactly |amplitude|/envelope_amplitude, which makes
    gate tests exact.
    """

    def fn(r, a=float(amplitude), k=float(rate), r0=float(r_min)):
        out = a * np.exp(-k * r)
        out[r <= r0] = 0.0
        return out

    return Perturbation(f"exp-tail(a={amplitude},k={rate},r0={r_min})", fn,
                        breakpoints=(float(r_min),) if r_min > 0 else ())


def custom_perturbation(fn: Callable[[np.ndarray], np.ndarray], tag: str = "custom") -> Perturbation:
    return Perturbation(tag, fn)


# ---------------------------------------------------------------------------
# sampling helpers
# ---------------------------------------------------------------------------

def _geometric_samples(lo: float, hi: float, count: int) -> np.ndarray:
    if not (0 < lo < hi):
        raise ValueError(f"need 0 < lo < hi, got {lo}, {hi}")
    return np.geomspace(lo, hi, max(int(count), 16))


def tail_cutoff(env: Envelope, threshold: float = 1e-12, factor: float = 1.0) -> float:
    """Smallest doubling radius d >= s with factor * tail_integral(d) < threshold."""
    d = max(env.s, 1e-6)
    for _ in range(200):
        if factor * env.tail_integral(d) < threshold:
            return d
        d *= 2.0
    raise AdmissibilityError(
        f"envelope tail does not fall below {threshold:g} within doubling budget")


def _sample_count(samples: int, lo: float, hi: float, per_decade: int) -> int:
    decades = math.log10(hi / lo) if hi > lo else 1.0
    return max(int(samples), int(math.ceil(per_decade * decades)) + 1, 16)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def check_admissible(u: PairPotential, env: Envelope, samples: int = 512,
                     sampling: SamplingConfig = SamplingConfig()) -> tuple[bool, list[str]]:
    """Sampled admissibility certificate for ``u`` against ``env``.

    Checks u(r) >= u_*(r) on geometric samples of the open core interval
    (0, s) and |u(r)| <= u^*(r) on [s, r_max], where r_max is the radius at
    which the envelope tail integral falls below the sampling threshold.
    The core interval is sampled up to but excluding s itself, since hard
    cores are conventionally open at the contact radius.  Returns the
    verdict plus a list of violated sample points; envelope sanity
    failures raise instead.
    """
    if samples < 16:
        raise ValueError("need at least 16 samples per subinterval")
    if env.s <= 0:
        raise AdmissibilityError(f"split radius must be positive, got {env.s}")

    r_max = tail_cutoff(env, sampling.tail_threshold)
    r_lo = _geometric_samples(sampling.r_min_factor * env.s, env.s * (1.0 - 1e-9), samples)
    r_hi = _geometric_samples(env.s, r_max, samples)

    lo_vals = env.lower(r_lo)
    hi_vals = env.upper(r_hi)
    if np.any(lo_vals <= 0) or np.any(hi_vals <= 0):
        raise AdmissibilityError("envelope sides must be positive on their domains")
    if np.any(np.diff(lo_vals) > 0) or np.any(np.diff(hi_vals) > 0):
        raise AdmissibilityError("envelope sides must be nonincreasing")
    # Divergence certificate for the core integral: u_*(r) r^3 nonincreasing
    # in r means u_* falls no slower than r^-3, whose core integral diverges.
    core_mass = lo_vals * r_lo**3
    if np.any(np.diff(core_mass) > 1e-12 * np.abs(core_mass[:-1])):
        raise AdmissibilityError(
            "lower envelope decays faster than r^-3; its core integral converges")
    t_s, t_max = env.tail_integral(env.s), env.tail_integral(r_max)
    if not (math.isfinite(t_s) and t_max <= t_s):
        raise AdmissibilityError("upper envelope tail integral must be finite and nonincreasing")

    diagnostics: list[str] = []
    u_core = u.energies(r_lo)
    bad = u_core < lo_vals
    for r, uv, ev in zip(r_lo[bad], u_core[bad], lo_vals[bad]):
        diagnostics.append(f"core: u({r:.6g}) = {uv:.6g} < u_*({r:.6g}) = {ev:.6g}")
    u_tail = u.energies(r_hi)
    bad = np.abs(u_tail) > hi_vals
    for r, uv, ev in zip(r_hi[bad], u_tail[bad], hi_vals[bad]):
        diagnostics.append(f"tail: |u({r:.6g})| = {abs(uv):.6g} > u^*({r:.6g}) = {ev:.6g}")
    return (len(diagnostics) == 0, diagnostics)


def vu_norm(v: Perturbation, u: PairPotential, env: Envelope,
            sampling: SamplingConfig = SamplingConfig()) -> float:
    """Weighted sup norm of v: max of sup|v/u| on (0,s) and sup|v/u^*| on (s,inf).

    Both suprema are approximated on geometric sample grids (a sampled
    certificate).  Ratios against +inf core values are zero, so hard-core
    potentials leave the core part of the norm unconstrained.
    """
    s = env.s
    count = _sample_count(0, sampling.r_min_factor * s, s, sampling.points_per_decade)
    r_core = _geometric_samples(sampling.r_min_factor * s, s * (1.0 - 1e-9), count)
    u_core = u.energies(r_core)
    v_core = np.abs(v.values(r_core))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio_core = np.where(np.isinf(u_core), 0.0, v_core / np.abs(u_core))
    if np.any(np.isnan(ratio_core)) or np.any(np.isinf(ratio_core)):
        return math.inf

    r_max = tail_cutoff(env, sampling.tail_threshold)
    count = _sample_count(0, s, r_max, sampling.points_per_decade)
    r_tail = _geometric_samples(s * (1.0 + 1e-12), r_max, count)
    ratio_tail = np.abs(v.values(r_tail)) / env.upper(r_tail)
    if np.any(np.isnan(ratio_tail)):
        return math.inf
    return float(max(ratio_core.max(initial=0.0), ratio_tail.max(initial=0.0)))


def mayer_f(u: PairPotential, beta: float, r: float) -> float:
    """Mayer function exp(-beta*u(r)) - 1; exactly -1 on a hard core."""
    if r <= 0:
        raise ValueError("separation must be positive")
    if beta <= 0:
        raise ValueError("beta must be positive")
    val = u(r)
    if math.isinf(val):
        return -1.0
    return math.expm1(-beta * val)


def _abs_mayer_integrand(u: PairPotential, beta: float):
    def integrand(r):
        val = u(r)
        if math.isinf(val):
            core = 1.0
        else:
            core = abs(math.expm1(-beta * val))
        return 4.0 * math.pi * core * r * r
    return integrand


def _quad(integrand, lo, hi, points, tol, limit):
    pts = sorted(p for p in points if lo < p < hi)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(integrand, lo, hi, points=pts or None,
                                           epsabs=tol, epsrel=1e-12, limit=limit)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(
                f"radial quadrature on [{lo:g}, {hi:g}] did not converge: {exc}") from exc
    return value, abserr


def c_beta(u: PairPotential, beta: float, env: Envelope, tol: float = 1e-10,
           B: float = 0.0, limit: int = 200) -> RadialIntegral:
    """Regularity constant 4*pi * int_0^inf |exp(-beta*u(r)) - 1| r^2 dr.

    The integral is truncated at the radius where the envelope tail bound
    ``beta * exp(2*beta*B) * tail_integral(r)`` drops below ``tol``; that
    bound is returned as the error bar of the estimate.
    """
    factor = beta * math.exp(2.0 * beta * B)
    r_max = tail_cutoff(env, tol, factor=factor)
    integrand = _abs_mayer_integrand(u, beta)
    value, abserr = _quad(integrand, 0.0, r_max,
                          (env.s,) + tuple(u.breakpoints), tol, limit)
    return RadialIntegral(value, factor * env.tail_integral(r_max), abserr)


def c_beta_tail(u: PairPotential, beta: float, env: Envelope, d: float,
                tol: float = 1e-10, B: float = 0.0, limit: int = 200) -> RadialIntegral:
    """Tail constant 4*pi * int_d^inf |exp(-beta*u(r)) - 1| r^2 dr.

    ``d`` may lie below the envelope split radius; the envelope is only
    used to place the outer cutoff.
    """
    if d < 0:
        raise ValueError("tail radius must be nonnegative")
    factor = beta * math.exp(2.0 * beta * B)
    r_max = max(tail_cutoff(env, tol, factor=factor), d * 2.0 + 1.0)
    integrand = _abs_mayer_integrand(u, beta)
    value, abserr = _quad(integrand, d, r_max,
                          (env.s,) + tuple(u.breakpoints), tol, limit)
    return RadialIntegral(value, factor * env.tail_integral(max(r_max, env.s)), abserr)


def activity_bound(c_beta_value: float, B: float, beta: float) -> float:
    """Largest admissible activity, 1 / (c_beta * exp(2*beta*B + 1))."""
    if c_beta_value < 0:
        raise ValueError("c_beta must be nonnegative")
    if B < 0:
        raise ValueError("B must be nonnegative")
    if c_beta_value == 0.0:
        return math.inf
    return 1.0 / (c_beta_value * math.exp(2.0 * beta * B + 1.0))


def perturbed(u: PairPotential, v: Perturbation, t: float, env: Envelope,
              t0: float = 0.5, sampling: SamplingConfig = SamplingConfig()) -> PairPotential:
    """The potential r -> u(r) + t*v(r), admitted only inside the norm gate.

    Refuses with the measured norm when ``|t| * ||v|| > t0``; inside the
    gate the result is guaranteed stable and regular with the same
    constants that gate the unperturbed potential.
    """
    norm = abs(t) * vu_norm(v, u, env, sampling)
    if norm > t0:
        raise GateError(
            f"perturbation rejected: |t|*||v|| = {norm:.6g} exceeds the gate t0 = {t0:.6g}")
    return shifted_potential(u, v, t)


def shifted_potential(u: PairPotential, v: Perturbation, t: float) -> PairPotential:
    """u + t*v without the norm gate.  Callers must have checked the gate."""

    def fn(r, uf=u.fn, vf=v.fn, t=float(t)):
        return uf(r) + t * vf(r)

    params = {"base": u.kind, "scale": float(t), "direction": v.tag}
    return PairPotential("custom", params, fn,
                         breakpoints=tuple(u.breakpoints) + tuple(v.breakpoints))


def regularity_report(u: PairPotential, env: Envelope, beta: float, B: float,
                      t0: float = 0.5, samples: int = 512, tol: float = 1e-10,
                      sampling: SamplingConfig = SamplingConfig()) -> RegularityReport:
    """Assemble the constants that gate every downstream computation."""
    if not 0 < t0 < 1:
        raise ValueError(f"t0 must lie in (0, 1), got {t0}")
    if B < 0:
        raise ValueError("B must be nonnegative")
    admissible, diagnostics = check_admissible(u, env, samples, sampling)
    cb = c_beta(u, beta, env, tol, B)

    def c_beta_d(d, _u=u, _beta=beta, _env=env, _tol=tol, _B=B):
        return c_beta_tail(_u, _beta, _env, d, _tol, _B).value

    return RegularityReport(
        c_beta=cb.value,
        B=float(B),
        t0=float(t0),
        z_max=activity_bound(cb.value, B, beta),
        c_beta_d=c_beta_d,
        admissible=admissible,
        diagnostics=tuple(diagnostics),
    )


def stability_sample_check(u: PairPotential, B: float, n_particles: int = 8,
                           n_configs: int = 256, side: float = 4.0,
                           seed: int = 0) -> dict:
    """Random-configuration lower-bound sanity check on -U_N/N.

    Samples uniform configurations in a cube and reports the largest
    observed energy deficit per particle.  This can only ever refute a
    configured stability constant, never certify it; the result is flagged
    accordingly.
    """
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n_configs):
        pts = rng.uniform(-side / 2.0, side / 2.0, size=(n_particles, 3))
        diff = pts[:, None, :] - pts[None, :, :]
        r = np.sqrt((diff * diff).sum(axis=-1))
        iu = np.triu_indices(n_particles, k=1)
        energy = float(np.sum(u.energies(r[iu])))
        if math.isinf(energy):
            continue
        worst = max(worst, -energy / n_particles)
    ok = (worst == -math.inf) or (worst <= B + 1e-12)
    return {
        "max_energy_deficit_per_particle": worst,
        "configured_B": float(B),
        "consistent": bool(ok),
        "certifying": False,
        "n_configs": int(n_configs),
        "n_particles": int(n_particles),
    }
