"""Lyapunov functionals evaluated along simulated trajectories.

``V = V1 + V2`` with::

    V1 = 1/2 ||z||^2
    V2 = sum_i theta(x_i) / (2 b_i gamma_i) (M_i - Phi_i)^2

For the monodirectional law the auxiliary terms V3..V8 (whose sum W bounds
the gradient energy and the boundary errors) are available as diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pde_core import FieldState, PlantCoefficients, trapezoid
from .series import TimeSeries
from .smc_controller import (
    ControllerConfig,
    DisturbanceBounds,
    GainState,
    ModeError,
    beta_min,
    ultimate_bound_report,
)

__all__ = [
    "LyapunovSample",
    "CertificateReport",
    "beta_true",
    "sample_v",
    "gradient",
    "sample_w_components",
    "poincare_check",
    "certify_trajectory",
]


@dataclass(frozen=True)
class LyapunovSample:
    t: float
    v1: float
    v2: float
    beta: float
    beta_min: float
    rho: float = math.nan
    eta: float = math.nan
    eta_true_b: float = math.nan
    bound_b: float = math.nan
    w: dict = field(default_factory=dict)

    @property
    def v(self) -> float:
        return self.v1 + self.v2


def beta_true(plant: PlantCoefficients, cfg: ControllerConfig, theta_m: float, lam_M: float) -> float:
    """Decay constant with the true ``a_0``, ``b_0`` (``k0 + a0`` as effective gain)."""
    denom = (cfg.k0 + plant.a0) / plant.b0 + math.pi**2 / 4
    if denom <= 0:
        return -math.inf
    return theta_m * math.pi**2 / 4 - lam_M - theta_m * math.pi**4 / (16.0 * denom)


def _v2(theta_b: tuple[float, float], plant: PlantCoefficients, gains: GainState,
        dbounds: DisturbanceBounds, cfg: ControllerConfig) -> float:
    return (theta_b[0] / (2 * plant.b0 * cfg.gamma0) * (gains.m0 - dbounds.phi0) ** 2
            + theta_b[1] / (2 * plant.b1 * cfg.gamma1) * (gains.m1 - dbounds.phi1) ** 2)


def sample_v(state: FieldState, gains: GainState, plant: PlantCoefficients,
             dbounds: DisturbanceBounds, cfg: ControllerConfig) -> LyapunovSample:
    grid = state.grid
    bounds = plant.resolved_bounds(grid)
    theta_b = (plant.theta_at(0.0), plant.theta_at(1.0))
    v1 = 0.5 * trapezoid(state.z**2, grid.h)
    v2 = _v2(theta_b, plant, gains, dbounds, cfg)
    b_true = beta_true(plant, cfg, bounds.theta_m, bounds.lam_M)
    b_min = beta_min(bounds, cfg.k0)
    rho = eta = eta_true = bound = math.nan
    if cfg.mode == "bi":
        rho = min(2 * b_min, cfg.alpha0, cfg.alpha1)
        phis = (dbounds.phi0, dbounds.phi1)
        eta_true = sum(a * th / (2 * b * g) * p**2 for a, th, b, g, p in
                       zip(cfg.alpha, theta_b, (plant.b0, plant.b1), cfg.gamma, phis))
        try:
            ub = ultimate_bound_report(bounds, dbounds, cfg)
            eta, bound = ub.eta, ub.bound
        except ValueError:
            pass
    return LyapunovSample(t=state.t, v1=v1, v2=v2, beta=b_true, beta_min=b_min, rho=rho,
                          eta=eta, eta_true_b=eta_true, bound_b=bound)


def gradient(state: FieldState) -> np.ndarray:
    """Second-order spatial derivative samples (one-sided at the ends)."""
    return np.gradient(state.z, state.grid.h, edge_order=2)


def sample_w_components(state: FieldState, z_x: np.ndarray | None, gains: GainState,
                        plant: PlantCoefficients, dbounds: DisturbanceBounds, cfg: ControllerConfig,
                        *, psi: tuple[float, float] = (0.0, 0.0), v_initial: float) -> LyapunovSample:
    """V3..V8 of the monodirectional analysis at one time instant.

    ``psi`` are the disturbance values at this instant and ``v_initial`` is
    ``V`` at the start of the certified window (it fixes the gain bounds
    ``Gamma_i``).
    """
    if cfg.mode != "mono":
        raise ModeError("W components belong to the monodirectional analysis")
    if dbounds.phid0 is None or dbounds.phid1 is None:
        raise ValueError("derivative bounds phid_i are required")
    grid = state.grid
    if z_x is None:
        z_x = gradient(state)
    base = sample_v(state, gains, plant, dbounds, cfg)
    th_nodes = plant.theta_on(grid.nodes)
    lam_nodes = plant.lam_on(grid.nodes)
    bounds = plant.resolved_bounds(grid)
    z = (state.z[0], state.z[-1])
    theta_b = (th_nodes[0], th_nodes[-1])
    b = (plant.b0, plant.b1)
    m = (gains.m0, gains.m1)
    phi = (dbounds.phi0, dbounds.phi1)
    phid = (dbounds.phid0, dbounds.phid1)
    kbar = (cfg.k0 + plant.a0, cfg.k1 + plant.a1)

    gam_bound = [phi[i] + math.sqrt(2 * b[i] * cfg.gamma[i] * v_initial / theta_b[i]) for i in (0, 1)]
    v3 = 0.5 * trapezoid(th_nodes * z_x**2, grid.h)
    v4 = sum(theta_b[i] / b[i] * m[i] * abs(z[i]) for i in (0, 1))
    v5 = sum(theta_b[i] / b[i] * (phi[i] * abs(z[i]) - psi[i] * z[i]) for i in (0, 1))
    v6 = sum(theta_b[i] / b[i] * phid[i] / cfg.gamma[i] * (gam_bound[i] - m[i]) for i in (0, 1))
    v7 = 0.0
    for i in (0, 1):
        if kbar[i] > 0:
            v7 += theta_b[i] / (2 * b[i]) * (math.sqrt(kbar[i]) * abs(z[i]) - phi[i] / math.sqrt(kbar[i])) ** 2
        else:
            v7 = math.nan
    v8 = abs(bounds.lam_M) * base.v - 0.5 * trapezoid(lam_nodes * state.z**2, grid.h)
    w = {"V3": v3, "V4": v4, "V5": v5, "V6": v6, "V7": v7, "V8": v8,
         "Gamma0": gam_bound[0], "Gamma1": gam_bound[1]}
    return LyapunovSample(t=base.t, v1=base.v1, v2=base.v2, beta=base.beta, beta_min=base.beta_min,
                          w=w)


def poincare_check(f: np.ndarray, fprime: np.ndarray, h: float | None = None,
                   rtol: float = 1e-8) -> tuple[float, float, bool]:
    """Check ``-(pi^2/4)||f||^2 + (pi^2/2) f(0) mean(f) - (pi^2/4) f(0)^2 >= -||f'||^2``.

    ``f`` and ``fprime`` are samples on a uniform grid over ``[0, 1]``.
    """
    f = np.asarray(f, dtype=float)
    fprime = np.asarray(fprime, dtype=float)
    if h is None:
        h = 1.0 / (len(f) - 1)
    pi2 = math.pi**2
    norm2 = trapezoid(f**2, h)
    mean = trapezoid(f, h)
    lhs = -pi2 / 4 * norm2 + pi2 / 2 * f[0] * mean - pi2 / 4 * f[0] ** 2
    rhs = -trapezoid(fprime**2, h)
    scale = max(1.0, abs(lhs), abs(rhs))
    return float(lhs), float(rhs), bool(lhs >= rhs - rtol * scale)


@dataclass
class CertificateReport:
    mode: str
    t_start: float
    v_initial: float = math.nan
    n_samples: int = 0
    # monodirectional
    max_increment: float = math.nan
    increment_tol: float = math.nan
    violations: int = 0
    gains_monotone: bool = True
    norm_bound_ok: bool = True
    gain_bound_ok: bool = True
    final_norm: float = math.nan
    norm_target: float = math.nan
    final_below_target: bool = False
    # bidirectional
    bound_b: float = math.nan
    t_star: float = math.nan
    stays_within: bool = False
    max_after_entry: float = math.nan
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.mode == "mono":
            return self.violations == 0 and self.gains_monotone and self.final_below_target
        return math.isfinite(self.t_star) and self.stays_within

    def lines(self) -> list[str]:
        out = [f"mode: {self.mode}", f"window start t: {self.t_start:.6g} s",
               f"samples: {self.n_samples}", f"V(start): {self.v_initial:.6g}"]
        if self.mode == "mono":
            out += [
                f"max V increment: {self.max_increment:.6g} (tolerance {self.increment_tol:.3g})",
                f"V increase violations: {self.violations}",
                f"M_i nondecreasing: {self.gains_monotone}",
                f"||z|| <= sqrt(2 V(start)): {self.norm_bound_ok}",
                f"M_i <= Gamma_i: {self.gain_bound_ok}",
                f"final ||z||: {self.final_norm:.6g} (target {self.norm_target:.6g}) "
                f"{'PASS' if self.final_below_target else 'FAIL'}",
            ]
        else:
            out += [
                f"B: {self.bound_b:.6g}",
                f"T*: {self.t_star:.6g} s",
                f"max ||z|| after entry: {self.max_after_entry:.6g}",
                f"stays within B*(1+tol): {self.stays_within}",
            ]
        out.append(f"certificate: {'PASS' if self.passed else 'FAIL'}")
        out.extend(self.notes)
        return out


def certify_trajectory(series: TimeSeries, mode: str, *, t_start: float = 0.0,
                       rel_tol: float = 1e-6, bound_b: float | None = None, bound_tol: float = 0.05,
                       reference_time: float | None = None, target_fraction: float = 0.01,
                       gamma_bounds: tuple[float, float] | None = None,
                       abs_tol: float = 1e-14) -> CertificateReport:
    """Check the recorded trajectory against the Lyapunov claims of ``mode``.

    ``mono``: ``V`` must not increase by more than ``rel_tol * V(t_start)`` per
    step from ``t_start`` on, the gains must be nondecreasing, and the final
    ``||z||`` must fall below ``target_fraction`` times its value at
    ``reference_time``.

    ``bi``: the first time ``T*`` with ``||z|| <= bound_b`` must exist and
    ``||z||`` must stay below ``bound_b (1 + bound_tol)`` afterwards.

    ``abs_tol`` is a round-off floor for runs that sit exactly at the origin.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    if mode not in ("mono", "bi"):
        raise ValueError(f"unknown mode {mode!r}")
    mask = series.t >= t_start - 1e-9
    if not mask.any():
        raise ValueError("no samples after t_start")
    idx = np.flatnonzero(mask)
    t = series.t[idx]
    norm = series.l2_err[idx]
    rep = CertificateReport(mode=mode, t_start=float(t[0]), n_samples=len(idx))

    if mode == "mono":
        v = series.V[idx]
        rep.v_initial = float(v[0])
        dv = np.diff(v)
        rep.increment_tol = max(rel_tol * rep.v_initial, abs_tol)
        rep.max_increment = float(dv.max()) if len(dv) else 0.0
        rep.violations = int(np.count_nonzero(dv > rep.increment_tol))
        m0, m1 = series.M0[idx], series.M1[idx]
        rep.gains_monotone = bool(np.all(np.diff(m0) >= 0) and np.all(np.diff(m1) >= 0))
        rep.norm_bound_ok = bool(np.all(norm <= math.sqrt(2 * rep.v_initial) * (1 + 1e-9)))
        if gamma_bounds is not None:
            rep.gain_bound_ok = bool(np.all(m0 <= gamma_bounds[0]) and np.all(m1 <= gamma_bounds[1]))
        ref_t = t[0] if reference_time is None else reference_time
        ref_i = int(np.argmin(np.abs(series.t - ref_t)))
        rep.norm_target = target_fraction * float(series.l2_err[ref_i])
        rep.final_norm = float(norm[-1])
        rep.final_below_target = rep.final_norm < max(rep.norm_target, abs_tol)
        if rep.violations:
            worst = int(np.argmax(dv))
            rep.notes.append(f"largest V increase at t = {t[worst]:.4g} s")
    else:
        if bound_b is None or not math.isfinite(bound_b):
            raise ValueError("bidirectional certification needs a finite bound_b")
        rep.bound_b = float(bound_b)
        v = series.V[idx]
        rep.v_initial = float(v[0])
        inside = np.flatnonzero(norm <= bound_b)
        if len(inside):
            first = int(inside[0])
            rep.t_star = float(t[first])
            rep.max_after_entry = float(norm[first:].max())
            rep.stays_within = bool(rep.max_after_entry <= bound_b * (1 + bound_tol))
        else:
            rep.t_star = math.inf
            rep.notes.append("||z|| never entered the ultimate bound")
    return rep
