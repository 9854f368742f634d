"""Adaptive proportional-plus-relay boundary controller.

Control law at boundary ``i`` (``x_0 = 0``, ``x_1 = 1``)::

    u_i = -k_i z_i - M_i sign(z_i)

with the gain ``M_i`` adapted either bidirectionally (``alpha_i > 0``)::

    dM_i/dt = -alpha_i M_i + gamma_i |z_i|

or monodirectionally (``alpha_i = 0``), in which case adaptation is paused while
``|z_i| <= eps_i`` (dead zone).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .pde_core import PlantBounds

__all__ = [
    "ConfigError",
    "AssumptionViolatedError",
    "ModeError",
    "InvalidMarginError",
    "ControllerConfig",
    "GainState",
    "DisturbanceBounds",
    "ValidationReport",
    "UltimateBound",
    "control_output",
    "adapt_step",
    "k_thresholds",
    "beta_min",
    "check_gain_conditions",
    "ultimate_bound",
    "ultimate_bound_report",
]


class ConfigError(ValueError):
    pass


class AssumptionViolatedError(ValueError):
    pass


class ModeError(ValueError):
    pass


class InvalidMarginError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerConfig:
    k0: float
    k1: float
    gamma0: float
    gamma1: float
    alpha0: float = 0.0
    alpha1: float = 0.0
    eps0: float = 0.0
    eps1: float = 0.0
    m0_init: float = 0.0
    m1_init: float = 0.0

    def __post_init__(self):
        vals = [self.k0, self.k1, self.gamma0, self.gamma1, self.alpha0, self.alpha1,
                self.eps0, self.eps1, self.m0_init, self.m1_init]
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError("controller parameters must be finite")
        if self.gamma0 <= 0 or self.gamma1 <= 0:
            raise ConfigError("adaptation rates gamma_i must be positive")
        if self.alpha0 < 0 or self.alpha1 < 0:
            raise ConfigError("leakage rates alpha_i must be nonnegative")
        if self.eps0 < 0 or self.eps1 < 0:
            raise ConfigError("dead-zone widths eps_i must be nonnegative")
        if self.m0_init < 0 or self.m1_init < 0:
            raise ConfigError("initial adaptive gains must be nonnegative")
        if (self.alpha0 > 0) != (self.alpha1 > 0):
            raise ConfigError("mixed adaptation modes: set both alpha_i > 0 or both = 0")

    @property
    def mode(self) -> str:
        return "bi" if self.alpha0 > 0 else "mono"

    @property
    def k(self) -> tuple[float, float]:
        return (self.k0, self.k1)

    @property
    def gamma(self) -> tuple[float, float]:
        return (self.gamma0, self.gamma1)

    @property
    def alpha(self) -> tuple[float, float]:
        return (self.alpha0, self.alpha1)

    @property
    def eps(self) -> tuple[float, float]:
        return (self.eps0, self.eps1)

    def check_sample_time(self, dt: float) -> None:
        """Reject sample times for which the Euler leakage update is not contractive."""
        if dt * max(self.alpha0, self.alpha1) >= 1.0:
            raise ConfigError(f"dt * alpha_i must be < 1 (dt={dt}, alpha={self.alpha})")


@dataclass(frozen=True)
class GainState:
    m0: float
    m1: float
    t: float = 0.0

    @classmethod
    def initial(cls, cfg: ControllerConfig, t: float = 0.0) -> "GainState":
        return cls(cfg.m0_init, cfg.m1_init, t)


@dataclass(frozen=True)
class DisturbanceBounds:
    phi0: float
    phi1: float
    phid0: float | None = None
    phid1: float | None = None

    def __post_init__(self):
        for v in (self.phi0, self.phi1, self.phid0, self.phid1):
            if v is not None and v < 0:
                raise ValueError("disturbance bounds must be nonnegative")

    def scaled(self, c: float) -> "DisturbanceBounds":
        return DisturbanceBounds(
            self.phi0 * c, self.phi1 * c,
            None if self.phid0 is None else self.phid0 * c,
            None if self.phid1 is None else self.phid1 * c,
        )


def _sign(z: float) -> float:
    # sign(0) = 0 selects the zero element of the Filippov set
    return float(np.sign(z))


def control_output(gains: GainState, z0: float, z1: float, cfg: ControllerConfig) -> tuple[float, float]:
    u0 = -cfg.k0 * z0 - gains.m0 * _sign(z0)
    u1 = -cfg.k1 * z1 - gains.m1 * _sign(z1)
    return u0, u1


def _adapt_one(m: float, z: float, dt: float, alpha: float, gamma: float, eps: float) -> float:
    if alpha > 0:
        return max(0.0, m + dt * (-alpha * m + gamma * abs(z)))
    if abs(z) > eps:
        return m + dt * gamma * abs(z)
    return m


def adapt_step(gains: GainState, z0: float, z1: float, dt: float, cfg: ControllerConfig) -> GainState:
    """One explicit-Euler update of both adaptive gains over ``dt``."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    cfg.check_sample_time(dt)
    m0 = _adapt_one(gains.m0, z0, dt, cfg.alpha0, cfg.gamma0, cfg.eps0)
    m1 = _adapt_one(gains.m1, z1, dt, cfg.alpha1, cfg.gamma1, cfg.eps1)
    return GainState(m0, m1, gains.t + dt)


def k_thresholds(bounds: PlantBounds, cfg: ControllerConfig | None = None) -> dict[str, float]:
    """Lower limits on ``k0``, ``k1`` for both adaptation modes.

    The monodirectional limits need ``gamma_i`` and are only present when ``cfg``
    is given.
    """
    lam_bar = bounds.lam_bar_M
    denom = bounds.theta_m * math.pi**2 - 4.0 * lam_bar
    if denom <= 0:
        raise AssumptionViolatedError(
            f"theta_m*pi^2 - 4*max(0, lam_M) = {denom:.3e} <= 0: reaction too strong")
    base0 = lam_bar * math.pi**2 / denom * bounds.b_M0 - bounds.a_m0
    base1 = -bounds.a_m1
    out = {"lam_bar_M": lam_bar, "k0_bi": base0, "k1_bi": base1}
    if cfg is not None:
        out["k0_mono"] = base0 + cfg.gamma0
        out["k1_mono"] = base1 + cfg.gamma1
    return out


def beta_min(bounds: PlantBounds, k0: float) -> float:
    """Guaranteed decay constant computed from the worst-case ``a_0``, ``b_0``."""
    denom = (k0 + bounds.a_m0) / bounds.b_M0 + math.pi**2 / 4
    if denom <= 0:
        return -math.inf
    return (bounds.theta_m * math.pi**2 / 4 - bounds.lam_M
            - bounds.theta_m * math.pi**4 / (16.0 * denom))


@dataclass(frozen=True)
class ValidationReport:
    mode: str
    lam_bar_M: float
    thresholds: dict[str, float]
    margins: dict[str, float]
    checks: dict[str, bool]
    beta_min: float
    notes: list[str] = field(default_factory=list)

    @property
    def bi_ok(self) -> bool:
        return self.checks["k0_bi"] and self.checks["k1_bi"]

    @property
    def mono_ok(self) -> bool:
        return self.checks["k0_mono"] and self.checks["k1_mono"]

    @property
    def passed(self) -> bool:
        return self.bi_ok if self.mode == "bi" else self.mono_ok

    def lines(self) -> list[str]:
        out = [f"mode: {self.mode}", f"lam_bar_M: {self.lam_bar_M:.6g}"]
        for key in ("k0_bi", "k1_bi", "k0_mono", "k1_mono"):
            rel = ">" if key == "k0_bi" else ">="
            out.append(f"{key}: k {rel} {self.thresholds[key]:.6g}  margin {self.margins[key]:.6g}  "
                       f"{'PASS' if self.checks[key] else 'FAIL'}")
        out.append(f"beta_min: {self.beta_min:.6g}")
        out.append(f"overall ({self.mode}): {'PASS' if self.passed else 'FAIL'}")
        out.extend(self.notes)
        return out


def check_gain_conditions(bounds: PlantBounds, dbounds: DisturbanceBounds | None,
                          cfg: ControllerConfig) -> ValidationReport:
    """Evaluate the proportional-gain conditions of both adaptation modes.

    The bidirectional ``k0`` condition is strict, the other three are
    non-strict. ``dbounds`` is accepted for interface symmetry; the gain
    conditions do not depend on the disturbance size.
    """
    thr = k_thresholds(bounds, cfg)
    margins = {
        "k0_bi": cfg.k0 - thr["k0_bi"],
        "k1_bi": cfg.k1 - thr["k1_bi"],
        "k0_mono": cfg.k0 - thr["k0_mono"],
        "k1_mono": cfg.k1 - thr["k1_mono"],
    }
    checks = {
        "k0_bi": margins["k0_bi"] > 0,
        "k1_bi": margins["k1_bi"] >= 0,
        "k0_mono": margins["k0_mono"] >= 0,
        "k1_mono": margins["k1_mono"] >= 0,
    }
    notes = []
    if bounds.lam_M > 0:
        notes.append("lam_M > 0: destabilizing reaction, theta_m, lam_M and b_Mi must be known")
    return ValidationReport(
        mode=cfg.mode,
        lam_bar_M=thr["lam_bar_M"],
        thresholds={k: thr[k] for k in ("k0_bi", "k1_bi", "k0_mono", "k1_mono")},
        margins=margins,
        checks=checks,
        beta_min=beta_min(bounds, cfg.k0),
        notes=notes,
    )


@dataclass(frozen=True)
class UltimateBound:
    eta: float
    rho: float
    beta_min: float
    epsilon: float
    bound: float

    def lines(self) -> list[str]:
        return [f"eta: {self.eta:.6g}", f"rho: {self.rho:.6g}", f"beta_min: {self.beta_min:.6g}",
                f"epsilon: {self.epsilon:.6g}", f"B: {self.bound:.6g}"]


def ultimate_bound_report(bounds: PlantBounds, dbounds: DisturbanceBounds, cfg: ControllerConfig,
                          epsilon_margin: float | None = None) -> UltimateBound:
    """Ultimate bound ``B = sqrt(2 eta / (rho - eps))`` with its constituents.

    ``epsilon_margin`` defaults to ``rho / 2``.
    """
    if cfg.mode != "bi":
        raise ModeError("the ultimate bound exists only for bidirectional adaptation")
    report = check_gain_conditions(bounds, dbounds, cfg)
    if not report.bi_ok:
        raise ConfigError("bidirectional gain conditions are not met: " + "; ".join(report.lines()))
    bmin = report.beta_min
    rho = min(2.0 * bmin, cfg.alpha0, cfg.alpha1)
    eps = rho / 2.0 if epsilon_margin is None else float(epsilon_margin)
    if not 0.0 < eps < rho:
        raise InvalidMarginError(f"epsilon margin must lie in (0, rho={rho:.6g}), got {eps}")
    eta = sum(a * bounds.theta_M * phi**2 / (2.0 * bm * g)
              for a, phi, bm, g in zip(cfg.alpha, (dbounds.phi0, dbounds.phi1),
                                       (bounds.b_m0, bounds.b_m1), cfg.gamma))
    return UltimateBound(eta=eta, rho=rho, beta_min=bmin, epsilon=eps,
                         bound=math.sqrt(2.0 * eta / (rho - eps)))


def ultimate_bound(bounds: PlantBounds, dbounds: DisturbanceBounds, cfg: ControllerConfig,
                   epsilon_margin: float | None = None) -> float:
    return ultimate_bound_report(bounds, dbounds, cfg, epsilon_margin).bound
