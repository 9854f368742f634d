"""Reference equilibrium of the beam and its feedforward inputs.

With ``vt = T_e - T_a`` the steady state solves ``theta_bar vt'' + lam vt = 0``,
so for ``lam < 0`` it is ``C1 sinh(w zeta) + C2 cosh(w zeta)`` with
``w = sqrt(|lam| / theta_bar)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tem_plant import PhysicalPlant

__all__ = [
    "UnsupportedBranchError",
    "SingularSystemError",
    "EquilibriumProfile",
    "solve_equilibrium",
    "feedforward_inputs",
    "closed_form_inputs",
    "closed_form_constants",
    "determinant_closed_form",
    "bvp_residuals",
]

MAX_LOMEGA = 500.0


class UnsupportedBranchError(ValueError):
    pass


class SingularSystemError(ArithmeticError):
    pass


@dataclass(frozen=True)
class EquilibriumProfile:
    c1: float
    c2: float
    omega: float
    t_ambient: float
    length: float
    u_e0: float
    u_e1: float
    t_e0: float
    t_eL: float
    linear: bool = False

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        if self.linear:
            return self.t_ambient + self.c2 + self.c1 * zeta
        return self.c1 * np.sinh(self.omega * zeta) + self.c2 * np.cosh(self.omega * zeta) + self.t_ambient

    def derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        if self.linear:
            return np.full_like(zeta, self.c1)
        w = self.omega
        return w * (self.c1 * np.cosh(w * zeta) + self.c2 * np.sinh(w * zeta))

    def second_derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=float)
        if self.linear:
            return np.zeros_like(zeta)
        return self.omega**2 * (self(zeta) - self.t_ambient)


def closed_form_inputs(r0: float, rL: float, plant: PhysicalPlant) -> tuple[float, float]:
    """Feedforward inputs for boundary offsets ``r0 = T_e0 - T_a``, ``rL = T_eL - T_a``."""
    w, L = plant.omega, plant.length
    sh, ch = math.sinh(L * w), math.cosh(L * w)
    ue0 = (r0 * (plant.a0 * sh + plant.b_bar0 * w * ch) - plant.b_bar0 * w * rL) / sh
    ue1 = (rL * (plant.a1 * sh + plant.b_bar1 * w * ch) - plant.b_bar1 * w * r0) / sh
    return ue0, ue1


def determinant_closed_form(plant: PhysicalPlant) -> float:
    w, L = plant.omega, plant.length
    return ((plant.a0 * plant.a1 + plant.b_bar0 * plant.b_bar1 * w**2) * math.sinh(L * w)
            + (plant.a0 * plant.b_bar1 + plant.a1 * plant.b_bar0) * w * math.cosh(L * w))


def closed_form_constants(ue0: float, ue1: float, plant: PhysicalPlant) -> tuple[float, float]:
    w, L = plant.omega, plant.length
    sh, ch = math.sinh(L * w), math.cosh(L * w)
    a0, a1, bb0, bb1 = plant.a0, plant.a1, plant.b_bar0, plant.b_bar1
    d_a = determinant_closed_form(plant)
    c1 = -(a1 * ue0 * ch - a0 * ue1 + bb1 * ue0 * w * sh) / d_a
    c2 = (bb0 * ue1 * w + a1 * ue0 * sh + bb1 * ue0 * w * ch) / d_a
    return c1, c2


def _system_matrix(plant: PhysicalPlant) -> np.ndarray:
    w, L = plant.omega, plant.length
    sh, ch = math.sinh(L * w), math.cosh(L * w)
    return np.array([
        [-plant.b_bar0 * w, plant.a0],
        [plant.a1 * sh + plant.b_bar1 * w * ch, plant.a1 * ch + plant.b_bar1 * w * sh],
    ])


def _rel_close(a: float, b: float, tol: float, scale: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), scale)


def _linear_profile(t_e0: float, t_eL: float, plant: PhysicalPlant) -> EquilibriumProfile:
    r0, rL = t_e0 - plant.t_ambient, t_eL - plant.t_ambient
    slope = (rL - r0) / plant.length
    ue0 = -plant.b_bar0 * slope + plant.a0 * r0
    ue1 = plant.b_bar1 * slope + plant.a1 * rL
    return EquilibriumProfile(c1=slope, c2=r0, omega=0.0, t_ambient=plant.t_ambient,
                              length=plant.length, u_e0=ue0, u_e1=ue1,
                              t_e0=t_e0, t_eL=t_eL, linear=True)


def solve_equilibrium(t_e0: float, t_eL: float, plant: PhysicalPlant) -> EquilibriumProfile:
    """Equilibrium through the boundary temperatures ``t_e0`` and ``t_eL``.

    The constants come from the closed-form inverse of the 2x2 boundary
    system and are checked against a generic solve and against the requested
    endpoint temperatures.
    """
    lam, theta_bar, L = plant.lam, plant.theta_bar, plant.length
    if lam > 0:
        raise UnsupportedBranchError("equilibria are only available for lam <= 0")
    if abs(lam) < 1e-12 * theta_bar / L**2:
        return _linear_profile(t_e0, t_eL, plant)
    w = plant.omega
    if L * w > MAX_LOMEGA:
        raise UnsupportedBranchError(f"L*omega = {L * w:.3g} exceeds {MAX_LOMEGA}")

    r0, rL = t_e0 - plant.t_ambient, t_eL - plant.t_ambient
    ue0, ue1 = closed_form_inputs(r0, rL, plant)

    mat = _system_matrix(plant)
    d_a = determinant_closed_form(plant)
    scale = abs(mat[0, 0] * mat[1, 1]) + abs(mat[0, 1] * mat[1, 0])
    if d_a == 0.0 or abs(d_a) < 1e-14 * scale:
        raise SingularSystemError(f"boundary system is singular (d_A = {d_a:.3e})")
    det = float(np.linalg.det(mat))
    if not _rel_close(-det, d_a, 1e-12, 0.0):
        raise ArithmeticError(f"determinant mismatch: {-det!r} vs closed form {d_a!r}")

    c1, c2 = closed_form_constants(ue0, ue1, plant)
    c1_s, c2_s = np.linalg.solve(mat, np.array([ue0, ue1]))
    cscale = max(abs(r0), abs(rL), 1e-300)
    if not (_rel_close(c1, c1_s, 1e-12, cscale) and _rel_close(c2, c2_s, 1e-12, cscale)):
        raise ArithmeticError(f"closed-form constants ({c1}, {c2}) disagree with solve ({c1_s}, {c2_s})")

    return EquilibriumProfile(c1=c1, c2=c2, omega=w, t_ambient=plant.t_ambient, length=L,
                              u_e0=ue0, u_e1=ue1, t_e0=t_e0, t_eL=t_eL)


def feedforward_inputs(profile: EquilibriumProfile) -> tuple[float, float]:
    return profile.u_e0, profile.u_e1


def bvp_residuals(profile: EquilibriumProfile, plant: PhysicalPlant, zeta=None) -> dict[str, float]:
    """Relative residuals of the steady ODE and both Robin conditions.

    Each residual is divided by the magnitude of the largest term in its
    equation.
    """
    if zeta is None:
        zeta = np.linspace(0.0, plant.length, 11)
    zeta = np.asarray(zeta, dtype=float)
    vt = profile(zeta) - plant.t_ambient
    d2 = profile.second_derivative(zeta)
    ode_terms = np.abs(plant.theta_bar * d2) + np.abs(plant.lam * vt)
    ode = np.abs(plant.theta_bar * d2 + plant.lam * vt)
    ode_rel = float(np.max(ode / np.maximum(ode_terms.max(), 1e-300)))

    L = plant.length
    v0 = float(profile(0.0)) - plant.t_ambient
    vL = float(profile(L)) - plant.t_ambient
    d0 = float(profile.derivative(0.0))
    dL = float(profile.derivative(L))
    # C1, C2 grow like cosh(L w) while T_e' may not: scale by the summands, not the sum
    if profile.linear:
        g0 = gL = abs(profile.c1)
    else:
        w = profile.omega
        g0 = w * abs(profile.c1)
        gL = w * (abs(profile.c1 * math.cosh(w * L)) + abs(profile.c2 * math.sinh(w * L)))
    bc0_terms = [plant.b_bar0 * g0, plant.a0 * v0, profile.u_e0]
    bc1_terms = [plant.b_bar1 * gL, plant.a1 * vL, profile.u_e1]
    bc0 = -plant.b_bar0 * d0 + plant.a0 * v0 - profile.u_e0
    bc1 = plant.b_bar1 * dL + plant.a1 * vL - profile.u_e1
    return {
        "ode": ode_rel,
        "bc0": abs(bc0) / max(max(abs(x) for x in bc0_terms), 1e-300),
        "bc1": abs(bc1) / max(max(abs(x) for x in bc1_terms), 1e-300),
        "endpoint0": abs(float(profile(0.0)) - profile.t_e0),
        "endpointL": abs(float(profile(L)) - profile.t_eL),
    }
