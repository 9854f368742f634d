"""Aluminium beam with thermoelectric (Peltier) boundary actuators.

Physical model in the beam coordinate ``zeta in [0, L]``::

    T_t = theta_bar T_zz + lam (T - T_a)
    -b_bar0 T_z(0) + a0 (T(0) - T_a) = I0 T(0) + R0/(2 sigma0) I0^2 + Q_psi0/sigma0
     b_bar1 T_z(L) + a1 (T(L) - T_a) = I1 T(L) + R1/(2 sigma1) I1^2 + Q_psi1/sigma1

Temperatures are in degC unless a caller adds an absolute offset to the
temperature that multiplies the current (Peltier term).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .pde_core import FieldState, InvalidGridError, PlantBounds, PlantCoefficients, SpatialGrid

__all__ = [
    "DegenerateDomainError",
    "SaturationError",
    "BeamParams",
    "TemParams",
    "PhysicalPlant",
    "BENCH_BEAM",
    "BENCH_TEM0",
    "BENCH_TEM1",
    "derive_plant",
    "tem_heat_flow",
    "boundary_flux_density",
    "input_from_current",
    "linearize_input",
    "alternative_current",
    "feasible_input_min",
    "nondimensionalize",
    "error_coordinates",
]


class DegenerateDomainError(ValueError):
    pass


class SaturationError(ValueError):
    """Requested input lies below the smallest input the TEM can realize.

    ``u_min`` is the feasibility boundary; clipping to it yields the double root.
    """

    def __init__(self, u: float, u_min: float, t_boundary: float):
        super().__init__(f"input u={u:.6g} below feasible minimum {u_min:.6g} at T={t_boundary:.6g}")
        self.u = u
        self.u_min = u_min
        self.t_boundary = t_boundary


def _require_positive(obj) -> None:
    for name, val in vars(obj).items():
        if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
            raise ValueError(f"{type(obj).__name__}.{name} must be finite and > 0, got {val!r}")


@dataclass(frozen=True)
class BeamParams:
    """Beam geometry (m) and material data (SI)."""

    length_al: float
    thickness: float
    width: float
    conductivity: float
    density: float
    heat_capacity: float
    h_conv: float
    t_ambient: float = 24.6

    def __post_init__(self):
        for name in ("length_al", "thickness", "width", "conductivity", "density", "heat_capacity"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"BeamParams.{name} must be finite and > 0, got {val!r}")
        if not (math.isfinite(self.h_conv) and self.h_conv >= 0):
            raise ValueError("BeamParams.h_conv must be finite and >= 0")
        if not math.isfinite(self.t_ambient):
            raise ValueError("BeamParams.t_ambient must be finite")


@dataclass(frozen=True)
class TemParams:
    r_th: float
    sigma: float
    r_el: float
    l_tem: float

    def __post_init__(self):
        _require_positive(self)


BENCH_BEAM = BeamParams(length_al=0.315, thickness=0.003, width=0.025, conductivity=209.0,
                        density=2700.0, heat_capacity=898.0, h_conv=69.3, t_ambient=24.6)
BENCH_TEM0 = TemParams(r_th=2.21, sigma=0.037, r_el=10.2, l_tem=0.025)
BENCH_TEM1 = TemParams(r_th=2.15, sigma=0.044, r_el=13.5, l_tem=0.025)


@dataclass(frozen=True)
class PhysicalPlant:
    beam: BeamParams
    tem0: TemParams
    tem1: TemParams
    length: float
    area_ratio: float
    area_loss: float
    area_cs: float
    theta_bar: float
    lam: float
    a0: float
    a1: float
    b_bar0: float
    b_bar1: float

    @property
    def t_ambient(self) -> float:
        return self.beam.t_ambient

    @property
    def omega(self) -> float:
        return math.sqrt(abs(self.lam) / self.theta_bar)

    def tem(self, side: str) -> TemParams:
        return self.tem0 if side == "left" else self.tem1

    def with_ambient(self, t_ambient: float) -> "PhysicalPlant":
        return replace(self, beam=replace(self.beam, t_ambient=t_ambient))


def derive_plant(beam: BeamParams, tem0: TemParams, tem1: TemParams) -> PhysicalPlant:
    """Effective domain, loss areas, diffusivity, reaction and Robin coefficients."""
    if beam.length_al <= tem0.l_tem + tem1.l_tem:
        raise DegenerateDomainError("beam is not longer than the two boundary TEMs")
    L = beam.length_al - tem0.l_tem - tem1.l_tem
    b, h = beam.width, beam.thickness
    area_ratio = (2 * L * b + 2 * L * h) / (L * b * h)
    # the loss area uses one TEM length; both modules share l_TEM in the setup
    l_tem = tem0.l_tem
    area_loss = l_tem * b + 2 * l_tem * h + b * h
    area_cs = b * h
    rc = beam.density * beam.heat_capacity
    theta_bar = beam.conductivity / rc
    lam = -(beam.h_conv / rc) * area_ratio

    def robin_a(p: TemParams) -> float:
        return (1.0 / p.sigma) * (1.0 / p.r_th + beam.h_conv * area_loss)

    return PhysicalPlant(
        beam=beam, tem0=tem0, tem1=tem1, length=L, area_ratio=area_ratio,
        area_loss=area_loss, area_cs=area_cs, theta_bar=theta_bar, lam=lam,
        a0=robin_a(tem0), a1=robin_a(tem1),
        b_bar0=beam.conductivity * area_cs / tem0.sigma,
        b_bar1=beam.conductivity * area_cs / tem1.sigma,
    )


def tem_heat_flow(t_boundary: float, current: float, t_ambient: float, p: TemParams) -> float:
    """Heat flow (W) delivered by a TEM: conduction, Peltier and Joule terms."""
    return ((t_ambient - t_boundary) / p.r_th + p.sigma * current * t_boundary
            + 0.5 * p.r_el * current**2)


def boundary_flux_density(t_boundary: float, current: float, t_ambient: float, p: TemParams,
                          plant: PhysicalPlant, side: str) -> float:
    """Heat flux density (W/m^2) entering the beam at one end."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    q_tem = tem_heat_flow(t_boundary, current, t_ambient, p)
    q_loss = plant.beam.h_conv * plant.area_loss * (t_boundary - t_ambient)
    return (q_tem - q_loss) / plant.area_cs


def input_from_current(current: float, t_boundary: float, p: TemParams) -> float:
    """Linearized input realized by ``current`` at boundary temperature ``t_boundary``."""
    return current * t_boundary + 0.5 * p.r_el / p.sigma * current**2


def feasible_input_min(t_boundary: float, p: TemParams) -> float:
    return -p.sigma * t_boundary**2 / (2.0 * p.r_el)


def _discriminant(u: float, t_boundary: float, p: TemParams) -> float:
    ratio = p.r_el / p.sigma
    disc = t_boundary**2 + 2.0 * ratio * u
    if disc < 0:
        # inputs a few ulps below u_min are the double root, not saturation
        if disc >= -8.0 * np.finfo(float).eps * (t_boundary**2 + 2.0 * ratio * abs(u)):
            return 0.0
        raise SaturationError(u, feasible_input_min(t_boundary, p), t_boundary)
    return disc


def linearize_input(u: float, t_boundary: float, p: TemParams) -> float:
    """Current realizing the linearized input ``u`` (low-magnitude root).

    Written as ``2u / (T + sign(T) sqrt(T^2 + 2(R/sigma)u))``. For ``T > 0`` this
    is the root ``-(sigma/R)(T - sqrt(...))`` without cancellation at small ``u``;
    for ``T < 0`` the mirrored root is the smaller one.
    """
    root = math.sqrt(_discriminant(u, t_boundary, p))
    denom = t_boundary + math.copysign(root, t_boundary)
    if denom == 0.0:
        return 0.0
    return 2.0 * u / denom


def alternative_current(u: float, t_boundary: float, p: TemParams) -> float:
    """The other (high-magnitude) root of the input map."""
    root = math.sqrt(_discriminant(u, t_boundary, p))
    return -(t_boundary + math.copysign(root, t_boundary)) * p.sigma / p.r_el


def nondimensionalize(plant: PhysicalPlant, bounds: PlantBounds | None = None) -> PlantCoefficients:
    """Plant on ``x = zeta / L``: ``theta = theta_bar / L^2``, ``b_i = b_bar_i / L``."""
    L = plant.length
    theta = plant.theta_bar / L**2
    b0, b1 = plant.b_bar0 / L, plant.b_bar1 / L
    if bounds is None:
        bounds = PlantBounds(
            theta_m=theta, theta_M=theta, lam_m=plant.lam, lam_M=plant.lam,
            a_m0=plant.a0, a_M0=plant.a0, a_m1=plant.a1, a_M1=plant.a1,
            b_M0=b0, b_M1=b1, b_m0=b0, b_m1=b1,
        )
    return PlantCoefficients(theta=theta, lam=plant.lam, a0=plant.a0, a1=plant.a1,
                             b0=b0, b1=b1, bounds=bounds)


def error_coordinates(temperature: FieldState, profile, grid: SpatialGrid | None = None) -> FieldState:
    """Error field ``z(x) = T(xL) - T_e(xL)`` on the normalized grid.

    ``temperature`` holds samples at ``zeta_j = x_j L`` of a uniform grid; with a
    uniform grid of equal size in both coordinates the nodes map one to one.
    """
    target = temperature.grid if grid is None else grid
    if target.n != temperature.grid.n:
        raise InvalidGridError(f"grid mismatch: {temperature.grid.n} vs {target.n} nodes")
    zeta = target.nodes * profile.length
    z = temperature.z - profile(zeta)
    return FieldState(z=np.asarray(z, dtype=float), t=temperature.t, grid=target)
