"""Finite-difference discretization of a 1D reaction-diffusion plant with Robin inputs.

The plant on ``x in [0, 1]`` is::

    z_t = [theta(x) z_x]_x + lam(x) z
    -b0 z_x(0) + a0 z(0) = u0 + psi0
     b1 z_x(1) + a1 z(1) = u1 + psi1

Space is discretized with conservative second-order differences (half-node
averages of ``theta``); the Robin conditions are eliminated through ghost nodes,
which leaves a half cell at each end. The result is a tridiagonal matrix ``A``
plus two input-injection vectors, so that ``dz/dt = A z + g0 w0 + g1 w1`` with
``w_i = u_i + psi_i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
import scipy.linalg

__all__ = [
    "InvalidGridError",
    "AssemblyError",
    "NumericalError",
    "StepSizeError",
    "SpatialGrid",
    "PlantBounds",
    "PlantCoefficients",
    "FieldState",
    "BoundaryInput",
    "DiscreteOperator",
    "Stepper",
    "SCHEMES",
    "build_grid",
    "assemble_operator",
    "step",
    "l2_norm",
    "trapezoid",
    "boundary_values",
]

SCHEMES = ("explicit_euler", "crank_nicolson", "implicit_euler")

Coefficient = Union[float, Callable[[np.ndarray], np.ndarray], np.ndarray]


class InvalidGridError(ValueError):
    pass


class AssemblyError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


class StepSizeError(ValueError):
    pass


@dataclass(frozen=True)
class SpatialGrid:
    n: int
    nodes: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    def mirrored(self, values: np.ndarray) -> np.ndarray:
        """Values reflected about ``x = 1/2``."""
        return np.asarray(values)[::-1]


def build_grid(n: int) -> SpatialGrid:
    """Uniform grid with ``n`` nodes on ``[0, 1]``."""
    if int(n) != n or n < 3:
        raise InvalidGridError(f"need an integer node count >= 3, got {n!r}")
    n = int(n)
    nodes = np.linspace(0.0, 1.0, n)
    nodes.setflags(write=False)
    return SpatialGrid(n=n, nodes=nodes)


@dataclass(frozen=True)
class PlantBounds:
    """Interval bounds on the (unknown) plant parameters.

    ``b_m0``/``b_m1`` are lower bounds on the gradient coefficients; they enter
    the ultimate bound of the bidirectional law.
    """

    theta_m: float
    theta_M: float
    lam_m: float
    lam_M: float
    a_m0: float
    a_M0: float
    a_m1: float
    a_M1: float
    b_M0: float
    b_M1: float
    b_m0: float
    b_m1: float

    @property
    def lam_bar_M(self) -> float:
        return max(0.0, self.lam_M)

    def widened(self, rel: float) -> "PlantBounds":
        """Bounds enlarged by a relative margin ``rel`` on each side."""
        lo, hi = 1.0 - rel, 1.0 + rel
        return PlantBounds(
            theta_m=self.theta_m * lo,
            theta_M=self.theta_M * hi,
            lam_m=self.lam_m - rel * abs(self.lam_m),
            lam_M=self.lam_M + rel * abs(self.lam_M),
            a_m0=self.a_m0 - rel * abs(self.a_m0),
            a_M0=self.a_M0 + rel * abs(self.a_M0),
            a_m1=self.a_m1 - rel * abs(self.a_m1),
            a_M1=self.a_M1 + rel * abs(self.a_M1),
            b_M0=self.b_M0 * hi,
            b_M1=self.b_M1 * hi,
            b_m0=self.b_m0 * lo,
            b_m1=self.b_m1 * lo,
        )


def _on_grid(coef: Coefficient, x: np.ndarray) -> np.ndarray:
    if callable(coef):
        out = np.asarray(coef(x), dtype=float)
    else:
        out = np.asarray(coef, dtype=float)
    return np.broadcast_to(out, x.shape).astype(float)


@dataclass(frozen=True)
class PlantCoefficients:
    """Normalized plant data: ``theta``, ``lam`` (scalars, arrays or callables of x)
    and the Robin constants ``a_i``, ``b_i``."""

    theta: Coefficient
    lam: Coefficient
    a0: float
    a1: float
    b0: float
    b1: float
    bounds: PlantBounds | None = None

    def theta_on(self, x: np.ndarray) -> np.ndarray:
        return _on_grid(self.theta, np.asarray(x, dtype=float))

    def lam_on(self, x: np.ndarray) -> np.ndarray:
        return _on_grid(self.lam, np.asarray(x, dtype=float))

    def theta_at(self, x: float) -> float:
        return float(self.theta_on(np.array([x]))[0])

    def lam_at(self, x: float) -> float:
        return float(self.lam_on(np.array([x]))[0])

    def point_bounds(self, grid: SpatialGrid) -> PlantBounds:
        """Tightest bounds consistent with the sampled coefficients."""
        th = self.theta_on(grid.nodes)
        lm = self.lam_on(grid.nodes)
        return PlantBounds(
            theta_m=float(th.min()), theta_M=float(th.max()),
            lam_m=float(lm.min()), lam_M=float(lm.max()),
            a_m0=self.a0, a_M0=self.a0, a_m1=self.a1, a_M1=self.a1,
            b_M0=self.b0, b_M1=self.b1, b_m0=self.b0, b_m1=self.b1,
        )

    def resolved_bounds(self, grid: SpatialGrid) -> PlantBounds:
        return self.bounds if self.bounds is not None else self.point_bounds(grid)

    def check(self, grid: SpatialGrid) -> None:
        """Raise ``AssemblyError`` if the coefficients break the plant assumptions."""
        th = self.theta_on(grid.nodes)
        lm = self.lam_on(grid.nodes)
        scalars = np.array([self.a0, self.a1, self.b0, self.b1], dtype=float)
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(lm)) and np.all(np.isfinite(scalars))):
            raise AssemblyError("non-finite plant coefficient")
        if np.any(th <= 0.0):
            raise AssemblyError("theta must be strictly positive")
        if self.b0 <= 0.0 or self.b1 <= 0.0:
            raise AssemblyError("Robin gradient coefficients b_i must be positive")
        b = self.resolved_bounds(grid)
        if th.min() < b.theta_m * (1 - 1e-12) or th.max() > b.theta_M * (1 + 1e-12):
            raise AssemblyError("theta leaves its declared bounds")
        if lm.min() < b.lam_m - 1e-12 * abs(b.lam_m) or lm.max() > b.lam_M + 1e-12 * abs(b.lam_M):
            raise AssemblyError("lam leaves its declared bounds")
        if not b.lam_M < np.pi ** 2 / 4 * b.theta_m:
            raise AssemblyError("lam_M must be below (pi^2/4) theta_m")


@dataclass(frozen=True)
class FieldState:
    z: np.ndarray
    t: float
    grid: SpatialGrid = field(repr=False)

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if z.shape != (self.grid.n,):
            raise InvalidGridError(f"field has shape {z.shape}, grid has {self.grid.n} nodes")
        if not np.all(np.isfinite(z)):
            raise NumericalError("non-finite field entries")
        object.__setattr__(self, "z", z)


@dataclass(frozen=True)
class BoundaryInput:
    u0: float = 0.0
    u1: float = 0.0
    psi0: float = 0.0
    psi1: float = 0.0

    @property
    def w0(self) -> float:
        return self.u0 + self.psi0

    @property
    def w1(self) -> float:
        return self.u1 + self.psi1


@dataclass(frozen=True)
class DiscreteOperator:
    """Tridiagonal semi-discrete operator ``dz/dt = A z + g0 w0 + g1 w1``.

    ``lower[j]`` multiplies ``z[j-1]`` in row ``j`` (``lower[0]`` unused), ``upper[j]``
    multiplies ``z[j+1]`` (``upper[-1]`` unused). The injection vectors are zero
    except at the first and last node, stored as the scalars ``g0`` and ``g1``.
    """

    grid: SpatialGrid = field(repr=False)
    lower: np.ndarray = field(repr=False)
    diag: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    g0: float
    g1: float
    theta_max: float

    def matvec(self, z: np.ndarray) -> np.ndarray:
        out = self.diag * z
        out[1:] += self.lower[1:] * z[:-1]
        out[:-1] += self.upper[:-1] * z[1:]
        return out

    def injection(self, bc: BoundaryInput) -> np.ndarray:
        r = np.zeros(self.grid.n)
        r[0] = self.g0 * bc.w0
        r[-1] = self.g1 * bc.w1
        return r

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)


def assemble_operator(grid: SpatialGrid, coeffs: PlantCoefficients) -> DiscreteOperator:
    """Assemble the conservative tridiagonal operator for ``coeffs`` on ``grid``."""
    coeffs.check(grid)
    h = grid.h
    th = coeffs.theta_on(grid.nodes)
    lm = coeffs.lam_on(grid.nodes)
    th_half = 0.5 * (th[:-1] + th[1:])  # theta_{j+1/2}, j = 0..n-2

    n = grid.n
    lower = np.zeros(n)
    upper = np.zeros(n)
    diag = lm.copy()

    lower[1:-1] = th_half[:-1] / h**2
    upper[1:-1] = th_half[1:] / h**2
    diag[1:-1] -= (th_half[:-1] + th_half[1:]) / h**2

    # half cells at the ends, flux theta*z_x replaced from the Robin relation
    upper[0] = 2.0 * th_half[0] / h**2
    diag[0] -= 2.0 * th_half[0] / h**2 + 2.0 * th[0] * coeffs.a0 / (coeffs.b0 * h)
    lower[-1] = 2.0 * th_half[-1] / h**2
    diag[-1] -= 2.0 * th_half[-1] / h**2 + 2.0 * th[-1] * coeffs.a1 / (coeffs.b1 * h)
    g0 = 2.0 * th[0] / (coeffs.b0 * h)
    g1 = 2.0 * th[-1] / (coeffs.b1 * h)

    for arr in (lower, diag, upper):
        if not np.all(np.isfinite(arr)):
            raise AssemblyError("non-finite operator entry")
        arr.setflags(write=False)
    bounds = coeffs.resolved_bounds(grid)
    return DiscreteOperator(grid=grid, lower=lower, diag=diag, upper=upper,
                            g0=float(g0), g1=float(g1),
                            theta_max=float(max(bounds.theta_M, th.max())))


class Stepper:
    """Time integrator with the system matrices for a fixed ``dt`` prepared once.

    Repeated calls to :meth:`advance` reuse the banded left-hand side, which is
    what the closed-loop driver needs for tens of thousands of substeps.
    """

    def __init__(self, op: DiscreteOperator, dt: float, scheme: str = "crank_nicolson"):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
        if not dt > 0:
            raise StepSizeError("dt must be positive")
        if scheme == "explicit_euler":
            limit = op.grid.h**2 / (2.0 * op.theta_max)
            if dt > limit:
                raise StepSizeError(f"explicit Euler needs dt <= {limit:.3e}, got {dt:.3e}")
        self.op = op
        self.dt = float(dt)
        self.scheme = scheme
        if scheme == "explicit_euler":
            self._ab = None
            self._rhs_weight = 1.0
        else:
            theta_w = 0.5 if scheme == "crank_nicolson" else 1.0
            self._rhs_weight = 1.0 - theta_w
            ab = np.zeros((3, op.grid.n))
            ab[0, 1:] = -theta_w * dt * op.upper[:-1]
            ab[1, :] = 1.0 - theta_w * dt * op.diag
            ab[2, :-1] = -theta_w * dt * op.lower[1:]
            self._ab = ab

    def advance(self, z: np.ndarray, bc: BoundaryInput, bc_next: BoundaryInput | None = None) -> np.ndarray:
        op, dt = self.op, self.dt
        if self.scheme == "explicit_euler":
            return z + dt * (op.matvec(z) + op.injection(bc))
        if self.scheme == "crank_nicolson":
            nxt = bc if bc_next is None else bc_next
            w0 = 0.5 * (bc.w0 + nxt.w0)
            w1 = 0.5 * (bc.w1 + nxt.w1)
            rhs = z + self._rhs_weight * dt * op.matvec(z)
        else:
            w0, w1 = bc.w0, bc.w1
            rhs = z.copy()
        rhs[0] += dt * op.g0 * w0
        rhs[-1] += dt * op.g1 * w1
        try:
            out = scipy.linalg.solve_banded((1, 1), self._ab, rhs,
                                            overwrite_b=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"tridiagonal solve failed: {exc}") from exc
        if not np.all(np.isfinite(out)):
            raise NumericalError("tridiagonal solve produced non-finite values")
        return out


def step(state: FieldState, op: DiscreteOperator, bc: BoundaryInput, dt: float,
         scheme: str = "crank_nicolson", bc_next: BoundaryInput | None = None) -> FieldState:
    """Advance ``state`` by one step of size ``dt``.

    Crank-Nicolson averages the inputs of ``bc`` and ``bc_next`` (``bc`` is used at
    both ends when ``bc_next`` is omitted); the Euler schemes use ``bc`` only.
    """
    z = Stepper(op, dt, scheme).advance(state.z, bc, bc_next)
    return FieldState(z=z, t=state.t + dt, grid=state.grid)


def trapezoid(values: np.ndarray, h: float) -> float:
    v = np.asarray(values, dtype=float)
    return float(h * (v.sum() - 0.5 * (v[0] + v[-1])))


def l2_norm(state: FieldState) -> float:
    """Trapezoidal approximation of the L2(0, 1) norm."""
    return float(np.sqrt(trapezoid(state.z**2, state.grid.h)))


def boundary_values(state: FieldState) -> tuple[float, float]:
    return float(state.z[0]), float(state.z[-1])
