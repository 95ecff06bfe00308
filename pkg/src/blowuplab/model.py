"""Problem definition for coupled radial heat equations with boundary flux.

Two fields u, v evolve under the radial heat operator on a ball of radius
R in dimension n. They are coupled only through the outward normal flux at
r = R, where each field's flux is a nonlinear function of the other field's
boundary value. Three flux families are supported:

    exp_power   flux(w) = exp(w**e)   (e > 1)
    power       flux(w) = w**e        (e > 1)
    exp_linear  flux(w) = exp(e * w)  (e > 0)

where e is the exponent attached to the driving field (p acts on v, q acts
on u). For exp_power and power the pair (p, q) defines rate exponents

    alpha = (p + 1) / (p*q - 1),   beta = (q + 1) / (p*q - 1)

which control the expected growth of boundary maxima near blow-up.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    DegenerateExponents,
    FluxOverflow,
    GridTooCoarse,
    InvalidInitialData,
)

# exp() overflows float64 near 709.78; stop well short of it
EXP_GUARD = 700.0

# relative tolerance for the discrete initial-data checks
TOL_IC = 1e-10

MIN_NODES = 16


class FluxFamily(enum.Enum):
    EXP_POWER = "exp_power"
    POWER = "power"
    EXP_LINEAR = "exp_linear"


@dataclass(frozen=True)
class QuadraticRadial:
    """Initial pair u0 = a_u + b_u r^2, v0 = a_v + b_v r^2.

    With nonnegative coefficients this family satisfies every structural
    condition exactly: the radial derivative is 2*b*r and the Laplacian is
    the constant 2*n*b.
    """

    a_u: float
    b_u: float
    a_v: float
    b_v: float

    def evaluate(self, grid: "RadialGrid") -> tuple[np.ndarray, np.ndarray]:
        r2 = grid.r * grid.r
        return self.a_u + self.b_u * r2, self.a_v + self.b_v * r2


@dataclass(frozen=True)
class Tabulated:
    """Initial pair given as nodal arrays matching the grid."""

    u0: np.ndarray
    v0: np.ndarray

    def evaluate(self, grid: "RadialGrid") -> tuple[np.ndarray, np.ndarray]:
        u0 = np.asarray(self.u0, dtype=float)
        v0 = np.asarray(self.v0, dtype=float)
        if u0.shape != (grid.N,) or v0.shape != (grid.N,):
            raise ValueError(
                f"tabulated data must have shape ({grid.N},), "
                f"got {u0.shape} and {v0.shape}"
            )
        return u0.copy(), v0.copy()


InitialDataSpec = Union[QuadraticRadial, Tabulated]


@dataclass(frozen=True)
class ProblemParams:
    p: float
    q: float
    R: float
    n: int
    flux: FluxFamily
    initial: InitialDataSpec

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if self.n not in (1, 2, 3):
            raise ValueError(f"n must be 1, 2 or 3, got {self.n}")
        if self.flux in (FluxFamily.EXP_POWER, FluxFamily.POWER):
            if self.p <= 1 or self.q <= 1:
                raise ValueError(
                    f"{self.flux.value} requires p > 1 and q > 1, "
                    f"got p={self.p}, q={self.q}"
                )
        else:
            if self.p <= 0 or self.q <= 0:
                raise ValueError(
                    f"exp_linear requires p > 0 and q > 0, "
                    f"got p={self.p}, q={self.q}"
                )


@dataclass(frozen=True)
class RadialGrid:
    """Uniform nodes r_i = i * dr on [0, R], dr = R / (N - 1)."""

    N: int
    R: float
    dr: float
    r: np.ndarray


@dataclass(frozen=True)
class FieldState:
    t: float
    u: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    worst_node: int
    worst_value: float


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    checks: tuple[ConditionCheck, ...]
    # one-sided boundary derivative minus the flux the other field induces;
    # informational, filled in only when params are supplied
    flux_mismatch_u: float | None = None
    flux_mismatch_v: float | None = None


def make_grid(R: float, N: int) -> RadialGrid:
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if N < MIN_NODES:
        raise GridTooCoarse(f"need at least {MIN_NODES} nodes, got {N}")
    dr = R / (N - 1)
    r = np.linspace(0.0, R, N)
    return RadialGrid(N=N, R=R, dr=dr, r=r)


def rate_exponents(p: float, q: float) -> tuple[float, float]:
    """Growth exponents (alpha, beta) for the exponent pair (p, q).

    alpha = (p+1)/(pq-1) governs the u series and beta = (q+1)/(pq-1) the
    v series. They satisfy p*beta = alpha + 1 and q*alpha = beta + 1.

    Raises
    ------
    DegenerateExponents
        If p*q <= 1, where no blow-up rate of this form exists.
    """
    if p * q <= 1.0:
        raise DegenerateExponents(f"p*q must exceed 1, got p={p}, q={q}")
    denom = p * q - 1.0
    return (p + 1.0) / denom, (q + 1.0) / denom


def boundary_flux(flux: FluxFamily, w: float, e: float) -> float:
    """Outward normal flux induced by a boundary value w of the driving field.

    Parameters
    ----------
    flux : FluxFamily
        Which nonlinearity to apply.
    w : float
        Boundary value of the driving field, must be nonnegative.
    e : float
        Exponent attached to the driving field (p or q).

    Raises
    ------
    FluxOverflow
        For the exponential families, when the exponent argument reaches
        the overflow guard. A correctly configured run stops on its
        threshold before this can happen.
    """
    if w < 0:
        raise ValueError(f"flux argument must be nonnegative, got {w}")
    if flux is FluxFamily.EXP_POWER:
        arg = w**e
        if arg >= EXP_GUARD:
            raise FluxOverflow(f"exponent argument {arg:.3g} >= {EXP_GUARD}")
        return float(np.exp(arg))
    if flux is FluxFamily.POWER:
        return float(w**e)
    if flux is FluxFamily.EXP_LINEAR:
        arg = e * w
        if arg >= EXP_GUARD:
            raise FluxOverflow(f"exponent argument {arg:.3g} >= {EXP_GUARD}")
        return float(np.exp(arg))
    raise ValueError(f"unknown flux family {flux!r}")


def _interior_laplacian(f: np.ndarray, grid: RadialGrid, n: int) -> np.ndarray:
    """Radial Laplacian at nodes 0 .. N-2 (no boundary closure needed)."""
    dr = grid.dr
    out = np.empty(grid.N - 1)
    # r = 0: symmetry gives Delta f = n * f'' with mirror node f[-1] = f[1]
    out[0] = 2.0 * n * (f[1] - f[0]) / dr**2
    second = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dr**2
    drift = (n - 1) / grid.r[1:-1] * (f[2:] - f[:-2]) / (2.0 * dr)
    out[1:] = second + drift
    return out


def validate_initial_data(
    spec: InitialDataSpec,
    grid: RadialGrid,
    n: int,
    params: ProblemParams | None = None,
) -> ValidationReport:
    """Check initial data against the structural conditions.

    Both fields must be nonnegative and not identically zero (violations
    raise), radially nondecreasing, and discretely subharmonic at the
    origin and interior nodes. The discrete checks pass within a relative
    tolerance so data satisfying the conditions exactly are not rejected
    for roundoff.

    When ``params`` is given, the mismatch between the one-sided boundary
    derivative of each field and the flux induced by the other field's
    boundary value is recorded in the report. The model does not require
    this compatibility; the mismatch only produces a transient.
    """
    u0, v0 = spec.evaluate(grid)
    checks = []
    for name, f in (("u0", u0), ("v0", v0)):
        if not np.all(np.isfinite(f)):
            raise InvalidInitialData(f"{name} contains non-finite values")
        if f.min() < 0:
            raise InvalidInitialData(
                f"{name} is negative at node {int(f.argmin())}"
            )
        if f.max() == 0.0:
            raise InvalidInitialData(f"{name} is identically zero")
        scale = 1.0 + float(f.max())

        diffs = np.diff(f)
        worst = int(diffs.argmin())
        checks.append(
            ConditionCheck(
                name=f"monotone_{name}",
                passed=bool(diffs[worst] >= -TOL_IC * scale),
                worst_node=worst,
                worst_value=float(diffs[worst]),
            )
        )

        lap = _interior_laplacian(f, grid, n)
        worst = int(lap.argmin())
        checks.append(
            ConditionCheck(
                name=f"subharmonic_{name}",
                passed=bool(lap[worst] >= -TOL_IC * scale / grid.dr**2),
                worst_node=worst,
                worst_value=float(lap[worst]),
            )
        )

    mismatch_u = mismatch_v = None
    if params is not None:
        du = (u0[-1] - u0[-2]) / grid.dr
        dv = (v0[-1] - v0[-2]) / grid.dr
        mismatch_u = abs(du - boundary_flux(params.flux, float(v0[-1]), params.p))
        mismatch_v = abs(dv - boundary_flux(params.flux, float(u0[-1]), params.q))

    return ValidationReport(
        passed=all(c.passed for c in checks),
        checks=tuple(checks),
        flux_mismatch_u=mismatch_u,
        flux_mismatch_v=mismatch_v,
    )
