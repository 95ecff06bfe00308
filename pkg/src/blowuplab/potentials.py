"""Heat kernel, sphere quadrature, single-layer potentials, jump relation.

The boundary-representation argument for the coupled system rests on two
reusable facts about the fundamental solution

    Gamma(x, t) = (4 pi t)^{-n/2} exp(-|x|^2 / (4 t)):

the normal derivative of a single-layer potential picks up -phi/2 when
the evaluation point crosses the layer, and surface integrals of
|x - y|^{-a} over the sphere stay bounded exactly for a < n - 1. Both
are verified here numerically rather than assumed.

Quadrature design. On the circle the nodes are midpoints of equal arcs.
On the sphere the polar direction is Gauss-Legendre in s = sin(theta/2)
against the exact surface element ds = 4 R^2 s ds dphi, with a uniform
azimuth. The s variable is chosen because the chord distance from the
north pole is exactly 2 R s: the integrand of the a = 1 surface bound
becomes a constant in s and the quadrature reproduces 4 pi R with no
discretization error at all, while the endpoint clustering of the
Legendre nodes resolves the near-pole region at scale R/m^2, which is
what the jump check needs when it walks toward the boundary. Neither
rule ever places a node on the pole itself, so the singular point of
the surface-bound integrand is excluded by construction.

Time integration of the layer grades geometric panels toward tau = t,
where (t - tau)^{-n/2} concentrates; four-point Gauss per panel then
keeps the product rule accurate down to the panel floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BadRadius, BadTime, BadWindow, ConfigError, ResolutionError

PANEL_NODES = 4
_GAUSS = np.polynomial.legendre.leggauss(PANEL_NODES)

# jump_check refuses approach distances closer to the layer than this
# multiple of the nearest quadrature node: below that the discrete sum
# is smooth across the boundary and the jump is invisible by
# construction, so values there would only pollute the extrapolation.
RESOLUTION_FACTOR = 2.0

CONVERGENCE_RTOL = 1e-3
SPHERE_TOL = 1e-9


def heat_kernel(x, t, n: int):
    """Fundamental solution (4 pi t)^{-n/2} exp(-|x|^2/(4t)).

    x is a single point (1-D array of length n) or a scalar standing
    for the distance |x|; t may be a scalar or an array.
    """
    if n < 1:
        raise ValueError(f"dimension n = {n} must be at least 1")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise BadTime("the kernel lives on t > 0")
    x = np.asarray(x, dtype=float)
    r2 = float(x * x) if x.ndim == 0 else float(x @ x)
    out = (4.0 * np.pi * t) ** (-n / 2.0) * np.exp(-r2 / (4.0 * t))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and positive weights summing to the surface measure of S_R."""

    n: int
    R: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.n not in (2, 3):
            raise ConfigError(f"surface quadrature supports n = 2 or 3, got {self.n}")
        if self.R <= 0:
            raise ConfigError(f"radius R = {self.R} must be positive")
        if self.nodes.ndim != 2 or self.nodes.shape != (self.weights.size, self.n):
            raise ConfigError(
                f"nodes shape {self.nodes.shape} does not match "
                f"{self.weights.size} weights in dimension {self.n}"
            )
        if np.any(self.weights <= 0):
            raise ConfigError("quadrature weights must be positive")
        radii = np.sqrt((self.nodes**2).sum(axis=1))
        if np.any(np.abs(radii - self.R) > SPHERE_TOL * self.R):
            raise ConfigError("quadrature nodes do not lie on the sphere")
        measure = self.surface_measure
        if abs(float(self.weights.sum()) - measure) > 1e-12 * measure:
            raise ConfigError(
                f"weights sum to {self.weights.sum()!r}, surface measure is {measure!r}"
            )

    @property
    def M_q(self) -> int:
        return int(self.weights.size)

    @property
    def surface_measure(self) -> float:
        return 2.0 * math.pi * self.R if self.n == 2 else 4.0 * math.pi * self.R**2


def circle_quadrature(R: float, m: int) -> SphereQuadrature:
    """Midpoint rule on m equal arcs; no node sits at angle zero."""
    if m < 4:
        raise ConfigError(f"m = {m} arcs is too few, need at least 4")
    angles = (np.arange(m) + 0.5) * (2.0 * math.pi / m)
    nodes = R * np.column_stack([np.cos(angles), np.sin(angles)])
    weights = np.full(m, 2.0 * math.pi * R / m)
    return SphereQuadrature(n=2, R=R, nodes=nodes, weights=weights)


def sphere_quadrature(R: float, m: int) -> SphereQuadrature:
    """Product rule with m Gauss-Legendre nodes in s = sin(theta/2) and
    2m uniform azimuths; 2 m^2 nodes total."""
    if m < 4:
        raise ConfigError(f"m = {m} polar nodes is too few, need at least 4")
    xg, wg = np.polynomial.legendre.leggauss(m)
    s = 0.5 * (xg + 1.0)
    ws = 0.5 * wg
    c = np.sqrt(1.0 - s**2)
    sin_theta = 2.0 * s * c
    cos_theta = 1.0 - 2.0 * s**2
    phi = np.arange(2 * m) * (math.pi / m)
    sin_phi, cos_phi = np.sin(phi), np.cos(phi)
    nodes = np.empty((m * 2 * m, 3))
    nodes[:, 0] = R * np.outer(sin_theta, cos_phi).ravel()
    nodes[:, 1] = R * np.outer(sin_theta, sin_phi).ravel()
    nodes[:, 2] = R * np.repeat(cos_theta, 2 * m)
    weights = np.repeat(4.0 * R**2 * s * ws, 2 * m) * (math.pi / m)
    return SphereQuadrature(n=3, R=R, nodes=nodes, weights=weights)


def _sigma_panels(window: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights for int_0^window d sigma, panels halving
    toward sigma = 0 and the last panel closing the gap to zero."""
    uppers = window * 0.5 ** np.arange(steps)
    lowers = np.append(uppers[1:], 0.0)
    mid = 0.5 * (uppers + lowers)
    half = 0.5 * (uppers - lowers)
    xg, wg = _GAUSS
    sigma = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    omega = (half[:, None] * wg[None, :]).ravel()
    return sigma, omega


def _inside(x: np.ndarray, quad: SphereQuadrature) -> None:
    if x.shape != (quad.n,):
        raise BadRadius(f"point shape {x.shape} does not match dimension {quad.n}")
    if float(x @ x) > (quad.R * (1.0 + SPHERE_TOL)) ** 2:
        raise BadRadius(f"|x| = {math.sqrt(float(x @ x)):.6g} is outside the ball")


def _density_block(
    phi: Callable, quad: SphereQuadrature, t: float, sigma: np.ndarray
) -> np.ndarray:
    block = np.empty((quad.M_q, sigma.size))
    for g, tau in enumerate(t - sigma):
        block[:, g] = phi(quad.nodes, tau)
    return block


def single_layer(
    x,
    t: float,
    phi: Callable,
    t1: float,
    quad: SphereQuadrature,
    steps: int = 48,
) -> float:
    """Single-layer heat potential over S_R x [t1, t] evaluated at (x, t).

    phi(points, tau) must accept an (M, n) node block and a scalar time
    and return a scalar or an (M,) array. Evaluation exactly on a
    quadrature node makes the kernel singular and returns inf; the
    nodes never include the poles, so polar-axis evaluation is safe.
    """
    if t1 >= t:
        raise BadWindow(f"need t1 < t, got t1 = {t1}, t = {t}")
    if steps < 4:
        raise ValueError(f"steps = {steps} is too few panels, need at least 4")
    x = np.asarray(x, dtype=float)
    _inside(x, quad)
    d2 = ((quad.nodes - x) ** 2).sum(axis=1)
    sigma, omega = _sigma_panels(t - t1, steps)
    kernel = (4.0 * np.pi * sigma) ** (-quad.n / 2.0) * np.exp(
        -d2[:, None] / (4.0 * sigma[None, :])
    )
    density = _density_block(phi, quad, t, sigma)
    return float(quad.weights @ (kernel * density) @ omega)


def _boundary_flux_direct(
    x0: np.ndarray,
    eta: np.ndarray,
    phi: Callable,
    t: float,
    t1: float,
    quad: SphereQuadrature,
    steps: int,
) -> float:
    """Normal derivative of the layer evaluated directly at x0 on S_R.

    Differentiating the kernel analytically leaves an integrand that
    behaves like 1/|x0 - y| near x0, precisely the borderline the polar
    rule integrates exactly, so this converges where one-sided finite
    differences at the boundary stall.
    """
    vec = x0 - quad.nodes
    d2 = (vec**2).sum(axis=1)
    proj = vec @ eta
    sigma, omega = _sigma_panels(t - t1, steps)
    kernel = (
        (4.0 * np.pi * sigma) ** (-quad.n / 2.0)
        * np.exp(-d2[:, None] / (4.0 * sigma[None, :]))
        * (-proj[:, None] / (2.0 * sigma[None, :]))
    )
    density = _density_block(phi, quad, t, sigma)
    return float(quad.weights @ (kernel * density) @ omega)


@dataclass(frozen=True)
class JumpReport:
    """Boundary normal derivative minus its interior limit, vs -phi/2."""

    jump: float
    target: float
    boundary_term: float
    interior_limit: float
    distances: np.ndarray
    derivatives: np.ndarray
    resolution: float
    passed: bool


def jump_check(
    x0,
    phi: Callable,
    t: float,
    quad: SphereQuadrature,
    approach_distances: Sequence[float],
    t1: float = 0.0,
    steps: int = 48,
    tol_jump: float = 0.05,
) -> JumpReport:
    """Measure the -phi/2 jump of the single layer's normal derivative.

    Crossing the layer from inside, the normal derivative's boundary
    principal value sits half a density below its interior limit. The
    check walks x = x0 - d eta inward along the outward normal eta,
    takes a centered difference of the potential at each d (step d/8),
    fits a polynomial in d to extrapolate the interior limit, and
    subtracts that from the direct boundary quadrature; the difference
    should be -phi(x0, t)/2 whatever R, t, and the window are.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (quad.n,):
        raise BadRadius(f"point shape {x0.shape} does not match dimension {quad.n}")
    r0 = math.sqrt(float(x0 @ x0))
    if abs(r0 - quad.R) > SPHERE_TOL * quad.R:
        raise BadRadius(f"|x0| = {r0:.6g} is not on the sphere of radius {quad.R}")
    d = np.asarray(approach_distances, dtype=float)
    if d.size == 0 or np.any(d <= 0) or np.any(np.diff(d) >= 0):
        raise ValueError("approach distances must be positive and strictly decreasing")
    near = math.sqrt(float(((quad.nodes - x0) ** 2).sum(axis=1).min()))
    resolution = RESOLUTION_FACTOR * near
    if d.min() < resolution:
        raise ResolutionError(
            f"approach distance {d.min():.3g} is below the quadrature "
            f"resolution scale {resolution:.3g}; refine the quadrature "
            f"or stop farther out"
        )
    eta = x0 / r0

    def u_at(dist: float) -> float:
        return single_layer(x0 - dist * eta, t, phi, t1, quad, steps=steps)

    derivs = np.empty(d.size)
    for i, di in enumerate(d):
        h = di / 8.0
        derivs[i] = (u_at(di - h) - u_at(di + h)) / (2.0 * h)

    boundary = _boundary_flux_direct(x0, eta, phi, t, t1, quad, steps)
    degree = min(2, d.size - 1)
    interior_limit = float(np.polynomial.polynomial.polyfit(d, derivs, degree)[0])
    jump = boundary - interior_limit

    phi0 = float(np.asarray(phi(x0[None, :], t)).reshape(-1)[0])
    target = -0.5 * phi0
    return JumpReport(
        jump=jump,
        target=target,
        boundary_term=boundary,
        interior_limit=interior_limit,
        distances=d,
        derivatives=derivs,
        resolution=resolution,
        passed=bool(abs(jump - target) <= tol_jump),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Surface-bound values over a refinement sequence of quadratures."""

    values: np.ndarray
    rel_changes: np.ndarray
    converged: bool
    diverging: bool
    limit: float


def surface_integral_bound(
    x, a: float, quads: Sequence[SphereQuadrature]
) -> ConvergenceReport:
    """Evaluate int_{S_R} |x - y|^{-a} ds_y over refining quadratures.

    Bounded uniformly exactly for a < n - 1 even with x on the sphere;
    at and above that threshold the refinements grow without
    saturating. converged means the last two refinements agree to
    CONVERGENCE_RTOL; diverging means the values only ever grew and the
    last pair still disagrees.
    """
    if a < 0:
        raise ValueError(f"exponent a = {a} must be nonnegative")
    if len(quads) < 2:
        raise ValueError("need at least two refinement levels")
    n, R = quads[0].n, quads[0].R
    if any(q.n != n or q.R != R for q in quads):
        raise ValueError("refinement sequence mixes dimensions or radii")
    x = np.asarray(x, dtype=float)
    _inside(x, quads[0])

    values = np.empty(len(quads))
    for k, quad in enumerate(quads):
        dist = np.sqrt(((quad.nodes - x) ** 2).sum(axis=1))
        values[k] = float(quad.weights @ dist**-a)
    rel = np.abs(np.diff(values)) / np.maximum(np.abs(values[1:]), 1e-300)
    converged = bool(rel[-1] < CONVERGENCE_RTOL)
    diverging = bool(not converged and np.all(np.diff(values) > 0))
    return ConvergenceReport(
        values=values,
        rel_changes=rel,
        converged=converged,
        diverging=diverging,
        limit=float(values[-1]) if converged else float("nan"),
    )
