"""Explicit forward-Euler integration of the coupled radial system.

Space is discretized on the uniform radial grid with second-order centered
stencils. At r = 0 the symmetry condition turns the operator into
2n(f_1 - f_0)/dr^2; at r = R a ghost node enforces the Neumann coupling to
second order. Time stepping is forward Euler with an adaptive step:

    dt = min( cfl * dr^2,  growth_cap * (1 + max(u, v)) / max|rates| )

The first term is the diffusion limit, the second caps the relative growth
of the fields per step so the runaway near blow-up is traced rather than
jumped over. Runs stop on one of three conditions: the flux exponent
argument at the boundary exceeds u_stop (the expected ending for blowing-up
solutions), simulated time reaches t_end, or dt underflows.

Stability note: the explicit step is stable for cfl below 2*dr^2/rho(n)
where rho is the spectral radius of the discrete operator. Measured bounds
are cfl < 0.50, 0.41, 0.33 for n = 1, 2, 3. The default cfl of 0.4 is fine
for n <= 2; pass something below 1/3 for n = 3.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    FluxOverflow,
    NumericalBlowupGuard,
    StepUnderflow,
)
from .model import (
    EXP_GUARD,
    FieldState,
    FluxFamily,
    InvalidInitialData,
    ProblemParams,
    RadialGrid,
    boundary_flux,
    make_grid,
    validate_initial_data,
)

log = logging.getLogger(__name__)

# dt below this multiple of dr^2 means the run cannot advance
UNDERFLOW_FACTOR = 1e-16

# measured stability limits for the explicit step, by dimension
STABLE_CFL = {1: 0.50, 2: 0.41, 3: 1.0 / 3.0}


class StopReason(enum.Enum):
    BLOWUP_THRESHOLD = "blowup_threshold"
    TIME_LIMIT = "time_limit"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class SolverConfig:
    N: int = 201
    cfl: float = 0.4
    growth_cap: float = 0.1
    u_stop: float = 600.0
    t_end: float | None = None
    record_every: int = 10
    interior_radius: float = 0.5
    # full field snapshots every k-th recorded sample; 0 disables snapshots
    state_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.5:
            raise ValueError(f"cfl must lie in (0, 0.5], got {self.cfl}")
        if not 0.0 < self.growth_cap <= 0.5:
            raise ValueError(
                f"growth_cap must lie in (0, 0.5], got {self.growth_cap}"
            )
        if not 0.0 < self.u_stop < EXP_GUARD:
            raise ValueError(
                f"u_stop must lie in (0, {EXP_GUARD}), got {self.u_stop}"
            )
        if self.t_end is not None and self.t_end <= 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")
        if self.state_every < 0:
            raise ValueError("state_every must be nonnegative")
        if self.interior_radius <= 0:
            raise ValueError("interior_radius must be positive")


@dataclass(frozen=True)
class StopInfo:
    reason: StopReason
    t_stop: float
    last_state: FieldState
    # flux exponent arguments at the stop, for simultaneity checks
    arg_u: float
    arg_v: float
    detail: str = ""


@dataclass(frozen=True)
class Trajectory:
    """Recorded scalar series of a run plus sparse field snapshots.

    M is the running max of u (attained at the boundary for growing
    solutions) and Nmax the same for v. flux_u is the flux induced by
    u's boundary value (it drives v) and flux_v the one induced by v.
    """

    t: np.ndarray
    dt: np.ndarray
    M: np.ndarray
    Nmax: np.ndarray
    argmax_u: np.ndarray
    argmax_v: np.ndarray
    sup_u_interior: np.ndarray
    sup_v_interior: np.ndarray
    flux_u: np.ndarray
    flux_v: np.ndarray
    states: tuple[FieldState, ...]
    state_samples: np.ndarray
    stop: StopInfo
    steps: int
    config: SolverConfig

    def __len__(self) -> int:
        return len(self.t)


COLUMNS = (
    "t",
    "dt",
    "M",
    "Nmax",
    "argmax_u",
    "argmax_v",
    "sup_u_interior",
    "sup_v_interior",
    "flux_u",
    "flux_v",
)


def radial_laplacian(
    field: np.ndarray, grid: RadialGrid, n: int, ghost: float
) -> np.ndarray:
    """Discrete radial Laplacian on the full grid.

    Parameters
    ----------
    field : ndarray
        Nodal values, length grid.N.
    ghost : float
        Value at the ghost node r = R + dr; the caller fixes it from the
        boundary condition (see apply_neumann). Centered differences with
        the ghost make the boundary node second order.
    """
    dr = grid.dr
    f = field
    out = np.empty(grid.N)
    out[0] = 2.0 * n * (f[1] - f[0]) / dr**2
    second = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dr**2
    drift = (n - 1) / grid.r[1:-1] * (f[2:] - f[:-2]) / (2.0 * dr)
    out[1:-1] = second + drift
    out[-1] = (ghost - 2.0 * f[-1] + f[-2]) / dr**2 + (n - 1) / grid.R * (
        ghost - f[-2]
    ) / (2.0 * dr)
    return out


def apply_neumann(
    state: FieldState, params: ProblemParams, grid: RadialGrid
) -> tuple[float, float]:
    """Ghost values closing the coupled Neumann conditions.

    u's outward derivative equals the flux induced by v at the boundary
    and vice versa: (ghost - f[N-2]) / (2 dr) = flux.
    """
    fu = boundary_flux(params.flux, float(state.v[-1]), params.p)
    fv = boundary_flux(params.flux, float(state.u[-1]), params.q)
    ghost_u = float(state.u[-2]) + 2.0 * grid.dr * fu
    ghost_v = float(state.v[-2]) + 2.0 * grid.dr * fv
    return ghost_u, ghost_v


def flux_exponent_args(
    params: ProblemParams, u_bdry: float, v_bdry: float
) -> tuple[float, float]:
    """Exponent arguments (from u, from v) that the stop criterion watches.

    For the exponential families these are the arguments of exp() in the
    two fluxes; the run must stop while they are far below the overflow
    guard. The power family has no exponential but the same quantities
    serve as a scale-free stop measure.
    """
    if params.flux is FluxFamily.EXP_LINEAR:
        return params.q * u_bdry, params.p * v_bdry
    return u_bdry**params.q, v_bdry**params.p


def adapt_dt(
    state: FieldState,
    config: SolverConfig,
    rates: tuple[np.ndarray, np.ndarray],
    grid: RadialGrid,
) -> float:
    """Adaptive step for the current right-hand sides.

    Raises
    ------
    StepUnderflow
        When the step falls below UNDERFLOW_FACTOR * dr^2 and the run
        cannot advance in float64.
    """
    dr2 = grid.dr**2
    dt = config.cfl * dr2
    max_rate = max(
        float(np.abs(rates[0]).max()), float(np.abs(rates[1]).max())
    )
    if max_rate > 0.0:
        peak = max(float(state.u.max()), float(state.v.max()))
        dt = min(dt, config.growth_cap * (1.0 + peak) / max_rate)
    if dt < UNDERFLOW_FACTOR * dr2:
        raise StepUnderflow(
            f"dt = {dt:.3e} below {UNDERFLOW_FACTOR:g} * dr^2 at t = {state.t:.6g}"
        )
    return dt


def step(
    state: FieldState,
    params: ProblemParams,
    grid: RadialGrid,
    config: SolverConfig,
) -> FieldState:
    """One forward-Euler update with the ghost-node Neumann closure."""
    ghost_u, ghost_v = apply_neumann(state, params, grid)
    rate_u = radial_laplacian(state.u, grid, params.n, ghost_u)
    rate_v = radial_laplacian(state.v, grid, params.n, ghost_v)
    dt = adapt_dt(state, config, (rate_u, rate_v), grid)
    if config.t_end is not None:
        dt = min(dt, config.t_end - state.t)
    u = state.u + dt * rate_u
    v = state.v + dt * rate_v
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise NumericalBlowupGuard(f"non-finite field values at t = {state.t:.6g}")
    return FieldState(t=state.t + dt, u=u, v=v)


def _flux_for_record(params: ProblemParams, w: float, e: float) -> float:
    # recording only: past the stop the argument may exceed the guard,
    # in which case inf is the honest value to write
    if params.flux is FluxFamily.POWER:
        return float(w**e)
    arg = e * w if params.flux is FluxFamily.EXP_LINEAR else w**e
    with np.errstate(over="ignore"):
        return float(np.exp(arg))


class _Recorder:
    def __init__(self, params: ProblemParams, grid: RadialGrid, config: SolverConfig):
        self.params = params
        self.config = config
        # nodes with r <= interior_radius (tiny slack for exact node hits)
        self.n_interior = int(
            np.searchsorted(grid.r, config.interior_radius * (1.0 + 1e-12), side="right")
        )
        self.rows: list[tuple] = []
        self.states: list[FieldState] = []
        self.state_samples: list[int] = []
        self.last_step_recorded = -1

    def record(self, state: FieldState, dt: float, step_index: int) -> None:
        if step_index == self.last_step_recorded:
            return
        self.last_step_recorded = step_index
        p = self.params
        u, v = state.u, state.v
        k = self.n_interior
        row = (
            state.t,
            dt,
            float(u.max()),
            float(v.max()),
            int(u.argmax()),
            int(v.argmax()),
            float(u[:k].max()),
            float(v[:k].max()),
            _flux_for_record(p, float(u[-1]), p.q),
            _flux_for_record(p, float(v[-1]), p.p),
        )
        self.rows.append(row)
        sample_index = len(self.rows) - 1
        if self.config.state_every and sample_index % self.config.state_every == 0:
            self.states.append(state)
            self.state_samples.append(sample_index)

    def force_state(self, state: FieldState) -> None:
        if not self.config.state_every:
            return
        last_sample = len(self.rows) - 1
        if self.state_samples and self.state_samples[-1] == last_sample:
            return
        self.states.append(state)
        self.state_samples.append(last_sample)

    def build(self, stop: StopInfo, steps: int) -> Trajectory:
        cols = list(zip(*self.rows))
        return Trajectory(
            t=np.array(cols[0], dtype=float),
            dt=np.array(cols[1], dtype=float),
            M=np.array(cols[2], dtype=float),
            Nmax=np.array(cols[3], dtype=float),
            argmax_u=np.array(cols[4], dtype=int),
            argmax_v=np.array(cols[5], dtype=int),
            sup_u_interior=np.array(cols[6], dtype=float),
            sup_v_interior=np.array(cols[7], dtype=float),
            flux_u=np.array(cols[8], dtype=float),
            flux_v=np.array(cols[9], dtype=float),
            states=tuple(self.states),
            state_samples=np.array(self.state_samples, dtype=int),
            stop=stop,
            steps=steps,
            config=self.config,
        )


def run(params: ProblemParams, config: SolverConfig) -> Trajectory:
    """Integrate from the configured initial data until a stop condition.

    The trajectory records every record_every-th step plus the initial and
    final states. Identical inputs produce bitwise identical trajectories.

    Raises
    ------
    InvalidInitialData
        If the initial data fail validation.
    FluxOverflow
        If u_stop was set so close to the overflow guard that a single
        step overshot it.
    """
    grid = make_grid(params.R, config.N)
    if config.interior_radius >= params.R:
        raise ValueError(
            f"interior_radius must be below R = {params.R}, "
            f"got {config.interior_radius}"
        )
    if config.cfl > STABLE_CFL[params.n] + 1e-12:
        log.warning(
            "cfl = %g exceeds the measured stability limit %g for n = %d",
            config.cfl,
            STABLE_CFL[params.n],
            params.n,
        )
    report = validate_initial_data(params.initial, grid, params.n, params)
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise InvalidInitialData(f"initial data failed: {', '.join(failed)}")

    u0, v0 = params.initial.evaluate(grid)
    state = FieldState(t=0.0, u=u0, v=v0)
    rec = _Recorder(params, grid, config)
    rec.record(state, 0.0, step_index=0)

    steps = 0
    last_dt = 0.0
    while True:
        if config.t_end is not None and state.t >= config.t_end:
            stop = _stop(StopReason.TIME_LIMIT, state, params)
            break
        try:
            new = step(state, params, grid, config)
        except StepUnderflow as exc:
            stop = _stop(StopReason.STEP_UNDERFLOW, state, params, detail=str(exc))
            break
        except NumericalBlowupGuard as exc:
            # non-finite values mean the discrete solution left float range;
            # report it as the blow-up ending it is, with the diagnostic
            stop = _stop(
                StopReason.BLOWUP_THRESHOLD, state, params, detail=str(exc)
            )
            break
        steps += 1
        last_dt = new.t - state.t
        state = new
        arg_u, arg_v = flux_exponent_args(
            params, float(state.u[-1]), float(state.v[-1])
        )
        if max(arg_u, arg_v) > config.u_stop:
            stop = _stop(StopReason.BLOWUP_THRESHOLD, state, params)
            break
        if steps % config.record_every == 0:
            rec.record(state, last_dt, step_index=steps)

    # the stop state is always the final sample (record() dedupes if the
    # loop already wrote it)
    rec.record(stop.last_state, last_dt, step_index=steps)
    rec.force_state(stop.last_state)
    return rec.build(stop, steps)


def _stop(
    reason: StopReason,
    state: FieldState,
    params: ProblemParams,
    detail: str = "",
) -> StopInfo:
    arg_u, arg_v = flux_exponent_args(
        params, float(state.u[-1]), float(state.v[-1])
    )
    return StopInfo(
        reason=reason,
        t_stop=state.t,
        last_state=state,
        arg_u=arg_u,
        arg_v=arg_v,
        detail=detail,
    )
