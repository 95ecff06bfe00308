"""Blow-up time estimation and rate diagnostics on recorded trajectories.

The growth law being checked has the form y(t) = log C - s * log(T - t)
where y is a family-dependent transform of the boundary modulus:

    exp_power   y = M        s = alpha/2   (e^M ~ C (T-t)^{-alpha/2})
    power       y = log M    s = alpha/2   (M ~ C (T-t)^{-alpha/2})
    exp_linear  y = q M      s = 1/2       (e^{qM} ~ C (T-t)^{-1/2})

and symmetrically for the second field with beta. Given T the model is
linear in log C, so the fit is a bounded one-dimensional search over
log(T - t_stop) with the intercepts eliminated exactly. Both fields are
fitted simultaneously with a shared T.

The fit window is the largest suffix of the samples on which M strictly
increases, and it must span a growth of at least MIN_GROWTH in M. The
rate law is asymptotic; early transients would otherwise bias T toward
whatever flattens them.

The proven estimates are upper bounds. Rate products like
e^M (T-t)^{alpha/2} may therefore decay toward the blow-up time without
contradicting anything; only a rising trend is evidence against the
bound. rate_bound_check consequently fits a trend line to the rate
product over the last half decade of (T-t) and flags an increase beyond
tolerance, while any amount of decrease passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BadRadius, DegenerateExponents, FitFailed
from .model import FluxFamily, ProblemParams, make_grid, rate_exponents
from .solver import StopReason, Trajectory

MIN_WINDOW_SAMPLES = 20
MIN_GROWTH = 2.0
MIN_RATE_SAMPLES = 10
# below this many samples in the half-decade tail a trend is meaningless
MIN_TREND_SAMPLES = 3
HALF_DECADE = math.sqrt(10.0)
DEFAULT_RESIDUAL_MAX = 0.5


@dataclass(frozen=True)
class BlowupFit:
    """Result of estimate_blowup_time.

    c1_hat and c2_hat are the fitted prefactors of the u and v laws in
    the family transform above (for exp_linear, e.g., the prefactor of
    e^{qM}). residual is the RMS misfit of both fields on the window.
    """

    t_hat: float
    c1_hat: float
    c2_hat: float
    residual: float
    t_lo: float
    t_hi: float
    n_samples: int

    def __iter__(self):
        # unpack like the plain tuple (t_hat, c1_hat, c2_hat, residual)
        return iter((self.t_hat, self.c1_hat, self.c2_hat, self.residual))


@dataclass(frozen=True)
class RateBoundReport:
    rate_sup_u: float
    rate_sup_v: float
    trend_u: float
    trend_v: float
    tail_samples: int
    passed_u: bool
    passed_v: bool

    @property
    def passed(self) -> bool:
        return self.passed_u and self.passed_v


@dataclass(frozen=True)
class InteriorReport:
    """Boundary-only blow-up diagnostics at interior radius a.

    growth_u and growth_v are the relative increases of the interior
    suprema over the final decade of (t_hat - t). envelope_u/v evaluate
    the comparison-function bound C (R^2 - a^2)^{-2m} when a prefactor
    was supplied, else carry nan. status is "pass", "fail", or
    "inconclusive" (run did not reach the blow-up threshold).
    """

    interior_sup_u: float
    interior_sup_v: float
    boundary_max_u: float
    boundary_max_v: float
    growth_u: float
    growth_v: float
    argmax_at_boundary: bool
    envelope_u: float
    envelope_v: float
    decade_samples: int
    status: str

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass(frozen=True)
class BlowupReport:
    """Aggregate of the fit and the diagnostic checks for one run."""

    t_hat: float
    alpha_hat: float
    beta_hat: float
    c1_hat: float
    c2_hat: float
    residual: float
    fit_window: tuple[float, float]
    rate_sup_u: float
    rate_sup_v: float
    rate_trend_u: float
    rate_trend_v: float
    interior_sup_u: float
    interior_sup_v: float


def tail_window(traj: Trajectory) -> int:
    """Index where the fit window starts.

    The window is the largest suffix over which M strictly increases.
    Raises FitFailed when it has fewer than MIN_WINDOW_SAMPLES samples
    or M grows by less than MIN_GROWTH across it.
    """
    M = traj.M
    i = len(M) - 1
    while i > 0 and M[i] > M[i - 1]:
        i -= 1
    n = len(M) - i
    if n < MIN_WINDOW_SAMPLES:
        raise FitFailed(
            f"monotone suffix has {n} samples, need {MIN_WINDOW_SAMPLES}"
        )
    growth = float(M[-1] - M[i])
    if growth < MIN_GROWTH:
        raise FitFailed(
            f"M grew by {growth:.3f} on the monotone suffix, need {MIN_GROWTH}"
        )
    return i


def _transformed(traj: Trajectory, params: ProblemParams, i0: int):
    """Family transform of the window samples plus the fixed slopes."""
    M = traj.M[i0:]
    N = traj.Nmax[i0:]
    if params.flux is FluxFamily.EXP_LINEAR:
        return params.q * M, params.p * N, 0.5, 0.5
    alpha, beta = rate_exponents(params.p, params.q)
    if params.flux is FluxFamily.POWER:
        return np.log(M), np.log(N), alpha / 2.0, beta / 2.0
    return M, N, alpha / 2.0, beta / 2.0


def estimate_blowup_time(
    traj: Trajectory,
    params: ProblemParams,
    residual_max: float = DEFAULT_RESIDUAL_MAX,
) -> BlowupFit:
    """Fit the family growth law for the blow-up time.

    Both fields are fitted simultaneously with a shared T. The returned
    t_hat always exceeds the stop time.

    Raises
    ------
    FitFailed
        If the run did not stop at the blow-up threshold, the fit
        window is unusable, or the RMS residual exceeds residual_max.
    """
    if traj.stop.reason is not StopReason.BLOWUP_THRESHOLD:
        raise FitFailed(
            f"run stopped on {traj.stop.reason.value}, not the blow-up threshold"
        )
    i0 = tail_window(traj)
    t = traj.t[i0:]
    yu, yv, su, sv = _transformed(traj, params, i0)
    t_stop = traj.stop.t_stop
    span = float(t[-1] - t[0])

    def sse(log_d: float) -> float:
        T = t_stop + math.exp(log_d)
        x = -np.log(T - t)
        ru = yu - su * x
        rv = yv - sv * x
        return float(
            np.sum((ru - ru.mean()) ** 2) + np.sum((rv - rv.mean()) ** 2)
        )

    # T in (t_stop, t_stop + 10 * span]; the lower end only pins the
    # bracket, the objective blows up as T -> t_stop because the final
    # sample sits at t_stop
    res = minimize_scalar(
        sse,
        bounds=(math.log(span * 1e-12), math.log(10.0 * span)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    t_hat = t_stop + math.exp(float(res.x))
    x = -np.log(t_hat - t)
    c1 = float(np.exp((yu - su * x).mean()))
    c2 = float(np.exp((yv - sv * x).mean()))
    residual = math.sqrt(float(res.fun) / (2 * len(t)))
    if residual > residual_max:
        raise FitFailed(
            f"RMS fit residual {residual:.3f} exceeds {residual_max}"
        )
    return BlowupFit(
        t_hat=t_hat,
        c1_hat=c1,
        c2_hat=c2,
        residual=residual,
        t_lo=float(t[0]),
        t_hi=float(t[-1]),
        n_samples=len(t),
    )


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


def fit_rate(
    traj: Trajectory, t_hat: float, params: ProblemParams
) -> tuple[float, float]:
    """Free-slope regression of the transformed moduli against -log(t_hat - t).

    Returns (alpha_hat, beta_hat), each twice the fitted slope. For the
    exponential-power and power families these estimate the rate
    exponents alpha and beta; for exp_linear the expected value of both
    is 1 (slope 1/2). The growth laws are one-sided upper estimates, so
    values below the theoretical exponents are expected on real runs.
    """
    i0 = tail_window(traj)
    t = traj.t[i0:]
    usable = t < t_hat
    if int(usable.sum()) < MIN_RATE_SAMPLES:
        raise FitFailed(
            f"{int(usable.sum())} usable samples below t_hat, "
            f"need {MIN_RATE_SAMPLES}"
        )
    yu, yv, _, _ = _transformed(traj, params, i0)
    x = -np.log(t_hat - t[usable])
    return 2.0 * _slope(x, yu[usable]), 2.0 * _slope(x, yv[usable])


def rate_bound_check(
    traj: Trajectory,
    t_hat: float,
    alpha: float,
    beta: float,
    params: ProblemParams | None = None,
    tol: float = 0.20,
) -> RateBoundReport:
    """Upper rate estimate diagnostic.

    Computes the rate products exp(y_u) (t_hat - t)^{alpha/2} and
    exp(y_v) (t_hat - t)^{beta/2} over the fit window, where y is the
    family transform (plain M and N when params is omitted). Reports
    their suprema and the trend-line change of each product across the
    last half decade of (t_hat - t). A field passes when its supremum
    is finite and the trend increase stays within tol; decreasing
    products are consistent with an upper estimate and always pass.

    Diagnostic only: never raises on bad data, the flags carry the
    verdict. With fewer than MIN_TREND_SAMPLES tail samples the trends
    are nan and the check fails.
    """
    i0 = tail_window(traj)
    t = traj.t[i0:]
    if params is None:
        yu, yv = traj.M[i0:], traj.Nmax[i0:]
    else:
        yu, yv, _, _ = _transformed(traj, params, i0)
    gap = t_hat - t
    log_pi_u = yu + 0.5 * alpha * np.log(gap)
    log_pi_v = yv + 0.5 * beta * np.log(gap)
    sup_u = float(np.exp(log_pi_u).max())
    sup_v = float(np.exp(log_pi_v).max())

    tail = gap <= gap[-1] * HALF_DECADE
    n_tail = int(tail.sum())
    if n_tail >= MIN_TREND_SAMPLES:
        lx = np.log(gap[tail])
        width = float(lx[-1] - lx[0])
        trend_u = math.exp(_slope(lx, log_pi_u[tail]) * width)
        trend_v = math.exp(_slope(lx, log_pi_v[tail]) * width)
    else:
        trend_u = trend_v = float("nan")

    def ok(sup: float, trend: float) -> bool:
        return bool(np.isfinite(sup) and np.isfinite(trend) and trend <= 1.0 + tol)

    return RateBoundReport(
        rate_sup_u=sup_u,
        rate_sup_v=sup_v,
        trend_u=trend_u,
        trend_v=trend_v,
        tail_samples=n_tail,
        passed_u=ok(sup_u, trend_u),
        passed_v=ok(sup_v, trend_v),
    )


def _interior_series(traj: Trajectory, params: ProblemParams, a: float):
    """Per-sample interior suprema over r <= a, from snapshots if needed."""
    if abs(a - traj.config.interior_radius) <= 1e-12 * params.R:
        return traj.sup_u_interior, traj.sup_v_interior, np.arange(len(traj))
    if not traj.states:
        raise ValueError(
            f"a = {a} differs from the recorded interior radius "
            f"{traj.config.interior_radius} and the run kept no snapshots"
        )
    grid = make_grid(params.R, traj.config.N)
    k = int(np.searchsorted(grid.r, a * (1.0 + 1e-12), side="right"))
    su = np.array([s.u[:k].max() for s in traj.states])
    sv = np.array([s.v[:k].max() for s in traj.states])
    return su, sv, traj.state_samples


def boundary_set_check(
    traj: Trajectory,
    params: ProblemParams,
    a: float,
    t_hat: float | None = None,
    c1_hat: float | None = None,
    c2_hat: float | None = None,
) -> InteriorReport:
    """Check that growth concentrates at the boundary.

    Passes when the interior suprema over r <= a rise by less than 5%
    across the final decade of (t_hat - t) while the run ended at the
    blow-up threshold, and the maxima of both fields sit at the
    boundary node in every recorded sample. A run stopped for any other
    reason is inconclusive: interior bounds then hold trivially.

    The comparison-function envelopes C (R^2 - a^2)^{-2m} with
    m = alpha/2 resp. beta/2 are evaluated for whichever prefactors are
    supplied. They are reported, not gated on.
    """
    if not 0.0 < a < params.R:
        raise BadRadius(f"interior radius must lie in (0, R), got {a}")
    su, sv, samples = _interior_series(traj, params, a)
    n_nodes = traj.config.N
    argmax_ok = bool(
        np.all(traj.argmax_u == n_nodes - 1) and np.all(traj.argmax_v == n_nodes - 1)
    )

    envelope_u = envelope_v = float("nan")
    try:
        alpha, beta = rate_exponents(params.p, params.q)
        shrink = (params.R**2 - a**2) ** -2.0
        if c1_hat is not None:
            envelope_u = c1_hat * shrink ** (alpha / 2.0)
        if c2_hat is not None:
            envelope_v = c2_hat * shrink ** (beta / 2.0)
    except DegenerateExponents:
        pass

    reached = traj.stop.reason is StopReason.BLOWUP_THRESHOLD
    if not reached or t_hat is None:
        return InteriorReport(
            interior_sup_u=float(su.max()),
            interior_sup_v=float(sv.max()),
            boundary_max_u=float(traj.M[-1]),
            boundary_max_v=float(traj.Nmax[-1]),
            growth_u=float("nan"),
            growth_v=float("nan"),
            argmax_at_boundary=argmax_ok,
            envelope_u=envelope_u,
            envelope_v=envelope_v,
            decade_samples=0,
            status="inconclusive",
        )

    t = traj.t[samples]
    decade = (t_hat - t) <= 10.0 * (t_hat - traj.stop.t_stop)
    du = su[decade]
    dv = sv[decade]
    growth_u = float(du[-1] / du[0] - 1.0)
    growth_v = float(dv[-1] / dv[0] - 1.0)
    passed = growth_u < 0.05 and growth_v < 0.05 and argmax_ok
    return InteriorReport(
        interior_sup_u=float(su.max()),
        interior_sup_v=float(sv.max()),
        boundary_max_u=float(traj.M[-1]),
        boundary_max_v=float(traj.Nmax[-1]),
        growth_u=growth_u,
        growth_v=growth_v,
        argmax_at_boundary=argmax_ok,
        envelope_u=envelope_u,
        envelope_v=envelope_v,
        decade_samples=int(decade.sum()),
        status="pass" if passed else "fail",
    )


def analyze_run(
    traj: Trajectory,
    params: ProblemParams,
    residual_max: float = DEFAULT_RESIDUAL_MAX,
    rate_tol: float = 0.20,
) -> BlowupReport:
    """Full diagnostic pass over one completed run."""
    fit = estimate_blowup_time(traj, params, residual_max=residual_max)
    alpha_hat, beta_hat = fit_rate(traj, fit.t_hat, params)
    if params.flux is FluxFamily.EXP_LINEAR:
        s2u, s2v = 1.0, 1.0
    else:
        alpha, beta = rate_exponents(params.p, params.q)
        s2u, s2v = alpha, beta
    bound = rate_bound_check(
        traj, fit.t_hat, s2u, s2v, params=params, tol=rate_tol
    )
    return BlowupReport(
        t_hat=fit.t_hat,
        alpha_hat=alpha_hat,
        beta_hat=beta_hat,
        c1_hat=fit.c1_hat,
        c2_hat=fit.c2_hat,
        residual=fit.residual,
        fit_window=(fit.t_lo, fit.t_hi),
        rate_sup_u=bound.rate_sup_u,
        rate_sup_v=bound.rate_sup_v,
        rate_trend_u=bound.trend_u,
        rate_trend_v=bound.trend_v,
        interior_sup_u=float(traj.sup_u_interior.max()),
        interior_sup_v=float(traj.sup_v_interior.max()),
    )
