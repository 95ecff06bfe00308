import logging

import numpy as np
import pytest

from blowuplab.errors import InvalidInitialData, StepUnderflow
from blowuplab.model import (
    FieldState,
    FluxFamily,
    ProblemParams,
    QuadraticRadial,
    Tabulated,
    boundary_flux,
    make_grid,
)
from blowuplab.solver import (
    STABLE_CFL,
    SolverConfig,
    StopReason,
    adapt_dt,
    apply_neumann,
    flux_exponent_args,
    radial_laplacian,
    run,
    step,
)


def exp_power_params(n=2, N=None, **kw):
    defaults = dict(
        p=2.0, q=2.0, R=1.0, n=n,
        flux=FluxFamily.EXP_POWER,
        initial=QuadraticRadial(0.5, 0.5, 0.5, 0.5),
    )
    defaults.update(kw)
    return ProblemParams(**defaults)


class TestRadialLaplacian:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_exact_on_quadratics(self, n):
        # centered stencils and the origin closure reproduce the constant
        # Laplacian 2nb of a + b r^2 to roundoff at every node
        grid = make_grid(1.5, 61)
        a, b = 0.7, 0.3
        f = a + b * grid.r**2
        ghost = a + b * (grid.R + grid.dr) ** 2
        lap = radial_laplacian(f, grid, n, ghost)
        assert np.allclose(lap, 2.0 * n * b, atol=1e-10)

    def test_second_order_on_quartic(self):
        # Delta r^4 = (4n + 8) r^2; the truncation error scales as dr^2
        n = 2
        errs = []
        for N in (41, 81):
            grid = make_grid(1.0, N)
            f = grid.r**4
            ghost = (grid.R + grid.dr) ** 4
            lap = radial_laplacian(f, grid, n, ghost)
            exact = (4.0 * n + 8.0) * grid.r**2
            errs.append(np.abs(lap - exact)[1:-1].max())
        assert errs[0] / errs[1] > 3.5


class TestApplyNeumann:
    def test_ghost_values(self):
        grid = make_grid(1.0, 101)
        params = exp_power_params()
        u = 0.5 + 0.5 * grid.r**2
        v = 1.0 + 0.2 * grid.r**2
        state = FieldState(t=0.0, u=u, v=v)
        ghost_u, ghost_v = apply_neumann(state, params, grid)
        fu = boundary_flux(FluxFamily.EXP_POWER, float(v[-1]), params.p)
        fv = boundary_flux(FluxFamily.EXP_POWER, float(u[-1]), params.q)
        assert ghost_u == pytest.approx(u[-2] + 2 * grid.dr * fu, rel=1e-15)
        assert ghost_v == pytest.approx(v[-2] + 2 * grid.dr * fv, rel=1e-15)


class TestFluxExponentArgs:
    def test_families(self):
        base = dict(R=1.0, n=2, initial=QuadraticRadial(0.5, 0.5, 0.5, 0.5))
        pp = ProblemParams(p=3.0, q=2.0, flux=FluxFamily.EXP_POWER, **base)
        assert flux_exponent_args(pp, 2.0, 3.0) == (4.0, 27.0)
        pp = ProblemParams(p=3.0, q=2.0, flux=FluxFamily.POWER, **base)
        assert flux_exponent_args(pp, 2.0, 3.0) == (4.0, 27.0)
        pp = ProblemParams(p=3.0, q=2.0, flux=FluxFamily.EXP_LINEAR, **base)
        assert flux_exponent_args(pp, 2.0, 3.0) == (4.0, 9.0)


class TestAdaptDt:
    def grid_state(self):
        grid = make_grid(1.0, 101)
        f = np.ones(grid.N)
        return grid, FieldState(t=0.0, u=f, v=f)

    def test_diffusion_limited(self):
        grid, state = self.grid_state()
        config = SolverConfig(cfl=0.4, growth_cap=0.1)
        rates = (np.ones(grid.N), np.ones(grid.N))
        assert adapt_dt(state, config, rates, grid) == pytest.approx(
            0.4 * grid.dr**2
        )

    def test_growth_limited(self):
        grid, state = self.grid_state()
        config = SolverConfig(cfl=0.4, growth_cap=0.1)
        rates = (np.full(grid.N, 1e6), np.ones(grid.N))
        # cap * (1 + peak) / max_rate with peak = 1
        assert adapt_dt(state, config, rates, grid) == pytest.approx(2e-7)

    def test_underflow(self):
        grid, state = self.grid_state()
        config = SolverConfig(cfl=0.4, growth_cap=0.1)
        rates = (np.full(grid.N, 1e300), np.ones(grid.N))
        with pytest.raises(StepUnderflow):
            adapt_dt(state, config, rates, grid)


class TestStep:
    def test_zero_flux_leaves_constant_field_alone(self):
        # with v identically zero the power flux into u vanishes, so one
        # step leaves constant u untouched; v grows only at the boundary
        # node, driven by the flux u^q = 1
        grid = make_grid(1.0, 51)
        params = ProblemParams(
            p=2.0, q=2.0, R=1.0, n=2,
            flux=FluxFamily.POWER,
            initial=QuadraticRadial(1.0, 0.0, 1.0, 0.0),
        )
        state = FieldState(t=0.0, u=np.ones(51), v=np.zeros(51))
        new = step(state, params, grid, SolverConfig(N=51))
        assert np.array_equal(new.u, np.ones(51))
        assert np.array_equal(new.v[:-1], np.zeros(50))
        dt = new.t
        expected = dt * (2.0 / grid.dr + (params.n - 1) / grid.R)
        assert new.v[-1] == pytest.approx(expected, rel=1e-12)

    def test_t_end_clips_the_step(self):
        grid = make_grid(1.0, 51)
        params = exp_power_params(N=51)
        config = SolverConfig(N=51, t_end=1e-7)
        u0, v0 = params.initial.evaluate(grid)
        state = FieldState(t=0.0, u=u0, v=v0)
        new = step(state, params, grid, config)
        assert new.t == pytest.approx(1e-7, abs=1e-20)


@pytest.fixture(scope="module")
def blowup_run():
    params = exp_power_params()
    config = SolverConfig(
        N=101, cfl=0.4, growth_cap=0.1, u_stop=9.0,
        record_every=1, state_every=1,
    )
    return params, config, run(params, config)


class TestRun:

    def test_stops_at_threshold(self, blowup_run):
        _, config, traj = blowup_run
        assert traj.stop.reason is StopReason.BLOWUP_THRESHOLD
        assert max(traj.stop.arg_u, traj.stop.arg_v) > config.u_stop

    def test_both_arguments_large_at_stop(self, blowup_run):
        # simultaneity proxy: neither flux argument lags far behind
        _, config, traj = blowup_run
        assert min(traj.stop.arg_u, traj.stop.arg_v) > config.u_stop / 4.0

    def test_sample_bookkeeping(self, blowup_run):
        _, _, traj = blowup_run
        assert traj.t[0] == 0.0
        assert traj.dt[0] == 0.0
        assert traj.t[-1] == traj.stop.t_stop
        assert np.all(np.diff(traj.t) > 0)
        assert len(traj.states) == len(traj)
        assert np.array_equal(traj.state_samples, np.arange(len(traj)))

    def test_moduli_nondecreasing(self, blowup_run):
        _, _, traj = blowup_run
        assert np.all(np.diff(traj.M) >= 0)
        assert np.all(np.diff(traj.Nmax) >= 0)

    def test_argmax_at_boundary(self, blowup_run):
        _, config, traj = blowup_run
        assert np.all(traj.argmax_u == config.N - 1)
        assert np.all(traj.argmax_v == config.N - 1)

    def test_profiles_stay_positive_and_monotone(self, blowup_run):
        _, _, traj = blowup_run
        for s in traj.states:
            m = 1.0 + float(s.u.max())
            assert s.u.min() > 0
            assert s.v.min() > 0
            assert np.diff(s.u).min() >= -1e-8 * m
            assert np.diff(s.v).min() >= -1e-8 * m

    def test_interior_below_boundary(self, blowup_run):
        _, _, traj = blowup_run
        assert np.all(traj.sup_u_interior <= traj.M)
        assert np.all(traj.sup_v_interior <= traj.Nmax)

    def test_deterministic(self, blowup_run):
        params, config, traj = blowup_run
        again = run(params, config)
        assert np.array_equal(traj.t, again.t)
        assert np.array_equal(traj.M, again.M)
        assert traj.stop.t_stop == again.stop.t_stop

    def test_time_limit_stop(self):
        params = exp_power_params()
        config = SolverConfig(N=101, t_end=1e-4, record_every=10)
        traj = run(params, config)
        assert traj.stop.reason is StopReason.TIME_LIMIT
        assert traj.stop.t_stop == pytest.approx(1e-4, abs=1e-18)

    def test_step_underflow_stop(self):
        # without a reachable stop threshold the adaptive step shrinks
        # below float resolution once the boundary runaway saturates
        params = exp_power_params()
        config = SolverConfig(N=41, u_stop=699.0, record_every=50)
        traj = run(params, config)
        assert traj.stop.reason is StopReason.STEP_UNDERFLOW
        assert max(traj.stop.arg_u, traj.stop.arg_v) > 30.0
        assert max(traj.stop.arg_u, traj.stop.arg_v) < 699.0

    def test_second_order_convergence(self):
        # smooth regime comparison on shared nodes; dt ~ dr^2 keeps the
        # Euler error at the same order as the spatial one
        params = exp_power_params()
        t_end = 2e-3
        sols = {}
        for N in (51, 101, 201):
            config = SolverConfig(N=N, t_end=t_end, record_every=10**9)
            traj = run(params, config)
            sols[N] = traj.stop.last_state.u
        stride_51 = (201 - 1) // (51 - 1)
        stride_101 = (201 - 1) // (101 - 1)
        err_51 = np.abs(sols[51] - sols[201][::stride_51]).max()
        err_101 = np.abs(sols[101] - sols[201][::stride_101]).max()
        assert err_51 / err_101 > 3.3

    def test_unstable_cfl_warns(self, caplog):
        params = exp_power_params(n=3)
        config = SolverConfig(N=101, cfl=0.4, t_end=5e-5, record_every=10)
        with caplog.at_level(logging.WARNING, logger="blowuplab.solver"):
            run(params, config)
        assert any("stability" in r.message for r in caplog.records)
        assert STABLE_CFL[3] < 0.4

    def test_interior_radius_must_be_inside(self):
        params = exp_power_params(R=0.4)
        config = SolverConfig(N=101, interior_radius=0.5)
        with pytest.raises(ValueError, match="interior_radius"):
            run(params, config)

    def test_invalid_initial_data_rejected(self):
        params = exp_power_params(initial=QuadraticRadial(1.0, -0.5, 0.5, 0.5))
        with pytest.raises(InvalidInitialData):
            run(params, SolverConfig(N=101))

    def test_tabulated_initial_data_runs(self):
        grid = make_grid(1.0, 101)
        params = exp_power_params(
            initial=Tabulated(0.5 + 0.5 * grid.r**2, 0.5 + 0.5 * grid.r**2)
        )
        config = SolverConfig(N=101, t_end=1e-4, record_every=10)
        traj = run(params, config)
        assert traj.stop.reason is StopReason.TIME_LIMIT
