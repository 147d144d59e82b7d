import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp
from scipy.optimize import linprog

from conftest import HALF_PI, random_instance
from peflow import (BumpTestFunction, DiscreteMeasure, Potential, SolverOptions, check_energy_monotone,
                    check_flow_equation, check_kinetic_bound, check_oleinik, check_qspp, check_stability, energy,
                    flow_equation_residual, run_checks, simulate, theta, wasserstein2, weak_form_residual)
from peflow.diagnostics import ALL_CHECKS, energy_series


def three_body():
    mu = DiscreteMeasure(np.array([0.0, 1.0, 3.0]), np.array([0.25, 0.25, 0.5]))
    return simulate(mu, np.array([1.0, -1.0, 0.0]), Potential.zero(), 1.0)


def tamper(tm, t, **changes):
    """Copy of ``tm`` with one snapshot's cluster arrays replaced."""
    snaps = list(tm.snapshots)
    k = int(np.flatnonzero(np.isclose(tm.times, t))[-1])
    snaps[k] = replace(snaps[k], **changes)
    return replace(tm, snapshots=snaps)


class TestEnergy:
    def test_free_streaming_drop(self, free_tm):
        assert energy(free_tm, 0.0)[2] == pytest.approx(0.5)
        assert energy(free_tm, 1.0)[2] == pytest.approx(0.0, abs=1e-16)
        assert check_energy_monotone(free_tm).passed

    def test_harmonic_conserved_until_merge(self, harmonic_tm):
        for t in np.linspace(0, HALF_PI - 0.01, 9):
            kin, pot, tot = energy(harmonic_tm, t)
            # oracle: kin = sin^2 / 2, pot = cos^2 / 2
            assert kin == pytest.approx(0.5 * math.sin(t) ** 2, abs=1e-7)
            assert pot == pytest.approx(0.5 * math.cos(t) ** 2, abs=1e-7)
        assert energy(harmonic_tm, 2.0)[2] == pytest.approx(0.0, abs=1e-12)
        rec = check_energy_monotone(harmonic_tm)
        assert rec.passed

    def test_single_atom_zero_slack(self):
        tm = simulate(DiscreteMeasure(np.array([0.0]), np.array([1.0])), np.array([1.0]), Potential.zero(), 1.0)
        rec = check_energy_monotone(tm)
        assert rec.passed and rec.worst_slack == 0.0

    def test_detects_increase(self, free_tm):
        bad = tamper(free_tm, 1.0, vel=np.array([3.0]))
        assert not check_energy_monotone(bad).passed


class TestTheta:
    @pytest.mark.parametrize("c", [0.0, 0.5, 2.0])
    @pytest.mark.parametrize("t", [0.1, 0.7, 1.5])
    def test_against_quadrature(self, c, t):
        a = c + 1
        ref = math.exp(a * t * t) * quad(lambda s: math.exp(-a * s * s), 0, t, epsabs=1e-14)[0]
        assert theta(t, c) == pytest.approx(ref, rel=1e-12)

    def test_solves_growth_ode(self):
        c = 0.3
        sol = solve_ivp(lambda t, y: 2 * (c + 1) * t * y + 1, (0, 1.2), [0.0], rtol=1e-12, atol=1e-14,
                        dense_output=True)
        ts = np.linspace(0, 1.2, 7)
        np.testing.assert_allclose(theta(ts, c), sol.sol(ts)[0], rtol=1e-9, atol=1e-14)

    def test_origin(self):
        assert theta(0.0, 0.0) == 0.0
        h = 1e-7
        assert (theta(h, 0.0) - theta(0.0, 0.0)) / h == pytest.approx(1.0, rel=1e-6)

    def test_value_at_one(self):
        assert theta(1.0, 0.0) == pytest.approx(2.0300, abs=1e-4)

    def test_kinetic_bound_free_streaming(self, free_tm):
        rec = check_kinetic_bound(free_tm)
        assert rec.passed
        # oracle: int_0^1 sum m v^2 = 1 * 0.5; bound at t=1 is 1 * theta(1)
        assert rec.detail["constant"] == pytest.approx(1.0)
        assert theta(1.0, 0.0) - 0.5 >= rec.worst_slack - 1e-12


class TestQspp:
    def test_free_streaming(self, free_tm):
        assert check_qspp(free_tm).passed

    def test_hand_pair(self):
        # free streaming gap 1 - 2t; (1 - 2t)/t decreases on (0, 1/2)
        ts = np.array([0.25, 0.4, 0.49])
        r = (1 - 2 * ts) / ts
        assert np.all(np.diff(r) < 0)

    def test_single_atom_vacuous(self):
        tm = simulate(DiscreteMeasure(np.array([0.0]), np.array([1.0])), np.array([1.0]), Potential.zero(), 1.0)
        rec = check_qspp(tm)
        assert rec.passed and rec.examined == 0

    def test_detects_separation(self):
        tm = three_body()
        bad = tamper(tm, 0.9, pos=np.array([0.5, 30.0]))
        assert not check_qspp(bad).passed


class TestStability:
    def test_free_streaming(self, free_tm):
        rec = check_stability(free_tm)
        assert rec.passed and rec.detail["lower_slack"] >= 0

    def test_bound_value(self, free_tm):
        # at t = 0.25 the spread is 0.5 and the bound 1 + 0.25 * 2 = 1.5
        rec = check_stability(free_tm, times=[0.25])
        assert rec.detail["upper_slack"] == pytest.approx(1.0, abs=1e-12)

    def test_initial_time_equality(self, free_tm):
        rec = check_stability(free_tm, times=[0.0])
        assert rec.detail["lower_slack"] == pytest.approx(1.0)

    def test_detects_crossing(self):
        bad = tamper(three_body(), 0.4, pos=np.array([0.4, 0.6, -1.0]))
        assert not check_stability(bad).passed


class TestOleinik:
    def test_free_streaming(self, free_tm):
        assert check_oleinik(free_tm).passed

    def test_hand_value(self, free_tm):
        # (-1 - 1)(0.75 - 0.25) = -1 <= (1/0.25) 0.25^2 ... slack over both orderings
        rec = check_oleinik(free_tm, times=[0.25])
        assert rec.worst_slack == pytest.approx(0.0, abs=1e-12)  # diagonal terms

    def test_detects_spreading(self):
        bad = tamper(three_body(), 0.6, vel=np.array([-5.0, 0.0]))
        assert not check_oleinik(bad).passed

    def test_semiconcave_rate(self):
        x = np.linspace(0, 4, 401)
        p = Potential.custom(x, -0.25 * x * x, -0.5 * x, c=0.5)
        mu = DiscreteMeasure(np.array([-1.0, 0.0, 1.0]), np.full(3, 1 / 3))
        tm = simulate(mu, np.array([0.3, 0.0, -0.3]), p, 2.0)
        assert tm.c == 0.5
        for chk in (check_oleinik, check_qspp, check_stability, check_energy_monotone):
            assert chk(tm).passed, chk.__name__


class TestFlowEquation:
    def test_zero_potential_exact(self, free_tm):
        for k in range(len(free_tm.snapshots)):
            assert flow_equation_residual(free_tm, node=k) <= 1e-12

    def test_initial_node_zero(self, harmonic_tm):
        assert flow_equation_residual(harmonic_tm, t=0.0) == 0.0

    def test_custom_test_functions(self, free_tm):
        assert flow_equation_residual(free_tm, t=0.75, test_fns=[lambda x: x, np.sin]) <= 1e-12

    def test_integrator_quadrature_beats_trapezoid(self, harmonic_tm):
        assert check_flow_equation(harmonic_tm).passed
        r_int = flow_equation_residual(harmonic_tm, t=1.0, quadrature="integrator")
        r_trap = flow_equation_residual(harmonic_tm, t=1.0, quadrature="trapezoid")
        assert r_int < 1e-12 < r_trap < 1e-3

    def test_not_a_snapshot(self, free_tm):
        with pytest.raises(ValueError):
            flow_equation_residual(free_tm, t=0.123456)

    def test_detects_tampered_velocity(self):
        bad = tamper(three_body(), 0.6, vel=np.array([-5.0, 0.0]))
        assert not check_flow_equation(bad).passed


class TestWeakForm:
    def test_away_from_support(self, free_tm):
        phi = BumpTestFunction(10.0, 1.0, 0.5, 0.4)
        assert weak_form_residual(free_tm, phi) == (0.0, 0.0)

    def test_support_beyond_horizon(self, free_tm):
        with pytest.raises(ValueError):
            weak_form_residual(free_tm, BumpTestFunction(0.5, 1.0, 0.8, 0.5))

    def test_single_characteristic(self):
        mu = DiscreteMeasure(np.array([0.0]), np.array([1.0]))
        tm = simulate(mu, np.array([0.5]), Potential.zero(), 1.0,
                      SolverOptions(output_times=tuple(np.linspace(0, 1, 401))))
        r_mass, r_mom = weak_form_residual(tm, BumpTestFunction(0.2, 1.0, 0.3, 0.6))
        assert r_mass < 1e-4 and r_mom < 1e-4

    def test_second_order_free_streaming(self):
        # asymmetric data, otherwise the momentum residual vanishes by symmetry
        mu = DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.6, 0.4]))
        phi = BumpTestFunction(0.35, 1.0, 0.5, 0.45)
        res = []
        for n in (80, 160, 320):
            tm = simulate(mu, np.array([1.0, -1.0]), Potential.zero(), 1.0,
                          SolverOptions(output_times=tuple(np.linspace(0, 1, n + 1))))
            res.append(weak_form_residual(tm, phi))
        res = np.array(res)
        orders = np.log2(res[:-1] / res[1:])
        assert np.all(orders >= 1.8), orders


class TestWasserstein:
    def test_dirac(self):
        d0 = DiscreteMeasure(np.array([0.0]), np.array([1.0]))
        d1 = DiscreteMeasure(np.array([1.0]), np.array([1.0]))
        assert wasserstein2(d0, d1) == 1.0
        assert wasserstein2(d0, d0) == 0.0

    def test_split(self):
        mu = DiscreteMeasure(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        nu = DiscreteMeasure(np.array([0.5]), np.array([1.0]))
        assert wasserstein2(mu, nu) == pytest.approx(0.5)

    @given(st.integers(0, 100_000))
    def test_against_linear_program(self, seed):
        rng = np.random.default_rng(seed)
        mu, _ = random_instance(rng, n_max=5)
        nu, _ = random_instance(rng, n_max=5)
        cost = (mu.x[:, None] - nu.x[None, :]) ** 2
        n, k = cost.shape
        a_eq = np.vstack([np.kron(np.eye(n), np.ones(k)), np.kron(np.ones(n), np.eye(k))])
        lp = linprog(cost.ravel(), A_eq=a_eq, b_eq=np.concatenate([mu.m, nu.m]), bounds=(0, None), method="highs")
        assert wasserstein2(mu, nu) == pytest.approx(math.sqrt(max(lp.fun, 0.0)), abs=1e-7)

    @given(st.integers(0, 100_000), st.floats(-3, 3))
    def test_translation_and_symmetry(self, seed, h):
        mu, _ = random_instance(np.random.default_rng(seed), n_max=8)
        nu = DiscreteMeasure(mu.x + h, mu.m)
        assert wasserstein2(mu, nu) == pytest.approx(abs(h), abs=1e-12)
        assert wasserstein2(nu, mu) == pytest.approx(wasserstein2(mu, nu), abs=1e-15)


class TestSuite:
    def test_all_pass_on_oracles(self, free_tm, harmonic_tm):
        for tm in (free_tm, harmonic_tm):
            rep = run_checks(tm)
            assert rep.passed, rep.to_json()
            assert [c.name for c in rep.checks] == ["energy", "kinetic_bound", "qspp", "stability",
                                                     "oleinik", "flow", "weak"]

    def test_empty(self, free_tm):
        rep = run_checks(free_tm, [])
        assert rep.passed and rep.checks == []

    def test_unknown(self, free_tm):
        with pytest.raises(ValueError):
            run_checks(free_tm, ["nonsense"])

    def test_json_sorted(self, free_tm):
        text = run_checks(free_tm, ["energy"]).to_json()
        assert text.index('"c"') < text.index('"checks"') < text.index('"pass"')

    def test_energy_series_nodes(self, free_tm):
        assert energy_series(free_tm).size == len(free_tm.snapshots)
        assert set(ALL_CHECKS) >= {"energy", "qspp", "stability", "oleinik", "flow", "weak"}


@given(st.integers(0, 100_000))
def test_wasserstein_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_instance(rng, n_max=8)[0] for _ in range(3))
    assert wasserstein2(a, c) <= wasserstein2(a, b) + wasserstein2(b, c) + 1e-12


def test_energy_records_both_one_sided_values(free_tm):
    e = energy_series(free_tm)
    kinds = [s.kind for s in free_tm.snapshots]
    pre, post = kinds.index("pre"), kinds.index("post")
    assert e[pre] == pytest.approx(0.5) and e[post] == pytest.approx(0.0)
