"""ODE oracle, fixed-point residuals, best-response scan, convergence."""
import numpy as np
import pytest

from conftest import random_population, single_atom
from merton_arena import (
    AgentType,
    BernoulliInputs,
    NonReplicableWeights,
    Population,
    ProfitableDeviationFound,
    TypeDistribution,
    bernoulli_oracle,
    best_response_test,
    equilibrium_strategy,
    estimate_objective,
    fixed_point_check,
    mfg_convergence,
    simulate,
    solve_n,
)
from merton_arena.nplayer import EquilibriumProfile
from merton_arena.verification import replicate


def const(value):
    return lambda t: np.full_like(np.asarray(t, dtype=float), value)


class TestBernoulliOracle:
    def test_log_investor_closed_form(self):
        # gamma=1, a=0, b=1/eps: f(t) = (T - t)/eps + 1
        inp = BernoulliInputs(gamma=1.0, theta=0.5, delta=1.0, eps=2.0, rho=0.0,
                              hat_c_minus=const(0.0), bar_c_minus=const(1.0))
        times, f = bernoulli_oracle(inp, 1.0, steps=2000)
        assert np.max(np.abs(f - ((1.0 - times) / 2.0 + 1.0))) <= 1e-10

    def test_homogeneous_exponential(self):
        # a = alpha, b = 0: f(t) = exp(alpha (T - t)); realized with theta=0
        # (so b carries no consumption term) and a tiny eps-free override
        alpha = 0.7

        class Homogeneous(BernoulliInputs):
            def b(self, t):
                return np.zeros_like(np.asarray(t, dtype=float))

        inp = Homogeneous(gamma=2.0, theta=0.0, delta=2.0, eps=1.0, rho=alpha,
                          hat_c_minus=const(0.0), bar_c_minus=const(1.0))
        times, f = bernoulli_oracle(inp, 1.0, steps=2000)
        assert np.max(np.abs(f - np.exp(alpha * (1.0 - times)))) <= 1e-10

    def test_negative_b_rejected(self):
        class Negative(BernoulliInputs):
            def b(self, t):
                return -np.ones_like(np.asarray(t, dtype=float))

        inp = Negative(gamma=1.0, theta=0.0, delta=1.0, eps=1.0, rho=0.0,
                       hat_c_minus=const(0.0), bar_c_minus=const(1.0))
        with pytest.raises(ValueError):
            bernoulli_oracle(inp, 1.0, steps=100)


class TestFixedPoint:
    def test_reference_population(self, ref_n2):
        e = solve_n(ref_n2)
        rep = fixed_point_check(ref_n2, e)
        assert rep.systeq1_max <= 1e-8
        assert rep.systeq2_max <= 1e-8
        assert rep.max_f_gap <= 1e-8
        assert rep.identity_residual <= 1e-10
        assert rep.passes()

    def test_all_log_investors_tight(self):
        p = Population(1.0, (
            AgentType(1.0, 1.0, 0.7, 2.0, 1.2, 0.3, 0.4),
            AgentType(1.0, 1.0, 0.5, 0.5, 1.0, 0.0, 1.0),
        ))
        e = solve_n(p)
        rep = fixed_point_check(p, e)
        assert rep.systeq1_max <= 1e-10
        assert rep.systeq2_max <= 1e-10

    def test_heterogeneous_population(self, ref_n3):
        e = solve_n(ref_n3)
        rep = fixed_point_check(ref_n3, e)
        assert rep.systeq1_max <= 1e-8
        assert rep.max_f_gap <= 1e-8

    def test_detector_sensitivity(self, ref_n2):
        e = solve_n(ref_n2)
        rep = fixed_point_check(ref_n2, e, consumption_scale=1.01)
        assert rep.systeq1_max >= 1e-3

    def test_random_corpus_small(self):
        rng = np.random.default_rng(2024)
        for _ in range(10):
            p = random_population(rng, n_max=5, gentle=True)
            e = solve_n(p)
            rep = fixed_point_check(p, e, steps=4000)
            assert rep.systeq1_max <= 1e-8, p
            assert rep.systeq2_max <= 1e-8, p
            assert rep.max_f_gap <= 1e-8, p


class TestBestResponse:
    GRID_DPI = (-0.5, -0.1, 0.0, 0.1, 0.5)
    GRID_AB = (-0.2, 0.0, 0.2)

    def test_null_cell_exact_zero(self, ref_n3):
        e = solve_n(ref_n3)
        rep = best_response_test(ref_n3, e, 1, self.GRID_DPI, self.GRID_AB,
                                 paths=4000, seed=3, grid=200)
        null = [c for c in rep.cells if (c.dpi, c.a, c.b) == (0.0, 0.0, 0.0)][0]
        assert null.mean_diff == 0.0
        assert null.stderr == 0.0

    def test_equilibrium_survives_scan(self, ref_n3):
        e = solve_n(ref_n3)
        for i in range(ref_n3.n):
            rep = best_response_test(ref_n3, e, i, self.GRID_DPI, self.GRID_AB,
                                     paths=20000, seed=17, grid=250)
            assert not rep.violations()
            assert rep.worst.mean_diff <= 3.0 * max(rep.worst.stderr, 0.0)

    def test_merton_deviation_matches_analytic(self):
        # theta=0, delta=1: shifting pi by h changes J by -Sigma h^2/2 (T^2/2 + eps T)
        a = AgentType(1.0, 1.0, 0.0, 1.0, 1.0, 0.3, 0.4)
        p = Population(1.0, (a, a))
        e = solve_n(p)
        rep = best_response_test(p, e, 0, (0.0, 1.0), (0.0,),
                                 paths=40000, seed=7, grid=400)
        cell = [c for c in rep.cells if c.dpi == 1.0][0]
        analytic = -0.5 * a.Sigma * (0.5 + 1.0)
        assert abs(cell.mean_diff - analytic) <= 3.0 * cell.stderr
        assert cell.mean_diff < -3.0 * cell.stderr

    def test_tampered_profile_is_caught(self, ref_n3):
        e = solve_n(ref_n3)
        pi = np.array(e.pi)
        pi[0] -= 1.0  # held strategy is off-equilibrium for agent 0
        bad = EquilibriumProfile(pi=pi, rho=e.rho, beta=e.beta, lam=e.lam,
                                 aggregates=e.aggregates)
        with pytest.raises(ProfitableDeviationFound) as exc:
            best_response_test(ref_n3, bad, 0, (0.0, 1.0), (0.0,),
                               paths=20000, seed=23, grid=200)
        assert exc.value.report is not None
        assert exc.value.cell[0] == 1.0  # moving back toward the optimum wins

    def test_paths_accounted(self, ref_n2):
        e = solve_n(ref_n2)
        rep = best_response_test(ref_n2, e, 0, (0.0,), (0.0,), paths=1000,
                                 seed=0, grid=64, block_size=128)
        assert rep.paths == 1000
        assert rep.equilibrium.paths == 1000

    def test_equilibrium_estimate_matches_simulation_route(self, ref_n3):
        # the scan evaluates J from closed-form node formulas; the batch
        # route cumulates per-segment updates -- two code paths, one value
        e = solve_n(ref_n3)
        s = equilibrium_strategy(ref_n3, e)
        rep = best_response_test(ref_n3, e, 0, (0.0,), (0.0,), paths=3000,
                                 seed=41, grid=300)
        batch = simulate(ref_n3, s, grid=300, paths=3000, seed=41)
        est = estimate_objective(batch, s, 0, ref_n3)
        assert rep.equilibrium.mean == pytest.approx(est.mean, abs=1e-9)
        assert rep.equilibrium.stderr == pytest.approx(est.stderr, rel=1e-6)


class TestConvergence:
    ATOM_NU = AgentType(1.0, 3.0, 0.8, 1.0, 5.0, 0.5, 1.0)
    ATOM_NO_NU = AgentType(1.0, 3.0, 0.8, 1.0, 5.0, 0.0, 1.0)

    def test_idiosyncratic_gaps_halve(self):
        rows = mfg_convergence(single_atom(self.ATOM_NU), [4, 8, 16, 32, 64])
        gaps = [r.beta_gap for r in rows]
        ratios = np.array(gaps[1:]) / np.array(gaps[:-1])
        assert np.all((ratios >= 0.4) & (ratios <= 0.6))
        assert all(r.lambda_gap == 0.0 for r in rows)

    def test_single_stock_gaps_vanish(self):
        rows = mfg_convergence(single_atom(self.ATOM_NO_NU), [4, 8, 16, 32])
        for r in rows:
            assert r.pi_gap <= 1e-12
            assert r.beta_gap <= 1e-9

    def test_two_atom_replication(self):
        d = TypeDistribution(1.0, (
            (0.25, AgentType(1.0, 2.0, 0.5, 1.0, 1.0, 0.4, 0.5)),
            (0.75, AgentType(1.0, 0.8, 0.9, 1.5, 1.2, 0.3, 0.6)),
        ))
        rows = mfg_convergence(d, [4, 8, 16])
        assert rows[0].n == 4
        assert rows[-1].beta_gap < rows[0].beta_gap

    def test_non_replicable_weights(self):
        d = TypeDistribution(1.0, (
            (1.0 / 3.0, AgentType(1.0, 2.0, 0.5, 1.0, 1.0, 0.4, 0.5)),
            (2.0 / 3.0, AgentType(1.0, 0.8, 0.9, 1.5, 1.2, 0.3, 0.6)),
        ))
        with pytest.raises(NonReplicableWeights):
            mfg_convergence(d, [4])

    def test_replicate_layout(self):
        d = TypeDistribution(1.0, (
            (0.5, AgentType(1.0, 2.0, 0.5, 1.0, 1.0, 0.4, 0.5)),
            (0.5, AgentType(1.0, 0.8, 0.9, 1.5, 1.2, 0.3, 0.6)),
        ))
        pop = replicate(d, 6)
        assert pop.n == 6
        assert pop.agents[0] == d.types[0]
        assert pop.agents[5] == d.types[1]
