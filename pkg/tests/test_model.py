"""Reward tables, price memoization sharing, initial profiles, exploitability."""

import warnings

import numpy as np
import pytest

import lpmfg
from lpmfg.lp_core import evaluate_gamma, forward_occupation, best_response_dp
from lpmfg.model import build_model, build_reward_tables, exploitability


@pytest.fixture(scope="module")
def tiny_model():
    cfg = lpmfg.setting2(
        horizon_years=3.0, n_steps=12, adjustment_dates=(3, 6), stay_prob=((0.5, 0.5),),
        n_iterations=5,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_model(cfg)


@pytest.fixture(scope="module")
def tiny_profile(tiny_model):
    return tiny_model.initial_profile("never_stop")


class TestRewardTables:
    def test_zero_scrap_value_zero_stop_reward(self, tiny_model, tiny_profile):
        tables = build_reward_tables(tiny_profile, "conventional", tiny_model)
        np.testing.assert_array_equal(tables.g, 0.0)

    def test_renewable_terminal_reward_vanishes(self, tiny_model):
        # at the horizon the depreciated plant value exactly cancels the build cost
        assert tiny_model.g_renewable[-1] == pytest.approx(0.0, abs=1e-12)
        assert tiny_model.g_renewable[0] < 0.0  # entering at once costs capital

    def test_zero_price_gives_pure_fixed_cost(self, tiny_model, tiny_profile):
        rw = tiny_model.rewards
        tables = build_reward_tables(tiny_profile, "conventional", tiny_model)
        prices = [np.zeros_like(p) for p in tables.prices]
        zero_tables = tiny_model.reward_tables(tiny_profile, "conventional", prices=prices)
        for t, f in enumerate(zero_tables.f):
            expected = tiny_model.discount[t] * (-rw.kappa_conventional) * rw.dt
            np.testing.assert_allclose(f, expected, atol=1e-12)

    def test_price_pass_shared_between_populations(self, tiny_model, tiny_profile):
        prices = tiny_model.price_tables(tiny_profile)
        conv = tiny_model.reward_tables(tiny_profile, "conventional", prices=prices)
        ren = tiny_model.reward_tables(tiny_profile, "renewable", prices=prices)
        assert conv.prices is prices and ren.prices is prices

    def test_prices_within_cap(self, tiny_model, tiny_profile):
        for p in tiny_model.price_tables(tiny_profile):
            assert np.all(p >= 0.0)
            assert np.all(p <= tiny_model.supply.price_cap)

    def test_vectorized_prices_match_scalar_clearing(self, tiny_model, tiny_profile):
        from lpmfg.market import clearing_price, demand_peak_offpeak

        prices = tiny_model.price_tables(tiny_profile)
        tree = tiny_model.tree
        for t in (0, 4, 9):
            for u in range(tree.sizes[t]):
                z = tree.z[t][u]
                d_p, d_o = demand_peak_offpeak(tiny_model.demand, t, z, tree.spec.z0)
                for k, d in enumerate((d_p, d_o)):
                    scalar = clearing_price(
                        tiny_model.supply,
                        z,
                        d,
                        tiny_model.conventional_chain.grid,
                        tiny_profile.conventional.m[t][u],
                        tiny_model.renewable_chain.grid,
                        tiny_profile.renewable.m[t][u],
                        tiny_model.eta[t],
                    )
                    assert prices[t][u, k] == pytest.approx(scalar, abs=1e-7)

    def test_renewable_running_reward_sign(self, tiny_model, tiny_profile):
        # positive net revenue flows enter with a minus sign (profit forgone before entry)
        tables = build_reward_tables(tiny_profile, "renewable", tiny_model)
        rw = tiny_model.rewards
        grid = tiny_model.renewable_chain.grid
        t = 0
        avg = (
            tiny_model.demand.c_p * tables.prices[t][0, 0]
            + tiny_model.demand.c_o * tables.prices[t][0, 1]
        )
        expected = -tiny_model.discount[t] * (
            rw.revenue_scale * avg * grid - rw.kappa_renewable
        ) * rw.dt
        np.testing.assert_allclose(tables.f[t][0], expected, atol=1e-12)


class TestInitialProfiles:
    @pytest.mark.parametrize("kind", ["never_stop", "immediate_stop", "uniform"])
    def test_feasible(self, tiny_model, kind):
        from lpmfg.lp_core import assemble_constraints, constraint_residual

        profile = tiny_model.initial_profile(kind)
        for population in ("conventional", "renewable"):
            problem = assemble_constraints(tiny_model.chain(population), tiny_model.tree)
            occ = getattr(profile, population)
            assert constraint_residual(problem, occ) < 1e-12
            assert occ.flow_residual(tiny_model.tree) < 1e-12

    def test_unknown_kind(self, tiny_model):
        with pytest.raises(ValueError, match="unknown initial profile"):
            tiny_model.initial_profile("nope")


class TestExploitability:
    def test_profile_independent_rewards_fixed_point(self, tiny_model):
        # freeze rewards at some profile, best-respond once: the response has
        # zero exploitability against those rewards
        profile = tiny_model.initial_profile("never_stop")
        prices = tiny_model.price_tables(profile)
        responses = {}
        for population in ("conventional", "renewable"):
            tables = tiny_model.reward_tables(profile, population, prices=prices)
            value, rule = best_response_dp(tables, tiny_model.chain(population), tiny_model.tree)
            occ = forward_occupation(rule, tiny_model.chain(population), tiny_model.tree)
            assert value - evaluate_gamma(tables, occ, tiny_model.tree) == pytest.approx(
                0.0, abs=1e-9
            )
            responses[population] = occ

    def test_nonnegative_at_arbitrary_profile(self, tiny_model):
        for kind in ("never_stop", "uniform", "immediate_stop"):
            eps = exploitability(tiny_model.initial_profile(kind), tiny_model)
            assert eps[0] >= -1e-9 and eps[1] >= -1e-9

    def test_never_stop_renewable_wants_in(self, tiny_model):
        eps = exploitability(tiny_model.initial_profile("never_stop"), tiny_model)
        assert eps[1] > 1.0  # entry is strictly valuable at untouched prices


def test_full_instance_shapes():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = build_model(lpmfg.setting2())
    assert model.tree.sizes[-1] == 64
    assert sum(model.tree.sizes) == 1462
    assert model.conventional_chain.n_states == 13
    assert model.renewable_chain.n_states == 14


def test_headroom_warning_recorded_on_default_config():
    with pytest.warns(UserWarning, match="saturate at the cap"):
        build_model(lpmfg.setting2())
