"""Averaging weights, feasibility preservation, determinism and the LPFP loop."""

import warnings

import numpy as np
import pytest

import lpmfg
from lpmfg.fictitious_play import FPState, average, average_profile, check_divergence, lpfp
from lpmfg.lp_core import assemble_constraints, constraint_residual, forward_occupation
from lpmfg.model import build_model

from helpers import make_chain, make_tree, random_rule


@pytest.fixture(scope="module")
def tiny_model():
    cfg = lpmfg.setting2(
        horizon_years=3.0, n_steps=12, adjustment_dates=(3, 6), stay_prob=((0.5, 0.5),)
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_model(cfg)


class TestAverage:
    def test_first_iteration_replaces(self):
        rng = np.random.default_rng(0)
        chain, tree = make_chain(rng, 3), make_tree(2, (1,))
        old = forward_occupation(random_rule(rng, chain, tree), chain, tree)
        new = forward_occupation(random_rule(rng, chain, tree), chain, tree)
        avg = average(old, new, 0)
        for a, b in zip(avg.mu, new.mu):
            np.testing.assert_array_equal(a, b)

    def test_second_iteration_equal_weights(self):
        rng = np.random.default_rng(1)
        chain, tree = make_chain(rng, 3), make_tree(2, (1,))
        old = forward_occupation(random_rule(rng, chain, tree), chain, tree)
        new = forward_occupation(random_rule(rng, chain, tree), chain, tree)
        avg = average(old, new, 1)
        for a, o, n in zip(avg.m, old.m, new.m):
            np.testing.assert_allclose(a, 0.5 * o + 0.5 * n, atol=1e-15)

    def test_residual_no_worse_than_inputs(self):
        rng = np.random.default_rng(2)
        chain, tree = make_chain(rng, 3), make_tree(3, (1, 2))
        problem = assemble_constraints(chain, tree)
        old = forward_occupation(random_rule(rng, chain, tree), chain, tree)
        new = forward_occupation(random_rule(rng, chain, tree), chain, tree)
        bound = max(constraint_residual(problem, old), constraint_residual(problem, new))
        for ell in (0, 1, 5):
            avg = average(old, new, ell)
            assert constraint_residual(problem, avg) <= bound + 1e-15


def test_check_divergence_triggers():
    series = [1.0] * 21 + [50.0]
    with pytest.raises(RuntimeError, match="stale reward tables or solver failure"):
        check_divergence(series)


def test_check_divergence_quiet_on_decay():
    series = [1.0 / (i + 1) for i in range(100)]
    check_divergence(series)  # no raise


def test_check_divergence_quiet_at_zero():
    check_divergence([0.0] * 40)


class TestLpfp:
    def test_two_iterations_average_of_best_responses(self, tiny_model):
        state = lpfp(tiny_model, 2, cross_check_every=0, validate=False)
        # rebuild the two best responses by hand and compare the average
        from lpmfg.lp_core import best_response_dp
        from lpmfg.model import POPULATIONS

        profile = tiny_model.initial_profile("never_stop")
        responses = []
        for _ in range(2):
            prices = tiny_model.price_tables(profile)
            occs = {}
            for population in POPULATIONS:
                tables = tiny_model.reward_tables(profile, population, prices=prices)
                _, rule = best_response_dp(tables, tiny_model.chain(population), tiny_model.tree)
                occs[population] = forward_occupation(
                    rule, tiny_model.chain(population), tiny_model.tree
                )
            responses.append(occs)
            profile = average_profile(
                profile, lpmfg.MeanFieldProfile(**occs), len(responses) - 1
            )
        for t in range(tiny_model.horizon):
            expected = 0.5 * (
                responses[0]["conventional"].m[t] + responses[1]["conventional"].m[t]
            )
            np.testing.assert_allclose(state.profile.conventional.m[t], expected, atol=1e-12)

    def test_profile_independent_rewards_converge_immediately(self, tiny_model, monkeypatch):
        # with frozen prices the rewards no longer depend on the profile, so the
        # profile after one update is already a best response to itself
        frozen = tiny_model.price_tables(tiny_model.initial_profile("never_stop"))
        monkeypatch.setattr(tiny_model, "price_tables", lambda profile: frozen)
        state = lpfp(tiny_model, 4, cross_check_every=0, validate=False)
        assert max(state.exploitability_history[0]) > 1.0
        for eps in state.exploitability_history[1:]:
            assert max(eps) == pytest.approx(0.0, abs=1e-9)

    def test_minimum_so_far_nonincreasing(self, tiny_model):
        state = lpfp(tiny_model, 40, cross_check_every=0, validate=False)
        mx = [max(e) for e in state.exploitability_history]
        running = np.minimum.accumulate(mx)
        assert np.all(np.diff(running) <= 0.0 + 1e-15)

    def test_deterministic_repeatability(self, tiny_model):
        a = lpfp(tiny_model, 15, cross_check_every=0, validate=False)
        b = lpfp(tiny_model, 15, cross_check_every=0, validate=False)
        assert a.exploitability_history == b.exploitability_history

    def test_feasibility_validated_every_iteration(self, tiny_model):
        state = lpfp(tiny_model, 10, cross_check_every=0, validate=True)
        assert len(state.residual_history) == 10
        assert max(state.residual_history) < 1e-9

    def test_lp_route_matches_dp_route_values(self, tiny_model):
        dp_state = lpfp(tiny_model, 5, solver="dp", cross_check_every=1, validate=False)
        lp_state = lpfp(tiny_model, 5, solver="lp", cross_check_every=1, validate=False)
        for (ec, er), (lc, lr) in zip(dp_state.value_history, lp_state.value_history):
            assert lc == pytest.approx(ec, rel=1e-7)
            assert lr == pytest.approx(er, rel=1e-7)

    def test_early_exit(self, tiny_model):
        state = lpfp(
            tiny_model, 5000, cross_check_every=0, validate=False, early_exit_rel=2e-2
        )
        assert state.iterate < 5000
        eps0 = max(state.exploitability_history[0])
        assert max(state.exploitability_history[-1]) < 2e-2 * eps0

    def test_custom_initial_profile(self, tiny_model):
        profile = tiny_model.initial_profile("uniform")
        state = lpfp(tiny_model, 3, initial=profile, cross_check_every=0, validate=False)
        assert state.iterate == 3

    def test_history_rows_shape(self, tiny_model):
        state = lpfp(tiny_model, 4, cross_check_every=0, validate=False)
        rows = state.history_rows()
        assert len(rows) == 4
        assert len(rows[0]) == 7
        assert rows[2][0] == 2

    def test_rejects_unknown_solver(self, tiny_model):
        with pytest.raises(ValueError, match="unknown solver"):
            lpfp(tiny_model, 1, solver="magic")
