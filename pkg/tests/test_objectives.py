import numpy as np
import pytest

from dnems.network import Branch, Bus, DgSpec, EssSpec, make_network
from dnems.objectives import (
    DecisionVector,
    decision_bounds,
    ens_scenario,
    ess_trajectory,
    evaluate,
    evaluate_scenario,
    penalty,
    profit_analysis,
)
from dnems.scenarios import Scenario, ScenarioSet, default_forecast, deterministic_set


def spec(**kw):
    base = dict(bus=2, w_min=100.0, w_max=1000.0, p_charge_max=200.0,
                p_discharge_max=200.0, eff_charge=0.9, eff_discharge=0.9, w_initial=500.0)
    base.update(kw)
    return EssSpec(**base)


def flat_scenario(load=1.0, pv=0.0, price=0.1):
    return Scenario(
        load_factor=np.full(24, load),
        pv_factor=np.full(24, pv),
        price=np.full(24, price),
        probability=1.0,
    )


class TestEssTrajectory:
    def test_charge_hand_value(self):
        power = np.zeros((1, 24))
        power[0, 0] = 100.0  # charge 100 kW for one hour at 0.9 efficiency
        traj = ess_trajectory(DecisionVector(np.zeros((0, 24)), power), [spec()])
        assert traj.energy[0, 0] == 500.0
        assert traj.energy[0, 1] == pytest.approx(590.0)

    def test_charge_then_discharge(self):
        power = np.zeros((1, 24))
        power[0, 0] = 100.0
        power[0, 1] = -90.0  # deliver 90 kW for one hour at 0.9 efficiency
        traj = ess_trajectory(DecisionVector(np.zeros((0, 24)), power), [spec()])
        assert traj.energy[0, 1] == pytest.approx(590.0)
        assert traj.energy[0, 2] == pytest.approx(490.0)

    def test_idle_constant(self):
        traj = ess_trajectory(DecisionVector(np.zeros((0, 24)), np.zeros((1, 24))), [spec()])
        assert np.allclose(traj.energy, 500.0)
        assert traj.feasible
        assert np.all(traj.violations == 0)

    def test_overshoot_flagged(self):
        power = np.full((1, 24), 200.0)  # charge flat out all day
        traj = ess_trajectory(DecisionVector(np.zeros((0, 24)), power), [spec()])
        assert not traj.feasible
        # 500 + 180/h crosses 1000 kWh during hour 3
        assert traj.violations[0, 2] == pytest.approx(40.0)

    def test_recompute_identical(self, rng):
        for _ in range(20):
            power = rng.uniform(-200, 200, size=(2, 24))
            x = DecisionVector(np.zeros((0, 24)), power)
            specs = [spec(), spec(w_initial=300.0)]
            a = ess_trajectory(x, specs)
            b = ess_trajectory(x, specs)
            assert np.array_equal(a.energy, b.energy)
            assert np.array_equal(a.violations, b.violations)

    def test_dimension_mismatch(self):
        x = DecisionVector(np.zeros((0, 24)), np.zeros((2, 24)))
        with pytest.raises(ValueError, match="does not match"):
            ess_trajectory(x, [spec()])


class TestPenalty:
    def test_no_violations(self):
        assert penalty({"voltage": np.zeros(5), "flow": []}) == 0.0

    def test_hand_value(self):
        assert penalty({"voltage": [0.02]}, {"voltage": 1e6}) == pytest.approx(400.0)

    def test_quadratic_scaling(self):
        one = penalty({"flow": [0.1]}, {"flow": 10.0})
        doubled = penalty({"flow": [0.2]}, {"flow": 10.0})
        assert doubled == pytest.approx(4 * one)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError, match="negative penalty weight"):
            penalty({"voltage": [0.1]}, {"voltage": -1.0})


def dg_test_network():
    """Near-lossless feeder with one 150 kW load and a DG at the load bus."""
    return make_network(
        buses=[Bus(id=1), Bus(id=2, p_load=150.0, q_load=0.0)],
        branches=[Branch(1, 2, r=1e-5, x=1e-5)],
        dgs=[DgSpec(bus=2, p_min=0.0, p_max=500.0, marginal_cost=0.08)],
        v_min=0.5,
        v_max=1.5,
    )


class TestEvaluateScenario:
    def test_hour_cost_hand_value(self):
        # 100 kW from the grid at 0.10 plus 50 kW of DG at 0.08 -> 14.00 $/h
        net = dg_test_network()
        x = DecisionVector(np.full((1, 24), 50.0), np.zeros((0, 24)))
        bd = evaluate_scenario(net, x, flat_scenario(price=0.1))
        hour_cost = bd.grid_cost[0] + bd.dg_cost[0]
        assert bd.p_slack[0] == pytest.approx(100.0, abs=0.01)
        assert hour_cost == pytest.approx(14.0, abs=1e-3)
        assert bd.cost_s == pytest.approx(24 * 14.0, abs=0.05)

    def test_empty_system(self):
        net = make_network(
            [Bus(id=1), Bus(id=2, p_load=0.0)],
            [Branch(1, 2, 0.01, 0.01)],
            v_min=0.5,
            v_max=1.5,
        )
        x = DecisionVector(np.zeros((0, 24)), np.zeros((0, 24)))
        bd = evaluate_scenario(net, x, flat_scenario())
        assert bd.cost_s == pytest.approx(0.0, abs=1e-9)
        assert bd.penalty == 0.0
        assert bd.converged_hours == 24

    def test_dimension_mismatch(self):
        net = dg_test_network()
        x = DecisionVector(np.zeros((3, 24)), np.zeros((0, 24)))
        with pytest.raises(ValueError, match="does not match"):
            evaluate_scenario(net, x, flat_scenario())

    def test_power_balance_residual(self, ieee69):
        # converged hours satisfy slack + PV + DG + ESS = loss + demand
        fc = default_forecast()
        s = deterministic_set(fc).scenarios[0]
        rng = np.random.default_rng(0)
        x = DecisionVector(
            rng.uniform(0, 500, size=(4, 24)), rng.uniform(-750, 750, size=(3, 24))
        )
        bd = evaluate_scenario(ieee69, x, s)
        assert bd.converged_hours == 24
        demand = sum(b.p_load for b in ieee69.buses) * s.load_factor
        dg = x.dg_power.sum(axis=0)
        ess = x.ess_power.sum(axis=0)  # positive = charging, i.e. extra demand
        residual = bd.p_slack + bd.pv_injection + dg - ess - bd.p_loss - demand
        assert np.max(np.abs(residual)) <= 10 * 1e-6 * ieee69.base_mva * 1000


class TestEns:
    def test_hand_value(self, two_bus):
        x = DecisionVector(np.zeros((0, 24)), np.zeros((0, 24)))
        # 100 kW net at bus 2, one branch with 2.0 + 0.5 h/yr
        s = flat_scenario(load=100.0 / 150.0)
        assert ens_scenario(two_bus, x, s) == pytest.approx(250.0, abs=1e-9)

    def test_local_dg_floors_at_zero(self):
        net = dg_test_network()
        x = DecisionVector(np.full((1, 24), 500.0), np.zeros((0, 24)))
        assert ens_scenario(net, x, flat_scenario()) == 0.0

    def test_repair_time_linearity(self, two_bus):
        doubled = make_network(
            buses=list(two_bus.buses),
            branches=[
                Branch(b.from_bus, b.to_bus, b.r, b.x, b.s_max, b.at_repair * 2, b.at_restoration * 2)
                for b in two_bus.branches
            ],
            v_min=two_bus.v_min,
            v_max=two_bus.v_max,
        )
        x = DecisionVector(np.zeros((0, 24)), np.zeros((0, 24)))
        s = flat_scenario()
        assert ens_scenario(doubled, x, s) == pytest.approx(2 * ens_scenario(two_bus, x, s))
        # cost is blind to reliability times (the mirror of price-blind ENS)
        sset = ScenarioSet((Scenario(s.load_factor, s.pv_factor, s.price, 1.0),))
        assert evaluate(doubled, x, sset).f1 == evaluate(two_bus, x, sset).f1

    def test_discharge_offsets_load(self, ieee69):
        idle = DecisionVector(np.zeros((4, 24)), np.zeros((3, 24)))
        discharging = DecisionVector(np.zeros((4, 24)), np.full((3, 24), -20.0))
        s = deterministic_set(default_forecast()).scenarios[0]
        assert ens_scenario(ieee69, discharging, s) <= ens_scenario(ieee69, idle, s)


class TestEvaluateSet:
    def test_singleton_equals_scenario(self, ieee69, rng):
        s = deterministic_set(default_forecast()).scenarios[0]
        sset = ScenarioSet((s,))
        x = DecisionVector(rng.uniform(0, 300, (4, 24)), rng.uniform(-200, 200, (3, 24)))
        f = evaluate(ieee69, x, sset)
        bd = evaluate_scenario(ieee69, x, s)
        assert f.f1 == pytest.approx(bd.cost_s, rel=1e-12)
        assert f.f2 == pytest.approx(bd.ens_s, rel=1e-12)
        assert f.penalty == pytest.approx(bd.penalty, rel=1e-12)

    def test_weighted_mean(self, two_bus):
        x = DecisionVector(np.zeros((0, 24)), np.zeros((0, 24)))
        s1 = flat_scenario(load=0.5)
        s2 = flat_scenario(load=1.0)
        pair = ScenarioSet(
            (
                Scenario(s1.load_factor, s1.pv_factor, s1.price, 0.5),
                Scenario(s2.load_factor, s2.pv_factor, s2.price, 0.5),
            )
        )
        f = evaluate(two_bus, x, pair)
        a = evaluate_scenario(two_bus, x, s1)
        b = evaluate_scenario(two_bus, x, s2)
        assert f.f1 == pytest.approx(0.5 * a.cost_s + 0.5 * b.cost_s)
        assert f.f2 == pytest.approx(0.5 * a.ens_s + 0.5 * b.ens_s)

    def test_duplicate_split_invariance(self, two_bus):
        # splitting a scenario's mass across identical copies changes nothing
        x = DecisionVector(np.zeros((0, 24)), np.zeros((0, 24)))
        s = flat_scenario()
        whole = ScenarioSet((Scenario(s.load_factor, s.pv_factor, s.price, 1.0),))
        split = ScenarioSet(
            (
                Scenario(s.load_factor, s.pv_factor, s.price, 0.25),
                Scenario(s.load_factor, s.pv_factor, s.price, 0.75),
            )
        )
        a, b = evaluate(two_bus, x, whole), evaluate(two_bus, x, split)
        assert a.f1 == pytest.approx(b.f1, rel=1e-12)
        assert a.f2 == pytest.approx(b.f2, rel=1e-12)

    def test_objective_separation(self, ieee69, rng):
        x = DecisionVector(rng.uniform(0, 300, (4, 24)), np.zeros((3, 24)))
        fc = default_forecast()
        base = deterministic_set(fc).scenarios[0]
        pricier = Scenario(base.load_factor, base.pv_factor, base.price * 1.7, 1.0)
        f_base = evaluate(ieee69, x, ScenarioSet((base,)))
        f_pricier = evaluate(ieee69, x, ScenarioSet((pricier,)))
        assert f_pricier.f2 == f_base.f2  # reliability blind to prices
        assert f_pricier.f1 != f_base.f1


class TestDecisionBounds:
    def test_shapes_and_values(self, ieee69):
        lower, upper = decision_bounds(ieee69)
        assert lower.shape == upper.shape == ((4 + 3) * 24,)
        assert np.all(lower[: 4 * 24] == 0.0)
        assert np.all(upper[: 4 * 24] == 500.0)
        assert np.all(lower[4 * 24 :] == -750.0)
        assert np.all(upper[4 * 24 :] == 750.0)

    def test_flatten_roundtrip(self, rng):
        x = DecisionVector(rng.normal(size=(4, 24)), rng.normal(size=(3, 24)))
        back = DecisionVector.from_flat(x.flatten(), 4, 3)
        assert np.array_equal(back.dg_power, x.dg_power)
        assert np.array_equal(back.ess_power, x.ess_power)


class TestProfit:
    def test_defaults_match_source_constants(self):
        report = profit_analysis(toc_old=100.0, toc_new=90.0)
        assert report.c_npv == 1.07
        assert report.investment == 9_751_200.0

    def test_linear_cumulative(self):
        report = profit_analysis(toc_old=200.0, toc_new=100.0, investment=1000.0, years=5, c_npv=1.0)
        assert report.annual_delta_toc == pytest.approx(36_500.0)
        assert np.allclose(report.cumulative, 36_500.0 * np.arange(1, 6))
        assert report.payback_year == 1
        assert report.net_profit == pytest.approx(5 * 36_500.0 - 1000.0)

    def test_no_payback(self):
        report = profit_analysis(toc_old=100.0, toc_new=100.0, investment=1.0, years=3)
        assert report.payback_year is None
        assert report.net_profit == pytest.approx(-1.0)

    def test_payback_boundary(self):
        # cumulative hits the investment exactly at year 4
        report = profit_analysis(toc_old=1.0, toc_new=0.0, investment=4 * 1.07 * 365.0, years=10)
        assert report.payback_year == 4

    def test_bad_years(self):
        with pytest.raises(ValueError, match="years"):
            profit_analysis(100.0, 90.0, years=0)
