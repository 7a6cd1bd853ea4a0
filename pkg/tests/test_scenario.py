import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from pmaccel import distributions as dist
from pmaccel.scenario import (
    PRESETS,
    EgoConfig,
    LaneChangeEvent,
    ScenarioModel,
    SpeedSampler,
    draw_inputs,
    indicator,
    sample_event,
    sample_events,
    simulate,
    simulate_batch,
    synthetic_model,
)

EGO = EgoConfig()


# --- simulator golden cases --------------------------------------------------------


def test_mild_closure_is_absorbed():
    res = simulate(LaneChangeEvent(20.0, 100.0, 20.0))
    assert res.crashed == 0
    # golden value: the ACC settles toward the 1.5 s * 20 m/s headway gap
    assert res.min_range == pytest.approx(34.34486081797002, abs=1e-9)


def test_no_closure_keeps_initial_range():
    res = simulate(LaneChangeEvent(20.0, 2.0, math.inf))
    assert res.crashed == 0
    assert res.min_range == 2.0


def test_kinematically_unavoidable_crash():
    res = simulate(LaneChangeEvent(15.0, 2.0, 0.1))
    assert res.crashed == 1
    assert res.min_range == 0.0


def test_indicator_matches_simulate():
    events = [LaneChangeEvent(20.0, 100.0, 20.0), LaneChangeEvent(20.0, 2.0, math.inf), LaneChangeEvent(15.0, 2.0, 0.1)]
    assert [indicator(e) for e in events] == [0, 0, 1]


def test_trace_layout():
    res = simulate(LaneChangeEvent(20.0, 30.0, 2.0))
    assert res.columns == ("t", "range", "range_rate", "ego_speed", "ego_accel")
    t = res.trace[:, 0]
    assert t[0] == 0.0 and np.all(np.diff(t) >= 0)
    assert res.trace[0, 1] == 30.0
    assert res.trace[0, 2] == pytest.approx(-15.0)
    assert np.all(res.trace[:, 3] >= 0)
    assert res.min_range == pytest.approx(res.trace[:, 1].min(), abs=1e-9)


def test_event_validation():
    with pytest.raises(ValueError):
        LaneChangeEvent(20.0, -1.0, 2.0)
    assert LaneChangeEvent(20.0, 30.0, 2.0).range_rate == -15.0


def test_ego_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        EgoConfig(step=0.2)
    with pytest.raises(ValueError):
        EgoConfig(max_decel=0.0)
    ego = EgoConfig(headway=1.2, delay=0.2)
    assert EgoConfig.from_dict(ego.to_dict()) == ego


# --- invariants -------------------------------------------------------------------


@given(
    v=st.floats(1.0, 40.0),
    r=st.floats(0.5, 150.0),
    ttc=st.one_of(st.floats(0.05, 50.0), st.just(math.inf)),
)
def test_kinematic_sanity(v, r, ttc):
    res = simulate(LaneChangeEvent(v, r, ttc))
    assert res.min_range <= r
    assert res.min_range >= 0.0
    assert (res.crashed == 1) == (res.min_range <= 0.0)


def test_simulation_is_bit_exact_deterministic():
    rng = np.random.default_rng(3)
    v, r, t = rng.uniform(5, 35, 500), rng.uniform(1, 80, 500), rng.uniform(0.3, 10, 500)
    a = simulate_batch(v, r, t)
    b = simulate_batch(v, r, t)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    e = LaneChangeEvent(12.0, 25.0, 1.3)
    assert np.array_equal(simulate(e).trace, simulate(e).trace)


def test_batch_matches_single_runs():
    rng = np.random.default_rng(4)
    v, r, t = rng.uniform(5, 35, 50), rng.uniform(1, 80, 50), rng.uniform(0.3, 10, 50)
    crashed, mr = simulate_batch(v, r, t)
    for i in range(50):
        res = simulate(LaneChangeEvent(v[i], r[i], t[i]))
        assert res.crashed == crashed[i] and res.min_range == mr[i]


def probe_events(n=100, seed=11):
    """Encounters concentrated near the crash boundary, plus easy ones."""
    rng = np.random.default_rng(seed)
    return rng.uniform(5, 35, n), rng.uniform(2, 80, n), rng.uniform(0.4, 4.0, n)


def test_step_halving_changes_min_range_little():
    v, r, t = probe_events()
    _, coarse = simulate_batch(v, r, t, EGO)
    _, fine = simulate_batch(v, r, t, EgoConfig(step=EGO.step / 2))
    assert np.max(np.abs(coarse - fine)) < 0.05


def test_crash_set_is_an_up_set_in_range_at_fixed_ttc():
    # closing speed R/TTC grows with R, so a longer cut-in range is worse
    ranges = np.linspace(1.0, 80.0, 160)
    for v in (8.0, 20.0, 32.0):
        for ttc in (0.3, 0.6, 1.0, 1.5, 2.0, 3.0):
            crashed, _ = simulate_batch(np.full(ranges.size, v), ranges, np.full(ranges.size, ttc))
            c = crashed.astype(int)
            assert np.all(np.diff(c) >= 0), (v, ttc)


def test_crash_set_is_a_down_set_in_range_at_fixed_range_rate():
    ranges = np.linspace(1.0, 80.0, 160)
    for v in (8.0, 20.0, 32.0):
        for rdot in (-5.0, -10.0, -20.0, -30.0):
            crashed, _ = simulate_batch(np.full(ranges.size, v), ranges, ranges / -rdot)
            c = crashed.astype(int)
            assert np.all(np.diff(c) <= 0), (v, rdot)


# --- sampling ---------------------------------------------------------------------


def test_degenerate_speed_selects_one_segment():
    base = synthetic_model("desk-rare")
    model = ScenarioModel(SpeedSampler("empirical", values=(20.0,)), base.ttc_inv, base.range_inv)
    rng = np.random.default_rng(0)
    v, ttc_inv, _, seg = draw_inputs(model, rng.random((3, 20_000)))
    assert np.all(v == 20.0) and np.all(seg == 1)
    assert stats.kstest(ttc_inv, model.ttc_inv[1].cdf).statistic < 1.63 / math.sqrt(ttc_inv.size)


def test_range_and_ttc_uncorrelated():
    v, r, t = sample_events(synthetic_model("desk-rare"), np.random.default_rng(1), 100_000)
    assert abs(np.corrcoef(r, t)[0, 1]) < 0.01


def test_inverse_range_marginal_ks():
    model = synthetic_model("desk-rare")
    _, r, _ = sample_events(model, np.random.default_rng(2), 100_000)
    assert stats.kstest(1.0 / r, model.range_inv.cdf).statistic < 1.63 / math.sqrt(r.size)


def test_sample_event_is_an_event():
    e = sample_event(synthetic_model("desk-common"), np.random.default_rng(0))
    assert isinstance(e, LaneChangeEvent) and 5.0 <= e.v_l <= 35.0


def test_proposal_replaces_named_variables():
    model = synthetic_model("desk-rare")
    u = np.random.default_rng(5).random((3, 1000))
    q = dist.BoundedExponential(1.0, 0.0125, math.inf)
    _, _, ri, _ = draw_inputs(model, u, {"range_inv": q})
    np.testing.assert_array_equal(ri, q.ppf(u[2]))


# --- presets ---------------------------------------------------------------------------


@pytest.mark.parametrize("preset", PRESETS)
def test_preset_round_trip(preset):
    model = synthetic_model(preset, seed=3)
    back = ScenarioModel.loads(model.dumps())
    assert back == model
    assert back.dumps() == model.dumps()


def test_preset_determinism_and_seed_dependence():
    assert synthetic_model("desk-rare-pool", 1) == synthetic_model("desk-rare-pool", 1)
    assert synthetic_model("desk-rare-pool", 1).speed != synthetic_model("desk-rare-pool", 2).speed


def test_unknown_preset():
    with pytest.raises(ValueError, match="desk-rare"):
        synthetic_model("nope")


def test_model_validation():
    base = synthetic_model("desk-rare")
    with pytest.raises(ValueError):
        ScenarioModel(base.speed, base.ttc_inv[:2], base.range_inv)
    with pytest.raises(ValueError):
        ScenarioModel(SpeedSampler("uniform", 1.0, 40.0), base.ttc_inv, base.range_inv)
