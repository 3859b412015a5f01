import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from myoloop.errors import TrialFinishedError
from myoloop.flt import (
    SUCCESS,
    TIMEOUT,
    CursorConfig,
    FltConfig,
    TargetSpec,
    Trial,
    TrialRecord,
    adjudicate,
    assign_locations,
    completion_rate,
    label_velocity,
    overshoot,
    path_efficiency,
    sample_targets,
    throughput,
)
from myoloop.movements import (
    HAND_OPEN,
    KEY_GRASP,
    POWER_GRASP,
    REST,
    TRIPOD_GRASP,
    WRIST_PRONATE,
    WRIST_SUPINATE,
)
from myoloop.session import plan_session

from oracles import oracle_path_efficiency, oracle_throughput

CFG = FltConfig()


def spec_at(r=0.5, phi=0.5, gesture=POWER_GRASP, hw=CFG.half_width):
    return TargetSpec(gesture=gesture, target=CursorConfig(r, phi), half_width=hw)


def make_record(trajectory, outcome=SUCCESS, target=None, t_completion=3.0, labels=None):
    trajectory = [tuple(p) for p in trajectory]
    if target is None:
        target = CursorConfig(*trajectory[-1])
    return TrialRecord(
        prompt=POWER_GRASP,
        s0=CursorConfig(*trajectory[0]),
        target=target,
        half_width=CFG.half_width,
        trajectory=trajectory,
        labels=labels or [],
        outcome=outcome,
        t_completion=t_completion,
    )


class TestSampleTargets:
    def test_stage_a_block(self):
        targets = sample_targets(plan_session(1), seed=0)
        assert len(targets) == 18
        assert all(t.gesture == POWER_GRASP for t in targets)
        above = sum(t.target.phi > CFG.start.phi for t in targets)
        assert above == 9

    def test_stage_b_counts(self):
        targets = sample_targets(plan_session(5), seed=1)
        assert len(targets) == 36
        counts = {}
        for t in targets:
            counts[t.gesture] = counts.get(t.gesture, 0) + 1
        assert counts == {POWER_GRASP: 12, TRIPOD_GRASP: 12, KEY_GRASP: 12}

    def test_stage_c_counts_near_equal(self):
        targets = sample_targets(plan_session(9), seed=2)
        assert len(targets) == 54
        counts = {}
        for t in targets:
            counts[t.gesture] = counts.get(t.gesture, 0) + 1
        assert len(counts) == 5
        assert max(counts.values()) - min(counts.values()) <= 1

    def test_rotation_balance_within_one(self):
        for session, seed in ((1, 0), (5, 3), (9, 4)):
            targets = sample_targets(plan_session(session), seed=seed)
            above = sum(t.target.phi > CFG.start.phi for t in targets)
            assert abs(above - (len(targets) - above)) <= 1

    def test_ranges(self):
        targets = sample_targets(plan_session(9), seed=5)
        for t in targets:
            assert 0.25 <= t.target.r <= 0.75
            assert 0.25 <= t.target.phi <= 0.75

    def test_deterministic_under_seed(self):
        a = sample_targets(plan_session(5), seed=11)
        b = sample_targets(plan_session(5), seed=11)
        assert a == b
        c = sample_targets(plan_session(5), seed=12)
        assert a != c

    def test_trials_per_gesture_override(self):
        targets = sample_targets(plan_session(5), trials_per_gesture=4, seed=0)
        assert len(targets) == 12

    def test_locations_cycle(self):
        locs = assign_locations(7, "right")
        assert locs == [5, 6, 1, 5, 6, 1, 5]
        assert set(assign_locations(6, "left")) == {5, 4, 3}


class TestStepRules:
    def test_rest_no_motion(self):
        trial = Trial(spec_at())
        trial.step(REST)
        assert trial.cursor == CFG.start
        assert not trial.started

    def test_prompted_gesture_closes(self):
        trial = Trial(spec_at())
        trial.step(POWER_GRASP)
        assert trial.cursor.r == pytest.approx(1.0 - 0.4 * 0.05)
        assert trial.started

    def test_hand_open_opens_and_clamps(self):
        trial = Trial(spec_at())
        trial.step(HAND_OPEN)
        assert trial.cursor.r == 1.0  # clamped at the top

    def test_wrist_rotation_handedness(self):
        trial = Trial(spec_at())
        trial.step(WRIST_PRONATE)
        assert trial.cursor.phi == pytest.approx(0.5 - 0.02)
        left = Trial(spec_at(), FltConfig(handedness="left"))
        left.step(WRIST_PRONATE)
        assert left.cursor.phi == pytest.approx(0.5 + 0.02)

    def test_wrong_grasp_no_motion_counts_misclassification(self):
        trial = Trial(spec_at(gesture=POWER_GRASP))
        trial.step(TRIPOD_GRASP)
        assert trial.cursor == CFG.start
        assert trial.misclassifications == 1
        assert trial.started  # non-rest classification starts the clock

    def test_wrist_not_counted_as_misclassification(self):
        trial = Trial(spec_at())
        trial.step(WRIST_SUPINATE)
        assert trial.misclassifications == 0

    def test_clock_starts_at_first_non_rest(self):
        trial = Trial(spec_at())
        for _ in range(10):
            trial.step(REST)
        assert trial.elapsed_s == 0.0
        trial.step(POWER_GRASP)
        assert trial.elapsed_s == pytest.approx(0.05)

    def test_velocity_map(self):
        assert label_velocity(POWER_GRASP, POWER_GRASP, CFG) == (-0.4, 0.0)
        assert label_velocity(HAND_OPEN, POWER_GRASP, CFG) == (0.4, 0.0)
        assert label_velocity(KEY_GRASP, POWER_GRASP, CFG) == (0.0, 0.0)
        assert label_velocity(REST, POWER_GRASP, CFG) == (0.0, 0.0)


class TestAdjudication:
    def close_then(self, labels, target_r=0.8):
        """Close from 1.0 to target_r exactly, then run the given labels."""
        steps = round((1.0 - target_r) / 0.02)
        trial = Trial(spec_at(r=target_r, phi=0.5))
        for _ in range(steps):
            trial.step(POWER_GRASP)
        for label in labels:
            if trial.outcome is not None:
                break
            trial.step(label)
        return trial

    def test_dwell_success(self):
        trial = self.close_then([REST] * 20)
        assert trial.outcome == SUCCESS
        assert trial.t_completion == pytest.approx((10 + 20) * 0.05)

    def test_dwell_just_short_not_success(self):
        trial = self.close_then([REST] * 19)
        assert trial.outcome is None

    def test_dwell_interrupted_resets(self):
        trial = self.close_then([REST] * 18 + [WRIST_PRONATE] + [REST] * 19)
        assert trial.outcome is None
        trial.step(REST)
        assert trial.outcome == SUCCESS

    def test_timeout_when_never_reaching(self):
        trial = Trial(spec_at(r=0.3))
        trial.step(POWER_GRASP)
        for _ in range(299):
            trial.step(HAND_OPEN)
        assert trial.outcome == TIMEOUT

    def test_timeout_without_any_start(self):
        trial = Trial(spec_at())
        for _ in range(300):
            trial.step(REST)
        assert trial.outcome == TIMEOUT

    def test_success_exactly_at_time_limit(self):
        # reach the band at step 280, dwell 20 steps: success at step 300 (15.0 s)
        labels = (
            [POWER_GRASP] * 10 + [REST] * 245 + [POWER_GRASP] * 25 + [REST] * 20
        )
        trial = Trial(spec_at(r=0.3))
        trial.run(labels)
        assert trial.outcome == SUCCESS
        assert trial.t_completion == pytest.approx(15.0)

    def test_dwell_crossing_time_limit_is_timeout(self):
        # band reached at step 281: only 19 dwell steps fit before the limit
        labels = (
            [POWER_GRASP] * 10 + [REST] * 246 + [POWER_GRASP] * 25 + [REST] * 20
        )
        trial = Trial(spec_at(r=0.3))
        outcome = trial.run(labels)
        assert outcome == TIMEOUT

    def test_step_after_outcome_raises(self):
        trial = self.close_then([REST] * 20)
        with pytest.raises(TrialFinishedError):
            trial.step(REST)

    def test_adjudicate_recomputes_outcome(self):
        trial = self.close_then([REST] * 20)
        record = trial.record()
        assert adjudicate(record) == SUCCESS
        timeout_trial = Trial(spec_at(r=0.3))
        timeout_trial.run([POWER_GRASP] + [HAND_OPEN] * 350)
        record = timeout_trial.record()
        assert adjudicate(record) == TIMEOUT

    def test_outcome_determinism(self):
        labels = [POWER_GRASP] * 10 + [REST] * 25
        a = Trial(spec_at(r=0.8))
        a.run(labels)
        b = Trial(spec_at(r=0.8))
        b.run(labels)
        assert a.record() == b.record()


class TestMetrics:
    def test_completion_rate(self):
        good = make_record([(1.0, 0.5), (0.5, 0.5)])
        bad = make_record([(1.0, 0.5), (0.9, 0.5)], outcome=TIMEOUT, t_completion=None)
        assert completion_rate([good] * 10) == 1.0
        assert completion_rate([bad] * 10) == 0.0
        assert completion_rate([good] * 5 + [bad] * 5) == 0.5
        with pytest.raises(ValueError):
            completion_rate([])

    def test_overshoot_monotone_approach_is_zero(self):
        traj = [(1.0, 0.5), (0.8, 0.5), (0.6, 0.5), (0.51, 0.5)]
        assert overshoot([make_record(traj, target=CursorConfig(0.5, 0.5))]) == 0.0

    def test_overshoot_pass_through_counts_one(self):
        # enter the r band from above, exit below, come back, dwell
        target = CursorConfig(0.5, 0.5)
        traj = [(1.0, 0.5), (0.6, 0.5), (0.51, 0.5), (0.42, 0.5), (0.5, 0.5)]
        assert overshoot([make_record(traj, target=target)]) == 1.0

    def test_overshoot_exit_back_is_zero(self):
        target = CursorConfig(0.5, 0.5)
        traj = [(1.0, 0.5), (0.51, 0.5), (0.6, 0.5), (0.5, 0.5)]
        assert overshoot([make_record(traj, target=target)]) == 0.0

    def test_overshoot_per_dimension(self):
        target = CursorConfig(0.5, 0.5)
        traj = [
            (1.0, 0.8),
            (0.5, 0.8),   # r enters band
            (0.42, 0.8),  # r exits far side -> overshoot 1
            (0.5, 0.8),   # r back in band
            (0.5, 0.5),   # phi enters band
            (0.5, 0.42),  # phi exits far side -> overshoot 2
            (0.5, 0.5),
        ]
        assert overshoot([make_record(traj, target=target)]) == 2.0

    def test_overshoot_undefined_without_successes(self):
        bad = make_record([(1.0, 0.5), (0.9, 0.5)], outcome=TIMEOUT, t_completion=None)
        assert overshoot([bad]) is None

    def test_overshoot_averages_over_successes(self):
        target = CursorConfig(0.5, 0.5)
        one = make_record([(1.0, 0.5), (0.42, 0.5), (0.5, 0.5)], target=target)
        zero = make_record([(1.0, 0.5), (0.5, 0.5)], target=target)
        assert overshoot([one, zero]) == 0.5

    def test_path_efficiency_straight_is_100(self):
        traj = [(1.0, 0.5), (0.9, 0.5), (0.7, 0.5), (0.55, 0.5)]
        assert path_efficiency([make_record(traj)]) == 100.0

    def test_path_efficiency_double_length_is_50(self):
        # 0.2 down, 0.2 up, then 0.4 down: travelled 0.8 for a 0.4 displacement
        traj = [(1.0, 0.5), (0.8, 0.5), (1.0, 0.5), (0.6, 0.5)]
        record = make_record(traj)
        assert path_efficiency([record]) == pytest.approx(50.0)
        assert oracle_path_efficiency(traj) == pytest.approx(50.0)

    def test_path_efficiency_matches_oracle(self):
        rng = np.random.default_rng(33)
        traj = [(1.0, 0.5)]
        for _ in range(30):
            r, phi = traj[-1]
            traj.append((r - abs(rng.normal(0, 0.01)), phi + rng.normal(0, 0.005)))
        record = make_record(traj)
        assert path_efficiency([record]) == pytest.approx(oracle_path_efficiency(traj))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**31))
    def test_path_efficiency_detour_never_increases(self, seed):
        rng = np.random.default_rng(seed)
        base = [(1.0, 0.5), (0.8, 0.5), (0.6, 0.5)]
        detour = base[:2] + [(0.8 + rng.uniform(0.01, 0.1), 0.5 + rng.uniform(-0.1, 0.1))] + base[2:]
        assert path_efficiency([make_record(detour)]) <= path_efficiency([make_record(base)]) + 1e-12

    def test_path_efficiency_bounded_by_100(self):
        rng = np.random.default_rng(34)
        for _ in range(50):
            traj = np.cumsum(rng.normal(0, 0.02, size=(20, 2)), axis=0) + [1.0, 0.5]
            pe = path_efficiency([make_record(traj.tolist())])
            assert pe <= 100.0 + 1e-12

    def test_path_efficiency_zero_path_excluded(self):
        still = make_record([(0.5, 0.5), (0.5, 0.5)])
        moving = make_record([(1.0, 0.5), (0.55, 0.5)])
        assert path_efficiency([still, moving]) == 100.0
        assert path_efficiency([still]) is None

    def test_throughput_fixture(self):
        record = make_record([(1.0, 0.5), (0.55, 0.5)], t_completion=3.0)
        assert np.linalg.norm(np.array([1.0, 0.5]) - np.array([0.55, 0.5])) == pytest.approx(0.45)
        tp = throughput([record])
        assert tp == pytest.approx(oracle_throughput(0.45, 0.05, 3.0), abs=1e-12)
        assert tp == pytest.approx(1.1073, abs=1e-4)

    def test_throughput_zero_distance(self):
        record = make_record([(0.5, 0.5), (0.5, 0.5)], target=CursorConfig(0.5, 0.5))
        assert throughput([record]) == 0.0

    def test_throughput_halving_time_doubles(self):
        fast = make_record([(1.0, 0.5), (0.55, 0.5)], t_completion=1.5)
        slow = make_record([(1.0, 0.5), (0.55, 0.5)], t_completion=3.0)
        assert throughput([fast]) == pytest.approx(2 * throughput([slow]))

    def test_record_payload_round_trip(self):
        trial = Trial(spec_at(r=0.8))
        trial.run([POWER_GRASP] * 10 + [REST] * 20)
        record = trial.record(model_provenance="abc123")
        back = TrialRecord.from_payload(record.to_payload())
        assert back == record
