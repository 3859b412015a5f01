"""Target-acquisition assessment engine and its four summary metrics.

The cursor state is ``(r, phi)``: normalized aperture in [0, 1] and
orientation as a fraction of a full turn. A trial prompts one closing gesture
and a target configuration; decisions move the cursor at a fixed rate per
50 ms step:

    prompted gesture   r decreases          other closing gesture  no motion,
    hand open          r increases                                 logged as a
    wrist pronate      phi -/+ (handedness)                        misclassification
    wrist supinate     phi +/- (handedness)  rest                  no motion

The 15 s clock starts at the first non-rest decision; success requires one
full second of continuous rest decisions while both dimensions sit within the
half-width band around the target. Orientation distances are unwrapped:
targets and the start configuration live in [0.25, 0.75] so no wrap occurs
under defaults.

Metrics (over a list of TrialRecords): completion rate over all trials;
overshoot, path efficiency, and throughput over successful trials only.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import TrialFinishedError
from .movements import (
    CLOSING_GESTURES,
    HAND_OPEN,
    REST,
    WRIST_PRONATE,
    WRIST_SUPINATE,
)

logger = logging.getLogger(__name__)

SUCCESS = "success"
TIMEOUT = "timeout"

#: Test locations cycled across trials (board cells; metadata only).
RIGHT_HAND_LOCATIONS = (5, 6, 1)
LEFT_HAND_LOCATIONS = (5, 4, 3)


@dataclass(frozen=True)
class CursorConfig:
    """Cursor state: normalized aperture and orientation (theta / 2 pi)."""

    r: float
    phi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.phi])


@dataclass(frozen=True)
class FltConfig:
    width: float = 0.05                 # target band full width per dimension
    start: CursorConfig = CursorConfig(1.0, 0.5)
    aperture_rate: float = 0.4          # units/s
    orientation_rate: float = 0.4       # turns/s
    time_limit_s: float = 15.0
    dwell_s: float = 1.0
    step_s: float = 0.05
    handedness: str = "right"
    aperture_range: tuple[float, float] = (0.25, 0.75)
    orientation_range: tuple[float, float] = (0.25, 0.75)

    @property
    def half_width(self) -> float:
        return self.width / 2.0

    @property
    def limit_steps(self) -> int:
        return round(self.time_limit_s / self.step_s)

    @property
    def dwell_steps(self) -> int:
        return round(self.dwell_s / self.step_s)


@dataclass(frozen=True)
class TargetSpec:
    gesture: str
    target: CursorConfig
    half_width: float


@dataclass
class TrialRecord:
    """One completed trial: prompt, endpoints, sampled trajectory, outcome."""

    prompt: str
    s0: CursorConfig
    target: CursorConfig
    half_width: float
    trajectory: list[tuple[float, float]]
    labels: list[str]
    outcome: str
    t_completion: float | None
    location: int | None = None
    misclassifications: int = 0
    model_provenance: str | None = None

    @property
    def success(self) -> bool:
        return self.outcome == SUCCESS

    def to_payload(self) -> dict:
        return {
            "prompt": self.prompt,
            "s0": [self.s0.r, self.s0.phi],
            "target": [self.target.r, self.target.phi],
            "half_width": self.half_width,
            "trajectory": [[r, phi] for r, phi in self.trajectory],
            "labels": self.labels,
            "outcome": self.outcome,
            "t_completion": self.t_completion,
            "location": self.location,
            "misclassifications": self.misclassifications,
            "model_provenance": self.model_provenance,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "TrialRecord":
        return cls(
            prompt=payload["prompt"],
            s0=CursorConfig(*payload["s0"]),
            target=CursorConfig(*payload["target"]),
            half_width=payload["half_width"],
            trajectory=[(p[0], p[1]) for p in payload["trajectory"]],
            labels=list(payload["labels"]),
            outcome=payload["outcome"],
            t_completion=payload["t_completion"],
            location=payload.get("location"),
            misclassifications=payload.get("misclassifications", 0),
            model_provenance=payload.get("model_provenance"),
        )


def sample_targets(
    stage,
    trials_per_gesture: int | None = None,
    seed: int = 0,
    config: FltConfig | None = None,
) -> list[TargetSpec]:
    """Deterministic target list for a protocol stage.

    Gestures are the stage's calibrated closing gestures. Counts per gesture
    are equal when the total divides evenly, otherwise as equal as possible
    (difference at most one, extras assigned by seeded draw). Orientation
    targets split evenly between the two rotation sides of the start
    configuration; an odd total alternates the extra side by seed parity.
    """
    cfg = config or FltConfig()
    gestures = [g for g in CLOSING_GESTURES if g in stage.movements]
    if not gestures:
        raise ValueError(f"stage {stage.session_index} has no eligible gestures")
    if trials_per_gesture is not None:
        total = trials_per_gesture * len(gestures)
    else:
        total = stage.trials

    rng = np.random.default_rng(seed)

    base, extra = divmod(total, len(gestures))
    counts = {g: base for g in gestures}
    for g in rng.permutation(gestures)[:extra]:
        counts[str(g)] += 1
    prompt_list = [g for g in gestures for _ in range(counts[g])]

    n_up = total // 2
    n_down = total - n_up
    if total % 2 == 1 and seed % 2 == 1:
        n_up, n_down = n_down, n_up
    sides = [1] * n_up + [-1] * n_down
    rng.shuffle(sides)

    lo_r, hi_r = cfg.aperture_range
    lo_p, hi_p = cfg.orientation_range
    targets = []
    for gesture, side in zip(prompt_list, sides):
        r = float(rng.uniform(lo_r, hi_r))
        if side > 0:
            phi = float(rng.uniform(cfg.start.phi, hi_p))
        else:
            phi = float(rng.uniform(lo_p, cfg.start.phi))
        targets.append(TargetSpec(gesture=gesture, target=CursorConfig(r, phi), half_width=cfg.half_width))
    return targets


def assign_locations(n: int, handedness: str = "right") -> list[int]:
    """Cycle the three test locations across n trials."""
    cycle = RIGHT_HAND_LOCATIONS if handedness == "right" else LEFT_HAND_LOCATIONS
    return [cycle[i % len(cycle)] for i in range(n)]


def label_velocity(label: str, prompt: str, config: FltConfig) -> tuple[float, float]:
    """(dr/dt, dphi/dt) produced by holding a classification label.

    Clockwise rotation decreases phi; a right-handed pronate turns clockwise.
    Non-prompted closing gestures produce no motion.
    """
    if label == prompt:
        return (-config.aperture_rate, 0.0)
    if label == HAND_OPEN:
        return (config.aperture_rate, 0.0)
    sign = -1.0 if config.handedness == "right" else 1.0
    if label == WRIST_PRONATE:
        return (0.0, sign * config.orientation_rate)
    if label == WRIST_SUPINATE:
        return (0.0, -sign * config.orientation_rate)
    return (0.0, 0.0)


class Trial:
    """Live trial driven one decision label per 50 ms step."""

    def __init__(self, spec: TargetSpec, config: FltConfig | None = None, location: int | None = None):
        self.spec = spec
        self.config = config or FltConfig()
        self.location = location
        self.cursor = self.config.start
        self.trajectory: list[tuple[float, float]] = [(self.cursor.r, self.cursor.phi)]
        self.labels: list[str] = []
        self.started = False
        self.steps_since_start = 0
        self.dwell_steps = 0
        self.misclassifications = 0
        self.outcome: str | None = None
        self.t_completion: float | None = None

    @property
    def elapsed_s(self) -> float:
        return self.steps_since_start * self.config.step_s

    @property
    def dwell_s(self) -> float:
        return self.dwell_steps * self.config.step_s

    def in_band(self, cursor: CursorConfig | None = None) -> bool:
        c = cursor or self.cursor
        hw = self.spec.half_width
        return (
            abs(c.r - self.spec.target.r) <= hw
            and abs(c.phi - self.spec.target.phi) <= hw
        )

    def step(self, label: str) -> None:
        """Advance one decision step; sets ``outcome`` when adjudicated."""
        if self.outcome is not None:
            raise TrialFinishedError("trial already adjudicated")
        self.labels.append(label)
        if label != REST and not self.started:
            self.started = True
        if self.started:
            self.steps_since_start += 1

        if label in CLOSING_GESTURES and label != self.spec.gesture:
            self.misclassifications += 1
        dr, dphi = label_velocity(label, self.spec.gesture, self.config)
        dt = self.config.step_s
        r = min(1.0, max(0.0, self.cursor.r + dr * dt))
        phi = self.cursor.phi + dphi * dt
        self.cursor = CursorConfig(r, phi)
        self.trajectory.append((r, phi))

        if label == REST and self.in_band():
            self.dwell_steps += 1
        else:
            self.dwell_steps = 0

        if self.dwell_steps >= self.config.dwell_steps:
            self.outcome = SUCCESS
            self.t_completion = self.elapsed_s
        elif self.started and self.steps_since_start >= self.config.limit_steps:
            self.outcome = TIMEOUT
        elif not self.started and len(self.labels) >= self.config.limit_steps:
            # no non-rest classification for a whole time limit: dead trial
            self.outcome = TIMEOUT

    def run(self, labels: Iterable[str]) -> str:
        """Feed labels until adjudication or exhaustion; timeout if unfinished."""
        for label in labels:
            self.step(label)
            if self.outcome is not None:
                return self.outcome
        self.outcome = TIMEOUT
        return self.outcome

    def record(self, model_provenance: str | None = None) -> TrialRecord:
        if self.outcome is None:
            raise TrialFinishedError("trial not yet adjudicated")
        return TrialRecord(
            prompt=self.spec.gesture,
            s0=self.config.start,
            target=self.spec.target,
            half_width=self.spec.half_width,
            trajectory=list(self.trajectory),
            labels=list(self.labels),
            outcome=self.outcome,
            t_completion=self.t_completion,
            location=self.location,
            misclassifications=self.misclassifications,
            model_provenance=model_provenance,
        )


def adjudicate(record: TrialRecord, config: FltConfig | None = None) -> str:
    """Recompute a trial's outcome from its label stream.

    Re-simulates the cursor under the recorded labels; the sampled trajectory
    must match. Used to verify logs and replays.
    """
    cfg = config or FltConfig()
    if record.s0 != cfg.start:
        cfg = replace(cfg, start=record.s0)
    if not record.trajectory:
        raise ValueError("trial trajectory is empty")
    trial = Trial(
        TargetSpec(record.prompt, record.target, record.half_width),
        cfg,
        location=record.location,
    )
    trial.run(record.labels)
    return trial.outcome


# ---------------------------------------------------------------------------
# Metrics


def completion_rate(records: Sequence[TrialRecord]) -> float:
    """Successful trials over all trials."""
    if not records:
        raise ValueError("completion rate needs at least one trial")
    return sum(r.success for r in records) / len(records)


def overshoot(records: Sequence[TrialRecord]) -> float | None:
    """Average overshoot events per successful trial (None when no successes).

    An overshoot is one dimension entering its target band and leaving on the
    far side (continuing in the travel direction); leaving the way it came in
    does not count. A trajectory that starts inside the band has no recorded
    entry direction, so its first exit never counts.
    """
    successes = [r for r in records if r.success]
    if not successes:
        return None
    total = sum(_overshoot_events(r) for r in successes)
    return total / len(successes)


def _overshoot_events(record: TrialRecord) -> int:
    events = 0
    targets = (record.target.r, record.target.phi)
    hw = record.half_width
    for dim in range(2):
        lo, hi = targets[dim] - hw, targets[dim] + hw
        entry_side = None
        prev_region = None
        for point in record.trajectory:
            v = point[dim]
            region = -1 if v < lo else (1 if v > hi else 0)
            if prev_region is not None and region != prev_region:
                if prev_region == 0 and region != 0:
                    if entry_side is not None and region == -entry_side:
                        events += 1
                    entry_side = None
                elif prev_region != 0 and region == 0:
                    entry_side = prev_region
                elif prev_region != 0 and region == -prev_region:
                    # jumped clean across the band
                    events += 1
                    entry_side = None
            prev_region = region
    return events


def path_efficiency(records: Sequence[TrialRecord]) -> float | None:
    """Mean percentage ratio of straight-line to traversed path (successes).

    The straight-line reference runs from the start configuration to the
    trajectory's final point (at success the cursor rests within the target
    band), which keeps the ratio at or below 100 with equality exactly for
    monotone straight approaches. Zero-length paths are excluded and logged.
    """
    successes = [r for r in records if r.success]
    if not successes:
        return None
    ratios = []
    for rec in successes:
        traj = np.asarray(rec.trajectory)
        if traj.shape[0] < 2:
            logger.warning("path efficiency: trial with fewer than 2 samples excluded")
            continue
        steps = np.linalg.norm(np.diff(traj, axis=0), axis=1)
        path = float(np.sum(steps))
        if path == 0.0:
            logger.warning("path efficiency: zero-length path excluded")
            continue
        straight = float(np.linalg.norm(traj[-1] - traj[0]))
        ratios.append(100.0 * straight / path)
    if not ratios:
        return None
    return float(np.mean(ratios))


def throughput(records: Sequence[TrialRecord], width: float = 0.05) -> float | None:
    """Mean index-of-difficulty over completion time, bits/s, successes only.

    Difficulty uses the prompted task distance ``||s0 - target||`` against the
    band width.
    """
    successes = [r for r in records if r.success]
    if not successes:
        return None
    values = []
    for rec in successes:
        if not rec.t_completion or rec.t_completion <= 0:
            logger.warning("throughput: trial with non-positive completion time excluded")
            continue
        distance = float(np.linalg.norm(rec.target.as_array() - rec.s0.as_array()))
        values.append(math.log2(distance / width + 1.0) / rec.t_completion)
    if not values:
        return None
    return float(np.mean(values))


def block_metrics(records: Sequence[TrialRecord], width: float = 0.05) -> dict:
    """CR/OT/PE/TP summary for one assessment block."""
    return {
        "n_trials": len(records),
        "n_success": sum(r.success for r in records),
        "CR": completion_rate(records) if records else None,
        "OT": overshoot(records),
        "PE": path_efficiency(records),
        "TP": throughput(records, width=width),
    }
