"""Synthetic multichannel EMG with controllable separability, plus a simulated
user that closes the training loop for desk-scale experiments.

Signals are band-limited Gaussian noise scaled per channel by a movement's
gain pattern. Class separability is controlled by how far apart the gain
patterns sit (``spacing``); repeatability by a per-stream multiplicative gain
jitter (``sigma_within``). Everything is deterministic under a seed.

The simulated user plans short bursts of an intended movement followed by a
settling pause, compensating for the pipeline's window-mixing latency, and
rests once the cursor sits inside the target band. An error rate corrupts
intended movements; a reaction delay shifts every emission.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.signal

from .flt import FltConfig, Trial, label_velocity
from .movements import HAND_OPEN, REST, WRIST_PRONATE, WRIST_SUPINATE
from .signal import EmgStream, FeatureConfig, feature_matrix
from .subspace import CalibrationSet

#: Gain added per unit of spacing at a pattern's peak channel. Calibrated so
#: level-1 spacing produces heavy cluster overlap (offline accuracy well under
#: 0.6) while level-6 is cleanly separable; the separability tests check both.
GAIN_UNIT = 0.01

DEFAULT_SIGMA_WITHIN = 0.10
DEFAULT_BAND = (20.0, 80.0)
DEFAULT_FLOOR = 0.02
DEFAULT_DRIFT = 0.0

#: Per-location gain perturbation amplitude (fraction).
LOCATION_AMP = 0.10


@dataclass(frozen=True)
class ClassProfile:
    """Generator parameters for one movement class."""

    movement: str
    gains: tuple[float, ...]
    sigma_within: float = DEFAULT_SIGMA_WITHIN
    drift_per_min: float = DEFAULT_DRIFT
    band: tuple[float, float] = DEFAULT_BAND

    def __post_init__(self):
        if any(not np.isfinite(g) or g < 0 for g in self.gains):
            raise ValueError("gains must be finite and non-negative")


@dataclass(frozen=True)
class AgentPolicy:
    """Target-seeking behavior of the simulated user.

    ``pipeline_lag_steps`` is the user's estimate of how many extra decision
    steps the cursor keeps moving after a burst ends; ``quiet_steps`` is how
    many stationary-cursor steps they wait before planning the next burst.
    """

    reaction_delay_steps: int = 1
    error_rate: float = 0.0
    pipeline_lag_steps: int = 3
    quiet_steps: int = 2

    def __post_init__(self):
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError("error_rate must be in [0, 1]")
        if self.reaction_delay_steps < 0:
            raise ValueError("reaction delay cannot be negative")


def movement_gain_pattern(index: int, n_active: int, channels: int) -> np.ndarray:
    """Smooth per-channel bump, peak 1.0, centered on a class-specific channel."""
    centers = np.arange(channels)
    focus = index * channels / max(n_active, 1)
    return np.exp(2.0 * (np.cos(2 * np.pi * (centers - focus) / channels) - 1.0))


def make_stage_profiles(
    movements: Sequence[str],
    spacing: float,
    sigma_within: float = DEFAULT_SIGMA_WITHIN,
    channels: int = 8,
    floor: float = DEFAULT_FLOOR,
    band: tuple[float, float] = DEFAULT_BAND,
    drift_per_min: float = DEFAULT_DRIFT,
) -> dict[str, ClassProfile]:
    """Profiles whose projected centroids spread linearly with ``spacing``.

    At spacing 0 every class (rest included) collapses onto the noise floor.
    """
    if spacing < 0:
        raise ValueError("spacing must be >= 0")
    active = [m for m in movements if m != REST]
    profiles: dict[str, ClassProfile] = {}
    for movement in movements:
        if movement == REST:
            gains = np.full(channels, floor)
        else:
            pattern = movement_gain_pattern(active.index(movement), len(active), channels)
            gains = floor + spacing * GAIN_UNIT * pattern
        profiles[movement] = ClassProfile(
            movement=movement,
            gains=tuple(float(g) for g in gains),
            sigma_within=sigma_within,
            drift_per_min=drift_per_min,
            band=band,
        )
    return profiles


def location_factors(location: int | None, channels: int, amp: float = LOCATION_AMP) -> np.ndarray:
    """Deterministic per-channel gain perturbation for a board location."""
    if location is None:
        return np.ones(channels)
    rng = np.random.default_rng(np.random.SeedSequence([0x10C, int(location)]))
    return 1.0 + amp * rng.uniform(-1.0, 1.0, size=channels)


class SignalStreamer:
    """Stateful chunked generator for one profile; chunking does not change
    the sample sequence (same rng, same filter state)."""

    def __init__(
        self,
        profile: ClassProfile,
        rate: float,
        rng: np.random.Generator,
        location: int | None = None,
        location_amp: float = LOCATION_AMP,
    ):
        low, high = profile.band
        if not 0 < low < high < rate / 2:
            raise ValueError(f"empty or invalid band {profile.band} at {rate} Hz")
        self.profile = profile
        self.rate = rate
        self.rng = rng
        self._sos = scipy.signal.butter(4, [low, high], btype="bandpass", fs=rate, output="sos")
        channels = len(profile.gains)
        self._zi = np.zeros((self._sos.shape[0], 2, channels))
        gains = np.asarray(profile.gains) * location_factors(location, channels, location_amp)
        jitter = 1.0 + profile.sigma_within * rng.standard_normal(channels)
        self._scale = gains * np.clip(jitter, 0.0, None)
        self._samples_out = 0
        # run the filter past its startup transient
        self.take(24)
        self._samples_out = 0

    def take(self, n: int) -> np.ndarray:
        white = self.rng.standard_normal((n, len(self.profile.gains)))
        shaped, self._zi = scipy.signal.sosfilt(self._sos, white, axis=0, zi=self._zi)
        t_min = (self._samples_out + np.arange(n)) / self.rate / 60.0
        drift = 1.0 + self.profile.drift_per_min * t_min
        self._samples_out += n
        return shaped * self._scale * drift[:, None]


def gen_signal(
    profile: ClassProfile,
    duration_s: float,
    seed: int | np.random.SeedSequence,
    rate: float = 200.0,
    location: int | None = None,
) -> EmgStream:
    """Seed-deterministic band-limited stream for one movement class."""
    if duration_s <= 0:
        raise ValueError("duration must be positive")
    streamer = SignalStreamer(profile, rate, np.random.default_rng(seed), location)
    n = round(duration_s * rate)
    return EmgStream(data=streamer.take(n), rate=rate)


# ---------------------------------------------------------------------------
# Calibration-set builders


def calibration_from_profiles(
    profiles: dict[str, ClassProfile],
    seed: int | np.random.SeedSequence,
    seconds_per_position: float = 2.0,
    positions: Sequence[int] = (1, 2, 3, 4, 5),
    feature_config: FeatureConfig | None = None,
) -> CalibrationSet:
    """Signal-level calibration set: generate, window, and featurize."""
    cfg = feature_config or FeatureConfig()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(len(profiles))
    classes = {}
    for child, (movement, profile) in zip(children, profiles.items()):
        grand = []
        for j, position in enumerate(positions):
            stream = gen_signal(
                profile,
                seconds_per_position,
                np.random.SeedSequence(child.entropy, spawn_key=child.spawn_key + (j,)),
                rate=cfg.sample_rate,
                location=position,
            )
            grand.append(feature_matrix(stream, cfg))
        classes[movement] = np.vstack(grand)
    return CalibrationSet(classes)


def feature_level_calibration(
    movements: Sequence[str],
    spacing: float,
    sigma: float = 1.0,
    dim: int = 8,
    n_per_class: int = 60,
    seed: int = 0,
) -> CalibrationSet:
    """Fast feature-space shortcut: Gaussian blobs at ``spacing * sigma`` apart.

    Rest sits at the origin; active classes sit on distinct coordinate-ish
    directions. Bypasses signal generation entirely (property tests).
    """
    rng = np.random.default_rng(seed)
    active = [m for m in movements if m != REST]
    if len(active) > dim:
        raise ValueError("need dim >= number of active movements")
    classes = {}
    for movement in movements:
        if movement == REST:
            center = np.zeros(dim)
        else:
            center = np.zeros(dim)
            center[active.index(movement)] = spacing * sigma
        classes[movement] = center + sigma * rng.standard_normal((n_per_class, dim))
    return CalibrationSet(classes)


def separability_sweep(
    levels: Sequence[float],
    movements: Sequence[str],
    seed: int = 0,
    sigma_within: float = DEFAULT_SIGMA_WITHIN,
    seconds_per_position: float = 2.0,
    positions: Sequence[int] = (1, 2, 3, 4, 5),
    feature_config: FeatureConfig | None = None,
    feature_level: bool = False,
) -> dict[float, CalibrationSet]:
    """Per-level calibration sets with fixed within-class variability."""
    if len(levels) < 2:
        raise ValueError("a sweep needs at least 2 levels")
    out = {}
    for i, level in enumerate(levels):
        if feature_level:
            out[level] = feature_level_calibration(
                movements, level, sigma=1.0, dim=max(8, len(movements)), seed=seed * 1000 + i
            )
        else:
            profiles = make_stage_profiles(movements, level, sigma_within=sigma_within)
            out[level] = calibration_from_profiles(
                profiles,
                np.random.SeedSequence([seed, i]),
                seconds_per_position=seconds_per_position,
                positions=positions,
                feature_config=feature_config,
            )
    return out


# ---------------------------------------------------------------------------
# Simulated user


class Agent:
    """Burst-planning target seeker driving one trial."""

    def __init__(
        self,
        policy: AgentPolicy,
        flt_config: FltConfig,
        active_movements: Sequence[str],
        rng: np.random.Generator,
    ):
        self.policy = policy
        self.config = flt_config
        self.active = [m for m in active_movements if m != REST]
        self.rng = rng
        self._plan: deque[str] = deque()
        self._queue: deque[str] = deque([REST] * policy.reaction_delay_steps)
        self._last_cursor = None
        self._quiet = 0

    def next_label(self, trial: Trial) -> str:
        cursor = trial.cursor
        moving = self._last_cursor is not None and cursor != self._last_cursor
        self._last_cursor = cursor
        self._quiet = 0 if moving else self._quiet + 1

        if self._plan:
            intent = self._plan.popleft()
        elif trial.in_band():
            intent = REST
        elif self._quiet > self.policy.quiet_steps:
            self._replan(trial)
            self._quiet = 0
            intent = self._plan.popleft()
        else:
            intent = REST  # cursor still in flight; let the pipeline settle
        if intent != REST and self.policy.error_rate > 0:
            if self.rng.random() < self.policy.error_rate:
                others = [m for m in self.active if m != intent]
                if others:
                    intent = str(self.rng.choice(others))
        self._queue.append(intent)
        return self._queue.popleft()

    def _replan(self, trial: Trial) -> None:
        cursor, target = trial.cursor, trial.spec.target
        err_r = cursor.r - target.r
        err_phi = cursor.phi - target.phi
        hw = trial.spec.half_width
        if abs(err_r) >= abs(err_phi) and abs(err_r) > hw:
            err, axis, rate = err_r, 0, self.config.aperture_rate
            candidates = [trial.spec.gesture, HAND_OPEN]
        else:
            err, axis, rate = err_phi, 1, self.config.orientation_rate
            candidates = [WRIST_PRONATE, WRIST_SUPINATE]
        toward = self._candidate(candidates, err, axis, trial, retreat=False)
        lag = self.policy.pipeline_lag_steps
        need = abs(err) / (rate * self.config.step_s)
        if need < lag + 1:
            # too close for the shortest burst to land inside the band:
            # back off one burst and re-approach from a plannable distance
            away = self._candidate(candidates, err, axis, trial, retreat=True)
            self._plan.append(away)
        else:
            self._plan.extend([toward] * max(1, round(need) - lag))

    def _candidate(self, candidates, err: float, axis: int, trial: Trial, retreat: bool) -> str:
        for movement in candidates:
            v = label_velocity(movement, trial.spec.gesture, self.config)[axis]
            if (v * err > 0) if retreat else (v * err < 0):
                return movement
        return candidates[0]


class AgentSource:
    """Signal source for the full engine pipeline, driven by the simulated user.

    Calibration segments come straight from the movement profiles; trial
    chunks follow the agent's per-step intent; everything else is rest.
    Deterministic under the seed: children are spawned in call order.
    """

    def __init__(
        self,
        profiles: dict[str, ClassProfile],
        policy: AgentPolicy,
        flt_config: FltConfig,
        rate: float = 200.0,
        seed: int = 0,
    ):
        self.profiles = profiles
        self.policy = policy
        self.flt_config = flt_config
        self.rate = rate
        self.channels = len(next(iter(profiles.values())).gains)
        self._root = np.random.SeedSequence([seed, 0x5EED])
        self._rest_streamer = SignalStreamer(profiles[REST], rate, self._rng())
        self._trial: Trial | None = None
        self._agent: Agent | None = None
        self._streamers: dict[str, SignalStreamer] = {}
        self._trial_rng: np.random.Generator | None = None

    def _rng(self) -> np.random.Generator:
        return np.random.default_rng(self._root.spawn(1)[0])

    def take(self, n, movement=None, position=None, trial=None) -> np.ndarray:
        if trial is not None and trial is not self._trial:
            self._trial = trial
            self._agent = Agent(
                self.policy,
                self.flt_config,
                active_movements=[m for m in self.profiles if m != REST],
                rng=self._rng(),
            )
            self._trial_rng = self._rng()
            self._streamers = {}
        if trial is not None:
            location = trial.location
            if movement is None:
                movement = self._agent.next_label(trial)
            return self._trial_streamer(movement, location).take(n)
        if movement is not None:
            streamer = SignalStreamer(self.profiles[movement], self.rate, self._rng(), position)
            return streamer.take(n)
        return self._rest_streamer.take(n)

    def _trial_streamer(self, movement: str, location) -> SignalStreamer:
        if movement not in self._streamers:
            self._streamers[movement] = SignalStreamer(
                self.profiles[movement], self.rate, self._trial_rng, location
            )
        return self._streamers[movement]


def run_flt_block(
    model,
    axes,
    profiles: dict[str, ClassProfile],
    targets,
    locations,
    policy: AgentPolicy,
    seed: int = 0,
    flt_config: FltConfig | None = None,
    feature_config: FeatureConfig | None = None,
    t_rest: float = 0.15,
):
    """Run one assessment block through the live pipeline, agent in the loop.

    Per step: the agent picks an intent, the generator emits 50 ms of matching
    signal, the sliding window is featurized, projected, classified, and the
    decision drives the cursor. Returns the trial records.
    """
    from .classifier import classify
    from .flt import Trial
    from .signal import features_from_array
    from .subspace import project

    fcfg = feature_config or FeatureConfig()
    cfg = flt_config or FltConfig()
    root = np.random.SeedSequence([seed, 0xF17])
    active = [m for m in profiles if m != REST]
    records = []
    for spec, location in zip(targets, locations):
        agent_ss, stream_ss = root.spawn(2)
        agent = Agent(policy, cfg, active, np.random.default_rng(agent_ss))
        stream_rng = np.random.default_rng(stream_ss)
        streamers: dict[str, SignalStreamer] = {}

        def streamer_for(movement: str) -> SignalStreamer:
            if movement not in streamers:
                streamers[movement] = SignalStreamer(
                    profiles[movement], fcfg.sample_rate, stream_rng, location
                )
            return streamers[movement]

        trial = Trial(spec, cfg, location=location)
        buffer = streamer_for(REST).take(fcfg.window_samples - fcfg.step_samples)
        while trial.outcome is None:
            label = agent.next_label(trial)
            chunk = streamer_for(label).take(fcfg.step_samples)
            buffer = np.vstack([buffer, chunk])[-fcfg.window_samples :]
            feats = features_from_array(buffer, fcfg.sample_rate, fcfg)
            decision = classify(axes, project(model, feats), t_rest=t_rest)
            trial.step(decision.label)
        records.append(trial.record(model.provenance))
    return records


def run_agent(
    policy: AgentPolicy,
    stage,
    seed: int = 0,
    spacing: float = 6.0,
    sigma_within: float = DEFAULT_SIGMA_WITHIN,
    flt_config: FltConfig | None = None,
    feature_config: FeatureConfig | None = None,
    t_rest: float = 0.15,
) -> dict:
    """Calibrate, fit, and run a full assessment block at one separability.

    Returns the block metrics plus the trial records under ``records``.
    """
    from .classifier import build_axes
    from .flt import assign_locations, block_metrics, sample_targets
    from .subspace import fit_lda

    cfg = flt_config or FltConfig()
    fcfg = feature_config or FeatureConfig()
    profiles = make_stage_profiles(stage.movements, spacing, sigma_within=sigma_within)
    cal = calibration_from_profiles(
        profiles,
        np.random.SeedSequence([seed, 0xCA1]),
        positions=stage.positions,
        feature_config=fcfg,
    )
    model = fit_lda(cal)
    axes = build_axes(model)
    targets = sample_targets(stage, seed=seed, config=cfg)
    locations = assign_locations(len(targets), cfg.handedness)
    records = run_flt_block(
        model, axes, profiles, targets, locations, policy, seed, cfg, fcfg, t_rest
    )
    metrics = block_metrics(records, width=cfg.width)
    metrics["spacing"] = spacing
    metrics["seed"] = seed
    metrics["records"] = records
    return metrics


def run_sweep(
    levels: Sequence[float],
    seeds: Sequence[int],
    stage,
    policy: AgentPolicy | None = None,
    sigma_within: float = DEFAULT_SIGMA_WITHIN,
    flt_config: FltConfig | None = None,
    feature_config: FeatureConfig | None = None,
) -> list[dict]:
    """Mean metrics per separability level across paired seeds."""
    policy = policy or AgentPolicy()
    rows = []
    for level in levels:
        runs = [
            run_agent(
                policy,
                stage,
                seed=s,
                spacing=level,
                sigma_within=sigma_within,
                flt_config=flt_config,
                feature_config=feature_config,
            )
            for s in seeds
        ]
        row = {"spacing": level, "n_runs": len(runs)}
        for key in ("CR", "OT", "PE", "TP"):
            vals = [r[key] for r in runs if r[key] is not None]
            row[key] = float(np.mean(vals)) if vals else None
        rows.append(row)
    return rows
