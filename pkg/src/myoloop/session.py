"""Session protocol: staged movement sets, calibration collection, exploration
with recalibration accounting, assessment recording, and the append-only log.

A session advances Calibration -> Exploration -> Assessment; re-collection
loops stay inside Exploration. Exploration has a time budget of 2 minutes per
active (non-rest) movement. Replacing a movement's samples during exploration
refits the model, counts one recalibration, and the time it takes stays on
the exploration clock.

The log is newline-delimited JSON, one event per line; normalized training
time and the recalibration count are recomputable from the log alone.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .classifier import AxisSet, build_axes
from .errors import BudgetExhaustedError, ProtocolStateError
from .flt import TrialRecord, block_metrics
from .movements import (
    HAND_OPEN,
    INDEX_POINT,
    KEY_GRASP,
    POWER_GRASP,
    PRECISION_PINCH,
    REST,
    TRIPOD_GRASP,
    WRIST_PRONATE,
    WRIST_SUPINATE,
)
from .signal import FeatureVector
from .subspace import CalibrationSet, SubspaceModel, fit_lda

SESSION_LOG_VERSION = "sessionlog/v1"

STAGE_A_MOVEMENTS = (REST, HAND_OPEN, POWER_GRASP, WRIST_PRONATE, WRIST_SUPINATE)
STAGE_B_MOVEMENTS = STAGE_A_MOVEMENTS + (TRIPOD_GRASP, KEY_GRASP)
STAGE_C_MOVEMENTS = STAGE_B_MOVEMENTS + (INDEX_POINT, PRECISION_PINCH)

#: Exploration budget per active movement, seconds.
EXPLORATION_S_PER_MOVEMENT = 120.0

_TRIALS_BY_COUNT = {5: 18, 7: 36, 9: 54}

DEFAULT_POSITIONS = (1, 2, 3, 4, 5)
DEFAULT_SECONDS_PER_POSITION = 2.0

MIN_SESSION = 1
MAX_SESSION = 11


class Phase(Enum):
    CALIBRATION = "calibration"
    EXPLORATION = "exploration"
    ASSESSMENT = "assessment"
    DONE = "done"


@dataclass(frozen=True)
class ProtocolStage:
    session_index: int
    label: str
    movements: tuple[str, ...]
    t_max_s: float
    trials: int
    positions: tuple[int, ...] = DEFAULT_POSITIONS

    @property
    def active_movements(self) -> tuple[str, ...]:
        return tuple(m for m in self.movements if m != REST)


def plan_session(index: int, positions: tuple[int, ...] = DEFAULT_POSITIONS) -> ProtocolStage:
    """Stage for one session; the retention session (11) mirrors session 10."""
    if not MIN_SESSION <= index <= MAX_SESSION:
        raise ValueError(f"session index must be in [{MIN_SESSION}, {MAX_SESSION}], got {index}")
    effective = 10 if index == 11 else index
    if effective <= 4:
        label, movements = "A", STAGE_A_MOVEMENTS
    elif effective <= 7:
        label, movements = "B", STAGE_B_MOVEMENTS
    else:
        label, movements = "C", STAGE_C_MOVEMENTS
    return ProtocolStage(
        session_index=index,
        label=label,
        movements=movements,
        t_max_s=EXPLORATION_S_PER_MOVEMENT * (len(movements) - 1),
        trials=_TRIALS_BY_COUNT[len(movements)],
        positions=positions,
    )


@dataclass
class ExplorationLog:
    """Exploration accounting: elapsed seconds, budget, recalibration events."""

    t_max_s: float
    t_d_s: float = 0.0
    recalibrations: list[tuple[str, float]] = field(default_factory=list)

    @property
    def nr(self) -> int:
        return len(self.recalibrations)


def normalized_training_time(log: ExplorationLog) -> float:
    """Fraction of the exploration budget actually used."""
    if log.t_max_s <= 0:
        raise ValueError("exploration budget must be positive")
    return log.t_d_s / log.t_max_s


class ManualClock:
    """Deterministic clock for scripted sessions and replays (seconds)."""

    def __init__(self, t: float = 0.0):
        self.t = float(t)

    def __call__(self) -> float:
        return self.t

    def advance(self, dt: float) -> None:
        if dt < 0:
            raise ValueError("clock cannot run backwards")
        self.t += dt

    def set(self, t: float) -> None:
        if t < self.t:
            raise ValueError("clock cannot run backwards")
        self.t = float(t)


class Session:
    """Single-writer session state machine.

    ``clock`` supplies seconds (monotonic by contract); pass a ``ManualClock``
    for deterministic replays. All mutating methods log one event.
    """

    def __init__(
        self,
        stage: ProtocolStage,
        regularization: float | None = None,
        clock: Callable[[], float] | None = None,
    ):
        self.stage = stage
        self.regularization = regularization
        self._clock = clock if clock is not None else time.monotonic
        self._t0 = self._clock()
        self.phase = Phase.CALIBRATION
        self._working: dict[str, np.ndarray] = {}
        self._position_tags: dict[str, np.ndarray] = {}
        self.snapshots: list[CalibrationSet] = []
        self.models: list[SubspaceModel] = []
        self.exploration = ExplorationLog(t_max_s=stage.t_max_s)
        self._axes: AxisSet | None = None
        self._exploration_started: float | None = None
        self.trials: list[TrialRecord] = []
        self.events: list[dict] = []
        self._log_event(
            "session_start",
            session=stage.session_index,
            stage=stage.label,
            movements=list(stage.movements),
            t_max_s=stage.t_max_s,
            trials=stage.trials,
        )

    # -- clock helpers ------------------------------------------------------

    def now(self) -> float:
        return self._clock() - self._t0

    def _log_event(self, type_: str, **payload) -> dict:
        event = {"t": self.now(), "type": type_, **payload}
        self.events.append(event)
        return event

    # -- model access -------------------------------------------------------

    @property
    def model(self) -> SubspaceModel:
        if not self.models:
            raise ProtocolStateError("no model fitted yet")
        return self.models[-1]

    @property
    def axes(self) -> AxisSet:
        if self._axes is None:
            raise ProtocolStateError("no model fitted yet")
        return self._axes

    @property
    def calibration(self) -> CalibrationSet:
        if not self.snapshots:
            raise ProtocolStateError("no calibration snapshot yet")
        return self.snapshots[-1]

    @property
    def collected_movements(self) -> list[str]:
        return list(self._working)

    @property
    def nr(self) -> int:
        return self.exploration.nr

    @property
    def t_d(self) -> float:
        if self._exploration_started is None:
            return self.exploration.t_d_s
        if self.phase is Phase.EXPLORATION:
            elapsed = self.now() - self._exploration_started
            return min(max(elapsed, 0.0), self.stage.t_max_s)
        return self.exploration.t_d_s

    @property
    def ntt(self) -> float:
        return self.t_d / self.stage.t_max_s

    # -- calibration --------------------------------------------------------

    def collect_movement(
        self,
        movement: str,
        features: Sequence[FeatureVector] | np.ndarray,
        positions: Sequence[int] | None = None,
    ) -> np.ndarray:
        """Add (or replace) one movement's labeled samples.

        Samples are tagged with board positions in contiguous blocks, cycling
        the configured position list. During exploration this is a
        recalibration; during assessment it is illegal.
        """
        if self.phase in (Phase.ASSESSMENT, Phase.DONE):
            raise ProtocolStateError(f"cannot collect samples during {self.phase.value}")
        if movement not in self.stage.movements:
            raise ValueError(f"movement {movement!r} is not part of this stage")
        block = _as_matrix(features)
        if block.shape[0] == 0:
            raise ValueError("empty feature stream")
        if self.phase is Phase.EXPLORATION:
            self.recalibrate(movement, block, positions)
            return block
        tags = _position_tags(block.shape[0], positions or self.stage.positions)
        self._working[movement] = block
        self._position_tags[movement] = tags
        self._log_event(
            "collect",
            movement=movement,
            n=int(block.shape[0]),
            positions=[int(p) for p in (positions or self.stage.positions)],
        )
        return block

    def start_exploration(self) -> SubspaceModel:
        """Fit the initial model from the collected set and open the budget."""
        if self.phase is not Phase.CALIBRATION:
            raise ProtocolStateError(f"cannot start exploration from {self.phase.value}")
        missing = [m for m in self.stage.movements if m not in self._working]
        if missing:
            raise ProtocolStateError(f"movements not yet collected: {missing}")
        self._refit()
        self.phase = Phase.EXPLORATION
        self._exploration_started = self.now()
        self._log_event("exploration_start", t_max_s=self.stage.t_max_s)
        return self.model

    # -- exploration --------------------------------------------------------

    def recalibrate(
        self,
        movement: str,
        features: Sequence[FeatureVector] | np.ndarray,
        positions: Sequence[int] | None = None,
    ) -> SubspaceModel:
        """Replace one movement's samples and refit; counts one recalibration."""
        if self.phase is not Phase.EXPLORATION:
            raise ProtocolStateError(f"cannot recalibrate during {self.phase.value}")
        if movement not in self._working:
            raise ValueError(f"unknown movement {movement!r}")
        if self.t_d >= self.stage.t_max_s:
            raise BudgetExhaustedError(
                f"exploration budget exhausted ({self.stage.t_max_s:.0f} s)"
            )
        block = _as_matrix(features)
        if block.shape[0] == 0:
            raise ValueError("empty feature stream")
        self._working[movement] = block
        self._position_tags[movement] = _position_tags(
            block.shape[0], positions or self.stage.positions
        )
        self._refit()
        self.exploration.recalibrations.append((movement, self.now()))
        self._log_event("recalibration", movement=movement, n=int(block.shape[0]), nr=self.nr)
        return self.model

    def end_exploration(self) -> None:
        """Freeze the exploration clock and move to assessment."""
        if self.phase is not Phase.EXPLORATION:
            raise ProtocolStateError(f"cannot end exploration from {self.phase.value}")
        self.exploration.t_d_s = self.t_d
        self.phase = Phase.ASSESSMENT
        self._exploration_started = None
        self._log_event("exploration_end", t_d_s=self.exploration.t_d_s, nr=self.nr)

    # -- assessment ---------------------------------------------------------

    def record_trial(self, record: TrialRecord) -> None:
        if self.phase is not Phase.ASSESSMENT:
            raise ProtocolStateError(f"cannot record trials during {self.phase.value}")
        if record.model_provenance is None:
            record.model_provenance = self.model.provenance
        elif record.model_provenance != self.model.provenance:
            raise ProtocolStateError("trial references a stale model")
        self.trials.append(record)
        self._log_event("trial", **record.to_payload())

    def finish(self) -> dict:
        """Close the session, logging the metric summary."""
        if self.phase is not Phase.ASSESSMENT:
            raise ProtocolStateError(f"cannot finish from {self.phase.value}")
        self.phase = Phase.DONE
        summary = self.summary()
        self._log_event("session_end", **summary)
        return summary

    def summary(self) -> dict:
        metrics = block_metrics(self.trials) if self.trials else {}
        return {
            "session": self.stage.session_index,
            "NR": self.nr,
            "T_d_s": self.t_d,
            "NTT": self.ntt,
            **metrics,
        }

    # -- internals ----------------------------------------------------------

    def _refit(self) -> None:
        cal = CalibrationSet(dict(self._working))
        model = fit_lda(cal, self.regularization)
        self.snapshots.append(cal)
        self.models.append(model)
        self._axes = build_axes(model)
        self._log_event("fit", snapshot=len(self.snapshots) - 1, provenance=model.provenance)


def _as_matrix(features: Sequence[FeatureVector] | np.ndarray) -> np.ndarray:
    if isinstance(features, np.ndarray):
        return np.atleast_2d(np.asarray(features, dtype=np.float64))
    rows = [f.values if isinstance(f, FeatureVector) else np.asarray(f) for f in features]
    if not rows:
        return np.empty((0, 0))
    return np.vstack(rows)


def _position_tags(n: int, positions: Sequence[int]) -> np.ndarray:
    blocks = np.array_split(np.arange(n), len(positions))
    tags = np.empty(n, dtype=np.int64)
    for pos, idx in zip(positions, blocks):
        tags[idx] = pos
    return tags


# ---------------------------------------------------------------------------
# Log persistence and recomputation


def write_session_log(path, events: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"version": SESSION_LOG_VERSION}, sort_keys=True) + "\n")
        for event in events:
            fh.write(json.dumps(event, sort_keys=True, allow_nan=False) + "\n")


def read_session_log(path) -> list[dict]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("version") != SESSION_LOG_VERSION:
            raise ValueError(f"unsupported session log version {header.get('version')!r}")
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


def report_from_events(events: Sequence[dict]) -> dict:
    """Recompute NR, NTT, and block metrics from a replayed event log.

    Also checks that every trial references the final fitted model.
    """
    start = next(e for e in events if e["type"] == "session_start")
    t_max = start["t_max_s"]
    nr = sum(1 for e in events if e["type"] == "recalibration")
    t_d = None
    for e in events:
        if e["type"] == "exploration_end":
            t_d = e["t_d_s"]
    fits = [e for e in events if e["type"] == "fit"]
    final_provenance = fits[-1]["provenance"] if fits else None
    trials = []
    for e in events:
        if e["type"] == "trial":
            payload = {k: v for k, v in e.items() if k not in ("t", "type")}
            record = TrialRecord.from_payload(payload)
            if final_provenance is not None and record.model_provenance != final_provenance:
                raise ValueError("trial does not reference the session's final model")
            trials.append(record)
    report = {
        "session": start["session"],
        "stage": start.get("stage"),
        "movements": start.get("movements"),
        "NR": nr,
        "T_d_s": t_d,
        "NTT": (t_d / t_max) if t_d is not None else None,
        "snapshots": len(fits),
    }
    if trials:
        report.update(block_metrics(trials))
    return report
