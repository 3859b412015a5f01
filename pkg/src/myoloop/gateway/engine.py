"""Deterministic pipeline engine: signal source -> windows -> subspace ->
decisions -> session protocol and cursor-task trials, emitting wire messages.

The engine is single-writer and free of wall-clock time: its clock is the
number of samples consumed from the source. Commands mutate state and emit
messages; ``step()`` consumes one decision step (50 ms by default) and emits
the streaming messages. Running the same source and command script twice
therefore produces byte-identical session logs and wire transcripts; the
websocket server only adds pacing and fan-out on top.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from ..classifier import DEFAULT_T_REST, classify
from ..errors import BudgetExhaustedError, MyoloopError, ProtocolStateError
from ..flt import FltConfig, TargetSpec, Trial, assign_locations, sample_targets
from ..movements import REST
from ..session import ManualClock, Phase, Session, plan_session, write_session_log
from ..signal import EmgStream, FeatureConfig, features_from_array
from ..subspace import centroid_view, project, reviewer_coords
from .protocol import encode_message, make_message


class EndOfStream(MyoloopError):
    """The signal source has no more samples."""


class SignalSource(Protocol):
    rate: float
    channels: int

    def take(
        self,
        n: int,
        movement: str | None = None,
        position: int | None = None,
        trial: Trial | None = None,
    ) -> np.ndarray: ...


class FileSource:
    """Sequential replay of a recorded stream."""

    def __init__(self, stream: EmgStream):
        self.stream = stream
        self.rate = stream.rate
        self.channels = stream.n_channels
        self._pos = 0

    @property
    def remaining(self) -> int:
        return self.stream.n_samples - self._pos

    def take(self, n, movement=None, position=None, trial=None) -> np.ndarray:
        if self._pos + n > self.stream.n_samples:
            raise EndOfStream(f"source exhausted at sample {self._pos} (wanted {n} more)")
        chunk = self.stream.data[self._pos : self._pos + n]
        self._pos += n
        return chunk


class TeeSource:
    """Wrap a source and keep every chunk handed out, in order."""

    def __init__(self, inner):
        self.inner = inner
        self.rate = inner.rate
        self.channels = inner.channels
        self.chunks: list[np.ndarray] = []

    def take(self, n, movement=None, position=None, trial=None) -> np.ndarray:
        chunk = self.inner.take(n, movement=movement, position=position, trial=trial)
        self.chunks.append(chunk)
        return chunk

    def recorded_stream(self) -> EmgStream:
        data = np.vstack(self.chunks) if self.chunks else np.empty((0, self.channels))
        return EmgStream(data=data, rate=self.rate)


@dataclass
class EngineConfig:
    session_index: int = 1
    seed: int = 0
    t_rest: float = DEFAULT_T_REST
    regularization: float | None = None
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    flt: FltConfig = field(default_factory=FltConfig)
    seconds_per_position: float = 2.0
    cluster_points_cap: int = 120


class Engine:
    """Orchestrates one session over a signal source."""

    def __init__(self, source: SignalSource, config: EngineConfig | None = None):
        self.source = source
        self.cfg = config or EngineConfig()
        if self.cfg.feature.sample_rate != source.rate:
            raise ValueError(
                f"source rate {source.rate} does not match feature config {self.cfg.feature.sample_rate}"
            )
        self.clock = ManualClock()
        self.session: Session | None = None
        self.trial: Trial | None = None
        self.targets: list[TargetSpec] = []
        self.locations: list[int] = []
        self.trials_done = 0
        self.transcript: list[dict] = []
        self.outbox: list[dict] = []
        self._seq = 0
        self._samples = 0
        self._buffer = np.empty((0, source.channels))
        self._last_view: np.ndarray | None = None

    # -- time and message plumbing -------------------------------------------

    @property
    def time_s(self) -> float:
        return self._samples / self.source.rate

    def _consume(self, n: int, **ctx) -> np.ndarray:
        chunk = self.source.take(n, **ctx)
        self._samples += n
        self.clock.set(self.time_s)
        return chunk

    def _emit(self, type_: str, **payload) -> dict:
        msg = make_message(type_, seq=self._seq, t=self.time_s, **payload)
        self._seq += 1
        self.transcript.append(msg)
        self.outbox.append(msg)
        return msg

    def drain(self) -> list[dict]:
        out, self.outbox = self.outbox, []
        return out

    # -- command handling -----------------------------------------------------

    def handle_command(self, cmd: dict) -> list[dict]:
        """Apply one client command, returning the messages it produced."""
        mark = len(self.transcript)
        type_ = cmd.get("type")
        try:
            if type_ == "start_calibration":
                self.start_calibration(int(cmd.get("session", self.cfg.session_index)))
            elif type_ == "collect":
                self.collect(cmd["movement"], seconds=cmd.get("seconds"))
            elif type_ == "recalibrate":
                self.recalibrate(cmd["movement"], seconds=cmd.get("seconds"))
            elif type_ == "end_exploration":
                self.end_exploration()
            elif type_ == "start_trial":
                self.start_trial()
            elif type_ == "subscribe":
                pass  # connection-level concern, handled by the server
            else:
                self._emit("error", message=f"unknown command type {type_!r}")
        except (MyoloopError, ValueError, KeyError) as exc:
            self._emit("error", message=str(exc), command=type_)
        return self.transcript[mark:]

    # -- session flow -----------------------------------------------------------

    def start_calibration(self, session_index: int | None = None) -> None:
        if self.session is not None:
            raise ProtocolStateError("session already started")
        index = self.cfg.session_index if session_index is None else session_index
        stage = plan_session(index)
        self.session = Session(stage, regularization=self.cfg.regularization, clock=self.clock)
        self._emit_session_state()

    def collect(self, movement: str, seconds: float | None = None) -> None:
        session = self._require_session()
        if session.phase is Phase.EXPLORATION:
            self.recalibrate(movement, seconds=seconds)
            return
        if session.phase is not Phase.CALIBRATION:
            raise ProtocolStateError(f"cannot collect during {session.phase.value}")
        if movement not in session.stage.movements:
            raise ValueError(f"movement {movement!r} is not part of this stage")
        feats = self._collect_features(movement, seconds)
        session.collect_movement(movement, feats)
        self._emit_session_state()
        if all(m in session.collected_movements for m in session.stage.movements):
            session.start_exploration()
            self._reset_buffer()
            self._emit_clusters()
            self._emit_session_state()

    def recalibrate(self, movement: str, seconds: float | None = None) -> None:
        session = self._require_session()
        if session.phase is not Phase.EXPLORATION:
            raise ProtocolStateError(f"cannot recalibrate during {session.phase.value}")
        if movement not in session.collected_movements:
            raise ValueError(f"unknown movement {movement!r}")
        if session.t_d >= session.stage.t_max_s:
            # check before consuming source samples
            raise BudgetExhaustedError(
                f"exploration budget exhausted ({session.stage.t_max_s:.0f} s)"
            )
        feats = self._collect_features(movement, seconds)
        session.recalibrate(movement, feats)
        self._emit_clusters()
        self._emit_session_state()

    def advance(self, seconds: float) -> None:
        """Consume exploration time, streaming decisions (script/live pump)."""
        session = self._require_session()
        if session.phase is not Phase.EXPLORATION:
            raise ProtocolStateError(f"cannot advance during {session.phase.value}")
        steps = round(seconds / (self.cfg.feature.step_ms / 1000.0))
        for _ in range(steps):
            self.step()

    def end_exploration(self) -> None:
        session = self._require_session()
        session.end_exploration()
        self.targets = sample_targets(session.stage, seed=self.cfg.seed, config=self.cfg.flt)
        self.locations = assign_locations(len(self.targets), self.cfg.flt.handedness)
        self._emit_session_state()

    def start_trial(self) -> None:
        session = self._require_session()
        if session.phase is not Phase.ASSESSMENT:
            raise ProtocolStateError(f"cannot start a trial during {session.phase.value}")
        if self.trial is not None:
            raise ProtocolStateError("a trial is already active")
        if self.trials_done >= len(self.targets):
            raise ProtocolStateError("no targets remaining")
        spec = self.targets[self.trials_done]
        self.trial = Trial(spec, self.cfg.flt, location=self.locations[self.trials_done])
        self._reset_buffer()
        preroll = self.cfg.feature.window_samples - self.cfg.feature.step_samples
        if preroll > 0:
            self._buffer = self._consume(preroll, movement=REST, trial=self.trial)
        self._emit_flt_state()

    def finish_session(self) -> dict:
        session = self._require_session()
        summary = session.finish()
        self._emit_session_state()
        return summary

    # -- streaming ---------------------------------------------------------------

    def step(self) -> list[dict]:
        """Consume one decision step; emit cursor/decision (and trial) messages."""
        session = self.session
        if session is None:
            return []
        mark = len(self.transcript)
        if session.phase is Phase.EXPLORATION:
            chunk = self._consume(self.cfg.feature.step_samples)
            self._push(chunk)
            decision = self._decide()
            if decision is not None:
                self._emit_cursor(decision)
        elif session.phase is Phase.ASSESSMENT and self.trial is not None:
            trial = self.trial
            try:
                chunk = self._consume(self.cfg.feature.step_samples, trial=trial)
            except EndOfStream:
                trial.outcome = "timeout"
                trial.t_completion = None
                self._finish_trial(truncated=True)
                return self.transcript[mark:]
            self._push(chunk)
            decision = self._decide()
            if decision is not None:
                trial.step(decision.label)
                self._emit_cursor(decision)
                self._emit_flt_state()
                if trial.outcome is not None:
                    self._finish_trial()
        return self.transcript[mark:]

    def run_trial(self) -> None:
        """Step the active trial to adjudication (batch mode)."""
        while self.trial is not None:
            self.step()

    def run_assessment(self) -> None:
        """Run all remaining targets back to back and close the session."""
        session = self._require_session()
        if session.phase is not Phase.ASSESSMENT:
            raise ProtocolStateError(f"cannot assess during {session.phase.value}")
        while self.trials_done < len(self.targets):
            self.start_trial()
            self.run_trial()
        self.finish_session()

    def run_script(self, commands: Sequence[dict]) -> None:
        """Execute a replay script (commands plus advance/run_assessment)."""
        for cmd in commands:
            type_ = cmd.get("type")
            if type_ == "advance":
                self.advance(float(cmd["seconds"]))
            elif type_ == "run_assessment":
                self.run_assessment()
            else:
                self.handle_command(cmd)

    # -- snapshots -----------------------------------------------------------------

    def snapshot_messages(self) -> list[dict]:
        """session_state plus clusters for a subscriber joining mid-session."""
        out = []
        if self.session is None:
            return out
        out.append(self._session_state_msg(seq=0))
        if self.session.models:
            out.append(self._clusters_msg(seq=0))
        return out

    # -- internals -------------------------------------------------------------------

    def _require_session(self) -> Session:
        if self.session is None:
            raise ProtocolStateError("no session started")
        return self.session

    def _collect_features(self, movement: str, seconds: float | None) -> np.ndarray:
        cfg = self.cfg.feature
        session = self._require_session()
        positions = session.stage.positions
        per_position = (
            self.cfg.seconds_per_position if seconds is None else seconds / len(positions)
        )
        n = round(per_position * cfg.sample_rate)
        if n < cfg.window_samples:
            raise ValueError("collection segment shorter than one window")
        feats = []
        for position in positions:
            chunk = self._consume(n, movement=movement, position=position, trial=None)
            feats.append(
                np.vstack(
                    [
                        features_from_array(chunk[i : i + cfg.window_samples], cfg.sample_rate, cfg)
                        for i in range(0, n - cfg.window_samples + 1, cfg.step_samples)
                    ]
                )
            )
        return np.vstack(feats)

    def _reset_buffer(self) -> None:
        self._buffer = np.empty((0, self.source.channels))

    def _push(self, chunk: np.ndarray) -> None:
        w = self.cfg.feature.window_samples
        self._buffer = np.vstack([self._buffer, chunk])[-w:]

    def _decide(self):
        session = self._require_session()
        if self._buffer.shape[0] < self.cfg.feature.window_samples:
            return None
        feats = features_from_array(self._buffer, self.cfg.feature.sample_rate, self.cfg.feature)
        y = project(session.model, feats)
        self._last_view = reviewer_coords(session.model, feats)
        return classify(session.axes, y, t_rest=self.cfg.t_rest)

    def _finish_trial(self, truncated: bool = False) -> None:
        session = self._require_session()
        trial = self.trial
        record = trial.record(model_provenance=session.model.provenance)
        session.record_trial(record)
        if truncated:
            session.events[-1]["truncated"] = True
            self._emit_flt_state()
        self.trial = None
        self.trials_done += 1
        self._emit_session_state()

    # -- message builders -----------------------------------------------------------

    def _emit_session_state(self) -> None:
        self._emit("session_state", **self._session_state_payload())

    def _session_state_msg(self, seq: int) -> dict:
        return make_message("session_state", seq=seq, t=self.time_s, **self._session_state_payload())

    def _session_state_payload(self) -> dict:
        s = self._require_session()
        return {
            "phase": s.phase.value,
            "session": s.stage.session_index,
            "stage": s.stage.label,
            "movements": list(s.stage.movements),
            "collected": sorted(s.collected_movements, key=list(s.stage.movements).index),
            "nr": s.nr,
            "t_d_s": s.t_d,
            "t_max_s": s.stage.t_max_s,
            "ntt": s.ntt,
            "trials_done": self.trials_done,
            "trials_total": len(self.targets) if self.targets else s.stage.trials,
            "provenance": s.models[-1].provenance if s.models else None,
        }

    def _emit_clusters(self) -> None:
        self._emit("clusters", **self._clusters_payload())

    def _clusters_msg(self, seq: int) -> dict:
        return make_message("clusters", seq=seq, t=self.time_s, **self._clusters_payload())

    def _clusters_payload(self) -> dict:
        session = self._require_session()
        model = session.model
        cal = session.calibration
        views = centroid_view(model)
        centroids = {}
        points = {}
        for movement in model.movements:
            centroids[movement] = [float(v) for v in views[movement]]
            block = cal.classes[movement]
            stride = max(1, int(np.ceil(block.shape[0] / self.cfg.cluster_points_cap)))
            cloud = reviewer_coords(model, block[::stride])
            points[movement] = [[float(v) for v in row] for row in np.atleast_2d(cloud)]
        return {
            "movements": list(model.movements),
            "centroids": centroids,
            "points": points,
            "provenance": model.provenance,
        }

    def _emit_cursor(self, decision) -> None:
        view = self._last_view if self._last_view is not None else np.zeros(3)
        self._emit("cursor3d", p=[float(v) for v in np.ravel(view)[:3]], label=decision.label)
        self._emit(
            "decision",
            label=decision.label,
            winning_axis=decision.winning_axis,
            t_star=decision.t_star,
            distance=decision.distance,
            margin=decision.margin,
        )

    def _emit_flt_state(self) -> None:
        trial = self.trial
        if trial is None:
            return
        self._emit(
            "flt_state",
            trial=self.trials_done,
            prompt=trial.spec.gesture,
            cursor=[trial.cursor.r, trial.cursor.phi],
            target=[trial.spec.target.r, trial.spec.target.phi],
            half_width=trial.spec.half_width,
            elapsed_s=trial.elapsed_s,
            dwell_s=trial.dwell_s,
            started=trial.started,
            outcome=trial.outcome,
            location=trial.location,
            time_limit_s=trial.config.time_limit_s,
        )

    # -- persistence --------------------------------------------------------------

    def write_outputs(self, log_path=None, transcript_path=None) -> None:
        if log_path is not None:
            session = self._require_session()
            write_session_log(log_path, session.events)
        if transcript_path is not None:
            with open(transcript_path, "wb") as fh:
                for msg in self.transcript:
                    fh.write(encode_message(msg))
