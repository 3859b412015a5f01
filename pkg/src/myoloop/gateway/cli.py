"""Command-line interface.

File formats:
  EMG recordings    emg/v1 text container (see signal module)
  models            subspace/v1 binary container
  session logs      sessionlog/v1, newline-delimited JSON events
  transcripts       reviewer/v1 length-delimited messages, concatenated
  scripts           script/v1 JSON: {"session", "seed", "commands": [...]}
  sweep configs     JSON: {"session", "levels", "seeds", "sigma_within", "policy"}
  manifests         JSON: {"session", "movements": {movement: emg path}}
"""
from __future__ import annotations

import asyncio
import dataclasses
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from ..classifier import build_axes, classify
from ..errors import MyoloopError, StreamFormatError
from ..flt import CursorConfig, FltConfig, Trial, assign_locations, block_metrics, sample_targets
from ..session import plan_session, read_session_log, report_from_events
from ..signal import (
    FeatureConfig,
    feature_matrix,
    features_from_array,
    read_emg_file,
    write_emg_file,
)
from ..subspace import CalibrationSet, fit_lda, load_model, project, save_model
from ..synth import AgentPolicy, AgentSource, make_stage_profiles, run_sweep
from .engine import Engine, EngineConfig, FileSource, TeeSource

SCRIPT_VERSION = "script/v1"


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        _fail(f"{what} {path}: not found")
    except json.JSONDecodeError as exc:
        _fail(f"{what} {path}:{exc.lineno}: {exc.msg}")


def _metric_table(metrics: dict) -> str:
    def fmt(v):
        return "-" if v is None else f"{v:.4f}"

    lines = [
        "metric  value",
        f"CR      {fmt(metrics.get('CR'))}",
        f"OT      {fmt(metrics.get('OT'))}",
        f"PE      {fmt(metrics.get('PE'))}",
        f"TP      {fmt(metrics.get('TP'))}",
    ]
    return "\n".join(lines)


#: Metric rows exported by `report --csv`, one per assessment summary metric.
REPORT_ROWS = ("CR", "OT", "PE", "TP", "NTT", "NR")


def _engine_config(
    config_path: str | None,
    session_index: int,
    seed: int,
    sample_rate: float | None = None,
    n_channels: int | None = None,
) -> EngineConfig:
    """EngineConfig from defaults, an optional JSON config file, and a stream."""
    overrides = _load_json(config_path, "config") if config_path else {}
    feature = FeatureConfig(**overrides.get("feature", {}))
    if sample_rate is not None or n_channels is not None:
        feature = dataclasses.replace(
            feature,
            sample_rate=sample_rate if sample_rate is not None else feature.sample_rate,
            n_channels=n_channels if n_channels is not None else feature.n_channels,
        )
    flt_overrides = dict(overrides.get("flt", {}))
    if "start" in flt_overrides:
        flt_overrides["start"] = CursorConfig(*flt_overrides["start"])
    try:
        return EngineConfig(
            session_index=session_index,
            seed=seed,
            t_rest=float(overrides.get("t_rest", 0.15)),
            regularization=overrides.get("regularization"),
            feature=feature,
            flt=FltConfig(**flt_overrides),
            seconds_per_position=float(overrides.get("seconds_per_position", 2.0)),
        )
    except TypeError as exc:
        _fail(f"config {config_path}: {exc}")


def _bind_default() -> tuple[str, int]:
    """Bind address from MYOLOOP_BIND (host:port), else the usual default."""
    raw = os.environ.get("MYOLOOP_BIND", "127.0.0.1:8765")
    host, _, port = raw.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        _fail(f"MYOLOOP_BIND={raw!r} is not host:port")


@click.group()
def main():
    """Myoelectric training loop tools."""


@main.command()
@click.option("--manifest", required=True, help="JSON mapping movements to EMG files")
@click.option("--out", required=True, help="model file to write")
@click.option("--regularization", type=float, default=None, help="ridge (default: auto)")
def calibrate(manifest, out, regularization):
    """Fit a subspace model from labeled EMG recordings."""
    spec = _load_json(manifest, "manifest")
    fcfg = FeatureConfig()
    classes = {}
    try:
        for movement, path in spec["movements"].items():
            stream = read_emg_file(path)
            classes[movement] = feature_matrix(stream, fcfg)
        cal = CalibrationSet(classes)
        model = fit_lda(cal, regularization)
    except (MyoloopError, ValueError, KeyError) as exc:
        _fail(str(exc))
    save_model(model, out)
    click.echo(f"model: d={model.d} p={model.p} movements={len(model.movements)}")
    click.echo(f"eigenvalues: {[round(float(v), 6) for v in model.eigenvalues]}")
    click.echo(f"wrote {out}")


@main.command()
@click.option("--manifest", required=True, help="JSON mapping movements to EMG files")
@click.option("--session", "session_index", type=int, required=True)
@click.option("--script", "script_path", required=True, help="exploration step script")
@click.option("--log", "log_path", required=True, help="session log to write")
def explore(manifest, session_index, script_path, log_path):
    """Run a scripted exploration phase and write its session log."""
    from ..session import ManualClock, Session, write_session_log

    spec = _load_json(manifest, "manifest")
    steps = _load_json(script_path, "script").get("steps", [])
    fcfg = FeatureConfig()
    clock = ManualClock()
    try:
        session = Session(plan_session(session_index), clock=clock)
        for movement, path in spec["movements"].items():
            session.collect_movement(movement, feature_matrix(read_emg_file(path), fcfg))
        session.start_exploration()
        for step in steps:
            if "advance" in step:
                clock.advance(float(step["advance"]))
            elif "recalibrate" in step:
                feats = feature_matrix(read_emg_file(step["emg"]), fcfg)
                session.recalibrate(step["recalibrate"], feats)
            elif step.get("end"):
                break
        session.end_exploration()
    except (MyoloopError, ValueError, KeyError) as exc:
        _fail(str(exc))
    write_session_log(log_path, session.events)
    click.echo(f"NR={session.nr} T_d={session.t_d:.3f}s NTT={session.ntt:.3f}")
    click.echo(f"wrote {log_path}")


@main.command()
@click.option("--model", "model_path", required=True)
@click.option("--session", "session_index", type=int, required=True)
@click.option("--input", "emg_path", required=True, help="EMG recording driving the cursor")
@click.option("--seed", type=int, default=0)
@click.option("--t-rest", type=float, default=0.15)
def assess(model_path, session_index, emg_path, seed, t_rest):
    """Run an assessment block with decisions replayed from an EMG file."""
    try:
        model = load_model(model_path)
        stream = read_emg_file(emg_path)
    except (MyoloopError, ValueError) as exc:
        _fail(str(exc))
    axes = build_axes(model)
    fcfg = FeatureConfig(sample_rate=stream.rate, n_channels=stream.n_channels)
    cfg = FltConfig()
    stage = plan_session(session_index)
    targets = sample_targets(stage, seed=seed, config=cfg)
    locations = assign_locations(len(targets), cfg.handedness)

    source = FileSource(stream)
    w, s = fcfg.window_samples, fcfg.step_samples
    records = []
    try:
        for spec, location in zip(targets, locations):
            trial = Trial(spec, cfg, location=location)
            buffer = source.take(w - s)
            while trial.outcome is None:
                buffer = np.vstack([buffer, source.take(s)])[-w:]
                feats = features_from_array(buffer, fcfg.sample_rate, fcfg)
                decision = classify(axes, project(model, feats), t_rest=t_rest)
                trial.step(decision.label)
            records.append(trial.record(model.provenance))
    except MyoloopError:
        pass  # source exhausted: report the trials we completed
    if not records:
        _fail("input too short for a single trial")
    metrics = block_metrics(records, width=cfg.width)
    click.echo(f"trials: {metrics['n_trials']} successes: {metrics['n_success']}")
    click.echo(_metric_table(metrics))


@main.command()
@click.option("--sweep", "sweep_path", required=True, help="sweep config JSON")
@click.option("--out", "out_path", default=None, help="CSV to write (default: stdout only)")
def simulate(sweep_path, out_path):
    """Run the synthetic separability study and tabulate metrics per level."""
    cfg = _load_json(sweep_path, "sweep config")
    try:
        stage = plan_session(int(cfg.get("session", 1)))
        levels = [float(x) for x in cfg["levels"]]
        seeds = [int(s) for s in cfg.get("seeds", range(10))]
        policy = AgentPolicy(**cfg.get("policy", {}))
        rows = run_sweep(
            levels, seeds, stage, policy=policy, sigma_within=float(cfg.get("sigma_within", 0.10))
        )
    except (MyoloopError, ValueError, KeyError, TypeError) as exc:
        _fail(str(exc))
    header = "spacing,n_runs,CR,OT,PE,TP"
    lines = [header]
    for row in rows:
        lines.append(
            ",".join(
                "" if row[k] is None else f"{row[k]:.6f}" if isinstance(row[k], float) else str(row[k])
                for k in ("spacing", "n_runs", "CR", "OT", "PE", "TP")
            )
        )
    csv_text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(csv_text, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    click.echo(csv_text.strip())


@main.command()
@click.option("--session", "session_index", type=int, default=1)
@click.option("--seed", type=int, default=0)
@click.option("--spacing", type=float, default=6.0)
@click.option("--recalibrations", type=int, default=0, help="scripted recalibration count")
@click.option("--config", "config_path", default=None, help="rates/thresholds JSON")
@click.option("--out-dir", required=True)
def record(session_index, seed, spacing, recalibrations, config_path, out_dir):
    """Run a full synthetic session and record its EMG, script, log, transcript."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = plan_session(session_index)
    profiles = make_stage_profiles(stage.movements, spacing)
    cfg = _engine_config(config_path, session_index, seed)
    source = TeeSource(AgentSource(profiles, AgentPolicy(), cfg.flt, rate=cfg.feature.sample_rate, seed=seed))
    engine = Engine(source, cfg)
    commands = build_session_script(stage, recalibrations)
    try:
        engine.run_script(commands)
    except MyoloopError as exc:
        _fail(str(exc))
    write_emg_file(out / "session.emg", source.recorded_stream())
    script = {"version": SCRIPT_VERSION, "session": session_index, "seed": seed, "commands": commands}
    (out / "script.json").write_text(json.dumps(script, indent=2) + "\n", encoding="utf-8")
    engine.write_outputs(log_path=out / "session.log", transcript_path=out / "transcript.bin")
    summary = engine.session.summary()
    click.echo(json.dumps({k: v for k, v in summary.items() if k != "records"}, default=float))
    click.echo(f"wrote {out}/session.emg, script.json, session.log, transcript.bin")


def build_session_script(stage, recalibrations: int = 0) -> list[dict]:
    commands: list[dict] = [{"type": "start_calibration", "session": stage.session_index}]
    commands += [{"type": "collect", "movement": m} for m in stage.movements]
    for i in range(recalibrations):
        commands.append({"type": "advance", "seconds": 5.0})
        commands.append({"type": "recalibrate", "movement": stage.active_movements[i % len(stage.active_movements)]})
    commands.append({"type": "end_exploration"})
    commands.append({"type": "run_assessment"})
    return commands


@main.command()
@click.option("--emg", "emg_path", required=True)
@click.option("--script", "script_path", required=True)
@click.option("--config", "config_path", default=None, help="rates/thresholds JSON")
@click.option("--log", "log_path", required=True)
@click.option("--transcript", "transcript_path", required=True)
def replay(emg_path, script_path, config_path, log_path, transcript_path):
    """Replay a recorded session deterministically, writing log and transcript."""
    script = _load_json(script_path, "script")
    if script.get("version") != SCRIPT_VERSION:
        _fail(f"script {script_path}: unsupported version {script.get('version')!r}")
    try:
        stream = read_emg_file(emg_path)
        engine = run_replay(stream, script, config_path)
    except (MyoloopError, ValueError) as exc:
        _fail(str(exc))
    engine.write_outputs(log_path=log_path, transcript_path=transcript_path)
    summary = engine.session.summary()
    click.echo(json.dumps({k: v for k, v in summary.items() if k != "records"}, default=float))
    click.echo(f"wrote {log_path} and {transcript_path}")


def run_replay(stream, script: dict, config_path: str | None = None) -> Engine:
    cfg = _engine_config(
        config_path,
        int(script.get("session", 1)),
        int(script.get("seed", 0)),
        sample_rate=stream.rate,
        n_channels=stream.n_channels,
    )
    engine = Engine(FileSource(stream), cfg)
    engine.run_script(script["commands"])
    return engine


@main.command()
@click.option("--log", "log_path", required=True)
@click.option("--csv", "csv_path", default=None, help="also export metric rows as CSV")
def report(log_path, csv_path):
    """Recompute session metrics from an event log and cross-check the summary."""
    try:
        events = read_session_log(log_path)
        recomputed = report_from_events(events)
    except (MyoloopError, ValueError, FileNotFoundError) as exc:
        _fail(str(exc))
    click.echo(f"session {recomputed['session']} (stage {recomputed['stage']})")
    click.echo(f"NR={recomputed['NR']} T_d={recomputed['T_d_s']} NTT={recomputed['NTT']}")
    if recomputed.get("CR") is not None:
        click.echo(_metric_table(recomputed))
    if csv_path:
        lines = ["metric,value"]
        for key in REPORT_ROWS:
            value = recomputed.get(key)
            lines.append(f"{key}," + ("" if value is None else repr(float(value))))
        Path(csv_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
        click.echo(f"wrote {csv_path}")
    logged = next((e for e in events if e["type"] == "session_end"), None)
    if logged is not None:
        mismatches = []
        for key in ("NR", "NTT", "CR", "OT", "PE", "TP"):
            a, b = logged.get(key), recomputed.get(key)
            if a is not None and b is not None and abs(a - b) > 1e-12:
                mismatches.append(key)
        if mismatches:
            _fail(f"recomputed metrics disagree with logged summary: {mismatches}")
        click.echo("recomputed metrics match the logged summary")


@main.command()
@click.option("--host", default=None, help="default: MYOLOOP_BIND or 127.0.0.1")
@click.option("--port", type=int, default=None, help="0 picks a free port")
@click.option("--emg", "emg_path", default=None, help="replay this EMG file")
@click.option("--script", "script_path", default=None, help="drive commands from a script")
@click.option("--session", "session_index", type=int, default=None, help="default: script value or 1")
@click.option("--seed", type=int, default=None, help="default: script value or 0")
@click.option("--spacing", type=float, default=6.0)
@click.option("--config", "config_path", default=None, help="rates/thresholds JSON")
@click.option("--log", "log_path", default=None, help="mirror the session log to this file")
@click.option("--pace/--no-pace", default=True)
def serve(host, port, emg_path, script_path, session_index, seed, spacing, config_path, log_path, pace):
    """Serve the reviewer/v1 stream over websockets.

    With --emg the source replays a recording; otherwise a synthetic user
    supplies the signal. With --script, commands run server-side and clients
    just watch; otherwise a controller client drives the session.
    """
    from .server import GatewayServer
    import websockets

    env_host, env_port = _bind_default()
    host = host if host is not None else env_host
    port = port if port is not None else env_port

    script_spec = _load_json(script_path, "script") if script_path else None
    if session_index is None:
        session_index = int(script_spec.get("session", 1)) if script_spec else 1
    if seed is None:
        seed = int(script_spec.get("seed", 0)) if script_spec else 0

    if emg_path:
        try:
            stream = read_emg_file(emg_path)
        except StreamFormatError as exc:
            _fail(str(exc))
        cfg = _engine_config(
            config_path, session_index, seed, sample_rate=stream.rate, n_channels=stream.n_channels
        )
        source = FileSource(stream)
    else:
        cfg = _engine_config(config_path, session_index, seed)
        stage = plan_session(session_index)
        profiles = make_stage_profiles(stage.movements, spacing)
        source = AgentSource(profiles, AgentPolicy(), cfg.flt, rate=cfg.feature.sample_rate, seed=seed)
    engine = Engine(source, cfg)
    script = script_spec["commands"] if script_spec else None

    async def run():
        server = GatewayServer(engine, pace=pace, log_path=log_path)
        async with websockets.serve(server.handler, host, port) as ws_server:
            bound = ws_server.sockets[0].getsockname()[1]
            click.echo(f"listening on ws://{host}:{bound}", nl=True)
            sys.stdout.flush()
            if script:
                # let a viewer attach before the replay starts
                grace = asyncio.get_event_loop().time() + 10.0
                while not server.subscribers and asyncio.get_event_loop().time() < grace:
                    await asyncio.sleep(0.05)
                for cmd in script:
                    async with server._lock:
                        if cmd.get("type") == "advance":
                            engine.advance(float(cmd["seconds"]))
                        elif cmd.get("type") == "run_assessment":
                            pass  # assessment is pumped step by step below
                        else:
                            engine.handle_command(cmd)
                        await server._broadcast()
                # pump remaining assessment trials at the broadcast cadence
                from ..session import Phase

                while (
                    engine.session is not None
                    and engine.session.phase is Phase.ASSESSMENT
                    and engine.trials_done < len(engine.targets)
                ):
                    async with server._lock:
                        if engine.trial is None:
                            engine.start_trial()
                        engine.step()
                        await server._broadcast()
                    if pace:
                        await asyncio.sleep(0.05)
                if engine.session is not None and engine.session.phase is Phase.ASSESSMENT:
                    engine.finish_session()
                    async with server._lock:
                        await server._broadcast()
                server._mirror_log()
                click.echo("script complete; serving the final snapshot")
                sys.stdout.flush()
                await asyncio.Event().wait()
            else:
                await server.pump()

    try:
        asyncio.run(run())
    except KeyboardInterrupt:
        click.echo("stopped")


if __name__ == "__main__":
    main()
