"""dexlink command line: run, replay, calibrate, bench, serve."""

from __future__ import annotations

import argparse
import math
import sys
import threading
import time

import numpy as np

from .config import AppConfig, load_config
from .daemon import (
    BUNDLED_SCENARIOS,
    ControlLoop,
    bench_control_loop,
    bench_decode,
    build_glove,
    build_interactive_loop,
    load_glove_model,
)
from .glove import (
    PoseScript,
    SimulatedGlove,
    SinusoidalNonlinearity,
    apply_calibration,
    build_calibration,
    identity_tables,
    raw_to_angle,
    tables_to_json,
)
from .presets import closing_script, open_pose
from .recording import read_demo, replay
from .server import TelemetryServer
from .wire import N_CHANNELS


def _noise(seed: int | None) -> SinusoidalNonlinearity:
    if seed is None:
        return SinusoidalNonlinearity.none()
    return SinusoidalNonlinearity.sample(np.random.default_rng(seed))


def _apply_overrides(config: AppConfig, args) -> AppConfig:
    from dataclasses import replace

    loop = config.loop
    if getattr(args, "scenario", None):
        loop = replace(loop, scenario=args.scenario)
    if getattr(args, "duration", None) is not None:
        loop = replace(loop, duration_s=args.duration)
    if getattr(args, "clock", None):
        loop = replace(loop, clock=args.clock)
    return replace(config, loop=loop)


def cmd_run(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    glove_model = load_glove_model(config)
    if args.pose_script:
        pose = PoseScript.load(args.pose_script)
    elif config.loop.pose_script:
        pose = PoseScript.load(config.loop.pose_script)
    else:
        pose = closing_script(glove_model, duration_s=config.loop.duration_s)
    glove = build_glove(config, pose)
    glove.noise = _noise(args.noise_seed)
    loop = ControlLoop(config, glove, record_path=args.record)
    if config.loop.clock == "simulated":
        status = loop.run_simulated()
    else:
        status = loop.run_wall_clock(threading.Event())
    stats = loop.latency_stats()
    print(f"status={status} ticks={stats.get('ticks', 0)}")
    if args.record:
        print(f"recorded {loop.recorder.records_written} records to {args.record}")
    return 0


def cmd_replay(args) -> int:
    header, records = read_demo(args.path)
    print(f"header: {header}")
    t_prev = 0.0
    for delivery_t, rec in replay(args.path, speed=args.speed):
        if not args.no_sleep:
            time.sleep(max(0.0, delivery_t - t_prev))
        t_prev = delivery_t
        forces = " ".join(f"{int(g):4d}" for g in rec.forces)
        classes = ",".join(c.value for c in rec.feedback)
        print(f"t={rec.t_ns / 1e9:8.3f}s forces[g]=({forces}) feedback=({classes})")
    print(f"replayed {len(records)} records at speed {args.speed}")
    return 0


def cmd_calibrate(args) -> int:
    config = load_config(args.config)
    glove_model = load_glove_model(config)
    noise = _noise(args.noise_seed)

    if args.zero:
        # hold the flat-hand pose and capture per-joint offsets in degrees
        glove = SimulatedGlove(
            glove_model, PoseScript.constant(open_pose(glove_model)), noise, rate_hz=config.loop.mocap_rate
        )
        frame, servos = glove.sample_at(0.0)
        tables = identity_tables()
        offsets = np.zeros(glove_model.dof_count)
        enc_idx, srv_idx = glove.channel_map.indices(glove_model)
        for ch in range(N_CHANNELS):
            offsets[enc_idx[ch]] = apply_calibration(tables[ch], raw_to_angle(frame.adc_codes[ch], frame.vcc_code))
        from .glove import servo_ticks_to_angle

        for s in range(5):
            offsets[srv_idx[s]] = servo_ticks_to_angle(servos.positions[s])
        np.savetxt(args.out, offsets.reshape(1, -1), delimiter=",", fmt="%.6f")
        print(f"wrote {glove_model.dof_count} zero offsets to {args.out}")
        return 0

    channels = range(N_CHANNELS) if args.table == "all" else [int(args.table)]
    tables = {}
    for ch in channels:
        if not 0 <= ch < N_CHANNELS:
            print(f"channel {ch} outside [0, {N_CHANNELS - 1}]", file=sys.stderr)
            return 2
        tables[ch] = build_calibration(lambda t, ch=ch: noise.distort(ch, t), spacing_deg=args.spacing)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(tables_to_json(tables))
    print(f"wrote correction tables for channel(s) {sorted(tables)} to {args.out}")
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    stats = bench_control_loop(config, ticks=args.ticks)
    print(f"control ticks: {stats['ticks']}")
    durations = np.asarray(stats["durations_ms"])
    counts, edges = np.histogram(durations, bins=10)
    width = max(1, counts.max())
    print("tick latency histogram (ms):")
    for count, lo, hi in zip(counts, edges[:-1], edges[1:]):
        bar = "#" * round(40 * count / width)
        print(f"  {lo:7.3f} - {hi:7.3f} | {bar} {count}")
    print(f"tick latency p50 {stats['p50_ms']:.3f} ms, p99 {stats['p99_ms']:.3f} ms, max {stats['max_ms']:.3f} ms")
    decode = bench_decode()
    print(f"wire decode: {decode['frames']} frames in {decode['seconds']:.3f} s")
    # greppable summary lines
    print(f"p99_tick_ms={stats['p99_ms']:.3f}")
    print(f"decode_fps={decode['fps']:.0f}")
    budget_ms = 1000.0 / config.loop.control_rate
    ok = stats["p99_ms"] <= budget_ms and decode["fps"] >= config.loop.mocap_rate
    print(f"budget: tick<={budget_ms:.1f}ms decode>={config.loop.mocap_rate:.0f}fps -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_serve(args) -> int:
    from dataclasses import replace

    config = _apply_overrides(load_config(args.config), args)
    config = replace(config, loop=replace(config.loop, clock="wall"))
    if args.port is not None:
        config = replace(config, serve_port=args.port)
    loop = build_interactive_loop(config, record_path=args.record, noise=_noise(args.noise_seed))
    server = TelemetryServer(loop, host=config.serve_host, port=config.serve_port)
    loop.on_snapshot = server.broadcast
    server.start()
    print(f"serving ws://{config.serve_host}:{config.serve_port} scenario={loop.scenario_name}")
    stop = threading.Event()
    try:
        loop.run_wall_clock(stop, duration_s=math.inf)
    except KeyboardInterrupt:
        pass
    finally:
        stop.set()
        server.stop()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dexlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a teleop session against the simulator")
    p_run.add_argument("--config", default=None, help="config JSON path (defaults bundled)")
    p_run.add_argument("--scenario", choices=BUNDLED_SCENARIOS, default=None)
    p_run.add_argument("--record", default=None, help="write a demonstration log here")
    p_run.add_argument("--duration", type=float, default=None, help="seconds to run")
    p_run.add_argument("--clock", choices=("simulated", "wall"), default=None)
    p_run.add_argument("--pose-script", default=None, help="CSV pose trajectory for the glove")
    p_run.add_argument("--noise-seed", type=int, default=None, help="enable 2%% encoder nonlinearity")
    p_run.set_defaults(func=cmd_run)

    p_rep = sub.add_parser("replay", help="replay a demonstration log")
    p_rep.add_argument("path")
    p_rep.add_argument("--speed", type=float, default=1.0)
    p_rep.add_argument("--no-sleep", action="store_true", help="dump without pacing")
    p_rep.set_defaults(func=cmd_replay)

    p_cal = sub.add_parser("calibrate", help="capture zero offsets or encoder correction tables")
    group = p_cal.add_mutually_exclusive_group(required=True)
    group.add_argument("--zero", action="store_true", help="record flat-hand zero offsets")
    group.add_argument("--table", default=None, metavar="CHANNEL", help="channel index or 'all'")
    p_cal.add_argument("--config", default=None)
    p_cal.add_argument("--out", default=None)
    p_cal.add_argument("--spacing", type=float, default=5.0, help="table knot spacing in degrees")
    p_cal.add_argument("--noise-seed", type=int, default=0, help="emulated encoder nonlinearity seed")
    p_cal.set_defaults(func=cmd_calibrate)

    p_bench = sub.add_parser("bench", help="print control-tick latency and decode throughput")
    p_bench.add_argument("--config", default=None)
    p_bench.add_argument("--ticks", type=int, default=300)
    p_bench.set_defaults(func=cmd_bench)

    p_srv = sub.add_parser("serve", help="wall-clock daemon with WebSocket telemetry")
    p_srv.add_argument("--config", default=None)
    p_srv.add_argument("--port", type=int, default=None)
    p_srv.add_argument("--scenario", choices=BUNDLED_SCENARIOS, default=None)
    p_srv.add_argument("--record", default=None)
    p_srv.add_argument("--noise-seed", type=int, default=None)
    p_srv.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    if args.command == "calibrate" and not args.zero and args.table is None:
        parser.error("calibrate requires --zero or --table")
    if args.command == "calibrate" and args.out is None:
        args.out = "zero_offsets.csv" if args.zero else "calibration.json"
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
