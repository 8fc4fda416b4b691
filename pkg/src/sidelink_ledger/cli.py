"""Command-line front end.

Subcommands:

* ``capacity``  - dimensioning report for one payload/MCS/numerology.
* ``simulate``  - run a scenario file and write trace (and event) files.
* ``replay``    - recompute a trace from an event log and compare.
* ``serve``     - launch the HTTP service wrapping the same core.

All randomness is controlled by the scenario seeds; identical inputs
produce byte-identical output files.

Exit codes for ``simulate``: 2 unreadable or invalid config, 3 capacity
violation without --allow-overload, 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import capacity, reporting
from .harness import ConfigError, SimConfig, run_ensemble
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sidelink-ledger",
        description="Sidelink broadcast scheduling: capacity reports and Monte Carlo runs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capacity", help="print the dimensioning report for one package")
    cap.add_argument("--mu", type=int, default=0, help="numerology index (0..3)")
    cap.add_argument("--payload", type=int, default=350, help="package payload in bytes")
    cap.add_argument("--mcs", type=int, default=1, help="MCS index")
    cap.add_argument("--rri", type=int, default=100, help="reservation interval in ms")
    cap.add_argument(
        "--baseline-payload",
        type=int,
        default=300,
        help="payload to report capacity overhead against",
    )
    cap.add_argument(
        "--subchannel-mode",
        choices=capacity.SUBCHANNEL_MODES,
        default="exact",
        help="size sub-channels to the package or to the next standard width",
    )
    cap.add_argument("--mcs-table", default=None, help="path to an MCS table file")

    sim = sub.add_parser("simulate", help="run a scenario and write traces")
    sim.add_argument("--config", required=True, help="scenario file path")
    sim.add_argument("--mode", choices=("baseline", "ledger", "both"), default=None)
    sim.add_argument("--seeds", default=None, help="comma-separated seed list override")
    sim.add_argument("--out", required=True, help="trace output path")
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.add_argument("--allow-overload", action="store_true")
    sim.add_argument("--log-events", default=None, help="also write an event log here")

    rep = sub.add_parser("replay", help="check a trace file against its event log")
    rep.add_argument("--events", required=True, help="event log path")
    rep.add_argument("--trace", required=True, help="trace CSV path")

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def _fmt_fraction(value) -> str:
    return f"{float(value) * 100:.4f}%"


def cmd_capacity(args: argparse.Namespace) -> int:
    try:
        num = capacity.numerology(args.mu)
        mcs = capacity.mcs_entry(args.mcs, args.mcs_table)
        report = capacity.capacity_report(
            args.payload, mcs, num, args.rri, subchannel_mode=args.subchannel_mode
        )
        base = capacity.capacity_report(
            args.baseline_payload, mcs, num, args.rri, subchannel_mode=args.subchannel_mode
        )
    except (capacity.CapacityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(f"numerology:             mu={num.mu} (SCS {num.scs_khz} kHz, "
          f"{num.max_carrier_bw_mhz} MHz carrier)")
    print(f"payload:                {report.payload_bytes} bytes, MCS {report.mcs_index}")
    print(f"REs per PRB:            {report.re_per_prb}")
    print(f"REs per package:        {report.res_per_package}")
    print(f"PRBs per package:       {report.prbs_per_package}")
    if report.subchannels_per_slot is None:
        print("sub-channels per slot:  n/a (empty package)")
        print("max vehicles:           n/a (empty package)")
    else:
        print(f"sub-channel width:      {report.subchannel_prbs} PRBs ({args.subchannel_mode})")
        print(f"PRBs per slot:          {report.prbs_per_slot}")
        print(f"sub-channels per slot:  {report.subchannels_per_slot}")
        print(f"max vehicles per RRI:   {report.max_vehicles} (RRI {args.rri} ms)")
    if base.max_vehicles is not None and report.max_vehicles is not None:
        overhead = capacity.overhead_fraction(
            min(report.max_vehicles, base.max_vehicles), base.max_vehicles
        )
        print(
            f"baseline {base.payload_bytes} bytes:     {base.prbs_per_package} PRBs/package, "
            f"{base.subchannels_per_slot} sub-channels/slot, {base.max_vehicles} vehicles"
        )
        print(f"capacity overhead:      {_fmt_fraction(overhead)}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = load_scenario(args.config)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.mode is not None:
            config = replace(config, mode=args.mode)
        if args.seeds is not None:
            seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip() != "")
            config = replace(config, seeds=seeds)
        if args.allow_overload:
            config = replace(config, allow_overload=True)
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config.check_capacity()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY

    modes = ("baseline", "ledger") if config.mode == "both" else (config.mode,)
    traces = [run_ensemble(config, mode) for mode in modes]
    rows = reporting.trace_rows(traces)

    try:
        out = Path(args.out)
        if args.format == "csv":
            out.write_text(reporting.render_trace_csv(rows), encoding="utf-8")
        else:
            out.write_text(reporting.render_trace_json(rows), encoding="utf-8")
        if args.log_events is not None:
            Path(args.log_events).write_text(
                reporting.render_events(traces, config.num_vehicles, config.num_rris),
                encoding="utf-8",
            )
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO

    for trace in traces:
        converged = sum(1 for c in trace.per_seed_convergence_rri if c is not None)
        print(
            f"{trace.mode}: {trace.n_seeds} seeds, {config.num_rris} RRIs, "
            f"{converged}/{trace.n_seeds} seeds converged"
        )
    print(f"wrote {args.out}")
    if args.log_events is not None:
        print(f"wrote {args.log_events}")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        events_text = Path(args.events).read_text(encoding="utf-8")
        trace_text = Path(args.trace).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        consistent, message = reporting.replay_check(events_text, trace_text)
    except reporting.ReplayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(message)
    return EXIT_OK if consistent else EXIT_ERROR


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "capacity": cmd_capacity,
        "simulate": cmd_simulate,
        "replay": cmd_replay,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
