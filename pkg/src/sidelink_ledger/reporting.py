"""Trace and event-log serialization, plus the replay consistency check.

Trace files carry seed-aggregated collision probabilities per RRI; event
logs carry every collision event per (mode, seed) block. The replay check
recomputes the trace from the event log by occupancy counting and reports
the first divergence, giving an independent path from raw events to the
published numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .harness import MetricsTrace

TRACE_FIELDS = ("rri_index", "mode", "mean_collision_prob", "min_prob", "max_prob", "n_seeds")

EVENTS_MAGIC = "# sidelink-ledger events v1"


class ReplayError(ValueError):
    """Malformed trace or event-log input."""


def trace_rows(traces: list[MetricsTrace]) -> list[dict]:
    """Flatten ensembles into output rows ordered by (mode, rri_index)."""
    rows = []
    for trace in sorted(traces, key=lambda t: t.mode):
        for i, mean in enumerate(trace.per_rri_collision_probability):
            rows.append(
                {
                    "rri_index": i,
                    "mode": trace.mode,
                    "mean_collision_prob": mean,
                    "min_prob": trace.min_probability[i],
                    "max_prob": trace.max_probability[i],
                    "n_seeds": trace.n_seeds,
                }
            )
    rows.sort(key=lambda r: (r["mode"], r["rri_index"]))
    return rows


def render_trace_csv(rows: list[dict]) -> str:
    lines = [",".join(TRACE_FIELDS)]
    for row in rows:
        lines.append(
            f"{row['rri_index']},{row['mode']},{row['mean_collision_prob']!r},"
            f"{row['min_prob']!r},{row['max_prob']!r},{row['n_seeds']}"
        )
    return "\n".join(lines) + "\n"


def render_trace_json(rows: list[dict]) -> str:
    return json.dumps({"traces": rows}, indent=2) + "\n"


def parse_trace_csv(text: str) -> list[dict]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != ",".join(TRACE_FIELDS):
        raise ReplayError("trace file missing the expected header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(TRACE_FIELDS):
            raise ReplayError(f"trace line {lineno}: expected {len(TRACE_FIELDS)} columns")
        try:
            rows.append(
                {
                    "rri_index": int(parts[0]),
                    "mode": parts[1],
                    "mean_collision_prob": float(parts[2]),
                    "min_prob": float(parts[3]),
                    "max_prob": float(parts[4]),
                    "n_seeds": int(parts[5]),
                }
            )
        except ValueError as exc:
            raise ReplayError(f"trace line {lineno}: {exc}") from exc
    return rows


def render_events(traces: list[MetricsTrace], num_vehicles: int, num_rris: int) -> str:
    """One block per (mode, seed): header comment plus one line per event,
    ``t_us,rri,subframe,subchannel,colliders`` with ids ';'-joined."""
    lines = [EVENTS_MAGIC]
    for trace in sorted(traces, key=lambda t: t.mode):
        for run_trace in trace.per_seed:
            lines.append(
                f"# block mode={run_trace.mode} seed={run_trace.seed} "
                f"num_vehicles={num_vehicles} num_rris={num_rris}"
            )
            for ev in run_trace.collision_events:
                ids = ";".join(str(v) for v in ev.colliders)
                lines.append(
                    f"{ev.t_trans_us},{ev.rri_index},{ev.subframe_index},{ev.subchannel_id},{ids}"
                )
    return "\n".join(lines) + "\n"


@dataclass
class EventBlock:
    mode: str
    seed: int
    num_vehicles: int
    num_rris: int
    colliding_per_rri: list[int]


def parse_events(text: str) -> list[EventBlock]:
    lines = text.splitlines()
    if not lines or lines[0] != EVENTS_MAGIC:
        raise ReplayError("event log missing the expected magic line")
    blocks: list[EventBlock] = []
    current: EventBlock | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("# block "):
            fields = dict(
                part.split("=", 1) for part in line[len("# block ") :].split() if "=" in part
            )
            try:
                current = EventBlock(
                    mode=fields["mode"],
                    seed=int(fields["seed"]),
                    num_vehicles=int(fields["num_vehicles"]),
                    num_rris=int(fields["num_rris"]),
                    colliding_per_rri=[],
                )
            except (KeyError, ValueError) as exc:
                raise ReplayError(f"event log line {lineno}: bad block header") from exc
            current.colliding_per_rri = [0] * current.num_rris
            blocks.append(current)
            continue
        if line.startswith("#"):
            continue
        if current is None:
            raise ReplayError(f"event log line {lineno}: event before any block header")
        parts = line.split(",")
        if len(parts) != 5:
            raise ReplayError(f"event log line {lineno}: expected 5 columns")
        try:
            rri = int(parts[1])
            colliders = [int(x) for x in parts[4].split(";") if x != ""]
        except ValueError as exc:
            raise ReplayError(f"event log line {lineno}: {exc}") from exc
        if len(colliders) < 2:
            raise ReplayError(f"event log line {lineno}: a collision needs >= 2 colliders")
        if not 0 <= rri < current.num_rris:
            raise ReplayError(f"event log line {lineno}: rri {rri} outside the block")
        current.colliding_per_rri[rri] += len(colliders)
    if not blocks:
        raise ReplayError("event log contains no blocks")
    return blocks


def replay_check(events_text: str, trace_text: str) -> tuple[bool, str]:
    """Recompute per-RRI collision probabilities from the event log and
    compare them with the trace file.

    Returns (consistent, message); the message names the first divergence.
    """
    blocks = parse_events(events_text)
    rows = parse_trace_csv(trace_text)

    by_mode: dict[str, list[EventBlock]] = {}
    for block in blocks:
        by_mode.setdefault(block.mode, []).append(block)

    recomputed: dict[tuple[str, int], tuple[float, float, float, int]] = {}
    for mode, mode_blocks in by_mode.items():
        num_rris = mode_blocks[0].num_rris
        for block in mode_blocks:
            if block.num_rris != num_rris:
                raise ReplayError(f"mode {mode}: blocks disagree on num_rris")
        n = len(mode_blocks)
        for i in range(num_rris):
            probs = [b.colliding_per_rri[i] / b.num_vehicles for b in mode_blocks]
            recomputed[(mode, i)] = (sum(probs) / n, min(probs), max(probs), n)

    seen = set()
    for row in sorted(rows, key=lambda r: (r["mode"], r["rri_index"])):
        key = (row["mode"], row["rri_index"])
        seen.add(key)
        if key not in recomputed:
            return False, f"divergence at mode={key[0]} rri={key[1]}: no events block covers it"
        mean, lo, hi, n = recomputed[key]
        if row["n_seeds"] != n:
            return False, (
                f"divergence at mode={key[0]} rri={key[1]}: "
                f"trace has {row['n_seeds']} seeds, log has {n}"
            )
        for name, trace_value, replay_value in (
            ("mean_collision_prob", row["mean_collision_prob"], mean),
            ("min_prob", row["min_prob"], lo),
            ("max_prob", row["max_prob"], hi),
        ):
            if trace_value != replay_value:
                return False, (
                    f"divergence at mode={key[0]} rri={key[1]}: "
                    f"{name} trace={trace_value!r} replay={replay_value!r}"
                )
    missing = sorted(set(recomputed) - seen)
    if missing:
        mode, i = missing[0]
        return False, f"divergence at mode={mode} rri={i}: present in log but absent from trace"
    return True, "consistent"
