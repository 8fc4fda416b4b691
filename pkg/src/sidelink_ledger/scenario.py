"""Scenario files: a flat key = value text format for experiment configs.

Every field of the simulation config and the PHY config is addressable by
name; unknown keys are rejected with the offending line. Writing the
effective config (defaults resolved) and re-reading it yields an identical
config, which keeps experiment provenance in one reproducible file.
"""

from __future__ import annotations

from pathlib import Path

from .capacity import PhyConfig
from .harness import SimConfig


class ScenarioError(ValueError):
    """Unparseable or invalid scenario file."""


_SIM_KEYS = (
    "num_vehicles",
    "rri_ms",
    "numerology",
    "payload_bytes",
    "mcs_index",
    "num_rris",
    "seeds",
    "mode",
    "keep_probability",
    "allow_overload",
    "subchannel_mode",
    "mcs_table",
)

_PHY_KEYS = (
    "subcarriers_per_rb",
    "sh_symbols",
    "pfsch_symbols",
    "overhead_re",
    "dmrs_re",
    "prbs_per_subchannel",
)

_INT_KEYS = {
    "num_vehicles",
    "rri_ms",
    "numerology",
    "payload_bytes",
    "mcs_index",
    "num_rris",
    "subcarriers_per_rb",
    "sh_symbols",
    "pfsch_symbols",
    "overhead_re",
    "dmrs_re",
}

_BOOL_VALUES = {"true": True, "false": False}


def _parse_value(key: str, raw: str):
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ScenarioError(f"{key}: expected an integer, got {raw!r}") from None
    if key == "keep_probability":
        try:
            return float(raw)
        except ValueError:
            raise ScenarioError(f"{key}: expected a number, got {raw!r}") from None
    if key == "allow_overload":
        try:
            return _BOOL_VALUES[raw.lower()]
        except KeyError:
            raise ScenarioError(f"{key}: expected true or false, got {raw!r}") from None
    if key == "seeds":
        try:
            return tuple(int(part) for part in raw.split(",") if part.strip() != "")
        except ValueError:
            raise ScenarioError(f"seeds: expected comma-separated integers, got {raw!r}") from None
    if key == "prbs_per_subchannel":
        if raw.lower() == "auto":
            return None
        try:
            return int(raw)
        except ValueError:
            raise ScenarioError(f"{key}: expected an integer or 'auto', got {raw!r}") from None
    if key == "mcs_table":
        return None if raw.lower() == "default" else raw
    return raw


def parse_scenario(text: str) -> SimConfig:
    """Parse scenario text into a validated config."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SIM_KEYS and key not in _PHY_KEYS:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value)

    phy_kwargs = {k: values.pop(k) for k in list(values) if k in _PHY_KEYS}
    try:
        phy = PhyConfig(**phy_kwargs)
        return SimConfig(phy=phy, **values)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario(text)


def format_scenario(config: SimConfig) -> str:
    """Render a config, defaults resolved, in the file format."""
    lines = ["# sidelink-ledger scenario"]
    lines.append(f"num_vehicles = {config.num_vehicles}")
    lines.append(f"rri_ms = {config.rri_ms}")
    lines.append(f"numerology = {config.numerology}")
    lines.append(f"payload_bytes = {config.payload_bytes}")
    lines.append(f"mcs_index = {config.mcs_index}")
    lines.append(f"num_rris = {config.num_rris}")
    lines.append(f"seeds = {','.join(str(s) for s in config.seeds)}")
    lines.append(f"mode = {config.mode}")
    lines.append(f"keep_probability = {config.keep_probability!r}")
    lines.append(f"allow_overload = {'true' if config.allow_overload else 'false'}")
    lines.append(f"subchannel_mode = {config.subchannel_mode}")
    lines.append(f"mcs_table = {config.mcs_table if config.mcs_table else 'default'}")
    phy = config.phy
    lines.append(f"subcarriers_per_rb = {phy.subcarriers_per_rb}")
    lines.append(f"sh_symbols = {phy.sh_symbols}")
    lines.append(f"pfsch_symbols = {phy.pfsch_symbols}")
    lines.append(f"overhead_re = {phy.overhead_re}")
    lines.append(f"dmrs_re = {phy.dmrs_re}")
    width = phy.prbs_per_subchannel
    lines.append(f"prbs_per_subchannel = {'auto' if width is None else width}")
    return "\n".join(lines) + "\n"


def write_scenario(config: SimConfig, path: str | Path) -> None:
    Path(path).write_text(format_scenario(config), encoding="utf-8")
