"""Physical-resource capacity arithmetic for NR V2X sidelink broadcast.

Computes how many resource elements one PRB offers to the shared channel,
how many PRBs a slot holds for a given numerology, how many PRBs a package
of a given payload needs under a given MCS, and from there the number of
sub-channels per slot and the number of vehicles one reservation interval
can carry.

All arithmetic is exact (integers and `fractions.Fraction`); spectral
efficiency values are parsed from decimal strings so that golden values
are bit-stable across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable


class CapacityError(ValueError):
    """Base class for dimensioning failures."""


class DimensioningError(CapacityError):
    """The PHY configuration leaves no room for data inside a PRB."""


class PackageTooLargeError(CapacityError):
    """A single package needs more PRBs than one slot provides."""


# Legal sub-channel widths (PRBs) in the standard resource-pool configuration.
STANDARD_SUBCHANNEL_SIZES = (10, 12, 15, 20, 25, 50, 75, 100)

SUBCHANNEL_MODES = ("exact", "standard")


@dataclass(frozen=True)
class Numerology:
    """One numerology row: subcarrier spacing and the derived slot timing.

    ``slot_duration_ms`` is always ``1 / slots_per_subframe``; the subframe
    itself is fixed at 1 ms.
    """

    mu: int
    scs_khz: int
    slots_per_frame: int
    slots_per_subframe: int
    slot_duration_ms: float
    symbols_per_slot: int
    symbols_per_subframe: int
    max_carrier_bw_mhz: int

    @property
    def slot_duration_us(self) -> int:
        """Slot duration in whole microseconds (exact for mu 0..3)."""
        return 1000 // self.slots_per_subframe


NUMEROLOGIES = (
    Numerology(0, 15, 10, 1, 1.0, 14, 14, 50),
    Numerology(1, 30, 20, 2, 0.5, 14, 28, 100),
    Numerology(2, 60, 40, 4, 0.25, 14, 56, 200),
    Numerology(3, 120, 80, 8, 0.125, 14, 112, 400),
)


def numerology(mu: int) -> Numerology:
    """Look up a numerology row by its index (0..3)."""
    if not 0 <= mu <= 3:
        raise CapacityError(f"numerology index must be 0..3, got {mu}")
    return NUMEROLOGIES[mu]


@dataclass(frozen=True)
class PhyConfig:
    """Per-PRB symbol budget feeding the RE count.

    Defaults reproduce the broadcast configuration used throughout the
    capacity reports: 12 shared-channel symbols, no feedback symbols, no
    overhead REs, 12 DMRS REs.
    """

    subcarriers_per_rb: int = 12
    sh_symbols: int = 12
    pfsch_symbols: int = 0
    overhead_re: int = 0
    dmrs_re: int = 12
    prbs_per_subchannel: int | None = None

    def __post_init__(self) -> None:
        if self.subcarriers_per_rb != 12:
            raise CapacityError("a resource block is 12 subcarriers")
        for name in ("sh_symbols", "pfsch_symbols", "overhead_re", "dmrs_re"):
            if getattr(self, name) < 0:
                raise CapacityError(f"{name} must be >= 0")
        if self.sh_symbols < self.pfsch_symbols:
            raise CapacityError("sh_symbols must be >= pfsch_symbols")
        if (
            self.prbs_per_subchannel is not None
            and self.prbs_per_subchannel not in STANDARD_SUBCHANNEL_SIZES
        ):
            raise CapacityError(
                f"prbs_per_subchannel must be one of {STANDARD_SUBCHANNEL_SIZES}"
            )


PAPER_PHY = PhyConfig()


@dataclass(frozen=True)
class McsEntry:
    """Modulation order and spectral efficiency for one MCS index."""

    index: int
    modulation_order: int
    spectral_efficiency: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.index <= 27:
            raise CapacityError(f"MCS index must be 0..27, got {self.index}")
        if self.modulation_order not in (2, 4, 6, 8):
            raise CapacityError(
                f"modulation order must be 2, 4, 6 or 8, got {self.modulation_order}"
            )
        if not isinstance(self.spectral_efficiency, Fraction):
            # Accept decimal strings / ints; floats go through their decimal
            # repr so "0.2344" stays 2344/10000 rather than a binary float.
            object.__setattr__(
                self,
                "spectral_efficiency",
                Fraction(str(self.spectral_efficiency)),
            )
        if self.spectral_efficiency <= 0:
            raise CapacityError("spectral efficiency must be > 0")


#: The one MCS entry the default broadcast configuration uses: QPSK with a
#: spectral efficiency of 0.2344.
DEFAULT_MCS = McsEntry(1, 2, Fraction("0.2344"))


def load_mcs_table(path: str | Path | None = None) -> dict[int, McsEntry]:
    """Load an MCS table from a plain-text file.

    Each non-comment line holds ``index modulation_order spectral_efficiency``
    with the efficiency written as a decimal. Without a path the bundled
    default table is used.
    """
    if path is None:
        text = (
            resources.files("sidelink_ledger")
            .joinpath("data/mcs_table.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    table: dict[int, McsEntry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise CapacityError(f"MCS table line {lineno}: expected 3 columns, got {raw!r}")
        try:
            entry = McsEntry(int(parts[0]), int(parts[1]), Fraction(parts[2]))
        except (ValueError, ZeroDivisionError) as exc:
            raise CapacityError(f"MCS table line {lineno}: {exc}") from exc
        if entry.index in table:
            raise CapacityError(f"MCS table line {lineno}: duplicate index {entry.index}")
        table[entry.index] = entry
    if not table:
        raise CapacityError("MCS table is empty")
    return table


def mcs_entry(index: int, path: str | Path | None = None) -> McsEntry:
    """Look up one MCS entry, raising if the table has no such index."""
    table = load_mcs_table(path)
    try:
        return table[index]
    except KeyError:
        raise CapacityError(f"MCS index {index} not in table (have {sorted(table)})") from None


def re_per_prb(cfg: PhyConfig = PAPER_PHY) -> int:
    """Resource elements one PRB contributes to the shared channel.

    12 subcarriers times the data symbols (shared-channel symbols minus
    feedback symbols), minus overhead and DMRS resource elements.
    """
    n = (
        cfg.subcarriers_per_rb * (cfg.sh_symbols - cfg.pfsch_symbols)
        - cfg.overhead_re
        - cfg.dmrs_re
    )
    if n <= 0:
        raise DimensioningError(
            f"PHY config leaves no data REs in a PRB (got {n})"
        )
    return n


def prbs_per_slot(num: Numerology) -> int:
    """PRBs the carrier offers per slot: floor(bandwidth / SCS / 12)."""
    return (num.max_carrier_bw_mhz * 10**6) // (num.scs_khz * 1000 * 12)


def res_per_package(payload_bytes: int, mcs: McsEntry = DEFAULT_MCS) -> int:
    """Resource elements needed to carry one package of ``payload_bytes``.

    ceil(payload_bits / modulation_order / spectral_efficiency), computed
    exactly.
    """
    if payload_bytes < 0:
        raise CapacityError("payload_bytes must be >= 0")
    if payload_bytes == 0:
        return 0
    bits = Fraction(payload_bytes * 8, mcs.modulation_order)
    return math.ceil(bits / mcs.spectral_efficiency)


def prbs_per_package(
    payload_bytes: int,
    mcs: McsEntry = DEFAULT_MCS,
    cfg: PhyConfig = PAPER_PHY,
) -> int:
    """PRBs needed for one package; allocated PRBs must cover the payload,
    so the RE quotient is rounded up."""
    res = res_per_package(payload_bytes, mcs)
    if res == 0:
        return 0
    return math.ceil(Fraction(res, re_per_prb(cfg)))


def subchannel_prbs(package_prbs: int, mode: str = "exact") -> int:
    """Width of one sub-channel in PRBs for a package of ``package_prbs``.

    ``exact`` sizes the sub-channel to the package; ``standard`` rounds up
    to the next legal resource-pool width.
    """
    if package_prbs <= 0:
        raise CapacityError("package_prbs must be > 0")
    if mode == "exact":
        return package_prbs
    if mode == "standard":
        for size in STANDARD_SUBCHANNEL_SIZES:
            if size >= package_prbs:
                return size
        raise PackageTooLargeError(
            f"package of {package_prbs} PRBs exceeds the largest standard "
            f"sub-channel ({STANDARD_SUBCHANNEL_SIZES[-1]} PRBs)"
        )
    raise CapacityError(f"subchannel mode must be one of {SUBCHANNEL_MODES}, got {mode!r}")


def subchannels_per_slot(num: Numerology, package_prbs: int) -> int:
    """Sub-channels per slot: floor(PRBs per slot / PRBs per package)."""
    if package_prbs <= 0:
        raise CapacityError("package_prbs must be > 0")
    n = prbs_per_slot(num) // package_prbs
    if n == 0:
        raise PackageTooLargeError(
            f"a {package_prbs}-PRB package does not fit in a "
            f"{prbs_per_slot(num)}-PRB slot"
        )
    return n


def max_vehicles(rri_ms: int, num: Numerology, package_prbs: int) -> int:
    """Vehicles one reservation interval supports at one transmission each:
    sub-channels per slot times slots per RRI."""
    if rri_ms <= 0:
        raise CapacityError("rri_ms must be a positive number of milliseconds")
    return subchannels_per_slot(num, package_prbs) * (rri_ms * num.slots_per_subframe)


def overhead_fraction(ledger_capacity: int, baseline_capacity: int) -> Fraction:
    """Capacity given up by the larger package: 1 - ledger/baseline."""
    if baseline_capacity <= 0:
        raise CapacityError("baseline_capacity must be > 0")
    if ledger_capacity > baseline_capacity:
        raise CapacityError("ledger_capacity must not exceed baseline_capacity")
    return 1 - Fraction(ledger_capacity, baseline_capacity)


@dataclass(frozen=True)
class CapacityReport:
    """Full dimensioning pipeline result for one payload size.

    ``subchannels_per_slot`` and ``max_vehicles`` are ``None`` for an empty
    payload (a zero-PRB package fits anywhere and bounds nothing).
    """

    payload_bytes: int
    mcs_index: int
    mu: int
    rri_ms: int
    re_per_prb: int
    res_per_package: int
    prbs_per_package: int
    subchannel_prbs: int | None
    prbs_per_slot: int
    subchannels_per_slot: int | None
    max_vehicles: int | None


def capacity_report(
    payload_bytes: int,
    mcs: McsEntry,
    num: Numerology,
    rri_ms: int,
    cfg: PhyConfig = PAPER_PHY,
    subchannel_mode: str = "exact",
) -> CapacityReport:
    """Run the whole dimensioning pipeline for one payload size."""
    per_prb = re_per_prb(cfg)
    res = res_per_package(payload_bytes, mcs)
    prbs = prbs_per_package(payload_bytes, mcs, cfg)
    if prbs == 0:
        width = sub = veh = None
    else:
        if cfg.prbs_per_subchannel is not None:
            if cfg.prbs_per_subchannel < prbs:
                raise PackageTooLargeError(
                    f"package of {prbs} PRBs does not fit the configured "
                    f"{cfg.prbs_per_subchannel}-PRB sub-channel"
                )
            width = cfg.prbs_per_subchannel
        else:
            width = subchannel_prbs(prbs, subchannel_mode)
        sub = subchannels_per_slot(num, width)
        veh = max_vehicles(rri_ms, num, width)
    return CapacityReport(
        payload_bytes=payload_bytes,
        mcs_index=mcs.index,
        mu=num.mu,
        rri_ms=rri_ms,
        re_per_prb=per_prb,
        res_per_package=res,
        prbs_per_package=prbs,
        subchannel_prbs=width,
        prbs_per_slot=prbs_per_slot(num),
        subchannels_per_slot=sub,
        max_vehicles=veh,
    )


def iter_numerologies() -> Iterable[Numerology]:
    return iter(NUMEROLOGIES)
