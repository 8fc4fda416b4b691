"""HTTP service wrapping the capacity calculator and the simulator.

The endpoints call the same core entry points as the CLI; nothing here
holds state between requests, so any number of clients can share one
instance.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, capacity, reporting
from ..harness import ConfigError, SimConfig, run_ensemble
from .schemas import (
    CapacityRequest,
    CapacityResponse,
    HealthResponse,
    ModeSummary,
    SimulateRequest,
    SimulateResponse,
    TraceRow,
)

app = FastAPI(
    title="sidelink-ledger",
    description="Capacity reports and Monte Carlo scheduling runs for the NR V2X sidelink",
    version=__version__,
)


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/capacity", response_model=CapacityResponse)
def capacity_endpoint(req: CapacityRequest) -> CapacityResponse:
    try:
        num = capacity.numerology(req.mu)
        mcs = capacity.mcs_entry(req.mcs_index)
        report = capacity.capacity_report(
            req.payload_bytes, mcs, num, req.rri_ms, subchannel_mode=req.subchannel_mode
        )
        baseline_veh = None
        overhead = None
        if req.baseline_payload_bytes is not None:
            base = capacity.capacity_report(
                req.baseline_payload_bytes,
                mcs,
                num,
                req.rri_ms,
                subchannel_mode=req.subchannel_mode,
            )
            baseline_veh = base.max_vehicles
            if base.max_vehicles is not None and report.max_vehicles is not None:
                overhead = float(
                    capacity.overhead_fraction(
                        min(report.max_vehicles, base.max_vehicles), base.max_vehicles
                    )
                )
    except capacity.CapacityError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return CapacityResponse(
        mu=req.mu,
        payload_bytes=req.payload_bytes,
        mcs_index=req.mcs_index,
        rri_ms=req.rri_ms,
        re_per_prb=report.re_per_prb,
        res_per_package=report.res_per_package,
        prbs_per_package=report.prbs_per_package,
        subchannel_prbs=report.subchannel_prbs,
        prbs_per_slot=report.prbs_per_slot,
        subchannels_per_slot=report.subchannels_per_slot,
        max_vehicles=report.max_vehicles,
        baseline_max_vehicles=baseline_veh,
        overhead_fraction=overhead,
    )


@app.post("/simulate", response_model=SimulateResponse)
def simulate_endpoint(req: SimulateRequest) -> SimulateResponse:
    try:
        config = SimConfig(
            num_vehicles=req.num_vehicles,
            rri_ms=req.rri_ms,
            numerology=req.numerology,
            payload_bytes=req.payload_bytes,
            mcs_index=req.mcs_index,
            num_rris=req.num_rris,
            seeds=tuple(req.seeds),
            mode=req.mode,
            keep_probability=req.keep_probability,
            allow_overload=req.allow_overload,
        )
        config.check_capacity()
        modes = ("baseline", "ledger") if config.mode == "both" else (config.mode,)
        traces = [run_ensemble(config, mode) for mode in modes]
    except (ConfigError, capacity.CapacityError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return SimulateResponse(
        traces=[TraceRow(**row) for row in reporting.trace_rows(traces)],
        summaries=[
            ModeSummary(
                mode=trace.mode,
                per_seed_convergence_rri=trace.per_seed_convergence_rri,
                converged_seeds=sum(
                    1 for c in trace.per_seed_convergence_rri if c is not None
                ),
            )
            for trace in traces
        ],
    )
