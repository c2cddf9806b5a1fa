"""FastAPI application exposing the simulation and analysis chain.

Endpoints wrap the core package one stage at a time (/state, /simulate,
/correlate, /tomo, /metrics) plus the full /pipeline. Domain errors map to
400 (bad input), numeric failures to 422; schema violations get FastAPI's
usual 422.
"""

from __future__ import annotations

import numpy as np
from fastapi import APIRouter, FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..cascade import (
    DetectionConfig,
    DotParams,
    expected_autocorr_dip,
    emitted_state,
    simulate_events,
    xx_autocorrelation_sim,
)
from ..coincidence import SettingCorrelation, autocorrelation_peak, correlate_stream
from ..config import load_preset, resolve_config
from ..errors import DataError, NumericError, UsageError
from ..events import Channel, EventStream
from ..metrics import METRIC_FUNCTIONS, bootstrap_metric_sigmas, run_all_tests, table_from_tomography
from ..pipeline import run_pipeline
from ..polarization import DensityMatrix, MeasurementSetting, born_correlation
from ..tomography import TomographyEntry, TomographyInput, TomographyResult, reconstruct
from . import schemas

_INLINE_EVENT_CAP = 200_000
_CHANNEL_CODE = {c.file_label: int(c) for c in Channel}
_CHANNEL_LABEL = {int(c): c.file_label for c in Channel}

router = APIRouter()


def _correlation_model(res: SettingCorrelation) -> schemas.CorrelationModel:
    return schemas.CorrelationModel(
        C=res.c0,
        sigma=res.c0_sigma,
        n_co=res.n_co,
        n_cross=res.n_cross,
        g_co=res.peak_co.g0,
        g_co_sigma=res.peak_co.sigma,
        g_cross=res.peak_cross.g0,
        g_cross_sigma=res.peak_cross.sigma,
        delays=list(res.delays),
        C_series=list(res.c_series),
        sigma_series=list(res.sigma_series),
    )


def _peak_model(peak) -> schemas.PeakModel:
    return schemas.PeakModel(
        g2_zero=peak.g0, sigma=peak.sigma, zero_count=peak.zero_count, side_mean=peak.side_mean
    )


def _stream_from_model(events: schemas.EventsModel) -> EventStream:
    cycles = np.asarray(events.cycles, dtype=np.uint64)
    channels = np.asarray([_CHANNEL_CODE[label] for label in events.channels], dtype=np.uint8)
    return EventStream(cycles=cycles, channels=channels)


@router.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@router.post("/state", response_model=schemas.StateResponse)
def state(dot: schemas.DotModel) -> schemas.StateResponse:
    p = DotParams(**dot.model_dump())
    rho = emitted_state(p)
    correlations = {
        basis: born_correlation(rho, MeasurementSetting(xx, basis))
        for xx, basis in (("H", "rect"), ("D", "diag"), ("L", "circ"))
    }
    return schemas.StateResponse(
        rho=schemas.DensityMatrixModel(**rho.to_json_dict()),
        metrics={name: float(fn(rho)) for name, fn in METRIC_FUNCTIONS.items()},
        correlations=correlations,
        expected_dip=expected_autocorr_dip(p),
    )


@router.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest) -> schemas.SimulateResponse:
    p = DotParams(**req.dot.model_dump())
    setting = None if req.setting is None else MeasurementSetting(req.setting.xx, req.setting.basis)
    det = DetectionConfig(
        setting=setting,
        cycles=req.cycles,
        pair_efficiency=req.pair_efficiency,
        seed=req.seed,
        partitions=req.partitions,
    )
    if setting is None:
        stream = xx_autocorrelation_sim(p, det)
        correlation = None
        auto = _peak_model(autocorrelation_peak(stream, req.max_delay))
    else:
        stream = simulate_events(p, det)
        correlation = _correlation_model(correlate_stream(stream, req.max_delay))
        auto = None
    events = None
    if req.include_events:
        if len(stream) > _INLINE_EVENT_CAP:
            raise DataError(
                f"{len(stream)} records exceed the inline cap of {_INLINE_EVENT_CAP}; lower cycles"
            )
        events = schemas.EventsModel(
            cycles=[int(c) for c in stream.cycles],
            channels=[_CHANNEL_LABEL[int(code)] for code in stream.channels],
        )
    return schemas.SimulateResponse(
        records=len(stream),
        channel_counts=stream.counts_by_channel(),
        correlation=correlation,
        autocorrelation=auto,
        events=events,
    )


@router.post("/correlate", response_model=schemas.CorrelateResponse)
def correlate(req: schemas.CorrelateRequest) -> schemas.CorrelateResponse:
    stream = _stream_from_model(req.events)
    if req.kind == "auto":
        return schemas.CorrelateResponse(
            autocorrelation=_peak_model(autocorrelation_peak(stream, req.max_delay))
        )
    return schemas.CorrelateResponse(
        correlation=_correlation_model(correlate_stream(stream, req.max_delay))
    )


@router.post("/tomo", response_model=schemas.TomoResponse)
def tomo(req: schemas.TomoRequest) -> schemas.TomoResponse:
    entries = [
        TomographyEntry(e.xx, e.basis, e.c, n_co=e.n_co, n_cross=e.n_cross) for e in req.entries
    ]
    tomo_input = TomographyInput(entries)
    result = reconstruct(tomo_input, n_resamples=req.n_resamples, seed=req.seed)
    if req.n_resamples:
        result.metric_sigmas = bootstrap_metric_sigmas(tomo_input, req.n_resamples, req.seed)
    return schemas.TomoResponse(**result.to_json_dict())


@router.post("/metrics", response_model=schemas.TestTableModel)
def metrics(req: schemas.MetricsRequest) -> schemas.TestTableModel:
    if req.tomography is not None:
        result = TomographyResult.from_json_dict(req.tomography.model_dump())
        table = table_from_tomography(result, sigmas=req.sigmas or result.metric_sigmas)
    elif req.rho is not None:
        rho = DensityMatrix.from_json_dict(req.rho.model_dump())
        table = run_all_tests(rho, req.sigmas)
    else:
        raise DataError("provide either 'tomography' or 'rho'")
    return schemas.TestTableModel(**table.to_json_dict())


@router.post("/pipeline")
def pipeline(req: schemas.PipelineRequest) -> dict:
    file_values = load_preset(req.preset) if req.preset else {}
    cfg = resolve_config(file_values, dict(req.config))
    return run_pipeline(cfg).summary_dict()


def create_app() -> FastAPI:
    app = FastAPI(title="biphoton", version=__version__)
    app.include_router(router)

    @app.exception_handler(DataError)
    @app.exception_handler(UsageError)
    @app.exception_handler(ValueError)
    def _bad_input(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(NumericError)
    def _numeric(request, exc):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    return app
