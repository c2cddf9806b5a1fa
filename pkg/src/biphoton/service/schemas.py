"""Pydantic request/response models for the HTTP service.

These mirror the package's JSON formats: density matrices as basis + re/im
grids, tomography entries keyed by "C", event streams as parallel cycle and
channel-label lists.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

PolLabel = Literal["H", "V", "D", "A", "R", "L"]
BasisLabel = Literal["rect", "diag", "circ"]
ChannelLabel = Literal["XX", "XCO", "XCROSS"]


class DotModel(BaseModel):
    splitting_ueV: float = Field(0.0, ge=0.0)
    exciton_dwell_ns: float = Field(1.0, gt=0.0)
    scramble_prob: float = Field(0.0, ge=0.0, le=1.0)
    background_fraction: float = Field(0.0, ge=0.0, le=1.0)
    background_dip: float | None = Field(None, ge=0.0, le=1.0)


class SettingModel(BaseModel):
    xx: PolLabel
    basis: BasisLabel


class DensityMatrixModel(BaseModel):
    basis: list[str]
    re: list[list[float]]
    im: list[list[float]]


class StateResponse(BaseModel):
    rho: DensityMatrixModel
    metrics: dict[str, float]
    correlations: dict[str, float]
    expected_dip: float


class EventsModel(BaseModel):
    cycles: list[int]
    channels: list[ChannelLabel]


class PeakModel(BaseModel):
    g2_zero: float
    sigma: float
    zero_count: int
    side_mean: float


class CorrelationModel(BaseModel):
    C: float
    sigma: float
    n_co: int
    n_cross: int
    g_co: float
    g_co_sigma: float
    g_cross: float
    g_cross_sigma: float
    delays: list[int]
    C_series: list[float]
    sigma_series: list[float | None]


class SimulateRequest(BaseModel):
    dot: DotModel = DotModel()
    setting: SettingModel | None = None  # None simulates the trigger autocorrelation
    cycles: int = Field(100_000, gt=0, le=10_000_000)
    pair_efficiency: float = Field(0.5, gt=0.0, le=1.0)
    seed: int
    partitions: int = Field(1, ge=1)
    max_delay: int = Field(10, ge=1)
    include_events: bool = False


class SimulateResponse(BaseModel):
    records: int
    channel_counts: dict[str, int]
    correlation: CorrelationModel | None = None
    autocorrelation: PeakModel | None = None
    events: EventsModel | None = None


class CorrelateRequest(BaseModel):
    events: EventsModel
    max_delay: int = Field(10, ge=1)
    kind: Literal["cross", "auto"] = "cross"


class CorrelateResponse(BaseModel):
    correlation: CorrelationModel | None = None
    autocorrelation: PeakModel | None = None


class TomoEntryModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    xx: PolLabel
    basis: BasisLabel
    c: float = Field(alias="C", ge=-1.0, le=1.0)
    n_co: int | None = Field(None, ge=0)
    n_cross: int | None = Field(None, ge=0)


class TomoRequest(BaseModel):
    entries: list[TomoEntryModel]
    n_resamples: int | None = Field(None, ge=1)
    seed: int = 0


class TomoResponse(BaseModel):
    t_matrix: list[list[float]]
    consistency_residual: float
    rho_linear: DensityMatrixModel
    rho_physical: DensityMatrixModel
    element_sigmas: list[list[float]] | None = None
    metric_sigmas: dict[str, float] | None = None


class MetricsRequest(BaseModel):
    """Either a full tomography result or a bare density matrix with sigmas."""

    tomography: TomoResponse | None = None
    rho: DensityMatrixModel | None = None
    sigmas: dict[str, float] | None = None


class TestRowModel(BaseModel):
    name: str
    value: float
    sigma: float | None
    limit: str
    passes: bool
    sigmas_clear: float | None


class TestTableModel(BaseModel):
    tests: list[TestRowModel]
    all_pass: bool
    mean_sigmas_clear: float | None


class PipelineRequest(BaseModel):
    preset: Literal["ideal", "paper_dot", "classical"] | None = None
    config: dict[str, float | int | str] = Field(default_factory=dict)


class HealthResponse(BaseModel):
    status: str
    version: str
