"""Source model and Monte-Carlo click generation for a pulsed pair emitter.

State model
-----------
Each excitation cycle emits one photon pair. The ideal pair is the Bell state
(|HH> + |VV>)/sqrt(2). Three degradations are modeled:

* Splitting dephasing: a level splitting S makes the intermediate state
  accumulate relative phase S*t/hbar over an exponentially distributed dwell
  time tau (mean exciton_dwell_ns). Averaging exp(i*S*t/hbar) gives the
  coherence factor kappa = 1/(1 - i*x) with x = S*dwell/hbar: magnitude
  d(S) = 1/sqrt(1 + x^2), phase arctan(x).
* Spin scrambling: with probability scramble_prob the pair decoheres onto the
  cross-polarized diagonal, (|HV><HV| + |VH><VH|)/2, adding no coherence.
* Unpolarized background: weight background_fraction of the maximally mixed
  state I/4 (state view), or equivalently uncorrelated Poisson background
  clicks (event view; see below).

Event model
-----------
simulate_events draws, per cycle, the joint outcome of the dot pair from the
background-free state, thins each arm by pair_efficiency, then adds Poisson
background clicks per channel. Background rates are solved in closed form so
that the expected share of zero-delay coincidences involving a background
click equals background_fraction, reproducing the state-view mixture in every
measured correlation. With per-channel means mu = (eps/2)*m on each X port
and (eps/2)*n on the XX channel:

* X-X autocorrelation zero-delay level: g0 = 1 - (1 + m)^-2
* cross-correlation background share b: (n + m) + n*m = b/(1 - b)

Symmetric arms (n = m) make g0 equal b. An optional background_dip pins g0
independently (the XX spectral window may carry more background than the X
window), with the bound g0 <= b*(2 - b) keeping n >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .events import Channel, EventStream
from .polarization import DensityMatrix, I4, MeasurementSetting, joint_probabilities

HBAR_UEV_NS = 0.6582119569  # reduced Planck constant in ueV*ns

_CROSS_DIAG = np.diag([0.0, 0.5, 0.5, 0.0]).astype(complex)


@dataclass(frozen=True)
class DotParams:
    """Physical knobs of the source."""

    splitting_ueV: float = 0.0
    exciton_dwell_ns: float = 1.0
    scramble_prob: float = 0.0
    background_fraction: float = 0.0
    background_dip: float | None = None

    def __post_init__(self):
        if self.splitting_ueV < 0:
            raise ValueError(f"splitting_ueV must be >= 0, got {self.splitting_ueV}")
        if self.exciton_dwell_ns <= 0:
            raise ValueError(f"exciton_dwell_ns must be > 0, got {self.exciton_dwell_ns}")
        if not 0.0 <= self.scramble_prob <= 1.0:
            raise ValueError(f"scramble_prob must be in [0, 1], got {self.scramble_prob}")
        if not 0.0 <= self.background_fraction <= 1.0:
            raise ValueError(f"background_fraction must be in [0, 1], got {self.background_fraction}")
        if self.background_dip is not None:
            b = self.background_fraction
            bound = b * (2.0 - b)
            if not 0.0 <= self.background_dip <= bound:
                raise ValueError(
                    f"background_dip must be in [0, {bound:.6g}] for background_fraction {b}, "
                    f"got {self.background_dip}"
                )


@dataclass(frozen=True)
class DetectionConfig:
    """Detection-side knobs of one simulated run."""

    setting: MeasurementSetting | None
    cycles: int
    pair_efficiency: float
    seed: int
    partitions: int = 1

    def __post_init__(self):
        if self.cycles <= 0:
            raise ValueError(f"cycles must be positive, got {self.cycles}")
        if not 0.0 < self.pair_efficiency <= 1.0:
            raise ValueError(f"pair_efficiency must be in (0, 1], got {self.pair_efficiency}")
        if self.partitions < 1:
            raise ValueError(f"partitions must be >= 1, got {self.partitions}")


def coherence_factor(p: DotParams) -> complex:
    """Dwell-averaged phase factor kappa = 1/(1 - i*x), x = S*dwell/hbar."""
    x = p.splitting_ueV * p.exciton_dwell_ns / HBAR_UEV_NS
    return 1.0 / (1.0 - 1j * x)


def dephasing_magnitude(p: DotParams) -> float:
    """d(S) = 1/sqrt(1 + (S*dwell/hbar)^2)."""
    return abs(coherence_factor(p))


def dot_state(p: DotParams) -> DensityMatrix:
    """Emitted pair state before the background admixture."""
    s = p.scramble_prob
    kappa = coherence_factor(p)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5 * (1.0 - s)
    rho[3, 0] = 0.5 * (1.0 - s) * kappa
    rho[0, 3] = np.conj(rho[3, 0])
    rho += s * _CROSS_DIAG
    return DensityMatrix(rho)


def emitted_state(p: DotParams) -> DensityMatrix:
    """Dot state mixed with unpolarized background: (1-b)*rho_dot + b*I/4."""
    b = p.background_fraction
    rho = (1.0 - b) * dot_state(p).matrix + b * I4 / 4.0
    return DensityMatrix(rho)


def background_rates(p: DotParams, pair_efficiency: float) -> tuple[float, float]:
    """Mean background clicks per cycle: (XX channel, each X port).

    Closed forms from the module docstring; background_fraction = 1 is the
    degenerate pure-background source and is handled by the samplers directly.
    """
    b = p.background_fraction
    if b >= 1.0:
        raise ValueError("background_fraction = 1 has no finite background rate")
    if b == 0.0:
        return 0.0, 0.0
    big_b = b / (1.0 - b)
    if p.background_dip is None:
        m = math.sqrt(1.0 + big_b) - 1.0
        n = m
    else:
        if p.background_dip >= 1.0:
            raise ValueError("background_dip must be < 1")
        m = 1.0 / math.sqrt(1.0 - p.background_dip) - 1.0
        n = (big_b - m) / (1.0 + m)
    half_eps = pair_efficiency / 2.0
    return n * half_eps, m * half_eps


def expected_autocorr_dip(p: DotParams) -> float:
    """Expected normalized zero-delay level of the X-X autocorrelation."""
    if p.background_fraction >= 1.0:
        return 1.0
    return p.background_dip if p.background_dip is not None else p.background_fraction


def _partition_bounds(cycles: int, partitions: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, cycles, partitions + 1).astype(np.int64)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(partitions)]


def _assemble(cycle_lists, channel_codes) -> tuple[np.ndarray, np.ndarray]:
    """Merge per-channel click cycle arrays into one (cycle, channel)-sorted stream."""
    cycles = np.concatenate(cycle_lists) if cycle_lists else np.empty(0, dtype=np.uint64)
    channels = np.concatenate(channel_codes) if channel_codes else np.empty(0, dtype=np.uint8)
    order = np.lexsort((channels, cycles))
    return cycles[order], channels[order]


def _background_clicks(rng, mu: float, n_cycles: int, lo: int) -> np.ndarray:
    counts = rng.poisson(mu, n_cycles) if mu > 0 else np.zeros(n_cycles, dtype=np.int64)
    return (np.repeat(np.arange(n_cycles, dtype=np.uint64), counts) + np.uint64(lo)).astype(np.uint64)


def simulate_events(p: DotParams, cfg: DetectionConfig) -> EventStream:
    """Simulate one cross-correlation run: XX, XCO and XCROSS click records.

    Deterministic for fixed (p, cfg) including seed and partitions: cycle
    blocks use substreams spawned from SeedSequence(seed), with a fixed draw
    order per block (pair outcome, XX thinning, X thinning, then background
    Poisson counts for XX, XCO, XCROSS).
    """
    if cfg.setting is None:
        raise ValueError("simulate_events requires cfg.setting")
    eps = cfg.pair_efficiency
    pure_background = p.background_fraction >= 1.0
    if pure_background:
        mu_xx = mu_x = eps / 2.0
        cum = None
    else:
        mu_xx, mu_x = background_rates(p, eps)
        probs = joint_probabilities(dot_state(p), cfg.setting)
        cum = np.cumsum(probs)
        cum[-1] = 1.0

    out_cycles, out_channels = [], []
    for k, (lo, hi) in enumerate(_partition_bounds(cfg.cycles, cfg.partitions)):
        n = hi - lo
        if n == 0:
            continue
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(k,)))
        cyc: list[np.ndarray] = []
        cod: list[np.ndarray] = []
        if not pure_background:
            outcome = np.searchsorted(cum, rng.random(n), side="right")
            xx_hit = (outcome < 2) & (rng.random(n) < eps)
            x_hit = rng.random(n) < eps
            co_hit = (outcome % 2 == 0) & x_hit
            cross_hit = (outcome % 2 == 1) & x_hit
            base = np.arange(n, dtype=np.uint64) + np.uint64(lo)
            for mask, channel in ((xx_hit, Channel.XX), (co_hit, Channel.X_CO), (cross_hit, Channel.X_CROSS)):
                hits = base[mask]
                cyc.append(hits)
                cod.append(np.full(hits.size, int(channel), dtype=np.uint8))
        for mu, channel in ((mu_xx, Channel.XX), (mu_x, Channel.X_CO), (mu_x, Channel.X_CROSS)):
            bg = _background_clicks(rng, mu, n, lo)
            cyc.append(bg)
            cod.append(np.full(bg.size, int(channel), dtype=np.uint8))
        merged = _assemble(cyc, cod)
        out_cycles.append(merged[0])
        out_channels.append(merged[1])

    cycles = np.concatenate(out_cycles) if out_cycles else np.empty(0, dtype=np.uint64)
    channels = np.concatenate(out_channels) if out_channels else np.empty(0, dtype=np.uint8)
    return EventStream(cycles, channels, config=cfg)


def xx_autocorrelation_sim(p: DotParams, cfg: DetectionConfig) -> EventStream:
    """Simulate the paired photon's two analysis ports only (XCO = H, XCROSS = V).

    The dot contributes exactly one X photon per cycle, so zero-delay
    coincidences between the two ports arise only when background is involved.
    """
    eps = cfg.pair_efficiency
    pure_background = p.background_fraction >= 1.0
    if pure_background:
        mu_x = eps / 2.0
    else:
        _, mu_x = background_rates(p, eps)

    out_cycles, out_channels = [], []
    for k, (lo, hi) in enumerate(_partition_bounds(cfg.cycles, cfg.partitions)):
        n = hi - lo
        if n == 0:
            continue
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(k,)))
        cyc: list[np.ndarray] = []
        cod: list[np.ndarray] = []
        if not pure_background:
            to_h = rng.random(n) < 0.5  # unpolarized marginal: each port equally likely
            detected = rng.random(n) < eps
            base = np.arange(n, dtype=np.uint64) + np.uint64(lo)
            for mask, channel in ((to_h & detected, Channel.X_CO), (~to_h & detected, Channel.X_CROSS)):
                hits = base[mask]
                cyc.append(hits)
                cod.append(np.full(hits.size, int(channel), dtype=np.uint8))
        for channel in (Channel.X_CO, Channel.X_CROSS):
            bg = _background_clicks(rng, mu_x, n, lo)
            cyc.append(bg)
            cod.append(np.full(bg.size, int(channel), dtype=np.uint8))
        merged = _assemble(cyc, cod)
        out_cycles.append(merged[0])
        out_channels.append(merged[1])

    cycles = np.concatenate(out_cycles) if out_cycles else np.empty(0, dtype=np.uint64)
    channels = np.concatenate(out_channels) if out_channels else np.empty(0, dtype=np.uint8)
    return EventStream(cycles, channels, config=cfg)


def background_sensitivity(p: DotParams, fractions) -> list[dict]:
    """Exact model observables on a grid of background fractions (no sampling)."""
    from .metrics import METRIC_FUNCTIONS  # local import: metrics depends on this module's peers
    from .polarization import born_correlation

    rows = []
    for b in fractions:
        q = replace(p, background_fraction=float(b), background_dip=None)
        rho = emitted_state(q)
        row = {"background_fraction": float(b)}
        for name, fn in METRIC_FUNCTIONS.items():
            row[name] = float(fn(rho))
        for label, setting in (
            ("C_rect", MeasurementSetting("H", "rect")),
            ("C_diag", MeasurementSetting("D", "diag")),
            ("C_circ", MeasurementSetting("L", "circ")),
        ):
            row[label] = born_correlation(rho, setting)
        rows.append(row)
    return rows
