"""Coincidence histograms, side-peak normalization, and degrees of correlation.

The correlator is a single-pass streaming engine: records (sorted by cycle)
are folded into per-cycle click counts over fixed windows of cycles, and each
window is correlated against itself plus a carried tail of the previous
max_delay cycles. Memory is O(window + max_delay), independent of stream
length. Multiple clicks per cycle on a channel contribute pairwise products.

Normalization follows pulsed-source practice: the zero-delay bin is divided
by the mean of the 2*max_delay side bins. First-order Poisson errors:
sigma_g = sqrt(max(n0, 1) + n0^2/S) / side_mean with S the total side count,
and sigma_C = 2*sqrt(g_cross^2 sigma_co^2 + g_co^2 sigma_cross^2)
/ (g_co + g_cross)^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError
from .events import Channel, EventStream

DEFAULT_MAX_DELAY = 10
_WINDOW = 1 << 16


@dataclass
class CoincidenceHistogram:
    """Pair counts vs cycle delay for an ordered channel pair (first, second)."""

    delays: np.ndarray
    counts: np.ndarray
    total_cycles: int
    first: str
    second: str

    @property
    def max_delay(self) -> int:
        return int(self.delays[-1])

    def zero_count(self) -> int:
        return int(self.counts[self.max_delay])

    def to_dict(self) -> dict:
        return {
            "first": self.first,
            "second": self.second,
            "total_cycles": int(self.total_cycles),
            "delays": [int(d) for d in self.delays],
            "counts": [int(c) for c in self.counts],
        }


@dataclass
class NormalizedPeak:
    """Zero-delay bin normalized by the side-peak mean, with Poisson error."""

    g0: float
    sigma: float
    zero_count: int
    side_mean: float
    side_total: int
    side_bins: int


@dataclass
class SettingCorrelation:
    """Full correlation readout of one cross-correlation stream."""

    c0: float
    c0_sigma: float
    n_co: int
    n_cross: int
    peak_co: NormalizedPeak
    peak_cross: NormalizedPeak
    hist_co: CoincidenceHistogram
    hist_cross: CoincidenceHistogram
    delays: list[int] = field(default_factory=list)
    c_series: list[float] = field(default_factory=list)
    sigma_series: list[float | None] = field(default_factory=list)


def _iter_blocks(stream):
    if isinstance(stream, EventStream):
        yield stream.cycles, stream.channels
    else:
        yield from stream


def histogram(stream, first: Channel, second: Channel, max_delay: int = DEFAULT_MAX_DELAY,
              total_cycles: int | None = None) -> CoincidenceHistogram:
    """Count (first, second) click pairs per cycle delay in [-max_delay, +max_delay].

    `stream` is an EventStream or an iterable of (cycles, channels) blocks
    sorted by cycle. A pair at delay d is a first-channel click at cycle c and
    a second-channel click at cycle c + d.
    """
    if max_delay < 1:
        raise ValueError(f"max_delay must be >= 1, got {max_delay}")
    if int(first) == int(second):
        raise ValueError("histogram requires two distinct channels")
    d_max = int(max_delay)
    window = max(_WINDOW, 4 * d_max)
    counts = np.zeros(2 * d_max + 1, dtype=np.float64)
    tail_f = np.zeros(d_max, dtype=np.float64)
    tail_s = np.zeros(d_max, dtype=np.float64)
    first_code = np.uint8(int(first))
    second_code = np.uint8(int(second))

    cur_win = None
    f = s = None
    max_cycle = -1

    def flush(win_f, win_s):
        nonlocal tail_f, tail_s
        ext_f = np.concatenate([tail_f, win_f])
        ext_s = np.concatenate([tail_s, win_s])
        n = win_f.size
        for d in range(d_max + 1):
            counts[d_max + d] += ext_f[d_max - d : d_max + n - d] @ ext_s[d_max:]
            if d:
                counts[d_max - d] += ext_f[d_max:] @ ext_s[d_max - d : d_max + n - d]
        tail_f = ext_f[-d_max:].copy()
        tail_s = ext_s[-d_max:].copy()

    for cycles, channels in _iter_blocks(stream):
        if cycles.size == 0:
            continue
        max_cycle = max(max_cycle, int(cycles[-1]))
        win_idx = (cycles // np.uint64(window)).astype(np.int64)
        uniq, starts = np.unique(win_idx, return_index=True)
        starts = list(starts) + [cycles.size]
        for i, w in enumerate(uniq):
            w = int(w)
            if cur_win is None:
                cur_win, f, s = w, np.zeros(window), np.zeros(window)
            elif w != cur_win:
                flush(f, s)
                if w > cur_win + 1:  # a full empty window wipes any carried tail
                    tail_f[:] = 0.0
                    tail_s[:] = 0.0
                cur_win, f, s = w, np.zeros(window), np.zeros(window)
            seg_c = cycles[starts[i] : starts[i + 1]]
            seg_ch = channels[starts[i] : starts[i + 1]]
            rel = (seg_c - np.uint64(w * window)).astype(np.int64)
            mask_f = seg_ch == first_code
            if mask_f.any():
                f += np.bincount(rel[mask_f], minlength=window)
            mask_s = seg_ch == second_code
            if mask_s.any():
                s += np.bincount(rel[mask_s], minlength=window)

    if cur_win is not None:
        flush(f, s)

    if total_cycles is None:
        cfg = getattr(stream, "config", None)
        total_cycles = getattr(cfg, "cycles", None) or (max_cycle + 1 if max_cycle >= 0 else 0)
    delays = np.arange(-d_max, d_max + 1)
    return CoincidenceHistogram(
        delays=delays,
        counts=np.rint(counts).astype(np.int64),
        total_cycles=int(total_cycles),
        first=Channel(int(first)).file_label,
        second=Channel(int(second)).file_label,
    )


def normalize(hist: CoincidenceHistogram) -> NormalizedPeak:
    """Zero-delay count over side-peak mean, with first-order Poisson sigma."""
    d_max = hist.max_delay
    side = np.delete(hist.counts, d_max)
    side_total = int(side.sum())
    side_bins = int(side.size)
    if side_total <= 0:
        raise NumericError(
            f"all {side_bins} side peaks of the {hist.first}-{hist.second} histogram are zero; "
            "cannot normalize"
        )
    side_mean = side_total / side_bins
    n0 = hist.zero_count()
    g0 = n0 / side_mean
    sigma = float(np.sqrt(max(n0, 1) + n0 * n0 / side_total) / side_mean)
    return NormalizedPeak(
        g0=float(g0), sigma=sigma, zero_count=n0,
        side_mean=float(side_mean), side_total=side_total, side_bins=side_bins,
    )


def degree_of_correlation(g_co: float, g_cross: float) -> float:
    """C = (g_co - g_cross)/(g_co + g_cross)."""
    if g_co < 0 or g_cross < 0:
        raise ValueError(f"normalized rates must be non-negative, got ({g_co}, {g_cross})")
    total = g_co + g_cross
    if total <= 0:
        raise NumericError("degree of correlation undefined: both normalized rates are zero")
    return float((g_co - g_cross) / total)


def correlation_sigma(g_co: float, sigma_co: float, g_cross: float, sigma_cross: float) -> float:
    """First-order error of C under independent g errors."""
    total = g_co + g_cross
    if total <= 0:
        raise NumericError("degree of correlation undefined: both normalized rates are zero")
    return float(2.0 * np.sqrt((g_cross * sigma_co) ** 2 + (g_co * sigma_cross) ** 2) / total**2)


def _per_delay(hist: CoincidenceHistogram, side_mean: float, side_total: int):
    g = hist.counts / side_mean
    n = hist.counts.astype(np.float64)
    sigma = np.sqrt(np.maximum(n, 1.0) + n * n / side_total) / side_mean
    return g, sigma


def correlate_stream(stream, max_delay: int = DEFAULT_MAX_DELAY) -> SettingCorrelation:
    """Correlate a cross-correlation stream: XX against each X port, then C per delay."""
    hist_co = histogram(stream, Channel.XX, Channel.X_CO, max_delay)
    hist_cross = histogram(stream, Channel.XX, Channel.X_CROSS, max_delay)
    peak_co = normalize(hist_co)
    peak_cross = normalize(hist_cross)
    c0 = degree_of_correlation(peak_co.g0, peak_cross.g0)
    c0_sigma = correlation_sigma(peak_co.g0, peak_co.sigma, peak_cross.g0, peak_cross.sigma)

    g_co, s_co = _per_delay(hist_co, peak_co.side_mean, peak_co.side_total)
    g_cr, s_cr = _per_delay(hist_cross, peak_cross.side_mean, peak_cross.side_total)
    delays, c_series, sigma_series = [], [], []
    for i, d in enumerate(hist_co.delays):
        delays.append(int(d))
        total = g_co[i] + g_cr[i]
        if total <= 0:
            c_series.append(0.0)
            sigma_series.append(None)
            continue
        c_series.append(float((g_co[i] - g_cr[i]) / total))
        sigma_series.append(
            float(2.0 * np.sqrt((g_cr[i] * s_co[i]) ** 2 + (g_co[i] * s_cr[i]) ** 2) / total**2)
        )

    return SettingCorrelation(
        c0=c0, c0_sigma=c0_sigma,
        n_co=peak_co.zero_count, n_cross=peak_cross.zero_count,
        peak_co=peak_co, peak_cross=peak_cross,
        hist_co=hist_co, hist_cross=hist_cross,
        delays=delays, c_series=c_series, sigma_series=sigma_series,
    )


def correlation_vs_delay(stream, max_delay: int = DEFAULT_MAX_DELAY) -> list[tuple[int, float, float | None]]:
    """C(d) with errors for each delay, from the co/cross histograms of a stream."""
    res = correlate_stream(stream, max_delay)
    return list(zip(res.delays, res.c_series, res.sigma_series))


def autocorrelation_peak(stream, max_delay: int = DEFAULT_MAX_DELAY) -> NormalizedPeak:
    """Normalized zero-delay level between the two X ports of an autocorrelation stream."""
    return normalize(histogram(stream, Channel.X_CO, Channel.X_CROSS, max_delay))


def histogram_csv_lines(hist: CoincidenceHistogram) -> list[str]:
    lines = ["delay,count"]
    lines += [f"{int(d)},{int(c)}" for d, c in zip(hist.delays, hist.counts)]
    return lines


def series_csv_lines(res: SettingCorrelation) -> list[str]:
    lines = ["delay,C,sigma"]
    for d, c, s in zip(res.delays, res.c_series, res.sigma_series):
        lines.append(f"{d},{c!r},{'' if s is None else repr(s)}")
    return lines
