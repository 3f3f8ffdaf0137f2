"""Linear-domain HDR estimation from bracketed captures.

merge_hdr fuses RAW frames into per-pixel irradiance with inverse-variance
weights; pixels with no usable sample anywhere get a NaN sentinel.
hdr_histogram estimates the scene's log-irradiance distribution from encoded
frames only, handling the censoring each shutter imposes; extent_from_histogram
reads percentile extents off that histogram. log_mse scores a merged map
against ground truth up to global scale.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .camera import CameraProfile, noise_sigma
from .classify import CaptureBounds, grayscale_image
from .errors import EstimationError, MetricError


# ---------------------------------------------------------------------------
# Merging
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IrradianceMap:
    """Per-pixel linear irradiance estimate; NaN marks pixels with no valid
    sample in any frame."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise ValueError(f"expected (H, W) or (H, W, 3) values, got {arr.shape}")
        valid = ~np.isnan(arr)
        if np.any(arr[valid] < 0.0):
            raise ValueError("irradiance estimates must be non-negative")
        object.__setattr__(self, "values", arr)

    @property
    def sentinel_count(self) -> int:
        return int(np.isnan(self.values).sum())


def merge_hdr(stack: Sequence, profile: CameraProfile) -> IrradianceMap:
    """Inverse-variance merge of RAW frames into scene-referred irradiance.

    Each frame contributes its RAW mean divided by shutter, weighted by
    t^2 / sigma(mu, g)^2. Clipped samples carry no information, so weights
    are zeroed where mu is 0 or at/above saturation. Pixels where every
    frame is clipped become NaN.
    """
    if len(stack) == 0:
        raise ValueError("stack must be non-empty")
    shape = stack[0].values.shape
    mu_sat = profile.mu_sat
    num = np.zeros(shape, dtype=np.float64)
    den = np.zeros(shape, dtype=np.float64)
    for im in stack:
        if im.values.shape != shape:
            raise ValueError("all frames must share the same dimensions")
        mu = im.values
        usable = (mu > 0.0) & (mu < mu_sat)
        sigma = noise_sigma(profile.noise, mu, im.gain)
        with np.errstate(divide="ignore"):
            u = np.where(usable, (im.shutter / sigma) ** 2, 0.0)
        num += u * np.where(usable, mu / im.shutter, 0.0)
        den += u
    with np.errstate(invalid="ignore"):
        est = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), np.nan)
    return IrradianceMap(values=est)


# ---------------------------------------------------------------------------
# Censoring-aware histogram
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HdrHistogram:
    """Histogram of log10 irradiance: bin edges (len bins+1, increasing) and
    per-bin counts scaled to the pixel count of one frame."""

    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.float64)
        if edges.ndim != 1 or counts.ndim != 1 or edges.size != counts.size + 1:
            raise ValueError("need len(edges) == len(counts) + 1")
        if np.any(np.diff(edges) <= 0.0):
            raise ValueError("edges must be strictly increasing")
        if np.any(counts < 0.0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def bins(self) -> int:
        return int(self.counts.size)


def _log_estimates(im, profile: CameraProfile) -> np.ndarray:
    # Scene estimate per pixel from one encoded frame: invert the response at
    # the grayscale level and divide by shutter. Level 0 inverts to RAW 0,
    # which has no log; nudge to the smallest positive threshold instead.
    gray = grayscale_image(im.pixels)
    raw = profile.response.lut[gray] * profile.mu_sat
    positive = profile.response.lut[profile.response.lut > 0.0]
    floor = (positive.min() if positive.size else 1.0) * profile.mu_sat * 0.5
    est = np.maximum(raw, floor) / im.shutter
    return np.log10(est).ravel()


def hdr_histogram(stack: Sequence, profile: CameraProfile, bins: int = 256,
                  bounds: CaptureBounds | None = None) -> HdrHistogram:
    """Estimate the log10 irradiance distribution from encoded frames.

    Each frame only measures reliably inside its own window (grayscale within
    bounds); outside it, values are censored, not missing. Per frame we form
    the empirical CDF of its estimates over all pixels, then average CDFs at
    each bin edge over the frames whose reliable window contains that edge
    (all frames, if none does). The averaged CDF is monotonized and pinned to
    0 and 1 at the extreme edges, then differenced into counts scaled to the
    per-frame pixel count.
    """
    if len(stack) == 0:
        raise ValueError("stack must be non-empty")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    if bounds is None:
        bounds = CaptureBounds(20, 230)

    n_pixels = grayscale_image(stack[0].pixels).size
    sorted_logs: list[np.ndarray] = []
    windows: list[tuple[float, float]] = []
    reliable_any: list[np.ndarray] = []
    for im in stack:
        logs = _log_estimates(im, profile)
        sorted_logs.append(np.sort(logs))
        w_lo = profile.response.lut[bounds.imin] * profile.mu_sat / im.shutter
        w_hi = profile.response.lut[bounds.imax] * profile.mu_sat / im.shutter
        windows.append((np.log10(max(w_lo, 1e-300)), np.log10(max(w_hi, 1e-300))))
        gray = grayscale_image(im.pixels).ravel()
        mask = (gray >= bounds.imin) & (gray <= bounds.imax)
        reliable_any.append(logs[mask])

    reliable_all = np.concatenate(reliable_any) if reliable_any else np.array([])
    if reliable_all.size == 0:
        raise EstimationError("no frame has any reliably exposed pixel")
    lo = float(reliable_all.min())
    hi = float(reliable_all.max())
    if hi - lo < 2e-9:
        lo -= 1e-9
        hi += 1e-9
    edges = np.linspace(lo, hi, bins + 1)

    fis = np.stack([np.searchsorted(logs, edges, side="left") / logs.size
                    for logs in sorted_logs])
    inside = np.stack([(edges >= w_lo) & (edges <= w_hi)
                       for w_lo, w_hi in windows])
    hits = inside.sum(axis=0)
    cdf = np.where(hits > 0,
                   (fis * inside).sum(axis=0) / np.maximum(hits, 1),
                   fis.mean(axis=0))

    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
    cdf[0] = 0.0
    cdf[-1] = 1.0
    cdf = np.maximum.accumulate(cdf)
    counts = np.diff(cdf) * n_pixels
    return HdrHistogram(edges=edges, counts=counts)


def extent_from_histogram(hist: HdrHistogram, p_lo: float,
                          p_hi: float) -> tuple[float, float]:
    """Percentile pair of the histogram's log10 irradiance distribution.

    Inversion is edge-anchored and piecewise linear inside bins. Percentile 0
    returns the lower edge of the first non-empty bin and 100 the upper edge
    of the last, so (0, 100) spans exactly the occupied range.
    """
    if not (0.0 <= p_lo < p_hi <= 100.0):
        raise ValueError(f"need 0 <= p_lo < p_hi <= 100, got ({p_lo}, {p_hi})")
    total = float(hist.counts.sum())
    if total <= 0.0:
        raise ValueError("histogram is empty")
    occupied = np.flatnonzero(hist.counts > 0.0)
    cdf = np.concatenate(([0.0], np.cumsum(hist.counts))) / total

    def invert(q: float) -> float:
        if q == 0.0:
            return float(hist.edges[occupied[0]])
        if q == 100.0:
            return float(hist.edges[occupied[-1] + 1])
        target = q / 100.0
        k = int(np.searchsorted(cdf, target, side="left"))
        k = max(k, 1)
        rise = cdf[k] - cdf[k - 1]
        frac = 1.0 if rise <= 0.0 else (target - cdf[k - 1]) / rise
        return float(hist.edges[k - 1] + frac * (hist.edges[k] - hist.edges[k - 1]))

    return invert(float(p_lo)), invert(float(p_hi))


def write_histogram_csv(path, hist: HdrHistogram) -> None:
    """Write bins as CSV with header bin_lo,bin_hi,count."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for k in range(hist.bins):
            writer.writerow([repr(float(hist.edges[k])),
                             repr(float(hist.edges[k + 1])),
                             repr(float(hist.counts[k]))])


def read_histogram_csv(path) -> HdrHistogram:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["bin_lo", "bin_hi", "count"]:
            raise ValueError(f"unexpected histogram header {header!r}")
        los, his, counts = [], [], []
        for row in reader:
            los.append(float(row[0]))
            his.append(float(row[1]))
            counts.append(float(row[2]))
    edges = np.array(los + [his[-1]] if los else [0.0, 1.0])
    return HdrHistogram(edges=edges, counts=np.array(counts))


# ---------------------------------------------------------------------------
# Quality metric
# ---------------------------------------------------------------------------

def log_mse(test: IrradianceMap, truth) -> float:
    """Mean squared log10 error after median normalization of both sides.

    truth may be an array or anything with a .values array (scene, map).
    Only non-sentinel pixels participate; each side is divided by its median
    over those pixels first, so any global exposure scale cancels exactly.
    Raises MetricError when no pixel is valid.
    """
    truth_arr = np.asarray(getattr(truth, "values", truth), dtype=np.float64)
    if truth_arr.shape != test.values.shape:
        raise ValueError(
            f"shape mismatch: test {test.values.shape} vs truth {truth_arr.shape}"
        )
    valid = ~np.isnan(test.values)
    if not valid.any():
        raise MetricError("no valid pixels to score")
    t = test.values[valid]
    g = truth_arr[valid]
    if np.any(g <= 0.0):
        raise ValueError("ground truth must be strictly positive")
    t_med = float(np.median(t))
    g_med = float(np.median(g))
    if t_med <= 0.0:
        raise MetricError("median of valid estimates is not positive")
    with np.errstate(divide="ignore"):
        diff = np.log10(t / t_med) - np.log10(g / g_med)
    return float(np.mean(diff ** 2))
