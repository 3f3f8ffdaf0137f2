"""Per-pixel exposure classification.

Each pixel of a bracketed stack is reduced to the set of frames that expose it
acceptably: encoded grayscale within [i_min, i_max]. Because frames are
ordered by shutter and the encoder is monotone, that set is ideally one
consecutive run of frame indices. Noise can fragment it; fragmented sets are
repaired to their longest run. Identical (lo, hi) runs are then collapsed
with multiplicities, which is what makes the downstream covering step cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .camera import CameraProfile, snr_db
from .errors import EstimationError, InfeasibleError

GRAY_WEIGHTS = (0.299, 0.587, 0.114)


# ---------------------------------------------------------------------------
# Grayscale and bounds
# ---------------------------------------------------------------------------

def grayscale(r, g, b):
    """BT.601 luma of encoded channels, rounded half-up to an integer level."""
    y = GRAY_WEIGHTS[0] * np.asarray(r, dtype=np.float64) \
        + GRAY_WEIGHTS[1] * np.asarray(g, dtype=np.float64) \
        + GRAY_WEIGHTS[2] * np.asarray(b, dtype=np.float64)
    out = np.floor(y + 0.5).astype(np.int64)
    out = np.clip(out, 0, 255)
    if np.isscalar(r):
        return int(out)
    return out.astype(np.uint8)


def grayscale_image(pixels: np.ndarray) -> np.ndarray:
    """Grayscale raster for (H, W, 3) uint8 pixels; (H, W) passes through."""
    arr = np.asarray(pixels)
    if arr.ndim == 2:
        return arr
    return grayscale(arr[..., 0], arr[..., 1], arr[..., 2])


@dataclass(frozen=True)
class CaptureBounds:
    """Inclusive window of encoded grayscale levels considered well exposed."""

    imin: int
    imax: int

    def __post_init__(self) -> None:
        if not (0 <= self.imin <= self.imax <= 255):
            raise ValueError(
                f"need 0 <= imin <= imax <= 255, got ({self.imin}, {self.imax})"
            )


def compute_imin(profile: CameraProfile, snr_threshold_db: float) -> int:
    """Smallest encoded level whose RAW-domain SNR meets the threshold."""
    mu = profile.response.lut * profile.mu_sat
    levels = np.flatnonzero(snr_db(profile.noise, mu, profile.iso_gain)
                            >= snr_threshold_db)
    if levels.size == 0:
        raise InfeasibleError(
            f"no encoded level reaches {snr_threshold_db} dB with this profile"
        )
    return int(levels[0])


def estimate_imax(stack: Sequence, epsilon: float = 0.01) -> int:
    """Largest grayscale level whose saturated fraction stays within epsilon.

    A color pixel counts as saturated when at least two of its channels sit
    at 255; a mono pixel when its value is 255. Levels that never occur in
    the stack have saturated fraction 0 by convention.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1), got {epsilon}")
    if len(stack) == 0:
        raise ValueError("stack must be non-empty")
    totals = np.zeros(256, dtype=np.int64)
    saturated = np.zeros(256, dtype=np.int64)
    for im in stack:
        gray = grayscale_image(im.pixels).ravel()
        if im.pixels.ndim == 3:
            sat = ((im.pixels == 255).sum(axis=2) >= 2).ravel()
        else:
            sat = gray == 255
        totals += np.bincount(gray, minlength=256)
        saturated += np.bincount(gray[sat], minlength=256)
    frac = np.divide(saturated, totals, out=np.zeros(256), where=totals > 0)
    ok = np.flatnonzero(frac <= epsilon)
    if ok.size == 0:
        raise EstimationError("every grayscale level exceeds the saturation budget")
    return int(ok[-1])


# ---------------------------------------------------------------------------
# Coverage instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageInstance:
    """Deduplicated covering rows over a ladder of n frames.

    rows holds (lo, hi, multiplicity) with 1-based inclusive frame indices,
    sorted by (lo, hi). uncoverable_count is the number of pixels with no
    acceptable frame at all; repaired_count the number whose coverage was
    fragmented and replaced by its longest run. origin_map, when requested,
    maps each pixel to its row index (or -1 if uncoverable).
    """

    n: int
    rows: tuple[tuple[int, int, int], ...]
    uncoverable_count: int = 0
    repaired_count: int = 0
    origin_map: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        for lo, hi, mult in self.rows:
            if not (1 <= lo <= hi <= self.n):
                raise ValueError(f"row ({lo}, {hi}) out of range for n={self.n}")
            if mult < 1:
                raise ValueError("row multiplicity must be at least 1")
        if self.uncoverable_count < 0 or self.repaired_count < 0:
            raise ValueError("counts must be non-negative")

    @property
    def pixel_total(self) -> int:
        return sum(m for _, _, m in self.rows) + self.uncoverable_count


def _longest_runs(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per row of a (U, n) bool matrix: number of runs of True, and the
    longest run's inclusive (start, end), ties going to the lowest start.

    Returns (nruns, lo, hi, covered_rows); lo/hi are per covered row, in row
    order.
    """
    u, n = bits.shape
    padded = np.zeros((u, n + 2), dtype=bool)
    padded[:, 1:n + 1] = bits
    starts = padded[:, 1:n + 1] & ~padded[:, 0:n]
    ends = padded[:, 1:n + 1] & ~padded[:, 2:n + 2]
    nruns = starts.sum(axis=1)

    run_rows, run_lo = np.nonzero(starts)
    _, run_hi = np.nonzero(ends)
    # nonzero is row-major, so runs are grouped by row and sorted by start;
    # starts and ends pair up one-to-one within each row.
    lengths = run_hi - run_lo + 1
    if run_rows.size == 0:
        empty = np.array([], dtype=np.int64)
        return nruns, empty, empty, empty
    first = np.empty(run_rows.size, dtype=bool)
    first[0] = True
    first[1:] = run_rows[1:] != run_rows[:-1]
    group_start = np.flatnonzero(first)
    group_id = np.cumsum(first) - 1
    best_len = np.maximum.reduceat(lengths, group_start)
    is_best = lengths == best_len[group_id]
    run_index = np.arange(run_rows.size)
    pick = np.minimum.reduceat(np.where(is_best, run_index, run_rows.size),
                               group_start)
    return nruns, run_lo[pick], run_hi[pick], run_rows[group_start]


def coverage_intervals(stack: Sequence, bounds: CaptureBounds,
                       with_origin_map: bool = False) -> CoverageInstance:
    """Classify a stack (ordered by shutter) into a covering instance.

    Coverage bits are packed into uint64 words so deduplication is a single
    np.unique over packed rows rather than over n boolean columns.
    """
    if len(stack) == 0:
        raise ValueError("stack must be non-empty")
    shutters = [im.shutter for im in stack]
    if any(b <= a for a, b in zip(shutters, shutters[1:])):
        raise ValueError("stack must be sorted by strictly increasing shutter")
    shape = grayscale_image(stack[0].pixels).shape
    n = len(stack)
    n_pixels = int(np.prod(shape))

    nwords = (n + 63) // 64
    packed = np.zeros((n_pixels, nwords), dtype=np.uint64)
    for j, im in enumerate(stack):
        gray = grayscale_image(im.pixels)
        if gray.shape != shape:
            raise ValueError("all frames must share the same dimensions")
        mask = (gray >= bounds.imin) & (gray <= bounds.imax)
        packed[:, j // 64] |= mask.ravel().astype(np.uint64) << np.uint64(j % 64)

    if with_origin_map:
        uniq, inverse, counts = np.unique(packed, axis=0, return_inverse=True,
                                          return_counts=True)
    else:
        uniq, counts = np.unique(packed, axis=0, return_counts=True)
        inverse = None

    shifts = np.arange(64, dtype=np.uint64)
    cols = [((uniq[:, w, None] >> shifts) & np.uint64(1)).astype(bool)
            for w in range(nwords)]
    bits = np.concatenate(cols, axis=1)[:, :n]

    nruns, lo, hi, covered = _longest_runs(bits)
    uncoverable = int(counts[nruns == 0].sum())
    repaired = int(counts[nruns > 1].sum())

    # Distinct patterns can repair to the same run; merge multiplicities.
    key = lo.astype(np.int64) * (n + 1) + hi
    order = np.argsort(key, kind="stable")
    uniq_key, first_at = np.unique(key[order], return_index=True)
    mult = np.add.reduceat(counts[covered][order], first_at) if key.size else \
        np.array([], dtype=np.int64)
    rows = tuple(
        (int(k // (n + 1)) + 1, int(k % (n + 1)) + 1, int(m))
        for k, m in zip(uniq_key, mult)
    )

    origin = None
    if with_origin_map:
        pattern_to_row = np.full(len(uniq), -1, dtype=np.int64)
        if key.size:
            pattern_to_row[covered] = np.searchsorted(uniq_key, key)
        origin = pattern_to_row[inverse].reshape(shape)

    inst = CoverageInstance(n=n, rows=rows, uncoverable_count=uncoverable,
                            repaired_count=repaired, origin_map=origin)
    assert inst.pixel_total == n_pixels
    return inst


# ---------------------------------------------------------------------------
# Plain-text instance dumps
# ---------------------------------------------------------------------------

def dump_instance(inst: CoverageInstance, path) -> None:
    """Write `n uncoverable_count` then one `lo hi multiplicity` line per row."""
    lines = [f"{inst.n} {inst.uncoverable_count}"]
    lines.extend(f"{lo} {hi} {mult}" for lo, hi, mult in inst.rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_instance(text: str) -> CoverageInstance:
    """Inverse of dump_instance (repair count is not part of the format)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty instance dump")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"bad header line {lines[0]!r}")
    n, uncoverable = int(head[0]), int(head[1])
    rows = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"bad row line {ln!r}")
        rows.append((int(parts[0]), int(parts[1]), int(parts[2])))
    return CoverageInstance(n=n, rows=tuple(sorted(rows)),
                            uncoverable_count=uncoverable)


def load_instance(path) -> CoverageInstance:
    return parse_instance(Path(path).read_text(encoding="utf-8"))
