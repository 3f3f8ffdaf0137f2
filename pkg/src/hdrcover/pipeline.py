"""End-to-end runs: acquire (simulate or load), classify, reduce, solve,
merge, score, and write outputs.

Two entry points: run_select picks a minimal exposure set for one stack;
run_benchmark compares the covering-based selection against baseline
selection strategies on a simulated scene, where ground truth is available.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .camera import CameraProfile, default_profile
from .classify import (CaptureBounds, CoverageInstance, compute_imin,
                       coverage_intervals, dump_instance, estimate_imax)
from .cover import (Selection, WeightedInstance, reduce_instance, save_selection,
                    solve_unit, solve_weighted, verify_cover)
from .errors import ConfigError, InfeasibleError
from .hdr import (HdrHistogram, extent_from_histogram, hdr_histogram, log_mse,
                  merge_hdr, write_histogram_csv)
from .simulate import (ExposureLadder, SceneIrradiance, make_scene, sweep_stack,
                       sweep_stack_raw)
from . import fileio, report as figures

SCHEMA_VERSION = 1
DEFAULT_METHODS = ("setcover", "bracket", "extent", "full_ladder")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimSpec:
    """Synthetic input description; scene_scale None means auto-centering."""

    kind: str
    width: int = 192
    height: int = 128
    span_stops: float = 12.0
    noise_on: bool = True
    scene_scale: float | None = None


@dataclass(frozen=True)
class BoundsSpec:
    """How to obtain the well-exposed window. imin/imax None means derive:
    imin from the SNR threshold, imax from stack saturation statistics."""

    imin: int | None = None
    imax: int | None = 230
    snr_threshold_db: float = 20.0
    imax_epsilon: float = 0.01


@dataclass(frozen=True)
class RunConfig:
    profile: CameraProfile = field(default_factory=default_profile)
    ladder: ExposureLadder | None = None
    sim: SimSpec | None = None
    stack_dir: str | None = None
    bounds: BoundsSpec = field(default_factory=BoundsSpec)
    seed: int = 0
    out_dir: str | None = None
    figures: bool = True
    dump_instance: bool = False
    bins: int = 256
    extent_percentiles: tuple[float, float] = (1.0, 99.0)
    bracket_count: int = 3
    bracket_step_stops: float = 3.0
    bracket_center: int | None = None

    def __post_init__(self) -> None:
        if (self.sim is None) == (self.stack_dir is None):
            raise ConfigError("exactly one of sim or stack_dir must be given")
        if self.sim is not None and self.ladder is None:
            raise ConfigError("simulated runs need an explicit ladder")


def default_ladder(cost_mode: str = "unit", t_over: float = 0.15,
                   gain: float = 1.0) -> ExposureLadder:
    """Dense survey ladder: 55 shutters in 1/3-stop steps from 1/4096 s."""
    return ExposureLadder.geometric(base=1.0 / 4096.0, count=55,
                                    step_stops=1.0 / 3.0, gain=gain,
                                    t_over=t_over, cost_mode=cost_mode)


def _parse_number(text: str) -> float:
    text = text.strip()
    try:
        if "/" in text:
            return float(Fraction(text))
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad number {text!r}") from exc


def _parse_kv(spec: str, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ConfigError(f"bad {what} item {part!r}; expected key=value")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_ladder_spec(spec: str, cost_mode: str = "unit") -> ExposureLadder:
    """Build a ladder from a spec string.

    Geometric form: base=1/4096,count=19,step=1[,gain=..][,t_over=..]
    Explicit form: shutters=0.001:0.004:0.016[,gain=..][,t_over=..]
    """
    kv = _parse_kv(spec, "ladder")
    gain = _parse_number(kv.pop("gain", "1"))
    t_over = _parse_number(kv.pop("t_over", "0.15"))
    try:
        if "shutters" in kv:
            shutters = tuple(_parse_number(tok) for tok in kv.pop("shutters").split(":"))
            if kv:
                raise ConfigError(f"unknown ladder keys {sorted(kv)}")
            return ExposureLadder(shutters=shutters, gain=gain, t_over=t_over,
                                  cost_mode=cost_mode)
        base = _parse_number(kv.pop("base", "1/4096"))
        count = int(kv.pop("count", "55"))
        step = _parse_number(kv.pop("step", str(1.0 / 3.0)))
        if kv:
            raise ConfigError(f"unknown ladder keys {sorted(kv)}")
        return ExposureLadder.geometric(base=base, count=count, step_stops=step,
                                        gain=gain, t_over=t_over,
                                        cost_mode=cost_mode)
    except ValueError as exc:
        raise ConfigError(f"bad ladder spec {spec!r}: {exc}") from exc


def parse_sim_spec(spec: str) -> SimSpec:
    """Parse kind=log_gradient,width=192,height=128,span=18,noise=on,k=auto."""
    kv = _parse_kv(spec, "simulate")
    kind = kv.pop("kind", "log_gradient")
    width = int(kv.pop("width", "192"))
    height = int(kv.pop("height", "128"))
    span = _parse_number(kv.pop("span", "12"))
    noise = kv.pop("noise", "on").lower()
    if noise not in ("on", "off"):
        raise ConfigError(f"noise must be on or off, got {noise!r}")
    k_raw = kv.pop("k", "auto")
    scale = None if k_raw == "auto" else _parse_number(k_raw)
    if kv:
        raise ConfigError(f"unknown simulate keys {sorted(kv)}")
    try:
        return SimSpec(kind=kind, width=width, height=height, span_stops=span,
                       noise_on=(noise == "on"), scene_scale=scale)
    except ValueError as exc:
        raise ConfigError(f"bad simulate spec {spec!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Shared stages
# ---------------------------------------------------------------------------

def _derived_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
               .generate_state(1, dtype=np.uint64)[0])


def auto_scene_scale(scene: SceneIrradiance, profile: CameraProfile,
                     ladder: ExposureLadder, bounds: CaptureBounds) -> float:
    """Scene-to-RAW constant that anchors the scene at the ladder's dim end.

    The dimmest irradiance, shot at the longest shutter, lands half a stop
    above the usable RAW floor. All remaining headroom goes to the bright
    side: clipped highlights are unrecoverable while dim pixels merely get
    noisier, so the asymmetry favors highlight protection.
    """
    lut = profile.response.lut
    mu_hi = lut[bounds.imax] * profile.mu_sat
    mu_lo = lut[bounds.imin] * profile.mu_sat
    if mu_lo <= 0.0:
        mu_lo = mu_hi / 256.0  # imin of 0 gives no usable floor; invent one
    margin = math.sqrt(2.0)  # half a stop
    return margin * mu_lo / (float(scene.values.min()) * ladder.shutters[-1])


def _resolve_bounds(cfg: RunConfig, stack) -> tuple[CaptureBounds, dict]:
    spec = cfg.bounds
    if spec.imin is None:
        imin = compute_imin(cfg.profile, spec.snr_threshold_db)
        imin_source = f"snr>={spec.snr_threshold_db}dB"
    else:
        imin = spec.imin
        imin_source = "fixed"
    if spec.imax is None:
        imax = estimate_imax(stack, spec.imax_epsilon)
        imax_source = f"saturation<={spec.imax_epsilon}"
    else:
        imax = spec.imax
        imax_source = "fixed"
    if imin > imax:
        raise InfeasibleError(
            f"empty exposure window: imin {imin} exceeds imax {imax}"
        )
    info = {"imin": imin, "imax": imax, "imin_source": imin_source,
            "imax_source": imax_source}
    return CaptureBounds(imin=imin, imax=imax), info


def _acquire(cfg: RunConfig) -> tuple[list, ExposureLadder, SceneIrradiance | None, float | None]:
    """Returns (encoded stack, ladder, scene or None, resolved scene scale)."""
    if cfg.stack_dir is not None:
        stack = fileio.read_stack(cfg.stack_dir)
        if not stack:
            raise ConfigError(f"stack at {cfg.stack_dir} is empty")
        shutters = tuple(im.shutter for im in stack)
        if cfg.ladder is not None:
            lad = cfg.ladder
            if len(lad) != len(shutters) or any(
                    not math.isclose(a, b, rel_tol=1e-9)
                    for a, b in zip(lad.shutters, shutters)):
                raise ConfigError("ladder does not match the stack's shutters")
        else:
            lad = ExposureLadder(shutters=shutters, gain=stack[0].gain)
        return stack, lad, None, None

    sim = cfg.sim
    assert sim is not None and cfg.ladder is not None
    scene = make_scene(sim.kind, sim.width, sim.height, sim.span_stops,
                       seed=_derived_seed(cfg.seed, 0))
    if sim.scene_scale is not None:
        scale = sim.scene_scale
    else:
        # The auto heuristic needs a window before classification has run;
        # use the configured fixed bounds, defaulting the derived ones.
        spec = cfg.bounds
        imin = spec.imin if spec.imin is not None else \
            compute_imin(cfg.profile, spec.snr_threshold_db)
        imax = min(spec.imax if spec.imax is not None else 230, 255)
        if imin > imax:
            raise InfeasibleError(
                f"empty exposure window: imin {imin} exceeds imax {imax}"
            )
        scale = auto_scene_scale(scene, cfg.profile, cfg.ladder,
                                 CaptureBounds(imin, imax))
    stack = sweep_stack(scene, cfg.profile, cfg.ladder,
                        seed=_derived_seed(cfg.seed, 1),
                        noise_on=sim.noise_on, scene_scale=scale)
    return stack, cfg.ladder, scene, scale


def _covered_fraction(inst: CoverageInstance) -> np.ndarray:
    total = max(inst.pixel_total, 1)
    frac = np.zeros(inst.n, dtype=np.float64)
    for lo, hi, mult in inst.rows:
        frac[lo - 1:hi] += mult
    return frac / total


def _solve_instance(inst: CoverageInstance,
                    ladder: ExposureLadder) -> tuple[Selection, dict]:
    weights = ladder.costs()
    winst = WeightedInstance.from_coverage(inst, weights)
    reduced, trace = reduce_instance(winst)
    if ladder.cost_mode == "unit":
        sel = solve_unit(winst)
    else:
        sel = trace.map_selection(solve_weighted(reduced))
    if not verify_cover(winst, sel):
        raise RuntimeError("internal error: selection does not cover the instance")
    stats = {
        "rows_in": len(winst.rows),
        "rows_out": len(reduced.rows),
        "columns_in": winst.n,
        "columns_out": reduced.n,
        "kept_columns": list(trace.kept_columns),
    }
    return sel, stats


def _ladder_doc(ladder: ExposureLadder) -> dict:
    return {
        "shutters": list(ladder.shutters),
        "gain": ladder.gain,
        "t_over": ladder.t_over,
        "cost_mode": ladder.cost_mode,
        "stop_step": ladder.stop_step(),
    }


def _selection_doc(sel: Selection, ladder: ExposureLadder) -> dict:
    return {
        "columns": list(sel.columns),
        "shutters": [ladder.shutters[j - 1] for j in sel.columns],
        "count": len(sel.columns),
        "total_cost": sel.total_cost,
    }


def write_report_json(path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def baseline_bracket(ladder: ExposureLadder, center_index: int,
                     step_stops: float = 3.0, count: int = 3) -> Selection:
    """Symmetric bracket around a center frame.

    Picks `count` frames spaced `step_stops` apart (rounded to whole ladder
    steps), clamped to the ladder and deduplicated, so the result can be
    smaller than `count` at the edges.
    """
    n = len(ladder)
    if not 1 <= center_index <= n:
        raise ValueError(f"center_index {center_index} outside 1..{n}")
    if count < 1:
        raise ValueError("count must be at least 1")
    step = ladder.stop_step()
    stride = max(1, round(step_stops / step)) if step > 0 else 1
    half = (count - 1) // 2
    picked = sorted({min(n, max(1, center_index + (i - half) * stride))
                     for i in range(count)})
    weights = ladder.costs()
    cost = 0.0
    for j in picked:
        cost += float(weights[j - 1])
    return Selection(columns=tuple(picked), total_cost=cost)


def baseline_extent(hist: HdrHistogram, profile: CameraProfile,
                    ladder: ExposureLadder,
                    percentiles: tuple[float, float] = (1.0, 99.0),
                    bounds: CaptureBounds | None = None) -> tuple[Selection, float]:
    """Greedy ladder walk across the histogram's percentile extent.

    Starting at the dim end, repeatedly picks the frame whose reliable window
    contains the current point and reaches furthest up, jumping over stretches
    no frame can measure. Returns the selection and the total width (in
    log10 units) of such uncovered stretches within the extent.
    """
    if bounds is None:
        bounds = CaptureBounds(20, 230)
    x_lo, x_hi = extent_from_histogram(hist, percentiles[0], percentiles[1])
    lut = profile.response.lut
    mu_lo = lut[bounds.imin] * profile.mu_sat
    mu_hi = lut[bounds.imax] * profile.mu_sat
    if mu_lo <= 0.0:
        mu_lo = min(mu_hi, 1e-12)
    win = [(math.log10(mu_lo / t), math.log10(mu_hi / t)) for t in ladder.shutters]

    eps = 1e-12
    target = x_lo
    gap = 0.0
    chosen: list[int] = []
    while target < x_hi - eps:
        best = None
        for j in range(len(win)):
            if (j + 1) in chosen:
                continue
            w_lo, w_hi = win[j]
            if w_lo <= target + eps and w_hi > target + eps:
                if best is None or w_hi > win[best][1]:
                    best = j
        if best is not None:
            chosen.append(best + 1)
            target = win[best][1]
            continue
        starts = [w_lo for j, (w_lo, w_hi) in enumerate(win)
                  if (j + 1) not in chosen and w_lo > target + eps]
        if not starts:
            gap += x_hi - target
            break
        nxt = min(starts)
        gap += min(nxt, x_hi) - target
        target = nxt
    cols = tuple(sorted(chosen))
    weights = ladder.costs()
    cost = 0.0
    for j in cols:
        cost += float(weights[j - 1])
    return Selection(columns=cols, total_cost=cost), max(gap, 0.0)


def full_ladder_selection(ladder: ExposureLadder) -> Selection:
    weights = ladder.costs()
    cost = 0.0
    for w in weights:
        cost += float(w)
    return Selection(columns=tuple(range(1, len(ladder) + 1)), total_cost=cost)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def run_select(cfg: RunConfig) -> dict:
    """Full selection run; returns the report document and, when out_dir is
    set, writes report.json, selection.json, optional instance.txt, and the
    selection figure."""
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    stack, ladder, scene, scale = _acquire(cfg)
    timings["acquire"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    bounds, bounds_info = _resolve_bounds(cfg, stack)
    timings["bounds"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    inst = coverage_intervals(stack, bounds)
    timings["classify"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    sel, reduction_stats = _solve_instance(inst, ladder)
    timings["solve"] = time.perf_counter() - t3

    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "mode": "select",
        "seed": cfg.seed,
        "ladder": _ladder_doc(ladder),
        "bounds": bounds_info,
        "input": ({"stack_dir": str(cfg.stack_dir)} if cfg.stack_dir else {
            "sim": {
                "kind": cfg.sim.kind, "width": cfg.sim.width,
                "height": cfg.sim.height, "span_stops": cfg.sim.span_stops,
                "noise_on": cfg.sim.noise_on,
                "scene_scale": scale,
            }
        }),
        "classification": {
            "n": inst.n,
            "distinct_rows": len(inst.rows),
            "pixel_total": inst.pixel_total,
            "uncoverable": inst.uncoverable_count,
            "repaired": inst.repaired_count,
        },
        "reduction": reduction_stats,
        "selection": _selection_doc(sel, ladder),
    }

    if cfg.out_dir is not None:
        t4 = time.perf_counter()
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_selection(out / "selection.json", sel)
        frac = _covered_fraction(inst)
        chosen = set(sel.columns)
        with open(out / "coverage.csv", "w", encoding="utf-8") as fh:
            fh.write("frame,shutter,covered_fraction,selected\n")
            for j in range(1, inst.n + 1):
                fh.write(f"{j},{ladder.shutters[j - 1]!r},"
                         f"{float(frac[j - 1])!r},{int(j in chosen)}\n")
        if cfg.dump_instance:
            dump_instance(inst, out / "instance.txt")
        if cfg.figures:
            figures.render_selection_figure(
                out / "selection.png", ladder.shutters,
                _covered_fraction(inst), sel.columns)
        timings["write"] = time.perf_counter() - t4
        doc_with_time = dict(doc)
        doc_with_time["timings_ms"] = {k: v * 1000.0 for k, v in timings.items()}
        write_report_json(out / "report.json", doc_with_time)
        doc = doc_with_time
    else:
        doc = dict(doc)
        doc["timings_ms"] = {k: v * 1000.0 for k, v in timings.items()}
    return doc


def run_benchmark(cfg: RunConfig,
                  methods: Sequence[str] | None = None) -> dict:
    """Compare selection strategies on a simulated scene.

    Every method selects from the same preview stack; merges reuse one shared
    RAW sweep so differences come from the selections alone. Ground truth is
    the scene irradiance itself, so scoring is exact up to the metric.
    """
    if cfg.sim is None:
        raise ConfigError("benchmark requires simulated input (ground truth)")
    methods = DEFAULT_METHODS if methods is None else tuple(methods)
    unknown = [m for m in methods if m not in DEFAULT_METHODS]
    if unknown:
        raise ConfigError(f"unknown methods {unknown}; expected {DEFAULT_METHODS}")

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    stack, ladder, scene, scale = _acquire(cfg)
    assert scene is not None
    bounds, bounds_info = _resolve_bounds(cfg, stack)
    inst = coverage_intervals(stack, bounds)
    timings["classify"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    raw_stack = sweep_stack_raw(scene, cfg.profile, ladder,
                                seed=_derived_seed(cfg.seed, 2),
                                noise_on=cfg.sim.noise_on, scene_scale=scale)
    timings["raw_sweep"] = time.perf_counter() - t1

    hist: HdrHistogram | None = None
    extent_gap: float | None = None
    selections: dict[str, Selection] = {}
    t2 = time.perf_counter()
    for method in methods:
        if method == "setcover":
            selections[method], _ = _solve_instance(inst, ladder)
        elif method == "bracket":
            center = cfg.bracket_center
            if center is None:
                center = int(np.argmax(_covered_fraction(inst))) + 1
            selections[method] = baseline_bracket(
                ladder, center, cfg.bracket_step_stops, cfg.bracket_count)
        elif method == "extent":
            hist = hdr_histogram(stack, cfg.profile, bins=cfg.bins, bounds=bounds)
            selections[method], extent_gap = baseline_extent(
                hist, cfg.profile, ladder, cfg.extent_percentiles, bounds)
        elif method == "full_ladder":
            selections[method] = full_ladder_selection(ladder)
    timings["select"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    results: dict[str, dict] = {}
    for method, sel in selections.items():
        chosen_raw = [raw_stack[j - 1] for j in sel.columns]
        merged = merge_hdr(chosen_raw, cfg.profile)
        entry = _selection_doc(sel, ladder)
        entry["log_mse"] = log_mse(merged, scene)
        entry["sentinels"] = merged.sentinel_count
        if method == "extent":
            entry["uncovered_log10_extent"] = extent_gap
        results[method] = entry
    timings["merge_score"] = time.perf_counter() - t3

    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "mode": "benchmark",
        "seed": cfg.seed,
        "ladder": _ladder_doc(ladder),
        "bounds": bounds_info,
        "input": {"sim": {
            "kind": cfg.sim.kind, "width": cfg.sim.width,
            "height": cfg.sim.height, "span_stops": cfg.sim.span_stops,
            "noise_on": cfg.sim.noise_on, "scene_scale": scale,
        }},
        "classification": {
            "n": inst.n,
            "distinct_rows": len(inst.rows),
            "pixel_total": inst.pixel_total,
            "uncoverable": inst.uncoverable_count,
            "repaired": inst.repaired_count,
        },
        "methods": results,
    }

    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "metrics.csv", "w", encoding="utf-8") as fh:
            fh.write("method,count,total_cost,log_mse,sentinels\n")
            for method, entry in results.items():
                fh.write(f"{method},{entry['count']},{entry['total_cost']!r},"
                         f"{entry['log_mse']!r},{entry['sentinels']}\n")
        if hist is not None:
            write_histogram_csv(out / "histogram.csv", hist)
        if cfg.figures and results:
            figures.render_benchmark_figure(
                out / "benchmark.png",
                {m: {"log_mse": e["log_mse"], "cost": e["total_cost"]}
                 for m, e in results.items()},
                cost_label=("shots" if ladder.cost_mode == "unit" else "seconds"))
            if hist is not None:
                ext = extent_from_histogram(hist, *cfg.extent_percentiles)
                figures.render_histogram_figure(
                    out / "histogram.png", hist.edges, hist.counts, extent=ext)
        doc_with_time = dict(doc)
        doc_with_time["timings_ms"] = {k: v * 1000.0 for k, v in timings.items()}
        write_report_json(out / "report.json", doc_with_time)
        doc = doc_with_time
    else:
        doc = dict(doc)
        doc["timings_ms"] = {k: v * 1000.0 for k, v in timings.items()}
    return doc
