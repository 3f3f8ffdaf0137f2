"""Synthetic scenes and the forward capture model.

A scene is a per-pixel linear irradiance field E (arbitrary positive units).
Capturing it with shutter t produces an ideal RAW level mu = E * t * k, where
k is a fixed scene-to-RAW scale constant. Optionally Gaussian noise with the
profile's sigma(mu, g) is added before clamping to [0, mu_sat]; the clamped
RAW is then encoded through the profile's response curve to 8-bit levels.

RAW values stay continuous floats throughout; only the encoder quantizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .camera import CameraProfile, noise_sigma, response_apply

SCENE_KINDS = ("log_gradient", "bimodal", "spotlight")


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneIrradiance:
    """Linear irradiance field, strictly positive and finite."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"scene must be 2-d, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("scene must be non-empty")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("irradiance must be finite and strictly positive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LdrImage:
    """One encoded frame plus the settings that produced it."""

    pixels: np.ndarray
    shutter: float
    gain: float = 1.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels)
        if arr.dtype != np.uint8:
            raise ValueError(f"encoded pixels must be uint8, got {arr.dtype}")
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise ValueError(f"expected (H, W) or (H, W, 3) pixels, got {arr.shape}")
        if not self.shutter > 0.0 or not self.gain > 0.0:
            raise ValueError("shutter and gain must be positive")
        object.__setattr__(self, "pixels", arr)

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else 3


@dataclass(frozen=True)
class RawImage:
    """One linear RAW frame (clamped, pre-encoder) plus its settings."""

    values: np.ndarray
    shutter: float
    gain: float = 1.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise ValueError(f"expected (H, W) or (H, W, 3) values, got {arr.shape}")
        if np.any(arr < 0.0):
            raise ValueError("RAW values must be non-negative")
        if not self.shutter > 0.0 or not self.gain > 0.0:
            raise ValueError("shutter and gain must be positive")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class ExposureLadder:
    """The menu of candidate shutters, with per-shot cost accounting.

    Shutters must be strictly increasing and positive. cost_mode "unit"
    charges 1 per shot; "capture_time" charges shutter + t_over, where t_over
    is the fixed per-shot overhead in seconds.
    """

    shutters: tuple[float, ...]
    gain: float = 1.0
    t_over: float = 0.15
    cost_mode: str = "unit"

    def __post_init__(self) -> None:
        shutters = tuple(float(t) for t in self.shutters)
        if len(shutters) == 0:
            raise ValueError("ladder must contain at least one shutter")
        if any(t <= 0.0 for t in shutters):
            raise ValueError("shutters must be positive")
        if any(b <= a for a, b in zip(shutters, shutters[1:])):
            raise ValueError("shutters must be strictly increasing")
        if self.t_over < 0.0:
            raise ValueError("t_over must be non-negative")
        if not self.gain > 0.0:
            raise ValueError("gain must be positive")
        if self.cost_mode not in ("unit", "capture_time"):
            raise ValueError(f"unknown cost_mode {self.cost_mode!r}")
        object.__setattr__(self, "shutters", shutters)

    def __len__(self) -> int:
        return len(self.shutters)

    def costs(self) -> np.ndarray:
        """Per-column selection weights (1-based column j maps to costs()[j-1])."""
        if self.cost_mode == "unit":
            return np.ones(len(self.shutters), dtype=np.float64)
        return np.array([t + self.t_over for t in self.shutters], dtype=np.float64)

    def stop_step(self) -> float:
        """Median spacing between adjacent shutters, in stops."""
        if len(self.shutters) < 2:
            return 0.0
        gaps = [math.log2(b / a) for a, b in zip(self.shutters, self.shutters[1:])]
        return float(np.median(gaps))

    @classmethod
    def geometric(cls, base: float, count: int, step_stops: float = 1.0,
                  gain: float = 1.0, t_over: float = 0.15,
                  cost_mode: str = "unit") -> "ExposureLadder":
        if count < 1:
            raise ValueError("count must be at least 1")
        if step_stops <= 0.0:
            raise ValueError("step_stops must be positive")
        shutters = tuple(base * 2.0 ** (step_stops * k) for k in range(count))
        return cls(shutters=shutters, gain=gain, t_over=t_over, cost_mode=cost_mode)


# ---------------------------------------------------------------------------
# Scenes
# ---------------------------------------------------------------------------

def make_scene(kind: str, width: int, height: int, span_stops: float,
               seed: int = 0) -> SceneIrradiance:
    """Deterministic test scene with the given dynamic range in stops.

    log_gradient: left-to-right exponential ramp, max/min exactly 2**span.
    bimodal: dark floor with one bright Gaussian blob.
    spotlight: dark floor with a hard bright disk and a cosine rim.
    """
    if width < 1 or height < 1:
        raise ValueError("scene dimensions must be positive")
    if span_stops < 0.0:
        raise ValueError("span_stops must be non-negative")
    if kind == "log_gradient":
        if width == 1:
            col = np.zeros(1)
        else:
            col = np.arange(width, dtype=np.float64) / (width - 1)
        e = 2.0 ** (span_stops * col)
        values = np.tile(e, (height, 1))
        return SceneIrradiance(values=values)

    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    cx = rng.uniform(0.3, 0.7) * (width - 1 if width > 1 else 1)
    cy = rng.uniform(0.3, 0.7) * (height - 1 if height > 1 else 1)
    d = np.hypot(xx - cx, yy - cy)
    scale = max(min(width, height), 2)

    if kind == "bimodal":
        sigma = 0.18 * scale
        m = np.exp(-0.5 * (d / sigma) ** 2)
        m[m < 1e-3] = 0.0
        return SceneIrradiance(values=2.0 ** (span_stops * m))
    if kind == "spotlight":
        r_core = 0.22 * scale
        r_rim = 0.12 * scale
        m = np.zeros_like(d)
        m[d <= r_core] = 1.0
        rim = (d > r_core) & (d < r_core + r_rim)
        m[rim] = 0.5 * (1.0 + np.cos(np.pi * (d[rim] - r_core) / r_rim))
        return SceneIrradiance(values=2.0 ** (span_stops * m))
    raise ValueError(f"unknown scene kind {kind!r}; expected one of {SCENE_KINDS}")


# ---------------------------------------------------------------------------
# Capture
# ---------------------------------------------------------------------------

def _exposed_raw(scene: SceneIrradiance, profile: CameraProfile, shutter: float,
                 rng: np.random.Generator | None, scene_scale: float) -> np.ndarray:
    if not shutter > 0.0:
        raise ValueError("shutter must be positive")
    if not scene_scale > 0.0:
        raise ValueError("scene_scale must be positive")
    mu = scene.values * (shutter * scene_scale)
    if rng is not None:
        sigma = noise_sigma(profile.noise, mu, profile.iso_gain)
        mu = mu + rng.standard_normal(mu.shape) * sigma
    return np.clip(mu, 0.0, profile.mu_sat)


def simulate_capture_raw(scene: SceneIrradiance, profile: CameraProfile,
                         shutter: float, seed: int = 0, noise_on: bool = True,
                         scene_scale: float = 1.0) -> RawImage:
    """Clamped linear RAW frame for one shutter."""
    rng = np.random.default_rng(seed) if noise_on else None
    mu = _exposed_raw(scene, profile, shutter, rng, scene_scale)
    return RawImage(values=mu, shutter=float(shutter), gain=profile.iso_gain)


def simulate_capture(scene: SceneIrradiance, profile: CameraProfile,
                     shutter: float, seed: int = 0, noise_on: bool = True,
                     scene_scale: float = 1.0) -> LdrImage:
    """Encoded 8-bit frame for one shutter."""
    rng = np.random.default_rng(seed) if noise_on else None
    mu = _exposed_raw(scene, profile, shutter, rng, scene_scale)
    p = response_apply(profile.response, mu / profile.mu_sat)
    return LdrImage(pixels=p.astype(np.uint8), shutter=float(shutter),
                    gain=profile.iso_gain)


def _derive_seeds(seed: int, n: int) -> list[int]:
    # seeds[j] depends only on (seed, j), not on the ladder length.
    state = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)
    return [int(s) for s in state]


def sweep_stack(scene: SceneIrradiance, profile: CameraProfile,
                ladder: ExposureLadder, seed: int = 0, noise_on: bool = True,
                scene_scale: float = 1.0) -> list[LdrImage]:
    """Encoded frame per ladder shutter; per-image noise seeds derived from
    (seed, index) so any one frame can be reproduced in isolation."""
    seeds = _derive_seeds(seed, len(ladder))
    return [simulate_capture(scene, profile, t, seed=s, noise_on=noise_on,
                             scene_scale=scene_scale)
            for t, s in zip(ladder.shutters, seeds)]


def sweep_stack_raw(scene: SceneIrradiance, profile: CameraProfile,
                    ladder: ExposureLadder, seed: int = 0, noise_on: bool = True,
                    scene_scale: float = 1.0) -> list[RawImage]:
    """RAW frame per ladder shutter, same seed derivation as sweep_stack."""
    seeds = _derive_seeds(seed, len(ladder))
    return [simulate_capture_raw(scene, profile, t, seed=s, noise_on=noise_on,
                                 scene_scale=scene_scale)
            for t, s in zip(ladder.shutters, seeds)]
