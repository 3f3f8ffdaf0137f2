"""Camera model: tone response and noise calibration.

The sensor is modelled in two stages. A linear RAW value mu in [0, mu_sat]
accumulates photons and read noise; an 8-bit encoder then maps the normalized
RAW value through a monotone response curve to an encoded level p in 0..255.
Everything downstream (classification, merging) works with these two pieces.

The response curve is stored as a 256-entry lookup table: lut[p] is the
normalized RAW level at which the encoder first outputs p. Encoding therefore
means "find the largest p whose threshold does not exceed the signal", and
inversion is a plain table lookup.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import FitError

DEFAULT_MU_SAT = 4095.0
DEFAULT_GAMMA = 2.2
DEFAULT_READ_NOISE = 2.0


# ---------------------------------------------------------------------------
# Tone response
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseFunction:
    """Monotone encoder curve, tabulated at the 256 output levels.

    lut must be non-decreasing with lut[0] == 0 and lut[255] == 1; entries are
    normalized RAW thresholds. `source` records where the curve came from
    ("gamma" or "fitted"); `gamma` holds the exponent when applicable.
    """

    lut: np.ndarray
    source: str = "gamma"
    gamma: float | None = None

    def __post_init__(self) -> None:
        lut = np.asarray(self.lut, dtype=np.float64)
        if lut.shape != (256,):
            raise ValueError(f"response table must have 256 entries, got shape {lut.shape}")
        if lut[0] != 0.0 or lut[255] != 1.0:
            raise ValueError("response table must start at 0 and end at 1")
        if np.any(np.diff(lut) < 0.0):
            raise ValueError("response table must be non-decreasing")
        lut = lut.copy()
        lut.setflags(write=False)
        object.__setattr__(self, "lut", lut)


def gamma_response(gamma: float) -> ResponseFunction:
    """Power-law response lut[p] = (p/255)**gamma. gamma must be positive."""
    if not (gamma > 0.0) or not math.isfinite(gamma):
        raise ValueError(f"gamma must be a positive finite number, got {gamma}")
    lut = (np.arange(256, dtype=np.float64) / 255.0) ** gamma
    lut[0] = 0.0
    lut[255] = 1.0
    return ResponseFunction(lut=lut, source="gamma", gamma=float(gamma))


def response_apply(rf: ResponseFunction, raw):
    """Encode normalized RAW in [0, 1] to the largest level p with lut[p] <= raw.

    Accepts a scalar or an ndarray; returns an int or an int64 array. On a
    plateau of equal thresholds the highest level wins, which keeps
    apply(invert(p)) >= p for every p.
    """
    arr = np.asarray(raw, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("normalized RAW values must lie in [0, 1]")
    p = np.searchsorted(rf.lut, arr, side="right") - 1
    # lut[0] == 0 guarantees p >= 0 already; clip is belt and braces for -0.0.
    p = np.clip(p, 0, 255)
    if np.isscalar(raw) or arr.ndim == 0:
        return int(p)
    return p


def response_invert(rf: ResponseFunction, p):
    """Normalized RAW threshold for encoded level(s) p (integer in 0..255)."""
    arr = np.asarray(p)
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("encoded levels must be integers")
    if np.any(arr < 0) or np.any(arr > 255):
        raise ValueError("encoded levels must lie in 0..255")
    out = rf.lut[arr]
    if np.isscalar(p) or arr.ndim == 0:
        return float(out)
    return out


def _isotonic_fit(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted least-squares monotone (non-decreasing) fit, pool-adjacent style.

    Classic stack algorithm: walk left to right, merging each new point into
    the previous block while the block means are out of order.
    """
    means: list[float] = []
    wsum: list[float] = []
    size: list[int] = []
    for v, w in zip(values, weights):
        means.append(float(v))
        wsum.append(float(w))
        size.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, n2 = means.pop(), wsum.pop(), size.pop()
            m1, w1, n1 = means.pop(), wsum.pop(), size.pop()
            w = w1 + w2
            means.append((m1 * w1 + m2 * w2) / w)
            wsum.append(w)
            size.append(n1 + n2)
    out = np.empty(len(values), dtype=np.float64)
    pos = 0
    for m, n in zip(means, size):
        out[pos:pos + n] = m
        pos += n
    return out


def fit_response(pairs: Iterable[tuple[int, float]]) -> ResponseFunction:
    """Recover a response table from (encoded level, normalized RAW) samples.

    Requires at least two samples and observed levels spanning [10, 245] or
    wider. Repeated levels are averaged, the averaged sequence is made
    monotone by isotonic regression, unobserved levels are filled by linear
    interpolation, and the endpoints are pinned to 0 and 1.
    """
    pts = [(int(p), float(r)) for p, r in pairs]
    if len(pts) < 2:
        raise FitError(f"need at least 2 calibration pairs, got {len(pts)}")
    levels = np.array([p for p, _ in pts], dtype=np.int64)
    raws = np.array([r for _, r in pts], dtype=np.float64)
    if np.any(levels < 0) or np.any(levels > 255):
        raise ValueError("encoded levels must lie in 0..255")
    lo, hi = int(levels.min()), int(levels.max())
    if lo > 10 or hi < 245:
        raise FitError(
            f"calibration pairs cover levels [{lo}, {hi}]; need coverage of [10, 245]"
        )

    counts = np.bincount(levels, minlength=256).astype(np.float64)
    sums = np.bincount(levels, weights=raws, minlength=256)
    observed = np.flatnonzero(counts > 0)
    means = sums[observed] / counts[observed]

    fitted = _isotonic_fit(means, counts[observed])
    fitted = np.clip(fitted, 0.0, 1.0)

    # Pin the endpoints, then interpolate the gaps. Pinning to the extreme
    # values cannot break monotonicity.
    xs = observed.astype(np.float64)
    ys = fitted.copy()
    if observed[0] != 0:
        xs = np.concatenate(([0.0], xs))
        ys = np.concatenate(([0.0], ys))
    else:
        ys[0] = 0.0
    if observed[-1] != 255:
        xs = np.concatenate((xs, [255.0]))
        ys = np.concatenate((ys, [1.0]))
    else:
        ys[-1] = 1.0
    ys = np.maximum.accumulate(ys)

    lut = np.interp(np.arange(256, dtype=np.float64), xs, ys)
    lut[0] = 0.0
    lut[255] = 1.0
    return ResponseFunction(lut=lut, source="fitted", gamma=None)


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    """Variance model sigma^2(mu, g) = mu*g + r^2*g^2 + c^2.

    The first term is shot noise scaled by gain, r is read noise in RAW units
    per unit gain, and c is a gain-independent floor (quantization,
    dark-current residue). mu_sat is the RAW saturation level.
    """

    read_noise_r: float
    const_noise_c: float
    mu_sat: float = DEFAULT_MU_SAT

    def __post_init__(self) -> None:
        if self.read_noise_r < 0.0 or self.const_noise_c < 0.0:
            raise ValueError("noise coefficients must be non-negative")
        if not self.mu_sat > 0.0:
            raise ValueError("mu_sat must be positive")


def noise_sigma(nm: NoiseModel, mu, g: float):
    """Noise standard deviation at mean RAW level mu and gain g."""
    arr = np.asarray(mu, dtype=np.float64)
    if np.any(arr < 0.0):
        raise ValueError("mean RAW level must be non-negative")
    if not g > 0.0:
        raise ValueError(f"gain must be positive, got {g}")
    var = arr * g + (nm.read_noise_r * g) ** 2 + nm.const_noise_c ** 2
    out = np.sqrt(var)
    if np.isscalar(mu) or arr.ndim == 0:
        return float(out)
    return out


def snr_db(nm: NoiseModel, mu, g: float):
    """Signal-to-noise ratio in dB at mean level mu, with saturation censoring.

    Levels at or above mu_sat carry no usable signal and report exactly 0.0;
    mu == 0 reports -inf. Otherwise 20*log10(mu / sigma(mu, g)).
    """
    arr = np.asarray(mu, dtype=np.float64)
    sigma = noise_sigma(nm, arr, g)
    with np.errstate(divide="ignore"):
        ratio = np.where(arr > 0.0, arr / np.where(sigma > 0.0, sigma, 1.0), 0.0)
        val = np.where(arr > 0.0, 20.0 * np.log10(np.where(ratio > 0.0, ratio, 1.0)), -np.inf)
    out = np.where(arr >= nm.mu_sat, 0.0, val)
    if np.isscalar(mu) or arr.ndim == 0:
        return float(out)
    return out


def fit_noise_model(
    samples: Iterable[tuple[float, float, float]],
    mu_sat: float = DEFAULT_MU_SAT,
) -> NoiseModel:
    """Least-squares fit of (r, c) from (mu, sigma, g) samples.

    Solves sigma^2 - mu*g = r^2*g^2 + c^2 in the least-squares sense and
    clamps negative squared coefficients to zero. With a single distinct gain
    the two terms are not separable, so only r is fitted and c is set to 0.
    """
    pts = [(float(m), float(s), float(g)) for m, s, g in samples]
    if len(pts) < 3:
        raise FitError(f"need at least 3 noise samples, got {len(pts)}")
    mu = np.array([p[0] for p in pts])
    sigma = np.array([p[1] for p in pts])
    gain = np.array([p[2] for p in pts])
    if np.any(mu < 0.0) or np.any(sigma < 0.0) or np.any(gain <= 0.0):
        raise ValueError("samples must have mu >= 0, sigma >= 0, g > 0")
    if np.unique(mu).size < 2:
        raise FitError("noise samples must cover at least 2 distinct mean levels")

    resid = sigma ** 2 - mu * gain
    if np.unique(gain).size == 1:
        # r^2 and c^2 are collinear at fixed gain; attribute the floor to r.
        g2 = gain ** 2
        r2 = float(g2 @ resid) / float(g2 @ g2)
        c2 = 0.0
    else:
        design = np.column_stack([gain ** 2, np.ones_like(gain)])
        coef, *_ = np.linalg.lstsq(design, resid, rcond=None)
        r2, c2 = float(coef[0]), float(coef[1])
    r = math.sqrt(max(r2, 0.0))
    c = math.sqrt(max(c2, 0.0))
    return NoiseModel(read_noise_r=r, const_noise_c=c, mu_sat=float(mu_sat))


# ---------------------------------------------------------------------------
# Profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraProfile:
    """Bundle of response curve, noise model, and operating gain."""

    response: ResponseFunction
    noise: NoiseModel
    iso_gain: float = 1.0

    def __post_init__(self) -> None:
        if not self.iso_gain > 0.0:
            raise ValueError("iso_gain must be positive")

    @property
    def mu_sat(self) -> float:
        return self.noise.mu_sat


def default_profile() -> CameraProfile:
    """Reference profile: gamma 2.2 response, 12-bit RAW, gain 1, read noise 2."""
    return CameraProfile(
        response=gamma_response(DEFAULT_GAMMA),
        noise=NoiseModel(read_noise_r=DEFAULT_READ_NOISE, const_noise_c=0.0,
                         mu_sat=DEFAULT_MU_SAT),
        iso_gain=1.0,
    )


def save_profile(profile: CameraProfile, path) -> None:
    """Write a profile as JSON. Gamma curves keep their exponent; fitted
    curves store the full 256-entry table."""
    doc: dict = {
        "mu_sat": profile.noise.mu_sat,
        "iso_gain": profile.iso_gain,
        "read_noise_r": profile.noise.read_noise_r,
        "const_noise_c": profile.noise.const_noise_c,
    }
    if profile.response.source == "gamma" and profile.response.gamma is not None:
        doc["gamma"] = profile.response.gamma
    else:
        doc["lut"] = [float(v) for v in profile.response.lut]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_profile(path) -> CameraProfile:
    """Read a profile written by save_profile (or by hand).

    Required keys: mu_sat, iso_gain, read_noise_r, const_noise_c, and exactly
    one of `gamma` or `lut` (256 numbers). Raises ValueError on malformed
    documents; IO problems propagate as OSError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"profile {path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"profile {path}: expected a JSON object")
    missing = [k for k in ("mu_sat", "iso_gain", "read_noise_r", "const_noise_c")
               if k not in doc]
    if missing:
        raise ValueError(f"profile {path}: missing keys {missing}")
    has_gamma = "gamma" in doc
    has_lut = "lut" in doc
    if has_gamma == has_lut:
        raise ValueError(f"profile {path}: need exactly one of 'gamma' or 'lut'")
    if has_gamma:
        response = gamma_response(float(doc["gamma"]))
    else:
        lut = np.asarray(doc["lut"], dtype=np.float64)
        response = ResponseFunction(lut=lut, source="fitted")
    noise = NoiseModel(
        read_noise_r=float(doc["read_noise_r"]),
        const_noise_c=float(doc["const_noise_c"]),
        mu_sat=float(doc["mu_sat"]),
    )
    return CameraProfile(response=response, noise=noise, iso_gain=float(doc["iso_gain"]))
