import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hdrcover import (CameraProfile, FitError, NoiseModel, default_profile,
                      fit_noise_model, fit_response, gamma_response,
                      load_profile, noise_sigma, response_apply,
                      response_invert, save_profile, snr_db)


def apply_by_scan(lut, raw):
    # Independent oracle: walk the table instead of bisecting it.
    best = 0
    for p in range(256):
        if lut[p] <= raw:
            best = p
    return best


class TestResponse:
    def test_gamma_identity(self):
        rf = gamma_response(1.0)
        assert np.allclose(rf.lut, np.arange(256) / 255.0)

    def test_gamma_rejects_nonpositive(self):
        for g in (0.0, -1.0, float("nan")):
            with pytest.raises(ValueError):
                gamma_response(g)

    def test_apply_endpoints(self):
        rf = gamma_response(2.2)
        assert response_apply(rf, 0.0) == 0
        assert response_apply(rf, 1.0) == 255

    def test_apply_midpoint_matches_scan(self):
        rf = gamma_response(2.2)
        assert response_apply(rf, 0.5) == 186
        assert apply_by_scan(rf.lut, 0.5) == 186

    def test_apply_agrees_with_scan_on_grid(self):
        rf = gamma_response(2.2)
        for raw in np.linspace(0.0, 1.0, 257):
            assert response_apply(rf, float(raw)) == apply_by_scan(rf.lut, raw)

    def test_apply_plateau_takes_highest_level(self):
        lut = np.arange(256) / 255.0
        lut[100:110] = lut[100]  # flat stretch
        lut = np.maximum.accumulate(lut)
        lut[255] = 1.0
        from hdrcover import ResponseFunction
        rf = ResponseFunction(lut=lut, source="fitted")
        assert response_apply(rf, float(lut[100])) == 109

    def test_apply_rejects_out_of_range(self):
        rf = gamma_response(2.2)
        with pytest.raises(ValueError):
            response_apply(rf, -0.1)
        with pytest.raises(ValueError):
            response_apply(rf, 1.1)

    def test_apply_vectorized_matches_scalar(self):
        rf = gamma_response(2.2)
        xs = np.linspace(0, 1, 97)
        vec = response_apply(rf, xs)
        assert list(vec) == [response_apply(rf, float(x)) for x in xs]

    def test_invert_known_values(self):
        assert response_invert(gamma_response(2.2), 0) == 0.0
        assert response_invert(gamma_response(1.0), 51) == pytest.approx(0.2)
        assert response_invert(gamma_response(2.2), 128) == pytest.approx(
            (128 / 255) ** 2.2, abs=1e-12)

    def test_invert_rejects_bad_levels(self):
        rf = gamma_response(2.2)
        with pytest.raises(ValueError):
            response_invert(rf, -1)
        with pytest.raises(ValueError):
            response_invert(rf, 256)

    @given(st.integers(min_value=0, max_value=255))
    def test_apply_invert_round_trip(self, p):
        rf = gamma_response(2.2)
        assert response_apply(rf, response_invert(rf, p)) >= p

    @given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    def test_invert_apply_never_overshoots(self, raw):
        rf = gamma_response(2.2)
        assert response_invert(rf, response_apply(rf, raw)) <= raw

    def test_lut_validation(self):
        from hdrcover import ResponseFunction
        with pytest.raises(ValueError):
            ResponseFunction(lut=np.zeros(100))
        bad = np.arange(256) / 255.0
        bad[10] = 0.5
        with pytest.raises(ValueError):
            ResponseFunction(lut=bad)
        ends = np.arange(256) / 255.0
        ends[255] = 0.9
        with pytest.raises(ValueError):
            ResponseFunction(lut=ends)


class TestFitResponse:
    def test_recovers_linear_exactly(self):
        rf = gamma_response(1.0)
        pairs = [(p, p / 255.0) for p in range(256)]
        fitted = fit_response(pairs)
        assert np.array_equal(fitted.lut, rf.lut)

    def test_recovers_gamma_within_lsb(self):
        rf = gamma_response(2.2)
        pairs = [(p, float(rf.lut[p])) for p in range(256)]
        fitted = fit_response(pairs)
        assert np.max(np.abs(fitted.lut - rf.lut)) <= 1.0 / 255.0

    def test_single_inversion_still_monotone(self):
        rf = gamma_response(2.2)
        pairs = [(p, float(rf.lut[p])) for p in range(256)]
        pairs[120], pairs[121] = ((120, pairs[121][1]), (121, pairs[120][1]))
        fitted = fit_response(pairs)
        assert np.all(np.diff(fitted.lut) >= 0.0)
        assert fitted.lut[0] == 0.0 and fitted.lut[255] == 1.0

    def test_averages_repeated_levels(self):
        pairs = [(p, p / 255.0) for p in range(256)]
        pairs += [(128, 128 / 255.0 + 0.001), (128, 128 / 255.0 - 0.001)]
        fitted = fit_response(pairs)
        assert fitted.lut[128] == pytest.approx(128 / 255.0, abs=1e-9)

    def test_needs_two_pairs(self):
        with pytest.raises(FitError):
            fit_response([(100, 0.5)])

    def test_needs_level_span(self):
        pairs = [(p, p / 255.0) for p in range(20, 200)]
        with pytest.raises(FitError, match=r"\[20, 199\]"):
            fit_response(pairs)

    def test_interpolates_gaps(self):
        sparse = [(p, p / 255.0) for p in range(0, 256, 15)] + [(255, 1.0)]
        fitted = fit_response(sparse)
        assert np.max(np.abs(fitted.lut - np.arange(256) / 255.0)) < 1e-9


class TestNoise:
    def test_sigma_known_values(self):
        assert noise_sigma(NoiseModel(0, 0), 100.0, 1.0) == pytest.approx(10.0)
        assert noise_sigma(NoiseModel(2, 0), 0.0, 1.0) == pytest.approx(2.0)
        assert noise_sigma(NoiseModel(3, 4), 50.0, 2.0) == pytest.approx(
            math.sqrt(152.0), abs=1e-12)

    def test_sigma_rejects_bad_args(self):
        nm = NoiseModel(1, 1)
        with pytest.raises(ValueError):
            noise_sigma(nm, -1.0, 1.0)
        with pytest.raises(ValueError):
            noise_sigma(nm, 1.0, 0.0)
        with pytest.raises(ValueError):
            NoiseModel(-1, 0)

    def test_snr_known_values(self):
        nm = NoiseModel(0, 0, mu_sat=4095.0)
        assert snr_db(nm, 100.0, 1.0) == pytest.approx(20.0, abs=1e-12)
        assert snr_db(nm, 4095.0, 1.0) == 0.0
        assert snr_db(nm, 5000.0, 1.0) == 0.0
        assert snr_db(nm, 0.0, 1.0) == float("-inf")

    def test_snr_monotone_below_saturation(self):
        nm = NoiseModel(2.0, 1.0, mu_sat=4095.0)
        mus = np.linspace(1.0, 4094.0, 4000)
        vals = snr_db(nm, mus, 1.0)
        assert np.all(np.diff(vals) > 0.0)

    def test_snr_decreases_with_gain(self):
        nm = NoiseModel(2.0, 0.0, mu_sat=4095.0)
        assert snr_db(nm, 500.0, 4.0) < snr_db(nm, 500.0, 1.0)


class TestFitNoiseModel:
    def test_exact_shot_noise_only(self):
        samples = [(mu, math.sqrt(mu), 1.0) for mu in (10.0, 100.0, 1000.0)]
        nm = fit_noise_model(samples)
        assert nm.read_noise_r == pytest.approx(0.0, abs=1e-6)
        assert nm.const_noise_c == pytest.approx(0.0, abs=1e-6)

    def test_exact_read_noise_single_gain(self):
        r = 2.0
        samples = [(mu, math.sqrt(mu + r * r), 1.0)
                   for mu in (0.0, 50.0, 500.0, 2000.0)]
        nm = fit_noise_model(samples)
        assert nm.read_noise_r == pytest.approx(r, abs=1e-9)
        assert nm.const_noise_c == 0.0

    def test_perturbed_two_gain_recovery(self):
        # Dark-frame style samples: at low mean levels the r and c terms
        # dominate the variance, which is what makes them fittable at all.
        r, c = 2.0, 3.0
        rng = np.random.default_rng(1234)
        samples = []
        for g in (1.0, 4.0):
            for mu in np.linspace(0.0, 100.0, 50):
                sig = math.sqrt(mu * g + (r * g) ** 2 + c * c)
                samples.append((mu, sig * (1.0 + 0.01 * rng.standard_normal()), g))
        nm = fit_noise_model(samples)
        assert abs(nm.read_noise_r - r) / r < 0.05
        assert abs(nm.const_noise_c - c) / c < 0.05

    def test_preconditions(self):
        with pytest.raises(FitError):
            fit_noise_model([(1.0, 1.0, 1.0), (2.0, 1.0, 1.0)])
        with pytest.raises(FitError):
            fit_noise_model([(5.0, 1.0, 1.0), (5.0, 1.1, 1.0), (5.0, 0.9, 2.0)])

    def test_negative_coefficients_clamped(self):
        # Samples quieter than shot noise drive the residual negative.
        samples = [(mu, math.sqrt(mu) * 0.5, 1.0) for mu in (10.0, 100.0, 1000.0)]
        nm = fit_noise_model(samples)
        assert nm.read_noise_r == 0.0
        assert nm.const_noise_c == 0.0


class TestProfile:
    def test_default_profile_shape(self):
        prof = default_profile()
        assert prof.mu_sat == 4095.0
        assert prof.iso_gain == 1.0
        assert prof.response.gamma == 2.2

    def test_round_trip_gamma(self, tmp_path):
        path = tmp_path / "prof.json"
        save_profile(default_profile(), path)
        loaded = load_profile(path)
        ref = default_profile()
        assert np.array_equal(loaded.response.lut, ref.response.lut)
        assert loaded.response.gamma == ref.response.gamma
        assert loaded.noise == ref.noise
        assert loaded.iso_gain == ref.iso_gain

    def test_round_trip_lut(self, tmp_path):
        pairs = [(p, (p / 255.0) ** 1.8) for p in range(256)]
        prof = CameraProfile(response=fit_response(pairs),
                             noise=NoiseModel(1.5, 0.5, mu_sat=1023.0),
                             iso_gain=2.0)
        path = tmp_path / "prof.json"
        save_profile(prof, path)
        loaded = load_profile(path)
        assert np.array_equal(loaded.response.lut, prof.response.lut)
        assert loaded.noise == prof.noise
        assert loaded.iso_gain == 2.0

    def test_load_rejects_missing_keys(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"gamma": 2.2}))
        with pytest.raises(ValueError, match="missing keys"):
            load_profile(path)

    def test_load_rejects_gamma_and_lut_together(self, tmp_path):
        doc = {"gamma": 2.2, "lut": list(np.arange(256) / 255.0),
               "mu_sat": 4095, "iso_gain": 1, "read_noise_r": 2,
               "const_noise_c": 0}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="exactly one"):
            load_profile(path)

    def test_load_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ValueError, match="invalid JSON"):
            load_profile(path)
