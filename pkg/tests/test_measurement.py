import math

import numpy as np
import pytest

from comag.errors import (
    NoResonanceError,
    ResonanceOutOfRangeError,
    UnresolvedPeaksError,
)
from comag.geometry import FieldVector, default_basis, project_field
from comag.measurement import (
    DEFAULT_BIAS,
    GAMMA_NV,
    GAMMA_RB,
    GAMMA_RB_IMPLIED_KHZ_PER_G,
    GyromagneticRatio,
    LiaParams,
    MeasurementPair,
    OdmrParams,
    fit_lia,
    fit_odmr,
    larmor_shift,
    lia_sensitivity,
    nv_measure,
    odmr_sensitivity,
    rb_measure,
    synth_lia,
    synth_odmr,
)

B0_MEASURED = FieldVector(0.004, -0.7454, 0.6451)


@pytest.fixture(scope="module")
def basis():
    return default_basis()


class TestLarmorAndSensitivity:
    def test_zero_field(self):
        assert larmor_shift(0.0, GAMMA_NV) == 0.0

    def test_one_gauss(self):
        assert larmor_shift(1.0, GyromagneticRatio(2.857)) == pytest.approx(2.857)

    def test_linearity(self):
        assert larmor_shift(0.5, GyromagneticRatio(2.857)) == pytest.approx(1.4285)

    def test_odmr_sensitivity_reported_arithmetic(self):
        # dPL = 0.6e-3, slope 1.4e-3 /MHz, gamma 2.857 MHz/G -> 150 mG.
        s = odmr_sensitivity(0.6e-3, 1.4e-3, GyromagneticRatio(2.857))
        assert s == pytest.approx(0.150, rel=5e-4)

    def test_odmr_sensitivity_linearity(self):
        s1 = odmr_sensitivity(0.6e-3, 1.4e-3, GAMMA_NV)
        s2 = odmr_sensitivity(1.2e-3, 1.4e-3, GAMMA_NV)
        assert s2 == pytest.approx(2.0 * s1, rel=1e-12)

    def test_lia_sensitivity_reported_arithmetic(self):
        # dY = 5.5e-6 V, slope 1e-6 V/kHz and the ratio implied by the
        # reported trio -> 790 uG.
        s = lia_sensitivity(5.5e-6, 1e-6, GyromagneticRatio(GAMMA_RB_IMPLIED_KHZ_PER_G))
        assert s == pytest.approx(7.90e-4, rel=5e-4)

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            GyromagneticRatio(0.0)


class TestSynthOdmr:
    def test_zero_contrast_flat(self, basis):
        params = OdmrParams(contrast=0.0, pl_noise=0.0)
        spec = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, 0)
        assert spec.pl == pytest.approx(np.ones(params.n_freqs), abs=1e-12)

    def test_deterministic_per_seed(self, basis):
        params = OdmrParams()
        a = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, 42)
        b = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, 42)
        c = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, 43)
        assert np.array_equal(a.pl, b.pl)
        assert not np.array_equal(a.pl, c.pl)

    def test_dip_positions_follow_projections(self, basis):
        params = OdmrParams(pl_noise=0.0)
        b = DEFAULT_BIAS + FieldVector(0.2, -0.1, 0.3)
        spec = synth_odmr(b, basis, params, GAMMA_NV, 0)
        proj = project_field(basis, b).as_array()
        expected = np.sort(params.center_frequency + GAMMA_NV.value * proj)
        fit = fit_odmr(spec, params, GAMMA_NV)
        assert fit.peak_freqs == pytest.approx(expected, abs=1e-6)

    def test_noise_scales_with_averages(self, basis):
        p1 = OdmrParams(contrast=0.0, pl_noise=1e-3, n_averages=1)
        p4 = OdmrParams(contrast=0.0, pl_noise=1e-3, n_averages=4)
        flat1 = np.concatenate(
            [synth_odmr(DEFAULT_BIAS, basis, p1, GAMMA_NV, s).pl - 1.0 for s in range(60)]
        )
        flat4 = np.concatenate(
            [synth_odmr(DEFAULT_BIAS, basis, p4, GAMMA_NV, s).pl - 1.0 for s in range(60)]
        )
        assert flat1.std() == pytest.approx(2.0 * flat4.std(), rel=0.08)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            OdmrParams(contrast=1.5)
        with pytest.raises(ValueError):
            OdmrParams(linewidth=0.0)
        with pytest.raises(ValueError):
            OdmrParams(n_freqs=2)
        with pytest.raises(ValueError):
            OdmrParams(pl_noise=-1e-3)


class TestFitOdmr:
    def test_noiseless_identity(self, basis):
        params = OdmrParams(pl_noise=0.0)
        spec = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, 0)
        fit = fit_odmr(spec, params, GAMMA_NV)
        proj = project_field(basis, DEFAULT_BIAS).as_array()
        expected = np.sort(params.center_frequency + GAMMA_NV.value * proj)
        assert fit.peak_freqs == pytest.approx(expected, abs=1e-6)
        assert fit.delta_pl == pytest.approx(0.0, abs=1e-9)

    def test_merged_dips_raise(self, basis):
        params = OdmrParams(pl_noise=0.0)
        spec = synth_odmr(FieldVector(0, 0, 0), basis, params, GAMMA_NV, 0)
        with pytest.raises(UnresolvedPeaksError):
            fit_odmr(spec, params, GAMMA_NV)

    def test_sigma_positive_with_noise(self, basis):
        params = OdmrParams()
        spec = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, 7)
        fit = fit_odmr(spec, params, GAMMA_NV)
        assert np.all(fit.sigma_b_axis > 0)

    def test_recovers_injected_noise_level(self, basis):
        params = OdmrParams()
        rmses = []
        for seed in range(80):
            spec = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, seed)
            rmses.append(fit_odmr(spec, params, GAMMA_NV).delta_pl)
        assert np.mean(rmses) == pytest.approx(params.effective_noise(), rel=0.10)

    def test_max_slope_formula(self, basis):
        params = OdmrParams(pl_noise=0.0)
        spec = synth_odmr(DEFAULT_BIAS, basis, params, GAMMA_NV, 0)
        fit = fit_odmr(spec, params, GAMMA_NV)
        expect = 3.0 * math.sqrt(3.0) / 4.0 * params.contrast / params.linewidth
        assert fit.m_nv == pytest.approx(np.full(4, expect), rel=1e-6)

    def test_averaging_halves_sigma(self, basis):
        p1 = OdmrParams(n_averages=1)
        p4 = OdmrParams(n_averages=4)
        s1, s4 = [], []
        for seed in range(60):
            s1.append(
                fit_odmr(
                    synth_odmr(DEFAULT_BIAS, basis, p1, GAMMA_NV, seed), p1, GAMMA_NV
                ).sigma_b_axis.mean()
            )
            s4.append(
                fit_odmr(
                    synth_odmr(DEFAULT_BIAS, basis, p4, GAMMA_NV, seed), p4, GAMMA_NV
                ).sigma_b_axis.mean()
            )
        assert np.mean(s4) == pytest.approx(0.5 * np.mean(s1), rel=0.10)


class TestNvMeasure:
    def test_noiseless_exact(self, basis):
        params = OdmrParams(pl_noise=0.0)
        delta = FieldVector(0.5, 0.0, 0.0)
        for axes_used in (3, 4):
            v, _ = nv_measure(
                delta, DEFAULT_BIAS, B0_MEASURED, basis, params, GAMMA_NV, 0, axes_used
            )
            assert v.as_array() == pytest.approx(delta.as_array(), abs=1e-6)

    def test_null_measurement(self, basis):
        params = OdmrParams()
        vals = np.array(
            [
                nv_measure(
                    FieldVector(0, 0, 0), DEFAULT_BIAS, B0_MEASURED, basis, params,
                    GAMMA_NV, seed,
                )[0].as_array()
                for seed in range(1000)
            ]
        )
        sigma = vals.std(axis=0)
        assert np.all(np.abs(vals.mean(axis=0)) <= 3.0 * sigma / math.sqrt(1000))

    @pytest.mark.parametrize(
        "b_0", [FieldVector(0, 0, 0), B0_MEASURED], ids=["no-background", "measured"]
    )
    def test_recovers_small_field_independent_of_background(self, basis, b_0):
        params = OdmrParams()
        delta = FieldVector(0.5, 0.0, 0.0)
        vals = np.array(
            [
                nv_measure(delta, DEFAULT_BIAS, b_0, basis, params, GAMMA_NV, seed)[
                    0
                ].as_array()
                for seed in range(300)
            ]
        )
        tol = 3.5 * vals.std(axis=0) / math.sqrt(300) + 2e-3
        assert np.all(np.abs(vals.mean(axis=0) - delta.as_array()) <= tol)

    def test_sigma_matches_scatter(self, basis):
        params = OdmrParams()
        delta = FieldVector(0.2, -0.1, 0.15)
        vals, sigs = [], []
        for seed in range(1000):
            v, s = nv_measure(delta, DEFAULT_BIAS, B0_MEASURED, basis, params, GAMMA_NV, seed)
            vals.append(v.as_array())
            sigs.append(s)
        emp = np.array(vals).std(axis=0)
        pred = np.array(sigs).mean(axis=0)
        assert emp == pytest.approx(pred, rel=0.10)

    def test_bias_cancellation(self, basis):
        # Doubling the bias moves every dip but not the recovered field.
        params = OdmrParams(scan_span=400.0, n_freqs=120, pl_noise=0.0)
        delta = FieldVector(0.3, -0.2, 0.1)
        v1, _ = nv_measure(delta, DEFAULT_BIAS, B0_MEASURED, basis, params, GAMMA_NV, 0)
        v2, _ = nv_measure(
            delta, DEFAULT_BIAS.scaled(1.7), B0_MEASURED, basis, params, GAMMA_NV, 0
        )
        assert v1.as_array() == pytest.approx(delta.as_array(), abs=1e-6)
        assert v2.as_array() == pytest.approx(delta.as_array(), abs=1e-6)

    def test_unresolved_bias_raises(self, basis):
        params = OdmrParams(pl_noise=0.0)
        with pytest.raises(UnresolvedPeaksError):
            nv_measure(
                FieldVector(0.1, 0, 0), FieldVector(0.5, 0.2, 0.0), FieldVector(0, 0, 0),
                basis, params, GAMMA_NV, 0,
            )


class TestSynthLia:
    def test_resonance_in_band(self):
        sig = synth_lia(1.0, GAMMA_RB, LiaParams(y_noise=0.0), 0)
        f_res = GAMMA_RB.value * 1.0
        assert f_res == pytest.approx(700.0)
        # Dispersive quadrature crosses zero at the resonance.
        below = sig.y[sig.mod_freqs < f_res - 1.0]
        above = sig.y[(sig.mod_freqs > f_res + 1.0) & (sig.mod_freqs < f_res + 50.0)]
        assert below[-1] < 0 < above[0]

    def test_r_is_pointwise_magnitude(self):
        sig = synth_lia(1.0, GAMMA_RB, LiaParams(), 3)
        assert sig.r == pytest.approx(np.hypot(sig.x, sig.y), abs=1e-12)

    def test_out_of_range_low(self):
        with pytest.raises(ResonanceOutOfRangeError):
            synth_lia(0.1, GAMMA_RB, LiaParams(), 0)  # 70 kHz < 300 kHz

    def test_out_of_range_high(self):
        with pytest.raises(ResonanceOutOfRangeError):
            synth_lia(3.0, GAMMA_RB, LiaParams(), 0)  # 2100 kHz > 1500 kHz

    def test_deterministic(self):
        a = synth_lia(1.0, GAMMA_RB, LiaParams(), 5)
        b = synth_lia(1.0, GAMMA_RB, LiaParams(), 5)
        assert np.array_equal(a.y, b.y)


class TestFitLia:
    def test_noiseless_identity(self):
        params = LiaParams(y_noise=0.0)
        for b in (0.6, 1.0, 1.8):
            fit = fit_lia(synth_lia(b, GAMMA_RB, params, 0), GAMMA_RB)
            assert fit.b_rb == pytest.approx(b, abs=1e-6)

    def test_recovers_injected_y_noise(self):
        params = LiaParams()
        dys = [
            fit_lia(synth_lia(1.0, GAMMA_RB, params, seed), GAMMA_RB).delta_y
            for seed in range(300)
        ]
        assert np.mean(dys) == pytest.approx(params.y_noise, rel=0.10)

    def test_halving_noise_halves_sigma(self):
        full = LiaParams()
        half = LiaParams(y_noise=full.y_noise / 2.0)
        s_full = [
            fit_lia(synth_lia(1.0, GAMMA_RB, full, seed), GAMMA_RB).sigma_rb
            for seed in range(1000)
        ]
        s_half = [
            fit_lia(synth_lia(1.0, GAMMA_RB, half, seed), GAMMA_RB).sigma_rb
            for seed in range(1000)
        ]
        assert np.mean(s_half) == pytest.approx(0.5 * np.mean(s_full), rel=0.05)

    def test_no_resonance(self):
        freqs = np.linspace(300.0, 1500.0, 401)
        from comag.measurement import LiaSignal

        flat = LiaSignal(
            mod_freqs=freqs,
            x=np.full_like(freqs, 1e-5),
            y=np.full_like(freqs, 1e-5),
            r=np.hypot(np.full_like(freqs, 1e-5), np.full_like(freqs, 1e-5)),
        )
        with pytest.raises(NoResonanceError):
            fit_lia(flat, GAMMA_RB)


class TestRbMeasure:
    def test_cancellation_goes_out_of_range(self):
        with pytest.raises(ResonanceOutOfRangeError):
            rb_measure(-B0_MEASURED, B0_MEASURED, GAMMA_RB, LiaParams(), 0)

    def test_perpendicular_fields(self):
        delta = FieldVector(1.0, 0.0, 0.0)
        b_0 = FieldVector(0.0, 1.0, 0.0)
        b_rb, _ = rb_measure(delta, b_0, GAMMA_RB, LiaParams(y_noise=0.0), 0)
        assert b_rb == pytest.approx(math.sqrt(2.0), abs=1e-6)

    def test_measures_background_magnitude(self):
        b_rb, sigma = rb_measure(
            FieldVector(0, 0, 0), B0_MEASURED, GAMMA_RB, LiaParams(), 0
        )
        assert b_rb == pytest.approx(0.9855, abs=2e-3)
        assert sigma > 0


class TestMeasurementPair:
    def test_valid(self):
        pair = MeasurementPair(
            FieldVector(0.5, 0, 0), np.array([0.26, 0.26, 0.26]), 0.9855, 7.9e-4
        )
        assert pair.b_rb > 0

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            MeasurementPair(FieldVector(0, 0, 0), np.array([0.1, 0.1, 0.0]), 1.0, 1e-3)
        with pytest.raises(ValueError):
            MeasurementPair(FieldVector(0, 0, 0), np.array([0.1, 0.1, 0.1]), -1.0, 1e-3)
