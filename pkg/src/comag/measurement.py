"""Sensor models: synthetic generation and fitting of both magnetometers.

The NV channel produces optically-detected magnetic resonance (ODMR)
spectra whose dip positions encode the per-axis field projections; the Rb
channel produces lock-in amplifier (LIA) chirp traces whose dispersive
quadrature crosses zero at the Larmor resonance.  Fitting either trace
yields a field reading together with an empirically derived uncertainty.

Gyromagnetic ratios are stored in ordinary-frequency units (MHz/G for the
NV channel, kHz/G for the Rb channel) so the Larmor relation reads
``f = gamma * B`` with no 2*pi bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.signal import find_peaks

from .errors import (
    NoResonanceError,
    ResonanceOutOfRangeError,
    UnresolvedPeaksError,
)
from .geometry import (
    FieldVector,
    OrientationBasis,
    project_field,
    recovery_matrix,
    select_best_axes,
)

# Back-computed from the reported ODMR numbers: 0.6e-3 / (1.4e-3 * 0.150).
GAMMA_NV_MHZ_PER_G = 2.857
# Round-number scalar ratio for the Rb vapor channel, kHz/G.
GAMMA_RB_KHZ_PER_G = 700.0
# Value implied by the reported LIA trio (delta_y, slope, sensitivity);
# about 10x the physical ratio, kept only to reproduce that arithmetic.
GAMMA_RB_IMPLIED_KHZ_PER_G = 6962.0

# Max-slope point of a Lorentzian sits linewidth/(2*sqrt(3)) off center,
# where the slope magnitude is (3*sqrt(3)/4) * contrast / linewidth.
_MAX_SLOPE_OFFSET = 1.0 / (2.0 * math.sqrt(3.0))
_MAX_SLOPE_FACTOR = 3.0 * math.sqrt(3.0) / 4.0


@dataclass(frozen=True)
class GyromagneticRatio:
    """Larmor frequency per unit field (MHz/G for NV, kHz/G for Rb)."""

    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("gyromagnetic ratio must be positive")


GAMMA_NV = GyromagneticRatio(GAMMA_NV_MHZ_PER_G)
GAMMA_RB = GyromagneticRatio(GAMMA_RB_KHZ_PER_G)


@dataclass(frozen=True)
class OdmrParams:
    """Scan and noise parameters for a synthetic ODMR spectrum.

    ``pl_noise`` is the per-point standard deviation of the normalized
    photoluminescence at one average; the effective noise of a spectrum is
    ``pl_noise / sqrt(n_averages)``.  ``exposure_time`` (ms per frequency)
    is recorded with the scan; the configured noise level refers to it.
    """

    center_frequency: float = 2870.0
    contrast: float = 0.02
    linewidth: float = 8.0
    n_freqs: int = 60
    scan_span: float = 200.0
    exposure_time: float = 0.5
    pl_noise: float = 0.6e-3
    n_averages: int = 1

    def __post_init__(self):
        if not 0.0 <= self.contrast < 1.0:
            raise ValueError("contrast must be in [0, 1)")
        if not self.linewidth > 0:
            raise ValueError("linewidth must be positive")
        if self.n_freqs < 3:
            raise ValueError("n_freqs must be >= 3")
        if self.pl_noise < 0:
            raise ValueError("pl_noise must be >= 0")
        if self.n_averages < 1:
            raise ValueError("n_averages must be >= 1")
        if not self.scan_span > 0:
            raise ValueError("scan_span must be positive")

    def frequencies(self) -> np.ndarray:
        half = self.scan_span / 2.0
        return np.linspace(
            self.center_frequency - half, self.center_frequency + half, self.n_freqs
        )

    def effective_noise(self) -> float:
        return self.pl_noise / math.sqrt(self.n_averages)


@dataclass(frozen=True)
class OdmrSpectrum:
    """Synthetic ODMR trace: frequencies (MHz), normalized PL, per-point sigma."""

    freqs: np.ndarray
    pl: np.ndarray
    pl_sigma: np.ndarray

    def __post_init__(self):
        if not (len(self.freqs) == len(self.pl) == len(self.pl_sigma)):
            raise ValueError("spectrum arrays must have equal length")
        if np.any(self.pl_sigma < 0):
            raise ValueError("pl_sigma must be >= 0")


@dataclass(frozen=True)
class OdmrFit:
    """Fitted ODMR lineshape, one entry per resolved dip (ascending frequency).

    ``m_nv`` is the maximum slope magnitude of each fitted dip (1/MHz),
    observed at ``f_max``; ``sigma_b_axis`` converts the empirical PL
    scatter into a per-axis field sensitivity via sigma = dPL/(gamma * m).
    """

    peak_freqs: np.ndarray
    f_max: np.ndarray
    m_nv: np.ndarray
    sigma_b_axis: np.ndarray
    contrasts: np.ndarray
    linewidths: np.ndarray
    baseline: float
    delta_pl: float


@dataclass(frozen=True)
class LiaParams:
    """Chirp and noise parameters for a synthetic lock-in trace."""

    chirp_min: float = 300.0
    chirp_max: float = 1500.0
    n_points: int = 1201
    linewidth: float = 100.0
    amplitude: float = 5.0e-5
    y_noise: float = 5.5e-6

    def __post_init__(self):
        if not self.linewidth > 0:
            raise ValueError("linewidth must be positive")
        if self.y_noise < 0:
            raise ValueError("y_noise must be >= 0")
        if self.n_points < 5:
            raise ValueError("n_points must be >= 5")
        if not self.chirp_max > self.chirp_min:
            raise ValueError("chirp_max must exceed chirp_min")

    def frequencies(self) -> np.ndarray:
        return np.linspace(self.chirp_min, self.chirp_max, self.n_points)


@dataclass(frozen=True)
class LiaSignal:
    """Lock-in outputs over the modulation chirp: in-phase X, quadrature Y, magnitude R (V)."""

    mod_freqs: np.ndarray
    x: np.ndarray
    y: np.ndarray
    r: np.ndarray


@dataclass(frozen=True)
class LiaFit:
    """Resonance readout of an LIA trace with the slope-method sensitivity."""

    b_rb: float
    sigma_rb: float
    f_res: float
    m_rb: float
    delta_y: float


@dataclass(frozen=True)
class MeasurementPair:
    """One NV vector reading with one Rb scalar reading and their uncertainties.

    The NV reading is a differential measurement of the small field alone;
    the Rb scalar contains the background: it measures |delta_b + b_0|.
    """

    b_nv: FieldVector
    sigma_nv: np.ndarray
    b_rb: float
    sigma_rb: float

    def __post_init__(self):
        sig = np.asarray(self.sigma_nv, dtype=float)
        if sig.shape != (3,):
            raise ValueError("sigma_nv must have three per-axis components")
        if np.any(sig <= 0) or not self.sigma_rb > 0:
            raise ValueError("uncertainties must be positive")
        if self.b_rb < 0:
            raise ValueError("b_rb must be >= 0")


def larmor_shift(b_axis: float, gamma: GyromagneticRatio) -> float:
    """Larmor frequency shift for a per-axis field, in gamma's frequency unit."""
    return gamma.value * b_axis


def odmr_sensitivity(delta_pl: float, slope: float, gamma: GyromagneticRatio) -> float:
    """Per-axis field sensitivity from PL scatter and ODMR slope, Gauss.

    sigma = dPL / (gamma * m): the field equivalent of one PL sample read
    at the maximum-slope point of the dip.
    """
    if slope <= 0:
        raise ValueError("slope must be positive")
    return delta_pl / (gamma.value * slope)


def lia_sensitivity(delta_y: float, slope: float, gamma: GyromagneticRatio) -> float:
    """Scalar field sensitivity from Y scatter and LIA slope, Gauss.

    sigma = dY / (gamma * m), with the slope in V per frequency unit.
    """
    if slope <= 0:
        raise ValueError("slope must be positive")
    return delta_y / (gamma.value * slope)


def _lorentzian_dips(freqs, baseline, contrasts, centers, widths):
    pl = np.full_like(freqs, baseline, dtype=float)
    for c, f0, w in zip(contrasts, centers, widths):
        half = w / 2.0
        pl = pl - c * half**2 / ((freqs - f0) ** 2 + half**2)
    return pl


def _lorentzian_dips_slope(freqs, contrasts, centers, widths):
    s = np.zeros_like(freqs, dtype=float)
    for c, f0, w in zip(contrasts, centers, widths):
        half = w / 2.0
        u = freqs - f0
        s = s + 2.0 * c * half**2 * u / (u**2 + half**2) ** 2
    return s


def synth_odmr(
    b_total: FieldVector,
    basis: OrientationBasis,
    params: OdmrParams,
    gamma: GyromagneticRatio = GAMMA_NV,
    rng_seed: int | None = 0,
) -> OdmrSpectrum:
    """Forward model of an ODMR scan of the total field.

    One Lorentzian dip per NV axis at center_frequency plus the signed
    Larmor shift of that axis projection, on a unit baseline, plus
    Gaussian noise of std pl_noise/sqrt(n_averages) per point.
    Deterministic for a fixed seed.
    """
    freqs = params.frequencies()
    proj = project_field(basis, b_total).as_array()
    centers = params.center_frequency + gamma.value * proj
    pl = _lorentzian_dips(
        freqs, 1.0, [params.contrast] * 4, centers, [params.linewidth] * 4
    )
    noise = params.effective_noise()
    if noise > 0:
        rng = np.random.default_rng(rng_seed)
        pl = pl + rng.normal(0.0, noise, size=freqs.shape)
    return OdmrSpectrum(freqs=freqs, pl=pl, pl_sigma=np.full_like(freqs, noise))


def fit_odmr(
    spectrum: OdmrSpectrum,
    params: OdmrParams,
    gamma: GyromagneticRatio = GAMMA_NV,
    n_peaks: int = 4,
) -> OdmrFit:
    """Least-squares multi-Lorentzian fit of an ODMR spectrum.

    Dips are seeded from a prominence-based peak search and refined by a
    joint fit of baseline, contrasts, centers and widths.  Raises
    :class:`UnresolvedPeaksError` when fewer dips than requested can be
    located (overlapping orientations, insufficient bias field).
    """
    freqs = np.asarray(spectrum.freqs, dtype=float)
    pl = np.asarray(spectrum.pl, dtype=float)
    spacing = float(np.median(np.diff(freqs)))

    baseline0 = float(np.percentile(pl, 90))
    depth = baseline0 - pl
    max_depth = float(np.max(depth))
    noise_est = float(np.median(spectrum.pl_sigma))
    if noise_est == 0.0:
        diffs = np.diff(pl)
        noise_est = float(np.median(np.abs(diffs - np.median(diffs)))) / 0.6745 / math.sqrt(2)
    prominence = max(0.12 * max_depth, 4.0 * noise_est, 1e-12)
    distance = max(1, int(0.6 * params.linewidth / spacing))
    idx, props = find_peaks(depth, prominence=prominence, distance=distance)
    if len(idx) < n_peaks:
        raise UnresolvedPeaksError(
            f"found {len(idx)} dips, expected {n_peaks}; peaks likely overlap"
        )
    if len(idx) > n_peaks:
        keep = np.argsort(props["prominences"])[-n_peaks:]
        idx = np.sort(idx[keep])

    f_ref = float(freqs[0])
    # Parameters: baseline, then (contrast, center offset, width) per dip.
    p0 = [baseline0]
    for i in idx:
        p0.extend([max(depth[i], prominence), freqs[i] - f_ref, params.linewidth])

    def unpack(p):
        base = p[0]
        rest = np.asarray(p[1:]).reshape(n_peaks, 3)
        return base, rest[:, 0], f_ref + rest[:, 1], rest[:, 2]

    def resid(p):
        base, contrasts, centers, widths = unpack(p)
        return _lorentzian_dips(freqs, base, contrasts, centers, widths) - pl

    sol = least_squares(resid, p0, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14)
    base, contrasts, centers, widths = unpack(sol.x)
    widths = np.abs(widths)
    contrasts = np.abs(contrasts)

    order = np.argsort(centers)
    contrasts, centers, widths = contrasts[order], centers[order], widths[order]

    dof = max(len(freqs) - len(sol.x), 1)
    delta_pl = float(math.sqrt(np.sum(sol.fun**2) / dof))

    m_nv = _MAX_SLOPE_FACTOR * contrasts / widths
    f_max = centers + _MAX_SLOPE_OFFSET * widths
    if delta_pl > 0:
        sigma_axis = np.array(
            [odmr_sensitivity(delta_pl, m, gamma) for m in m_nv]
        )
    else:
        sigma_axis = np.zeros_like(m_nv)
    return OdmrFit(
        peak_freqs=centers,
        f_max=f_max,
        m_nv=m_nv,
        sigma_b_axis=sigma_axis,
        contrasts=contrasts,
        linewidths=widths,
        baseline=float(base),
        delta_pl=delta_pl,
    )


def nv_measure(
    delta_b: FieldVector,
    b_bias: FieldVector,
    b_0: FieldVector,
    basis: OrientationBasis,
    params: OdmrParams,
    gamma: GyromagneticRatio = GAMMA_NV,
    rng_seed: int | None = 0,
    axes_used: int = 3,
) -> tuple[FieldVector, np.ndarray]:
    """Differential NV vector measurement of the small field delta_b.

    Runs two synthetic scans, with and without delta_b applied on top of
    the bias and background, and fits both.  The per-axis Larmor shift is
    then read out at the maximum-slope working point of each reference
    dip: the PL difference between the scans at that frequency, divided by
    the fitted local slope (iteratively refined with the finite-shift
    average slope, which removes the lineshape-curvature bias).  Bias and
    background cancel in the difference, so the expectation depends only
    on delta_b.

    ``axes_used`` selects how many orientations feed the lab-frame
    recovery (the 3 with the smallest per-axis uncertainty, or all 4).
    Returns the recovered lab-frame field and the per-lab-axis standard
    deviation of the reading.
    """
    if axes_used not in (3, 4):
        raise ValueError("axes_used must be 3 or 4")
    seq = np.random.SeedSequence(rng_seed)
    seed_sig, seed_ref = seq.spawn(2)
    total_sig = b_bias + delta_b + b_0
    total_ref = b_bias + b_0
    spec_sig = synth_odmr(total_sig, basis, params, gamma, seed_sig)
    spec_ref = synth_odmr(total_ref, basis, params, gamma, seed_ref)
    fit_ref = fit_odmr(spec_ref, params, gamma)
    fit_odmr(spec_sig, params, gamma)  # raises if the shifted dips overlap

    # Dips are reported in ascending frequency; the bias field dominates
    # the shifts, so the frequency order of the bias projections maps dips
    # back to axes.
    bias_proj = project_field(basis, b_bias).as_array()
    axis_order = np.argsort(bias_proj)

    freqs = spec_ref.freqs
    n_dips = len(fit_ref.peak_freqs)
    readout_idx = [_working_point_index(freqs, fit_ref, i) for i in range(n_dips)]
    dpl_obs = np.array([float(spec_ref.pl[j] - spec_sig.pl[j]) for j in readout_idx])

    # Invert each dip's shift, then re-sweep with the other dips' estimated
    # shifts in the signal model: the tails of neighbouring dips move with
    # their own shifts, and ignoring that leaves a few-mG systematic.
    df_dips = np.zeros(n_dips)
    for _ in range(3):
        for dip_i in range(n_dips):
            df_dips[dip_i] = _invert_working_point(
                dpl_obs[dip_i], freqs[readout_idx[dip_i]], dip_i, fit_ref, df_dips
            )

    delta_f = np.zeros(4)
    sigma_axis = np.zeros(4)
    for dip_i in range(n_dips):
        axis_i = int(axis_order[dip_i])
        delta_f[axis_i] = df_dips[dip_i]
        slope_model = _lorentzian_dips_slope(
            np.array([freqs[readout_idx[dip_i]]]),
            fit_ref.contrasts,
            fit_ref.peak_freqs,
            fit_ref.linewidths,
        )[0]
        if fit_ref.delta_pl > 0:
            # Two independent scans contribute to the PL difference.
            sigma_axis[axis_i] = math.sqrt(2.0) * odmr_sensitivity(
                fit_ref.delta_pl, abs(slope_model), gamma
            )
        else:
            sigma_axis[axis_i] = 0.0

    b_axis = delta_f / gamma.value
    if axes_used == 3:
        selected = select_best_axes(np.where(sigma_axis > 0, sigma_axis, np.inf), 3)
    else:
        selected = (0, 1, 2, 3)
    w = recovery_matrix(basis, selected)
    b_lab = w @ b_axis[list(selected)]
    sigma_lab = np.sqrt((w**2) @ (sigma_axis[list(selected)] ** 2))
    return FieldVector.from_array(b_lab), sigma_lab


def _working_point_index(freqs: np.ndarray, fit_ref: OdmrFit, dip_i: int) -> int:
    """Grid index of the readout point for one dip.

    Picks the sampled frequency with the largest model slope among points
    at or right of the dip's inflection (f_max), so the monotone inversion
    headroom is at least linewidth/(2*sqrt(3)) regardless of how the scan
    grid happens to align with the dip.
    """
    center = fit_ref.peak_freqs[dip_i]
    width = fit_ref.linewidths[dip_i]
    lo = center + _MAX_SLOPE_OFFSET * width * 0.99
    hi = center + 2.5 * width
    candidates = np.nonzero((freqs >= lo) & (freqs <= hi))[0]
    if len(candidates) == 0:
        raise UnresolvedPeaksError(
            "no scan point on the right flank of a dip; scan grid too coarse"
        )
    slopes = _lorentzian_dips_slope(
        freqs[candidates], fit_ref.contrasts, fit_ref.peak_freqs, fit_ref.linewidths
    )
    return int(candidates[np.argmax(np.abs(slopes))])


def _invert_working_point(
    dpl: float,
    f_j: float,
    dip_i: int,
    fit_ref: OdmrFit,
    df_others: np.ndarray,
) -> float:
    """Frequency shift of dip ``dip_i`` whose model PL difference at f_j is ``dpl``.

    Solves model_ref(f_j) - model_shifted(f_j) = dpl for the shift of the
    targeted dip, with the other dips displaced by their current estimates
    ``df_others``.  Single-valued on the monotone right flank: the usable
    shift is bounded by (f_j - center) on the positive side and ~1.5
    linewidths on the negative side.
    """
    center = fit_ref.peak_freqs[dip_i]
    width = fit_ref.linewidths[dip_i]
    ref_at = float(
        _lorentzian_dips(
            np.array([f_j]),
            fit_ref.baseline,
            fit_ref.contrasts,
            fit_ref.peak_freqs,
            fit_ref.linewidths,
        )[0]
    )

    def transfer(df):
        shifts = np.array(df_others, dtype=float)
        shifts[dip_i] = df
        shifted = float(
            _lorentzian_dips(
                np.array([f_j]),
                fit_ref.baseline,
                fit_ref.contrasts,
                fit_ref.peak_freqs + shifts,
                fit_ref.linewidths,
            )[0]
        )
        return (ref_at - shifted) - dpl

    df_hi = 0.95 * (f_j - center)
    df_lo = -1.5 * width
    t_lo, t_hi = transfer(df_lo), transfer(df_hi)
    if t_lo == 0.0:
        return df_lo
    if t_hi == 0.0:
        return df_hi
    if t_lo * t_hi > 0:
        raise UnresolvedPeaksError(
            "per-axis shift outside the working-point readout range"
        )
    return float(brentq(transfer, df_lo, df_hi, xtol=1e-12, rtol=1e-14))


def synth_lia(
    b_scalar: float,
    gamma_rb: GyromagneticRatio = GAMMA_RB,
    params: LiaParams = LiaParams(),
    rng_seed: int | None = 0,
) -> LiaSignal:
    """Forward model of a Bell-Bloom modulation chirp.

    The in-phase X component is an absorptive Lorentzian peaked at the
    Larmor resonance f = gamma * |B|; the quadrature Y component is the
    dispersive partner, crossing zero with maximum slope at resonance.
    Gaussian noise of std y_noise is added to both; R is the pointwise
    magnitude of the noisy quadratures.
    """
    f_res = gamma_rb.value * b_scalar
    if not params.chirp_min <= f_res <= params.chirp_max:
        raise ResonanceOutOfRangeError(
            f"resonance at {f_res:.1f} kHz outside chirp "
            f"[{params.chirp_min:.0f}, {params.chirp_max:.0f}] kHz"
        )
    freqs = params.frequencies()
    u = (freqs - f_res) / (params.linewidth / 2.0)
    x = params.amplitude / (1.0 + u**2)
    y = params.amplitude * u / (1.0 + u**2)
    if params.y_noise > 0:
        rng = np.random.default_rng(rng_seed)
        x = x + rng.normal(0.0, params.y_noise, size=freqs.shape)
        y = y + rng.normal(0.0, params.y_noise, size=freqs.shape)
    return LiaSignal(mod_freqs=freqs, x=x, y=y, r=np.hypot(x, y))


# Half-max half-width of the dispersive lineshape: |y| <= peak/2 holds for
# |f - f_res| <= (2 - sqrt(3)) * linewidth/2 around the zero crossing.
_LINEAR_REGION = 2.0 - math.sqrt(3.0)


def fit_lia(signal: LiaSignal, gamma_rb: GyromagneticRatio = GAMMA_RB) -> LiaFit:
    """Resonance readout of an LIA trace.

    The resonance is located from the in-phase peak, confirmed by the Y
    sign change, and refined by a least-squares fit of the dispersive
    model (exact at zero noise).  The uncertainty follows the slope
    method: a linear fit to Y over the region around the zero crossing
    where the fitted lineshape stays within half its peak value gives the
    slope m and the RMSE dY, and sigma = dY / (gamma * m).
    """
    freqs = np.asarray(signal.mod_freqs, dtype=float)
    y = np.asarray(signal.y, dtype=float)
    x = np.asarray(signal.x, dtype=float)
    n = len(freqs)

    kernel = np.ones(min(5, n)) / min(5, n)
    x_smooth = np.convolve(x, kernel, mode="same")
    i_peak = int(np.argmax(x_smooth))

    # Width estimate from the half-maximum extent of the smoothed X peak.
    half = x_smooth[i_peak] / 2.0
    above = x_smooth >= half
    left = i_peak
    while left > 0 and above[left - 1]:
        left -= 1
    right = i_peak
    while right < n - 1 and above[right + 1]:
        right += 1
    width_guess = max(freqs[right] - freqs[left], float(freqs[1] - freqs[0]))

    lo = max(0, left - (right - left + 1))
    hi = min(n, right + (right - left + 1) + 1)
    seg = slice(lo, hi)

    sign_change = np.nonzero(np.diff(np.sign(y[seg])))[0]
    if len(sign_change) == 0:
        raise NoResonanceError("no sign change in the quadrature signal near the resonance")

    # Dispersive-model fit for the resonance frequency.
    f0_guess = float(freqs[i_peak])
    amp_guess = 2.0 * float(np.max(np.abs(y[seg])))
    fit_span = np.abs(freqs - f0_guess) <= 3.0 * width_guess
    ff, yf = freqs[fit_span], y[fit_span]

    def resid(p):
        amp, f0, gam = p
        u = (ff - f0) / (abs(gam) / 2.0)
        return amp * u / (1.0 + u**2) - yf

    sol = least_squares(
        resid,
        [amp_guess, f0_guess, width_guess],
        method="lm",
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    f_res = float(sol.x[1])
    width_fit = abs(float(sol.x[2]))
    if not freqs[0] <= f_res <= freqs[-1]:
        raise NoResonanceError("refined resonance fell outside the chirp span")

    # Slope method over the model-determined linear region.
    w = _LINEAR_REGION * width_fit / 2.0
    wsel = np.abs(freqs - f_res) <= w
    if int(np.count_nonzero(wsel)) < 3:
        raise NoResonanceError("linear region around the zero crossing is too narrow")
    fw, yw = freqs[wsel], y[wsel]
    coeffs = np.polynomial.polynomial.polyfit(fw, yw, 1)
    intercept, slope = float(coeffs[0]), float(coeffs[1])
    if slope <= 0:
        raise NoResonanceError("quadrature slope at the crossing is not positive")
    fit_resid = yw - (intercept + slope * fw)
    dof = max(len(fw) - 2, 1)
    delta_y = float(math.sqrt(np.sum(fit_resid**2) / dof))

    b_rb = f_res / gamma_rb.value
    if delta_y > 0:
        sigma_rb = lia_sensitivity(delta_y, slope, gamma_rb)
    else:
        sigma_rb = 0.0
    return LiaFit(b_rb=b_rb, sigma_rb=sigma_rb, f_res=f_res, m_rb=slope, delta_y=delta_y)


def rb_measure(
    delta_b: FieldVector,
    b_0: FieldVector,
    gamma_rb: GyromagneticRatio = GAMMA_RB,
    params: LiaParams = LiaParams(),
    rng_seed: int | None = 0,
) -> tuple[float, float]:
    """Scalar Rb reading of |delta_b + b_0| with its uncertainty."""
    b_scalar = (delta_b + b_0).magnitude()
    signal = synth_lia(b_scalar, gamma_rb, params, rng_seed)
    fit = fit_lia(signal, gamma_rb)
    return fit.b_rb, fit.sigma_rb


# Default bias field: 30 G along (2, 1, 0)/sqrt(5).  This direction gives
# axis projections proportional to (3, 1, -1, -3), i.e. four evenly spaced
# dips (44 MHz apart at 30 G) that stay resolved under small-field shifts.
DEFAULT_BIAS = FieldVector(
    30.0 * 2.0 / math.sqrt(5.0), 30.0 * 1.0 / math.sqrt(5.0), 0.0
)
