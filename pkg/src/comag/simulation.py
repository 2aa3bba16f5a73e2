"""Monte-Carlo harnesses for the combined-estimator improvement studies.

Grid simulations perturb the vector (NV) and scalar (Rb) readings directly
with Gaussian noise at the configured sensor uncertainties; spectral-level
simulation through the full synthetic scans is available separately in
:mod:`comag.measurement`.  Every harness derives one RNG stream per grid
cell (or scan position) from (seed, cell index), so results are
deterministic and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .estimator import batch_combined
from .geometry import FieldVector

# Stream tags keep the per-cell RNG keys of different harnesses disjoint.
_TAG_GRID = 1
_TAG_MARGINAL = 2
_TAG_SPATIAL = 3
_TAG_DEMO = 4


@dataclass(frozen=True)
class SimConfig:
    """Grid Monte-Carlo configuration.

    The deterministic small field sweeps the x-y plane over
    [grid_min, grid_max]^2 while noise acts in all three dimensions.  When
    ``sigma_rb`` is None it is derived as sigma_nv / sigma_ratio.
    ``b_0_cal_error`` is the per-axis standard deviation of the background
    estimate supplied to the estimator (set by the calibration duration);
    a fresh calibration error is drawn for every repetition.

    The default sigma_nv keeps the noise well below the grid fields, so
    the improvement maps show the first-order stretch/rotation structure;
    only the NV-to-Rb ratio matters for the headline gains.
    """

    grid_min: float = -1.5
    grid_max: float = 1.5
    grid_points: int = 41
    n_reps: int = 50
    sigma_nv: float = 0.026
    sigma_rb: float | None = None
    sigma_ratio: float = 1000.0
    b_0_true: FieldVector = field(default_factory=lambda: FieldVector(0.0, 0.0, 0.0))
    b_0_cal_error: float = 0.0
    seed: int = 20240

    def __post_init__(self):
        if not self.grid_min < self.grid_max:
            raise ValueError("grid_min must be below grid_max")
        if self.n_reps < 2:
            raise ValueError("n_reps must be >= 2")
        if not self.sigma_ratio > 0:
            raise ValueError("sigma_ratio must be positive")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if self.sigma_nv <= 0:
            raise ValueError("sigma_nv must be positive")
        if self.sigma_rb is not None and self.sigma_rb <= 0:
            raise ValueError("sigma_rb must be positive")
        if self.b_0_cal_error < 0:
            raise ValueError("b_0_cal_error must be >= 0")

    def resolved_sigma_rb(self) -> float:
        if self.sigma_rb is not None:
            return self.sigma_rb
        return self.sigma_nv / self.sigma_ratio

    def axis_values(self) -> np.ndarray:
        return np.linspace(self.grid_min, self.grid_max, self.grid_points)


@dataclass(frozen=True)
class ImprovementMap:
    """Per-cell dB gains of the combined estimator over NV-only estimation.

    Gains are 10*log10 of the NV-to-combined error ratio, per cell, for
    the squared (MSE) and absolute (MAE) error of the field magnitude and
    of the field direction angle.  ``orthogonality`` is the noiseless
    |cos| between (delta_b + b_0) and delta_b; ``valid`` flags cells where
    estimation succeeded, ``dir_valid`` additionally requires a nonzero
    true field for the angle metrics.
    """

    bx: np.ndarray
    by: np.ndarray
    gain_mag_mse_db: np.ndarray
    gain_mag_mae_db: np.ndarray
    gain_dir_mse_db: np.ndarray
    gain_dir_mae_db: np.ndarray
    orthogonality: np.ndarray
    valid: np.ndarray
    dir_valid: np.ndarray
    config: SimConfig


def _cell_rng(seed: int, tag: int, i: int, j: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, tag, i, j])


def _angle_between(v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Angles (rad) between rows of v and the vector u; NaN for zero rows."""
    nv = np.linalg.norm(v, axis=1)
    nu = np.linalg.norm(u)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = (v @ u) / (nv * nu)
    return np.arccos(np.clip(cosang, -1.0, 1.0))


def _db(ratio: float) -> float:
    if ratio <= 0 or not math.isfinite(ratio):
        return math.nan
    return 10.0 * math.log10(ratio)


def _orthogonality(delta: np.ndarray, b_0: np.ndarray) -> float:
    s = delta + b_0
    ns, nd = np.linalg.norm(s), np.linalg.norm(delta)
    if ns == 0.0 or nd == 0.0:
        return math.nan
    return abs(float(s @ delta)) / (ns * nd)


def _simulate_cell(
    delta: np.ndarray,
    cfg: SimConfig,
    rng: np.random.Generator,
) -> dict:
    """One grid cell: n_reps noisy readings of both sensors, both estimators."""
    n = cfg.n_reps
    sigma_rb = cfg.resolved_sigma_rb()
    b_0 = cfg.b_0_true.as_array()

    nv = delta[None, :] + rng.normal(0.0, cfg.sigma_nv, size=(n, 3))
    rb = np.linalg.norm(delta + b_0) + rng.normal(0.0, sigma_rb, size=n)
    rb = np.clip(rb, 0.0, None)
    if cfg.b_0_cal_error > 0:
        b_0_hat = b_0[None, :] + rng.normal(0.0, cfg.b_0_cal_error, size=(n, 3))
    else:
        b_0_hat = np.broadcast_to(b_0, (n, 3))

    b_hat, ok = batch_combined(nv, b_0_hat, rb)

    true_mag = float(np.linalg.norm(delta))
    mag_err_comb = np.linalg.norm(b_hat[ok], axis=1) - true_mag
    mag_err_nv = np.linalg.norm(nv, axis=1) - true_mag

    out = {
        "valid": bool(np.any(ok)),
        "mse_mag_nv": float(np.mean(mag_err_nv**2)),
        "mse_mag_comb": float(np.mean(mag_err_comb**2)) if np.any(ok) else math.nan,
        "mae_mag_nv": float(np.mean(np.abs(mag_err_nv))),
        "mae_mag_comb": float(np.mean(np.abs(mag_err_comb))) if np.any(ok) else math.nan,
    }
    if true_mag > 0 and np.any(ok):
        ang_nv = _angle_between(nv, delta)
        ang_comb = _angle_between(b_hat[ok], delta)
        out["dir_valid"] = True
        out["mse_dir_nv"] = float(np.mean(ang_nv**2))
        out["mse_dir_comb"] = float(np.mean(ang_comb**2))
        out["mae_dir_nv"] = float(np.mean(np.abs(ang_nv)))
        out["mae_dir_comb"] = float(np.mean(np.abs(ang_comb)))
    else:
        out["dir_valid"] = False
    return out


def run_grid_simulation(cfg: SimConfig) -> ImprovementMap:
    """MSE/MAE improvement of the combined estimator over the whole grid.

    For every cell, draws n_reps noisy NV vector readings of delta_b and
    noisy Rb scalar readings of |delta_b + b_0_true|, applies the combined
    estimator with a per-repetition perturbed background estimate, and
    accumulates magnitude and direction errors for the combined and the
    NV-only estimates.  Deterministic for a fixed config.
    """
    xs = cfg.axis_values()
    ys = cfg.axis_values()
    shape = (len(ys), len(xs))
    gmag_mse = np.full(shape, math.nan)
    gmag_mae = np.full(shape, math.nan)
    gdir_mse = np.full(shape, math.nan)
    gdir_mae = np.full(shape, math.nan)
    ortho = np.full(shape, math.nan)
    valid = np.zeros(shape, dtype=bool)
    dir_valid = np.zeros(shape, dtype=bool)
    b_0 = cfg.b_0_true.as_array()

    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            delta = np.array([x, y, 0.0])
            rng = _cell_rng(cfg.seed, _TAG_GRID, ix, iy)
            cell = _simulate_cell(delta, cfg, rng)
            ortho[iy, ix] = _orthogonality(delta, b_0)
            if not cell["valid"]:
                continue
            valid[iy, ix] = True
            gmag_mse[iy, ix] = _db(cell["mse_mag_nv"] / cell["mse_mag_comb"])
            gmag_mae[iy, ix] = _db(cell["mae_mag_nv"] / cell["mae_mag_comb"])
            if cell["dir_valid"]:
                dir_valid[iy, ix] = True
                gdir_mse[iy, ix] = _db(cell["mse_dir_nv"] / cell["mse_dir_comb"])
                gdir_mae[iy, ix] = _db(cell["mae_dir_nv"] / cell["mae_dir_comb"])

    return ImprovementMap(
        bx=xs,
        by=ys,
        gain_mag_mse_db=gmag_mse,
        gain_mag_mae_db=gmag_mae,
        gain_dir_mse_db=gdir_mse,
        gain_dir_mae_db=gdir_mae,
        orthogonality=ortho,
        valid=valid,
        dir_valid=dir_valid,
        config=cfg,
    )


def orthogonality_map(cfg: SimConfig) -> np.ndarray:
    """Noiseless per-cell |cos| between (delta_b + b_0) and delta_b.

    1 means the correction can only stretch the NV estimate (maximal
    magnitude improvement), 0 means it can only rotate it (none).  Cells
    where either vector vanishes are NaN.
    """
    xs = cfg.axis_values()
    ys = cfg.axis_values()
    b_0 = cfg.b_0_true.as_array()
    out = np.full((len(ys), len(xs)), math.nan)
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            out[iy, ix] = _orthogonality(np.array([x, y, 0.0]), b_0)
    return out


@dataclass(frozen=True)
class MarginalProfile:
    """1-D slice of the improvement study along a single axis."""

    b_applied: np.ndarray
    gain_mag_mse_db: np.ndarray
    gain_mag_mae_db: np.ndarray
    var_nv: np.ndarray
    var_combined: np.ndarray
    orthogonality: np.ndarray
    axis: str
    config: SimConfig


def marginal_improvement(
    cfg: SimConfig,
    axis: str = "x",
    field_min: float = 0.0,
    field_max: float = 1.6,
    n_points: int = 41,
) -> MarginalProfile:
    """Improvement profile for a DC field swept along one axis.

    Mirrors the grid simulation restricted to a single axis, reporting the
    per-point empirical magnitude variance of both estimators over n_reps
    repetitions alongside the dB gains.
    """
    axis_i = {"x": 0, "y": 1, "z": 2}.get(axis)
    if axis_i is None:
        raise ValueError("axis must be x, y, or z")
    values = np.linspace(field_min, field_max, n_points)
    b_0 = cfg.b_0_true.as_array()

    gains_mse = np.full(n_points, math.nan)
    gains_mae = np.full(n_points, math.nan)
    var_nv = np.full(n_points, math.nan)
    var_comb = np.full(n_points, math.nan)
    ortho = np.full(n_points, math.nan)
    for i, v in enumerate(values):
        delta = np.zeros(3)
        delta[axis_i] = v
        rng = _cell_rng(cfg.seed, _TAG_MARGINAL, i, axis_i)
        cell = _simulate_cell(delta, cfg, rng)
        ortho[i] = _orthogonality(delta, b_0)
        if not cell["valid"]:
            continue
        gains_mse[i] = _db(cell["mse_mag_nv"] / cell["mse_mag_comb"])
        gains_mae[i] = _db(cell["mae_mag_nv"] / cell["mae_mag_comb"])
        var_nv[i] = cell["mse_mag_nv"]
        var_comb[i] = cell["mse_mag_comb"]

    return MarginalProfile(
        b_applied=values,
        gain_mag_mse_db=gains_mse,
        gain_mag_mae_db=gains_mae,
        var_nv=var_nv,
        var_combined=var_comb,
        orthogonality=ortho,
        axis=axis,
        config=cfg,
    )


@dataclass(frozen=True)
class SpatialScanConfig:
    """Linear-stage scan of a dipole-like source.

    The source is a point dipole carried along the stage axis; the sensor
    sits at the origin.  The dipole moment points along ``source_axis``
    (default: the unit vector of the configured background field, which
    keeps the source field roughly collinear with the background), and the
    stage moves the dipole from standoff - range/2 to standoff + range/2
    along that same direction, with an optional perpendicular offset.
    ``dipole_moment`` is in Gauss * mm^3; defaults give a peak source
    field of about 1 G at the closest approach.
    """

    n_positions: int = 50
    stage_range: float = 30.0
    standoff: float = 67.0
    perp_offset: float = 0.0
    dipole_moment: float = 70304.0
    source_axis: tuple[float, float, float] | None = None
    poly_degree: int = 2
    n_reps: int = 50
    sigma_nv: float = 0.26
    sigma_rb: float = 7.9e-4
    b_0: FieldVector = field(
        default_factory=lambda: FieldVector(0.004, -0.7454, 0.6451)
    )
    b_0_cal_error: float = 0.0
    seed: int = 7

    def __post_init__(self):
        if self.n_positions < 3:
            raise ValueError("n_positions must be >= 3")
        if self.poly_degree < 1:
            raise ValueError("poly_degree must be >= 1")
        if self.stage_range <= 0 or self.standoff <= 0:
            raise ValueError("stage geometry must be positive")
        if self.sigma_nv <= 0 or self.sigma_rb <= 0:
            raise ValueError("sensor noise must be positive")
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")

    def axis_unit(self) -> np.ndarray:
        if self.source_axis is not None:
            v = np.asarray(self.source_axis, dtype=float)
        else:
            v = self.b_0.as_array()
        n = np.linalg.norm(v)
        if n == 0.0:
            raise ValueError("source axis is undefined for a zero vector")
        return v / n

    def positions(self) -> np.ndarray:
        half = self.stage_range / 2.0
        return np.linspace(-half, half, self.n_positions)


def dipole_field(moment_vec: np.ndarray, r_vec: np.ndarray) -> np.ndarray:
    """Point-dipole field at displacement r from the dipole, Gauss for G*mm^3."""
    r = float(np.linalg.norm(r_vec))
    if r == 0.0:
        raise ValueError("field requested at the dipole position")
    rhat = r_vec / r
    return (3.0 * float(moment_vec @ rhat) * rhat - moment_vec) / r**3


def source_field_at_sensor(cfg: SpatialScanConfig, stage_pos: float) -> np.ndarray:
    """Source field at the sensor for one stage position (mm)."""
    axis = cfg.axis_unit()
    perp = _perpendicular_unit(axis)
    dipole_pos = (cfg.standoff + stage_pos) * axis + cfg.perp_offset * perp
    moment = cfg.dipole_moment * axis
    return dipole_field(moment, -dipole_pos)


def _perpendicular_unit(axis: np.ndarray) -> np.ndarray:
    trial = np.array([1.0, 0.0, 0.0])
    if abs(axis @ trial) > 0.9:
        trial = np.array([0.0, 1.0, 0.0])
    p = trial - (trial @ axis) * axis
    return p / np.linalg.norm(p)


@dataclass(frozen=True)
class SpatialScanReport:
    """Per-position magnitude curves, polynomial fits, and error summary."""

    positions: np.ndarray
    true_mag: np.ndarray
    nv_mag: np.ndarray
    rb_mag: np.ndarray
    combined_mag: np.ndarray
    nv_fit: np.ndarray
    rb_fit: np.ndarray
    combined_fit: np.ndarray
    rmse_nv: float
    rmse_rb: float
    rmse_combined: float
    gain_db: float
    config: SpatialScanConfig


def _polyfit_curve(x: np.ndarray, y: np.ndarray, degree: int) -> np.ndarray:
    coeffs = np.polynomial.polynomial.polyfit(x, y, degree)
    return np.polynomial.polynomial.polyval(x, coeffs)


def spatial_scan_sim(cfg: SpatialScanConfig) -> SpatialScanReport:
    """Simulated stage scan measured by the Rb, NV, and combined estimators.

    At every position the n_reps raw readings are averaged first and the
    combined estimator is applied once to the averaged pair, keeping it in
    its linear regime.  Each magnitude curve is then fit with a degree
    ``poly_degree`` polynomial and its RMSE about its own fit is reported,
    with the NV-to-combined MSE gain in dB.
    """
    positions = cfg.positions()
    b_0 = cfg.b_0.as_array()
    n = cfg.n_reps

    true_mag = np.zeros(cfg.n_positions)
    nv_mag = np.zeros(cfg.n_positions)
    rb_mag = np.zeros(cfg.n_positions)
    comb_mag = np.zeros(cfg.n_positions)
    for i, pos in enumerate(positions):
        src = source_field_at_sensor(cfg, float(pos))
        true_mag[i] = np.linalg.norm(src)
        rng = _cell_rng(cfg.seed, _TAG_SPATIAL, i)
        nv_mean = src + rng.normal(0.0, cfg.sigma_nv / math.sqrt(n), size=3)
        rb_mean = float(
            np.linalg.norm(src + b_0) + rng.normal(0.0, cfg.sigma_rb / math.sqrt(n))
        )
        rb_mean = max(rb_mean, 0.0)
        b_0_hat = b_0
        if cfg.b_0_cal_error > 0:
            b_0_hat = b_0 + rng.normal(0.0, cfg.b_0_cal_error, size=3)
        b_hat, ok = batch_combined(nv_mean[None, :], b_0_hat, np.array([rb_mean]))
        nv_mag[i] = float(np.linalg.norm(nv_mean))
        rb_mag[i] = rb_mean
        comb_mag[i] = float(np.linalg.norm(b_hat[0])) if ok[0] else math.nan

    nv_fit = _polyfit_curve(positions, nv_mag, cfg.poly_degree)
    rb_fit = _polyfit_curve(positions, rb_mag, cfg.poly_degree)
    comb_fit = _polyfit_curve(positions, comb_mag, cfg.poly_degree)
    rmse_nv = float(np.sqrt(np.mean((nv_mag - nv_fit) ** 2)))
    rmse_rb = float(np.sqrt(np.mean((rb_mag - rb_fit) ** 2)))
    rmse_comb = float(np.sqrt(np.mean((comb_mag - comb_fit) ** 2)))
    gain = _db((rmse_nv / rmse_comb) ** 2) if rmse_comb > 0 else math.nan

    return SpatialScanReport(
        positions=positions,
        true_mag=true_mag,
        nv_mag=nv_mag,
        rb_mag=rb_mag,
        combined_mag=comb_mag,
        nv_fit=nv_fit,
        rb_fit=rb_fit,
        combined_fit=comb_fit,
        rmse_nv=rmse_nv,
        rmse_rb=rmse_rb,
        rmse_combined=rmse_comb,
        gain_db=gain,
        config=cfg,
    )


@dataclass(frozen=True)
class ScalarDemoReport:
    """Combined vs naive scalar background subtraction, with B_0 reversed.

    The naive curves subtract the scalar |B_0| from the Rb reading; the
    combined curves subtract the background vectorially via the estimator.
    Reversing B_0 distorts the naive curve but leaves the combined one
    unchanged in expectation.
    """

    positions: np.ndarray
    true_mag: np.ndarray
    combined: np.ndarray
    naive: np.ndarray
    combined_reversed: np.ndarray
    naive_reversed: np.ndarray
    config: SpatialScanConfig


def scalar_vs_vector_demo(cfg: SpatialScanConfig) -> ScalarDemoReport:
    """Distortion of naive scalar background subtraction along a scan."""
    positions = cfg.positions()
    b_0 = cfg.b_0.as_array()
    b_0_mag = float(np.linalg.norm(b_0))
    n = cfg.n_reps

    true_mag = np.zeros(cfg.n_positions)
    combined = np.zeros(cfg.n_positions)
    naive = np.zeros(cfg.n_positions)
    combined_rev = np.zeros(cfg.n_positions)
    naive_rev = np.zeros(cfg.n_positions)
    for i, pos in enumerate(positions):
        src = source_field_at_sensor(cfg, float(pos))
        true_mag[i] = np.linalg.norm(src)
        rng = _cell_rng(cfg.seed, _TAG_DEMO, i)
        nv_mean = src + rng.normal(0.0, cfg.sigma_nv / math.sqrt(n), size=3)
        noise_rb = float(rng.normal(0.0, cfg.sigma_rb / math.sqrt(n)))

        for b0_vec, comb_out, naive_out in (
            (b_0, combined, naive),
            (-b_0, combined_rev, naive_rev),
        ):
            rb = max(float(np.linalg.norm(src + b0_vec)) + noise_rb, 0.0)
            b_hat, ok = batch_combined(nv_mean[None, :], b0_vec, np.array([rb]))
            comb_out[i] = float(np.linalg.norm(b_hat[0])) if ok[0] else math.nan
            naive_out[i] = rb - b_0_mag

    return ScalarDemoReport(
        positions=positions,
        true_mag=true_mag,
        combined=combined,
        naive=naive,
        combined_reversed=combined_rev,
        naive_reversed=naive_rev,
        config=cfg,
    )


@dataclass(frozen=True)
class AngularErrorMap:
    """Linearized angular uncertainty over a field grid, with dB totals."""

    bx: np.ndarray
    by: np.ndarray
    d_theta: np.ndarray
    d_phi: np.ndarray
    total_db: np.ndarray
    sigma: float


def angular_error_map(
    grid_min: float = -1.5,
    grid_max: float = 1.5,
    grid_points: int = 41,
    sigma: float = 0.1,
) -> AngularErrorMap:
    """Angular uncertainty of a vector reading across the x-y plane.

    Per cell, the first-order angle uncertainties for an isotropic
    per-axis noise ``sigma``; ``total_db`` is 10*log10(d_theta^2 +
    d_phi^2).  The error falls off as 1/|B| along every ray, so larger
    working fields give better angular accuracy.  The origin is NaN.
    """
    from .estimator import angular_uncertainty

    xs = np.linspace(grid_min, grid_max, grid_points)
    ys = np.linspace(grid_min, grid_max, grid_points)
    d_theta = np.full((len(ys), len(xs)), math.nan)
    d_phi = np.full((len(ys), len(xs)), math.nan)
    total_db = np.full((len(ys), len(xs)), math.nan)
    for iy, y in enumerate(ys):
        for ix, x in enumerate(xs):
            if x == 0.0 and y == 0.0:
                continue
            au = angular_uncertainty(FieldVector(x, y, 0.0), sigma)
            d_theta[iy, ix] = au.d_theta
            d_phi[iy, ix] = au.d_phi
            total_db[iy, ix] = _db(au.d_theta**2 + au.d_phi**2)
    return AngularErrorMap(
        bx=xs, by=ys, d_theta=d_theta, d_phi=d_phi, total_db=total_db, sigma=sigma
    )


# Calibration-error ladder as fractions of sigma_nv; spans calibrations
# from much better than the sensor noise to a quarter of it.
CAL_ERROR_FRACTIONS = (0.01, 0.02, 0.035, 0.05, 0.07, 0.10, 0.15, 0.25)


def sweep_calibration_error(
    cfg: SimConfig,
    cal_errors: tuple[float, ...] | None = None,
) -> dict[float, ImprovementMap]:
    """Grid simulations over a ladder of background-calibration errors.

    The calibration-duration-dependent uncertainty of the background
    estimate is not a fixed number; sweeping it maps how the peak
    improvement degrades as the calibration gets worse.  The default
    ladder is ``CAL_ERROR_FRACTIONS`` times the configured sigma_nv.
    """
    if cal_errors is None:
        cal_errors = tuple(f * cfg.sigma_nv for f in CAL_ERROR_FRACTIONS)
    return {e: run_grid_simulation(replace(cfg, b_0_cal_error=e)) for e in cal_errors}
