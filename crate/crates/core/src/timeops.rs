//! Time-operator diagnostics: `T = x / c`, `Lambda = omega'(k) / c`, the clock
//! energy spread, degradation fits and the uncertainty bound.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::clock::{weighted_moments, ClockAmplitudes, DispersionRelation, Fourier, SpatialGrid};
use crate::error::{Error, Result};
use crate::propagator::{purity, reduced_engine_state, total_energy, JointState, Observer, Snapshot};
use crate::protocol::ModulationMode;

/// Annotation bits attached to a record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags(u8);

impl Flags {
    pub const WRAPAROUND: Flags = Flags(1);
    pub const BROADBAND: Flags = Flags(2);
    pub const BOUND_VIOLATED: Flags = Flags(4);
    pub const STATIONARY: Flags = Flags(8);

    const NAMES: [(Flags, &'static str); 4] = [
        (Flags::WRAPAROUND, "wraparound"),
        (Flags::BROADBAND, "broadband"),
        (Flags::BOUND_VIOLATED, "bound_violated"),
        (Flags::STATIONARY, "stationary"),
    ];

    pub fn insert(&mut self, other: Flags) {
        self.0 |= other.0;
    }

    pub fn contains(self, other: Flags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Flags {
    /// `|`-separated flag names; empty when no flag is set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in Flags::NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

/// One snapshot of the clock diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mean_t: f64,
    pub var_t: f64,
    pub d: f64,
    pub d_excess: f64,
    pub mean_lambda: f64,
    pub var_lambda: f64,
    pub mean_hc: f64,
    pub var_hc: f64,
    pub bound: f64,
    pub norm: f64,
    pub energy: f64,
    pub purity_e: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mode: Option<ModulationMode>,
    pub flags: Flags,
}

impl DiagnosticsRecord {
    pub fn new(t: f64, norm: f64) -> Self {
        Self {
            t,
            mean_t: 0.0,
            var_t: 0.0,
            d: 0.0,
            d_excess: 0.0,
            mean_lambda: 0.0,
            var_lambda: 0.0,
            mean_hc: 0.0,
            var_hc: 0.0,
            bound: 0.0,
            norm,
            energy: 0.0,
            purity_e: 1.0,
            alpha: 0.0,
            beta: 0.0,
            mode: None,
            flags: Flags::default(),
        }
    }
}

/// Mean and variance of one observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub var: f64,
}

impl Stats {
    fn from_weights(values: &[f64], masses: &[f64]) -> Self {
        let (mean, var) = weighted_moments(values, masses);
        Self { mean, var }
    }
}

/// Anything carrying a single-excitation clock marginal.
pub trait ClockMarginal {
    fn grid(&self) -> &SpatialGrid;
    /// Position masses `|psi_j|^2 dx`, summed over the engine index.
    fn position_masses(&self) -> Vec<f64>;
    /// Momentum masses `|psi~_m|^2 dk`, summed over the engine index.
    fn momentum_masses(&self, fourier: &Fourier) -> Vec<f64>;
    /// Position-space rows, one per engine basis state.
    fn rows(&self) -> Vec<&[Complex64]>;
}

impl ClockMarginal for ClockAmplitudes {
    fn grid(&self) -> &SpatialGrid {
        ClockAmplitudes::grid(self)
    }

    fn position_masses(&self) -> Vec<f64> {
        self.masses()
    }

    fn momentum_masses(&self, fourier: &Fourier) -> Vec<f64> {
        let dk = self.grid().dk();
        fourier.to_momentum(self.amplitudes()).iter().map(|a| a.norm_sqr() * dk).collect()
    }

    fn rows(&self) -> Vec<&[Complex64]> {
        vec![self.amplitudes()]
    }
}

impl ClockMarginal for JointState {
    fn grid(&self) -> &SpatialGrid {
        JointState::grid(self)
    }

    fn position_masses(&self) -> Vec<f64> {
        self.clock_masses()
    }

    fn momentum_masses(&self, fourier: &Fourier) -> Vec<f64> {
        self.clock_momentum_masses(fourier)
    }

    fn rows(&self) -> Vec<&[Complex64]> {
        JointState::rows(self).collect()
    }
}

fn time_values(grid: &SpatialGrid, c: f64) -> Vec<f64> {
    grid.positions().into_iter().map(|x| x / c).collect()
}

fn lambda_values(grid: &SpatialGrid, disp: &DispersionRelation, c: f64) -> Vec<f64> {
    grid.momenta().into_iter().map(|k| disp.derivative(k) / c).collect()
}

fn hc_values(grid: &SpatialGrid, disp: &DispersionRelation) -> Vec<f64> {
    grid.momenta().into_iter().map(|k| disp.omega(k)).collect()
}

/// Moments of `T = x / c` under the clock marginal.
pub fn time_stats<S: ClockMarginal + ?Sized>(state: &S, c: f64) -> Stats {
    Stats::from_weights(&time_values(state.grid(), c), &state.position_masses())
}

/// Moments of `Lambda = omega'(k) / c` under the momentum marginal.
pub fn lambda_stats<S: ClockMarginal + ?Sized>(state: &S, disp: &DispersionRelation, c: f64) -> Stats {
    let fourier = Fourier::new(*state.grid());
    Stats::from_weights(&lambda_values(state.grid(), disp, c), &state.momentum_masses(&fourier))
}

/// Moments of the clock energy `omega(k)`.
pub fn hc_stats<S: ClockMarginal + ?Sized>(state: &S, disp: &DispersionRelation) -> Stats {
    let fourier = Fourier::new(*state.grid());
    Stats::from_weights(&hc_values(state.grid(), disp), &state.momentum_masses(&fourier))
}

/// Symmetrized covariance `Re <T Lambda> - <T><Lambda>`.
pub fn cov_time_lambda<S: ClockMarginal + ?Sized>(state: &S, disp: &DispersionRelation, c: f64) -> f64 {
    let grid = *state.grid();
    let fourier = Fourier::new(grid);
    let lambda: Vec<Complex64> = lambda_values(&grid, disp, c).into_iter().map(Complex64::from).collect();
    let t = time_values(&grid, c);
    let dx = grid.spacing();
    let mut cross = 0.0;
    for row in state.rows() {
        let mut applied = row.to_vec();
        fourier.apply_diagonal(&mut applied, &lambda);
        cross += row
            .iter()
            .zip(&applied)
            .zip(&t)
            .map(|((a, b), x)| x * (a.conj() * b).re)
            .sum::<f64>()
            * dx;
    }
    let total: f64 = state.position_masses().iter().sum();
    cross / total - time_stats(state, c).mean * lambda_stats(state, disp, c).mean
}

/// Fit of `var_T(t) = a + b t + q t^2` over a record series.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationFit {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    /// `(t, D(t))` for every record.
    pub series: Vec<(f64, f64)>,
}

impl DegradationFit {
    /// Asymptotic growth rate of `D`, to compare with `sqrt(var_Lambda)`.
    pub fn slope(&self) -> f64 {
        self.q.max(0.0).sqrt()
    }

    pub fn predict(&self, t: f64) -> f64 {
        self.a + self.b * t + self.q * t * t
    }
}

pub const MIN_FIT_RECORDS: usize = 10;

/// Least-squares polynomial fit of `ys` against `ts`, returned in raw-`t`
/// coefficients `[c0, c1, ...]`. The abscissa is centered and scaled first.
pub fn polyfit(ts: &[f64], ys: &[f64], degree: usize) -> Vec<f64> {
    let n = ts.len();
    let mid = ts.iter().sum::<f64>() / n as f64;
    let half = ts.iter().map(|t| (t - mid).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let vander = DMatrix::from_fn(n, degree + 1, |i, p| ((ts[i] - mid) / half).powi(p as i32));
    let rhs = DVector::from_column_slice(ys);
    let scaled = vander
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("SVD was computed with both factors");
    // expand sum_p s_p ((t - mid) / half)^p in powers of t
    let mut out = vec![0.0; degree + 1];
    for (p, s) in scaled.iter().enumerate() {
        let coef = s / half.powi(p as i32);
        let mut binom = 1.0;
        for (r, slot) in out.iter_mut().enumerate().take(p + 1) {
            // term t^r * (-mid)^(p - r) * C(p, r)
            *slot += coef * binom * (-mid).powi((p - r) as i32);
            binom = binom * (p - r) as f64 / (r + 1) as f64;
        }
    }
    out
}

pub fn degradation_series(records: &[DiagnosticsRecord]) -> Result<DegradationFit> {
    if records.len() < MIN_FIT_RECORDS {
        return Err(Error::InsufficientRecords {
            needed: MIN_FIT_RECORDS,
            got: records.len(),
        });
    }
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let vs: Vec<f64> = records.iter().map(|r| r.var_t).collect();
    let coef = polyfit(&ts, &vs, 2);
    Ok(DegradationFit {
        a: coef[0],
        b: coef[1],
        q: coef[2],
        series: records.iter().map(|r| (r.t, r.d)).collect(),
    })
}

/// Outcome of `sqrt(var_T) sqrt(var_HC) >= |<Lambda>| / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyCheck {
    pub holds: bool,
    /// `sqrt(var_T) sqrt(var_HC) - |<Lambda>| / 2`.
    pub margin: f64,
}

pub const UNCERTAINTY_SLACK: f64 = 1e-9;

pub fn uncertainty_check(record: &DiagnosticsRecord) -> Result<UncertaintyCheck> {
    if !(record.var_hc > 0.0) {
        return Err(Error::StationaryState(record.var_hc));
    }
    let margin = record.var_t.sqrt() * record.var_hc.sqrt() - 0.5 * record.mean_lambda.abs();
    Ok(UncertaintyCheck {
        holds: margin >= -UNCERTAINTY_SLACK,
        margin,
    })
}

/// Least-squares slope of `<T>` against `t`.
pub fn pauli_rate(records: &[DiagnosticsRecord]) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::InsufficientRecords {
            needed: 2,
            got: records.len(),
        });
    }
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let ms: Vec<f64> = records.iter().map(|r| r.mean_t).collect();
    Ok(polyfit(&ts, &ms, 1)[1])
}

/// Fills every clock-side column of a record: T, Lambda and H_C statistics,
/// the degradation columns, the bound, energy and engine purity.
#[derive(Debug, Default)]
pub struct ClockDiagnostics {
    initial_var_t: Option<f64>,
}

impl ClockDiagnostics {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Observer for ClockDiagnostics {
    fn observe(&mut self, snap: &Snapshot<'_>, record: &mut DiagnosticsRecord) {
        let grid = snap.state.grid();
        let c = snap.model.reference_speed;
        let disp = &snap.model.dispersion;
        let kmass = snap.state.clock_momentum_masses(snap.fourier);
        let t = Stats::from_weights(&time_values(grid, c), &snap.state.clock_masses());
        let lambda = Stats::from_weights(&lambda_values(grid, disp, c), &kmass);
        let hc = Stats::from_weights(&hc_values(grid, disp), &kmass);
        let var0 = *self.initial_var_t.get_or_insert(t.var);
        record.mean_t = t.mean;
        record.var_t = t.var;
        record.d = t.var.sqrt();
        record.d_excess = (t.var - var0).max(0.0).sqrt();
        record.mean_lambda = lambda.mean;
        record.var_lambda = lambda.var;
        record.mean_hc = hc.mean;
        record.var_hc = hc.var;
        record.energy = total_energy(snap.state, snap.model, snap.map, snap.fourier);
        record.purity_e = purity(&reduced_engine_state(snap.state));
        if hc.var > 0.0 {
            record.bound = lambda.mean.abs() / (2.0 * hc.var.sqrt());
            if let Ok(check) = uncertainty_check(record) {
                if !check.holds {
                    record.flags.insert(Flags::BOUND_VIOLATED);
                }
            }
        } else {
            record.bound = f64::INFINITY;
            record.flags.insert(Flags::STATIONARY);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{make_gaussian_pulse, ClockPulse};

    fn pulse(grid: SpatialGrid, x0: f64, omega: f64, k0: f64) -> ClockAmplitudes {
        make_gaussian_pulse(grid, ClockPulse::new(x0, omega, k0)).unwrap()
    }

    #[test]
    fn time_stats_of_gaussian() {
        let grid = SpatialGrid::centered(1024, 100.0).unwrap();
        let p = pulse(grid, -30.0, 1.0, 10.0);
        let s = time_stats(&p, 1.0);
        assert!((s.mean + 30.0).abs() < 1e-3);
        assert!((s.var - 1.0).abs() < 1e-3);
        let half = time_stats(&p, 2.0);
        assert!((half.mean - s.mean / 2.0).abs() < 1e-12);
        assert!((half.var - s.var / 4.0).abs() < 1e-12);
    }

    #[test]
    fn entangled_branches_share_the_clock_marginal() {
        let grid = SpatialGrid::centered(512, 80.0).unwrap();
        let p = pulse(grid, 5.0, 1.5, 4.0);
        let s = 0.5f64.sqrt();
        let phase = Complex64::new(0.0, 1.0);
        let amps = p
            .amplitudes()
            .iter()
            .map(|a| a * s)
            .chain(p.amplitudes().iter().map(|a| a * s * phase))
            .collect();
        let joint = JointState::from_raw(grid, 2, amps).unwrap();
        let a = time_stats(&joint, 1.0);
        let b = time_stats(&p, 1.0);
        assert!((a.var - b.var).abs() < 1e-12);
    }

    #[test]
    fn lambda_stats_for_linear_and_massive() {
        let grid = SpatialGrid::centered(1024, 100.0).unwrap();
        let p = pulse(grid, -30.0, 1.0, 10.0);
        let lin = lambda_stats(&p, &DispersionRelation::linear(1.0), 1.0);
        assert!((lin.mean - 1.0).abs() < 1e-12);
        assert!(lin.var < 1e-12);
        let m = 10.0;
        let massive = lambda_stats(&p, &DispersionRelation::massive(1.0, m).unwrap(), 1.0);
        assert!((massive.mean - (1.0 + 10.0 / m)).abs() < 1e-4);
        assert!((massive.var - 0.25 / (m * m)).abs() < 1e-4);
    }

    #[test]
    fn covariance_vanishes_for_real_envelope_and_follows_chirp() {
        let grid = SpatialGrid::centered(2048, 200.0).unwrap();
        let disp = DispersionRelation::massive(1.0, 10.0).unwrap();
        let plain = pulse(grid, 0.0, 1.0, 3.0);
        assert!(cov_time_lambda(&plain, &disp, 1.0).abs() < 1e-12);
        // chirp gamma gives a local wavenumber k0 + 2 gamma (x - x0): Cov = 2 gamma var_x / M
        let gamma = 0.1;
        let chirped = make_gaussian_pulse(grid, ClockPulse::new(0.0, 1.0, 3.0).with_chirp(gamma)).unwrap();
        let cov = cov_time_lambda(&chirped, &disp, 1.0);
        assert!((cov - 2.0 * gamma / 10.0).abs() < 1e-9, "{cov}");
    }

    #[test]
    fn polyfit_recovers_quadratic() {
        let ts: Vec<f64> = (0..20).map(|i| 100.0 + i as f64 * 0.5).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 - 0.5 * t + 0.02 * t * t).collect();
        let c = polyfit(&ts, &ys, 2);
        assert!((c[0] - 3.0).abs() < 1e-7);
        assert!((c[1] + 0.5).abs() < 1e-9);
        assert!((c[2] - 0.02).abs() < 1e-11);
    }

    #[test]
    fn degradation_fit_needs_ten_records() {
        let recs: Vec<_> = (0..5).map(|i| DiagnosticsRecord::new(i as f64, 1.0)).collect();
        assert!(matches!(degradation_series(&recs), Err(Error::InsufficientRecords { .. })));
    }

    #[test]
    fn uncertainty_rejects_stationary_state() {
        let r = DiagnosticsRecord::new(0.0, 1.0);
        assert!(matches!(uncertainty_check(&r), Err(Error::StationaryState(_))));
    }

    #[test]
    fn flags_render_in_fixed_order() {
        let mut f = Flags::default();
        assert_eq!(f.to_string(), "");
        f.insert(Flags::STATIONARY);
        f.insert(Flags::WRAPAROUND);
        assert_eq!(f.to_string(), "wraparound|stationary");
    }
}
