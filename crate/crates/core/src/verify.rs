//! Numerical checks of the series: moments of concrete controls, backward
//! integration of the system, and the asymptotic order of the truncation error.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freealg::{enumerate_basis, AlgElem, Word};
use crate::rational;
use crate::series::{ControlSystem, SeriesTable};

/// Number of integration steps across the horizon.
pub const STEPS: usize = 2000;
/// Residuals at or below this size are float noise and are left out of fits.
pub const NOISE_FLOOR: f64 = 1e-14;
/// The fitted slope may fall short of the ideal `N + 1` by this much.
pub const SLOPE_MARGIN: f64 = 0.3;

const CONTROL_LEVELS: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("control value {value} exceeds the bound |u| <= 1")]
    ControlBound { value: f64 },
    #[error("horizon must be positive, got {theta}")]
    Horizon { theta: f64 },
    #[error("integration blew up at t = {time}")]
    BlowUp { time: f64 },
}

/// An admissible control on `[0, theta]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSignal {
    Constant(f64),
    /// Equal-length pieces over the normalized horizon `[0, 1]`.
    Piecewise(Vec<f64>),
}

impl ControlSignal {
    pub fn constant(value: f64) -> Result<Self, VerifyError> {
        check_bound(value)?;
        Ok(ControlSignal::Constant(value))
    }

    pub fn piecewise(values: Vec<f64>) -> Result<Self, VerifyError> {
        values.iter().try_for_each(|&v| check_bound(v))?;
        assert!(!values.is_empty(), "a piecewise control needs at least one piece");
        Ok(ControlSignal::Piecewise(values))
    }

    /// 4 to 16 pieces with values drawn from `{-1, -1/2, 1/2, 1}`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let pieces = rng.gen_range(4..=16);
        ControlSignal::Piecewise((0..pieces).map(|_| *CONTROL_LEVELS.choose(rng).unwrap()).collect())
    }

    /// `u(s)` on the horizon `theta`; right-continuous at piece boundaries.
    pub fn value(&self, s: f64, theta: f64) -> f64 {
        match self {
            ControlSignal::Constant(v) => *v,
            ControlSignal::Piecewise(values) => {
                let k = ((s / theta) * values.len() as f64).floor();
                values[(k.max(0.0) as usize).min(values.len() - 1)]
            }
        }
    }

    /// Interval endpoints on which `u` is constant.
    fn segments(&self, theta: f64) -> Vec<f64> {
        match self {
            ControlSignal::Constant(_) => vec![0.0, theta],
            ControlSignal::Piecewise(values) => {
                let k = values.len();
                (0..=k).map(|i| theta * i as f64 / k as f64).collect()
            }
        }
    }
}

fn check_bound(value: f64) -> Result<(), VerifyError> {
    if value.is_finite() && value.abs() <= 1.0 {
        Ok(())
    } else {
        Err(VerifyError::ControlBound { value })
    }
}

/// Classical fourth-order Runge-Kutta from `start` to `end` (either direction),
/// restarting at every control switch so that each step sees a smooth field.
fn integrate<F>(u: &ControlSignal, theta: f64, steps: usize, start: f64, end: f64, y: &mut [f64], field: F) -> Result<(), VerifyError>
where
    F: Fn(f64, f64, &[f64], &mut [f64]),
{
    let h_max = theta / steps as f64;
    let mut cuts = u.segments(theta);
    if start > end {
        cuts.reverse();
    }
    let dim = y.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let control = u.value(0.5 * (a + b), theta);
        let n = ((b - a).abs() / h_max).round().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for i in 0..n {
            let s = a + h * i as f64;
            field(s, control, y, &mut k1);
            for j in 0..dim {
                tmp[j] = y[j] + 0.5 * h * k1[j];
            }
            field(s + 0.5 * h, control, &tmp, &mut k2);
            for j in 0..dim {
                tmp[j] = y[j] + 0.5 * h * k2[j];
            }
            field(s + 0.5 * h, control, &tmp, &mut k3);
            for j in 0..dim {
                tmp[j] = y[j] + h * k3[j];
            }
            field(s + h, control, &tmp, &mut k4);
            for j in 0..dim {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(VerifyError::BlowUp { time: s + h });
            }
        }
    }
    Ok(())
}

/// Values `xi_w(theta, u)` for every word up to some order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentValues {
    pub theta: f64,
    pub values: BTreeMap<Word, f64>,
}

impl MomentValues {
    pub fn get(&self, w: &Word) -> Option<f64> {
        if w.is_empty() {
            return Some(1.0);
        }
        self.values.get(w).copied()
    }

    /// `<e, xi>`, with the scalar part paired with the empty word.
    ///
    /// Panics if `e` involves a word that was not evaluated.
    pub fn eval(&self, e: &AlgElem) -> f64 {
        let mut acc = rational::to_f64(e.scalar_part());
        for (w, c) in e.terms() {
            acc += rational::to_f64(c) * self.get(w).unwrap_or_else(|| panic!("moment {w} was not evaluated"));
        }
        acc
    }
}

/// Integrates `d xi_{m1...mk} / ds = s^{m1} u(s) xi_{m2...mk}(s)` for all
/// words of order at most `max_order`.
pub fn evaluate_moments(u: &ControlSignal, theta: f64, max_order: usize) -> Result<MomentValues, VerifyError> {
    evaluate_moments_with_steps(u, theta, max_order, STEPS)
}

pub fn evaluate_moments_with_steps(
    u: &ControlSignal,
    theta: f64,
    max_order: usize,
    steps: usize,
) -> Result<MomentValues, VerifyError> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(VerifyError::Horizon { theta });
    }
    let words: Vec<Word> = (1..=max_order).flat_map(enumerate_basis).collect();
    let index: BTreeMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    // (first letter, state index of the tail or None for the empty tail)
    let links: Vec<(i32, Option<usize>)> = words
        .iter()
        .map(|w| {
            let tail = w.tail();
            (w.first().unwrap() as i32, (!tail.is_empty()).then(|| index[&tail]))
        })
        .collect();
    let mut y = vec![0.0; words.len()];
    integrate(u, theta, steps, 0.0, theta, &mut y, |s, control, state, out| {
        for (slot, &(m, tail)) in out.iter_mut().zip(&links) {
            let inner = tail.map_or(1.0, |i| state[i]);
            *slot = s.powi(m) * control * inner;
        }
    })?;
    Ok(MomentValues { theta, values: words.into_iter().zip(y).collect() })
}

/// `x(0)` for the trajectory of `x' = a + b u` that reaches the origin at `theta`.
pub fn backward_endpoint(sys: &ControlSystem, u: &ControlSignal, theta: f64) -> Result<Vec<f64>, VerifyError> {
    if theta.is_nan() || theta <= 0.0 {
        return Err(VerifyError::Horizon { theta });
    }
    let mut x = vec![0.0; sys.dimension()];
    let (a, b) = (sys.drift(), sys.control_field());
    integrate(u, theta, STEPS, theta, 0.0, &mut x, |t, control, state, out| {
        for i in 0..out.len() {
            out[i] = a[i].eval_f64(t, state) + b[i].eval_f64(t, state) * control;
        }
    })?;
    Ok(x)
}

/// `sum v_w xi_w(theta, u)` over the table.
pub fn series_endpoint(table: &SeriesTable, moments: &MomentValues) -> Vec<f64> {
    let mut out = vec![0.0; table.dimension()];
    for (w, v) in table.nonzero() {
        let xi = moments.get(w).expect("moments cover the table");
        for (slot, c) in out.iter_mut().zip(v) {
            *slot += rational::to_f64(c) * xi;
        }
    }
    out
}

/// Truncation residuals of one control over a sequence of horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRun {
    pub control: ControlSignal,
    pub thetas: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Log-log slope of residual against horizon; absent when fewer than two
    /// residuals rise above the noise floor.
    pub slope: Option<f64>,
}

/// Least-squares slope of `log r` against `log theta`, skipping noise-level residuals.
pub fn fit_slope(thetas: &[f64], residuals: &[f64]) -> Option<f64> {
    let points: Vec<(f64, f64)> =
        thetas.iter().zip(residuals).filter(|(_, &r)| r > NOISE_FLOOR).map(|(&t, &r)| (t.ln(), r.ln())).collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Compares the backward endpoint with the truncated series for each horizon.
pub fn order_check(sys: &ControlSystem, table: &SeriesTable, u: &ControlSignal, thetas: &[f64]) -> Result<OrderRun, VerifyError> {
    let residuals = thetas
        .iter()
        .map(|&theta| {
            let exact = backward_endpoint(sys, u, theta)?;
            let moments = evaluate_moments(u, theta, table.max_order())?;
            let approx = series_endpoint(table, &moments);
            Ok(exact.iter().zip(&approx).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<f64>, VerifyError>>()?;
    Ok(OrderRun { control: u.clone(), slope: fit_slope(thetas, &residuals), thetas: thetas.to_vec(), residuals })
}

/// `theta_j = 0.2 * 2^-j` for `j = 0..count`.
pub fn default_thetas(count: usize) -> Vec<f64> {
    (0..count).map(|j| 0.2 * 0.5f64.powi(j as i32)).collect()
}

/// Largest deviation of `xi_u xi_v` from the evaluated shuffle `u sh v`, over
/// all pairs of words with total order at most `max_order`.
pub fn shuffle_identity_error(u: &ControlSignal, theta: f64, max_order: usize) -> Result<f64, VerifyError> {
    let moments = evaluate_moments(u, theta, max_order)?;
    let words: Vec<Word> = (1..max_order).flat_map(enumerate_basis).collect();
    let mut worst: f64 = 0.0;
    for p in &words {
        for q in words.iter().filter(|q| q.order() + p.order() <= max_order) {
            let lhs = moments.get(p).unwrap() * moments.get(q).unwrap();
            let rhs = moments.eval(&AlgElem::word(p.clone()).shuffle(&AlgElem::word(q.clone())));
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// Largest change of any moment when the number of steps is doubled.
pub fn step_halving_change(u: &ControlSignal, theta: f64, max_order: usize) -> Result<f64, VerifyError> {
    let coarse = evaluate_moments_with_steps(u, theta, max_order, STEPS)?;
    let fine = evaluate_moments_with_steps(u, theta, max_order, 2 * STEPS)?;
    Ok(coarse.values.iter().map(|(w, v)| (v - fine.values[w]).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub controls: usize,
    pub seed: u64,
    pub thetas: Vec<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { controls: 10, seed: 1, thetas: default_thetas(6) }
    }
}

impl VerifyOptions {
    pub fn random_controls(&self) -> Vec<ControlSignal> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(self.seed);
        (0..self.controls).map(|_| ControlSignal::random(&mut rng)).collect()
    }
}

/// Series-level numerical checks of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub series_order: usize,
    /// Minimum accepted slope, `series_order + 1 - SLOPE_MARGIN`.
    pub slope_threshold: f64,
    pub runs: Vec<OrderRun>,
    pub min_slope: Option<f64>,
    pub slope_passed: bool,
    pub shuffle_error: f64,
    pub shuffle_passed: bool,
    pub step_change: f64,
    pub step_passed: bool,
    /// Residual of each approximating system against its own (finite) series.
    #[serde(default)]
    pub approximation_residuals: BTreeMap<String, f64>,
    pub approximation_passed: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.slope_passed && self.shuffle_passed && self.step_passed && self.approximation_passed
    }
}

pub const SHUFFLE_TOLERANCE: f64 = 1e-8;
pub const STEP_TOLERANCE: f64 = 1e-10;
/// Bound on the residual of a homogeneous system against its own series.
pub const EXACT_TOLERANCE: f64 = 1e-10;

/// Largest residual of a system whose series is exactly `table` over the given
/// controls and horizons.
pub fn exact_series_residual(
    sys: &ControlSystem,
    table: &SeriesTable,
    controls: &[ControlSignal],
    thetas: &[f64],
) -> Result<f64, VerifyError> {
    let runs = controls
        .par_iter()
        .map(|u| order_check(sys, table, u, thetas))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(runs.iter().flat_map(|r| r.residuals.iter().copied()).fold(0.0, f64::max))
}

/// Runs the order check on `sys` against its series truncated at
/// `table.max_order()`, plus the moment sanity checks, and optionally compares
/// each named approximating system with its own series.
pub fn verify_system(
    sys: &ControlSystem,
    table: &SeriesTable,
    approximations: &[(String, ControlSystem, SeriesTable)],
    options: &VerifyOptions,
) -> Result<VerificationReport, VerifyError> {
    let controls = options.random_controls();
    let runs = controls
        .par_iter()
        .map(|u| order_check(sys, table, u, &options.thetas))
        .collect::<Result<Vec<_>, _>>()?;
    let slope_threshold = table.max_order() as f64 + 1.0 - SLOPE_MARGIN;
    let slopes: Vec<f64> = runs.iter().filter_map(|r| r.slope).collect();
    let min_slope = slopes.iter().copied().reduce(f64::min);
    // a run without a slope has residuals at noise level, which is no failure
    let slope_passed = slopes.iter().all(|&s| s >= slope_threshold);

    let order = table.max_order().min(6);
    let mut shuffle_error: f64 = 0.0;
    for u in &controls {
        for theta in [0.05, 0.1] {
            shuffle_error = shuffle_error.max(shuffle_identity_error(u, theta, order)?);
        }
    }
    let step_change = controls
        .iter()
        .map(|u| step_halving_change(u, 0.1, order))
        .try_fold(0.0, |acc: f64, r| r.map(|c| acc.max(c)))?;

    let mut approximation_residuals = BTreeMap::new();
    for (name, approx, approx_table) in approximations {
        approximation_residuals.insert(name.clone(), exact_series_residual(approx, approx_table, &controls, &options.thetas)?);
    }
    Ok(VerificationReport {
        series_order: table.max_order(),
        slope_threshold,
        runs,
        min_slope,
        slope_passed,
        shuffle_error,
        shuffle_passed: shuffle_error <= SHUFFLE_TOLERANCE,
        step_change,
        step_passed: step_change < STEP_TOLERANCE,
        approximation_passed: approximation_residuals.values().all(|&r| r <= EXACT_TOLERANCE),
        approximation_residuals,
    })
}
