//! Fixed points of the contamination dynamics.
//!
//! Contamination grows where the stability polynomial `f(k)` is negative and
//! shrinks where it is positive, so the contamination a growing space settles
//! at is the first zero of `f` met when walking from the starting
//! contamination. From a clean start the walk goes up from `k = 0`; from a
//! saturated start it goes down from just below `k = 1`. `f(1) = 0` always, so
//! total contamination is itself stationary.
//!
//! Scans use a fixed grid of `scan_step` and refine a bracketing interval by
//! bisection.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::scalar::Scalar;

/// Default start of the descending scan, `1 - DESCENDING_START_GAP`.
pub const DESCENDING_START_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Growing,
    Shrinking,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    Ascending,
    Descending,
}

/// How a fixed point was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    /// No interior zero in the scan direction; `k_star` is 0 or 1.
    Boundary,
    /// Bisection of a sign change.
    SignChange,
    /// A scan point where `|f| <= tol` without a sign change (tangent zero).
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanControl<T> {
    pub scan_step: T,
    pub tol: T,
    pub max_iterations: u32,
}

impl<T: Scalar> Default for ScanControl<T> {
    fn default() -> Self {
        Self {
            scan_step: T::lit(1e-3),
            tol: T::lit(1e-9),
            max_iterations: 200,
        }
    }
}

impl<T: Scalar> ScanControl<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scan_step > T::zero() && self.scan_step <= T::lit(0.1)) {
            return Err(Error::InvalidConfig(format!(
                "scan_step = {} outside (0, 0.1]",
                self.scan_step
            )));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointResult<T> {
    pub k_star: T,
    pub bracket: (T, T),
    pub f_residual: T,
    pub iterations: u32,
    pub mode: ScanMode,
    pub kind: RootKind,
}

impl<T: Scalar> FixedPointResult<T> {
    fn boundary(params: &ModelParams<T>, k: T, mode: ScanMode) -> Self {
        Self {
            k_star: k,
            bracket: (k, k),
            f_residual: model::polynomial(params, k),
            iterations: 0,
            mode,
            kind: RootKind::Boundary,
        }
    }

    fn tangent(params: &ModelParams<T>, k: T, mode: ScanMode) -> Self {
        Self {
            kind: RootKind::Tangent,
            ..Self::boundary(params, k, mode)
        }
    }
}

pub fn classify<T: Scalar>(params: &ModelParams<T>, k: T, tol: T) -> Result<Growth> {
    let f = params.stability_polynomial(k)?;
    Ok(if f < -tol {
        Growth::Growing
    } else if f.abs() <= tol {
        Growth::Stationary
    } else {
        Growth::Shrinking
    })
}

/// First zero of `f` reached from a clean start.
///
/// Returns `k_star = 0` when `f(0) >= 0` and `k_star = 1` when `f` stays
/// negative on the whole scan grid below 1.
pub fn ascending_fixed_point<T: Scalar>(
    params: &ModelParams<T>,
    ctl: &ScanControl<T>,
) -> Result<FixedPointResult<T>> {
    ctl.validate()?;
    Ok(scan_upward(params, T::zero(), ctl))
}

fn scan_upward<T: Scalar>(
    params: &ModelParams<T>,
    from: T,
    ctl: &ScanControl<T>,
) -> FixedPointResult<T> {
    let mode = ScanMode::Ascending;
    let f = |k: T| model::polynomial(params, k);
    if f(from) >= T::zero() {
        return FixedPointResult::boundary(params, from, mode);
    }
    let mut lo = from;
    let mut i = 1u64;
    loop {
        let k = from + T::lit(i as f64) * ctl.scan_step;
        if k >= T::one() {
            return FixedPointResult::boundary(params, T::one(), mode);
        }
        let fk = f(k);
        if fk >= T::zero() {
            return bisect(params, lo, k, ctl, mode);
        }
        if fk.abs() <= ctl.tol {
            return FixedPointResult::tangent(params, k, mode);
        }
        lo = k;
        i += 1;
    }
}

/// Fixed point a trajectory starting at contamination `k0` settles at: the
/// first zero above `k0` while contamination grows there, otherwise the first
/// zero at or below it.
pub fn attracting_fixed_point<T: Scalar>(
    params: &ModelParams<T>,
    k0: T,
    ctl: &ScanControl<T>,
) -> Result<FixedPointResult<T>> {
    ctl.validate()?;
    let f0 = params.stability_polynomial(k0)?;
    if f0.abs() <= ctl.tol || k0 == T::one() {
        return Ok(FixedPointResult::tangent(params, k0, ScanMode::Ascending));
    }
    if f0 < T::zero() || k0 == T::zero() {
        Ok(scan_upward(params, k0, ctl))
    } else {
        descending_fixed_point(params, k0, ctl)
    }
}

/// First zero of `f` reached when descending from `k_start`.
///
/// Returns `k_star = 1` when `f(k_start) < 0`, i.e. contamination climbs back
/// to saturation, and `k_star = 0` when `f` stays non-negative down to 0.
pub fn descending_fixed_point<T: Scalar>(
    params: &ModelParams<T>,
    k_start: T,
    ctl: &ScanControl<T>,
) -> Result<FixedPointResult<T>> {
    ctl.validate()?;
    if !(k_start > T::zero() && k_start < T::one()) {
        return Err(Error::Domain {
            name: "k_start",
            value: k_start.to_f64_lossy(),
            expected: "(0, 1)",
        });
    }
    let mode = ScanMode::Descending;
    let f = |k: T| model::polynomial(params, k);
    if f(k_start) < T::zero() {
        return Ok(FixedPointResult::boundary(params, T::one(), mode));
    }
    let mut hi = k_start;
    let mut i = 1u64;
    loop {
        let k = (k_start - T::lit(i as f64) * ctl.scan_step).max(T::zero());
        let fk = f(k);
        if fk < T::zero() {
            return Ok(bisect(params, k, hi, ctl, mode));
        }
        if k == T::zero() {
            return Ok(FixedPointResult::boundary(params, T::zero(), mode));
        }
        if fk <= ctl.tol {
            return Ok(FixedPointResult::tangent(params, k, mode));
        }
        hi = k;
        i += 1;
    }
}

/// Bisects `[lo, hi]` with `f(lo) < 0 <= f(hi)` until the interval is no wider
/// than `tol` and the better endpoint has `|f| <= tol`, or the iteration cap
/// or floating point resolution is reached.
fn bisect<T: Scalar>(
    params: &ModelParams<T>,
    mut lo: T,
    mut hi: T,
    ctl: &ScanControl<T>,
    mode: ScanMode,
) -> FixedPointResult<T> {
    let f = |k: T| model::polynomial(params, k);
    let (mut f_lo, mut f_hi) = (f(lo), f(hi));
    let half = T::lit(0.5);
    let mut iterations = 0;
    let best = |lo: T, f_lo: T, hi: T, f_hi: T| {
        if f_lo.abs() < f_hi.abs() {
            (lo, f_lo)
        } else {
            (hi, f_hi)
        }
    };
    while iterations < ctl.max_iterations {
        let (_, f_best) = best(lo, f_lo, hi, f_hi);
        if hi - lo <= ctl.tol && f_best.abs() <= ctl.tol {
            break;
        }
        let mid = lo + half * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid < T::zero() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        iterations += 1;
    }
    let (k_star, f_residual) = best(lo, f_lo, hi, f_hi);
    FixedPointResult {
        k_star,
        bracket: (lo, hi),
        f_residual,
        iterations,
        mode,
        kind: RootKind::SignChange,
    }
}

/// Fixed points reached from a clean and from a near-saturated start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hysteresis<T> {
    pub k_up: T,
    pub k_down: T,
    pub bistable: bool,
    pub up: FixedPointResult<T>,
    pub down: FixedPointResult<T>,
}

pub fn hysteresis<T: Scalar>(
    params: &ModelParams<T>,
    ctl: &ScanControl<T>,
) -> Result<Hysteresis<T>> {
    let up = ascending_fixed_point(params, ctl)?;
    let down = descending_fixed_point(params, T::one() - T::lit(DESCENDING_START_GAP), ctl)?;
    Ok(Hysteresis {
        k_up: up.k_star,
        k_down: down.k_star,
        bistable: (up.k_star - down.k_star).abs() > T::lit(10.0) * ctl.tol,
        up,
        down,
    })
}

/// Starting contamination of a plateau sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartContamination<T> {
    Clean,
    /// Descending start at `1 - gap`.
    Contaminated {
        gap: T,
    },
}

impl<T: Scalar> StartContamination<T> {
    pub fn contaminated() -> Self {
        Self::Contaminated {
            gap: T::lit(DESCENDING_START_GAP),
        }
    }

    pub fn k0(&self) -> T {
        match *self {
            Self::Clean => T::zero(),
            Self::Contaminated { gap } => T::one() - gap,
        }
    }
}

/// Final contamination over an `(R_prag, R_comp)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid<T> {
    pub r_prag_axis: Vec<T>,
    pub r_comp_axis: Vec<T>,
    pub start: StartContamination<T>,
    /// Row-major, one row per `r_prag_axis` entry.
    pub values: Vec<T>,
    pub params_base: ModelParams<T>,
}

impl<T: Scalar> SweepGrid<T> {
    pub fn get(&self, prag_index: usize, comp_index: usize) -> T {
        self.values[prag_index * self.r_comp_axis.len() + comp_index]
    }

    /// `(r_prag, r_comp, k_final)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (T, T, T)> + '_ {
        let width = self.r_comp_axis.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.r_prag_axis[i / width], self.r_comp_axis[i % width], v))
    }
}

/// Runs the ascending (clean start) or descending (contaminated start) search
/// for every grid cell. Cells are independent and evaluated in parallel.
pub fn sweep_plateau<T: Scalar>(
    params_base: &ModelParams<T>,
    r_prag_axis: &[T],
    r_comp_axis: &[T],
    start: StartContamination<T>,
    ctl: &ScanControl<T>,
) -> Result<SweepGrid<T>> {
    check_axis("r_prag_axis", r_prag_axis)?;
    check_axis("r_comp_axis", r_comp_axis)?;
    ctl.validate()?;
    if let StartContamination::Contaminated { gap } = start {
        if !(gap > T::zero() && gap < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "descending start gap {gap} outside (0, 1)"
            )));
        }
    }
    let width = r_comp_axis.len();
    let values = (0..r_prag_axis.len() * width)
        .into_par_iter()
        .map(|i| {
            let cell =
                params_base.with_reduction(r_prag_axis[i / width], r_comp_axis[i % width])?;
            let fixed = match start {
                StartContamination::Clean => ascending_fixed_point(&cell, ctl)?,
                StartContamination::Contaminated { .. } => {
                    descending_fixed_point(&cell, start.k0(), ctl)?
                }
            };
            Ok(fixed.k_star)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(SweepGrid {
        r_prag_axis: r_prag_axis.to_vec(),
        r_comp_axis: r_comp_axis.to_vec(),
        start,
        values,
        params_base: *params_base,
    })
}

fn check_axis<T: Scalar>(name: &str, axis: &[T]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} is empty")));
    }
    if axis.iter().any(|&x| !(x >= T::zero() && x.is_finite())) {
        return Err(Error::InvalidConfig(format!(
            "{name} has negative or non-finite entries"
        )));
    }
    if axis.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidConfig(format!("{name} is not sorted")));
    }
    Ok(())
}
