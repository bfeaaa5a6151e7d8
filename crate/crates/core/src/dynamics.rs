//! Deterministic (mean-field) evolution of a knowledge state.
//!
//! The discrete process adds one concept per step and removes `r_cleanup`
//! parasites:
//!
//! ```text
//! Δc_p = p_p - r_cleanup
//! Δc   = 1   - r_cleanup
//! ```
//!
//! [`integrate_in_c`] integrates `dc_p/dc` with `c` as independent variable,
//! which requires `c` to grow (`r_cleanup < 1`). [`integrate_in_time`] treats
//! both counters as a coupled system in `t` and also covers the regime where
//! cleanup outpaces growth. Both use fixed-step classical RK4.

use crate::error::{Error, Result};
use crate::model::{self, KnowledgeState, ModelParams, DEFAULT_SINGULAR_EPS};
use crate::scalar::Scalar;

/// What to do when a state update leaves `0 <= c_p <= c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClampPolicy {
    #[default]
    Clamp,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    /// Step in the concept domain.
    pub dc: T,
    pub max_steps: u64,
    pub clamp_policy: ClampPolicy,
    /// Stored samples are decimated to at most this many points.
    pub max_samples: usize,
}

impl<T: Scalar> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            dc: T::lit(0.25),
            max_steps: 10_000_000,
            clamp_policy: ClampPolicy::Clamp,
            max_samples: 10_000,
        }
    }
}

impl<T: Scalar> StepControl<T> {
    fn validate(&self) -> Result<()> {
        if !(self.dc > T::zero() && self.dc.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "dc = {} must be positive",
                self.dc
            )));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidConfig("max_steps must be at least 1".into()));
        }
        if self.max_samples < 2 {
            return Err(Error::InvalidConfig(
                "max_samples must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<T> {
    pub c: T,
    pub c_p: T,
    pub k: T,
    /// Elapsed time steps, absent for concept-domain runs.
    pub t: Option<T>,
}

impl<T: Scalar> Sample<T> {
    pub fn new(c: T, c_p: T, t: Option<T>) -> Self {
        Self {
            c,
            c_p,
            k: c_p / c,
            t,
        }
    }
}

/// Ordered samples of one run plus integrator diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    samples: Vec<Sample<T>>,
    steps: u64,
    clamp_count: u64,
}

impl<T: Scalar> Trajectory<T> {
    pub(crate) fn from_parts(samples: Vec<Sample<T>>, steps: u64, clamp_count: u64) -> Self {
        Self {
            samples,
            steps,
            clamp_count,
        }
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample<T>> {
        self.samples
    }

    pub fn first(&self) -> &Sample<T> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<T> {
        self.samples
            .last()
            .expect("trajectory holds at least one sample")
    }

    /// Number of integration (or simulation) steps taken.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// How many times `c_p` or an intermediate `k` had to be clamped.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_count
    }

    /// Linear interpolation of `k` at concept count `c`. Requires samples
    /// ordered by increasing `c`; `None` outside the covered range.
    pub fn k_at(&self, c: T) -> Option<T> {
        let s = &self.samples;
        if s.is_empty() || c < s[0].c || c > s[s.len() - 1].c {
            return None;
        }
        let hi = s.partition_point(|x| x.c < c);
        if hi == 0 {
            return Some(s[0].k);
        }
        let (a, b) = (&s[hi - 1], &s[hi]);
        let w = (c - a.c) / (b.c - a.c);
        Some(a.k + w * (b.k - a.k))
    }
}

/// One step of the discrete process with rates taken at `state`.
pub fn discrete_step<T: Scalar>(
    params: &ModelParams<T>,
    state: &KnowledgeState<T>,
    policy: ClampPolicy,
) -> Result<KnowledgeState<T>> {
    let mut clamps = 0;
    step_once(params, state, policy, &mut clamps, 1)
}

fn step_once<T: Scalar>(
    params: &ModelParams<T>,
    state: &KnowledgeState<T>,
    policy: ClampPolicy,
    clamps: &mut u64,
    step: u64,
) -> Result<KnowledgeState<T>> {
    let k = state.k();
    let r = model::cleanup(params, k);
    let c = state.c() + T::one() - r;
    if !(c > T::zero()) {
        return Err(Error::DegenerateState {
            c: c.to_f64_lossy(),
            step,
        });
    }
    let c_p = settle(
        c,
        state.c_p() + model::formation(params, k) - r,
        policy,
        clamps,
    )?;
    KnowledgeState::new(c, c_p)
}

/// Iterates [`discrete_step`] `steps` times, recording every state.
pub fn iterate_discrete<T: Scalar>(
    params: &ModelParams<T>,
    initial: &KnowledgeState<T>,
    steps: u64,
    policy: ClampPolicy,
) -> Result<Trajectory<T>> {
    let mut clamps = 0;
    let mut state = *initial;
    let mut samples = Vec::with_capacity(steps as usize + 1);
    samples.push(Sample::new(state.c(), state.c_p(), Some(T::zero())));
    for i in 1..=steps {
        state = step_once(params, &state, policy, &mut clamps, i)?;
        samples.push(Sample::new(state.c(), state.c_p(), Some(T::lit(i as f64))));
    }
    Ok(Trajectory::from_parts(samples, steps, clamps))
}

/// Integrates `dc_p/dc` from `initial.c` to `c_end` with fixed step `ctl.dc`.
///
/// Fails with [`Error::SingularDenominator`] as soon as `r_cleanup` reaches
/// `1 - 1e-9` anywhere along the path; past that point `c` stops growing and
/// the run has to be redone with [`integrate_in_time`].
pub fn integrate_in_c<T: Scalar>(
    params: &ModelParams<T>,
    initial: &KnowledgeState<T>,
    c_end: T,
    ctl: &StepControl<T>,
) -> Result<Trajectory<T>> {
    ctl.validate()?;
    let c0 = initial.c();
    if !(c_end > c0 && c_end.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "c_end = {c_end} must exceed the initial c = {c0}"
        )));
    }
    let n = ((c_end - c0) / ctl.dc)
        .ceil()
        .to_u64()
        .unwrap_or(u64::MAX)
        .max(1);
    if n > ctl.max_steps {
        return Err(Error::StepBudgetExceeded {
            max_steps: ctl.max_steps,
            c_end: c_end.to_f64_lossy(),
        });
    }
    let stride = decimation_stride(n, ctl.max_samples);
    let eps = T::lit(DEFAULT_SINGULAR_EPS);
    let mut clamps = 0u64;

    let rhs = |c: T, c_p: T, clamps: &mut u64| -> Result<T> {
        let k = clamp_unit(c_p / c, clamps);
        let r = model::cleanup(params, k);
        if r >= T::one() - eps {
            return Err(Error::SingularDenominator {
                k: k.to_f64_lossy(),
                r_cleanup: r.to_f64_lossy(),
                c: Some(c.to_f64_lossy()),
            });
        }
        Ok((model::formation(params, k) - r) / (T::one() - r))
    };

    let mut samples = Vec::with_capacity((n / stride) as usize + 2);
    samples.push(Sample::new(c0, initial.c_p(), None));
    let mut c_p = initial.c_p();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    for i in 0..n {
        let c = c0 + T::lit(i as f64) * ctl.dc;
        let c_next = if i + 1 == n {
            c_end
        } else {
            c0 + T::lit((i + 1) as f64) * ctl.dc
        };
        let h = c_next - c;
        let k1 = rhs(c, c_p, &mut clamps)?;
        let k2 = rhs(c + half * h, c_p + half * h * k1, &mut clamps)?;
        let k3 = rhs(c + half * h, c_p + half * h * k2, &mut clamps)?;
        let k4 = rhs(c_next, c_p + h * k3, &mut clamps)?;
        c_p = settle(
            c_next,
            c_p + h * (k1 + two * k2 + two * k3 + k4) / six,
            ctl.clamp_policy,
            &mut clamps,
        )?;
        if (i + 1) % stride == 0 || i + 1 == n {
            samples.push(Sample::new(c_next, c_p, None));
        }
    }
    Ok(Trajectory::from_parts(samples, n, clamps))
}

/// Integrates `dc/dt = 1 - r_cleanup`, `dc_p/dt = p_p - r_cleanup` to `t_end`
/// with fixed step `dt`. `ctl.dc` is ignored; budget, clamping and decimation apply.
///
/// Stops with [`Error::DegenerateState`] once `c` falls to 1.
pub fn integrate_in_time<T: Scalar>(
    params: &ModelParams<T>,
    initial: &KnowledgeState<T>,
    t_end: T,
    dt: T,
    ctl: &StepControl<T>,
) -> Result<Trajectory<T>> {
    ctl.validate()?;
    if !(t_end > T::zero() && t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "t_end = {t_end} must be positive"
        )));
    }
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("dt = {dt} must be positive")));
    }
    let n = (t_end / dt).ceil().to_u64().unwrap_or(u64::MAX).max(1);
    if n > ctl.max_steps {
        return Err(Error::StepBudgetExceeded {
            max_steps: ctl.max_steps,
            c_end: f64::NAN,
        });
    }
    let stride = decimation_stride(n, ctl.max_samples);
    let mut clamps = 0u64;

    let rhs = |c: T, c_p: T, clamps: &mut u64| -> (T, T) {
        let k = clamp_unit(c_p / c, clamps);
        let r = model::cleanup(params, k);
        (T::one() - r, model::formation(params, k) - r)
    };

    let mut samples = Vec::with_capacity((n / stride) as usize + 2);
    samples.push(Sample::new(initial.c(), initial.c_p(), Some(T::zero())));
    let (mut c, mut c_p) = (initial.c(), initial.c_p());
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let six = T::lit(6.0);
    for i in 0..n {
        let t = T::lit(i as f64) * dt;
        let t_next = if i + 1 == n {
            t_end
        } else {
            T::lit((i + 1) as f64) * dt
        };
        let h = t_next - t;
        let (a1, b1) = rhs(c, c_p, &mut clamps);
        let (a2, b2) = rhs(c + half * h * a1, c_p + half * h * b1, &mut clamps);
        let (a3, b3) = rhs(c + half * h * a2, c_p + half * h * b2, &mut clamps);
        let (a4, b4) = rhs(c + h * a3, c_p + h * b3, &mut clamps);
        c = c + h * (a1 + two * a2 + two * a3 + a4) / six;
        if !(c > T::one()) {
            return Err(Error::DegenerateState {
                c: c.to_f64_lossy(),
                step: i + 1,
            });
        }
        c_p = settle(
            c,
            c_p + h * (b1 + two * b2 + two * b3 + b4) / six,
            ctl.clamp_policy,
            &mut clamps,
        )?;
        if (i + 1) % stride == 0 || i + 1 == n {
            samples.push(Sample::new(c, c_p, Some(t_next)));
        }
    }
    Ok(Trajectory::from_parts(samples, n, clamps))
}

fn decimation_stride(steps: u64, max_samples: usize) -> u64 {
    // the initial sample takes one slot
    let slots = (max_samples as u64 - 1).max(1);
    steps.div_ceil(slots).max(1)
}

fn clamp_unit<T: Scalar>(k: T, clamps: &mut u64) -> T {
    if k < T::zero() {
        *clamps += 1;
        T::zero()
    } else if k > T::one() {
        *clamps += 1;
        T::one()
    } else {
        k
    }
}

fn settle<T: Scalar>(c: T, c_p: T, policy: ClampPolicy, clamps: &mut u64) -> Result<T> {
    if c_p >= T::zero() && c_p <= c {
        return Ok(c_p);
    }
    if policy == ClampPolicy::Error || c_p.is_nan() {
        return Err(Error::OutOfBounds {
            c: c.to_f64_lossy(),
            c_p: c_p.to_f64_lossy(),
        });
    }
    *clamps += 1;
    Ok(c_p.max(T::zero()).min(c))
}
