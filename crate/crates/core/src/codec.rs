//! Box projection, window repair and the integer-vector plan codecs.
//!
//! Decision vectors are plain integer vectors; this module gives them
//! meaning. The influenza encoding is 8-dimensional: vaccination
//! fraction in tenths, five age-group priorities, antiviral policy and
//! school-closure weeks. The COVID encoding is 12-dimensional: four
//! policies (distancing, school closure, testing, tracing), each a
//! (start day, end day, intensity-in-tenths) triple, in that order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-coordinate box constraints with the upper-bound offset tau.
///
/// The projection maps values at or above the upper bound to
/// `upper - tau`; tau defaults to 0.5 so the hypercube corner above a
/// clipped coordinate is still a feasible integer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub tau: f64,
}

pub const DEFAULT_TAU: f64 = 0.5;

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, tau: f64) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Config("bound vectors differ in length".into()));
        }
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1), got {tau}")));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(Error::Config(format!(
                    "bounds for coordinate {i} must satisfy lower < upper ({l} vs {u})"
                )));
            }
        }
        Ok(BoxBounds { lower, upper, tau })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Closure form for handing to the optimizer.
    pub fn projection(&self) -> impl Fn(&[f64]) -> Vec<f64> + Sync + '_ {
        move |t: &[f64]| project_box(t, self)
    }
}

/// Piecewise box projection: lower clip below, identity inside,
/// `upper - tau` at or above the upper bound.
pub fn project_box(t: &[f64], bounds: &BoxBounds) -> Vec<f64> {
    assert_eq!(t.len(), bounds.dim(), "dimension mismatch in projection");
    t.iter()
        .enumerate()
        .map(|(i, x)| {
            let (l, u) = (bounds.lower[i], bounds.upper[i]);
            if *x < l {
                l
            } else if *x >= u {
                u - bounds.tau
            } else {
                *x
            }
        })
        .collect()
}

/// Index pairs of the (start, end) slots in the 12-dimensional COVID
/// layout, policy order distancing, school closure, testing, tracing.
pub const COVID_WINDOW_SLOTS: [(usize, usize); 4] = [(0, 1), (3, 4), (6, 7), (9, 10)];

pub const COVID_DIM: usize = 12;
pub const H1N1_DIM: usize = 8;

/// Whenever a policy's end day lands strictly before its start day,
/// move the start to one day before the end. End days never move.
pub fn repair_windows(theta: &mut [f64]) {
    assert_eq!(theta.len(), COVID_DIM, "window repair expects the 12-dim layout");
    for (start, end) in COVID_WINDOW_SLOTS {
        if theta[end] < theta[start] {
            theta[start] = theta[end] - 1.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AntiviralPolicy {
    None,
    TreatmentOnly,
    /// Household treatment, capped at the first 100 households.
    Hhtap100,
    /// Household members all get prescribed drugs when one member is
    /// ascertained.
    Hhtap,
}

impl AntiviralPolicy {
    pub fn from_slot(slot: i64) -> Result<Self> {
        match slot {
            0 => Ok(AntiviralPolicy::None),
            1 => Ok(AntiviralPolicy::TreatmentOnly),
            2 => Ok(AntiviralPolicy::Hhtap100),
            3 => Ok(AntiviralPolicy::Hhtap),
            other => Err(Error::Codec(format!("antiviral slot out of range: {other}"))),
        }
    }

    pub fn slot(self) -> i64 {
        match self {
            AntiviralPolicy::None => 0,
            AntiviralPolicy::TreatmentOnly => 1,
            AntiviralPolicy::Hhtap100 => 2,
            AntiviralPolicy::Hhtap => 3,
        }
    }
}

/// Influenza intervention plan. Priority slots are ordered
/// (pre-school, school-age, young adults 19-29, older adults 30-64,
/// elderly); 3 is the highest priority and 0 means no vaccination for
/// that group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1N1Plan {
    pub vaccination_fraction: f64,
    pub priorities: [u8; 5],
    pub antiviral_policy: AntiviralPolicy,
    pub school_closure_weeks: u32,
}

impl H1N1Plan {
    pub fn null() -> Self {
        H1N1Plan {
            vaccination_fraction: 0.0,
            priorities: [0; 5],
            antiviral_policy: AntiviralPolicy::None,
            school_closure_weeks: 0,
        }
    }
}

pub fn decode_h1n1(theta: &[i64]) -> Result<H1N1Plan> {
    if theta.len() != H1N1_DIM {
        return Err(Error::Codec(format!(
            "influenza vector must have 8 slots, got {}",
            theta.len()
        )));
    }
    let f_slot = theta[0];
    if !(0..=10).contains(&f_slot) {
        return Err(Error::Codec(format!("vaccination fraction slot out of [0, 10]: {f_slot}")));
    }
    let mut priorities = [0u8; 5];
    for (i, slot) in theta[1..6].iter().enumerate() {
        if !(0..=3).contains(slot) {
            return Err(Error::Codec(format!("priority slot {} out of [0, 3]: {slot}", i + 1)));
        }
        priorities[i] = *slot as u8;
    }
    let antiviral_policy = AntiviralPolicy::from_slot(theta[6])?;
    if theta[7] < 0 {
        return Err(Error::Codec(format!("school closure slot negative: {}", theta[7])));
    }
    Ok(H1N1Plan {
        vaccination_fraction: f_slot as f64 / 10.0,
        priorities,
        antiviral_policy,
        school_closure_weeks: theta[7] as u32,
    })
}

pub fn encode_h1n1(plan: &H1N1Plan) -> Result<Vec<i64>> {
    let scaled = plan.vaccination_fraction * 10.0;
    let f_slot = scaled.round();
    if (scaled - f_slot).abs() > 1e-9 || !(0.0..=10.0).contains(&f_slot) {
        return Err(Error::Codec(format!(
            "vaccination fraction {} is not a multiple of 0.1 in [0, 1]",
            plan.vaccination_fraction
        )));
    }
    let mut theta = vec![f_slot as i64];
    for p in plan.priorities {
        if p > 3 {
            return Err(Error::Codec(format!("priority {p} out of [0, 3]")));
        }
        theta.push(p as i64);
    }
    theta.push(plan.antiviral_policy.slot());
    theta.push(plan.school_closure_weeks as i64);
    Ok(theta)
}

/// One intervention window with a percentage intensity (multiple of 10).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyWindow {
    pub start_day: i64,
    pub end_day: i64,
    pub intensity_percent: u32,
}

impl PolicyWindow {
    pub fn duration_days(&self) -> i64 {
        (self.end_day - self.start_day + 1).max(0)
    }

    pub fn contains_day(&self, day: i64) -> bool {
        day >= self.start_day && day <= self.end_day
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovidPlan {
    pub distancing: PolicyWindow,
    pub school_closure: PolicyWindow,
    pub testing: PolicyWindow,
    pub tracing: PolicyWindow,
}

impl CovidPlan {
    pub fn null() -> Self {
        let w = PolicyWindow { start_day: 1, end_day: 2, intensity_percent: 0 };
        CovidPlan { distancing: w, school_closure: w, testing: w, tracing: w }
    }

    pub fn windows(&self) -> [&PolicyWindow; 4] {
        [&self.distancing, &self.school_closure, &self.testing, &self.tracing]
    }
}

fn decode_window(theta: &[i64], slots: (usize, usize), name: &str, sim_length: i64) -> Result<PolicyWindow> {
    let (si, ei) = slots;
    let (start, end, intensity) = (theta[si], theta[ei], theta[ei + 1]);
    if start < 1 || start > sim_length {
        return Err(Error::Codec(format!("{name} start day {start} outside [1, {sim_length}]")));
    }
    if end < 1 || end > sim_length {
        return Err(Error::Codec(format!("{name} end day {end} outside [1, {sim_length}]")));
    }
    if start > end {
        return Err(Error::Codec(format!(
            "{name} start day {start} after end day {end}; repair must run first"
        )));
    }
    if !(0..=10).contains(&intensity) {
        return Err(Error::Codec(format!("{name} intensity slot out of [0, 10]: {intensity}")));
    }
    Ok(PolicyWindow { start_day: start, end_day: end, intensity_percent: intensity as u32 * 10 })
}

pub fn decode_covid(theta: &[i64], sim_length: i64) -> Result<CovidPlan> {
    if theta.len() != COVID_DIM {
        return Err(Error::Codec(format!(
            "COVID vector must have 12 slots, got {}",
            theta.len()
        )));
    }
    Ok(CovidPlan {
        distancing: decode_window(theta, (0, 1), "distancing", sim_length)?,
        school_closure: decode_window(theta, (3, 4), "school closure", sim_length)?,
        testing: decode_window(theta, (6, 7), "testing", sim_length)?,
        tracing: decode_window(theta, (9, 10), "tracing", sim_length)?,
    })
}

fn encode_window(w: &PolicyWindow, name: &str, out: &mut Vec<i64>) -> Result<()> {
    if w.intensity_percent % 10 != 0 || w.intensity_percent > 100 {
        return Err(Error::Codec(format!(
            "{name} intensity {}% is not a multiple of 10 in [0, 100]",
            w.intensity_percent
        )));
    }
    out.push(w.start_day);
    out.push(w.end_day);
    out.push(w.intensity_percent as i64 / 10);
    Ok(())
}

pub fn encode_covid(plan: &CovidPlan) -> Result<Vec<i64>> {
    let mut theta = Vec::with_capacity(COVID_DIM);
    encode_window(&plan.distancing, "distancing", &mut theta)?;
    encode_window(&plan.school_closure, "school closure", &mut theta)?;
    encode_window(&plan.testing, "testing", &mut theta)?;
    encode_window(&plan.tracing, "tracing", &mut theta)?;
    Ok(theta)
}

/// Box for the 8-dim influenza vector; closure weeks are bounded by the
/// simulation horizon so the projection stays well-defined.
pub fn h1n1_bounds(horizon_weeks: u32) -> BoxBounds {
    let lower = vec![0.0; H1N1_DIM];
    let mut upper = vec![10.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0];
    upper.push(horizon_weeks as f64);
    BoxBounds::new(lower, upper, DEFAULT_TAU).expect("static bounds")
}

/// Box for the 12-dim COVID vector: day slots in [1, sim_length],
/// intensity slots in [0, 10].
pub fn covid_bounds(sim_length: u32) -> BoxBounds {
    let mut lower = Vec::with_capacity(COVID_DIM);
    let mut upper = Vec::with_capacity(COVID_DIM);
    for _ in 0..4 {
        lower.extend_from_slice(&[1.0, 1.0, 0.0]);
        upper.extend_from_slice(&[sim_length as f64, sim_length as f64, 10.0]);
    }
    BoxBounds::new(lower, upper, DEFAULT_TAU).expect("static bounds")
}
