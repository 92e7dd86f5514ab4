//! Desk-scale stochastic epidemic simulator.
//!
//! A chain-binomial SEIR over five age groups and four contact layers
//! (household, school, work, community), with interventions applied as
//! layer scalings, compartment moves and dose allocation. It is the
//! noisy half of the loss oracle: deterministic given `(inputs, seed)`
//! and cheap enough to evaluate hundreds of thousands of times.
//!
//! This is a cell-level stand-in for individual-level simulators, not a
//! replica of one; transmission parameters are calibrated so the
//! next-generation matrix of the configured contact structure has
//! spectral radius equal to the requested reproduction number.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::codec::{AntiviralPolicy, CovidPlan, H1N1Plan};
use crate::error::{Error, Result};

/// Age groups: pre-school, school-age, young adults (19-29), older
/// adults (30-64), elderly.
pub const N_AGE: usize = 5;
/// Days an individual stays isolated or quarantined once moved there.
pub const ISOLATION_DAYS: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub total_population: u64,
    pub age_fractions: [f64; N_AGE],
    pub high_risk_fraction_by_age: [f64; N_AGE],
    pub households_count: u64,
    pub students_count: u64,
    pub communities_count: u64,
    pub r0: f64,
    pub mean_latent_days: f64,
    pub mean_infectious_days: f64,
    pub sim_length_days: u32,
    pub initial_infected: u64,
    /// Fraction of every group that starts fully immune (used for
    /// herd-immunity experiments).
    #[serde(default)]
    pub pre_immune_fraction: f64,
}

impl PopulationConfig {
    /// Influenza scenario: 99,617 people, 21,976 students, R0 = 1.3,
    /// 175-day horizon.
    pub fn h1n1_default() -> Self {
        PopulationConfig {
            total_population: 99_617,
            age_fractions: [0.070, 0.221, 0.170, 0.450, 0.089],
            high_risk_fraction_by_age: [0.05, 0.07, 0.10, 0.16, 0.45],
            households_count: 38_314,
            students_count: 21_976,
            communities_count: 50,
            r0: 1.3,
            mean_latent_days: 1.9,
            mean_infectious_days: 4.1,
            sim_length_days: 175,
            initial_infected: 20,
            pre_immune_fraction: 0.0,
        }
    }

    /// COVID scenario: 100,000 people, 60-day horizon, 50 initial
    /// infections, mean 4.6 days from exposure to infectiousness.
    pub fn covid_default() -> Self {
        PopulationConfig {
            total_population: 100_000,
            age_fractions: [0.060, 0.170, 0.150, 0.460, 0.160],
            high_risk_fraction_by_age: [0.03, 0.05, 0.08, 0.18, 0.50],
            households_count: 38_462,
            students_count: 17_000,
            communities_count: 50,
            r0: 2.5,
            mean_latent_days: 4.6,
            mean_infectious_days: 8.0,
            sim_length_days: 60,
            initial_infected: 50,
            pre_immune_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s: f64 = self.age_fractions.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("age fractions sum to {s}, expected 1")));
        }
        for f in self
            .high_risk_fraction_by_age
            .iter()
            .chain(std::iter::once(&self.pre_immune_fraction))
        {
            if !(0.0..=1.0).contains(f) {
                return Err(Error::Config(format!("fraction {f} outside [0, 1]")));
            }
        }
        if !(self.r0 > 0.0) {
            return Err(Error::Config("R0 must be positive".into()));
        }
        if !(self.mean_latent_days > 0.0 && self.mean_infectious_days > 0.0) {
            return Err(Error::Config("mean stage durations must be positive".into()));
        }
        let school_pop = self.group_populations()[1];
        if self.students_count > school_pop {
            return Err(Error::Config(format!(
                "students ({}) exceed school-age population ({school_pop})",
                self.students_count
            )));
        }
        if self.sim_length_days == 0 {
            return Err(Error::Config("simulation length must be >= 1 day".into()));
        }
        Ok(())
    }

    /// Integer group sizes matching the fractions to within rounding
    /// (largest-remainder allocation, exact total).
    pub fn group_populations(&self) -> [u64; N_AGE] {
        largest_remainder(self.total_population, &self.age_fractions)
    }

    pub fn mean_household_size(&self) -> f64 {
        self.total_population as f64 / self.households_count.max(1) as f64
    }
}

fn largest_remainder(total: u64, weights: &[f64; N_AGE]) -> [u64; N_AGE] {
    let wsum: f64 = weights.iter().sum();
    let mut out = [0u64; N_AGE];
    let mut rem: Vec<(usize, f64)> = Vec::with_capacity(N_AGE);
    let mut assigned = 0u64;
    for (i, w) in weights.iter().enumerate() {
        let exact = total as f64 * w / wsum.max(f64::MIN_POSITIVE);
        out[i] = exact.floor() as u64;
        assigned += out[i];
        rem.push((i, exact - exact.floor()));
    }
    rem.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut left = total - assigned;
    for (i, _) in rem {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out
}

/// Per-layer 5x5 contact-rate matrices. Entry `[i][j]` is the daily
/// contact rate of an individual in group `i` with members of group
/// `j`; all layers satisfy reciprocity `N_i c_ij = N_j c_ji`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactStructure {
    pub household: [[f64; N_AGE]; N_AGE],
    pub school: [[f64; N_AGE]; N_AGE],
    pub work: [[f64; N_AGE]; N_AGE],
    pub community: [[f64; N_AGE]; N_AGE],
}

fn proportionate_layer(activity: [f64; N_AGE], weight: f64, pops: &[u64; N_AGE]) -> [[f64; N_AGE]; N_AGE] {
    let denom: f64 = activity
        .iter()
        .zip(pops)
        .map(|(a, n)| a * *n as f64)
        .sum();
    let mut m = [[0.0; N_AGE]; N_AGE];
    if denom == 0.0 {
        return m;
    }
    for i in 0..N_AGE {
        for j in 0..N_AGE {
            m[i][j] = weight * activity[i] * activity[j] * pops[j] as f64 / denom;
        }
    }
    m
}

impl ContactStructure {
    /// Default layered structure. The school layer is concentrated on
    /// the school-age group, which makes school-age vaccination and
    /// school closure the structurally strongest levers.
    pub fn layered_default(config: &PopulationConfig) -> Self {
        let pops = config.group_populations();
        ContactStructure {
            household: proportionate_layer([1.0, 1.0, 1.0, 1.0, 1.0], 4.0, &pops),
            school: proportionate_layer([0.2, 1.0, 0.05, 0.05, 0.0], 11.0, &pops),
            work: proportionate_layer([0.0, 0.0, 1.0, 1.0, 0.05], 3.0, &pops),
            community: proportionate_layer([1.0, 1.0, 1.0, 1.0, 1.0], 3.0, &pops),
        }
    }

    /// Homogeneous mixing in a single (community) layer; used by the
    /// analytic cross-checks.
    pub fn homogeneous(config: &PopulationConfig) -> Self {
        let pops = config.group_populations();
        let zero = [[0.0; N_AGE]; N_AGE];
        ContactStructure {
            household: zero,
            school: zero,
            work: zero,
            community: proportionate_layer([1.0; N_AGE], 1.0, &pops),
        }
    }

    pub fn total(&self) -> [[f64; N_AGE]; N_AGE] {
        let mut m = [[0.0; N_AGE]; N_AGE];
        for i in 0..N_AGE {
            for j in 0..N_AGE {
                m[i][j] = self.household[i][j] + self.school[i][j] + self.work[i][j] + self.community[i][j];
            }
        }
        m
    }
}

/// Outcome and protection rates. The hospitalization, fatality and
/// medication tables cite external sources not reproduced here; the
/// values shipped as defaults are placeholders the user should replace
/// with authoritative data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiRates {
    pub symptomatic_fraction: f64,
    /// `[age][risk]` with risk index 0 = low, 1 = high.
    pub hospitalization_ratio_by_age_risk: [[f64; 2]; N_AGE],
    pub icu_fraction_of_hospitalized: f64,
    pub fatality_ratio_by_age_risk: [[f64; 2]; N_AGE],
    pub vaccine_efficacy: f64,
    pub antiviral_transmission_reduction: f64,
    /// Fraction of symptomatic cases ascertained for antiviral
    /// treatment; no authoritative default exists, this is a knob.
    pub ascertainment_rate: f64,
}

impl EpiRates {
    pub fn h1n1_default() -> Self {
        EpiRates {
            symptomatic_fraction: 0.67,
            hospitalization_ratio_by_age_risk: [
                [0.006, 0.030],
                [0.002, 0.010],
                [0.003, 0.015],
                [0.010, 0.050],
                [0.030, 0.150],
            ],
            icu_fraction_of_hospitalized: 0.10,
            fatality_ratio_by_age_risk: [
                [0.0002, 0.0010],
                [0.0001, 0.0005],
                [0.0005, 0.0025],
                [0.0020, 0.0100],
                [0.0100, 0.0500],
            ],
            vaccine_efficacy: 0.8,
            antiviral_transmission_reduction: 0.6,
            ascertainment_rate: 0.3,
        }
    }

    pub fn covid_default() -> Self {
        EpiRates {
            symptomatic_fraction: 0.67,
            hospitalization_ratio_by_age_risk: [
                [0.001, 0.005],
                [0.001, 0.005],
                [0.010, 0.030],
                [0.030, 0.100],
                [0.100, 0.300],
            ],
            icu_fraction_of_hospitalized: 0.10,
            fatality_ratio_by_age_risk: [
                [0.0001, 0.0005],
                [0.0001, 0.0005],
                [0.0010, 0.0050],
                [0.0050, 0.0250],
                [0.0300, 0.1200],
            ],
            vaccine_efficacy: 0.0,
            antiviral_transmission_reduction: 0.0,
            ascertainment_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = vec![
            self.symptomatic_fraction,
            self.icu_fraction_of_hospitalized,
            self.vaccine_efficacy,
            self.antiviral_transmission_reduction,
            self.ascertainment_rate,
        ];
        for row in self
            .hospitalization_ratio_by_age_risk
            .iter()
            .chain(self.fatality_ratio_by_age_risk.iter())
        {
            all.extend_from_slice(row);
        }
        for v in all {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("rate {v} outside [0, 1]")));
            }
        }
        for (age, row) in self.fatality_ratio_by_age_risk.iter().enumerate() {
            if row[1] < row[0] {
                return Err(Error::Config(format!(
                    "high-risk fatality below low-risk for age group {age}"
                )));
            }
        }
        Ok(())
    }
}

/// Either flavor of decoded intervention plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionPlan {
    H1n1(H1N1Plan),
    Covid(CovidPlan),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub symptomatic_by_age_risk: [[u64; 2]; N_AGE],
    pub deaths_by_age_risk: [[u64; 2]; N_AGE],
    pub hospitalized_count: u64,
    pub icu_count: u64,
    pub vaccines_used: u64,
    pub antiviral_courses_used: u64,
    pub tests_performed: u64,
    pub traced_quarantines: u64,
    pub per_day_new_infections: Vec<u64>,
}

impl OutcomeSummary {
    pub fn total_symptomatic(&self) -> u64 {
        self.symptomatic_by_age_risk.iter().flatten().sum()
    }

    pub fn total_deaths(&self) -> u64 {
        self.deaths_by_age_risk.iter().flatten().sum()
    }

    pub fn cumulative_infections(&self) -> u64 {
        self.per_day_new_infections.iter().sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct GroupState {
    /// Susceptible, never dosed.
    pub s: u64,
    /// Susceptible, dosed but unprotected.
    pub s_dosed: u64,
    /// Susceptible, quarantined (household exposure only).
    pub s_quarantined: u64,
    /// Immune through vaccination or pre-existing immunity.
    pub v: u64,
    pub e: u64,
    /// Infectious, circulating.
    pub i: u64,
    /// Infectious, isolated (household contacts only).
    pub i_isolated: u64,
    pub r: u64,
}

impl GroupState {
    pub fn total(&self) -> u64 {
        self.s + self.s_dosed + self.s_quarantined + self.v + self.e + self.i + self.i_isolated + self.r
    }
}

#[derive(Debug, Clone)]
pub struct PopulationState {
    pub groups: [GroupState; N_AGE],
    pub group_populations: [u64; N_AGE],
    /// Doses administered so far, per group (caps the F fraction).
    pub doses_given: [u64; N_AGE],
    /// Quarantine releases scheduled per absolute day.
    quarantine_release: Vec<[u64; N_AGE]>,
    /// Households already covered by household-wide antiviral
    /// treatment (the HHTAP100 cap counts these).
    pub households_treated: u64,
    pub beta: f64,
}

impl PopulationState {
    pub fn total(&self) -> u64 {
        self.groups.iter().map(GroupState::total).sum()
    }
}

/// Spectral radius of the next-generation matrix scaled by beta = 1 and
/// unit infectious period, via power iteration.
fn ngm_spectral_radius(contacts: &[[f64; N_AGE]; N_AGE], pops: &[u64; N_AGE]) -> f64 {
    let mut m = [[0.0; N_AGE]; N_AGE];
    for i in 0..N_AGE {
        for j in 0..N_AGE {
            if pops[j] > 0 {
                m[i][j] = contacts[i][j] * pops[i] as f64 / pops[j] as f64;
            }
        }
    }
    let mut v = [1.0f64; N_AGE];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut w = [0.0f64; N_AGE];
        for i in 0..N_AGE {
            for j in 0..N_AGE {
                w[i] += m[i][j] * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        for i in 0..N_AGE {
            v[i] = w[i] / norm;
        }
    }
    lambda
}

/// Transmission coefficient such that the next-generation matrix of the
/// given contact structure has spectral radius R0. For homogeneous
/// mixing this reduces to `beta = R0 / mean_infectious_days`.
pub fn calibrate_beta(config: &PopulationConfig, contacts: &ContactStructure) -> Result<f64> {
    let pops = config.group_populations();
    let rho = ngm_spectral_radius(&contacts.total(), &pops);
    if rho <= 0.0 {
        return Err(Error::Config("contact structure has zero spectral radius".into()));
    }
    Ok(config.r0 / (config.mean_infectious_days * rho))
}

/// Deterministic initial compartment allocation: group sizes by largest
/// remainder, initial infections proportional across groups,
/// `pre_immune_fraction` of each group immune.
pub fn build_population(config: &PopulationConfig, contacts: &ContactStructure, _seed: u64) -> Result<PopulationState> {
    config.validate()?;
    let pops = config.group_populations();
    let seeds = largest_remainder(config.initial_infected, &config.age_fractions);
    let mut groups: [GroupState; N_AGE] = Default::default();
    for g in 0..N_AGE {
        let n = pops[g];
        let immune = ((n as f64) * config.pre_immune_fraction).round() as u64;
        let infected = seeds[g].min(n - immune.min(n));
        let immune = immune.min(n - infected);
        groups[g] = GroupState {
            s: n - immune - infected,
            v: immune,
            i: infected,
            ..Default::default()
        };
    }
    Ok(PopulationState {
        groups,
        group_populations: pops,
        doses_given: [0; N_AGE],
        quarantine_release: vec![[0; N_AGE]; config.sim_length_days as usize + ISOLATION_DAYS + 2],
        households_treated: 0,
        beta: calibrate_beta(config, contacts)?,
    })
}

/// Contact structure in effect on `day` (1-based) under the plan.
///
/// Influenza school closure zeroes the school layer during weeks
/// 1..S. COVID distancing scales community and work layers linearly in
/// intensity (intensity 100 means zero contacts in those layers, so the
/// 38% anchor maps to a 38% reduction); school closure scales the
/// school layer the same way.
pub fn effective_contacts(day: i64, plan: &InterventionPlan, base: &ContactStructure) -> ContactStructure {
    let mut out = base.clone();
    match plan {
        InterventionPlan::H1n1(p) => {
            if day >= 1 && day <= 7 * p.school_closure_weeks as i64 {
                out.school = [[0.0; N_AGE]; N_AGE];
            }
        }
        InterventionPlan::Covid(p) => {
            if p.distancing.contains_day(day) {
                let scale = 1.0 - p.distancing.intensity_percent as f64 / 100.0;
                scale_matrix(&mut out.community, scale);
                scale_matrix(&mut out.work, scale);
            }
            if p.school_closure.contains_day(day) {
                let scale = 1.0 - p.school_closure.intensity_percent as f64 / 100.0;
                scale_matrix(&mut out.school, scale);
            }
        }
    }
    out
}

fn scale_matrix(m: &mut [[f64; N_AGE]; N_AGE], scale: f64) {
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
}

fn binom(rng: &mut impl Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Per-day bookkeeping shared between `step_day` and the outer loop.
#[derive(Debug, Clone, Default)]
pub struct DayOutcome {
    pub new_infections: u64,
    pub new_symptomatic_by_age_risk: [[u64; 2]; N_AGE],
    pub tests_performed: u64,
    pub detections: u64,
    pub traced_quarantines: u64,
    pub antiviral_courses: u64,
}

/// Advance the epidemic state by one day.
///
/// New infections per group are binomial with per-susceptible
/// probability `1 - exp(-lambda)`, lambda summed over layers.
/// Isolated infectious individuals contribute through the household
/// layer only; quarantined susceptibles are exposed through the
/// household layer only.
pub fn step_day(
    state: &mut PopulationState,
    config: &PopulationConfig,
    rates: &EpiRates,
    contacts: &ContactStructure,
    plan: &InterventionPlan,
    day: i64,
    rng: &mut impl Rng,
) -> DayOutcome {
    let mut out = DayOutcome::default();
    let beta = state.beta;
    let pops = state.group_populations;

    // Antiviral transmission factors (influenza only).
    let (treated_factor, hh_prophylaxis) = match plan {
        InterventionPlan::H1n1(p) => {
            let asc = rates.ascertainment_rate;
            let red = rates.antiviral_transmission_reduction;
            let factor = match p.antiviral_policy {
                AntiviralPolicy::None => 1.0,
                _ => 1.0 - asc * red,
            };
            let hh = match p.antiviral_policy {
                AntiviralPolicy::Hhtap => 1.0 - asc * red,
                AntiviralPolicy::Hhtap100 if state.households_treated < 100 => 1.0 - asc * red,
                _ => 1.0,
            };
            (factor, hh)
        }
        InterventionPlan::Covid(_) => (1.0, 1.0),
    };

    // Forces of infection, household layer tracked separately for the
    // quarantined.
    let mut lambda = [0.0f64; N_AGE];
    let mut lambda_hh = [0.0f64; N_AGE];
    for i in 0..N_AGE {
        for j in 0..N_AGE {
            if pops[j] == 0 {
                continue;
            }
            let circulating = state.groups[j].i as f64 * treated_factor;
            let isolated = state.groups[j].i_isolated as f64 * treated_factor;
            let hh = beta * contacts.household[i][j] * hh_prophylaxis * (circulating + isolated)
                / pops[j] as f64;
            let other = beta
                * (contacts.school[i][j] + contacts.work[i][j] + contacts.community[i][j])
                * circulating
                / pops[j] as f64;
            lambda_hh[i] += hh;
            lambda[i] += hh + other;
        }
    }

    let p_latent = 1.0 / config.mean_latent_days;
    let p_recover = 1.0 / config.mean_infectious_days;

    // Quarantine releases scheduled for today.
    if (day as usize) < state.quarantine_release.len() {
        let release = state.quarantine_release[day as usize];
        for g in 0..N_AGE {
            let n = release[g].min(state.groups[g].s_quarantined);
            state.groups[g].s_quarantined -= n;
            state.groups[g].s += n;
        }
        state.quarantine_release[day as usize] = [0; N_AGE];
    }

    for g in 0..N_AGE {
        let p_inf = 1.0 - (-lambda[g]).exp();
        let p_inf_hh = 1.0 - (-lambda_hh[g]).exp();
        let grp = &mut state.groups[g];

        // All transition draws use start-of-day compartment sizes, so a
        // person entering a compartment today is not eligible to leave
        // it until tomorrow; otherwise infectious periods lose a day
        // and the effective reproduction number falls below R0.
        let inf_s = binom(rng, grp.s, p_inf);
        let inf_dosed = binom(rng, grp.s_dosed, p_inf);
        let inf_q = binom(rng, grp.s_quarantined, p_inf_hh);
        let becoming_infectious = binom(rng, grp.e, p_latent);
        let recover_i = binom(rng, grp.i, p_recover);
        let recover_iso = binom(rng, grp.i_isolated, p_recover);

        grp.s -= inf_s;
        grp.s_dosed -= inf_dosed;
        grp.s_quarantined -= inf_q;
        let new_inf = inf_s + inf_dosed + inf_q;
        grp.e = grp.e + new_inf - becoming_infectious;
        grp.i = grp.i + becoming_infectious - recover_i;
        grp.i_isolated -= recover_iso;
        grp.r += recover_i + recover_iso;
        out.new_infections += new_inf;

        // Symptomatic accounting at onset of infectiousness.
        let symptomatic = binom(rng, becoming_infectious, rates.symptomatic_fraction);
        let high_risk = binom(rng, symptomatic, config.high_risk_fraction_by_age[g]);
        out.new_symptomatic_by_age_risk[g][0] += symptomatic - high_risk;
        out.new_symptomatic_by_age_risk[g][1] += high_risk;
    }

    // Influenza antiviral course accounting at ascertainment.
    if let InterventionPlan::H1n1(p) = plan {
        if p.antiviral_policy != AntiviralPolicy::None {
            let new_symptomatic: u64 = out.new_symptomatic_by_age_risk.iter().flatten().sum();
            let ascertained = binom(rng, new_symptomatic, rates.ascertainment_rate);
            let hh_size = config.mean_household_size();
            out.antiviral_courses += match p.antiviral_policy {
                AntiviralPolicy::TreatmentOnly => ascertained,
                AntiviralPolicy::Hhtap => {
                    state.households_treated += ascertained;
                    (ascertained as f64 * hh_size).round() as u64
                }
                AntiviralPolicy::Hhtap100 => {
                    let capped = ascertained.min(100u64.saturating_sub(state.households_treated));
                    state.households_treated += capped;
                    // beyond the cap, index cases are still treated
                    (capped as f64 * hh_size).round() as u64 + (ascertained - capped)
                }
                AntiviralPolicy::None => 0,
            };
        }
    }

    // COVID testing and contact tracing.
    if let InterventionPlan::Covid(p) = plan {
        if p.testing.contains_day(day) && p.testing.intensity_percent > 0 {
            let rate = p.testing.intensity_percent as f64 / 100.0;
            let hh_size = config.mean_household_size();
            for g in 0..N_AGE {
                // symptomatic circulating infectious are the tested pool
                let tested = binom(rng, state.groups[g].i, rates.symptomatic_fraction * rate);
                out.tests_performed += tested;
                out.detections += tested;
                state.groups[g].i -= tested;
                state.groups[g].i_isolated += tested;

                if p.tracing.contains_day(day) && p.tracing.intensity_percent > 0 && tested > 0 {
                    let contacts_to_trace = (tested as f64 * (hh_size - 1.0).max(0.0)).round() as u64;
                    let traced = binom(rng, contacts_to_trace, p.tracing.intensity_percent as f64 / 100.0);
                    let moved = traced.min(state.groups[g].s);
                    state.groups[g].s -= moved;
                    state.groups[g].s_quarantined += moved;
                    let release_day = (day as usize + ISOLATION_DAYS).min(state.quarantine_release.len() - 1);
                    state.quarantine_release[release_day][g] += moved;
                    out.traced_quarantines += moved;
                }
            }
        }
    }

    out
}

/// Allocate today's vaccine doses to unvaccinated susceptibles of the
/// highest-priority groups first, capped at fraction F of each targeted
/// group. Priority 0 groups never receive vaccine.
pub fn apply_vaccination(
    state: &mut PopulationState,
    plan: &H1N1Plan,
    supply: &[u64],
    day: i64,
    efficacy: f64,
    rng: &mut impl Rng,
) -> u64 {
    let idx = (day - 1) as usize;
    let mut available = if idx < supply.len() { supply[idx] } else { 0 };
    if available == 0 || plan.vaccination_fraction <= 0.0 {
        return 0;
    }
    let mut order: Vec<usize> = (0..N_AGE).filter(|g| plan.priorities[*g] > 0).collect();
    order.sort_by(|a, b| plan.priorities[*b].cmp(&plan.priorities[*a]).then(a.cmp(b)));
    let mut used = 0;
    for g in order {
        if available == 0 {
            break;
        }
        let cap = (plan.vaccination_fraction * state.group_populations[g] as f64).floor() as u64;
        let cap_left = cap.saturating_sub(state.doses_given[g]);
        let doses = available.min(cap_left).min(state.groups[g].s);
        if doses == 0 {
            continue;
        }
        let protected = binom(rng, doses, efficacy);
        state.groups[g].s -= doses;
        state.groups[g].v += protected;
        state.groups[g].s_dosed += doses - protected;
        state.doses_given[g] += doses;
        available -= doses;
        used += doses;
    }
    used
}

/// Run the full simulation horizon and summarize outcomes.
pub fn simulate(
    plan: &InterventionPlan,
    config: &PopulationConfig,
    rates: &EpiRates,
    contacts: &ContactStructure,
    supply: &[u64],
    seed: u64,
) -> Result<OutcomeSummary> {
    rates.validate()?;
    let mut state = build_population(config, contacts, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome = OutcomeSummary::default();

    for day in 1..=config.sim_length_days as i64 {
        if let InterventionPlan::H1n1(p) = plan {
            outcome.vaccines_used +=
                apply_vaccination(&mut state, p, supply, day, rates.vaccine_efficacy, &mut rng);
        }
        let effective = effective_contacts(day, plan, contacts);
        let day_out = step_day(&mut state, config, rates, &effective, plan, day, &mut rng);
        outcome.per_day_new_infections.push(day_out.new_infections);
        for g in 0..N_AGE {
            for r in 0..2 {
                outcome.symptomatic_by_age_risk[g][r] += day_out.new_symptomatic_by_age_risk[g][r];
            }
        }
        outcome.tests_performed += day_out.tests_performed;
        outcome.traced_quarantines += day_out.traced_quarantines;
        outcome.antiviral_courses_used += day_out.antiviral_courses;
    }

    // Severity outcomes drawn from cumulative symptomatic counts.
    for g in 0..N_AGE {
        for r in 0..2 {
            let sym = outcome.symptomatic_by_age_risk[g][r];
            let hosp = binom(&mut rng, sym, rates.hospitalization_ratio_by_age_risk[g][r]);
            outcome.hospitalized_count += hosp;
            outcome.icu_count += binom(&mut rng, hosp, rates.icu_fraction_of_hospitalized);
            outcome.deaths_by_age_risk[g][r] = binom(&mut rng, sym, rates.fatality_ratio_by_age_risk[g][r]);
        }
    }

    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::PolicyWindow;

    #[test]
    fn population_allocation_matches_totals() {
        let config = PopulationConfig::h1n1_default();
        let contacts = ContactStructure::layered_default(&config);
        let state = build_population(&config, &contacts, 0).unwrap();
        assert_eq!(state.total(), 99_617);
        assert_eq!(state.group_populations.iter().sum::<u64>(), 99_617);

        let config = PopulationConfig::covid_default();
        let contacts = ContactStructure::layered_default(&config);
        let state = build_population(&config, &contacts, 0).unwrap();
        assert_eq!(state.groups.iter().map(|g| g.i).sum::<u64>(), 50);
    }

    #[test]
    fn degenerate_age_fractions_put_everyone_in_one_group() {
        let mut config = PopulationConfig::h1n1_default();
        config.age_fractions = [1.0, 0.0, 0.0, 0.0, 0.0];
        config.students_count = 0;
        let contacts = ContactStructure::homogeneous(&config);
        let state = build_population(&config, &contacts, 0).unwrap();
        assert_eq!(state.groups[0].total(), config.total_population);
    }

    #[test]
    fn infeasible_student_count_rejected() {
        let mut config = PopulationConfig::h1n1_default();
        config.students_count = config.total_population;
        assert!(config.validate().is_err());
    }

    #[test]
    fn homogeneous_beta_matches_closed_form() {
        let config = PopulationConfig::h1n1_default();
        let contacts = ContactStructure::homogeneous(&config);
        let beta = calibrate_beta(&config, &contacts).unwrap();
        let expect = config.r0 / config.mean_infectious_days;
        assert!((beta - expect).abs() / expect < 1e-9, "beta {beta} vs {expect}");
    }

    #[test]
    fn layered_layers_satisfy_reciprocity() {
        let config = PopulationConfig::h1n1_default();
        let contacts = ContactStructure::layered_default(&config);
        let pops = config.group_populations();
        for m in [&contacts.household, &contacts.school, &contacts.work, &contacts.community] {
            for i in 0..N_AGE {
                for j in 0..N_AGE {
                    let lhs = pops[i] as f64 * m[i][j];
                    let rhs = pops[j] as f64 * m[j][i];
                    assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn effective_contacts_covid_scaling() {
        let config = PopulationConfig::covid_default();
        let base = ContactStructure::layered_default(&config);
        let mut plan = CovidPlan::null();
        plan.distancing = PolicyWindow { start_day: 1, end_day: 30, intensity_percent: 100 };
        let plan = InterventionPlan::Covid(plan);
        let scaled = effective_contacts(10, &plan, &base);
        assert!(scaled.community.iter().flatten().all(|v| *v == 0.0));
        assert!(scaled.work.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(scaled.household, base.household);

        let null = InterventionPlan::Covid(CovidPlan::null());
        assert_eq!(effective_contacts(10, &null, &base), base);
    }

    #[test]
    fn effective_contacts_h1n1_school_closure() {
        let config = PopulationConfig::h1n1_default();
        let base = ContactStructure::layered_default(&config);
        let mut plan = H1N1Plan::null();
        plan.school_closure_weeks = 2;
        let plan = InterventionPlan::H1n1(plan);
        let wk2 = effective_contacts(10, &plan, &base);
        assert!(wk2.school.iter().flatten().all(|v| *v == 0.0));
        let wk3 = effective_contacts(15, &plan, &base);
        assert_eq!(wk3.school, base.school);
    }

    #[test]
    fn zero_infectious_is_absorbing() {
        let mut config = PopulationConfig::h1n1_default();
        config.initial_infected = 0;
        let contacts = ContactStructure::layered_default(&config);
        let plan = InterventionPlan::H1n1(H1N1Plan::null());
        let out = simulate(&plan, &config, &EpiRates::h1n1_default(), &contacts, &[], 1).unwrap();
        assert_eq!(out.cumulative_infections(), 0);
        assert_eq!(out.total_symptomatic(), 0);
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let config = PopulationConfig::covid_default();
        let contacts = ContactStructure::layered_default(&config);
        let plan = InterventionPlan::Covid(CovidPlan::null());
        let rates = EpiRates::covid_default();
        let a = simulate(&plan, &config, &rates, &contacts, &[], 42).unwrap();
        let b = simulate(&plan, &config, &rates, &contacts, &[], 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&plan, &config, &rates, &contacts, &[], 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn supercritical_epidemic_takes_off() {
        let config = PopulationConfig::h1n1_default();
        let contacts = ContactStructure::layered_default(&config);
        let plan = InterventionPlan::H1n1(H1N1Plan::null());
        let out = simulate(&plan, &config, &EpiRates::h1n1_default(), &contacts, &[], 7).unwrap();
        assert!(out.cumulative_infections() > 0);
    }

    #[test]
    fn population_is_conserved() {
        let config = PopulationConfig::covid_default();
        let contacts = ContactStructure::layered_default(&config);
        let mut state = build_population(&config, &contacts, 3).unwrap();
        let before = state.total();
        let mut plan = CovidPlan::null();
        plan.testing = PolicyWindow { start_day: 1, end_day: 60, intensity_percent: 100 };
        plan.tracing = PolicyWindow { start_day: 1, end_day: 60, intensity_percent: 100 };
        let plan = InterventionPlan::Covid(plan);
        let rates = EpiRates::covid_default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for day in 1..=60 {
            let eff = effective_contacts(day, &plan, &contacts);
            step_day(&mut state, &config, &rates, &eff, &plan, day, &mut rng);
            assert_eq!(state.total(), before, "day {day}");
        }
    }

    #[test]
    fn vaccination_priorities_and_caps() {
        let config = PopulationConfig::h1n1_default();
        let contacts = ContactStructure::layered_default(&config);
        let supply = vec![u32::MAX as u64; 175];

        // all priorities zero: no doses used
        let mut state = build_population(&config, &contacts, 1).unwrap();
        let plan = H1N1Plan::null();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(apply_vaccination(&mut state, &plan, &supply, 1, 0.8, &mut rng), 0);

        // school-age only, F = 1.0: group fully dosed, about 22.1% of the city
        let mut state = build_population(&config, &contacts, 1).unwrap();
        let plan = H1N1Plan {
            vaccination_fraction: 1.0,
            priorities: [0, 3, 0, 0, 0],
            antiviral_policy: AntiviralPolicy::None,
            school_closure_weeks: 0,
        };
        let used = apply_vaccination(&mut state, &plan, &supply, 1, 1.0, &mut rng);
        let share = used as f64 / config.total_population as f64;
        assert!((share - 0.221).abs() < 0.005, "share {share}");
        assert_eq!(state.groups[1].s, 0);

        // F = 0.5: at most half the group
        let mut state = build_population(&config, &contacts, 1).unwrap();
        let plan = H1N1Plan { vaccination_fraction: 0.5, ..plan };
        let used = apply_vaccination(&mut state, &plan, &supply, 1, 1.0, &mut rng);
        assert!(used <= state.group_populations[1] / 2 + 1);
    }

    #[test]
    fn deaths_do_not_exceed_symptomatic_and_icu_below_hospitalized() {
        let config = PopulationConfig::covid_default();
        let contacts = ContactStructure::layered_default(&config);
        let plan = InterventionPlan::Covid(CovidPlan::null());
        let rates = EpiRates::covid_default();
        for seed in 0..5 {
            let out = simulate(&plan, &config, &rates, &contacts, &[], seed).unwrap();
            for g in 0..N_AGE {
                for r in 0..2 {
                    assert!(out.deaths_by_age_risk[g][r] <= out.symptomatic_by_age_risk[g][r]);
                }
            }
            assert!(out.icu_count <= out.hospitalized_count);
        }
    }
}
