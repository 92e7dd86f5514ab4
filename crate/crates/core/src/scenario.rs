//! Packaged default scenarios: oracle construction, decision bounds,
//! starting points, reference baseline plans and the vaccine supply
//! schedule, shared by the CLI and the experiment suites.

use crate::codec::{self, BoxBounds};
use crate::cost::{CostTable, CovidCostTable, EpiOracle, H1N1CostTable, Mode};
use crate::dspsa::ThetaVec;
use crate::error::Result;
use crate::sim::{ContactStructure, EpiRates, PopulationConfig};

/// Default H1N1 vaccine supply: no doses for the first four weeks while
/// production ramps up, then 400 doses per day through day 119.
pub fn h1n1_default_supply(days: usize) -> Vec<u64> {
    let mut supply = vec![0u64; days];
    for (d, v) in supply.iter_mut().enumerate() {
        if (30..120).contains(&(d + 1)) {
            *v = 400;
        }
    }
    supply
}

/// A ready-to-run scenario: the oracle plus everything the optimizer
/// needs around it.
pub struct Scenario {
    pub mode: Mode,
    pub oracle: EpiOracle,
    pub bounds: BoxBounds,
    pub theta0: ThetaVec,
    /// Reference plans from the comparison literature, evaluated
    /// against the optimizer's terminal plan.
    pub baselines: Vec<(String, Vec<i64>)>,
}

/// Influenza scenario: ~100k-person community, 175-day horizon,
/// R0 = 1.3, null-intervention start.
pub fn h1n1_default() -> Result<Scenario> {
    let population = PopulationConfig::h1n1_default();
    let contacts = ContactStructure::layered_default(&population);
    let supply = h1n1_default_supply(population.sim_length_days as usize);
    let horizon_weeks = population.sim_length_days / 7;
    let oracle = EpiOracle::new(
        Mode::H1n1,
        population,
        EpiRates::h1n1_default(),
        contacts,
        CostTable::H1n1(H1N1CostTable::default()),
        supply,
    )?;
    Ok(Scenario {
        mode: Mode::H1n1,
        oracle,
        bounds: codec::h1n1_bounds(horizon_weeks),
        theta0: ThetaVec::initial(vec![0; codec::H1N1_DIM])?,
        baselines: h1n1_baselines(),
    })
}

/// Literature comparison plans for the influenza scenario:
/// antivirals-plus-two-week-closure, vaccinating school-age children
/// and 30-to-40-year-olds, and blanket 60% / 40% coverage.
pub fn h1n1_baselines() -> Vec<(String, Vec<i64>)> {
    vec![
        ("hhtap_2wk_closure".to_string(), vec![0, 0, 0, 0, 0, 0, 3, 2]),
        ("vax_school_age_and_30_40".to_string(), vec![10, 0, 3, 0, 2, 0, 0, 0]),
        ("vax_60_percent".to_string(), vec![6, 1, 1, 1, 1, 1, 0, 0]),
        ("vax_40_percent".to_string(), vec![4, 1, 1, 1, 1, 1, 0, 0]),
    ]
}

/// COVID scenario: 100k population, 60-day horizon, R0 = 2.5,
/// null-window start.
pub fn covid_default() -> Result<Scenario> {
    let population = PopulationConfig::covid_default();
    let contacts = ContactStructure::layered_default(&population);
    let sim_length = population.sim_length_days;
    let oracle = EpiOracle::new(
        Mode::Covid,
        population,
        EpiRates::covid_default(),
        contacts,
        CostTable::Covid(CovidCostTable::default()),
        vec![],
    )?;
    let theta0 = ThetaVec::initial(codec::encode_covid(&codec::CovidPlan::null())?)?;
    Ok(Scenario {
        mode: Mode::Covid,
        oracle,
        bounds: codec::covid_bounds(sim_length),
        theta0,
        baselines: covid_baselines(sim_length as i64),
    })
}

/// Comparison plans for the COVID scenario: do-nothing, full-horizon
/// maximal-intensity everything, distancing alone and testing alone.
pub fn covid_baselines(sim_length: i64) -> Vec<(String, Vec<i64>)> {
    let l = sim_length;
    vec![
        ("no_intervention".to_string(), vec![1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2, 0]),
        (
            "everything_maximal".to_string(),
            vec![1, l, 10, 1, l, 10, 1, l, 10, 1, l, 10],
        ),
        ("distancing_only".to_string(), vec![1, l, 10, 1, 2, 0, 1, 2, 0, 1, 2, 0]),
        ("testing_only".to_string(), vec![1, 2, 0, 1, 2, 0, 1, l, 10, 1, 2, 0]),
    ]
}
