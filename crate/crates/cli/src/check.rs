//! Property suites run against a configured scenario.

use std::fmt;

use kinpipe::kinetic::{cfl_timestep, run, step, Execution, GhostCells, KineticParams, SchemeContext, Walls};
use kinpipe::physics::{Mesh, State};
use kinpipe::scenarios::{steady_state_init, BoundaryCondition, BoundaryKind, Scenario, ScenarioError};

use crate::config::RunConfig;
use crate::simulate::SimulationError;

/// Still-water drift allowed after `WELL_BALANCE_STEPS` steps, relative to
/// `max A · c`.
pub const WELL_BALANCE_TOLERANCE: f64 = 1e-6;
pub const WELL_BALANCE_STEPS: usize = 100;
pub const FLUX_CONTINUITY_TOLERANCE: f64 = 1e-12;
pub const MASS_TOLERANCE: f64 = 1e-12;
pub const MASS_STEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub suites: Vec<SuiteOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(
                f,
                "[{}] {:<18} residual {:.3e} (tolerance {:.1e}) {}",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.residual,
                s.tolerance,
                s.detail
            )?;
        }
        Ok(())
    }
}

/// Fluid at rest with constant total head. Uses the upstream reservoir when
/// there is one, otherwise the section area at the first cell.
pub fn rest_state(scenario: &Scenario, mesh: &Mesh) -> Result<State, SimulationError> {
    let still = Scenario { initial_discharge: 0.0, ..scenario.clone() };
    if matches!(still.upstream.kind, BoundaryKind::Reservoir { .. }) {
        return Ok(steady_state_init(&still, mesh)?);
    }
    let (c, g) = (scenario.constants.c, scenario.constants.g);
    let z = mesh.z_cells();
    let total = g * z[0] + c * c * scenario.geometry.section.ln();
    let area = z.iter().map(|z| ((total - g * z) / (c * c)).exp()).collect();
    Ok(State::new(area, vec![0.0; mesh.len()], 0.0)?)
}

/// Steady state of the scenario, or fluid at rest when there is no reservoir
/// to anchor it.
fn initial_state(scenario: &Scenario, mesh: &Mesh) -> Result<State, SimulationError> {
    match steady_state_init(scenario, mesh) {
        Ok(s) => Ok(s),
        Err(ScenarioError::NoReservoir) => rest_state(scenario, mesh),
        Err(e) => Err(e.into()),
    }
}

/// Scenario with moving-water boundaries replaced by closed ends.
fn still_scenario(scenario: &Scenario) -> Scenario {
    let close = |bc: &BoundaryCondition| match bc.kind {
        BoundaryKind::PrescribedDischarge(_) => BoundaryCondition::new(BoundaryKind::Wall, bc.side),
        _ => *bc,
    };
    Scenario {
        initial_discharge: 0.0,
        upstream: close(&scenario.upstream),
        downstream: close(&scenario.downstream),
        ..scenario.clone()
    }
}

fn well_balance(config: &RunConfig, execution: Execution) -> Result<SuiteOutcome, SimulationError> {
    let scenario = still_scenario(&config.scenario);
    let mesh = scenario.mesh()?;
    let initial = rest_state(&scenario, &mesh)?;
    let c = scenario.constants.c;
    let ctx = SchemeContext::frictionless(&mesh, c, scenario.constants.g).with_execution(execution);
    let boundaries = scenario.boundaries();
    let mut state = initial.clone();
    for _ in 0..WELL_BALANCE_STEPS {
        let dt = cfl_timestep(&state, c, &mesh, config.cfl)?;
        state = step(&ctx, &state, dt, &boundaries)?;
    }
    let scale = initial.area.iter().cloned().fold(0.0, f64::max) * c;
    let residual = state.discharge.iter().fold(0.0f64, |m, q| m.max(q.abs())) / scale;
    let area_change = state
        .area
        .iter()
        .zip(&initial.area)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);
    Ok(SuiteOutcome {
        name: "well-balance",
        passed: residual <= WELL_BALANCE_TOLERANCE,
        residual,
        tolerance: WELL_BALANCE_TOLERANCE,
        detail: format!(
            "max |Q|/(A c) after {WELL_BALANCE_STEPS} still-water steps; max relative area change {area_change:.3e}"
        ),
    })
}

/// Runs the configured scenario once, tracking the smallest area and the
/// worst interface mass-flux mismatch (sampled every output stride).
fn positivity_and_flux(
    config: &RunConfig,
    execution: Execution,
) -> Result<(SuiteOutcome, SuiteOutcome), SimulationError> {
    let scenario = &config.scenario;
    let mesh = scenario.mesh()?;
    let initial = initial_state(scenario, &mesh)?;
    let c = scenario.constants.c;
    let ctx = SchemeContext::frictionless(&mesh, c, scenario.constants.g)
        .with_friction(scenario.friction_coefficient())
        .with_execution(execution);
    let params = KineticParams::new(config.cfl)?.with_execution(execution);
    let boundaries = scenario.boundaries();

    let mut min_area = initial.area.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut mismatch = 0.0f64;
    let mut ghost_error = None;
    let mut measure = |s: &State| match boundaries.ghost_cells(s, &mesh) {
        Ok(ghosts) => {
            let amax = s.area.iter().chain([&ghosts.0.area, &ghosts.1.area]).cloned().fold(0.0, f64::max);
            for f in ctx.all_interface_fluxes(s, ghosts) {
                let r = (f.minus.f_area - f.plus.f_area).abs() / (f.minus.f_area.abs() + amax * c);
                mismatch = mismatch.max(r);
            }
        }
        Err(e) => {
            ghost_error.get_or_insert(e);
        }
    };
    measure(&initial);
    let mut steps = 0usize;
    let outcome = run(&ctx, &params, initial, &boundaries, scenario.t_end, |s| {
        steps += 1;
        min_area = s.area.iter().cloned().fold(min_area, f64::min);
        if steps.is_multiple_of(scenario.output_stride) {
            measure(s);
        }
    });
    let positivity = match outcome {
        Ok(outcome) => SuiteOutcome {
            name: "positivity",
            passed: min_area > 0.0,
            residual: min_area,
            tolerance: 0.0,
            detail: format!("smallest area (m2) over {} steps", outcome.steps),
        },
        Err(e) => SuiteOutcome {
            name: "positivity",
            passed: false,
            residual: min_area,
            tolerance: 0.0,
            detail: format!("run aborted: {e}"),
        },
    };
    if let Some(e) = ghost_error {
        return Err(e.into());
    }
    let flux = SuiteOutcome {
        name: "flux-continuity",
        passed: mismatch <= FLUX_CONTINUITY_TOLERANCE,
        residual: mismatch,
        tolerance: FLUX_CONTINUITY_TOLERANCE,
        detail: "max |F-_A - F+_A|/(|F-_A| + A c) over sampled frames".into(),
    };
    Ok((positivity, flux))
}

fn mass_conservation(config: &RunConfig, execution: Execution) -> Result<SuiteOutcome, SimulationError> {
    let scenario = &config.scenario;
    let mesh = scenario.mesh()?;
    let initial = initial_state(scenario, &mesh)?;
    let c = scenario.constants.c;
    let ctx = SchemeContext::frictionless(&mesh, c, scenario.constants.g)
        .with_friction(scenario.friction_coefficient())
        .with_execution(execution);
    let mass = initial.total_mass(&mesh);
    let mut state = initial;
    for _ in 0..MASS_STEPS {
        let dt = cfl_timestep(&state, c, &mesh, config.cfl)?;
        state = step(&ctx, &state, dt, &Walls)?;
    }
    let residual = ((state.total_mass(&mesh) - mass) / mass).abs();
    Ok(SuiteOutcome {
        name: "mass-conservation",
        passed: residual <= MASS_TOLERANCE,
        residual,
        tolerance: MASS_TOLERANCE,
        detail: format!("relative drift of sum h A over {MASS_STEPS} steps between walls"),
    })
}

/// Runs every suite; solver failures inside a suite are reported as failures
/// of that suite where possible.
pub fn check_invariants(config: &RunConfig, execution: Execution) -> Result<CheckReport, SimulationError> {
    let mut suites = vec![well_balance(config, execution)?];
    let (positivity, flux) = positivity_and_flux(config, execution)?;
    suites.push(positivity);
    suites.push(flux);
    suites.push(mass_conservation(config, execution)?);
    Ok(CheckReport { suites })
}
