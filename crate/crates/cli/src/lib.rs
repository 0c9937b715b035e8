//! Configuration, drivers and reports for the `kinpipe` command.

pub mod check;
pub mod compare;
pub mod config;
pub mod simulate;

use std::path::PathBuf;

use kinpipe::kinetic::KineticParams;

use crate::config::{ConfigError, RunConfig};

/// Command-line overrides applied on top of a parsed configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub cells: Option<usize>,
    pub cfl: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut config: RunConfig) -> Result<RunConfig, ConfigError> {
        if let Some(cells) = self.cells {
            if cells < 2 {
                return Err(ConfigError::Invalid {
                    key: "--cells".into(),
                    message: format!("need at least 2 cells, got {cells}"),
                });
            }
            config.scenario.mesh_cells = cells;
        }
        if let Some(cfl) = self.cfl {
            KineticParams::new(cfl)
                .map_err(|e| ConfigError::Invalid { key: "--cfl".into(), message: e.to_string() })?;
            config.cfl = cfl;
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        Ok(config)
    }
}

/// Comparison window of a scenario: the extremum search starts when the valve
/// starts moving (t = 0) and the period window once every prescribed
/// discharge has settled.
pub fn scenario_window(scenario: &kinpipe::scenarios::Scenario) -> compare::CompareWindow {
    use kinpipe::scenarios::{BoundaryKind, ClosureShape, DischargeLaw};
    let settled = [&scenario.upstream, &scenario.downstream]
        .iter()
        .map(|bc| match bc.kind {
            BoundaryKind::PrescribedDischarge(DischargeLaw::Closure { close_time, shape, .. }) => {
                if shape == ClosureShape::Instantaneous {
                    0.0
                } else {
                    close_time
                }
            }
            _ => 0.0,
        })
        .fold(0.0, f64::max);
    compare::CompareWindow { onset: 0.0, settled }
}
