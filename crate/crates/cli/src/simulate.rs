//! Drives the kinetic and characteristics solvers and writes CSV output.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use kinpipe::kinetic::{run, Execution, KineticParams, SchemeContext, SchemeError};
use kinpipe::moc::{moc_march, MocError, MocState};
use kinpipe::physics::{area_from_piezometric_head, piezometric_head, PhysicsError, State};
use kinpipe::scenarios::{steady_state_init, Scenario, ScenarioError};
use thiserror::Error;

use crate::config::RunConfig;

pub const PROBE_HEADER: &str = "t_s,A_m2,Q_m3s,u_ms,rho_ratio,piezo_m";
pub const SNAPSHOT_HEADER: &str = "x_m,A_m2,Q_m3s,u_ms,rho_ratio,piezo_m";

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("kinetic solver: {0}")]
    Scheme(#[from] SchemeError),
    #[error("characteristics solver: {0}")]
    Moc(#[from] MocError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> SimulationError + '_ {
    move |source| SimulationError::Io { path: path.to_path_buf(), source }
}

/// One row of a probe or snapshot file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub area: f64,
    pub discharge: f64,
    pub piezo: f64,
    section: f64,
}

impl Sample {
    pub fn new(area: f64, discharge: f64, piezo: f64, section: f64) -> Self {
        Self { area, discharge, piezo, section }
    }

    pub fn velocity(&self) -> f64 {
        self.discharge / self.area
    }

    pub fn rho_ratio(&self) -> f64 {
        self.area / self.section
    }

    fn csv_row(&self, lead: f64) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            lead,
            self.area,
            self.discharge,
            self.velocity(),
            self.rho_ratio(),
            self.piezo
        )
    }
}

/// Time history at one abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSeries {
    pub x: f64,
    pub times: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl ProbeSeries {
    pub fn new(x: f64) -> Self {
        Self { x, times: Vec::new(), samples: Vec::new() }
    }

    pub fn push(&mut self, t: f64, sample: Sample) {
        self.times.push(t);
        self.samples.push(sample);
    }

    pub fn heads(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.piezo).collect()
    }

    pub fn discharges(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.discharge).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    pub solver: &'static str,
    /// Cells for the kinetic solver, nodes for the characteristics solver.
    pub points: usize,
    pub steps: usize,
    pub wall_clock: Duration,
    pub min_area: f64,
    pub max_area: f64,
    pub final_mass: f64,
    pub probes: Vec<ProbeSeries>,
}

/// Linear interpolation weights of `x` on the sorted abscissae `xs`, clamped
/// to the end values outside.
fn bracket(xs: &[f64], x: f64) -> (usize, usize, f64) {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return (0, 0, 0.0);
    }
    if x >= xs[last] {
        return (last, last, 0.0);
    }
    let k = xs.partition_point(|&p| p <= x);
    (k - 1, k, (x - xs[k - 1]) / (xs[k] - xs[k - 1]))
}

fn lerp(values: &[f64], (i, j, w): (usize, usize, f64)) -> f64 {
    values[i] + w * (values[j] - values[i])
}

/// Writes frames as `{solver}_snapshot_NNNNNN.csv`, remembering the first failure.
struct SnapshotSink<'a> {
    dir: Option<&'a Path>,
    solver: &'static str,
    count: usize,
    error: Option<SimulationError>,
}

impl<'a> SnapshotSink<'a> {
    fn new(dir: Option<&'a Path>, solver: &'static str) -> Self {
        Self { dir, solver, count: 0, error: None }
    }

    fn write(&mut self, xs: &[f64], rows: impl Iterator<Item = Sample>) {
        let Some(dir) = self.dir else { return };
        if self.error.is_some() {
            return;
        }
        let path = dir.join(format!("{}_snapshot_{:06}.csv", self.solver, self.count));
        self.count += 1;
        let body = xs.iter().zip(rows).map(|(x, s)| s.csv_row(*x));
        if let Err(e) = write_csv(&path, SNAPSHOT_HEADER, body) {
            self.error = Some(e);
        }
    }

    fn finish(self) -> Result<(), SimulationError> {
        self.error.map_or(Ok(()), Err)
    }
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<(), SimulationError> {
    let file = File::create(path).map_err(io_error(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{header}").map_err(io_error(path))?;
    for row in rows {
        writeln!(out, "{row}").map_err(io_error(path))?;
    }
    out.flush().map_err(io_error(path))
}

fn write_probes(dir: &Path, output: &SolverOutput) -> Result<(), SimulationError> {
    for probe in &output.probes {
        let path = dir.join(probe_file_name(output.solver, probe.x));
        let rows = probe.times.iter().zip(&probe.samples).map(|(t, s)| s.csv_row(*t));
        write_csv(&path, PROBE_HEADER, rows)?;
    }
    Ok(())
}

pub fn probe_file_name(solver: &str, x: f64) -> String {
    format!("{solver}_probe_x{x}.csv")
}

/// Marches the kinetic scheme from the steady state. Probes are sampled at
/// every step and snapshots every `output_stride` steps (plus first and
/// last); files go to `dir` when given.
pub fn run_kinetic(
    scenario: &Scenario,
    cfl: f64,
    execution: Execution,
    dir: Option<&Path>,
) -> Result<SolverOutput, SimulationError> {
    let started = Instant::now();
    let mesh = scenario.mesh()?;
    let initial = steady_state_init(scenario, &mesh)?;
    let (c, g) = (scenario.constants.c, scenario.constants.g);
    let geometry = &scenario.geometry;
    let ctx = SchemeContext::frictionless(&mesh, c, g).with_friction(scenario.friction_coefficient());
    let params = KineticParams::new(cfl)?.with_execution(execution);

    let brackets: Vec<_> = scenario.probes.iter().map(|&x| bracket(mesh.centers(), x)).collect();
    let probe_z: Vec<f64> = scenario.probes.iter().map(|&x| geometry.altitude.at(x)).collect();
    let mut probes: Vec<ProbeSeries> = scenario.probes.iter().map(|&x| ProbeSeries::new(x)).collect();
    let mut sink = SnapshotSink::new(dir, "kinetic");
    let (mut min_area, mut max_area) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut piezo_error = None;

    let cell_sample = |s: &State, i: usize| -> Result<Sample, PhysicsError> {
        let piezo = piezometric_head(s.area[i], geometry.section, mesh.z_cells()[i], geometry.diameter, c, g)?;
        Ok(Sample { area: s.area[i], discharge: s.discharge[i], piezo, section: geometry.section })
    };
    let mut record = |s: &State, snapshot: bool| {
        for a in &s.area {
            min_area = min_area.min(*a);
            max_area = max_area.max(*a);
        }
        for (k, probe) in probes.iter_mut().enumerate() {
            let area = lerp(&s.area, brackets[k]);
            let discharge = lerp(&s.discharge, brackets[k]);
            match piezometric_head(area, geometry.section, probe_z[k], geometry.diameter, c, g) {
                Ok(piezo) => {
                    probe.times.push(s.time);
                    probe.samples.push(Sample { area, discharge, piezo, section: geometry.section });
                }
                Err(e) => {
                    piezo_error.get_or_insert(e);
                }
            }
        }
        if snapshot {
            let rows: Result<Vec<Sample>, _> = (0..s.len()).map(|i| cell_sample(s, i)).collect();
            match rows {
                Ok(rows) => sink.write(mesh.centers(), rows.into_iter()),
                Err(e) => {
                    piezo_error.get_or_insert(e);
                }
            }
        }
    };

    record(&initial, true);
    let mut steps = 0usize;
    let outcome = run(&ctx, &params, initial, &scenario.boundaries(), scenario.t_end, |s| {
        steps += 1;
        record(s, steps.is_multiple_of(scenario.output_stride) || s.time >= scenario.t_end);
    })?;
    if let Some(e) = piezo_error {
        return Err(e.into());
    }
    sink.finish()?;

    let output = SolverOutput {
        solver: "kinetic",
        points: mesh.len(),
        steps: outcome.steps,
        wall_clock: started.elapsed(),
        min_area,
        max_area,
        final_mass: outcome.state.total_mass(&mesh),
        probes,
    };
    if let Some(dir) = dir {
        write_probes(dir, &output)?;
    }
    Ok(output)
}

/// Marches the characteristics solver on `cells + 1` nodes, so nodes sit on
/// the kinetic cell interfaces.
pub fn run_moc(scenario: &Scenario, dir: Option<&Path>) -> Result<SolverOutput, SimulationError> {
    let started = Instant::now();
    let geometry = &scenario.geometry;
    let (c, g) = (scenario.constants.c, scenario.constants.g);
    let nodes = scenario.mesh_cells + 1;
    let dx = geometry.length / scenario.mesh_cells as f64;
    let xs: Vec<f64> = (0..nodes).map(|j| j as f64 * dx).collect();
    let z: Vec<f64> = xs.iter().map(|&x| geometry.altitude.at(x)).collect();
    let brackets: Vec<_> = scenario.probes.iter().map(|&x| bracket(&xs, x)).collect();
    let probe_z: Vec<f64> = scenario.probes.iter().map(|&x| geometry.altitude.at(x)).collect();
    let mut probes: Vec<ProbeSeries> = scenario.probes.iter().map(|&x| ProbeSeries::new(x)).collect();
    let mut sink = SnapshotSink::new(dir, "moc");
    let (mut min_area, mut max_area, mut final_mass) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let mut failure: Option<PhysicsError> = None;

    let area_of = |head: f64, z: f64| area_from_piezometric_head(head, geometry.section, z, geometry.diameter, c, g);
    let sample = |head: f64, discharge: f64, z: f64| -> Result<Sample, PhysicsError> {
        Ok(Sample { area: area_of(head, z)?, discharge, piezo: head, section: geometry.section })
    };
    let mut observe = |k: usize, last: bool, s: &MocState| -> Result<(), PhysicsError> {
        let rows: Vec<Sample> =
            (0..s.len()).map(|j| sample(s.head[j], s.discharge[j], z[j])).collect::<Result<_, _>>()?;
        for row in &rows {
            min_area = min_area.min(row.area);
            max_area = max_area.max(row.area);
        }
        for (p, probe) in probes.iter_mut().enumerate() {
            let head = lerp(&s.head, brackets[p]);
            let discharge = lerp(&s.discharge, brackets[p]);
            probe.times.push(s.time);
            probe.samples.push(sample(head, discharge, probe_z[p])?);
        }
        if k.is_multiple_of(scenario.output_stride) || last {
            sink.write(&xs, rows.iter().copied());
        }
        if last {
            let n = rows.len();
            final_mass = rows
                .iter()
                .enumerate()
                .map(|(j, r)| if j == 0 || j == n - 1 { 0.5 * r.area } else { r.area })
                .sum::<f64>()
                * dx;
        }
        Ok(())
    };
    let (_, steps) = moc_march(scenario, nodes, |k, last, s| {
        if failure.is_none() {
            if let Err(e) = observe(k, last, s) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    sink.finish()?;

    let output = SolverOutput {
        solver: "moc",
        points: nodes,
        steps,
        wall_clock: started.elapsed(),
        min_area,
        max_area,
        final_mass,
        probes,
    };
    if let Some(dir) = dir {
        write_probes(dir, &output)?;
    }
    Ok(output)
}

/// Runs the configured solvers, writing CSV files and `summary.txt` into the
/// output directory.
pub fn run_simulation(config: &RunConfig, execution: Execution) -> Result<Vec<SolverOutput>, SimulationError> {
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut outputs = Vec::new();
    if config.solver.runs_kinetic() {
        outputs.push(run_kinetic(&config.scenario, config.cfl, execution, Some(dir))?);
    }
    if config.solver.runs_moc() {
        outputs.push(run_moc(&config.scenario, Some(dir))?);
    }
    let path = dir.join("summary.txt");
    fs::write(&path, summary(&outputs)).map_err(io_error(&path))?;
    Ok(outputs)
}

pub fn summary(outputs: &[SolverOutput]) -> String {
    let mut text = String::new();
    for o in outputs {
        let points = if o.solver == "moc" { "nodes" } else { "cells" };
        text.push_str(&format!(
            "[{}]\n{points} = {}\nsteps = {}\nwall_clock_s = {:.3}\nmin_area_m2 = {:.16e}\nmax_area_m2 = {:.16e}\nfinal_mass_m3 = {:.16e}\n\n",
            o.solver,
            o.points,
            o.steps,
            o.wall_clock.as_secs_f64(),
            o.min_area,
            o.max_area,
            o.final_mass,
        ));
    }
    text
}
