//! Boundary laws, steady initial states and the reservoir/pipe/valve setup.

use std::f64::consts::PI;

use thiserror::Error;

use crate::kinetic::{GhostCells, SchemeError};
use crate::physics::{
    area_from_piezometric_head, AltitudeProfile, CellState, FrictionParams, Mesh, PhysicalConstants,
    PhysicsError, PipeGeometry, State, STANDARD_GRAVITY,
};

const STEADY_MAX_ITERATIONS: usize = 100;
const STEADY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("{0}")]
    Invalid(String),
    #[error("steady state needs a reservoir upstream")]
    NoReservoir,
    #[error("steady-state iteration did not converge in cell {cell} after {iterations} iterations")]
    NoConvergence { cell: usize, iterations: usize },
    #[error("steady-state area in cell {cell} became {area}")]
    NonPositiveArea { cell: usize, area: f64 },
}

impl From<ScenarioError> for SchemeError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Physics(p) => SchemeError::Physics(p),
            other => SchemeError::Boundary(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upstream,
    Downstream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureShape {
    Linear,
    Cosine,
    Instantaneous,
}

impl ClosureShape {
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Cosine => "cosine",
            Self::Instantaneous => "instantaneous",
        }
    }
}

/// Prescribed discharge as a function of time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DischargeLaw {
    Constant(f64),
    /// Valve closing from `initial` to zero over `close_time` seconds.
    Closure { initial: f64, close_time: f64, shape: ClosureShape },
}

impl DischargeLaw {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Self::Constant(q) => q,
            Self::Closure { initial, close_time, shape } => match shape {
                ClosureShape::Linear => valve_closure_law(t, initial, close_time),
                ClosureShape::Cosine => {
                    if t >= close_time {
                        0.0
                    } else {
                        initial * 0.5 * (1.0 + (PI * t.max(0.0) / close_time).cos())
                    }
                }
                ClosureShape::Instantaneous => {
                    if t > 0.0 {
                        0.0
                    } else {
                        initial
                    }
                }
            },
        }
    }
}

/// Linear valve closure: `Q0 (1 − t/t_close)` until `t_close`, zero afterwards.
pub fn valve_closure_law(t: f64, q0: f64, t_close: f64) -> f64 {
    if t >= t_close {
        0.0
    } else {
        q0 * (1.0 - t.max(0.0) / t_close)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    /// Constant-head reservoir; `head` is the piezometric level (m).
    Reservoir { head: f64 },
    PrescribedDischarge(DischargeLaw),
    Wall,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    pub side: Side,
}

impl BoundaryCondition {
    pub fn new(kind: BoundaryKind, side: Side) -> Self {
        Self { kind, side }
    }

    fn position(&self, geometry: &PipeGeometry) -> f64 {
        match self.side {
            Side::Upstream => 0.0,
            Side::Downstream => geometry.length,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: PipeGeometry,
    pub constants: PhysicalConstants,
    pub friction: FrictionParams,
    pub mesh_cells: usize,
    pub upstream: BoundaryCondition,
    pub downstream: BoundaryCondition,
    pub initial_discharge: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub probes: Vec<f64>,
}

impl Scenario {
    /// Reservoir at 300 m feeding a 2000 m, 5° concrete pipe of 2 m² section,
    /// with a valve cutting an initial 10 m³/s over 5 s. The model sound speed
    /// is the elastic-pipe wave speed.
    pub fn water_hammer() -> Self {
        let geometry = PipeGeometry::circular(
            2000.0,
            2.0,
            0.20,
            23e9,
            AltitudeProfile::Slope { upstream: 250.0, slope_deg: 5.0 },
        )
        .expect("valid geometry");
        let rigid = PhysicalConstants::new(STANDARD_GRAVITY, 5.0e-10, 1000.0).expect("valid constants");
        let a = crate::physics::effective_wave_speed(
            rigid.c,
            geometry.diameter,
            geometry.wall_thickness,
            geometry.young_modulus,
            rigid.beta,
        )
        .expect("valid wave speed");
        let q0 = 10.0;
        Self {
            constants: rigid.with_sound_speed(a).expect("positive"),
            friction: FrictionParams::DISABLED,
            mesh_cells: 1000,
            upstream: BoundaryCondition::new(BoundaryKind::Reservoir { head: 300.0 }, Side::Upstream),
            downstream: BoundaryCondition::new(
                BoundaryKind::PrescribedDischarge(DischargeLaw::Closure {
                    initial: q0,
                    close_time: 5.0,
                    shape: ClosureShape::Linear,
                }),
                Side::Downstream,
            ),
            initial_discharge: q0,
            t_end: 40.0,
            output_stride: 50,
            probes: vec![geometry.length / 2.0],
            geometry,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.geometry.clone().validated()?;
        if self.mesh_cells < 2 {
            return Err(ScenarioError::Invalid(format!(
                "mesh needs at least 2 cells, got {}",
                self.mesh_cells
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(ScenarioError::Invalid(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.output_stride == 0 {
            return Err(ScenarioError::Invalid("output stride must be at least 1".into()));
        }
        if !self.initial_discharge.is_finite() {
            return Err(ScenarioError::Invalid("initial discharge must be finite".into()));
        }
        if let Some(x) = self.probes.iter().find(|x| !(**x >= 0.0 && **x <= self.geometry.length)) {
            return Err(ScenarioError::Invalid(format!(
                "probe at {x} m lies outside [0, {}]",
                self.geometry.length
            )));
        }
        let up_periodic = matches!(self.upstream.kind, BoundaryKind::Periodic);
        let down_periodic = matches!(self.downstream.kind, BoundaryKind::Periodic);
        if up_periodic != down_periodic {
            return Err(ScenarioError::Invalid("periodic must be set on both ends or neither".into()));
        }
        for bc in [&self.upstream, &self.downstream] {
            match bc.kind {
                BoundaryKind::Reservoir { head } => {
                    let crown = self.geometry.crown(bc.position(&self.geometry));
                    if !(head > crown) {
                        return Err(ScenarioError::Invalid(format!(
                            "{:?} reservoir head {head} m must exceed the pipe crown at {crown} m",
                            bc.side
                        )));
                    }
                }
                BoundaryKind::PrescribedDischarge(DischargeLaw::Closure { close_time, .. })
                    if !(close_time > 0.0) =>
                {
                    return Err(ScenarioError::Invalid(format!(
                        "closure time must be positive, got {close_time}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh, ScenarioError> {
        Ok(Mesh::for_pipe(&self.geometry, self.mesh_cells)?)
    }

    pub fn friction_coefficient(&self) -> f64 {
        self.friction.coefficient(&self.geometry)
    }

    /// Ghost-cell provider for the scenario's two ends.
    pub fn boundaries(&self) -> Boundaries<'_> {
        Boundaries {
            upstream: &self.upstream,
            downstream: &self.downstream,
            geometry: &self.geometry,
            c: self.constants.c,
            g: self.constants.g,
        }
    }

    /// Total head `g z + c² ln A` of the upstream reservoir at the pipe inlet.
    pub fn reservoir_total_head(&self) -> Result<f64, ScenarioError> {
        match self.upstream.kind {
            BoundaryKind::Reservoir { head } => {
                reservoir_total_head(head, 0.0, &self.geometry, self.constants.c, self.constants.g)
            }
            _ => Err(ScenarioError::NoReservoir),
        }
    }
}

/// Total-head constant `g z_b + c² ln A_b` where `A_b` puts the piezometric
/// head at `head` for a fluid at rest at abscissa `x`.
pub fn reservoir_total_head(
    head: f64,
    x: f64,
    geometry: &PipeGeometry,
    c: f64,
    g: f64,
) -> Result<f64, ScenarioError> {
    let z = geometry.altitude.at(x);
    let area = area_from_piezometric_head(head, geometry.section, z, geometry.diameter, c, g)?;
    Ok(g * z + c * c * area.ln())
}

/// Area solving `(Q/A)²/2 + g z + c² ln A = total` by fixed-point iteration
/// from `start`.
pub fn steady_area(total: f64, z: f64, discharge: f64, c: f64, g: f64, start: f64) -> Result<f64, ScenarioError> {
    steady_area_in_cell(total, z, discharge, c, g, start, 0)
}

fn steady_area_in_cell(
    total: f64,
    z: f64,
    discharge: f64,
    c: f64,
    g: f64,
    start: f64,
    cell: usize,
) -> Result<f64, ScenarioError> {
    let mut area = start;
    for _ in 0..STEADY_MAX_ITERATIONS {
        let u = discharge / area;
        let next = ((total - g * z - 0.5 * u * u) / (c * c)).exp();
        if !(next > 0.0 && next.is_finite()) {
            return Err(ScenarioError::NonPositiveArea { cell, area: next });
        }
        if (next - area).abs() <= STEADY_TOLERANCE * next {
            return Ok(next);
        }
        area = next;
    }
    Err(ScenarioError::NoConvergence { cell, iterations: STEADY_MAX_ITERATIONS })
}

/// Steady flow `Q_i = Q0` with constant total head fixed by the upstream
/// reservoir. With friction enabled the head decreases along the pipe by
/// `g K u|u| x_i`, a smooth approximation of the frictional steady state.
pub fn steady_state_init(scenario: &Scenario, mesh: &Mesh) -> Result<State, ScenarioError> {
    let total = scenario.reservoir_total_head()?;
    let PhysicalConstants { c, g, .. } = scenario.constants;
    let q0 = scenario.initial_discharge;
    let k = scenario.friction_coefficient();
    let section = scenario.geometry.section;

    let mut area = Vec::with_capacity(mesh.len());
    for (i, (&z, &x)) in mesh.z_cells().iter().zip(mesh.centers()).enumerate() {
        let mut a = steady_area_in_cell(total, z, q0, c, g, section, i)?;
        if k > 0.0 {
            // Head loss depends on the local velocity; a few outer sweeps settle it.
            for _ in 0..STEADY_MAX_ITERATIONS {
                let u = q0 / a;
                let next = steady_area_in_cell(total - g * k * u * u.abs() * x, z, q0, c, g, a, i)?;
                let done = (next - a).abs() <= STEADY_TOLERANCE * next;
                a = next;
                if done {
                    break;
                }
            }
        }
        area.push(a);
    }
    Ok(State::new(area, vec![q0; mesh.len()], 0.0)?)
}

/// Ghost cells at time `state.time`:
///
/// * reservoir: velocity copied from the adjacent cell, area from the total head
///   of the reservoir evaluated at the ghost's altitude;
/// * prescribed discharge: area copied, discharge from the law;
/// * wall: mirror with negated discharge;
/// * periodic: the opposite interior cell.
pub fn ghost_states(
    state: &State,
    mesh: &Mesh,
    upstream: &BoundaryCondition,
    downstream: &BoundaryCondition,
    geometry: &PipeGeometry,
    c: f64,
    g: f64,
) -> Result<(CellState, CellState), ScenarioError> {
    let n = state.len();
    if n == 0 || mesh.len() != n {
        return Err(ScenarioError::Invalid("state and mesh sizes differ".into()));
    }
    let ghost = |bc: &BoundaryCondition, inner: usize, opposite: usize| -> Result<CellState, ScenarioError> {
        let cell = state.cell(inner);
        match bc.kind {
            BoundaryKind::Reservoir { head } => {
                let total = reservoir_total_head(head, bc.position(geometry), geometry, c, g)?;
                let u = cell.velocity();
                let z = mesh.z_cells()[inner];
                let area = ((total - g * z - 0.5 * u * u) / (c * c)).exp();
                if !(area > 0.0 && area.is_finite()) {
                    return Err(ScenarioError::NonPositiveArea { cell: inner, area });
                }
                Ok(CellState::new(area, area * u))
            }
            BoundaryKind::PrescribedDischarge(law) => Ok(CellState::new(cell.area, law.at(state.time))),
            BoundaryKind::Wall => Ok(CellState::new(cell.area, -cell.discharge)),
            BoundaryKind::Periodic => Ok(state.cell(opposite)),
        }
    };
    Ok((ghost(upstream, 0, n - 1)?, ghost(downstream, n - 1, 0)?))
}

/// [`GhostCells`] adapter for a pair of boundary conditions.
#[derive(Debug, Clone, Copy)]
pub struct Boundaries<'a> {
    pub upstream: &'a BoundaryCondition,
    pub downstream: &'a BoundaryCondition,
    pub geometry: &'a PipeGeometry,
    pub c: f64,
    pub g: f64,
}

impl GhostCells for Boundaries<'_> {
    fn ghost_cells(&self, state: &State, mesh: &Mesh) -> Result<(CellState, CellState), SchemeError> {
        Ok(ghost_states(state, mesh, self.upstream, self.downstream, self.geometry, self.c, self.g)?)
    }
}
