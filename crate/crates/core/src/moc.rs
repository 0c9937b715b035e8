//! Method of characteristics for the linear water-hammer equations
//!
//! ```text
//! ∂t H + a²/(gS) ∂x Q = 0
//! ∂t Q + gS ∂x H = −gS Sf
//! ```
//!
//! on a fixed grid marched at unit Courant number (`dt = Δx/a`), so the
//! characteristics through each new node start exactly on old nodes.

use thiserror::Error;

use crate::physics::{PhysicsError, PipeGeometry};
use crate::scenarios::{
    reservoir_total_head, steady_area, BoundaryCondition, BoundaryKind, Scenario, ScenarioError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MocError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Invalid(String),
    #[error("boundary law cannot be solved: {0}")]
    Boundary(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MocState {
    pub head: Vec<f64>,
    pub discharge: Vec<f64>,
    pub wave_speed: f64,
    pub node_spacing: f64,
    pub time: f64,
}

impl MocState {
    pub fn new(
        head: Vec<f64>,
        discharge: Vec<f64>,
        wave_speed: f64,
        node_spacing: f64,
        time: f64,
    ) -> Result<Self, MocError> {
        if head.len() < 2 || head.len() != discharge.len() {
            return Err(MocError::Invalid(format!(
                "need at least 2 nodes with matching head/discharge, got {} and {}",
                head.len(),
                discharge.len()
            )));
        }
        crate::physics::require_positive("wave speed", wave_speed)?;
        crate::physics::require_positive("node spacing", node_spacing)?;
        Ok(Self { head, discharge, wave_speed, node_spacing, time })
    }

    pub fn len(&self) -> usize {
        self.head.len()
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_empty()
    }

    /// Fixed step `Δx / a`.
    pub fn dt(&self) -> f64 {
        self.node_spacing / self.wave_speed
    }

    /// Linear-acoustics energy `Σ w_j (g²S H_j²/(2a²) + Q_j²/(2S)) Δx`, with
    /// half weights on the two end nodes unless the grid is periodic.
    pub fn energy(&self, g: f64, section: f64, periodic: bool) -> f64 {
        let a2 = self.wave_speed * self.wave_speed;
        let n = self.len();
        (0..n)
            .map(|j| {
                let w = if !periodic && (j == 0 || j == n - 1) { 0.5 } else { 1.0 };
                let h = self.head[j];
                let q = self.discharge[j];
                w * (g * g * section * h * h / (2.0 * a2) + q * q / (2.0 * section))
            })
            .sum::<f64>()
            * self.node_spacing
    }
}

/// Parameters that stay fixed over a march.
#[derive(Debug, Clone, Copy)]
pub struct MocModel<'a> {
    pub g: f64,
    pub section: f64,
    /// Manning-Strickler coefficient `K`; zero disables friction.
    pub friction_k: f64,
    pub upstream: &'a BoundaryCondition,
    pub downstream: &'a BoundaryCondition,
}

/// One characteristic step. Interior nodes combine
///
/// ```text
/// C⁺: H = C_P − B Q,   C_P = H_{i−1} + B Q_{i−1} − R Q_{i−1}|Q_{i−1}|
/// C⁻: H = C_M + B Q,   C_M = H_{i+1} − B Q_{i+1} + R Q_{i+1}|Q_{i+1}|
/// ```
///
/// with `B = a/(gS)` and `R = K Δx / S²`. End nodes use the single
/// characteristic reaching them plus their boundary law.
pub fn moc_step(state: &MocState, model: &MocModel<'_>) -> Result<MocState, MocError> {
    let n = state.len();
    let b = state.wave_speed / (model.g * model.section);
    let r = model.friction_k * state.node_spacing / (model.section * model.section);
    let (h, q) = (&state.head, &state.discharge);
    let periodic = matches!(model.upstream.kind, BoundaryKind::Periodic);
    if periodic != matches!(model.downstream.kind, BoundaryKind::Periodic) {
        return Err(MocError::Invalid("periodic must be set on both ends or neither".into()));
    }

    let c_plus = |j: usize| h[j] + b * q[j] - r * q[j] * q[j].abs();
    let c_minus = |j: usize| h[j] - b * q[j] + r * q[j] * q[j].abs();
    let time = state.time + state.dt();

    let mut head = vec![0.0; n];
    let mut discharge = vec![0.0; n];
    for j in 0..n {
        let left = if j > 0 { Some(j - 1) } else if periodic { Some(n - 1) } else { None };
        let right = if j + 1 < n { Some(j + 1) } else if periodic { Some(0) } else { None };
        match (left, right) {
            (Some(l), Some(rr)) => {
                let (cp, cm) = (c_plus(l), c_minus(rr));
                head[j] = 0.5 * (cp + cm);
                discharge[j] = (cp - cm) / (2.0 * b);
            }
            (None, Some(rr)) => {
                let (hh, qq) = upstream_node(model.upstream, c_minus(rr), b, model.g, model.section, time)?;
                head[j] = hh;
                discharge[j] = qq;
            }
            (Some(l), None) => {
                let (hh, qq) = downstream_node(model.downstream, c_plus(l), b, time)?;
                head[j] = hh;
                discharge[j] = qq;
            }
            (None, None) => unreachable!("at least two nodes"),
        }
    }
    Ok(MocState { head, discharge, time, ..*state })
}

/// Upstream end: `H = C_M + B Q` together with the boundary law.
fn upstream_node(
    bc: &BoundaryCondition,
    cm: f64,
    b: f64,
    g: f64,
    section: f64,
    t: f64,
) -> Result<(f64, f64), MocError> {
    match bc.kind {
        BoundaryKind::Reservoir { head } => {
            // Inflow pays the velocity head: H = H_res − Q²/(2gS²).
            let drive = head - cm;
            if drive >= 0.0 {
                let k = 1.0 / (2.0 * g * section * section);
                let q = 2.0 * drive / (b + (b * b + 4.0 * k * drive).sqrt());
                Ok((cm + b * q, q))
            } else {
                Ok((head, drive / b))
            }
        }
        BoundaryKind::PrescribedDischarge(law) => {
            let q = law.at(t);
            Ok((cm + b * q, q))
        }
        BoundaryKind::Wall => Ok((cm, 0.0)),
        BoundaryKind::Periodic => Err(MocError::Boundary("periodic end without a partner".into())),
    }
}

/// Downstream end: `H = C_P − B Q` together with the boundary law.
fn downstream_node(bc: &BoundaryCondition, cp: f64, b: f64, t: f64) -> Result<(f64, f64), MocError> {
    match bc.kind {
        BoundaryKind::Reservoir { head } => Ok((head, (cp - head) / b)),
        BoundaryKind::PrescribedDischarge(law) => {
            let q = law.at(t);
            Ok((cp - b * q, q))
        }
        BoundaryKind::Wall => Ok((cp, 0.0)),
        BoundaryKind::Periodic => Err(MocError::Boundary("periodic end without a partner".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MocFrame {
    pub time: f64,
    pub head: Vec<f64>,
    pub discharge: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MocSeries {
    /// Node abscissae.
    pub x: Vec<f64>,
    pub frames: Vec<MocFrame>,
    pub steps: usize,
}

/// Piezometric heads of the scenario's steady state sampled at `x`.
pub fn steady_heads(scenario: &Scenario, x: &[f64]) -> Result<Vec<f64>, MocError> {
    let geometry: &PipeGeometry = &scenario.geometry;
    let (c, g) = (scenario.constants.c, scenario.constants.g);
    let total = match scenario.upstream.kind {
        BoundaryKind::Reservoir { head } => reservoir_total_head(head, 0.0, geometry, c, g)?,
        _ => return Err(ScenarioError::NoReservoir.into()),
    };
    x.iter()
        .map(|&xj| {
            let z = geometry.altitude.at(xj);
            let area = steady_area(total, z, scenario.initial_discharge, c, g, geometry.section)?;
            Ok(crate::physics::piezometric_head(area, geometry.section, z, geometry.diameter, c, g)?)
        })
        .collect()
}

/// Marches the scenario with `node_count` evenly spaced nodes on `[0, L]`.
/// Frames are kept every `output_stride` steps, plus the first and last.
/// The fixed step means the final frame lies within one step past `t_end`.
pub fn moc_run(scenario: &Scenario, node_count: usize) -> Result<MocSeries, MocError> {
    let mut frames = Vec::new();
    let (x, steps) = moc_march(scenario, node_count, |k, last, s| {
        if k.is_multiple_of(scenario.output_stride) || last {
            frames.push(MocFrame { time: s.time, head: s.head.clone(), discharge: s.discharge.clone() });
        }
    })?;
    Ok(MocSeries { x, frames, steps })
}

/// Same march as [`moc_run`], handing every state to `observer` as
/// `(step index, is last, state)` instead of storing frames. Step 0 is the
/// initial state. Returns the node abscissae and the step count.
pub fn moc_march<O>(scenario: &Scenario, node_count: usize, mut observer: O) -> Result<(Vec<f64>, usize), MocError>
where
    O: FnMut(usize, bool, &MocState),
{
    if node_count < 2 {
        return Err(MocError::Invalid(format!("need at least 2 nodes, got {node_count}")));
    }
    let geometry = &scenario.geometry;
    let dx = geometry.length / (node_count - 1) as f64;
    let x: Vec<f64> = (0..node_count).map(|j| j as f64 * dx).collect();
    let head = steady_heads(scenario, &x)?;
    let discharge = vec![scenario.initial_discharge; node_count];
    let mut state = MocState::new(head, discharge, scenario.constants.c, dx, 0.0)?;

    let model = MocModel {
        g: scenario.constants.g,
        section: geometry.section,
        friction_k: scenario.friction_coefficient(),
        upstream: &scenario.upstream,
        downstream: &scenario.downstream,
    };
    let steps = (scenario.t_end / state.dt() - 1e-9).ceil().max(0.0) as usize;
    observer(0, steps == 0, &state);
    for k in 1..=steps {
        state = moc_step(&state, &model)?;
        observer(k, k == steps, &state);
    }
    Ok((x, steps))
}
