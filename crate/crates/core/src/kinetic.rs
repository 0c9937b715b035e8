//! First-order kinetic finite-volume scheme.
//!
//! Each cell carries a rectangular Gibbs equilibrium
//!
//! ```text
//! M_i(ξ) = A_i / (2c√3) · 1{|ξ − u_i| ≤ c√3}
//! ```
//!
//! whose first two moments are `A`, `Q` and `Q²/A + c²A`. Interface fluxes are
//! the first two ξ-moments of the upwinded densities `M∓` built from the two
//! neighbouring equilibria. A step in the bottom elevation acts as a potential
//! barrier: particles without enough kinetic energy to climb it are reflected,
//! the others cross it with their speed shifted by `ξ² → ξ² ∓ 2gΔZ`. Because
//! the equilibrium is piecewise constant, every moment reduces to an integral
//! of a polynomial (or of `v·sqrt(v² + φ)`) over an interval, evaluated here in
//! closed form.

use thiserror::Error;

use crate::physics::{CellState, Mesh, PhysicsError, State};

/// Half width of the support of χ.
pub const CHI_HALF_WIDTH: f64 = 1.732_050_807_568_877_2;

/// Relative slack accepted on the CFL bound before a step is rejected.
const CFL_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error("cfl coefficient must lie in (0, 1], got {0}")]
    CflCoefficient(f64),
    #[error("time step {dt} violates the CFL bound {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("time step must be positive and finite, got {0}")]
    TimeStep(f64),
    #[error("state has {state} cells but mesh has {mesh}")]
    SizeMismatch { state: usize, mesh: usize },
    #[error("wetted area of cell {cell} became {area} at t = {time}")]
    Positivity { cell: usize, area: f64, time: f64 },
    #[error("end time {t_end} precedes current time {time}")]
    EndTime { t_end: f64, time: f64 },
    #[error("boundary condition failed: {0}")]
    Boundary(String),
}

/// How interface fluxes and cell updates are evaluated. Both paths produce
/// bit-identical states. `Parallel` degrades to `Sequential` when the crate is
/// built without the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticParams {
    pub cfl: f64,
    pub execution: Execution,
}

impl KineticParams {
    pub fn new(cfl: f64) -> Result<Self, SchemeError> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(SchemeError::CflCoefficient(cfl));
        }
        Ok(Self { cfl, execution: Execution::default() })
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Self { execution, ..self }
    }
}

/// One half of an interface flux, `∫ ξ (1, ξ) M±(ξ) dξ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HalfFlux {
    pub f_area: f64,
    pub f_momentum: f64,
}

impl HalfFlux {
    fn new(f_area: f64, f_momentum: f64) -> Self {
        Self { f_area, f_momentum }
    }
}

impl std::ops::Add for HalfFlux {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.f_area + rhs.f_area, self.f_momentum + rhs.f_momentum)
    }
}

/// `minus` feeds the cell on the left of the interface, `plus` the cell on the right.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterfaceFluxPair {
    pub minus: HalfFlux,
    pub plus: HalfFlux,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfLine {
    /// ξ ≥ 0
    Positive,
    /// ξ ≤ 0
    Negative,
}

/// Rectangular equilibrium: constant `height` on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
struct Rectangle {
    height: f64,
    lo: f64,
    hi: f64,
}

impl Rectangle {
    fn new(area: f64, velocity: f64, c: f64) -> Self {
        let half = c * CHI_HALF_WIDTH;
        Self { height: area / (2.0 * half), lo: velocity - half, hi: velocity + half }
    }

    /// `(∫ ξ M, ∫ ξ² M)` over `[p, q] ∩ support`.
    fn moments_on(&self, p: f64, q: f64) -> (f64, f64) {
        let p = p.max(self.lo);
        let q = q.min(self.hi);
        if q <= p {
            return (0.0, 0.0);
        }
        (
            self.height * (q * q - p * p) / 2.0,
            self.height * (q * q * q - p * p * p) / 3.0,
        )
    }

    /// Transmitted moments, written in the emitting cell's velocity `v` with
    /// `ξ² = v² + φ`. Integrates `(v, |v| sqrt(v² + φ))` against `M(v)` over
    /// the half-line of `v` that can reach the interface, i.e. `|v| ≥ sqrt(max(−φ, 0))`.
    fn transmitted(&self, phi: f64, side: HalfLine) -> (f64, f64) {
        let threshold = if phi < 0.0 { (-phi).sqrt() } else { 0.0 };
        let (p, q) = match side {
            HalfLine::Positive => (self.lo.max(threshold), self.hi),
            HalfLine::Negative => (self.lo, self.hi.min(-threshold)),
        };
        if q <= p {
            return (0.0, 0.0);
        }
        // d/dv (v² + φ)^{3/2} / 3 = v sqrt(v² + φ)
        let energy = |v: f64| (v * v + phi).max(0.0).powf(1.5) / 3.0;
        let m0 = self.height * (q * q - p * p) / 2.0;
        let m1 = self.height * (energy(q) - energy(p));
        match side {
            HalfLine::Positive => (m0, m1),
            HalfLine::Negative => (m0, -m1),
        }
    }
}

/// Rectangular Maxwellian `A/(2c√3) · 1{|ξ − u| ≤ c√3}`.
pub fn maxwellian_density(area: f64, velocity: f64, c: f64, xi: f64) -> Result<f64, SchemeError> {
    crate::physics::require_positive("area", area)?;
    crate::physics::require_positive("sound speed", c)?;
    let half = c * CHI_HALF_WIDTH;
    Ok(if (xi - velocity).abs() <= half { area / (2.0 * half) } else { 0.0 })
}

/// Moments of the transmitted density:
///
/// * `Positive`: `∫_{ξ ≥ 0, ξ² ≥ φ} ξ (1, ξ) M(+sqrt(ξ² − φ)) dξ`
/// * `Negative`: `∫_{ξ ≤ 0, ξ² ≥ φ} ξ (1, ξ) M(−sqrt(ξ² − φ)) dξ`
///
/// where `φ = potential_jump = 2gΔZ`. Returns `(0, 0)` when the transformed
/// support misses the integration domain.
pub fn shifted_half_moments(
    area: f64,
    velocity: f64,
    c: f64,
    potential_jump: f64,
    side: HalfLine,
) -> Result<(f64, f64), SchemeError> {
    crate::physics::require_positive("area", area)?;
    crate::physics::require_positive("sound speed", c)?;
    Ok(Rectangle::new(area, velocity, c).transmitted(potential_jump, side))
}

/// Kinetic fluxes at the interface between `left` (cell i) and `right` (cell i+1).
pub fn interface_fluxes(
    left: CellState,
    right: CellState,
    z_left: f64,
    z_right: f64,
    c: f64,
    g: f64,
) -> Result<InterfaceFluxPair, SchemeError> {
    crate::physics::require_positive("area", left.area)?;
    crate::physics::require_positive("area", right.area)?;
    crate::physics::require_positive("sound speed", c)?;
    Ok(interface_fluxes_unchecked(left, right, z_left, z_right, c, g))
}

fn interface_fluxes_unchecked(
    left: CellState,
    right: CellState,
    z_left: f64,
    z_right: f64,
    c: f64,
    g: f64,
) -> InterfaceFluxPair {
    let ml = Rectangle::new(left.area, left.velocity(), c);
    let mr = Rectangle::new(right.area, right.velocity(), c);
    let phi_minus = 2.0 * g * (z_right - z_left);
    let phi_plus = -phi_minus;

    // Left cell: outgoing particles, those bounced back by a step up, and
    // right-cell particles coming down (or climbing up) the step.
    let (d0, d1) = ml.moments_on(0.0, f64::INFINITY);
    let mut minus = HalfFlux::new(d0, d1);
    if phi_minus > 0.0 {
        let (r0, r1) = ml.moments_on(0.0, phi_minus.sqrt());
        minus = minus + HalfFlux::new(-r0, r1);
    }
    let (t0, t1) = mr.transmitted(phi_minus, HalfLine::Negative);
    minus = minus + HalfFlux::new(t0, t1);

    let (d0, d1) = mr.moments_on(f64::NEG_INFINITY, 0.0);
    let mut plus = HalfFlux::new(d0, d1);
    if phi_plus > 0.0 {
        let (r0, r1) = mr.moments_on(-phi_plus.sqrt(), 0.0);
        plus = plus + HalfFlux::new(-r0, r1);
    }
    let (t0, t1) = ml.transmitted(phi_plus, HalfLine::Positive);
    plus = plus + HalfFlux::new(t0, t1);

    InterfaceFluxPair { minus, plus }
}

/// Largest admissible step `cfl · min h / max(|u| + c√3)`.
pub fn cfl_timestep(state: &State, c: f64, mesh: &Mesh, cfl: f64) -> Result<f64, SchemeError> {
    if mesh.is_empty() || state.is_empty() {
        return Err(PhysicsError::Mesh("mesh has no cells".into()).into());
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(SchemeError::CflCoefficient(cfl));
    }
    Ok(cfl * mesh.min_width() / max_signal_speed(state, c))
}

fn max_signal_speed(state: &State, c: f64) -> f64 {
    let umax = (0..state.len())
        .map(|i| state.velocity(i).abs())
        .fold(0.0, f64::max);
    umax + c * CHI_HALF_WIDTH
}

/// Supplies the two ghost cells bordering the domain at the state's time.
/// Ghost cells share the altitude of their interior neighbour.
pub trait GhostCells {
    fn ghost_cells(&self, state: &State, mesh: &Mesh) -> Result<(CellState, CellState), SchemeError>;
}

/// The domain wraps around.
#[derive(Debug, Clone, Copy, Default)]
pub struct Periodic;

impl GhostCells for Periodic {
    fn ghost_cells(&self, state: &State, _mesh: &Mesh) -> Result<(CellState, CellState), SchemeError> {
        Ok((state.cell(state.len() - 1), state.cell(0)))
    }
}

/// Closed ends: ghosts mirror the adjacent cell with the discharge negated.
#[derive(Debug, Clone, Copy, Default)]
pub struct Walls;

impl GhostCells for Walls {
    fn ghost_cells(&self, state: &State, _mesh: &Mesh) -> Result<(CellState, CellState), SchemeError> {
        let first = state.cell(0);
        let last = state.cell(state.len() - 1);
        Ok((
            CellState::new(first.area, -first.discharge),
            CellState::new(last.area, -last.discharge),
        ))
    }
}

/// Everything a step needs besides the state itself.
#[derive(Debug, Clone, Copy)]
pub struct SchemeContext<'a> {
    pub mesh: &'a Mesh,
    pub c: f64,
    pub g: f64,
    /// Manning-Strickler coefficient `K`; zero disables friction.
    pub friction_k: f64,
    pub execution: Execution,
}

impl<'a> SchemeContext<'a> {
    pub fn frictionless(mesh: &'a Mesh, c: f64, g: f64) -> Self {
        Self { mesh, c, g, friction_k: 0.0, execution: Execution::default() }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Self { execution, ..self }
    }

    pub fn with_friction(self, friction_k: f64) -> Self {
        Self { friction_k, ..self }
    }

    /// Fluxes at the `N + 1` interfaces, ghost interfaces included. Entry `k`
    /// sits between cells `k − 1` and `k`.
    pub fn all_interface_fluxes(
        &self,
        state: &State,
        ghosts: (CellState, CellState),
    ) -> Vec<InterfaceFluxPair> {
        let n = state.len();
        let z = self.mesh.z_cells();
        let cell = |k: isize| -> (CellState, f64) {
            if k < 0 {
                (ghosts.0, z[0])
            } else if k as usize >= n {
                (ghosts.1, z[n - 1])
            } else {
                (state.cell(k as usize), z[k as usize])
            }
        };
        let flux = |k: usize| {
            let (left, zl) = cell(k as isize - 1);
            let (right, zr) = cell(k as isize);
            interface_fluxes_unchecked(left, right, zl, zr, self.c, self.g)
        };
        map_indices(self.execution, n + 1, flux)
    }
}

fn map_indices<T, F>(execution: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// One explicit step `U_i ← U_i − dt/h_i (F⁻_{i+1/2} − F⁺_{i−1/2})`, followed by
/// the semi-implicit friction correction `Q ← Q / (1 + dt g K |u|)`.
pub fn step<B: GhostCells + ?Sized>(
    ctx: &SchemeContext<'_>,
    state: &State,
    dt: f64,
    boundary: &B,
) -> Result<State, SchemeError> {
    let n = state.len();
    if n != ctx.mesh.len() {
        return Err(SchemeError::SizeMismatch { state: n, mesh: ctx.mesh.len() });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SchemeError::TimeStep(dt));
    }
    let limit = ctx.mesh.min_width() / max_signal_speed(state, ctx.c);
    if dt > limit * (1.0 + CFL_SLACK) {
        return Err(SchemeError::CflViolation { dt, limit });
    }

    let ghosts = boundary.ghost_cells(state, ctx.mesh)?;
    let fluxes = ctx.all_interface_fluxes(state, ghosts);
    let widths = ctx.mesh.widths();
    let (g, k) = (ctx.g, ctx.friction_k);

    let updated = map_indices(ctx.execution, n, |i| {
        let ratio = dt / widths[i];
        let right = fluxes[i + 1].minus;
        let left = fluxes[i].plus;
        let area = state.area[i] - ratio * (right.f_area - left.f_area);
        let mut discharge = state.discharge[i] - ratio * (right.f_momentum - left.f_momentum);
        if k > 0.0 {
            discharge /= 1.0 + dt * g * k * (discharge / area).abs();
        }
        (area, discharge)
    });

    let time = state.time + dt;
    let mut area = Vec::with_capacity(n);
    let mut discharge = Vec::with_capacity(n);
    for (i, (a, q)) in updated.into_iter().enumerate() {
        if !(a > 0.0 && a.is_finite()) || !q.is_finite() {
            return Err(SchemeError::Positivity { cell: i, area: a, time });
        }
        area.push(a);
        discharge.push(q);
    }
    Ok(State { area, discharge, time })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub state: State,
    pub steps: usize,
}

/// Advances to `t_end` with CFL-limited steps, shortening the last one to land
/// on `t_end` exactly. `observer` sees every accepted state.
pub fn run<B, O>(
    ctx: &SchemeContext<'_>,
    params: &KineticParams,
    initial: State,
    boundary: &B,
    t_end: f64,
    mut observer: O,
) -> Result<RunOutcome, SchemeError>
where
    B: GhostCells + ?Sized,
    O: FnMut(&State),
{
    if t_end < initial.time {
        return Err(SchemeError::EndTime { t_end, time: initial.time });
    }
    let ctx = SchemeContext { execution: params.execution, ..*ctx };
    let mut state = initial;
    let mut steps = 0;
    while state.time < t_end {
        let dt_max = cfl_timestep(&state, ctx.c, ctx.mesh, params.cfl)?;
        let remaining = t_end - state.time;
        let last = remaining <= dt_max;
        let dt = if last { remaining } else { dt_max };
        state = step(&ctx, &state, dt, boundary)?;
        if last {
            state.time = t_end;
        }
        steps += 1;
        observer(&state);
    }
    Ok(RunOutcome { state, steps })
}
