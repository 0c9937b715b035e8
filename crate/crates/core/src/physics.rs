//! Physical model of a pressurized pipe: constants, geometry, mesh, state and
//! the scalar diagnostics derived from them (heads, entropy, friction).
//!
//! The unknowns are the "FS-equivalent" wetted area `A = ρS/ρ₀` and discharge
//! `Q = ρSu/ρ₀`. With this change of variables the compressible pipe equations
//! take the shallow-water-like conservative form
//!
//! ```text
//! ∂t A + ∂x Q = 0
//! ∂t Q + ∂x (Q²/A + c²A) = −g A (∂x Z + Sf)
//! ```

use std::f64::consts::PI;

use thiserror::Error;

/// Default gravitational acceleration (m/s²).
pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("invalid altitude table: {0}")]
    AltitudeTable(String),
    #[error("state has {area} area values but {discharge} discharge values")]
    StateLength { area: usize, discharge: usize },
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<f64, PhysicsError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PhysicsError::NonPositive { name, value })
    }
}

/// Speed of sound in water for the given compressibility and reference density.
pub fn sound_speed(beta: f64, rho0: f64) -> Result<f64, PhysicsError> {
    let beta = require_positive("compressibility", beta)?;
    let rho0 = require_positive("reference density", rho0)?;
    Ok(1.0 / (beta * rho0).sqrt())
}

/// Wave speed in an elastic pipe, `c / sqrt(1 + δ/(β e E))`.
pub fn effective_wave_speed(
    c: f64,
    diameter: f64,
    wall_thickness: f64,
    young_modulus: f64,
    beta: f64,
) -> Result<f64, PhysicsError> {
    let c = require_positive("sound speed", c)?;
    let diameter = require_positive("diameter", diameter)?;
    let wall_thickness = require_positive("wall thickness", wall_thickness)?;
    let young_modulus = require_positive("Young modulus", young_modulus)?;
    let beta = require_positive("compressibility", beta)?;
    Ok(c / (1.0 + diameter / (beta * wall_thickness * young_modulus)).sqrt())
}

/// Piezometric head `z + δ + c²(A/S − 1)/g` in meters.
pub fn piezometric_head(
    area: f64,
    section: f64,
    z: f64,
    diameter: f64,
    c: f64,
    g: f64,
) -> Result<f64, PhysicsError> {
    let area = require_positive("area", area)?;
    let section = require_positive("section", section)?;
    Ok(z + diameter + c * c * (area / section - 1.0) / g)
}

/// Inverse of [`piezometric_head`] for the area.
pub fn area_from_piezometric_head(
    head: f64,
    section: f64,
    z: f64,
    diameter: f64,
    c: f64,
    g: f64,
) -> Result<f64, PhysicsError> {
    let section = require_positive("section", section)?;
    let area = section * (1.0 + g * (head - z - diameter) / (c * c));
    require_positive("area", area)
}

/// Total head `u²/2 + gz + c² ln A` (m²/s²). Constant along smooth
/// frictionless steady flows.
pub fn total_head(area: f64, velocity: f64, z: f64, c: f64, g: f64) -> Result<f64, PhysicsError> {
    let area = require_positive("area", area)?;
    Ok(0.5 * velocity * velocity + g * z + c * c * area.ln())
}

/// Mathematical entropy density `Q²/(2A) + gAz + c²A ln A`.
pub fn entropy_cell(area: f64, discharge: f64, z: f64, c: f64, g: f64) -> Result<f64, PhysicsError> {
    let area = require_positive("area", area)?;
    Ok(discharge * discharge / (2.0 * area) + g * area * z + c * c * area * area.ln())
}

/// Manning-Strickler friction slope `K u|u|`.
pub fn friction_slope(velocity: f64, geometry: &PipeGeometry, friction: &FrictionParams) -> f64 {
    friction.coefficient(geometry) * velocity * velocity.abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub g: f64,
    pub beta: f64,
    pub rho0: f64,
    /// Sound speed used by the model. Equals `1/sqrt(βρ₀)` unless overridden.
    pub c: f64,
}

impl PhysicalConstants {
    pub fn new(g: f64, beta: f64, rho0: f64) -> Result<Self, PhysicsError> {
        let g = require_positive("gravity", g)?;
        let c = sound_speed(beta, rho0)?;
        Ok(Self { g, beta, rho0, c })
    }

    pub fn with_sound_speed(self, c: f64) -> Result<Self, PhysicsError> {
        let c = require_positive("sound speed", c)?;
        Ok(Self { c, ..self })
    }

    pub fn rigid_sound_speed(&self) -> f64 {
        1.0 / (self.beta * self.rho0).sqrt()
    }
}

/// Bottom elevation along the pipe axis.
#[derive(Debug, Clone, PartialEq)]
pub enum AltitudeProfile {
    /// Straight pipe descending from `upstream` at `slope_deg` degrees below
    /// the horizontal: `Z(x) = upstream − x sin(slope)`.
    Slope { upstream: f64, slope_deg: f64 },
    /// Piecewise-linear table of `(x, z)` pairs with strictly increasing `x`.
    /// Constant extrapolation outside the table.
    Table(Vec<(f64, f64)>),
}

impl AltitudeProfile {
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self, PhysicsError> {
        if points.is_empty() {
            return Err(PhysicsError::AltitudeTable("no points".into()));
        }
        if points.iter().any(|(x, z)| !x.is_finite() || !z.is_finite()) {
            return Err(PhysicsError::AltitudeTable("non-finite entry".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(PhysicsError::AltitudeTable(
                "abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self::Table(points))
    }

    pub fn flat(z: f64) -> Self {
        Self::Slope { upstream: z, slope_deg: 0.0 }
    }

    pub fn at(&self, x: f64) -> f64 {
        match self {
            Self::Slope { upstream, slope_deg } => upstream - x * slope_deg.to_radians().sin(),
            Self::Table(points) => {
                let first = points[0];
                let last = points[points.len() - 1];
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = points.partition_point(|p| p.0 <= x);
                let (x0, z0) = points[k - 1];
                let (x1, z1) = points[k];
                z0 + (z1 - z0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeGeometry {
    pub length: f64,
    pub section: f64,
    pub perimeter: f64,
    pub diameter: f64,
    pub wall_thickness: f64,
    pub young_modulus: f64,
    pub altitude: AltitudeProfile,
}

impl PipeGeometry {
    /// Circular pipe of the given cross-section area. Diameter and perimeter
    /// are derived from the area.
    pub fn circular(
        length: f64,
        section: f64,
        wall_thickness: f64,
        young_modulus: f64,
        altitude: AltitudeProfile,
    ) -> Result<Self, PhysicsError> {
        let section = require_positive("section", section)?;
        let diameter = 2.0 * (section / PI).sqrt();
        Self {
            length,
            section,
            perimeter: PI * diameter,
            diameter,
            wall_thickness,
            young_modulus,
            altitude,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, PhysicsError> {
        require_positive("length", self.length)?;
        require_positive("section", self.section)?;
        require_positive("perimeter", self.perimeter)?;
        require_positive("diameter", self.diameter)?;
        require_positive("wall thickness", self.wall_thickness)?;
        require_positive("Young modulus", self.young_modulus)?;
        Ok(self)
    }

    pub fn hydraulic_radius(&self) -> f64 {
        self.section / self.perimeter
    }

    /// Elevation of the pipe crown (bottom + diameter) at `x`.
    pub fn crown(&self, x: f64) -> f64 {
        self.altitude.at(x) + self.diameter
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    pub enabled: bool,
    pub strickler: f64,
}

impl FrictionParams {
    pub const DISABLED: Self = Self { enabled: false, strickler: f64::INFINITY };

    pub fn strickler(ks: f64) -> Result<Self, PhysicsError> {
        Ok(Self { enabled: true, strickler: require_positive("Strickler coefficient", ks)? })
    }

    /// `K = 1/(Ks² Rh^{4/3})`, or zero when friction is off.
    pub fn coefficient(&self, geometry: &PipeGeometry) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let rh = geometry.hydraulic_radius();
        1.0 / (self.strickler * self.strickler * rh.powf(4.0 / 3.0))
    }
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self::DISABLED
    }
}

/// Finite-volume mesh with a piecewise-constant bottom `Z_i = Z(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    centers: Vec<f64>,
    widths: Vec<f64>,
    z_cells: Vec<f64>,
}

impl Mesh {
    pub fn new(centers: Vec<f64>, widths: Vec<f64>, z_cells: Vec<f64>) -> Result<Self, PhysicsError> {
        if centers.is_empty() {
            return Err(PhysicsError::Mesh("mesh has no cells".into()));
        }
        if centers.len() != widths.len() || centers.len() != z_cells.len() {
            return Err(PhysicsError::Mesh(format!(
                "length mismatch: {} centers, {} widths, {} altitudes",
                centers.len(),
                widths.len(),
                z_cells.len()
            )));
        }
        if let Some(i) = widths.iter().position(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(PhysicsError::Mesh(format!("width of cell {i} is {}", widths[i])));
        }
        if centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PhysicsError::Mesh("centers must be strictly increasing".into()));
        }
        if z_cells.iter().any(|z| !z.is_finite()) {
            return Err(PhysicsError::Mesh("non-finite altitude".into()));
        }
        Ok(Self { centers, widths, z_cells })
    }

    /// `cells` equal cells covering `[0, length]`, bottom sampled at centers.
    pub fn uniform(length: f64, cells: usize, altitude: &AltitudeProfile) -> Result<Self, PhysicsError> {
        require_positive("length", length)?;
        if cells == 0 {
            return Err(PhysicsError::Mesh("mesh has no cells".into()));
        }
        let h = length / cells as f64;
        let centers: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * h).collect();
        let z_cells = centers.iter().map(|&x| altitude.at(x)).collect();
        Self::new(centers, vec![h; cells], z_cells)
    }

    pub fn for_pipe(geometry: &PipeGeometry, cells: usize) -> Result<Self, PhysicsError> {
        Self::uniform(geometry.length, cells, &geometry.altitude)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn z_cells(&self) -> &[f64] {
        &self.z_cells
    }

    pub fn min_width(&self) -> f64 {
        self.widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same cells with the bottom replaced.
    pub fn with_altitudes(&self, z_cells: Vec<f64>) -> Result<Self, PhysicsError> {
        Self::new(self.centers.clone(), self.widths.clone(), z_cells)
    }
}

/// Conservative pair `(A, Q)` of a single cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub area: f64,
    pub discharge: f64,
}

impl CellState {
    pub fn new(area: f64, discharge: f64) -> Self {
        Self { area, discharge }
    }

    pub fn at_rest(area: f64) -> Self {
        Self { area, discharge: 0.0 }
    }

    pub fn velocity(&self) -> f64 {
        self.discharge / self.area
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub area: Vec<f64>,
    pub discharge: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn new(area: Vec<f64>, discharge: Vec<f64>, time: f64) -> Result<Self, PhysicsError> {
        if area.len() != discharge.len() {
            return Err(PhysicsError::StateLength { area: area.len(), discharge: discharge.len() });
        }
        for &a in &area {
            require_positive("area", a)?;
        }
        Ok(Self { area, discharge, time })
    }

    pub fn len(&self) -> usize {
        self.area.len()
    }

    pub fn is_empty(&self) -> bool {
        self.area.is_empty()
    }

    pub fn cell(&self, i: usize) -> CellState {
        CellState { area: self.area[i], discharge: self.discharge[i] }
    }

    pub fn velocity(&self, i: usize) -> f64 {
        self.discharge[i] / self.area[i]
    }

    /// `Σ h_i A_i`.
    pub fn total_mass(&self, mesh: &Mesh) -> f64 {
        self.area.iter().zip(mesh.widths()).map(|(a, h)| a * h).sum()
    }

    /// `Σ h_i Q_i`.
    pub fn total_momentum(&self, mesh: &Mesh) -> f64 {
        self.discharge.iter().zip(mesh.widths()).map(|(q, h)| q * h).sum()
    }

    /// `Σ h_i E(A_i, Q_i, Z_i)`.
    pub fn total_entropy(&self, mesh: &Mesh, c: f64, g: f64) -> Result<f64, PhysicsError> {
        let mut total = 0.0;
        for i in 0..self.len() {
            total += mesh.widths()[i] * entropy_cell(self.area[i], self.discharge[i], mesh.z_cells()[i], c, g)?;
        }
        Ok(total)
    }
}
