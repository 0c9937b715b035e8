//! Line-oriented `key = value` scenario files.
//!
//! ```text
//! # comment
//! pipe.length_m = 2000
//! upstream.kind = reservoir
//! upstream.head_m = 300
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use kinpipe::kinetic::KineticParams;
use kinpipe::physics::{
    effective_wave_speed, AltitudeProfile, FrictionParams, PhysicalConstants, PipeGeometry,
    STANDARD_GRAVITY,
};
use kinpipe::scenarios::{
    BoundaryCondition, BoundaryKind, ClosureShape, DischargeLaw, Scenario, Side,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("duplicate key `{key}` on lines {first} and {second}")]
    Duplicate { key: String, first: usize, second: usize },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("line {line}: `{key}`: {message}")]
    Value { key: String, line: usize, message: String },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Kinetic,
    Moc,
    Both,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kinetic => "kinetic",
            Self::Moc => "moc",
            Self::Both => "both",
        }
    }

    pub fn runs_kinetic(self) -> bool {
        matches!(self, Self::Kinetic | Self::Both)
    }

    pub fn runs_moc(self) -> bool {
        matches!(self, Self::Moc | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub solver: Solver,
    pub output_dir: PathBuf,
    pub cfl: f64,
}

const DEFAULT_COMPRESSIBILITY: f64 = 5.0e-10;
const DEFAULT_DENSITY: f64 = 1000.0;
const DEFAULT_CELLS: usize = 1000;
const DEFAULT_STRIDE: usize = 50;
const DEFAULT_CFL: f64 = 0.8;
const DEFAULT_OUTPUT_DIR: &str = "output";

const REQUIRED: &[&str] = &[
    "pipe.length_m",
    "pipe.section_m2",
    "pipe.wall_thickness_m",
    "pipe.young_modulus_pa",
    "upstream.kind",
    "downstream.kind",
    "run.t_end_s",
];

const BOUNDARY_KEYS: &[&str] = &["kind", "head_m", "closure", "close_time_s", "discharge_m3s"];

const OTHER_KEYS: &[&str] = &[
    "pipe.length_m",
    "pipe.section_m2",
    "pipe.wall_thickness_m",
    "pipe.young_modulus_pa",
    "pipe.upstream_altitude_m",
    "pipe.slope_deg",
    "pipe.altitude_table",
    "physics.gravity",
    "physics.compressibility",
    "physics.density",
    "physics.wave_speed",
    "friction.enabled",
    "friction.strickler",
    "mesh.cells",
    "flow.initial_discharge_m3s",
    "run.t_end_s",
    "run.output_stride",
    "run.probes_m",
    "run.solver",
    "run.output_dir",
    "run.cfl",
];

fn is_known(key: &str) -> bool {
    if OTHER_KEYS.contains(&key) {
        return true;
    }
    match key.split_once('.') {
        Some((side, rest)) => matches!(side, "upstream" | "downstream") && BOUNDARY_KEYS.contains(&rest),
        None => false,
    }
}

struct Entry {
    value: String,
    line: usize,
}

/// Parsed entries with bookkeeping of which keys the builder consumed.
struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty()
                || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
            {
                return Err(ConfigError::Syntax { line, message: format!("malformed key `{key}`") });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax { line, message: format!("empty value for `{key}`") });
            }
            if !is_known(key) {
                return Err(ConfigError::UnknownKey { key: key.to_string(), line });
            }
            if let Some(previous) = entries.get(key) {
                return Err(ConfigError::Duplicate { key: key.to_string(), first: previous.line, second: line });
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        let missing: Vec<String> =
            REQUIRED.iter().filter(|k| !entries.contains_key(**k)).map(|k| k.to_string()).collect();
        if !missing.is_empty() {
            return Err(ConfigError::Missing(missing));
        }
        Ok(Self { entries })
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<Entry, ConfigError> {
        self.take(key).ok_or_else(|| ConfigError::Missing(vec![key.to_string()]))
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key).map(|e| parse_number(key, &e)).transpose()
    }

    fn required_number(&mut self, key: &str) -> Result<f64, ConfigError> {
        let entry = self.require(key)?;
        parse_number(key, &entry)
    }

    fn integer(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.take(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| value_error(key, &e, "expected a non-negative integer"))
            })
            .transpose()
    }

    fn leftover(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, entry)) => Err(ConfigError::Value {
                message: "not used by this configuration".into(),
                key,
                line: entry.line,
            }),
        }
    }
}

fn value_error(key: &str, entry: &Entry, message: &str) -> ConfigError {
    ConfigError::Value { key: key.to_string(), line: entry.line, message: format!("{message}, got `{}`", entry.value) }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

fn parse_number(key: &str, entry: &Entry) -> Result<f64, ConfigError> {
    match entry.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(value_error(key, entry, "expected a finite number")),
    }
}

fn parse_list(key: &str, entry: &Entry) -> Result<Vec<f64>, ConfigError> {
    entry
        .value
        .split(',')
        .map(|item| match item.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(value_error(key, entry, "expected a comma-separated list of numbers")),
        })
        .collect()
}

fn parse_table(key: &str, entry: &Entry) -> Result<Vec<(f64, f64)>, ConfigError> {
    entry
        .value
        .split(',')
        .map(|pair| {
            let parsed = pair.split_once(':').and_then(|(x, z)| {
                let x = x.trim().parse::<f64>().ok()?;
                let z = z.trim().parse::<f64>().ok()?;
                Some((x, z))
            });
            parsed.ok_or_else(|| value_error(key, entry, "expected `x:z` pairs separated by commas"))
        })
        .collect()
}

fn positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(key, format!("must be positive, got {value}")))
    }
}

fn boundary(doc: &mut Document, side: Side, initial_discharge: f64) -> Result<BoundaryCondition, ConfigError> {
    let prefix = match side {
        Side::Upstream => "upstream",
        Side::Downstream => "downstream",
    };
    let key = |name: &str| format!("{prefix}.{name}");
    let kind_entry = doc.require(&key("kind"))?;
    let kind = match kind_entry.value.as_str() {
        "reservoir" => BoundaryKind::Reservoir { head: doc.required_number(&key("head_m"))? },
        "valve" => {
            let shape = match doc.take(&key("closure")) {
                None => ClosureShape::Linear,
                Some(e) => match e.value.as_str() {
                    "linear" => ClosureShape::Linear,
                    "cosine" => ClosureShape::Cosine,
                    "instantaneous" => ClosureShape::Instantaneous,
                    _ => return Err(value_error(&key("closure"), &e, "expected linear, cosine or instantaneous")),
                },
            };
            let close_time = positive(&key("close_time_s"), doc.required_number(&key("close_time_s"))?)?;
            BoundaryKind::PrescribedDischarge(DischargeLaw::Closure { initial: initial_discharge, close_time, shape })
        }
        "discharge" => {
            BoundaryKind::PrescribedDischarge(DischargeLaw::Constant(doc.required_number(&key("discharge_m3s"))?))
        }
        "wall" => BoundaryKind::Wall,
        "periodic" => BoundaryKind::Periodic,
        _ => {
            return Err(value_error(
                &key("kind"),
                &kind_entry,
                "expected reservoir, valve, discharge, wall or periodic",
            ))
        }
    };
    Ok(BoundaryCondition::new(kind, side))
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut doc = Document::parse(text)?;

    let length = positive("pipe.length_m", doc.required_number("pipe.length_m")?)?;
    let section = positive("pipe.section_m2", doc.required_number("pipe.section_m2")?)?;
    let wall = positive("pipe.wall_thickness_m", doc.required_number("pipe.wall_thickness_m")?)?;
    let young = positive("pipe.young_modulus_pa", doc.required_number("pipe.young_modulus_pa")?)?;
    let altitude = match doc.take("pipe.altitude_table") {
        Some(entry) => {
            if doc.entries.contains_key("pipe.slope_deg") || doc.entries.contains_key("pipe.upstream_altitude_m") {
                return Err(invalid("pipe.altitude_table", "give either a table or a slope, not both"));
            }
            AltitudeProfile::table(parse_table("pipe.altitude_table", &entry)?)
                .map_err(|e| invalid("pipe.altitude_table", e.to_string()))?
        }
        None => AltitudeProfile::Slope {
            upstream: doc.required_number("pipe.upstream_altitude_m")?,
            slope_deg: doc.number("pipe.slope_deg")?.unwrap_or(0.0),
        },
    };
    let geometry = PipeGeometry::circular(length, section, wall, young, altitude)
        .map_err(|e| invalid("pipe", e.to_string()))?;

    let g = positive("physics.gravity", doc.number("physics.gravity")?.unwrap_or(STANDARD_GRAVITY))?;
    let beta = positive(
        "physics.compressibility",
        doc.number("physics.compressibility")?.unwrap_or(DEFAULT_COMPRESSIBILITY),
    )?;
    let rho0 = positive("physics.density", doc.number("physics.density")?.unwrap_or(DEFAULT_DENSITY))?;
    let rigid = PhysicalConstants::new(g, beta, rho0).map_err(|e| invalid("physics", e.to_string()))?;
    let c = match doc.take("physics.wave_speed") {
        None => elastic(&rigid, &geometry)?,
        Some(e) => match e.value.as_str() {
            "elastic" => elastic(&rigid, &geometry)?,
            "rigid" => rigid.rigid_sound_speed(),
            _ => positive("physics.wave_speed", parse_number("physics.wave_speed", &e)?)?,
        },
    };
    let constants = rigid.with_sound_speed(c).map_err(|e| invalid("physics.wave_speed", e.to_string()))?;

    let enabled = match doc.take("friction.enabled") {
        None => false,
        Some(e) => match e.value.as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(value_error("friction.enabled", &e, "expected true or false")),
        },
    };
    let strickler = match doc.number("friction.strickler")? {
        Some(ks) => positive("friction.strickler", ks)?,
        None if enabled => return Err(ConfigError::Missing(vec!["friction.strickler".into()])),
        None => f64::INFINITY,
    };
    let friction = FrictionParams { enabled, strickler };

    let mesh_cells = doc.integer("mesh.cells")?.unwrap_or(DEFAULT_CELLS);
    if mesh_cells < 2 {
        return Err(invalid("mesh.cells", format!("need at least 2 cells, got {mesh_cells}")));
    }
    let initial_discharge = doc.number("flow.initial_discharge_m3s")?.unwrap_or(0.0);
    let upstream = boundary(&mut doc, Side::Upstream, initial_discharge)?;
    let downstream = boundary(&mut doc, Side::Downstream, initial_discharge)?;

    let t_end = doc.required_number("run.t_end_s")?;
    if t_end < 0.0 {
        return Err(invalid("run.t_end_s", format!("must be non-negative, got {t_end}")));
    }
    let output_stride = doc.integer("run.output_stride")?.unwrap_or(DEFAULT_STRIDE);
    if output_stride == 0 {
        return Err(invalid("run.output_stride", "must be at least 1"));
    }
    let probes = match doc.take("run.probes_m") {
        Some(e) => parse_list("run.probes_m", &e)?,
        None => vec![length / 2.0],
    };
    if let Some(x) = probes.iter().find(|x| !(**x >= 0.0 && **x <= length)) {
        return Err(invalid("run.probes_m", format!("probe at {x} m lies outside [0, {length}]")));
    }
    let solver = match doc.take("run.solver") {
        None => Solver::Kinetic,
        Some(e) => match e.value.as_str() {
            "kinetic" => Solver::Kinetic,
            "moc" => Solver::Moc,
            "both" => Solver::Both,
            _ => return Err(value_error("run.solver", &e, "expected kinetic, moc or both")),
        },
    };
    let output_dir = PathBuf::from(doc.take("run.output_dir").map(|e| e.value).unwrap_or(DEFAULT_OUTPUT_DIR.into()));
    let cfl = doc.number("run.cfl")?.unwrap_or(DEFAULT_CFL);
    KineticParams::new(cfl).map_err(|e| invalid("run.cfl", e.to_string()))?;
    doc.leftover()?;

    for bc in [&upstream, &downstream] {
        if let BoundaryKind::Reservoir { head } = bc.kind {
            let x = if bc.side == Side::Upstream { 0.0 } else { length };
            let crown = geometry.crown(x);
            if !(head > crown) {
                let key = if bc.side == Side::Upstream { "upstream.head_m" } else { "downstream.head_m" };
                return Err(invalid(key, format!("head {head} m must exceed the pipe crown at {crown} m")));
            }
        }
    }
    let scenario = Scenario {
        geometry,
        constants,
        friction,
        mesh_cells,
        upstream,
        downstream,
        initial_discharge,
        t_end,
        output_stride,
        probes,
    };
    scenario.validate().map_err(|e| invalid("scenario", e.to_string()))?;
    Ok(RunConfig { scenario, solver, output_dir, cfl })
}

fn elastic(rigid: &PhysicalConstants, geometry: &PipeGeometry) -> Result<f64, ConfigError> {
    effective_wave_speed(rigid.c, geometry.diameter, geometry.wall_thickness, geometry.young_modulus, rigid.beta)
        .map_err(|e| invalid("physics.wave_speed", e.to_string()))
}

/// Inverse of [`parse_config`]: `parse_config(&emit_config(c)) == Ok(c)`.
pub fn emit_config(config: &RunConfig) -> String {
    let s = &config.scenario;
    let geom = &s.geometry;
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    put("pipe.length_m", geom.length.to_string());
    put("pipe.section_m2", geom.section.to_string());
    put("pipe.wall_thickness_m", geom.wall_thickness.to_string());
    put("pipe.young_modulus_pa", geom.young_modulus.to_string());
    match &geom.altitude {
        AltitudeProfile::Slope { upstream, slope_deg } => {
            put("pipe.upstream_altitude_m", upstream.to_string());
            put("pipe.slope_deg", slope_deg.to_string());
        }
        AltitudeProfile::Table(points) => {
            let pairs: Vec<String> = points.iter().map(|(x, z)| format!("{x}:{z}")).collect();
            put("pipe.altitude_table", pairs.join(", "));
        }
    }
    put("physics.gravity", s.constants.g.to_string());
    put("physics.compressibility", s.constants.beta.to_string());
    put("physics.density", s.constants.rho0.to_string());
    put("physics.wave_speed", s.constants.c.to_string());
    put("friction.enabled", s.friction.enabled.to_string());
    if s.friction.strickler.is_finite() {
        put("friction.strickler", s.friction.strickler.to_string());
    }
    put("mesh.cells", s.mesh_cells.to_string());
    put("flow.initial_discharge_m3s", s.initial_discharge.to_string());
    for (prefix, bc) in [("upstream", &s.upstream), ("downstream", &s.downstream)] {
        match bc.kind {
            BoundaryKind::Reservoir { head } => {
                put(&format!("{prefix}.kind"), "reservoir".into());
                put(&format!("{prefix}.head_m"), head.to_string());
            }
            BoundaryKind::PrescribedDischarge(DischargeLaw::Closure { close_time, shape, .. }) => {
                put(&format!("{prefix}.kind"), "valve".into());
                put(&format!("{prefix}.closure"), shape.name().into());
                put(&format!("{prefix}.close_time_s"), close_time.to_string());
            }
            BoundaryKind::PrescribedDischarge(DischargeLaw::Constant(q)) => {
                put(&format!("{prefix}.kind"), "discharge".into());
                put(&format!("{prefix}.discharge_m3s"), q.to_string());
            }
            BoundaryKind::Wall => put(&format!("{prefix}.kind"), "wall".into()),
            BoundaryKind::Periodic => put(&format!("{prefix}.kind"), "periodic".into()),
        }
    }
    put("run.t_end_s", s.t_end.to_string());
    put("run.output_stride", s.output_stride.to_string());
    let probes: Vec<String> = s.probes.iter().map(|x| x.to_string()).collect();
    put("run.probes_m", probes.join(", "));
    put("run.solver", config.solver.name().into());
    put("run.output_dir", config.output_dir.display().to_string());
    put("run.cfl", config.cfl.to_string());
    out
}
