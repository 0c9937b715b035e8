//! Test-only oracle: kinetic interface fluxes by adaptive Gauss-Kronrod
//! quadrature of the upwinded densities, written directly from their
//! reflection/transmission definitions in the microscopic velocity ξ.
#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * half, (k - g).abs() * half)
}

/// Adaptive integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (whole, err) = kronrod(f, a, b);
        let (left, err_l) = kronrod(f, a, m);
        let (right, err_r) = kronrod(f, m, b);
        let split = left + right;
        // Gauss nodes never touch the panel ends, so a jump sitting between
        // the outermost node and an end is invisible to every Kronrod
        // estimate. Simpson samples the ends and exposes it.
        let simpson = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        let settled = err <= tol
            && err_l + err_r <= tol
            && (whole - split).abs() <= tol
            && (simpson - split).abs() <= tol.max(1e-6 * split.abs());
        if settled || depth >= 80 || (b - a) <= 1e-15 * (a.abs() + b.abs()) {
            return split;
        }
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    recurse(f, a, b, tol, 0)
}

/// Like [`integrate`], splitting `[a, b]` at every point of `breaks` inside it
/// (the QUADPACK `points` idea): known discontinuities become panel ends.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut points: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite() && *x > a && *x < b).collect();
    points.push(a);
    points.push(b);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let pieces = (points.len() - 1) as f64;
    points.windows(2).map(|w| integrate(f, w[0], w[1], tol / pieces)).sum()
}

/// Every ξ where one of the indicator functions of the upwinded densities can
/// switch: 0, `±sqrt(φ)`, support edges `e` of either equilibrium, their
/// mirrors, and the edges mapped through `ξ² = e² + φ`.
fn switch_points(cells: &[Cell], c: f64, barriers: &[f64]) -> Vec<f64> {
    let half = c * 3f64.sqrt();
    let mut points = vec![0.0];
    for &phi in barriers {
        if phi > 0.0 {
            points.extend([phi.sqrt(), -phi.sqrt()]);
        }
    }
    for cell in cells {
        for edge in [cell.velocity() - half, cell.velocity() + half] {
            points.extend([edge, -edge]);
            for &phi in barriers {
                let sq = edge * edge + phi;
                if sq >= 0.0 {
                    points.extend([sq.sqrt(), -sq.sqrt()]);
                }
            }
        }
    }
    points
}

#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub area: f64,
    pub discharge: f64,
}

impl Cell {
    pub fn velocity(&self) -> f64 {
        self.discharge / self.area
    }
}

/// Rectangular equilibrium density at ξ.
pub fn equilibrium(cell: Cell, c: f64, xi: f64) -> f64 {
    let half = c * 3f64.sqrt();
    if (xi - cell.velocity()).abs() <= half {
        cell.area / (2.0 * half)
    } else {
        0.0
    }
}

/// Density used by the left cell at the interface.
pub fn density_minus(xi: f64, left: Cell, right: Cell, z_left: f64, z_right: f64, c: f64, g: f64) -> f64 {
    let barrier = 2.0 * g * (z_right - z_left);
    let mut value = 0.0;
    if xi >= 0.0 {
        value += equilibrium(left, c, xi);
    }
    if xi <= 0.0 && xi * xi <= barrier {
        value += equilibrium(left, c, -xi);
    }
    if xi <= 0.0 && xi * xi >= barrier {
        value += equilibrium(right, c, -(xi * xi - barrier).sqrt());
    }
    value
}

/// Density used by the right cell at the interface.
pub fn density_plus(xi: f64, left: Cell, right: Cell, z_left: f64, z_right: f64, c: f64, g: f64) -> f64 {
    let barrier = 2.0 * g * (z_left - z_right);
    let mut value = 0.0;
    if xi <= 0.0 {
        value += equilibrium(right, c, xi);
    }
    if xi >= 0.0 && xi * xi <= barrier {
        value += equilibrium(right, c, -xi);
    }
    if xi >= 0.0 && xi * xi >= barrier {
        value += equilibrium(left, c, (xi * xi - barrier).sqrt());
    }
    value
}

/// `((F⁻_A, F⁻_Q), (F⁺_A, F⁺_Q))` by quadrature.
pub fn interface_fluxes(
    left: Cell,
    right: Cell,
    z_left: f64,
    z_right: f64,
    c: f64,
    g: f64,
) -> ((f64, f64), (f64, f64)) {
    let speed = left.velocity().abs().max(right.velocity().abs()) + c * 3f64.sqrt();
    let reach = (speed * speed + 2.0 * g * (z_right - z_left).abs()).sqrt() * 1.01 + 1.0;
    let scale = left.area.max(right.area) * (c + speed) * (c + speed);
    let tol = 1e-14 * scale;
    let barrier = 2.0 * g * (z_right - z_left);
    let breaks = switch_points(&[left, right], c, &[barrier, -barrier]);
    let moment = |density: &dyn Fn(f64) -> f64, power: i32| {
        let f = |xi: f64| xi.powi(power) * density(xi);
        integrate_with_breaks(&f, -reach, reach, &breaks, tol)
    };
    let minus = |xi: f64| density_minus(xi, left, right, z_left, z_right, c, g);
    let plus = |xi: f64| density_plus(xi, left, right, z_left, z_right, c, g);
    (
        (moment(&minus, 1), moment(&minus, 2)),
        (moment(&plus, 1), moment(&plus, 2)),
    )
}

/// `(∫ ξ M(±sqrt(ξ² − φ)), ∫ ξ² M(±sqrt(ξ² − φ)))` over the chosen half-line
/// restricted to `ξ² ≥ φ`.
pub fn shifted_moments(cell: Cell, c: f64, barrier: f64, positive: bool) -> (f64, f64) {
    let speed = cell.velocity().abs() + c * 3f64.sqrt();
    let reach = (speed * speed + barrier.abs()).sqrt() * 1.01 + 1.0;
    let tol = 1e-14 * cell.area * (c + speed) * (c + speed);
    let density = |xi: f64| {
        if xi * xi < barrier {
            return 0.0;
        }
        let v = (xi * xi - barrier).sqrt();
        equilibrium(cell, c, if positive { v } else { -v })
    };
    let (a, b) = if positive { (0.0, reach) } else { (-reach, 0.0) };
    let breaks = switch_points(&[cell], c, &[barrier]);
    (
        integrate_with_breaks(&|xi: f64| xi * density(xi), a, b, &breaks, tol),
        integrate_with_breaks(&|xi: f64| xi * xi * density(xi), a, b, &breaks, tol),
    )
}

/// One explicit step of the finite-volume update with quadrature fluxes.
/// `cells` includes one ghost at each end; ghosts share their neighbour's altitude.
pub fn step(cells: &[Cell], z: &[f64], widths: &[f64], dt: f64, c: f64, g: f64) -> Vec<Cell> {
    let n = cells.len() - 2;
    let zext = |k: usize| z[k.saturating_sub(1).min(n - 1)];
    let fluxes: Vec<_> = (0..=n)
        .map(|k| interface_fluxes(cells[k], cells[k + 1], zext(k), zext(k + 1), c, g))
        .collect();
    (0..n)
        .map(|i| {
            let r = dt / widths[i];
            let (out, inn) = (fluxes[i + 1].0, fluxes[i].1);
            Cell {
                area: cells[i + 1].area - r * (out.0 - inn.0),
                discharge: cells[i + 1].discharge - r * (out.1 - inn.1),
            }
        })
        .collect()
}
