//! Mollified, floor-lifted, boundary-blended initial data.

use std::fmt;
use std::sync::{Arc, OnceLock};

use super::{BoundarySpec, FluidField, Grid};
use crate::error::{Error, Result};
use crate::geometry::NozzleProfile;
use crate::quadrature::GaussJacobi;
use crate::thermo::GasLaw;

pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Raw `(rho_0, m_0)` plus the regularization widths.
#[derive(Clone)]
pub struct InitialData {
    pub rho: Arc<ScalarFn>,
    pub m: Arc<ScalarFn>,
    /// Mollifier half-width; 0 disables mollification.
    pub mollifier_width: f64,
    /// Distance over which data are blended into the boundary values.
    pub blend_width: f64,
    /// Lower bound enforced by a smooth lift.
    pub floor: f64,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialData")
            .field("mollifier_width", &self.mollifier_width)
            .field("blend_width", &self.blend_width)
            .field("floor", &self.floor)
            .finish_non_exhaustive()
    }
}

impl InitialData {
    pub fn new(
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        m: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            rho: Arc::new(rho),
            m: Arc::new(m),
            mollifier_width: 0.0,
            blend_width: 0.0,
            floor: 1e-6,
        }
    }

    pub fn constant(rho: f64, m: f64) -> Self {
        Self::new(move |_| rho, move |_| m)
    }

    /// Step from `(rho_l, m_l)` to `(rho_r, m_r)` at `x0`.
    pub fn riemann(x0: f64, left: (f64, f64), right: (f64, f64)) -> Self {
        Self::new(
            move |x| if x < x0 { left.0 } else { right.0 },
            move |x| if x < x0 { left.1 } else { right.1 },
        )
    }

    pub fn with_mollifier(mut self, h: f64) -> Self {
        self.mollifier_width = h;
        self
    }

    pub fn with_blend(mut self, l: f64) -> Self {
        self.blend_width = l;
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }
}

/// `exp(-1/(1-y^2))` on `|y| < 1`.
pub fn bump(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

fn mollifier_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let g = GaussJacobi::symmetric(96, 0.0).expect("Legendre rule");
        let w: Vec<f64> = g.iter().map(|(y, w)| w * bump(y)).collect();
        let total: f64 = w.iter().sum();
        (g.nodes().to_vec(), w.into_iter().map(|w| w / total).collect())
    })
}

/// `f * J_h` at `x`, written as a correction to `f(x)` so constants pass through exactly.
fn mollify(f: &ScalarFn, x: f64, h: f64) -> f64 {
    let f0 = f(x);
    if h == 0.0 {
        return f0;
    }
    let (ys, ws) = mollifier_rule();
    f0 + ys
        .iter()
        .zip(ws)
        .map(|(y, w)| w * (f(x - h * y) - f0))
        .sum::<f64>()
}

/// `rho + floor exp(-rho/floor)`: smooth, increasing, at least `floor` for `rho >= 0`.
fn lift(rho: f64, floor: f64) -> f64 {
    if floor <= 0.0 {
        rho
    } else {
        let r = rho.max(0.0);
        r + floor * (-r / floor).exp()
    }
}

/// C-infinity step from 0 at `s <= 0` to 1 at `s >= 1`.
fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// Builds the discrete initial field from raw data.
pub fn prepare_initial_data(
    raw: &InitialData,
    bc: &BoundarySpec,
    gas: &GasLaw,
    profile: &NozzleProfile,
    grid: Grid,
) -> Result<FluidField> {
    let _ = gas;
    let (a, b) = (grid.a(), grid.b());
    let l = raw.blend_width;
    if !(l >= 0.0 && l.is_finite()) || l >= 0.25 * (b - a) {
        return Err(Error::config(format!(
            "blend width {l} must be below a quarter of the interval length {}",
            b - a
        )));
    }
    if !(raw.mollifier_width >= 0.0 && raw.mollifier_width.is_finite()) {
        return Err(Error::config("mollifier width must be nonnegative"));
    }
    if !(raw.floor >= 0.0 && raw.floor.is_finite()) {
        return Err(Error::config("density floor must be nonnegative"));
    }
    if !profile.contains(a) || !profile.contains(b) {
        return Err(Error::domain("grid leaves the profile domain"));
    }
    let h = raw.mollifier_width;
    let smooth = |x: f64| {
        (
            lift(mollify(raw.rho.as_ref(), x, h), raw.floor),
            mollify(raw.m.as_ref(), x, h),
        )
    };
    let t0 = 0.0;
    let left = bc.left(t0);
    let right = bc.right(t0);
    // Neumann end: flatten the density onto its value at distance l.
    let left_target = left.unwrap_or_else(|| [smooth(a + l).0, 0.0]);
    let blend = |d: f64| if l == 0.0 { 1.0 } else { smooth_step((d - 0.5 * l) / (0.5 * l)) };
    let mut rho = Vec::with_capacity(grid.len());
    let mut m = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let x = grid.x(i);
        let (mut r, mut q) = smooth(x);
        let sl = blend(x - a);
        r = left_target[0] + sl * (r - left_target[0]);
        q = left_target[1] + sl * (q - left_target[1]);
        let sr = blend(b - x);
        r = right[0] + sr * (r - right[0]);
        q = right[1] + sr * (q - right[1]);
        if !(r.is_finite() && q.is_finite()) {
            return Err(Error::config(format!("initial data not finite at x = {x}")));
        }
        rho.push(r);
        m.push(q);
    }
    bc.impose(t0, &mut rho, &mut m);
    FluidField::new(grid, rho, m, t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::relative_energy_at;

    fn gas() -> GasLaw {
        GasLaw::new(1.4, 1e-4).unwrap()
    }

    #[test]
    fn constant_data_pass_through() {
        let grid = Grid::new(-4.0, 4.0, 80).unwrap();
        let bc = BoundarySpec::DirichletNozzle {
            rho_minus: 0.8,
            m_minus: 0.2,
            rho_plus: 0.8,
            m_plus: 0.2,
        };
        let raw = InitialData::constant(0.8, 0.2).with_mollifier(0.1).with_blend(0.5);
        let f = prepare_initial_data(&raw, &bc, &gas(), &NozzleProfile::unit(), grid).unwrap();
        assert_eq!(f, FluidField::constant(grid, 0.8, 0.2));
    }

    #[test]
    fn riemann_data_monotone_with_exact_ends() {
        let grid = Grid::new(-2.0, 2.0, 400).unwrap();
        let bc = BoundarySpec::DirichletNozzle {
            rho_minus: 1.0,
            m_minus: 0.0,
            rho_plus: 0.125,
            m_plus: 0.0,
        };
        let raw = InitialData::riemann(0.0, (1.0, 0.0), (0.125, 0.0))
            .with_mollifier(0.05)
            .with_blend(0.4);
        let f = prepare_initial_data(&raw, &bc, &gas(), &NozzleProfile::unit(), grid).unwrap();
        assert!(f.rho.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert_eq!((f.rho[0], f.rho[400]), (1.0, 0.125));
        // identical to the boundary values within l/2 of the ends
        assert!(f.rho[..=50].iter().all(|&r| r == 1.0));
        assert!(f.rho[350..].iter().all(|&r| r == 0.125));
        // smooth: second differences bounded by the mollifier scale
        let dx = grid.dx();
        let d2 = f
            .rho
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs() / (dx * dx))
            .fold(0.0, f64::max);
        assert!(d2 < 0.875 * 60.0 / (0.05 * 0.05), "{d2}");
    }

    #[test]
    fn blend_width_limit() {
        let grid = Grid::new(0.0, 1.0, 40).unwrap();
        let bc = BoundarySpec::DirichletNozzle {
            rho_minus: 1.0,
            m_minus: 0.0,
            rho_plus: 1.0,
            m_plus: 0.0,
        };
        let raw = InitialData::constant(1.0, 0.0).with_blend(0.25);
        assert!(matches!(
            prepare_initial_data(&raw, &bc, &gas(), &NozzleProfile::unit(), grid),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn gaussian_bump_relative_energy_preserved() {
        let g = gas();
        let grid = Grid::new(-6.0, 6.0, 2400).unwrap();
        let bc = BoundarySpec::DirichletNozzle {
            rho_minus: 1.0,
            m_minus: 0.0,
            rho_plus: 1.0,
            m_plus: 0.0,
        };
        let bump_rho = |x: f64| 1.0 + 0.5 * (-x * x).exp();
        let raw = InitialData::new(bump_rho, |_| 0.0)
            .with_mollifier(0.1)
            .with_blend(1.0);
        let f = prepare_initial_data(&raw, &bc, &g, &NozzleProfile::unit(), grid).unwrap();
        let dx = grid.dx();
        let prepared: f64 = (0..grid.len())
            .map(|i| relative_energy_at(&g, 1.0, 0.0, f.rho[i], f.m[i]) * dx)
            .sum();
        // oracle: raw relative energy by adaptive quadrature
        let exact = crate::quadrature::adaptive_gauss_kronrod(
            |x| relative_energy_at(&g, 1.0, 0.0, bump_rho(x), 0.0),
            -6.0,
            6.0,
            1e-12,
        )
        .unwrap();
        let ratio = prepared / exact;
        assert!((0.95..=1.05).contains(&ratio), "{ratio}");
    }

    #[test]
    fn neumann_end_is_flat() {
        let gas = GasLaw::new(2.0, 1e-4).unwrap();
        let grid = Grid::new(0.1, 4.0, 390).unwrap();
        let bc = BoundarySpec::NeumannSpherical { rho_bar: 1.0 };
        let raw = InitialData::new(|x| 1.0 + (-(x - 1.0) * (x - 1.0)).exp(), |_| 0.0).with_blend(0.5);
        let p = NozzleProfile::spherical(3).unwrap();
        let f = prepare_initial_data(&raw, &bc, &gas, &p, grid).unwrap();
        assert_eq!(f.rho[0], f.rho[10]);
        assert_eq!(f.m[0], 0.0);
        assert_eq!(f.rho[390], 1.0);
    }
}
