//! Polytropic gas law with the quadratic pressure modifier, internal energy
//! functions, sound speed and Riemann invariants.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss_kronrod;

/// Densities at or below this value are treated as vacuum in velocity formulas.
pub const RHO_FLOOR: f64 = 1e-12;

/// `p(rho) = kappa rho^gamma + delta rho^2`.
#[derive(Debug, Clone)]
pub struct GasLaw {
    gamma: f64,
    kappa: f64,
    delta: f64,
    theta: f64,
    lambda_exp: f64,
    sound_scale: f64,
    riemann_table: Option<Arc<RiemannTable>>,
}

/// `(gamma - 1)^2 / (4 gamma)`, the normalization under which `sqrt(p') = theta rho^theta`.
pub fn default_kappa(gamma: f64) -> f64 {
    (gamma - 1.0).powi(2) / (4.0 * gamma)
}

impl GasLaw {
    /// Gas law with the default pressure constant.
    pub fn new(gamma: f64, delta: f64) -> Result<Self> {
        Self::with_kappa(gamma, default_kappa(gamma), delta)
    }

    pub fn with_kappa(gamma: f64, kappa: f64, delta: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::domain(format!("adiabatic exponent {gamma} must exceed 1")));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::domain(format!("pressure constant {kappa} must be positive")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::domain(format!("pressure modifier {delta} must be >= 0")));
        }
        let mut gas = Self {
            gamma,
            kappa,
            delta,
            theta: 0.5 * (gamma - 1.0),
            lambda_exp: (3.0 - gamma) / (2.0 * (gamma - 1.0)),
            sound_scale: if kappa == default_kappa(gamma) {
                1.0
            } else {
                2.0 * (kappa * gamma).sqrt() / (gamma - 1.0)
            },
            riemann_table: None,
        };
        if delta > 0.0 {
            gas.riemann_table = Some(Arc::new(RiemannTable::build(&gas)?));
        }
        Ok(gas)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    /// `(gamma - 1) / 2`.
    pub fn theta(&self) -> f64 {
        self.theta
    }
    /// Kernel exponent `(3 - gamma) / (2 (gamma - 1))`.
    pub fn lambda_exp(&self) -> f64 {
        self.lambda_exp
    }

    /// `sqrt(kappa gamma) / theta`; equals 1 under the default normalization.
    pub fn sound_scale(&self) -> f64 {
        self.sound_scale
    }

    /// Same law with the quadratic modifier removed.
    pub fn without_modifier(&self) -> Self {
        Self {
            delta: 0.0,
            riemann_table: None,
            ..self.clone()
        }
    }

    fn check_rho(rho: f64) -> Result<()> {
        if rho.is_nan() || rho < 0.0 {
            Err(Error::domain(format!("density {rho} must be non-negative")))
        } else {
            Ok(())
        }
    }

    /// `kappa rho^gamma + delta rho^2`.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        Ok(self.pressure_unchecked(rho))
    }

    #[inline]
    pub(crate) fn pressure_unchecked(&self, rho: f64) -> f64 {
        self.kappa * rho.powf(self.gamma) + self.delta * rho * rho
    }

    /// `p'(rho) = kappa gamma rho^(gamma-1) + 2 delta rho`.
    #[inline]
    pub fn dpressure(&self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        self.kappa * self.gamma * r.powf(self.gamma - 1.0) + 2.0 * self.delta * r
    }

    #[inline]
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.dpressure(rho).sqrt()
    }

    /// `h(rho) = rho ∫_0^rho p(s)/s^2 ds = kappa rho^gamma/(gamma-1) + delta rho^2`.
    pub fn h_delta(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        Ok(self.h_unchecked(rho))
    }

    #[inline]
    pub(crate) fn h_unchecked(&self, rho: f64) -> f64 {
        self.kappa * rho.powf(self.gamma) / (self.gamma - 1.0) + self.delta * rho * rho
    }

    /// `e(rho) = h(rho) / rho`; zero at vacuum.
    pub fn e_delta(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(self.kappa * rho.powf(self.gamma - 1.0) / (self.gamma - 1.0) + self.delta * rho)
    }

    /// `h'(rho)`.
    #[inline]
    pub fn dh_delta(&self, rho: f64) -> f64 {
        let r = rho.max(0.0);
        self.kappa * self.gamma * r.powf(self.gamma - 1.0) / (self.gamma - 1.0)
            + 2.0 * self.delta * r
    }

    /// `h''(rho) = p'(rho) / rho`, evaluated with the density floor.
    #[inline]
    pub fn d2h_delta(&self, rho: f64) -> f64 {
        let r = rho.max(RHO_FLOOR);
        self.kappa * self.gamma * r.powf(self.gamma - 2.0) + 2.0 * self.delta
    }

    /// `R(rho) = ∫_0^rho sqrt(p'(s))/s ds`.
    pub fn riemann_r(&self, rho: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        Ok(self.riemann_r_unchecked(rho))
    }

    pub(crate) fn riemann_r_unchecked(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        match &self.riemann_table {
            None => self.sound_scale() * rho.powf(self.theta),
            Some(t) => t.eval(self, rho),
        }
    }

    /// Riemann invariants `(u + R, u - R)`.
    pub fn riemann_invariants(&self, rho: f64, u: f64) -> Result<(f64, f64)> {
        if rho.is_nan() || rho <= 0.0 {
            return Err(Error::domain(format!("density {rho} must be positive")));
        }
        let r = self.riemann_r_unchecked(rho);
        Ok((u + r, u - r))
    }

    /// Characteristic speeds `u ∓ sqrt(p')`.
    pub fn eigenvalues(&self, rho: f64, u: f64) -> (f64, f64) {
        let c = self.sound_speed(rho);
        (u - c, u + c)
    }

    /// Direct evaluation of `R(rho)` by adaptive quadrature (absolute tolerance `tol`).
    pub fn riemann_r_quadrature(&self, rho: f64, tol: f64) -> Result<f64> {
        Self::check_rho(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        // s = rho t^k flattens the endpoint singularity of sqrt(p'(s))/s.
        let slowest = (self.gamma - 1.0).min(1.0);
        let k = (4.0 / slowest).max(4.0);
        let f = |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                k * self.dpressure(rho * t.powf(k)).sqrt() / t
            }
        };
        adaptive_gauss_kronrod(f, 0.0, 1.0, tol)
    }
}

/// Log-spaced table of `R` with cubic Hermite interpolation in `(ln rho, ln R)`.
#[derive(Debug)]
struct RiemannTable {
    log_lo: f64,
    step: f64,
    log_r: Vec<f64>,
    slope: Vec<f64>,
}

const TABLE_LO: f64 = 1e-12;
const TABLE_HI: f64 = 1e8;
const TABLE_TOL: f64 = 1e-11;

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

impl RiemannTable {
    fn build(gas: &GasLaw) -> Result<Self> {
        let mut per_decade = 200usize;
        loop {
            let table = Self::build_with(gas, per_decade)?;
            if table.verify(gas) {
                return Ok(table);
            }
            if per_decade >= 3200 {
                return Err(Error::Quadrature(
                    "Riemann invariant table failed its accuracy check".into(),
                ));
            }
            per_decade *= 2;
        }
    }

    /// `∫_{e^lo}^{e^hi} sqrt(p'(s))/s ds` in the log variable, where the integrand is smooth.
    fn segment(gas: &GasLaw, lo: f64, hi: f64) -> f64 {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        GL8.iter()
            .map(|&(x, w)| {
                w * (gas.dpressure((c - h * x).exp()).sqrt()
                    + gas.dpressure((c + h * x).exp()).sqrt())
            })
            .sum::<f64>()
            * h
    }

    fn build_with(gas: &GasLaw, per_decade: usize) -> Result<Self> {
        let log_lo = TABLE_LO.ln();
        let log_hi = TABLE_HI.ln();
        let decades = (TABLE_HI / TABLE_LO).log10();
        let n = (decades * per_decade as f64).ceil() as usize + 1;
        let step = (log_hi - log_lo) / (n - 1) as f64;
        let mut r = gas.riemann_r_quadrature(TABLE_LO, 1e-16)?;
        let mut log_r = Vec::with_capacity(n);
        let mut slope = Vec::with_capacity(n);
        for i in 0..n {
            let lr = log_lo + step * i as f64;
            if i > 0 {
                r += Self::segment(gas, lr - step, lr);
            }
            let rho = lr.exp();
            log_r.push(r.ln());
            slope.push(gas.sound_speed(rho) / r);
        }
        Ok(Self {
            log_lo,
            step,
            log_r,
            slope,
        })
    }

    fn verify(&self, gas: &GasLaw) -> bool {
        let mut r = self.log_r[0].exp();
        for i in 0..self.log_r.len() - 1 {
            let lo = self.log_lo + self.step * i as f64;
            let mid = lo + 0.5 * self.step;
            let exact = r + Self::segment(gas, lo, mid);
            let approx = self.eval(gas, mid.exp());
            if (exact - approx).abs() > TABLE_TOL * exact.max(1.0) {
                return false;
            }
            r = self.log_r[i + 1].exp();
        }
        true
    }

    fn eval(&self, gas: &GasLaw, rho: f64) -> f64 {
        let lr = rho.ln();
        let pos = (lr - self.log_lo) / self.step;
        if pos < 0.0 || pos >= (self.log_r.len() - 1) as f64 {
            return gas
                .riemann_r_quadrature(rho, 1e-13 * (1.0 + rho))
                .unwrap_or(f64::NAN);
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        let h = self.step;
        let (y0, y1) = (self.log_r[i], self.log_r[i + 1]);
        let (d0, d1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let y = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        y.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_exponents() {
        let g = GasLaw::new(1.4, 0.0).unwrap();
        assert_relative_eq!(g.theta(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(g.lambda_exp(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(g.sound_scale(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pressure_examples() {
        let g = GasLaw::new(2.0, 0.0).unwrap();
        assert_relative_eq!(g.kappa(), 0.125);
        assert_relative_eq!(g.pressure(1.0).unwrap(), 0.125);
        assert_eq!(g.pressure(0.0).unwrap(), 0.0);
        let g = GasLaw::new(2.0, 0.01).unwrap();
        assert_relative_eq!(g.pressure(2.0).unwrap(), 0.54, epsilon = 1e-15);
        assert!(g.pressure(-1.0).is_err());
    }

    #[test]
    fn internal_energy_examples() {
        let g = GasLaw::new(2.0, 0.0).unwrap();
        assert_relative_eq!(g.h_delta(1.0).unwrap(), 0.125);
        let g = GasLaw::new(3.0, 0.5).unwrap();
        assert_relative_eq!(g.kappa(), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(g.h_delta(2.0).unwrap(), 10.0 / 3.0, epsilon = 1e-14);
        assert_eq!(g.h_delta(0.0).unwrap(), 0.0);
        assert_eq!(g.e_delta(0.0).unwrap(), 0.0);
        assert_relative_eq!(g.e_delta(2.0).unwrap(), 5.0 / 3.0, epsilon = 1e-14);
        assert!(g.h_delta(-0.1).is_err());
    }

    #[test]
    fn riemann_closed_form_without_modifier() {
        let g = GasLaw::new(3.0, 0.0).unwrap();
        assert_eq!(g.riemann_r(0.7).unwrap(), 0.7);
        assert_eq!(g.riemann_r(0.0).unwrap(), 0.0);
        let (w, z) = g.riemann_invariants(2.0, 1.0).unwrap();
        assert_relative_eq!(w, 3.0);
        assert_relative_eq!(z, -1.0);
        assert!(g.riemann_invariants(0.0, 1.0).is_err());
    }

    #[test]
    fn near_vacuum_invariants_collapse_to_velocity() {
        let g = GasLaw::new(1.4, 0.0).unwrap();
        let (w, z) = g.riemann_invariants(1e-30, 5.0).unwrap();
        assert!((w - 5.0).abs() < 1e-5 && (z - 5.0).abs() < 1e-5);
    }

    #[test]
    fn table_matches_direct_quadrature() {
        let g = GasLaw::new(2.0, 0.1).unwrap();
        for &rho in &[1e-10, 1e-4, 0.3, 1.0, 7.5, 1e3] {
            let direct = g.riemann_r_quadrature(rho, 1e-14).unwrap();
            assert!((g.riemann_r(rho).unwrap() - direct).abs() < 1e-10, "rho = {rho}");
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(GasLaw::new(1.0, 0.0).is_err());
        assert!(GasLaw::new(2.0, -1e-3).is_err());
        assert!(GasLaw::with_kappa(2.0, 0.0, 0.0).is_err());
    }
}
