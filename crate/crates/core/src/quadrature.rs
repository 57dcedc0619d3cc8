//! Quadrature rules used throughout the crate.
//!
//! * [`GaussJacobi`] rules for the symmetric weight `(1 - s^2)^lambda` on `[-1, 1]`,
//!   built with the Golub–Welsch eigenvalue method. `lambda = 0` is plain
//!   Gauss–Legendre.
//! * [`adaptive_gauss_kronrod`], a bisecting G7/K15 integrator for smooth
//!   integrands on finite intervals.
//! * [`signed_moments`], exact moments of the symmetric weight on the two
//!   sides of a split point, via the regularized incomplete beta function.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// `∫_{-1}^{1} (1 - s^2)^lambda ds = sqrt(pi) Γ(lambda + 1) / Γ(lambda + 3/2)`.
pub fn symmetric_weight_mass(lambda: f64) -> f64 {
    (0.5 * std::f64::consts::PI.ln() + ln_gamma(lambda + 1.0) - ln_gamma(lambda + 1.5)).exp()
}

/// Gauss rule for the weight `(1 - s^2)^lambda` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    lambda: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussJacobi {
    /// Builds an `n`-point rule. Requires `lambda > -1` and `n >= 1`.
    pub fn symmetric(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Quadrature("rule needs at least one node".into()));
        }
        if !(lambda.is_finite() && lambda > -1.0) {
            return Err(Error::Quadrature(format!(
                "weight exponent {lambda} must exceed -1"
            )));
        }
        // Jacobi matrix of the monic recurrence; the diagonal vanishes for a symmetric weight.
        let ab = 2.0 * lambda;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            let k = (i + 1) as f64;
            let s = 2.0 * k + ab;
            let num = k * (k + lambda) * (k + lambda) * (k + ab);
            let off = 2.0 / s * (num / ((s + 1.0) * (s - 1.0))).sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
        let mass = symmetric_weight_mass(lambda);
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| {
                let v0 = eig.eigenvectors[(0, j)];
                (eig.eigenvalues[j], mass * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrize to remove eigen-solver noise; the exact rule is symmetric.
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let j = n - 1 - i;
            nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
            weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self {
            lambda,
            nodes,
            weights,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `∫ f(s) (1 - s^2)^lambda ds`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.iter().map(|(s, w)| w * f(s)).sum()
    }
}

/// Gauss rule for the one-sided weight `(1 - t)^alpha` on `[-1, 1]`, as `(nodes, weights)`.
pub fn gauss_jacobi_one_sided(n: usize, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Quadrature("rule needs at least one node".into()));
    }
    if !(alpha.is_finite() && alpha > -1.0) {
        return Err(Error::Quadrature(format!(
            "weight exponent {alpha} must exceed -1"
        )));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    jac[(0, 0)] = -alpha / (alpha + 2.0);
    for i in 1..n {
        let k = i as f64;
        let s = 2.0 * k + alpha;
        jac[(i, i)] = -alpha * alpha / (s * (s + 2.0));
        let off = (4.0 * k * (k + alpha) * k * (k + alpha) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
        jac[(i - 1, i)] = off;
        jac[(i, i - 1)] = off;
    }
    let mass = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}

const K15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = K15_WEIGHTS[7] * fc;
    let mut g = G7_WEIGHTS[3] * fc;
    for j in 0..7 {
        let x = h * K15_NODES[j];
        let s = f(c - x) + f(c + x);
        k += K15_WEIGHTS[j] * s;
        if j % 2 == 1 {
            g += G7_WEIGHTS[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_gauss_kronrod(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    let (v0, e0) = kronrod15(&f, a, b);
    let mut parts = vec![(a, b, v0, e0)];
    loop {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        let total: f64 = parts.iter().map(|p| p.2).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if total_err <= tol {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "adaptive rule stalled at error {total_err:e} (tol {tol:e})"
            )));
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = kronrod15(&f, lo, mid);
        let (vr, er) = kronrod15(&f, mid, hi);
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
    }
}

/// `∫_0^{x} s^j (1 - s^2)^lambda ds` for `0 <= x <= 1`.
fn half_moment(j: usize, lambda: f64, x: f64) -> f64 {
    let a = 0.5 * (j as f64 + 1.0);
    let b = lambda + 1.0;
    let full = 0.5 * ln_beta(a, b).exp();
    if x >= 1.0 {
        return full;
    }
    if x <= 0.0 {
        return 0.0;
    }
    full * beta_reg(a, b, x * x)
}

/// `∫_x^{1} s^j (1 - s^2)^lambda ds` for `0 <= x <= 1`, without cancellation.
fn half_moment_tail(j: usize, lambda: f64, x: f64) -> f64 {
    let a = 0.5 * (j as f64 + 1.0);
    let b = lambda + 1.0;
    let full = 0.5 * ln_beta(a, b).exp();
    if x <= 0.0 {
        return full;
    }
    if x >= 1.0 {
        return 0.0;
    }
    full * beta_reg(b, a, 1.0 - x * x)
}

/// Signed moments `S_j = ∫_{split}^{1} s^j W ds - ∫_{-1}^{split} s^j W ds`
/// for `j = 0..=3`, where `W = (1 - s^2)^lambda`.
///
/// Exact up to the accuracy of the regularized incomplete beta function.
pub fn signed_moments(lambda: f64, split: f64) -> [f64; 4] {
    let x = split.clamp(-1.0, 1.0);
    let mut out = [0.0; 4];
    for (j, o) in out.iter_mut().enumerate() {
        let parity = if j % 2 == 0 { 1.0 } else { -1.0 };
        let (upper, lower) = if x >= 0.0 {
            // ∫_x^1 and ∫_{-1}^x = ∫_{-1}^0 + ∫_0^x
            let upper = half_moment_tail(j, lambda, x);
            let lower = parity * half_moment(j, lambda, 1.0) + half_moment(j, lambda, x);
            (upper, lower)
        } else {
            let y = -x;
            // ∫_{-1}^{-y} s^j W = parity ∫_y^1 s^j W
            let lower = parity * half_moment_tail(j, lambda, y);
            let upper = half_moment(j, lambda, 1.0) + parity * half_moment(j, lambda, y);
            (upper, lower)
        };
        *o = upper - lower;
    }
    out
}

/// Composite trapezoid on tabulated samples with uniform spacing.
pub fn trapezoid_uniform(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Composite trapezoid on arbitrary abscissae.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_weights_sum_to_two() {
        let r = GaussJacobi::symmetric(20, 0.0).unwrap();
        assert_relative_eq!(r.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // exact for degree 39
        let v = r.integrate(|s| s.powi(10));
        assert_relative_eq!(v, 2.0 / 11.0, epsilon = 1e-14);
    }

    #[test]
    fn chebyshev_second_kind_rule() {
        // lambda = 1/2: ∫ s^2 sqrt(1-s^2) = pi/8
        let r = GaussJacobi::symmetric(16, 0.5).unwrap();
        assert_relative_eq!(r.integrate(|s| s * s), std::f64::consts::PI / 8.0, epsilon = 1e-13);
    }

    #[test]
    fn singular_weight_moments() {
        // lambda = -1/4 (gamma = 5); even moments are beta functions
        let lambda = -0.25;
        let r = GaussJacobi::symmetric(32, lambda).unwrap();
        for j in [0usize, 2, 4, 6] {
            let exact = ln_beta(0.5 * (j as f64 + 1.0), lambda + 1.0).exp();
            assert_relative_eq!(r.integrate(|s| s.powi(j as i32)), exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(GaussJacobi::symmetric(8, -1.0).is_err());
        assert!(GaussJacobi::symmetric(0, 0.3).is_err());
    }

    #[test]
    fn gauss_kronrod_handles_endpoint_sqrt() {
        let v = adaptive_gauss_kronrod(|x| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn one_sided_rule_moments() {
        for &alpha in &[-0.4, 0.0, 0.25, 1.5] {
            let (t, w) = gauss_jacobi_one_sided(24, alpha).unwrap();
            // ∫ (1-t)^(alpha+j) over [-1, 1] = 2^(alpha+j+1)/(alpha+j+1)
            for j in 0..6 {
                let got: f64 = t.iter().zip(&w).map(|(t, w)| w * (1.0 - t).powi(j)).sum();
                let e = alpha + j as f64 + 1.0;
                let want = 2f64.powf(e) / e;
                assert!((got - want).abs() < 1e-13 * want, "{alpha} {j} {got} {want}");
            }
        }
    }

    #[test]
    fn signed_moments_match_brute_force() {
        for &lambda in &[-0.25, 0.0, 0.5, 2.5] {
            for &split in &[-0.9, -0.3, 0.0, 0.4, 0.95] {
                let s = signed_moments(lambda, split);
                for j in 0..4 {
                    // substitution s = -cos(phi) removes endpoint singularities
                    let g = |phi: f64| (-phi.cos()).powi(j as i32) * phi.sin().powf(2.0 * lambda + 1.0);
                    let split_phi = (-split).acos();
                    let lo = adaptive_gauss_kronrod(g, 0.0, split_phi, 1e-13).unwrap();
                    let hi = adaptive_gauss_kronrod(g, split_phi, std::f64::consts::PI, 1e-13)
                        .unwrap();
                    assert!(
                        (s[j] - (hi - lo)).abs() < 1e-10,
                        "lambda {lambda} split {split} j {j}: {} vs {}",
                        s[j],
                        hi - lo
                    );
                }
            }
        }
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let xs = [0.0, 0.5, 2.0];
        let ys = [1.0, 2.0, 5.0];
        assert_relative_eq!(trapezoid(&xs, &ys), 6.0, epsilon = 1e-15);
        assert_relative_eq!(trapezoid_uniform(&[1.0, 2.0, 3.0], 0.5), 2.0, epsilon = 1e-15);
    }
}
