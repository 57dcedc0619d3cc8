//! Cross-sectional area profiles `A(x)` and their admissibility checks.

use std::f64::consts::PI;
use std::path::Path;

use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};

/// Surface area of the unit sphere in `R^n`, `2 pi^(n/2) / Γ(n/2)`.
pub fn unit_sphere_area(n: u32) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_fn(n as f64 / 2.0)
}

/// Area samples read from a two-column text file, interpolated by a natural cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedArea {
    xs: Vec<f64>,
    area: Vec<f64>,
    /// Spline second derivatives at the samples.
    m2: Vec<f64>,
}

impl TabulatedArea {
    /// Relative tolerance between the interpolant's slope and centered differences of the samples.
    pub const CONSISTENCY_TOL: f64 = 1e-6;

    pub fn new(xs: Vec<f64>, area: Vec<f64>) -> Result<Self> {
        if xs.len() != area.len() {
            return Err(Error::config("tabulated area: column length mismatch"));
        }
        if xs.len() < 4 {
            return Err(Error::config("tabulated area: need at least 4 samples"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("tabulated area: abscissae must be strictly increasing"));
        }
        if let Some(a) = area.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::domain(format!("tabulated area: sample {a} is not positive")));
        }
        let m2 = natural_spline_second_derivatives(&xs, &area);
        let t = Self { xs, area, m2 };
        let defect = t.consistency_defect();
        if defect > Self::CONSISTENCY_TOL {
            return Err(Error::config(format!(
                "tabulated area: interpolant slope deviates from centered differences by {defect:e}"
            )));
        }
        Ok(t)
    }

    /// Parses `x A` pairs, one per line, with `#` comments and blank lines ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut area = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty());
            let mut next = |name: &str| -> Result<f64> {
                let tok = cols.next().ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    msg: format!("missing {name} column"),
                })?;
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    msg: format!("invalid number '{tok}'"),
                })
            };
            let x = next("x")?;
            let a = next("A")?;
            if cols.next().is_some() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "expected exactly two columns".into(),
                });
            }
            if !x.is_finite() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: "non-finite abscissa".into(),
                });
            }
            xs.push(x);
            area.push(a);
        }
        Self::new(xs, area)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.area)
    }

    /// Largest relative gap between the spline slope and the centered difference of the samples.
    pub fn consistency_defect(&self) -> f64 {
        let n = self.xs.len();
        let scale = self
            .area
            .windows(2)
            .zip(self.xs.windows(2))
            .map(|(a, x)| ((a[1] - a[0]) / (x[1] - x[0])).abs())
            .fold(1.0_f64, f64::max);
        (1..n - 1)
            .map(|i| {
                let cd = (self.area[i + 1] - self.area[i - 1]) / (self.xs[i + 1] - self.xs[i - 1]);
                (self.eval(self.xs[i]).1 - cd).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// `(A, A', A'')` at `x` inside the tabulated range.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (y0, y1) = (self.area[i], self.area[i + 1]);
        let (m0, m1) = (self.m2[i], self.m2[i + 1]);
        let val = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2 = a * m0 + b * m1;
        (val, d1, d2)
    }
}

fn natural_spline_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut m = vec![0.0; n];
    let mut sub = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        sub[i] = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        sup[i] = h1 / 6.0;
        rhs[i] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
    }
    crate::solver::tridiag::solve(&sub, &diag, &sup, &mut rhs);
    m.copy_from_slice(&rhs);
    m
}

/// Shape of `A(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `A ≡ value`.
    Constant { value: f64 },
    /// `A = 1 + amplitude exp(-(x/width)^2)`.
    GaussianBump { amplitude: f64, width: f64 },
    /// `A = (1 + x^2)^(-alpha)`: closes at both ends.
    PowerLawClosing { alpha: f64 },
    /// `A = exp(rate x)`: unbounded at one end.
    Exponential { rate: f64 },
    /// `A = omega x^(n-1)` on `x > 0`.
    Spherical { dim: u32, omega: f64 },
    Tabulated(TabulatedArea),
}

/// How the profile behaves on the unbounded parts of its natural domain; used
/// to decide the global admissibility conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GlobalShape {
    log_slope_bounded: bool,
    slope_integrable_left: bool,
    slope_integrable_right: bool,
}

/// Cross-sectional area function with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct NozzleProfile {
    kind: ProfileKind,
}

impl NozzleProfile {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::domain("constant area must be positive"));
        }
        Ok(Self {
            kind: ProfileKind::Constant { value },
        })
    }

    pub fn unit() -> Self {
        Self {
            kind: ProfileKind::Constant { value: 1.0 },
        }
    }

    pub fn gaussian_bump(amplitude: f64, width: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > -1.0) || !(width.is_finite() && width > 0.0) {
            return Err(Error::domain("gaussian bump needs amplitude > -1 and width > 0"));
        }
        Ok(Self {
            kind: ProfileKind::GaussianBump { amplitude, width },
        })
    }

    pub fn power_law_closing(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain("closing exponent must be positive"));
        }
        Ok(Self {
            kind: ProfileKind::PowerLawClosing { alpha },
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::domain("exponential rate must be finite"));
        }
        Ok(Self {
            kind: ProfileKind::Exponential { rate },
        })
    }

    /// `A = omega_n x^(n-1)` with the unit-sphere surface area.
    pub fn spherical(dim: u32) -> Result<Self> {
        Self::spherical_with_omega(dim, unit_sphere_area(dim))
    }

    pub fn spherical_with_omega(dim: u32, omega: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain("spherical dimension must be at least 2"));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::domain("surface constant must be positive"));
        }
        Ok(Self {
            kind: ProfileKind::Spherical { dim, omega },
        })
    }

    pub fn tabulated(table: TabulatedArea) -> Self {
        Self {
            kind: ProfileKind::Tabulated(table),
        }
    }

    /// Builds a profile from a kind name and parameter list (config-file form).
    pub fn from_name(name: &str, params: &[f64]) -> Result<Self> {
        let p = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
        match name {
            "constant" => Self::constant(p(0, 1.0)),
            "gaussian_bump" => Self::gaussian_bump(p(0, 1.0), p(1, 1.0)),
            "power_law_closing" => Self::power_law_closing(p(0, 1.0)),
            "exponential" => Self::exponential(p(0, 1.0)),
            "spherical" => {
                let n = p(0, 3.0);
                if n.fract() != 0.0 || !(2.0..=64.0).contains(&n) {
                    return Err(Error::config(format!("invalid spherical dimension {n}")));
                }
                match params.get(1) {
                    Some(&omega) => Self::spherical_with_omega(n as u32, omega),
                    None => Self::spherical(n as u32),
                }
            }
            other => Err(Error::config(format!("unknown profile kind '{other}'"))),
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ProfileKind::Constant { .. } => "constant",
            ProfileKind::GaussianBump { .. } => "gaussian_bump",
            ProfileKind::PowerLawClosing { .. } => "power_law_closing",
            ProfileKind::Exponential { .. } => "exponential",
            ProfileKind::Spherical { .. } => "spherical",
            ProfileKind::Tabulated(_) => "tabulated",
        }
    }

    /// Spherical dimension, if any.
    pub fn spherical_dim(&self) -> Option<u32> {
        match self.kind {
            ProfileKind::Spherical { dim, .. } => Some(dim),
            _ => None,
        }
    }

    /// Closed domain of definition (open at 0 for spherical profiles).
    pub fn domain(&self) -> (f64, f64) {
        match &self.kind {
            ProfileKind::Spherical { .. } => (0.0, f64::INFINITY),
            ProfileKind::Tabulated(t) => t.domain(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match &self.kind {
            ProfileKind::Spherical { .. } => x > 0.0,
            ProfileKind::Tabulated(t) => {
                let (lo, hi) = t.domain();
                (lo..=hi).contains(&x)
            }
            _ => true,
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "x = {x} outside the domain of the {} profile",
                self.kind_name()
            )))
        }
    }

    /// `(A, A', A'')` without domain checks.
    pub(crate) fn eval3(&self, x: f64) -> (f64, f64, f64) {
        match &self.kind {
            ProfileKind::Constant { value } => (*value, 0.0, 0.0),
            ProfileKind::GaussianBump { amplitude, width } => {
                let y = x / width;
                let g = amplitude * (-y * y).exp();
                let d1 = -2.0 * y / width * g;
                let d2 = (4.0 * y * y - 2.0) / (width * width) * g;
                (1.0 + g, d1, d2)
            }
            ProfileKind::PowerLawClosing { alpha } => {
                let s = 1.0 + x * x;
                let a = s.powf(-alpha);
                let d1 = -2.0 * alpha * x * a / s;
                let d2 = a * (4.0 * alpha * (alpha + 1.0) * x * x / (s * s) - 2.0 * alpha / s);
                (a, d1, d2)
            }
            ProfileKind::Exponential { rate } => {
                let a = (rate * x).exp();
                (a, rate * a, rate * rate * a)
            }
            ProfileKind::Spherical { dim, omega } => {
                let k = (*dim - 1) as f64;
                let a = omega * x.powi(*dim as i32 - 1);
                let d1 = if *dim >= 2 { omega * k * x.powi(*dim as i32 - 2) } else { 0.0 };
                let d2 = if *dim >= 3 {
                    omega * k * (k - 1.0) * x.powi(*dim as i32 - 3)
                } else {
                    0.0
                };
                (a, d1, d2)
            }
            ProfileKind::Tabulated(t) => t.eval(x),
        }
    }

    /// `A(x) > 0`.
    pub fn area(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.eval3(x).0)
    }

    pub fn d_area(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.eval3(x).1)
    }

    pub fn d2_area(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.eval3(x).2)
    }

    /// `A'(x) / A(x)`; exactly `(n - 1)/x` for spherical profiles.
    pub fn dlog_area(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.dlog_unchecked(x))
    }

    #[inline]
    pub(crate) fn dlog_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. } => 0.0,
            ProfileKind::Spherical { dim, .. } => (*dim - 1) as f64 / x,
            ProfileKind::Exponential { rate } => *rate,
            ProfileKind::PowerLawClosing { alpha } => -2.0 * alpha * x / (1.0 + x * x),
            _ => {
                let (a, d1, _) = self.eval3(x);
                d1 / a
            }
        }
    }

    /// `(A'/A)' = A''/A - (A'/A)^2`.
    pub fn dlog_area_prime(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.dlog_prime_unchecked(x))
    }

    #[inline]
    pub(crate) fn dlog_prime_unchecked(&self, x: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant { .. } | ProfileKind::Exponential { .. } => 0.0,
            ProfileKind::Spherical { dim, .. } => -((*dim - 1) as f64) / (x * x),
            ProfileKind::PowerLawClosing { alpha } => {
                let s = 1.0 + x * x;
                -2.0 * alpha * (1.0 - x * x) / (s * s)
            }
            _ => {
                let (a, d1, d2) = self.eval3(x);
                d2 / a - (d1 / a).powi(2)
            }
        }
    }

    fn global_shape(&self) -> GlobalShape {
        match &self.kind {
            ProfileKind::Constant { .. }
            | ProfileKind::GaussianBump { .. }
            | ProfileKind::PowerLawClosing { .. } => GlobalShape {
                log_slope_bounded: true,
                slope_integrable_left: true,
                slope_integrable_right: true,
            },
            ProfileKind::Exponential { rate } => GlobalShape {
                log_slope_bounded: true,
                slope_integrable_left: *rate >= 0.0,
                slope_integrable_right: *rate <= 0.0,
            },
            ProfileKind::Spherical { .. } => GlobalShape {
                log_slope_bounded: false,
                slope_integrable_left: false,
                slope_integrable_right: false,
            },
            // Only the tabulated range is known; it is taken as the whole line.
            ProfileKind::Tabulated(_) => GlobalShape {
                log_slope_bounded: true,
                slope_integrable_left: true,
                slope_integrable_right: true,
            },
        }
    }

    /// Estimates the admissibility quantities on `[lo, hi]` with the default resolution.
    pub fn validate_conditions(&self, lo: f64, hi: f64) -> Result<ConditionReport> {
        self.validate_conditions_with(lo, hi, DEFAULT_CONDITION_SAMPLES)
    }

    pub fn validate_conditions_with(
        &self,
        lo: f64,
        hi: f64,
        samples: usize,
    ) -> Result<ConditionReport> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!("invalid interval [{lo}, {hi}]")));
        }
        self.check(lo)?;
        self.check(hi)?;
        let n = samples.max(2);
        let h = (hi - lo) / n as f64;
        let mut sup_dlog = 0.0_f64;
        let mut a0 = f64::INFINITY;
        let mut a1 = 0.0_f64;
        let mut c2 = 0.0_f64;
        let mut l1_left = 0.0;
        let mut l1_right = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=n {
            let x = if i == n { hi } else { lo + h * i as f64 };
            let (a, d1, d2) = self.eval3(x);
            sup_dlog = sup_dlog.max((d1 / a).abs());
            a0 = a0.min(a);
            a1 = a1.max(a);
            c2 = c2.max(a.abs().max(d1.abs()).max(d2.abs()));
            if let Some((xp, dp)) = prev {
                let seg = 0.5 * (x - xp) * (dp + d1.abs());
                let mid = 0.5 * (x + xp);
                if mid < 0.0 {
                    l1_left += seg;
                } else {
                    l1_right += seg;
                }
            }
            prev = Some((x, d1.abs()));
        }
        let shape = self.global_shape();
        let finite = sup_dlog.is_finite() && l1_left.is_finite() && l1_right.is_finite();
        let satisfies_13a = finite && shape.log_slope_bounded && shape.slope_integrable_left;
        let satisfies_13b = finite && shape.log_slope_bounded && shape.slope_integrable_right;
        let satisfies_14_15 = a0 > 0.0 && a1.is_finite() && c2.is_finite();
        Ok(ConditionReport {
            interval: (lo, hi),
            samples: n,
            sup_dlog_area: sup_dlog,
            l1_slope_left: l1_left,
            l1_slope_right: l1_right,
            area_min: a0,
            area_max: a1,
            c2_norm: c2,
            satisfies_13a,
            satisfies_13b,
            satisfies_14_15,
        })
    }
}

/// Samples per interval used by [`NozzleProfile::validate_conditions`].
pub const DEFAULT_CONDITION_SAMPLES: usize = 10_000;

/// Numerically estimated admissibility data on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub interval: (f64, f64),
    pub samples: usize,
    /// `sup |A'/A|`.
    pub sup_dlog_area: f64,
    /// `∫ |A'|` over the part of the interval left of 0.
    pub l1_slope_left: f64,
    /// `∫ |A'|` over the part of the interval right of 0.
    pub l1_slope_right: f64,
    pub area_min: f64,
    pub area_max: f64,
    /// `max(|A|, |A'|, |A''|)`.
    pub c2_norm: f64,
    /// Bounded `A'/A` and integrable `A'` on the left half-line.
    pub satisfies_13a: bool,
    /// Bounded `A'/A` and integrable `A'` on the right half-line.
    pub satisfies_13b: bool,
    /// `0 < A_0 <= A <= A_1` and finite `C^2` norm on the interval.
    pub satisfies_14_15: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn area_examples() {
        assert_eq!(NozzleProfile::unit().area(3.7).unwrap(), 1.0);
        let s = NozzleProfile::spherical_with_omega(3, 4.0 * PI).unwrap();
        assert_relative_eq!(s.area(2.0).unwrap(), 16.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(s.area(2.0).unwrap(), 50.2655, epsilon = 1e-4);
        let g = NozzleProfile::gaussian_bump(1.0, 1.0).unwrap();
        assert_eq!(g.area(0.0).unwrap(), 2.0);
    }

    #[test]
    fn dlog_examples() {
        assert_eq!(NozzleProfile::unit().dlog_area(-4.0).unwrap(), 0.0);
        let s = NozzleProfile::spherical(3).unwrap();
        assert_eq!(s.dlog_area(0.5).unwrap(), 4.0);
        let g = NozzleProfile::gaussian_bump(1.0, 1.0).unwrap();
        let e = (-1.0_f64).exp();
        assert_relative_eq!(g.dlog_area(1.0).unwrap(), -2.0 * e / (1.0 + e), epsilon = 1e-15);
    }

    #[test]
    fn spherical_domain_error() {
        let s = NozzleProfile::spherical(3).unwrap();
        assert!(matches!(s.area(0.0), Err(Error::Domain(_))));
        assert!(matches!(s.dlog_area(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn unit_sphere_areas() {
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
    }

    #[test]
    fn conditions_constant() {
        let r = NozzleProfile::unit().validate_conditions(-10.0, 10.0).unwrap();
        assert!(r.satisfies_13a && r.satisfies_13b && r.satisfies_14_15);
        assert_eq!(r.sup_dlog_area, 0.0);
    }

    #[test]
    fn conditions_spherical() {
        let r = NozzleProfile::spherical(3)
            .unwrap()
            .validate_conditions(0.1, 10.0)
            .unwrap();
        assert!(r.satisfies_14_15);
        assert!(!r.satisfies_13a && !r.satisfies_13b);
        assert_relative_eq!(r.sup_dlog_area, 20.0, epsilon = 1e-12);
    }

    #[test]
    fn conditions_power_law() {
        // |2 alpha x / (1 + x^2)| peaks at x = 1 with value alpha
        let r = NozzleProfile::power_law_closing(1.0)
            .unwrap()
            .validate_conditions(-50.0, 50.0)
            .unwrap();
        assert!(r.satisfies_13a);
        assert!(r.sup_dlog_area <= 2.0);
        assert_relative_eq!(r.sup_dlog_area, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn conditions_exponential_one_sided() {
        let r = NozzleProfile::exponential(0.5)
            .unwrap()
            .validate_conditions(-5.0, 5.0)
            .unwrap();
        assert!(r.satisfies_13a && !r.satisfies_13b);
    }

    #[test]
    fn invalid_interval() {
        let p = NozzleProfile::unit();
        assert!(p.validate_conditions(1.0, 1.0).is_err());
        assert!(NozzleProfile::spherical(2).unwrap().validate_conditions(-1.0, 1.0).is_err());
    }

    #[test]
    fn tabulated_reproduces_smooth_profile() {
        let exact = NozzleProfile::gaussian_bump(0.5, 1.0).unwrap();
        let xs: Vec<f64> = (0..=8000).map(|i| -4.0 + 0.001 * i as f64).collect();
        let mut text = String::from("# x A\n");
        for x in &xs {
            text.push_str(&format!("{x} {}\n", exact.area(*x).unwrap()));
        }
        let t = NozzleProfile::tabulated(TabulatedArea::parse(&text).unwrap());
        for &x in &[-1.3, 0.0, 0.77, 2.5] {
            assert_relative_eq!(t.area(x).unwrap(), exact.area(x).unwrap(), epsilon = 1e-9);
            assert_relative_eq!(t.d_area(x).unwrap(), exact.d_area(x).unwrap(), epsilon = 1e-6);
            assert_relative_eq!(
                t.dlog_area(x).unwrap(),
                exact.dlog_area(x).unwrap(),
                epsilon = 1e-6
            );
        }
        assert!(t.area(5.0).is_err());
    }

    #[test]
    fn tabulated_rejects_garbage() {
        assert!(TabulatedArea::parse("0 1\n1 2\n").is_err());
        assert!(TabulatedArea::parse("0 1\n1 x\n2 1\n3 1\n").is_err());
        assert!(TabulatedArea::parse("0 1\n1 -2\n2 1\n3 1\n").is_err());
        assert!(TabulatedArea::parse("0 1\n0 1\n2 1\n3 1\n").is_err());
        assert!(TabulatedArea::parse("0 1 3\n1 1\n2 1\n3 1\n").is_err());
        // a kinked table is not C^2-consistent at this spacing
        assert!(TabulatedArea::parse("0 1\n1 1\n2 5\n3 1\n4 1\n").is_err());
    }

    #[test]
    fn from_name_parses_kinds() {
        assert_eq!(NozzleProfile::from_name("spherical", &[3.0]).unwrap().spherical_dim(), Some(3));
        assert!(NozzleProfile::from_name("spherical", &[2.5]).is_err());
        assert!(NozzleProfile::from_name("hexagon", &[]).is_err());
    }
}
