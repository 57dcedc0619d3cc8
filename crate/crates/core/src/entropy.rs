//! Weak entropy pairs generated by kernel quadrature, the mechanical energy
//! pair, relative energies and the special pairs used by the higher
//! integrability and quartic-energy estimates.
//!
//! A generator `psi` produces
//!
//! ```text
//! eta = rho ∫ psi(u + k rho^theta s) (1 - s^2)^lambda ds
//! q   = rho ∫ (u + theta k rho^theta s) psi(u + k rho^theta s) (1 - s^2)^lambda ds
//! ```
//!
//! over `s ∈ [-1, 1]`, with `k = sqrt(kappa gamma) / theta` (equal to 1 under
//! the default pressure constant).

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi_one_sided, signed_moments, symmetric_weight_mass, GaussJacobi};
use crate::thermo::{GasLaw, RHO_FLOOR};

/// `(psi, psi', psi'')` at a point.
pub type GeneratorFn = dyn Fn(f64) -> [f64; 3] + Send + Sync;

/// Scalar function producing a weak entropy pair.
#[derive(Clone)]
pub enum EntropyGenerator {
    /// `psi ≡ 1`.
    One,
    /// `psi = s`.
    Linear,
    /// `psi = s^2 / 2`; generates a multiple of the mechanical energy.
    HalfSquare,
    /// `psi = s^4`.
    Quartic,
    /// `psi = (s - shift)|s - shift| / 2`. Not convex; evaluated with exact moments.
    HalfSignedSquareShifted { shift: f64 },
    /// `psi = sqrt((s - center)^2 + width^2)`, a smoothed `|s - center|`.
    SmoothedConvex { center: f64, width: f64 },
    /// Convex ramp whose second derivative is the bump
    /// `(15/16)(1 - y^2)^2 / radius`, `y = (s - center)/radius`. Vanishes left of
    /// the bump and equals `s - center` to its right.
    SplineRamp { center: f64, radius: f64 },
    Custom {
        name: String,
        convex: bool,
        f: Arc<GeneratorFn>,
    },
}

impl fmt::Debug for EntropyGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Custom { name, convex, .. } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("convex", convex)
                .finish(),
            other => f.write_str(&other.name()),
        }
    }
}

impl EntropyGenerator {
    pub fn custom(
        name: impl Into<String>,
        convex: bool,
        f: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        Self::Custom {
            name: name.into(),
            convex,
            f: Arc::new(f),
        }
    }

    /// Parses the names accepted by the `entropy-table` subcommand.
    pub fn from_name(name: &str) -> Result<Self> {
        let (head, args) = match name.split_once(':') {
            Some((h, a)) => (h, a),
            None => (name, ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(format!("bad generator argument '{t}'")))
                })
                .collect::<Result<_>>()?
        };
        let arg = |i: usize, d: f64| nums.get(i).copied().unwrap_or(d);
        let g = match head {
            "one" => Self::One,
            "linear" => Self::Linear,
            "half_square" => Self::HalfSquare,
            "quartic" => Self::Quartic,
            "half_signed_square" => Self::HalfSignedSquareShifted { shift: arg(0, 0.0) },
            "smoothed_abs" => Self::SmoothedConvex {
                center: arg(0, 0.0),
                width: arg(1, 0.5),
            },
            "spline_ramp" => Self::SplineRamp {
                center: arg(0, 0.0),
                radius: arg(1, 1.0),
            },
            other => return Err(Error::config(format!("unknown generator '{other}'"))),
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::SmoothedConvex { width, .. } if !(width > 0.0 && width.is_finite()) => {
                Err(Error::config("smoothing width must be positive"))
            }
            Self::SplineRamp { radius, .. } if !(radius > 0.0 && radius.is_finite()) => {
                Err(Error::config("ramp radius must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::One => "one".into(),
            Self::Linear => "linear".into(),
            Self::HalfSquare => "half_square".into(),
            Self::Quartic => "quartic".into(),
            Self::HalfSignedSquareShifted { shift } => format!("half_signed_square:{shift}"),
            Self::SmoothedConvex { center, width } => format!("smoothed_abs:{center},{width}"),
            Self::SplineRamp { center, radius } => format!("spline_ramp:{center},{radius}"),
            Self::Custom { name, .. } => name.clone(),
        }
    }

    /// `(psi, psi', psi'')` at `s`.
    #[inline]
    pub fn eval(&self, s: f64) -> [f64; 3] {
        match self {
            Self::One => [1.0, 0.0, 0.0],
            Self::Linear => [s, 1.0, 0.0],
            Self::HalfSquare => [0.5 * s * s, s, 1.0],
            Self::Quartic => {
                let s2 = s * s;
                [s2 * s2, 4.0 * s2 * s, 12.0 * s2]
            }
            Self::HalfSignedSquareShifted { shift } => {
                let w = s - shift;
                [0.5 * w * w.abs(), w.abs(), w.signum()]
            }
            Self::SmoothedConvex { center, width } => {
                let d = s - center;
                let r = (d * d + width * width).sqrt();
                [r, d / r, width * width / (r * r * r)]
            }
            Self::SplineRamp { center, radius } => {
                let y = (s - center) / radius;
                if y <= -1.0 {
                    [0.0, 0.0, 0.0]
                } else if y >= 1.0 {
                    [s - center, 1.0, 0.0]
                } else {
                    let y2 = y * y;
                    let c = 15.0 / 16.0;
                    let psi = radius
                        * c
                        * (y2 / 2.0 - y2 * y2 / 6.0 + y2 * y2 * y2 / 30.0 + 8.0 * y / 15.0
                            + 1.0 / 6.0);
                    let dpsi = c * (y - 2.0 * y2 * y / 3.0 + y2 * y2 * y / 5.0 + 8.0 / 15.0);
                    let d2 = c * (1.0 - y2).powi(2) / radius;
                    [psi, dpsi, d2]
                }
            }
            Self::Custom { f, .. } => f(s),
        }
    }

    /// Points where the generator loses smoothness.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::HalfSignedSquareShifted { shift } => vec![*shift],
            Self::SplineRamp { center, radius } => vec![center - radius, center + radius],
            _ => Vec::new(),
        }
    }

    /// Split points for the kernel quadrature: the kinks plus, for the smoothed
    /// generator, a geometric ladder around its narrow feature.
    pub fn quadrature_splits(&self) -> Vec<f64> {
        match self {
            Self::SmoothedConvex { center, width } => {
                let mut v = vec![*center];
                for k in [1.0, 4.0, 16.0, 64.0] {
                    v.push(center - k * width);
                    v.push(center + k * width);
                }
                v
            }
            _ => self.breakpoints(),
        }
    }

    /// Whether the generator is convex by construction.
    pub fn is_convex(&self) -> bool {
        match self {
            Self::HalfSignedSquareShifted { .. } => false,
            Self::Custom { convex, .. } => *convex,
            _ => true,
        }
    }

    /// Convex generators used for the entropy-inequality residuals.
    pub fn default_convex_family() -> Vec<Self> {
        let mut v = vec![Self::HalfSquare];
        for c in [-1.0, 0.0, 1.0] {
            v.push(Self::SmoothedConvex {
                center: c,
                width: 0.5,
            });
        }
        v.push(Self::SplineRamp {
            center: -0.5,
            radius: 1.0,
        });
        v.push(Self::SplineRamp {
            center: 0.5,
            radius: 1.0,
        });
        v
    }
}

/// `∫ (1 - s^2)^lambda ds = sqrt(pi) Γ(lambda+1) / Γ(lambda+3/2)`.
pub fn kernel_mass(lambda: f64) -> f64 {
    symmetric_weight_mass(lambda)
}

/// Mechanical energy pair `(eta*, q*)` for `p = kappa rho^gamma` (the modifier is ignored).
pub fn mechanical_energy(gas: &GasLaw, rho: f64, m: f64) -> Result<(f64, f64)> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::domain(format!("density {rho} must be non-negative")));
    }
    if rho < RHO_FLOOR {
        return Ok((0.0, 0.0));
    }
    let (g, k) = (gas.gamma(), gas.kappa());
    let u = m / rho;
    let eta = 0.5 * m * u + k * rho.powf(g) / (g - 1.0);
    let q = 0.5 * m * u * u + k * g * m * rho.powf(g - 1.0) / (g - 1.0);
    Ok((eta, q))
}

/// Hessian of the mechanical energy in `(rho, m)`.
pub fn mechanical_hessian(gas: &GasLaw, rho: f64, m: f64) -> [[f64; 2]; 2] {
    let r = rho.max(RHO_FLOOR);
    let u = m / r;
    let hpp = gas.kappa() * gas.gamma() * r.powf(gas.gamma() - 2.0);
    [[u * u / r + hpp, -u / r], [-u / r, 1.0 / r]]
}

/// Gauss–Jacobi rules for one gas law, with lazily built refinements.
pub struct EntropyKernel {
    gamma: f64,
    kappa: f64,
    theta: f64,
    lambda: f64,
    scale: f64,
    mass: f64,
    base_nodes: usize,
    levels: Vec<OnceLock<GaussJacobi>>,
    legendre: Vec<OnceLock<GaussJacobi>>,
    one_sided: Vec<OnceLock<(Vec<f64>, Vec<f64>)>>,
}

impl fmt::Debug for EntropyKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntropyKernel")
            .field("gamma", &self.gamma)
            .field("lambda", &self.lambda)
            .field("base_nodes", &self.base_nodes)
            .finish()
    }
}

/// Relative agreement demanded between a rule and its refinement.
pub const CERTIFY_TOL: f64 = 1e-10;
/// Default node count of the base rule.
pub const DEFAULT_NODES: usize = 64;
/// Largest rule tried before giving up.
pub const MAX_NODES: usize = 512;

/// Gradient and Hessian of an entropy in `(rho, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyDerivatives {
    pub eta_rho: f64,
    pub eta_m: f64,
    pub hessian: [[f64; 2]; 2],
}

impl EntropyKernel {
    pub fn new(gas: &GasLaw) -> Result<Self> {
        Self::with_nodes(gas, DEFAULT_NODES)
    }

    pub fn with_nodes(gas: &GasLaw, nodes: usize) -> Result<Self> {
        if !(2..=MAX_NODES / 2).contains(&nodes) {
            return Err(Error::config(format!(
                "kernel node count {nodes} must lie in [2, {}]",
                MAX_NODES / 2
            )));
        }
        let mut count = 0;
        let mut n = nodes;
        while n <= MAX_NODES {
            count += 1;
            n *= 2;
        }
        let levels = (0..count).map(|_| OnceLock::new()).collect();
        let legendre = (0..count).map(|_| OnceLock::new()).collect();
        let one_sided = (0..count).map(|_| OnceLock::new()).collect();
        let k = Self {
            gamma: gas.gamma(),
            kappa: gas.kappa(),
            theta: gas.theta(),
            lambda: gas.lambda_exp(),
            scale: gas.sound_scale(),
            mass: kernel_mass(gas.lambda_exp()),
            base_nodes: nodes,
            levels,
            legendre,
            one_sided,
        };
        k.rule(0)?;
        k.rule(1)?;
        Ok(k)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    /// `∫ (1 - s^2)^lambda ds`.
    pub fn mass(&self) -> f64 {
        self.mass
    }
    /// Multiplier `k` of `rho^theta` inside the generator argument.
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn base_nodes(&self) -> usize {
        self.base_nodes
    }

    fn rule(&self, level: usize) -> Result<&GaussJacobi> {
        let cell = self
            .levels
            .get(level)
            .ok_or_else(|| Error::Quadrature("refinement exhausted".into()))?;
        if let Some(r) = cell.get() {
            return Ok(r);
        }
        let r = GaussJacobi::symmetric(self.base_nodes << level, self.lambda)?;
        Ok(cell.get_or_init(|| r))
    }

    fn legendre(&self, level: usize) -> Result<&GaussJacobi> {
        let cell = &self.legendre[level];
        if let Some(r) = cell.get() {
            return Ok(r);
        }
        let r = GaussJacobi::symmetric(self.base_nodes << level, 0.0)?;
        Ok(cell.get_or_init(|| r))
    }

    fn one_sided(&self, level: usize) -> Result<&(Vec<f64>, Vec<f64>)> {
        let cell = &self.one_sided[level];
        if let Some(r) = cell.get() {
            return Ok(r);
        }
        let r = gauss_jacobi_one_sided(self.base_nodes << level, self.lambda)?;
        Ok(cell.get_or_init(|| r))
    }

    /// Nodes and weights (including `(1 - s^2)^lambda`) for a generator with
    /// kinks at the interior points `breaks`. Pieces are graded toward the
    /// weight's endpoint singularities so each piece is at least its own
    /// length away from them.
    fn composite(&self, level: usize, breaks: &[f64]) -> Result<Vec<(f64, f64)>> {
        let lam = self.lambda;
        let mut cuts = vec![-1.0];
        let mut inner: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|b| b.abs() < 1.0 - 1e-13)
            .collect();
        inner.sort_by(f64::total_cmp);
        cuts.extend(inner);
        cuts.push(1.0);
        let mut points = vec![-1.0];
        for w in cuts.windows(2) {
            let (p, q) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            let mid = 0.5 * (p + q);
            let mut left = Vec::new();
            let dl = p + 1.0;
            if p > -1.0 && dl < 0.5 * (q - p) {
                let mut d = dl;
                while p + d < mid {
                    left.push(p + d);
                    d *= 2.0;
                }
            }
            let mut right = Vec::new();
            let dr = 1.0 - q;
            if q < 1.0 && dr < 0.5 * (q - p) {
                let mut d = dr;
                while q - d > mid {
                    right.push(q - d);
                    d *= 2.0;
                }
            }
            points.extend(left);
            right.reverse();
            points.extend(right);
            points.push(q);
        }
        let legendre = self.legendre(level)?;
        let (ot, ow) = self.one_sided(level)?;
        let mut out = Vec::new();
        for w in points.windows(2) {
            let (x, y) = (w[0], w[1]);
            if y <= x {
                continue;
            }
            let m = 0.5 * (x + y);
            let h = 0.5 * (y - x);
            if x == -1.0 && y == 1.0 {
                out.extend(self.rule(level)?.iter());
            } else if y == 1.0 {
                let hs = h.powf(1.0 + lam);
                for (t, wt) in ot.iter().zip(ow) {
                    let s = m + h * t;
                    out.push((s, wt * hs * (1.0 + s).powf(lam)));
                }
            } else if x == -1.0 {
                let hs = h.powf(1.0 + lam);
                for (t, wt) in ot.iter().zip(ow) {
                    let s = m - h * t;
                    out.push((s, wt * hs * (1.0 - s).powf(lam)));
                }
            } else {
                for (t, wt) in legendre.iter() {
                    let s = m + h * t;
                    out.push((s, wt * h * (1.0 - s * s).powf(lam)));
                }
            }
        }
        Ok(out)
    }

    /// Quadrature for `gen` at velocity `u` and half-width `a` on refinement `level`.
    fn nodes_for(&self, level: usize, gen: &EntropyGenerator, u: f64, a: f64) -> Result<Vec<(f64, f64)>> {
        let breaks: Vec<f64> = if a > 0.0 {
            gen.quadrature_splits().iter().map(|b| (b - u) / a).collect()
        } else {
            Vec::new()
        };
        if breaks.iter().any(|b| b.abs() < 1.0 - 1e-13) {
            self.composite(level, &breaks)
        } else {
            Ok(self.rule(level)?.iter().collect())
        }
    }

    fn check(rho: f64, m: f64) -> Result<()> {
        if rho.is_nan() || rho < 0.0 {
            return Err(Error::domain(format!("density {rho} must be non-negative")));
        }
        if !m.is_finite() {
            return Err(Error::domain(format!("momentum {m} must be finite")));
        }
        Ok(())
    }

    /// `(eta, q, |eta| scale, |q| scale)` from one rule.
    fn pair_with(&self, rule: &[(f64, f64)], gen: &EntropyGenerator, rho: f64, u: f64) -> [f64; 4] {
        let a = self.scale * rho.powf(self.theta);
        let mut out = [0.0; 4];
        for &(s, w) in rule {
            let psi = gen.eval(u + a * s)[0];
            let flux = (u + self.theta * a * s) * psi;
            out[0] += w * psi;
            out[1] += w * flux;
            out[2] += w * psi.abs();
            out[3] += w * flux.abs();
        }
        out.map(|v| rho * v)
    }

    /// Weak entropy pair `(eta, q)` certified against the doubled rule.
    pub fn pair(&self, gen: &EntropyGenerator, rho: f64, m: f64) -> Result<(f64, f64)> {
        Self::check(rho, m)?;
        if rho < RHO_FLOOR {
            return Ok((0.0, 0.0));
        }
        let u = m / rho;
        if let EntropyGenerator::HalfSignedSquareShifted { shift } = gen {
            return Ok(self.kinked_pair(*shift, rho, u));
        }
        let a = self.scale * rho.powf(self.theta);
        let mut coarse = self.pair_with(&self.nodes_for(0, gen, u, a)?, gen, rho, u);
        for level in 1..self.levels.len() {
            let fine = self.pair_with(&self.nodes_for(level, gen, u, a)?, gen, rho, u);
            let ok_eta = (fine[0] - coarse[0]).abs() <= CERTIFY_TOL * fine[2].max(f64::MIN_POSITIVE);
            let ok_q = (fine[1] - coarse[1]).abs() <= CERTIFY_TOL * fine[3].max(f64::MIN_POSITIVE);
            if ok_eta && ok_q {
                return Ok((fine[0], fine[1]));
            }
            coarse = fine;
        }
        Err(Error::Quadrature(format!(
            "entropy pair for {} at (rho, m) = ({rho}, {m}) not certified with {MAX_NODES} nodes",
            gen.name()
        )))
    }

    /// Entropy only.
    pub fn eta(&self, gen: &EntropyGenerator, rho: f64, m: f64) -> Result<f64> {
        self.pair(gen, rho, m).map(|p| p.0)
    }

    /// Pair for the shifted half-signed square from signed incomplete-beta moments.
    fn kinked_pair(&self, shift: f64, rho: f64, u: f64) -> (f64, f64) {
        let a = self.scale * rho.powf(self.theta);
        let d = u - shift;
        let split = if a > 0.0 { -d / a } else { -d.signum() * 2.0 };
        let s = signed_moments(self.lambda, split);
        let e = d * d * s[0] + 2.0 * a * d * s[1] + a * a * s[2];
        let f = d * d * s[1] + 2.0 * a * d * s[2] + a * a * s[3];
        (0.5 * rho * e, 0.5 * rho * (u * e + self.theta * a * f))
    }

    /// Gradient and Hessian by differentiating under the integral.
    pub fn derivatives(&self, gen: &EntropyGenerator, rho: f64, m: f64) -> Result<EntropyDerivatives> {
        Self::check(rho, m)?;
        if rho < RHO_FLOOR {
            return Ok(EntropyDerivatives {
                eta_rho: 0.0,
                eta_m: 0.0,
                hessian: [[0.0; 2]; 2],
            });
        }
        let u = m / rho;
        let a = self.scale * rho.powf(self.theta);
        let th = self.theta;
        // integrals of psi, psi', s psi', psi'', s psi'', s^2 psi''
        let mut i = [0.0f64; 6];
        if let EntropyGenerator::HalfSignedSquareShifted { shift } = gen {
            let d = u - shift;
            let split = if a > 0.0 { -d / a } else { -d.signum() * 2.0 };
            let s = signed_moments(self.lambda, split);
            i[0] = 0.5 * (d * d * s[0] + 2.0 * a * d * s[1] + a * a * s[2]);
            i[1] = d * s[0] + a * s[1];
            i[2] = d * s[1] + a * s[2];
            i[3] = s[0];
            i[4] = s[1];
            i[5] = s[2];
        } else {
            for (s, w) in self.nodes_for(1, gen, u, a)? {
                let [p0, p1, p2] = gen.eval(u + a * s);
                i[0] += w * p0;
                i[1] += w * p1;
                i[2] += w * s * p1;
                i[3] += w * p2;
                i[4] += w * s * p2;
                i[5] += w * s * s * p2;
            }
        }
        let eta_rho = i[0] - u * i[1] + th * a * i[2];
        let eta_m = i[1];
        let mm = i[3] / rho;
        let rm = (th * a * i[4] - u * i[3]) / rho;
        let rr = (th * (1.0 + th) * a * i[2]
            + th * th * a * a * i[5]
            - 2.0 * th * a * u * i[4]
            + u * u * i[3])
            / rho;
        Ok(EntropyDerivatives {
            eta_rho,
            eta_m,
            hessian: [[rr, rm], [rm, mm]],
        })
    }

    /// `eta` for `psi = s^4`.
    pub fn quartic_entropy(&self, rho: f64, m: f64) -> Result<f64> {
        self.eta(&EntropyGenerator::Quartic, rho, m)
    }

    /// Largest ratio `(rho u^4 + rho^(2 gamma - 1)) / eta^{s^4}` over a
    /// `n x n` grid of `rho ∈ (0, rho_max]`, `u ∈ [-u_max, u_max]`.
    pub fn fit_quartic_domination(&self, rho_max: f64, u_max: f64, n: usize) -> Result<f64> {
        let mut worst = 0.0_f64;
        for i in 1..=n {
            let rho = rho_max * i as f64 / n as f64;
            for j in 0..n {
                let u = -u_max + 2.0 * u_max * j as f64 / (n - 1).max(1) as f64;
                let lhs = rho * u.powi(4) + rho.powf(2.0 * self.gamma - 1.0);
                let eta = self.quartic_entropy(rho, rho * u)?;
                worst = worst.max(lhs / eta);
            }
        }
        Ok(worst)
    }

    /// Largest ratio `|xi' H_psi xi| / xi' H_* xi` over the supplied states and directions.
    pub fn fit_hessian_domination(
        &self,
        gas: &GasLaw,
        gen: &EntropyGenerator,
        samples: &[(f64, f64, [f64; 2])],
    ) -> Result<f64> {
        let mut worst = 0.0_f64;
        for &(rho, m, xi) in samples {
            let h = self.derivatives(gen, rho, m)?.hessian;
            let hs = mechanical_hessian(gas, rho, m);
            let quad = |h: &[[f64; 2]; 2]| {
                h[0][0] * xi[0] * xi[0] + 2.0 * h[0][1] * xi[0] * xi[1] + h[1][1] * xi[1] * xi[1]
            };
            let denom = quad(&hs);
            if denom > 0.0 {
                worst = worst.max(quad(&h).abs() / denom);
            }
        }
        Ok(worst)
    }
}

/// Smooth monotone connection of two end states over `[-L0, L0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState {
    pub rho_minus: f64,
    pub u_minus: f64,
    pub rho_plus: f64,
    pub u_plus: f64,
    pub l0: f64,
}

/// `C^∞` step from 0 at `t <= 0` to 1 at `t >= 1`, monotone in between.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |x: f64| (-1.0 / x).exp();
    let a = f(t);
    a / (a + f(1.0 - t))
}

fn smooth_step_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let f = |x: f64| (-1.0 / x).exp();
    let (a, b) = (f(t), f(1.0 - t));
    let (da, db) = (a / (t * t), -b / ((1.0 - t) * (1.0 - t)));
    (da * b - a * db) / ((a + b) * (a + b))
}

impl ReferenceState {
    pub fn new(rho_minus: f64, u_minus: f64, rho_plus: f64, u_plus: f64, l0: f64) -> Result<Self> {
        if !(rho_minus >= 0.0 && rho_plus >= 0.0) {
            return Err(Error::domain("end-state densities must be non-negative"));
        }
        if !(u_minus.is_finite() && u_plus.is_finite()) {
            return Err(Error::domain("end-state velocities must be finite"));
        }
        if !(l0 > 1.0 && l0.is_finite()) {
            return Err(Error::domain("blend half-width must exceed 1"));
        }
        Ok(Self {
            rho_minus,
            u_minus,
            rho_plus,
            u_plus,
            l0,
        })
    }

    /// Reference equal to `(rho, u)` everywhere.
    pub fn constant(rho: f64, u: f64) -> Self {
        Self {
            rho_minus: rho,
            u_minus: u,
            rho_plus: rho,
            u_plus: u,
            l0: 2.0,
        }
    }

    fn weight(&self, x: f64) -> f64 {
        smooth_step((x + self.l0) / (2.0 * self.l0))
    }

    pub fn rho_bar(&self, x: f64) -> f64 {
        self.rho_minus + (self.rho_plus - self.rho_minus) * self.weight(x)
    }

    pub fn u_bar(&self, x: f64) -> f64 {
        self.u_minus + (self.u_plus - self.u_minus) * self.weight(x)
    }

    pub fn m_bar(&self, x: f64) -> f64 {
        self.rho_bar(x) * self.u_bar(x)
    }

    /// `(rho_bar', u_bar')`.
    pub fn slopes(&self, x: f64) -> (f64, f64) {
        let w = smooth_step_prime((x + self.l0) / (2.0 * self.l0)) / (2.0 * self.l0);
        ((self.rho_plus - self.rho_minus) * w, (self.u_plus - self.u_minus) * w)
    }
}

/// `½ rho (u - u_bar)^2 + h(rho) - h(rho_bar) - h'(rho_bar)(rho - rho_bar)` with the gas law's modifier.
pub fn relative_energy_density(
    gas: &GasLaw,
    reference: &ReferenceState,
    x: f64,
    rho: f64,
    m: f64,
) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::domain(format!("density {rho} must be non-negative")));
    }
    Ok(relative_energy_at(gas, reference.rho_bar(x), reference.u_bar(x), rho, m))
}

/// Relative energy against an explicit reference value.
#[inline]
pub fn relative_energy_at(gas: &GasLaw, rho_bar: f64, u_bar: f64, rho: f64, m: f64) -> f64 {
    let kinetic = if rho <= RHO_FLOOR {
        0.0
    } else {
        let du = m / rho - u_bar;
        0.5 * rho * du * du
    };
    let hbar = gas.h_unchecked(rho) - gas.h_unchecked(rho_bar) - gas.dh_delta(rho_bar) * (rho - rho_bar);
    kinetic + hbar.max(0.0)
}

/// Evaluated pieces of the special-pair inequalities at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialPairReport {
    pub eta_check: f64,
    pub q_check: f64,
    pub eta_tilde: f64,
    pub q_tilde: f64,
    /// `q_tilde` at the left end state; negative by the sign property.
    pub q_tilde_at_minus: f64,
    /// `M(rho|u-u_-|^2 + rho(rho^theta - rho_-^theta)^2) - |eta_tilde|`.
    pub eta_tilde_margin: f64,
    /// `q_tilde - [(rho|u-u_-|^3 + rho^(gamma+theta))/M - M(rho + rho|u-u_-|^2 + rho^gamma)]`.
    pub growth_margin: f64,
    /// `M q_tilde + M - |-q_check + m eta_rho + (m^2/rho) eta_m|`.
    pub source_margin: f64,
    /// `M(|u-u_-| + |rho^theta - rho_-^theta|) - |eta_tilde_m|`.
    pub eta_tilde_m_margin: f64,
}

/// Pieces entering the growth inequality at a state: `(q_tilde, A, B)` with
/// the inequality `q_tilde >= A/M - M B`.
fn growth_terms(
    kernel: &EntropyKernel,
    reference: &ReferenceState,
    grad_minus: (f64, f64),
    rho: f64,
    m: f64,
) -> Result<(f64, f64, f64, f64, f64)> {
    let gen = EntropyGenerator::HalfSignedSquareShifted {
        shift: reference.u_minus,
    };
    let (eta_c, q_c) = kernel.pair(&gen, rho, m)?;
    let u = if rho < RHO_FLOOR { 0.0 } else { m / rho };
    let p = kernel.kappa * rho.powf(kernel.gamma);
    let flux_m = if rho < RHO_FLOOR { 0.0 } else { m * u + p };
    let q_t = q_c - (grad_minus.0 * m + grad_minus.1 * flux_m);
    let du = (u - reference.u_minus).abs();
    let big_a = rho * du.powi(3) + rho.powf(kernel.gamma + kernel.theta);
    let big_b = rho + rho * du * du + rho.powf(kernel.gamma);
    Ok((eta_c, q_c, q_t, big_a, big_b))
}

fn minus_state(reference: &ReferenceState) -> (f64, f64) {
    (reference.rho_minus, reference.rho_minus * reference.u_minus)
}

/// Evaluates the special pair and its inequality margins at `(rho, m)` for the constant `big_m`.
pub fn special_pair_check(
    kernel: &EntropyKernel,
    reference: &ReferenceState,
    rho: f64,
    m: f64,
    big_m: f64,
) -> Result<SpecialPairReport> {
    EntropyKernel::check(rho, m)?;
    let gen = EntropyGenerator::HalfSignedSquareShifted {
        shift: reference.u_minus,
    };
    let (rm, mm) = minus_state(reference);
    let dm = kernel.derivatives(&gen, rm, mm)?;
    let grad_minus = (dm.eta_rho, dm.eta_m);
    let (eta_c, q_c, q_t, big_a, big_b) = growth_terms(kernel, reference, grad_minus, rho, m)?;
    let (_, _, q_t_minus, _, _) = growth_terms(kernel, reference, grad_minus, rm, mm)?;
    let eta_t = eta_c - grad_minus.0 * (rho - rm) - grad_minus.1 * (m - mm);
    let d = kernel.derivatives(&gen, rho, m)?;
    let u = if rho < RHO_FLOOR { 0.0 } else { m / rho };
    let du = u - reference.u_minus;
    let drt = rho.powf(kernel.theta) - rm.powf(kernel.theta);
    let source = -q_c + m * d.eta_rho + if rho < RHO_FLOOR { 0.0 } else { m * u * d.eta_m };
    let eta_tm = d.eta_m - grad_minus.1;
    Ok(SpecialPairReport {
        eta_check: eta_c,
        q_check: q_c,
        eta_tilde: eta_t,
        q_tilde: q_t,
        q_tilde_at_minus: q_t_minus,
        eta_tilde_margin: big_m * (rho * du * du + rho * drt * drt) - eta_t.abs(),
        growth_margin: q_t - (big_a / big_m - big_m * big_b),
        source_margin: big_m * q_t + big_m - source.abs(),
        eta_tilde_m_margin: big_m * (du.abs() + drt.abs()) - eta_tm.abs(),
    })
}

/// `q_tilde` at the left end state.
pub fn q_tilde_at_minus(kernel: &EntropyKernel, reference: &ReferenceState) -> Result<f64> {
    let (rm, mm) = minus_state(reference);
    special_pair_check(kernel, reference, rm, mm, 1.0).map(|r| r.q_tilde_at_minus)
}

/// Smallest `M` for which the growth inequality holds at every grid state
/// `rho ∈ [0, rho_max]`, `u - u_- ∈ [-du_max, du_max]` (`n x n` points).
pub fn fit_growth_constant(
    kernel: &EntropyKernel,
    reference: &ReferenceState,
    rho_max: f64,
    du_max: f64,
    n: usize,
) -> Result<f64> {
    let gen = EntropyGenerator::HalfSignedSquareShifted {
        shift: reference.u_minus,
    };
    let (rm, mm) = minus_state(reference);
    let dm = kernel.derivatives(&gen, rm, mm)?;
    let grad_minus = (dm.eta_rho, dm.eta_m);
    let mut best = f64::MIN_POSITIVE;
    let steps = n.max(2) - 1;
    for i in 0..=steps {
        let rho = rho_max * i as f64 / steps as f64;
        for j in 0..=steps {
            let du = -du_max + 2.0 * du_max * j as f64 / steps as f64;
            let m = rho * (reference.u_minus + du);
            let (_, _, q_t, a, b) = growth_terms(kernel, reference, grad_minus, rho, m)?;
            if b <= 0.0 {
                continue;
            }
            // M^2 B + q M - A >= 0
            let need = (-q_t + (q_t * q_t + 4.0 * a * b).sqrt()) / (2.0 * b);
            best = best.max(need);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn kernel(gamma: f64) -> (GasLaw, EntropyKernel) {
        let g = GasLaw::new(gamma, 0.0).unwrap();
        let k = EntropyKernel::new(&g).unwrap();
        (g, k)
    }

    #[test]
    fn constant_generator_gives_mass_multiple() {
        let (_, k) = kernel(1.4);
        let (eta, q) = k.pair(&EntropyGenerator::One, 0.7, -0.3).unwrap();
        assert_relative_eq!(eta, k.mass() * 0.7, max_relative = 1e-12);
        assert_relative_eq!(q, k.mass() * -0.3, max_relative = 1e-12);
    }

    #[test]
    fn linear_generator_gives_momentum_flux() {
        let (g, k) = kernel(2.0);
        let (rho, m) = (1.3, 0.4);
        let (eta, q) = k.pair(&EntropyGenerator::Linear, rho, m).unwrap();
        assert_relative_eq!(eta, k.mass() * m, max_relative = 1e-12);
        let flux = m * m / rho + g.kappa() * rho * rho;
        assert_relative_eq!(q, k.mass() * flux, max_relative = 1e-12);
    }

    #[test]
    fn vacuum_is_zero() {
        let (_, k) = kernel(1.4);
        for gen in EntropyGenerator::default_convex_family() {
            assert_eq!(k.pair(&gen, 0.0, 0.0).unwrap(), (0.0, 0.0));
        }
        assert!(k.pair(&EntropyGenerator::One, -1.0, 0.0).is_err());
    }

    #[test]
    fn mechanical_energy_examples() {
        let g = GasLaw::new(2.0, 0.0).unwrap();
        let (e, q) = mechanical_energy(&g, 1.0, 1.0).unwrap();
        assert_relative_eq!(e, 0.625, epsilon = 1e-15);
        assert_relative_eq!(q, 0.75, epsilon = 1e-15);
        let (e, q) = mechanical_energy(&g, 2.0, 0.0).unwrap();
        assert_relative_eq!(e, 0.5, epsilon = 1e-15);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn quartic_at_rest_gamma_two() {
        let (_, k) = kernel(2.0);
        assert_relative_eq!(k.quartic_entropy(1.0, 0.0).unwrap(), PI / 16.0, epsilon = 1e-13);
        assert_eq!(k.quartic_entropy(0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn kinked_pair_matches_quadrature() {
        // the kinked pair from moments vs a smoothed-free brute-force quadrature
        for &gamma in &[1.4, 2.0, 5.0] {
            let (_, k) = kernel(gamma);
            let shift = 0.3;
            let gen = EntropyGenerator::HalfSignedSquareShifted { shift };
            let proxy = EntropyGenerator::custom("kink", false, move |s| {
                let w = s - shift;
                [0.5 * w * w.abs(), w.abs(), w.signum()]
            });
            let fine = GaussJacobi::symmetric(512, k.lambda()).unwrap();
            for &(rho, m) in &[(0.5, 0.1), (2.0, 0.6), (1.0, 5.0)] {
                let (eta, q) = k.pair(&gen, rho, m).unwrap();
                let r = k.pair_with(&fine.iter().collect::<Vec<_>>(), &proxy, rho, m / rho);
                assert!((eta - r[0]).abs() < 1e-5 * r[2], "gamma {gamma}");
                assert!((q - r[1]).abs() < 1e-5 * r[3], "gamma {gamma}");
            }
        }
    }

    #[test]
    fn kinked_vanishes_at_shifted_rest() {
        let (_, k) = kernel(1.4);
        let gen = EntropyGenerator::HalfSignedSquareShifted { shift: 0.8 };
        let (eta, _) = k.pair(&gen, 1.7, 1.7 * 0.8).unwrap();
        assert!(eta.abs() < 1e-14);
    }

    #[test]
    fn q_tilde_closed_form() {
        for &gamma in &[1.4, 2.0, 3.0, 5.0] {
            let (g, k) = kernel(gamma);
            for &rho in &[0.1, 1.0] {
                for &u in &[0.0, 1.0] {
                    let r = ReferenceState::new(rho, u, rho, 0.0, 2.0).unwrap();
                    let got = q_tilde_at_minus(&k, &r).unwrap();
                    let lam = g.lambda_exp();
                    let want = rho.powf(gamma + g.theta()) * g.kappa() / (lam + 1.0)
                        * (2.0 * gamma / (3.0 * gamma - 1.0) - 1.0);
                    assert_relative_eq!(got, want, max_relative = 1e-9);
                    assert!(got < 0.0);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (_, k) = kernel(1.4);
        let gens = [
            EntropyGenerator::HalfSquare,
            EntropyGenerator::SmoothedConvex {
                center: 0.2,
                width: 0.5,
            },
            EntropyGenerator::HalfSignedSquareShifted { shift: 0.1 },
        ];
        let (rho, m) = (0.9, 0.35);
        let h = 1e-5;
        for gen in &gens {
            let d = k.derivatives(gen, rho, m).unwrap();
            let f = |r: f64, mm: f64| k.eta(gen, r, mm).unwrap();
            let er = (f(rho + h, m) - f(rho - h, m)) / (2.0 * h);
            let em = (f(rho, m + h) - f(rho, m - h)) / (2.0 * h);
            assert_relative_eq!(d.eta_rho, er, epsilon = 1e-7);
            assert_relative_eq!(d.eta_m, em, epsilon = 1e-7);
            let g = |r: f64, mm: f64| k.derivatives(gen, r, mm).unwrap();
            let hrr = (g(rho + h, m).eta_rho - g(rho - h, m).eta_rho) / (2.0 * h);
            let hrm = (g(rho, m + h).eta_rho - g(rho, m - h).eta_rho) / (2.0 * h);
            let hmm = (g(rho, m + h).eta_m - g(rho, m - h).eta_m) / (2.0 * h);
            assert_relative_eq!(d.hessian[0][0], hrr, epsilon = 1e-6);
            assert_relative_eq!(d.hessian[0][1], hrm, epsilon = 1e-6);
            assert_relative_eq!(d.hessian[1][1], hmm, epsilon = 1e-6);
        }
    }

    #[test]
    fn spline_ramp_pair_matches_adaptive_oracle() {
        for gamma in [1.4, 2.0, 5.0] {
            let (_, k) = kernel(gamma);
            let gen = EntropyGenerator::SplineRamp {
                center: 0.0,
                radius: 1.0,
            };
            for &(rho, m) in &[(0.965342080466148, -1.3452123472747441), (2.0, 0.1), (0.3, 0.9), (4.0, -3.0)] {
                let (eta, q) = k.pair(&gen, rho, m).unwrap();
                let u = m / rho;
                let a = k.scale() * rho.powf(k.theta());
                let lam = k.lambda();
                // s = -cos(phi) moves the weight into sin^(2 lam + 1); split at the kinks
                let mut cuts = vec![0.0, PI];
                for b in gen.breakpoints() {
                    let sb = (b - u) / a;
                    if sb.abs() < 1.0 {
                        cuts.push((-sb).acos());
                    }
                }
                cuts.sort_by(f64::total_cmp);
                let integral = |f: &dyn Fn(f64) -> f64| -> f64 {
                    cuts.windows(2)
                        .map(|w| {
                            crate::quadrature::adaptive_gauss_kronrod(
                                |phi| {
                                    let s = -phi.cos();
                                    f(s) * phi.sin().powf(2.0 * lam + 1.0)
                                },
                                w[0],
                                w[1],
                                1e-14,
                            )
                            .unwrap()
                        })
                        .sum()
                };
                let e = rho * integral(&|s| gen.eval(u + a * s)[0]);
                let f = rho * integral(&|s| (u + k.theta() * a * s) * gen.eval(u + a * s)[0]);
                assert!((eta - e).abs() < 1e-10 * (1.0 + e.abs()), "{gamma} {rho} {m}: {eta} {e}");
                assert!((q - f).abs() < 1e-10 * (1.0 + f.abs()), "{gamma} {rho} {m}: {q} {f}");
            }
        }
    }

    #[test]
    fn spline_ramp_is_consistent() {
        let g = EntropyGenerator::SplineRamp {
            center: 0.0,
            radius: 1.0,
        };
        let h = 1e-6;
        for &s in &[-0.7, -0.1, 0.3, 0.99] {
            let [p, d, dd] = g.eval(s);
            let [pp, dp, _] = g.eval(s + h);
            let [pm, dm, _] = g.eval(s - h);
            assert_relative_eq!(d, (pp - pm) / (2.0 * h), epsilon = 1e-8);
            assert_relative_eq!(dd, (dp - dm) / (2.0 * h), epsilon = 1e-8);
            assert!(p >= 0.0 && dd >= 0.0);
        }
        assert_relative_eq!(g.eval(1.0)[0], 1.0, epsilon = 1e-15);
        assert_eq!(g.eval(-1.0)[0], 0.0);
        assert_eq!(g.eval(3.0), [3.0, 1.0, 0.0]);
    }

    #[test]
    fn relative_energy_examples() {
        let g = GasLaw::new(2.0, 0.0).unwrap();
        let r = ReferenceState::constant(1.0, 0.0);
        assert_relative_eq!(relative_energy_density(&g, &r, 0.0, 2.0, 0.0).unwrap(), 0.125);
        let r = ReferenceState::new(1.0, 0.5, 0.3, -0.2, 3.0).unwrap();
        for &x in &[-5.0, -1.0, 0.4, 7.0] {
            let v = relative_energy_density(&g, &r, x, r.rho_bar(x), r.m_bar(x)).unwrap();
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn reference_blend_shape() {
        let r = ReferenceState::new(2.0, 1.0, 0.5, -1.0, 3.0).unwrap();
        assert_eq!(r.rho_bar(-3.0), 2.0);
        assert_eq!(r.rho_bar(3.5), 0.5);
        assert_eq!(r.u_bar(10.0), -1.0);
        let mut prev = r.rho_bar(-3.0);
        for i in 1..=600 {
            let x = -3.0 + 0.01 * i as f64;
            let v = r.rho_bar(x);
            assert!(v <= prev);
            prev = v;
        }
        let h = 1e-6;
        let x = 0.7;
        let (dr, du) = r.slopes(x);
        assert_relative_eq!(dr, (r.rho_bar(x + h) - r.rho_bar(x - h)) / (2.0 * h), epsilon = 1e-8);
        assert_relative_eq!(du, (r.u_bar(x + h) - r.u_bar(x - h)) / (2.0 * h), epsilon = 1e-8);
        assert!(ReferenceState::new(1.0, 0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn generator_names_round_trip() {
        for g in EntropyGenerator::default_convex_family() {
            let back = EntropyGenerator::from_name(&g.name()).unwrap();
            assert_eq!(back.name(), g.name());
        }
        assert!(EntropyGenerator::from_name("cubic").is_err());
        assert!(EntropyGenerator::from_name("smoothed_abs:0,-1").is_err());
    }
}
