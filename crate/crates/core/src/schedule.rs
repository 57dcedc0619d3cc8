//! Coupled parameter sequences `(eps, delta, a, b)` for the vanishing-viscosity
//! limit and their certificates.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::NozzleProfile;
use crate::thermo::GasLaw;

/// Default largest viscosity of a ladder.
pub const DEFAULT_EPS0: f64 = 0.1;
/// Default working exponent.
pub const DEFAULT_BETA: f64 = 4.0;
/// Default acceptance threshold of the certificate.
pub const DEFAULT_BUDGET: f64 = 10.0;
/// Largest `delta` exponent tried by [`make_default`].
pub const MAX_DELTA_EXPONENT: f64 = 12.0;

/// How the interval grows as `eps` decreases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainRule {
    /// `a = -scale/eps`, `b = scale/eps`.
    Symmetric { scale: f64 },
    /// `a = eps`, `b = 1/eps`, far-field density `rho_scale eps^(n/gamma)`.
    Spherical { dim: u32, rho_scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscositySchedule {
    pub eps_list: Vec<f64>,
    /// `delta = eps^delta_exponent`.
    pub delta_exponent: f64,
    pub domain: DomainRule,
    pub beta: f64,
    pub m_budget: f64,
    /// Half-width of the reference-state transition; the interval must contain it.
    pub l0: f64,
}

impl ViscositySchedule {
    /// Geometric ladder `eps0 2^-k`, `k < n`.
    pub fn ladder(eps0: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
    }

    pub fn delta(&self, eps: f64) -> f64 {
        eps.powf(self.delta_exponent)
    }

    pub fn interval(&self, eps: f64) -> (f64, f64) {
        match self.domain {
            DomainRule::Symmetric { scale } => (-scale / eps, scale / eps),
            DomainRule::Spherical { .. } => (eps, 1.0 / eps),
        }
    }

    /// Far-field density for spherical schedules.
    pub fn rho_bar(&self, eps: f64, gamma: f64) -> Option<f64> {
        match self.domain {
            DomainRule::Spherical { dim, rho_scale } => {
                Some(rho_scale * eps.powf(dim as f64 / gamma))
            }
            DomainRule::Symmetric { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::config("viscosity list is empty"));
        }
        if self.eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::config("viscosities must be positive"));
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("viscosities must be strictly decreasing"));
        }
        if !(self.delta_exponent > 0.0 && self.delta_exponent.is_finite()) {
            return Err(Error::config("delta exponent must be positive"));
        }
        if !(self.beta > 2.0 && self.beta.is_finite()) {
            return Err(Error::config("working exponent must exceed 2"));
        }
        match self.domain {
            DomainRule::Symmetric { scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::config("domain scale must be positive"));
                }
                for &e in &self.eps_list {
                    let (a, b) = self.interval(e);
                    if a.abs() <= self.l0 || b <= self.l0 {
                        return Err(Error::config(format!(
                            "interval [{a}, {b}] at eps = {e} does not contain the transition [-{l0}, {l0}]",
                            l0 = self.l0
                        )));
                    }
                }
            }
            DomainRule::Spherical { rho_scale, .. } => {
                if !(rho_scale > 0.0 && rho_scale.is_finite()) {
                    return Err(Error::config("far-field density scale must be positive"));
                }
                if self.eps_list[0] >= 1.0 {
                    return Err(Error::config("spherical schedules need eps < 1"));
                }
            }
        }
        Ok(())
    }
}

/// Quantities certified at one viscosity.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRow {
    pub eps: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    /// The six growth conditions; `None` when skipped or not applicable.
    pub bullets: [Option<f64>; 6],
    /// `(1 + sup |(A'/A)'|) eps |b - a|`; `None` for spherical schedules.
    pub log_slope_condition: Option<f64>,
    /// `rho_bar^gamma b^n + (delta/eps) b^n`; spherical schedules only.
    pub spherical_relation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub rows: Vec<CertificateRow>,
    pub m_budget: f64,
    /// Max over the ladder of each bullet.
    pub bullet_max: [Option<f64>; 6],
    pub log_slope_max: Option<f64>,
    pub spherical_max: Option<f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

pub const BULLET_NAMES: [&str; 6] = [
    "eps|b-a|",
    "eps sup|(A'/A)'| sup A |b-a|",
    "eps sup|A''|",
    "delta/eps sup A |a|^beta sup A^((gamma-3)/(gamma-1))",
    "delta/eps sup A |a|",
    "delta sup A |a|^2 sup A^(-4/(2gamma-4))",
];

impl CertificateReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "certificate (budget {})", self.m_budget);
        let fmt = |v: Option<f64>| v.map_or("skipped".to_string(), |v| format!("{v:.6e}"));
        for (name, v) in BULLET_NAMES.iter().zip(self.bullet_max) {
            let _ = writeln!(out, "  {name:<55} {}", fmt(v));
        }
        let _ = writeln!(out, "  {:<55} {}", "(1+sup|(A'/A)'|) eps|b-a|", fmt(self.log_slope_max));
        let _ = writeln!(out, "  {:<55} {}", "rho_bar^gamma b^n + delta/eps b^n", fmt(self.spherical_max));
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        let _ = writeln!(out, "  verdict: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }
}

/// Suprema of the profile quantities over `[a, b]`.
struct Suprema {
    area: f64,
    area_dd: f64,
    dlog_prime: f64,
    pow_four: f64,
    pow_six: Option<f64>,
}

const SAMPLES: usize = 10_000;

fn suprema(profile: &NozzleProfile, gamma: f64, a: f64, b: f64) -> Result<Suprema> {
    let e4 = (gamma - 3.0) / (gamma - 1.0);
    let e6 = if gamma == 2.0 {
        None
    } else {
        Some(-4.0 / (2.0 * gamma - 4.0))
    };
    let mut s = Suprema {
        area: 0.0,
        area_dd: 0.0,
        dlog_prime: 0.0,
        pow_four: 0.0,
        pow_six: e6.map(|_| 0.0),
    };
    let mut visit = |x: f64| -> Result<()> {
        let area = profile.area(x)?;
        s.area = s.area.max(area);
        s.area_dd = s.area_dd.max(profile.d2_area(x)?.abs());
        s.dlog_prime = s.dlog_prime.max(profile.dlog_area_prime(x)?.abs());
        s.pow_four = s.pow_four.max(area.powf(e4));
        if let (Some(p), Some(e)) = (s.pow_six.as_mut(), e6) {
            *p = p.max(area.powf(e));
        }
        Ok(())
    };
    let h = (b - a) / SAMPLES as f64;
    for i in 0..=SAMPLES {
        visit(if i == SAMPLES { b } else { a + h * i as f64 })?;
    }
    // endpoint refinement
    for k in 1..=20 {
        let d = h * 0.5f64.powi(k);
        visit(a + d)?;
        visit(b - d)?;
    }
    Ok(s)
}

/// Evaluates the schedule's growth conditions for `profile` and `gas`.
pub fn certify(s: &ViscositySchedule, profile: &NozzleProfile, gas: &GasLaw) -> Result<CertificateReport> {
    s.validate()?;
    let gamma = gas.gamma();
    let mut rows = Vec::with_capacity(s.eps_list.len());
    let mut notes = Vec::new();
    match s.domain {
        DomainRule::Spherical { dim, .. } => {
            if profile.spherical_dim() != Some(dim) {
                return Err(Error::config("spherical schedule needs the matching spherical profile"));
            }
            notes.push("spherical schedule certified by the far-field relation; nozzle growth conditions not applicable".into());
            for &eps in &s.eps_list {
                let (a, b) = s.interval(eps);
                let delta = s.delta(eps);
                let rho_bar = s.rho_bar(eps, gamma).expect("spherical rule");
                let bn = b.powi(dim as i32);
                rows.push(CertificateRow {
                    eps,
                    delta,
                    a,
                    b,
                    bullets: [None; 6],
                    log_slope_condition: None,
                    spherical_relation: Some(rho_bar.powf(gamma) * bn + delta / eps * bn),
                });
            }
        }
        DomainRule::Symmetric { .. } => {
            if gamma == 2.0 {
                notes.push("sixth growth condition skipped: its exponent is singular at gamma = 2".into());
            }
            for &eps in &s.eps_list {
                let (a, b) = s.interval(eps);
                let delta = s.delta(eps);
                let sup = suprema(profile, gamma, a, b)?;
                let len = b - a;
                let abs_a = a.abs();
                rows.push(CertificateRow {
                    eps,
                    delta,
                    a,
                    b,
                    bullets: [
                        Some(eps * len),
                        Some(eps * sup.dlog_prime * sup.area * len),
                        Some(eps * sup.area_dd),
                        Some(delta / eps * sup.area * abs_a.powf(s.beta) * sup.pow_four),
                        Some(delta / eps * sup.area * abs_a),
                        sup.pow_six.map(|p| delta * sup.area * abs_a * abs_a * p),
                    ],
                    log_slope_condition: Some((1.0 + sup.dlog_prime) * eps * len),
                    spherical_relation: None,
                });
            }
        }
    }
    // NaN propagates so that it fails the budget check
    let col_max = |f: &dyn Fn(&CertificateRow) -> Option<f64>| {
        rows.iter()
            .filter_map(f)
            .reduce(|m, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v) })
    };
    let mut bullet_max = [None; 6];
    for (k, slot) in bullet_max.iter_mut().enumerate() {
        *slot = col_max(&|r| r.bullets[k]);
    }
    let log_slope_max = col_max(&|r| r.log_slope_condition);
    let spherical_max = col_max(&|r| r.spherical_relation);
    let within = |v: Option<f64>| v.map_or(true, |v| v.is_finite() && v <= s.m_budget);
    let pass = bullet_max.iter().all(|v| within(*v)) && within(log_slope_max) && within(spherical_max);
    Ok(CertificateReport {
        rows,
        m_budget: s.m_budget,
        bullet_max,
        log_slope_max,
        spherical_max,
        pass,
        notes,
    })
}

/// Default ladder and rules for `profile`, with the smallest `delta` exponent
/// (from `1 + beta` up to 12 in unit steps) that certifies.
pub fn make_default(profile: &NozzleProfile, gamma: f64, n_eps: usize) -> Result<ViscositySchedule> {
    if n_eps < 2 {
        return Err(Error::config("a ladder needs at least two viscosities"));
    }
    let gas = GasLaw::new(gamma, 0.0)?;
    let domain = match profile.spherical_dim() {
        Some(dim) => DomainRule::Spherical { dim, rho_scale: 1.0 },
        None => DomainRule::Symmetric { scale: 1.0 },
    };
    let mut s = ViscositySchedule {
        eps_list: ViscositySchedule::ladder(DEFAULT_EPS0, n_eps),
        delta_exponent: 1.0 + DEFAULT_BETA,
        domain,
        beta: DEFAULT_BETA,
        m_budget: DEFAULT_BUDGET,
        l0: 2.0,
    };
    while s.delta_exponent <= MAX_DELTA_EXPONENT {
        if certify(&s, profile, &gas)?.pass {
            return Ok(s);
        }
        s.delta_exponent += 1.0;
    }
    Err(Error::config(format!(
        "no delta exponent up to {MAX_DELTA_EXPONENT} certifies the {} profile",
        profile.kind_name()
    )))
}
