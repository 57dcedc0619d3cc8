//! Monitored functionals: relative energy and its dissipation, Riemann
//! invariant extrema with the geometric correction, windowed integrals,
//! the vacuum functional and weak-form residuals.

use std::fmt::Write as _;

use crate::entropy::{relative_energy_at, EntropyGenerator, EntropyKernel, ReferenceState};
use crate::error::{Error, Result};
use crate::geometry::NozzleProfile;
use crate::solver::initial::bump;
use crate::solver::{FluidField, Grid, RunObserver, StepInfo, Stepper};
use crate::thermo::{GasLaw, RHO_FLOOR};

/// What the recorder keeps while a run advances.
#[derive(Debug, Clone, PartialEq)]
pub struct RecorderSettings {
    /// Number of uniformly spaced snapshot times per run.
    pub snapshots: usize,
    /// Reference state of the relative energy.
    pub reference: ReferenceState,
    /// Record energy and Riemann series every this many steps.
    pub record_every: usize,
    /// Store snapshot fields.
    pub keep_history: bool,
    /// Crop stored snapshots to the nodes covering this interval.
    pub history_window: Option<(f64, f64)>,
    /// Threshold density of the vacuum functional.
    pub rho_tilde: f64,
}

impl RecorderSettings {
    pub fn new(reference: ReferenceState) -> Self {
        Self {
            snapshots: 32,
            reference,
            record_every: 1,
            keep_history: true,
            history_window: None,
            rho_tilde: reference.rho_minus.min(reference.rho_plus).max(RHO_FLOOR),
        }
    }

    pub fn snapshot_times(&self, t0: f64, t_end: f64) -> Vec<f64> {
        let n = self.snapshots.max(1);
        (1..=n)
            .map(|k| {
                if k == n {
                    t_end
                } else {
                    t0 + (t_end - t0) * k as f64 / n as f64
                }
            })
            .collect()
    }
}

impl Default for RecorderSettings {
    fn default() -> Self {
        Self::new(ReferenceState::constant(1.0, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub energy: f64,
    /// Cumulative viscous dissipation up to `t`.
    pub dissipation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannRecord {
    pub t: f64,
    pub max_w: f64,
    pub min_z: f64,
    /// Accumulated `∫ sup |u sqrt(p') A'/A - eps (A'/A)' u| dt`.
    pub correction: f64,
}

impl RiemannRecord {
    /// `max w` minus the correction.
    pub fn corrected_max_w(&self) -> f64 {
        self.max_w - self.correction
    }
    /// `min z` plus the correction.
    pub fn corrected_min_z(&self) -> f64 {
        self.min_z + self.correction
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumRecord {
    pub t: f64,
    pub functional: f64,
    pub min_rho: f64,
}

/// Space-time integrals over `K x [t1, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrabilityRecord {
    pub window: (f64, f64),
    pub times: (f64, f64),
    /// `∫∫ rho^(gamma+1)`.
    pub rho_gamma_plus_one: f64,
    /// `∫∫ delta rho^3`.
    pub delta_rho_cubed: f64,
    /// `∫∫ rho |u|^3`.
    pub rho_u_cubed: f64,
    /// `∫∫ rho^(gamma+theta)`.
    pub rho_gamma_theta: f64,
    /// `eps ∫∫ rho^3 A`.
    pub eps_rho_cubed_area: f64,
}

impl IntegrabilityRecord {
    pub fn values(&self) -> [f64; 5] {
        [
            self.rho_gamma_plus_one,
            self.delta_rho_cubed,
            self.rho_u_cubed,
            self.rho_gamma_theta,
            self.eps_rho_cubed_area,
        ]
    }

    pub const NAMES: [&'static str; 5] = [
        "rho^(gamma+1)",
        "delta rho^3",
        "rho|u|^3",
        "rho^(gamma+theta)",
        "eps rho^3 A",
    ];
}

/// Bump test function `b((t-t0)/rt) b((x-x0)/rx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub t0: f64,
    pub rt: f64,
    pub x0: f64,
    pub rx: f64,
}

fn bump_prime(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        let d = 1.0 - y * y;
        -2.0 * y / (d * d) * bump(y)
    }
}

impl TestFunction {
    /// `(phi, phi_t, phi_x)`.
    pub fn eval(&self, x: f64, t: f64) -> [f64; 3] {
        let (yt, yx) = ((t - self.t0) / self.rt, (x - self.x0) / self.rx);
        let (bt, bx) = (bump(yt), bump(yx));
        [
            bt * bx,
            bump_prime(yt) / self.rt * bx,
            bt * bump_prime(yx) / self.rx,
        ]
    }

    pub fn support(&self) -> ((f64, f64), (f64, f64)) {
        (
            (self.x0 - self.rx, self.x0 + self.rx),
            (self.t0 - self.rt, self.t0 + self.rt),
        )
    }

    /// 4 x 8 lattice (time by space) of bumps supported inside `K x [t1, t2]`.
    pub fn lattice(window: (f64, f64), times: (f64, f64)) -> Vec<Self> {
        let (lo, hi) = window;
        let (t1, t2) = times;
        let (rt, rx) = ((t2 - t1) / 5.0, (hi - lo) / 9.0);
        let mut out = Vec::with_capacity(32);
        for j in 0..4 {
            for k in 0..8 {
                out.push(Self {
                    t0: t1 + rt * (j + 1) as f64,
                    rt,
                    x0: lo + rx * (k + 1) as f64,
                    rx,
                });
            }
        }
        out
    }
}

/// Weak-form residuals for a set of test functions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeakResidualRecord {
    pub tests: Vec<TestFunction>,
    /// `∫∫ (rho phi_t + m phi_x) A`.
    pub mass: Vec<f64>,
    /// `∫∫ (m phi_t + (m^2/rho) phi_x) A + p (A phi)_x`, with the unmodified pressure.
    pub momentum: Vec<f64>,
    /// `∫∫ |phi| + |phi_t| + |phi_x|`.
    pub norms: Vec<f64>,
    /// Per generator: `-∫∫ (eta phi_t + q phi_x) A + ∫∫ A'(m eta_rho + (m^2/rho) eta_m - q) phi`,
    /// nonpositive for an entropy solution.
    pub entropy: Vec<(String, Vec<f64>)>,
}

impl WeakResidualRecord {
    /// Largest `max(pairing, 0) / ||phi||` over generators and tests.
    pub fn max_entropy_violation(&self) -> f64 {
        self.entropy
            .iter()
            .flat_map(|(_, v)| v.iter().zip(&self.norms).map(|(r, n)| r.max(0.0) / n))
            .fold(0.0, f64::max)
    }

    /// Largest `|residual| / ||phi||` of the two balance laws.
    pub fn max_balance_residual(&self) -> (f64, f64) {
        let rel = |v: &[f64]| {
            v.iter()
                .zip(&self.norms)
                .map(|(r, n)| r.abs() / n)
                .fold(0.0, f64::max)
        };
        (rel(&self.mass), rel(&self.momentum))
    }
}

/// Accumulated monitoring output of one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub energy_series: Vec<EnergyRecord>,
    pub riemann_series: Vec<RiemannRecord>,
    pub vacuum_series: Vec<VacuumRecord>,
    pub integrability: Option<IntegrabilityRecord>,
    pub weak_residuals: Option<WeakResidualRecord>,
    /// Time-integrated energy removed by the Lax–Friedrichs flux.
    pub llf_dissipation: f64,
    pub undershoots: u64,
    pub steps: usize,
    /// Stored snapshots, initial state first.
    pub history: Vec<FluidField>,
    /// Caveats attached to this run.
    pub notes: Vec<String>,
}

impl DiagnosticsReport {
    pub fn initial_energy(&self) -> Option<f64> {
        self.energy_series.first().map(|r| r.energy)
    }

    /// `max_t (E(t) + D(t)) / E0 - 1`.
    pub fn energy_excess(&self) -> f64 {
        let e0 = self.initial_energy().unwrap_or(0.0);
        self.energy_series
            .iter()
            .map(|r| (r.energy + r.dissipation - e0) / e0.max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `E(t) + D(t) <= m (E0 + 1)` at every record.
    pub fn gronwall_holds(&self, m: f64) -> bool {
        let e0 = self.initial_energy().unwrap_or(0.0);
        self.energy_series
            .iter()
            .all(|r| r.energy + r.dissipation <= m * (e0 + 1.0))
    }

    /// Oscillation of the Riemann invariants at the first record.
    pub fn initial_oscillation(&self) -> f64 {
        self.riemann_series
            .first()
            .map_or(0.0, |r| r.max_w - r.min_z)
    }

    /// Largest `w~(t) - w~(s) - slope (t - s)` over recorded `s < t`, and
    /// the mirrored quantity for `z~`. Nonpositive when the corrected
    /// extrema are monotone up to the allowed slope.
    pub fn max_principle_excess(&self, slope: f64) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        let mut best_w = f64::INFINITY;
        let mut best_z = f64::NEG_INFINITY;
        for r in &self.riemann_series {
            let w = r.corrected_max_w() - slope * r.t;
            let z = r.corrected_min_z() + slope * r.t;
            best_w = best_w.min(w);
            best_z = best_z.max(z);
            worst = worst.max(w - best_w).max(best_z - z);
        }
        worst
    }

    pub fn dissipation_monotone(&self) -> bool {
        self.energy_series
            .windows(2)
            .all(|w| w[1].dissipation >= w[0].dissipation)
    }

    /// CSV sections with `#` headers.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# energy\nt,E,D\n");
        for r in &self.energy_series {
            let _ = writeln!(out, "{:e},{:e},{:e}", r.t, r.energy, r.dissipation);
        }
        out.push_str("# riemann\nt,max_w,min_z,correction\n");
        for r in &self.riemann_series {
            let _ = writeln!(out, "{:e},{:e},{:e},{:e}", r.t, r.max_w, r.min_z, r.correction);
        }
        out.push_str("# vacuum\nt,functional,min_rho\n");
        for r in &self.vacuum_series {
            let _ = writeln!(out, "{:e},{:e},{:e}", r.t, r.functional, r.min_rho);
        }
        if let Some(i) = &self.integrability {
            out.push_str("# integrability\nquantity,value\n");
            for (n, v) in IntegrabilityRecord::NAMES.iter().zip(i.values()) {
                let _ = writeln!(out, "{n},{v:e}");
            }
        }
        if let Some(w) = &self.weak_residuals {
            out.push_str("# weak_residuals\ntest,x0,t0,mass,momentum,norm");
            for (name, _) in &w.entropy {
                let _ = write!(out, ",{name}");
            }
            out.push('\n');
            for (k, tf) in w.tests.iter().enumerate() {
                let _ = write!(
                    out,
                    "{k},{:e},{:e},{:e},{:e},{:e}",
                    tf.x0, tf.t0, w.mass[k], w.momentum[k], w.norms[k]
                );
                for (_, v) in &w.entropy {
                    let _ = write!(out, ",{:e}", v[k]);
                }
                out.push('\n');
            }
        }
        let _ = writeln!(
            out,
            "# totals\nllf_dissipation,undershoots,steps\n{:e},{},{}",
            self.llf_dissipation, self.undershoots, self.steps
        );
        for n in &self.notes {
            let _ = writeln!(out, "# note: {n}");
        }
        out
    }
}

/// Energy and dissipation rate at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    /// `Σ eta_rel A dx`, trapezoid weights at the ends.
    pub energy: f64,
    /// `eps ∫ h'' rho_x^2 A`.
    pub density_dissipation: f64,
    /// `eps ∫ rho u_x^2 A`.
    pub velocity_dissipation: f64,
    /// `eps ∫ |(A'/A)' rho u (u - u_bar)| A`.
    pub geometric_dissipation: f64,
}

impl EnergyBudget {
    pub fn dissipation_rate(&self) -> f64 {
        self.density_dissipation + self.velocity_dissipation + self.geometric_dissipation
    }
}

/// Relative energy of `field` and the instantaneous viscous dissipation rate,
/// using the stepper's discrete area coefficients.
pub fn energy_budget(stepper: &Stepper, field: &FluidField, reference: &ReferenceState) -> EnergyBudget {
    let gas = stepper.gas();
    let grid = field.grid;
    let n = grid.cells();
    let dx = grid.dx();
    let area = stepper.areas();
    let area_half = stepper.half_areas();
    let dlog_prime = stepper.dlog_prime_nodes();
    let eps = stepper.eps();
    let mut energy = 0.0;
    let mut geometric = 0.0;
    for i in 0..=n {
        let x = grid.x(i);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let (rb, ub) = (reference.rho_bar(x), reference.u_bar(x));
        energy += w * relative_energy_at(gas, rb, ub, field.rho[i], field.m[i]) * area[i] * dx;
        let u = field.velocity(i);
        geometric += w * (dlog_prime[i] * field.rho[i] * u * (u - ub)).abs() * area[i] * dx;
    }
    let mut dens = 0.0;
    let mut vel = 0.0;
    for j in 0..n {
        let rho_mid = 0.5 * (field.rho[j] + field.rho[j + 1]);
        let drho = (field.rho[j + 1] - field.rho[j]) / dx;
        let du = (field.velocity(j + 1) - field.velocity(j)) / dx;
        dens += gas.d2h_delta(rho_mid) * drho * drho * area_half[j] * dx;
        vel += rho_mid * du * du * area_half[j] * dx;
    }
    EnergyBudget {
        energy,
        density_dissipation: eps * dens,
        velocity_dissipation: eps * vel,
        geometric_dissipation: eps * geometric,
    }
}

/// Extrema of the Riemann invariants and the sup of the correction integrand.
pub fn riemann_extrema(stepper: &Stepper, field: &FluidField) -> Result<(f64, f64, f64)> {
    let gas = stepper.gas();
    let dlog = stepper.dlog_nodes();
    let dlog_prime = stepper.dlog_prime_nodes();
    let eps = stepper.eps();
    let mut max_w = f64::NEG_INFINITY;
    let mut min_z = f64::INFINITY;
    let mut sup = 0.0f64;
    for i in 0..field.rho.len() {
        let rho = field.rho[i];
        if !(rho >= RHO_FLOOR) {
            return Err(Error::Cavitation {
                node: i,
                rho,
                t: field.t,
            });
        }
        let u = field.velocity(i);
        let r = gas.riemann_r_unchecked(rho);
        max_w = max_w.max(u + r);
        min_z = min_z.min(u - r);
        sup = sup.max((u * gas.sound_speed(rho) * dlog[i] - eps * dlog_prime[i] * u).abs());
    }
    Ok((max_w, min_z, sup))
}

/// `phi(rho) = 1/rho - 1/rho_tilde + (rho - rho_tilde)/rho_tilde^2` below `rho_tilde`, else 0.
pub fn vacuum_density(rho: f64, rho_tilde: f64) -> f64 {
    if rho >= rho_tilde {
        0.0
    } else {
        let r = rho.max(RHO_FLOOR);
        1.0 / r - 1.0 / rho_tilde + (r - rho_tilde) / (rho_tilde * rho_tilde)
    }
}

/// Trapezoid integral of `vacuum_density` over the grid.
pub fn vacuum_functional(field: &FluidField, rho_tilde: f64) -> Result<f64> {
    if !(rho_tilde > 0.0) {
        return Err(Error::domain("threshold density must be positive"));
    }
    let v: Vec<f64> = field.rho.iter().map(|&r| vacuum_density(r, rho_tilde)).collect();
    Ok(crate::quadrature::trapezoid_uniform(&v, field.grid.dx()))
}

/// Sample points of `K` on a grid: the window ends plus interior nodes, with
/// linear interpolation weights `(x, i, theta)` meaning `(1-theta) f_i + theta f_{i+1}`.
fn window_samples(grid: &Grid, lo: f64, hi: f64) -> Vec<(f64, usize, f64)> {
    let dx = grid.dx();
    let n = grid.cells();
    let locate = |x: f64| {
        let s = ((x - grid.a()) / dx).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        (x, i, s - i as f64)
    };
    let mut out = vec![locate(lo)];
    for i in 0..=n {
        let x = grid.x(i);
        if x > lo && x < hi {
            out.push((x, i, 0.0));
        }
    }
    out.push(locate(hi));
    out
}

fn interp(v: &[f64], i: usize, th: f64) -> f64 {
    if th == 0.0 {
        v[i]
    } else {
        (1.0 - th) * v[i] + th * v[i + 1]
    }
}

/// Space-time integrals of the higher-integrability quantities over
/// `K x [t1, t2]`, trapezoidal in both variables over stored snapshots.
pub fn integrability_window(
    history: &[FluidField],
    gas: &GasLaw,
    profile: &NozzleProfile,
    eps: f64,
    window: (f64, f64),
    times: (f64, f64),
) -> Result<IntegrabilityRecord> {
    let (lo, hi) = window;
    let first = history.first().ok_or_else(|| Error::config("empty history"))?;
    if !(lo < hi && lo > first.grid.a() - 1e-12 && hi < first.grid.b() + 1e-12) {
        return Err(Error::config(format!(
            "window [{lo}, {hi}] is not inside [{}, {}]",
            first.grid.a(),
            first.grid.b()
        )));
    }
    let (t1, t2) = times;
    let snaps: Vec<&FluidField> = history
        .iter()
        .filter(|f| f.t >= t1 - 1e-12 && f.t <= t2 + 1e-12)
        .collect();
    if snaps.len() < 2 {
        return Err(Error::config("fewer than two snapshots in the time window"));
    }
    let gamma = gas.gamma();
    let theta = gas.theta();
    let delta = gas.delta();
    let mut ts = Vec::with_capacity(snaps.len());
    let mut cols: [Vec<f64>; 5] = Default::default();
    for f in snaps {
        let samples = window_samples(&f.grid, lo, hi);
        let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let mut vals: [Vec<f64>; 5] = Default::default();
        for &(x, i, th) in &samples {
            let rho = interp(&f.rho, i, th).max(0.0);
            let m = interp(&f.m, i, th);
            let u = if rho > RHO_FLOOR { m / rho } else { 0.0 };
            let a = profile.area(x)?;
            vals[0].push(rho.powf(gamma + 1.0));
            vals[1].push(delta * rho.powi(3));
            vals[2].push(rho * u.abs().powi(3));
            vals[3].push(rho.powf(gamma + theta));
            vals[4].push(eps * rho.powi(3) * a);
        }
        for (c, v) in cols.iter_mut().zip(&vals) {
            c.push(crate::quadrature::trapezoid(&xs, v));
        }
        ts.push(f.t);
    }
    let q = |c: &Vec<f64>| crate::quadrature::trapezoid(&ts, c);
    Ok(IntegrabilityRecord {
        window,
        times,
        rho_gamma_plus_one: q(&cols[0]),
        delta_rho_cubed: q(&cols[1]),
        rho_u_cubed: q(&cols[2]),
        rho_gamma_theta: q(&cols[3]),
        eps_rho_cubed_area: q(&cols[4]),
    })
}

fn legendre16() -> &'static [(f64, f64)] {
    static RULE: std::sync::OnceLock<Vec<(f64, f64)>> = std::sync::OnceLock::new();
    RULE.get_or_init(|| {
        crate::quadrature::GaussJacobi::symmetric(16, 0.0)
            .expect("Legendre rule")
            .iter()
            .collect()
    })
}

/// `∫ hat_k f` for the piecewise-linear hat functions on `nodes`, restricted
/// to the intervals meeting `(lo, hi)`. Returns the first index and the weights.
fn hat_weights(nodes: &[f64], f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (usize, Vec<f64>) {
    let n = nodes.len();
    let first = nodes.partition_point(|&x| x <= lo).saturating_sub(1);
    let last = nodes.partition_point(|&x| x < hi).min(n - 1);
    let mut w = vec![0.0; last + 1 - first];
    for k in first..last {
        let (a, b) = (nodes[k], nodes[k + 1]);
        // the bumps vary sharply near their support ends
        const PIECES: usize = 8;
        let half = 0.5 * (b - a) / PIECES as f64;
        for p in 0..PIECES {
            let mid = a + (2 * p + 1) as f64 * half;
            for &(y, wy) in legendre16() {
                let x = mid + half * y;
                let fx = f(x) * wy * half;
                let s = (x - a) / (b - a);
                w[k - first] += (1.0 - s) * fx;
                w[k + 1 - first] += s * fx;
            }
        }
    }
    (first, w)
}

/// `(∫ b, ∫ |b'|)` for the unit bump on `[-1, 1]`.
fn bump_integrals() -> (f64, f64) {
    let mut total = 0.0;
    for k in 0..64 {
        let (a, b) = (-1.0 + k as f64 / 32.0, -1.0 + (k + 1) as f64 / 32.0);
        for &(y, w) in legendre16() {
            total += w * 0.5 * (b - a) * bump(0.5 * (a + b) + 0.5 * (b - a) * y);
        }
    }
    (total, 2.0 * bump(0.0))
}

/// Weak-form residuals of the balance laws and entropy pairings over stored
/// snapshots. Nodal data are read as piecewise linear in `x` and `t`; their
/// products with the test functions are integrated exactly up to the
/// quadrature of the smooth factors.
pub fn weak_residual(
    history: &[FluidField],
    gas: &GasLaw,
    profile: &NozzleProfile,
    tests: &[TestFunction],
    generators: &[EntropyGenerator],
) -> Result<WeakResidualRecord> {
    let first = history.first().ok_or_else(|| Error::config("empty history"))?;
    let (t_lo, t_hi) = (first.t, history.last().map_or(first.t, |f| f.t));
    for tf in tests {
        let ((xl, xh), (tl, th)) = tf.support();
        if !(tf.rx > 0.0 && tf.rt > 0.0)
            || xl < first.grid.a()
            || xh > first.grid.b()
            || tl < t_lo - 1e-12
            || th > t_hi + 1e-12
        {
            return Err(Error::config(format!(
                "test function {tf:?} is not supported inside the recorded window"
            )));
        }
    }
    if history.windows(2).any(|w| w[1].grid != w[0].grid || w[1].t <= w[0].t) {
        return Err(Error::config("snapshots must share a grid and increase in time"));
    }
    let kernel = EntropyKernel::new(gas)?;
    let limit = gas.without_modifier();
    let grid = first.grid;
    let xs = grid.nodes();
    let ts: Vec<f64> = history.iter().map(|f| f.t).collect();
    let nt = tests.len();
    let (b_int, db_int) = bump_integrals();
    struct Weights {
        t0: (usize, Vec<f64>),
        t1: (usize, Vec<f64>),
        x0: (usize, Vec<f64>),
        x1: (usize, Vec<f64>),
    }
    let weights: Vec<Weights> = tests
        .iter()
        .map(|tf| {
            let ((xl, xh), (tl, th)) = tf.support();
            let bt = |t: f64| bump((t - tf.t0) / tf.rt);
            let dbt = |t: f64| bump_prime((t - tf.t0) / tf.rt) / tf.rt;
            let bx = |x: f64| bump((x - tf.x0) / tf.rx);
            let dbx = |x: f64| bump_prime((x - tf.x0) / tf.rx) / tf.rx;
            Weights {
                t0: hat_weights(&ts, bt, tl, th),
                t1: hat_weights(&ts, dbt, tl, th),
                x0: hat_weights(&xs, bx, xl, xh),
                x1: hat_weights(&xs, dbx, xl, xh),
            }
        })
        .collect();
    let norms = tests
        .iter()
        .map(|tf| {
            let (it, ix) = (b_int * tf.rt, b_int * tf.rx);
            it * ix + db_int * ix + it * db_int
        })
        .collect();
    let mut rec = WeakResidualRecord {
        tests: tests.to_vec(),
        mass: vec![0.0; nt],
        momentum: vec![0.0; nt],
        norms,
        entropy: generators.iter().map(|g| (g.name(), vec![0.0; nt])).collect(),
    };
    let at = |(start, w): &(usize, Vec<f64>), k: usize| -> f64 {
        if k >= *start && k < start + w.len() {
            w[k - start]
        } else {
            0.0
        }
    };
    let i_lo = weights.iter().map(|w| w.x0.0).min().unwrap_or(0);
    let i_hi = weights
        .iter()
        .map(|w| w.x0.0 + w.x0.1.len())
        .max()
        .unwrap_or(0);
    for (k, f) in history.iter().enumerate() {
        let active: Vec<usize> = (0..nt)
            .filter(|&j| at(&weights[j].t0, k) != 0.0 || at(&weights[j].t1, k) != 0.0)
            .collect();
        if active.is_empty() {
            continue;
        }
        for i in i_lo..i_hi {
            let x = xs[i];
            let (rho, m) = (f.rho[i].max(0.0), f.m[i]);
            let (a, da) = (profile.area(x)?, profile.d_area(x)?);
            let u = if rho > RHO_FLOOR { m / rho } else { 0.0 };
            let p = limit.pressure_unchecked(rho);
            let mut ent = Vec::with_capacity(generators.len());
            for g in generators {
                let (eta, q) = kernel.pair(g, rho, m)?;
                let d = kernel.derivatives(g, rho, m)?;
                ent.push((eta, q, m * d.eta_rho + m * u * d.eta_m - q));
            }
            for &j in &active {
                let w = &weights[j];
                let (wx0, wx1) = (at(&w.x0, i), at(&w.x1, i));
                if wx0 == 0.0 && wx1 == 0.0 {
                    continue;
                }
                let (wt0, wt1) = (at(&w.t0, k), at(&w.t1, k));
                // products: phi, phi_t, phi_x
                let (phi, phi_t, phi_x) = (wt0 * wx0, wt1 * wx0, wt0 * wx1);
                rec.mass[j] += (rho * phi_t + m * phi_x) * a;
                rec.momentum[j] += (m * phi_t + m * u * phi_x) * a + p * (da * phi + a * phi_x);
                for (g, &(eta, q, s)) in ent.iter().enumerate() {
                    rec.entropy[g].1[j] += -(eta * phi_t + q * phi_x) * a + da * s * phi;
                }
            }
        }
    }
    Ok(rec)
}

/// `Σ eta^{s^4} A dx` with trapezoid end weights and the stepper's areas.
pub fn quartic_energy(stepper: &Stepper, kernel: &EntropyKernel, field: &FluidField) -> Result<f64> {
    let n = field.grid.cells();
    let dx = field.grid.dx();
    let area = stepper.areas();
    let mut total = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        total += w * kernel.quartic_entropy(field.rho[i], field.m[i])? * area[i] * dx;
    }
    Ok(total)
}

/// Run observer accumulating a [`DiagnosticsReport`].
pub struct DiagnosticsRecorder {
    settings: RecorderSettings,
    report: DiagnosticsReport,
    last_rate: f64,
    dissipation: f64,
    last_sup: f64,
    correction: f64,
    since_record: usize,
    pending: Option<FluidField>,
    error: Option<Error>,
}

impl DiagnosticsRecorder {
    pub fn new(settings: RecorderSettings) -> Self {
        Self {
            settings,
            report: DiagnosticsReport::default(),
            last_rate: 0.0,
            dissipation: 0.0,
            last_sup: 0.0,
            correction: 0.0,
            since_record: 0,
            pending: None,
            error: None,
        }
    }

    fn record_series(&mut self, stepper: &Stepper, field: &FluidField, budget: &EnergyBudget) {
        self.report.energy_series.push(EnergyRecord {
            t: field.t,
            energy: budget.energy,
            dissipation: self.dissipation,
        });
        match riemann_extrema(stepper, field) {
            Ok((max_w, min_z, _)) => self.report.riemann_series.push(RiemannRecord {
                t: field.t,
                max_w,
                min_z,
                correction: self.correction,
            }),
            Err(e) => {
                self.error.get_or_insert(e);
            }
        }
    }

    fn store(&mut self, field: &FluidField) {
        let min_rho = field.min_density();
        let functional = vacuum_functional(field, self.settings.rho_tilde).unwrap_or(f64::NAN);
        self.report.vacuum_series.push(VacuumRecord {
            t: field.t,
            functional,
            min_rho,
        });
        if self.settings.keep_history {
            let f = match self.settings.history_window {
                Some((lo, hi)) => restrict(field, lo, hi),
                None => field.clone(),
            };
            self.report.history.push(f);
        }
    }

    pub fn finish(mut self, stepper: &Stepper) -> DiagnosticsReport {
        if let Some(f) = self.pending.take() {
            let b = energy_budget(stepper, &f, &self.settings.reference);
            self.record_series(stepper, &f, &b);
        }
        self.report.undershoots = stepper.undershoots();
        if let Some(e) = self.error {
            self.report.notes.push(format!("riemann monitor stopped: {e}"));
        }
        self.report
            .notes
            .push("boundary compatibility satisfied approximately by blending".into());
        self.report
    }
}

/// Copy of the nodes covering `[lo, hi]` (one node of slack on each side).
pub fn restrict(field: &FluidField, lo: f64, hi: f64) -> FluidField {
    let g = field.grid;
    let dx = g.dx();
    let n = g.cells();
    let i0 = (((lo - g.a()) / dx).floor() as isize - 1).clamp(0, n as isize) as usize;
    let i1 = (((hi - g.a()) / dx).ceil() as isize + 1).clamp(0, n as isize) as usize;
    if i1 <= i0 + 4 || (i0 == 0 && i1 == n) {
        return field.clone();
    }
    let grid = Grid::new(g.x(i0), g.x(i1), i1 - i0).expect("sub-grid of a valid grid");
    FluidField {
        grid,
        rho: field.rho[i0..=i1].to_vec(),
        m: field.m[i0..=i1].to_vec(),
        t: field.t,
    }
}

impl RunObserver for DiagnosticsRecorder {
    fn on_start(&mut self, stepper: &Stepper, field: &FluidField) {
        let b = energy_budget(stepper, field, &self.settings.reference);
        self.last_rate = b.dissipation_rate();
        self.last_sup = riemann_extrema(stepper, field).map_or(0.0, |r| r.2);
        self.record_series(stepper, field, &b);
        self.store(field);
    }

    fn on_step(&mut self, stepper: &Stepper, before: &FluidField, after: &FluidField, info: &StepInfo) {
        let dt = after.t - before.t;
        let b = energy_budget(stepper, after, &self.settings.reference);
        let rate = b.dissipation_rate();
        self.dissipation += 0.5 * dt * (self.last_rate + rate);
        self.last_rate = rate;
        let sup = riemann_extrema(stepper, after).map_or(self.last_sup, |r| r.2);
        self.correction += 0.5 * dt * (self.last_sup + sup);
        self.last_sup = sup;
        self.report.llf_dissipation += dt * info.llf_rate;
        self.report.steps += 1;
        self.since_record += 1;
        if self.since_record >= self.settings.record_every.max(1) {
            self.since_record = 0;
            self.pending = None;
            self.record_series(stepper, after, &b);
        } else {
            self.pending = Some(after.clone());
        }
    }

    fn on_stop(&mut self, stepper: &Stepper, field: &FluidField) {
        if let Some(f) = self.pending.take() {
            let b = energy_budget(stepper, &f, &self.settings.reference);
            self.since_record = 0;
            self.record_series(stepper, &f, &b);
        }
        self.store(field);
    }
}
