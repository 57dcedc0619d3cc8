//! Viscosity sweeps, space-time `L^p` distances between runs and verdicts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::diagnostics::{
    integrability_window, weak_residual, DiagnosticsReport, IntegrabilityRecord, RecorderSettings,
    TestFunction, WeakResidualRecord,
};
use crate::entropy::{EntropyGenerator, ReferenceState};
use crate::error::{Error, Result};
use crate::geometry::{NozzleProfile, TabulatedArea};
use crate::schedule::{certify, CertificateReport, DomainRule, ViscositySchedule};
use crate::solver::initial::bump;
use crate::solver::{
    prepare_initial_data, BoundarySpec, FluidField, Grid, InitialData, Reconstruction,
    SolverConfig, Stepper,
};
use crate::thermo::GasLaw;

/// Initial data family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialKind {
    /// Jump at `x0` between the left and right states.
    Riemann,
    /// Left state everywhere.
    Constant,
    /// Background `(rho_bar or rho_left, 0)` plus a compact density bump.
    Bump,
}

/// Boundary construction selected by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    DirichletNozzle,
    DirichletSpherical,
    NeumannSpherical,
}

/// Everything a run or sweep needs; read from flat `key = value` text.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub gamma: f64,
    pub kappa: Option<f64>,
    pub profile: String,
    pub profile_params: Vec<f64>,
    pub profile_file: Option<PathBuf>,
    pub boundary: BoundaryKind,
    /// End states `(rho, u)` for the nozzle mode.
    pub left: (f64, f64),
    pub right: (f64, f64),
    /// Far-field density for spherical modes; the schedule's rule when absent.
    pub rho_bar: Option<f64>,
    pub initial: InitialKind,
    pub jump_at: f64,
    pub bump_amplitude: f64,
    pub bump_center: f64,
    pub bump_width: f64,
    /// Mollifier width as a multiple of `eps`.
    pub mollifier_factor: f64,
    pub blend_width: f64,
    pub density_floor: f64,
    pub l0: f64,
    pub eps_list: Vec<f64>,
    pub delta_exponent: f64,
    pub beta: f64,
    pub m_budget: f64,
    /// Constant in the energy bound `E + D <= M (E0 + 1)` used outside spherical Dirichlet mode.
    pub energy_bound: f64,
    pub domain_scale: f64,
    pub dx: f64,
    pub cfl: f64,
    pub reconstruction: Reconstruction,
    pub t_end: f64,
    pub snapshots: usize,
    pub window: (f64, f64),
    pub p: f64,
    pub q: f64,
    pub weak_residuals: bool,
    pub integrability: bool,
    pub workers: usize,
    pub force: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            kappa: None,
            profile: "constant".into(),
            profile_params: vec![],
            profile_file: None,
            boundary: BoundaryKind::DirichletNozzle,
            left: (1.0, 0.0),
            right: (0.125, 0.0),
            rho_bar: None,
            initial: InitialKind::Riemann,
            jump_at: 0.0,
            bump_amplitude: 0.5,
            bump_center: 2.0,
            bump_width: 1.0,
            mollifier_factor: 1.0,
            blend_width: 1.0,
            density_floor: 1e-6,
            l0: 2.0,
            eps_list: ViscositySchedule::ladder(0.1, 4),
            delta_exponent: 5.0,
            beta: 4.0,
            m_budget: 10.0,
            energy_bound: 10.0,
            domain_scale: 1.0,
            dx: 0.005,
            cfl: crate::solver::DEFAULT_CFL,
            reconstruction: Reconstruction::Centered,
            t_end: 0.5,
            snapshots: 32,
            window: (-1.0, 1.0),
            p: 1.0,
            q: 1.0,
            weak_residuals: true,
            integrability: true,
            workers: 0,
            force: false,
            output_dir: None,
        }
    }
}

fn parse_f64(line: usize, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid number '{}'", v.trim()),
    })
}

fn parse_list(line: usize, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(line, s))
        .collect()
}

fn parse_pair(line: usize, v: &str) -> Result<(f64, f64)> {
    match parse_list(line, v)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Parse {
            line,
            msg: "expected two comma-separated numbers".into(),
        }),
    }
}

fn parse_bool(line: usize, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(Error::Parse {
            line,
            msg: format!("invalid boolean '{other}'"),
        }),
    }
}

fn parse_usize(line: usize, v: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid count '{}'", v.trim()),
    })
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Config::default();
        let mut eps0 = None;
        let mut n_eps = None;
        let mut seen = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: "expected 'key = value'".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(prev) = seen.insert(key.to_string(), line) {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate key '{key}' (first on line {prev})"),
                });
            }
            match key {
                "gamma" => c.gamma = parse_f64(line, value)?,
                "kappa" => c.kappa = Some(parse_f64(line, value)?),
                "profile" => c.profile = value.to_string(),
                "profile_params" => c.profile_params = parse_list(line, value)?,
                "profile_file" => c.profile_file = Some(PathBuf::from(value)),
                "bc" => {
                    c.boundary = match value {
                        "dirichlet_nozzle" => BoundaryKind::DirichletNozzle,
                        "dirichlet_spherical" => BoundaryKind::DirichletSpherical,
                        "neumann_spherical" => BoundaryKind::NeumannSpherical,
                        other => {
                            return Err(Error::Parse {
                                line,
                                msg: format!("unknown boundary mode '{other}'"),
                            })
                        }
                    }
                }
                "left" => c.left = parse_pair(line, value)?,
                "right" => c.right = parse_pair(line, value)?,
                "rho_bar" => c.rho_bar = Some(parse_f64(line, value)?),
                "initial" => {
                    c.initial = match value {
                        "riemann" => InitialKind::Riemann,
                        "constant" => InitialKind::Constant,
                        "bump" => InitialKind::Bump,
                        other => {
                            return Err(Error::Parse {
                                line,
                                msg: format!("unknown initial data '{other}'"),
                            })
                        }
                    }
                }
                "jump_at" => c.jump_at = parse_f64(line, value)?,
                "bump_amplitude" => c.bump_amplitude = parse_f64(line, value)?,
                "bump_center" => c.bump_center = parse_f64(line, value)?,
                "bump_width" => c.bump_width = parse_f64(line, value)?,
                "mollifier_factor" => c.mollifier_factor = parse_f64(line, value)?,
                "blend_width" => c.blend_width = parse_f64(line, value)?,
                "density_floor" => c.density_floor = parse_f64(line, value)?,
                "l0" => c.l0 = parse_f64(line, value)?,
                "eps" | "eps_list" => c.eps_list = parse_list(line, value)?,
                "eps0" => eps0 = Some(parse_f64(line, value)?),
                "n_eps" => n_eps = Some(parse_usize(line, value)?),
                "delta_exponent" => c.delta_exponent = parse_f64(line, value)?,
                "beta" => c.beta = parse_f64(line, value)?,
                "m_budget" => c.m_budget = parse_f64(line, value)?,
                "energy_bound" => c.energy_bound = parse_f64(line, value)?,
                "domain_scale" => c.domain_scale = parse_f64(line, value)?,
                "dx" => c.dx = parse_f64(line, value)?,
                "cfl" => c.cfl = parse_f64(line, value)?,
                "reconstruction" => {
                    c.reconstruction = Reconstruction::from_name(value).map_err(|e| Error::Parse {
                        line,
                        msg: e.to_string(),
                    })?
                }
                "t_end" => c.t_end = parse_f64(line, value)?,
                "snapshots" => c.snapshots = parse_usize(line, value)?,
                "window" => c.window = parse_pair(line, value)?,
                "p" => c.p = parse_f64(line, value)?,
                "q" => c.q = parse_f64(line, value)?,
                "weak_residuals" => c.weak_residuals = parse_bool(line, value)?,
                "integrability" => c.integrability = parse_bool(line, value)?,
                "workers" => c.workers = parse_usize(line, value)?,
                "force" => c.force = parse_bool(line, value)?,
                "output_dir" => c.output_dir = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        if eps0.is_some() || n_eps.is_some() {
            if seen.contains_key("eps") || seen.contains_key("eps_list") {
                return Err(Error::config("give either an explicit viscosity list or eps0/n_eps"));
            }
            c.eps_list = ViscositySchedule::ladder(eps0.unwrap_or(0.1), n_eps.unwrap_or(4));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut c = Self::parse(&std::fs::read_to_string(path)?)?;
        // relative paths inside the file resolve against its directory
        if let (Some(f), Some(dir)) = (&c.profile_file, path.parent()) {
            if f.is_relative() {
                c.profile_file = Some(dir.join(f));
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma must exceed 1"));
        }
        if !(self.p >= 1.0 && self.p < self.gamma + 1.0) {
            return Err(Error::config(format!(
                "density exponent p = {} must lie in [1, gamma + 1)",
                self.p
            )));
        }
        if !(self.energy_bound > 0.0 && self.energy_bound.is_finite()) {
            return Err(Error::config("energy_bound must be positive"));
        }
        let q_max = 3.0 * (self.gamma + 1.0) / (self.gamma + 3.0);
        if !(self.q >= 1.0 && self.q < q_max) {
            return Err(Error::config(format!(
                "momentum exponent q = {} must lie in [1, {q_max})",
                self.q
            )));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::config("dx must be positive"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("t_end must be positive"));
        }
        if self.snapshots < 2 {
            return Err(Error::config("need at least two snapshots"));
        }
        if !(self.window.0 < self.window.1) {
            return Err(Error::config("comparison window must be a nonempty interval"));
        }
        let spherical_bc = self.boundary != BoundaryKind::DirichletNozzle;
        if spherical_bc != (self.profile == "spherical") {
            return Err(Error::config("spherical boundary modes go with the spherical profile"));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<NozzleProfile> {
        match self.profile.as_str() {
            "tabulated" => {
                let path = self
                    .profile_file
                    .as_ref()
                    .ok_or_else(|| Error::config("tabulated profile needs profile_file"))?;
                Ok(NozzleProfile::tabulated(TabulatedArea::read(path)?))
            }
            name => NozzleProfile::from_name(name, &self.profile_params),
        }
    }

    pub fn schedule(&self) -> Result<ViscositySchedule> {
        let domain = match self.boundary {
            BoundaryKind::DirichletNozzle => DomainRule::Symmetric {
                scale: self.domain_scale,
            },
            _ => {
                let dim = self.profile()?.spherical_dim().unwrap_or(3);
                DomainRule::Spherical { dim, rho_scale: 1.0 }
            }
        };
        let s = ViscositySchedule {
            eps_list: self.eps_list.clone(),
            delta_exponent: self.delta_exponent,
            domain,
            beta: self.beta,
            m_budget: self.m_budget,
            l0: self.l0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn gas(&self, delta: f64) -> Result<GasLaw> {
        match self.kappa {
            Some(k) => GasLaw::with_kappa(self.gamma, k, delta),
            None => GasLaw::new(self.gamma, delta),
        }
    }

    fn far_field(&self, schedule: &ViscositySchedule, eps: f64) -> f64 {
        self.rho_bar
            .or_else(|| schedule.rho_bar(eps, self.gamma))
            .unwrap_or(self.left.0)
    }

    pub fn boundary_spec(&self, schedule: &ViscositySchedule, eps: f64) -> BoundarySpec {
        match self.boundary {
            BoundaryKind::DirichletNozzle => BoundarySpec::DirichletNozzle {
                rho_minus: self.left.0,
                m_minus: self.left.0 * self.left.1,
                rho_plus: self.right.0,
                m_plus: self.right.0 * self.right.1,
            },
            BoundaryKind::DirichletSpherical => BoundarySpec::DirichletSpherical {
                rho_bar: self.far_field(schedule, eps),
            },
            BoundaryKind::NeumannSpherical => BoundarySpec::NeumannSpherical {
                rho_bar: self.far_field(schedule, eps),
            },
        }
    }

    pub fn reference(&self, schedule: &ViscositySchedule, eps: f64) -> Result<ReferenceState> {
        match self.boundary {
            BoundaryKind::DirichletNozzle => {
                ReferenceState::new(self.left.0, self.left.1, self.right.0, self.right.1, self.l0)
            }
            _ => Ok(ReferenceState::constant(self.far_field(schedule, eps), 0.0)),
        }
    }

    pub fn initial_data(&self, schedule: &ViscositySchedule, eps: f64) -> InitialData {
        let raw = match self.initial {
            InitialKind::Riemann => InitialData::riemann(
                self.jump_at,
                (self.left.0, self.left.0 * self.left.1),
                (self.right.0, self.right.0 * self.right.1),
            ),
            InitialKind::Constant => {
                InitialData::constant(self.left.0, self.left.0 * self.left.1)
            }
            InitialKind::Bump => {
                let base = match self.boundary {
                    BoundaryKind::DirichletNozzle => self.left.0,
                    _ => self.far_field(schedule, eps),
                };
                let (amp, c, w) = (self.bump_amplitude, self.bump_center, self.bump_width);
                InitialData::new(move |x| base * (1.0 + amp * bump((x - c) / w)), |_| 0.0)
            }
        };
        raw.with_mollifier(self.mollifier_factor * eps)
            .with_blend(self.blend_width)
            .with_floor(self.density_floor)
    }
}

/// One member of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub eps: f64,
    pub delta: f64,
    pub interval: (f64, f64),
    pub cells: usize,
    /// Diagnostics with history cropped to the comparison window.
    pub report: Option<DiagnosticsReport>,
    pub error: Option<Error>,
    pub integrability: Option<IntegrabilityRecord>,
    pub weak: Option<WeakResidualRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converging,
    /// Every distance is at rounding level.
    Identical,
    NotConverging,
    /// Fewer than two distances.
    Insufficient,
}

impl Verdict {
    pub fn passed(self) -> bool {
        matches!(self, Verdict::Converging | Verdict::Identical)
    }
}

/// Largest ratio between consecutive distances that counts as a decrease.
pub const RATIO_LIMIT: f64 = 0.9;

/// Distances at or below this are treated as zero.
pub const IDENTICAL_FLOOR: f64 = 1e-12;

/// `Converging` when every consecutive ratio is below [`RATIO_LIMIT`] except
/// at most one, and the last distance is below the first.
pub fn convergence_verdict(d: &[f64]) -> Verdict {
    if d.iter().all(|&v| v <= IDENTICAL_FLOOR) && !d.is_empty() {
        return Verdict::Identical;
    }
    if d.len() < 2 {
        return Verdict::Insufficient;
    }
    let misses = d
        .windows(2)
        .filter(|w| !(w[1] < RATIO_LIMIT * w[0]))
        .count();
    if misses <= 1 && d[d.len() - 1] < d[0] {
        Verdict::Converging
    } else {
        Verdict::NotConverging
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub certificate: CertificateReport,
    pub runs: Vec<RunOutcome>,
    /// `||rho_{k+1} - rho_k||_{L^p}` over consecutive successful runs.
    pub rho_distances: Vec<f64>,
    /// `||m_{k+1} - m_k||_{L^q}`.
    pub m_distances: Vec<f64>,
    pub rho_verdict: Verdict,
    pub m_verdict: Verdict,
}

impl SweepResult {
    pub fn successful(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.error.is_none())
    }

    pub fn summary(&self) -> String {
        use std::fmt::Write as _;
        let mut out = self.certificate.to_text();
        for r in &self.runs {
            match &r.error {
                None => {
                    let rep = r.report.as_ref().expect("successful run has a report");
                    let _ = writeln!(
                        out,
                        "run eps={:.4e} delta={:.3e} [{:.3}, {:.3}] N={} steps={} undershoots={}",
                        r.eps, r.delta, r.interval.0, r.interval.1, r.cells, rep.steps, rep.undershoots
                    );
                }
                Some(e) => {
                    let _ = writeln!(out, "run eps={:.4e} FAILED: {e}", r.eps);
                }
            }
        }
        let _ = writeln!(out, "rho distances {:?} -> {:?}", self.rho_distances, self.rho_verdict);
        let _ = writeln!(out, "m distances {:?} -> {:?}", self.m_distances, self.m_verdict);
        out
    }
}

/// Runs a single viscosity of the configured problem.
pub fn run_single(cfg: &Config, schedule: &ViscositySchedule, eps: f64) -> Result<(Stepper, FluidField, DiagnosticsReport)> {
    let delta = schedule.delta(eps);
    let gas = cfg.gas(delta)?;
    let profile = cfg.profile()?;
    let (a, b) = schedule.interval(eps);
    let grid = Grid::with_spacing(a, b, cfg.dx)?;
    let bc = cfg.boundary_spec(schedule, eps);
    let raw = cfg.initial_data(schedule, eps);
    let field = prepare_initial_data(&raw, &bc, &gas, &profile, grid)?;
    let solver_cfg = SolverConfig {
        cfl: cfg.cfl,
        reconstruction: cfg.reconstruction,
    };
    let mut stepper = Stepper::new(gas, profile, eps, bc, grid, solver_cfg)?;
    let mut settings = RecorderSettings::new(cfg.reference(schedule, eps)?);
    settings.snapshots = cfg.snapshots;
    settings.history_window = Some(cfg.window);
    let (out, report) = stepper.run(field, cfg.t_end, &settings)?;
    Ok((stepper, out, report))
}

fn run_member(cfg: &Config, schedule: &ViscositySchedule, eps: f64) -> RunOutcome {
    let delta = schedule.delta(eps);
    let interval = schedule.interval(eps);
    let cells = Grid::with_spacing(interval.0, interval.1, cfg.dx).map_or(0, |g| g.cells());
    let mut outcome = RunOutcome {
        eps,
        delta,
        interval,
        cells,
        report: None,
        error: None,
        integrability: None,
        weak: None,
    };
    let result = (|| -> Result<()> {
        let (stepper, _, report) = run_single(cfg, schedule, eps)?;
        let times = (0.0, cfg.t_end);
        if cfg.integrability {
            outcome.integrability = Some(integrability_window(
                &report.history,
                stepper.gas(),
                stepper.profile(),
                eps,
                cfg.window,
                times,
            )?);
        }
        if cfg.weak_residuals {
            let tests = TestFunction::lattice(cfg.window, times);
            let gens = EntropyGenerator::default_convex_family();
            outcome.weak = Some(weak_residual(
                &report.history,
                stepper.gas(),
                stepper.profile(),
                &tests,
                &gens,
            )?);
        }
        outcome.report = Some(report);
        Ok(())
    })();
    if let Err(e) = result {
        outcome.error = Some(e);
    }
    outcome
}

/// Runs every viscosity of the configured ladder and compares consecutive runs on the window.
pub fn sweep(cfg: &Config) -> Result<SweepResult> {
    cfg.validate()?;
    let schedule = cfg.schedule()?;
    let profile = cfg.profile()?;
    let certificate = certify(&schedule, &profile, &cfg.gas(0.0)?)?;
    if !certificate.pass && !cfg.force {
        return Err(Error::Sweep(format!(
            "schedule not certified (set force = true to override)\n{}",
            certificate.to_text()
        )));
    }
    let work = || -> Vec<RunOutcome> {
        schedule
            .eps_list
            .par_iter()
            .map(|&eps| run_member(cfg, &schedule, eps))
            .collect()
    };
    let runs = if cfg.workers == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Sweep(e.to_string()))?
            .install(work)
    };
    let ok: Vec<&RunOutcome> = runs.iter().filter(|r| r.error.is_none()).collect();
    if ok.len() < 2 {
        let reasons: Vec<String> = runs
            .iter()
            .filter_map(|r| r.error.as_ref().map(|e| format!("eps={}: {e}", r.eps)))
            .collect();
        return Err(Error::Sweep(format!(
            "fewer than two runs succeeded: {}",
            reasons.join("; ")
        )));
    }
    let mut rho_distances = Vec::new();
    let mut m_distances = Vec::new();
    for w in ok.windows(2) {
        let (ha, hb) = (
            &w[0].report.as_ref().expect("report").history,
            &w[1].report.as_ref().expect("report").history,
        );
        rho_distances.push(lp_distance(ha, hb, cfg.window, cfg.p, Component::Density)?);
        m_distances.push(lp_distance(ha, hb, cfg.window, cfg.q, Component::Momentum)?);
    }
    Ok(SweepResult {
        certificate,
        rho_verdict: convergence_verdict(&rho_distances),
        m_verdict: convergence_verdict(&m_distances),
        runs,
        rho_distances,
        m_distances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Density,
    Momentum,
}

fn sample(field: &FluidField, comp: Component, x: f64) -> f64 {
    let v = match comp {
        Component::Density => &field.rho,
        Component::Momentum => &field.m,
    };
    let g = field.grid;
    let s = ((x - g.a()) / g.dx()).clamp(0.0, g.cells() as f64);
    let i = (s.floor() as usize).min(g.cells() - 1);
    let th = s - i as f64;
    (1.0 - th) * v[i] + th * v[i + 1]
}

/// Space-time `L^p` distance over `K x [t_0, t_last]` after linear
/// interpolation onto a common uniform grid on `K` at the finer spacing.
pub fn lp_distance(
    a: &[FluidField],
    b: &[FluidField],
    window: (f64, f64),
    p: f64,
    comp: Component,
) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::config("distance exponent must be at least 1"));
    }
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::config("snapshot sets differ in length or are too short"));
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::config("empty comparison window"));
    }
    for (fa, fb) in a.iter().zip(b) {
        if (fa.t - fb.t).abs() > 1e-9 * (1.0 + fa.t.abs()) {
            return Err(Error::config(format!(
                "snapshot times differ: {} vs {}",
                fa.t, fb.t
            )));
        }
        for f in [fa, fb] {
            let tol = 1e-9 * f.grid.dx();
            if f.grid.a() > lo + tol || f.grid.b() < hi - tol {
                return Err(Error::config(format!(
                    "snapshot on [{}, {}] does not cover the window [{lo}, {hi}]",
                    f.grid.a(),
                    f.grid.b()
                )));
            }
        }
    }
    if a.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(Error::config("snapshot times must increase"));
    }
    let h = a[0].grid.dx().min(b[0].grid.dx());
    let cells = ((hi - lo) / h - 1e-9).ceil().max(1.0) as usize;
    let xs: Vec<f64> = (0..=cells)
        .map(|i| if i == cells { hi } else { lo + (hi - lo) * i as f64 / cells as f64 })
        .collect();
    let ts: Vec<f64> = a.iter().map(|f| f.t).collect();
    let per_time: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(fa, fb)| {
            let ys: Vec<f64> = xs
                .iter()
                .map(|&x| (sample(fa, comp, x) - sample(fb, comp, x)).abs().powf(p))
                .collect();
            crate::quadrature::trapezoid(&xs, &ys)
        })
        .collect();
    Ok(crate::quadrature::trapezoid(&ts, &per_time).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(grid: Grid, n: usize, f: impl Fn(f64, f64) -> f64) -> Vec<FluidField> {
        (0..n)
            .map(|k| {
                let t = k as f64 / (n - 1) as f64;
                let mut fl = FluidField::from_fn(grid, |x| (f(x, t), 0.0));
                fl.t = t;
                fl
            })
            .collect()
    }

    #[test]
    fn constant_difference_closed_form() {
        let g = Grid::new(-2.0, 2.0, 80).unwrap();
        let a = fields(g, 5, |x, t| 1.0 + x * t);
        let b = fields(g, 5, |x, t| 1.3 + x * t);
        for p in [1.0, 1.5, 2.0] {
            let d = lp_distance(&a, &b, (-1.0, 1.0), p, Component::Density).unwrap();
            let want = 0.3 * 2.0f64.powf(1.0 / p);
            assert!((d - want).abs() < 1e-12, "{p} {d} {want}");
        }
        assert_eq!(lp_distance(&a, &a, (-1.0, 1.0), 1.0, Component::Density).unwrap(), 0.0);
    }

    #[test]
    fn window_mismatch_rejected() {
        let g = Grid::new(-0.5, 2.0, 50).unwrap();
        let a = fields(g, 3, |_, _| 1.0);
        assert!(matches!(
            lp_distance(&a, &a, (-1.0, 1.0), 1.0, Component::Density),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn verdicts() {
        assert_eq!(convergence_verdict(&[1.0, 0.5, 0.25]), Verdict::Converging);
        assert_eq!(convergence_verdict(&[1.0, 0.95, 0.4]), Verdict::Converging);
        assert_eq!(convergence_verdict(&[1.0, 0.95, 0.94]), Verdict::NotConverging);
        assert_eq!(convergence_verdict(&[0.0, 0.0]), Verdict::Identical);
        assert_eq!(convergence_verdict(&[1.0]), Verdict::Insufficient);
    }

    #[test]
    fn config_parsing() {
        let c = Config::parse(
            "# sweep\ngamma = 2\nprofile = gaussian_bump\nprofile_params = 0.5, 1.0\n\
             eps = 0.1, 0.05\nwindow = -1, 1 # K\nweak_residuals = false\n",
        )
        .unwrap();
        assert_eq!(c.gamma, 2.0);
        assert_eq!(c.profile_params, vec![0.5, 1.0]);
        assert_eq!(c.eps_list, vec![0.1, 0.05]);
        assert!(!c.weak_residuals);
        assert!(matches!(Config::parse("gamma = 2\np = 3\n"), Err(Error::Config(_))));
        assert!(matches!(Config::parse("colour = red\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Config::parse("gamma\n"), Err(Error::Parse { .. })));
        assert!(matches!(Config::parse("gamma = 2\ngamma = 3\n"), Err(Error::Parse { line: 2, .. })));
        let l = Config::parse("eps0 = 0.2\nn_eps = 3\n").unwrap();
        assert_eq!(l.eps_list, vec![0.2, 0.1, 0.05]);
    }

    #[test]
    fn constant_sweep_has_zero_distances() {
        let c = Config::parse(
            "initial = constant\nleft = 0.5, 0\nright = 0.5, 0\neps = 0.1, 0.05, 0.025\n\
             dx = 0.02\nt_end = 0.1\nsnapshots = 4\nweak_residuals = false\n",
        )
        .unwrap();
        let r = sweep(&c).unwrap();
        assert!(r.rho_distances.iter().all(|&d| d < 1e-14));
        assert!(r.m_distances.iter().all(|&d| d < 1e-14));
        assert_eq!(r.rho_verdict, Verdict::Identical);
    }
}
