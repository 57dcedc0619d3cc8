//! IMEX finite-volume solver for the viscous approximate system on `[a, b]`.
//!
//! Convection and geometric sources are advanced explicitly with central
//! fluxes plus local Lax–Friedrichs dissipation; the two viscous operators are
//! advanced implicitly with one tridiagonal solve per equation and stage. The
//! time integrator is the stiffly accurate second-order ARS(2,2,2) pair, whose
//! explicit and implicit stage times coincide so time-dependent boundary data
//! enter consistently.

pub mod initial;
pub mod snapshot;
pub mod tridiag;

use std::fmt;
use std::sync::Arc;

use crate::diagnostics::{DiagnosticsRecorder, DiagnosticsReport, RecorderSettings};
use crate::error::{Error, Result};
use crate::geometry::NozzleProfile;
use crate::thermo::{GasLaw, RHO_FLOOR};

pub use initial::{prepare_initial_data, InitialData};

/// Uniform node grid `x_i = a + i dx`, `i = 0..=cells`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    cells: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::config(format!("invalid grid interval [{a}, {b}]")));
        }
        if cells < 4 {
            return Err(Error::config("grid needs at least 4 cells"));
        }
        Ok(Self { a, b, cells })
    }

    /// Grid on `[a, b]` whose spacing is as close as possible to `dx` without exceeding it.
    pub fn with_spacing(a: f64, b: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::config("grid spacing must be positive"));
        }
        let cells = ((b - a) / dx - 1e-9).ceil().max(4.0) as usize;
        Self::new(a, b, cells)
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn cells(&self) -> usize {
        self.cells
    }
    /// Number of nodes, `cells + 1`.
    pub fn len(&self) -> usize {
        self.cells + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.cells {
            self.b
        } else {
            self.a + self.dx() * i as f64
        }
    }
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }
}

/// Discrete density and momentum at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidField {
    pub grid: Grid,
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
    pub t: f64,
}

impl FluidField {
    pub fn new(grid: Grid, rho: Vec<f64>, m: Vec<f64>, t: f64) -> Result<Self> {
        if rho.len() != grid.len() || m.len() != grid.len() {
            return Err(Error::config("field length does not match grid"));
        }
        Ok(Self { grid, rho, m, t })
    }

    pub fn constant(grid: Grid, rho: f64, m: f64) -> Self {
        Self {
            grid,
            rho: vec![rho; grid.len()],
            m: vec![m; grid.len()],
            t: 0.0,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (rho, m) = grid.nodes().into_iter().map(f).unzip();
        Self {
            grid,
            rho,
            m,
            t: 0.0,
        }
    }

    /// `m / max(rho, floor)`.
    #[inline]
    pub fn velocity(&self, i: usize) -> f64 {
        self.m[i] / self.rho[i].max(RHO_FLOOR)
    }

    pub fn velocities(&self) -> Vec<f64> {
        (0..self.rho.len()).map(|i| self.velocity(i)).collect()
    }

    pub fn min_density(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest nodewise difference in either variable.
    pub fn max_difference(&self, other: &FluidField) -> f64 {
        self.rho
            .iter()
            .zip(&other.rho)
            .chain(self.m.iter().zip(&other.m))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Time-dependent Dirichlet data: `t -> [[rho_a, m_a], [rho_b, m_b]]`.
pub type BoundaryFn = dyn Fn(f64) -> [[f64; 2]; 2] + Send + Sync;

/// Boundary construction at the two ends of `[a, b]`.
#[derive(Clone)]
pub enum BoundarySpec {
    DirichletNozzle {
        rho_minus: f64,
        m_minus: f64,
        rho_plus: f64,
        m_plus: f64,
    },
    /// `(rho, m) = (rho_bar, 0)` at both ends; requires a spherical profile.
    DirichletSpherical { rho_bar: f64 },
    /// `(rho_x, m) = (0, 0)` at `a` and `(rho, m) = (rho_bar, 0)` at `b`; requires a spherical profile.
    NeumannSpherical { rho_bar: f64 },
    /// Dirichlet data prescribed as a function of time (used for manufactured solutions).
    TimeDependent(Arc<BoundaryFn>),
}

impl fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DirichletNozzle {
                rho_minus,
                m_minus,
                rho_plus,
                m_plus,
            } => write!(
                f,
                "DirichletNozzle({rho_minus}, {m_minus}, {rho_plus}, {m_plus})"
            ),
            Self::DirichletSpherical { rho_bar } => write!(f, "DirichletSpherical({rho_bar})"),
            Self::NeumannSpherical { rho_bar } => write!(f, "NeumannSpherical({rho_bar})"),
            Self::TimeDependent(_) => f.write_str("TimeDependent"),
        }
    }
}

impl BoundarySpec {
    pub fn mode_name(&self) -> &'static str {
        match self {
            Self::DirichletNozzle { .. } => "dirichlet_nozzle",
            Self::DirichletSpherical { .. } => "dirichlet_spherical",
            Self::NeumannSpherical { .. } => "neumann_spherical",
            Self::TimeDependent(_) => "time_dependent",
        }
    }

    pub fn is_spherical(&self) -> bool {
        matches!(
            self,
            Self::DirichletSpherical { .. } | Self::NeumannSpherical { .. }
        )
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, Self::NeumannSpherical { .. })
    }

    fn validate(&self) -> Result<()> {
        let pos = |r: f64| r.is_finite() && r > 0.0;
        let ok = match self {
            Self::DirichletNozzle {
                rho_minus,
                m_minus,
                rho_plus,
                m_plus,
            } => pos(*rho_minus) && pos(*rho_plus) && m_minus.is_finite() && m_plus.is_finite(),
            Self::DirichletSpherical { rho_bar } | Self::NeumannSpherical { rho_bar } => {
                pos(*rho_bar)
            }
            Self::TimeDependent(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "boundary densities must be positive and data finite: {self:?}"
            )))
        }
    }

    /// Prescribed `(rho, m)` at `a`, or `None` where the density is free.
    pub fn left(&self, t: f64) -> Option<[f64; 2]> {
        match self {
            Self::DirichletNozzle {
                rho_minus, m_minus, ..
            } => Some([*rho_minus, *m_minus]),
            Self::DirichletSpherical { rho_bar } => Some([*rho_bar, 0.0]),
            Self::NeumannSpherical { .. } => None,
            Self::TimeDependent(f) => Some(f(t)[0]),
        }
    }

    /// Prescribed `(rho, m)` at `b`.
    pub fn right(&self, t: f64) -> [f64; 2] {
        match self {
            Self::DirichletNozzle {
                rho_plus, m_plus, ..
            } => [*rho_plus, *m_plus],
            Self::DirichletSpherical { rho_bar } | Self::NeumannSpherical { rho_bar } => {
                [*rho_bar, 0.0]
            }
            Self::TimeDependent(f) => f(t)[1],
        }
    }

    /// Writes the boundary values into `rho`, `m` at time `t`.
    pub fn impose(&self, t: f64, rho: &mut [f64], m: &mut [f64]) {
        let n = rho.len() - 1;
        match self.left(t) {
            Some([r, q]) => {
                rho[0] = r;
                m[0] = q;
            }
            None => m[0] = 0.0,
        }
        let [r, q] = self.right(t);
        rho[n] = r;
        m[n] = q;
    }
}

/// Interface reconstruction feeding the Lax–Friedrichs dissipation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reconstruction {
    /// Nodal values; first-order dissipation.
    Constant,
    /// Unlimited centered slopes; the dissipation is third order in `dx`.
    #[default]
    Centered,
    /// Minmod-limited slopes.
    Minmod,
}

impl Reconstruction {
    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "centered" => Ok(Self::Centered),
            "minmod" => Ok(Self::Minmod),
            other => Err(Error::config(format!("unknown reconstruction '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Centered => "centered",
            Self::Minmod => "minmod",
        }
    }
}

/// Default Courant number.
pub const DEFAULT_CFL: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub reconstruction: Reconstruction,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            reconstruction: Reconstruction::Centered,
        }
    }
}

/// Source added to the right-hand side: `(x, t) -> [S_rho, S_m]`.
pub type Forcing = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

/// Bookkeeping returned by one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub dt: f64,
    /// Time-integrated mass entering the discrete control volume through its ends.
    pub mass_inflow: f64,
    /// Stage nodes whose density fell below the floor.
    pub undershoots: u64,
    /// Lax–Friedrichs energy dissipation rate at the start of the step.
    pub llf_rate: f64,
}

const IMEX_GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
const IMEX_DELTA: f64 = 1.0 - 1.0 / (2.0 * IMEX_GAMMA);

/// Precomputed coefficients plus scratch space for one problem.
pub struct Stepper {
    gas: GasLaw,
    profile: NozzleProfile,
    eps: f64,
    bc: BoundarySpec,
    grid: Grid,
    config: SolverConfig,
    forcing: Option<Forcing>,
    /// `A` at nodes (spherical modes drop the surface constant).
    area: Vec<f64>,
    /// `A` at interfaces `i + 1/2`.
    area_half: Vec<f64>,
    /// `A'/A` at interfaces.
    dlog_half: Vec<f64>,
    /// `A'/A` at nodes.
    dlog: Vec<f64>,
    /// `(A'/A)'` at nodes.
    dlog_prime: Vec<f64>,
    /// Control volume of each node.
    volume: Vec<f64>,
    undershoots: u64,
    scratch: Scratch,
}

#[derive(Default)]
struct Scratch {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

/// Explicit and implicit tendencies of one stage.
struct Tendency {
    h_rho: Vec<f64>,
    h_m: Vec<f64>,
    l_rho: Vec<f64>,
    l_m: Vec<f64>,
    /// Inflow rate of mass through the ends from the explicit fluxes.
    inflow_h: f64,
    /// Same for the viscous fluxes.
    inflow_l: f64,
}

impl fmt::Debug for Stepper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stepper")
            .field("gas", &self.gas)
            .field("profile", &self.profile)
            .field("eps", &self.eps)
            .field("bc", &self.bc)
            .field("grid", &self.grid)
            .field("config", &self.config)
            .finish()
    }
}

impl Stepper {
    pub fn new(
        gas: GasLaw,
        profile: NozzleProfile,
        eps: f64,
        bc: BoundarySpec,
        grid: Grid,
        config: SolverConfig,
    ) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::config(format!("viscosity {eps} must be positive")));
        }
        if !(config.cfl.is_finite() && config.cfl > 0.0 && config.cfl <= 1.0) {
            return Err(Error::config(format!("CFL {} must lie in (0, 1]", config.cfl)));
        }
        bc.validate()?;
        if !profile.contains(grid.a()) || !profile.contains(grid.b()) {
            return Err(Error::domain(format!(
                "grid [{}, {}] leaves the {} profile's domain",
                grid.a(),
                grid.b(),
                profile.kind_name()
            )));
        }
        let dim = profile.spherical_dim();
        if bc.is_spherical() && dim.is_none() {
            return Err(Error::config("spherical boundary modes need a spherical profile"));
        }
        let n = grid.cells();
        let dx = grid.dx();
        // Spherical modes use x^(n-1) and (n-1)/x directly; the nozzle mode goes
        // through the generic A, A' evaluation.
        let coeffs = |x: f64| -> (f64, f64, f64) {
            match (bc.is_spherical(), dim) {
                (true, Some(d)) => {
                    let k = (d - 1) as f64;
                    (x.powi(d as i32 - 1), k / x, -k / (x * x))
                }
                _ => {
                    let (a, d1, d2) = profile.eval3(x);
                    let c = d1 / a;
                    (a, c, d2 / a - c * c)
                }
            }
        };
        let mut area = Vec::with_capacity(n + 1);
        let mut dlog = Vec::with_capacity(n + 1);
        let mut dlog_prime = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let (a, c, cp) = coeffs(grid.x(i));
            area.push(a);
            dlog.push(c);
            dlog_prime.push(cp);
        }
        let mut area_half = Vec::with_capacity(n);
        let mut dlog_half = Vec::with_capacity(n);
        for i in 0..n {
            let (a, c, _) = coeffs(grid.a() + dx * (i as f64 + 0.5));
            area_half.push(a);
            dlog_half.push(c);
        }
        let mut volume: Vec<f64> = area.iter().map(|a| a * dx).collect();
        if bc.is_neumann() {
            volume[0] = 0.25 * dx * (area[0] + area_half[0]);
        }
        Ok(Self {
            gas,
            profile,
            eps,
            bc,
            grid,
            config,
            forcing: None,
            area,
            area_half,
            dlog_half,
            dlog,
            dlog_prime,
            volume,
            undershoots: 0,
            scratch: Scratch::default(),
        })
    }

    /// Adds a source term to the explicit part.
    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn gas(&self) -> &GasLaw {
        &self.gas
    }
    pub fn profile(&self) -> &NozzleProfile {
        &self.profile
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn boundary(&self) -> &BoundarySpec {
        &self.bc
    }
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn config(&self) -> &SolverConfig {
        &self.config
    }
    /// Total stage undershoots so far.
    pub fn undershoots(&self) -> u64 {
        self.undershoots
    }
    /// Node areas used by the discretization.
    pub fn areas(&self) -> &[f64] {
        &self.area
    }
    pub fn dlog_nodes(&self) -> &[f64] {
        &self.dlog
    }
    pub fn dlog_prime_nodes(&self) -> &[f64] {
        &self.dlog_prime
    }
    pub fn half_areas(&self) -> &[f64] {
        &self.area_half
    }
    pub fn dlog_half(&self) -> &[f64] {
        &self.dlog_half
    }

    /// Mass in the discrete control volume: the nodes whose density evolves.
    pub fn discrete_mass(&self, field: &FluidField) -> f64 {
        let n = self.grid.cells();
        let first = if self.bc.is_neumann() { 0 } else { 1 };
        (first..n).map(|i| self.volume[i] * field.rho[i]).sum()
    }

    /// Largest characteristic speed `|u| + sqrt(p')` over the nodes.
    pub fn max_speed(&self, field: &FluidField) -> f64 {
        (0..field.rho.len())
            .map(|i| field.velocity(i).abs() + self.gas.sound_speed(field.rho[i]))
            .fold(0.0, f64::max)
    }

    /// `cfl dx / max(|u| + sqrt(p'))`.
    pub fn stable_dt(&self, field: &FluidField) -> f64 {
        let s = self.max_speed(field);
        if s > 0.0 {
            self.config.cfl * self.grid.dx() / s
        } else {
            f64::INFINITY
        }
    }

    fn slopes(&self, v: &[f64], odd_mirror: bool) -> Vec<f64> {
        let n = v.len() - 1;
        let mut s = vec![0.0; n + 1];
        match self.config.reconstruction {
            Reconstruction::Constant => {}
            Reconstruction::Centered => {
                for i in 1..n {
                    s[i] = 0.5 * (v[i + 1] - v[i - 1]);
                }
                s[0] = v[1] - v[0];
                s[n] = v[n] - v[n - 1];
            }
            Reconstruction::Minmod => {
                for i in 1..n {
                    let (l, r) = (v[i] - v[i - 1], v[i + 1] - v[i]);
                    s[i] = if l * r <= 0.0 {
                        0.0
                    } else if l.abs() < r.abs() {
                        l
                    } else {
                        r
                    };
                }
                s[0] = 0.0;
                s[n] = 0.0;
            }
        }
        if self.bc.is_neumann() && self.config.reconstruction != Reconstruction::Constant {
            // mirror node: even density, odd momentum
            s[0] = if odd_mirror { v[1] } else { 0.0 };
        }
        s
    }

    fn tendency(&self, rho: &[f64], m: &[f64], t: f64) -> (Tendency, f64) {
        let n = self.grid.cells();
        let dx = self.grid.dx();
        let gas = &self.gas;
        let u: Vec<f64> = rho
            .iter()
            .zip(m)
            .map(|(r, q)| q / r.max(RHO_FLOOR))
            .collect();
        let p: Vec<f64> = rho.iter().map(|r| gas.pressure_unchecked(r.max(0.0))).collect();
        let speed: Vec<f64> = rho
            .iter()
            .zip(&u)
            .map(|(r, v)| v.abs() + gas.sound_speed(*r))
            .collect();
        let sr = self.slopes(rho, false);
        let sm = self.slopes(m, true);
        let mut flux_rho = vec![0.0; n];
        let mut flux_m = vec![0.0; n];
        let mut llf = 0.0;
        for j in 0..n {
            let alpha = speed[j].max(speed[j + 1]);
            let jump_r = (rho[j + 1] - 0.5 * sr[j + 1]) - (rho[j] + 0.5 * sr[j]);
            let jump_m = (m[j + 1] - 0.5 * sm[j + 1]) - (m[j] + 0.5 * sm[j]);
            flux_rho[j] = 0.5 * (m[j] + m[j + 1]) - 0.5 * alpha * jump_r;
            flux_m[j] = 0.5 * (m[j] * u[j] + m[j + 1] * u[j + 1]) - 0.5 * alpha * jump_m;
            // energy variables (h'(rho) - u^2/2, u)
            let er = |i: usize| gas.dh_delta(rho[i]) - 0.5 * u[i] * u[i];
            llf += 0.5
                * alpha
                * self.area_half[j]
                * (jump_r * (er(j + 1) - er(j)) + jump_m * (u[j + 1] - u[j]));
        }
        let mut h_rho = vec![0.0; n + 1];
        let mut h_m = vec![0.0; n + 1];
        let mut l_rho = vec![0.0; n + 1];
        let mut l_m = vec![0.0; n + 1];
        let eps = self.eps;
        for i in 1..n {
            let (al, ar) = (self.area_half[i - 1], self.area_half[i]);
            let v = self.volume[i];
            h_rho[i] = -(ar * flux_rho[i] - al * flux_rho[i - 1]) / v;
            h_m[i] = -(ar * flux_m[i] - al * flux_m[i - 1]) / v
                - (ar * (p[i + 1] - p[i]) + al * (p[i] - p[i - 1])) / (2.0 * self.area[i] * dx);
            l_rho[i] = eps * (ar * (rho[i + 1] - rho[i]) - al * (rho[i] - rho[i - 1])) / (v * dx);
            let g = |j: usize| (m[j + 1] - m[j]) / dx + self.dlog_half[j] * 0.5 * (m[j] + m[j + 1]);
            l_m[i] = eps * (g(i) - g(i - 1)) / dx;
        }
        let mut inflow_h = -self.area_half[n - 1] * flux_rho[n - 1];
        if self.bc.is_neumann() {
            let (ar, v) = (self.area_half[0], self.volume[0]);
            h_rho[0] = -ar * flux_rho[0] / v;
            l_rho[0] = eps * ar * (rho[1] - rho[0]) / (v * dx);
        } else {
            inflow_h += self.area_half[0] * flux_rho[0];
        }
        let inflow_l = self.viscous_inflow(rho);
        if let Some(f) = &self.forcing {
            for i in 1..n {
                let [sr, sm] = f(self.grid.x(i), t);
                h_rho[i] += sr;
                h_m[i] += sm;
            }
            if self.bc.is_neumann() {
                h_rho[0] += f(self.grid.x(0), t)[0];
            }
        }
        (
            Tendency {
                h_rho,
                h_m,
                l_rho,
                l_m,
                inflow_h,
                inflow_l,
            },
            llf,
        )
    }

    /// Rate at which the viscous density flux carries mass in through the ends.
    fn viscous_inflow(&self, rho: &[f64]) -> f64 {
        let n = self.grid.cells();
        let k = self.eps / self.grid.dx();
        let mut v = k * self.area_half[n - 1] * (rho[n] - rho[n - 1]);
        if !self.bc.is_neumann() {
            v -= k * self.area_half[0] * (rho[1] - rho[0]);
        }
        v
    }

    /// Solves `(I - tau L) x = rhs` for both equations, with boundary values
    /// taken from `bc_t`. `rho`, `m` hold the right-hand sides on entry.
    fn implicit_solve(&mut self, tau: f64, bc_t: f64, rho: &mut [f64], m: &mut [f64]) {
        let n = self.grid.cells();
        let dx = self.grid.dx();
        let eps = self.eps;
        let left = self.bc.left(bc_t);
        let right = self.bc.right(bc_t);
        let s = &mut self.scratch;
        s.sub.clear();
        s.sub.resize(n + 1, 0.0);
        s.diag.clear();
        s.diag.resize(n + 1, 1.0);
        s.sup.clear();
        s.sup.resize(n + 1, 0.0);

        // density
        for i in 1..n {
            let k = tau * eps / (self.volume[i] * dx);
            let (al, ar) = (self.area_half[i - 1], self.area_half[i]);
            s.sub[i] = -k * al;
            s.sup[i] = -k * ar;
            s.diag[i] = 1.0 + k * (al + ar);
        }
        match left {
            Some([r, _]) => rho[0] = r,
            None => {
                let k = tau * eps * self.area_half[0] / (self.volume[0] * dx);
                s.diag[0] = 1.0 + k;
                s.sup[0] = -k;
            }
        }
        rho[n] = right[0];
        tridiag::solve(&s.sub, &s.diag, &s.sup, rho);

        // momentum
        s.diag[0] = 1.0;
        s.sup[0] = 0.0;
        let k = tau * eps / dx;
        for i in 1..n {
            let (cl, cr) = (self.dlog_half[i - 1], self.dlog_half[i]);
            // g_{i+1/2} - g_{i-1/2} as coefficients of m_{i-1}, m_i, m_{i+1}
            let lo = 1.0 / dx - 0.5 * cl;
            let mid = -2.0 / dx + 0.5 * (cr - cl);
            let hi = 1.0 / dx + 0.5 * cr;
            s.sub[i] = -k * lo;
            s.diag[i] = 1.0 - k * mid;
            s.sup[i] = -k * hi;
        }
        m[0] = left.map_or(0.0, |v| v[1]);
        m[n] = right[1];
        tridiag::solve(&s.sub, &s.diag, &s.sup, m);
    }

    fn check_state(&self, rho: &[f64], m: &[f64], t: f64) -> Result<()> {
        for i in 0..rho.len() {
            if !(rho[i].is_finite() && m[i].is_finite()) {
                return Err(Error::NonFinite { node: i, t });
            }
        }
        for (i, &r) in rho.iter().enumerate() {
            if r < RHO_FLOOR {
                return Err(Error::Cavitation { node: i, rho: r, t });
            }
        }
        Ok(())
    }

    fn count_undershoots(rho: &[f64]) -> u64 {
        rho.iter().filter(|&&r| r < RHO_FLOOR).count() as u64
    }

    /// Advances `field` by `dt`.
    pub fn step(&mut self, field: &FluidField, dt: f64) -> Result<(FluidField, StepInfo)> {
        if field.grid != self.grid {
            return Err(Error::config("field grid does not match the stepper grid"));
        }
        let bound = self.stable_dt(field);
        if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
            return Err(Error::Stability { dt, bound });
        }
        let t0 = field.t;
        let n = self.grid.cells();
        let g = IMEX_GAMMA;
        let d = IMEX_DELTA;

        // stage 1 is U^n itself
        let (k1, llf) = self.tendency(&field.rho, &field.m, t0);

        // stage 2: (I - g dt L) U2 = U^n + g dt H1
        let mut r2 = vec![0.0; n + 1];
        let mut m2 = vec![0.0; n + 1];
        for i in 0..=n {
            r2[i] = field.rho[i] + g * dt * k1.h_rho[i];
            m2[i] = field.m[i] + g * dt * k1.h_m[i];
        }
        self.implicit_solve(g * dt, t0 + g * dt, &mut r2, &mut m2);
        let (k2, _) = self.tendency(&r2, &m2, t0 + g * dt);

        // stage 3: (I - g dt L) U3 = U^n + dt (d H1 + (1-d) H2) + (1-g) dt L2
        let mut rho = vec![0.0; n + 1];
        let mut m = vec![0.0; n + 1];
        for i in 0..=n {
            rho[i] = field.rho[i]
                + dt * (d * k1.h_rho[i] + (1.0 - d) * k2.h_rho[i])
                + (1.0 - g) * dt * k2.l_rho[i];
            m[i] = field.m[i]
                + dt * (d * k1.h_m[i] + (1.0 - d) * k2.h_m[i])
                + (1.0 - g) * dt * k2.l_m[i];
        }
        let t1 = t0 + dt;
        self.implicit_solve(g * dt, t1, &mut rho, &mut m);
        self.bc.impose(t1, &mut rho, &mut m);
        let undershoots = Self::count_undershoots(&r2);
        self.undershoots += undershoots;
        self.check_state(&rho, &m, t1)?;
        let inflow = dt * (d * k1.inflow_h + (1.0 - d) * k2.inflow_h)
            + dt * ((1.0 - g) * k2.inflow_l + g * self.viscous_inflow(&rho));
        let info = StepInfo {
            dt,
            mass_inflow: inflow,
            undershoots,
            llf_rate: llf,
        };
        Ok((
            FluidField {
                grid: self.grid,
                rho,
                m,
                t: t1,
            },
            info,
        ))
    }

    /// Steps to `t_end`, landing exactly on `stops` that fall inside the run.
    pub fn run_observed(
        &mut self,
        field: FluidField,
        t_end: f64,
        stops: &[f64],
        observer: &mut dyn RunObserver,
    ) -> Result<FluidField> {
        if !(t_end >= field.t) {
            return Err(Error::config(format!(
                "end time {t_end} precedes field time {}",
                field.t
            )));
        }
        let mut field = field;
        observer.on_start(self, &field);
        if t_end == field.t {
            return Ok(field);
        }
        let mut stops: Vec<f64> = stops
            .iter()
            .copied()
            .filter(|&s| s > field.t && s < t_end)
            .collect();
        stops.push(t_end);
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        for stop in stops {
            while field.t < stop {
                let bound = self.stable_dt(&field);
                let remaining = stop - field.t;
                // avoid leaving a sliver step before the stop
                let dt = if remaining <= bound * (1.0 + 1e-9) {
                    remaining
                } else if remaining < 2.0 * bound {
                    0.5 * remaining
                } else {
                    bound
                };
                let (next, info) = self
                    .step(&field, dt)
                    .map_err(|e| Error::AtTime {
                        t: field.t,
                        source: Box::new(e),
                    })?;
                let mut next = next;
                if remaining <= bound * (1.0 + 1e-9) {
                    next.t = stop;
                }
                observer.on_step(self, &field, &next, &info);
                field = next;
            }
            observer.on_stop(self, &field);
        }
        Ok(field)
    }

    /// Steps to `t_end` recording diagnostics.
    pub fn run(
        &mut self,
        field: FluidField,
        t_end: f64,
        settings: &RecorderSettings,
    ) -> Result<(FluidField, DiagnosticsReport)> {
        if t_end == field.t {
            return Ok((field, DiagnosticsReport::default()));
        }
        let mut rec = DiagnosticsRecorder::new(settings.clone());
        let stops = settings.snapshot_times(field.t, t_end);
        let out = self.run_observed(field, t_end, &stops, &mut rec)?;
        Ok((out, rec.finish(self)))
    }
}

/// Callbacks invoked while [`Stepper::run_observed`] advances.
pub trait RunObserver {
    fn on_start(&mut self, stepper: &Stepper, field: &FluidField);
    fn on_step(&mut self, stepper: &Stepper, before: &FluidField, after: &FluidField, info: &StepInfo);
    /// Called each time a requested stop time (or the end time) is reached.
    fn on_stop(&mut self, stepper: &Stepper, field: &FluidField);
}

/// Observer that ignores everything.
pub struct NoObserver;

impl RunObserver for NoObserver {
    fn on_start(&mut self, _: &Stepper, _: &FluidField) {}
    fn on_step(&mut self, _: &Stepper, _: &FluidField, _: &FluidField, _: &StepInfo) {}
    fn on_stop(&mut self, _: &Stepper, _: &FluidField) {}
}
