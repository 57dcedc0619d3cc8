//! Snapshot CSV: a `#`-prefixed `key = value` header followed by `x,rho,m,u,A` rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{FluidField, Grid, Stepper};
use crate::error::{Error, Result};

pub const COLUMNS: [&str; 5] = ["x", "rho", "m", "u", "A"];

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub meta: BTreeMap<String, String>,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
    pub u: Vec<f64>,
    pub area: Vec<f64>,
}

/// Run metadata written into the header.
pub fn run_metadata(stepper: &Stepper, t: f64) -> BTreeMap<String, String> {
    let g = stepper.gas();
    let grid = stepper.grid();
    let mut meta = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        meta.insert(k.to_string(), v);
    };
    put("gamma", format!("{:e}", g.gamma()));
    put("kappa", format!("{:e}", g.kappa()));
    put("delta", format!("{:e}", g.delta()));
    put("eps", format!("{:e}", stepper.eps()));
    put("a", format!("{:e}", grid.a()));
    put("b", format!("{:e}", grid.b()));
    put("N", grid.cells().to_string());
    put("cfl", format!("{:e}", stepper.config().cfl));
    put("bc", stepper.boundary().mode_name().to_string());
    put("profile", stepper.profile().kind_name().to_string());
    put("t", format!("{:e}", t));
    meta
}

impl Snapshot {
    pub fn from_field(stepper: &Stepper, field: &FluidField) -> Self {
        let x = field.grid.nodes();
        let area = x
            .iter()
            .map(|&x| stepper.profile().area(x).unwrap_or(f64::NAN))
            .collect();
        Self {
            meta: run_metadata(stepper, field.t),
            u: field.velocities(),
            rho: field.rho.clone(),
            m: field.m.clone(),
            area,
            x,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&COLUMNS.join(","));
        out.push('\n');
        for i in 0..self.x.len() {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                self.x[i], self.rho[i], self.m[i], self.u[i], self.area[i]
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut cols: [Vec<f64>; 5] = Default::default();
        let mut seen_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !seen_header {
                let names: Vec<&str> = line.split(',').map(str::trim).collect();
                if names != COLUMNS {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected header {}", COLUMNS.join(",")),
                    });
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != COLUMNS.len() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {} columns, found {}", COLUMNS.len(), fields.len()),
                });
            }
            for (c, f) in cols.iter_mut().zip(&fields) {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid number '{f}'"),
                })?;
                c.push(v);
            }
        }
        if !seen_header {
            return Err(Error::Parse {
                line: 0,
                msg: "missing column header".into(),
            });
        }
        let [x, rho, m, u, area] = cols;
        if x.len() < 2 {
            return Err(Error::Parse {
                line: 0,
                msg: "snapshot needs at least two rows".into(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse {
                line: 0,
                msg: "x column must be finite and strictly increasing".into(),
            });
        }
        Ok(Self {
            meta,
            x,
            rho,
            m,
            u,
            area,
        })
    }

    /// Snapshot time from the header, if present.
    pub fn time(&self) -> Option<f64> {
        self.meta.get("t").and_then(|v| v.parse().ok())
    }

    /// Rebuilds a field; requires uniformly spaced rows.
    pub fn to_field(&self) -> Result<FluidField> {
        let n = self.x.len() - 1;
        let (a, b) = (self.x[0], self.x[n]);
        let grid = Grid::new(a, b, n)?;
        let dx = grid.dx();
        if self
            .x
            .iter()
            .enumerate()
            .any(|(i, &x)| (x - grid.x(i)).abs() > 1e-9 * dx.max(1.0))
        {
            return Err(Error::config("snapshot rows are not uniformly spaced"));
        }
        FluidField::new(grid, self.rho.clone(), self.m.clone(), self.time().unwrap_or(0.0))
    }
}
