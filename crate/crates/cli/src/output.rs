//! CSV and JSON artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use gyrocanon::{FieldSetup, FullState, GCState, GcTrajectory};
use serde::Serialize;

pub const TRAJECTORY_HEADER: &str =
    "t,rx,ry,rz,vx_or_prx,vy_or_pry,vz_or_prz,phi,p_phi,mu,energy_or_K,constraint_residual";
pub const DIAGNOSTICS_HEADER: &str = "quantity,abscissa,value";

/// 17 significant digits, enough to round-trip an f64.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// One trajectory row; `None` cells stay empty.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Row {
    pub t: f64,
    pub r: [f64; 3],
    pub v_or_p: [f64; 3],
    pub phi: Option<f64>,
    pub p_phi: Option<f64>,
    pub mu: Option<f64>,
    pub energy_or_k: Option<f64>,
    pub constraint_residual: Option<f64>,
}

impl Row {
    /// Particle row: velocity, lowest-order μ at the particle and the energy.
    pub fn full(s: &FullState<f64>, setup: &FieldSetup<f64>) -> gyrocanon::Result<Self> {
        let field = setup.sample(s.r, s.t)?;
        let sp = &setup.species;
        let w = s.v - field.v_e - field.b_hat * field.b_hat.dot(s.v - field.v_e);
        Ok(Self {
            t: s.t,
            r: s.r.to_array(),
            v_or_p: s.v.to_array(),
            mu: Some(sp.m * w.norm_sq() / (2.0 * field.b_mag)),
            energy_or_k: Some(s.energy(&field, sp)),
            ..Self::default()
        })
    }

    /// Guiding-center row: `r′`, `p_r`, `φ′`, `p_φ′`, `μ′` and `K`.
    pub fn gc(g: &GCState<f64>, k: f64, residual: Option<f64>, setup: &FieldSetup<f64>) -> Self {
        Self {
            t: g.t,
            r: g.r_gc.to_array(),
            v_or_p: g.p_r.to_array(),
            phi: Some(g.phi),
            p_phi: Some(g.p_phi),
            mu: Some(g.mu(&setup.species)),
            energy_or_k: Some(k),
            constraint_residual: residual,
        }
    }
}

pub fn gc_rows(traj: &GcTrajectory<f64>, setup: &FieldSetup<f64>) -> Vec<Row> {
    traj.states
        .iter()
        .zip(&traj.hamiltonian)
        .zip(&traj.constraint_residual)
        .map(|((g, &k), res)| Row::gc(g, k, Some(res.norm()), setup))
        .collect()
}

pub fn trajectory_csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(256 * (rows.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for row in rows {
        let mut cells = vec![fmt(row.t)];
        cells.extend(row.r.iter().chain(&row.v_or_p).map(|&x| fmt(x)));
        cells.extend([row.phi, row.p_phi, row.mu, row.energy_or_k, row.constraint_residual].map(cell));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Long-format table of named values against an abscissa (time, ε, step, ...).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    rows: Vec<(String, f64, f64)>,
}

impl Diagnostics {
    pub fn push(&mut self, quantity: &str, abscissa: f64, value: f64) {
        self.rows.push((quantity.to_owned(), abscissa, value));
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(DIAGNOSTICS_HEADER);
        out.push('\n');
        for (q, x, v) in &self.rows {
            let _ = writeln!(out, "{q},{},{}", fmt(*x), fmt(*v));
        }
        out
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ScenarioInfo {
    pub command: String,
    pub field_model: String,
    pub initial_state: String,
    pub seed: u64,
}

/// Contents of `summary.json`. Maps are ordered, so the file is reproducible.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: ScenarioInfo,
    pub eps: f64,
    pub slopes: BTreeMap<String, f64>,
    pub residual_maxima: BTreeMap<String, f64>,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loglog_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_stderr: Option<f64>,
    pub exit_status: i32,
    pub error: Option<String>,
}

/// Everything a subcommand produces; written by one gatherer at the end.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts {
    pub trajectory: Option<Vec<Row>>,
    pub diagnostics: Diagnostics,
    pub summary: Summary,
}

impl Artifacts {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        if let Some(rows) = &self.trajectory {
            std::fs::write(dir.join("trajectory.csv"), trajectory_csv(rows))?;
        }
        if !self.diagnostics.is_empty() {
            std::fs::write(dir.join("diagnostics.csv"), self.diagnostics.to_csv())?;
        }
        let mut json = serde_json::to_string_pretty(&self.summary).map_err(std::io::Error::other)?;
        json.push('\n');
        std::fs::write(dir.join("summary.json"), json)
    }
}
