//! CSV tables with fixed column sets.
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so equal runs give byte-identical files. Wall times live in the
//! run metadata, never in a table.

use std::fmt::Write as _;

use crate::age::{RenewalTrace, Snapshot};
use crate::ctrw::MsdReport;
use crate::fracpde::{DensityHistory, EnergyReport};

use super::experiments::{ConvergenceReport, IdentityReport, MicroMacroReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn status(ok: bool) -> String {
    if ok { "pass" } else { "fail" }.into()
}

pub const CONVERGENCE_COLUMNS: &[&str] = &["epsilon", "t", "distance", "steps", "status"];
pub const IDENTITY_COLUMNS: &[&str] = &["identity", "alpha", "params", "lhs", "rhs", "residual", "status"];
pub const MICRO_MACRO_COLUMNS: &[&str] = &["epsilon", "t", "mc_vs_age", "mc_vs_limit", "age_vs_limit", "noise", "status"];
pub const ENERGY_COLUMNS: &[&str] = &["t", "memory", "gradient", "spread", "boundary", "rhs", "residual"];
pub const DENSITY_COLUMNS: &[&str] = &["t", "x", "rho"];
pub const FLUX_COLUMNS: &[&str] = &["t", "flux"];
pub const MSD_COLUMNS: &[&str] = &["t", "msd"];

pub fn convergence_table(r: &ConvergenceReport) -> Table {
    let mut t = Table::new(CONVERGENCE_COLUMNS);
    for row in &r.rows {
        match &row.failure {
            None => {
                for (time, d) in r.times.iter().zip(&row.distances) {
                    t.push(vec![num(row.epsilon), num(*time), num(*d), row.steps.to_string(), status(true)]);
                }
            }
            Some(msg) => t.push(vec![
                num(row.epsilon),
                String::new(),
                String::new(),
                String::new(),
                format!("error: {}", msg.replace(',', ";")),
            ]),
        }
    }
    t
}

pub fn identity_table(r: &IdentityReport) -> Table {
    let mut t = Table::new(IDENTITY_COLUMNS);
    for row in &r.rows {
        t.push(vec![
            row.identity.into(),
            row.alpha.map(num).unwrap_or_default(),
            row.params.clone(),
            num(row.lhs),
            num(row.rhs),
            num(row.residual),
            match &row.failure {
                Some(msg) => format!("error: {}", msg.replace(',', ";")),
                None => status(row.passed),
            },
        ]);
    }
    t
}

pub fn micro_macro_table(r: &MicroMacroReport) -> Table {
    let mut t = Table::new(MICRO_MACRO_COLUMNS);
    for row in &r.rows {
        t.push(vec![
            num(row.epsilon),
            num(row.t),
            num(row.mc_age),
            num(row.mc_limit),
            num(row.age_limit),
            num(row.noise),
            status(row.agrees()),
        ]);
    }
    t
}

pub fn energy_table(reports: &[EnergyReport]) -> Table {
    let mut t = Table::new(ENERGY_COLUMNS);
    for r in reports {
        t.push([r.t, r.memory, r.gradient, r.spread, r.boundary, r.rhs, r.residual].map(num).to_vec());
    }
    t
}

pub fn snapshot_table(snapshots: &[Snapshot]) -> Table {
    let mut t = Table::new(DENSITY_COLUMNS);
    for s in snapshots {
        for (x, rho) in s.x.iter().zip(&s.rho) {
            t.push(vec![num(s.t), num(*x), num(*rho)]);
        }
    }
    t
}

/// Solution at the steps nearest to `times`.
pub fn history_table(h: &DensityHistory, times: &[f64]) -> Table {
    let mut t = Table::new(DENSITY_COLUMNS);
    let x = h.grid.centers();
    for &time in times {
        if let Ok(k) = h.index_at(time) {
            for (xi, rho) in x.iter().zip(&h.values[k]) {
                t.push(vec![num(h.time(k)), num(*xi), num(*rho)]);
            }
        }
    }
    t
}

pub fn flux_table(trace: &RenewalTrace) -> Table {
    let mut t = Table::new(FLUX_COLUMNS);
    for (time, u) in trace.times().iter().zip(&trace.flux) {
        t.push(vec![num(*time), num(*u)]);
    }
    t
}

pub fn msd_table(r: &MsdReport) -> Table {
    let mut t = Table::new(MSD_COLUMNS);
    for (time, m) in r.times.iter().zip(&r.msd) {
        t.push(vec![num(*time), num(*m)]);
    }
    t
}

/// Contents of `run-metadata.txt`.
pub fn metadata(command: &str, config_text: &str, seed: u64, wall_seconds: f64, extra: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "command = {command}");
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "seed = {seed}");
    let _ = writeln!(out, "wall_seconds = {wall_seconds:.3}");
    for (k, v) in extra {
        let _ = writeln!(out, "{k} = {v}");
    }
    out.push_str("\n# config\n");
    out.push_str(config_text);
    out
}
