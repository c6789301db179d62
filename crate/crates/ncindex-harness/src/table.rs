//! The residue table: pairing rows `r, sum_phi, remainder, c_norm, ratio` over an r-grid.

use std::fmt::Write as _;

use ncindex::cocycle::{matrix_pairing_row, PairingRow};
use ncindex::triple::{DoubledTriple, EvenTriple};
use ncindex::BlockOperator;
use num_complex::Complex64 as C;

use crate::config::SuiteConfig;
use crate::error::{HarnessError, Result};
use crate::models::{self, Built};

pub const HEADER: &str = "r,sum_phi,remainder,c_norm,ratio";

/// Parses `a:b:n` (n equally spaced points from a to b inclusive) or a comma list.
pub fn parse_r_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || HarnessError::Config(format!("bad r-grid `{spec}` (expected a:b:n or a comma list)"));
    let grid: Vec<f64> = if let [a, b, n] = spec.split(':').collect::<Vec<_>>()[..] {
        let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        match n {
            0 => return Err(bad()),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        }
    } else {
        spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(HarnessError::Config(format!("r-grid `{spec}` must contain positive values")));
    }
    Ok(grid)
}

/// One pairing row per r; a row whose evaluation fails keeps its r and leaves the other cells empty.
pub fn residue_table(cfg: &SuiteConfig, grid: &[f64]) -> Result<Vec<std::result::Result<PairingRow, String>>> {
    cfg.validate()?;
    let (triple, p) = table_triple(cfg)?;
    let doubled = DoubledTriple::new(&triple, &p)?;
    Ok(grid.iter().map(|&r| matrix_pairing_row(&doubled, r, &cfg.quadrature).map_err(|e| e.to_string())).collect())
}

fn table_triple(cfg: &SuiteConfig) -> Result<(EvenTriple, BlockOperator)> {
    Ok(match models::build(&cfg.model, cfg.seed)? {
        Built::Matrix(inst) => (inst.triple, inst.p),
        Built::Torus(m) => {
            let inst = m.projection_instance()?;
            (inst.triple, inst.p)
        }
        Built::Circle(m) => {
            let t = m.triple()?;
            let p = BlockOperator::scalar(&t.algebra, C::new(cfg.model.projection, 0.0));
            (t, p)
        }
    })
}

pub fn to_csv(grid: &[f64], rows: &[std::result::Result<PairingRow, String>]) -> String {
    let mut out = format!("{HEADER}\n");
    for (r, row) in grid.iter().zip(rows) {
        match row {
            Ok(x) => writeln!(out, "{},{},{},{},{}", x.r, x.sum_phi, x.remainder, x.c_norm, x.ratio),
            Err(_) => writeln!(out, "{r},,,,"),
        }
        .expect("writing to a String");
    }
    out
}
