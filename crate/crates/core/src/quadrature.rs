//! Composite trapezoid and Simpson rules on uniform grids.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadRule {
    #[default]
    Trapezoid,
    Simpson,
}

impl QuadRule {
    pub fn name(self) -> &'static str {
        match self {
            QuadRule::Trapezoid => "trapezoid",
            QuadRule::Simpson => "simpson",
        }
    }

    pub fn check(self, count: usize) -> Result<()> {
        let ok = match self {
            QuadRule::Trapezoid => count >= 2,
            QuadRule::Simpson => count >= 3 && count % 2 == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadSampleCount {
                rule: self.name(),
                count,
            })
        }
    }

    /// Unscaled weights: `(1/2, 1, ..., 1, 1/2)` or `(1, 4, 2, ..., 4, 1) / 3`.
    pub fn weights(self, count: usize) -> Result<Vec<f64>> {
        self.check(count)?;
        let w = match self {
            QuadRule::Trapezoid => (0..count)
                .map(|s| if s == 0 || s == count - 1 { 0.5 } else { 1.0 })
                .collect(),
            QuadRule::Simpson => (0..count)
                .map(|s| {
                    if s == 0 || s == count - 1 {
                        1.0 / 3.0
                    } else if s % 2 == 1 {
                        4.0 / 3.0
                    } else {
                        2.0 / 3.0
                    }
                })
                .collect(),
        };
        Ok(w)
    }
}

impl fmt::Display for QuadRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuadRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(QuadRule::Trapezoid),
            "simpson" => Ok(QuadRule::Simpson),
            other => Err(Error::InvalidInput(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

/// Pairwise (cascade) summation; the reduction tree depends only on the length.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

pub fn integrate(values: &[Complex64], dt: f64, rule: QuadRule) -> Result<Complex64> {
    let w = rule.weights(values.len())?;
    let terms: Vec<Complex64> = values.iter().zip(&w).map(|(v, w)| v * *w).collect();
    Ok(pairwise_sum(&terms) * dt)
}

/// Tensor-product rule over a square grid; `values[r][s]` sits at `(t_r, t_s)`.
pub fn integrate2d(values: &[Vec<Complex64>], dt: f64, rule: QuadRule) -> Result<Complex64> {
    let n = values.len();
    let w = rule.weights(n)?;
    let mut rows = Vec::with_capacity(n);
    for (r, row) in values.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!(
                "integrate2d needs a square grid; row {r} has {} entries, expected {n}",
                row.len()
            )));
        }
        let terms: Vec<Complex64> = row.iter().zip(&w).map(|(v, w)| v * *w).collect();
        rows.push(pairwise_sum(&terms) * w[r]);
    }
    Ok(pairwise_sum(&rows) * dt * dt)
}
