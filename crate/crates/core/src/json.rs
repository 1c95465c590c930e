//! JSON shapes shared by the configuration files and CLI outputs.
//!
//! Complex numbers are written as `{"re": .., "im": ..}`; polynomials as
//! arrays of those in ascending degree; poles and Blaschke zeros as
//! `{"re": .., "im": .., "mult": ..}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(c: ComplexJson) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleJson {
    pub re: f64,
    pub im: f64,
    pub mult: u32,
}

pub fn to_json_vec(values: &[Complex64]) -> Vec<ComplexJson> {
    values.iter().copied().map(ComplexJson::from).collect()
}

pub fn from_json_vec(values: &[ComplexJson]) -> Vec<Complex64> {
    values.iter().copied().map(Complex64::from).collect()
}

/// Parses `"re,im"` (or a bare real `"re"`).
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let mut parts = text.split(',').map(str::trim);
    let re = parts
        .next()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| format!("empty complex value '{text}'"))?
        .parse::<f64>()
        .map_err(|e| format!("bad real part in '{text}': {e}"))?;
    let im = match parts.next() {
        Some(s) => s
            .parse::<f64>()
            .map_err(|e| format!("bad imaginary part in '{text}': {e}"))?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(format!("too many components in '{text}'"));
    }
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs() {
        assert_eq!(parse_complex("0.6,0.3").unwrap(), Complex64::new(0.6, 0.3));
        assert_eq!(parse_complex(" -1 ").unwrap(), Complex64::new(-1.0, 0.0));
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn complex_shape() {
        let s = serde_json::to_string(&ComplexJson::from(Complex64::new(1.0, -0.5))).unwrap();
        assert_eq!(s, r#"{"re":1.0,"im":-0.5}"#);
    }
}
