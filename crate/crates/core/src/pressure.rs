//! Pressure functions mapping a node's queue length and capacity to the
//! scalar used by back-pressure weights.
//!
//! Three kinds are provided:
//!
//! - linear: `P(q) = q`, the classic back-pressure choice;
//! - relative: `P(q) = q / C`;
//! - normalized: a convex map into `[0, 1]` with `P(0) = 0`, `P(q) = 1` for
//!   every `q >= C`, and uniform slope `1 / C_inf` at the origin:
//!
//! ```text
//!            q/C_inf + (2 - C/C_inf) (q/C)^m
//! P(q) = min(1, -------------------------------)
//!                   1 + (q/C)^(m-1)
//! ```
//!
//! `m > 1` sets where the curve leaves its linear regime and `C_inf` is the
//! capacity whose curve stays exactly linear (`P(q) = q / C_inf`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape parameters of the normalized pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureParams {
    pub m: f64,
    pub c_infinity: f64,
}

impl PressureParams {
    pub fn new(m: f64, c_infinity: f64) -> Result<Self> {
        let p = PressureParams { m, c_infinity };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.m > 1.0) || !self.m.is_finite() {
            return Err(Error::config(format!(
                "pressure exponent m must be > 1, got {}",
                self.m
            )));
        }
        if !(self.c_infinity > 0.0) || !self.c_infinity.is_finite() {
            return Err(Error::config(format!(
                "reference capacity C_inf must be positive, got {}",
                self.c_infinity
            )));
        }
        Ok(())
    }
}

impl Default for PressureParams {
    fn default() -> Self {
        PressureParams {
            m: 2.0,
            c_infinity: 200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PressureFunction {
    Linear,
    Relative,
    Normalized(PressureParams),
}

impl PressureFunction {
    pub fn normalized(m: f64, c_infinity: f64) -> Result<Self> {
        Ok(PressureFunction::Normalized(PressureParams::new(m, c_infinity)?))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PressureFunction::Linear => "linear",
            PressureFunction::Relative => "relative",
            PressureFunction::Normalized(_) => "normalized",
        }
    }

    /// Reference capacity, for the normalized kind only.
    pub fn c_infinity(&self) -> Option<f64> {
        match self {
            PressureFunction::Normalized(p) => Some(p.c_infinity),
            _ => None,
        }
    }

    /// Checked evaluation. Fails when a normalized pressure is asked about a
    /// capacity above its reference capacity, or on non-positive capacity.
    pub fn evaluate(&self, q: f64, c: f64) -> Result<f64> {
        if !(c >= 1.0) {
            return Err(Error::config(format!("capacity must be >= 1, got {c}")));
        }
        if !(q >= 0.0) {
            return Err(Error::config(format!("queue length must be >= 0, got {q}")));
        }
        if let PressureFunction::Normalized(p) = self {
            p.check()?;
            if c > p.c_infinity {
                return Err(Error::config(format!(
                    "capacity {c} exceeds reference capacity {}",
                    p.c_infinity
                )));
            }
        }
        Ok(self.value(q, c))
    }

    /// Unchecked evaluation for callers that validated capacities up front.
    #[inline]
    pub fn value(&self, q: f64, c: f64) -> f64 {
        match *self {
            PressureFunction::Linear => q,
            PressureFunction::Relative => q / c,
            PressureFunction::Normalized(PressureParams { m, c_infinity }) => {
                if q >= c {
                    return 1.0;
                }
                let x = q / c;
                let num = q / c_infinity + (2.0 - c / c_infinity) * x.powf(m);
                let den = 1.0 + x.powf(m - 1.0);
                (num / den).min(1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessReport {
    /// `(capacity, estimated dP/dQ at 0)` per requested capacity.
    pub slopes: Vec<(f64, f64)>,
    /// Common slope the estimates are compared against.
    pub reference: f64,
    pub fair: bool,
}

/// Relative tolerance for slope agreement at the origin.
pub const FAIRNESS_TOLERANCE: f64 = 1e-4;

/// Estimates the slope at zero for each capacity by forward difference and
/// reports whether all slopes agree.
///
/// The reference slope is `1 / C_inf` for the normalized kind, `1` for the
/// linear kind and the first capacity's slope otherwise. The step defaults to
/// `1e-6 * C_inf` (or `1e-6` without a reference capacity).
pub fn check_fairness(f: &PressureFunction, capacities: &[f64], step: Option<f64>) -> FairnessReport {
    let h = step.unwrap_or_else(|| 1e-6 * f.c_infinity().unwrap_or(1.0));
    let slopes: Vec<(f64, f64)> = capacities
        .iter()
        .map(|&c| (c, (f.value(h, c) - f.value(0.0, c)) / h))
        .collect();
    let reference = match f {
        PressureFunction::Normalized(p) => 1.0 / p.c_infinity,
        PressureFunction::Linear => 1.0,
        PressureFunction::Relative => slopes.first().map_or(0.0, |s| s.1),
    };
    let fair = slopes
        .iter()
        .all(|&(_, s)| ((s - reference) / reference).abs() <= FAIRNESS_TOLERANCE);
    FairnessReport {
        slopes,
        reference,
        fair,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub convex: bool,
    /// Smallest discrete second difference found.
    pub worst_second_difference: f64,
}

pub const CONVEXITY_TOLERANCE: f64 = 1e-9;

/// Samples the function at `samples` uniform points on `[0, c]` and checks
/// that every discrete second difference is at least `-1e-9`.
pub fn check_convexity(f: &PressureFunction, c: f64, samples: usize) -> ConvexityReport {
    let n = samples.max(3);
    let values: Vec<f64> = (0..n).map(|i| f.value(c * i as f64 / (n - 1) as f64, c)).collect();
    let worst = values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);
    ConvexityReport {
        convex: worst >= -CONVEXITY_TOLERANCE,
        worst_second_difference: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normalized(m: f64, c_inf: f64) -> PressureFunction {
        PressureFunction::normalized(m, c_inf).unwrap()
    }

    #[test]
    fn normalized_values() {
        let f = normalized(4.0, 500.0);
        assert_eq!(f.evaluate(0.0, 50.0).unwrap(), 0.0);
        assert_eq!(f.evaluate(50.0, 50.0).unwrap(), 1.0);
        assert_eq!(f.evaluate(75.0, 50.0).unwrap(), 1.0);
        // (25/500 + 1.9 * 0.5^4) / (1 + 0.5^3) = 0.16875 / 1.125
        assert!((f.evaluate(25.0, 50.0).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn reference_capacity_is_linear() {
        let f = normalized(2.0, 200.0);
        assert!((f.evaluate(120.0, 200.0).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn capacity_above_reference_is_rejected() {
        let f = normalized(2.0, 200.0);
        assert!(f.evaluate(1.0, 201.0).is_err());
        assert!(PressureFunction::normalized(1.0, 200.0).is_err());
        assert!(PressureFunction::normalized(2.0, 0.0).is_err());
        assert!(PressureFunction::Linear.evaluate(1.0, 0.0).is_err());
    }

    #[test]
    fn linear_and_relative() {
        assert_eq!(PressureFunction::Linear.evaluate(7.0, 50.0).unwrap(), 7.0);
        assert_eq!(PressureFunction::Relative.evaluate(10.0, 50.0).unwrap(), 0.2);
    }

    #[test]
    fn fairness() {
        let r = check_fairness(&normalized(4.0, 500.0), &[50.0, 100.0, 200.0], None);
        assert!(r.fair, "{r:?}");
        assert_eq!(r.reference, 0.002);

        let r = check_fairness(&PressureFunction::Linear, &[50.0, 100.0], None);
        assert!(r.fair);
        assert!(r.slopes.iter().all(|&(_, s)| s == 1.0));

        let r = check_fairness(&PressureFunction::Relative, &[50.0, 100.0], None);
        assert!(!r.fair);
        assert!((r.slopes[0].1 - 0.02).abs() < 1e-9);
        assert!((r.slopes[1].1 - 0.01).abs() < 1e-9);
    }

    #[test]
    fn convexity() {
        assert!(check_convexity(&normalized(4.0, 500.0), 50.0, 1000).convex);
        assert!(check_convexity(&normalized(2.0, 200.0), 100.0, 1000).convex);
        let lin = check_convexity(&normalized(2.0, 200.0), 200.0, 1000);
        assert!(lin.convex);
        assert!(lin.worst_second_difference.abs() < 1e-12);
    }

    #[test]
    fn serde_shape() {
        let f: PressureFunction = toml::from_str("kind = \"normalized\"\nm = 4.0\nc_infinity = 500.0").unwrap();
        assert_eq!(f, normalized(4.0, 500.0));
        let f: PressureFunction = toml::from_str("kind = \"linear\"").unwrap();
        assert_eq!(f, PressureFunction::Linear);
    }
}
