//! Bounded piecewise-constant test functions on `(0, ∞)`.

use serde::{Deserialize, Serialize};

/// A bounded piecewise-constant function of a positive size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FSpec {
    Constant { value: f64 },
    /// Indicator of an interval; `hi` may be infinite.
    Interval {
        lo: f64,
        hi: f64,
        #[serde(default = "yes")]
        closed_lo: bool,
        #[serde(default = "yes")]
        closed_hi: bool,
    },
    /// `values[i]` on `[edges[i], edges[i+1])`, zero outside.
    Steps { edges: Vec<f64>, values: Vec<f64> },
}

fn yes() -> bool {
    true
}

impl FSpec {
    pub fn one() -> Self {
        FSpec::Constant { value: 1.0 }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        FSpec::Interval { lo, hi, closed_lo: true, closed_hi: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        FSpec::Interval { lo, hi, closed_lo: false, closed_hi: false }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            FSpec::Constant { value } if !value.is_finite() => Err("constant must be finite".into()),
            FSpec::Interval { lo, hi, .. } if !(*lo >= 0.0 && hi > lo) => {
                Err(format!("interval [{lo}, {hi}] must satisfy 0 <= lo < hi"))
            }
            FSpec::Steps { edges, values } => {
                if edges.len() != values.len() + 1 {
                    return Err("steps need one more edge than values".into());
                }
                if edges.windows(2).any(|w| !(w[1] > w[0])) || edges[0] < 0.0 {
                    return Err("step edges must be non-negative and increasing".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err("step values must be finite".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            FSpec::Constant { value } => *value,
            FSpec::Interval { lo, hi, closed_lo, closed_hi } => {
                let above = if *closed_lo { y >= *lo } else { y > *lo };
                let below = if *closed_hi { y <= *hi } else { y < *hi };
                if above && below {
                    1.0
                } else {
                    0.0
                }
            }
            FSpec::Steps { edges, values } => {
                if y < edges[0] || y >= edges[edges.len() - 1] {
                    return 0.0;
                }
                let i = edges.partition_point(|&e| e <= y) - 1;
                values[i]
            }
        }
    }

    /// `(lo, hi, value)` pieces covering the support. Endpoint conventions
    /// are dropped, which is harmless for integrals against densities.
    pub fn pieces(&self) -> Vec<(f64, f64, f64)> {
        match self {
            FSpec::Constant { value } => vec![(0.0, f64::INFINITY, *value)],
            FSpec::Interval { lo, hi, .. } => vec![(*lo, *hi, 1.0)],
            FSpec::Steps { edges, values } => edges
                .windows(2)
                .zip(values)
                .map(|(w, &v)| (w[0], w[1], v))
                .collect(),
        }
    }

    /// `∫ f(y) y^{-q-1} dy` for `q > 0`.
    pub fn power_integral(&self, q: f64) -> f64 {
        self.pieces()
            .into_iter()
            .map(|(lo, hi, v)| {
                let a = if lo == 0.0 { f64::INFINITY } else { lo.powf(-q) };
                let b = if hi.is_infinite() { 0.0 } else { hi.powf(-q) };
                if v == 0.0 {
                    0.0
                } else {
                    v * (a - b) / q
                }
            })
            .sum()
    }

    /// Short identifier for CSV output.
    pub fn id(&self) -> String {
        match self {
            FSpec::Constant { value } => format!("const({value})"),
            FSpec::Interval { lo, hi, closed_lo, closed_hi } => format!(
                "{}{lo},{hi}{}",
                if *closed_lo { '[' } else { '(' },
                if *closed_hi { ']' } else { ')' }
            ),
            FSpec::Steps { edges, .. } => format!("steps({})", edges.len() - 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_endpoints() {
        let f = FSpec::closed(1.0, 2.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(2.0), 1.0);
        let g = FSpec::open(1.0, 2.0);
        assert_eq!(g.eval(1.0), 0.0);
        assert_eq!(g.eval(1.5), 1.0);
        let s = FSpec::Steps { edges: vec![0.0, 1.0, 3.0], values: vec![2.0, -1.0] };
        assert_eq!(s.eval(0.5), 2.0);
        assert_eq!(s.eval(1.0), -1.0);
        assert_eq!(s.eval(3.0), 0.0);
        assert!(s.validate().is_ok());
        assert!(FSpec::Steps { edges: vec![1.0, 0.5], values: vec![1.0] }.validate().is_err());
    }

    #[test]
    fn power_integral_closed_form() {
        let e = std::f64::consts::E;
        let f = FSpec::closed(1.0, e);
        assert!((f.power_integral(1.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
        let tail = FSpec::open(1.0, f64::INFINITY);
        assert!((tail.power_integral(2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn serde_round_trip() {
        let f = FSpec::open(0.5, 2.0);
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<FSpec>(&s).unwrap(), f);
    }
}
