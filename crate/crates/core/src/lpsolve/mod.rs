//! Private feasibility solvers for linear programs `Ax ≤ b`.
//!
//! * [`scalar_private_solve`]: primal multiplicative weights over the simplex,
//!   privately selecting the most violated constraint each round. Private
//!   with respect to `b`.
//! * [`dense_mwu_solve`]: dual multiplicative weights over constraints,
//!   projected onto dense distributions, with a private vertex oracle.
//!   Private with respect to adding or removing a constraint.
//! * [`feasibility_binary_search`]: bisection over the objective value.

mod bregman;
mod dense;
mod scalar;
mod search;

pub use bregman::{bregman_project, bregman_sensitivity_check, DenseDistribution, ProjectionDistance};
pub use dense::{dense_mwu_solve, dual_oracle_em, dual_vertex_index, DenseMwuParams, DualOracle};
pub use scalar::{constraint_index, scalar_private_solve, ConstraintOracle, ScalarLpParams};
pub use search::{feasibility_binary_search, SearchOutcome};

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// A feasibility program `Ax ≤ b` with objective `c` and the public
/// constants its solvers need.
#[derive(Debug, Clone, PartialEq)]
pub struct LPInstance {
    m: usize,
    d: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Per-coordinate sensitivity of `b`.
    pub delta_inf: f64,
    /// Width bound.
    pub rho: f64,
    /// Objective value defining the feasibility slice `cᵀx = OPT`.
    pub opt: f64,
}

impl LPInstance {
    /// `a` is row-major `m × d`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: usize,
        d: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        delta_inf: f64,
        rho: f64,
        opt: f64,
    ) -> Result<Self> {
        if m == 0 || d == 0 {
            return invalid("an LP needs at least one constraint and one variable");
        }
        let expected = m.checked_mul(d).ok_or_else(|| Error::InvalidArgument("m·d overflows".into()))?;
        for (len, want) in [(a.len(), expected), (b.len(), m), (c.len(), d)] {
            if len != want {
                return Err(Error::DimensionMismatch { expected: want, got: len });
            }
        }
        let all = a.iter().chain(&b).chain(&c).chain([&delta_inf, &rho, &opt]);
        if let Some(pos) = all.into_iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        if rho <= 0.0 || delta_inf < 0.0 {
            return invalid("rho must be positive and delta_inf nonnegative");
        }
        Ok(Self { m, d, a, b, c, delta_inf, rho, opt })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.d..(i + 1) * self.d]
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `max_ij |A_ij|`.
    pub fn max_abs_entry(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Nonnegative constraints and positive objective.
    pub fn is_packing(&self) -> bool {
        self.a.iter().all(|&v| v >= 0.0) && self.c.iter().all(|&v| v > 0.0)
    }

    /// Same program with a different objective value.
    pub fn with_opt(&self, opt: f64) -> Self {
        Self { opt, ..self.clone() }
    }

    /// Violations `A_i x − b_i` of every constraint with positive slack.
    pub fn report(&self, x: Vec<f64>) -> Result<FeasibilityReport> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        let violations = (0..self.m)
            .filter_map(|i| {
                let slack = crate::dot(self.row(i), &x) - self.b[i];
                (slack > 0.0).then_some((i, slack))
            })
            .collect();
        Ok(FeasibilityReport { x_out: x, m: self.m, violations })
    }

    /// Text form: `m d`, then `A` row-major, `b`, `c`, and finally
    /// `delta_inf rho opt`, each value with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.m, self.d);
        let line = |s: &mut String, vals: &[f64]| {
            let mut first = true;
            for v in vals {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{v:.16e}");
            }
            s.push('\n');
        };
        for i in 0..self.m {
            line(&mut s, self.row(i));
        }
        line(&mut s, &self.b);
        line(&mut s, &self.c);
        line(&mut s, &[self.delta_inf, self.rho, self.opt]);
        s
    }

    /// Parses the format written by [`LPInstance::to_text`]. Any
    /// whitespace separates values.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_ascii_whitespace();
        let mut count = |what: &str| -> Result<usize> {
            let tok = tokens.next().ok_or_else(|| Error::Parse(format!("missing {what}")))?;
            tok.parse().map_err(|_| Error::Parse(format!("bad {what} {tok:?}")))
        };
        let m = count("row count")?;
        let d = count("column count")?;
        let total = m
            .checked_mul(d)
            .and_then(|md| md.checked_add(m)?.checked_add(d)?.checked_add(3))
            .ok_or_else(|| Error::Parse("dimensions overflow".into()))?;
        let mut values = Vec::with_capacity(total.min(text.len() / 2 + 1));
        for tok in tokens {
            if values.len() == total {
                return Err(Error::Parse("trailing values".into()));
            }
            values.push(f64::from_str(tok).map_err(|_| Error::Parse(format!("bad number {tok:?}")))?);
        }
        if values.len() != total {
            return Err(Error::Parse(format!("expected {total} values, found {}", values.len())));
        }
        let md = m * d;
        let tail = &values[md + m + d..];
        let (delta_inf, rho, opt) = (tail[0], tail[1], tail[2]);
        let c = values[md + m..md + m + d].to_vec();
        let b = values[md..md + m].to_vec();
        values.truncate(md);
        Self::new(m, d, values, b, c, delta_inf, rho, opt).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A candidate solution and the constraints it violates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub x_out: Vec<f64>,
    /// Total constraint count.
    pub m: usize,
    /// `(constraint id, A_i x − b_i)` for every violated constraint.
    pub violations: Vec<(usize, f64)>,
}

impl FeasibilityReport {
    /// Constraints with `A_i x > b_i + alpha`.
    pub fn violated_count_at(&self, alpha: f64) -> usize {
        self.violations.iter().filter(|(_, s)| *s > alpha).count()
    }

    pub fn violated_fraction_at(&self, alpha: f64) -> f64 {
        self.violated_count_at(alpha) as f64 / self.m as f64
    }

    pub fn max_violation(&self) -> f64 {
        self.violations.iter().fold(0.0, |m, (_, s)| m.max(*s))
    }
}

/// Per-round measurements shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpIterationRecord {
    /// Selected constraint (scalar-private) or vertex (dense MWU).
    pub selected: usize,
    pub samples_drawn: usize,
    pub selection_nanos: u64,
    pub wall_nanos: u64,
}

/// Solver result with its per-round trace.
#[derive(Debug, Clone)]
pub struct LpSolveOutput {
    pub report: FeasibilityReport,
    pub iterations: Vec<LpIterationRecord>,
    /// Per-round privacy parameter actually used.
    pub epsilon0: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LPInstance {
        LPInstance::new(2, 3, vec![1.0, 0.5, 0.0, 0.25, 1.0, 2.0], vec![1.0, 0.1], vec![1.0, 1.0, 2.0], 0.1, 2.0, 1.0)
            .unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let lp = LPInstance::new(1, 2, vec![0.1 + 0.2, -1e-300], vec![1.0 / 3.0], vec![2.5, 7.0], 0.1, 3.0, 0.7).unwrap();
        let back = LPInstance::parse(&lp.to_text()).unwrap();
        assert_eq!(back, lp);
    }

    #[test]
    fn parse_rejects_malformed_input() {
        assert!(LPInstance::parse("").is_err());
        assert!(LPInstance::parse("1 1\n1\n1\n1\n0.1 1").is_err());
        assert!(LPInstance::parse("1 1\n1\n1\n1\n0.1 1 1 9").is_err());
        assert!(LPInstance::parse("1 1\n1\nx\n1\n0.1 1 1").is_err());
        assert!(LPInstance::parse("18446744073709551615 2\n").is_err());
        assert!(LPInstance::parse("1 1\n1\n1\n1\n0.1 -1 1").is_err());
    }

    #[test]
    fn report_matches_brute_force() {
        let lp = small();
        let x = vec![0.5, 0.5, 0.0];
        let r = lp.report(x).unwrap();
        // Row 0: 0.75 − 1 < 0; row 1: 0.625 − 0.1 = 0.525.
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].0, 1);
        assert!((r.violations[0].1 - 0.525).abs() < 1e-15);
        assert_eq!(r.violated_count_at(0.5), 1);
        assert_eq!(r.violated_count_at(0.6), 0);
        assert!(lp.is_packing());
    }
}
