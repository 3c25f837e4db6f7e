use super::FeasibilityReport;
use crate::error::{invalid, Result};

/// Result of bisecting over the objective value.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Largest value the search certified as feasible (the lower bracket end).
    pub opt_estimate: f64,
    /// Final bracket `[lo, hi]`, of width at most the tolerance.
    pub bracket: (f64, f64),
    /// Report of the last probe judged feasible, if any.
    pub report: Option<FeasibilityReport>,
    pub probes: usize,
    /// `probes · per-probe ε`; each probe spends an independent budget.
    pub epsilon_spent: f64,
}

/// Bisection over `OPT ∈ [lo, hi]` assuming feasibility is monotone
/// (feasible below the optimum). `probe(opt)` runs a full solve and reports
/// whether it judged the slice feasible. Uses `⌈log₂((hi − lo)/τ)⌉` probes.
pub fn feasibility_binary_search<F>(
    lo: f64,
    hi: f64,
    tolerance: f64,
    epsilon_per_probe: f64,
    mut probe: F,
) -> Result<SearchOutcome>
where
    F: FnMut(f64) -> Result<(bool, FeasibilityReport)>,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return invalid(format!("invalid bracket [{lo}, {hi}]"));
    }
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return invalid(format!("tolerance must be positive, got {tolerance}"));
    }
    let planned = ((hi - lo) / tolerance).log2().ceil().max(0.0) as usize;
    let (mut lo, mut hi) = (lo, hi);
    let mut report = None;
    for _ in 0..planned {
        let mid = 0.5 * (lo + hi);
        let (feasible, r) = probe(mid)?;
        if feasible {
            lo = mid;
            report = Some(r);
        } else {
            hi = mid;
        }
    }
    Ok(SearchOutcome {
        opt_estimate: lo,
        bracket: (lo, hi),
        report,
        probes: planned,
        epsilon_spent: planned as f64 * epsilon_per_probe,
    })
}
