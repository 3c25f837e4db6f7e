use crate::error::{invalid, Result};

/// Which per-iteration budget formula produced `epsilon0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionRule {
    /// `ε0 = ε / √(T ln(1/δ))`.
    Mwem,
    /// `ε0 = ε / √(8T ln(1/δ))`, used by the scalar-private LP solver.
    ScalarLp,
}

/// Split of a total `(ε, δ)` budget over `T` adaptive selections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub epsilon_total: f64,
    pub delta_total: f64,
    pub epsilon0: f64,
    pub iterations: usize,
    /// Probability mass charged to index failures.
    pub extra_delta: f64,
    pub rule: CompositionRule,
}

impl PrivacyBudget {
    /// Reported guarantee `(ε, δ + extra_delta)`.
    pub fn guarantee(&self) -> (f64, f64) {
        (self.epsilon_total, self.delta_total + self.extra_delta)
    }

    /// Advanced-composition guarantee when every call is
    /// `per_call_epsilon`-DP, with `δ'` set to the target δ.
    pub fn composed(&self, per_call_epsilon: f64) -> (f64, f64) {
        let (eps, delta) = advanced_composition(per_call_epsilon, 0.0, self.iterations, self.delta_total);
        (eps, delta + self.extra_delta)
    }
}

/// `k`-fold adaptive composition of `(ε, δ)`-DP mechanisms:
/// `(ε√(2k ln(1/δ')) + 2kε², kδ + δ')`.
pub fn advanced_composition(epsilon: f64, delta: f64, k: usize, delta_prime: f64) -> (f64, f64) {
    let k = k as f64;
    let eps = epsilon * (2.0 * k * (1.0 / delta_prime).ln()).sqrt() + 2.0 * k * epsilon * epsilon;
    (eps, k * delta + delta_prime)
}

fn check(epsilon: f64, delta: f64, iterations: usize, extra_delta: f64) -> Result<()> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    if iterations == 0 {
        return invalid("iteration count must be at least 1");
    }
    if !(extra_delta.is_finite() && extra_delta >= 0.0) {
        return invalid(format!("extra delta must be nonnegative, got {extra_delta}"));
    }
    Ok(())
}

/// Per-iteration budget `ε0 = ε / √(T ln(1/δ))`.
pub fn compose_budget(epsilon: f64, delta: f64, iterations: usize, extra_delta: f64) -> Result<PrivacyBudget> {
    check(epsilon, delta, iterations, extra_delta)?;
    let epsilon0 = epsilon / (iterations as f64 * (1.0 / delta).ln()).sqrt();
    Ok(PrivacyBudget {
        epsilon_total: epsilon,
        delta_total: delta,
        epsilon0,
        iterations,
        extra_delta,
        rule: CompositionRule::Mwem,
    })
}

/// Per-iteration budget `ε0 = ε / √(8T ln(1/δ))`.
pub fn compose_budget_lp(epsilon: f64, delta: f64, iterations: usize, extra_delta: f64) -> Result<PrivacyBudget> {
    check(epsilon, delta, iterations, extra_delta)?;
    let epsilon0 = epsilon / (8.0 * iterations as f64 * (1.0 / delta).ln()).sqrt();
    Ok(PrivacyBudget {
        epsilon_total: epsilon,
        delta_total: delta,
        epsilon0,
        iterations,
        extra_delta,
        rule: CompositionRule::ScalarLp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 1e-12
    }

    #[test]
    fn reference_values() {
        // Independently evaluated in extended precision.
        let b = compose_budget(1.0, 1e-3, 100, 0.0).unwrap();
        assert!(close(b.epsilon0, 0.038_047_973_310_162_52));
        let lp = compose_budget_lp(1.0, 1e-3, 100, 0.0).unwrap();
        assert!(close(lp.epsilon0, 0.013_451_989_969_010_345));
        let unit = compose_budget(0.7, (-1.0f64).exp(), 1, 0.0).unwrap();
        assert!(close(unit.epsilon0, 0.7));
    }

    #[test]
    fn invalid_inputs() {
        assert!(compose_budget(1.0, 1.0, 10, 0.0).is_err());
        assert!(compose_budget(1.0, 0.0, 10, 0.0).is_err());
        assert!(compose_budget(0.0, 0.1, 10, 0.0).is_err());
        assert!(compose_budget(1.0, 0.1, 0, 0.0).is_err());
    }

    #[test]
    fn guarantee_adds_failure_mass() {
        let b = compose_budget(1.0, 1e-3, 50, 0.01).unwrap();
        assert_eq!(b.guarantee(), (1.0, 1e-3 + 0.01));
        let (eps, delta) = b.composed(b.epsilon0);
        let expected = b.epsilon0 * (100.0 * 1000f64.ln()).sqrt() + 100.0 * b.epsilon0 * b.epsilon0;
        assert!(close(eps, expected));
        assert!(close(delta, 1e-3 + 0.01));
    }
}
