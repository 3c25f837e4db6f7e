use crate::error::{invalid, Error, Result};

/// A distribution whose largest entry is at most `1/s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDistribution {
    mass: Vec<f64>,
    s: f64,
}

impl DenseDistribution {
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_mass(self) -> Vec<f64> {
        self.mass
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `1/s`.
    pub fn density_bound(&self) -> f64 {
        1.0 / self.s
    }
}

/// KL projection of a nonnegative measure onto the `1/s`-dense
/// distributions: `(1/s) · min(1, c·y_a)` with `c` solving
/// `Σ_a min(1, c·y_a) = s`.
///
/// `c` is found exactly: with the entries sorted descending and the `j`
/// largest capped, `c = (s − j) / Σ_{a>j} y_(a)`; the right `j` is the
/// smallest one that leaves the largest uncapped entry below the cap.
pub fn bregman_project(y: &[f64], s: f64) -> Result<DenseDistribution> {
    let m = y.len();
    if !(s.is_finite() && s >= 1.0) {
        return invalid(format!("density parameter s must be at least 1, got {s}"));
    }
    if s > m as f64 {
        return invalid(format!("no distribution over {m} points is 1/{s}-dense"));
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    if y.iter().any(|&v| v < 0.0) {
        return invalid("measure must be nonnegative");
    }
    let mut order: Vec<usize> = (0..m).filter(|&a| y[a] > 0.0).collect();
    let support = order.len();
    if (support as f64) < s {
        return invalid(format!("measure has support {support}, below s = {s}"));
    }
    order.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));

    // suffix[j] = Σ of the sorted entries from position j on.
    let mut suffix = vec![0.0; support + 1];
    for j in (0..support).rev() {
        suffix[j] = suffix[j + 1] + y[order[j]];
    }
    let mut mass = vec![0.0; m];
    let mut capped = support;
    let mut c = f64::INFINITY;
    for j in 0..support {
        let remaining = s - j as f64;
        if remaining <= 0.0 {
            break;
        }
        let candidate = remaining / suffix[j];
        if candidate * y[order[j]] <= 1.0 {
            capped = j;
            c = candidate;
            break;
        }
    }
    for (pos, &a) in order.iter().enumerate() {
        mass[a] = if pos < capped { 1.0 / s } else { (c * y[a]).min(1.0) / s };
    }
    Ok(DenseDistribution { mass, s })
}

/// L1 distance between the projections of a measure and the same measure
/// with one extra coordinate appended, split into the shared coordinates and
/// the new one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionDistance {
    pub shared: f64,
    pub new_coordinate: f64,
}

impl ProjectionDistance {
    pub fn total(&self) -> f64 {
        self.shared + self.new_coordinate
    }
}

/// Projects `y` and `y_prime` (which must equal `y` plus one trailing
/// coordinate) and measures how far apart the results are.
pub fn bregman_sensitivity_check(y: &[f64], y_prime: &[f64], s: f64) -> Result<ProjectionDistance> {
    if y_prime.len() != y.len() + 1 {
        return Err(Error::DimensionMismatch { expected: y.len() + 1, got: y_prime.len() });
    }
    if y_prime[..y.len()] != *y {
        return invalid("measures must agree on the shared coordinates");
    }
    let p = bregman_project(y, s)?;
    let q = bregman_project(y_prime, s)?;
    let shared = p.mass().iter().zip(q.mass()).map(|(a, b)| (a - b).abs()).sum();
    Ok(ProjectionDistance { shared, new_coordinate: q.mass()[y.len()] })
}
