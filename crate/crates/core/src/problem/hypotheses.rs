//! Sampled checks of the structural hypotheses. Violations are warnings:
//! Test II deliberately runs outside the global slope bound on `beta`.

use super::ProblemSpec;
use crate::geometry::{asymmetry, eigenvalues};

/// Value grid on which `beta` and `F` are sampled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SampleRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        SampleRange { lo, hi, points: 1001 }
    }

    fn values(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HypothesisReport {
    /// Smallest difference quotient of `beta` over neighbouring samples.
    pub beta_min_slope: f64,
    pub beta_increasing: bool,
    pub beta_zero: f64,
    pub reaction_zero: f64,
    /// Smallest `(F(u) - F(v)) / (u - v)` over neighbouring samples.
    pub reaction_min_slope: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_asymmetry: f64,
    pub warnings: Vec<String>,
}

impl HypothesisReport {
    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

pub fn check_hypotheses(spec: &ProblemSpec, range: SampleRange) -> HypothesisReport {
    let d = spec.declared;
    let us = range.values();
    let mut r = HypothesisReport {
        beta_min_slope: f64::INFINITY,
        beta_increasing: true,
        beta_zero: spec.beta.value(0.0),
        reaction_zero: spec.reaction.value(0.0),
        reaction_min_slope: f64::INFINITY,
        lambda_min: f64::INFINITY,
        lambda_max: f64::NEG_INFINITY,
        ..Default::default()
    };
    for w in us.windows(2) {
        let du = w[1] - w[0];
        let sb = (spec.beta.value(w[1]) - spec.beta.value(w[0])) / du;
        let sf = (spec.reaction.value(w[1]) - spec.reaction.value(w[0])) / du;
        r.beta_increasing &= sb > 0.0;
        r.beta_min_slope = r.beta_min_slope.min(sb);
        r.reaction_min_slope = r.reaction_min_slope.min(sf);
    }
    if r.beta_zero != 0.0 {
        r.warnings.push(format!("beta(0) = {} is not zero", r.beta_zero));
    }
    if !r.beta_increasing {
        r.warnings.push("beta is not strictly increasing on the sample grid".into());
    }
    // sampling tolerance for slopes of functions with a secant minimum at the interval end
    let tol = 1e-9;
    if r.beta_min_slope < d.beta_lower * (1.0 - tol) {
        r.warnings.push(format!(
            "declared lower slope of beta {} exceeds the sampled minimum {} on [{}, {}]",
            d.beta_lower, r.beta_min_slope, range.lo, range.hi
        ));
    }
    if !spec.beta.globally_coercive() {
        r.warnings.push(format!(
            "beta = {} has no positive lower slope on all of R; the bound {} holds on the sampled range only",
            spec.beta.name(),
            d.beta_lower
        ));
    }
    if r.reaction_zero != 0.0 {
        r.warnings.push(format!("F(0) = {} is not zero", r.reaction_zero));
    }
    if r.reaction_min_slope < -d.reaction_lower * (1.0 + tol) - tol {
        r.warnings.push(format!(
            "F decreases faster than the declared bound {}: sampled slope {}",
            d.reaction_lower, r.reaction_min_slope
        ));
    }
    for (i, reg) in spec.regions.iter().enumerate() {
        let a = asymmetry(&reg.diffusion, spec.dim());
        r.max_asymmetry = r.max_asymmetry.max(a);
        if a > 1e-12 {
            r.warnings.push(format!("diffusion of region {i} is not symmetric"));
        }
        let ev = eigenvalues(&reg.diffusion, spec.dim());
        r.lambda_min = r.lambda_min.min(ev[0]);
        r.lambda_max = r.lambda_max.max(ev[spec.dim() - 1]);
    }
    if r.lambda_min <= 0.0 {
        r.warnings.push(format!("diffusion is not uniformly positive: smallest eigenvalue {}", r.lambda_min));
    }
    let scale = d.lambda_upper.abs().max(1.0) * 1e-12;
    if r.lambda_min < d.lambda_lower - scale || r.lambda_max > d.lambda_upper + scale {
        r.warnings.push(format!(
            "eigenvalues [{}, {}] leave the declared interval [{}, {}]",
            r.lambda_min, r.lambda_max, d.lambda_lower, d.lambda_upper
        ));
    }
    if let (Some(s), [left, right]) = (spec.split, spec.regions.as_slice()) {
        // div V >= 0 across the interface needs a nondecreasing normal component
        let jump = right.velocity[s.axis] - left.velocity[s.axis];
        if jump < 0.0 {
            r.warnings.push(format!("normal velocity drops by {} across the region interface", -jump));
        }
    }
    r
}
