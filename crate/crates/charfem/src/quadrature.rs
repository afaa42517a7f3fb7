//! Interpolatory time quadrature rules on the reference interval `[0, 1]`.
//!
//! The collocation method needs a `p`-point rule of order at least `2p - 1`
//! with positive weights and knots in `(0, 1]`. The implemented family has
//! knots at the roots of `P_p + gamma * P_{p-1}` (shifted Legendre), with
//! `gamma = 0` giving the Gauss rule (order `2p`) and `gamma = -1` the
//! right-Radau rule (order `2p - 1`, rightmost knot at 1). Every rule `Q`
//! satisfies, for polynomials `v` of degree `2p - 1`,
//!
//! ```text
//!     int_0^1 v dt = Q(v) - c_p * v^(2p-1),
//! ```
//!
//! with `c_p >= 0` (zero exactly for Gauss).

use crate::error::{Error, Result};
use crate::poly;

/// Largest supported rule size. Interpolatory weight solves degrade beyond
/// this; desk-scale studies use `p <= 4`.
pub const MAX_DEGREE: usize = 8;

/// Tolerance for exactness checks and for clamping `c_p` to zero.
pub const CP_TOL: f64 = 1e-12;

/// A `p`-point interpolatory quadrature rule on `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRule {
    degree_p: usize,
    knots: Vec<f64>,
    weights: Vec<f64>,
    c_p: f64,
    family_parameter: f64,
}

impl ReferenceRule {
    pub fn degree(&self) -> usize {
        self.degree_p
    }

    /// Knots, strictly increasing in `(0, 1]`.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Weights, all positive, summing to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Error constant of the defect identity; 0 for Gauss, positive otherwise.
    pub fn c_p(&self) -> f64 {
        self.c_p
    }

    /// Family parameter `gamma` of the knot polynomial `P_p + gamma P_{p-1}`:
    /// 0 for Gauss, -1 for right-Radau.
    pub fn family_parameter(&self) -> f64 {
        self.family_parameter
    }

    /// Weighted sum `sum_j w_j * samples[j]`, the reference-interval mean of
    /// the integrand sampled at the knots. Callers scale by the partition
    /// length for time integrals.
    pub fn apply(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.degree_p {
            return Err(Error::SampleCountMismatch {
                expected: self.degree_p,
                got: samples.len(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(samples)
            .map(|(&w, &s)| w * s)
            .sum())
    }

    /// Apply to an integrand given as a function of the reference time.
    pub fn apply_fn<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.knots
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    fn validate(&self) -> Result<()> {
        let p = self.degree_p;
        if self.knots.len() != p || self.weights.len() != p {
            return Err(Error::InvalidRule("knot/weight count mismatch".into()));
        }
        let mut prev = 0.0;
        for &t in &self.knots {
            if t <= prev || t > 1.0 {
                return Err(Error::InvalidRule(format!(
                    "knots must satisfy 0 < t_1 < ... < t_p <= 1, got {:?}",
                    self.knots
                )));
            }
            prev = t;
        }
        for &w in &self.weights {
            if w <= 0.0 {
                return Err(Error::InvalidRule(format!(
                    "nonpositive weight {w:e} (family parameter outside valid range)"
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for ReferenceRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "p = {}  gamma = {:+.3}  c_p = {:.6e}",
            self.degree_p, self.family_parameter, self.c_p
        )?;
        writeln!(f, "{:>4} {:>22} {:>22}", "j", "knot", "weight")?;
        for (j, (t, w)) in self.knots.iter().zip(&self.weights).enumerate() {
            writeln!(f, "{:>4} {:>22.16} {:>22.16}", j + 1, t, w)?;
        }
        Ok(())
    }
}

fn check_degree(p: usize) -> Result<()> {
    if p < 1 || p > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(p, MAX_DEGREE));
    }
    Ok(())
}

/// `p`-point Gauss-Legendre rule on `[0, 1]`; order `2p`, so `c_p = 0`.
pub fn gauss_rule(p: usize) -> Result<ReferenceRule> {
    check_degree(p)?;
    let (knots, weights) = poly::gauss_legendre_unit(p);
    let rule = ReferenceRule {
        degree_p: p,
        knots,
        weights,
        c_p: 0.0,
        family_parameter: 0.0,
    };
    rule.validate()?;
    Ok(rule)
}

/// `p`-point right-Radau rule on `(0, 1]`: rightmost knot exactly 1.
pub fn radau_rule(p: usize) -> Result<ReferenceRule> {
    check_degree(p)?;
    let knots = radau_knots(p);
    let weights = interpolatory_weights(&knots);
    let mut rule = ReferenceRule {
        degree_p: p,
        knots,
        weights,
        c_p: 0.0,
        family_parameter: -1.0,
    };
    rule.validate()?;
    rule.c_p = compute_cp(&rule)?;
    Ok(rule)
}

/// Member `s` of the family interpolating between Gauss (`s = 0`) and
/// right-Radau (`s = 1`): knots are the roots of `P_p - s * P_{p-1}` in
/// shifted form. Fails if the computed rule leaves the admissible set
/// (nonpositive weight, knots outside `(0, 1]`, or negative `c_p`).
pub fn theta_rule(p: usize, s: f64) -> Result<ReferenceRule> {
    check_degree(p)?;
    if !(0.0..=1.0).contains(&s) || !s.is_finite() {
        return Err(Error::FamilyParameterOutOfRange(s));
    }
    if s == 0.0 {
        return gauss_rule(p);
    }
    if s == 1.0 {
        return radau_rule(p);
    }
    let gamma = -s;
    let (gauss, _) = poly::gauss_legendre_unit(p);
    let radau = radau_knots(p);
    let q = |t: f64| {
        let (pp, dpp) = poly::shifted_legendre(p, t);
        let (pm, dpm) = poly::shifted_legendre(p - 1, t);
        (pp + gamma * pm, dpp + gamma * dpm)
    };
    // Root j moves from the Gauss knot to the Radau knot as s goes 0 -> 1
    // without crossing a root of P_{p-1}, so [gauss_j, radau_j] brackets it.
    let knots: Vec<f64> = (0..p)
        .map(|j| poly::find_root_bracketed(q, gauss[j], radau[j]))
        .collect();
    let weights = interpolatory_weights(&knots);
    let mut rule = ReferenceRule {
        degree_p: p,
        knots,
        weights,
        c_p: 0.0,
        family_parameter: gamma,
    };
    rule.validate()?;
    rule.c_p = compute_cp(&rule)?;
    Ok(rule)
}

/// Error constant from the defect identity applied to `t^(2p-1)`:
/// `(Q(t^(2p-1)) - 1/(2p)) / (2p-1)!`. Verifies exactness to degree
/// `2p - 2` first and clamps results within `CP_TOL` of zero.
pub fn compute_cp(rule: &ReferenceRule) -> Result<f64> {
    let p = rule.degree_p;
    for k in 0..=(2 * p).saturating_sub(2) {
        let q = rule.apply_fn(|t| t.powi(k as i32));
        let defect = (q - 1.0 / (k as f64 + 1.0)).abs();
        if defect > CP_TOL {
            return Err(Error::InexactRule { degree: k, defect });
        }
    }
    let q = rule.apply_fn(|t| t.powi(2 * p as i32 - 1));
    let fact: f64 = (1..=(2 * p - 1)).map(|k| k as f64).product();
    let raw = (q - 1.0 / (2.0 * p as f64)) / fact;
    if raw < -CP_TOL {
        return Err(Error::InvalidRule(format!(
            "negative error constant {raw:e}"
        )));
    }
    Ok(if raw.abs() <= CP_TOL { 0.0 } else { raw })
}

/// Right-Radau knots: roots of `P_p - P_{p-1}` (shifted), last knot exactly 1.
fn radau_knots(p: usize) -> Vec<f64> {
    let mut knots = Vec::with_capacity(p);
    if p >= 2 {
        let (gauss, _) = poly::gauss_legendre_unit(p);
        let q = |t: f64| {
            let (pp, dpp) = poly::shifted_legendre(p, t);
            let (pm, dpm) = poly::shifted_legendre(p - 1, t);
            (pp - pm, dpp - dpm)
        };
        // Interior Radau knots interlace the Gauss knots.
        for j in 0..p - 1 {
            knots.push(poly::find_root_bracketed(&q, gauss[j], gauss[j + 1]));
        }
    }
    knots.push(1.0);
    knots
}

/// Interpolatory weights `w_j = int_0^1 l_j(t) dt` for the Lagrange cardinal
/// polynomials on `knots`, integrated with a Gauss rule of sufficient order.
fn interpolatory_weights(knots: &[f64]) -> Vec<f64> {
    let p = knots.len();
    let bw = poly::bary_weights(knots);
    let (gk, gw) = poly::gauss_legendre_unit(p.max(2));
    (0..p)
        .map(|j| {
            gk.iter()
                .zip(&gw)
                .map(|(&x, &w)| w * poly::bary_eval(knots, &bw, j, x))
                .sum()
        })
        .collect()
}
