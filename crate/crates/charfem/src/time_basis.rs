//! Lagrange time basis on the reference interval and the collocation
//! derivative matrix `B`.
//!
//! The solution on a time partition is represented in a Lagrange basis
//! `beta_0, ..., beta_p` with nodes `0 = zeta_0 < zeta_1 < ... < zeta_p <= 1`.
//! The basis nodes need not coincide with the collocation knots; the matrix
//! `B[j][k] = beta_k'(t_j)` (`j, k = 1..p`, `t_j` the collocation knots) is
//! invertible for any admissible node/knot configuration, which is what makes
//! the per-partition collocation system uniquely solvable.

use crate::error::{Error, Result};
use crate::linalg::{dense_norm_inf, DenseLu};
use crate::poly;
use crate::quadrature::ReferenceRule;

/// Lagrange basis of degree `p` on `[0, 1]` with first node pinned at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBasis {
    degree_p: usize,
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

/// How a run picks its time basis nodes for a given quadrature rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisPolicy {
    /// Nodes `{0} U knots`: solution values at collocation times are plain
    /// coefficient reads.
    Coincident,
    /// Equispaced nodes `{0, 1/p, ..., 1}`.
    Equispaced,
}

/// Build a basis from explicit nodes. The first node must be 0, nodes must
/// be strictly increasing, and the last must not exceed 1.
pub fn make_basis(nodes: &[f64]) -> Result<TimeBasis> {
    if nodes.len() < 2 {
        return Err(Error::InvalidNodes(format!(
            "need at least 2 nodes, got {}",
            nodes.len()
        )));
    }
    if nodes[0] != 0.0 {
        return Err(Error::InvalidNodes(format!(
            "first node must be 0, got {}",
            nodes[0]
        )));
    }
    for w in nodes.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidNodes(format!(
                "nodes must be strictly increasing, got {:?} before {:?}",
                w[0], w[1]
            )));
        }
    }
    let last = *nodes.last().unwrap();
    if last > 1.0 {
        return Err(Error::InvalidNodes(format!("last node {last} exceeds 1")));
    }
    Ok(TimeBasis {
        degree_p: nodes.len() - 1,
        bary: poly::bary_weights(nodes),
        nodes: nodes.to_vec(),
    })
}

impl TimeBasis {
    /// Nodes `{0} U knots` of the rule.
    pub fn coincident(rule: &ReferenceRule) -> Self {
        let mut nodes = Vec::with_capacity(rule.degree() + 1);
        nodes.push(0.0);
        nodes.extend_from_slice(rule.knots());
        make_basis(&nodes).expect("rule knots are strictly ordered in (0, 1]")
    }

    /// Equispaced nodes `0, 1/p, ..., 1`.
    pub fn equispaced(p: usize) -> Result<Self> {
        if p < 1 {
            return Err(Error::UnsupportedDegree(p, crate::quadrature::MAX_DEGREE));
        }
        let nodes: Vec<f64> = (0..=p).map(|k| k as f64 / p as f64).collect();
        make_basis(&nodes)
    }

    pub fn from_policy(policy: BasisPolicy, rule: &ReferenceRule) -> Self {
        match policy {
            BasisPolicy::Coincident => Self::coincident(rule),
            BasisPolicy::Equispaced => {
                Self::equispaced(rule.degree()).expect("rule degree is >= 1")
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree_p
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `beta_k(t)` with index checking.
    pub fn eval(&self, k: usize, t: f64) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.beta(k, t))
    }

    /// `beta_k'(t)` with index checking.
    pub fn eval_deriv(&self, k: usize, t: f64) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.beta_deriv(k, t))
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k > self.degree_p {
            return Err(Error::IndexOutOfRange {
                index: k,
                degree: self.degree_p,
            });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn beta(&self, k: usize, t: f64) -> f64 {
        poly::bary_eval(&self.nodes, &self.bary, k, t)
    }

    #[inline]
    pub(crate) fn beta_deriv(&self, k: usize, t: f64) -> f64 {
        poly::bary_eval_deriv(&self.nodes, &self.bary, k, t)
    }
}

/// The `p x p` matrix `B[j][k] = beta_k'(t_j)` over the collocation knots,
/// with its LU factorization kept for solves and diagnostics.
#[derive(Debug, Clone)]
pub struct DerivativeMatrix {
    p: usize,
    entries: Vec<f64>,
    lu: DenseLu,
    condition_estimate: f64,
}

/// Assemble and factor `B` for a basis/rule pair of matching degree.
pub fn derivative_matrix(basis: &TimeBasis, rule: &ReferenceRule) -> Result<DerivativeMatrix> {
    if basis.degree() != rule.degree() {
        return Err(Error::InvalidNodes(format!(
            "basis degree {} does not match rule degree {}",
            basis.degree(),
            rule.degree()
        )));
    }
    let p = basis.degree();
    let mut entries = vec![0.0; p * p];
    for (j, &t) in rule.knots().iter().enumerate() {
        for k in 1..=p {
            entries[j * p + (k - 1)] = basis.beta_deriv(k, t);
        }
    }
    let lu = DenseLu::factor(p, &entries)
        .map_err(|_| Error::SingularMatrix("derivative matrix B is singular".into()))?;
    let condition_estimate = dense_norm_inf(p, &entries) * dense_norm_inf(p, &lu.inverse());
    Ok(DerivativeMatrix {
        p,
        entries,
        lu,
        condition_estimate,
    })
}

impl DerivativeMatrix {
    pub fn size(&self) -> usize {
        self.p
    }

    /// Entry `B[j][k]` with `j, k` zero-based over `1..=p` in the math
    /// indexing (row `j` = knot `j+1`, column `k` = basis function `k+1`).
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.p + k]
    }

    pub fn det(&self) -> f64 {
        self.lu.det()
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.lu.solve(rhs)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.p);
        (0..self.p)
            .map(|j| (0..self.p).map(|k| self.entries[j * self.p + k] * x[k]).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_rule, radau_rule};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_basis() {
        let b = make_basis(&[0.0, 1.0]).unwrap();
        for &t in &[0.0, 0.25, 0.9, 1.0] {
            assert_abs_diff_eq!(b.eval(0, t).unwrap(), 1.0 - t, epsilon = 1e-15);
            assert_abs_diff_eq!(b.eval(1, t).unwrap(), t, epsilon = 1e-15);
            assert_abs_diff_eq!(b.eval_deriv(1, t).unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn quadratic_basis_hand_values() {
        // beta_1 on {0, 1/2, 1} is -4t^2 + 4t
        let b = make_basis(&[0.0, 0.5, 1.0]).unwrap();
        let t = (3.0 - 3f64.sqrt()) / 6.0;
        assert_abs_diff_eq!(
            b.eval_deriv(1, t).unwrap(),
            4.0 * 3f64.sqrt() / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(b.eval(2, 0.5).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lagrange_property_at_nodes() {
        let b = make_basis(&[0.0, 0.2, 0.55, 1.0]).unwrap();
        for k in 0..=3 {
            for (l, &z) in b.nodes().iter().enumerate() {
                let expect = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(b.eval(k, z).unwrap(), expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(make_basis(&[0.1, 1.0]).is_err());
        assert!(make_basis(&[0.0, 0.3, 0.3]).is_err());
        assert!(make_basis(&[0.0, 0.5, 0.4]).is_err());
        assert!(make_basis(&[0.0, 1.2]).is_err());
        assert!(make_basis(&[0.0]).is_err());
    }

    #[test]
    fn index_out_of_range() {
        let b = make_basis(&[0.0, 1.0]).unwrap();
        assert!(b.eval(2, 0.5).is_err());
        assert!(b.eval_deriv(5, 0.5).is_err());
    }

    #[test]
    fn derivative_matrix_p1() {
        let b = make_basis(&[0.0, 1.0]).unwrap();
        let gauss = derivative_matrix(&b, &gauss_rule(1).unwrap()).unwrap();
        assert_abs_diff_eq!(gauss.entry(0, 0), 1.0, epsilon = 1e-15);
        let radau = derivative_matrix(&b, &radau_rule(1).unwrap()).unwrap();
        assert_abs_diff_eq!(radau.entry(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_matrix_p2_gauss_hand_derived() {
        // quadratic Lagrange basis on {0, 1/2, 1}: beta_1' = -8t + 4,
        // beta_2' = 4t - 1, differentiated at the two Gauss knots
        let b = make_basis(&[0.0, 0.5, 1.0]).unwrap();
        let dm = derivative_matrix(&b, &gauss_rule(2).unwrap()).unwrap();
        let s = 3f64.sqrt();
        assert_abs_diff_eq!(dm.entry(0, 0), 4.0 * s / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.entry(0, 1), 1.0 - 2.0 * s / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.entry(1, 0), -4.0 * s / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.entry(1, 1), 1.0 + 2.0 * s / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dm.det(), 8.0 * s / 3.0, epsilon = 1e-12);
        assert!(dm.condition_estimate().is_finite());
    }

    #[test]
    fn degree_mismatch_rejected() {
        let b = make_basis(&[0.0, 1.0]).unwrap();
        assert!(derivative_matrix(&b, &gauss_rule(2).unwrap()).is_err());
    }

    #[test]
    fn row_sum_of_all_derivatives_vanishes() {
        // derivative of the partition of unity
        let b = make_basis(&[0.0, 0.17, 0.46, 0.81, 1.0]).unwrap();
        for &t in &[0.05, 0.3, 0.46, 0.99] {
            let s: f64 = (0..=4).map(|k| b.beta_deriv(k, t)).sum();
            assert_abs_diff_eq!(s, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_configurations_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for p in 1..=4 {
            for _ in 0..100 {
                // strictly increasing basis nodes with zeta_0 = 0
                let mut nodes = vec![0.0];
                let mut acc = 0.0;
                for _ in 0..p {
                    acc += rng.gen_range(0.05..1.0);
                    nodes.push(acc);
                }
                let top = *nodes.last().unwrap();
                for v in nodes.iter_mut().skip(1) {
                    *v /= top; // scale into (0, 1]
                }
                // strictly increasing collocation knots in (0, 1]
                let mut knots = Vec::with_capacity(p);
                let mut acc = 0.0;
                for _ in 0..p {
                    acc += rng.gen_range(0.05..1.0);
                    knots.push(acc);
                }
                let top = *knots.last().unwrap();
                for v in knots.iter_mut() {
                    *v /= top;
                }
                let basis = make_basis(&nodes).unwrap();
                let dm = build_from_knots(&basis, &knots);
                assert!(dm.det().abs() > 0.0);
                let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v = dm.solve(&w);
                let back = dm.mul_vec(&v);
                for j in 0..p {
                    assert_abs_diff_eq!(back[j], w[j], epsilon = 1e-10);
                }
            }
        }
    }

    // Assemble B for raw knots (bypassing rule construction) so the property
    // test can use arbitrary admissible knot sets.
    fn build_from_knots(basis: &TimeBasis, knots: &[f64]) -> DerivativeMatrix {
        let p = basis.degree();
        let mut entries = vec![0.0; p * p];
        for (j, &t) in knots.iter().enumerate() {
            for k in 1..=p {
                entries[j * p + (k - 1)] = basis.beta_deriv(k, t);
            }
        }
        let lu = DenseLu::factor(p, &entries).unwrap();
        let cond = dense_norm_inf(p, &entries) * dense_norm_inf(p, &lu.inverse());
        DerivativeMatrix {
            p,
            entries,
            lu,
            condition_estimate: cond,
        }
    }
}
