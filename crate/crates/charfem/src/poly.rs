//! Polynomial primitives shared by the quadrature and basis modules:
//! Legendre recurrences, bracketed root finding, and barycentric Lagrange
//! evaluation.

/// Legendre polynomial `P_n` and derivative `P_n'` at `x` in `[-1, 1]`.
pub(crate) fn legendre(n: usize, x: f64) -> (f64, f64) {
    match n {
        0 => (1.0, 0.0),
        1 => (x, 1.0),
        _ => {
            let mut p0 = 1.0;
            let mut p1 = x;
            let mut d0 = 0.0;
            let mut d1 = 1.0;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                let d2 = ((2.0 * kf - 1.0) * (p1 + x * d1) - (kf - 1.0) * d0) / kf;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            (p1, d1)
        }
    }
}

/// Second derivative of `P_n` at `x`, `|x| < 1`, from the Legendre ODE
/// `(1 - x^2) P'' - 2 x P' + n(n+1) P = 0`.
pub(crate) fn legendre_second(n: usize, x: f64) -> f64 {
    let (p, dp) = legendre(n, x);
    (2.0 * x * dp - (n * (n + 1)) as f64 * p) / (1.0 - x * x)
}

/// Shifted Legendre polynomial on `[0, 1]`: value and derivative of
/// `P_n(2t - 1)`.
pub(crate) fn shifted_legendre(n: usize, t: f64) -> (f64, f64) {
    let (p, dp) = legendre(n, 2.0 * t - 1.0);
    (p, 2.0 * dp)
}

/// Gauss-Legendre knots and weights on `[0, 1]`, ascending; weights sum to 1.
pub(crate) fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut knots = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess, refined by Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // cos descends with i; store ascending.
        knots[n - 1 - i] = 0.5 * (1.0 + z);
        weights[n - 1 - i] = 0.5 * w;
    }
    (knots, weights)
}

/// Gauss-Lobatto nodes of degree `p` on `[0, 1]`: the endpoints plus the
/// roots of `P_p'`, ascending. Returns `p + 1` nodes.
pub(crate) fn gauss_lobatto_unit(p: usize) -> Vec<f64> {
    assert!(p >= 1);
    let mut nodes = Vec::with_capacity(p + 1);
    nodes.push(0.0);
    if p >= 2 {
        // Roots of P_p' interlace the Gauss knots of P_p.
        let (gauss, _) = gauss_legendre_unit(p);
        for i in 0..p - 1 {
            let lo = 2.0 * gauss[i] - 1.0;
            let hi = 2.0 * gauss[i + 1] - 1.0;
            let z = find_root_bracketed(
                |x| {
                    let (_, dp) = legendre(p, x);
                    (dp, legendre_second(p, x))
                },
                lo,
                hi,
            );
            nodes.push(0.5 * (1.0 + z));
        }
    }
    nodes.push(1.0);
    nodes
}

/// Root of `f` in `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
/// Bisection with Newton polish; `f` returns `(value, derivative)`.
pub(crate) fn find_root_bracketed<F: Fn(f64) -> (f64, f64)>(f: F, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    debug_assert!(
        fa == 0.0 || fb == 0.0 || (fa < 0.0) != (fb < 0.0),
        "root not bracketed"
    );
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let neg_at_a = fa < 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let (fm, _) = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == neg_at_a {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    let mut z = 0.5 * (a + b);
    for _ in 0..4 {
        let (v, d) = f(z);
        if d == 0.0 {
            break;
        }
        let step = v / d;
        let next = z - step;
        if next < lo || next > hi {
            break;
        }
        z = next;
        if step.abs() < 1e-16 * (1.0 + z.abs()) {
            break;
        }
    }
    z
}

/// Barycentric weights for Lagrange interpolation on distinct `nodes`.
pub(crate) fn bary_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if k != j {
                w[j] /= nodes[j] - nodes[k];
            }
        }
    }
    w
}

/// Points closer to a node than this (relative to the node span) take the
/// exact-node branch. The generic derivative formula amplifies rounding by
/// `1/distance` near a node, so snapping is required for stability there;
/// the snap itself perturbs the evaluation point by at most `SNAP_TOL`.
const SNAP_TOL: f64 = 1e-12;

fn nearest_node(nodes: &[f64], x: f64) -> Option<usize> {
    let span = nodes[nodes.len() - 1] - nodes[0];
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (j, &n) in nodes.iter().enumerate() {
        let d = (x - n).abs();
        if d < dist {
            dist = d;
            best = j;
        }
    }
    (dist <= SNAP_TOL * span).then_some(best)
}

/// Value of the `k`-th Lagrange cardinal polynomial at `x`.
pub(crate) fn bary_eval(nodes: &[f64], weights: &[f64], k: usize, x: f64) -> f64 {
    if let Some(j) = nearest_node(nodes, x) {
        return if j == k { 1.0 } else { 0.0 };
    }
    let uk = weights[k] / (x - nodes[k]);
    let s: f64 = nodes
        .iter()
        .zip(weights)
        .map(|(&n, &w)| w / (x - n))
        .sum();
    uk / s
}

/// Derivative of the `k`-th Lagrange cardinal polynomial at `x`.
pub(crate) fn bary_eval_deriv(nodes: &[f64], weights: &[f64], k: usize, x: f64) -> f64 {
    if let Some(j) = nearest_node(nodes, x) {
        // Differentiation-matrix entries at a node.
        return if k == j {
            -(0..nodes.len())
                .filter(|&m| m != j)
                .map(|m| (weights[m] / weights[j]) / (nodes[j] - nodes[m]))
                .sum::<f64>()
        } else {
            (weights[k] / weights[j]) / (nodes[j] - nodes[k])
        };
    }
    let mut s = 0.0;
    let mut sp = 0.0;
    for (&n, &w) in nodes.iter().zip(weights) {
        let d = x - n;
        s += w / d;
        sp += -w / (d * d);
    }
    let uk = weights[k] / (x - nodes[k]);
    let ukp = -weights[k] / ((x - nodes[k]) * (x - nodes[k]));
    (ukp - (uk / s) * sp) / s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_known_values() {
        assert_abs_diff_eq!(legendre(2, 0.5).0, -0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(legendre(2, 0.5).1, 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(legendre(3, -1.0).0, -1.0, epsilon = 1e-15);
        for n in 0..9 {
            assert_abs_diff_eq!(legendre(n, 1.0).0, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gauss_unit_two_points() {
        let (k, w) = gauss_legendre_unit(2);
        let s3 = 3f64.sqrt();
        assert_abs_diff_eq!(k[0], (3.0 - s3) / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k[1], (3.0 + s3) / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gauss_unit_exactness() {
        for n in 1..=8 {
            let (k, w) = gauss_legendre_unit(n);
            for deg in 0..=(2 * n - 1) {
                let q: f64 = k.iter().zip(&w).map(|(&x, &wi)| wi * x.powi(deg as i32)).sum();
                assert_abs_diff_eq!(q, 1.0 / (deg as f64 + 1.0), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn lobatto_nodes_match_closed_forms() {
        assert_eq!(gauss_lobatto_unit(1), vec![0.0, 1.0]);
        let p2 = gauss_lobatto_unit(2);
        assert_abs_diff_eq!(p2[1], 0.5, epsilon = 1e-14);
        let p3 = gauss_lobatto_unit(3);
        let r = 1.0 / 5f64.sqrt();
        assert_abs_diff_eq!(p3[1], 0.5 * (1.0 - r), epsilon = 1e-13);
        assert_abs_diff_eq!(p3[2], 0.5 * (1.0 + r), epsilon = 1e-13);
    }

    #[test]
    fn barycentric_lagrange_property() {
        let nodes = [0.0, 0.3, 0.7, 1.0];
        let w = bary_weights(&nodes);
        for k in 0..4 {
            for j in 0..4 {
                let expect = if k == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(bary_eval(&nodes, &w, k, nodes[j]), expect, epsilon = 1e-14);
            }
        }
        // partition of unity off the nodes
        let sum: f64 = (0..4).map(|k| bary_eval(&nodes, &w, k, 0.456)).sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn derivative_stable_a_few_ulps_off_a_node() {
        // the generic formula amplifies rounding by 1/distance; these points
        // must take the snapped branch
        let nodes = [0.0, 0.2113248654051871, 0.7886751345948129, 1.0];
        let w = bary_weights(&nodes);
        for &base in &nodes[1..3] {
            let x = f64::from_bits(base.to_bits() + 3);
            let row_sum: f64 = (0..4).map(|k| bary_eval_deriv(&nodes, &w, k, x)).sum();
            assert_abs_diff_eq!(row_sum, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn barycentric_derivative_quadratic() {
        // nodes {0, 1/2, 1}: middle cardinal is -4t^2 + 4t, derivative -8t + 4
        let nodes = [0.0, 0.5, 1.0];
        let w = bary_weights(&nodes);
        for &t in &[0.0, 0.21, 0.5, 0.83, 1.0] {
            assert_abs_diff_eq!(
                bary_eval_deriv(&nodes, &w, 1, t),
                -8.0 * t + 4.0,
                epsilon = 1e-12
            );
        }
    }
}
