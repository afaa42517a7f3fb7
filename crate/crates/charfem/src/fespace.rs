//! Slice finite element spaces and assembly.
//!
//! `SliceSpace` is the continuous piecewise-`P_p` space on one mesh slice,
//! with element dofs at Gauss-Lobatto points so interface dofs are shared:
//! `N = n p + 1` dofs for `n` elements. Assembly is element-local Gauss
//! quadrature with `p + 2` points (exact for polynomial integrands up to
//! degree `2p + 3`; variable coefficients incur the usual committed
//! consistency error).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{BandCholesky, BandMatrix};
use crate::mesh::{locate_element, MeshSlice};
use crate::poly;

/// Coefficient or data function of `(x, t)`.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Function of `x` alone (initial data).
pub type SpatialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed-form solution bundle for error studies.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub u_t: ScalarFn,
    pub u_x: ScalarFn,
}

/// Coefficients and data of the convection-diffusion problem
/// `u_t - (a u_x)_x + b u_x + c u = f` with Neumann data `a u_x . n = g`.
///
/// `g` is evaluated only at the two boundary points. `a_lower` and `c_lower`
/// are the assumed uniform bounds `a >= a_lower > 0`, `c >= c_lower >= 0`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub a: ScalarFn,
    pub b: ScalarFn,
    pub c: ScalarFn,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub u0: SpatialFn,
    pub a_lower: f64,
    pub c_lower: f64,
    pub exact: Option<ExactSolution>,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: ScalarFn,
        b: ScalarFn,
        c: ScalarFn,
        f: ScalarFn,
        g: ScalarFn,
        u0: SpatialFn,
        a_lower: f64,
        c_lower: f64,
    ) -> Result<Self> {
        if !(a_lower > 0.0) || !a_lower.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "diffusion lower bound must be positive, got {a_lower}"
            )));
        }
        if c_lower < 0.0 || !c_lower.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "reaction lower bound must be nonnegative, got {c_lower}"
            )));
        }
        Ok(ProblemSpec {
            a,
            b,
            c,
            f,
            g,
            u0,
            a_lower,
            c_lower,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn exact(&self) -> Result<&ExactSolution> {
        self.exact.as_ref().ok_or(Error::MissingExactSolution)
    }

    /// Check `a >= a_lower` and `c >= c_lower` on a sample grid.
    pub fn check_bounds(
        &self,
        x_min: f64,
        x_max: f64,
        t_final: f64,
        samples: usize,
    ) -> Result<()> {
        for i in 0..=samples {
            let x = x_min + (x_max - x_min) * i as f64 / samples as f64;
            for j in 0..=samples {
                let t = t_final * j as f64 / samples as f64;
                let av = (self.a)(x, t);
                if av < self.a_lower {
                    return Err(Error::InvalidProblem(format!(
                        "a({x}, {t}) = {av} below declared lower bound {}",
                        self.a_lower
                    )));
                }
                let cv = (self.c)(x, t);
                if cv < self.c_lower {
                    return Err(Error::InvalidProblem(format!(
                        "c({x}, {t}) = {cv} below declared lower bound {}",
                        self.c_lower
                    )));
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("a_lower", &self.a_lower)
            .field("c_lower", &self.c_lower)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

/// Continuous piecewise-`P_p` space on a mesh slice.
#[derive(Debug, Clone)]
pub struct SliceSpace {
    mesh: MeshSlice,
    degree_p: usize,
    ref_nodes: Vec<f64>,
    ref_bary: Vec<f64>,
    dof_coords: Vec<f64>,
}

impl SliceSpace {
    pub fn new(mesh: MeshSlice, degree_p: usize) -> Result<Self> {
        if degree_p < 1 || degree_p > crate::quadrature::MAX_DEGREE {
            return Err(Error::UnsupportedDegree(
                degree_p,
                crate::quadrature::MAX_DEGREE,
            ));
        }
        let ref_nodes = poly::gauss_lobatto_unit(degree_p);
        let ref_bary = poly::bary_weights(&ref_nodes);
        let n = mesh.n_elements();
        let mut dof_coords = Vec::with_capacity(n * degree_p + 1);
        for k in 0..n {
            let xl = mesh.nodes()[k];
            let h = mesh.nodes()[k + 1] - xl;
            let start = if k == 0 { 0 } else { 1 };
            for &z in &ref_nodes[start..] {
                dof_coords.push(xl + z * h);
            }
        }
        Ok(SliceSpace {
            mesh,
            degree_p,
            ref_nodes,
            ref_bary,
            dof_coords,
        })
    }

    pub fn mesh(&self) -> &MeshSlice {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree_p
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    /// Dof coordinates (element-local Gauss-Lobatto nodes, shared at
    /// interfaces), ascending.
    pub fn dof_coords(&self) -> &[f64] {
        &self.dof_coords
    }

    /// Global dof index of local dof `i` on element `k`.
    #[inline]
    pub fn global_dof(&self, k: usize, i_local: usize) -> usize {
        k * self.degree_p + i_local
    }

    /// Local shape function value at reference coordinate `x_hat`.
    #[inline]
    pub fn shape(&self, i_local: usize, x_hat: f64) -> f64 {
        poly::bary_eval(&self.ref_nodes, &self.ref_bary, i_local, x_hat)
    }

    /// Local shape function derivative with respect to `x_hat`.
    #[inline]
    pub fn shape_deriv(&self, i_local: usize, x_hat: f64) -> f64 {
        poly::bary_eval_deriv(&self.ref_nodes, &self.ref_bary, i_local, x_hat)
    }

    /// True when `other` has the same dof layout (same element count and
    /// degree), which is what the shift operation requires.
    pub fn same_topology(&self, other: &SliceSpace) -> bool {
        self.degree_p == other.degree_p && self.n_elements() == other.n_elements()
    }
}

/// A finite element function: coefficients over a slice space.
#[derive(Debug, Clone)]
pub struct Field {
    space: Arc<SliceSpace>,
    coeffs: Vec<f64>,
}

impl Field {
    pub fn new(space: Arc<SliceSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::FieldSizeMismatch {
                expected: space.n_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(Field { space, coeffs })
    }

    pub fn zeros(space: Arc<SliceSpace>) -> Self {
        let n = space.n_dofs();
        Field {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &Arc<SliceSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let k = locate_element(self.space.mesh.nodes(), x)?;
        Ok(self.eval_on_element(k, self.local_coord(k, x)))
    }

    pub fn evaluate_deriv(&self, x: f64) -> Result<f64> {
        let k = locate_element(self.space.mesh.nodes(), x)?;
        Ok(self.eval_deriv_on_element(k, self.local_coord(k, x)))
    }

    #[inline]
    fn local_coord(&self, k: usize, x: f64) -> f64 {
        let nodes = self.space.mesh.nodes();
        (x - nodes[k]) / (nodes[k + 1] - nodes[k])
    }

    pub(crate) fn eval_on_element(&self, k: usize, x_hat: f64) -> f64 {
        let p = self.space.degree_p;
        (0..=p)
            .map(|i| self.coeffs[self.space.global_dof(k, i)] * self.space.shape(i, x_hat))
            .sum()
    }

    pub(crate) fn eval_deriv_on_element(&self, k: usize, x_hat: f64) -> f64 {
        let p = self.space.degree_p;
        let nodes = self.space.mesh.nodes();
        let h = nodes[k + 1] - nodes[k];
        (0..=p)
            .map(|i| {
                self.coeffs[self.space.global_dof(k, i)] * self.space.shape_deriv(i, x_hat)
            })
            .sum::<f64>()
            / h
    }

    /// `(x, value)` sample table with `samples + 1` equispaced points.
    pub fn sample_table(&self, samples: usize) -> Vec<(f64, f64)> {
        let mesh = self.space.mesh();
        (0..=samples)
            .map(|i| {
                let x = mesh.x_min()
                    + (mesh.x_max() - mesh.x_min()) * i as f64 / samples as f64;
                (x, self.evaluate(x).unwrap())
            })
            .collect()
    }
}

/// Gauss points used for assembly on each element: `p + 2`.
fn assembly_quadrature(p: usize) -> (Vec<f64>, Vec<f64>) {
    poly::gauss_legendre_unit(p + 2)
}

/// Mass matrix `M[i][j] = <phi_j, phi_i>`, bandwidth `p`.
pub fn mass_matrix(space: &SliceSpace) -> BandMatrix {
    let p = space.degree();
    let (qx, qw) = assembly_quadrature(p);
    let mut m = BandMatrix::zeros(space.n_dofs(), p, p);
    let nodes = space.mesh().nodes();
    for k in 0..space.n_elements() {
        let h = nodes[k + 1] - nodes[k];
        for (&xq, &wq) in qx.iter().zip(&qw) {
            let scale = wq * h;
            let shapes: Vec<f64> = (0..=p).map(|i| space.shape(i, xq)).collect();
            for i in 0..=p {
                let gi = space.global_dof(k, i);
                for j in 0..=p {
                    m.add(gi, space.global_dof(k, j), scale * shapes[i] * shapes[j]);
                }
            }
        }
    }
    m
}

/// H1 Gram matrix `<phi_j, phi_i> + <phi_j', phi_i'>`, bandwidth `p`.
pub fn h1_gram(space: &SliceSpace) -> BandMatrix {
    let p = space.degree();
    let (qx, qw) = assembly_quadrature(p);
    let mut m = BandMatrix::zeros(space.n_dofs(), p, p);
    let nodes = space.mesh().nodes();
    for k in 0..space.n_elements() {
        let h = nodes[k + 1] - nodes[k];
        for (&xq, &wq) in qx.iter().zip(&qw) {
            let scale = wq * h;
            let shapes: Vec<f64> = (0..=p).map(|i| space.shape(i, xq)).collect();
            let derivs: Vec<f64> = (0..=p).map(|i| space.shape_deriv(i, xq) / h).collect();
            for i in 0..=p {
                let gi = space.global_dof(k, i);
                for j in 0..=p {
                    m.add(
                        gi,
                        space.global_dof(k, j),
                        scale * (shapes[i] * shapes[j] + derivs[i] * derivs[j]),
                    );
                }
            }
        }
    }
    m
}

/// The characteristic bilinear form at time `t`:
/// `A[i][j] = <a phi_j', phi_i'> + <(b - x_t) phi_j', phi_i> + <c phi_j, phi_i>`.
/// `x_t` is the mesh velocity as a function of `(element, x_hat)`.
pub fn bilinear_matrix<XT: Fn(usize, f64) -> f64>(
    space: &SliceSpace,
    t: f64,
    problem: &ProblemSpec,
    x_t: XT,
) -> BandMatrix {
    let p = space.degree();
    let (qx, qw) = assembly_quadrature(p);
    let mut m = BandMatrix::zeros(space.n_dofs(), p, p);
    let nodes = space.mesh().nodes();
    for k in 0..space.n_elements() {
        let xl = nodes[k];
        let h = nodes[k + 1] - xl;
        for (&xq, &wq) in qx.iter().zip(&qw) {
            let x = xl + xq * h;
            let scale = wq * h;
            let a_val = (problem.a)(x, t);
            let conv = (problem.b)(x, t) - x_t(k, xq);
            let c_val = (problem.c)(x, t);
            let shapes: Vec<f64> = (0..=p).map(|i| space.shape(i, xq)).collect();
            let derivs: Vec<f64> = (0..=p).map(|i| space.shape_deriv(i, xq) / h).collect();
            for i in 0..=p {
                let gi = space.global_dof(k, i);
                for j in 0..=p {
                    m.add(
                        gi,
                        space.global_dof(k, j),
                        scale
                            * (a_val * derivs[i] * derivs[j]
                                + conv * derivs[j] * shapes[i]
                                + c_val * shapes[i] * shapes[j]),
                    );
                }
            }
        }
    }
    m
}

/// Load vector `F[i] = <f(., t), phi_i>` plus the Neumann boundary terms
/// `g(x_min, t) phi_i(x_min) + g(x_max, t) phi_i(x_max)`.
pub fn load_vector(space: &SliceSpace, t: f64, problem: &ProblemSpec) -> Vec<f64> {
    let p = space.degree();
    let (qx, qw) = assembly_quadrature(p);
    let mut rhs = vec![0.0; space.n_dofs()];
    let nodes = space.mesh().nodes();
    for k in 0..space.n_elements() {
        let xl = nodes[k];
        let h = nodes[k + 1] - xl;
        for (&xq, &wq) in qx.iter().zip(&qw) {
            let x = xl + xq * h;
            let fv = (problem.f)(x, t) * wq * h;
            for i in 0..=p {
                rhs[space.global_dof(k, i)] += fv * space.shape(i, xq);
            }
        }
    }
    // only the endpoint dofs see the boundary basis values
    rhs[0] += (problem.g)(space.mesh().x_min(), t);
    let n = space.n_dofs();
    rhs[n - 1] += (problem.g)(space.mesh().x_max(), t);
    rhs
}

/// L2 projection of a plain function onto `target`.
pub fn l2_project(f: impl Fn(f64) -> f64, target: &Arc<SliceSpace>) -> Result<Field> {
    let moments = moments_of_fn(&f, target, 1);
    solve_mass(target, moments)
}

/// L2 projection of a field (possibly on a different mesh) onto `target`.
/// Cross-mesh products are integrated on the union of the two breakpoint
/// sets so piecewise-polynomial sources are handled exactly.
pub fn l2_project_field(source: &Field, target: &Arc<SliceSpace>) -> Result<Field> {
    let moments = cross_moments(source, target);
    solve_mass(target, moments)
}

fn solve_mass(target: &Arc<SliceSpace>, moments: Vec<f64>) -> Result<Field> {
    let mass = mass_matrix(target);
    let chol = BandCholesky::factor(&mass)
        .map_err(|e| Error::SingularMatrix(format!("mass matrix not SPD: {e}")))?;
    Field::new(Arc::clone(target), chol.solve(&moments))
}

/// Moments `<f, phi_i>` with `extra` additional quadrature points.
pub fn moments_of_fn(
    f: &impl Fn(f64) -> f64,
    space: &SliceSpace,
    extra: usize,
) -> Vec<f64> {
    let p = space.degree();
    let (qx, qw) = poly::gauss_legendre_unit(p + 1 + extra);
    let mut moments = vec![0.0; space.n_dofs()];
    let nodes = space.mesh().nodes();
    for k in 0..space.n_elements() {
        let xl = nodes[k];
        let h = nodes[k + 1] - xl;
        for (&xq, &wq) in qx.iter().zip(&qw) {
            let x = xl + xq * h;
            let fv = f(x) * wq * h;
            for i in 0..=p {
                moments[space.global_dof(k, i)] += fv * space.shape(i, xq);
            }
        }
    }
    moments
}

/// Moments `<source, phi_i>` of a field over the target space, split at the
/// union of source and target breakpoints.
pub fn cross_moments(source: &Field, target: &SliceSpace) -> Vec<f64> {
    let p = target.degree();
    let (qx, qw) = poly::gauss_legendre_unit(p + 2);
    let src_nodes = source.space().mesh().nodes();
    let tgt_nodes = target.mesh().nodes();
    let mut moments = vec![0.0; target.n_dofs()];
    for k in 0..target.n_elements() {
        let xl = tgt_nodes[k];
        let xr = tgt_nodes[k + 1];
        // source breakpoints strictly inside this target element
        let mut cuts = vec![xl];
        for &s in src_nodes {
            if s > xl && s < xr {
                cuts.push(s);
            }
        }
        cuts.push(xr);
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let len = b - a;
            if len <= 0.0 {
                continue;
            }
            for (&xq, &wq) in qx.iter().zip(&qw) {
                let x = a + xq * len;
                let sv = source.evaluate(x).expect("union segment stays in domain");
                let x_hat = (x - xl) / (xr - xl);
                let scale = sv * wq * len;
                for i in 0..=p {
                    moments[target.global_dof(k, i)] += scale * target.shape(i, x_hat);
                }
            }
        }
    }
    moments
}

/// Transfer a field to another slice of the same partition by keeping its
/// basis coefficients.
pub fn shift(field: &Field, target: &Arc<SliceSpace>) -> Result<Field> {
    if !field.space().same_topology(target) {
        return Err(Error::ShiftTopologyMismatch {
            source_dofs: field.space().n_dofs(),
            target_dofs: target.n_dofs(),
        });
    }
    Field::new(Arc::clone(target), field.coeffs().to_vec())
}

/// Nodal interpolation at the dof coordinates.
pub fn interpolate(f: impl Fn(f64) -> f64, space: &Arc<SliceSpace>) -> Field {
    let coeffs = space.dof_coords().iter().map(|&x| f(x)).collect();
    Field {
        space: Arc::clone(space),
        coeffs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainSpec;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space_on(nodes: Vec<f64>, p: usize) -> Arc<SliceSpace> {
        Arc::new(SliceSpace::new(MeshSlice::new(0.0, nodes).unwrap(), p).unwrap())
    }

    fn unit_problem(a: f64, b: f64, c: f64) -> ProblemSpec {
        ProblemSpec::new(
            Arc::new(move |_, _| a),
            Arc::new(move |_, _| b),
            Arc::new(move |_, _| c),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_| 0.0),
            a.min(1.0),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn dof_layout_counts() {
        let domain = DomainSpec::new(0.0, 1.0, 1.0).unwrap();
        for p in 1..=4 {
            for n in [1, 3, 7] {
                let s = SliceSpace::new(MeshSlice::uniform(&domain, n, 0.0).unwrap(), p)
                    .unwrap();
                assert_eq!(s.n_dofs(), n * p + 1);
            }
        }
    }

    #[test]
    fn mass_single_linear_element() {
        for h in [1.0, 0.5] {
            let s = space_on(vec![0.0, h], 1);
            let m = mass_matrix(&s);
            assert_abs_diff_eq!(m.get(0, 0), h / 3.0, epsilon = 1e-14);
            assert_abs_diff_eq!(m.get(0, 1), h / 6.0, epsilon = 1e-14);
            assert_abs_diff_eq!(m.get(1, 0), h / 6.0, epsilon = 1e-14);
            assert_abs_diff_eq!(m.get(1, 1), h / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn h1_gram_single_linear_element() {
        let s = space_on(vec![0.0, 1.0], 1);
        let g = h1_gram(&s);
        assert_abs_diff_eq!(g.get(0, 0), 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(0, 1), -5.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.get(1, 1), 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn mass_row_sums_give_domain_measure() {
        let s = space_on(vec![0.0, 0.3, 0.55, 1.2], 3);
        let m = mass_matrix(&s);
        let total: f64 = (0..s.n_dofs())
            .map(|i| (0..s.n_dofs()).map(|j| m.get(i, j)).sum::<f64>())
            .sum();
        assert_abs_diff_eq!(total, 1.2, epsilon = 1e-12);
    }

    #[test]
    fn stiffness_single_linear_element() {
        let s = space_on(vec![0.0, 1.0], 1);
        let prob = unit_problem(1.0, 0.0, 0.0);
        let a = bilinear_matrix(&s, 0.0, &prob, |_, _| 0.0);
        assert_abs_diff_eq!(a.get(0, 0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a.get(0, 1), -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a.get(1, 0), -1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(a.get(1, 1), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn characteristic_motion_kills_convection() {
        // b = x_t: convection block vanishes, matrix symmetric
        let s = space_on(vec![0.0, 0.4, 1.0], 2);
        let prob = unit_problem(1.0, 2.5, 0.7);
        let a = bilinear_matrix(&s, 0.0, &prob, |_, _| 2.5);
        assert!(a.asymmetry() < 1e-12);
    }

    #[test]
    fn reaction_adds_mass() {
        let s = space_on(vec![0.0, 1.0], 1);
        let prob = unit_problem(1.0, 0.0, 1.0);
        let a = bilinear_matrix(&s, 0.0, &prob, |_, _| 0.0);
        let m = mass_matrix(&s);
        // A = stiffness + mass on this element
        assert_abs_diff_eq!(a.get(0, 0), 1.0 + m.get(0, 0), epsilon = 1e-13);
        assert_abs_diff_eq!(a.get(0, 1), -1.0 + m.get(0, 1), epsilon = 1e-13);
    }

    #[test]
    fn load_vector_cases() {
        let s = space_on(vec![0.0, 1.0], 1);
        let mut prob = unit_problem(1.0, 0.0, 0.0);
        prob.f = Arc::new(|_, _| 1.0);
        let rhs = load_vector(&s, 0.0, &prob);
        assert_abs_diff_eq!(rhs[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rhs[1], 0.5, epsilon = 1e-14);

        let s = space_on(vec![0.0, 0.5, 1.0], 2);
        let mut prob = unit_problem(1.0, 0.0, 0.0);
        prob.g = Arc::new(|x, _| if x == 1.0 { 1.0 } else { 0.0 });
        let rhs = load_vector(&s, 0.0, &prob);
        let n = s.n_dofs();
        assert_eq!(rhs[n - 1], 1.0);
        assert!(rhs[..n - 1].iter().all(|&v| v == 0.0));

        let prob = unit_problem(1.0, 0.0, 0.0);
        let rhs = load_vector(&s, 0.0, &prob);
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn project_constant_gives_ones() {
        let s = space_on(vec![0.0, 0.3, 0.7, 1.0], 2);
        let field = l2_project(|_| 1.0, &s).unwrap();
        for &c in field.coeffs() {
            assert_abs_diff_eq!(c, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn project_own_field_is_identity() {
        let s = space_on(vec![0.0, 0.25, 0.6, 1.0], 2);
        let field = interpolate(|x| x * x - 0.3 * x, &s);
        let back = l2_project_field(&field, &s).unwrap();
        for (a, b) in field.coeffs().iter().zip(back.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn project_quadratic_onto_linear_space() {
        // moments <x^2, phi> = (1/12, 1/4); solving the mass system gives
        // coefficients (-1/6, 5/6)
        let s = space_on(vec![0.0, 1.0], 1);
        let field = l2_project(|x| x * x, &s).unwrap();
        assert_abs_diff_eq!(field.coeffs()[0], -1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(field.coeffs()[1], 5.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_is_orthogonal_across_meshes() {
        let src = space_on(vec![0.0, 0.19, 0.41, 0.77, 1.0], 2);
        let field = interpolate(|x| (3.0 * x).sin(), &src);
        let tgt = space_on(vec![0.0, 0.5, 1.0], 1);
        let proj = l2_project_field(&field, &tgt).unwrap();
        // <proj - field, phi_i> = 0 for target basis functions
        let m = mass_matrix(&tgt);
        let lhs = m.mul_vec(proj.coeffs());
        let rhs = cross_moments(&field, &tgt);
        for (a, b) in lhs.iter().zip(&rhs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn shift_preserves_coefficients_and_scales_norms() {
        let src = space_on(vec![0.0, 0.5, 1.0], 2);
        let field = interpolate(|x| x * x, &src);

        // same mesh: norms identical
        let same = shift(&field, &src).unwrap();
        assert_eq!(same.coeffs(), field.coeffs());

        // uniform dilation by 1 + delta: squared L2 norm scales by 1 + delta
        let delta = 0.25;
        let dilated = space_on(vec![0.0, 0.5 * (1.0 + delta), 1.0 + delta], 2);
        let shifted = shift(&field, &dilated).unwrap();
        let m_src = mass_matrix(&src);
        let m_tgt = mass_matrix(&dilated);
        let n0: f64 = field
            .coeffs()
            .iter()
            .zip(m_src.mul_vec(field.coeffs()))
            .map(|(c, mc)| c * mc)
            .sum();
        let n1: f64 = shifted
            .coeffs()
            .iter()
            .zip(m_tgt.mul_vec(shifted.coeffs()))
            .map(|(c, mc)| c * mc)
            .sum();
        assert_abs_diff_eq!(n1, (1.0 + delta) * n0, epsilon = 1e-12);

        // topology mismatch is an error
        let other = space_on(vec![0.0, 0.3, 0.6, 1.0], 2);
        assert!(shift(&field, &other).is_err());
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        for p in 1..=3 {
            let s = space_on(vec![0.0, 0.21, 0.56, 1.0], p);
            let field = interpolate(|x| x, &s);
            for &x in &[0.0, 0.1, 0.33, 0.56, 0.9, 1.0] {
                assert_abs_diff_eq!(field.evaluate(x).unwrap(), x, epsilon = 1e-13);
                assert_abs_diff_eq!(field.evaluate_deriv(x).unwrap(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn evaluate_at_dof_returns_coefficient() {
        let s = space_on(vec![0.0, 0.5, 1.0], 2);
        let field = interpolate(|x| (2.0 * x).cos(), &s);
        for (i, &x) in s.dof_coords().iter().enumerate() {
            assert_abs_diff_eq!(
                field.evaluate(x).unwrap(),
                field.coeffs()[i],
                epsilon = 1e-13
            );
        }
        assert!(field.evaluate(1.5).is_err());
    }

    #[test]
    fn interpolation_error_decays_at_order_p_plus_one() {
        let domain = DomainSpec::new(0.0, 1.0, 1.0).unwrap();
        for p in 1..=3 {
            let mut errs = Vec::new();
            for n in [4, 8, 16] {
                let s = Arc::new(
                    SliceSpace::new(MeshSlice::uniform(&domain, n, 0.0).unwrap(), p)
                        .unwrap(),
                );
                let field = interpolate(|x| (4.0 * x).sin(), &s);
                let err = (0..=400)
                    .map(|i| {
                        let x = i as f64 / 400.0;
                        (field.evaluate(x).unwrap() - (4.0 * x).sin()).abs()
                    })
                    .fold(0.0, f64::max);
                errs.push(err);
            }
            let order1 = (errs[0] / errs[1]).log2();
            let order2 = (errs[1] / errs[2]).log2();
            assert!(
                order1 > p as f64 + 0.8 && order2 > p as f64 + 0.8,
                "p={p}: observed orders {order1:.2}, {order2:.2}"
            );
        }
    }

    #[test]
    fn assembled_matrices_are_spd_on_random_meshes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(1..8);
            let p = rng.gen_range(1..4);
            let mut nodes = vec![0.0];
            for _ in 0..n {
                nodes.push(nodes.last().unwrap() + rng.gen_range(0.05..1.0));
            }
            let s = space_on(nodes, p);
            assert!(BandCholesky::factor(&mass_matrix(&s)).is_ok());
            assert!(BandCholesky::factor(&h1_gram(&s)).is_ok());
        }
    }

    #[test]
    fn problem_spec_validation() {
        assert!(ProblemSpec::new(
            Arc::new(|_, _| 1.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_| 0.0),
            0.0, // a_lower must be positive
            0.0,
        )
        .is_err());

        let p = unit_problem(2.0, 0.0, 0.0);
        assert!(p.check_bounds(0.0, 1.0, 1.0, 10).is_ok());
        let mut bad = unit_problem(1.0, 0.0, 0.0);
        bad.c = Arc::new(|_, _| -1.0);
        assert!(bad.check_bounds(0.0, 1.0, 1.0, 10).is_err());
        assert!(bad.exact().is_err());
    }
}
