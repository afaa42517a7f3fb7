//! Norm computations and error reports.
//!
//! The mesh-dependent energy norm driving the a-priori analysis is
//!
//! ```text
//!     |||e|||^2 = max_{i,j} ||e(t_{i,j})||_0^2
//!               + sum_i dt_i Q_i( ||e_tau||_{-1,V(t)}^2 + ||e||_1^2 ),
//! ```
//!
//! with the max ranging over every collocation node plus the initial slice,
//! and the negative norm taken in the discrete dual of the slice space:
//! `||v||_{-1,V(t)} = sup_chi <v, chi> / ||chi||_1` over `chi` in the slice
//! space, computed exactly through the H1 Gram solve.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fespace::{h1_gram, ExactSolution, Field, ProblemSpec, SliceSpace};
use crate::linalg::BandCholesky;
use crate::mesh::TimePartition;
use crate::poly;
use crate::quadrature::ReferenceRule;
use crate::solver::{PartitionSolution, SpaceTimeSolution};
use crate::time_basis::TimeBasis;

/// `||v||_{-1, V}` from the moment vector `moments[i] = <v, phi_i>`:
/// `sqrt(r^T G^{-1} r)` with `G` the H1 Gram matrix of the slice space.
/// The supremizer `G^{-1} r` attains the sup exactly.
pub fn negative_norm(space: &SliceSpace, moments: &[f64]) -> Result<f64> {
    if moments.len() != space.n_dofs() {
        return Err(Error::FieldSizeMismatch {
            expected: space.n_dofs(),
            got: moments.len(),
        });
    }
    let gram = h1_gram(space);
    let chol = BandCholesky::factor(&gram)
        .map_err(|e| Error::SingularMatrix(format!("H1 Gram not SPD: {e}")))?;
    let chi = chol.solve(moments);
    let sq: f64 = moments.iter().zip(&chi).map(|(&r, &c)| r * c).sum();
    Ok(sq.max(0.0).sqrt())
}

/// The discrete characteristic derivative at collocation index `j`
/// (zero-based): the field on the slice at `t_{i,j}` with coefficients
/// `(1/dt) sum_k beta_k'(t_j) c_k`.
pub fn discrete_characteristic_derivative(
    ps: &PartitionSolution,
    j: usize,
) -> Result<Field> {
    let times = ps.collocation_times();
    let t = *times.get(j).ok_or(Error::IndexOutOfRange {
        index: j,
        degree: times.len(),
    })?;
    let t_hat = ps.partition().ref_time(t)?;
    let coeffs = ps.deriv_coeffs_at_ref(t_hat);
    Field::new(ps.space_at(t)?, coeffs)
}

/// The exact characteristic derivative `u_t + x_t u_x` at `(x, t)`, with the
/// mesh velocity taken from the partition's trajectories.
pub fn exact_characteristic_derivative(
    problem: &ProblemSpec,
    partition: &TimePartition,
    x: f64,
    t: f64,
) -> Result<f64> {
    let exact = problem.exact()?;
    let x_t = partition.velocity_at(x, t)?;
    Ok((exact.u_t)(x, t) + x_t * (exact.u_x)(x, t))
}

/// Components of the energy norm; `energy()` recombines them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// Max slice L2 norm over collocation nodes and the initial slice.
    pub max_l2: f64,
    /// Aggregated `sum_i dt_i Q_i(||e||_1^2)`.
    pub h1_term: f64,
    /// Aggregated `sum_i dt_i Q_i(||e_tau||_{-1}^2)`.
    pub neg_term: f64,
}

impl EnergyBreakdown {
    pub fn energy(&self) -> f64 {
        (self.max_l2 * self.max_l2 + self.h1_term + self.neg_term).sqrt()
    }
}

/// Full report for one run against an exact solution.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub energy_error: f64,
    pub max_l2_at_collocation: f64,
    pub h1_term: f64,
    pub neg_term: f64,
    pub interpolant_energy_error: f64,
    /// `None` when the interpolant error is at rounding level (the run
    /// reproduced the solution exactly and the ratio is 0/0).
    pub quasi_optimality_ratio: Option<f64>,
}

/// Threshold below which an interpolant error counts as "exact" and the
/// quasi-optimality ratio is not formed.
pub const EXACTNESS_FLOOR: f64 = 1e-12;

/// One partition's worth of stage coefficient vectors `c_0..c_p`, the common
/// shape behind the discrete solution and the tensor interpolant.
struct StageCoeffs {
    partition: TimePartition,
    stages: Vec<Vec<f64>>,
}

impl StageCoeffs {
    fn combine(&self, t_hat: f64) -> Vec<f64> {
        combine_stages(self.partition.basis(), &self.stages, t_hat, None)
    }

    fn combine_deriv(&self, t_hat: f64) -> Vec<f64> {
        combine_stages(
            self.partition.basis(),
            &self.stages,
            t_hat,
            Some(self.partition.dt()),
        )
    }
}

fn combine_stages(
    basis: &TimeBasis,
    stages: &[Vec<f64>],
    t_hat: f64,
    deriv_dt: Option<f64>,
) -> Vec<f64> {
    let n = stages[0].len();
    let mut out = vec![0.0; n];
    for (k, coeffs) in stages.iter().enumerate() {
        let w = match deriv_dt {
            None => basis.beta(k, t_hat),
            Some(dt) => basis.beta_deriv(k, t_hat) / dt,
        };
        if w == 0.0 {
            continue;
        }
        for (o, &c) in out.iter_mut().zip(coeffs) {
            *o += w * c;
        }
    }
    out
}

fn solution_stage_coeffs(sol: &SpaceTimeSolution) -> Vec<StageCoeffs> {
    sol.partitions()
        .iter()
        .map(|ps| {
            let mut stages = Vec::with_capacity(ps.stages().len() + 1);
            stages.push(ps.initial().coeffs().to_vec());
            for st in ps.stages() {
                stages.push(st.coeffs().to_vec());
            }
            StageCoeffs {
                partition: ps.partition().clone(),
                stages,
            }
        })
        .collect()
}

/// The space-time tensor interpolant of the exact solution: spatial nodal
/// interpolation on the slice at every time basis node of every partition.
fn interpolant_stage_coeffs(
    sol: &SpaceTimeSolution,
    exact: &ExactSolution,
) -> Result<Vec<StageCoeffs>> {
    let p = sol.rule().degree();
    sol.partitions()
        .iter()
        .map(|ps| {
            let part = ps.partition();
            let stages = part
                .basis()
                .nodes()
                .iter()
                .map(|&zeta| {
                    let t = part.time_at_ref(zeta);
                    let space = SliceSpace::new(part.slice(t)?, p)?;
                    Ok(space.dof_coords().iter().map(|&x| (exact.u)(x, t)).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            Ok(StageCoeffs {
                partition: part.clone(),
                stages,
            })
        })
        .collect()
}

/// Pointwise error data at one quadrature point.
struct PointError {
    e: f64,
    e_x: f64,
    e_tau: f64,
}

/// Per-slice accumulation: L2^2, full H1^2, and the moment vector of the
/// characteristic-derivative error. Quadrature: `p + 3` Gauss points.
fn slice_terms<F: Fn(usize, f64, f64) -> PointError>(
    space: &SliceSpace,
    eval: F,
) -> (f64, f64, Vec<f64>) {
    let p = space.degree();
    let (qx, qw) = poly::gauss_legendre_unit(p + 3);
    let nodes = space.mesh().nodes();
    let mut l2_sq = 0.0;
    let mut h1_semi_sq = 0.0;
    let mut moments = vec![0.0; space.n_dofs()];
    for k in 0..space.n_elements() {
        let xl = nodes[k];
        let h = nodes[k + 1] - xl;
        for (&xq, &wq) in qx.iter().zip(&qw) {
            let x = xl + xq * h;
            let pe = eval(k, xq, x);
            let scale = wq * h;
            l2_sq += scale * pe.e * pe.e;
            h1_semi_sq += scale * pe.e_x * pe.e_x;
            for i in 0..=p {
                moments[space.global_dof(k, i)] += scale * pe.e_tau * space.shape(i, xq);
            }
        }
    }
    (l2_sq, l2_sq + h1_semi_sq, moments)
}

/// Energy norm of `u - u_h` (needs the exact bundle).
pub fn energy_norm_error(
    sol: &SpaceTimeSolution,
    problem: &ProblemSpec,
) -> Result<EnergyBreakdown> {
    let exact = problem.exact()?.clone();
    let stages = solution_stage_coeffs(sol);
    energy_norm_of(&stages, sol.rule(), Some(&exact))
}

/// Energy norm of the discrete solution itself.
pub fn energy_norm_discrete(sol: &SpaceTimeSolution) -> Result<EnergyBreakdown> {
    let stages = solution_stage_coeffs(sol);
    energy_norm_of(&stages, sol.rule(), None)
}

/// Energy norm of `u - I_h u` for the tensor interpolant `I_h`, the
/// computable upper bound of the best-approximation error.
pub fn energy_norm_interpolant_error(
    sol: &SpaceTimeSolution,
    problem: &ProblemSpec,
) -> Result<EnergyBreakdown> {
    let exact = problem.exact()?.clone();
    let stages = interpolant_stage_coeffs(sol, &exact)?;
    energy_norm_of(&stages, sol.rule(), Some(&exact))
}

fn energy_norm_of(
    parts: &[StageCoeffs],
    rule: &ReferenceRule,
    exact: Option<&ExactSolution>,
) -> Result<EnergyBreakdown> {
    if parts.is_empty() {
        return Err(Error::InvalidTimeGrid("no partitions".into()));
    }
    let p = rule.degree();
    let mut max_l2_sq = 0.0f64;
    let mut h1_term = 0.0;
    let mut neg_term = 0.0;

    // initial slice contributes to the max term
    {
        let sc = &parts[0];
        let t0 = sc.partition.t_start();
        let space = Arc::new(SliceSpace::new(sc.partition.slice(t0)?, p)?);
        let coeffs = sc.combine(0.0);
        let field = Field::new(Arc::clone(&space), coeffs)?;
        let (l2_sq, _, _) = slice_terms(&space, |k, x_hat, x| {
            let disc = field.eval_on_element(k, x_hat);
            let e = match exact {
                Some(ex) => (ex.u)(x, t0) - disc,
                None => -disc,
            };
            PointError {
                e,
                e_x: 0.0,
                e_tau: 0.0,
            }
        });
        max_l2_sq = max_l2_sq.max(l2_sq);
    }

    for sc in parts {
        let part = &sc.partition;
        let dt = part.dt();
        let mut q_h1 = 0.0;
        let mut q_neg = 0.0;
        for (&t_hat, &w) in rule.knots().iter().zip(rule.weights()) {
            let t = part.time_at_ref(t_hat);
            let space = Arc::new(SliceSpace::new(part.slice(t)?, p)?);
            let value_field = Field::new(Arc::clone(&space), sc.combine(t_hat))?;
            let tau_field = Field::new(Arc::clone(&space), sc.combine_deriv(t_hat))?;
            let (l2_sq, h1_sq, moments) = slice_terms(&space, |k, x_hat, x| {
                let disc = value_field.eval_on_element(k, x_hat);
                let disc_x = value_field.eval_deriv_on_element(k, x_hat);
                let disc_tau = tau_field.eval_on_element(k, x_hat);
                match exact {
                    Some(ex) => {
                        let x_t = part.mesh_velocity_ref(k, x_hat, t_hat);
                        PointError {
                            e: (ex.u)(x, t) - disc,
                            e_x: (ex.u_x)(x, t) - disc_x,
                            e_tau: (ex.u_t)(x, t) + x_t * (ex.u_x)(x, t) - disc_tau,
                        }
                    }
                    None => PointError {
                        e: -disc,
                        e_x: -disc_x,
                        e_tau: -disc_tau,
                    },
                }
            });
            let neg = negative_norm(&space, &moments)?;
            max_l2_sq = max_l2_sq.max(l2_sq);
            q_h1 += w * h1_sq;
            q_neg += w * neg * neg;
        }
        h1_term += dt * q_h1;
        neg_term += dt * q_neg;
    }

    Ok(EnergyBreakdown {
        max_l2: max_l2_sq.sqrt(),
        h1_term,
        neg_term,
    })
}

/// Energy error, interpolant error, and their ratio for one solved run.
pub fn error_report(sol: &SpaceTimeSolution, problem: &ProblemSpec) -> Result<ErrorReport> {
    let err = energy_norm_error(sol, problem)?;
    let interp = energy_norm_interpolant_error(sol, problem)?;
    let interp_energy = interp.energy();
    let quasi_optimality_ratio = if interp_energy > EXACTNESS_FLOOR {
        Some(err.energy() / interp_energy)
    } else {
        None
    };
    Ok(ErrorReport {
        energy_error: err.energy(),
        max_l2_at_collocation: err.max_l2,
        h1_term: err.h1_term,
        neg_term: err.neg_term,
        interpolant_energy_error: interp_energy,
        quasi_optimality_ratio,
    })
}
