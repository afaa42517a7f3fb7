//! Per-partition collocation solve and the multi-partition time march.
//!
//! On partition `i` the solution is `u_h(t) = sum_k beta_k(t_hat) c_k` with
//! unknown coefficient vectors `c_1, ..., c_p` (the initial vector `c_0`
//! comes from the previous partition via L2 projection). Imposing the weak
//! form at the collocation times `t_{i,j}` couples all stages into one
//! `N p x N p` system whose `(j, k)` block is
//!
//! ```text
//!     beta_k'(t_j) / dt_i * M_j  +  beta_k(t_j) * K_j,
//! ```
//!
//! `M_j` and `K_j` the mass and characteristic-form matrices on the slice at
//! `t_{i,j}`. The shift between slices of one partition preserves basis
//! coefficients, so the blocks act on raw coefficient vectors. Unknowns are
//! interleaved dof-major, giving a banded system solved by direct banded LU.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fespace::{
    self, bilinear_matrix, cross_moments, load_vector, mass_matrix, Field, ProblemSpec,
    SliceSpace,
};
use crate::linalg::BandMatrix;
use crate::mesh::{
    reconfigure, DomainSpec, MeshMotion, MeshSlice, ReconfigureStrategy, RegularityReport,
    TimeGrid, TimePartition,
};
use crate::quadrature::ReferenceRule;
use crate::time_basis::{derivative_matrix, BasisPolicy, TimeBasis};

/// Relative residual threshold for accepting a partition solve.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// The assembled coupled system of one partition.
#[derive(Debug, Clone)]
pub struct PartitionSystem {
    matrix: BandMatrix,
    rhs: Vec<f64>,
    n_dofs: usize,
    p: usize,
}

impl PartitionSystem {
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn stages(&self) -> usize {
        self.p
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }
}

/// Solve diagnostics for one partition.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub partition_index: usize,
    pub residual: f64,
    pub regularity: RegularityReport,
    pub condition_estimate: f64,
    /// Max residual of the jump-orthogonality projection that produced this
    /// partition's initial coefficients.
    pub jump_residual: f64,
}

/// Solved state of one partition: the initial field and the `p` stage
/// fields at the time basis nodes.
#[derive(Debug, Clone)]
pub struct PartitionSolution {
    partition: TimePartition,
    collocation_times: Vec<f64>,
    initial: Field,
    stages: Vec<Field>,
    end_field: Field,
}

impl PartitionSolution {
    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    /// Real times of the collocation knots in this partition.
    pub fn collocation_times(&self) -> &[f64] {
        &self.collocation_times
    }

    /// Coefficients at `t_{i-1}+`.
    pub fn initial(&self) -> &Field {
        &self.initial
    }

    /// Stage fields `c_1..c_p`, attached to the slices at the basis nodes.
    pub fn stages(&self) -> &[Field] {
        &self.stages
    }

    /// The solution at `t_i-` (time polynomial evaluated at `t_hat = 1`).
    pub fn end_field(&self) -> &Field {
        &self.end_field
    }

    /// Coefficient vector of the time polynomial at reference time `t_hat`.
    pub fn coeffs_at_ref(&self, t_hat: f64) -> Vec<f64> {
        let basis = self.partition.basis();
        let n = self.initial.coeffs().len();
        let mut out = vec![0.0; n];
        let b0 = basis.beta(0, t_hat);
        for (o, &c) in out.iter_mut().zip(self.initial.coeffs()) {
            *o = b0 * c;
        }
        for (k, stage) in self.stages.iter().enumerate() {
            let bk = basis.beta(k + 1, t_hat);
            for (o, &c) in out.iter_mut().zip(stage.coeffs()) {
                *o += bk * c;
            }
        }
        out
    }

    /// Coefficients of the discrete characteristic derivative at `t_hat`:
    /// `(1/dt) sum_k beta_k'(t_hat) c_k`.
    pub fn deriv_coeffs_at_ref(&self, t_hat: f64) -> Vec<f64> {
        let basis = self.partition.basis();
        let dt = self.partition.dt();
        let n = self.initial.coeffs().len();
        let mut out = vec![0.0; n];
        let b0 = basis.beta_deriv(0, t_hat) / dt;
        for (o, &c) in out.iter_mut().zip(self.initial.coeffs()) {
            *o = b0 * c;
        }
        for (k, stage) in self.stages.iter().enumerate() {
            let bk = basis.beta_deriv(k + 1, t_hat) / dt;
            for (o, &c) in out.iter_mut().zip(stage.coeffs()) {
                *o += bk * c;
            }
        }
        out
    }

    /// Slice space at an arbitrary time of the partition.
    pub fn space_at(&self, t: f64) -> Result<Arc<SliceSpace>> {
        let slice = self.partition.slice(t)?;
        Ok(Arc::new(SliceSpace::new(slice, self.initial.space().degree())?))
    }

    /// The solution as a field on the slice at `t`.
    pub fn field_at(&self, t: f64) -> Result<Field> {
        let t_hat = self.partition.ref_time(t)?;
        Field::new(self.space_at(t)?, self.coeffs_at_ref(t_hat))
    }
}

/// The whole space-time solution with jump records at partition boundaries.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    rule: ReferenceRule,
    partitions: Vec<PartitionSolution>,
}

impl SpaceTimeSolution {
    pub fn rule(&self) -> &ReferenceRule {
        &self.rule
    }

    pub fn partitions(&self) -> &[PartitionSolution] {
        &self.partitions
    }

    /// Evaluate the solution at `(x, t)`; `t = 0` reads the initial field.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        if self.partitions.is_empty() {
            return Err(Error::InvalidTimeGrid("empty solution".into()));
        }
        if t <= self.partitions[0].partition().t_start() {
            return self.partitions[0].initial().evaluate(x);
        }
        for ps in &self.partitions {
            if t <= ps.partition().t_end() {
                return ps.field_at(t)?.evaluate(x);
            }
        }
        Err(Error::TimeOutsidePartition {
            t,
            t_start: self.partitions[0].partition().t_start(),
            t_end: self.partitions.last().unwrap().partition().t_end(),
        })
    }
}

/// Initial coefficients: the L2 projection of `u0` onto `space`.
pub fn initial_field(problem: &ProblemSpec, space: &Arc<SliceSpace>) -> Result<Field> {
    let u0 = Arc::clone(&problem.u0);
    fespace::l2_project(move |x| u0(x), space)
}

/// Assemble the coupled collocation system of one partition. `c_0` supplies
/// the right-side coupling to the partition start.
pub fn assemble_partition(
    partition: &TimePartition,
    problem: &ProblemSpec,
    rule: &ReferenceRule,
    c_0: &Field,
) -> Result<PartitionSystem> {
    let basis = partition.basis();
    let p = basis.degree();
    if rule.degree() != p {
        return Err(Error::InvalidNodes(format!(
            "rule degree {} does not match basis degree {p}",
            rule.degree()
        )));
    }
    if c_0.space().n_elements() != partition.n_elements() {
        return Err(Error::ShiftTopologyMismatch {
            source_dofs: c_0.space().n_dofs(),
            target_dofs: partition.n_elements() * p + 1,
        });
    }
    let n = c_0.space().n_dofs();
    let dt = partition.dt();
    let band = p * p + p - 1;
    let mut matrix = BandMatrix::zeros(n * p, band, band);
    let mut rhs = vec![0.0; n * p];

    for (j, &t_hat_j) in rule.knots().iter().enumerate() {
        let t_ij = partition.time_at_ref(t_hat_j);
        let space_j = Arc::new(SliceSpace::new(partition.slice(t_ij)?, p)?);
        let m_j = mass_matrix(&space_j);
        let k_j = bilinear_matrix(&space_j, t_ij, problem, |k, x_hat| {
            partition.mesh_velocity_ref(k, x_hat, t_hat_j)
        });
        let f_j = load_vector(&space_j, t_ij, problem);

        // stage blocks k = 1..=p
        for k in 1..=p {
            let cm = basis.beta_deriv(k, t_hat_j) / dt;
            let ck = basis.beta(k, t_hat_j);
            for col in 0..n {
                let lo = col.saturating_sub(p);
                let hi = (col + p).min(n - 1);
                for row in lo..=hi {
                    let v = cm * m_j.get(row, col) + ck * k_j.get(row, col);
                    if v != 0.0 {
                        matrix.add(row * p + j, col * p + (k - 1), v);
                    }
                }
            }
        }
        // k = 0 terms move to the right side against c_0
        let cm0 = basis.beta_deriv(0, t_hat_j) / dt;
        let ck0 = basis.beta(0, t_hat_j);
        let mc = m_j.mul_vec(c_0.coeffs());
        let kc = k_j.mul_vec(c_0.coeffs());
        for row in 0..n {
            rhs[row * p + j] = f_j[row] - cm0 * mc[row] - ck0 * kc[row];
        }
    }

    Ok(PartitionSystem {
        matrix,
        rhs,
        n_dofs: n,
        p,
    })
}

/// Direct banded solve. Returns the stage coefficient vectors `c_1..c_p`
/// plus `(relative residual, condition surrogate)`.
pub fn solve_partition(system: &PartitionSystem) -> Result<(Vec<Vec<f64>>, f64, f64)> {
    let lu = system
        .matrix
        .factor()
        .map_err(|e| Error::SolveFailed {
            partition: 0,
            detail: format!("factorization failed: {e} (time step too large or mesh degenerate)"),
        })?;
    let x = lu.solve(&system.rhs);
    let resid_vec = system.matrix.mul_vec(&x);
    let mut num = 0.0f64;
    let mut xn = 0.0f64;
    let mut bn = 0.0f64;
    for i in 0..x.len() {
        num = num.max((resid_vec[i] - system.rhs[i]).abs());
        xn = xn.max(x[i].abs());
        bn = bn.max(system.rhs[i].abs());
    }
    let denom = system.matrix.norm_inf() * xn + bn;
    let residual = if denom == 0.0 { 0.0 } else { num / denom };
    if residual > RESIDUAL_TOL {
        return Err(Error::SolveFailed {
            partition: 0,
            detail: format!("relative residual {residual:e} exceeds {RESIDUAL_TOL:e}"),
        });
    }
    let (n, p) = (system.n_dofs, system.p);
    let stages = (0..p)
        .map(|k| (0..n).map(|i| x[i * p + k]).collect())
        .collect();
    Ok((stages, residual, lu.pivot_ratio()))
}

/// Policy choosing the reconfiguration strategy at each interior partition
/// boundary.
#[derive(Debug, Clone)]
pub enum ReconfigPolicy {
    /// Same strategy at every boundary.
    Fixed(ReconfigureStrategy),
    /// One strategy per boundary `t_1..t_{m-1}`; missing entries mean Keep.
    Schedule(Vec<ReconfigureStrategy>),
}

impl ReconfigPolicy {
    pub fn keep() -> Self {
        ReconfigPolicy::Fixed(ReconfigureStrategy::Keep)
    }

    fn strategy_for(&self, boundary: usize) -> &ReconfigureStrategy {
        match self {
            ReconfigPolicy::Fixed(s) => s,
            ReconfigPolicy::Schedule(v) => {
                v.get(boundary).unwrap_or(&ReconfigureStrategy::Keep)
            }
        }
    }
}

/// Everything fixed before a run starts.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub domain: DomainSpec,
    pub grid: TimeGrid,
    pub rule: ReferenceRule,
    pub basis_policy: BasisPolicy,
    pub n_elements: usize,
    pub reconfig: ReconfigPolicy,
    pub dt_ceiling: Option<f64>,
}

/// March over all time partitions: build the mesh motion, project the
/// previous end field onto the (possibly reconfigured) new initial slice,
/// assemble, solve, and record diagnostics.
pub fn run(
    setup: &RunSetup,
    problem: &ProblemSpec,
    motion: &MeshMotion,
) -> Result<(SpaceTimeSolution, Vec<StepReport>)> {
    let p = setup.rule.degree();
    let basis = TimeBasis::from_policy(setup.basis_policy, &setup.rule);
    // solvability precondition on the basis/knot pairing
    derivative_matrix(&basis, &setup.rule)?;

    let m = setup.grid.partitions();
    let mut partitions = Vec::with_capacity(m);
    let mut reports = Vec::with_capacity(m);

    let initial_slice = MeshSlice::uniform(&setup.domain, setup.n_elements, 0.0)?;
    let space0 = Arc::new(SliceSpace::new(initial_slice, p)?);
    let mut c_prev = initial_field(problem, &space0)
        .map_err(|e| Error::PartitionFailed {
            partition: 0,
            source: Box::new(e),
        })?;
    let mut jump_residual = projection_residual_fn(&c_prev, problem);

    for i in 0..m {
        let step = |e: Error| Error::PartitionFailed {
            partition: i,
            source: Box::new(e),
        };
        let (t0, t1) = setup.grid.interval(i);
        let dt = t1 - t0;
        if let Some(ceiling) = setup.dt_ceiling {
            if dt > ceiling {
                return Err(Error::TimeStepCeiling {
                    partition: i,
                    dt,
                    ceiling,
                });
            }
        }

        if i > 0 {
            // between partitions: reconfigure, then enforce jump orthogonality
            let end_prev = partitions.last().map(|ps: &PartitionSolution| ps.end_field());
            let end_prev = end_prev.unwrap();
            let strategy = setup.reconfig.strategy_for(i - 1);
            let new_slice = reconfigure(end_prev.space().mesh(), strategy).map_err(step)?;
            if new_slice.nodes() == end_prev.space().mesh().nodes() {
                // same mesh on both sides: projection is the identity
                c_prev = end_prev.clone();
                jump_residual = 0.0;
            } else {
                let new_space = Arc::new(SliceSpace::new(new_slice, p).map_err(step)?);
                c_prev = fespace::l2_project_field(end_prev, &new_space).map_err(step)?;
                let mass = mass_matrix(&new_space);
                let lhs = mass.mul_vec(c_prev.coeffs());
                let rhs = cross_moments(end_prev, &new_space);
                jump_residual = lhs
                    .iter()
                    .zip(&rhs)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
            }
        }

        let partition = motion
            .build_partition(i, c_prev.space().mesh(), (t0, t1), &basis)
            .map_err(step)?;

        let mut check_times: Vec<f64> = vec![t0];
        check_times.extend(setup.rule.knots().iter().map(|&z| partition.time_at_ref(z)));
        if *check_times.last().unwrap() < t1 {
            check_times.push(t1);
        }
        let b_fn = |x: f64, t: f64| (problem.b)(x, t);
        let regularity = partition.regularity(&check_times, b_fn).map_err(step)?;

        let system = assemble_partition(&partition, problem, &setup.rule, &c_prev)
            .map_err(step)?;
        let (stage_coeffs, residual, condition_estimate) = solve_partition(&system)
            .map_err(|e| match e {
                Error::SolveFailed { detail, .. } => Error::SolveFailed {
                    partition: i,
                    detail,
                },
                other => step(other),
            })?;

        let mut stages = Vec::with_capacity(p);
        for (k, coeffs) in stage_coeffs.into_iter().enumerate() {
            let zeta = partition.basis().nodes()[k + 1];
            let t_k = partition.time_at_ref(zeta);
            let space_k =
                Arc::new(SliceSpace::new(partition.slice(t_k).map_err(step)?, p).map_err(step)?);
            stages.push(Field::new(space_k, coeffs).map_err(step)?);
        }

        let collocation_times = setup
            .rule
            .knots()
            .iter()
            .map(|&z| partition.time_at_ref(z))
            .collect::<Vec<_>>();

        let mut ps = PartitionSolution {
            partition,
            collocation_times,
            initial: c_prev.clone(),
            stages,
            end_field: Field::zeros(Arc::clone(c_prev.space())),
        };
        let end_space = Arc::new(
            SliceSpace::new(ps.partition.slice(t1).map_err(step)?, p).map_err(step)?,
        );
        ps.end_field = Field::new(end_space, ps.coeffs_at_ref(1.0)).map_err(step)?;

        reports.push(StepReport {
            partition_index: i,
            residual,
            regularity,
            condition_estimate,
            jump_residual,
        });
        partitions.push(ps);
    }

    Ok((
        SpaceTimeSolution {
            rule: setup.rule.clone(),
            partitions,
        },
        reports,
    ))
}

/// Residual of the initial-condition projection (solver part only: the
/// moments themselves carry committed quadrature error for general `u0`).
fn projection_residual_fn(field: &Field, problem: &ProblemSpec) -> f64 {
    let space = field.space();
    let mass = mass_matrix(space);
    let lhs = mass.mul_vec(field.coeffs());
    let u0 = &problem.u0;
    let rhs = fespace::moments_of_fn(&|x| u0(x), space, 1);
    lhs.iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
