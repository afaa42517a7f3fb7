//! Moving 1D meshes.
//!
//! Inside one time partition `(t_{i-1}, t_i]` the mesh topology is frozen and
//! every node follows a polynomial trajectory of degree `p`, stored by its
//! values at the time basis nodes. Between partitions the mesh may be
//! reconfigured discontinuously (nodes added, deleted, relocated). The domain
//! boundary never moves.
//!
//! An element `e_k(t) = [x_{k-1}(t), x_k(t)]` must keep positive width for
//! the whole partition; the per-element evolution rate
//!
//! ```text
//!     H_e(t) = (dx_k(t) / dx_k(t_{i-1}+) - 1) / dt_i
//! ```
//!
//! is the 1D specialization of the Jacobian evolution decomposition (the
//! rotation factor is identically 1), and its uniform bound `mu` is the
//! space-time shape regularity measure.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::time_basis::TimeBasis;

/// A velocity field `w(x, t)` driving mesh motion.
pub type VelocityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Number of RK4 substeps per basis-node gap in [`build_trajectories`].
const ODE_SUBSTEPS: usize = 8;

/// Dense non-degeneracy samples per partition: `10 p` interior points.
const DENSITY_PER_DEGREE: usize = 10;

/// The fixed space-time box `[x_min, x_max] x (0, t_final]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub t_final: f64,
}

impl DomainSpec {
    pub fn new(x_min: f64, x_max: f64, t_final: f64) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(Error::InvalidDomain(format!(
                "x_min {x_min} must be below x_max {x_max}"
            )));
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "t_final {t_final} must be positive"
            )));
        }
        Ok(DomainSpec {
            x_min,
            x_max,
            t_final,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
}

/// Strictly increasing time breakpoints `0 = t_0 < ... < t_m = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    breakpoints: Vec<f64>,
}

impl TimeGrid {
    pub fn from_breakpoints(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidTimeGrid("need at least two breakpoints".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidTimeGrid(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidTimeGrid(format!(
                    "breakpoints must increase, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(TimeGrid { breakpoints })
    }

    /// `m` equal partitions of `(0, t_final]`.
    pub fn uniform(t_final: f64, m: usize) -> Result<Self> {
        if m < 1 || !(t_final > 0.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "need m >= 1 and t_final > 0, got m = {m}, t_final = {t_final}"
            )));
        }
        Ok(TimeGrid {
            breakpoints: (0..=m).map(|i| t_final * i as f64 / m as f64).collect(),
        })
    }

    pub fn partitions(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `(t_{i-1}, t_i)` for partition `i` in `1..=m`, zero-based `i-1`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// The degree-`p` trajectory of one node, stored by its positions at the
/// `p + 1` time basis nodes of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrajectory {
    values: Vec<f64>,
}

impl NodeTrajectory {
    pub fn new(values_at_basis_nodes: Vec<f64>) -> Self {
        NodeTrajectory {
            values: values_at_basis_nodes,
        }
    }

    pub fn constant(x: f64, p: usize) -> Self {
        NodeTrajectory {
            values: vec![x; p + 1],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0])
    }
}

/// The spatial mesh frozen at one time: strictly increasing node positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSlice {
    time: f64,
    nodes: Vec<f64>,
}

impl MeshSlice {
    pub fn new(time: f64, nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::DegenerateMesh("slice needs at least 2 nodes".into()));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::DegenerateMesh(format!(
                    "slice nodes not strictly increasing at t = {time}: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(MeshSlice { time, nodes })
    }

    /// Uniform mesh with `n` elements over the spatial domain.
    pub fn uniform(domain: &DomainSpec, n: usize, time: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::DegenerateMesh("need at least 1 element".into()));
        }
        let nodes = (0..=n)
            .map(|k| domain.x_min + domain.width() * k as f64 / n as f64)
            .collect();
        MeshSlice::new(time, nodes)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn min_element(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn x_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

/// Regularity diagnostics of a partition: `mu` (evolution-rate bound),
/// `kappa` (convection/mesh-velocity mismatch), the smallest element seen,
/// and the range of element size ratios relative to the partition start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    pub mu_estimate: f64,
    pub kappa_estimate: f64,
    pub min_element: f64,
    pub det_ratio_range: (f64, f64),
}

/// One time partition: interval, basis, and a trajectory per node.
/// Boundary trajectories are constant; interior ones must never cross.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    index: usize,
    t_start: f64,
    t_end: f64,
    basis: TimeBasis,
    trajectories: Vec<NodeTrajectory>,
}

impl TimePartition {
    pub fn new(
        index: usize,
        interval: (f64, f64),
        basis: TimeBasis,
        trajectories: Vec<NodeTrajectory>,
    ) -> Result<Self> {
        let (t_start, t_end) = interval;
        if !(t_end > t_start) {
            return Err(Error::InvalidTimeGrid(format!(
                "partition interval ({t_start}, {t_end}] is empty"
            )));
        }
        if trajectories.len() < 2 {
            return Err(Error::DegenerateMesh(
                "partition needs at least 2 node trajectories".into(),
            ));
        }
        let p = basis.degree();
        for (k, traj) in trajectories.iter().enumerate() {
            if traj.values.len() != p + 1 {
                return Err(Error::DegenerateMesh(format!(
                    "trajectory {k} has {} values, basis needs {}",
                    traj.values.len(),
                    p + 1
                )));
            }
        }
        if !trajectories.first().unwrap().is_constant()
            || !trajectories.last().unwrap().is_constant()
        {
            return Err(Error::DegenerateMesh(
                "boundary trajectories must be constant (fixed domain)".into(),
            ));
        }
        let partition = TimePartition {
            index,
            t_start,
            t_end,
            basis,
            trajectories,
        };
        partition.check_non_degenerate()?;
        Ok(partition)
    }

    /// Static mesh: every node stays where the initial slice puts it.
    pub fn static_mesh(
        index: usize,
        interval: (f64, f64),
        basis: TimeBasis,
        initial: &MeshSlice,
    ) -> Result<Self> {
        let p = basis.degree();
        let trajectories = initial
            .nodes()
            .iter()
            .map(|&x| NodeTrajectory::constant(x, p))
            .collect();
        TimePartition::new(index, interval, basis, trajectories)
    }

    /// Nodes moving with constant per-node velocities (affine trajectories).
    /// Boundary nodes are pinned regardless of the supplied velocities.
    pub fn from_node_velocities(
        index: usize,
        interval: (f64, f64),
        basis: TimeBasis,
        initial: &MeshSlice,
        velocities: &[f64],
    ) -> Result<Self> {
        if velocities.len() != initial.nodes().len() {
            return Err(Error::DegenerateMesh(format!(
                "{} velocities for {} nodes",
                velocities.len(),
                initial.nodes().len()
            )));
        }
        let p = basis.degree();
        let dt = interval.1 - interval.0;
        let last = initial.nodes().len() - 1;
        let trajectories = initial
            .nodes()
            .iter()
            .enumerate()
            .map(|(k, &x0)| {
                if k == 0 || k == last {
                    NodeTrajectory::constant(x0, p)
                } else {
                    NodeTrajectory::new(
                        basis
                            .nodes()
                            .iter()
                            .map(|&z| x0 + velocities[k] * z * dt)
                            .collect(),
                    )
                }
            })
            .collect();
        TimePartition::new(index, interval, basis, trajectories)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub(crate) fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn dt(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn basis(&self) -> &TimeBasis {
        &self.basis
    }

    pub fn n_elements(&self) -> usize {
        self.trajectories.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.trajectories.len()
    }

    pub fn trajectories(&self) -> &[NodeTrajectory] {
        &self.trajectories
    }

    /// Reference time of `t`, checking `t` lies in the closed interval.
    /// Times within a few ulps of the endpoints are clamped, so values
    /// produced by `t0 + t_hat * dt` arithmetic round-trip safely.
    pub fn ref_time(&self, t: f64) -> Result<f64> {
        let slack = 64.0 * f64::EPSILON * self.t_end.abs().max(self.dt());
        if t < self.t_start - slack || t > self.t_end + slack {
            return Err(Error::TimeOutsidePartition {
                t,
                t_start: self.t_start,
                t_end: self.t_end,
            });
        }
        Ok(((t - self.t_start) / self.dt()).clamp(0.0, 1.0))
    }

    /// Real time of reference time `t_hat`; exact at both endpoints.
    pub fn time_at_ref(&self, t_hat: f64) -> f64 {
        (1.0 - t_hat) * self.t_start + t_hat * self.t_end
    }

    /// Position of node `k` at reference time `t_hat`.
    pub fn node_position_ref(&self, k: usize, t_hat: f64) -> f64 {
        self.trajectories[k]
            .values
            .iter()
            .enumerate()
            .map(|(l, &v)| v * self.basis.beta(l, t_hat))
            .sum()
    }

    /// Time derivative of node `k`'s trajectory at reference time `t_hat`.
    pub fn node_velocity_ref(&self, k: usize, t_hat: f64) -> f64 {
        self.trajectories[k]
            .values
            .iter()
            .enumerate()
            .map(|(l, &v)| v * self.basis.beta_deriv(l, t_hat))
            .sum::<f64>()
            / self.dt()
    }

    /// Mesh frozen at time `t`.
    pub fn slice(&self, t: f64) -> Result<MeshSlice> {
        let t_hat = self.ref_time(t)?;
        let nodes: Vec<f64> = (0..self.n_nodes())
            .map(|k| self.node_position_ref(k, t_hat))
            .collect();
        MeshSlice::new(t, nodes)
    }

    /// Width of element `k` at reference time `t_hat`.
    pub fn element_width_ref(&self, k: usize, t_hat: f64) -> f64 {
        self.node_position_ref(k + 1, t_hat) - self.node_position_ref(k, t_hat)
    }

    /// Forward isoparametric map for element `k`:
    /// `(x_hat, t_hat) -> (x_{k-1}(t) + x_hat * dx_k(t), t_start + t_hat * dt)`.
    pub fn isoparametric(&self, k: usize, x_hat: f64, t_hat: f64) -> (f64, f64) {
        let t = self.time_at_ref(t_hat);
        let left = self.node_position_ref(k, t_hat);
        let right = self.node_position_ref(k + 1, t_hat);
        (left + x_hat * (right - left), t)
    }

    /// Inverse isoparametric map for element `k`.
    pub fn inverse_isoparametric(&self, k: usize, x: f64, t: f64) -> Result<(f64, f64)> {
        let t_hat = self.ref_time(t)?;
        let left = self.node_position_ref(k, t_hat);
        let width = self.element_width_ref(k, t_hat);
        if !(width > 0.0) {
            return Err(Error::DegenerateMesh(format!(
                "element {k} has width {width:e} at t = {t}"
            )));
        }
        Ok(((x - left) / width, t_hat))
    }

    /// Mesh velocity at local coordinate `x_hat` of element `k`, time `t`:
    /// the affine-in-space interpolant of the two node velocities.
    pub fn mesh_velocity(&self, k: usize, x_hat: f64, t: f64) -> Result<f64> {
        let t_hat = self.ref_time(t)?;
        Ok(self.mesh_velocity_ref(k, x_hat, t_hat))
    }

    pub(crate) fn mesh_velocity_ref(&self, k: usize, x_hat: f64, t_hat: f64) -> f64 {
        let vl = self.node_velocity_ref(k, t_hat);
        let vr = self.node_velocity_ref(k + 1, t_hat);
        (1.0 - x_hat) * vl + x_hat * vr
    }

    /// Mesh velocity at a global point `x` (element located by bisection).
    pub fn velocity_at(&self, x: f64, t: f64) -> Result<f64> {
        let t_hat = self.ref_time(t)?;
        let slice = self.slice(t)?;
        let k = locate_element(slice.nodes(), x)?;
        let (x_hat, _) = self.inverse_isoparametric(k, x, t)?;
        Ok(self.mesh_velocity_ref(k, x_hat, t_hat))
    }

    /// Regularity diagnostics over `check_times` against velocity field `b`.
    /// Kappa is sampled at the element endpoints and midpoint of every
    /// element at every check time.
    pub fn regularity<B: Fn(f64, f64) -> f64>(
        &self,
        check_times: &[f64],
        b: B,
    ) -> Result<RegularityReport> {
        let dt = self.dt();
        let mut mu = 0.0f64;
        let mut kappa = 0.0f64;
        let mut min_element = f64::INFINITY;
        let mut ratio_lo = f64::INFINITY;
        let mut ratio_hi = f64::NEG_INFINITY;
        let widths0: Vec<f64> = (0..self.n_elements())
            .map(|k| self.element_width_ref(k, 0.0))
            .collect();
        for &t in check_times {
            let t_hat = self.ref_time(t)?;
            for k in 0..self.n_elements() {
                let w = self.element_width_ref(k, t_hat);
                if !(w > 0.0) {
                    return Err(Error::DegenerateMesh(format!(
                        "element {k} degenerate at check time {t}"
                    )));
                }
                min_element = min_element.min(w);
                let ratio = w / widths0[k];
                ratio_lo = ratio_lo.min(ratio);
                ratio_hi = ratio_hi.max(ratio);
                mu = mu.max(((ratio - 1.0) / dt).abs());
                for x_hat in [0.0, 0.5, 1.0] {
                    let (x, _) = self.isoparametric(k, x_hat, t_hat);
                    let xt = self.mesh_velocity_ref(k, x_hat, t_hat);
                    kappa = kappa.max((b(x, t) - xt).abs());
                }
            }
        }
        Ok(RegularityReport {
            mu_estimate: mu,
            kappa_estimate: kappa,
            min_element,
            det_ratio_range: (ratio_lo, ratio_hi),
        })
    }

    fn check_non_degenerate(&self) -> Result<()> {
        let p = self.basis.degree();
        let n_dense = DENSITY_PER_DEGREE * p;
        let mut sample_times: Vec<f64> = self.basis.nodes().to_vec();
        sample_times.extend((0..=n_dense).map(|i| i as f64 / n_dense as f64));
        for &t_hat in &sample_times {
            for k in 0..self.n_elements() {
                if !(self.element_width_ref(k, t_hat) > 0.0) {
                    return Err(Error::CrossingTrajectories {
                        partition: self.index,
                        detail: format!(
                            "element {k} collapses at reference time {t_hat:.4}"
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Rows `t x_0 ... x_n` sampled at `samples` times across the partition,
    /// for plotting node trajectories.
    pub fn export_rows(&self, samples: usize) -> Vec<(f64, Vec<f64>)> {
        (0..=samples)
            .map(|i| {
                let t_hat = i as f64 / samples as f64;
                let xs = (0..self.n_nodes())
                    .map(|k| self.node_position_ref(k, t_hat))
                    .collect();
                (self.time_at_ref(t_hat), xs)
            })
            .collect()
    }
}

/// Index of the element containing `x` in a strictly increasing node list.
/// Points exactly on an interior node resolve to the left element's right
/// neighbor boundary consistently (binary search on upper bounds).
pub(crate) fn locate_element(nodes: &[f64], x: f64) -> Result<usize> {
    let n = nodes.len() - 1;
    if x < nodes[0] || x > nodes[n] {
        return Err(Error::OutsideDomain {
            x,
            x_min: nodes[0],
            x_max: nodes[n],
        });
    }
    // rightmost element whose left node is <= x, clamped
    let mut k = nodes.partition_point(|&v| v <= x);
    k = k.saturating_sub(1).min(n - 1);
    Ok(k)
}

/// Integrate node trajectories through the velocity field `w(x, t)` with a
/// classical fourth-order one-step method, then interpolate at the time
/// basis nodes. Boundary nodes are held fixed.
pub fn build_trajectories<W: Fn(f64, f64) -> f64>(
    initial: &MeshSlice,
    interval: (f64, f64),
    w: W,
    basis: &TimeBasis,
) -> Result<TimePartition> {
    let (t0, t1) = interval;
    if !(t1 > t0) {
        return Err(Error::InvalidTimeGrid(format!(
            "partition interval ({t0}, {t1}] is empty"
        )));
    }
    let p = basis.degree();
    let last = initial.nodes().len() - 1;
    let mut trajectories = Vec::with_capacity(initial.nodes().len());
    for (k, &x0) in initial.nodes().iter().enumerate() {
        if k == 0 || k == last {
            trajectories.push(NodeTrajectory::constant(x0, p));
            continue;
        }
        let mut values = Vec::with_capacity(p + 1);
        let mut x = x0;
        let mut t_prev = t0;
        values.push(x);
        for l in 1..=p {
            let z = basis.nodes()[l];
            let t_next = (1.0 - z) * t0 + z * t1;
            let h = (t_next - t_prev) / ODE_SUBSTEPS as f64;
            for s in 0..ODE_SUBSTEPS {
                let t = t_prev + s as f64 * h;
                let k1 = w(x, t);
                let k2 = w(x + 0.5 * h * k1, t + 0.5 * h);
                let k3 = w(x + 0.5 * h * k2, t + 0.5 * h);
                let k4 = w(x + h * k3, t + h);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            values.push(x);
            t_prev = t_next;
        }
        trajectories.push(NodeTrajectory::new(values));
    }
    TimePartition::new(0, interval, basis.clone(), trajectories)
}

/// How node trajectories are generated for each partition. Motion is
/// precomputed per partition before solving and never depends on the
/// computed solution values.
#[derive(Clone)]
pub enum MeshMotion {
    /// Nodes stay where the partition's initial slice puts them.
    Static,
    /// Integrate node paths through a velocity field (RK4, then Lagrange
    /// interpolation at the basis nodes).
    Velocity(VelocityFn),
    /// Constant per-node velocities derived from the initial slice;
    /// trajectories are exactly affine in time.
    NodeVelocities(Arc<dyn Fn(&MeshSlice) -> Vec<f64> + Send + Sync>),
}

impl MeshMotion {
    pub fn build_partition(
        &self,
        index: usize,
        initial: &MeshSlice,
        interval: (f64, f64),
        basis: &TimeBasis,
    ) -> Result<TimePartition> {
        match self {
            MeshMotion::Static => {
                TimePartition::static_mesh(index, interval, basis.clone(), initial)
            }
            MeshMotion::Velocity(w) => {
                let part = build_trajectories(initial, interval, |x, t| w(x, t), basis)?;
                Ok(part.with_index(index))
            }
            MeshMotion::NodeVelocities(v) => TimePartition::from_node_velocities(
                index,
                interval,
                basis.clone(),
                initial,
                &v(initial),
            ),
        }
    }
}

impl std::fmt::Debug for MeshMotion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeshMotion::Static => write!(f, "MeshMotion::Static"),
            MeshMotion::Velocity(_) => write!(f, "MeshMotion::Velocity(..)"),
            MeshMotion::NodeVelocities(_) => write!(f, "MeshMotion::NodeVelocities(..)"),
        }
    }
}

/// How to pick the next partition's initial mesh from the previous end slice.
#[derive(Debug, Clone, PartialEq)]
pub enum ReconfigureStrategy {
    /// Reuse the end-slice node positions unchanged.
    Keep,
    /// Replace with a uniform mesh of `n` elements over the same domain.
    Uniform(usize),
    /// Replace with explicit node positions (must span the same domain).
    User(Vec<f64>),
}

/// Initial slice of the next partition. Topology changes happen only here.
pub fn reconfigure(previous_end: &MeshSlice, strategy: &ReconfigureStrategy) -> Result<MeshSlice> {
    match strategy {
        ReconfigureStrategy::Keep => Ok(previous_end.clone()),
        ReconfigureStrategy::Uniform(n) => {
            let domain = DomainSpec::new(previous_end.x_min(), previous_end.x_max(), 1.0)?;
            MeshSlice::uniform(&domain, *n, previous_end.time())
        }
        ReconfigureStrategy::User(positions) => {
            let slice = MeshSlice::new(previous_end.time(), positions.clone())
                .map_err(|e| Error::InvalidReconfiguration(e.to_string()))?;
            if slice.x_min() != previous_end.x_min() || slice.x_max() != previous_end.x_max() {
                return Err(Error::InvalidReconfiguration(format!(
                    "user positions span [{}, {}], domain is [{}, {}]",
                    slice.x_min(),
                    slice.x_max(),
                    previous_end.x_min(),
                    previous_end.x_max()
                )));
            }
            Ok(slice)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time_basis::make_basis;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn basis_p1() -> TimeBasis {
        make_basis(&[0.0, 1.0]).unwrap()
    }

    fn basis_p2() -> TimeBasis {
        make_basis(&[0.0, 0.5, 1.0]).unwrap()
    }

    fn unit_domain() -> DomainSpec {
        DomainSpec::new(0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn slice_of_static_mesh_returns_initial_positions() {
        let initial = MeshSlice::uniform(&unit_domain(), 4, 0.0).unwrap();
        let part =
            TimePartition::static_mesh(0, (0.0, 0.5), basis_p2(), &initial).unwrap();
        let s = part.slice(0.3).unwrap();
        for (a, b) in s.nodes().iter().zip(initial.nodes()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn slice_evaluates_moving_node() {
        // x_1(t) = t on (0, 1], nodes {0, x_1, 2}
        let basis = basis_p1();
        let trajectories = vec![
            NodeTrajectory::constant(0.0, 1),
            NodeTrajectory::new(vec![0.0001, 1.0]), // starts just off 0 to stay valid
            NodeTrajectory::constant(2.0, 1),
        ];
        let part = TimePartition::new(0, (0.0, 1.0), basis, trajectories).unwrap();
        let s = part.slice(0.5).unwrap();
        assert_abs_diff_eq!(s.nodes()[1], 0.50005, epsilon = 1e-12);
        assert_eq!(s.nodes()[0], 0.0);
        assert_eq!(s.nodes()[2], 2.0);
    }

    #[test]
    fn crossing_trajectories_rejected() {
        let trajectories = vec![
            NodeTrajectory::constant(0.0, 1),
            NodeTrajectory::new(vec![0.4, 1.5]), // crosses the right boundary
            NodeTrajectory::constant(1.0, 1),
        ];
        let err = TimePartition::new(0, (0.0, 1.0), basis_p1(), trajectories);
        assert!(matches!(err, Err(Error::CrossingTrajectories { .. })));
    }

    #[test]
    fn moving_boundary_rejected() {
        let trajectories = vec![
            NodeTrajectory::new(vec![0.0, 0.1]),
            NodeTrajectory::constant(1.0, 1),
        ];
        assert!(TimePartition::new(0, (0.0, 1.0), basis_p1(), trajectories).is_err());
    }

    #[test]
    fn isoparametric_endpoints() {
        let initial = MeshSlice::uniform(&unit_domain(), 2, 0.0).unwrap();
        let part =
            TimePartition::static_mesh(0, (0.0, 1.0), basis_p1(), &initial).unwrap();
        let (x, t) = part.isoparametric(1, 0.0, 0.3);
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t, 0.3, epsilon = 1e-15);
        let (x, t) = part.isoparametric(1, 1.0, 1.0);
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mesh_velocity_static_and_linear() {
        let initial = MeshSlice::uniform(&unit_domain(), 2, 0.0).unwrap();
        let stat = TimePartition::static_mesh(0, (0.0, 1.0), basis_p1(), &initial).unwrap();
        assert_abs_diff_eq!(stat.mesh_velocity(0, 0.33, 0.7).unwrap(), 0.0, epsilon = 1e-14);

        // p=1 trajectory from a to b: constant velocity (b - a) / dt
        let dt = 0.25;
        let part = TimePartition::new(
            0,
            (0.0, dt),
            basis_p1(),
            vec![
                NodeTrajectory::constant(0.0, 1),
                NodeTrajectory::new(vec![0.5, 0.6]),
                NodeTrajectory::constant(1.0, 1),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(
            part.mesh_velocity(0, 1.0, 0.1).unwrap(),
            0.1 / dt,
            epsilon = 1e-12
        );
        // affine interpolation between node velocities inside element 0
        assert_abs_diff_eq!(
            part.mesh_velocity(0, 0.5, 0.1).unwrap(),
            0.5 * 0.1 / dt,
            epsilon = 1e-12
        );
    }

    #[test]
    fn regularity_static_is_zero() {
        let initial = MeshSlice::uniform(&unit_domain(), 3, 0.0).unwrap();
        let part = TimePartition::static_mesh(0, (0.0, 0.5), basis_p2(), &initial).unwrap();
        let rep = part
            .regularity(&[0.0, 0.25, 0.5], |_, _| 0.0)
            .unwrap();
        assert_abs_diff_eq!(rep.mu_estimate, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rep.kappa_estimate, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rep.det_ratio_range.0, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rep.det_ratio_range.1, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn regularity_uniform_dilation() {
        // x_k(t) = x_k(0) * (1 + t) on (0, dt] for inner structure; emulate
        // with domain [0, 2] pinned at 0 and 2 and one dilating inner node.
        // H_e(t) = t/dt for the dilating element, so mu = 1 at t = dt.
        let dt = 0.25;
        let basis = basis_p1();
        let part = TimePartition::new(
            0,
            (0.0, dt),
            basis,
            vec![
                NodeTrajectory::constant(0.0, 1),
                NodeTrajectory::new(vec![1.0, 1.0 * (1.0 + dt)]),
                NodeTrajectory::constant(2.0, 1),
            ],
        )
        .unwrap();
        let rep = part.regularity(&[dt], |_, _| 0.0).unwrap();
        assert_abs_diff_eq!(rep.mu_estimate, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.det_ratio_range.1, 1.0 + dt, epsilon = 1e-12);
    }

    #[test]
    fn build_trajectories_static_and_translation() {
        let initial = MeshSlice::uniform(&unit_domain(), 4, 0.0).unwrap();
        let basis = basis_p2();
        let stat = build_trajectories(&initial, (0.0, 0.1), |_, _| 0.0, &basis).unwrap();
        for traj in stat.trajectories() {
            assert!(traj.is_constant());
        }

        // w = 1: interior nodes shift by dt, trajectories exactly linear
        let moving = build_trajectories(&initial, (0.0, 0.1), |_, _| 1.0, &basis).unwrap();
        for (k, traj) in moving.trajectories().iter().enumerate() {
            if k == 0 || k == 4 {
                assert!(traj.is_constant());
            } else {
                let x0 = initial.nodes()[k];
                for (l, &z) in basis.nodes().iter().enumerate() {
                    assert_abs_diff_eq!(traj.values()[l], x0 + 0.1 * z, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn build_trajectories_exponential_flow() {
        // w(x, t) = x on [1, 2]: trajectories approximate x0 * e^t
        let domain = DomainSpec::new(1.0, 2.0, 1.0).unwrap();
        let initial = MeshSlice::uniform(&domain, 4, 0.0).unwrap();
        let basis = basis_p2();
        let dt = 0.1;
        let part = build_trajectories(&initial, (0.0, dt), |x, _| x, &basis).unwrap();
        for (k, traj) in part.trajectories().iter().enumerate() {
            if k == 0 || k == 4 {
                continue;
            }
            let x0 = initial.nodes()[k];
            for (l, &z) in basis.nodes().iter().enumerate() {
                // RK4 with 8 substeps per gap: error way below interpolation level
                assert_abs_diff_eq!(
                    traj.values()[l],
                    x0 * (z * dt).exp(),
                    epsilon = 1e-9
                );
            }
            // interpolation error at a midpoint is O(dt^{p+1})
            let t_hat = 0.25;
            let x_interp = part.node_position_ref(k, t_hat);
            let x_exact = x0 * (t_hat * dt).exp();
            assert!((x_interp - x_exact).abs() < dt.powi(3));
        }
    }

    #[test]
    fn reconfigure_strategies() {
        let end = MeshSlice::new(1.0, vec![0.0, 0.4, 1.0]).unwrap();
        let kept = reconfigure(&end, &ReconfigureStrategy::Keep).unwrap();
        assert_eq!(kept.nodes(), end.nodes());

        let uni = reconfigure(&end, &ReconfigureStrategy::Uniform(4)).unwrap();
        assert_eq!(uni.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);

        let bad = reconfigure(
            &end,
            &ReconfigureStrategy::User(vec![0.0, 0.1, 0.05, 1.0]),
        );
        assert!(bad.is_err());

        let good = reconfigure(&end, &ReconfigureStrategy::User(vec![0.0, 0.7, 1.0]));
        assert!(good.is_ok());
    }

    #[test]
    fn locate_element_cases() {
        let nodes = [0.0, 0.25, 0.5, 1.0];
        assert_eq!(locate_element(&nodes, 0.0).unwrap(), 0);
        assert_eq!(locate_element(&nodes, 0.1).unwrap(), 0);
        assert_eq!(locate_element(&nodes, 0.25).unwrap(), 1);
        assert_eq!(locate_element(&nodes, 1.0).unwrap(), 2);
        assert!(locate_element(&nodes, -0.1).is_err());
        assert!(locate_element(&nodes, 1.1).is_err());
    }

    proptest! {
        #[test]
        fn isoparametric_round_trip(
            x_hat in 0.0..1.0f64,
            t_hat in 0.0..1.0f64,
            k in 0usize..4,
            shift in -0.04..0.04f64,
        ) {
            let initial = MeshSlice::uniform(&unit_domain(), 4, 0.0).unwrap();
            let basis = basis_p2();
            let part = build_trajectories(
                &initial,
                (0.0, 0.5),
                |x, _| shift * (8.0 * x).sin(),
                &basis,
            ).unwrap();
            let (x, t) = part.isoparametric(k, x_hat, t_hat);
            let (xh, th) = part.inverse_isoparametric(k, x, t).unwrap();
            prop_assert!((xh - x_hat).abs() <= 1e-12);
            prop_assert!((th - t_hat).abs() <= 1e-12);
        }

        #[test]
        fn dilation_det_ratio_within_mu_bound(
            rate in -0.9..0.9f64,
            dt in 0.01..0.2f64,
        ) {
            // single dilating inner node: measured mu then the 1D determinant
            // bound det ratio in [1 - 2 mu dt, 1 + 2 mu dt] for dt <= 1/(2 mu)
            let basis = basis_p1();
            let part = TimePartition::new(
                0,
                (0.0, dt),
                basis,
                vec![
                    NodeTrajectory::constant(0.0, 1),
                    NodeTrajectory::new(vec![1.0, 1.0 + rate * dt]),
                    NodeTrajectory::constant(2.0, 1),
                ],
            ).unwrap();
            let times: Vec<f64> = (0..=10).map(|i| part.time_at_ref(i as f64 / 10.0)).collect();
            let rep = part.regularity(&times, |_, _| 0.0).unwrap();
            let mu = rep.mu_estimate;
            if mu > 0.0 && dt <= 1.0 / (2.0 * mu) {
                prop_assert!(rep.det_ratio_range.0 >= 1.0 - 2.0 * mu * dt - 1e-12);
                prop_assert!(rep.det_ratio_range.1 <= 1.0 + 2.0 * mu * dt + 1e-12);
            }
        }

        #[test]
        fn random_crossings_rejected(speed in 1.0..4.0f64) {
            // inner node driven across its right neighbor
            let basis = basis_p1();
            let res = TimePartition::new(
                0,
                (0.0, 1.0),
                basis,
                vec![
                    NodeTrajectory::constant(0.0, 1),
                    NodeTrajectory::new(vec![0.5, 0.5 + speed]),
                    NodeTrajectory::constant(1.0, 1),
                ],
            );
            prop_assert!(res.is_err());
        }
    }
}
