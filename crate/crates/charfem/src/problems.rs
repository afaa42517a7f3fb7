//! Built-in manufactured benchmarks and mesh motion strategies.
//!
//! Every benchmark carries a closed-form solution bundle plus the extra
//! closed-form term `(a u_x)_x` needed to verify that its `f` and `g` are
//! consistent with the strong equation; the check runs at construction.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fespace::{ExactSolution, ProblemSpec, ScalarFn};
use crate::mesh::{DomainSpec, MeshMotion, MeshSlice, VelocityFn};

/// Fraction of the domain width over which characteristic mesh motion is
/// tapered to zero at each boundary (boundary nodes cannot advect).
pub const DEFAULT_TAPER_FRACTION: f64 = 0.1;

/// Residual tolerance of the manufactured-data consistency check.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// A named manufactured problem with recommended discretization sizes.
#[derive(Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub domain: DomainSpec,
    pub problem: ProblemSpec,
    pub suggested_elements: usize,
    pub suggested_partitions: usize,
    pub applicable_motions: &'static [&'static str],
    /// Closed-form `(a u_x)_x`, kept for the consistency oracle.
    flux_div: ScalarFn,
}

impl std::fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Benchmark {
    /// Max residual of `f = u_t - (a u_x)_x + b u_x + c u` and
    /// `g = a u_x n` over `samples` quasi-random space-time points.
    pub fn consistency_residual(&self, samples: usize) -> f64 {
        let exact = self.problem.exact.as_ref().expect("benchmarks carry exact bundles");
        let mut worst = 0.0f64;
        // low-discrepancy-ish deterministic sweep
        let mut acc_x = 0.5f64;
        let mut acc_t = 0.5f64;
        for _ in 0..samples {
            acc_x = (acc_x + 0.754_877_666_246_692_9) % 1.0;
            acc_t = (acc_t + 0.569_840_290_998_053_2) % 1.0;
            let x = self.domain.x_min + acc_x * self.domain.width();
            let t = acc_t * self.domain.t_final;
            let lhs = (exact.u_t)(x, t) - (self.flux_div)(x, t)
                + (self.problem.b)(x, t) * (exact.u_x)(x, t)
                + (self.problem.c)(x, t) * (exact.u)(x, t);
            worst = worst.max((lhs - (self.problem.f)(x, t)).abs());
            for (xb, n) in [(self.domain.x_min, -1.0), (self.domain.x_max, 1.0)] {
                let g_expect = (self.problem.a)(xb, t) * (exact.u_x)(xb, t) * n;
                worst = worst.max((g_expect - (self.problem.g)(xb, t)).abs());
            }
            let u0_resid = ((exact.u)(x, 0.0) - (self.problem.u0)(x)).abs();
            worst = worst.max(u0_resid);
        }
        worst
    }

    fn validated(self) -> Result<Self> {
        let r = self.consistency_residual(100);
        if r > CONSISTENCY_TOL {
            return Err(Error::InvalidProblem(format!(
                "benchmark {} fails the consistency check: residual {r:e}",
                self.name
            )));
        }
        Ok(self)
    }
}

/// Gaussian bump `u = exp(-(x - x0 - v t)^2 / sigma^2)` advected at speed
/// `v` with constant diffusivity `a0`, on `[0, 1] x (0, 0.25]`, `x0 = 0.3`.
pub fn traveling_gaussian(v: f64, sigma: f64, a0: f64) -> Result<Benchmark> {
    if !(sigma > 0.0) || !(a0 > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "need sigma > 0 and a0 > 0, got sigma = {sigma}, a0 = {a0}"
        )));
    }
    let x0 = 0.3;
    let s2 = sigma * sigma;
    let u = move |x: f64, t: f64| (-(x - x0 - v * t).powi(2) / s2).exp();
    let u_x = move |x: f64, t: f64| -2.0 * (x - x0 - v * t) / s2 * u(x, t);
    let u_t = move |x: f64, t: f64| -v * u_x(x, t);
    let u_xx = move |x: f64, t: f64| {
        let s = x - x0 - v * t;
        (-2.0 / s2 + 4.0 * s * s / (s2 * s2)) * u(x, t)
    };
    // with b = v and c = 0: f = u_t - a0 u_xx + v u_x = -a0 u_xx
    let problem = ProblemSpec::new(
        Arc::new(move |_, _| a0),
        Arc::new(move |_, _| v),
        Arc::new(|_, _| 0.0),
        Arc::new(move |x, t| -a0 * u_xx(x, t)),
        Arc::new(move |x, t| {
            let n = if x <= 0.0 { -1.0 } else { 1.0 };
            a0 * u_x(x, t) * n
        }),
        Arc::new(move |x| u(x, 0.0)),
        a0,
        0.0,
    )?
    .with_exact(ExactSolution {
        u: Arc::new(u),
        u_t: Arc::new(u_t),
        u_x: Arc::new(u_x),
    });
    Benchmark {
        name: "traveling-gaussian",
        domain: DomainSpec::new(0.0, 1.0, 0.25)?,
        problem,
        suggested_elements: 32,
        suggested_partitions: 8,
        applicable_motions: &["static", "characteristics", "prescribed"],
        flux_div: Arc::new(move |x, t| a0 * u_xx(x, t)),
    }
    .validated()
}

/// `u = x + t` with `a = 1`, `b = 0`, `c = 0`: `f = 1`, `g = -+1`. Lies in
/// the trial space for every `p >= 1` under any admissible mesh motion.
pub fn poly_x_plus_t() -> Result<Benchmark> {
    let problem = ProblemSpec::new(
        Arc::new(|_, _| 1.0),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 1.0),
        Arc::new(|x, _| if x <= 0.0 { -1.0 } else { 1.0 }),
        Arc::new(|x| x),
        1.0,
        0.0,
    )?
    .with_exact(ExactSolution {
        u: Arc::new(|x, t| x + t),
        u_t: Arc::new(|_, _| 1.0),
        u_x: Arc::new(|_, _| 1.0),
    });
    Benchmark {
        name: "poly-x-plus-t",
        domain: DomainSpec::new(0.0, 1.0, 0.5)?,
        problem,
        suggested_elements: 8,
        suggested_partitions: 4,
        applicable_motions: &["static", "characteristics", "prescribed", "dilation"],
        flux_div: Arc::new(|_, _| 0.0),
    }
    .validated()
}

/// `u = x t` with `a = 1`, `b = b0`, `c = 0`: `f = x + b0 t`, `g = -+t`.
/// A tensor polynomial of degree 1 in each variable; exact on static meshes
/// for every `p >= 1` and on linear-trajectory meshes for `p >= 2`.
pub fn poly_x_times_t(b0: f64) -> Result<Benchmark> {
    let problem = ProblemSpec::new(
        Arc::new(|_, _| 1.0),
        Arc::new(move |_, _| b0),
        Arc::new(|_, _| 0.0),
        Arc::new(move |x, t| x + b0 * t),
        Arc::new(|x, t| if x <= 0.0 { -t } else { t }),
        Arc::new(|_| 0.0),
        1.0,
        0.0,
    )?
    .with_exact(ExactSolution {
        u: Arc::new(|x, t| x * t),
        u_t: Arc::new(|x, _| x),
        u_x: Arc::new(|_, t| t),
    });
    Benchmark {
        name: "poly-x-times-t",
        domain: DomainSpec::new(0.0, 1.0, 0.5)?,
        problem,
        suggested_elements: 8,
        suggested_partitions: 4,
        applicable_motions: &["static", "dilation"],
        flux_div: Arc::new(|_, _| 0.0),
    }
    .validated()
}

/// `u = K`: `f = c K = 0` here (`c = 0`), `g = 0`.
pub fn constant_state(value: f64) -> Result<Benchmark> {
    let problem = ProblemSpec::new(
        Arc::new(|_, _| 1.0),
        Arc::new(|_, _| 1.0),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 0.0),
        Arc::new(move |_| value),
        1.0,
        0.0,
    )?
    .with_exact(ExactSolution {
        u: Arc::new(move |_, _| value),
        u_t: Arc::new(|_, _| 0.0),
        u_x: Arc::new(|_, _| 0.0),
    });
    Benchmark {
        name: "constant",
        domain: DomainSpec::new(0.0, 1.0, 0.5)?,
        problem,
        suggested_elements: 8,
        suggested_partitions: 4,
        applicable_motions: &["static", "characteristics", "prescribed", "dilation"],
        flux_div: Arc::new(|_, _| 0.0),
    }
    .validated()
}

/// A space-time polynomial lying in the trial space on static meshes:
/// `x + t` for `p = 1`, `x^2 + t^2` for `p >= 2`.
pub fn polynomial_exactness(p: usize) -> Result<Benchmark> {
    if p < 1 {
        return Err(Error::UnsupportedDegree(p, crate::quadrature::MAX_DEGREE));
    }
    if p == 1 {
        return poly_x_plus_t();
    }
    // u = x^2 + t^2: f = 2t - 2, g = a u_x n
    let problem = ProblemSpec::new(
        Arc::new(|_, _| 1.0),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, t| 2.0 * t - 2.0),
        Arc::new(|x, _| if x <= 0.0 { 0.0 } else { 2.0 }),
        Arc::new(|x| x * x),
        1.0,
        0.0,
    )?
    .with_exact(ExactSolution {
        u: Arc::new(|x, t| x * x + t * t),
        u_t: Arc::new(|_, t| 2.0 * t),
        u_x: Arc::new(|x, _| 2.0 * x),
    });
    Benchmark {
        name: "poly-quadratic",
        domain: DomainSpec::new(0.0, 1.0, 0.5)?,
        problem,
        suggested_elements: 8,
        suggested_partitions: 4,
        applicable_motions: &["static"],
        flux_div: Arc::new(|_, _| 2.0),
    }
    .validated()
}

/// Names accepted by [`benchmark_by_name`].
pub fn benchmark_names() -> &'static [&'static str] {
    &[
        "traveling-gaussian",
        "poly-x-plus-t",
        "poly-x-times-t",
        "poly-quadratic",
        "constant",
    ]
}

pub fn benchmark_by_name(name: &str) -> Result<Benchmark> {
    match name {
        "traveling-gaussian" => traveling_gaussian(1.0, 0.1, 1e-2),
        "poly-x-plus-t" => poly_x_plus_t(),
        "poly-x-times-t" => poly_x_times_t(1.0),
        "poly-quadratic" => polynomial_exactness(2),
        "constant" => constant_state(1.0),
        _ => Err(Error::InvalidProblem(format!(
            "unknown benchmark {name:?}; available: {}",
            benchmark_names().join(", ")
        ))),
    }
}

/// Mesh motion selector mirroring the CLI grammar.
#[derive(Clone)]
pub enum MotionKind {
    Static,
    /// `x_t = b` with the velocity tapered to zero over a boundary margin.
    Characteristics { taper_fraction: f64 },
    /// User-supplied velocity field.
    Prescribed(VelocityFn),
    /// Interior nodes dilate linearly about the domain center at `rate`
    /// (exactly affine trajectories).
    InteriorDilation(f64),
}

impl std::fmt::Debug for MotionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MotionKind::Static => write!(f, "Static"),
            MotionKind::Characteristics { taper_fraction } => {
                write!(f, "Characteristics {{ taper_fraction: {taper_fraction} }}")
            }
            MotionKind::Prescribed(_) => write!(f, "Prescribed(..)"),
            MotionKind::InteriorDilation(r) => write!(f, "InteriorDilation({r})"),
        }
    }
}

/// Build the mesh motion for a problem on a domain.
pub fn motion_strategy(
    kind: &MotionKind,
    problem: &ProblemSpec,
    domain: &DomainSpec,
) -> MeshMotion {
    match kind {
        MotionKind::Static => MeshMotion::Static,
        MotionKind::Characteristics { taper_fraction } => {
            let b = Arc::clone(&problem.b);
            let taper = boundary_taper(domain, *taper_fraction);
            MeshMotion::Velocity(Arc::new(move |x, t| b(x, t) * taper(x)))
        }
        MotionKind::Prescribed(w) => MeshMotion::Velocity(Arc::clone(w)),
        MotionKind::InteriorDilation(rate) => {
            let rate = *rate;
            let center = 0.5 * (domain.x_min + domain.x_max);
            MeshMotion::NodeVelocities(Arc::new(move |slice: &MeshSlice| {
                slice.nodes().iter().map(|&x| rate * (x - center)).collect()
            }))
        }
    }
}

/// Piecewise-linear cutoff: 1 in the interior, falling to 0 over a margin
/// of `fraction * |Omega|` at each boundary.
pub fn boundary_taper(domain: &DomainSpec, fraction: f64) -> impl Fn(f64) -> f64 {
    let margin = (fraction * domain.width()).max(f64::MIN_POSITIVE);
    let (lo, hi) = (domain.x_min, domain.x_max);
    move |x: f64| {
        let d = (x - lo).min(hi - x);
        (d / margin).clamp(0.0, 1.0)
    }
}

/// Named prescribed velocity fields for the CLI (`prescribed:NAME`).
pub fn prescribed_by_name(name: &str, domain: &DomainSpec) -> Result<VelocityFn> {
    let (lo, width) = (domain.x_min, domain.width());
    match name {
        "zero" => Ok(Arc::new(|_, _| 0.0)),
        // gentle interior swirl, zero at the boundary
        "sine" => Ok(Arc::new(move |x, _| {
            0.25 * (std::f64::consts::PI * (x - lo) / width).sin()
        })),
        // crossing motion for failure-path demos: pushes everything right,
        // faster on the left, so nodes collide
        "collide" => Ok(Arc::new(move |x, _| 2.0 * (1.0 - (x - lo) / width) + 0.5)),
        _ => Err(Error::InvalidProblem(format!(
            "unknown prescribed motion {name:?}; available: zero, sine, collide"
        ))),
    }
}
