//! The three commands: single run, convergence sweep, mesh inspection.
//! Every command computes its results fully before writing any file.

use std::path::PathBuf;

use charfem::analysis::{error_report, ErrorReport, EXACTNESS_FLOOR};
use charfem::mesh::{MeshMotion, MeshSlice, TimeGrid};
use charfem::problems::{
    benchmark_by_name, motion_strategy, prescribed_by_name, Benchmark, MotionKind,
    DEFAULT_TAPER_FRACTION,
};
use charfem::quadrature::{gauss_rule, radau_rule, theta_rule, ReferenceRule};
use charfem::solver::{run, ReconfigPolicy, RunSetup, SpaceTimeSolution, StepReport};
use charfem::time_basis::TimeBasis;

use crate::config::{MotionSpec, RuleSpec, RunConfig};
use crate::output::{fmt_float, fmt_opt, write_atomic};
use crate::CliError;

/// Spatial sample count (intervals) for solution snapshot tables.
const SNAPSHOT_RESOLUTION: usize = 200;

/// Time samples per partition in mesh trajectory exports.
const TRAJECTORY_SAMPLES: usize = 20;

fn build_rule(spec: RuleSpec, p: usize) -> Result<ReferenceRule, CliError> {
    let rule = match spec {
        RuleSpec::Gauss => gauss_rule(p),
        RuleSpec::Radau => radau_rule(p),
        RuleSpec::Theta(s) => theta_rule(p, s),
    };
    rule.map_err(|e| CliError::Config(e.to_string()))
}

fn build_motion(config: &RunConfig, bench: &Benchmark) -> Result<MeshMotion, CliError> {
    let kind = match &config.motion {
        MotionSpec::Static => MotionKind::Static,
        MotionSpec::Characteristics => MotionKind::Characteristics {
            taper_fraction: DEFAULT_TAPER_FRACTION,
        },
        MotionSpec::Prescribed(name) => {
            let w = prescribed_by_name(name, &bench.domain)
                .map_err(|e| CliError::Config(e.to_string()))?;
            MotionKind::Prescribed(w)
        }
        MotionSpec::Dilation(rate) => MotionKind::InteriorDilation(*rate),
    };
    Ok(motion_strategy(&kind, &bench.problem, &bench.domain))
}

fn load_benchmark(config: &RunConfig) -> Result<Benchmark, CliError> {
    benchmark_by_name(&config.benchmark).map_err(|e| CliError::Config(e.to_string()))
}

fn setup_for(
    config: &RunConfig,
    bench: &Benchmark,
    elements: usize,
    partitions: usize,
) -> Result<RunSetup, CliError> {
    Ok(RunSetup {
        domain: bench.domain,
        grid: TimeGrid::uniform(bench.domain.t_final, partitions)
            .map_err(|e| CliError::Config(e.to_string()))?,
        rule: build_rule(config.rule, config.p)?,
        basis_policy: config.basis,
        n_elements: elements,
        reconfig: ReconfigPolicy::keep(),
        dt_ceiling: config.dt_ceiling,
    })
}

fn step_reports_csv(reports: &[StepReport]) -> String {
    let mut s = String::from(
        "partition,residual,condition_estimate,mu,kappa,min_element,det_ratio_min,det_ratio_max,jump_residual\n",
    );
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.partition_index,
            fmt_float(r.residual),
            fmt_float(r.condition_estimate),
            fmt_float(r.regularity.mu_estimate),
            fmt_float(r.regularity.kappa_estimate),
            fmt_float(r.regularity.min_element),
            fmt_float(r.regularity.det_ratio_range.0),
            fmt_float(r.regularity.det_ratio_range.1),
            fmt_float(r.jump_residual),
        ));
    }
    s
}

fn snapshots_csv(sol: &SpaceTimeSolution, grid: &TimeGrid) -> Result<String, CliError> {
    let mut s = String::from("t,x,u\n");
    let first = sol.partitions()[0].initial().space().mesh();
    let (x_min, x_max) = (first.x_min(), first.x_max());
    for &t in grid.breakpoints() {
        for i in 0..=SNAPSHOT_RESOLUTION {
            let x = x_min + (x_max - x_min) * i as f64 / SNAPSHOT_RESOLUTION as f64;
            let u = sol.eval(x, t).map_err(CliError::from_run_error)?;
            s.push_str(&format!("{},{},{}\n", fmt_float(t), fmt_float(x), fmt_float(u)));
        }
    }
    Ok(s)
}

fn error_report_csv(report: &ErrorReport) -> String {
    format!(
        "energy_error,max_l2,h1_term,neg_term,interp_energy_err,ratio\n{},{},{},{},{},{}\n",
        fmt_float(report.energy_error),
        fmt_float(report.max_l2_at_collocation),
        fmt_float(report.h1_term),
        fmt_float(report.neg_term),
        fmt_float(report.interpolant_energy_error),
        fmt_opt(report.quasi_optimality_ratio),
    )
}

/// Run one configuration and write snapshots, step reports, and the error
/// report. Returns the paths written.
pub fn run_single(config: &RunConfig, verbose: bool) -> Result<Vec<PathBuf>, CliError> {
    let bench = load_benchmark(config)?;
    let motion = build_motion(config, &bench)?;
    let setup = setup_for(config, &bench, config.elements, config.partitions)?;

    let (sol, reports) = run(&setup, &bench.problem, &motion).map_err(CliError::from_run_error)?;
    let report = error_report(&sol, &bench.problem).map_err(CliError::from_run_error)?;
    let snapshots = snapshots_csv(&sol, &setup.grid)?;

    if verbose {
        println!(
            "energy_error = {}\nmax_l2 = {}\nh1_term = {}\nneg_term = {}\ninterp_energy_err = {}\nratio = {}",
            fmt_float(report.energy_error),
            fmt_float(report.max_l2_at_collocation),
            fmt_float(report.h1_term),
            fmt_float(report.neg_term),
            fmt_float(report.interpolant_energy_error),
            report
                .quasi_optimality_ratio
                .map(fmt_float)
                .unwrap_or_else(|| "exact".into()),
        );
    }

    Ok(vec![
        write_atomic(&config.out_dir, "snapshots.csv", &snapshots)?,
        write_atomic(&config.out_dir, "step_reports.csv", &step_reports_csv(&reports))?,
        write_atomic(&config.out_dir, "error_report.csv", &error_report_csv(&report))?,
    ])
}

struct LevelRow {
    level: usize,
    h: f64,
    dt: f64,
    report: ErrorReport,
}

fn level_row(config: &RunConfig, bench: &Benchmark, level: usize) -> Result<LevelRow, CliError> {
    let scale = 1usize << level;
    let elements = config.elements * scale;
    let partitions = config.partitions * scale;
    let motion = build_motion(config, bench)?;
    let setup = setup_for(config, bench, elements, partitions)?;
    let (sol, _) = run(&setup, &bench.problem, &motion).map_err(CliError::from_run_error)?;
    let report = error_report(&sol, &bench.problem).map_err(CliError::from_run_error)?;
    Ok(LevelRow {
        level,
        h: bench.domain.width() / elements as f64,
        dt: bench.domain.t_final / partitions as f64,
        report,
    })
}

/// Run `levels` refinements (elements and partitions both doubled per level)
/// and write the convergence table. Levels run concurrently when
/// `threads > 1`; output is merged in level order either way.
pub fn run_convergence(config: &RunConfig, verbose: bool) -> Result<Vec<PathBuf>, CliError> {
    let bench = load_benchmark(config)?;
    // surface config errors (bad rule, unknown motion) before spawning work
    build_motion(config, &bench)?;
    build_rule(config.rule, config.p)?;

    let levels: Vec<usize> = (0..config.levels).collect();
    let mut results: Vec<Option<Result<LevelRow, CliError>>> =
        (0..config.levels).map(|_| None).collect();

    if config.threads <= 1 {
        for &l in &levels {
            results[l] = Some(level_row(config, &bench, l));
        }
    } else {
        let chunks: Vec<Vec<usize>> = (0..config.threads)
            .map(|t| levels.iter().copied().filter(|l| l % config.threads == t).collect())
            .collect();
        let mut collected: Vec<(usize, Result<LevelRow, CliError>)> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|chunk| {
                    let bench = &bench;
                    scope.spawn(move || {
                        chunk
                            .into_iter()
                            .map(|l| (l, level_row(config, bench, l)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                collected.extend(h.join().expect("level worker panicked"));
            }
        });
        for (l, r) in collected {
            results[l] = Some(r);
        }
    }

    let mut rows = Vec::with_capacity(config.levels);
    for r in results {
        rows.push(r.expect("every level scheduled")?);
    }

    let mut csv = String::from(
        "level,h,dt,energy_err,max_l2,h1_term,neg_term,interp_energy_err,ratio,observed_order\n",
    );
    let mut prev_err: Option<f64> = None;
    for row in &rows {
        let err = row.report.energy_error;
        let order = match prev_err {
            Some(prev) if prev > EXACTNESS_FLOOR && err > EXACTNESS_FLOOR => {
                Some((prev / err).log2())
            }
            _ => None,
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.level,
            fmt_float(row.h),
            fmt_float(row.dt),
            fmt_float(err),
            fmt_float(row.report.max_l2_at_collocation),
            fmt_float(row.report.h1_term),
            fmt_float(row.report.neg_term),
            fmt_float(row.report.interpolant_energy_error),
            fmt_opt(row.report.quasi_optimality_ratio),
            fmt_opt(order),
        ));
        if verbose {
            println!(
                "level {}: energy_err = {} order = {}",
                row.level,
                fmt_float(err),
                order.map(fmt_float).unwrap_or_else(|| "-".into())
            );
        }
        prev_err = Some(err);
    }

    Ok(vec![write_atomic(&config.out_dir, "convergence.csv", &csv)?])
}

/// Build the moving mesh (no solve) and write node trajectory polylines:
/// per partition, rows `t x_0 ... x_n`, blocks separated by blank lines.
pub fn inspect_mesh(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let bench = load_benchmark(config)?;
    let motion = build_motion(config, &bench)?;
    let rule = build_rule(config.rule, config.p)?;
    let basis = TimeBasis::from_policy(config.basis, &rule);
    let grid = TimeGrid::uniform(bench.domain.t_final, config.partitions)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut text = String::new();
    let mut slice = MeshSlice::uniform(&bench.domain, config.elements, 0.0)
        .map_err(CliError::from_run_error)?;
    for i in 0..grid.partitions() {
        let interval = grid.interval(i);
        let partition = motion
            .build_partition(i, &slice, interval, &basis)
            .map_err(CliError::from_run_error)?;
        for (t, xs) in partition.export_rows(TRAJECTORY_SAMPLES - 1) {
            text.push_str(&fmt_float(t));
            for x in xs {
                text.push(' ');
                text.push_str(&fmt_float(x));
            }
            text.push('\n');
        }
        text.push('\n');
        slice = partition
            .slice(interval.1)
            .map_err(CliError::from_run_error)?;
    }

    Ok(vec![write_atomic(&config.out_dir, "trajectories.txt", &text)?])
}
