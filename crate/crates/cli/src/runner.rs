//! Command execution: maps a validated [`RunSpec`] to a CSV table plus
//! stderr-bound summary notes.
//!
//! Output rules: UTF-8, `.` decimal separator, `\n` line endings, every
//! numeric cell printed with 12 significant digits so tables diff cleanly
//! across runs. The column set is a pure function of the command and the
//! sweep variable, never of the computed values.

use noma_meta_core::analytic::{
    cell_throughput, ce_moment_bounds, matched_ce_rate_rho, mean_local_delay,
    mean_local_delay_cc_alt_exponent, success_moment, MetaCurve,
};
use noma_meta_core::meta::{EstimatorRegistry, McSettings, MetaContext};
use noma_meta_core::model::{NetworkParams, NomaConfig, Scheme, UserClass};
use noma_meta_core::simulate::{
    default_window_radius, default_x_grid, empirical_ccdf, empirical_moment, run_experiment,
    SimConfig,
};

use crate::config::{CommandKind, ConfigError, RunSpec, SweepVar};

/// Anything that can stop a run.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] noma_meta_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// What a command produced: the CSV table, human-readable notes, and
/// whether a validation check failed (drives the exit code).
#[derive(Debug)]
pub struct RunOutcome {
    pub csv: String,
    pub summary: Vec<String>,
    pub failed: bool,
}

/// Render one numeric cell with 12 significant digits; infinities are
/// spelled out so divergence survives the trip through a CSV file.
pub fn format_value(value: f64) -> String {
    if value.is_nan() {
        "nan".to_string()
    } else if value == f64::INFINITY {
        "inf".to_string()
    } else if value == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{value:.11e}")
    }
}

/// Column set for a command; depends only on the command and the sweep
/// variable so downstream parsers can rely on it.
pub fn csv_columns(command: CommandKind, sweep: Option<SweepVar>) -> Vec<&'static str> {
    match command {
        CommandKind::Moments => vec![
            sweep.unwrap_or(SweepVar::Theta).label(),
            "m1_cc_noma",
            "m2_cc_noma",
            "m1_ce_noma",
            "m2_ce_noma",
            "m1_cc_oma",
            "m2_cc_oma",
            "m1_ce_oma",
            "m2_ce_oma",
            "m1_ce_lb",
            "m1_ce_ub",
        ],
        CommandKind::Meta => vec![
            "x",
            "ccdf_cc_beta",
            "ccdf_cc_gilpelaez",
            "ccdf_cc_empirical",
            "ccdf_ce_beta",
            "ccdf_ce_gilpelaez",
            "ccdf_ce_empirical",
        ],
        CommandKind::Delay => vec![
            sweep.unwrap_or(SweepVar::Theta).label(),
            "delay_cc_noma",
            "delay_cc_noma_alt",
            "delay_ce_noma",
            "delay_cc_oma",
            "delay_ce_oma",
        ],
        CommandKind::Throughput => {
            let mut columns = vec![sweep.unwrap_or(SweepVar::Tau).label()];
            // The time-share column would duplicate the axis when the run
            // sweeps it.
            if sweep != Some(SweepVar::Rho) {
                columns.push("rho");
            }
            columns.extend([
                "rate_cc_noma",
                "rate_ce_noma",
                "throughput_noma",
                "rate_cc_oma",
                "rate_ce_oma",
                "throughput_oma",
                "feasible",
            ]);
            columns
        }
        CommandKind::Simulate => vec!["x", "ccdf_cc_empirical", "ccdf_ce_empirical"],
        CommandKind::Validate => {
            vec!["quantity", "analytic", "empirical", "std_error", "z", "pass"]
        }
    }
}

fn render_csv(columns: &[&'static str], rows: &[Vec<String>]) -> String {
    let mut text = columns.join(",");
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

/// The axis a command iterates over: the configured sweep, or a single
/// point at the fixed value of `default_var`.
fn sweep_axis(spec: &RunSpec, default_var: SweepVar) -> (SweepVar, Vec<f64>) {
    match spec.sweep {
        Some(sweep) => (sweep.variable, sweep.points()),
        None => {
            let value = match default_var {
                SweepVar::Theta => spec.theta.expect("validated: theta fixed when not swept"),
                SweepVar::Tau => spec.tau,
                SweepVar::X | SweepVar::Rho => {
                    unreachable!("x and rho axes are handled by their commands")
                }
            };
            (default_var, vec![value])
        }
    }
}

/// Parameters at one axis point; variables other than `var` stay fixed.
fn point_params(
    spec: &RunSpec,
    var: SweepVar,
    value: f64,
) -> Result<(NetworkParams, NomaConfig), CliError> {
    let tau = if var == SweepVar::Tau { value } else { spec.tau };
    let theta = if var == SweepVar::Theta {
        value
    } else {
        spec.theta.expect("validated: theta fixed when not swept")
    };
    let net = NetworkParams::new(spec.lambda_b, spec.alpha, tau)?;
    let (beta_c, beta_e) = spec.beta_linear();
    let cfg = NomaConfig::new(theta, beta_c, beta_e)?;
    Ok((net, cfg))
}

fn fixed_params(spec: &RunSpec) -> Result<(NetworkParams, NomaConfig), CliError> {
    let net = NetworkParams::new(spec.lambda_b, spec.alpha, spec.tau)?;
    let (beta_c, beta_e) = spec.beta_linear();
    let theta = spec
        .theta
        .expect("validated: theta required when the command cannot sweep it");
    Ok((net, NomaConfig::new(theta, beta_c, beta_e)?))
}

fn run_moments(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let (var, values) = sweep_axis(spec, SweepVar::Theta);
    let columns = csv_columns(CommandKind::Moments, spec.sweep.map(|s| s.variable));
    let mut rows = Vec::with_capacity(values.len());
    for &value in &values {
        let (net, cfg) = point_params(spec, var, value)?;
        let feasible = cfg.is_feasible();
        let mut row = vec![format_value(value)];
        for scheme in [Scheme::Noma, Scheme::Oma] {
            for class in [UserClass::CellCenter, UserClass::CellEdge] {
                for order in [1.0, 2.0] {
                    // An unserved edge user never succeeds, so every moment
                    // of its conditional success probability is zero.
                    let moment = if scheme == Scheme::Noma && !feasible {
                        0.0
                    } else {
                        success_moment(&net, &cfg, class, scheme, order)?
                    };
                    row.push(format_value(moment));
                }
            }
        }
        let (lower, upper) = if feasible {
            ce_moment_bounds(&net, &cfg, Scheme::Noma, 1.0)?
        } else {
            (0.0, 0.0)
        };
        row.push(format_value(lower));
        row.push(format_value(upper));
        rows.push(row);
    }
    Ok(RunOutcome { csv: render_csv(&columns, &rows), summary: Vec::new(), failed: false })
}

fn run_delay(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let (var, values) = sweep_axis(spec, SweepVar::Theta);
    let columns = csv_columns(CommandKind::Delay, spec.sweep.map(|s| s.variable));
    let mut rows = Vec::with_capacity(values.len());
    let mut max_alt_deviation: f64 = 0.0;
    let mut finiteness_disagreements = 0usize;
    for &value in &values {
        let (net, cfg) = point_params(spec, var, value)?;
        let (cc_noma, cc_alt, ce_noma) = if cfg.is_feasible() {
            let primary =
                mean_local_delay(&net, &cfg, UserClass::CellCenter, Scheme::Noma)?;
            let alt =
                mean_local_delay_cc_alt_exponent(net.tau, net.delta(), cfg.chi_c()?);
            let edge = mean_local_delay(&net, &cfg, UserClass::CellEdge, Scheme::Noma)?;
            (primary, alt, edge)
        } else {
            // No feasible split: retransmissions never stop.
            (f64::INFINITY, f64::INFINITY, f64::INFINITY)
        };
        let cc_oma = mean_local_delay(&net, &cfg, UserClass::CellCenter, Scheme::Oma)?;
        let ce_oma = mean_local_delay(&net, &cfg, UserClass::CellEdge, Scheme::Oma)?;
        if cc_noma.is_finite() && cc_alt.is_finite() {
            max_alt_deviation = max_alt_deviation.max((cc_alt - cc_noma).abs() / cc_noma);
        } else if cc_noma.is_finite() != cc_alt.is_finite() {
            finiteness_disagreements += 1;
        }
        rows.push(vec![
            format_value(value),
            format_value(cc_noma),
            format_value(cc_alt),
            format_value(ce_noma),
            format_value(cc_oma),
            format_value(ce_oma),
        ]);
    }
    let mut summary = Vec::new();
    if spec.compare_printed {
        summary.push(format!(
            "center-user delay: alternative threshold exponent deviates from the \
             primary form by up to {:.4}% over {} axis points",
            100.0 * max_alt_deviation,
            values.len()
        ));
        if finiteness_disagreements > 0 {
            summary.push(format!(
                "center-user delay: the two forms disagree on divergence at \
                 {finiteness_disagreements} axis points"
            ));
        }
    }
    Ok(RunOutcome { csv: render_csv(&columns, &rows), summary, failed: false })
}

fn run_throughput(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let (var, values) = sweep_axis(spec, SweepVar::Tau);
    let columns = csv_columns(CommandKind::Throughput, spec.sweep.map(|s| s.variable));
    let mut rows = Vec::with_capacity(values.len());
    let mut matched_range: Option<(f64, f64)> = None;
    for &value in &values {
        let (net, cfg) = point_params(spec, var, value)?;
        let rho = if var == SweepVar::Rho {
            value
        } else if let Some(rho) = spec.rho {
            rho
        } else if cfg.is_feasible() {
            // Default to the share that grants the orthogonal edge user the
            // same rate the superposed one gets.
            let matched = matched_ce_rate_rho(&net, &cfg)?;
            matched_range = Some(match matched_range {
                None => (matched, matched),
                Some((lo, hi)) => (lo.min(matched), hi.max(matched)),
            });
            matched
        } else {
            0.5
        };
        let noma = cell_throughput(&net, &cfg, Scheme::Noma, rho)?;
        let oma = cell_throughput(&net, &cfg, Scheme::Oma, rho)?;
        let mut row = vec![format_value(value)];
        if var != SweepVar::Rho {
            row.push(format_value(rho));
        }
        for rate in [noma.cc_rate, noma.ce_rate, noma.total, oma.cc_rate, oma.ce_rate, oma.total]
        {
            row.push(format_value(rate));
        }
        row.push(if noma.feasible { "1" } else { "0" }.to_string());
        rows.push(row);
    }
    let mut summary = Vec::new();
    if let Some((lo, hi)) = matched_range {
        summary.push(format!(
            "orthogonal time share matched to the superposed edge rate: \
             rho in [{:.6}, {:.6}]",
            lo, hi
        ));
    }
    Ok(RunOutcome { csv: render_csv(&columns, &rows), summary, failed: false })
}

fn reliability_grid(spec: &RunSpec) -> Vec<f64> {
    match spec.sweep {
        Some(sweep) => sweep.points(),
        None => default_x_grid(101),
    }
}

fn run_meta(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let x_grid = reliability_grid(spec);
    let (net, cfg) = fixed_params(spec)?;
    let mc = McSettings {
        n_realizations: spec.n_realizations,
        seed: spec.seed,
        window_radius: spec.window_radius,
    };
    let registry = EstimatorRegistry::with_builtins();
    let mut curves: Vec<MetaCurve> = Vec::new();
    let mut summary = Vec::new();
    for class in [UserClass::CellCenter, UserClass::CellEdge] {
        let ctx = MetaContext {
            net,
            cfg,
            class,
            scheme: spec.scheme,
            x_grid: x_grid.clone(),
            mc: Some(mc.clone()),
        };
        for name in ["beta", "gilpelaez", "empirical"] {
            let estimator = registry.get(name).expect("built-in estimator");
            curves.push(estimator.estimate(&ctx)?);
        }
        let fitted = &curves[curves.len() - 3];
        let inverted = &curves[curves.len() - 2];
        summary.push(format!(
            "{}: sup |beta - gilpelaez| = {:.3e}",
            class.label(),
            fitted.sup_distance(inverted)?
        ));
    }
    let columns = csv_columns(CommandKind::Meta, spec.sweep.map(|s| s.variable));
    let rows: Vec<Vec<String>> = x_grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut row = vec![format_value(x)];
            row.extend(curves.iter().map(|curve| format_value(curve.ccdf()[i])));
            row
        })
        .collect();
    Ok(RunOutcome { csv: render_csv(&columns, &rows), summary, failed: false })
}

fn run_simulate(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let x_grid = reliability_grid(spec);
    let (net, cfg) = fixed_params(spec)?;
    let mut sim = SimConfig::new(net, cfg, spec.scheme, spec.n_realizations, spec.seed)?
        .with_x_grid(x_grid.clone());
    if let Some(radius) = spec.window_radius {
        sim = sim.with_window_radius(radius)?;
    }
    let outcome = run_experiment(&sim)?;
    let center = empirical_ccdf(&outcome.samples_cc, &x_grid)?;
    let edge = empirical_ccdf(&outcome.samples_ce, &x_grid)?;
    let columns = csv_columns(CommandKind::Simulate, spec.sweep.map(|s| s.variable));
    let rows: Vec<Vec<String>> = x_grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            vec![
                format_value(x),
                format_value(center.ccdf()[i]),
                format_value(edge.ccdf()[i]),
            ]
        })
        .collect();
    let summary = vec![format!(
        "classified {} center and {} edge realizations ({} degenerate draws resampled)",
        outcome.class_counts.0, outcome.class_counts.1, outcome.degenerate_draws
    )];
    Ok(RunOutcome { csv: render_csv(&columns, &rows), summary, failed: false })
}

struct ValidationRow {
    quantity: String,
    analytic: f64,
    empirical: f64,
    std_error: f64,
}

impl ValidationRow {
    fn z_score(&self) -> f64 {
        let gap = self.empirical - self.analytic;
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

fn run_validate(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let (net, cfg) = fixed_params(spec)?;
    // A window twice the usual size keeps truncation bias well below the
    // Monte Carlo noise this command is judging against.
    let window = spec
        .window_radius
        .unwrap_or_else(|| 2.0 * default_window_radius(spec.lambda_b));
    let mut checks = Vec::new();

    let sim = SimConfig::new(net, cfg, Scheme::Noma, spec.n_realizations, spec.seed)?
        .with_window_radius(window)?;
    let noma = run_experiment(&sim)?;

    let n = spec.n_realizations as f64;
    let p_cc = net.cc_probability();
    checks.push(ValidationRow {
        quantity: "cc_fraction".into(),
        analytic: p_cc,
        empirical: noma.class_counts.0 as f64 / n,
        std_error: (p_cc * (1.0 - p_cc) / n).sqrt(),
    });

    let oma_sim = SimConfig::new(net, cfg, Scheme::Oma, spec.n_realizations, spec.seed)?
        .with_window_radius(window)?;
    let oma = run_experiment(&oma_sim)?;

    let class_sets = [
        (Scheme::Noma, &noma),
        (Scheme::Oma, &oma),
    ];
    for (scheme, outcome) in class_sets {
        for (class, samples) in [
            (UserClass::CellCenter, &outcome.samples_cc),
            (UserClass::CellEdge, &outcome.samples_ce),
        ] {
            for order in [1u32, 2] {
                let analytic = if scheme == Scheme::Noma && !cfg.is_feasible() {
                    0.0
                } else {
                    success_moment(&net, &cfg, class, scheme, order as f64)?
                };
                let (empirical, std_error) = empirical_moment(samples, order)?;
                checks.push(ValidationRow {
                    quantity: format!("m{}_{}_{}", order, class.label(), scheme.label()),
                    analytic,
                    empirical,
                    std_error,
                });
            }
        }
    }

    let columns = csv_columns(CommandKind::Validate, None);
    let mut rows = Vec::with_capacity(checks.len());
    let mut summary = Vec::new();
    let mut passed = 0usize;
    for check in &checks {
        let z = check.z_score();
        let pass = z.abs() <= 3.0;
        if pass {
            passed += 1;
        } else {
            summary.push(format!(
                "{}: |z| = {:.2} exceeds 3 (analytic {:.6}, empirical {:.6})",
                check.quantity,
                z.abs(),
                check.analytic,
                check.empirical
            ));
        }
        rows.push(vec![
            check.quantity.clone(),
            format_value(check.analytic),
            format_value(check.empirical),
            format_value(check.std_error),
            format_value(z),
            if pass { "PASS" } else { "FAIL" }.to_string(),
        ]);
    }
    summary.push(format!("{passed}/{} checks within 3 standard errors", checks.len()));
    let failed = passed < checks.len();
    Ok(RunOutcome { csv: render_csv(&columns, &rows), summary, failed })
}

/// Run the command a spec describes.
pub fn execute(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    match spec.command {
        CommandKind::Moments => run_moments(spec),
        CommandKind::Meta => run_meta(spec),
        CommandKind::Delay => run_delay(spec),
        CommandKind::Throughput => run_throughput(spec),
        CommandKind::Simulate => run_simulate(spec),
        CommandKind::Validate => run_validate(spec),
    }
}
