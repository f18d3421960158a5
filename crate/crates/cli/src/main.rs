//! Command-line front end: classify channels, evolve states, trace
//! information flow, and run the N-level conjecture scanner.

mod config;
mod emit;
mod schema;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{parse_config, preset, BuiltChannel, RunConfig};
use runitary::denmat::{
    apply_weighted_unitaries, entropy_of_eigenvalues, hermitian_eigvals, BlochDecomposition,
    DensityMatrix,
};
use runitary::oracle::{conjecture_scan, numeric_trace_distance_flow, verify_blp, EvolvableChannel};
use runitary::qubit::{classify, entropy_rate, intermediate_map_min_eig, trace_distance_flow};
use runitary::rate::QubitChannelSpec;
use runitary::weyl::{
    check_divisible_n, gamma_matrix, lambda_series_n, ngamma_conditions, WeylChannelSpec,
};

#[derive(Parser)]
#[command(
    name = "runitary",
    version,
    about = "Time-dependent random unitary channels: classification and numerical verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the divisibility / information-flow / entropy classifiers.
    Classify(CommonArgs),
    /// Evolve an initial state and emit its trajectory.
    Evolve(CommonArgs),
    /// Emit the trace-distance flow series for a state pair.
    Flow(CommonArgs),
    /// Run the N-level conjecture scanner.
    #[command(name = "scan-n")]
    ScanN(CommonArgs),
    /// Parse and validate a configuration, writing nothing.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to a JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration name (alternative to --config).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for report.json and CSV series.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the oracle seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of grid points.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Suppress the summary line on stdout.
    #[arg(long)]
    quiet: bool,
}

/// Exit codes: 0 success, 1 config error, 2 computation error.
const EXIT_CONFIG: u8 = 1;
const EXIT_COMPUTE: u8 = 2;

struct Failure {
    code: u8,
    message: String,
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: format!("config error: {e}"),
    }
}

fn compute_err(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_COMPUTE,
        message: format!("computation error: {e}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args = match &cli.command {
        Command::Classify(a)
        | Command::Evolve(a)
        | Command::Flow(a)
        | Command::ScanN(a)
        | Command::Validate(a) => a,
    };
    match run(&cli.command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(config_err)?
        }
        (None, Some(name)) => preset(name).map_err(config_err)?,
        _ => {
            return Err(config_err(
                "exactly one of --config PATH or --preset NAME is required",
            ))
        }
    };
    if let Some(points) = args.grid_points {
        let t_max = cfg
            .grid
            .as_ref()
            .map(|g| g.t_max)
            .unwrap_or(config::DEFAULT_T_MAX);
        cfg.grid = Some(config::GridConfig { t_max, points });
    }
    Ok(cfg)
}

fn effective_outputs(cfg: &RunConfig) -> Vec<String> {
    if cfg.outputs.is_empty() {
        vec!["report".to_string()]
    } else {
        cfg.outputs.clone()
    }
}

fn run(command: &Command, args: &CommonArgs) -> Result<(), Failure> {
    let cfg = load_config(args)?;
    let channel = cfg.build_channel().map_err(config_err)?;
    match command {
        Command::Validate(_) => {
            if !args.quiet {
                println!("config ok");
            }
            Ok(())
        }
        Command::Classify(_) => run_classify(&cfg, channel, args),
        Command::Evolve(_) => run_evolve(&cfg, channel, args),
        Command::Flow(_) => run_flow(&cfg, channel, args),
        Command::ScanN(_) => run_scan(&cfg, channel, args),
    }
}

fn write_report(out: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    if let Err(e) = schema::validate(value, &schema::report_schema()) {
        return Err(compute_err(format!("report fails shipped schema: {e}")));
    }
    let mut bytes = serde_json::to_vec_pretty(value).map_err(compute_err)?;
    bytes.push(b'\n');
    emit::atomic_write(&out.join("report.json"), &bytes).map_err(compute_err)
}

fn run_classify(cfg: &RunConfig, channel: BuiltChannel, args: &CommonArgs) -> Result<(), Failure> {
    let outputs = effective_outputs(cfg);
    match channel {
        BuiltChannel::Qubit(spec) => {
            let report = classify(&spec).map_err(compute_err)?;
            let oracle = match &cfg.oracle {
                Some(_) => Some(
                    verify_blp(&spec, &cfg.oracle_config(args.seed)).map_err(compute_err)?,
                ),
                None => None,
            };
            if !args.quiet {
                println!(
                    "divisible={} blp_monotone={} entropy_monotone={}",
                    report.divisible.holds, report.blp_monotone.holds, report.entropy_monotone.holds
                );
            }
            for which in &outputs {
                match which.as_str() {
                    "report" => {
                        let value = json!({
                            "kind": "classification",
                            "classification": report,
                            "oracle": oracle,
                        });
                        write_report(&args.out, &value)?;
                    }
                    _ => emit_qubit_series(cfg, &spec, &report, which, &args.out)?,
                }
            }
            Ok(())
        }
        BuiltChannel::Weyl(spec) => {
            let divisible = check_divisible_n(&spec).map_err(compute_err)?;
            let conds = ngamma_conditions(&spec).map_err(compute_err)?;
            let min_values: Vec<f64> = conds
                .values
                .iter()
                .map(|row| row.iter().cloned().fold(f64::INFINITY, f64::min))
                .collect();
            if !args.quiet {
                println!(
                    "divisible={} min_ngamma={:.6e}",
                    divisible.holds,
                    min_values.iter().cloned().fold(f64::INFINITY, f64::min)
                );
            }
            for which in &outputs {
                match which.as_str() {
                    "report" => {
                        let value = json!({
                            "kind": "weyl_classification",
                            "spec_summary": format!("weyl channel, N = {}", spec.dim),
                            "dim": spec.dim,
                            "grid": spec.grid,
                            "divisible": divisible,
                            "ngamma": {
                                "pairs": conds.pairs,
                                "min_values": min_values,
                            },
                        });
                        write_report(&args.out, &value)?;
                    }
                    "gamma" => {
                        let gs = gamma_matrix(&spec).map_err(compute_err)?;
                        let n = spec.dim;
                        let names: Vec<String> = std::iter::once("t".to_string())
                            .chain((0..n * n).map(|i| format!("g{}{}", i / n, i % n)))
                            .collect();
                        let header: Vec<&str> = names.iter().map(String::as_str).collect();
                        let rows: Vec<Vec<f64>> = spec
                            .grid
                            .times()
                            .zip(&gs)
                            .map(|(t, g)| std::iter::once(t).chain(g.iter().cloned()).collect())
                            .collect();
                        emit::write_csv(&args.out.join("gamma.csv"), &header, &rows)
                            .map_err(compute_err)?;
                    }
                    "lambda" => {
                        let ls = lambda_series_n(&spec).map_err(compute_err)?;
                        let n = spec.dim;
                        let names: Vec<String> = std::iter::once("t".to_string())
                            .chain(
                                (0..n * n).map(|i| format!("abs_lambda{}{}", i / n, i % n)),
                            )
                            .collect();
                        let header: Vec<&str> = names.iter().map(String::as_str).collect();
                        let rows: Vec<Vec<f64>> = spec
                            .grid
                            .times()
                            .zip(&ls)
                            .map(|(t, l)| {
                                std::iter::once(t)
                                    .chain(
                                        (0..n * n).map(|i| l[(i / n, i % n)].norm()),
                                    )
                                    .collect()
                            })
                            .collect();
                        emit::write_csv(&args.out.join("lambda.csv"), &header, &rows)
                            .map_err(compute_err)?;
                    }
                    other => {
                        return Err(config_err(format!(
                            "series '{other}' is not available for weyl channels"
                        )))
                    }
                }
            }
            Ok(())
        }
    }
}

fn default_bloch(cfg: &RunConfig) -> Result<BlochDecomposition, Failure> {
    match &cfg.initial_state {
        Some(st) => match (st.bloch, st.basis) {
            (Some([u, a, b]), None) => Ok(BlochDecomposition::new(u, a, b)),
            (None, Some(0)) => Ok(BlochDecomposition::new(0.5, 0.0, 0.0)),
            (None, Some(1)) => Ok(BlochDecomposition::new(-0.5, 0.0, 0.0)),
            _ => Err(config_err(
                "initial_state needs exactly one of 'bloch' or 'basis' (0 or 1 for qubits)",
            )),
        },
        None => Ok(BlochDecomposition::new(0.2, 0.2, 0.1)),
    }
}

fn qubit_entropy_rows(
    spec: &QubitChannelSpec,
    bloch: &BlochDecomposition,
) -> Result<Vec<Vec<f64>>, Failure> {
    let mut rows = Vec::with_capacity(spec.grid.n_points);
    for t in spec.grid.times() {
        let lam = spec.lambda_at(t).map_err(compute_err)?;
        let r = (lam[3] * lam[3] * bloch.u * bloch.u
            + lam[1] * lam[1] * bloch.a * bloch.a
            + lam[2] * lam[2] * bloch.b * bloch.b)
            .sqrt();
        let s = entropy_of_eigenvalues(&[0.5 + r, 0.5 - r]).map_err(compute_err)?;
        let rate = entropy_rate(spec, bloch, t).map_err(compute_err)?;
        rows.push(vec![t, s, rate]);
    }
    Ok(rows)
}

fn emit_qubit_series(
    cfg: &RunConfig,
    spec: &QubitChannelSpec,
    report: &runitary::qubit::ClassificationReport,
    which: &str,
    out: &Path,
) -> Result<(), Failure> {
    match which {
        "gamma" => {
            let rows: Vec<Vec<f64>> = report
                .times
                .iter()
                .zip(&report.gamma)
                .map(|(&t, g)| vec![t, g[0], g[1], g[2]])
                .collect();
            emit::write_csv(
                &out.join("gamma.csv"),
                &["t", "gamma1", "gamma2", "gamma3"],
                &rows,
            )
            .map_err(compute_err)
        }
        "lambda" => {
            let rows: Vec<Vec<f64>> = report
                .times
                .iter()
                .zip(&report.lambda)
                .map(|(&t, l)| vec![t, l[1], l[2], l[3]])
                .collect();
            emit::write_csv(
                &out.join("lambda.csv"),
                &["t", "lambda1", "lambda2", "lambda3"],
                &rows,
            )
            .map_err(compute_err)
        }
        "pairwise" => {
            let rows: Vec<Vec<f64>> = report
                .times
                .iter()
                .zip(&report.pairwise_sums)
                .map(|(&t, s)| vec![t, s[0], s[1], s[2]])
                .collect();
            emit::write_csv(
                &out.join("pairwise.csv"),
                &["t", "sum12", "sum23", "sum13"],
                &rows,
            )
            .map_err(compute_err)
        }
        "entropy" => {
            let bloch = default_bloch(cfg)?;
            let rows = qubit_entropy_rows(spec, &bloch)?;
            emit::write_csv(
                &out.join("entropy.csv"),
                &["t", "entropy", "entropy_rate"],
                &rows,
            )
            .map_err(compute_err)
        }
        "flow" => {
            let (rows, _, _) = qubit_flow_rows(cfg, spec)?;
            emit::write_csv(
                &out.join("flow.csv"),
                &["t", "sigma", "sigma_numeric"],
                &rows,
            )
            .map_err(compute_err)
        }
        "choi-min-eig" => {
            let mut rows = Vec::with_capacity(spec.grid.n_points);
            let times: Vec<f64> = spec.grid.times().collect();
            rows.push(vec![times[0], 0.0]); // V_{0,0} is the identity map
            for i in 1..times.len() {
                let m = intermediate_map_min_eig(spec, times[i - 1], times[i])
                    .map_err(compute_err)?;
                rows.push(vec![times[i], m]);
            }
            emit::write_csv(&out.join("choi-min-eig.csv"), &["t", "min_eig"], &rows)
                .map_err(compute_err)
        }
        other => Err(config_err(format!("unknown series '{other}'"))),
    }
}

fn flow_pair(cfg: &RunConfig) -> (BlochDecomposition, BlochDecomposition) {
    match &cfg.pair {
        Some(p) => (
            BlochDecomposition::new(p.bloch1[0], p.bloch1[1], p.bloch1[2]),
            BlochDecomposition::new(p.bloch2[0], p.bloch2[1], p.bloch2[2]),
        ),
        None => (
            BlochDecomposition::new(0.0, 0.3, 0.0),
            BlochDecomposition::new(0.0, -0.3, 0.0),
        ),
    }
}

/// Interior-grid flow series: analytic sigma plus an oracle central
/// difference. Returns (rows, max sigma, argmax time).
fn qubit_flow_rows(
    cfg: &RunConfig,
    spec: &QubitChannelSpec,
) -> Result<(Vec<Vec<f64>>, f64, f64), Failure> {
    let (b1, b2) = flow_pair(cfg);
    // Delta = sum_k x_k sigma_k for the difference of the two Bloch vectors.
    let x = [b1.a - b2.a, b1.b - b2.b, b1.u - b2.u];
    let r1 = b1.to_density().map_err(compute_err)?;
    let r2 = b2.to_density().map_err(compute_err)?;
    let h = cfg.oracle_config(None).fd_step;
    let times: Vec<f64> = spec.grid.times().collect();
    let mut rows = Vec::new();
    let mut max_sigma = f64::NEG_INFINITY;
    let mut max_t = times[0];
    for &t in &times[1..times.len() - 1] {
        let sigma = trace_distance_flow(spec, x, t).map_err(compute_err)?;
        let numeric = numeric_trace_distance_flow(spec, &r1, &r2, t, h).map_err(compute_err)?;
        if sigma > max_sigma {
            max_sigma = sigma;
            max_t = t;
        }
        rows.push(vec![t, sigma, numeric]);
    }
    Ok((rows, max_sigma, max_t))
}

fn run_evolve(cfg: &RunConfig, channel: BuiltChannel, args: &CommonArgs) -> Result<(), Failure> {
    match channel {
        BuiltChannel::Qubit(spec) => {
            let bloch = default_bloch(cfg)?;
            let mut rows = Vec::with_capacity(spec.grid.n_points);
            for t in spec.grid.times() {
                let lam = spec.lambda_at(t).map_err(compute_err)?;
                let (u, a, b) = (lam[3] * bloch.u, lam[1] * bloch.a, lam[2] * bloch.b);
                let r = (u * u + a * a + b * b).sqrt();
                let s = entropy_of_eigenvalues(&[0.5 + r, 0.5 - r]).map_err(compute_err)?;
                rows.push(vec![t, u, a, b, s]);
            }
            let final_entropy = rows.last().map(|r| r[4]).unwrap_or(0.0);
            emit::write_csv(
                &args.out.join("trajectory.csv"),
                &["t", "u", "a", "b", "entropy"],
                &rows,
            )
            .map_err(compute_err)?;
            write_report(
                &args.out,
                &json!({"kind": "evolve", "final_entropy": final_entropy}),
            )?;
            if !args.quiet {
                println!("final_entropy={final_entropy:.6}");
            }
            Ok(())
        }
        BuiltChannel::Weyl(spec) => {
            let k = match &cfg.initial_state {
                Some(st) => match (st.bloch, st.basis) {
                    (None, Some(k)) if k < spec.dim => k,
                    _ => {
                        return Err(config_err(
                            "weyl evolve needs initial_state.basis < N",
                        ))
                    }
                },
                None => 0,
            };
            let rho0 = DensityMatrix::basis_state(spec.dim, k);
            let unitaries = spec.unitaries();
            let mut rows = Vec::with_capacity(spec.grid.n_points);
            for t in spec.grid.times() {
                let w = spec.weights_at(t).map_err(compute_err)?;
                let m = apply_weighted_unitaries(&w, &unitaries, rho0.mat());
                let eigs = hermitian_eigvals(&m).map_err(compute_err)?;
                let s = entropy_of_eigenvalues(&eigs).map_err(compute_err)?;
                rows.push(vec![t, s]);
            }
            let final_entropy = rows.last().map(|r| r[1]).unwrap_or(0.0);
            emit::write_csv(&args.out.join("trajectory.csv"), &["t", "entropy"], &rows)
                .map_err(compute_err)?;
            write_report(
                &args.out,
                &json!({"kind": "evolve", "final_entropy": final_entropy}),
            )?;
            if !args.quiet {
                println!("final_entropy={final_entropy:.6}");
            }
            Ok(())
        }
    }
}

fn run_flow(cfg: &RunConfig, channel: BuiltChannel, args: &CommonArgs) -> Result<(), Failure> {
    let BuiltChannel::Qubit(spec) = channel else {
        return Err(config_err(
            "flow requires a qubit channel; use scan-n for N-level specs",
        ));
    };
    let (rows, max_sigma, max_t) = qubit_flow_rows(cfg, &spec)?;
    emit::write_csv(
        &args.out.join("flow.csv"),
        &["t", "sigma", "sigma_numeric"],
        &rows,
    )
    .map_err(compute_err)?;
    write_report(
        &args.out,
        &json!({"kind": "flow", "max_sigma": max_sigma, "max_sigma_t": max_t}),
    )?;
    if !args.quiet {
        println!("max_sigma={max_sigma:.6e} at t={max_t:.6}");
    }
    Ok(())
}

fn run_scan(cfg: &RunConfig, channel: BuiltChannel, args: &CommonArgs) -> Result<(), Failure> {
    let BuiltChannel::Weyl(spec) = channel else {
        return Err(config_err("scan-n requires a weyl channel with N >= 3"));
    };
    let ocfg = cfg.oracle_config(args.seed);
    check_scan_spec(&spec).map_err(config_err)?;
    let report = conjecture_scan(&spec, &ocfg).map_err(compute_err)?;
    write_report(&args.out, &json!({"kind": "scan", "oracle": report}))?;
    if !args.quiet {
        println!(
            "max_flow={:.6e} counterexample_candidate={}",
            report.max_positive_flow, report.counterexample_candidate
        );
    }
    Ok(())
}

fn check_scan_spec(spec: &WeylChannelSpec) -> anyhow::Result<()> {
    if spec.dim < 3 {
        return Err(anyhow!("conjecture scan requires N >= 3, got {}", spec.dim));
    }
    Ok(())
}
