use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eqr_cli::config::{ExtrapolationMethod, InputKind, ReturnConvention};
use eqr_cli::error::{CliError, CliResult};
use eqr_cli::pipeline::{coefficient_rows, extrapolation_outputs, hill_rows, load_dataset, run_pipeline};
use eqr_cli::report::{emit_report, fmt_num, write_coefficients, write_extrapolation, write_hill};
use eqr_cli::ReportConfig;
use eqr_core::mc_lab::{
    approximation_quality_study, coverage_study, negative_control_study, CoverageMethod, Law, SimDesign, DECILES,
};
use eqr_core::qr_core::fit_qr_process;

#[derive(Parser)]
#[command(name = "eqr", version, about = "Extremal quantile regression reports")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the configuration file.
#[derive(Args)]
struct CommonArgs {
    /// TOML report configuration.
    #[arg(long, global = true, env = "EQR_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "EQR_INPUT")]
    input: Option<PathBuf>,
    #[arg(long, global = true, env = "EQR_DATE_COLUMN")]
    date_column: Option<String>,
    #[arg(long, global = true, env = "EQR_RESPONSE")]
    response: Option<String>,
    #[arg(long, global = true, env = "EQR_COVARIATES", value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    #[arg(long, global = true, env = "EQR_LAG")]
    lag: Option<u8>,
    /// `returns` or `prices`.
    #[arg(long, global = true, env = "EQR_INPUT_KIND")]
    input_kind: Option<String>,
    /// `simple` or `log`, for price input.
    #[arg(long, global = true, env = "EQR_RETURN_CONVENTION")]
    return_convention: Option<String>,
    #[arg(long, global = true, env = "EQR_TAU_GRID", value_delimiter = ',')]
    tau_grid: Option<Vec<f64>>,
    #[arg(long, global = true, env = "EQR_TAIL_TAUS", value_delimiter = ',')]
    tail_taus: Option<Vec<f64>>,
    #[arg(long, global = true, env = "EQR_EXTRAPOLATION_TAUS", value_delimiter = ',')]
    extrapolation_taus: Option<Vec<f64>>,
    #[arg(long, global = true, env = "EQR_ANCHOR")]
    anchor: Option<f64>,
    /// `dekkers_de_haan` or `he_et_al`.
    #[arg(long, global = true, env = "EQR_EXTRAPOLATION_METHOD")]
    extrapolation_method: Option<String>,
    #[arg(long, global = true, env = "EQR_SEED")]
    seed: Option<u64>,
    /// Number of subsamples and bootstrap draws (S).
    #[arg(long, global = true, env = "EQR_SUBSAMPLES")]
    subsamples: Option<usize>,
    /// Subsample size (b).
    #[arg(long, global = true, env = "EQR_SUBSAMPLE_SIZE")]
    subsample_size: Option<usize>,
    /// Spacing parameter (p).
    #[arg(long, global = true, env = "EQR_SPACING_P")]
    spacing_p: Option<f64>,
    #[arg(long, global = true, env = "EQR_LEVEL")]
    level: Option<f64>,
    /// Random subsets instead of contiguous blocks.
    #[arg(long, global = true, env = "EQR_INDEPENDENT")]
    independent: bool,
    #[arg(long, global = true, env = "EQR_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Worker threads (defaults to all cores); outputs do not depend on it.
    #[arg(long, global = true, env = "EQR_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// QR coefficients over the tau grid.
    Fit,
    /// Hill table with bootstrap bias correction.
    Tails,
    /// Coefficients with extremal and normal intervals.
    Inference,
    /// Extrapolated coefficients for very extreme quantiles.
    Extrapolate,
    /// Monte Carlo studies.
    Simulate(SimulateArgs),
    /// Full pipeline; writes all report files to the output directory.
    Report,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    /// Sample-quantile law versus EV and normal approximations.
    Figure1,
    /// Coverage of extremal-subsampling and normal intervals.
    Coverage,
    /// Draw variance under conventional and extremal recentering.
    NegativeControl,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Cauchy,
    StudentT,
    Pareto,
    Uniform,
    Gev,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(value_enum)]
    study: Study,
    #[arg(long, value_enum, default_value = "cauchy")]
    law: LawArg,
    /// Degrees of freedom for the t law.
    #[arg(long, default_value_t = 3.0)]
    nu: f64,
    /// EV index for the Pareto and GEV laws.
    #[arg(long, default_value_t = 1.0)]
    xi: f64,
    /// Sample size T.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Monte Carlo replications.
    #[arg(long)]
    replications: Option<usize>,
    /// Fewer replications (1,000 for the approximation study).
    #[arg(long)]
    fast: bool,
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
}

fn parse_choice<T: serde::de::DeserializeOwned>(name: &str, v: &str) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|_| CliError::Config(format!("invalid value '{v}' for {name}")))
}

fn resolve_config(a: &CommonArgs) -> CliResult<ReportConfig> {
    let mut cfg = match &a.config {
        Some(p) => ReportConfig::load(p)?,
        None => ReportConfig::default(),
    };
    macro_rules! set {
        ($field:ident, $value:expr) => {
            if let Some(v) = $value {
                cfg.$field = v;
            }
        };
    }
    set!(input_path, a.input.clone());
    set!(date_column, a.date_column.clone());
    set!(response_column, a.response.clone());
    set!(covariate_columns, a.covariates.clone());
    set!(lag, a.lag);
    set!(tau_grid, a.tau_grid.clone());
    set!(tail_taus, a.tail_taus.clone());
    set!(extrapolation_taus, a.extrapolation_taus.clone());
    set!(seed, a.seed);
    set!(subsamples, a.subsamples);
    set!(spacing_p, a.spacing_p);
    set!(level, a.level);
    set!(output_dir, a.output_dir.clone());
    if let Some(v) = &a.input_kind {
        cfg.input_kind = parse_choice::<InputKind>("input kind", v)?;
    }
    if let Some(v) = &a.return_convention {
        cfg.return_convention = parse_choice::<ReturnConvention>("return convention", v)?;
    }
    if let Some(v) = &a.extrapolation_method {
        cfg.extrapolation_method = parse_choice::<ExtrapolationMethod>("extrapolation method", v)?;
    }
    if a.anchor.is_some() {
        cfg.extrapolation_anchor = a.anchor;
    }
    if a.subsample_size.is_some() {
        cfg.subsample_size = a.subsample_size;
    }
    if a.independent {
        cfg.dependent = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn law(s: &SimulateArgs) -> Law {
    match s.law {
        LawArg::Cauchy => Law::Cauchy,
        LawArg::StudentT => Law::StudentT { nu: s.nu },
        LawArg::Pareto => Law::ExactPareto { xi: s.xi },
        LawArg::Uniform => Law::Uniform,
        LawArg::Gev => Law::GevBootstrap { xi: s.xi },
    }
}

fn core(stage: &'static str) -> impl Fn(eqr_core::Error) -> CliError {
    move |source| CliError::Stage { stage, source }
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write output: {e}"))
}

fn simulate(s: &SimulateArgs, seed: u64, out: &mut impl Write) -> CliResult<()> {
    let law = law(s);
    match s.study {
        Study::Figure1 => {
            let n = s.sample_size.unwrap_or(200);
            let n_mc = s.replications.unwrap_or(if s.fast { 1000 } else { 10_000 });
            let taus = s.taus.clone().unwrap_or_else(|| vec![0.025, 0.2, 0.3]);
            let rows = approximation_quality_study(&SimDesign::marginal(law, n, seed), &taus, n_mc).map_err(core("simulate"))?;
            writeln!(out, "tau,k,probability,exact,ev,normal,ev_discrepancy,normal_discrepancy").map_err(out_err)?;
            for r in rows {
                for (i, p) in DECILES.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        fmt_num(r.tau),
                        fmt_num(r.k),
                        fmt_num(*p),
                        fmt_num(r.exact[i]),
                        fmt_num(r.ev[i]),
                        fmt_num(r.normal[i]),
                        fmt_num(r.ev_discrepancy),
                        fmt_num(r.normal_discrepancy)
                    )
                    .map_err(out_err)?;
                }
            }
        }
        Study::Coverage => {
            let n = s.sample_size.unwrap_or(1000);
            let n_mc = s.replications.unwrap_or(if s.fast { 100 } else { 500 });
            let design = SimDesign::marginal(law, n, seed);
            writeln!(out, "method,tau,level,coverage,mean_width,median_raw_bias,median_corrected_bias,valid,skipped")
                .map_err(out_err)?;
            for tau in s.taus.clone().unwrap_or_else(|| vec![5.0 / n as f64]) {
                for (name, method) in [("extremal_subsampling", CoverageMethod::subsampling(500)), ("normal", CoverageMethod::Normal)] {
                    let r = coverage_study(&design, method, tau, 0.9, n_mc).map_err(core("simulate"))?;
                    writeln!(
                        out,
                        "{name},{},{},{},{},{},{},{},{}",
                        fmt_num(tau),
                        fmt_num(r.level),
                        fmt_num(r.coverage),
                        fmt_num(r.mean_width),
                        fmt_num(r.median_raw_bias()),
                        fmt_num(r.median_corrected_bias()),
                        r.valid,
                        r.skipped
                    )
                    .map_err(out_err)?;
                }
            }
        }
        Study::NegativeControl => {
            let n_data = s.replications.unwrap_or(if s.fast { 10 } else { 25 });
            let design = SimDesign::marginal(law, 500, seed);
            let rows = negative_control_study(&design, 5.0, &[500, 2000, 8000], n_data, 500).map_err(core("simulate"))?;
            writeln!(out, "T,b,conventional_variance,extremal_variance").map_err(out_err)?;
            for r in rows {
                writeln!(out, "{},{},{},{}", r.t, r.b, fmt_num(r.conventional_variance), fmt_num(r.extremal_variance))
                    .map_err(out_err)?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Command::Simulate(s) = &cli.command {
        return simulate(s, cli.common.seed.unwrap_or(1), &mut out);
    }
    let cfg = resolve_config(&cli.common)?;
    let mut skipped = Default::default();
    match cli.command {
        Command::Fit => {
            let data = load_dataset(&cfg)?;
            let fits = fit_qr_process(&data, &cfg.tau_grid).map_err(core("fit"))?;
            writeln!(out, "tau,variable,estimate").map_err(out_err)?;
            for f in fits {
                for (name, b) in data.column_names().iter().zip(&f.beta) {
                    writeln!(out, "{},{name},{}", fmt_num(f.tau), fmt_num(*b)).map_err(out_err)?;
                }
            }
        }
        Command::Tails => write_hill(&mut out, &hill_rows(&load_dataset(&cfg)?, &cfg, &mut skipped)?)?,
        Command::Inference => write_coefficients(&mut out, &coefficient_rows(&load_dataset(&cfg)?, &cfg, &mut skipped)?)?,
        Command::Extrapolate => write_extrapolation(&mut out, &extrapolation_outputs(&load_dataset(&cfg)?, &cfg)?.0)?,
        Command::Report => {
            let bundle = run_pipeline(&cfg)?;
            emit_report(&bundle, &cfg.output_dir)?;
            writeln!(out, "{}", cfg.output_dir.display()).map_err(out_err)?;
        }
        Command::Simulate(_) => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
