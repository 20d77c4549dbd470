//! Command-line front end: flag definitions, validation, dispatch, and the
//! exit-code mapping. Every run is a pure function of its input file, flags,
//! and seed, and writes byte-identical output files on repetition.

use super::data::{load_csv, rank_transform};
use super::output::{
    write_aw_csv, write_comparison_csv, write_curve_csv, write_precision_csv, write_sample_csv,
    AwRow, FitRecord,
};
use crate::dependence::{
    aw_probability_empirical, aw_probability_model_with, bootstrap_band, default_r_grid,
    lambda_model_with, model_curve, precision_report, CurveSource, DependenceCurve, RayWeights,
    TailEstimator, DEFAULT_BOOTSTRAP_B, DEFAULT_CONFIDENCE, DEFAULT_NEAR_ZERO_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::inference::{compare, fit, FitOptions, FitResult};
use crate::model::{simulate, CopulaSample, MixtureParameters};
use crate::numerics::IntegrationConfig;
use crate::refcopulas::{
    sample_asymmetric_logistic, sample_inverted_logistic, sample_logistic, AsymmetricLogisticSpec,
    LogisticSpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::{Path, PathBuf};

/// Gaussian mixture copulas: fitting, simulation, and extremal dependence
/// diagnostics.
#[derive(Parser, Debug)]
#[command(name = "gmcopula", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit the copula for one or more component counts and compare by AIC
    Fit(FitArgs),
    /// Draw a seeded sample from a fitted model or a reference copula
    Simulate(SimulateArgs),
    /// Write model and empirical tail dependence curves
    Diagnose(DiagnoseArgs),
    /// Conditional joint-extreme-region probabilities across rays
    Aw(AwArgs),
    /// Per-component precision entries with near-zero flags
    Precision(PrecisionArgs),
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Input CSV: header row, numeric body, comma separated
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for output files, created if absent
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    /// Component count to fit; repeat the flag for several candidates
    #[arg(long = "k", default_values_t = [1])]
    pub k: Vec<usize>,
    /// Share means and scales across coordinates within each component
    #[arg(long)]
    pub exchangeable: bool,
    /// Master seed; all randomized subsystems derive from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceCopula {
    /// Extreme value copula with logistic dependence
    Logistic,
    /// Its survival copula, asymptotically independent
    InvertedLogistic,
    /// Bivariate asymmetric logistic copula
    AsymmetricLogistic,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Fitted model record to sample from
    #[arg(long, conflicts_with = "copula", required_unless_present = "copula")]
    pub theta: Option<PathBuf>,
    /// Reference copula family to sample from instead
    #[arg(long, value_enum)]
    pub copula: Option<ReferenceCopula>,
    /// Dependence parameter for the reference families
    #[arg(long, requires = "copula")]
    pub alpha: Option<f64>,
    /// First asymmetry parameter of the asymmetric logistic family
    #[arg(long, requires = "copula")]
    pub t1: Option<f64>,
    /// Second asymmetry parameter of the asymmetric logistic family
    #[arg(long, requires = "copula")]
    pub t2: Option<f64>,
    /// Dimension for the exchangeable reference families (default 2)
    #[arg(long, requires = "copula")]
    pub dim: Option<usize>,
    /// Number of rows to draw
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    /// Fitted model record; if absent, the model is fitted to the input
    /// and the AIC-best candidate is used
    #[arg(long)]
    pub theta: Option<PathBuf>,
    #[arg(long = "k", default_values_t = [1])]
    pub k: Vec<usize>,
    #[arg(long)]
    pub exchangeable: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bootstrap replicates behind the empirical bands
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_B)]
    pub bootstrap_b: usize,
    /// Comma-separated diagonal levels; defaults to the built-in grid
    #[arg(long, value_delimiter = ',')]
    pub r_grid: Option<Vec<f64>>,
    /// Ray weights for a lambda curve, comma separated, summing to one
    #[arg(long, value_delimiter = ',')]
    pub ray: Option<Vec<f64>>,
    /// Target absolute error for tail integrals
    #[arg(long)]
    pub target_abs_err: Option<f64>,
}

#[derive(Args, Debug)]
pub struct AwArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    /// Fitted model record; if absent, the model is fitted to the input
    #[arg(long)]
    pub theta: Option<PathBuf>,
    #[arg(long = "k", default_values_t = [1])]
    pub k: Vec<usize>,
    #[arg(long)]
    pub exchangeable: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exceedance level on the standard exponential scale; repeatable
    #[arg(long = "ue", required = true)]
    pub ue: Vec<f64>,
    #[arg(long)]
    pub target_abs_err: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PrecisionArgs {
    /// Fitted model record to report on
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub theta: Option<PathBuf>,
    /// Input CSV to fit before reporting
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long = "k", default_values_t = [1])]
    pub k: Vec<usize>,
    #[arg(long)]
    pub exchangeable: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flag precision entries whose magnitude falls below this threshold
    #[arg(long, default_value_t = DEFAULT_NEAR_ZERO_THRESHOLD)]
    pub near_zero_threshold: f64,
}

/// Maps error categories onto process exit codes: 1 for usage problems,
/// 2 for anything wrong with the data, 3 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => 1,
        Error::Io { .. } | Error::Parse { .. } | Error::Data(_) | Error::Constraint(_) => 2,
        Error::NotPositiveDefinite { .. } | Error::Numerical(_) => 3,
    }
}

/// Executes a parsed command.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Aw(args) => cmd_aw(args),
        Command::Precision(args) => cmd_precision(args),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn check_ks(ks: &[usize]) -> Result<Vec<usize>> {
    if ks.is_empty() {
        return Err(Error::InvalidArgument(
            "no component counts requested".into(),
        ));
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::InvalidArgument("--k must be at least 1".into()));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("--r-grid is empty".into()));
    }
    for &r in levels {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "--r-grid level {r} outside (0, 1)"
            )));
        }
    }
    if levels.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidArgument(
            "--r-grid levels must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn integration_config(target_abs_err: Option<f64>) -> Result<IntegrationConfig> {
    let mut config = IntegrationConfig::default();
    if let Some(err) = target_abs_err {
        if !(err > 0.0 && err.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "--target-abs-err must be positive and finite, got {err}"
            )));
        }
        config.target_abs_err = err;
    }
    Ok(config)
}

fn load_sample(input: &Path) -> Result<CopulaSample> {
    rank_transform(&load_csv(input)?)
}

fn fit_all(
    sample: &CopulaSample,
    ks: &[usize],
    exchangeable: bool,
    seed: u64,
) -> Result<Vec<FitResult>> {
    ks.iter()
        .map(|&k| {
            let mut options = FitOptions::new(k);
            options.exchangeable = exchangeable;
            options.seed = seed;
            fit(sample, &options)
        })
        .collect()
}

fn best_fit(fits: Vec<FitResult>) -> FitResult {
    // fits are nonempty; ties go to the leaner model, so sort by (aic, k)
    fits.into_iter()
        .min_by(|a, b| {
            a.aic
                .total_cmp(&b.aic)
                .then(a.theta_hat.components().cmp(&b.theta_hat.components()))
        })
        .expect("at least one fit")
}

/// Uses the stored model when a record path is given, otherwise fits the
/// requested component counts and keeps the AIC-best one, saving its record
/// next to the other outputs for traceability.
fn resolve_theta(
    theta: &Option<PathBuf>,
    sample: &CopulaSample,
    ks: &[usize],
    exchangeable: bool,
    seed: u64,
    output_dir: &Path,
) -> Result<MixtureParameters> {
    let theta = match theta {
        Some(path) => {
            let (_, theta) = FitRecord::load(path)?;
            theta
        }
        None => {
            let ks = check_ks(ks)?;
            let fits = fit_all(sample, &ks, exchangeable, seed)?;
            let best = best_fit(fits);
            let record = FitRecord::from_fit(&best, exchangeable, seed);
            record.save(&output_dir.join("fit_selected.json"))?;
            best.theta_hat
        }
    };
    if theta.dim() != sample.dim() {
        return Err(Error::Data(format!(
            "model dimension {} does not match data dimension {}",
            theta.dim(),
            sample.dim()
        )));
    }
    Ok(theta)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let ks = check_ks(&args.k)?;
    ensure_dir(&args.output_dir)?;
    let sample = load_sample(&args.input)?;
    let fits = fit_all(&sample, &ks, args.exchangeable, args.seed)?;
    for fit in &fits {
        let record = FitRecord::from_fit(fit, args.exchangeable, args.seed);
        record.save(&args.output_dir.join(format!("fit_k{}.json", record.k)))?;
    }
    write_comparison_csv(&args.output_dir.join("aic.csv"), &compare(&fits))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let sample = match (&args.theta, args.copula) {
        (Some(path), None) => {
            for (flag, given) in [
                ("--alpha", args.alpha.is_some()),
                ("--t1", args.t1.is_some()),
                ("--t2", args.t2.is_some()),
                ("--dim", args.dim.is_some()),
            ] {
                if given {
                    return Err(Error::InvalidArgument(format!(
                        "{flag} only applies to reference copulas"
                    )));
                }
            }
            let (_, theta) = FitRecord::load(path)?;
            simulate(&theta, args.n, args.seed)?
        }
        (None, Some(family)) => {
            let alpha = args.alpha.ok_or_else(|| {
                Error::InvalidArgument("--alpha is required for reference copulas".into())
            })?;
            let dim = args.dim.unwrap_or(2);
            match family {
                ReferenceCopula::AsymmetricLogistic => {
                    if dim != 2 {
                        return Err(Error::InvalidArgument(
                            "the asymmetric logistic family is bivariate".into(),
                        ));
                    }
                    let (t1, t2) = match (args.t1, args.t2) {
                        (Some(t1), Some(t2)) => (t1, t2),
                        _ => {
                            return Err(Error::InvalidArgument(
                                "--t1 and --t2 are required for the asymmetric logistic family"
                                    .into(),
                            ))
                        }
                    };
                    let spec = AsymmetricLogisticSpec::new(alpha, t1, t2)?;
                    sample_asymmetric_logistic(spec, args.n, args.seed)?
                }
                ReferenceCopula::Logistic | ReferenceCopula::InvertedLogistic => {
                    if args.t1.is_some() || args.t2.is_some() {
                        return Err(Error::InvalidArgument(
                            "--t1/--t2 only apply to the asymmetric logistic family".into(),
                        ));
                    }
                    let spec = LogisticSpec::new(dim, alpha)?;
                    if family == ReferenceCopula::Logistic {
                        sample_logistic(spec, args.n, args.seed)?
                    } else {
                        sample_inverted_logistic(spec, args.n, args.seed)?
                    }
                }
            }
        }
        // clap enforces exactly one source, but keep the guard total
        _ => {
            return Err(Error::InvalidArgument(
                "give exactly one of --theta or --copula".into(),
            ))
        }
    };
    ensure_dir(&args.output_dir)?;
    write_sample_csv(&args.output_dir.join("sample.csv"), &sample)
}

fn lambda_curve(
    theta: &MixtureParameters,
    ray: &[f64],
    levels: &[f64],
    config: IntegrationConfig,
) -> Result<DependenceCurve> {
    let ray = RayWeights::new(ray.to_vec())?;
    // anchor at the heaviest coordinate so every per-coordinate level
    // stays at or below the diagonal level
    let anchor = ray
        .weights()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty ray");
    let estimates = levels
        .iter()
        .map(|&r| lambda_model_with(theta, &ray, r, anchor, config))
        .collect::<Result<Vec<_>>>()?;
    DependenceCurve::new(levels.to_vec(), estimates, CurveSource::Model)
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<()> {
    let grid = match &args.r_grid {
        Some(levels) => {
            check_levels(levels)?;
            levels.clone()
        }
        None => default_r_grid(),
    };
    let config = integration_config(args.target_abs_err)?;
    if args.bootstrap_b == 0 {
        return Err(Error::InvalidArgument(
            "--bootstrap-b must be at least 1".into(),
        ));
    }
    ensure_dir(&args.output_dir)?;
    let sample = load_sample(&args.input)?;
    let theta = resolve_theta(
        &args.theta,
        &sample,
        &args.k,
        args.exchangeable,
        args.seed,
        &args.output_dir,
    )?;

    for (name, estimator) in [("chi", TailEstimator::Chi), ("eta", TailEstimator::Eta)] {
        let model = model_curve(&theta, estimator, &grid, config)?;
        write_curve_csv(&args.output_dir.join(format!("{name}_model.csv")), &model)?;
        let empirical = bootstrap_band(
            &sample,
            estimator,
            &grid,
            args.bootstrap_b,
            DEFAULT_CONFIDENCE,
            args.seed,
        )?;
        write_curve_csv(
            &args.output_dir.join(format!("{name}_empirical.csv")),
            &empirical,
        )?;
    }
    if let Some(ray) = &args.ray {
        let curve = lambda_curve(&theta, ray, &grid, config)?;
        write_curve_csv(&args.output_dir.join("lambda_model.csv"), &curve)?;
    }
    Ok(())
}

fn cmd_aw(args: &AwArgs) -> Result<()> {
    for &u_e in &args.ue {
        if !(u_e > 0.0 && u_e.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "--ue must be positive and finite, got {u_e}"
            )));
        }
    }
    let config = integration_config(args.target_abs_err)?;
    ensure_dir(&args.output_dir)?;
    let sample = load_sample(&args.input)?;
    let theta = resolve_theta(
        &args.theta,
        &sample,
        &args.k,
        args.exchangeable,
        args.seed,
        &args.output_dir,
    )?;
    let mut rows = Vec::new();
    for &u_e in &args.ue {
        for i in 1..=9 {
            let w = i as f64 / 10.0;
            rows.push(AwRow {
                u_e,
                w,
                model: aw_probability_model_with(&theta, w, u_e, config)?,
                empirical: aw_probability_empirical(&sample, w, u_e)?,
            });
        }
    }
    write_aw_csv(&args.output_dir.join("aw.csv"), &rows)
}

fn cmd_precision(args: &PrecisionArgs) -> Result<()> {
    if !(args.near_zero_threshold >= 0.0 && args.near_zero_threshold.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "--near-zero-threshold must be nonnegative, got {}",
            args.near_zero_threshold
        )));
    }
    ensure_dir(&args.output_dir)?;
    let theta = match (&args.theta, &args.input) {
        (Some(path), None) => FitRecord::load(path)?.1,
        (None, Some(input)) => {
            let sample = load_sample(input)?;
            resolve_theta(
                &None,
                &sample,
                &args.k,
                args.exchangeable,
                args.seed,
                &args.output_dir,
            )?
        }
        _ => {
            return Err(Error::InvalidArgument(
                "give exactly one of --theta or --input".into(),
            ))
        }
    };
    let entries = precision_report(&theta, args.near_zero_threshold);
    write_precision_csv(&args.output_dir.join("precision.csv"), &entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ThetaCandidate;
    use std::io;

    fn write_case_data(dir: &Path, n: usize, seed: u64) -> PathBuf {
        let theta = ThetaCandidate {
            weights: vec![1.0],
            means: vec![vec![0.0, 0.0]],
            scales: vec![vec![1.0, 1.0]],
            corr_offdiag: vec![vec![0.5]],
        }
        .validate()
        .unwrap();
        let sample = simulate(&theta, n, seed).unwrap();
        let path = dir.join("data.csv");
        write_sample_csv(&path, &sample).unwrap();
        path
    }

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn exit_codes_follow_error_categories() {
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
        assert_eq!(
            exit_code(&Error::Io {
                path: "p".into(),
                source: io::Error::other("boom"),
            }),
            2
        );
        assert_eq!(
            exit_code(&Error::Parse {
                row: 1,
                column: 1,
                message: "x".into()
            }),
            2
        );
        assert_eq!(exit_code(&Error::Data("x".into())), 2);
        assert_eq!(exit_code(&Error::Constraint("x".into())), 2);
        assert_eq!(
            exit_code(&Error::NotPositiveDefinite {
                index: 0,
                value: -1.0,
                threshold: 1e-12
            }),
            3
        );
        assert_eq!(exit_code(&Error::Numerical("x".into())), 3);
    }

    #[test]
    fn usage_problems_surface_before_work() {
        let dir = tempfile::tempdir().unwrap();
        let cli = parse(&[
            "gmcopula",
            "fit",
            "--input",
            "/nonexistent.csv",
            "--k",
            "0",
            "--output-dir",
            dir.path().to_str().unwrap(),
        ]);
        // the bad flag must be reported, not the missing file
        match run(&cli) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("--k"), "{msg}"),
            other => panic!("expected a usage error, got {other:?}"),
        }

        let cli = parse(&[
            "gmcopula",
            "diagnose",
            "--input",
            "/nonexistent.csv",
            "--r-grid",
            "0.5,0.4",
        ]);
        assert!(matches!(run(&cli), Err(Error::InvalidArgument(_))));

        let missing = parse(&["gmcopula", "fit", "--input", "/nonexistent.csv"]);
        assert!(matches!(run(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn clap_rejects_conflicting_sources() {
        assert!(Cli::try_parse_from([
            "gmcopula", "simulate", "--theta", "a.json", "--copula", "logistic",
        ])
        .is_err());
        assert!(Cli::try_parse_from(["gmcopula", "simulate"]).is_err());
        assert!(Cli::try_parse_from(["gmcopula", "aw", "--input", "x.csv"]).is_err());
    }

    #[test]
    fn fit_writes_records_and_table() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_case_data(dir.path(), 300, 1);
        let out = dir.path().join("out");
        let cli = parse(&[
            "gmcopula",
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
            "--k",
            "1",
            "--k",
            "2",
        ]);
        run(&cli).unwrap();
        let (record, theta) = FitRecord::load(&out.join("fit_k1.json")).unwrap();
        assert_eq!(record.k, 1);
        assert_eq!(theta.dim(), 2);
        assert!(out.join("fit_k2.json").exists());
        let table = fs::read_to_string(out.join("aic.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3, "{table}");
        assert!(lines[0].starts_with("k,"));
    }

    #[test]
    fn simulate_round_trips_through_fit_records() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_case_data(dir.path(), 400, 2);
        let out = dir.path().join("out");
        run(&parse(&[
            "gmcopula",
            "fit",
            "--input",
            input.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
        ]))
        .unwrap();
        let sim_dir = dir.path().join("sim");
        run(&parse(&[
            "gmcopula",
            "simulate",
            "--theta",
            out.join("fit_k1.json").to_str().unwrap(),
            "--n",
            "50",
            "--seed",
            "7",
            "--output-dir",
            sim_dir.to_str().unwrap(),
        ]))
        .unwrap();
        let data = load_csv(&sim_dir.join("sample.csv")).unwrap();
        assert_eq!(data.rows(), 50);
        assert_eq!(data.dim(), 2);
    }

    #[test]
    fn simulate_reference_families() {
        let dir = tempfile::tempdir().unwrap();
        for extra in [
            vec!["--copula", "logistic", "--alpha", "0.6", "--dim", "3"],
            vec!["--copula", "inverted-logistic", "--alpha", "0.6"],
            vec![
                "--copula",
                "asymmetric-logistic",
                "--alpha",
                "0.2",
                "--t1",
                "0.2",
                "--t2",
                "0.8",
            ],
        ] {
            let out = dir.path().join(extra[1]);
            let mut args = vec![
                "gmcopula",
                "simulate",
                "--n",
                "40",
                "--output-dir",
                out.to_str().unwrap(),
            ];
            args.extend(extra.iter());
            run(&parse(&args)).unwrap();
            assert!(out.join("sample.csv").exists());
        }
        // missing family parameters are usage errors
        let cli = parse(&[
            "gmcopula",
            "simulate",
            "--copula",
            "asymmetric-logistic",
            "--alpha",
            "0.2",
        ]);
        assert!(matches!(run(&cli), Err(Error::InvalidArgument(_))));
        let cli = parse(&["gmcopula", "simulate", "--copula", "logistic"]);
        assert!(matches!(run(&cli), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn diagnose_emits_requested_curves() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_case_data(dir.path(), 250, 3);
        let out = dir.path().join("out");
        run(&parse(&[
            "gmcopula",
            "diagnose",
            "--input",
            input.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
            "--r-grid",
            "0.3,0.6,0.9",
            "--bootstrap-b",
            "60",
            "--ray",
            "0.5,0.5",
        ]))
        .unwrap();
        for name in [
            "chi_model.csv",
            "eta_model.csv",
            "chi_empirical.csv",
            "eta_empirical.csv",
            "lambda_model.csv",
            "fit_selected.json",
        ] {
            assert!(out.join(name).exists(), "{name} missing");
        }
        let curve = super::super::output::read_curve_csv(&out.join("chi_empirical.csv")).unwrap();
        assert_eq!(curve.levels, vec![0.3, 0.6, 0.9]);
        assert_eq!(curve.source, CurveSource::Empirical);
        assert!(curve.band_lo.iter().any(Option::is_some));
    }

    #[test]
    fn diagnose_on_independence_matches_one_minus_r() {
        let theta = ThetaCandidate {
            weights: vec![1.0],
            means: vec![vec![0.0, 0.0]],
            scales: vec![vec![1.0, 1.0]],
            corr_offdiag: vec![vec![0.0]],
        }
        .validate()
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let sample = simulate(&theta, 2000, 4).unwrap();
        let input = dir.path().join("indep.csv");
        write_sample_csv(&input, &sample).unwrap();
        let out = dir.path().join("out");
        run(&parse(&[
            "gmcopula",
            "diagnose",
            "--input",
            input.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
            "--r-grid",
            "0.2,0.5,0.9",
            "--bootstrap-b",
            "60",
        ]))
        .unwrap();
        let curve = super::super::output::read_curve_csv(&out.join("chi_model.csv")).unwrap();
        for (&r, estimate) in curve.levels.iter().zip(&curve.estimates) {
            let chi = estimate.expect("model chi defined");
            assert!(
                (chi - (1.0 - r)).abs() < 0.06,
                "model chi {chi} far from {} at r={r}",
                1.0 - r
            );
        }
    }

    #[test]
    fn identical_invocations_write_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_case_data(dir.path(), 150, 5);
        let mut outputs = Vec::new();
        for name in ["a", "b"] {
            let out = dir.path().join(name);
            run(&parse(&[
                "gmcopula",
                "diagnose",
                "--input",
                input.to_str().unwrap(),
                "--output-dir",
                out.to_str().unwrap(),
                "--r-grid",
                "0.4,0.8",
                "--bootstrap-b",
                "55",
                "--seed",
                "17",
            ]))
            .unwrap();
            let mut bundle = Vec::new();
            for file in [
                "chi_model.csv",
                "eta_model.csv",
                "chi_empirical.csv",
                "eta_empirical.csv",
                "fit_selected.json",
            ] {
                bundle.push(fs::read(out.join(file)).unwrap());
            }
            outputs.push(bundle);
        }
        assert_eq!(outputs[0], outputs[1]);
    }

    #[test]
    fn aw_table_covers_the_ray_grid() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_case_data(dir.path(), 400, 6);
        let out = dir.path().join("out");
        run(&parse(&[
            "gmcopula",
            "aw",
            "--input",
            input.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
            "--ue",
            "1.4",
            "--ue",
            "2",
        ]))
        .unwrap();
        let text = fs::read_to_string(out.join("aw.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ue,w,model,empirical");
        assert_eq!(lines.len(), 1 + 2 * 9);
        // both estimators present and in range on a midrange row
        let cells: Vec<&str> = lines[5].split(',').collect();
        let model: f64 = cells[2].parse().unwrap();
        let empirical: f64 = cells[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&model));
        assert!((0.0..=1.0).contains(&empirical));
    }

    #[test]
    fn precision_reports_flags() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_case_data(dir.path(), 300, 8);
        let out = dir.path().join("out");
        run(&parse(&[
            "gmcopula",
            "precision",
            "--input",
            input.to_str().unwrap(),
            "--output-dir",
            out.to_str().unwrap(),
            "--near-zero-threshold",
            "0.2",
        ]))
        .unwrap();
        let text = fs::read_to_string(out.join("precision.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "component,i,j,value,near_zero");
        assert_eq!(lines.len(), 2);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells[0], "0");
        let value: f64 = cells[3].parse().unwrap();
        // rho around 0.5 gives an off-diagonal precision around -0.67
        assert!(value < -0.3, "precision entry was {value}");
        assert_eq!(cells[4], "0");
    }
}
