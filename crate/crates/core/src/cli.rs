//! The `prognos` command line: train, eval, predict, report and serve.
//!
//! Every command is deterministic given its inputs and `--seed`. Errors map
//! to exit codes through [`Error::exit_code`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cohort::{read_cohort, Cohort, Endpoint};
use crate::covariates::GenotypeMode;
use crate::cox::{format_wald_table, TieMethod};
use crate::error::{Error, Result};
use crate::model::{FeatureMode, TrainedModel};
use crate::pipeline::{evaluate, test_split, train, EvalConfig, EvalReport, Predictor, TrainConfig, DEFAULT_TOP_K};
use crate::predict::{parse_horizons, Horizon, ModelSet, SubjectInput};
use crate::report::{
    brier_csv, calibration_csv, cstat_csv, format_summary, parse_summary_csv, summary_csv, SummaryRow,
};
use crate::scales::RiskTable;
use crate::service::{serve, ServiceState};

#[derive(Debug, Parser)]
#[command(
    name = "prognos",
    version,
    about = "Survival prognosis for age-related macular degeneration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on the training split and write it as JSON.
    Train(TrainArgs),
    /// C-statistics, Brier curve and calibration on the test split.
    Eval(EvalArgs),
    /// Risk profile of one subject.
    Predict(PredictArgs),
    /// Combine evaluation summaries into one table.
    Report(ReportArgs),
    /// Run the HTTP prediction service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EndpointArg {
    #[value(name = "late-amd", alias = "late_amd")]
    LateAmd,
    Ga,
    Nv,
    All,
}

impl EndpointArg {
    pub fn endpoints(self) -> Vec<Endpoint> {
        match self {
            EndpointArg::LateAmd => vec![Endpoint::LateAmd],
            EndpointArg::Ga => vec![Endpoint::Ga],
            EndpointArg::Nv => vec![Endpoint::Nv],
            EndpointArg::All => Endpoint::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeaturesArg {
    #[value(alias = "deep_features")]
    Deep,
    #[value(alias = "dl_grading")]
    Grading,
    Calculator,
    Sss,
}

impl From<FeaturesArg> for FeatureMode {
    fn from(f: FeaturesArg) -> Self {
        match f {
            FeaturesArg::Deep => FeatureMode::DeepFeatures,
            FeaturesArg::Grading => FeatureMode::DlGrading,
            FeaturesArg::Calculator => FeatureMode::Calculator,
            FeaturesArg::Sss => FeatureMode::Sss,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenotypeArg {
    None,
    Snps,
    Grs,
}

impl From<GenotypeArg> for GenotypeMode {
    fn from(g: GenotypeArg) -> Self {
        match g {
            GenotypeArg::None => GenotypeMode::None,
            GenotypeArg::Snps => GenotypeMode::Snps,
            GenotypeArg::Grs => GenotypeMode::Grs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TiesArg {
    Efron,
    Breslow,
}

impl From<TiesArg> for TieMethod {
    fn from(t: TiesArg) -> Self {
        match t {
            TiesArg::Efron => TieMethod::Efron,
            TiesArg::Breslow => TieMethod::Breslow,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Cohort CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// JSON object renaming canonical columns to the file's headers.
    #[arg(long)]
    pub columns: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Cohort> {
        read_cohort(&self.data, self.columns.as_deref())
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "late-amd")]
    pub endpoint: EndpointArg,
    #[arg(long, value_enum, default_value = "deep")]
    pub features: FeaturesArg,
    #[arg(long, value_enum, default_value = "none")]
    pub genotype: GenotypeArg,
    #[arg(long, value_enum, default_value = "efron")]
    pub ties: TiesArg,
    /// Seed of the participant-level split.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Fixed lasso penalty instead of the development-set choice.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Deep features kept in the final model.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    /// Model file; with `--endpoint all`, a directory receiving one model
    /// per endpoint and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Write the lasso path as CSV (deep features only).
    #[arg(long)]
    pub path_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file.
    #[arg(long, conflicts_with = "models")]
    pub model: Option<PathBuf>,
    /// Manifest listing one model file per endpoint.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// `sss` evaluates the severity scale without a model file.
    #[arg(long, value_enum)]
    pub features: Option<FeaturesArg>,
    #[arg(long, value_enum)]
    pub endpoint: Option<EndpointArg>,
    #[arg(long, default_value = "1-12")]
    pub horizons: String,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(2..))]
    pub bootstrap: u64,
    /// Seed of the split (must match training) and of the bootstrap.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Evaluate on every participant, e.g. for an external cohort.
    #[arg(long)]
    pub no_split: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long, conflicts_with = "models")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Subject as a JSON file, or inline JSON.
    #[arg(long)]
    pub subject: String,
    #[arg(long, default_value = "1-12")]
    pub horizons: String,
    #[arg(long, value_enum)]
    pub endpoint: Option<EndpointArg>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Evaluation output directories or `summary.csv` files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Keep only these horizons (the `all years` column is always kept).
    #[arg(long)]
    pub horizons: Option<String>,
    /// Write the combined summary CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, conflicts_with = "model")]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
}

/// Runs one command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Report(a) => cmd_report(&a, out),
        Command::Serve(a) => cmd_serve(&a, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cohort = a.data.load()?;
    let cfg = TrainConfig {
        feature_mode: a.features.into(),
        genotype_mode: a.genotype.into(),
        tie_method: a.ties.into(),
        seed: a.seed,
        lambda: a.lambda,
        top_k: a.top_k,
        ..TrainConfig::default()
    };
    let endpoints = a.endpoint.endpoints();
    let multi = endpoints.len() > 1;
    let mut manifest = BTreeMap::new();
    for endpoint in endpoints {
        let outcome = train(&cohort, endpoint, &cfg)?;
        let (n_train, n_dev, n_test) = outcome.split_sizes;
        let mut text = format!("{endpoint}: train {n_train}, dev {n_dev}, test {n_test}\n");
        if let Some(sel) = &outcome.selection {
            let _ = writeln!(
                text,
                "lambda {:.6} (path point {} of {}), features {:?}",
                sel.path.lambdas[sel.lambda_index],
                sel.lambda_index + 1,
                sel.path.len(),
                sel.features
            );
            if let Some(p) = &a.path_out {
                let p = if multi {
                    p.with_extension(format!("{endpoint}.csv"))
                } else {
                    p.clone()
                };
                write_file(&p, &sel.path.to_csv())?;
            }
        }
        text.push_str(&format_wald_table(&outcome.wald));
        text.push('\n');
        emit(out, &text)?;

        let path = if multi {
            a.out.join(format!("{endpoint}.json"))
        } else {
            a.out.clone()
        };
        write_file(&path, &outcome.model.to_json())?;
        manifest.insert(endpoint, PathBuf::from(format!("{endpoint}.json")));
    }
    if multi {
        let path = a.out.join("manifest.json");
        std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
        ModelSet::write_manifest(&manifest, &path)?;
    }
    Ok(())
}

fn load_models(model: Option<&Path>, models: Option<&Path>) -> Result<Option<ModelSet>> {
    match (model, models) {
        (Some(m), _) => Ok(Some(ModelSet::new(vec![TrainedModel::load(m)?])?)),
        (None, Some(manifest)) => Ok(Some(ModelSet::load_manifest(manifest)?)),
        (None, None) => Ok(None),
    }
}

fn write_report(dir: &Path, report: &EvalReport) -> Result<()> {
    write_file(&dir.join("cstat.csv"), &cstat_csv(&report.cstat)?)?;
    write_file(&dir.join("brier.csv"), &brier_csv(&report.brier)?)?;
    write_file(&dir.join("calibration.csv"), &calibration_csv(&report.calibration)?)
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let cohort = a.data.load()?;
    let models = load_models(a.model.as_deref(), a.models.as_deref())?;
    let sss = a.features == Some(FeaturesArg::Sss);
    if sss == models.is_some() {
        return Err(Error::InvalidConfig(
            "give either --model/--models, or --features sss to evaluate the severity scale".into(),
        ));
    }
    let endpoints = match (&models, a.endpoint) {
        (_, Some(e)) => e.endpoints(),
        (Some(m), None) => m.endpoints(),
        (None, None) => vec![Endpoint::LateAmd],
    };
    let cfg = EvalConfig {
        horizons: parse_horizons(&a.horizons)?,
        bootstrap: a.bootstrap as usize,
        seed: a.seed,
        ..EvalConfig::default()
    };
    let table = RiskTable::default();
    let multi = endpoints.len() > 1;
    let mut summary = Vec::new();
    for endpoint in endpoints {
        let model = match &models {
            Some(set) => Some(
                set.get(endpoint)
                    .ok_or_else(|| Error::ModelDataMismatch(format!("no model for endpoint `{endpoint}` was given")))?,
            ),
            None => None,
        };
        let data = if a.no_split {
            cohort.clone()
        } else {
            let (test, matches) = test_split(&cohort, TrainConfig::default().split, a.seed, model)?;
            if matches == Some(false) {
                return Err(Error::ModelDataMismatch(format!(
                    "the `{endpoint}` model was not trained on this data with seed {}; \
                     pass the training seed, or --no-split for an external cohort",
                    a.seed
                )));
            }
            test
        };
        let predictor = match model {
            Some(m) => Predictor::Model(m),
            None => Predictor::Sss {
                table: &table,
                bilateral_medium: true,
            },
        };
        let report = evaluate(predictor, &data, endpoint, &cfg)?;
        let dir = if multi {
            a.out_dir.join(endpoint.as_str())
        } else {
            a.out_dir.clone()
        };
        write_report(&dir, &report)?;

        let mut text = format!(
            "{endpoint} / {}: n {}, events {}\n{:<8} {:>8} {:>8} {:>8}\n",
            report.model, report.n, report.events, "horizon", "c", "lo95", "hi95"
        );
        for row in &report.cstat {
            let _ = writeln!(
                text,
                "{:<8} {:>8.4} {:>8.4} {:>8.4}",
                row.horizon.to_string(),
                row.c,
                row.lo95,
                row.hi95
            );
            summary.push(SummaryRow {
                endpoint,
                model: report.model.clone(),
                horizon: row.horizon,
                c: row.c,
                lo95: row.lo95,
                hi95: row.hi95,
            });
        }
        emit(out, &text)?;
    }
    write_file(&a.out_dir.join("summary.csv"), &summary_csv(&summary)?)
}

fn read_subject(arg: &str) -> Result<SubjectInput> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::io(arg, e))?
    };
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de)
        .map_err(|e| Error::InvalidInput(format!("subject: {} at `{}`", e.inner(), e.path())))
}

pub fn cmd_predict(a: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let models = load_models(a.model.as_deref(), a.models.as_deref())?
        .ok_or_else(|| Error::InvalidConfig("give --model or --models".into()))?;
    let subject = read_subject(&a.subject)?;
    let horizons = parse_horizons(&a.horizons)?;
    let endpoints = a.endpoint.map(EndpointArg::endpoints).unwrap_or_default();
    let profile = models.predict(&subject, &endpoints, &horizons)?;
    emit(out, &serde_json::to_string_pretty(&profile)?)?;
    emit(out, "\n")
}

pub fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let keep: Option<Vec<Horizon>> = a.horizons.as_deref().map(parse_horizons).transpose()?;
    let mut rows = Vec::new();
    for input in &a.inputs {
        let path = if input.is_dir() {
            input.join("summary.csv")
        } else {
            input.clone()
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        rows.extend(parse_summary_csv(&text)?);
    }
    if let Some(keep) = keep {
        rows.retain(|r| match r.horizon.horizon_years() {
            None => true,
            Some(y) => keep.iter().any(|h| f64::from(h.years()) == y),
        });
    }
    if let Some(path) = &a.out {
        write_file(path, &summary_csv(&rows)?)?;
    }
    emit(out, &format_summary(&rows))
}

pub fn cmd_serve(a: &ServeArgs, out: &mut dyn Write) -> Result<()> {
    let models = load_models(a.model.as_deref(), a.models.as_deref())?;
    let addr = SocketAddr::new(a.host, a.port);
    let loaded = models.as_ref().map(|m| m.endpoints().len()).unwrap_or(0);
    emit(out, &format!("serving {loaded} model(s) on http://{addr}\n"))?;
    out.flush().map_err(|e| Error::io("<stdout>", e))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
    runtime.block_on(serve(ServiceState::new(models), addr))
}
