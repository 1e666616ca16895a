//! Command-line front end. The binary only parses arguments and calls [`run`].
//!
//! Every output embeds its effective configuration (`# key=value` lines in
//! CSV, a `config` object in JSON) and nothing run-dependent, so the same
//! invocation always produces the same bytes.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::estimator::{fit, fit_both};
use crate::gof::{bootstrap_test, decide, Decision, TestConfig};
use crate::panel::io::{format_real, load_panel_csv, load_weights_csv, write_panel_csv, write_weights_csv, PanelLayout};
use crate::panel::{Contiguity, ModelSpec, PanelData, SpatialWeights};
use crate::rng::{run_in_pool, WORKERS_ENV};
use crate::sim::{mc_estimation, mc_power, mc_size, Beta4Shape, Dgp, DgpConfig, ErrorLaw, RhoShape};
use crate::smoothing::{Bandwidth, KernelSpec};
use config::McConfig;

#[derive(Debug, Parser)]
#[command(name = "sarpanel", version, about = "Time-varying spatial autoregressive panels: estimation, testing, simulation")]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a row-standardized lattice weight matrix.
    Weights(WeightsArgs),
    /// Simulate one panel from the Monte-Carlo design.
    Simulate(SimulateArgs),
    /// Fit the partially linear model.
    Fit(FitArgs),
    /// Bootstrap test of the constant coefficients.
    Test(TestArgs),
    /// Monte-Carlo experiments over a config grid.
    #[command(subcommand)]
    Mc(McCommand),
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Lattice side (N = m^2).
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value = "rook")]
    pub scheme: Contiguity,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 12)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub t_len: usize,
    #[arg(long, default_value = "rook")]
    pub scheme: Contiguity,
    #[arg(long, default_value = "rho1")]
    pub rho_shape: RhoShape,
    #[arg(long, default_value = "normal")]
    pub error_law: ErrorLaw,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value = "sin2pi")]
    pub beta4_shape: Beta4Shape,
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replicate index within the seed's stream family.
    #[arg(long, default_value_t = 0)]
    pub replicate: usize,
    /// Panel CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the weights used.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Epanechnikov,
}

impl From<KernelArg> for KernelSpec {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => KernelSpec::Gaussian,
            KernelArg::Epanechnikov => KernelSpec::Epanechnikov,
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Panel CSV with `location`, `period` and the named columns.
    #[arg(long)]
    pub panel: PathBuf,
    /// N x N weights CSV.
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub response: String,
    /// Covariate columns; an intercept is added in front.
    #[arg(long, value_delimiter = ',', required = true)]
    pub covariates: Vec<String>,
    /// Covariates with constant coefficients.
    #[arg(long, value_delimiter = ',', conflicts_with = "all_varying")]
    pub constant: Vec<String>,
    /// Every coefficient time-varying (no constant block).
    #[arg(long)]
    pub all_varying: bool,
    /// Fixed bandwidth (rule of thumb if omitted).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub kernel: KernelArg,
    /// Use the weights as given instead of row-standardizing them.
    #[arg(long)]
    pub raw_weights: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory for beta_c.json, gamma_v.csv, alpha.csv, rss.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 500)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Significance level for the reported decision.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// JSON output (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum McCommand {
    /// AMSE, bias and SD per grid cell.
    Estimate(McArgs),
    /// Rejection rates under the null (c = 0).
    Size(McArgs),
    /// Rejection rates under alternatives (c > 0).
    Power(McArgs),
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Flat key = value config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Table CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Curve CSV (tau, truth, mean estimate) per cell; estimate only.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Override a config key, e.g. `--set n_sim=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Process exit code for an error: 2 for unreadable inputs and bad
/// configuration, 1 for failures during computation.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Config { .. } => 2,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    match cli.command {
        Command::Weights(a) => cmd_weights(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => run_in_pool(workers, || cmd_fit(&a))?,
        Command::Test(a) => cmd_test(&a, workers),
        Command::Mc(McCommand::Estimate(a)) => cmd_mc(McKind::Estimate, &a, workers),
        Command::Mc(McCommand::Size(a)) => cmd_mc(McKind::Size, &a, workers),
        Command::Mc(McCommand::Power(a)) => cmd_mc(McKind::Power, &a, workers),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_all(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = create(p)?;
            f.write_all(bytes).and_then(|_| f.flush()).map_err(|e| Error::io(p, e))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn comment_block(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

fn cmd_weights(a: &WeightsArgs) -> Result<()> {
    let w = SpatialWeights::lattice(a.m, a.scheme)?.row_standardize()?;
    let mut buf = comment_block(&[
        ("m".into(), a.m.to_string()),
        ("scheme".into(), a.scheme.to_string()),
        ("standardized".into(), "true".into()),
    ])
    .into_bytes();
    write_weights_csv(&w, &mut buf)?;
    write_all(a.out.as_deref(), &buf)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = DgpConfig {
        m: a.m,
        t_len: a.t_len,
        scheme: a.scheme,
        rho_shape: a.rho_shape,
        error_law: a.error_law,
        c: a.c,
        beta4_shape: a.beta4_shape,
        noise_scale: a.noise_scale,
        seed: a.seed,
    };
    let dgp = Dgp::new(cfg.clone())?;
    let sim = dgp.generate(a.replicate)?;
    let mut pairs = dgp_pairs(&cfg);
    pairs.push(("replicate".into(), a.replicate.to_string()));
    let mut buf = comment_block(&pairs).into_bytes();
    write_panel_csv(&sim.data, "y", &mut buf)?;
    write_all(Some(&a.out), &buf)?;
    if let Some(path) = &a.weights_out {
        let mut wbuf = comment_block(&[
            ("m".into(), a.m.to_string()),
            ("scheme".into(), a.scheme.to_string()),
            ("standardized".into(), "true".into()),
        ])
        .into_bytes();
        write_weights_csv(dgp.weights(), &mut wbuf)?;
        write_all(Some(path), &wbuf)?;
    }
    Ok(())
}

struct LoadedModel {
    data: PanelData,
    locations: Vec<String>,
    spec: ModelSpec,
    weights: SpatialWeights,
    bandwidth: Option<Bandwidth>,
    kernel: KernelSpec,
}

fn load_model(m: &ModelArgs) -> Result<LoadedModel> {
    // check both inputs exist before parsing either
    for path in [&m.panel, &m.weights] {
        std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    }
    let layout = PanelLayout::new(m.response.clone(), m.covariates.clone());
    let loaded = load_panel_csv(&m.panel, &layout)?;
    let mut weights = load_weights_csv(&m.weights)?;
    if !m.raw_weights {
        weights = weights.row_standardize()?;
    }
    if weights.n_locations() != loaded.data.n_locations() {
        return Err(Error::DimensionError {
            what: "weights size (locations)",
            expected: loaded.data.n_locations(),
            found: weights.n_locations(),
        });
    }
    let p = loaded.data.n_regressors();
    let spec = if m.all_varying || m.constant.is_empty() {
        ModelSpec::fully_varying(p)
    } else {
        let mut constant = Vec::new();
        for name in &m.constant {
            let idx = m.covariates.iter().position(|c| c == name).ok_or_else(|| {
                Error::InvalidSpec(format!("constant column '{name}' is not among the covariates"))
            })?;
            constant.push(idx + 1);
        }
        let varying = (0..p).filter(|j| !constant.contains(j)).collect();
        ModelSpec::new(p, varying, constant)?
    };
    let bandwidth = m.bandwidth.map(Bandwidth::new).transpose()?;
    Ok(LoadedModel {
        data: loaded.data,
        locations: loaded.locations,
        spec,
        weights,
        bandwidth,
        kernel: m.kernel.into(),
    })
}

fn model_pairs(m: &ModelArgs, lm: &LoadedModel) -> Vec<(String, String)> {
    let constant: Vec<String> = lm.spec.constant_cols().iter().map(|&j| lm.data.names()[j].clone()).collect();
    vec![
        ("panel".into(), m.panel.display().to_string()),
        ("weights".into(), m.weights.display().to_string()),
        ("response".into(), m.response.clone()),
        ("covariates".into(), m.covariates.join(",")),
        ("constant".into(), constant.join(",")),
        ("bandwidth".into(), m.bandwidth.map(format_real).unwrap_or_else(|| "rot".into())),
        ("kernel".into(), lm.kernel.to_string()),
        ("row_standardize".into(), (!m.raw_weights).to_string()),
    ]
}

fn pairs_json(pairs: &[(String, String)]) -> serde_json::Value {
    serde_json::Value::Object(pairs.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let lm = load_model(&a.model)?;
    let res = fit(&lm.data, &lm.spec, &lm.weights, lm.kernel, lm.bandwidth)?;
    let pairs = model_pairs(&a.model, &lm);
    let names = lm.data.names();
    let out = &a.out;

    let beta_c: Vec<_> = lm
        .spec
        .constant_cols()
        .iter()
        .zip(res.beta_c.iter())
        .map(|(&j, b)| json!({ "name": names[j], "estimate": b }))
        .collect();
    write_all(
        Some(&out.join("beta_c.json")),
        &json_bytes(&json!({ "config": pairs_json(&pairs), "beta_c": beta_c })),
    )?;

    let mut curves = comment_block(&pairs);
    curves.push_str("tau,rho_hat");
    for &j in lm.spec.varying_cols() {
        curves.push_str(&format!(",beta_{}", names[j]));
    }
    curves.push('\n');
    for (t, tau) in lm.data.tau().iter().enumerate() {
        curves.push_str(&format_real(*tau));
        for v in res.gamma_v.row(t).iter() {
            curves.push(',');
            curves.push_str(&format_real(*v));
        }
        curves.push('\n');
    }
    write_all(Some(&out.join("gamma_v.csv")), curves.as_bytes())?;

    let mut alpha = comment_block(&pairs);
    alpha.push_str("location,alpha\n");
    for (loc, v) in lm.locations.iter().zip(&res.alpha) {
        alpha.push_str(&format!("{loc},{}\n", format_real(*v)));
    }
    write_all(Some(&out.join("alpha.csv")), alpha.as_bytes())?;

    let summary = json!({
        "config": pairs_json(&pairs),
        "rss_pl": res.rss,
        "bandwidth": res.bandwidth.value(),
        "n_locations": lm.data.n_locations(),
        "t_len": lm.data.t_len(),
        "max_abs_rho": res.max_abs_rho(),
        "rho_outside_unit": res.rho_outside_unit,
    });
    write_all(Some(&out.join("rss.json")), &json_bytes(&summary))
}

fn cmd_test(a: &TestArgs, workers: usize) -> Result<()> {
    let lm = load_model(&a.model)?;
    let cfg = TestConfig::new(a.k, a.seed).with_workers(workers);
    let (res, tv) = run_in_pool(workers, || fit_both(&lm.data, &lm.spec, &lm.weights, lm.kernel, lm.bandwidth))??;
    let test = bootstrap_test(&lm.data, &lm.spec, &lm.weights, lm.kernel, &res, &tv, &cfg)?;
    let mut pairs = model_pairs(&a.model, &lm);
    pairs.push(("k".into(), a.k.to_string()));
    pairs.push(("seed".into(), a.seed.to_string()));
    pairs.push(("alpha".into(), format_real(a.alpha)));
    let decision = match decide(&test, a.alpha) {
        Decision::Reject => "reject",
        Decision::FailToReject => "fail_to_reject",
    };
    let value = json!({
        "config": pairs_json(&pairs),
        "w_observed": test.w_observed,
        "p_value": test.p_value,
        "decision": decision,
        "rss_pl": res.rss,
        "rss_tv": tv.rss,
        "k": test.k,
        "seed": test.seed,
        "w_bootstrap": test.w_bootstrap,
    });
    write_all(a.out.as_deref(), &json_bytes(&value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum McKind {
    Estimate,
    Size,
    Power,
}

fn dgp_pairs(cfg: &DgpConfig) -> Vec<(String, String)> {
    vec![
        ("m".into(), cfg.m.to_string()),
        ("t_len".into(), cfg.t_len.to_string()),
        ("scheme".into(), cfg.scheme.to_string()),
        ("rho_shape".into(), cfg.rho_shape.to_string()),
        ("error_law".into(), cfg.error_law.to_string()),
        ("c".into(), format_real(cfg.c)),
        ("beta4_shape".into(), cfg.beta4_shape.to_string()),
        ("noise_scale".into(), format_real(cfg.noise_scale)),
        ("seed".into(), cfg.seed.to_string()),
    ]
}

const CELL_COLUMNS: &str = "m,n,t_len,scheme,rho_shape,error_law,c,beta4_shape,noise_scale,seed,n_sim";

fn cell_prefix(cfg: &DgpConfig, n_sim: usize) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        cfg.m,
        cfg.n_locations(),
        cfg.t_len,
        cfg.scheme,
        cfg.rho_shape,
        cfg.error_law,
        format_real(cfg.c),
        cfg.beta4_shape,
        format_real(cfg.noise_scale),
        cfg.seed,
        n_sim
    )
}

fn cmd_mc(kind: McKind, a: &McArgs, workers: usize) -> Result<()> {
    let mut cfg = McConfig::load(&a.config)?;
    for o in &a.overrides {
        cfg.set(o)?;
    }
    let plan = cfg.plan()?;
    for cell in &plan.cells {
        let ok = match kind {
            McKind::Estimate => true,
            McKind::Size => cell.c == 0.0,
            McKind::Power => cell.c > 0.0,
        };
        if !ok {
            return Err(Error::Config {
                line: 0,
                message: format!("grid cell with c = {} does not fit this experiment", cell.c),
            });
        }
    }
    let mut table: String = cfg.echo().iter().map(|l| format!("# {l}\n")).collect();
    let mut curves = String::new();
    match kind {
        McKind::Estimate => {
            table.push_str(CELL_COLUMNS);
            table.push_str(",amse_rho,amse_beta1,amse_beta2,bias_beta3,sd_beta3,bias_beta4,sd_beta4\n");
            curves = table.lines().filter(|l| l.starts_with('#')).map(|l| format!("{l}\n")).collect();
            curves.push_str(CELL_COLUMNS);
            curves.push_str(",tau,rho,rho_hat,beta1,beta1_hat,beta2,beta2_hat\n");
            for cell in &plan.cells {
                log::info!("estimate cell {}", cell_prefix(cell, plan.n_sim));
                let s = mc_estimation(cell, plan.n_sim, workers)?;
                let prefix = cell_prefix(cell, plan.n_sim);
                let metrics = [s.amse_rho, s.amse_beta1, s.amse_beta2, s.bias_beta3, s.sd_beta3, s.bias_beta4, s.sd_beta4];
                table.push_str(&prefix);
                for v in metrics {
                    table.push(',');
                    table.push_str(&format_real(v));
                }
                table.push('\n');
                for (t, tau) in s.tau.iter().enumerate() {
                    curves.push_str(&format!("{prefix},{}", format_real(*tau)));
                    for c in 0..3 {
                        curves.push_str(&format!(
                            ",{},{}",
                            format_real(s.truth_curves[(t, c)]),
                            format_real(s.mean_curves[(t, c)])
                        ));
                    }
                    curves.push('\n');
                }
            }
        }
        McKind::Size | McKind::Power => {
            table.push_str(CELL_COLUMNS);
            table.push_str(",k");
            for alpha in &plan.alphas {
                table.push_str(&format!(",rate_{}", format_real(*alpha)));
            }
            table.push('\n');
            for cell in &plan.cells {
                log::info!("rejection cell {}", cell_prefix(cell, plan.n_sim));
                let s = if kind == McKind::Size {
                    mc_size(cell, plan.n_sim, plan.k, &plan.alphas, workers)?
                } else {
                    mc_power(cell, plan.n_sim, plan.k, &plan.alphas, workers)?
                };
                table.push_str(&format!("{},{}", cell_prefix(cell, plan.n_sim), plan.k));
                for (_, rate) in &s.rates {
                    table.push(',');
                    table.push_str(&format_real(*rate));
                }
                table.push('\n');
            }
        }
    }
    write_all(Some(&a.out), table.as_bytes())?;
    if let Some(path) = &a.curves {
        if kind != McKind::Estimate {
            return Err(Error::Config {
                line: 0,
                message: "--curves is only produced by 'mc estimate'".into(),
            });
        }
        write_all(Some(path), curves.as_bytes())?;
    }
    Ok(())
}
