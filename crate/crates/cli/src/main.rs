use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fscns::em::{fit, EmConfig, FitResult, InitStrategy, Method, Model, Weights};
use fscns::harness::{
    lemma_demo, run_grid, with_jobs, write_grid_csv, write_lemma_csv, SimConfig, SurfaceGrid,
};
use fscns::metrics::enrichment_ratio;
use fscns::mixture::{Component, ComponentParams, MixtureParams, RareEventParams, SetSize};
use fscns::sampling::{draw_ns_max, RngSeed};
use fscns::wdbc::{load_wdbc, run_wdbc, write_wdbc_csv, WdbcConfig};
use fscns_cli::config::{apply_overrides, from_table, read_table};
use fscns_cli::dataset::read_dataset;
use fscns_cli::manifest::{manifest_path, RunManifest};
use fscns_cli::{exit, exit_code};

/// Fractionally supervised classification for nomination-sampled data.
#[derive(Parser)]
#[command(name = "fscns", version)]
struct Cli {
    /// Worker threads for replicate-parallel commands (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit FSC-NS or FSC-SRS to a dataset file.
    Fit(FitArgs),
    /// Run a Monte Carlo grid and write one CSV row per scenario and method.
    Simulate(ConfigArgs),
    /// Run the WDBC imposed-NS experiment.
    Wdbc(WdbcArgs),
    /// Profile the correct and single-indicator objectives over π.
    Lemma(LemmaArgs),
    /// Tabulate the enrichment ratio ER(k).
    Enrichment(EnrichmentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    General,
    Rare,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ns,
    Srs,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with header group,value[,truth].
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    k: u32,
    /// w1,w2,w3
    #[arg(long, default_value = "1,1,1", value_parser = parse_weights)]
    weights: Weights,
    #[arg(long, value_enum, default_value = "general")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "ns")]
    method: MethodArg,
    /// Seed for the k-means restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Start from component moments of the labeled groups instead of k-means.
    #[arg(long)]
    labeled_start: bool,
    /// JSON report path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set grid.k=[3,5].
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WdbcArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Data file; defaults to the config's `data`, then $FSCNS_DATA_DIR/wdbc.data.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, default_value_t = 0.4)]
    pi: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu1: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma1: f64,
    #[arg(long, default_value_t = 3.5, allow_hyphen_values = true)]
    mu2: f64,
    #[arg(long, default_value_t = 1.2)]
    sigma2: f64,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2025)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write ℓ_C and ℓ_W over a (μ₂, σ₂) grid to this file.
    #[arg(long)]
    surface_out: Option<PathBuf>,
}

#[derive(Args)]
struct EnrichmentArgs {
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long, default_value_t = 1.5)]
    tau: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,8")]
    k: Vec<u32>,
    /// Also estimate ER(k) from this many simulated sets.
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long, default_value_t = 2025)]
    seed: u64,
    /// CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_weights(s: &str) -> std::result::Result<Weights, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [w1, w2, w3] => Weights::new(*w1, *w2, *w3).map_err(|e| e.to_string()),
        _ => Err(format!("expected w1,w2,w3, got {} values", v.len())),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a, cli.jobs),
        Command::Wdbc(a) => cmd_wdbc(a, cli.jobs),
        Command::Lemma(a) => cmd_lemma(a),
        Command::Enrichment(a) => cmd_enrichment(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}

#[derive(Serialize)]
struct Observation {
    value: f64,
    z_tilde: f64,
    v_tilde: f64,
    /// Posterior probability of component 2.
    score: f64,
    class: u8,
}

#[derive(Serialize)]
struct FitReport<'a> {
    method: &'static str,
    model: Model,
    k: u32,
    weights: Weights,
    psi_hat: MixtureParams,
    rare: Option<RareEventParams>,
    iterations: usize,
    converged: bool,
    loglik: f64,
    loglik_trace: &'a [f64],
    unlabeled: Vec<Observation>,
}

fn fit_report<'a>(
    f: &'a FitResult,
    data: &fscns::sampling::FscDataset,
    w: Weights,
) -> FitReport<'a> {
    let unlabeled = data
        .unlabeled
        .iter()
        .enumerate()
        .map(|(r, &value)| Observation {
            value,
            z_tilde: f.posteriors.z_tilde[r],
            v_tilde: f.posteriors.v_tilde[r],
            score: f.scores[r],
            class: f.classifications[r].index(),
        })
        .collect();
    FitReport {
        method: f.method.label(),
        model: f.model,
        k: data.k.get(),
        weights: w,
        psi_hat: f.psi_hat,
        rare: (f.model == Model::RareEvent).then(|| f.rare_params()),
        iterations: f.iterations,
        converged: f.converged,
        loglik: f.final_loglik(),
        loglik_trace: &f.loglik_trace,
        unlabeled,
    }
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let k = SetSize::new(a.k)?;
    let w = a.weights;
    let data = read_dataset(&a.data, k)?;
    let config = EmConfig {
        tol: a.tol,
        max_iter: a.max_iter,
        threshold: a.threshold,
        kmeans_seed: a.seed,
        init: if a.labeled_start {
            InitStrategy::LabeledMoments
        } else {
            InitStrategy::KMeans
        },
        ..EmConfig::default()
    };
    let model = match a.model {
        ModelArg::General => Model::GeneralGaussian,
        ModelArg::Rare => Model::RareEvent,
    };
    let method = match a.method {
        MethodArg::Ns => Method::Ns,
        MethodArg::Srs => Method::Srs,
    };
    let echo = serde_json::json!({
        "data": a.data, "k": a.k, "weights": w, "model": model, "method": method, "em": config,
    });
    let mut manifest = RunManifest::start("fit", echo, Some(a.seed));
    let f = fit(&data, &w, &config, model, method)?;
    let text = serde_json::to_string_pretty(&fit_report(&f, &data, w))? + "\n";
    match &a.out {
        Some(path) => {
            create(path)?.write_all(text.as_bytes())?;
            manifest.finish(0, vec![path.clone()]);
            manifest.write(&manifest_path(path))?;
            eprintln!(
                "{}: {} iterations, converged {}, loglik {:.6}",
                f.method.label(),
                f.iterations,
                f.converged,
                f.final_loglik()
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_simulate(a: ConfigArgs, jobs: Option<usize>) -> Result<()> {
    let mut table = read_table(a.config.as_deref())?;
    apply_overrides(&mut table, &a.overrides)?;
    let config: SimConfig = from_table(table)?;
    config.validate()?;
    let mut manifest = RunManifest::start(
        "simulate",
        serde_json::to_value(&config)?,
        Some(config.seed),
    );
    let rows = with_jobs(jobs, || run_grid(&config))??;
    write_grid_csv(&rows, create(&a.out)?)?;
    let aborted = rows.iter().map(|r| r.aborted).sum();
    manifest.finish(aborted, vec![a.out.clone()]);
    manifest.write(&manifest_path(&a.out))?;
    eprintln!(
        "{} rows written to {}; {aborted} aborted fits",
        rows.len(),
        a.out.display()
    );
    Ok(())
}

fn wdbc_data_path(flag: Option<PathBuf>, table: &toml::Table) -> Option<PathBuf> {
    if flag.is_some() {
        return flag;
    }
    if table.contains_key("data") {
        return None;
    }
    std::env::var_os("FSCNS_DATA_DIR").map(|d| PathBuf::from(d).join("wdbc.data"))
}

fn cmd_wdbc(a: WdbcArgs, jobs: Option<usize>) -> Result<()> {
    let mut table = read_table(a.common.config.as_deref())?;
    apply_overrides(&mut table, &a.common.overrides)?;
    let data = wdbc_data_path(a.data, &table);
    let mut config: WdbcConfig = from_table(table)?;
    if let Some(d) = data {
        config.data = d;
    }
    config.validate()?;
    let records =
        load_wdbc(&config.data).with_context(|| format!("loading {}", config.data.display()))?;
    let mut manifest =
        RunManifest::start("wdbc", serde_json::to_value(&config)?, Some(config.seed));
    let rows = with_jobs(jobs, || run_wdbc(&records, &config))??;
    let out = &a.common.out;
    write_wdbc_csv(&rows, config.seed, create(out)?)?;
    let aborted = rows.iter().map(|r| r.aborted).sum();
    manifest.finish(aborted, vec![out.clone()]);
    manifest.write(&manifest_path(out))?;
    eprintln!(
        "{} rows written to {}; {aborted} aborted fits",
        rows.len(),
        out.display()
    );
    Ok(())
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn cmd_lemma(a: LemmaArgs) -> Result<()> {
    let psi = MixtureParams::new(
        a.pi,
        ComponentParams::new(a.mu1, a.sigma1)?,
        ComponentParams::new(a.mu2, a.sigma2)?,
    )?;
    let k = SetSize::new(a.k)?;
    let surface = a.surface_out.as_ref().map(|_| SurfaceGrid {
        mu2: grid(a.mu2 - 2.0, a.mu2 + 2.0, 0.05),
        sigma2: grid((a.sigma2 - 1.0).max(0.2), a.sigma2 + 1.5, 0.05),
    });
    let echo = serde_json::json!({ "psi0": psi, "k": a.k, "n": a.n });
    let mut manifest = RunManifest::start("lemma", echo, Some(a.seed));
    let demo = lemma_demo(&psi, k, a.n, a.seed, surface)?;
    write_lemma_csv(&demo, create(&a.out)?)?;
    let mut outputs = vec![a.out.clone()];
    if let (Some(path), Some(s)) = (&a.surface_out, &demo.surface) {
        let mut w = create(path)?;
        writeln!(w, "mu2,sigma2,loglik_correct,loglik_improper")?;
        for (i, mu) in s.grid.mu2.iter().enumerate() {
            for (j, sd) in s.grid.sigma2.iter().enumerate() {
                writeln!(
                    w,
                    "{mu},{sd},{:.16e},{:.16e}",
                    s.correct[i][j], s.improper[i][j]
                )?;
            }
        }
        println!(
            "surface argmax (mu2, sigma2): correct ({:.2}, {:.2}), improper ({:.2}, {:.2})",
            s.argmax_correct.0, s.argmax_correct.1, s.argmax_improper.0, s.argmax_improper.1
        );
        outputs.push(path.clone());
    }
    println!(
        "argmax pi: correct {:.2}, improper {:.2}",
        demo.argmax_correct, demo.argmax_improper
    );
    manifest.finish(0, outputs);
    manifest.write(&manifest_path(&a.out))?;
    Ok(())
}

fn cmd_enrichment(a: EnrichmentArgs) -> Result<()> {
    let p = RareEventParams::new(a.epsilon, a.delta, a.tau)?;
    if a.k.is_empty() {
        bail!(fscns::Error::InvalidParameter("k list is empty".into()));
    }
    let mut text = String::from(if a.mc.is_some() {
        "k,er,er_mc,er_mc_se\n"
    } else {
        "k,er\n"
    });
    for &kk in &a.k {
        let k = SetSize::new(kk)?;
        let er = enrichment_ratio(&p, k)?;
        text += &format!("{kk},{er:.16e}");
        if let Some(sets) = a.mc {
            let mut rng = RngSeed::new(a.seed, kk as u64).rng();
            let mix = p.to_mixture();
            let rare = (0..sets)
                .filter(|_| draw_ns_max(&mix, k, &mut rng).1 == Component::Second)
                .count() as f64;
            let frac = rare / sets as f64;
            let se = (frac * (1.0 - frac) / sets as f64).sqrt();
            text += &format!(",{:.16e},{:.16e}", frac / a.epsilon, se / a.epsilon);
        }
        text.push('\n');
    }
    match &a.out {
        Some(path) => {
            create(path)?.write_all(text.as_bytes())?;
            let echo = serde_json::json!({ "params": p, "k": a.k, "mc": a.mc });
            let mut m = RunManifest::start("enrichment", echo, Some(a.seed));
            m.finish(0, vec![path.clone()]);
            m.write(&manifest_path(path))?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
