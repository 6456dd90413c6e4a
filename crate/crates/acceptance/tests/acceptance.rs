//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

use std::path::PathBuf;
use std::time::Instant;

use fscns::em::{e_step_ns, fit_fsc_ns, fit_fsc_srs, EmConfig, Method, Model, Weights};
use fscns::harness::{lemma_demo, run_grid, Grid, GridRow, SimConfig};
use fscns::metrics::enrichment_ratio;
use fscns::mixture::{latent_pair_marginal, ns_density, single_indicator_marginal, Component};
use fscns::sampling::{generate_dataset, GroupSizes, RankingModel, RngSeed, UnitSource};
use fscns::wdbc::{load_wdbc, run_wdbc, WdbcConfig};
use fscns::{ComponentParams, MixtureParams, RareEventParams, SetSize};
use rand::Rng;

/// Largest per-iteration decrease and largest iteration count over every fit run here.
#[derive(Default)]
struct AscentLog {
    fits: usize,
    max_drop: f64,
    max_iter: usize,
}

impl AscentLog {
    fn record(&mut self, drop: f64, iterations: usize, fits: usize) {
        self.fits += fits;
        self.max_drop = self.max_drop.max(drop);
        self.max_iter = self.max_iter.max(iterations);
    }

    fn rows(&mut self, rows: &[GridRow]) {
        for r in rows {
            self.record(
                r.max_loglik_drop,
                r.max_iterations,
                r.replicates - r.aborted,
            );
        }
    }
}

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn k(n: u32) -> SetSize {
    SetSize::new(n).unwrap()
}

fn reference() -> MixtureParams {
    MixtureParams::new(
        0.40,
        ComponentParams::standard(),
        ComponentParams::new(3.5, 1.2).unwrap(),
    )
    .unwrap()
}

fn random_psi<R: Rng>(rng: &mut R) -> MixtureParams {
    MixtureParams::new(
        rng.random_range(0.05..0.95),
        ComponentParams::new(rng.random_range(-2.0..2.0), rng.random_range(0.3..2.5)).unwrap(),
        ComponentParams::new(rng.random_range(-1.0..5.0), rng.random_range(0.3..2.5)).unwrap(),
    )
    .unwrap()
}

fn propriety() -> Outcome {
    let mut rng = RngSeed::new(1, 0).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let psi = random_psi(&mut rng);
        let kk = k(rng.random_range(1..=6));
        let x = rng.random_range(-4.0..7.0);
        let g = ns_density(x, &psi, kk);
        let m = latent_pair_marginal(x, &psi, kk);
        worst = worst.max((m - g).abs() / g);
    }
    Outcome {
        id: 1,
        title: "latent-pair marginal equals the NS density",
        pass: worst <= 1e-12,
        detail: format!("max relative error {worst:.3e} over 1000 triples (tol 1e-12)"),
    }
}

fn improperness() -> Outcome {
    let psi = MixtureParams::new(
        0.5,
        ComponentParams::standard(),
        ComponentParams::new(2.0, 1.5).unwrap(),
    )
    .unwrap();
    let gap = [-1.0, 0.0, 1.0, 2.5]
        .iter()
        .map(|&x| {
            let g = ns_density(x, &psi, k(2));
            (single_indicator_marginal(x, &psi, k(2)) - g).abs() / g
        })
        .fold(f64::INFINITY, f64::min);
    let demo = lemma_demo(&reference(), k(3), 2000, 2025, None).unwrap();
    let (c, w) = (demo.argmax_correct, demo.argmax_improper);
    Outcome {
        id: 2,
        title: "single-indicator augmentation is improper",
        pass: gap > 1e-6 && (0.35..=0.45).contains(&c) && w < c - 0.10,
        detail: format!("min relative gap {gap:.3e}; argmax pi: correct {c:.2}, improper {w:.2}"),
    }
}

fn reduction(log: &mut AscentLog) -> Outcome {
    let mut rng = RngSeed::new(3, 0).rng();
    let mut worst: f64 = 0.0;
    let mut same_len = true;
    for i in 0..20 {
        let psi = random_psi(&mut rng);
        let sizes = GroupSizes {
            n1: 15,
            n2: 15,
            n3: 150,
        };
        let d = generate_dataset(
            &psi,
            k(1),
            sizes,
            &RankingModel::perfect(),
            RngSeed::new(30, i),
        )
        .unwrap();
        let w = Weights::new(1.0, 1.0, rng.random_range(0.5..5.0)).unwrap();
        let cfg = EmConfig::default();
        let ns = fit_fsc_ns(&d, &w, &cfg, Model::GeneralGaussian).unwrap();
        let srs = fit_fsc_srs(&d, &w, &cfg, Model::GeneralGaussian).unwrap();
        for f in [&ns, &srs] {
            log.record(f.max_loglik_drop(), f.iterations, 1);
        }
        same_len &= ns.loglik_trace.len() == srs.loglik_trace.len();
        for (a, b) in ns.loglik_trace.iter().zip(&srs.loglik_trace) {
            worst = worst.max((a - b).abs());
        }
        let (p, q) = (ns.psi_hat, srs.psi_hat);
        for (a, b) in [
            (p.pi, q.pi),
            (p.comp1.mu, q.comp1.mu),
            (p.comp1.sigma, q.comp1.sigma),
            (p.comp2.mu, q.comp2.mu),
            (p.comp2.sigma, q.comp2.sigma),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    Outcome {
        id: 3,
        title: "FSC-NS reduces to FSC-SRS at k = 1",
        pass: same_len && worst <= 1e-8,
        detail: format!("20 datasets, max trace/estimate difference {worst:.3e}"),
    }
}

/// Joint frequencies of (Z, V) given the maximum near `y`, against
/// Bernoulli(z̃) x Binomial(k − 1, ṽ/(k − 1)).
fn e_step_oracle() -> Outcome {
    let cases = [
        (reference(), 3.5),
        (
            MixtureParams::new(
                0.7,
                ComponentParams::new(0.0, 1.0).unwrap(),
                ComponentParams::new(2.0, 0.8).unwrap(),
            )
            .unwrap(),
            1.8,
        ),
        (
            MixtureParams::new(
                0.25,
                ComponentParams::new(1.0, 2.0).unwrap(),
                ComponentParams::new(3.0, 1.0).unwrap(),
            )
            .unwrap(),
            3.0,
        ),
    ];
    let kk = 4u32;
    let h = 0.05;
    let mut worst_z: f64 = 0.0;
    let mut kept_min = usize::MAX;
    for (ci, (psi, y)) in cases.iter().enumerate() {
        let mut rng = RngSeed::new(5, ci as u64).rng();
        let mut counts = [[0usize; 4]; 2];
        let mut kept = 0usize;
        let mut set = [(0.0, Component::First); 4];
        while kept < 20_000 {
            for u in set.iter_mut() {
                *u = psi.draw(&mut rng);
            }
            let imax = (0..4)
                .max_by(|&a, &b| set[a].0.total_cmp(&set[b].0))
                .unwrap();
            if (set[imax].0 - y).abs() > h {
                continue;
            }
            let z = (set[imax].1 == Component::First) as usize;
            let v = (0..4)
                .filter(|&i| i != imax && set[i].1 == Component::First)
                .count();
            counts[z][v] += 1;
            kept += 1;
        }
        kept_min = kept_min.min(kept);
        let post = e_step_ns(&[*y], psi, k(kk)).unwrap();
        let (zt, p) = (post.z_tilde[0], post.v_tilde[0] / (kk - 1) as f64);
        let binom = |v: usize| {
            let c = [1.0, 3.0, 3.0, 1.0][v];
            c * p.powi(v as i32) * (1.0 - p).powi(3 - v as i32)
        };
        for z in 0..2 {
            for v in 0..4 {
                let expect = (if z == 1 { zt } else { 1.0 - zt }) * binom(v);
                let freq = counts[z][v] as f64 / kept as f64;
                let se = (expect * (1.0 - expect) / kept as f64).sqrt().max(1e-12);
                worst_z = worst_z.max((freq - expect).abs() / se);
            }
        }
    }
    Outcome {
        id: 5,
        title: "E-step matches the rejection-sampling conditional law of (Z, V)",
        pass: worst_z < 3.0,
        detail: format!(
            "k = 4, 3 parameter sets, {kept_min} accepted sets each, max |z-score| {worst_z:.2}"
        ),
    }
}

fn enrichment() -> Outcome {
    let p = RareEventParams::new(0.05, 4.0, 1.5).unwrap();
    let target = [(2, 2.3), (3, 3.1), (5, 4.6), (8, 6.2)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (kk, t) in target {
        let er = enrichment_ratio(&p, k(kk)).unwrap();
        pass &= (er - t).abs() <= 0.05;
        parts.push(format!("ER({kk}) = {er:.3} (target {t})"));
    }
    Outcome {
        id: 6,
        title: "enrichment ratio at (0.05, 4, 1.5)",
        pass,
        detail: parts.join(", "),
    }
}

fn reference_cell(kk: Vec<u32>, replicates: usize) -> SimConfig {
    SimConfig {
        grid: Grid {
            epsilon: vec![0.05],
            delta: vec![4.0],
            tau: vec![1.5],
            k: kk,
            rho: vec![0.85],
            w3: vec![3.0],
            n3: vec![200],
        },
        replicates,
        seed: 2025,
        ..SimConfig::default()
    }
}

fn find<'a>(rows: &'a [GridRow], kk: u32, method: Method) -> &'a GridRow {
    rows.iter()
        .find(|r| r.scenario.k == kk && r.method == method)
        .unwrap()
}

fn simulation_cell(rows: &[GridRow]) -> Outcome {
    let (ns3, srs3, srs5) = (
        find(rows, 3, Method::Ns),
        find(rows, 3, Method::Srs),
        find(rows, 5, Method::Srs),
    );
    let pass = (0.78..=0.88).contains(&ns3.metrics.ari)
        && (0.32..=0.52).contains(&srs3.metrics.ari)
        && srs5.metrics.sensitivity > 0.97
        && srs5.metrics.ari < 0.10;
    Outcome {
        id: 7,
        title: "reference simulation cell, B = 100",
        pass,
        detail: format!(
            "k=3 ARI NS {:.3} SRS {:.3}; k=5 SRS sensitivity {:.3} ARI {:.3}; aborted {}",
            ns3.metrics.ari,
            srs3.metrics.ari,
            srs5.metrics.sensitivity,
            srs5.metrics.ari,
            rows.iter().map(|r| r.aborted).sum::<usize>()
        ),
    }
}

fn calibration(rows: &[GridRow]) -> Outcome {
    let (ns, srs) = (find(rows, 3, Method::Ns), find(rows, 3, Method::Srs));
    let (bn, bs) = (ns.estimation.weight.bias, srs.estimation.weight.bias);
    Outcome {
        id: 8,
        title: "epsilon bias in the reference cell, B = 100",
        pass: bn.abs() < 0.02 && bs > 0.25,
        detail: format!(
            "bias(eps) NS {bn:+.4} SRS {bs:+.4}; bias(delta) NS {:+.3}, bias(tau) NS {:+.3}",
            ns.estimation.location.bias, ns.estimation.scale.bias
        ),
    }
}

fn ranking_robustness(log: &mut AscentLog) -> Outcome {
    let cfg = SimConfig {
        grid: Grid {
            epsilon: vec![0.05],
            delta: vec![3.0, 4.0, 5.0],
            tau: vec![1.0, 1.5, 2.0],
            k: vec![3],
            rho: vec![1.0, 0.85, 0.60],
            w3: vec![3.0],
            n3: vec![200],
        },
        replicates: 50,
        seed: 2025,
        ..SimConfig::default()
    };
    let rows = run_grid(&cfg).unwrap();
    log.rows(&rows);
    let mean_ari = |method: Method, rho: f64| {
        let sel: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == method && r.scenario.rho == rho)
            .map(|r| r.metrics.ari)
            .collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let ns: Vec<f64> = [1.0, 0.85, 0.60]
        .iter()
        .map(|&r| mean_ari(Method::Ns, r))
        .collect();
    let srs: Vec<f64> = [1.0, 0.85, 0.60]
        .iter()
        .map(|&r| mean_ari(Method::Srs, r))
        .collect();
    let spread = ns.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ns.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome {
        id: 9,
        title: "ranking-quality robustness over 9 cells, B = 50",
        pass: spread < 0.06 && srs[0] < srs[1] && srs[1] < srs[2],
        detail: format!(
            "rho = 1/0.85/0.60: NS ARI {:.3}/{:.3}/{:.3} (spread {spread:.3}); SRS ARI {:.3}/{:.3}/{:.3}",
            ns[0], ns[1], ns[2], srs[0], srs[1], srs[2]
        ),
    }
}

fn wdbc(log: &mut AscentLog) -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.data");
    let records = match load_wdbc(&path) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                id: 10,
                title: "WDBC imposed-NS experiment",
                pass: false,
                detail: format!("cannot load data: {e}"),
            }
        }
    };
    let cfg = WdbcConfig {
        k: vec![4],
        w3: vec![0.0, 4.0],
        replicates: 100,
        seed: 2025,
        ..WdbcConfig::default()
    };
    let rows = run_wdbc(&records, &cfg).unwrap();
    for r in &rows {
        log.record(
            r.max_loglik_drop,
            r.max_iterations,
            r.replicates - r.aborted,
        );
    }
    let row = |w3: f64, m: Method| rows.iter().find(|r| r.w3 == w3 && r.method == m).unwrap();
    let (ns, srs, ns0) = (
        row(4.0, Method::Ns),
        row(4.0, Method::Srs),
        row(0.0, Method::Ns),
    );
    let pass = (0.59..=0.70).contains(&ns.metrics.ari)
        && (0.955..=0.980).contains(&ns.metrics.auc)
        && (0.28..=0.35).contains(&ns.mean_pi)
        && (0.51..=0.62).contains(&srs.metrics.ari)
        && ns0.mean_iterations <= 3.0;
    Outcome {
        id: 10,
        title: "WDBC at k = 4, w3 = 4, B = 100",
        pass,
        detail: format!(
            "NS ARI {:.4} AUC {:.4} pi {:.4} error {:.4}; SRS ARI {:.4}; w3=0 NS iterations {:.2}",
            ns.metrics.ari,
            ns.metrics.auc,
            ns.mean_pi,
            ns.metrics.error_rate,
            srs.metrics.ari,
            ns0.mean_iterations
        ),
    }
}

/// ARI averaged over the 27 (ε, δ, τ) cells at ρ = 0.85, w₃ = 3, B = 50, per set size.
/// Reported alongside the criteria and counted in the exit status.
fn set_size_averages(log: &mut AscentLog) -> (bool, String) {
    let cfg = SimConfig {
        grid: Grid {
            k: vec![2, 3, 5, 8],
            rho: vec![0.85],
            ..Grid::default()
        },
        replicates: 50,
        seed: 2025,
        methods: vec![Method::Ns, Method::Srs],
        ..SimConfig::default()
    };
    let rows = run_grid(&cfg).unwrap();
    log.rows(&rows);
    let published = [
        (2u32, 0.805, 0.678),
        (3, 0.803, 0.391),
        (5, 0.792, 0.084),
        (8, 0.777, 0.010),
    ];
    let mean = |kk: u32, m: Method| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.scenario.k == kk && r.method == m)
            .map(|r| r.metrics.ari)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (kk, ns_ref, srs_ref) in published {
        let (ns, srs) = (mean(kk, Method::Ns), mean(kk, Method::Srs));
        pass &= (ns - ns_ref).abs() <= 0.07 && (srs - srs_ref).abs() <= 0.07;
        parts.push(format!(
            "k={kk} NS {ns:.3} ({ns_ref}) SRS {srs:.3} ({srs_ref})"
        ));
    }
    (pass, format!("{} (tol 0.07)", parts.join("; ")))
}

/// WDBC weight sweep at B = 100 (NS only): two iterations and π̂ near one half
/// without unlabeled weight; moderate w₃ lowers π̂ and raises ARI for every k.
fn weight_sweep(log: &mut AscentLog) -> (bool, String) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/wdbc.data");
    let records = match load_wdbc(&path) {
        Ok(r) => r,
        Err(e) => return (false, format!("cannot load data: {e}")),
    };
    let cfg = WdbcConfig {
        w3: vec![0.0, 2.0, 4.0, 6.0],
        replicates: 100,
        methods: vec![Method::Ns],
        seed: 7,
        ..WdbcConfig::default()
    };
    let rows = run_wdbc(&records, &cfg).unwrap();
    for r in &rows {
        log.record(
            r.max_loglik_drop,
            r.max_iterations,
            r.replicates - r.aborted,
        );
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for k in [2, 3, 4] {
        let at = |w3: f64| rows.iter().find(|r| r.k == k && r.w3 == w3).unwrap();
        let base = at(0.0);
        let pis = [0.0, 2.0, 4.0].map(|w3| at(w3).mean_pi);
        let aris = [0.0, 2.0, 4.0, 6.0].map(|w3| at(w3).metrics.ari);
        pass &= base.mean_iterations == 2.0
            && (0.45..=0.57).contains(&pis[0])
            && pis[1] < pis[0]
            && pis[2] < pis[1]
            && aris[1..].iter().all(|&a| a > aris[0]);
        parts.push(format!(
            "k={k} iter {:.2} pi {:.3}/{:.3}/{:.3} ARI {:.3}/{:.3}/{:.3}/{:.3}",
            base.mean_iterations, pis[0], pis[1], pis[2], aris[0], aris[1], aris[2], aris[3]
        ));
    }
    (
        pass,
        format!("{} (w3=0 pi in [0.45,0.57])", parts.join("; ")),
    )
}

fn ascent(log: &AscentLog) -> Outcome {
    Outcome {
        id: 4,
        title: "EM ascent and iteration ceiling",
        pass: log.max_drop <= 1e-8 && log.max_iter <= 500,
        detail: format!(
            "{} fits, largest decrease {:.3e}, most iterations {}",
            log.fits, log.max_drop, log.max_iter
        ),
    }
}

fn main() {
    let start = Instant::now();
    let mut log = AscentLog::default();
    let mut out = vec![
        propriety(),
        improperness(),
        reduction(&mut log),
        e_step_oracle(),
        enrichment(),
    ];

    let rows = run_grid(&reference_cell(vec![3, 5], 100)).unwrap();
    log.rows(&rows);
    out.push(simulation_cell(&rows));
    out.push(calibration(&rows));
    out.push(ranking_robustness(&mut log));
    out.push(wdbc(&mut log));
    let examples = [
        ("set-size ARI averages", set_size_averages(&mut log)),
        ("WDBC weight sweep", weight_sweep(&mut log)),
    ];
    out.push(ascent(&log));
    out.sort_by_key(|o| o.id);

    for o in &out {
        println!(
            "criterion {:>2} {}: {}. {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.detail
        );
    }
    for (title, (pass, detail)) in &examples {
        println!(
            "example     {}: {title}. {detail}",
            if *pass { "PASS" } else { "FAIL" }
        );
    }
    let failed_examples: Vec<&str> = examples.iter().filter(|e| !e.1 .0).map(|e| e.0).collect();
    let failed: Vec<u32> = out.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!(
        "acceptance: {} of {} passed in {:.1}s",
        out.len() - failed.len(),
        out.len(),
        start.elapsed().as_secs_f64()
    );
    if !failed.is_empty() || !failed_examples.is_empty() {
        eprintln!("failed criteria: {failed:?}; failed examples: {failed_examples:?}");
        std::process::exit(1);
    }
}
