//! Wisconsin Diagnostic Breast Cancer data under imposed nomination sampling.
//!
//! The measured variable is y = ln(area_worst) and sets are ranked on
//! radius_worst. Malignant is component 1 and the positive class.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::{fit, EmConfig, FitResult, Method, Model, Weights};
use crate::harness::format_float;
use crate::metrics::{posterior_component, MetricsReport};
use crate::mixture::{Component, MixtureParams, SetSize};
use crate::sampling::{FscDataset, RngSeed};
use crate::{Error, Result};

pub const EXPECTED_MALIGNANT: usize = 212;
pub const EXPECTED_BENIGN: usize = 357;
/// 1-based file columns.
pub const RADIUS_WORST_COLUMN: usize = 23;
pub const AREA_WORST_COLUMN: usize = 26;
const COLUMNS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Diagnosis {
    Malignant,
    Benign,
}

impl Diagnosis {
    pub fn component(self) -> Component {
        match self {
            Diagnosis::Malignant => Component::First,
            Diagnosis::Benign => Component::Second,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdbcRecord {
    pub id: String,
    pub diagnosis: Diagnosis,
    pub radius_worst: f64,
    pub area_worst: f64,
    /// ln(area_worst)
    pub y: f64,
}

/// Parses UCI `wdbc.data` text without checking class counts.
pub fn parse_wdbc(text: &str) -> Result<Vec<WdbcRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != COLUMNS {
            return Err(err(format!(
                "expected {COLUMNS} columns, found {}",
                fields.len()
            )));
        }
        let diagnosis = match fields[1] {
            "M" => Diagnosis::Malignant,
            "B" => Diagnosis::Benign,
            other => return Err(err(format!("diagnosis must be M or B, found {other:?}"))),
        };
        let number = |col: usize| -> Result<f64> {
            fields[col - 1]
                .parse::<f64>()
                .map_err(|e| err(format!("column {col}: {e}")))
        };
        let radius_worst = number(RADIUS_WORST_COLUMN)?;
        let area_worst = number(AREA_WORST_COLUMN)?;
        if !(area_worst > 0.0 && area_worst.is_finite()) || !radius_worst.is_finite() {
            return Err(err(format!(
                "area_worst must be positive, found {area_worst}"
            )));
        }
        out.push(WdbcRecord {
            id: fields[0].to_string(),
            diagnosis,
            radius_worst,
            area_worst,
            y: area_worst.ln(),
        });
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no records".into(),
        });
    }
    Ok(out)
}

/// Reads the full file and checks the 212 / 357 class counts.
pub fn load_wdbc(path: &Path) -> Result<Vec<WdbcRecord>> {
    let text = std::fs::read_to_string(path)?;
    let records = parse_wdbc(&text)?;
    let malignant = records
        .iter()
        .filter(|r| r.diagnosis == Diagnosis::Malignant)
        .count();
    let benign = records.len() - malignant;
    if (malignant, benign) != (EXPECTED_MALIGNANT, EXPECTED_BENIGN) {
        return Err(Error::CountMismatch {
            malignant,
            benign,
            expected_malignant: EXPECTED_MALIGNANT,
            expected_benign: EXPECTED_BENIGN,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WdbcConfig {
    pub k: Vec<u32>,
    pub w3: Vec<f64>,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub replicates: usize,
    pub seed: u64,
    pub data: PathBuf,
    pub methods: Vec<Method>,
    pub em: EmConfig,
}

impl Default for WdbcConfig {
    fn default() -> Self {
        Self {
            k: vec![2, 3, 4],
            w3: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            n1: 20,
            n2: 20,
            n3: 80,
            replicates: 50,
            seed: 2025,
            data: PathBuf::from("data/wdbc.data"),
            methods: vec![Method::Ns, Method::Srs],
            em: EmConfig::default(),
        }
    }
}

impl WdbcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.w3.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "k, w3 and methods must be nonempty".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter(
                "replicates must be at least 1".into(),
            ));
        }
        for &k in &self.k {
            SetSize::new(k)?;
        }
        for &w3 in &self.w3 {
            Weights::new(1.0, 1.0, w3)?;
        }
        self.em.validate()
    }
}

/// One imposed-NS dataset and the records it used.
#[derive(Debug, Clone, PartialEq)]
pub struct WdbcReplicate {
    pub data: FscDataset,
    /// Ids of every record consumed, across all sets.
    pub used_ids: Vec<String>,
}

fn nominate<'a>(records: &'a [WdbcRecord], set: &[usize]) -> &'a WdbcRecord {
    let mut best = &records[set[0]];
    for &i in &set[1..] {
        if records[i].radius_worst > best.radius_worst {
            best = &records[i];
        }
    }
    best
}

/// Draws n₁ malignant sets, n₂ benign sets and n₃ pooled sets of size k, all
/// disjoint, and keeps the y of each set's largest radius_worst (first on ties).
pub fn build_replicate(
    records: &[WdbcRecord],
    k: SetSize,
    sizes: (usize, usize, usize),
    seed: u64,
    replicate: u64,
) -> Result<WdbcReplicate> {
    let kk = k.get() as usize;
    let (n1, n2, n3) = sizes;
    let mut rng = RngSeed::new(seed, replicate).rng();
    let mut mal: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].diagnosis == Diagnosis::Malignant)
        .collect();
    let mut ben: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].diagnosis == Diagnosis::Benign)
        .collect();
    if mal.len() < n1 * kk || ben.len() < n2 * kk || records.len() < (n1 + n2 + n3) * kk {
        return Err(Error::InsufficientData(format!(
            "need {} malignant, {} benign and {} records in total; have {}, {}, {}",
            n1 * kk,
            n2 * kk,
            (n1 + n2 + n3) * kk,
            mal.len(),
            ben.len(),
            records.len()
        )));
    }
    mal.shuffle(&mut rng);
    ben.shuffle(&mut rng);
    let mut pool: Vec<usize> = mal[n1 * kk..]
        .iter()
        .chain(&ben[n2 * kk..])
        .copied()
        .collect();
    pool.sort_unstable();
    pool.shuffle(&mut rng);

    let groups = [&mal[..n1 * kk], &ben[..n2 * kk], &pool[..n3 * kk]];
    let mut used_ids = Vec::with_capacity((n1 + n2 + n3) * kk);
    let mut values: [Vec<f64>; 3] = Default::default();
    let mut truth = Vec::with_capacity(n3);
    for (g, idx) in groups.iter().enumerate() {
        for set in idx.chunks(kk) {
            let nominee = nominate(records, set);
            values[g].push(nominee.y);
            if g == 2 {
                truth.push(nominee.diagnosis.component());
            }
            used_ids.extend(set.iter().map(|&i| records[i].id.clone()));
        }
    }
    let [l1, l2, u] = values;
    Ok(WdbcReplicate {
        data: FscDataset::new(l1, l2, u, k, Some(truth))?,
        used_ids,
    })
}

/// Summary of one (k, w₃, method) over B replicates; malignant is the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdbcRow {
    pub k: u32,
    pub w3: f64,
    pub method: Method,
    pub replicates: usize,
    pub aborted: usize,
    pub not_converged: usize,
    pub precision_undefined: usize,
    pub auc_undefined: usize,
    pub metrics: MetricsReport,
    /// Mean π̂ (malignant proportion).
    pub mean_pi: f64,
    pub mean_psi: MixtureParams,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub max_loglik_drop: f64,
}

struct Scored {
    metrics: MetricsReport,
    psi: MixtureParams,
    iterations: usize,
    converged: bool,
    max_loglik_drop: f64,
}

fn score(f: &FitResult, data: &FscDataset) -> Scored {
    let truth: Vec<bool> = data
        .truth
        .as_deref()
        .expect("replicate truth")
        .iter()
        .map(|&c| c == Component::First)
        .collect();
    let pred: Vec<bool> = f
        .classifications
        .iter()
        .map(|&c| c == Component::First)
        .collect();
    let scores: Vec<f64> = data
        .unlabeled
        .iter()
        .map(|&y| posterior_component(y, &f.psi_hat, Component::First))
        .collect();
    Scored {
        metrics: MetricsReport::compute(&truth, &pred, &scores),
        psi: f.psi_hat,
        iterations: f.iterations,
        converged: f.converged,
        max_loglik_drop: f.max_loglik_drop(),
    }
}

/// Fits every (k, w₃, method) on B imposed-NS replicates. For a given k and
/// replicate index the same dataset is reused across w₃ and methods.
pub fn run_wdbc(records: &[WdbcRecord], config: &WdbcConfig) -> Result<Vec<WdbcRow>> {
    config.validate()?;
    let b = config.replicates;
    let tasks: Vec<(usize, u64)> = (0..config.k.len())
        .flat_map(|i| (0..b as u64).map(move |r| (i, r)))
        .collect();
    // outcomes[task][w3][method]
    let outcomes: Vec<Vec<Vec<Option<Scored>>>> = tasks
        .par_iter()
        .map(|&(ki, r)| -> Result<Vec<Vec<Option<Scored>>>> {
            let k = SetSize::new(config.k[ki])?;
            let rep = build_replicate(
                records,
                k,
                (config.n1, config.n2, config.n3),
                config.seed,
                r,
            )?;
            Ok(config
                .w3
                .iter()
                .map(|&w3| {
                    let w = Weights {
                        w1: 1.0,
                        w2: 1.0,
                        w3,
                    };
                    config
                        .methods
                        .iter()
                        .map(|&m| {
                            fit(&rep.data, &w, &config.em, Model::GeneralGaussian, m)
                                .ok()
                                .map(|f| score(&f, &rep.data))
                        })
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (ki, &k) in config.k.iter().enumerate() {
        let block = &outcomes[ki * b..(ki + 1) * b];
        for (wi, &w3) in config.w3.iter().enumerate() {
            for (mi, &method) in config.methods.iter().enumerate() {
                let ok: Vec<&Scored> = block.iter().filter_map(|o| o[wi][mi].as_ref()).collect();
                rows.push(summarise(k, w3, method, b, &ok));
            }
        }
    }
    Ok(rows)
}

fn summarise(k: u32, w3: f64, method: Method, total: usize, ok: &[&Scored]) -> WdbcRow {
    let n = ok.len() as f64;
    let mean = |f: &dyn Fn(&Scored) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|s| f(s)).sum::<f64>() / n
        }
    };
    WdbcRow {
        k,
        w3,
        method,
        replicates: total,
        aborted: total - ok.len(),
        not_converged: ok.iter().filter(|s| !s.converged).count(),
        precision_undefined: ok.iter().filter(|s| s.metrics.precision_undefined).count(),
        auc_undefined: ok.iter().filter(|s| s.metrics.auc_undefined).count(),
        metrics: MetricsReport {
            ari: mean(&|s| s.metrics.ari),
            error_rate: mean(&|s| s.metrics.error_rate),
            sensitivity: mean(&|s| s.metrics.sensitivity),
            specificity: mean(&|s| s.metrics.specificity),
            precision: mean(&|s| s.metrics.precision),
            f1: mean(&|s| s.metrics.f1),
            balanced_accuracy: mean(&|s| s.metrics.balanced_accuracy),
            auc: mean(&|s| s.metrics.auc),
            log_loss: mean(&|s| s.metrics.log_loss),
            precision_undefined: false,
            auc_undefined: false,
        },
        mean_pi: mean(&|s| s.psi.pi),
        mean_psi: MixtureParams {
            pi: mean(&|s| s.psi.pi),
            comp1: crate::mixture::ComponentParams {
                mu: mean(&|s| s.psi.comp1.mu),
                sigma: mean(&|s| s.psi.comp1.sigma),
            },
            comp2: crate::mixture::ComponentParams {
                mu: mean(&|s| s.psi.comp2.mu),
                sigma: mean(&|s| s.psi.comp2.sigma),
            },
        },
        mean_iterations: mean(&|s| s.iterations as f64),
        max_iterations: ok.iter().map(|s| s.iterations).max().unwrap_or(0),
        max_loglik_drop: ok.iter().map(|s| s.max_loglik_drop).fold(0.0, f64::max),
    }
}

pub const WDBC_CSV_HEADER: &str = "k,w3,method,replicates,seed,aborted,not_converged,\
ari,error_rate,sensitivity,specificity,precision,f1,balanced_accuracy,auc,log_loss,\
precision_undefined,auc_undefined,pi_hat,mu1_hat,sigma1_hat,mu2_hat,sigma2_hat,mean_iterations,max_iterations,max_loglik_drop";

pub fn write_wdbc_csv<W: Write>(rows: &[WdbcRow], seed: u64, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{WDBC_CSV_HEADER}")?;
    for r in rows {
        let m = &r.metrics;
        let p = &r.mean_psi;
        let a = [
            m.ari,
            m.error_rate,
            m.sensitivity,
            m.specificity,
            m.precision,
            m.f1,
            m.balanced_accuracy,
            m.auc,
            m.log_loss,
        ];
        let b = [
            r.mean_pi,
            p.comp1.mu,
            p.comp1.sigma,
            p.comp2.mu,
            p.comp2.sigma,
            r.mean_iterations,
        ];
        let join = |v: &[f64]| {
            v.iter()
                .map(|&x| format_float(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.w3,
            r.method.label(),
            r.replicates,
            seed,
            r.aborted,
            r.not_converged,
            join(&a),
            r.precision_undefined,
            r.auc_undefined,
            join(&b),
            r.max_iterations,
            format_float(r.max_loglik_drop)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, dx: &str, radius: f64, area: f64) -> String {
        let mut f: Vec<String> = (0..30).map(|j| format!("{}", j as f64 + 0.5)).collect();
        f[RADIUS_WORST_COLUMN - 3] = radius.to_string();
        f[AREA_WORST_COLUMN - 3] = area.to_string();
        format!("{id},{dx},{}", f.join(","))
    }

    #[test]
    fn fixture_round_trip() {
        let text = [
            row("842302", "M", 25.38, 2019.0),
            row("8510426", "B", 14.97, 711.2),
            row("9", "M", 1.0, 1.0),
        ]
        .join("\n");
        let r = parse_wdbc(&text).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].id, "842302");
        assert_eq!(r[1].diagnosis, Diagnosis::Benign);
        assert_eq!((r[0].radius_worst, r[0].area_worst), (25.38, 2019.0));
        assert_eq!(r[1].y, 711.2f64.ln());
        assert_eq!(r[2].y, 0.0);
    }

    #[test]
    fn parse_errors_name_the_line() {
        assert!(matches!(parse_wdbc(""), Err(Error::Parse { .. })));
        let text = format!("{}\n1,X,2", row("1", "M", 1.0, 2.0));
        assert!(matches!(
            parse_wdbc(&text),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad = row("1", "B", 1.0, -3.0);
        assert!(matches!(
            parse_wdbc(&bad),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    fn synthetic(n_m: usize, n_b: usize) -> Vec<WdbcRecord> {
        (0..n_m + n_b)
            .map(|i| WdbcRecord {
                id: i.to_string(),
                diagnosis: if i < n_m {
                    Diagnosis::Malignant
                } else {
                    Diagnosis::Benign
                },
                radius_worst: ((i * 37) % 101) as f64,
                area_worst: 1.0 + i as f64,
                y: (1.0 + i as f64).ln(),
            })
            .collect()
    }

    #[test]
    fn replicate_is_disjoint_and_nominates_maxima() {
        let recs = synthetic(60, 100);
        let k = SetSize::new(2).unwrap();
        let rep = build_replicate(&recs, k, (10, 10, 30), 1, 0).unwrap();
        assert_eq!(rep.used_ids.len(), 100);
        let set: std::collections::HashSet<_> = rep.used_ids.iter().collect();
        assert_eq!(set.len(), 100);
        let by_id = |id: &String| &recs[id.parse::<usize>().unwrap()];
        let all: Vec<f64> = rep
            .data
            .labeled1
            .iter()
            .chain(&rep.data.labeled2)
            .chain(&rep.data.unlabeled)
            .copied()
            .collect();
        for (s, pair) in rep.used_ids.chunks(2).enumerate() {
            let (a, b) = (by_id(&pair[0]), by_id(&pair[1]));
            let expect = if b.radius_worst > a.radius_worst {
                b.y
            } else {
                a.y
            };
            assert_eq!(all[s], expect);
        }
        assert!(rep.data.labeled1.iter().all(|&y| y <= 60f64.ln()));
        assert!(rep.data.labeled2.iter().all(|&y| y > 60f64.ln()));
    }

    #[test]
    fn insufficient_records() {
        let recs = synthetic(30, 30);
        assert!(matches!(
            build_replicate(&recs, SetSize::new(4).unwrap(), (10, 5, 5), 1, 0),
            Err(Error::InsufficientData(_))
        ));
    }
}
