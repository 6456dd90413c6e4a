use fscns::em::Method;
use fscns::harness::{run_grid, Grid, GridRow, SimConfig};

fn mean_over(
    rows: &[GridRow],
    pick: impl Fn(&GridRow) -> bool,
    f: impl Fn(&GridRow) -> f64,
) -> f64 {
    let v: Vec<f64> = rows.iter().filter(|r| pick(r)).map(f).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn full_cells(k: Vec<u32>, rho: Vec<f64>, methods: Vec<Method>) -> SimConfig {
    SimConfig {
        grid: Grid {
            k,
            rho,
            ..Grid::default()
        },
        replicates: 50,
        seed: 2025,
        methods,
        ..SimConfig::default()
    }
}

/// The SRS ε̂ bias shrinks as ranking gets noisier.
#[test]
fn srs_bias_falls_with_ranking_noise() {
    let rows = run_grid(&full_cells(
        vec![3],
        vec![1.0, 0.85, 0.60],
        vec![Method::Srs],
    ))
    .unwrap();
    let bias = |rho: f64| {
        mean_over(
            &rows,
            |r| r.scenario.rho == rho,
            |r| r.estimation.weight.bias,
        )
    };
    let (b1, b2, b3) = (bias(1.0), bias(0.85), bias(0.60));
    assert!(b1 > b2 && b2 > b3, "{b1} {b2} {b3}");
}

/// Classification and estimation detail in the reference cell at B = 100.
#[test]
fn reference_cell_details() {
    let cfg = SimConfig {
        grid: Grid {
            epsilon: vec![0.05],
            delta: vec![4.0],
            tau: vec![1.5],
            k: vec![3],
            rho: vec![0.85],
            w3: vec![3.0],
            n3: vec![200],
        },
        replicates: 100,
        seed: 99,
        ..SimConfig::default()
    };
    let rows = run_grid(&cfg).unwrap();
    let ns = rows.iter().find(|r| r.method == Method::Ns).unwrap();
    assert!(
        (ns.metrics.f1 - 0.880).abs() <= 0.05,
        "F1 {}",
        ns.metrics.f1
    );
    assert!(
        (ns.estimation.location.bias - 0.117).abs() <= 0.1,
        "bias delta {}",
        ns.estimation.location.bias
    );
    assert!(
        (ns.estimation.scale.bias + 0.112).abs() <= 0.1,
        "bias tau {}",
        ns.estimation.scale.bias
    );
    for r in &rows {
        assert!(r.estimation.weight.rmse >= r.estimation.weight.bias.abs());
        assert_eq!(r.aborted, 0);
    }
}
