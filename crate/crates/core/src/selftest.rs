//! Fast property checks runnable from an installed binary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::neural::{gradient_check, Directionality, Loss, RecurrentModel};
use crate::par::Execution;
use crate::seasonal::{sam_deseasonalize, sam_fit, sam_reseasonalize};
use crate::stats::{adf_test, mae, r2, rmse, MaxLag, Significance};
use crate::synthetic::{random_walk, white_noise};
use crate::wavelet::{daubechies_filters, dwt_decompose, swt_decompose, wpd_decompose, Boundary};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Run every check; each one takes well under a second.
pub fn run_all(exec: Execution) -> Vec<Check> {
    vec![
        filters(),
        reconstruction(exec),
        metrics(),
        adf(),
        seasonal(),
        gradients(),
    ]
}

fn filters() -> Check {
    let db22 = daubechies_filters(22).map(|f| f.invariant_error());
    let db2 = daubechies_filters(2).map(|f| {
        let s3 = 3f64.sqrt();
        let d = 4.0 * 2f64.sqrt();
        let exact = [(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d];
        max_abs_diff(&f.lowpass, &exact)
    });
    match (db22, db2) {
        (Ok(e22), Ok(e2)) => check(
            "filters",
            e22 <= 1e-10 && e2 <= 1e-12,
            format!("db22 invariant error {e22:.2e}, db2 closed-form error {e2:.2e}"),
        ),
        (a, b) => check("filters", false, format!("{a:?} / {b:?}")),
    }
}

fn reconstruction(exec: Execution) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x: Vec<f64> = (0..1000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    let result = (|| -> crate::wavelet::Result<()> {
        let f = daubechies_filters(22)?;
        for boundary in [Boundary::Symmetric, Boundary::Periodic] {
            let sums = [
                wpd_decompose(&x, 3, &f, boundary)?.reconstruct_nodes(exec)?.sum(),
                dwt_decompose(&x, 3, &f, boundary)?.reconstruct_bands(exec)?.sum(),
                swt_decompose(&x, 3, &f, boundary)?.reconstruct_bands(exec)?.sum(),
            ];
            for s in sums {
                worst = worst.max(max_abs_diff(&s, &x) / scale);
            }
        }
        Ok(())
    })();
    match result {
        Ok(()) => check(
            "perfect reconstruction",
            worst <= 1e-8,
            format!("max relative error {worst:.2e} (WPD/DWT/SWT, db22, level 3)"),
        ),
        Err(e) => check("perfect reconstruction", false, e.to_string()),
    }
}

fn metrics() -> Check {
    let y = [1.0, 2.5, 3.0, 4.5, 2.0];
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ok = mae(&y, &y) == Ok(0.0)
        && rmse(&y, &y) == Ok(0.0)
        && r2(&y, &y) == Ok(1.0)
        && r2(&y, &[mean; 5]).is_ok_and(|v| v.abs() < 1e-15);
    check("metric identities", ok, "perfect and mean predictions".into())
}

fn adf() -> Check {
    let noise = adf_test(&white_noise(2000, 0.0, 3), MaxLag::Auto);
    let walk = adf_test(&random_walk(2000, 3), MaxLag::Auto);
    match (noise, walk) {
        (Ok(n), Ok(w)) => check(
            "adf",
            n.rejects(Significance::OnePercent) && !w.rejects(Significance::FivePercent),
            format!("white noise t = {:.2}, random walk t = {:.2}", n.t_statistic, w.t_statistic),
        ),
        (a, b) => check("adf", false, format!("{a:?} / {b:?}")),
    }
}

fn seasonal() -> Check {
    let x: Vec<f64> = (0..96).map(|t| ((t % 12) as f64).sin() + 0.01 * t as f64).collect();
    match sam_fit(&x, 12, 0) {
        Ok(m) => {
            let back = sam_reseasonalize(&sam_deseasonalize(&x, &m, 0), &m, 0);
            let sum = m.indices.iter().sum::<f64>().abs();
            let err = max_abs_diff(&back, &x);
            check(
                "seasonal identities",
                sum < 1e-12 && err < 1e-12,
                format!("index sum {sum:.1e}, roundtrip error {err:.1e}"),
            )
        }
        Err(e) => check("seasonal identities", false, e.to_string()),
    }
}

fn gradients() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = RecurrentModel::init(Directionality::Bi, 4, &mut rng);
    let x: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    match gradient_check(&model, &x, &y, 3, Loss::Mae, 1e-5, 1e-6) {
        Ok(r) => check(
            "gradient check",
            r.max_relative_error < 1e-4,
            format!(
                "{} parameters, max relative error {:.2e} at {}",
                r.checked, r.max_relative_error, r.worst_parameter
            ),
        ),
        Err(e) => check("gradient check", false, e.to_string()),
    }
}
