//! Plain split conformal prediction with the two score families, no
//! boosting: fit baselines on a training split, calibrate the score quantile
//! on a disjoint split, and check coverage and length on fresh data.
//!
//! ```bash
//! cargo run --example split_conformal
//! ```

use confboost::conformal::{calibrate, interval_cqr, interval_local};
use confboost::data::{split, synth_heteroskedastic};
use confboost::pipeline::{fit_baseline_cqr, fit_baseline_local, BoostConfig};
use confboost::scores::{CqrScoreEval, ScoreParams};

fn main() {
    let alpha = 0.1;
    let ds = synth_heteroskedastic(3000, 2, 11).expect("generator");
    let fresh = synth_heteroskedastic(2000, 2, 12).expect("generator");
    let parts = split(ds.n_rows(), 0.6, 99).expect("split");
    let train = ds.select_rows(&parts.train);
    let calib = ds.select_rows(&parts.calib);

    let cfg = BoostConfig { baseline_rounds: 60, ..BoostConfig::default() };

    // Location/scale family: residual score |y - mu| / sigma.
    let local = fit_baseline_local(&train, &cfg).expect("baseline");
    let mu = local.mu.predict(&calib.features);
    let log_sigma: Vec<f64> =
        local.predict_sigma(&calib.features).into_iter().map(f64::ln).collect();
    let params = ScoreParams::Local { mu: &mu, log_sigma: &log_sigma };
    let q = calibrate(&params.scores(&calib.response).unwrap(), alpha).expect("calibrate");
    println!("local score: calibrated quantile {:.4} from {} points", q.value, q.n_calib);

    let mu_f = local.mu.predict(&fresh.features);
    let sigma_f = local.predict_sigma(&fresh.features);
    let mut covered = 0;
    let mut total_len = 0.0;
    for i in 0..fresh.n_rows() {
        let iv = interval_local(mu_f[i], sigma_f[i], &q);
        if iv.contains(fresh.response[i]) {
            covered += 1;
        }
        total_len += iv.width();
    }
    println!(
        "  fresh-data coverage {:.3} (target {:.2}), average length {:.3}",
        covered as f64 / fresh.n_rows() as f64,
        1.0 - alpha,
        total_len / fresh.n_rows() as f64
    );

    // Two-sided family: quantile-pair score max{q_lo - y, y - q_hi}.
    let cqr = fit_baseline_cqr(&train, alpha, &cfg).expect("baseline");
    let (lo, hi) = cqr.predict_pair(&calib.features);
    let ones = vec![1.0; lo.len()];
    let params = ScoreParams::Cqr { mu1: &lo, mu2: &hi, sigma: &ones };
    let q = calibrate(&params.scores(&calib.response).unwrap(), alpha).expect("calibrate");
    println!("two-sided score: calibrated quantile {:.4}", q.value);

    let (lo_f, hi_f) = cqr.predict_pair(&fresh.features);
    let mut covered = 0;
    let mut total_len = 0.0;
    for i in 0..fresh.n_rows() {
        let iv = interval_cqr(&CqrScoreEval { mu1: lo_f[i], mu2: hi_f[i], sigma: 1.0 }, &q);
        if iv.contains(fresh.response[i]) {
            covered += 1;
        }
        total_len += iv.width();
    }
    println!(
        "  fresh-data coverage {:.3} (target {:.2}), average length {:.3}",
        covered as f64 / fresh.n_rows() as f64,
        1.0 - alpha,
        total_len / fresh.n_rows() as f64
    );
}
