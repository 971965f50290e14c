//! The equivalence between the two-sided and location/scale score families:
//! reducing a quantile pair to its midpoint and half-width turns the
//! width-rescaled two-sided score into the affine image 2E + 1 of the
//! location/scale score, so both calibrate to identical intervals.
//!
//! ```bash
//! cargo run --example score_equivalence
//! ```

use confboost::conformal::{calibrate, intervals};
use confboost::scores::{cqr_to_local, local_to_cqr, ScoreParams};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 800;
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let center: f64 = rng.random_range(-3.0..3.0);
        let width: f64 = rng.random_range(0.2..3.0);
        lo.push(center - width / 2.0);
        hi.push(center + width / 2.0);
        y.push(center + rng.random_range(-4.0..4.0));
    }

    // Route A: score the pair directly, rescaled by its width.
    let widths: Vec<f64> = lo.iter().zip(&hi).map(|(l, u)| u - l).collect();
    let two_sided = ScoreParams::Cqr { mu1: &lo, mu2: &hi, sigma: &widths };
    let q_two = calibrate(&two_sided.scores(&y).unwrap(), 0.1).unwrap();

    // Route B: reduce to (midpoint, half-width) and score that.
    let mut mu = Vec::with_capacity(n);
    let mut log_sigma = Vec::with_capacity(n);
    for i in 0..n {
        let (m, s) = cqr_to_local(lo[i], hi[i]).expect("strict width");
        mu.push(m);
        log_sigma.push(s.ln());
    }
    let reduced = ScoreParams::Local { mu: &mu, log_sigma: &log_sigma };
    let q_red = calibrate(&reduced.scores(&y).unwrap(), 0.1).unwrap();

    println!("two-sided calibrated quantile: {:.6}", q_two.value);
    println!("reduced calibrated quantile:   {:.6}", q_red.value);
    println!("affine identity 2q + 1:        {:.6}", 2.0 * q_two.value + 1.0);

    let iv_two = intervals(&two_sided, &q_two);
    let iv_red = intervals(&reduced, &q_red);
    let worst = iv_two
        .iter()
        .zip(&iv_red)
        .map(|(a, b)| (a.lower - b.lower).abs().max((a.upper - b.upper).abs()))
        .fold(0.0f64, f64::max);
    println!("worst endpoint difference over {n} intervals: {worst:.2e}");

    // And back: a location/scale pair expands to an equivalent triple.
    let triple = local_to_cqr(mu[0], log_sigma[0]);
    let (m_back, s_back) = cqr_to_local(triple.mu1, triple.mu2).unwrap();
    println!();
    println!(
        "round trip of (mu, sigma) = ({:.4}, {:.4}): triple ({:.4}, {:.4}, {:.4}) -> ({m_back:.4}, {s_back:.4})",
        mu[0],
        log_sigma[0].exp(),
        triple.mu1,
        triple.mu2,
        triple.sigma
    );
}
