//! Generate the built-in heteroskedastic benchmark dataset and write it as
//! CSV, then show the generator's closed forms so downstream checks can use
//! oracle conditional quantiles.
//!
//! ```bash
//! cargo run --example synthesize
//! ```

use confboost::data::{save_csv, synth_heteroskedastic, synth_mean, synth_sd};

fn main() {
    let n = 2000;
    let p = 3;
    let seed = 7;
    let ds = synth_heteroskedastic(n, p, seed).expect("generator");
    let path = std::env::temp_dir().join("confboost_synth.csv");
    save_csv(&ds, &path).expect("write csv");

    println!("wrote {} rows x {} features to {}", n, p, path.display());
    println!("model: y = m(x1) + s(x1) * eps with m(t) = 2t, s(t) = 0.1 + t, eps ~ N(0,1)");
    println!();
    println!("oracle conditional moments along x1:");
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        println!("  x1 = {t:.2}: mean {:.3}, sd {:.3}", synth_mean(t), synth_sd(t));
    }

    // Empirical check of the conditional mean in a thin slice.
    let slice: Vec<f64> = (0..ds.n_rows())
        .filter(|&i| (ds.features.get(i, 0) - 0.5).abs() < 0.05)
        .map(|i| ds.response[i])
        .collect();
    let mean = slice.iter().sum::<f64>() / slice.len() as f64;
    println!();
    println!(
        "empirical mean of y near x1 = 0.5 over {} rows: {mean:.3} (oracle {:.3})",
        slice.len(),
        synth_mean(0.5)
    );
}
