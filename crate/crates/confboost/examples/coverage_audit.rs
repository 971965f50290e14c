//! Audit the conditional coverage of arbitrary prediction intervals with a
//! contrast tree — no conformal machinery required, just intervals and data.
//!
//! Two interval sets are audited on the same heteroskedastic sample: oracle
//! intervals from the generator's true conditional quantiles (deviation near
//! zero everywhere) and constant-width intervals (strong undercoverage where
//! the noise is large, which the tree isolates).
//!
//! ```bash
//! cargo run --example coverage_audit
//! ```

use confboost::contrast_tree::{
    assign_leaves, default_min_leaf, fit_contrast_tree, max_deviation, CoverageIndicators,
};
use confboost::data::{synth_heteroskedastic, synth_mean, synth_sd};
use confboost::Interval;

fn audit(name: &str, ds: &confboost::Dataset, intervals: &[Interval], alpha: f64) {
    let covered = CoverageIndicators::from_intervals(intervals, &ds.response);
    let tree = fit_contrast_tree(
        &ds.features,
        &covered,
        alpha,
        4,
        default_min_leaf(ds.n_rows()),
    )
    .expect("tree");
    let dev = max_deviation(&tree, &ds.features, &covered, alpha).expect("deviation");
    println!("{name}: max within-leaf deviation {dev:.3} over {} leaves", tree.n_leaves());
    if let Some((feature, threshold)) = tree.root_split() {
        println!("  root split: {} <= {threshold:.3}", ds.column_names[feature]);
    }
    let labels = assign_leaves(&tree, &ds.features).expect("routing");
    for (leaf_id, leaf) in tree.leaves().iter().enumerate() {
        let count = labels.iter().filter(|&&l| l == leaf_id).count();
        println!(
            "  leaf {leaf_id}: {:>5.1}% of rows, deviation {:.3}",
            100.0 * count as f64 / ds.n_rows() as f64,
            leaf.deviation
        );
    }
}

fn main() {
    let alpha = 0.1;
    let z95 = 1.6448536269514722; // N(0,1) quantile at 1 - alpha/2
    let ds = synth_heteroskedastic(4000, 2, 555).expect("generator");

    let oracle: Vec<Interval> = (0..ds.n_rows())
        .map(|i| {
            let x1 = ds.features.get(i, 0);
            Interval {
                lower: synth_mean(x1) - z95 * synth_sd(x1),
                upper: synth_mean(x1) + z95 * synth_sd(x1),
            }
        })
        .collect();
    audit("oracle-width intervals", &ds, &oracle, alpha);

    println!();
    let constant: Vec<Interval> = (0..ds.n_rows())
        .map(|i| {
            let center = synth_mean(ds.features.get(i, 0));
            Interval { lower: center - z95 * 0.6, upper: center + z95 * 0.6 }
        })
        .collect();
    audit("constant-width intervals", &ds, &constant, alpha);
}
