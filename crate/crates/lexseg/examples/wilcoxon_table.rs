//! Exact two-sided signed-rank p-values for small samples.
//!
//! cargo run --example wilcoxon_table

use lexseg::metrics::{signed_rank_p, wilcoxon_signed_rank};

fn main() -> lexseg::Result<()> {
    println!("{:>3} {:>4} {:>10}", "n", "W", "p");
    for n in [5, 6, 7, 8] {
        for w in 0..=8 {
            println!("{n:>3} {w:>4} {:>10.7}", signed_rank_p(n, w as f64)?);
        }
    }
    // paired cell means of two models over seven targets
    let model = [0.71, 0.64, 0.80, 0.59, 0.77, 0.68, 0.73];
    let baseline = [0.54, 0.44, 0.51, 0.48, 0.41, 0.47, 0.39];
    let r = wilcoxon_signed_rank(&model, &baseline)?;
    println!("paired test: n={} W={} p={:.6}", r.n_effective, r.w, r.p_value);
    Ok(())
}
