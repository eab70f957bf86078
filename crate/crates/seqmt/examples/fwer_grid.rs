//! A reduced version of the Monte Carlo treatment grid: estimate the
//! familywise error rate and the mean number of true discoveries while the
//! fraction of true null hypotheses and the subfamily size vary.
//!
//! At `p_true = 1.0` every hypothesis is a true null, so a familywise error
//! happens exactly when the very first subfamily rejects, and the FWER has
//! the closed form `1 - (1 - alpha/m)^m`; those rows are checked against it
//! below. The full-size run (1,000,000 repetitions, CSV output) is
//! `seqmt grid`.
//!
//! ```bash
//! cargo run --example fwer_grid
//! ```

use seqmt::sim::{run_grid, GridConfig};

fn main() -> seqmt::Result<()> {
    let grid = GridConfig {
        sizes: vec![1, 10, 100],
        p_trues: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        n_reps: 50_000,
        ..GridConfig::default()
    };
    println!(
        "alpha = {}, reps = {}, seed = {}, rule = {}",
        grid.alpha, grid.n_reps, grid.seed, grid.variant
    );
    println!();
    println!(
        "{:>5} {:>7} {:>10} {:>10} {:>13}",
        "size", "p_true", "fwer", "se", "discoveries"
    );

    for result in run_grid(&grid)? {
        println!(
            "{:>5} {:>7.1} {:>10.5} {:>10.5} {:>13.4}",
            result.config.subfamily_size,
            result.config.p_true,
            result.fwer_hat,
            result.fwer_se,
            result.mean_true_discoveries
        );
    }

    println!();
    println!("closed form at p_true = 1.0:");
    for &m in &grid.sizes {
        let exact = 1.0 - (1.0 - grid.alpha / m as f64).powi(m as i32);
        println!("  size {m:>4}: 1 - (1 - alpha/m)^m = {exact:.5}");
    }
    Ok(())
}
