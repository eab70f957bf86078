//! The dependence counterexample: two hypotheses share one 17-toss
//! experiment, so the p-values of the true and false nulls are dependent
//! and the FWER guarantee breaks.
//!
//! Stage one tests `A: Pr(heads) <= 0.1` (false) and `B: Pr(heads) >= 0.5`
//! (true) on the same fair coin; every head count rejects one of them.
//! Rejecting `B` is an immediate familywise error. Rejecting `A` passes
//! nearly the whole budget on to stage two, where the true null
//! `C: Pr(heads) != 0.5` gets tested on an independent 13-toss experiment.
//! The exact FWER, enumerated over all head-count pairs, exceeds alpha for
//! the lower-tail convention for `C`'s p-value.
//!
//! ```bash
//! cargo run --example coin_counterexample
//! ```

use seqmt::counterexample::{scenario_report, CConvention, CoinScenario};

fn main() -> seqmt::Result<()> {
    let base = CoinScenario::default();
    println!(
        "n1 = {} tosses (A false, B true), n2 = {} tosses (C true), alpha = {}",
        base.n1, base.n2, base.alpha
    );

    let first = scenario_report(&base, None)?;
    println!();
    println!("Pr(stage one rejects B)   {:.6}", first.p_b_region);
    println!(
        "max-power bound           {:.6} (stage two {:.6})",
        first.fwer_analytic_maxpower, first.analytic_stage2
    );
    println!();
    println!(
        "{:>11} {:>10} {:>10} {:>10}",
        "C p-value", "exact", "mc", "3*se"
    );
    for convention in CConvention::ALL {
        let scenario = base.with_convention(convention);
        let report = scenario_report(&scenario, Some((200_000, 1)))?;
        println!(
            "{:>11} {:>10.6} {:>10.6} {:>10.6}",
            convention.label(),
            report.fwer_exact,
            report.fwer_mc.unwrap(),
            3.0 * report.fwer_mc_se.unwrap()
        );
    }

    println!();
    println!(
        "alpha is {}, so the lower-tail convention demonstrates the loss of control",
        base.alpha
    );
    Ok(())
}
