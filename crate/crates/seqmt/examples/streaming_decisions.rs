//! Drive the sequential tester one subfamily at a time and watch the
//! alpha budget evolve.
//!
//! ```bash
//! cargo run --example streaming_decisions
//! ```

use seqmt::{Decision, TesterState, Variant};

fn main() -> seqmt::Result<()> {
    let mut tester = TesterState::new(0.05, Variant::Refined)?;
    println!("alpha = {}, rule = {}", tester.alpha0(), tester.variant());
    println!();

    // Each line is one subfamily; at most its minimum p-value is rejected,
    // and a rejection of a subfamily of size m spends (m - 1) * p.
    let subfamilies: &[&[f64]] = &[
        &[0.010, 0.200],        // 2 * 0.010 = 0.020 <= 0.050: reject, spend 0.010
        &[0.015, 0.900],        // 2 * 0.015 = 0.030 <= 0.040: reject, spend 0.015
        &[0.020],               // size 1 spends nothing under the refined rule
        &[0.004, 0.030, 0.800], // 3 * 0.004 = 0.012 <= 0.025: reject, spend 0.008
        &[0.030, 0.040],        // 2 * 0.030 = 0.060 > 0.017: the sequence halts
        &[0.000_1],             // already halted: a no-op from here on
    ];

    for (t, subfamily) in subfamilies.iter().enumerate() {
        print!("step {} {:?} -> ", t + 1, subfamily);
        match tester.step(subfamily)? {
            Decision::Rejected { record, new_budget } => {
                println!(
                    "REJECT index {} (p = {}), budget {:.6} -> {:.6}",
                    record.index,
                    record.p_min,
                    new_budget + tester.variant().spend(record.subfamily_size, record.p_min),
                    new_budget
                );
            }
            Decision::Stopped(reason) => println!("STOP ({reason:?})"),
        }
    }

    println!();
    println!(
        "{} rejections, {:.6} of the budget spent, halted = {}",
        tester.rejections().len(),
        tester.spent(),
        tester.is_halted()
    );
    Ok(())
}
