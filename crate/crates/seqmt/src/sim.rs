//! Monte Carlo harness for estimating the familywise error rate of the
//! sequential tester on synthetic subfamilies.
//!
//! Each trial keeps generating subfamilies and feeding them to the tester
//! until it halts. Hypotheses are labeled true with probability `p_true`;
//! true nulls draw their p-value uniformly from [0, 1) and false nulls
//! uniformly from [0, `max_false_pval`), so true and false p-values are
//! independent by construction and the tester's error guarantee applies. A
//! trial counts as a familywise error when any rejected hypothesis was a
//! true null; rejected false nulls count as true discoveries.
//!
//! Reproducibility contract: trial `i` of a treatment draws from a ChaCha
//! stream keyed by `(seed, i)`, and per-trial outcomes are reduced with
//! integer arithmetic only. Results are therefore bit-identical for a fixed
//! seed no matter how the trials are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tester::{Decision, TesterState, Variant};

/// Hard cap on subfamilies per trial. Configurations with no true nulls and
/// very small false p-values never exhaust the budget (a size-1 subfamily
/// spends nothing under the refined rule), so unbounded trials are possible;
/// a capped trial is reported rather than looping forever.
pub const MAX_SUBFAMILIES_PER_TRIAL: usize = 100_000;

/// Parameters of one Monte Carlo treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Global significance level fed to the tester.
    pub alpha: f64,
    /// Number of hypotheses per subfamily.
    pub subfamily_size: usize,
    /// Probability that a hypothesis is a true null.
    pub p_true: f64,
    /// Upper bound of the uniform p-value range for false nulls.
    pub max_false_pval: f64,
    /// Number of independent trials.
    pub n_reps: u64,
    /// Base seed; trial `i` uses stream `(seed, i)`.
    pub seed: u64,
    /// Budget update rule under test.
    pub variant: Variant,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if self.subfamily_size == 0 {
            return Err(Error::InvalidConfig(
                "subfamily_size must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_true) {
            return Err(Error::InvalidConfig(format!(
                "p_true must be in [0, 1], got {}",
                self.p_true
            )));
        }
        if !(self.max_false_pval > 0.0 && self.max_false_pval <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "max_false_pval must be in (0, 1], got {}",
                self.max_false_pval
            )));
        }
        if self.n_reps == 0 {
            return Err(Error::InvalidConfig("n_reps must be at least 1".into()));
        }
        Ok(())
    }
}

/// What happened in a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Some rejected hypothesis was a true null.
    pub false_rejection: bool,
    /// Number of rejected false nulls.
    pub true_discoveries: u32,
    /// Number of rejections (each step rejects at most one hypothesis).
    pub steps_taken: u32,
    /// The trial hit [`MAX_SUBFAMILIES_PER_TRIAL`] before the tester halted.
    pub capped: bool,
}

/// Estimates for one treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreatmentResult {
    pub config: SimConfig,
    /// Fraction of trials that rejected at least one true null.
    pub fwer_hat: f64,
    /// Binomial standard error `sqrt(f (1 - f) / n)` of `fwer_hat`.
    pub fwer_se: f64,
    /// Mean number of rejected false nulls per trial.
    pub mean_true_discoveries: f64,
    /// Trials stopped by the subfamily cap rather than the tester.
    pub capped_trials: u64,
}

/// The RNG stream for trial `trial` of a run keyed by `seed`.
///
/// ChaCha streams are independent across stream numbers, so trials can run
/// in any order or in parallel while drawing identical values.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn fill_subfamily<R: Rng + ?Sized>(
    rng: &mut R,
    size: usize,
    p_true: f64,
    max_false_pval: f64,
    pvalues: &mut Vec<f64>,
    is_true_null: &mut Vec<bool>,
) {
    pvalues.clear();
    is_true_null.clear();
    for _ in 0..size {
        let truth = rng.random::<f64>() < p_true;
        let p = if truth {
            rng.random::<f64>()
        } else {
            rng.random::<f64>() * max_false_pval
        };
        pvalues.push(p);
        is_true_null.push(truth);
    }
}

/// Generate one synthetic subfamily: labels first, then the p-value, one
/// hypothesis at a time.
pub fn generate_subfamily<R: Rng + ?Sized>(
    rng: &mut R,
    size: usize,
    p_true: f64,
    max_false_pval: f64,
) -> (Vec<f64>, Vec<bool>) {
    let mut pvalues = Vec::with_capacity(size);
    let mut is_true_null = Vec::with_capacity(size);
    fill_subfamily(rng, size, p_true, max_false_pval, &mut pvalues, &mut is_true_null);
    (pvalues, is_true_null)
}

/// Run one trial: generate subfamilies until the tester halts (or the cap
/// trips) and classify every rejection against its ground-truth label.
///
/// # Panics
/// Panics on an invalid config; [`run_treatment`] validates up front.
pub fn run_trial<R: Rng + ?Sized>(rng: &mut R, config: &SimConfig) -> TrialOutcome {
    let mut tester =
        TesterState::new(config.alpha, config.variant).expect("config validated by caller");
    let mut pvalues = Vec::with_capacity(config.subfamily_size);
    let mut is_true_null = Vec::with_capacity(config.subfamily_size);
    let mut false_rejection = false;
    let mut true_discoveries = 0u32;
    let mut capped = false;

    loop {
        if tester.rejections().len() >= MAX_SUBFAMILIES_PER_TRIAL {
            capped = true;
            break;
        }
        fill_subfamily(
            rng,
            config.subfamily_size,
            config.p_true,
            config.max_false_pval,
            &mut pvalues,
            &mut is_true_null,
        );
        match tester.step(&pvalues).expect("generated p-values are valid") {
            Decision::Rejected { record, .. } => {
                if is_true_null[record.index] {
                    false_rejection = true;
                } else {
                    true_discoveries += 1;
                }
            }
            Decision::Stopped(_) => break,
        }
    }

    TrialOutcome {
        false_rejection,
        true_discoveries,
        steps_taken: tester.rejections().len() as u32,
        capped,
    }
}

/// Integer tallies so the parallel reduction is exact and order-independent.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    false_rejections: u64,
    true_discoveries: u64,
    capped: u64,
}

impl Tally {
    fn from_outcome(outcome: &TrialOutcome) -> Self {
        Tally {
            false_rejections: outcome.false_rejection as u64,
            true_discoveries: u64::from(outcome.true_discoveries),
            capped: outcome.capped as u64,
        }
    }

    fn merge(self, other: Self) -> Self {
        Tally {
            false_rejections: self.false_rejections + other.false_rejections,
            true_discoveries: self.true_discoveries + other.true_discoveries,
            capped: self.capped + other.capped,
        }
    }
}

/// Run all trials of a treatment in parallel and aggregate.
pub fn run_treatment(config: &SimConfig) -> Result<TreatmentResult> {
    config.validate()?;
    let tally = (0..config.n_reps)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial);
            Tally::from_outcome(&run_trial(&mut rng, config))
        })
        .reduce(Tally::default, Tally::merge);

    let n = config.n_reps as f64;
    let fwer_hat = tally.false_rejections as f64 / n;
    Ok(TreatmentResult {
        config: *config,
        fwer_hat,
        fwer_se: (fwer_hat * (1.0 - fwer_hat) / n).sqrt(),
        mean_true_discoveries: tally.true_discoveries as f64 / n,
        capped_trials: tally.capped,
    })
}

/// A full factorial grid of treatments over subfamily sizes and true-null
/// fractions, sharing one seed, spending rule and repetition count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    pub alpha: f64,
    pub sizes: Vec<usize>,
    pub p_trues: Vec<f64>,
    pub max_false_pval: f64,
    pub n_reps: u64,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for GridConfig {
    /// The standard 40-treatment grid: sizes 1, 10, 100 and 1000 crossed
    /// with true-null fractions 0.1 through 1.0 in steps of 0.1.
    fn default() -> Self {
        GridConfig {
            alpha: 0.05,
            sizes: vec![1, 10, 100, 1000],
            p_trues: (1..=10).map(|i| i as f64 / 10.0).collect(),
            max_false_pval: 0.1,
            n_reps: 1_000_000,
            seed: 1,
            variant: Variant::Refined,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("sizes must be non-empty".into()));
        }
        if self.p_trues.is_empty() {
            return Err(Error::InvalidConfig("p_trues must be non-empty".into()));
        }
        for &size in &self.sizes {
            for &p_true in &self.p_trues {
                self.treatment(size, p_true).validate()?;
            }
        }
        Ok(())
    }

    fn treatment(&self, subfamily_size: usize, p_true: f64) -> SimConfig {
        SimConfig {
            alpha: self.alpha,
            subfamily_size,
            p_true,
            max_false_pval: self.max_false_pval,
            n_reps: self.n_reps,
            seed: self.seed,
            variant: self.variant,
        }
    }
}

/// Run every treatment of the grid, size-major then ascending `p_true`, in
/// the order the configuration lists them.
pub fn run_grid(grid: &GridConfig) -> Result<Vec<TreatmentResult>> {
    grid.validate()?;
    let mut results = Vec::with_capacity(grid.sizes.len() * grid.p_trues.len());
    for &size in &grid.sizes {
        for &p_true in &grid.p_trues {
            results.push(run_treatment(&grid.treatment(size, p_true))?);
        }
    }
    Ok(results)
}
