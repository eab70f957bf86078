//! A dependence scenario where the sequential procedure loses control of
//! the familywise error rate.
//!
//! One experiment tosses a fair coin `n1` times (default 17) and carries two
//! hypotheses about the same outcome: `A: Pr(heads) <= 0.1`, which is false,
//! and `B: Pr(heads) >= 0.5`, which is true. A second, independent
//! experiment tosses a fair coin `n2` times (default 13) and carries the
//! true hypothesis `C: Pr(heads) != 0.5`. The first subfamily is `{A, B}`,
//! the second is `{C}`.
//!
//! Because `A` and `B` are computed from the same tosses, the p-values of
//! the true and false nulls are dependent, violating the assumption behind
//! the tester's error guarantee. Every head count of the first experiment
//! rejects either `A` or `B` at the defaults, and a rejection of `A` (a
//! correct rejection) leaves stage two testing `C` at nearly the full
//! budget. The familywise error rate, computed here by exact enumeration
//! over all `(k1, k2)` outcome pairs, by a closed-form bound, and by Monte
//! Carlo, comes out above the nominal level.
//!
//! How the two-sided p-value for `C` is turned into a number is not uniquely
//! determined; all three conventions in [`CConvention`] are implemented so
//! they can be reported side by side.

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::binomial::BinomialSpec;
use crate::error::{Error, Result};
use crate::sim::trial_rng;
use crate::tester::min_with_index;

/// Boundary of `A`'s composite null `Pr(heads) <= 0.1`; its p-value is the
/// upper tail at the least favorable point, `p = 0.1`.
pub const A_NULL_P: f64 = 0.1;

/// How the p-value of the two-sided hypothesis `C` is computed from the
/// second experiment's head count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CConvention {
    /// Twice the smaller tail, capped at 1.
    #[serde(rename = "doubled")]
    TwoSidedDoubled,
    /// The smaller of the two tails, undoubled. Not a valid p-value (its
    /// rejection probability is up to twice its level), so its FWER can
    /// exceed even the maximally-powerful bound; included for comparison.
    #[serde(rename = "mintail")]
    MinTail,
    /// The lower tail only.
    #[serde(rename = "lowertail")]
    LowerTailOnly,
}

impl CConvention {
    pub const ALL: [CConvention; 3] = [
        CConvention::TwoSidedDoubled,
        CConvention::MinTail,
        CConvention::LowerTailOnly,
    ];

    /// Stable token used by the CLI and CSV output.
    pub fn label(self) -> &'static str {
        match self {
            CConvention::TwoSidedDoubled => "doubled",
            CConvention::MinTail => "mintail",
            CConvention::LowerTailOnly => "lowertail",
        }
    }
}

impl std::fmt::Display for CConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// The scenario's free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoinScenario {
    /// Tosses in the experiment shared by `A` and `B`.
    pub n1: u32,
    /// Tosses in the experiment behind `C`.
    pub n2: u32,
    /// Global significance level; subfamily `{A, B}` effectively tests each
    /// member at `alpha / 2`.
    pub alpha: f64,
    pub c_convention: CConvention,
}

impl Default for CoinScenario {
    fn default() -> Self {
        CoinScenario {
            n1: 17,
            n2: 13,
            alpha: 0.05,
            c_convention: CConvention::TwoSidedDoubled,
        }
    }
}

impl CoinScenario {
    pub fn new(n1: u32, n2: u32, alpha: f64, c_convention: CConvention) -> Result<Self> {
        let scenario = CoinScenario { n1, n2, alpha, c_convention };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Same scenario with a different convention for `C`.
    pub fn with_convention(self, c_convention: CConvention) -> Self {
        CoinScenario { c_convention, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        BinomialSpec::new(self.n1, 0.5)?;
        BinomialSpec::new(self.n2, 0.5)?;
        // alpha = 0 is legal here: nothing is rejected and the FWER is 0.
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Upper-tail p-value of `A` at the null boundary `p = 0.1`.
    pub fn a_pvalue(&self, k1: u32) -> Result<f64> {
        BinomialSpec::new(self.n1, A_NULL_P)?.upper_tail(k1)
    }

    /// Lower-tail p-value of `B` under `p = 0.5`.
    pub fn b_pvalue(&self, k1: u32) -> Result<f64> {
        BinomialSpec::new(self.n1, 0.5)?.lower_tail(k1)
    }
}

/// Stage-one outcome for a head count of the first experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FirstStageDecision {
    /// `A` (the false null) is rejected; stage two tests `C` at the
    /// adjusted level `alpha - p_A`.
    RejectA { adjusted_alpha: f64 },
    /// `B` (a true null) is rejected: a familywise error on the spot.
    RejectB,
    /// Neither hypothesis passes `2 * p_min <= alpha`; the sequence stops.
    NoRejection,
}

/// Decide subfamily `{A, B}` for head count `k1`.
///
/// The member with the smaller p-value (ties go to `A`, the earlier index)
/// is rejected when `2 * p_min <= alpha`, and a rejection of `A` spends
/// `p_A` of the budget, leaving `alpha - p_A` for stage two.
pub fn first_stage_decision(k1: u32, scenario: &CoinScenario) -> Result<FirstStageDecision> {
    scenario.validate()?;
    let p_a = scenario.a_pvalue(k1)?;
    let p_b = scenario.b_pvalue(k1)?;
    let (index, p_min) = min_with_index(&[p_a, p_b]).expect("tail probabilities are valid");
    if 2.0 * p_min <= scenario.alpha {
        if index == 0 {
            Ok(FirstStageDecision::RejectA {
                adjusted_alpha: scenario.alpha - p_min,
            })
        } else {
            Ok(FirstStageDecision::RejectB)
        }
    } else {
        Ok(FirstStageDecision::NoRejection)
    }
}

/// The p-value assigned to `C` for head count `k2`, under the scenario's
/// convention.
pub fn c_pvalue(k2: u32, scenario: &CoinScenario) -> Result<f64> {
    scenario.validate()?;
    let spec = BinomialSpec::new(scenario.n2, 0.5)?;
    let lower = spec.lower_tail(k2)?;
    let upper = spec.upper_tail(k2)?;
    Ok(match scenario.c_convention {
        CConvention::TwoSidedDoubled => (2.0 * lower.min(upper)).min(1.0),
        CConvention::MinTail => lower.min(upper),
        CConvention::LowerTailOnly => lower,
    })
}

/// Pre-tabulated decisions and masses over both outcome grids, shared by
/// the enumeration, the analytic bound and the Monte Carlo sampler.
struct DecisionTable {
    pmf1: Vec<f64>,
    pmf2: Vec<f64>,
    first_stage: Vec<FirstStageDecision>,
    c_pvalues: Vec<f64>,
}

impl DecisionTable {
    fn build(scenario: &CoinScenario) -> Result<Self> {
        scenario.validate()?;
        let fair1 = BinomialSpec::new(scenario.n1, 0.5)?;
        let fair2 = BinomialSpec::new(scenario.n2, 0.5)?;
        let pmf1 = (0..=scenario.n1).map(|k| fair1.pmf(k)).collect::<Result<_>>()?;
        let pmf2 = (0..=scenario.n2).map(|k| fair2.pmf(k)).collect::<Result<_>>()?;
        let first_stage = (0..=scenario.n1)
            .map(|k| first_stage_decision(k, scenario))
            .collect::<Result<_>>()?;
        let c_pvalues = (0..=scenario.n2)
            .map(|k| c_pvalue(k, scenario))
            .collect::<Result<_>>()?;
        Ok(DecisionTable { pmf1, pmf2, first_stage, c_pvalues })
    }

    /// Does the outcome pair reject a true null? `B` at stage one, or `C`
    /// at stage two after a rejection of `A` (a size-1 subfamily rejects
    /// when its p-value is at most the remaining budget).
    fn rejects_true_null(&self, k1: usize, k2: usize) -> bool {
        match self.first_stage[k1] {
            FirstStageDecision::RejectB => true,
            FirstStageDecision::RejectA { adjusted_alpha } => self.c_pvalues[k2] <= adjusted_alpha,
            FirstStageDecision::NoRejection => false,
        }
    }

    fn b_region_probability(&self) -> f64 {
        self.first_stage
            .iter()
            .zip(&self.pmf1)
            .filter(|(d, _)| matches!(d, FirstStageDecision::RejectB))
            .map(|(_, &mass)| mass)
            .sum()
    }
}

/// Familywise error rate by full enumeration of the joint outcome grid.
///
/// This is the exact value the Monte Carlo estimate converges to, and the
/// oracle it is checked against.
pub fn exact_fwer(scenario: &CoinScenario) -> Result<f64> {
    let table = DecisionTable::build(scenario)?;
    let mut total = 0.0;
    for (k1, &mass1) in table.pmf1.iter().enumerate() {
        match table.first_stage[k1] {
            FirstStageDecision::RejectB => total += mass1,
            FirstStageDecision::RejectA { .. } => {
                let stage2: f64 = table
                    .pmf2
                    .iter()
                    .enumerate()
                    .filter(|&(k2, _)| table.rejects_true_null(k1, k2))
                    .map(|(_, &mass2)| mass2)
                    .sum();
                total += mass1 * stage2;
            }
            FirstStageDecision::NoRejection => {}
        }
    }
    Ok(total)
}

/// Closed-form familywise error rate when `C` is replaced by a maximally
/// powerful true null, i.e. one rejected with probability exactly equal to
/// its adjusted level: `Pr(B region) + sum over A's region of
/// pmf(k1) * (alpha - p_A(k1))`.
pub fn analytic_fwer_maxpower(scenario: &CoinScenario) -> Result<f64> {
    let table = DecisionTable::build(scenario)?;
    Ok(table.b_region_probability() + maxpower_stage2(&table))
}

fn maxpower_stage2(table: &DecisionTable) -> f64 {
    table
        .first_stage
        .iter()
        .zip(&table.pmf1)
        .filter_map(|(d, &mass)| match d {
            FirstStageDecision::RejectA { adjusted_alpha } => Some(mass * adjusted_alpha),
            _ => None,
        })
        .sum()
}

/// Monte Carlo estimate of the familywise error rate: `n_reps` repetitions
/// of both coin experiments, returning `(estimate, standard error)`.
///
/// Repetition `i` draws from the ChaCha stream `(seed, i)`, so the estimate
/// is bit-identical for a fixed seed under any thread count.
pub fn mc_fwer(scenario: &CoinScenario, n_reps: u64, seed: u64) -> Result<(f64, f64)> {
    if n_reps == 0 {
        return Err(Error::InvalidConfig("n_reps must be at least 1".into()));
    }
    let table = DecisionTable::build(scenario)?;
    let mask1 = bit_mask(scenario.n1);
    let mask2 = bit_mask(scenario.n2);
    let errors: u64 = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = trial_rng(seed, rep);
            // A head count of n fair tosses is the popcount of n random bits.
            let k1 = (rng.next_u64() & mask1).count_ones() as usize;
            let k2 = (rng.next_u64() & mask2).count_ones() as usize;
            u64::from(table.rejects_true_null(k1, k2))
        })
        .sum();
    let estimate = errors as f64 / n_reps as f64;
    let se = (estimate * (1.0 - estimate) / n_reps as f64).sqrt();
    Ok((estimate, se))
}

fn bit_mask(n: u32) -> u64 {
    debug_assert!((1..=64).contains(&n));
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// One row of the stage-one table for `A`: a head count in `A`'s rejection
/// region, its p-value and the budget left for stage two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ATableRow {
    pub heads: u32,
    pub p_value: f64,
    pub adjusted_alpha: f64,
}

/// Everything the scenario produces for one convention, ready to print.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: CoinScenario,
    /// Probability that stage one rejects `B` (an immediate error).
    pub p_b_region: f64,
    /// `A`'s rejection region, largest head count first.
    pub a_table: Vec<ATableRow>,
    /// Exact familywise error rate under the scenario's convention.
    pub fwer_exact: f64,
    /// The stage-two term of the maximally-powerful bound.
    pub analytic_stage2: f64,
    /// `p_b_region + analytic_stage2`.
    pub fwer_analytic_maxpower: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwer_mc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwer_mc_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_seed: Option<u64>,
}

/// Assemble the full report, optionally with a Monte Carlo estimate.
pub fn scenario_report(
    scenario: &CoinScenario,
    mc: Option<(u64, u64)>,
) -> Result<ScenarioReport> {
    let table = DecisionTable::build(scenario)?;
    let mut a_table = Vec::new();
    for k1 in (0..=scenario.n1).rev() {
        if let FirstStageDecision::RejectA { adjusted_alpha } = table.first_stage[k1 as usize] {
            a_table.push(ATableRow {
                heads: k1,
                p_value: scenario.a_pvalue(k1)?,
                adjusted_alpha,
            });
        }
    }
    let p_b_region = table.b_region_probability();
    let analytic_stage2 = maxpower_stage2(&table);
    let (fwer_mc, fwer_mc_se, mc_reps, mc_seed) = match mc {
        Some((n_reps, seed)) => {
            let (estimate, se) = mc_fwer(scenario, n_reps, seed)?;
            (Some(estimate), Some(se), Some(n_reps), Some(seed))
        }
        None => (None, None, None, None),
    };
    Ok(ScenarioReport {
        scenario: *scenario,
        p_b_region,
        a_table,
        fwer_exact: exact_fwer(scenario)?,
        analytic_stage2,
        fwer_analytic_maxpower: p_b_region + analytic_stage2,
        fwer_mc,
        fwer_mc_se,
        mc_reps,
        mc_seed,
    })
}
