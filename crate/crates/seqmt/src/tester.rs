//! Sequential multiple testing with alpha-budget spending.
//!
//! The tester consumes an ordered sequence of *subfamilies* of p-values, one
//! subfamily per step, and rejects at most one hypothesis per subfamily: the
//! one attaining the minimal p-value. For a subfamily of size `m` with
//! minimum p-value `p`, the rejection goes through exactly when
//! `m * p <= budget`, where the budget starts at the global level `alpha` and
//! shrinks after every rejection. The first subfamily that fails the check
//! halts the whole sequence. Every decision is made without knowledge of
//! later subfamilies, so the tester can be driven from a stream.
//!
//! Two spending rules are supported:
//!
//! - [`Variant::Refined`] subtracts `(m - 1) * p` per rejection. With all
//!   subfamilies of size 1 this spends nothing, recovering classical
//!   fixed-sequence testing at level `alpha`.
//! - [`Variant::WebbPetitjean`] subtracts `m * p`, the earlier and more
//!   conservative rule. Its rejection list is always a prefix of the refined
//!   rule's list on the same input.
//!
//! Under the assumption that the p-values of true null hypotheses are
//! independent of those of false null hypotheses, either rule keeps the
//! familywise error rate of the full sequence at or below `alpha`. The
//! `counterexample` module shows how dependence breaks that guarantee.

use serde::Serialize;

use crate::error::{Error, Result};

/// Budget update rule applied after each rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Spend `(m - 1) * p_min` per rejection.
    Refined,
    /// Spend `m * p_min` per rejection; never rejects more than `Refined`.
    #[serde(rename = "wp")]
    WebbPetitjean,
}

impl Variant {
    /// Alpha spent by rejecting the minimum p-value `p_min` of a subfamily
    /// of `size` hypotheses.
    pub fn spend(self, size: usize, p_min: f64) -> f64 {
        match self {
            Variant::Refined => (size - 1) as f64 * p_min,
            Variant::WebbPetitjean => size as f64 * p_min,
        }
    }

    /// Stable token used by the CLI and CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Variant::Refined => "refined",
            Variant::WebbPetitjean => "wp",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One rejected hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionRecord {
    /// Step (1-based) at which the rejection happened.
    pub step: usize,
    /// Zero-based index of the rejected hypothesis within its subfamily.
    pub index: usize,
    /// The subfamily's minimum p-value.
    pub p_min: f64,
    /// Number of hypotheses in the subfamily.
    pub subfamily_size: usize,
}

/// Why the tester stopped accepting subfamilies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `m * p_min` exceeded the remaining budget; the sequence is over.
    BudgetExceeded,
    /// The tester had already halted; the call was a no-op.
    AlreadyHalted,
}

/// Outcome of feeding one subfamily to the tester.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    /// The minimum p-value hypothesis was rejected and the budget updated.
    Rejected {
        record: RejectionRecord,
        new_budget: f64,
    },
    /// No rejection; the tester is halted from now on.
    Stopped(StopReason),
}

impl Decision {
    /// True when this decision is a rejection.
    pub fn is_rejection(&self) -> bool {
        matches!(self, Decision::Rejected { .. })
    }
}

/// Minimum p-value of a subfamily together with the index attaining it.
///
/// Ties are broken toward the smallest index. Indices are zero-based.
pub fn min_with_index(pvalues: &[f64]) -> Result<(usize, f64)> {
    if pvalues.is_empty() {
        return Err(Error::EmptySubfamily);
    }
    let mut best = 0;
    for (index, &p) in pvalues.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidPValue { index, value: p });
        }
        if p < pvalues[best] {
            best = index;
        }
    }
    Ok((best, pvalues[best]))
}

/// Live state of the sequential procedure.
///
/// The state is a plain value: cloning it forks the procedure, and all
/// mutation happens through [`TesterState::step`]. The budget is maintained
/// as `alpha0 - spent` with `spent` accumulated in rejection order, so
/// `alpha0 - budget` agrees with the sum of the recorded spends to within a
/// few units in the last place of `alpha0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TesterState {
    alpha0: f64,
    spent: f64,
    budget: f64,
    step: usize,
    variant: Variant,
    rejections: Vec<RejectionRecord>,
    halted: bool,
}

impl TesterState {
    /// Start a new sequence at global significance level `alpha`.
    pub fn new(alpha: f64, variant: Variant) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self {
            alpha0: alpha,
            spent: 0.0,
            budget: alpha,
            step: 1,
            variant,
            rejections: Vec::new(),
            halted: false,
        })
    }

    /// The global significance level the sequence started with.
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Remaining alpha budget.
    pub fn budget(&self) -> f64 {
        self.budget
    }

    /// Total alpha spent by rejections so far.
    pub fn spent(&self) -> f64 {
        self.spent
    }

    /// Current step number (1-based); equals `1 + rejections().len()` while
    /// the tester has not halted.
    pub fn step_number(&self) -> usize {
        self.step
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Rejections in step order.
    pub fn rejections(&self) -> &[RejectionRecord] {
        &self.rejections
    }

    /// True once a subfamily has failed the budget check.
    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Feed the next subfamily and decide.
    ///
    /// Rejects the minimum p-value hypothesis when `m * p_min <= budget`
    /// (equality rejects), spends the variant's share of the budget and
    /// advances the step counter. Otherwise the tester halts. Calling `step`
    /// on a halted tester is a no-op returning
    /// `Stopped(StopReason::AlreadyHalted)`. Invalid p-values leave the
    /// state untouched.
    pub fn step(&mut self, pvalues: &[f64]) -> Result<Decision> {
        if self.halted {
            return Ok(Decision::Stopped(StopReason::AlreadyHalted));
        }
        let (index, p_min) = min_with_index(pvalues)?;
        let size = pvalues.len();
        if size as f64 * p_min <= self.budget {
            let record = RejectionRecord {
                step: self.step,
                index,
                p_min,
                subfamily_size: size,
            };
            self.spent += self.variant.spend(size, p_min);
            self.budget = self.alpha0 - self.spent;
            self.step += 1;
            self.rejections.push(record);
            Ok(Decision::Rejected {
                record,
                new_budget: self.budget,
            })
        } else {
            self.halted = true;
            Ok(Decision::Stopped(StopReason::BudgetExceeded))
        }
    }
}

/// Run the whole procedure over an in-memory sequence of subfamilies.
///
/// Equivalent to [`TesterState::new`] followed by [`TesterState::step`] on
/// each subfamily in order until the tester halts or the sequence is
/// exhausted. The number of recorded rejections is the procedure's final
/// rejection count.
pub fn run_sequence<I, S>(alpha: f64, variant: Variant, subfamilies: I) -> Result<TesterState>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[f64]>,
{
    let mut state = TesterState::new(alpha, variant)?;
    for subfamily in subfamilies {
        if let Decision::Stopped(_) = state.step(subfamily.as_ref())? {
            break;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ulp(x: f64) -> f64 {
        f64::from_bits(x.to_bits() + 1) - x
    }

    #[test]
    fn new_tester_initializes_budget() {
        let t = TesterState::new(0.05, Variant::Refined).unwrap();
        assert_eq!(t.budget(), 0.05);
        assert_eq!(t.step_number(), 1);
        assert!(t.rejections().is_empty());
        assert!(!t.is_halted());

        let t = TesterState::new(1.0, Variant::Refined).unwrap();
        assert_eq!(t.budget(), 1.0);
    }

    #[test]
    fn new_tester_rejects_bad_alpha() {
        assert_eq!(
            TesterState::new(0.0, Variant::Refined),
            Err(Error::InvalidAlpha(0.0))
        );
        assert!(TesterState::new(-0.1, Variant::Refined).is_err());
        assert!(TesterState::new(1.5, Variant::Refined).is_err());
        assert!(TesterState::new(f64::NAN, Variant::Refined).is_err());
    }

    #[test]
    fn min_with_index_picks_smallest_index_on_ties() {
        assert_eq!(min_with_index(&[0.3, 0.1, 0.2]).unwrap(), (1, 0.1));
        assert_eq!(min_with_index(&[0.1, 0.1]).unwrap(), (0, 0.1));
        assert_eq!(min_with_index(&[0.7]).unwrap(), (0, 0.7));
    }

    #[test]
    fn min_with_index_validates_input() {
        assert_eq!(min_with_index(&[]), Err(Error::EmptySubfamily));
        assert_eq!(
            min_with_index(&[0.5, 1.2]),
            Err(Error::InvalidPValue {
                index: 1,
                value: 1.2
            })
        );
        assert!(min_with_index(&[-0.1]).is_err());
        assert!(min_with_index(&[0.5, f64::NAN]).is_err());
    }

    #[test]
    fn boundary_pvalues_are_legal() {
        // 0.0 and 1.0 are valid p-values; 1.0 is used as a sentinel for an
        // empty true/false split in the simulator.
        assert_eq!(min_with_index(&[1.0, 0.0]).unwrap(), (1, 0.0));
        let mut t = TesterState::new(0.05, Variant::Refined).unwrap();
        let d = t.step(&[0.0, 1.0]).unwrap();
        assert!(d.is_rejection());
        assert_eq!(t.budget(), 0.05);
    }

    #[test]
    fn step_spends_per_variant() {
        let mut refined = TesterState::new(0.05, Variant::Refined).unwrap();
        match refined.step(&[0.01, 0.2]).unwrap() {
            Decision::Rejected { record, new_budget } => {
                assert_eq!(record.index, 0);
                assert_eq!(record.p_min, 0.01);
                assert_eq!(record.subfamily_size, 2);
                assert_eq!(new_budget, 0.04);
            }
            other => panic!("expected rejection, got {other:?}"),
        }

        let mut wp = TesterState::new(0.05, Variant::WebbPetitjean).unwrap();
        match wp.step(&[0.01, 0.2]).unwrap() {
            // 0.05 - 0.02 in f64; one ulp above the 0.03 literal.
            Decision::Rejected { new_budget, .. } => assert_eq!(new_budget, 0.05 - 0.02),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn step_halts_when_budget_exceeded() {
        for variant in [Variant::Refined, Variant::WebbPetitjean] {
            let mut t = TesterState::new(0.05, variant).unwrap();
            // 2 * 0.03 = 0.06 > 0.05
            assert_eq!(
                t.step(&[0.03, 0.04]).unwrap(),
                Decision::Stopped(StopReason::BudgetExceeded)
            );
            assert!(t.is_halted());
            assert_eq!(
                t.step(&[0.0001]).unwrap(),
                Decision::Stopped(StopReason::AlreadyHalted)
            );
            assert!(t.rejections().is_empty());
        }
    }

    #[test]
    fn singleton_subfamily_spends_nothing_under_refined() {
        let mut t = TesterState::new(0.05, Variant::Refined).unwrap();
        match t.step(&[0.04]).unwrap() {
            Decision::Rejected { record, new_budget } => {
                assert_eq!(record.index, 0);
                assert_eq!(new_budget, 0.05);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
        assert_eq!(t.budget(), 0.05);
        assert_eq!(t.step_number(), 2);
    }

    #[test]
    fn invalid_pvalues_leave_state_unchanged() {
        let mut t = TesterState::new(0.05, Variant::Refined).unwrap();
        t.step(&[0.01, 0.2]).unwrap();
        let snapshot = t.clone();
        assert!(t.step(&[0.5, 7.0]).is_err());
        assert!(t.step(&[]).is_err());
        assert_eq!(t, snapshot);
    }

    #[test]
    fn run_sequence_hand_trace_refined() {
        // Step 1: 2*0.01 <= 0.05, spend 0.01 -> 0.04.
        // Step 2: 2*0.015 = 0.03 <= 0.04, spend 0.015 -> 0.025.
        // Step 3: 1*0.03 > 0.025 -> stop with two rejections.
        let state = run_sequence(
            0.05,
            Variant::Refined,
            [vec![0.01, 0.2], vec![0.015, 0.9], vec![0.03]],
        )
        .unwrap();
        assert_eq!(state.rejections().len(), 2);
        assert!(state.is_halted());
        assert_eq!(state.rejections()[0].step, 1);
        assert_eq!(state.rejections()[1].step, 2);
        assert_eq!(state.budget(), 0.025);
    }

    #[test]
    fn run_sequence_hand_trace_webb_petitjean() {
        // Step 1: spend 2*0.01 -> budget 0.03.
        // Step 2: 2*0.015 = 0.03 <= 0.03 (equality rejects), budget 0.0.
        // Step 3: 0.03 > 0.0 -> stop; same two rejections as refined here.
        let state = run_sequence(
            0.05,
            Variant::WebbPetitjean,
            [vec![0.01, 0.2], vec![0.015, 0.9], vec![0.03]],
        )
        .unwrap();
        assert_eq!(state.rejections().len(), 2);
        assert_eq!(state.budget(), 0.0);
        assert!(state.is_halted());
    }

    #[test]
    fn run_sequence_empty_input() {
        let state = run_sequence(0.05, Variant::Refined, Vec::<Vec<f64>>::new()).unwrap();
        assert!(state.rejections().is_empty());
        assert_eq!(state.budget(), 0.05);
        assert!(!state.is_halted());
    }

    #[test]
    fn run_sequence_propagates_invalid_pvalues() {
        assert!(run_sequence(0.05, Variant::Refined, [vec![0.01], vec![2.0]]).is_err());
    }

    /// Random subfamily sequences: sizes 1..=20, p-values uniform in [0, 1].
    fn subfamilies_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(
            proptest::collection::vec(0.0f64..=1.0, 1..=20),
            0..=30,
        )
    }

    proptest! {
        /// The budget never increases, under either spending rule, and the
        /// step counter stays one ahead of the rejection count while live.
        #[test]
        fn budget_is_monotone(subfamilies in subfamilies_strategy()) {
            for variant in [Variant::Refined, Variant::WebbPetitjean] {
                let mut t = TesterState::new(0.05, variant).unwrap();
                let mut last = t.budget();
                for sub in &subfamilies {
                    t.step(sub).unwrap();
                    prop_assert!(t.budget() <= last, "budget rose: {} -> {}", last, t.budget());
                    last = t.budget();
                    if !t.is_halted() {
                        prop_assert_eq!(t.step_number(), 1 + t.rejections().len());
                    }
                }
            }
        }

        /// alpha0 - budget equals the sum of recorded spends, to within a few
        /// ulp at the scale of alpha0; the refined budget stays positive.
        #[test]
        fn accounting_is_exact(subfamilies in subfamilies_strategy()) {
            for variant in [Variant::Refined, Variant::WebbPetitjean] {
                let mut t = TesterState::new(0.05, variant).unwrap();
                for sub in &subfamilies {
                    let was_rejection = t.step(sub).unwrap().is_rejection();
                    let replayed: f64 = t
                        .rejections()
                        .iter()
                        .map(|r| variant.spend(r.subfamily_size, r.p_min))
                        .sum();
                    let drift = ((t.alpha0() - t.budget()) - replayed).abs();
                    prop_assert!(
                        drift <= 4.0 * ulp(t.alpha0()),
                        "accounting drift {drift:e} exceeds 4 ulp of alpha0"
                    );
                    if was_rejection && variant == Variant::Refined {
                        prop_assert!(t.budget() > 0.0, "refined budget hit {}", t.budget());
                    }
                }
            }
        }

        /// The conservative rule's rejection list is a prefix of the refined
        /// rule's list, with identical records, and its budget is never larger.
        #[test]
        fn webb_petitjean_is_dominated(subfamilies in subfamilies_strategy()) {
            let refined = run_sequence(0.05, Variant::Refined, &subfamilies).unwrap();
            let wp = run_sequence(0.05, Variant::WebbPetitjean, &subfamilies).unwrap();
            prop_assert!(wp.rejections().len() <= refined.rejections().len());
            for (a, b) in wp.rejections().iter().zip(refined.rejections()) {
                prop_assert_eq!(a, b);
            }
            prop_assert!(wp.budget() <= refined.budget());
        }

        /// With all subfamilies of size 1, the refined rule rejects exactly
        /// the maximal prefix with p <= alpha and the budget stays alpha.
        #[test]
        fn fixed_sequence_special_case(pvalues in proptest::collection::vec(0.0f64..=1.0, 0..=50)) {
            let alpha = 0.05;
            let subfamilies: Vec<Vec<f64>> = pvalues.iter().map(|&p| vec![p]).collect();
            let state = run_sequence(alpha, Variant::Refined, &subfamilies).unwrap();
            let expected = pvalues.iter().take_while(|&&p| p <= alpha).count();
            prop_assert_eq!(state.rejections().len(), expected);
            prop_assert_eq!(state.budget(), alpha);
        }

        /// Identical inputs give identical outputs.
        #[test]
        fn deterministic(subfamilies in subfamilies_strategy()) {
            let a = run_sequence(0.05, Variant::Refined, &subfamilies).unwrap();
            let b = run_sequence(0.05, Variant::Refined, &subfamilies).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
