//! Exact binomial probabilities for small coin-toss experiments.
//!
//! Everything here works on experiments of at most 64 tosses, which lets the
//! binomial coefficients be computed exactly in integer arithmetic before a
//! single conversion to `f64`. Tail sums accumulate from the small-term end
//! so the extreme tails the counterexample needs (down to 1e-17) come out at
//! full double precision instead of drowning in the head terms.

use crate::error::{Error, Result};

/// Largest supported number of tosses; `C(64, 32)` still fits in a `u64`,
/// and `u128` leaves generous headroom for the multiplicative recurrence.
pub const MAX_TOSSES: u32 = 64;

/// Exact binomial coefficient `C(n, k)` for `n <= 64`.
///
/// # Panics
/// Panics when `k > n` or `n > 64`; callers validate through
/// [`BinomialSpec`].
pub fn choose(n: u32, k: u32) -> u128 {
    assert!(k <= n && n <= MAX_TOSSES, "choose({n}, {k}) out of range");
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=u128::from(k) {
        // Each intermediate product is an integer multiple of i.
        c = c * (u128::from(n - k) + i) / i;
    }
    c
}

/// A binomial experiment: `n` independent tosses with per-toss success
/// probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialSpec {
    n: u32,
    p: f64,
}

impl BinomialSpec {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n == 0 || n > MAX_TOSSES {
            return Err(Error::InvalidTossCount(n));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidTossProbability(p));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn check_support(&self, k: u32) -> Result<()> {
        if k > self.n {
            return Err(Error::OutOfSupport { k, n: self.n });
        }
        Ok(())
    }

    /// Point mass `Pr(X = k) = C(n, k) p^k (1-p)^(n-k)`.
    pub fn pmf(&self, k: u32) -> Result<f64> {
        self.check_support(k)?;
        Ok(choose(self.n, k) as f64
            * self.p.powi(k as i32)
            * (1.0 - self.p).powi((self.n - k) as i32))
    }

    /// Lower tail `Pr(X <= k)`, summed upward from zero successes.
    ///
    /// Clamped at 1: accumulating the full support can land a few ulp above
    /// it, and tails are consumed as p-values.
    pub fn lower_tail(&self, k: u32) -> Result<f64> {
        self.check_support(k)?;
        let mut total = 0.0;
        for i in 0..=k {
            total += self.pmf(i)?;
        }
        Ok(total.min(1.0))
    }

    /// Upper tail `Pr(X >= k)`, summed downward from `n` successes so the
    /// smallest terms accumulate first. Clamped at 1 like [`Self::lower_tail`].
    pub fn upper_tail(&self, k: u32) -> Result<f64> {
        self.check_support(k)?;
        let mut total = 0.0;
        for i in (k..=self.n).rev() {
            total += self.pmf(i)?;
        }
        Ok(total.min(1.0))
    }
}
