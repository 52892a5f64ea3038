//! The exceptional set: integers without `r` large, well-separated prime factors.

use super::sieve::{FactorProfile, SpfTable};
use crate::error::{range_err, Result};
use crate::expsum::Membership;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExceptionalParams {
    pub n: u64,
    pub beta: f64,
    pub r: u32,
    /// Require `p_i > (1 + 10/ln N)·p_{i+1}` for `1 ≤ i < r`.
    pub spacing: bool,
    /// Also require the gap between `p_r` and the largest prime of the cofactor.
    pub strict: bool,
}

impl ExceptionalParams {
    pub fn new(n: u64, beta: f64, r: u32) -> Result<Self> {
        if n < 2 {
            return range_err(format!("N = {n} must be at least 2"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return range_err(format!("beta = {beta} must lie in (0, 1)"));
        }
        if r == 0 {
            return range_err("r must be positive");
        }
        Ok(ExceptionalParams {
            n,
            beta,
            r,
            spacing: true,
            strict: false,
        })
    }

    pub fn with_spacing(mut self, spacing: bool) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn with_strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn log_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// `N^β`; the `r`-th largest prime must exceed it.
    pub fn threshold(&self) -> f64 {
        (self.n as f64).powf(self.beta)
    }

    pub fn spacing_factor(&self) -> f64 {
        1.0 + 10.0 / self.log_n()
    }

    /// The range `1/ln N < β < 1/10` needed for the cancellation statement.
    pub fn check_proposition_range(&self) -> Result<()> {
        let lo = 1.0 / self.log_n();
        if !(self.beta > lo && self.beta < 0.1) {
            return range_err(format!(
                "beta = {} outside (1/ln N, 1/10) = ({lo:.6}, 0.1)",
                self.beta
            ));
        }
        Ok(())
    }

    /// `β (ln 1/β)^r`.
    pub fn lemma_budget(&self) -> f64 {
        self.beta * (1.0 / self.beta).ln().powi(self.r as i32)
    }

    /// `ln ln N / ln N`.
    pub fn spacing_budget(&self) -> f64 {
        self.log_n().ln() / self.log_n()
    }

    /// Whether `n`, given its profile, belongs to the exceptional set.
    pub fn is_exceptional(&self, profile: &FactorProfile) -> bool {
        let p = &profile.primes_desc;
        let r = self.r as usize;
        if p.len() < r || p[r - 1] as f64 <= self.threshold() {
            return true;
        }
        let gap = self.spacing_factor();
        if self.spacing && p[..r].windows(2).any(|w| w[0] as f64 <= gap * w[1] as f64) {
            return true;
        }
        self.strict && p.len() > r && p[r - 1] as f64 <= gap * p[r] as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExceptionalSummary {
    pub n: u64,
    pub size: u64,
    pub density: f64,
    pub lemma_budget: f64,
    pub spacing_budget: f64,
}

impl ExceptionalSummary {
    /// `|E|/N ≤ slack · (lemma budget + spacing budget)`.
    pub fn within(&self, slack: f64) -> bool {
        self.density <= slack * (self.lemma_budget + self.spacing_budget)
    }
}

/// The exceptional subset of `{1, …, N}`. It depends only on `N`, `β`, `r` and the flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalSet {
    pub params: ExceptionalParams,
    bits: Vec<u64>,
    size: u64,
}

impl ExceptionalSet {
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn summary(&self) -> ExceptionalSummary {
        ExceptionalSummary {
            n: self.params.n,
            size: self.size,
            density: self.size as f64 / self.params.n as f64,
            lemma_budget: self.params.lemma_budget(),
            spacing_budget: self.params.spacing_budget(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (1..=self.params.n).filter(|&n| self.contains(n))
    }
}

impl Membership for ExceptionalSet {
    fn contains(&self, n: u64) -> bool {
        if n == 0 || n > self.params.n {
            return false;
        }
        let i = (n - 1) as usize;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }
}

/// Build `E` for the given parameters, sieving `1..=N` first.
pub fn exceptional_set(params: &ExceptionalParams) -> Result<ExceptionalSet> {
    let table = SpfTable::new(params.n)?;
    exceptional_set_with(&table, params)
}

pub fn exceptional_set_with(
    table: &SpfTable,
    params: &ExceptionalParams,
) -> Result<ExceptionalSet> {
    if table.limit() < params.n {
        return range_err(format!(
            "sieve covers {} but N = {}",
            table.limit(),
            params.n
        ));
    }
    let words = params.n.div_ceil(64) as usize;
    let bits: Vec<u64> = (0..words)
        .into_par_iter()
        .map(|w| {
            let mut word = 0u64;
            for b in 0..64u64 {
                let n = w as u64 * 64 + b + 1;
                if n > params.n {
                    break;
                }
                if params.is_exceptional(&table.profile(n)) {
                    word |= 1 << b;
                }
            }
            word
        })
        .collect();
    let size = bits.iter().map(|w| w.count_ones() as u64).sum();
    Ok(ExceptionalSet {
        params: *params,
        bits,
        size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        // 77 = 11·7 clears N^β but 11 ≤ (1 + 10/ln 100)·7, so only the unspaced set omits it
        let p = ExceptionalParams::new(100, 0.3, 2).unwrap();
        assert!(!exceptional_set(&p.with_spacing(false))
            .unwrap()
            .contains(77));
        let e = exceptional_set(&p).unwrap();
        assert!(e.contains(77));
        assert!(e.contains(97));
        assert!(e.contains(12));
        assert!(e.contains(1));
        assert!(!e.contains(0) && !e.contains(101));
        assert_eq!(e.iter().count() as u64, e.size());
    }

    #[test]
    fn spacing_flag() {
        // 35 = 7·5: 7 ≤ (1 + 10/ln 100)·5 ≈ 15.9, so spacing moves it into E
        let p = ExceptionalParams::new(100, 0.3, 2).unwrap();
        let spaced = exceptional_set(&p).unwrap();
        let loose = exceptional_set(&p.with_spacing(false)).unwrap();
        assert!(spaced.contains(35));
        assert!(!loose.contains(35));
        assert!(loose.iter().all(|n| spaced.contains(n)));
    }

    #[test]
    fn strict_flag() {
        // 2·3·83 = 498 with r = 2: p₁ = 83, p₂ = 3, cofactor 2 lies too close to 3
        let p = ExceptionalParams::new(1000, 0.1, 2).unwrap();
        let prof = FactorProfile {
            n: 498,
            primes_desc: vec![83, 3, 2],
        };
        assert!(!p.is_exceptional(&prof));
        assert!(p.with_strict(true).is_exceptional(&prof));
    }

    #[test]
    fn invalid_params() {
        assert!(ExceptionalParams::new(1, 0.1, 2).is_err());
        assert!(ExceptionalParams::new(100, 0.0, 2).is_err());
        assert!(ExceptionalParams::new(100, 1.0, 2).is_err());
        assert!(ExceptionalParams::new(100, 0.1, 0).is_err());
        let p = ExceptionalParams::new(1_000_000, 0.05, 2).unwrap();
        assert!(p.check_proposition_range().is_err());
        let p = ExceptionalParams::new(1_000_000, 0.12, 2).unwrap();
        assert!(p.check_proposition_range().is_err());
        let p = ExceptionalParams::new(1_000_000, 0.09, 2).unwrap();
        assert!(p.check_proposition_range().is_ok());
    }

    #[test]
    fn monotone_in_beta() {
        let mut prev = 0;
        for beta in [0.02, 0.05, 0.1, 0.2] {
            let e = exceptional_set(&ExceptionalParams::new(20_000, beta, 2).unwrap()).unwrap();
            assert!(e.size() >= prev);
            prev = e.size();
        }
    }
}
