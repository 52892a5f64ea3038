//! Amplification bookkeeping: choice of the Hölder exponents `ℓ_i`, the
//! diagonal count for sums of inverse squares, the density-norm checks and the
//! measured cancellation of the restricted incomplete sum.

use crate::arith::gcd;
use crate::error::{range_err, Budget, Result};
use crate::expsum::{
    incomplete_kloosterman_sq, mu_density, multilinear_sq_sum, DensityMap, KloostermanQuery,
    PhaseAccumulator, SumValue,
};
use crate::factor::{exceptional_set_with, ExceptionalParams, SpfTable};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn ell_left(beta: f64, ell: u32) -> bool {
    beta * (8.0 * ell as f64 - 2.0) < 1.0
}

fn ell_right(beta: f64, ell: u32) -> bool {
    1.0 <= beta * (8.0 * ell as f64 + 6.0)
}

/// Smallest `ℓ ≥ 1` with `1 ≤ β(8ℓ + 6)`; when `β(8ℓ − 2) < 1` also holds it is the
/// unique solution of both inequalities.
///
/// For `β ≥ 1/6` no `ℓ ≥ 1` meets the left inequality and the result is 1.
pub fn choose_ell(beta: f64) -> Result<u32> {
    if !(beta > 0.0 && beta <= 1.0) {
        return range_err(format!("beta_i = {beta} must lie in (0, 1]"));
    }
    let mut ell = ((1.0 / beta - 6.0) / 8.0).ceil().max(1.0) as u32;
    while !ell_right(beta, ell) {
        ell += 1;
    }
    while ell > 1 && ell_right(beta, ell - 1) {
        ell -= 1;
    }
    Ok(ell)
}

/// Both inequalities `β(8ℓ − 2) < 1 ≤ β(8ℓ + 6)`.
pub fn ell_admissible(beta: f64, ell: u32) -> bool {
    ell_left(beta, ell) && ell_right(beta, ell)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Lemma2Instance {
    pub ell: u32,
    pub prime_lists: Vec<Vec<u64>>,
    pub solutions: u128,
    /// Solutions whose two halves agree as multisets.
    pub matched: u128,
}

impl Lemma2Instance {
    /// `(2ℓ)^ℓ · Π M_i / ln M_i`.
    pub fn bound_with(&self, m: &[f64]) -> f64 {
        let lead = (2.0 * self.ell as f64).powi(self.ell as i32);
        lead * m.iter().map(|&m| m / m.ln()).product::<f64>()
    }

    /// The bound with `M_i` the largest prime of set `i`.
    pub fn bound(&self) -> f64 {
        let m: Vec<f64> = self
            .prime_lists
            .iter()
            .map(|s| s.iter().copied().max().unwrap_or(2) as f64)
            .collect();
        self.bound_with(&m)
    }
}

/// Count `2ℓ`-tuples with `1/x₁² + ⋯ + 1/x_ℓ² = 1/x_{ℓ+1}² + ⋯ + 1/x_{2ℓ}²`,
/// where slots `i` and `i + ℓ` draw from `prime_sets[i]`.
pub fn lemma2_enumerate(
    ell: u32,
    prime_sets: &[Vec<u64>],
    budget: Budget,
) -> Result<Lemma2Instance> {
    if ell == 0 || prime_sets.len() != ell as usize {
        return range_err(format!(
            "expected {ell} prime sets, got {}",
            prime_sets.len()
        ));
    }
    if prime_sets.iter().any(|s| s.is_empty() || s.contains(&0)) {
        return range_err("prime sets must be nonempty sets of positive integers");
    }
    let sizes: u128 = prime_sets.iter().map(|s| s.len() as u128).product();
    budget.check(sizes.saturating_mul(sizes))?;

    // value of one half -> multiset -> number of ordered tuples
    let mut halves: BTreeMap<BigRational, BTreeMap<Vec<u64>, u128>> = BTreeMap::new();
    let mut tuple = vec![0u64; ell as usize];
    let mut idx = vec![0usize; ell as usize];
    loop {
        let mut value = BigRational::from_integer(BigInt::from(0));
        for (i, &j) in idx.iter().enumerate() {
            let x = prime_sets[i][j];
            tuple[i] = x;
            value += BigRational::new(BigInt::from(1), BigInt::from(x) * BigInt::from(x));
        }
        let mut key = tuple.clone();
        key.sort_unstable();
        *halves.entry(value).or_default().entry(key).or_insert(0) += 1;

        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(finish_lemma2(ell, prime_sets, &halves));
            }
            idx[k] += 1;
            if idx[k] < prime_sets[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn finish_lemma2(
    ell: u32,
    prime_sets: &[Vec<u64>],
    halves: &BTreeMap<BigRational, BTreeMap<Vec<u64>, u128>>,
) -> Lemma2Instance {
    let mut solutions = 0u128;
    let mut matched = 0u128;
    for classes in halves.values() {
        let total: u128 = classes.values().sum();
        solutions += total * total;
        matched += classes.values().map(|c| c * c).sum::<u128>();
    }
    Lemma2Instance {
        ell,
        prime_lists: prime_sets.to_vec(),
        solutions,
        matched,
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AmplificationPlan {
    pub q: u64,
    pub rho: f64,
    pub beta: f64,
    pub r: u32,
    /// `M_i = ½ q^{β_i}`.
    pub beta_i: Vec<f64>,
    pub ell_i: Vec<u32>,
}

impl AmplificationPlan {
    /// Plan with each `ℓ_i` chosen from its `β_i`.
    pub fn new(q: u64, rho: f64, beta: f64, beta_i: Vec<f64>) -> Result<Self> {
        if q < 2 || beta_i.is_empty() {
            return range_err("need q ≥ 2 and at least one β_i");
        }
        let ell_i = beta_i
            .iter()
            .map(|&b| choose_ell(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(AmplificationPlan {
            q,
            rho,
            beta,
            r: beta_i.len() as u32,
            beta_i,
            ell_i,
        })
    }

    pub fn m(&self, i: usize) -> f64 {
        0.5 * (self.q as f64).powf(self.beta_i[i])
    }

    /// `(M_i/2, M_i]`.
    pub fn intervals(&self) -> Vec<(u64, u64)> {
        (0..self.beta_i.len())
            .map(|i| {
                let m = self.m(i);
                ((m / 2.0).floor() as u64 + 1, m.floor() as u64)
            })
            .collect()
    }

    /// Descriptions of every violated invariant; empty when the plan is consistent.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, (&b, &l)) in self.beta_i.iter().zip(&self.ell_i).enumerate() {
            if b < self.rho * self.beta {
                out.push(format!(
                    "beta_{i} = {b} below rho*beta = {}",
                    self.rho * self.beta
                ));
            }
            if !ell_admissible(b, l) {
                out.push(format!(
                    "ell_{i} = {l} violates the selection inequalities for beta_{i} = {b}"
                ));
            }
            let floor = (1.0 / (14.0 * b)).ceil() as i64 - 1;
            if (l as i64) < floor {
                out.push(format!(
                    "ell_{i} = {l} below ceil(1/(14 beta_{i})) - 1 = {floor}"
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FactorNorms {
    pub interval: (u64, u64),
    pub ell: u32,
    pub prime_count: u64,
    /// `M/ln M` with `M` the top of the interval.
    pub prime_count_pnt: f64,
    pub l1: u128,
    pub l2_squared: u128,
    pub linf: u64,
    /// `(4ℓ)^{2ℓ}·P^{2ℓ}` with the exact prime count `P`.
    pub l2_bound: f64,
    pub l2_bound_pnt: f64,
    pub l2_ok: bool,
    pub l2_ok_pnt: bool,
    /// `‖μ‖_∞ / ‖μ‖₁`.
    pub linf_ratio: f64,
    /// `q^{−1/8}`.
    pub linf_threshold: f64,
    pub linf_ok: bool,
    /// Whether `β_i(8ℓ_i − 2) < 1` holds, which is when the sup-norm bound is expected.
    pub margin: bool,
    /// `P^{2ℓ} > q^{1/8}`.
    pub size_proxy: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HolderReport {
    pub q: u64,
    pub a: i64,
    pub sum: SumValue,
    /// `2^r Π ℓ_i`.
    pub exponent: u64,
    /// `Σ_z μ₁(z₁)⋯μ_r(z_r) e_q(a z₁⋯z_r)`.
    pub amplified: SumValue,
    /// `exponent · ln|S|`.
    pub lhs_log: f64,
    /// `Σ (exponent − 2ℓ_i) ln P_i + ln|amplified|`.
    pub rhs_log: f64,
    pub holds: bool,
    pub factors: Vec<FactorNorms>,
}

/// Evaluate both sides of the iterated Hölder bound
/// `|S|^{2^r Πℓ} ≤ Π P_i^{2^r Πℓ − 2ℓ_i} · |Σ_z μ₁(z₁)⋯μ_r(z_r) e_q(a z₁⋯z_r)|`
/// for `S = Σ e_q(a x̄₁²⋯x̄_r²)` over primes `x_i ∈ I_i`, plus the norm checks on each `μ_i`.
pub fn holder_amplification_check(
    plan: &AmplificationPlan,
    a: i64,
    intervals: &[(u64, u64)],
    budget: Budget,
) -> Result<HolderReport> {
    if intervals.len() != plan.ell_i.len() {
        return range_err(format!(
            "{} intervals for {} exponents",
            intervals.len(),
            plan.ell_i.len()
        ));
    }
    let q = plan.q;
    let sum = multilinear_sq_sum(intervals, q, a, true, None, budget)?;
    let mut maps = Vec::with_capacity(intervals.len());
    for (&iv, &ell) in intervals.iter().zip(&plan.ell_i) {
        maps.push(mu_density(iv, ell, q, budget)?);
    }
    let support: u128 = maps.iter().map(|m| m.counts.len() as u128).product();
    budget.check(support)?;
    let amplified = weighted_product_sum(&maps, a, q);

    let r = plan.ell_i.len() as u32;
    let exponent = (1u64 << r) * plan.ell_i.iter().map(|&l| l as u64).product::<u64>();
    let e = exponent as f64;
    let lhs_log = e * sum.abs().ln();
    // rounding floor for the amplified sum: its terms total Π‖μ_i‖₁
    let mass: f64 = maps.iter().map(|m| m.l1() as f64).product();
    let amp_abs = amplified.abs().max(mass * 1e-12);
    let rhs_log = maps
        .iter()
        .zip(&plan.ell_i)
        .map(|(m, &l)| (e - 2.0 * l as f64) * (m.prime_count as f64).ln())
        .sum::<f64>()
        + amp_abs.ln();
    let holds = lhs_log <= rhs_log + 1e-9 * rhs_log.abs().max(1.0);

    let factors = maps
        .iter()
        .zip(plan.ell_i.iter().zip(&plan.beta_i))
        .map(|(m, (&ell, &beta))| factor_norms(m, ell, beta, q))
        .collect();
    Ok(HolderReport {
        q,
        a,
        sum,
        exponent,
        amplified,
        lhs_log,
        rhs_log,
        holds,
        factors,
    })
}

fn weighted_product_sum(maps: &[DensityMap], a: i64, q: u64) -> SumValue {
    let entries: Vec<Vec<(u64, f64)>> = maps
        .iter()
        .map(|m| m.counts.iter().map(|(&z, &c)| (z, c as f64)).collect())
        .collect();
    let scale = crate::arith::reduce_signed(a, q);
    let mut acc = PhaseAccumulator::default();
    walk(&entries, scale, 1.0, q, &mut acc);
    acc.finish()
}

fn walk(rest: &[Vec<(u64, f64)>], prefix: u64, weight: f64, q: u64, acc: &mut PhaseAccumulator) {
    match rest.split_first() {
        None => acc.add_weighted(prefix, q, weight),
        Some((head, tail)) => {
            for &(z, c) in head {
                walk(
                    tail,
                    crate::arith::mul_mod(prefix, z, q),
                    weight * c,
                    q,
                    acc,
                );
            }
        }
    }
}

fn factor_norms(m: &DensityMap, ell: u32, beta: f64, q: u64) -> FactorNorms {
    let p = m.prime_count as f64;
    let top = m.interval.1 as f64;
    let pnt = top / top.ln();
    let lead = (4.0 * ell as f64).powi(2 * ell as i32);
    let l2_bound = lead * p.powi(2 * ell as i32);
    let l2_bound_pnt = lead * pnt.powi(2 * ell as i32);
    let l2 = m.l2_squared() as f64;
    let l1 = m.l1();
    let linf_ratio = m.linf() as f64 / l1 as f64;
    let linf_threshold = (q as f64).powf(-0.125);
    FactorNorms {
        interval: m.interval,
        ell,
        prime_count: m.prime_count,
        prime_count_pnt: pnt,
        l1,
        l2_squared: m.l2_squared(),
        linf: m.linf(),
        l2_bound,
        l2_bound_pnt,
        l2_ok: l2 < l2_bound,
        l2_ok_pnt: l2 < l2_bound_pnt,
        linf_ratio,
        linf_threshold,
        linf_ok: linf_ratio < linf_threshold,
        margin: ell_left(beta, ell),
        size_proxy: p.powi(2 * ell as i32) > (q as f64).powf(0.125),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CancellationSample {
    pub a: u64,
    pub abs: f64,
    /// `|sum| / N`.
    pub ratio: f64,
    /// `ln|sum| / ln N`.
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CancellationReport {
    pub q: u64,
    pub rho: f64,
    pub beta: f64,
    pub r: u32,
    pub seed: u64,
    pub n: u64,
    pub exceptional_size: u64,
    pub exceptional_density: f64,
    /// Whether `1/ln N < β < 1/10`.
    pub beta_in_range: bool,
    pub samples: Vec<CancellationSample>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub median_exponent: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Smallest `N = ⌈q^ρ⌉` accepted.
pub const MIN_N: u64 = 100;

/// Measure `|Σ_{x≤N, x∉E, (x,q)=1} e_q(a x̄²)| / N` for seeded random `a` coprime to `q`.
///
/// `E` depends only on `N`, `β` and `r`, so it is built once and shared by every sample.
pub fn proposition_cancellation(
    q: u64,
    rho: f64,
    beta: f64,
    r: u32,
    samples: usize,
    seed: u64,
) -> Result<CancellationReport> {
    if q < 2 || !(rho > 0.0 && rho <= 1.0) {
        return range_err(format!("need q ≥ 2 and rho in (0, 1]; got ({q}, {rho})"));
    }
    let n = ((q as f64).powf(rho).ceil() as u64).min(q);
    if n < MIN_N {
        return range_err(format!("N = {n} is below {MIN_N}"));
    }
    let params = ExceptionalParams::new(n, beta, r)?;
    let table = SpfTable::new(n)?;
    let e = exceptional_set_with(&table, &params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let ln_n = (n as f64).ln();
    while out.len() < samples {
        let a = rng.gen_range(1..q);
        if gcd(a, q) != 1 {
            continue;
        }
        let s = incomplete_kloosterman_sq(&KloostermanQuery::new(q, a as i64, n).excluding(&e))?;
        let abs = s.abs();
        out.push(CancellationSample {
            a,
            abs,
            ratio: abs / n as f64,
            exponent: abs.ln() / ln_n,
        });
    }
    Ok(CancellationReport {
        q,
        rho,
        beta,
        r,
        seed,
        n,
        exceptional_size: e.size(),
        exceptional_density: e.size() as f64 / n as f64,
        beta_in_range: params.check_proposition_range().is_ok(),
        max_ratio: out.iter().map(|s| s.ratio).fold(0.0, f64::max),
        median_ratio: median(out.iter().map(|s| s.ratio).collect()),
        median_exponent: median(out.iter().map(|s| s.exponent).collect()),
        samples: out,
    })
}
