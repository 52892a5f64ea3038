//! Exponential sums with squared modular inverses.
//!
//! Every sum here is a finite sum of unit phases `e_q(k) = exp(2πi·k/q)` with
//! `k` reduced into `[0, q)` before conversion to an angle, accumulated with
//! Neumaier compensation. Large ranges are split into fixed blocks whose
//! partial sums are combined in block order, so results do not depend on the
//! number of worker threads.

use crate::arith::{gcd, is_prime, mul_mod, reduce_signed};
use crate::error::{range_err, Budget, Error, Result};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashSet};

pub use crate::arith::mod_inverse;

/// Membership in a set of excluded integers.
pub trait Membership: Sync {
    fn contains(&self, n: u64) -> bool;
}

impl Membership for HashSet<u64> {
    fn contains(&self, n: u64) -> bool {
        HashSet::contains(self, &n)
    }
}

impl Membership for BTreeSet<u64> {
    fn contains(&self, n: u64) -> bool {
        BTreeSet::contains(self, &n)
    }
}

/// Neumaier's improved Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PhaseAccumulator {
    re: CompensatedSum,
    im: CompensatedSum,
    count: u64,
}

impl PhaseAccumulator {
    /// Add `weight · e_q(k)`.
    #[inline]
    pub(crate) fn add_weighted(&mut self, k: u64, q: u64, weight: f64) {
        let (s, c) = phase(k, q);
        self.re.add(weight * c);
        self.im.add(weight * s);
        self.count += 1;
    }

    #[inline]
    pub(crate) fn add(&mut self, k: u64, q: u64) {
        self.add_weighted(k, q, 1.0);
    }

    pub(crate) fn merge(&mut self, other: &PhaseAccumulator) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
        self.count += other.count;
    }

    pub(crate) fn finish(&self) -> SumValue {
        SumValue::new(self.re.value(), self.im.value(), self.count)
    }
}

/// `(sin, cos)` of `2π·k/q`, with `k` folded into `(−q/2, q/2]`.
#[inline]
pub fn phase(k: u64, q: u64) -> (f64, f64) {
    let k = k % q;
    let signed = if 2 * (k as u128) > q as u128 {
        -((q - k) as f64)
    } else {
        k as f64
    };
    (std::f64::consts::TAU * (signed / q as f64)).sin_cos()
}

/// A complex exponential sum together with the number of terms it contains.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SumValue {
    pub real_part: f64,
    pub imag_part: f64,
    pub term_count: u64,
    /// `|sum| / term_count`, zero for an empty sum.
    pub cancellation_ratio: f64,
}

impl SumValue {
    pub fn new(real_part: f64, imag_part: f64, term_count: u64) -> Self {
        let abs = real_part.hypot(imag_part);
        let cancellation_ratio = if term_count == 0 {
            0.0
        } else {
            abs / term_count as f64
        };
        SumValue {
            real_part,
            imag_part,
            term_count,
            cancellation_ratio,
        }
    }

    pub fn zero() -> Self {
        SumValue::new(0.0, 0.0, 0)
    }

    pub fn abs(&self) -> f64 {
        self.real_part.hypot(self.imag_part)
    }

    pub fn distance(&self, other: &SumValue) -> f64 {
        (self.real_part - other.real_part).hypot(self.imag_part - other.imag_part)
    }
}

/// One incomplete sum `Σ_{1≤x≤N, (x,q)=1, x∉E} e_q(a·x̄²)`.
#[derive(Clone, Copy)]
pub struct KloostermanQuery<'a> {
    pub q: u64,
    pub a: i64,
    pub n: u64,
    pub excluded: Option<&'a dyn Membership>,
}

impl<'a> KloostermanQuery<'a> {
    pub fn new(q: u64, a: i64, n: u64) -> Self {
        KloostermanQuery {
            q,
            a,
            n,
            excluded: None,
        }
    }

    pub fn excluding(mut self, set: &'a dyn Membership) -> Self {
        self.excluded = Some(set);
        self
    }

    fn validate(&self) -> Result<u64> {
        if self.q == 0 {
            return range_err("modulus must be positive");
        }
        if self.n > self.q {
            return range_err(format!("N = {} exceeds q = {}", self.n, self.q));
        }
        let a = reduce_signed(self.a, self.q);
        if gcd(a, self.q) != 1 {
            return Err(Error::NotCoprime { x: a, m: self.q });
        }
        Ok(a)
    }
}

const BLOCK: u64 = 1 << 15;

/// Evaluate an incomplete Kloosterman-type sum with squared inverses.
///
/// `x` sharing a factor with `q` is skipped, as is any `x` in the excluded set.
pub fn incomplete_kloosterman_sq(query: &KloostermanQuery<'_>) -> Result<SumValue> {
    let a = query.validate()?;
    let q = query.q;
    let blocks = query.n.div_ceil(BLOCK);
    let partials: Vec<PhaseAccumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = PhaseAccumulator::default();
            let lo = b * BLOCK + 1;
            let hi = ((b + 1) * BLOCK).min(query.n);
            for x in lo..=hi {
                if query.excluded.is_some_and(|e| e.contains(x)) {
                    continue;
                }
                let Ok(inv) = mod_inverse(x as i64, q) else {
                    continue;
                };
                acc.add(mul_mod(a, mul_mod(inv, inv, q), q), q);
            }
            acc
        })
        .collect();
    let mut total = PhaseAccumulator::default();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.finish())
}

/// `Σ_{x=1}^{q−1} e_q(a·x̄²)` for prime `q`.
pub fn complete_square_character_sum(q: u64, a: i64) -> Result<SumValue> {
    if !is_prime(q) {
        return Err(Error::NotPrime(q));
    }
    incomplete_kloosterman_sq(&KloostermanQuery::new(q, a, q - 1))
}

/// Squared inverses `x̄² mod q` of the admissible elements of `[lo, hi]`.
fn inverse_squares(lo: u64, hi: u64, q: u64, primes_only: bool) -> Vec<u64> {
    (lo..=hi)
        .filter(|&x| !primes_only || is_prime(x))
        .filter_map(|x| mod_inverse(x as i64, q).ok())
        .map(|inv| mul_mod(inv, inv, q))
        .collect()
}

/// `Σ e_q(a · x̄₁² ⋯ x̄_r² · c̄²)` over one element of each interval.
///
/// Intervals are inclusive `(lo, hi)` pairs. With `restrict_to_primes` only
/// primes are taken; elements sharing a factor with `q` are always dropped.
pub fn multilinear_sq_sum(
    intervals: &[(u64, u64)],
    q: u64,
    a: i64,
    restrict_to_primes: bool,
    fixed_cofactor: Option<u64>,
    budget: Budget,
) -> Result<SumValue> {
    if q == 0 {
        return range_err("modulus must be positive");
    }
    if intervals.is_empty() || intervals.iter().any(|&(lo, hi)| lo > hi || lo == 0) {
        return range_err("intervals must be nonempty ranges of positive integers");
    }
    let a = reduce_signed(a, q);
    if gcd(a, q) != 1 {
        return Err(Error::NotCoprime { x: a, m: q });
    }
    let scale = match fixed_cofactor {
        Some(c) => {
            let inv = mod_inverse(c as i64, q)?;
            mul_mod(a, mul_mod(inv, inv, q), q)
        }
        None => a,
    };
    let weights: Vec<Vec<u64>> = intervals
        .iter()
        .map(|&(lo, hi)| inverse_squares(lo, hi, q, restrict_to_primes))
        .collect();
    let total: u128 = weights.iter().map(|w| w.len() as u128).product();
    budget.check(total)?;
    if total == 0 {
        return Ok(SumValue::zero());
    }
    Ok(product_phase_sum(&weights, scale, q).finish())
}

/// `Σ e_q(scale · w₁ ⋯ w_r)` over the Cartesian product of the weight lists.
///
/// The first coordinate is split across workers; partials merge in order.
pub(crate) fn product_phase_sum(weights: &[Vec<u64>], scale: u64, q: u64) -> PhaseAccumulator {
    let (first, rest) = weights.split_first().expect("at least one coordinate");
    let partials: Vec<PhaseAccumulator> = first
        .par_iter()
        .map(|&w| {
            let mut acc = PhaseAccumulator::default();
            odometer(rest, mul_mod(scale, w, q), q, &mut acc);
            acc
        })
        .collect();
    let mut total = PhaseAccumulator::default();
    for p in &partials {
        total.merge(p);
    }
    total
}

fn odometer(rest: &[Vec<u64>], prefix: u64, q: u64, acc: &mut PhaseAccumulator) {
    match rest.split_first() {
        None => acc.add(prefix, q),
        Some((head, tail)) => {
            for &w in head {
                odometer(tail, mul_mod(prefix, w, q), q, acc);
            }
        }
    }
}

/// How the bilinear coefficients enter a trilinear sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrilinearMode {
    /// `Σ_h Σ_{u₁} |α_h β_{u₁}| · |Σ_{u₂} e(h ū₂²/u₁²)|`.
    Absolute,
    /// `Σ_h α_h Σ_{u₁} β_{u₁} Σ_{u₂} e(h ū₂²/u₁²)`.
    Signed,
}

/// Default `ε` in the frequency range `H = x^{α−1/2+ε}`.
pub const DEFAULT_H_EPS: f64 = 0.01;

/// `⌊x^{α−1/2+ε}⌋`, at least 1.
pub fn h_range(x: f64, alpha: f64, eps: f64) -> Result<u64> {
    if !(x >= 1.0 && alpha.is_finite() && eps.is_finite()) {
        return range_err(format!("h_range: x={x}, alpha={alpha}, eps={eps}"));
    }
    let h = x.powf(alpha - 0.5 + eps).floor();
    if h >= u64::MAX as f64 {
        return range_err(format!("h_range overflows: x={x}, alpha={alpha}"));
    }
    Ok((h as u64).max(1))
}

/// Parameters of `Σ_{h≤H} α_h Σ_{u₁} β_{u₁} Σ_{u₂} e(h ū₂²/u₁²)`, with `ū₂` inverted mod `u₁²`.
#[derive(Clone, Copy)]
pub struct TrilinearSpec<'a> {
    pub h_max: u64,
    pub u1_range: (u64, u64),
    pub u2_range: (u64, u64),
    pub excluded: Option<&'a dyn Membership>,
    /// `α_h` for `h = 1..=H`; all ones when absent.
    pub coeffs_h: Option<&'a [f64]>,
    /// `β_{u₁}` for `u₁` across `u1_range`; all ones when absent.
    pub coeffs_u1: Option<&'a [f64]>,
    pub mode: TrilinearMode,
    /// Keep only odd `u₁` and odd `u₂`.
    pub odd_only: bool,
}

impl<'a> TrilinearSpec<'a> {
    pub fn new(h_max: u64, u1_range: (u64, u64), u2_range: (u64, u64)) -> Self {
        TrilinearSpec {
            h_max,
            u1_range,
            u2_range,
            excluded: None,
            coeffs_h: None,
            coeffs_u1: None,
            mode: TrilinearMode::Absolute,
            odd_only: false,
        }
    }
}

/// One inner sum `Σ_{u₂} e(h ū₂²/u₁²)` of a trilinear sum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct InnerSum {
    pub h: u64,
    pub u1: u64,
    pub value: SumValue,
}

fn check_range(name: &str, (lo, hi): (u64, u64)) -> Result<()> {
    if lo == 0 || lo > hi {
        return range_err(format!(
            "{name} range [{lo}, {hi}] must be a nonempty range of positive integers"
        ));
    }
    Ok(())
}

/// All inner sums for `1 ≤ h ≤ H` and admissible `u₁`, ordered by `u₁` then `h`.
///
/// `u₂` is admissible when coprime to `u₁`, not excluded, and odd if requested.
pub fn restricted_inner_sums(
    h_max: u64,
    u1_range: (u64, u64),
    u2_range: (u64, u64),
    excluded: Option<&dyn Membership>,
    odd_only: bool,
) -> Result<Vec<InnerSum>> {
    check_range("u1", u1_range)?;
    check_range("u2", u2_range)?;
    if h_max == 0 {
        return range_err("H must be positive");
    }
    let u1s: Vec<u64> = (u1_range.0..=u1_range.1)
        .filter(|u| !odd_only || u % 2 == 1)
        .collect();
    if u1s.is_empty() {
        return range_err("no admissible u1 after filtering");
    }
    if u1s.iter().any(|&u| u > u32::MAX as u64) {
        return range_err("u1 must stay below 2^32 so that u1² fits in a word");
    }
    let rows: Vec<Vec<InnerSum>> = u1s
        .par_iter()
        .map(|&u1| {
            let m = u1 * u1;
            let weights: Vec<u64> = (u2_range.0..=u2_range.1)
                .filter(|u2| !odd_only || u2 % 2 == 1)
                .filter(|&u2| !excluded.is_some_and(|e| e.contains(u2)))
                .filter(|&u2| gcd(u2, u1) == 1)
                .map(|u2| {
                    let inv = mod_inverse(u2 as i64, m).expect("coprime by filter");
                    mul_mod(inv, inv, m)
                })
                .collect();
            (1..=h_max)
                .map(|h| {
                    let mut acc = PhaseAccumulator::default();
                    let hm = h % m;
                    for &w in &weights {
                        acc.add(mul_mod(hm, w, m), m);
                    }
                    InnerSum {
                        h,
                        u1,
                        value: acc.finish(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

fn check_coeffs(name: &str, coeffs: Option<&[f64]>, len: u64) -> Result<()> {
    if let Some(c) = coeffs {
        if c.len() as u64 != len {
            return range_err(format!("{name} has {} entries, expected {len}", c.len()));
        }
        if c.iter().any(|v| !(v.abs() <= 1.0)) {
            return range_err(format!("{name} entries must satisfy |c| ≤ 1"));
        }
    }
    Ok(())
}

/// Evaluate a trilinear Kloosterman-type sum in absolute or signed form.
///
/// In absolute mode the result is real; `term_count` counts `(h, u₁, u₂)` triples.
pub fn trilinear_restricted_sum(spec: &TrilinearSpec<'_>) -> Result<SumValue> {
    check_range("u1", spec.u1_range)?;
    check_coeffs("coeffs_h", spec.coeffs_h, spec.h_max)?;
    check_coeffs(
        "coeffs_u1",
        spec.coeffs_u1,
        spec.u1_range.1 - spec.u1_range.0 + 1,
    )?;
    let inner = restricted_inner_sums(
        spec.h_max,
        spec.u1_range,
        spec.u2_range,
        spec.excluded,
        spec.odd_only,
    )?;
    let alpha = |h: u64| spec.coeffs_h.map_or(1.0, |c| c[(h - 1) as usize]);
    let beta = |u1: u64| {
        spec.coeffs_u1
            .map_or(1.0, |c| c[(u1 - spec.u1_range.0) as usize])
    };
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    let mut count = 0;
    for s in &inner {
        let w = alpha(s.h) * beta(s.u1);
        count += s.value.term_count;
        match spec.mode {
            TrilinearMode::Absolute => re.add(w.abs() * s.value.abs()),
            TrilinearMode::Signed => {
                re.add(w * s.value.real_part);
                im.add(w * s.value.imag_part);
            }
        }
    }
    Ok(SumValue::new(re.value(), im.value(), count))
}

/// How the `2ℓ` slots of a μ-density split between added and subtracted inverses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SignSplit {
    pub plus: u32,
    pub minus: u32,
}

impl SignSplit {
    pub fn balanced(ell: u32) -> Self {
        SignSplit {
            plus: ell,
            minus: ell,
        }
    }

    pub fn slots(&self) -> u32 {
        self.plus + self.minus
    }
}

/// Counts of prime tuples by the residue of their signed sum of squared inverses.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    pub modulus: u64,
    pub counts: BTreeMap<u64, u64>,
    pub split: SignSplit,
    pub interval: (u64, u64),
    /// Primes of the interval that are invertible modulo `modulus`.
    pub prime_count: u64,
}

impl DensityMap {
    pub fn ell(&self) -> u32 {
        self.split.plus
    }

    pub fn l1(&self) -> u128 {
        self.counts.values().map(|&c| c as u128).sum()
    }

    pub fn l2_squared(&self) -> u128 {
        self.counts.values().map(|&c| c as u128 * c as u128).sum()
    }

    pub fn linf(&self) -> u64 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn get(&self, z: u64) -> u64 {
        self.counts.get(&z).copied().unwrap_or(0)
    }
}

/// Distribution of `w₁ + ⋯ + w_k mod m` over `k`-tuples from `weights`.
fn fold_distribution(weights: &[u64], k: u32, m: u64) -> BTreeMap<u64, u64> {
    let mut dist = BTreeMap::from([(0u64, 1u64)]);
    for _ in 0..k {
        let mut next = BTreeMap::new();
        for (&z, &c) in &dist {
            for &w in weights {
                *next.entry((z + w) % m).or_insert(0) += c;
            }
        }
        dist = next;
    }
    dist
}

/// μ-density with `ℓ` added and `ℓ` subtracted slots.
pub fn mu_density(
    interval: (u64, u64),
    ell: u32,
    modulus: u64,
    budget: Budget,
) -> Result<DensityMap> {
    mu_density_split(interval, SignSplit::balanced(ell), modulus, budget)
}

/// Tuples `(x₁, …, x_{p+m})` of primes in the interval, counted by
/// `x̄₁² + ⋯ + x̄_p² − x̄_{p+1}² − ⋯ − x̄_{p+m}² mod modulus`.
pub fn mu_density_split(
    interval: (u64, u64),
    split: SignSplit,
    modulus: u64,
    budget: Budget,
) -> Result<DensityMap> {
    if modulus == 0 {
        return range_err("modulus must be positive");
    }
    if split.plus == 0 && split.minus == 0 {
        return range_err("at least one slot is required");
    }
    check_range("interval", interval)?;
    let weights = inverse_squares(interval.0, interval.1, modulus, true);
    if weights.is_empty() {
        return range_err(format!(
            "no prime in [{}, {}] is invertible modulo {modulus}",
            interval.0, interval.1
        ));
    }
    let p = weights.len() as u128;
    budget.check(p.checked_pow(split.slots()).unwrap_or(u128::MAX))?;
    let plus = fold_distribution(&weights, split.plus, modulus);
    let minus = fold_distribution(&weights, split.minus, modulus);
    let mut counts = BTreeMap::new();
    for (&s, &cs) in &plus {
        for (&t, &ct) in &minus {
            *counts.entry((s + modulus - t) % modulus).or_insert(0) += cs * ct;
        }
    }
    Ok(DensityMap {
        modulus,
        counts,
        split,
        interval,
        prime_count: weights.len() as u64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SubprogressionMass {
    pub q1: u64,
    /// Largest fiber mass over `ξ mod q₁`, as a fraction of the total.
    pub max_fraction: f64,
    /// `q₁^{−1/8}`.
    pub threshold: f64,
    pub below_threshold: bool,
}

/// Maximal normalized mass of a residue class `z ≡ ξ (mod q₁)`.
pub fn subprogression_mass(density: &DensityMap, q1: u64) -> Result<SubprogressionMass> {
    if q1 == 0 || density.modulus % q1 != 0 {
        return Err(Error::NotDivisor {
            divisor: q1,
            modulus: density.modulus,
        });
    }
    let mut fibers: BTreeMap<u64, u128> = BTreeMap::new();
    for (&z, &c) in &density.counts {
        *fibers.entry(z % q1).or_insert(0) += c as u128;
    }
    let max = fibers.values().copied().max().unwrap_or(0);
    let total = density.l1();
    let max_fraction = if total == 0 {
        0.0
    } else {
        max as f64 / total as f64
    };
    let threshold = (q1 as f64).powf(-0.125);
    Ok(SubprogressionMass {
        q1,
        max_fraction,
        threshold,
        below_threshold: max_fraction < threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct evaluation with no blocking, compensation or folding.
    fn naive(q: u64, a: u64, n: u64) -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        for x in 1..=n {
            if let Ok(inv) = mod_inverse(x as i64, q) {
                let k = (a as u128 * inv as u128 * inv as u128 % q as u128) as f64;
                let t = std::f64::consts::TAU * k / q as f64;
                re += t.cos();
                im += t.sin();
            }
        }
        (re, im)
    }

    #[test]
    fn mod_five_and_seven() {
        let s = incomplete_kloosterman_sq(&KloostermanQuery::new(5, 1, 4)).unwrap();
        assert!((s.real_part - 4.0 * (std::f64::consts::TAU / 5.0).cos()).abs() < 1e-12);
        assert!((s.real_part - 1.2360679774997898).abs() < 1e-12);
        assert!(s.imag_part.abs() < 1e-12);
        assert_eq!(s.term_count, 4);

        let s = incomplete_kloosterman_sq(&KloostermanQuery::new(7, 1, 6)).unwrap();
        assert!((s.real_part + 1.0).abs() < 1e-12);
        assert!((s.imag_part - 7f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn empty_and_invalid_queries() {
        let s = incomplete_kloosterman_sq(&KloostermanQuery::new(11, 1, 0)).unwrap();
        assert_eq!(s, SumValue::zero());
        assert!(matches!(
            incomplete_kloosterman_sq(&KloostermanQuery::new(11, 1, 12)),
            Err(Error::Range(_))
        ));
        assert_eq!(
            incomplete_kloosterman_sq(&KloostermanQuery::new(12, 4, 5)),
            Err(Error::NotCoprime { x: 4, m: 12 })
        );
    }

    #[test]
    fn skips_non_coprime_and_excluded() {
        let s = incomplete_kloosterman_sq(&KloostermanQuery::new(12, 1, 12)).unwrap();
        assert_eq!(s.term_count, 4);
        let ex: HashSet<u64> = [1, 5].into_iter().collect();
        let s =
            incomplete_kloosterman_sq(&KloostermanQuery::new(12, 1, 12).excluding(&ex)).unwrap();
        assert_eq!(s.term_count, 2);
    }

    #[test]
    fn blocked_sum_matches_naive() {
        let q = 1_000_003;
        let n = 200_000;
        let s = incomplete_kloosterman_sq(&KloostermanQuery::new(q, 17, n)).unwrap();
        let (re, im) = naive(q, 17, n);
        assert!((s.real_part - re).abs() < 1e-7 && (s.imag_part - im).abs() < 1e-7);
    }

    #[test]
    fn complete_sum_examples() {
        let s = complete_square_character_sum(3, 1).unwrap();
        assert!((s.real_part + 1.0).abs() < 1e-12 && (s.imag_part - 3f64.sqrt()).abs() < 1e-12);
        let s = complete_square_character_sum(5, 1).unwrap();
        assert!((s.real_part - (5f64.sqrt() - 1.0)).abs() < 1e-12);
        assert_eq!(complete_square_character_sum(9, 1), Err(Error::NotPrime(9)));
        assert_eq!(
            complete_square_character_sum(7, 14),
            Err(Error::NotCoprime { x: 0, m: 7 })
        );
    }

    #[test]
    fn multilinear_examples() {
        // inverses of 2 and 3 mod 35 are 18 and 12; squares 9 and 4
        let s = multilinear_sq_sum(&[(2, 3)], 35, 1, true, None, Budget::DEFAULT).unwrap();
        let (s9, c9) = phase(9, 35);
        let (s4, c4) = phase(4, 35);
        assert!((s.real_part - (c9 + c4)).abs() < 1e-12);
        assert!((s.imag_part - (s9 + s4)).abs() < 1e-12);

        let lin = multilinear_sq_sum(&[(1, 40)], 101, 3, false, None, Budget::DEFAULT).unwrap();
        let inc = incomplete_kloosterman_sq(&KloostermanQuery::new(101, 3, 40)).unwrap();
        assert!(lin.distance(&inc) < 1e-12);
        assert_eq!(lin.term_count, inc.term_count);

        assert_eq!(
            multilinear_sq_sum(&[(2, 3)], 35, 1, true, Some(7), Budget::DEFAULT),
            Err(Error::NotCoprime { x: 7, m: 35 })
        );
        assert!(matches!(
            multilinear_sq_sum(&[(5, 3)], 35, 1, true, None, Budget::DEFAULT),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            multilinear_sq_sum(&[(1, 100), (1, 100)], 1009, 1, false, None, Budget(5000)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn singleton_intervals_collapse_to_product_inverse() {
        let q = 1009 * 1009;
        let xs = [11u64, 29, 101, 7];
        let iv: Vec<(u64, u64)> = xs.iter().map(|&x| (x, x)).collect();
        let s = multilinear_sq_sum(&iv, q, 5, false, Some(13), Budget::DEFAULT).unwrap();
        let prod = xs.iter().fold(13u64, |acc, &x| mul_mod(acc, x, q));
        let inv = mod_inverse(prod as i64, q).unwrap();
        let (si, co) = phase(mul_mod(5, mul_mod(inv, inv, q), q), q);
        assert!((s.real_part - co).abs() < 1e-12 && (s.imag_part - si).abs() < 1e-12);
    }

    #[test]
    fn h_range_values() {
        // 10^6^(0.01) = 10^0.06 = 1.148...
        assert_eq!(h_range(1e6, 0.5, DEFAULT_H_EPS).unwrap(), 1);
        // 10^6^(0.51) = 10^3.06 = 1148.15...
        assert_eq!(h_range(1e6, 1.0, DEFAULT_H_EPS).unwrap(), 1148);
        assert_eq!(h_range(1e4, 1.0, 0.0).unwrap(), 100);
        assert!(h_range(0.5, 1.0, 0.01).is_err());
        assert!(h_range(10.0, f64::NAN, 0.01).is_err());
    }

    #[test]
    fn trilinear_examples() {
        let spec = TrilinearSpec::new(1, (3, 3), (1, 8));
        let t = trilinear_restricted_sum(&spec).unwrap();
        let inc = incomplete_kloosterman_sq(&KloostermanQuery::new(9, 1, 8)).unwrap();
        assert!((t.real_part - inc.abs()).abs() < 1e-12);

        let all: HashSet<u64> = (1..=8).collect();
        let t = trilinear_restricted_sum(&TrilinearSpec {
            excluded: Some(&all),
            ..spec
        })
        .unwrap();
        assert_eq!(t.real_part, 0.0);
        assert_eq!(t.term_count, 0);

        let even = TrilinearSpec {
            odd_only: true,
            ..TrilinearSpec::new(1, (2, 2), (1, 8))
        };
        assert!(matches!(
            trilinear_restricted_sum(&even),
            Err(Error::Range(_))
        ));

        let bad = [1.5];
        let t = TrilinearSpec {
            coeffs_h: Some(&bad),
            ..spec
        };
        assert!(matches!(trilinear_restricted_sum(&t), Err(Error::Range(_))));
    }

    #[test]
    fn trilinear_signed_with_coefficients() {
        let ch = [1.0, -0.5];
        let cu = [0.25, -1.0, 0.75];
        let spec = TrilinearSpec {
            coeffs_h: Some(&ch),
            coeffs_u1: Some(&cu),
            mode: TrilinearMode::Signed,
            ..TrilinearSpec::new(2, (5, 7), (10, 40))
        };
        let t = trilinear_restricted_sum(&spec).unwrap();
        let (mut re, mut im) = (0.0, 0.0);
        for (hi, h) in (1..=2u64).enumerate() {
            for (ui, u1) in (5..=7u64).enumerate() {
                let m = u1 * u1;
                for u2 in 10..=40u64 {
                    if gcd(u1, u2) != 1 {
                        continue;
                    }
                    let inv = mod_inverse(u2 as i64, m).unwrap();
                    let ang = std::f64::consts::TAU * ((h * inv * inv) % m) as f64 / m as f64;
                    re += ch[hi] * cu[ui] * ang.cos();
                    im += ch[hi] * cu[ui] * ang.sin();
                }
            }
        }
        assert!((t.real_part - re).abs() < 1e-10 && (t.imag_part - im).abs() < 1e-10);
    }

    #[test]
    fn density_example() {
        let d = mu_density((2, 3), 1, 35, Budget::DEFAULT).unwrap();
        assert_eq!(d.counts, BTreeMap::from([(0, 2), (5, 1), (30, 1)]));
        assert_eq!(d.l1(), 4);
        assert_eq!(d.l2_squared(), 6);
        assert_eq!(d.linf(), 2);

        let one = mu_density((10, 30), 2, 1, Budget::DEFAULT).unwrap();
        assert_eq!(one.counts.len(), 1);
        assert_eq!(one.get(0), 6u64.pow(4));

        assert!(matches!(
            mu_density((24, 28), 1, 35, Budget::DEFAULT),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            mu_density((2, 200), 3, 1009, Budget::DEFAULT),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn subprogression_examples() {
        let d = mu_density((2, 3), 1, 35, Budget::DEFAULT).unwrap();
        assert_eq!(subprogression_mass(&d, 5).unwrap().max_fraction, 1.0);
        assert_eq!(subprogression_mass(&d, 1).unwrap().max_fraction, 1.0);
        let full = subprogression_mass(&d, 35).unwrap();
        assert_eq!(full.max_fraction, 0.5);
        assert_eq!(
            subprogression_mass(&d, 4),
            Err(Error::NotDivisor {
                divisor: 4,
                modulus: 35
            })
        );
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
