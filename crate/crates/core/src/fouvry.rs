//! Coefficients of the predicted and proven main terms for `S^f(x, α)`, the
//! square roots of unity modulo `u²`, the residue `Φ(u₁, u₂)`, and the lattice
//! sums over the admissible and excluded `(u₁, u₂)` regions.

use crate::arith::{factorize, gcd, isqrt, mod_inverse, mul_mod};
use crate::error::{range_err, Budget, Error, Result};
use crate::expsum::{restricted_inner_sums, Membership};
use crate::factor::{exceptional_set_with, ExceptionalParams, SpfTable};
use std::f64::consts::PI;

fn pi2() -> f64 {
    PI * PI
}

/// `4α²/π²`, the proven coefficient for `α ≤ 1/2`.
pub fn hooley_coefficient(alpha: f64) -> f64 {
    4.0 * alpha * alpha / pi2()
}

/// One branch of the conjectured coefficient `B(α)`, evaluated regardless of its range.
///
/// * branch 1: `(4/π²)(α − 1/4)`
/// * branch 2: branch 1 `+ (α − 1)²/(18π²)`
/// * branch 3: branch 1 `+ (α − 7/4)/(6π²)`
pub fn b_branch(branch: u8, alpha: f64) -> f64 {
    let base = 4.0 / pi2() * (alpha - 0.25);
    match branch {
        1 => base,
        2 => base + (alpha - 1.0).powi(2) / (18.0 * pi2()),
        3 => base + (alpha - 1.75) / (6.0 * pi2()),
        _ => panic!("B(α) has branches 1, 2 and 3"),
    }
}

/// The conjectured `B(α)` for `α > 1/2`, continued by `4α²/π²` below.
pub fn conjectured_b(alpha: f64) -> f64 {
    if alpha <= 0.5 {
        hooley_coefficient(alpha)
    } else if alpha <= 1.0 {
        b_branch(1, alpha)
    } else if alpha <= 2.5 {
        b_branch(2, alpha)
    } else {
        b_branch(3, alpha)
    }
}

/// `B(α)·√x·(ln x)²`.
pub fn predicted_main_term(x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return range_err(format!("alpha = {alpha} must be positive"));
    }
    if !(x >= 2.0) {
        return range_err(format!("x = {x} must be at least 2"));
    }
    Ok(conjectured_b(alpha) * x.sqrt() * x.ln().powi(2))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HooleyCoefficients {
    pub alpha: f64,
    /// `4α²/π²`.
    pub hooley_main: f64,
    pub b_alpha: f64,
    /// `(1 + (2α − 1)(3 − 2α))/π²`.
    pub fouvry_lower: f64,
    /// `(1 + (α − 1/2)(11/2 − 3α))/π²`, the same lower bound as restated later.
    pub fouvry_lower_restated: f64,
    /// `(1 + 4(α − 1/2))/π²`, the leading coefficient of the improved lower bound.
    pub improved_lower: f64,
    pub delta_exponent_claim: &'static str,
}

impl HooleyCoefficients {
    /// Restated minus original lower-bound coefficient, `(α − 1/2)²/π²`.
    pub fn lower_bound_discrepancy(&self) -> f64 {
        self.fouvry_lower_restated - self.fouvry_lower
    }
}

pub fn coefficient_table(alpha: f64) -> Result<HooleyCoefficients> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return range_err(format!("alpha = {alpha} must be positive"));
    }
    Ok(HooleyCoefficients {
        alpha,
        hooley_main: hooley_coefficient(alpha),
        b_alpha: conjectured_b(alpha),
        fouvry_lower: (1.0 + (2.0 * alpha - 1.0) * (3.0 - 2.0 * alpha)) / pi2(),
        fouvry_lower_restated: (1.0 + (alpha - 0.5) * (5.5 - 3.0 * alpha)) / pi2(),
        improved_lower: (1.0 + 4.0 * (alpha - 0.5)) / pi2(),
        delta_exponent_claim: "delta(alpha) = O((alpha - 1/2)^(2+c)) for some unspecified c > 0",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMode {
    /// Test every residue mod `u²`.
    Scan,
    /// Combine the roots modulo each prime power of `u²`.
    Crt,
}

/// `R(u) = {Ω mod u² : Ω² ≡ 1 (mod u²)}`, ascending.
pub fn sqrt_one_residues(u: u64, mode: RootMode, budget: Budget) -> Result<Vec<u64>> {
    if u == 0 {
        return range_err("u must be positive");
    }
    if u > u32::MAX as u64 {
        return range_err("u² must fit in 64 bits");
    }
    let m = u * u;
    match mode {
        RootMode::Scan => {
            budget.check(m as u128)?;
            let one = 1 % m;
            Ok((0..m).filter(|&w| mul_mod(w, w, m) == one).collect())
        }
        RootMode::Crt => {
            let mut roots = vec![0u64];
            let mut modulus = 1u64;
            for (p, e) in factorize(u) {
                let pk = p.pow(2 * e);
                let local = prime_power_roots(p, 2 * e);
                roots = crt_combine(&roots, modulus, &local, pk);
                modulus *= pk;
            }
            roots.sort_unstable();
            Ok(roots)
        }
    }
}

/// Square roots of 1 modulo `p^k`.
fn prime_power_roots(p: u64, k: u32) -> Vec<u64> {
    let m = p.pow(k);
    match (p, k) {
        (2, 1) => vec![1],
        (2, 2) => vec![1, 3],
        (2, _) => vec![1, m / 2 - 1, m / 2 + 1, m - 1],
        _ => vec![1, m - 1],
    }
}

fn crt_combine(a: &[u64], ma: u64, b: &[u64], mb: u64) -> Vec<u64> {
    let inv = mod_inverse(ma as i64, mb).expect("coprime moduli");
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &ra in a {
        for &rb in b {
            let diff = (rb + mb - ra % mb) % mb;
            let t = mul_mod(diff, inv, mb);
            out.push(ra + ma * t);
        }
    }
    out
}

/// `Φ(u₁, u₂) = −ū₁²u₁² + ū₂²u₂² mod (u₁u₂)²`, where `ū₁` inverts `u₁` mod `u₂²`
/// and `ū₂` inverts `u₂` mod `u₁²`.
///
/// `Φ ≡ 1 (mod u₁²)` and `Φ ≡ −1 (mod u₂²)`, so `Φ ∈ R(u₁u₂)`.
pub fn phi_pair(u1: u64, u2: u64) -> Result<u64> {
    if u1 < 2 || u2 < 2 {
        return range_err(format!("Φ needs u1, u2 ≥ 2, got ({u1}, {u2})"));
    }
    if gcd(u1, u2) != 1 {
        return Err(Error::NotCoprime { x: u1, m: u2 });
    }
    let u = u1.checked_mul(u2).filter(|&u| u <= u32::MAX as u64);
    let Some(u) = u else {
        return range_err("(u1·u2)² must fit in 64 bits");
    };
    let m = u * u;
    let (s1, s2) = (u1 * u1, u2 * u2);
    let inv1 = mod_inverse(u1 as i64, s2)?;
    let inv2 = mod_inverse(u2 as i64, s1)?;
    let neg = mul_mod(mul_mod(inv1, inv1, m), s1, m);
    let pos = mul_mod(mul_mod(inv2, inv2, m), s2, m);
    Ok((pos + m - neg) % m)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RangeParameters {
    /// `½(x^α − x^{−1−α})`.
    pub x_alpha: f64,
    /// `2^{1/(2α)}·u^{1+1/(2α)}`, an asymptotic stand-in.
    pub y2: f64,
    /// `u·√x`.
    pub y3: f64,
    /// `y2` is only asymptotically right.
    pub approximate: bool,
}

pub fn range_parameters(x: u64, alpha: f64, u: u64) -> Result<RangeParameters> {
    if x < 2 || !(alpha > 0.0) || u == 0 {
        return range_err(format!(
            "need x ≥ 2, alpha > 0, u ≥ 1; got ({x}, {alpha}, {u})"
        ));
    }
    let xf = x as f64;
    let k = 1.0 / (2.0 * alpha);
    Ok(RangeParameters {
        x_alpha: 0.5 * (xf.powf(alpha) - xf.powf(-1.0 - alpha)),
        y2: 2f64.powf(k) * (u as f64).powf(1.0 + k),
        y3: u as f64 * xf.sqrt(),
        approximate: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `u₁ ≤ x^{1/4}`, `x^{1/2}/u₁ ≤ u₂ ≤ min(x^α/u₁, x^{1/2}u₁)`.
    Admissible,
    /// `x^{1/4} < u₁ < x^{α/2}`, `u₁ < u₂ < min(x^α/u₁, x^{1/2}u₁)`.
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub x: u64,
    pub alpha: f64,
    pub region: Region,
}

impl RegionSpec {
    pub fn contains(&self, u1: u64, u2: u64) -> bool {
        let x = self.x as f64;
        let (a, b) = (u1 as f64, u2 as f64);
        let upper = (x.powf(self.alpha) / a).min(x.sqrt() * a);
        match self.region {
            Region::Admissible => {
                (u1 as u128).pow(4) <= self.x as u128
                    && (u1 as u128 * u2 as u128).pow(2) >= self.x as u128
                    && b <= upper
            }
            Region::Excluded => {
                a > x.powf(0.25) && a < x.powf(self.alpha / 2.0) && u2 > u1 && b < upper
            }
        }
    }
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `H(n) = Σ_{k≤n} 1/k`.
fn harmonic(n: u64) -> f64 {
    if n < 64 {
        return (1..=n).rev().map(|k| 1.0 / k as f64).sum();
    }
    let nf = n as f64;
    let inv2 = 1.0 / (nf * nf);
    nf.ln() + EULER_GAMMA + 0.5 / nf - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0))
}

/// `Σ_{k≤n, k odd} 1/k`.
fn odd_harmonic(n: u64) -> f64 {
    harmonic(n) - 0.5 * harmonic(n / 2)
}

/// Squarefree odd divisors of `u` with their Möbius signs.
fn signed_squarefree_divisors(u: u64) -> Vec<(u64, f64)> {
    let primes: Vec<u64> = factorize(u)
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&p| p != 2)
        .collect();
    let mut out = vec![(1u64, 1.0)];
    for p in primes {
        let extra: Vec<(u64, f64)> = out.iter().map(|&(d, s)| (d * p, -s)).collect();
        out.extend(extra);
    }
    out
}

/// `Σ 1/v` over odd `v ∈ [lo, hi]` coprime to odd `u`, by Möbius inversion.
fn odd_coprime_reciprocal_sum(u: u64, lo: u64, hi: u64) -> f64 {
    if lo > hi {
        return 0.0;
    }
    if hi - lo < 256 {
        return (lo..=hi)
            .filter(|&v| v % 2 == 1 && gcd(u, v) == 1)
            .map(|v| 1.0 / v as f64)
            .sum();
    }
    signed_squarefree_divisors(u)
        .into_iter()
        .map(|(d, s)| {
            let top = hi / d;
            let bottom = lo.div_ceil(d) - 1;
            s / d as f64 * (odd_harmonic(top) - odd_harmonic(bottom))
        })
        .sum()
}

/// `u₂` bounds of the admissible region for one `u₁`.
fn admissible_u2_bounds(x: u64, alpha: f64, u1: u64) -> (u64, u64) {
    let root = isqrt(x);
    let ceil_root = if root * root == x { root } else { root + 1 };
    let lo = ceil_root.div_ceil(u1);
    let cap = (x as f64).powf(alpha).floor() as u64;
    let hi = (cap / u1).min(isqrt(x.saturating_mul(u1 * u1)));
    (lo, hi)
}

/// Largest `x` the region sums accept.
pub const REGION_LIMIT: u64 = 10_000_000_000;

/// `8√x · Σ 1/(u₁u₂)` over coprime `(u₁, u₂)` in the admissible region with `u₁u₂` odd.
pub fn admissible_main_term(x: u64, alpha: f64) -> Result<f64> {
    if x < 2 || !(alpha > 0.0) {
        return range_err(format!("need x ≥ 2 and alpha > 0; got ({x}, {alpha})"));
    }
    Budget(REGION_LIMIT).check(x as u128)?;
    let u1_max = isqrt(isqrt(x));
    let sum: f64 = (1..=u1_max)
        .step_by(2)
        .map(|u1| {
            let (lo, hi) = admissible_u2_bounds(x, alpha, u1);
            odd_coprime_reciprocal_sum(u1, lo, hi) / u1 as f64
        })
        .sum();
    Ok(8.0 * (x as f64).sqrt() * sum)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DeficitReport {
    pub x: u64,
    pub alpha: f64,
    pub beta: f64,
    pub r: u32,
    /// `√x · Σ_{u₁} 1/u₁ · Σ_{U₂} Σ_{u₂ ∈ E(U₂)} 1/u₂`.
    pub deficit: f64,
    /// `(α − ½)² β (ln 1/β)^r √x (ln x)²`.
    pub reference: f64,
    pub ratio: f64,
    /// Exponent `C` with `deficit = (α − ½)² β (ln 1/β)^C √x (ln x)²`; absent when undefined.
    pub fitted_c: Option<f64>,
    pub u1_count: u64,
    pub dyadic_blocks: u32,
    pub exceptional_u2: u64,
}

/// Main-term mass removed by dropping `u₂ ∈ E(U₂)` across the excluded range.
///
/// `U₂` runs over powers of two; block `(U₂, 2U₂]` is clipped to
/// `(x^{1/4}, x^{α−1/4})` and `E(U₂)` is the exceptional set of `{1..2U₂}`.
pub fn excluded_deficit(x: u64, alpha: f64, beta: f64, r: u32) -> Result<DeficitReport> {
    if x < 2 || !(alpha >= 0.5) {
        return range_err(format!("need x ≥ 2 and alpha ≥ 1/2; got ({x}, {alpha})"));
    }
    Budget(REGION_LIMIT).check(x as u128)?;
    let xf = x as f64;
    let u1_lo = xf.powf(0.25).floor() as u64 + 1;
    let u1_hi = (xf.powf(alpha / 2.0).ceil() as u64).saturating_sub(1);
    let u1_sum = (u1_lo..=u1_hi).fold(0.0, |s, u| s + 1.0 / u as f64);
    let u1_count = u1_hi.saturating_sub(u1_lo) + u64::from(u1_hi >= u1_lo);

    let u2_lo = xf.powf(0.25).floor() as u64 + 1;
    let u2_hi = (xf.powf(alpha - 0.25).ceil() as u64).saturating_sub(1);
    let mut u2_sum = 0.0;
    let mut blocks = 0;
    let mut exceptional_u2 = 0;
    if u1_count > 0 && u2_hi >= u2_lo {
        let top = 2 * u2_hi.next_power_of_two();
        let table = SpfTable::new(top)?;
        let mut big_u = (u2_lo / 2).max(1).next_power_of_two();
        if 2 * big_u < u2_lo {
            big_u *= 2;
        }
        while big_u < u2_hi {
            let lo = (big_u + 1).max(u2_lo);
            let hi = (2 * big_u).min(u2_hi);
            if lo <= hi {
                blocks += 1;
                let params = ExceptionalParams::new(2 * big_u, beta, r)?;
                let e = exceptional_set_with(&table, &params)?;
                for u2 in lo..=hi {
                    if e.contains(u2) {
                        exceptional_u2 += 1;
                        u2_sum += 1.0 / u2 as f64;
                    }
                }
            }
            big_u *= 2;
        }
    }
    let deficit = xf.sqrt() * u1_sum * u2_sum;
    let shape = (alpha - 0.5).powi(2) * beta * xf.sqrt() * xf.ln().powi(2);
    let log_inv_beta = (1.0 / beta).ln();
    let reference = shape * log_inv_beta.powi(r as i32);
    let fitted_c = (deficit > 0.0 && shape > 0.0 && log_inv_beta > 1.0)
        .then(|| (deficit / shape).ln() / log_inv_beta.ln());
    Ok(DeficitReport {
        x,
        alpha,
        beta,
        r,
        deficit,
        reference,
        ratio: if reference > 0.0 {
            deficit / reference
        } else {
            0.0
        },
        fitted_c,
        u1_count,
        dyadic_blocks: blocks,
        exceptional_u2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ProbeRow {
    pub h: u64,
    pub u1: u64,
    /// `gcd(h, u₁²)`.
    pub gcd: u64,
    pub abs: f64,
    pub terms: u64,
    /// `|inner| / terms`.
    pub cancellation: f64,
    /// `|inner| / |U₂|`.
    pub normalized: f64,
    /// `gcd(h, u₁²) / |U₂|`.
    pub shape: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    /// `Σ_h Σ_{u₁} |inner|`.
    pub total_abs: f64,
    pub exceptional_in_u2: u64,
    pub u2_len: u64,
    /// Largest cancellation ratio among rows where `u₁² ∤ h`.
    pub max_generic_cancellation: f64,
}

/// Scatter of the restricted inner sums `Σ_{u₂ ∼ U₂, u₂ ∉ E(U₂)} e(h ū₂²/u₁²)`.
///
/// `E(U₂)` is the exceptional set of `{1..max U₂}`.
pub fn restricted_bound_probe(
    u1_range: (u64, u64),
    u2_range: (u64, u64),
    beta: f64,
    r: u32,
    h_max: u64,
) -> Result<ProbeReport> {
    if u2_range.0 == 0 || u2_range.0 > u2_range.1 {
        return range_err("U2 must be a nonempty range of positive integers");
    }
    let params = ExceptionalParams::new(u2_range.1.max(2), beta, r)?;
    let table = SpfTable::new(params.n)?;
    let e = exceptional_set_with(&table, &params)?;
    let inner = restricted_inner_sums(h_max, u1_range, u2_range, Some(&e), false)?;
    let u2_len = u2_range.1 - u2_range.0 + 1;
    let rows: Vec<ProbeRow> = inner
        .iter()
        .map(|s| {
            let g = gcd(s.h, s.u1 * s.u1);
            ProbeRow {
                h: s.h,
                u1: s.u1,
                gcd: g,
                abs: s.value.abs(),
                terms: s.value.term_count,
                cancellation: s.value.cancellation_ratio,
                normalized: s.value.abs() / u2_len as f64,
                shape: g as f64 / u2_len as f64,
            }
        })
        .collect();
    let total_abs = rows.iter().map(|r| r.abs).sum();
    let max_generic_cancellation = rows
        .iter()
        .filter(|r| r.gcd != r.u1 * r.u1)
        .map(|r| r.cancellation)
        .fold(0.0, f64::max);
    Ok(ProbeReport {
        rows,
        total_abs,
        exceptional_in_u2: (u2_range.0..=u2_range.1).filter(|&u| e.contains(u)).count() as u64,
        u2_len,
        max_generic_cancellation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_examples() {
        let c = coefficient_table(0.5).unwrap();
        assert!((c.b_alpha - 1.0 / pi2()).abs() < 1e-15);
        assert!((c.b_alpha - 0.101_321_18).abs() < 1e-7);
        assert!((c.fouvry_lower - 1.0 / pi2()).abs() < 1e-15);
        assert!((c.fouvry_lower_restated - 1.0 / pi2()).abs() < 1e-15);
        assert!((b_branch(1, 1.0) - 3.0 / pi2()).abs() < 1e-15);
        assert!((b_branch(2, 1.0) - 3.0 / pi2()).abs() < 1e-15);
        let at = 9.0 / pi2() + 1.0 / (8.0 * pi2());
        assert!((b_branch(2, 2.5) - at).abs() < 1e-12);
        assert!((b_branch(3, 2.5) - at).abs() < 1e-12);
        let one = coefficient_table(1.0).unwrap();
        assert!((one.fouvry_lower - 2.0 / pi2()).abs() < 1e-15);
        assert!((one.fouvry_lower_restated - 2.25 / pi2()).abs() < 1e-15);
        assert!(coefficient_table(0.0).is_err());
        for alpha in [0.5, 0.75, 1.0, 2.0] {
            let c = coefficient_table(alpha).unwrap();
            assert!((c.lower_bound_discrepancy() - (alpha - 0.5).powi(2) / pi2()).abs() < 1e-14);
        }
    }

    #[test]
    fn root_examples() {
        assert_eq!(
            sqrt_one_residues(1, RootMode::Scan, Budget::DEFAULT).unwrap(),
            vec![0]
        );
        assert_eq!(
            sqrt_one_residues(1, RootMode::Crt, Budget::DEFAULT).unwrap(),
            vec![0]
        );
        assert_eq!(
            sqrt_one_residues(3, RootMode::Scan, Budget::DEFAULT).unwrap(),
            vec![1, 8]
        );
        assert_eq!(
            sqrt_one_residues(12, RootMode::Crt, Budget::DEFAULT)
                .unwrap()
                .len(),
            8
        );
        assert_eq!(
            sqrt_one_residues(12, RootMode::Scan, Budget::DEFAULT)
                .unwrap()
                .len(),
            8
        );
        assert!(matches!(
            sqrt_one_residues(20_000, RootMode::Scan, Budget::DEFAULT),
            Err(Error::BudgetExceeded { .. })
        ));
        let big = sqrt_one_residues(3_000_000_019, RootMode::Crt, Budget::DEFAULT).unwrap();
        assert_eq!(big.len(), 2);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_pair(2, 3).unwrap(), 17);
        assert_eq!(phi_pair(3, 2).unwrap(), 19);
        assert_eq!(phi_pair(2, 5).unwrap(), 49);
        assert!(matches!(phi_pair(1, 5), Err(Error::Range(_))));
        assert_eq!(phi_pair(4, 6), Err(Error::NotCoprime { x: 4, m: 6 }));
    }

    #[test]
    fn range_parameter_example() {
        let p = range_parameters(100, 0.5, 1).unwrap();
        assert!((p.x_alpha - 4.9995).abs() < 1e-12);
        assert!((p.y2 - 2.0).abs() < 1e-12);
        assert!((p.y3 - 10.0).abs() < 1e-12);
        let q = range_parameters(100, 0.5, 2).unwrap();
        assert!((q.y3 - 2.0 * p.y3).abs() < 1e-12);
        assert!(p.approximate);
        assert!(range_parameters(1, 0.5, 1).is_err());
    }

    #[test]
    fn harmonic_tail_accuracy() {
        let direct: f64 = (1..=1000u64).rev().map(|k| 1.0 / k as f64).sum();
        assert!((harmonic(1000) - direct).abs() < 1e-13);
        let odd: f64 = (0..500u64).rev().map(|j| 1.0 / (2 * j + 1) as f64).sum();
        assert!((odd_harmonic(1000) - odd).abs() < 1e-13);
    }

    fn admissible_direct(x: u64, alpha: f64) -> f64 {
        let spec = RegionSpec {
            x,
            alpha,
            region: Region::Admissible,
        };
        let mut s = 0.0;
        let u1_max = isqrt(isqrt(x));
        for u1 in 1..=u1_max {
            for u2 in 1..=(x as f64).powf(alpha) as u64 + 1 {
                if (u1 * u2) % 2 == 1 && gcd(u1, u2) == 1 && spec.contains(u1, u2) {
                    s += 1.0 / (u1 * u2) as f64;
                }
            }
        }
        8.0 * (x as f64).sqrt() * s
    }

    #[test]
    fn admissible_term_matches_enumeration() {
        assert_eq!(admissible_main_term(16, 0.5).unwrap(), 0.0);
        for (x, alpha) in [
            (10_000u64, 0.5),
            (10_000, 0.6),
            (50_000, 0.75),
            (123_457, 0.55),
        ] {
            let fast = admissible_main_term(x, alpha).unwrap();
            let slow = admissible_direct(x, alpha);
            assert!(
                (fast - slow).abs() < 1e-9 * slow.max(1.0),
                "{x} {alpha}: {fast} vs {slow}"
            );
        }
        assert!(matches!(
            admissible_main_term(REGION_LIMIT + 1, 0.5),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn deficit_vanishes_at_half() {
        let d = excluded_deficit(1_000_000, 0.5, 0.05, 3).unwrap();
        assert_eq!(d.deficit, 0.0);
        assert_eq!(d.u1_count, 0);
    }

    #[test]
    fn probe_degenerate_cases() {
        let all_out = restricted_bound_probe((5, 7), (60, 120), 0.05, 30, 3).unwrap();
        assert!(all_out.rows.iter().all(|r| r.abs == 0.0 && r.terms == 0));
        let p = restricted_bound_probe((3, 3), (10, 40), 0.05, 1, 9).unwrap();
        let row = p.rows.iter().find(|r| r.h == 9).unwrap();
        assert_eq!(row.gcd, 9);
        assert!((row.cancellation - 1.0).abs() < 1e-12);
    }
}
