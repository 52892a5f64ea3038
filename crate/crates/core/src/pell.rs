//! Fundamental solutions of `t² − D·u² = 1` and the counting functions built on them.
//!
//! Solutions come from the continued fraction of `√D`: the period ends at the
//! first partial quotient equal to `2⌊√D⌋`, and the convergent just before the
//! end of the first (even period) or second (odd period) cycle is minimal.
//!
//! Counting never needs the full solution once it is known to exceed the
//! bound `D^{1/2+α}`, so the counting path runs the same recurrence on `u128`
//! with an early exit.

use crate::arith::{is_square, isqrt};
use crate::error::{range_err, Error, Result};
use crate::fouvry;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

/// Relative width of the band in which log-space comparisons are re-checked exactly.
pub const LOG_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PellSolution {
    pub d: u64,
    pub t: BigUint,
    pub u: BigUint,
    /// `ln(t + u√D)`.
    pub eps_log: f64,
}

impl PellSolution {
    fn new(d: u64, t: BigUint, u: BigUint) -> Self {
        let eps_log = log_unit(&t);
        PellSolution { d, t, u, eps_log }
    }

    /// `t² − D·u² == 1`, in exact arithmetic.
    pub fn satisfies_equation(&self) -> bool {
        &self.t * &self.t == &self.u * &self.u * BigUint::from(self.d) + BigUint::one()
    }

    /// The square of the unit, `(2t² − 1) + 2tu·√D`.
    pub fn squared(&self) -> (BigUint, BigUint) {
        let two = BigUint::from(2u32);
        (
            &two * &self.t * &self.t - BigUint::one(),
            two * &self.t * &self.u,
        )
    }

    /// `(t + u√D)^n` as a pair `(T, U)`.
    pub fn power(&self, n: u64) -> (BigUint, BigUint) {
        unit_power(self.d, &self.t, &self.u, n)
    }
}

fn unit_mul(d: u64, a: &(BigUint, BigUint), b: &(BigUint, BigUint)) -> (BigUint, BigUint) {
    (
        &a.0 * &b.0 + &a.1 * &b.1 * BigUint::from(d),
        &a.0 * &b.1 + &a.1 * &b.0,
    )
}

fn unit_power(d: u64, t: &BigUint, u: &BigUint, mut n: u64) -> (BigUint, BigUint) {
    let mut acc = (BigUint::one(), BigUint::zero());
    let mut base = (t.clone(), u.clone());
    while n > 0 {
        if n & 1 == 1 {
            acc = unit_mul(d, &acc, &base);
        }
        n >>= 1;
        if n > 0 {
            base = unit_mul(d, &base, &base);
        }
    }
    acc
}

/// Natural log of a big integer, accurate to a few ulps.
pub(crate) fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        return (n.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln(t + √(t² − 1))`, the log of the unit with rational part `t`.
fn log_unit(t: &BigUint) -> f64 {
    let bits = t.bits();
    if bits <= 64 {
        return (t.to_u64().unwrap() as f64).acosh();
    }
    let lt = ln_biguint(t);
    if bits > 512 {
        return lt + std::f64::consts::LN_2;
    }
    let inv_sq = (-2.0 * lt).exp();
    lt + (1.0 + (1.0 - inv_sq).sqrt()).ln()
}

/// Partial quotients of `√D`, with `m`, `d` state of the standard recurrence.
struct SqrtExpansion {
    radicand: u64,
    a0: u64,
    m: u64,
    den: u64,
    a: u64,
}

impl SqrtExpansion {
    fn new(radicand: u64) -> Self {
        let a0 = isqrt(radicand);
        SqrtExpansion {
            radicand,
            a0,
            m: 0,
            den: 1,
            a: a0,
        }
    }

    /// Advance to the next partial quotient.
    fn step(&mut self) -> u64 {
        self.m = self.den * self.a - self.m;
        self.den =
            ((self.radicand as u128 - self.m as u128 * self.m as u128) / self.den as u128) as u64;
        self.a = (self.a0 + self.m) / self.den;
        self.a
    }
}

/// Period length of the continued fraction of `√D`.
pub fn period_length(d: u64) -> Result<u64> {
    validate_discriminant(d)?;
    let mut cf = SqrtExpansion::new(d);
    let mut len = 0;
    loop {
        len += 1;
        if cf.step() == 2 * cf.a0 {
            return Ok(len);
        }
    }
}

fn validate_discriminant(d: u64) -> Result<()> {
    if d < 2 {
        return range_err(format!("D = {d} must be at least 2"));
    }
    if is_square(d) {
        return Err(Error::SquareInput(d));
    }
    Ok(())
}

/// The minimal solution `(t, u)` of `t² − D·u² = 1`.
///
/// Uses `p_n² − D·q_n² = (−1)^{n+1} Q_{n+1}`, where `Q` is the denominator of
/// the complete quotient: the first odd `n` with `Q_{n+1} = 1` is minimal.
pub fn fundamental_solution(d: u64) -> Result<PellSolution> {
    validate_discriminant(d)?;
    let mut cf = SqrtExpansion::new(d);
    let (mut p_prev, mut p) = (BigUint::one(), BigUint::from(cf.a0));
    let (mut q_prev, mut q) = (BigUint::zero(), BigUint::one());
    let mut n = 0u64;
    loop {
        let a = cf.step();
        if cf.den == 1 && n % 2 == 1 {
            return Ok(PellSolution::new(d, p, q));
        }
        let a = BigUint::from(a);
        let p_next = &a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        n += 1;
    }
}

enum Bounded {
    Found(u128, u128),
    Exceeds,
    Overflow,
}

fn fundamental_u128(d: u64, t_cap: f64) -> Bounded {
    let mut cf = SqrtExpansion::new(d);
    let (mut p_prev, mut p) = (1u128, cf.a0 as u128);
    let (mut q_prev, mut q) = (0u128, 1u128);
    let mut n = 0u64;
    loop {
        let a = cf.step() as u128;
        if cf.den == 1 && n % 2 == 1 {
            return Bounded::Found(p, q);
        }
        let (Some(pn), Some(qn)) = (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        ) else {
            return Bounded::Overflow;
        };
        p_prev = p;
        p = pn;
        q_prev = q;
        q = qn;
        n += 1;
        if p as f64 > t_cap {
            return Bounded::Exceeds;
        }
    }
}

/// The fundamental solution if `ε_D ≤ e^{log_cap}` (up to the guard band), else `None`.
///
/// Convergent numerators increase, so the expansion stops as soon as one
/// passes the cap.
pub fn fundamental_solution_below(d: u64, log_cap: f64) -> Result<Option<PellSolution>> {
    validate_discriminant(d)?;
    let limit = log_cap + LOG_GUARD * log_cap.abs().max(1.0);
    let t_cap = limit.exp() + 1.0;
    let sol = match fundamental_u128(d, t_cap) {
        Bounded::Found(t, u) => PellSolution::new(d, t.into(), u.into()),
        Bounded::Exceeds => return Ok(None),
        Bounded::Overflow => fundamental_solution(d)?,
    };
    Ok((sol.eps_log <= limit).then_some(sol))
}

/// Express an `f64` exactly as `num/den` with `den ≤ 1000`, when possible.
fn small_rational(s: f64) -> Option<(u64, u64)> {
    if !(s.is_finite() && s > 0.0) {
        return None;
    }
    (1..=1000u64).find_map(|den| {
        let num = (s * den as f64).round();
        (num >= 1.0 && num / den as f64 == s).then_some((num as u64, den))
    })
}

/// Exact `ε^n ≤ D^{num/den}`, evaluated as `ε^{n·den} ≤ D^num`.
fn unit_power_at_most(sol: &PellSolution, n: u64, num: u64, den: u64) -> bool {
    let (t, u) = sol.power(n * den);
    let bound = num_traits::pow(BigUint::from(sol.d), num as usize);
    if bound < t {
        return false;
    }
    let slack = bound - t;
    &u * &u * BigUint::from(sol.d) <= &slack * &slack
}

/// Decide `ε_D^n ≤ D^{exponent}`, re-checking in exact arithmetic inside the guard band.
pub fn power_at_most(sol: &PellSolution, n: u64, exponent: f64) -> bool {
    let lhs = n as f64 * sol.eps_log;
    let rhs = exponent * (sol.d as f64).ln();
    if (lhs - rhs).abs() > LOG_GUARD * rhs.abs().max(1.0) {
        return lhs < rhs;
    }
    match small_rational(exponent) {
        Some((num, den)) => unit_power_at_most(sol, n, num, den),
        None => lhs <= rhs,
    }
}

/// Number of `n ≥ 1` with `ε_D^n ≤ D^{exponent}`.
pub fn power_count(sol: &PellSolution, exponent: f64) -> u64 {
    if exponent <= 0.0 {
        return 0;
    }
    let approx = (exponent * (sol.d as f64).ln() / sol.eps_log).floor() as u64;
    let mut n = approx.saturating_sub(1);
    while n > 0 && !power_at_most(sol, n, exponent) {
        n -= 1;
    }
    while power_at_most(sol, n + 1, exponent) {
        n += 1;
    }
    n
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCount {
    pub x: u64,
    pub alpha: f64,
    /// `S^f(x, α)`.
    pub count_fundamental: u64,
    /// `S(x, α)`, positive powers only.
    pub count_all_powers: u64,
    /// Predicted size `B(α)·√x·(ln x)²`.
    pub main_term: f64,
}

/// Partial counts over `D ∈ [lo, hi]` for the exponent `1/2 + alpha`; `alpha` may be ≤ 0.
fn count_range(lo: u64, hi: u64, alpha: f64) -> Result<(u64, u64)> {
    let exponent = 0.5 + alpha;
    let mut fundamental = 0;
    let mut all = 0;
    let mut root = isqrt(lo);
    for d in lo..=hi {
        while (root + 1) * (root + 1) <= d {
            root += 1;
        }
        if root * root == d {
            continue;
        }
        // ε_D > 2√D, so nothing can qualify below exponent 1/2
        if exponent <= 0.5 {
            continue;
        }
        let log_cap = exponent * (d as f64).ln();
        if let Some(sol) = fundamental_solution_below(d, log_cap)? {
            let k = power_count(&sol, exponent);
            if k > 0 {
                fundamental += 1;
                all += k;
            }
        }
    }
    Ok((fundamental, all))
}

const CHUNK: u64 = 4096;

fn count_parallel(x: u64, alpha: f64) -> Result<(u64, u64)> {
    let chunks: Vec<(u64, u64)> = (0..=(x - 2) / CHUNK)
        .map(|i| (2 + i * CHUNK, (2 + (i + 1) * CHUNK - 1).min(x)))
        .collect();
    let parts: Result<Vec<(u64, u64)>> = chunks
        .par_iter()
        .map(|&(lo, hi)| count_range(lo, hi, alpha))
        .collect();
    Ok(parts?
        .into_iter()
        .fold((0, 0), |acc, p| (acc.0 + p.0, acc.1 + p.1)))
}

/// `S^f(x, α)` and `S(x, α)` over nonsquare `2 ≤ D ≤ x`.
pub fn count_solutions(x: u64, alpha: f64) -> Result<SolutionCount> {
    if x < 2 {
        return range_err(format!("x = {x} must be at least 2"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return range_err(format!("alpha = {alpha} must be positive"));
    }
    let (count_fundamental, count_all_powers) = count_parallel(x, alpha)?;
    Ok(SolutionCount {
        x,
        alpha,
        count_fundamental,
        count_all_powers,
        main_term: fouvry::predicted_main_term(x as f64, alpha)?,
    })
}

/// `S(x, β)` for any real `β`; zero when `D^{1/2+β} < ε_D` is forced.
pub fn count_all_powers(x: u64, alpha: f64) -> Result<u64> {
    if x < 2 {
        return range_err(format!("x = {x} must be at least 2"));
    }
    Ok(count_parallel(x, alpha)?.1)
}

/// Which shifted argument to pair with `S^f` when splitting off the squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftVariant {
    /// `α/2 − 1/2`.
    Stated,
    /// `α/2 − 1/4`, from `ε² ≤ D^{1/2+α} ⇔ ε ≤ D^{1/2 + (α/2 − 1/4)}`.
    Substituted,
}

impl ShiftVariant {
    pub fn shifted(self, alpha: f64) -> f64 {
        match self {
            ShiftVariant::Stated => alpha / 2.0 - 0.5,
            ShiftVariant::Substituted => alpha / 2.0 - 0.25,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShiftVariant::Stated => "alpha/2-1/2",
            ShiftVariant::Substituted => "alpha/2-1/4",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftResidual {
    pub variant: ShiftVariant,
    pub shifted_alpha: f64,
    pub shifted_count: u64,
    /// `S(x, α) − S^f(x, α) − S(x, shifted)`.
    pub residual: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerIdentityReport {
    pub x: u64,
    pub alpha: f64,
    pub count_all_powers: u64,
    pub count_fundamental: u64,
    pub residuals: [ShiftResidual; 2],
}

/// Residuals of `S(x,α) = S^f(x,α) + S(x, shifted α)` for both readings of the shift.
pub fn check_power_identity(x: u64, alpha: f64) -> Result<PowerIdentityReport> {
    if !(0.0..=1.5).contains(&alpha) {
        return range_err(format!("alpha = {alpha} outside [0, 3/2]"));
    }
    if x < 2 {
        return range_err(format!("x = {x} must be at least 2"));
    }
    let (count_fundamental, count_all) = count_parallel(x, alpha)?;
    let residual = |variant: ShiftVariant| -> Result<ShiftResidual> {
        let shifted_alpha = variant.shifted(alpha);
        let shifted_count = count_all_powers(x, shifted_alpha)?;
        Ok(ShiftResidual {
            variant,
            shifted_alpha,
            shifted_count,
            residual: count_all as i64 - count_fundamental as i64 - shifted_count as i64,
        })
    };
    Ok(PowerIdentityReport {
        x,
        alpha,
        count_all_powers: count_all,
        count_fundamental,
        residuals: [
            residual(ShiftVariant::Stated)?,
            residual(ShiftVariant::Substituted)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tu(sol: &PellSolution) -> (u64, u64) {
        (sol.t.to_u64().unwrap(), sol.u.to_u64().unwrap())
    }

    #[test]
    fn small_examples() {
        assert_eq!(tu(&fundamental_solution(2).unwrap()), (3, 2));
        assert_eq!(tu(&fundamental_solution(13).unwrap()), (649, 180));
        assert_eq!(tu(&fundamental_solution(8).unwrap()), (3, 1));
        assert_eq!(fundamental_solution(4), Err(Error::SquareInput(4)));
        assert!(matches!(fundamental_solution(1), Err(Error::Range(_))));
        assert!(matches!(fundamental_solution(0), Err(Error::Range(_))));
    }

    #[test]
    fn large_solution_d61() {
        let sol = fundamental_solution(61).unwrap();
        assert_eq!(sol.t, BigUint::from(1_766_319_049u64));
        assert_eq!(sol.u, BigUint::from(226_153_980u64));
        assert!(sol.satisfies_equation());
    }

    #[test]
    fn wide_solution_has_consistent_log() {
        // D = 1621 has a solution far beyond 64 bits
        let sol = fundamental_solution(1621).unwrap();
        assert!(sol.t.bits() > 128);
        assert!(sol.satisfies_equation());
        let (t2, _) = sol.squared();
        let rel = (log_unit(&t2) - 2.0 * sol.eps_log).abs() / sol.eps_log;
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn eps_log_matches_direct_evaluation() {
        for d in [2u64, 3, 5, 7, 13, 19, 46, 94] {
            let sol = fundamental_solution(d).unwrap();
            let (t, u) = tu(&sol);
            let direct = (t as f64 + u as f64 * (d as f64).sqrt()).ln();
            assert!((sol.eps_log - direct).abs() <= 1e-12 * direct, "D = {d}");
        }
    }

    #[test]
    fn bounded_path_agrees_with_full() {
        for d in 2..3000u64 {
            if is_square(d) {
                continue;
            }
            let full = fundamental_solution(d).unwrap();
            let cap = 1.5 * (d as f64).ln();
            let bounded = fundamental_solution_below(d, cap).unwrap();
            if full.eps_log < cap * (1.0 - 1e-6) {
                assert_eq!(bounded.as_ref(), Some(&full), "D = {d}");
            } else if full.eps_log > cap * (1.0 + 1e-6) {
                assert_eq!(bounded, None, "D = {d}");
            }
        }
    }

    #[test]
    fn exact_power_comparison() {
        // ε_2 = 3 + 2√2 ≈ 5.83; ε² ≈ 33.97 < 2^{5.1} ≈ 34.3 but > 2^5 = 32
        let sol = fundamental_solution(2).unwrap();
        assert!(power_at_most(&sol, 1, 3.0));
        assert!(!power_at_most(&sol, 2, 5.0));
        assert!(unit_power_at_most(&sol, 2, 51, 10));
        assert!(!unit_power_at_most(&sol, 2, 5, 1));
        assert_eq!(power_count(&sol, 5.2), 2);
        assert_eq!(small_rational(1.0), Some((1, 1)));
        assert_eq!(small_rational(0.6 + 0.5), Some((11, 10)));
    }

    #[test]
    fn count_tiny_range() {
        let c = count_solutions(10, 0.5).unwrap();
        assert_eq!(c.count_fundamental, 1);
        assert_eq!(c.count_all_powers, 1);
        assert!(matches!(count_solutions(1, 0.5), Err(Error::Range(_))));
        assert!(matches!(count_solutions(10, 0.0), Err(Error::Range(_))));
    }

    #[test]
    fn period_lengths() {
        assert_eq!(period_length(2).unwrap(), 1);
        assert_eq!(period_length(13).unwrap(), 5);
        assert_eq!(period_length(7).unwrap(), 4);
    }

    #[test]
    fn power_identity_domain() {
        assert!(check_power_identity(10, 1.5).is_ok());
        assert!(matches!(
            check_power_identity(10, 1.6),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            check_power_identity(10, -0.1),
            Err(Error::Range(_))
        ));
        let rep = check_power_identity(1000, 0.4).unwrap();
        assert_eq!(rep.count_all_powers, rep.count_fundamental);
        assert!(rep.residuals.iter().all(|r| r.residual == 0));
    }
}
