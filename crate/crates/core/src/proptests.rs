//! Property tests spanning several modules.

use crate::amplify::{choose_ell, ell_admissible};
use crate::arith::{gcd, is_square, mod_inverse};
use crate::expsum::{incomplete_kloosterman_sq, KloostermanQuery};
use crate::fouvry::{phi_pair, sqrt_one_residues, RootMode};
use crate::pell::{count_all_powers, count_solutions, fundamental_solution};
use crate::Budget;
use num_bigint::BigUint;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pell_solution_is_a_solution(d in 2u64..5000) {
        prop_assume!(!is_square(d));
        let s = fundamental_solution(d).unwrap();
        prop_assert!(s.satisfies_equation());
        // powers stay on the curve
        let (t, u) = s.power(3);
        prop_assert_eq!(&t * &t, &u * &u * BigUint::from(d) + 1u32);
    }

    #[test]
    fn fundamental_is_minimal(d in 2u64..300) {
        prop_assume!(!is_square(d));
        let s = fundamental_solution(d).unwrap();
        let u_min = s.u.to_u64_digits().first().copied().unwrap_or(0);
        // no smaller positive u solves the equation
        for u in 1..u_min.min(20_000) {
            let v = d as u128 * u as u128 * u as u128 + 1;
            let r = (v as f64).sqrt() as u128;
            prop_assert!(!(r.saturating_sub(1)..=r + 1).any(|t| t * t == v));
        }
    }

    #[test]
    fn counts_are_monotone(x in 10u64..3000, a in 0.05f64..1.2, b in 0.05f64..1.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let s_lo = count_solutions(x, lo).unwrap();
        let s_hi = count_solutions(x, hi).unwrap();
        prop_assert!(s_lo.count_fundamental <= s_hi.count_fundamental);
        prop_assert!(s_lo.count_fundamental <= s_lo.count_all_powers);
        prop_assert!(count_solutions(x + 50, hi).unwrap().count_fundamental >= s_hi.count_fundamental);
    }

    #[test]
    fn non_positive_shift_counts_nothing(x in 2u64..2000, beta in -1.0f64..0.0) {
        prop_assert_eq!(count_all_powers(x, beta).unwrap(), 0);
    }

    #[test]
    fn phi_lies_in_roots(u1 in 2u64..200, u2 in 2u64..200) {
        prop_assume!(gcd(u1, u2) == 1);
        let phi = phi_pair(u1, u2).unwrap();
        let roots = sqrt_one_residues(u1 * u2, RootMode::Crt, Budget::DEFAULT).unwrap();
        prop_assert!(roots.binary_search(&phi).is_ok());
        prop_assert_eq!(phi % (u1 * u1), 1);
        prop_assert_eq!((phi + 1) % (u2 * u2), 0);
    }

    #[test]
    fn root_count_formula(u in 1u64..5000) {
        // |R(u)| = 2^{ω_odd(u)} · (1, 2 or 4 according to v₂(u) = 0, 1, ≥ 2)
        let roots = sqrt_one_residues(u, RootMode::Crt, Budget::DEFAULT).unwrap();
        let odd_primes = crate::arith::factorize(u).iter().filter(|(p, _)| *p != 2).count() as u32;
        let two = match u.trailing_zeros() { 0 => 1, 1 => 2, _ => 4 };
        prop_assert_eq!(roots.len() as u64, (1u64 << odd_primes) * two);
    }

    #[test]
    fn ell_choice_admissible_below_one_sixth(beta in 0.005f64..0.1666) {
        let ell = choose_ell(beta).unwrap();
        prop_assert!(ell_admissible(beta, ell));
    }

    #[test]
    fn kloosterman_phase_covariance(q in prop::sample::select(vec![101u64, 103, 1009, 10007]), a in 1i64..100, c in 1u64..100) {
        // replacing a by a·c² is the substitution x ↦ c̄x on a full residue system
        prop_assume!((a as u64) % q != 0 && c % q != 0);
        let direct = incomplete_kloosterman_sq(&KloostermanQuery::new(q, a, q)).unwrap();
        let scaled = (a as u64 * c % q * c % q) as i64;
        let moved = incomplete_kloosterman_sq(&KloostermanQuery::new(q, scaled, q)).unwrap();
        prop_assert!(direct.distance(&moved) < 1e-8);
        // conjugation: −a gives the complex conjugate
        let neg = incomplete_kloosterman_sq(&KloostermanQuery::new(q, -a, q)).unwrap();
        prop_assert!((neg.real_part - direct.real_part).abs() < 1e-8);
        prop_assert!((neg.imag_part + direct.imag_part).abs() < 1e-8);
    }

    #[test]
    fn inverse_round_trip(x in -1_000_000i64..1_000_000, m in 2u64..1_000_000) {
        match mod_inverse(x, m) {
            Ok(inv) => prop_assert_eq!((x.rem_euclid(m as i64) as u128 * inv as u128) % m as u128, 1),
            Err(_) => prop_assert!(gcd(x.unsigned_abs(), m) != 1),
        }
    }
}
