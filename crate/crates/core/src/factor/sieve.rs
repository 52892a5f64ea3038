//! Smallest-prime-factor table and the queries answered from it.

use crate::error::{range_err, Budget, Error, Result};
use std::io::{Read, Write};
use std::path::Path;

/// Largest `N` a table may be built for.
pub const SIEVE_LIMIT: u64 = 100_000_000;

const MAGIC: &[u8; 4] = b"SPF1";

/// An integer with its prime factors, largest first, repeated by multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct FactorProfile {
    pub n: u64,
    pub primes_desc: Vec<u64>,
}

impl FactorProfile {
    /// Ω(n).
    pub fn factor_count(&self) -> usize {
        self.primes_desc.len()
    }

    pub fn largest(&self) -> Option<u64> {
        self.primes_desc.first().copied()
    }
}

/// Smallest prime factor of every `1 ≤ n ≤ N`.
///
/// Entry `n` holds the smallest prime dividing `n`; entry 1 holds 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
}

impl SpfTable {
    pub fn new(limit: u64) -> Result<Self> {
        Budget(SIEVE_LIMIT).check(limit as u128)?;
        let len = limit as usize + 1;
        let mut spf = vec![0u32; len];
        if len > 1 {
            spf[1] = 1;
        }
        for p in 2..len {
            if spf[p] != 0 {
                continue;
            }
            spf[p] = p as u32;
            let mut m = p * p;
            while m < len {
                if spf[m] == 0 {
                    spf[m] = p as u32;
                }
                m += p;
            }
        }
        Ok(SpfTable { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn check(&self, n: u64) {
        assert!(
            (1..=self.limit).contains(&n),
            "{n} outside sieve range [1, {}]",
            self.limit
        );
    }

    pub fn smallest_factor(&self, n: u64) -> u64 {
        self.check(n);
        self.spf[n as usize] as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    /// Prime factors in ascending order, with multiplicity.
    pub fn factors_ascending(&self, mut n: u64) -> Vec<u64> {
        self.check(n);
        let mut out = Vec::new();
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            out.push(p);
            n /= p;
        }
        out
    }

    pub fn profile(&self, n: u64) -> FactorProfile {
        let mut primes_desc = self.factors_ascending(n);
        primes_desc.reverse();
        FactorProfile { n, primes_desc }
    }

    /// Largest prime factor; 1 for `n = 1`.
    pub fn largest_factor(&self, mut n: u64) -> u64 {
        self.check(n);
        let mut largest = 1;
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            largest = p;
            n /= p;
        }
        largest
    }

    /// Number of primes in `[lo, hi]` (clamped to the table).
    pub fn prime_count_in(&self, lo: u64, hi: u64) -> u64 {
        (lo.max(2)..=hi.min(self.limit))
            .filter(|&n| self.spf[n as usize] as u64 == n)
            .count() as u64
    }

    /// Serialize as `"SPF1"`, `N` (u64 LE), then `N` little-endian u32 entries for `n = 1..=N`.
    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.limit.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.limit as usize * 4);
        for &v in &self.spf[1..] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_cache<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let limit = u64::from_le_bytes(word);
        Budget(SIEVE_LIMIT).check(limit as u128)?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() as u64 != limit * 4 {
            return Err(Error::Cache(format!(
                "expected {} entry bytes, found {}",
                limit * 4,
                bytes.len()
            )));
        }
        let mut spf = Vec::with_capacity(limit as usize + 1);
        spf.push(0);
        spf.extend(
            bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])),
        );
        let table = SpfTable { limit, spf };
        table.spot_check()?;
        Ok(table)
    }

    fn spot_check(&self) -> Result<()> {
        let stride = (self.limit / 997).max(1);
        for n in (1..=self.limit).step_by(stride as usize) {
            let p = self.spf[n as usize] as u64;
            let ok = if n == 1 { p == 1 } else { p >= 2 && n % p == 0 };
            if !ok {
                return Err(Error::Cache(format!("entry {n} holds {p}")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_cache(std::io::BufWriter::new(f))
    }

    /// Load a cached table for exactly `limit`, or sieve and store one.
    pub fn load_or_build(path: &Path, limit: u64) -> Result<Self> {
        if let Ok(f) = std::fs::File::open(path) {
            let table = Self::read_cache(std::io::BufReader::new(f))?;
            if table.limit == limit {
                return Ok(table);
            }
        }
        let table = Self::new(limit)?;
        table.save(path)?;
        Ok(table)
    }
}

/// Factor profiles for `1..=N`, served from a frozen smallest-prime-factor table.
pub fn sieve_profiles(limit: u64) -> Result<SpfTable> {
    SpfTable::new(limit)
}

/// ψ(N, y): how many `1 ≤ n ≤ N` have no prime factor above `y` (`n = 1` included).
pub fn psi_smooth_count(limit: u64, y: f64) -> Result<u64> {
    if limit == 0 {
        return range_err("N must be positive");
    }
    Ok(psi_smooth_count_with(&SpfTable::new(limit)?, limit, y))
}

pub fn psi_smooth_count_with(table: &SpfTable, limit: u64, y: f64) -> u64 {
    (1..=limit)
        .filter(|&n| table.largest_factor(n) as f64 <= y)
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let t = sieve_profiles(100).unwrap();
        assert_eq!(t.profile(12).primes_desc, vec![3, 2, 2]);
        assert_eq!(t.profile(97).primes_desc, vec![97]);
        assert!(t.profile(1).primes_desc.is_empty());
        assert_eq!(t.largest_factor(1), 1);
        assert_eq!(t.prime_count_in(1, 100), 25);
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(
            SpfTable::new(SIEVE_LIMIT + 1),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_smooth_count(100, 5.0).unwrap(), 34);
        assert_eq!(psi_smooth_count(1000, 1000.0).unwrap(), 1000);
        assert_eq!(psi_smooth_count(10, 1.0).unwrap(), 1);
        assert_eq!(psi_smooth_count(10, 0.5).unwrap(), 0);
    }

    #[test]
    fn cache_roundtrip_and_layout() {
        let t = SpfTable::new(50).unwrap();
        let mut buf = Vec::new();
        t.write_cache(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SPF1");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 50);
        assert_eq!(buf.len(), 12 + 50 * 4);
        // entry for n = 6 sits at offset 12 + 5·4
        assert_eq!(u32::from_le_bytes(buf[32..36].try_into().unwrap()), 2);
        assert_eq!(SpfTable::read_cache(&buf[..]).unwrap(), t);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            SpfTable::read_cache(&bad[..]),
            Err(Error::Cache(_))
        ));
        assert!(matches!(
            SpfTable::read_cache(&buf[..buf.len() - 4]),
            Err(Error::Cache(_))
        ));
    }

    #[test]
    fn cache_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spf.bin");
        let built = SpfTable::load_or_build(&path, 1000).unwrap();
        assert!(path.exists());
        let loaded = SpfTable::load_or_build(&path, 1000).unwrap();
        assert_eq!(built, loaded);
        let other = SpfTable::load_or_build(&path, 2000).unwrap();
        assert_eq!(other.limit(), 2000);
    }
}
