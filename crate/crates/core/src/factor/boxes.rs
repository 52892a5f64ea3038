//! Partition of `{1..N} ∖ E` into boxes by the grid cells of the `r` largest primes.
//!
//! The grid is `M(k) = N·(1 − 1/ln N)^k`; a prime `p` lies in cell `k` when
//! `M(k+1) < p ≤ M(k)`. Two integers share a box when their `r` largest primes
//! occupy the same cells.

use super::exceptional::{exceptional_set_with, ExceptionalParams, ExceptionalSet};
use super::sieve::SpfTable;
use crate::error::{range_err, Budget, Result};
use crate::expsum::{
    incomplete_kloosterman_sq, multilinear_sq_sum, CompensatedSum, KloostermanQuery, Membership,
    SumValue,
};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n: u64,
    pub ratio: f64,
}

impl Grid {
    pub fn new(n: u64) -> Self {
        Grid {
            n,
            ratio: 1.0 - 1.0 / (n as f64).ln(),
        }
    }

    pub fn point(&self, k: u32) -> f64 {
        self.n as f64 * self.ratio.powi(k as i32)
    }

    /// The cell `k` with `M(k+1) < p ≤ M(k)`.
    pub fn cell(&self, p: u64) -> u32 {
        let p = p as f64;
        let mut k = ((self.n as f64 / p).ln() / -self.ratio.ln())
            .floor()
            .max(0.0) as u32;
        while k > 0 && p > self.point(k) {
            k -= 1;
        }
        while p <= self.point(k + 1) {
            k += 1;
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumberBox {
    pub cells: Vec<u32>,
    /// Upper endpoints `M_i`; prime `i` lies in `((1 − 1/ln N)·M_i, M_i]`.
    pub m: Vec<f64>,
    /// `2N / (M₁⋯M_r)`.
    pub cofactor_bound: f64,
    /// Members in increasing order.
    pub members: Vec<u64>,
}

impl NumberBox {
    pub fn member_count(&self) -> u64 {
        self.members.len() as u64
    }
}

#[derive(Debug, Clone)]
pub struct BoxDecomposition {
    pub params: ExceptionalParams,
    pub grid: Grid,
    pub exceptional: ExceptionalSet,
    pub boxes: Vec<NumberBox>,
}

impl BoxDecomposition {
    pub fn member_total(&self) -> u64 {
        self.boxes.iter().map(|b| b.member_count()).sum()
    }

    /// `boxes / (ln N)^r`.
    pub fn count_constant(&self) -> f64 {
        self.boxes.len() as f64 / self.params.log_n().powi(self.params.r as i32)
    }

    /// `M_i > (1 + 2/ln N)·M_{i+1}` and `M_i > N^β` for every box.
    pub fn endpoints_separated(&self) -> bool {
        let step = 1.0 + 2.0 / self.params.log_n();
        let floor = self.params.threshold();
        self.boxes
            .iter()
            .all(|b| b.m.iter().all(|&m| m > floor) && b.m.windows(2).all(|w| w[0] > step * w[1]))
    }
}

/// Assign each non-exceptional `n ≤ N` to its box. Requires the spacing condition.
pub fn box_partition(table: &SpfTable, params: &ExceptionalParams) -> Result<BoxDecomposition> {
    if !params.spacing {
        return range_err("box partition requires the spacing condition");
    }
    let exceptional = exceptional_set_with(table, params)?;
    let grid = Grid::new(params.n);
    let r = params.r as usize;
    let mut cells: BTreeMap<Vec<u32>, Vec<u64>> = BTreeMap::new();
    for n in 1..=params.n {
        if exceptional.contains(n) {
            continue;
        }
        let prof = table.profile(n);
        let key: Vec<u32> = prof.primes_desc[..r]
            .iter()
            .map(|&p| grid.cell(p))
            .collect();
        cells.entry(key).or_default().push(n);
    }
    let boxes = cells
        .into_iter()
        .map(|(cells, members)| {
            let m: Vec<f64> = cells.iter().map(|&k| grid.point(k)).collect();
            let cofactor_bound = 2.0 * params.n as f64 / m.iter().product::<f64>();
            NumberBox {
                cells,
                m,
                cofactor_bound,
                members,
            }
        })
        .collect();
    Ok(BoxDecomposition {
        params: *params,
        grid,
        exceptional,
        boxes,
    })
}

/// A product of prime intervals with a fixed cofactor, one term of the decomposed sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub intervals: Vec<(u64, u64)>,
    pub cofactor: u64,
    pub size: u64,
}

fn is_product_of_prime_intervals(table: &SpfTable, tuples: &[Vec<u64>]) -> Option<Vec<(u64, u64)>> {
    let r = tuples[0].len();
    let mut intervals = Vec::with_capacity(r);
    let mut expected = 1u128;
    for i in 0..r {
        let mut coord: Vec<u64> = tuples.iter().map(|t| t[i]).collect();
        coord.sort_unstable();
        coord.dedup();
        let (lo, hi) = (coord[0], *coord.last().unwrap());
        if table.prime_count_in(lo, hi) != coord.len() as u64 {
            return None;
        }
        expected *= coord.len() as u128;
        intervals.push((lo, hi));
    }
    (expected == tuples.len() as u128).then_some(intervals)
}

/// Split distinct prime tuples into products of prime intervals, fixing trailing coordinates as needed.
fn split_rectangular(
    table: &SpfTable,
    tuples: Vec<Vec<u64>>,
    free: usize,
    out: &mut Vec<(Vec<(u64, u64)>, u64)>,
) {
    if let Some(iv) = is_product_of_prime_intervals(table, &tuples) {
        out.push((iv, tuples.len() as u64));
        return;
    }
    if free == 0 {
        for t in tuples {
            out.push((t.iter().map(|&p| (p, p)).collect(), 1));
        }
        return;
    }
    let c = free - 1;
    let mut groups: BTreeMap<u64, Vec<Vec<u64>>> = BTreeMap::new();
    for t in tuples {
        groups.entry(t[c]).or_default().push(t);
    }
    for (_, g) in groups {
        split_rectangular(table, g, c, out);
    }
}

/// The blocks of one box: grouped by cofactor, each group cut into prime-interval products.
pub fn box_blocks(table: &SpfTable, r: usize, bx: &NumberBox) -> Vec<Block> {
    let mut by_cofactor: BTreeMap<u64, Vec<Vec<u64>>> = BTreeMap::new();
    for &n in &bx.members {
        let p = table.profile(n).primes_desc;
        let lead = p[..r].to_vec();
        let cofactor = p[r..].iter().product::<u64>();
        by_cofactor.entry(cofactor).or_default().push(lead);
    }
    let mut blocks = Vec::new();
    for (cofactor, tuples) in by_cofactor {
        let mut parts = Vec::new();
        split_rectangular(table, tuples, r, &mut parts);
        blocks.extend(parts.into_iter().map(|(intervals, size)| Block {
            intervals,
            cofactor,
            size,
        }));
    }
    blocks
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PartitionIdentity {
    pub direct: SumValue,
    pub decomposed: SumValue,
    pub residual: f64,
    pub boxes: usize,
    pub blocks: usize,
    /// Tuples covered by the blocks; equals `N − |E|`.
    pub covered: u64,
    pub exceptional_size: u64,
}

/// Compare `Σ_{x≤N, x∉E, (x,q)=1} e_q(a·x̄²)` with the sum of the box multilinear sums.
pub fn partition_sum_identity(
    table: &SpfTable,
    params: &ExceptionalParams,
    q: u64,
    a: i64,
) -> Result<PartitionIdentity> {
    let decomposition = box_partition(table, params)?;
    let direct = incomplete_kloosterman_sq(
        &KloostermanQuery::new(q, a, params.n).excluding(&decomposition.exceptional),
    )?;
    let r = params.r as usize;
    let mut re = CompensatedSum::default();
    let mut im = CompensatedSum::default();
    let mut terms = 0;
    let mut blocks = 0;
    let mut covered = 0;
    for bx in &decomposition.boxes {
        for block in box_blocks(table, r, bx) {
            blocks += 1;
            covered += block.size;
            if crate::arith::gcd(block.cofactor, q) != 1 {
                continue;
            }
            let s = multilinear_sq_sum(
                &block.intervals,
                q,
                a,
                true,
                Some(block.cofactor),
                Budget::DEFAULT,
            )?;
            re.add(s.real_part);
            im.add(s.imag_part);
            terms += s.term_count;
        }
    }
    let decomposed = SumValue::new(re.value(), im.value(), terms);
    Ok(PartitionIdentity {
        residual: direct.distance(&decomposed),
        direct,
        decomposed,
        boxes: decomposition.boxes.len(),
        blocks,
        covered,
        exceptional_size: decomposition.exceptional.size(),
    })
}
