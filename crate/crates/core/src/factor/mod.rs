//! Sieving, smooth-number counts, the exceptional set and the box partition.

mod boxes;
mod exceptional;
mod sieve;

pub use boxes::{
    box_blocks, box_partition, partition_sum_identity, Block, BoxDecomposition, Grid, NumberBox,
    PartitionIdentity,
};
pub use exceptional::{
    exceptional_set, exceptional_set_with, ExceptionalParams, ExceptionalSet, ExceptionalSummary,
};
pub use sieve::{
    psi_smooth_count, psi_smooth_count_with, sieve_profiles, FactorProfile, SpfTable, SIEVE_LIMIT,
};
