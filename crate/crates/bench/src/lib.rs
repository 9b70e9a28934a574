//! Fixtures shared by the criterion benchmarks.

use glsm_core::scalar::int;
use glsm_core::{GlsmModel, InsertionSet};

pub fn quintic() -> GlsmModel {
    GlsmModel::new(vec![vec![1, 1, 1, 1, 1, -5]], vec![0, 0, 0, 0, 0, 1], 1, vec![int(1)], None).unwrap()
}

/// Two-parameter model with a hypersurface-type coordinate.
pub fn rank_two() -> GlsmModel {
    GlsmModel::new(vec![vec![1, 1, 0, 1, -3], vec![0, 0, 1, 1, -2]], vec![0, 0, 0, 0, 1], 1, vec![int(2), int(1)], None).unwrap()
}

pub fn insertions(specs: &[&str], m: &GlsmModel) -> InsertionSet {
    InsertionSet::parse(&specs.iter().map(|s| s.to_string()).collect::<Vec<_>>(), m).unwrap()
}
