#![allow(dead_code)]

use glsm_core::scalar::int;
use glsm_core::GlsmModel;

pub fn p1() -> GlsmModel {
    GlsmModel::new(vec![vec![1, 1]], vec![0, 0], 1, vec![int(1)], None).unwrap()
}

pub fn quintic() -> GlsmModel {
    GlsmModel::new(vec![vec![1, 1, 1, 1, 1, -5]], vec![0, 0, 0, 0, 0, 1], 1, vec![int(1)], None).unwrap()
}

pub fn cubic() -> GlsmModel {
    GlsmModel::new(vec![vec![1, -3]], vec![1, 0], 3, vec![int(-1)], None).unwrap()
}

/// A rank-two model: a cubic-type section over a two-step toric variety.
pub fn f1() -> GlsmModel {
    GlsmModel::new(vec![vec![1, 1, 0, 1, -3], vec![0, 0, 1, 1, -2]], vec![0, 0, 0, 0, 1], 1, vec![int(2), int(1)], None).unwrap()
}

pub fn corpus() -> Vec<(&'static str, GlsmModel)> {
    vec![("P1", p1()), ("quintic", quintic()), ("cubic", cubic()), ("rank-2", f1())]
}

pub fn p4() -> GlsmModel {
    GlsmModel::new(vec![vec![1; 5]], vec![0; 5], 1, vec![int(1)], None).unwrap()
}
