//! Random collocation and condition points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::problem::{ConditionKind, ProblemSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionPoint {
    pub x: f64,
    pub t: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionGroup {
    pub kind: ConditionKind,
    pub points: Vec<ConditionPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationSet {
    pub interior: Vec<(f64, f64)>,
    pub conditions: Vec<ConditionGroup>,
    pub seed: u64,
}

impl CollocationSet {
    pub fn group(&self, kind: ConditionKind) -> Option<&ConditionGroup> {
        self.conditions.iter().find(|g| g.kind == kind)
    }

    pub fn n_condition(&self) -> usize {
        self.conditions.iter().map(|g| g.points.len()).sum()
    }
}

/// Uniform interior points plus condition points along the time slice
/// (half of `n_condition`) and the two boundaries (a quarter each).
pub fn sample_collocation(
    problem: &ProblemSpec,
    n_interior: usize,
    n_condition: usize,
    seed: u64,
) -> Result<CollocationSet> {
    problem.validate()?;
    if n_interior == 0 || n_condition == 0 {
        return Err(Error::Config("collocation counts must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x0, x1) = problem.x_range;
    let (t0, t1) = problem.t_range;
    let interior = (0..n_interior)
        .map(|_| (rng.random_range(x0..=x1), rng.random_range(t0..=t1)))
        .collect();

    let n_bc = n_condition / 2;
    let n_time = n_condition - n_bc;
    let tc = problem.condition_time();
    let time_points = (0..n_time)
        .map(|_| {
            let x = rng.random_range(x0..=x1);
            ConditionPoint {
                x,
                t: tc,
                target: problem.time_condition(x),
            }
        })
        .collect();
    let boundary_points = (0..n_bc)
        .map(|i| {
            let right = i % 2 == 1;
            ConditionPoint {
                x: if right { x1 } else { x0 },
                t: rng.random_range(t0..=t1),
                target: problem.boundary_value(right),
            }
        })
        .collect();
    let mut conditions = vec![ConditionGroup {
        kind: problem.time_condition_kind(),
        points: time_points,
    }];
    if n_bc > 0 {
        conditions.push(ConditionGroup {
            kind: ConditionKind::Boundary,
            points: boundary_points,
        });
    }
    Ok(CollocationSet {
        interior,
        conditions,
        seed,
    })
}
