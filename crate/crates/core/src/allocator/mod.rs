//! The decision engine: master election, the greedy allocation heuristic,
//! an exact enumeration oracle and the MANUAL / ALL reference strategies.

mod baselines;
mod exact;
mod greedy;
mod instance;
mod master;

use std::collections::BTreeMap;

pub use baselines::{baseline_all, baseline_manual};
pub use exact::{fap_exact, MAX_EXACT_DEVICES};
pub use greedy::fap_greedy;
pub use instance::{AllocError, Assignment, FapInstance, FeasibilityViolation};
pub use master::{select_master, MasterCandidate, MasterRule};

use crate::model::FunctionType;

/// Per-function-type allocation: one greedy run per type.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub per_function: BTreeMap<FunctionType, Assignment>,
}

impl Allocation {
    pub fn total_cost(&self) -> f64 {
        self.per_function.values().map(|a| a.total_cost).sum()
    }
}

/// Solves each function type independently and collects the results.
pub fn allocate(instances: &BTreeMap<FunctionType, FapInstance>) -> Result<Allocation, AllocError> {
    allocate_with(instances, fap_greedy)
}

pub fn allocate_with<F>(
    instances: &BTreeMap<FunctionType, FapInstance>,
    solver: F,
) -> Result<Allocation, AllocError>
where
    F: Fn(&FapInstance) -> Result<Assignment, AllocError>,
{
    let per_function = instances
        .iter()
        .map(|(&f, inst)| solver(inst).map(|a| (f, a)))
        .collect::<Result<_, _>>()?;
    Ok(Allocation { per_function })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_type_matches_greedy() {
        let inst = FapInstance::dense(vec![2.0, 3.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let mut map = BTreeMap::new();
        map.insert(FunctionType::Accelerometer, inst.clone());
        let alloc = allocate(&map).unwrap();
        assert_eq!(
            alloc.per_function[&FunctionType::Accelerometer],
            fap_greedy(&inst).unwrap()
        );
    }

    #[test]
    fn types_are_solved_independently() {
        let a = FapInstance::dense(vec![2.0, 3.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let b = FapInstance::dense(vec![9.0, 1.0, 4.0], vec![vec![3.0, 2.0, 0.0]]);
        let mut map = BTreeMap::new();
        map.insert(FunctionType::Accelerometer, a.clone());
        map.insert(FunctionType::Gyroscope, b.clone());
        let alloc = allocate(&map).unwrap();
        let expected = fap_greedy(&a).unwrap().total_cost + fap_greedy(&b).unwrap().total_cost;
        assert!((alloc.total_cost() - expected).abs() < 1e-12);
    }
}
