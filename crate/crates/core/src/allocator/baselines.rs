//! Reference strategies without coordination: run-everywhere (ALL) and a
//! static user choice (MANUAL).

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::instance::{AllocError, Assignment, FapInstance};

fn cheapest_mappable(instance: &FapInstance, r: usize) -> usize {
    (0..instance.n_devices())
        .filter(|&d| instance.mappable[r][d])
        .min_by(|&a, &b| {
            instance.comm_cost[r][a]
                .total_cmp(&instance.comm_cost[r][b])
                .then(a.cmp(&b))
        })
        .expect("validated instance has a mappable device")
}

/// Every request runs on its own origin device when it can.
pub fn baseline_all(instance: &FapInstance) -> Result<Assignment, AllocError> {
    instance.validate()?;
    let mapping = (0..instance.n_requests())
        .map(|r| match instance.origin_index(r) {
            Some(d) if instance.mappable[r][d] => d,
            _ => cheapest_mappable(instance, r),
        })
        .collect();
    Ok(Assignment::from_mapping(instance, mapping))
}

/// A user-chosen device, modelled as a uniform pick among the devices that
/// can serve every request. Requests that device cannot serve go to a
/// uniformly random mappable device each.
pub fn baseline_manual(instance: &FapInstance, rng_seed: u64) -> Result<Assignment, AllocError> {
    instance.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let nd = instance.n_devices();
    let nr = instance.n_requests();
    let universal: Vec<usize> = (0..nd)
        .filter(|&d| (0..nr).all(|r| instance.mappable[r][d]))
        .collect();
    let all: Vec<usize> = (0..nd).collect();
    let pool = if universal.is_empty() {
        &all
    } else {
        &universal
    };
    let Some(&choice) = pool.choose(&mut rng) else {
        return Ok(Assignment::from_mapping(instance, vec![]));
    };
    let mapping = (0..nr)
        .map(|r| {
            if instance.mappable[r][choice] {
                choice
            } else {
                let options: Vec<usize> = (0..nd).filter(|&d| instance.mappable[r][d]).collect();
                *options.choose(&mut rng).expect("validated")
            }
        })
        .collect();
    Ok(Assignment::from_mapping(instance, mapping))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::fap_exact;

    fn with_origins(mut inst: FapInstance, origins: &[u64]) -> FapInstance {
        inst.origins = origins.iter().map(|&o| Some(o)).collect();
        inst
    }

    #[test]
    fn all_opens_each_origin() {
        let inst = with_origins(
            FapInstance::dense(
                vec![10.0; 3],
                vec![
                    vec![0.0, 5.0, 5.0],
                    vec![5.0, 0.0, 5.0],
                    vec![5.0, 5.0, 0.0],
                ],
            ),
            &[0, 1, 2],
        );
        let a = baseline_all(&inst).unwrap();
        assert_eq!(a.total_cost, 30.0);
        a.check_feasible(&inst).unwrap();
    }

    #[test]
    fn all_shares_one_opening_per_device() {
        let inst = with_origins(
            FapInstance::dense(vec![10.0, 10.0], vec![vec![0.0, 5.0], vec![0.0, 5.0]]),
            &[0, 0],
        );
        assert_eq!(baseline_all(&inst).unwrap().total_cost, 10.0);
    }

    #[test]
    fn all_falls_back_when_origin_cannot_serve() {
        let mut inst = with_origins(
            FapInstance::dense(vec![1.0, 2.0, 3.0], vec![vec![0.0, 4.0, 1.0]]),
            &[0],
        );
        inst.mappable[0][0] = false;
        let a = baseline_all(&inst).unwrap();
        assert_eq!(a.assigned, vec![2]);
        assert_eq!(a.total_cost, 4.0);
        assert!(fap_exact(&inst).unwrap().total_cost <= a.total_cost);
    }

    #[test]
    fn manual_puts_everything_on_one_device() {
        let inst = FapInstance::dense(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![vec![1.0; 5]; 4]);
        for seed in 0..20 {
            let a = baseline_manual(&inst, seed).unwrap();
            assert_eq!(a.open.iter().filter(|&&o| o).count(), 1);
            a.check_feasible(&inst).unwrap();
            assert_eq!(a, baseline_manual(&inst, seed).unwrap());
        }
    }

    #[test]
    fn manual_on_single_device_equals_exact() {
        let inst = FapInstance::dense(vec![3.0], vec![vec![1.0], vec![2.0]]);
        assert_eq!(
            baseline_manual(&inst, 7).unwrap(),
            fap_exact(&inst).unwrap()
        );
    }

    #[test]
    fn manual_handles_partial_mappability() {
        let mut inst = FapInstance::dense(vec![1.0, 1.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        inst.mappable[0][1] = false;
        inst.mappable[1][0] = false;
        for seed in 0..10 {
            let a = baseline_manual(&inst, seed).unwrap();
            assert_eq!(a.assigned, vec![0, 1]);
        }
    }
}
