//! Exact solver by enumeration of open device sets.
//!
//! For a fixed open set every request independently goes to its cheapest
//! mappable open device, so the optimum is the best over all 2^|D| - 1 sets.

use super::instance::{AllocError, Assignment, FapInstance};

pub const MAX_EXACT_DEVICES: usize = 20;

pub fn fap_exact(instance: &FapInstance) -> Result<Assignment, AllocError> {
    instance.validate()?;
    let nd = instance.n_devices();
    if nd > MAX_EXACT_DEVICES {
        return Err(AllocError::TooLarge {
            max: MAX_EXACT_DEVICES,
            got: nd,
        });
    }
    let nr = instance.n_requests();
    if nr == 0 {
        return Ok(Assignment::from_mapping(instance, vec![]));
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut mapping = vec![0usize; nr];
    'sets: for mask in 1u32..(1u32 << nd) {
        let mut cost: f64 = (0..nd)
            .filter(|d| mask & (1 << d) != 0)
            .map(|d| instance.impl_cost[d])
            .sum();
        if best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            continue;
        }
        for (r, slot) in mapping.iter_mut().enumerate() {
            let pick = (0..nd)
                .filter(|&d| mask & (1 << d) != 0 && instance.mappable[r][d])
                .min_by(|&a, &b| instance.comm_cost[r][a].total_cmp(&instance.comm_cost[r][b]));
            match pick {
                Some(d) => {
                    *slot = d;
                    cost += instance.comm_cost[r][d];
                }
                None => continue 'sets,
            }
        }
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, mapping.clone()));
        }
    }
    let (_, mapping) = best.ok_or(AllocError::InfeasibleRequest(instance.requests[0]))?;
    // Recomputed from the mapping so unused members of the set stay closed.
    Ok(Assignment::from_mapping(instance, mapping))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_instance_optimum_is_13() {
        let inst = FapInstance::dense(
            vec![10.0, 12.0],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 5.0]],
        );
        let a = fap_exact(&inst).unwrap();
        assert!((a.total_cost - 13.0).abs() < 1e-12);
        a.check_feasible(&inst).unwrap();
    }

    #[test]
    fn single_mappable_device() {
        let mut inst = FapInstance::dense(
            vec![4.0, 0.5, 0.5],
            vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]],
        );
        for row in &mut inst.mappable {
            row[1] = false;
            row[2] = false;
        }
        let a = fap_exact(&inst).unwrap();
        assert_eq!(a.assigned, vec![0, 0]);
        assert_eq!(a.total_cost, 7.0);
    }

    #[test]
    fn too_many_devices() {
        let inst = FapInstance::dense(vec![1.0; 21], vec![vec![0.0; 21]]);
        assert_eq!(
            fap_exact(&inst),
            Err(AllocError::TooLarge { max: 20, got: 21 })
        );
    }

    #[test]
    fn brute_force_over_mappings_agrees() {
        // Enumerate all |D|^|R| mappings as an independent check.
        let inst = FapInstance::dense(
            vec![3.0, 1.0, 4.0],
            vec![
                vec![0.0, 2.0, 1.0],
                vec![1.5, 0.0, 2.5],
                vec![2.0, 2.0, 0.0],
                vec![0.5, 3.0, 0.2],
            ],
        );
        let nd = inst.n_devices();
        let nr = inst.n_requests();
        let mut best = f64::INFINITY;
        for code in 0..nd.pow(nr as u32) {
            let mut c = code;
            let mapping: Vec<usize> = (0..nr)
                .map(|_| {
                    let d = c % nd;
                    c /= nd;
                    d
                })
                .collect();
            best = best.min(inst.cost_of(&mapping));
        }
        let a = fap_exact(&inst).unwrap();
        assert!((a.total_cost - best).abs() < 1e-12);
    }
}
