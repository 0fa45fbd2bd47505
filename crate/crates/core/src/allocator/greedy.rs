//! Greedy ratio heuristic for the allocation problem.
//!
//! Each round picks the device `d` and the set `P` of still-unassigned,
//! mappable requests minimising `(f_d + sum_{p in P} c_{p,d}) / |P|`, assigns
//! `P` to `d` and zeroes `f_d`. For a fixed `d` the best `P` of every size is
//! a prefix of its requests sorted by ascending `c`, so only prefixes are
//! scanned. Per-device sorted lists are built once and filtered as requests
//! get served.
//!
//! Ties on the ratio prefer the larger `P`, then the lower device index.

use super::instance::{AllocError, Assignment, FapInstance};

const REL_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Choice {
    ratio: f64,
    size: usize,
    device: usize,
}

impl Choice {
    fn beats(&self, other: &Choice) -> bool {
        let scale = self.ratio.abs().max(other.ratio.abs());
        let diff = self.ratio - other.ratio;
        if diff.abs() > REL_TIE * scale {
            return diff < 0.0;
        }
        if self.size != other.size {
            return self.size > other.size;
        }
        self.device < other.device
    }
}

pub fn fap_greedy(instance: &FapInstance) -> Result<Assignment, AllocError> {
    instance.validate()?;
    let nr = instance.n_requests();
    let nd = instance.n_devices();

    // Requests per device in ascending c order; ties by request index.
    let sorted: Vec<Vec<usize>> = (0..nd)
        .map(|d| {
            let mut rs: Vec<usize> = (0..nr).filter(|&r| instance.mappable[r][d]).collect();
            rs.sort_by(|&a, &b| {
                instance.comm_cost[a][d]
                    .total_cmp(&instance.comm_cost[b][d])
                    .then(a.cmp(&b))
            });
            rs
        })
        .collect();

    let mut facility = instance.impl_cost.clone();
    let mut assigned: Vec<Option<usize>> = vec![None; nr];
    let mut remaining = nr;

    while remaining > 0 {
        let mut best: Option<Choice> = None;
        for d in 0..nd {
            let mut sum = facility[d];
            let mut size = 0;
            for &r in sorted[d].iter().filter(|&&r| assigned[r].is_none()) {
                sum += instance.comm_cost[r][d];
                size += 1;
                let candidate = Choice {
                    ratio: sum / size as f64,
                    size,
                    device: d,
                };
                if best.as_ref().is_none_or(|b| candidate.beats(b)) {
                    best = Some(candidate);
                }
            }
        }
        // validate() guarantees a mappable device for every open request
        let Choice { size, device, .. } = best.expect("some request is still mappable");
        let chosen: Vec<usize> = sorted[device]
            .iter()
            .copied()
            .filter(|&r| assigned[r].is_none())
            .take(size)
            .collect();
        for r in chosen {
            assigned[r] = Some(device);
        }
        remaining -= size;
        facility[device] = 0.0;
    }

    let mapping = assigned.into_iter().map(|d| d.unwrap()).collect();
    Ok(Assignment::from_mapping(instance, mapping))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_request_single_device() {
        let inst = FapInstance::dense(vec![10.0], vec![vec![0.0]]);
        let a = fap_greedy(&inst).unwrap();
        assert_eq!(a.assigned, vec![0]);
        assert_eq!(a.total_cost, 10.0);
        a.check_feasible(&inst).unwrap();
    }

    #[test]
    fn picks_cheapest_ratio_block_first() {
        // d1 with all three: (10 + 3) / 3 < d2's best prefix (12 + 0 + 0 + 5) / 3
        let inst = FapInstance::dense(
            vec![10.0, 12.0],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 5.0]],
        );
        let a = fap_greedy(&inst).unwrap();
        assert_eq!(a.assigned, vec![0, 0, 0]);
        assert_eq!(a.open, vec![true, false]);
        assert!((a.total_cost - 13.0).abs() < 1e-12);
    }

    #[test]
    fn mappability_pins_request() {
        let mut inst = FapInstance::dense(vec![1.0, 100.0], vec![vec![0.0, 50.0]]);
        inst.mappable[0][0] = false;
        let a = fap_greedy(&inst).unwrap();
        assert_eq!(a.assigned, vec![1]);
        a.check_feasible(&inst).unwrap();
    }

    #[test]
    fn infeasible_request_is_rejected() {
        let mut inst = FapInstance::dense(vec![1.0], vec![vec![0.0]]);
        inst.mappable[0][0] = false;
        assert_eq!(fap_greedy(&inst), Err(AllocError::InfeasibleRequest(0)));
    }

    #[test]
    fn opened_device_becomes_free() {
        // After d0 opens for r0, serving r1 there costs only c = 2, which
        // beats opening d1 at 3.
        let inst = FapInstance::dense(vec![1.0, 3.0], vec![vec![0.0, 9.0], vec![2.0, 0.0]]);
        let a = fap_greedy(&inst).unwrap();
        assert_eq!(a.assigned, vec![0, 0]);
        assert_eq!(a.total_cost, 3.0);
    }

    #[test]
    fn equal_ratio_prefers_larger_block_then_lower_index() {
        let inst = FapInstance::dense(vec![2.0, 2.0], vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
        let a = fap_greedy(&inst).unwrap();
        assert_eq!(a.assigned, vec![0, 0]);
    }
}
