use serde::{Deserialize, Serialize};

use crate::model::{DeviceId, RegistrationId};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AllocError {
    #[error("request {0} has no mappable device")]
    InfeasibleRequest(RegistrationId),
    #[error("exact solver supports at most {max} devices, got {got}")]
    TooLarge { max: usize, got: usize },
    #[error("no master candidates")]
    EmptyCandidates,
    #[error("malformed instance: {0}")]
    Malformed(String),
}

/// One function allocation problem: the requests for a single virtual
/// function and the devices that can implement it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FapInstance {
    pub requests: Vec<RegistrationId>,
    pub devices: Vec<DeviceId>,
    /// f_{v,d}, indexed like `devices`.
    pub impl_cost: Vec<f64>,
    /// c_{r,d}, `comm_cost[r][d]`.
    pub comm_cost: Vec<Vec<f64>>,
    /// m_{r,d}, `mappable[r][d]`.
    pub mappable: Vec<Vec<bool>>,
    /// Device the request originates from, if known. Used by the ALL baseline.
    #[serde(default)]
    pub origins: Vec<Option<DeviceId>>,
}

impl FapInstance {
    /// Instance with every request mappable everywhere and no origins.
    pub fn dense(impl_cost: Vec<f64>, comm_cost: Vec<Vec<f64>>) -> Self {
        let n_req = comm_cost.len();
        let n_dev = impl_cost.len();
        Self {
            requests: (0..n_req as RegistrationId).collect(),
            devices: (0..n_dev as DeviceId).collect(),
            impl_cost,
            mappable: vec![vec![true; n_dev]; n_req],
            comm_cost,
            origins: vec![None; n_req],
        }
    }

    pub fn n_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn origin_index(&self, r: usize) -> Option<usize> {
        let origin = self.origins.get(r).copied().flatten()?;
        self.devices.iter().position(|&d| d == origin)
    }

    /// Checks shapes, cost signs and that every request has a mappable device.
    pub fn validate(&self) -> Result<(), AllocError> {
        let (nr, nd) = (self.n_requests(), self.n_devices());
        if self.impl_cost.len() != nd {
            return Err(AllocError::Malformed("impl_cost length".into()));
        }
        if self.comm_cost.len() != nr || self.comm_cost.iter().any(|row| row.len() != nd) {
            return Err(AllocError::Malformed("comm_cost shape".into()));
        }
        if self.mappable.len() != nr || self.mappable.iter().any(|row| row.len() != nd) {
            return Err(AllocError::Malformed("mappable shape".into()));
        }
        if !self.origins.is_empty() && self.origins.len() != nr {
            return Err(AllocError::Malformed("origins length".into()));
        }
        let bad = |x: &f64| !(x.is_finite() && *x >= 0.0);
        if self.impl_cost.iter().any(bad) || self.comm_cost.iter().flatten().any(bad) {
            return Err(AllocError::Malformed(
                "costs must be finite and >= 0".into(),
            ));
        }
        for (r, row) in self.mappable.iter().enumerate() {
            if !row.iter().any(|&m| m) {
                return Err(AllocError::InfeasibleRequest(self.requests[r]));
            }
        }
        Ok(())
    }

    /// Objective value of a request-to-device mapping, opening exactly the
    /// devices that serve at least one request.
    pub fn cost_of(&self, assigned: &[usize]) -> f64 {
        let mut open = vec![false; self.n_devices()];
        let mut cost = 0.0;
        for (r, &d) in assigned.iter().enumerate() {
            open[d] = true;
            cost += self.comm_cost[r][d];
        }
        cost + open
            .iter()
            .zip(&self.impl_cost)
            .filter(|(o, _)| **o)
            .map(|(_, f)| f)
            .sum::<f64>()
    }

    /// Returns a copy with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.impl_cost.iter_mut().for_each(|f| *f *= factor);
        out.comm_cost
            .iter_mut()
            .flatten()
            .for_each(|c| *c *= factor);
        out
    }
}

/// Solver output. `assigned[r]` is the index into `FapInstance::devices`
/// serving request `r`, i.e. x_{r,d} = 1 iff `assigned[r] == d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub assigned: Vec<usize>,
    /// y_d.
    pub open: Vec<bool>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeasibilityViolation {
    #[error("request {0} is not assigned to exactly one device")]
    NotExactlyOne(usize),
    #[error("request {0} assigned to unmappable device {1}")]
    NotMappable(usize, usize),
    #[error("request {0} assigned to closed device {1}")]
    ClosedDevice(usize, usize),
    #[error("device {0} is open but serves nobody")]
    IdleOpen(usize),
    #[error("reported cost {reported} differs from objective {actual}")]
    CostMismatch { reported: f64, actual: f64 },
}

impl Assignment {
    pub fn from_mapping(instance: &FapInstance, assigned: Vec<usize>) -> Self {
        let mut open = vec![false; instance.n_devices()];
        for &d in &assigned {
            open[d] = true;
        }
        let total_cost = instance.cost_of(&assigned);
        Self {
            assigned,
            open,
            total_cost,
        }
    }

    pub fn x(&self, r: usize, d: usize) -> bool {
        self.assigned.get(r) == Some(&d)
    }

    pub fn device_of(&self, instance: &FapInstance, r: usize) -> DeviceId {
        instance.devices[self.assigned[r]]
    }

    /// Checks constraints 1-4 of the allocation problem and that the reported
    /// objective matches a recomputation from x and y.
    pub fn check_feasible(&self, instance: &FapInstance) -> Result<(), FeasibilityViolation> {
        let nd = instance.n_devices();
        if self.assigned.len() != instance.n_requests() || self.open.len() != nd {
            return Err(FeasibilityViolation::NotExactlyOne(self.assigned.len()));
        }
        for r in 0..instance.n_requests() {
            // constraint 1 over the full x matrix
            let count = (0..nd).filter(|&d| self.x(r, d)).count();
            if count != 1 {
                return Err(FeasibilityViolation::NotExactlyOne(r));
            }
            let d = self.assigned[r];
            if !instance.mappable[r][d] {
                return Err(FeasibilityViolation::NotMappable(r, d));
            }
            if !self.open[d] {
                return Err(FeasibilityViolation::ClosedDevice(r, d));
            }
        }
        for d in 0..nd {
            if self.open[d] && !self.assigned.contains(&d) {
                return Err(FeasibilityViolation::IdleOpen(d));
            }
        }
        let objective: f64 = (0..nd)
            .filter(|&d| self.open[d])
            .map(|d| instance.impl_cost[d])
            .sum::<f64>()
            + (0..instance.n_requests())
                .map(|r| instance.comm_cost[r][self.assigned[r]])
                .sum::<f64>();
        let tol = 1e-9 * objective.abs().max(1.0);
        if (objective - self.total_cost).abs() > tol {
            return Err(FeasibilityViolation::CostMismatch {
                reported: self.total_cost,
                actual: objective,
            });
        }
        Ok(())
    }
}
