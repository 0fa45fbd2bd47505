//! Merges registrations for the same function so it is executed once.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{FunctionType, Registration, RegistrationId, SamplingSpeed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedRequest {
    pub function_type: FunctionType,
    /// Fastest speed requested by any member.
    pub sampling_speed: Option<SamplingSpeed>,
    /// Shortest report interval requested by any member.
    pub report_interval_s: f64,
    /// Largest per-report payload among members.
    pub payload_bytes_per_report: u64,
    pub members: Vec<RegistrationId>,
}

impl AggregatedRequest {
    pub fn speed(&self) -> SamplingSpeed {
        self.sampling_speed.unwrap_or(SamplingSpeed::Normal)
    }
}

/// Groups registrations by function type, one group per type, in function
/// type order. Member order follows input order.
pub fn aggregate_requests(registrations: &[Registration]) -> Vec<AggregatedRequest> {
    let mut groups: BTreeMap<FunctionType, AggregatedRequest> = BTreeMap::new();
    for reg in registrations {
        groups
            .entry(reg.function_type)
            .and_modify(|g| {
                g.sampling_speed = g.sampling_speed.max(reg.sampling_speed);
                g.report_interval_s = g.report_interval_s.min(reg.report_interval_s);
                g.payload_bytes_per_report =
                    g.payload_bytes_per_report.max(reg.payload_bytes_per_report);
                g.members.push(reg.id);
            })
            .or_insert_with(|| AggregatedRequest {
                function_type: reg.function_type,
                sampling_speed: reg.sampling_speed,
                report_interval_s: reg.report_interval_s,
                payload_bytes_per_report: reg.payload_bytes_per_report,
                members: vec![reg.id],
            });
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{CatalogFile, EnergyCatalog, SHIPPED_CATALOG_JSON};
    use crate::model::DeviceKind;
    use proptest::prelude::*;

    fn sensing(
        id: RegistrationId,
        f: FunctionType,
        speed: SamplingSpeed,
        interval: f64,
    ) -> Registration {
        Registration {
            id,
            app_id: format!("app{id}"),
            function_type: f,
            origin_device: 1,
            sampling_speed: Some(speed),
            report_interval_s: interval,
            payload_bytes_per_report: 10 * id as u64,
            precision_spec: vec![],
            forced_mapping: vec![],
        }
    }

    #[test]
    fn same_function_merges_at_fastest_speed() {
        let regs = [
            sensing(1, FunctionType::Accelerometer, SamplingSpeed::Normal, 60.0),
            sensing(2, FunctionType::Accelerometer, SamplingSpeed::Ui, 30.0),
        ];
        let groups = aggregate_requests(&regs);
        assert_eq!(groups.len(), 1);
        let g = &groups[0];
        assert_eq!(g.sampling_speed, Some(SamplingSpeed::Ui));
        assert_eq!(g.report_interval_s, 30.0);
        assert_eq!(g.payload_bytes_per_report, 20);
        assert_eq!(g.members, vec![1, 2]);

        // Merged execution never costs more than executing each member.
        let c = EnergyCatalog::shipped();
        let merged = c
            .sensing_rate(DeviceKind::Phone, g.function_type, g.speed())
            .unwrap();
        let separate: f64 = regs
            .iter()
            .map(|r| {
                c.sensing_rate(DeviceKind::Phone, r.function_type, r.speed())
                    .unwrap()
            })
            .sum();
        assert!(merged <= separate);
    }

    #[test]
    fn singleton_is_unchanged() {
        let reg = sensing(4, FunctionType::Gyroscope, SamplingSpeed::Game, 10.0);
        let groups = aggregate_requests(std::slice::from_ref(&reg));
        assert_eq!(
            groups,
            vec![AggregatedRequest {
                function_type: FunctionType::Gyroscope,
                sampling_speed: Some(SamplingSpeed::Game),
                report_interval_s: 10.0,
                payload_bytes_per_report: 40,
                members: vec![4],
            }]
        );
    }

    #[test]
    fn distinct_functions_never_merge() {
        let groups = aggregate_requests(&[
            sensing(1, FunctionType::Accelerometer, SamplingSpeed::Normal, 60.0),
            sensing(2, FunctionType::Gyroscope, SamplingSpeed::Normal, 60.0),
        ]);
        assert_eq!(groups.len(), 2);
    }

    fn random_catalog() -> impl Strategy<Value = EnergyCatalog> {
        let base: CatalogFile = serde_json::from_str(SHIPPED_CATALOG_JSON).unwrap();
        let n = base.sensing.len() / 4;
        prop::collection::vec(prop::array::uniform4(0.0f64..200.0), n).prop_map(move |rates| {
            let mut file = base.clone();
            for (chunk, mut r) in file.sensing.chunks_mut(4).zip(rates) {
                // keep NORMAL..GAME sorted so the catalog stays valid
                r[..3].sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (entry, rate) in chunk.iter_mut().zip(r) {
                    entry.mj_per_s = rate;
                }
            }
            EnergyCatalog::from_file(file).unwrap()
        })
    }

    fn speed() -> impl Strategy<Value = SamplingSpeed> {
        prop::sample::select(SamplingSpeed::ALL.to_vec())
    }

    fn sensor() -> impl Strategy<Value = FunctionType> {
        prop::sample::select(vec![
            FunctionType::Accelerometer,
            FunctionType::Gyroscope,
            FunctionType::Magnetometer,
        ])
    }

    proptest! {
        #[test]
        fn aggregated_power_never_exceeds_separate_power(
            catalog in random_catalog(),
            specs in prop::collection::vec((sensor(), speed(), 1.0f64..600.0), 1..12),
            kind in prop::sample::select(vec![DeviceKind::Phone, DeviceKind::Watch]),
        ) {
            let regs: Vec<_> = specs
                .iter()
                .enumerate()
                .map(|(i, &(f, s, t))| sensing(i as u32 + 1, f, s, t))
                .collect();
            let separate: f64 = regs
                .iter()
                .map(|r| catalog.sensing_rate(kind, r.function_type, r.speed()).unwrap())
                .sum();
            let merged: f64 = aggregate_requests(&regs)
                .iter()
                .map(|g| catalog.sensing_rate(kind, g.function_type, g.speed()).unwrap())
                .sum();
            prop_assert!(merged <= separate + 1e-9);
            let covered: usize = aggregate_requests(&regs).iter().map(|g| g.members.len()).sum();
            prop_assert_eq!(covered, regs.len());
        }
    }
}
