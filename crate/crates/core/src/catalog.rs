//! Measured energy costs per function and the derived per-interval energy
//! of serving a registration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{
    DeviceId, DeviceKind, FunctionCategory, FunctionType, NetworkKind, Registration, SamplingSpeed,
};

/// The catalog shipped with the crate.
pub const SHIPPED_CATALOG_JSON: &str = include_str!("../data/energy_catalog.json");

/// Device kinds whose full measurement set must be present in every catalog.
pub const REQUIRED_DEVICES: [DeviceKind; 2] = [DeviceKind::Phone, DeviceKind::Watch];
pub const REQUIRED_SENSORS: [FunctionType; 3] = [
    FunctionType::Accelerometer,
    FunctionType::Gyroscope,
    FunctionType::Magnetometer,
];
pub const REQUIRED_TRANSPORTS: [NetworkKind; 2] = [NetworkKind::Bluetooth, NetworkKind::WiFi];
pub const REQUIRED_PROCESSING: [FunctionType; 2] =
    [FunctionType::Compression, FunctionType::Encoding];

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read catalog: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed catalog: {0}")]
    Parse(String),
    #[error("catalog is missing {0}")]
    MissingEntry(String),
    #[error("no energy model for transport {0}")]
    UnknownTransport(NetworkKind),
    #[error("{kind} cannot execute {function}")]
    UnsupportedFunction {
        kind: DeviceKind,
        function: FunctionType,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensingEntry {
    pub device: DeviceKind,
    pub sensor: FunctionType,
    pub speed: SamplingSpeed,
    #[serde(rename = "mJ_per_s")]
    pub mj_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityEntry {
    pub device: DeviceKind,
    pub transport: NetworkKind,
    #[serde(rename = "per_byte_mJ")]
    pub per_byte_mj: f64,
    #[serde(rename = "high_idle_mJ")]
    pub high_idle_mj: f64,
    /// Absent for WiFi.
    #[serde(rename = "low_idle_mJ", default)]
    pub low_idle_mj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessingEntry {
    pub device: DeviceKind,
    pub function: FunctionType,
    #[serde(rename = "per_byte_mJ")]
    pub per_byte_mj: f64,
}

/// On-disk catalog layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    #[serde(default)]
    pub sensing: Vec<SensingEntry>,
    #[serde(default)]
    pub connectivity: Vec<ConnectivityEntry>,
    #[serde(default)]
    pub processing: Vec<ProcessingEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub per_byte_mj: f64,
    pub high_idle_mj: f64,
    pub low_idle_mj: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyCatalog {
    sensing: BTreeMap<(DeviceKind, FunctionType, SamplingSpeed), f64>,
    links: BTreeMap<(DeviceKind, NetworkKind), LinkRates>,
    processing: BTreeMap<(DeviceKind, FunctionType), f64>,
}

pub fn load_energy_catalog(path: impl AsRef<Path>) -> Result<EnergyCatalog, CatalogError> {
    let text = std::fs::read_to_string(path)?;
    EnergyCatalog::from_json_str(&text)
}

impl EnergyCatalog {
    /// The built-in catalog. Panics only if the embedded file is broken,
    /// which the test suite rules out.
    pub fn shipped() -> Self {
        Self::from_json_str(SHIPPED_CATALOG_JSON).expect("shipped catalog is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self, CatalogError> {
        let file: CatalogFile =
            serde_json::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: CatalogFile) -> Result<Self, CatalogError> {
        let mut catalog = EnergyCatalog::default();
        catalog.extend(file)?;
        catalog.check_required()?;
        Ok(catalog)
    }

    /// Adds (or replaces) entries. Used for scenario-local additions such as
    /// devices that are not in the measured set.
    pub fn extend(&mut self, file: CatalogFile) -> Result<(), CatalogError> {
        for e in file.sensing {
            check_rate(e.mj_per_s, || {
                format!("{} {} {:?}", e.device, e.sensor, e.speed)
            })?;
            if !e.sensor.is_sensing() {
                return Err(CatalogError::Parse(format!(
                    "{} listed as a sensor",
                    e.sensor
                )));
            }
            self.sensing
                .insert((e.device, e.sensor, e.speed), e.mj_per_s);
        }
        for e in file.connectivity {
            let label = || format!("{} {}", e.device, e.transport);
            check_rate(e.per_byte_mj, label)?;
            check_rate(e.high_idle_mj, label)?;
            if let Some(low) = e.low_idle_mj {
                check_rate(low, label)?;
            }
            if e.transport == NetworkKind::Cellular {
                return Err(CatalogError::UnknownTransport(e.transport));
            }
            self.links.insert(
                (e.device, e.transport),
                LinkRates {
                    per_byte_mj: e.per_byte_mj,
                    high_idle_mj: e.high_idle_mj,
                    low_idle_mj: e.low_idle_mj.unwrap_or(0.0),
                },
            );
        }
        for e in file.processing {
            check_rate(e.per_byte_mj, || format!("{} {}", e.device, e.function))?;
            if e.function.category() != FunctionCategory::Processing {
                return Err(CatalogError::Parse(format!(
                    "{} listed as processing",
                    e.function
                )));
            }
            self.processing
                .insert((e.device, e.function), e.per_byte_mj);
        }
        self.check_monotone()
    }

    fn check_required(&self) -> Result<(), CatalogError> {
        for device in REQUIRED_DEVICES {
            for sensor in REQUIRED_SENSORS {
                for speed in SamplingSpeed::ALL {
                    if !self.sensing.contains_key(&(device, sensor, speed)) {
                        return Err(CatalogError::MissingEntry(format!(
                            "sensing {device} {sensor} {speed:?}"
                        )));
                    }
                }
            }
            for transport in REQUIRED_TRANSPORTS {
                if !self.links.contains_key(&(device, transport)) {
                    return Err(CatalogError::MissingEntry(format!(
                        "connectivity {device} {transport}"
                    )));
                }
            }
            for function in REQUIRED_PROCESSING {
                if !self.processing.contains_key(&(device, function)) {
                    return Err(CatalogError::MissingEntry(format!(
                        "processing {device} {function}"
                    )));
                }
            }
        }
        Ok(())
    }

    // Rates must not decrease from NORMAL through GAME. FASTEST is exempt:
    // the measured phone magnetometer drops slightly at FASTEST.
    fn check_monotone(&self) -> Result<(), CatalogError> {
        for (&(device, sensor, speed), &rate) in &self.sensing {
            let next = match speed {
                SamplingSpeed::Normal => SamplingSpeed::Ui,
                SamplingSpeed::Ui => SamplingSpeed::Game,
                _ => continue,
            };
            if let Some(&faster) = self.sensing.get(&(device, sensor, next)) {
                if faster < rate {
                    return Err(CatalogError::Parse(format!(
                        "{device} {sensor}: rate drops from {speed:?} to {next:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sensing_rate(
        &self,
        kind: DeviceKind,
        sensor: FunctionType,
        speed: SamplingSpeed,
    ) -> Result<f64, CatalogError> {
        self.sensing
            .get(&(kind, sensor, speed))
            .copied()
            .ok_or(CatalogError::UnsupportedFunction {
                kind,
                function: sensor,
            })
    }

    pub fn link_rates(
        &self,
        kind: DeviceKind,
        transport: NetworkKind,
    ) -> Result<LinkRates, CatalogError> {
        if transport == NetworkKind::Cellular {
            return Err(CatalogError::UnknownTransport(transport));
        }
        self.links
            .get(&(kind, transport))
            .copied()
            .ok_or_else(|| CatalogError::MissingEntry(format!("connectivity {kind} {transport}")))
    }

    pub fn processing_rate(
        &self,
        kind: DeviceKind,
        function: FunctionType,
    ) -> Result<f64, CatalogError> {
        self.processing
            .get(&(kind, function))
            .copied()
            .ok_or(CatalogError::UnsupportedFunction { kind, function })
    }

    /// Energy of one transfer burst: per-byte cost plus the high and low
    /// power idle tails.
    pub fn transfer_energy(
        &self,
        kind: DeviceKind,
        transport: NetworkKind,
        n_bytes: u64,
    ) -> Result<f64, CatalogError> {
        let rates = self.link_rates(kind, transport)?;
        Ok(rates.per_byte_mj * n_bytes as f64 + rates.high_idle_mj + rates.low_idle_mj)
    }

    /// Cost of running `function` once per `interval_s` on a device of
    /// `kind`, independent of how many requests it serves.
    pub fn implementation_energy(
        &self,
        kind: DeviceKind,
        function: FunctionType,
        speed: SamplingSpeed,
        interval_s: f64,
    ) -> Result<f64, CatalogError> {
        match function.category() {
            FunctionCategory::Sensing => Ok(self.sensing_rate(kind, function, speed)? * interval_s),
            FunctionCategory::Connectivity => {
                let wifi = self.link_rates(kind, NetworkKind::WiFi)?;
                Ok(wifi.high_idle_mj + wifi.low_idle_mj)
            }
            FunctionCategory::Processing => {
                self.processing_rate(kind, function)?;
                Ok(0.0)
            }
        }
    }

    /// Per-report cost attributable to one request: the payload-dependent
    /// work plus the Bluetooth leg back to the origin when served remotely.
    /// Delivery to an app on the executing device is free.
    pub fn delivery_energy(
        &self,
        kind: DeviceKind,
        function: FunctionType,
        payload_bytes: u64,
        local: bool,
    ) -> Result<f64, CatalogError> {
        let work = match function.category() {
            FunctionCategory::Sensing => 0.0,
            FunctionCategory::Connectivity => {
                self.link_rates(kind, NetworkKind::WiFi)?.per_byte_mj * payload_bytes as f64
            }
            FunctionCategory::Processing => {
                self.processing_rate(kind, function)? * payload_bytes as f64
            }
        };
        let relay = if local {
            0.0
        } else {
            self.transfer_energy(kind, NetworkKind::Bluetooth, payload_bytes)?
        };
        Ok(work + relay)
    }

    /// Energy (mJ) spent by the executor per report interval of `registration`.
    pub fn function_energy_per_interval(
        &self,
        registration: &Registration,
        executor_kind: DeviceKind,
        executor_id: DeviceId,
    ) -> Result<f64, CatalogError> {
        let f = self.implementation_energy(
            executor_kind,
            registration.function_type,
            registration.speed(),
            registration.report_interval_s,
        )?;
        let c = self.delivery_energy(
            executor_kind,
            registration.function_type,
            registration.payload_bytes_per_report,
            executor_id == registration.origin_device,
        )?;
        Ok(f + c)
    }

    pub fn sensing_entries(
        &self,
    ) -> impl Iterator<Item = (&(DeviceKind, FunctionType, SamplingSpeed), &f64)> {
        self.sensing.iter()
    }
}

fn check_rate(value: f64, label: impl Fn() -> String) -> Result<(), CatalogError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(CatalogError::Parse(format!(
            "{}: bad rate {value}",
            label()
        )))
    }
}
