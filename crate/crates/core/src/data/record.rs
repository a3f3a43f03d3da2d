use super::{invalid, DataError};

/// One telemetry sample. Positive current discharges the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCycleRecord {
    pub time_s: f64,
    pub voltage_v: f64,
    pub current_a: f64,
    pub temperature_c: f64,
    /// Fraction in `[0, 1]`; `None` when the source had no label.
    pub soc: Option<f64>,
}

/// An ordered run of records from one drive cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub name: String,
    pub records: Vec<DriveCycleRecord>,
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, records: Vec<DriveCycleRecord>) -> Self {
        Self {
            name: name.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.soc.is_some())
    }

    pub fn soc_labels(&self) -> Result<Vec<f64>, DataError> {
        self.records
            .iter()
            .map(|r| r.soc.ok_or_else(|| DataError::MissingSoc(self.name.clone())))
            .collect()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time_s).collect()
    }

    pub fn currents(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.current_a).collect()
    }
}

/// Cell ratings. The default is the Panasonic 18650PF (NCA) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatterySpec {
    pub rated_capacity_ah: f64,
    pub nominal_voltage: f64,
    pub min_voltage: f64,
    pub max_voltage: f64,
}

impl BatterySpec {
    pub const PANASONIC_18650PF: BatterySpec = BatterySpec {
        rated_capacity_ah: 2.9,
        nominal_voltage: 3.6,
        min_voltage: 2.5,
        max_voltage: 4.2,
    };

    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.rated_capacity_ah > 0.0) {
            return Err(invalid("rated_capacity_ah", format!("{} must be > 0", self.rated_capacity_ah)));
        }
        if !(self.min_voltage < self.nominal_voltage && self.nominal_voltage < self.max_voltage) {
            return Err(invalid(
                "voltage bounds",
                format!(
                    "need min < nominal < max, got {} / {} / {}",
                    self.min_voltage, self.nominal_voltage, self.max_voltage
                ),
            ));
        }
        Ok(())
    }

    pub fn rated_capacity_coulombs(&self) -> f64 {
        self.rated_capacity_ah * 3600.0
    }

    /// Current that empties the cell in one hour.
    pub fn one_c_amps(&self) -> f64 {
        self.rated_capacity_ah
    }
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self::PANASONIC_18650PF
    }
}
