use super::{invalid, BatterySpec, DataError, DriveCycle, DriveCycleRecord};

/// Open-circuit voltage as a piecewise-linear function of SOC. Outside the
/// table the end segments are extended linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct OcvCurve {
    soc: Vec<f64>,
    voltage: Vec<f64>,
}

impl OcvCurve {
    pub fn new(soc: Vec<f64>, voltage: Vec<f64>) -> Result<Self, DataError> {
        if soc.len() != voltage.len() || soc.len() < 2 {
            return Err(invalid("ocv table", "need at least two (soc, voltage) points of equal count"));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&soc) || !increasing(&voltage) {
            return Err(invalid("ocv table", "soc and voltage must both be strictly increasing"));
        }
        Ok(Self { soc, voltage })
    }

    /// 11 points from 3.0 V empty to 4.2 V full, NCA-shaped.
    pub fn nca_default() -> Self {
        Self {
            soc: (0..=10).map(|i| i as f64 / 10.0).collect(),
            voltage: vec![3.00, 3.35, 3.48, 3.56, 3.62, 3.68, 3.76, 3.86, 3.96, 4.07, 4.20],
        }
    }

    pub fn voltage_at(&self, soc: f64) -> f64 {
        let n = self.soc.len();
        let seg = match self.soc.iter().position(|&s| s > soc) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        };
        let (s0, s1) = (self.soc[seg], self.soc[seg + 1]);
        let (v0, v1) = (self.voltage[seg], self.voltage[seg + 1]);
        v0 + (v1 - v0) * (soc - s0) / (s1 - s0)
    }
}

/// Lumped thermal model: `dT/dt = heating * I^2 R0 - (T - ambient) / tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub ambient_c: f64,
    /// Kelvin per joule dissipated (inverse heat capacity).
    pub heating_coefficient: f64,
    pub cooling_time_constant_s: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            ambient_c: 25.0,
            heating_coefficient: 1.0 / 45.0,
            cooling_time_constant_s: 600.0,
        }
    }
}

/// First-order Thevenin cell: OCV source, series `r0`, one `r1 || c1` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EcmConfig {
    pub r0: f64,
    pub r1: f64,
    pub c1: f64,
    pub ocv: OcvCurve,
    pub thermal: ThermalParams,
}

impl Default for EcmConfig {
    fn default() -> Self {
        Self {
            r0: 0.025,
            r1: 0.015,
            c1: 2000.0,
            ocv: OcvCurve::nca_default(),
            thermal: ThermalParams::default(),
        }
    }
}

impl EcmConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        for (name, v) in [
            ("r0", self.r0),
            ("r1", self.r1),
            ("c1", self.c1),
            ("cooling_time_constant_s", self.thermal.cooling_time_constant_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("{v} must be positive")));
            }
        }
        if !(self.thermal.heating_coefficient >= 0.0) {
            return Err(invalid("heating_coefficient", "must be >= 0"));
        }
        Ok(())
    }

    pub fn rc_time_constant(&self) -> f64 {
        self.r1 * self.c1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSettings {
    pub initial_soc: f64,
    pub dt: f64,
    /// Simulation stops before the first step whose SOC falls below this.
    pub soc_floor: f64,
    pub soc_ceiling: f64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            initial_soc: 1.0,
            dt: 0.1,
            soc_floor: 0.0,
            soc_ceiling: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// SOC left `[soc_floor, soc_ceiling]` at this profile step.
    SocBound { step: usize, soc: f64 },
    /// Terminal voltage fell below the cell minimum at this profile step.
    VoltageCutoff { step: usize, voltage: f64 },
}

impl Truncation {
    pub fn step(&self) -> usize {
        match *self {
            Truncation::SocBound { step, .. } | Truncation::VoltageCutoff { step, .. } => step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub cycle: DriveCycle,
    pub truncated: Option<Truncation>,
    /// Profile steps whose charge current was limited to hold the cell at its
    /// maximum voltage.
    pub charge_limited_steps: usize,
}

/// Runs a current profile (one sample per `dt`, held until the next sample)
/// through the cell model. Record `i` is the state at `i * dt`:
///
/// * SOC by exact coulomb counting of the held current,
/// * `V1 <- V1 * exp(-dt/(R1 C1)) + I R1 (1 - exp(-dt/(R1 C1)))`,
/// * `V = OCV(SOC) - I R0 - V1`,
/// * temperature relaxing exponentially to ambient under `I^2 R0` heating.
///
/// A charge sample that would lift the terminal voltage above the cell maximum
/// is reduced to the current that holds it there, and the reduced value is
/// recorded. Leaving the SOC bounds or dropping below the minimum voltage ends
/// the run before the offending sample.
pub fn simulate_ecm(profile: &[f64], config: &EcmConfig, spec: &BatterySpec, settings: &SimulationSettings) -> Result<Simulation, DataError> {
    config.validate()?;
    spec.validate()?;
    let SimulationSettings {
        initial_soc,
        dt,
        soc_floor,
        soc_ceiling,
    } = *settings;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    if !(soc_floor..=soc_ceiling).contains(&initial_soc) {
        return Err(invalid("initial_soc", format!("{initial_soc} is outside [{soc_floor}, {soc_ceiling}]")));
    }
    if let Some(i) = profile.iter().position(|v| !v.is_finite()) {
        return Err(invalid("profile", format!("sample {i} is not finite")));
    }

    let q = spec.rated_capacity_coulombs();
    let rc_decay = (-dt / config.rc_time_constant()).exp();
    let thermal = config.thermal;
    let heat_decay = (-dt / thermal.cooling_time_constant_s).exp();

    let mut soc = initial_soc;
    let mut v1 = 0.0;
    let mut temp = thermal.ambient_c;
    let mut records = Vec::with_capacity(profile.len());
    let mut truncated = None;
    let mut charge_limited_steps = 0;
    for (step, &requested) in profile.iter().enumerate() {
        if !(soc_floor..=soc_ceiling).contains(&soc) {
            truncated = Some(Truncation::SocBound { step, soc });
            break;
        }
        let ocv = config.ocv.voltage_at(soc);
        let mut current = requested;
        // Most negative current that keeps V <= max.
        let limit = (ocv - v1 - spec.max_voltage) / config.r0;
        if current < 0.0 && current < limit {
            current = limit.min(0.0);
            charge_limited_steps += 1;
        }
        let voltage = ocv - current * config.r0 - v1;
        if voltage < spec.min_voltage {
            truncated = Some(Truncation::VoltageCutoff { step, voltage });
            break;
        }
        records.push(DriveCycleRecord {
            time_s: step as f64 * dt,
            voltage_v: voltage,
            current_a: current,
            temperature_c: temp,
            soc: Some(soc),
        });
        soc -= current * dt / q;
        v1 = v1 * rc_decay + current * config.r1 * (1.0 - rc_decay);
        let heat_rise = thermal.heating_coefficient * current * current * config.r0 * thermal.cooling_time_constant_s;
        temp = thermal.ambient_c + (temp - thermal.ambient_c) * heat_decay + heat_rise * (1.0 - heat_decay);
    }
    Ok(Simulation {
        cycle: DriveCycle::new("ecm", records),
        truncated,
        charge_limited_steps,
    })
}
