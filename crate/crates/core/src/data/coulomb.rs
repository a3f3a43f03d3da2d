use super::{invalid, BatterySpec, DataError, DriveCycle, DriveCycleRecord};

const SOC_SLACK: f64 = 0.01;

/// Trapezoidal SOC trajectory: `soc[i] = soc[i-1] - (I[i-1] + I[i]) / 2 * dt / Q`.
pub(crate) fn trapezoid_soc(times: &[f64], currents: &[f64], capacity_coulombs: f64, initial_soc: f64) -> Vec<f64> {
    let mut soc = Vec::with_capacity(times.len());
    let mut charge = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            charge += 0.5 * (currents[i - 1] + currents[i]) * (times[i] - times[i - 1]);
        }
        soc.push(initial_soc - charge / capacity_coulombs);
    }
    soc
}

/// Labels each record with `initial_soc - (1/Q) * integral(I dt)`, integrated
/// by the trapezoid rule over the recorded timestamps. A trajectory leaving
/// `[-0.01, 1.01]` is reported as inconsistent.
pub fn coulomb_count(records: &[DriveCycleRecord], spec: &BatterySpec, initial_soc: f64) -> Result<Vec<DriveCycleRecord>, DataError> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&initial_soc) {
        return Err(invalid("initial_soc", format!("{initial_soc} is outside [0, 1]")));
    }
    let times: Vec<f64> = records.iter().map(|r| r.time_s).collect();
    let currents: Vec<f64> = records.iter().map(|r| r.current_a).collect();
    let soc = trapezoid_soc(&times, &currents, spec.rated_capacity_coulombs(), initial_soc);
    if let Some((index, &s)) = soc
        .iter()
        .enumerate()
        .find(|(_, s)| !(-SOC_SLACK..=1.0 + SOC_SLACK).contains(*s))
    {
        return Err(DataError::InconsistentSoc { index, soc: s });
    }
    Ok(records
        .iter()
        .zip(soc)
        .map(|(r, s)| DriveCycleRecord { soc: Some(s), ..*r })
        .collect())
}

/// Keeps existing labels; derives them by coulomb counting otherwise.
pub fn label_by_coulomb_counting(cycle: &DriveCycle, spec: &BatterySpec, initial_soc: f64) -> Result<DriveCycle, DataError> {
    if cycle.is_labeled() {
        return Ok(cycle.clone());
    }
    Ok(DriveCycle::new(cycle.name.clone(), coulomb_count(&cycle.records, spec, initial_soc)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn records(times: &[f64], currents: &[f64]) -> Vec<DriveCycleRecord> {
        times
            .iter()
            .zip(currents)
            .map(|(&t, &i)| DriveCycleRecord {
                time_s: t,
                voltage_v: 3.6,
                current_a: i,
                temperature_c: 25.0,
                soc: None,
            })
            .collect()
    }

    #[test]
    fn one_c_for_one_hour_empties_the_cell() {
        let times: Vec<f64> = (0..=3600).map(|s| s as f64).collect();
        let out = coulomb_count(&records(&times, &vec![2.9; times.len()]), &BatterySpec::default(), 1.0).unwrap();
        assert!(out.last().unwrap().soc.unwrap().abs() < 1e-9);
    }

    #[test]
    fn zero_current_holds_soc() {
        let times: Vec<f64> = (0..100).map(|s| s as f64 * 0.1).collect();
        let out = coulomb_count(&records(&times, &vec![0.0; 100]), &BatterySpec::default(), 0.42).unwrap();
        assert!(out.iter().all(|r| r.soc == Some(0.42)));
    }

    #[test]
    fn piecewise_constant_profile_matches_fine_riemann_sum() {
        // Current holds each level for 10 s; samples every 1 s sit on the levels,
        // so the exact integral differs from the trapezoid only at the 9 jumps.
        let mut rng = SeededRng::new(77);
        let levels: Vec<f64> = (0..10).map(|_| rng.uniform(-2.0, 4.0)).collect();
        let current_at = |t: f64| levels[((t / 10.0) as usize).min(9)];
        let times: Vec<f64> = (0..=100).map(|s| s as f64).collect();
        // Sample at the centre of each jump, which is what the trapezoid integrates exactly.
        let currents: Vec<f64> = times
            .iter()
            .map(|&t| {
                let k = (t / 10.0).round() as usize;
                if (t - 10.0 * k as f64).abs() < 1e-12 && k > 0 && k < 10 {
                    0.5 * (levels[k - 1] + levels[k])
                } else {
                    current_at(t)
                }
            })
            .collect();
        let out = coulomb_count(&records(&times, &currents), &BatterySpec::default(), 0.9).unwrap();
        let q = BatterySpec::default().rated_capacity_coulombs();
        let steps = 1_000_000;
        let h = 100.0 / steps as f64;
        let mut charge = 0.0;
        for i in 0..steps {
            charge += current_at((i as f64 + 0.5) * h) * h;
        }
        let oracle = 0.9 - charge / q;
        assert!((out.last().unwrap().soc.unwrap() - oracle).abs() < 1e-6);
    }

    #[test]
    fn negated_reversed_profile_returns_home() {
        let mut rng = SeededRng::new(9);
        let n = 500;
        let forward: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let mut currents = forward.clone();
        currents.extend(forward.iter().rev().map(|i| -i));
        let times: Vec<f64> = (0..2 * n).map(|s| s as f64 * 0.1).collect();
        let out = coulomb_count(&records(&times, &currents), &BatterySpec::default(), 0.5).unwrap();
        assert!((out.last().unwrap().soc.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn flags_impossible_trajectories() {
        let times: Vec<f64> = (0..=7200).map(|s| s as f64).collect();
        let err = coulomb_count(&records(&times, &vec![2.9; times.len()]), &BatterySpec::default(), 1.0).unwrap_err();
        assert!(matches!(err, DataError::InconsistentSoc { .. }));
        assert!(coulomb_count(&records(&times, &vec![0.0; times.len()]), &BatterySpec::default(), 1.2).is_err());
    }
}
