use super::{DataError, DriveCycle, DriveCycleRecord};

/// Input channels in window order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Voltage,
    Current,
    Temperature,
    Soc,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::Voltage, Feature::Current, Feature::Temperature, Feature::Soc];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Voltage => "voltage",
            Feature::Current => "current",
            Feature::Temperature => "temperature",
            Feature::Soc => "soc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }
}

/// Per-feature extremes of the training data, in [`Feature::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationParams {
    pub ranges: [FeatureRange; 4],
}

impl NormalizationParams {
    /// Maps every feature with `[0, 1] -> [0, 1]`.
    pub fn identity() -> Self {
        Self {
            ranges: [FeatureRange { min: 0.0, max: 1.0 }; 4],
        }
    }

    pub fn range(&self, feature: Feature) -> FeatureRange {
        self.ranges[feature as usize]
    }

    pub fn validate(&self) -> Result<(), DataError> {
        for (f, r) in Feature::ALL.iter().zip(&self.ranges) {
            if !(r.max > r.min) || !r.min.is_finite() || !r.max.is_finite() {
                return Err(DataError::DegenerateFeature(f.name()));
            }
        }
        Ok(())
    }
}

/// Fits min/max over every record of every training cycle. SOC labels must
/// be present.
pub fn fit_normalization(cycles: &[DriveCycle]) -> Result<NormalizationParams, DataError> {
    if cycles.is_empty() {
        return Err(DataError::NoCycles);
    }
    let mut ranges = [FeatureRange {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    }; 4];
    for cycle in cycles {
        if cycle.is_empty() {
            return Err(DataError::EmptyCycle(cycle.name.clone()));
        }
        let soc = cycle.soc_labels()?;
        for (r, s) in cycle.records.iter().zip(soc) {
            for (range, v) in ranges.iter_mut().zip([r.voltage_v, r.current_a, r.temperature_c, s]) {
                range.min = range.min.min(v);
                range.max = range.max.max(v);
            }
        }
    }
    let params = NormalizationParams { ranges };
    params.validate()?;
    Ok(params)
}

/// Normalized `[voltage, current, temperature, soc]` series for one cycle.
/// Values outside the fitted range are kept as-is (not clipped). Unlabeled
/// cycles yield an empty SOC series.
pub fn apply_normalization(cycle: &DriveCycle, params: &NormalizationParams) -> [Vec<f64>; 4] {
    let series = |f: Feature, get: fn(&DriveCycleRecord) -> f64| -> Vec<f64> {
        let range = params.range(f);
        cycle.records.iter().map(|r| range.apply(get(r))).collect()
    };
    [
        series(Feature::Voltage, |r| r.voltage_v),
        series(Feature::Current, |r| r.current_a),
        series(Feature::Temperature, |r| r.temperature_c),
        if cycle.is_labeled() {
            series(Feature::Soc, |r| r.soc.unwrap_or(f64::NAN))
        } else {
            Vec::new()
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(points: &[(f64, f64, f64, f64)]) -> DriveCycle {
        DriveCycle::new(
            "c",
            points
                .iter()
                .enumerate()
                .map(|(i, &(v, c, t, s))| DriveCycleRecord {
                    time_s: i as f64,
                    voltage_v: v,
                    current_a: c,
                    temperature_c: t,
                    soc: Some(s),
                })
                .collect(),
        )
    }

    #[test]
    fn extremes_map_to_unit_interval() {
        let train = cycle(&[(2.5, -1.0, 20.0, 0.1), (4.2, 3.0, 30.0, 1.0), (3.3, 0.5, 25.0, 0.5)]);
        let params = fit_normalization(std::slice::from_ref(&train)).unwrap();
        let [v, c, t, s] = apply_normalization(&train, &params);
        assert_eq!((v[0], v[1]), (0.0, 1.0));
        assert_eq!((c[0], c[1]), (0.0, 1.0));
        assert_eq!((t[0], t[1]), (0.0, 1.0));
        assert_eq!((s[0], s[1]), (0.0, 1.0));
    }

    #[test]
    fn constant_feature_is_rejected_by_name() {
        let train = cycle(&[(3.0, 1.0, 25.0, 0.5), (3.1, 2.0, 25.0, 0.6)]);
        let err = fit_normalization(&[train]).unwrap_err();
        assert!(matches!(err, DataError::DegenerateFeature("temperature")));
    }

    #[test]
    fn wider_evaluation_data_is_not_clipped() {
        let a = cycle(&[(3.0, -1.0, 20.0, 0.2), (4.0, 2.0, 30.0, 0.9), (3.5, 0.0, 25.0, 0.5)]);
        let params = fit_normalization(std::slice::from_ref(&a)).unwrap();
        let scaled: Vec<_> = a
            .records
            .iter()
            .map(|r| (r.voltage_v * 1.1, r.current_a * 1.1, r.temperature_c * 1.1, r.soc.unwrap() * 1.1))
            .collect();
        let b = cycle(&scaled);
        let [v, c, ..] = apply_normalization(&b, &params);
        // 4.4 V against a 3..4 V fit lands at 1.4; -1.1 A against -1..2 A at -1/30.
        assert!((v[1] - 1.4).abs() < 1e-12);
        assert!((c[0] + 0.1 / 3.0).abs() < 1e-12);
        assert!(v.iter().any(|x| *x > 1.0) && c.iter().any(|x| *x < 0.0));
    }
}
