use super::{apply_normalization, invalid, DataError, DriveCycle, NormalizationParams};
use crate::nn::Tensor3;
use crate::rng::SeededRng;

/// Channels per window: voltage, current, temperature, past SOC.
pub const INPUT_FEATURES: usize = 4;

/// A labeled cycle after min-max scaling, with its raw SOC kept as targets.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedCycle {
    pub name: String,
    pub time_s: Vec<f64>,
    /// `[voltage, current, temperature, soc]`, each normalized.
    pub features: [Vec<f64>; 4],
    pub soc: Vec<f64>,
    pub params: NormalizationParams,
}

impl NormalizedCycle {
    pub fn new(cycle: &DriveCycle, params: &NormalizationParams) -> Result<Self, DataError> {
        let soc = cycle.soc_labels()?;
        if soc.is_empty() {
            return Err(DataError::EmptyCycle(cycle.name.clone()));
        }
        Ok(Self {
            name: cycle.name.clone(),
            time_s: cycle.times(),
            features: apply_normalization(cycle, params),
            soc,
            params: *params,
        })
    }

    pub fn len(&self) -> usize {
        self.soc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.soc.is_empty()
    }

    /// Writes the window starting at `start` into `out` (channel-major,
    /// `INPUT_FEATURES * len` values). The SOC channel holds the label one
    /// step back; its first slot repeats the window's own first label.
    pub fn fill_window(&self, start: usize, len: usize, out: &mut [f64]) {
        debug_assert!(start + len <= self.len() && out.len() == INPUT_FEATURES * len);
        let (sensors, soc_out) = out.split_at_mut(3 * len);
        for (c, dst) in sensors.chunks_exact_mut(len).enumerate() {
            dst.copy_from_slice(&self.features[c][start..start + len]);
        }
        let soc = &self.features[3];
        soc_out[0] = soc[start];
        soc_out[1..].copy_from_slice(&soc[start..start + len - 1]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSample {
    /// Index into [`WindowedDataset::cycles`].
    pub source: usize,
    pub start: usize,
    /// Raw SOC at the window's final step.
    pub target: f64,
}

/// Sliding windows over one or more normalized cycles. Windows are stored as
/// `(source, start)` references and materialized on demand.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    window: usize,
    cycles: Vec<NormalizedCycle>,
    samples: Vec<WindowSample>,
}

impl WindowedDataset {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn cycles(&self) -> &[NormalizedCycle] {
        &self.cycles
    }

    pub fn samples(&self) -> &[WindowSample] {
        &self.samples
    }

    pub fn normalization(&self) -> &NormalizationParams {
        &self.cycles[0].params
    }

    pub fn source_name(&self, i: usize) -> &str {
        &self.cycles[self.samples[i].source].name
    }

    /// `INPUT_FEATURES * window` values of sample `i`.
    pub fn window_values(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; INPUT_FEATURES * self.window];
        let s = self.samples[i];
        self.cycles[s.source].fill_window(s.start, self.window, &mut out);
        out
    }

    /// Stacks the listed samples into a `(n, 4, window)` batch plus targets.
    pub fn batch(&self, indices: &[usize]) -> (Tensor3, Vec<f64>) {
        let per = INPUT_FEATURES * self.window;
        let mut data = vec![0.0; indices.len() * per];
        let mut targets = Vec::with_capacity(indices.len());
        for (slot, &i) in data.chunks_exact_mut(per).zip(indices) {
            let s = self.samples[i];
            self.cycles[s.source].fill_window(s.start, self.window, slot);
            targets.push(s.target);
        }
        let t = Tensor3::from_vec(indices.len(), INPUT_FEATURES, self.window, data).expect("batch size is consistent");
        (t, targets)
    }
}

fn windows_of(cycle: &NormalizedCycle, source: usize, window: usize, stride: usize) -> Result<Vec<WindowSample>, DataError> {
    if window == 0 {
        return Err(invalid("window", "must be >= 1"));
    }
    if stride == 0 {
        return Err(invalid("stride", "must be >= 1"));
    }
    if cycle.len() < window {
        return Err(DataError::CycleTooShort {
            name: cycle.name.clone(),
            len: cycle.len(),
            window,
        });
    }
    Ok((0..=cycle.len() - window)
        .step_by(stride)
        .map(|start| WindowSample {
            source,
            start,
            target: cycle.soc[start + window - 1],
        })
        .collect())
}

/// Windows starting at `0, stride, 2*stride, ...` over a single cycle.
pub fn make_windows(cycle: &NormalizedCycle, window: usize, stride: usize) -> Result<WindowedDataset, DataError> {
    let samples = windows_of(cycle, 0, window, stride)?;
    Ok(WindowedDataset {
        window,
        cycles: vec![cycle.clone()],
        samples,
    })
}

/// Concatenates per-cycle windows, tags each with its source, and shuffles the
/// sample order with `seed`. No window spans two cycles. All cycles must share
/// one normalization.
pub fn build_hybrid(cycles: Vec<NormalizedCycle>, window: usize, stride: usize, seed: u64) -> Result<WindowedDataset, DataError> {
    let Some(first) = cycles.first() else {
        return Err(DataError::NoCycles);
    };
    if cycles.iter().any(|c| c.params != first.params) {
        return Err(invalid("cycles", "all cycles must be normalized with the same parameters"));
    }
    let mut samples = Vec::new();
    for (source, cycle) in cycles.iter().enumerate() {
        samples.extend(windows_of(cycle, source, window, stride)?);
    }
    SeededRng::new(seed).shuffle(&mut samples);
    Ok(WindowedDataset {
        window,
        cycles,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{fit_normalization, DriveCycleRecord};

    fn labeled(name: &str, n: usize, phase: f64) -> DriveCycle {
        DriveCycle::new(
            name,
            (0..n)
                .map(|i| {
                    let x = i as f64 + phase;
                    DriveCycleRecord {
                        time_s: i as f64 * 0.1,
                        voltage_v: 3.6 + 0.3 * (x * 0.37).sin(),
                        current_a: 2.0 * (x * 0.11).cos(),
                        temperature_c: 25.0 + (x * 0.05).sin(),
                        soc: Some(1.0 - i as f64 / (2.0 * n as f64)),
                    }
                })
                .collect(),
        )
    }

    fn normalized(cycles: &[DriveCycle]) -> Vec<NormalizedCycle> {
        let p = fit_normalization(cycles).unwrap();
        cycles.iter().map(|c| NormalizedCycle::new(c, &p).unwrap()).collect()
    }

    #[test]
    fn window_counts() {
        let c = &normalized(&[labeled("a", 10, 0.0)])[0];
        assert_eq!(make_windows(c, 9, 1).unwrap().len(), 2);
        assert_eq!(make_windows(c, 10, 1).unwrap().len(), 1);
        assert_eq!(make_windows(c, 3, 4).unwrap().len(), 2);
        assert!(matches!(make_windows(c, 11, 1), Err(DataError::CycleTooShort { .. })));
        assert!(make_windows(c, 3, 0).is_err());
    }

    #[test]
    fn contents_match_direct_slices() {
        let c = &normalized(&[labeled("a", 200, 0.0)])[0];
        let ds = make_windows(c, 17, 3).unwrap();
        let mut rng = SeededRng::new(1);
        for _ in 0..20 {
            let i = rng.below(ds.len());
            let start = ds.samples()[i].start;
            let w = ds.window_values(i);
            for ch in 0..INPUT_FEATURES {
                for t in 0..17 {
                    let expected = if ch < 3 {
                        c.features[ch][start + t]
                    } else if t == 0 {
                        c.features[3][start]
                    } else {
                        c.features[3][start + t - 1]
                    };
                    assert_eq!(w[ch * 17 + t], expected);
                }
            }
            assert_eq!(ds.samples()[i].target, c.soc[start + 16]);
        }
    }

    #[test]
    fn hybrid_concatenates_and_shuffles_reproducibly() {
        let cycles: Vec<_> = (0..4).map(|k| labeled(&format!("c{k}"), 50, k as f64 * 3.0)).collect();
        let norm = normalized(&cycles);
        let per = make_windows(&norm[0], 10, 2).unwrap().len();
        let a = build_hybrid(norm.clone(), 10, 2, 5).unwrap();
        let b = build_hybrid(norm.clone(), 10, 2, 5).unwrap();
        assert_eq!(a.len(), 4 * per);
        assert_eq!(a.samples(), b.samples());
        let c = build_hybrid(norm, 10, 2, 6).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn hybrid_windows_stay_inside_their_source() {
        let cycles = vec![labeled("a", 40, 0.0), labeled("b", 25, 1.0), labeled("c", 61, 2.0)];
        let norm = normalized(&cycles);
        let ds = build_hybrid(norm, 12, 1, 9).unwrap();
        for (i, s) in ds.samples().iter().enumerate() {
            let src = &ds.cycles()[s.source];
            assert!(s.start + 12 <= src.len());
            assert_eq!(ds.source_name(i), cycles[s.source].name);
            assert_eq!(s.target, cycles[s.source].records[s.start + 11].soc.unwrap());
            let times = &src.time_s[s.start..s.start + 12];
            assert!(times.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn empty_hybrid_rejected() {
        assert!(matches!(build_hybrid(Vec::new(), 5, 1, 0), Err(DataError::NoCycles)));
    }

    #[test]
    fn batch_stacks_windows() {
        let c = &normalized(&[labeled("a", 30, 0.0)])[0];
        let ds = make_windows(c, 5, 1).unwrap();
        let (x, y) = ds.batch(&[3, 0]);
        assert_eq!(x.shape().batch, 2);
        assert_eq!(&x.data()[..20], ds.window_values(3).as_slice());
        assert_eq!(y, vec![ds.samples()[3].target, ds.samples()[0].target]);
    }
}
