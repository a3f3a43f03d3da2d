use std::fmt;

use super::NnError;

/// Dense rank-3 array laid out `[batch][channel][time]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    batch: usize,
    channels: usize,
    time: usize,
    data: Vec<f64>,
}

/// `(batch, channels, time)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape3 {
    pub batch: usize,
    pub channels: usize,
    pub time: usize,
}

impl fmt::Display for Shape3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}x{}x{})", self.batch, self.channels, self.time)
    }
}

impl Shape3 {
    pub fn new(batch: usize, channels: usize, time: usize) -> Self {
        Self {
            batch,
            channels,
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.batch * self.channels * self.time
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Tensor3 {
    pub fn zeros(batch: usize, channels: usize, time: usize) -> Self {
        Self {
            batch,
            channels,
            time,
            data: vec![0.0; batch * channels * time],
        }
    }

    pub fn from_vec(batch: usize, channels: usize, time: usize, data: Vec<f64>) -> Result<Self, NnError> {
        let want = batch * channels * time;
        if data.len() != want {
            return Err(NnError::DataLength {
                shape: Shape3::new(batch, channels, time),
                len: data.len(),
            });
        }
        Ok(Self {
            batch,
            channels,
            time,
            data,
        })
    }

    pub fn from_fn(batch: usize, channels: usize, time: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(batch * channels * time);
        for b in 0..batch {
            for c in 0..channels {
                for t in 0..time {
                    data.push(f(b, c, t));
                }
            }
        }
        Self {
            batch,
            channels,
            time,
            data,
        }
    }

    pub fn shape(&self) -> Shape3 {
        Shape3::new(self.batch, self.channels, self.time)
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, b: usize, c: usize, t: usize) -> usize {
        debug_assert!(b < self.batch && c < self.channels && t < self.time);
        (b * self.channels + c) * self.time + t
    }

    #[inline]
    pub fn get(&self, b: usize, c: usize, t: usize) -> f64 {
        self.data[self.offset(b, c, t)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, c: usize, t: usize, value: f64) {
        let i = self.offset(b, c, t);
        self.data[i] = value;
    }

    /// The time series of channel `c` in batch item `b`.
    pub fn row(&self, b: usize, c: usize) -> &[f64] {
        let start = (b * self.channels + c) * self.time;
        &self.data[start..start + self.time]
    }

    pub fn row_mut(&mut self, b: usize, c: usize) -> &mut [f64] {
        let start = (b * self.channels + c) * self.time;
        &mut self.data[start..start + self.time]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &Tensor3) -> Result<(), NnError> {
        if self.shape() != other.shape() {
            return Err(NnError::ShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &Tensor3) -> Result<(), NnError> {
        self.same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }
}
