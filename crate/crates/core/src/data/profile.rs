use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::rng::SeededRng;

/// 2C for the 2.9 Ah reference cell.
pub const PEAK_CURRENT_A: f64 = 5.8;

/// Synthetic load families standing in for the HWFET, US06, UDDS and LA92
/// drive cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Highway,
    Aggressive,
    Urban,
    Mixed,
}

impl ProfileKind {
    pub const ALL: [ProfileKind; 4] = [ProfileKind::Highway, ProfileKind::Aggressive, ProfileKind::Urban, ProfileKind::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Highway => "highway",
            ProfileKind::Aggressive => "aggressive",
            ProfileKind::Urban => "urban",
            ProfileKind::Mixed => "mixed",
        }
    }

    fn style(self) -> Style {
        match self {
            ProfileKind::Highway => Style {
                cruise: (2.6, 3.8),
                ripple: 0.35,
                cruise_s: (60.0, 200.0),
                accel_peak: (3.8, 4.6),
                brake_prob: 0.35,
                regen: (0.4, 1.2),
                brake_s: (3.0, 8.0),
                rest_prob: 0.05,
                rest_s: (2.0, 6.0),
            },
            ProfileKind::Aggressive => Style {
                cruise: (2.0, 4.2),
                ripple: 0.9,
                cruise_s: (8.0, 35.0),
                accel_peak: (4.8, PEAK_CURRENT_A),
                brake_prob: 0.85,
                regen: (1.2, 2.5),
                brake_s: (2.0, 6.0),
                rest_prob: 0.2,
                rest_s: (3.0, 12.0),
            },
            ProfileKind::Urban => Style {
                cruise: (0.8, 2.4),
                ripple: 0.4,
                cruise_s: (10.0, 45.0),
                accel_peak: (2.5, 3.8),
                brake_prob: 1.0,
                regen: (0.4, 1.5),
                brake_s: (3.0, 8.0),
                rest_prob: 0.7,
                rest_s: (8.0, 40.0),
            },
            // Alternates urban and highway segments; see `generate_profile`.
            ProfileKind::Mixed => ProfileKind::Urban.style(),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProfileKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let valid: Vec<_> = ProfileKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown profile kind `{s}` (valid: {})", valid.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Style {
    cruise: (f64, f64),
    ripple: f64,
    cruise_s: (f64, f64),
    accel_peak: (f64, f64),
    brake_prob: f64,
    regen: (f64, f64),
    brake_s: (f64, f64),
    rest_prob: f64,
    rest_s: (f64, f64),
}

fn pick(rng: &mut SeededRng, range: (f64, f64)) -> f64 {
    rng.uniform(range.0, range.1)
}

struct Builder {
    dt: f64,
    samples: Vec<f64>,
    target: usize,
}

impl Builder {
    fn full(&self) -> bool {
        self.samples.len() >= self.target
    }

    fn last(&self) -> f64 {
        self.samples.last().copied().unwrap_or(0.0)
    }

    fn steps(&self, seconds: f64) -> usize {
        ((seconds / self.dt).round() as usize).max(1)
    }

    fn ramp(&mut self, to: f64, seconds: f64) {
        let from = self.last();
        let n = self.steps(seconds);
        for i in 1..=n {
            self.samples.push(from + (to - from) * i as f64 / n as f64);
        }
    }

    fn hold(&mut self, level: f64, seconds: f64) {
        let n = self.steps(seconds);
        self.samples.extend(std::iter::repeat_n(level, n));
    }

    /// Level plus two seeded sinusoids.
    fn cruise(&mut self, rng: &mut SeededRng, level: f64, ripple: f64, seconds: f64) {
        let n = self.steps(seconds);
        let waves: Vec<(f64, f64, f64)> = (0..2)
            .map(|k| {
                let amp = ripple * rng.uniform(0.3, 1.0) / (k + 1) as f64;
                let period = rng.uniform(4.0, 30.0) / (k + 1) as f64;
                (amp, TAU / period, rng.uniform(0.0, TAU))
            })
            .collect();
        let start = self.last();
        let blend = self.steps(2.0).min(n);
        for i in 0..n {
            let t = i as f64 * self.dt;
            let wave: f64 = waves.iter().map(|(a, w, p)| a * (w * t + p).sin()).sum();
            let target = level + wave;
            let value = if i < blend {
                let a = (i + 1) as f64 / blend as f64;
                start + (target - start) * a
            } else {
                target
            };
            self.samples.push(value);
        }
    }

    fn drive_segment(&mut self, rng: &mut SeededRng, style: &Style) {
        let level = pick(rng, style.cruise);
        self.ramp(pick(rng, style.accel_peak), rng.uniform(3.0, 8.0));
        let seconds = pick(rng, style.cruise_s);
        self.cruise(rng, level, style.ripple, seconds);
        if rng.next_f64() < style.brake_prob {
            self.ramp(-pick(rng, style.regen), rng.uniform(1.0, 3.0));
            self.hold(self.last(), pick(rng, style.brake_s));
            self.ramp(0.0, 1.0);
        }
        if rng.next_f64() < style.rest_prob {
            self.ramp(0.0, 1.0);
            self.hold(0.0, pick(rng, style.rest_s));
        }
    }
}

/// Seeded synthetic current profile, one sample per `dt`, of length
/// `round(duration / dt)`. Positive current discharges. Every kind begins with
/// an acceleration from rest, alternates cruise, regenerative braking and rest
/// segments, and is clamped to `±PEAK_CURRENT_A`.
pub fn generate_profile(kind: ProfileKind, duration_s: f64, dt: f64, seed: u64) -> Vec<f64> {
    let target = (duration_s / dt).round().max(0.0) as usize;
    let mut rng = SeededRng::new(seed).fork(kind as u64);
    let mut b = Builder {
        dt,
        samples: Vec::with_capacity(target + 4096),
        target,
    };
    let mut segment = 0usize;
    // A braking event within the first minutes guarantees regen even for short runs.
    let mut forced_brake = true;
    while !b.full() {
        let style = match kind {
            ProfileKind::Mixed if segment % 3 == 2 => ProfileKind::Highway.style(),
            ProfileKind::Mixed => ProfileKind::Urban.style(),
            other => other.style(),
        };
        let mut style = style;
        if forced_brake {
            style.brake_prob = 1.0;
            style.cruise_s = (style.cruise_s.0.min(20.0), style.cruise_s.0.min(20.0) + 10.0);
            forced_brake = false;
        }
        b.drive_segment(&mut rng, &style);
        segment += 1;
    }
    let mut samples = b.samples;
    samples.truncate(target);
    for s in &mut samples {
        *s = s.clamp(-PEAK_CURRENT_A, PEAK_CURRENT_A);
    }
    samples
}
