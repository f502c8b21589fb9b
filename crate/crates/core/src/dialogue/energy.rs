//! Stand-ins for the exercise tracker: kinetic energy from limb speeds and
//! the speed-to-pitch mapping of the musical feedback.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DialogueError;

pub const BASE_PITCH_HZ: f64 = 220.0;
pub const MAX_PITCH_HZ: f64 = 880.0;

/// E = sum of 0.5 * m * v^2 * dt over `(speed, dt)` samples.
pub fn compute_energy(samples: &[(f64, f64)], mass: f64) -> Result<f64, DialogueError> {
    if !(mass >= 0.0) || !mass.is_finite() {
        return Err(DialogueError::NegativeInput(format!("mass {mass}")));
    }
    let mut total = 0.0;
    for &(v, dt) in samples {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(DialogueError::NegativeInput(format!("speed {v}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(DialogueError::NegativeInput(format!("dt {dt}")));
        }
        total += 0.5 * mass * v * v * dt;
    }
    Ok(total)
}

/// 880 - 660 * exp(-v): 220 Hz at rest, rising towards 880 Hz.
pub fn pitch_for_speed(speed: f64) -> Result<f64, DialogueError> {
    if !(speed >= 0.0) {
        return Err(DialogueError::NegativeInput(format!("speed {speed}")));
    }
    Ok(MAX_PITCH_HZ - (MAX_PITCH_HZ - BASE_PITCH_HZ) * (-speed).exp())
}

/// Source of per-session energy readings.
pub trait EnergySensor {
    /// Energy in joules for exercise session `session` (1-based) lasting `seconds`.
    fn session_energy(&mut self, session: usize, seconds: f64) -> f64;
}

/// Synthetic tracker: each session has a nominal limb speed, jittered per
/// sample with a seeded generator.
#[derive(Debug, Clone)]
pub struct KinectStub {
    pub speeds: [f64; 4],
    pub mass: f64,
    pub sample_rate: f64,
    pub jitter: f64,
    rng: ChaCha8Rng,
}

impl KinectStub {
    pub fn new(seed: u64) -> Self {
        Self {
            speeds: [0.05, 0.5, 1.5, 1.5],
            mass: 2.0,
            sample_rate: 30.0,
            jitter: 0.1,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Speed samples for one session.
    pub fn track(&mut self, session: usize, seconds: f64) -> Vec<(f64, f64)> {
        let nominal = self.speeds[(session.clamp(1, 4)) - 1];
        let n = (seconds * self.sample_rate).round().max(1.0) as usize;
        let dt = seconds / n as f64;
        (0..n)
            .map(|_| {
                let k = 1.0 + self.rng.random_range(-self.jitter..=self.jitter);
                ((nominal * k).max(0.0), dt)
            })
            .collect()
    }
}

impl EnergySensor for KinectStub {
    fn session_energy(&mut self, session: usize, seconds: f64) -> f64 {
        let samples = self.track(session, seconds);
        compute_energy(&samples, self.mass).expect("stub samples are valid")
    }
}

/// Fixed readings, for tests and replays.
#[derive(Debug, Clone)]
pub struct FixedEnergy(pub [f64; 4]);

impl EnergySensor for FixedEnergy {
    fn session_energy(&mut self, session: usize, _seconds: f64) -> f64 {
        self.0[session.clamp(1, 4) - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, seconds: f64, hz: f64) -> Vec<(f64, f64)> {
        let n = (seconds * hz) as usize;
        vec![(v, 1.0 / hz); n]
    }

    #[test]
    fn energy_examples() {
        assert_eq!(compute_energy(&constant(0.0, 10.0, 50.0), 1.0).unwrap(), 0.0);
        let e = compute_energy(&constant(1.0, 10.0, 50.0), 1.0).unwrap();
        assert!((e - 5.0).abs() < 1e-9, "{e}");
        let slow: Vec<_> = vec![(0.3, 0.1), (0.7, 0.2), (1.1, 0.05)];
        let fast: Vec<_> = slow.iter().map(|&(v, dt)| (2.0 * v, dt)).collect();
        let (a, b) = (compute_energy(&slow, 2.0).unwrap(), compute_energy(&fast, 2.0).unwrap());
        assert!((b - 4.0 * a).abs() < 1e-12);
    }

    #[test]
    fn energy_rejects_negative() {
        assert!(compute_energy(&[(-1.0, 0.1)], 1.0).is_err());
        assert!(compute_energy(&[(1.0, 0.0)], 1.0).is_err());
        assert!(compute_energy(&[(1.0, 0.1)], -1.0).is_err());
        assert!(compute_energy(&[(f64::NAN, 0.1)], 1.0).is_err());
    }

    #[test]
    fn pitch_shape() {
        assert_eq!(pitch_for_speed(0.0).unwrap(), 220.0);
        let mut last = 219.0;
        for i in 0..200 {
            let p = pitch_for_speed(i as f64 * 0.05).unwrap();
            assert!(p > last);
            assert!(p < 880.0);
            last = p;
        }
        assert!((pitch_for_speed(50.0).unwrap() - 880.0).abs() < 1e-9);
        assert!(pitch_for_speed(-0.1).is_err());
    }

    #[test]
    fn stub_orders_sessions() {
        let mut k = KinectStub::new(7);
        let e: Vec<f64> = [(1, 10.0), (2, 10.0), (3, 10.0), (4, 20.0)]
            .iter()
            .map(|&(s, t)| k.session_energy(s, t))
            .collect();
        assert!(e[0] < e[1] && e[1] < e[2] && e[2] < e[3], "{e:?}");
        let mut again = KinectStub::new(7);
        assert_eq!(again.session_energy(1, 10.0), e[0]);
    }
}
