//! Sets containing each integer i independently with probability 1/i.

use crate::SimError;
use rand::Rng;
use rand_distr::Open01;

pub const LOG_SET_MAX: u64 = 1 << 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRandomSet {
    /// Elements lie in (lo, hi].
    pub lo: u64,
    pub hi: u64,
    /// Increasing.
    pub elements: Vec<u64>,
    /// (seed, trial) when drawn from a trial stream.
    pub provenance: Option<(u64, u64)>,
}

impl LogRandomSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements x with a <= x <= b.
    pub fn between(&self, a: u64, b: u64) -> &[u64] {
        let s = self.elements.partition_point(|&x| x < a);
        let e = self.elements.partition_point(|&x| x <= b);
        &self.elements[s..e.max(s)]
    }
}

/// Skips straight to the next element: from i, P(next > j) = i/j, so the next
/// element is ceil(i/U) for U uniform on (0, 1).
pub fn sample_log_set<R: Rng + ?Sized>(lo: u64, hi: u64, rng: &mut R) -> Result<LogRandomSet, SimError> {
    if lo > hi || hi > LOG_SET_MAX {
        return Err(SimError::Range { lo, hi });
    }
    let mut elements = Vec::new();
    let mut i = lo;
    if i == 0 && hi >= 1 {
        elements.push(1);
        i = 1;
    }
    while i < hi {
        let u: f64 = rng.sample(Open01);
        let x = (i as f64 / u).ceil();
        if x > hi as f64 {
            break;
        }
        let j = (x as u64).max(i + 1);
        if j > hi {
            break;
        }
        elements.push(j);
        i = j;
    }
    Ok(LogRandomSet { lo, hi, elements, provenance: None })
}

/// Draw for one trial of a seeded run.
pub fn sample_log_set_trial(lo: u64, hi: u64, seed: u64, trial: u64) -> Result<LogRandomSet, SimError> {
    let mut rng = crate::trial_rng(seed, trial);
    let mut s = sample_log_set(lo, hi, &mut rng)?;
    s.provenance = Some((seed, trial));
    Ok(s)
}

/// Smallest integer >= x, snapping values within 1e-9 relative of an integer.
pub fn ceil_snap(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn empty_range() {
        let mut rng = crate::SimRng::seed_from_u64(1);
        assert!(sample_log_set(10, 10, &mut rng).unwrap().is_empty());
        assert!(sample_log_set(11, 10, &mut rng).is_err());
    }

    #[test]
    fn one_is_certain() {
        let mut rng = crate::SimRng::seed_from_u64(2);
        for _ in 0..20 {
            let s = sample_log_set(0, 5, &mut rng).unwrap();
            assert_eq!(s.elements[0], 1);
        }
    }

    #[test]
    fn inclusion_frequencies() {
        let mut rng = crate::SimRng::seed_from_u64(3);
        let n = 40_000;
        let mut hits = [0u32; 9];
        for _ in 0..n {
            for x in sample_log_set(1, 8, &mut rng).unwrap().elements {
                hits[x as usize] += 1;
            }
        }
        for i in 2..=8usize {
            let p = 1.0 / i as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((hits[i] as f64 / n as f64 - p).abs() < 4.0 * se, "i={i}");
        }
    }

    #[test]
    fn snapping() {
        assert_eq!(ceil_snap(1e6f64.powf(0.5)), 1000);
        assert_eq!(ceil_snap(1.3), 2);
    }
}
