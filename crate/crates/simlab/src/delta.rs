//! Delta for integers (divisors in a window of logarithmic length 1) and for
//! permutations (sub-collections of cycles with a common total length).

use crate::{run_trials, SimError};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

pub const DIVISOR_GUARD: usize = 1_000_000;
pub const INTEGER_MAX: u64 = 1 << 63;
pub const PERM_GUARD: usize = 400;
pub const BRUTE_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Param {
    Integer(u64),
    Permutation(usize),
    Polynomial { q: u64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Aux {
    DivisorCount(usize),
    /// Cycle lengths, increasing.
    CycleType(Vec<usize>),
    /// Degrees of the factors, increasing.
    Degrees(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSample {
    pub param: Param,
    pub delta: BigUint,
    pub aux: Aux,
}

impl DeltaSample {
    pub fn kind(&self) -> &'static str {
        match self.param {
            Param::Integer(_) => "integer",
            Param::Permutation(_) => "permutation",
            Param::Polynomial { .. } => "polynomial",
        }
    }
}

pub fn divisors(n: u64) -> Result<Vec<u64>, SimError> {
    if n == 0 || n > INTEGER_MAX {
        return Err(SimError::Guard(format!("n must lie in 1..=2^63, got {n}")));
    }
    let f = num_prime::nt_funcs::factorize64(n);
    let count: usize = f.values().map(|&e| e + 1).product();
    if count > DIVISOR_GUARD {
        return Err(SimError::Divisors { count, max: DIVISOR_GUARD });
    }
    let mut d = vec![1u64];
    for (&p, &e) in &f {
        let len = d.len();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                d.push(d[i] * pk);
            }
        }
    }
    d.sort_unstable();
    Ok(d)
}

/// Largest number of divisors d' with d <= d' <= e d, over all divisors d.
pub fn delta_integer(n: u64) -> Result<DeltaSample, SimError> {
    let d = divisors(n)?;
    let logs: Vec<f64> = d.iter().map(|&x| (x as f64).ln()).collect();
    let mut best = 0;
    let mut j = 0;
    for i in 0..logs.len() {
        j = j.max(i);
        while j + 1 < logs.len() && logs[j + 1] - logs[i] <= 1.0 {
            j += 1;
        }
        best = best.max(j - i + 1);
    }
    Ok(DeltaSample { param: Param::Integer(n), delta: BigUint::from(best), aux: Aux::DivisorCount(d.len()) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaStats {
    pub samples: Vec<DeltaSample>,
    pub mean: f64,
    pub min: BigUint,
    pub max: BigUint,
}

impl DeltaStats {
    pub fn from_samples(samples: Vec<DeltaSample>) -> Self {
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().map(|s| s.delta.to_f64().unwrap_or(f64::INFINITY)).sum::<f64>() / n;
        let min = samples.iter().map(|s| s.delta.clone()).min().unwrap_or_default();
        let max = samples.iter().map(|s| s.delta.clone()).max().unwrap_or_default();
        DeltaStats { samples, mean, min, max }
    }
}

/// n uniform on [1, x] per trial.
pub fn sample_delta_integer(x: u64, samples: u64, seed: u64, workers: usize) -> Result<DeltaStats, SimError> {
    if x == 0 || x > INTEGER_MAX {
        return Err(SimError::Guard(format!("X must lie in 1..=2^63, got {x}")));
    }
    let v = run_trials(seed, samples, workers, |_, rng| delta_integer(rng.gen_range(1..=x)))?;
    Ok(DeltaStats::from_samples(v.into_iter().collect::<Result<_, _>>()?))
}

/// Cycle lengths of a uniform permutation of [n]: walking the canonical
/// cycle notation, the open cycle closes with probability 1/m when m
/// elements remain.
pub fn sample_cycle_type<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<usize>, SimError> {
    if n > PERM_GUARD {
        return Err(SimError::Guard(format!("n must be at most {PERM_GUARD}, got {n}")));
    }
    let mut out = Vec::new();
    let mut len = 0;
    for m in (1..=n).rev() {
        len += 1;
        if rng.gen_range(0..m) == 0 {
            out.push(len);
            len = 0;
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Coefficients of prod (1 + x^l) over the given parts.
pub fn subset_sum_poly(parts: &[usize]) -> Vec<BigUint> {
    let total: usize = parts.iter().sum();
    let mut c = vec![BigUint::zero(); total + 1];
    c[0] = BigUint::one();
    let mut deg = 0;
    for &l in parts {
        for i in (0..=deg).rev() {
            if !c[i].is_zero() {
                let v = c[i].clone();
                c[i + l] += v;
            }
        }
        deg += l;
    }
    c
}

fn max_coefficient(parts: &[usize]) -> BigUint {
    subset_sum_poly(parts).into_iter().max().unwrap()
}

pub fn delta_perm(cycle_type: &[usize]) -> DeltaSample {
    let mut ct = cycle_type.to_vec();
    ct.sort_unstable();
    DeltaSample { param: Param::Permutation(ct.iter().sum()), delta: max_coefficient(&ct), aux: Aux::CycleType(ct) }
}

/// Same count by listing every sub-collection of cycles.
pub fn delta_perm_brute(cycle_type: &[usize]) -> Result<BigUint, SimError> {
    let n: usize = cycle_type.iter().sum();
    if n > BRUTE_GUARD {
        return Err(SimError::Guard(format!("brute force needs n <= {BRUTE_GUARD}, got {n}")));
    }
    let mut counts = vec![0u64; n + 1];
    for mask in 0u32..(1 << cycle_type.len()) {
        let s: usize = (0..cycle_type.len()).filter(|&i| mask >> i & 1 == 1).map(|i| cycle_type[i]).sum();
        counts[s] += 1;
    }
    Ok(BigUint::from(*counts.iter().max().unwrap()))
}

pub fn sample_delta_perm(n: usize, samples: u64, seed: u64, workers: usize) -> Result<DeltaStats, SimError> {
    let v = run_trials(seed, samples, workers, |_, rng| sample_cycle_type(n, rng).map(|c| delta_perm(&c)))?;
    Ok(DeltaStats::from_samples(v.into_iter().collect::<Result<_, _>>()?))
}

/// Delta for a multiset of factor degrees, counted as distinct factors.
pub(crate) fn delta_from_degrees(q: u64, n: usize, degrees: &[usize]) -> DeltaSample {
    let mut d = degrees.to_vec();
    d.sort_unstable();
    DeltaSample { param: Param::Polynomial { q, n }, delta: max_coefficient(&d), aux: Aux::Degrees(d) }
}
