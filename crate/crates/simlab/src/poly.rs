//! Factor-degree models for random monic polynomials over F_q.

use crate::delta::{delta_from_degrees, DeltaSample, DeltaStats};
use crate::{run_trials, SimError};
use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

pub const Q_MAX: u64 = 1 << 20;
pub const POLY_N_MAX: usize = 2000;
/// Above this shape the Gamma mixing variable is replaced by its mean;
/// its relative spread is below 1e-6.
const GAMMA_SHAPE_MAX: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyModel {
    /// Z_d ~ Poisson(1/d)
    Poisson,
    /// Z_d ~ NB(m_d, q^-d), m_d the number of monic irreducibles of degree d
    NegBinomial,
}

impl PolyModel {
    pub fn name(self) -> &'static str {
        match self {
            PolyModel::Poisson => "poisson",
            PolyModel::NegBinomial => "nb",
        }
    }
}

fn mobius(n: u64) -> i32 {
    let f = num_prime::nt_funcs::factorize64(n);
    if f.values().any(|&e| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

fn check_q(q: u64) -> Result<(), SimError> {
    if q < 2 || q > Q_MAX || num_prime::nt_funcs::factorize64(q).len() != 1 {
        return Err(SimError::Guard(format!("q must be a prime power at most 2^20, got {q}")));
    }
    Ok(())
}

/// (1/d) sum_{e | d} mu(d/e) q^e
pub fn irreducible_count(q: u64, d: usize) -> Result<BigUint, SimError> {
    check_q(q)?;
    if d == 0 {
        return Err(SimError::Param("degree must be at least 1".into()));
    }
    let mut s = BigInt::zero();
    for e in 1..=d {
        if d % e == 0 {
            let mu = mobius((d / e) as u64);
            if mu != 0 {
                s += BigInt::from(mu) * BigInt::from(q).pow(e as u32);
            }
        }
    }
    let (quot, rem) = (s.clone() / d, s % d);
    debug_assert!(rem.is_zero() && !quot.is_negative());
    Ok(quot.to_biguint().unwrap())
}

fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Default degree window [ceil(10 log n), floor(n / (10 log n))]; empty for
/// every n up to POLY_N_MAX.
pub fn degree_range(n: usize) -> (usize, usize) {
    let l = (n as f64).ln();
    ((10.0 * l).ceil() as usize, (n as f64 / (10.0 * l)).floor() as usize)
}

/// ln of m_d q^-d / (1 - q^-d), the NB mean.
fn nb_log_mean(q: u64, d: usize) -> Result<f64, SimError> {
    let m = irreducible_count(q, d)?;
    let lnp = -(d as f64) * (q as f64).ln();
    Ok(ln_big(&m) + lnp - (-lnp.exp()).ln_1p())
}

pub fn nb_mean(q: u64, d: usize) -> Result<f64, SimError> {
    Ok(nb_log_mean(q, d)?.exp())
}

#[derive(Debug, Clone)]
enum Draw {
    Poisson(Poisson<f64>),
    Mixture { shape: f64, scale: f64 },
    Fixed(Poisson<f64>),
}

/// Per-degree samplers, built once and reused across trials.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    pub q: u64,
    pub n: usize,
    pub model: PolyModel,
    pub range: (usize, usize),
    draws: Vec<(usize, Draw)>,
}

impl DegreeSampler {
    pub fn new(q: u64, n: usize, model: PolyModel, range: Option<(usize, usize)>) -> Result<Self, SimError> {
        check_q(q)?;
        if n == 0 || n > POLY_N_MAX {
            return Err(SimError::Guard(format!("n must lie in 1..={POLY_N_MAX}, got {n}")));
        }
        let (lo, hi) = range.unwrap_or_else(|| degree_range(n));
        if lo == 0 || hi > n {
            return Err(SimError::Param(format!("degree range [{lo}, {hi}] must lie inside [1, {n}]")));
        }
        let mut draws = Vec::new();
        for d in lo..=hi {
            let dr = match model {
                PolyModel::Poisson => Draw::Poisson(Poisson::new(1.0 / d as f64).unwrap()),
                PolyModel::NegBinomial => {
                    let m = irreducible_count(q, d)?.to_f64().unwrap_or(f64::INFINITY);
                    if m < GAMMA_SHAPE_MAX {
                        let p = (q as f64).powi(-(d as i32));
                        Draw::Mixture { shape: m, scale: p / (1.0 - p) }
                    } else {
                        Draw::Fixed(Poisson::new(nb_log_mean(q, d)?.exp()).unwrap())
                    }
                }
            };
            draws.push((d, dr));
        }
        Ok(DegreeSampler { q, n, model, range: (lo, hi), draws })
    }

    /// Degrees with multiplicity, increasing.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::new();
        for (d, dr) in &self.draws {
            let y = match dr {
                Draw::Poisson(p) | Draw::Fixed(p) => p.sample(rng),
                Draw::Mixture { shape, scale } => {
                    let lam = Gamma::new(*shape, *scale).unwrap().sample(rng);
                    if lam > 0.0 {
                        Poisson::new(lam).unwrap().sample(rng)
                    } else {
                        0.0
                    }
                }
            };
            out.extend(std::iter::repeat(*d).take(y as usize));
        }
        out
    }
}

pub fn sample_poly_degrees<R: Rng + ?Sized>(
    q: u64,
    n: usize,
    model: PolyModel,
    range: Option<(usize, usize)>,
    rng: &mut R,
) -> Result<Vec<usize>, SimError> {
    Ok(DegreeSampler::new(q, n, model, range)?.sample(rng))
}

pub fn delta_poly(q: u64, n: usize, degrees: &[usize]) -> DeltaSample {
    delta_from_degrees(q, n, degrees)
}

pub fn sample_delta_poly(
    sampler: &DegreeSampler,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<DeltaStats, SimError> {
    let v = run_trials(seed, samples, workers, |_, rng| delta_poly(sampler.q, sampler.n, &sampler.sample(rng)))?;
    Ok(DeltaStats::from_samples(v))
}
