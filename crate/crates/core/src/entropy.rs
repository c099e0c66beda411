//! Measures on the cube, coset entropies, e-values and the entropy
//! condition checker.

use crate::flags::{enumerate_subflags, Flag, FlagError, Subflag, SubflagEnumeration};
use crate::qlinalg::{LinalgError, Subspace};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// |slack| at or below this is reported as tight.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntropyError {
    #[error("measure weights sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("negative or non-finite weight {0}")]
    BadWeight(f64),
    #[error("point {0:#x} lies outside {{0,1}}^{1}")]
    OutsideCube(u64, usize),
    #[error("thresholds must satisfy 1 >= c_1 >= ... >= c_(r+1) >= 0")]
    Thresholds,
    #[error("expected {expected} measures, got {got}")]
    MeasureCount { expected: usize, got: usize },
    #[error("measure mu_{0} is not supported on V_{0}")]
    Support(usize),
    #[error("subflag does not belong to this flag")]
    WrongParent,
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Sum by recursive halving.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// -sum p log p with 0 log 0 = 0.
pub fn shannon(ps: &[f64]) -> f64 {
    let t: Vec<f64> = ps.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).collect();
    pairwise_sum(&t)
}

/// A probability measure on {0,1}^k.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    k: usize,
    weights: BTreeMap<u64, f64>,
}

impl Measure {
    pub fn new(k: usize, weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Self, EntropyError> {
        let mut map = BTreeMap::new();
        for (x, w) in weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(EntropyError::BadWeight(w));
            }
            if k < 64 && x >> k != 0 {
                return Err(EntropyError::OutsideCube(x, k));
            }
            if w > 0.0 {
                *map.entry(x).or_insert(0.0) += w;
            }
        }
        let total = pairwise_sum(&map.values().copied().collect::<Vec<_>>());
        if (total - 1.0).abs() > 1e-12 {
            return Err(EntropyError::NotNormalized(total));
        }
        Ok(Measure { k, weights: map })
    }

    /// Normalizes nonnegative weights first.
    pub fn normalized(k: usize, weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Self, EntropyError> {
        let v: Vec<(u64, f64)> = weights.into_iter().collect();
        let total = pairwise_sum(&v.iter().map(|p| p.1).collect::<Vec<_>>());
        if !(total > 0.0 && total.is_finite()) {
            return Err(EntropyError::NotNormalized(total));
        }
        Self::new(k, v.into_iter().map(|(x, w)| (x, w / total)))
    }

    pub fn uniform(k: usize, pts: &[u64]) -> Result<Self, EntropyError> {
        let w = 1.0 / pts.len() as f64;
        Self::normalized(k, pts.iter().map(|&x| (x, w)))
    }

    pub fn ambient_dim(&self) -> usize {
        self.k
    }

    pub fn weight(&self, x: u64) -> f64 {
        self.weights.get(&x).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights.iter().map(|(&x, &w)| (x, w))
    }

    pub fn mass(&self, pts: &[u64]) -> f64 {
        pairwise_sum(&pts.iter().map(|&x| self.weight(x)).collect::<Vec<_>>())
    }

    /// Conditional measure on a point set of positive mass.
    pub fn restrict(&self, pts: &[u64]) -> Result<Measure, EntropyError> {
        Self::normalized(self.k, pts.iter().map(|&x| (x, self.weight(x))))
    }

    pub fn supported_in(&self, w: &Subspace) -> bool {
        self.weights.keys().all(|&x| w.contains_bits(x))
    }
}

/// Masses nu(W + x) of the cosets met by the support, in canonical order.
pub fn coset_masses(nu: &Measure, w: &Subspace) -> Result<Vec<(Vec<u64>, f64)>, EntropyError> {
    if w.ambient_dim() != nu.k {
        return Err(LinalgError::DimensionMismatch(w.ambient_dim(), nu.k).into());
    }
    let mut groups: BTreeMap<Vec<BigRational>, (Vec<u64>, Vec<f64>)> = BTreeMap::new();
    for (x, p) in nu.support() {
        let e = groups.entry(w.coset_key_bits(x)).or_default();
        e.0.push(x);
        e.1.push(p);
    }
    Ok(groups.into_values().map(|(pts, ws)| (pts, pairwise_sum(&ws))).collect())
}

/// H_nu(W) = -sum_x nu(x) log nu(W + x)
pub fn coset_entropy(nu: &Measure, w: &Subspace) -> Result<f64, EntropyError> {
    let m: Vec<f64> = coset_masses(nu, w)?.into_iter().map(|(_, p)| p).collect();
    Ok(shannon(&m))
}

/// H(W1) + H(W2) - H(W1 cap W2) - H(W1 + W2); nonnegative up to rounding.
pub fn submodularity_defect(nu: &Measure, w1: &Subspace, w2: &Subspace) -> Result<f64, EntropyError> {
    let s = w1.sum(w2)?;
    let i = w1.intersect(w2)?;
    Ok(coset_entropy(nu, w1)? + coset_entropy(nu, w2)? - coset_entropy(nu, &i)? - coset_entropy(nu, &s)?)
}

/// Right side of the chain rule for W' <= W:
/// H_nu(W) + sum over cosets C of W of nu(C) H_{nu|C}(W').
pub fn chain_rule_rhs(nu: &Measure, w: &Subspace, w_small: &Subspace) -> Result<f64, EntropyError> {
    let mut terms = vec![coset_entropy(nu, w)?];
    for (pts, p) in coset_masses(nu, w)? {
        terms.push(p * coset_entropy(&nu.restrict(&pts)?, w_small)?);
    }
    Ok(pairwise_sum(&terms))
}

/// log sum e^a - H(p) - <a, p>; zero exactly at p proportional to e^a.
pub fn gibbs_gap(a: &[f64], p: &[f64]) -> f64 {
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + a.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    let dot: f64 = a.iter().zip(p).map(|(x, y)| x * y).sum();
    lse - shannon(p) - dot
}

pub fn softmax(a: &[f64]) -> Vec<f64> {
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = a.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// n! / prod n_i! as an exact integer.
pub fn multinomial(counts: &[u64]) -> BigUint {
    let mut out = BigUint::one();
    let mut n = 0u64;
    for &c in counts {
        for t in 1..=c {
            n += 1;
            out *= n;
            out /= t;
        }
    }
    out
}

/// Natural log of a big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return num_traits::ToPrimitive::to_f64(x).unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    num_traits::ToPrimitive::to_f64(&top).unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// The triple (flag, thresholds c_1..c_(r+1), measures mu_1..mu_r).
#[derive(Debug, Clone)]
pub struct System {
    pub flag: Flag,
    pub c: Vec<f64>,
    pub measures: Vec<Measure>,
}

impl System {
    pub fn new(flag: Flag, c: Vec<f64>, measures: Vec<Measure>) -> Result<Self, EntropyError> {
        let r = flag.order();
        if c.len() != r + 1 {
            return Err(EntropyError::Thresholds);
        }
        let tol = 1e-15;
        if c[0] > 1.0 + tol || *c.last().unwrap() < -tol || c.windows(2).any(|w| w[1] > w[0] + tol) {
            return Err(EntropyError::Thresholds);
        }
        if measures.len() != r {
            return Err(EntropyError::MeasureCount { expected: r, got: measures.len() });
        }
        for (j, m) in measures.iter().enumerate() {
            if !m.supported_in(flag.space(j + 1)) {
                return Err(EntropyError::Support(j + 1));
            }
        }
        Ok(System { flag, c, measures })
    }

    pub fn order(&self) -> usize {
        self.flag.order()
    }

    /// e(V) = sum c_j dim(V_j / V_(j-1))
    pub fn e_full(&self) -> f64 {
        let t: Vec<f64> = self.flag.dim_steps().iter().zip(&self.c).map(|(&d, &c)| c * d as f64).collect();
        pairwise_sum(&t)
    }

    fn e_from_parts(&self, dims: &[usize], ent: &[f64]) -> f64 {
        let r = self.order();
        let mut t = Vec::with_capacity(2 * r);
        for j in 1..=r {
            t.push((self.c[j - 1] - self.c[j]) * ent[j - 1]);
            t.push(self.c[j - 1] * (dims[j] - dims[j - 1]) as f64);
        }
        pairwise_sum(&t)
    }
}

/// e(V') = sum (c_j - c_(j+1)) H_(mu_j)(V'_j) + sum c_j dim(V'_j / V'_(j-1))
pub fn e_value(s: &System, sf: &Subflag) -> Result<f64, EntropyError> {
    if !sf.is_subflag_of(&s.flag) {
        return Err(EntropyError::WrongParent);
    }
    let r = s.order();
    let ent = (1..=r).map(|j| coset_entropy(&s.measures[j - 1], sf.space(j))).collect::<Result<Vec<_>, _>>()?;
    Ok(s.e_from_parts(&sf.dims(), &ent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackStatus {
    Pass,
    Tight,
    Fail,
}

impl SlackStatus {
    pub fn of(slack: f64) -> Self {
        if slack.abs() <= SLACK_TOL {
            SlackStatus::Tight
        } else if slack > 0.0 {
            SlackStatus::Pass
        } else {
            SlackStatus::Fail
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SlackStatus::Pass => "pass",
            SlackStatus::Tight => "tight",
            SlackStatus::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EEntry {
    pub id: usize,
    pub dims: Vec<usize>,
    /// Some(m) when the subflag is basic(m).
    pub basic: Option<usize>,
    pub e_value: f64,
    pub slack: f64,
    pub status: SlackStatus,
}

#[derive(Debug, Clone)]
pub struct EReport {
    pub e_full: f64,
    pub entries: Vec<EEntry>,
    /// Over subflags other than V.
    pub min_slack: f64,
    pub argmin: usize,
    pub universe: &'static str,
    /// No entry below -SLACK_TOL.
    pub holds: bool,
    /// Every subflag other than V itself has slack above SLACK_TOL.
    pub strict: bool,
}

impl EReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,e_value,slack\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{}\n", e.id, fmt_sig(e.e_value), fmt_sig(e.slack)));
        }
        s
    }

    /// Smallest slack among subflags that are not basic.
    pub fn min_nonbasic_slack(&self) -> Option<f64> {
        self.entries.iter().filter(|e| e.basic.is_none()).map(|e| e.slack).reduce(f64::min)
    }
}

/// 16 significant digits, as a plain decimal or exponent form.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let r: f64 = format!("{:.15e}", x).parse().unwrap();
    if r.abs() < 1e-5 || r.abs() >= 1e16 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

pub fn check_entropy_condition(s: &System) -> Result<EReport, EntropyError> {
    let en = enumerate_subflags(&s.flag)?;
    check_with_enumeration(s, &en)
}

/// Evaluates every enumerated subflag; entropies are computed once per
/// (level, candidate space).
pub fn check_with_enumeration(s: &System, en: &SubflagEnumeration) -> Result<EReport, EntropyError> {
    let r = s.order();
    let mut tables: Vec<HashMap<&Subspace, f64>> = vec![HashMap::new()];
    for j in 1..=r {
        let ents =
            en.candidates[j].par_iter().map(|w| coset_entropy(&s.measures[j - 1], w)).collect::<Result<Vec<_>, _>>()?;
        tables.push(en.candidates[j].iter().zip(ents).collect());
    }
    let e_full = s.e_full();
    let basics: Vec<Subflag> = (0..=r).map(|m| Subflag::basic(&s.flag, m)).collect();
    let mut entries: Vec<EEntry> = en
        .subflags
        .par_iter()
        .enumerate()
        .map(|(id, sf)| {
            let ent: Vec<f64> = (1..=r).map(|j| tables[j][sf.space(j)]).collect();
            let dims = sf.dims();
            let e = s.e_from_parts(&dims, &ent);
            let slack = e - e_full;
            let basic = basics.iter().position(|b| b == sf);
            EEntry { id, dims, basic, e_value: e, slack, status: SlackStatus::of(slack) }
        })
        .collect();
    entries.sort_by_key(|e| e.id);
    // V itself always has slack 0 and is left out of the minimum
    let (argmin, min_slack) = entries
        .iter()
        .filter(|e| e.basic != Some(r))
        .fold((usize::MAX, f64::INFINITY), |(a, m), e| if e.slack < m { (e.id, e.slack) } else { (a, m) });
    let holds = entries.iter().all(|e| e.status != SlackStatus::Fail);
    let strict = entries.iter().filter(|e| e.basic != Some(r)).all(|e| e.status == SlackStatus::Pass);
    Ok(EReport { e_full, entries, min_slack, argmin, universe: en.universe, holds, strict })
}

/// c~_1 = c_1, c~_j = c_j - (1/2) sum_(l<j) eps^l.
pub fn perturb_thresholds(c: &[f64], eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(c.len());
    let mut acc = 0.0;
    let mut pw = 1.0;
    for (j, &cj) in c.iter().enumerate() {
        if j > 0 {
            pw *= eps;
            acc += pw;
        }
        out.push(cj - 0.5 * acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flags::binary_flag;
    use crate::qlinalg::RationalVector;

    fn k2_measure() -> Measure {
        Measure::uniform(2, &[0b00, 0b10, 0b01]).unwrap()
    }

    #[test]
    fn uniform_trivial_space() {
        let nu = Measure::uniform(3, &[1, 2, 3, 4, 5]).unwrap();
        let h = coset_entropy(&nu, &Subspace::zero(3)).unwrap();
        assert!((h - 5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn worked_k2_entropy() {
        let one = Subspace::span(&[RationalVector::ones(2)]).unwrap();
        let h = coset_entropy(&k2_measure(), &one).unwrap();
        assert!((h - 3f64.ln()).abs() < 1e-14);
        assert_eq!(coset_entropy(&k2_measure(), &Subspace::full(2)).unwrap(), 0.0);
    }

    #[test]
    fn normalization_enforced() {
        assert!(Measure::new(2, [(0, 0.5)]).is_err());
        assert!(Measure::new(2, [(0, -0.5), (1, 1.5)]).is_err());
        assert!(Measure::new(2, [(4, 1.0)]).is_err());
    }

    fn k2_system(c2: f64) -> System {
        System::new(binary_flag(1).unwrap(), vec![1.0, c2], vec![k2_measure()]).unwrap()
    }

    #[test]
    fn critical_threshold_is_tight() {
        let c2 = 1.0 - 1.0 / 3f64.ln();
        let s = k2_system(c2);
        let f = &s.flag;
        let e0 = e_value(&s, &Subflag::basic(f, 0)).unwrap();
        assert!((e0 - 1.0).abs() < 1e-14);
        assert!((e0 - s.e_full()).abs() < 1e-14);
        assert_eq!(e_value(&s, &Subflag::basic(f, 1)).unwrap(), s.e_full());
    }

    #[test]
    fn k2_strict_below_threshold() {
        let c2 = 0.05;
        let rep = check_entropy_condition(&k2_system(c2)).unwrap();
        assert!(rep.holds && rep.strict);
        assert!((rep.min_slack - ((1.0 - c2) * 3f64.ln() - 1.0)).abs() < 1e-14);
        assert_eq!(rep.entries[rep.argmin].basic, Some(0));
    }

    #[test]
    fn k2_fails_above_threshold() {
        let rep = check_entropy_condition(&k2_system(0.2)).unwrap();
        assert!(!rep.holds);
        let b0 = &rep.entries[rep.argmin];
        assert_eq!(b0.basic, Some(0));
        assert!(b0.slack < 0.0);
    }

    #[test]
    fn perturbation_shape() {
        let c = perturb_thresholds(&[1.0, 0.5, 0.25], 0.1);
        assert_eq!(c[0], 1.0);
        assert!((c[1] - 0.45).abs() < 1e-15);
        assert!((c[2] - (0.25 - 0.5 * 0.11)).abs() < 1e-15);
    }

    #[test]
    fn multinomial_small() {
        assert_eq!(multinomial(&[2, 1, 1]), BigUint::from(12u32));
        assert_eq!(multinomial(&[5]), BigUint::one());
    }

    #[test]
    fn sig_format() {
        assert_eq!(fmt_sig(0.28121134969637466), "0.2812113496963747");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(2.5e-30), "2.5e-30");
    }
}
