//! Largest family of distinct subsets with a common element sum.

use crate::logset::{ceil_snap, sample_log_set};
use crate::{run_trials, wilson, Proportion, SimError, SimRng};
use rand::{Rng, SeedableRng};
use std::collections::{HashMap, HashSet};

/// Exact census limit on |A|.
pub const EXACT_GUARD: usize = 26;
/// At most this many witness subsets are listed.
pub const WITNESS_CAP: usize = 4096;
pub const DEFAULT_DRAWS: u64 = 1 << 16;
const CHUNK: usize = 1 << 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    /// Birthday search over `draws` uniform subsets.
    Randomized {
        draws: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityResult {
    pub k_max: u64,
    pub witness_sum: u128,
    /// Index lists into A, ordered by (size, indices); capped at WITNESS_CAP.
    pub witness_subsets: Vec<Vec<usize>>,
    pub exact: bool,
}

impl MultiplicityResult {
    pub fn witness_values(&self, a: &[u64]) -> Vec<Vec<u64>> {
        self.witness_subsets.iter().map(|s| s.iter().map(|&i| a[i]).collect()).collect()
    }
}

/// Largest k with k distinct subsets of A sharing a sum. Ties go to the
/// smallest sum.
pub fn max_subset_sum_multiplicity(a: &[u64], mode: Mode) -> Result<MultiplicityResult, SimError> {
    match mode {
        Mode::Exact => {
            if a.len() > EXACT_GUARD {
                return Err(SimError::Capacity { n: a.len(), max: EXACT_GUARD });
            }
            Ok(exact_census(a))
        }
        Mode::Randomized { draws, seed } => Ok(birthday(a, draws, seed)),
    }
}

fn mask_indices(words: &[u64]) -> Vec<usize> {
    let mut v = Vec::new();
    for (w, &x) in words.iter().enumerate() {
        let mut x = x;
        while x != 0 {
            v.push(w * 64 + x.trailing_zeros() as usize);
            x &= x - 1;
        }
    }
    v
}

fn order_witnesses(mut w: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    w.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.cmp(y)));
    w.truncate(WITNESS_CAP);
    w
}

trait Sum: Copy + Ord + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + Default {
    fn from_u64(x: u64) -> Self;
    fn widen(self) -> u128;
    fn half(self) -> Self;
}

impl Sum for u64 {
    fn from_u64(x: u64) -> Self {
        x
    }
    fn widen(self) -> u128 {
        self as u128
    }
    fn half(self) -> Self {
        self >> 1
    }
}

impl Sum for u128 {
    fn from_u64(x: u64) -> Self {
        x as u128
    }
    fn widen(self) -> u128 {
        self
    }
    fn half(self) -> Self {
        self >> 1
    }
}

/// All subset sums in increasing order, built by repeated merging of S with S + x.
fn sorted_sums<T: Sum>(a: &[u64]) -> Vec<T> {
    let mut v = Vec::with_capacity(1 << a.len());
    v.push(T::default());
    let mut buf = Vec::with_capacity(1 << a.len());
    for &x in a {
        let x = T::from_u64(x);
        buf.clear();
        let n = v.len();
        let (mut p, mut q) = (0, 0);
        while p < n && q < n {
            let t = v[q] + x;
            if v[p] <= t {
                buf.push(v[p]);
                p += 1;
            } else {
                buf.push(t);
                q += 1;
            }
        }
        buf.extend_from_slice(&v[p..]);
        buf.extend(v[q..].iter().map(|&y| y + x));
        std::mem::swap(&mut v, &mut buf);
    }
    v
}

/// Longest run of equal values in a sorted list; first run wins ties.
fn longest_run<T: Sum>(v: &[T], best: &mut (usize, T)) {
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        if j - i > best.0 {
            *best = (j - i, v[i]);
        }
        i = j;
    }
}

fn exact_census(a: &[u64]) -> MultiplicityResult {
    let total: u128 = a.iter().map(|&x| x as u128).sum();
    if total <= u64::MAX as u128 {
        census::<u64>(a, total as u64)
    } else {
        census::<u128>(a, total)
    }
}

/// Meet in the middle: the sum axis is cut into windows holding at most
/// CHUNK subset sums; each window is materialized and sorted. Witnesses are
/// recovered afterwards for the winning sum.
fn census<T: Sum>(a: &[u64], total: T) -> MultiplicityResult {
    let h = a.len() / 2;
    let mut best = (0usize, T::default());
    if 1usize << a.len() <= CHUNK {
        longest_run(&sorted_sums::<T>(a), &mut best);
    } else {
        let left = sorted_sums::<T>(&a[..h]);
        let right = sorted_sums::<T>(&a[h..]);
        census_window(&left, &right, T::default(), total, &mut best);
    }
    let witnesses = subsets_with_sum(a, best.1);
    MultiplicityResult { k_max: best.0 as u64, witness_sum: best.1.widen(), witness_subsets: witnesses, exact: true }
}

/// Index range of right-half sums t with lo <= s + t <= hi.
fn right_range<T: Sum>(rs: &[T], s: T, lo: T, hi: T) -> (usize, usize) {
    if s > hi {
        return (0, 0);
    }
    let a = if lo > s { rs.partition_point(|&v| v < lo - s) } else { 0 };
    let b = rs.partition_point(|&v| v <= hi - s);
    (a, b.max(a))
}

/// Windows are [lo, hi] inclusive so that the top of the range never overflows.
fn census_window<T: Sum>(left: &[T], right: &[T], lo: T, hi: T, best: &mut (usize, T)) {
    let count: usize = left
        .iter()
        .map(|&s| {
            let (a, b) = right_range(right, s, lo, hi);
            b - a
        })
        .sum();
    if count == 0 {
        return;
    }
    if count > CHUNK && lo < hi {
        let mid = lo + (hi - lo).half();
        census_window(left, right, lo, mid, best);
        census_window(left, right, mid + T::from_u64(1), hi, best);
        return;
    }
    let mut v: Vec<T> = Vec::with_capacity(count);
    for &s in left {
        let (a, b) = right_range(right, s, lo, hi);
        v.extend(right[a..b].iter().map(|&t| s + t));
    }
    v.sort_unstable();
    longest_run(&v, best);
}

/// Every subset with the given sum (capped), by pairing sorted half sums.
fn subsets_with_sum<T: Sum>(a: &[u64], target: T) -> Vec<Vec<usize>> {
    let h = a.len() / 2;
    let masked = |part: &[u64]| {
        let mut v: Vec<(T, u32)> = (0u32..1 << part.len())
            .map(|m| {
                let s =
                    (0..part.len()).filter(|&i| m >> i & 1 == 1).fold(T::default(), |t, i| t + T::from_u64(part[i]));
                (s, m)
            })
            .collect();
        v.sort_unstable();
        v
    };
    let left = masked(&a[..h]);
    let right = masked(&a[h..]);
    let mut out = Vec::new();
    for &(s, m) in &left {
        if s > target {
            continue;
        }
        let need = target - s;
        let start = right.partition_point(|p| p.0 < need);
        for &(t, m2) in right[start..].iter().take_while(|p| p.0 == need) {
            debug_assert!(s + t == target);
            out.push(mask_indices(&[(m as u64) | (m2 as u64) << h]));
        }
    }
    order_witnesses(out)
}

fn birthday(a: &[u64], draws: u64, seed: u64) -> MultiplicityResult {
    let n = a.len();
    let words = n.div_ceil(64).max(1);
    let mut rng = SimRng::seed_from_u64(seed);
    let mut seen: HashMap<u128, HashSet<Vec<u64>>> = HashMap::new();
    for _ in 0..draws.max(1) {
        let mut m: Vec<u64> = (0..words).map(|_| rng.gen()).collect();
        if n % 64 != 0 {
            m[words - 1] &= (1u64 << (n % 64)) - 1;
        }
        if n == 0 {
            m[0] = 0;
        }
        let s: u128 = mask_indices(&m).iter().map(|&i| a[i] as u128).sum();
        seen.entry(s).or_default().insert(m);
    }
    let (sum, set) = seen.iter().max_by(|x, y| x.1.len().cmp(&y.1.len()).then_with(|| y.0.cmp(x.0))).unwrap();
    let w = set.iter().map(|m| mask_indices(m)).collect();
    MultiplicityResult { k_max: set.len() as u64, witness_sum: *sum, witness_subsets: order_witnesses(w), exact: false }
}

/// Exact when |A| is within the guard, otherwise a birthday search seeded from rng.
pub fn multiplicity_auto<R: Rng + ?Sized>(a: &[u64], draws: u64, rng: &mut R) -> MultiplicityResult {
    if a.len() <= EXACT_GUARD {
        exact_census(a)
    } else {
        birthday(a, draws, rng.gen())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualSumsTrial {
    pub trial: u64,
    pub set_size: usize,
    pub k_max: u64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqualSumsReport {
    pub d: u64,
    pub c: f64,
    pub k: u64,
    /// Integers in [window_lo, d] are eligible.
    pub window_lo: u64,
    pub trials: Vec<EqualSumsTrial>,
    pub proportion: Proportion,
}

/// Fraction of trials where A meet [D^c, D] has k distinct subsets with equal sums.
pub fn equal_sums_probability(
    d: u64,
    c: f64,
    k: u64,
    trials: u64,
    seed: u64,
    workers: usize,
    draws: u64,
) -> Result<EqualSumsReport, SimError> {
    if trials == 0 {
        return Err(SimError::Param("trials must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&c) || k == 0 || d < 2 {
        return Err(SimError::Param(format!("need 0 <= c <= 1, k >= 1, D >= 2 (c={c}, k={k}, D={d})")));
    }
    let window_lo = ceil_snap((d as f64).powf(c)).max(1);
    let rows = run_trials(seed, trials, workers, |t, rng| -> Result<EqualSumsTrial, SimError> {
        let set = sample_log_set(window_lo - 1, d, rng)?;
        let r = multiplicity_auto(&set.elements, draws, rng);
        Ok(EqualSumsTrial { trial: t, set_size: set.len(), k_max: r.k_max, exact: r.exact })
    })?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let hits = rows.iter().filter(|r| r.k_max >= k).count() as u64;
    Ok(EqualSumsReport { d, c, k, window_lo, trials: rows, proportion: wilson(hits, trials) })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmplifyWindow {
    /// Integers x with lo <= x <= hi.
    pub lo: u64,
    pub hi: u64,
    pub size: usize,
    pub k_max: u64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplifyReport {
    pub elements: Vec<u64>,
    pub windows: Vec<AmplifyWindow>,
    /// Witnesses index `elements`.
    pub result: MultiplicityResult,
}

/// Finds k equal sums inside each window [D2^(alpha^(i+1)), D2^(alpha^i)) of
/// A meet [D1, D2] and takes unions across the successful windows, one family
/// member per window: k^(#successes) distinct sets with a common sum.
pub fn amplify_demo<R: Rng + ?Sized>(
    d1: u64,
    d2: u64,
    k: u64,
    alpha: f64,
    draws: u64,
    rng: &mut R,
) -> Result<AmplifyReport, SimError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SimError::Param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if d1 < 2 || d1 >= d2 {
        return Err(SimError::Range { lo: d1, hi: d2 });
    }
    if k == 0 || k as usize > WITNESS_CAP {
        return Err(SimError::Param(format!("k must lie in 1..={WITNESS_CAP}")));
    }
    let set = sample_log_set(d1 - 1, d2, rng)?;
    let el = &set.elements;
    let lnd = (d2 as f64).ln();
    let mut windows = Vec::new();
    let mut families: Vec<(u128, Vec<Vec<usize>>)> = Vec::new();
    let mut i = 0i32;
    loop {
        let top = (alpha.powi(i) * lnd).exp();
        if top <= d1 as f64 {
            break;
        }
        let bottom = (alpha.powi(i + 1) * lnd).exp();
        let lo = ceil_snap(bottom).max(d1);
        let hi = if i == 0 { d2 } else { ceil_snap(top) - 1 };
        i += 1;
        if lo > hi {
            continue;
        }
        let start = el.partition_point(|&x| x < lo);
        let sub = set.between(lo, hi);
        let r = multiplicity_auto(sub, draws, rng);
        let success = r.k_max >= k;
        if success {
            let fam =
                r.witness_subsets.iter().take(k as usize).map(|s| s.iter().map(|&j| j + start).collect()).collect();
            families.push((r.witness_sum, fam));
        }
        windows.push(AmplifyWindow { lo, hi, size: sub.len(), k_max: r.k_max, success });
    }
    let k_max =
        k.checked_pow(families.len() as u32).ok_or_else(|| SimError::Guard("multiplicity overflows u64".into()))?;
    let witness_sum = families.iter().map(|f| f.0).sum();
    let mut witnesses = vec![Vec::new()];
    for (_, fam) in &families {
        let mut next = Vec::new();
        'outer: for w in &witnesses {
            for b in fam {
                if next.len() >= WITNESS_CAP {
                    break 'outer;
                }
                let mut u: Vec<usize> = w.clone();
                u.extend(b);
                u.sort_unstable();
                next.push(u);
            }
        }
        witnesses = next;
    }
    Ok(AmplifyReport {
        elements: set.elements.clone(),
        windows,
        result: MultiplicityResult { k_max, witness_sum, witness_subsets: witnesses, exact: false },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_five_eight() {
        let r = max_subset_sum_multiplicity(&[3, 5, 8], Mode::Exact).unwrap();
        assert_eq!((r.k_max, r.witness_sum), (2, 8));
        assert_eq!(r.witness_values(&[3, 5, 8]), vec![vec![8], vec![3, 5]]);
    }

    #[test]
    fn powers_of_two() {
        let r = max_subset_sum_multiplicity(&[1, 2, 4, 8], Mode::Exact).unwrap();
        assert_eq!(r.k_max, 1);
        assert_eq!(r.witness_sum, 0);
    }

    #[test]
    fn guard() {
        let a: Vec<u64> = (1..=27).collect();
        assert_eq!(max_subset_sum_multiplicity(&a, Mode::Exact), Err(SimError::Capacity { n: 27, max: EXACT_GUARD }));
    }

    #[test]
    fn windows_split() {
        // {1..=22} has 4M subset sums, so the census runs over several windows
        let a: Vec<u64> = (1..=22).collect();
        let r = max_subset_sum_multiplicity(&a, Mode::Exact).unwrap();
        // central coefficient of prod (1 + x^i), i <= 22
        assert_eq!(r.k_max, 53222);
        assert_eq!(r.witness_sum, 126);
    }

    #[test]
    fn randomized_finds_small_collision() {
        let r = max_subset_sum_multiplicity(&[3, 5, 8], Mode::Randomized { draws: 200, seed: 9 }).unwrap();
        assert_eq!(r.k_max, 2);
        assert!(!r.exact);
    }
}
