//! Genotypes: sets of subsets A of [i], stored as a 2^i-bit mask with
//! A at bit position sum_{a in A} 2^(a-1).

use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::fmt;

pub const GENOTYPE_LEVEL_GUARD: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenotypeError {
    #[error("genotype level {0} exceeds guard {GENOTYPE_LEVEL_GUARD}")]
    Level(usize),
    #[error("child genotype is not contained in the consolidation of its parent")]
    InvalidChild,
    #[error("levels do not fit: parent {parent}, child {child}")]
    LevelMismatch { parent: usize, child: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype {
    level: usize,
    words: Vec<u64>,
}

fn nwords(level: usize) -> usize {
    ((1usize << level) + 63) / 64
}

impl Genotype {
    pub fn empty(level: usize) -> Result<Self, GenotypeError> {
        if level > GENOTYPE_LEVEL_GUARD {
            return Err(GenotypeError::Level(level));
        }
        Ok(Genotype { level, words: vec![0; nwords(level)] })
    }

    /// The whole power set of [level].
    pub fn full(level: usize) -> Result<Self, GenotypeError> {
        let mut g = Self::empty(level)?;
        for a in 0..(1usize << level) {
            g.insert(a);
        }
        Ok(g)
    }

    /// Small genotypes (level <= 6) straight from a mask.
    pub fn from_mask(level: usize, mask: u64) -> Self {
        assert!(level <= 6, "from_mask needs level <= 6");
        let width = 1u32 << level;
        let m = if width == 64 { mask } else { mask & ((1u64 << width) - 1) };
        Genotype { level, words: vec![m] }
    }

    pub fn from_sets(level: usize, sets: &[usize]) -> Result<Self, GenotypeError> {
        let mut g = Self::empty(level)?;
        for &a in sets {
            assert!(a < 1 << level);
            g.insert(a);
        }
        Ok(g)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Mask as u64 when level <= 6.
    pub fn mask(&self) -> Option<u64> {
        (self.level <= 6).then(|| self.words[0])
    }

    pub fn insert(&mut self, a: usize) {
        self.words[a / 64] |= 1 << (a % 64);
    }

    pub fn contains(&self, a: usize) -> bool {
        self.words[a / 64] >> (a % 64) & 1 == 1
    }

    /// |g|
    pub fn size(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_full(&self) -> bool {
        self.size() == 1u64 << self.level
    }

    pub fn is_subset_of(&self, other: &Genotype) -> bool {
        self.level == other.level && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Members A (as indices) in increasing order.
    pub fn members(&self) -> Vec<usize> {
        (0..(1usize << self.level)).filter(|&a| self.contains(a)).collect()
    }

    /// g* = { A in P[i-1] : A in g and A + {i} in g }; None at level 0.
    pub fn consolidate(&self) -> Option<Genotype> {
        if self.level == 0 {
            return None;
        }
        let half = 1usize << (self.level - 1);
        let mut out = Genotype { level: self.level - 1, words: vec![0; nwords(self.level - 1)] };
        if half >= 64 {
            let hw = half / 64;
            for w in 0..hw {
                out.words[w] = self.words[w] & self.words[w + hw];
            }
        } else {
            let lo = self.words[0] & ((1u64 << half) - 1);
            let hi = self.words[0] >> half;
            out.words[0] = lo & hi;
        }
        Some(out)
    }

    /// Iterated consolidations g^(0) = g, g^(1), ..., g^(i).
    pub fn consolidations(&self) -> Vec<Genotype> {
        let mut v = vec![self.clone()];
        while let Some(n) = v.last().unwrap().consolidate() {
            v.push(n);
        }
        v
    }

    /// Defects Delta^1 .. Delta^(i+1).
    pub fn defects(&self) -> Vec<u64> {
        let cons = self.consolidations();
        (1..=self.level + 1)
            .map(|m| {
                let prev = cons[m - 1].size();
                let next = cons.get(m).map_or(0, |g| g.size());
                prev - 2 * next
            })
            .collect()
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.level)?;
        for w in self.words.iter().rev() {
            write!(f, "{:016x}", w)?;
        }
        Ok(())
    }
}

/// Number of children of genotype `child` under a cell of genotype `g`.
pub fn children_with_genotype_count(g: &Genotype, child: &Genotype) -> Result<BigUint, GenotypeError> {
    let gs = g.consolidate().ok_or(GenotypeError::LevelMismatch { parent: 0, child: child.level })?;
    if child.level != gs.level {
        return Err(GenotypeError::LevelMismatch { parent: g.level, child: child.level });
    }
    if !child.is_subset_of(&gs) {
        return Err(GenotypeError::InvalidChild);
    }
    Ok(BigUint::one() << (g.size() - gs.size() - child.size()))
}

/// Total number of children: 2^(|g| - 2|g*|) 3^|g*|.
pub fn total_children_count(g: &Genotype) -> BigUint {
    match g.consolidate() {
        None => BigUint::one(),
        Some(gs) => {
            let s = gs.size();
            (BigUint::one() << (g.size() - 2 * s)) * BigUint::from(3u32).pow(s as u32)
        }
    }
}

/// Number of level-i cells of genotype g in the binary flag of order r.
pub fn cells_with_genotype_count(r: usize, g: &Genotype) -> BigUint {
    let i = g.level;
    assert!(i <= r);
    let base = (BigUint::one() << (1usize << (r - i))) - BigUint::from(2u32);
    let e = (1u64 << i) - g.size();
    if e == 0 {
        return BigUint::one();
    }
    if base.is_zero() {
        return BigUint::zero();
    }
    base.pow(e as u32)
}

/// sum over level-j genotypes g with g* containing g' of 2^(-|g*|), exactly.
pub fn superset_weight_sum(j: usize, g_prime: &Genotype) -> num_rational::BigRational {
    use num_bigint::BigInt;
    assert!((1..=4).contains(&j) && g_prime.level + 1 == j);
    let half = 1u32 << (j - 1);
    let low = (1u64 << half) - 1;
    let gp = g_prime.words[0];
    let mut num = BigInt::zero();
    for m in 0..(1u64 << (1u32 << j)) {
        let gs = m & low & (m >> half);
        if gp & !gs == 0 {
            num += BigInt::one() << (half - gs.count_ones());
        }
    }
    num_rational::BigRational::new(num, BigInt::one() << half)
}
