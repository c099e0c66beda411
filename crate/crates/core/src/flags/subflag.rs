use super::{Flag, FlagError};
use crate::qlinalg::Subspace;
use std::collections::HashSet;

/// Candidate spaces per level may not exceed this many.
pub const SUBFLAG_LIMIT: usize = 1_000_000;

/// Every enumeration is over this family of subspaces only.
pub const UNIVERSE_TAG: &str = "spans of 1 and cube points of V_i";

/// A chain <1> = V'_0 <= ... <= V'_r with V'_i <= V_i.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subflag {
    spaces: Vec<Subspace>,
}

impl Subflag {
    pub fn new(spaces: Vec<Subspace>) -> Self {
        Subflag { spaces }
    }

    /// V'_i = V_min(m, i)
    pub fn basic(f: &Flag, m: usize) -> Self {
        let r = f.order();
        Subflag { spaces: (0..=r).map(|i| f.space(i.min(m)).clone()).collect() }
    }

    pub fn spaces(&self) -> &[Subspace] {
        &self.spaces
    }

    pub fn space(&self, i: usize) -> &Subspace {
        &self.spaces[i]
    }

    pub fn order(&self) -> usize {
        self.spaces.len() - 1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.dim()).collect()
    }

    pub fn is_subflag_of(&self, f: &Flag) -> bool {
        if self.spaces.len() != f.spaces().len() || self.spaces[0] != *f.space(0) {
            return false;
        }
        (0..self.spaces.len()).all(|i| {
            self.spaces[i].is_subspace_of(f.space(i)).unwrap_or(false)
                && (i == 0 || self.spaces[i - 1].is_subspace_of(&self.spaces[i]).unwrap_or(false))
        })
    }

    /// Smallest m with self = basic(m), if any.
    pub fn basic_index(&self, f: &Flag) -> Option<usize> {
        (0..=f.order()).find(|&m| *self == Subflag::basic(f, m))
    }

    pub fn sum(&self, other: &Subflag) -> Result<Subflag, FlagError> {
        let s = self.spaces.iter().zip(&other.spaces).map(|(a, b)| a.sum(b)).collect::<Result<_, _>>()?;
        Ok(Subflag { spaces: s })
    }

    pub fn intersect(&self, other: &Subflag) -> Result<Subflag, FlagError> {
        let s = self.spaces.iter().zip(&other.spaces).map(|(a, b)| a.intersect(b)).collect::<Result<_, _>>()?;
        Ok(Subflag { spaces: s })
    }
}

#[derive(Debug, Clone)]
pub struct SubflagEnumeration {
    /// candidates[i]: admissible V'_i, sorted by (dim, canonical form).
    pub candidates: Vec<Vec<Subspace>>,
    /// All chains; the position in this list is the subflag id.
    pub subflags: Vec<Subflag>,
    pub universe: &'static str,
}

/// All subflags whose spaces are spanned by 1 and cube points.
pub fn enumerate_subflags(f: &Flag) -> Result<SubflagEnumeration, FlagError> {
    enumerate_subflags_with_limit(f, SUBFLAG_LIMIT)
}

pub fn enumerate_subflags_with_limit(f: &Flag, limit: usize) -> Result<SubflagEnumeration, FlagError> {
    let r = f.order();
    let k = f.ambient_dim();
    let ones = f.space(0).cube_point_bits()?.into_iter().max().unwrap();
    let pts: Vec<u64> = f.gamma_points(r)?.into_iter().filter(|&p| p != 0 && p != ones).collect();

    // breadth-first closure under "add one cube point"
    let start = Subspace::span_bits(k, &[ones]);
    let mut seen: HashSet<Subspace> = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for w in &frontier {
            for &p in &pts {
                if w.contains_bits(p) {
                    continue;
                }
                let w2 = w.extend_bits(p);
                if seen.insert(w2.clone()) {
                    if seen.len() > limit {
                        return Err(FlagError::EnumerationLimit { level: r, limit });
                    }
                    next.push(w2);
                }
            }
        }
        frontier = next;
    }
    let mut all: Vec<Subspace> = seen.into_iter().collect();
    all.sort_by(|a, b| a.dim().cmp(&b.dim()).then_with(|| a.cmp(b)));

    let mut candidates = Vec::with_capacity(r + 1);
    for i in 0..=r {
        let c: Vec<Subspace> = all.iter().filter(|w| w.is_subspace_of(f.space(i)).unwrap()).cloned().collect();
        candidates.push(c);
    }

    // nested chains, depth first in candidate order
    let mut subflags = Vec::new();
    let mut chain = vec![candidates[0][0].clone()];
    extend_chains(&candidates, &mut chain, &mut subflags, limit)?;
    Ok(SubflagEnumeration { candidates, subflags, universe: UNIVERSE_TAG })
}

fn extend_chains(
    cands: &[Vec<Subspace>],
    chain: &mut Vec<Subspace>,
    out: &mut Vec<Subflag>,
    limit: usize,
) -> Result<(), FlagError> {
    let i = chain.len();
    if i == cands.len() {
        if out.len() >= limit {
            return Err(FlagError::EnumerationLimit { level: i - 1, limit });
        }
        out.push(Subflag::new(chain.clone()));
        return Ok(());
    }
    for w in &cands[i] {
        if chain[i - 1].is_subspace_of(w).unwrap() {
            chain.push(w.clone());
            extend_chains(cands, chain, out, limit)?;
            chain.pop();
        }
    }
    Ok(())
}
