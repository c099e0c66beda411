//! Flags of subspaces of Q^k, the cell tree they induce on {0,1}^k,
//! genotypes, automorphisms and subflags.
//!
//! Coordinates are indexed by subsets S of [r]; S sits at position
//! sum_{s in S} 2^(r-s), so the element 1 is the most significant bit.
//! A cube point is a `u64` whose bit p is coordinate p.

mod genotype;
mod subflag;

pub use genotype::{
    cells_with_genotype_count, children_with_genotype_count, superset_weight_sum, total_children_count, Genotype,
    GenotypeError, GENOTYPE_LEVEL_GUARD,
};
pub use subflag::{enumerate_subflags, Subflag, SubflagEnumeration, SUBFLAG_LIMIT, UNIVERSE_TAG};

use crate::qlinalg::{bits_to_string, parse_bits, LinalgError, RationalVector, Subspace};
use std::collections::BTreeMap;

/// Largest order accepted by the explicit flag constructors.
pub const ORDER_GUARD: usize = 4;
/// Largest ambient dimension for which the whole cube is partitioned.
pub const CELL_GUARD: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlagError {
    #[error("order {0} outside 1..={ORDER_GUARD}")]
    Order(usize),
    #[error("ambient dimension {k} exceeds the cell guard {max}")]
    Capacity { k: usize, max: usize },
    #[error("level {0} out of range")]
    Level(usize),
    #[error("operation needs a binary flag")]
    Unsupported,
    #[error("flag spec line {line}: {msg}")]
    Spec { line: usize, msg: String },
    #[error("subflag enumeration exceeded {limit} candidates at level {level}")]
    EnumerationLimit { level: usize, limit: usize },
    #[error("not a subflag of this flag")]
    NotSubflag,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Genotype(#[from] GenotypeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlagKind {
    Binary,
    MaierTenenbaum,
    Custom,
}

impl FlagKind {
    pub fn name(self) -> &'static str {
        match self {
            FlagKind::Binary => "binary",
            FlagKind::MaierTenenbaum => "maier_tenenbaum",
            FlagKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flag {
    k: usize,
    spaces: Vec<Subspace>,
    kind: FlagKind,
    nondegenerate: bool,
}

impl Flag {
    fn assemble(k: usize, spaces: Vec<Subspace>, kind: FlagKind) -> Flag {
        let nondegenerate = is_nondegenerate(spaces.last().unwrap());
        Flag { k, spaces, kind, nondegenerate }
    }

    /// Validates nesting and V_0 = <1> for an arbitrary chain.
    pub fn custom(spaces: Vec<Subspace>) -> Result<Flag, FlagError> {
        let k = spaces.first().ok_or(FlagError::Level(0))?.ambient_dim();
        let one = Subspace::span(&[RationalVector::ones(k)])?;
        if spaces[0] != one {
            return Err(FlagError::Spec { line: 0, msg: "V_0 must be <1>".into() });
        }
        for i in 1..spaces.len() {
            if !spaces[i - 1].is_subspace_of(&spaces[i])? {
                return Err(FlagError::Spec { line: i, msg: format!("V_{} is not contained in V_{}", i - 1, i) });
            }
        }
        Ok(Self::assemble(k, spaces, FlagKind::Custom))
    }

    pub fn ambient_dim(&self) -> usize {
        self.k
    }

    /// Number of steps r.
    pub fn order(&self) -> usize {
        self.spaces.len() - 1
    }

    pub fn kind(&self) -> FlagKind {
        self.kind
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.nondegenerate
    }

    pub fn spaces(&self) -> &[Subspace] {
        &self.spaces
    }

    pub fn space(&self, i: usize) -> &Subspace {
        &self.spaces[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.dim()).collect()
    }

    /// dim(V_j / V_{j-1}) for j = 1..=r.
    pub fn dim_steps(&self) -> Vec<usize> {
        (1..self.spaces.len()).map(|j| self.spaces[j].dim() - self.spaces[j - 1].dim()).collect()
    }

    /// Gamma_i = V_i intersected with the cube.
    pub fn gamma_points(&self, i: usize) -> Result<Vec<u64>, FlagError> {
        Ok(self.spaces.get(i).ok_or(FlagError::Level(i))?.cube_point_bits()?)
    }

    /// Cube points of a cell are ordered as their 0/1 strings.
    pub fn display_order(&self, bits: u64) -> u64 {
        bits.reverse_bits() >> (64 - self.k)
    }

    pub fn point_string(&self, bits: u64) -> String {
        bits_to_string(bits, self.k)
    }
}

fn is_nondegenerate(top: &Subspace) -> bool {
    let basis = top.basis();
    let k = top.ambient_dim();
    (0..k).all(|p| (p + 1..k).all(|q| basis.iter().any(|b| b.entries()[p] != b.entries()[q])))
}

/// V_i = { x : x_S = x_{S cap [i]} }, dim 2^i, inside Q^(2^r).
pub fn binary_flag(r: usize) -> Result<Flag, FlagError> {
    if r == 0 || r > ORDER_GUARD {
        return Err(FlagError::Order(r));
    }
    let k = 1usize << r;
    let spaces = (0..=r)
        .map(|i| {
            let blocks: Vec<u64> = (0..1u64 << i)
                .map(|t| (0..k as u64).filter(|p| p >> (r - i) == t).fold(0, |b, p| b | 1 << p))
                .collect();
            Subspace::span_bits(k, &blocks)
        })
        .collect();
    Ok(Flag::assemble(k, spaces, FlagKind::Binary))
}

/// omega^j as a cube point: omega^j_S = 1 iff j in S.
pub fn omega_bits(r: usize, j: usize) -> u64 {
    let k = 1u64 << r;
    (0..k).filter(|p| p >> (r - j) & 1 == 1).fold(0, |b, p| b | 1 << p)
}

/// V_i = span(1, omega^1, ..., omega^i).
pub fn mt_flag(r: usize) -> Result<Flag, FlagError> {
    if r == 0 || r > ORDER_GUARD {
        return Err(FlagError::Order(r));
    }
    let k = 1usize << r;
    let ones = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let spaces = (0..=r)
        .map(|i| {
            let mut gens = vec![ones];
            gens.extend((1..=i).map(|j| omega_bits(r, j)));
            Subspace::span_bits(k, &gens)
        })
        .collect();
    Ok(Flag::assemble(k, spaces, FlagKind::MaierTenenbaum))
}

/// Parses a flag specification: line i (i >= 1) lists 0/1 generators of
/// V_i; the all-ones vector is always added. '#' starts a comment.
pub fn parse_flag_spec(text: &str) -> Result<Flag, FlagError> {
    let mut levels: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut k = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let mut gens = Vec::new();
        for tok in line.split_whitespace() {
            let bits = parse_bits(tok)
                .ok_or_else(|| FlagError::Spec { line: n + 1, msg: format!("bad generator {tok:?}") })?;
            match k {
                None => k = Some(tok.len()),
                Some(k0) if k0 != tok.len() => {
                    return Err(FlagError::Spec {
                        line: n + 1,
                        msg: format!("expected length {k0}, got {}", tok.len()),
                    })
                }
                _ => {}
            }
            gens.push(bits);
        }
        levels.push((n + 1, gens));
    }
    let k = k.ok_or(FlagError::Spec { line: 0, msg: "no levels".into() })?;
    if k > 64 {
        return Err(FlagError::Spec { line: 0, msg: "k > 64".into() });
    }
    let ones = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let mut spaces = vec![Subspace::span_bits(k, &[ones])];
    for (line, gens) in levels {
        let mut g = gens.clone();
        g.push(ones);
        let w = Subspace::span_bits(k, &g);
        if !spaces.last().unwrap().is_subspace_of(&w)? {
            return Err(FlagError::Spec { line, msg: "level does not contain the previous one".into() });
        }
        spaces.push(w);
    }
    Flag::custom(spaces)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub level: usize,
    pub members: Vec<u64>,
    pub genotype: Option<Genotype>,
}

impl Cell {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, bits: u64) -> bool {
        self.members.contains(&bits)
    }
}

/// Binary flags: bit index of the block with prefix t (A encoded as
/// sum 2^(i-a)) in the genotype mask (A encoded as sum 2^(a-1)).
fn block_mask_index(t: u64, i: usize) -> usize {
    let mut a = 0usize;
    for s in 1..=i {
        if t >> (i - s) & 1 == 1 {
            a |= 1 << (s - 1);
        }
    }
    a
}

fn binary_block(r: usize, i: usize, t: u64) -> u64 {
    let k = 1u64 << r;
    (0..k).filter(|p| p >> (r - i) == t).fold(0, |b, p| b | 1 << p)
}

/// Genotype of the level-i cell containing x, for the binary flag of order r.
pub fn binary_genotype(r: usize, i: usize, x: u64) -> Genotype {
    let mut g = Genotype::empty(i).unwrap();
    for t in 0..1u64 << i {
        let blk = binary_block(r, i, t);
        let v = x & blk;
        if v == 0 || v == blk {
            g.insert(block_mask_index(t, i));
        }
    }
    g
}

/// The cells of level i: cosets of V_i intersected with the cube.
pub fn cells_at_level(f: &Flag, i: usize) -> Result<Vec<Cell>, FlagError> {
    if i > f.order() {
        return Err(FlagError::Level(i));
    }
    if f.k > CELL_GUARD {
        return Err(FlagError::Capacity { k: f.k, max: CELL_GUARD });
    }
    let n = 1u64 << f.k;
    let mut groups: Vec<Vec<u64>> = if f.kind == FlagKind::Binary {
        let r = f.order();
        let blocks: Vec<u64> = (0..1u64 << i).map(|t| binary_block(r, i, t)).collect();
        // a block is free when constant, otherwise pinned to the point's values
        let mut map: BTreeMap<Vec<u64>, Vec<u64>> = BTreeMap::new();
        for x in 0..n {
            let key = blocks
                .iter()
                .map(|&b| {
                    let v = x & b;
                    if v == 0 || v == b {
                        u64::MAX
                    } else {
                        v
                    }
                })
                .collect();
            map.entry(key).or_default().push(x);
        }
        map.into_values().collect()
    } else {
        let w = &f.spaces[i];
        let mut map: BTreeMap<Vec<num_rational::BigRational>, Vec<u64>> = BTreeMap::new();
        for x in 0..n {
            map.entry(w.coset_key_bits(x)).or_default().push(x);
        }
        map.into_values().collect()
    };
    for g in groups.iter_mut() {
        g.sort_by_key(|&b| f.display_order(b));
    }
    groups.sort_by_key(|g| f.display_order(g[0]));
    Ok(groups
        .into_iter()
        .map(|members| {
            let genotype = (f.kind == FlagKind::Binary).then(|| binary_genotype(f.order(), i, members[0]));
            Cell { level: i, members, genotype }
        })
        .collect())
}

pub fn genotype_of(c: &Cell) -> Option<&Genotype> {
    c.genotype.as_ref()
}

/// The cells below one top cell, level by level, with child links.
#[derive(Debug, Clone)]
pub struct CellTree {
    /// levels[i] holds the level-i cells of the subtree.
    pub levels: Vec<Vec<Cell>>,
    /// children[i][c] indexes into levels[i-1]; empty at level 0.
    pub children: Vec<Vec<Vec<usize>>>,
}

impl CellTree {
    /// Subtree rooted at Gamma_r (the top cell through 0).
    pub fn gamma(f: &Flag) -> Result<CellTree, FlagError> {
        let r = f.order();
        let top = f.gamma_points(r)?;
        Self::below(f, r, &top)
    }

    /// Levels 0..=top_level of the cells inside the sorted point set `top`,
    /// which must be a union of level-`top_level` cells.
    pub fn below(f: &Flag, top_level: usize, top: &[u64]) -> Result<CellTree, FlagError> {
        let r = top_level;
        if r > f.order() {
            return Err(FlagError::Level(r));
        }
        let mut levels = Vec::with_capacity(r + 1);
        for i in 0..=r {
            let cells = if f.kind == FlagKind::Binary { cells_at_level(f, i)? } else { cells_inside(f, i, top)? };
            levels.push(cells.into_iter().filter(|c| top.binary_search(&c.members[0]).is_ok()).collect::<Vec<_>>());
        }
        let mut children = vec![vec![]; r + 1];
        children[0] = vec![vec![]; levels[0].len()];
        for i in 1..=r {
            let mut owner: BTreeMap<u64, usize> = BTreeMap::new();
            for (ci, c) in levels[i].iter().enumerate() {
                for &m in &c.members {
                    owner.insert(m, ci);
                }
            }
            let mut ch = vec![vec![]; levels[i].len()];
            for (cj, c) in levels[i - 1].iter().enumerate() {
                ch[owner[&c.members[0]]].push(cj);
            }
            children[i] = ch;
        }
        Ok(CellTree { levels, children })
    }

    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }

    /// Index of Gamma_i (the level-i cell through 0).
    pub fn gamma_index(&self, i: usize) -> usize {
        self.levels[i].iter().position(|c| c.contains(0)).expect("0 lies in every Gamma_i")
    }
}

/// Cells inside a given point set, grouped by exact coset; used when the
/// full cube is too large to partition.
fn cells_inside(f: &Flag, i: usize, pts: &[u64]) -> Result<Vec<Cell>, FlagError> {
    let w = &f.spaces[i];
    let mut map: BTreeMap<Vec<num_rational::BigRational>, Vec<u64>> = BTreeMap::new();
    for &x in pts {
        map.entry(w.coset_key_bits(x)).or_default().push(x);
    }
    let mut groups: Vec<Vec<u64>> = map.into_values().collect();
    for g in groups.iter_mut() {
        g.sort_by_key(|&b| f.display_order(b));
    }
    groups.sort_by_key(|g| f.display_order(g[0]));
    Ok(groups
        .into_iter()
        .map(|members| {
            let genotype = (f.kind == FlagKind::Binary).then(|| binary_genotype(f.order(), i, members[0]));
            Cell { level: i, members, genotype }
        })
        .collect())
}

pub fn sorted_points(mut v: Vec<u64>) -> Vec<u64> {
    v.sort_unstable();
    v
}

/// A coordinate permutation: coordinate p moves to perm[p].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Automorphism {
    pub a: u64,
    pub j: usize,
    pub perm: Vec<usize>,
}

impl Automorphism {
    pub fn apply_bits(&self, x: u64) -> u64 {
        (0..self.perm.len()).filter(|&p| x >> p & 1 == 1).fold(0, |b, p| b | 1 << self.perm[p])
    }

    pub fn apply_vector(&self, v: &RationalVector) -> RationalVector {
        let mut out = v.entries().to_vec();
        for (p, x) in v.entries().iter().enumerate() {
            out[self.perm[p]] = x.clone();
        }
        RationalVector::new(out)
    }

    pub fn apply_subspace(&self, w: &Subspace) -> Subspace {
        let b: Vec<RationalVector> = w.basis().iter().map(|v| self.apply_vector(v)).collect();
        Subspace::span_in(w.ambient_dim(), &b).expect("same ambient dimension")
    }
}

/// pi(A, j): S -> S xor {j} when S cap [j-1] = A. `a` is the prefix
/// encoding of A (bits of positions 1..j-1, element 1 most significant).
pub fn automorphism_generators(f: &Flag) -> Result<Vec<Automorphism>, FlagError> {
    if f.kind != FlagKind::Binary {
        return Err(FlagError::Unsupported);
    }
    let r = f.order();
    let k = f.k;
    let mut out = Vec::new();
    for j in 1..=r {
        for a in 0..1u64 << (j - 1) {
            let perm = (0..k).map(|p| if (p as u64) >> (r - j + 1) == a { p ^ (1 << (r - j)) } else { p }).collect();
            out.push(Automorphism { a, j, perm });
        }
    }
    Ok(out)
}

pub fn apply_automorphism(s: &Automorphism, sf: &Subflag) -> Subflag {
    Subflag::new(sf.spaces().iter().map(|w| s.apply_subspace(w)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(f: &Flag, v: &[u64]) -> Vec<String> {
        v.iter().map(|&b| f.point_string(b)).collect()
    }

    #[test]
    fn binary_dims() {
        assert_eq!(binary_flag(1).unwrap().dims(), vec![1, 2]);
        assert_eq!(binary_flag(2).unwrap().dims(), vec![1, 2, 4]);
        assert_eq!(binary_flag(3).unwrap().dims(), vec![1, 2, 4, 8]);
        assert!(binary_flag(0).is_err());
        assert!(binary_flag(5).is_err());
        assert!(binary_flag(3).unwrap().is_nondegenerate());
    }

    #[test]
    fn figure_one_v1() {
        let f = binary_flag(2).unwrap();
        let mut pts = f.gamma_points(1).unwrap();
        pts.sort_by_key(|&b| f.display_order(b));
        assert_eq!(strs(&f, &pts), vec!["0000", "0011", "1100", "1111"]);
        assert!(f.space(1).contains(&RationalVector::parse01("0011").unwrap()).unwrap());
    }

    #[test]
    fn mt_basics() {
        assert_eq!(mt_flag(1).unwrap().spaces(), binary_flag(1).unwrap().spaces());
        let f = mt_flag(2).unwrap();
        assert_eq!(f.gamma_points(2).unwrap().len(), 6);
        assert_eq!(f.point_string(omega_bits(2, 1)), "0011");
        assert_eq!(f.point_string(omega_bits(2, 2)), "0101");
        let f3 = mt_flag(3).unwrap();
        assert_eq!(f3.dims(), vec![1, 2, 3, 4]);
        assert!(f3.is_nondegenerate());
    }

    #[test]
    fn figure_one_cells() {
        let f = binary_flag(2).unwrap();
        assert_eq!(cells_at_level(&f, 2).unwrap().len(), 1);
        let mut sizes: Vec<usize> = cells_at_level(&f, 1).unwrap().iter().map(|c| c.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![4, 2, 2, 2, 2, 1, 1, 1, 1]);
        let l0 = cells_at_level(&f, 0).unwrap();
        assert_eq!(l0.len(), 15);
        assert_eq!(l0[0].members, vec![0, 15]);
    }

    #[test]
    fn generic_and_binary_cells_agree() {
        let f = binary_flag(2).unwrap();
        let g = Flag::custom(f.spaces().to_vec()).unwrap();
        for i in 0..=2 {
            let a: Vec<Vec<u64>> = cells_at_level(&f, i).unwrap().into_iter().map(|c| c.members).collect();
            let b: Vec<Vec<u64>> = cells_at_level(&g, i).unwrap().into_iter().map(|c| c.members).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn spec_parsing() {
        let f = parse_flag_spec("# binary order 2\n1100 0011\n1000 0100 0010\n").unwrap();
        assert_eq!(f.dims(), vec![1, 2, 4]);
        assert_eq!(f.kind(), FlagKind::Custom);
        assert!(parse_flag_spec("1100\n1010\n").is_err());
        assert!(parse_flag_spec("110\n1010\n").is_err());
        assert!(parse_flag_spec("11x0\n").is_err());
    }

    #[test]
    fn automorphisms_are_involutions_preserving_flag() {
        for r in 1..=3 {
            let f = binary_flag(r).unwrap();
            for s in automorphism_generators(&f).unwrap() {
                for p in 0..f.ambient_dim() {
                    assert_eq!(s.perm[s.perm[p]], p);
                }
                for w in f.spaces() {
                    assert_eq!(&s.apply_subspace(w), w);
                }
            }
        }
        assert!(automorphism_generators(&mt_flag(2).unwrap()).is_err());
    }

    #[test]
    fn block_swap_r2() {
        let f = binary_flag(2).unwrap();
        let gens = automorphism_generators(&f).unwrap();
        let s = gens.iter().find(|g| g.j == 1 && g.a == 0).unwrap();
        let x = parse_bits("1000").unwrap();
        assert_eq!(f.point_string(s.apply_bits(x)), "0010");
    }
}
