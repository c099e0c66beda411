//! Exact rational linear algebra on Q^k.
//!
//! Subspaces are stored in reduced row-echelon form with unit pivots, which
//! makes equality a plain structural comparison. `basis()` hands out the
//! same rows with denominators cleared.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Largest ambient dimension for which cube points are enumerated.
pub const CUBE_GUARD: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("ambient dimension {k} exceeds the cube enumeration guard {max}")]
    Capacity { k: usize, max: usize },
    #[error("cannot infer ambient dimension from an empty generator list")]
    NoGenerators,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A vector in Q^k.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalVector(Vec<BigRational>);

impl RationalVector {
    pub fn new(entries: Vec<BigRational>) -> Self {
        RationalVector(entries)
    }

    pub fn from_ints(xs: &[i64]) -> Self {
        RationalVector(xs.iter().map(|&x| BigRational::from_integer(x.into())).collect())
    }

    pub fn zeros(k: usize) -> Self {
        RationalVector(vec![BigRational::zero(); k])
    }

    pub fn ones(k: usize) -> Self {
        RationalVector(vec![BigRational::one(); k])
    }

    /// Cube point whose coordinate `p` is bit `p` of `bits`.
    pub fn from_bits(bits: u64, k: usize) -> Self {
        RationalVector(
            (0..k).map(|p| if bits >> p & 1 == 1 { BigRational::one() } else { BigRational::zero() }).collect(),
        )
    }

    /// Parses a 0/1 string; character `p` is coordinate `p`.
    pub fn parse01(s: &str) -> Option<Self> {
        let bits = parse_bits(s)?;
        Some(Self::from_bits(bits, s.len()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    /// Bit encoding if every entry is 0 or 1.
    pub fn to_bits(&self) -> Option<u64> {
        if self.0.len() > 64 {
            return None;
        }
        let mut b = 0u64;
        for (p, x) in self.0.iter().enumerate() {
            if x.is_one() {
                b |= 1 << p;
            } else if !x.is_zero() {
                return None;
            }
        }
        Some(b)
    }
}

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_bits() {
            Some(b) => write!(f, "{}", bits_to_string(b, self.len())),
            None => {
                let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
        }
    }
}

pub fn bits_to_string(bits: u64, k: usize) -> String {
    (0..k).map(|p| if bits >> p & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Option<u64> {
    if s.is_empty() || s.len() > 64 {
        return None;
    }
    let mut b = 0u64;
    for (p, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => b |= 1 << p,
            _ => return None,
        }
    }
    Some(b)
}

/// A subspace of Q^k in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    k: usize,
    pivots: Vec<usize>,
    rows: Vec<Vec<BigRational>>,
}

impl Subspace {
    pub fn zero(k: usize) -> Self {
        Subspace { k, pivots: vec![], rows: vec![] }
    }

    pub fn full(k: usize) -> Self {
        let rows = (0..k)
            .map(|i| {
                let mut r = vec![BigRational::zero(); k];
                r[i] = BigRational::one();
                r
            })
            .collect();
        Subspace { k, pivots: (0..k).collect(), rows }
    }

    pub fn span(vectors: &[RationalVector]) -> Result<Self> {
        let k = vectors.first().ok_or(LinalgError::NoGenerators)?.len();
        Self::span_in(k, vectors)
    }

    pub fn span_in(k: usize, vectors: &[RationalVector]) -> Result<Self> {
        for v in vectors {
            if v.len() != k {
                return Err(LinalgError::DimensionMismatch(k, v.len()));
            }
        }
        Ok(Self::from_rows(k, vectors.iter().map(|v| v.0.clone()).collect()))
    }

    /// Span of cube points given as bit masks.
    pub fn span_bits(k: usize, points: &[u64]) -> Self {
        Self::from_rows(k, points.iter().map(|&b| RationalVector::from_bits(b, k).0).collect())
    }

    fn from_rows(k: usize, mut m: Vec<Vec<BigRational>>) -> Self {
        let (pivots, rows) = rref(k, &mut m);
        Subspace { k, pivots, rows }
    }

    pub fn ambient_dim(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Canonical basis: primitive integer rows with positive leading entries.
    pub fn basis(&self) -> Vec<RationalVector> {
        self.rows.iter().map(|r| RationalVector(clear_denominators(r))).collect()
    }

    fn check(&self, k: usize) -> Result<()> {
        if k != self.k {
            Err(LinalgError::DimensionMismatch(self.k, k))
        } else {
            Ok(())
        }
    }

    fn reduce(&self, mut v: Vec<BigRational>) -> Vec<BigRational> {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if v[p].is_zero() {
                continue;
            }
            let c = v[p].clone();
            for (x, y) in v.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x -= &c * y;
                }
            }
        }
        v
    }

    /// Canonical representative of the coset `v + W`.
    pub fn coset_key(&self, v: &RationalVector) -> Result<Vec<BigRational>> {
        self.check(v.len())?;
        Ok(self.reduce(v.0.clone()))
    }

    /// Coset key of a cube point. Panics if `k` exceeds 64.
    pub fn coset_key_bits(&self, bits: u64) -> Vec<BigRational> {
        self.reduce(RationalVector::from_bits(bits, self.k).0)
    }

    pub fn contains(&self, v: &RationalVector) -> Result<bool> {
        Ok(self.coset_key(v)?.iter().all(|x| x.is_zero()))
    }

    pub fn contains_bits(&self, bits: u64) -> bool {
        self.coset_key_bits(bits).iter().all(|x| x.is_zero())
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> Result<bool> {
        other.check(self.k)?;
        Ok(self.rows.iter().all(|r| other.reduce(r.clone()).iter().all(|x| x.is_zero())))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check(other.k)?;
        let m = self.rows.iter().chain(&other.rows).cloned().collect();
        Ok(Self::from_rows(self.k, m))
    }

    /// Zassenhaus: row-reduce [[A, A], [B, 0]]; rows with vanishing left half
    /// span the intersection in their right half.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check(other.k)?;
        let k = self.k;
        let mut m: Vec<Vec<BigRational>> = Vec::new();
        for r in &self.rows {
            let mut row = r.clone();
            row.extend(r.iter().cloned());
            m.push(row);
        }
        for r in &other.rows {
            let mut row = r.clone();
            row.extend(std::iter::repeat(BigRational::zero()).take(k));
            m.push(row);
        }
        let (pivots, rows) = rref(2 * k, &mut m);
        let inter: Vec<Vec<BigRational>> =
            pivots.iter().zip(rows).filter(|(&p, _)| p >= k).map(|(_, r)| r[k..].to_vec()).collect();
        Ok(Self::from_rows(k, inter))
    }

    /// Adds one vector; cheaper than a full re-span.
    pub fn extend_bits(&self, bits: u64) -> Subspace {
        let v = self.coset_key_bits(bits);
        if v.iter().all(|x| x.is_zero()) {
            return self.clone();
        }
        let mut m = self.rows.clone();
        m.push(v);
        Self::from_rows(self.k, m)
    }

    /// All points of W inside {0,1}^k, as bit masks in increasing order.
    ///
    /// A point of W is fixed by its pivot coordinates, so only the 2^dim
    /// pivot assignments are tried.
    pub fn cube_point_bits(&self) -> Result<Vec<u64>> {
        if self.k > CUBE_GUARD {
            return Err(LinalgError::Capacity { k: self.k, max: CUBE_GUARD });
        }
        let d = self.dim();
        let mut out = Vec::new();
        'outer: for assign in 0u64..(1u64 << d) {
            let mut bits = 0u64;
            for c in 0..self.k {
                let mut x = BigRational::zero();
                for (i, row) in self.rows.iter().enumerate() {
                    if assign >> i & 1 == 1 {
                        x += &row[c];
                    }
                }
                if x.is_one() {
                    bits |= 1 << c;
                } else if !x.is_zero() {
                    continue 'outer;
                }
            }
            out.push(bits);
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn cube_points(&self) -> Result<Vec<RationalVector>> {
        Ok(self.cube_point_bits()?.into_iter().map(|b| RationalVector::from_bits(b, self.k)).collect())
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b: Vec<String> = self.basis().iter().map(|v| v.to_string()).collect();
        write!(f, "<{}>", b.join(", "))
    }
}

fn clear_denominators(r: &[BigRational]) -> Vec<BigRational> {
    let mut l = BigInt::one();
    for x in r {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = r.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    let lead_neg = ints.iter().find(|x| !x.is_zero()).map_or(false, |x| x.is_negative());
    if lead_neg {
        g = -g;
    }
    ints.into_iter().map(|x| BigRational::from_integer(x / &g)).collect()
}

/// Reduced row echelon form with unit pivots; zero rows dropped.
fn rref(ncols: usize, m: &mut Vec<Vec<BigRational>>) -> (Vec<usize>, Vec<Vec<BigRational>>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (pivots, std::mem::take(m))
}
