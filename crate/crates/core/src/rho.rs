//! The f^C recursion on cell trees, the rho-equations, their limit, and
//! the closed-form constants built from them.
//!
//! Binary rho_j are obtained from the log-domain table L[i][j] = log a_(i,j);
//! the genotype recursion and direct tree evaluation serve as oracles.

use crate::flags::{Cell, CellTree, Flag, FlagError, Genotype};
use std::f64::consts::LN_2;

/// Bisection stops at this interval width.
pub const BISECT_WIDTH: f64 = 1e-14;
/// Series truncation for the limit equation.
pub const LIMIT_TERMS: usize = 60;
/// Genotype memo tables are built up to this level.
pub const GENOTYPE_TABLE_LEVEL: usize = 4;

pub fn ln3() -> f64 {
    3f64.ln()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RhoError {
    #[error("no sign change while solving for rho_{0}")]
    NoSignChange(usize),
    #[error("L[{i}][{j}] = {value} violates the crude bounds")]
    Bound { i: usize, j: usize, value: f64 },
    #[error("row {0} of the log-a table is missing or too short")]
    RowMissing(usize),
    #[error("need rho_1..rho_{need}, have {have}")]
    NotEnoughRhos { need: usize, have: usize },
    #[error("genotype level {0} above the memo limit {GENOTYPE_TABLE_LEVEL}")]
    Level(usize),
    #[error(transparent)]
    Flag(#[from] FlagError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ARecursion,
    Genotype,
    CellTree,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ARecursion => "a_recursion",
            Method::Genotype => "genotype",
            Method::CellTree => "cell_tree",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoSolution {
    pub rhos: Vec<f64>,
    pub residuals: Vec<f64>,
    pub method: Method,
}

impl RhoSolution {
    /// rho_(i-1) with the convention rho_0 = 0.
    pub fn rho_before(&self, i: usize) -> f64 {
        rho_before(&self.rhos, i)
    }
}

fn rho_before(rhos: &[f64], i: usize) -> f64 {
    if i <= 1 {
        0.0
    } else {
        rhos[i - 2]
    }
}

/// Bisection on a continuous function with a sign change on [lo, hi].
pub fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return None;
    }
    let lo_pos = flo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECT_WIDTH || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm > 0.0) == lo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

// ---------------------------------------------------------------- cell trees

/// f^C for every cell of the tree: 1 at level 0, and
/// f^C = sum over children of f^(C')^(rho_(i-1)). Levels needing rhos
/// beyond the supplied ones are left out.
pub fn f_tree_values(tree: &CellTree, rhos: &[f64]) -> Vec<Vec<f64>> {
    let mut vals: Vec<Vec<f64>> = vec![vec![1.0; tree.levels[0].len()]];
    for i in 1..tree.levels.len().min(rhos.len() + 2) {
        let rho = rho_before(rhos, i);
        let prev = &vals[i - 1];
        let row = tree.children[i]
            .iter()
            .map(|ch| {
                let mut t: Vec<f64> = ch.iter().map(|&c| prev[c].powf(rho)).collect();
                t.sort_by(|a, b| a.partial_cmp(b).unwrap());
                crate::entropy::pairwise_sum(&t)
            })
            .collect();
        vals.push(row);
    }
    vals
}

/// f^C evaluated directly on the cells below C.
pub fn f_cell_direct(flag: &Flag, cell: &Cell, rhos: &[f64]) -> Result<f64, RhoError> {
    if cell.level > 1 && rhos.len() < cell.level - 1 {
        return Err(RhoError::NotEnoughRhos { need: cell.level - 1, have: rhos.len() });
    }
    let mut pts = cell.members.clone();
    pts.sort_unstable();
    let tree = CellTree::below(flag, cell.level, &pts)?;
    let v = f_tree_values(&tree, rhos);
    Ok(v[cell.level][0])
}

/// Solves f^(Gamma_(j+1)) = f^(Gamma_j)^(rho_j) e^(dim V_(j+1)/V_j) on the
/// explicit cell tree, for any flag whose tree fits in memory.
pub fn solve_flag_rhos(flag: &Flag) -> Result<RhoSolution, RhoError> {
    let tree = CellTree::gamma(flag)?;
    let r = flag.order();
    let steps = flag.dim_steps();
    let gam: Vec<usize> = (0..=r).map(|i| tree.gamma_index(i)).collect();
    let mut rhos = Vec::new();
    let mut residuals = Vec::new();
    for j in 1..r {
        let phi = |x: f64| {
            let mut rs = rhos.clone();
            rs.push(x);
            let v = f_tree_values(&tree, &rs);
            v[j + 1][gam[j + 1]].ln() - x * v[j][gam[j]].ln() - steps[j] as f64
        };
        let x = bisect(0.0, 1.0, phi).ok_or(RhoError::NoSignChange(j))?;
        residuals.push(phi(x).abs());
        rhos.push(x);
    }
    Ok(RhoSolution { rhos, residuals, method: Method::CellTree })
}

// ---------------------------------------------------------------- genotypes

/// F(g) for every mask at levels 0..=max_level (max_level <= 4):
/// F(g) = sum_(g' <= g*) 2^(|g|-|g*|-|g'|) F(g')^(rho_(i-1)).
pub fn f_genotype_tables(rhos: &[f64], max_level: usize) -> Result<Vec<Vec<f64>>, RhoError> {
    if max_level > GENOTYPE_TABLE_LEVEL {
        return Err(RhoError::Level(max_level));
    }
    if max_level >= 2 && rhos.len() < max_level - 1 {
        return Err(RhoError::NotEnoughRhos { need: max_level - 1, have: rhos.len() });
    }
    let mut tables = vec![vec![1.0, 1.0]];
    for i in 1..=max_level {
        let rho = rho_before(rhos, i);
        let prev: Vec<f64> = tables[i - 1].iter().map(|v: &f64| v.powf(rho)).collect();
        let half = 1u32 << (i - 1);
        let low = (1u64 << half) - 1;
        let n = 1usize << (1usize << i);
        let mut cur = vec![0.0; n];
        for (mask, out) in cur.iter_mut().enumerate() {
            let m = mask as u64;
            let gs = m & low & (m >> half);
            let base = m.count_ones() - gs.count_ones();
            let mut terms = Vec::new();
            // all submasks of g*, including 0
            let mut sub = gs;
            loop {
                let e = base - sub.count_ones();
                terms.push((e as f64).exp2() * prev[sub as usize]);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & gs;
            }
            *out = crate::entropy::pairwise_sum(&terms);
        }
        tables.push(cur);
    }
    Ok(tables)
}

pub fn f_genotype(g: &Genotype, rhos: &[f64]) -> Result<f64, RhoError> {
    let i = g.level();
    let t = f_genotype_tables(rhos, i)?;
    Ok(t[i][g.mask().unwrap() as usize])
}

/// f^(Gamma_3) of the binary flag written out term by term.
pub fn f_gamma3_explicit(r1: f64, r2: f64) -> f64 {
    let g2 = 3f64.powf(r1) + 4.0 * 2f64.powf(r1) + 4.0;
    g2.powf(r2)
        + 8.0 * (2.0 * 2f64.powf(r1) + 4.0).powf(r2)
        + 16.0 * 4f64.powf(r2)
        + 8.0 * (2f64.powf(r1) + 2.0).powf(r2)
        + 32.0 * 2f64.powf(r2)
        + 16.0
}

pub fn f_gamma2_explicit(r1: f64) -> f64 {
    3f64.powf(r1) + 4.0 * 2f64.powf(r1) + 4.0
}

/// rho_1 and rho_2 from the genotype side: rho_1 from f^(Gamma_2), rho_2
/// from the explicit f^(Gamma_3), rho_3 from the level-4 genotype table.
pub fn solve_rhos_genotype(count: usize) -> Result<RhoSolution, RhoError> {
    let count = count.min(3);
    let mut rhos: Vec<f64> = Vec::new();
    let mut residuals = Vec::new();
    for j in 1..=count {
        let full = |lvl: usize| ((1u128 << (1u32 << lvl)) - 1) as usize;
        let phi = |x: f64| -> f64 {
            let mut rs = rhos.clone();
            rs.push(x);
            let (top, below) = match j {
                1 => (f_gamma2_explicit(x), 3.0),
                2 => (f_gamma3_explicit(rs[0], x), f_gamma2_explicit(rs[0])),
                _ => {
                    let t = f_genotype_tables(&rs, j + 1).unwrap();
                    (t[j + 1][full(j + 1)], t[j][full(j)])
                }
            };
            top.ln() - x * below.ln() - (1u64 << j) as f64
        };
        let x = bisect(0.0, 1.0, phi).ok_or(RhoError::NoSignChange(j))?;
        residuals.push(phi(x).abs());
        rhos.push(x);
    }
    Ok(RhoSolution { rhos, residuals, method: Method::Genotype })
}

// ---------------------------------------------------------------- a-table

/// Rows i = 1, 2, ... of L[i][j] = log a_(i,j); `rows[i-1][j-1]` holds
/// L[i][j], and row i is built with rho_(i-1).
#[derive(Debug, Clone, Default)]
pub struct LogATable {
    rows: Vec<Vec<f64>>,
}

impl LogATable {
    /// Row 1 (rho_0 = 0): a_(1,1) = 2, a_(1,2) = 3, then squaring.
    pub fn new(len: usize) -> Self {
        let mut r = vec![LN_2, ln3()];
        while r.len() < len {
            let last = *r.last().unwrap();
            r.push(2.0 * last);
        }
        r.truncate(len.max(1));
        LogATable { rows: vec![r] }
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.rows.get(i.checked_sub(1)?)?.get(j.checked_sub(1)?).copied()
    }

    pub fn row(&self, i: usize) -> Option<&[f64]> {
        self.rows.get(i.checked_sub(1)?).map(|r| r.as_slice())
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }
}

/// L[i][1..=len] from row i-1 with x = rho_(i-1).
pub fn extend_a_row(table: &LogATable, i: usize, x: f64, len: usize) -> Result<Vec<f64>, RhoError> {
    let prev = table.row(i - 1).ok_or(RhoError::RowMissing(i - 1))?;
    if prev.len() + 1 < len {
        return Err(RhoError::RowMissing(i - 1));
    }
    let mut row = vec![LN_2, (2.0 + x.exp2()).ln()];
    for j in 3..=len {
        let l = row[j - 2];
        let u = x * prev[j - 2] - 2.0 * l;
        let v = 2.0 * x * prev[j - 3] - 2.0 * l;
        row.push(2.0 * l + (u.exp() - v.exp()).ln_1p());
    }
    row.truncate(len);
    for (jj, &v) in row.iter().enumerate() {
        let j = jj + 1;
        let (lo, hi) = crude_bounds(j);
        if !(v >= lo - 1e-9 * lo.abs().max(1.0) && v <= hi + 1e-9 * hi.max(1.0)) {
            return Err(RhoError::Bound { i, j, value: v });
        }
    }
    Ok(row)
}

/// 2^(j-2) log 3 <= L[i][j] <= 2^(j-1) log 2
pub fn crude_bounds(j: usize) -> (f64, f64) {
    let p = (j as f64 - 2.0).exp2();
    (p * ln3(), 2.0 * p * LN_2)
}

/// phi_j(x) = L[j+1][j+2](x) - x L[j][j+1] - 2^j. It is strictly
/// decreasing in x; its root is rho_j.
pub fn phi_j(table: &LogATable, j: usize, x: f64) -> Result<f64, RhoError> {
    let row = extend_a_row(table, j + 1, x, j + 2)?;
    let below = table.get(j, j + 1).ok_or(RhoError::RowMissing(j))?;
    Ok(row[j + 1] - x * below - (j as f64).exp2())
}

pub fn solve_rho_j(table: &LogATable, j: usize) -> Result<f64, RhoError> {
    if table.row_count() < j {
        return Err(RhoError::RowMissing(j));
    }
    let mut fault = None;
    let x = bisect(0.0, 1.0, |x| match phi_j(table, j, x) {
        Ok(v) => v,
        Err(e) => {
            fault.get_or_insert(e);
            f64::NAN
        }
    });
    if let Some(e) = fault {
        return Err(e);
    }
    x.ok_or(RhoError::NoSignChange(j))
}

/// rho_1..rho_max_j together with the table through row max_j + 1.
pub fn solve_rhos(max_j: usize) -> Result<(RhoSolution, LogATable), RhoError> {
    let mut table = LogATable::new(2);
    let mut rhos = Vec::with_capacity(max_j);
    let mut residuals = Vec::with_capacity(max_j);
    for j in 1..=max_j {
        let x = solve_rho_j(&table, j)?;
        residuals.push(phi_j(&table, j, x)?.abs());
        rhos.push(x);
        let row = extend_a_row(&table, j + 1, x, j + 2)?;
        table.push_row(row);
    }
    Ok((RhoSolution { rhos, residuals, method: Method::ARecursion }, table))
}

/// log F(g) = sum_m Delta^m(g) L[i][m].
pub fn log_product_formula(g: &Genotype, table: &LogATable) -> Result<f64, RhoError> {
    let i = g.level();
    if i == 0 {
        return Ok(0.0);
    }
    let row = table.row(i).ok_or(RhoError::RowMissing(i))?;
    let d = g.defects();
    if row.len() < d.len() {
        return Err(RhoError::RowMissing(i));
    }
    Ok(d.iter().zip(row).map(|(&k, &l)| k as f64 * l).sum())
}

// ---------------------------------------------------------------- limit

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoLimit {
    pub rho: f64,
    pub terms: usize,
    /// Bound on the first omitted term.
    pub tail: f64,
}

/// log a_j for the limit sequence a_1 = 2, a_2 = 2 + 2^rho,
/// a_j = a_(j-1)^2 + a_(j-1)^rho - a_(j-2)^(2 rho).
pub fn limit_log_sequence(rho: f64, n: usize) -> Vec<f64> {
    let mut l = vec![LN_2, (2.0 + rho.exp2()).ln()];
    while l.len() < n {
        let j = l.len();
        let a = l[j - 1];
        let u = rho * a - 2.0 * a;
        let v = 2.0 * rho * l[j - 2] - 2.0 * a;
        l.push(2.0 * a + (u.exp() - v.exp()).ln_1p());
    }
    l.truncate(n);
    l
}

/// Residual of the limit equation and the number of terms used.
pub fn limit_equation(rho: f64, tol: f64) -> (f64, usize, f64) {
    let l = limit_log_sequence(rho, LIMIT_TERMS + 2);
    let mut terms = vec![LN_2];
    let mut used = 0;
    let mut tail = 0.0;
    for j in 1..=LIMIT_TERMS {
        let t = (rho * l[j - 1] - l[j]).exp();
        let term = (-(j as f64)).exp2() * 2.0 * t.atanh();
        if term < tol * 1e-3 {
            tail = term;
            break;
        }
        terms.push(term);
        used = j;
    }
    terms.reverse();
    (1.0 / (1.0 - rho / 2.0) - crate::entropy::pairwise_sum(&terms), used, tail)
}

pub fn rho_limit(tol: f64) -> RhoLimit {
    let rho = bisect(0.05, 0.95, |x| limit_equation(x, tol).0).expect("limit equation brackets its root");
    let (_, terms, tail) = limit_equation(rho, tol);
    RhoLimit { rho, terms, tail }
}

// ---------------------------------------------------------------- exponents

/// (log 3 - 1) / (log 3 + sum_(i=1)^(r-1) steps[i-1] / (rho_1 ... rho_i)),
/// where steps[i-1] = dim(V_(i+1) / V_i).
pub fn gamma_res(steps: &[usize], rhos: &[f64]) -> Result<f64, RhoError> {
    if rhos.len() < steps.len() {
        return Err(RhoError::NotEnoughRhos { need: steps.len(), have: rhos.len() });
    }
    let mut prod = 1.0;
    let mut terms = Vec::with_capacity(steps.len());
    for (i, &d) in steps.iter().enumerate() {
        prod *= rhos[i];
        terms.push(d as f64 / prod);
    }
    terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((ln3() - 1.0) / (ln3() + crate::entropy::pairwise_sum(&terms)))
}

/// theta_r; rho_j beyond the supplied list are taken to be `tail`.
pub fn theta(r: usize, rhos: &[f64], tail: f64) -> f64 {
    assert!(r >= 1);
    let steps: Vec<usize> = (1..r).map(|i| 1usize << i).collect();
    let ext: Vec<f64> = (0..r.saturating_sub(1)).map(|i| rhos.get(i).copied().unwrap_or(tail)).collect();
    gamma_res(&steps, &ext).unwrap()
}

pub fn eta(rho: f64) -> f64 {
    LN_2 / (2.0 / rho).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub rho_limit: f64,
    pub eta: f64,
    /// theta_1 ..
    pub theta: Vec<f64>,
    /// rho_j for j above this came from the limit when forming theta.
    pub theta_table_depth: usize,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub xi: f64,
    pub lambda: f64,
    pub mt_kappa: f64,
    pub mt_rho1: f64,
    pub mt_exponent_1984: f64,
    pub mt_exponent_2009: f64,
    pub mt_base: f64,
    pub binary_base: f64,
}

/// log 2 - log(e - 1)
fn l2e() -> f64 {
    LN_2 - (std::f64::consts::E - 1.0).ln()
}

pub fn xi() -> f64 {
    l2e() / 1.5f64.ln()
}

pub fn lambda() -> f64 {
    l2e() / (1.0 + l2e() - (1.0 + (1.0 - xi()).exp2()).ln())
}

pub fn beta2() -> f64 {
    1.0 - 1.0 / ln3()
}

pub fn beta3() -> f64 {
    (ln3() - 1.0) / (ln3() + 1.0 / xi())
}

pub fn beta4() -> f64 {
    (ln3() - 1.0) / (ln3() + 1.0 / xi() + 1.0 / (xi() * lambda()))
}

/// Common value of rho_2, rho_3, ... for the flag spanned by the omega^i.
pub fn mt_kappa() -> f64 {
    l2e() / (LN_2 + 1.0 - (std::f64::consts::E - 1.0).ln())
}

pub fn mt_rho1() -> f64 {
    l2e() / ln3()
}

pub fn mt_exponent_1984() -> f64 {
    -LN_2 / (1.0 - 1.0 / ln3()).ln()
}

pub fn mt_exponent_2009() -> f64 {
    LN_2 / ((1.0 - 1.0 / 27f64.ln()) / (1.0 - 1.0 / ln3())).ln()
}

pub fn constants(theta_max_r: usize) -> Result<ConstantsReport, RhoError> {
    let lim = rho_limit(1e-16);
    let (sol, _) = solve_rhos(13)?;
    let theta = (1..=theta_max_r).map(|r| theta(r, &sol.rhos, lim.rho)).collect();
    Ok(ConstantsReport {
        rho_limit: lim.rho,
        eta: eta(lim.rho),
        theta,
        theta_table_depth: sol.rhos.len(),
        beta2: beta2(),
        beta3: beta3(),
        beta4: beta4(),
        xi: xi(),
        lambda: lambda(),
        mt_kappa: mt_kappa(),
        mt_rho1: mt_rho1(),
        mt_exponent_1984: mt_exponent_1984(),
        mt_exponent_2009: mt_exponent_2009(),
        mt_base: mt_kappa(),
        binary_base: lim.rho / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flags::{binary_flag, cells_at_level, mt_flag, CellTree};

    const TABLE: [f64; 13] = [
        0.3064810093305,
        0.2796104150767,
        0.2813005404710,
        0.2812067224539,
        0.2812115789381,
        0.2812113387071,
        0.2812113502101,
        0.2812113496729,
        0.2812113496974,
        0.2812113496963,
        0.2812113496964,
        0.2812113496964,
        0.2812113496964,
    ];

    #[test]
    fn table_reproduced() {
        let (sol, _) = solve_rhos(13).unwrap();
        for (j, (&a, &b)) in sol.rhos.iter().zip(TABLE.iter()).enumerate() {
            assert!((a - b).abs() < 1e-12, "rho_{} = {a}", j + 1);
            assert!(a <= sol.rhos[0] + 1e-12);
        }
        assert!(sol.residuals.iter().all(|&r| r < 1e-9));
    }

    #[test]
    fn seeds_literal() {
        let (sol, t) = solve_rhos(3).unwrap();
        for i in 1..=4 {
            assert_eq!(t.get(i, 1), Some(LN_2));
        }
        assert!((t.get(2, 2).unwrap() - (2.0 + sol.rhos[0].exp2()).ln()).abs() < 1e-15);
    }

    #[test]
    fn log_domain_matches_plain_arithmetic() {
        let rhos = [0.31, 0.27, 0.29, 0.28];
        let mut t = LogATable::new(5);
        let mut plain: Vec<Vec<f64>> = vec![vec![2.0, 3.0, 9.0, 81.0, 6561.0]];
        for i in 2..=5 {
            let x = rhos[i - 2];
            let row = extend_a_row(&t, i, x, 5).unwrap();
            t.push_row(row);
            let p = &plain[i - 2];
            let mut q = vec![2.0, 2.0 + 2f64.powf(x)];
            for j in 3..=5 {
                q.push(q[j - 2] * q[j - 2] + p[j - 2].powf(x) - p[j - 3].powf(2.0 * x));
            }
            plain.push(q);
        }
        for i in 1..=5 {
            for j in 1..=5 {
                let a = t.get(i, j).unwrap();
                assert!((a - plain[i - 1][j - 1].ln()).abs() < 1e-12, "L[{i}][{j}]");
            }
        }
    }

    #[test]
    fn row_two_entry_three_is_f_gamma2() {
        let x = 0.3;
        let t = LogATable::new(3);
        let row = extend_a_row(&t, 2, x, 3).unwrap();
        assert!((row[2].exp() - f_gamma2_explicit(x)).abs() < 1e-12);
    }

    #[test]
    fn figure_one_values() {
        let f = binary_flag(2).unwrap();
        let l1 = cells_at_level(&f, 1).unwrap();
        let g1 = l1.iter().find(|c| c.contains(0)).unwrap();
        assert_eq!(f_cell_direct(&f, g1, &[]).unwrap(), 3.0);
        let r1 = 0.37;
        let top = &cells_at_level(&f, 2).unwrap()[0];
        assert!((f_cell_direct(&f, top, &[r1]).unwrap() - f_gamma2_explicit(r1)).abs() < 1e-13);
        for c in l1.iter().filter(|c| c.len() == 2) {
            assert_eq!(f_cell_direct(&f, c, &[]).unwrap(), 2.0);
        }
    }

    #[test]
    fn gamma3_direct_and_genotype() {
        let (r1, r2) = (0.3064810093305, 0.2796104150767);
        let f = binary_flag(3).unwrap();
        let top = &cells_at_level(&f, 3).unwrap()[0];
        let d = f_cell_direct(&f, top, &[r1, r2]).unwrap();
        let e = f_gamma3_explicit(r1, r2);
        let g = f_genotype(&Genotype::full(3).unwrap(), &[r1, r2]).unwrap();
        assert!((d - e).abs() < 1e-13 * e);
        assert!((g - e).abs() < 1e-13 * e);
    }

    #[test]
    fn genotype_small_values() {
        assert_eq!(f_genotype(&Genotype::empty(2).unwrap(), &[0.3]).unwrap(), 1.0);
        assert_eq!(f_genotype(&Genotype::from_sets(1, &[0]).unwrap(), &[]).unwrap(), 2.0);
    }

    #[test]
    fn genotype_matches_cells_r3() {
        let rhos = [0.31, 0.27];
        let f = binary_flag(3).unwrap();
        let tree = CellTree::gamma(&f).unwrap();
        let vals = f_tree_values(&tree, &rhos);
        let tabs = f_genotype_tables(&rhos, 3).unwrap();
        for i in 0..=3 {
            for (c, v) in tree.levels[i].iter().zip(&vals[i]) {
                let m = c.genotype.as_ref().unwrap().mask().unwrap() as usize;
                assert!((tabs[i][m] - v).abs() < 1e-12 * v, "level {i}");
            }
        }
    }

    #[test]
    fn product_formula_full_genotype() {
        let (sol, t) = solve_rhos(4).unwrap();
        for i in 1..=4 {
            let g = Genotype::full(i).unwrap();
            let lp = log_product_formula(&g, &t).unwrap();
            assert!((lp - t.get(i, i + 1).unwrap()).abs() < 1e-15);
            let direct = f_genotype(&g, &sol.rhos).unwrap().ln();
            assert!((lp - direct).abs() < 1e-12 * direct.abs());
        }
        assert_eq!(log_product_formula(&Genotype::empty(3).unwrap(), &t).unwrap(), 0.0);
    }

    #[test]
    fn genotype_route_agrees() {
        let g = solve_rhos_genotype(3).unwrap();
        let (a, _) = solve_rhos(3).unwrap();
        for j in 0..3 {
            assert!((g.rhos[j] - a.rhos[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_tree_route_agrees_binary() {
        let s = solve_flag_rhos(&binary_flag(3).unwrap()).unwrap();
        let (a, _) = solve_rhos(2).unwrap();
        assert!((s.rhos[0] - a.rhos[0]).abs() < 1e-12);
        assert!((s.rhos[1] - a.rhos[1]).abs() < 1e-12);
    }

    #[test]
    fn mt_rhos_closed_form() {
        let s = solve_flag_rhos(&mt_flag(4).unwrap()).unwrap();
        assert!((s.rhos[0] - mt_rho1()).abs() < 1e-13);
        assert!((s.rhos[1] - mt_kappa()).abs() < 1e-13);
        assert!((s.rhos[2] - mt_kappa()).abs() < 1e-13);
    }

    #[test]
    fn phi_is_monotone() {
        let (_, t) = solve_rhos(5).unwrap();
        for j in 1..=5 {
            let mut prev = f64::INFINITY;
            for n in 1..=100 {
                let v = phi_j(&t, j, n as f64 / 101.0).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }

    #[test]
    fn limit_value() {
        let l = rho_limit(1e-16);
        assert!((l.rho - 0.28121134969637466).abs() < 1e-13);
        assert!(l.terms < LIMIT_TERMS);
        let a = limit_log_sequence(0.0, 2);
        assert_eq!(a[1], 3f64.ln());
    }

    #[test]
    fn telescoping() {
        let (_, t) = solve_rhos(13).unwrap();
        let rho = rho_limit(1e-16).rho;
        let v = t.get(13, 14).unwrap() / 4096.0;
        assert!((v - 1.0 / (1.0 - rho / 2.0)).abs() < 1e-8);
    }

    #[test]
    fn exponents() {
        assert!((theta(1, &[], 0.0) - 0.08976077337316).abs() < 1e-13);
        assert!((eta(0.28121134969637466) - 0.35332277270132347).abs() < 1e-14);
        let t2 = theta(2, &[TABLE[0]], 0.0);
        assert!((t2 - 0.012933942985573447).abs() < 1e-12);
    }

    #[test]
    fn closed_forms() {
        assert!((beta3() - 0.02616218797316965).abs() < 1e-15);
        assert!((beta4() - 0.01295186091360512).abs() < 1e-15);
        assert!((mt_kappa() - 0.131810542760750).abs() < 1e-14);
        assert!((mt_exponent_1984() - 0.28754048957).abs() < 1e-10);
        assert!((mt_exponent_2009() - 0.33827824168).abs() < 1e-10);
    }
}
