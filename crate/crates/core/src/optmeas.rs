//! Optimal measures mu*, optimal parameters c*, the entropy-gap checks,
//! and certified systems.

use crate::entropy::{
    check_with_enumeration, coset_entropy, pairwise_sum, perturb_thresholds, EReport, EntropyError, Measure, System,
    SLACK_TOL,
};
use crate::flags::{automorphism_generators, enumerate_subflags, CellTree, Flag, FlagError, FlagKind, Subflag};
use crate::qlinalg::Subspace;
use crate::rho::{f_genotype_tables, f_tree_values, RhoError};

/// Pivots |H[m+1][m] - d_(m+1)| below this are treated as degenerate.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptError {
    #[error("need rho_1..rho_{need}, have {have}")]
    Unsolved { need: usize, have: usize },
    #[error("degenerate pivot at m = {m}: H = {h}, dimension step = {d}")]
    Degenerate { m: usize, h: f64, d: usize },
    #[error("optimal parameters are not strictly descending: {0:?}")]
    NotDescending(Vec<f64>),
    #[error("order {0} too large for the explicit tree")]
    Order(usize),
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Rho(#[from] RhoError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

#[derive(Debug, Clone)]
pub struct OptimalData {
    pub flag: Flag,
    pub rhos: Vec<f64>,
    pub mu_star: Measure,
    /// mu*_1 .. mu*_r
    pub restrictions: Vec<Measure>,
    /// mu*(Gamma_j), j = 0..=r
    pub gamma_mass: Vec<f64>,
    /// H[j][m] = H_(mu*_j)(V_m), j, m = 0..=r; row 0 is zero.
    pub entropy: Vec<Vec<f64>>,
    pub c_star: Vec<f64>,
}

fn tree_guard(flag: &Flag) -> Result<(), OptError> {
    let r = flag.order();
    match flag.kind() {
        FlagKind::Binary if r > 3 => Err(OptError::Order(r)),
        _ => Ok(()),
    }
}

/// mu* from mu*(Gamma_r) = 1 and mu*(C') / mu*(C) = f^(C')^(rho_(i-1)) / f^C,
/// with the mass of the level-0 cell {0, 1} placed on 0.
pub fn optimal_measure(flag: &Flag, rhos: &[f64]) -> Result<(Measure, Vec<Measure>, Vec<f64>), OptError> {
    tree_guard(flag)?;
    let r = flag.order();
    if rhos.len() + 1 < r {
        return Err(OptError::Unsolved { need: r - 1, have: rhos.len() });
    }
    let tree = CellTree::gamma(flag)?;
    let f = f_tree_values(&tree, rhos);
    let mut mass: Vec<Vec<f64>> = tree.levels.iter().map(|l| vec![0.0; l.len()]).collect();
    mass[r][tree.gamma_index(r)] = 1.0;
    for i in (1..=r).rev() {
        let rho = if i >= 2 { rhos[i - 2] } else { 0.0 };
        for (c, ch) in tree.children[i].iter().enumerate() {
            let m = mass[i][c];
            for &cc in ch {
                mass[i - 1][cc] = m * f[i - 1][cc].powf(rho) / f[i][c];
            }
        }
    }
    let k = flag.ambient_dim();
    let mut w = Vec::new();
    for (c, cell) in tree.levels[0].iter().enumerate() {
        let x = if cell.contains(0) { 0 } else { cell.members[0] };
        w.push((x, mass[0][c]));
    }
    let mu = Measure::normalized(k, w)?;
    let mut restrictions = Vec::with_capacity(r);
    let mut gamma_mass = Vec::with_capacity(r + 1);
    for j in 0..=r {
        let pts = flag.gamma_points(j)?;
        gamma_mass.push(mu.mass(&pts));
        if j > 0 {
            restrictions.push(mu.restrict(&pts)?);
        }
    }
    Ok((mu, restrictions, gamma_mass))
}

/// H[j][m] by exact coset grouping.
pub fn entropy_matrix(flag: &Flag, restrictions: &[Measure]) -> Result<Vec<Vec<f64>>, OptError> {
    let r = flag.order();
    let mut h = vec![vec![0.0; r + 1]; r + 1];
    for j in 1..=r {
        for m in 0..j {
            h[j][m] = coset_entropy(&restrictions[j - 1], flag.space(m))?;
        }
    }
    Ok(h)
}

/// H[j][m] for the binary flag of order r <= 4 without touching the cube:
/// propagate the probability of each genotype down from Gamma_j and add the
/// entropy of the child choice at every level.
pub fn entropy_matrix_genotype(r: usize, rhos: &[f64]) -> Result<Vec<Vec<f64>>, OptError> {
    if r > 4 {
        return Err(OptError::Order(r));
    }
    if rhos.len() + 1 < r {
        return Err(OptError::Unsolved { need: r - 1, have: rhos.len() });
    }
    let f = f_genotype_tables(rhos, r)?;
    let mut h = vec![vec![0.0; r + 1]; r + 1];
    for j in 1..=r {
        let full = ((1u64 << (1u32 << j)) - 1) as usize;
        let mut prob = vec![0.0; f[j].len()];
        prob[full] = 1.0;
        let mut acc = 0.0;
        for l in (1..=j).rev() {
            let rho = if l >= 2 { rhos[l - 2] } else { 0.0 };
            let half = 1u32 << (l - 1);
            let low = (1u64 << half) - 1;
            let mut next = vec![0.0; f[l - 1].len()];
            let mut cond = Vec::new();
            for (g, &pg) in prob.iter().enumerate() {
                if pg == 0.0 {
                    continue;
                }
                let m = g as u64;
                let gs = m & low & (m >> half);
                let base = m.count_ones() - gs.count_ones();
                let fg = f[l][g];
                let mut hg = Vec::new();
                let mut sub = gs;
                loop {
                    let count = ((base - sub.count_ones()) as f64).exp2();
                    let p = f[l - 1][sub as usize].powf(rho) / fg;
                    next[sub as usize] += pg * count * p;
                    hg.push(-count * p * p.ln());
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & gs;
                }
                cond.push(pg * pairwise_sum(&hg));
            }
            acc += pairwise_sum(&cond);
            h[j][l - 1] = acc;
            prob = next;
        }
    }
    Ok(h)
}

/// Solves e(basic(m)) = e(V) for m = r-1 .. 0 with c_(r+1) = 1, then
/// rescales to c_1 = 1.
pub fn optimal_parameters(steps: &[usize], h: &[Vec<f64>]) -> Result<Vec<f64>, OptError> {
    let r = steps.len();
    let d = |j: usize| steps[j - 1] as f64;
    // c[j] is c_j, j = 1..=r+1
    let mut c = vec![0.0; r + 2];
    c[r + 1] = 1.0;
    for m in (0..r).rev() {
        let piv = h[m + 1][m] - d(m + 1);
        if piv.abs() < PIVOT_TOL {
            return Err(OptError::Degenerate { m, h: h[m + 1][m], d: steps[m] });
        }
        let mut t = vec![c[m + 2] * h[m + 1][m]];
        for j in m + 2..=r {
            t.push(-(c[j] - c[j + 1]) * h[j][m]);
            t.push(c[j] * d(j));
        }
        c[m + 1] = pairwise_sum(&t) / piv;
    }
    let c1 = c[1];
    let out: Vec<f64> = c[1..].iter().map(|x| x / c1).collect();
    if out.windows(2).any(|w| !(w[1] < w[0])) || !(out[r] > 0.0) {
        return Err(OptError::NotDescending(out));
    }
    Ok(out)
}

pub fn optimal_data(flag: &Flag, rhos: &[f64]) -> Result<OptimalData, OptError> {
    let (mu_star, restrictions, gamma_mass) = optimal_measure(flag, rhos)?;
    let entropy = entropy_matrix(flag, &restrictions)?;
    let c_star = optimal_parameters(&flag.dim_steps(), &entropy)?;
    Ok(OptimalData { flag: flag.clone(), rhos: rhos.to_vec(), mu_star, restrictions, gamma_mass, entropy, c_star })
}

#[derive(Debug, Clone)]
pub struct GapCheck {
    pub i: usize,
    pub m: usize,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

/// H[m+1][m] > d_(m+1) for 0 <= m < r, and
/// H[i][m-1] - H[i][m] < d_m for 1 <= m < i <= r.
pub fn gap_checks(steps: &[usize], h: &[Vec<f64>]) -> (Vec<GapCheck>, Vec<GapCheck>) {
    let r = steps.len();
    let first = (0..r)
        .map(|m| {
            let value = h[m + 1][m];
            let bound = steps[m] as f64;
            GapCheck { i: m + 1, m, value, bound, ok: value > bound }
        })
        .collect();
    let mut second = Vec::new();
    for i in 1..=r {
        for m in 1..i {
            let value = h[i][m - 1] - h[i][m];
            let bound = steps[m - 1] as f64;
            second.push(GapCheck { i, m, value, bound, ok: value < bound });
        }
    }
    (first, second)
}

/// Invariant cube-spanned spaces strictly between V_(i-1) and V_i.
pub fn invariant_intermediates(flag: &Flag, candidates: &[Vec<Subspace>]) -> Result<Vec<(usize, Subspace)>, OptError> {
    let gens = automorphism_generators(flag)?;
    let mut out = Vec::new();
    for i in 1..=flag.order() {
        for w in &candidates[i] {
            let lower = flag.space(i - 1);
            if w == lower || w == flag.space(i) || !lower.is_subspace_of(w).unwrap() {
                continue;
            }
            if gens.iter().all(|g| &g.apply_subspace(w) == w) {
                out.push((i, w.clone()));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PerturbedCheck {
    pub eps: f64,
    pub c: Vec<f64>,
    /// Smallest slack over subflags other than V.
    pub min_slack: f64,
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub data: OptimalData,
    pub system: System,
    pub report: EReport,
    pub basic_slacks: Vec<(usize, f64)>,
    pub basic_tight: bool,
    pub min_nonbasic_slack: Option<f64>,
    pub gap_first: Vec<GapCheck>,
    pub gap_second: Vec<GapCheck>,
    pub perturbed: Vec<PerturbedCheck>,
    /// None when not checked (non-binary flags).
    pub invariant_intermediates: Option<usize>,
    pub subflag_count: usize,
    pub passed: bool,
}

pub const PERTURBATIONS: [f64; 2] = [1e-3, 1e-4];

/// Builds (V, c*, mu*), runs the checker, and records every side check.
/// Failures are reported in the certificate, not returned as errors.
pub fn certify_system(flag: &Flag, rhos: &[f64]) -> Result<Certificate, OptError> {
    certify_with(flag, rhos, &PERTURBATIONS)
}

pub fn certify_with(flag: &Flag, rhos: &[f64], eps_list: &[f64]) -> Result<Certificate, OptError> {
    let data = optimal_data(flag, rhos)?;
    let r = flag.order();
    let system = System::new(flag.clone(), data.c_star.clone(), data.restrictions.clone())?;
    let en = enumerate_subflags(flag)?;
    let report = check_with_enumeration(&system, &en)?;
    let basic_slacks: Vec<(usize, f64)> = (0..r)
        .map(|m| {
            let b = Subflag::basic(flag, m);
            let e = report.entries.iter().find(|e| en.subflags[e.id] == b).expect("basic subflags are enumerated");
            (m, e.slack)
        })
        .collect();
    let basic_tight = basic_slacks.iter().all(|(_, s)| s.abs() <= SLACK_TOL);
    let min_nonbasic_slack = report.min_nonbasic_slack();
    let steps = flag.dim_steps();
    let (gap_first, gap_second) = gap_checks(&steps, &data.entropy);
    let mut perturbed = Vec::new();
    for &eps in eps_list {
        let c = perturb_thresholds(&data.c_star, eps);
        let s = System::new(flag.clone(), c.clone(), data.restrictions.clone())?;
        let rep = check_with_enumeration(&s, &en)?;
        let min_slack =
            rep.entries.iter().filter(|e| e.basic != Some(r)).map(|e| e.slack).fold(f64::INFINITY, f64::min);
        perturbed.push(PerturbedCheck { eps, c, min_slack, strict: min_slack > 0.0 });
    }
    let invariant_intermediates =
        if flag.kind() == FlagKind::Binary { Some(invariant_intermediates(flag, &en.candidates)?.len()) } else { None };
    let passed = basic_tight
        && min_nonbasic_slack.map_or(true, |s| s > SLACK_TOL)
        && gap_first.iter().all(|g| g.ok)
        && gap_second.iter().all(|g| g.ok)
        && invariant_intermediates.map_or(true, |n| n == 0);
    Ok(Certificate {
        data,
        system,
        report,
        basic_slacks,
        basic_tight,
        min_nonbasic_slack,
        gap_first,
        gap_second,
        perturbed,
        invariant_intermediates,
        subflag_count: en.subflags.len(),
        passed,
    })
}
