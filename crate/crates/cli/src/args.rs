use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "equisum",
    version,
    about = "Flag systems, rho constants and equal-sum simulations",
    long_about = "Flag systems, rho constants and equal-sum simulations.\n\n\
        Constants come from the rho-equations f(Gamma_(j+1)) = f(Gamma_j)^rho_j e^(dim V_(j+1)/V_j) \
        on cell trees of nested subspaces of Q^k. Certificates check the entropy condition \
        e(V') >= e(V) over cube-spanned subflags. The simulate commands estimate equal-subset-sum \
        and divisor-concentration statistics.\n\n\
        Exit status: 0 ok, 1 usage error, 2 guard, capacity or numerical failure, \
        3 certificate failure (check only)."
)]
pub struct Cli {
    /// Output format [default: table; csv for rho-table]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Same as --format json
    #[arg(long, global = true)]
    pub json: bool,
    /// Also write the CSV rows of the command to this file
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [env: EQUISUM_WORKERS]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// key = value file supplying defaults; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// rho_1..rho_J of the binary flags
    #[command(long_about = "rho_1..rho_J of the binary flags.\n\n\
        a-recursion: log a_(i,j) = 2 log a_(i,j-1) + log(1 + a_(i-1,j-1)^x / a_(i,j-1)^2 \
        - a_(i-1,j-2)^(2x) / a_(i,j-1)^2), solving L_(j+1,j+2)(rho_j) = rho_j L_(j,j+1) + 2^j by bisection.\n\
        genotype: the same equations through F(g) on genotypes (J <= 3).\n\
        tree: the same equations on the explicit cell tree of the binary flag (J <= 3).")]
    RhoTable {
        #[arg(long)]
        max_j: Option<usize>,
        #[arg(long, value_enum, default_value = "a-recursion")]
        method: RhoMethod,
    },
    /// Limit rho of the binary rho_j
    #[command(long_about = "Limit rho of the binary rho_j: the root of \
        1/(1 - rho/2) = log 2 + sum_j 2^-j 2 atanh(a_j^rho / a_(j+1)), \
        with a_1 = 2, a_2 = 2 + 2^rho, a_j = a_(j-1)^2 + a_(j-1)^rho - a_(j-2)^(2 rho).")]
    RhoLimit {
        /// Terms below tol * 1e-3 are dropped
        #[arg(long)]
        tol: Option<f64>,
    },
    /// theta_r for the binary flags and the approach of theta_r^(1/r) to rho/2
    #[command(long_about = "theta_r = (log 3 - 1) / (log 3 + sum_(i<r) 2^i / (rho_1 ... rho_i)) \
        for r = 1..R; rho_j past the tabulated range is replaced by the limit rho.")]
    Theta {
        #[arg(long)]
        r: Option<usize>,
    },
    /// eta = log 2 / log(2 / rho)
    Eta,
    /// Every closed-form and solved constant
    #[command(long_about = "Every closed-form and solved constant: limit rho and eta, theta_r, \
        beta_2 = 1 - 1/log 3, beta_3, beta_4, xi, lambda, and the constants of the flags \
        spanned by 1, omega^1, ..., omega^r.")]
    Constants {
        #[arg(long)]
        theta_r: Option<usize>,
    },
    /// Certificate for the optimal system (V, c*, mu*)
    #[command(long_about = "Builds the optimal measure mu* from the cell tree, the parameters c* \
        from tightness at the basic subflags, then evaluates e(V') - e(V) over every subflag whose \
        spaces are spanned by 1 and cube points. Also checks the entropy gaps \
        H(V_m) > dim V_(m+1)/V_m under mu*_(m+1) and H(V_(m-1)) - H(V_m) < dim V_m/V_(m-1), \
        and the strict condition for perturbed thresholds.\n\n\
        Exit status 3 when any check fails.")]
    Check {
        #[command(flatten)]
        flag: FlagArgs,
        /// Perturbation sizes eps for c_j - (1/2) sum_(l<j) eps^l
        #[arg(long, value_delimiter = ',')]
        perturb: Vec<f64>,
    },
    /// Optimal measure mu*, its Gamma masses, entropies and c*
    #[command(long_about = "Optimal measure: mu*(Gamma_r) = 1 and \
        mu*(C') / mu*(C) = f(C')^rho_(i-1) / f(C) for each child C' of C.")]
    Measures {
        #[command(flatten)]
        flag: FlagArgs,
    },
    /// Cell tree dump with genotypes, f values and masses
    #[command(long_about = "Cells are intersections of cosets of V_i with the cube; \
        each level-i cell splits into level-(i-1) cells. Prints every cell with its members, \
        genotype (binary flags), f value and mu* mass.")]
    Tree {
        #[command(flatten)]
        flag: FlagArgs,
    },
    /// Monte Carlo experiments
    #[command(subcommand)]
    Simulate(Sim),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RhoMethod {
    ARecursion,
    Genotype,
    Tree,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlagChoice {
    Binary,
    Mt,
    File,
}

#[derive(Args, Debug)]
pub struct FlagArgs {
    #[arg(long, value_enum)]
    pub flag: FlagChoice,
    #[arg(long)]
    pub order: Option<usize>,
    /// Flag file: line i lists 0/1 generators of V_i
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SimCommon {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Sim {
    /// P(A meet [D^c, D] has k distinct subsets with one sum), A logarithmic random
    #[command(long_about = "A contains each integer i independently with probability 1/i. \
        For each c, estimates the probability that A meet [D^c, D] has k distinct subsets with \
        equal sums, with a 95% Wilson interval. Sets of at most 26 elements are censused \
        exactly; larger ones by a birthday search. CSV rows: c,trial,set_size,k_max,exact.")]
    EqualSums {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, value_parser = parse_int)]
        d: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        c: Vec<f64>,
        #[arg(long)]
        k: Option<u64>,
        /// Birthday-search draws for large sets
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Tensor-power construction across windows [D2^(alpha^(i+1)), D2^(alpha^i))
    #[command(long_about = "Finds k equal sums inside each window [D2^(alpha^(i+1)), D2^(alpha^i)) \
        of A meet [D1, D2] and unions one member per successful window, giving k^(#successes) \
        distinct sets with one sum. CSV rows: trial,window,lo,hi,size,k_max,success.")]
    Amplify {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, value_parser = parse_int)]
        d1: Option<u64>,
        #[arg(long, value_parser = parse_int)]
        d2: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Delta(n) = max_t #{d | n : log d in [t, t+1]} for n uniform on [1, X]
    #[command(long_about = "Delta(n) = max_t #{d | n : log d in [t, t+1]} for n uniform on [1, X]. \
        CSV rows: trial,n,divisors,delta.")]
    DeltaInt {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long, value_parser = parse_int)]
        x: Option<u64>,
    },
    /// Delta(sigma) = max_r #{sub-collections of cycles of total length r}
    #[command(long_about = "Delta(sigma) = max_r #{sub-collections of cycles of total length r}, \
        the largest coefficient of prod_j (1 + x^j)^(C_j), for uniform permutations of [n]. \
        CSV rows: trial,n,cycle_type,delta.")]
    DeltaPerm {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Delta for factor-degree models of random polynomials over F_q
    #[command(long_about = "Delta(f) = max_r #{g | f : deg g = r} for the distinct-factor model \
        prod_d (1 + x^d)^(Z_d): Z_d ~ Poisson(1/d) (poisson) or Z_d ~ NB(m_d, q^-d) with m_d the \
        number of monic irreducibles of degree d (nb). Degrees run over [dmin, dmax], \
        by default [10 log n, n/(10 log n)]. CSV rows: trial,degrees,delta.")]
    DeltaPoly {
        #[command(flatten)]
        common: SimCommon,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        model: Option<PolyModelArg>,
        #[arg(long)]
        dmin: Option<usize>,
        #[arg(long)]
        dmax: Option<usize>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolyModelArg {
    Poisson,
    Nb,
}

/// Integers, also written as 1e6 or 2^40.
pub fn parse_int(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    if let Some((b, e)) = s.split_once('^') {
        let b: u64 = b.trim().parse().map_err(|_| format!("bad integer {s}"))?;
        let e: u32 = e.trim().parse().map_err(|_| format!("bad integer {s}"))?;
        return b.checked_pow(e).ok_or_else(|| format!("{s} overflows"));
    }
    let f: f64 = s.parse().map_err(|_| format!("bad integer {s}"))?;
    if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 {
        Ok(f as u64)
    } else {
        Err(format!("{s} is not a nonnegative integer"))
    }
}
