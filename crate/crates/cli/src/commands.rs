//! rho, constants, certificates, measures and cell trees.

use crate::args::{Cmd, FlagArgs, FlagChoice, RhoMethod};
use crate::render::{fnum, kv_table, num, nums, table, Output};
use crate::{pick, CliError, Context, Format};
use equisum_core::entropy::SlackStatus;
use equisum_core::flags::{binary_flag, mt_flag, parse_flag_spec, CellTree, Flag, FlagKind};
use equisum_core::optmeas::{certify_with, optimal_data, PERTURBATIONS};
use equisum_core::rho::{
    self, f_tree_values, rho_limit, solve_flag_rhos, solve_rhos, solve_rhos_genotype, RhoSolution,
};
use serde_json::{json, Value};

pub const RHO_TABLE_MAX: usize = 40;
pub const THETA_MAX: usize = 60;
/// rho_1..rho_13 are solved; theta uses the limit past that.
pub const TABLE_DEPTH: usize = 13;

pub fn dispatch(cmd: &Cmd, ctx: &Context) -> Result<Output, CliError> {
    let cfg = &ctx.config;
    match cmd {
        Cmd::RhoTable { max_j, method } => rho_table(pick(*max_j, cfg, "max_j", 13)?, *method),
        Cmd::RhoLimit { tol } => limit(pick(*tol, cfg, "tol", 1e-15)?),
        Cmd::Theta { r } => theta(pick(*r, cfg, "r", 20)?),
        Cmd::Eta => eta(),
        Cmd::Constants { theta_r } => constants(pick(*theta_r, cfg, "theta_r", 20)?),
        Cmd::Check { flag, perturb } => check(flag, perturb, ctx),
        Cmd::Measures { flag } => measures(flag, ctx),
        Cmd::Tree { flag } => tree(flag, ctx),
        Cmd::Simulate(s) => crate::simulate::dispatch(s, ctx),
    }
}

fn rho_table(max_j: usize, method: RhoMethod) -> Result<Output, CliError> {
    if max_j == 0 || max_j > RHO_TABLE_MAX {
        return Err(CliError::Guard(format!("max-j must lie in 1..={RHO_TABLE_MAX}")));
    }
    let sol: RhoSolution = match method {
        RhoMethod::ARecursion => solve_rhos(max_j)?.0,
        RhoMethod::Genotype | RhoMethod::Tree if max_j > 3 => {
            return Err(CliError::Guard("genotype and tree methods reach j <= 3".into()))
        }
        RhoMethod::Genotype => solve_rhos_genotype(max_j)?,
        RhoMethod::Tree => solve_flag_rhos(&binary_flag(max_j + 1)?)?,
    };
    let rows: Vec<Vec<String>> = sol
        .rhos
        .iter()
        .zip(&sol.residuals)
        .enumerate()
        .map(|(i, (r, e))| vec![(i + 1).to_string(), fnum(*r), fnum(*e)])
        .collect();
    let js = json!({
        "method": sol.method.name(),
        "max_j": max_j,
        "rows": sol.rhos.iter().zip(&sol.residuals).enumerate()
            .map(|(i, (r, e))| json!({"j": i + 1, "rho": num(*r), "residual": num(*e)}))
            .collect::<Vec<_>>(),
    });
    let header = ["j", "rho_j", "residual"];
    let mut out = Output::new("equisum.rho-table/1", js, table(&header, &rows)).with_csv(&header, rows);
    out.default_format = Format::Csv;
    Ok(out)
}

fn limit(tol: f64) -> Result<Output, CliError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Usage("tol must lie in (0, 1)".into()));
    }
    let l = rho_limit(tol);
    let eta = rho::eta(l.rho);
    let js = json!({"rho": num(l.rho), "terms": l.terms, "tail": num(l.tail), "half_rho": num(l.rho / 2.0), "eta": num(eta)});
    let pairs = [
        ("rho", fnum(l.rho)),
        ("rho/2", fnum(l.rho / 2.0)),
        ("eta", fnum(eta)),
        ("terms", l.terms.to_string()),
        ("tail", fnum(l.tail)),
    ];
    Ok(kv_output("equisum.rho-limit/1", js, &pairs))
}

fn kv_output(schema: &str, js: Value, pairs: &[(&str, String)]) -> Output {
    let rows: Vec<Vec<String>> = pairs.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
    Output::new(schema, js, kv_table(pairs)).with_csv(&["key", "value"], rows)
}

fn theta(r_max: usize) -> Result<Output, CliError> {
    if r_max == 0 || r_max > THETA_MAX {
        return Err(CliError::Guard(format!("r must lie in 1..={THETA_MAX}")));
    }
    let sol = solve_rhos(TABLE_DEPTH)?.0;
    let lim = rho_limit(1e-16);
    let half = lim.rho / 2.0;
    let mut rows = Vec::new();
    let mut js_rows = Vec::new();
    for r in 1..=r_max {
        let t = rho::theta(r, &sol.rhos, lim.rho);
        let root = t.powf(1.0 / r as f64);
        let src = if r - 1 <= TABLE_DEPTH { "solved" } else { "limit" };
        rows.push(vec![r.to_string(), fnum(t), fnum(root), fnum((root - half).abs()), src.to_string()]);
        js_rows.push(
            json!({"r": r, "theta": num(t), "root": num(root), "error": num((root - half).abs()), "rho_source": src}),
        );
    }
    let js = json!({"half_rho": num(half), "rows": js_rows});
    let header = ["r", "theta_r", "theta_r^(1/r)", "|theta_r^(1/r) - rho/2|", "rho_source"];
    Ok(Output::new("equisum.theta/1", js, table(&header, &rows))
        .with_csv(&["r", "theta", "root", "error", "rho_source"], rows))
}

fn eta() -> Result<Output, CliError> {
    let l = rho_limit(1e-16);
    let e = rho::eta(l.rho);
    let js = json!({"eta": num(e), "rho": num(l.rho)});
    Ok(kv_output("equisum.eta/1", js, &[("eta", fnum(e)), ("rho", fnum(l.rho))]))
}

fn constants(theta_r: usize) -> Result<Output, CliError> {
    if theta_r == 0 || theta_r > THETA_MAX {
        return Err(CliError::Guard(format!("theta-r must lie in 1..={THETA_MAX}")));
    }
    let c = rho::constants(theta_r)?;
    let js = json!({
        "rho_limit": num(c.rho_limit),
        "eta": num(c.eta),
        "binary_base": num(c.binary_base),
        "beta2": num(c.beta2),
        "beta3": num(c.beta3),
        "beta4": num(c.beta4),
        "xi": num(c.xi),
        "lambda": num(c.lambda),
        "mt_kappa": num(c.mt_kappa),
        "mt_rho1": num(c.mt_rho1),
        "mt_base": num(c.mt_base),
        "mt_exponent_1984": num(c.mt_exponent_1984),
        "mt_exponent_2009": num(c.mt_exponent_2009),
        "theta": nums(&c.theta),
        "theta_table_depth": c.theta_table_depth,
    });
    let mut pairs = vec![
        ("rho_limit", fnum(c.rho_limit)),
        ("eta", fnum(c.eta)),
        ("binary_base", fnum(c.binary_base)),
        ("beta2", fnum(c.beta2)),
        ("beta3", fnum(c.beta3)),
        ("beta4", fnum(c.beta4)),
        ("xi", fnum(c.xi)),
        ("lambda", fnum(c.lambda)),
        ("mt_kappa", fnum(c.mt_kappa)),
        ("mt_rho1", fnum(c.mt_rho1)),
        ("mt_base", fnum(c.mt_base)),
        ("mt_exponent_1984", fnum(c.mt_exponent_1984)),
        ("mt_exponent_2009", fnum(c.mt_exponent_2009)),
    ];
    let names: Vec<String> = (1..=c.theta.len()).map(|r| format!("theta_{r}")).collect();
    for (n, t) in names.iter().zip(&c.theta) {
        pairs.push((n.as_str(), fnum(*t)));
    }
    Ok(kv_output("equisum.constants/1", js, &pairs))
}

pub fn load_flag(a: &FlagArgs, ctx: &Context) -> Result<Flag, CliError> {
    let order = match a.order {
        Some(o) => Some(o),
        None => ctx.config.get::<usize>("order")?,
    };
    let need = || order.ok_or_else(|| CliError::Usage("--order is required".into()));
    Ok(match a.flag {
        FlagChoice::Binary => binary_flag(need()?)?,
        FlagChoice::Mt => mt_flag(need()?)?,
        FlagChoice::File => {
            let p = a.file.as_ref().ok_or_else(|| CliError::Usage("--flag file needs --file".into()))?;
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let f = parse_flag_spec(&text)?;
            if let Some(o) = order {
                if o != f.order() {
                    return Err(CliError::Usage(format!("--order {o} but the file has order {}", f.order())));
                }
            }
            f
        }
    })
}

pub fn flag_rhos(f: &Flag) -> Result<Vec<f64>, CliError> {
    Ok(match f.kind() {
        FlagKind::Binary => solve_rhos(f.order().max(1))?.0.rhos,
        _ => solve_flag_rhos(f)?.rhos,
    })
}

fn matrix(h: &[Vec<f64>]) -> Value {
    Value::Array(h.iter().map(|r| nums(r)).collect())
}

fn check(a: &FlagArgs, perturb: &[f64], ctx: &Context) -> Result<Output, CliError> {
    let f = load_flag(a, ctx)?;
    let rhos = flag_rhos(&f)?;
    let eps: Vec<f64> = if !perturb.is_empty() {
        perturb.to_vec()
    } else {
        ctx.config.get_list("perturb")?.unwrap_or_else(|| PERTURBATIONS.to_vec())
    };
    if eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Usage("perturbations must lie in (0, 1)".into()));
    }
    let c = certify_with(&f, &rhos, &eps)?;
    let r = f.order();
    let rhos_used = &c.data.rhos[..r.saturating_sub(1).min(c.data.rhos.len())];
    let rep = &c.report;
    let gap = |g: &equisum_core::optmeas::GapCheck| json!({"i": g.i, "m": g.m, "value": num(g.value), "bound": num(g.bound), "ok": g.ok});
    let js = json!({
        "flag": f.kind().name(),
        "order": r,
        "ambient_dim": f.ambient_dim(),
        "dims": f.dims(),
        "rhos": nums(rhos_used),
        "c_star": nums(&c.data.c_star),
        "gamma_mass": nums(&c.data.gamma_mass),
        "entropy": matrix(&c.data.entropy),
        "e_full": num(rep.e_full),
        "universe": rep.universe,
        "subflag_count": c.subflag_count,
        "basic_slacks": c.basic_slacks.iter().map(|(m, s)| json!({"m": m, "slack": num(*s), "status": SlackStatus::of(*s).name()})).collect::<Vec<_>>(),
        "basic_tight": c.basic_tight,
        "min_nonbasic_slack": c.min_nonbasic_slack.map(num),
        "min_slack": num(rep.min_slack),
        "argmin": rep.argmin,
        "gap_first": c.gap_first.iter().map(gap).collect::<Vec<_>>(),
        "gap_second": c.gap_second.iter().map(gap).collect::<Vec<_>>(),
        "perturbed": c.perturbed.iter().map(|p| json!({"eps": num(p.eps), "c": nums(&p.c), "min_slack": num(p.min_slack), "strict": p.strict})).collect::<Vec<_>>(),
        "invariant_intermediates": c.invariant_intermediates,
        "holds": rep.holds,
        "strict": rep.strict,
        "passed": c.passed,
        "entries": rep.entries.iter().map(|e| json!({
            "id": e.id, "dims": e.dims, "basic": e.basic, "e_value": num(e.e_value),
            "slack": num(e.slack), "status": e.status.name(),
        })).collect::<Vec<_>>(),
    });
    let mut t = kv_table(&[
        ("flag", format!("{} order {}", f.kind().name(), r)),
        ("dims", format!("{:?}", f.dims())),
        ("rhos", rhos_used.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(" ")),
        ("c*", c.data.c_star.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(" ")),
        ("e(V)", fnum(rep.e_full)),
        ("subflags", format!("{} ({})", c.subflag_count, rep.universe)),
        ("min non-basic slack", c.min_nonbasic_slack.map_or("none".into(), fnum)),
        ("invariant intermediates", c.invariant_intermediates.map_or("not checked".into(), |n| n.to_string())),
        ("passed", c.passed.to_string()),
    ]);
    t.push('\n');
    let brows: Vec<Vec<String>> = c
        .basic_slacks
        .iter()
        .map(|(m, s)| vec![format!("basic({m})"), fnum(*s), SlackStatus::of(*s).name().into()])
        .collect();
    t += &table(&["subflag", "slack", "status"], &brows);
    t.push('\n');
    let grows: Vec<Vec<String>> = c
        .gap_first
        .iter()
        .map(|g| {
            vec![
                "H_(m+1)(V_m) > d".into(),
                g.i.to_string(),
                g.m.to_string(),
                fnum(g.value),
                fnum(g.bound),
                g.ok.to_string(),
            ]
        })
        .chain(c.gap_second.iter().map(|g| {
            vec![
                "H_i(V_(m-1)) - H_i(V_m) < d".into(),
                g.i.to_string(),
                g.m.to_string(),
                fnum(g.value),
                fnum(g.bound),
                g.ok.to_string(),
            ]
        }))
        .collect();
    t += &table(&["gap", "i", "m", "value", "bound", "ok"], &grows);
    t.push('\n');
    let prows: Vec<Vec<String>> =
        c.perturbed.iter().map(|p| vec![fnum(p.eps), fnum(p.min_slack), p.strict.to_string()]).collect();
    t += &table(&["eps", "min slack", "strict"], &prows);
    let erows: Vec<Vec<String>> = rep
        .entries
        .iter()
        .map(|e| {
            vec![
                e.id.to_string(),
                e.dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" "),
                e.basic.map_or(String::new(), |m| m.to_string()),
                fnum(e.e_value),
                fnum(e.slack),
                e.status.name().into(),
            ]
        })
        .collect();
    let out =
        Output::new("equisum.check/1", js, t).with_csv(&["id", "dims", "basic", "e_value", "slack", "status"], erows);
    if c.passed {
        Ok(out)
    } else {
        Err(CliError::Certificate(out))
    }
}

fn measures(a: &FlagArgs, ctx: &Context) -> Result<Output, CliError> {
    let f = load_flag(a, ctx)?;
    let rhos = flag_rhos(&f)?;
    let d = optimal_data(&f, &rhos)?;
    let mut pts: Vec<(u64, f64)> = d.mu_star.support().filter(|p| p.1 > 0.0).collect();
    pts.sort_by_key(|p| f.display_order(p.0));
    let rows: Vec<Vec<String>> = pts.iter().map(|&(x, w)| vec![f.point_string(x), fnum(w)]).collect();
    let js = json!({
        "flag": f.kind().name(),
        "order": f.order(),
        "gamma_mass": nums(&d.gamma_mass),
        "c_star": nums(&d.c_star),
        "entropy": matrix(&d.entropy),
        "support": pts.iter().map(|&(x, w)| json!({"point": f.point_string(x), "weight": num(w)})).collect::<Vec<_>>(),
    });
    let mut t = kv_table(&[
        ("flag", format!("{} order {}", f.kind().name(), f.order())),
        ("mu*(Gamma_j)", d.gamma_mass.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(" ")),
        ("c*", d.c_star.iter().map(|x| fnum(*x)).collect::<Vec<_>>().join(" ")),
    ]);
    t.push('\n');
    t += &table(&["point", "mu*"], &rows);
    Ok(Output::new("equisum.measures/1", js, t).with_csv(&["point", "weight"], rows))
}

fn tree(a: &FlagArgs, ctx: &Context) -> Result<Output, CliError> {
    let f = load_flag(a, ctx)?;
    let r = f.order();
    let rhos = flag_rhos(&f)?;
    let d = optimal_data(&f, &rhos)?;
    let all: Vec<u64> = (0..1u64 << f.ambient_dim()).collect();
    let tr = CellTree::below(&f, r, &all)?;
    let fv = f_tree_values(&tr, &rhos);
    let mut parent: Vec<Vec<Option<usize>>> = tr.levels.iter().map(|l| vec![None; l.len()]).collect();
    for i in 1..=r {
        for (p, ch) in tr.children[i].iter().enumerate() {
            for &c in ch {
                parent[i - 1][c] = Some(p);
            }
        }
    }
    let mut text = String::new();
    let mut rows = Vec::new();
    let mut cells_js = Vec::new();
    let mut stack: Vec<(usize, usize)> = (0..tr.levels[r].len()).rev().map(|c| (r, c)).collect();
    while let Some((i, c)) = stack.pop() {
        let cell = &tr.levels[i][c];
        let members: Vec<String> = cell.members.iter().map(|&x| f.point_string(x)).collect();
        let g = cell.genotype.as_ref().map(|g| g.to_string()).unwrap_or_default();
        let fval = fv.get(i).map(|v| v[c]);
        let mass = d.mu_star.mass(&cell.members);
        text += &format!(
            "{}V_{} cell {}{}  f = {}  mu* = {}  {{{}}}\n",
            "  ".repeat(r - i),
            i,
            c,
            if g.is_empty() { String::new() } else { format!("  g = {g}") },
            fval.map_or("-".into(), fnum),
            fnum(mass),
            members.join(" ")
        );
        rows.push(vec![
            i.to_string(),
            c.to_string(),
            parent[i][c].map_or(String::new(), |p| p.to_string()),
            cell.members.len().to_string(),
            g.clone(),
            fval.map_or(String::new(), fnum),
            fnum(mass),
            members.join(" "),
        ]);
        cells_js.push(json!({
            "level": i, "index": c, "parent": parent[i][c], "genotype": if g.is_empty() { Value::Null } else { Value::String(g) },
            "f": fval.map(num), "mass": num(mass), "members": members,
        }));
        if i > 0 {
            for &ch in tr.children[i][c].iter().rev() {
                stack.push((i - 1, ch));
            }
        }
    }
    let js = json!({"flag": f.kind().name(), "order": r, "rhos": nums(&rhos[..r.saturating_sub(1).min(rhos.len())]), "cells": cells_js});
    Ok(Output::new("equisum.tree/1", js, text)
        .with_csv(&["level", "cell", "parent", "size", "genotype", "f", "mass", "members"], rows))
}
