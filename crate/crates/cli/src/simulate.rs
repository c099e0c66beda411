//! simulate subcommands.

use crate::args::{PolyModelArg, Sim, SimCommon};
use crate::render::{big, fnum, kv_table, num, table, Output};
use crate::{pick, pick_int, CliError, Context};
use equisum_simlab::delta::{sample_delta_integer, sample_delta_perm, Aux, DeltaSample, DeltaStats, Param};
use equisum_simlab::poly::{degree_range, sample_delta_poly, DegreeSampler, PolyModel};
use equisum_simlab::subsetsum::{amplify_demo, equal_sums_probability, DEFAULT_DRAWS};
use equisum_simlab::{run_trials, wilson};
use serde_json::json;

pub const DEFAULT_C: [f64; 5] = [0.02, 0.05, 0.0898, 0.15, 0.3];

fn common(c: &SimCommon, ctx: &Context, trials: u64) -> Result<(u64, u64), CliError> {
    let seed = pick_int(c.seed, &ctx.config, "seed", 1)?;
    let trials = pick_int(c.trials, &ctx.config, "trials", trials)?;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    Ok((seed, trials))
}

pub fn dispatch(s: &Sim, ctx: &Context) -> Result<crate::render::Output, CliError> {
    let cfg = &ctx.config;
    match s {
        Sim::EqualSums { common: cm, d, c, k, draws } => {
            let (seed, trials) = common(cm, ctx, 2000)?;
            let d = pick_int(*d, cfg, "d", 1_000_000)?;
            let k = pick_int(*k, cfg, "k", 2)?;
            let draws = pick_int(*draws, cfg, "draws", DEFAULT_DRAWS)?;
            let cs = if !c.is_empty() { c.clone() } else { cfg.get_list("c")?.unwrap_or_else(|| DEFAULT_C.to_vec()) };
            equal_sums(d, &cs, k, trials, seed, draws, ctx.workers)
        }
        Sim::Amplify { common: cm, d1, d2, k, alpha, draws } => {
            let (seed, trials) = common(cm, ctx, 1)?;
            let d1 = pick_int(*d1, cfg, "d1", 2)?;
            let d2 = pick_int(*d2, cfg, "d2", 1_000_000)?;
            let k = pick_int(*k, cfg, "k", 2)?;
            let alpha = pick(*alpha, cfg, "alpha", 0.5)?;
            let draws = pick_int(*draws, cfg, "draws", DEFAULT_DRAWS)?;
            amplify(d1, d2, k, alpha, draws, trials, seed, ctx.workers)
        }
        Sim::DeltaInt { common: cm, x } => {
            let (seed, trials) = common(cm, ctx, 1000)?;
            let x = pick_int(*x, cfg, "x", 1_000_000_000_000)?;
            let st = sample_delta_integer(x, trials, seed, ctx.workers)?;
            let rows = st
                .samples
                .iter()
                .enumerate()
                .map(|(t, s)| {
                    let n = match s.param {
                        Param::Integer(n) => n,
                        _ => 0,
                    };
                    let dv = match s.aux {
                        Aux::DivisorCount(c) => c,
                        _ => 0,
                    };
                    vec![t.to_string(), n.to_string(), dv.to_string(), s.delta.to_string()]
                })
                .collect();
            Ok(delta_output("equisum.delta-int/1", json!({"x": x}), &[("X", x.to_string())], seed, &st)
                .with_csv(&["trial", "n", "divisors", "delta"], rows))
        }
        Sim::DeltaPerm { common: cm, n } => {
            let (seed, trials) = common(cm, ctx, 1000)?;
            let n = pick(*n, cfg, "n", 100usize)?;
            let st = sample_delta_perm(n, trials, seed, ctx.workers)?;
            let rows = st
                .samples
                .iter()
                .enumerate()
                .map(|(t, s)| vec![t.to_string(), n.to_string(), aux_list(s), s.delta.to_string()])
                .collect();
            Ok(delta_output("equisum.delta-perm/1", json!({"n": n}), &[("n", n.to_string())], seed, &st)
                .with_csv(&["trial", "n", "cycle_type", "delta"], rows))
        }
        Sim::DeltaPoly { common: cm, q, n, model, dmin, dmax } => {
            let (seed, trials) = common(cm, ctx, 1000)?;
            let q = pick_int(*q, cfg, "q", 2)?;
            let n = pick(*n, cfg, "n", 1000usize)?;
            let model = match model {
                Some(PolyModelArg::Poisson) => PolyModel::Poisson,
                Some(PolyModelArg::Nb) => PolyModel::NegBinomial,
                None => match cfg.raw("model") {
                    None | Some("nb") => PolyModel::NegBinomial,
                    Some("poisson") => PolyModel::Poisson,
                    Some(v) => return Err(CliError::Usage(format!("config key model: unknown value {v}"))),
                },
            };
            let (lo, hi) = degree_range(n);
            let dmin = pick(*dmin, cfg, "dmin", lo)?;
            let dmax = pick(*dmax, cfg, "dmax", hi)?;
            let sampler = DegreeSampler::new(q, n, model, Some((dmin, dmax)))?;
            let st = sample_delta_poly(&sampler, trials, seed, ctx.workers)?;
            let rows = st
                .samples
                .iter()
                .enumerate()
                .map(|(t, s)| vec![t.to_string(), aux_list(s), s.delta.to_string()])
                .collect();
            let (a, b) = sampler.range;
            Ok(delta_output(
                "equisum.delta-poly/1",
                json!({"q": q, "n": n, "model": model.name(), "dmin": a, "dmax": b}),
                &[
                    ("q", q.to_string()),
                    ("n", n.to_string()),
                    ("model", model.name().to_string()),
                    ("degrees", format!("[{a}, {b}]")),
                ],
                seed,
                &st,
            )
            .with_csv(&["trial", "degrees", "delta"], rows))
        }
    }
}

fn aux_list(s: &DeltaSample) -> String {
    match &s.aux {
        Aux::CycleType(v) | Aux::Degrees(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "),
        Aux::DivisorCount(c) => c.to_string(),
    }
}

fn delta_output(
    schema: &str,
    mut js: serde_json::Value,
    params: &[(&str, String)],
    seed: u64,
    st: &DeltaStats,
) -> Output {
    let m = js.as_object_mut().unwrap();
    m.insert("seed".into(), json!(seed));
    m.insert("trials".into(), json!(st.samples.len()));
    m.insert("mean".into(), num(st.mean));
    m.insert("min".into(), big(&st.min));
    m.insert("max".into(), big(&st.max));
    let mut pairs = params.to_vec();
    pairs.push(("seed", seed.to_string()));
    pairs.push(("trials", st.samples.len().to_string()));
    pairs.push(("mean Delta", fnum(st.mean)));
    pairs.push(("min Delta", st.min.to_string()));
    pairs.push(("max Delta", st.max.to_string()));
    Output::new(schema, js, kv_table(&pairs))
}

fn equal_sums(
    d: u64,
    cs: &[f64],
    k: u64,
    trials: u64,
    seed: u64,
    draws: u64,
    workers: usize,
) -> Result<Output, CliError> {
    if cs.is_empty() {
        return Err(CliError::Usage("--c needs at least one value".into()));
    }
    let mut reports = Vec::new();
    for &c in cs {
        reports.push(equal_sums_probability(d, c, k, trials, seed, workers, draws)?);
    }
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| reports[a].c.total_cmp(&reports[b].c));
    let monotone = order.windows(2).all(|w| reports[w[1]].proportion.lo <= reports[w[0]].proportion.hi);
    let summary: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let p = &r.proportion;
            let exact = r.trials.iter().filter(|t| t.exact).count();
            vec![
                fnum(r.c),
                r.window_lo.to_string(),
                p.successes.to_string(),
                p.trials.to_string(),
                fnum(p.estimate),
                fnum(p.lo),
                fnum(p.hi),
                exact.to_string(),
            ]
        })
        .collect();
    let mut t = table(&["c", "D^c", "hits", "trials", "estimate", "ci_lo", "ci_hi", "exact"], &summary);
    t += &format!("\nD = {d}, k = {k}, seed = {seed}; non-increasing in c within 95% intervals: {monotone}\n");
    let js = json!({
        "d": d, "k": k, "seed": seed, "trials": trials, "draws": draws,
        "monotone_within_ci": monotone,
        "rows": reports.iter().map(|r| json!({
            "c": num(r.c),
            "window_lo": r.window_lo,
            "successes": r.proportion.successes,
            "trials": r.proportion.trials,
            "estimate": num(r.proportion.estimate),
            "ci": [num(r.proportion.lo), num(r.proportion.hi)],
            "exact_trials": r.trials.iter().filter(|t| t.exact).count(),
        })).collect::<Vec<_>>(),
    });
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.trials.iter().map(move |t| {
                vec![fnum(r.c), t.trial.to_string(), t.set_size.to_string(), t.k_max.to_string(), t.exact.to_string()]
            })
        })
        .collect();
    Ok(Output::new("equisum.equal-sums/1", js, t).with_csv(&["c", "trial", "set_size", "k_max", "exact"], rows))
}

#[allow(clippy::too_many_arguments)]
fn amplify(
    d1: u64,
    d2: u64,
    k: u64,
    alpha: f64,
    draws: u64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Output, CliError> {
    let reps = run_trials(seed, trials, workers, |_, rng| amplify_demo(d1, d2, k, alpha, draws, rng))?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut js_trials = Vec::new();
    for (t, r) in reps.iter().enumerate() {
        let wins = r.windows.iter().filter(|w| w.success).count();
        for (i, w) in r.windows.iter().enumerate() {
            rows.push(vec![
                t.to_string(),
                i.to_string(),
                w.lo.to_string(),
                w.hi.to_string(),
                w.size.to_string(),
                w.k_max.to_string(),
                w.success.to_string(),
            ]);
        }
        let sets = r.result.witness_values(&r.elements);
        text += &format!(
            "trial {t}: |A| = {}, {} of {} windows succeed, {} sets with sum {}\n",
            r.elements.len(),
            wins,
            r.windows.len(),
            r.result.k_max,
            r.result.witness_sum
        );
        js_trials.push(json!({
            "trial": t,
            "set_size": r.elements.len(),
            "successful_windows": wins,
            "windows": r.windows.iter().map(|w| json!({"lo": w.lo, "hi": w.hi, "size": w.size, "k_max": w.k_max, "success": w.success})).collect::<Vec<_>>(),
            "k_max": r.result.k_max,
            "sum": r.result.witness_sum.to_string(),
            "witnesses": sets,
        }));
    }
    let hits = reps.iter().filter(|r| r.result.k_max >= k).count() as u64;
    let p = wilson(hits, trials);
    text += &format!(
        "\n{} of {} trials reach {} sets; estimate {} [{}, {}]\n",
        hits,
        trials,
        k,
        fnum(p.estimate),
        fnum(p.lo),
        fnum(p.hi)
    );
    let js = json!({
        "d1": d1, "d2": d2, "k": k, "alpha": num(alpha), "seed": seed,
        "trials": js_trials,
        "estimate": num(p.estimate), "ci": [num(p.lo), num(p.hi)],
    });
    Ok(Output::new("equisum.amplify/1", js, text)
        .with_csv(&["trial", "window", "lo", "hi", "size", "k_max", "success"], rows))
}
