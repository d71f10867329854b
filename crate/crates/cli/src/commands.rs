use std::path::Path;

use fiid_core::bounds::{bound_report, interpolation_params};
use fiid_core::counting::{brute_force_table, enumerate_integer_profiles, expected_partition_count_exact};
use fiid_core::coupling::{
    intersection_densities, sample_ensemble, stability_moments, tune_p, StabilityOptions, TuneOptions,
};
use fiid_core::factor::{interpolate_factor, interpolation_coin_density, local_min_is, nibble_tuned, project};
use fiid_core::graph::{enumerate_pairings, pairing_count};
use fiid_core::orient::{certify, orient_no_source_sink};
use fiid_core::seed::derive;
use fiid_core::stats::{
    edge_profile, entropy_functional, percolation_stats, sample_trial, EdgeProfile, PercStats,
};
use fiid_core::{BlockFactor, LabelField, Projection, RegularMultigraph};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::report::{Check, Report, Table};
use crate::{field, CliError, Command, GraphArgs, GraphSource};

/// Pairings listed in full by `oracle` up to this many.
const MAX_LISTED_PAIRINGS: u128 = 10_395;

pub fn run(cmd: &Command) -> Result<Report, CliError> {
    match cmd {
        Command::GenGraph(g) => gen_graph(g),
        Command::Simulate {
            factor,
            graph,
            trials,
            mode,
        } => simulate(factor, graph, *trials, *mode),
        Command::Profile {
            factor,
            graph,
            mode,
            exact,
        } => profile(factor, graph, *mode, *exact),
        Command::EntropyCheck {
            factor,
            graph,
            trials,
            mode,
            floor,
        } => entropy_check(factor, graph, *trials, *mode, *floor),
        Command::Bound { c, d, eps, rho } => bound(*c, *d, *eps, *rho),
        Command::Interpolate {
            c,
            p,
            d,
            base,
            n,
            trials,
            seed,
            density_tol,
            corr_tol,
        } => interpolate(*c, *p, *d, base, *n, *trials, *seed, (*density_tol, *corr_tol)),
        Command::Couple {
            factor,
            graph,
            p,
            k,
            trials,
            m,
            mode,
            moments,
            z_max,
            target,
            u,
            tolerance,
        } => couple(
            factor,
            graph,
            *p,
            StabilityOptions {
                k: *k,
                m: *m,
                mode: *mode,
            },
            *trials,
            moments,
            *z_max,
            target.map(|t| (t, *u, *tolerance)),
        ),
        Command::Orient {
            graph,
            trials,
            min_peel_rate,
        } => orient(graph, *trials, *min_peel_rate),
        Command::Oracle { n, d, colours } => oracle(*n, *d, *colours),
    }
}

fn sample_graph(g: &GraphArgs) -> Result<RegularMultigraph, CliError> {
    RegularMultigraph::sample(g.n, g.d, g.seed).map_err(field("--n/--d"))
}

fn read_graph(path: &Path) -> Result<RegularMultigraph, CliError> {
    let text = std::fs::read_to_string(path)?;
    RegularMultigraph::from_text(&text).map_err(field("--graph-file"))
}

/// The file's graph, or `None` with the sampling parameters when there is no file.
fn resolve(src: &GraphSource) -> Result<(Option<RegularMultigraph>, GraphArgs), CliError> {
    match &src.graph_file {
        Some(path) => {
            let g = read_graph(path)?;
            let args = GraphArgs { n: g.n(), d: g.d(), seed: src.seed };
            Ok((Some(g), args))
        }
        None => {
            let args = GraphArgs {
                n: src.n.expect("clap requires --n without --graph-file"),
                d: src.d.expect("clap requires --d without --graph-file"),
                seed: src.seed,
            };
            Ok((None, args))
        }
    }
}

fn check_arity(factor: &BlockFactor, d: usize) -> Result<(), CliError> {
    match factor.arity() {
        Some(a) if a != d => Err(CliError::Invalid {
            field: "--factor",
            source: fiid_core::Error::DegreeMismatch { expected: a, actual: d },
        }),
        _ => Ok(()),
    }
}

fn graph_config(g: &GraphArgs) -> Value {
    json!({"n": g.n, "d": g.d, "seed": g.seed})
}

fn f(x: f64) -> String {
    x.to_string()
}

fn gen_graph(g: &GraphArgs) -> Result<Report, CliError> {
    let graph = sample_graph(g)?;
    let mut r = Report::new("gen-graph", graph_config(g));
    r.result = json!({
        "n": graph.n(),
        "d": graph.d(),
        "edges": graph.n() * graph.d() / 2,
        "loops": graph.loop_count(),
        "pairing": graph.pairing(),
    });
    r.table = Table::new(&["half_edge", "partner"]);
    for (h, &p) in graph.pairing().iter().enumerate() {
        r.table.push(vec![h.to_string(), p.to_string()]);
    }
    r.text = Some(graph.to_text());
    Ok(r)
}

fn perc_record(trial: usize, s: &PercStats) -> Value {
    let largest = s.component_sizes.keys().next_back().copied().unwrap_or(0);
    let components: usize = s.component_sizes.values().sum();
    json!({
        "trial": trial,
        "in_set": s.in_set,
        "alpha": s.alpha,
        "rho": s.rho,
        "avdeg": s.avdeg,
        "components": components,
        "largest_component": largest,
    })
}

fn run_trials<T: Send>(
    trials: usize,
    body: impl Fn(u64) -> fiid_core::Result<T> + Sync + Send,
) -> Result<Vec<T>, CliError> {
    Ok((0..trials as u64)
        .into_par_iter()
        .map(body)
        .collect::<fiid_core::Result<Vec<T>>>()?)
}

fn simulate(factor: &BlockFactor, g: &GraphArgs, trials: usize, mode: Projection) -> Result<Report, CliError> {
    check_arity(factor, g.d)?;
    sample_graph(&GraphArgs { n: g.n, d: g.d, seed: 0 })?;
    if factor.colours() != 2 {
        return Err(CliError::Usage("simulate needs a binary factor".into()));
    }
    let stats = run_trials(trials, |t| {
        let (graph, col) = sample_trial(factor, g.n, g.d, g.seed, t, mode)?;
        percolation_stats(&col.colours, &graph)
    })?;
    let mut r = Report::new(
        "simulate",
        json!({"factor": factor.to_string(), "graph": graph_config(g), "trials": trials, "mode": mode}),
    );
    r.table = Table::new(&["trial", "in_set", "alpha", "rho", "avdeg", "components", "largest_component"]);
    for (t, s) in stats.iter().enumerate() {
        let rec = perc_record(t, s);
        r.table.push(vec![
            t.to_string(),
            s.in_set.to_string(),
            f(s.alpha),
            f(s.rho),
            f(s.avdeg),
            rec["components"].to_string(),
            rec["largest_component"].to_string(),
        ]);
        r.records.push(rec);
    }
    for (name, get) in [
        ("alpha", (|s: &PercStats| s.alpha) as fn(&PercStats) -> f64),
        ("rho", |s| s.rho),
        ("avdeg", |s| s.avdeg),
    ] {
        r.aggregate(name, &stats.iter().map(get).collect::<Vec<_>>());
    }
    Ok(r)
}

fn profile(factor: &BlockFactor, src: &GraphSource, mode: Projection, exact: bool) -> Result<Report, CliError> {
    let (from_file, g) = resolve(src)?;
    let g = &g;
    let graph_file = src.graph_file.as_deref();
    let (graph, col) = match from_file {
        Some(graph) => {
            check_arity(factor, graph.d())?;
            let labels = LabelField::sample(graph.n(), derive(g.seed, "labels", 0));
            let col = project(factor, &graph, &labels, mode)?;
            (graph, col)
        }
        None => {
            check_arity(factor, g.d)?;
            sample_graph(&GraphArgs { n: g.n, d: g.d, seed: 0 })?;
            sample_trial(factor, g.n, g.d, g.seed, 0, mode)?
        }
    };
    let prof = edge_profile(&col, &graph)?;
    let counts = prof.counts.clone().expect("empirical profile carries counts");
    let mut r = Report::new(
        "profile",
        json!({
            "factor": factor.to_string(),
            "graph": graph_config(&GraphArgs { n: graph.n(), d: graph.d(), seed: g.seed }),
            "graph_file": graph_file.map(|p| p.display().to_string()),
            "mode": mode,
            "exact": exact,
        }),
    );
    let perc = if prof.colours == 2 {
        Some(percolation_stats(&col.colours, &graph)?)
    } else {
        None
    };
    r.result = json!({
        "colours": prof.colours,
        "p": prof.p,
        "pi": prof.pi,
        "pair_counts": counts.pair,
        "vertex_counts": counts.vertex,
        "entropy_functional": entropy_functional(&prof, graph.d())?,
        "percolation": perc.as_ref().map(|s| perc_record(0, s)),
    });
    r.table = profile_table(&prof, exact);
    Ok(r)
}

fn profile_table(prof: &EdgeProfile, exact: bool) -> Table {
    let mut t = Table::new(&["kind", "i", "j", "value"]);
    let k = prof.colours;
    let counts = prof.counts.as_ref().filter(|_| exact);
    for i in 0..k {
        for j in 0..k {
            let v = match counts {
                Some(c) => format!("{}/{}", c.pair(i, j), c.directed_edges()),
                None => f(prof.p(i, j)),
            };
            t.push(vec!["P".into(), i.to_string(), j.to_string(), v]);
        }
    }
    for i in 0..k {
        let v = match counts {
            Some(c) => format!("{}/{}", c.vertex[i], c.n),
            None => f(prof.pi[i]),
        };
        t.push(vec!["pi".into(), i.to_string(), String::new(), v]);
    }
    t
}

fn entropy_check(
    factor: &BlockFactor,
    g: &GraphArgs,
    trials: usize,
    mode: Projection,
    floor: f64,
) -> Result<Report, CliError> {
    check_arity(factor, g.d)?;
    sample_graph(&GraphArgs { n: g.n, d: g.d, seed: 0 })?;
    if trials == 0 {
        return Err(CliError::Usage("invalid --trials: need at least one trial".into()));
    }
    let values = run_trials(trials, |t| {
        let (graph, col) = sample_trial(factor, g.n, g.d, g.seed, t, mode)?;
        entropy_functional(&edge_profile(&col, &graph)?, g.d)
    })?;
    let mut r = Report::new(
        "entropy-check",
        json!({"factor": factor.to_string(), "graph": graph_config(g), "trials": trials, "mode": mode, "floor": floor}),
    );
    r.table = Table::new(&["trial", "functional"]);
    for (t, &v) in values.iter().enumerate() {
        r.records.push(json!({"trial": t, "functional": v}));
        r.table.push(vec![t.to_string(), f(v)]);
    }
    r.aggregate("functional", &values);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    r.checks.push(Check::new(
        "functional_above_floor",
        min >= floor,
        format!("smallest value {min} against floor {floor}"),
    ));
    Ok(r)
}

fn bound(c: f64, d: usize, eps: f64, rho: Option<f64>) -> Result<Report, CliError> {
    let rep = bound_report(c, d, eps, rho).map_err(field("--c/--d/--eps/--rho"))?;
    let mut r = Report::new("bound", json!({"c": c, "d": d, "eps": eps, "rho": rho}));
    r.result = serde_json::to_value(&rep)?;
    r.table = Table::new(&["field", "value"]);
    if let Value::Object(map) = &r.result {
        for (k, v) in map {
            r.table.push(vec![k.clone(), v.to_string()]);
        }
    }
    if let Some(&larger) = rep.roots.last() {
        r.checks.push(Check::new(
            "larger_root_floor",
            larger >= rep.larger_root_floor,
            format!("larger root {larger} against floor {}", rep.larger_root_floor),
        ));
    }
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn interpolate(
    c: f64,
    p: f64,
    d: usize,
    base: &str,
    n: usize,
    trials: usize,
    seed: u64,
    (density_tol, corr_tol): (f64, f64),
) -> Result<Report, CliError> {
    let params = interpolation_params(c, p).map_err(field("--c/--p"))?;
    let base_factor = match base {
        "nibble" => nibble_tuned(d).map_err(field("--d"))?,
        "localmin" => local_min_is(),
        other => return Err(CliError::Usage(format!("invalid --base: {other:?} (nibble or localmin)"))),
    };
    let factor = interpolate_factor(base_factor, params.x, p, d).map_err(field("--d"))?;
    let coin = interpolation_coin_density(params.x, d);
    let unit = (d as f64).ln() / d as f64;
    let mut r = Report::new(
        "interpolate",
        json!({"c": c, "p": p, "d": d, "base": base, "n": n, "trials": trials, "seed": seed,
               "density_tol": density_tol, "corr_tol": corr_tol}),
    );
    let mut result = json!({
        "factor": factor.to_string(),
        "x": params.x,
        "target_density_factor": params.density_factor,
        "target_correlation": c,
        "coin_density": coin,
        "coin_density_capped": params.x * unit > 1.0,
    });
    if trials > 0 {
        sample_graph(&GraphArgs { n, d, seed: 0 })?;
        let stats = run_trials(trials, |t| {
            let (graph, col) = sample_trial(&factor, n, d, seed, t, Projection::Local)?;
            percolation_stats(&col.colours, &graph)
        })?;
        r.table = Table::new(&["trial", "alpha", "rho", "density_factor"]);
        for (t, s) in stats.iter().enumerate() {
            r.records.push(json!({"trial": t, "alpha": s.alpha, "rho": s.rho, "density_factor": s.alpha / unit}));
            r.table.push(vec![t.to_string(), f(s.alpha), f(s.rho), f(s.alpha / unit)]);
        }
        let factors: Vec<f64> = stats.iter().map(|s| s.alpha / unit).collect();
        let rhos: Vec<f64> = stats.iter().map(|s| s.rho).collect();
        r.aggregate("density_factor", &factors);
        r.aggregate("rho", &rhos);
        let mean_factor = factors.iter().sum::<f64>() / trials as f64;
        let mean_rho = rhos.iter().sum::<f64>() / trials as f64;
        result["measured_density_factor"] = json!(mean_factor);
        result["measured_correlation"] = json!(mean_rho);
        r.checks.push(Check::new(
            "density_factor",
            (mean_factor - params.density_factor).abs() <= density_tol,
            format!("measured {mean_factor}, target {} +- {density_tol}", params.density_factor),
        ));
        r.checks.push(Check::new(
            "correlation",
            (mean_rho - c).abs() <= corr_tol,
            format!("measured {mean_rho}, target {c} +- {corr_tol}"),
        ));
    } else {
        r.table = Table::new(&["x", "target_density_factor", "coin_density"]);
        r.table.push(vec![f(params.x), f(params.density_factor), f(coin)]);
    }
    r.result = result;
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn couple(
    factor: &BlockFactor,
    g: &GraphArgs,
    p: f64,
    opts: StabilityOptions,
    trials: usize,
    moments: &[f64],
    z_max: f64,
    tune: Option<(f64, f64, f64)>,
) -> Result<Report, CliError> {
    check_arity(factor, g.d)?;
    let graph = RegularMultigraph::sample(g.n, g.d, derive(g.seed, "graph", 0)).map_err(field("--n/--d"))?;
    let ens = sample_ensemble(factor, &graph, p, opts.k, derive(g.seed, "ensemble", 0), opts.mode)
        .map_err(field("--p/--k"))?;
    let dens = intersection_densities(&ens)?;
    let rep = stability_moments(factor, &graph, p, moments, trials, g.seed, opts).map_err(field("--p/--moments/--trials"))?;
    let mut r = Report::new(
        "couple",
        json!({"factor": factor.to_string(), "graph": graph_config(g), "p": p, "k": opts.k, "m": opts.m,
               "trials": trials, "mode": opts.mode, "moments": moments, "z_max": z_max,
               "tune": tune.map(|(t, u, tol)| json!({"target": t, "u": u, "tolerance": tol}))}),
    );
    let mut header = vec!["trial".to_string()];
    for m in &rep.alpha_ratio.moments {
        header.push(format!("ratio_u{}", m.u));
    }
    for m in &rep.conditional.moments {
        header.push(format!("conditional_u{}", m.u));
    }
    r.table = Table {
        header,
        rows: Vec::new(),
    };
    for t in 0..trials {
        let ratio: Vec<f64> = rep.alpha_ratio.moments.iter().map(|m| m.per_trial[t]).collect();
        let cond: Vec<f64> = rep.conditional.moments.iter().map(|m| m.per_trial[t]).collect();
        r.records.push(json!({"trial": t, "ratio": ratio, "conditional": cond}));
        r.table.push(
            std::iter::once(t.to_string())
                .chain(ratio.iter().chain(&cond).map(|&x| f(x)))
                .collect(),
        );
    }
    for m in &rep.alpha_ratio.moments {
        r.aggregate(&format!("ratio_u{}", m.u), &m.per_trial);
    }
    for m in &rep.conditional.moments {
        r.aggregate(&format!("conditional_u{}", m.u), &m.per_trial);
    }
    for a in &rep.alpha_ratio.moments {
        if let Some(c) = rep.conditional.moment(a.u) {
            let se = (a.stderr * a.stderr + c.stderr * c.stderr).sqrt();
            let diff = (a.estimate - c.estimate).abs();
            let pass = diff <= z_max * se || diff == 0.0;
            r.checks.push(Check::new(
                format!("estimators_agree_u{}", a.u),
                pass,
                format!("ratio {} vs conditional {}, combined stderr {se}", a.estimate, c.estimate),
            ));
        }
    }
    let mut result = json!({
        "intersection_densities": dens,
        "mask_size": ens.mask.iter().filter(|&&b| b).count(),
        "base_density": ens.base.iter().filter(|&&c| c == 1).count() as f64 / ens.n as f64,
    });
    if let Some((target, u, tolerance)) = tune {
        let tuned = tune_p(
            factor,
            &graph,
            u,
            target,
            tolerance,
            g.seed,
            TuneOptions {
                m: opts.m,
                mode: opts.mode,
                ..TuneOptions::default()
            },
        )
        .map_err(field("--target"))?;
        result["tune"] = serde_json::to_value(tuned)?;
    }
    r.result = result;
    Ok(r)
}

fn orient(src: &GraphSource, trials: usize, min_peel_rate: f64) -> Result<Report, CliError> {
    let (from_file, g) = resolve(src)?;
    let g = &g;
    let graph_file = src.graph_file.as_deref();
    let trials = if from_file.is_some() { 1 } else { trials };
    if trials == 0 {
        return Err(CliError::Usage("invalid --trials: need at least one trial".into()));
    }
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<_, CliError> {
            let graph = match &from_file {
                Some(gr) => gr.clone(),
                None if trials == 1 => sample_graph(g)?,
                None => RegularMultigraph::sample(g.n, g.d, derive(g.seed, "graph", t)).map_err(field("--n/--d"))?,
            };
            let orient_seed = if trials == 1 { g.seed } else { derive(g.seed, "orientation", t) };
            match orient_no_source_sink(&graph, orient_seed) {
                Ok(o) => Ok((Some(o), None)),
                Err(e @ fiid_core::Error::PeelFailure { .. }) => Ok((None, Some(e.to_string()))),
                Err(e) => Err(field("--n/--d")(e)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut r = Report::new(
        "orient",
        json!({"graph": graph_config(g), "trials": trials, "min_peel_rate": min_peel_rate,
               "graph_file": graph_file.map(|p| p.display().to_string())}),
    );
    r.table = Table::new(&["trial", "peeled", "attempt", "sources", "sinks"]);
    let (mut peeled, mut certified) = (0usize, 0usize);
    for (t, (o, err)) in outcomes.iter().enumerate() {
        match o {
            Some(o) => {
                let cert = certify(&o.orientation);
                peeled += 1;
                certified += usize::from(cert.holds());
                let attempt = o.peel.as_ref().map(|p| p.attempt);
                r.records.push(json!({"trial": t, "peeled": true, "attempt": attempt,
                    "sources": cert.sources.len(), "sinks": cert.sinks.len(),
                    "within_theorem_scope": o.within_theorem_scope}));
                r.table.push(vec![
                    t.to_string(),
                    "true".into(),
                    attempt.map_or(String::new(), |a| a.to_string()),
                    cert.sources.len().to_string(),
                    cert.sinks.len().to_string(),
                ]);
            }
            None => {
                r.records.push(json!({"trial": t, "peeled": false, "error": err}));
                r.table.push(vec![t.to_string(), "false".into(), String::new(), String::new(), String::new()]);
            }
        }
    }
    let rate = peeled as f64 / trials as f64;
    r.aggregates.insert("peel_rate".into(), json!(rate));
    r.checks.push(Check::new(
        "no_sources_or_sinks",
        certified == peeled,
        format!("{certified} of {peeled} orientations certified"),
    ));
    r.checks.push(Check::new(
        "peel_rate",
        rate >= min_peel_rate,
        format!("{peeled}/{trials} peeled, need {min_peel_rate}"),
    ));
    if let [(Some(o), _)] = outcomes.as_slice() {
        r.result = json!({"arcs": o.orientation.arcs, "classes": o.classes});
        r.text = Some(o.orientation.to_text());
    }
    Ok(r)
}

fn oracle(n: u64, d: u64, colours: usize) -> Result<Report, CliError> {
    let table = brute_force_table(n, d, colours).map_err(field("--n/--d/--colours"))?;
    let profiles = enumerate_integer_profiles(n, d, colours);
    let mut r = Report::new("oracle", json!({"n": n, "d": d, "colours": colours}));
    r.table = Table::new(&["pair_counts", "vertex_counts", "formula", "brute_force", "match"]);
    let mut mismatches = 0;
    for p in &profiles {
        let formula = expected_partition_count_exact(p)?;
        let brute = table.expectation(p);
        let ok = formula == brute;
        mismatches += usize::from(!ok);
        let join = |xs: &[u64]| xs.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        r.records.push(json!({
            "pair_counts": p.pair, "vertex_counts": p.vertex,
            "formula": formula.to_string(), "brute_force": brute.to_string(), "match": ok,
        }));
        r.table.push(vec![join(&p.pair), join(&p.vertex), formula.to_string(), brute.to_string(), ok.to_string()]);
    }
    let stray = table.tallies.iter().filter(|(p, _)| !profiles.contains(p)).count();
    let count = pairing_count((n * d) as usize);
    let pairings: Option<Vec<Vec<usize>>> = (count <= MAX_LISTED_PAIRINGS)
        .then(|| enumerate_pairings(n as usize, d as usize).map(|it| it.map(|g| g.pairing().to_vec()).collect()))
        .transpose()?;
    r.result = json!({
        "pairing_count": count.to_string(),
        "pairings": pairings,
        "profiles": profiles.len(),
    });
    r.checks.push(Check::new(
        "formula_matches_brute_force",
        mismatches == 0,
        format!("{mismatches} of {} profiles differ", profiles.len()),
    ));
    r.checks.push(Check::new(
        "no_unenumerated_profiles",
        stray == 0,
        format!("{stray} realised profiles missing from the enumeration"),
    ));
    Ok(r)
}
