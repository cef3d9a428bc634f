use serde_json::json;

use graphonlab::functionals::{
    conditional_h_given_degree, degree, degree_law, joint_law, level_functional, level_law,
    SmallGraph,
};
use graphonlab::graphon::{discretize, AnalyticGraphon, Discretization, GraphonHandle, GridGraphon};
use graphonlab::metrics::{
    cut_distance_upper, cut_norm, invariant_lower_bound, l1_distance, l2_distance,
    CutDistanceMethod, CutNormMethod, StepKernel, MAX_EXHAUSTIVE_CUT_N,
};
use graphonlab::sample::{empirical_hom_density, sample_graph};
use graphonlab::transform::{degree_sort, pullback, MeasurePreservingMap};
use graphonlab::verify::{sorted_discretization_divergence, verify};

use crate::args::{Command, Common, CutMethod, Family, Format, GraphonArgs, Mode, Other};
use crate::output::{RunConfig, Writer};
use crate::CliError;

/// Largest profile resolution accepted on the command line.
pub const MAX_RESOLUTION: usize = 1 << 24;

/// Block count used for the cut-distance search in `distance`.
const CUT_DISTANCE_N: usize = 16;

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Build { common, mode } => build(&common, mode),
        Command::Degrees { common } => degrees(&common),
        Command::Levels { common, eta } => levels(&common, eta),
        Command::Laws { common, eta, bins } => laws(&common, eta, bins),
        Command::Pullback { common, map_file } => pullback_cmd(&common, map_file.as_deref()),
        Command::Sort { common } => sort(&common),
        Command::Cutnorm {
            common,
            other,
            method,
        } => cutnorm(&common, &other, method),
        Command::Distance { common, other } => distance(&common, &other),
        Command::Verify { common } => verify_cmd(&common),
        Command::Sample { common } => sample(&common),
        Command::Diverge {
            graphon,
            output,
            n,
            seed,
        } => {
            let w = resolve(&graphon)?;
            let args = json!({ "graphon": graphon, "output": output, "n": n, "seed": seed });
            let cfg = RunConfig::new("diverge", w.describe(), &args)?;
            let mut out = Writer::new(&output.out, output.format, cfg)?;
            let rows = sorted_discretization_divergence(&w, &n)?;
            println!("{:>6} {:>6} {:>22}", "n", "next", "L1(sorted_n, sorted_next)");
            for r in &rows {
                println!("{:>6} {:>6} {:>22.17}", r.n, r.next, r.l1);
            }
            match out.format {
                Format::Json => out.json(
                    "diverge.json",
                    json!({ "format": "diverge-v1", "graphon": w.describe(), "rows": rows }),
                )?,
                Format::Csv => {
                    let mut body = String::from("n,next,l1\n");
                    for r in &rows {
                        body.push_str(&format!("{},{},{}\n", r.n, r.next, r.l1));
                    }
                    out.csv("diverge.csv", &body)?;
                }
            }
            out.finish();
            Ok(())
        }
    }
}

fn need(v: Option<f64>, flag: &str, family: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--graphon {family} requires {flag}")))
}

pub fn resolve(a: &GraphonArgs) -> Result<GraphonHandle, CliError> {
    Ok(match a.graphon {
        Family::Counterexample => GraphonHandle::counterexample(),
        Family::Product => GraphonHandle::analytic(AnalyticGraphon::Product),
        Family::Constant => {
            GraphonHandle::analytic(AnalyticGraphon::constant(need(a.p, "--p", "constant")?)?)
        }
        Family::Threshold => {
            GraphonHandle::analytic(AnalyticGraphon::threshold(need(a.t, "--t", "threshold")?)?)
        }
        Family::Grid => {
            let path = a
                .grid_file
                .as_ref()
                .ok_or_else(|| CliError::Usage("--graphon grid requires --grid-file".into()))?;
            GraphonHandle::grid(GridGraphon::load(path)?)
        }
    })
}

fn check_resolution(m: usize) -> Result<(), CliError> {
    if m > MAX_RESOLUTION {
        return Err(graphonlab::Error::Capacity(format!(
            "resolution m={m} exceeds {MAX_RESOLUTION}"
        ))
        .into());
    }
    Ok(())
}

fn setup(
    name: &'static str,
    common: &Common,
    extra: serde_json::Value,
) -> Result<(GraphonHandle, Writer), CliError> {
    check_resolution(common.m)?;
    let w = resolve(&common.graphon)?;
    let mut args = serde_json::to_value(common)?;
    if let (Some(obj), serde_json::Value::Object(more)) = (args.as_object_mut(), extra) {
        obj.extend(more);
    }
    let cfg = RunConfig::new(name, w.describe(), &args)?;
    let out = Writer::new(&common.output.out, common.output.format, cfg)?;
    Ok((w, out))
}

fn build(common: &Common, mode: Mode) -> Result<(), CliError> {
    let (w, mut out) = setup("build", common, json!({ "mode": mode }))?;
    let d = match mode {
        Mode::Midpoint => Discretization::Midpoint,
        Mode::CellAverage => Discretization::CellAverage,
    };
    let g = discretize(&w, common.n, d)?;
    println!(
        "{} discretized at n={} ({mode:?}): edge density {:.12}",
        w.describe(),
        g.n(),
        g.edge_density()
    );
    out.json_text("grid.json", &g.to_json()?)?;
    out.finish();
    Ok(())
}

fn degrees(common: &Common) -> Result<(), CliError> {
    let (w, mut out) = setup("degrees", common, json!({}))?;
    let p = degree(&w, common.m)?;
    let (lo, hi) = min_max(&p.values);
    println!(
        "degree profile of {} at m={}: min {lo:.12} max {hi:.12} mean {:.12}",
        p.source,
        p.m,
        p.mean()
    );
    match out.format {
        Format::Json => out.json_text("degrees.json", &p.to_json()?)?,
        Format::Csv => out.csv("degrees.csv", &p.to_csv()?)?,
    }
    out.finish();
    Ok(())
}

fn levels(common: &Common, eta: Option<f64>) -> Result<(), CliError> {
    let (w, mut out) = setup("levels", common, json!({ "eta": eta }))?;
    let eta = eta.unwrap_or_else(|| w.default_eta());
    let h = level_functional(&w, common.m, eta)?;
    let (lo, hi) = min_max(&h.values);
    println!(
        "level profile of {} at m={} (eta {eta}): min {lo:.12} max {hi:.12} mean {:.12}",
        h.source,
        h.m,
        h.mean()
    );
    match out.format {
        Format::Json => out.json_text("levels.json", &h.to_json()?)?,
        Format::Csv => out.csv("levels.csv", &h.to_csv()?)?,
    }
    out.finish();
    Ok(())
}

fn laws(common: &Common, eta: Option<f64>, bins: usize) -> Result<(), CliError> {
    let (w, mut out) = setup("laws", common, json!({ "eta": eta, "bins": bins }))?;
    let eta = eta.unwrap_or_else(|| w.default_eta());
    let d = degree(&w, common.m)?;
    let h = level_functional(&w, common.m, eta)?;
    let dl = degree_law(&d)?;
    let hl = level_law(&h)?;
    let cond = conditional_h_given_degree(&d, &h, bins)?;
    println!("{}: E[D] = {:.12}, E[h] = {:.12}", w.describe(), dl.mean(), hl.mean());
    println!("{:>5} {:>14} {:>14} {:>12} {:>14}", "bin", "lo", "hi", "mass", "mean h");
    for b in &cond.bins {
        println!(
            "{:>5} {:>14.10} {:>14.10} {:>12.8} {:>14.10}",
            b.index, b.lo, b.hi, b.mass, b.mean_h
        );
    }
    if !cond.empty_bins.is_empty() {
        println!("empty bins: {:?}", cond.empty_bins);
    }
    match out.format {
        Format::Json => {
            out.json_text("degree_law.json", &dl.to_json()?)?;
            out.json_text("level_law.json", &hl.to_json()?)?;
            out.json(
                "conditional.json",
                json!({ "format": "conditional-v1", "eta": eta, "report": cond }),
            )?;
        }
        Format::Csv => {
            out.csv("degree_law.csv", &dl.to_csv()?)?;
            out.csv("level_law.csv", &hl.to_csv()?)?;
            let mut body = String::from("bin,lo,hi,mass,mean_h\n");
            for b in &cond.bins {
                body.push_str(&format!("{},{},{},{},{}\n", b.index, b.lo, b.hi, b.mass, b.mean_h));
            }
            out.csv("conditional.csv", &body)?;
        }
    }
    out.finish();
    Ok(())
}

fn pullback_cmd(common: &Common, map_file: Option<&std::path::Path>) -> Result<(), CliError> {
    let (w, mut out) = setup("pullback", common, json!({ "map_file": map_file }))?;
    let phi = match map_file {
        Some(p) => MeasurePreservingMap::load(p)?,
        None => MeasurePreservingMap::swap_halves(),
    };
    let pulled = pullback(&w, &phi);
    let eta = w.default_eta();
    let ks = joint_law(&w, common.m, eta)?.ks(&joint_law(&pulled, common.m, eta)?);
    let g = discretize(&pulled, common.n, Discretization::CellAverage)?;
    println!("{}", pulled.describe());
    println!("KS between joint laws of (D, h) before and after: {ks:e}");
    out.json_text("pullback.json", &g.to_json()?)?;
    out.json_text("map.json", &phi.to_json()?)?;
    out.json(
        "pullback_summary.json",
        json!({ "format": "pullback-v1", "graphon": pulled.describe(), "joint_law_ks": ks }),
    )?;
    out.finish();
    Ok(())
}

fn sort(common: &Common) -> Result<(), CliError> {
    let (w, mut out) = setup("sort", common, json!({}))?;
    let g = discretize(&w, common.n, Discretization::CellAverage)?;
    let (sorted, perm) = degree_sort(&g);
    let degrees = sorted.block_degrees();
    let moved = perm.iter().enumerate().filter(|(a, &b)| *a != b).count();
    println!(
        "{} at n={}: {moved} of {} blocks relabeled",
        w.describe(),
        g.n(),
        g.n()
    );
    out.json_text("sorted.json", &sorted.to_json()?)?;
    match out.format {
        Format::Json => out.json(
            "sort.json",
            json!({ "format": "sort-v1", "permutation": perm, "degrees": degrees }),
        )?,
        Format::Csv => {
            let mut body = String::from("rank,block,degree\n");
            for (r, (&b, d)) in perm.iter().zip(&degrees).enumerate() {
                body.push_str(&format!("{r},{b},{d}\n"));
            }
            out.csv("sort.csv", &body)?;
        }
    }
    out.finish();
    Ok(())
}

/// The second graphon of a two-argument command: an explicit family, or
/// the pull-back of the first along a map file.
fn resolve_other(w: &GraphonHandle, other: &Other) -> Result<Option<GraphonHandle>, CliError> {
    let base = match other.graphon_args() {
        Some(a) => resolve(&a)?,
        None => w.clone(),
    };
    Ok(match &other.other_map_file {
        Some(p) => Some(pullback(&base, &MeasurePreservingMap::load(p)?)),
        None if other.other_graphon.is_some() => Some(base),
        None => None,
    })
}

fn cutnorm(common: &Common, other: &Other, method: CutMethod) -> Result<(), CliError> {
    let (w, mut out) = setup("cutnorm", common, json!({ "other": other, "method": method }))?;
    let a = discretize(&w, common.n, Discretization::CellAverage)?;
    let kernel = match resolve_other(&w, other)? {
        Some(v) => StepKernel::difference(&a, &discretize(&v, common.n, Discretization::CellAverage)?)?,
        None => StepKernel::from_row_major(a.n(), a.values().to_vec())?,
    };
    let method = match method {
        CutMethod::Exhaustive => CutNormMethod::Exhaustive,
        CutMethod::Local => CutNormMethod::local_search(common.seed),
        CutMethod::Auto if kernel.n() <= MAX_EXHAUSTIVE_CUT_N => CutNormMethod::Exhaustive,
        CutMethod::Auto => CutNormMethod::local_search(common.seed),
    };
    let r = cut_norm(&kernel, method)?;
    println!(
        "cut norm {:.15} (|S| = {}, |T| = {}, {:?}, {} iterations)",
        r.value,
        r.s.len(),
        r.t.len(),
        r.method,
        r.iterations
    );
    match out.format {
        Format::Json => out.json("cutnorm.json", json!({ "format": "cutnorm-v1", "result": r }))?,
        Format::Csv => out.csv_pairs(
            "cutnorm.csv",
            &[
                ("value", r.value.to_string()),
                ("s_size", r.s.len().to_string()),
                ("t_size", r.t.len().to_string()),
                ("iterations", r.iterations.to_string()),
            ],
        )?,
    }
    out.finish();
    Ok(())
}

fn distance(common: &Common, other: &Other) -> Result<(), CliError> {
    let (w, mut out) = setup(
        "distance",
        common,
        json!({ "other": other, "cut_distance_n": CUT_DISTANCE_N }),
    )?;
    if other.is_empty() {
        return Err(CliError::Usage(
            "distance needs --other-graphon and/or --other-map-file".into(),
        ));
    }
    let v = resolve_other(&w, other)?.expect("checked above");
    let a = discretize(&w, common.n, Discretization::CellAverage)?;
    let b = discretize(&v, common.n, Discretization::CellAverage)?;
    let l1 = l1_distance(&a, &b)?;
    let l2 = l2_distance(&a, &b)?;
    let lower = invariant_lower_bound(&a, &b)?;
    let cn = CUT_DISTANCE_N.min(common.n);
    let ca = discretize(&w, cn, Discretization::CellAverage)?;
    let cb = discretize(&v, cn, Discretization::CellAverage)?;
    let upper = cut_distance_upper(&ca, &cb, CutDistanceMethod::Auto { seed: common.seed })?;
    println!("A = {}\nB = {}", w.describe(), v.describe());
    println!("L1 {l1:.12}  L2 {l2:.12}");
    println!(
        "cut distance: invariant lower bound {:.12} (n={}), search upper bound {:.12} (n={cn}{})",
        lower.value,
        common.n,
        upper.value,
        if upper.certified { ", certified" } else { "" }
    );
    if lower.inequivalent {
        // a statement about the two step graphons, not the graphons they approximate
        println!(
            "block-degree laws of the two {}-block grids differ (KS {:.3e}): the grids are not equivalent",
            common.n, lower.degree_ks
        );
    }
    match out.format {
        Format::Json => out.json(
            "distance.json",
            json!({
                "format": "distance-v1",
                "a": w.describe(),
                "b": v.describe(),
                "l1": l1,
                "l2": l2,
                "invariant_lower_bound": lower,
                "cut_distance_n": cn,
                "cut_distance_upper": upper,
            }),
        )?,
        Format::Csv => out.csv_pairs(
            "distance.csv",
            &[
                ("l1", l1.to_string()),
                ("l2", l2.to_string()),
                ("invariant_lower_bound", lower.value.to_string()),
                ("degree_ks", lower.degree_ks.to_string()),
                ("cut_distance_upper", upper.value.to_string()),
            ],
        )?,
    }
    out.finish();
    Ok(())
}

fn verify_cmd(common: &Common) -> Result<(), CliError> {
    let (w, mut out) = setup("verify", common, json!({}))?;
    let report = verify(&w, common.m, common.seed)?;
    println!("{} at m={} (seed {})", report.graphon, report.m, report.seed);
    println!(
        "{:<28} {:>14} {:>14} {:>11} {:>11}  result",
        "step", "claimed", "computed", "deviation", "tolerance"
    );
    for s in &report.steps {
        println!(
            "{:<28} {:>14.10} {:>14.10} {:>11.3e} {:>11.3e}  {}",
            s.step,
            s.claimed,
            s.computed,
            s.deviation,
            s.tolerance,
            if s.pass { "PASS" } else { "FAIL" }
        );
    }
    let c = &report.certificate;
    println!(
        "certificate: TV(law h, forced law h1) = {} (threshold {}) -> {}",
        c.tv, c.threshold, c.verdict
    );
    println!("{}", c.statement);
    let mut doc = serde_json::to_value(&report)?;
    doc["format"] = json!("verify-v1");
    doc["success"] = json!(report.success());
    out.json("verify.json", doc)?;
    if out.format == Format::Csv {
        let mut body = String::from("step,quantity,claimed,computed,deviation,tolerance,pass\n");
        for s in &report.steps {
            body.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.step, s.quantity, s.claimed, s.computed, s.deviation, s.tolerance, s.pass
            ));
        }
        out.csv("verify_steps.csv", &body)?;
    }
    out.finish();
    if report.success() {
        Ok(())
    } else {
        let failed: Vec<_> = report
            .steps
            .iter()
            .filter(|s| !s.pass)
            .map(|s| s.step.as_str())
            .collect();
        Err(CliError::Verification(format!(
            "failed steps {failed:?}, verdict {} (expected {})",
            c.verdict, report.expected_verdict
        )))
    }
}

fn sample(common: &Common) -> Result<(), CliError> {
    let (w, mut out) = setup("sample", common, json!({}))?;
    let g = sample_graph(&w, common.n, common.seed)?;
    let n = g.n() as f64;
    let density = g.edge_count() as f64 / (n * (n - 1.0) / 2.0);
    let triangles = empirical_hom_density(&SmallGraph::triangle(), &g)?;
    println!(
        "{} on {} vertices (seed {}): {} edges, edge density {density:.6}, triangle density {triangles:.6}",
        g.source(),
        g.n(),
        g.seed(),
        g.edge_count()
    );
    g.save(out.dir(), "sample")?;
    out.record(out.dir().join("sample.edges"));
    // the metadata loader ignores unknown keys, so provenance rides along
    let meta = std::fs::read_to_string(out.dir().join("sample.json"))?;
    out.json_text("sample.json", &meta)?;
    out.finish();
    Ok(())
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}
