use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Subcommand};
use mcem_core::dynamics::{empirical_marginals, kmc_run, kmc_run_gillespie, Engine};
use mcem_core::reachability::{
    build_hd_good_path, build_move_good2_path, build_move_good_path, find_legal_path, hd_good_endpoint_ok,
    is_blocked_core, is_good_box, move_good2_endpoint_ok, move_good2_fixture, move_good_endpoint_ok, move_good_fixture,
    reachable_set, verify_legal_path, LegalPath, DEFAULT_CAP,
};
use mcem_core::renormalization::{
    classify_block_3iii, classify_box_3ii, crossing_failure_mc, default_scales, event_probability_mc, event_support,
    resolve_params, BoxClass3ii, Event, EventParams, Orientation,
};
use mcem_core::spectral::{
    build_generator, east_gap_asymptotic, restrict_domain, spectral_gap_exact, DENSE_LIMIT, GENERATOR_CAP,
};
use mcem_core::{sample_config, stream_rng, Configuration, Domain, ModelSpec};
use serde_json::json;

use crate::config::{parse_type, point, state_label, RunConfig};
use crate::error::CliError;
use crate::files::{load_path_file, load_state_file, parse_list, render_path_file};
use crate::output::{emit, emit_plan, Cell, Table};

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Validate inputs and print the resolved plan without computing.
    #[arg(long)]
    pub dry_run: bool,
    /// Print a JSON mirror of the output tables on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Kinetic Monte Carlo trajectory from a product-measure sample.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Trajectory CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-site occupancy CSV.
        #[arg(long)]
        marginals: Option<PathBuf>,
        /// `graphical` or `gillespie`.
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        burn_in: Option<f64>,
        /// Start from this state file instead of a sample.
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact spectral gap of the generator on the configured domain.
    Gap {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these types, e.g. `00,11`.
        #[arg(long)]
        subset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Reachable set of a configuration, or a shortest legal path to another.
    Reach {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: Option<PathBuf>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Path file for the path found with `--to`.
        #[arg(long)]
        path_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Builds a constructive legal path, or verifies a path file.
    Path {
        /// `hd-good`, `move-good` or `move-good2`.
        #[arg(long)]
        lemma: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        /// `k` for hd-good, `k_1,…,k_d` for the move lemmas.
        #[arg(long)]
        k: Option<String>,
        /// `N` for move-good2.
        #[arg(long)]
        n: Option<usize>,
        /// Path file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verify this path file instead of building one.
        #[arg(long)]
        verify: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo probability that a strip has no hard crossing.
    Crossing {
        #[arg(long)]
        config: PathBuf,
        /// Vacancy type of the crossing, as bits.
        #[arg(long)]
        h: Option<String>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        orientation: Option<String>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo failure probability of a named renormalization event.
    EventProb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        event: Option<String>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        big_l: Option<usize>,
        #[arg(long)]
        big_l_c: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Classifies a box, block or site pattern of a state file.
    Classify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// `box-3ii`, `block-3iii`, `blocked-core` or `good-box`.
        #[arg(long)]
        scheme: String,
        /// Block index or site, comma separated.
        #[arg(long)]
        at: String,
        /// Box size for `box-3ii`.
        #[arg(long)]
        big_l: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { config, t_max, seed, out, marginals, engine, burn_in, init, common } => {
            simulate(&config, t_max, seed, out, marginals, engine, burn_in, init, &common)
        }
        Command::Gap { config, subset, out, common } => gap(&config, subset, out, &common),
        Command::Reach { config, from, to, cap, out, path_out, common } => {
            reach(&config, &from, to, cap, out, path_out, &common)
        }
        Command::Path { lemma, d, k, n, out, verify, common } => match verify {
            Some(file) => verify_path(&file, &common),
            None => build_path(lemma, d, k, n, out, &common),
        },
        Command::Crossing { config, h, ell, n, orientation, samples, seed, out, common } => {
            crossing(&config, h, ell, n, orientation, samples, seed, out, &common)
        }
        Command::EventProb { config, event, ell, n, big_l, big_l_c, width, samples, seed, out, common } => {
            let p = EventParams { ell, n, big_l, big_l_c, width };
            event_prob(&config, event, p, samples, seed, out, &common)
        }
        Command::Classify { config, state, scheme, at, big_l, out, common } => {
            classify(&config, &state, &scheme, &at, big_l, out, &common)
        }
    }
}

fn spec_json(spec: &ModelSpec) -> serde_json::Value {
    json!({
        "dimension": spec.dim(),
        "types": spec.types().iter().map(|h| h.to_string()).collect::<Vec<_>>(),
        "q": spec.q(),
        "p": spec.p(),
    })
}

fn domain_json(domain: &Domain) -> serde_json::Value {
    json!({
        "spec": spec_json(domain.spec()),
        "region": region_label(domain),
        "sites": domain.len(),
        "boundary": domain.boundary().kind_name(),
    })
}

fn region_label(domain: &Domain) -> String {
    let r = domain.region();
    match r.box_shape() {
        Some((origin, sides)) => {
            let s: Vec<String> = sides.iter().map(|x| x.to_string()).collect();
            let o: Vec<String> = origin.coords(r.dim()).iter().map(|x| x.to_string()).collect();
            format!("{}@{}", s.join("x"), o.join(","))
        }
        None => format!("sites:{}", r.len()),
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be a finite nonnegative number")))
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    config: &Path,
    t_max: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    marginals: Option<PathBuf>,
    engine: Option<String>,
    burn_in: Option<f64>,
    init: Option<PathBuf>,
    common: &Common,
) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let section = cfg.simulate.clone().unwrap_or_default();
    let domain = cfg.domain()?;
    let seed = seed.unwrap_or(cfg.seed);
    let t_max = t_max.or(section.t_max).ok_or_else(|| CliError::Config("t_max is required".into()))?;
    let t_max = positive("t_max", t_max)?;
    let burn_in = positive("burn_in", burn_in.or(section.burn_in).unwrap_or(0.0))?;
    let engine = match engine.or(section.engine).as_deref().unwrap_or("graphical") {
        "graphical" => Engine::GraphicalConstruction,
        "gillespie" => Engine::Gillespie,
        other => return Err(CliError::Config(format!("unknown engine {other:?}")).into()),
    };
    if marginals.is_some() && !(burn_in < t_max) {
        return Err(CliError::Config("burn_in must be below t_max".into()).into());
    }
    let start = match &init {
        Some(p) => load_state_file(&domain, p)?,
        None => sample_config(&domain, &mut stream_rng(seed, 0)),
    };
    if common.dry_run {
        return emit_plan(
            "simulate",
            json!({
                "domain": domain_json(&domain),
                "seed": seed,
                "t_max": t_max,
                "burn_in": burn_in,
                "engine": engine.name(),
                "init": init.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "product-measure sample".into()),
            }),
        );
    }
    let mut rng = stream_rng(seed, 1);
    let traj = match engine {
        Engine::GraphicalConstruction => kmc_run(&start, t_max, &mut rng),
        Engine::Gillespie => kmc_run_gillespie(&start, t_max, &mut rng),
    };
    let spec = domain.spec();
    let mut t = Table::new("trajectory", &["time", "site_index", "old_state", "new_state"]);
    for tr in &traj.transitions {
        t.push(vec![
            tr.time.into(),
            tr.site.into(),
            state_label(spec.state_of_tag(tr.old)).into(),
            state_label(spec.state_of_tag(tr.new)).into(),
        ]);
    }
    let mut tables = vec![(t, out.as_deref())];
    if let Some(path) = marginals.as_deref() {
        let occ = empirical_marginals(&traj, burn_in).map_err(CliError::from)?;
        let mut m = Table::new("marginals", &["site_index", "state", "occupancy"]);
        for (x, row) in occ.iter().enumerate() {
            for (tag, v) in row.iter().enumerate() {
                m.push(vec![x.into(), state_label(spec.state_of_tag(tag as u8)).into(), (*v).into()]);
            }
        }
        tables.push((m, Some(path)));
    }
    emit("simulate", &tables, common.json)
}

fn gap(config: &Path, subset: Option<String>, out: Option<PathBuf>, common: &Common) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let mut domain = cfg.domain()?;
    let subset: Option<Vec<String>> =
        subset.map(|s| s.split(',').map(|x| x.trim().to_string()).collect()).or(cfg.gap.clone().and_then(|g| g.subset));
    if let Some(list) = subset {
        let types = list.iter().map(|s| parse_type(cfg.dimension, s)).collect::<Result<Vec<_>, _>>()?;
        domain = restrict_domain(&domain, &types).map_err(CliError::from)?;
    }
    let size = domain.state_space_size();
    if common.dry_run {
        let solver = match size {
            Some(s) if s <= DENSE_LIMIT as u64 => "dense",
            Some(s) if s <= GENERATOR_CAP => "lanczos",
            _ => "over-cap",
        };
        return emit_plan(
            "gap",
            json!({ "domain": domain_json(&domain), "states": size, "cap": GENERATOR_CAP, "solver": solver }),
        );
    }
    let gen = build_generator(&domain, GENERATOR_CAP).map_err(CliError::from)?;
    let res = spectral_gap_exact(&gen).map_err(CliError::from)?;
    let spec = domain.spec();
    let (_, q_min) = spec.q_min();
    let mut cols: Vec<String> = vec!["region".into(), "boundary".into(), "G".into()];
    cols.extend(spec.types().iter().map(|h| format!("q_{h}")));
    cols.extend(["gap_exact", "gap_reference_east", "ergodic"].map(String::from));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new("gap", &col_refs);
    let g: Vec<String> = spec.types().iter().map(|h| h.to_string()).collect();
    let mut row: Vec<Cell> =
        vec![region_label(&domain).into(), domain.boundary().kind_name().into(), g.join(";").into()];
    row.extend(spec.q().iter().map(|&q| Cell::from(q)));
    row.extend([res.gap.into(), east_gap_asymptotic(q_min, spec.dim()).into(), res.ergodic.into()]);
    t.push(row);
    emit("gap", &[(t, out.as_deref())], common.json)
}

fn reach(
    config: &Path,
    from: &Path,
    to: Option<PathBuf>,
    cap: Option<usize>,
    out: Option<PathBuf>,
    path_out: Option<PathBuf>,
    common: &Common,
) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let domain = cfg.domain()?;
    let cap = cap.or(cfg.reach.as_ref().and_then(|r| r.cap)).unwrap_or(DEFAULT_CAP);
    let start = load_state_file(&domain, from)?;
    let target = to.as_deref().map(|p| load_state_file(&domain, p)).transpose()?;
    if common.dry_run {
        return emit_plan(
            "reach",
            json!({
                "domain": domain_json(&domain),
                "cap": cap,
                "from": from.display().to_string(),
                "to": to.as_ref().map(|p| p.display().to_string()),
            }),
        );
    }
    let Some(target) = target else {
        let r = reachable_set(&start, cap);
        if r.truncated {
            return Err(CliError::Cap(format!("reachable set exceeds {cap} configurations")).into());
        }
        let mut t = Table::new("reach", &["reachable_states", "truncated"]);
        t.push(vec![r.states.len().into(), r.truncated.into()]);
        return emit("reach", &[(t, out.as_deref())], common.json);
    };
    let path = find_legal_path(&start, &target, cap);
    if path.is_none() && reachable_set(&start, cap).truncated {
        return Err(CliError::Cap(format!("target not found within {cap} configurations")).into());
    }
    let mut t = Table::new("reach", &["reachable", "steps"]);
    t.push(vec![path.is_some().into(), path.as_ref().map_or(0, |p| p.steps.len()).into()]);
    if let (Some(p), Some(file)) = (&path, &path_out) {
        let header = [
            ("lemma", "reach".to_string()),
            ("config", config.display().to_string()),
            ("from", from.display().to_string()),
            ("to", to.as_ref().expect("target given").display().to_string()),
        ];
        std::fs::write(file, render_path_file(&header, p))?;
    }
    emit("reach", &[(t, out.as_deref())], common.json)
}

struct BuiltPath {
    start: Configuration,
    path: LegalPath,
    header: Vec<(&'static str, String)>,
    endpoint_ok: Box<dyn Fn(&Configuration, &Configuration) -> bool>,
}

fn list_text(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Start configuration, header and endpoint predicate of a lemma; the path is
/// built only when `build` is set.
fn lemma_setup(lemma: &str, d: usize, k: Option<&str>, n: Option<usize>, build: bool) -> Result<BuiltPath, CliError> {
    let need_k = || k.ok_or_else(|| CliError::Config("--k is required".into()));
    match lemma {
        "hd-good" => {
            let kk: usize = need_k()?.parse().map_err(|_| CliError::Config("--k must be an integer".into()))?;
            let (start, path) = build_hd_good_path(d, kk)?;
            Ok(BuiltPath {
                start,
                path,
                header: vec![("lemma", lemma.into()), ("d", d.to_string()), ("k", kk.to_string())],
                endpoint_ok: Box::new(hd_good_endpoint_ok),
            })
        }
        "move-good" => {
            let kk = parse_list(need_k()?)?;
            let start = move_good_fixture(d, &kk)?;
            let path = if build { build_move_good_path(&start, &kk)? } else { empty_path(&start) };
            let kc = kk.clone();
            Ok(BuiltPath {
                start,
                path,
                header: vec![("lemma", lemma.into()), ("d", d.to_string()), ("k", list_text(&kk))],
                endpoint_ok: Box::new(move |a, b| move_good_endpoint_ok(a, b, &kc)),
            })
        }
        "move-good2" => {
            let n = n.ok_or_else(|| CliError::Config("--n is required".into()))?;
            let kk = match k {
                Some(s) => parse_list(s)?,
                None => vec![n; d],
            };
            let start = move_good2_fixture(d, n, &kk)?;
            let path = if build { build_move_good2_path(&start, n)? } else { empty_path(&start) };
            Ok(BuiltPath {
                start,
                path,
                header: vec![
                    ("lemma", lemma.into()),
                    ("d", d.to_string()),
                    ("n", n.to_string()),
                    ("k", list_text(&kk)),
                ],
                endpoint_ok: Box::new(move |a, b| move_good2_endpoint_ok(a, b, n)),
            })
        }
        other => Err(CliError::Config(format!("unknown lemma {other:?}"))),
    }
}

fn empty_path(start: &Configuration) -> LegalPath {
    LegalPath::from_steps(start, Vec::new()).expect("empty path")
}

fn build_path(
    lemma: Option<String>,
    d: Option<usize>,
    k: Option<String>,
    n: Option<usize>,
    out: Option<PathBuf>,
    common: &Common,
) -> Result<()> {
    let lemma = lemma.ok_or_else(|| CliError::Config("--lemma or --verify is required".into()))?;
    let d = d.ok_or_else(|| CliError::Config("--d is required".into()))?;
    if common.dry_run {
        let b = lemma_setup(&lemma, d, k.as_deref(), n, false)?;
        return emit_plan(
            "path",
            json!({
                "header": b.header.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<std::collections::BTreeMap<_, _>>(),
                "sites": b.start.states().len(),
                "out": out.as_ref().map(|p| p.display().to_string()),
            }),
        );
    }
    let b = lemma_setup(&lemma, d, k.as_deref(), n, true)?;
    let report = verify_legal_path(&b.path);
    let endpoint = (b.endpoint_ok)(&b.start, &b.path.last());
    let text = render_path_file(&b.header, &b.path);
    let mut t = Table::new("path", &["lemma", "d", "steps", "valid", "endpoint_ok"]);
    t.push(vec![lemma.as_str().into(), d.into(), b.path.steps.len().into(), report.valid.into(), endpoint.into()]);
    match out {
        Some(p) => {
            std::fs::write(&p, text)?;
            emit("path", &[(t, None)], common.json)
        }
        None if common.json => emit("path", &[(t, None)], true),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify_path(file: &Path, common: &Common) -> Result<()> {
    let pf = load_path_file(file)?;
    let lemma = pf.get("lemma")?.to_string();
    let (start, endpoint): (Configuration, Box<dyn Fn(&Configuration, &Configuration) -> bool>) = if lemma == "reach" {
        let cfg = RunConfig::load(Path::new(pf.get("config")?))?;
        let domain = cfg.domain()?;
        let start = load_state_file(&domain, Path::new(pf.get("from")?))?;
        let target = load_state_file(&domain, Path::new(pf.get("to")?))?;
        (start, Box::new(move |_, end| end.states() == target.states()))
    } else {
        let d: usize = pf.get("d")?.parse().map_err(|_| CliError::Config("bad `d` in path header".into()))?;
        let n = pf
            .header
            .get("n")
            .map(|s| s.parse::<usize>())
            .transpose()
            .map_err(|_| CliError::Config("bad `n`".into()))?;
        let b = lemma_setup(&lemma, d, pf.header.get("k").map(String::as_str), n, false)?;
        (b.start, b.endpoint_ok)
    };
    if common.dry_run {
        return emit_plan(
            "path",
            json!({ "verify": file.display().to_string(), "lemma": lemma, "steps": pf.steps.len() }),
        );
    }
    let path = pf.to_legal_path(&start)?;
    let report = verify_legal_path(&path);
    let endpoint_ok = report.valid && endpoint(&start, &path.last());
    let mut t = Table::new("verify", &["lemma", "steps", "valid", "first_bad_index", "endpoint_ok"]);
    let bad = report.first_bad_index.map_or(Cell::Str(String::new()), |i| i.into());
    t.push(vec![lemma.as_str().into(), path.steps.len().into(), report.valid.into(), bad, endpoint_ok.into()]);
    emit("path", &[(t, None)], common.json)?;
    if !(report.valid && endpoint_ok) {
        anyhow::bail!("path file {} failed verification", file.display());
    }
    Ok(())
}

fn round_up8(x: usize) -> usize {
    x.div_ceil(8).max(1) * 8
}

#[allow(clippy::too_many_arguments)]
fn crossing(
    config: &Path,
    h: Option<String>,
    ell: Option<usize>,
    n: Option<usize>,
    orientation: Option<String>,
    samples: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    common: &Common,
) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.spec()?;
    let section = cfg.crossing.clone().unwrap_or_default();
    if cfg.dimension != 2 {
        return Err(CliError::Config("crossings need dimension 2".into()).into());
    }
    let h = parse_type(2, h.or(section.h).as_deref().unwrap_or("11"))?;
    let q_h = spec.q_of(h).ok_or_else(|| CliError::Config(format!("type {h} is not in G")))?;
    let (ell0, n0) = default_scales(q_h.log2().abs()).map_err(CliError::from)?;
    let ell = ell.or(section.ell).unwrap_or_else(|| round_up8(ell0));
    let n = n.or(section.n).unwrap_or(n0);
    let orientation: Orientation =
        orientation.or(section.orientation).as_deref().unwrap_or("vertical").parse().map_err(CliError::from)?;
    let samples = samples.or(section.samples).unwrap_or(1000);
    let seed = seed.unwrap_or(cfg.seed);
    if common.dry_run {
        return emit_plan(
            "crossing",
            json!({
                "spec": spec_json(&spec), "h": h.to_string(), "ell": ell, "n": n,
                "orientation": orientation.name(), "samples": samples, "seed": seed,
                "strip_sites_upper_bound": (n + 1) * (ell + 2) * (ell + 2),
            }),
        );
    }
    let mc = crossing_failure_mc(&spec, h, ell, n, orientation, samples, seed).map_err(CliError::from)?;
    let mut t =
        Table::new("crossing", &["h", "ell", "n", "orientation", "samples", "failures", "estimate", "ci_lo", "ci_hi"]);
    t.push(vec![
        h.to_string().into(),
        ell.into(),
        n.into(),
        orientation.name().into(),
        mc.samples.into(),
        mc.failures.into(),
        mc.estimate.into(),
        mc.ci_lo.into(),
        mc.ci_hi.into(),
    ]);
    emit("crossing", &[(t, out.as_deref())], common.json)
}

fn event_prob(
    config: &Path,
    event: Option<String>,
    p: EventParams,
    samples: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    common: &Common,
) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let spec = cfg.spec()?;
    let section = cfg.event.clone().unwrap_or_default();
    let name = event.or(section.name).ok_or_else(|| CliError::Config("--event is required".into()))?;
    let event: Event = name.parse().map_err(CliError::from)?;
    let params = EventParams {
        ell: p.ell.or(section.ell),
        n: p.n.or(section.n),
        big_l: p.big_l.or(section.big_l),
        big_l_c: p.big_l_c.or(section.big_l_c),
        width: p.width.or(section.width),
    };
    let samples = samples.or(section.samples).unwrap_or(1000);
    let seed = seed.unwrap_or(cfg.seed);
    let r = resolve_params(&spec, event, &params).map_err(CliError::from)?;
    if common.dry_run {
        let support = event_support(event, &r).map_err(CliError::from)?;
        return emit_plan(
            "event-prob",
            json!({
                "spec": spec_json(&spec), "event": event.name(), "ell": r.ell, "n": r.n,
                "big_l": r.big_l, "big_l_c": r.big_l_c, "width": r.width,
                "out_of_regime": r.out_of_regime, "support_size": support.len(),
                "samples": samples, "seed": seed,
            }),
        );
    }
    let est = event_probability_mc(&spec, event, &params, samples, seed).map_err(CliError::from)?;
    let mut t = Table::new(
        "event",
        &[
            "event",
            "ell",
            "n",
            "big_l",
            "big_l_c",
            "width",
            "out_of_regime",
            "support_size",
            "samples",
            "failures",
            "estimate",
            "ci_lo",
            "ci_hi",
            "support_product",
        ],
    );
    let r = est.params;
    t.push(vec![
        event.name().into(),
        r.ell.into(),
        r.n.into(),
        r.big_l.into(),
        r.big_l_c.into(),
        r.width.into(),
        r.out_of_regime.into(),
        est.support_size.into(),
        est.mc.samples.into(),
        est.mc.failures.into(),
        est.mc.estimate.into(),
        est.mc.ci_lo.into(),
        est.mc.ci_hi.into(),
        est.support_product.into(),
    ]);
    emit("event-prob", &[(t, out.as_deref())], common.json)
}

fn classify(
    config: &Path,
    state: &Path,
    scheme: &str,
    at: &str,
    big_l: Option<usize>,
    out: Option<PathBuf>,
    common: &Common,
) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let domain = cfg.domain()?;
    let omega = load_state_file(&domain, state)?;
    let coords: Vec<i64> = at
        .split(',')
        .map(|s| s.trim().parse::<i64>().map_err(|_| CliError::Config(format!("bad --at {at:?}"))))
        .collect::<Result<_, _>>()?;
    let block = || -> Result<(i64, i64), CliError> {
        match coords[..] {
            [i, j] => Ok((i, j)),
            _ => Err(CliError::Config("--at needs two block coordinates".into())),
        }
    };
    let big_l = match scheme {
        "box-3ii" => {
            let b = omega.spec().q_of(mcem_core::VacancyType::from_mask(2, 3));
            Some(big_l.or_else(|| b.map(|q| q.log2().abs().powi(3).floor() as usize)).unwrap_or(2))
        }
        _ => None,
    };
    if common.dry_run {
        return emit_plan(
            "classify",
            json!({ "domain": domain_json(&domain), "scheme": scheme, "at": coords, "big_l": big_l }),
        );
    }
    let (class, traversable, sup) = match scheme {
        "box-3ii" => {
            let c = classify_box_3ii(&omega, block()?, big_l.expect("set above")).map_err(CliError::from)?;
            let name = match c {
                BoxClass3ii::BEvil => "b-evil",
                BoxClass3ii::BTraversable => "b-traversable",
                BoxClass3ii::BSuper => "b-super",
            };
            (name, c.is_traversable(), c.is_super())
        }
        "block-3iii" => {
            let f = classify_block_3iii(&omega, block()?).map_err(CliError::from)?;
            let name = if f.ac_super {
                "ac-super"
            } else if f.ac_traversable {
                "ac-traversable"
            } else if f.b_super {
                "b-super"
            } else if f.b_traversable {
                "b-traversable"
            } else {
                "none"
            };
            (name, f.b_traversable, f.b_super || f.ac_super)
        }
        "blocked-core" => {
            let t = point(cfg.dimension, &coords)?;
            let c = is_blocked_core(&omega, &t);
            (if c.blocked { "blocked" } else { "not-blocked" }, !c.blocked, c.blocked)
        }
        "good-box" => {
            let x = point(cfg.dimension, &coords)?;
            let good = is_good_box(&omega, &x);
            (if good { "good" } else { "not-good" }, good, good)
        }
        other => return Err(CliError::Config(format!("unknown scheme {other:?}")).into()),
    };
    let mut t = Table::new("classify", &["scheme", "at", "class", "traversable", "super"]);
    t.push(vec![scheme.into(), at.replace(' ', "").into(), class.into(), traversable.into(), sup.into()]);
    emit("classify", &[(t, out.as_deref())], common.json)
}
