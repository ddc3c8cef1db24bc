use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use cayley_core::bench::{self, ScalingConfig};
use cayley_core::cayley::analysis::{decay_certificate, kappa};
use cayley_core::cayley::exact::apply_cayley_exact;
use cayley_core::cayley::jacobi::{apply_cayley_jacobi, JacobiConfig};
use cayley_core::cayley::{cayley_transform, CayleyFilter, CayleyFilterSpec};
use cayley_core::chebyshev::{apply_cheb, default_lambda_max};
use cayley_core::grad::grad_check_suite;
use cayley_core::graph::{generate_community_graph, generate_grid_graph, CommunitySpec, Graph};
use cayley_core::io;
use cayley_core::laplacian::{build_laplacian, LaplacianKind, LaplacianOperator};
use cayley_core::learn::{train_community, FilterFamily, TrainConfig};
use cayley_core::spectral::eigendecompose;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{load_config, parse_filter, read_text, FilterFile};
use crate::error::CliError;
use crate::output::{Csv, OutputDir, RunManifest};
use crate::{GlobalOpts, LapArg, PathArg};

/// Gradient checks pass below this maximum relative coordinate error.
pub const GRAD_CHECK_TOLERANCE: f64 = 1e-5;

fn kind_name(kind: LapArg) -> &'static str {
    match kind {
        LapArg::Unnormalized => "unnormalized",
        LapArg::Normalized => "normalized",
        LapArg::ScaledUnnormalized => "scaled_unnormalized",
    }
}

fn laplacian(g: &Graph, kind: LapArg) -> Result<LaplacianOperator, CliError> {
    let kind = match kind {
        LapArg::Unnormalized => LaplacianKind::Unnormalized,
        LapArg::Normalized => LaplacianKind::Normalized,
        LapArg::ScaledUnnormalized => LaplacianKind::scaled_unnormalized(g),
    };
    Ok(build_laplacian(g, kind)?)
}

fn read_graph(path: &Path) -> Result<Graph, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(io::read_matrix_market(BufReader::new(file))?)
}

/// The graph from `path`, or the default community graph (seeded by `--seed`
/// when given).
fn graph_or_default(path: Option<&Path>, seed: Option<u64>) -> Result<(Graph, serde_json::Value), CliError> {
    match path {
        Some(p) => Ok((read_graph(p)?, json!(p.display().to_string()))),
        None => {
            let mut spec = CommunitySpec::default();
            if let Some(s) = seed {
                spec.seed = s;
            }
            let (g, _) = generate_community_graph(&spec)?;
            Ok((g, serde_json::to_value(&spec).map_err(CliError::internal)?))
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(v).map_err(CliError::internal)
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn gen_graph(
    g: &GlobalOpts,
    spec_path: Option<&Path>,
    grid: Option<&str>,
    out: &Path,
    labels: Option<&Path>,
) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(&g.out_dir)?;
    let (graph, labels_vec, config, seed) = match grid {
        Some(dims) => {
            let parse = |s: &str| s.trim().parse::<usize>().ok().filter(|&v| v > 0);
            let (rows, cols) = dims
                .split_once(['x', 'X'])
                .and_then(|(a, b)| Some((parse(a)?, parse(b)?)))
                .ok_or_else(|| CliError::config(Some("grid".into()), format!("`{dims}` is not ROWSxCOLS")))?;
            (
                generate_grid_graph(rows, cols),
                None,
                json!({ "grid": { "rows": rows, "cols": cols } }),
                g.seed.unwrap_or(0),
            )
        }
        None => {
            let mut spec: CommunitySpec = load_config(spec_path)?;
            if let Some(s) = g.seed {
                spec.seed = s;
            }
            let (graph, labels) = generate_community_graph(&spec)?;
            let seed = spec.seed;
            (graph, Some(labels), json!({ "community": to_json(&spec)? }), seed)
        }
    };
    let mut mtx = Vec::new();
    io::write_matrix_market(&graph, &mut mtx)?;
    dir.write(out, &mtx)?;
    let mut labels_out = serde_json::Value::Null;
    if let Some(lv) = labels_vec {
        let path = labels.map(Path::to_path_buf).unwrap_or_else(|| {
            let mut p = out.as_os_str().to_owned();
            p.push(".labels");
            PathBuf::from(p)
        });
        let mut text = Vec::new();
        io::write_labels(&lv, &mut text)?;
        dir.write(&path, &text)?;
        labels_out = json!(path.display().to_string());
    }
    let config = json!({
        "graph": config,
        "out": out.display().to_string(),
        "labels": labels_out,
        "n": graph.n(),
        "edges": graph.edge_count(),
    });
    dir.finish("gen-graph", seed, g.threads as usize, config)
}

pub fn spectrum(g: &GlobalOpts, graph: &Path, kind: LapArg, out: &Path) -> Result<RunManifest, CliError> {
    let mut dir = OutputDir::create(&g.out_dir)?;
    let lap = laplacian(&read_graph(graph)?, kind)?;
    let spec = eigendecompose(&lap)?;
    let mut csv = Csv::new("index,eigenvalue");
    for (i, &l) in spec.eigenvalues().iter().enumerate() {
        csv.row(&[i.to_string(), num(l)]);
    }
    dir.write(out, &csv.into_bytes())?;
    let config = json!({
        "graph": graph.display().to_string(),
        "kind": kind_name(kind),
        "out": out.display().to_string(),
    });
    dir.finish("spectrum", g.seed.unwrap_or(0), g.threads as usize, config)
}

pub fn spectrum_map(
    g: &GlobalOpts,
    graph: &Path,
    kind: LapArg,
    hs: &[f64],
    out: &Path,
) -> Result<RunManifest, CliError> {
    if let Some(&bad) = hs.iter().find(|&&h| !(h > 0.0) || !h.is_finite()) {
        return Err(CliError::config(Some("h".into()), format!("zoom {bad} must be positive and finite")));
    }
    let mut dir = OutputDir::create(&g.out_dir)?;
    let lap = laplacian(&read_graph(graph)?, kind)?;
    let spec = eigendecompose(&lap)?;
    let mut csv = Csv::new("h,index,eigenvalue,re,im");
    for &h in hs {
        for (i, &l) in spec.eigenvalues().iter().enumerate() {
            let z = cayley_transform(h, l);
            csv.row(&[num(h), i.to_string(), num(l), num(z.re), num(z.im)]);
        }
    }
    dir.write(out, &csv.into_bytes())?;
    let config = json!({
        "graph": graph.display().to_string(),
        "kind": kind_name(kind),
        "h": hs,
        "out": out.display().to_string(),
    });
    dir.finish("spectrum-map", g.seed.unwrap_or(0), g.threads as usize, config)
}

pub struct FilterApplyArgs<'a> {
    pub graph: &'a Path,
    pub kind: LapArg,
    pub filter: &'a Path,
    pub signal: Option<&'a Path>,
    pub impulse: Option<usize>,
    pub path: PathArg,
    pub k: usize,
    pub normalize_each_stage: bool,
    pub out: &'a Path,
}

pub fn filter_apply(g: &GlobalOpts, a: FilterApplyArgs<'_>) -> Result<RunManifest, CliError> {
    let filter = parse_filter(&read_text(a.filter)?)?;
    let graph = read_graph(a.graph)?;
    let lap = laplacian(&graph, a.kind)?;
    let (names, columns) = match (a.signal, a.impulse) {
        (Some(p), _) => {
            let file = File::open(p).map_err(|e| CliError::io(p, e))?;
            io::read_signals(BufReader::new(file))?
        }
        (None, Some(m)) => {
            if m >= graph.n() {
                return Err(CliError::config(
                    Some("impulse".into()),
                    format!("vertex {m} out of range for {} vertices", graph.n()),
                ));
            }
            let mut delta = vec![0.0; graph.n()];
            delta[m] = 1.0;
            (vec![format!("impulse_{m}")], vec![delta])
        }
        (None, None) => return Err(CliError::config(Some("signal".into()), "need --signal or --impulse")),
    };
    let jacobi = JacobiConfig {
        k: a.k,
        normalize_each_stage: a.normalize_each_stage,
    };
    let mut filtered = Vec::with_capacity(columns.len());
    let (resolved_filter, path_name) = match &filter {
        FilterFile::Cayley(f) => {
            for col in &columns {
                filtered.push(match a.path {
                    PathArg::Exact => apply_cayley_exact(f, &lap, col)?,
                    PathArg::Jacobi => apply_cayley_jacobi(f, &lap, col, &jacobi)?,
                });
            }
            let name = match a.path {
                PathArg::Exact => json!("exact"),
                PathArg::Jacobi => json!({ "jacobi": to_json(&jacobi)? }),
            };
            (filter.to_json(), name)
        }
        FilterFile::Chebyshev { .. } => {
            let cheb = filter.chebyshev(default_lambda_max(&lap)).expect("chebyshev filter")?;
            for col in &columns {
                filtered.push(apply_cheb(&cheb, &lap, col)?);
            }
            (to_json(&cheb)?, json!("recurrence"))
        }
    };
    let mut dir = OutputDir::create(&g.out_dir)?;
    let mut bytes = Vec::new();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    io::write_signals(&name_refs, &filtered, &mut bytes)?;
    dir.write(a.out, &bytes)?;
    let config = json!({
        "graph": a.graph.display().to_string(),
        "kind": kind_name(a.kind),
        "filter": resolved_filter,
        "signal": a.signal.map(|p| p.display().to_string()),
        "impulse": a.impulse,
        "path": path_name,
        "out": a.out.display().to_string(),
    });
    dir.finish("filter-apply", g.seed.unwrap_or(0), g.threads as usize, config)
}

pub fn grad_check(g: &GlobalOpts, cases: usize, out: &Path) -> Result<RunManifest, CliError> {
    if cases == 0 {
        return Err(CliError::config(Some("cases".into()), "must be > 0"));
    }
    let seed = g.seed.unwrap_or(0);
    let report = grad_check_suite(seed, cases)?;
    let mut dir = OutputDir::create(&g.out_dir)?;
    dir.write_json(out, &report)?;
    let config = json!({
        "cases": cases,
        "tolerance": GRAD_CHECK_TOLERANCE,
        "out": out.display().to_string(),
    });
    let manifest = dir.finish("grad-check", seed, g.threads as usize, config)?;
    if !(report.max_rel_err < GRAD_CHECK_TOLERANCE) {
        return Err(CliError::check_failed(format!(
            "max relative gradient error {:e} is not below {GRAD_CHECK_TOLERANCE:e}",
            report.max_rel_err
        )));
    }
    Ok(manifest)
}

#[allow(clippy::too_many_arguments)]
pub fn decay_check(
    g: &GlobalOpts,
    graph_path: Option<&Path>,
    kind: LapArg,
    filter_path: Option<&Path>,
    r: usize,
    h: f64,
    vertex: usize,
    out: &Path,
) -> Result<RunManifest, CliError> {
    let seed = g.seed.unwrap_or(0);
    let (graph, graph_cfg) = graph_or_default(graph_path, g.seed)?;
    let lap = laplacian(&graph, kind)?;
    let filt: CayleyFilter = match filter_path {
        Some(p) => match parse_filter(&read_text(p)?)? {
            FilterFile::Cayley(f) => f,
            FilterFile::Chebyshev { .. } => {
                return Err(CliError::config(Some("filter".into()), "decay-check needs a Cayley filter"))
            }
        },
        None => {
            if !(h > 0.0) || !h.is_finite() {
                return Err(CliError::config(Some("h".into()), format!("zoom {h} must be positive")));
            }
            bench::random_filter(&mut ChaCha8Rng::seed_from_u64(seed), r, h)
        }
    };
    let kap = kappa(&lap, filt.h())?;
    let cert = decay_certificate(&filt, &lap, &graph, vertex)?;
    let holds = cert.holds();
    let mut dir = OutputDir::create(&g.out_dir)?;
    dir.write_json(
        out,
        &json!({
            "kappa": kap,
            "holds": holds,
            "certificate": cert,
        }),
    )?;
    let config = json!({
        "graph": graph_cfg,
        "kind": kind_name(kind),
        "filter": to_json(&CayleyFilterSpec::from(&filt))?,
        "vertex": vertex,
        "out": out.display().to_string(),
    });
    let manifest = dir.finish("decay-check", seed, g.threads as usize, config)?;
    if !holds {
        return Err(CliError::check_failed("measured tail exceeds the decay bound"));
    }
    Ok(manifest)
}

fn named(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}_{suffix}"))
}

pub fn community(g: &GlobalOpts, config: Option<&Path>, prefix: &str) -> Result<RunManifest, CliError> {
    let mut cfg: TrainConfig = load_config(config)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let result = train_community(&cfg)?;
    let mut dir = OutputDir::create(&g.out_dir)?;
    dir.write_json(&named(prefix, "result.json"), &result)?;
    let mut loss = Csv::new("epoch,loss");
    for (e, l) in result.loss_curve.iter().enumerate() {
        loss.row(&[e.to_string(), num(*l)]);
    }
    dir.write(&named(prefix, "loss.csv"), &loss.into_bytes())?;
    let mut timing = Csv::new("epoch,seconds");
    for (e, s) in result.epoch_seconds.iter().enumerate() {
        timing.row(&[e.to_string(), num(*s)]);
    }
    dir.write(&named(prefix, "timing.csv"), &timing.into_bytes())?;
    dir.finish("community-experiment", cfg.seed, g.threads as usize, to_json(&cfg)?)
}

/// Grid of community experiments. Chebyshev runs ignore `jacobi_ks`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub base: TrainConfig,
    pub families: Vec<FilterFamily>,
    pub orders: Vec<usize>,
    /// `null` selects exact inversion.
    pub jacobi_ks: Vec<Option<usize>>,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: TrainConfig::default(),
            families: vec![FilterFamily::Cayley, FilterFamily::Chebyshev],
            orders: vec![1, 2, 3],
            jacobi_ks: vec![None],
            seeds: (0..5).collect(),
        }
    }
}

fn family_name(f: FilterFamily) -> &'static str {
    match f {
        FilterFamily::Cayley => "cayley",
        FilterFamily::Chebyshev => "chebyshev",
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn sweep(g: &GlobalOpts, config: Option<&Path>, prefix: &str) -> Result<RunManifest, CliError> {
    let mut cfg: SweepConfig = load_config(config)?;
    if let Some(s) = g.seed {
        cfg.base.seed = s;
        cfg.seeds = vec![s];
    }
    for (field, empty) in [
        ("families", cfg.families.is_empty()),
        ("orders", cfg.orders.is_empty()),
        ("jacobi_ks", cfg.jacobi_ks.is_empty()),
        ("seeds", cfg.seeds.is_empty()),
    ] {
        if empty {
            return Err(CliError::config(Some(field.into()), format!("`{field}` must not be empty")));
        }
    }
    cfg.base.validate()?;

    let mut rows = Csv::new("family,r,k,seed,test_accuracy,train_accuracy,learned_h,final_loss");
    let mut summary = Csv::new("family,r,k,seeds,mean_test_accuracy,std_test_accuracy");
    for &family in &cfg.families {
        for &r in &cfg.orders {
            let ks: &[Option<usize>] = match family {
                FilterFamily::Cayley => &cfg.jacobi_ks,
                FilterFamily::Chebyshev => &[None],
            };
            for &k in ks {
                let k_name = match (family, k) {
                    (FilterFamily::Chebyshev, _) => "none".to_string(),
                    (_, None) => "exact".to_string(),
                    (_, Some(k)) => k.to_string(),
                };
                let mut accs = Vec::with_capacity(cfg.seeds.len());
                for &seed in &cfg.seeds {
                    let run = TrainConfig {
                        filter_family: family,
                        r,
                        jacobi_k: k,
                        seed,
                        ..cfg.base.clone()
                    };
                    let res = train_community(&run)?;
                    accs.push(res.test_accuracy);
                    rows.row(&[
                        family_name(family).into(),
                        r.to_string(),
                        k_name.clone(),
                        seed.to_string(),
                        num(res.test_accuracy),
                        num(res.train_accuracy),
                        res.learned_h.map(num).unwrap_or_default(),
                        res.loss_curve.last().copied().map(num).unwrap_or_default(),
                    ]);
                }
                let (mean, std) = mean_std(&accs);
                summary.row(&[
                    family_name(family).into(),
                    r.to_string(),
                    k_name,
                    accs.len().to_string(),
                    num(mean),
                    num(std),
                ]);
            }
        }
    }
    let mut dir = OutputDir::create(&g.out_dir)?;
    dir.write(&named(prefix, "runs.csv"), &rows.into_bytes())?;
    dir.write(&named(prefix, "summary.csv"), &summary.into_bytes())?;
    dir.finish("sweep", cfg.base.seed, g.threads as usize, to_json(&cfg)?)
}

pub fn bench_scaling(
    g: &GlobalOpts,
    config: Option<&Path>,
    reps: Option<usize>,
    prefix: &str,
) -> Result<RunManifest, CliError> {
    let mut cfg: ScalingConfig = load_config(config)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(r) = reps {
        cfg.reps = r;
    }
    cfg.reps = bench::resolve_reps(cfg.reps)?;
    let report = bench::bench_scaling(&cfg)?;
    let mut dir = OutputDir::create(&g.out_dir)?;
    dir.write(&PathBuf::from(format!("{prefix}.csv")), report.rows_csv().as_bytes())?;
    dir.write(&named(prefix, "slopes.csv"), report.slopes_csv().as_bytes())?;
    dir.finish("bench-scaling", cfg.seed, g.threads as usize, to_json(&cfg)?)
}

#[allow(clippy::too_many_arguments)]
pub fn bench_jacobi(
    g: &GlobalOpts,
    graph_path: Option<&Path>,
    kind: LapArg,
    orders: &[usize],
    ks: &[usize],
    h: f64,
    reps: usize,
    out: &Path,
) -> Result<RunManifest, CliError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(CliError::config(Some("h".into()), format!("zoom {h} must be positive")));
    }
    if orders.contains(&0) {
        return Err(CliError::config(Some("orders".into()), "orders must be >= 1"));
    }
    let seed = g.seed.unwrap_or(0);
    let reps = bench::resolve_reps(reps)?;
    let (graph, graph_cfg) = graph_or_default(graph_path, g.seed)?;
    let lap = laplacian(&graph, kind)?;
    let kap = kappa(&lap, h)?;
    let rows = bench::bench_jacobi_sweep(&lap, orders, ks, h, reps, seed)?;
    let mut dir = OutputDir::create(&g.out_dir)?;
    dir.write(out, bench::sweep_csv(&rows).as_bytes())?;
    let config = json!({
        "graph": graph_cfg,
        "kind": kind_name(kind),
        "orders": orders,
        "ks": ks,
        "h": h,
        "kappa": kap,
        "reps": reps,
        "out": out.display().to_string(),
    });
    dir.finish("bench-jacobi", seed, g.threads as usize, config)
}
