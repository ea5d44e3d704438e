use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qscale_core::estimator::{effective_degree, scaling_sweep, swap_free_size, SweepSpec, SWEEP_HEADER};
use qscale_core::fitlab::{
    design_from_rows, fit_linear_model, fit_unsatisfied_edges, fit_unsatisfied_edges_per_lattice, size_predictor, FitReport, UnsatRow,
};
use qscale_core::graphs::{gen_random_regular, parse_ising, read_graph6_corpus, IsingInstance, ProblemGraph};
use qscale_core::hardware::{build_lattice, grid_for, HardwareGraph, LatticeKind};
use qscale_core::rng::derive_seed;
use qscale_core::router::{mirror_layers, optimize, swap_lower_bound, RoutingConfig};

use crate::manifest;

fn parse_lattice(s: &str) -> Result<LatticeKind, String> {
    s.parse().map_err(|e: qscale_core::HardwareError| e.to_string())
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = "QSCALE_OUT_DIR")]
    pub out: Option<PathBuf>,
}

impl OutDir {
    /// Resolves and creates the directory, pinning it for the manifest.
    fn prepare(&mut self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        self.out = Some(dir.clone());
        Ok(dir)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct HardwareArgs {
    #[arg(long, value_parser = parse_lattice)]
    pub lattice: LatticeKind,
    /// Explicit base grid rows; by default the grid is sized to the problem.
    #[arg(long, requires = "cols")]
    pub rows: Option<usize>,
    #[arg(long, requires = "rows")]
    pub cols: Option<usize>,
}

impl HardwareArgs {
    fn build(&self, n: usize) -> Result<HardwareGraph> {
        let hw = match (self.rows, self.cols) {
            (Some(r), Some(c)) => build_lattice(self.lattice, r, c)?,
            _ => grid_for(n, self.lattice),
        };
        if hw.num_sites() < n {
            bail!("{} lattice has {} sites, too small for {n} qubits", self.lattice, hw.num_sites());
        }
        Ok(hw)
    }
}

fn load_graphs(path: &Path) -> Result<Vec<ProblemGraph>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    read_graph6_corpus(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RouteArgs {
    /// graph6 corpus, one graph per line (or an Ising file with `--ising`).
    #[arg(required_unless_present = "random_regular")]
    pub input: Option<PathBuf>,
    /// Treat the input as a single Ising instance (`n`, then `i j J` and `i h` lines).
    #[arg(long)]
    pub ising: bool,
    /// Route `--count` random regular graphs on this many vertices instead of a file.
    #[arg(long, conflicts_with = "input")]
    pub random_regular: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    #[arg(long, default_value_t = 30)]
    pub count: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub hardware: HardwareArgs,
    /// Outer loop size; defaults follow the per-size presets.
    #[arg(long)]
    pub shuffles: Option<usize>,
    /// Random placements per shuffle.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Lookahead window in two-qubit gates.
    #[arg(long)]
    pub lookahead: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.999)]
    pub decay: f64,
    /// Layers used for the mirrored `cnot_total` column.
    #[arg(long, default_value_t = 1)]
    pub p_layers: usize,
    /// Route only the first N graphs.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Also write each routed circuit in the text format.
    #[arg(long)]
    pub circuits: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: OutDir,
}

impl RouteArgs {
    fn config(&self, n: usize) -> RoutingConfig {
        let preset = RoutingConfig::preset_for(n);
        RoutingConfig {
            shuffles: self.shuffles.unwrap_or(preset.shuffles),
            iterations: self.iterations.unwrap_or(preset.iterations),
            lookahead: self.lookahead.unwrap_or(preset.lookahead),
            seed: self.seed,
            decay: self.decay,
        }
    }
}

pub const ROUTE_HEADER: [&str; 12] = [
    "graph_id", "lattice", "n", "d_G", "d_H", "n_swap", "sigma", "n0", "n_u", "depth", "cnot_total", "seed",
];

pub fn route(args: &RouteArgs) -> Result<()> {
    let mut args = args.clone();
    let dir = args.common.prepare()?;
    if args.p_layers == 0 {
        bail!("--p-layers must be at least 1");
    }
    let instances: Vec<(String, IsingInstance)> = if let Some(n) = args.random_regular {
        (0..args.count)
            .map(|k| {
                let g = gen_random_regular(n, args.degree, derive_seed(args.seed, &[k as u64]))?;
                Ok((k.to_string(), IsingInstance::from_graph(&g, 1.0, 0.0)))
            })
            .collect::<Result<_>>()?
    } else if args.ising {
        let input = args.input.as_deref().expect("clap requires an input");
        let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        let inst = parse_ising(&text).with_context(|| format!("parsing {}", input.display()))?;
        let id = input.file_stem().map_or("0".into(), |s| s.to_string_lossy().into_owned());
        vec![(id, inst)]
    } else {
        load_graphs(args.input.as_deref().expect("clap requires an input"))?
            .iter()
            .enumerate()
            .map(|(k, g)| (k.to_string(), IsingInstance::from_graph(g, 1.0, 0.0)))
            .collect()
    };
    let take = args.limit.unwrap_or(usize::MAX);

    let csv_path = dir.join("route.csv");
    let jsonl_path = dir.join("route.jsonl");
    let mut csv = csv::Writer::from_path(&csv_path)?;
    csv.write_record(ROUTE_HEADER)?;
    let mut jsonl = String::new();
    let circuit_dir = dir.join("route_circuits");
    if args.circuits {
        fs::create_dir_all(&circuit_dir)?;
    }
    for (id, inst) in instances.iter().take(take) {
        let n = inst.num_qubits();
        let hw = args.hardware.build(n)?;
        let cfg = args.config(n);
        let r = optimize(inst, &hw, &cfg).with_context(|| format!("routing graph {id}"))?;
        let g = inst.problem_graph();
        let c = r.stats.counts;
        let total = mirror_layers(&r, args.p_layers);
        csv.write_record([
            id.clone(),
            hw.kind().name().to_string(),
            n.to_string(),
            float(g.average_degree()),
            float(effective_degree(hw.kind(), hw.num_sites())),
            c.n_swap.to_string(),
            c.sigma.map(float).unwrap_or_default(),
            c.n0.to_string(),
            r.stats.n_u.to_string(),
            r.stats.depth.to_string(),
            total.n_cnot.to_string(),
            cfg.seed.to_string(),
        ])?;
        let record = serde_json::json!({
            "graph_id": id,
            "lattice": hw.kind(),
            "stats": r.stats,
            "initial": r.initial,
            "final": r.final_placement,
            "lower_bound": swap_lower_bound(&g, &hw)?,
        });
        jsonl.push_str(&serde_json::to_string(&record)?);
        jsonl.push('\n');
        if args.circuits {
            fs::write(circuit_dir.join(format!("{id}.txt")), r.circuit.to_text())?;
        }
    }
    csv.flush()?;
    fs::write(&jsonl_path, jsonl)?;
    manifest::write(&dir, "route", &args, args.seed, &[csv_path, jsonl_path])
}

/// Parses `a,b,c` or an inclusive range `start:stop:step`.
fn parse_list<T>(s: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr + Copy + PartialOrd + std::ops::Add<Output = T> + Default,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let parts: Vec<&str> = s.split(':').collect();
    let out = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (T, T, T) = (start.trim().parse()?, stop.trim().parse()?, step.trim().parse()?);
            if step.partial_cmp(&T::default()) != Some(std::cmp::Ordering::Greater) {
                bail!("range step must be positive in `{s}`");
            }
            let mut v = Vec::new();
            let mut x = start;
            while x <= stop {
                v.push(x);
                x = x + step;
            }
            v
        }
        [_] => s.split(',').map(|t| t.trim().parse::<T>()).collect::<Result<_, _>>()?,
        _ => bail!("expected a list `a,b,c` or a range `start:stop:step`, got `{s}`"),
    };
    if out.is_empty() {
        bail!("empty list `{s}`");
    }
    Ok(out)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EstimateArgs {
    /// JSON sweep spec; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem sizes, `a,b,c` or `start:stop:step`.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub p_layers: Option<String>,
    /// Lattice kinds, comma separated.
    #[arg(long)]
    pub lattice: Option<String>,
    #[arg(long)]
    pub d_g: Option<String>,
    #[arg(long)]
    pub eps_cnot: Option<String>,
    #[arg(long)]
    pub p_target: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: OutDir,
}

impl EstimateArgs {
    fn spec(&self) -> Result<SweepSpec> {
        let mut spec = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => SweepSpec::default(),
        };
        if let Some(s) = &self.n {
            spec.ns = parse_list(s)?;
        }
        if let Some(s) = &self.p_layers {
            spec.ps = parse_list(s)?;
        }
        if let Some(s) = &self.lattice {
            spec.lattices = s.split(',').map(|t| parse_lattice(t.trim())).collect::<Result<_, _>>().map_err(anyhow::Error::msg)?;
        }
        if let Some(s) = &self.d_g {
            spec.d_gs = parse_list(s)?;
        }
        if let Some(s) = &self.eps_cnot {
            spec.eps_cnots = parse_list(s)?;
        }
        if let Some(v) = self.p_target {
            spec.p_target = v;
        }
        if let Some(v) = self.sigma {
            spec.sigma = v;
        }
        Ok(spec)
    }
}

pub fn estimate(args: &EstimateArgs) -> Result<()> {
    let mut args = args.clone();
    let dir = args.common.prepare()?;
    let spec = args.spec()?;
    let rows = scaling_sweep(&spec)?;
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    let path = dir.join("estimate.csv");
    fs::write(&path, text)?;
    manifest::write(&dir, "estimate", &args, 0, &[path])
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `N_SWAP = a·d_G/d_H + b`.
    Degree,
    /// `N_SWAP = μ(n − n₀)√n/d_H`.
    Size,
    /// `N_u = ν(n − n₀)/√d_H` over all lattices.
    Unsat,
    /// `N_u = ν(n − n₀)/√d_H`, one ν per lattice.
    UnsatPerLattice,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV written by `route`.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub model: FitModel,
    /// Fit every row instead of per-group means.
    #[arg(long)]
    pub no_aggregate: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: OutDir,
}

struct RouteRow {
    lattice: LatticeKind,
    n: usize,
    d_g: f64,
    d_h: f64,
    n_swap: f64,
    n_u: f64,
}

fn read_route_csv(path: &Path) -> Result<Vec<RouteRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("schema error: {} has no `{name}` column", path.display()))
    };
    let (ci_l, ci_n, ci_dg, ci_dh, ci_s, ci_u) = (col("lattice")?, col("n")?, col("d_G")?, col("d_H")?, col("n_swap")?, col("n_u")?);
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.with_context(|| format!("line {line}"))?;
        let get = |i: usize| rec.get(i).with_context(|| format!("line {line}: missing field"));
        let num = |i: usize| -> Result<f64> { get(i)?.parse::<f64>().with_context(|| format!("line {line}: bad number")) };
        rows.push(RouteRow {
            lattice: parse_lattice(get(ci_l)?).map_err(|e| anyhow::anyhow!("line {line}: {e}"))?,
            n: get(ci_n)?.parse().with_context(|| format!("line {line}: bad n"))?,
            d_g: num(ci_dg)?,
            d_h: num(ci_dh)?,
            n_swap: num(ci_s)?,
            n_u: num(ci_u)?,
        });
    }
    Ok(rows)
}

/// Means of `value` grouped by `key`, in key order.
fn group_means<K: Ord>(items: impl Iterator<Item = (K, f64)>) -> Vec<(K, f64)> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for (k, v) in items {
        let e = acc.entry(k).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

fn lattice_index(k: LatticeKind) -> usize {
    LatticeKind::ALL.iter().position(|&x| x == k).expect("known kind")
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let mut args = args.clone();
    let dir = args.common.prepare()?;
    let rows = read_route_csv(&args.input)?;
    let agg = !args.no_aggregate;
    let by_size = |value: fn(&RouteRow) -> f64| -> Vec<(LatticeKind, usize, f64, f64)> {
        if agg {
            group_means(rows.iter().map(|r| ((lattice_index(r.lattice), r.n, r.d_h.to_bits()), value(r))))
                .into_iter()
                .map(|((k, n, dh), v)| (LatticeKind::ALL[k], n, f64::from_bits(dh), v))
                .collect()
        } else {
            rows.iter().map(|r| (r.lattice, r.n, r.d_h, value(r))).collect()
        }
    };
    let reports: Vec<FitReport> = match args.model {
        FitModel::Degree => {
            let pts: Vec<(f64, f64)> = if agg {
                group_means(rows.iter().map(|r| ((r.d_g / r.d_h).to_bits(), r.n_swap)))
                    .into_iter()
                    .map(|(x, v)| (f64::from_bits(x), v))
                    .collect()
            } else {
                rows.iter().map(|r| (r.d_g / r.d_h, r.n_swap)).collect()
            };
            let design = design_from_rows(&pts.iter().map(|&(x, _)| vec![x, 1.0]).collect::<Vec<_>>())?;
            let y: Vec<f64> = pts.iter().map(|&(_, v)| v).collect();
            vec![fit_linear_model(&design, &y)?.report("degree")]
        }
        FitModel::Size => {
            let pts = by_size(|r| r.n_swap);
            let design = design_from_rows(
                &pts.iter()
                    .map(|&(k, n, dh, _)| vec![size_predictor(n, swap_free_size(k, n), dh)])
                    .collect::<Vec<_>>(),
            )?;
            let y: Vec<f64> = pts.iter().map(|p| p.3).collect();
            vec![fit_linear_model(&design, &y)?.report("size")]
        }
        FitModel::Unsat | FitModel::UnsatPerLattice => {
            let data: Vec<UnsatRow> = by_size(|r| r.n_u)
                .into_iter()
                .map(|(lattice, n, d_h, n_u)| UnsatRow { lattice, n, d_h, n_u })
                .collect();
            if args.model == FitModel::Unsat {
                vec![fit_unsatisfied_edges(&data, swap_free_size)?.report("unsat")]
            } else {
                fit_unsatisfied_edges_per_lattice(&data, swap_free_size)?
                    .into_iter()
                    .map(|(k, f)| f.report(&format!("unsat:{}", k.name())))
                    .collect()
            }
        }
    };
    let path = dir.join("fit.json");
    fs::write(&path, serde_json::to_string_pretty(&reports)? + "\n")?;
    manifest::write(&dir, "fit", &args, 0, &[path])
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeFormat {
    /// `a b` per line with a `# lattice=` header.
    Edges,
    /// Dense adjacency matrix.
    Csv,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct LatticeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub hardware: HardwareArgs,
    /// Size the grid for this many qubits when rows/cols are not given.
    #[arg(long, required_unless_present = "rows")]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "edges")]
    pub format: LatticeFormat,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: OutDir,
}

pub fn lattice(args: &LatticeArgs) -> Result<()> {
    let mut args = args.clone();
    let dir = args.common.prepare()?;
    let hw = args.hardware.build(args.n.unwrap_or(0))?;
    let (name, body) = match args.format {
        LatticeFormat::Edges => ("lattice.txt", hw.to_edge_list()),
        LatticeFormat::Csv => ("lattice.csv", hw.to_adjacency_csv()),
    };
    let path = dir.join(name);
    fs::write(&path, body)?;
    manifest::write(&dir, "lattice", &args, 0, &[path])
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundArgs {
    /// graph6 corpus.
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub hardware: HardwareArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: OutDir,
}

pub fn lower_bound(args: &LowerBoundArgs) -> Result<()> {
    let mut args = args.clone();
    let dir = args.common.prepare()?;
    let path = dir.join("lower_bound.csv");
    let mut csv = csv::Writer::from_path(&path)?;
    csv.write_record(["graph_id", "lattice", "n", "h_max", "lower_bound"])?;
    for (k, g) in load_graphs(&args.input)?.iter().enumerate() {
        let hw = args.hardware.build(g.num_vertices())?;
        csv.write_record([
            k.to_string(),
            hw.kind().name().to_string(),
            g.num_vertices().to_string(),
            hw.family_h_max().to_string(),
            swap_lower_bound(g, &hw)?.to_string(),
        ])?;
    }
    csv.flush()?;
    manifest::write(&dir, "lower-bound", &args, 0, &[path])
}
