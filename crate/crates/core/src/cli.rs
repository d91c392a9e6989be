// SPDX-License-Identifier: Apache-2.0

//! `srgkit` command line.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::graphio::{self, make_splits, parse_explanation, to_dot, Assignment, DotOptions, SplitEntry, SplitStrategy, SplitTarget};
use crate::ingest::{self, hex_decode, hex_encode, Address, ContractRecord, RpcClient};
use crate::label::Label;
use crate::perturb::{self, AttackConfig, AttackKind};
use crate::srg::{aggregate_stats, build_srg, GraphStats, Srg};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INVARIANT: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "srgkit", version, about = "Build, inspect and perturb Semantic Relation Graphs of EVM bytecode")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (0 = one per logical core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one SRG JSON per contract.
    Build(BuildArgs),
    /// Per-class graph statistics.
    Stats(StatsArgs),
    /// Apply a GIA, LFA or edge-flip attack.
    Perturb(PerturbArgs),
    /// Render a graph as Graphviz DOT.
    ExportDot(ExportDotArgs),
    /// Download bytecode from a JSON-RPC node.
    Fetch(FetchArgs),
    /// Write a dataset split plan for a manifest.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Bytecode hex files or directories of them.
    pub inputs: Vec<PathBuf>,
    /// JSONL dataset manifest (or .csv, converted on the fly).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Fetch manifest records given by address from the RPC node.
    #[arg(long)]
    pub online: bool,
    #[arg(long, env = "SEASONED_RPC_URL")]
    pub rpc_url: Option<String>,
    /// Also write learning-ready encodings under `<out>/encoded/`.
    #[arg(long)]
    pub encoded: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// SRG JSON files or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// SRG JSON files or directories of them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// gia:K:M, lfa:K or edgeflip:K.
    #[arg(long)]
    pub attack: String,
    /// Split plan; LFA flips only its train ids (all graphs otherwise).
    #[arg(long)]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportDotArgs {
    pub graph: PathBuf,
    /// Explanation JSON whose factual edges are highlighted.
    #[arg(long)]
    pub highlight: Option<PathBuf>,
    /// Perturbation provenance file listing injected nodes.
    #[arg(long)]
    pub injected: Option<PathBuf>,
    /// Draw edges from dependency to dependent.
    #[arg(long)]
    pub reversed: bool,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Contract addresses to fetch code for.
    #[arg(long = "address")]
    pub addresses: Vec<String>,
    /// Creation transaction hashes whose input is saved.
    #[arg(long = "tx")]
    pub transactions: Vec<String>,
    #[arg(long, env = "SEASONED_RPC_URL")]
    pub rpc_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// kfold:K, rand:P or old:P.
    #[arg(long)]
    pub strategy: String,
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn run() -> u8 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp(None).try_init();
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build().map_err(usage)?;
    pool.install(|| match &cli.command {
        Command::Build(a) => cmd_build(cli, a),
        Command::Stats(a) => cmd_stats(a),
        Command::Perturb(a) => cmd_perturb(cli, a),
        Command::ExportDot(a) => cmd_export_dot(cli, a),
        Command::Fetch(a) => cmd_fetch(cli, a),
        Command::Split(a) => cmd_split(cli, a),
    })
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Keeps `[A-Za-z0-9._-]`, replaces everything else with `_`.
pub fn file_stem_for(id: &str) -> String {
    let s: String = id.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

/// Expands directories (one level, sorted) and keeps files as given.
fn expand_inputs(inputs: &[PathBuf], ext: Option<&str>) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && ext.is_none_or(|x| p.extension().is_some_and(|e| e == x)))
                .collect();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

enum BuildInput {
    File(PathBuf),
    Record(Box<Result<ContractRecord, String>>),
}

fn build_one(input: BuildInput) -> Result<ContractRecord, String> {
    match input {
        BuildInput::File(path) => {
            let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let bytecode = hex_decode(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if bytecode.is_empty() {
                return Err(format!("{}: empty bytecode", path.display()));
            }
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(ContractRecord { id, bytecode, label: Label::Unlabeled, deployed_at: None, source: "file".into() })
        }
        BuildInput::Record(r) => *r,
    }
}

fn cmd_build(cli: &Cli, a: &BuildArgs) -> CliResult {
    let out = out_dir(cli, "srg");
    let mut inputs: Vec<BuildInput> = Vec::new();
    if let Some(m) = &a.manifest {
        let manifest = if m.extension().is_some_and(|e| e == "csv") {
            ingest::DatasetManifest::from_csv(m)
        } else {
            ingest::load_manifest(m)
        }
        .map_err(usage)?;
        if manifest.is_empty() {
            return Err(usage(format!("{}: manifest has no records", m.display())));
        }
        let client = match (a.online, &a.rpc_url) {
            (true, Some(url)) => Some(RpcClient::new(url.clone())),
            (true, None) => return Err(usage("--online needs --rpc-url or SEASONED_RPC_URL")),
            (false, _) => None,
        };
        inputs.extend(
            manifest
                .load_records(client.as_ref())
                .into_iter()
                .map(|r| BuildInput::Record(Box::new(r.map_err(|e| e.to_string())))),
        );
    }
    inputs.extend(expand_inputs(&a.inputs, None)?.into_iter().map(BuildInput::File));
    if inputs.is_empty() {
        return Err(usage("no inputs: give bytecode files or --manifest"));
    }

    let results: Vec<Result<(String, u64, u64), CliError>> = inputs
        .into_par_iter()
        .map(|input| {
            let rec = build_one(input).map_err(CliError::Usage)?;
            let g = build_srg(&rec);
            g.validate().map_err(|e| CliError::Invariant(format!("{}: {e}", rec.id)))?;
            let stem = file_stem_for(&rec.id);
            write_atomic(&out.join(format!("{stem}.json")), &graphio::to_json(&g)).map_err(usage)?;
            if a.encoded {
                let enc = graphio::encode(&g, graphio::vocab()).map_err(|e| CliError::Invariant(format!("{}: {e}", rec.id)))?;
                let bytes = serde_json::to_vec(&enc).expect("serializable");
                write_atomic(&out.join("encoded").join(format!("{stem}.json")), &bytes).map_err(usage)?;
            }
            info!("{}: {} nodes, {} edges", rec.id, g.node_count(), g.edge_count());
            Ok((rec.id, g.diagnostics.unresolved_jumps, g.diagnostics.stack_underflows))
        })
        .collect();

    let (mut ok, mut failed, mut unresolved, mut underflows) = (0usize, 0usize, 0u64, 0u64);
    let mut seen = BTreeSet::new();
    let mut invariant = None;
    for r in results {
        match r {
            Ok((id, u, s)) => {
                if !seen.insert(id.clone()) {
                    warn!("{id}: duplicate id, output overwritten");
                }
                ok += 1;
                unresolved += u;
                underflows += s;
            }
            Err(e) => {
                error!("{e}");
                failed += 1;
                if matches!(e, CliError::Invariant(_)) {
                    invariant = Some(e);
                }
            }
        }
    }
    println!("{ok} ok, {failed} failed (unresolved jumps: {unresolved}, stack underflows: {underflows})");
    if let Some(e) = invariant {
        return Err(e);
    }
    if ok == 0 {
        return Err(usage("no graph was built"));
    }
    Ok(())
}

fn read_graph(path: &Path) -> Result<Srg, String> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    graphio::from_json(&bytes).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads every graph in parallel; unreadable ones are logged and skipped.
fn read_graphs(inputs: &[PathBuf]) -> CliResult<Vec<(PathBuf, Srg)>> {
    let files = expand_inputs(inputs, Some("json"))?;
    let read: Vec<_> = files.into_par_iter().map(|p| read_graph(&p).map(|g| (p, g))).collect();
    let mut out = Vec::new();
    for r in read {
        match r {
            Ok(x) => out.push(x),
            Err(e) => warn!("skipping {e}"),
        }
    }
    if out.is_empty() {
        return Err(usage("no valid graph files"));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ClassStats {
    class: String,
    graphs: usize,
    avg_nodes: f64,
    avg_edges: f64,
    top_opcodes: Vec<(String, f64)>,
    #[serde(flatten)]
    stats: GraphStats,
}

fn class_columns(graphs: &[Srg]) -> Vec<ClassStats> {
    let mut by_class: BTreeMap<Label, Vec<&Srg>> = BTreeMap::new();
    for g in graphs {
        by_class.entry(g.label).or_default().push(g);
    }
    let labeled = by_class.keys().any(|l| *l != Label::Unlabeled);
    let groups: Vec<(String, Vec<&Srg>)> = if labeled {
        by_class.into_iter().map(|(l, v)| (l.to_string(), v)).collect()
    } else {
        vec![("all".to_string(), graphs.iter().collect())]
    };
    groups
        .into_iter()
        .filter_map(|(class, gs)| {
            let stats = aggregate_stats(&gs).ok()?;
            Some(ClassStats {
                class,
                graphs: stats.graphs,
                avg_nodes: stats.nodes as f64 / stats.graphs as f64,
                avg_edges: stats.edges as f64 / stats.graphs as f64,
                top_opcodes: stats.top_opcodes(5),
                stats,
            })
        })
        .collect()
}

fn render_table(cols: &[ClassStats]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = vec![
        ("graphs".into(), cols.iter().map(|c| c.graphs.to_string()).collect()),
        ("avg nodes".into(), cols.iter().map(|c| format!("{:.2}", c.avg_nodes)).collect()),
        ("avg edges".into(), cols.iter().map(|c| format!("{:.2}", c.avg_edges)).collect()),
    ];
    for i in 0..5 {
        rows.push((
            format!("top opcode {}", i + 1),
            cols.iter()
                .map(|c| c.top_opcodes.get(i).map_or("-".into(), |(op, r)| format!("{op} {:.2}%", r * 100.0)))
                .collect(),
        ));
    }
    for (name, f) in [("control", 0), ("data", 1), ("effect", 2)] {
        rows.push((
            format!("{name} ratio"),
            cols.iter()
                .map(|c| {
                    let r = &c.stats.relation_ratios;
                    format!("{:.2}%", [r.control, r.data, r.effect][f] * 100.0)
                })
                .collect(),
        ));
    }
    rows.push(("avg path length".into(), cols.iter().map(|c| format!("{:.2}", c.stats.avg_path_length)).collect()));
    let mut s = String::new();
    write!(s, "{:<18}", "").unwrap();
    for c in cols {
        write!(s, "{:>22}", c.class).unwrap();
    }
    s.push('\n');
    for (name, cells) in rows {
        write!(s, "{name:<18}").unwrap();
        for c in cells {
            write!(s, "{c:>22}").unwrap();
        }
        s.push('\n');
    }
    s
}

fn cmd_stats(a: &StatsArgs) -> CliResult {
    let graphs: Vec<Srg> = read_graphs(&a.inputs)?.into_iter().map(|(_, g)| g).collect();
    let cols = class_columns(&graphs);
    if cols.is_empty() {
        return Err(usage("all graphs are empty"));
    }
    if a.json {
        print!("{}", String::from_utf8(json_bytes(&cols)).expect("json is utf-8"));
    } else {
        print!("{}", render_table(&cols));
    }
    Ok(())
}

fn train_ids(plan_path: &Path) -> CliResult<BTreeSet<String>> {
    let bytes = fs::read(plan_path).map_err(|e| usage(format!("{}: {e}", plan_path.display())))?;
    let plan: graphio::SplitPlan = serde_json::from_slice(&bytes).map_err(|e| usage(format!("{}: {e}", plan_path.display())))?;
    if matches!(plan.strategy, SplitStrategy::KFold { .. }) {
        return Err(usage("label flipping needs a train/val/test plan, not k-fold"));
    }
    Ok(plan.ids_in(Assignment::Split(SplitTarget::Train)).into_iter().map(String::from).collect())
}

#[derive(Serialize)]
struct PerturbRecord {
    file: String,
    contract_id: String,
    graph_seed: u64,
    original_nodes: usize,
    original_edges: usize,
    nodes: usize,
    edges: usize,
    injected_nodes: Vec<usize>,
}

fn cmd_perturb(cli: &Cli, a: &PerturbArgs) -> CliResult {
    let kind: AttackKind = a.attack.parse().map_err(usage)?;
    let config = AttackConfig { kind, seed: cli.seed };
    let out = out_dir(cli, "perturbed");
    let graphs = read_graphs(&a.inputs)?;

    if let AttackKind::Lfa { k_pct } = kind {
        let train: Option<BTreeSet<String>> = a.split.as_deref().map(train_ids).transpose()?;
        let pool: Vec<(String, Label)> = graphs
            .iter()
            .filter(|(_, g)| train.as_ref().is_none_or(|t| t.contains(&g.contract_id)))
            .map(|(_, g)| (g.contract_id.clone(), g.label))
            .collect();
        let flip = perturb::flip_labels(&pool, k_pct, cli.seed);
        let mut labels: BTreeMap<String, Label> = graphs.iter().map(|(_, g)| (g.contract_id.clone(), g.label)).collect();
        labels.extend(flip.labels.iter().map(|(k, v)| (k.clone(), *v)));
        let doc = json!({
            "attack": kind.to_string(),
            "config": config,
            "train_size": pool.len(),
            "flipped": flip.flipped,
            "labels": labels,
        });
        write_atomic(&out.join("labels.json"), &json_bytes(&doc)).map_err(usage)?;
        println!("{} of {} training labels flipped", flip.flipped.len(), pool.len());
        return Ok(());
    }

    let in_place: BTreeSet<PathBuf> = graphs.iter().filter_map(|(p, _)| p.canonicalize().ok()).collect();
    let records: Vec<CliResult<PerturbRecord>> = graphs
        .par_iter()
        .map(|(path, g)| {
            let seed = perturb::derive_seed(cli.seed, &g.contract_id);
            let p = match kind {
                AttackKind::Gia { k_pct, m_edges } => perturb::inject_nodes(g, k_pct, m_edges, seed),
                AttackKind::EdgeFlip { k_pct } => perturb::flip_edges(g, k_pct, seed),
                AttackKind::Lfa { .. } => unreachable!("handled above"),
            };
            p.validate().map_err(|e| CliError::Invariant(format!("{}: {e}", g.contract_id)))?;
            let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let dest = out.join(&name);
            if dest.canonicalize().is_ok_and(|d| in_place.contains(&d)) {
                return Err(usage(format!("{}: refusing to overwrite an input graph", dest.display())));
            }
            write_atomic(&dest, &graphio::to_json(&p)).map_err(usage)?;
            Ok(PerturbRecord {
                file: name,
                contract_id: g.contract_id.clone(),
                graph_seed: seed,
                original_nodes: g.node_count(),
                original_edges: g.edge_count(),
                nodes: p.node_count(),
                edges: p.edge_count(),
                injected_nodes: perturb::injected_ids(g.node_count(), &p).into_iter().collect(),
            })
        })
        .collect();
    let records = records.into_iter().collect::<CliResult<Vec<_>>>()?;
    let doc = json!({ "attack": kind.to_string(), "config": config, "graphs": records });
    write_atomic(&out.join("provenance.json"), &json_bytes(&doc)).map_err(usage)?;
    println!("{} graphs perturbed with {}", records.len(), kind);
    Ok(())
}

fn injected_from_provenance(path: &Path, contract_id: &str) -> CliResult<BTreeSet<usize>> {
    let bytes = fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let doc: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let graphs = doc["graphs"].as_array().ok_or_else(|| usage(format!("{}: no graphs list", path.display())))?;
    let entry = graphs
        .iter()
        .find(|g| g["contract_id"] == contract_id)
        .ok_or_else(|| usage(format!("{}: no entry for {contract_id}", path.display())))?;
    entry["injected_nodes"]
        .as_array()
        .map(|ids| ids.iter().filter_map(|v| v.as_u64().map(|x| x as usize)).collect())
        .ok_or_else(|| usage(format!("{}: malformed injected_nodes", path.display())))
}

fn cmd_export_dot(cli: &Cli, a: &ExportDotArgs) -> CliResult {
    let g = read_graph(&a.graph).map_err(CliError::Usage)?;
    let mut opts = DotOptions { reversed: a.reversed, ..Default::default() };
    if let Some(h) = &a.highlight {
        let bytes = fs::read(h).map_err(|e| usage(format!("{}: {e}", h.display())))?;
        opts.highlight = parse_explanation(&bytes).and_then(|x| x.highlight_for(&g)).map_err(usage)?;
    }
    if let Some(p) = &a.injected {
        opts.injected = injected_from_provenance(p, &g.contract_id)?;
        if let Some(bad) = opts.injected.iter().find(|&&i| i >= g.node_count()) {
            return Err(usage(format!("injected node {bad} not in graph")));
        }
    }
    let dot = to_dot(&g, &opts);
    match &cli.out {
        Some(dir) => {
            let stem = a.graph.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into());
            write_atomic(&dir.join(format!("{stem}.dot")), dot.as_bytes()).map_err(usage)?;
        }
        None => print!("{dot}"),
    }
    Ok(())
}

fn parse_hash(s: &str) -> CliResult<[u8; 32]> {
    let b = hex_decode(s).map_err(|e| usage(format!("{s}: {e}")))?;
    b.try_into().map_err(|_| usage(format!("{s}: expected 32 bytes")))
}

fn cmd_fetch(cli: &Cli, a: &FetchArgs) -> CliResult {
    let url = a.rpc_url.as_deref().ok_or_else(|| usage("fetch needs --rpc-url or SEASONED_RPC_URL"))?;
    if a.addresses.is_empty() && a.transactions.is_empty() {
        return Err(usage("nothing to fetch: give --address or --tx"));
    }
    let out = out_dir(cli, "bytecode");
    let client = RpcClient::new(url);
    type Job<'a> = Box<dyn Fn() -> Result<Vec<u8>, String> + Sync + 'a>;
    let mut jobs: Vec<(String, Job)> = Vec::new();
    for s in &a.addresses {
        let addr: Address = s.parse().map_err(usage)?;
        let client = &client;
        jobs.push((addr.to_string(), Box::new(move || client.get_code(&addr).map_err(|e| e.to_string()))));
    }
    for s in &a.transactions {
        let hash = parse_hash(s)?;
        let client = &client;
        jobs.push((
            format!("0x{}", hex::encode(hash)),
            Box::new(move || {
                let tx = client.get_transaction(&hash).map_err(|e| e.to_string())?;
                if !ingest::detect_creation(&tx) {
                    return Err("not a contract-creation transaction".into());
                }
                Ok(tx.input)
            }),
        ));
    }
    let results: Vec<(String, Result<(), String>)> = jobs
        .par_iter()
        .map(|(name, job)| {
            let r = job().and_then(|code| {
                let mut text = hex_encode(&code);
                text.push('\n');
                write_atomic(&out.join(format!("{}.hex", file_stem_for(name))), text.as_bytes()).map_err(|e| e.to_string())
            });
            (name.clone(), r)
        })
        .collect();
    let mut ok = 0;
    let mut failed = 0;
    for (name, r) in results {
        match r {
            Ok(()) => ok += 1,
            Err(e) => {
                error!("{name}: {e}");
                failed += 1;
            }
        }
    }
    println!("{ok} ok, {failed} failed");
    if ok == 0 {
        return Err(usage("nothing fetched"));
    }
    Ok(())
}

fn cmd_split(cli: &Cli, a: &SplitArgs) -> CliResult {
    let strategy: SplitStrategy = a.strategy.parse().map_err(usage)?;
    let manifest = if a.manifest.extension().is_some_and(|e| e == "csv") {
        ingest::DatasetManifest::from_csv(&a.manifest)
    } else {
        ingest::load_manifest(&a.manifest)
    }
    .map_err(usage)?;
    let entries: Vec<SplitEntry> = manifest.records.iter().map(SplitEntry::from).collect();
    let plan = make_splits(&entries, strategy, cli.seed).map_err(usage)?;
    let dest = out_dir(cli, ".").join("split.json");
    write_atomic(&dest, &json_bytes(&plan)).map_err(usage)?;
    println!("{} records assigned ({strategy})", plan.assignments.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems() {
        assert_eq!(file_stem_for("0xAbC"), "0xAbC");
        assert_eq!(file_stem_for("a/b c"), "a_b_c");
        assert_eq!(file_stem_for(""), "_");
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        assert_eq!(run_from(["srgkit", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run_from(["srgkit", "--help"]), EXIT_OK);
    }

    #[test]
    fn atomic_write_replaces() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("x/y.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(d.path().join("x")).unwrap().count(), 1);
    }

    #[test]
    fn table_has_class_columns() {
        let mk = |id: &str, label, code: &[u8]| crate::srg::build_srg_from_code(id, label, code);
        let gs = vec![
            mk("a", Label::Aec, &[0x60, 0x01, 0x60, 0x02, 0x01, 0x00]),
            mk("b", Label::Benign, &[0x60, 0x01, 0x56]),
        ];
        let t = render_table(&class_columns(&gs));
        let header = t.lines().next().unwrap();
        assert!(header.contains("benign") && header.contains("aec"));
        let one = render_table(&class_columns(&[mk("u", Label::Unlabeled, &[0x00])]));
        assert!(one.lines().next().unwrap().trim() == "all");
    }
}
