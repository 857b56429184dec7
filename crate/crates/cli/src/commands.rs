use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use netobserve_core::classify::{
    equivalence_classes, necessary_counts, place_agents, structural_counts_report, CountsRow, StructuralAnalysis,
};
use netobserve_core::datasets::Preprocess;
use netobserve_core::estimator::{gain_search, simulate as run_filter, DistributedSystem, GainSearchOptions, SimulationConfig};
use netobserve_core::ingest::{parse_edge_list, parse_gml, LabeledGraph};
use netobserve_core::netdesign::{design_canonical, to_dot, verify_topology, w_structure, AgentNetwork};
use netobserve_core::numeric::{distributed_rank, seeded_rng};
use netobserve_core::{check_distributed, FieldKind, Gf, ObservationPlan};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::{AnalyzeArgs, DesignArgs, FieldArg, Format, GlobalArgs, InputArgs, ReadArgs, SimulateArgs, VerifyArgs};

/// Networks above this many stacked states skip the informational numeric
/// rank in `design`.
const NUMERIC_DESIGN_LIMIT: usize = 400;

/// Everything needed to re-run a command; written into every manifest.
#[derive(Debug, Serialize)]
struct RunConfig<'a, A: Serialize> {
    command: &'static str,
    seed: u64,
    /// Absent means the command's default.
    field: Option<FieldArg>,
    out: Option<&'a Path>,
    args: &'a A,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, A: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: RunConfig<'a, A>,
    outputs: Vec<String>,
}

/// Collects output files; without an output directory only the primary
/// artifact is printed.
struct Outputs<'a> {
    dir: Option<&'a Path>,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(global: &'a GlobalArgs) -> Result<Self> {
        if let Some(dir) = &global.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Self {
            dir: global.out.as_deref(),
            written: Vec::new(),
        })
    }

    fn emit(&mut self, name: &str, contents: &str, primary: bool) -> Result<()> {
        match self.dir {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
                self.written.push(name.to_string());
            }
            None if primary => print!("{contents}"),
            None => {}
        }
        Ok(())
    }

    fn finish<A: Serialize>(mut self, command: &'static str, global: &GlobalArgs, args: &A) -> Result<()> {
        if self.dir.is_none() {
            return Ok(());
        }
        let manifest = Manifest {
            tool: "netobserve",
            version: env!("CARGO_PKG_VERSION"),
            config: RunConfig {
                command,
                seed: global.seed,
                field: global.field,
                out: self.dir,
                args,
            },
            outputs: self.written.clone(),
        };
        let text = to_json(&manifest)?;
        self.emit("manifest.json", &text, false)
    }
}

fn field_or(global: &GlobalArgs, default: FieldArg) -> FieldArg {
    global.field.unwrap_or(default)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).context("serializing report")?;
    s.push('\n');
    Ok(s)
}

fn preprocess(read: &ReadArgs) -> Preprocess {
    if read.largest {
        Preprocess::Largest
    } else if read.drop_isolates {
        Preprocess::DropIsolates
    } else {
        Preprocess::None
    }
}

fn load_graph(path: &Path, read: &ReadArgs) -> Result<LabeledGraph> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let format = read.format.unwrap_or_else(|| {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gml")) {
            Format::Gml
        } else {
            Format::Edgelist
        }
    });
    let parsed = match format {
        Format::Gml => parse_gml(&bytes).map(|g| if read.undirected { g.symmetrized() } else { g }),
        Format::Edgelist => parse_edge_list(&bytes, !read.undirected),
    };
    let mut g = parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    g.source.file = Some(path.display().to_string());
    let g = preprocess(read).apply(&g);
    if g.node_count() == 0 {
        return Err(CliError::Input(format!("{}: no nodes left after preprocessing", path.display())));
    }
    Ok(g)
}

fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".to_string())
}

fn analysis_report(name: &str, g: &LabeledGraph, read: &ReadArgs) -> (CountsRow, Value) {
    let analysis = StructuralAnalysis::new(g.graph.clone());
    let row = structural_counts_report(name, &analysis);
    let sccs = &analysis.sccs;
    let components: Vec<Value> = (0..sccs.decomposition.len())
        .map(|k| {
            json!({
                "id": k,
                "members": sccs.members(k),
                "parent": sccs.labels[k].is_parent,
                "matched": sccs.labels[k].is_matched,
            })
        })
        .collect();
    let report = json!({
        "name": name,
        "counts": row,
        "preprocessing": preprocess(read),
        "undirected": read.undirected,
        "source": g.source,
        "labels": g.labels,
        "matching": analysis.matching.pairs().collect::<Vec<_>>(),
        "unmatched": analysis.matching.unmatched_plus(),
        "contractions": analysis.contractions.sets,
        "components": components,
    });
    (row, report)
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.is_file())
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Input("no input files".into()));
    }
    Ok(files)
}

pub fn analyze(global: &GlobalArgs, args: &AnalyzeArgs) -> Result<()> {
    let files = collect_inputs(&args.inputs)?;
    let batch = files.len() > 1 || args.inputs.iter().any(|p| p.is_dir());
    let results: Vec<Result<(CountsRow, Value)>> = files
        .par_iter()
        .map(|path| load_graph(path, &args.read).map(|g| analysis_report(&stem(path), &g, &args.read)))
        .collect();
    let mut out = Outputs::new(global)?;
    let mut csv = format!("{}\n", CountsRow::CSV_HEADER);
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok((row, report)) => {
                csv.push_str(&row.csv_row());
                csv.push('\n');
                out.emit(&format!("{}.analysis.json", row.name), &to_json(&report)?, !batch)?;
            }
            Err(e) => {
                if batch {
                    log::error!("{e}");
                }
                failures.push(e);
            }
        }
    }
    if batch {
        out.emit("counts.csv", &csv, true)?;
    }
    out.finish("analyze", global, args)?;
    match failures.len() {
        0 => Ok(()),
        1 => Err(failures.remove(0)),
        k => Err(CliError::Input(format!("{k} of {} inputs failed", files.len()))),
    }
}

/// Plan JSON: the plan itself plus a label per placement, the counts and the
/// indices of repair placements. Extra keys are ignored when read back.
fn plan_json(plan: &ObservationPlan, labels: &[String]) -> Result<Value> {
    let mut v = serde_json::to_value(plan).context("serializing plan")?;
    if let Some(items) = v["placements"].as_array_mut() {
        for (item, p) in items.iter_mut().zip(&plan.placements) {
            item["label"] = json!(labels[p.state]);
        }
    }
    v["n_alpha"] = json!(plan.n_alpha());
    v["n_beta"] = json!(plan.n_beta());
    v["repairs"] = json!(plan
        .placements
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.repair.then_some(i))
        .collect::<Vec<_>>());
    Ok(v)
}

pub fn classify(global: &GlobalArgs, args: &InputArgs) -> Result<()> {
    let g = load_graph(&args.input, &args.read)?;
    let analysis = StructuralAnalysis::new(g.graph.clone());
    let plan = place_agents(&analysis).context("placing measurements")?;
    let report = json!({
        "name": stem(&args.input),
        "counts": necessary_counts(&analysis.contractions, &analysis.sccs),
        "plan": plan_json(&plan, &g.labels)?,
        "equivalence": equivalence_classes(&analysis),
    });
    let mut out = Outputs::new(global)?;
    out.emit("classify.json", &to_json(&report)?, true)?;
    out.finish("classify", global, args)
}

/// Network file: the network itself plus the consensus-weight support.
#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    #[serde(flatten)]
    network: AgentNetwork,
    #[serde(default)]
    w_support: Vec<(usize, usize)>,
}

fn network_file(net: &AgentNetwork) -> NetworkFile {
    NetworkFile {
        network: net.clone(),
        w_support: w_structure(net).support().collect(),
    }
}

fn numeric_rank(field: FieldArg, net: &AgentNetwork, a: &netobserve_core::StructuredMatrix, seed: u64) -> usize {
    let mut rng = seeded_rng(seed);
    match FieldKind::from(field) {
        FieldKind::Gf => distributed_rank::<Gf, _>(net, a, &mut rng),
        FieldKind::Real => distributed_rank::<f64, _>(net, a, &mut rng),
    }
}

fn describe_violations(report: &netobserve_core::netdesign::TopologyReport) -> String {
    let parts: Vec<String> = report
        .violations
        .iter()
        .map(|v| serde_json::to_string(v).unwrap_or_default())
        .collect();
    format!("agents {:?} violate {}", report.violating_agents(), parts.join(", "))
}

pub fn design(global: &GlobalArgs, args: &DesignArgs) -> Result<()> {
    let g = load_graph(&args.input.input, &args.input.read)?;
    let analysis = StructuralAnalysis::new(g.graph.clone());
    let plan = place_agents(&analysis).context("placing measurements")?;
    let agents = args.agents.map_or(plan.len(), |a| a as usize);
    let net = design_canonical(&plan, agents).map_err(|e| CliError::Input(e.to_string()))?;
    let a = analysis.structure();
    let topology = verify_topology(&net, &analysis);
    let distributed = check_distributed(&net, &a).context("distributed check")?;
    let n = analysis.state_count();
    let field = field_or(global, FieldArg::Gf);
    let numeric = (n * agents <= NUMERIC_DESIGN_LIMIT).then(|| numeric_rank(field, &net, &a, global.seed));
    let report = json!({
        "name": stem(&args.input.input),
        "agents": agents,
        "n_alpha": plan.n_alpha(),
        "n_beta": plan.n_beta(),
        "repairs": plan.repairs(),
        "topology": topology,
        "distributed": distributed,
        "numeric_rank": numeric,
        "required_rank": n * agents,
    });
    let mut out = Outputs::new(global)?;
    out.emit("design.json", &to_json(&report)?, true)?;
    out.emit("plan.json", &to_json(&plan_json(&plan, &g.labels)?)?, false)?;
    out.emit("network.json", &to_json(&network_file(&net))?, false)?;
    out.emit("network.dot", &to_dot(&net, &g.labels), false)?;
    out.finish("design", global, args)?;
    if !topology.is_valid() {
        return Err(CliError::DesignFailed(describe_violations(&topology)));
    }
    if !distributed.overall {
        return Err(CliError::DesignFailed("networked pair is not structurally observable".into()));
    }
    Ok(())
}

fn load_network(path: &Path, state_count: usize) -> Result<AgentNetwork> {
    let file: NetworkFile = load_json(path)?;
    let net = file
        .network
        .validated()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if net.state_count() != state_count {
        return Err(CliError::Input(format!(
            "{}: network covers {} states, graph has {}",
            path.display(),
            net.state_count(),
            state_count
        )));
    }
    Ok(net)
}

pub fn verify(global: &GlobalArgs, args: &VerifyArgs) -> Result<()> {
    let g = load_graph(&args.input.input, &args.input.read)?;
    let analysis = StructuralAnalysis::new(g.graph.clone());
    let n = analysis.state_count();
    let net = load_network(&args.network, n)?;
    let measured: BTreeSet<usize> = (0..net.agent_count())
        .flat_map(|i| net.observations(i).iter().copied())
        .collect();
    let unmeasured: Vec<usize> = match &args.plan {
        Some(p) => {
            let plan: ObservationPlan = load_json(p)?;
            if plan.state_count != n {
                return Err(CliError::Input(format!("{}: plan covers {} states, graph has {n}", p.display(), plan.state_count)));
            }
            plan.observed_states().difference(&measured).copied().collect()
        }
        None => Vec::new(),
    };
    let a = analysis.structure();
    let topology = verify_topology(&net, &analysis);
    let distributed = check_distributed(&net, &a).context("distributed check")?;
    let structural_ok = topology.is_valid() && distributed.overall && unmeasured.is_empty();
    let numeric = args.numeric.then(|| {
        let field = field_or(global, FieldArg::Gf);
        let full = n * net.agent_count();
        let ranks: Vec<usize> = (0..args.seeds)
            .map(|k| numeric_rank(field, &net, &a, global.seed + k))
            .collect();
        let full_count = ranks.iter().filter(|&&r| r == full).count();
        let agree = ranks.iter().filter(|&&r| (r == full) == structural_ok).count();
        json!({
            "field": field,
            "required_rank": full,
            "ranks": ranks,
            "full_rank_seeds": full_count,
            "agreeing_seeds": agree,
        })
    });
    let report = json!({
        "valid": structural_ok,
        "topology": topology,
        "distributed": distributed,
        "unmeasured_plan_states": unmeasured,
        "numeric": numeric,
    });
    let mut out = Outputs::new(global)?;
    out.emit("verify.json", &to_json(&report)?, true)?;
    out.finish("verify", global, args)?;
    if structural_ok {
        return Ok(());
    }
    let mut reasons = Vec::new();
    if !topology.is_valid() {
        reasons.push(describe_violations(&topology));
    }
    if !distributed.overall {
        reasons.push("networked pair is not structurally observable".into());
    }
    if !unmeasured.is_empty() {
        reasons.push(format!("planned states {unmeasured:?} are not measured"));
    }
    Err(CliError::VerifyFailed(reasons.join("; ")))
}

pub fn simulate(global: &GlobalArgs, args: &SimulateArgs) -> Result<()> {
    if global.field == Some(FieldArg::Gf) {
        return Err(CliError::Input("the estimator runs over the reals; use --field real or omit it".into()));
    }
    let g = load_graph(&args.input.input, &args.input.read)?;
    let analysis = StructuralAnalysis::new(g.graph.clone());
    let net = match &args.network {
        Some(p) => load_network(p, analysis.state_count())?,
        None => {
            let plan = place_agents(&analysis).context("placing measurements")?;
            let agents = args.agents.map_or(plan.len(), |a| a as usize);
            design_canonical(&plan, agents).map_err(|e| CliError::Input(e.to_string()))?
        }
    };
    let topology = verify_topology(&net, &analysis);
    if !topology.is_valid() {
        return Err(CliError::DesignFailed(describe_violations(&topology)));
    }
    let mut rng = seeded_rng(global.seed);
    let mut sys = DistributedSystem::<f64>::realize(net, &analysis.structure(), &mut rng).context("realizing system")?;
    sys.set_spectral_radius(args.rho_a);
    let options = GainSearchOptions {
        budget: args.budget,
        seed: global.seed,
        ..Default::default()
    };
    let result = gain_search(&sys, &options).map_err(|e| CliError::DesignFailed(e.to_string()))?;
    if !result.stable() {
        return Err(CliError::DesignFailed(format!(
            "gain search found no stable gains (best spectral radius {:.4} after {} evaluations)",
            result.rho, result.evaluations
        )));
    }
    let config = SimulationConfig {
        horizon: args.horizon as usize,
        process_std: args.process_std,
        measurement_std: args.measurement_std,
        seed: global.seed,
        ..Default::default()
    };
    let trace = run_filter(&sys, &result.gains, &config).context("running the filter")?;
    let summary = json!({
        "rho": result.rho,
        "evaluations": result.evaluations,
        "rho_a": args.rho_a,
        "agents": sys.agent_count(),
        "steady_state_mse": trace.steady_state(0.2),
    });
    let mut out = Outputs::new(global)?;
    out.emit("trace.csv", &trace.to_csv(), true)?;
    out.emit("simulate.json", &to_json(&summary)?, false)?;
    out.finish("simulate", global, args)
}
