//! Library side of the command line front end: config parsing, the Monte
//! Carlo sweep runners, file selection/aggregation, and deterministic
//! per-cell seeding.

use std::collections::{BTreeMap, BTreeSet};
use std::cell::RefCell;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use graph_evidence::er_ie::{ie_selection_lower_bound, log_bayes_factor_ie_er};
use graph_evidence::io::{load_graph, load_membership, GraphFormat};
use graph_evidence::sample::{random_probability_matrix, sample_er, sample_ie, sample_sbm_rank1};
use graph_evidence::selection::select_model;
use graph_evidence::{
    BlockAssignment, EdgeSummary, Error, MembershipSpec, ModelOutcome, ModelSpec, Result,
    Selection,
};

/// Writes a float with 17 significant digits so CSV round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// splitmix64 step; the standard 64-bit finalizer-based generator.
fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    *state = z ^ (z >> 31);
}

/// Derives a replicate seed from the base seed and the cell coordinates.
/// Each coordinate is folded through splitmix64, so every (cell, replicate)
/// gets an independent stream regardless of execution order.
pub fn cell_seed(base: u64, coords: &[u64]) -> u64 {
    let mut state = base;
    splitmix64(&mut state);
    for &c in coords {
        state ^= c;
        splitmix64(&mut state);
    }
    state
}

/// Flat `key = value` config with `#` comments. Every key must be consumed
/// by the experiment that reads the file; leftovers are an error, so typos
/// fail loudly instead of silently running defaults.
pub struct Config {
    map: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected `key = value`, found {line:?}"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: "empty key or value".into(),
                });
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(Self {
            map,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.map.get(key).map(String::as_str);
        if v.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Domain(format!("config key {key} has invalid value {v:?}"))),
        }
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key, default)
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key, default)
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        self.get(key, default)
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    fn get_list<T>(&self, key: &str, default: &[T]) -> Result<Vec<T>>
    where
        T: std::str::FromStr + Clone,
    {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| {
                        Error::Domain(format!("config key {key} has invalid entry {item:?}"))
                    })
                })
                .collect(),
        }
    }

    pub fn get_list_usize(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        self.get_list(key, default)
    }

    pub fn get_list_f64(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        self.get_list(key, default)
    }

    /// An explicit `key = v1,v2,…` list wins over a min/max/step triple.
    pub fn grid(
        &self,
        list_key: &str,
        prefix: &str,
        min_d: f64,
        max_d: f64,
        step_d: f64,
    ) -> Result<Vec<f64>> {
        if self.map.contains_key(list_key) {
            let v = self.get_list_f64(list_key, &[])?;
            if v.is_empty() {
                return Err(Error::Domain(format!("config key {list_key} is empty")));
            }
            return Ok(v);
        }
        let min = self.get_f64(&format!("{prefix}_min"), min_d)?;
        let max = self.get_f64(&format!("{prefix}_max"), max_d)?;
        let step = self.get_f64(&format!("{prefix}_step"), step_d)?;
        if step.is_nan() || step <= 0.0 || max < min {
            return Err(Error::Domain(format!(
                "invalid grid for {prefix}: min {min}, max {max}, step {step}"
            )));
        }
        let count = ((max - min) / step + 0.5).floor() as usize + 1;
        Ok((0..count).map(|i| min + i as f64 * step).collect())
    }

    /// Errors when any config key was never consumed.
    pub fn ensure_all_used(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.map.keys().filter(|k| !used.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "unknown config keys: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

fn run_cells<C, F>(threads: Option<usize>, cells: Vec<C>, f: F) -> Result<Vec<String>>
where
    C: Send + Sync,
    F: Fn(&C) -> Result<String> + Sync + Send,
{
    let work = || cells.par_iter().map(&f).collect::<Result<Vec<String>>>();
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn winner_slot(sel: &Selection) -> usize {
    if sel.winner.model == "ER" {
        0
    } else if sel.winner.model.starts_with("SBM") {
        1
    } else {
        2
    }
}

const TAG_BAYES_FACTOR: u64 = 1;
const TAG_ER_SWEEP: u64 = 2;
const TAG_SBM_HEATMAP: u64 = 3;
const TAG_IE_HISTOGRAM: u64 = 4;

/// Fraction of ER(p) replicates on which the matched-prior Bayes factor
/// prefers the independent-edge model, per (n_v, p) cell.
pub fn run_bayes_factor_sweep(
    cfg: &Config,
    base_seed: u64,
    threads: Option<usize>,
    out: &Path,
) -> Result<()> {
    let n_vs = cfg.get_list_usize("n_v", &[50, 150, 250, 500])?;
    let ps = cfg.grid("p", "p", 0.30, 0.70, 0.01)?;
    let reps = cfg.get_usize("reps", 300)?;
    let loops = cfg.get_bool("loops", true)?;
    cfg.ensure_all_used()?;
    if reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }

    let mut cells = Vec::new();
    for &n_v in &n_vs {
        for (pi, &p) in ps.iter().enumerate() {
            cells.push((n_v, pi, p));
        }
    }
    let rows = run_cells(threads, cells, |&(n_v, pi, p)| {
        let mut positive = 0u64;
        for rep in 0..reps {
            let seed = cell_seed(
                base_seed,
                &[TAG_BAYES_FACTOR, n_v as u64, pi as u64, rep as u64],
            );
            let g = sample_er(n_v, p, loops, seed)?;
            let (n, s) = g.edge_count();
            let bf = log_bayes_factor_ie_er(EdgeSummary::new(n, s)?, 0.5)?;
            if bf > 0.0 {
                positive += 1;
            }
        }
        Ok(format!(
            "{},{},{},{}",
            n_v,
            fmt_f64(p),
            reps,
            fmt_f64(positive as f64 / reps as f64)
        ))
    })?;
    write_csv(out, "n_v,p,reps,fraction_ie", &rows)
}

/// Full three-way selection frequencies on ER(p) graphs per (n_v, p) cell.
pub fn run_er_sweep(
    cfg: &Config,
    base_seed: u64,
    threads: Option<usize>,
    out: &Path,
) -> Result<()> {
    let n_vs = cfg.get_list_usize("n_v", &[50, 150, 250, 500])?;
    let ps = cfg.grid("p", "p", 0.30, 0.70, 0.01)?;
    let reps = cfg.get_usize("reps", 1000)?;
    let loops = cfg.get_bool("loops", true)?;
    let k = cfg.get_usize("k", 2)?;
    let mode = cfg.get_str("sbm_membership", "fixed_balanced");
    cfg.ensure_all_used()?;
    if reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }

    let mut cells = Vec::new();
    for &n_v in &n_vs {
        for (pi, &p) in ps.iter().enumerate() {
            cells.push((n_v, pi, p));
        }
    }
    let rows = run_cells(threads, cells, |&(n_v, pi, p)| {
        let mut counts = [0u64; 3];
        let sbm = sbm_candidate_from_mode(&mode, n_v, k)?;
        let candidates = vec![ModelSpec::Er { prior: None }, sbm, ModelSpec::Ie { priors: None }];
        for rep in 0..reps {
            let seed = cell_seed(
                base_seed,
                &[TAG_ER_SWEEP, n_v as u64, pi as u64, rep as u64],
            );
            let g = sample_er(n_v, p, loops, seed)?;
            let sel = select_model(&g, &candidates)?;
            counts[winner_slot(&sel)] += 1;
        }
        let r = reps as f64;
        Ok(format!(
            "{},{},{},{},{},{}",
            n_v,
            fmt_f64(p),
            reps,
            fmt_f64(counts[0] as f64 / r),
            fmt_f64(counts[1] as f64 / r),
            fmt_f64(counts[2] as f64 / r)
        ))
    })?;
    write_csv(out, "n_v,p,reps,frac_er,frac_sbm,frac_ie", &rows)
}

fn sbm_candidate_from_mode(mode: &str, n_v: usize, k: usize) -> Result<ModelSpec> {
    let membership = match mode {
        "fixed_balanced" => MembershipSpec::Known(BlockAssignment::contiguous_balanced(n_v, k)?),
        "estimated" => MembershipSpec::Estimate,
        other => {
            return Err(Error::Domain(format!(
                "sbm_membership must be fixed_balanced or estimated, found {other:?}"
            )))
        }
    };
    Ok(ModelSpec::Sbm {
        k,
        membership,
        prior: None,
    })
}

/// Fraction of rank-1 two-block SBM(x₁, x₂) replicates on which selection
/// picks the SBM, over an (x₁, x₂) grid.
pub fn run_sbm_heatmap(
    cfg: &Config,
    base_seed: u64,
    threads: Option<usize>,
    out: &Path,
) -> Result<()> {
    let n_v = cfg.get_usize("n_v", 120)?;
    let xs = cfg.grid("x", "x", 0.05, 0.95, 0.05)?;
    let reps = cfg.get_usize("reps", 100)?;
    let loops = cfg.get_bool("loops", true)?;
    let mode = cfg.get_str("sbm_membership", "estimated");
    cfg.ensure_all_used()?;
    if reps == 0 {
        return Err(Error::Domain("reps must be at least 1".into()));
    }
    let truth = BlockAssignment::contiguous_balanced(n_v, 2)?;

    let mut cells = Vec::new();
    for (i1, &x1) in xs.iter().enumerate() {
        for (i2, &x2) in xs.iter().enumerate() {
            cells.push((i1, x1, i2, x2));
        }
    }
    let rows = run_cells(threads, cells, |&(i1, x1, i2, x2)| {
        let sbm = sbm_candidate_from_mode(&mode, n_v, 2)?;
        let candidates = vec![ModelSpec::Er { prior: None }, sbm, ModelSpec::Ie { priors: None }];
        let mut chosen = 0u64;
        for rep in 0..reps {
            let seed = cell_seed(
                base_seed,
                &[TAG_SBM_HEATMAP, i1 as u64, i2 as u64, rep as u64],
            );
            let g = sample_sbm_rank1(&[x1, x2], &truth, loops, seed)?;
            let sel = select_model(&g, &candidates)?;
            if winner_slot(&sel) == 1 {
                chosen += 1;
            }
        }
        Ok(format!(
            "{},{},{},{},{}",
            n_v,
            fmt_f64(x1),
            fmt_f64(x2),
            reps,
            fmt_f64(chosen as f64 / reps as f64)
        ))
    })?;
    write_csv(out, "n_v,x1,x2,reps,frac_sbm", &rows)
}

/// Independent-edge recovery rates: draw a uniform random symmetric P per
/// outer replicate, then the fraction of inner IE(P) replicates on which
/// selection picks IE.
pub fn run_ie_histogram(
    cfg: &Config,
    base_seed: u64,
    threads: Option<usize>,
    out: &Path,
) -> Result<()> {
    let n_v = cfg.get_usize("n_v", 50)?;
    let outer = cfg.get_usize("outer", 20)?;
    let inner = cfg.get_usize("inner", 200)?;
    let loops = cfg.get_bool("loops", true)?;
    let mode = cfg.get_str("sbm_membership", "fixed_balanced");
    cfg.ensure_all_used()?;
    if outer == 0 || inner == 0 {
        return Err(Error::Domain("outer and inner must be at least 1".into()));
    }

    let cells: Vec<usize> = (0..outer).collect();
    let rows = run_cells(threads, cells, |&o| {
        let sbm = sbm_candidate_from_mode(&mode, n_v, 2)?;
        let candidates = vec![ModelSpec::Er { prior: None }, sbm, ModelSpec::Ie { priors: None }];
        let p_seed = cell_seed(base_seed, &[TAG_IE_HISTOGRAM, o as u64, u64::MAX]);
        let p = random_probability_matrix(n_v, p_seed);
        let mut success = 0u64;
        for rep in 0..inner {
            let seed = cell_seed(base_seed, &[TAG_IE_HISTOGRAM, o as u64, rep as u64]);
            let g = sample_ie(&p, loops, seed)?;
            let sel = select_model(&g, &candidates)?;
            if winner_slot(&sel) == 2 {
                success += 1;
            }
        }
        Ok(format!(
            "{},{},{}",
            o,
            inner,
            fmt_f64(success as f64 / inner as f64)
        ))
    })?;
    write_csv(out, "outer_rep,inner_reps,success_rate", &rows)
}

/// The selection lower bound over an (ε, δ) grid, with the minimum edge
/// probability curve 1.5830/(ε·√n). Grid cells violating the bound's
/// ε-precondition emit an empty bound field.
pub fn run_bound_surface(cfg: &Config, out: &Path) -> Result<()> {
    let n_v = cfg.get_usize("n_v", 100)?;
    let eps = cfg.grid("eps", "eps", 0.05, 0.95, 0.05)?;
    let deltas = cfg.grid("delta", "delta", 0.05, 0.95, 0.05)?;
    let loops = cfg.get_bool("loops", true)?;
    cfg.ensure_all_used()?;
    bound_surface_rows(n_v, &eps, &deltas, loops, out)
}

fn bound_surface_rows(
    n_v: usize,
    eps: &[f64],
    deltas: &[f64],
    loops: bool,
    out: &Path,
) -> Result<()> {
    let nv = n_v as u64;
    let n = if loops {
        nv * (nv + 1) / 2
    } else {
        nv * (nv - 1) / 2
    };
    let mut rows = Vec::new();
    for &e in eps {
        for &d in deltas {
            let bound = match ie_selection_lower_bound(n, e, d) {
                Ok(b) => fmt_f64(b.probability),
                Err(_) => String::new(),
            };
            let min_p = 1.5830 / (e * (n as f64).sqrt());
            rows.push(format!(
                "{},{},{},{},{}",
                n_v,
                fmt_f64(e),
                fmt_f64(d),
                bound,
                fmt_f64(min_p)
            ));
        }
    }
    write_csv(out, "n_v,eps,delta,bound,min_edge_probability", &rows)
}

/// `bound --nv N`: the default (ε, δ) surface for one graph size.
pub fn run_bound_default(n_v: usize, out: &Path) -> Result<()> {
    let grid: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    bound_surface_rows(n_v, &grid, &grid, true, out)
}

#[derive(Serialize)]
#[serde(untagged)]
enum FileOutcome {
    Selected {
        file: String,
        winner: String,
        log_evidence: f64,
        models: Vec<ModelOutcome>,
    },
    Failed {
        file: String,
        error: String,
    },
}

/// Type-7 linear-interpolation quantile of pre-sorted values.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Runs selection on each file, printing one JSON object per run to
/// `json_out` and, when requested, a per-model five-number summary CSV
/// across files. Per-file failures are reported inline and the run
/// continues; only a run where every file fails is an error.
pub fn run_select(
    files: &[PathBuf],
    ks: &[usize],
    membership_path: Option<&Path>,
    no_loops: bool,
    csv_path: Option<&Path>,
    json_out: &mut dyn Write,
) -> Result<()> {
    let membership = match membership_path {
        Some(p) => Some(load_membership(p)?),
        None => None,
    };
    let mut outcomes = Vec::new();
    let mut per_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut wins: BTreeMap<String, u64> = BTreeMap::new();
    let mut any_ok = false;
    let mut first_err: Option<Error> = None;

    for path in files {
        let result = (|| -> Result<Selection> {
            let mut g = load_graph(path, GraphFormat::from_path(path))?;
            if no_loops {
                g = g.without_loops();
            }
            let mut candidates = vec![ModelSpec::Er { prior: None }];
            for &k in ks {
                let spec = match &membership {
                    Some(m) => ModelSpec::Sbm {
                        k,
                        membership: MembershipSpec::Known(m.clone()),
                        prior: None,
                    },
                    None => ModelSpec::Sbm {
                        k,
                        membership: MembershipSpec::Estimate,
                        prior: None,
                    },
                };
                candidates.push(spec);
            }
            candidates.push(ModelSpec::Ie { priors: None });
            select_model(&g, &candidates)
        })();
        match result {
            Ok(sel) => {
                any_ok = true;
                *wins.entry(sel.winner.model.clone()).or_insert(0) += 1;
                for outcome in &sel.outcomes {
                    if let ModelOutcome::Report(r) = outcome {
                        per_model
                            .entry(r.model.clone())
                            .or_default()
                            .push(r.log_evidence);
                    }
                }
                outcomes.push(FileOutcome::Selected {
                    file: path.display().to_string(),
                    winner: sel.winner.model.clone(),
                    log_evidence: sel.winner.log_evidence,
                    models: sel.outcomes,
                });
            }
            Err(e) => {
                outcomes.push(FileOutcome::Failed {
                    file: path.display().to_string(),
                    error: e.to_string(),
                });
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if !any_ok {
        return Err(first_err.unwrap_or_else(|| Error::Domain("no input files".into())));
    }

    serde_json::to_writer_pretty(&mut *json_out, &outcomes)
        .map_err(|e| Error::Domain(format!("cannot serialize report: {e}")))?;
    writeln!(json_out)?;

    if let Some(csv) = csv_path {
        let mut rows = Vec::new();
        for (model, values) in &mut per_model {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let w = wins.get(model).copied().unwrap_or(0);
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                model,
                fmt_f64(values[0]),
                fmt_f64(quantile_sorted(values, 0.25)),
                fmt_f64(quantile_sorted(values, 0.5)),
                fmt_f64(quantile_sorted(values, 0.75)),
                fmt_f64(values[values.len() - 1]),
                w
            ));
        }
        write_csv(csv, "model,min,q1,median,q3,max,wins", &rows)?;
    }
    Ok(())
}

/// Maps library errors onto the documented process exit codes: 2 for
/// data/input problems, 3 for numeric failures.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Parse { .. } | Error::Domain(_) | Error::Unsupported(_) => 2,
        Error::Numeric(_)
        | Error::Boundary(_)
        | Error::ApproximationInvalid(_)
        | Error::UndefinedEvidence(_)
        | Error::AllModelsFailed(_) => 3,
        Error::Model { source, .. } => error_exit_code(source),
    }
}
