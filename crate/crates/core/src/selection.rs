//! Evidence-based model selection across ER, rank-1 SBM, and
//! independent-edge candidates.

use serde::Serialize;

use crate::er_ie::{log_evidence_er, log_evidence_ie, map_er, matched_ie_priors, BetaParams, EdgeSummary};
use crate::error::{Error, Result};
use crate::graph::{BlockAssignment, BlockStats, Graph};
use crate::membership::estimate_membership;
use crate::sbm::{
    complete_graph_log_evidence, induced_sbm_prior, laplace_log_evidence, quadrature_log_evidence,
    map_sbm, MapOptions, SbmPrior,
};

/// How the SBM candidate obtains its block membership.
#[derive(Clone, Debug)]
pub enum MembershipSpec {
    /// Use a supplied assignment.
    Known(BlockAssignment),
    /// Estimate from the graph by spectral embedding plus 1-D clustering.
    Estimate,
}

/// A candidate model. Omitted priors default to the matched set under
/// which the three evidences are directly comparable: flat Beta(1,1) for
/// ER, Beta(1/n, 1/n) per pair for IE, Beta(2,1) per block for the SBM.
#[derive(Clone, Debug)]
pub enum ModelSpec {
    Er {
        prior: Option<BetaParams>,
    },
    Ie {
        priors: Option<Vec<BetaParams>>,
    },
    Sbm {
        k: usize,
        membership: MembershipSpec,
        prior: Option<SbmPrior>,
    },
}

impl ModelSpec {
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Er { .. } => "ER".into(),
            ModelSpec::Ie { .. } => "IE".into(),
            ModelSpec::Sbm {
                k,
                membership: MembershipSpec::Known(_),
                ..
            } => format!("SBM-{k}-given"),
            ModelSpec::Sbm { k, .. } => format!("SBM-{k}"),
        }
    }
}

/// The default candidate registry: ER, then SBM-K for each requested K,
/// then IE. Earlier candidates win exact evidence ties.
pub fn default_candidates(ks: &[usize]) -> Vec<ModelSpec> {
    let mut v = vec![ModelSpec::Er { prior: None }];
    for &k in ks {
        v.push(ModelSpec::Sbm {
            k,
            membership: MembershipSpec::Estimate,
            prior: None,
        });
    }
    v.push(ModelSpec::Ie { priors: None });
    v
}

/// Evidence for one candidate on one graph.
#[derive(Clone, Debug, Serialize)]
pub struct EvidenceReport {
    pub model: String,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub log_evidence: f64,
    /// One of "exact_beta", "exact_product", "laplace", "quadrature",
    /// "complete_closed_form".
    pub method: String,
    pub map_point: Option<Vec<f64>>,
    pub membership: Option<Vec<usize>>,
    pub warnings: Vec<String>,
}

/// Either a finished report or the failure that prevented one.
#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum ModelOutcome {
    Report(EvidenceReport),
    Failed { model: String, error: String },
}

/// Outcome of a full selection run.
#[derive(Clone, Debug, Serialize)]
pub struct Selection {
    pub winner: EvidenceReport,
    pub outcomes: Vec<ModelOutcome>,
}

fn er_report(graph: &Graph, prior: &Option<BetaParams>) -> Result<EvidenceReport> {
    let (n, s) = graph.edge_count();
    let es = EdgeSummary::new(n, s)?;
    let mut warnings = Vec::new();
    let pr = match prior {
        Some(p) => {
            if *p != BetaParams::uniform() {
                warnings.push(
                    "custom ER prior: evidence is comparable across models only under matched priors"
                        .into(),
                );
            }
            *p
        }
        None => BetaParams::uniform(),
    };
    let log_evidence = log_evidence_er(es, &pr);
    let map_point = map_er(es, &pr).ok().map(|p| vec![p]);
    Ok(EvidenceReport {
        model: "ER".into(),
        k: None,
        log_evidence,
        method: "exact_beta".into(),
        map_point,
        membership: None,
        warnings,
    })
}

fn ie_report(graph: &Graph, priors: &Option<Vec<BetaParams>>) -> Result<EvidenceReport> {
    let a = graph.edge_indicators();
    let n = a.len() as u64;
    let mut warnings = Vec::new();
    let prs = match priors {
        Some(p) => {
            if p.len() as u64 != n {
                return Err(Error::Domain(format!(
                    "IE prior has {} components for {} pairs",
                    p.len(),
                    n
                )));
            }
            let matched = matched_ie_priors(n);
            if p != &matched {
                warnings.push(
                    "custom IE prior: evidence is comparable across models only under matched priors"
                        .into(),
                );
            }
            p.clone()
        }
        None => matched_ie_priors(n),
    };
    let log_evidence = log_evidence_ie(&a, &prs)?;
    Ok(EvidenceReport {
        model: "IE".into(),
        k: None,
        log_evidence,
        method: "exact_product".into(),
        map_point: None,
        membership: None,
        warnings,
    })
}

/// Minimum pairs per block pair below which the Laplace error bound is not
/// trusted and K ≤ 3 candidates switch to quadrature.
const MIN_EXPOSURE_FOR_LAPLACE: u64 = 5;

fn sbm_report(
    graph: &Graph,
    k: usize,
    membership: &MembershipSpec,
    prior: &Option<SbmPrior>,
) -> Result<EvidenceReport> {
    if k == 0 {
        return Err(Error::Domain("need at least one block".into()));
    }
    let mut warnings = Vec::new();
    let (assignment, label) = match membership {
        MembershipSpec::Known(a) => {
            if a.n_v() != graph.n_v() {
                return Err(Error::Domain(format!(
                    "membership covers {} vertices, graph has {}",
                    a.n_v(),
                    graph.n_v()
                )));
            }
            if a.k() != k {
                return Err(Error::Domain(format!(
                    "membership has {} blocks, candidate asks for {}",
                    a.k(),
                    k
                )));
            }
            (a.clone(), format!("SBM-{k}-given"))
        }
        MembershipSpec::Estimate => (estimate_membership(graph, k)?, format!("SBM-{k}")),
    };
    let stats = BlockStats::from_graph(graph, &assignment)?;
    let pr = match prior {
        Some(p) => {
            if p.k() != k {
                return Err(Error::Domain(format!(
                    "SBM prior has {} components for {} blocks",
                    p.k(),
                    k
                )));
            }
            if !p.is_induced() {
                warnings.push(
                    "custom SBM prior: evidence is comparable across models only under matched priors"
                        .into(),
                );
            }
            p.clone()
        }
        None => induced_sbm_prior(k),
    };

    let (log_evidence, method, map_point) = if stats.total_nonedges() == 0 && pr.is_induced() {
        let v = complete_graph_log_evidence(&stats, &pr)?;
        (v, "complete_closed_form", None)
    } else {
        let opts = MapOptions::default();
        let exposure_ok = stats.min_exposure() >= MIN_EXPOSURE_FOR_LAPLACE;
        match laplace_log_evidence(&stats, &pr, &opts) {
            Ok(r) if exposure_ok => (r.log_evidence.unwrap(), "laplace", Some(r.x_star)),
            Ok(r) if k <= 3 => {
                warnings.push(format!(
                    "some block pair has fewer than {MIN_EXPOSURE_FOR_LAPLACE} vertex pairs; used adaptive quadrature instead of the Laplace approximation"
                ));
                let v = quadrature_log_evidence(&stats, &pr)?;
                (v, "quadrature", Some(r.x_star))
            }
            Ok(r) => {
                warnings.push(format!(
                    "some block pair has fewer than {MIN_EXPOSURE_FOR_LAPLACE} vertex pairs and K > 3 rules out quadrature; Laplace accuracy is not guaranteed"
                ));
                (r.log_evidence.unwrap(), "laplace", Some(r.x_star))
            }
            Err(e) if k <= 3 => {
                warnings.push(format!(
                    "Laplace approximation unavailable ({e}); used adaptive quadrature"
                ));
                let v = quadrature_log_evidence(&stats, &pr)?;
                let map = map_sbm(&stats, &pr, &opts);
                let mp = if map.converged { Some(map.x_star) } else { None };
                (v, "quadrature", mp)
            }
            Err(e) => return Err(e),
        }
    };

    Ok(EvidenceReport {
        model: label,
        k: Some(k),
        log_evidence,
        method: method.into(),
        map_point,
        membership: Some(assignment.labels().to_vec()),
        warnings,
    })
}

/// Evidence for a single candidate model.
pub fn evaluate_model(graph: &Graph, spec: &ModelSpec) -> Result<EvidenceReport> {
    let mut report = match spec {
        ModelSpec::Er { prior } => er_report(graph, prior),
        ModelSpec::Ie { priors } => ie_report(graph, priors),
        ModelSpec::Sbm {
            k,
            membership,
            prior,
        } => sbm_report(graph, *k, membership, prior),
    }
    .map_err(|e| e.for_model(&spec.label()))?;
    if graph.is_edgeless() {
        report
            .warnings
            .push("graph has no edges; evidence values are degenerate".into());
    }
    Ok(report)
}

/// Evaluates every candidate and picks the highest evidence. Candidates
/// that fail are recorded in the outcomes rather than aborting the run;
/// only when every candidate fails is the whole selection an error.
pub fn select_model(graph: &Graph, candidates: &[ModelSpec]) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Domain("no candidate models supplied".into()));
    }
    let mut outcomes = Vec::with_capacity(candidates.len());
    let mut best: Option<EvidenceReport> = None;
    for spec in candidates {
        match evaluate_model(graph, spec) {
            Ok(report) => {
                let better = best
                    .as_ref()
                    .map(|b| report.log_evidence > b.log_evidence)
                    .unwrap_or(true);
                if better {
                    best = Some(report.clone());
                }
                outcomes.push(ModelOutcome::Report(report));
            }
            Err(e) => outcomes.push(ModelOutcome::Failed {
                model: spec.label(),
                error: e.to_string(),
            }),
        }
    }
    match best {
        Some(winner) => Ok(Selection { winner, outcomes }),
        None => Err(Error::AllModelsFailed(
            "every candidate model failed to produce an evidence".into(),
        )),
    }
}
