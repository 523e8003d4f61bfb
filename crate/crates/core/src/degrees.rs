//! Monte Carlo estimation of the typical agent's statistics under Palm
//! conditioning: hub degree, the connection-distance sum, and the two-hop
//! observables M (distinct agents reachable through a shared hub) and N
//! (two-edge paths, counting multiplicity).
//!
//! Replications are independent and rayon-parallel; per-replication results
//! are collected in replication order, so estimates are bit-identical for a
//! given seed regardless of worker count. Aggregation uses pairwise
//! summation.
//!
//! Two-hop statistics only depend on hubs within the truncation radius `R`
//! of the origin and on agents within `2R` of it, so when the window is
//! large enough (`L >= 4R`, where restriction provably cannot change the
//! observables) the estimator samples the surrounding point processes on
//! centred sub-windows instead of the full window. This keeps the cost per
//! replication bounded by the interaction neighbourhood, not the window.

use crate::connection::{ConnectionSpec, Family};
use crate::error::{Error, Result};
use crate::graph::{EdgeRule, DEFAULT_EDGE_EPS};
use crate::pointprocess::{sample_ppp, palm_condition, Boundary, PointKind, PointSet, Window};
use crate::rng::substream;
use crate::stats::SampleStats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const LBL_HUBS: u64 = 0x6465_6772_6875;
const LBL_AGENTS: u64 = 0x6465_6772_6167;
const LBL_EDGES: u64 = 0x6465_6772_6564;

/// Which Palm statistic a [`DegreeStats`] row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    HubDegree,
    M,
    N,
    ConnDistance,
}

impl std::fmt::Display for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Observable::HubDegree => "hub_degree",
            Observable::M => "M",
            Observable::N => "N",
            Observable::ConnDistance => "conn_distance",
        };
        f.write_str(s)
    }
}

/// Monte Carlo summary of one observable at one parameter point.
///
/// Beyond the CSV columns it carries the 95% half-width of the *variance*
/// estimate (for super-Poisson comparisons) and a `biased_window` flag set
/// when the window is too small for the observable to be exact: the Palm
/// neighbourhood then overlaps the boundary (open) or wraps (torus).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegreeStats {
    pub observable: Observable,
    pub lambda: f64,
    pub mu: f64,
    pub spec: ConnectionSpec,
    pub d: usize,
    pub window: Window,
    pub replications: usize,
    pub mean: f64,
    pub variance: f64,
    pub ci_half_width_95: f64,
    pub variance_ci_half_width_95: f64,
    pub biased_window: bool,
}

impl DegreeStats {
    pub fn csv_header() -> &'static str {
        "observable,lambda,mu,family,theta,p,d,L,reps,mean,variance,ci95"
    }

    pub fn csv_row(&self) -> String {
        let (family, theta) = family_columns(&self.spec);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.observable,
            self.lambda,
            self.mu,
            family,
            theta,
            self.spec.dispersion(),
            self.d,
            self.window.side(),
            self.replications,
            self.mean,
            self.variance,
            self.ci_half_width_95
        )
    }
}

/// CSV `family` and `theta` columns; the p-boolean amplitude rides along in
/// the family label since the schema has no column of its own for it.
fn family_columns(spec: &ConnectionSpec) -> (String, f64) {
    match spec.family() {
        Family::Boolean { theta } => ("boolean".to_string(), theta),
        Family::PBoolean { amp, theta } => (format!("pboolean:{amp}"), theta),
        Family::Exponential { theta } => ("exp".to_string(), theta),
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 replications, got {reps}")));
    }
    Ok(())
}

/// Truncation radius used by every estimator in this module (the same
/// `eps_edge` as graph construction, so estimates match built graphs).
fn truncation_radius(spec: &ConnectionSpec, window: &Window) -> Result<f64> {
    let radius = spec.effective_support(window.d(), DEFAULT_EDGE_EPS)?.radius;
    if window.boundary() == Boundary::Torus && radius >= window.side() / 2.0 {
        return Err(Error::TruncationTooLarge { radius, limit: window.side() / 2.0 });
    }
    Ok(radius)
}

/// Centred sampling sub-window of side `min(side, window.side)`; only used
/// as a sampling region, distances always come from the parent window.
fn sub_window(window: &Window, side: f64) -> Result<Window> {
    Window::new(window.d(), side.min(window.side()), Boundary::Open)
}

/// Palm M and N at agent 0 of a palm-conditioned agent set, with the same
/// pair-keyed edge decisions as `build_rbg` on the same sets and seed.
///
/// `metric` supplies the distance rule (it may be larger than the sampling
/// regions of the point sets); `agents` must be palm-conditioned so index 0
/// is the typical agent. Exposed for callers that need the raw per-
/// replication pair rather than aggregated statistics.
pub fn mn_at_origin(
    metric: &Window,
    spec: &ConnectionSpec,
    edge_seed: u64,
    agents: &PointSet,
    hubs: &PointSet,
) -> Result<(u32, u32)> {
    if !agents.is_palm() || agents.kind() != PointKind::Agent {
        return Err(Error::InvalidParam("expected a palm-conditioned agent set".into()));
    }
    let radius = truncation_radius(spec, metric)?;
    let rule = EdgeRule::bipartite(spec, metric.d(), radius);
    let origin = agents.point(0);
    let mut seen = vec![false; agents.len()];
    let mut m = 0u32;
    let mut n = 0u32;
    for h in 0..hubs.len() {
        let hub = hubs.point(h);
        let dist = metric.distance(origin, hub);
        if !rule.connects(edge_seed, 0, h as u64, dist) {
            continue;
        }
        for i in 1..agents.len() {
            let dist_ih = metric.distance(agents.point(i), hub);
            if rule.connects(edge_seed, i as u64, h as u64, dist_ih) {
                n += 1;
                if !seen[i] {
                    seen[i] = true;
                    m += 1;
                }
            }
        }
    }
    Ok((m, n))
}

/// Per-replication Palm hub-degree count and connection-distance sum.
fn palm_degree_reps(
    mu: f64,
    spec: &ConnectionSpec,
    window: &Window,
    reps: usize,
    seed: u64,
) -> Result<Vec<(u32, f64)>> {
    let d = window.d();
    let radius = truncation_radius(spec, window)?;
    let rule = EdgeRule::bipartite(spec, d, radius);
    let hub_win = sub_window(window, 2.0 * radius)?;
    let origin = vec![0.0; d];
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let hubs =
                sample_ppp(mu, &hub_win, PointKind::Hub, substream(seed, &[LBL_HUBS, rep as u64]))?;
            let edge_seed = substream(seed, &[LBL_EDGES, rep as u64]);
            let mut count = 0u32;
            let mut dist_sum = 0.0;
            for h in 0..hubs.len() {
                let dist = window.distance(&origin, hubs.point(h));
                if rule.connects(edge_seed, 0, h as u64, dist) {
                    count += 1;
                    dist_sum += dist;
                }
            }
            Ok((count, dist_sum))
        })
        .collect()
}

fn assemble(
    observable: Observable,
    lambda: f64,
    mu: f64,
    spec: &ConnectionSpec,
    window: &Window,
    values: &[f64],
    biased_window: bool,
) -> DegreeStats {
    let s = SampleStats::from_sample(values);
    DegreeStats {
        observable,
        lambda,
        mu,
        spec: *spec,
        d: window.d(),
        window: *window,
        replications: values.len(),
        mean: s.mean,
        variance: s.variance,
        ci_half_width_95: s.ci95_half,
        variance_ci_half_width_95: s.var_ci95_half,
        biased_window,
    }
}

/// Estimate the typical agent's hub degree: per replication, sample the hub
/// process, place the Palm agent at the origin and count its edges.
/// `lambda` is carried as metadata only (no agent process is needed).
pub fn estimate_typical_degree(
    lambda: f64,
    mu: f64,
    spec: &ConnectionSpec,
    window: &Window,
    reps: usize,
    seed: u64,
) -> Result<DegreeStats> {
    check_reps(reps)?;
    let radius = truncation_radius(spec, window)?;
    let values: Vec<f64> = palm_degree_reps(mu, spec, window, reps, seed)?
        .into_iter()
        .map(|(c, _)| c as f64)
        .collect();
    let biased = radius > window.side() / 2.0;
    Ok(assemble(Observable::HubDegree, lambda, mu, spec, window, &values, biased))
}

/// Histogram of the typical agent's hub degree (index = degree), for
/// goodness-of-fit checks against the Poisson law.
pub fn typical_degree_histogram(
    mu: f64,
    spec: &ConnectionSpec,
    window: &Window,
    reps: usize,
    seed: u64,
) -> Result<Vec<u64>> {
    check_reps(reps)?;
    let mut hist = Vec::new();
    for (c, _) in palm_degree_reps(mu, spec, window, reps, seed)? {
        let c = c as usize;
        if hist.len() <= c {
            hist.resize(c + 1, 0);
        }
        hist[c] += 1;
    }
    Ok(hist)
}

/// Estimate the Palm connection-distance sum `sum_hubs I(o, y) |y|`, whose
/// mean is `mu * 2 pi * I_1` of the dispersed connection function in d = 2.
pub fn estimate_conn_distance(
    mu: f64,
    spec: &ConnectionSpec,
    window: &Window,
    reps: usize,
    seed: u64,
) -> Result<DegreeStats> {
    check_reps(reps)?;
    let radius = truncation_radius(spec, window)?;
    let values: Vec<f64> = palm_degree_reps(mu, spec, window, reps, seed)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let biased = radius > window.side() / 2.0;
    Ok(assemble(Observable::ConnDistance, 0.0, mu, spec, window, &values, biased))
}

/// Estimate M and N of the typical agent, paired from the same realizations.
///
/// Per replication: sample hubs and agents around the origin, Palm-condition
/// the agents, and read (M, N) at the origin with graph-identical edge
/// decisions. Hubs are sampled on a centred sub-window of side `2R` and
/// agents on side `4R` (clipped to the window): points outside those regions
/// cannot influence the origin's two-hop statistics when `L >= 4R`.
pub fn estimate_mn(
    lambda: f64,
    mu: f64,
    spec: &ConnectionSpec,
    window: &Window,
    reps: usize,
    seed: u64,
) -> Result<(DegreeStats, DegreeStats)> {
    check_reps(reps)?;
    let radius = truncation_radius(spec, window)?;
    let biased = window.side() < 4.0 * radius;
    let (hub_win, agent_win) = if biased {
        (*window, *window)
    } else {
        (sub_window(window, 2.0 * radius)?, sub_window(window, 4.0 * radius)?)
    };
    let pairs: Vec<(u32, u32)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let r = rep as u64;
            let hubs = sample_ppp(mu, &hub_win, PointKind::Hub, substream(seed, &[LBL_HUBS, r]))?;
            let base =
                sample_ppp(lambda, &agent_win, PointKind::Agent, substream(seed, &[LBL_AGENTS, r]))?;
            let agents = palm_condition(&base)?;
            mn_at_origin(window, spec, substream(seed, &[LBL_EDGES, r]), &agents, &hubs)
        })
        .collect::<Result<Vec<_>>>()?;
    let m_vals: Vec<f64> = pairs.iter().map(|&(m, _)| m as f64).collect();
    let n_vals: Vec<f64> = pairs.iter().map(|&(_, n)| n as f64).collect();
    Ok((
        assemble(Observable::M, lambda, mu, spec, window, &m_vals, biased),
        assemble(Observable::N, lambda, mu, spec, window, &n_vals, biased),
    ))
}
