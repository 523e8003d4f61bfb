//! Finite-size percolation experiments and threshold estimation.
//!
//! A single trial samples the two point processes on a torus window, streams
//! the pair-keyed edges into a union-find, and asks whether the graph
//! percolates in the finite-size sense of a chosen criterion. The default
//! criterion is *wrap*: some component connects to one of its own periodic
//! images, detected by tracking, per vertex, the net number of times the
//! path to its union-find root crosses each boundary. Joining two vertices
//! that are already connected with a mismatched crossing count exhibits a
//! cycle of nonzero winding number, which is exactly a wrapping component.
//!
//! Sweeps share randomness across the intensity grid by superposition: the
//! point process at the next grid value is the current one plus an
//! independent increment, and edge indicators are keyed by point indices, so
//! the graphs along the grid form a pathwise increasing family and the wrap
//! and span indicators are non-decreasing in the swept intensity. The
//! threshold estimate is the crossing point of the percolation-probability
//! curves for the two largest window sides (their common intersection is
//! asymptotically pinned at the critical point), with a parametric bootstrap
//! confidence interval; when the curves do not cross inside the grid the
//! sweep is flagged censored instead of extrapolated.

use crate::connection::ConnectionSpec;
use crate::error::{Error, Result};
use crate::graph::{CellGrid, EdgeRule, DEFAULT_EDGE_EPS};
use crate::pointprocess::{extend_ppp, sample_ppp, Boundary, PointKind, PointSet, Window};
use crate::rng::{rng_from, substream};
use crate::stats::wilson_ci;
use crate::theory::{gw_lower_bound, radial_factor};
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

const LBL_TRIAL: u64 = 0x7072_6374_726c; // "prctrl"
const LBL_AGT: u64 = 0x7072_6361_6774; // "prcagt"
const LBL_HUB: u64 = 0x7072_6368_7562; // "prchub"
const LBL_EDG: u64 = 0x7072_6365_6467; // "prcedg"
const LBL_BOOT: u64 = 0x7072_6362_6f74; // "prcbot"

/// Parametric bootstrap resamples behind every threshold CI.
const BOOTSTRAP_RESAMPLES: usize = 500;

/// A sweep point counts as confidently percolating (for bound checks) when
/// the lower end of its Wilson interval clears this.
const PERC_CI_FLOOR: f64 = 0.25;

/// Boundary-crossing vectors are tracked with fixed-width arrays; windows
/// with more axes are rejected up front.
const MAX_WRAP_D: usize = 8;

// ---------------------------------------------------------------------------
// criteria and outcomes
// ---------------------------------------------------------------------------

/// Event that counts as percolation in a finite window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PercCriterion {
    /// Some component connects to one of its own periodic images
    /// (requires a torus window).
    Wrap,
    /// Some component touches both faces of an axis, where "touches" means
    /// reaching within one interaction radius of the face.
    Span,
    /// The largest component contains at least this fraction of all agents.
    Fraction(f64),
}

impl PercCriterion {
    /// Conventional fraction cutoff for [`PercCriterion::Fraction`].
    pub const DEFAULT_FRACTION: f64 = 0.3;
}

impl Default for PercCriterion {
    fn default() -> Self {
        PercCriterion::Wrap
    }
}

impl fmt::Display for PercCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PercCriterion::Wrap => write!(f, "wrap"),
            PercCriterion::Span => write!(f, "span"),
            PercCriterion::Fraction(t) => write!(f, "fraction({t})"),
        }
    }
}

/// Outcome of a single percolation trial.
#[derive(Debug, Clone, Serialize)]
pub struct PercOutcome {
    pub percolates: bool,
    /// Agents in the largest component divided by all agents (0 when there
    /// are no agents at all).
    pub largest_component_agent_fraction: f64,
    pub criterion: PercCriterion,
    pub window: Window,
    pub seed: u64,
    /// Set when one of the point processes came up empty, so the trial was
    /// decided by emptiness rather than by the criterion.
    pub indeterminate: bool,
}

/// Which intensity a sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Lambda,
    Mu,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::Lambda => write!(f, "lambda"),
            SweepParam::Mu => write!(f, "mu"),
        }
    }
}

/// Configuration of a finite-size sweep over one intensity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Intensity that moves along `grid`.
    pub swept: SweepParam,
    /// Value of the other intensity.
    pub fixed_value: f64,
    /// Strictly increasing swept-intensity values.
    pub grid: Vec<f64>,
    /// Window sides; the threshold comes from the two largest.
    pub l_list: Vec<f64>,
    /// Replications per window side (each replication runs the whole grid
    /// on one coupled realization).
    pub reps: usize,
    pub d: usize,
    pub criterion: PercCriterion,
    /// Truncated tail mass for connection functions with unbounded support.
    pub eps_edge: f64,
}

impl SweepConfig {
    /// Config with conventional defaults: 200 replications, dimension 2,
    /// wrap criterion, default edge truncation.
    pub fn new(swept: SweepParam, fixed_value: f64, grid: Vec<f64>, l_list: Vec<f64>) -> Self {
        SweepConfig {
            swept,
            fixed_value,
            grid,
            l_list,
            reps: 200,
            d: 2,
            criterion: PercCriterion::Wrap,
            eps_edge: DEFAULT_EDGE_EPS,
        }
    }

    fn validate(&self) -> Result<()> {
        check_criterion(self.criterion)?;
        if !(self.fixed_value.is_finite() && self.fixed_value >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "fixed intensity must be finite and >= 0, got {}",
                self.fixed_value
            )));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParam("sweep grid is empty".into()));
        }
        for pair in self.grid.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidParam(
                    "sweep grid must be strictly increasing".into(),
                ));
            }
        }
        if !(self.grid[0].is_finite() && self.grid[0] >= 0.0)
            || !self.grid[self.grid.len() - 1].is_finite()
        {
            return Err(Error::InvalidParam(
                "sweep grid values must be finite and >= 0".into(),
            ));
        }
        if self.l_list.is_empty() {
            return Err(Error::InvalidParam("sweep needs at least one window side".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidParam("sweep needs at least one replication".into()));
        }
        if self.d == 0 || self.d > MAX_WRAP_D {
            return Err(Error::InvalidParam(format!(
                "percolation supports 1 <= d <= {MAX_WRAP_D}, got {}",
                self.d
            )));
        }
        Ok(())
    }
}

/// One (swept value, window side) cell of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub l: f64,
    pub reps: usize,
    /// Replications that percolated.
    pub hits: u32,
    pub prob: f64,
    /// 95% Wilson interval for `prob`.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Replications where a point process came up empty.
    pub indeterminate: u32,
}

/// Full result of a sweep, including the finite-size threshold estimate.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub param: SweepParam,
    /// The non-swept intensity; `None` for unipartite sweeps, which have a
    /// single intensity.
    pub fixed_value: Option<f64>,
    pub spec: ConnectionSpec,
    pub d: usize,
    pub criterion: PercCriterion,
    pub grid: Vec<f64>,
    /// Window sides in increasing order.
    pub l_list: Vec<f64>,
    pub reps: usize,
    /// Laid out window-side-major: all grid values for `l_list[0]`, then
    /// all for `l_list[1]`, and so on.
    pub points: Vec<SweepPoint>,
    /// Crossing of the probability curves for the two largest window sides;
    /// `None` when censored.
    pub threshold_estimate: Option<f64>,
    /// Bootstrap 95% interval for the crossing; `None` when censored or
    /// when most resamples fail to cross.
    pub threshold_ci: Option<(f64, f64)>,
    /// Set when the curves do not cross inside the grid (or fewer than two
    /// window sides were given).
    pub censored: bool,
    pub seed: u64,
}

impl SweepResult {
    pub fn csv_header() -> &'static str {
        "param,value,L,reps,perc_prob,ci_lo,ci_hi"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| {
                format!(
                    "{},{},{},{},{},{},{}",
                    self.param, p.value, p.l, p.reps, p.prob, p.ci_lo, p.ci_hi
                )
            })
            .collect()
    }

    /// Percolation probabilities for the `li`-th window side, in grid order.
    ///
    /// # Panics
    ///
    /// Panics when `li >= l_list.len()`.
    pub fn curve(&self, li: usize) -> Vec<f64> {
        assert!(li < self.l_list.len(), "window index {li} out of range");
        let g = self.grid.len();
        self.points[li * g..(li + 1) * g].iter().map(|p| p.prob).collect()
    }
}

// ---------------------------------------------------------------------------
// union-find with boundary-crossing tracking
// ---------------------------------------------------------------------------

/// Union-find over graph vertices that tracks, per vertex, the net
/// boundary-crossing vector of the path to its root, plus per-component
/// agent counts and face-contact masks, so that all three percolation
/// criteria can be read off in O(1) after each union.
struct WrapUf {
    d: usize,
    parent: Vec<u32>,
    size: Vec<u32>,
    agents: Vec<u32>,
    mask: Vec<u32>,
    /// Crossing vector to the parent, d-strided.
    off: Vec<i32>,
    path: Vec<u32>,
    n_agents: u32,
    max_agents: u32,
    any_wrap: bool,
    any_span: bool,
}

impl WrapUf {
    fn new(d: usize) -> WrapUf {
        WrapUf {
            d,
            parent: Vec::new(),
            size: Vec::new(),
            agents: Vec::new(),
            mask: Vec::new(),
            off: Vec::new(),
            path: Vec::new(),
            n_agents: 0,
            max_agents: 0,
            any_wrap: false,
            any_span: false,
        }
    }

    /// Add an isolated vertex; `mask` records which boundary slabs it
    /// touches (bit `2k` = low face of axis `k`, bit `2k+1` = high face).
    fn push(&mut self, is_agent: bool, mask: u32) -> u32 {
        let v = self.parent.len() as u32;
        self.parent.push(v);
        self.size.push(1);
        self.agents.push(is_agent as u32);
        self.mask.push(mask);
        self.off.extend(std::iter::repeat(0).take(self.d));
        if is_agent {
            self.n_agents += 1;
            if self.max_agents == 0 {
                self.max_agents = 1;
            }
        }
        if spanning(mask, self.d) {
            self.any_span = true;
        }
        v
    }

    /// Root of `v`, with path compression that keeps every rebased vertex's
    /// crossing vector correct relative to the root.
    fn find(&mut self, v: u32) -> u32 {
        let mut root = v;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        self.path.clear();
        let mut x = v;
        while self.parent[x as usize] != x {
            self.path.push(x);
            x = self.parent[x as usize];
        }
        // rebase from the root end inward so each node's parent already
        // carries its own offset relative to the root
        for idx in (0..self.path.len()).rev() {
            let node = self.path[idx] as usize;
            let p = self.parent[node] as usize;
            if p != root as usize {
                for t in 0..self.d {
                    self.off[node * self.d + t] += self.off[p * self.d + t];
                }
            }
            self.parent[node] = root;
        }
        root
    }

    #[inline]
    fn off_of(&self, v: u32, t: usize) -> i32 {
        self.off[v as usize * self.d + t]
    }

    /// Join `u` and `v` along an edge whose boundary-crossing vector is `k`
    /// (the relation is `class(v) = class(u) + k`; the sign convention
    /// cancels around cycles, which is all wrap detection uses).
    fn union(&mut self, u: u32, v: u32, k: &[i32]) {
        let ru = self.find(u);
        let rv = self.find(v);
        let d = self.d;
        if ru == rv {
            let consistent = (0..d).all(|t| self.off_of(v, t) == self.off_of(u, t) + k[t]);
            if !consistent {
                self.wrap_root(ru);
            }
            return;
        }
        // crossing vector rv needs relative to ru for the edge to hold
        let mut orv = [0i32; MAX_WRAP_D];
        for t in 0..d {
            orv[t] = self.off_of(u, t) + k[t] - self.off_of(v, t);
        }
        let (big, small) = if self.size[ru as usize] >= self.size[rv as usize] {
            (ru, rv)
        } else {
            (rv, ru)
        };
        for t in 0..d {
            self.off[small as usize * d + t] = if small == rv { orv[t] } else { -orv[t] };
        }
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.agents[big as usize] += self.agents[small as usize];
        self.mask[big as usize] |= self.mask[small as usize];
        if self.agents[big as usize] > self.max_agents {
            self.max_agents = self.agents[big as usize];
        }
        if spanning(self.mask[big as usize], d) {
            self.any_span = true;
        }
    }

    fn wrap_root(&mut self, root: u32) {
        // wrapped state only needs to be a component property; reuse the
        // high bit of the mask so merges carry it along automatically
        self.mask[root as usize] |= WRAPPED_BIT;
        self.any_wrap = true;
    }
}

/// Mask bit marking a wrapped component (axes use bits 0..2d <= 16).
const WRAPPED_BIT: u32 = 1 << 31;

fn spanning(mask: u32, d: usize) -> bool {
    (0..d).any(|t| mask & (1 << (2 * t)) != 0 && mask & (1 << (2 * t + 1)) != 0)
}

/// Face-contact mask of a point: which boundary slabs of width `slab` it
/// lies in.
fn slab_mask(w: &Window, x: &[f64], slab: f64) -> u32 {
    let half = w.half();
    let mut mask = 0u32;
    for t in 0..w.d() {
        if x[t] <= -half + slab {
            mask |= 1 << (2 * t);
        }
        if x[t] >= half - slab {
            mask |= 1 << (2 * t + 1);
        }
    }
    mask
}

/// Boundary-crossing vector of the edge from `pu` to `pv`: the minimal-image
/// displacement equals the raw displacement minus `k` window sides.
#[inline]
fn wrap_vec(w: &Window, pu: &[f64], pv: &[f64], k: &mut [i32; MAX_WRAP_D]) {
    if w.boundary() == Boundary::Torus {
        let side = w.side();
        for t in 0..w.d() {
            k[t] = ((pv[t] - pu[t]) / side).round() as i32;
        }
    } else {
        k[..w.d()].fill(0);
    }
}

fn decide(uf: &WrapUf, criterion: PercCriterion, indeterminate: bool) -> (bool, f64, bool) {
    let fraction = if uf.n_agents == 0 {
        0.0
    } else {
        uf.max_agents as f64 / uf.n_agents as f64
    };
    let percolates = !indeterminate
        && match criterion {
            PercCriterion::Wrap => uf.any_wrap,
            PercCriterion::Span => uf.any_span,
            PercCriterion::Fraction(t) => fraction >= t,
        };
    (percolates, fraction, indeterminate)
}

// ---------------------------------------------------------------------------
// coupled chains along the intensity grid
// ---------------------------------------------------------------------------

fn check_criterion(criterion: PercCriterion) -> Result<()> {
    if let PercCriterion::Fraction(t) = criterion {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "fraction cutoff must lie in (0, 1], got {t}"
            )));
        }
    }
    Ok(())
}

/// Window/criterion preconditions; returns the truncation radius.
fn check_window(
    window: &Window,
    spec: &ConnectionSpec,
    criterion: PercCriterion,
    eps_edge: f64,
) -> Result<f64> {
    if window.d() > MAX_WRAP_D {
        return Err(Error::InvalidParam(format!(
            "percolation supports 1 <= d <= {MAX_WRAP_D}, got {}",
            window.d()
        )));
    }
    let radius = spec.effective_support(window.d(), eps_edge)?.radius;
    match window.boundary() {
        Boundary::Torus => {
            // wrap vectors are only meaningful when no edge covers a
            // quarter of the window
            if radius >= window.side() / 4.0 {
                return Err(Error::TruncationTooLarge {
                    radius,
                    limit: window.side() / 4.0,
                });
            }
        }
        Boundary::Open => {
            if matches!(criterion, PercCriterion::Wrap) {
                return Err(Error::InvalidParam(
                    "wrap criterion requires a torus window".into(),
                ));
            }
        }
    }
    Ok(radius)
}

/// Percolation indicators along an ascending intensity grid on one coupled
/// realization. The moving side at the next grid value is the current one
/// plus an independent superposed increment, and edges are pair-keyed, so
/// the graphs increase pathwise along the grid; the union-find is extended
/// batch by batch rather than rebuilt. Returns
/// `(percolates, largest agent fraction, indeterminate)` per grid value.
fn run_rbg_chain(
    swept: SweepParam,
    fixed_value: f64,
    grid: &[f64],
    spec: &ConnectionSpec,
    window: &Window,
    criterion: PercCriterion,
    eps_edge: f64,
    rep_seed: u64,
) -> Result<Vec<(bool, f64, bool)>> {
    let d = window.d();
    let radius = check_window(window, spec, criterion, eps_edge)?;
    let rule = EdgeRule::bipartite(spec, d, radius);
    let edge_seed = substream(rep_seed, &[LBL_EDG]);
    let slab = rule.scan_radius;

    let (fixed_kind, moving_kind, fixed_label, moving_label) = match swept {
        SweepParam::Mu => (PointKind::Agent, PointKind::Hub, LBL_AGT, LBL_HUB),
        SweepParam::Lambda => (PointKind::Hub, PointKind::Agent, LBL_HUB, LBL_AGT),
    };
    let fixed = sample_ppp(
        fixed_value,
        window,
        fixed_kind,
        substream(rep_seed, &[fixed_label, 0]),
    )?;
    let fixed_grid = if fixed.len() > 0 {
        Some(CellGrid::build(&fixed, rule.scan_radius))
    } else {
        None
    };

    let mut uf = WrapUf::new(d);
    let fixed_is_agent = fixed_kind == PointKind::Agent;
    for i in 0..fixed.len() {
        uf.push(fixed_is_agent, slab_mask(window, fixed.point(i), slab));
    }

    let mut moving: Option<PointSet> = None;
    let mut out = Vec::with_capacity(grid.len());
    let mut prev_val = 0.0;
    let mut k = [0i32; MAX_WRAP_D];
    for (bi, &val) in grid.iter().enumerate() {
        let batch_seed = substream(rep_seed, &[moving_label, bi as u64]);
        let next = match &moving {
            None => sample_ppp(val, window, moving_kind, batch_seed)?,
            Some(m) => extend_ppp(m, val - prev_val, batch_seed)?,
        };
        let new_lo = moving.as_ref().map_or(0, |m| m.len());
        for im in new_lo..next.len() {
            let pos = next.point(im);
            let vm = uf.push(!fixed_is_agent, slab_mask(window, pos, slab));
            if let Some(g) = &fixed_grid {
                g.for_each_within(pos, rule.scan_radius, |jf, dist| {
                    let (ai, hj) = match swept {
                        SweepParam::Mu => (jf as u64, im as u64),
                        SweepParam::Lambda => (im as u64, jf as u64),
                    };
                    if rule.connects(edge_seed, ai, hj, dist) {
                        wrap_vec(window, fixed.point(jf as usize), pos, &mut k);
                        uf.union(jf, vm, &k[..d]);
                    }
                });
            }
        }
        moving = Some(next);
        let moving_len = moving.as_ref().unwrap().len();
        let indeterminate = fixed.len() == 0 || moving_len == 0;
        out.push(decide(&uf, criterion, indeterminate));
        prev_val = val;
    }
    Ok(out)
}

/// Unipartite analogue of [`run_rbg_chain`]: one growing point process,
/// every unordered pair within reach gets an edge decision. New points are
/// probed against a grid over the full current set, so an (old, new) pair is
/// visited once and a (new, new) pair twice; the repeat union carries the
/// same relation and cannot create a spurious wrap.
fn run_uni_chain(
    grid: &[f64],
    spec: &ConnectionSpec,
    window: &Window,
    criterion: PercCriterion,
    eps_edge: f64,
    rep_seed: u64,
) -> Result<Vec<(bool, f64, bool)>> {
    let d = window.d();
    let radius = check_window(window, spec, criterion, eps_edge)?;
    let rule = EdgeRule::unipartite(spec, d, radius);
    let edge_seed = substream(rep_seed, &[LBL_EDG]);
    let slab = rule.scan_radius;

    let mut uf = WrapUf::new(d);
    let mut pts: Option<PointSet> = None;
    let mut out = Vec::with_capacity(grid.len());
    let mut prev_val = 0.0;
    let mut k = [0i32; MAX_WRAP_D];
    for (bi, &val) in grid.iter().enumerate() {
        let batch_seed = substream(rep_seed, &[LBL_AGT, bi as u64]);
        let next = match &pts {
            None => sample_ppp(val, window, PointKind::Agent, batch_seed)?,
            Some(m) => extend_ppp(m, val - prev_val, batch_seed)?,
        };
        let new_lo = pts.as_ref().map_or(0, |m| m.len());
        for im in new_lo..next.len() {
            uf.push(true, slab_mask(window, next.point(im), slab));
        }
        if new_lo < next.len() {
            let g = CellGrid::build(&next, rule.scan_radius);
            for im in new_lo..next.len() {
                let pos = next.point(im);
                g.for_each_within(pos, rule.scan_radius, |jb, dist| {
                    let jb = jb as usize;
                    if jb == im {
                        return;
                    }
                    let (a, b) = if jb < im { (jb, im) } else { (im, jb) };
                    if rule.connects(edge_seed, a as u64, b as u64, dist) {
                        wrap_vec(window, next.point(jb), pos, &mut k);
                        uf.union(jb as u32, im as u32, &k[..d]);
                    }
                });
            }
        }
        pts = Some(next);
        let n = pts.as_ref().unwrap().len();
        out.push(decide(&uf, criterion, n == 0));
        prev_val = val;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

/// Run one percolation trial with both intensities given.
///
/// An empty agent or hub process never percolates; the outcome is returned
/// with the `indeterminate` flag set rather than as an error.
pub fn percolation_trial(
    lambda: f64,
    mu: f64,
    spec: &ConnectionSpec,
    window: &Window,
    seed: u64,
    criterion: PercCriterion,
) -> Result<PercOutcome> {
    check_criterion(criterion)?;
    if !(lambda.is_finite() && lambda >= 0.0) || !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "intensities must be finite and >= 0, got lambda={lambda}, mu={mu}"
        )));
    }
    let res = run_rbg_chain(
        SweepParam::Mu,
        lambda,
        &[mu],
        spec,
        window,
        criterion,
        DEFAULT_EDGE_EPS,
        seed,
    )?;
    let (percolates, fraction, indeterminate) = res[0];
    Ok(PercOutcome {
        percolates,
        largest_component_agent_fraction: fraction,
        criterion,
        window: *window,
        seed,
        indeterminate,
    })
}

/// Sweep one intensity of the bipartite model over a grid at several window
/// sides and estimate the percolation threshold by finite-size crossing.
///
/// Windows are tori except for the span criterion, which uses open windows.
pub fn sweep(cfg: &SweepConfig, spec: &ConnectionSpec, seed: u64) -> Result<SweepResult> {
    cfg.validate()?;
    let boundary = sweep_boundary(cfg.criterion);
    let l_list = sorted_sides(&cfg.l_list)?;
    for &l in &l_list {
        let w = Window::new(cfg.d, l, boundary)?;
        check_window(&w, spec, cfg.criterion, cfg.eps_edge)?;
    }
    let chains = run_chains(&l_list, cfg.reps, seed, |li, rep_seed| {
        let window = Window::new(cfg.d, l_list[li], boundary)?;
        run_rbg_chain(
            cfg.swept,
            cfg.fixed_value,
            &cfg.grid,
            spec,
            &window,
            cfg.criterion,
            cfg.eps_edge,
            rep_seed,
        )
    })?;
    Ok(assemble(
        cfg.swept,
        Some(cfg.fixed_value),
        spec,
        cfg.d,
        cfg.criterion,
        cfg.grid.clone(),
        l_list,
        cfg.reps,
        seed,
        &chains,
    ))
}

/// Sweep the intensity of the unipartite model over an explicit grid and
/// estimate its percolation threshold by finite-size crossing.
pub fn zeta_sweep(
    spec: &ConnectionSpec,
    d: usize,
    grid: &[f64],
    l_list: &[f64],
    reps: usize,
    seed: u64,
) -> Result<SweepResult> {
    let cfg = SweepConfig {
        swept: SweepParam::Lambda,
        fixed_value: 0.0,
        grid: grid.to_vec(),
        l_list: l_list.to_vec(),
        reps,
        d,
        criterion: PercCriterion::Wrap,
        eps_edge: DEFAULT_EDGE_EPS,
    };
    cfg.validate()?;
    let l_list = sorted_sides(&cfg.l_list)?;
    for &l in &l_list {
        let w = Window::new(d, l, Boundary::Torus)?;
        check_window(&w, spec, cfg.criterion, cfg.eps_edge)?;
    }
    let chains = run_chains(&l_list, reps, seed, |li, rep_seed| {
        let window = Window::new(d, l_list[li], Boundary::Torus)?;
        run_uni_chain(&cfg.grid, spec, &window, cfg.criterion, cfg.eps_edge, rep_seed)
    })?;
    Ok(assemble(
        SweepParam::Lambda,
        None,
        spec,
        d,
        cfg.criterion,
        cfg.grid,
        l_list,
        reps,
        seed,
        &chains,
    ))
}

/// Estimate the unipartite percolation threshold with an automatically
/// chosen grid (see [`default_zeta_grid`]).
pub fn estimate_zeta(
    spec: &ConnectionSpec,
    d: usize,
    l_list: &[f64],
    reps: usize,
    seed: u64,
) -> Result<SweepResult> {
    let grid = default_zeta_grid(spec, d)?;
    zeta_sweep(spec, d, &grid, l_list, reps, seed)
}

/// Default intensity grid for unipartite threshold estimation: log-spaced
/// over mean degrees 1.2 to 16, which brackets the continuum percolation
/// threshold (mean degree about 4.5 for disks and lower for soft kernels)
/// with room for finite-size drift on both sides.
pub fn default_zeta_grid(spec: &ConnectionSpec, d: usize) -> Result<Vec<f64>> {
    let per_unit = radial_factor(d) * spec.moment_integral(d, 0)?;
    if !(per_unit > 0.0) {
        return Err(Error::InvalidParam("connection function has zero mass".into()));
    }
    let (lo, hi) = (1.2f64, 16.0f64);
    let n = 13;
    Ok((0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64) / per_unit)
        .collect())
}

fn sweep_boundary(criterion: PercCriterion) -> Boundary {
    match criterion {
        PercCriterion::Span => Boundary::Open,
        _ => Boundary::Torus,
    }
}

fn sorted_sides(l_list: &[f64]) -> Result<Vec<f64>> {
    let mut ls = l_list.to_vec();
    for &l in &ls {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidParam(format!("window side must be positive, got {l}")));
        }
    }
    ls.sort_by(f64::total_cmp);
    for pair in ls.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::InvalidParam(format!("duplicate window side {}", pair[0])));
        }
    }
    Ok(ls)
}

/// Run one coupled chain per (window side, replication), in parallel.
fn run_chains<F>(
    l_list: &[f64],
    reps: usize,
    seed: u64,
    run: F,
) -> Result<Vec<Vec<(bool, f64, bool)>>>
where
    F: Fn(usize, u64) -> Result<Vec<(bool, f64, bool)>> + Sync,
{
    (0..l_list.len() * reps)
        .into_par_iter()
        .map(|it| {
            let li = it / reps;
            let rep = it % reps;
            let rep_seed = substream(seed, &[LBL_TRIAL, li as u64, rep as u64]);
            run(li, rep_seed)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    param: SweepParam,
    fixed_value: Option<f64>,
    spec: &ConnectionSpec,
    d: usize,
    criterion: PercCriterion,
    grid: Vec<f64>,
    l_list: Vec<f64>,
    reps: usize,
    seed: u64,
    chains: &[Vec<(bool, f64, bool)>],
) -> SweepResult {
    let g = grid.len();
    let n_l = l_list.len();
    let mut points = Vec::with_capacity(n_l * g);
    for li in 0..n_l {
        for gi in 0..g {
            let mut hits = 0u32;
            let mut indet = 0u32;
            for rep in 0..reps {
                let (p, _, ind) = chains[li * reps + rep][gi];
                if p {
                    hits += 1;
                }
                if ind {
                    indet += 1;
                }
            }
            let (ci_lo, ci_hi) = wilson_ci(hits, reps as u32);
            points.push(SweepPoint {
                value: grid[gi],
                l: l_list[li],
                reps,
                hits,
                prob: hits as f64 / reps as f64,
                ci_lo,
                ci_hi,
                indeterminate: indet,
            });
        }
    }

    let mut threshold_estimate = None;
    let mut threshold_ci = None;
    if n_l >= 2 {
        let p_small: Vec<f64> = points[(n_l - 2) * g..(n_l - 1) * g].iter().map(|p| p.prob).collect();
        let p_big: Vec<f64> = points[(n_l - 1) * g..].iter().map(|p| p.prob).collect();
        threshold_estimate = crossing(&grid, &p_small, &p_big);
        if threshold_estimate.is_some() {
            let h_small: Vec<u32> =
                points[(n_l - 2) * g..(n_l - 1) * g].iter().map(|p| p.hits).collect();
            let h_big: Vec<u32> = points[(n_l - 1) * g..].iter().map(|p| p.hits).collect();
            threshold_ci = bootstrap_ci(&grid, &h_small, &h_big, reps, seed);
        }
    }
    let censored = threshold_estimate.is_none();
    SweepResult {
        param,
        fixed_value,
        spec: *spec,
        d,
        criterion,
        grid,
        l_list,
        reps,
        points,
        threshold_estimate,
        threshold_ci,
        censored,
        seed,
    }
}

/// Crossing of two probability curves: the larger window's curve sits below
/// the smaller window's in the subcritical region and above it in the
/// supercritical region, so the threshold is where their difference changes
/// sign. Linear interpolation inside the bracketing interval; with several
/// sign changes (noise) the bracket with the strongest evidence wins.
/// `None` when the curves do not cross.
fn crossing(grid: &[f64], p_small: &[f64], p_big: &[f64]) -> Option<f64> {
    let n = grid.len();
    let diff: Vec<f64> = (0..n).map(|i| p_big[i] - p_small[i]).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n.saturating_sub(1) {
        if diff[i] < 0.0 && diff[i + 1] >= 0.0 {
            let t = grid[i] + (grid[i + 1] - grid[i]) * (-diff[i]) / (diff[i + 1] - diff[i]);
            let score = diff[i + 1] - diff[i];
            if best.map_or(true, |(s, _)| score > s) {
                best = Some((score, t));
            }
        }
    }
    best.map(|(_, t)| t)
}

/// Parametric bootstrap for the crossing estimate: resample every point's
/// hit count as Binomial(reps, observed rate), recompute the crossing, and
/// take the central 95% of the resamples that cross. `None` when fewer than
/// half of them do.
fn bootstrap_ci(
    grid: &[f64],
    hits_small: &[u32],
    hits_big: &[u32],
    reps: usize,
    seed: u64,
) -> Option<(f64, f64)> {
    let mut rng = rng_from(seed, &[LBL_BOOT]);
    let n = reps as u64;
    let g = grid.len();
    let mut p_small = vec![0.0; g];
    let mut p_big = vec![0.0; g];
    let mut ts = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for i in 0..g {
            let bs = Binomial::new(n, hits_small[i] as f64 / n as f64)
                .expect("binomial rate is a valid probability");
            let bb = Binomial::new(n, hits_big[i] as f64 / n as f64)
                .expect("binomial rate is a valid probability");
            p_small[i] = bs.sample(&mut rng) as f64 / n as f64;
            p_big[i] = bb.sample(&mut rng) as f64 / n as f64;
        }
        if let Some(t) = crossing(grid, &p_small, &p_big) {
            ts.push(t);
        }
    }
    if ts.len() * 2 < BOOTSTRAP_RESAMPLES {
        return None;
    }
    ts.sort_by(f64::total_cmp);
    let last = ts.len() - 1;
    let lo = ts[(last as f64 * 0.025).round() as usize];
    let hi = ts[(last as f64 * 0.975).round() as usize];
    Some((lo, hi))
}

// ---------------------------------------------------------------------------
// bound checks
// ---------------------------------------------------------------------------

/// Consistency report of sweep estimates against the closed-form bounds.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    /// Product bound on lambda * mu from the branching-process comparison.
    pub gw_bound: f64,
    /// Unipartite threshold used for the sum bound, when one of the sweeps
    /// provides it for the same connection function.
    pub zeta_threshold: Option<f64>,
    pub zeta_ci: Option<(f64, f64)>,
    /// Confidently percolating sweep points that were checked.
    pub points_checked: usize,
    /// Dispersion-ordered threshold pairs that were checked.
    pub ordering_pairs_checked: usize,
    pub violations: Vec<String>,
}

impl BoundsReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check sweep results against the closed-form necessary conditions:
/// confidently percolating points must satisfy the product bound
/// `lambda * mu >= gw_lower_bound` and, when a unipartite threshold for the
/// same connection function is among the results, the sum bound
/// `lambda + mu >= zeta`; and thresholds across dispersion levels of one
/// family must be non-increasing as the dispersion parameter decreases.
/// A point is confidently percolating when the lower end of its Wilson
/// interval exceeds 0.25; threshold comparisons use the bootstrap CIs.
pub fn check_bounds(
    results: &[SweepResult],
    spec: &ConnectionSpec,
    d: usize,
) -> Result<BoundsReport> {
    let gw_bound = gw_lower_bound(spec, d)?.value;
    let zeta = results
        .iter()
        .find(|r| r.fixed_value.is_none() && !r.censored && r.spec == *spec && r.d == d);
    let zeta_threshold = zeta.and_then(|r| r.threshold_estimate);
    let zeta_ci = zeta.and_then(|r| r.threshold_ci);

    let mut violations = Vec::new();
    let mut points_checked = 0usize;

    for r in results.iter().filter(|r| r.fixed_value.is_some() && r.d == d) {
        let fixed = r.fixed_value.unwrap();
        let bound = gw_lower_bound(&r.spec, r.d)?.value;
        for p in &r.points {
            if p.ci_lo <= PERC_CI_FLOOR {
                continue;
            }
            points_checked += 1;
            let (lambda, mu) = match r.param {
                SweepParam::Lambda => (p.value, fixed),
                SweepParam::Mu => (fixed, p.value),
            };
            if lambda * mu < bound * (1.0 - 1e-9) {
                violations.push(format!(
                    "point lambda={lambda:.6} mu={mu:.6} at L={} percolates (P >= {:.3}) \
                     but lambda*mu={:.4} is below the product bound {:.4}",
                    p.l,
                    p.ci_lo,
                    lambda * mu,
                    bound
                ));
            }
            if r.spec == *spec {
                if let Some((z_lo, _)) = zeta_ci {
                    if lambda + mu < z_lo {
                        violations.push(format!(
                            "point lambda={lambda:.6} mu={mu:.6} at L={} percolates \
                             (P >= {:.3}) but lambda+mu={:.4} is below the unipartite \
                             threshold CI floor {:.4}",
                            p.l,
                            p.ci_lo,
                            lambda + mu,
                            z_lo
                        ));
                    }
                }
            }
        }
    }

    // thresholds across dispersion levels of one family: more dispersed
    // (smaller p) must not percolate later (larger threshold)
    let with_thresholds: Vec<&SweepResult> = results
        .iter()
        .filter(|r| {
            r.fixed_value.is_some()
                && r.d == d
                && !r.censored
                && r.threshold_estimate.is_some()
                && r.threshold_ci.is_some()
        })
        .collect();
    let mut ordering_pairs_checked = 0usize;
    for (ia, ra) in with_thresholds.iter().enumerate() {
        for rb in with_thresholds.iter().skip(ia + 1) {
            let comparable = ra.param == rb.param
                && ra.fixed_value == rb.fixed_value
                && ra.spec.family() == rb.spec.family()
                && ra.spec.dispersion() != rb.spec.dispersion();
            if !comparable {
                continue;
            }
            // hi = larger dispersion parameter (less dispersed)
            let (hi, lo) = if ra.spec.dispersion() > rb.spec.dispersion() {
                (ra, rb)
            } else {
                (rb, ra)
            };
            ordering_pairs_checked += 1;
            let (lo_ci_lo, _) = lo.threshold_ci.unwrap();
            let (_, hi_ci_hi) = hi.threshold_ci.unwrap();
            if lo_ci_lo > hi_ci_hi {
                violations.push(format!(
                    "dispersion {} threshold [{:.4}, ..] exceeds dispersion {} threshold \
                     [.., {:.4}]: more dispersed percolates confidently later",
                    lo.spec.dispersion(),
                    lo_ci_lo,
                    hi.spec.dispersion(),
                    hi_ci_hi
                ));
            }
        }
    }

    Ok(BoundsReport {
        gw_bound,
        zeta_threshold,
        zeta_ci,
        points_checked,
        ordering_pairs_checked,
        violations,
    })
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::ConnectionSpec;

    fn torus(side: f64) -> Window {
        Window::new(2, side, Boundary::Torus).unwrap()
    }

    #[test]
    fn wrap_uf_detects_winding_and_accepts_flat_cycles() {
        // a 4-cycle whose last edge crosses the boundary: winding number 1
        let mut uf = WrapUf::new(2);
        for _ in 0..4 {
            uf.push(true, 0);
        }
        uf.union(0, 1, &[0, 0]);
        uf.union(1, 2, &[0, 0]);
        uf.union(2, 3, &[0, 0]);
        assert!(!uf.any_wrap);
        uf.union(3, 0, &[1, 0]);
        assert!(uf.any_wrap);

        // a cycle whose crossings cancel stays flat
        let mut uf = WrapUf::new(2);
        for _ in 0..3 {
            uf.push(true, 0);
        }
        uf.union(0, 1, &[1, 0]);
        uf.union(1, 2, &[-1, 0]);
        uf.union(2, 0, &[0, 0]);
        assert!(!uf.any_wrap);
        assert_eq!(uf.max_agents, 3);

        // duplicate edge carries the same relation: no spurious wrap
        let mut uf = WrapUf::new(2);
        uf.push(true, 0);
        uf.push(true, 0);
        uf.union(0, 1, &[1, 0]);
        uf.union(0, 1, &[1, 0]);
        assert!(!uf.any_wrap);
        // the reversed orientation of the same edge is also consistent
        uf.union(1, 0, &[-1, 0]);
        assert!(!uf.any_wrap);
        // a genuinely different relation between the same vertices wraps
        uf.union(0, 1, &[0, 0]);
        assert!(uf.any_wrap);
    }

    #[test]
    fn span_masks_merge_and_trigger() {
        let w = Window::new(2, 10.0, Boundary::Open).unwrap();
        // slab width 1: touches the low x-face
        let m_lo = slab_mask(&w, &[-4.5, 0.0], 1.0);
        let m_hi = slab_mask(&w, &[4.5, 0.0], 1.0);
        let m_mid = slab_mask(&w, &[0.0, 0.0], 1.0);
        assert_eq!(m_lo, 0b01);
        assert_eq!(m_hi, 0b10);
        assert_eq!(m_mid, 0);
        let mut uf = WrapUf::new(2);
        uf.push(true, m_lo);
        uf.push(true, m_mid);
        uf.push(true, m_hi);
        uf.union(0, 1, &[0, 0]);
        assert!(!uf.any_span);
        uf.union(1, 2, &[0, 0]);
        assert!(uf.any_span);
    }

    #[test]
    fn empty_process_is_indeterminate_not_error() {
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        let w = torus(4.0);
        for (lam, mu) in [(0.0, 5.0), (5.0, 0.0), (0.0, 0.0)] {
            let out = percolation_trial(lam, mu, &spec, &w, 9, PercCriterion::Wrap).unwrap();
            assert!(!out.percolates);
            assert!(out.indeterminate);
            let frac = out.largest_component_agent_fraction;
            if lam == 0.0 {
                assert_eq!(frac, 0.0);
            } else {
                // agents present but no hubs: all singletons
                assert!(frac > 0.0 && frac <= 1.0);
            }
        }
    }

    #[test]
    fn preconditions_are_enforced() {
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        let open = Window::new(2, 4.0, Boundary::Open).unwrap();
        assert!(matches!(
            percolation_trial(1.0, 1.0, &spec, &open, 1, PercCriterion::Wrap),
            Err(Error::InvalidParam(_))
        ));
        // torus needs radius < side/4
        let small = torus(1.0);
        assert!(matches!(
            percolation_trial(1.0, 1.0, &spec, &small, 1, PercCriterion::Wrap),
            Err(Error::TruncationTooLarge { .. })
        ));
        for bad in [0.0, -0.1, 1.5] {
            assert!(matches!(
                percolation_trial(1.0, 1.0, &spec, &torus(4.0), 1, PercCriterion::Fraction(bad)),
                Err(Error::InvalidParam(_))
            ));
        }
        // fraction of exactly 1 is a legal (strict) cutoff
        percolation_trial(1.0, 1.0, &spec, &torus(4.0), 1, PercCriterion::Fraction(1.0)).unwrap();
    }

    #[test]
    fn dense_wraps_and_sparse_does_not() {
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        let w = torus(4.0);
        let mut dense_wraps = 0;
        let mut sparse_wraps = 0;
        for seed in 0..6 {
            let dense = percolation_trial(50.0, 50.0, &spec, &w, seed, PercCriterion::Wrap).unwrap();
            if dense.percolates {
                dense_wraps += 1;
            }
            assert!(dense.largest_component_agent_fraction > 0.5);
            let sparse = percolation_trial(0.5, 0.5, &spec, &w, seed, PercCriterion::Wrap).unwrap();
            if sparse.percolates {
                sparse_wraps += 1;
            }
        }
        assert!(dense_wraps >= 5, "dense phase wrapped only {dense_wraps}/6");
        assert_eq!(sparse_wraps, 0);
    }

    #[test]
    fn span_and_fraction_criteria_fire_when_dense() {
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        let open = Window::new(2, 4.0, Boundary::Open).unwrap();
        let span = percolation_trial(50.0, 50.0, &spec, &open, 3, PercCriterion::Span).unwrap();
        assert!(span.percolates);
        let frac =
            percolation_trial(50.0, 50.0, &spec, &torus(4.0), 3, PercCriterion::Fraction(0.3))
                .unwrap();
        assert!(frac.percolates);
        let sparse =
            percolation_trial(0.2, 0.2, &spec, &torus(4.0), 3, PercCriterion::Fraction(0.3))
                .unwrap();
        assert!(!sparse.percolates);
    }

    #[test]
    fn trial_is_deterministic_and_exponential_family_runs() {
        let spec = ConnectionSpec::exponential(0.04).unwrap();
        let w = torus(4.0);
        let a = percolation_trial(30.0, 30.0, &spec, &w, 77, PercCriterion::Wrap).unwrap();
        let b = percolation_trial(30.0, 30.0, &spec, &w, 77, PercCriterion::Wrap).unwrap();
        assert_eq!(a.percolates, b.percolates);
        assert_eq!(
            a.largest_component_agent_fraction.to_bits(),
            b.largest_component_agent_fraction.to_bits()
        );
        assert!(a.largest_component_agent_fraction >= 0.0);
        assert!(a.largest_component_agent_fraction <= 1.0);
    }

    #[test]
    fn wrap_probability_bounded_by_fraction_probability() {
        // near criticality the wrap event is rarer than a 30% giant
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        let w = torus(4.0);
        let mut wraps = 0;
        let mut giants = 0;
        for seed in 0..40 {
            let out = percolation_trial(4.0, 4.0, &spec, &w, seed, PercCriterion::Wrap).unwrap();
            if out.percolates {
                wraps += 1;
            }
            if out.largest_component_agent_fraction >= 0.3 {
                giants += 1;
            }
        }
        assert!(
            wraps <= giants + 4,
            "wrap fired {wraps}/40 but a 30% giant only {giants}/40"
        );
    }

    #[test]
    fn single_point_sweep_matches_trial() {
        let spec = ConnectionSpec::boolean(0.25).unwrap();
        let mut cfg = SweepConfig::new(SweepParam::Mu, 3.0, vec![2.0], vec![4.0]);
        cfg.reps = 1;
        let master = 42;
        let sr = sweep(&cfg, &spec, master).unwrap();
        assert_eq!(sr.points.len(), 1);
        let rep_seed = substream(master, &[LBL_TRIAL, 0, 0]);
        let out =
            percolation_trial(3.0, 2.0, &spec, &torus(4.0), rep_seed, PercCriterion::Wrap).unwrap();
        assert_eq!(sr.points[0].hits == 1, out.percolates);
        assert!(sr.censored);
        assert!(sr.threshold_estimate.is_none());
    }

    #[test]
    fn coupled_chain_indicators_are_monotone() {
        // reps = 1 exposes the raw pathwise indicators: superposition
        // coupling must make them non-decreasing along the grid
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        for master in 0..5 {
            let mut cfg = SweepConfig::new(
                SweepParam::Mu,
                40.0,
                vec![0.5, 2.0, 8.0, 32.0],
                vec![4.0],
            );
            cfg.reps = 1;
            let sr = sweep(&cfg, &spec, master).unwrap();
            let probs: Vec<f64> = sr.points.iter().map(|p| p.prob).collect();
            for pair in probs.windows(2) {
                assert!(
                    pair[1] >= pair[0],
                    "indicators decreased along the coupled grid: {probs:?}"
                );
            }
        }
    }

    #[test]
    fn crossing_interpolates_and_censors() {
        let grid = [1.0, 2.0, 3.0, 4.0];
        let p_small = [0.8, 0.6, 0.2, 0.1];
        let p_big = [0.2, 0.3, 0.5, 0.9];
        let t = crossing(&grid, &p_small, &p_big).unwrap();
        assert!((t - 2.5).abs() < 1e-12);

        // no crossing: big-window curve stays below
        assert!(crossing(&grid, &[0.5, 0.6, 0.7, 0.8], &[0.1, 0.2, 0.3, 0.4]).is_none());
        // flat zero curves never cross
        assert!(crossing(&grid, &[0.0; 4], &[0.0; 4]).is_none());

        // two brackets: the stronger one wins
        let p_small = [0.3, 0.15, 0.5, 0.1];
        let p_big = [0.2, 0.2, 0.2, 0.7];
        // diffs: -0.1, +0.05, -0.3, +0.6 -> brackets (0,1) score 0.15 and
        // (2,3) score 0.9; the latter interpolates at 3 + 0.3/0.9
        let t = crossing(&grid, &p_small, &p_big).unwrap();
        assert!((t - (3.0 + 0.3 / 0.9)).abs() < 1e-12);
    }

    #[test]
    fn gilbert_threshold_is_where_expected() {
        // unit-disk unipartite graph: the percolation threshold sits near
        // mean degree 4.5, i.e. intensity ~1.44; a coarse small-window run
        // must land in that neighbourhood, uncensored
        let spec = ConnectionSpec::boolean(1.0).unwrap();
        let zr = estimate_zeta(&spec, 2, &[6.0, 12.0], 80, 2024).unwrap();
        assert!(!zr.censored);
        let t = zr.threshold_estimate.unwrap();
        assert!(t > 0.7 && t < 2.5, "gilbert threshold estimate {t}");
        let (lo, hi) = zr.threshold_ci.unwrap();
        assert!(lo <= t && t <= hi);
        assert_eq!(zr.fixed_value, None);
        // curves are (statistically) increasing: the last grid point is
        // deep in the supercritical phase for both window sides
        let n_l = zr.l_list.len();
        for li in 0..n_l {
            let curve = zr.curve(li);
            assert!(curve[curve.len() - 1] > 0.9, "curve tail {curve:?}");
        }
    }

    #[test]
    fn rbg_sweep_is_symmetric_in_the_two_intensities() {
        // the bipartite model is exchangeable in (lambda, mu), so sweeping
        // lambda at fixed mu=v and mu at fixed lambda=v must agree
        let spec = ConnectionSpec::boolean(0.4).unwrap();
        let grid: Vec<f64> = (0..10).map(|i| 0.5 * (48.0f64).powf(i as f64 / 9.0)).collect();
        let mut cfg_a = SweepConfig::new(SweepParam::Lambda, 4.0, grid.clone(), vec![4.0, 8.0]);
        cfg_a.reps = 150;
        let mut cfg_b = cfg_a.clone();
        cfg_b.swept = SweepParam::Mu;
        let ra = sweep(&cfg_a, &spec, 7).unwrap();
        let rb = sweep(&cfg_b, &spec, 8).unwrap();
        assert!(!ra.censored && !rb.censored);
        let (alo, ahi) = ra.threshold_ci.unwrap();
        let (blo, bhi) = rb.threshold_ci.unwrap();
        assert!(
            alo <= bhi && blo <= ahi,
            "threshold CIs disjoint: [{alo}, {ahi}] vs [{blo}, {bhi}]"
        );
    }

    #[test]
    fn check_bounds_flags_violations_and_passes_clean_results() {
        let spec = ConnectionSpec::boolean(0.2122).unwrap();
        let bound = gw_lower_bound(&spec, 2).unwrap().value;
        let point = |value: f64, prob: f64, ci_lo: f64| SweepPoint {
            value,
            l: 16.0,
            reps: 200,
            hits: (prob * 200.0) as u32,
            prob,
            ci_lo,
            ci_hi: (prob + 0.05).min(1.0),
            indeterminate: 0,
        };
        let base = |fixed: f64, points: Vec<SweepPoint>, spec: ConnectionSpec| SweepResult {
            param: SweepParam::Mu,
            fixed_value: Some(fixed),
            spec,
            d: 2,
            criterion: PercCriterion::Wrap,
            grid: points.iter().map(|p| p.value).collect(),
            l_list: vec![8.0, 16.0],
            reps: 200,
            points,
            threshold_estimate: Some(5.0),
            threshold_ci: Some((4.0, 6.0)),
            censored: false,
            seed: 0,
        };

        // clean: percolating point well above the product bound
        let clean = base(10.0, vec![point(bound / 10.0 * 2.0, 0.9, 0.8)], spec);
        let report = check_bounds(&[clean], &spec, 2).unwrap();
        assert!(report.ok(), "unexpected violations: {:?}", report.violations);
        assert_eq!(report.points_checked, 1);

        // a confidently percolating point below the product bound is flagged
        let dirty = base(2.0, vec![point(bound / 2.0 * 0.2, 0.9, 0.8)], spec);
        let report = check_bounds(&[dirty], &spec, 2).unwrap();
        assert_eq!(report.violations.len(), 1);

        // dispersion ordering: smaller p with confidently larger threshold
        let sp_half = spec.with_dispersion(0.5).unwrap();
        let mut a = base(10.0, vec![point(bound, 0.9, 0.8)], spec);
        a.threshold_estimate = Some(5.0);
        a.threshold_ci = Some((4.5, 5.5));
        let mut b = base(10.0, vec![point(bound, 0.9, 0.8)], sp_half);
        b.threshold_estimate = Some(8.0);
        b.threshold_ci = Some((7.0, 9.0));
        let report = check_bounds(&[a.clone(), b], &spec, 2).unwrap();
        assert_eq!(report.ordering_pairs_checked, 1);
        assert_eq!(report.violations.len(), 1);

        // consistent ordering passes
        let mut c = base(10.0, vec![point(bound, 0.9, 0.8)], sp_half);
        c.threshold_estimate = Some(4.0);
        c.threshold_ci = Some((3.5, 4.5));
        let report = check_bounds(&[a, c], &spec, 2).unwrap();
        assert!(report.ok());
    }

    #[test]
    fn sweep_csv_rows_follow_schema() {
        assert_eq!(SweepResult::csv_header(), "param,value,L,reps,perc_prob,ci_lo,ci_hi");
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        let mut cfg = SweepConfig::new(SweepParam::Mu, 2.0, vec![1.0, 2.0], vec![4.0]);
        cfg.reps = 3;
        let sr = sweep(&cfg, &spec, 5).unwrap();
        let rows = sr.csv_rows();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.split(',').count(), 7);
            assert!(row.starts_with("mu,"));
        }
        // JSON serialization carries the censoring flag and spec string
        let js = serde_json::to_string(&sr).unwrap();
        assert!(js.contains("\"censored\":true"));
        assert!(js.contains("\"spec\":\"boolean:0.3\""));
    }

    #[test]
    fn sweep_rejects_bad_configs() {
        let spec = ConnectionSpec::boolean(0.3).unwrap();
        let cases = [
            SweepConfig::new(SweepParam::Mu, 2.0, vec![], vec![4.0]),
            SweepConfig::new(SweepParam::Mu, 2.0, vec![2.0, 1.0], vec![4.0]),
            SweepConfig::new(SweepParam::Mu, 2.0, vec![1.0, 1.0], vec![4.0]),
            SweepConfig::new(SweepParam::Mu, -1.0, vec![1.0], vec![4.0]),
            SweepConfig::new(SweepParam::Mu, 2.0, vec![1.0], vec![]),
            SweepConfig::new(SweepParam::Mu, 2.0, vec![1.0], vec![4.0, 4.0]),
        ];
        for cfg in cases {
            assert!(sweep(&cfg, &spec, 1).is_err(), "accepted bad config {cfg:?}");
        }
        let mut zero_reps = SweepConfig::new(SweepParam::Mu, 2.0, vec![1.0], vec![4.0]);
        zero_reps.reps = 0;
        assert!(sweep(&zero_reps, &spec, 1).is_err());
    }
}

