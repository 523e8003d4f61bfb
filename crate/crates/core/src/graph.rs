//! Random bipartite geometric graphs and their unipartite cousins.
//!
//! Construction contract: for every agent-hub pair within the connection
//! function's truncation radius, draw an independent Bernoulli with success
//! probability `f(distance)`. The Bernoulli uniform is keyed by
//! `(seed, agent index, hub index)` (see [`crate::rng::pair_u01`]), which
//! makes edge indicators independent of enumeration order and gives literal
//! pathwise monotone couplings: raising the connection function (or adding
//! points via superposition) can only add edges.
//!
//! Candidate pairs are generated with a spatial hash whose cell side is at
//! least the truncation radius, so scanning the 3^d neighbouring cells of a
//! probe point covers its whole interaction ball.

use crate::connection::{ConnectionSpec, Shape};
use crate::error::{Error, Result};
use crate::pointprocess::{Boundary, PointKind, PointSet, Window};
use crate::rng;
use std::io::{self, Write};

/// Default truncated-mass tolerance for edge generation.
pub const DEFAULT_EDGE_EPS: f64 = 1e-9;

/// Grids with more axes than this fall back to a single cell (all pairs).
const MAX_GRID_D: usize = 8;

/// One bipartite edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub agent: u32,
    pub hub: u32,
    pub dist: f64,
}

/// Bipartite agent-hub graph.
#[derive(Debug, Clone, PartialEq)]
pub struct RbgGraph {
    pub window: Window,
    pub n_agents: usize,
    pub n_hubs: usize,
    /// Sorted by (agent, hub).
    pub edges: Vec<Edge>,
}

/// Unipartite geometric graph built with the same connection machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct UniGraph {
    pub window: Window,
    pub n: usize,
    /// Sorted by (a, b) with a < b.
    pub edges: Vec<(u32, u32, f64)>,
}

// ---------------------------------------------------------------------------
// spatial hash
// ---------------------------------------------------------------------------

pub(crate) struct CellGrid<'a> {
    points: &'a PointSet,
    m: usize,
    cell_inv: f64,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> CellGrid<'a> {
    /// Build a grid whose cell side is >= `radius` (coarser is allowed and
    /// only costs extra candidate checks, never correctness).
    pub(crate) fn build(points: &'a PointSet, radius: f64) -> CellGrid<'a> {
        let w = points.window();
        let d = w.d();
        let n = points.len();
        let mut m = if d > MAX_GRID_D || radius >= w.side() {
            1
        } else {
            (w.side() / radius).floor() as usize
        };
        m = m.max(1);
        // keep the table near the point count: more cells than ~8n wastes memory
        let cap = (8 * n + 64) as f64;
        while m > 1 && (m as f64).powi(d as i32) > cap {
            m -= (m / 4).max(1);
        }
        let n_cells = m.pow(d as u32);

        let mut counts = vec![0u32; n_cells + 1];
        let mut cell_of = vec![0u32; n];
        for i in 0..n {
            let c = Self::cell_index(w, m, points.point(i));
            cell_of[i] = c as u32;
            counts[c + 1] += 1;
        }
        for c in 0..n_cells {
            counts[c + 1] += counts[c];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut items = vec![0u32; n];
        for i in 0..n {
            let c = cell_of[i] as usize;
            items[cursor[c] as usize] = i as u32;
            cursor[c] += 1;
        }
        CellGrid { points, m, cell_inv: m as f64 / w.side(), offsets, items }
    }

    #[inline(always)]
    fn cell_index(w: &Window, m: usize, x: &[f64]) -> usize {
        let half = w.half();
        let inv = m as f64 / w.side();
        let mut id = 0usize;
        for k in (0..x.len()).rev() {
            let c = (((x[k] + half) * inv) as usize).min(m - 1);
            id = id * m + c;
        }
        id
    }

    /// Visit every stored point within `radius` of `probe` (by the window's
    /// boundary rule), in deterministic cell-then-index order.
    pub(crate) fn for_each_within<F: FnMut(u32, f64)>(&self, probe: &[f64], radius: f64, mut f: F) {
        let w = self.points.window();
        let d = w.d();
        let m = self.m;
        let half = w.half();
        let r2 = radius * radius;
        let torus = w.boundary() == Boundary::Torus;

        // per-axis neighbour cell candidates (deduplicated)
        let mut lists = [[0usize; 3]; MAX_GRID_D];
        let mut lens = [0usize; MAX_GRID_D];
        for k in 0..d {
            let c = (((probe[k] + half) * self.cell_inv) as usize).min(m - 1);
            let mut push = |v: usize, lk: &mut usize| {
                let l = &mut lists[k];
                if !l[..*lk].contains(&v) {
                    l[*lk] = v;
                    *lk += 1;
                }
            };
            let mut lk = 0usize;
            if torus {
                push((c + m - 1) % m, &mut lk);
                push(c, &mut lk);
                push((c + 1) % m, &mut lk);
            } else {
                if c > 0 {
                    push(c - 1, &mut lk);
                }
                push(c, &mut lk);
                if c + 1 < m {
                    push(c + 1, &mut lk);
                }
            }
            lens[k] = lk;
        }

        // mixed-radix walk over the neighbour block
        let mut sel = [0usize; MAX_GRID_D];
        'outer: loop {
            let mut id = 0usize;
            for k in (0..d).rev() {
                id = id * m + lists[k][sel[k]];
            }
            let lo = self.offsets[id] as usize;
            let hi = self.offsets[id + 1] as usize;
            for &i in &self.items[lo..hi] {
                let dist2 = w.distance_sq(probe, self.points.point(i as usize));
                if dist2 <= r2 {
                    f(i, dist2.sqrt());
                }
            }
            let mut k = 0;
            loop {
                sel[k] += 1;
                if sel[k] < lens[k] {
                    break;
                }
                sel[k] = 0;
                k += 1;
                if k == d {
                    break 'outer;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// edge generation
// ---------------------------------------------------------------------------

fn check_windows(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.window() != b.window() {
        return Err(Error::WindowMismatch);
    }
    Ok(())
}

fn check_truncation(w: &Window, radius: f64) -> Result<()> {
    if w.boundary() == Boundary::Torus && radius >= w.side() / 2.0 {
        return Err(Error::TruncationTooLarge { radius, limit: w.side() / 2.0 });
    }
    Ok(())
}

/// Edge decision for a single pair, shared by every code path that realizes
/// edges (graph builders, Palm-conditioned degree counts, incremental
/// percolation): deterministic for full-amplitude indicators, otherwise a
/// pair-keyed Bernoulli thinned at the truncation radius. Because the
/// uniform is a pure function of `(seed, domain, i, j)`, any two callers
/// that agree on indices and seed agree on every edge.
pub(crate) struct EdgeRule {
    eff: crate::connection::Effective,
    deterministic: bool,
    pub(crate) scan_radius: f64,
    domain: u64,
}

impl EdgeRule {
    pub(crate) fn bipartite(spec: &ConnectionSpec, d: usize, radius: f64) -> EdgeRule {
        EdgeRule::with_domain(spec, d, radius, rng::DOMAIN_BIPARTITE)
    }

    pub(crate) fn unipartite(spec: &ConnectionSpec, d: usize, radius: f64) -> EdgeRule {
        EdgeRule::with_domain(spec, d, radius, rng::DOMAIN_UNIPARTITE)
    }

    fn with_domain(spec: &ConnectionSpec, d: usize, radius: f64, domain: u64) -> EdgeRule {
        let eff = spec.effective(d);
        let deterministic = eff.shape == Shape::Indicator && eff.amp >= 1.0;
        let scan_radius = if deterministic { eff.theta } else { radius };
        EdgeRule { eff, deterministic, scan_radius, domain }
    }

    #[inline(always)]
    pub(crate) fn connects(&self, seed: u64, i: u64, j: u64, dist: f64) -> bool {
        if dist > self.scan_radius {
            return false;
        }
        if self.deterministic {
            return true;
        }
        let p = self.eff.eval(dist);
        p > 0.0 && rng::pair_u01(seed, self.domain, i, j) < p
    }
}

/// Visit candidate agent-hub pairs within `radius`; callback gets
/// `(agent index, hub index, distance)`. The denser side is gridded and the
/// sparser side probed, so emission order depends on the size relation —
/// callers that need canonical order must sort.
fn for_each_candidate_pair<F: FnMut(u32, u32, f64)>(
    agents: &PointSet,
    hubs: &PointSet,
    radius: f64,
    mut f: F,
) {
    if agents.len() == 0 || hubs.len() == 0 {
        return;
    }
    if agents.len() >= hubs.len() {
        let grid = CellGrid::build(agents, radius);
        for j in 0..hubs.len() {
            grid.for_each_within(hubs.point(j), radius, |i, dist| f(i, j as u32, dist));
        }
    } else {
        let grid = CellGrid::build(hubs, radius);
        for i in 0..agents.len() {
            grid.for_each_within(agents.point(i), radius, |j, dist| f(i as u32, j, dist));
        }
    }
}

/// Stream the edges of the bipartite graph without materializing it.
///
/// This is the single source of edge truth: graph builders collect from it
/// and percolation unions straight out of it, so both see byte-identical
/// edge decisions for a given `(points, spec, seed)`.
pub(crate) fn for_each_edge<F: FnMut(u32, u32, f64)>(
    agents: &PointSet,
    hubs: &PointSet,
    spec: &ConnectionSpec,
    seed: u64,
    eps_edge: f64,
    mut f: F,
) -> Result<()> {
    check_windows(agents, hubs)?;
    if agents.kind() != PointKind::Agent || hubs.kind() != PointKind::Hub {
        return Err(Error::InvalidParam("expected (agent, hub) point sets in that order".into()));
    }
    let d = agents.window().d();
    let radius = spec.effective_support(d, eps_edge)?.radius;
    check_truncation(agents.window(), radius)?;
    let rule = EdgeRule::bipartite(spec, d, radius);
    for_each_candidate_pair(agents, hubs, rule.scan_radius, |i, j, dist| {
        if rule.connects(seed, i as u64, j as u64, dist) {
            f(i, j, dist);
        }
    });
    Ok(())
}

/// Unipartite analogue of [`for_each_edge`] (each unordered pair considered
/// once; callback receives `a < b`).
pub(crate) fn for_each_edge_uni<F: FnMut(u32, u32, f64)>(
    points: &PointSet,
    spec: &ConnectionSpec,
    seed: u64,
    eps_edge: f64,
    mut f: F,
) -> Result<()> {
    let d = points.window().d();
    let radius = spec.effective_support(d, eps_edge)?.radius;
    check_truncation(points.window(), radius)?;
    let rule = EdgeRule::unipartite(spec, d, radius);
    if points.len() == 0 {
        return Ok(());
    }
    let grid = CellGrid::build(points, rule.scan_radius);
    for a in 0..points.len() as u32 {
        grid.for_each_within(points.point(a as usize), rule.scan_radius, |b, dist| {
            if b > a && rule.connects(seed, a as u64, b as u64, dist) {
                f(a, b, dist);
            }
        });
    }
    Ok(())
}

/// Build the bipartite graph on the given point sets.
pub fn build_rbg(
    agents: &PointSet,
    hubs: &PointSet,
    spec: &ConnectionSpec,
    seed: u64,
    eps_edge: f64,
) -> Result<RbgGraph> {
    let mut edges = Vec::new();
    for_each_edge(agents, hubs, spec, seed, eps_edge, |i, j, dist| {
        edges.push(Edge { agent: i, hub: j, dist });
    })?;
    edges.sort_unstable_by(|a, b| (a.agent, a.hub).cmp(&(b.agent, b.hub)));
    Ok(RbgGraph {
        window: *agents.window(),
        n_agents: agents.len(),
        n_hubs: hubs.len(),
        edges,
    })
}

/// Build a unipartite geometric graph (e.g. a Gilbert disk model via
/// `boolean:<radius>`) with the same candidate and Bernoulli machinery.
pub fn build_unipartite(
    points: &PointSet,
    spec: &ConnectionSpec,
    seed: u64,
    eps_edge: f64,
) -> Result<UniGraph> {
    let mut edges = Vec::new();
    for_each_edge_uni(points, spec, seed, eps_edge, |a, b, dist| {
        edges.push((a, b, dist));
    })?;
    edges.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
    Ok(UniGraph { window: *points.window(), n: points.len(), edges })
}

// ---------------------------------------------------------------------------
// graph queries
// ---------------------------------------------------------------------------

impl RbgGraph {
    pub fn n_vertices(&self) -> usize {
        self.n_agents + self.n_hubs
    }

    /// Degree of every hub.
    pub fn hub_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n_hubs];
        for e in &self.edges {
            deg[e.hub as usize] += 1;
        }
        deg
    }

    /// Degree of every agent.
    pub fn agent_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n_agents];
        for e in &self.edges {
            deg[e.agent as usize] += 1;
        }
        deg
    }

    /// Hubs adjacent to `agent` (edges are agent-sorted, so this is a scan
    /// of a contiguous run).
    pub fn hubs_of_agent(&self, agent: u32) -> Vec<u32> {
        let start = self.edges.partition_point(|e| e.agent < agent);
        self.edges[start..]
            .iter()
            .take_while(|e| e.agent == agent)
            .map(|e| e.hub)
            .collect()
    }

    /// Distinct agents reachable from `agent` through exactly one hub,
    /// excluding `agent` itself. Its length is the observable `M`.
    pub fn agent_neighbors_via_hubs(&self, agent: u32) -> Vec<u32> {
        let hubs = self.hubs_of_agent(agent);
        let mut is_mine = vec![false; self.n_hubs];
        for &h in &hubs {
            is_mine[h as usize] = true;
        }
        let mut out: Vec<u32> = self
            .edges
            .iter()
            .filter(|e| is_mine[e.hub as usize] && e.agent != agent)
            .map(|e| e.agent)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Two-hop observables of `agent`: `M` = distinct agents sharing a hub,
    /// `N` = two-edge paths leaving `agent` (counts multiplicity).
    pub fn mn_at_agent(&self, agent: u32) -> (u32, u32) {
        let hubs = self.hubs_of_agent(agent);
        let deg = self.hub_degrees();
        let n: u32 = hubs.iter().map(|&h| deg[h as usize] - 1).sum();
        let m = self.agent_neighbors_via_hubs(agent).len() as u32;
        (m, n)
    }
}

// ---------------------------------------------------------------------------
// components
// ---------------------------------------------------------------------------

pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        // path halving
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    pub(crate) fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        true
    }
}

/// Connected-component labelling of the bipartite graph. Vertices are
/// indexed agents-first: agent `i` is vertex `i`, hub `j` is vertex
/// `n_agents + j`. Isolated vertices form singleton components.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentLabeling {
    pub labels: Vec<u32>,
    pub n_components: usize,
    /// Component sizes counting agents and hubs together.
    pub total_sizes: Vec<u32>,
    /// Component sizes counting agents only (epidemiological size).
    pub agent_sizes: Vec<u32>,
}

pub fn connected_components(g: &RbgGraph) -> ComponentLabeling {
    let n = g.n_vertices();
    let mut uf = UnionFind::new(n);
    for e in &g.edges {
        uf.union(e.agent, g.n_agents as u32 + e.hub);
    }
    let mut labels = vec![u32::MAX; n];
    let mut total_sizes = Vec::new();
    let mut agent_sizes = Vec::new();
    let mut next = 0u32;
    for v in 0..n as u32 {
        let root = uf.find(v);
        let label = if labels[root as usize] == u32::MAX {
            labels[root as usize] = next;
            total_sizes.push(0);
            agent_sizes.push(0);
            next += 1;
            next - 1
        } else {
            labels[root as usize]
        };
        labels[v as usize] = label;
        total_sizes[label as usize] += 1;
        if (v as usize) < g.n_agents {
            agent_sizes[label as usize] += 1;
        }
    }
    ComponentLabeling { labels, n_components: next as usize, total_sizes, agent_sizes }
}

// ---------------------------------------------------------------------------
// dumps
// ---------------------------------------------------------------------------

/// JSON header accompanying an edge dump.
#[derive(Debug, serde::Serialize)]
pub struct DumpHeader {
    pub version: String,
    pub window_side: f64,
    pub d: usize,
    pub boundary: Boundary,
    pub spec: String,
    pub seed: u64,
    pub eps_edge: f64,
    pub n_agents: usize,
    pub n_hubs: usize,
    pub n_edges: usize,
}

impl RbgGraph {
    pub fn dump_header(&self, spec: &ConnectionSpec, seed: u64, eps_edge: f64) -> DumpHeader {
        DumpHeader {
            version: env!("CARGO_PKG_VERSION").to_string(),
            window_side: self.window.side(),
            d: self.window.d(),
            boundary: self.window.boundary(),
            spec: spec.to_string(),
            seed,
            eps_edge,
            n_agents: self.n_agents,
            n_hubs: self.n_hubs,
            n_edges: self.edges.len(),
        }
    }

    /// Edge list as CSV (`agent,hub,distance`).
    pub fn write_edges_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "agent,hub,distance")?;
        for e in &self.edges {
            writeln!(w, "{},{},{}", e.agent, e.hub, e.dist)?;
        }
        Ok(())
    }
}

/// Point coordinates as CSV (`kind,index,x0,...,x{d-1}`).
pub fn write_points_csv<W: Write>(agents: &PointSet, hubs: &PointSet, w: &mut W) -> io::Result<()> {
    let d = agents.window().d();
    let axes: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
    writeln!(w, "kind,index,{}", axes.join(","))?;
    for (kind, ps) in [("agent", agents), ("hub", hubs)] {
        for i in 0..ps.len() {
            let coords: Vec<String> = ps.point(i).iter().map(|c| c.to_string()).collect();
            writeln!(w, "{kind},{i},{}", coords.join(","))?;
        }
    }
    Ok(())
}
