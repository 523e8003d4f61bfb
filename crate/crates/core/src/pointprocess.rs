//! Poisson point processes on cubic windows with torus or open boundaries.
//!
//! Windows are axis-aligned cubes centred at the origin, so Palm
//! conditioning (adding a point *at* the origin) needs no window surgery.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use rand_distr::Distribution;

/// Refuse draws whose expected point count exceeds this cap.
pub const MAX_EXPECTED_POINTS: f64 = 1e8;

/// Boundary rule of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Distances wrap modulo the side length (used for percolation runs).
    Torus,
    /// Plain Euclidean distances (used for Palm-point degree studies).
    Open,
}

/// Axis-aligned cube `[-side/2, side/2)^d` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Window {
    d: usize,
    side: f64,
    boundary: Boundary,
}

impl Window {
    pub fn new(d: usize, side: f64, boundary: Boundary) -> Result<Window> {
        if d == 0 {
            return Err(Error::InvalidParam("dimension must be >= 1".into()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParam(format!("window side must be positive, got {side}")));
        }
        let w = Window { d, side, boundary };
        if !w.volume().is_finite() {
            return Err(Error::InvalidParam(format!("window volume {side}^{d} overflows")));
        }
        Ok(w)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    pub fn half(&self) -> f64 {
        self.side / 2.0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.d && x.iter().all(|&c| -self.half() <= c && c < self.half())
    }

    /// Distance between two points under the window's boundary rule.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    /// Squared distance (cheaper inside search loops).
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.d);
        debug_assert_eq!(b.len(), self.d);
        let mut acc = 0.0;
        match self.boundary {
            Boundary::Open => {
                for k in 0..self.d {
                    let dx = a[k] - b[k];
                    acc += dx * dx;
                }
            }
            Boundary::Torus => {
                for k in 0..self.d {
                    let mut dx = a[k] - b[k];
                    dx -= self.side * (dx / self.side).round();
                    acc += dx * dx;
                }
            }
        }
        acc
    }
}

/// Role of a point set in the bipartite model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Agent,
    Hub,
}

/// A finite point configuration in a window, stored as a flat coordinate
/// array (`d` entries per point).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    window: Window,
    kind: PointKind,
    coords: Vec<f64>,
    /// True when the first point is a conditioned-in origin (Palm point).
    palm: bool,
}

impl PointSet {
    pub fn new(window: Window, kind: PointKind, coords: Vec<f64>) -> Result<PointSet> {
        if coords.len() % window.d() != 0 {
            return Err(Error::InvalidParam(format!(
                "coordinate array length {} is not a multiple of d = {}",
                coords.len(),
                window.d()
            )));
        }
        Ok(PointSet { window, kind, coords, palm: false })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn kind(&self) -> PointKind {
        self.kind
    }

    pub fn is_palm(&self) -> bool {
        self.palm
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.window.d()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline(always)]
    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.window.d();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.window.d())
    }

    /// Distance between points `i` and `j` under the window's boundary rule.
    pub fn pair_distance(&self, i: usize, j: usize) -> f64 {
        self.window.distance(self.point(i), self.point(j))
    }
}

/// Sample a homogeneous Poisson point process of the given intensity.
///
/// The draw is a deterministic function of `(intensity, window, seed)`:
/// point count first, then coordinates in order, all from one derived
/// ChaCha8 stream.
pub fn sample_ppp(intensity: f64, window: &Window, kind: PointKind, seed: u64) -> Result<PointSet> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::InvalidParam(format!("intensity must be >= 0, got {intensity}")));
    }
    let mean = intensity * window.volume();
    if mean > MAX_EXPECTED_POINTS {
        return Err(Error::IntensityOverflow { expected_points: mean, cap: MAX_EXPECTED_POINTS });
    }
    let mut rng = rng::rng_from(seed, &[kind_label(kind)]);
    let n = if mean == 0.0 {
        0
    } else {
        let poisson = rand_distr::Poisson::new(mean)
            .map_err(|e| Error::InvalidParam(format!("poisson({mean}): {e}")))?;
        poisson.sample(&mut rng) as u64 as usize
    };
    let half = window.half();
    let mut coords = Vec::with_capacity(n * window.d());
    for _ in 0..n * window.d() {
        coords.push(rng.random_range(-half..half));
    }
    Ok(PointSet { window: *window, kind, coords, palm: false })
}

/// Superpose extra intensity onto an existing sample.
///
/// Returns the union of `base` and an independent PPP of intensity
/// `extra_intensity` (appended after the base points, so base indices are
/// preserved). Sampling a density ladder this way yields pathwise-nested
/// configurations, which is what makes percolation probabilities literally
/// monotone along the ladder under pair-keyed edge draws.
pub fn extend_ppp(base: &PointSet, extra_intensity: f64, seed: u64) -> Result<PointSet> {
    let extra = sample_ppp(extra_intensity, &base.window, base.kind, seed)?;
    let mut coords = base.coords.clone();
    coords.extend_from_slice(&extra.coords);
    Ok(PointSet { window: base.window, kind: base.kind, coords, palm: base.palm })
}

/// Palm conditioning: prepend the origin to an agent configuration.
///
/// By Slivnyak's theorem the remaining points are again a PPP of the same
/// intensity, so statistics of the point at index 0 are exactly typical-point
/// (Palm) statistics.
pub fn palm_condition(points: &PointSet) -> Result<PointSet> {
    if points.kind != PointKind::Agent {
        return Err(Error::NotAgents);
    }
    let d = points.window.d();
    let origin = vec![0.0; d];
    debug_assert!(points.window.contains(&origin));
    let mut coords = Vec::with_capacity(points.coords.len() + d);
    coords.extend_from_slice(&origin);
    coords.extend_from_slice(&points.coords);
    Ok(PointSet { window: points.window, kind: points.kind, coords, palm: true })
}

fn kind_label(kind: PointKind) -> u64 {
    match kind {
        PointKind::Agent => 0xa6e7,
        PointKind::Hub => 0x4b0b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::stats;

    fn w2(side: f64, b: Boundary) -> Window {
        Window::new(2, side, b).unwrap()
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(0, 1.0, Boundary::Open).is_err());
        assert!(Window::new(2, 0.0, Boundary::Open).is_err());
        assert!(Window::new(2, -1.0, Boundary::Open).is_err());
        assert!(Window::new(2, f64::NAN, Boundary::Open).is_err());
        assert!(Window::new(3, 2.0, Boundary::Torus).is_ok());
    }

    #[test]
    fn sampling_is_deterministic() {
        let w = w2(2.0, Boundary::Torus);
        let a = sample_ppp(50.0, &w, PointKind::Agent, 99).unwrap();
        let b = sample_ppp(50.0, &w, PointKind::Agent, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_ppp(50.0, &w, PointKind::Agent, 100).unwrap();
        assert_ne!(a, c);
        // role enters the stream: hubs differ from agents at equal seed
        let h = sample_ppp(50.0, &w, PointKind::Hub, 99).unwrap();
        assert_ne!(a.coords, h.coords);
    }

    #[test]
    fn zero_intensity_gives_empty_set() {
        let w = w2(3.0, Boundary::Open);
        let p = sample_ppp(0.0, &w, PointKind::Hub, 1).unwrap();
        assert_eq!(p.len(), 0);
    }

    #[test]
    fn intensity_cap_is_enforced() {
        let w = w2(1.0, Boundary::Open);
        match sample_ppp(1e12, &w, PointKind::Agent, 1) {
            Err(Error::IntensityOverflow { expected_points, cap }) => {
                assert!(expected_points > cap);
            }
            other => panic!("expected overflow error, got {other:?}"),
        }
    }

    #[test]
    fn counts_match_poisson_chi_square() {
        // Counts over replications against Poisson(lambda * volume = 100).
        let w = w2(1.0, Boundary::Torus);
        let counts: Vec<u64> = (0..4000)
            .map(|r| sample_ppp(100.0, &w, PointKind::Agent, substream(12, &[r])).unwrap().len() as u64)
            .collect();
        let gof = stats::poisson_gof(&counts, 100.0, 0.01);
        assert!(!gof.reject, "chi-square {} > {}", gof.stat, gof.critical);
    }

    #[test]
    fn subdivision_counts_are_poisson_and_uncorrelated() {
        // 4x4 subdivision of the window: per-cell counts are Poisson with
        // 1/16 of the mass, and disjoint cells are independent.
        let w = w2(1.0, Boundary::Torus);
        let reps = 3000usize;
        let mut cell_counts: Vec<u64> = Vec::with_capacity(reps * 16);
        let mut first_pair: Vec<(f64, f64)> = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = sample_ppp(80.0, &w, PointKind::Agent, substream(11, &[r as u64])).unwrap();
            let mut cells = [0u64; 16];
            for pt in p.iter_points() {
                let cx = (((pt[0] + 0.5) * 4.0) as usize).min(3);
                let cy = (((pt[1] + 0.5) * 4.0) as usize).min(3);
                cells[cy * 4 + cx] += 1;
            }
            cell_counts.extend_from_slice(&cells);
            first_pair.push((cells[0] as f64, cells[1] as f64));
        }
        let gof = stats::poisson_gof(&cell_counts, 80.0 / 16.0, 0.01);
        assert!(!gof.reject, "chi-square {} > {}", gof.stat, gof.critical);

        // adjacent-cell sample correlation ~ N(0, 1/sqrt(reps)) under independence
        let mx = first_pair.iter().map(|p| p.0).sum::<f64>() / reps as f64;
        let my = first_pair.iter().map(|p| p.1).sum::<f64>() / reps as f64;
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        let mut syy = 0.0;
        for &(x, y) in &first_pair {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        let rho = sxy / (sxx * syy).sqrt();
        assert!(rho.abs() < 4.0 / (reps as f64).sqrt(), "correlation {rho}");
    }

    #[test]
    fn palm_prepends_origin_and_requires_agents() {
        let w = w2(1.0, Boundary::Open);
        let agents = sample_ppp(30.0, &w, PointKind::Agent, 5).unwrap();
        let palmed = palm_condition(&agents).unwrap();
        assert_eq!(palmed.len(), agents.len() + 1);
        assert_eq!(palmed.point(0), &[0.0, 0.0]);
        assert_eq!(palmed.point(1), agents.point(0));
        assert!(palmed.is_palm());

        let hubs = sample_ppp(30.0, &w, PointKind::Hub, 5).unwrap();
        assert_eq!(palm_condition(&hubs), Err(Error::NotAgents));
    }

    #[test]
    fn torus_distance_wraps() {
        let w = w2(1.0, Boundary::Torus);
        let a = [0.45, 0.0];
        let b = [-0.45, 0.0];
        assert!((w.distance(&a, &b) - 0.1).abs() < 1e-12);
        let wo = w2(1.0, Boundary::Open);
        assert!((wo.distance(&a, &b) - 0.9).abs() < 1e-12);
        // torus distance never exceeds open distance
        assert!(w.distance(&a, &b) <= wo.distance(&a, &b));
    }

    #[test]
    fn extend_preserves_base_prefix() {
        let w = w2(2.0, Boundary::Torus);
        let base = sample_ppp(20.0, &w, PointKind::Hub, 3).unwrap();
        let bigger = extend_ppp(&base, 15.0, substream(3, &[1])).unwrap();
        assert!(bigger.len() >= base.len());
        for i in 0..base.len() {
            assert_eq!(base.point(i), bigger.point(i));
        }
    }
}
