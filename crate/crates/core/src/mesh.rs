//! Time meshes shared by the series evaluator and the one-step integrators.
//!
//! A mesh is a strictly increasing node array cut into segments. Segment
//! boundaries sit on the coefficient's breakpoints, so no step straddles a
//! jump of `mu` and the integrators can take one-sided values there.

use crate::coefficients::TimeProfile;
use crate::error::{Error, Result};
use crate::spectral::GridSpec;

/// Default node density per unit time.
pub const DEFAULT_DENSITY: f64 = 256.0;

/// Steps per unit time per unit of the highest frequency on the grid.
const STEPS_PER_FREQUENCY: f64 = 16.0;

/// Node density that resolves the phases `e^{+-2 i tau |xi|}` of every mode
/// on `grid`, never below [`DEFAULT_DENSITY`].
pub fn resolving_density(grid: &GridSpec) -> f64 {
    DEFAULT_DENSITY.max(STEPS_PER_FREQUENCY * grid.max_abs_xi())
}

/// Steps must resolve the profile's smooth scale at least this finely.
const STEPS_PER_RESOLUTION_SCALE: f64 = 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    nodes: Vec<f64>,
    /// Inclusive node index ranges `(first, last)`.
    segments: Vec<(usize, usize)>,
    rule: QuadratureRule,
}

impl TimeMesh {
    /// One segment of `steps` equal steps.
    pub fn uniform(s: f64, t: f64, steps: usize, rule: QuadratureRule) -> Result<Self> {
        if !(s < t) || !s.is_finite() || !t.is_finite() {
            return Err(Error::InvalidMesh(format!("need finite s < t, got [{s}, {t}]")));
        }
        if steps == 0 {
            return Err(Error::InvalidMesh("at least one step required".into()));
        }
        let h = (t - s) / steps as f64;
        let mut nodes: Vec<f64> = (0..steps).map(|j| s + h * j as f64).collect();
        nodes.push(t);
        Self::from_segments(nodes, vec![(0, steps)], rule)
    }

    /// Arbitrary strictly increasing nodes as a single segment.
    pub fn from_nodes(nodes: Vec<f64>, rule: QuadratureRule) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMesh("at least two nodes required".into()));
        }
        let last = nodes.len() - 1;
        Self::from_segments(nodes, vec![(0, last)], rule)
    }

    fn from_segments(nodes: Vec<f64>, segments: Vec<(usize, usize)>, rule: QuadratureRule) -> Result<Self> {
        if nodes.windows(2).any(|w| !(w[0] < w[1])) || nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("nodes must be finite and strictly increasing".into()));
        }
        if rule == QuadratureRule::Simpson {
            if let Some((a, b)) = segments.iter().find(|(a, b)| (b - a) % 2 != 0) {
                return Err(Error::InvalidMesh(format!(
                    "Simpson needs an even number of steps per segment, segment [{a}, {b}] has {}",
                    b - a
                )));
            }
        }
        Ok(TimeMesh {
            nodes,
            segments,
            rule,
        })
    }

    /// Uniform-per-segment mesh over `[s, t]` with about `density` steps per
    /// unit time, cut at the profile's breakpoints and at `stops`. The density
    /// is doubled until every step resolves the profile's smooth scale.
    pub fn with_stops(
        s: f64,
        t: f64,
        density: f64,
        rule: QuadratureRule,
        profile: &TimeProfile,
        stops: &[f64],
    ) -> Result<Self> {
        Self::build(s, t, density, rule, profile, stops, false)
    }

    /// Like [`TimeMesh::with_stops`], but long stretches are cut at powers of
    /// two and each segment's density is scaled by `(m / m_max)^(1/5)`, where
    /// `m` is the segment's largest sampled `|mu|`, floored at 1/64. For
    /// decaying coefficients over long horizons.
    pub fn graded(
        s: f64,
        t: f64,
        density: f64,
        rule: QuadratureRule,
        profile: &TimeProfile,
        stops: &[f64],
    ) -> Result<Self> {
        Self::build(s, t, density, rule, profile, stops, true)
    }

    fn build(
        s: f64,
        t: f64,
        density: f64,
        rule: QuadratureRule,
        profile: &TimeProfile,
        stops: &[f64],
        graded: bool,
    ) -> Result<Self> {
        if !(s < t) || !s.is_finite() || !t.is_finite() {
            return Err(Error::InvalidMesh(format!("need finite s < t, got [{s}, {t}]")));
        }
        if !(density.is_finite() && density > 0.0) {
            return Err(Error::InvalidMesh(format!("density {density} must be positive")));
        }
        let mut density = density;
        let scale = profile.resolution_scale();
        while scale.is_finite() && 1.0 / density > scale / STEPS_PER_RESOLUTION_SCALE {
            density *= 2.0;
        }
        let tiny = 1e-12 * (1.0 + s.abs().max(t.abs()));
        let mut cuts = vec![s];
        let mut interior: Vec<f64> = profile
            .breakpoints()
            .into_iter()
            .chain(stops.iter().copied())
            .chain(if graded { octaves(s, t) } else { Vec::new() })
            .filter(|&x| x > s + tiny && x < t - tiny)
            .collect();
        interior.sort_by(f64::total_cmp);
        for x in interior {
            if x - cuts[cuts.len() - 1] > tiny {
                cuts.push(x);
            }
        }
        cuts.push(t);

        let peaks: Vec<f64> = cuts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                [w[0], mid, w[1]].map(|x| profile.mu_on(x, mid).abs()).into_iter().fold(0.0, f64::max)
            })
            .collect();
        let top = peaks.iter().copied().fold(0.0, f64::max);

        let mut nodes = vec![s];
        let mut segments = Vec::with_capacity(cuts.len() - 1);
        for (w, peak) in cuts.windows(2).zip(peaks) {
            let len = w[1] - w[0];
            let local = if graded && top > 0.0 {
                density * (peak / top).powf(0.2).max(1.0 / 64.0)
            } else {
                density
            };
            let mut steps = ((len * local).ceil() as usize).max(2);
            if steps % 2 == 1 {
                steps += 1;
            }
            let first = nodes.len() - 1;
            let h = len / steps as f64;
            for j in 1..steps {
                nodes.push(w[0] + h * j as f64);
            }
            nodes.push(w[1]);
            segments.push((first, first + steps));
        }
        Self::from_segments(nodes, segments, rule)
    }

    pub fn with_density(s: f64, t: f64, density: f64, rule: QuadratureRule, profile: &TimeProfile) -> Result<Self> {
        Self::with_stops(s, t, density, rule, profile, &[])
    }

    /// The default mesh: 256 Simpson nodes per unit time, refined as needed.
    pub fn default_for(s: f64, t: f64, profile: &TimeProfile) -> Result<Self> {
        Self::with_density(s, t, DEFAULT_DENSITY, QuadratureRule::Simpson, profile)
    }

    /// Every step halved.
    pub fn refined(&self) -> TimeMesh {
        let mut nodes = vec![self.nodes[0]];
        let mut segments = Vec::with_capacity(self.segments.len());
        for &(a, b) in &self.segments {
            let first = nodes.len() - 1;
            for j in a..b {
                nodes.push(0.5 * (self.nodes[j] + self.nodes[j + 1]));
                nodes.push(self.nodes[j + 1]);
            }
            segments.push((first, first + 2 * (b - a)));
        }
        TimeMesh {
            nodes,
            segments,
            rule: self.rule,
        }
    }

    pub fn with_rule(&self, rule: QuadratureRule) -> Result<TimeMesh> {
        Self::from_segments(self.nodes.clone(), self.segments.clone(), rule)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Node slices of each segment; consecutive slices share an endpoint.
    pub fn segments(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.segments.iter().map(move |&(a, b)| &self.nodes[a..=b])
    }

    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the node equal to `t` (within rounding), if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let tiny = 1e-12 * (1.0 + t.abs());
        self.nodes.iter().position(|&x| (x - t).abs() <= tiny)
    }
}

/// `+-2^k` for `k >= 0` strictly inside `(s, t)`.
fn octaves(s: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = 1.0;
    while x < s.abs().max(t.abs()) {
        out.extend([x, -x].into_iter().filter(|&y| y > s && y < t));
        x *= 2.0;
    }
    out
}

/// Weights of `int_{x0}^{x2}` and `int_{x0}^{x1}` of the quadratic through
/// three nodes with spacings `h0 = x1 - x0`, `h1 = x2 - x1`.
pub(crate) fn simpson_weights(h0: f64, h1: f64) -> ([f64; 3], [f64; 3]) {
    let s = h0 + h1;
    let full = [
        s * (2.0 * h0 - h1) / (6.0 * h0),
        s * s * s / (6.0 * h0 * h1),
        s * (2.0 * h1 - h0) / (6.0 * h1),
    ];
    let part = [
        h0 * (2.0 * h0 + 3.0 * h1) / (6.0 * s),
        h0 * (h0 + 3.0 * h1) / (6.0 * h1),
        -h0 * h0 * h0 / (6.0 * h1 * s),
    ];
    (full, part)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> TimeProfile {
        TimeProfile::Interval {
            mu0: 0.3,
            t0: 0.0,
            t1: 1.0,
        }
    }

    #[test]
    fn breakpoints_become_segment_boundaries() {
        let mesh = TimeMesh::with_density(-0.5, 2.0, 8.0, QuadratureRule::Simpson, &interval()).unwrap();
        assert!(mesh.node_index(0.0).is_some());
        assert!(mesh.node_index(1.0).is_some());
        assert_eq!(mesh.segments().count(), 3);
        for seg in mesh.segments() {
            assert_eq!((seg.len() - 1) % 2, 0);
        }
    }

    #[test]
    fn stops_are_nodes() {
        let g = TimeProfile::Gaussian { mu0: 1.0, sigma: 1.0 };
        let mesh = TimeMesh::with_stops(0.0, 10.0, 4.0, QuadratureRule::Trapezoid, &g, &[0.3, 7.77]).unwrap();
        assert!(mesh.node_index(0.3).is_some());
        assert!(mesh.node_index(7.77).is_some());
    }

    #[test]
    fn graded_mesh_thins_out_where_mu_is_small() {
        let p = TimeProfile::Algebraic { sign: 1.0, mu0: 1.0, p: 2.0 };
        let graded = TimeMesh::graded(0.0, 1000.0, 64.0, QuadratureRule::Simpson, &p, &[4.0, 100.0]).unwrap();
        let uniform = TimeMesh::with_stops(0.0, 1000.0, 64.0, QuadratureRule::Simpson, &p, &[4.0, 100.0]).unwrap();
        assert!(graded.node_index(4.0).is_some() && graded.node_index(100.0).is_some());
        assert!(graded.node_index(512.0).is_some());
        assert!(graded.steps() * 5 < uniform.steps());
        // full density near the peak
        assert!(graded.nodes()[1] <= 1.0 / 64.0 + 1e-15);
        // mu(1000) / mu(0) ~ 1e-6, so the last step is about 16x longer
        let last = graded.nodes()[graded.steps()] - graded.nodes()[graded.steps() - 1];
        assert!(last > 8.0 / 64.0 && last < 32.0 / 64.0, "{last}");
        let interval = TimeMesh::graded(-1.0, 3.0, 64.0, QuadratureRule::Simpson, &interval(), &[]).unwrap();
        assert!(interval.max_step() <= 1.0 + 1e-12);
    }

    #[test]
    fn density_follows_resolution_scale() {
        let g = TimeProfile::Gaussian { mu0: 1.0, sigma: 0.01 };
        let mesh = TimeMesh::with_density(0.0, 0.1, 256.0, QuadratureRule::Simpson, &g).unwrap();
        assert!(mesh.max_step() <= 0.01 / 32.0 + 1e-15);
    }

    #[test]
    fn simpson_requires_even_steps() {
        assert!(TimeMesh::uniform(0.0, 1.0, 3, QuadratureRule::Simpson).is_err());
        assert!(TimeMesh::uniform(0.0, 1.0, 3, QuadratureRule::Trapezoid).is_ok());
        assert!(TimeMesh::from_nodes(vec![0.0, 0.5, 0.5, 1.0], QuadratureRule::Trapezoid).is_err());
        assert!(TimeMesh::uniform(1.0, 0.0, 4, QuadratureRule::Trapezoid).is_err());
    }

    #[test]
    fn refinement_halves_steps() {
        let mesh = TimeMesh::with_density(0.0, 2.0, 4.0, QuadratureRule::Simpson, &interval()).unwrap();
        let fine = mesh.refined();
        assert_eq!(fine.steps(), 2 * mesh.steps());
        assert!((fine.max_step() - mesh.max_step() / 2.0).abs() < 1e-15);
        assert_eq!(fine.segments().count(), mesh.segments().count());
    }

    #[test]
    fn nonuniform_simpson_integrates_quadratics() {
        let f = |x: f64| 1.0 - 2.0 * x + 3.0 * x * x;
        let big_f = |x: f64| x - x * x + x * x * x;
        let (x0, x1, x2) = (0.2, 0.5, 1.1);
        let (full, part) = simpson_weights(x1 - x0, x2 - x1);
        let fs = [f(x0), f(x1), f(x2)];
        let v: f64 = full.iter().zip(&fs).map(|(w, f)| w * f).sum();
        let p: f64 = part.iter().zip(&fs).map(|(w, f)| w * f).sum();
        assert!((v - (big_f(x2) - big_f(x0))).abs() < 1e-14);
        assert!((p - (big_f(x1) - big_f(x0))).abs() < 1e-14);
    }
}
