//! Gauge-fixed charts on configuration spaces, the two propagators and the
//! signed Jacobian integrand of a graph.
//!
//! One-type charts live on the complex plane modulo `z -> az + b` with
//! `a > 0`; the first edge's source sits at the origin and its target on the
//! lower unit half-circle. Two-type charts live on the upper half-plane
//! modulo `z -> az + b` with `a > 0`, `b` real, and pin aerial vertex 1 at `i`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::graphs::{AdmissibleGraph, Target, TwoTypeGraph};

pub type C64 = Complex<f64>;

/// Relative slack used when deciding whether a point sits on a border.
const BORDER_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ChartKind {
    /// Vertex `source` pinned at 0, vertex `target` at `exp(i x)`.
    OneType { source: usize, target: usize },
    /// Aerial vertex 1 pinned at `i`.
    TwoType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub key: String,
    pub kind: ChartKind,
    pub n: usize,
    pub m: usize,
    /// Free vertices in label order; each owns two coordinates (Re, Im).
    pub free: Vec<usize>,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub z: Vec<C64>,
    pub t: Vec<f64>,
    /// Circle parameter of a one-type chart.
    pub circle: Option<f64>,
}

impl Chart {
    /// Coordinates: `x` (circle parameter), then `(Re z_v, Im z_v)` for every
    /// vertex other than the pinned pair, in label order.
    pub fn one_type(g: &AdmissibleGraph) -> Result<Chart> {
        let &(source, target) = g
            .edges()
            .first()
            .ok_or_else(|| Error::InvalidGraph("a one-type chart needs at least one edge".into()))?;
        let free: Vec<usize> = (1..=g.n()).filter(|&v| v != source && v != target).collect();
        let dim = 1 + 2 * free.len();
        Ok(Chart { key: g.key(), kind: ChartKind::OneType { source, target }, n: g.n(), m: 0, free, dim })
    }

    /// Coordinates: `(Re z_v, Im z_v)` for aerial vertices `2..=n`, then the
    /// boundary points `t_1 < ... < t_m`.
    pub fn two_type(g: &TwoTypeGraph) -> Result<Chart> {
        if g.n() == 0 {
            return Err(Error::InvalidGraph("a two-type chart needs an aerial vertex".into()));
        }
        let free: Vec<usize> = (2..=g.n()).collect();
        let dim = 2 * free.len() + g.m();
        Ok(Chart { key: g.key(), kind: ChartKind::TwoType, n: g.n(), m: g.m(), free, dim })
    }

    /// Derivative of `z_v` with respect to coordinate `c`.
    fn dz(&self, config: &Configuration, v: usize, c: usize) -> C64 {
        if let ChartKind::OneType { target, .. } = self.kind {
            if c == 0 {
                return if v == target {
                    let x = config.circle.unwrap_or(0.0);
                    C64::new(-x.sin(), x.cos())
                } else {
                    C64::new(0.0, 0.0)
                };
            }
        }
        let offset = self.free_offset();
        match self.free.iter().position(|&w| w == v) {
            Some(k) if c == offset + 2 * k => C64::new(1.0, 0.0),
            Some(k) if c == offset + 2 * k + 1 => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Derivative of the boundary point `t_k` with respect to coordinate `c`.
    fn dt(&self, k: usize, c: usize) -> f64 {
        if c == self.free_offset() + 2 * self.free.len() + (k - 1) {
            1.0
        } else {
            0.0
        }
    }

    fn free_offset(&self) -> usize {
        match self.kind {
            ChartKind::OneType { .. } => 1,
            ChartKind::TwoType => 0,
        }
    }
}

/// `tan` map of the unit interval onto the real line, with its derivative.
fn tan_map(u: f64) -> (f64, f64) {
    let v = (PI * (u - 0.5)).tan();
    (v, PI * (1.0 + v * v))
}

/// Map of the unit interval onto `(0, inf)`, with its derivative.
fn half_line_map(u: f64) -> (f64, f64) {
    let w = 1.0 - u;
    (u / w, 1.0 / (w * w))
}

/// Map a point of the open unit cube to a configuration. The returned
/// jacobian is the volume factor of the map; boundary points are sorted, so
/// integrals over the cube count each ordered configuration `m!` times.
pub fn sample(chart: &Chart, u: &[f64]) -> Result<(Configuration, f64)> {
    if u.len() != chart.dim {
        return Err(Error::LengthMismatch { expected: chart.dim, got: u.len() });
    }
    let mut z = vec![C64::new(0.0, 0.0); chart.n];
    let mut jac = 1.0;
    let mut circle = None;
    let offset = chart.free_offset();
    match chart.kind {
        ChartKind::OneType { source, target } => {
            let x = -PI * u[0];
            jac *= PI;
            z[source - 1] = C64::new(0.0, 0.0);
            z[target - 1] = C64::new(x.cos(), x.sin());
            circle = Some(x);
            for (k, &v) in chart.free.iter().enumerate() {
                let (re, jr) = tan_map(u[offset + 2 * k]);
                let (im, ji) = tan_map(u[offset + 2 * k + 1]);
                z[v - 1] = C64::new(re, im);
                jac *= jr * ji;
            }
        }
        ChartKind::TwoType => {
            z[0] = C64::new(0.0, 1.0);
            for (k, &v) in chart.free.iter().enumerate() {
                let (re, jr) = tan_map(u[offset + 2 * k]);
                let (im, ji) = half_line_map(u[offset + 2 * k + 1]);
                z[v - 1] = C64::new(re, im);
                jac *= jr * ji;
            }
        }
    }
    let base = offset + 2 * chart.free.len();
    let mut t: Vec<f64> = (0..chart.m)
        .map(|k| {
            let (v, j) = tan_map(u[base + k]);
            jac *= j;
            v
        })
        .collect();
    t.sort_by(f64::total_cmp);
    Ok((Configuration { z, t, circle }, jac))
}

/// Closed height ordering: `lower` lies in the geodesic half-disc under `upper`.
pub fn height_leq(lower: C64, upper: C64) -> bool {
    (lower - C64::new(upper.re, 0.0)).norm() <= upper.im
}

fn within_dark_region(lower: C64, upper: C64) -> bool {
    (lower - C64::new(upper.re, 0.0)).norm() <= upper.im * (1.0 + BORDER_SLACK)
}

/// The modified angle of `lower` seen from `upper`, with period `pi`. It is
/// the harmonic angle `(1/i) Log[(z1-z2)(z1-conj z2)/((conj z1-z2)(conj z1-conj z2))]`
/// shifted to vanish on the border circle and scaled by [`CALIBRATION`].
/// The value lies in `(-pi, 0]`; border points map to 0.
pub fn modified_angle(upper: C64, lower: C64) -> Result<f64> {
    if upper.im <= 0.0 || !within_dark_region(lower, upper) {
        return Err(Error::OutsideDomain);
    }
    let a = (upper - lower) / (upper.conj() - lower);
    let mut theta = (C64::new(0.0, 1.0) * a).arg();
    if theta > 0.0 {
        theta -= PI;
    }
    if theta <= -PI * (1.0 - BORDER_SLACK) {
        theta += PI;
    }
    Ok(theta)
}

/// Factor between the doubled harmonic angle (period `2 pi`) and
/// [`modified_angle`] (period `pi`).
pub const CALIBRATION: f64 = 0.5;

/// `d Arg(z_t - z_s)` along chart coordinate `c`.
pub fn plain_angle_form(chart: &Chart, edge: (usize, usize), config: &Configuration, c: usize) -> f64 {
    let (s, t) = edge;
    let w = config.z[t - 1] - config.z[s - 1];
    let dw = chart.dz(config, t, c) - chart.dz(config, s, c);
    (dw / w).im
}

/// `d theta(upper, target)` along chart coordinate `c`.
pub fn modified_angle_form(chart: &Chart, edge: (usize, Target), config: &Configuration, c: usize) -> f64 {
    let (s, target) = edge;
    let z1 = config.z[s - 1];
    let (z2, dz2) = match target {
        Target::Aerial(a) => (config.z[a - 1], chart.dz(config, a, c)),
        Target::Boundary(k) => (C64::new(config.t[k - 1], 0.0), C64::new(chart.dt(k, c), 0.0)),
    };
    let dz1 = chart.dz(config, s, c);
    let p = (z1 - z2).inv();
    let q = (z1.conj() - z2).inv();
    // d log A with A = (z1 - z2) / (conj z1 - z2)
    let dlog = (dz1 - dz2) * p - (dz1.conj() - dz2) * q;
    dlog.im
}

/// Signed integrand of a one-type graph at a configuration: the determinant
/// of the edge angle differentials, rows in edge order, or 0 when some edge
/// violates `Im(z_t - z_s) < 0`.
pub fn integrand(g: &AdmissibleGraph, chart: &Chart, config: &Configuration) -> Result<f64> {
    if g.edge_count() != chart.dim {
        return Err(Error::DimensionMismatch { edges: g.edge_count(), dim: chart.dim });
    }
    if g.edges().iter().any(|&(s, t)| (config.z[t - 1] - config.z[s - 1]).im >= 0.0) {
        return Ok(0.0);
    }
    let d = chart.dim;
    let m = DMatrix::from_fn(d, d, |r, c| plain_angle_form(chart, g.edges()[r], config, c));
    Ok(m.determinant())
}

/// Signed integrand of a two-type graph: zero outside the height-ordered
/// region, otherwise the determinant of the modified angle differentials.
pub fn integrand_two_type(g: &TwoTypeGraph, chart: &Chart, config: &Configuration) -> Result<f64> {
    if g.edge_count() != chart.dim {
        return Err(Error::DimensionMismatch { edges: g.edge_count(), dim: chart.dim });
    }
    for &(s, target) in g.edges() {
        let lower = match target {
            Target::Aerial(a) => config.z[a - 1],
            Target::Boundary(k) => C64::new(config.t[k - 1], 0.0),
        };
        if !height_leq(lower, config.z[s - 1]) {
            return Ok(0.0);
        }
    }
    let d = chart.dim;
    let m = DMatrix::from_fn(d, d, |r, c| modified_angle_form(chart, g.edges()[r], config, c));
    Ok(m.determinant())
}

/// Solve for the configuration whose edge angles are `y` (first edge at unit
/// length). Returns `None` when no configuration has these angles.
pub fn angle_preimage(g: &AdmissibleGraph, chart: &Chart, y: &[f64]) -> Option<Configuration> {
    let ChartKind::OneType { source, .. } = chart.kind else { return None };
    let n = g.n();
    // unknowns: Re, Im of z_v for v != source
    let index = |v: usize| if v < source { v - 1 } else { v - 2 };
    let size = 2 * (n - 1);
    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut b = nalgebra::DVector::<f64>::zeros(size);
    let rotate = |y: f64| C64::new(y.cos(), -y.sin());
    for (row, (&(s, t), &angle)) in g.edges().iter().zip(y).enumerate() {
        let r = rotate(angle);
        // Im(r (z_t - z_s)) = r.re Im z + r.im Re z
        for (v, sign) in [(t, 1.0), (s, -1.0)] {
            if v != source {
                a[(row, 2 * index(v))] += sign * r.im;
                a[(row, 2 * index(v) + 1)] += sign * r.re;
            }
        }
    }
    let (s1, t1) = g.edges()[0];
    let r = rotate(y[0]);
    for (v, sign) in [(t1, 1.0), (s1, -1.0)] {
        if v != source {
            a[(size - 1, 2 * index(v))] += sign * r.re;
            a[(size - 1, 2 * index(v) + 1)] -= sign * r.im;
        }
    }
    b[size - 1] = 1.0;
    let sol = a.lu().solve(&b)?;
    let mut z = vec![C64::new(0.0, 0.0); n];
    for v in (1..=n).filter(|&v| v != source) {
        z[v - 1] = C64::new(sol[2 * index(v)], sol[2 * index(v) + 1]);
    }
    for (&(s, t), &angle) in g.edges().iter().zip(y) {
        if (rotate(angle) * (z[t - 1] - z[s - 1])).re <= 0.0 {
            return None;
        }
    }
    Some(Configuration { z, t: Vec::new(), circle: Some(y[0]) })
}
