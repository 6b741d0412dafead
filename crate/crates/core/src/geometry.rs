//! Unit-circle primitives, tangent lines and the visibility predicate.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the tangent-halfplane test `dot(A, P) >= 1`.
pub const INSPECT_TOL: f64 = 1e-12;

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn lerp(self, o: Point2, s: f64) -> Point2 {
        Point2::new(self.x + s * (o.x - self.x), self.y + s * (o.y - self.y))
    }

    /// Counter-clockwise rotation by `angle`.
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A point on the unit circle, identified by its polar angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerimeterPoint {
    phi: f64,
}

impl PerimeterPoint {
    /// Wraps `phi` into `[0, 2π)`.
    pub fn new(phi: f64) -> Self {
        let mut p = phi.rem_euclid(TAU);
        if p >= TAU {
            p = 0.0;
        }
        Self { phi: p }
    }

    pub fn phi(self) -> f64 {
        self.phi
    }

    pub fn embed(self) -> Point2 {
        perimeter_point(self.phi)
    }

    /// Unit tangent direction of the tangent line at this point; positive
    /// arclength runs clockwise.
    pub fn tangent(self) -> Point2 {
        let (s, c) = self.phi.sin_cos();
        Point2::new(s, -c)
    }
}

/// A tangent ray `L_φ(t)` of the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentLine {
    pub phi: f64,
    pub t: f64,
}

impl TangentLine {
    pub fn point(self) -> Point2 {
        tangent_point(self.phi, self.t)
    }
}

/// `(cos φ, sin φ)`.
pub fn perimeter_point(phi: f64) -> Point2 {
    let (s, c) = phi.sin_cos();
    Point2::new(c, s)
}

/// `(cos φ + t sin φ, sin φ − t cos φ)`.
pub fn tangent_point(phi: f64, t: f64) -> Point2 {
    let (s, c) = phi.sin_cos();
    Point2::new(c + t * s, s - t * c)
}

/// Whether `a` sees `p` without the disk in the way (closed tangent halfplane).
pub fn inspects(a: Point2, p: PerimeterPoint) -> bool {
    a.dot(p.embed()) >= 1.0 - INSPECT_TOL
}

/// How to treat points lying exactly on the tangent line of the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Any point on the tangent line inspects.
    #[default]
    Closed,
    /// A point on the tangent line inspects only if it lies on the clockwise
    /// side of the tangency point (positive tangent coordinate) or the path is
    /// entering the halfplane there. This is the left limit of the closed rule
    /// under a clockwise sweep of the target angle, and is what makes the
    /// discrete tangency angles well defined at the seam `φ = 0 ≡ 2π`.
    Clockwise,
}

/// An ordered polygonal chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("a polyline needs at least two vertices".into()));
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite vertex {v:?}")));
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for w in vertices.windows(2) {
            let d = w[0].dist(w[1]);
            if d <= 1e-15 {
                return Err(Error::InvalidInput(format!("repeated vertex {:?}", w[1])));
            }
            let last = *cumulative.last().unwrap();
            cumulative.push(last + d);
        }
        Ok(Self { vertices, cumulative })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Arclength from the first vertex to vertex `i`.
    pub fn arclength_at(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn rotate(&self, angle: f64) -> Polyline {
        let vertices = self.vertices.iter().map(|v| v.rotate(angle)).collect();
        Polyline::new(vertices).expect("rotation preserves validity")
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "y"])?;
        for v in &self.vertices {
            wr.write_record([format!("{:.17e}", v.x), format!("{:.17e}", v.y)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut vertices = Vec::new();
        for rec in rd.deserialize() {
            let p: Point2 = rec?;
            vertices.push(p);
        }
        Polyline::new(vertices)
    }
}

/// Arclength along `traj` at which `p` is first inspected, or `None` if it
/// never is.
pub fn first_inspection_arclength(traj: &Polyline, p: PerimeterPoint) -> Option<f64> {
    first_inspection_with(traj, p, Boundary::Closed)
}

/// [`first_inspection_arclength`] with an explicit boundary rule.
pub fn first_inspection_with(traj: &Polyline, p: PerimeterPoint, rule: Boundary) -> Option<f64> {
    let e = p.embed();
    let tan = p.tangent();
    let v = &traj.vertices;
    let on_line_counts = |a: Point2, entering: bool| match rule {
        Boundary::Closed => true,
        Boundary::Clockwise => entering || a.dot(tan) > 0.0,
    };
    for i in 0..v.len() - 1 {
        let (a, b) = (v[i], v[i + 1]);
        let fa = a.dot(e) - 1.0;
        let fb = b.dot(e) - 1.0;
        let entering = fb > fa;
        if fa > INSPECT_TOL || (fa >= -INSPECT_TOL && on_line_counts(a, entering)) {
            return Some(traj.cumulative[i]);
        }
        if entering && fb >= -INSPECT_TOL {
            let s = (-fa / (fb - fa)).clamp(0.0, 1.0);
            return Some(traj.cumulative[i] + s * (traj.cumulative[i + 1] - traj.cumulative[i]));
        }
    }
    let n = v.len() - 1;
    let f_last = v[n].dot(e) - 1.0;
    if f_last > INSPECT_TOL || (f_last >= -INSPECT_TOL && on_line_counts(v[n], false)) {
        return Some(traj.cumulative[n]);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn close(a: Point2, b: Point2, tol: f64) -> bool {
        (a.x - b.x).abs() <= tol && (a.y - b.y).abs() <= tol
    }

    #[test]
    fn perimeter_axis_cases() {
        assert!(close(perimeter_point(0.0), Point2::new(1.0, 0.0), 1e-15));
        assert!(close(perimeter_point(PI), Point2::new(-1.0, 0.0), 1e-15));
        assert!(close(perimeter_point(FRAC_PI_2), Point2::new(0.0, 1.0), 1e-15));
    }

    #[test]
    fn tangent_point_cases() {
        assert!(close(tangent_point(0.0, 0.0), Point2::new(1.0, 0.0), 1e-15));
        let t0 = 1.646_976_860_877_693_6;
        assert!(close(tangent_point(0.0, t0), Point2::new(1.0, -t0), 1e-15));
        assert!(close(tangent_point(FRAC_PI_2, 1.0), Point2::new(1.0, 1.0), 1e-15));
    }

    fn sampled_inspects(a: Point2, p: PerimeterPoint) -> bool {
        let e = p.embed();
        (0..=1000).all(|j| {
            let l = j as f64 / 1000.0;
            e.lerp(a, l).norm() >= 1.0 - 1e-9
        })
    }

    #[test]
    fn inspects_cases() {
        let p0 = PerimeterPoint::new(0.0);
        assert!(inspects(Point2::new(1.0, 5.0), p0));
        assert!(!inspects(Point2::new(0.0, 10.0), p0));
        assert!(!sampled_inspects(Point2::new(0.0, 10.0), p0));
        assert!(inspects(Point2::new(2.0, 0.0), p0));
    }

    #[test]
    fn first_inspection_cases() {
        let tr = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)]).unwrap();
        assert_eq!(first_inspection_arclength(&tr, PerimeterPoint::new(0.0)), Some(1.0));
        assert_eq!(first_inspection_arclength(&tr, PerimeterPoint::new(PI)), None);
        let diag = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)]).unwrap();
        let s = first_inspection_arclength(&diag, PerimeterPoint::new(FRAC_PI_4)).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        // dense sampling along the diagonal agrees
        let first = (0..=100_000)
            .map(|j| j as f64 / 100_000.0 * SQRT_2)
            .find(|&u| inspects(Point2::new(u / SQRT_2, u / SQRT_2), PerimeterPoint::new(FRAC_PI_4)))
            .unwrap();
        assert!((first - 1.0).abs() < 1e-4);
    }

    #[test]
    fn clockwise_rule_at_tangency() {
        // (1, 1) lies on the tangent at φ = 0 on the counter-clockwise side.
        let p0 = PerimeterPoint::new(0.0);
        let tr = Polyline::new(vec![Point2::new(1.0, 1.0), Point2::new(0.0, 2.0)]).unwrap();
        assert_eq!(first_inspection_with(&tr, p0, Boundary::Closed), Some(0.0));
        assert_eq!(first_inspection_with(&tr, p0, Boundary::Clockwise), None);
        let tr = Polyline::new(vec![Point2::new(1.0, -1.0), Point2::new(0.0, -2.0)]).unwrap();
        assert_eq!(first_inspection_with(&tr, p0, Boundary::Clockwise), Some(0.0));
    }

    #[test]
    fn polyline_rejects_repeats() {
        assert!(Polyline::new(vec![Point2::new(0.0, 0.0)]).is_err());
        assert!(Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let tr = Polyline::new(vec![Point2::new(0.0, 0.1), Point2::new(1.0 / 3.0, -2.5e-7)]).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("x,y\n"));
        let back = Polyline::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, tr);
    }
}
