//! Parametric geometry facade: curve evaluation, projection, arc length and
//! offset sampling over pluggable backends. All downstream modules query
//! geometry exclusively through [`Curve`] so backends stay interchangeable.

use crate::error::{Error, Result};
use crate::geom::{closest_on_segment, pt, polygon_signed_area, Point};
use serde::{Deserialize, Serialize};

/// Index into [`Geometry::curves`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CurveId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrailingEdge {
    Open,
    Closed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum CurveKind {
    /// One surface of a symmetric NACA 4-digit section, parameterized by the
    /// chordwise abscissa x = t. `upper` selects the +y surface.
    NacaSurface {
        thickness: f64,
        te: TrailingEdge,
        upper: bool,
    },
    Segment {
        a: Point,
        b: Point,
    },
    /// Piecewise-linear curve with arc-length-proportional parameter in [0,1].
    Polyline { pts: Vec<Point>, cum: Vec<f64> },
    /// Chain of sub-curves; parameter range [0, n], unit interval per part.
    Composite {
        parts: Vec<Curve>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    /// Boundary entity label, e.g. "aerofoil-upper". Medial classification
    /// and wall patches key off this.
    pub entity: String,
    pub kind: CurveKind,
    /// Traverse the backend with decreasing parameter.
    pub reversed: bool,
}

const NACA_A: [f64; 5] = [0.2969, -0.1260, -0.3516, 0.2843, -0.1015];
const NACA_A4_CLOSED: f64 = -0.1036;

/// Half-thickness polynomial of the 4-digit series at chordwise position x.
pub fn naca_half_thickness(thickness: f64, te: TrailingEdge, x: f64) -> f64 {
    let a4 = match te {
        TrailingEdge::Open => NACA_A[4],
        TrailingEdge::Closed => NACA_A4_CLOSED,
    };
    5.0 * thickness
        * (NACA_A[0] * x.sqrt() + NACA_A[1] * x + NACA_A[2] * x * x + NACA_A[3] * x * x * x
            + a4 * x * x * x * x)
}

/// d(y_t)/du where x = u^2; polynomial, regular at the leading edge.
fn naca_dy_du(thickness: f64, te: TrailingEdge, u: f64) -> f64 {
    let a4 = match te {
        TrailingEdge::Open => NACA_A[4],
        TrailingEdge::Closed => NACA_A4_CLOSED,
    };
    let u2 = u * u;
    let u3 = u2 * u;
    let u5 = u3 * u2;
    let u7 = u5 * u2;
    5.0 * thickness
        * (NACA_A[0] + 2.0 * NACA_A[1] * u + 4.0 * NACA_A[2] * u3 + 6.0 * NACA_A[3] * u5
            + 8.0 * a4 * u7)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    rec(f, a, b, fa, fm, fb, whole, tol.max(1e-16), 48)
}

impl CurveKind {
    fn param_range(&self) -> (f64, f64) {
        match self {
            CurveKind::Composite { parts } => (0.0, parts.len() as f64),
            _ => (0.0, 1.0),
        }
    }
}

impl Curve {
    pub fn segment(name: &str, entity: &str, a: Point, b: Point) -> Curve {
        Curve {
            name: name.to_string(),
            entity: entity.to_string(),
            kind: CurveKind::Segment { a, b },
            reversed: false,
        }
    }

    pub fn polyline(name: &str, entity: &str, pts: Vec<Point>) -> Curve {
        let mut cum = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in pts.windows(2) {
            acc += w[0].dist(w[1]);
            cum.push(acc);
        }
        Curve {
            name: name.to_string(),
            entity: entity.to_string(),
            kind: CurveKind::Polyline { pts, cum },
            reversed: false,
        }
    }

    pub fn naca_surface(
        name: &str,
        entity: &str,
        thickness: f64,
        te: TrailingEdge,
        upper: bool,
    ) -> Curve {
        Curve {
            name: name.to_string(),
            entity: entity.to_string(),
            kind: CurveKind::NacaSurface {
                thickness,
                te,
                upper,
            },
            reversed: false,
        }
    }

    pub fn reversed(mut self) -> Curve {
        self.reversed = !self.reversed;
        self
    }

    pub fn param_range(&self) -> (f64, f64) {
        self.kind.param_range()
    }

    fn check_param(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.param_range();
        let eps = 1e-12 * (hi - lo).max(1.0);
        if t < lo - eps || t > hi + eps {
            return Err(Error::Range(format!(
                "curve '{}': parameter {} outside [{}, {}]",
                self.name, t, lo, hi
            )));
        }
        Ok(t.clamp(lo, hi))
    }

    fn map_param(&self, t: f64) -> f64 {
        if self.reversed {
            let (lo, hi) = self.param_range();
            lo + hi - t
        } else {
            t
        }
    }

    /// Point at parameter t.
    pub fn eval(&self, t: f64) -> Result<Point> {
        let t = self.map_param(self.check_param(t)?);
        Ok(self.eval_raw(t))
    }

    fn eval_raw(&self, t: f64) -> Point {
        match &self.kind {
            CurveKind::NacaSurface {
                thickness,
                te,
                upper,
            } => {
                let y = naca_half_thickness(*thickness, *te, t);
                pt(t, if *upper { y } else { -y })
            }
            CurveKind::Segment { a, b } => a.lerp(*b, t),
            CurveKind::Polyline { pts, cum } => {
                let total = *cum.last().unwrap_or(&0.0);
                if pts.len() < 2 || total == 0.0 {
                    return pts.first().copied().unwrap_or_default();
                }
                let s = t.clamp(0.0, 1.0) * total;
                let i = match cum.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
                    Ok(i) => i.min(pts.len() - 2),
                    Err(i) => (i - 1).min(pts.len() - 2),
                };
                let seg = cum[i + 1] - cum[i];
                let f = if seg > 0.0 { (s - cum[i]) / seg } else { 0.0 };
                pts[i].lerp(pts[i + 1], f)
            }
            CurveKind::Composite { parts } => {
                let i = (t.floor() as usize).min(parts.len() - 1);
                let local = t - i as f64;
                let (lo, hi) = parts[i].param_range();
                parts[i].eval_raw(parts[i].map_param(lo + (hi - lo) * local))
            }
        }
    }

    /// Unit tangent in the direction of increasing t. Regular at the NACA
    /// leading edge (one-sided limit, vertical).
    pub fn unit_tangent(&self, t: f64) -> Result<Point> {
        let tm = self.map_param(self.check_param(t)?);
        let d = self.tangent_raw(tm);
        Ok(if self.reversed { -d } else { d })
    }

    fn tangent_raw(&self, t: f64) -> Point {
        match &self.kind {
            CurveKind::NacaSurface {
                thickness,
                te,
                upper,
            } => {
                let u = t.max(0.0).sqrt();
                // dc/du = (2u, dy/du); same direction as dc/dt for u > 0.
                let dy = naca_dy_du(*thickness, *te, u);
                let d = pt(2.0 * u, if *upper { dy } else { -dy });
                d.normalized()
            }
            CurveKind::Segment { a, b } => (*b - *a).normalized(),
            CurveKind::Polyline { pts, cum } => {
                let total = *cum.last().unwrap_or(&0.0);
                if pts.len() < 2 || total == 0.0 {
                    return pt(0.0, 0.0);
                }
                let s = t.clamp(0.0, 1.0) * total;
                let mut i = match cum.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                i = i.min(pts.len() - 2);
                (pts[i + 1] - pts[i]).normalized()
            }
            CurveKind::Composite { parts } => {
                let i = (t.floor() as usize).min(parts.len() - 1);
                let local = t - i as f64;
                let (lo, hi) = parts[i].param_range();
                let inner = parts[i].tangent_raw(parts[i].map_param(lo + (hi - lo) * local));
                if parts[i].reversed {
                    -inner
                } else {
                    inner
                }
            }
        }
    }

    /// Arc length between parameters t0 <= t1, to relative tolerance 1e-10.
    pub fn arc_length(&self, t0: f64, t1: f64) -> Result<f64> {
        if t1 < t0 {
            return Err(Error::Argument(format!(
                "curve '{}': reversed arc interval [{}, {}]",
                self.name, t0, t1
            )));
        }
        let a = self.check_param(t0)?;
        let b = self.check_param(t1)?;
        if a == b {
            return Ok(0.0);
        }
        let (ra, rb) = if self.reversed {
            (self.map_param(b), self.map_param(a))
        } else {
            (a, b)
        };
        Ok(self.arc_raw(ra, rb))
    }

    fn arc_raw(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            CurveKind::NacaSurface { thickness, te, .. } => {
                // substitute x = u^2 to remove the square-root singularity
                let (th, tev) = (*thickness, *te);
                let f = move |u: f64| {
                    let dy = naca_dy_du(th, tev, u);
                    (4.0 * u * u + dy * dy).sqrt()
                };
                let ua = a.max(0.0).sqrt();
                let ub = b.max(0.0).sqrt();
                adaptive_simpson(&f, ua, ub, 1e-12)
            }
            CurveKind::Segment { a: p, b: q } => p.dist(*q) * (b - a),
            CurveKind::Polyline { cum, .. } => {
                let total = *cum.last().unwrap_or(&0.0);
                total * (b - a)
            }
            CurveKind::Composite { parts } => {
                let mut acc = 0.0;
                let ia = a.floor() as usize;
                let ib = (b.ceil() as usize).min(parts.len());
                for i in ia..ib.max(ia + 1) {
                    if i >= parts.len() {
                        break;
                    }
                    let lo = (a - i as f64).clamp(0.0, 1.0);
                    let hi = (b - i as f64).clamp(0.0, 1.0);
                    if hi > lo {
                        let (plo, phi) = parts[i].param_range();
                        let span = phi - plo;
                        acc += parts[i]
                            .arc_length(plo + lo * span, plo + hi * span)
                            .unwrap_or(0.0);
                    }
                }
                acc
            }
        }
    }

    pub fn total_arc_length(&self) -> f64 {
        let (lo, hi) = self.param_range();
        self.arc_length(lo, hi).unwrap_or(0.0)
    }

    /// Parameter t in [t0, t1] with arc(t0, t) = fraction * arc(t0, t1).
    pub fn param_at_arc_fraction(&self, t0: f64, t1: f64, fraction: f64) -> Result<f64> {
        if fraction <= 0.0 {
            return Ok(t0);
        }
        if fraction >= 1.0 {
            return Ok(t1);
        }
        let total = self.arc_length(t0, t1)?;
        let target = fraction * total;
        let mut lo = t0;
        let mut hi = t1;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.arc_length(t0, mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Global closest-point projection: returns (t, distance). Total function;
    /// ties resolve to the smallest parameter.
    pub fn project(&self, p: Point) -> (f64, f64) {
        match &self.kind {
            CurveKind::Segment { a, b } => {
                let (t, q) = closest_on_segment(*a, *b, p);
                (self.unmap(t), q.dist(p))
            }
            CurveKind::Polyline { pts, cum } => {
                let total = *cum.last().unwrap_or(&0.0);
                if pts.len() < 2 || total == 0.0 {
                    return (0.0, pts.first().map(|q| q.dist(p)).unwrap_or(f64::MAX));
                }
                let mut best = (0.0f64, f64::INFINITY);
                for i in 0..pts.len() - 1 {
                    let (f, q) = closest_on_segment(pts[i], pts[i + 1], p);
                    let d = q.dist(p);
                    let t = (cum[i] + f * (cum[i + 1] - cum[i])) / total;
                    if d < best.1 - 1e-15 || (d < best.1 + 1e-15 && t < best.0) {
                        best = (t, d);
                    }
                }
                (self.unmap(best.0), best.1)
            }
            CurveKind::Composite { parts } => {
                let mut best = (0.0f64, f64::INFINITY);
                for (i, part) in parts.iter().enumerate() {
                    let (tp, d) = part.project(p);
                    let (lo, hi) = part.param_range();
                    let local = if hi > lo { (tp - lo) / (hi - lo) } else { 0.0 };
                    let t = i as f64 + local;
                    if d < best.1 - 1e-15 || (d < best.1 + 1e-15 && t < best.0) {
                        best = (t, d);
                    }
                }
                (self.unmap(best.0), best.1)
            }
            CurveKind::NacaSurface { .. } => {
                // scan uniformly in u = sqrt(t) to resolve the leading edge
                let n = 256;
                let mut best_i = 0;
                let mut best_d = f64::INFINITY;
                for i in 0..=n {
                    let u = i as f64 / n as f64;
                    let d = self.eval_raw(u * u).dist(p);
                    if d < best_d {
                        best_d = d;
                        best_i = i;
                    }
                }
                let lo_u = ((best_i as f64 - 1.0) / n as f64).max(0.0);
                let hi_u = ((best_i as f64 + 1.0) / n as f64).min(1.0);
                let (mut lo, mut hi) = (lo_u * lo_u, hi_u * hi_u);
                // golden-section polish on squared distance
                let phi = 0.618_033_988_749_894_9_f64;
                let mut x1 = hi - phi * (hi - lo);
                let mut x2 = lo + phi * (hi - lo);
                let mut f1 = self.eval_raw(x1).dist(p);
                let mut f2 = self.eval_raw(x2).dist(p);
                for _ in 0..90 {
                    if f1 <= f2 {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - phi * (hi - lo);
                        f1 = self.eval_raw(x1).dist(p);
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + phi * (hi - lo);
                        f2 = self.eval_raw(x2).dist(p);
                    }
                }
                let t = 0.5 * (lo + hi);
                (self.unmap(t), self.eval_raw(t).dist(p))
            }
        }
    }

    fn unmap(&self, t_raw: f64) -> f64 {
        if self.reversed {
            let (lo, hi) = self.param_range();
            lo + hi - t_raw
        } else {
            t_raw
        }
    }

    /// Sample the curve at arc spacing <= delta and displace by d along the
    /// leftward unit normal. Returns (params, offset points); the polyline may
    /// self-intersect, trimming is the medial module's job.
    pub fn offset_samples(&self, d: f64, delta: f64) -> Result<(Vec<f64>, Vec<Point>)> {
        if d <= 0.0 {
            return Err(Error::Argument(format!(
                "curve '{}': offset distance must be positive, got {}",
                self.name, d
            )));
        }
        if delta <= 0.0 {
            return Err(Error::Argument(format!(
                "curve '{}': sample spacing must be positive, got {}",
                self.name, delta
            )));
        }
        let (lo, hi) = self.param_range();
        let total = self.total_arc_length();
        let n = ((total / delta).ceil() as usize).max(1);
        let mut params = Vec::with_capacity(n + 1);
        let mut pts = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let t = self.param_at_arc_fraction(lo, hi, i as f64 / n as f64)?;
            let c = self.eval(t)?;
            let nrm = self.unit_tangent(t)?.left_normal();
            params.push(t);
            pts.push(c + nrm * d);
        }
        Ok((params, pts))
    }
}

/// Ordered collection of curves; boundary loops reference curves by id.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Geometry {
    pub curves: Vec<Curve>,
}

impl Geometry {
    pub fn add(&mut self, curve: Curve) -> CurveId {
        self.curves.push(curve);
        CurveId(self.curves.len() as u32 - 1)
    }

    pub fn curve(&self, id: CurveId) -> &Curve {
        &self.curves[id.0 as usize]
    }

    pub fn find_by_entity(&self, entity: &str) -> Option<CurveId> {
        self.curves
            .iter()
            .position(|c| c.entity == entity)
            .map(|i| CurveId(i as u32))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryLoop {
    pub curves: Vec<CurveId>,
    pub closed: bool,
}

impl BoundaryLoop {
    /// Endpoint coincidence and orientation checks. `hole` declares the
    /// expected sign of the enclosed area (bodies are holes of the flow
    /// domain and run clockwise, keeping the fluid on the left).
    pub fn validate(&self, geom: &Geometry, hole: bool) -> Result<()> {
        let n = self.curves.len();
        if n == 0 {
            return Err(Error::Argument("empty boundary loop".into()));
        }
        let mut sample = Vec::new();
        for &id in &self.curves {
            let c = geom.curve(id);
            let (lo, hi) = c.param_range();
            for k in 0..32 {
                sample.push(c.eval(lo + (hi - lo) * k as f64 / 32.0)?);
            }
        }
        let mut diam: f64 = 0.0;
        for p in &sample {
            for q in &sample {
                diam = diam.max(p.dist(*q));
            }
        }
        let last = if self.closed { n } else { n - 1 };
        for i in 0..last {
            let c0 = geom.curve(self.curves[i]);
            let c1 = geom.curve(self.curves[(i + 1) % n]);
            let e0 = c0.eval(c0.param_range().1)?;
            let s1 = c1.eval(c1.param_range().0)?;
            if e0.dist(s1) > 1e-12 * diam.max(1.0) {
                return Err(Error::Geometric(format!(
                    "loop gap between '{}' and '{}': {}",
                    c0.name,
                    c1.name,
                    e0.dist(s1)
                )));
            }
        }
        if self.closed {
            let area = polygon_signed_area(&sample);
            if hole && area >= 0.0 {
                return Err(Error::Geometric(
                    "hole loop must be clockwise (negative area)".into(),
                ));
            }
            if !hole && area <= 0.0 {
                return Err(Error::Geometric(
                    "outer loop must be counter-clockwise (positive area)".into(),
                ));
            }
        }
        Ok(())
    }
}
