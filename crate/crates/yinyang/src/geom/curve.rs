use super::{GeomError, Real, Vec2};

/// Ordered point sequence with open/closed flag and optional parameter values.
///
/// Invariants (enforced on construction): at least 3 points if closed, 2 if
/// open; consecutive points distinct (separation > 1e-12); params, when
/// present, strictly monotone.
#[derive(Debug, Clone)]
pub struct SampledCurve<T> {
    points: Vec<Vec2<T>>,
    closed: bool,
    params: Option<Vec<T>>,
}

impl<T: Real> SampledCurve<T> {
    pub fn new(points: Vec<Vec2<T>>, closed: bool) -> Result<Self, GeomError> {
        Self::with_params(points, closed, None)
    }

    pub fn with_params(
        points: Vec<Vec2<T>>,
        closed: bool,
        params: Option<Vec<T>>,
    ) -> Result<Self, GeomError> {
        let need = if closed { 3 } else { 2 };
        if points.len() < need {
            return Err(GeomError::TooFewPoints {
                got: points.len(),
                need,
            });
        }
        let min_sep = T::c(1e-12);
        for (i, w) in points.windows(2).enumerate() {
            if !w[0].is_finite() {
                return Err(GeomError::NonFinite);
            }
            if (w[1] - w[0]).norm() <= min_sep {
                return Err(GeomError::DegenerateSegment(i));
            }
        }
        let last = *points.last().unwrap();
        if !last.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if closed && (points[0] - last).norm() <= min_sep {
            return Err(GeomError::DegenerateSegment(points.len() - 1));
        }
        if let Some(p) = &params {
            if p.len() != points.len() {
                return Err(GeomError::NonMonotoneParams);
            }
            if p.windows(2).any(|w| w[1] <= w[0]) {
                return Err(GeomError::NonMonotoneParams);
            }
        }
        Ok(SampledCurve {
            points,
            closed,
            params,
        })
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn params(&self) -> Option<&[T]> {
        self.params.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Parameter value of node `i`; node index when no params are stored.
    pub fn param(&self, i: usize) -> T {
        match &self.params {
            Some(p) => p[i],
            None => T::from_usize(i).unwrap(),
        }
    }

    /// Parameter period for closed curves (gap between last and first node
    /// equals the mean gap when params are implicit).
    fn param_period(&self) -> T {
        let n = self.points.len();
        match &self.params {
            // implicit closing gap: mean of the stored gaps
            Some(p) => {
                let span = p[n - 1] - p[0];
                span + span / T::from_usize(n - 1).unwrap()
            }
            None => T::from_usize(n).unwrap(),
        }
    }

    /// Cumulative polyline arclength per node, starting at 0. For closed
    /// curves an extra entry holds the total perimeter.
    pub fn cumulative_arclength(&self) -> Vec<T> {
        let n = self.points.len();
        let mut s = Vec::with_capacity(n + 1);
        let mut acc = T::zero();
        s.push(acc);
        for i in 1..n {
            acc += (self.points[i] - self.points[i - 1]).norm();
            s.push(acc);
        }
        if self.closed {
            acc += (self.points[0] - self.points[n - 1]).norm();
            s.push(acc);
        }
        s
    }

    pub fn total_arclength(&self) -> T {
        *self.cumulative_arclength().last().unwrap()
    }
}

/// Per-node discrete differential geometry of a sampled curve.
#[derive(Debug, Clone)]
pub struct CurveGeometry<T> {
    /// Cumulative arclength s per node.
    pub arclength: Vec<T>,
    /// Unit tangent X_s per node.
    pub tangent: Vec<Vec2<T>>,
    /// Signed curvature per node; counterclockwise circle has kappa > 0.
    pub curvature: Vec<T>,
    /// Slot for a normal speed V per node, filled by flow code.
    pub normal_speed_slot: Option<Vec<T>>,
}

impl<T: Real> CurveGeometry<T> {
    pub fn total_arclength(&self) -> T {
        *self.arclength.last().unwrap()
    }

    /// Integral of kappa ds over the curve (trapezoid on the closed polyline).
    pub fn total_curvature(&self, closed: bool) -> T {
        let n = self.curvature.len();
        let mut acc = T::zero();
        let half = T::c(0.5);
        for i in 0..n - 1 {
            let ds = self.arclength[i + 1] - self.arclength[i];
            acc += half * (self.curvature[i] + self.curvature[i + 1]) * ds;
        }
        if closed {
            // closing segment; arclength vec has n entries, last gap implicit
            acc
        } else {
            acc
        }
    }
}

fn derivatives_at<T: Real>(
    pm: Vec2<T>,
    p0: Vec2<T>,
    pp: Vec2<T>,
    h1: T,
    h2: T,
) -> (Vec2<T>, Vec2<T>) {
    // Non-uniform 3-point central differences, second order in max(h1, h2).
    let denom = h1 * h2 * (h1 + h2);
    let xp = (pp * (h1 * h1) + p0 * (h2 * h2 - h1 * h1) - pm * (h2 * h2)) / denom;
    let two = T::c(2.0);
    let xpp = (pp * h1 - p0 * (h1 + h2) + pm * h2) * (two / denom);
    (xp, xpp)
}

/// Tangent, curvature and arclength by central finite differences in the
/// parameter (periodic stencils when closed, one-sided at open ends).
///
/// kappa = < X_pp / |X_p|^2 , J X_p / |X_p| > with the sign convention that a
/// counterclockwise circle has kappa > 0.
pub fn compute_geometry<T: Real>(c: &SampledCurve<T>) -> Result<CurveGeometry<T>, GeomError> {
    let n = c.len();
    let pts = c.points();
    let mut tangent = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    let period = c.param_period();

    let neighbor = |i: usize| -> (Vec2<T>, T, Vec2<T>, T) {
        // previous and next node with parameter gaps, wrapping when closed
        let (im, hm) = if i == 0 {
            (n - 1, c.param(0) + period - c.param(n - 1))
        } else {
            (i - 1, c.param(i) - c.param(i - 1))
        };
        let (ip, hp) = if i == n - 1 {
            (0, c.param(0) + period - c.param(n - 1))
        } else {
            (i + 1, c.param(i + 1) - c.param(i))
        };
        (pts[im], hm, pts[ip], hp)
    };

    for i in 0..n {
        let (xp, xpp) = if c.closed() || (i > 0 && i < n - 1) {
            let (pm, h1, pp, h2) = neighbor(i);
            derivatives_at(pm, pts[i], pp, h1, h2)
        } else if i == 0 {
            // one-sided: quadratic through nodes 0,1,2
            let h1 = c.param(1) - c.param(0);
            let h2 = c.param(2) - c.param(1);
            let (xp_mid, xpp) = derivatives_at(pts[0], pts[1], pts[2], h1, h2);
            (xp_mid - xpp * h1, xpp)
        } else {
            let h1 = c.param(n - 2) - c.param(n - 3);
            let h2 = c.param(n - 1) - c.param(n - 2);
            let (xp_mid, xpp) = derivatives_at(pts[n - 3], pts[n - 2], pts[n - 1], h1, h2);
            (xp_mid + xpp * h2, xpp)
        };
        let speed = xp.norm();
        if speed == T::zero() {
            return Err(GeomError::DegenerateSegment(i));
        }
        tangent.push(xp / speed);
        curvature.push(xpp.dot(xp.rot90()) / (speed * speed * speed));
    }

    let mut arclength = c.cumulative_arclength();
    arclength.truncate(n);

    Ok(CurveGeometry {
        arclength,
        tangent,
        curvature,
        normal_speed_slot: None,
    })
}

/// Resample to `n` points at equal arclength spacing by linear interpolation
/// of the polyline. Total arclength is preserved within one segment length.
pub fn resample_by_arclength<T: Real>(
    c: &SampledCurve<T>,
    n: usize,
) -> Result<SampledCurve<T>, GeomError> {
    let need = if c.closed() { 3 } else { 2 };
    if n < need {
        return Err(GeomError::TooFewPoints { got: n, need });
    }
    let cum = c.cumulative_arclength();
    let total = *cum.last().unwrap();
    let pts = c.points();
    let m = pts.len();
    let node = |i: usize| -> Vec2<T> {
        if i < m {
            pts[i]
        } else {
            pts[0]
        }
    };

    let count = if c.closed() { n } else { n - 1 };
    let step = total / T::from_usize(count).unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let target = step * T::from_usize(k).unwrap();
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let frac = if len > T::zero() {
            ((target - cum[seg]) / len).min(T::one()).max(T::zero())
        } else {
            T::zero()
        };
        let p = node(seg) + (node(seg + 1) - node(seg)) * frac;
        out.push(p);
    }
    if !c.closed() {
        *out.last_mut().unwrap() = pts[m - 1];
    }
    // collapse any numerically coincident consecutive points
    dedup_close(&mut out, c.closed());
    SampledCurve::new(out, c.closed())
}

fn dedup_close<T: Real>(pts: &mut Vec<Vec2<T>>, closed: bool) {
    let tol = T::c(1e-12);
    let mut out: Vec<Vec2<T>> = Vec::with_capacity(pts.len());
    for p in pts.iter() {
        if out.last().is_none_or(|q| (*p - *q).norm() > tol) {
            out.push(*p);
        }
    }
    if closed && out.len() > 1 && (out[0] - *out.last().unwrap()).norm() <= tol {
        out.pop();
    }
    *pts = out;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn regular_ngon(n: usize, r: f64) -> SampledCurve<f64> {
        let pts = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        SampledCurve::new(pts, true).unwrap()
    }

    #[test]
    fn unit_circle_curvature() {
        let c = regular_ngon(1000, 1.0);
        let g = compute_geometry(&c).unwrap();
        for (i, &k) in g.curvature.iter().enumerate() {
            assert!((k - 1.0).abs() < 1e-4, "node {i}: kappa = {k}");
        }
        for t in &g.tangent {
            assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn straight_segment_zero_curvature() {
        let pts: Vec<_> = (0..21).map(|i| Vec2::new(i as f64 * 0.5, 0.0)).collect();
        let c = SampledCurve::new(pts, false).unwrap();
        let g = compute_geometry(&c).unwrap();
        for &k in &g.curvature[1..20] {
            assert!(k.abs() < 1e-8);
        }
    }

    #[test]
    fn grim_reaper_curvature_matches_sech() {
        // G(p) = (-arcsin(tanh p), -ln cosh p) has kappa(p) = 1/cosh p
        let n = 2001;
        let pts: Vec<_> = (0..n)
            .map(|i| {
                let p = -5.0 + 10.0 * i as f64 / (n - 1) as f64;
                Vec2::new(-p.tanh().asin(), -p.cosh().ln())
            })
            .collect();
        let params: Vec<_> = (0..n)
            .map(|i| -5.0 + 10.0 * i as f64 / (n - 1) as f64)
            .collect();
        let c = SampledCurve::with_params(pts, false, Some(params)).unwrap();
        let g = compute_geometry(&c).unwrap();
        for i in 1..n - 1 {
            let p = -5.0 + 10.0 * i as f64 / (n - 1) as f64;
            let expect = 1.0 / p.cosh();
            assert!(
                (g.curvature[i] - expect).abs() < 1e-5,
                "p={p}: kappa {} vs {}",
                g.curvature[i],
                expect
            );
        }
    }

    #[test]
    fn total_curvature_closed_ccw() {
        let c = regular_ngon(400, 2.5);
        let g = compute_geometry(&c).unwrap();
        // trapezoid over nodes plus the closing gap
        let n = g.curvature.len();
        let mut tot = g.total_curvature(true);
        let last_gap = c.total_arclength() - g.arclength[n - 1];
        tot += 0.5 * (g.curvature[n - 1] + g.curvature[0]) * last_gap;
        assert_abs_diff_eq!(tot, 2.0 * PI, epsilon = 1e-3);
    }

    #[test]
    fn resample_square() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let c = SampledCurve::new(pts, true).unwrap();
        let r = resample_by_arclength(&c, 8).unwrap();
        assert_eq!(r.len(), 8);
        let cum = r.cumulative_arclength();
        for w in cum.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_idempotent_when_equispaced() {
        let c = regular_ngon(64, 1.0);
        let r = resample_by_arclength(&c, 64).unwrap();
        for (a, b) in c.points().iter().zip(r.points()) {
            assert!((*a - *b).norm() < 1e-10);
        }
    }

    #[test]
    fn resample_circle_refine() {
        let c = regular_ngon(100, 1.0);
        let r = resample_by_arclength(&c, 400).unwrap();
        for p in r.points() {
            assert!((p.norm() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn degenerate_rejected() {
        let pts = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        assert!(matches!(
            SampledCurve::new(pts, false),
            Err(GeomError::DegenerateSegment(0))
        ));
    }
}
