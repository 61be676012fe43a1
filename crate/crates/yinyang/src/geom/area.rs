//! Polygon areas and boolean measures. The boolean engine decomposes the
//! plane into horizontal slabs cut at every vertex and every pairwise edge
//! intersection; inside a slab all crossing edges are non-intersecting
//! straight segments, so midpoint sampling of the even-odd fill is exact for
//! piecewise linear boundaries (up to roundoff).

use super::{GeomError, SampledCurve, Vec2};

type P = Vec2<f64>;

/// Shoelace signed area; positive for counterclockwise orientation.
pub fn enclosed_area(c: &SampledCurve<f64>) -> Result<f64, GeomError> {
    if !c.closed() {
        return Err(GeomError::OpenCurve);
    }
    Ok(shoelace(c.points()))
}

pub(crate) fn shoelace(pts: &[P]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

const SIMPLE_TOL: f64 = 1e-10;

/// True when no two non-adjacent edges cross with penetration beyond the
/// 1e-10 tolerance.
pub fn is_simple(c: &SampledCurve<f64>) -> bool {
    find_self_intersection(c.points(), c.closed()).is_none()
}

/// Location of a self-intersection, if any, for diagnostics.
pub fn self_intersection_point(c: &SampledCurve<f64>) -> Option<(f64, f64)> {
    find_self_intersection(c.points(), c.closed())
}

struct Seg {
    a: P,
    b: P,
    ymin: f64,
    ymax: f64,
    idx: usize,
}

fn make_segs(pts: &[P], closed: bool) -> Vec<Seg> {
    let n = pts.len();
    let count = if closed { n } else { n - 1 };
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        out.push(Seg {
            a,
            b,
            ymin: a.y.min(b.y),
            ymax: a.y.max(b.y),
            idx: i,
        });
    }
    out
}

/// Proper crossing test with distance tolerance: each segment's endpoints
/// must straddle the other's supporting line by more than `tol`.
fn proper_cross(p: &Seg, q: &Seg, tol: f64) -> Option<P> {
    let dp = p.b - p.a;
    let dq = q.b - q.a;
    let lp = dp.norm();
    let lq = dq.norm();
    if lp == 0.0 || lq == 0.0 {
        return None;
    }
    let o1 = dp.cross(q.a - p.a) / lp;
    let o2 = dp.cross(q.b - p.a) / lp;
    let o3 = dq.cross(p.a - q.a) / lq;
    let o4 = dq.cross(p.b - q.a) / lq;
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 && o1.abs().min(o2.abs()) > tol && o3.abs().min(o4.abs()) > tol
    {
        let s = o1 / (o1 - o2);
        Some(q.a + (q.b - q.a) * s)
    } else {
        None
    }
}

fn find_self_intersection(pts: &[P], closed: bool) -> Option<(f64, f64)> {
    let n = pts.len();
    let mut segs = make_segs(pts, closed);
    segs.sort_by(|u, v| u.ymin.partial_cmp(&v.ymin).unwrap());
    let count = segs.len();
    // sweep by ymin with lazily pruned active list
    let mut active: Vec<usize> = Vec::new();
    for i in 0..count {
        let si = &segs[i];
        active.retain(|&j| segs[j].ymax >= si.ymin);
        for &j in &active {
            let sj = &segs[j];
            let gap = (si.idx as isize - sj.idx as isize).rem_euclid(n as isize);
            let adjacent = gap == 1 || gap == n as isize - 1 || gap == 0;
            if adjacent {
                continue;
            }
            if si.a.x.max(si.b.x) < sj.a.x.min(sj.b.x) - SIMPLE_TOL
                || sj.a.x.max(sj.b.x) < si.a.x.min(si.b.x) - SIMPLE_TOL
            {
                continue;
            }
            if let Some(p) = proper_cross(si, sj, SIMPLE_TOL) {
                return Some((p.x, p.y));
            }
        }
        active.push(i);
    }
    None
}

/// Area of the boolean combination of two even-odd filled polygons.
#[derive(Clone, Copy, PartialEq)]
enum BoolMode {
    And,
    Xor,
}

fn boolean_area(a: &[P], b: &[P], mode: BoolMode) -> f64 {
    let mut segs = make_segs(a, true);
    let na = segs.len();
    segs.extend(make_segs(b, true));
    for (k, s) in segs.iter_mut().enumerate() {
        s.idx = k; // repurpose idx as tag boundary marker via position
    }

    // breakpoints: all vertex ordinates plus every pairwise crossing ordinate
    let mut ys: Vec<f64> = Vec::with_capacity(4 * segs.len());
    for s in &segs {
        ys.push(s.a.y);
        ys.push(s.b.y);
    }
    let mut order: Vec<usize> = (0..segs.len()).collect();
    order.sort_by(|&u, &v| segs[u].ymin.partial_cmp(&segs[v].ymin).unwrap());
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let si = &segs[i];
        active.retain(|&j| segs[j].ymax >= si.ymin);
        for &j in &active {
            let sj = &segs[j];
            if si.a.x.max(si.b.x) < sj.a.x.min(sj.b.x)
                || sj.a.x.max(sj.b.x) < si.a.x.min(si.b.x)
            {
                continue;
            }
            if let Some(p) = proper_cross(si, sj, 0.0) {
                ys.push(p.y);
            }
        }
        active.push(i);
    }
    ys.retain(|y| y.is_finite());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.dedup();

    // slab sweep: edges enter at ymin, leave when ymax drops below the slab
    order.sort_by(|&u, &v| segs[u].ymin.partial_cmp(&segs[v].ymin).unwrap());
    let mut next = 0usize;
    active.clear();
    let mut area = 0.0;
    let mut xs: Vec<(f64, bool)> = Vec::new();
    for w in ys.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        let width = y1 - y0;
        if width <= 0.0 {
            continue;
        }
        let ym = 0.5 * (y0 + y1);
        while next < order.len() && segs[order[next]].ymin <= ym {
            active.push(order[next]);
            next += 1;
        }
        active.retain(|&j| segs[j].ymax > ym);
        xs.clear();
        for &j in &active {
            let s = &segs[j];
            if s.ymin < ym && ym < s.ymax {
                let t = (ym - s.a.y) / (s.b.y - s.a.y);
                xs.push((s.a.x + t * (s.b.x - s.a.x), j < na));
            }
        }
        xs.sort_by(|u, v| u.0.partial_cmp(&v.0).unwrap());
        let mut in_a = false;
        let mut in_b = false;
        let mut prev_x = 0.0;
        for &(x, tag_a) in xs.iter() {
            let inside = match mode {
                BoolMode::And => in_a && in_b,
                BoolMode::Xor => in_a != in_b,
            };
            if inside {
                area += (x - prev_x) * width;
            }
            if tag_a {
                in_a = !in_a;
            } else {
                in_b = !in_b;
            }
            prev_x = x;
        }
    }
    area
}

fn check_simple(c: &SampledCurve<f64>) -> Result<(), GeomError> {
    if !c.closed() {
        return Err(GeomError::OpenCurve);
    }
    if let Some((x, y)) = find_self_intersection(c.points(), true) {
        return Err(GeomError::SelfIntersecting(x, y));
    }
    Ok(())
}

/// Area of (A \ B) union (B \ A) for the regions enclosed by two closed
/// simple curves. Symmetric in its arguments and nonnegative.
pub fn symmetric_difference_area(
    a: &SampledCurve<f64>,
    b: &SampledCurve<f64>,
) -> Result<f64, GeomError> {
    check_simple(a)?;
    check_simple(b)?;
    Ok(boolean_area(a.points(), b.points(), BoolMode::Xor))
}

/// Area of the intersection of the two enclosed regions.
pub fn intersection_area(
    a: &SampledCurve<f64>,
    b: &SampledCurve<f64>,
) -> Result<f64, GeomError> {
    check_simple(a)?;
    check_simple(b)?;
    Ok(boolean_area(a.points(), b.points(), BoolMode::And))
}
