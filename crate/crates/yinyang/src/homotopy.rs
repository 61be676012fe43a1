//! Normal homotopies between curves: the homotopy length ell(X), its
//! contraction under Curve Shortening, the Duhamel deviation bound for an
//! approximate solution, and the planar area comparison built on it.
//!
//! The sheet kernel (lengths, normalization) is written for general ambient
//! dimension: the contraction argument is stated for space curves and the
//! n = 3 case exercises the strict slack of the improved triangle inequality
//! that is an identity in the plane.

use thiserror::Error;

use crate::deficit::{total_error, DeficitError, TotalErrorConfig};
use crate::flow::{maybe_resample, step_parametric, FlowConfig, FlowError, FlowState};
use crate::geom::{GeomError, SampledCurve, Vec2};
use crate::soliton::{ExpansionCoefficients, SolitonTable};

type P = Vec2<f64>;

#[derive(Debug, Error)]
pub enum HomotopyError {
    #[error("sheet needs >= 2 slices with matched node counts")]
    MalformedSheet,
    #[error("normalization did not converge: residual {residual} after {sweeps} sweeps")]
    NonConvergence { residual: f64, sweeps: usize },
    #[error("area bound violated at t = {t}: symdiff {symdiff} > bound {bound}")]
    BoundViolation { t: f64, symdiff: f64, bound: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Deficit(#[from] DeficitError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

// ---------------------------------------------------------------------------
// minimal n-dimensional kernel

/// Ambient point for sheets; the rest of the crate is planar but the sheet
/// machinery is dimension-agnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointN<const N: usize>(pub [f64; N]);

impl<const N: usize> PointN<N> {
    pub fn zero() -> Self {
        PointN([0.0; N])
    }

    pub fn dot(self, other: Self) -> f64 {
        (0..N).map(|i| self.0[i] * other.0[i]).sum()
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(self, other: Self) -> Self {
        let mut out = self.0;
        for i in 0..N {
            out[i] += other.0[i];
        }
        PointN(out)
    }

    pub fn sub(self, other: Self) -> Self {
        let mut out = self.0;
        for i in 0..N {
            out[i] -= other.0[i];
        }
        PointN(out)
    }

    pub fn scale(self, s: f64) -> Self {
        let mut out = self.0;
        for x in &mut out {
            *x *= s;
        }
        PointN(out)
    }
}

impl From<P> for PointN<2> {
    fn from(p: P) -> Self {
        PointN([p.x, p.y])
    }
}

impl From<PointN<2>> for P {
    fn from(p: PointN<2>) -> Self {
        Vec2::new(p.0[0], p.0[1])
    }
}

// ---------------------------------------------------------------------------
// sheets

/// A one-parameter family of closed curves X(eps, p) on a shared node grid.
#[derive(Debug, Clone)]
pub struct HomotopySheet<const N: usize> {
    pub eps_grid: Vec<f64>,
    pub curves: Vec<Vec<PointN<N>>>,
}

impl<const N: usize> HomotopySheet<N> {
    pub fn new(eps_grid: Vec<f64>, curves: Vec<Vec<PointN<N>>>) -> Result<Self, HomotopyError> {
        let m = curves.len();
        if m < 2
            || eps_grid.len() != m
            || curves.iter().any(|c| c.len() < 3 || c.len() != curves[0].len())
            || eps_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(HomotopyError::MalformedSheet);
        }
        Ok(HomotopySheet { eps_grid, curves })
    }

    pub fn slices(&self) -> usize {
        self.curves.len()
    }

    pub fn nodes(&self) -> usize {
        self.curves[0].len()
    }

    /// Max over eps-intervals and nodes of the cosine between the discrete
    /// eps-velocity and the tangent of the midpoint curve.
    pub fn normality_residual(&self) -> f64 {
        let n = self.nodes();
        let mut worst = 0.0f64;
        for w in self.curves.windows(2) {
            for j in 0..n {
                let v = w[1][j].sub(w[0][j]);
                let nv = v.norm();
                if nv < 1e-12 {
                    continue;
                }
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                let t = w[0][jp].add(w[1][jp]).sub(w[0][jm]).sub(w[1][jm]);
                let nt = t.norm();
                if nt < 1e-12 {
                    continue;
                }
                worst = worst.max(v.dot(t).abs() / (nv * nt));
            }
        }
        worst
    }
}

/// Dual-cell arclengths of a closed polyline.
fn dual_cells<const N: usize>(pts: &[PointN<N>]) -> Vec<f64> {
    let n = pts.len();
    (0..n)
        .map(|j| {
            let jm = (j + n - 1) % n;
            let jp = (j + 1) % n;
            0.5 * (pts[j].sub(pts[jm]).norm() + pts[jp].sub(pts[j]).norm())
        })
        .collect()
}

/// ell(X) = int int ||X_eps|| ds deps: midpoint rule in eps (the forward
/// difference between consecutive slices lives at the interval midpoint),
/// trapezoid in arclength on the midpoint curve. The deps factors cancel:
/// each interval contributes sum_j ||X_{i+1,j} - X_{i,j}|| ds_j.
pub fn homotopy_length<const N: usize>(sheet: &HomotopySheet<N>) -> f64 {
    sheet
        .curves
        .windows(2)
        .map(|w| interval_length(&w[0], &w[1]))
        .sum()
}

fn interval_length<const N: usize>(a: &[PointN<N>], b: &[PointN<N>]) -> f64 {
    let mid: Vec<PointN<N>> = a
        .iter()
        .zip(b)
        .map(|(p, q)| p.add(*q).scale(0.5))
        .collect();
    let ds = dual_cells(&mid);
    a.iter()
        .zip(b)
        .zip(ds)
        .map(|((p, q), cell)| q.sub(*p).norm() * cell)
        .sum()
}

/// Arclength position of each node along a closed polyline plus the total.
fn cumulative<const N: usize>(pts: &[PointN<N>]) -> (Vec<f64>, f64) {
    let n = pts.len();
    let mut s = vec![0.0; n];
    for j in 1..n {
        s[j] = s[j - 1] + pts[j].sub(pts[j - 1]).norm();
    }
    let total = s[n - 1] + pts[0].sub(pts[n - 1]).norm();
    (s, total)
}

/// Point at arclength position along a closed polyline (wrapped).
fn point_at<const N: usize>(pts: &[PointN<N>], s: &[f64], total: f64, at: f64) -> PointN<N> {
    let n = pts.len();
    let at = at.rem_euclid(total);
    // s is sorted; binary search for the segment
    let j = match s.binary_search_by(|v| v.partial_cmp(&at).unwrap()) {
        Ok(j) => j,
        Err(j) => j - 1,
    };
    let jp = (j + 1) % n;
    let seg = if j + 1 < n { s[j + 1] - s[j] } else { total - s[j] };
    if seg < 1e-300 {
        return pts[j];
    }
    let f = (at - s[j]) / seg;
    pts[j].add(pts[jp].sub(pts[j]).scale(f))
}

/// Slide nodes of each slice along their own polyline until the discrete
/// eps-velocity is orthogonal to the tangent (iterative tangential
/// projection, slice by slice against its predecessor; slice 0 is fixed).
pub fn normalize_homotopy<const N: usize>(
    sheet: &HomotopySheet<N>,
) -> Result<HomotopySheet<N>, HomotopyError> {
    let mut curves = sheet.curves.clone();
    let n = sheet.nodes();
    let mut residual = f64::INFINITY;
    for sweeps in 0..50 {
        residual = 0.0f64;
        for i in 1..curves.len() {
            let (s, total) = cumulative(&curves[i]);
            let mut slid = curves[i].clone();
            for j in 0..n {
                let jm = (j + n - 1) % n;
                let jp = (j + 1) % n;
                let t = curves[i][jp].sub(curves[i][jm]);
                let nt = t.norm();
                if nt < 1e-12 {
                    continue;
                }
                let v = curves[i][j].sub(curves[i - 1][j]);
                let delta = v.dot(t) / nt;
                let nv = v.norm();
                if nv > 1e-12 {
                    residual = residual.max(delta.abs() / nv);
                }
                // clamp to half the local cell to keep node order
                let cell = 0.5 * (curves[i][j].sub(curves[i][jm]).norm()
                    + curves[i][jp].sub(curves[i][j]).norm());
                let step = delta.clamp(-0.4 * cell, 0.4 * cell);
                slid[j] = point_at(&curves[i], &s, total, s[j] - step);
            }
            curves[i] = slid;
        }
        if residual < 1e-3 {
            let _ = sweeps;
            return HomotopySheet::new(sheet.eps_grid.clone(), curves);
        }
    }
    Err(HomotopyError::NonConvergence { residual, sweeps: 50 })
}

// ---------------------------------------------------------------------------
// evolution under Curve Shortening (planar)

/// ell(t) time series with the per-interval integrals int ||X_eps|| ds.
#[derive(Debug, Clone)]
pub struct EvolveRecord {
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
    pub interval_lengths: Vec<Vec<f64>>,
}

/// Evolve every eps-slice by Curve Shortening from t0 to t1 with a shared
/// time step, renormalizing the sheet every `normalize_every` steps. Node
/// redistribution is not applied: it would break the cross-slice node
/// correspondence the discrete X_eps lives on, and the contraction windows
/// are short enough for the De Turck term to keep spacings healthy.
pub fn evolve_homotopy(
    sheet: &HomotopySheet<2>,
    t0: f64,
    t1: f64,
    cfg: &FlowConfig,
    normalize_every: usize,
) -> Result<(HomotopySheet<2>, EvolveRecord), HomotopyError> {
    let mut states: Vec<FlowState> = sheet
        .curves
        .iter()
        .map(|c| {
            let pts: Vec<P> = c.iter().map(|&p| p.into()).collect();
            Ok(FlowState::new(t0, SampledCurve::new(pts, true)?))
        })
        .collect::<Result<_, GeomError>>()?;

    let snapshot = |states: &[FlowState]| -> Vec<Vec<PointN<2>>> {
        states
            .iter()
            .map(|s| s.curve.points().iter().map(|&p| p.into()).collect())
            .collect()
    };
    let record_sheet = |curves: Vec<Vec<PointN<2>>>,
                        t: f64,
                        rec: &mut EvolveRecord|
     -> Result<HomotopySheet<2>, HomotopyError> {
        let sheet = normalize_homotopy(&HomotopySheet::new(sheet.eps_grid.clone(), curves)?)?;
        let per: Vec<f64> = sheet
            .curves
            .windows(2)
            .map(|w| interval_length(&w[0], &w[1]))
            .collect();
        rec.times.push(t);
        rec.lengths.push(per.iter().sum());
        rec.interval_lengths.push(per);
        Ok(sheet)
    };

    let mut rec = EvolveRecord { times: vec![], lengths: vec![], interval_lengths: vec![] };
    record_sheet(snapshot(&states), t0, &mut rec)?;

    let mut t = t0;
    let mut steps = 0usize;
    while t < t1 - 1e-12 {
        // shared dt: the tightest slice limits everyone so slices stay in sync
        let dt = states
            .iter()
            .map(|s| {
                let pts = s.curve.points();
                let n = pts.len();
                let h_min = (0..n)
                    .map(|j| (pts[(j + 1) % n] - pts[j]).norm())
                    .fold(f64::INFINITY, f64::min);
                cfg.c_stab * h_min * h_min
            })
            .fold(t1 - t, f64::min);
        for s in &mut states {
            step_parametric(s, dt, cfg)?;
        }
        t = states[0].t;
        steps += 1;
        if steps % normalize_every == 0 {
            let normalized = record_sheet(snapshot(&states), t, &mut rec)?;
            for (s, c) in states.iter_mut().zip(&normalized.curves) {
                let pts: Vec<P> = c.iter().map(|&p| p.into()).collect();
                s.curve = SampledCurve::new(pts, true)?;
            }
        }
    }
    let final_sheet = record_sheet(snapshot(&states), t, &mut rec)?;
    Ok((final_sheet, rec))
}

// ---------------------------------------------------------------------------
// Duhamel deviation

/// Sheet of flowed snapshots: for each grid time t_i, flow curve_at(t_i) by
/// Curve Shortening to t1; the final curves, indexed by eps = t_i, form the
/// Duhamel sheet whose length bounds the deviation of the approximate
/// solution from the true flow. Returns the normalized sheet and its length.
pub fn duhamel_sheet(
    curve_at: &dyn Fn(f64) -> Result<SampledCurve<f64>, HomotopyError>,
    t0: f64,
    t1: f64,
    slices: usize,
    cfg: &FlowConfig,
) -> Result<(HomotopySheet<2>, f64), HomotopyError> {
    assert!(slices >= 2 && t1 > t0);
    let mut finals: Vec<SampledCurve<f64>> = Vec::with_capacity(slices);
    let mut eps = Vec::with_capacity(slices);
    for i in 0..slices {
        let ti = t0 + (t1 - t0) * i as f64 / (slices - 1) as f64;
        let mut state = FlowState::new(ti, curve_at(ti)?);
        while state.t < t1 - 1e-12 {
            let dt_max = t1 - state.t;
            step_parametric(&mut state, dt_max, cfg)?;
            maybe_resample(&mut state, cfg)?;
        }
        finals.push(state.curve);
        eps.push(ti);
    }
    // common node grid, each slice anchored to its predecessor's start node
    // so the residual tangential offset is small enough for normalization
    let n_sheet = finals.iter().map(|c| c.len()).min().unwrap();
    let mut curves: Vec<Vec<PointN<2>>> = Vec::with_capacity(slices);
    for (i, c) in finals.iter().enumerate() {
        let pts: Vec<PointN<2>> = c.points().iter().map(|&p| p.into()).collect();
        let (s, total) = cumulative(&pts);
        let start = if i == 0 {
            0.0
        } else {
            let anchor = curves[i - 1][0];
            let j = (0..pts.len())
                .min_by(|&a, &b| {
                    pts[a]
                        .sub(anchor)
                        .norm()
                        .partial_cmp(&pts[b].sub(anchor).norm())
                        .unwrap()
                })
                .unwrap();
            s[j]
        };
        curves.push(
            (0..n_sheet)
                .map(|k| point_at(&pts, &s, total, start + total * k as f64 / n_sheet as f64))
                .collect(),
        );
    }
    if t1 - t0 < 1e-12 {
        return Err(HomotopyError::MalformedSheet);
    }
    let sheet = normalize_homotopy(&HomotopySheet::new(eps, curves)?)?;
    let ell = homotopy_length(&sheet);
    Ok((sheet, ell))
}

#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub ell: f64,
    pub delta: f64,
    pub ratio: f64,
}

/// Deviation of the approximate solution from Curve Shortening over
/// [t0, t1]: the Duhamel sheet length against the deficit integral Delta.
pub fn duhamel_deviation(
    curve_at: &dyn Fn(f64) -> Result<SampledCurve<f64>, HomotopyError>,
    t0: f64,
    t1: f64,
    slices: usize,
    flow_cfg: &FlowConfig,
    deficit_cfg: &TotalErrorConfig,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<DeviationReport, HomotopyError> {
    if t1 <= t0 {
        // degenerate window
        return Ok(DeviationReport { ell: 0.0, delta: 0.0, ratio: 0.0 });
    }
    let (_, ell) = duhamel_sheet(curve_at, t0, t1, slices, flow_cfg)?;
    let delta = total_error(t0, t1, deficit_cfg, table, coeffs)?.integral;
    Ok(DeviationReport { ell, delta, ratio: ell / delta })
}

// ---------------------------------------------------------------------------
// planar area comparison

#[derive(Debug, Clone)]
pub struct AreaComparison {
    pub times: Vec<f64>,
    pub symdiff: Vec<f64>,
    pub bound: Vec<f64>,
}

/// Check the planar area estimate: at each output time, the symmetric
/// difference between the flowed region and the approximate one must stay
/// below A0 + Delta(t0, t) * margin. The caller supplies the measured
/// symmetric differences and the deficit integral Delta as a function of t.
pub fn area_comparison(
    times: &[f64],
    symdiff: &[f64],
    a0: f64,
    delta_to: &dyn Fn(f64) -> f64,
    margin: f64,
) -> Result<AreaComparison, HomotopyError> {
    assert_eq!(times.len(), symdiff.len());
    let mut bound = Vec::with_capacity(times.len());
    for (&t, &d) in times.iter().zip(symdiff) {
        let b = a0 + delta_to(t) * margin;
        if d > b {
            return Err(HomotopyError::BoundViolation { t, symdiff: d, bound: b });
        }
        bound.push(b);
    }
    Ok(AreaComparison { times: times.to_vec(), symdiff: symdiff.to_vec(), bound })
}

/// Max over nodes of the improved-triangle-inequality defect
/// (||X_eps||_s)^2 - ||X_eps_s||^2 + <X_ss, X_eps>^2 on a normal sheet
/// (non-positive in the continuum; an identity in the plane, strict slack
/// for genuinely three-dimensional sheets).
pub fn improved_triangle_defect<const N: usize>(sheet: &HomotopySheet<N>) -> f64 {
    let n = sheet.nodes();
    let mut worst = f64::NEG_INFINITY;
    for w in sheet.curves.windows(2) {
        let deps = 1.0; // common factor cancels between both sides
        let mid: Vec<PointN<N>> = w[0]
            .iter()
            .zip(&w[1])
            .map(|(p, q)| p.add(*q).scale(0.5))
            .collect();
        let v: Vec<PointN<N>> = w[0]
            .iter()
            .zip(&w[1])
            .map(|(p, q)| q.sub(*p).scale(1.0 / deps))
            .collect();
        for j in 0..n {
            let jm = (j + n - 1) % n;
            let jp = (j + 1) % n;
            let dm = mid[j].sub(mid[jm]).norm();
            let dp = mid[jp].sub(mid[j]).norm();
            let two_h = dm + dp;
            // first and second arclength derivatives on the midpoint curve
            let xeps_s = v[jp].sub(v[jm]).scale(1.0 / two_h);
            let norm_s = (v[jp].norm() - v[jm].norm()) / two_h;
            let x_ss = mid[jp]
                .sub(mid[j])
                .scale(1.0 / dp)
                .sub(mid[j].sub(mid[jm]).scale(1.0 / dm))
                .scale(2.0 / two_h);
            let defect = norm_s * norm_s - xeps_s.dot(xeps_s) + x_ss.dot(v[j]).powi(2);
            worst = worst.max(defect);
        }
    }
    worst
}
