//! Tip-centered (u,v) coordinates, the Yin-Yang foliation and its graph
//! representation, the interpolants k_pm gluing the cap to the arms, and the
//! assembled closed curve C_*(t) together with the truncated region Omega(t).

use crate::cap::{cap_end_expansion, correction_F_derivs, grim_reaper, CapError};
use crate::geom::{resample_by_arclength, rotate, GeomError, SampledCurve, Vec2};
use crate::soliton::{
    eval_R_any, eval_u_any, tau_quantities, ExpansionCoefficients, SolitonError, SolitonTable,
};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

type P = Vec2<f64>;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("no graph root for leaf y = {y} at v = {v}")]
    NoRoot { y: f64, v: f64 },
    #[error("seam location failed on arm y = {0}")]
    SeamNotFound(f64),
    #[error(transparent)]
    Soliton(#[from] SolitonError),
    #[error(transparent)]
    Cap(#[from] CapError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Tip frame at time t: Z = R { e^{tJ} X - R e1 }, X = e^{-tJ} { R e1 + Z/R }.
#[derive(Debug, Clone, Copy)]
pub struct ZFrame {
    pub t: f64,
    pub R: f64,
    pub eps: f64,
    pub rotation_angle: f64,
}

impl ZFrame {
    pub fn new(
        t: f64,
        table: &SolitonTable,
        coeffs: &ExpansionCoefficients,
    ) -> Result<Self, AssemblyError> {
        let q = tau_quantities(t, coeffs, table)?;
        Ok(ZFrame {
            t,
            R: q.R,
            eps: q.eps,
            rotation_angle: -t,
        })
    }

    pub fn to_Z(&self, x: P) -> P {
        let w = rotate(x, self.t);
        Vec2::new(self.R * w.x - self.R * self.R, self.R * w.y)
    }

    pub fn from_Z(&self, z: P) -> P {
        rotate(
            Vec2::new(self.R + z.x * self.eps, z.y * self.eps),
            self.rotation_angle,
        )
    }
}

/// One leaf of the Yin-Yang foliation: Y(theta, t, y) = R(theta - t + y) E1(theta).
#[derive(Debug, Clone, Copy)]
pub struct FoliationLeaf {
    pub y: f64,
    pub t: f64,
}

pub fn leaf_point(
    leaf: FoliationLeaf,
    theta: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<P, AssemblyError> {
    let (r, _) = eval_R_any(table, coeffs, theta - leaf.t + leaf.y)?;
    Ok(Vec2::new(r * theta.cos(), r * theta.sin()))
}

/// Squared soliton radius via the first integral, R^2 = 2 (alpha - u).
fn soliton_r_sq(
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
    alpha: f64,
) -> Result<f64, AssemblyError> {
    let u = eval_u_any(table, coeffs, alpha)?;
    Ok(2.0 * (alpha - u))
}

/// Solve for u in
///     R(theta - t + y)^2 = R^2 + 2u + (u^2 + v^2)/R^2,
///     theta + t = arctan( (v/R^2) / (1 + u/R^2) ),
/// at fixed (y, t, v) by bisection seeded at the quadratic expansion value.
pub fn leaf_as_uv_graph(
    y: f64,
    t: f64,
    v: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<f64, AssemblyError> {
    let q = tau_quantities(t, coeffs, table)?;
    let r2 = q.R * q.R;
    let tau = q.tau;
    let resid = |u: f64| -> Result<f64, AssemblyError> {
        // theta + t from the angular equation, then the radial equation
        let tp = (v / (r2 + u)).atan();
        let alpha = tp - 2.0 * t + y;
        Ok(soliton_r_sq(table, coeffs, alpha)? - (r2 + 2.0 * u + (u * u + v * v) / r2))
    };
    let u0 = y - (y * y + v * v - 2.0 * v) / (2.0 * tau);
    // residual is strictly decreasing in u; expand the bracket if the seed
    // interval does not straddle the root
    let mut half = 1.0;
    let (mut a, mut b, mut fa);
    loop {
        a = u0 - half;
        b = u0 + half;
        fa = resid(a)?;
        let fb = resid(b)?;
        if fa * fb <= 0.0 {
            break;
        }
        half *= 2.0;
        if half > PI + 2.0 {
            return Err(AssemblyError::NoRoot { y, v });
        }
    }
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = resid(m)?;
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
        if b - a < 1e-14 * (1.0 + u0.abs()) {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Smooth nondecreasing cutoff, exactly 0 for x <= 1/2 and 1 for x >= 2.
pub fn eta(x: f64) -> f64 {
    if x <= 0.5 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        let s = (x - 0.5) / 1.5;
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// Which arm: Plus is the outer arm (y = +pi/2, larger radius, u near +pi/2,
/// the cap end reached as p -> -infinity), Minus the inner arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArmSign {
    Plus,
    Minus,
}

impl ArmSign {
    pub fn y(self) -> f64 {
        match self {
            ArmSign::Plus => FRAC_PI_2,
            ArmSign::Minus => -FRAC_PI_2,
        }
    }
}

/// Cap-end graph height h_pm(t, v).
pub fn h_pm(sign: ArmSign, t: f64, v: f64, cap_b: f64) -> f64 {
    let (hp, hm) = cap_end_expansion(t, v, cap_b);
    match sign {
        ArmSign::Plus => hp,
        ArmSign::Minus => hm,
    }
}

/// k_pm = eta(-v / band) U_pm + (1 - eta(-v / band)) h_pm with a general band
/// scale; the blend occupies band/2 <= -v <= 2*band, inside the overlap region
/// ln(tau) << -v << sqrt(tau) where both graph representations are valid.
pub fn interpolant_k_banded(
    sign: ArmSign,
    t: f64,
    v: f64,
    band: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
    cap_b: f64,
) -> Result<f64, AssemblyError> {
    let e = eta(-v / band);
    if e == 0.0 {
        return Ok(h_pm(sign, t, v, cap_b));
    }
    let u = leaf_as_uv_graph(sign.y(), t, v, table, coeffs)?;
    if e == 1.0 {
        return Ok(u);
    }
    let h = h_pm(sign, t, v, cap_b);
    Ok(h + e * (u - h))
}

/// k_pm with the band scale ln(tau), blending over ln(tau)/2 <= -v <= 2 ln(tau).
pub fn interpolant_k(
    sign: ArmSign,
    t: f64,
    v: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
    cap_b: f64,
) -> Result<f64, AssemblyError> {
    interpolant_k_banded(sign, t, v, (-4.0 * t).ln(), table, coeffs, cap_b)
}

/// Polar-angle padding at which the two arms are truncated near the origin:
/// each arm ends where its R-argument reaches pi/2 + THETA_PAD.
pub const THETA_PAD: f64 = 0.05;
/// The closure follows the true spiral tips down to R-argument pi/2 + TIP_S_MIN
/// before cutting across the origin with a chord.
pub const TIP_S_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentTag {
    InnerArm,
    TransitionMinus,
    Cap,
    TransitionPlus,
    OuterArm,
    Closure,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblySegment {
    pub tag: SegmentTag,
    /// Arclength range of the segment along the assembled curve.
    pub param_range: (f64, f64),
}

/// The raw generating chains in traversal (counterclockwise) order: outer arm
/// ascending in polar angle, outer transition (v rising from the seam), cap
/// (p from the outer side to the inner), inner transition (v falling), inner
/// arm descending, and the closure through the origin. Kept alongside the
/// resampled curve so seam-level diagnostics can use exact chain points.
#[derive(Debug, Clone)]
pub struct RawAssembly {
    pub outer_arm: Vec<P>,
    pub transition_plus: Vec<P>,
    pub cap: Vec<P>,
    pub transition_minus: Vec<P>,
    pub inner_arm: Vec<P>,
    pub closure: Vec<P>,
    /// Polar angles where the arms hand over to the transitions.
    pub theta_seam_inner: f64,
    pub theta_seam_outer: f64,
    /// (v at the arm seams, v at the cap seams) = (-2K ln tau, -K/2 ln tau).
    pub v_band: (f64, f64),
    /// Signed p-range of the retained cap piece (p_minus < 0 < p_plus).
    pub p_range: (f64, f64),
}

impl RawAssembly {
    /// Closed polygon concatenating the raw chains, without resampling.
    pub fn polygon(&self) -> Result<SampledCurve<f64>, AssemblyError> {
        let mut pts: Vec<P> = Vec::new();
        for chain in [
            &self.outer_arm,
            &self.transition_plus,
            &self.cap,
            &self.transition_minus,
            &self.inner_arm,
            &self.closure,
        ] {
            append_dedup(&mut pts, chain.iter().copied());
        }
        if pts.len() > 1 && (pts[0] - *pts.last().unwrap()).norm() <= 1e-9 {
            pts.pop();
        }
        Ok(SampledCurve::new(pts, true)?)
    }
}

#[derive(Debug, Clone)]
pub struct AssembledCurve {
    pub t: f64,
    pub curve: SampledCurve<f64>,
    pub segments: Vec<AssemblySegment>,
    pub seam_params: [f64; 4],
    pub raw: RawAssembly,
}

#[derive(Debug, Clone, Copy)]
pub struct AssemblyConfig {
    /// Band scale multiplier K: the blend occupies K ln(tau)/2 <= -v <= 2K ln(tau).
    /// The cap deviates from its end expansion h by ~2 tau^{-K/2} at the cap
    /// seam, so K must be large enough for smooth gluing, while the quadratic
    /// expansions require |v| well below sqrt(tau), capping K at moderate tau.
    /// K = 3 balances both for tau in [100, 4000].
    pub k_band: f64,
    /// Matching constant B of the cap correction.
    pub cap_b: f64,
    /// Ambient chord target for arm sampling.
    pub arm_chord: f64,
    pub transition_nodes: usize,
    pub cap_nodes: usize,
    pub tip_nodes: usize,
    /// Uniform arclength spacing of the output; None picks 0.5 / R(t).
    pub resample_spacing: Option<f64>,
    pub validate: bool,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            k_band: 3.0,
            cap_b: -1.0,
            arm_chord: 0.1,
            transition_nodes: 200,
            cap_nodes: 1200,
            tip_nodes: 48,
            resample_spacing: None,
            validate: true,
        }
    }
}

/// v-coordinate of the leaf point at polar angle theta, in the frame at t.
fn leaf_v(
    leaf: FoliationLeaf,
    theta: f64,
    frame: &ZFrame,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<f64, AssemblyError> {
    let (r, _) = eval_R_any(table, coeffs, theta - leaf.t + leaf.y)?;
    Ok(frame.R * r * (theta + leaf.t).sin())
}

/// Polar angle on the leaf at which v equals `v_target` (< 0), found between
/// theta = -t (where v = 0) and smaller angles.
fn seam_theta(
    leaf: FoliationLeaf,
    v_target: f64,
    frame: &ZFrame,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<f64, AssemblyError> {
    let t = leaf.t;
    let mut d = 0.05;
    let mut lo;
    loop {
        lo = -t - d;
        if leaf_v(leaf, lo, frame, table, coeffs)? < v_target {
            break;
        }
        if d >= 1.55 {
            return Err(AssemblyError::SeamNotFound(leaf.y));
        }
        d = (2.0 * d).min(1.55);
    }
    let mut hi = -t;
    for _ in 0..70 {
        let m = 0.5 * (lo + hi);
        if leaf_v(leaf, m, frame, table, coeffs)? < v_target {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sample a leaf between two polar angles with approximately uniform ambient
/// chord length (capped at 0.02 rad steps), endpoints included.
pub(crate) fn sample_leaf(
    leaf: FoliationLeaf,
    theta_from: f64,
    theta_to: f64,
    chord: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<Vec<P>, AssemblyError> {
    let dir = if theta_to >= theta_from { 1.0 } else { -1.0 };
    let mut out = Vec::new();
    let mut theta = theta_from;
    loop {
        out.push(leaf_point(leaf, theta, table, coeffs)?);
        if (theta_to - theta) * dir <= 0.0 {
            break;
        }
        let (r, rp) = eval_R_any(table, coeffs, theta - leaf.t + leaf.y)?;
        let ds_dtheta = (r * r + rp * rp).sqrt();
        let step = (chord / ds_dtheta).min(0.02);
        let next = theta + dir * step;
        theta = if (theta_to - next) * dir <= 0.0 {
            theta_to
        } else {
            next
        };
    }
    Ok(out)
}

/// Cap Z-point at parameter p: Z = G + (F/tau) J G_p.
pub(crate) fn cap_z(p: f64, tau: f64, cap_b: f64) -> Result<P, AssemblyError> {
    let (f, _, _) = correction_F_derivs(p, cap_b)?;
    let gr = grim_reaper(p);
    Ok(gr.G + gr.G_p.rot90() * (f / tau))
}

/// p of the given sign with cap v-component equal to v_target (< 0).
pub(crate) fn cap_p_at_v(
    v_target: f64,
    tau: f64,
    cap_b: f64,
    negative: bool,
    p_max: f64,
) -> Result<f64, AssemblyError> {
    let sgn = if negative { -1.0 } else { 1.0 };
    // v(p) decreases monotonically in |p|
    let mut lo = 0.0;
    let mut hi = p_max;
    for _ in 0..70 {
        let m = 0.5 * (lo + hi);
        if cap_z(sgn * m, tau, cap_b)?.y > v_target {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(sgn * 0.5 * (lo + hi))
}

/// Soliton radius near the tip, at argument pi/2 + s.
fn tip_radius(
    s: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<f64, AssemblyError> {
    if s <= 0.0 {
        return Ok(0.0);
    }
    let (r, _) = eval_R_any(table, coeffs, FRAC_PI_2 + s)?;
    Ok(r)
}

fn append_dedup(out: &mut Vec<P>, pts: impl IntoIterator<Item = P>) {
    for p in pts {
        if out.last().is_none_or(|q| (*q - p).norm() > 1e-9) {
            out.push(p);
        }
    }
}

/// The parts of C_*(t) that differ from the truncated Yin-Yang curve: both
/// transitions, the cap, and the seam data. Shared by the full assembly and
/// the symmetric-difference evaluation (which does not need the arms).
struct TipChains {
    frame: ZFrame,
    transition_plus: Vec<P>,
    cap: Vec<P>,
    transition_minus: Vec<P>,
    theta_seam_inner: f64,
    theta_seam_outer: f64,
    v_band: (f64, f64),
    p_range: (f64, f64),
    /// Exact tip point, where the cap meets the radial segment of Omega.
    tip_point: P,
}

fn build_tip_chains(
    t: f64,
    cfg: &AssemblyConfig,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<TipChains, AssemblyError> {
    let frame = ZFrame::new(t, table, coeffs)?;
    let tau = -4.0 * t;
    let band = cfg.k_band * tau.ln();
    let v_lo = -2.0 * band;
    let v_hi = -0.5 * band;

    let inner = FoliationLeaf { y: -FRAC_PI_2, t };
    let outer = FoliationLeaf { y: FRAC_PI_2, t };
    let theta_seam_inner = seam_theta(inner, v_lo, &frame, table, coeffs)?;
    let theta_seam_outer = seam_theta(outer, v_lo, &frame, table, coeffs)?;

    // outer transition: v from v_lo at the seam up to v_hi as a k_+ graph
    let mut transition_plus = Vec::with_capacity(cfg.transition_nodes);
    for i in 0..cfg.transition_nodes {
        let v = v_lo + (v_hi - v_lo) * i as f64 / (cfg.transition_nodes - 1) as f64;
        let k = interpolant_k_banded(ArmSign::Plus, t, v, band, table, coeffs, cfg.cap_b)?;
        transition_plus.push(frame.from_Z(Vec2::new(k, v)));
    }

    // cap, traversed from the outer side (p < 0) to the inner (p > 0)
    let p_plus = cap_p_at_v(v_hi, tau, cfg.cap_b, false, 2.0 * band + 5.0)?;
    let p_minus = cap_p_at_v(v_hi, tau, cfg.cap_b, true, 2.0 * band + 5.0)?;
    let mut cap = Vec::with_capacity(cfg.cap_nodes);
    for i in 0..cfg.cap_nodes {
        let p = p_minus + (p_plus - p_minus) * i as f64 / (cfg.cap_nodes - 1) as f64;
        cap.push(frame.from_Z(cap_z(p, tau, cfg.cap_b)?));
    }

    // inner transition: v from v_hi back down to v_lo as a k_- graph
    let mut transition_minus = Vec::with_capacity(cfg.transition_nodes);
    for i in 0..cfg.transition_nodes {
        let v = v_hi + (v_lo - v_hi) * i as f64 / (cfg.transition_nodes - 1) as f64;
        let k = interpolant_k_banded(ArmSign::Minus, t, v, band, table, coeffs, cfg.cap_b)?;
        transition_minus.push(frame.from_Z(Vec2::new(k, v)));
    }

    // Z = 0 at p = 0 since F(0) = 0, so the cap passes through the tip
    let tip_point = frame.from_Z(Vec2::zero());

    Ok(TipChains {
        frame,
        transition_plus,
        cap,
        transition_minus,
        theta_seam_inner,
        theta_seam_outer,
        v_band: (v_lo, v_hi),
        p_range: (p_minus, p_plus),
        tip_point,
    })
}

/// Geometrically spaced samples of the spiral tip r = R(pi/2 + s) between the
/// arm truncation s = THETA_PAD and TIP_S_MIN, at polar angles `angle0` + s.
pub(crate) fn tip_chain(
    angle0: f64,
    s_from: f64,
    s_to: f64,
    n: usize,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<Vec<P>, AssemblyError> {
    let ratio = (s_to / s_from).powf(1.0 / (n - 1) as f64);
    let mut out = Vec::with_capacity(n);
    let mut s = s_from;
    for k in 0..n {
        let r = tip_radius(s, table, coeffs)?;
        let a = angle0 + s;
        out.push(Vec2::new(r * a.cos(), r * a.sin()));
        if k + 2 == n {
            s = s_to; // land exactly on the endpoint
        } else {
            s *= ratio;
        }
    }
    Ok(out)
}

pub fn build_approximate_solution(
    t: f64,
    cfg: &AssemblyConfig,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<AssembledCurve, AssemblyError> {
    assert!(t <= -25.0, "assembled curve needs tau = -4t >= 100");
    let tip = build_tip_chains(t, cfg, table, coeffs)?;
    let inner = FoliationLeaf { y: -FRAC_PI_2, t };
    let outer = FoliationLeaf { y: FRAC_PI_2, t };

    // arms between the origin-side truncation (R-argument pi/2 + THETA_PAD)
    // and the seams: outer ascending in polar angle, inner descending
    let outer_arm = sample_leaf(
        outer,
        t + THETA_PAD,
        tip.theta_seam_outer,
        cfg.arm_chord,
        table,
        coeffs,
    )?;
    let inner_arm = sample_leaf(
        inner,
        tip.theta_seam_inner,
        t + PI + THETA_PAD,
        cfg.arm_chord,
        table,
        coeffs,
    )?;

    // closure hugging the true spiral tips, chord across the origin
    let mut closure =
        tip_chain(t + PI, THETA_PAD, TIP_S_MIN, cfg.tip_nodes, table, coeffs)?;
    closure.extend(tip_chain(
        t,
        TIP_S_MIN,
        THETA_PAD,
        cfg.tip_nodes,
        table,
        coeffs,
    )?);

    let raw = RawAssembly {
        outer_arm,
        transition_plus: tip.transition_plus,
        cap: tip.cap,
        transition_minus: tip.transition_minus,
        inner_arm,
        closure,
        theta_seam_inner: tip.theta_seam_inner,
        theta_seam_outer: tip.theta_seam_outer,
        v_band: tip.v_band,
        p_range: tip.p_range,
    };

    let chains: [(&[P], SegmentTag); 6] = [
        (&raw.outer_arm, SegmentTag::OuterArm),
        (&raw.transition_plus, SegmentTag::TransitionPlus),
        (&raw.cap, SegmentTag::Cap),
        (&raw.transition_minus, SegmentTag::TransitionMinus),
        (&raw.inner_arm, SegmentTag::InnerArm),
        (&raw.closure, SegmentTag::Closure),
    ];
    let mut pts: Vec<P> = Vec::new();
    let mut bounds = Vec::with_capacity(6);
    for (chain, _) in chains.iter() {
        append_dedup(&mut pts, chain.iter().copied());
        bounds.push(pts.len().saturating_sub(1));
    }
    if pts.len() > 1 && (pts[0] - *pts.last().unwrap()).norm() <= 1e-9 {
        pts.pop();
    }
    let raw_curve = SampledCurve::new(pts, true)?;
    if cfg.validate {
        if let Some((x, y)) = crate::geom::self_intersection_point(&raw_curve) {
            return Err(AssemblyError::Geom(GeomError::SelfIntersecting(x, y)));
        }
    }

    // arclength bookkeeping on the raw polygon
    let cum = raw_curve.cumulative_arclength();
    let total = *cum.last().unwrap();
    let mut segments = Vec::with_capacity(6);
    let mut start = 0.0;
    for (k, (_, tag)) in chains.iter().enumerate() {
        let end = if k + 1 == chains.len() {
            total
        } else {
            cum[bounds[k].min(cum.len() - 1)]
        };
        segments.push(AssemblySegment {
            tag: *tag,
            param_range: (start, end),
        });
        start = end;
    }
    let seam_params = [
        segments[0].param_range.1,
        segments[1].param_range.1,
        segments[2].param_range.1,
        segments[3].param_range.1,
    ];

    let spacing = cfg.resample_spacing.unwrap_or(0.5 / tip.frame.R);
    let n = ((total / spacing).ceil() as usize).max(16);
    let curve = resample_by_arclength(&raw_curve, n)?;

    Ok(AssembledCurve {
        t,
        curve,
        segments,
        seam_params,
        raw,
    })
}

/// Closed polyline tracing the boundary of Omega(t): outer branch from the
/// origin out to theta = -t, the radial segment, and the inner branch back.
pub fn truncated_region_boundary(
    t: f64,
    chord: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<SampledCurve<f64>, AssemblyError> {
    assert!(t <= -10.0);
    let outer = FoliationLeaf { y: FRAC_PI_2, t };
    let inner = FoliationLeaf { y: -FRAC_PI_2, t };
    let mut pts: Vec<P> = vec![Vec2::new(0.0, 0.0)];
    append_dedup(
        &mut pts,
        tip_chain(t, TIP_S_MIN, 0.5, 40, table, coeffs)?,
    );
    append_dedup(
        &mut pts,
        sample_leaf(outer, t + 0.5, -t, chord, table, coeffs)?,
    );
    // radial segment down to the inner branch
    let (r_out, _) = eval_R_any(table, coeffs, -2.0 * t + FRAC_PI_2)?;
    let (r_in, _) = eval_R_any(table, coeffs, -2.0 * t - FRAC_PI_2)?;
    let dir = Vec2::new((-t).cos(), (-t).sin());
    for k in 1..8 {
        let r = r_out + (r_in - r_out) * k as f64 / 8.0;
        append_dedup(&mut pts, [dir * r]);
    }
    // inner branch back toward the origin
    append_dedup(
        &mut pts,
        sample_leaf(inner, -t, t + PI + 0.5, chord, table, coeffs)?,
    );
    append_dedup(
        &mut pts,
        tip_chain(t + PI, 0.5, TIP_S_MIN, 40, table, coeffs)?,
    );
    if pts.len() > 1 && (pts[0] - *pts.last().unwrap()).norm() <= 1e-9 {
        pts.pop();
    }
    Ok(SampledCurve::new(pts, true)?)
}

/// Area of Omega(t) by quadrature of (1/2)(R_out^2 - R_in^2) d theta in polar
/// coordinates, using R^2 = 2 (alpha - u).
pub fn omega_area(
    t: f64,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<f64, AssemblyError> {
    let r2_of = |alpha: f64| -> Result<f64, AssemblyError> {
        if alpha <= FRAC_PI_2 {
            return Ok(0.0);
        }
        soliton_r_sq(table, coeffs, alpha)
    };
    let simpson = |lo: f64,
                   hi: f64,
                   n: usize,
                   f: &dyn Fn(f64) -> Result<f64, AssemblyError>|
     -> Result<f64, AssemblyError> {
        let n = n + n % 2;
        let h = (hi - lo) / n as f64;
        let mut acc = f(lo)? + f(hi)?;
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + h * k as f64)?;
        }
        Ok(acc * h / 3.0)
    };
    let out = simpson(t, -t, 20_000, &|theta| r2_of(theta - t + FRAC_PI_2))?;
    let inn = simpson(t + PI, -t, 20_000, &|theta| r2_of(theta - t - FRAC_PI_2))?;
    Ok(0.5 * (out - inn))
}

/// Area(C_*(t) triangle Omega(t)) via the loop decomposition: the arms of the
/// assembled curve coincide exactly with the branches of Omega, so the
/// symmetric difference reduces to the two tip lobes (cap and transitions
/// against the truncated corner, split at the tip where the cap crosses the
/// radial segment) plus the lens cut off by the origin chord.
pub fn assembled_symdiff_area(
    t: f64,
    cfg: &AssemblyConfig,
    table: &SolitonTable,
    coeffs: &ExpansionCoefficients,
) -> Result<f64, AssemblyError> {
    let tip = build_tip_chains(t, cfg, table, coeffs)?;
    let outer = FoliationLeaf { y: FRAC_PI_2, t };
    let inner = FoliationLeaf { y: -FRAC_PI_2, t };
    let (r_out, _) = eval_R_any(table, coeffs, -2.0 * t + FRAC_PI_2)?;
    let (r_in, _) = eval_R_any(table, coeffs, -2.0 * t - FRAC_PI_2)?;
    let dir = Vec2::new((-t).cos(), (-t).sin());
    // index of the first cap node past the tip (inner side, u < 0)
    let split = tip
        .cap
        .iter()
        .position(|z| tip.frame.to_Z(*z).x < 0.0)
        .unwrap_or(tip.cap.len());
    let n_corner = 800;

    // outer lobe: transition_plus and the outer cap half against the outer
    // leaf continuation and the upper radial piece
    let mut lobe: Vec<P> = Vec::new();
    append_dedup(&mut lobe, tip.transition_plus.iter().copied());
    append_dedup(&mut lobe, tip.cap[..split].iter().copied());
    append_dedup(&mut lobe, [tip.tip_point, dir * r_out]);
    for i in 0..=n_corner {
        let theta = -t + (tip.theta_seam_outer + t) * i as f64 / n_corner as f64;
        append_dedup(&mut lobe, [leaf_point(outer, theta, table, coeffs)?]);
    }
    let lobe_outer = polygon_area_abs(&lobe);

    // inner lobe: the inner cap half and transition_minus against the lower
    // radial piece and the inner leaf continuation
    let mut lobe: Vec<P> = vec![tip.tip_point];
    append_dedup(&mut lobe, tip.cap[split..].iter().copied());
    append_dedup(&mut lobe, tip.transition_minus.iter().copied());
    for i in 0..=n_corner {
        let theta =
            tip.theta_seam_inner + (-t - tip.theta_seam_inner) * i as f64 / n_corner as f64;
        append_dedup(&mut lobe, [leaf_point(inner, theta, table, coeffs)?]);
    }
    append_dedup(&mut lobe, [dir * r_in]);
    let lobe_inner = polygon_area_abs(&lobe);
    let tip_loop = lobe_outer + lobe_inner;

    // lens between the origin chord and the true spiral tips below TIP_S_MIN
    let mut lens: Vec<P> = Vec::new();
    let n_lens = 64;
    for i in 0..=n_lens {
        let s = TIP_S_MIN * (1.0 - i as f64 / n_lens as f64);
        let r = tip_radius(s, table, coeffs)?;
        let a = t + s;
        lens.push(Vec2::new(r * a.cos(), r * a.sin()));
    }
    for i in 0..=n_lens {
        let s = TIP_S_MIN * i as f64 / n_lens as f64;
        let r = tip_radius(s, table, coeffs)?;
        let a = t + PI + s;
        lens.push(Vec2::new(r * a.cos(), r * a.sin()));
    }
    let lens_area = polygon_area_abs(&lens);
    Ok(tip_loop + lens_area)
}

fn polygon_area_abs(pts: &[P]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * acc.abs()
}
