//! The Grim Reaper curve G(p), the explicit correction F(p), and the
//! perturbed cap Z(t,p) = G(p) + (F(p)/tau) J G_p(p) with its asymptotic
//! matching data. The correction solves
//!     L F = F'' + tanh(p) F' + F / cosh^2 p = <2 e2 - G, G_p>
//! and has the closed form (A = 0)
//!     F(p) = B tanh p + int_0^p (cosh r / cosh p) <2 e2 - G(r)/2, G(r)> dr.

use crate::geom::{rotate, Vec2};
use crate::soliton::{expansion_coefficients, tau_quantities, SolitonError, SolitonTable};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

type P = Vec2<f64>;

#[derive(Debug, Error)]
pub enum CapError {
    #[error("adaptive quadrature exceeded depth 40 near p = {0}")]
    QuadratureFailure(f64),
    #[error(transparent)]
    Soliton(#[from] SolitonError),
}

/// ln cosh q without overflow: |q| + ln((1 + e^{-2|q|})/2).
pub fn ln_cosh(q: f64) -> f64 {
    let a = q.abs();
    a + ((1.0 + (-2.0 * a).exp()) / 2.0).ln()
}

/// arcsin(tanh q) via the Gudermannian atan(sinh q); the direct form loses
/// smoothness in doubles once tanh q rounds to 1.
pub fn gd(q: f64) -> f64 {
    if q.abs() < 300.0 {
        q.sinh().atan()
    } else {
        (FRAC_PI_2 - 2.0 * (-q.abs()).exp()) * q.signum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GrimReaperPoint {
    pub p: f64,
    pub G: P,
    pub G_p: P,
    pub kappa: f64,
}

/// Arclength-parametrized Grim Reaper G(p) = (-arcsin tanh p, -ln cosh p),
/// translating in the -e2 direction with unit speed; kappa = 1/cosh p.
pub fn grim_reaper(p: f64) -> GrimReaperPoint {
    assert!(p.abs() < 700.0, "cosh overflow guard");
    let sech = 1.0 / p.cosh();
    GrimReaperPoint {
        p,
        G: Vec2::new(-gd(p), -ln_cosh(p)),
        G_p: Vec2::new(-sech, -p.tanh()),
        kappa: sech,
    }
}

/// <2 e2 - G(r)/2, G(r)> = -2 lambda - lambda^2/2 - phi^2/2 with
/// lambda = ln cosh r, phi = arcsin tanh r.
fn g_inhom(r: f64) -> f64 {
    let lam = ln_cosh(r);
    let phi = gd(r);
    -2.0 * lam - 0.5 * lam * lam - 0.5 * phi * phi
}

fn g_inhom_prime(r: f64) -> f64 {
    let lam = ln_cosh(r);
    let phi = gd(r);
    let th = r.tanh();
    -2.0 * th - lam * th - phi / r.cosh()
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, CapError> {
    let (left, ml, fml) = simpson(f, a, fa, m, fm);
    let (right, mr, fmr) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= 40 {
        return Err(CapError::QuadratureFailure(m));
    }
    let l = adaptive_simpson(f, a, fa, m, fm, left, ml, fml, 0.5 * tol, depth + 1)?;
    let r = adaptive_simpson(f, m, fm, b, fb, right, mr, fmr, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, CapError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    adaptive_simpson(&f, a, fa, b, fb, whole, m, fm, tol, 0)
}

/// I(p) = int_0^p (cosh r / cosh p) g(r) dr in the overflow-stable form
/// e^{L(r) - L(p)} g(r) with L = ln cosh.
fn correction_integral(p: f64, tol_rel: f64) -> Result<f64, CapError> {
    let lp = ln_cosh(p);
    // integrand peaks at r = p with value g(p); boundary layer has O(1) width
    let scale = 1.0 + g_inhom(p).abs();
    integrate(
        |r| (ln_cosh(r) - lp).exp() * g_inhom(r),
        0.0,
        p,
        tol_rel * scale,
    )
}

/// F(p) with A = 0; the paper's matching constant is B = -1.
pub fn correction_F(p: f64, b: f64) -> Result<f64, CapError> {
    Ok(b * p.tanh() + correction_integral(p, 1e-12)?)
}

/// F together with its first two derivatives, all analytic:
/// I' = g - tanh(p) I, so no numerical differentiation is involved.
pub fn correction_F_derivs(p: f64, b: f64) -> Result<(f64, f64, f64), CapError> {
    let i = correction_integral(p, 1e-12)?;
    let th = p.tanh();
    let sech2 = 1.0 / (p.cosh() * p.cosh());
    let g = g_inhom(p);
    let ip = g - th * i;
    let ipp = g_inhom_prime(p) - sech2 * i - th * ip;
    let f = b * th + i;
    let fp = b * sech2 + ip;
    let fpp = -2.0 * b * sech2 * th + ipp;
    Ok((f, fp, fpp))
}

/// Right-hand side of the correction ODE: <2 e2 - G, G_p>.
pub fn correction_rhs(p: f64) -> f64 {
    let gr = grim_reaper(p);
    (Vec2::new(0.0, 2.0) - gr.G).dot(gr.G_p)
}

/// The cap at fixed time t on a uniform p-grid over [-2K ln tau, 2K ln tau].
#[derive(Debug, Clone)]
pub struct CapProfile {
    pub t: f64,
    pub tau: f64,
    pub R: f64,
    pub Rtheta: f64,
    pub B: f64,
    pub K: f64,
    pub p_grid: Vec<f64>,
    pub F_values: Vec<f64>,
    pub Fp_values: Vec<f64>,
    pub Fpp_values: Vec<f64>,
    pub Z_values: Vec<P>,
}

pub fn build_cap(
    t: f64,
    k: f64,
    b: f64,
    n_nodes: usize,
    soliton: &SolitonTable,
) -> Result<CapProfile, CapError> {
    assert!(t <= -25.0 && k > 0.0 && n_nodes >= 3);
    let coeffs = expansion_coefficients(6);
    let q = tau_quantities(t, &coeffs, soliton)?;
    let p_max = 2.0 * k * q.tau.ln();
    let mut p_grid = Vec::with_capacity(n_nodes);
    let mut f_values = Vec::with_capacity(n_nodes);
    let mut fp_values = Vec::with_capacity(n_nodes);
    let mut fpp_values = Vec::with_capacity(n_nodes);
    let mut z_values = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let p = -p_max + 2.0 * p_max * i as f64 / (n_nodes - 1) as f64;
        let (f, fp, fpp) = correction_F_derivs(p, b)?;
        let gr = grim_reaper(p);
        let z = gr.G + gr.G_p.rot90() * (f / q.tau);
        p_grid.push(p);
        f_values.push(f);
        fp_values.push(fp);
        fpp_values.push(fpp);
        z_values.push(z);
    }
    Ok(CapProfile {
        t,
        tau: q.tau,
        R: q.R,
        Rtheta: q.Rtheta,
        B: b,
        K: k,
        p_grid,
        F_values: f_values,
        Fp_values: fp_values,
        Fpp_values: fpp_values,
        Z_values: z_values,
    })
}

impl CapProfile {
    /// Ambient image X = e^{-tJ} (R e1 + Z/R) of grid node i.
    pub fn ambient_point(&self, i: usize) -> P {
        let z = self.Z_values[i];
        rotate(Vec2::new(self.R + z.x / self.R, z.y / self.R), -self.t)
    }

    /// sup over the grid of |f| + |f_p| + |f_pp| + tau |f_t| with
    /// f = F/tau, f_t = 4 F / tau^2.
    pub fn f_bound(&self) -> f64 {
        let tau = self.tau;
        self.p_grid
            .iter()
            .enumerate()
            .map(|(i, _)| {
                (self.F_values[i].abs()
                    + self.Fp_values[i].abs()
                    + self.Fpp_values[i].abs()
                    + 4.0 * self.F_values[i].abs())
                    / tau
            })
            .fold(0.0, f64::max)
    }
}

/// Asymptotic end heights of the cap as (u,v)-graphs,
/// h_pm = +-pi/2 - (v^2 - 2v + pi^2/4 + 2(1+B)) / (2 tau),
/// indexed so that h_plus matches the outer arm (u near +pi/2, reached as
/// p -> -infinity) and h_minus the inner arm (p -> +infinity).
pub fn cap_end_expansion(t: f64, v: f64, b: f64) -> (f64, f64) {
    let tau = -4.0 * t;
    let q = (v * v - 2.0 * v + PI * PI / 4.0 + 2.0 * (1.0 + b)) / (2.0 * tau);
    (FRAC_PI_2 - q, -FRAC_PI_2 - q)
}
