//! Truncated power series arithmetic in one variable, used to generate the
//! asymptotic expansion coefficients of the soliton profile. All series are
//! truncated at a fixed order; operations silently drop higher terms.

/// Coefficients c[k] of x^k, k = 0..=order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub c: Vec<f64>,
}

impl Series {
    pub fn zero(order: usize) -> Self {
        Series {
            c: vec![0.0; order + 1],
        }
    }

    pub fn constant(v: f64, order: usize) -> Self {
        let mut s = Series::zero(order);
        s.c[0] = v;
        s
    }

    /// The identity series x.
    pub fn x(order: usize) -> Self {
        let mut s = Series::zero(order);
        if order >= 1 {
            s.c[1] = 1.0;
        }
        s
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        Series { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn add(&self, other: &Series) -> Series {
        let mut c = self.c.clone();
        for (a, b) in c.iter_mut().zip(&other.c) {
            *a += b;
        }
        Series { c }
    }

    pub fn sub(&self, other: &Series) -> Series {
        let mut c = self.c.clone();
        for (a, b) in c.iter_mut().zip(&other.c) {
            *a -= b;
        }
        Series { c }
    }

    pub fn scale(&self, s: f64) -> Series {
        Series {
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        for i in 0..=n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..=n - i {
                c[i + j] += self.c[i] * other.c[j];
            }
        }
        Series { c }
    }

    /// Multiply by x^k (shift up), dropping overflow.
    pub fn shift_up(&self, k: usize) -> Series {
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        for i in 0..=n {
            if i + k <= n {
                c[i + k] = self.c[i];
            }
        }
        Series { c }
    }

    /// Divide by x^k; requires the low-order coefficients to vanish.
    pub fn shift_down(&self, k: usize) -> Series {
        let n = self.order();
        debug_assert!(self.c[..k].iter().all(|&v| v == 0.0));
        let mut c = vec![0.0; n + 1];
        c[..=n - k].copy_from_slice(&self.c[k..=n]);
        Series { c }
    }

    /// d/dx term by term.
    pub fn derivative(&self) -> Series {
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        for i in 1..=n {
            c[i - 1] = self.c[i] * i as f64;
        }
        Series { c }
    }

    /// Composition self(inner); requires inner(0) = 0.
    pub fn compose(&self, inner: &Series) -> Series {
        assert_eq!(inner.c[0], 0.0, "composition needs inner(0) = 0");
        let n = self.order();
        // Horner on the outer coefficients
        let mut acc = Series::constant(self.c[n], n);
        for k in (0..n).rev() {
            acc = acc.mul(inner);
            acc.c[0] += self.c[k];
        }
        acc
    }

    /// Reciprocal 1/self; requires self(0) != 0.
    pub fn reciprocal(&self) -> Series {
        let n = self.order();
        let a0 = self.c[0];
        assert!(a0 != 0.0, "reciprocal needs nonzero constant term");
        let mut c = vec![0.0; n + 1];
        c[0] = 1.0 / a0;
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.c[j] * c[k - j];
            }
            c[k] = -s / a0;
        }
        Series { c }
    }

    /// Compositional inverse g with self(g(w)) = w; requires c[0] = 0 and
    /// c[1] != 0. Fixed-point iteration g <- (w - (self - c1 x)(g))/c1,
    /// gaining one correct order per sweep.
    pub fn reversion(&self) -> Series {
        let n = self.order();
        assert_eq!(self.c[0], 0.0, "reversion needs f(0) = 0");
        let a1 = self.c[1];
        assert!(a1 != 0.0, "reversion needs f'(0) != 0");
        let mut tail = self.clone();
        tail.c[0] = 0.0;
        tail.c[1] = 0.0;
        let w = Series::x(n);
        let mut g = w.scale(1.0 / a1);
        for _ in 0..n {
            g = w.sub(&tail.compose(&g)).scale(1.0 / a1);
        }
        g
    }

    /// (1 + self)^alpha via the binomial series; requires self(0) = 0.
    pub fn binomial_pow(&self, alpha: f64) -> Series {
        let n = self.order();
        assert_eq!(self.c[0], 0.0, "binomial_pow needs argument starting at x");
        let mut outer = Series::zero(n);
        let mut coeff = 1.0;
        outer.c[0] = 1.0;
        for k in 1..=n {
            coeff *= (alpha - (k as f64 - 1.0)) / k as f64;
            outer.c[k] = coeff;
        }
        outer.compose(self)
    }

    /// Taylor series of tan at 0 to the given order.
    pub fn tan_series(order: usize) -> Series {
        // build from sin/cos series to avoid hardcoding Bernoulli numbers
        let mut sin = Series::zero(order);
        let mut cos = Series::zero(order);
        let mut fact = 1.0;
        for k in 0..=order {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 1 {
                sin.c[k] = sign / fact;
            } else {
                cos.c[k] = sign / fact;
            }
        }
        sin.mul(&cos.reciprocal())
    }

    /// Evaluate at a point by Horner's rule.
    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exp_series(n: usize) -> Series {
        let mut s = Series::zero(n);
        let mut f = 1.0;
        for k in 0..=n {
            if k > 0 {
                f *= k as f64;
            }
            s.c[k] = 1.0 / f;
        }
        s
    }

    #[test]
    fn mul_matches_known_square() {
        // (1 + x)^2 = 1 + 2x + x^2
        let a = Series::from_coeffs(vec![1.0, 1.0, 0.0, 0.0]);
        let sq = a.mul(&a);
        assert_eq!(sq.c, vec![1.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn reciprocal_geometric() {
        // 1/(1 - x) = 1 + x + x^2 + ...
        let a = Series::from_coeffs(vec![1.0, -1.0, 0.0, 0.0, 0.0]);
        let r = a.reciprocal();
        assert_eq!(r.c, vec![1.0; 5]);
    }

    #[test]
    fn compose_exp_of_log() {
        // exp(log(1+x)) = 1 + x
        let n = 10;
        let e = exp_series(n);
        let mut log1p = Series::zero(n);
        for k in 1..=n {
            log1p.c[k] = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        }
        let r = e.compose(&log1p);
        assert_abs_diff_eq!(r.c[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.c[1], 1.0, epsilon = 1e-12);
        for k in 2..=n {
            assert_abs_diff_eq!(r.c[k], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn binomial_sqrt_squares_back() {
        // (sqrt(1 + x))^2 = 1 + x
        let x = Series::x(12);
        let s = x.binomial_pow(0.5);
        let sq = s.mul(&s);
        assert_abs_diff_eq!(sq.c[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sq.c[1], 1.0, epsilon = 1e-12);
        for k in 2..=12 {
            assert_abs_diff_eq!(sq.c[k], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn reversion_of_quadratic() {
        // f = x + x^2, inverse g = x - x^2 + 2x^3 - 5x^4 + 14x^5 (Catalan)
        let f = Series::from_coeffs(vec![0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        let g = f.reversion();
        let expect = [0.0, 1.0, -1.0, 2.0, -5.0, 14.0];
        for (a, b) in g.c.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
        // round trip f(g(w)) = w
        let rt = f.compose(&g);
        for k in 0..=5 {
            let want = if k == 1 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(rt.c[k], want, epsilon = 1e-9);
        }
    }

    #[test]
    fn tan_series_known_coeffs() {
        let t = Series::tan_series(9);
        assert_abs_diff_eq!(t.c[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.c[3], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.c[5], 2.0 / 15.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.c[7], 17.0 / 315.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.c[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_and_eval() {
        let f = Series::from_coeffs(vec![1.0, 2.0, 3.0, 4.0]);
        let d = f.derivative();
        assert_eq!(d.c, vec![2.0, 6.0, 12.0, 0.0]);
        assert_abs_diff_eq!(f.eval(0.5), 1.0 + 1.0 + 0.75 + 0.5, epsilon = 1e-14);
    }
}
