//! Univariate truncated Taylor series of order 3.
//!
//! A [`Jet3`] carries `f(t0 + s) = c0 + c1 s + c2 s² + c3 s³ + O(s⁴)` and is used
//! for order-k derivatives of a single scalar along a frozen straight line.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::Scalar;

const N: usize = 4;

/// Taylor coefficients `c[k] = f^(k)(t0) / k!` for `k = 0..=3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet3 {
    c: [f64; N],
}

impl Jet3 {
    pub fn constant(v: f64) -> Self {
        Self { c: [v, 0.0, 0.0, 0.0] }
    }

    /// The independent variable `t0 + s` expanded around `t0`.
    pub fn variable(v: f64) -> Self {
        Self { c: [v, 1.0, 0.0, 0.0] }
    }

    pub fn from_coefficients(c: [f64; N]) -> Self {
        Self { c }
    }

    pub fn coefficients(&self) -> [f64; N] {
        self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative `k! c_k`; zero above order 3.
    pub fn derivative(&self, k: usize) -> f64 {
        match k {
            0 => self.c[0],
            1 => self.c[1],
            2 => 2.0 * self.c[2],
            3 => 6.0 * self.c[3],
            _ => 0.0,
        }
    }

    /// Drops coefficients above `order`.
    pub fn truncate(mut self, order: usize) -> Self {
        for k in (order + 1)..N {
            self.c[k] = 0.0;
        }
        self
    }

    fn sin_cos(self) -> (Self, Self) {
        let a = self.c;
        let mut s = [0.0; N];
        let mut c = [0.0; N];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..N {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for i in 1..=k {
                ss += i as f64 * a[i] * c[k - i];
                cc += i as f64 * a[i] * s[k - i];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Self { c: s }, Self { c })
    }
}

impl Add for Jet3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|k| self.c[k] + o.c[k]) }
    }
}

impl Sub for Jet3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|k| self.c[k] - o.c[k]) }
    }
}

impl Mul for Jet3 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { c: std::array::from_fn(|k| (0..=k).map(|i| self.c[i] * o.c[k - i]).sum()) }
    }
}

impl Div for Jet3 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let mut q = [0.0; N];
        for k in 0..N {
            let mut acc = self.c[k];
            for i in 1..=k {
                acc -= o.c[i] * q[k - i];
            }
            q[k] = acc / o.c[0];
        }
        Self { c: q }
    }
}

impl Neg for Jet3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { c: self.c.map(|v| -v) }
    }
}

impl Add<f64> for Jet3 {
    type Output = Self;
    fn add(mut self, o: f64) -> Self {
        self.c[0] += o;
        self
    }
}

impl Sub<f64> for Jet3 {
    type Output = Self;
    fn sub(mut self, o: f64) -> Self {
        self.c[0] -= o;
        self
    }
}

impl Mul<f64> for Jet3 {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Self { c: self.c.map(|v| v * o) }
    }
}

impl Div<f64> for Jet3 {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Self { c: self.c.map(|v| v / o) }
    }
}

impl AddAssign for Jet3 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for Jet3 {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign for Jet3 {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl Scalar for Jet3 {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn re(&self) -> f64 {
        self.c[0]
    }
    fn all_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }
    fn exp(self) -> Self {
        let a = self.c;
        let mut e = [0.0; N];
        e[0] = a[0].exp();
        for k in 1..N {
            let acc: f64 = (1..=k).map(|i| i as f64 * a[i] * e[k - i]).sum();
            e[k] = acc / k as f64;
        }
        Self { c: e }
    }
    fn ln(self) -> Self {
        let a = self.c;
        let mut l = [0.0; N];
        l[0] = a[0].ln();
        for k in 1..N {
            let acc: f64 = (1..k).map(|i| i as f64 * l[i] * a[k - i]).sum();
            l[k] = (a[k] - acc / k as f64) / a[0];
        }
        Self { c: l }
    }
    fn sqrt(self) -> Self {
        let a = self.c;
        let mut s = [0.0; N];
        s[0] = a[0].sqrt();
        for k in 1..N {
            let acc: f64 = (1..k).map(|i| s[i] * s[k - i]).sum();
            s[k] = (a[k] - acc) / (2.0 * s[0]);
        }
        Self { c: s }
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            Self::one() / acc
        } else {
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_polynomial_has_exact_jet() {
        // f(t) = t^3 - 2t at t = 2: f=4, f'=10, f''=12, f'''=6
        let t = Jet3::variable(2.0);
        let f = t.powi(3) - t * 2.0;
        assert_eq!(f.derivative(0), 4.0);
        assert_eq!(f.derivative(1), 10.0);
        assert_eq!(f.derivative(2), 12.0);
        assert_eq!(f.derivative(3), 6.0);
    }

    #[test]
    fn transcendental_recurrences() {
        let t = Jet3::variable(0.4);
        let e = t.exp();
        for k in 0..4 {
            assert!((e.derivative(k) - 0.4_f64.exp()).abs() < 1e-14);
        }
        // d^3/dt^3 ln t = 2/t^3
        assert!((t.ln().derivative(3) - 2.0 / 0.4_f64.powi(3)).abs() < 1e-10);
        // d^3/dt^3 sin t = -cos t
        assert!((t.sin().derivative(3) + 0.4_f64.cos()).abs() < 1e-14);
        // sqrt(t)^2 = t
        let s = t.sqrt();
        let back = s * s;
        assert!((back.derivative(1) - 1.0).abs() < 1e-14);
        assert!(back.derivative(2).abs() < 1e-13 && back.derivative(3).abs() < 1e-12);
        // tan' = 1 + tan^2
        let tn = t.tan();
        assert!((tn.derivative(1) - (1.0 + 0.4_f64.tan().powi(2))).abs() < 1e-14);
        let inv = t.powi(-1);
        assert!((inv.derivative(2) - 2.0 / 0.4_f64.powi(3)).abs() < 1e-10);
    }
}
