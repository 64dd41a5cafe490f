//! Truncated Taylor series arithmetic.

use nalgebra::ComplexField;
use std::ops::{Add, Mul, Sub};

/// Taylor coefficients `c[k] = f^(k)(x0) / k!` truncated at a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub c: Vec<T>,
}

impl<T> Jet<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    pub fn constant(v: T, order: usize) -> Self {
        let mut c = vec![T::zero(); order + 1];
        c[0] = v;
        Jet { c }
    }

    /// The identity series `x0 + h`.
    pub fn variable(x0: T, order: usize) -> Self {
        let mut j = Self::constant(x0, order);
        if order >= 1 {
            j.c[1] = T::one();
        }
        j
    }

    pub fn from_coeffs(c: Vec<T>) -> Self {
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// The k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> T {
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k].scale(f)
    }

    pub fn scale(&self, s: T) -> Self {
        Jet { c: self.c.iter().map(|&v| v * s).collect() }
    }

    /// Series of the derivative, one order shorter.
    pub fn differentiate(&self) -> Self {
        let c = (1..self.c.len()).map(|k| self.c[k].scale(k as f64)).collect();
        Jet { c }
    }

    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let mut r = vec![T::zero(); n];
        let a0 = self.c[0];
        r[0] = T::one() / a0;
        for k in 1..n {
            let mut s = T::zero();
            for j in 1..=k {
                s += self.c[j] * r[k - j];
            }
            r[k] = -s / a0;
        }
        Jet { c: r }
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![T::zero(); n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let mut s = T::zero();
            for j in 1..=k {
                s += self.c[j].scale(j as f64) * e[k - j];
            }
            e[k] = s.scale(1.0 / k as f64);
        }
        Jet { c: e }
    }

    /// `self^p` for a series whose constant term is off the branch cut.
    pub fn powf(&self, p: f64) -> Self {
        let n = self.c.len();
        let mut y = vec![T::zero(); n];
        let a0 = self.c[0];
        y[0] = a0.powf(p);
        for k in 1..n {
            let mut s = T::zero();
            for j in 1..=k {
                let w = p * j as f64 - (k - j) as f64;
                s += self.c[j].scale(w) * y[k - j];
            }
            y[k] = s / a0.scale(k as f64);
        }
        Jet { c: y }
    }

    /// Simultaneous sine and cosine series.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.c.len();
        let mut s = vec![T::zero(); n];
        let mut c = vec![T::zero(); n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut ss = T::zero();
            let mut cc = T::zero();
            for j in 1..=k {
                let a = self.c[j].scale(j as f64);
                ss += a * c[k - j];
                cc += a * s[k - j];
            }
            s[k] = ss.scale(1.0 / k as f64);
            c[k] = -cc.scale(1.0 / k as f64);
        }
        (Jet { c: s }, Jet { c })
    }
}

impl<T> Add for &Jet<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Jet<T> {
        Jet { c: self.c.iter().zip(&rhs.c).map(|(&a, &b)| a + b).collect() }
    }
}

impl<T> Sub for &Jet<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Jet<T> {
        Jet { c: self.c.iter().zip(&rhs.c).map(|(&a, &b)| a - b).collect() }
    }
}

impl<T> Mul for &Jet<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Jet<T> {
        let n = self.c.len().min(rhs.c.len());
        let mut out = vec![T::zero(); n];
        for (i, &a) in self.c.iter().enumerate().take(n) {
            for (j, &b) in rhs.c.iter().enumerate().take(n - i) {
                out[i + j] += a * b;
            }
        }
        Jet { c: out }
    }
}
