//! Fixed-size forward-mode dual numbers.
//!
//! Used to propagate exact derivatives of element residuals with respect to
//! the element's local unknowns in a single evaluation pass. `N` is the number
//! of seeded directions (element dof count).

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub eps: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Dual {
            re: v,
            eps: [0.0; N],
        }
    }

    /// A variable seeded in direction `k`.
    pub fn variable(v: f64, k: usize) -> Self {
        let mut eps = [0.0; N];
        eps[k] = 1.0;
        Dual { re: v, eps }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        let scale = 0.5 / r;
        let mut eps = self.eps;
        for e in &mut eps {
            *e *= scale;
        }
        Dual { re: r, eps }
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.re;
        let scale = -inv * inv;
        let mut eps = self.eps;
        for e in &mut eps {
            *e *= scale;
        }
        Dual { re: inv, eps }
    }

    pub fn powi(self, n: i32) -> Self {
        let scale = n as f64 * self.re.powi(n - 1);
        let mut eps = self.eps;
        for e in &mut eps {
            *e *= scale;
        }
        Dual {
            re: self.re.powi(n),
            eps,
        }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (a, b) in eps.iter_mut().zip(&rhs.eps) {
            *a += b;
        }
        Dual {
            re: self.re + rhs.re,
            eps,
        }
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    fn add_assign(&mut self, rhs: Self) {
        self.re += rhs.re;
        for (a, b) in self.eps.iter_mut().zip(&rhs.eps) {
            *a += b;
        }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (a, b) in eps.iter_mut().zip(&rhs.eps) {
            *a -= b;
        }
        Dual {
            re: self.re - rhs.re,
            eps,
        }
    }
}

impl<const N: usize> SubAssign for Dual<N> {
    fn sub_assign(&mut self, rhs: Self) {
        self.re -= rhs.re;
        for (a, b) in self.eps.iter_mut().zip(&rhs.eps) {
            *a -= b;
        }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = self.eps[i] * rhs.re + self.re * rhs.eps[i];
        }
        Dual {
            re: self.re * rhs.re,
            eps,
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut eps = self.eps;
        for e in &mut eps {
            *e = -*e;
        }
        Dual { re: -self.re, eps }
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        let mut eps = self.eps;
        for e in &mut eps {
            *e *= rhs;
        }
        Dual {
            re: self.re * rhs,
            eps,
        }
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    fn add(self, rhs: f64) -> Self {
        Dual {
            re: self.re + rhs,
            eps: self.eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_chain_rules() {
        // f(x, y) = x^2 * y + sqrt(y) at (3, 4)
        let x = Dual::<2>::variable(3.0, 0);
        let y = Dual::<2>::variable(4.0, 1);
        let f = x * x * y + y.sqrt();
        assert!((f.re - 38.0).abs() < 1e-14);
        assert!((f.eps[0] - 24.0).abs() < 1e-14); // 2xy
        assert!((f.eps[1] - (9.0 + 0.25)).abs() < 1e-14); // x^2 + 1/(2 sqrt y)
    }

    #[test]
    fn division_rule() {
        let x = Dual::<1>::variable(2.0, 0);
        let f = Dual::<1>::constant(1.0) / (x * x);
        assert!((f.re - 0.25).abs() < 1e-14);
        assert!((f.eps[0] + 0.25).abs() < 1e-14); // -2/x^3
    }
}
