//! Special sums: derivatives of `pi cot(pi z) - 1/z`, lattice pole sums and power tails.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use num_traits::ToPrimitive;

use crate::error::{Result, WarpError};
use crate::symbolic::bernoulli;

const MAX_ZETA_ORDER: usize = 120;

fn bernoulli_f64(n: usize) -> f64 {
    bernoulli(n).expect("index below 65").to_f64().unwrap()
}

/// Riemann zeta at an integer `s >= 2`.
pub fn riemann_zeta(s: usize) -> f64 {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    let c = CACHE.get_or_init(|| (0..=2 * MAX_ZETA_ORDER + 2).map(|s| if s < 2 { f64::NAN } else { hurwitz(s, 1.0) }).collect());
    if s < c.len() {
        c[s]
    } else {
        1.0 + 2f64.powi(-(s as i32))
    }
}

/// Hurwitz zeta `sum_{n >= 0} (n + a)^{-s}` for integer `s >= 2`, `a > 0`.
pub fn hurwitz(s: usize, a: f64) -> f64 {
    let k = 24 + s;
    let mut sum = 0.0;
    for n in (0..k).rev() {
        sum += (n as f64 + a).powi(-(s as i32));
    }
    let x = k as f64 + a;
    let sf = s as f64;
    let fx = x.powi(-(s as i32));
    let mut tail = x * fx / (sf - 1.0) + 0.5 * fx;
    // -sum_j B_2j/(2j)! f^(2j-1)(x), f^(n)(x) = (-1)^n (s)_n x^{-s-n}
    let mut poch = sf; // (s)_1
    let mut fact = 2.0; // (2j)!
    let mut xp = fx / x;
    for j in 1..=12usize {
        let n = 2 * j - 1;
        let deriv = -poch * xp; // odd order: sign -1
        let term = bernoulli_f64(2 * j) / fact * deriv;
        tail -= term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        poch *= (sf + n as f64) * (sf + n as f64 + 1.0);
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
        xp /= x * x;
    }
    sum + tail
}

fn cot_polys() -> &'static Vec<Vec<f64>> {
    static P: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    P.get_or_init(|| {
        let mut out = vec![vec![0.0, 1.0]];
        for r in 0..MAX_ZETA_ORDER {
            let p = &out[r];
            // derivative
            let d: Vec<f64> = p.iter().enumerate().skip(1).map(|(j, &c)| c * j as f64).collect();
            // -(1 + c^2) d
            let mut q = vec![0.0; d.len() + 2];
            for (j, &c) in d.iter().enumerate() {
                q[j] -= c;
                q[j + 2] -= c;
            }
            out.push(q);
        }
        out
    })
}

/// `D^r zeta(z)` with `zeta(z) = pi cot(pi z) - 1/z`, `|z| < 1`.
pub fn zeta_deriv(r: usize, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(WarpError::OutOfRange(format!("zeta derivative needs |z| < 1, got {z}")));
    }
    if r > MAX_ZETA_ORDER {
        return Err(WarpError::OutOfRange(format!("zeta derivative order {r} > {MAX_ZETA_ORDER}")));
    }
    let az = z.abs();
    let v = if az <= 0.5 { zeta_deriv_series(r, az) } else { zeta_deriv_cot(r, az) };
    // zeta is odd, so D^r zeta has parity (-1)^{r+1}
    Ok(if z < 0.0 && r % 2 == 0 { -v } else { v })
}

/// Cotangent-polynomial branch.
pub fn zeta_deriv_cot(r: usize, z: f64) -> f64 {
    let c = 1.0 / (PI * z).tan();
    let p = &cot_polys()[r];
    let val = p.iter().rev().fold(0.0, |acc, &k| acc * c + k);
    let mut fact = 1.0;
    for j in 2..=r {
        fact *= j as f64;
    }
    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
    PI.powi(r as i32 + 1) * val - sign * fact * z.powi(-(r as i32 + 1))
}

/// Taylor branch: `zeta(z) = -2 sum_k zeta(2k) z^{2k-1}`.
pub fn zeta_deriv_series(r: usize, z: f64) -> f64 {
    let mut sum = 0.0;
    let k0 = r / 2 + 1; // first k with 2k - 1 >= r
    for k in k0..4000 {
        let e = 2 * k - 1;
        // (2k-1)! / (2k-1-r)!
        let mut ff = 1.0;
        for j in 0..r {
            ff *= (e - j) as f64;
        }
        let p = e - r;
        let zp = if p == 0 { 1.0 } else { z.powi(p as i32) };
        let term = -2.0 * riemann_zeta(2 * k) * ff * zp;
        sum += term;
        if z == 0.0 || (term.abs() <= 1e-18 * sum.abs() && k > k0 + 2) {
            break;
        }
    }
    sum
}

/// Full lattice sum `sum_{p != 0} e^{2 pi i p theta} p^{-q}` for `q >= 2`, or `q = 1` (symmetric).
fn lattice_power(q: usize, theta: f64) -> Complex64 {
    // Bernoulli polynomial form for small q
    let t = theta - theta.floor();
    if q == 1 && t == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut bq = 0.0;
    let mut c = 1.0;
    for j in 0..=q {
        bq += c * bernoulli_f64(j) * t.powi((q - j) as i32);
        c = c * (q - j) as f64 / (j + 1) as f64;
    }
    let mut fact = 1.0;
    for j in 2..=q {
        fact *= j as f64;
    }
    let tpi = Complex64::new(0.0, 2.0 * PI).powu(q as u32);
    -tpi * bq / fact
}

/// `sum_{|p| > p0} e^{2 pi i p theta} p^{-q}`.
fn lattice_power_tail(q: usize, theta: f64, p0: usize) -> Complex64 {
    let cis = |p: f64| Complex64::from_polar(1.0, 2.0 * PI * p * theta);
    if q <= 5 {
        let mut s = lattice_power(q, theta);
        for p in 1..=p0 {
            let pf = p as f64;
            let w = pf.powi(-(q as i32));
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            s -= cis(pf) * w + cis(-pf) * (sign * w);
        }
        return s;
    }
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    let mut s = Complex64::new(0.0, 0.0);
    let mut p = p0 + 1;
    loop {
        let pf = p as f64;
        let w = pf.powi(-(q as i32));
        s += cis(pf) * w + cis(-pf) * (sign * w);
        let rest = 2.0 * pf.powi(1 - q as i32) / (q as f64 - 1.0);
        if rest < 1e-19 * (p0 as f64 + 1.0).powi(-(q as i32)).max(1e-300) || p > 2_000_000 {
            break;
        }
        p += 1;
    }
    s
}

/// Modulated pole sum `sum_{p != 0} e^{2 pi i p theta} (z + p)^{-s}`, `|z| < 1`, `s >= 1`.
///
/// For `s = 1` the sum is taken symmetrically in `p`.
pub fn pole_sum(s: usize, z: f64, theta: f64) -> Result<Complex64> {
    if !(z.abs() < 1.0) || s == 0 {
        return Err(WarpError::OutOfRange(format!("pole sum needs |z| < 1 and s >= 1, got z = {z}, s = {s}")));
    }
    const P0: usize = 3;
    let cis = |p: f64| Complex64::from_polar(1.0, 2.0 * PI * p * theta);
    let mut near = Complex64::new(0.0, 0.0);
    for p in 1..=P0 {
        let pf = p as f64;
        near += cis(pf) * (z + pf).powi(-(s as i32)) + cis(-pf) * (z - pf).powi(-(s as i32));
    }
    // (p + z)^{-s} = sum_j (-1)^j C(s+j-1, j) z^j p^{-(s+j)}
    let mut far = Complex64::new(0.0, 0.0);
    let mut coef = 1.0; // C(s+j-1, j) (-z)^j
    let scale = 1.0 / (P0 as f64 + 1.0);
    for j in 0..2000usize {
        let term = lattice_power_tail(s + j, theta, P0) * coef;
        far += term;
        let bound = 4.0 * coef.abs() * scale.powi((s + j) as i32);
        if bound < 1e-18 * (far.norm() + near.norm()).max(1e-300) {
            break;
        }
        coef *= -z * (s + j) as f64 / (j + 1) as f64;
    }
    Ok(near + far)
}

/// `sum_{m >= a} e^{2 pi i m delta} (c/m)^s` for integer `a >= 1`, `s >= 2`, `0 < c <= a`.
pub fn lattice_tail(s: usize, a: i64, c: f64, delta: f64) -> Result<Complex64> {
    if a < 1 || s < 2 {
        return Err(WarpError::OutOfRange(format!("lattice tail needs a >= 1 and s >= 2 (a = {a}, s = {s})")));
    }
    let d = delta - delta.round();
    let sf = s as f64;
    let f = |m: f64| (c / m).powi(s as i32);
    if d == 0.0 {
        let x0 = a + (s as i64 + 40).max(32);
        let mut sum = 0.0;
        for m in (a..x0).rev() {
            sum += f(m as f64);
        }
        let x = x0 as f64;
        let fx = f(x);
        let mut tail = x * fx / (sf - 1.0) + 0.5 * fx;
        let mut poch = sf;
        let mut fact = 2.0;
        let mut xp = fx / x;
        for j in 1..=16usize {
            let n = 2 * j - 1;
            let term = bernoulli_f64(2 * j) / fact * (-poch * xp);
            tail -= term;
            if term.abs() < 1e-19 * tail.abs() {
                break;
            }
            poch *= (sf + n as f64) * (sf + n as f64 + 1.0);
            fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
            xp /= x * x;
        }
        return Ok(Complex64::new(sum + tail, 0.0));
    }
    if d.abs() < 1e-3 {
        return Err(WarpError::OutOfRange(format!(
            "singularities are too close (separation {d:e}) for the tail summation"
        )));
    }
    let rho = 2.0 * PI * d.abs();
    let x0 = a + ((sf + 48.0) / (0.3 * rho)).ceil() as i64;
    let cis = |m: f64| Complex64::from_polar(1.0, 2.0 * PI * m * d);
    let mut sum = Complex64::new(0.0, 0.0);
    for m in (a..x0).rev() {
        let mf = m as f64;
        sum += cis(mf) * f(mf);
    }
    // sum_{m >= 0} q^m f(x0 + m) = sum_n g_n f^(n)(x0), g = 1 / (1 - q e^t)
    let q = cis(1.0);
    let nmax = 80;
    let mut h = vec![Complex64::new(0.0, 0.0); nmax + 1];
    let mut inv_fact = 1.0;
    h[0] = Complex64::new(1.0, 0.0) - q;
    for (n, slot) in h.iter_mut().enumerate().skip(1) {
        inv_fact /= n as f64;
        *slot = -q * inv_fact;
    }
    let mut g = vec![Complex64::new(0.0, 0.0); nmax + 1];
    g[0] = Complex64::new(1.0, 0.0) / h[0];
    let x = x0 as f64;
    let mut deriv = f(x); // f^(n)(x) = (-1)^n (s)_n (c/x)^s x^{-n}
    let mut tail = g[0] * deriv;
    for n in 1..=nmax {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=n {
            acc += h[j] * g[n - j];
        }
        g[n] = -acc / h[0];
        deriv *= -(sf + (n - 1) as f64) / x;
        let term = g[n] * deriv;
        tail += term;
        if term.norm() < 1e-19 * tail.norm() {
            break;
        }
    }
    Ok(sum + cis(x) * tail)
}
