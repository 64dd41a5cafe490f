//! Nonuniform FFT with a Kaiser-Bessel spreading kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub const OVERSAMPLING: usize = 2;
pub const KERNEL_WIDTH: usize = 16;

fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Plan for the points `x_q` (in periods) and the contiguous modes `k0 .. k0 + nk`.
pub struct NufftPlan {
    k0: i64,
    nk: usize,
    grid: usize,
    npts: usize,
    start: Vec<i64>,
    weights: Vec<f64>,
    deconv: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NufftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NufftPlan").field("k0", &self.k0).field("nk", &self.nk).field("grid", &self.grid).finish()
    }
}

impl NufftPlan {
    pub fn new(points: &[f64], k0: i64, nk: usize) -> Self {
        let w = KERNEL_WIDTH;
        let kmax = k0.unsigned_abs().max((k0 + nk as i64 - 1).unsigned_abs()) as usize;
        let mut grid = (OVERSAMPLING * (2 * kmax + 1)).max(2 * w);
        grid += grid % 2;
        let sigma = OVERSAMPLING as f64;
        let beta = PI * ((w as f64 / sigma * (sigma - 0.5)).powi(2) - 0.8).sqrt();
        let half = w as f64 / 2.0;
        let mut start = Vec::with_capacity(points.len());
        let mut weights = Vec::with_capacity(points.len() * w);
        for &x in points {
            let u = (x - x.floor()) * grid as f64;
            let j0 = (u - half).floor() as i64 + 1;
            start.push(j0);
            for t in 0..w {
                let d = (u - (j0 + t as i64) as f64) / half;
                let r = (1.0 - d * d).max(0.0);
                weights.push(bessel_i0(beta * r.sqrt()));
            }
        }
        let deconv = (0..nk)
            .map(|i| {
                let k = k0 + i as i64;
                let z = PI * w as f64 * k as f64 / grid as f64;
                let s = beta * beta - z * z;
                let ft = if s > 0.0 {
                    let r = s.sqrt();
                    w as f64 * r.sinh() / r
                } else if s < 0.0 {
                    let r = (-s).sqrt();
                    w as f64 * r.sin() / r
                } else {
                    w as f64
                };
                1.0 / ft
            })
            .collect();
        let mut planner = FftPlanner::<f64>::new();
        NufftPlan {
            k0,
            nk,
            grid,
            npts: points.len(),
            start,
            weights,
            deconv,
            forward: planner.plan_fft_forward(grid),
            inverse: planner.plan_fft_inverse(grid),
        }
    }

    pub fn points(&self) -> usize {
        self.npts
    }

    pub fn modes(&self) -> usize {
        self.nk
    }

    fn slot(&self, i: usize) -> usize {
        (self.k0 + i as i64).rem_euclid(self.grid as i64) as usize
    }

    /// `f_q = sum_k c_k e^{j 2 pi k x_q}`.
    pub fn type2(&self, c: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(c.len(), self.nk);
        let mut g = vec![Complex64::new(0.0, 0.0); self.grid];
        for (i, &v) in c.iter().enumerate() {
            g[self.slot(i)] = v * self.deconv[i];
        }
        self.inverse.process(&mut g);
        let w = KERNEL_WIDTH;
        let gl = self.grid as i64;
        (0..self.npts)
            .map(|q| {
                let ws = &self.weights[q * w..(q + 1) * w];
                let j0 = self.start[q];
                ws.iter()
                    .enumerate()
                    .map(|(t, &kw)| g[(j0 + t as i64).rem_euclid(gl) as usize] * kw)
                    .sum()
            })
            .collect()
    }

    /// `c_k = sum_q f_q e^{-j 2 pi k x_q}`, the adjoint of [`type2`](Self::type2).
    pub fn type1(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.npts);
        let mut g = vec![Complex64::new(0.0, 0.0); self.grid];
        let w = KERNEL_WIDTH;
        let gl = self.grid as i64;
        for (q, &v) in f.iter().enumerate() {
            let ws = &self.weights[q * w..(q + 1) * w];
            let j0 = self.start[q];
            for (t, &kw) in ws.iter().enumerate() {
                g[(j0 + t as i64).rem_euclid(gl) as usize] += v * kw;
            }
        }
        self.forward.process(&mut g);
        (0..self.nk).map(|i| g[self.slot(i)] * self.deconv[i]).collect()
    }
}
