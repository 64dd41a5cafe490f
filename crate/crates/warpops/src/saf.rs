//! Sampling-after-filtering operators: bases, tail factorization and aliasing correction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::domain::{check_feasibility, DomainSpec};
use crate::error::{Result, WarpError};
use crate::oracle::TailRows;
use crate::special::{pole_sum, zeta_deriv};
use crate::swf::{cis_turns, require_tw, x_f, x_t, OperatorKind, OperatorMatrix};
use crate::symbolic::{build_kernel_s, CoeffTable, KernelMatrix, KernelOptions, MAX_KERNEL_SIZE};
use crate::warp_map::WarpMap;

/// Sampled bases `V`, `Y`, `U` of one domain.
#[derive(Debug, Clone)]
pub struct BasisSet {
    /// `V(k, n) = (n / ((N/2)(1 + mu_N)))^k`, `R x N`.
    pub v: DMatrix<f64>,
    /// `Y(m, i) = (((M/2)(1 - mu_M)) / m)^{i+1}` for the rows in `y_rows`.
    pub y: DMatrix<f64>,
    pub y_rows: Vec<i64>,
    /// `U(m, i) = -((mu_M - 1)^{i+1} / (2^{i+1} i!)) D^i zeta(m / M)`, `M x R`.
    pub u: DMatrix<f64>,
    pub k_tail: usize,
    pub r: usize,
}

fn check_r(r: usize) -> Result<()> {
    if r == 0 || r > MAX_KERNEL_SIZE {
        return Err(WarpError::OutOfRange(format!("kernel size {r} outside 1..={MAX_KERNEL_SIZE}")));
    }
    Ok(())
}

pub fn v_basis(spec: &DomainSpec, r: usize) -> DMatrix<f64> {
    let no = spec.input.outer();
    let ns: Vec<i64> = spec.input.indices().collect();
    DMatrix::from_fn(r, ns.len(), |k, j| (ns[j] as f64 / no).powi(k as i32))
}

fn inner_c(spec: &DomainSpec) -> Result<f64> {
    if spec.output.mu >= 1.0 {
        return Err(WarpError::InvalidDomain("mu_M = 1 leaves no room for the tail normalization".into()));
    }
    Ok(spec.output.inner())
}

/// Tail rows `m` outside the output set with `|m| <= k_tail M`.
pub fn tail_rows(spec: &DomainSpec, k_tail: usize) -> Vec<i64> {
    let lim = (k_tail * spec.m()) as i64;
    (-lim..=lim).filter(|&m| !spec.output.contains(m)).collect()
}

pub fn y_basis(spec: &DomainSpec, rows: &[i64], r: usize) -> Result<DMatrix<f64>> {
    let c = inner_c(spec)?;
    Ok(DMatrix::from_fn(rows.len(), r, |i, k| (c / rows[i] as f64).powi(k as i32 + 1)))
}

/// `U` for singularities on the output grid (`M xi` integer).
pub fn u_basis(spec: &DomainSpec, r: usize) -> Result<DMatrix<f64>> {
    let mu = spec.output.mu;
    inner_c(spec)?;
    let mf = spec.m() as f64;
    let ms: Vec<i64> = spec.output.indices().collect();
    let mut u = DMatrix::zeros(ms.len(), r);
    for (row, &m) in ms.iter().enumerate() {
        let z = m as f64 / mf;
        let mut fact = 1.0;
        for i in 0..r {
            if i > 1 {
                fact *= i as f64;
            }
            let coef = -((mu - 1.0).powi(i as i32 + 1)) / (2f64.powi(i as i32 + 1) * fact);
            u[(row, i)] = coef * zeta_deriv(i, z)?;
        }
    }
    Ok(u)
}

/// `U_theta(m, i) = sum_{k != 0} e^{-j 2 pi k theta} (c / (m - k M))^{i+1}` for `theta = frac(M xi)`.
pub fn u_modulated(spec: &DomainSpec, r: usize, theta: f64) -> Result<DMatrix<Complex64>> {
    let scale = inner_c(spec)? / spec.m() as f64;
    let mf = spec.m() as f64;
    let ms: Vec<i64> = spec.output.indices().collect();
    let rows: Vec<Vec<Complex64>> = ms
        .par_iter()
        .map(|&m| {
            (0..r)
                .map(|i| pole_sum(i + 1, m as f64 / mf, theta).map(|v| v * scale.powi(i as i32 + 1)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(ms.len(), r, |a, b| rows[a][b]))
}

pub fn build_bases(spec: &DomainSpec, r: usize, k_tail: usize) -> Result<BasisSet> {
    check_r(r)?;
    let y_rows = tail_rows(spec, k_tail);
    Ok(BasisSet { v: v_basis(spec, r), y: y_basis(spec, &y_rows, r)?, y_rows, u: u_basis(spec, r)?, k_tail, r })
}

fn frac_offset(t: f64) -> (i64, f64) {
    let s = t.round();
    let th = t - s;
    if th.abs() < 1e-9 {
        (s as i64, 0.0)
    } else {
        let f = t.floor();
        (f as i64, t - f)
    }
}

/// One singularity's factors.
#[derive(Debug, Clone)]
pub struct SingularTerm {
    pub x: f64,
    pub w_x: f64,
    pub kernel: KernelMatrix,
    /// `M xi = shift + theta` with `theta` in `[0, 1)`.
    pub shift: i64,
    pub theta: f64,
    /// `N w(xi) = shift + theta` for the input modulation.
    pub q_shift: i64,
    pub q_theta: f64,
    /// `P_i(m) = e^{j 2 pi m xi}` over the output set.
    pub p: Vec<Complex64>,
    /// `Q_i(n) = e^{-j 2 pi n w(xi)}` over the input set.
    pub q: Vec<Complex64>,
    /// `U_theta`, `M x R_i`.
    pub u: DMatrix<Complex64>,
}

impl SingularTerm {
    pub fn r(&self) -> usize {
        self.kernel.r
    }
}

/// `E = sum_i P_i Y S_i V Q_i`, `A = sum_i P_i U S_i V Q_i`.
#[derive(Debug, Clone)]
pub struct TailFactorization {
    pub spec: DomainSpec,
    pub b: f64,
    pub v: DMatrix<f64>,
    pub terms: Vec<SingularTerm>,
}

impl TailFactorization {
    pub fn new(map: &WarpMap, spec: &DomainSpec, b: f64, opts: &KernelOptions) -> Result<Self> {
        let rep = check_feasibility(map, spec);
        if !rep.saf_feasible {
            return Err(WarpError::Infeasible(Box::new(rep)));
        }
        let table = CoeffTable::shared_with(opts.max_level);
        let mut terms = Vec::new();
        let mut rmax = 0;
        let ms: Vec<i64> = spec.output.indices().collect();
        let ns: Vec<i64> = spec.input.indices().collect();
        for (s, f) in map.singularities().iter().zip(&rep.singularities) {
            let r = opts.size_for(f.j);
            check_r(r)?;
            let kernel = build_kernel_s(table, map, s.x, spec, b, r)?;
            let w_x = map.eval(s.x);
            let (shift, theta) = frac_offset(spec.m() as f64 * s.x);
            let (q_shift, q_theta) = frac_offset(spec.n() as f64 * w_x);
            let u = if theta == 0.0 { u_basis(spec, r)?.map(|v| Complex64::new(v, 0.0)) } else { u_modulated(spec, r, theta)? };
            let p = ms.iter().map(|&m| cis_turns(m as f64 * s.x)).collect();
            let q = ns.iter().map(|&n| cis_turns(-(n as f64) * w_x)).collect();
            rmax = rmax.max(r);
            terms.push(SingularTerm { x: s.x, w_x, kernel, shift, theta, q_shift, q_theta, p, q, u });
        }
        Ok(TailFactorization { spec: *spec, b, v: v_basis(spec, rmax.max(1)), terms })
    }

    /// Total compressed dimension `sum_i R_i`.
    pub fn compressed_dim(&self) -> usize {
        self.terms.iter().map(|t| t.r()).sum()
    }

    /// `S_i V Q_i`, `R_i x N`.
    pub fn h_block(&self, i: usize) -> DMatrix<Complex64> {
        let t = &self.terms[i];
        let r = t.r();
        let vq = DMatrix::from_fn(r, self.v.ncols(), |k, n| t.q[n] * self.v[(k, n)]);
        &t.kernel.s * vq
    }

    /// Stacked `H = [S_1 V Q_1; ...; S_I V Q_I]`.
    pub fn h_stack(&self) -> DMatrix<Complex64> {
        let n = self.v.ncols();
        let mut h = DMatrix::zeros(self.compressed_dim(), n);
        let mut off = 0;
        for i in 0..self.terms.len() {
            let blk = self.h_block(i);
            h.rows_mut(off, blk.nrows()).copy_from(&blk);
            off += blk.nrows();
        }
        h
    }

    /// `A = sum_i P_i U_i S_i V Q_i` over the output set.
    pub fn aliasing(&self) -> DMatrix<Complex64> {
        let (m, n) = (self.spec.m(), self.spec.n());
        let mut a = DMatrix::zeros(m, n);
        for (i, t) in self.terms.iter().enumerate() {
            let pu = DMatrix::from_fn(m, t.r(), |row, k| t.p[row] * t.u[(row, k)]);
            a += pu * self.h_block(i);
        }
        a
    }

    /// Factored tail rows `E(m, .)` for `m` outside the output set, `|m| <= k_tail M`.
    pub fn tails(&self, k_tail: usize) -> Result<TailRows> {
        let rows = tail_rows(&self.spec, k_tail);
        let n = self.spec.n();
        let rmax = self.terms.iter().map(|t| t.r()).max().unwrap_or(1);
        let y = y_basis(&self.spec, &rows, rmax)?;
        let mut e = DMatrix::zeros(rows.len(), n);
        for (i, t) in self.terms.iter().enumerate() {
            let py = DMatrix::from_fn(rows.len(), t.r(), |row, k| cis_turns(rows[row] as f64 * t.x) * y[(row, k)]);
            e += py * self.h_block(i);
        }
        Ok(TailRows { rows, data: e })
    }

    /// `F_M^dagger conj(A) F_N` through the Fourier-transformed bases and circular shifts.
    pub fn aliasing_time(&self) -> DMatrix<Complex64> {
        let (m, n) = (self.spec.m(), self.spec.n());
        let mut planner = FftPlanner::<f64>::new();
        let inv_m = planner.plan_fft_inverse(m);
        let fwd_n = planner.plan_fft_forward(n);
        let (sm, sn) = ((m as f64).sqrt().recip(), (n as f64).sqrt().recip());
        let ms: Vec<i64> = self.spec.output.indices().collect();
        let ns: Vec<i64> = self.spec.input.indices().collect();
        let mut out = DMatrix::zeros(m, n);
        let mut left_cache: Vec<(u64, usize, DMatrix<Complex64>)> = Vec::new();
        let mut right_cache: Vec<(u64, usize, DMatrix<Complex64>)> = Vec::new();
        for t in &self.terms {
            let r = t.r();
            // B = F_M^dagger diag(e^{-j 2 pi m theta / M}) conj(U)
            let key = t.theta.to_bits();
            let base_l = match left_cache.iter().find(|(k, rr, _)| *k == key && *rr == r) {
                Some((_, _, b)) => b.clone(),
                None => {
                    let mut b = DMatrix::zeros(m, r);
                    for k in 0..r {
                        let mut buf = vec![Complex64::new(0.0, 0.0); m];
                        for (row, &mm) in ms.iter().enumerate() {
                            buf[mm.rem_euclid(m as i64) as usize] =
                                t.u[(row, k)].conj() * cis_turns(-(mm as f64) * t.theta / m as f64);
                        }
                        inv_m.process(&mut buf);
                        for (j, v) in buf.into_iter().enumerate() {
                            b[(j, k)] = v * sm;
                        }
                    }
                    left_cache.push((key, r, b.clone()));
                    b
                }
            };
            // C = V diag(e^{j 2 pi n theta' / N}) F_N
            let key = t.q_theta.to_bits();
            let base_r = match right_cache.iter().find(|(k, rr, _)| *k == key && *rr == r) {
                Some((_, _, c)) => c.clone(),
                None => {
                    let mut c = DMatrix::zeros(r, n);
                    for k in 0..r {
                        let mut buf = vec![Complex64::new(0.0, 0.0); n];
                        for (col, &nn) in ns.iter().enumerate() {
                            buf[nn.rem_euclid(n as i64) as usize] =
                                cis_turns(nn as f64 * t.q_theta / n as f64) * self.v[(k, col)];
                        }
                        fwd_n.process(&mut buf);
                        for (j, v) in buf.into_iter().enumerate() {
                            c[(k, j)] = v * sn;
                        }
                    }
                    right_cache.push((key, r, c.clone()));
                    c
                }
            };
            let left = DMatrix::from_fn(m, r, |j, k| base_l[((j as i64 - t.shift).rem_euclid(m as i64) as usize, k)]);
            let right = DMatrix::from_fn(r, n, |k, j| base_r[(k, (j as i64 - t.q_shift).rem_euclid(n as i64) as usize)]);
            out += left * (t.kernel.s.map(|v| v.conj()) * right);
        }
        out
    }
}

/// Corrected frequency-warping operator together with its factorization.
#[derive(Debug, Clone)]
pub struct SafOperator {
    pub op: OperatorMatrix,
    pub factors: TailFactorization,
}

pub fn build_w_f_with(map: &WarpMap, spec: &DomainSpec, b: f64, opts: &KernelOptions) -> Result<SafOperator> {
    let factors = TailFactorization::new(map, spec, b, opts)?;
    let xf = x_f(map, spec, b)?;
    let data = xf.data - factors.aliasing();
    Ok(SafOperator { op: OperatorMatrix { data, spec: *spec, kind: OperatorKind::SafFreq, b }, factors })
}

/// `W_f = X_f - A`.
pub fn build_w_f(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    Ok(build_w_f_with(map, spec, b, &KernelOptions::default())?.op)
}

pub fn build_w_t_with(map: &WarpMap, spec: &DomainSpec, b: f64, opts: &KernelOptions) -> Result<SafOperator> {
    require_tw(spec)?;
    let factors = TailFactorization::new(map, spec, b, opts)?;
    let xt = x_t(map, spec, b)?;
    let data = xt.data - factors.aliasing_time();
    Ok(SafOperator { op: OperatorMatrix { data, spec: *spec, kind: OperatorKind::SafTime, b }, factors })
}

/// `W_t = X_t - F_M^dagger conj(A) F_N`.
pub fn build_w_t(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    Ok(build_w_t_with(map, spec, b, &KernelOptions::default())?.op)
}

/// Unitary DFT matrix from time samples `0..n` to the coefficients of `set`.
pub fn dft_matrix(set: &crate::domain::IndexSet) -> DMatrix<Complex64> {
    let n = set.n;
    let ks: Vec<i64> = set.indices().collect();
    let s = (n as f64).sqrt().recip();
    DMatrix::from_fn(n, n, |r, c| cis_turns(-(ks[r] as f64) * c as f64 / n as f64) * s)
}
