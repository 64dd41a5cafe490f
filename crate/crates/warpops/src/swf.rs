//! Sampled-warping-function operators: warped DFT, `X_f`, `X_t` and the inverse-map `X^_t`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::domain::{check_feasibility, DomainSpec, IndexSet, Mode};
use crate::error::{Result, WarpError};
use crate::nufft::NufftPlan;
use crate::warp_map::{InverseMap, WarpMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    SwfTime,
    SwfFreq,
    SwfTimeInvmap,
    SafTime,
    SafFreq,
    DualTime,
    DualFreq,
    Oracle,
}

/// Dense operator with its domain, kind and exponent.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub data: DMatrix<Complex64>,
    pub spec: DomainSpec,
    pub kind: OperatorKind,
    pub b: f64,
}

impl OperatorMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.data * v).iter().copied().collect()
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(y);
        (self.data.adjoint() * v).iter().copied().collect()
    }
}

pub(crate) fn cis_turns(t: f64) -> Complex64 {
    let f = t - t.round();
    Complex64::from_polar(1.0, 2.0 * PI * f)
}

pub(crate) fn require_swf(map: &WarpMap, spec: &DomainSpec) -> Result<()> {
    let rep = check_feasibility(map, spec);
    if rep.swf_feasible {
        Ok(())
    } else {
        Err(WarpError::Infeasible(Box::new(rep)))
    }
}

pub(crate) fn require_tw(spec: &DomainSpec) -> Result<()> {
    if spec.mode != Mode::TimeWarping || !spec.input.is_symmetric() || !spec.output.is_symmetric() {
        return Err(WarpError::InvalidDomain("time warping needs odd symmetric input and output sets".into()));
    }
    Ok(())
}

/// Warped sampling positions `w(m/M)` with amplitudes `(Dw(m/M))^b`.
pub(crate) fn warped_samples(map: &WarpMap, m: usize, b: f64) -> (Vec<f64>, Vec<f64>) {
    (0..m)
        .map(|k| {
            let x = k as f64 / m as f64;
            (map.eval(x), map.dw_pow_sample(x, b))
        })
        .unzip()
}

/// `F_{w,M}(k, m) = M^{-1/2} (Dw(m/M))^b e^{-j 2 pi k w(m/M)}`, rows `k` over the input set.
pub fn warped_dft(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    require_swf(map, spec)?;
    let m = spec.m();
    let (ws, amps) = warped_samples(map, m, b);
    let s = (m as f64).sqrt().recip();
    let ks: Vec<i64> = spec.input.indices().collect();
    let data = DMatrix::from_fn(ks.len(), m, |r, c| cis_turns(-(ks[r] as f64) * ws[c]) * (amps[c] * s));
    let kind = if spec.mode == Mode::TimeWarping { OperatorKind::SwfTime } else { OperatorKind::SwfFreq };
    Ok(OperatorMatrix { data, spec: *spec, kind, b })
}

fn par_matrix<F: Fn(usize, usize) -> Complex64 + Sync>(rows: usize, cols: usize, f: F) -> DMatrix<Complex64> {
    let v: Vec<Vec<Complex64>> = (0..rows).into_par_iter().map(|r| (0..cols).map(|c| f(r, c)).collect()).collect();
    DMatrix::from_fn(rows, cols, |r, c| v[r][c])
}

/// Dense `X_t = F_{w,M}^dagger F_N`; rows are output time samples, columns input time samples.
pub fn x_t(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    require_tw(spec)?;
    require_swf(map, spec)?;
    let (n, m) = (spec.n(), spec.m());
    let (ws, amps) = warped_samples(map, m, b);
    let s = ((m * n) as f64).sqrt().recip();
    let ks: Vec<i64> = spec.input.indices().collect();
    let data = par_matrix(m, n, |r, c| {
        let t = ws[r] - c as f64 / n as f64;
        let sum: Complex64 = ks.iter().map(|&k| cis_turns(k as f64 * t)).sum();
        sum * (amps[r] * s)
    });
    Ok(OperatorMatrix { data, spec: *spec, kind: OperatorKind::SwfTime, b })
}

/// Dense `X_f(m, n) = (1/M) sum_k (Dw(k/M))^b e^{j 2 pi (m k / M - n w(k/M))}` over the spec's sets.
pub fn x_f(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    require_swf(map, spec)?;
    let m = spec.m();
    let (ws, amps) = warped_samples(map, m, b);
    let rows: Vec<i64> = spec.output.indices().collect();
    let cols: Vec<i64> = spec.input.indices().collect();
    let data = par_matrix(rows.len(), cols.len(), |r, c| {
        let (mm, nn) = (rows[r] as f64, cols[c] as f64);
        let sum: Complex64 =
            (0..m).map(|k| cis_turns(mm * k as f64 / m as f64 - nn * ws[k]) * amps[k]).sum();
        sum / m as f64
    });
    Ok(OperatorMatrix { data, spec: *spec, kind: OperatorKind::SwfFreq, b })
}

/// Inverse-map samples `v(n/N)` with amplitudes `(Dv(n/N))^b`.
pub(crate) fn inverse_samples(inv: &InverseMap, n: usize, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut vs = Vec::with_capacity(n);
    let mut amps = Vec::with_capacity(n);
    for k in 0..n {
        let y = k as f64 / n as f64;
        vs.push(inv.inverse_eval(y)?);
        amps.push(inv.dv_pow_sample(y, b)?);
    }
    Ok((vs, amps))
}

/// Dense `X^_t = F_M' F_{v,N}^*` built from the inverse map; `X^_t' X_t` approximates the identity.
pub fn x_hat_t(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    require_tw(spec)?;
    require_swf(map, spec)?;
    let (n, m) = (spec.n(), spec.m());
    let inv = InverseMap::new(map);
    let (vs, amps) = inverse_samples(&inv, n, b)?;
    let s = ((m * n) as f64).sqrt().recip();
    let ks: Vec<i64> = spec.output.indices().collect();
    let data = par_matrix(m, n, |r, c| {
        let t = vs[c] - r as f64 / m as f64;
        let sum: Complex64 = ks.iter().map(|&k| cis_turns(k as f64 * t)).sum();
        sum * (amps[c] * s)
    });
    Ok(OperatorMatrix { data, spec: *spec, kind: OperatorKind::SwfTimeInvmap, b })
}

/// Unitary DFT between time samples `0..n` and the coefficients of `set`.
pub(crate) fn dft_to_set(x: &[Complex64], set: &IndexSet, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let n = set.n;
    let mut buf = x.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    let s = (n as f64).sqrt().recip();
    set.indices().map(|k| buf[k.rem_euclid(n as i64) as usize] * s).collect()
}

/// Inverse of [`dft_to_set`].
pub(crate) fn dft_from_set(c: &[Complex64], set: &IndexSet, planner: &mut FftPlanner<f64>) -> Vec<Complex64> {
    let n = set.n;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (k, &v) in set.indices().zip(c) {
        buf[k.rem_euclid(n as i64) as usize] = v;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let s = (n as f64).sqrt().recip();
    buf.into_iter().map(|v| v * s).collect()
}

/// Matrix-free SWF operator sharing its definition with the dense builders.
#[derive(Debug)]
pub struct SwfOperator {
    pub kind: OperatorKind,
    pub spec: DomainSpec,
    pub b: f64,
    amps: Vec<f64>,
    plan: NufftPlan,
}

impl SwfOperator {
    /// Fast `X_t`.
    pub fn time(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<Self> {
        require_tw(spec)?;
        require_swf(map, spec)?;
        let (ws, amps) = warped_samples(map, spec.m(), b);
        let plan = NufftPlan::new(&ws, spec.input.first(), spec.n());
        let s = (spec.m() as f64).sqrt().recip();
        Ok(SwfOperator { kind: OperatorKind::SwfTime, spec: *spec, b, amps: amps.iter().map(|a| a * s).collect(), plan })
    }

    /// Fast `X_f`.
    pub fn freq(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<Self> {
        require_swf(map, spec)?;
        let (ws, amps) = warped_samples(map, spec.m(), b);
        let neg: Vec<f64> = ws.iter().map(|w| -w).collect();
        let plan = NufftPlan::new(&neg, spec.input.first(), spec.n());
        Ok(SwfOperator { kind: OperatorKind::SwfFreq, spec: *spec, b, amps, plan })
    }

    /// Fast `X^_t`.
    pub fn time_invmap(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<Self> {
        require_tw(spec)?;
        require_swf(map, spec)?;
        let inv = InverseMap::new(map);
        let (vs, amps) = inverse_samples(&inv, spec.n(), b)?;
        let neg: Vec<f64> = vs.iter().map(|v| -v).collect();
        let plan = NufftPlan::new(&neg, spec.output.first(), spec.m());
        let s = ((spec.m() * spec.n()) as f64).sqrt().recip();
        Ok(SwfOperator {
            kind: OperatorKind::SwfTimeInvmap,
            spec: *spec,
            b,
            amps: amps.iter().map(|a| a * s).collect(),
            plan,
        })
    }

    pub fn rows(&self) -> usize {
        self.spec.m()
    }

    pub fn cols(&self) -> usize {
        self.spec.n()
    }

    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols() {
            return Err(WarpError::InvalidDomain(format!("expected {} input samples, got {}", self.cols(), x.len())));
        }
        let mut planner = FftPlanner::new();
        Ok(match self.kind {
            OperatorKind::SwfTime => {
                let c = dft_to_set(x, &self.spec.input, &mut planner);
                self.plan.type2(&c).into_iter().zip(&self.amps).map(|(v, a)| v * *a).collect()
            }
            OperatorKind::SwfFreq => {
                let m = self.spec.m();
                let mut t: Vec<Complex64> = self.plan.type2(x).into_iter().zip(&self.amps).map(|(v, a)| v * *a).collect();
                planner.plan_fft_inverse(m).process(&mut t);
                self.spec.output.indices().map(|k| t[k.rem_euclid(m as i64) as usize] / m as f64).collect()
            }
            OperatorKind::SwfTimeInvmap => {
                let f: Vec<Complex64> = x.iter().zip(&self.amps).map(|(v, a)| v * *a).collect();
                let c = self.plan.type1(&f);
                let m = self.spec.m();
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                for (k, &v) in self.spec.output.indices().zip(&c) {
                    buf[k.rem_euclid(m as i64) as usize] = v;
                }
                planner.plan_fft_forward(m).process(&mut buf);
                buf
            }
            _ => unreachable!("SWF kinds only"),
        })
    }

    pub fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.rows() {
            return Err(WarpError::InvalidDomain(format!("expected {} output samples, got {}", self.rows(), y.len())));
        }
        let mut planner = FftPlanner::new();
        Ok(match self.kind {
            OperatorKind::SwfTime => {
                let f: Vec<Complex64> = y.iter().zip(&self.amps).map(|(v, a)| v * *a).collect();
                let c = self.plan.type1(&f);
                dft_from_set(&c, &self.spec.input, &mut planner)
            }
            OperatorKind::SwfFreq => {
                let m = self.spec.m();
                let mut t = vec![Complex64::new(0.0, 0.0); m];
                for (k, &v) in self.spec.output.indices().zip(y) {
                    t[k.rem_euclid(m as i64) as usize] = v;
                }
                planner.plan_fft_forward(m).process(&mut t);
                let f: Vec<Complex64> = t.into_iter().zip(&self.amps).map(|(v, a)| v * (*a / m as f64)).collect();
                self.plan.type1(&f)
            }
            OperatorKind::SwfTimeInvmap => {
                let m = self.spec.m();
                let mut buf = y.to_vec();
                planner.plan_fft_inverse(m).process(&mut buf);
                let c: Vec<Complex64> = self.spec.output.indices().map(|k| buf[k.rem_euclid(m as i64) as usize]).collect();
                self.plan.type2(&c).into_iter().zip(&self.amps).map(|(v, a)| v * *a).collect()
            }
            _ => unreachable!("SWF kinds only"),
        })
    }

    /// Materializes the operator column by column through the fast path.
    pub fn to_matrix(&self) -> Result<OperatorMatrix> {
        let n = self.cols();
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![Complex64::new(0.0, 0.0); n];
                e[j] = Complex64::new(1.0, 0.0);
                self.apply(&e)
            })
            .collect::<Result<_>>()?;
        let data = DMatrix::from_fn(self.rows(), n, |r, c| cols[c][r]);
        Ok(OperatorMatrix { data, spec: self.spec, kind: self.kind, b: self.b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_map_gives_identity() {
        let spec = DomainSpec::time_warping(9, 9).unwrap();
        let map = WarpMap::identity();
        for b in [0.0, 0.5, 1.0] {
            let x = x_t(&map, &spec, b).unwrap();
            let d = &x.data - DMatrix::<Complex64>::identity(9, 9);
            assert!(d.iter().all(|v| v.norm() < 1e-13));
        }
    }

    #[test]
    fn warped_dft_examples() {
        let spec = DomainSpec::time_warping(5, 9).unwrap();
        let id = warped_dft(&WarpMap::identity(), &spec, 0.7).unwrap();
        for (r, k) in spec.input.indices().enumerate() {
            for m in 0..9 {
                let want = cis_turns(-(k as f64) * m as f64 / 9.0) / 3.0;
                assert!((id.data[(r, m)] - want).norm() < 1e-14);
            }
        }
        let e = warped_dft(&WarpMap::exponential(), &spec, 1.0).unwrap();
        let r0 = spec.input.position(0);
        for m in 1..9 {
            let want = std::f64::consts::LN_2 * 2f64.powf(m as f64 / 9.0) / 3.0;
            assert!((e.data[(r0, m)].re - want).abs() < 1e-14);
        }
        let z = warped_dft(&WarpMap::exponential(), &spec, 0.0).unwrap();
        assert!(z.data.iter().all(|v| (v.norm() - 1.0 / 3.0).abs() < 1e-14));
    }

    #[test]
    fn fast_matches_dense() {
        let map = WarpMap::exponential();
        let spec = DomainSpec::time_warping(33, 67).unwrap();
        for b in [0.0, 0.5, 1.0] {
            let dense = x_t(&map, &spec, b).unwrap();
            let fast = SwfOperator::time(&map, &spec, b).unwrap().to_matrix().unwrap();
            let d = (&dense.data - &fast.data).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(d < 1e-12, "X_t b={b}: {d}");
            let dense = x_hat_t(&map, &spec, b).unwrap();
            let fast = SwfOperator::time_invmap(&map, &spec, b).unwrap().to_matrix().unwrap();
            let d = (&dense.data - &fast.data).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(d < 1e-12, "X^_t b={b}: {d}");
        }
        let fw = DomainSpec::frequency_warping(20, 6, 50, 15).unwrap();
        let dense = x_f(&map, &fw, 0.5).unwrap();
        let fast = SwfOperator::freq(&map, &fw, 0.5).unwrap().to_matrix().unwrap();
        let d = (&dense.data - &fast.data).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(d < 1e-12, "X_f: {d}");
    }

    #[test]
    fn adjoint_matches_dense_adjoint() {
        let map = WarpMap::exponential();
        let spec = DomainSpec::time_warping(11, 25).unwrap();
        let op = SwfOperator::time(&map, &spec, 0.5).unwrap();
        let dense = x_t(&map, &spec, 0.5).unwrap();
        let y: Vec<Complex64> = (0..25).map(|k| Complex64::new((k as f64).sin(), 0.2)).collect();
        let a = op.apply_adjoint(&y).unwrap();
        let b = dense.apply_adjoint(&y);
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-12));
        let fw = DomainSpec::frequency_warping(12, 3, 30, 10).unwrap();
        let op = SwfOperator::freq(&map, &fw, 0.5).unwrap();
        let dense = x_f(&map, &fw, 0.5).unwrap();
        let y: Vec<Complex64> = (0..30).map(|k| Complex64::new(0.1 * k as f64, (k as f64).cos())).collect();
        let a = op.apply_adjoint(&y).unwrap();
        let b = dense.apply_adjoint(&y);
        assert!(a.iter().zip(&b).all(|(u, v)| (u - v).norm() < 1e-12));
    }
}
