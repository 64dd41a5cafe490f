//! Dual operators from the closed-form Neumann resummation in the compressed kernel space.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::domain::DomainSpec;
use crate::error::{Result, WarpError};
use crate::saf::{build_w_f_with, build_w_t_with, dft_matrix, SafOperator, TailFactorization};
use crate::special::lattice_tail;
use crate::swf::{require_tw, OperatorKind, OperatorMatrix};
use crate::symbolic::KernelOptions;
use crate::warp_map::WarpMap;

/// Gram matrix `G_ik(r, r') = sum_{m outside} e^{j 2 pi m (xi_k - xi_i)} Y(m, r) Y(m, r')` over all tail rows.
pub fn tail_gram(spec: &DomainSpec, xs: &[f64], sizes: &[usize]) -> Result<DMatrix<Complex64>> {
    let c = spec.output.inner();
    let a_right = spec.output.last() + 1;
    let a_left = 1 - spec.output.first();
    let dim: usize = sizes.iter().sum();
    let rmax = sizes.iter().copied().max().unwrap_or(0);
    let mut g = DMatrix::zeros(dim, dim);
    let mut oi = 0;
    for (i, &ri) in sizes.iter().enumerate() {
        let mut ok = 0;
        for (k, &rk) in sizes.iter().enumerate() {
            let delta = xs[k] - xs[i];
            // one value per s = r + r' + 2
            let mut by_s = vec![Complex64::new(0.0, 0.0); 2 * rmax + 1];
            for (s, slot) in by_s.iter_mut().enumerate().skip(2) {
                if s > ri + rk {
                    break;
                }
                let right = lattice_tail(s, a_right, c, delta)?;
                let left = lattice_tail(s, a_left, c, -delta)?;
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                *slot = right + left * sign;
            }
            for r in 0..ri {
                for rp in 0..rk {
                    g[(oi + r, ok + rp)] = by_s[r + rp + 2];
                }
            }
            ok += rk;
        }
        oi += ri;
    }
    Ok(g)
}

fn spectral_radius(m: &DMatrix<Complex64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-15, 10_000).ok_or(WarpError::Singular("Schur iteration"))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)].norm()).fold(0.0, f64::max))
}

/// `Z = G (I - H_r H_l^dagger G)^{-1}` so that `sum_{k >= 1} (E_l^dagger E_r)^k = H_l^dagger Z H_r`
/// when `E_x = Y H_x` and `G = Y^dagger Y`.
pub fn compute_z(h_left: &DMatrix<Complex64>, h_right: &DMatrix<Complex64>, g: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let d = g.nrows();
    if d == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let k = h_right * h_left.adjoint() * g;
    let rho = spectral_radius(&k)?;
    if rho >= 1.0 {
        return Err(WarpError::DualDiverges(rho));
    }
    let lhs = DMatrix::<Complex64>::identity(d, d) - k;
    // Z (I - K) = G  <=>  (I - K)^T Z^T = G^T
    let zt = lhs.transpose().full_piv_lu().solve(&g.transpose()).ok_or(WarpError::Singular("Neumann resummation"))?;
    Ok(zt.transpose())
}

/// Pieces of the dual construction for inspection and testing.
#[derive(Debug, Clone)]
pub struct DualFactorization {
    pub h_b: DMatrix<Complex64>,
    pub h_bbar: DMatrix<Complex64>,
    pub g: DMatrix<Complex64>,
    pub z: DMatrix<Complex64>,
}

impl DualFactorization {
    pub fn new(fb: &TailFactorization, fbbar: &TailFactorization) -> Result<Self> {
        let xs: Vec<f64> = fb.terms.iter().map(|t| t.x).collect();
        let sizes: Vec<usize> = fb.terms.iter().map(|t| t.r()).collect();
        let g = tail_gram(&fb.spec, &xs, &sizes)?;
        let h_b = fb.h_stack();
        let h_bbar = fbbar.h_stack();
        let z = compute_z(&h_b, &h_bbar, &g)?;
        Ok(DualFactorization { h_b, h_bbar, g, z })
    }

    /// `X = H_b^dagger Z H_bbar`, the resummed series in the input coefficient space.
    pub fn correction(&self) -> DMatrix<Complex64> {
        self.h_b.adjoint() * &self.z * &self.h_bbar
    }
}

/// Dual frequency operator `W~^(1-b) = W_f^(1-b) (I + H_b^dagger Z H_(1-b))`, satisfying
/// `W~^(1-b)^dagger W_f^(b) = I`.
pub fn dual_w_f_with(map: &WarpMap, spec: &DomainSpec, b: f64, opts: &KernelOptions) -> Result<OperatorMatrix> {
    let bbar = 1.0 - b;
    let wb = build_w_f_with(map, spec, b, opts)?;
    let wbbar = if bbar == b { wb.clone() } else { build_w_f_with(map, spec, bbar, opts)? };
    dual_from_parts(&wb, &wbbar)
}

/// Dual of `wb` from already built SAF operators `wb` (exponent `b`) and `wbbar` (exponent `1 - b`),
/// in the form (time or frequency) of `wbbar`.
pub fn dual_from_parts(wb: &SafOperator, wbbar: &SafOperator) -> Result<OperatorMatrix> {
    let spec = &wbbar.op.spec;
    let df = DualFactorization::new(&wb.factors, &wbbar.factors)?;
    let n = spec.n();
    let id = DMatrix::<Complex64>::identity(n, n);
    let (x, kind) = match wbbar.op.kind {
        OperatorKind::SafTime => {
            let f = dft_matrix(&spec.input);
            (f.adjoint() * df.correction().map(|v| v.conj()) * &f + id, OperatorKind::DualTime)
        }
        _ => (df.correction() + id, OperatorKind::DualFreq),
    };
    Ok(OperatorMatrix { data: &wbbar.op.data * x, spec: *spec, kind, b: wbbar.op.b })
}

pub fn dual_w_f(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    dual_w_f_with(map, spec, b, &KernelOptions::default())
}

/// Dual time operator `W~_t^(1-b) = W_t^(1-b) (I + F_N^dagger conj(X) F_N)`.
pub fn dual_w_t_with(map: &WarpMap, spec: &DomainSpec, b: f64, opts: &KernelOptions) -> Result<OperatorMatrix> {
    require_tw(spec)?;
    let bbar = 1.0 - b;
    let wb = build_w_t_with(map, spec, b, opts)?;
    let wbbar = if bbar == b { wb.clone() } else { build_w_t_with(map, spec, bbar, opts)? };
    dual_from_parts(&wb, &wbbar)
}

pub fn dual_w_t(map: &WarpMap, spec: &DomainSpec, b: f64) -> Result<OperatorMatrix> {
    dual_w_t_with(map, spec, b, &KernelOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saf::build_w_f;

    #[test]
    fn z_matches_truncated_series() {
        let map = WarpMap::exponential();
        let spec = DomainSpec::time_warping(33, 67).unwrap();
        let opts = KernelOptions { r: Some(16), ..Default::default() };
        for b in [0.5, 0.0] {
            let fb = TailFactorization::new(&map, &spec, b, &opts).unwrap();
            let fbb = TailFactorization::new(&map, &spec, 1.0 - b, &opts).unwrap();
            let df = DualFactorization::new(&fb, &fbb).unwrap();
            let t = df.h_b.adjoint() * &df.g * &df.h_bbar;
            let mut term = t.clone();
            let mut sum = t.clone();
            for _ in 1..40 {
                term = &term * &t;
                sum += &term;
            }
            let d = (&sum - df.correction()).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(d < 1e-12, "b={b}: {d}");
        }
    }

    #[test]
    fn identity_map_dual_is_operator() {
        let spec = DomainSpec::time_warping(9, 19).unwrap();
        let m = WarpMap::identity();
        let d = dual_w_f(&m, &spec, 0.5).unwrap();
        assert_eq!(d.data, build_w_f(&m, &spec, 0.5).unwrap().data);
    }

    #[test]
    fn gram_against_direct_sum() {
        let spec = DomainSpec::time_warping(9, 23).unwrap();
        let g = tail_gram(&spec, &[0.0, 0.3], &[3, 3]).unwrap();
        let c = spec.output.inner();
        let direct = |r: usize, rp: usize, d: f64| {
            let mut s = Complex64::new(0.0, 0.0);
            for m in (12i64..400_000).chain(-400_000..-11) {
                let mf = m as f64;
                s += crate::swf::cis_turns(mf * d) * (c / mf).powi((r + rp + 2) as i32);
            }
            s
        };
        for (r, rp) in [(0, 1), (1, 1), (2, 0)] {
            let got = g[(r, 3 + rp)];
            let want = direct(r, rp, 0.3);
            assert!((got - want).norm() < 1e-6, "{got} vs {want}");
            let got = g[(r, rp)];
            let want = direct(r, rp, 0.0);
            assert!((got - want).norm() < 1e-4 * want.norm().max(1e-3), "{got} vs {want}");
        }
    }
}
