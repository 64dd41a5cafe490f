//! Reconstruction error norms, their asymptotic estimates, and error curves over a redundancy grid.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{check_feasibility, DomainSpec};
use crate::dual::dual_from_parts;
use crate::error::{Result, WarpError};
use crate::saf::build_w_t_with;
use crate::swf::{x_hat_t, x_t};
use crate::symbolic::{bernoulli, beta_value, CoeffTable, KernelOptions};
use crate::warp_map::{Side, WarpMap};

/// Largest output size reached by the odd-M search before a grid point is declared missing.
pub const MAX_GRID_M: usize = 8191;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    #[default]
    Svd,
    /// Power iteration on `R^dagger R`; agrees with the SVD value to the iteration tolerance.
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormId {
    EpsHat,
    Eps,
    Veps,
    VepsTilde,
}

impl std::str::FromStr for NormId {
    type Err = WarpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eps_hat" => Ok(NormId::EpsHat),
            "eps" => Ok(NormId::Eps),
            "veps" => Ok(NormId::Veps),
            "veps_tilde" => Ok(NormId::VepsTilde),
            _ => Err(WarpError::OutOfRange(format!("unknown norm id {s:?}"))),
        }
    }
}

/// Spectral norm of a dense matrix.
pub fn spectral_norm(m: &DMatrix<Complex64>, method: NormMethod) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match method {
        NormMethod::Svd => m.clone().singular_values().iter().copied().fold(0.0, f64::max),
        NormMethod::Power => {
            let g = m.adjoint() * m;
            let n = g.ncols();
            let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.01 * i as f64, 0.003 * i as f64));
            v /= Complex64::new(v.norm(), 0.0);
            let mut lam = 0.0;
            for _ in 0..10_000 {
                let w = &g * &v;
                let next = w.norm();
                if next == 0.0 {
                    return 0.0;
                }
                v = w / Complex64::new(next, 0.0);
                if (next - lam).abs() <= 1e-14 * next {
                    lam = next;
                    break;
                }
                lam = next;
            }
            lam.sqrt()
        }
    }
}

/// `|| P^dagger Q - I ||`.
pub fn residual_norm(p: &DMatrix<Complex64>, q: &DMatrix<Complex64>, method: NormMethod) -> f64 {
    let n = q.ncols();
    spectral_norm(&(p.adjoint() * q - DMatrix::<Complex64>::identity(n, n)), method)
}

/// `lambda = (2 pi)^s |B_s| / s!` with `s = sigma + 1 + eta`, which equals `2 zeta(s)`.
pub fn lambda(sigma: usize) -> Result<f64> {
    let s = sigma + 1 + (sigma + 1) % 2;
    let b = bernoulli(s)?.abs().to_f64().unwrap_or(f64::NAN);
    let mut v = b;
    for k in 1..=s {
        v *= 2.0 * PI / k as f64;
    }
    Ok(v)
}

/// Coefficients of the asymptotic SAF and SWF error estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateCoefficients {
    pub sigma: usize,
    pub b: f64,
    /// `2 (delta_b + delta_bbar)`
    pub c: usize,
    /// `(sigma + 1) mod 2`
    pub eta: usize,
    pub lambda: f64,
    pub theta: f64,
    pub delta_b: f64,
    pub delta_bbar: f64,
    pub varsigma_b: f64,
    pub varsigma_bbar: f64,
    pub rho: f64,
    /// Singularity used, `None` when the map has none of the requested order.
    pub x: Option<f64>,
}

fn kronecker_zero(b: f64) -> usize {
    usize::from(b == 0.0)
}

impl EstimateCoefficients {
    pub fn new(map: &WarpMap, b: f64, sigma: usize) -> Result<Self> {
        let bbar = 1.0 - b;
        let table = CoeffTable::shared_with(sigma.max(1));
        let level = &table.levels[sigma];
        let last = level.sequences.len() - 1;
        let omega = &level.sequences[last];
        let (db, dbb) = (kronecker_zero(b), kronecker_zero(bbar));
        let jump = |x: f64, e: f64, d: usize| {
            let jp = map.jets(x, Side::Right, sigma + 1);
            let jm = map.jets(x, Side::Left, sigma + 1);
            (jp[1].powi(2 * d as i32) * beta_value(omega, &jp, e) - jm[1].powi(2 * d as i32) * beta_value(omega, &jm, e))
                .abs()
        };
        // minimum regularity, then the largest step
        let mut best: Option<(f64, f64, f64)> = None;
        for s in map.singularities().iter().filter(|s| s.jump_order == sigma + 1) {
            let (d1, d2) = (jump(s.x, b, db), jump(s.x, bbar, dbb));
            if best.is_none_or(|(_, a, c)| d1 * d2 > a * c) {
                best = Some((s.x, d1, d2));
            }
        }
        let (x, delta_b, delta_bbar) = match best {
            Some((x, a, c)) => (Some(x), a, c),
            None => (None, 0.0, 0.0),
        };
        let theta = match x {
            Some(x) => 0.5 * (map.dw(x, Side::Right).powf(b) + map.dw(x, Side::Left).powf(b)),
            None => 1.0,
        };
        Ok(EstimateCoefficients {
            sigma,
            b,
            c: 2 * (db + dbb),
            eta: (sigma + 1) % 2,
            lambda: lambda(sigma)?,
            theta,
            delta_b,
            delta_bbar,
            varsigma_b: table.gamma_value(sigma, last, b, sigma + 2 * db),
            varsigma_bbar: table.gamma_value(sigma, last, bbar, sigma + 2 * dbb),
            rho: if b == 0.0 || b == 1.0 { 1.0 } else { 2.0 },
            x,
        })
    }

    /// `Delta^(b) Delta^(bbar) varsigma^(b) varsigma^(bbar)`.
    pub fn product(&self) -> f64 {
        self.delta_b * self.delta_bbar * self.varsigma_b * self.varsigma_bbar
    }

    pub fn saf_exponent(&self) -> i32 {
        -((2 * self.sigma + 1 + self.c) as i32)
    }

    pub fn swf_exponent(&self) -> i32 {
        -((self.sigma + 1 + self.eta) as i32)
    }

    pub fn saf(&self, n: usize, m: usize) -> f64 {
        let (n, m, c, s) = (n as f64, m as f64, self.c as f64, self.sigma as f64);
        self.product() / (PI.powf(2.0 * s + 2.0) * (2.0 * s + 1.0 + c) * (1.0 + 2.0 * c).sqrt()) * n.powf(1.0 + c)
            / m.powf(2.0 * s + 1.0 + c)
    }

    pub fn swf(&self, n: usize, m: usize) -> f64 {
        let (n, m, e, s) = (n as f64, m as f64, self.eta as f64, self.sigma as f64);
        self.rho * self.lambda * self.theta * self.product().sqrt()
            / (PI.powf(s + 1.0) * 2f64.powf(s + 1.0 + e) * 3f64.powf(e / 2.0))
            * n.powf(1.0 + e)
            / m.powf(s + 1.0 + e)
    }
}

/// Asymptotic estimate of `|| W^(1-b)^dagger W^(b) - I ||`.
pub fn estimate_saf(map: &WarpMap, spec: &DomainSpec, b: f64, sigma: usize) -> Result<f64> {
    Ok(EstimateCoefficients::new(map, b, sigma)?.saf(spec.n(), spec.m()))
}

/// Asymptotic estimate of `|| X^(1-b)^dagger X^(b) - I ||`.
pub fn estimate_swf(map: &WarpMap, spec: &DomainSpec, b: f64, sigma: usize) -> Result<f64> {
    Ok(EstimateCoefficients::new(map, b, sigma)?.swf(spec.n(), spec.m()))
}

/// The four reconstruction norms of one time-warping domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `|| X^_t^(b)^dagger X_t^(b) - I ||`
    pub eps_hat: f64,
    /// `|| X_t^(1-b)^dagger X_t^(b) - I ||`
    pub eps: f64,
    /// `|| W_t^(1-b)^dagger W_t^(b) - I ||`
    pub veps: f64,
    /// `|| W~_t^(1-b)^dagger W_t^(b) - I ||`
    pub veps_tilde: f64,
    /// `rho || A^(1-b)^dagger W^(b) || + veps`, the SWF model that keeps the discarded cross term.
    pub swf_corrected: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    pub kernel: KernelOptions,
    pub norm: NormMethod,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { kernel: KernelOptions::default(), norm: NormMethod::Svd }
    }
}

/// Measures the four norms on a time-warping domain.
pub fn measure_point(map: &WarpMap, spec: &DomainSpec, b: f64, opts: &MeasureOptions) -> Result<Norms> {
    let bbar = 1.0 - b;
    let xb = x_t(map, spec, b)?.data;
    let xbb = if bbar == b { xb.clone() } else { x_t(map, spec, bbar)?.data };
    let xh = x_hat_t(map, spec, b)?.data;
    let wb = build_w_t_with(map, spec, b, &opts.kernel)?;
    let wbb = if bbar == b { wb.clone() } else { build_w_t_with(map, spec, bbar, &opts.kernel)? };
    let dual = dual_from_parts(&wb, &wbb)?;
    let veps = residual_norm(&wbb.op.data, &wb.op.data, opts.norm);
    let rho = if b == 0.0 || b == 1.0 { 1.0 } else { 2.0 };
    let cross = spectral_norm(&(wbb.factors.aliasing_time().adjoint() * &wb.op.data), opts.norm);
    Ok(Norms {
        eps_hat: residual_norm(&xh, &xb, opts.norm),
        eps: residual_norm(&xbb, &xb, opts.norm),
        veps,
        veps_tilde: residual_norm(&dual.data, &wb.op.data, opts.norm),
        swf_corrected: rho * cross + veps,
    })
}

/// Smallest odd `M >= target` giving a SAF-feasible time-warping domain.
pub fn odd_feasible_m(map: &WarpMap, n: usize, target: f64) -> Option<usize> {
    let mut m = target.ceil().max(1.0) as usize;
    if m % 2 == 0 {
        m += 1;
    }
    while m <= MAX_GRID_M {
        if let Ok(spec) = DomainSpec::time_warping(n, m) {
            if check_feasibility(map, &spec).saf_feasible {
                return Some(m);
            }
        }
        m += 2;
    }
    None
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || WarpError::Format(format!("invalid grid {text:?}"));
    let g: Vec<f64> = if text.contains(':') {
        let p: Vec<f64> = text.split(':').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?;
        if p.len() != 3 || !(p[1] > 0.0) || p[2] < p[0] {
            return Err(bad());
        }
        let count = ((p[2] - p[0]) / p[1] + 1e-9).floor() as usize;
        (0..=count).map(|i| p[0] + i as f64 * p[1]).collect()
    } else {
        text.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if g.is_empty() || g.windows(2).any(|w| w[1] <= w[0]) || g.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Normalized redundancy `M / (N max Dw)` requested.
    pub redundancy: f64,
    /// `None` when no feasible odd `M` exists or construction failed.
    pub m: Option<usize>,
    pub norms: Option<Norms>,
    pub est_saf: Option<f64>,
    pub est_swf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub map: String,
    pub n: usize,
    pub b: f64,
    pub sigma: usize,
    pub coefficients: EstimateCoefficients,
    pub points: Vec<CurvePoint>,
}

/// Error curve of `map` on odd time-warping domains of size `n` along a normalized redundancy grid.
pub fn measure_norms(map: &WarpMap, n: usize, b: f64, grid: &[f64]) -> Result<ErrorCurve> {
    measure_norms_with(map, n, b, grid, &MeasureOptions::default())
}

pub fn measure_norms_with(map: &WarpMap, n: usize, b: f64, grid: &[f64], opts: &MeasureOptions) -> Result<ErrorCurve> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(WarpError::OutOfRange("redundancy grid must be strictly increasing".into()));
    }
    if n % 2 == 0 {
        return Err(WarpError::InvalidDomain("time-warping curves need odd N".into()));
    }
    let sigma = map.sigma().unwrap_or(0);
    let coefficients = EstimateCoefficients::new(map, b, sigma)?;
    let corrected = sigma == 0 && b == 0.5;
    let points = grid
        .par_iter()
        .map(|&red| {
            let m = odd_feasible_m(map, n, red * n as f64 * map.max_dw());
            let norms = m.and_then(|m| {
                let spec = DomainSpec::time_warping(n, m).ok()?;
                measure_point(map, &spec, b, opts).ok()
            });
            let m = norms.as_ref().and(m);
            CurvePoint {
                redundancy: red,
                m,
                est_saf: m.map(|m| coefficients.saf(n, m)),
                est_swf: m.map(|m| {
                    if corrected {
                        norms.map_or(f64::NAN, |v| v.swf_corrected)
                    } else {
                        coefficients.swf(n, m)
                    }
                }),
                norms,
            }
        })
        .collect();
    Ok(ErrorCurve { map: map.name().to_string(), n, b, sigma, coefficients, points })
}

impl ErrorCurve {
    pub fn value(&self, p: &CurvePoint, which: NormId) -> Option<f64> {
        let v = p.norms?;
        Some(match which {
            NormId::EpsHat => v.eps_hat,
            NormId::Eps => v.eps,
            NormId::Veps => v.veps,
            NormId::VepsTilde => v.veps_tilde,
        })
    }

    /// Least-squares slope of `log(norm)` against `log(M)` over `range` of normalized redundancy.
    pub fn slope_fit(&self, which: NormId, range: (f64, f64)) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.redundancy >= range.0 && p.redundancy <= range.1)
            .filter_map(|p| Some((p.m? as f64, self.value(p, which)?)))
            .filter(|&(_, v)| v > 0.0 && v.is_finite())
            .map(|(m, v)| (m.ln(), v.ln()))
            .collect();
        if pts.len() < 4 {
            return Err(WarpError::Insufficient(format!("{} valid points in range, need 4", pts.len())));
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(sxy / sxx)
    }

    /// `veps_tilde <= veps <= eps` at every valid point after the first.
    pub fn ordering_holds(&self) -> bool {
        self.points.iter().skip(1).filter_map(|p| p.norms).all(|v| v.veps_tilde <= v.veps && v.veps <= v.eps)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "redundancy,M,eps_hat,eps,veps,veps_tilde,est_saf,est_swf")?;
        let f = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.16e}"));
        for p in &self.points {
            let n = p.norms;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                p.redundancy,
                p.m.map_or(String::new(), |m| m.to_string()),
                f(n.map(|v| v.eps_hat)),
                f(n.map(|v| v.eps)),
                f(n.map(|v| v.veps)),
                f(n.map(|v| v.veps_tilde)),
                f(p.est_saf),
                f(p.est_swf),
            )?;
        }
        Ok(())
    }
}
