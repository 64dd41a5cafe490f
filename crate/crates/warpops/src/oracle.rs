//! Dense quadrature oracle for the continuous warping operator.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::domain::DomainSpec;
use crate::error::{Result, WarpError};
use crate::jet::Jet;
use crate::warp_map::{PeriodicMap, Side, WarpMap};

pub const DEFAULT_ORDER: usize = 20;
pub const DEFAULT_K_TAIL: usize = 8;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_legendre(order: usize) -> Self {
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        QuadratureRule { order, nodes, weights }
    }

    pub fn shared() -> &'static QuadratureRule {
        static R: OnceLock<QuadratureRule> = OnceLock::new();
        R.get_or_init(|| QuadratureRule::gauss_legendre(DEFAULT_ORDER))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(c + h * x)).sum::<f64>() * h
    }
}

/// Composite nodes and weights on `[0, 1)`, split at the map breakpoints, with at most
/// a quarter period of `e^{j 2 pi freq x}` per panel.
pub fn composite_rule<M: PeriodicMap + ?Sized>(map: &M, freq: f64, rule: &QuadratureRule) -> (Vec<f64>, Vec<f64>) {
    let mut bps: Vec<f64> = map.breakpoints().into_iter().map(|x| x - x.floor()).collect();
    bps.push(0.0);
    bps.push(1.0);
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for seg in bps.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let panels = ((b - a) * freq.max(1.0) * 4.0).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let c = lo + 0.5 * h;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                xs.push(c + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
    }
    (xs, ws)
}

fn cis_turns(t: f64) -> Complex64 {
    let f = t - t.round();
    Complex64::from_polar(1.0, 2.0 * PI * f)
}

/// `int_0^1 (Dw)^b e^{j 2 pi (m x - n w(x))} dx`.
pub fn w_entry<M: PeriodicMap + ?Sized>(map: &M, m: i64, n: i64, b: f64) -> Complex64 {
    let freq = m.unsigned_abs() as f64 + n.unsigned_abs() as f64 * map.max_slope() + 2.0;
    let (xs, ws) = composite_rule(map, freq, QuadratureRule::shared());
    xs.iter()
        .zip(&ws)
        .map(|(&x, &w)| {
            let amp = if b == 0.0 { 1.0 } else { map.slope(x).powf(b) };
            cis_turns(m as f64 * x - n as f64 * map.value(x)) * (w * amp)
        })
        .sum()
}

/// Oracle matrix for arbitrary row and column index lists.
pub fn dense_w<M: PeriodicMap + ?Sized>(map: &M, rows: &[i64], cols: &[i64], b: f64) -> DMatrix<Complex64> {
    let max_m = rows.iter().map(|m| m.unsigned_abs()).max().unwrap_or(0) as f64;
    let max_n = cols.iter().map(|n| n.unsigned_abs()).max().unwrap_or(0) as f64;
    let freq = max_m + max_n * map.max_slope() + 2.0;
    let (xs, ws) = composite_rule(map, freq, QuadratureRule::shared());
    let nc = cols.len();
    // f[q * nc + j] = w_q (Dw)^b e^{-j 2 pi n_j w(x_q)}
    let f: Vec<Complex64> = xs
        .par_iter()
        .zip(ws.par_iter())
        .flat_map_iter(|(&x, &w)| {
            let amp = if b == 0.0 { 1.0 } else { map.slope(x).powf(b) } * w;
            let wx = map.value(x);
            cols.iter().map(move |&n| cis_turns(-(n as f64) * wx) * amp).collect::<Vec<_>>()
        })
        .collect();
    let row_data: Vec<Vec<Complex64>> = rows
        .par_iter()
        .map(|&m| {
            let mut acc = vec![Complex64::new(0.0, 0.0); nc];
            for (q, &x) in xs.iter().enumerate() {
                let g = cis_turns(m as f64 * x);
                let fq = &f[q * nc..(q + 1) * nc];
                for (a, &v) in acc.iter_mut().zip(fq) {
                    *a += g * v;
                }
            }
            acc
        })
        .collect();
    DMatrix::from_fn(rows.len(), nc, |i, j| row_data[i][j])
}

/// In-band block `L_M W L_N'` over the spec's index sets.
pub fn dense_in_band<M: PeriodicMap + ?Sized>(map: &M, spec: &DomainSpec, b: f64) -> DMatrix<Complex64> {
    let rows: Vec<i64> = spec.output.indices().collect();
    let cols: Vec<i64> = spec.input.indices().collect();
    dense_w(map, &rows, &cols, b)
}

/// Out-of-band rows of the warping operator.
#[derive(Debug, Clone)]
pub struct TailRows {
    pub rows: Vec<i64>,
    pub data: DMatrix<Complex64>,
}

/// Rows `m` outside the output set with `|m| <= k_tail M`.
pub fn dense_e<M: PeriodicMap + ?Sized>(map: &M, spec: &DomainSpec, b: f64, k_tail: usize) -> TailRows {
    let lim = (k_tail * spec.m()) as i64;
    let rows: Vec<i64> = (-lim..=lim).filter(|&m| !spec.output.contains(m)).collect();
    let cols: Vec<i64> = spec.input.indices().collect();
    let data = dense_w(map, &rows, &cols, b);
    TailRows { rows, data }
}

/// Partial aliasing sums `A_K(m, n) = sum_{0 < |k| <= K} W(m - k M, n)` for `K = 1..=k_max`.
fn partial_aliasing<M: PeriodicMap + ?Sized>(map: &M, spec: &DomainSpec, b: f64, k_max: usize) -> Vec<DMatrix<Complex64>> {
    let mm = spec.m() as i64;
    let band: Vec<i64> = spec.output.indices().collect();
    let cols: Vec<i64> = spec.input.indices().collect();
    let mut rows = Vec::new();
    for k in 1..=k_max as i64 {
        for &s in &[k, -k] {
            rows.extend(band.iter().map(|&m| m - s * mm));
        }
    }
    let all = dense_w(map, &rows, &cols, b);
    let nb = band.len();
    let mut out = Vec::with_capacity(k_max);
    let mut acc = DMatrix::from_element(nb, cols.len(), Complex64::new(0.0, 0.0));
    for k in 0..k_max {
        for half in 0..2 {
            let off = (2 * k + half) * nb;
            acc += all.rows(off, nb);
        }
        out.push(acc.clone());
    }
    out
}

/// Aliasing matrix by truncated periodic summation over `|k| <= k_tail`.
pub fn dense_a<M: PeriodicMap + ?Sized>(map: &M, spec: &DomainSpec, b: f64, k_tail: usize) -> DMatrix<Complex64> {
    partial_aliasing(map, spec, b, k_tail).pop().expect("k_tail >= 1")
}

/// Aliasing matrix with the symmetric partial sums extrapolated to `K -> infinity` in powers of `1/K`.
///
/// Valid when every singularity sits on the output grid (`M xi` integer), where the
/// partial sums do not oscillate in `K`.
pub fn dense_a_extrapolated(map: &WarpMap, spec: &DomainSpec, b: f64, k_tail: usize) -> Result<DMatrix<Complex64>> {
    if k_tail < 3 {
        return Err(WarpError::OutOfRange("extrapolation needs k_tail >= 3".into()));
    }
    let mf = spec.m() as f64;
    if map.singularities().iter().any(|s| {
        let t = s.x * mf;
        (t - t.round()).abs() > 1e-9
    }) {
        return Err(WarpError::OutOfRange("extrapolated aliasing needs singularities on the output grid".into()));
    }
    let parts = partial_aliasing(map, spec, b, k_tail);
    let ks: Vec<usize> = (2..=k_tail).collect();
    let hs: Vec<f64> = ks.iter().map(|&k| 1.0 / k as f64).collect();
    let (r, c) = parts[0].shape();
    Ok(DMatrix::from_fn(r, c, |i, j| {
        let mut p: Vec<Complex64> = ks.iter().map(|&k| parts[k - 1][(i, j)]).collect();
        // Neville at h = 0
        for lvl in 1..p.len() {
            for t in (lvl..p.len()).rev() {
                let (h0, h1) = (hs[t - lvl], hs[t]);
                p[t] = (p[t] * h0 - p[t - 1] * h1) / (h0 - h1);
            }
        }
        p[p.len() - 1]
    }))
}

/// `D^k [e^{a w} (Dw)^b](x)` by truncated Taylor arithmetic on one side of `x`.
pub fn taylor_phi_deriv(map: &WarpMap, x: f64, side: Side, a: Complex64, b: f64, k: usize) -> Complex64 {
    let side = if side == Side::TwoSided { Side::Right } else { side };
    let jets = map.jets(x, side, k + 1);
    let mut fact = 1.0;
    let mut c = Vec::with_capacity(k + 2);
    for (j, &d) in jets.iter().enumerate() {
        if j > 1 {
            fact *= j as f64;
        }
        c.push(Complex64::new(d / fact, 0.0));
    }
    let w = Jet::from_coeffs(c);
    let dw = w.differentiate();
    let mut wk = w.clone();
    wk.c.truncate(k + 1);
    let e = wk.scale(a).exp();
    let amp = dw.powf(b);
    (&e * &amp).derivative(k)
}
