//! Periodic-wise piecewise smooth warping maps.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WarpError};
use crate::jet::Jet;

/// Highest derivative order compared when detecting singularities.
pub const MAX_TESTED_ORDER: usize = 16;

const JET_EQ_TOL: f64 = 1e-10;
const INVERSE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    TwoSided,
}

/// Analytic description of one piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Piece {
    /// `w(x) = sum_j c[j] (x - x0)^j`
    Poly { x0: f64, coeffs: Vec<f64> },
    /// `w(x) = (exp(rate x) - 1) / (exp(rate) - 1)`
    Exp { rate: f64 },
    /// `w(x) = atan(nu tan(pi x)) / pi`, continued to a bijection of [0, 1).
    AtanTan { nu: f64 },
}

impl Piece {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Piece::Poly { x0, coeffs } => {
                let t = x - x0;
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
            }
            Piece::Exp { rate } => (rate * x).exp_m1() / rate.exp_m1(),
            Piece::AtanTan { nu } => {
                if x == 0.5 {
                    return 0.5;
                }
                let v = (nu * (PI * x).tan()).atan() / PI;
                if x > 0.5 {
                    v + 1.0
                } else if x < -0.5 {
                    v - 1.0
                } else {
                    v
                }
            }
        }
    }

    /// Derivatives `D^0 w .. D^order w` at `x`.
    fn jet(&self, x: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        out[0] = self.eval(x);
        if order == 0 {
            return out;
        }
        match self {
            Piece::Poly { x0, coeffs } => {
                let t = x - x0;
                let mut c = coeffs.clone();
                for slot in out.iter_mut().skip(1) {
                    c = c.iter().enumerate().skip(1).map(|(j, &v)| v * j as f64).collect();
                    if c.is_empty() {
                        break;
                    }
                    *slot = c.iter().rev().fold(0.0, |acc, &v| acc * t + v);
                }
            }
            Piece::Exp { rate } => {
                let base = (rate * x).exp() / rate.exp_m1();
                let mut r = *rate;
                for slot in out.iter_mut().skip(1) {
                    *slot = r * base;
                    r *= rate;
                }
            }
            Piece::AtanTan { nu } => {
                let mut u = Jet::<f64>::variable(2.0 * PI * x.rem_euclid(1.0), order - 1);
                if order > 1 {
                    u.c[1] = 2.0 * PI;
                }
                let (_, c) = u.sin_cos();
                let denom = Jet::from_coeffs(
                    c.c.iter()
                        .enumerate()
                        .map(|(k, &v)| {
                            let base = if k == 0 { 1.0 + nu * nu } else { 0.0 };
                            base - (nu * nu - 1.0) * v
                        })
                        .collect(),
                );
                let dw = denom.recip().scale(2.0 * nu);
                for (m, slot) in out.iter_mut().enumerate().skip(1) {
                    *slot = dw.derivative(m - 1);
                }
            }
        }
        out
    }
}

/// A singular point of the periodic extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    pub x: f64,
    /// Lowest derivative order that jumps.
    pub jump_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `None` when no jump was found up to [`MAX_TESTED_ORDER`].
    pub sigma: Option<usize>,
    pub singularities: Vec<Singularity>,
    pub min_dw: f64,
    pub max_dw: f64,
}

/// Piecewise smooth bijection of the unit period, extended by `w(x + k) = w(x) + k`.
#[derive(Debug, Clone)]
pub struct WarpMap {
    name: String,
    /// Piece starts, ascending, beginning with 0.
    starts: Vec<f64>,
    pieces: Vec<Piece>,
    diag: Diagnostics,
}

impl WarpMap {
    /// Builds and validates a map from pieces `pieces[i]` valid on `[starts[i], starts[i+1])`.
    pub fn from_pieces(name: &str, starts: Vec<f64>, pieces: Vec<Piece>) -> Result<Self> {
        if starts.is_empty() || starts.len() != pieces.len() {
            return Err(WarpError::InvalidMap("piece list is empty or inconsistent".into()));
        }
        if starts[0] != 0.0 {
            return Err(WarpError::InvalidMap("first piece must start at 0".into()));
        }
        if starts.windows(2).any(|w| !(w[0] < w[1])) || *starts.last().unwrap() >= 1.0 {
            return Err(WarpError::InvalidMap("piece starts must increase within [0, 1)".into()));
        }
        let mut map = WarpMap {
            name: name.to_string(),
            starts,
            pieces,
            diag: Diagnostics { sigma: None, singularities: vec![], min_dw: 0.0, max_dw: 0.0 },
        };
        map.diag = map.run_validation()?;
        Ok(map)
    }

    pub fn identity() -> Self {
        Self::from_pieces("identity", vec![0.0], vec![Piece::Poly { x0: 0.0, coeffs: vec![0.0, 1.0] }])
            .expect("identity map is valid")
    }

    /// `w(t) = 2^t - 1`.
    pub fn exponential() -> Self {
        Self::exponential_rate(std::f64::consts::LN_2).expect("exponential map is valid")
    }

    /// `w(t) = (e^{rate t} - 1) / (e^{rate} - 1)`.
    pub fn exponential_rate(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate != 0.0) {
            return Err(WarpError::InvalidMap("exponential rate must be finite and nonzero".into()));
        }
        Self::from_pieces("exponential", vec![0.0], vec![Piece::Exp { rate }])
    }

    /// `w(x) = x + kappa x (1 - x)(2x - 1)`: first derivative matches across the seam, second jumps.
    pub fn seam_cubic(kappa: f64) -> Result<Self> {
        Self::from_pieces(
            "seam_cubic",
            vec![0.0],
            vec![Piece::Poly { x0: 0.0, coeffs: vec![0.0, 1.0 - kappa, 3.0 * kappa, -2.0 * kappa] }],
        )
    }

    pub fn atan_tan(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(WarpError::InvalidMap("nu must be positive".into()));
        }
        Self::from_pieces("atan_tan", vec![0.0], vec![Piece::AtanTan { nu }])
    }

    /// Periodic cubic spline interpolating `w - x` through `(0, 0)` and the interior `knots`.
    pub fn spline(knots: &[(f64, f64)]) -> Result<Self> {
        let mut pts = vec![(0.0, 0.0)];
        pts.extend_from_slice(knots);
        check_knots(&pts)?;
        let n = pts.len();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let g: Vec<f64> = pts.iter().map(|p| p.1 - p.0).collect();
        let h: Vec<f64> = (0..n).map(|i| if i + 1 < n { xs[i + 1] - xs[i] } else { 1.0 - xs[i] }).collect();
        // periodic second-derivative system
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            a[(i, im)] += h[im];
            a[(i, i)] += 2.0 * (h[im] + h[i]);
            a[(i, ip)] += h[i];
            rhs[i] = 6.0 * ((g[ip] - g[i]) / h[i] - (g[i] - g[im]) / h[im]);
        }
        let sec = if n == 1 {
            DVector::zeros(1)
        } else {
            a.lu().solve(&rhs).ok_or(WarpError::Singular("spline system"))?
        };
        let mut pieces = Vec::with_capacity(n);
        for i in 0..n {
            let ip = (i + 1) % n;
            let (m0, m1) = (sec[i], sec[ip]);
            let slope = (g[ip] - g[i]) / h[i] - h[i] * (2.0 * m0 + m1) / 6.0;
            pieces.push(Piece::Poly {
                x0: xs[i],
                coeffs: vec![pts[i].1, 1.0 + slope, m0 / 2.0, (m1 - m0) / (6.0 * h[i])],
            });
        }
        Self::from_pieces("spline", xs, pieces)
    }

    /// Piecewise linear interpolation through `(0, 0)` and the interior `knots`, each corner
    /// replaced by a quadratic blend of half-width `width`.
    pub fn pwl_smooth(knots: &[(f64, f64)], width: f64) -> Result<Self> {
        let mut pts = vec![(0.0, 0.0)];
        pts.extend_from_slice(knots);
        check_knots(&pts)?;
        let n = pts.len();
        let next = |i: usize| if i + 1 < n { pts[i + 1] } else { (1.0, 1.0) };
        let slopes: Vec<f64> = (0..n).map(|i| (next(i).1 - pts[i].1) / (next(i).0 - pts[i].0)).collect();
        let min_seg = (0..n).map(|i| next(i).0 - pts[i].0).fold(f64::INFINITY, f64::min);
        if !(width > 0.0 && 2.0 * width < min_seg) {
            return Err(WarpError::InvalidMap(format!(
                "blend width {width} must be positive and below half the shortest segment {min_seg}"
            )));
        }
        // quadratic blend around knot j in the local variable s = x - x_j
        let blend = |j: usize| -> Vec<f64> {
            let s0 = slopes[(j + n - 1) % n];
            let s1 = slopes[j];
            let d = (s1 - s0) / (4.0 * width);
            let y0 = pts[j].1 - width * s0;
            // y0 + s0 (s + h) + d (s + h)^2
            vec![y0 + s0 * width + d * width * width, s0 + 2.0 * d * width, d]
        };
        let mut starts = Vec::new();
        let mut pieces = Vec::new();
        let b0 = blend(0);

        starts.push(0.0);
        pieces.push(Piece::Poly { x0: 0.0, coeffs: b0.clone() });
        for j in 0..n {
            starts.push(pts[j].0 + width);
            pieces.push(Piece::Poly { x0: pts[j].0, coeffs: vec![pts[j].1, slopes[j]] });
            let xe = next(j).0;
            starts.push(xe - width);
            if j + 1 < n {
                pieces.push(Piece::Poly { x0: pts[j + 1].0, coeffs: blend(j + 1) });
            } else {
                let mut c = b0.clone();
                c[0] += 1.0;
                pieces.push(Piece::Poly { x0: 1.0, coeffs: c });
            }
        }
        // the blend at t = 0 lifts w(0) by d h^2
        let lift = b0[0];
        for p in &mut pieces {
            if let Piece::Poly { coeffs, .. } = p {
                coeffs[0] -= lift;
            }
        }
        Self::from_pieces("pwl_smooth", starts, pieces)
    }

    /// Loads a map from its JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MapSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pieces(&self) -> impl Iterator<Item = (f64, &Piece)> {
        self.starts.iter().copied().zip(self.pieces.iter())
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diag
    }

    pub fn singularities(&self) -> &[Singularity] {
        &self.diag.singularities
    }

    pub fn sigma(&self) -> Option<usize> {
        self.diag.sigma
    }

    pub fn max_dw(&self) -> f64 {
        self.diag.max_dw
    }

    pub fn min_dw(&self) -> f64 {
        self.diag.min_dw
    }

    /// Index of the piece owning `t` in `[0, 1)`, and for `Side::Left` the piece ending at `t`.
    fn locate(&self, t: f64, side: Side) -> (usize, f64) {
        let idx = match self.starts.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(i) => {
                if side == Side::Left {
                    if i == 0 {
                        return (self.pieces.len() - 1, 1.0);
                    }
                    i - 1
                } else {
                    i
                }
            }
            Err(i) => i - 1,
        };
        (idx, t)
    }

    /// `w` on the whole real line.
    pub fn eval(&self, x: f64) -> f64 {
        let fl = x.floor();
        let t = x - fl;
        let (i, t) = self.locate(t, Side::Right);
        self.pieces[i].eval(t) + fl
    }

    /// One-sided derivatives `D^0 w .. D^order w` at `x` (reduced to the unit period).
    pub fn jets(&self, x: f64, side: Side, order: usize) -> Vec<f64> {
        let fl = x.floor();
        let t = x - fl;
        let (i, tt) = self.locate(t, side);
        let mut j = self.pieces[i].jet(tt, order);
        j[0] += fl + if tt == 1.0 && t == 0.0 { -1.0 } else { 0.0 };
        j
    }

    /// `D^order w(x)`; `TwoSided` fails at a point where the one-sided values differ.
    pub fn derivative(&self, x: f64, order: usize, side: Side) -> Result<f64> {
        if side != Side::TwoSided {
            return Ok(self.jets(x, side, order)[order]);
        }
        let r = self.jets(x, Side::Right, order)[order];
        let l = self.jets(x, Side::Left, order)[order];
        if (r - l).abs() > JET_EQ_TOL * r.abs().max(l.abs()).max(1.0) {
            return Err(WarpError::JetMismatch { at: x - x.floor(), order });
        }
        Ok(r)
    }

    /// First derivative with a side selection that never fails.
    pub fn dw(&self, x: f64, side: Side) -> f64 {
        let s = if side == Side::TwoSided { Side::Right } else { side };
        self.jets(x, s, 1)[1]
    }

    /// Position of a singularity coinciding with `x` modulo 1, if any.
    pub fn singularity_at(&self, x: f64) -> Option<&Singularity> {
        let t = x - x.floor();
        self.diag.singularities.iter().find(|s| {
            let d = (t - s.x).abs();
            d < 1e-13 || (1.0 - d) < 1e-13
        })
    }

    /// `(Dw)^b` sampled at `x`; at a singularity the mean of the one-sided values is used,
    /// which is the value a Fourier series converges to at a jump.
    pub fn dw_pow_sample(&self, x: f64, b: f64) -> f64 {
        if b == 0.0 {
            return 1.0;
        }
        if let Some(s) = self.singularity_at(x) {
            let l = self.dw(s.x, Side::Left).powf(b);
            let r = self.dw(s.x, Side::Right).powf(b);
            0.5 * (l + r)
        } else {
            self.dw(x, Side::Right).powf(b)
        }
    }

    fn run_validation(&self) -> Result<Diagnostics> {
        // continuity and jets at every piece start, seam included
        let mut sings = Vec::new();
        for &s in &self.starts {
            let r = self.jets(s, Side::Right, MAX_TESTED_ORDER);
            let l = self.jets(s, Side::Left, MAX_TESTED_ORDER);
            if (r[0] - l[0]).abs() > 1e-10 {
                return Err(WarpError::InvalidMap(format!(
                    "map is discontinuous at x = {s}: {} vs {}",
                    l[0], r[0]
                )));
            }
            let jump = (1..=MAX_TESTED_ORDER)
                .find(|&k| (r[k] - l[k]).abs() > JET_EQ_TOL * r[k].abs().max(l[k].abs()).max(1.0));
            if let Some(k) = jump {
                sings.push(Singularity { x: s, jump_order: k });
            }
        }
        if self.eval(0.0).abs() > 1e-12 {
            return Err(WarpError::InvalidMap(format!("w(0) = {} instead of 0", self.eval(0.0))));
        }
        let (last, _) = self.locate(0.0, Side::Left);
        let w1 = self.pieces[last].eval(1.0);
        if (w1 - 1.0).abs() > 1e-10 {
            return Err(WarpError::InvalidMap(format!("w(1-) = {w1} instead of 1")));
        }
        // monotonicity on a dense grid plus every one-sided endpoint
        let mut min_dw = f64::INFINITY;
        let mut max_dw: f64 = 0.0;
        let grid = 8192;
        let mut probe = |d: f64, x: f64| -> Result<()> {
            if !(d.is_finite() && d > 0.0) {
                return Err(WarpError::InvalidMap(format!("Dw = {d} at x = {x} is not positive and finite")));
            }
            min_dw = min_dw.min(d);
            max_dw = max_dw.max(d);
            Ok(())
        };
        for k in 0..grid {
            let x = k as f64 / grid as f64;
            probe(self.dw(x, Side::Right), x)?;
        }
        for &s in &self.starts {
            probe(self.dw(s, Side::Left), s)?;
            probe(self.dw(s, Side::Right), s)?;
        }
        // refine extrema inside pieces by golden-section search on each grid cell neighbourhood
        let (lo, hi) = self.refine_extrema(grid);
        probe(lo, 0.0)?;
        probe(hi, 0.0)?;
        let mut prev = self.eval(0.0);
        for k in 1..=grid {
            let x = k as f64 / grid as f64;
            let v = self.eval(x);
            if v <= prev {
                return Err(WarpError::InvalidMap(format!("map is not increasing near x = {x}")));
            }
            prev = v;
        }
        let sigma = sings.iter().map(|s| s.jump_order - 1).min();
        Ok(Diagnostics { sigma, singularities: sings, min_dw, max_dw })
    }

    fn refine_extrema(&self, grid: usize) -> (f64, f64) {
        let f = |x: f64| self.dw(x, Side::Right);
        let mut best_lo = (f64::INFINITY, 0.0);
        let mut best_hi = (f64::NEG_INFINITY, 0.0);
        for k in 0..grid {
            let x = (k as f64 + 0.5) / grid as f64;
            let v = f(x);
            if v < best_lo.0 {
                best_lo = (v, x);
            }
            if v > best_hi.0 {
                best_hi = (v, x);
            }
        }
        let h = 1.0 / grid as f64;
        let golden = |x0: f64, sign: f64| -> f64 {
            let (mut a, mut b) = ((x0 - h).max(0.0), (x0 + h).min(1.0 - 1e-15));
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if sign * f(c) > sign * f(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            f(0.5 * (a + b))
        };
        (golden(best_lo.1, 1.0).min(best_lo.0), golden(best_hi.1, -1.0).max(best_hi.0))
    }
}

fn check_knots(pts: &[(f64, f64)]) -> Result<()> {
    for w in pts.windows(2) {
        if !(w[0].0 < w[1].0 && w[0].1 < w[1].1) {
            return Err(WarpError::InvalidMap("knots must be strictly increasing in x and w".into()));
        }
    }
    let last = pts.last().unwrap();
    if !(last.0 < 1.0 && last.1 < 1.0) {
        return Err(WarpError::InvalidMap("knots must lie inside (0, 1)".into()));
    }
    Ok(())
}

/// Re-validates a map and returns its diagnostics.
pub fn validate(map: &WarpMap) -> Result<Diagnostics> {
    map.run_validation()
}

/// JSON map description: `{"type": ..., "knots": [[x, w], ...], "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub knots: Vec<[f64; 2]>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl MapSpec {
    pub fn build(&self) -> Result<WarpMap> {
        let knots: Vec<(f64, f64)> = self.knots.iter().map(|k| (k[0], k[1])).collect();
        let param = |k: &str, d: f64| self.params.get(k).copied().unwrap_or(d);
        match self.kind.as_str() {
            "identity" => Ok(WarpMap::identity()),
            "exponential" => WarpMap::exponential_rate(param("rate", std::f64::consts::LN_2)),
            "seam_cubic" => WarpMap::seam_cubic(param("kappa", 0.5)),
            "atan_tan" => WarpMap::atan_tan(param("nu", 1.5)),
            "spline" => WarpMap::spline(&knots),
            "pwl_smooth" => WarpMap::pwl_smooth(&knots, param("width", 0.05)),
            other => Err(WarpError::InvalidMap(format!("unknown map type '{other}'"))),
        }
    }
}

/// Numerical inverse `v = w^{-1}` with a precomputed bracketing grid.
#[derive(Debug, Clone)]
pub struct InverseMap {
    map: WarpMap,
    xs: Vec<f64>,
    ws: Vec<f64>,
}

impl InverseMap {
    pub fn new(map: &WarpMap) -> Self {
        let grid = 1024;
        let mut xs: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
        xs.extend(map.starts.iter().copied());
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let ws = xs.iter().map(|&x| if x == 1.0 { 1.0 } else { map.eval(x) }).collect();
        InverseMap { map: map.clone(), xs, ws }
    }

    pub fn source(&self) -> &WarpMap {
        &self.map
    }

    /// `v(y)` on the whole real line.
    pub fn inverse_eval(&self, y: f64) -> Result<f64> {
        let fl = y.floor();
        let t = y - fl;
        let i = match self.ws.binary_search_by(|w| w.partial_cmp(&t).unwrap()) {
            Ok(i) => return Ok(self.xs[i] + fl),
            Err(i) => i,
        };
        let (mut a, mut b) = (self.xs[i - 1], self.xs[i]);
        let f = |x: f64| {
            if x >= 1.0 {
                1.0 - t
            } else {
                self.map.eval(x) - t
            }
        };
        let mut x = a + (b - a) * (t - self.ws[i - 1]) / (self.ws[i] - self.ws[i - 1]);
        for _ in 0..200 {
            let fx = f(x);
            if fx.abs() <= INVERSE_TOL {
                return Ok(x + fl);
            }
            if fx > 0.0 {
                b = x;
            } else {
                a = x;
            }
            let d = self.map.dw(x, Side::Right);
            let newton = x - fx / d;
            x = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a <= 4.0 * f64::EPSILON {
                return Ok(x + fl);
            }
        }
        Err(WarpError::InverseDiverged(y))
    }

    /// `Dv(y) = 1 / Dw(v(y))`, one-sided at images of singularities.
    pub fn dv(&self, y: f64, side: Side) -> Result<f64> {
        let x = self.inverse_eval(y)?;
        Ok(1.0 / self.map.dw(x, side))
    }

    /// `(Dv)^b` at `y`, averaged over the two sides at the image of a singularity.
    pub fn dv_pow_sample(&self, y: f64, b: f64) -> Result<f64> {
        if b == 0.0 {
            return Ok(1.0);
        }
        let x = self.inverse_eval(y)?;
        if self.map.singularity_at(x).is_some() {
            let l = (1.0 / self.map.dw(x, Side::Left)).powf(b);
            let r = (1.0 / self.map.dw(x, Side::Right)).powf(b);
            Ok(0.5 * (l + r))
        } else {
            Ok((1.0 / self.map.dw(x, Side::Right)).powf(b))
        }
    }
}

/// Minimal interface shared by a map and its inverse for quadrature.
pub trait PeriodicMap: Sync {
    fn value(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
    /// Points of `[0, 1)` where the integrand may lose smoothness, 0 included.
    fn breakpoints(&self) -> Vec<f64>;
    fn max_slope(&self) -> f64;
}

impl PeriodicMap for WarpMap {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn slope(&self, x: f64) -> f64 {
        self.dw(x, Side::Right)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.starts.clone()
    }
    fn max_slope(&self) -> f64 {
        self.max_dw()
    }
}

impl PeriodicMap for InverseMap {
    fn value(&self, y: f64) -> f64 {
        self.inverse_eval(y).expect("validated map has a convergent inverse")
    }
    fn slope(&self, y: f64) -> f64 {
        self.dv(y, Side::Right).expect("validated map has a convergent inverse")
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.map.starts.iter().map(|&s| self.map.eval(s)).collect()
    }
    fn max_slope(&self) -> f64 {
        1.0 / self.map.min_dw()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn exponential_values() {
        let m = WarpMap::exponential();
        assert_eq!(m.eval(0.0), 0.0);
        assert!((m.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((m.eval(0.5) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((m.eval(2.5) - (2.0 + 2f64.sqrt() - 1.0)).abs() < 1e-14);
        assert!((m.eval(-0.5) - (2f64.sqrt() - 2.0)).abs() < 1e-14);
    }

    #[test]
    fn exponential_one_sided_derivatives() {
        let m = WarpMap::exponential();
        assert!((m.derivative(0.0, 1, Side::Right).unwrap() - LN_2).abs() < 1e-15);
        assert!((m.derivative(0.0, 1, Side::Left).unwrap() - 2.0 * LN_2).abs() < 1e-15);
        assert!(matches!(
            m.derivative(0.0, 1, Side::TwoSided),
            Err(WarpError::JetMismatch { order: 1, .. })
        ));
        assert!((m.derivative(3.0, 2, Side::Right).unwrap() - LN_2 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn identity_is_smooth() {
        let m = WarpMap::identity();
        assert_eq!(m.derivative(0.3, 2, Side::TwoSided).unwrap(), 0.0);
        assert_eq!(m.sigma(), None);
        assert!(m.singularities().is_empty());
    }

    #[test]
    fn detected_smoothness_classes() {
        let e = WarpMap::exponential();
        assert_eq!(e.sigma(), Some(0));
        assert_eq!(e.singularities().len(), 1);
        assert_eq!(e.singularities()[0].x, 0.0);
        let c = WarpMap::seam_cubic(0.5).unwrap();
        assert_eq!(c.sigma(), Some(1));
        let s = WarpMap::spline(&[(0.3, 0.2), (0.6, 0.55)]).unwrap();
        assert_eq!(s.sigma(), Some(2));
        assert_eq!(s.singularities().len(), 3);
        let p = WarpMap::pwl_smooth(&[(0.5, 0.35)], 0.05).unwrap();
        assert_eq!(p.sigma(), Some(1));
        assert_eq!(p.singularities().len(), 4);
        let a = WarpMap::atan_tan(1.5).unwrap();
        assert_eq!(a.sigma(), None);
    }

    #[test]
    fn atan_tan_derivatives_match_closed_form() {
        let nu: f64 = 1.5;
        let m = WarpMap::atan_tan(nu).unwrap();
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.8] {
            let (s, c) = (PI * x).sin_cos();
            let want = nu / (c * c + nu * nu * s * s);
            assert!((m.dw(x, Side::Right) - want).abs() < 1e-13);
            let h = 1e-5;
            let fd = (m.dw(x + h, Side::Right) - m.dw(x - h, Side::Right)) / (2.0 * h);
            assert!((m.derivative(x, 2, Side::Right).unwrap() - fd).abs() < 1e-6 * fd.abs().max(1.0));
        }
        assert!((m.eval(0.75) - (0.5 + (nu * (0.75 * PI).tan()).atan() / PI + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_monotone() {
        assert!(WarpMap::seam_cubic(1.5).is_err());
        assert!(WarpMap::spline(&[(0.5, 0.95), (0.55, 0.96)]).is_err());
    }

    #[test]
    fn json_loader() {
        let m = WarpMap::from_json(r#"{"type": "exponential"}"#).unwrap();
        assert!((m.max_dw() - 2.0 * LN_2).abs() < 1e-12);
        let s = WarpMap::from_json(r#"{"type": "spline", "knots": [[0.5, 0.4]]}"#).unwrap();
        assert!((s.eval(0.5) - 0.4).abs() < 1e-15);
        assert!(WarpMap::from_json(r#"{"type": "nope"}"#).is_err());
    }

    #[test]
    fn inverse_examples() {
        let m = WarpMap::exponential();
        let inv = InverseMap::new(&m);
        assert_eq!(inv.inverse_eval(0.0).unwrap(), 0.0);
        assert!((inv.inverse_eval(2f64.sqrt() - 1.0).unwrap() - 0.5).abs() < 1e-14);
        let id = InverseMap::new(&WarpMap::identity());
        assert!((id.inverse_eval(0.77).unwrap() - 0.77).abs() < 1e-15);
    }

    #[test]
    fn spline_interpolates_knots() {
        let knots = [(0.2, 0.1), (0.45, 0.4), (0.8, 0.85)];
        let s = WarpMap::spline(&knots).unwrap();
        for &(x, w) in &knots {
            assert!((s.eval(x) - w).abs() < 1e-14);
        }
        assert!((s.jets(0.0, Side::Left, 0)[0] - s.eval(0.0)).abs() < 1e-14);
    }
}
