//! Exact derivative-expansion coefficients and the singularity kernel.
//!
//! `D^k [exp(a w) (Dw)^b] = exp(a w) sum_l alpha_{k,l} (a Dw)^{k-l}` with
//! `alpha_{k,l} = sum_n beta_{l,n} gamma_{l,n}(k)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::domain::{j_value, DomainSpec};
use crate::error::{Result, WarpError};
use crate::warp_map::{Side, WarpMap};

/// Default number of expansion levels.
pub const DEFAULT_MAX_LEVEL: usize = 12;
/// Largest admissible kernel size.
pub const MAX_KERNEL_SIZE: usize = 64;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Bernoulli number `B_n` with `B_1 = -1/2`.
pub fn bernoulli(n: usize) -> Result<BigRational> {
    if n > 64 {
        return Err(WarpError::OutOfRange(format!("Bernoulli index {n} > 64")));
    }
    static TABLE: OnceLock<Vec<BigRational>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut b: Vec<BigRational> = Vec::with_capacity(65);
        b.push(BigRational::one());
        for m in 1..=64usize {
            // sum_{j<=m} C(m+1, j) B_j = 0
            let mut s = BigRational::zero();
            let mut c = BigInt::one();
            for (j, bj) in b.iter().enumerate() {
                s += BigRational::from_integer(c.clone()) * bj;
                c = c * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
            }
            b.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
        }
        b
    });
    Ok(t[n].clone())
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for j in 0..k {
        c = c * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    c
}

/// Polynomial in `b` with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QPoly(pub Vec<BigRational>);

impl QPoly {
    pub fn zero() -> Self {
        QPoly(vec![])
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = QPoly(vec![c]);
        p.trim();
        p
    }

    /// `c0 + c1 b`
    pub fn linear(c0: BigRational, c1: BigRational) -> Self {
        let mut p = QPoly(vec![c0, c1]);
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add_assign(&mut self, o: &QPoly) {
        if o.0.len() > self.0.len() {
            self.0.resize(o.0.len(), BigRational::zero());
        }
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a += b;
        }
        self.trim();
    }

    pub fn mul(&self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        let mut p = QPoly(out);
        p.trim();
        p
    }

    pub fn scale(&self, s: &BigRational) -> QPoly {
        let mut p = QPoly(self.0.iter().map(|c| c * s).collect());
        p.trim();
        p
    }

    pub fn eval(&self, b: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * b + c)
    }
}

/// Polynomial in `k` whose coefficients are polynomials in `b`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KPoly(pub Vec<QPoly>);

impl KPoly {
    fn trim(&mut self) {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
    }

    pub fn one() -> Self {
        KPoly(vec![QPoly::constant(BigRational::one())])
    }

    /// Degree in `k`; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn add_assign(&mut self, o: &KPoly) {
        if o.0.len() > self.0.len() {
            self.0.resize(o.0.len(), QPoly::zero());
        }
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            a.add_assign(b);
        }
        self.trim();
    }

    pub fn mul(&self, o: &KPoly) -> KPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return KPoly(vec![]);
        }
        let mut out = vec![QPoly::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j].add_assign(&a.mul(b));
            }
        }
        let mut p = KPoly(out);
        p.trim();
        p
    }

    /// Specializes `b`, returning coefficients in `k`.
    pub fn at_b(&self, b: &BigRational) -> Vec<BigRational> {
        self.0.iter().map(|c| c.eval(b)).collect()
    }

    pub fn eval(&self, b: &BigRational, k: &BigRational) -> BigRational {
        self.at_b(b).iter().rev().fold(BigRational::zero(), |acc, c| acc * k + c)
    }

    /// Human-readable form such as `1/2 k^2 + (b - 1/2) k`.
    pub fn pretty(&self) -> String {
        let mut terms: Vec<(bool, String)> = Vec::new();
        for (deg, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let kpart = match deg {
                0 => String::new(),
                1 => "k".to_string(),
                d => format!("k^{d}"),
            };
            let nz: Vec<(usize, &BigRational)> = c.0.iter().enumerate().filter(|(_, v)| !v.is_zero()).collect();
            let (neg, body) = if nz.len() == 1 {
                let (bd, v) = nz[0];
                let bpart = match bd {
                    0 => String::new(),
                    1 => "b".to_string(),
                    d => format!("b^{d}"),
                };
                let mag = v.abs();
                let mut s = String::new();
                if !mag.is_one() || (bpart.is_empty() && kpart.is_empty()) {
                    s.push_str(&mag.to_string());
                }
                for part in [bpart, kpart.clone()] {
                    if !part.is_empty() {
                        if !s.is_empty() {
                            s.push(' ');
                        }
                        s.push_str(&part);
                    }
                }
                (v.is_negative(), s)
            } else {
                let inner = QPoly(c.0.clone()).pretty_b();
                let s = if kpart.is_empty() { inner } else { format!("({inner}) {kpart}") };
                (false, s)
            };
            terms.push((neg, body));
        }
        if terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (neg, body)) in terms.into_iter().enumerate() {
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }
}

impl QPoly {
    fn pretty_b(&self) -> String {
        let mut out = String::new();
        let mut first = true;
        for (deg, v) in self.0.iter().enumerate().rev() {
            if v.is_zero() {
                continue;
            }
            let bpart = match deg {
                0 => String::new(),
                1 => "b".to_string(),
                d => format!("b^{d}"),
            };
            let mag = v.abs();
            let body = if bpart.is_empty() {
                mag.to_string()
            } else if mag.is_one() {
                bpart
            } else {
                format!("{mag} {bpart}")
            };
            if first {
                if v.is_negative() {
                    out.push('-');
                }
                first = false;
            } else {
                out.push_str(if v.is_negative() { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        if out.is_empty() {
            "0".into()
        } else {
            out
        }
    }
}

/// Discrete antidifference: `q(k) = sum_{j<k} p(j)`, so `q(0) = 0`.
pub fn antidifference(p: &KPoly) -> KPoly {
    let mut out: Vec<QPoly> = vec![QPoly::zero(); p.0.len() + 1];
    for (i, c) in p.0.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        // sum_{j<k} j^i = 1/(i+1) sum_t C(i+1, t) B_t k^{i+1-t}
        let inv = rat(1, (i + 1) as i64);
        for t in 0..=i {
            let coef = BigRational::from_integer(binomial(i + 1, t)) * bernoulli(t).expect("index below 65") * &inv;
            if coef.is_zero() {
                continue;
            }
            out[i + 1 - t].add_assign(&c.scale(&coef));
        }
    }
    let mut q = KPoly(out);
    q.trim();
    q
}

/// One expansion level.
#[derive(Debug, Clone, Serialize)]
pub struct Level {
    pub l: usize,
    /// Exponent sequences `p_{l,n,m}`, `m = 1..=l+1`, in lexicographic order.
    pub sequences: Vec<Vec<i64>>,
    #[serde(skip)]
    pub gammas: Vec<KPoly>,
    /// Expanded index data leading to this level (empty for level 0):
    /// source sequence of the previous level for each expanded item.
    pub psi: Vec<usize>,
    /// Generator used by each expanded item.
    pub phi: Vec<usize>,
    /// Target sequence of each expanded item.
    pub xi: Vec<usize>,
    /// Expanded items contributing to each target sequence.
    pub upsilon: Vec<Vec<usize>>,
}

/// Generators of a sequence: `1` plus every `m > 1` with a positive exponent.
pub fn generators(p: &[i64]) -> Vec<usize> {
    let mut g = vec![1];
    g.extend((2..=p.len()).filter(|&m| p[m - 1] > 0));
    g
}

/// Computes level `l + 1` from level `l`.
pub fn next_level(prev: &Level) -> Level {
    let l = prev.l;
    let mut psi = Vec::new();
    let mut phi = Vec::new();
    let mut produced: Vec<Vec<i64>> = Vec::new();
    let mut factors: Vec<KPoly> = Vec::new();
    for (n, p) in prev.sequences.iter().enumerate() {
        for q in generators(p) {
            let mut np = p.clone();
            np.resize(l + 2, 0);
            np[q - 1] -= 1;
            np[q] += 1;
            // r(k) = p_1 + b + k - l for q = 1, p_q otherwise
            let r = if q == 1 {
                KPoly(vec![
                    QPoly::linear(rat_int(p[0] - l as i64), BigRational::one()),
                    QPoly::constant(BigRational::one()),
                ])
            } else {
                KPoly(vec![QPoly::constant(rat_int(p[q - 1]))])
            };
            psi.push(n);
            phi.push(q);
            produced.push(np);
            factors.push(r);
        }
    }
    let mut canon: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, s) in produced.iter().enumerate() {
        canon.entry(s.clone()).or_default().push(i);
    }
    let sequences: Vec<Vec<i64>> = canon.keys().cloned().collect();
    let index: HashMap<&Vec<i64>, usize> = sequences.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let xi: Vec<usize> = produced.iter().map(|s| index[s]).collect();
    let upsilon: Vec<Vec<usize>> = canon.values().cloned().collect();
    let gammas = upsilon
        .iter()
        .map(|items| {
            let mut diff = KPoly(vec![]);
            for &i in items {
                diff.add_assign(&factors[i].mul(&prev.gammas[psi[i]]));
            }
            antidifference(&diff)
        })
        .collect();
    Level { l: l + 1, sequences, gammas, psi, phi, xi, upsilon }
}

/// Exact coefficient tables up to a maximum level.
#[derive(Debug)]
pub struct CoeffTable {
    pub levels: Vec<Level>,
    specialized: Mutex<HashMap<u64, std::sync::Arc<Vec<Vec<Vec<BigRational>>>>>>,
}

impl CoeffTable {
    pub fn new(max_level: usize) -> Self {
        let mut levels = vec![Level {
            l: 0,
            sequences: vec![vec![0]],
            gammas: vec![KPoly::one()],
            psi: vec![],
            phi: vec![],
            xi: vec![],
            upsilon: vec![],
        }];
        for _ in 0..max_level {
            let next = next_level(levels.last().unwrap());
            levels.push(next);
        }
        CoeffTable { levels, specialized: Mutex::new(HashMap::new()) }
    }

    /// Shared table with the default number of levels.
    pub fn shared() -> &'static CoeffTable {
        static T: OnceLock<CoeffTable> = OnceLock::new();
        T.get_or_init(|| CoeffTable::new(DEFAULT_MAX_LEVEL))
    }

    /// Shared table with at least `max_level` levels.
    pub fn shared_with(max_level: usize) -> &'static CoeffTable {
        if max_level <= DEFAULT_MAX_LEVEL {
            return Self::shared();
        }
        static EXTRA: OnceLock<Mutex<HashMap<usize, &'static CoeffTable>>> = OnceLock::new();
        let m = EXTRA.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = m.lock().unwrap();
        g.entry(max_level).or_insert_with(|| Box::leak(Box::new(CoeffTable::new(max_level))))
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// `gamma_{l,n}` specialized at `b` (exact conversion of the float), coefficients in `k`.
    fn at_b(&self, b: f64) -> std::sync::Arc<Vec<Vec<Vec<BigRational>>>> {
        let key = b.to_bits();
        if let Some(v) = self.specialized.lock().unwrap().get(&key) {
            return v.clone();
        }
        let br = BigRational::from_float(b).expect("finite exponent");
        let v: Vec<Vec<Vec<BigRational>>> =
            self.levels.iter().map(|lv| lv.gammas.iter().map(|g| g.at_b(&br)).collect()).collect();
        let v = std::sync::Arc::new(v);
        self.specialized.lock().unwrap().insert(key, v.clone());
        v
    }

    /// `gamma_{l,n}(k)` at float `b`, computed exactly and rounded once.
    pub fn gamma_value(&self, l: usize, n: usize, b: f64, k: usize) -> f64 {
        let t = self.at_b(b);
        eval_exact(&t[l][n], k)
    }

    /// All `gamma_{l,n}(k)` for `k < kmax` at float `b`: indexed `[l][n][k]`.
    pub fn gamma_grid(&self, b: f64, kmax: usize) -> Vec<Vec<Vec<f64>>> {
        let t = self.at_b(b);
        t.iter()
            .map(|lv| lv.iter().map(|g| (0..kmax).map(|k| eval_exact(g, k)).collect()).collect())
            .collect()
    }
}

fn eval_exact(c: &[BigRational], k: usize) -> f64 {
    let kk = rat_int(k as i64);
    let v = c.iter().rev().fold(BigRational::zero(), |acc, x| acc * &kk + x);
    v.to_f64().unwrap_or(f64::NAN)
}

/// `beta_{l,n} = (Dw)^{b + p_1} prod_{m >= 2} (D^m w)^{p_m}` from one-sided jets `jets[m] = D^m w`.
pub fn beta_value(p: &[i64], jets: &[f64], b: f64) -> f64 {
    let mut v = jets[1].powf(b + p[0] as f64);
    for (m, &e) in p.iter().enumerate().skip(1) {
        if e != 0 {
            v *= jets[m + 1].powi(e as i32);
        }
    }
    v
}

/// `alpha_{k,l}` at one side of `x`.
pub fn alpha_eval(table: &CoeffTable, map: &WarpMap, x: f64, side: Side, k: usize, l: usize, b: f64) -> Result<f64> {
    if l > table.max_level() {
        return Err(WarpError::OutOfRange(format!("level {l} above the table maximum {}", table.max_level())));
    }
    let jets = map.jets(x, side, l + 1);
    let lv = &table.levels[l];
    Ok(lv
        .sequences
        .iter()
        .enumerate()
        .map(|(n, p)| beta_value(p, &jets, b) * table.gamma_value(l, n, b, k))
        .sum())
}

/// `alpha_{k,l}` for all `k < kmax`, `l <= min(k, max_level)`: indexed `[k][l]`.
pub fn alpha_table(table: &CoeffTable, jets: &[f64], b: f64, kmax: usize) -> Vec<Vec<f64>> {
    let grid = table.gamma_grid(b, kmax);
    let lmax = table.max_level();
    let betas: Vec<Vec<f64>> = table
        .levels
        .iter()
        .map(|lv| lv.sequences.iter().map(|p| beta_value(p, jets, b)).collect())
        .collect();
    (0..kmax)
        .map(|k| {
            (0..=k.min(lmax))
                .map(|l| betas[l].iter().zip(&grid[l]).map(|(bt, g)| bt * g[k]).sum())
                .collect()
        })
        .collect()
}

/// Kernel options shared by the aliasing and dual constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Fixed kernel size; chosen from `J` and `kernel_tol` when `None`.
    pub r: Option<usize>,
    pub kernel_tol: f64,
    pub max_level: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { r: None, kernel_tol: 1e-12, max_level: DEFAULT_MAX_LEVEL }
    }
}

impl KernelOptions {
    /// Smallest `R` with `J^{-R} < kernel_tol`, capped at [`MAX_KERNEL_SIZE`].
    pub fn size_for(&self, j: f64) -> usize {
        if let Some(r) = self.r {
            return r.clamp(1, MAX_KERNEL_SIZE);
        }
        if j <= 1.0 {
            return MAX_KERNEL_SIZE;
        }
        let mut r = 1;
        while r < MAX_KERNEL_SIZE && j.powi(-(r as i32)) >= self.kernel_tol {
            r += 1;
        }
        r
    }
}

/// Lower-triangular kernel of one singularity.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub x: f64,
    /// `alpha_{i,i-k}(x^+) (Dw(x^+)/Dw_ref)^k`
    pub k_plus: DMatrix<f64>,
    /// `alpha_{i,i-k}(x^-) (Dw(x^-)/Dw_ref)^k`
    pub k_minus: DMatrix<f64>,
    /// `J^{-k} (-j pi M (1 - mu_M))^{k-i-1}` with `J` taken at `Dw_ref`.
    pub j: DMatrix<Complex64>,
    pub s: DMatrix<Complex64>,
    /// `J` at the larger one-sided derivative `Dw_ref`.
    pub j_value: f64,
    pub r: usize,
}

/// Builds `S = (K+ - K-) .* J` for the singularity at `x`.
///
/// With a jump in `Dw` the two sides decay at different rates; the side ratio
/// `(Dw(x^+-)/Dw_ref)^k` is folded into `K+-` so that one `J` serves both.
pub fn build_kernel_s(
    table: &CoeffTable,
    map: &WarpMap,
    x: f64,
    spec: &DomainSpec,
    b: f64,
    r: usize,
) -> Result<KernelMatrix> {
    let lmax = table.max_level();
    let jp = map.jets(x, Side::Right, lmax + 1);
    let jm = map.jets(x, Side::Left, lmax + 1);
    let dw_ref = jp[1].max(jm[1]);
    let jv = j_value(spec, dw_ref);
    if jv <= 1.0 {
        return Err(WarpError::Infeasible(Box::new(crate::domain::check_feasibility(map, spec))));
    }
    let ap = alpha_table(table, &jp, b, r);
    let am = alpha_table(table, &jm, b, r);
    let (rp, rm) = (jp[1] / dw_ref, jm[1] / dw_ref);
    let base = Complex64::new(0.0, -std::f64::consts::PI * spec.m() as f64 * (1.0 - spec.output.mu));
    let mut k_plus = DMatrix::zeros(r, r);
    let mut k_minus = DMatrix::zeros(r, r);
    let mut jm_ = DMatrix::from_element(r, r, Complex64::new(0.0, 0.0));
    for i in 0..r {
        for k in 0..=i {
            let l = i - k;
            if l <= lmax {
                k_plus[(i, k)] = ap[i][l] * rp.powi(k as i32);
                k_minus[(i, k)] = am[i][l] * rm.powi(k as i32);
            }
            jm_[(i, k)] = base.powi(k as i32 - i as i32 - 1) * jv.powi(-(k as i32));
        }
    }
    let s = DMatrix::from_fn(r, r, |i, k| jm_[(i, k)] * (k_plus[(i, k)] - k_minus[(i, k)]));
    Ok(KernelMatrix { x, k_plus, k_minus, j: jm_, s, j_value: jv, r })
}

/// JSON-ready dump of a level range.
pub fn dump_levels(table: &CoeffTable, max_level: usize, b: Option<&BigRational>) -> serde_json::Value {
    let mut levels = Vec::new();
    for lv in table.levels.iter().take(max_level + 1) {
        let entries: Vec<serde_json::Value> = lv
            .sequences
            .iter()
            .zip(&lv.gammas)
            .map(|(p, g)| {
                let poly = match b {
                    None => g.clone(),
                    Some(bv) => KPoly(g.at_b(bv).into_iter().map(QPoly::constant).collect()),
                };
                let coeffs: Vec<String> = match b {
                    None => g.0.iter().map(|c| QPoly(c.0.clone()).pretty_b()).collect(),
                    Some(bv) => g.at_b(bv).iter().map(|c| c.to_string()).collect(),
                };
                serde_json::json!({
                    "exponents": p,
                    "beta": beta_label(p),
                    "gamma": poly.pretty(),
                    "gamma_coefficients": coeffs,
                })
            })
            .collect();
        levels.push(serde_json::json!({ "level": lv.l, "terms": entries }));
    }
    serde_json::json!({ "levels": levels })
}

fn beta_label(p: &[i64]) -> String {
    let mut s = String::new();
    let e1 = p[0];
    if e1 == 0 {
        s.push_str("(Dw)^b");
    } else {
        let _ = write!(s, "(Dw)^(b{}{})", if e1 < 0 { "-" } else { "+" }, e1.abs());
    }
    for (m, &e) in p.iter().enumerate().skip(1) {
        if e > 0 {
            let _ = write!(s, " (D^{}w)^{}", m + 1, e);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0).unwrap(), rat(1, 1));
        assert_eq!(bernoulli(1).unwrap(), rat(-1, 2));
        assert_eq!(bernoulli(2).unwrap(), rat(1, 6));
        assert_eq!(bernoulli(3).unwrap(), rat(0, 1));
        assert_eq!(bernoulli(12).unwrap(), rat(-691, 2730));
        assert!(bernoulli(65).is_err());
    }

    #[test]
    fn antidifference_examples() {
        // [b, 1] -> [0, b - 1/2, 1/2]
        let p = KPoly(vec![QPoly::linear(rat(0, 1), rat(1, 1)), QPoly::constant(rat(1, 1))]);
        let q = antidifference(&p);
        assert_eq!(q.0.len(), 3);
        assert!(q.0[0].is_zero());
        assert_eq!(q.0[1], QPoly::linear(rat(-1, 2), rat(1, 1)));
        assert_eq!(q.0[2], QPoly::constant(rat(1, 2)));
        let one = antidifference(&KPoly::one());
        assert_eq!(one.0[1], QPoly::constant(rat(1, 1)));
        let k2 = KPoly(vec![QPoly::zero(), QPoly::zero(), QPoly::constant(rat(1, 1))]);
        let s = antidifference(&k2);
        let zero = rat(0, 1);
        for k in 0..=10i64 {
            let direct: i64 = (0..k).map(|j| j * j).sum();
            assert_eq!(s.eval(&zero, &rat_int(k)), rat_int(direct));
        }
    }

    #[test]
    fn first_levels() {
        let t = CoeffTable::new(5);
        assert_eq!(t.levels[1].sequences, vec![vec![-1, 1]]);
        assert_eq!(t.levels[2].sequences, vec![vec![-2, 2, 0], vec![-1, 0, 1]]);
        let counts: Vec<usize> = t.levels.iter().map(|l| l.sequences.len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 3, 5, 7]);
        assert_eq!(t.levels[1].gammas[0].pretty(), "1/2 k^2 + (b - 1/2) k");
        let g22 = t.levels[2].gammas[1].at_b(&rat(0, 1));
        assert_eq!(g22, vec![rat(0, 1), rat(1, 3), rat(-1, 2), rat(1, 6)]);
    }

    #[test]
    fn kernel_size_rule() {
        let o = KernelOptions::default();
        assert_eq!(o.size_for(10.0), 13);
        assert_eq!(o.size_for(1.01), MAX_KERNEL_SIZE);
        let f = KernelOptions { r: Some(24), ..o };
        assert_eq!(f.size_for(1.5), 24);
    }

    #[test]
    fn identity_kernel_vanishes() {
        let t = CoeffTable::shared();
        let id = WarpMap::identity();
        let spec = DomainSpec::time_warping(9, 21).unwrap();
        let k = build_kernel_s(t, &id, 0.0, &spec, 0.5, 8).unwrap();
        assert!(k.s.iter().all(|v| v.norm() == 0.0));
    }
}
