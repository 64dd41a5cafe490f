//! Index sets, domain specifications and feasibility conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WarpError};
use crate::warp_map::{Side, WarpMap};

/// The contiguous set `{-L, ..., N - L - 1}` with its continuous boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexSet {
    pub n: usize,
    pub l: usize,
    pub z_left: f64,
    pub z_right: f64,
    pub mu: f64,
}

impl IndexSet {
    pub fn new(n: usize, l: usize) -> Result<Self> {
        if n == 0 {
            return Err(WarpError::InvalidDomain("set size must be positive".into()));
        }
        if l >= n {
            return Err(WarpError::InvalidDomain(format!("offset L = {l} outside [0, {}]", n - 1)));
        }
        let half = (n % 2) as f64 / 2.0;
        let z_left = l as f64 + half;
        let z_right = n as f64 - l as f64 - half;
        let mu = (z_left.max(z_right) - n as f64 / 2.0) / (n as f64 / 2.0);
        Ok(IndexSet { n, l, z_left, z_right, mu })
    }

    /// `{-(n-1)/2, ..., (n-1)/2}` for odd `n`, `{-n/2, ..., n/2 - 1}` otherwise.
    pub fn symmetric(n: usize) -> Result<Self> {
        Self::new(n, n / 2)
    }

    pub fn first(&self) -> i64 {
        -(self.l as i64)
    }

    pub fn last(&self) -> i64 {
        self.n as i64 - self.l as i64 - 1
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + Clone {
        self.first()..=self.last()
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.first() && k <= self.last()
    }

    /// Position of index `k` inside the set.
    pub fn position(&self, k: i64) -> usize {
        (k + self.l as i64) as usize
    }

    pub fn is_symmetric(&self) -> bool {
        self.n % 2 == 1 && self.l == (self.n - 1) / 2
    }

    /// `max(z_left, z_right) = (1 + mu) N / 2`.
    pub fn outer(&self) -> f64 {
        (1.0 + self.mu) * self.n as f64 / 2.0
    }

    /// `min(z_left, z_right) = (1 - mu) N / 2`.
    pub fn inner(&self) -> f64 {
        (1.0 - self.mu) * self.n as f64 / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    TimeWarping,
    FrequencyWarping,
}

/// Input and output index sets for one operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub input: IndexSet,
    pub output: IndexSet,
    pub mode: Mode,
}

impl DomainSpec {
    /// Time-warping domain: odd sizes and symmetric sets.
    pub fn time_warping(n: usize, m: usize) -> Result<Self> {
        if n % 2 == 0 || m % 2 == 0 {
            return Err(WarpError::InvalidDomain(format!(
                "time warping needs odd N and M (got N = {n}, M = {m}); resample even inputs first"
            )));
        }
        Ok(DomainSpec { input: IndexSet::symmetric(n)?, output: IndexSet::symmetric(m)?, mode: Mode::TimeWarping })
    }

    pub fn frequency_warping(n: usize, l_n: usize, m: usize, l_m: usize) -> Result<Self> {
        Ok(DomainSpec { input: IndexSet::new(n, l_n)?, output: IndexSet::new(m, l_m)?, mode: Mode::FrequencyWarping })
    }

    pub fn n(&self) -> usize {
        self.input.n
    }

    pub fn m(&self) -> usize {
        self.output.n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityFeasibility {
    pub x: f64,
    pub dw_left: f64,
    pub dw_right: f64,
    /// `J` evaluated with the larger one-sided derivative.
    pub j: f64,
    pub converges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub n: usize,
    pub m: usize,
    pub l_n: usize,
    pub l_m: usize,
    pub mu_n: f64,
    pub mu_m: f64,
    pub max_dw: f64,
    /// `M / N`
    pub redundancy: f64,
    pub redundancy_ok: bool,
    /// `(M - L_M) / (N - L_N)`
    pub positive_ratio: f64,
    pub positive_ok: bool,
    /// `L_M / L_N`
    pub negative_ratio: f64,
    pub negative_ok: bool,
    /// `M (1 + mu_M) / (N max Dw (1 + mu_N))`
    pub mu_form_outer: f64,
    /// `M (1 - mu_M) / (N max Dw (1 - mu_N))`
    pub mu_form_inner: f64,
    pub mu_form_ok: bool,
    pub time_warping_shape_ok: bool,
    pub singularities: Vec<SingularityFeasibility>,
    pub swf_feasible: bool,
    pub saf_feasible: bool,
}

impl FeasibilityReport {
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if !self.time_warping_shape_ok {
            parts.push("time warping requires odd N, M and symmetric index sets".to_string());
        }
        if !self.redundancy_ok {
            parts.push(format!("M/N = {:.6} does not exceed max Dw = {:.6}", self.redundancy, self.max_dw));
        }
        if !self.positive_ok {
            parts.push(format!("(M-L_M)/(N-L_N) = {:.6} does not exceed max Dw", self.positive_ratio));
        }
        if !self.negative_ok {
            parts.push(format!("L_M/L_N = {:.6} does not exceed max Dw", self.negative_ratio));
        }
        for s in &self.singularities {
            if !s.converges {
                parts.push(format!("J = {:.6} <= 1 at singularity x = {}", s.j, s.x));
            }
        }
        if parts.is_empty() {
            "feasible".to_string()
        } else {
            parts.join("; ")
        }
    }

    pub fn failing_singularity(&self) -> Option<&SingularityFeasibility> {
        self.singularities.iter().find(|s| !s.converges)
    }
}

/// `J = M (1 - mu_M) / (N Dw (1 + mu_N))`.
pub fn j_value(spec: &DomainSpec, dw: f64) -> f64 {
    spec.m() as f64 * (1.0 - spec.output.mu) / (spec.n() as f64 * dw * (1.0 + spec.input.mu))
}

pub fn check_feasibility(map: &WarpMap, spec: &DomainSpec) -> FeasibilityReport {
    let (n, m) = (spec.n() as f64, spec.m() as f64);
    let (ln, lm) = (spec.input.l as f64, spec.output.l as f64);
    let max_dw = map.max_dw();
    let redundancy = m / n;
    let positive_ratio = (m - lm) / (n - ln);
    let negative_ratio = if ln == 0.0 { f64::INFINITY } else { lm / ln };
    let (mu_n, mu_m) = (spec.input.mu, spec.output.mu);
    let mu_form_outer = m * (1.0 + mu_m) / (n * max_dw * (1.0 + mu_n));
    let mu_form_inner = if mu_n == 1.0 { f64::INFINITY } else { m * (1.0 - mu_m) / (n * max_dw * (1.0 - mu_n)) };
    let tw_ok = spec.mode == Mode::FrequencyWarping || (spec.input.is_symmetric() && spec.output.is_symmetric());
    let singularities: Vec<SingularityFeasibility> = map
        .singularities()
        .iter()
        .map(|s| {
            let dl = map.dw(s.x, Side::Left);
            let dr = map.dw(s.x, Side::Right);
            let j = j_value(spec, dl.max(dr));
            SingularityFeasibility { x: s.x, dw_left: dl, dw_right: dr, j, converges: j > 1.0 }
        })
        .collect();
    // an unwarped map has no spectral spreading, so equality suffices
    let exceeds = |r: f64| if map.min_dw() == max_dw { r >= max_dw } else { r > max_dw };
    let redundancy_ok = exceeds(redundancy);
    let positive_ok = exceeds(positive_ratio);
    let negative_ok = exceeds(negative_ratio);
    let mu_form_ok = mu_form_outer > 1.0 && mu_form_inner > 1.0;
    let swf_feasible = tw_ok && redundancy_ok && positive_ok && negative_ok;
    let saf_feasible = swf_feasible && spec.output.mu < 1.0 && singularities.iter().all(|s| s.converges);
    FeasibilityReport {
        n: spec.n(),
        m: spec.m(),
        l_n: spec.input.l,
        l_m: spec.output.l,
        mu_n,
        mu_m,
        max_dw,
        redundancy,
        redundancy_ok,
        positive_ratio,
        positive_ok,
        negative_ratio,
        negative_ok,
        mu_form_outer,
        mu_form_inner,
        mu_form_ok,
        time_warping_shape_ok: tw_ok,
        singularities,
        swf_feasible,
        saf_feasible,
    }
}

/// Odd-size time-warping input set for a signal of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwDomain {
    pub set: IndexSet,
    /// True when the signal must be resampled from `n` to `n + 1` points.
    pub resampled: bool,
}

pub fn tw_domain(n: usize) -> Result<TwDomain> {
    if n == 0 {
        return Err(WarpError::InvalidDomain("N must be positive".into()));
    }
    if n % 2 == 1 {
        Ok(TwDomain { set: IndexSet::symmetric(n)?, resampled: false })
    } else {
        Ok(TwDomain { set: IndexSet::symmetric(n + 1)?, resampled: true })
    }
}

/// Resamples an even-length periodic signal to `n + 1` points by splitting the
/// Nyquist coefficient evenly over `+n/2` and `-n/2`.
pub fn resample_even_to_odd(signal: &[num_complex::Complex64]) -> Result<Vec<num_complex::Complex64>> {
    use num_complex::Complex64;
    use rustfft::FftPlanner;
    let n = signal.len();
    if n == 0 || n % 2 == 1 {
        return Err(WarpError::InvalidDomain("resampling expects an even, nonzero length".into()));
    }
    let mut spec: Vec<Complex64> = signal.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut spec);
    let h = n / 2;
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for k in 0..h {
        out[k] = spec[k];
    }
    out[h] = spec[h] * 0.5;
    out[h + 1] = spec[h] * 0.5;
    for k in 1..h {
        out[n + 1 - k] = spec[n - k];
    }
    planner.plan_fft_inverse(n + 1).process(&mut out);
    let scale = 1.0 / n as f64;
    Ok(out.into_iter().map(|v| v * scale).collect())
}

/// Positions implementing `k -> -k` on a symmetric set.
pub fn reverse_indexing(set: &IndexSet) -> Result<Vec<usize>> {
    if !set.is_symmetric() {
        return Err(WarpError::InvalidDomain("index reversal needs an odd symmetric set".into()));
    }
    Ok(set.indices().map(|k| set.position(-k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_set_examples() {
        let a = IndexSet::new(8, 4).unwrap();
        assert_eq!((a.z_left, a.z_right, a.mu), (4.0, 4.0, 0.0));
        let b = IndexSet::new(9, 4).unwrap();
        assert_eq!((b.z_left, b.z_right, b.mu), (4.5, 4.5, 0.0));
        let c = IndexSet::new(8, 0).unwrap();
        assert_eq!((c.z_left, c.z_right, c.mu), (0.0, 8.0, 1.0));
        assert!(IndexSet::new(8, 8).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let id = WarpMap::identity();
        let spec = DomainSpec::time_warping(33, 67).unwrap();
        let r = check_feasibility(&id, &spec);
        assert!(r.swf_feasible && r.saf_feasible);
        assert!(r.singularities.is_empty());

        let e = WarpMap::exponential();
        let r = check_feasibility(&e, &spec);
        assert!(r.redundancy_ok && r.saf_feasible);
        assert!((r.singularities[0].j - 67.0 / (33.0 * 2.0 * std::f64::consts::LN_2)).abs() < 1e-12);

        let r = check_feasibility(&e, &DomainSpec::time_warping(33, 35).unwrap());
        assert!(!r.redundancy_ok && !r.swf_feasible && !r.saf_feasible);
    }

    #[test]
    fn tw_domains() {
        let d = tw_domain(65).unwrap();
        assert_eq!((d.set.first(), d.set.last(), d.resampled), (-32, 32, false));
        let d = tw_domain(64).unwrap();
        assert_eq!((d.set.n, d.resampled), (65, true));
        let d = tw_domain(1).unwrap();
        assert_eq!((d.set.first(), d.set.last()), (0, 0));
        assert!(tw_domain(0).is_err());
    }

    #[test]
    fn reversal() {
        assert_eq!(reverse_indexing(&IndexSet::symmetric(3).unwrap()).unwrap(), vec![2, 1, 0]);
        assert_eq!(reverse_indexing(&IndexSet::symmetric(5).unwrap()).unwrap(), vec![4, 3, 2, 1, 0]);
        assert!(reverse_indexing(&IndexSet::new(5, 0).unwrap()).is_err());
    }

    #[test]
    fn resampling_preserves_band_limited_signal() {
        use num_complex::Complex64;
        let n = 16;
        let f = |t: f64| (2.0 * std::f64::consts::PI * 3.0 * t).cos() + 0.5;
        let sig: Vec<Complex64> = (0..n).map(|k| Complex64::new(f(k as f64 / n as f64), 0.0)).collect();
        let out = resample_even_to_odd(&sig).unwrap();
        for (k, v) in out.iter().enumerate() {
            assert!((v.re - f(k as f64 / (n + 1) as f64)).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }
}
