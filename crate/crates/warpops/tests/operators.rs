use nalgebra::DMatrix;
use num_complex::Complex64;

use warpops::domain::DomainSpec;
use warpops::dual::dual_w_f;
use warpops::oracle::{dense_a_extrapolated, dense_e, dense_in_band};
use warpops::saf::{build_w_f, build_w_f_with, build_w_t, dft_matrix, TailFactorization};
use warpops::swf::x_f;
use warpops::symbolic::KernelOptions;
use warpops::warp_map::WarpMap;

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[test]
fn identity_operator_is_embedding() {
    let spec = DomainSpec::time_warping(9, 9).unwrap();
    let w = build_w_f(&WarpMap::identity(), &spec, 0.5).unwrap().data;
    assert!(max_abs(&(w - DMatrix::identity(9, 9))) < 1e-14);
}

#[test]
fn saf_matches_oracle_on_smooth_seams() {
    let spec = DomainSpec::time_warping(17, 41).unwrap();
    for map in [WarpMap::seam_cubic(0.3).unwrap(), WarpMap::spline(&[(0.3, 0.35), (0.7, 0.66)]).unwrap()] {
        for b in [0.0, 0.5, 1.0] {
            let w = build_w_f(&map, &spec, b).unwrap().data;
            let d = max_abs(&(w - dense_in_band(&map, &spec, b)));
            assert!(d < 1e-9, "{} b={b}: {d:e}", map.name());
        }
    }
}

#[test]
fn saf_matches_oracle_with_jump_in_slope() {
    let map = WarpMap::exponential();
    let spec = DomainSpec::time_warping(17, 37).unwrap();
    let w = build_w_f(&map, &spec, 0.5).unwrap().data;
    let d = max_abs(&(w - dense_in_band(&map, &spec, 0.5)));
    assert!(d < 1e-9, "{d:e}");
}

#[test]
fn saf_matches_oracle_on_asymmetric_frequency_sets() {
    let map = WarpMap::seam_cubic(0.3).unwrap();
    let spec = DomainSpec::frequency_warping(15, 5, 41, 13).unwrap();
    let w = build_w_f(&map, &spec, 0.5).unwrap().data;
    let d = max_abs(&(w - dense_in_band(&map, &spec, 0.5)));
    assert!(d < 1e-9, "{d:e}");
}

#[test]
fn swf_minus_oracle_is_the_aliasing() {
    let map = WarpMap::exponential();
    let spec = DomainSpec::time_warping(13, 31).unwrap();
    let xf = x_f(&map, &spec, 0.5).unwrap().data;
    let a_oracle = dense_a_extrapolated(&map, &spec, 0.5, 8).unwrap();
    let w = dense_in_band(&map, &spec, 0.5);
    assert!(max_abs(&(&xf - &w - &a_oracle)) < 1e-7);
    let f = TailFactorization::new(&map, &spec, 0.5, &KernelOptions::default()).unwrap();
    assert!(max_abs(&(f.aliasing() - a_oracle)) < 1e-7);
}

#[test]
fn factored_tails_match_oracle_rows() {
    let map = WarpMap::seam_cubic(0.3).unwrap();
    let spec = DomainSpec::time_warping(11, 29).unwrap();
    let f = TailFactorization::new(&map, &spec, 0.5, &KernelOptions::default()).unwrap();
    let fac = f.tails(2).unwrap();
    let ora = dense_e(&map, &spec, 0.5, 2);
    assert_eq!(fac.rows, ora.rows);
    let d = max_abs(&(fac.data - ora.data));
    assert!(d < 1e-10, "{d:e}");
}

#[test]
fn time_operator_is_conjugated_frequency_operator() {
    let map = WarpMap::exponential();
    let spec = DomainSpec::time_warping(15, 35).unwrap();
    let wf = build_w_f(&map, &spec, 0.5).unwrap().data;
    let wt = build_w_t(&map, &spec, 0.5).unwrap().data;
    let fm = dft_matrix(&spec.output);
    let fn_ = dft_matrix(&spec.input);
    let want = fm.adjoint() * wf.map(|v| v.conj()) * fn_;
    assert!(max_abs(&(wt - want)) < 1e-12);
}

#[test]
fn dual_inverts_frequency_operator() {
    let map = WarpMap::spline(&[(0.3, 0.35), (0.7, 0.66)]).unwrap();
    let spec = DomainSpec::time_warping(17, 41).unwrap();
    for b in [0.0, 0.5] {
        let w = build_w_f(&map, &spec, b).unwrap().data;
        let d = dual_w_f(&map, &spec, b).unwrap().data;
        let r = d.adjoint() * w - DMatrix::identity(17, 17);
        assert!(max_abs(&r) < 1e-11, "b={b}: {:e}", max_abs(&r));
    }
}

#[test]
fn tighter_kernel_improves_oracle_agreement() {
    let map = WarpMap::exponential();
    let spec = DomainSpec::time_warping(33, 67).unwrap();
    let oracle = dense_in_band(&map, &spec, 0.5);
    let err = |r| {
        let opts = KernelOptions { r: Some(r), ..Default::default() };
        max_abs(&(build_w_f_with(&map, &spec, 0.5, &opts).unwrap().op.data - &oracle))
    };
    let (e16, e40) = (err(16), err(40));
    assert!(e40 < 1e-8 && e40 < e16 / 100.0, "{e16:e} {e40:e}");
}
