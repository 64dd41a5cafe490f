use nalgebra::DVector;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

use warpops::domain::{check_feasibility, DomainSpec};
use warpops::io::{decode_signal, encode_signal, Format};
use warpops::swf::{x_t, SwfOperator};
use warpops::symbolic::{antidifference, bernoulli, CoeffTable, KPoly, QPoly};
use warpops::warp_map::{InverseMap, WarpMap};

fn maps() -> Vec<WarpMap> {
    vec![
        WarpMap::exponential(),
        WarpMap::seam_cubic(0.4).unwrap(),
        WarpMap::atan_tan(1.7).unwrap(),
        WarpMap::spline(&[(0.25, 0.3), (0.6, 0.55)]).unwrap(),
        WarpMap::pwl_smooth(&[(0.5, 0.3)], 0.08).unwrap(),
    ]
}

fn signal(v: &[(f64, f64)]) -> Vec<Complex64> {
    v.iter().map(|&(a, b)| Complex64::new(a, b)).collect()
}

fn rat(p: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn periodic_wise(idx in 0usize..5, x in -3.0f64..3.0, k in -4i64..4) {
        let m = &maps()[idx];
        let lhs = m.eval(x + k as f64);
        let rhs = m.eval(x) + k as f64;
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn monotone(idx in 0usize..5, x in 0.0f64..1.0, h in 1e-6f64..0.3) {
        let m = &maps()[idx];
        prop_assert!(m.eval(x + h) > m.eval(x));
    }

    #[test]
    fn inverse_round_trip(idx in 0usize..5, x in 0.0f64..1.0) {
        let m = &maps()[idx];
        let inv = InverseMap::new(m);
        let back = inv.inverse_eval(m.eval(x)).unwrap();
        prop_assert!((back - x).abs() < 1e-12, "{} vs {}", back, x);
    }

    #[test]
    fn feasibility_monotone_in_m(idx in 0usize..5, half in 8usize..40) {
        let map = &maps()[idx];
        let n = 17;
        let m = 2 * half + 1;
        let a = check_feasibility(map, &DomainSpec::time_warping(n, m).unwrap());
        let b = check_feasibility(map, &DomainSpec::time_warping(n, m + 2).unwrap());
        prop_assert!(!a.saf_feasible || b.saf_feasible);
        prop_assert!(!a.swf_feasible || b.swf_feasible);
    }

    #[test]
    fn signal_round_trip(v in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 0..40), f in 0usize..3) {
        let x = signal(&v);
        let fmt = [Format::Binary, Format::Csv, Format::Json][f];
        prop_assert_eq!(decode_signal(&encode_signal(&x, fmt)).unwrap(), x);
    }

    #[test]
    fn antidifference_inverts_difference(c in prop::collection::vec(-20i64..20, 1..6)) {
        let p = KPoly(c.iter().map(|&v| QPoly::constant(rat(v))).collect());
        let g = antidifference(&p);
        let b = rat(0);
        for k in 0..8 {
            let kk = rat(k);
            let d = g.eval(&b, &(kk.clone() + rat(1))) - g.eval(&b, &kk);
            prop_assert_eq!(d, p.eval(&b, &kk));
        }
        prop_assert!(g.eval(&b, &rat(0)).is_zero());
    }

    #[test]
    fn odd_bernoulli_vanish(n in 1usize..32) {
        let b = bernoulli(2 * n + 1).unwrap();
        prop_assert!(b.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fast_adjoint_identity(
        x in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 17),
        y in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 41),
        b in 0.0f64..=1.0,
        idx in 0usize..5,
    ) {
        let map = &maps()[idx];
        let spec = DomainSpec::time_warping(17, 41).unwrap();
        prop_assume!(check_feasibility(map, &spec).swf_feasible);
        let op = SwfOperator::time(map, &spec, b).unwrap();
        let (x, y) = (signal(&x), signal(&y));
        let ax = op.apply(&x).unwrap();
        let aty = op.apply_adjoint(&y).unwrap();
        let lhs: Complex64 = ax.iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
        let rhs: Complex64 = x.iter().zip(&aty).map(|(a, b)| a * b.conj()).sum();
        prop_assert!((lhs - rhs).norm() < 1e-11);
        let dense = x_t(map, &spec, b).unwrap().data * DVector::from_column_slice(&x);
        let d = dense.iter().zip(&ax).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-11);
    }

    #[test]
    fn conjugate_exponent_shift(level in 0usize..7, k in -5i64..12) {
        let table = CoeffTable::shared();
        let lv = &table.levels[level];
        let (zero, one) = (rat(0), rat(1));
        for g in &lv.gammas {
            prop_assert_eq!(g.eval(&one, &rat(k)), g.eval(&zero, &rat(k + 1)));
        }
    }
}
