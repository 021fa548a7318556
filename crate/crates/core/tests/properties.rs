use proptest::prelude::*;
use sicforge_core::etf_search::{frame_error, EtfSpec};
use sicforge_core::heisenberg::{hesse_fiducial, overlaps, Basis, DisplacementIndex, FiducialVector, WeylHeisenberg};
use sicforge_core::hpnum::{dft, root_of_unity, ComplexVector, Direction, PrecComplex, PrecReal, Precision};
use sicforge_core::quadfield::{dimension_form, fundamental_unit, magical_D, split_dimension, QuadElem};
use sicforge_core::symplectic::{covariance_residual, weil_unitary, SymplecticMatrix};
use sicforge_core::verifier::verify_sic;

fn prec(digits: u32) -> Precision {
    Precision::new(digits).unwrap()
}

fn vector(pairs: &[(f64, f64)], digits: u32) -> ComplexVector {
    ComplexVector::from_f64_pairs(pairs, prec(digits)).unwrap()
}

fn pairs(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
}

fn sl2(d: u64) -> Vec<SymplecticMatrix> {
    SymplecticMatrix::enumerate(d).into_iter().filter(|m| m.det() == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_is_unitary(v in pairs(2..17)) {
        let x = vector(&v, 40);
        let y = dft(&x, Direction::Forward);
        prop_assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-35);
        let back = dft(&y, Direction::Inverse);
        prop_assert!(back.max_abs_diff(&x) < 1e-35);
    }

    #[test]
    fn roots_of_unity_multiply(n in 1u64..50, a in -100i64..100, b in -100i64..100) {
        let p = prec(50);
        let lhs = &root_of_unity(n, a, p) * &root_of_unity(n, b, p);
        prop_assert!((&lhs - &root_of_unity(n, a + b, p)).abs() < 1e-45);
    }

    #[test]
    fn reversed_displacement_is_adjoint(d in 2u64..9, i in 0u64..9, j in 0u64..9, v in pairs(9..10)) {
        let p = prec(40);
        let x = vector(&v[..d as usize], 40).normalized();
        let wh = WeylHeisenberg::new(d, p).unwrap();
        let q = DisplacementIndex::new(i as i64, j as i64, d);
        let fwd = wh.apply(q.neg(), &x);
        let adj = wh.apply_adjoint(q, &x);
        let a = wh.overlap(q.neg(), &x);
        let b = wh.overlap(q, &x).conj();
        if d % 2 == 1 {
            prop_assert!(fwd.max_abs_diff(&adj) < 1e-35);
            prop_assert!((&a - &b).abs() < 1e-35);
        } else {
            // indices reduced mod d: equal up to sign
            let flipped = adj.scale(&PrecComplex::from_f64(-1.0, 0.0, p));
            prop_assert!(fwd.max_abs_diff(&adj) < 1e-35 || fwd.max_abs_diff(&flipped) < 1e-35);
            prop_assert!((&a - &b).abs() < 1e-35 || (&a + &b).abs() < 1e-35);
        }
    }

    #[test]
    fn frame_error_is_unitarily_invariant(v in pairs(12..13), k in 0usize..48) {
        let p = prec(40);
        let spec = EtfSpec::new(3, 4).unwrap();
        let vs: Vec<ComplexVector> = v.chunks(3).map(|c| vector(c, 40).normalized()).collect();
        let f = sl2(3)[k % 24];
        let u = weil_unitary(&f, p).unwrap();
        let moved: Vec<ComplexVector> = vs.iter().map(|x| u.apply(&dft(x, Direction::Forward))).collect();
        let a = frame_error(&vs, &spec).unwrap();
        let b = frame_error(&moved, &spec).unwrap();
        prop_assert!((&a - &b).abs() < 1e-30);
    }

    #[test]
    fn verdict_is_invariant_under_displacement_and_phase(i in 0i64..3, j in 0i64..3, t in 0.0f64..6.3) {
        let p = prec(60);
        let fid = hesse_fiducial(p);
        let wh = WeylHeisenberg::new(3, p).unwrap();
        let phase = PrecComplex::from_polar(&PrecReal::one(p), &PrecReal::from_f64(t, p));
        let v = wh.apply(DisplacementIndex::new(i, j, 3), fid.entries()).scale(&phase);
        let cert = verify_sic(&FiducialVector::new(v, Basis::Standard), 40).unwrap();
        prop_assert!(cert.verdict.is_pass());
    }

    #[test]
    fn overlap_moduli_are_phase_invariant(v in pairs(5..6), t in 0.0f64..6.3) {
        let p = prec(40);
        let x = FiducialVector::normalized(vector(&v, 40), Basis::Standard);
        let phase = PrecComplex::from_polar(&PrecReal::one(p), &PrecReal::from_f64(t, p));
        let y = FiducialVector::normalized(x.entries().scale(&phase), Basis::Standard);
        let a = overlaps(&x).unwrap();
        let b = overlaps(&y).unwrap();
        for (q, z) in a.iter() {
            prop_assert!((&z.norm_sqr() - &b.get(q).norm_sqr()).abs() < 1e-35);
        }
    }

    #[test]
    fn prime_factors_of_n2_plus_3(n in 1u64..=2000) {
        let form = dimension_form(n * n + 3).unwrap();
        prop_assert!(form.primes_one_mod_three);
    }

    #[test]
    fn unit_norm_is_multiplicative(n in 1u64..=53, k in 1u32..6) {
        let fu = fundamental_unit(magical_D(n * n + 3).unwrap()).unwrap();
        let e = fu.unit.pow(k);
        let expected = if fu.norm < 0 && k % 2 == 1 { -1 } else { 1 };
        prop_assert_eq!(e.norm(), num_rational::BigRational::from_integer(expected.into()));
        prop_assert!(e.is_unit());
    }

    #[test]
    fn split_factors_multiply_to_d(n in 1u64..=53) {
        let d = n * n + 3;
        let s = split_dimension(d).unwrap();
        prop_assert!(s.del.generator.is_integral() && s.del_bar.generator.is_integral());
        prop_assert_eq!(s.product(), QuadElem::from_ints(d as i64, 0, s.D).unwrap());
    }
}

fn covariance_holds(d: u64, k: usize) {
    let p = prec(60);
    let group = sl2(d);
    let f = group[k % group.len()];
    let u = weil_unitary(&f, p).unwrap();
    let r = covariance_residual(&f, &u).unwrap();
    assert!(r < 1e-30, "d = {d}, F = {f}: residual {}", r.to_f64());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weil_covariance_d5(k in 0usize..10_000) {
        covariance_holds(5, k);
    }

    #[test]
    fn weil_covariance_d7(k in 0usize..10_000) {
        covariance_holds(7, k);
    }

    #[test]
    fn weil_covariance_d11(k in 0usize..10_000) {
        covariance_holds(11, k);
    }
}
