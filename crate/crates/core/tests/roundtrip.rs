use sicforge_core::fingerprint::{
    extract_phases, fingerprint, orbit_structure, to_almost_flat, FingerprintOptions,
};
use sicforge_core::heisenberg::{Basis, FiducialVector};
use sicforge_core::hpnum::{dft, ComplexVector, Direction, PrecReal};
use sicforge_core::stark_construct::{construct_search, roundtrip, ConstructOptions, Ordering, RoundtripOptions};
use sicforge_core::verifier::verify_sic;

#[test]
fn seven_dimensional_roundtrip() {
    let rep = roundtrip(7, &RoundtripOptions::default()).unwrap();
    let fp = &rep.fingerprint;
    assert!(fp.flatness_residual < 1e-20 && fp.ratio_residual < 1e-20);
    assert!(fp.max_phase_deviation < 1e-25);
    assert_eq!((rep.ell, fp.independent_count), (1, 2));
    assert!(rep.count_consistent());
    assert_eq!(fp.degree, Some(4));
    assert!(fp.is_unit);
    assert!(rep.construction.passed());
    assert!(rep.construction.certificate.worst_deviation() < 1e-20);
    assert!(rep.passed());
}

#[test]
fn nineteen_dimensional_roundtrip() {
    let rep = roundtrip(19, &RoundtripOptions::default()).unwrap();
    let fp = &rep.fingerprint;
    assert_eq!((rep.ell, fp.independent_count), (3, 2));
    let mp: Vec<i64> = fp.min_poly.as_ref().unwrap().iter().map(|c| c.try_into().unwrap()).collect();
    assert_eq!(mp, vec![1, -5, 7, -5, 1]);
    assert!(rep.passed());
}

#[test]
fn fingerprint_invariants_at_seven() {
    let rep = roundtrip(7, &RoundtripOptions::default()).unwrap();
    let fid = &rep.polished;
    let p = fid.precision();
    let afv = to_almost_flat(fid).unwrap();
    let phases = extract_phases(&afv, &p.tolerance(20)).unwrap();

    // product over a full theta-orbit has modulus one
    let mut prod = phases.get(1).clone();
    for j in 2..7 {
        prod = &prod * phases.get(j);
    }
    assert!((&prod.abs() - &PrecReal::one(p)).abs() < 1e-25);

    // complex conjugation sends u_j to conj(u_{-j})
    let conj = FiducialVector::normalized(fid.to_standard().entries().conj(), Basis::Standard);
    let cphases = extract_phases(&to_almost_flat(&conj).unwrap(), &p.tolerance(20)).unwrap();
    for j in 1..7 {
        let expected = phases.get(7 - j).conj();
        assert!((cphases.get(j) - &expected).abs() < 1e-25, "j = {j}");
    }

    // almost-flat form, back to the standard basis, and again: same residuals
    let back = FiducialVector::normalized(dft(&ComplexVector::new(afv.a.clone()).unwrap(), Direction::Inverse), Basis::Standard);
    let again = to_almost_flat(&back).unwrap();
    assert!(again.flatness_residual < 1e-20 && again.ratio_residual < 1e-20);

    // the period does not depend on which primitive root orders it
    for theta in [3, 5] {
        assert_eq!(orbit_structure(&phases.u, theta, 7, &p.tolerance(20)).unwrap(), 2);
    }
    let fp = fingerprint(fid, &FingerprintOptions { theta: Some(5), ..Default::default() }).unwrap();
    assert_eq!(fp.independent_count, 2);
    assert!(fp.is_unit);
}

#[test]
fn construction_is_deterministic_and_ignores_rotation() {
    let rep = roundtrip(7, &RoundtripOptions::default()).unwrap();
    let mut set = rep.units.clone();
    let a = construct_search(&set, &ConstructOptions::default()).unwrap();
    let b = construct_search(&set, &ConstructOptions::default()).unwrap();
    assert_eq!((a.theta, a.sign, a.ordering.clone()), (b.theta, b.sign, b.ordering.clone()));
    set.units.rotate_left(1);
    let c = construct_search(&set, &ConstructOptions::default()).unwrap();
    assert!(c.passed());
    assert!(matches!(c.ordering, Ordering::Rotation { .. }));

    let flipped = construct_search(&set, &ConstructOptions { theta: Some(c.theta), sign: Some(-c.sign), ..Default::default() }).unwrap();
    assert!(!flipped.passed());
    assert!(verify_sic(&flipped.fiducial, 10).unwrap().worst_deviation() > 1e-5);
}
