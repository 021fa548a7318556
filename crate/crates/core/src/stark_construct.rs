//! Building a fiducial from unit-circle phases in a prime dimension
//! `p = n^2 + 3`: `a_0 = -(2 + sqrt(p+1))`, `a_{theta^r} = s sqrt(-(2 + sqrt(p+1)) u_r)`.
//! The primitive root, global sign and cyclic ordering of the phases are
//! found by a bounded search screened with the SIC verifier.

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::arith::{is_prime, mod_pow, multiplicative_order};
use crate::error::{Error, Result};
use crate::etf_search::{polish_fiducial, search, EtfSpec, SearchOptions, SymmetryConstraint};
use crate::fingerprint::{
    eval_poly, fingerprint, is_algebraic_unit, unit_circle_conjugates, unit_diagnostic, FingerprintOptions,
    FingerprintReport,
};
use crate::heisenberg::{Basis, FiducialVector};
use crate::hpnum::{ComplexVector, PrecComplex, PrecReal, Precision};
use crate::quadfield::{dimension_form, magical_D, primitive_roots, ray_class_order, RayClassDescriptor, RayModulus};
use crate::symplectic::SymplecticMatrix;
use crate::verifier::{default_tol_digits, verify_sic, SicCertificate};

/// Largest `p - 1` accepted by [`construct_search`].
pub const SEARCH_WINDOW: u64 = 120;
/// Screening tolerance digits.
pub const SCREEN_DIGITS: u32 = 10;

#[allow(non_snake_case)]
#[derive(Clone, Debug)]
pub struct UnitCandidateSet {
    pub d: u64,
    pub D: u64,
    pub theta: Option<u64>,
    pub ell: Option<u64>,
    /// Ascending integer coefficients.
    pub min_poly: Option<Vec<BigInt>>,
    pub units: Vec<PrecComplex>,
    pub provenance: String,
}

impl UnitCandidateSet {
    /// Checks `| |u| - 1 | < 10^(10 - digits)` and, when a minimal polynomial
    /// is given, that every unit is one of its roots.
    #[allow(non_snake_case)]
    pub fn new(
        d: u64,
        D: u64,
        units: Vec<PrecComplex>,
        min_poly: Option<Vec<BigInt>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidArgument("no units supplied".into()));
        }
        let prec = units.iter().map(PrecComplex::precision).min().expect("non-empty");
        let tol = prec.tolerance(10);
        let one = PrecReal::one(prec);
        for (k, u) in units.iter().enumerate() {
            let dev = (&u.abs() - &one).abs();
            if dev > tol {
                return Err(Error::InvalidArgument(format!(
                    "unit {k} is off the unit circle by {:.3e}",
                    dev.to_f64()
                )));
            }
            if let Some(mp) = &min_poly {
                let r = eval_poly(mp, u).abs();
                if r > tol {
                    return Err(Error::InvalidArgument(format!(
                        "unit {k} is not a root of the minimal polynomial (|P(u)| = {:.3e})",
                        r.to_f64()
                    )));
                }
            }
        }
        Ok(UnitCandidateSet {
            d,
            D,
            theta: None,
            ell: None,
            min_poly,
            units,
            provenance: provenance.into(),
        })
    }

    pub fn m(&self) -> usize {
        self.units.len()
    }

    pub fn precision(&self) -> Precision {
        self.units.iter().map(PrecComplex::precision).min().expect("non-empty")
    }

    pub fn with_precision(&self, prec: Precision) -> Vec<PrecComplex> {
        self.units
            .iter()
            .map(|u| PrecComplex::new(&u.re().with_precision(prec), &u.im().with_precision(prec)))
            .collect()
    }
}

fn check_prime_form(d: u64) -> Result<()> {
    let form = dimension_form(d)?;
    if form.n.is_none() {
        return Err(Error::NotOfForm(d));
    }
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    Ok(())
}

/// Fourier-basis vector (unnormalized) with `a_0 = -(2 + sqrt(d+1))` and
/// `a_{theta^r} = sign sqrt(-(2 + sqrt(d+1)) u_{r mod m})`, principal root.
pub fn build_fiducial(units: &[PrecComplex], d: u64, theta: u64, sign: i8) -> Result<FiducialVector> {
    check_prime_form(d)?;
    let p = d;
    let m = units.len() as u64;
    if m == 0 || !(p - 1).is_multiple_of(m) {
        return Err(Error::InvalidArgument(format!("{m} units do not divide p-1 = {}", p - 1)));
    }
    if multiplicative_order(theta as i64, p) != Some(p - 1) {
        return Err(Error::InvalidArgument(format!("{theta} is not a primitive root mod {p}")));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}")));
    }
    let prec = units.iter().map(PrecComplex::precision).min().expect("non-empty");
    let s = crate::fingerprint::flat_scale(d as usize, prec);
    let neg = PrecComplex::from_real(&-&s);
    let roots: Vec<PrecComplex> = units
        .iter()
        .map(|u| {
            let r = (&neg * u).sqrt();
            if sign < 0 {
                &PrecComplex::zero(prec) - &r
            } else {
                r
            }
        })
        .collect();
    let mut a = vec![PrecComplex::zero(prec); p as usize];
    a[0] = neg;
    for r in 0..p - 1 {
        a[mod_pow(theta, r, p) as usize] = roots[(r % m) as usize].clone();
    }
    Ok(FiducialVector::new(ComplexVector::new(a)?, Basis::Fourier))
}

/// How the supplied units were arranged into a cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ordering {
    Rotation { shift: usize, reversed: bool },
    /// Index into the lexicographic list of permutations (diagnostic mode).
    Permutation(usize),
}

impl Ordering {
    fn apply(&self, units: &[PrecComplex], perms: &[Vec<usize>]) -> Vec<PrecComplex> {
        let m = units.len();
        match *self {
            Ordering::Rotation { shift, reversed } => (0..m)
                .map(|r| {
                    let k = if reversed { (shift + m - r) % m } else { (shift + r) % m };
                    units[k].clone()
                })
                .collect(),
            Ordering::Permutation(id) => perms[id].iter().map(|&k| units[k].clone()).collect(),
        }
    }

    pub fn id(&self) -> String {
        match self {
            Ordering::Rotation { shift, reversed } => {
                format!("rot{shift}{}", if *reversed { "r" } else { "" })
            }
            Ordering::Permutation(id) => format!("perm{id}"),
        }
    }
}

#[derive(Clone, Debug)]
#[derive(Default)]
pub struct ConstructOptions {
    /// Only this primitive root.
    pub theta: Option<u64>,
    /// Only this sign.
    pub sign: Option<i8>,
    /// Every permutation of the units instead of rotations and reversal.
    pub full_permutations: bool,
    /// Final tolerance digits; default `precision - 20`.
    pub tol_digits: Option<u32>,
}


#[derive(Clone, Debug)]
pub struct ConstructionResult {
    pub fiducial: FiducialVector,
    pub sign: i8,
    pub theta: u64,
    pub ordering: Ordering,
    pub certificate: SicCertificate,
    pub trials: usize,
    /// Best screening deviation.
    pub screen_deviation: PrecReal,
}

impl ConstructionResult {
    pub fn passed(&self) -> bool {
        self.certificate.verdict.is_pass()
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..m).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..m).rev().find(|&j| cur[j] > cur[i - 1]).expect("exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Searches primitive roots, both signs and the cyclic orderings of the
/// units; every configuration is screened by `verify_sic` at
/// `10^-10` on a 30-digit copy, and the best is rebuilt and certified at the
/// units' full precision. Deterministic: ties go to the earliest
/// configuration in (theta, sign, ordering) order.
pub fn construct_search(set: &UnitCandidateSet, opts: &ConstructOptions) -> Result<ConstructionResult> {
    let d = set.d;
    check_prime_form(d)?;
    if d - 1 > SEARCH_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "p-1 = {} exceeds the search window {SEARCH_WINDOW}",
            d - 1
        )));
    }
    let m = set.m();
    if !(d - 1).is_multiple_of(m as u64) {
        return Err(Error::InvalidArgument(format!("{m} units do not divide p-1 = {}", d - 1)));
    }
    if opts.full_permutations && m > 8 {
        return Err(Error::InvalidArgument(format!("full permutation search over {m} units is too large")));
    }
    let thetas: Vec<u64> = match opts.theta.or(set.theta) {
        Some(t) => vec![t],
        None => primitive_roots(d)?,
    };
    let signs: Vec<i8> = match opts.sign {
        Some(s) => vec![s],
        None => vec![1, -1],
    };
    let perms = if opts.full_permutations { permutations(m) } else { Vec::new() };
    let orderings: Vec<Ordering> = if opts.full_permutations {
        (0..perms.len()).map(Ordering::Permutation).collect()
    } else {
        let mut v = Vec::new();
        for reversed in [false, true] {
            for shift in 0..m {
                if reversed && m <= 2 {
                    continue;
                }
                v.push(Ordering::Rotation { shift, reversed });
            }
        }
        v
    };
    let mut grid = Vec::new();
    for &t in &thetas {
        for &s in &signs {
            for o in &orderings {
                grid.push((t, s, o.clone()));
            }
        }
    }
    let full = set.precision();
    let screen_prec = Precision::new(30).expect("valid").min(full);
    let screen_units = set.with_precision(screen_prec);
    let screened: Vec<Result<PrecReal>> = grid
        .par_iter()
        .map(|(t, s, o)| {
            let units = o.apply(&screen_units, &perms);
            let fid = build_fiducial(&units, d, *t, *s)?.into_normalized();
            Ok(verify_sic(&fid, SCREEN_DIGITS)?.worst_deviation())
        })
        .collect();
    let mut best: Option<(usize, PrecReal)> = None;
    for (k, r) in screened.into_iter().enumerate() {
        let r = r?;
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((k, r));
        }
    }
    let (k, screen_deviation) = best.expect("non-empty grid");
    let (theta, sign, ordering) = grid[k].clone();
    let units = ordering.apply(&set.units, &perms);
    let fiducial = build_fiducial(&units, d, theta, sign)?.into_normalized();
    let tol = opts.tol_digits.unwrap_or_else(|| default_tol_digits(full));
    let mut certificate = verify_sic(&fiducial, tol)?;
    certificate.notes.push(format!("provenance: {}", set.provenance));
    certificate
        .notes
        .push(format!("theta = {theta}, sign = {sign}, ordering = {}", ordering.id()));
    if let Some(mp) = &set.min_poly {
        if let Err(why) = unit_diagnostic(mp) {
            certificate.notes.push(format!("minimal polynomial is not a unit: {why}"));
        }
    }
    Ok(ConstructionResult {
        fiducial,
        sign,
        theta,
        ordering,
        certificate,
        trials: grid.len(),
        screen_deviation,
    })
}

#[derive(Clone, Debug)]
pub struct RoundtripOptions {
    pub seed: u64,
    pub restarts: usize,
    pub polish_digits: u32,
    pub tol_digits: u32,
}

impl Default for RoundtripOptions {
    fn default() -> Self {
        RoundtripOptions {
            seed: 0,
            restarts: 8,
            polish_digits: 100,
            tol_digits: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RoundtripReport {
    pub d: u64,
    pub ray: RayClassDescriptor,
    pub ell: u64,
    pub symmetry_generator: u64,
    pub search_error: PrecReal,
    pub polish_error: PrecReal,
    /// Standard-basis fiducial after the high-precision polish.
    pub polished: FiducialVector,
    pub fingerprint: FingerprintReport,
    pub units: UnitCandidateSet,
    pub construction: ConstructionResult,
}

impl RoundtripReport {
    /// `3 m ell = p - 1`.
    pub fn count_consistent(&self) -> bool {
        3 * self.fingerprint.independent_count as u64 * self.ell == self.d - 1
    }

    pub fn passed(&self) -> bool {
        self.construction.passed() && self.fingerprint.is_unit && self.count_consistent()
    }
}

fn stage<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage,
            message: other.to_string(),
        },
    })
}

/// Numerical search, high-precision polish, fingerprint, then reconstruction
/// from the fingerprint's phases, given to [`construct_search`] sorted by
/// argument so that no ordering information survives.
pub fn roundtrip(d: u64, opts: &RoundtripOptions) -> Result<RoundtripReport> {
    stage("precondition", check_prime_form(d))?;
    let p = d;
    let ray = stage("ray class", ray_class_order(d, &RayModulus::del_one_place()))?;
    let ell = ray.ell.ok_or_else(|| Error::Stage {
        stage: "ray class",
        message: format!("h (p-1) / (3 order) is not an integer for d = {d}"),
    })?;
    let theta0 = primitive_roots(p)?[0];
    let g = mod_pow(theta0, (p - 1) / (3 * ell), p);
    let constraints = vec![
        SymmetryConstraint::fixed_by(SymplecticMatrix::diagonal(g as i64, d)?),
        SymmetryConstraint::fixed_by(SymplecticMatrix::conjugation(d)),
    ];
    let search_opts = SearchOptions {
        orbit: true,
        restarts: opts.restarts,
        seed: opts.seed,
        symmetry: constraints.clone(),
        ..Default::default()
    };
    let found = stage("search", search(&EtfSpec::sic(d as usize)?, &search_opts))?;
    if !found.reached_target {
        return Err(Error::Stage {
            stage: "search",
            message: format!("best frame error {:.3e}", found.error.to_f64()),
        });
    }
    let fid = found.candidate.fiducial().expect("orbit search").clone();
    let hp = Precision::new(opts.polish_digits)?;
    let (polished, polish_error) = stage("polish", polish_fiducial(&fid, &constraints, hp, 60))?;
    let threshold = PrecReal::pow10(-(opts.tol_digits as i32), hp);
    let fopts = FingerprintOptions {
        theta: Some(theta0),
        threshold: Some(threshold),
        ..Default::default()
    };
    let fp = stage("fingerprint", fingerprint(&polished, &fopts))?;
    let mut units = Vec::with_capacity(fp.independent_count);
    for (r, (u, mp)) in fp.phases.iter().zip(&fp.independent_min_polys).enumerate() {
        let Some(mp) = mp else {
            return Err(Error::Stage {
                stage: "fingerprint",
                message: format!("no minimal polynomial for phase {r}"),
            });
        };
        let roots = stage("fingerprint", unit_circle_conjugates(mp, hp))?;
        let nearest = roots
            .into_iter()
            .min_by(|a, b| {
                (a - u)
                    .abs()
                    .partial_cmp(&(b - u).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .ok_or_else(|| Error::Stage {
                stage: "fingerprint",
                message: format!("minimal polynomial of phase {r} has no unit-circle root"),
            })?;
        units.push(nearest);
    }
    units.sort_by(|a, b| a.arg().partial_cmp(&b.arg()).unwrap_or(std::cmp::Ordering::Equal));
    let mut set = UnitCandidateSet::new(
        d,
        magical_D(d)?,
        units,
        fp.min_poly.clone(),
        "fingerprint roundtrip",
    )?;
    set.ell = Some(ell);
    let copts = ConstructOptions {
        tol_digits: Some(opts.tol_digits),
        ..Default::default()
    };
    let construction = stage("construct", construct_search(&set, &copts))?;
    Ok(RoundtripReport {
        d,
        ray,
        ell,
        symmetry_generator: g,
        search_error: found.error,
        polish_error,
        polished,
        fingerprint: fp,
        units: set,
        construction,
    })
}

/// Whether every unit's minimal polynomial passes the unit test.
pub fn units_are_algebraic(polys: &[Option<Vec<BigInt>>]) -> bool {
    polys.iter().all(|p| p.as_deref().is_some_and(is_algebraic_unit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hpnum::root_of_unity;

    fn prec() -> Precision {
        Precision::new(40).unwrap()
    }

    #[test]
    fn trivial_units_give_constant_tail() {
        let p = prec();
        let fid = build_fiducial(&[PrecComplex::one(p)], 7, 3, 1).unwrap();
        let a = fid.entries();
        let s = crate::fingerprint::flat_scale(7, p);
        assert!((&a[0] - &PrecComplex::from_real(&-&s)).abs() < p.tolerance(5));
        for k in 2..7 {
            assert!((&a[k] - &a[1]).abs() < p.tolerance(5));
        }
        let cert = verify_sic(&fid.into_normalized(), 10).unwrap();
        assert!(!cert.verdict.is_pass());
    }

    #[test]
    fn shape_holds_by_construction() {
        let p = prec();
        let units: Vec<PrecComplex> = (0..3).map(|k| root_of_unity(11, 2 * k + 1, p)).collect();
        let fid = build_fiducial(&units, 7, 5, -1).unwrap();
        let a = fid.entries();
        let s = crate::fingerprint::flat_scale(7, p);
        for k in 1..7 {
            assert!((&a[k].abs() - &a[1].abs()).abs() < p.tolerance(5));
        }
        assert!((&a[0].norm_sqr() - &(&s * &a[1].norm_sqr())).abs() < p.tolerance(5));
        // period m along the theta-cycle
        for r in 0..6u64 {
            let x = &a[mod_pow(5, r, 7) as usize];
            let y = &a[mod_pow(5, r + 3, 7) as usize];
            assert!((x - y).abs() < p.tolerance(5));
        }
    }

    #[test]
    fn preconditions() {
        let p = prec();
        let u = vec![PrecComplex::one(p); 4];
        assert!(build_fiducial(&u, 7, 3, 1).is_err());
        assert!(build_fiducial(&u[..2], 7, 2, 1).is_err());
        assert!(build_fiducial(&u[..2], 7, 3, 0).is_err());
        assert!(matches!(build_fiducial(&u[..2], 4, 3, 1), Err(Error::NotPrime(4))));
        assert!(matches!(roundtrip(5, &RoundtripOptions::default()), Err(Error::Stage { stage: "precondition", .. })));
    }

    #[test]
    fn off_circle_units_are_rejected() {
        let p = prec();
        let u = vec![PrecComplex::from_f64(1.1, 0.0, p)];
        assert!(UnitCandidateSet::new(7, 2, u, None, "manual").is_err());
    }

    #[test]
    fn random_phases_do_not_make_a_sic() {
        let p = prec();
        let units = vec![
            PrecComplex::from_polar(&PrecReal::one(p), &PrecReal::from_f64(0.913, p)),
            PrecComplex::from_polar(&PrecReal::one(p), &PrecReal::from_f64(-2.177, p)),
        ];
        let set = UnitCandidateSet::new(7, 2, units, None, "manual").unwrap();
        let res = construct_search(&set, &ConstructOptions::default()).unwrap();
        assert!(!res.passed());
        assert!(res.screen_deviation > 1e-5);
        assert_eq!(res.trials, 2 * 2 * 2);
    }

    #[test]
    fn permutation_enumeration() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[1], vec![0, 2, 1]);
    }
}
