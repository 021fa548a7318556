//! Certification of equiangular tight frames and SIC fiducials.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::etf_search::EtfSpec;
use crate::fingerprint::FingerprintReport;
use crate::heisenberg::{overlaps, FiducialVector};
use crate::hpnum::{ComplexVector, PrecComplex, PrecReal, Precision};
use crate::symplectic::SymmetryReport;

/// Guard digits left between the working precision and the default tolerance.
pub const GUARD_DIGITS: u32 = 20;

pub fn default_tol_digits(prec: Precision) -> u32 {
    prec.digits().saturating_sub(GUARD_DIGITS)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Clone, Debug)]
pub struct SicCertificate {
    pub d: usize,
    pub n: usize,
    pub c1: PrecReal,
    pub c2: PrecReal,
    pub max_equiangular_deviation: PrecReal,
    pub tightness_deviation: PrecReal,
    pub precision_used: Precision,
    pub tol_digits: u32,
    pub symmetry: Option<SymmetryReport>,
    pub fingerprint: Option<FingerprintReport>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

fn verdict_for(eq: &PrecReal, tight: &PrecReal, tol_digits: u32) -> Verdict {
    let tol = PrecReal::pow10(-(tol_digits as i32), eq.precision());
    if *eq < tol && *tight < tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Short scientific rendering used in reports.
pub fn sci(x: &PrecReal) -> String {
    if x.is_zero() {
        return "0".into();
    }
    format!("{:.3e}", x.to_f64())
}

impl SicCertificate {
    pub fn tolerance(&self) -> PrecReal {
        PrecReal::pow10(-(self.tol_digits as i32), self.precision_used)
    }

    /// Largest of the two deviations.
    pub fn worst_deviation(&self) -> PrecReal {
        self.max_equiangular_deviation
            .clone()
            .max(self.tightness_deviation.clone())
    }

    /// `key = value` report, one entry per line, stable ordering.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("d", self.d.to_string());
        kv("N", self.n.to_string());
        kv("c1", self.c1.to_decimal(20));
        kv("c2", self.c2.to_decimal(20));
        kv("precision", self.precision_used.to_string());
        kv("tol_digits", self.tol_digits.to_string());
        kv("max_equiangular_deviation", sci(&self.max_equiangular_deviation));
        kv("tightness_deviation", sci(&self.tightness_deviation));
        if let Some(s) = &self.symmetry {
            kv("symmetry.order", s.order.to_string());
            kv("symmetry.unitary_order", s.unitary_order.to_string());
            kv("symmetry.antiunitary", s.has_antiunitary.to_string());
            kv("symmetry.zauner_divisible", s.zauner_divisible.to_string());
            kv("symmetry.exhaustive", s.exhaustive.to_string());
            let gens: Vec<String> = s.generators.iter().map(|g| g.to_string()).collect();
            kv("symmetry.generators", gens.join("; "));
        }
        if let Some(f) = &self.fingerprint {
            for (k, v) in f.report_entries() {
                kv(&format!("fingerprint.{k}"), v);
            }
        }
        for (k, note) in self.notes.iter().enumerate() {
            kv(&format!("note.{k}"), note.clone());
        }
        kv("verdict", self.verdict.as_str().to_string());
        out
    }
}

/// Parses a `key = value` report back into a map. Blank lines and `#`
/// comments are skipped.
pub fn parse_report(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Brute-force certificate for `N` vectors: worst equiangularity violation
/// over `i != j` and the max-norm tightness defect.
pub fn verify_etf(vectors: &[ComplexVector], spec: &EtfSpec, tol_digits: u32) -> Result<SicCertificate> {
    if vectors.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            found: vectors.len(),
        });
    }
    if let Some(v) = vectors.iter().find(|v| v.dim() != spec.d()) {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            found: v.dim(),
        });
    }
    let prec = vectors.iter().map(ComplexVector::precision).min().expect("N >= 1");
    prec.check_tolerance(tol_digits)?;
    let (d, n) = (spec.d(), spec.n());
    let c1 = spec.c1(prec);
    let c2 = spec.c2(prec);
    let eq = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = PrecReal::zero(prec);
            for j in 0..n {
                if i != j {
                    let dev = (&vectors[i].inner(&vectors[j]).norm_sqr() - &c2).abs();
                    worst = worst.max(dev);
                }
            }
            worst
        })
        .reduce(|| PrecReal::zero(prec), PrecReal::max);
    let mut tight = PrecReal::zero(prec);
    for a in 0..d {
        for b in 0..d {
            let mut acc = PrecComplex::zero(prec);
            for v in vectors {
                acc += &(&v[a] * &v[b].conj());
            }
            if a == b {
                acc = &acc - &PrecComplex::from_real(&c1);
            }
            tight = tight.max(acc.abs());
        }
    }
    let verdict = verdict_for(&eq, &tight, tol_digits);
    Ok(SicCertificate {
        d,
        n,
        c1,
        c2,
        max_equiangular_deviation: eq,
        tightness_deviation: tight,
        precision_used: prec,
        tol_digits,
        symmetry: None,
        fingerprint: None,
        notes: Vec::new(),
        verdict,
    })
}

/// SIC certificate from the `d^2` overlaps of a fiducial. A Weyl–Heisenberg
/// orbit resolves `d ||Psi||^2` times the identity, so the tightness defect
/// is `d | ||Psi||^2 - 1 |`.
pub fn verify_sic(fid: &FiducialVector, tol_digits: u32) -> Result<SicCertificate> {
    fid.require_normalized()?;
    let prec = fid.precision();
    prec.check_tolerance(tol_digits)?;
    let std = fid.to_standard();
    let d = fid.dim();
    let spec = EtfSpec::sic(d)?;
    let c2 = spec.c2(prec);
    let table = overlaps(&std)?;
    let eq = table
        .iter()
        .filter(|(p, _)| !p.is_zero())
        .map(|(_, a)| (&a.norm_sqr() - &c2).abs())
        .fold(PrecReal::zero(prec), PrecReal::max);
    let one = PrecReal::one(prec);
    let tight = (&std.entries().norm_sqr() - &one).abs() * PrecReal::from_i64(d as i64, prec);
    let verdict = verdict_for(&eq, &tight, tol_digits);
    Ok(SicCertificate {
        d,
        n: d * d,
        c1: spec.c1(prec),
        c2,
        max_equiangular_deviation: eq,
        tightness_deviation: tight,
        precision_used: prec,
        tol_digits,
        symmetry: None,
        fingerprint: None,
        notes: Vec::new(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::{hesse_fiducial, orbit, qubit_fiducial, Basis, WeylHeisenberg, DisplacementIndex};

    fn prec() -> Precision {
        Precision::new(60).unwrap()
    }

    #[test]
    fn standard_basis_is_an_etf() {
        let p = prec();
        let basis: Vec<_> = (0..4).map(|k| ComplexVector::basis(4, k, p)).collect();
        let cert = verify_etf(&basis, &EtfSpec::new(4, 4).unwrap(), 40).unwrap();
        assert!(cert.verdict.is_pass());
        assert!(cert.worst_deviation().is_zero());
    }

    #[test]
    fn hesse_orbit_passes() {
        let p = prec();
        let vectors = orbit(&hesse_fiducial(p)).unwrap();
        let cert = verify_etf(&vectors, &EtfSpec::sic(3).unwrap(), 30).unwrap();
        assert!(cert.verdict.is_pass());
        assert!(cert.c2 == PrecReal::from_ratio(1, 4, p));
    }

    #[test]
    fn perturbed_hesse_orbit_fails() {
        let p = prec();
        let mut vectors = orbit(&hesse_fiducial(p)).unwrap();
        let mut e = vectors[4].clone().into_entries();
        e[1] = &e[1] + &PrecComplex::from_f64(1e-6, 0.0, p);
        vectors[4] = ComplexVector::new(e).unwrap();
        let cert = verify_etf(&vectors, &EtfSpec::sic(3).unwrap(), 10).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
    }

    #[test]
    fn known_fiducials_pass() {
        let p = prec();
        for fid in [qubit_fiducial(p), hesse_fiducial(p)] {
            let cert = verify_sic(&fid, default_tol_digits(p)).unwrap();
            assert!(cert.verdict.is_pass());
            assert!(cert.max_equiangular_deviation < 1e-30);
        }
    }

    #[test]
    fn flat_vector_fails() {
        let p = prec();
        let v = ComplexVector::from_f64_pairs(&[(1.0, 0.0); 5], p).unwrap();
        let fid = FiducialVector::normalized(v, Basis::Standard);
        let cert = verify_sic(&fid, 10).unwrap();
        assert_eq!(cert.verdict, Verdict::Fail);
    }

    #[test]
    fn excessive_tolerance_is_rejected() {
        let p = prec();
        assert!(matches!(
            verify_sic(&hesse_fiducial(p), 61),
            Err(Error::PrecisionUnderflow { .. })
        ));
    }

    #[test]
    fn verdict_ignores_phase_and_displacement() {
        let p = prec();
        let fid = hesse_fiducial(p);
        let wh = WeylHeisenberg::new(3, p).unwrap();
        let moved = wh.apply(DisplacementIndex::new(2, 1, 3), fid.entries());
        let phased = fid.entries().scale(&PrecComplex::from_polar(&PrecReal::one(p), &PrecReal::from_f64(0.7, p)));
        for v in [moved, phased] {
            let cert = verify_sic(&FiducialVector::new(v, Basis::Standard), 30).unwrap();
            assert!(cert.verdict.is_pass());
        }
    }

    #[test]
    fn report_round_trips_through_parser() {
        let cert = verify_sic(&hesse_fiducial(prec()), 40).unwrap();
        let map = parse_report(&cert.to_report()).unwrap();
        assert_eq!(map["verdict"], "pass");
        assert_eq!(map["d"], "3");
        assert_eq!(map["N"], "9");
        assert!(parse_report("d 3").is_err());
    }
}
