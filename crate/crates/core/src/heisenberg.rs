//! Weyl–Heisenberg displacement operators `D_{i,j} = tau^{ij} X^i Z^j`,
//! fiducial orbits and the overlap table `<Psi|D_p|Psi>`.
//!
//! `X` is the cyclic shift `X e_k = e_{k+1}`, `Z = diag(omega^k)` with
//! `omega = e(1/d)`, and `tau = -e^{i pi / d}`. Dense matrices are only
//! materialized up to [`MAX_DENSE_DIM`]; everything else uses the index-shift
//! action `(D_{i,j} psi)_k = tau^{ij} omega^{j(k-i)} psi_{k-i}`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hpnum::{
    dft, root_of_unity, ComplexMatrix, ComplexVector, Direction, PrecComplex, PrecReal, Precision,
};

pub const MAX_DENSE_DIM: u64 = 256;

/// Index pair `(i, j)` in `Z_d x Z_d`, always stored reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DisplacementIndex {
    i: u64,
    j: u64,
    d: u64,
}

impl DisplacementIndex {
    pub fn new(i: i64, j: i64, d: u64) -> Self {
        assert!(d >= 1);
        DisplacementIndex {
            i: i.rem_euclid(d as i64) as u64,
            j: j.rem_euclid(d as i64) as u64,
            d,
        }
    }

    pub fn i(self) -> u64 {
        self.i
    }

    pub fn j(self) -> u64 {
        self.j
    }

    pub fn dim(self) -> u64 {
        self.d
    }

    pub fn is_zero(self) -> bool {
        self.i == 0 && self.j == 0
    }

    pub fn neg(self) -> Self {
        Self::new(-(self.i as i64), -(self.j as i64), self.d)
    }

    pub fn add(self, other: Self) -> Self {
        assert_eq!(self.d, other.d);
        Self::new((self.i + other.i) as i64, (self.j + other.j) as i64, self.d)
    }

    /// Row-major position in a `d x d` table.
    pub fn flat(self) -> usize {
        (self.i * self.d + self.j) as usize
    }

    /// All `d^2` indices in row-major order.
    pub fn all(d: u64) -> impl Iterator<Item = DisplacementIndex> {
        (0..d).flat_map(move |i| (0..d).map(move |j| DisplacementIndex { i, j, d }))
    }
}

impl fmt::Display for DisplacementIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Standard,
    Fourier,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Standard => "standard",
            Basis::Fourier => "fourier",
        }
    }

    pub fn parse(text: &str) -> Option<Basis> {
        match text {
            "standard" => Some(Basis::Standard),
            "fourier" => Some(Basis::Fourier),
            _ => None,
        }
    }
}

/// A candidate SIC fiducial together with the basis its entries refer to.
#[derive(Clone, Debug, PartialEq)]
pub struct FiducialVector {
    entries: ComplexVector,
    basis: Basis,
    normalized: bool,
}

impl FiducialVector {
    /// Wraps `entries`; the `normalized` flag is set when the norm is 1 to
    /// within `10^(10 - precision)`.
    pub fn new(entries: ComplexVector, basis: Basis) -> Self {
        let prec = entries.precision();
        let normalized = (entries.norm() - PrecReal::one(prec)).abs() < prec.tolerance(10);
        FiducialVector {
            entries,
            basis,
            normalized,
        }
    }

    pub fn normalized(entries: ComplexVector, basis: Basis) -> Self {
        FiducialVector {
            entries: entries.normalized(),
            basis,
            normalized: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &ComplexVector {
        &self.entries
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn precision(&self) -> Precision {
        self.entries.precision()
    }

    pub fn with_precision(&self, prec: Precision) -> Self {
        FiducialVector {
            entries: self.entries.with_precision(prec),
            basis: self.basis,
            normalized: self.normalized,
        }
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.normalized {
            Ok(())
        } else {
            let dev = (self.entries.norm() - PrecReal::one(self.precision())).to_f64();
            Err(Error::NotNormalized(dev))
        }
    }

    pub fn into_normalized(self) -> Self {
        Self::normalized(self.entries, self.basis)
    }

    /// Same vector expressed in the standard basis.
    pub fn to_standard(&self) -> Self {
        match self.basis {
            Basis::Standard => self.clone(),
            Basis::Fourier => FiducialVector {
                entries: dft(&self.entries, Direction::Inverse),
                basis: Basis::Standard,
                normalized: self.normalized,
            },
        }
    }

    /// Same vector expressed in the Fourier basis.
    pub fn to_fourier(&self) -> Self {
        match self.basis {
            Basis::Fourier => self.clone(),
            Basis::Standard => FiducialVector {
                entries: dft(&self.entries, Direction::Forward),
                basis: Basis::Fourier,
                normalized: self.normalized,
            },
        }
    }

    pub fn conj(&self) -> Self {
        FiducialVector {
            entries: self.entries.conj(),
            basis: self.basis,
            normalized: self.normalized,
        }
    }
}

/// Cached phase tables for one dimension and precision.
#[derive(Clone, Debug)]
pub struct WeylHeisenberg {
    d: u64,
    omega: Vec<PrecComplex>,
    zeta: Vec<PrecComplex>,
}

impl WeylHeisenberg {
    pub fn new(d: u64, prec: Precision) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!(
                "Weyl-Heisenberg group needs d >= 2, got {d}"
            )));
        }
        let omega = (0..d).map(|m| root_of_unity(d, m as i64, prec)).collect();
        let zeta = (0..2 * d)
            .map(|m| root_of_unity(2 * d, m as i64, prec))
            .collect();
        Ok(WeylHeisenberg { d, omega, zeta })
    }

    pub fn dim(&self) -> u64 {
        self.d
    }

    pub fn precision(&self) -> Precision {
        self.omega[0].precision()
    }

    /// `omega^m`.
    pub fn omega(&self, m: i64) -> &PrecComplex {
        &self.omega[m.rem_euclid(self.d as i64) as usize]
    }

    /// `tau^m` with `tau = -e^{i pi/d} = e((d+1)/(2d))`.
    pub fn tau(&self, m: i64) -> &PrecComplex {
        let two_d = 2 * self.d as i64;
        let e = ((self.d as i64 + 1) * m.rem_euclid(two_d)).rem_euclid(two_d);
        &self.zeta[e as usize]
    }

    /// `D_p psi` via the index-shift action.
    pub fn apply(&self, p: DisplacementIndex, psi: &ComplexVector) -> ComplexVector {
        let d = self.d as usize;
        assert_eq!(psi.dim(), d);
        let (i, j) = (p.i as i64, p.j as i64);
        let phase = self.tau(i * j);
        let entries = (0..d as i64)
            .map(|k| {
                let src = (k - i).rem_euclid(d as i64);
                let w = self.omega(j * src);
                &(phase * w) * &psi[src as usize]
            })
            .collect();
        ComplexVector::new(entries).expect("d >= 2")
    }

    /// `D_p^dagger psi`.
    pub fn apply_adjoint(&self, p: DisplacementIndex, psi: &ComplexVector) -> ComplexVector {
        let d = self.d as usize;
        let (i, j) = (p.i as i64, p.j as i64);
        let phase = self.tau(-i * j);
        let entries = (0..d as i64)
            .map(|m| {
                let src = (m + i).rem_euclid(d as i64);
                let w = self.omega(-j * m);
                &(phase * w) * &psi[src as usize]
            })
            .collect();
        ComplexVector::new(entries).expect("d >= 2")
    }

    /// Dense matrix of `D_p`; only for `d <= MAX_DENSE_DIM`.
    pub fn matrix(&self, p: DisplacementIndex) -> Result<ComplexMatrix> {
        if self.d > MAX_DENSE_DIM {
            return Err(Error::InvalidDimension(format!(
                "dense displacement matrices are limited to d <= {MAX_DENSE_DIM}; use the action"
            )));
        }
        let d = self.d as usize;
        let prec = self.precision();
        let mut m = ComplexMatrix::zeros(d, prec);
        let (i, j) = (p.i as i64, p.j as i64);
        for col in 0..d as i64 {
            let row = (col + i).rem_euclid(d as i64);
            m.set(row as usize, col as usize, self.tau(i * j) * self.omega(j * col));
        }
        Ok(m)
    }

    /// `<psi|D_p|psi>` for a single `p`.
    pub fn overlap(&self, p: DisplacementIndex, psi: &ComplexVector) -> PrecComplex {
        psi.inner(&self.apply(p, psi))
    }

    /// The full overlap table, row-major in `(i, j)`.
    ///
    /// For fixed `i` the products `c_k = conj(psi_k) psi_{k-i}` are formed
    /// once and reused for every `j`.
    pub fn overlap_table(&self, psi: &ComplexVector) -> Vec<PrecComplex> {
        let d = self.d as i64;
        let prec = psi.precision();
        (0..d)
            .into_par_iter()
            .flat_map_iter(|i| {
                let c: Vec<PrecComplex> = (0..d)
                    .map(|k| psi[k as usize].conj() * &psi[(k - i).rem_euclid(d) as usize])
                    .collect();
                (0..d)
                    .map(|j| {
                        let mut acc = PrecComplex::zero(prec);
                        for (k, ck) in c.iter().enumerate() {
                            acc += &(self.omega(j * (k as i64 - i)) * ck);
                        }
                        self.tau(i * j) * acc
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Dense `D_p`. Rejects `d < 2`.
pub fn displacement(d: u64, p: DisplacementIndex, prec: Precision) -> Result<ComplexMatrix> {
    WeylHeisenberg::new(d, prec)?.matrix(p)
}

/// `{D_p Psi}` for all `p`, row-major in `(i, j)`.
pub fn orbit(fid: &FiducialVector) -> Result<Vec<ComplexVector>> {
    fid.require_normalized()?;
    if fid.basis() != Basis::Standard {
        return Err(Error::WrongBasis(fid.basis().name()));
    }
    let wh = WeylHeisenberg::new(fid.dim() as u64, fid.precision())?;
    let indices: Vec<_> = DisplacementIndex::all(fid.dim() as u64).collect();
    Ok(indices
        .into_par_iter()
        .map(|p| wh.apply(p, fid.entries()))
        .collect())
}

/// Overlap table `<Psi|D_p|Psi>` keyed by displacement index.
#[derive(Clone, Debug)]
pub struct Overlaps {
    d: u64,
    values: Vec<PrecComplex>,
}

impl Overlaps {
    pub fn dim(&self) -> u64 {
        self.d
    }

    pub fn get(&self, p: DisplacementIndex) -> &PrecComplex {
        assert_eq!(p.dim(), self.d);
        &self.values[p.flat()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (DisplacementIndex, &PrecComplex)> {
        DisplacementIndex::all(self.d).zip(self.values.iter())
    }

    pub fn values(&self) -> &[PrecComplex] {
        &self.values
    }
}

pub fn overlaps(fid: &FiducialVector) -> Result<Overlaps> {
    fid.require_normalized()?;
    let d = fid.dim() as u64;
    let wh = WeylHeisenberg::new(d, fid.precision())?;
    Ok(Overlaps {
        d,
        values: wh.overlap_table(fid.entries()),
    })
}

/// `(0, 1, -1)/sqrt 2`, the fiducial of the Hesse SIC in dimension 3.
pub fn hesse_fiducial(prec: Precision) -> FiducialVector {
    let s = PrecReal::one(prec) / PrecReal::from_i64(2, prec).sqrt();
    let v = ComplexVector::new(vec![
        PrecComplex::zero(prec),
        PrecComplex::from_real(&s),
        PrecComplex::from_real(&(-&s)),
    ])
    .expect("dim 3");
    FiducialVector::new(v, Basis::Standard)
}

/// The qubit fiducial whose Bloch vector is `(1,1,1)/sqrt 3`:
/// `psi = (cos(t/2), e^{i pi/4} sin(t/2))` with `cos t = 1/sqrt 3`.
pub fn qubit_fiducial(prec: Precision) -> FiducialVector {
    let one = PrecReal::one(prec);
    let cos_t = &one / PrecReal::from_i64(3, prec).sqrt();
    let two = PrecReal::from_i64(2, prec);
    let c = ((&one + &cos_t) / &two).sqrt();
    let s = ((&one - &cos_t) / &two).sqrt();
    let phase = root_of_unity(8, 1, prec);
    let v = ComplexVector::new(vec![PrecComplex::from_real(&c), phase.scale(&s)]).expect("dim 2");
    FiducialVector::new(v, Basis::Standard)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prec() -> Precision {
        Precision::new(60).unwrap()
    }

    fn brute_matrix(d: u64, i: u64, j: u64, prec: Precision) -> ComplexMatrix {
        // tau^{ij} X^i Z^j built from its factors
        let du = d as usize;
        let mut x = ComplexMatrix::zeros(du, prec);
        let mut z = ComplexMatrix::zeros(du, prec);
        for k in 0..du {
            x.set((k + 1) % du, k, PrecComplex::one(prec));
            z.set(k, k, root_of_unity(d, k as i64, prec));
        }
        let mut m = ComplexMatrix::identity(du, prec);
        for _ in 0..i {
            m = m.mul(&x);
        }
        for _ in 0..j {
            m = m.mul(&z);
        }
        let tau = -root_of_unity(2 * d, 1, prec);
        m.scale(&tau.powu((i * j) as u32))
    }

    #[test]
    fn identity_and_small_cases() {
        let p = prec();
        let id = displacement(3, DisplacementIndex::new(0, 0, 3), p).unwrap();
        assert!(id.max_abs_diff(&ComplexMatrix::identity(3, p)) < p.tolerance(2));

        // d = 2: tau^{ij} vanishes from D_{1,0}, which is the bare shift X;
        // the tau = -i factor first shows up in D_{1,1} = -i X Z.
        let zero = PrecComplex::zero(p);
        let one = PrecComplex::one(p);
        let m = displacement(2, DisplacementIndex::new(1, 0, 2), p).unwrap();
        let x = ComplexMatrix::from_rows(2, vec![zero.clone(), one.clone(), one, zero.clone()]);
        assert!(m.max_abs_diff(&x) < p.tolerance(2));
        let m = displacement(2, DisplacementIndex::new(1, 1, 2), p).unwrap();
        let mi = PrecComplex::from_f64(0.0, -1.0, p);
        let i = PrecComplex::i(p);
        let expected = ComplexMatrix::from_rows(2, vec![zero.clone(), i, mi, zero]);
        assert!(m.max_abs_diff(&expected) < p.tolerance(2));

        assert!(displacement(1, DisplacementIndex::new(0, 0, 1), p).is_err());
    }

    #[test]
    fn dense_matches_definition_and_action() {
        let p = prec();
        for d in 2..7u64 {
            let wh = WeylHeisenberg::new(d, p).unwrap();
            let v = ComplexVector::from_f64_pairs(
                &(0..d).map(|k| (k as f64 + 0.5, 1.0 - k as f64 * 0.3)).collect::<Vec<_>>(),
                p,
            )
            .unwrap();
            for q in DisplacementIndex::all(d) {
                let dense = wh.matrix(q).unwrap();
                assert!(dense.max_abs_diff(&brute_matrix(d, q.i(), q.j(), p)) < p.tolerance(4));
                assert!(dense.apply(&v).max_abs_diff(&wh.apply(q, &v)) < p.tolerance(4));
                let adj = dense.adjoint().apply(&v);
                assert!(adj.max_abs_diff(&wh.apply_adjoint(q, &v)) < p.tolerance(4));
            }
        }
    }

    #[test]
    fn composition_is_projective() {
        let p = prec();
        let wh = WeylHeisenberg::new(5, p).unwrap();
        let a = wh.matrix(DisplacementIndex::new(1, 0, 5)).unwrap();
        let b = wh.matrix(DisplacementIndex::new(0, 1, 5)).unwrap();
        let c = wh.matrix(DisplacementIndex::new(1, 1, 5)).unwrap();
        let (res, phase) = a.mul(&b).distance_up_to_phase(&c);
        assert!(res < p.tolerance(10));
        assert!((phase.abs() - PrecReal::one(p)).abs() < p.tolerance(10));
    }

    #[test]
    fn group_law_and_unitarity_exhaustive_small() {
        let p = Precision::new(40).unwrap();
        for d in 2..=7u64 {
            let wh = WeylHeisenberg::new(d, p).unwrap();
            let mats: Vec<_> = DisplacementIndex::all(d)
                .map(|q| wh.matrix(q).unwrap())
                .collect();
            let id = ComplexMatrix::identity(d as usize, p);
            for (a, ma) in DisplacementIndex::all(d).zip(&mats) {
                assert!(ma.mul(&ma.adjoint()).max_abs_diff(&id) < p.tolerance(10));
                for (b, mb) in DisplacementIndex::all(d).zip(&mats) {
                    let target = &mats[a.add(b).flat()];
                    let (res, _) = ma.mul(mb).distance_up_to_phase(target);
                    assert!(res < p.tolerance(10), "d={d} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn orbit_starts_with_fiducial_and_is_unit() {
        let p = prec();
        for fid in [qubit_fiducial(p), hesse_fiducial(p)] {
            let orb = orbit(&fid).unwrap();
            assert_eq!(orb.len(), fid.dim() * fid.dim());
            assert_eq!(&orb[0], fid.entries());
            for v in &orb {
                assert!((v.norm() - PrecReal::one(p)).abs() < p.tolerance(10));
            }
        }
    }

    #[test]
    fn hesse_orbit_gram_matrix() {
        let p = prec();
        let orb = orbit(&hesse_fiducial(p)).unwrap();
        let quarter = PrecReal::from_ratio(1, 4, p);
        for (a, va) in orb.iter().enumerate() {
            for vb in orb.iter().skip(a + 1) {
                let g = va.inner(vb).norm_sqr();
                assert!((g - &quarter).abs() < p.tolerance(10));
            }
        }
    }

    #[test]
    fn overlap_moduli_of_known_sics() {
        let p = prec();
        for (fid, target) in [
            (qubit_fiducial(p), PrecReal::from_ratio(1, 3, p)),
            (hesse_fiducial(p), PrecReal::from_ratio(1, 4, p)),
        ] {
            let ov = overlaps(&fid).unwrap();
            for (q, a) in ov.iter() {
                if q.is_zero() {
                    assert!((a - PrecComplex::one(p)).abs() < p.tolerance(10));
                } else {
                    assert!((a.norm_sqr() - &target).abs() < p.tolerance(10), "{q}");
                }
            }
        }
    }

    #[test]
    fn overlap_table_matches_direct_overlaps() {
        let p = prec();
        let v = ComplexVector::from_f64_pairs(
            &[(0.1, 0.2), (0.3, -0.4), (0.5, 0.0), (-0.2, 0.6), (0.7, 0.1)],
            p,
        )
        .unwrap()
        .normalized();
        let wh = WeylHeisenberg::new(5, p).unwrap();
        let table = wh.overlap_table(&v);
        for q in DisplacementIndex::all(5) {
            assert!((&table[q.flat()] - wh.overlap(q, &v)).abs() < p.tolerance(6));
            let neg = &table[q.neg().flat()];
            assert!((table[q.flat()].abs() - neg.abs()).abs() < p.tolerance(6));
        }
    }

    #[test]
    fn unnormalized_input_rejected() {
        let p = prec();
        let v = ComplexVector::from_f64_pairs(&[(1.0, 0.0), (1.0, 0.0)], p).unwrap();
        let fid = FiducialVector::new(v, Basis::Standard);
        assert!(matches!(orbit(&fid), Err(Error::NotNormalized(_))));
        assert!(overlaps(&fid).is_err());
    }
}
