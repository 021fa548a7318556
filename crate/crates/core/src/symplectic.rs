//! The Clifford action of `GL(2, Z_d)` (determinant `±1`) on the
//! Weyl–Heisenberg group, for odd `d`.
//!
//! A matrix `F` of determinant `+1` is represented by a unitary `U_F` with
//! `U_F D_p U_F^† = phase · D_{Fp}`. Determinant `-1` matrices are written
//! as `F = F' J`, `J = diag(1, -1)`, and act antiunitarily as
//! `v ↦ U_{F'} conj(v)`, since complex conjugation implements `J` exactly.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;

use crate::arith::{gcd, mod_inv};
use crate::error::{Error, Result};
use crate::fastwh::{FastWh, C64};
use crate::heisenberg::{DisplacementIndex, FiducialVector, WeylHeisenberg};
use crate::hpnum::{ComplexMatrix, ComplexVector, PrecComplex, PrecReal, Precision};

/// `[[alpha, beta], [gamma, delta]]` over `Z_d`, with determinant `±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymplecticMatrix {
    alpha: u64,
    beta: u64,
    gamma: u64,
    delta: u64,
    d: u64,
}

impl SymplecticMatrix {
    pub fn new(alpha: i64, beta: i64, gamma: i64, delta: i64, d: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("modulus must be >= 2, got {d}")));
        }
        let r = |x: i64| x.rem_euclid(d as i64) as u64;
        let m = SymplecticMatrix {
            alpha: r(alpha),
            beta: r(beta),
            gamma: r(gamma),
            delta: r(delta),
            d,
        };
        let det = m.det_mod();
        if det != 1 && det != d - 1 {
            return Err(Error::NotInvertible { modulus: d });
        }
        Ok(m)
    }

    pub fn identity(d: u64) -> Self {
        Self::new(1, 0, 0, 1, d).expect("identity")
    }

    /// `diag(1, -1)`: complex conjugation in the standard basis.
    pub fn conjugation(d: u64) -> Self {
        Self::new(1, 0, 0, -1, d).expect("det -1")
    }

    /// `diag(theta^{-1}, theta)`.
    pub fn diagonal(theta: i64, d: u64) -> Result<Self> {
        let inv = mod_inv(theta, d).ok_or(Error::NotCoprime {
            value: theta,
            modulus: d,
        })?;
        Self::new(inv as i64, 0, 0, theta, d)
    }

    /// `[[0, -1], [1, 0]]`, the Fourier matrix.
    pub fn fourier(d: u64) -> Self {
        Self::new(0, -1, 1, 0, d).expect("det 1")
    }

    pub fn entries(&self) -> [u64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn modulus(&self) -> u64 {
        self.d
    }

    fn det_mod(&self) -> u64 {
        let d = self.d as u128;
        let ad = self.alpha as u128 * self.delta as u128 % d;
        let bc = self.beta as u128 * self.gamma as u128 % d;
        ((ad + d - bc) % d) as u64
    }

    /// `+1` or `-1`. In `d = 2` the two coincide and `+1` is reported.
    pub fn det(&self) -> i64 {
        if self.det_mod() == 1 {
            1
        } else {
            -1
        }
    }

    pub fn is_antiunitary(&self) -> bool {
        self.det() == -1
    }

    pub fn is_diagonal(&self) -> bool {
        self.beta == 0 && self.gamma == 0
    }

    pub fn apply(&self, p: DisplacementIndex) -> DisplacementIndex {
        let (i, j) = (p.i() as u128, p.j() as u128);
        let d = self.d as u128;
        let ni = (self.alpha as u128 * i + self.beta as u128 * j) % d;
        let nj = (self.gamma as u128 * i + self.delta as u128 * j) % d;
        DisplacementIndex::new(ni as i64, nj as i64, self.d)
    }

    pub fn mul(&self, o: &SymplecticMatrix) -> SymplecticMatrix {
        assert_eq!(self.d, o.d);
        let d = self.d as u128;
        let e = |a: u64, b: u64, c: u64, e: u64| {
            ((a as u128 * b as u128 + c as u128 * e as u128) % d) as i64
        };
        SymplecticMatrix::new(
            e(self.alpha, o.alpha, self.beta, o.gamma),
            e(self.alpha, o.beta, self.beta, o.delta),
            e(self.gamma, o.alpha, self.delta, o.gamma),
            e(self.gamma, o.beta, self.delta, o.delta),
            self.d,
        )
        .expect("product of invertible matrices")
    }

    pub fn pow(&self, mut k: u64) -> SymplecticMatrix {
        let mut acc = Self::identity(self.d);
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn order(&self) -> u64 {
        let id = Self::identity(self.d);
        let mut m = *self;
        let mut k = 1;
        while m != id {
            m = m.mul(self);
            k += 1;
        }
        k
    }

    /// All matrices of determinant `±1` modulo `d`, in lexicographic order.
    pub fn enumerate(d: u64) -> Vec<SymplecticMatrix> {
        let mut out = Vec::new();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        if let Ok(m) = Self::new(a as i64, b as i64, c as i64, e as i64, d) {
                            out.push(m);
                        }
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for SymplecticMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{},{}],[{},{}]] mod {}",
            self.alpha, self.beta, self.gamma, self.delta, self.d
        )
    }
}

fn require_odd(d: u64) -> Result<()> {
    if d.is_multiple_of(2) {
        Err(Error::EvenDimension(d))
    } else {
        Ok(())
    }
}

/// Phase exponents of the Weil unitary: `(U_F)_{u,v} = tau^{e(u,v)} / sqrt d`
/// with `e = beta^{-1} (alpha v^2 - 2uv + delta u^2)` for invertible `beta`.
fn weil_exponents(f: &SymplecticMatrix) -> Vec<i64> {
    let d = f.d as i64;
    let binv = mod_inv(f.beta as i64, f.d).expect("beta invertible") as i64;
    let (a, e) = (f.alpha as i64, f.delta as i64);
    let mut out = Vec::with_capacity((d * d) as usize);
    for u in 0..d {
        for v in 0..d {
            let q = (a * v % d * v - 2 * u * v + e * u % d * u).rem_euclid(d);
            out.push(binv * q % d);
        }
    }
    out
}

/// Factorization `F = F1 F2` with both factors having invertible `beta`:
/// `F1 = [[0,-1],[1,x]]`, `F2 = [[x alpha + gamma, x beta + delta], [-alpha, -beta]]`.
fn split_singular_beta(f: &SymplecticMatrix) -> (SymplecticMatrix, SymplecticMatrix) {
    let d = f.d as i64;
    let (a, b, c, e) = (
        f.alpha as i64,
        f.beta as i64,
        f.gamma as i64,
        f.delta as i64,
    );
    let x = (0..d)
        .find(|x| gcd((x * b + e).rem_euclid(d), d) == 1)
        .expect("det ±1 guarantees a suitable x");
    let f1 = SymplecticMatrix::new(0, -1, 1, x, f.d).expect("det 1");
    let f2 = SymplecticMatrix::new(x * a + c, x * b + e, -a, -b, f.d).expect("det of F");
    (f1, f2)
}

/// Unitary `U_F` for `det F = +1` and odd `d`. Diagonal `F` give exact
/// permutation matrices: `diag(a, a^{-1})` sends `e_k` to `e_{ak}`.
pub fn weil_unitary(f: &SymplecticMatrix, prec: Precision) -> Result<ComplexMatrix> {
    require_odd(f.d)?;
    if f.det() != 1 {
        return Err(Error::InvalidArgument(format!(
            "{f} has determinant -1; use clifford_operator for antiunitary elements"
        )));
    }
    let wh = WeylHeisenberg::new(f.d, prec)?;
    Ok(weil_unitary_with(f, &wh))
}

fn weil_unitary_with(f: &SymplecticMatrix, wh: &WeylHeisenberg) -> ComplexMatrix {
    let d = f.d as usize;
    let prec = wh.precision();
    if f.is_diagonal() {
        let mut m = ComplexMatrix::zeros(d, prec);
        for k in 0..d {
            m.set((f.alpha as usize * k) % d, k, PrecComplex::one(prec));
        }
        return m;
    }
    if gcd(f.beta as i64, f.d as i64) == 1 {
        let scale = PrecReal::one(prec) / PrecReal::from_i64(d as i64, prec).sqrt();
        let data = weil_exponents(f)
            .into_iter()
            .map(|e| wh.tau(e).scale(&scale))
            .collect();
        return ComplexMatrix::from_rows(d, data);
    }
    let (f1, f2) = split_singular_beta(f);
    weil_unitary_with(&f1, wh).mul(&weil_unitary_with(&f2, wh))
}

/// A Clifford operator `v ↦ U (conj v)` (antiunitary) or `v ↦ U v`.
#[derive(Clone, Debug)]
pub struct CliffordOperator {
    pub unitary: ComplexMatrix,
    pub antiunitary: bool,
}

impl CliffordOperator {
    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        if self.antiunitary {
            self.unitary.apply(&v.conj())
        } else {
            self.unitary.apply(v)
        }
    }
}

pub fn clifford_operator(f: &SymplecticMatrix, prec: Precision) -> Result<CliffordOperator> {
    require_odd(f.d)?;
    let wh = WeylHeisenberg::new(f.d, prec)?;
    Ok(clifford_operator_with(f, &wh))
}

fn clifford_operator_with(f: &SymplecticMatrix, wh: &WeylHeisenberg) -> CliffordOperator {
    if f.is_antiunitary() {
        let fj = f.mul(&SymplecticMatrix::conjugation(f.d));
        CliffordOperator {
            unitary: weil_unitary_with(&fj, wh),
            antiunitary: true,
        }
    } else {
        CliffordOperator {
            unitary: weil_unitary_with(f, wh),
            antiunitary: false,
        }
    }
}

/// `max_p` distance, up to a fitted unimodular phase, between
/// `U D_p U^†` and `D_{Fp}`.
pub fn covariance_residual(f: &SymplecticMatrix, u: &ComplexMatrix) -> Result<PrecReal> {
    let wh = WeylHeisenberg::new(f.d, u.precision())?;
    let ud = u.adjoint();
    let worst = DisplacementIndex::all(f.d)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|p| {
            let lhs = u.mul(&wh.matrix(p).expect("dense")).mul(&ud);
            let rhs = wh.matrix(f.apply(p)).expect("dense");
            lhs.distance_up_to_phase(&rhs).0
        })
        .reduce_with(PrecReal::max)
        .expect("d >= 2");
    Ok(worst)
}

/// A permutation of `{0, .., n-1}` given by its image table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn image(&self, k: usize) -> usize {
        self.map[k]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(k, &v)| k == v)
    }

    /// Non-trivial cycles, each starting from its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.map.len()];
        let mut out = Vec::new();
        for start in 0..self.map.len() {
            if seen[start] || self.map[start] == start {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut k = self.map[start];
            while k != start {
                seen[k] = true;
                cycle.push(k);
                k = self.map[k];
            }
            out.push(cycle);
        }
        out
    }

    pub fn order(&self) -> u64 {
        self.cycles()
            .iter()
            .fold(1u64, |acc, c| num_integer::lcm(acc, c.len() as u64))
    }
}

/// `j ↦ theta j mod d`, the component relabelling carried out by the
/// permutation matrix of `diag(theta^{-1}, theta)`.
pub fn permutation_of_diagonal(theta: i64, d: u64) -> Result<Permutation> {
    if d == 0 || gcd(theta.rem_euclid(d as i64), d as i64) != 1 {
        return Err(Error::NotCoprime {
            value: theta,
            modulus: d,
        });
    }
    let t = theta.rem_euclid(d as i64) as u64;
    let map = (0..d).map(|j| ((t * j) % d) as usize).collect();
    Ok(Permutation { map })
}

/// A stabilizing Clifford element `v ↦ D_shift U_matrix v` (with complex
/// conjugation first when the matrix has determinant `-1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymmetryElement {
    pub shift: DisplacementIndex,
    pub matrix: SymplecticMatrix,
}

impl SymmetryElement {
    pub fn identity(d: u64) -> Self {
        SymmetryElement {
            shift: DisplacementIndex::new(0, 0, d),
            matrix: SymplecticMatrix::identity(d),
        }
    }

    /// Composition `self ∘ other`, up to phase.
    pub fn compose(&self, other: &SymmetryElement) -> SymmetryElement {
        SymmetryElement {
            shift: self.shift.add(self.matrix.apply(other.shift)),
            matrix: self.matrix.mul(&other.matrix),
        }
    }

    pub fn is_antiunitary(&self) -> bool {
        self.matrix.is_antiunitary()
    }
}

impl fmt::Display for SymmetryElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{} U{}", self.shift, self.matrix)
    }
}

/// Subgroup generated by `gens`.
fn closure(gens: &[SymmetryElement], d: u64) -> BTreeSet<SymmetryElement> {
    let mut group = BTreeSet::new();
    group.insert(SymmetryElement::identity(d));
    let mut frontier: Vec<SymmetryElement> = group.iter().copied().collect();
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = x.compose(g);
            if group.insert(y) {
                frontier.push(y);
            }
        }
    }
    group
}

#[derive(Clone, Debug)]
pub struct SymmetryReport {
    /// Every stabilizing element found, sorted.
    pub elements: Vec<SymmetryElement>,
    pub generators: Vec<SymmetryElement>,
    pub order: usize,
    /// Order of the unitary (determinant `+1`) part.
    pub unitary_order: usize,
    pub has_antiunitary: bool,
    pub zauner_divisible: bool,
    /// Whether the whole of `GL(2, Z_d)` was searched.
    pub exhaustive: bool,
}

/// Search settings for [`detect_symmetries`].
#[derive(Clone, Copy, Debug)]
pub struct SymmetrySearch {
    /// Largest `d` searched exhaustively.
    pub exhaustive_limit: u64,
    /// Primitive root and `ℓ` for the targeted search above the limit.
    pub theta: Option<u64>,
    pub ell: Option<u64>,
    /// Residual tolerance is `10^(guard - precision)`.
    pub guard_digits: i32,
}

impl Default for SymmetrySearch {
    fn default() -> Self {
        SymmetrySearch {
            exhaustive_limit: 19,
            theta: None,
            ell: None,
            guard_digits: 15,
        }
    }
}

fn targeted_candidates(d: u64, theta: u64, ell: u64) -> Result<Vec<SymplecticMatrix>> {
    if ell == 0 || !(d - 1).is_multiple_of(3 * ell) {
        return Err(Error::InvalidArgument(format!(
            "3*ell = {} does not divide d - 1 = {}",
            3 * ell,
            d - 1
        )));
    }
    let c = SymplecticMatrix::diagonal(theta as i64, d)?;
    let g = c.pow((d - 1) / (3 * ell));
    let j = SymplecticMatrix::conjugation(d);
    let mut out = Vec::new();
    for k in 0..3 * ell {
        let gk = g.pow(k);
        out.push(gk);
        out.push(gk.mul(&j));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn to_fast(v: &ComplexVector) -> Vec<C64> {
    v.iter()
        .map(|z| {
            let (re, im) = z.to_f64_pair();
            C64::new(re, im)
        })
        .collect()
}

/// Double-precision image of `v` under the Clifford operator of `f`.
fn fast_operator_apply(f: &SymplecticMatrix, v: &[C64], wh: &FastWh) -> Vec<C64> {
    let d = f.d as usize;
    let input: Vec<C64> = if f.is_antiunitary() {
        v.iter().map(|z| z.conj()).collect()
    } else {
        v.to_vec()
    };
    let g = if f.is_antiunitary() {
        f.mul(&SymplecticMatrix::conjugation(f.d))
    } else {
        *f
    };
    fast_unitary_apply(&g, &input, wh, d)
}

fn fast_unitary_apply(g: &SymplecticMatrix, v: &[C64], wh: &FastWh, d: usize) -> Vec<C64> {
    if g.is_diagonal() {
        let mut out = vec![C64::new(0.0, 0.0); d];
        for (k, z) in v.iter().enumerate() {
            out[(g.alpha as usize * k) % d] = *z;
        }
        return out;
    }
    if gcd(g.beta as i64, g.d as i64) == 1 {
        let s = 1.0 / (d as f64).sqrt();
        let ex = weil_exponents(g);
        return (0..d)
            .map(|u| {
                let mut acc = C64::new(0.0, 0.0);
                for (vv, z) in v.iter().enumerate() {
                    acc += wh.tau(ex[u * d + vv]) * z;
                }
                acc * s
            })
            .collect();
    }
    let (f1, f2) = split_singular_beta(g);
    let inner = fast_unitary_apply(&f2, v, wh, d);
    fast_unitary_apply(&f1, &inner, wh, d)
}

/// Shifts `q` for which `D_q phi` may equal `psi` up to phase, screened in
/// double precision.
fn fast_shift_matches(psi: &[C64], phi: &[C64], wh: &FastWh) -> Vec<DisplacementIndex> {
    let d = psi.len() as i64;
    let mod_psi: Vec<f64> = psi.iter().map(|z| z.norm()).collect();
    let mod_phi: Vec<f64> = phi.iter().map(|z| z.norm()).collect();
    let mut out = Vec::new();
    for i in 0..d {
        // (D_{i,j} phi)_k has modulus |phi_{k-i}|
        let ok = (0..d).all(|k| (mod_psi[k as usize] - mod_phi[(k - i).rem_euclid(d) as usize]).abs() < 1e-6);
        if !ok {
            continue;
        }
        let c: Vec<C64> = (0..d)
            .map(|k| psi[k as usize].conj() * phi[(k - i).rem_euclid(d) as usize])
            .collect();
        for j in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for (k, ck) in c.iter().enumerate() {
                acc += wh.omega(j * (k as i64 - i)) * ck;
            }
            if acc.norm() > 1.0 - 1e-6 {
                out.push(DisplacementIndex::new(i, j, d as u64));
            }
        }
    }
    out
}

/// `D_q op(psi) = lambda psi`, checked at full precision with the phase
/// fitted at the largest component of `psi`.
fn confirm(
    psi: &ComplexVector,
    elem: &SymmetryElement,
    wh: &WeylHeisenberg,
    tol: &PrecReal,
) -> bool {
    let op = clifford_operator_with(&elem.matrix, wh);
    let image = wh.apply(elem.shift, &op.apply(psi));
    let k = psi.argmax_abs();
    let lambda = &image[k] / &psi[k];
    let residual = image.max_abs_diff(&psi.scale(&lambda));
    residual < *tol && (lambda.abs() - PrecReal::one(lambda.precision())).abs() < *tol
}

/// Stabilizer of `fid` inside the extended Clifford group (odd `d`).
pub fn detect_symmetries(fid: &FiducialVector, search: &SymmetrySearch) -> Result<SymmetryReport> {
    fid.require_normalized()?;
    let d = fid.dim() as u64;
    require_odd(d)?;
    let std = fid.to_standard();
    let psi = std.entries();
    let prec = psi.precision();
    let tol = prec.tolerance(search.guard_digits);

    let exhaustive = d <= search.exhaustive_limit;
    let candidates = if exhaustive {
        SymplecticMatrix::enumerate(d)
    } else {
        match (search.theta, search.ell) {
            (Some(theta), Some(ell)) => targeted_candidates(d, theta, ell)?,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "d = {d} exceeds the exhaustive limit; theta and ell are required"
                )))
            }
        }
    };

    let fast = FastWh::new(d as usize);
    let psi64 = to_fast(psi);
    let wh = WeylHeisenberg::new(d, prec)?;
    let mut elements: Vec<SymmetryElement> = candidates
        .par_iter()
        .flat_map_iter(|f| {
            let phi = fast_operator_apply(f, &psi64, &fast);
            fast_shift_matches(&psi64, &phi, &fast)
                .into_iter()
                .map(move |shift| SymmetryElement { shift, matrix: *f })
        })
        .filter(|e| confirm(psi, e, &wh, &tol))
        .collect();
    elements.sort();

    let mut generators: Vec<SymmetryElement> = Vec::new();
    let mut generated = closure(&generators, d);
    for e in &elements {
        if !generated.contains(e) {
            generators.push(*e);
            generated = closure(&generators, d);
        }
    }

    let order = elements.len();
    let unitary_order = elements.iter().filter(|e| !e.is_antiunitary()).count();
    Ok(SymmetryReport {
        order,
        unitary_order,
        has_antiunitary: elements.iter().any(SymmetryElement::is_antiunitary),
        zauner_divisible: order.is_multiple_of(3),
        exhaustive,
        generators,
        elements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::multiplicative_order;
    use crate::heisenberg::{hesse_fiducial, Basis};
    use crate::hpnum::{dft, Direction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prec() -> Precision {
        Precision::new(60).unwrap()
    }

    fn random_sl2(d: u64, rng: &mut ChaCha8Rng) -> SymplecticMatrix {
        loop {
            let e: Vec<i64> = (0..4).map(|_| rng.gen_range(0..d as i64)).collect();
            if let Ok(m) = SymplecticMatrix::new(e[0], e[1], e[2], e[3], d) {
                if m.det() == 1 {
                    return m;
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SymplecticMatrix::new(2, 0, 0, 2, 7).is_err());
        assert!(matches!(
            weil_unitary(&SymplecticMatrix::identity(4), prec()),
            Err(Error::EvenDimension(4))
        ));
        assert!(weil_unitary(&SymplecticMatrix::conjugation(5), prec()).is_err());
        assert!(SymplecticMatrix::diagonal(3, 9).is_err());
    }

    #[test]
    fn identity_maps_to_identity() {
        let p = prec();
        let u = weil_unitary(&SymplecticMatrix::identity(5), p).unwrap();
        let (res, _) = u.distance_up_to_phase(&ComplexMatrix::identity(5, p));
        assert!(res < p.tolerance(10));
    }

    #[test]
    fn diagonal_gives_the_expected_permutation() {
        let p = prec();
        let f = SymplecticMatrix::diagonal(3, 7).unwrap();
        let u = weil_unitary(&f, p).unwrap();
        let perm = permutation_of_diagonal(3, 7).unwrap();
        assert_eq!(perm.cycles(), vec![vec![1, 3, 2, 6, 4, 5]]);
        // (U v)_j = v_{3j}
        for j in 0..7 {
            for k in 0..7 {
                let expected = if k == perm.image(j) { 1.0 } else { 0.0 };
                assert!(*u.get(j, k) == PrecComplex::from_f64(expected, 0.0, p));
            }
        }
        assert!(covariance_residual(&f, &u).unwrap() < p.tolerance(20));
    }

    #[test]
    fn fourier_matrix_is_the_dft() {
        let p = prec();
        let u = weil_unitary(&SymplecticMatrix::fourier(5), p).unwrap();
        let mut cols = Vec::new();
        for k in 0..5 {
            cols.push(dft(&ComplexVector::basis(5, k, p), Direction::Forward));
        }
        let mut f = ComplexMatrix::zeros(5, p);
        for (k, col) in cols.iter().enumerate() {
            for r in 0..5 {
                f.set(r, k, col[r].clone());
            }
        }
        let (res, _) = u.distance_up_to_phase(&f);
        assert!(res < p.tolerance(10));
    }

    #[test]
    fn permutation_orders() {
        assert!(permutation_of_diagonal(1, 9).unwrap().is_identity());
        assert_eq!(permutation_of_diagonal(3, 7).unwrap().order(), 6);
        assert_eq!(permutation_of_diagonal(2, 7).unwrap().order(), 3);
        assert!(permutation_of_diagonal(3, 12).is_err());
        for d in [5u64, 7, 11, 13, 19] {
            for t in 1..d as i64 {
                let perm = permutation_of_diagonal(t, d).unwrap();
                assert_eq!(perm.image(0), 0);
                assert_eq!(perm.order(), multiplicative_order(t, d).unwrap());
            }
        }
    }

    #[test]
    fn covariance_on_random_elements() {
        let p = Precision::new(40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [3u64, 5, 7, 9] {
            for _ in 0..6 {
                let f = random_sl2(d, &mut rng);
                let u = weil_unitary(&f, p).unwrap();
                assert!(covariance_residual(&f, &u).unwrap() < p.tolerance(20), "{f}");
            }
        }
        // singular beta takes the factorization path
        let f = SymplecticMatrix::new(2, 0, 3, 4, 7).unwrap();
        let u = weil_unitary(&f, p).unwrap();
        assert!(covariance_residual(&f, &u).unwrap() < p.tolerance(20));
    }

    #[test]
    fn homomorphism_up_to_phase() {
        let p = Precision::new(40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [5u64, 7] {
            for _ in 0..5 {
                let f = random_sl2(d, &mut rng);
                let g = random_sl2(d, &mut rng);
                let uf = weil_unitary(&f, p).unwrap();
                let ug = weil_unitary(&g, p).unwrap();
                let ufg = weil_unitary(&f.mul(&g), p).unwrap();
                let (res, _) = uf.mul(&ug).distance_up_to_phase(&ufg);
                assert!(res < p.tolerance(10));
            }
        }
    }

    #[test]
    fn antiunitary_operator_is_covariant() {
        let p = Precision::new(40).unwrap();
        let d = 7;
        let f = SymplecticMatrix::new(1, 2, 3, 5, d).unwrap();
        assert!(f.is_antiunitary());
        let op = clifford_operator(&f, p).unwrap();
        let wh = WeylHeisenberg::new(d, p).unwrap();
        let v = ComplexVector::from_f64_pairs(
            &(0..d).map(|k| (0.3 * k as f64, 1.0 - 0.2 * k as f64)).collect::<Vec<_>>(),
            p,
        )
        .unwrap();
        for q in DisplacementIndex::all(d) {
            // A D_q v = phase D_{Fq} A v
            let lhs = op.apply(&wh.apply(q, &v));
            let rhs = wh.apply(f.apply(q), &op.apply(&v));
            let k = rhs.argmax_abs();
            let lambda = &lhs[k] / &rhs[k];
            assert!(lhs.max_abs_diff(&rhs.scale(&lambda)) < p.tolerance(10));
        }
    }

    #[test]
    fn hesse_stabilizer_is_divisible_by_three() {
        let report = detect_symmetries(&hesse_fiducial(prec()), &SymmetrySearch::default()).unwrap();
        assert!(report.zauner_divisible);
        assert!(report.order.is_multiple_of(3));
        for g in &report.generators {
            let ord = closure(&[*g], 3).len();
            assert_eq!(report.order % ord, 0);
        }
    }

    #[test]
    fn random_vector_has_trivial_stabilizer() {
        let p = prec();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<(f64, f64)> = (0..5).map(|_| (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let fid = FiducialVector::normalized(ComplexVector::from_f64_pairs(&v, p).unwrap(), Basis::Standard);
        let report = detect_symmetries(&fid, &SymmetrySearch::default()).unwrap();
        assert_eq!(report.order, 1);
        assert_eq!(report.elements, vec![SymmetryElement::identity(5)]);
        assert!(report.generators.is_empty());
    }

    #[test]
    fn displaced_fiducial_has_stabilizer_of_equal_order() {
        let p = prec();
        let fid = hesse_fiducial(p);
        let base = detect_symmetries(&fid, &SymmetrySearch::default()).unwrap();
        let wh = WeylHeisenberg::new(3, p).unwrap();
        let moved = FiducialVector::new(wh.apply(DisplacementIndex::new(1, 2, 3), fid.entries()), Basis::Standard);
        let other = detect_symmetries(&moved, &SymmetrySearch::default()).unwrap();
        assert_eq!(base.order, other.order);
        assert_eq!(base.unitary_order, other.unitary_order);
    }
}
