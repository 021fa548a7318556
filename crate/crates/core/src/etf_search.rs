//! Frame-potential minimization for equiangular tight frames and
//! Weyl–Heisenberg covariant SIC fiducials.
//!
//! Each restart runs projected gradient descent in double precision until
//! the error drops below [`NEWTON_SWITCH`], then damped Gauss–Newton
//! (Levenberg–Marquardt) steps, first in double precision and finally at the
//! working precision. Only accepted steps change the iterate, and a step is
//! accepted only if it lowers the objective.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fastwh::{FastWh, C64};
use crate::heisenberg::{Basis, DisplacementIndex, FiducialVector, WeylHeisenberg};
use crate::hpnum::{cholesky_solve, ComplexVector, PrecComplex, PrecReal, Precision};
use crate::symplectic::{clifford_operator, SymplecticMatrix};

/// Error level below which descent hands over to Gauss–Newton steps.
pub const NEWTON_SWITCH: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EtfSpec {
    d: usize,
    n: usize,
}

impl EtfSpec {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidSpec(format!("dimension must be >= 2, got {d}")));
        }
        if n < d || n > d * d {
            return Err(Error::InvalidSpec(format!(
                "N = {n} outside d <= N <= d^2 for d = {d}"
            )));
        }
        Ok(EtfSpec { d, n })
    }

    pub fn sic(d: usize) -> Result<Self> {
        Self::new(d, d * d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_sic(&self) -> bool {
        self.n == self.d * self.d
    }

    /// `N / d`.
    pub fn c1(&self, prec: Precision) -> PrecReal {
        PrecReal::from_ratio(self.n as i64, self.d as i64, prec)
    }

    /// `(N - d) / (d (N - 1))`.
    pub fn c2(&self, prec: Precision) -> PrecReal {
        PrecReal::from_ratio((self.n - self.d) as i64, (self.d * (self.n - 1)) as i64, prec)
    }

    fn c1_f64(&self) -> f64 {
        self.n as f64 / self.d as f64
    }

    fn c2_f64(&self) -> f64 {
        (self.n - self.d) as f64 / (self.d * (self.n - 1)) as f64
    }
}

/// Restriction of an orbit search to vectors fixed by a Clifford element.
/// For a unitary element, `eigenvalue` selects the eigenspace `e(t/k)` of
/// `U_F` normalized so that `U_F^k = 1`, `k` the order of `F`. Antiunitary
/// elements must square to the identity and select their fixed vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymmetryConstraint {
    pub matrix: SymplecticMatrix,
    pub eigenvalue: u64,
}

impl SymmetryConstraint {
    pub fn fixed_by(matrix: SymplecticMatrix) -> Self {
        SymmetryConstraint {
            matrix,
            eigenvalue: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Success means frame error `< 10^(-target_digits)`.
    pub target_digits: u32,
    pub seed: u64,
    pub symmetry: Vec<SymmetryConstraint>,
    pub orbit: bool,
    pub precision: Precision,
    pub newton_iterations: usize,
    pub record_history: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            restarts: 16,
            max_iterations: 4000,
            target_digits: 24,
            seed: 0,
            symmetry: Vec::new(),
            orbit: false,
            precision: Precision::new(40).expect("valid"),
            newton_iterations: 60,
            record_history: false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Candidate {
    Fiducial(FiducialVector),
    Frame(Vec<ComplexVector>),
}

impl Candidate {
    pub fn fiducial(&self) -> Option<&FiducialVector> {
        match self {
            Candidate::Fiducial(f) => Some(f),
            Candidate::Frame(_) => None,
        }
    }

    pub fn vectors(&self) -> Option<&[ComplexVector]> {
        match self {
            Candidate::Frame(v) => Some(v),
            Candidate::Fiducial(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RestartTrace {
    pub restart: usize,
    pub descent_iterations: usize,
    pub descent_error: f64,
    pub newton_error: f64,
    /// Error at working precision after the final polish.
    pub final_error: PrecReal,
    /// Objective after every accepted step, when requested.
    pub history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub candidate: Candidate,
    pub error: PrecReal,
    pub best_restart: usize,
    pub reached_target: bool,
    pub trace: Vec<RestartTrace>,
}

fn check_unit(v: &ComplexVector) -> Result<()> {
    let prec = v.precision();
    let dev = (v.norm() - PrecReal::one(prec)).abs();
    if dev < prec.tolerance(10) {
        Ok(())
    } else {
        Err(Error::NotNormalized(dev.to_f64()))
    }
}

/// `sum_{i<j} (|<psi_i|psi_j>|^2 - c2)^2 + ||sum |psi_i><psi_i| - c1||_F^2`.
pub fn frame_error(vectors: &[ComplexVector], spec: &EtfSpec) -> Result<PrecReal> {
    if vectors.len() != spec.n {
        return Err(Error::DimensionMismatch {
            expected: spec.n,
            found: vectors.len(),
        });
    }
    for v in vectors {
        if v.dim() != spec.d {
            return Err(Error::DimensionMismatch {
                expected: spec.d,
                found: v.dim(),
            });
        }
        check_unit(v)?;
    }
    let prec = vectors
        .iter()
        .map(ComplexVector::precision)
        .min()
        .expect("N >= 2");
    let flat: Vec<PrecComplex> = vectors.iter().flat_map(|v| v.iter().cloned()).collect();
    Ok(general_residuals(&flat, spec, prec, false).error)
}

/// `sum_{p != 0} (|<Psi|D_p Psi>|^2 - 1/(d+1))^2`.
pub fn orbit_frame_error(fid: &FiducialVector) -> Result<PrecReal> {
    fid.require_normalized()?;
    let std = fid.to_standard();
    let psi = std.entries();
    let wh = WeylHeisenberg::new(psi.dim() as u64, psi.precision())?;
    Ok(orbit_residuals(psi.entries(), &wh, false).error)
}

struct Residuals<T> {
    error: T,
    values: Vec<T>,
    /// Row-major `values.len() x 2n` Jacobian in `(re, im)` coordinates.
    jacobian: Vec<T>,
}

fn orbit_residuals(psi: &[PrecComplex], wh: &WeylHeisenberg, jac: bool) -> Residuals<PrecReal> {
    let d = wh.dim();
    let prec = wh.precision();
    let v = ComplexVector::new(psi.to_vec()).expect("d >= 2");
    let c = PrecReal::from_ratio(1, d as i64 + 1, prec);
    let rows: Vec<(PrecReal, Vec<PrecReal>)> = DisplacementIndex::all(d)
        .filter(|p| !p.is_zero())
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|p| {
            let dp = wh.apply(p, &v);
            let a = v.inner(&dp);
            let r = &a.norm_sqr() - &c;
            let mut row = Vec::new();
            if jac {
                let dm = wh.apply(p.neg(), &v);
                let ac = a.conj();
                let two = PrecReal::from_i64(2, prec);
                let g: Vec<PrecComplex> = dp
                    .iter()
                    .zip(dm.iter())
                    .map(|(x, y)| &ac * x + &a * y)
                    .collect();
                row.extend(g.iter().map(|z| &z.re() * &two));
                row.extend(g.iter().map(|z| &z.im() * &two));
            }
            (r, row)
        })
        .collect();
    let mut error = PrecReal::zero(prec);
    for (r, _) in &rows {
        error += &r.square();
    }
    let mut values = Vec::with_capacity(rows.len() + 1);
    let mut jacobian = Vec::new();
    for (r, row) in rows {
        values.push(r);
        jacobian.extend(row);
    }
    values.push(v.norm_sqr() - PrecReal::one(prec));
    if jac {
        let two = PrecReal::from_i64(2, prec);
        jacobian.extend(psi.iter().map(|z| &z.re() * &two));
        jacobian.extend(psi.iter().map(|z| &z.im() * &two));
    }
    Residuals {
        error,
        values,
        jacobian,
    }
}

/// Residuals for `N` vectors stored consecutively in `z`. Rows: pairs
/// `i < j`, then the Hermitian tightness defect (diagonal, then `sqrt 2`
/// times real and imaginary parts above the diagonal), then norms.
fn general_residuals(
    z: &[PrecComplex],
    spec: &EtfSpec,
    prec: Precision,
    jac: bool,
) -> Residuals<PrecReal> {
    let (d, n) = (spec.d, spec.n);
    let dim = d * n;
    let zero = PrecReal::zero(prec);
    let czero = PrecComplex::zero(prec);
    let c1 = spec.c1(prec);
    let c2 = spec.c2(prec);
    let two = PrecReal::from_i64(2, prec);
    let sqrt2 = two.sqrt();
    let vec_of = |i: usize| &z[i * d..(i + 1) * d];
    let inner = |a: &[PrecComplex], b: &[PrecComplex]| {
        let mut acc = czero.clone();
        for (x, y) in a.iter().zip(b) {
            acc += &(x.conj() * y);
        }
        acc
    };
    let mut values = Vec::new();
    let mut jacobian = Vec::new();
    let mut error = zero.clone();
    // Wirtinger gradient (d/d conj z) of one real residual, as a sparse list
    let mut push_row = |values: &mut Vec<PrecReal>, r: PrecReal, grad: Vec<(usize, PrecComplex)>| {
        if jac {
            let mut row = vec![zero.clone(); 2 * dim];
            for (k, g) in grad {
                row[k] = &row[k] + &(&g.re() * &two);
                row[dim + k] = &row[dim + k] + &(&g.im() * &two);
            }
            jacobian.extend(row);
        }
        values.push(r);
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let g = inner(vec_of(i), vec_of(j));
            let r = &g.norm_sqr() - &c2;
            error += &r.square();
            let mut grad = Vec::new();
            if jac {
                let gc = g.conj();
                for k in 0..d {
                    grad.push((i * d + k, &gc * &z[j * d + k]));
                    grad.push((j * d + k, &g * &z[i * d + k]));
                }
            }
            push_row(&mut values, r, grad);
        }
    }
    let entry = |a: usize, b: usize| {
        let mut acc = czero.clone();
        for i in 0..n {
            acc += &(&z[i * d + a] * &z[i * d + b].conj());
        }
        acc
    };
    let half = PrecReal::from_ratio(1, 2, prec);
    for a in 0..d {
        let r = &entry(a, a).re() - &c1;
        error += &r.square();
        let grad = if jac {
            (0..n).map(|i| (i * d + a, z[i * d + a].clone())).collect()
        } else {
            Vec::new()
        };
        push_row(&mut values, r, grad);
    }
    let minus_i_half = PrecComplex::new(&zero, &-&half);
    for a in 0..d {
        for b in (a + 1)..d {
            let m = entry(a, b);
            let (re, im) = (m.re(), m.im());
            error += &(&two * &(&re.square() + &im.square()));
            let mut gre = Vec::new();
            let mut gim = Vec::new();
            if jac {
                for i in 0..n {
                    let (za, zb) = (&z[i * d + a], &z[i * d + b]);
                    gre.push((i * d + b, za.scale(&(&half * &sqrt2))));
                    gre.push((i * d + a, zb.scale(&(&half * &sqrt2))));
                    gim.push((i * d + b, (za * &minus_i_half).scale(&sqrt2)));
                    gim.push((i * d + a, (-(zb * &minus_i_half)).scale(&sqrt2)));
                }
            }
            push_row(&mut values, &re * &sqrt2, gre);
            push_row(&mut values, &im * &sqrt2, gim);
        }
    }
    for i in 0..n {
        let r = &inner(vec_of(i), vec_of(i)).re() - &PrecReal::one(prec);
        let grad = if jac {
            (0..d).map(|k| (i * d + k, z[i * d + k].clone())).collect()
        } else {
            Vec::new()
        };
        push_row(&mut values, r, grad);
    }
    Residuals {
        error,
        values,
        jacobian,
    }
}

fn orbit_residuals_fast(psi: &[C64], wh: &FastWh, jac: bool) -> Residuals<f64> {
    let d = psi.len() as i64;
    let c = 1.0 / (d as f64 + 1.0);
    let mut values = Vec::with_capacity((d * d) as usize);
    let mut jacobian = Vec::new();
    let mut error = 0.0;
    let mut dp = vec![C64::new(0.0, 0.0); d as usize];
    let mut dm = vec![C64::new(0.0, 0.0); d as usize];
    for i in 0..d {
        for j in 0..d {
            if i == 0 && j == 0 {
                continue;
            }
            wh.apply_into(i, j, psi, &mut dp);
            let a: C64 = psi.iter().zip(&dp).map(|(x, y)| x.conj() * y).sum();
            let r = a.norm_sqr() - c;
            error += r * r;
            values.push(r);
            if jac {
                wh.apply_into(-i, -j, psi, &mut dm);
                let ac = a.conj();
                let start = jacobian.len();
                jacobian.resize(start + 2 * d as usize, 0.0);
                for k in 0..d as usize {
                    let g = ac * dp[k] + a * dm[k];
                    jacobian[start + k] = 2.0 * g.re;
                    jacobian[start + d as usize + k] = 2.0 * g.im;
                }
            }
        }
    }
    values.push(psi.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0);
    if jac {
        jacobian.extend(psi.iter().map(|z| 2.0 * z.re));
        jacobian.extend(psi.iter().map(|z| 2.0 * z.im));
    }
    Residuals {
        error,
        values,
        jacobian,
    }
}

fn general_residuals_fast(z: &[C64], spec: &EtfSpec, jac: bool) -> Residuals<f64> {
    let (d, n) = (spec.d, spec.n);
    let dim = d * n;
    let (c1, c2) = (spec.c1_f64(), spec.c2_f64());
    let s2 = std::f64::consts::SQRT_2;
    let mut values = Vec::new();
    let mut jacobian = Vec::new();
    let mut error = 0.0;
    let mut push_row = |values: &mut Vec<f64>, r: f64, grad: &[(usize, C64)]| {
        if jac {
            let start = jacobian.len();
            jacobian.resize(start + 2 * dim, 0.0);
            for (k, g) in grad {
                jacobian[start + k] += 2.0 * g.re;
                jacobian[start + dim + k] += 2.0 * g.im;
            }
        }
        values.push(r);
    };
    let inner = |i: usize, j: usize| -> C64 {
        (0..d).map(|k| z[i * d + k].conj() * z[j * d + k]).sum()
    };
    let mut grad = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let g = inner(i, j);
            let r = g.norm_sqr() - c2;
            error += r * r;
            grad.clear();
            if jac {
                for k in 0..d {
                    grad.push((i * d + k, g.conj() * z[j * d + k]));
                    grad.push((j * d + k, g * z[i * d + k]));
                }
            }
            push_row(&mut values, r, &grad);
        }
    }
    let entry = |a: usize, b: usize| -> C64 { (0..n).map(|i| z[i * d + a] * z[i * d + b].conj()).sum() };
    for a in 0..d {
        let r = entry(a, a).re - c1;
        error += r * r;
        grad.clear();
        if jac {
            grad.extend((0..n).map(|i| (i * d + a, z[i * d + a])));
        }
        push_row(&mut values, r, &grad);
    }
    let mi_half = C64::new(0.0, -0.5);
    for a in 0..d {
        for b in (a + 1)..d {
            let m = entry(a, b);
            error += 2.0 * m.norm_sqr();
            grad.clear();
            if jac {
                for i in 0..n {
                    let (za, zb) = (z[i * d + a], z[i * d + b]);
                    grad.push((i * d + b, za * (0.5 * s2)));
                    grad.push((i * d + a, zb * (0.5 * s2)));
                }
            }
            push_row(&mut values, m.re * s2, &grad);
            grad.clear();
            if jac {
                for i in 0..n {
                    let (za, zb) = (z[i * d + a], z[i * d + b]);
                    grad.push((i * d + b, za * mi_half * s2));
                    grad.push((i * d + a, -(zb * mi_half) * s2));
                }
            }
            push_row(&mut values, m.im * s2, &grad);
        }
    }
    for i in 0..n {
        let r = inner(i, i).re - 1.0;
        grad.clear();
        if jac {
            grad.extend((0..d).map(|k| (i * d + k, z[i * d + k])));
        }
        push_row(&mut values, r, &grad);
    }
    Residuals {
        error,
        values,
        jacobian,
    }
}

/// Real-linear projector onto the vectors satisfying every constraint, as a
/// `2d x 2d` matrix in `(re, im)` coordinates.
#[derive(Clone, Debug)]
struct Projector {
    size: usize,
    hp: Vec<PrecReal>,
    lo: Vec<f64>,
}

impl Projector {
    fn build(d: usize, constraints: &[SymmetryConstraint], prec: Precision) -> Result<Option<Self>> {
        if constraints.is_empty() {
            return Ok(None);
        }
        let size = 2 * d;
        let mut total: Option<Vec<PrecReal>> = None;
        for c in constraints {
            if c.matrix.modulus() != d as u64 {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.matrix.modulus() as usize,
                });
            }
            let p = constraint_projector(d, c, prec)?;
            total = Some(match total {
                None => p,
                Some(t) => real_matmul(&p, &t, size),
            });
        }
        let hp = total.expect("non-empty");
        let sq = real_matmul(&hp, &hp, size);
        let defect = sq
            .iter()
            .zip(&hp)
            .map(|(a, b)| (a - b).abs().to_f64())
            .fold(0.0, f64::max);
        if defect > 1e-12 {
            return Err(Error::InvalidArgument(
                "symmetry constraints do not commute; their projectors do not combine".into(),
            ));
        }
        let lo = hp.iter().map(PrecReal::to_f64).collect();
        Ok(Some(Projector { size, hp, lo }))
    }

    fn rank(&self) -> usize {
        (0..self.size).map(|k| self.lo[k * self.size + k]).sum::<f64>().round() as usize
    }

    fn apply_lo(&self, z: &mut [C64]) {
        let d = z.len();
        let x: Vec<f64> = z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect();
        for k in 0..d {
            let row = |r: usize| -> f64 {
                self.lo[r * self.size..(r + 1) * self.size]
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| a * b)
                    .sum()
            };
            z[k] = C64::new(row(k), row(d + k));
        }
    }

    fn apply_hp(&self, z: &[PrecComplex]) -> Vec<PrecComplex> {
        let d = z.len();
        let x: Vec<PrecReal> = z.iter().map(PrecComplex::re).chain(z.iter().map(PrecComplex::im)).collect();
        let row = |r: usize| {
            let mut acc = PrecReal::zero(x[0].precision());
            for (a, b) in self.hp[r * self.size..(r + 1) * self.size].iter().zip(&x) {
                acc += &(a * b);
            }
            acc
        };
        (0..d).map(|k| PrecComplex::new(&row(k), &row(d + k))).collect()
    }

    /// `J <- J P` for a row-major Jacobian with `size` columns.
    fn project_rows_lo(&self, jac: &mut [f64]) {
        let s = self.size;
        for row in jac.chunks_mut(s) {
            let new: Vec<f64> = (0..s)
                .map(|c| (0..s).map(|k| row[k] * self.lo[k * s + c]).sum())
                .collect();
            row.copy_from_slice(&new);
        }
    }

    fn project_rows_hp(&self, jac: &mut [PrecReal]) {
        let s = self.size;
        for row in jac.chunks_mut(s) {
            let new: Vec<PrecReal> = (0..s)
                .map(|c| {
                    let mut acc = PrecReal::zero(row[0].precision());
                    for k in 0..s {
                        acc += &(&row[k] * &self.hp[k * s + c]);
                    }
                    acc
                })
                .collect();
            row.clone_from_slice(&new);
        }
    }
}

fn real_matmul(a: &[PrecReal], b: &[PrecReal], n: usize) -> Vec<PrecReal> {
    let prec = a[0].precision();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = PrecReal::zero(prec);
            for k in 0..n {
                acc += &(&a[r * n + k] * &b[k * n + c]);
            }
            out.push(acc);
        }
    }
    out
}

fn constraint_projector(d: usize, c: &SymmetryConstraint, prec: Precision) -> Result<Vec<PrecReal>> {
    let op = clifford_operator(&c.matrix, prec)?;
    let u = op.unitary;
    let n = 2 * d;
    let mut out = vec![PrecReal::zero(prec); n * n];
    let half = PrecReal::from_ratio(1, 2, prec);
    if op.antiunitary {
        // v -> U conj(v); requires U conj(U) = 1
        let sq = u.mul(&u.conj());
        let (res, phase) = sq.distance_up_to_phase(&crate::hpnum::ComplexMatrix::identity(d, prec));
        let one = PrecComplex::one(prec);
        if res > prec.tolerance(10) || (&phase - &one).abs() > prec.tolerance(10) {
            return Err(Error::InvalidArgument(format!(
                "antiunitary constraint {} is not an involution",
                c.matrix
            )));
        }
        for r in 0..d {
            for k in 0..d {
                let z = u.get(r, k);
                let (a, b) = (z.re(), z.im());
                let id = if r == k { PrecReal::one(prec) } else { PrecReal::zero(prec) };
                // (1 + [[A, B], [B, -A]]) / 2
                out[r * n + k] = &(&id + &a) * &half;
                out[r * n + d + k] = &b * &half;
                out[(d + r) * n + k] = &b * &half;
                out[(d + r) * n + d + k] = &(&id - &a) * &half;
            }
        }
        return Ok(out);
    }
    let k = c.matrix.order();
    // normalize so that U^k = 1
    let mut power = crate::hpnum::ComplexMatrix::identity(d, prec);
    for _ in 0..k {
        power = power.mul(&u);
    }
    let (_, c_phase) = power.distance_up_to_phase(&crate::hpnum::ComplexMatrix::identity(d, prec));
    let fix = PrecComplex::from_polar(&PrecReal::one(prec), &(-c_phase.arg() / PrecReal::from_i64(k as i64, prec)));
    let u = u.scale(&fix);
    let mut proj = crate::hpnum::ComplexMatrix::zeros(d, prec);
    let mut power = crate::hpnum::ComplexMatrix::identity(d, prec);
    let inv_k = PrecReal::from_ratio(1, k as i64, prec);
    for s in 0..k {
        let w = crate::hpnum::root_of_unity(k, -((c.eigenvalue * s) as i64), prec).scale(&inv_k);
        for r in 0..d {
            for col in 0..d {
                let v = proj.get(r, col) + &(power.get(r, col) * &w);
                proj.set(r, col, v);
            }
        }
        power = power.mul(&u);
    }
    for r in 0..d {
        for col in 0..d {
            let z = proj.get(r, col);
            let (a, b) = (z.re(), z.im());
            out[r * n + col] = a.clone();
            out[r * n + d + col] = -&b;
            out[(d + r) * n + col] = b;
            out[(d + r) * n + d + col] = a;
        }
    }
    Ok(out)
}

fn normalize_blocks_lo(z: &mut [C64], d: usize) {
    for block in z.chunks_mut(d) {
        let n = block.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            block.iter_mut().for_each(|c| *c /= n);
        }
    }
}

fn normalize_blocks_hp(z: &mut [PrecComplex], d: usize) {
    for block in z.chunks_mut(d) {
        let mut n = PrecReal::zero(block[0].precision());
        for c in block.iter() {
            n += &c.norm_sqr();
        }
        let inv = PrecReal::one(n.precision()) / n.sqrt();
        for c in block.iter_mut() {
            *c = c.scale(&inv);
        }
    }
}

struct Problem<'a> {
    spec: EtfSpec,
    orbit: bool,
    fast: Option<FastWh>,
    projector: Option<&'a Projector>,
}

impl Problem<'_> {
    fn residuals_lo(&self, z: &[C64], jac: bool) -> Residuals<f64> {
        let mut r = if self.orbit {
            orbit_residuals_fast(z, self.fast.as_ref().expect("orbit"), jac)
        } else {
            general_residuals_fast(z, &self.spec, jac)
        };
        if jac {
            if let Some(p) = self.projector {
                p.project_rows_lo(&mut r.jacobian);
            }
        }
        r
    }

    fn block(&self) -> usize {
        self.spec.d
    }

    fn restrict_lo(&self, z: &mut [C64]) {
        if let Some(p) = self.projector {
            p.apply_lo(z);
        }
        normalize_blocks_lo(z, self.block());
    }

    /// Objective-decreasing descent; returns iterations used.
    fn descend(&self, z: &mut Vec<C64>, max_iter: usize, history: &mut Option<Vec<f64>>) -> (usize, f64) {
        let dim = z.len();
        let mut f = self.residuals_lo(z, true);
        let mut step = 0.05;
        let mut iters = 0;
        while iters < max_iter && f.error > NEWTON_SWITCH && step > 1e-14 {
            iters += 1;
            let cols = 2 * dim;
            let frame_rows = f.values.len() - if self.orbit { 1 } else { self.spec.n };
            let mut grad = vec![0.0; cols];
            for (row, r) in f.jacobian.chunks(cols).zip(&f.values).take(frame_rows) {
                for (g, j) in grad.iter_mut().zip(row) {
                    *g += 2.0 * r * j;
                }
            }
            let trial: Vec<C64> = (0..dim)
                .map(|k| z[k] - C64::new(grad[k], grad[dim + k]) * step)
                .collect();
            let mut trial = trial;
            self.restrict_lo(&mut trial);
            let g = self.residuals_lo(&trial, true);
            if g.error < f.error {
                *z = trial;
                f = g;
                step *= 1.3;
                if let Some(h) = history {
                    h.push(f.error);
                }
            } else {
                step *= 0.5;
            }
        }
        (iters, f.error)
    }

    fn newton_lo(&self, z: &mut Vec<C64>, iterations: usize, history: &mut Option<Vec<f64>>) -> f64 {
        let dim = z.len();
        let cols = 2 * dim;
        let mut f = self.residuals_lo(z, true);
        let mut boost = 1.0;
        for _ in 0..iterations {
            if f.error < 1e-30 {
                break;
            }
            let rows = f.values.len();
            let jm = DMatrix::from_row_slice(rows, cols, &f.jacobian);
            let rv = DVector::from_column_slice(&f.values);
            let rnorm = rv.norm();
            let mut a = jm.transpose() * &jm;
            let lambda = boost * rnorm;
            for k in 0..cols {
                a[(k, k)] += lambda;
            }
            let b = -(jm.transpose() * rv);
            let Some(ch) = a.cholesky() else {
                boost *= 10.0;
                continue;
            };
            let delta = ch.solve(&b);
            let mut trial: Vec<C64> = (0..dim)
                .map(|k| z[k] + C64::new(delta[k], delta[dim + k]))
                .collect();
            self.restrict_lo(&mut trial);
            let g = self.residuals_lo(&trial, true);
            if g.error < f.error {
                *z = trial;
                f = g;
                boost = (boost * 0.3).max(1e-3);
                if let Some(h) = history {
                    h.push(f.error);
                }
            } else {
                boost *= 10.0;
                if boost > 1e12 {
                    break;
                }
            }
        }
        f.error
    }
}

/// Damped Gauss–Newton at working precision. `residuals` returns the
/// residual vector, the Jacobian and the frame error.
fn newton_hp(
    z: Vec<PrecComplex>,
    block: usize,
    iterations: usize,
    projector: Option<&Projector>,
    residuals: &(dyn Fn(&[PrecComplex], bool) -> Residuals<PrecReal> + Sync),
) -> (Vec<PrecComplex>, PrecReal) {
    let prec = z[0].precision();
    let dim = z.len();
    let cols = 2 * dim;
    let restrict = |mut v: Vec<PrecComplex>| {
        if let Some(p) = projector {
            v = p.apply_hp(&v);
        }
        normalize_blocks_hp(&mut v, block);
        v
    };
    let mut z = restrict(z);
    let mut f = residuals(&z, true);
    if let Some(p) = projector {
        p.project_rows_hp(&mut f.jacobian);
    }
    let floor = prec.tolerance(0).square();
    let mut boost = PrecReal::one(prec);
    for _ in 0..iterations {
        if f.error < floor {
            break;
        }
        let rows = f.values.len();
        let mut a = vec![PrecReal::zero(prec); cols * cols];
        let mut b = vec![PrecReal::zero(prec); cols];
        let mut rnorm = PrecReal::zero(prec);
        for r in 0..rows {
            let row = &f.jacobian[r * cols..(r + 1) * cols];
            let v = &f.values[r];
            rnorm += &v.square();
            for i in 0..cols {
                if row[i].is_zero() {
                    continue;
                }
                b[i] = &b[i] - &(&row[i] * v);
                for j in i..cols {
                    a[i * cols + j] += &(&row[i] * &row[j]);
                }
            }
        }
        let lambda = &boost * &rnorm.sqrt();
        for i in 0..cols {
            a[i * cols + i] += &lambda;
            for j in 0..i {
                a[i * cols + j] = a[j * cols + i].clone();
            }
        }
        let Some(delta) = cholesky_solve(&mut a, &b) else {
            boost = &boost * &PrecReal::from_i64(10, prec);
            continue;
        };
        let trial: Vec<PrecComplex> = (0..dim)
            .map(|k| &z[k] + &PrecComplex::new(&delta[k], &delta[dim + k]))
            .collect();
        let trial = restrict(trial);
        let mut g = residuals(&trial, true);
        if let Some(p) = projector {
            p.project_rows_hp(&mut g.jacobian);
        }
        if g.error < f.error {
            z = trial;
            f = g;
            boost = PrecReal::from_ratio(1, 100, prec).max(&boost * &PrecReal::from_ratio(3, 10, prec));
        } else {
            boost = &boost * &PrecReal::from_i64(10, prec);
            if boost > 1e12 {
                break;
            }
        }
    }
    (z, f.error)
}

/// Working-precision Gauss–Newton polish of a fiducial, keeping the given
/// symmetry constraints. Returns the standard-basis result and its error.
pub fn polish_fiducial(
    fid: &FiducialVector,
    constraints: &[SymmetryConstraint],
    prec: Precision,
    iterations: usize,
) -> Result<(FiducialVector, PrecReal)> {
    let d = fid.dim();
    let start = fid.to_standard().with_precision(prec);
    let projector = Projector::build(d, constraints, prec)?;
    let wh = WeylHeisenberg::new(d as u64, prec)?;
    let (z, err) = newton_hp(
        start.entries().entries().to_vec(),
        d,
        iterations,
        projector.as_ref(),
        &|z, jac| orbit_residuals(z, &wh, jac),
    );
    let v = ComplexVector::new(z)?;
    Ok((FiducialVector::normalized(v, Basis::Standard), err))
}

fn random_start(spec: &EtfSpec, orbit: bool, seed: u64, restart: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let len = if orbit { spec.d } else { spec.d * spec.n };
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect()
}

fn to_hp(z: &[C64], prec: Precision) -> Vec<PrecComplex> {
    z.iter().map(|c| PrecComplex::from_f64(c.re, c.im, prec)).collect()
}

/// Multi-restart search. Deterministic for a given seed: restart `r` draws
/// its start from stream `r` of a ChaCha generator seeded with `seed`, and
/// the best restart is the one with the smallest error (lowest index on
/// ties), so adding restarts never worsens the result.
pub fn search(spec: &EtfSpec, opts: &SearchOptions) -> Result<SearchResult> {
    if opts.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    if opts.orbit && !spec.is_sic() {
        return Err(Error::InvalidSpec(format!(
            "orbit mode needs N = d^2, got d = {}, N = {}",
            spec.d, spec.n
        )));
    }
    if !opts.symmetry.is_empty() && !opts.orbit {
        return Err(Error::InvalidArgument("symmetry constraints need orbit mode".into()));
    }
    let prec = opts.precision;
    let projector = Projector::build(spec.d, &opts.symmetry, prec)?;
    if let Some(p) = &projector {
        if p.rank() == 0 {
            return Err(Error::InvalidArgument("symmetry constraints leave only the zero vector".into()));
        }
    }
    let wh = if opts.orbit {
        Some(WeylHeisenberg::new(spec.d as u64, prec)?)
    } else {
        None
    };
    let problem = Problem {
        spec: *spec,
        orbit: opts.orbit,
        fast: opts.orbit.then(|| FastWh::new(spec.d)),
        projector: projector.as_ref(),
    };
    let hp_residuals = |z: &[PrecComplex], jac: bool| match &wh {
        Some(wh) => orbit_residuals(z, wh, jac),
        None => general_residuals(z, spec, prec, jac),
    };

    let runs: Vec<(RestartTrace, Vec<PrecComplex>)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut history = opts.record_history.then(Vec::new);
            let mut z = random_start(spec, opts.orbit, opts.seed, r);
            problem.restrict_lo(&mut z);
            let (iters, descent_error) = problem.descend(&mut z, opts.max_iterations, &mut history);
            let newton_error = problem.newton_lo(&mut z, opts.newton_iterations, &mut history);
            let (zh, final_error) = if newton_error < NEWTON_SWITCH {
                newton_hp(to_hp(&z, prec), spec.d, 20, projector.as_ref(), &hp_residuals)
            } else {
                let mut zh = to_hp(&z, prec);
                if let Some(p) = &projector {
                    zh = p.apply_hp(&zh);
                }
                normalize_blocks_hp(&mut zh, spec.d);
                let e = hp_residuals(&zh, false).error;
                (zh, e)
            };
            (
                RestartTrace {
                    restart: r,
                    descent_iterations: iters,
                    descent_error,
                    newton_error,
                    final_error,
                    history: history.unwrap_or_default(),
                },
                zh,
            )
        })
        .collect();

    let (best_idx, _) = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, &PrecReal)>, |acc, (k, (t, _))| match acc {
            Some((_, e)) if !(t.final_error < *e) => acc,
            _ => Some((k, &t.final_error)),
        })
        .expect("restarts >= 1");
    let (trace, vectors): (Vec<RestartTrace>, Vec<Vec<PrecComplex>>) = runs.into_iter().unzip();
    let best = vectors.into_iter().nth(best_idx).expect("index");
    let error = trace[best_idx].final_error.clone();
    let candidate = if opts.orbit {
        Candidate::Fiducial(FiducialVector::normalized(ComplexVector::new(best)?, Basis::Standard))
    } else {
        Candidate::Frame(
            best.chunks(spec.d)
                .map(|c| ComplexVector::new(c.to_vec()).map(|v| v.normalized()))
                .collect::<Result<_>>()?,
        )
    };
    Ok(SearchResult {
        candidate,
        reached_target: error < PrecReal::pow10(-(opts.target_digits as i32), prec),
        error,
        best_restart: best_idx,
        trace,
    })
}
