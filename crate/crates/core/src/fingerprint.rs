//! From a numerical fiducial to algebraic data: the almost-flat Fourier
//! form, the unit-circle phases `u_j = a_j^2 / (-2 - sqrt(d+1))`, their
//! orbit structure under `j ↦ theta j`, and integer minimal polynomials
//! recovered by lattice reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use rug::Float;

use crate::arith::{is_prime, mod_pow, multiplicative_order};
use crate::error::{Error, Result};
use crate::heisenberg::FiducialVector;
use crate::hpnum::{root_of_unity, PrecComplex, PrecReal, Precision};
use crate::quadfield::{dimension_form, primitive_root};

/// Fourier-basis fiducial rescaled so that `a_0 = -(2 + sqrt(d+1))`.
#[derive(Clone, Debug)]
pub struct AlmostFlatVector {
    pub d: usize,
    /// All components, `a[0]` the distinguished one.
    pub a: Vec<PrecComplex>,
    pub flatness_residual: PrecReal,
    pub ratio_residual: PrecReal,
    /// Fourier index moved to position 0.
    pub translation: usize,
    /// `a_j` was multiplied by `omega^{ramp j}`.
    pub ramp: usize,
}

impl AlmostFlatVector {
    pub fn a0(&self) -> &PrecComplex {
        &self.a[0]
    }

    pub fn tail(&self) -> &[PrecComplex] {
        &self.a[1..]
    }

    pub fn precision(&self) -> Precision {
        self.a[0].precision()
    }
}

/// `2 + sqrt(d+1)`.
pub fn flat_scale(d: usize, prec: Precision) -> PrecReal {
    PrecReal::from_i64(2, prec) + PrecReal::from_i64(d as i64 + 1, prec).sqrt()
}

fn residuals(a: &[PrecComplex]) -> (PrecReal, PrecReal) {
    let prec = a[0].precision();
    let m1 = a[1].abs();
    let flat = a[1..]
        .iter()
        .map(|z| (&z.abs() - &m1).abs())
        .fold(PrecReal::zero(prec), PrecReal::max);
    let s = flat_scale(a.len(), prec);
    let ratio = (&a[0].norm_sqr() - &(&s * &m1.square())).abs();
    (flat, ratio)
}

/// Rescale by a complex factor so that `a_0 = -(2 + sqrt(d+1))`.
fn normalize_a0(a: Vec<PrecComplex>) -> Vec<PrecComplex> {
    let prec = a[0].precision();
    let s = flat_scale(a.len(), prec);
    let target = PrecComplex::from_real(&-&s);
    let factor = &target / &a[0];
    a.into_iter().map(|z| &z * &factor).collect()
}

/// Almost-flat form of `fid`: the Fourier components are cyclically
/// translated so that the flattest tail results, then (prime `d`) the phase
/// ramp `omega^{kj}` giving the shortest orbit period of the phases is
/// applied.
pub fn to_almost_flat(fid: &FiducialVector) -> Result<AlmostFlatVector> {
    fid.require_normalized()?;
    let d = fid.dim();
    let form = dimension_form(d as u64)?;
    if form.n.is_none() {
        return Err(Error::NotOfForm(d as u64));
    }
    let f = fid.to_fourier();
    let f = f.entries();
    let prec = f.precision();
    let (translation, _) = (0..d)
        .map(|t| {
            let shifted: Vec<PrecComplex> = (0..d).map(|k| f[(k + t) % d].clone()).collect();
            (t, residuals(&shifted).0)
        })
        .fold(None::<(usize, PrecReal)>, |acc, (t, r)| match acc {
            Some((_, ref best)) if !(r < *best) => acc,
            _ => Some((t, r)),
        })
        .expect("d >= 4");
    let base: Vec<PrecComplex> = (0..d).map(|k| f[(k + translation) % d].clone()).collect();
    let base = normalize_a0(base);

    let ramp = if is_prime(d as u64) {
        let theta = primitive_root(d as u64)?;
        let tol = PrecReal::pow10(-(prec.digits() as i32) / 2, prec);
        (0..d)
            .map(|k| {
                let a = apply_ramp(&base, k);
                let u = raw_phases(&a);
                (k, orbit_structure(&u, theta, d as u64, &tol).unwrap_or(d - 1))
            })
            .min_by_key(|&(k, m)| (m, k))
            .map(|(k, _)| k)
            .unwrap_or(0)
    } else {
        0
    };
    let a = apply_ramp(&base, ramp);
    let (flatness_residual, ratio_residual) = residuals(&a);
    Ok(AlmostFlatVector {
        d,
        a,
        flatness_residual,
        ratio_residual,
        translation,
        ramp,
    })
}

fn apply_ramp(a: &[PrecComplex], k: usize) -> Vec<PrecComplex> {
    let d = a.len() as u64;
    let prec = a[0].precision();
    a.iter()
        .enumerate()
        .map(|(j, z)| z * &root_of_unity(d, (k * j) as i64, prec))
        .collect()
}

/// `u_j` for `j = 0..d`, with `u_0` from `a_0` itself.
fn raw_phases(a: &[PrecComplex]) -> Vec<PrecComplex> {
    let prec = a[0].precision();
    let s = flat_scale(a.len(), prec);
    let m1 = a[1].abs();
    let target = s.sqrt();
    let factor = &target / &m1;
    let neg_s = PrecComplex::from_real(&-&s);
    a.iter()
        .enumerate()
        .map(|(j, z)| {
            if j == 0 {
                PrecComplex::one(prec)
            } else {
                &z.scale(&factor).square() / &neg_s
            }
        })
        .collect()
}

/// The phases `u_1 .. u_{d-1}` of an almost-flat vector. Refuses when either
/// residual exceeds `threshold` or some `| |u_j| - 1 |` does.
#[derive(Clone, Debug)]
pub struct Phases {
    pub d: usize,
    /// `u[j]` for `j = 0..d`; `u[0] = 1` is a placeholder.
    pub u: Vec<PrecComplex>,
    pub max_modulus_deviation: PrecReal,
}

impl Phases {
    pub fn get(&self, j: usize) -> &PrecComplex {
        &self.u[j % self.d]
    }

    /// `u_{theta^r}` for `r = 0..p-1`.
    pub fn by_theta(&self, theta: u64) -> Vec<PrecComplex> {
        let p = self.d as u64;
        (0..p - 1)
            .map(|r| self.u[mod_pow(theta, r, p) as usize].clone())
            .collect()
    }
}

pub fn extract_phases(afv: &AlmostFlatVector, threshold: &PrecReal) -> Result<Phases> {
    if afv.flatness_residual > *threshold || afv.ratio_residual > *threshold {
        return Err(Error::ResidualTooLarge {
            what: "almost-flat",
            residual: afv.flatness_residual.clone().max(afv.ratio_residual.clone()).to_f64(),
            threshold: threshold.to_f64(),
        });
    }
    let u = raw_phases(&afv.a);
    let prec = afv.precision();
    let one = PrecReal::one(prec);
    let dev = u[1..]
        .iter()
        .map(|z| (&z.abs() - &one).abs())
        .fold(PrecReal::zero(prec), PrecReal::max);
    if dev > *threshold {
        return Err(Error::ResidualTooLarge {
            what: "phase modulus",
            residual: dev.to_f64(),
            threshold: threshold.to_f64(),
        });
    }
    Ok(Phases {
        d: afv.d,
        u,
        max_modulus_deviation: dev,
    })
}

/// Smallest `t | p-1` with `u_{theta^{r+t}} = u_{theta^r}` for all `r`,
/// given `u` indexed by `j = 0..p` (index 0 ignored).
pub fn orbit_structure(u: &[PrecComplex], theta: u64, p: u64, tol: &PrecReal) -> Result<usize> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if multiplicative_order(theta as i64, p) != Some(p - 1) {
        return Err(Error::InvalidArgument(format!("{theta} is not a primitive root mod {p}")));
    }
    if u.len() != p as usize {
        return Err(Error::DimensionMismatch {
            expected: p as usize,
            found: u.len(),
        });
    }
    let n = p - 1;
    let seq: Vec<&PrecComplex> = (0..n).map(|r| &u[mod_pow(theta, r, p) as usize]).collect();
    for t in 1..=n {
        if !n.is_multiple_of(t) {
            continue;
        }
        let periodic = (0..n as usize).all(|r| (seq[r] - seq[(r + t as usize) % n as usize]).abs() < *tol);
        if periodic {
            return Ok(t as usize);
        }
    }
    Ok(n as usize)
}

fn float_to_bigint(x: &Float) -> BigInt {
    let i = x.to_integer().expect("finite");
    BigInt::parse_bytes(i.to_string_radix(16).as_bytes(), 16).expect("hex integer")
}

/// Integral LLL reduction (exact arithmetic on Gram determinants),
/// reduction parameter `delta = num/den`. Rows must be independent.
pub fn lll_reduce(basis: &mut [Vec<BigInt>], delta_num: i64, delta_den: i64) {
    let n = basis.len();
    if n < 2 {
        return;
    }
    let dot = |a: &[BigInt], b: &[BigInt]| -> BigInt { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    // d[i+1] is the Gram determinant of the first i+1 rows; d[0] = 1
    let mut dd = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n]; n];
    dd[0] = BigInt::one();
    dd[1] = dot(&basis[0], &basis[0]);
    let mut k = 1usize;
    let mut kmax = 0usize;
    let dn = BigInt::from(delta_num);
    let dden = BigInt::from(delta_den);

    fn red(k: usize, l: usize, basis: &mut [Vec<BigInt>], lam: &mut [Vec<BigInt>], dd: &[BigInt]) {
        let two_lam: BigInt = &lam[k][l] * 2;
        if two_lam.abs() > dd[l + 1] {
            // q = nearest integer to lam / d
            let q = (&two_lam + &dd[l + 1]).div_floor(&(&dd[l + 1] * 2));
            let bl = basis[l].clone();
            for (x, y) in basis[k].iter_mut().zip(&bl) {
                *x -= &q * y;
            }
            lam[k][l] -= &q * &dd[l + 1];
            for i in 0..l {
                let t = &q * &lam[l][i];
                lam[k][i] -= t;
            }
        }
    }

    while k < n {
        if k > kmax {
            kmax = k;
            for j in 0..=k {
                let mut u = dot(&basis[k], &basis[j]);
                for i in 0..j {
                    u = (&dd[i + 1] * &u - &lam[k][i] * &lam[j][i]) / &dd[i];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    dd[k + 1] = u;
                }
            }
        }
        red(k, k - 1, basis, &mut lam, &dd);
        // Lovász: den d_{k+1} d_{k-1} < num d_k^2 - den lam^2
        let lhs = &dden * &dd[k + 1] * &dd[k - 1];
        let rhs = &dn * &dd[k] * &dd[k] - &dden * &lam[k][k - 1] * &lam[k][k - 1];
        if lhs < rhs {
            basis.swap(k, k - 1);
            for j in 0..k - 1 {
                let t = lam[k][j].clone();
                lam[k][j] = lam[k - 1][j].clone();
                lam[k - 1][j] = t;
            }
            let l = lam[k][k - 1].clone();
            let b = (&dd[k - 1] * &dd[k + 1] + &l * &l) / &dd[k];
            for i in (k + 1)..=kmax {
                let t = lam[i][k].clone();
                lam[i][k] = (&dd[k + 1] * &lam[i][k - 1] - &l * &t) / &dd[k];
                lam[i][k - 1] = (&b * &t + &l * &lam[i][k]) / &dd[k + 1];
            }
            dd[k] = b;
            k = k.saturating_sub(1).max(1);
        } else {
            for l in (0..k - 1).rev() {
                red(k, l, basis, &mut lam, &dd);
            }
            k += 1;
        }
    }
}

/// `sum c_i x^i` with ascending integer coefficients.
pub fn eval_poly(coeffs: &[BigInt], x: &PrecComplex) -> PrecComplex {
    let prec = x.precision();
    let mut acc = PrecComplex::zero(prec);
    for c in coeffs.iter().rev() {
        let cr = PrecReal::parse(&c.to_string(), prec).expect("integer literal");
        acc = &(&acc * x) + &PrecComplex::from_real(&cr);
    }
    acc
}

/// Lowest-degree integer polynomial (ascending coefficients, primitive,
/// positive leading coefficient) with `|P(x)| < 10^(20 - precision)` and all
/// coefficients bounded by `max_height`, found by lattice reduction on
/// `[e_i | round(C Re x^i), round(C Im x^i)]` with `C = 10^(precision - 10)`.
pub fn minimal_polynomial(x: &PrecComplex, max_degree: usize, max_height: &BigInt) -> Option<Vec<BigInt>> {
    let prec = x.precision();
    let scale = PrecReal::pow10(prec.digits() as i32 - 10, prec);
    let tol = prec.tolerance(20);
    let mut powers = vec![PrecComplex::one(prec)];
    for _ in 0..max_degree {
        let next = powers.last().expect("non-empty") * x;
        powers.push(next);
    }
    for k in 1..=max_degree {
        let mut basis: Vec<Vec<BigInt>> = (0..=k)
            .map(|i| {
                let mut row = vec![BigInt::zero(); k + 1];
                row[i] = BigInt::one();
                row.push(float_to_bigint((&powers[i].re() * &scale).as_float()));
                row.push(float_to_bigint((&powers[i].im() * &scale).as_float()));
                row
            })
            .collect();
        lll_reduce(&mut basis, 99, 100);
        for row in &basis {
            let mut coeffs: Vec<BigInt> = row[..=k].to_vec();
            while coeffs.last().is_some_and(Zero::is_zero) {
                coeffs.pop();
            }
            if coeffs.len() < 2 || coeffs.iter().any(|c| c.abs() > *max_height) {
                continue;
            }
            let content = coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
            let sign = if coeffs.last().expect("non-empty").is_negative() { -1 } else { 1 };
            let coeffs: Vec<BigInt> = coeffs.iter().map(|c| c * sign / &content).collect();
            if eval_poly(&coeffs, x).abs() < tol {
                return Some(coeffs);
            }
        }
    }
    None
}

/// Monic with constant term `±1` (after removing the content).
pub fn is_algebraic_unit(poly: &[BigInt]) -> bool {
    unit_diagnostic(poly).is_ok()
}

/// Like [`is_algebraic_unit`] but explains a negative answer.
pub fn unit_diagnostic(poly: &[BigInt]) -> std::result::Result<(), String> {
    let Some(lead) = poly.iter().rposition(|c| !c.is_zero()) else {
        return Err("zero polynomial".into());
    };
    if lead == 0 {
        return Err("constant polynomial".into());
    }
    let content = poly.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    let leading = &poly[lead] / &content;
    let constant = &poly[0] / &content;
    if !leading.abs().is_one() {
        return Err(format!("not monic: leading coefficient {leading}"));
    }
    if !constant.abs().is_one() {
        return Err(format!("constant term {constant} is not ±1"));
    }
    Ok(())
}

/// All complex roots by Weierstrass (Durand–Kerner) iteration.
pub fn polynomial_roots(poly: &[BigInt], prec: Precision) -> Result<Vec<PrecComplex>> {
    let Some(deg) = poly.iter().rposition(|c| !c.is_zero()) else {
        return Err(Error::RootFinding("zero polynomial".into()));
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg > 64 {
        return Err(Error::RootFinding(format!("degree {deg} exceeds 64")));
    }
    let lead = PrecReal::parse(&poly[deg].to_string(), prec).expect("integer");
    let monic: Vec<PrecComplex> = poly[..=deg]
        .iter()
        .map(|c| PrecComplex::from_real(&(PrecReal::parse(&c.to_string(), prec).expect("integer") / &lead)))
        .collect();
    let eval = |z: &PrecComplex| {
        let mut acc = PrecComplex::zero(prec);
        for c in monic.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    };
    let seed = PrecComplex::from_f64(0.4, 0.9, prec);
    let mut roots: Vec<PrecComplex> = (0..deg).map(|k| seed.powu(k as u32)).collect();
    let tol = prec.tolerance(5);
    for _ in 0..2000 {
        let mut worst = PrecReal::zero(prec);
        for i in 0..deg {
            let mut den = PrecComplex::one(prec);
            for j in 0..deg {
                if i != j {
                    den = &den * &(&roots[i] - &roots[j]);
                }
            }
            if den.is_zero() {
                den = PrecComplex::from_f64(1e-30, 0.0, prec);
            }
            let step = &eval(&roots[i]) / &den;
            worst = worst.max(step.abs());
            roots[i] = &roots[i] - &step;
        }
        if worst < tol {
            roots.sort_by(|a, b| {
                a.arg()
                    .partial_cmp(&b.arg())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.abs().partial_cmp(&b.abs()).unwrap_or(std::cmp::Ordering::Equal))
            });
            return Ok(roots);
        }
    }
    Err(Error::RootFinding(format!(
        "Durand-Kerner did not converge at {} digits; retry with more precision",
        prec.digits()
    )))
}

/// Roots of `poly` on the unit circle, sorted by argument.
pub fn unit_circle_conjugates(poly: &[BigInt], prec: Precision) -> Result<Vec<PrecComplex>> {
    let tol = prec.tolerance(10);
    let one = PrecReal::one(prec);
    Ok(polynomial_roots(poly, prec)?
        .into_iter()
        .filter(|z| (&z.abs() - &one).abs() < tol)
        .collect())
}

#[derive(Clone, Debug)]
pub struct FingerprintOptions {
    pub theta: Option<u64>,
    pub max_degree: usize,
    pub max_height: BigInt,
    /// Residual and phase-modulus threshold; default `10^(20 - precision)`.
    pub threshold: Option<PrecReal>,
}

impl Default for FingerprintOptions {
    fn default() -> Self {
        FingerprintOptions {
            theta: None,
            max_degree: 8,
            max_height: BigInt::from(1_000_000),
            threshold: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FingerprintReport {
    pub d: usize,
    pub flatness_residual: PrecReal,
    pub ratio_residual: PrecReal,
    pub translation: usize,
    pub ramp: usize,
    /// `u_{theta^r}` for `r = 0..p-1`.
    pub phases: Vec<PrecComplex>,
    pub max_phase_deviation: PrecReal,
    pub theta_used: u64,
    pub independent_count: usize,
    pub min_poly: Option<Vec<BigInt>>,
    /// Minimal polynomial of each independent phase `u_{theta^r}`, `r < m`.
    pub independent_min_polys: Vec<Option<Vec<BigInt>>>,
    pub is_unit: bool,
    pub unit_note: Option<String>,
    pub degree: Option<usize>,
}

pub fn format_poly(poly: &[BigInt]) -> String {
    poly.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

impl FingerprintReport {
    pub fn report_entries(&self) -> Vec<(String, String)> {
        use crate::verifier::sci;
        let mut out = vec![
            ("d".into(), self.d.to_string()),
            ("flatness_residual".into(), sci(&self.flatness_residual)),
            ("ratio_residual".into(), sci(&self.ratio_residual)),
            ("translation".into(), self.translation.to_string()),
            ("ramp".into(), self.ramp.to_string()),
            ("max_phase_deviation".into(), sci(&self.max_phase_deviation)),
            ("theta".into(), self.theta_used.to_string()),
            ("m".into(), self.independent_count.to_string()),
        ];
        out.push((
            "minpoly".into(),
            self.min_poly.as_deref().map(format_poly).unwrap_or_else(|| "none".into()),
        ));
        out.push((
            "degree".into(),
            self.degree.map(|d| d.to_string()).unwrap_or_else(|| "none".into()),
        ));
        out.push(("is_unit".into(), self.is_unit.to_string()));
        if let Some(n) = &self.unit_note {
            out.push(("unit_note".into(), n.clone()));
        }
        out
    }
}

/// The whole pipeline for a fiducial in a prime dimension `d = n^2 + 3`.
pub fn fingerprint(fid: &FiducialVector, opts: &FingerprintOptions) -> Result<FingerprintReport> {
    let d = fid.dim();
    let p = d as u64;
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let prec = fid.precision();
    let afv = to_almost_flat(fid)?;
    let threshold = opts.threshold.clone().unwrap_or_else(|| prec.tolerance(20));
    let phases = extract_phases(&afv, &threshold)?;
    let theta = match opts.theta {
        Some(t) => t,
        None => primitive_root(p)?,
    };
    let m = orbit_structure(&phases.u, theta, p, &threshold)?;
    let ordered = phases.by_theta(theta);
    let independent_min_polys: Vec<Option<Vec<BigInt>>> = ordered[..m]
        .par_iter()
        .map(|u| minimal_polynomial(u, opts.max_degree, &opts.max_height))
        .collect();
    let min_poly = independent_min_polys[0].clone();
    let all_found = independent_min_polys.iter().all(Option::is_some);
    let unit_note = match &min_poly {
        None => Some("no minimal polynomial within the degree/height bounds".to_string()),
        Some(mp) => unit_diagnostic(mp).err(),
    };
    let is_unit = all_found
        && independent_min_polys
            .iter()
            .flatten()
            .all(|mp| is_algebraic_unit(mp));
    Ok(FingerprintReport {
        d,
        flatness_residual: afv.flatness_residual,
        ratio_residual: afv.ratio_residual,
        translation: afv.translation,
        ramp: afv.ramp,
        max_phase_deviation: phases.max_modulus_deviation,
        theta_used: theta,
        independent_count: m,
        degree: min_poly.as_ref().map(|mp| mp.len() - 1),
        min_poly,
        independent_min_polys,
        is_unit,
        unit_note,
        phases: ordered,
    })
}

/// Maps a primitive-root ordering onto `u` indexed by `j`.
pub fn phases_from_theta_order(ordered: &[PrecComplex], theta: u64, p: u64) -> Vec<PrecComplex> {
    let prec = ordered[0].precision();
    let mut u = vec![PrecComplex::one(prec); p as usize];
    let m = ordered.len();
    for r in 0..(p - 1) as usize {
        u[mod_pow(theta, r as u64, p) as usize] = ordered[r % m].clone();
    }
    u
}

/// `BigInt` coefficients from small integers.
pub fn poly_from_i64(coeffs: &[i64]) -> Vec<BigInt> {
    coeffs.iter().map(|&c| BigInt::from(c)).collect()
}

/// Coefficients as `i64` when they fit.
pub fn poly_to_i64(poly: &[BigInt]) -> Option<Vec<i64>> {
    poly.iter().map(ToPrimitive::to_i64).collect()
}
