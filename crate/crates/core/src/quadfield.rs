//! Exact arithmetic in real quadratic fields `Q(sqrt D)` and the dimension
//! bookkeeping for `d = n^2 + 3`: the magical `D`, fundamental units, class
//! numbers, the splitting `d = ∂ ∂̄` and ray class group orders.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{factorize, is_prime, isqrt, mod_inv, multiplicative_order};
use crate::error::{Error, Result};

/// `a + b sqrt(D)` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadElem {
    a: BigRational,
    b: BigRational,
    d: u64,
}

impl QuadElem {
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Result<Self> {
        if d < 2 || squarefree_part(d)? != d {
            return Err(Error::NotSquareFree(d));
        }
        Ok(QuadElem { a, b, d })
    }

    pub fn from_ints(a: i64, b: i64, d: u64) -> Result<Self> {
        Self::new(BigRational::from_integer(a.into()), BigRational::from_integer(b.into()), d)
    }

    /// `(a + b sqrt D) / 2`.
    pub fn from_halves(a: i64, b: i64, d: u64) -> Result<Self> {
        let two = BigInt::from(2);
        Self::new(
            BigRational::new(a.into(), two.clone()),
            BigRational::new(b.into(), two),
            d,
        )
    }

    pub fn rational(&self) -> &BigRational {
        &self.a
    }

    pub fn irrational(&self) -> &BigRational {
        &self.b
    }

    pub fn field(&self) -> u64 {
        self.d
    }

    fn lift(&self, a: BigRational, b: BigRational) -> QuadElem {
        QuadElem { a, b, d: self.d }
    }

    pub fn one(d: u64) -> Result<Self> {
        Self::from_ints(1, 0, d)
    }

    /// Galois conjugate `a - b sqrt D`.
    pub fn conj(&self) -> QuadElem {
        self.lift(self.a.clone(), -self.b.clone())
    }

    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - BigRational::from_integer(self.d.into()) * &self.b * &self.b
    }

    pub fn trace(&self) -> BigRational {
        &self.a + &self.a
    }

    /// Membership in the ring of integers: integral trace and norm.
    pub fn is_integral(&self) -> bool {
        self.trace().is_integer() && self.norm().is_integer()
    }

    pub fn is_unit(&self) -> bool {
        self.is_integral() && self.norm().abs().is_one()
    }

    pub fn pow(&self, k: u32) -> QuadElem {
        let mut acc = self.lift(BigRational::one(), BigRational::zero());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Value under `sqrt D ↦ +sqrt D`.
    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * (self.d as f64).sqrt()
    }

    fn check_field(&self, o: &QuadElem) {
        assert_eq!(self.d, o.d, "elements of different fields");
    }
}

impl Add for &QuadElem {
    type Output = QuadElem;
    fn add(self, o: &QuadElem) -> QuadElem {
        self.check_field(o);
        self.lift(&self.a + &o.a, &self.b + &o.b)
    }
}

impl Sub for &QuadElem {
    type Output = QuadElem;
    fn sub(self, o: &QuadElem) -> QuadElem {
        self.check_field(o);
        self.lift(&self.a - &o.a, &self.b - &o.b)
    }
}

impl Mul for &QuadElem {
    type Output = QuadElem;
    fn mul(self, o: &QuadElem) -> QuadElem {
        self.check_field(o);
        let dd = BigRational::from_integer(self.d.into());
        self.lift(
            &self.a * &o.a + dd * &self.b * &o.b,
            &self.a * &o.b + &self.b * &o.a,
        )
    }
}

impl Neg for &QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        self.lift(-self.a.clone(), -self.b.clone())
    }
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = self.a.denom().lcm(self.b.denom());
        let na = self.a.numer() * (&den / self.a.denom());
        let nb = self.b.numer() * (&den / self.b.denom());
        let mut s = String::new();
        if !na.is_zero() || nb.is_zero() {
            s.push_str(&na.to_string());
        }
        if !nb.is_zero() {
            if nb.is_negative() {
                s.push('-');
            } else if !na.is_zero() {
                s.push('+');
            }
            let m = nb.abs();
            if !m.is_one() {
                s.push_str(&m.to_string());
            }
            s.push_str(&format!("√{}", self.d));
        }
        if den.is_one() {
            f.write_str(&s)
        } else if nb.is_zero() || na.is_zero() {
            write!(f, "{s}/{den}")
        } else {
            write!(f, "({s})/{den}")
        }
    }
}

/// `n` with every square factor removed.
pub fn squarefree_part(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("squarefree_part of 0".into()));
    }
    Ok(factorize(n)
        .into_iter()
        .filter(|&(_, e)| e % 2 == 1)
        .map(|(p, _)| p)
        .product())
}

fn require_squarefree(d: u64) -> Result<()> {
    if d < 2 || squarefree_part(d)? != d {
        return Err(Error::NotSquareFree(d));
    }
    Ok(())
}

/// Square-free part of `(d+1)(d-3)`.
#[allow(non_snake_case)]
pub fn magical_D(d: u64) -> Result<u64> {
    if d <= 3 {
        return Err(Error::DegenerateDimension(d));
    }
    squarefree_part((d + 1) * (d - 3))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimensionForm {
    pub d: u64,
    /// `n` with `d = n^2 + 3`, if any.
    pub n: Option<u64>,
    /// Exponent of 4 in `d`.
    pub e0: u32,
    /// Exponent of 3 in `d`.
    pub e1: u32,
    /// Prime factors above 3 with exponents.
    pub primes: Vec<(u64, u32)>,
    /// Every prime above 3 is `≡ 1 mod 3`.
    pub primes_one_mod_three: bool,
    /// `d` itself is a prime `≡ 1 mod 3`.
    pub prime_case: bool,
}

pub fn dimension_form(d: u64) -> Result<DimensionForm> {
    if d < 4 {
        return Err(Error::DegenerateDimension(d));
    }
    let n = Some(isqrt(d - 3)).filter(|n| n * n + 3 == d);
    let mut e0 = 0;
    let mut e1 = 0;
    let mut primes = Vec::new();
    for (p, e) in factorize(d) {
        match p {
            2 => e0 = e / 2,
            3 => e1 = e,
            _ => primes.push((p, e)),
        }
    }
    let primes_one_mod_three = primes.iter().all(|&(p, _)| p % 3 == 1);
    Ok(DimensionForm {
        d,
        n,
        e0,
        e1,
        primes_one_mod_three,
        prime_case: n.is_some() && is_prime(d) && d % 3 == 1,
        primes,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FundamentalUnit {
    pub unit: QuadElem,
    pub norm: i64,
    /// Period length of the continued fraction used.
    pub period: usize,
}

/// Fundamental unit `> 1` of the ring of integers of `Q(sqrt D)`, read off
/// the first period of the continued fraction of `omega = sqrt D` or
/// `(1 + sqrt D)/2` (`D ≡ 1 mod 4`): `eps = p - q omega'`.
#[allow(non_snake_case)]
pub fn fundamental_unit(D: u64) -> Result<FundamentalUnit> {
    require_squarefree(D)?;
    let r = isqrt(D) as i64;
    let dd = D as i64;
    let (p0, q0) = if D % 4 == 1 { (1i64, 2i64) } else { (0, 1) };
    let (mut pp, mut qq) = (p0, q0);
    // convergents h_k / k_k
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut first_state = None;
    let mut period = 0usize;
    loop {
        let a = Integer::div_floor(&(pp + r), &qq);
        let h_next = BigInt::from(a) * &h + &h_prev;
        let k_next = BigInt::from(a) * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        let np = a * qq - pp;
        let nq = (dd - np * np) / qq;
        pp = np;
        qq = nq;
        match first_state {
            None => first_state = Some((pp, qq)),
            Some(s) => {
                period += 1;
                if s == (pp, qq) {
                    break;
                }
            }
        }
    }
    // h_prev / k_prev is the convergent p_{l-1} / q_{l-1}
    let (p, q) = (BigRational::from_integer(h_prev), BigRational::from_integer(k_prev));
    let unit = if D % 4 == 1 {
        let half = BigRational::new(1.into(), 2.into());
        QuadElem::new(&p - &q * &half, &q * &half, D)?
    } else {
        QuadElem::new(p, q, D)?
    };
    let norm = unit.norm().to_integer().to_i64().expect("unit norm");
    debug_assert!(norm.abs() == 1);
    Ok(FundamentalUnit { unit, norm, period })
}

/// Discriminant of `Q(sqrt D)`.
#[allow(non_snake_case)]
pub fn field_discriminant(D: u64) -> Result<u64> {
    require_squarefree(D)?;
    Ok(if D % 4 == 1 { D } else { 4 * D })
}

type Form = (i64, i64, i64);

/// The successor of a reduced indefinite form in its cycle.
fn rho(f: Form, disc: i64, root: i64) -> Form {
    let (_, b, c) = f;
    let two_c = 2 * c.abs();
    // b' ≡ -b (mod 2|c|) with root - 2|c| < b' <= root
    let mut nb = (-b).rem_euclid(two_c);
    let shift = Integer::div_floor(&(root - nb), &two_c);
    nb += shift * two_c;
    let na = (nb * nb - disc) / (4 * c);
    (c, nb, na)
}

/// Class number of `Q(sqrt D)`: cycles of reduced primitive forms give the
/// narrow class number, halved when the fundamental unit has norm `+1`.
#[allow(non_snake_case)]
pub fn class_number(D: u64) -> Result<u64> {
    let disc = field_discriminant(D)? as i64;
    let root = isqrt(disc as u64) as i64;
    let sq = (disc as f64).sqrt();
    let mut reduced = BTreeSet::new();
    for b in 1..=root {
        if (b - disc).rem_euclid(2) != 0 {
            continue;
        }
        let m = (disc - b * b) / 4;
        if m == 0 {
            continue;
        }
        for a in 1..=m {
            if m % a != 0 {
                continue;
            }
            let c_abs = m / a;
            for sign in [1i64, -1] {
                let (fa, fc) = (sign * a, -sign * c_abs);
                let two_a = (2 * a) as f64;
                if sq - (b as f64) < two_a && two_a < sq + b as f64 && fa.gcd(&b).gcd(&fc) == 1 {
                    reduced.insert((fa, b, fc));
                }
            }
        }
    }
    let mut seen = HashSet::new();
    let mut cycles = 0u64;
    for &f in &reduced {
        if seen.contains(&f) {
            continue;
        }
        cycles += 1;
        let mut g = f;
        loop {
            seen.insert(g);
            g = rho(g, disc, root);
            if g == f || seen.contains(&g) {
                break;
            }
        }
    }
    let unit = fundamental_unit(D)?;
    Ok(if unit.norm == 1 { cycles / 2 } else { cycles })
}

/// One of the two factors of `d = ∂ ∂̄`, with its Galois conjugate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealFactor {
    pub generator: QuadElem,
    pub conjugate: QuadElem,
    pub norm_value: i64,
}

impl IdealFactor {
    fn from_generator(generator: QuadElem) -> Self {
        let conjugate = generator.conj();
        let norm_value = generator.norm().to_integer().to_i64().expect("small norm");
        IdealFactor {
            generator,
            conjugate,
            norm_value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(non_snake_case)]
pub struct SplitDimension {
    pub d: u64,
    pub D: u64,
    /// `sqrt(d+1) = s sqrt(D)`.
    pub s: u64,
    /// `∂ = sqrt(d+1) + 1`.
    pub del: IdealFactor,
    /// `∂̄ = sqrt(d+1) - 1`.
    pub del_bar: IdealFactor,
}

impl SplitDimension {
    pub fn product(&self) -> QuadElem {
        &self.del.generator * &self.del_bar.generator
    }
}

/// `d = (sqrt(d+1) + 1)(sqrt(d+1) - 1)` over `Q(sqrt D)`.
pub fn split_dimension(d: u64) -> Result<SplitDimension> {
    let form = dimension_form(d)?;
    if form.n.is_none() {
        return Err(Error::NotOfForm(d));
    }
    #[allow(non_snake_case)]
    let D = magical_D(d)?;
    let s = isqrt((d + 1) / D);
    debug_assert_eq!(s * s * D, d + 1);
    let del = QuadElem::from_ints(1, s as i64, D)?;
    let del_bar = QuadElem::from_ints(-1, s as i64, D)?;
    let out = SplitDimension {
        d,
        D,
        s,
        del: IdealFactor::from_generator(del),
        del_bar: IdealFactor::from_generator(del_bar),
    };
    let prod = out.product();
    if prod != QuadElem::from_ints(d as i64, 0, D)? || !out.del.generator.is_integral() || !out.del_bar.generator.is_integral() {
        return Err(Error::InvalidArgument(format!("splitting identity failed for d = {d}")));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FiniteModulus {
    Del,
    DelBar,
    Full,
}

/// Real places: `[1]` is `sqrt D ↦ +sqrt D`, `[2]` is `sqrt D ↦ -sqrt D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RayModulus {
    pub finite: FiniteModulus,
    pub places: Vec<Place>,
}

impl RayModulus {
    /// `∂` with the first real place.
    pub fn del_one_place() -> Self {
        RayModulus {
            finite: FiniteModulus::Del,
            places: vec![Place::First],
        }
    }

    pub fn full() -> Self {
        RayModulus {
            finite: FiniteModulus::Full,
            places: vec![Place::First, Place::Second],
        }
    }

    pub fn tag(&self) -> String {
        let fin = match self.finite {
            FiniteModulus::Del => "∂",
            FiniteModulus::DelBar => "∂̄",
            FiniteModulus::Full => "d",
        };
        let places: Vec<&str> = self
            .places
            .iter()
            .map(|p| match p {
                Place::First => "1",
                Place::Second => "2",
            })
            .collect();
        format!("{fin}[{}]", places.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(non_snake_case)]
pub struct RayClassDescriptor {
    pub D: u64,
    pub modulus: RayModulus,
    pub order: u64,
    pub h: u64,
    /// `h (p-1) / (3 order)`, when the modulus is a single factor and this
    /// is an integer.
    pub ell: Option<u64>,
}

/// A finite abelian group `prod (Z/p_i)^× x {±1}^k`, elements written as
/// residues followed by sign bits.
#[derive(Clone, Debug)]
pub struct RayResidueGroup {
    pub residue_moduli: Vec<u64>,
    pub sign_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RayElement {
    pub residues: Vec<u64>,
    pub signs: Vec<bool>,
}

impl RayResidueGroup {
    pub fn order(&self) -> u64 {
        self.residue_moduli.iter().map(|p| p - 1).product::<u64>() << self.sign_count
    }

    fn mul(&self, x: &RayElement, y: &RayElement) -> RayElement {
        RayElement {
            residues: x
                .residues
                .iter()
                .zip(&y.residues)
                .zip(&self.residue_moduli)
                .map(|((a, b), p)| (*a as u128 * *b as u128 % *p as u128) as u64)
                .collect(),
            signs: x.signs.iter().zip(&y.signs).map(|(a, b)| a ^ b).collect(),
        }
    }

    /// Size of the subgroup generated by `gens`.
    pub fn subgroup_order(&self, gens: &[RayElement]) -> u64 {
        let id = RayElement {
            residues: vec![1; self.residue_moduli.len()],
            signs: vec![false; self.sign_count],
        };
        let mut seen = HashSet::new();
        seen.insert(id.clone());
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in gens {
                let y = self.mul(&x, g);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        seen.len() as u64
    }
}

/// `h |G| / |<unit images>|`.
pub fn ray_order_from_images(h: u64, group: &RayResidueGroup, unit_images: &[RayElement]) -> u64 {
    h * group.order() / group.subgroup_order(unit_images)
}

/// Image of `a + b sqrt D` (integral) modulo `p`, with `sqrt D ↦ r`.
fn reduce_mod(x: &QuadElem, p: u64, r: u64) -> u64 {
    let red = |q: &BigRational| -> u64 {
        let pp = BigInt::from(p);
        let num = q.numer().mod_floor(&pp).to_u64().expect("residue");
        let den = q.denom().mod_floor(&pp).to_i64().expect("residue");
        let inv = mod_inv(den, p).expect("denominator invertible mod p");
        (num as u128 * inv as u128 % p as u128) as u64
    };
    ((red(&x.a) as u128 + red(&x.b) as u128 * r as u128) % p as u128) as u64
}

fn place_sign(x: &QuadElem, place: Place) -> bool {
    let v = match place {
        Place::First => x.to_f64(),
        Place::Second => x.conj().to_f64(),
    };
    v < 0.0
}

/// Order of the ray class group of `Q(sqrt D)` for a prime `d = n^2 + 3`
/// and the given modulus, by exact computation of unit images.
pub fn ray_class_order(d: u64, modulus: &RayModulus) -> Result<RayClassDescriptor> {
    let split = split_dimension(d)?;
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    let p = d;
    let s_inv = mod_inv(split.s as i64, p).expect("s invertible");
    // ∂ = 1 + s sqrt D vanishes at sqrt D = -1/s; ∂̄ at +1/s
    let roots: Vec<u64> = match modulus.finite {
        FiniteModulus::Del => vec![p - s_inv],
        FiniteModulus::DelBar => vec![s_inv],
        FiniteModulus::Full => vec![p - s_inv, s_inv],
    };
    let mut places = modulus.places.clone();
    places.sort();
    places.dedup();
    let group = RayResidueGroup {
        residue_moduli: vec![p; roots.len()],
        sign_count: places.len(),
    };
    let eps = fundamental_unit(split.D)?.unit;
    let minus_one = QuadElem::from_ints(-1, 0, split.D)?;
    let image = |u: &QuadElem| RayElement {
        residues: roots.iter().map(|&r| reduce_mod(u, p, r)).collect(),
        signs: places.iter().map(|&pl| place_sign(u, pl)).collect(),
    };
    let h = class_number(split.D)?;
    let order = ray_order_from_images(h, &group, &[image(&minus_one), image(&eps)]);
    let ell = if modulus.finite != FiniteModulus::Full && places.len() == 1 {
        let num = h * (p - 1);
        num.is_multiple_of(3 * order).then(|| num / (3 * order))
    } else {
        None
    };
    Ok(RayClassDescriptor {
        D: split.D,
        modulus: RayModulus {
            finite: modulus.finite,
            places,
        },
        order,
        h,
        ell,
    })
}

fn require_odd_prime(p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Err(Error::InvalidArgument("primitive roots are taken for odd primes".into()));
    }
    Ok(())
}

/// All primitive roots modulo the odd prime `p`, increasing.
pub fn primitive_roots(p: u64) -> Result<Vec<u64>> {
    require_odd_prime(p)?;
    Ok((2..p)
        .filter(|&g| multiplicative_order(g as i64, p) == Some(p - 1))
        .collect())
}

pub fn primitive_root(p: u64) -> Result<u64> {
    require_odd_prime(p)?;
    Ok((2..p)
        .find(|&g| multiplicative_order(g as i64, p) == Some(p - 1))
        .expect("primitive roots exist"))
}
