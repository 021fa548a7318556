//! The two line-oriented text formats.
//!
//! ```text
//! SICDATA 1
//! d = 3
//! basis = standard
//! digits = 60
//! source = import
//! 0 0
//! 7.0710678118654752440084436210484903928483593768847403658833986899536623e-1 0
//! -7.0710678118654752440084436210484903928483593768847403658833986899536623e-1 0
//! ```
//!
//! `SICUNITS 1` has the header keys `d`, `D`, `digits`, optionally `theta`,
//! `ell`, `minpoly` (ascending integer coefficients) and `provenance`, then
//! one unit phase per line as `re im`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use sicforge_core::heisenberg::{Basis, FiducialVector};
use sicforge_core::hpnum::{ComplexVector, PrecComplex, PrecReal, Precision};
use sicforge_core::stark_construct::UnitCandidateSet;
use sicforge_core::{Error, Result};

pub const SICDATA_MAGIC: &str = "SICDATA 1";
pub const SICUNITS_MAGIC: &str = "SICUNITS 1";

/// Significant digits written beyond the working precision, enough for the
/// binary value to read back unchanged.
const EXTRA_DIGITS: u32 = 5;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn format_real(x: &PrecReal) -> String {
    if x.is_zero() {
        return "0".into();
    }
    x.to_decimal(x.precision().digits() + EXTRA_DIGITS)
}

fn format_complex(z: &PrecComplex) -> String {
    format!("{} {}", format_real(&z.re()), format_real(&z.im()))
}

struct Document {
    header: BTreeMap<String, (usize, String)>,
    body: Vec<(usize, String)>,
}

fn split_document(text: &str, magic: &str) -> Result<Document> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == magic => {}
        Some((n, l)) => return Err(parse_err(n, format!("expected `{magic}`, found `{l}`"))),
        None => return Err(parse_err(1, format!("empty file, expected `{magic}`"))),
    }
    let mut header = BTreeMap::new();
    let mut body = Vec::new();
    for (n, l) in lines {
        if body.is_empty() {
            if let Some((k, v)) = l.split_once('=') {
                let key = k.trim().to_string();
                if header.contains_key(&key) {
                    return Err(parse_err(n, format!("duplicate key `{key}`")));
                }
                header.insert(key, (n, v.trim().to_string()));
                continue;
            }
        } else if l.contains('=') {
            return Err(parse_err(n, "header line after data"));
        }
        body.push((n, l.to_string()));
    }
    Ok(Document { header, body })
}

impl Document {
    fn required(&self, key: &str) -> Result<(usize, &str)> {
        self.header
            .get(key)
            .map(|(n, v)| (*n, v.as_str()))
            .ok_or_else(|| parse_err(1, format!("missing header key `{key}`")))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.header.get(key) {
            None => Ok(None),
            Some((n, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| parse_err(*n, format!("`{key}` is not a valid number: `{v}`"))),
        }
    }

    fn components(&self, expected: usize, prec: Precision) -> Result<Vec<PrecComplex>> {
        let mut out = Vec::with_capacity(expected);
        for (n, l) in &self.body {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(parse_err(*n, format!("expected `re im`, found `{l}`")));
            }
            let re = PrecReal::parse(parts[0], prec)
                .ok_or_else(|| parse_err(*n, format!("invalid number `{}`", parts[0])))?;
            let im = PrecReal::parse(parts[1], prec)
                .ok_or_else(|| parse_err(*n, format!("invalid number `{}`", parts[1])))?;
            out.push(PrecComplex::new(&re, &im));
        }
        if out.len() != expected {
            let line = self.body.last().map_or(1, |(n, _)| *n);
            return Err(parse_err(line, format!("expected {expected} components, found {}", out.len())));
        }
        Ok(out)
    }
}

/// A fiducial file with its header metadata.
#[derive(Clone, Debug)]
pub struct SicData {
    pub fiducial: FiducialVector,
    pub source: String,
    /// Remaining header keys, kept verbatim.
    pub extra: BTreeMap<String, String>,
}

impl SicData {
    pub fn new(fiducial: FiducialVector, source: impl Into<String>) -> Self {
        SicData {
            fiducial,
            source: source.into(),
            extra: BTreeMap::new(),
        }
    }

    pub fn to_text(&self) -> String {
        let f = &self.fiducial;
        let mut out = format!(
            "{SICDATA_MAGIC}\nd = {}\nbasis = {}\ndigits = {}\nsource = {}\n",
            f.dim(),
            f.basis().name(),
            f.precision().digits(),
            self.source
        );
        for (k, v) in &self.extra {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for z in f.entries().iter() {
            out.push_str(&format_complex(z));
            out.push('\n');
        }
        out
    }

    /// `digits_override` replaces the file's `digits` for parsing.
    pub fn parse(text: &str, digits_override: Option<u32>) -> Result<Self> {
        let doc = split_document(text, SICDATA_MAGIC)?;
        let d: usize = doc.number("d")?.ok_or_else(|| parse_err(1, "missing header key `d`"))?;
        if d < 2 {
            return Err(parse_err(doc.required("d")?.0, "d must be at least 2"));
        }
        let (bl, bname) = doc.required("basis")?;
        let basis = Basis::parse(bname).ok_or_else(|| parse_err(bl, format!("unknown basis `{bname}`")))?;
        let digits = match digits_override {
            Some(x) => x,
            None => doc.number("digits")?.ok_or_else(|| parse_err(1, "missing header key `digits`"))?,
        };
        let prec = Precision::new(digits).map_err(|e| parse_err(doc.header.get("digits").map_or(1, |x| x.0), e.to_string()))?;
        let source = doc.header.get("source").map(|x| x.1.clone()).unwrap_or_else(|| "import".into());
        let extra = doc
            .header
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "d" | "basis" | "digits" | "source"))
            .map(|(k, (_, v))| (k.clone(), v.clone()))
            .collect();
        let entries = doc.components(d, prec)?;
        let fiducial = FiducialVector::new(ComplexVector::new(entries)?, basis);
        Ok(SicData {
            fiducial,
            source,
            extra,
        })
    }
}

pub fn units_to_text(set: &UnitCandidateSet) -> String {
    let mut out = format!(
        "{SICUNITS_MAGIC}\nd = {}\nD = {}\ndigits = {}\n",
        set.d,
        set.D,
        set.precision().digits()
    );
    if let Some(t) = set.theta {
        out.push_str(&format!("theta = {t}\n"));
    }
    if let Some(l) = set.ell {
        out.push_str(&format!("ell = {l}\n"));
    }
    if let Some(mp) = &set.min_poly {
        let coeffs: Vec<String> = mp.iter().map(|c| c.to_string()).collect();
        out.push_str(&format!("minpoly = {}\n", coeffs.join(" ")));
    }
    out.push_str(&format!("provenance = {}\n", set.provenance));
    for u in &set.units {
        out.push_str(&format_complex(u));
        out.push('\n');
    }
    out
}

pub fn parse_units(text: &str, digits_override: Option<u32>) -> Result<UnitCandidateSet> {
    let doc = split_document(text, SICUNITS_MAGIC)?;
    let d: u64 = doc.number("d")?.ok_or_else(|| parse_err(1, "missing header key `d`"))?;
    #[allow(non_snake_case)]
    let D: u64 = doc.number("D")?.ok_or_else(|| parse_err(1, "missing header key `D`"))?;
    let digits = match digits_override {
        Some(x) => x,
        None => doc.number("digits")?.ok_or_else(|| parse_err(1, "missing header key `digits`"))?,
    };
    let prec = Precision::new(digits).map_err(|e| parse_err(doc.header.get("digits").map_or(1, |x| x.0), e.to_string()))?;
    let min_poly = match doc.header.get("minpoly") {
        None => None,
        Some((n, v)) => Some(
            v.split_whitespace()
                .map(|c| c.parse::<BigInt>().map_err(|_| parse_err(*n, format!("invalid coefficient `{c}`"))))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    if doc.body.is_empty() {
        return Err(parse_err(1, "no unit phases"));
    }
    let units = doc.components(doc.body.len(), prec)?;
    let provenance = doc.header.get("provenance").map(|x| x.1.clone()).unwrap_or_else(|| "manual".into());
    let mut set = UnitCandidateSet::new(d, D, units, min_poly, provenance)?;
    set.theta = doc.number("theta")?;
    set.ell = doc.number("ell")?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sicforge_core::heisenberg::hesse_fiducial;

    #[test]
    fn sicdata_round_trip_is_exact() {
        let p = Precision::new(60).unwrap();
        let data = SicData::new(hesse_fiducial(p), "import");
        let text = data.to_text();
        let back = SicData::parse(&text, None).unwrap();
        assert_eq!(back.fiducial.dim(), 3);
        assert_eq!(back.to_text(), text);
        let diff = back.fiducial.entries().max_abs_diff(data.fiducial.entries());
        assert!(diff.is_zero());
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = "SICDATA 1\nd = 2\nbasis = standard\ndigits = 40\n1 0\n0 x\n";
        match SicData::parse(bad, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        let short = "SICDATA 1\nd = 3\nbasis = standard\ndigits = 40\n1 0\n";
        assert!(matches!(SicData::parse(short, None), Err(Error::Parse { line: 5, .. })));
        assert!(matches!(SicData::parse("SICDATA 2\n", None), Err(Error::Parse { line: 1, .. })));
        let basis = "SICDATA 1\nd = 2\nbasis = polar\ndigits = 40\n1 0\n0 0\n";
        assert!(matches!(SicData::parse(basis, None), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn units_round_trip() {
        let p = Precision::new(40).unwrap();
        let units = vec![PrecComplex::i(p), PrecComplex::one(p)];
        let mut set = UnitCandidateSet::new(7, 2, units, Some(vec![BigInt::from(1), BigInt::from(0), BigInt::from(1)]), "manual");
        assert!(set.is_err());
        set = UnitCandidateSet::new(7, 2, vec![PrecComplex::i(p)], Some(vec![BigInt::from(1), BigInt::from(0), BigInt::from(1)]), "manual");
        let mut set = set.unwrap();
        set.theta = Some(3);
        let text = units_to_text(&set);
        let back = parse_units(&text, None).unwrap();
        assert_eq!(back.theta, Some(3));
        assert_eq!(back.min_poly, set.min_poly);
        assert_eq!(units_to_text(&back), text);
    }
}
