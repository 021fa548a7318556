use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sicforge_core::arith::{factorize, is_prime};
use sicforge_core::etf_search::{search, Candidate, EtfSpec, SearchOptions};
use sicforge_core::fingerprint::{fingerprint, FingerprintOptions};
use sicforge_core::heisenberg::FiducialVector;
use sicforge_core::hpnum::{PrecReal, Precision};
use sicforge_core::quadfield::{
    class_number, dimension_form, fundamental_unit, magical_D, ray_class_order, split_dimension, RayModulus,
};
use sicforge_core::stark_construct::{construct_search, roundtrip, ConstructOptions, RoundtripOptions, UnitCandidateSet};
use sicforge_core::symplectic::{detect_symmetries, SymmetrySearch};
use sicforge_core::verifier::{default_tol_digits, sci, verify_etf, verify_sic, SicCertificate};
use sicforge_core::{Error, Result};

use crate::catalog::{Catalog, CatalogEntry};
use crate::formats::{parse_units, units_to_text, SicData};

pub const DIGITS_ENV: &str = "SICFORGE_DIGITS";

#[derive(Parser, Debug)]
#[command(name = "sicforge", version, about = "Search, verify and reconstruct SIC fiducials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Numerical ETF / fiducial search.
    Search(SearchArgs),
    /// Certify a fiducial file.
    Verify(VerifyArgs),
    /// Almost-flat form, phases and their minimal polynomials.
    Fingerprint(FingerprintArgs),
    /// Rebuild a fiducial from unit data.
    Construct(ConstructArgs),
    /// Search, fingerprint and reconstruct in one run.
    Roundtrip(RoundtripArgs),
    /// Number-theoretic table for d = n^2 + 3.
    Numtheory(NumtheoryArgs),
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub d: usize,
    /// Number of vectors; defaults to d^2.
    #[arg(long)]
    pub n: Option<usize>,
    /// Search over a single fiducial and its Weyl–Heisenberg orbit.
    #[arg(long)]
    pub orbit: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Frame-error target `10^-T`.
    #[arg(long, default_value_t = 24)]
    pub target: u32,
    #[arg(long, default_value = "catalog")]
    pub catalog: PathBuf,
    #[arg(long)]
    pub no_catalog: bool,
    /// Also write the fiducial to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Tolerance digits; default precision - 20.
    #[arg(long)]
    pub tol: Option<u32>,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Also determine the Clifford stabilizer.
    #[arg(long)]
    pub symmetry: bool,
}

#[derive(Args, Debug)]
pub struct FingerprintArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub theta: Option<u64>,
    /// Residual threshold digits; default precision - 20.
    #[arg(long)]
    pub tol: Option<u32>,
    #[arg(long, default_value_t = 8)]
    pub max_degree: usize,
    #[arg(long)]
    pub digits: Option<u32>,
    /// Write the independent phases as a SICUNITS file.
    #[arg(long)]
    pub units_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long)]
    pub units: PathBuf,
    #[arg(long)]
    pub theta: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<i8>,
    #[arg(long)]
    pub full_permutations: bool,
    #[arg(long)]
    pub tol: Option<u32>,
    #[arg(long)]
    pub digits: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RoundtripArgs {
    #[arg(long)]
    pub d: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Polishing precision; default 100.
    #[arg(long)]
    pub digits: Option<u32>,
    #[arg(long, default_value_t = 20)]
    pub tol: u32,
    /// Write the polished fiducial here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the extracted units here.
    #[arg(long)]
    pub units_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NumtheoryArgs {
    #[arg(long, conflicts_with = "range", required_unless_present = "range")]
    pub d: Option<u64>,
    /// Range of n, `N1..N2` inclusive.
    #[arg(long)]
    pub range: Option<String>,
}

/// Printed report and whether the command's check passed.
#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub passed: bool,
}

/// Usage-level errors map to exit code 2.
pub fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse { .. }
            | Error::Io(_)
            | Error::InvalidArgument(_)
            | Error::InvalidDimension(_)
            | Error::InvalidPrecision(_)
            | Error::PrecisionUnderflow { .. }
            | Error::NotOfForm(_)
            | Error::NotPrime(_)
            | Error::DegenerateDimension(_)
            | Error::InvalidSpec(_)
            | Error::Stage {
                stage: "precondition",
                ..
            }
    )
}

/// Flag, then environment, then the command default.
pub fn resolve_digits(flag: Option<u32>, default: u32) -> Result<Precision> {
    let digits = match flag {
        Some(d) => d,
        None => match std::env::var(DIGITS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{DIGITS_ENV} is not a number: `{v}`")))?,
            Err(_) => default,
        },
    };
    Precision::new(digits)
}

fn env_digits(flag: Option<u32>) -> Result<Option<u32>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(DIGITS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{DIGITS_ENV} is not a number: `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn kv(out: &mut String, k: &str, v: impl std::fmt::Display) {
    let _ = writeln!(out, "{k} = {v}");
}

fn prefixed(out: &mut String, prefix: &str, report: &str) {
    for line in report.lines() {
        let _ = writeln!(out, "{prefix}{line}");
    }
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Search(a) => cmd_search(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Fingerprint(a) => cmd_fingerprint(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Roundtrip(a) => cmd_roundtrip(a),
        Command::Numtheory(a) => cmd_numtheory(a),
    }
}

fn created_by(args: &str) -> String {
    format!("sicforge {} {args}", env!("CARGO_PKG_VERSION"))
}

pub fn cmd_search(a: SearchArgs) -> Result<Outcome> {
    let prec = resolve_digits(a.digits, 40)?;
    let n = a.n.unwrap_or(a.d * a.d);
    let spec = EtfSpec::new(a.d, n)?;
    if a.orbit && !spec.is_sic() {
        return Err(Error::InvalidArgument("--orbit needs N = d^2".into()));
    }
    let opts = SearchOptions {
        restarts: a.restarts,
        seed: a.seed,
        orbit: a.orbit,
        precision: prec,
        target_digits: a.target,
        ..Default::default()
    };
    let res = search(&spec, &opts)?;
    let mut out = String::new();
    kv(&mut out, "command", "search");
    kv(&mut out, "d", a.d);
    kv(&mut out, "N", n);
    kv(&mut out, "orbit", a.orbit);
    kv(&mut out, "seed", a.seed);
    kv(&mut out, "restarts", a.restarts);
    kv(&mut out, "digits", prec.digits());
    kv(&mut out, "target", format!("1e-{}", a.target));
    kv(&mut out, "best_restart", res.best_restart);
    kv(&mut out, "best_error", sci(&res.error));
    let target = PrecReal::pow10(-(a.target as i32), prec);
    let mut errors: Vec<f64> = res.trace.iter().map(|t| t.final_error.to_f64()).collect();
    errors.sort_by(f64::total_cmp);
    let hits = res.trace.iter().filter(|t| t.final_error < target).count();
    kv(&mut out, "restarts_reaching_target", hits);
    kv(
        &mut out,
        "restart_error_min_median_max",
        format!(
            "{:.3e} {:.3e} {:.3e}",
            errors[0],
            errors[errors.len() / 2],
            errors[errors.len() - 1]
        ),
    );
    kv(&mut out, "status", if res.reached_target { "found" } else { "plateau" });
    let tol = (a.target / 2).min(default_tol_digits(prec)).max(1);
    let cert = match &res.candidate {
        Candidate::Fiducial(f) => verify_sic(f, tol)?,
        Candidate::Frame(v) => verify_etf(v, &spec, tol)?,
    };
    prefixed(&mut out, "certificate.", &cert.to_report());
    let passed = res.reached_target && cert.verdict.is_pass();
    if let Candidate::Fiducial(f) = &res.candidate {
        if passed && !a.no_catalog {
            let cat = Catalog::open(&a.catalog)?;
            let id = cat.next_id(a.d, "search")?;
            let args = format!("search --d {} --orbit --seed {} --restarts {}", a.d, a.seed, a.restarts);
            let entry = CatalogEntry::new(id.clone(), "search", f.clone(), &cert, &created_by(&args));
            cat.insert(&entry)?;
            kv(&mut out, "catalog_id", id);
        }
        if let Some(path) = &a.out {
            fs::write(path, SicData::new(f.clone(), "search").to_text())?;
        }
    }
    Ok(Outcome { report: out, passed })
}

fn load_fiducial(path: &PathBuf, digits: Option<u32>) -> Result<FiducialVector> {
    let data = SicData::parse(&read(path)?, env_digits(digits)?)?;
    Ok(data.fiducial.into_normalized())
}

pub fn cmd_verify(a: VerifyArgs) -> Result<Outcome> {
    let fid = load_fiducial(&a.input, a.digits)?;
    let tol = a.tol.unwrap_or_else(|| default_tol_digits(fid.precision()));
    let mut cert: SicCertificate = verify_sic(&fid, tol)?;
    if a.symmetry {
        cert.symmetry = Some(detect_symmetries(&fid, &SymmetrySearch::default())?);
    }
    let passed = cert.verdict.is_pass();
    Ok(Outcome {
        report: cert.to_report(),
        passed,
    })
}

pub fn cmd_fingerprint(a: FingerprintArgs) -> Result<Outcome> {
    let fid = load_fiducial(&a.input, a.digits)?;
    let prec = fid.precision();
    let tol = a.tol.unwrap_or_else(|| default_tol_digits(prec));
    let opts = FingerprintOptions {
        theta: a.theta,
        max_degree: a.max_degree,
        threshold: Some(PrecReal::pow10(-(tol as i32), prec)),
        ..Default::default()
    };
    let fp = fingerprint(&fid, &opts)?;
    let mut out = String::new();
    for (k, v) in fp.report_entries() {
        kv(&mut out, k.as_str(), v);
    }
    for (r, u) in fp.phases.iter().take(fp.independent_count).enumerate() {
        kv(&mut out, &format!("phase.{r}"), format!("{:.15} {:.15}", u.re(), u.im()));
    }
    if let Some(path) = &a.units_out {
        let d = fid.dim() as u64;
        let units = fp.phases[..fp.independent_count].to_vec();
        let mut set = UnitCandidateSet::new(d, magical_D(d)?, units, fp.min_poly.clone(), "fingerprint")?;
        set.theta = Some(fp.theta_used);
        fs::write(path, units_to_text(&set))?;
    }
    Ok(Outcome {
        report: out,
        passed: fp.is_unit,
    })
}

pub fn cmd_construct(a: ConstructArgs) -> Result<Outcome> {
    let set = parse_units(&read(&a.units)?, env_digits(a.digits)?)?;
    let opts = ConstructOptions {
        theta: a.theta,
        sign: a.sign,
        full_permutations: a.full_permutations,
        tol_digits: a.tol,
    };
    let res = construct_search(&set, &opts)?;
    let mut out = String::new();
    kv(&mut out, "command", "construct");
    kv(&mut out, "theta", res.theta);
    kv(&mut out, "sign", res.sign);
    kv(&mut out, "ordering", res.ordering.id());
    kv(&mut out, "trials", res.trials);
    kv(&mut out, "screen_deviation", sci(&res.screen_deviation));
    prefixed(&mut out, "certificate.", &res.certificate.to_report());
    if let Some(path) = &a.out {
        fs::write(path, SicData::new(res.fiducial.clone(), "construct").to_text())?;
    }
    Ok(Outcome {
        report: out,
        passed: res.passed(),
    })
}

pub fn cmd_roundtrip(a: RoundtripArgs) -> Result<Outcome> {
    let prec = resolve_digits(a.digits, 100)?;
    let opts = RoundtripOptions {
        seed: a.seed,
        restarts: a.restarts,
        polish_digits: prec.digits(),
        tol_digits: a.tol,
    };
    let rep = roundtrip(a.d, &opts)?;
    let mut out = String::new();
    kv(&mut out, "command", "roundtrip");
    kv(&mut out, "d", rep.d);
    kv(&mut out, "D", rep.ray.D);
    kv(&mut out, "ray_class_order", rep.ray.order);
    kv(&mut out, "ell", rep.ell);
    kv(&mut out, "symmetry_generator", rep.symmetry_generator);
    kv(&mut out, "search_error", sci(&rep.search_error));
    kv(&mut out, "polish_digits", prec.digits());
    kv(&mut out, "polish_error", sci(&rep.polish_error));
    for (k, v) in rep.fingerprint.report_entries() {
        kv(&mut out, &format!("fingerprint.{k}"), v);
    }
    kv(&mut out, "count_check_3m_ell", rep.count_consistent());
    for (r, u) in rep.units.units.iter().enumerate() {
        kv(&mut out, &format!("unit.{r}"), format!("{:.15} {:.15}", u.re(), u.im()));
    }
    kv(&mut out, "construct.theta", rep.construction.theta);
    kv(&mut out, "construct.sign", rep.construction.sign);
    kv(&mut out, "construct.ordering", rep.construction.ordering.id());
    kv(&mut out, "construct.trials", rep.construction.trials);
    kv(&mut out, "construct.screen_deviation", sci(&rep.construction.screen_deviation));
    prefixed(&mut out, "certificate.", &rep.construction.certificate.to_report());
    kv(&mut out, "roundtrip", if rep.passed() { "pass" } else { "fail" });
    if let Some(path) = &a.out {
        fs::write(path, SicData::new(rep.polished.clone(), "search").to_text())?;
    }
    if let Some(path) = &a.units_out {
        fs::write(path, units_to_text(&rep.units))?;
    }
    Ok(Outcome {
        report: out,
        passed: rep.passed(),
    })
}

fn parse_range(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::InvalidArgument(format!("range must look like N1..N2, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a, b))
}

fn factor_string(d: u64) -> String {
    factorize(d)
        .iter()
        .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
        .collect::<Vec<_>>()
        .join("*")
}

pub const NUMTHEORY_HEADER: &str = "n\td\tD\tfactorization\tprimes_1_mod_3\tunit\tnorm\th\tsplit\tray_order\tell";

/// One table row and whether its checks hold.
pub fn numtheory_row(d: u64) -> Result<(String, bool)> {
    let form = dimension_form(d)?;
    let n = form.n.ok_or(Error::NotOfForm(d))?;
    #[allow(non_snake_case)]
    let D = magical_D(d)?;
    let eq9 = form.primes_one_mod_three;
    let fu = fundamental_unit(D)?;
    let h = class_number(D)?;
    let split = split_dimension(d)?;
    let target = sicforge_core::quadfield::QuadElem::from_ints(d as i64, 0, D)?;
    let split_ok = split.del.generator.is_integral()
        && split.del_bar.generator.is_integral()
        && split.product() == target;
    let (ray, ell) = if is_prime(d) {
        let r = ray_class_order(d, &RayModulus::del_one_place())?;
        (r.order.to_string(), r.ell.map_or("-".to_string(), |l| l.to_string()))
    } else {
        ("-".into(), "-".into())
    };
    let row = format!(
        "{n}\t{d}\t{D}\t{}\t{}\t{}\t{}\t{h}\t{}\t{ray}\t{ell}",
        factor_string(d),
        if eq9 { "yes" } else { "no" },
        fu.unit,
        fu.norm,
        if split_ok { "ok" } else { "FAIL" },
    );
    Ok((row, eq9 && split_ok))
}

pub fn cmd_numtheory(a: NumtheoryArgs) -> Result<Outcome> {
    let dims: Vec<u64> = match (&a.d, &a.range) {
        (Some(d), _) => vec![*d],
        (None, Some(r)) => {
            let (lo, hi) = parse_range(r)?;
            (lo..=hi).map(|n| n * n + 3).collect()
        }
        (None, None) => return Err(Error::InvalidArgument("give --d or --range".into())),
    };
    let mut out = String::from(NUMTHEORY_HEADER);
    out.push('\n');
    let mut passed = true;
    for d in dims {
        let (row, ok) = numtheory_row(d)?;
        passed &= ok;
        out.push_str(&row);
        out.push('\n');
    }
    Ok(Outcome { report: out, passed })
}
