//! One line per acceptance criterion. Runs without the libtest harness so the
//! lines are always printed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sicforge_core::etf_search::{search, EtfSpec, SearchOptions};
use sicforge_core::heisenberg::{hesse_fiducial, qubit_fiducial};
use sicforge_core::hpnum::{PrecComplex, PrecReal, Precision};
use sicforge_core::quadfield::{
    dimension_form, fundamental_unit, magical_D, ray_class_order, split_dimension, QuadElem, RayModulus,
};
use sicforge_core::stark_construct::{roundtrip, RoundtripOptions};
use sicforge_core::symplectic::{covariance_residual, detect_symmetries, weil_unitary, SymmetrySearch, SymplecticMatrix};
use sicforge_core::verifier::verify_sic;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn prec(digits: u32) -> Precision {
    Precision::new(digits).unwrap()
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn known_sics() -> Check {
    let p = prec(60);
    let limit = PrecReal::pow10(-30, p);
    let mut detail = Vec::new();
    for (name, make) in [("d=2", qubit_fiducial as fn(Precision) -> _), ("d=3 Hesse", hesse_fiducial)] {
        let t = Instant::now();
        let fid = make(p);
        let cert = verify_sic(&fid, 30).map_err(|e| e.to_string())?;
        let el = t.elapsed();
        ensure(cert.verdict.is_pass(), || format!("{name} fails"))?;
        ensure(cert.worst_deviation() < limit, || format!("{name} deviation too large"))?;
        ensure(el < Duration::from_secs(5), || format!("{name} took {}", secs(el)))?;
        detail.push(format!("{name} dev {:.1e} in {}", cert.worst_deviation().to_f64(), secs(el)));
    }
    // Bloch vector of the qubit fiducial is (1,1,1)/sqrt 3
    let q = qubit_fiducial(p);
    let (a, b) = (&q.entries()[0], &q.entries()[1]);
    let cross = &a.conj() * b;
    let two = PrecReal::from_i64(2, p);
    let bloch = [&cross.re() * &two, &cross.im() * &two, &a.norm_sqr() - &b.norm_sqr()];
    let target = PrecReal::one(p) / PrecReal::from_i64(3, p).sqrt();
    for x in &bloch {
        ensure((x - &target).abs() < limit, || "qubit Bloch vector is not (1,1,1)/sqrt 3".into())?;
    }
    Ok(detail.join(", "))
}

fn orbit_search(d: usize, restarts: usize) -> std::result::Result<PrecReal, String> {
    let opts = SearchOptions {
        orbit: true,
        restarts,
        precision: prec(40),
        ..Default::default()
    };
    Ok(search(&EtfSpec::sic(d).map_err(|e| e.to_string())?, &opts).map_err(|e| e.to_string())?.error)
}

fn numerical_discovery() -> Check {
    let p = prec(40);
    let target = PrecReal::pow10(-24, p);
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for d in 2..=12 {
        let t = Instant::now();
        let half = orbit_search(d, 8)?;
        let full = orbit_search(d, 16)?;
        let el = t.elapsed();
        ensure(full < target, || format!("d={d}: error {:.3e}", full.to_f64()))?;
        ensure(full <= half, || format!("d={d}: 16 restarts worse than 8"))?;
        ensure(el < Duration::from_secs(600), || format!("d={d} took {}", secs(el)))?;
        worst = worst.max(full.to_f64());
        slowest = slowest.max(el);
    }
    Ok(format!("d=2..12 worst error {worst:.1e}, slowest {}", secs(slowest)))
}

fn etf_census() -> Check {
    let p = prec(40);
    let target = PrecReal::pow10(-24, p);
    let plateau = PrecReal::pow10(-4, p);
    let mut detail = Vec::new();
    for n in [3, 4, 6, 7, 9] {
        let res = search(&EtfSpec::new(3, n).unwrap(), &SearchOptions::default()).map_err(|e| e.to_string())?;
        ensure(res.error < target, || format!("N={n}: error {:.3e}", res.error.to_f64()))?;
    }
    detail.push("N=3,4,6,7,9 found".to_string());
    for n in [5, 8] {
        let opts = SearchOptions {
            restarts: 200,
            ..Default::default()
        };
        let res = search(&EtfSpec::new(3, n).unwrap(), &opts).map_err(|e| e.to_string())?;
        ensure(res.error > plateau, || format!("N={n}: unexpectedly reached {:.3e}", res.error.to_f64()))?;
        detail.push(format!("N={n} plateau {:.2e}", res.error.to_f64()));
    }
    Ok(detail.join(", "))
}

fn prime_factor_theorem() -> Check {
    let t = Instant::now();
    let exceptions = (1..=2000u64)
        .filter(|n| !dimension_form(n * n + 3).unwrap().primes_one_mod_three)
        .count();
    let el = t.elapsed();
    ensure(exceptions == 0, || format!("{exceptions} exceptions"))?;
    ensure(el < Duration::from_secs(10), || format!("took {}", secs(el)))?;
    Ok(format!("n <= 2000, 0 exceptions, {}", secs(el)))
}

fn negative_norm_units() -> Check {
    let t = Instant::now();
    let mut bad = Vec::new();
    for n in 1..=53u64 {
        let d = n * n + 3;
        let fu = fundamental_unit(magical_D(d).unwrap()).unwrap();
        if fu.norm != -1 {
            bad.push(d);
        }
    }
    let el = t.elapsed();
    ensure(bad.is_empty(), || format!("norm +1 for d in {bad:?}"))?;
    ensure(el < Duration::from_secs(60), || format!("took {}", secs(el)))?;
    Ok(format!("n = 1..53, 0 exceptions, {}", secs(el)))
}

fn magical_table() -> Check {
    for (d, expected) in [(4, 5), (5, 3), (7, 2), (19, 5)] {
        let got = magical_D(d).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("d={d}: got {got}, expected {expected}"))?;
    }
    Ok("4->5, 5->3, 7->2, 19->5".into())
}

fn splitting_identity() -> Check {
    for n in 1..=53u64 {
        let d = n * n + 3;
        let s = split_dimension(d).map_err(|e| e.to_string())?;
        ensure(s.del.generator.is_integral() && s.del_bar.generator.is_integral(), || {
            format!("d={d}: factor not integral")
        })?;
        let target = QuadElem::from_ints(d as i64, 0, s.D).unwrap();
        ensure(s.product() == target, || format!("d={d}: product {}", s.product()))?;
    }
    Ok("n = 1..53 exact".into())
}

fn weil_covariance() -> Check {
    let p = prec(60);
    let limit = PrecReal::pow10(-30, p);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for d in [5u64, 7, 11] {
        let group: Vec<SymplecticMatrix> = SymplecticMatrix::enumerate(d).into_iter().filter(|m| m.det() == 1).collect();
        for _ in 0..100 {
            let f = group[rng.gen_range(0..group.len())];
            let u = weil_unitary(&f, p).map_err(|e| e.to_string())?;
            let r = covariance_residual(&f, &u).map_err(|e| e.to_string())?;
            ensure(r < limit, || format!("d={d}, F={f}: residual {:.3e}", r.to_f64()))?;
            worst = worst.max(r.to_f64());
        }
        let one = PrecComplex::one(p);
        for theta in 2..d {
            let f = SymplecticMatrix::diagonal(theta as i64, d).map_err(|e| e.to_string())?;
            let u = weil_unitary(&f, p).map_err(|e| e.to_string())?;
            for r in 0..d as usize {
                let mut ones = 0;
                for c in 0..d as usize {
                    let z = u.get(r, c);
                    if (z - &one).is_zero() {
                        ones += 1;
                    } else {
                        ensure(z.is_zero(), || format!("d={d}, theta={theta}: entry not 0/1"))?;
                    }
                }
                ensure(ones == 1, || format!("d={d}, theta={theta}: not a permutation"))?;
            }
        }
    }
    Ok(format!("300 random F, worst residual {worst:.1e}; diagonal F exact permutations"))
}

fn symmetry_detection() -> Check {
    let opts = SearchOptions {
        orbit: true,
        ..Default::default()
    };
    let res = search(&EtfSpec::sic(7).unwrap(), &opts).map_err(|e| e.to_string())?;
    let fid = res.candidate.fiducial().ok_or("no fiducial")?;
    let report = detect_symmetries(fid, &SymmetrySearch::default()).map_err(|e| e.to_string())?;
    let ell = ray_class_order(7, &RayModulus::del_one_place())
        .map_err(|e| e.to_string())?
        .ell
        .ok_or("no integer ell for d=7")?;
    ensure(report.order % 3 == 0, || format!("order {} not divisible by 3", report.order))?;
    ensure(report.has_antiunitary, || "no antiunitary element".into())?;
    ensure(report.unitary_order as u64 == 3 * ell, || {
        format!("unitary order {} != 3 ell = {}", report.unitary_order, 3 * ell)
    })?;
    Ok(format!(
        "order {} (unitary {}), antiunitary present, ell = {ell}",
        report.order, report.unitary_order
    ))
}

fn roundtrip_check(d: u64, limit: Duration) -> Check {
    let t = Instant::now();
    let rep = roundtrip(d, &RoundtripOptions::default()).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    let fp = &rep.fingerprint;
    let hp = prec(100);
    ensure(fp.flatness_residual < PrecReal::pow10(-20, hp) && fp.ratio_residual < PrecReal::pow10(-20, hp), || {
        format!("d={d}: almost-flat residuals {:.2e}/{:.2e}", fp.flatness_residual.to_f64(), fp.ratio_residual.to_f64())
    })?;
    ensure(fp.max_phase_deviation < PrecReal::pow10(-25, hp), || {
        format!("d={d}: phase modulus deviation {:.2e}", fp.max_phase_deviation.to_f64())
    })?;
    ensure(rep.count_consistent(), || {
        format!("d={d}: 3 m ell = {} != p-1", 3 * fp.independent_count as u64 * rep.ell)
    })?;
    ensure(fp.is_unit, || format!("d={d}: phases are not algebraic units"))?;
    let cert = &rep.construction.certificate;
    ensure(cert.verdict.is_pass() && cert.tol_digits >= 20, || format!("d={d}: reconstruction fails"))?;
    ensure(el < limit, || format!("d={d} took {}", secs(el)))?;
    let mp = fp.min_poly.as_ref().map(|m| m.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    Ok(format!(
        "d={d}: m={} ell={} minpoly [{}] rebuilt dev {:.1e} in {}",
        fp.independent_count,
        rep.ell,
        mp.unwrap_or_default(),
        cert.worst_deviation().to_f64(),
        secs(el)
    ))
}

fn roundtrips() -> Check {
    let a = roundtrip_check(7, Duration::from_secs(300))?;
    let b = roundtrip_check(19, Duration::from_secs(3600))?;
    Ok(format!("{a}; {b}"))
}

fn determinism() -> Check {
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let cases: [(&str, &[&str]); 3] = [
        ("numtheory_1_20.txt", &["numtheory", "--range", "1..20"]),
        ("search_d4_seed5.txt", &["search", "--d", "4", "--orbit", "--seed", "5", "--restarts", "4", "--no-catalog"]),
        ("roundtrip_d7.txt", &["roundtrip", "--d", "7"]),
    ];
    for (name, args) in cases {
        let run = || {
            let out = Command::new(env!("CARGO_BIN_EXE_sicforge"))
                .env_remove("SICFORGE_DIGITS")
                .args(args)
                .output()
                .map_err(|e| e.to_string())?;
            Ok::<_, String>(out.stdout)
        };
        let first = run()?;
        let second = run()?;
        ensure(first == second, || format!("{name}: consecutive runs differ"))?;
        let golden = std::fs::read(golden_dir.join(name)).map_err(|e| e.to_string())?;
        ensure(first == golden, || format!("{name}: differs from golden file"))?;
    }
    Ok("3 reports byte-identical across runs and to golden files".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("known SIC verification", known_sics),
        ("numerical discovery d=2..12", numerical_discovery),
        ("d=3 ETF census", etf_census),
        ("prime factors of n^2+3", prime_factor_theorem),
        ("negative-norm fundamental units", negative_norm_units),
        ("magical D spot table", magical_table),
        ("splitting identity", splitting_identity),
        ("Weil covariance", weil_covariance),
        ("symmetry detection d=7", symmetry_detection),
        ("roundtrip d=7 and d=19", roundtrips),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        let el = secs(t.elapsed());
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{el}]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{el}]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
