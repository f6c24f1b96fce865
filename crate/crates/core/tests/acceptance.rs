//! Acceptance criteria 1 to 7, one PASS/FAIL line each.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use bachflat_core::ansatz::SearchConfig;
use bachflat_core::classify::{q_tensor_residual, Label};
use bachflat_core::conformal::kappa_at;
use bachflat_core::curvature::CurvatureJets;
use bachflat_core::exprlang::MetricDefinition;
use bachflat_core::sampling::{ball_points, DEFAULT_SEED};
use bachflat_core::suite::{classify_metric, run_search, run_suite, SearchResult, Suite, SuiteConfig, Tolerances};

fn catalog(name: &str) -> MetricDefinition {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "catalog", &format!("{name}.json")]
        .iter()
        .collect();
    MetricDefinition::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Outcome {
    pass: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: String) {
        if !ok {
            self.pass = false;
            self.notes.push(format!("FAILED {note}"));
        } else {
            self.notes.push(note);
        }
    }
}

fn suite(name: Suite, order: usize) -> SuiteConfig {
    SuiteConfig {
        suite: name,
        order,
        ..SuiteConfig::default()
    }
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    for name in ["sphere", "fubini_study", "h2xs2", "h2xh2", "perturbed"] {
        let def = catalog(name);
        for s in [Suite::Identities, Suite::Conformal] {
            let order = if s == Suite::Identities { 5 } else { 4 };
            let r = run_suite(&def, &suite(s, order)).unwrap();
            for res in &r.residuals {
                o.check(res.pass, format!("{name} {} {:.1e} <= {:.0e}", res.name, res.max, res.tol));
            }
        }
    }
    let t = start.elapsed();
    o.check(t < Duration::from_secs(30), format!("runtime {:.1}s < 30s", t.as_secs_f64()));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    for name in ["flat", "fubini_study", "cp1xcp1", "h2xs2", "h2xh2", "kahler_product"] {
        let r = run_suite(&catalog(name), &suite(Suite::Kahler, 4)).unwrap();
        for res in &r.residuals {
            o.check(res.pass, format!("{name} {} {:.1e} <= {:.0e}", res.name, res.max, res.tol));
        }
    }
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    for name in ["sphere", "fubini_study", "cp1xcp1", "h2xh2", "h2xs2"] {
        let r = run_suite(&catalog(name), &suite(Suite::Bach, 4)).unwrap();
        let b = &r.residuals[0];
        o.check(b.raw_max <= 1e-8, format!("{name} |B| {:.1e} <= 1e-8", b.raw_max));
    }
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let cfg = SuiteConfig::default();
    for (name, want) in [
        ("fubini_study", Label::IA),
        ("cp1xcp1", Label::IA),
        ("flat", Label::IIA),
        ("h2xs2", Label::IIB),
        ("h2xh2", Label::IIIA),
    ] {
        let r = classify_metric(&catalog(name), &cfg).unwrap();
        o.check(r.label == want, format!("{name} {} (want {want})", r.label));
    }
    for name in ["sphere", "fubini_study", "cp1xcp1", "h2xh2"] {
        let def = catalog(name);
        let mut worst = 0.0f64;
        for p in ball_points(&def.domain, 32, DEFAULT_SEED, 0.0) {
            let s = CurvatureJets::at(&def, p, 2).unwrap().scalar.value();
            let k = kappa_at(&def, p, 4).unwrap();
            worst = worst.max((k - s.powi(3)).abs() / s.abs().powi(3));
        }
        o.check(worst <= 1e-9, format!("{name} |kappa - s^3|/|s|^3 {worst:.1e} <= 1e-9"));
    }
    for name in ["flat", "h2xs2"] {
        let def = catalog(name);
        let worst = ball_points(&def.domain, 32, DEFAULT_SEED, 0.0)
            .into_iter()
            .map(|p| kappa_at(&def, p, 4).unwrap().abs())
            .fold(0.0, f64::max);
        o.check(worst <= 1e-10, format!("{name} |kappa| {worst:.1e} <= 1e-10"));
    }
    o
}

fn search_at(l: u32) -> (SearchResult, Duration) {
    let start = Instant::now();
    let r = run_search(&SearchConfig::new(l, 1.0, 1.0, 2.0), 32, &Tolerances::default()).unwrap();
    (r, start.elapsed())
}

fn criterion_5(l1: &(SearchResult, Duration), l3: &(SearchResult, Duration)) -> Outcome {
    let mut o = Outcome::new();
    for (l, (r, t)) in [(1, l1), (3, l3)] {
        o.check(t.as_secs() < 600, format!("l={l} runtime {:.1}s < 600s", t.as_secs_f64()));
        o.check(
            r.converged && r.bach_energy <= 1e-8,
            format!("l={l} energy {:.1e} <= 1e-8 after {} evaluations", r.bach_energy, r.evaluations),
        );
    }

    let (r, _) = l1;
    match &r.classification {
        Some(c) => {
            o.check(c.label == Label::IB, format!("l=1 label {}", c.label));
            let h = c.derdzinski.iter().map(|s| s.max_traceless_ricci).fold(0.0, f64::max);
            o.check(!c.derdzinski.is_empty() && h <= 1e-4, format!("l=1 |r0(h)| {h:.1e} <= 1e-4"));
        }
        None => o.check(false, format!("l=1 not classified: {:?}", r.classification_error)),
    }

    let (r, _) = l3;
    let Some(c) = &r.classification else {
        o.check(false, format!("l=3 not classified: {:?}", r.classification_error));
        return o;
    };
    o.check(c.label == Label::IIIB, format!("l=3 label {}", c.label));
    o.check(
        c.kappa.mean < 0.0 && c.kappa.normalized_spread <= 1e-3,
        format!("l=3 kappa {:.6} spread {:.1e} <= 1e-3", c.kappa.mean, c.kappa.normalized_spread),
    );
    o.check(r.axis_sign_changes == 1, format!("l=3 sign changes of s on the axis {}", r.axis_sign_changes));
    match &c.zero_locus {
        Some(z) => {
            o.check(!z.crossings.is_empty(), format!("l=3 crossings {}", z.crossings.len()));
            o.check(z.max_gradnorm_residual <= 1e-4, format!("l=3 ||ds|^2 + kappa/12| {:.1e}", z.max_gradnorm_residual));
            o.check(z.max_umbilic_residual <= 1e-4, format!("l=3 umbilic {:.1e}", z.max_umbilic_residual));
            o.check(z.max_weyl_norm <= 1e-4, format!("l=3 |W| on Z {:.1e}", z.max_weyl_norm));
            o.check(
                z.cr_consistent && z.crossings.iter().all(|x| x.cr.levi_nondeg),
                "l=3 CR indicators consistent".to_string(),
            );
        }
        None => o.check(false, "l=3 no zero locus".to_string()),
    }
    let sides: Vec<i8> = c.derdzinski.iter().map(|s| s.side).collect();
    o.check(sides.contains(&1) && sides.contains(&-1), format!("l=3 Einstein sides {sides:?}"));
    for s in &c.derdzinski {
        o.check(
            s.max_traceless_ricci <= 1e-4 && s.max_constant_error <= 1e-3,
            format!(
                "l=3 side {:+} ({} points) |r0(h)| {:.1e}, constant error {:.1e}",
                s.side, s.points, s.max_traceless_ricci, s.max_constant_error
            ),
        );
    }
    o
}

fn criterion_6(l1: &SearchResult, l3: &SearchResult) -> Outcome {
    let mut o = Outcome::new();
    for (l, r) in [(1, l1), (3, l3)] {
        let def = r.profile.compile().unwrap();
        let pts = r.profile.sample_points(64, DEFAULT_SEED ^ 1);
        let s_scale = pts
            .iter()
            .map(|p| CurvatureJets::at(&def, *p, 2).unwrap().scalar.value().abs())
            .fold(0.0, f64::max);
        let reports: Vec<_> = pts
            .iter()
            .filter_map(|p| q_tensor_residual(&def, *p, 1e-2 * s_scale).ok())
            .take(16)
            .collect();
        let worst = reports.iter().map(|q| q.residual).fold(0.0, f64::max);
        o.check(
            reports.len() == 16 && worst <= 1e-4,
            format!("l={l} q residual {worst:.1e} <= 1e-4 on {} points", reports.len()),
        );
        if l == 3 {
            let minus: Vec<_> = r
                .profile
                .sample_points(256, DEFAULT_SEED ^ 2)
                .into_iter()
                .filter_map(|p| q_tensor_residual(&def, p, 1e-2 * s_scale).ok())
                .filter(|q| q.s < 0.0)
                .take(16)
                .collect();
            let neg = minus
                .iter()
                .all(|q| q.block_eigenvalues.map_or(false, |e| e[1] < 0.0) && q.residual <= 1e-4);
            o.check(
                minus.len() >= 4 && neg,
                format!("l=3 (grad s, xi) block negative definite at {} points with s < 0", minus.len()),
            );
        }
    }
    o
}

fn criterion_7(l1: &SearchResult) -> Outcome {
    let mut o = Outcome::new();
    let def = catalog("fubini_study");
    let cfg = suite(Suite::All, 5);
    let a = serde_json::to_string_pretty(&run_suite(&def, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string_pretty(&run_suite(&def, &cfg).unwrap()).unwrap();
    o.check(a == b, "verify report byte-identical".to_string());
    let a = serde_json::to_string_pretty(&classify_metric(&def, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string_pretty(&classify_metric(&def, &cfg).unwrap()).unwrap();
    o.check(a == b, "classify report byte-identical".to_string());
    let again = search_at(1).0;
    o.check(
        serde_json::to_string_pretty(l1).unwrap() == serde_json::to_string_pretty(&again).unwrap(),
        "search report byte-identical".to_string(),
    );
    o
}

fn report(n: usize, o: &Outcome) {
    println!("criterion {n}: {}", if o.pass { "PASS" } else { "FAIL" });
    for note in &o.notes {
        println!("    {note}");
    }
}

fn main() {
    // libtest-style flags such as --nocapture are accepted and ignored
    let mut all = true;
    let mut run = |n: usize, o: Outcome| {
        report(n, &o);
        all &= o.pass;
    };
    run(1, criterion_1());
    run(2, criterion_2());
    run(3, criterion_3());
    run(4, criterion_4());
    let l1 = search_at(1);
    let l3 = search_at(3);
    run(5, criterion_5(&l1, &l3));
    run(6, criterion_6(&l1.0, &l3.0));
    run(7, criterion_7(&l1.0));
    if !all {
        std::process::exit(1);
    }
}
