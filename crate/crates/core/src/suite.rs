//! Named residual suites over seeded sample points, and the search driver,
//! shared by the command line and the acceptance tests.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{search, ProfileAnsatz, SearchConfig};
use crate::bach::{bach_full, bach_selfdual, harmonica_residuals, star_weyl_residual};
use crate::classify::{classify, ClassificationReport, ClassifyTolerances};
use crate::conformal::{riforma_residual, weyl_invariance_residual};
use crate::curvature::{bianchi_residual, CurvatureJets};
use crate::exprlang::{parse, Expr, MetricDefinition, MetricFile};
use crate::jets::NVARS;
use crate::kahler::{
    bach_kahler_formula, complex_structure_jets, kahler_residual, rho0_selfdual_residual, sebastian_residual,
    wplus_kahler_residual, KahlerPointData,
};
use crate::sampling::ball_points;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Bach,
    Kahler,
    Conformal,
    Classify,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s {
            "identities" => Suite::Identities,
            "bach" => Suite::Bach,
            "kahler" => Suite::Kahler,
            "conformal" => Suite::Conformal,
            "classify" => Suite::Classify,
            "all" => Suite::All,
            _ => return Err(Error::Config(format!("unknown suite '{s}'"))),
        })
    }
}

/// Tolerances by key, overridable with `KEY=VAL`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances(BTreeMap<String, f64>);

const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("bianchi", 1e-7),
    ("star_weyl", 1e-7),
    ("bach_agreement", 1e-7),
    ("bach_symmetry", 1e-7),
    ("bach_trace", 1e-7),
    ("bach_divergence", 1e-5),
    ("weyl_invariance", 1e-7),
    ("riforma", 1e-7),
    ("bach_norm", 1e-8),
    ("kahler", 1e-9),
    ("kahler_weyl", 1e-8),
    ("sebastian", 1e-9),
    ("rho0_selfdual", 1e-9),
    ("bach_kahler_formula", 1e-7),
    ("classify_kahler", 1e-8),
    ("classify_bach", 1e-7),
    ("kappa_zero", 1e-9),
    ("kappa_sign", 1e-8),
    ("kappa_spread", 1e-3),
    ("einstein", 1e-6),
    ("s_floor", 1e-3),
    ("indicator", 1e-8),
    ("search_target", 1e-8),
];

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, key: &str) -> f64 {
        self.0[key]
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), Error> {
        match self.0.get_mut(key) {
            Some(v) if value.is_finite() && value >= 0.0 => {
                *v = value;
                Ok(())
            }
            Some(_) => Err(Error::Config(format!("tolerance {key} must be finite and non-negative"))),
            None => Err(Error::Config(format!("unknown tolerance key '{key}'"))),
        }
    }

    /// Applies one `KEY=VAL` override.
    pub fn apply(&mut self, spec: &str) -> Result<(), Error> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("tolerance override '{spec}' is not KEY=VAL")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("tolerance value '{v}' is not a number")))?;
        self.set(k.trim(), v)
    }

    pub fn classify(&self) -> ClassifyTolerances {
        ClassifyTolerances {
            kahler: self.get("classify_kahler"),
            bach: self.get("classify_bach"),
            kappa_zero: self.get("kappa_zero"),
            kappa_sign: self.get("kappa_sign"),
            kappa_spread: self.get("kappa_spread"),
            einstein: self.get("einstein"),
            s_floor: self.get("s_floor"),
            indicator: self.get("indicator"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub points: usize,
    pub seed: u64,
    /// Jet order; the Bach divergence check runs when this is 5.
    pub order: usize,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suite: Suite::All,
            points: 32,
            seed: crate::sampling::DEFAULT_SEED,
            order: 4,
            tolerances: Tolerances::default(),
        }
    }
}

/// Points on which the order-5 divergence check runs.
pub const DIVERGENCE_POINTS: usize = 8;

/// Conformal factor used by the invariance checks.
pub const TEST_FACTOR: &str = "1 + 0.1*sin(x + 2*y) + 0.05*z*w";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    pub identity: String,
    /// Largest normalized residual over the points.
    pub max: f64,
    /// Largest raw residual over the points.
    pub raw_max: f64,
    pub tol: f64,
    pub points: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub metric: String,
    pub suite: Suite,
    pub points: usize,
    pub seed: u64,
    pub order: usize,
    pub residuals: Vec<Residual>,
    pub pass: bool,
}

/// One residual at one point: `(raw, normalized)`.
type Sample = (f64, f64);

struct Check {
    name: &'static str,
    identity: &'static str,
    tol_key: &'static str,
}

const IDENTITY_CHECKS: &[Check] = &[
    Check { name: "bianchi", identity: "contracted Bianchi identity for the Weyl tensor", tol_key: "bianchi" },
    Check { name: "star_weyl", identity: "(∇∇ + ½r)★W contraction vanishes", tol_key: "star_weyl" },
    Check { name: "bach_agreement", identity: "Bach tensor from W agrees with Bach tensor from W₊", tol_key: "bach_agreement" },
    Check { name: "bach_symmetry", identity: "Bach tensor is symmetric", tol_key: "bach_symmetry" },
    Check { name: "bach_trace", identity: "Bach tensor is trace-free", tol_key: "bach_trace" },
];

const CONFORMAL_CHECKS: &[Check] = &[
    Check { name: "weyl_invariance", identity: "W^a_bcd is conformally invariant", tol_key: "weyl_invariance" },
    Check { name: "riforma", identity: "r̊ of u²g equals r̊ + 2u Hess₀(1/u)", tol_key: "riforma" },
];

const KAHLER_CHECKS: &[Check] = &[
    Check { name: "kahler", identity: "J is parallel", tol_key: "kahler" },
    Check { name: "kahler_weyl", identity: "W₊ equals its closed Kähler form in s and ω", tol_key: "kahler_weyl" },
    Check { name: "sebastian", identity: "|W₊|² = s²/24", tol_key: "sebastian" },
    Check { name: "rho0_selfdual", identity: "ρ̊ = ρ − (s/4)ω is anti-self-dual", tol_key: "rho0_selfdual" },
    Check { name: "bach_kahler_formula", identity: "Kähler Bach formula agrees with the Bach tensor", tol_key: "bach_kahler_formula" },
];

const BACH_CHECK: Check = Check { name: "bach_norm", identity: "|B| vanishes", tol_key: "bach_norm" };

const DIVERGENCE_CHECK: Check = Check {
    name: "bach_divergence",
    identity: "Bach tensor is divergence-free",
    tol_key: "bach_divergence",
};

fn max_abs_diff(a: &[[f64; NVARS]; NVARS], b: &[[f64; NVARS]; NVARS]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..NVARS {
        for j in 0..NVARS {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

fn identity_samples(c: &CurvatureJets) -> Result<Vec<Sample>, Error> {
    let full = bach_full(c)?;
    let sd = bach_selfdual(c)?;
    let h = harmonica_residuals(c, &full)?;
    let (s3, s4) = (c.chart_scale(3), c.chart_scale(4));
    let agree = max_abs_diff(&full.b, &sd.b);
    let bi = bianchi_residual(c)?;
    let sw = star_weyl_residual(c)?;
    Ok(vec![
        (bi, bi / s3),
        (sw, sw / s4),
        (agree, agree / s4),
        (h.asym, h.asym / s4),
        (h.trace, h.trace / s4),
    ])
}

fn conformal_samples(def: &MetricDefinition, u: &Expr, p: [f64; NVARS]) -> Result<Vec<Sample>, Error> {
    let c = CurvatureJets::at(def, p, 2)?;
    let hat = CurvatureJets::at(&crate::conformal::rescale(def, u), p, 2)?;
    let s2 = c.chart_scale(2).max(hat.chart_scale(2));
    let w = weyl_invariance_residual(def, u, p)?;
    let r = riforma_residual(def, u, p)?;
    Ok(vec![(w, w / s2), (r, r / s2)])
}

fn kahler_samples(def: &MetricDefinition, c: &CurvatureJets, p: [f64; NVARS]) -> Result<Vec<Sample>, Error> {
    let j = complex_structure_jets(def, p, c.order())?;
    let k = KahlerPointData::new(c, &j)?;
    let b = c.bundle();
    let kr = kahler_residual(c, &j)?;
    let wk = wplus_kahler_residual(&b, &k);
    let se = sebastian_residual(&b);
    let rho = rho0_selfdual_residual(&c.metric, &k);
    let bk = max_abs_diff(&bach_kahler_formula(&b, &k), &bach_full(c)?.b);
    let (s1, s2, s4) = (c.chart_scale(1), c.chart_scale(2), c.chart_scale(4));
    Ok(vec![(kr, kr / s1), (wk, wk / s2), (se, se / s4), (rho, rho / s2), (bk, bk / s4)])
}

fn bach_samples(c: &CurvatureJets) -> Result<Vec<Sample>, Error> {
    let n = bach_full(c)?.norm(&c.metric.g_inv_values());
    Ok(vec![(n, n / c.chart_scale(4))])
}

fn fold(checks: &[&Check], per_point: &[Vec<Sample>], tols: &Tolerances) -> Vec<Residual> {
    checks
        .iter()
        .enumerate()
        .map(|(i, ch)| {
            let raw = per_point.iter().map(|v| v[i].0).fold(0.0, f64::max);
            let max = per_point.iter().map(|v| v[i].1).fold(0.0, f64::max);
            let tol = tols.get(ch.tol_key);
            Residual {
                name: ch.name.to_string(),
                identity: ch.identity.to_string(),
                max,
                raw_max: raw,
                tol,
                points: per_point.len(),
                pass: max <= tol && per_point.iter().all(|v| !v[i].1.is_nan()),
            }
        })
        .collect()
}

fn includes(s: Suite, part: Suite) -> bool {
    s == part || s == Suite::All
}

/// Runs the residual checks of `cfg.suite` on seeded points of the domain.
/// The Kähler checks are skipped for metrics without `J` under `all`.
pub fn run_suite(def: &MetricDefinition, cfg: &SuiteConfig) -> Result<SuiteReport, Error> {
    if cfg.suite == Suite::Classify {
        return Err(Error::Config("the classify suite runs through classify_metric".into()));
    }
    if !(4..=5).contains(&cfg.order) {
        return Err(Error::Config(format!("suite order must be 4 or 5, got {}", cfg.order)));
    }
    if cfg.points == 0 {
        return Err(Error::Config("need at least one point".into()));
    }
    if cfg.suite == Suite::Kahler && def.j.is_none() {
        return Err(Error::ComplexStructure(format!("{} declares no J", def.name)));
    }
    let pts = ball_points(&def.domain, cfg.points, cfg.seed, 0.0);
    let u = parse(TEST_FACTOR, &def.scope).map_err(|source| Error::Parse {
        component: "conformal factor".into(),
        source,
    })?;
    let with_identities = includes(cfg.suite, Suite::Identities);
    let with_conformal = includes(cfg.suite, Suite::Conformal);
    let with_kahler = includes(cfg.suite, Suite::Kahler) && def.j.is_some();
    let with_bach = includes(cfg.suite, Suite::Bach);

    let mut checks: Vec<&Check> = Vec::new();
    if with_identities {
        checks.extend(IDENTITY_CHECKS);
    }
    if with_conformal {
        checks.extend(CONFORMAL_CHECKS);
    }
    if with_kahler {
        checks.extend(KAHLER_CHECKS);
    }
    if with_bach {
        checks.push(&BACH_CHECK);
    }

    let per_point: Vec<Vec<Sample>> = pts
        .par_iter()
        .map(|p| -> Result<Vec<Sample>, Error> {
            let c = CurvatureJets::at(def, *p, 4)?;
            let mut out = Vec::new();
            if with_identities {
                out.extend(identity_samples(&c)?);
            }
            if with_conformal {
                out.extend(conformal_samples(def, &u, *p)?);
            }
            if with_kahler {
                out.extend(kahler_samples(def, &c, *p)?);
            }
            if with_bach {
                out.extend(bach_samples(&c)?);
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let mut residuals = fold(&checks, &per_point, &cfg.tolerances);

    if with_identities && cfg.order == 5 {
        let div: Vec<Vec<Sample>> = pts
            .iter()
            .take(DIVERGENCE_POINTS)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|p| -> Result<Vec<Sample>, Error> {
                let c = CurvatureJets::at(def, **p, 5)?;
                let b = bach_full(&c)?;
                let d = harmonica_residuals(&c, &b)?.div.unwrap_or(f64::NAN);
                Ok(vec![(d, d / c.chart_scale(5))])
            })
            .collect::<Result<_, _>>()?;
        residuals.extend(fold(&[&DIVERGENCE_CHECK], &div, &cfg.tolerances));
    }
    let pass = residuals.iter().all(|r| r.pass);
    Ok(SuiteReport {
        metric: def.name.clone(),
        suite: cfg.suite,
        points: pts.len(),
        seed: cfg.seed,
        order: cfg.order,
        residuals,
        pass,
    })
}

/// Seeded points and classification over the domain ball.
pub fn classify_metric(def: &MetricDefinition, cfg: &SuiteConfig) -> Result<ClassificationReport, Error> {
    if def.j.is_none() {
        return Err(Error::ComplexStructure(format!("{} declares no J", def.name)));
    }
    let pts = ball_points(&def.domain, cfg.points, cfg.seed, 0.0);
    classify(def, &pts, &cfg.tolerances.classify())
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub profile: ProfileAnsatz,
    pub bach_energy: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
    /// Sign changes of `s` along the `τ` axis, on a uniform grid.
    pub axis_sign_changes: usize,
    pub classification: Option<ClassificationReport>,
    /// Why classification was not produced, when it was not.
    pub classification_error: Option<String>,
    pub metric: MetricFile,
}

/// Grid used for the `τ`-axis sign count.
pub const AXIS_GRID: usize = 64;

/// Sign changes of the engine's `s` on the `τ` axis.
pub fn axis_sign_changes(p: &ProfileAnsatz, def: &MetricDefinition) -> Result<usize, Error> {
    let values: Vec<f64> = p
        .axis_points(AXIS_GRID)
        .par_iter()
        .map(|q| Ok(CurvatureJets::at(def, *q, 2)?.scalar.value()))
        .collect::<Result<_, Error>>()?;
    Ok(values.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count())
}

/// Search, then classify the best profile on `points` samples.
pub fn run_search(cfg: &SearchConfig, points: usize, tols: &Tolerances) -> Result<SearchResult, Error> {
    let mut cfg = cfg.clone();
    cfg.target = tols.get("search_target");
    let out = search(&cfg)?;
    let def = out.profile.compile()?;
    let samples = out.profile.sample_points(points, cfg.seed);
    let (classification, classification_error) = match classify(&def, &samples, &tols.classify()) {
        Ok(r) => (Some(r), None),
        Err(e @ Error::NotCertified { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(SearchResult {
        axis_sign_changes: axis_sign_changes(&out.profile, &def)?,
        metric: def.to_file(),
        profile: out.profile,
        bach_energy: out.bach_energy,
        iterations: out.iterations,
        evaluations: out.evaluations,
        restarts: out.restarts_used,
        converged: out.converged,
        classification,
        classification_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.apply("bianchi=1e-3").unwrap();
        assert_eq!(t.get("bianchi"), 1e-3);
        assert!(t.apply("nope=1").is_err());
        assert!(t.apply("bianchi").is_err());
        assert!(t.apply("bianchi=x").is_err());
        assert!(t.apply("bianchi=-1").is_err());
    }

    #[test]
    fn suite_names_parse() {
        assert_eq!("kahler".parse::<Suite>().unwrap(), Suite::Kahler);
        assert!("other".parse::<Suite>().is_err());
    }
}
