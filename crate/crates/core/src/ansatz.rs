//! Calabi-type Kähler metrics on ruled surfaces and a Bach-energy search.
//!
//! Chart `(x, y, τ, φ)`. With `p(τ) = cτ`, `c = ℓ/2` (`p ≡ 1` when `ℓ = 0`),
//! base factor `f = 1/(1 + k(x² + y²)/4)` and `θ = dφ + A`,
//! `A = (c/2) f (x dy − y dx)`, so that `dA = c f² dx∧dy`:
//!
//! ```text
//! g = p f² (dx² + dy²) + dτ²/Θ + Θ θ²,    ω = p f² dx∧dy + dτ∧θ.
//! ```
//!
//! The profile is carried by `F = pΘ`, a polynomial of degree `d` in
//! `t = (2τ − a − b)/(b − a)`, written as the cubic Hermite part fixed by
//! `Θ(a) = Θ(b) = 0`, `Θ'(a) = 2`, `Θ'(b) = −2` plus `S (1 − t²)² Q(t)` with
//! `Q` free of degree `d − 4`. The scalar curvature is `(2k − F'')/p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bach::bach_full;
use crate::curvature::CurvatureJets;
use crate::exprlang::{Domain, MetricDefinition, MetricFile};
use crate::jets::NVARS;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::Error;

/// Domain ball radius as a fraction of `(b − a)/2`.
pub const DOMAIN_FRACTION: f64 = 0.9;
/// Sampled `τ` range around the midpoint, as a fraction of `(b − a)/2`.
pub const TAU_SPAN: f64 = 0.85;
/// Sampled base and fiber coordinate range, as a fraction of `(b − a)/2`.
pub const TRANSVERSE_SPAN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileAnsatz {
    pub l: u32,
    pub k: f64,
    pub a: f64,
    pub b: f64,
    pub degree: usize,
    /// Coefficients of `Q`, lowest first; `degree − 3` entries.
    pub q: Vec<f64>,
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * t + v)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect()
}

impl ProfileAnsatz {
    pub fn new(l: u32, k: f64, a: f64, b: f64, degree: usize) -> Result<Self, Error> {
        if degree < 4 {
            return Err(Error::Config("profile degree must be at least 4".into()));
        }
        if !(0.0 < a && a < b) {
            return Err(Error::Config(format!("need 0 < a < b, got [{a}, {b}]")));
        }
        Ok(ProfileAnsatz {
            l,
            k,
            a,
            b,
            degree,
            q: vec![0.0; degree - 3],
        })
    }

    pub fn c(&self) -> f64 {
        self.l as f64 / 2.0
    }

    pub fn p(&self, tau: f64) -> f64 {
        if self.l == 0 {
            1.0
        } else {
            self.c() * tau
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn t_of(&self, tau: f64) -> f64 {
        (2.0 * tau - self.a - self.b) / (self.b - self.a)
    }

    pub fn tau_of(&self, t: f64) -> f64 {
        0.5 * (self.a + self.b) + t * self.half_width()
    }

    /// Scale of the free part, `p(mid) · (b − a)/2`.
    fn free_scale(&self) -> f64 {
        self.p(0.5 * (self.a + self.b)) * self.half_width()
    }

    /// Coefficients of `F` in powers of `t`, `degree + 1` entries.
    pub fn profile_coeffs(&self) -> Vec<f64> {
        let h = self.half_width();
        let (pa, pb) = (self.p(self.a), self.p(self.b));
        let alpha = 0.5 * h * (pa + pb);
        let beta = 0.5 * h * (pb - pa);
        let one_minus_t2 = [1.0, 0.0, -1.0];
        let mut f = poly_mul(&one_minus_t2, &[alpha, beta]);
        let bump = poly_mul(&one_minus_t2, &one_minus_t2);
        let scaled: Vec<f64> = self.q.iter().map(|v| v * self.free_scale()).collect();
        let free = poly_mul(&bump, &scaled);
        f.resize(self.degree + 1, 0.0);
        for (i, v) in free.iter().enumerate() {
            f[i] += v;
        }
        f
    }

    /// `F(τ) = p(τ)Θ(τ)`.
    pub fn f_at(&self, tau: f64) -> f64 {
        poly_eval(&self.profile_coeffs(), self.t_of(tau))
    }

    pub fn theta_at(&self, tau: f64) -> f64 {
        self.f_at(tau) / self.p(tau)
    }

    /// `dF/dτ` and `d²F/dτ²`.
    pub fn f_derivs(&self, tau: f64) -> (f64, f64) {
        let c = self.profile_coeffs();
        let d1 = poly_deriv(&c);
        let d2 = poly_deriv(&d1);
        let h = self.half_width();
        let t = self.t_of(tau);
        (poly_eval(&d1, t) / h, poly_eval(&d2, t) / (h * h))
    }

    /// Closed-form scalar curvature `(2k − F'')/p`.
    pub fn scalar_curvature(&self, tau: f64) -> f64 {
        (2.0 * self.k - self.f_derivs(tau).1) / self.p(tau)
    }

    /// Smallest `Θ` on an interior grid, relative to the end slopes.
    pub fn min_interior_theta(&self, n: usize) -> f64 {
        (1..n)
            .map(|i| {
                let t = -1.0 + 2.0 * i as f64 / n as f64;
                let tau = self.tau_of(t);
                // Θ vanishes linearly with slope 2 at the ends
                let dist = (tau - self.a).min(self.b - tau);
                self.theta_at(tau) / (2.0 * dist)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_admissible(&self) -> bool {
        self.min_interior_theta(64) > 0.0
    }

    /// The metric and complex structure as a metric definition.
    pub fn compile(&self) -> Result<MetricDefinition, Error> {
        if !self.is_admissible() {
            return Err(Error::Config("profile is not positive on (a, b)".into()));
        }
        let coeffs = self.profile_coeffs();
        let mut params = std::collections::BTreeMap::new();
        params.insert("c".to_string(), self.c());
        params.insert("k".to_string(), self.k);
        params.insert("a".to_string(), self.a);
        params.insert("b".to_string(), self.b);
        for (i, v) in coeffs.iter().enumerate() {
            params.insert(format!("f{i}"), *v);
        }
        let t = "((2*tau - a - b)/(b - a))";
        let mut poly = format!("f{}", self.degree);
        for i in (0..self.degree).rev() {
            poly = format!("f{i} + {t}*({poly})");
        }
        let p = if self.l == 0 { "1".to_string() } else { "(c*tau)".to_string() };
        let theta = format!("(({poly})/{p})");
        let f = "(1/(1 + k*(x^2 + y^2)/4))";
        let ax = format!("(-(c/2)*{f}*y)");
        let ay = format!("((c/2)*{f}*x)");
        let base = format!("{p}*{f}^2");

        let mut g = std::collections::BTreeMap::new();
        g.insert("00".into(), format!("{base} + {theta}*{ax}^2"));
        g.insert("01".into(), format!("{theta}*{ax}*{ay}"));
        g.insert("11".into(), format!("{base} + {theta}*{ay}^2"));
        g.insert("03".into(), format!("{theta}*{ax}"));
        g.insert("13".into(), format!("{theta}*{ay}"));
        g.insert("22".into(), format!("1/{theta}"));
        g.insert("33".into(), theta.clone());

        // J^i_j; J*dτ = −Θθ, J*θ = dτ/Θ, J*dx = −dy, J*dy = dx
        let mut j = std::collections::BTreeMap::new();
        j.insert("10".into(), "1".into());
        j.insert("01".into(), "-1".into());
        j.insert("20".into(), format!("-{theta}*{ax}"));
        j.insert("21".into(), format!("-{theta}*{ay}"));
        j.insert("23".into(), format!("-{theta}"));
        j.insert("30".into(), format!("-{ay}"));
        j.insert("31".into(), ax.clone());
        j.insert("32".into(), format!("1/{theta}"));

        let file = MetricFile {
            name: format!("calabi-l{}-k{}", self.l, self.k),
            coords: ["x", "y", "tau", "phi"].map(String::from),
            params,
            g,
            j: Some(j),
            domain: Domain {
                center: [0.0, 0.0, 0.5 * (self.a + self.b), 0.0],
                radius: self.half_width() * DOMAIN_FRACTION,
            },
        };
        MetricDefinition::from_file(&file)
    }

    /// Seeded points inside the domain ball: `τ` uniform over most of
    /// `[a, b]`, base and fiber coordinates in a small box.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<[f64; NVARS]> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let h = self.half_width();
        (0..n)
            .map(|_| {
                let mut side = || h * TRANSVERSE_SPAN * rng.gen_range(-1.0..1.0);
                let (x, y, phi) = (side(), side(), side());
                let tau = 0.5 * (self.a + self.b) + h * TAU_SPAN * rng.gen_range(-1.0..1.0);
                [x, y, tau, phi]
            })
            .collect()
    }

    /// Points on the `τ` axis with `x = y = φ = 0`, suitable for the ball domain.
    pub fn axis_points(&self, n: usize) -> Vec<[f64; NVARS]> {
        let inner = self.half_width() * TAU_SPAN;
        (0..n)
            .map(|i| {
                let t = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
                [0.0, 0.0, 0.5 * (self.a + self.b) + inner * t, 0.0]
            })
            .collect()
    }
}

/// `(|B| / |Rm|²)²` at one point, both norms full contractions in `g`.
/// Invariant under diffeomorphisms and homotheties.
pub fn normalized_bach_sq(def: &MetricDefinition, point: [f64; NVARS]) -> Result<f64, Error> {
    let c = CurvatureJets::at(def, point, 4)?;
    let gi = c.metric.g_inv_values();
    let b = bach_full(&c)?.norm(&gi);
    let rm = c.riemann.values().full_norm_sq(&gi);
    if !(rm > 0.0) {
        return Ok(if b == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((b / rm).powi(2))
}

/// Mean normalized `|B|²` over the samples.
pub fn bach_energy(p: &ProfileAnsatz, samples: &[[f64; NVARS]]) -> Result<f64, Error> {
    let mut def = p.compile()?;
    // samples may leave the sampling ball; the definition is valid on the whole slab
    def.domain.radius = f64::INFINITY;
    let vals: Result<Vec<f64>, Error> = samples
        .par_iter()
        .map(|pt| normalized_bach_sq(&def, *pt))
        .collect();
    let vals = vals?;
    Ok(vals.iter().sum::<f64>() / vals.len().max(1) as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub l: u32,
    pub k: f64,
    pub a: f64,
    /// Starting right endpoint; varied when `vary_interval` is set.
    pub b: f64,
    pub degree: usize,
    pub seed: u64,
    pub budget: usize,
    pub restarts: usize,
    pub target: f64,
    /// Keep polishing below `target` down to this energy.
    pub polish_target: f64,
    pub samples: usize,
    pub vary_interval: bool,
    /// Lower bound on `b/a`; the collapse `b → a` tends to a product metric.
    pub min_ratio: f64,
}

impl SearchConfig {
    pub fn new(l: u32, k: f64, a: f64, b: f64) -> Self {
        SearchConfig {
            l,
            k,
            a,
            b,
            degree: 8,
            seed: crate::sampling::DEFAULT_SEED,
            budget: 50_000,
            restarts: 8,
            target: 1e-8,
            polish_target: 1e-22,
            samples: 8,
            vary_interval: true,
            min_ratio: 1.05,
        }
    }
}

pub const COEFF_BOX: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub profile: ProfileAnsatz,
    pub bach_energy: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
}

fn decode(cfg: &SearchConfig, x: &[f64]) -> Option<ProfileAnsatz> {
    let nq = cfg.degree - 3;
    if x.iter().any(|v| v.abs() > COEFF_BOX) {
        return None;
    }
    let b = if cfg.vary_interval {
        cfg.a * (1.0 + x[nq].exp())
    } else {
        cfg.b
    };
    if b < cfg.min_ratio * cfg.a {
        return None;
    }
    let mut p = ProfileAnsatz::new(cfg.l, cfg.k, cfg.a, b, cfg.degree).ok()?;
    p.q = x[..nq].to_vec();
    Some(p)
}

fn objective(cfg: &SearchConfig, samples_t: &[[f64; NVARS]], x: &[f64]) -> f64 {
    let Some(p) = decode(cfg, x) else {
        return 1e6 + x.iter().map(|v| v * v).sum::<f64>();
    };
    let m = p.min_interior_theta(64);
    if !(m > 0.0) {
        return 1e3 + (-m).min(1e3);
    }
    // samples are stored with τ as a fraction t of the half-width
    let pts: Vec<[f64; NVARS]> = samples_t
        .iter()
        .map(|s| [s[0], s[1], p.tau_of(s[2]), s[3]])
        .collect();
    bach_energy(&p, &pts).unwrap_or(1e3)
}

/// Nelder–Mead over `Q` (and `log(b/a − 1)`) with seeded restarts.
pub fn search(cfg: &SearchConfig) -> Result<SearchOutcome, Error> {
    if cfg.degree < 4 {
        return Err(Error::Config("profile degree must be at least 4".into()));
    }
    if !(cfg.a > 0.0 && cfg.b > cfg.a) {
        return Err(Error::Config("need 0 < a < b".into()));
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let shape = ProfileAnsatz::new(cfg.l, cfg.k, 1.0, 2.0, cfg.degree)?;
    let samples_t: Vec<[f64; NVARS]> = shape
        .sample_points(cfg.samples, cfg.seed)
        .into_iter()
        .map(|p| [p[0], p[1], shape.t_of(p[2]), p[3]])
        .collect();

    let nq = cfg.degree - 3;
    let dim = nq + usize::from(cfg.vary_interval);
    let start_eta = (cfg.b / cfg.a - 1.0).ln();

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evals = 0;
    let mut iterations = 0;
    let mut restarts_used = 0;
    for r in 0..cfg.restarts.max(1) {
        if evals >= cfg.budget {
            break;
        }
        restarts_used = r + 1;
        let mut x0 = vec![0.0; dim];
        if r > 0 {
            for v in x0[..nq].iter_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
        if cfg.vary_interval {
            x0[nq] = start_eta + if r > 0 { rng.gen_range(-1.0..1.0) } else { 0.0 };
        }
        let remaining = cfg.budget - evals;
        // one restart may use up to half of what is left, the last all of it
        let share = if r + 1 == cfg.restarts { remaining } else { remaining.div_ceil(2) };
        let opts = NelderMeadOptions {
            initial_step: 0.2,
            max_evals: share,
            stop_value: cfg.polish_target,
            xtol: 1e-13,
            ftol: 0.0,
        };
        let mut m = nelder_mead(|x| objective(cfg, &samples_t, x), &x0, &opts);
        let mut used = m.evals;
        let mut its = m.iterations;
        // restart the simplex in place while it keeps improving
        while m.value > cfg.polish_target && used < share {
            let again = NelderMeadOptions {
                initial_step: 1e-3,
                max_evals: share - used,
                ..opts
            };
            let m2 = nelder_mead(|x| objective(cfg, &samples_t, x), &m.x, &again);
            used += m2.evals;
            its += m2.iterations;
            let improved = m2.value < 0.5 * m.value;
            if m2.value < m.value {
                m = m2;
            }
            if !improved {
                break;
            }
        }
        evals += used;
        iterations += its;
        if best.as_ref().map_or(true, |(_, v)| m.value < *v) {
            best = Some((m.x.clone(), m.value));
        }
        if m.value <= cfg.target {
            break;
        }
    }
    let (x, value) = best.expect("at least one restart runs");
    let profile = decode(cfg, &x).ok_or_else(|| Error::Degenerate("best point left the box".into()))?;
    Ok(SearchOutcome {
        profile,
        bach_energy: value,
        evaluations: evals,
        iterations,
        restarts_used,
        converged: value <= cfg.target,
    })
}
