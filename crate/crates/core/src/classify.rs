//! The I/II/III(a/b) decision table over sampled data, and diagnostics on
//! the zero set `Z = {s = 0}` and of the tensor `q`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bach::bach_full;
use crate::conformal::{derdzinski_einstein_residual, kappa, KappaReport, KappaSample};
use crate::curvature::CurvatureJets;
use crate::exprlang::MetricDefinition;
use crate::geometry::Mat4;
use crate::jets::{Jet, JetFn, NVARS};
use crate::kahler::{compose_j, complex_structure_jets, kahler_residual, lower, xi_jets, KahlerPointData};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    #[serde(rename = "I(a)")]
    IA,
    #[serde(rename = "I(b)")]
    IB,
    #[serde(rename = "II(a)")]
    IIA,
    #[serde(rename = "II(b)")]
    IIB,
    #[serde(rename = "III(a)")]
    IIIA,
    #[serde(rename = "III(b)")]
    IIIB,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::IA => "I(a)",
            Label::IB => "I(b)",
            Label::IIA => "II(a)",
            Label::IIB => "II(b)",
            Label::IIIA => "III(a)",
            Label::IIIB => "III(b)",
            Label::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sign of `κ` from normalized samples, or `None` when tolerances are straddled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaSign {
    Positive,
    Zero,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyTolerances {
    /// `max|∇J| / chart_scale(1)`.
    pub kahler: f64,
    /// `|B| / chart_scale(4)`.
    pub bach: f64,
    /// `|κ| / K³` counted as zero, `K = |Rm|`.
    pub kappa_zero: f64,
    /// `|κ| / K³` needed for a definite sign.
    pub kappa_sign: f64,
    /// Largest accepted spread of `κ` relative to its mean.
    pub kappa_spread: f64,
    /// `|r̊| / K` counted as Einstein.
    pub einstein: f64,
    /// `s_floor` as a fraction of the largest sampled `|s|`.
    pub s_floor: f64,
    /// Threshold for the indicators in [`cr_checks`].
    pub indicator: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            kahler: 1e-8,
            bach: 1e-7,
            kappa_zero: 1e-9,
            kappa_sign: 1e-8,
            kappa_spread: 1e-3,
            einstein: 1e-6,
            s_floor: 1e-3,
            indicator: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub kahler_max: f64,
    pub bach_max: f64,
}

/// `h = s⁻²g` on one side of `Z`.
#[derive(Debug, Clone, Serialize)]
pub struct EinsteinSide {
    /// `+1` for `s > 0`, `−1` for `s < 0`.
    pub side: i8,
    pub points: usize,
    pub max_traceless_ricci: f64,
    /// Largest `|s_h/4 − κ/4| / |κ/4|`.
    pub max_constant_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    #[serde(rename = "type")]
    pub label: Label,
    pub reason: Option<String>,
    pub kappa: KappaReport,
    pub kappa_sign: Option<KappaSign>,
    pub s_min: f64,
    pub s_max: f64,
    pub einstein_flag: bool,
    pub max_traceless_ricci: f64,
    pub certification: Certification,
    pub derdzinski: Vec<EinsteinSide>,
    pub zero_locus: Option<ZLocusReport>,
}

struct PointData {
    kappa: f64,
    kappa_norm: f64,
    s: f64,
    r0_norm: f64,
    kahler: f64,
    bach: f64,
}

fn curvature_norm(c: &CurvatureJets) -> f64 {
    let gi = c.metric.g_inv_values();
    c.riemann.values().full_norm_sq(&gi).max(0.0).sqrt()
}

fn point_data(def: &MetricDefinition, p: [f64; NVARS]) -> Result<PointData, Error> {
    let c = CurvatureJets::at(def, p, 4)?;
    let j = complex_structure_jets(def, p, 4)?;
    let gi = c.metric.g_inv_values();
    let k = curvature_norm(&c);
    let kap = kappa(&c)?;
    let r0 = c.traceless_ricci().values().full_norm_sq(&gi).max(0.0).sqrt();
    Ok(PointData {
        kappa: kap,
        kappa_norm: if kap == 0.0 { 0.0 } else { kap / k.powi(3).max(1e-300) },
        s: c.scalar.value(),
        r0_norm: if r0 == 0.0 { 0.0 } else { r0 / k.max(1e-300) },
        kahler: kahler_residual(&c, &j)? / c.chart_scale(1),
        bach: bach_full(&c)?.norm(&gi) / c.chart_scale(4),
    })
}

/// The decision rule on normalized `κ` samples.
pub fn kappa_sign(normalized: &[f64], tols: &ClassifyTolerances) -> Option<KappaSign> {
    if normalized.iter().all(|k| k.abs() <= tols.kappa_zero) {
        Some(KappaSign::Zero)
    } else if normalized.iter().all(|k| *k >= tols.kappa_sign) {
        Some(KappaSign::Positive)
    } else if normalized.iter().all(|k| *k <= -tols.kappa_sign) {
        Some(KappaSign::Negative)
    } else {
        None
    }
}

/// Label from the `κ` sign and the Einstein flag.
pub fn decide(sign: Option<KappaSign>, einstein: bool) -> Label {
    match (sign, einstein) {
        (None, _) => Label::Indeterminate,
        (Some(KappaSign::Positive), true) => Label::IA,
        (Some(KappaSign::Positive), false) => Label::IB,
        (Some(KappaSign::Zero), true) => Label::IIA,
        (Some(KappaSign::Zero), false) => Label::IIB,
        (Some(KappaSign::Negative), true) => Label::IIIA,
        (Some(KappaSign::Negative), false) => Label::IIIB,
    }
}

/// Certifies Kähler and Bach-flat at every sample, then applies the table.
pub fn classify(
    def: &MetricDefinition,
    samples: &[[f64; NVARS]],
    tols: &ClassifyTolerances,
) -> Result<ClassificationReport, Error> {
    if samples.is_empty() {
        return Err(Error::Config("classification needs at least one sample".into()));
    }
    let data: Vec<PointData> = samples
        .par_iter()
        .map(|p| point_data(def, *p))
        .collect::<Result<_, _>>()?;

    let mut kahler_max = 0.0f64;
    let mut bach_max = 0.0f64;
    for (p, d) in samples.iter().zip(&data) {
        for (name, v, tol) in [("kahler_residual", d.kahler, tols.kahler), ("bach_norm", d.bach, tols.bach)] {
            if !(v <= tol) {
                return Err(Error::NotCertified {
                    residual: name,
                    value: v,
                    tol,
                    point: *p,
                });
            }
        }
        kahler_max = kahler_max.max(d.kahler);
        bach_max = bach_max.max(d.bach);
    }

    let kreport = KappaReport::from_samples(
        samples
            .iter()
            .zip(&data)
            .map(|(p, d)| KappaSample {
                point: *p,
                kappa: d.kappa,
            })
            .collect(),
    );
    let normalized: Vec<f64> = data.iter().map(|d| d.kappa_norm).collect();
    let s_min = data.iter().map(|d| d.s).fold(f64::INFINITY, f64::min);
    let s_max = data.iter().map(|d| d.s).fold(f64::NEG_INFINITY, f64::max);
    let max_r0 = data.iter().map(|d| d.r0_norm).fold(0.0, f64::max);
    let einstein = max_r0 <= tols.einstein;

    let mut sign = kappa_sign(&normalized, tols);
    let mut reason = None;
    if sign.is_none() {
        reason = Some("kappa sign straddles the tolerances".to_string());
    } else if sign != Some(KappaSign::Zero) && kreport.normalized_spread > tols.kappa_spread {
        reason = Some(format!(
            "kappa not constant: relative spread {:e}",
            kreport.normalized_spread
        ));
        sign = None;
    }
    let label = decide(sign, einstein);

    let s_floor = tols.s_floor * s_min.abs().max(s_max.abs());
    let derdzinski = if matches!(label, Label::IB | Label::IIIB) {
        einstein_sides(def, samples, kreport.mean, s_floor)?
    } else {
        Vec::new()
    };
    let zero_locus = if label == Label::IIIB && s_min < 0.0 && s_max > 0.0 {
        match locate_zero_set(def, samples, kreport.mean, tols) {
            Ok(z) => Some(z),
            Err(Error::NoSignChange) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    Ok(ClassificationReport {
        label,
        reason,
        kappa: kreport,
        kappa_sign: sign,
        s_min,
        s_max,
        einstein_flag: einstein,
        max_traceless_ricci: max_r0,
        certification: Certification { kahler_max, bach_max },
        derdzinski,
        zero_locus,
    })
}

/// Einstein residuals of `h = s⁻²g` at samples with `|s| ≥ s_floor`,
/// grouped by the sign of `s`.
pub fn einstein_sides(
    def: &MetricDefinition,
    samples: &[[f64; NVARS]],
    kappa: f64,
    s_floor: f64,
) -> Result<Vec<EinsteinSide>, Error> {
    let results: Vec<Option<(f64, f64, f64)>> = samples
        .par_iter()
        .map(|p| {
            let c = CurvatureJets::at(def, *p, 4)?;
            match derdzinski_einstein_residual(&c, s_floor) {
                Ok(r) => Ok(Some((
                    r.s,
                    r.traceless_ricci_norm,
                    (r.einstein_constant - kappa / 4.0).abs() / (kappa / 4.0).abs().max(1e-300),
                ))),
                Err(Error::NearZeroLocus { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, Error>>()?;
    let mut out = Vec::new();
    for side in [1i8, -1] {
        let pts: Vec<_> = results
            .iter()
            .flatten()
            .filter(|(s, _, _)| s.signum() as i8 == side)
            .collect();
        if pts.is_empty() {
            continue;
        }
        out.push(EinsteinSide {
            side,
            points: pts.len(),
            max_traceless_ricci: pts.iter().map(|p| p.1).fold(0.0, f64::max),
            max_constant_error: pts.iter().map(|p| p.2).fold(0.0, f64::max),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondFundamentalForm {
    /// `𝕀` on a `ǧ`-orthonormal frame of `TZ`, whose first vector is `ξ/|ξ|`.
    pub ii: [[f64; 3]; 3],
    /// `−(√3 / 2√|κ|) Δs`.
    pub umbilic_factor: f64,
    /// `max |𝕀_ij − factor·δ_ij|`.
    pub umbilic_residual: f64,
    /// `|tr 𝕀 / 3 − factor|`.
    pub mean_curvature_residual: f64,
    /// `max |𝕀_ij − 𝕀_ji|`.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrChecks {
    pub levi_nondeg: bool,
    pub laplacian_s: f64,
    pub ii_norm: f64,
    /// `|∇̌ξ|²` on `(Z, ǧ)`, equal to `ř(ξ, ξ)` for the Killing field `ξ`.
    pub ricci_xi: f64,
    /// Tangential part of `∇_ξ ξ`.
    pub xi_geodesic_residual: f64,
    pub xi_length_residual: f64,
    /// The four indicators are either all nonzero or all zero.
    pub consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZCrossing {
    pub point: [f64; NVARS],
    pub s: f64,
    pub grad_norm_sq: f64,
    /// `| |∇s|² + κ/12 |`.
    pub gradnorm_residual: f64,
    /// Unit conormal `ν = 2√(3/|κ|) ds`, lowered.
    pub nu: [f64; NVARS],
    pub second_fundamental_form: SecondFundamentalForm,
    pub weyl_norm: f64,
    pub weyl_plus_norm: f64,
    pub cr: CrChecks,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZLocusReport {
    pub kappa: f64,
    pub crossings: Vec<ZCrossing>,
    pub max_gradnorm_residual: f64,
    pub max_umbilic_residual: f64,
    pub max_weyl_norm: f64,
    pub max_xi_geodesic_residual: f64,
    pub max_xi_length_residual: f64,
    pub cr_consistent: bool,
}

const LINE_STEPS: usize = 24;
const CROSSING_TOL: f64 = 1e-9;

fn scalar_and_gradient(def: &MetricDefinition, p: [f64; NVARS]) -> Result<(f64, [f64; NVARS]), Error> {
    let c = CurvatureJets::at(def, p, 3)?;
    Ok((c.scalar.value(), std::array::from_fn(|i| c.scalar.diff(i).value())))
}

/// Chord of the domain ball through `p` along `axis`, as a parameter range.
fn chord(def: &MetricDefinition, p: &[f64; NVARS], axis: usize) -> Option<(f64, f64)> {
    let d = &def.domain;
    let off: f64 = (0..NVARS)
        .filter(|i| *i != axis)
        .map(|i| (p[i] - d.center[i]).powi(2))
        .sum();
    let r2 = (d.radius * (1.0 - 1e-9)).powi(2) - off;
    if !(r2 > 0.0) {
        return None;
    }
    let h = r2.sqrt();
    Some((d.center[axis] - h, d.center[axis] + h))
}

/// Root of `s` on `[lo, hi]` along `axis`, bracketed by a sign change.
fn polish(
    def: &MetricDefinition,
    base: [f64; NVARS],
    axis: usize,
    mut lo: f64,
    mut hi: f64,
    s_lo: f64,
) -> Result<[f64; NVARS], Error> {
    let at = |t: f64| {
        let mut q = base;
        q[axis] = t;
        q
    };
    let mut t = 0.5 * (lo + hi);
    for _ in 0..100 {
        let (s, ds) = scalar_and_gradient(def, at(t))?;
        if s.abs() <= CROSSING_TOL {
            return Ok(at(t));
        }
        if (s > 0.0) == (s_lo > 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - s / ds[axis];
        t = if ds[axis] != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    Ok(at(t))
}

/// Crossings of `s = 0` along the coordinate lines through the samples.
pub fn locate_zero_set(
    def: &MetricDefinition,
    samples: &[[f64; NVARS]],
    kappa: f64,
    tols: &ClassifyTolerances,
) -> Result<ZLocusReport, Error> {
    if !(kappa < 0.0) {
        return Err(Error::Config(format!("zero set needs kappa < 0, got {kappa:e}")));
    }
    let lines: Vec<([f64; NVARS], usize)> = samples
        .iter()
        .flat_map(|p| (0..NVARS).map(move |a| (*p, a)))
        .collect();
    let found: Vec<Vec<[f64; NVARS]>> = lines
        .par_iter()
        .map(|(p, axis)| -> Result<Vec<[f64; NVARS]>, Error> {
            let Some((t0, t1)) = chord(def, p, *axis) else {
                return Ok(Vec::new());
            };
            let mut out = Vec::new();
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..=LINE_STEPS {
                let t = t0 + (t1 - t0) * i as f64 / LINE_STEPS as f64;
                let mut q = *p;
                q[*axis] = t;
                let s = CurvatureJets::at(def, q, 2)?.scalar.value();
                if let Some((tp, sp)) = prev {
                    if (sp < 0.0) != (s < 0.0) {
                        out.push(polish(def, *p, *axis, tp, t, sp)?);
                    }
                }
                prev = Some((t, s));
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;

    let mut points: Vec<[f64; NVARS]> = Vec::new();
    for q in found.into_iter().flatten() {
        let dup = points
            .iter()
            .any(|o| o.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) < 1e-7);
        if !dup {
            points.push(q);
        }
    }
    if points.is_empty() {
        return Err(Error::NoSignChange);
    }
    let crossings: Vec<ZCrossing> = points
        .par_iter()
        .map(|p| crossing_report(def, *p, kappa, tols))
        .collect::<Result<_, _>>()?;
    let fold = |f: fn(&ZCrossing) -> f64| crossings.iter().map(f).fold(0.0, f64::max);
    Ok(ZLocusReport {
        kappa,
        max_gradnorm_residual: fold(|c| c.gradnorm_residual),
        max_umbilic_residual: fold(|c| c.second_fundamental_form.umbilic_residual),
        max_weyl_norm: fold(|c| c.weyl_norm),
        max_xi_geodesic_residual: fold(|c| c.cr.xi_geodesic_residual),
        max_xi_length_residual: fold(|c| c.cr.xi_length_residual),
        cr_consistent: crossings.iter().all(|c| c.cr.consistent),
        crossings,
    })
}

fn dot(g: &Mat4, u: &[f64; NVARS], v: &[f64; NVARS]) -> f64 {
    let mut acc = 0.0;
    for a in 0..NVARS {
        for b in 0..NVARS {
            acc += g[a][b] * u[a] * v[b];
        }
    }
    acc
}

fn bilinear(t: &Mat4, u: &[f64; NVARS], v: &[f64; NVARS]) -> f64 {
    dot(t, u, v)
}

/// `g`-orthonormal frame of the orthogonal complement of `normal`,
/// starting from `first` when it is nonzero.
fn tangent_frame(g: &Mat4, normal: &[f64; NVARS], first: &[f64; NVARS]) -> Result<[[f64; NVARS]; 3], Error> {
    let mut basis: Vec<[f64; NVARS]> = Vec::new();
    let nn = dot(g, normal, normal);
    if !(nn > 0.0) {
        return Err(Error::Degenerate("zero normal at crossing".into()));
    }
    let n_unit: [f64; NVARS] = std::array::from_fn(|i| normal[i] / nn.sqrt());
    let mut candidates = vec![*first];
    for a in 0..NVARS {
        let mut e = [0.0; NVARS];
        e[a] = 1.0;
        candidates.push(e);
    }
    for mut v in candidates {
        let scale = dot(g, &v, &v).sqrt();
        for u in std::iter::once(&n_unit).chain(basis.iter()) {
            let k = dot(g, &v, u);
            for i in 0..NVARS {
                v[i] -= k * u[i];
            }
        }
        let len = dot(g, &v, &v).sqrt();
        if len > 1e-6 * scale.max(1e-300) {
            basis.push(std::array::from_fn(|i| v[i] / len));
        }
        if basis.len() == 3 {
            break;
        }
    }
    if basis.len() < 3 {
        return Err(Error::Degenerate("tangent projection degenerate".into()));
    }
    Ok([basis[0], basis[1], basis[2]])
}

struct CrossingFrame {
    k: KahlerPointData,
    g: Mat4,
    grad: [f64; NVARS],
    frame: [[f64; NVARS]; 3],
}

fn crossing_frame(c: &CurvatureJets, j: &crate::geometry::JetMat4) -> Result<CrossingFrame, Error> {
    let k = KahlerPointData::new(c, j)?;
    let g = c.metric.g_values();
    let gi = c.metric.g_inv_values();
    let grad: [f64; NVARS] = std::array::from_fn(|a| (0..NVARS).map(|b| gi[a][b] * k.ds[b]).sum());
    let frame = tangent_frame(&g, &grad, &k.xi)?;
    Ok(CrossingFrame { k, g, grad, frame })
}

/// `𝕀 = ∇ν` on `TZ` and its umbilic residual.
pub fn second_fundamental_form(
    def: &MetricDefinition,
    point: [f64; NVARS],
    kappa: f64,
) -> Result<SecondFundamentalForm, Error> {
    let c = CurvatureJets::at(def, point, 4)?;
    let j = complex_structure_jets(def, point, 4)?;
    let f = crossing_frame(&c, &j)?;
    Ok(sff_from(&f, kappa))
}

fn sff_from(f: &CrossingFrame, kappa: f64) -> SecondFundamentalForm {
    let mu = 2.0 * (3.0 / kappa.abs()).sqrt();
    let ii: [[f64; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| mu * bilinear(&f.k.hess_s, &f.frame[i], &f.frame[j])));
    let factor = -(3f64.sqrt() / (2.0 * kappa.abs().sqrt())) * f.k.laplacian_s;
    let mut umbilic = 0.0f64;
    let mut asym = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { factor } else { 0.0 };
            umbilic = umbilic.max((ii[i][j] - target).abs());
            asym = asym.max((ii[i][j] - ii[j][i]).abs());
        }
    }
    let mean = (ii[0][0] + ii[1][1] + ii[2][2]) / 3.0;
    SecondFundamentalForm {
        ii,
        umbilic_factor: factor,
        umbilic_residual: umbilic,
        mean_curvature_residual: (mean - factor).abs(),
        asymmetry: asym,
    }
}

/// Full-contraction norm of the Weyl tensor.
pub fn weyl_on_z_residual(def: &MetricDefinition, point: [f64; NVARS]) -> Result<f64, Error> {
    let c = CurvatureJets::at(def, point, 2)?;
    let gi = c.metric.g_inv_values();
    Ok(c.weyl.values().full_norm_sq(&gi).max(0.0).sqrt())
}

/// Levi-form and `ξ` data at a crossing.
pub fn cr_checks(
    def: &MetricDefinition,
    point: [f64; NVARS],
    kappa: f64,
    tols: &ClassifyTolerances,
) -> Result<CrChecks, Error> {
    let c = CurvatureJets::at(def, point, 4)?;
    let j = complex_structure_jets(def, point, 4)?;
    let f = crossing_frame(&c, &j)?;
    let ii = sff_from(&f, kappa);
    cr_from(&c, &j, &f, &ii, kappa, tols)
}

fn cr_from(
    c: &CurvatureJets,
    j: &crate::geometry::JetMat4,
    f: &CrossingFrame,
    ii: &SecondFundamentalForm,
    kappa: f64,
    tols: &ClassifyTolerances,
) -> Result<CrChecks, Error> {
    // ∇_b ξ_a, derivative index first
    let dxi = lower(&c.metric, &xi_jets(c, j)).covariant_derivative(&c.gamma);
    let dxi: Mat4 = std::array::from_fn(|b| std::array::from_fn(|a| dxi.at(&[b, a]).value()));
    let mut ricci_xi = 0.0;
    for u in &f.frame {
        for v in &f.frame {
            ricci_xi += bilinear(&dxi, u, v).powi(2);
        }
    }
    let xi = f.k.xi;
    let geodesic = f
        .frame
        .iter()
        .map(|e| bilinear(&dxi, &xi, e).powi(2))
        .sum::<f64>()
        .sqrt();
    let ii_norm = ii.ii.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let lap = f.k.laplacian_s;
    let indicators = [lap.abs() > tols.indicator, ii_norm > tols.indicator, ricci_xi > tols.indicator];
    let levi = indicators[0];
    Ok(CrChecks {
        levi_nondeg: levi,
        laplacian_s: lap,
        ii_norm,
        ricci_xi,
        xi_geodesic_residual: geodesic,
        xi_length_residual: (dot(&f.g, &xi, &xi) + kappa / 12.0).abs(),
        consistent: indicators.iter().all(|b| *b == levi),
    })
}

fn crossing_report(
    def: &MetricDefinition,
    point: [f64; NVARS],
    kappa: f64,
    tols: &ClassifyTolerances,
) -> Result<ZCrossing, Error> {
    let c = CurvatureJets::at(def, point, 4)?;
    let j = complex_structure_jets(def, point, 4)?;
    let f = crossing_frame(&c, &j)?;
    let ii = sff_from(&f, kappa);
    let cr = cr_from(&c, &j, &f, &ii, kappa, tols)?;
    let gi = c.metric.g_inv_values();
    let grad_sq = dot(&f.g, &f.grad, &f.grad);
    let mu = 2.0 * (3.0 / kappa.abs()).sqrt();
    Ok(ZCrossing {
        point,
        s: f.k.s,
        grad_norm_sq: grad_sq,
        gradnorm_residual: (grad_sq + kappa / 12.0).abs(),
        nu: std::array::from_fn(|a| mu * f.k.ds[a]),
        second_fundamental_form: ii,
        weyl_norm: c.weyl.values().full_norm_sq(&gi).max(0.0).sqrt(),
        weyl_plus_norm: c.weyl_plus().values().full_norm_sq(&gi).max(0.0).sqrt(),
        cr,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct QTensorReport {
    pub point: [f64; NVARS],
    pub s: f64,
    pub kappa: f64,
    /// `max |q(J·,·) − ρ̃|`.
    pub residual: f64,
    /// Eigenvalues of `q` on a `g`-orthonormal frame of `span{∇s, ξ}`;
    /// `None` at critical points of `s`.
    pub block_eigenvalues: Option<[f64; 2]>,
}

/// `q = ((2s + κs⁻²)/12) g + s⁻²(|∇s|² g − ds⊗ds − J*ds⊗J*ds)` against
/// `ρ̃ = ρ + dd^c log|s|`, with `d^c f = −J*df`.
///
/// The second term of `q` is `s⁻²|∇s|² g^⊥` written without dividing by
/// `|∇s|²`, so it extends by zero across critical points of `s`.
pub fn q_tensor_residual(
    def: &MetricDefinition,
    point: [f64; NVARS],
    s_floor: f64,
) -> Result<QTensorReport, Error> {
    let c = CurvatureJets::at(def, point, 4)?;
    let j = complex_structure_jets(def, point, 4)?;
    let k = KahlerPointData::new(&c, &j)?;
    let s = k.s;
    if s.abs() < s_floor {
        return Err(Error::NearZeroLocus { s, floor: s_floor });
    }
    let kap = kappa(&c)?;
    let g = c.metric.g_values();
    let gi = c.metric.g_inv_values();
    let grad: [f64; NVARS] = std::array::from_fn(|a| (0..NVARS).map(|b| gi[a][b] * k.ds[b]).sum());
    let grad_sq = dot(&g, &grad, &grad);
    let jds: [f64; NVARS] = std::array::from_fn(|b| (0..NVARS).map(|a| k.ds[a] * k.j[a][b]).sum());
    let s2 = s * s;
    let q: Mat4 = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            (2.0 * s + kap / s2) / 12.0 * g[a][b] + (grad_sq * g[a][b] - k.ds[a] * k.ds[b] - jds[a] * jds[b]) / s2
        })
    });

    let abs_s = if s < 0.0 { c.scalar.scale(-1.0) } else { c.scalar.clone() };
    let log_s = abs_s.apply(JetFn::Log)?;
    let dl = log_s.gradient();
    let dc: Vec<Jet> = (0..NVARS)
        .map(|b| {
            let mut acc = Jet::zero(dl[0].order());
            for a in 0..NVARS {
                acc.sub_product(&dl[a], &j[a][b]);
            }
            acc
        })
        .collect();
    let qj = compose_j(&k.j, &q);
    let mut residual = 0.0f64;
    for a in 0..NVARS {
        for b in 0..NVARS {
            let ddc = dc[b].diff(a).value() - dc[a].diff(b).value();
            residual = residual.max((qj[a][b] - k.rho.0[a][b] - ddc).abs());
        }
    }

    let block = if grad_sq > 0.0 {
        let e1: [f64; NVARS] = std::array::from_fn(|i| grad[i] / grad_sq.sqrt());
        let xi_sq = dot(&g, &k.xi, &k.xi);
        let e2: [f64; NVARS] = std::array::from_fn(|i| k.xi[i] / xi_sq.sqrt());
        let m = nalgebra::Matrix2::new(
            bilinear(&q, &e1, &e1),
            bilinear(&q, &e1, &e2),
            bilinear(&q, &e2, &e1),
            bilinear(&q, &e2, &e2),
        );
        let sym = (m + m.transpose()) * 0.5;
        let ev = sym.symmetric_eigenvalues();
        Some([ev[0].min(ev[1]), ev[0].max(ev[1])])
    } else {
        None
    };
    Ok(QTensorReport {
        point,
        s,
        kappa: kap,
        residual,
        block_eigenvalues: block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::ProfileAnsatz;

    #[test]
    fn decision_table_is_total() {
        let t = ClassifyTolerances::default();
        assert_eq!(kappa_sign(&[1e-3, 2e-3], &t), Some(KappaSign::Positive));
        assert_eq!(kappa_sign(&[0.0, 1e-12], &t), Some(KappaSign::Zero));
        assert_eq!(kappa_sign(&[-1.0, -2.0], &t), Some(KappaSign::Negative));
        assert_eq!(kappa_sign(&[1.0, -1.0], &t), None);
        assert_eq!(kappa_sign(&[5e-9, 1.0], &t), None);
        let labels: Vec<Label> = [
            Some(KappaSign::Positive),
            Some(KappaSign::Zero),
            Some(KappaSign::Negative),
            None,
        ]
        .into_iter()
        .flat_map(|s| [true, false].map(|e| decide(s, e)))
        .collect();
        assert_eq!(labels[..6], [Label::IA, Label::IB, Label::IIA, Label::IIB, Label::IIIA, Label::IIIB]);
        assert!(labels[6..].iter().all(|l| *l == Label::Indeterminate));
    }

    #[test]
    fn label_serializes_as_table_entry() {
        assert_eq!(serde_json::to_string(&Label::IIIB).unwrap(), "\"III(b)\"");
    }

    #[test]
    fn non_bach_flat_input_is_rejected() {
        let mut p = ProfileAnsatz::new(1, 1.0, 1.0, 4.0, 4).unwrap();
        p.q[0] = 0.1;
        let def = p.compile().unwrap();
        let err = classify(&def, &p.axis_points(2), &ClassifyTolerances::default()).unwrap_err();
        assert!(matches!(err, Error::NotCertified { residual: "bach_norm", .. }), "{err}");
    }

    #[test]
    fn q_tensor_identity_on_extremal_profile_needs_bach_flatness() {
        // extremal but not Bach-flat: the identity fails
        let mut p = ProfileAnsatz::new(1, 1.0, 1.0, 4.0, 4).unwrap();
        p.q[0] = -0.05;
        let def = p.compile().unwrap();
        let r = q_tensor_residual(&def, p.axis_points(3)[1], 1e-6).unwrap();
        assert!(r.residual > 1e-4, "{}", r.residual);
    }
}
