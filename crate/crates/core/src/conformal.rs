//! Conformal rescaling `g ↦ u²g`, the invariance of `W^a_bcd`, the traceless
//! Ricci transformation law, `κ` and the Einstein metric `h = s⁻²g`.

use serde::Serialize;

use crate::curvature::{laplacian_jet, CurvatureJets};
use crate::exprlang::{variable_jets, BinOp, Expr, MetricDefinition};
use crate::geometry::{JetMat4, MetricJet};
use crate::jets::NVARS;
use crate::tensor::RealTensor;
use crate::{require_order, Error};

#[derive(Debug, Clone, PartialEq)]
pub enum ConformalFactor {
    Expr(Expr),
    /// `u = |s|⁻¹` with `s` the scalar curvature of the metric itself.
    InverseScalarCurvature,
}

/// `u²g` composed at the expression level; `J` is unchanged.
pub fn rescale(def: &MetricDefinition, u: &Expr) -> MetricDefinition {
    let u2 = Expr::Pow(Box::new(u.clone()), 2.0);
    let g = std::array::from_fn(|i| {
        std::array::from_fn(|j| match &def.g[i][j] {
            Expr::Num(v) if *v == 0.0 => Expr::Num(0.0),
            e => Expr::bin(BinOp::Mul, u2.clone(), e.clone()),
        })
    });
    MetricDefinition {
        name: format!("{}-rescaled", def.name),
        g,
        ..def.clone()
    }
}

/// [`rescale`] after checking `u > 0` at the given points.
pub fn rescale_checked(
    def: &MetricDefinition,
    factor: &ConformalFactor,
    points: &[[f64; NVARS]],
) -> Result<MetricDefinition, Error> {
    let ConformalFactor::Expr(u) = factor else {
        return Err(Error::Config(
            "inverse-scalar-curvature has no expression form; use the jet-level Derdziński metric"
                .into(),
        ));
    };
    for p in points {
        let v = u.eval(p, &def.params);
        if !(v > 0.0) {
            return Err(Error::NonPositiveFactor(v));
        }
    }
    Ok(rescale(def, u))
}

fn weyl_mixed(c: &CurvatureJets) -> RealTensor {
    let gi = c.metric.g_inv_values();
    c.weyl.values().raise(0, &gi)
}

/// Max-abs difference of `W^a_bcd` for `g` and `u²g`.
pub fn weyl_invariance_residual(
    def: &MetricDefinition,
    u: &Expr,
    point: [f64; NVARS],
) -> Result<f64, Error> {
    let a = CurvatureJets::at(def, point, 2)?;
    let b = CurvatureJets::at(&rescale(def, u), point, 2)?;
    Ok(weyl_mixed(&a).sub(&weyl_mixed(&b)).max_abs())
}

/// Max-abs difference of `r̊(u²g)` and `r̊ + 2u Hess₀(u⁻¹)`, with the
/// Hessian and its trace-free part taken with respect to `g`.
pub fn riforma_residual(
    def: &MetricDefinition,
    u: &Expr,
    point: [f64; NVARS],
) -> Result<f64, Error> {
    let c = CurvatureJets::at(def, point, 2)?;
    let hat = CurvatureJets::at(&rescale(def, u), point, 2)?;
    let vars = variable_jets(&point, 2)?;
    let uj = u.eval_with(&vars, &def.params, 2)?;
    let h = c.hessian(&uj.recip()?)?.values();
    let g = c.metric.g_values();
    let gi = c.metric.g_inv_values();
    let tr: f64 = (0..NVARS)
        .flat_map(|a| (0..NVARS).map(move |b| (a, b)))
        .map(|(a, b)| gi[a][b] * h.at(&[a, b]))
        .sum();
    let r0 = c.traceless_ricci().values();
    let r0_hat = hat.traceless_ricci().values();
    let mut worst = 0.0f64;
    for a in 0..NVARS {
        for b in 0..NVARS {
            let rhs = r0.at(&[a, b]) + 2.0 * uj.value() * (h.at(&[a, b]) - tr / 4.0 * g[a][b]);
            worst = worst.max((r0_hat.at(&[a, b]) - rhs).abs());
        }
    }
    Ok(worst)
}

/// `κ = −6sΔs − 12|∇s|² + s³` from curvature jets of order ≥ 4.
pub fn kappa(c: &CurvatureJets) -> Result<f64, Error> {
    require_order("kappa", 4, c.order())?;
    let s = &c.scalar;
    let lap = laplacian_jet(&c.metric, &c.gamma, s)?.value();
    let gi = c.metric.g_inv_values();
    let ds: Vec<f64> = (0..NVARS).map(|i| s.diff(i).value()).collect();
    let mut grad_sq = 0.0;
    for a in 0..NVARS {
        for b in 0..NVARS {
            grad_sq += gi[a][b] * ds[a] * ds[b];
        }
    }
    let s = s.value();
    Ok(-6.0 * s * lap - 12.0 * grad_sq + s.powi(3))
}

pub fn kappa_at(def: &MetricDefinition, point: [f64; NVARS], order: usize) -> Result<f64, Error> {
    kappa(&CurvatureJets::at(def, point, order)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaSample {
    pub point: [f64; NVARS],
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaReport {
    pub samples: Vec<KappaSample>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    /// `spread / max(|mean|, 1e-300)`.
    pub normalized_spread: f64,
}

impl KappaReport {
    pub fn from_samples(samples: Vec<KappaSample>) -> Self {
        let n = samples.len().max(1) as f64;
        let mean = samples.iter().map(|s| s.kappa).sum::<f64>() / n;
        let min = samples.iter().map(|s| s.kappa).fold(f64::INFINITY, f64::min);
        let max = samples.iter().map(|s| s.kappa).fold(f64::NEG_INFINITY, f64::max);
        let spread = if samples.is_empty() { 0.0 } else { max - min };
        KappaReport {
            samples,
            mean,
            min,
            max,
            spread,
            normalized_spread: spread / mean.abs().max(1e-300),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerdzinskiReport {
    pub s: f64,
    /// `|r̊(h)|_h` for `h = s⁻²g`.
    pub traceless_ricci_norm: f64,
    /// `s_h / 4`; compare with `κ/4`.
    pub einstein_constant: f64,
}

/// Curvature of `h = s⁻²g`, built by jet composition.
pub fn derdzinski_einstein_residual(
    c: &CurvatureJets,
    s_floor: f64,
) -> Result<DerdzinskiReport, Error> {
    require_order("Derdziński metric", 4, c.order())?;
    let s = &c.scalar;
    if s.value().abs() < s_floor {
        return Err(Error::NearZeroLocus {
            s: s.value(),
            floor: s_floor,
        });
    }
    let n = s.order();
    let w = s.powi(-2)?;
    let h: JetMat4 = std::array::from_fn(|a| std::array::from_fn(|b| c.metric.g[a][b].mul_to(&w, n)));
    let ch = CurvatureJets::new(MetricJet::from_components(h, c.metric.point)?)?;
    let r0 = ch.traceless_ricci().values();
    let hi = ch.metric.g_inv_values();
    Ok(DerdzinskiReport {
        s: s.value(),
        traceless_ricci_norm: r0.full_norm_sq(&hi).max(0.0).sqrt(),
        einstein_constant: ch.scalar.value() / 4.0,
    })
}

pub fn derdzinski_at(
    def: &MetricDefinition,
    point: [f64; NVARS],
    order: usize,
    s_floor: f64,
) -> Result<DerdzinskiReport, Error> {
    derdzinski_einstein_residual(&CurvatureJets::at(def, point, order)?, s_floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::tests::conformally_flat;
    use crate::exprlang::{parse, Scope};

    fn expr(src: &str) -> Expr {
        parse(src, &Scope::standard()).unwrap()
    }

    #[test]
    fn rescaling_examples() {
        let flat = conformally_flat("1", 1.0);
        let same = rescale(&flat, &expr("1"));
        assert_eq!(same.g_at(&[0.1, 0.2, 0.3, 0.0]), flat.g_at(&[0.1, 0.2, 0.3, 0.0]));
        let four = rescale(&flat, &expr("2"));
        assert_eq!(four.g_at(&[0.0; 4])[3][3], 4.0);
        assert_eq!(four.g_at(&[0.0; 4])[0][3], 0.0);
        let c = CurvatureJets::at(&four, [0.0; 4], 2).unwrap();
        assert_eq!(c.riemann.values().max_abs(), 0.0);

        let sphere = rescale(&flat, &expr("2/(1 + x^2 + y^2 + z^2 + w^2)"));
        let c = CurvatureJets::at(&sphere, [0.3, 0.1, -0.2, 0.4], 2).unwrap();
        assert!((c.scalar.value() - 12.0).abs() < 1e-11);
        assert!(c.weyl.values().max_abs() < 1e-12);

        let bad = rescale_checked(&flat, &ConformalFactor::Expr(expr("x")), &[[-0.5, 0.0, 0.0, 0.0]]);
        assert!(matches!(bad, Err(Error::NonPositiveFactor(_))));
        assert!(rescale_checked(&flat, &ConformalFactor::InverseScalarCurvature, &[]).is_err());
    }

    #[test]
    fn riforma_holds_on_flat_to_sphere() {
        let flat = conformally_flat("1", 1.0);
        let u = expr("2/(1 + x^2 + y^2 + z^2 + w^2)");
        for p in [[0.0; 4], [0.3, -0.2, 0.5, 0.1]] {
            assert!(riforma_residual(&flat, &u, p).unwrap() < 1e-12);
            assert!(weyl_invariance_residual(&flat, &u, p).unwrap() < 1e-12);
        }
        assert_eq!(riforma_residual(&flat, &expr("3"), [0.1; 4]).unwrap(), 0.0);
    }

    #[test]
    fn kappa_on_constant_scalar_curvature() {
        let sphere = conformally_flat("4/(1 + x^2 + y^2 + z^2 + w^2)^2", 2.0);
        let k = kappa_at(&sphere, [0.2, 0.1, 0.0, -0.3], 4).unwrap();
        assert!((k - 12f64.powi(3)).abs() < 1e-9 * 1728.0);
        let r = derdzinski_at(&sphere, [0.2, 0.1, 0.0, -0.3], 4, 1e-3).unwrap();
        assert!(r.traceless_ricci_norm < 1e-9);
        assert!((r.einstein_constant - k / 4.0).abs() < 1e-9 * k);
        let flat = conformally_flat("1", 1.0);
        assert_eq!(kappa_at(&flat, [0.0; 4], 4).unwrap(), 0.0);
        assert!(matches!(
            derdzinski_at(&flat, [0.0; 4], 4, 1e-3),
            Err(Error::NearZeroLocus { .. })
        ));
    }
}
