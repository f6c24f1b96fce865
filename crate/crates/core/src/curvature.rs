//! Christoffel symbols, Riemann, Ricci, Weyl and its self-dual halves.
//!
//! Conventions: `R^a_bcd = ∂_cΓ^a_db − ∂_dΓ^a_cb + Γ^a_ceΓ^e_db − Γ^a_deΓ^e_cb`,
//! `R_abcd = g_ae R^e_bcd`, `r_bd = R^a_bad`. The unit round 4-sphere has
//! `s = 12`.
//!
//! Norms: a 2-form has `|φ|² = ½ φ_ab φ^ab`; a curvature-type 4-tensor has
//! `|W|² = ¼ W_abcd W^abcd`, its norm as an operator on 2-forms; symmetric
//! 2-tensors use the full contraction.

use serde::Serialize;

use crate::geometry::{MetricJet, Mat4};
use crate::jets::{Jet, MultiIndex, NVARS};
use crate::tensor::{JetTensor, RealTensor};
use crate::{require_order, Error};

/// `¼ T_abcd T^abcd`.
pub fn curvature_norm_sq(t: &RealTensor, ginv: &Mat4) -> f64 {
    0.25 * t.full_norm_sq(ginv)
}

/// `Γ^a_bc` at index `[a, b, c]`, one order below the metric.
pub fn christoffel(m: &MetricJet) -> JetTensor {
    let n = m.order - 1;
    let dg: Vec<Vec<Vec<Jet>>> = (0..NVARS)
        .map(|c| {
            (0..NVARS)
                .map(|a| (0..NVARS).map(|b| m.g[a][b].diff(c)).collect())
                .collect()
        })
        .collect();
    // first kind Γ_{d,bc}
    let first = JetTensor::from_fn(3, |i| {
        let (d, b, c) = (i[0], i[1], i[2]);
        let mut t = dg[b][d][c].clone();
        t += &dg[c][d][b];
        t -= &dg[d][b][c];
        t.scale(0.5)
    });
    JetTensor::from_fn(3, |i| {
        let mut acc = Jet::zero(n);
        for d in 0..NVARS {
            acc.add_product(&m.g_inv[i[0]][d], first.at(&[d, i[1], i[2]]));
        }
        acc
    })
}

/// Jet-valued curvature at one point.
#[derive(Debug, Clone)]
pub struct CurvatureJets {
    pub metric: MetricJet,
    /// `Γ^a_bc`, order N−1.
    pub gamma: JetTensor,
    /// `R_abcd`, order N−2.
    pub riemann: JetTensor,
    pub ricci: JetTensor,
    pub scalar: Jet,
    pub weyl: JetTensor,
}

impl CurvatureJets {
    pub fn new(metric: MetricJet) -> Result<Self, Error> {
        require_order("curvature", 2, metric.order)?;
        let n = metric.order - 2;
        let gamma = christoffel(&metric);

        let mixed = JetTensor::from_fn(4, |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut r = gamma.at(&[a, d, b]).diff(c);
            r -= &gamma.at(&[a, c, b]).diff(d);
            for e in 0..NVARS {
                r.add_product(gamma.at(&[a, c, e]), gamma.at(&[e, d, b]));
                r.sub_product(gamma.at(&[a, d, e]), gamma.at(&[e, c, b]));
            }
            r
        });
        let riemann = JetTensor::from_fn(4, |i| {
            let mut acc = Jet::zero(n);
            for e in 0..NVARS {
                acc.add_product(&metric.g[i[0]][e], mixed.at(&[e, i[1], i[2], i[3]]));
            }
            acc
        });
        let ricci = JetTensor::from_fn(2, |i| {
            let mut acc = Jet::zero(n);
            for a in 0..NVARS {
                acc += mixed.at(&[a, i[0], a, i[1]]);
            }
            acc
        });
        let mut scalar = Jet::zero(n);
        for b in 0..NVARS {
            for d in 0..NVARS {
                scalar.add_product(&metric.g_inv[b][d], ricci.at(&[b, d]));
            }
        }
        let g = &metric.g;
        let weyl = JetTensor::from_fn(4, |i| {
            let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
            let mut w = riemann.at(i).clone();
            let mut k = Jet::zero(n);
            k.add_product(&g[a][c], ricci.at(&[b, d]));
            k.sub_product(&g[a][d], ricci.at(&[b, c]));
            k.sub_product(&g[b][c], ricci.at(&[a, d]));
            k.add_product(&g[b][d], ricci.at(&[a, c]));
            w.add_scaled(&k, -0.5);
            let mut gg = g[a][c].mul_to(&g[b][d], n);
            gg.sub_product(&g[a][d], &g[b][c]);
            w.add_product(&scalar.scale(1.0 / 6.0), &gg);
            w
        });
        Ok(CurvatureJets {
            metric,
            gamma,
            riemann,
            ricci,
            scalar,
            weyl,
        })
    }

    pub fn at(def: &crate::exprlang::MetricDefinition, point: [f64; NVARS], order: usize) -> Result<Self, Error> {
        Self::new(MetricJet::at(def, point, order)?)
    }

    pub fn order(&self) -> usize {
        self.metric.order
    }

    /// `r̊ = r − (s/4) g`.
    pub fn traceless_ricci(&self) -> JetTensor {
        JetTensor::from_fn(2, |i| {
            let mut t = self.ricci.at(i).clone();
            t.add_product(&self.scalar.scale(-0.25), &self.metric.g[i[0]][i[1]]);
            t
        })
    }

    /// `(★T)_abcd = ½ ε_ab^ef T_efcd`, jet-valued.
    pub fn star_first_pair(&self, t: &JetTensor) -> JetTensor {
        let n = t.order();
        let eps = self.metric.volume_form();
        let gi = &self.metric.g_inv;
        // ε_ab^ef
        let mixed = JetTensor::from_fn(4, |i| {
            let mut acc = Jet::zero(n);
            for g in 0..NVARS {
                for h in 0..NVARS {
                    let e = eps.at(&[i[0], i[1], g, h]);
                    if e.value() == 0.0 {
                        continue;
                    }
                    let gg = gi[g][i[2]].mul_to(&gi[h][i[3]], n);
                    acc.add_product(e, &gg);
                }
            }
            acc
        });
        JetTensor::from_fn(4, |i| {
            let mut acc = Jet::zero(n);
            for e in 0..NVARS {
                for f in 0..NVARS {
                    if e == f {
                        continue;
                    }
                    acc.add_product(mixed.at(&[i[0], i[1], e, f]), t.at(&[e, f, i[2], i[3]]));
                }
            }
            acc.scale(0.5)
        })
    }

    /// `W₊ = ½(W + ★W)` as jets.
    pub fn weyl_plus(&self) -> JetTensor {
        let star = self.star_first_pair(&self.weyl);
        JetTensor::from_fn(4, |i| (self.weyl.at(i) + star.at(i)).scale(0.5))
    }

    /// Covariant Hessian of a scalar, order two below `f`.
    pub fn hessian(&self, f: &Jet) -> Result<JetTensor, Error> {
        hessian_with(&self.gamma, f)
    }

    /// Numerical snapshot at the base point.
    pub fn bundle(&self) -> CurvatureBundle {
        let gi = self.metric.g_inv_values();
        let weyl = self.weyl.values();
        let star = self.star_first_pair(&self.weyl.truncate(0)).values();
        let weyl_plus = weyl.add(&star).scale(0.5);
        let weyl_minus = weyl.sub(&star).scale(0.5);
        let traceless_ricci = self.traceless_ricci().values();
        let s = self.scalar.value();
        let densities = Densities {
            weyl_sq: curvature_norm_sq(&weyl, &gi),
            weyl_plus_sq: curvature_norm_sq(&weyl_plus, &gi),
            weyl_minus_sq: curvature_norm_sq(&weyl_minus, &gi),
            traceless_ricci_sq: traceless_ricci.full_norm_sq(&gi),
            s2_over_24: s * s / 24.0,
            s2: s * s,
        };
        CurvatureBundle {
            point: self.metric.point,
            g: self.metric.g_values(),
            g_inv: gi,
            gamma: self.gamma.values(),
            riemann: self.riemann.values(),
            ricci: self.ricci.values(),
            scalar: s,
            traceless_ricci,
            weyl,
            weyl_plus,
            weyl_minus,
            densities,
        }
    }

    /// `L^{-k}` curvature scale of the chart at the point, used to
    /// normalize residuals of weight `k`: one plus the largest of
    /// `(max|∂^j g|)^{k/j}` for `j ≤ k` and `(max|R|)^{k/2}`.
    pub fn chart_scale(&self, k: usize) -> f64 {
        let rm = self.riemann.values().max_abs();
        1.0 + derivative_scale(&self.metric, k).max(rm.powf(k as f64 / 2.0))
    }
}

/// Largest `(max|∂^j g_ab|)^{k/j}` over `1 ≤ j ≤ min(k, order)`.
pub fn derivative_scale(m: &MetricJet, k: usize) -> f64 {
    let mut best = 0.0f64;
    for i in 0..crate::jets::coeff_count(m.order) {
        let alpha = crate::jets::monomial(i);
        let j = alpha.degree();
        if j == 0 || j > k {
            continue;
        }
        let d = m
            .g
            .iter()
            .flatten()
            .map(|c| (alpha.factorial() * c.coeff(&alpha)).abs())
            .fold(0.0, f64::max);
        best = best.max(d.powf(k as f64 / j as f64));
    }
    best
}

/// Hessian `∂_a∂_b f − Γ^c_ab ∂_c f`.
pub fn hessian_with(gamma: &JetTensor, f: &Jet) -> Result<JetTensor, Error> {
    require_order("covariant hessian", 2, f.order())?;
    let df = f.gradient();
    Ok(JetTensor::from_fn(2, |i| {
        let mut h = df[i[0]].diff(i[1]);
        for c in 0..NVARS {
            h.sub_product(&gamma.at(&[c, i[0], i[1]]), &df[c]);
        }
        h
    }))
}

pub fn covariant_hessian(m: &MetricJet, f: &Jet) -> Result<JetTensor, Error> {
    require_order("covariant hessian", 2, m.order.min(f.order()))?;
    hessian_with(&christoffel(m), f)
}

/// Trace of a jet-valued symmetric 2-tensor against `g^{-1}`, at the point.
pub fn trace_value(m: &MetricJet, t: &JetTensor) -> f64 {
    let gi = m.g_inv_values();
    let mut acc = 0.0;
    for a in 0..NVARS {
        for b in 0..NVARS {
            acc += gi[a][b] * t.at(&[a, b]).value();
        }
    }
    acc
}

/// `Δf = −g^{ab}∇_a∇_b f` at the point.
pub fn laplacian_scalar(m: &MetricJet, f: &Jet) -> Result<f64, Error> {
    Ok(-trace_value(m, &covariant_hessian(m, f)?))
}

/// `Δf` as a jet, order two below `f`.
pub fn laplacian_jet(m: &MetricJet, gamma: &JetTensor, f: &Jet) -> Result<Jet, Error> {
    let h = hessian_with(gamma, f)?;
    let n = h.order();
    let mut acc = Jet::zero(n);
    for a in 0..NVARS {
        for b in 0..NVARS {
            acc.add_product(&m.g_inv[a][b], h.at(&[a, b]));
        }
    }
    Ok(acc.scale(-1.0))
}

/// Max-abs difference of `∇^a W_abcd` and
/// `∇_[c r_d]b + (1/6) g_b[c ∇_d] s` over all index triples.
pub fn bianchi_residual(c: &CurvatureJets) -> Result<f64, Error> {
    require_order("contracted Bianchi identity", 3, c.order())?;
    let dw = c.weyl.covariant_derivative(&c.gamma);
    let dr = c.ricci.covariant_derivative(&c.gamma);
    let ds: Vec<f64> = (0..NVARS).map(|i| c.scalar.diff(i).value()).collect();
    let g = c.metric.g_values();
    let gi = c.metric.g_inv_values();
    let mut worst = 0.0f64;
    for b in 0..NVARS {
        for cc in 0..NVARS {
            for d in 0..NVARS {
                let mut lhs = 0.0;
                for a in 0..NVARS {
                    for e in 0..NVARS {
                        lhs += gi[a][e] * dw.at(&[e, a, b, cc, d]).value();
                    }
                }
                let rhs = 0.5 * (dr.at(&[cc, d, b]).value() - dr.at(&[d, cc, b]).value())
                    + (g[b][cc] * ds[d] - g[b][d] * ds[cc]) / 12.0;
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Densities {
    pub weyl_sq: f64,
    pub weyl_plus_sq: f64,
    pub weyl_minus_sq: f64,
    pub traceless_ricci_sq: f64,
    pub s2_over_24: f64,
    pub s2: f64,
}

/// Point-local curvature record.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub point: [f64; NVARS],
    pub g: Mat4,
    pub g_inv: Mat4,
    pub gamma: RealTensor,
    pub riemann: RealTensor,
    pub ricci: RealTensor,
    pub scalar: f64,
    pub traceless_ricci: RealTensor,
    pub weyl: RealTensor,
    pub weyl_plus: RealTensor,
    pub weyl_minus: RealTensor,
    pub densities: Densities,
}

pub fn curvature_at(m: &MetricJet) -> Result<CurvatureBundle, Error> {
    Ok(CurvatureJets::new(m.clone())?.bundle())
}

/// Signature integrand `(|W₊|² − |W₋|²)/(12π²)`.
pub fn signature_density(b: &CurvatureBundle) -> f64 {
    (b.densities.weyl_plus_sq - b.densities.weyl_minus_sq) / (12.0 * std::f64::consts::PI.powi(2))
}

/// Gauss–Bonnet/Weyl combination `s²/24 − |r̊|²/2 + |W|²`.
pub fn gauss_bonnet_weyl_density(b: &CurvatureBundle) -> f64 {
    b.densities.s2_over_24 - 0.5 * b.densities.traceless_ricci_sq + b.densities.weyl_sq
}

/// `∂^α` of every metric component, for finite-difference comparisons.
pub fn metric_partial(m: &MetricJet, alpha: MultiIndex) -> Result<Mat4, Error> {
    let mut out = [[0.0; NVARS]; NVARS];
    for a in 0..NVARS {
        for b in 0..NVARS {
            out[a][b] = m.g[a][b].partial(&alpha)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::exprlang::MetricDefinition;

    pub(crate) fn conformally_flat(factor: &str, radius: f64) -> MetricDefinition {
        let text = format!(
            r#"{{"name": "t", "coords": ["x","y","z","w"],
                "g": {{"00": "{factor}", "11": "{factor}", "22": "{factor}", "33": "{factor}"}},
                "domain": {{"center": [0,0,0,0], "radius": {radius}}}}}"#
        );
        MetricDefinition::from_json(&text).unwrap()
    }

    const SPHERE: &str = "4/(1 + x^2 + y^2 + z^2 + w^2)^2";

    #[test]
    fn flat_has_no_curvature() {
        let c = CurvatureJets::at(&conformally_flat("1", 1.0), [0.2, 0.1, 0.0, -0.3], 4).unwrap();
        let b = c.bundle();
        assert_eq!(b.riemann.max_abs(), 0.0);
        assert_eq!(b.scalar, 0.0);
        assert_eq!(b.densities.s2, 0.0);
        assert_eq!(bianchi_residual(&c).unwrap(), 0.0);
    }

    #[test]
    fn round_sphere_constants() {
        let def = conformally_flat(SPHERE, 2.0);
        for p in [[0.0; 4], [0.3, -0.2, 0.5, 0.1], [1.0, 0.4, -0.3, 0.2]] {
            let c = CurvatureJets::at(&def, p, 3).unwrap();
            let b = c.bundle();
            assert!((b.scalar - 12.0).abs() < 1e-11, "{}", b.scalar);
            for i in 0..4 {
                for j in 0..4 {
                    assert!((b.ricci.at(&[i, j]) - 3.0 * b.g[i][j]).abs() < 1e-11);
                }
            }
            assert!(b.weyl.max_abs() < 1e-11);
            assert!(bianchi_residual(&c).unwrap() < 1e-10);
            // sectional curvature one: R_0101 = g_00 g_11
            assert!((b.riemann.at(&[0, 1, 0, 1]) - b.g[0][0] * b.g[1][1]).abs() < 1e-11);
        }
    }

    #[test]
    fn riemann_symmetries_on_generic_metric() {
        let text = r#"{"name": "p", "coords": ["x","y","z","w"],
            "g": {"00": "1 + 0.1*sin(x*y)", "01": "0.05*cos(z)", "11": "1 + 0.2*x^2",
                  "12": "0.1*w*x", "22": "exp(0.1*y)", "23": "0.03*sin(x + w)", "33": "1 + 0.1*z^2",
                  "03": "0.02*y"},
            "domain": {"center": [0,0,0,0], "radius": 1}}"#;
        let def = MetricDefinition::from_json(text).unwrap();
        let c = CurvatureJets::at(&def, [0.3, -0.1, 0.4, 0.2], 3).unwrap();
        let b = c.bundle();
        let r = &b.riemann;
        for a in 0..4 {
            for bb in 0..4 {
                for cc in 0..4 {
                    for d in 0..4 {
                        let v = r.at(&[a, bb, cc, d]);
                        assert!((v + r.at(&[bb, a, cc, d])).abs() < 1e-12);
                        assert!((v - r.at(&[cc, d, a, bb])).abs() < 1e-12);
                        let cyc = v + r.at(&[a, cc, d, bb]) + r.at(&[a, d, bb, cc]);
                        assert!(cyc.abs() < 1e-12);
                    }
                }
            }
        }
        // W totally trace-free, W = W+ + W-
        let gi = b.g_inv;
        for bb in 0..4 {
            for d in 0..4 {
                let tr: f64 = (0..4)
                    .flat_map(|a| (0..4).map(move |cc| (a, cc)))
                    .map(|(a, cc)| gi[a][cc] * b.weyl.at(&[a, bb, cc, d]))
                    .sum();
                assert!(tr.abs() < 1e-12);
            }
        }
        let sum = b.weyl_plus.add(&b.weyl_minus);
        assert!(sum.sub(&b.weyl).max_abs() < 1e-14);
        let d = &b.densities;
        assert!((d.weyl_sq - d.weyl_plus_sq - d.weyl_minus_sq).abs() < 1e-12);
        assert!(bianchi_residual(&c).unwrap() < 1e-10);
    }

    #[test]
    fn hessian_and_laplacian_examples() {
        let flat = MetricJet::at(&conformally_flat("1", 1.0), [0.0; 4], 3).unwrap();
        let vars = crate::exprlang::variable_jets(&[0.0; 4], 3).unwrap();
        let x2 = &vars[0] * &vars[0];
        let h = covariant_hessian(&flat, &x2).unwrap();
        assert_eq!(h.at(&[0, 0]).value(), 2.0);
        assert_eq!(h.values().max_abs(), 2.0);
        assert_eq!(laplacian_scalar(&flat, &x2).unwrap(), -2.0);
        let mut r2 = Jet::zero(3);
        for v in &vars {
            r2.add_product(v, v);
        }
        assert_eq!(laplacian_scalar(&flat, &r2).unwrap(), -8.0);
        let harmonic = &x2 - &(&vars[1] * &vars[1]);
        assert_eq!(laplacian_scalar(&flat, &harmonic).unwrap(), 0.0);

        let sphere = MetricJet::at(&conformally_flat(SPHERE, 2.0), [0.2, 0.1, -0.3, 0.4], 3).unwrap();
        let h = covariant_hessian(&sphere, &Jet::constant(3.0, 3)).unwrap();
        assert_eq!(h.values().max_abs(), 0.0);
        let x = Jet::variable(0, 0.2, 3).unwrap();
        let h = covariant_hessian(&sphere, &x).unwrap();
        let tr = trace_value(&sphere, &h);
        assert!((tr + laplacian_scalar(&sphere, &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn insufficient_order_is_reported() {
        let m = MetricJet::at(&conformally_flat("1", 1.0), [0.0; 4], 1).unwrap();
        assert!(matches!(
            CurvatureJets::new(m),
            Err(Error::InsufficientOrder { need: 2, have: 1, .. })
        ));
    }
}
