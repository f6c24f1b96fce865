//! The Bach tensor from the full Weyl tensor and from its self-dual half.

use serde::Serialize;

use crate::curvature::CurvatureJets;
use crate::geometry::Mat4;
use crate::jets::{Jet, NVARS};
use crate::tensor::{JetTensor, RealTensor};
use crate::{require_order, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BachMethod {
    FullWeyl,
    SelfdualWeyl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BachTensor {
    /// Symmetrized `B_ab`.
    pub b: Mat4,
    /// Max-abs of the antisymmetric part before symmetrizing.
    pub asym: f64,
    pub method: BachMethod,
}

impl BachTensor {
    fn from_raw(raw: &Mat4, method: BachMethod) -> Self {
        let mut b = [[0.0; NVARS]; NVARS];
        let mut asym = 0.0f64;
        for i in 0..NVARS {
            for j in 0..NVARS {
                b[i][j] = 0.5 * (raw[i][j] + raw[j][i]);
                asym = asym.max(0.5 * (raw[i][j] - raw[j][i]).abs());
            }
        }
        BachTensor { b, asym, method }
    }

    pub fn norm(&self, ginv: &Mat4) -> f64 {
        RealTensor::from_matrix(&self.b).full_norm_sq(ginv).max(0.0).sqrt()
    }

    pub fn trace(&self, ginv: &Mat4) -> f64 {
        (0..NVARS)
            .flat_map(|a| (0..NVARS).map(move |b| (a, b)))
            .map(|(a, b)| ginv[a][b] * self.b[a][b])
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.b.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(∇^p∇^q + ½ r^{pq}) T` with `p, q` contracted into slots `slots.0`
/// and `slots.1` of the rank-4 tensor `t`; the remaining two slots, in
/// order, index the result. Jet-valued, order four below the metric.
pub fn second_order_contraction(
    c: &CurvatureJets,
    t: &JetTensor,
    slots: (usize, usize),
) -> Result<JetTensor, Error> {
    require_order("Bach-type contraction", 4, c.order())?;
    let dt = t.covariant_derivative(&c.gamma);
    let ddt = dt.covariant_derivative(&c.gamma);
    let n = ddt.order();
    let gi = &c.metric.g_inv;
    // g^{pe} g^{qf}
    let gg: Vec<Jet> = (0..NVARS.pow(4))
        .map(|k| {
            let (p, e, q, f) = (k >> 6, (k >> 4) & 3, (k >> 2) & 3, k & 3);
            gi[p][e].mul_to(&gi[q][f], n)
        })
        .collect();
    let ricci_up = JetTensor::from_fn(2, |i| {
        let mut acc = Jet::zero(n);
        for e in 0..NVARS {
            for f in 0..NVARS {
                acc.add_product(&gg[(i[0] << 6) | (e << 4) | (i[1] << 2) | f], c.ricci.at(&[e, f]));
            }
        }
        acc
    });
    let free: Vec<usize> = (0..4).filter(|s| *s != slots.0 && *s != slots.1).collect();
    let mut idx = [0usize; 4];
    Ok(JetTensor::from_fn(2, |out| {
        idx[free[0]] = out[0];
        idx[free[1]] = out[1];
        let mut acc = Jet::zero(n);
        for p in 0..NVARS {
            for q in 0..NVARS {
                idx[slots.0] = p;
                idx[slots.1] = q;
                let tv = t.at(&idx);
                let mut half = tv.clone();
                half = half.scale(0.5);
                acc.add_product(ricci_up.at(&[p, q]), &half);
                for e in 0..NVARS {
                    for f in 0..NVARS {
                        let d2 = ddt.at(&[e, f, idx[0], idx[1], idx[2], idx[3]]);
                        acc.add_product(&gg[(p << 6) | (e << 4) | (q << 2) | f], d2);
                    }
                }
            }
        }
        acc
    }))
}

fn value_matrix(t: &JetTensor) -> Mat4 {
    std::array::from_fn(|a| std::array::from_fn(|b| t.at(&[a, b]).value()))
}

/// Jet-valued `B_ab = (∇^c∇^d + ½ r^cd) W_acbd`, unsymmetrized.
pub fn bach_jets(c: &CurvatureJets) -> Result<JetTensor, Error> {
    second_order_contraction(c, &c.weyl, (1, 3))
}

/// `B_ab = (∇^c∇^d + ½ r^cd) W_acbd`.
pub fn bach_full(c: &CurvatureJets) -> Result<BachTensor, Error> {
    Ok(BachTensor::from_raw(
        &value_matrix(&bach_jets(c)?),
        BachMethod::FullWeyl,
    ))
}

/// `B_ab = (2∇^c∇^d + r^cd)(W₊)_acbd`.
pub fn bach_selfdual(c: &CurvatureJets) -> Result<BachTensor, Error> {
    let wp = c.weyl_plus();
    let raw = value_matrix(&second_order_contraction(c, &wp, (1, 3))?);
    Ok(BachTensor::from_raw(
        &raw.map(|r| r.map(|v| 2.0 * v)),
        BachMethod::SelfdualWeyl,
    ))
}

/// Max over `c, d` of `|(∇^a∇^b + ½ r^ab)(★W)_cabd|`.
pub fn star_weyl_residual(c: &CurvatureJets) -> Result<f64, Error> {
    let star = c.star_first_pair(&c.weyl);
    let t = second_order_contraction(c, &star, (1, 2))?;
    Ok(t.values().max_abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicaResiduals {
    pub asym: f64,
    pub trace: f64,
    /// `max_b |∇^a B_ab|`; `None` below jet order 5.
    pub div: Option<f64>,
}

/// Symmetry, trace and (at order ≥ 5) divergence of `B`.
pub fn harmonica_residuals(c: &CurvatureJets, b: &BachTensor) -> Result<HarmonicaResiduals, Error> {
    require_order("Bach symmetry and trace", 4, c.order())?;
    let gi = c.metric.g_inv_values();
    let div = if c.order() >= 5 {
        let bj = bach_jets(c)?;
        let sym = JetTensor::from_fn(2, |i| (bj.at(i) + bj.at(&[i[1], i[0]])).scale(0.5));
        let db = sym.covariant_derivative(&c.gamma);
        let mut worst = 0.0f64;
        for bb in 0..NVARS {
            let mut acc = 0.0;
            for a in 0..NVARS {
                for e in 0..NVARS {
                    acc += gi[a][e] * db.at(&[e, a, bb]).value();
                }
            }
            worst = worst.max(acc.abs());
        }
        Some(worst)
    } else {
        None
    };
    Ok(HarmonicaResiduals {
        asym: b.asym,
        trace: b.trace(&gi).abs(),
        div,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::tests::conformally_flat;
    use crate::exprlang::MetricDefinition;

    const PERTURBED: &str = r#"{"name": "p", "coords": ["x","y","z","w"],
        "g": {"00": "1 + 0.1*sin(x*y)", "01": "0.05*cos(z)", "11": "1 + 0.2*x^2",
              "12": "0.1*w*x", "22": "exp(0.1*y)", "23": "0.03*sin(x + w)", "33": "1 + 0.1*z^2",
              "03": "0.02*y"},
        "domain": {"center": [0,0,0,0], "radius": 1}}"#;

    #[test]
    fn flat_and_sphere_are_bach_flat() {
        let c = CurvatureJets::at(&conformally_flat("1", 1.0), [0.1, 0.0, 0.2, 0.0], 4).unwrap();
        assert_eq!(bach_full(&c).unwrap().max_abs(), 0.0);
        assert_eq!(bach_selfdual(&c).unwrap().max_abs(), 0.0);
        assert_eq!(star_weyl_residual(&c).unwrap(), 0.0);

        let sphere = conformally_flat("4/(1 + x^2 + y^2 + z^2 + w^2)^2", 2.0);
        let c = CurvatureJets::at(&sphere, [0.3, -0.4, 0.1, 0.2], 4).unwrap();
        assert!(bach_full(&c).unwrap().max_abs() < 1e-9);
        assert!(star_weyl_residual(&c).unwrap() < 1e-9);
    }

    #[test]
    fn two_constructions_agree_on_generic_metric() {
        let def = MetricDefinition::from_json(PERTURBED).unwrap();
        let c = CurvatureJets::at(&def, [0.2, -0.3, 0.1, 0.4], 4).unwrap();
        let full = bach_full(&c).unwrap();
        let sd = bach_selfdual(&c).unwrap();
        let scale = full.max_abs();
        assert!(scale > 1e-3, "test metric should not be Bach-flat");
        for i in 0..4 {
            for j in 0..4 {
                assert!((full.b[i][j] - sd.b[i][j]).abs() < 1e-10 * (1.0 + scale));
            }
        }
        assert!(star_weyl_residual(&c).unwrap() < 1e-10);
        let h = harmonica_residuals(&c, &full).unwrap();
        assert!(h.asym < 1e-10 && h.trace < 1e-10);
        assert!(h.div.is_none());
    }

    #[test]
    fn divergence_free_at_order_five() {
        let def = MetricDefinition::from_json(PERTURBED).unwrap();
        let c = CurvatureJets::at(&def, [0.1, 0.2, -0.2, 0.3], 5).unwrap();
        let b = bach_full(&c).unwrap();
        let h = harmonica_residuals(&c, &b).unwrap();
        assert!(h.div.unwrap() < 1e-9, "{h:?}");
    }

    #[test]
    fn order_three_is_rejected() {
        let c = CurvatureJets::at(&conformally_flat("1", 1.0), [0.0; 4], 3).unwrap();
        assert!(matches!(bach_full(&c), Err(Error::InsufficientOrder { need: 4, .. })));
    }
}
