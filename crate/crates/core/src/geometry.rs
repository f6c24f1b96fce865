//! Jet-valued metric, volume form, Hodge star on 2-forms.

use nalgebra::{Matrix4, SymmetricEigen};

use crate::exprlang::{variable_jets, MetricDefinition};
use crate::jets::{Jet, JetFn, NVARS};
use crate::tensor::{JetTensor, RealTensor};
use crate::Error;

pub type Mat4 = [[f64; NVARS]; NVARS];
pub type JetMat4 = [[Jet; NVARS]; NVARS];

/// Sign of the permutation `[a, b, c, d]` of `0..4`, zero on repeats.
pub fn levi_civita(idx: &[usize]) -> f64 {
    let mut p = [idx[0], idx[1], idx[2], idx[3]];
    let mut sign = 1.0;
    for i in 0..NVARS {
        for j in (i + 1)..NVARS {
            if p[i] == p[j] {
                return 0.0;
            }
            if p[i] > p[j] {
                p.swap(i, j);
                sign = -sign;
            }
        }
    }
    sign
}

pub(crate) fn check_positive_definite(g: &Mat4, point: &[f64; NVARS]) -> Result<(), Error> {
    let m = Matrix4::from_fn(|i, j| g[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            point: *point,
            eigenvalues: vec![f64::NAN; NVARS],
        });
    }
    let eig = SymmetricEigen::new(m).eigenvalues;
    if eig.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            point: *point,
            eigenvalues: eig.iter().copied().collect(),
        });
    }
    Ok(())
}

/// Metric components, their inverse and `√det g` as jets at one point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: JetMat4,
    pub g_inv: JetMat4,
    pub sqrt_det: Jet,
    pub point: [f64; NVARS],
    pub order: usize,
}

fn jet_mat(order: usize) -> JetMat4 {
    std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(order)))
}

/// Inverse and determinant over the jet ring, pivoting on constant terms.
fn invert(g: &JetMat4) -> Result<(JetMat4, Jet), Error> {
    let order = g[0][0].order();
    let mut a = g.clone();
    let mut inv = jet_mat(order);
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Jet::constant(1.0, order);
    }
    let mut det = Jet::constant(1.0, order);
    for col in 0..NVARS {
        let pivot = (col..NVARS)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .unwrap();
        if a[pivot][col].value().abs() < 1e-300 {
            return Err(Error::Singular);
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -&det;
        }
        det = &det * &a[col][col];
        let r = a[col][col].recip()?;
        for k in 0..NVARS {
            a[col][k] = &a[col][k] * &r;
            inv[col][k] = &inv[col][k] * &r;
        }
        for row in 0..NVARS {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.max_abs() == 0.0 {
                continue;
            }
            for k in 0..NVARS {
                let (pa, pi) = (a[col][k].clone(), inv[col][k].clone());
                a[row][k] -= &(&f * &pa);
                inv[row][k] -= &(&f * &pi);
            }
        }
    }
    // symmetrize away rounding
    for i in 0..NVARS {
        for j in (i + 1)..NVARS {
            let s = (&inv[i][j] + &inv[j][i]).scale(0.5);
            inv[i][j] = s.clone();
            inv[j][i] = s;
        }
    }
    Ok((inv, det))
}

impl MetricJet {
    /// Evaluates a metric definition at `point` to jet order `order`.
    pub fn at(def: &MetricDefinition, point: [f64; NVARS], order: usize) -> Result<Self, Error> {
        if !def.domain.contains(&point) {
            return Err(Error::OutsideDomain(point));
        }
        let vars = variable_jets(&point, order)?;
        let mut g = jet_mat(order);
        for i in 0..NVARS {
            for j in i..NVARS {
                let e = def.g[i][j].eval_with(&vars, &def.params, order)?;
                g[i][j] = e.clone();
                g[j][i] = e;
            }
        }
        Self::from_components(g, point)
    }

    pub fn from_components(g: JetMat4, point: [f64; NVARS]) -> Result<Self, Error> {
        let order = g.iter().flatten().map(Jet::order).min().unwrap_or(0);
        let values: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].value()));
        check_positive_definite(&values, &point)?;
        let (g_inv, det) = invert(&g)?;
        let sqrt_det = det.apply(JetFn::Sqrt)?;
        Ok(MetricJet {
            g,
            g_inv,
            sqrt_det,
            point,
            order,
        })
    }

    pub fn g_values(&self) -> Mat4 {
        std::array::from_fn(|i| std::array::from_fn(|j| self.g[i][j].value()))
    }

    pub fn g_inv_values(&self) -> Mat4 {
        std::array::from_fn(|i| std::array::from_fn(|j| self.g_inv[i][j].value()))
    }

    /// Volume form `ε_{abcd} = √g [abcd]` as jets.
    pub fn volume_form(&self) -> JetTensor {
        let order = self.sqrt_det.order();
        JetTensor::from_fn(4, |i| match levi_civita(i) {
            0.0 => Jet::zero(order),
            s => self.sqrt_det.scale(s),
        })
    }

    /// `ε_ab^{ef}` at the point, index order `[a, b, e, f]`.
    pub fn star_operator(&self) -> RealTensor {
        let eps = self.volume_form().values();
        let gi = self.g_inv_values();
        eps.raise(2, &gi).raise(3, &gi)
    }
}

/// Lower-index 2-form with exact antisymmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm(pub Mat4);

impl TwoForm {
    pub fn zero() -> Self {
        TwoForm([[0.0; NVARS]; NVARS])
    }

    /// Antisymmetric part of an arbitrary matrix.
    pub fn antisymmetrize(m: &Mat4) -> Self {
        TwoForm(std::array::from_fn(|a| {
            std::array::from_fn(|b| 0.5 * (m[a][b] - m[b][a]))
        }))
    }

    /// `e^i ∧ e^j`.
    pub fn basis(i: usize, j: usize) -> Self {
        let mut m = [[0.0; NVARS]; NVARS];
        m[i][j] = 1.0;
        m[j][i] = -1.0;
        TwoForm(m)
    }

    pub fn add(&self, other: &TwoForm) -> TwoForm {
        TwoForm(std::array::from_fn(|a| {
            std::array::from_fn(|b| self.0[a][b] + other.0[a][b])
        }))
    }

    pub fn scale(&self, k: f64) -> TwoForm {
        TwoForm(self.0.map(|r| r.map(|v| v * k)))
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        self.add(&other.scale(-1.0))
    }

    /// `½ φ_ab ψ^ab`, so that a unit-length simple form has norm 1.
    pub fn inner(&self, other: &TwoForm, ginv: &Mat4) -> f64 {
        0.5 * RealTensor::from_matrix(&self.0).inner(&RealTensor::from_matrix(&other.0), ginv)
    }

    pub fn norm_sq(&self, ginv: &Mat4) -> f64 {
        self.inner(self, ginv)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(★φ)_ab = ½ ε_abcd φ^cd`, orientation from the coordinate order.
pub fn hodge_star2(m: &MetricJet, phi: &TwoForm) -> TwoForm {
    let star = m.star_operator();
    let mut out = [[0.0; NVARS]; NVARS];
    for a in 0..NVARS {
        for b in 0..NVARS {
            let mut acc = 0.0;
            for e in 0..NVARS {
                for f in 0..NVARS {
                    acc += star.at(&[a, b, e, f]) * phi.0[e][f];
                }
            }
            out[a][b] = 0.5 * acc;
        }
    }
    TwoForm::antisymmetrize(&out)
}

/// Splits `φ` into self-dual and anti-self-dual parts.
pub fn sd_asd_project(m: &MetricJet, phi: &TwoForm) -> (TwoForm, TwoForm) {
    let s = hodge_star2(m, phi);
    (phi.add(&s).scale(0.5), phi.sub(&s).scale(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::MetricDefinition;
    use crate::jets::MultiIndex;

    pub(crate) fn conformally_flat(factor: &str, radius: f64) -> MetricDefinition {
        let text = format!(
            r#"{{"name": "t", "coords": ["x","y","z","w"],
                "g": {{"00": "{factor}", "11": "{factor}", "22": "{factor}", "33": "{factor}"}},
                "domain": {{"center": [0,0,0,0], "radius": {radius}}}}}"#
        );
        MetricDefinition::from_json(&text).unwrap()
    }

    #[test]
    fn flat_and_scaled_inverse() {
        let m = MetricJet::at(&conformally_flat("1", 1.0), [0.1, 0.2, 0.0, 0.0], 3).unwrap();
        assert_eq!(m.g_inv_values()[2][2], 1.0);
        assert_eq!(m.sqrt_det.value(), 1.0);

        let m = MetricJet::at(&conformally_flat("4", 1.0), [0.0; 4], 3).unwrap();
        assert_eq!(m.g_inv_values()[1][1], 0.25);
        assert_eq!(m.sqrt_det.value(), 16.0);
    }

    #[test]
    fn sphere_chart_inverse_in_all_coefficients() {
        let def = conformally_flat("4/(1 + x^2 + y^2 + z^2 + w^2)^2", 2.0);
        let m = MetricJet::at(&def, [0.0; 4], 4).unwrap();
        assert!((m.g_inv_values()[0][0] - 0.25).abs() < 1e-15);
        let m = MetricJet::at(&def, [0.3, -0.2, 0.5, 0.1], 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut p = Jet::zero(4);
                for k in 0..4 {
                    p.add_product(&m.g[i][k], &m.g_inv[k][j]);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((p.value() - target).abs() < 1e-12);
                let mut rest = p.clone();
                rest.add_scaled(&Jet::constant(target, 4), -1.0);
                assert!(rest.max_abs() < 1e-10, "{i}{j}: {rest:?}");
            }
        }
        // √det = u^2 for u = 4/(1+|x|^2)^2
        let u = 4.0 / (1.0f64 + 0.09 + 0.04 + 0.25 + 0.01).powi(2);
        assert!((m.sqrt_det.value() - u * u).abs() < 1e-12);
        let _ = m.sqrt_det.partial(&MultiIndex::unit(0)).unwrap();
    }

    #[test]
    fn rejects_indefinite_metric() {
        let text = r#"{"name": "t", "coords": ["x","y","z","w"],
            "g": {"00": "1", "11": "1", "22": "1", "33": "-1"},
            "domain": {"center": [0,0,0,0], "radius": 1}}"#;
        let def = MetricDefinition::from_json(text).unwrap();
        match MetricJet::at(&def, [0.0; 4], 2) {
            Err(Error::NotPositiveDefinite { eigenvalues, .. }) => {
                assert_eq!(eigenvalues.iter().filter(|e| **e < 0.0).count(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_points_outside_domain() {
        let def = conformally_flat("1", 1.0);
        assert!(matches!(
            MetricJet::at(&def, [2.0, 0.0, 0.0, 0.0], 2),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn hodge_star_on_flat_basis() {
        let m = MetricJet::at(&conformally_flat("1", 1.0), [0.0; 4], 1).unwrap();
        assert_eq!(hodge_star2(&m, &TwoForm::basis(0, 1)), TwoForm::basis(2, 3));
        assert_eq!(hodge_star2(&m, &TwoForm::basis(0, 2)), TwoForm::basis(3, 1));
        for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
            let phi = TwoForm::basis(i, j);
            assert_eq!(hodge_star2(&m, &hodge_star2(&m, &phi)), phi);
        }
        let scaled = MetricJet::at(&conformally_flat("9", 1.0), [0.0; 4], 1).unwrap();
        let phi = TwoForm::basis(1, 3);
        let d = hodge_star2(&scaled, &phi).sub(&hodge_star2(&m, &phi));
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn projections_of_kahler_like_forms() {
        let m = MetricJet::at(&conformally_flat("1", 1.0), [0.0; 4], 1).unwrap();
        let sd = TwoForm::basis(0, 1).add(&TwoForm::basis(2, 3));
        let asd = TwoForm::basis(0, 1).sub(&TwoForm::basis(2, 3));
        assert_eq!(sd_asd_project(&m, &sd), (sd.clone(), TwoForm::zero()));
        assert_eq!(sd_asd_project(&m, &asd), (TwoForm::zero(), asd.clone()));
        assert_eq!(sd.norm_sq(&m.g_inv_values()), 2.0);
    }
}
