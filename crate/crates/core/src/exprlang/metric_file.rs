use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{parse, Expr, ParseError, Scope};
use crate::jets::NVARS;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub center: [f64; NVARS],
    pub radius: f64,
}

impl Domain {
    pub fn contains(&self, p: &[f64; NVARS]) -> bool {
        let d2: f64 = p.iter().zip(&self.center).map(|(a, b)| (a - b).powi(2)).sum();
        d2 <= self.radius * self.radius * (1.0 + 1e-12)
    }
}

/// On-disk form of a metric definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricFile {
    pub name: String,
    pub coords: [String; NVARS],
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub g: BTreeMap<String, String>,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<BTreeMap<String, String>>,
    pub domain: Domain,
}

/// Parsed metric: ten metric expressions, optional complex structure
/// `J^i_j` under key `"ij"`, parameter values in scope order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDefinition {
    pub name: String,
    pub scope: Scope,
    pub params: Vec<f64>,
    pub g: [[Expr; NVARS]; NVARS],
    pub j: Option<[[Expr; NVARS]; NVARS]>,
    pub domain: Domain,
}

fn key_indices(key: &str) -> Option<(usize, usize)> {
    let b = key.as_bytes();
    if b.len() != 2 {
        return None;
    }
    let i = (b[0] as char).to_digit(10)? as usize;
    let j = (b[1] as char).to_digit(10)? as usize;
    (i < NVARS && j < NVARS).then_some((i, j))
}

fn zero_matrix() -> [[Expr; NVARS]; NVARS] {
    std::array::from_fn(|_| std::array::from_fn(|_| Expr::Num(0.0)))
}

fn parse_component(src: &str, scope: &Scope, field: &str, key: &str) -> Result<Expr, Error> {
    parse(src, scope).map_err(|e: ParseError| Error::Parse {
        component: format!("{field}[{key}]"),
        source: e,
    })
}

impl MetricDefinition {
    pub fn from_file(file: &MetricFile) -> Result<Self, Error> {
        let coords: Vec<&str> = file.coords.iter().map(String::as_str).collect();
        for (n, c) in coords.iter().enumerate() {
            if coords[..n].contains(c) || file.params.contains_key(*c) {
                return Err(Error::Config(format!("duplicate name {c:?}")));
            }
        }
        let params: Vec<&str> = file.params.keys().map(String::as_str).collect();
        let scope = Scope::new([coords[0], coords[1], coords[2], coords[3]], &params);

        let mut g = zero_matrix();
        for (key, src) in &file.g {
            let (i, j) = key_indices(key)
                .filter(|(i, j)| i <= j)
                .ok_or_else(|| Error::Config(format!("bad metric key {key:?}")))?;
            let e = parse_component(src, &scope, "g", key)?.fold_constants();
            g[i][j] = e.clone();
            g[j][i] = e;
        }

        let j = match &file.j {
            None => None,
            Some(map) => {
                let mut m = zero_matrix();
                for (key, src) in map {
                    let (a, b) = key_indices(key)
                        .ok_or_else(|| Error::Config(format!("bad J key {key:?}")))?;
                    m[a][b] = parse_component(src, &scope, "J", key)?.fold_constants();
                }
                Some(m)
            }
        };

        if !(file.domain.radius > 0.0) {
            return Err(Error::Config("domain radius must be positive".into()));
        }

        Ok(MetricDefinition {
            name: file.name.clone(),
            scope,
            params: file.params.values().copied().collect(),
            g,
            j,
            domain: file.domain.clone(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let file: MetricFile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("metric file: {e}")))?;
        Self::from_file(&file)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_file(&self) -> MetricFile {
        let mut g = BTreeMap::new();
        for i in 0..NVARS {
            for k in i..NVARS {
                if self.g[i][k] != Expr::Num(0.0) {
                    g.insert(format!("{i}{k}"), self.g[i][k].to_source(&self.scope));
                }
            }
        }
        let j = self.j.as_ref().map(|m| {
            let mut out = BTreeMap::new();
            for (a, row) in m.iter().enumerate() {
                for (b, e) in row.iter().enumerate() {
                    if *e != Expr::Num(0.0) {
                        out.insert(format!("{a}{b}"), e.to_source(&self.scope));
                    }
                }
            }
            out
        });
        MetricFile {
            name: self.name.clone(),
            coords: self.scope.coords.clone(),
            params: self
                .scope
                .params
                .iter()
                .cloned()
                .zip(self.params.iter().copied())
                .collect(),
            g,
            j,
            domain: self.domain.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("metric file serializes")
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.scope.param_index(name).map(|i| self.params[i])
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), Error> {
        let i = self
            .scope
            .param_index(name)
            .ok_or_else(|| Error::Config(format!("unknown parameter {name:?}")))?;
        self.params[i] = value;
        Ok(())
    }

    /// Metric matrix at a point.
    pub fn g_at(&self, p: &[f64; NVARS]) -> [[f64; NVARS]; NVARS] {
        std::array::from_fn(|i| std::array::from_fn(|k| self.g[i][k].eval(p, &self.params)))
    }

    /// `J^i_j` at a point.
    pub fn j_at(&self, p: &[f64; NVARS]) -> Option<[[f64; NVARS]; NVARS]> {
        self.j.as_ref().map(|m| {
            std::array::from_fn(|i| std::array::from_fn(|k| m[i][k].eval(p, &self.params)))
        })
    }

    /// Checks positive definiteness of g and, when present, `J² = −1` and
    /// `g(J·,J·) = g` at the given points.
    pub fn validate_at(&self, points: &[[f64; NVARS]]) -> Result<(), Error> {
        for p in points {
            let g = self.g_at(p);
            crate::geometry::check_positive_definite(&g, p)?;
            if let Some(j) = self.j_at(p) {
                let scale = g.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
                for a in 0..NVARS {
                    for b in 0..NVARS {
                        let jj: f64 = (0..NVARS).map(|c| j[a][c] * j[c][b]).sum();
                        let target = if a == b { -1.0 } else { 0.0 };
                        if (jj - target).abs() > 1e-10 {
                            return Err(Error::ComplexStructure(format!(
                                "J^2 != -1 at {p:?}: entry ({a},{b}) = {jj:e}"
                            )));
                        }
                        let gjj: f64 = (0..NVARS)
                            .flat_map(|c| (0..NVARS).map(move |d| (c, d)))
                            .map(|(c, d)| g[c][d] * j[c][a] * j[d][b])
                            .sum();
                        if (gjj - g[a][b]).abs() > 1e-10 * scale {
                            return Err(Error::ComplexStructure(format!(
                                "g(J.,J.) != g at {p:?}: entry ({a},{b})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
