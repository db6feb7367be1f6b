//! Model files: a TOML document declaring the generator parameters, the
//! market maps, and the initial state. The parser checks shapes and rejects
//! unknown keys; admissibility is a separate concern (see
//! [`crate::affine::validate_params`]), so an inadmissible model can still
//! be loaded and inspected.
//!
//! Schema (dimensions n and m are explicit and every array must match):
//!
//! ```toml
//! n = 2            # state dimension
//! m = 1            # leading nonnegative components
//! e = 0.0          # log price s = e + <epsilon, x>
//! d = 0.01         # short rate r = d + <delta, x_(1..m)>
//! c = 0.005        # default intensity lambda = c + <gamma, x_(1..m)>
//! b = [0.048, 0.0]           # constant drift, length n
//! epsilon = [0.0, 1.0]       # length n
//! delta = [0.05]             # length m
//! gamma = [0.1]              # length m
//! x0 = [0.04, 0.0]           # initial state, length n
//! a = [[0.0, 0.0], [0.0, 0.0]]       # n x n, rows outer
//! beta = [[-1.2, 0.0], [-0.5, 0.0]]  # n x n
//! alpha = [[[0.08, -0.1], [-0.1, 0.5]]]  # m matrices, each n x n
//!
//! [[nu]]           # common jump measure, zero or more atoms
//! weight = 0.1
//! point = [0.0, -0.2]
//!
//! [[mu]]           # state-proportional jump measures; factor is 1-based
//! factor = 1
//! weight = 0.5
//! point = [0.1, -0.1]
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::affine::{AffineParams, JumpAtom, MarketSpec};
use crate::error::{Error, Result};
use crate::models::ModelInstance;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomRecord {
    weight: f64,
    point: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaledAtomRecord {
    factor: usize,
    weight: f64,
    point: Vec<f64>,
}

/// On-disk layout. Plain values come first so the TOML serializer can emit
/// the jump atoms as trailing arrays of tables.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    n: usize,
    m: usize,
    e: f64,
    d: f64,
    c: f64,
    b: Vec<f64>,
    epsilon: Vec<f64>,
    delta: Vec<f64>,
    gamma: Vec<f64>,
    x0: Vec<f64>,
    a: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    alpha: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    nu: Vec<AtomRecord>,
    #[serde(default)]
    mu: Vec<ScaledAtomRecord>,
}

/// A parsed model file: parameters, market maps, and initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument {
    pub params: AffineParams,
    pub market: MarketSpec,
    pub x0: Vec<f64>,
}

fn shape_err(what: &str, got: usize, want: usize) -> Error {
    Error::ModelShape(format!("{what}: got {got}, expected {want}"))
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(shape_err(&format!("{name} row count"), rows.len(), n));
    }
    let mut mat = DMatrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(shape_err(&format!("{name} row {r} length"), row.len(), n));
        }
        for (c, &v) in row.iter().enumerate() {
            mat[(r, c)] = v;
        }
    }
    Ok(mat)
}

fn rows_from_matrix(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..mat.nrows())
        .map(|r| (0..mat.ncols()).map(|c| mat[(r, c)]).collect())
        .collect()
}

fn check_finite(doc: &ModelRecord) -> Result<()> {
    let mut all = vec![doc.e, doc.d, doc.c];
    all.extend_from_slice(&doc.b);
    all.extend_from_slice(&doc.epsilon);
    all.extend_from_slice(&doc.delta);
    all.extend_from_slice(&doc.gamma);
    all.extend_from_slice(&doc.x0);
    for rows in [&doc.a, &doc.beta] {
        for row in rows.iter() {
            all.extend_from_slice(row);
        }
    }
    for mat in &doc.alpha {
        for row in mat {
            all.extend_from_slice(row);
        }
    }
    for atom in &doc.nu {
        all.push(atom.weight);
        all.extend_from_slice(&atom.point);
    }
    for atom in &doc.mu {
        all.push(atom.weight);
        all.extend_from_slice(&atom.point);
    }
    if all.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::ModelShape("non-finite entry in model file".into()))
    }
}

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let record: ModelRecord =
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let (n, m) = (record.n, record.m);
        if n == 0 {
            return Err(Error::ModelShape("n must be at least 1".into()));
        }
        if m > n {
            return Err(shape_err("m", m, n));
        }
        check_finite(&record)?;
        let vec_field = |name: &str, vals: &[f64], want: usize| -> Result<DVector<f64>> {
            if vals.len() != want {
                return Err(shape_err(&format!("{name} length"), vals.len(), want));
            }
            Ok(DVector::from_row_slice(vals))
        };
        let atom = |name: &str, weight: f64, point: &[f64]| -> Result<JumpAtom> {
            if point.len() != n {
                return Err(shape_err(
                    &format!("{name} point length"),
                    point.len(),
                    n,
                ));
            }
            Ok(JumpAtom {
                weight,
                point: DVector::from_row_slice(point),
            })
        };

        if record.alpha.len() != m {
            return Err(shape_err("alpha count", record.alpha.len(), m));
        }
        let alpha = record
            .alpha
            .iter()
            .enumerate()
            .map(|(i, rows)| matrix_from_rows(&format!("alpha[{i}]"), rows, n))
            .collect::<Result<Vec<_>>>()?;

        let mut mu = vec![Vec::new(); m];
        for rec in &record.mu {
            if rec.factor == 0 || rec.factor > m {
                return Err(Error::ModelShape(format!(
                    "mu atom factor {} outside 1..={m}",
                    rec.factor
                )));
            }
            mu[rec.factor - 1].push(atom("mu", rec.weight, &rec.point)?);
        }
        let nu = record
            .nu
            .iter()
            .map(|rec| atom("nu", rec.weight, &rec.point))
            .collect::<Result<Vec<_>>>()?;

        let params = AffineParams {
            m,
            a: matrix_from_rows("a", &record.a, n)?,
            alpha,
            b: vec_field("b", &record.b, n)?,
            beta: matrix_from_rows("beta", &record.beta, n)?,
            nu,
            mu,
        };
        let market = MarketSpec {
            e: record.e,
            epsilon: vec_field("epsilon", &record.epsilon, n)?,
            d: record.d,
            delta: vec_field("delta", &record.delta, m)?,
            c: record.c,
            gamma: vec_field("gamma", &record.gamma, m)?,
        };
        let x0 = vec_field("x0", &record.x0, n)?;
        Ok(ModelDocument {
            params,
            market,
            x0: x0.iter().copied().collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical TOML form; parsing it back yields an identical document.
    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let mk = &self.market;
        let record = ModelRecord {
            n: p.dim(),
            m: p.m,
            e: mk.e,
            d: mk.d,
            c: mk.c,
            b: p.b.iter().copied().collect(),
            epsilon: mk.epsilon.iter().copied().collect(),
            delta: mk.delta.iter().copied().collect(),
            gamma: mk.gamma.iter().copied().collect(),
            x0: self.x0.clone(),
            a: rows_from_matrix(&p.a),
            beta: rows_from_matrix(&p.beta),
            alpha: p.alpha.iter().map(rows_from_matrix).collect(),
            nu: p
                .nu
                .iter()
                .map(|a| AtomRecord {
                    weight: a.weight,
                    point: a.point.iter().copied().collect(),
                })
                .collect(),
            mu: (0..p.m)
                .flat_map(|i| {
                    p.mu_list(i).iter().map(move |a| ScaledAtomRecord {
                        factor: i + 1,
                        weight: a.weight,
                        point: a.point.iter().copied().collect(),
                    })
                })
                .collect(),
        };
        toml::to_string(&record).expect("model record serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn from_instance(model: &ModelInstance) -> Self {
        ModelDocument {
            params: model.params.clone(),
            market: model.market.clone(),
            x0: model.x0.clone(),
        }
    }
}
