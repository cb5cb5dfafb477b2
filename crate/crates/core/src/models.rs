//! Model file format (TOML) and built-in model generators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{HPolyhedron, HalfSpace, Hyperrectangle, LazySet, Matrix, Vector};
use crate::hybrid::{Assignment, HybridAutomaton, Location, SymbolicState, Transition};
use crate::lti::LTISystem;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("toml parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("toml write error: {0}")]
    Write(#[from] toml::ser::Error),
    #[error("invalid model: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LocationSpec {
    pub name: String,
    /// row-major square dynamics matrix
    pub a: Vec<Vec<f64>>,
    /// row-major input matrix; omitted means no input
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariant: Vec<ConstraintSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guard: Vec<ConstraintSpec>,
    /// omitted means identity
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assign_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assign_vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub location: String,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SafetySpec {
    pub constraints: Vec<ConstraintSpec>,
}

/// On-disk model description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub dim: usize,
    #[serde(rename = "location")]
    pub locations: Vec<LocationSpec>,
    #[serde(rename = "transition", default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<TransitionSpec>,
    #[serde(rename = "initial")]
    pub initial: Vec<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<SafetySpec>,
}

/// Validated in-memory model.
#[derive(Debug)]
pub struct Model {
    pub name: String,
    pub automaton: HybridAutomaton,
    pub initial: Vec<SymbolicState>,
    pub safe_set: Option<HPolyhedron>,
}

pub fn read_model_file(text: &str) -> Result<ModelFile, ModelError> {
    Ok(toml::from_str(text)?)
}

pub fn write_model_file(file: &ModelFile) -> Result<String, ModelError> {
    Ok(toml::to_string_pretty(file)?)
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix, ModelError> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(ModelError::Validation(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ModelError::Validation(format!("{what}: ragged matrix")));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn constraints_from_specs(
    specs: &[ConstraintSpec],
    dim: usize,
    what: &str,
) -> Result<Vec<HalfSpace>, ModelError> {
    specs
        .iter()
        .map(|c| {
            if c.normal.len() != dim {
                return Err(ModelError::Validation(format!(
                    "{what}: constraint normal has length {}, expected {dim}",
                    c.normal.len()
                )));
            }
            Ok(HalfSpace::new(
                Vector::from_column_slice(&c.normal),
                c.offset,
            ))
        })
        .collect()
}

/// Builds the validated model from a parsed file.
pub fn build_model(file: &ModelFile) -> Result<Model, ModelError> {
    let n = file.dim;
    if file.locations.is_empty() {
        return Err(ModelError::Validation("no locations".into()));
    }
    let find_loc = |name: &str| -> Result<usize, ModelError> {
        file.locations
            .iter()
            .position(|l| l.name == name)
            .ok_or_else(|| ModelError::Validation(format!("unknown location '{name}'")))
    };

    let mut locations = Vec::with_capacity(file.locations.len());
    for spec in &file.locations {
        let a = matrix_from_rows(&spec.a, &spec.name)?;
        if a.nrows() != n || a.ncols() != n {
            return Err(ModelError::Validation(format!(
                "{}: dynamics matrix is {}x{}, expected {n}x{n}",
                spec.name,
                a.nrows(),
                a.ncols()
            )));
        }
        let dynamics = match (&spec.b, &spec.u_lo, &spec.u_hi) {
            (None, None, None) => LTISystem::autonomous(a),
            (Some(b), Some(lo), Some(hi)) => {
                let b = matrix_from_rows(b, &spec.name)?;
                if b.nrows() != n {
                    return Err(ModelError::Validation(format!(
                        "{}: input matrix has {} rows, expected {n}",
                        spec.name,
                        b.nrows()
                    )));
                }
                if lo.len() != b.ncols() || hi.len() != b.ncols() {
                    return Err(ModelError::Validation(format!(
                        "{}: input bounds do not match the input matrix",
                        spec.name
                    )));
                }
                let u = LazySet::Box(Hyperrectangle::from_bounds(
                    &Vector::from_column_slice(lo),
                    &Vector::from_column_slice(hi),
                ));
                LTISystem::new(a, b, u)
            }
            _ => {
                return Err(ModelError::Validation(format!(
                    "{}: b, u_lo and u_hi must be given together",
                    spec.name
                )))
            }
        };
        let invariant = HPolyhedron::with_dim(
            n,
            constraints_from_specs(&spec.invariant, n, &spec.name)?,
        );
        locations.push(Location {
            name: spec.name.clone(),
            dynamics,
            invariant,
        });
    }

    let mut transitions = Vec::with_capacity(file.transitions.len());
    for spec in &file.transitions {
        let source = find_loc(&spec.source)?;
        let target = find_loc(&spec.target)?;
        let guard =
            HPolyhedron::with_dim(n, constraints_from_specs(&spec.guard, n, "guard")?);
        let matrix = match &spec.assign_matrix {
            Some(rows) => {
                let m = matrix_from_rows(rows, "assignment")?;
                if m.nrows() != n || m.ncols() != n {
                    return Err(ModelError::Validation(
                        "assignment matrix has wrong shape".into(),
                    ));
                }
                m
            }
            None => Matrix::identity(n, n),
        };
        let vector = match &spec.assign_vector {
            Some(v) => {
                if v.len() != n {
                    return Err(ModelError::Validation(
                        "assignment vector has wrong length".into(),
                    ));
                }
                Vector::from_column_slice(v)
            }
            None => Vector::zeros(n),
        };
        transitions.push(Transition {
            source,
            target,
            guard,
            assignment: Assignment { matrix, vector },
        });
    }

    let mut initial = Vec::with_capacity(file.initial.len());
    for spec in &file.initial {
        let location = find_loc(&spec.location)?;
        if spec.lo.len() != n || spec.hi.len() != n {
            return Err(ModelError::Validation(
                "initial bounds have wrong length".into(),
            ));
        }
        initial.push(SymbolicState {
            location,
            set: LazySet::Box(Hyperrectangle::from_bounds(
                &Vector::from_column_slice(&spec.lo),
                &Vector::from_column_slice(&spec.hi),
            )),
            jumps: 0,
        });
    }
    if initial.is_empty() {
        return Err(ModelError::Validation("no initial states".into()));
    }

    let safe_set = match &file.safety {
        Some(s) => Some(HPolyhedron::with_dim(
            n,
            constraints_from_specs(&s.constraints, n, "safety")?,
        )),
        None => None,
    };

    Ok(Model {
        name: file.name.clone(),
        automaton: HybridAutomaton {
            dim: n,
            locations,
            transitions,
        },
        initial,
        safe_set,
    })
}

/// Convenience: parse and validate in one step.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    build_model(&read_model_file(text)?)
}

const SWITCH_SLOPE: f64 = 0.714286;

/// Switched oscillator with a chain of `k` first-order filters.
///
/// State order: `x`, `y`, `z_1 .. z_k`, jump counter. Four locations cycle
/// around the origin; the filters smooth `x` and the counter bounds the
/// number of discrete jumps through the guards.
pub fn generate_filtered_oscillator(k: usize) -> ModelFile {
    let n = k + 3;
    let cnt = n - 1;
    let mut a = vec![vec![0.0; n]; n];
    a[0][0] = -2.0;
    a[1][1] = -1.0;
    for i in 0..k {
        let row = 2 + i;
        a[row][row] = -5.0;
        a[row][if i == 0 { 0 } else { row - 1 }] = 5.0;
    }

    let offsets = |sx: f64| -> Vec<Vec<f64>> {
        let mut b = vec![vec![0.0]; n];
        b[0][0] = 1.4 * sx;
        b[1][0] = -0.7 * sx;
        b
    };

    let e = |i: usize, s: f64| -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = s;
        v
    };
    let diag = |s: f64| -> Vec<f64> {
        // s * (0.714286 x + y)
        let mut v = vec![0.0; n];
        v[0] = SWITCH_SLOPE * s;
        v[1] = s;
        v
    };
    let hs = |normal: Vec<f64>, offset: f64| ConstraintSpec { normal, offset };

    let x_le_0 = hs(e(0, 1.0), 0.0);
    let x_ge_0 = hs(e(0, -1.0), 0.0);
    let diag_ge_0 = hs(diag(-1.0), 0.0);
    let diag_le_0 = hs(diag(1.0), 0.0);

    let location = |name: &str, sx: f64, inv: Vec<ConstraintSpec>| LocationSpec {
        name: name.into(),
        a: a.clone(),
        b: Some(offsets(sx)),
        u_lo: Some(vec![1.0]),
        u_hi: Some(vec![1.0]),
        invariant: inv,
    };

    let locations = vec![
        location("loc1", 1.0, vec![x_le_0.clone(), diag_ge_0.clone()]),
        location("loc2", -1.0, vec![x_le_0.clone(), diag_le_0.clone()]),
        location("loc3", 1.0, vec![x_ge_0.clone(), diag_ge_0.clone()]),
        location("loc4", -1.0, vec![x_ge_0.clone(), diag_le_0.clone()]),
    ];

    let counter_guard = hs(e(cnt, 1.0), 4.5);
    let count_up = {
        let mut v = vec![0.0; n];
        v[cnt] = 1.0;
        v
    };
    let transition = |source: &str, target: &str, guard: Vec<ConstraintSpec>| TransitionSpec {
        source: source.into(),
        target: target.into(),
        guard,
        assign_matrix: None,
        assign_vector: Some(count_up.clone()),
    };

    let transitions = vec![
        // crossing the switching line while x >= 0
        transition(
            "loc3",
            "loc4",
            vec![
                hs(diag(1.0), 0.0),
                hs(diag(-1.0), 0.0),
                x_ge_0.clone(),
                counter_guard.clone(),
            ],
        ),
        // crossing x = 0 downward while below the line
        transition(
            "loc4",
            "loc2",
            vec![
                hs(e(0, 1.0), 0.0),
                hs(e(0, -1.0), 0.0),
                diag_le_0.clone(),
                counter_guard.clone(),
            ],
        ),
        // crossing the switching line while x <= 0
        transition(
            "loc2",
            "loc1",
            vec![
                hs(diag(1.0), 0.0),
                hs(diag(-1.0), 0.0),
                x_le_0.clone(),
                counter_guard.clone(),
            ],
        ),
        // crossing x = 0 upward while above the line
        transition(
            "loc1",
            "loc3",
            vec![
                hs(e(0, 1.0), 0.0),
                hs(e(0, -1.0), 0.0),
                diag_ge_0.clone(),
                counter_guard.clone(),
            ],
        ),
    ];

    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    lo[0] = 0.2;
    hi[0] = 0.3;
    lo[1] = -0.1;
    hi[1] = 0.1;

    ModelFile {
        name: format!("filtered-oscillator-{k}"),
        dim: n,
        locations,
        transitions,
        initial: vec![InitialSpec {
            location: "loc3".into(),
            lo,
            hi,
        }],
        safety: Some(SafetySpec {
            constraints: vec![hs(e(1, 1.0), 0.5)],
        }),
    }
}
