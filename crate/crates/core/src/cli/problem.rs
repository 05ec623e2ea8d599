//! Problem files: JSON with complex numbers as `[re, im]` pairs.
//!
//! ```json
//! {
//!   "matrix": {"dense": [[[1, 0], [0, 0]], [[0, 0], [0.5, 0]]]},
//!   "x0": [[0.6, 0], [0.8, 0]],
//!   "t": 1.0,
//!   "mode": "restricted",
//!   "boost": "off"
//! }
//! ```
//!
//! A sparse matrix is given as `{"sparse": {"dim": n, "entries": [[i, j, re, im], ...]}}`
//! with `i <= j`; the lower triangle is filled in by conjugation.

use std::path::Path;

use serde_json::{json, Map, Value};

use super::CliError;
use crate::circuit::EigenvalueMode;
use crate::numerics::{ComplexMatrix, ComplexVector, C64};
use crate::solver::{BoostPolicy, HldeProblem};

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemFile {
    pub problem: HldeProblem,
    pub mode: Option<EigenvalueMode>,
    pub boost: Option<BoostPolicy>,
    /// Raw bytes the problem was parsed from.
    pub bytes: Vec<u8>,
}

fn err(field: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        field: field.to_string(),
        message: message.into(),
    }
}

fn number(v: &Value, field: &str) -> Result<f64, CliError> {
    let x = v
        .as_f64()
        .ok_or_else(|| err(field, format!("expected a number, found {v}")))?;
    if !x.is_finite() {
        return Err(err(field, "number is not finite"));
    }
    Ok(x)
}

fn index(v: &Value, field: &str) -> Result<usize, CliError> {
    v.as_u64()
        .map(|i| i as usize)
        .ok_or_else(|| err(field, format!("expected a non-negative integer, found {v}")))
}

fn complex(v: &Value, field: &str) -> Result<C64, CliError> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(C64::new(
            number(re, &format!("{field}[0]"))?,
            number(im, &format!("{field}[1]"))?,
        )),
        _ => Err(err(field, format!("expected an [re, im] pair, found {v}"))),
    }
}

fn complex_list(v: &Value, field: &str) -> Result<Vec<C64>, CliError> {
    v.as_array()
        .ok_or_else(|| err(field, "expected an array of [re, im] pairs"))?
        .iter()
        .enumerate()
        .map(|(i, z)| complex(z, &format!("{field}[{i}]")))
        .collect()
}

fn parse_matrix(v: &Value) -> Result<ComplexMatrix, CliError> {
    let obj = v
        .as_object()
        .ok_or_else(|| err("matrix", "expected an object with a \"dense\" or \"sparse\" key"))?;
    match (obj.get("dense"), obj.get("sparse")) {
        (Some(dense), None) => {
            let rows = dense
                .as_array()
                .ok_or_else(|| err("matrix.dense", "expected an array of rows"))?;
            if rows.is_empty() {
                return Err(err("matrix.dense", "matrix is empty"));
            }
            let rows: Vec<Vec<C64>> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| complex_list(r, &format!("matrix.dense[{i}]")))
                .collect::<Result<_, _>>()?;
            let n = rows.len();
            if let Some(i) = rows.iter().position(|r| r.len() != n) {
                return Err(err(
                    &format!("matrix.dense[{i}]"),
                    format!("row has {} entries, expected {n}", rows[i].len()),
                ));
            }
            ComplexMatrix::from_rows(&rows).map_err(|e| err("matrix.dense", e.to_string()))
        }
        (None, Some(sparse)) => {
            let dim = index(
                sparse.get("dim").ok_or_else(|| err("matrix.sparse.dim", "missing"))?,
                "matrix.sparse.dim",
            )?;
            if dim == 0 {
                return Err(err("matrix.sparse.dim", "dimension must be positive"));
            }
            let entries = sparse
                .get("entries")
                .and_then(Value::as_array)
                .ok_or_else(|| err("matrix.sparse.entries", "expected an array of [row, col, re, im]"))?;
            let mut m = ComplexMatrix::zeros(dim);
            for (k, e) in entries.iter().enumerate() {
                let field = format!("matrix.sparse.entries[{k}]");
                let [r, c, re, im] = e
                    .as_array()
                    .map(Vec::as_slice)
                    .and_then(|s| <&[Value; 4]>::try_from(s).ok())
                    .ok_or_else(|| err(&field, "expected [row, col, re, im]"))?;
                let (i, j) = (index(r, &field)?, index(c, &field)?);
                if i >= dim || j >= dim {
                    return Err(err(&field, format!("index ({i}, {j}) outside {dim}×{dim}")));
                }
                if i > j {
                    return Err(err(&field, "only entries with row <= col may be given"));
                }
                let z = C64::new(number(re, &field)?, number(im, &field)?);
                m[(i, j)] = z;
                if i != j {
                    m[(j, i)] = z.conj();
                }
            }
            Ok(m)
        }
        _ => Err(err("matrix", "expected exactly one of \"dense\" or \"sparse\"")),
    }
}

pub fn parse_mode(s: &str) -> Option<EigenvalueMode> {
    match s {
        "restricted" => Some(EigenvalueMode::RestrictedPositive),
        "general" => Some(EigenvalueMode::GeneralHermitian),
        _ => None,
    }
}

/// `None` for `"off"`.
pub fn parse_boost(s: &str) -> Result<Option<BoostPolicy>, ()> {
    match s {
        "off" => Ok(None),
        "guarantee" => Ok(Some(BoostPolicy::Guarantee)),
        "zero-mean" => Ok(Some(BoostPolicy::ZeroMean)),
        _ => Err(()),
    }
}

pub fn parse_problem_bytes(bytes: &[u8]) -> Result<ProblemFile, CliError> {
    let doc: Value = serde_json::from_slice(bytes).map_err(|e| CliError::Parse {
        field: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let obj = doc.as_object().ok_or_else(|| err("document", "expected a JSON object"))?;
    let a = parse_matrix(obj.get("matrix").ok_or_else(|| err("matrix", "missing"))?)?;
    let x0 = complex_list(obj.get("x0").ok_or_else(|| err("x0", "missing"))?, "x0")?;
    let t = number(obj.get("t").ok_or_else(|| err("t", "missing"))?, "t")?;
    let mode = match obj.get("mode") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_str()
                .and_then(parse_mode)
                .ok_or_else(|| err("mode", format!("expected \"restricted\" or \"general\", found {v}")))?,
        ),
    };
    let boost = match obj.get("boost") {
        None | Some(Value::Null) => None,
        Some(v) => v
            .as_str()
            .and_then(|s| parse_boost(s).ok())
            .ok_or_else(|| err("boost", format!("expected \"off\", \"guarantee\" or \"zero-mean\", found {v}")))?,
    };
    let x0 = ComplexVector::new(x0).map_err(|e| err("x0", e.to_string()))?;
    let problem = HldeProblem::new(a, x0, t)?;
    Ok(ProblemFile {
        problem,
        mode,
        boost,
        bytes: bytes.to_vec(),
    })
}

pub fn parse_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_problem_bytes(&bytes)
}

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Dense problem document; parses back to the same problem bit for bit.
pub fn serialize_problem(
    problem: &HldeProblem,
    mode: Option<EigenvalueMode>,
    boost: Option<&BoostPolicy>,
) -> String {
    let a = problem.a();
    let rows: Vec<Value> = (0..a.dim())
        .map(|i| Value::Array(a.row(i).iter().map(|&z| pair(z)).collect()))
        .collect();
    let mut obj = Map::new();
    obj.insert("matrix".into(), json!({ "dense": rows }));
    obj.insert(
        "x0".into(),
        Value::Array(problem.x0().as_slice().iter().map(|&z| pair(z)).collect()),
    );
    obj.insert("t".into(), json!(problem.t()));
    if let Some(m) = mode {
        obj.insert("mode".into(), json!(m.as_str()));
    }
    if let Some(b) = boost {
        obj.insert("boost".into(), json!(b.as_str()));
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("serialisable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_example() {
        let src = br#"{"matrix": {"dense": [[[1,0],[0,0]],[[0,0],[0.5,0]]]}, "x0": [[1,0],[1,0]], "t": 1}"#;
        let p = parse_problem_bytes(src).unwrap();
        assert_eq!(p.problem.a(), &ComplexMatrix::from_real_diag(&[1.0, 0.5]));
        assert_eq!(p.mode, None);
    }

    #[test]
    fn sparse_is_mirrored() {
        let src = br#"{"matrix": {"sparse": {"dim": 2, "entries": [[0,0,1,0],[0,1,0.5,0.25],[1,1,1,0]]}}, "x0": [[1,0],[0,0]], "t": 0.5}"#;
        let p = parse_problem_bytes(src).unwrap();
        assert_eq!(p.problem.a()[(1, 0)], C64::new(0.5, -0.25));
        assert_eq!(p.problem.a()[(0, 1)], C64::new(0.5, 0.25));
    }

    #[test]
    fn lower_triangle_entry_is_rejected() {
        let src = br#"{"matrix": {"sparse": {"dim": 2, "entries": [[1,0,0.5,0]]}}, "x0": [[1,0],[0,0]], "t": 0.5}"#;
        match parse_problem_bytes(src) {
            Err(CliError::Parse { field, .. }) => assert_eq!(field, "matrix.sparse.entries[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_t_names_field() {
        let src = br#"{"matrix": {"dense": [[[1,0]]]}, "x0": [[1,0]], "t": "soon"}"#;
        match parse_problem_bytes(src) {
            Err(CliError::Parse { field, .. }) => assert_eq!(field, "t"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let src = br#"{"matrix": {"dense": [[[1,0],[1,0]],[[0,0],[1,0]]]}, "x0": [[1,0],[0,0]], "t": 1}"#;
        assert!(matches!(parse_problem_bytes(src), Err(CliError::Problem(_))));
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse_problem_bytes(b"{\n\"t\": }") {
            Err(CliError::Parse { field, .. }) => assert!(field.starts_with("line 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        use crate::oracle::instances::{random_hermitian, random_vector};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            let p = HldeProblem::new(random_hermitian(&mut rng, n, 2.0), random_vector(&mut rng, n), 0.1 * n as f64)
                .unwrap();
            let s = serialize_problem(&p, Some(EigenvalueMode::GeneralHermitian), Some(&BoostPolicy::ZeroMean));
            let back = parse_problem_bytes(s.as_bytes()).unwrap();
            assert_eq!(back.problem, p);
            assert_eq!(back.mode, Some(EigenvalueMode::GeneralHermitian));
            assert_eq!(back.boost, Some(BoostPolicy::ZeroMean));
        }
    }
}
