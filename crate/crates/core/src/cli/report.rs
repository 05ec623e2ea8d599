//! Report documents. Keys are emitted in a fixed order and every real
//! number is written with 17 significant digits, so identical runs
//! produce identical bytes.

use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::numerics::{ComplexVector, C64};
use crate::oracle::ErrorBudget;
use crate::solver::{RunMode, SolveReport};

/// 17 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let s = format!("{x:.16e}");
    Value::Number(s.parse::<Number>().expect("formatted float is valid JSON"))
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn complex(z: C64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

fn vector(v: &ComplexVector) -> Value {
    Value::Array(v.as_slice().iter().map(|&z| complex(z)).collect())
}

fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// How the phase register size was chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum Sizing {
    Fixed,
    EstimateBigL { eps: f64 },
    EstimateLFull { eps: f64 },
}

pub struct ReportContext<'a> {
    pub problem_path: &'a str,
    pub input_bytes: &'a [u8],
    pub sizing: Sizing,
    pub budget: &'a ErrorBudget,
    pub extra_warnings: &'a [String],
    pub include_timing: bool,
}

macro_rules! obj {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = Map::new();
        $( m.insert($k.to_string(), $v); )*
        Value::Object(m)
    }};
}

pub fn build_report(report: &SolveReport, ctx: &ReportContext<'_>) -> Value {
    let cfg = &report.config;
    let (run, shots, seed) = match cfg.run_mode {
        RunMode::ExactPostselect => ("exact", Value::Null, Value::Null),
        RunMode::Sampled { shots, seed } => ("sampled", Value::from(shots), Value::from(seed)),
    };
    let sizing = match ctx.sizing {
        Sizing::Fixed => obj! { "method" => Value::from("fixed"), "eps" => Value::Null },
        Sizing::EstimateBigL { eps } => obj! { "method" => Value::from("estimate_L"), "eps" => num(eps) },
        Sizing::EstimateLFull { eps } => obj! { "method" => Value::from("estimate_l_full"), "eps" => num(eps) },
    };
    let layout = report.layout;
    let b = ctx.budget;
    let warnings: Vec<Value> = report
        .warnings
        .iter()
        .map(|w| Value::from(w.to_string()))
        .chain(ctx.extra_warnings.iter().map(|w| Value::from(w.as_str())))
        .collect();

    let mut doc = Map::new();
    doc.insert(
        "tool".into(),
        obj! { "name" => Value::from(env!("CARGO_PKG_NAME")), "version" => Value::from(env!("CARGO_PKG_VERSION")) },
    );
    doc.insert(
        "input".into(),
        obj! {
            "problem" => Value::from(ctx.problem_path),
            "sha256" => Value::from(sha256_hex(ctx.input_bytes)),
            "dimension" => Value::from(report.x_reconstructed.dim()),
        },
    );
    doc.insert(
        "config".into(),
        obj! {
            "phase_qubits" => Value::from(cfg.l),
            "L" => Value::from(1u64 << cfg.l),
            "mode" => Value::from(cfg.mode.as_str()),
            "boost" => Value::from(cfg.boost.as_ref().map_or("off", |b| b.as_str())),
            "postselect_phase" => Value::from(cfg.postselect_phase),
            "run" => Value::from(run),
            "shots" => shots,
            "seed" => seed,
            "compare_oracle" => Value::from(cfg.compare_oracle),
            "sizing" => sizing,
        },
    );
    doc.insert(
        "layout".into(),
        obj! {
            "description" => Value::from(layout.to_string()),
            "work_qubits" => Value::from(layout.n_work()),
            "phase_qubits" => Value::from(layout.l_phase()),
            "environment_qubits" => Value::from(layout.l_env()),
            "total_qubits" => Value::from(layout.total()),
        },
    );
    doc.insert(
        "spectrum".into(),
        obj! {
            "norm_a" => num(report.norm_a),
            "kappa" => opt_num(report.kappa),
            "eigenvalues" => reals(&report.eigenvalues),
        },
    );
    doc.insert(
        "results".into(),
        obj! {
            "p_success_exact" => num(report.p_success_exact),
            "p_success_empirical" => opt_num(report.p_success_empirical),
            "gamma_analytic" => num(report.gamma_analytic),
            "work_purity" => num(report.work_density.purity()),
            "residual_ancilla_population" => num(report.residual_ancilla_population),
            "thetas" => reals(&report.thetas),
            "work_state" => vector(&report.work_state),
            "x_reconstructed" => vector(&report.x_reconstructed),
            "x_oracle" => report.x_oracle.as_ref().map_or(Value::Null, vector),
            "fidelity" => opt_num(report.fidelity),
            "additive_error" => opt_num(report.additive_error),
            "relative_error" => opt_num(report.relative_error),
        },
    );
    doc.insert(
        "bounds".into(),
        obj! {
            "precision" => num(b.precision),
            "p" => Value::from(b.p),
            "eps_qpe" => num(b.eps_qpe),
            "eps_pr_1" => num(b.eps_pr_1),
            "eps_pr_2" => num(b.eps_pr_2),
        },
    );
    doc.insert("warnings".into(), Value::Array(warnings));
    if ctx.include_timing {
        doc.insert("timing_ms".into(), num(report.timing_ms));
    }
    Value::Object(doc)
}

pub fn render(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serialisable");
    s.push('\n');
    s
}
