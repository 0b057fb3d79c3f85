//! JSON encodings of models, strategies, solutions, and reports.
//!
//! Matrices travel as row-major arrays of arrays of numbers; a family is
//! an array of L such matrices. The model document looks like
//!
//! ```json
//! {
//!   "n": 2, "m1": 2, "m2": 2, "L": 3,
//!   "generator": [[-0.5, 0.3, 0.2], [0.2, -0.4, 0.2], [0.3, 0.2, -0.5]],
//!   "A": [[[...]], ...], "B1": [...], "B2": [...],
//!   "C": [...], "D1": [...], "D2": [...],
//!   "cost1": {"Q": [...], "S1": [...], "S2": [...],
//!             "R11": [...], "R12": [...], "R22": [...]},
//!   "cost2": {...},
//!   "inhomogeneity": {"lambda": 1.0, "bBar": [...], ...},
//!   "kind": "ZeroSum"
//! }
//! ```
//!
//! `cost2` may be omitted for zero-sum models (it is the negation of
//! `cost1`); the S/R12 blocks and every inhomogeneity bar default to
//! zero when absent.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::care::{CareSolution, ResidualReport};
use crate::chain::Generator;
use crate::model::{
    CostBlock, Dynamics, GameKind, GameModel, Inhomogeneity, RegimeFamily, ValidationReport,
};
use crate::sim::{Estimate, SimReport};
use crate::stability::{StabilityVerdict, StabilizerCheck, Witness};
use crate::synthesis::{DampedOffset, StrategyPair};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("JSON parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bad matrix data: {0}")]
    BadMatrix(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type MatrixRows = Vec<Vec<f64>>;

fn to_rows(m: &DMatrix<f64>) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: &MatrixRows, what: &str) -> Result<DMatrix<f64>, IoError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(IoError::BadMatrix(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn family_to_rows(f: &RegimeFamily) -> Vec<MatrixRows> {
    f.iter().map(to_rows).collect()
}

fn family_from_rows(rows: &[MatrixRows], what: &str) -> Result<RegimeFamily, IoError> {
    let entries = rows
        .iter()
        .map(|m| from_rows(m, what))
        .collect::<Result<Vec<_>, _>>()?;
    RegimeFamily::new(entries).map_err(|e| IoError::BadMatrix(format!("{what}: {e}")))
}

fn zero_family(l: usize, rows: usize, cols: usize) -> RegimeFamily {
    RegimeFamily::zeros(l.max(1), rows, cols)
}

#[derive(Serialize, Deserialize)]
struct CostFile {
    #[serde(rename = "Q")]
    q: Vec<MatrixRows>,
    #[serde(rename = "S1", skip_serializing_if = "Option::is_none")]
    s1: Option<Vec<MatrixRows>>,
    #[serde(rename = "S2", skip_serializing_if = "Option::is_none")]
    s2: Option<Vec<MatrixRows>>,
    #[serde(rename = "R11")]
    r11: Vec<MatrixRows>,
    #[serde(rename = "R12", skip_serializing_if = "Option::is_none")]
    r12: Option<Vec<MatrixRows>>,
    #[serde(rename = "R22")]
    r22: Vec<MatrixRows>,
}

#[derive(Serialize, Deserialize)]
struct InhomogeneityFile {
    lambda: f64,
    #[serde(rename = "bBar", skip_serializing_if = "Option::is_none")]
    b_bar: Option<Vec<MatrixRows>>,
    #[serde(rename = "sigmaBar", skip_serializing_if = "Option::is_none")]
    sigma_bar: Option<Vec<MatrixRows>>,
    #[serde(rename = "q1Bar", skip_serializing_if = "Option::is_none")]
    q1_bar: Option<Vec<MatrixRows>>,
    #[serde(rename = "q2Bar", skip_serializing_if = "Option::is_none")]
    q2_bar: Option<Vec<MatrixRows>>,
    #[serde(rename = "rho1Bar1", skip_serializing_if = "Option::is_none")]
    rho1_bar1: Option<Vec<MatrixRows>>,
    #[serde(rename = "rho2Bar1", skip_serializing_if = "Option::is_none")]
    rho2_bar1: Option<Vec<MatrixRows>>,
    #[serde(rename = "rho1Bar2", skip_serializing_if = "Option::is_none")]
    rho1_bar2: Option<Vec<MatrixRows>>,
    #[serde(rename = "rho2Bar2", skip_serializing_if = "Option::is_none")]
    rho2_bar2: Option<Vec<MatrixRows>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    n: usize,
    m1: usize,
    m2: usize,
    #[serde(rename = "L")]
    l: usize,
    generator: MatrixRows,
    #[serde(rename = "A")]
    a: Vec<MatrixRows>,
    #[serde(rename = "B1")]
    b1: Vec<MatrixRows>,
    #[serde(rename = "B2")]
    b2: Vec<MatrixRows>,
    #[serde(rename = "C")]
    c: Vec<MatrixRows>,
    #[serde(rename = "D1")]
    d1: Vec<MatrixRows>,
    #[serde(rename = "D2")]
    d2: Vec<MatrixRows>,
    cost1: CostFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost2: Option<CostFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inhomogeneity: Option<InhomogeneityFile>,
    kind: String,
}

fn cost_from_file(
    file: &CostFile,
    l: usize,
    n: usize,
    m1: usize,
    m2: usize,
    what: &str,
) -> Result<CostBlock, IoError> {
    let opt_family = |data: &Option<Vec<MatrixRows>>, rows: usize, cols: usize, name: &str| {
        match data {
            Some(rowsets) => family_from_rows(rowsets, &format!("{what}.{name}")),
            None => Ok(zero_family(l, rows, cols)),
        }
    };
    Ok(CostBlock {
        q: family_from_rows(&file.q, &format!("{what}.Q"))?,
        s1: opt_family(&file.s1, m1, n, "S1")?,
        s2: opt_family(&file.s2, m2, n, "S2")?,
        r11: family_from_rows(&file.r11, &format!("{what}.R11"))?,
        r12: opt_family(&file.r12, m1, m2, "R12")?,
        r22: family_from_rows(&file.r22, &format!("{what}.R22"))?,
    })
}

fn cost_to_file(cost: &CostBlock) -> CostFile {
    let keep = |f: &RegimeFamily| {
        if f.max_abs() == 0.0 {
            None
        } else {
            Some(family_to_rows(f))
        }
    };
    CostFile {
        q: family_to_rows(&cost.q),
        s1: keep(&cost.s1),
        s2: keep(&cost.s2),
        r11: family_to_rows(&cost.r11),
        r12: keep(&cost.r12),
        r22: family_to_rows(&cost.r22),
    }
}

/// Parse a model document. Structural validation is the caller's job
/// (via [`crate::model::validate`]); this only rejects unreadable shapes.
pub fn model_from_json(text: &str) -> Result<GameModel, IoError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let kind = match file.kind.as_str() {
        "ZeroSum" => GameKind::ZeroSum,
        "NonZeroSum" => GameKind::NonZeroSum,
        other => {
            return Err(IoError::BadMatrix(format!(
                "kind must be \"ZeroSum\" or \"NonZeroSum\", got \"{other}\""
            )))
        }
    };
    let dynamics = Dynamics {
        a: family_from_rows(&file.a, "A")?,
        c: family_from_rows(&file.c, "C")?,
        b1: family_from_rows(&file.b1, "B1")?,
        b2: family_from_rows(&file.b2, "B2")?,
        d1: family_from_rows(&file.d1, "D1")?,
        d2: family_from_rows(&file.d2, "D2")?,
    };
    let cost1 = cost_from_file(&file.cost1, file.l, file.n, file.m1, file.m2, "cost1")?;
    let cost2 = match &file.cost2 {
        Some(c) => cost_from_file(c, file.l, file.n, file.m1, file.m2, "cost2")?,
        None => cost1.neg(),
    };
    let inhomogeneity = match &file.inhomogeneity {
        Some(inh) => {
            let vec_family = |data: &Option<Vec<MatrixRows>>, rows: usize, name: &str| match data {
                Some(rowsets) => family_from_rows(rowsets, name),
                None => Ok(zero_family(file.l, rows, 1)),
            };
            let q1 = vec_family(&inh.q1_bar, file.n, "q1Bar")?;
            let q2 = match &inh.q2_bar {
                Some(rowsets) => family_from_rows(rowsets, "q2Bar")?,
                None if kind == GameKind::ZeroSum => q1.neg(),
                None => zero_family(file.l, file.n, 1),
            };
            let r11 = vec_family(&inh.rho1_bar1, file.m1, "rho1Bar1")?;
            let r21 = vec_family(&inh.rho2_bar1, file.m2, "rho2Bar1")?;
            let r12 = match &inh.rho1_bar2 {
                Some(rowsets) => family_from_rows(rowsets, "rho1Bar2")?,
                None if kind == GameKind::ZeroSum => r11.neg(),
                None => zero_family(file.l, file.m1, 1),
            };
            let r22 = match &inh.rho2_bar2 {
                Some(rowsets) => family_from_rows(rowsets, "rho2Bar2")?,
                None if kind == GameKind::ZeroSum => r21.neg(),
                None => zero_family(file.l, file.m2, 1),
            };
            Some(Inhomogeneity {
                lambda: inh.lambda,
                b_bar: vec_family(&inh.b_bar, file.n, "bBar")?,
                sigma_bar: vec_family(&inh.sigma_bar, file.n, "sigmaBar")?,
                q_bar: [q1, q2],
                rho_bar: [[r11, r21], [r12, r22]],
            })
        }
        None => None,
    };
    Ok(GameModel {
        dynamics,
        cost1,
        cost2,
        generator: Generator::new_unchecked(from_rows(&file.generator, "generator")?),
        inhomogeneity,
        kind,
    })
}

pub fn model_to_json(model: &GameModel) -> Value {
    let file = ModelFile {
        n: model.state_dim(),
        m1: model.input_dim1(),
        m2: model.input_dim2(),
        l: model.regime_count(),
        generator: to_rows(model.generator.pi()),
        a: family_to_rows(&model.dynamics.a),
        b1: family_to_rows(&model.dynamics.b1),
        b2: family_to_rows(&model.dynamics.b2),
        c: family_to_rows(&model.dynamics.c),
        d1: family_to_rows(&model.dynamics.d1),
        d2: family_to_rows(&model.dynamics.d2),
        cost1: cost_to_file(&model.cost1),
        cost2: match model.kind {
            GameKind::ZeroSum => None,
            GameKind::NonZeroSum => Some(cost_to_file(&model.cost2)),
        },
        inhomogeneity: model.inhomogeneity.as_ref().map(|inh| InhomogeneityFile {
            lambda: inh.lambda,
            b_bar: Some(family_to_rows(&inh.b_bar)),
            sigma_bar: Some(family_to_rows(&inh.sigma_bar)),
            q1_bar: Some(family_to_rows(&inh.q_bar[0])),
            q2_bar: Some(family_to_rows(&inh.q_bar[1])),
            rho1_bar1: Some(family_to_rows(&inh.rho_bar[0][0])),
            rho2_bar1: Some(family_to_rows(&inh.rho_bar[0][1])),
            rho1_bar2: Some(family_to_rows(&inh.rho_bar[1][0])),
            rho2_bar2: Some(family_to_rows(&inh.rho_bar[1][1])),
        }),
        kind: match model.kind {
            GameKind::ZeroSum => "ZeroSum".into(),
            GameKind::NonZeroSum => "NonZeroSum".into(),
        },
    };
    serde_json::to_value(file).expect("model serializes")
}

#[derive(Serialize, Deserialize)]
struct StrategyFile {
    #[serde(rename = "Theta")]
    theta: Vec<MatrixRows>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nu: Option<OffsetFile>,
}

#[derive(Serialize, Deserialize)]
struct OffsetFile {
    lambda: f64,
    #[serde(rename = "nuBar")]
    nu_bar: Vec<MatrixRows>,
}

pub fn strategy_to_json(strategy: &StrategyPair) -> Value {
    let file = StrategyFile {
        theta: family_to_rows(&strategy.theta),
        nu: strategy.nu.as_ref().map(|off| OffsetFile {
            lambda: off.lambda,
            nu_bar: family_to_rows(&off.nu_bar),
        }),
    };
    serde_json::to_value(file).expect("strategy serializes")
}

/// Parse a strategy document; also accepts a full solution document by
/// looking under its `strategy` key.
pub fn strategy_from_json(text: &str) -> Result<StrategyPair, IoError> {
    let value: Value = serde_json::from_str(text)?;
    let strat_value = if value.get("Theta").is_some() {
        value
    } else if let Some(inner) = value.get("strategy") {
        inner.clone()
    } else {
        return Err(IoError::BadMatrix(
            "no Theta key found (expected a strategy or solution document)".into(),
        ));
    };
    let file: StrategyFile = serde_json::from_value(strat_value)?;
    Ok(StrategyPair {
        theta: family_from_rows(&file.theta, "Theta")?,
        nu: match file.nu {
            Some(off) => Some(DampedOffset {
                lambda: off.lambda,
                nu_bar: family_from_rows(&off.nu_bar, "nuBar")?,
            }),
            None => None,
        },
    })
}

pub fn validation_to_json(report: &ValidationReport) -> Value {
    json!({
        "pass": report.pass(),
        "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
    })
}

fn estimate_to_json(e: &Estimate) -> Value {
    json!({"mean": e.mean, "stdError": e.std_error})
}

pub fn sim_report_to_json(report: &SimReport) -> Value {
    json!({
        "cost1": estimate_to_json(&report.cost[0]),
        "cost2": estimate_to_json(&report.cost[1]),
        "l2Norm": estimate_to_json(&report.l2_norm),
        "tailMass": estimate_to_json(&report.tail_mass),
        "stationarityResidual": report.stationarity_residual,
        "seed": report.seed,
        "paths": report.paths,
        "dt": report.dt,
        "T": report.horizon,
    })
}

pub fn verdict_to_json(v: &StabilityVerdict) -> Value {
    let witness = match &v.witness {
        Witness::PerRegimeMaxEig(w) => json!({"perRegimeMaxEig": w}),
        Witness::SpectralAbscissa(a) => json!({"spectralAbscissa": a}),
    };
    json!({
        "method": match v.method {
            crate::stability::StabilityMethod::Dissipativity => "dissipativity",
            crate::stability::StabilityMethod::LyapunovSpectral => "lyapunovSpectral",
        },
        "stable": v.stable,
        "witness": witness,
    })
}

pub fn stabilizer_to_json(check: &StabilizerCheck) -> Value {
    json!({
        "isStabilizer": check.is_stabilizer(),
        "spectral": verdict_to_json(&check.spectral),
        "dissipativity": verdict_to_json(&check.dissipativity),
    })
}

pub fn residuals_to_json(report: &ResidualReport) -> Value {
    json!({
        "max": report.max,
        "perRegime": report.entries.iter().map(|e| json!({
            "regime": e.regime,
            "equation": e.equation,
            "constraint": e.constraint,
            "range": e.range,
        })).collect::<Vec<_>>(),
    })
}

pub fn solution_to_json(
    solution: &CareSolution,
    residuals: &ResidualReport,
    strategy: Option<&StrategyPair>,
    stabilizer: Option<&StabilizerCheck>,
) -> Value {
    let core = match solution {
        CareSolution::OpenRep(s) => json!({
            "mode": "open-rep",
            "P1": family_to_rows(&s.p1),
            "P2": family_to_rows(&s.p2),
            "Theta": family_to_rows(&s.theta),
            "Sigma": family_to_rows(&s.sigma),
            "sigmaCond": s.sigma_cond,
            "residual": s.residual,
            "iterations": s.iterations,
        }),
        CareSolution::ClosedNash(s) => json!({
            "mode": "closed-nash",
            "P1": family_to_rows(&s.p1),
            "P2": family_to_rows(&s.p2),
            "Theta1": family_to_rows(&s.theta1),
            "Theta2": family_to_rows(&s.theta2),
            "Theta": family_to_rows(&s.theta_full()),
            "residual": s.residual,
            "iterations": s.iterations,
        }),
        CareSolution::ZeroSum(s) => json!({
            "mode": "zero-sum",
            "P": family_to_rows(&s.p),
            "Theta": family_to_rows(&s.theta),
            "residual": s.residual,
            "iterations": s.iterations,
            "signOk": {"n11Psd": s.sign_ok_n11, "n22Nsd": s.sign_ok_n22},
            "rangeOk": s.range_ok,
        }),
    };
    let mut value = core;
    let obj = value.as_object_mut().expect("object");
    obj.insert("residualReport".into(), residuals_to_json(residuals));
    if let Some(s) = strategy {
        obj.insert("strategy".into(), strategy_to_json(s));
    }
    if let Some(check) = stabilizer {
        obj.insert("stabilizer".into(), stabilizer_to_json(check));
    }
    value
}

/// Parse a solution document back into a [`CareSolution`] (for the
/// stationarity certificate; diagnostics like Σ condition numbers are
/// not round-tripped and are reloaded as empty).
pub fn solution_from_json(text: &str) -> Result<CareSolution, IoError> {
    use crate::care::{NonSymCareSolution, SymCareSolution, ZeroSumCareSolution};
    let value: Value = serde_json::from_str(text)?;
    let mode = value
        .get("mode")
        .and_then(Value::as_str)
        .unwrap_or("zero-sum")
        .to_string();
    let family = |key: &str| -> Result<RegimeFamily, IoError> {
        let rows: Vec<MatrixRows> = serde_json::from_value(
            value
                .get(key)
                .cloned()
                .ok_or_else(|| IoError::BadMatrix(format!("missing {key}")))?,
        )?;
        family_from_rows(&rows, key)
    };
    let residual = value
        .get("residual")
        .and_then(Value::as_f64)
        .unwrap_or(f64::NAN);
    let iterations = value
        .get("iterations")
        .and_then(Value::as_u64)
        .unwrap_or(0) as usize;
    Ok(match mode.as_str() {
        "open-rep" => {
            let sigma = family("Sigma")?;
            let sigma_cond = sigma.iter().map(crate::linalg::condition_number).collect();
            CareSolution::OpenRep(NonSymCareSolution {
                p1: family("P1")?,
                p2: family("P2")?,
                theta: family("Theta")?,
                sigma,
                sigma_cond,
                residual,
                iterations,
            })
        }
        "closed-nash" => CareSolution::ClosedNash(SymCareSolution {
            p1: family("P1")?,
            p2: family("P2")?,
            theta1: family("Theta1")?,
            theta2: family("Theta2")?,
            residual,
            iterations,
        }),
        _ => CareSolution::ZeroSum(ZeroSumCareSolution {
            p: family("P")?,
            theta: family("Theta")?,
            residual,
            iterations,
            sign_ok_n11: value
                .pointer("/signOk/n11Psd")
                .and_then(Value::as_bool)
                .unwrap_or(true),
            sign_ok_n22: value
                .pointer("/signOk/n22Nsd")
                .and_then(Value::as_bool)
                .unwrap_or(true),
            range_ok: value
                .get("rangeOk")
                .and_then(Value::as_bool)
                .unwrap_or(true),
        }),
    })
}
