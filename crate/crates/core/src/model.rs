//! Problem-data containers for the two-player regime-switching LQ game,
//! structural validation, and the zero-sum → non-zero-sum embedding.
//!
//! The state equation is
//!
//! ```text
//! dX = [A(α)X + B₁(α)u₁ + B₂(α)u₂ + b(t)]dt
//!    + [C(α)X + D₁(α)u₁ + D₂(α)u₂ + σ(t)]dW,
//! ```
//!
//! and player k pays the indefinite quadratic running cost with blocks
//! (Qᵏ, Sₗᵏ, Rₗₘᵏ) plus linear terms (qᵏ, ρₗᵏ). Every coefficient is a
//! regime-indexed family of matrices — one matrix per state of the
//! modulating chain. No definiteness is assumed anywhere.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::chain::{validate_generator, ChainError, Generator};

/// Absolute tolerance for symmetry of Q, R₁₁, R₂₂ blocks.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("regime family is empty")]
    EmptyFamily,
    #[error("family entry {index} has shape {rows}×{cols}, expected {expected_rows}×{expected_cols}")]
    ShapeMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("model failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// An L-indexed family of identically shaped matrices: one entry per
/// regime of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeFamily {
    entries: Vec<DMatrix<f64>>,
}

impl RegimeFamily {
    pub fn new(entries: Vec<DMatrix<f64>>) -> Result<Self, ModelError> {
        let first = entries.first().ok_or(ModelError::EmptyFamily)?;
        let (r, c) = (first.nrows(), first.ncols());
        for (index, m) in entries.iter().enumerate() {
            if m.nrows() != r || m.ncols() != c {
                return Err(ModelError::ShapeMismatch {
                    index,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    expected_rows: r,
                    expected_cols: c,
                });
            }
        }
        Ok(RegimeFamily { entries })
    }

    /// Family with every entry equal to the given matrix.
    pub fn constant(l: usize, m: DMatrix<f64>) -> Self {
        assert!(l >= 1);
        RegimeFamily {
            entries: vec![m; l],
        }
    }

    pub fn zeros(l: usize, rows: usize, cols: usize) -> Self {
        Self::constant(l, DMatrix::zeros(rows, cols))
    }

    /// Build from per-regime row-major data.
    pub fn from_rows(data: &[&[&[f64]]]) -> Self {
        let entries = data
            .iter()
            .map(|rows| {
                let r = rows.len();
                let c = rows.first().map_or(0, |row| row.len());
                DMatrix::from_fn(r, c, |i, j| rows[i][j])
            })
            .collect();
        RegimeFamily::new(entries).expect("literal family is well-formed")
    }

    pub fn regime_count(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> usize {
        self.entries[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries[0].ncols()
    }

    /// Entry for regime i (0-based).
    pub fn get(&self, i: usize) -> &DMatrix<f64> {
        &self.entries[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.entries.iter()
    }

    pub fn map<F: FnMut(&DMatrix<f64>) -> DMatrix<f64>>(&self, f: F) -> Self {
        RegimeFamily {
            entries: self.entries.iter().map(f).collect(),
        }
    }

    /// Entrywise negation (used by the zero-sum embedding).
    pub fn neg(&self) -> Self {
        self.map(|m| -m)
    }

    /// Largest |difference| over all regimes and entries.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs().max())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude over the family.
    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .map(|m| m.abs().max())
            .fold(0.0, f64::max)
    }

    fn symmetrize(&mut self) {
        for m in &mut self.entries {
            let sym = (&*m + m.transpose()) * 0.5;
            *m = sym;
        }
    }
}

impl std::ops::Index<usize> for RegimeFamily {
    type Output = DMatrix<f64>;
    fn index(&self, i: usize) -> &DMatrix<f64> {
        &self.entries[i]
    }
}

/// State-equation coefficients (A, C drift/diffusion; B_k, D_k input maps).
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics {
    pub a: RegimeFamily,
    pub c: RegimeFamily,
    pub b1: RegimeFamily,
    pub b2: RegimeFamily,
    pub d1: RegimeFamily,
    pub d2: RegimeFamily,
}

impl Dynamics {
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim1(&self) -> usize {
        self.b1.cols()
    }

    pub fn input_dim2(&self) -> usize {
        self.b2.cols()
    }

    /// Combined input dimension m = m₁ + m₂.
    pub fn input_dim(&self) -> usize {
        self.input_dim1() + self.input_dim2()
    }

    pub fn regime_count(&self) -> usize {
        self.a.regime_count()
    }

    /// B(i) = (B₁(i), B₂(i)), n×m.
    pub fn b_full(&self, i: usize) -> DMatrix<f64> {
        concat_cols(&self.b1[i], &self.b2[i])
    }

    /// D(i) = (D₁(i), D₂(i)), n×m.
    pub fn d_full(&self, i: usize) -> DMatrix<f64> {
        concat_cols(&self.d1[i], &self.d2[i])
    }

    /// Closed-loop pair (A + BΘ, C + DΘ) for a full m×n gain family.
    pub fn closed_loop(&self, theta: &RegimeFamily) -> (RegimeFamily, RegimeFamily) {
        let l = self.regime_count();
        let a_cl = RegimeFamily::new(
            (0..l)
                .map(|i| &self.a[i] + self.b_full(i) * &theta[i])
                .collect(),
        )
        .expect("closed-loop family");
        let c_cl = RegimeFamily::new(
            (0..l)
                .map(|i| &self.c[i] + self.d_full(i) * &theta[i])
                .collect(),
        )
        .expect("closed-loop family");
        (a_cl, c_cl)
    }
}

/// Quadratic cost blocks of one player. R₂₁ is never stored; every
/// formula uses R₁₂ᵀ, which enforces R₂₁ = R₁₂ᵀ by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CostBlock {
    pub q: RegimeFamily,
    pub s1: RegimeFamily,
    pub s2: RegimeFamily,
    pub r11: RegimeFamily,
    pub r12: RegimeFamily,
    pub r22: RegimeFamily,
}

impl CostBlock {
    /// All-zero cost of the given dimensions.
    pub fn zeros(l: usize, n: usize, m1: usize, m2: usize) -> Self {
        CostBlock {
            q: RegimeFamily::zeros(l, n, n),
            s1: RegimeFamily::zeros(l, m1, n),
            s2: RegimeFamily::zeros(l, m2, n),
            r11: RegimeFamily::zeros(l, m1, m1),
            r12: RegimeFamily::zeros(l, m1, m2),
            r22: RegimeFamily::zeros(l, m2, m2),
        }
    }

    /// S(i) = (S₁(i); S₂(i)), m×n.
    pub fn s_full(&self, i: usize) -> DMatrix<f64> {
        concat_rows(&self.s1[i], &self.s2[i])
    }

    /// R(i) = [[R₁₁, R₁₂], [R₁₂ᵀ, R₂₂]], m×m.
    pub fn r_full(&self, i: usize) -> DMatrix<f64> {
        let m1 = self.r11.rows();
        let m2 = self.r22.rows();
        let mut r = DMatrix::zeros(m1 + m2, m1 + m2);
        r.view_mut((0, 0), (m1, m1)).copy_from(&self.r11[i]);
        r.view_mut((0, m1), (m1, m2)).copy_from(&self.r12[i]);
        r.view_mut((m1, 0), (m2, m1))
            .copy_from(&self.r12[i].transpose());
        r.view_mut((m1, m1), (m2, m2)).copy_from(&self.r22[i]);
        r
    }

    /// Blockwise negation.
    pub fn neg(&self) -> Self {
        CostBlock {
            q: self.q.neg(),
            s1: self.s1.neg(),
            s2: self.s2.neg(),
            r11: self.r11.neg(),
            r12: self.r12.neg(),
            r22: self.r22.neg(),
        }
    }

    fn symmetrize(&mut self) {
        self.q.symmetrize();
        self.r11.symmetrize();
        self.r22.symmetrize();
    }
}

/// Exponentially damped, regime-modulated inhomogeneity:
/// b(t) = e^{−λt} b̄(α_t), and likewise σ, qᵏ, ρₗᵏ.
///
/// λ > 0 keeps every term in L² over the infinite horizon; this is the
/// largest inhomogeneity class for which the offset BSDEs collapse to a
/// finite linear system.
#[derive(Clone, Debug, PartialEq)]
pub struct Inhomogeneity {
    pub lambda: f64,
    /// b̄: n×1 per regime.
    pub b_bar: RegimeFamily,
    /// σ̄: n×1 per regime.
    pub sigma_bar: RegimeFamily,
    /// q̄ᵏ: n×1 per regime, k = 1, 2.
    pub q_bar: [RegimeFamily; 2],
    /// ρ̄ₗᵏ: rho_bar[k-1][l-1], shape m_l×1 per regime.
    pub rho_bar: [[RegimeFamily; 2]; 2],
}

impl Inhomogeneity {
    /// All-zero bars with the given damping rate.
    pub fn zero(lambda: f64, l: usize, n: usize, m1: usize, m2: usize) -> Self {
        Inhomogeneity {
            lambda,
            b_bar: RegimeFamily::zeros(l, n, 1),
            sigma_bar: RegimeFamily::zeros(l, n, 1),
            q_bar: [RegimeFamily::zeros(l, n, 1), RegimeFamily::zeros(l, n, 1)],
            rho_bar: [
                [RegimeFamily::zeros(l, m1, 1), RegimeFamily::zeros(l, m2, 1)],
                [RegimeFamily::zeros(l, m1, 1), RegimeFamily::zeros(l, m2, 1)],
            ],
        }
    }

    /// ρ̄ᵏ(i) = (ρ̄₁ᵏ(i); ρ̄₂ᵏ(i)), m×1 (player index 1-based).
    pub fn rho_full(&self, k: usize, i: usize) -> DVector<f64> {
        let top = &self.rho_bar[k - 1][0][i];
        let bot = &self.rho_bar[k - 1][1][i];
        DVector::from_iterator(
            top.nrows() + bot.nrows(),
            top.iter().chain(bot.iter()).copied(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameKind {
    NonZeroSum,
    ZeroSum,
}

/// Full two-player problem data.
#[derive(Clone, Debug, PartialEq)]
pub struct GameModel {
    pub dynamics: Dynamics,
    pub cost1: CostBlock,
    pub cost2: CostBlock,
    pub generator: Generator,
    pub inhomogeneity: Option<Inhomogeneity>,
    pub kind: GameKind,
}

impl GameModel {
    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn input_dim1(&self) -> usize {
        self.dynamics.input_dim1()
    }

    pub fn input_dim2(&self) -> usize {
        self.dynamics.input_dim2()
    }

    pub fn input_dim(&self) -> usize {
        self.dynamics.input_dim()
    }

    pub fn regime_count(&self) -> usize {
        self.generator.regime_count()
    }

    pub fn cost(&self, k: usize) -> &CostBlock {
        match k {
            1 => &self.cost1,
            2 => &self.cost2,
            _ => panic!("player index must be 1 or 2"),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        match &self.inhomogeneity {
            None => true,
            Some(inh) => {
                inh.b_bar.max_abs() == 0.0
                    && inh.sigma_bar.max_abs() == 0.0
                    && inh.q_bar.iter().all(|f| f.max_abs() == 0.0)
                    && inh
                        .rho_bar
                        .iter()
                        .all(|per_k| per_k.iter().all(|f| f.max_abs() == 0.0))
            }
        }
    }

    /// Validate and, on success, symmetrize the symmetric blocks so
    /// rounding drift in the inputs cannot leak into the eigen-solvers.
    pub fn validated(mut self) -> Result<Self, ModelError> {
        let report = validate(&self);
        if !report.pass() {
            return Err(ModelError::Invalid(report));
        }
        self.cost1.symmetrize();
        self.cost2.symmetrize();
        Ok(self)
    }

    /// Reinterpret a zero-sum model as an ordinary non-zero-sum game
    /// (cost2 is already the negation of cost1, so only the kind flips).
    pub fn as_non_zero_sum(&self) -> GameModel {
        let mut m = self.clone();
        m.kind = GameKind::NonZeroSum;
        m
    }

    /// Lift a player gain (m_k×n) to the full m×n gain with the other
    /// player's block zero.
    pub fn player_gain_to_full(&self, k: usize, theta_k: &RegimeFamily) -> RegimeFamily {
        let (m1, m2, n) = (self.input_dim1(), self.input_dim2(), self.state_dim());
        let l = self.regime_count();
        assert_eq!(theta_k.cols(), n);
        let mut entries = Vec::with_capacity(l);
        for i in 0..l {
            let mut full = DMatrix::zeros(m1 + m2, n);
            match k {
                1 => full.view_mut((0, 0), (m1, n)).copy_from(&theta_k[i]),
                2 => full.view_mut((m1, 0), (m2, n)).copy_from(&theta_k[i]),
                _ => panic!("player index must be 1 or 2"),
            }
            entries.push(full);
        }
        RegimeFamily::new(entries).expect("lifted gain family")
    }
}

/// One structural defect found by [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Shape {
        what: String,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    RegimeCount {
        what: String,
        got: usize,
        expected: usize,
    },
    Asymmetry {
        what: String,
        regime: usize,
        max_dev: f64,
    },
    Generator(String),
    NonPositiveLambda(f64),
    ZeroSumMismatch {
        what: String,
        max_dev: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Shape {
                what,
                rows,
                cols,
                expected_rows,
                expected_cols,
            } => write!(
                f,
                "{what}: shape {rows}×{cols}, expected {expected_rows}×{expected_cols}"
            ),
            Violation::RegimeCount {
                what,
                got,
                expected,
            } => write!(f, "{what}: {got} regimes, expected {expected}"),
            Violation::Asymmetry {
                what,
                regime,
                max_dev,
            } => write!(
                f,
                "{what}({regime}) asymmetric: max |M - Mᵀ| = {max_dev:.3e} > {SYMMETRY_TOL:.0e}"
            ),
            Violation::Generator(msg) => write!(f, "generator: {msg}"),
            Violation::NonPositiveLambda(l) => {
                write!(f, "inhomogeneity damping rate λ = {l} must be positive")
            }
            Violation::ZeroSumMismatch { what, max_dev } => write!(
                f,
                "zero-sum model: {what} differs from -cost1 counterpart by {max_dev:.3e}"
            ),
        }
    }
}

/// Report-style validation output; never an error.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.pass() {
            write!(f, "pass")
        } else {
            for v in &self.violations {
                writeln!(f, "- {v}")?;
            }
            Ok(())
        }
    }
}

/// Check every structural invariant of a model: family shapes against
/// (n, m₁, m₂, L), symmetry of Q/R₁₁/R₂₂ to 1e-12, generator row sums and
/// off-diagonal signs, λ > 0, and exact cost antisymmetry for zero-sum
/// models. Pure; never mutates.
pub fn validate(model: &GameModel) -> ValidationReport {
    let mut violations = Vec::new();
    let n = model.dynamics.a.rows();
    let m1 = model.dynamics.b1.cols();
    let m2 = model.dynamics.b2.cols();
    let l = model.generator.regime_count();

    fn check_shape(
        violations: &mut Vec<Violation>,
        l: usize,
        what: &str,
        fam: &RegimeFamily,
        rows: usize,
        cols: usize,
    ) {
        if fam.regime_count() != l {
            violations.push(Violation::RegimeCount {
                what: what.to_string(),
                got: fam.regime_count(),
                expected: l,
            });
        }
        if fam.rows() != rows || fam.cols() != cols {
            violations.push(Violation::Shape {
                what: what.to_string(),
                rows: fam.rows(),
                cols: fam.cols(),
                expected_rows: rows,
                expected_cols: cols,
            });
        }
    }

    check_shape(&mut violations, l, "A", &model.dynamics.a, n, n);
    check_shape(&mut violations, l, "C", &model.dynamics.c, n, n);
    check_shape(&mut violations, l, "B1", &model.dynamics.b1, n, m1);
    check_shape(&mut violations, l, "B2", &model.dynamics.b2, n, m2);
    check_shape(&mut violations, l, "D1", &model.dynamics.d1, n, m1);
    check_shape(&mut violations, l, "D2", &model.dynamics.d2, n, m2);

    for (k, cost) in [(1, &model.cost1), (2, &model.cost2)] {
        check_shape(&mut violations, l, &format!("Q^{k}"), &cost.q, n, n);
        check_shape(&mut violations, l, &format!("S1^{k}"), &cost.s1, m1, n);
        check_shape(&mut violations, l, &format!("S2^{k}"), &cost.s2, m2, n);
        check_shape(&mut violations, l, &format!("R11^{k}"), &cost.r11, m1, m1);
        check_shape(&mut violations, l, &format!("R12^{k}"), &cost.r12, m1, m2);
        check_shape(&mut violations, l, &format!("R22^{k}"), &cost.r22, m2, m2);
    }

    for (k, cost) in [(1, &model.cost1), (2, &model.cost2)] {
        for (name, fam) in [
            (format!("Q^{k}"), &cost.q),
            (format!("R11^{k}"), &cost.r11),
            (format!("R22^{k}"), &cost.r22),
        ] {
            for (i, m) in fam.iter().enumerate() {
                if m.nrows() != m.ncols() {
                    continue; // already reported as a shape violation
                }
                let dev = (m - m.transpose()).abs().max();
                if dev > SYMMETRY_TOL {
                    violations.push(Violation::Asymmetry {
                        what: name.clone(),
                        regime: i + 1,
                        max_dev: dev,
                    });
                }
            }
        }
    }

    if let Err(e) = validate_generator(model.generator.pi().clone()) {
        violations.push(Violation::Generator(e.to_string()));
    }

    if let Some(inh) = &model.inhomogeneity {
        if inh.lambda.is_nan() || inh.lambda <= 0.0 {
            violations.push(Violation::NonPositiveLambda(inh.lambda));
        }
        check_shape(&mut violations, l, "bBar", &inh.b_bar, n, 1);
        check_shape(&mut violations, l, "sigmaBar", &inh.sigma_bar, n, 1);
        check_shape(&mut violations, l, "q1Bar", &inh.q_bar[0], n, 1);
        check_shape(&mut violations, l, "q2Bar", &inh.q_bar[1], n, 1);
        check_shape(&mut violations, l, "rho1Bar1", &inh.rho_bar[0][0], m1, 1);
        check_shape(&mut violations, l, "rho2Bar1", &inh.rho_bar[0][1], m2, 1);
        check_shape(&mut violations, l, "rho1Bar2", &inh.rho_bar[1][0], m1, 1);
        check_shape(&mut violations, l, "rho2Bar2", &inh.rho_bar[1][1], m2, 1);
    }

    if model.kind == GameKind::ZeroSum {
        let neg = model.cost1.neg();
        for (what, got, want) in [
            ("Q^2", &model.cost2.q, &neg.q),
            ("S1^2", &model.cost2.s1, &neg.s1),
            ("S2^2", &model.cost2.s2, &neg.s2),
            ("R11^2", &model.cost2.r11, &neg.r11),
            ("R12^2", &model.cost2.r12, &neg.r12),
            ("R22^2", &model.cost2.r22, &neg.r22),
        ] {
            if got.regime_count() == want.regime_count()
                && got.rows() == want.rows()
                && got.cols() == want.cols()
            {
                let dev = got.max_abs_diff(want);
                if dev > 0.0 {
                    violations.push(Violation::ZeroSumMismatch {
                        what: what.to_string(),
                        max_dev: dev,
                    });
                }
            }
        }
        if let Some(inh) = &model.inhomogeneity {
            let dev_q = inh.q_bar[1].max_abs_diff(&inh.q_bar[0].neg());
            let dev_rho = inh.rho_bar[1][0]
                .max_abs_diff(&inh.rho_bar[0][0].neg())
                .max(inh.rho_bar[1][1].max_abs_diff(&inh.rho_bar[0][1].neg()));
            if dev_q > 0.0 || dev_rho > 0.0 {
                violations.push(Violation::ZeroSumMismatch {
                    what: "qBar/rhoBar".to_string(),
                    max_dev: dev_q.max(dev_rho),
                });
            }
        }
    }

    ValidationReport { violations }
}

/// Zero-sum inhomogeneity data: the single (q̄, ρ̄) of the performance
/// functional; the embedding produces player 2's blocks by negation.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSumBars {
    pub lambda: f64,
    pub b_bar: RegimeFamily,
    pub sigma_bar: RegimeFamily,
    pub q_bar: RegimeFamily,
    pub rho1_bar: RegimeFamily,
    pub rho2_bar: RegimeFamily,
}

/// Build a zero-sum model from one set of cost data: cost1 takes the data
/// as given, cost2 is its exact blockwise negation.
pub fn embed_zero_sum(
    dynamics: Dynamics,
    generator: Generator,
    cost: CostBlock,
    bars: Option<ZeroSumBars>,
) -> Result<GameModel, ModelError> {
    let cost2 = cost.neg();
    let inhomogeneity = bars.map(|b| Inhomogeneity {
        lambda: b.lambda,
        b_bar: b.b_bar,
        sigma_bar: b.sigma_bar,
        q_bar: [b.q_bar.clone(), b.q_bar.neg()],
        rho_bar: [
            [b.rho1_bar.clone(), b.rho2_bar.clone()],
            [b.rho1_bar.neg(), b.rho2_bar.neg()],
        ],
    });
    GameModel {
        dynamics,
        cost1: cost,
        cost2,
        generator,
        inhomogeneity,
        kind: GameKind::ZeroSum,
    }
    .validated()
}

fn concat_cols(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((0, a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    out
}

fn concat_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    debug_assert_eq!(a.ncols(), b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), 0), (b.nrows(), b.ncols()))
        .copy_from(b);
    out
}

/// Stack two player gains (m₁×n over m₂×n) into the full m×n gain.
pub fn stack_gains(theta1: &RegimeFamily, theta2: &RegimeFamily) -> RegimeFamily {
    let entries = theta1
        .iter()
        .zip(theta2.iter())
        .map(|(t1, t2)| concat_rows(t1, t2))
        .collect();
    RegimeFamily::new(entries).expect("stacked gain family")
}
