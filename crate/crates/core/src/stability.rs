//! L²-stability tests for regime-switching linear systems, stabilizer
//! certificates, and the convexity / convexity–concavity sufficient
//! conditions on the cost functionals.
//!
//! Two stability tests are provided and both verdicts are always
//! reported:
//!
//! * a per-regime dissipativity condition, A(i) + A(i)ᵀ + C(i)ᵀC(i) < 0,
//!   which is sufficient and cheap to display;
//! * the exact spectral test on the coupled Lyapunov operator
//!   ℒ : (P(i)) ↦ (A(i)ᵀP(i) + P(i)A(i) + C(i)ᵀP(i)C(i) + Σⱼ π_ij P(j)),
//!   assembled as an L·n² matrix by vectorization — the system is
//!   L²-stable iff the spectral abscissa of ℒ is negative.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::chain::Generator;
use crate::linalg::{kron, max_eig_sym, min_eig_sym, spectral_abscissa};
use crate::model::{Dynamics, GameKind, GameModel, RegimeFamily};

/// Numerical margin for every strict "< 0" / "⪰ 0" verdict.
pub const STRICT_MARGIN: f64 = 1e-10;

/// Guard on the vectorized operator size L·n².
pub const MAX_OPERATOR_DIM: usize = 4096;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("coupled Lyapunov operator dimension L·n² = {dim} exceeds {MAX_OPERATOR_DIM}")]
    DimensionOverflow { dim: usize },
    #[error("gain family has shape {rows}×{cols}, expected {expected_rows}×{expected_cols}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("out of scope: {0}")]
    OutOfScope(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityMethod {
    Dissipativity,
    LyapunovSpectral,
}

/// Evidence behind a verdict: the per-regime maxima of the dissipativity
/// matrices, or the spectral abscissa of the coupled operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    PerRegimeMaxEig(Vec<f64>),
    SpectralAbscissa(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub method: StabilityMethod,
    pub stable: bool,
    pub witness: Witness,
}

/// Sufficient dissipativity test: stable iff
/// max eig(A(i) + A(i)ᵀ + C(i)ᵀC(i)) < −margin for every regime.
pub fn dissipativity_check(a: &RegimeFamily, c: &RegimeFamily) -> StabilityVerdict {
    let maxima: Vec<f64> = a
        .iter()
        .zip(c.iter())
        .map(|(ai, ci)| max_eig_sym(&(ai + ai.transpose() + ci.transpose() * ci)))
        .collect();
    let stable = maxima.iter().all(|&m| m < -STRICT_MARGIN);
    StabilityVerdict {
        method: StabilityMethod::Dissipativity,
        stable,
        witness: Witness::PerRegimeMaxEig(maxima),
    }
}

/// Assemble the vectorized coupled Lyapunov operator of ([A, C], Π).
fn lyapunov_operator_matrix(
    a: &RegimeFamily,
    c: &RegimeFamily,
    gen: &Generator,
) -> Result<DMatrix<f64>, StabilityError> {
    let n = a.rows();
    let l = gen.regime_count();
    let dim = l * n * n;
    if dim > MAX_OPERATOR_DIM {
        return Err(StabilityError::DimensionOverflow { dim });
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let mut op = DMatrix::zeros(dim, dim);
    for i in 0..l {
        let ai = &a[i];
        let ci = &c[i];
        // vec(AᵀP + PA + CᵀPC) = (I⊗Aᵀ + Aᵀ⊗I + Cᵀ⊗Cᵀ) vec(P)
        let diag = kron(&eye, &ai.transpose())
            + kron(&ai.transpose(), &eye)
            + kron(&ci.transpose(), &ci.transpose());
        for j in 0..l {
            let mut block = op.view_mut((i * n * n, j * n * n), (n * n, n * n));
            if i == j {
                block.copy_from(&(&diag + &eye.kronecker(&eye) * gen.rate(i, i)));
            } else {
                block.copy_from(&(DMatrix::identity(n * n, n * n) * gen.rate(i, j)));
            }
        }
    }
    Ok(op)
}

/// Exact L²-stability test via the spectral abscissa of the coupled
/// Lyapunov operator.
pub fn lyapunov_spectral_check(
    a: &RegimeFamily,
    c: &RegimeFamily,
    gen: &Generator,
) -> Result<StabilityVerdict, StabilityError> {
    let op = lyapunov_operator_matrix(a, c, gen)?;
    let abscissa = spectral_abscissa(&op);
    Ok(StabilityVerdict {
        method: StabilityMethod::LyapunovSpectral,
        stable: abscissa < -STRICT_MARGIN,
        witness: Witness::SpectralAbscissa(abscissa),
    })
}

/// Both verdicts for the closed loop (A + BΘ, C + DΘ).
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerCheck {
    pub spectral: StabilityVerdict,
    pub dissipativity: StabilityVerdict,
}

impl StabilizerCheck {
    /// A gain family is a stabilizer iff the exact spectral test passes.
    pub fn is_stabilizer(&self) -> bool {
        self.spectral.stable
    }
}

/// Test whether a full m×n gain family Θ stabilizes the system: applies
/// the spectral test to (A + BΘ, C + DΘ) and reports the dissipativity
/// witness alongside.
pub fn is_stabilizer(
    dynamics: &Dynamics,
    gen: &Generator,
    theta: &RegimeFamily,
) -> Result<StabilizerCheck, StabilityError> {
    let (m, n) = (dynamics.input_dim(), dynamics.state_dim());
    if theta.rows() != m || theta.cols() != n {
        return Err(StabilityError::ShapeMismatch {
            rows: theta.rows(),
            cols: theta.cols(),
            expected_rows: m,
            expected_cols: n,
        });
    }
    let (a_cl, c_cl) = dynamics.closed_loop(theta);
    Ok(StabilizerCheck {
        spectral: lyapunov_spectral_check(&a_cl, &c_cl, gen)?,
        dissipativity: dissipativity_check(&a_cl, &c_cl),
    })
}

/// Per-player outcome of the convexity sufficient condition
/// [[Qᵏ, S_kᵏᵀ], [S_kᵏ, R_kkᵏ]] ⪰ 0 for all regimes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub player1: bool,
    pub player2: bool,
    /// Per-regime minimum eigenvalues of each player's block matrix.
    pub min_eigs: [Vec<f64>; 2],
}

pub fn check_convexity_sufficient(model: &GameModel) -> ConvexityReport {
    let mut min_eigs = [Vec::new(), Vec::new()];
    for (idx, k) in [1usize, 2usize].into_iter().enumerate() {
        let cost = model.cost(k);
        let (s_k, r_kk) = match k {
            1 => (&cost.s1, &cost.r11),
            _ => (&cost.s2, &cost.r22),
        };
        for i in 0..model.regime_count() {
            let n = model.state_dim();
            let mk = s_k.rows();
            let mut block = DMatrix::zeros(n + mk, n + mk);
            block.view_mut((0, 0), (n, n)).copy_from(&cost.q[i]);
            block
                .view_mut((n, 0), (mk, n))
                .copy_from(&s_k[i]);
            block
                .view_mut((0, n), (n, mk))
                .copy_from(&s_k[i].transpose());
            block.view_mut((n, n), (mk, mk)).copy_from(&r_kk[i]);
            min_eigs[idx].push(min_eig_sym(&block));
        }
    }
    ConvexityReport {
        player1: min_eigs[0].iter().all(|&e| e >= -STRICT_MARGIN),
        player2: min_eigs[1].iter().all(|&e| e >= -STRICT_MARGIN),
        min_eigs,
    }
}

/// Diagnostics of the eigenvalue sufficient condition for
/// convexity–concavity of the zero-sum performance functional.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityConcavity {
    pub ok: bool,
    /// Extreme eigenvalues of the state weight across regimes.
    pub min_q: f64,
    pub max_q: f64,
    /// Smallest eigenvalue of R₁₁ / largest of R₂₂ across regimes.
    pub min_r11: f64,
    pub max_r22: f64,
    /// M(ε_k) = max eig(A + Aᵀ + CᵀC + ε_k I) across regimes.
    pub m_eps1: f64,
    pub m_eps2: f64,
    /// μ_k(ε_k) = max eig((1/ε_k)(B_k + CᵀD_k)ᵀ(B_k + CᵀD_k) + D_kᵀD_k).
    pub mu1: f64,
    pub mu2: f64,
}

fn rate_bound(model: &GameModel, eps: f64) -> f64 {
    let dynp = &model.dynamics;
    (0..model.regime_count())
        .map(|i| {
            let a = &dynp.a[i];
            let c = &dynp.c[i];
            let m = a + a.transpose() + c.transpose() * c
                + DMatrix::identity(a.nrows(), a.nrows()) * eps;
            max_eig_sym(&m)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn gain_bound(model: &GameModel, k: usize, eps: f64) -> f64 {
    let dynp = &model.dynamics;
    let (bk, dk) = match k {
        1 => (&dynp.b1, &dynp.d1),
        _ => (&dynp.b2, &dynp.d2),
    };
    (0..model.regime_count())
        .map(|i| {
            let g = &bk[i] + dynp.c[i].transpose() * &dk[i];
            let m = g.transpose() * &g / eps + dk[i].transpose() * &dk[i];
            max_eig_sym(&m)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluate the convexity–concavity sufficient condition at the given
/// (ε₁, ε₂). Requires a zero-sum model with S₁ = S₂ = 0, R₁₂ = 0 and
/// min eig Q < 0 < max eig Q (other sign patterns are out of scope).
pub fn check_convexity_concavity(
    model: &GameModel,
    eps1: f64,
    eps2: f64,
) -> Result<ConvexityConcavity, StabilityError> {
    if model.kind != GameKind::ZeroSum {
        return Err(StabilityError::PreconditionViolated(
            "model must be zero-sum".into(),
        ));
    }
    if !(eps1 > 0.0 && eps2 > 0.0) {
        return Err(StabilityError::PreconditionViolated(
            "ε₁ and ε₂ must be positive".into(),
        ));
    }
    let cost = &model.cost1;
    if cost.s1.max_abs() > 0.0 || cost.s2.max_abs() > 0.0 || cost.r12.max_abs() > 0.0 {
        return Err(StabilityError::PreconditionViolated(
            "requires S₁ = S₂ = 0 and R₁₂ = 0".into(),
        ));
    }
    let min_q = cost
        .q
        .iter()
        .map(min_eig_sym)
        .fold(f64::INFINITY, f64::min);
    let max_q = cost
        .q
        .iter()
        .map(max_eig_sym)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(min_q < 0.0 && max_q > 0.0) {
        return Err(StabilityError::OutOfScope(format!(
            "condition requires min eig Q < 0 < max eig Q, got [{min_q:.6}, {max_q:.6}]"
        )));
    }
    let min_r11 = cost
        .r11
        .iter()
        .map(min_eig_sym)
        .fold(f64::INFINITY, f64::min);
    let max_r22 = cost
        .r22
        .iter()
        .map(max_eig_sym)
        .fold(f64::NEG_INFINITY, f64::max);
    let m_eps1 = rate_bound(model, eps1);
    let m_eps2 = rate_bound(model, eps2);
    let mu1 = gain_bound(model, 1, eps1);
    let mu2 = gain_bound(model, 2, eps2);
    let convex = m_eps1 < -STRICT_MARGIN && min_r11 - mu1 * min_q / m_eps1 >= -STRICT_MARGIN;
    let concave = m_eps2 < -STRICT_MARGIN && max_r22 - mu2 * max_q / m_eps2 <= STRICT_MARGIN;
    Ok(ConvexityConcavity {
        ok: convex && concave,
        min_q,
        max_q,
        min_r11,
        max_r22,
        m_eps1,
        m_eps2,
        mu1,
        mu2,
    })
}

/// Logarithmic grid search for an (ε₁, ε₂) pair satisfying the
/// convexity–concavity condition: ε ∈ [1e-3, 1e3], 25 points per decade.
/// The two inequalities are independent, so each ε is found separately;
/// returns the first working pair or `None`.
pub fn search_epsilon(model: &GameModel) -> Result<Option<(f64, f64)>, StabilityError> {
    // Probe once to propagate precondition/scope errors.
    let probe = check_convexity_concavity(model, 1.0, 1.0)?;
    let grid: Vec<f64> = (0..=150)
        .map(|k| 10f64.powf(-3.0 + k as f64 / 25.0))
        .collect();
    let mut eps1 = None;
    let mut eps2 = None;
    for &eps in &grid {
        if eps1.is_none() {
            let m = rate_bound(model, eps);
            if m < -STRICT_MARGIN
                && probe.min_r11 - gain_bound(model, 1, eps) * probe.min_q / m >= -STRICT_MARGIN
            {
                eps1 = Some(eps);
            }
        }
        if eps2.is_none() {
            let m = rate_bound(model, eps);
            if m < -STRICT_MARGIN
                && probe.max_r22 - gain_bound(model, 2, eps) * probe.max_q / m <= STRICT_MARGIN
            {
                eps2 = Some(eps);
            }
        }
        if eps1.is_some() && eps2.is_some() {
            break;
        }
    }
    Ok(eps1.zip(eps2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{example_generator, example_model};
    use crate::chain::validate_generator;
    use crate::rng::{derive_key, Stream};

    fn scalar_family(values: &[f64]) -> RegimeFamily {
        RegimeFamily::new(
            values
                .iter()
                .map(|&v| DMatrix::from_element(1, 1, v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn base_system_is_dissipative() {
        let model = example_model(1);
        let verdict = dissipativity_check(&model.dynamics.a, &model.dynamics.c);
        assert!(verdict.stable, "witness {:?}", verdict.witness);
    }

    #[test]
    fn scalar_unstable_witness() {
        let a = scalar_family(&[1.0]);
        let c = scalar_family(&[0.0]);
        let verdict = dissipativity_check(&a, &c);
        assert!(!verdict.stable);
        match verdict.witness {
            Witness::PerRegimeMaxEig(ref w) => assert!((w[0] - 2.0).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn contraction_with_unit_diffusion_is_dissipative() {
        // A = −I, C = I: A + Aᵀ + CᵀC = −I < 0.
        let a = RegimeFamily::constant(1, -DMatrix::identity(2, 2));
        let c = RegimeFamily::constant(1, DMatrix::identity(2, 2));
        assert!(dissipativity_check(&a, &c).stable);
    }

    #[test]
    fn scalar_single_regime_spectral_threshold() {
        // Stable iff 2a + c² < 0.
        let gen = validate_generator(DMatrix::from_row_slice(1, 1, &[0.0])).unwrap();
        let verdict =
            lyapunov_spectral_check(&scalar_family(&[-1.0]), &scalar_family(&[1.0]), &gen)
                .unwrap();
        assert!(verdict.stable);
        match verdict.witness {
            Witness::SpectralAbscissa(w) => assert!((w + 1.0).abs() < 1e-10),
            _ => unreachable!(),
        }
        let verdict =
            lyapunov_spectral_check(&scalar_family(&[-0.4]), &scalar_family(&[1.0]), &gen)
                .unwrap();
        assert!(!verdict.stable); // 2a + c² = 0.2 > 0
    }

    #[test]
    fn fast_switching_averages_unstable_regime() {
        // a = (−1, 0.4), c = 0, symmetric rate 10: operator matrix
        // [[−12, 10], [10, −9.2]] has spectral abscissa ≈ −0.5 < 0.
        let gen =
            validate_generator(DMatrix::from_row_slice(2, 2, &[-10.0, 10.0, 10.0, -10.0]))
                .unwrap();
        let verdict = lyapunov_spectral_check(
            &scalar_family(&[-1.0, 0.4]),
            &scalar_family(&[0.0, 0.0]),
            &gen,
        )
        .unwrap();
        assert!(verdict.stable);
        match verdict.witness {
            Witness::SpectralAbscissa(w) => {
                let expected = (-21.2 + (21.2f64 * 21.2 - 4.0 * (12.0 * 9.2 - 100.0)).sqrt()) / 2.0;
                assert!((w - expected).abs() < 1e-9, "abscissa {w} vs {expected}");
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn base_system_spectral_consistent_with_dissipativity() {
        let model = example_model(1);
        let verdict = lyapunov_spectral_check(
            &model.dynamics.a,
            &model.dynamics.c,
            &model.generator,
        )
        .unwrap();
        assert!(verdict.stable);
    }

    #[test]
    fn dimension_guard_fires() {
        let n = 20;
        let a = RegimeFamily::constant(11, -DMatrix::identity(n, n));
        let c = RegimeFamily::zeros(11, n, n);
        let pi = DMatrix::zeros(11, 11);
        let gen = Generator::new_unchecked(pi);
        assert!(matches!(
            lyapunov_spectral_check(&a, &c, &gen),
            Err(StabilityError::DimensionOverflow { dim: 4400 })
        ));
    }

    #[test]
    fn zero_gain_stabilizes_stable_base() {
        let model = example_model(1);
        let theta = RegimeFamily::zeros(3, 4, 2);
        let check = is_stabilizer(&model.dynamics, &model.generator, &theta).unwrap();
        assert!(check.is_stabilizer());
        assert!(check.dissipativity.stable);
    }

    #[test]
    fn uncontrollable_unstable_scalar_never_stabilized() {
        let dynamics = Dynamics {
            a: scalar_family(&[1.0]),
            c: scalar_family(&[0.0]),
            b1: scalar_family(&[0.0]),
            b2: scalar_family(&[0.0]),
            d1: scalar_family(&[0.0]),
            d2: scalar_family(&[0.0]),
        };
        let gen = validate_generator(DMatrix::from_row_slice(1, 1, &[0.0])).unwrap();
        let theta = RegimeFamily::zeros(1, 2, 1);
        let check = is_stabilizer(&dynamics, &gen, &theta).unwrap();
        assert!(!check.is_stabilizer());
    }

    #[test]
    fn stabilizer_shape_mismatch_rejected() {
        let model = example_model(1);
        let theta = RegimeFamily::zeros(3, 2, 2); // needs 4×2
        assert!(matches!(
            is_stabilizer(&model.dynamics, &model.generator, &theta),
            Err(StabilityError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn example1_satisfies_convexity_condition() {
        let report = check_convexity_sufficient(&example_model(1));
        assert!(report.player1 && report.player2, "{:?}", report.min_eigs);
    }

    #[test]
    fn negative_q_breaks_player1_convexity() {
        let mut model = example_model(1);
        model.cost1.q = model.cost1.q.map(|_| -DMatrix::identity(2, 2));
        let report = check_convexity_sufficient(&model);
        assert!(!report.player1);
    }

    #[test]
    fn zero_cost_is_weakly_convex() {
        let mut model = example_model(1);
        model.cost1 = crate::model::CostBlock::zeros(3, 2, 2, 2);
        model.cost2 = crate::model::CostBlock::zeros(3, 2, 2, 2);
        let report = check_convexity_sufficient(&model);
        assert!(report.player1 && report.player2);
    }

    #[test]
    fn example3_passes_convexity_concavity_at_unit_eps() {
        let report = check_convexity_concavity(&example_model(3), 1.0, 1.0).unwrap();
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn example2_fails_convexity_concavity_at_unit_eps() {
        let report = check_convexity_concavity(&example_model(2), 1.0, 1.0).unwrap();
        assert!(!report.ok, "{report:?}");
    }

    #[test]
    fn nonzero_r12_violates_precondition() {
        let mut model = example_model(2);
        model.cost1.r12 = RegimeFamily::constant(3, DMatrix::from_element(2, 2, 0.1));
        model.cost2.r12 = model.cost1.r12.neg();
        assert!(matches!(
            check_convexity_concavity(&model, 1.0, 1.0),
            Err(StabilityError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn zero_q_is_out_of_scope() {
        let mut model = example_model(2);
        model.cost1.q = RegimeFamily::zeros(3, 2, 2);
        model.cost2.q = RegimeFamily::zeros(3, 2, 2);
        assert!(matches!(
            check_convexity_concavity(&model, 1.0, 1.0),
            Err(StabilityError::OutOfScope(_))
        ));
        assert!(matches!(
            search_epsilon(&model),
            Err(StabilityError::OutOfScope(_))
        ));
    }

    #[test]
    fn epsilon_search_finds_pair_for_example3_only() {
        let found = search_epsilon(&example_model(3)).unwrap();
        let (e1, e2) = found.expect("example 3 admits an epsilon pair");
        let report = check_convexity_concavity(&example_model(3), e1, e2).unwrap();
        assert!(report.ok);
        assert!(search_epsilon(&example_model(2)).unwrap().is_none());
    }

    #[test]
    fn convexity_concavity_monotone_in_r11() {
        // Increasing R₁₁ by tI can only help the convex side.
        let model = example_model(3);
        let base = check_convexity_concavity(&model, 1.0, 1.0).unwrap();
        assert!(base.ok);
        let mut bumped = model.clone();
        bumped.cost1.r11 = bumped.cost1.r11.map(|m| m + DMatrix::identity(2, 2) * 2.0);
        bumped.cost2.r11 = bumped.cost1.r11.neg();
        let after = check_convexity_concavity(&bumped, 1.0, 1.0).unwrap();
        assert!(after.ok);
        assert!(after.min_r11 >= base.min_r11);
    }

    #[test]
    fn dissipativity_implies_spectral_on_random_instances() {
        // Sufficiency of the dissipativity test, exercised on randomized
        // systems with n ≤ 3, L ≤ 3.
        let mut stream = Stream::new(derive_key(31337, &[0xd15]));
        let mut dissipative_seen = 0;
        for _ in 0..100 {
            let n = 1 + (stream.next_u64() % 3) as usize;
            let l = 1 + (stream.next_u64() % 3) as usize;
            let shift = 0.5 + 2.0 * stream.uniform();
            let a = RegimeFamily::new(
                (0..l)
                    .map(|_| {
                        DMatrix::from_fn(n, n, |_, _| stream.normal() * 0.7)
                            - DMatrix::identity(n, n) * shift
                    })
                    .collect(),
            )
            .unwrap();
            let c = RegimeFamily::new(
                (0..l)
                    .map(|_| DMatrix::from_fn(n, n, |_, _| stream.normal() * 0.4))
                    .collect(),
            )
            .unwrap();
            let mut pi = DMatrix::zeros(l, l);
            for i in 0..l {
                let mut row_sum = 0.0;
                for j in 0..l {
                    if i != j {
                        let r = stream.uniform();
                        pi[(i, j)] = r;
                        row_sum += r;
                    }
                }
                pi[(i, i)] = -row_sum;
            }
            let gen = validate_generator(pi).unwrap();
            if dissipativity_check(&a, &c).stable {
                dissipative_seen += 1;
                let spectral = lyapunov_spectral_check(&a, &c, &gen).unwrap();
                assert!(
                    spectral.stable,
                    "dissipativity held but spectral test failed (n={n}, l={l})"
                );
            }
        }
        assert!(
            dissipative_seen >= 30,
            "only {dissipative_seen} dissipative instances generated"
        );
    }

    #[test]
    fn is_stabilizer_agrees_with_spectral_check_by_definition() {
        let model = example_model(1);
        let theta = RegimeFamily::zeros(3, 4, 2);
        let check = is_stabilizer(&model.dynamics, &model.generator, &theta).unwrap();
        let (a_cl, c_cl) = model.dynamics.closed_loop(&theta);
        let direct = lyapunov_spectral_check(&a_cl, &c_cl, &model.generator).unwrap();
        assert_eq!(check.spectral, direct);
    }

    #[test]
    fn example_generator_reused_across_examples() {
        assert_eq!(example_generator().pi(), example_model(2).generator.pi());
    }
}
