//! Feedback/offset construction and analytic value functions.
//!
//! For homogeneous problems a solved CARE already carries its gain; the
//! functions here re-derive it from the P-families as an independent
//! cross-check and wrap it as a [`StrategyPair`].
//!
//! Inhomogeneous problems carry damped regime-modulated terms
//! b(t) = e^{−λt}b̄(α_t) (and likewise σ, qᵏ, ρₗᵏ). On this class the
//! offset BSDEs close exactly under the ansatz
//!
//! ```text
//! η(t) = e^{−λt} η̄(α_t),   ζ ≡ 0,   z_j(t) = e^{−λt}(η̄(j) − η̄(α_{t−})),
//! ```
//!
//! which turns each BSDE into a finite linear system over the per-regime
//! vectors η̄ (and, for the closed-loop Nash case, the offsets ν̄ that
//! are coupled to it). Value functions evaluate their time integrals
//! through the chain-semigroup resolvent (2λI − Π)⁻¹ instead of
//! quadrature, so the only approximation anywhere is the CARE residual.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::care::{
    lcal, ncal, pinv, sigma_matrix, stacked_rhs, NonSymCareSolution, SymCareSolution,
    ZeroSumCareSolution, PINV_CUTOFF, SIGMA_COND_LIMIT,
};
use crate::linalg::condition_number;
use crate::model::{GameModel, Inhomogeneity, RegimeFamily};
use crate::stability::{is_stabilizer, StabilityError};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("model has no inhomogeneity block")]
    MissingInhomogeneity,
    #[error("Σ(ℙ, regime {regime}) is numerically singular (condition number {cond:.3e})")]
    SigmaSingular { regime: usize, cond: f64 },
    #[error("ρ̃ is outside the range of 𝒩 in regime {regime} (residual {residual:.3e})")]
    RangeConditionFailed { regime: usize, residual: f64 },
    #[error("constructed gain is not a stabilizer")]
    NotStabilizing,
    #[error("the stationary offset system is numerically singular")]
    SingularEtaSystem,
    #[error("resolvent 2λI − Π is numerically singular")]
    SingularResolvent,
    #[error("gain recomputed from P differs from the solver's gain by {diff:.3e}")]
    GainMismatch { diff: f64 },
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

/// Damped feedback offset: ν(t) = e^{−λt} ν̄(α_t).
#[derive(Clone, Debug)]
pub struct DampedOffset {
    pub lambda: f64,
    /// m×1 per regime.
    pub nu_bar: RegimeFamily,
}

/// A closed-loop strategy or representation: u(t) = Θ(α_t)X(t) + ν(t).
#[derive(Clone, Debug)]
pub struct StrategyPair {
    pub theta: RegimeFamily,
    pub nu: Option<DampedOffset>,
}

impl StrategyPair {
    pub fn feedback_only(theta: RegimeFamily) -> Self {
        StrategyPair { theta, nu: None }
    }

    /// Offset vector ν(t) in regime `i` at time `t` (zero when absent).
    pub fn offset(&self, t: f64, i: usize) -> DVector<f64> {
        match &self.nu {
            Some(off) => {
                DVector::from_column_slice(off.nu_bar[i].as_slice()) * (-off.lambda * t).exp()
            }
            None => DVector::zeros(self.theta.rows()),
        }
    }

    /// Control u = Θ(i)x + ν(t) in regime `i`.
    pub fn control(&self, t: f64, i: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.theta[i] * x + self.offset(t, i)
    }
}

/// Stationary part of the offset BSDE solution under the damped ansatz.
///
/// `eta_bar` holds one n×1 family per player for non-zero-sum targets
/// and a single family for zero-sum. ζ is identically zero on the
/// supported class; the jump components are implied, see [`Self::z_jump`].
#[derive(Clone, Debug)]
pub struct EtaSolution {
    pub eta_bar: Vec<RegimeFamily>,
    /// Joint offset ν̄ (m×1 per regime); populated only for the
    /// closed-loop Nash target, where it is coupled into the BSDE.
    pub nu_bar: Option<RegimeFamily>,
    pub lambda: f64,
    /// Max norm of the stationary linear system residual.
    pub residual: f64,
}

impl EtaSolution {
    /// Implied jump component z_j(t) · e^{λt} = η̄(j) − η̄(current).
    pub fn z_jump(&self, player: usize, j: usize, current: usize) -> DVector<f64> {
        let fam = &self.eta_bar[player];
        DVector::from_column_slice(fam[j].as_slice())
            - DVector::from_column_slice(fam[current].as_slice())
    }
}

/// Which solved system the offset BSDE belongs to.
pub enum EtaTarget<'a> {
    OpenRep(&'a NonSymCareSolution),
    ClosedNash(&'a SymCareSolution),
    ZeroSum(&'a ZeroSumCareSolution),
}

fn col(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// ρ̄ₗᵏ(i) as a vector (player cost k, input channel l; 1-based).
fn rho_bar(inh: &Inhomogeneity, k: usize, l: usize, i: usize) -> DVector<f64> {
    col(&inh.rho_bar[k - 1][l - 1][i])
}

// ---------------------------------------------------------------------
// Offset BSDE reduction
// ---------------------------------------------------------------------

/// Solve the stationary offset system for the given solved CARE.
///
/// Zero-sum: per regime, [(A+BΘ)ᵀ − λI]η̄(i) + Σ_j π_ij η̄(j) + d̄(i) = 0
/// with d̄ = (C+DΘ)ᵀPσ̄ + Θᵀρ̄ + Pb̄ + q̄; afterwards the range condition
/// 𝒩𝒩†ρ̃̄ = ρ̃̄ is verified per regime. The non-zero-sum targets couple
/// both players' η̄ (and the offsets ν̄ for the closed Nash case) into
/// one joint linear system; see the assembly below.
pub fn solve_eta(model: &GameModel, target: EtaTarget<'_>) -> Result<EtaSolution, SynthesisError> {
    let inh = model
        .inhomogeneity
        .as_ref()
        .ok_or(SynthesisError::MissingInhomogeneity)?;
    match target {
        EtaTarget::ZeroSum(sol) => solve_eta_zero_sum(model, inh, sol),
        EtaTarget::OpenRep(sol) => solve_eta_open_rep(model, inh, sol),
        EtaTarget::ClosedNash(sol) => solve_eta_closed_nash(model, inh, sol),
    }
}

fn solve_eta_zero_sum(
    model: &GameModel,
    inh: &Inhomogeneity,
    sol: &ZeroSumCareSolution,
) -> Result<EtaSolution, SynthesisError> {
    let n = model.state_dim();
    let l = model.regime_count();
    let lambda = inh.lambda;
    let (a_cl, c_cl) = model.dynamics.closed_loop(&sol.theta);
    let mut big = DMatrix::zeros(n * l, n * l);
    let mut rhs = DVector::zeros(n * l);
    for i in 0..l {
        for j in 0..l {
            let mut block = big.view_mut((i * n, j * n), (n, n));
            if i == j {
                block.copy_from(
                    &(a_cl[i].transpose() - DMatrix::identity(n, n) * lambda
                        + DMatrix::identity(n, n) * model.generator.rate(i, i)),
                );
            } else {
                block.copy_from(&(DMatrix::identity(n, n) * model.generator.rate(i, j)));
            }
        }
        let d_bar = c_cl[i].transpose() * &sol.p[i] * col(&inh.sigma_bar[i])
            + sol.theta[i].transpose() * zero_sum_rho(inh, i)
            + &sol.p[i] * col(&inh.b_bar[i])
            + col(&inh.q_bar[0][i]);
        rhs.rows_mut(i * n, n).copy_from(&(-d_bar));
    }
    let eta = big
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(SynthesisError::SingularEtaSystem)?;
    let residual = (&big * &eta - &rhs).norm();
    let eta_bar = RegimeFamily::new(
        (0..l)
            .map(|i| DMatrix::from_column_slice(n, 1, eta.rows(i * n, n).as_slice()))
            .collect(),
    )
    .expect("eta family");
    // Range condition: ρ̃̄(i) ∈ 𝓡(𝒩(P,i)).
    for i in 0..l {
        let rho_t = rho_tilde_zero_sum(model, inh, sol, &eta_bar, i);
        let ncal_i = ncal(model, 1, &sol.p, i);
        let n_dag = pinv(&ncal_i, PINV_CUTOFF);
        let gap = (&ncal_i * &n_dag * &rho_t - &rho_t).norm();
        if gap > 1e-10 * rho_t.norm().max(1.0) {
            return Err(SynthesisError::RangeConditionFailed {
                regime: i + 1,
                residual: gap,
            });
        }
    }
    Ok(EtaSolution {
        eta_bar: vec![eta_bar],
        nu_bar: None,
        lambda,
        residual,
    })
}

/// Zero-sum ρ̄(i) = (ρ̄₁¹(i); ρ̄₂¹(i)), the performance functional's own
/// linear input weights.
fn zero_sum_rho(inh: &Inhomogeneity, i: usize) -> DVector<f64> {
    let top = rho_bar(inh, 1, 1, i);
    let bot = rho_bar(inh, 1, 2, i);
    DVector::from_iterator(top.len() + bot.len(), top.iter().chain(bot.iter()).copied())
}

/// ρ̃̄(i) = Bᵀη̄(i) + DᵀP(i)σ̄(i) + ρ̄(i) (ζ ≡ 0 on the damped class).
fn rho_tilde_zero_sum(
    model: &GameModel,
    inh: &Inhomogeneity,
    sol: &ZeroSumCareSolution,
    eta_bar: &RegimeFamily,
    i: usize,
) -> DVector<f64> {
    model.dynamics.b_full(i).transpose() * col(&eta_bar[i])
        + model.dynamics.d_full(i).transpose() * &sol.p[i] * col(&inh.sigma_bar[i])
        + zero_sum_rho(inh, i)
}

fn solve_eta_open_rep(
    model: &GameModel,
    inh: &Inhomogeneity,
    sol: &NonSymCareSolution,
) -> Result<EtaSolution, SynthesisError> {
    let n = model.state_dim();
    let l = model.regime_count();
    let m1 = model.input_dim1();
    let m2 = model.input_dim2();
    let lambda = inh.lambda;
    let dim = 2 * n * l;
    let mut big = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    let p_of = |k: usize| if k == 1 { &sol.p1 } else { &sol.p2 };
    for i in 0..l {
        let sigma = sigma_matrix(model, &sol.p1, &sol.p2, i);
        let cond = condition_number(&sigma);
        if cond.is_nan() || cond >= SIGMA_COND_LIMIT {
            return Err(SynthesisError::SigmaSingular {
                regime: i + 1,
                cond,
            });
        }
        let sigma_inv = sigma
            .clone()
            .try_inverse()
            .ok_or(SynthesisError::SigmaSingular {
                regime: i + 1,
                cond,
            })?;
        let g1 = sigma_inv.columns(0, m1).into_owned();
        let g2 = sigma_inv.columns(m1, m2).into_owned();
        // Constant part of the projected stationary term:
        // [D₁ᵀP₁σ̄ + ρ̄₁¹ ; D₂ᵀP₂σ̄ + ρ̄₂²].
        let mut proj_const = DVector::zeros(m1 + m2);
        proj_const.rows_mut(0, m1).copy_from(
            &(model.dynamics.d1[i].transpose() * &sol.p1[i] * col(&inh.sigma_bar[i])
                + rho_bar(inh, 1, 1, i)),
        );
        proj_const.rows_mut(m1, m2).copy_from(
            &(model.dynamics.d2[i].transpose() * &sol.p2[i] * col(&inh.sigma_bar[i])
                + rho_bar(inh, 2, 2, i)),
        );
        for k in [1usize, 2usize] {
            let row = i * 2 * n + (k - 1) * n;
            let p = p_of(k);
            let lk = lcal(model, k, p, i);
            // Diagonal-in-regime blocks: (Aᵀ − λI + π_ii I) on player k's
            // own η̄, minus the Σ⁻¹-projected feedback of both players.
            let a_t = model.dynamics.a[i].transpose() - DMatrix::identity(n, n) * lambda
                + DMatrix::identity(n, n) * model.generator.rate(i, i);
            let coupling_1 = &lk * &g1 * model.dynamics.b1[i].transpose();
            let coupling_2 = &lk * &g2 * model.dynamics.b2[i].transpose();
            let col0 = i * 2 * n;
            big.view_mut((row, col0), (n, n)).copy_from(&(-&coupling_1));
            big.view_mut((row, col0 + n), (n, n))
                .copy_from(&(-&coupling_2));
            let own = if k == 1 { col0 } else { col0 + n };
            let mut own_block = big.view_mut((row, own), (n, n));
            let prev = own_block.clone_owned();
            own_block.copy_from(&(prev + a_t));
            for j in 0..l {
                if j != i {
                    let col_j = j * 2 * n + (k - 1) * n;
                    big.view_mut((row, col_j), (n, n))
                        .copy_from(&(DMatrix::identity(n, n) * model.generator.rate(i, j)));
                }
            }
            let c_bar = model.dynamics.c[i].transpose() * &p[i] * col(&inh.sigma_bar[i])
                + col(&inh.q_bar[k - 1][i])
                + &p[i] * col(&inh.b_bar[i])
                - &lk * &sigma_inv * &proj_const;
            rhs.rows_mut(row, n).copy_from(&(-c_bar));
        }
    }
    let eta = big
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(SynthesisError::SingularEtaSystem)?;
    let residual = (&big * &eta - &rhs).norm();
    let unpack = |k: usize| {
        RegimeFamily::new(
            (0..l)
                .map(|i| {
                    DMatrix::from_column_slice(n, 1, eta.rows(i * 2 * n + (k - 1) * n, n).as_slice())
                })
                .collect(),
        )
        .expect("eta family")
    };
    Ok(EtaSolution {
        eta_bar: vec![unpack(1), unpack(2)],
        nu_bar: None,
        lambda,
        residual,
    })
}

fn solve_eta_closed_nash(
    model: &GameModel,
    inh: &Inhomogeneity,
    sol: &SymCareSolution,
) -> Result<EtaSolution, SynthesisError> {
    let n = model.state_dim();
    let l = model.regime_count();
    let m1 = model.input_dim1();
    let m2 = model.input_dim2();
    let m = m1 + m2;
    let lambda = inh.lambda;
    // Unknowns per regime: η̄₁ (n), η̄₂ (n), ν̄ (m).
    let stride = 2 * n + m;
    let dim = stride * l;
    let mut big = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    let eye_n = DMatrix::<f64>::identity(n, n);
    for i in 0..l {
        let base = i * stride;
        let a_t = model.dynamics.a[i].transpose();
        let th1 = &sol.theta1[i];
        let th2 = &sol.theta2[i];
        let d1 = &model.dynamics.d1[i];
        let d2 = &model.dynamics.d2[i];
        let b1 = &model.dynamics.b1[i];
        let b2 = &model.dynamics.b2[i];
        let c = &model.dynamics.c[i];
        let p1 = &sol.p1[i];
        let p2 = &sol.p2[i];
        let sigma_col = col(&inh.sigma_bar[i]);
        let b_col = col(&inh.b_bar[i]);

        // Player-1 blocks built from P₁, player-2 from P₂.
        let n11_1 = d1.transpose() * p1 * d1 + &model.cost1.r11[i];
        let n22_1 = d2.transpose() * p1 * d2 + &model.cost1.r22[i];
        let n12_1 = d1.transpose() * p1 * d2 + &model.cost1.r12[i];
        let l21_1 = p1 * b2 + c.transpose() * p1 * d2 + model.cost1.s2[i].transpose();
        let n11_2 = d1.transpose() * p2 * d1 + &model.cost2.r11[i];
        let n22_2 = d2.transpose() * p2 * d2 + &model.cost2.r22[i];
        let n21_2 = d2.transpose() * p2 * d1 + model.cost2.r12[i].transpose();
        let l12_2 = p2 * b1 + c.transpose() * p2 * d1 + model.cost2.s1[i].transpose();

        // E1 (n rows): player 1's offset BSDE drift.
        let row = base;
        big.view_mut((row, base), (n, n)).copy_from(
            &(&a_t - &eye_n * lambda
                + &eye_n * model.generator.rate(i, i)
                + th2.transpose() * b2.transpose()),
        );
        // ν̄₁ and ν̄₂ columns.
        big.view_mut((row, base + 2 * n), (n, m1))
            .copy_from(&(-(th1.transpose() * &n11_1)));
        big.view_mut((row, base + 2 * n + m1), (n, m2))
            .copy_from(&(&l21_1 + th2.transpose() * &n22_1));
        for j in 0..l {
            if j != i {
                big.view_mut((row, j * stride), (n, n))
                    .copy_from(&(&eye_n * model.generator.rate(i, j)));
            }
        }
        let const1 = c.transpose() * p1 * &sigma_col
            + p1 * &b_col
            + col(&inh.q_bar[0][i])
            + th2.transpose() * (d2.transpose() * p1 * &sigma_col + rho_bar(inh, 1, 2, i));
        rhs.rows_mut(row, n).copy_from(&(-const1));

        // E2 (n rows): player 2's offset BSDE drift.
        let row = base + n;
        big.view_mut((row, base + n), (n, n)).copy_from(
            &(&a_t - &eye_n * lambda
                + &eye_n * model.generator.rate(i, i)
                + th1.transpose() * b1.transpose()),
        );
        big.view_mut((row, base + 2 * n), (n, m1))
            .copy_from(&(&l12_2 + th1.transpose() * &n11_2));
        big.view_mut((row, base + 2 * n + m1), (n, m2))
            .copy_from(&(-(th2.transpose() * &n22_2)));
        for j in 0..l {
            if j != i {
                big.view_mut((row, j * stride + n), (n, n))
                    .copy_from(&(&eye_n * model.generator.rate(i, j)));
            }
        }
        let const2 = c.transpose() * p2 * &sigma_col
            + p2 * &b_col
            + col(&inh.q_bar[1][i])
            + th1.transpose() * (d1.transpose() * p2 * &sigma_col + rho_bar(inh, 2, 1, i));
        rhs.rows_mut(row, n).copy_from(&(-const2));

        // E3 (m1 rows): player 1's offset constraint.
        let row = base + 2 * n;
        big.view_mut((row, base), (m1, n)).copy_from(&b1.transpose());
        big.view_mut((row, base + 2 * n), (m1, m1)).copy_from(&n11_1);
        big.view_mut((row, base + 2 * n + m1), (m1, m2))
            .copy_from(&n12_1);
        let const3 = d1.transpose() * p1 * &sigma_col + rho_bar(inh, 1, 1, i);
        rhs.rows_mut(row, m1).copy_from(&(-const3));

        // E4 (m2 rows): player 2's offset constraint.
        let row = base + 2 * n + m1;
        big.view_mut((row, base + n), (m2, n)).copy_from(&b2.transpose());
        big.view_mut((row, base + 2 * n), (m2, m1)).copy_from(&n21_2);
        big.view_mut((row, base + 2 * n + m1), (m2, m2))
            .copy_from(&n22_2);
        let const4 = d2.transpose() * p2 * &sigma_col + rho_bar(inh, 2, 2, i);
        rhs.rows_mut(row, m2).copy_from(&(-const4));
    }
    let unknowns = big
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(SynthesisError::SingularEtaSystem)?;
    let residual = (&big * &unknowns - &rhs).norm();
    let unpack_eta = |k: usize| {
        RegimeFamily::new(
            (0..l)
                .map(|i| {
                    DMatrix::from_column_slice(
                        n,
                        1,
                        unknowns.rows(i * stride + (k - 1) * n, n).as_slice(),
                    )
                })
                .collect(),
        )
        .expect("eta family")
    };
    let nu_bar = RegimeFamily::new(
        (0..l)
            .map(|i| {
                DMatrix::from_column_slice(m, 1, unknowns.rows(i * stride + 2 * n, m).as_slice())
            })
            .collect(),
    )
    .expect("nu family");
    Ok(EtaSolution {
        eta_bar: vec![unpack_eta(1), unpack_eta(2)],
        nu_bar: Some(nu_bar),
        lambda,
        residual,
    })
}

// ---------------------------------------------------------------------
// Strategy construction
// ---------------------------------------------------------------------

/// Closed-loop representation strategy (Θ*, ν*) of an open-loop Nash
/// point. Θ* is recomputed from the P-families alone and must agree with
/// the solver's gain to 1e-9; ν* is assembled from the offset system for
/// inhomogeneous models.
pub fn open_rep_strategy(
    model: &GameModel,
    sol: &NonSymCareSolution,
) -> Result<StrategyPair, SynthesisError> {
    let l = model.regime_count();
    let m1 = model.input_dim1();
    let m2 = model.input_dim2();
    let mut entries = Vec::with_capacity(l);
    for i in 0..l {
        let sigma = sigma_matrix(model, &sol.p1, &sol.p2, i);
        let cond = condition_number(&sigma);
        if cond.is_nan() || cond >= SIGMA_COND_LIMIT {
            return Err(SynthesisError::SigmaSingular {
                regime: i + 1,
                cond,
            });
        }
        let rhs = stacked_rhs(model, &sol.p1, &sol.p2, i);
        let theta_i = sigma
            .lu()
            .solve(&(-rhs))
            .ok_or(SynthesisError::SigmaSingular {
                regime: i + 1,
                cond,
            })?;
        entries.push(theta_i);
    }
    let theta = RegimeFamily::new(entries).expect("recomputed gain");
    let diff = theta.max_abs_diff(&sol.theta);
    if diff > 1e-9 {
        return Err(SynthesisError::GainMismatch { diff });
    }
    let nu = if model.is_homogeneous() {
        None
    } else {
        let inh = model.inhomogeneity.as_ref().unwrap();
        let eta = solve_eta(model, EtaTarget::OpenRep(sol))?;
        let mut nus = Vec::with_capacity(l);
        for i in 0..l {
            let sigma = sigma_matrix(model, &sol.p1, &sol.p2, i);
            let mut proj = DVector::zeros(m1 + m2);
            proj.rows_mut(0, m1).copy_from(
                &(model.dynamics.b1[i].transpose() * col(&eta.eta_bar[0][i])
                    + model.dynamics.d1[i].transpose() * &sol.p1[i] * col(&inh.sigma_bar[i])
                    + rho_bar(inh, 1, 1, i)),
            );
            proj.rows_mut(m1, m2).copy_from(
                &(model.dynamics.b2[i].transpose() * col(&eta.eta_bar[1][i])
                    + model.dynamics.d2[i].transpose() * &sol.p2[i] * col(&inh.sigma_bar[i])
                    + rho_bar(inh, 2, 2, i)),
            );
            let nu_i = sigma
                .lu()
                .solve(&(-proj))
                .ok_or(SynthesisError::SigmaSingular {
                    regime: i + 1,
                    cond: f64::INFINITY,
                })?;
            nus.push(DMatrix::from_column_slice(m1 + m2, 1, nu_i.as_slice()));
        }
        Some(DampedOffset {
            lambda: inh.lambda,
            nu_bar: RegimeFamily::new(nus).expect("nu family"),
        })
    };
    let pair = StrategyPair { theta, nu };
    if !is_stabilizer(&model.dynamics, &model.generator, &pair.theta)?.is_stabilizer() {
        return Err(SynthesisError::NotStabilizing);
    }
    Ok(pair)
}

/// Closed-loop representation strategy of the zero-sum saddle problem:
/// Θ*(i) = −𝒩†𝓛ᵀ + (I − 𝒩†𝒩)Π(i), ν* = −𝒩†ρ̃. The Π-term vanishes
/// identically whenever 𝒩 is invertible.
pub fn zero_sum_strategy(
    model: &GameModel,
    sol: &ZeroSumCareSolution,
    pi_param: Option<&RegimeFamily>,
) -> Result<StrategyPair, SynthesisError> {
    let l = model.regime_count();
    let mut entries = Vec::with_capacity(l);
    for i in 0..l {
        let ncal_i = ncal(model, 1, &sol.p, i);
        let lcal_i = lcal(model, 1, &sol.p, i);
        let n_dag = pinv(&ncal_i, PINV_CUTOFF);
        let mut theta_i = -&n_dag * lcal_i.transpose();
        if let Some(pi) = pi_param {
            let eye = DMatrix::<f64>::identity(ncal_i.nrows(), ncal_i.ncols());
            theta_i += (eye - &n_dag * &ncal_i) * &pi[i];
        }
        entries.push(theta_i);
    }
    let theta = RegimeFamily::new(entries).expect("strategy gain");
    let nu = if model.is_homogeneous() {
        None
    } else {
        let inh = model.inhomogeneity.as_ref().unwrap();
        let eta = solve_eta(model, EtaTarget::ZeroSum(sol))?;
        let mut nus = Vec::with_capacity(l);
        for i in 0..l {
            let rho_t = rho_tilde_zero_sum(model, inh, sol, &eta.eta_bar[0], i);
            let n_dag = pinv(&ncal(model, 1, &sol.p, i), PINV_CUTOFF);
            let nu_i = -n_dag * rho_t;
            nus.push(DMatrix::from_column_slice(nu_i.len(), 1, nu_i.as_slice()));
        }
        Some(DampedOffset {
            lambda: inh.lambda,
            nu_bar: RegimeFamily::new(nus).expect("nu family"),
        })
    };
    if !is_stabilizer(&model.dynamics, &model.generator, &theta)?.is_stabilizer() {
        return Err(SynthesisError::NotStabilizing);
    }
    Ok(StrategyPair { theta, nu })
}

/// Closed-loop Nash equilibrium strategy (Θ̂, ν̂) from the symmetric
/// CARE solution; ν̂ comes out of the joint offset system.
pub fn closed_nash_strategy(
    model: &GameModel,
    sol: &SymCareSolution,
) -> Result<StrategyPair, SynthesisError> {
    let theta = sol.theta_full();
    let nu = if model.is_homogeneous() {
        None
    } else {
        let eta = solve_eta(model, EtaTarget::ClosedNash(sol))?;
        Some(DampedOffset {
            lambda: eta.lambda,
            nu_bar: eta.nu_bar.clone().expect("closed-nash offset"),
        })
    };
    if !is_stabilizer(&model.dynamics, &model.generator, &theta)?.is_stabilizer() {
        return Err(SynthesisError::NotStabilizing);
    }
    Ok(StrategyPair { theta, nu })
}

// ---------------------------------------------------------------------
// Value functions
// ---------------------------------------------------------------------

/// Homogeneous value ⟨P(i)x, x⟩.
pub fn value_homogeneous(p: &RegimeFamily, x: &DVector<f64>, i: usize) -> f64 {
    (x.transpose() * &p[i] * x)[(0, 0)]
}

/// ∫₀^∞ E[e^{−2λt} g(α_t) | α₀ = i] dt = [(2λI − Π)⁻¹ g](i).
fn resolvent_integral(
    model: &GameModel,
    lambda: f64,
    g: &DVector<f64>,
    i: usize,
) -> Result<f64, SynthesisError> {
    let l = model.regime_count();
    let m = DMatrix::identity(l, l) * (2.0 * lambda) - model.generator.pi();
    let sol = m.lu().solve(g).ok_or(SynthesisError::SingularResolvent)?;
    Ok(sol[i])
}

/// Saddle value of the inhomogeneous zero-sum problem at (x, i):
/// ⟨P(i)x,x⟩ + 2⟨η̄(i),x⟩ plus the resolvent integral of the per-regime
/// constant ⟨Pσ̄,σ̄⟩ + 2⟨η̄,b̄⟩ − ⟨𝒩†ρ̃̄, ρ̃̄⟩.
pub fn value_zero_sum_inhomogeneous(
    model: &GameModel,
    sol: &ZeroSumCareSolution,
    eta: &EtaSolution,
    x: &DVector<f64>,
    i: usize,
) -> Result<f64, SynthesisError> {
    let inh = model
        .inhomogeneity
        .as_ref()
        .ok_or(SynthesisError::MissingInhomogeneity)?;
    let l = model.regime_count();
    let eta_bar = &eta.eta_bar[0];
    let mut g = DVector::zeros(l);
    for j in 0..l {
        let sigma_col = col(&inh.sigma_bar[j]);
        let rho_t = rho_tilde_zero_sum(model, inh, sol, eta_bar, j);
        let n_dag = pinv(&ncal(model, 1, &sol.p, j), PINV_CUTOFF);
        g[j] = (sigma_col.transpose() * &sol.p[j] * &sigma_col)[(0, 0)]
            + 2.0 * col(&eta_bar[j]).dot(&col(&inh.b_bar[j]))
            - (&n_dag * &rho_t).dot(&rho_t);
    }
    Ok(value_homogeneous(&sol.p, x, i)
        + 2.0 * col(&eta_bar[i]).dot(x)
        + resolvent_integral(model, eta.lambda, &g, i)?)
}

/// Closed-loop Nash equilibrium values (V₁, V₂) of the inhomogeneous
/// problem at (x, i).
pub fn value_closed_nash_inhomogeneous(
    model: &GameModel,
    sol: &SymCareSolution,
    eta: &EtaSolution,
    x: &DVector<f64>,
    i: usize,
) -> Result<[f64; 2], SynthesisError> {
    let inh = model
        .inhomogeneity
        .as_ref()
        .ok_or(SynthesisError::MissingInhomogeneity)?;
    let l = model.regime_count();
    let m1 = model.input_dim1();
    let nu_bar = eta
        .nu_bar
        .as_ref()
        .ok_or(SynthesisError::SingularEtaSystem)?;
    let mut values = [0.0; 2];
    for (idx, k) in [1usize, 2usize].into_iter().enumerate() {
        let (p, eta_k) = if k == 1 {
            (&sol.p1, &eta.eta_bar[0])
        } else {
            (&sol.p2, &eta.eta_bar[1])
        };
        let mut g = DVector::zeros(l);
        for j in 0..l {
            let sigma_col = col(&inh.sigma_bar[j]);
            let b_col = col(&inh.b_bar[j]);
            let nu = col(&nu_bar[j]);
            let (nu_own, nu_other) = if k == 1 {
                (
                    nu.rows(0, m1).into_owned(),
                    nu.rows(m1, nu.len() - m1).into_owned(),
                )
            } else {
                (
                    nu.rows(m1, nu.len() - m1).into_owned(),
                    nu.rows(0, m1).into_owned(),
                )
            };
            // 𝒩-blocks of player k's own weight matrix.
            let ncal_k = ncal(model, k, p, j);
            let (own_len, other_len) = (nu_own.len(), nu_other.len());
            let (own_off, other_off) = if k == 1 { (0, m1) } else { (m1, 0) };
            let n_own = ncal_k
                .view((own_off, own_off), (own_len, own_len))
                .into_owned();
            let n_other = ncal_k
                .view((other_off, other_off), (other_len, other_len))
                .into_owned();
            let n_cross = ncal_k
                .view((other_off, own_off), (other_len, own_len))
                .into_owned();
            let n_own_dag = pinv(&n_own, PINV_CUTOFF);
            // ρ̂-vectors of the constraint system (ζ ≡ 0).
            let (b_own, d_own, b_other, d_other) = if k == 1 {
                (
                    &model.dynamics.b1[j],
                    &model.dynamics.d1[j],
                    &model.dynamics.b2[j],
                    &model.dynamics.d2[j],
                )
            } else {
                (
                    &model.dynamics.b2[j],
                    &model.dynamics.d2[j],
                    &model.dynamics.b1[j],
                    &model.dynamics.d1[j],
                )
            };
            let rho_own = b_own.transpose() * col(&eta_k[j])
                + d_own.transpose() * &p[j] * &sigma_col
                + rho_bar(inh, k, k, j);
            let rho_other = b_other.transpose() * col(&eta_k[j])
                + d_other.transpose() * &p[j] * &sigma_col
                + rho_bar(inh, k, if k == 1 { 2 } else { 1 }, j);
            g[j] = (sigma_col.transpose() * &p[j] * &sigma_col)[(0, 0)]
                + 2.0 * col(&eta_k[j]).dot(&b_col)
                + 2.0 * (&rho_other - &n_cross * &n_own_dag * &rho_own).dot(&nu_other)
                - (&n_own_dag * &rho_own).dot(&rho_own)
                + ((&n_other - &n_cross * &n_own_dag * n_cross.transpose()) * &nu_other)
                    .dot(&nu_other);
        }
        values[idx] = value_homogeneous(p, x, i)
            + 2.0 * col(&eta_k[i]).dot(x)
            + resolvent_integral(model, eta.lambda, &g, i)?;
    }
    Ok(values)
}
