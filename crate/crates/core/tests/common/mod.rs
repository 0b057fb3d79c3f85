//! Shared test oracles, independent of the solver implementation.
//!
//! The backward differential-Riccati integrators below build their
//! right-hand sides from scratch (plain nalgebra arithmetic) and
//! integrate with RK4 from V(0) = 0; for a stabilizable single-regime
//! problem V(τ) converges to the stationary solution as τ grows, giving
//! an oracle that shares no code path with the algebraic solvers.

#![allow(dead_code)]

use nalgebra::DMatrix;
use regime_riccati::chain::validate_generator;
use regime_riccati::model::{embed_zero_sum, CostBlock, Dynamics, GameKind, GameModel, RegimeFamily};

/// Single-regime slice of a model (regime index `i`).
pub struct SingleRegime {
    pub a: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub q: [DMatrix<f64>; 2],
    pub s: [DMatrix<f64>; 2],
    pub r: [DMatrix<f64>; 2],
    pub s1_1: DMatrix<f64>,
    pub s2_2: DMatrix<f64>,
    pub r_row1: DMatrix<f64>,
    pub r_row2: DMatrix<f64>,
    pub m1: usize,
    pub m2: usize,
}

pub fn single_regime(model: &GameModel, i: usize) -> SingleRegime {
    let dynp = &model.dynamics;
    let m1 = model.input_dim1();
    let m2 = model.input_dim2();
    let hcat = |left: &DMatrix<f64>, right: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
        out.view_mut((0, 0), (left.nrows(), left.ncols())).copy_from(left);
        out.view_mut((0, left.ncols()), (right.nrows(), right.ncols()))
            .copy_from(right);
        out
    };
    let vcat = |top: &DMatrix<f64>, bottom: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
        out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
        out.view_mut((top.nrows(), 0), (bottom.nrows(), bottom.ncols()))
            .copy_from(bottom);
        out
    };
    let full_r = |cost: &CostBlock| {
        vcat(
            &hcat(&cost.r11[i], &cost.r12[i]),
            &hcat(&cost.r12[i].transpose(), &cost.r22[i]),
        )
    };
    let full_s = |cost: &CostBlock| vcat(&cost.s1[i], &cost.s2[i]);
    SingleRegime {
        a: dynp.a[i].clone(),
        c: dynp.c[i].clone(),
        b: hcat(&dynp.b1[i], &dynp.b2[i]),
        d: hcat(&dynp.d1[i], &dynp.d2[i]),
        b1: dynp.b1[i].clone(),
        b2: dynp.b2[i].clone(),
        d1: dynp.d1[i].clone(),
        d2: dynp.d2[i].clone(),
        q: [model.cost1.q[i].clone(), model.cost2.q[i].clone()],
        s: [full_s(&model.cost1), full_s(&model.cost2)],
        r: [full_r(&model.cost1), full_r(&model.cost2)],
        s1_1: model.cost1.s1[i].clone(),
        s2_2: model.cost2.s2[i].clone(),
        r_row1: hcat(&model.cost1.r11[i], &model.cost1.r12[i]),
        r_row2: hcat(&model.cost2.r12[i].transpose(), &model.cost2.r22[i]),
        m1,
        m2,
    }
}

/// Gain from the stacked per-player constraint at the current (V₁, V₂).
fn gain_of(sr: &SingleRegime, v1: &DMatrix<f64>, v2: &DMatrix<f64>) -> DMatrix<f64> {
    let m = sr.m1 + sr.m2;
    let n = sr.a.nrows();
    let mut sigma = DMatrix::zeros(m, m);
    sigma
        .view_mut((0, 0), (sr.m1, m))
        .copy_from(&(&sr.r_row1 + sr.d1.transpose() * v1 * &sr.d));
    sigma
        .view_mut((sr.m1, 0), (sr.m2, m))
        .copy_from(&(&sr.r_row2 + sr.d2.transpose() * v2 * &sr.d));
    let mut rhs = DMatrix::zeros(m, n);
    rhs.view_mut((0, 0), (sr.m1, n))
        .copy_from(&(sr.b1.transpose() * v1 + sr.d1.transpose() * v1 * &sr.c + &sr.s1_1));
    rhs.view_mut((sr.m1, 0), (sr.m2, n))
        .copy_from(&(sr.b2.transpose() * v2 + sr.d2.transpose() * v2 * &sr.c + &sr.s2_2));
    sigma.lu().solve(&(-rhs)).expect("oracle gain system")
}

/// Backward RDE for the nonsymmetric representation pair:
/// V̇ₖ = AᵀVₖ + VₖA + CᵀVₖC + Qᵏ + (VₖB + CᵀVₖD + Sᵏᵀ)Θ(V₁,V₂).
pub fn ode_open_rep_pair(
    model: &GameModel,
    t_end: f64,
    h: f64,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    assert_eq!(model.regime_count(), 1, "oracle is single-regime");
    let sr = single_regime(model, 0);
    let n = sr.a.nrows();
    let rhs = |v1: &DMatrix<f64>, v2: &DMatrix<f64>| {
        let theta = gain_of(&sr, v1, v2);
        let f = |k: usize, v: &DMatrix<f64>| {
            sr.a.transpose() * v
                + v * &sr.a
                + sr.c.transpose() * v * &sr.c
                + &sr.q[k]
                + (v * &sr.b + sr.c.transpose() * v * &sr.d + sr.s[k].transpose()) * &theta
        };
        (f(0, v1), f(1, v2))
    };
    let mut v1 = DMatrix::zeros(n, n);
    let mut v2 = DMatrix::zeros(n, n);
    let steps = (t_end / h).round() as usize;
    for _ in 0..steps {
        let (k1a, k1b) = rhs(&v1, &v2);
        let (k2a, k2b) = rhs(&(&v1 + &k1a * (h / 2.0)), &(&v2 + &k1b * (h / 2.0)));
        let (k3a, k3b) = rhs(&(&v1 + &k2a * (h / 2.0)), &(&v2 + &k2b * (h / 2.0)));
        let (k4a, k4b) = rhs(&(&v1 + &k3a * h), &(&v2 + &k3b * h));
        v1 += (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (h / 6.0);
        v2 += (k1b + k2b * 2.0 + k3b * 2.0 + k4b) * (h / 6.0);
    }
    let theta = gain_of(&sr, &v1, &v2);
    (v1, v2, theta)
}

/// Backward RDE for the symmetric closed-loop Nash pair:
/// V̇ₖ = (A+BΘ)ᵀVₖ + Vₖ(A+BΘ) + (C+DΘ)ᵀVₖ(C+DΘ) + Qᵏ + SᵏᵀΘ + ΘᵀSᵏ + ΘᵀRᵏΘ.
pub fn ode_closed_nash_pair(
    model: &GameModel,
    t_end: f64,
    h: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    assert_eq!(model.regime_count(), 1);
    let sr = single_regime(model, 0);
    let n = sr.a.nrows();
    let rhs = |v1: &DMatrix<f64>, v2: &DMatrix<f64>| {
        let theta = gain_of(&sr, v1, v2);
        let a_cl = &sr.a + &sr.b * &theta;
        let c_cl = &sr.c + &sr.d * &theta;
        let f = |k: usize, v: &DMatrix<f64>| {
            a_cl.transpose() * v
                + v * &a_cl
                + c_cl.transpose() * v * &c_cl
                + &sr.q[k]
                + sr.s[k].transpose() * &theta
                + theta.transpose() * &sr.s[k]
                + theta.transpose() * &sr.r[k] * &theta
        };
        (f(0, v1), f(1, v2))
    };
    let mut v1 = DMatrix::zeros(n, n);
    let mut v2 = DMatrix::zeros(n, n);
    let steps = (t_end / h).round() as usize;
    for _ in 0..steps {
        let (k1a, k1b) = rhs(&v1, &v2);
        let (k2a, k2b) = rhs(&(&v1 + &k1a * (h / 2.0)), &(&v2 + &k1b * (h / 2.0)));
        let (k3a, k3b) = rhs(&(&v1 + &k2a * (h / 2.0)), &(&v2 + &k2b * (h / 2.0)));
        let (k4a, k4b) = rhs(&(&v1 + &k3a * h), &(&v2 + &k3b * h));
        v1 += (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (h / 6.0);
        v2 += (k1b + k2b * 2.0 + k3b * 2.0 + k4b) * (h / 6.0);
    }
    (v1, v2)
}

/// Backward RDE for the zero-sum equation:
/// V̇ = AᵀV + VA + CᵀVC + Q − L(V)N(V)⁻¹L(V)ᵀ.
pub fn ode_zero_sum(model: &GameModel, t_end: f64, h: f64) -> DMatrix<f64> {
    assert_eq!(model.regime_count(), 1);
    let sr = single_regime(model, 0);
    let n = sr.a.nrows();
    let rhs = |v: &DMatrix<f64>| {
        let lv = v * &sr.b + sr.c.transpose() * v * &sr.d + sr.s[0].transpose();
        let nv = sr.d.transpose() * v * &sr.d + &sr.r[0];
        let eye = DMatrix::identity(nv.nrows(), nv.ncols());
        let ninv = nv.lu().solve(&eye).expect("N invertible");
        sr.a.transpose() * v + v * &sr.a + sr.c.transpose() * v * &sr.c + &sr.q[0]
            - &lv * ninv * lv.transpose()
    };
    let mut v = DMatrix::zeros(n, n);
    let steps = (t_end / h).round() as usize;
    for _ in 0..steps {
        let k1 = rhs(&v);
        let k2 = rhs(&(&v + &k1 * (h / 2.0)));
        let k3 = rhs(&(&v + &k2 * (h / 2.0)));
        let k4 = rhs(&(&v + &k3 * h));
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    v
}

// ---------------------------------------------------------------------
// Shared model builders
// ---------------------------------------------------------------------

fn scalar(v: f64) -> RegimeFamily {
    RegimeFamily::from_rows(&[&[&[v]]])
}

/// Scalar zero-sum instance A=−1, C=0, B₁=B₂=1, D=0, Q=1, R₁₁=1, R₂₂=−2
/// (saddle solution P = −2 + √6, Θ = (−P, P/2)).
pub fn scalar_zero_sum_model() -> GameModel {
    let dynamics = Dynamics {
        a: scalar(-1.0),
        c: scalar(0.0),
        b1: scalar(1.0),
        b2: scalar(1.0),
        d1: scalar(0.0),
        d2: scalar(0.0),
    };
    let gen = validate_generator(DMatrix::from_row_slice(1, 1, &[0.0])).unwrap();
    let cost = CostBlock {
        q: scalar(1.0),
        s1: RegimeFamily::zeros(1, 1, 1),
        s2: RegimeFamily::zeros(1, 1, 1),
        r11: scalar(1.0),
        r12: RegimeFamily::zeros(1, 1, 1),
        r22: scalar(-2.0),
    };
    embed_zero_sum(dynamics, gen, cost, None).unwrap()
}

/// One-player scalar reduction (m₂ = 0): A=−1, C=0, B₁=1, D₁=0, Q¹=1,
/// R₁₁¹=1 — the classical ARE root P = √2 − 1, Θ* = 1 − √2.
pub fn one_player_scalar_model() -> GameModel {
    let dynamics = Dynamics {
        a: scalar(-1.0),
        c: scalar(0.0),
        b1: scalar(1.0),
        b2: RegimeFamily::zeros(1, 1, 0),
        d1: scalar(0.0),
        d2: RegimeFamily::zeros(1, 1, 0),
    };
    let gen = validate_generator(DMatrix::from_row_slice(1, 1, &[0.0])).unwrap();
    let mut cost1 = CostBlock::zeros(1, 1, 1, 0);
    cost1.q = scalar(1.0);
    cost1.r11 = scalar(1.0);
    let cost2 = CostBlock::zeros(1, 1, 1, 0);
    GameModel {
        dynamics,
        cost1,
        cost2,
        generator: gen,
        inhomogeneity: None,
        kind: GameKind::NonZeroSum,
    }
    .validated()
    .unwrap()
}

/// Restrict a three-regime built-in example to a single regime
/// (generator collapses to [[0]]).
pub fn single_regime_restriction(model: &GameModel, i: usize) -> GameModel {
    let pick = |f: &RegimeFamily| RegimeFamily::new(vec![f[i].clone()]).unwrap();
    let pick_cost = |c: &CostBlock| CostBlock {
        q: pick(&c.q),
        s1: pick(&c.s1),
        s2: pick(&c.s2),
        r11: pick(&c.r11),
        r12: pick(&c.r12),
        r22: pick(&c.r22),
    };
    GameModel {
        dynamics: Dynamics {
            a: pick(&model.dynamics.a),
            c: pick(&model.dynamics.c),
            b1: pick(&model.dynamics.b1),
            b2: pick(&model.dynamics.b2),
            d1: pick(&model.dynamics.d1),
            d2: pick(&model.dynamics.d2),
        },
        cost1: pick_cost(&model.cost1),
        cost2: pick_cost(&model.cost2),
        generator: validate_generator(DMatrix::from_row_slice(1, 1, &[0.0])).unwrap(),
        inhomogeneity: None,
        kind: model.kind,
    }
    .validated()
    .unwrap()
}
