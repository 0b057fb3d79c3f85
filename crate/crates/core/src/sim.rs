//! Seeded Euler–Maruyama Monte Carlo for the closed-loop
//! regime-switching SDE, with empirical cost, L²-norm, and
//! stationarity-residual estimates.
//!
//! The regime path of each Monte Carlo path is sampled exactly (jump
//! times from the chain module) and the uniform dt-grid is refined to
//! include every jump time, so regimes are never misclassified within a
//! step. Costs are integrated by the trapezoid rule on the same grid.
//!
//! Paths are independent units keyed by `(seed, unit index)`: any thread
//! may compute any unit, per-unit results land in a slot array, and the
//! reduction is a fixed-order pairwise summation — reports are therefore
//! bitwise identical no matter how many threads run. The thread count
//! comes from `REGIME_RICCATI_THREADS` (default: available parallelism).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::care::CareSolution;
use crate::chain::sample_path_with;
use crate::linalg::pairwise_sum;
use crate::model::{GameModel, RegimeFamily};
use crate::rng::{derive_key, Stream};
use crate::stability::{is_stabilizer, StabilityError};
use crate::synthesis::{EtaSolution, StrategyPair};

const REGIME_TAG: u64 = 0x0072_6567;
const BROWNIAN_TAG: u64 = 0x0062_726f;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("closed loop failed the stability certificate (spectral abscissa {abscissa:.3e}); use force to simulate anyway")]
    NotStabilizing { abscissa: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

#[derive(Clone, Copy, Debug)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            horizon: 10.0,
            paths: 10_000,
            seed: 0,
            antithetic: false,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<(), SimError> {
        if self.dt.is_nan() || self.dt <= 0.0 {
            return Err(SimError::InvalidConfig("dt must be positive".into()));
        }
        if self.horizon.is_nan() || self.horizon <= 0.0 {
            return Err(SimError::InvalidConfig("horizon must be positive".into()));
        }
        if self.paths == 0 {
            return Err(SimError::InvalidConfig("need at least one path".into()));
        }
        if self.antithetic && !self.paths.is_multiple_of(2) {
            return Err(SimError::InvalidConfig(
                "antithetic sampling needs an even path count".into(),
            ));
        }
        Ok(())
    }
}

/// Truncation horizon rule: a loop whose spectral abscissa is −γ has its
/// second moment decaying like e^{−2γt}, so T = 10/γ keeps the tail mass
/// below e^{−20} of the initial scale. Falls back to 10 for γ ≤ 0.
pub fn default_horizon(abscissa: f64) -> f64 {
    if abscissa < 0.0 {
        10.0 / abscissa.abs()
    } else {
        10.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug)]
pub struct SimReport {
    /// Per-player empirical cost (J₁, J₂).
    pub cost: [Estimate; 2],
    /// E ∫₀ᵀ |X|² dt.
    pub l2_norm: Estimate,
    /// E |X(T)|² — truncation diagnostic.
    pub tail_mass: Estimate,
    /// Max |stationary-condition residual| over sampled times, when a
    /// solved CARE was supplied for certification.
    pub stationarity_residual: Option<f64>,
    pub seed: u64,
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Clone, Copy, Default)]
struct PathStats {
    cost1: f64,
    cost2: f64,
    l2: f64,
    tail: f64,
}

/// Precomputed per-regime closed-loop data for the hot loop.
struct Engine<'a> {
    model: &'a GameModel,
    a_cl: Vec<DMatrix<f64>>,
    c_cl: Vec<DMatrix<f64>>,
    theta: &'a RegimeFamily,
    /// Unscaled Bν̄ + b̄ and Dν̄ + σ̄ (scaled by e^{−λt} at use).
    drift_const: Vec<DVector<f64>>,
    diff_const: Vec<DVector<f64>>,
    nu_bar: Vec<DVector<f64>>,
    /// Full quadratic cost blocks [[Qᵏ, Sᵏᵀ], [Sᵏ, Rᵏ]] per player.
    mcost: [Vec<DMatrix<f64>>; 2],
    /// Linear cost weights (q̄ᵏ; ρ̄₁ᵏ; ρ̄₂ᵏ) per player.
    wcost: [Vec<DVector<f64>>; 2],
    lambda: Option<f64>,
    x0: DVector<f64>,
    i0: usize,
    cfg: SimConfig,
}

struct Scratch {
    u: DVector<f64>,
    z: DVector<f64>,
    mz: DVector<f64>,
    drift: DVector<f64>,
    diff: DVector<f64>,
    x: DVector<f64>,
    x_next: DVector<f64>,
}

impl Scratch {
    fn new(n: usize, m: usize) -> Self {
        Scratch {
            u: DVector::zeros(m),
            z: DVector::zeros(n + m),
            mz: DVector::zeros(n + m),
            drift: DVector::zeros(n),
            diff: DVector::zeros(n),
            x: DVector::zeros(n),
            x_next: DVector::zeros(n),
        }
    }
}

impl<'a> Engine<'a> {
    fn new(
        model: &'a GameModel,
        strategy: &'a StrategyPair,
        x0: &DVector<f64>,
        i0: usize,
        cfg: SimConfig,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        let n = model.state_dim();
        let m = model.input_dim();
        let l = model.regime_count();
        if strategy.theta.rows() != m
            || strategy.theta.cols() != n
            || strategy.theta.regime_count() != l
        {
            return Err(SimError::InvalidConfig(format!(
                "gain family has {} regimes of {}×{}, expected {l} of {m}×{n}",
                strategy.theta.regime_count(),
                strategy.theta.rows(),
                strategy.theta.cols()
            )));
        }
        if let Some(off) = &strategy.nu {
            if off.nu_bar.rows() != m || off.nu_bar.regime_count() != l {
                return Err(SimError::InvalidConfig(
                    "offset family shape does not match the model".into(),
                ));
            }
        }
        if x0.len() != n {
            return Err(SimError::InvalidConfig(format!(
                "x0 has length {}, expected {n}",
                x0.len()
            )));
        }
        if i0 >= l {
            return Err(SimError::InvalidConfig(format!(
                "initial regime {} out of range (L = {l})",
                i0 + 1
            )));
        }
        let lambda = match (&model.inhomogeneity, &strategy.nu) {
            (Some(inh), Some(off)) => {
                if (inh.lambda - off.lambda).abs() > 0.0 {
                    return Err(SimError::InvalidConfig(format!(
                        "offset damping rate {} differs from the model's {}",
                        off.lambda, inh.lambda
                    )));
                }
                Some(inh.lambda)
            }
            (Some(inh), None) => Some(inh.lambda),
            (None, Some(_)) => {
                return Err(SimError::InvalidConfig(
                    "strategy carries an offset but the model is homogeneous".into(),
                ))
            }
            (None, None) => None,
        };
        let (a_cl_fam, c_cl_fam) = model.dynamics.closed_loop(&strategy.theta);
        let mut drift_const = Vec::with_capacity(l);
        let mut diff_const = Vec::with_capacity(l);
        let mut nu_bar = Vec::with_capacity(l);
        for i in 0..l {
            let nu_i = match &strategy.nu {
                Some(off) => DVector::from_column_slice(off.nu_bar[i].as_slice()),
                None => DVector::zeros(m),
            };
            let (b_bar, s_bar) = match &model.inhomogeneity {
                Some(inh) => (
                    DVector::from_column_slice(inh.b_bar[i].as_slice()),
                    DVector::from_column_slice(inh.sigma_bar[i].as_slice()),
                ),
                None => (DVector::zeros(n), DVector::zeros(n)),
            };
            drift_const.push(model.dynamics.b_full(i) * &nu_i + b_bar);
            diff_const.push(model.dynamics.d_full(i) * &nu_i + s_bar);
            nu_bar.push(nu_i);
        }
        let build_cost = |k: usize| -> (Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
            let cost = model.cost(k);
            let mut mats = Vec::with_capacity(l);
            let mut ws = Vec::with_capacity(l);
            for i in 0..l {
                let mut big = DMatrix::zeros(n + m, n + m);
                big.view_mut((0, 0), (n, n)).copy_from(&cost.q[i]);
                let s = cost.s_full(i);
                big.view_mut((n, 0), (m, n)).copy_from(&s);
                big.view_mut((0, n), (n, m)).copy_from(&s.transpose());
                big.view_mut((n, n), (m, m)).copy_from(&cost.r_full(i));
                mats.push(big);
                let mut w = DVector::zeros(n + m);
                if let Some(inh) = &model.inhomogeneity {
                    w.rows_mut(0, n)
                        .copy_from(&DVector::from_column_slice(inh.q_bar[k - 1][i].as_slice()));
                    let m1 = model.input_dim1();
                    let m2 = model.input_dim2();
                    w.rows_mut(n, m1).copy_from(&DVector::from_column_slice(
                        inh.rho_bar[k - 1][0][i].as_slice(),
                    ));
                    w.rows_mut(n + m1, m2).copy_from(&DVector::from_column_slice(
                        inh.rho_bar[k - 1][1][i].as_slice(),
                    ));
                }
                ws.push(w);
            }
            (mats, ws)
        };
        let (m1c, w1c) = build_cost(1);
        let (m2c, w2c) = build_cost(2);
        Ok(Engine {
            model,
            a_cl: a_cl_fam.iter().cloned().collect(),
            c_cl: c_cl_fam.iter().cloned().collect(),
            theta: &strategy.theta,
            drift_const,
            diff_const,
            nu_bar,
            mcost: [m1c, m2c],
            wcost: [w1c, w2c],
            lambda,
            x0: x0.clone(),
            i0,
            cfg,
        })
    }

    fn damping(&self, t: f64) -> f64 {
        match self.lambda {
            Some(l) => (-l * t).exp(),
            None => 0.0,
        }
    }

    /// Cost integrands (ℓ₁, ℓ₂) and |x|² at (t, x) in regime i.
    fn integrands(&self, t: f64, i: usize, scratch: &mut Scratch) -> (f64, f64, f64) {
        let n = self.model.state_dim();
        let m = self.model.input_dim();
        let damp = self.damping(t);
        // u = Θ(i)x + e^{−λt} ν̄(i)
        scratch.u.gemv(1.0, &self.theta[i], &scratch.x, 0.0);
        if damp != 0.0 {
            scratch.u.axpy(damp, &self.nu_bar[i], 1.0);
        }
        scratch.z.rows_mut(0, n).copy_from(&scratch.x);
        scratch.z.rows_mut(n, m).copy_from(&scratch.u);
        let mut out = [0.0; 2];
        for (k, slot) in out.iter_mut().enumerate() {
            scratch.mz.gemv(1.0, &self.mcost[k][i], &scratch.z, 0.0);
            let mut val = scratch.z.dot(&scratch.mz);
            if damp != 0.0 {
                val += 2.0 * damp * self.wcost[k][i].dot(&scratch.z);
            }
            *slot = val;
        }
        (out[0], out[1], scratch.x.norm_squared())
    }

    /// Simulate one unit (a path, or an antithetic pair averaged).
    fn run_unit(&self, unit: usize, scratch: &mut Scratch) -> PathStats {
        if self.cfg.antithetic {
            let a = self.run_path(unit, 1.0, scratch);
            let b = self.run_path(unit, -1.0, scratch);
            PathStats {
                cost1: 0.5 * (a.cost1 + b.cost1),
                cost2: 0.5 * (a.cost2 + b.cost2),
                l2: 0.5 * (a.l2 + b.l2),
                tail: 0.5 * (a.tail + b.tail),
            }
        } else {
            self.run_path(unit, 1.0, scratch)
        }
    }

    fn run_path(&self, unit: usize, sign: f64, scratch: &mut Scratch) -> PathStats {
        let cfg = &self.cfg;
        let mut regime_stream =
            Stream::new(derive_key(cfg.seed, &[REGIME_TAG, unit as u64]));
        let path = sample_path_with(
            &self.model.generator,
            self.i0,
            cfg.horizon,
            &mut regime_stream,
        );
        let mut noise = Stream::new(derive_key(cfg.seed, &[BROWNIAN_TAG, unit as u64]));
        scratch.x.copy_from(&self.x0);
        let mut stats = PathStats::default();
        let segments: Vec<(f64, usize)> = path.segments().collect();
        for (seg_idx, &(seg_start, regime)) in segments.iter().enumerate() {
            let seg_end = segments
                .get(seg_idx + 1)
                .map(|&(ts, _)| ts)
                .unwrap_or(cfg.horizon);
            let mut t = seg_start;
            let (mut l1_prev, mut l2_prev, mut x2_prev) = self.integrands(t, regime, scratch);
            while t < seg_end - 1e-15 {
                let h = cfg.dt.min(seg_end - t);
                let damp = self.damping(t);
                scratch.drift.gemv(1.0, &self.a_cl[regime], &scratch.x, 0.0);
                scratch.diff.gemv(1.0, &self.c_cl[regime], &scratch.x, 0.0);
                if damp != 0.0 {
                    scratch.drift.axpy(damp, &self.drift_const[regime], 1.0);
                    scratch.diff.axpy(damp, &self.diff_const[regime], 1.0);
                }
                let dw = sign * noise.normal() * h.sqrt();
                scratch.x_next.copy_from(&scratch.x);
                scratch.x_next.axpy(h, &scratch.drift, 1.0);
                scratch.x_next.axpy(dw, &scratch.diff, 1.0);
                scratch.x.copy_from(&scratch.x_next);
                t += h;
                let (l1, l2, x2) = self.integrands(t, regime, scratch);
                stats.cost1 += 0.5 * h * (l1_prev + l1);
                stats.cost2 += 0.5 * h * (l2_prev + l2);
                stats.l2 += 0.5 * h * (x2_prev + x2);
                l1_prev = l1;
                l2_prev = l2;
                x2_prev = x2;
            }
        }
        stats.tail = scratch.x.norm_squared();
        stats
    }
}

fn thread_count(units: usize) -> usize {
    let requested = std::env::var("REGIME_RICCATI_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get())
                .unwrap_or(1)
        });
    requested.min(units.max(1))
}

fn run_all_units(engine: &Engine<'_>, units: usize, threads: usize) -> Vec<PathStats> {
    let n = engine.model.state_dim();
    let m = engine.model.input_dim();
    let mut slots = vec![PathStats::default(); units];
    if threads <= 1 {
        let mut scratch = Scratch::new(n, m);
        for (unit, slot) in slots.iter_mut().enumerate() {
            *slot = engine.run_unit(unit, &mut scratch);
        }
        return slots;
    }
    let chunk = units.div_ceil(threads);
    std::thread::scope(|scope| {
        for (c, slot_chunk) in slots.chunks_mut(chunk).enumerate() {
            let offset = c * chunk;
            scope.spawn(move || {
                let mut scratch = Scratch::new(n, m);
                for (idx, slot) in slot_chunk.iter_mut().enumerate() {
                    *slot = engine.run_unit(offset + idx, &mut scratch);
                }
            });
        }
    });
    slots
}

fn estimate(values: &[f64]) -> Estimate {
    let count = values.len();
    let mean = pairwise_sum(values) / count as f64;
    if count < 2 {
        return Estimate {
            mean,
            std_error: 0.0,
        };
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (count - 1) as f64;
    Estimate {
        mean,
        std_error: (var / count as f64).sqrt(),
    }
}

fn reduce(engine: &Engine<'_>, slots: &[PathStats]) -> SimReport {
    let take = |f: fn(&PathStats) -> f64| -> Vec<f64> { slots.iter().map(f).collect() };
    SimReport {
        cost: [
            estimate(&take(|s| s.cost1)),
            estimate(&take(|s| s.cost2)),
        ],
        l2_norm: estimate(&take(|s| s.l2)),
        tail_mass: estimate(&take(|s| s.tail)),
        stationarity_residual: None,
        seed: engine.cfg.seed,
        paths: engine.cfg.paths,
        dt: engine.cfg.dt,
        horizon: engine.cfg.horizon,
    }
}

fn certify_stable(
    model: &GameModel,
    strategy: &StrategyPair,
    force: bool,
) -> Result<(), SimError> {
    let check = is_stabilizer(&model.dynamics, &model.generator, &strategy.theta)?;
    if !check.is_stabilizer() && !force {
        let abscissa = match check.spectral.witness {
            crate::stability::Witness::SpectralAbscissa(a) => a,
            _ => f64::NAN,
        };
        return Err(SimError::NotStabilizing { abscissa });
    }
    Ok(())
}

/// Monte Carlo simulation of the closed loop u = Θ(α)X + ν from (x0, i0).
///
/// Refuses certified-unstable loops unless `force` is set. Deterministic
/// given `(cfg.seed, cfg)` regardless of thread count.
pub fn simulate_closed_loop(
    model: &GameModel,
    strategy: &StrategyPair,
    x0: &DVector<f64>,
    i0: usize,
    cfg: SimConfig,
    force: bool,
) -> Result<SimReport, SimError> {
    certify_stable(model, strategy, force)?;
    let engine = Engine::new(model, strategy, x0, i0, cfg)?;
    let units = if cfg.antithetic { cfg.paths / 2 } else { cfg.paths };
    let slots = run_all_units(&engine, units, thread_count(units));
    Ok(reduce(&engine, &slots))
}

/// As [`simulate_closed_loop`] with an explicit thread count (used by the
/// determinism tests).
pub fn simulate_closed_loop_with_threads(
    model: &GameModel,
    strategy: &StrategyPair,
    x0: &DVector<f64>,
    i0: usize,
    cfg: SimConfig,
    force: bool,
    threads: usize,
) -> Result<SimReport, SimError> {
    certify_stable(model, strategy, force)?;
    let engine = Engine::new(model, strategy, x0, i0, cfg)?;
    let units = if cfg.antithetic { cfg.paths / 2 } else { cfg.paths };
    let slots = run_all_units(&engine, units, threads.max(1));
    Ok(reduce(&engine, &slots))
}

/// Empirical L²-stability estimate of the pure feedback loop Θ.
pub struct L2Report {
    pub l2_norm: Estimate,
    pub tail_mass: Estimate,
}

pub fn estimate_l2_stability(
    model: &GameModel,
    theta: &RegimeFamily,
    x0: &DVector<f64>,
    i0: usize,
    cfg: SimConfig,
) -> Result<L2Report, SimError> {
    let strategy = StrategyPair::feedback_only(theta.clone());
    // Always simulates: this op exists to *measure* possibly-unstable loops.
    let engine = Engine::new(model, &strategy, x0, i0, cfg)?;
    let units = if cfg.antithetic { cfg.paths / 2 } else { cfg.paths };
    let slots = run_all_units(&engine, units, thread_count(units));
    let report = reduce(&engine, &slots);
    Ok(L2Report {
        l2_norm: report.l2_norm,
        tail_mass: report.tail_mass,
    })
}

/// Evaluate the stationary optimality condition along simulated paths.
///
/// The adjoint pair is reconstructed from the decoupling formulas
/// Y_k = P_kX + η_k and Z_k = P_k(CX + Du + σ) + ζ with ζ ≡ 0, and the
/// per-player condition B_kᵀY_k + D_kᵀZ_k + S_kᵏX + R_kᵏu + ρ_kᵏ is
/// evaluated at every grid point; the maximum norm over times and paths
/// is returned. For exact solutions this is an algebraic identity and
/// the result is floating-point noise.
pub fn check_stationarity_residual(
    model: &GameModel,
    sol: &CareSolution,
    strategy: &StrategyPair,
    eta: Option<&EtaSolution>,
    x0: &DVector<f64>,
    i0: usize,
    cfg: SimConfig,
) -> Result<f64, SimError> {
    cfg.validate()?;
    let engine = Engine::new(model, strategy, x0, i0, cfg)?;
    let n = model.state_dim();
    let m = model.input_dim();
    let m1 = model.input_dim1();
    let m2 = model.input_dim2();
    // P-families per player: open-rep / closed-nash carry a pair; the
    // zero-sum adjoint uses (P, −P).
    let (p1, p2) = match sol {
        CareSolution::OpenRep(s) => (s.p1.clone(), s.p2.clone()),
        CareSolution::ClosedNash(s) => (s.p1.clone(), s.p2.clone()),
        CareSolution::ZeroSum(s) => (s.p.clone(), s.p.neg()),
    };
    if p1.rows() != n || p1.cols() != n || p1.regime_count() != model.regime_count() {
        return Err(SimError::InvalidConfig(format!(
            "solution P-family has {} regimes of {}×{}, expected {} of {n}×{n}",
            p1.regime_count(),
            p1.rows(),
            p1.cols(),
            model.regime_count()
        )));
    }
    let lambda = model.inhomogeneity.as_ref().map(|inh| inh.lambda);
    let mut scratch = Scratch::new(n, m);
    let mut worst = 0.0_f64;
    let units = if cfg.antithetic { cfg.paths / 2 } else { cfg.paths };
    for unit in 0..units {
        let mut regime_stream =
            Stream::new(derive_key(cfg.seed, &[REGIME_TAG, unit as u64]));
        let path = sample_path_with(&model.generator, i0, cfg.horizon, &mut regime_stream);
        let mut noise = Stream::new(derive_key(cfg.seed, &[BROWNIAN_TAG, unit as u64]));
        scratch.x.copy_from(x0);
        let segments: Vec<(f64, usize)> = path.segments().collect();
        for (seg_idx, &(seg_start, regime)) in segments.iter().enumerate() {
            let seg_end = segments
                .get(seg_idx + 1)
                .map(|&(ts, _)| ts)
                .unwrap_or(cfg.horizon);
            let mut t = seg_start;
            loop {
                let res = stationarity_residual_at(
                    model, &p1, &p2, strategy, eta, lambda, t, regime, &scratch.x, m1, m2,
                );
                worst = worst.max(res);
                if t >= seg_end - 1e-15 {
                    break;
                }
                let h = cfg.dt.min(seg_end - t);
                let damp = match lambda {
                    Some(l) => (-l * t).exp(),
                    None => 0.0,
                };
                scratch
                    .drift
                    .gemv(1.0, &engine.a_cl[regime], &scratch.x, 0.0);
                scratch
                    .diff
                    .gemv(1.0, &engine.c_cl[regime], &scratch.x, 0.0);
                if damp != 0.0 {
                    scratch.drift.axpy(damp, &engine.drift_const[regime], 1.0);
                    scratch.diff.axpy(damp, &engine.diff_const[regime], 1.0);
                }
                let dw = noise.normal() * h.sqrt();
                scratch.x_next.copy_from(&scratch.x);
                scratch.x_next.axpy(h, &scratch.drift, 1.0);
                scratch.x_next.axpy(dw, &scratch.diff, 1.0);
                scratch.x.copy_from(&scratch.x_next);
                t += h;
            }
        }
    }
    Ok(worst)
}

#[allow(clippy::too_many_arguments)]
fn stationarity_residual_at(
    model: &GameModel,
    p1: &RegimeFamily,
    p2: &RegimeFamily,
    strategy: &StrategyPair,
    eta: Option<&EtaSolution>,
    lambda: Option<f64>,
    t: f64,
    i: usize,
    x: &DVector<f64>,
    m1: usize,
    m2: usize,
) -> f64 {
    let damp = match lambda {
        Some(l) => (-l * t).exp(),
        None => 0.0,
    };
    let u = strategy.control(t, i, x);
    let sigma_t = match &model.inhomogeneity {
        Some(inh) => DVector::from_column_slice(inh.sigma_bar[i].as_slice()) * damp,
        None => DVector::zeros(model.state_dim()),
    };
    let d_full = model.dynamics.d_full(i);
    let mut worst = 0.0_f64;
    for (k, p) in [(1usize, p1), (2usize, p2)] {
        // Y_k = P_k x + η_k(t); Z_k = P_k(Cx + Du + σ(t)).
        let mut y = &p[i] * x;
        if let Some(e) = eta {
            let eta_k = if e.eta_bar.len() == 1 {
                &e.eta_bar[0]
            } else {
                &e.eta_bar[k - 1]
            };
            // Zero-sum adjoint of player 2 is the negation.
            let sign = if e.eta_bar.len() == 1 && k == 2 { -1.0 } else { 1.0 };
            y += DVector::from_column_slice(eta_k[i].as_slice()) * (damp * sign);
        }
        let z = &p[i] * (&model.dynamics.c[i] * x + &d_full * &u + &sigma_t);
        let (bk, dk, sk) = match k {
            1 => (&model.dynamics.b1[i], &model.dynamics.d1[i], &model.cost1.s1[i]),
            _ => (&model.dynamics.b2[i], &model.dynamics.d2[i], &model.cost2.s2[i]),
        };
        // R_kᵏ row block of player k's full weight R.
        let cost = model.cost(k);
        let r_row = match k {
            1 => {
                let mut r = DMatrix::zeros(m1, m1 + m2);
                r.view_mut((0, 0), (m1, m1)).copy_from(&cost.r11[i]);
                r.view_mut((0, m1), (m1, m2)).copy_from(&cost.r12[i]);
                r
            }
            _ => {
                let mut r = DMatrix::zeros(m2, m1 + m2);
                r.view_mut((0, 0), (m2, m1))
                    .copy_from(&cost.r12[i].transpose());
                r.view_mut((0, m1), (m2, m2)).copy_from(&cost.r22[i]);
                r
            }
        };
        let mut res = bk.transpose() * &y + dk.transpose() * &z + sk * x + &r_row * &u;
        if let Some(inh) = &model.inhomogeneity {
            res += DVector::from_column_slice(inh.rho_bar[k - 1][k - 1][i].as_slice()) * damp;
        }
        worst = worst.max(res.norm());
    }
    worst
}

/// Re-simulate sequentially and write `t, regime, X_1..X_n, u_1..u_m`
/// CSV rows for every path (paths separated by a blank line).
pub fn dump_trajectories<W: std::io::Write>(
    model: &GameModel,
    strategy: &StrategyPair,
    x0: &DVector<f64>,
    i0: usize,
    cfg: SimConfig,
    out: &mut W,
) -> std::io::Result<()> {
    let engine = match Engine::new(model, strategy, x0, i0, cfg) {
        Ok(e) => e,
        Err(e) => return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string())),
    };
    let n = model.state_dim();
    let m = model.input_dim();
    let mut header = String::from("t,regime");
    for j in 1..=n {
        header.push_str(&format!(",X_{j}"));
    }
    for j in 1..=m {
        header.push_str(&format!(",u_{j}"));
    }
    writeln!(out, "{header}")?;
    let mut scratch = Scratch::new(n, m);
    let units = if cfg.antithetic { cfg.paths / 2 } else { cfg.paths };
    for unit in 0..units {
        let mut regime_stream =
            Stream::new(derive_key(cfg.seed, &[REGIME_TAG, unit as u64]));
        let path = sample_path_with(&model.generator, i0, cfg.horizon, &mut regime_stream);
        let mut noise = Stream::new(derive_key(cfg.seed, &[BROWNIAN_TAG, unit as u64]));
        scratch.x.copy_from(x0);
        let segments: Vec<(f64, usize)> = path.segments().collect();
        for (seg_idx, &(seg_start, regime)) in segments.iter().enumerate() {
            let seg_end = segments
                .get(seg_idx + 1)
                .map(|&(ts, _)| ts)
                .unwrap_or(cfg.horizon);
            let mut t = seg_start;
            loop {
                let u = strategy.control(t, regime, &scratch.x);
                let xs: Vec<String> = scratch.x.iter().map(|v| format!("{v}")).collect();
                let us: Vec<String> = u.iter().map(|v| format!("{v}")).collect();
                writeln!(out, "{t},{},{},{}", regime + 1, xs.join(","), us.join(","))?;
                if t >= seg_end - 1e-15 {
                    break;
                }
                let h = cfg.dt.min(seg_end - t);
                let damp = engine.damping(t);
                scratch
                    .drift
                    .gemv(1.0, &engine.a_cl[regime], &scratch.x, 0.0);
                scratch
                    .diff
                    .gemv(1.0, &engine.c_cl[regime], &scratch.x, 0.0);
                if damp != 0.0 {
                    scratch.drift.axpy(damp, &engine.drift_const[regime], 1.0);
                    scratch.diff.axpy(damp, &engine.diff_const[regime], 1.0);
                }
                let dw = noise.normal() * h.sqrt();
                scratch.x_next.copy_from(&scratch.x);
                scratch.x_next.axpy(h, &scratch.drift, 1.0);
                scratch.x_next.axpy(dw, &scratch.diff, 1.0);
                scratch.x.copy_from(&scratch.x_next);
                t += h;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
