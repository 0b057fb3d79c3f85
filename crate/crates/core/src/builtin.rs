//! Built-in example problems and their reference solutions.
//!
//! Three fully specified games over a common three-regime chain: a
//! non-zero-sum game with indefinite cross weights (example 1) and two
//! zero-sum games (examples 2 and 3, the latter satisfying the
//! convexity–concavity sufficient condition at ε₁ = ε₂ = 1). The
//! reference P-families and gain tables are stored to six decimals and
//! back the `reproduce` command and the acceptance suite.

use nalgebra::DMatrix;

use crate::chain::{validate_generator, Generator};
use crate::model::{embed_zero_sum, CostBlock, Dynamics, GameKind, GameModel, RegimeFamily};

/// Common three-regime generator of all built-in examples.
pub fn example_generator() -> Generator {
    validate_generator(DMatrix::from_row_slice(
        3,
        3,
        &[-0.5, 0.3, 0.2, 0.2, -0.4, 0.2, 0.3, 0.2, -0.5],
    ))
    .expect("built-in generator is valid")
}

fn base_a() -> RegimeFamily {
    RegimeFamily::from_rows(&[
        &[&[-3.0, 1.0], &[0.0, -5.0]],
        &[&[-4.0, 0.0], &[0.0, -3.0]],
        &[&[-5.0, 1.0], &[-1.0, -4.0]],
    ])
}

fn base_c() -> RegimeFamily {
    RegimeFamily::from_rows(&[
        &[&[1.0, 1.0], &[0.0, -1.0]],
        &[&[1.0, -1.0], &[1.0, 0.0]],
        &[&[0.0, 1.0], &[-1.0, 1.0]],
    ])
}

/// Dynamics shared by examples 1 and 2.
fn dynamics_examples_1_2() -> Dynamics {
    Dynamics {
        a: base_a(),
        c: base_c(),
        b1: RegimeFamily::from_rows(&[
            &[&[-2.0, 1.0], &[3.0, -5.0]],
            &[&[-1.0, 0.0], &[3.0, -3.0]],
            &[&[-2.0, 1.0], &[0.0, -4.0]],
        ]),
        b2: RegimeFamily::from_rows(&[
            &[&[1.0, 1.0], &[2.0, -5.0]],
            &[&[3.0, 0.0], &[1.0, -3.0]],
            &[&[1.0, 1.0], &[-1.0, -4.0]],
        ]),
        d1: RegimeFamily::from_rows(&[
            &[&[2.0, 1.0], &[0.0, -1.0]],
            &[&[-1.0, 0.0], &[2.0, -3.0]],
            &[&[-4.0, 0.0], &[-1.0, -3.0]],
        ]),
        d2: RegimeFamily::from_rows(&[
            &[&[-3.0, 2.0], &[1.0, -5.0]],
            &[&[-1.0, 1.0], &[1.0, -3.0]],
            &[&[-3.0, -1.0], &[-1.0, 0.0]],
        ]),
    }
}

/// Dynamics of example 3 (same A, C; different input maps).
fn dynamics_example_3() -> Dynamics {
    Dynamics {
        a: base_a(),
        c: base_c(),
        b1: RegimeFamily::from_rows(&[
            &[&[-1.0, 0.0], &[1.0, 1.0]],
            &[&[-1.0, 1.0], &[1.0, 0.0]],
            &[&[0.0, 1.0], &[1.0, 2.0]],
        ]),
        b2: RegimeFamily::from_rows(&[
            &[&[1.0, 1.0], &[0.0, -1.0]],
            &[&[2.0, 0.0], &[1.0, -1.0]],
            &[&[0.0, 1.0], &[2.0, -1.0]],
        ]),
        d1: RegimeFamily::from_rows(&[
            &[&[1.0, 0.0], &[1.0, -1.0]],
            &[&[-1.0, 0.0], &[1.0, 1.0]],
            &[&[-1.0, 0.0], &[-1.0, -1.0]],
        ]),
        d2: RegimeFamily::from_rows(&[
            &[&[1.0, 0.0], &[1.0, 1.0]],
            &[&[0.0, 1.0], &[1.0, 0.0]],
            &[&[1.0, -1.0], &[0.0, 1.0]],
        ]),
    }
}

fn cost_example_1(player: usize) -> CostBlock {
    match player {
        1 => CostBlock {
            q: RegimeFamily::from_rows(&[
                &[&[1.67, -0.05], &[-0.05, 1.63]],
                &[&[1.70, 0.08], &[0.08, 1.66]],
                &[&[1.59, -0.04], &[-0.04, 1.77]],
            ]),
            s1: RegimeFamily::from_rows(&[
                &[&[-0.02, 0.01], &[-0.04, 0.06]],
                &[&[0.02, 0.07], &[0.00, 0.01]],
                &[&[-0.03, -0.01], &[0.06, 0.06]],
            ]),
            s2: RegimeFamily::from_rows(&[
                &[&[-1.25, -0.11], &[0.13, 0.03]],
                &[&[-1.15, -0.11], &[0.13, 0.06]],
                &[&[-1.15, 0.11], &[0.03, 0.06]],
            ]),
            r11: RegimeFamily::from_rows(&[
                &[&[1.61, -0.13], &[-0.13, 1.69]],
                &[&[1.59, -0.10], &[-0.10, 1.65]],
                &[&[1.57, 0.05], &[0.05, 1.67]],
            ]),
            r12: RegimeFamily::from_rows(&[
                &[&[0.01, -1.03], &[-1.04, 0.18]],
                &[&[0.07, -1.03], &[-1.04, 0.08]],
                &[&[0.07, -0.03], &[-0.04, 0.08]],
            ]),
            r22: RegimeFamily::from_rows(&[
                &[&[-0.13, 0.04], &[0.04, -0.15]],
                &[&[-0.19, 0.02], &[0.02, -0.13]],
                &[&[-0.11, -0.02], &[-0.02, -0.15]],
            ]),
        },
        2 => CostBlock {
            q: RegimeFamily::from_rows(&[
                &[&[1.69, -0.02], &[-0.02, 1.52]],
                &[&[1.67, 0.05], &[0.05, 1.64]],
                &[&[1.59, 0.03], &[0.03, 1.61]],
            ]),
            s1: RegimeFamily::from_rows(&[
                &[&[-0.02, -0.07], &[0.00, -0.01]],
                &[&[0.02, -0.01], &[0.04, -0.06]],
                &[&[0.03, 0.01], &[-0.06, -0.06]],
            ]),
            s2: RegimeFamily::from_rows(&[
                &[&[0.09, -0.05], &[-0.04, -0.03]],
                &[&[0.14, -0.01], &[-0.03, 0.05]],
                &[&[-0.08, 0.05], &[-0.07, -0.01]],
            ]),
            r11: RegimeFamily::from_rows(&[
                &[&[-1.59, 0.10], &[0.10, -1.65]],
                &[&[-1.61, 0.13], &[0.13, -1.69]],
                &[&[-1.57, -0.05], &[-0.05, -1.67]],
            ]),
            r12: RegimeFamily::from_rows(&[
                &[&[-0.07, 1.03], &[1.04, -0.08]],
                &[&[-0.01, 1.03], &[1.04, -0.18]],
                &[&[-0.07, 0.03], &[0.04, -0.08]],
            ]),
            r22: RegimeFamily::from_rows(&[
                &[&[1.68, -0.03], &[-0.03, 1.71]],
                &[&[1.65, -0.01], &[-0.01, 1.65]],
                &[&[1.75, -0.05], &[-0.05, 1.62]],
            ]),
        },
        _ => panic!("player index must be 1 or 2"),
    }
}

fn cost_example_2() -> CostBlock {
    CostBlock {
        q: RegimeFamily::from_rows(&[
            &[&[1.11, 0.11], &[0.11, 1.02]],
            &[&[1.01, 0.13], &[0.13, -1.12]],
            &[&[-1.01, 0.21], &[0.21, -1.02]],
        ]),
        s1: RegimeFamily::zeros(3, 2, 2),
        s2: RegimeFamily::zeros(3, 2, 2),
        r11: RegimeFamily::from_rows(&[
            &[&[3.11, 1.03], &[1.03, 2.19]],
            &[&[5.37, -0.48], &[-0.48, 5.63]],
            &[&[5.11, 0.23], &[0.23, 6.19]],
        ]),
        r12: RegimeFamily::zeros(3, 2, 2),
        r22: RegimeFamily::from_rows(&[
            &[&[-6.82, -0.34], &[-0.34, -5.88]],
            &[&[-6.01, -0.14], &[-0.14, -5.88]],
            &[&[-3.82, -1.04], &[-1.04, -2.88]],
        ]),
    }
}

fn cost_example_3() -> CostBlock {
    let mut cost = cost_example_2();
    cost.r11 = RegimeFamily::from_rows(&[
        &[&[4.11, 1.03], &[1.03, 6.19]],
        &[&[5.37, -0.48], &[-0.48, 5.63]],
        &[&[5.11, 0.23], &[0.23, 6.19]],
    ]);
    cost.r22 = RegimeFamily::from_rows(&[
        &[&[-6.82, -0.34], &[-0.34, -5.88]],
        &[&[-6.01, -0.14], &[-0.14, -5.88]],
        &[&[-5.82, -1.04], &[-1.04, -5.88]],
    ]);
    cost
}

/// Build built-in example `id` ∈ {1, 2, 3}.
pub fn example_model(id: u8) -> GameModel {
    let model = match id {
        1 => GameModel {
            dynamics: dynamics_examples_1_2(),
            cost1: cost_example_1(1),
            cost2: cost_example_1(2),
            generator: example_generator(),
            inhomogeneity: None,
            kind: GameKind::NonZeroSum,
        }
        .validated(),
        2 => embed_zero_sum(
            dynamics_examples_1_2(),
            example_generator(),
            cost_example_2(),
            None,
        ),
        3 => embed_zero_sum(
            dynamics_example_3(),
            example_generator(),
            cost_example_3(),
            None,
        ),
        _ => panic!("example id must be 1, 2 or 3"),
    };
    model.expect("built-in examples validate")
}

/// Reference solution tables, printed to six decimals.
pub struct ReferenceSolution {
    /// P-families: `[P]` for zero-sum, `[P₁, P₂]` otherwise.
    pub p: Vec<RegimeFamily>,
    /// Full m×n gain family.
    pub theta: RegimeFamily,
}

/// Reference open-loop-representation solution of example 1
/// (nonsymmetric P-families and the representation gain Θ*).
pub fn reference_ex1_open_rep() -> ReferenceSolution {
    ReferenceSolution {
        p: vec![
            RegimeFamily::from_rows(&[
                &[&[0.299917, 0.062075], &[0.053329, 0.173778]],
                &[&[0.284044, -0.023310], &[-0.018440, 0.246700]],
                &[&[0.169793, 0.003297], &[0.006381, 0.169369]],
            ]),
            RegimeFamily::from_rows(&[
                &[&[0.317295, 0.064732], &[0.060875, 0.166318]],
                &[&[0.214041, -0.027260], &[-0.018476, 0.239175]],
                &[&[0.161026, 0.010229], &[0.016542, 0.151165]],
            ]),
        ],
        theta: RegimeFamily::from_rows(&[
            &[
                &[-0.005455, -0.357973],
                &[-0.034157, 0.209280],
                &[0.073937, -0.035403],
                &[-0.022786, 0.018593],
            ],
            &[
                &[0.217417, -0.204680],
                &[0.032269, -0.004510],
                &[-0.440579, -0.012847],
                &[0.021868, 0.188713],
            ],
            &[
                &[0.135889, 0.051144],
                &[-0.230434, 0.320481],
                &[-0.109368, 0.086127],
                &[-0.051071, 0.403312],
            ],
        ]),
    }
}

/// Reference closed-loop Nash solution of example 1 (symmetric
/// P-families and the equilibrium gain Θ̂).
pub fn reference_ex1_closed_nash() -> ReferenceSolution {
    ReferenceSolution {
        p: vec![
            RegimeFamily::from_rows(&[
                &[&[0.284341, 0.053644], &[0.053644, 0.177155]],
                &[&[0.299351, -0.021964], &[-0.021964, 0.248061]],
                &[&[0.176490, 0.005881], &[0.005881, 0.156280]],
            ]),
            RegimeFamily::from_rows(&[
                &[&[0.315689, 0.065654], &[0.065654, 0.119917]],
                &[&[0.199450, -0.004419], &[-0.004419, 0.214877]],
                &[&[0.146503, 0.026456], &[0.026456, 0.127204]],
            ]),
        ],
        theta: RegimeFamily::from_rows(&[
            &[
                &[-0.013230, -0.358866],
                &[-0.021533, 0.215132],
                &[0.068180, -0.023482],
                &[-0.025340, 0.042498],
            ],
            &[
                &[0.246859, -0.212545],
                &[0.037244, -0.018403],
                &[-0.429070, -0.045493],
                &[0.034625, 0.183211],
            ],
            &[
                &[0.130566, 0.073648],
                &[-0.229734, 0.304168],
                &[-0.103527, 0.070543],
                &[-0.021569, 0.333343],
            ],
        ]),
    }
}

/// Reference saddle solution of example 2.
pub fn reference_ex2_zero_sum() -> ReferenceSolution {
    ReferenceSolution {
        p: vec![RegimeFamily::from_rows(&[
            &[&[0.201466, 0.054055], &[0.054055, 0.102922]],
            &[&[0.091779, -0.005053], &[-0.005053, -0.206651]],
            &[&[-0.156160, 0.045988], &[0.045988, -0.166436]],
        ])],
        theta: RegimeFamily::from_rows(&[
            &[
                &[-0.047278, -0.209312],
                &[-0.020200, 0.209932],
                &[-0.039428, -0.030322],
                &[0.023878, 0.047724],
            ],
            &[
                &[0.116822, 0.101032],
                &[-0.123268, -0.121514],
                &[-0.014035, -0.030890],
                &[0.143139, 0.110170],
            ],
            &[
                &[-0.139384, -0.045542],
                &[0.189717, -0.231162],
                &[0.018796, 0.083455],
                &[-0.070742, 0.228681],
            ],
        ]),
    }
}

/// Reference open-loop-representation solution of example 3.
pub fn reference_ex3_zero_sum() -> ReferenceSolution {
    ReferenceSolution {
        p: vec![RegimeFamily::from_rows(&[
            &[&[0.208881, 0.056594], &[0.056594, 0.119522]],
            &[&[0.097670, 0.000771], &[0.000771, -0.194399]],
            &[&[-0.135584, 0.036854], &[0.036854, -0.160611]],
        ])],
        theta: RegimeFamily::from_rows(&[
            &[
                &[-0.034391, -0.030087],
                &[0.007260, -0.024662],
                &[0.070939, 0.022068],
                &[0.033041, -0.022884],
            ],
            &[
                &[0.077430, 0.017903],
                &[0.027153, 0.001070],
                &[-0.003238, -0.032191],
                &[0.015675, 0.017204],
            ],
            &[
                &[0.016852, -0.011859],
                &[0.036492, 0.025103],
                &[0.005594, -0.076541],
                &[0.004448, 0.038961],
            ],
        ]),
    }
}
