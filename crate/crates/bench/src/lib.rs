//! Shared fixtures for the benchmarks.

use tvfcgcg::{generate_square_mesh, PdeProblem, PdeVariant, TargetSpec};

/// The elliptic example problem on an `n × n` mesh.
pub fn elliptic_example(n: usize) -> PdeProblem {
    let mesh = generate_square_mesh(n, 0.1, 1).expect("valid mesh parameters");
    let mut p = PdeProblem::new(mesh, PdeVariant::Elliptic, 1e-4)
        .expect("valid problem")
        .with_include_omega(true)
        .with_nonneg(false);
    p.set_target_spec(&TargetSpec::Indicator {
        cx: 0.0,
        cy: 0.0,
        w: 1.0,
        h: 1.0,
    })
    .expect("valid target");
    p
}

/// The parabolic example problem on an `n × n` mesh.
pub fn parabolic_example(n: usize) -> PdeProblem {
    let mesh = generate_square_mesh(n, 0.1, 1).expect("valid mesh parameters");
    let mut p = PdeProblem::new(
        mesh,
        PdeVariant::Parabolic {
            horizon: 0.02,
            steps: 9,
        },
        1e-4,
    )
    .expect("valid problem")
    .with_include_omega(true);
    p.set_target_spec(&TargetSpec::ForwardOf(tvfcgcg::pde::ControlSource::Phantom))
        .expect("valid target");
    p
}
