//! Fixtures shared by the benchmarks.

use rmsprop_iss::{AlgoParams, Certificate, Objective, ObjectiveDescriptor, State, DEFAULT_Q};

pub fn reference_params() -> AlgoParams {
    AlgoParams::new(0.5, 1.0, 0.1, 0.1)
}

/// Conditioned quadratic of dimension `dim` with its certificate.
pub fn quadratic(dim: usize) -> (Objective, Certificate) {
    let obj = ObjectiveDescriptor::Quadratic {
        dim,
        condition: 10.0,
        smoothness: 1.0,
        seed: 7,
    }
    .build()
    .expect("valid descriptor");
    let cert = Certificate::new(&reference_params(), &obj, DEFAULT_Q).expect("admissible parameters");
    (obj, cert)
}

/// A state away from equilibrium with every coordinate active.
pub fn spread_state(obj: &Objective) -> State {
    let x = obj.x_star().iter().enumerate().map(|(i, v)| v + 1.0 + 0.1 * i as f64).collect();
    let s = (0..obj.dim()).map(|i| 0.5 + 0.01 * i as f64).collect();
    State::new(x, s).expect("finite state")
}
