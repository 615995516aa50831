//! Reference values produced by `oracle::Oracle::unit()` (RK4, h = 1e-5,
//! bisection to 1e-10) with v0 = d = 1. Regenerate with
//! `cargo test --test oracle_probe -- --ignored --nocapture`.

pub const L_STAR: [(f64, f64); 5] = [
    (0.25, 0.301002742126528),
    (0.5, 0.150058821521549),
    (1.0, 0.030261750940802),
    (1.5, 0.002488485632687),
    (1e-3, 0.679720358819931),
];

/// v where the omega = 1 separatrix tail first reaches l = 0.
pub const TAIL_V_AT_0_OMEGA_1: f64 = -0.055526953087222;

/// Frequency for G = 0, i = 0, l(0) = 0.
pub const OMEGA_G0_I0_L0: f64 = 0.330958060268313;
