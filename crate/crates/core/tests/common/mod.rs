#![allow(dead_code)]

pub mod oracle;

use disclimit::{GridSpec, VectorField2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random divergence-free field from a stream function with integer modes
/// `1 <= |m|_inf <= kmax`, evaluated analytically at the nodes.
pub fn random_solenoidal(grid: GridSpec, kmax: i64, seed: u64) -> VectorField2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_pi_l = 2.0 * std::f64::consts::PI / grid.box_len;
    let mut modes = Vec::new();
    for mx in 0..=kmax {
        for my in -kmax..=kmax {
            if mx == 0 && my <= 0 {
                continue;
            }
            let decay = 1.0 / (1.0 + (mx * mx + my * my) as f64);
            modes.push((mx as f64 * two_pi_l, my as f64 * two_pi_l, decay * rng.gen_range(-1.0..1.0), decay * rng.gen_range(-1.0..1.0)));
        }
    }
    VectorField2::from_fn(grid, |x| {
        let (mut u, mut v) = (0.0, 0.0);
        for &(kx, ky, a, b) in &modes {
            let ph = kx * x[0] + ky * x[1];
            // psi = a cos + b sin; u = dpsi/dy, v = -dpsi/dx
            let d = -a * ph.sin() + b * ph.cos();
            u += ky * d;
            v -= kx * d;
        }
        [u, v]
    })
}

pub fn taylor_green(grid: GridSpec) -> VectorField2 {
    let k = 2.0 * std::f64::consts::PI / grid.box_len;
    VectorField2::from_fn(grid, |x| [(k * x[0]).sin() * (k * x[1]).cos(), -(k * x[0]).cos() * (k * x[1]).sin()])
}

pub fn rel_l2(a: &VectorField2, b: &VectorField2) -> f64 {
    a.sub(b).l2_norm() / b.l2_norm()
}
