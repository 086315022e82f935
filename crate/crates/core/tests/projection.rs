mod common;

use std::f64::consts::PI;

use common::oracle::Oracle;
use common::{random_solenoidal, rel_l2, taylor_green};
use disclimit::rigid::{boundary_trace, rate_fit, trace_norm};
use disclimit::spectral::{curl_stream, divergence_residual};
use disclimit::{DiscGeometry, GridSpec, RigidProjector, ScalarField, VectorField2};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projector_is_linear_idempotent_and_orthogonal(
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        cx in 0.0f64..1.0,
        cy in 0.0f64..1.0,
        r in 0.08f64..0.2,
    ) {
        let g = GridSpec::new(32, 1.0).unwrap();
        let p = RigidProjector::new(&g, &DiscGeometry::new([cx, cy], r)).unwrap();
        let u = random_solenoidal(g, 5, seed);
        let w = random_solenoidal(g, 5, seed.wrapping_add(1));
        let mut comb = u.scaled(a);
        comb.add_scaled(b, &w);
        let (pu, pw) = (p.project(&u).unwrap(), p.project(&w).unwrap());
        let mut lin = pu.scaled(a);
        lin.add_scaled(b, &pw);
        let pc = p.project(&comb).unwrap();
        let lin_err = pc.sub(&lin).l2_norm() / comb.l2_norm();
        prop_assert!(lin_err <= 1e-9, "linearity {lin_err:e} r {r}");
        prop_assert!(rel_l2(&p.project(&pu).unwrap(), &pu) <= 1e-7);
        prop_assert!(u.sub(&pu).dot(&pu).abs() <= 1e-8 * u.l2_norm().powi(2));
        prop_assert!(divergence_residual(&pu) < 1e-9);
        prop_assert!(p.rigid_residual(&pu).unwrap() < 2e-5);
    }
}

/// `V + w y^perp` inside `2r`, tapered to zero by about `5.6r`.
fn blended_rigid(g: GridSpec, c: [f64; 2], r: f64, v: [f64; 2], w: f64) -> VectorField2 {
    let psi = ScalarField::from_fn(g, |x| {
        let d = g.delta(c, x);
        let rho = d[0].hypot(d[1]);
        let blend = 0.5 * libm::erfc((rho - 3.6 * r) / (0.4 * r));
        blend * (v[0] * d[1] - v[1] * d[0] - 0.5 * w * rho * rho)
    });
    curl_stream(&psi)
}

#[test]
fn rigid_part_is_recovered() {
    let g = GridSpec::new(256, 2.0 * PI).unwrap();
    let (c, r) = ([3.0, 2.5], 0.05 * g.box_len);
    let (v, w) = ([0.7, -0.3], 1.3);
    let u = blended_rigid(g, c, r, v, w);
    let d = RigidProjector::new(&g, &DiscGeometry::new(c, r)).unwrap().decompose(&u).unwrap();
    assert!((d.translation[0] - v[0]).abs() <= 1e-6 * v[0].hypot(v[1]));
    assert!((d.translation[1] - v[1]).abs() <= 1e-6 * v[0].hypot(v[1]));
    assert!((d.rotation - w).abs() <= 1e-6 * w.abs());
    assert!(rel_l2(&d.projected, &u) < 1e-6);
    assert!(d.grad_q2.l2_norm() < 1e-6 * u.l2_norm());
}

#[test]
fn taylor_green_matches_constrained_least_squares_oracle() {
    let g = GridSpec::new(128, 2.0 * PI).unwrap();
    let (c, r) = ([1.3, 2.1], 0.05 * g.box_len);
    let u = taylor_green(g);
    let pu = RigidProjector::new(&g, &DiscGeometry::new(c, r)).unwrap().project(&u).unwrap();
    let oracle = Oracle::new(g, c, r);
    let (po, _, _) = oracle.project(&u, 1e-8, 1e-10, 5_000);
    let (div, strain) = oracle.constraint_residual(&po);
    assert!(div < 1e-3 && strain < 1e-3, "oracle constraints {div:e} {strain:e}");
    let d = rel_l2(&pu, &po);
    assert!(d <= 0.02, "relative distance {d}");
}

#[test]
fn trace_of_a_smooth_field_scales_like_root_r() {
    let g = GridSpec::new(256, 2.0 * PI).unwrap();
    let u = VectorField2::from_fn(g, |x| [1.0 + x[1].sin(), 0.5 * x[0].cos()]);
    let centre = [2.0, 1.0];
    let samples: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|f| {
            let r = f * g.box_len;
            (r, trace_norm(&u, &DiscGeometry::new(centre, r)).unwrap())
        })
        .collect();
    let fit = rate_fit(&samples).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.02, "slope {}", fit.slope);
}

#[test]
fn trace_series_of_uniform_flow() {
    let g = GridSpec::new(64, 1.0).unwrap();
    let u = VectorField2::constant(g, [0.4, -1.1]);
    let t = boundary_trace(&u, &DiscGeometry::new([0.3, 0.6], 0.1)).unwrap();
    for th in [0.0, 1.0, 2.5, 4.0] {
        assert!((t.velocity[0].eval(th) - 0.4).abs() < 1e-12);
        assert!((t.velocity[1].eval(th) + 1.1).abs() < 1e-12);
    }
}

#[test]
fn rigid_fields_are_fixed_points() {
    let g = GridSpec::new(64, 1.0).unwrap();
    let p = RigidProjector::new(&g, &DiscGeometry::new([0.5, 0.5], 0.1)).unwrap();
    let u = VectorField2::constant(g, [1.0, 2.0]);
    assert!(rel_l2(&p.project(&u).unwrap(), &u) < 1e-10);
    let z = VectorField2::zeros(g);
    assert_eq!(p.project(&z).unwrap().l2_norm(), 0.0);
}

#[test]
fn disc_limits_are_enforced() {
    let g = GridSpec::new(64, 1.0).unwrap();
    assert!(RigidProjector::new(&g, &DiscGeometry::new([0.5, 0.5], 0.02)).is_err());
    assert!(RigidProjector::new(&g, &DiscGeometry::new([0.5, 0.5], 0.25)).is_err());
    assert!(RigidProjector::new(&g, &DiscGeometry::new([0.5, 0.5], -0.1)).is_err());
}
