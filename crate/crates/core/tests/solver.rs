use std::f64::consts::PI;

use disclimit::solver::{energy_check, run, run_with};
use disclimit::tracer::SnapshotSeries;
use disclimit::{Coupling, GridSpec, InitialField, SimConfig};

fn uniform_config(r: f64) -> SimConfig {
    let g = GridSpec::new(64, 1.0).unwrap();
    let mut c = SimConfig::new(g, InitialField::Uniform([0.3, -0.2]));
    c.disc_radius = r;
    c.h0 = [0.4, 0.55];
    c.t_end = Some(0.5);
    c
}

#[test]
fn co_moving_body_feels_no_force() {
    for coupling in [Coupling::Rk2, Coupling::SemiImplicit] {
        let mut c = uniform_config(0.1);
        c.coupling = coupling;
        let out = run_with(&c, |_| Ok(())).unwrap();
        for rec in &out.records {
            let t = rec.diag.time;
            assert!(rec.diag.penal_force[0].hypot(rec.diag.penal_force[1]) <= 1e-10);
            assert!((rec.h[0] - (0.4 + 0.3 * t)).abs() < 1e-12);
            assert!((rec.h[1] - (0.55 - 0.2 * t)).abs() < 1e-12);
        }
    }
}

fn rigidified_tg(n: usize) -> SimConfig {
    let g = GridSpec::new(n, 2.0 * PI).unwrap();
    let mut c = SimConfig::new(g, InitialField::parse("rigidified(taylor_green, 0.8)").unwrap());
    c.nu = 0.01;
    c.disc_radius = 0.5;
    c.h0 = [2.0, 1.3];
    c.t_end = Some(0.5);
    c
}

fn coarse_tg() -> SimConfig {
    let mut c = rigidified_tg(32);
    c.ic = InitialField::TaylorGreen { amplitude: 1.0 };
    c.disc_radius = 0.6;
    c
}

#[test]
fn fluid_momentum_is_conserved() {
    let c = rigidified_tg(128);
    let momentum = |s: &disclimit::Solver| {
        let m = s.velocity().mean();
        let a = c.grid.area();
        [a * m[0], a * m[1]]
    };
    let mut series = Vec::new();
    run_with(&c, |s| {
        series.push(momentum(s));
        Ok(())
    })
    .unwrap();
    let p0 = series[0];
    for p in &series {
        assert!((p[0] - p0[0]).abs() < 1e-11 && (p[1] - p0[1]).abs() < 1e-11, "{p:?} vs {p0:?}");
    }
}

#[test]
fn energy_budget_with_a_disc() {
    let out = run_with(&rigidified_tg(128), |_| Ok(())).unwrap();
    let d = out.diagnostics();
    let chk = energy_check(&d);
    assert!(chk.is_monotone(0.0), "max increase {}", chk.max_increase);
    assert!(chk.max_step_defect <= 1e-6 * chk.initial_energy, "defect {}", chk.max_step_defect);
    assert!(d.iter().all(|x| x.penal_dissipation >= 0.0));
}

#[test]
fn semi_implicit_coupling_stays_bounded() {
    let mut c = rigidified_tg(128);
    c.coupling = Coupling::SemiImplicit;
    let out = run_with(&c, |_| Ok(())).unwrap();
    let d = out.diagnostics();
    let e0 = d[0].total_energy();
    assert!(d.iter().all(|x| x.total_energy() <= e0 * (1.0 + 1e-6)));
}

#[test]
fn runs_are_deterministic() {
    let c = coarse_tg();
    let a = run_with(&c, |_| Ok(())).unwrap();
    let b = run_with(&c, |_| Ok(())).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.final_velocity, b.final_velocity);
}

#[test]
fn snapshots_feed_the_tracer() {
    let mut c = coarse_tg();
    c.snapshot_stride = 4;
    let dir = tempfile::tempdir().unwrap();
    let out = run(&c, Some(dir.path()), "tg").unwrap();
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, out.snapshots.len());
    assert!(files >= 2);
    let series = SnapshotSeries::from_dir(dir.path()).unwrap();
    use disclimit::tracer::VelocityProvider;
    let (t0, t1) = series.time_range();
    assert_eq!(t0, 0.0);
    assert!(t1 > 0.0);
}

#[test]
fn unstable_time_step_is_rejected() {
    let mut c = coarse_tg();
    c.dt = Some(1.0);
    assert!(run_with(&c, |_| Ok(())).is_err());
}
