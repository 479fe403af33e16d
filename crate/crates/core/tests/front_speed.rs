use wavespeed_core::charfun::ModelParams;
use wavespeed_core::front_sim::{run, BirthFunction, SimConfig};
use wavespeed_core::kernel::Kernel;

fn coarse(t_end: f64) -> SimConfig {
    SimConfig {
        length: 200.0,
        dx: 0.2,
        t_end,
        ..SimConfig::default()
    }
}

fn speed(cfg: &SimConfig, k: &Kernel, h: f64) -> (f64, f64) {
    let params = ModelParams::new(2.0, h).unwrap();
    let r = run(cfg, params, k, BirthFunction::nicholson(2.0).unwrap()).unwrap();
    assert_eq!(r.clamp_events, 0);
    (r.fit.speed, r.reference_c_star.unwrap())
}

#[test]
fn kpp_front_approaches_two() {
    let (c, reference) = speed(&coarse(60.0), &Kernel::dirac(), 0.0);
    assert_eq!(reference, 2.0);
    assert!((c / 2.0 - 1.0).abs() < 0.05, "{c}");
}

#[test]
fn refining_the_grid_does_not_move_the_front_much() {
    let k = Kernel::dirac();
    let (coarse_speed, _) = speed(&coarse(40.0), &k, 0.5);
    let fine = SimConfig { dx: 0.1, ..coarse(40.0) };
    let (fine_speed, _) = speed(&fine, &k, 0.5);
    assert!((coarse_speed / fine_speed - 1.0).abs() < 0.02, "{coarse_speed} vs {fine_speed}");
}

#[test]
fn delayed_nonlocal_front_tracks_critical_speed() {
    let k = Kernel::gaussian(1.0).unwrap();
    let mut last = f64::INFINITY;
    for h in [0.0, 1.0, 2.0] {
        let (c, reference) = speed(&coarse(50.0), &k, h);
        assert!((c / reference - 1.0).abs() < 0.1, "h={h}: {c} vs {reference}");
        assert!(c < last);
        last = c;
    }
}

#[test]
fn capped_birth_function_gives_the_same_speed() {
    let k = Kernel::dirac();
    let params = ModelParams::new(2.0, 0.0).unwrap();
    let cfg = coarse(40.0);
    let a = run(&cfg, params, &k, BirthFunction::nicholson(2.0).unwrap()).unwrap();
    let b = run(&cfg, params, &k, BirthFunction::capped_linear(2.0, 0.5).unwrap()).unwrap();
    assert!((a.fit.speed / b.fit.speed - 1.0).abs() < 0.03);
}
