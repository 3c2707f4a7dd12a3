use spiral_anchor::config::RdasConfig;
use spiral_anchor::rdas::{read_snapshot, write_snapshot, Field2D, RdasModel, RdasState, Simulation, TipPath, Terms};

fn grid_cfg(n: usize, half_width: f64) -> RdasConfig {
    RdasConfig { n, half_width, ..RdasConfig::default() }
}

fn smooth_state(model: &RdasModel<f64>) -> RdasState<f64> {
    let (ur, vr) = model.rest;
    let u = Field2D::from_fn(model.n, model.h, model.origin, |x, y| ur + 1.5 * (-(x * x + 0.5 * y * y) / 8.0).exp()).unwrap();
    let v = Field2D::from_fn(model.n, model.h, model.origin, |x, y| vr + 0.3 * (-((x - 1.0).powi(2) + y * y) / 10.0).exp()).unwrap();
    RdasState { u, v, step: 0 }
}

fn run_to(cfg: &RdasConfig, state: RdasState<f64>, steps: u64) -> RdasState<f64> {
    let model = RdasModel::new(cfg).unwrap();
    let mut sim = Simulation::new(cfg, model, state).unwrap();
    sim.advance_to(steps, |_| Ok(())).unwrap();
    sim.state
}

fn distance(a: &Field2D<f64>, b: &Field2D<f64>) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn midpoint_rule_is_second_order_in_time() {
    let t = 0.5;
    let mut finals = Vec::new();
    for dt in [0.02, 0.01, 0.005] {
        let cfg = RdasConfig { dt, ..grid_cfg(41, 10.0) };
        let model = RdasModel::new(&cfg).unwrap();
        let start = smooth_state(&model);
        finals.push(run_to(&cfg, start, (t / dt).round() as u64));
    }
    let coarse = distance(&finals[0].u, &finals[1].u) + distance(&finals[0].v, &finals[1].v);
    let fine = distance(&finals[1].u, &finals[2].u) + distance(&finals[1].v, &finals[2].v);
    let slope = (coarse / fine).log2();
    assert!((1.7..=2.3).contains(&slope), "{slope}");
}

#[test]
fn pure_diffusion_keeps_the_trapezoid_mass() {
    let cfg = grid_cfg(50, 8.0);
    let mut model = RdasModel::new(&cfg).unwrap();
    model.terms = Terms::DIFFUSION_ONLY;
    let start = smooth_state(&model);
    let mut sim = Simulation::new(&cfg, model, start).unwrap();
    let mut last = sim.state.u.weighted_sum();
    let mut worst = 0.0f64;
    sim.advance_to(400, |s| {
        let m = s.u.weighted_sum();
        worst = worst.max((m - last).abs());
        last = m;
        Ok(())
    })
    .unwrap();
    assert!(worst <= 1e-12 * 50.0 * 50.0, "{worst}");
}

fn spiral_path(cfg: &RdasConfig) -> (TipPath<f64>, RdasState<f64>) {
    let mut sim = Simulation::<f64>::start(cfg).unwrap();
    sim.advance_to(cfg.steps(), |_| Ok(())).unwrap();
    sim.finish(cfg.late_fraction).unwrap()
}

#[test]
fn worker_count_does_not_change_the_run() {
    let cfg = RdasConfig { t_end: 5.0, record_stride: 10, ..grid_cfg(64, 15.0) };
    let runs: Vec<_> = [1, 3]
        .iter()
        .map(|&k| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap().install(|| spiral_path(&cfg)))
        .collect();
    assert_eq!(runs[0].0, runs[1].0);
    for (a, b) in runs[0].1.u.values().iter().zip(runs[1].1.u.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn resumed_run_matches_the_uninterrupted_one() {
    let cfg = RdasConfig { t_end: 4.0, ..grid_cfg(48, 12.0) };
    let whole = spiral_path(&cfg).1;
    let mut sim = Simulation::<f64>::start(&cfg).unwrap();
    sim.advance_to(cfg.steps() / 2, |_| Ok(())).unwrap();
    let mut buf = Vec::new();
    write_snapshot(&mut buf, sim.time(), &[&sim.state.u, &sim.state.v]).unwrap();
    let model = RdasModel::new(&cfg).unwrap();
    let state = read_snapshot(&buf[..]).unwrap().to_state(model.origin, cfg.dt).unwrap();
    assert_eq!(state.step, cfg.steps() / 2);
    let resumed = run_to(&cfg, state, cfg.steps());
    assert_eq!(resumed.step, whole.step);
    assert!(resumed.u.values().iter().zip(whole.u.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(resumed.v.values().iter().zip(whole.v.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn mirrored_start_gives_a_mirrored_tip_path() {
    let cfg = RdasConfig { t_end: 40.0, advection: 0.0, bump_center: [0.0, 0.0], ..grid_cfg(101, 30.0) };
    let model = RdasModel::<f64>::new(&cfg).unwrap();
    let (u, v) = spiral_anchor::rdas::init_spiral(&cfg, &model).unwrap();
    let n = cfg.n;
    let mirror = |f: &Field2D<f64>| {
        let mut g = f.clone();
        for i in 0..n {
            for j in 0..n {
                g.set(i, j, f.get(n - 1 - i, j));
            }
        }
        g
    };
    let (mu, mv) = (mirror(&u), mirror(&v));
    let mut a = Simulation::new(&cfg, model.clone(), RdasState { u, v, step: 0 }).unwrap();
    let mut b = Simulation::new(&cfg, model, RdasState { u: mu, v: mv, step: 0 }).unwrap();
    a.advance_to(cfg.steps(), |_| Ok(())).unwrap();
    b.advance_to(cfg.steps(), |_| Ok(())).unwrap();
    assert_eq!(a.path.samples.len(), b.path.samples.len());
    assert!(a.path.samples.len() > 50);
    let h = cfg.h();
    for (p, q) in a.path.samples.iter().zip(&b.path.samples) {
        assert!((p.x1 + q.x1).abs() < h && (p.x2 - q.x2).abs() < h, "{p:?} {q:?}");
    }
}

#[test]
fn free_spiral_tip_traces_a_circle() {
    let cfg = RdasConfig { t_end: 60.0, advection: 0.0, bump_amplitude: 0.0, ..RdasConfig::default() };
    let (path, _) = spiral_path(&cfg);
    let last = path.revolutions.last().expect("at least one revolution");
    let pts: Vec<(f64, f64)> = path.samples.iter().filter(|s| s.t >= last.t_start && s.t <= last.t_end).map(|s| (s.x1, s.x2)).collect();
    let (cx, cy, r) = fit_circle(&pts);
    let rms = (pts.iter().map(|(x, y)| ((x - cx).hypot(y - cy) - r).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    assert!(rms < 0.1 * r, "rms {rms} radius {r}");
}

/// Least-squares circle through `x^2 + y^2 + D x + E y + F = 0`.
fn fit_circle(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(x, y) in pts {
        let row = [x, y, 1.0];
        let z = -(x * x + y * y);
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += row[a] * row[b];
            }
            rhs[a] += row[a] * z;
        }
    }
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d0 = det(&m);
    let solve = |k: usize| {
        let mut mk = m;
        for a in 0..3 {
            mk[a][k] = rhs[a];
        }
        det(&mk) / d0
    };
    let (d, e, f) = (solve(0), solve(1), solve(2));
    let (cx, cy) = (-d / 2.0, -e / 2.0);
    (cx, cy, (cx * cx + cy * cy - f).sqrt())
}
