//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Criteria 6 to 10 drive the `rfmp` binary end to end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfmp::flowmatch;
use rfmp::manifold::{self, ManifoldKind, ManifoldPoint, TangentVector};
use rfmp::metrics;
use rfmp::net::VectorFieldNet;
use rfmp::odeint::{self, SolverConfig};
use rfmp::ActionHorizon;

const S2: ManifoldKind = ManifoldKind::Sphere { intrinsic_dim: 2 };

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let line = format!("acceptance {id:>2} {name}: {} [{detail}]\n", if pass { "PASS" } else { "FAIL" });
    // Bypasses the test harness capture so the line always shows.
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_sphere_point(rng: &mut ChaCha8Rng) -> ManifoldPoint {
    loop {
        let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if (0.1..=1.0).contains(&n) {
            return ManifoldPoint::new(v.iter().map(|c| c / n).collect(), S2).unwrap();
        }
    }
}

fn random_plane_point(rng: &mut ChaCha8Rng) -> ManifoldPoint {
    ManifoldPoint::euclidean(vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)]).unwrap()
}

fn random_tangent(x: &ManifoldPoint, max_len: f64, rng: &mut ChaCha8Rng) -> TangentVector {
    let d = x.coords().len();
    let raw: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v = manifold::project_to_tangent(&raw, x).unwrap();
    let n = v.norm();
    if n < 1e-6 {
        return TangentVector::zero(x);
    }
    v.scale(rng.random_range(0.0..max_len) / n)
}

/// Worst deviation over the four geometric identities for one random instance.
fn geometry_instance(kind: ManifoldKind, rng: &mut ChaCha8Rng) -> Option<f64> {
    let point = |rng: &mut ChaCha8Rng| match kind {
        ManifoldKind::Sphere { .. } => random_sphere_point(rng),
        ManifoldKind::Euclidean { .. } => random_plane_point(rng),
    };
    let (x, y, z) = (point(rng), point(rng), point(rng));
    if kind.ambient_dim() == 3 && dot(x.coords(), y.coords()) < -0.99 {
        return None;
    }
    let mut worst: f64 = 0.0;

    let u = random_tangent(&x, 3.0, rng);
    let e = manifold::exp_map(&x, &u).unwrap();
    worst = worst.max(max_abs_diff(manifold::log_map(&x, &e).unwrap().coords(), u.coords()));
    let l = manifold::log_map(&x, &y).unwrap();
    worst = worst.max(max_abs_diff(manifold::exp_map(&x, &l).unwrap().coords(), y.coords()));

    let v = random_tangent(&x, 2.0, rng);
    let pu = manifold::parallel_transport(&u, &x, &y).unwrap();
    let pv = manifold::parallel_transport(&v, &x, &y).unwrap();
    worst = worst.max((pu.norm() - u.norm()).abs());
    worst = worst.max((dot(pu.coords(), pv.coords()) - dot(u.coords(), v.coords())).abs());

    if kind.ambient_dim() == 3 {
        worst = worst.max(dot(pu.coords(), y.coords()).abs());
        worst = worst.max(dot(l.coords(), x.coords()).abs());
        worst = worst.max((norm(e.coords()) - 1.0).abs());
    }

    let d = |a: &ManifoldPoint, b: &ManifoldPoint| manifold::geodesic_distance(a, b).unwrap();
    worst = worst.max(d(&x, &z) - d(&x, &y) - d(&y, &z));
    Some(worst)
}

#[test]
fn criterion_01_geometry() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut counts = Vec::new();
    let mut worst: f64 = 0.0;
    for kind in [ManifoldKind::Euclidean { dim: 2 }, S2] {
        let mut n = 0;
        while n < 10_000 {
            if let Some(w) = geometry_instance(kind, &mut rng) {
                worst = worst.max(w);
                n += 1;
            }
        }
        counts.push(n);
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        "geometry",
        worst <= 1e-9 && secs < 5.0,
        &format!("{} R2 + {} S2 instances, max deviation {worst:.2e}, {secs:.2}s", counts[0], counts[1]),
    );
}

/// Closed-form spherical interpolation between two unit vectors.
fn slerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let theta = dot(a, b).clamp(-1.0, 1.0).acos();
    if theta < 1e-12 {
        return a.to_vec();
    }
    let (wa, wb) = (((1.0 - t) * theta).sin() / theta.sin(), (t * theta).sin() / theta.sin());
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

#[test]
fn criterion_02_target_field() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut worst_point: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let len = rng.random_range(1..=4);
        let a0: Vec<ManifoldPoint> = (0..len).map(|_| random_sphere_point(&mut rng)).collect();
        let a1: Vec<ManifoldPoint> = (0..len).map(|_| random_sphere_point(&mut rng)).collect();
        if a0.iter().zip(&a1).any(|(p, q)| dot(p.coords(), q.coords()) < -0.99) {
            continue;
        }
        let t = rng.random_range(h..1.0 - h);
        let s = flowmatch::sample_geodesic_path(
            &ActionHorizon::new(a0.clone()).unwrap(),
            &ActionHorizon::new(a1.clone()).unwrap(),
            t,
        )
        .unwrap();
        for i in 0..len {
            let (p, q) = (a0[i].coords(), a1[i].coords());
            let fd: Vec<f64> = slerp(p, q, t + h)
                .iter()
                .zip(slerp(p, q, t - h))
                .map(|(f, b)| (f - b) / (2.0 * h))
                .collect();
            worst = worst.max(max_abs_diff(&fd, s.target_field[i].coords()));
            worst_point = worst_point.max(max_abs_diff(&slerp(p, q, t), s.point.points()[i].coords()));
        }
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        2,
        "target field",
        worst <= 1e-6 && worst_point <= 1e-9 && secs < 5.0,
        &format!("{n} samples on S2, max |u - FD| {worst:.2e}, max path deviation {worst_point:.2e}, {secs:.2}s"),
    );
}

#[test]
fn criterion_03_gradient_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst: f64 = 0.0;
    let nets = 25;
    for _ in 0..nets {
        let depth = rng.random_range(1..=3);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(2..=8)).collect();
        let (a_dim, o_dim) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let mut net = VectorFieldNet::new(1 + a_dim + o_dim, &hidden, a_dim, &mut rng).unwrap();
        for b in net.betas_mut() {
            *b = rng.random_range(0.5..1.5);
        }
        for p in net.params_mut() {
            *p += rng.random_range(-0.1..0.1);
        }
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let (action, obs, residual) = (draw(a_dim), draw(o_dim), draw(a_dim));
        let t = draw(1)[0].abs();
        let grads = net.backward(t, &action, &obs, &residual).unwrap();
        let f = |n: &VectorFieldNet| dot(&n.forward(t, &action, &obs).unwrap(), &residual);
        let step = 1e-6;
        let mut probe = net.clone();
        for k in 0..net.num_params() {
            let w = net.params()[k];
            probe.params_mut()[k] = w + step;
            let up = f(&probe);
            probe.params_mut()[k] = w - step;
            let down = f(&probe);
            probe.params_mut()[k] = w;
            let fd = (up - down) / (2.0 * step);
            let a = grads.as_slice()[k];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-5));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        3,
        "gradient oracle",
        worst < 1e-4 && secs < 30.0,
        &format!("{nets} nets, max relative error {worst:.2e}, {secs:.2}s"),
    );
}

#[test]
fn criterion_04_solver_orders() {
    let start = Instant::now();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x0 = ActionHorizon::new(vec![ManifoldPoint::new(vec![s, 0.0, s], S2).unwrap()]).unwrap();
    let exact = [s * 1f64.cos(), s * 1f64.sin(), s];
    let rotation = |_t: f64, a: &ActionHorizon| -> rfmp::Result<Vec<TangentVector>> {
        let p = &a.points()[0];
        let c = p.coords();
        Ok(vec![TangentVector::new(vec![-c[1], c[0], 0.0], p.clone())?])
    };
    let errs: Vec<f64> = [10, 20, 40, 80, 160]
        .iter()
        .map(|&n| {
            let end = odeint::integrate_flow(rotation, &x0, &SolverConfig::GeodesicEuler { num_steps: n }).unwrap();
            let e = ManifoldPoint::new(exact.to_vec(), S2).unwrap();
            manifold::geodesic_distance(&end.points()[0], &e).unwrap()
        })
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
    let first_order = ratios.iter().all(|r| (1.7..=2.3).contains(r));

    let y0 = ActionHorizon::new(vec![ManifoldPoint::euclidean(vec![1.0, -0.5, 2.0]).unwrap()]).unwrap();
    let decay = |_t: f64, a: &ActionHorizon| -> rfmp::Result<Vec<TangentVector>> {
        let p = &a.points()[0];
        Ok(vec![TangentVector::new(p.coords().iter().map(|c| -c).collect(), p.clone())?])
    };
    let cfg = SolverConfig::Dopri5 { rtol: 1e-8, atol: 1e-8, max_steps: 10_000 };
    let end = odeint::integrate_flow(decay, &y0, &cfg).unwrap();
    let target: Vec<f64> = [1.0, -0.5, 2.0].iter().map(|c| c * (-1f64).exp()).collect();
    let dopri_err = max_abs_diff(end.points()[0].coords(), &target);

    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        "solver orders",
        first_order && dopri_err <= 1e-6 && secs < 10.0,
        &format!(
            "Euler halving ratios {:?}, Dopri5 decay error {dopri_err:.2e}, {secs:.2}s",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    );
}

/// Minimum accumulated cost and path length over every monotone alignment.
fn exhaustive_dtw(a: &[ManifoldPoint], b: &[ManifoldPoint]) -> f64 {
    fn walk(a: &[ManifoldPoint], b: &[ManifoldPoint], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + manifold::geodesic_distance(&a[i], &b[j]).unwrap();
        let (last_i, last_j) = (i + 1 == a.len(), j + 1 == b.len());
        if last_i && last_j {
            *best = best.min(acc);
            return;
        }
        if !last_i {
            walk(a, b, i + 1, j, acc, best);
        }
        if !last_j {
            walk(a, b, i, j + 1, acc, best);
        }
        if !last_i && !last_j {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

#[test]
fn criterion_05_dtw_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst: f64 = 0.0;
    let instances = 200;
    for k in 0..instances {
        let (n, m) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let sphere = k % 2 == 1;
        let mut seq = |len: usize| -> Vec<ManifoldPoint> {
            (0..len)
                .map(|_| if sphere { random_sphere_point(&mut rng) } else { random_plane_point(&mut rng) })
                .collect()
        };
        let (a, b) = (seq(n), seq(m));
        let best = exhaustive_dtw(&a, &b);
        worst = worst.max((metrics::dtw_cost(&a, &b).unwrap() - best).abs());
        worst = worst.max((metrics::dtwd(&a, &b).unwrap() - best / (n + m - 1) as f64).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        5,
        "DTW oracle",
        worst <= 1e-12 && secs < 10.0,
        &format!("{instances} instances (R2 and S2, lengths 1..=6), max deviation {worst:.2e}, {secs:.2}s"),
    );
}

// End-to-end runs through the binary.

const TRAINING: &str = "epochs = 200\nbatch_size = 8\nlr = 3e-3\nlr_schedule = \"cosine\"\n";

fn euclidean_config() -> String {
    format!("seed = 0\n[dataset]\nshape = \"S\"\n[policy]\n{TRAINING}base_sigma = 0.5\n")
}

fn sphere_config(shape: &str) -> String {
    format!(
        "seed = 0\n[dataset]\nshape = \"{shape}\"\nmanifold = \"sphere\"\n[policy]\n{TRAINING}\
         solver = {{ type = \"geodesic_euler\", num_steps = 40 }}\n"
    )
}

struct Run {
    _tmp: tempfile::TempDir,
    dir: PathBuf,
    config: PathBuf,
}

impl Run {
    fn new(config: &str) -> Run {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("run");
        let config_path = tmp.path().join("config.toml");
        std::fs::write(&config_path, config).unwrap();
        Run { _tmp: tmp, dir, config: config_path }
    }

    fn at(dir: &Path, config: &Path) -> Run {
        Run { _tmp: tempfile::tempdir().unwrap(), dir: dir.to_path_buf(), config: config.to_path_buf() }
    }

    fn rfmp(&self, args: &[&str]) {
        let out = Command::new(env!("CARGO_BIN_EXE_rfmp"))
            .arg("--config")
            .arg(&self.config)
            .arg("--out")
            .arg(&self.dir)
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "rfmp {args:?} failed ({}): {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        );
    }

    fn json(&self, name: &str) -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(self.dir.join(name)).unwrap()).unwrap()
    }
}

/// Rows of a trajectory CSV, grouped by demo id, read without validation.
fn read_trajectories(path: &Path) -> Vec<(u64, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut out: Vec<(u64, Vec<Vec<f64>>)> = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let id: u64 = f[0].parse().unwrap();
        let coords: Vec<f64> = f[2..].iter().map(|v| v.parse().unwrap()).collect();
        match out.last_mut() {
            Some((last, rows)) if *last == id => rows.push(coords),
            _ => out.push((id, vec![coords])),
        }
    }
    out
}

fn rollout_files(run: &Run) -> Vec<(u64, Vec<Vec<f64>>)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(run.dir.join("rollouts"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.iter().flat_map(|f| read_trajectories(f)).collect()
}

fn val_losses(run: &Run) -> Vec<f64> {
    let text = std::fs::read_to_string(run.dir.join("train_log.csv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect()
}

struct EndToEnd {
    dtwd: f64,
    nn: f64,
    jerk: f64,
    val_ratio: f64,
    finite: bool,
    max_violation: f64,
    rollouts: usize,
    secs: f64,
}

fn end_to_end(config: &str, sphere: bool) -> EndToEnd {
    let start = Instant::now();
    let run = Run::new(config);
    for cmd in ["synth", "train", "rollout", "eval"] {
        run.rfmp(&[cmd]);
    }
    let val = val_losses(&run);
    assert_eq!(val.len(), 200);
    let rolls = rollout_files(&run);
    let finite = rolls.iter().all(|(_, r)| r.iter().flatten().all(|c| c.is_finite()));
    let max_violation = if sphere {
        rolls.iter().flat_map(|(_, r)| r.iter().map(|p| (norm(p) - 1.0).abs())).fold(0.0, f64::max)
    } else {
        0.0
    };
    let m = run.json("metrics.json");
    EndToEnd {
        dtwd: m["dtwd_mean"].as_f64().unwrap(),
        nn: m["demo_nearest_neighbor_dtwd"].as_f64().unwrap(),
        jerk: m["jerk_mean"].as_f64().unwrap_or(f64::NAN),
        val_ratio: val[199] / val[0],
        finite,
        max_violation,
        rollouts: rolls.len(),
        secs: start.elapsed().as_secs_f64(),
    }
}

fn end_to_end_detail(r: &EndToEnd) -> String {
    format!(
        "{} rollouts, DTWD {:.4} vs demo NN {:.4} (ratio {:.2}, limit 3), val loss ratio {:.4} (limit 0.2), \
         jerk {:.3e}, max |‖x‖-1| {:.1e}, {:.0}s",
        r.rollouts,
        r.dtwd,
        r.nn,
        r.dtwd / r.nn,
        r.val_ratio,
        r.jerk,
        r.max_violation,
        r.secs
    )
}

#[test]
fn criterion_06_end_to_end_euclidean() {
    let r = end_to_end(&euclidean_config(), false);
    let pass = r.finite && r.jerk.is_finite() && r.rollouts == 7 && r.dtwd <= 3.0 * r.nn && r.val_ratio <= 0.2;
    report(6, "end-to-end R2", pass, &end_to_end_detail(&r));
}

#[test]
fn criterion_07_end_to_end_sphere() {
    let r = end_to_end(&sphere_config("S"), true);
    let pass = r.finite
        && r.jerk.is_finite()
        && r.rollouts == 7
        && r.dtwd <= 3.0 * r.nn
        && r.val_ratio <= 0.2
        && r.max_violation <= 1e-6;
    report(7, "end-to-end S2", pass, &end_to_end_detail(&r));
}

fn sphere_distance(a: &[f64], b: &[f64]) -> f64 {
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    norm(&cross).atan2(dot(a, b))
}

fn normalized_mean(points: &[&Vec<f64>]) -> Vec<f64> {
    let mut m = vec![0.0; 3];
    for p in points {
        for (s, c) in m.iter_mut().zip(p.iter()) {
            *s += c;
        }
    }
    let n = norm(&m);
    m.iter().map(|c| c / n).collect()
}

#[test]
fn criterion_08_multimodality() {
    let start = Instant::now();
    let run = Run::new(&sphere_config("L_mirrored_pair"));
    for cmd in ["synth", "train", "rollout"] {
        run.rfmp(&[cmd]);
    }
    let demos = read_trajectories(&run.dir.join("dataset.csv"));
    assert_eq!(demos.len(), 14);
    // Demonstrations 0..7 are the first mode, 7..14 its mirror image.
    let mode = |id: u64| usize::from(id >= 7);
    let goal = |m: usize| demos.iter().find(|(id, _)| mode(*id) == m).unwrap().1.last().unwrap().clone();
    let goals = [goal(0), goal(1)];
    let rolls = rollout_files(&run);
    assert_eq!(rolls.len(), 14);
    let mut hits = 0;
    let mut ends: [Vec<&Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut worst: f64 = 0.0;
    for (id, r) in &rolls {
        let end = r.last().unwrap();
        let d = sphere_distance(end, &goals[mode(*id)]);
        worst = worst.max(d);
        if d <= 0.2 {
            hits += 1;
        }
        ends[mode(*id)].push(end);
    }
    let separation = sphere_distance(&normalized_mean(&ends[0]), &normalized_mean(&ends[1]));
    let frac = hits as f64 / rolls.len() as f64;
    report(
        8,
        "multimodality",
        frac >= 0.8 && separation > 0.5,
        &format!(
            "{hits}/{} rollouts end within 0.2 of their mode's goal (worst {worst:.3}), endpoint clusters {separation:.3} apart, {:.0}s",
            rolls.len(),
            start.elapsed().as_secs_f64()
        ),
    );
}

struct AblationResult {
    label: &'static str,
    finite: bool,
    jerk: [f64; 3],
    dtwd: [f64; 3],
}

impl AblationResult {
    fn ratio(&self) -> f64 {
        self.jerk[0] / self.jerk[2]
    }
}

fn ablation(label: &'static str, config: &str) -> AblationResult {
    let run = Run::new(config);
    run.rfmp(&["synth"]);
    run.rfmp(&["ablate-horizon", "--horizons", "2,4,8"]);
    let cells = run.json("ablation.json")["cells"].as_array().unwrap().clone();
    let mut finite = cells.len() == 3;
    let (mut jerk, mut dtwd) = ([f64::NAN; 3], [f64::NAN; 3]);
    for (k, (c, h)) in cells.iter().zip([2, 4, 8]).enumerate() {
        finite &= c["status"] == "ok" && c["horizon"] == h;
        jerk[k] = c["jerk_mean"].as_f64().unwrap_or(f64::NAN);
        dtwd[k] = c["dtwd_mean"].as_f64().unwrap_or(f64::NAN);
        finite &= jerk[k].is_finite() && dtwd[k].is_finite();
    }
    AblationResult { label, finite, jerk, dtwd }
}

#[test]
fn criterion_09_horizon_ablation() {
    let start = Instant::now();
    let results = [ablation("R2", &euclidean_config()), ablation("S2", &sphere_config("S"))];
    let pass = results.iter().all(|r| r.finite && r.ratio() <= 3.0);
    let detail: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "{}: DTWD {:.4}/{:.4}/{:.4}, jerk {:.2e}/{:.2e}/{:.2e} for T_a=2/4/8, jerk ratio 2:8 {:.2} (limit 3)",
                r.label, r.dtwd[0], r.dtwd[1], r.dtwd[2], r.jerk[0], r.jerk[1], r.jerk[2], r.ratio()
            )
        })
        .collect();
    report(
        9,
        "horizon ablation",
        pass,
        &format!("{}; {:.0}s", detail.join("; "), start.elapsed().as_secs_f64()),
    );
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(csv_files(&p));
        } else if p.extension().is_some_and(|x| x == "csv") {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        ("r2", "seed = 3\n[policy]\nepochs = 3\nbatch_size = 32\n[ablation]\nhorizons = [2, 4]\n"),
        (
            "s2",
            "seed = 3\n[dataset]\nshape = \"W\"\nmanifold = \"sphere\"\n[policy]\nepochs = 3\nbatch_size = 32\n\
             [ablation]\nhorizons = [2, 4]\n",
        ),
    ];
    let commands: [&[&str]; 8] = [
        &["synth"],
        &["train"],
        &["rollout"],
        &["eval"],
        &["flow"],
        &["rollout", "--init", "perturbed"],
        &["eval"],
        &["ablate-horizon"],
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (name, cfg) in configs {
        let config = tmp.path().join(format!("{name}.toml"));
        std::fs::write(&config, cfg).unwrap();
        let dirs = [tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b"))];
        let mut snapshots = [Vec::new(), Vec::new()];
        for (dir, snap) in dirs.iter().zip(&mut snapshots) {
            let run = Run::at(dir, &config);
            for (k, args) in commands.iter().enumerate() {
                run.rfmp(args);
                // Snapshot after each step since later commands overwrite some files.
                for f in csv_files(dir) {
                    snap.push((k, f.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&f).unwrap()));
                }
            }
        }
        assert_eq!(snapshots[0].len(), snapshots[1].len());
        for (a, b) in snapshots[0].iter().zip(&snapshots[1]) {
            compared += 1;
            if a != b {
                mismatches.push(format!("{name}: {} after step {}", a.1.display(), a.0));
            }
        }
    }
    report(
        10,
        "determinism",
        mismatches.is_empty(),
        &format!(
            "{compared} CSV snapshots compared across two run directories, {} mismatched{}, {:.0}s",
            mismatches.len(),
            if mismatches.is_empty() { String::new() } else { format!(": {}", mismatches.join(", ")) },
            start.elapsed().as_secs_f64()
        ),
    );
}
