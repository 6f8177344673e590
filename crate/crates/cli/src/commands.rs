//! Command implementations. CSV outputs are deterministic given the config and
//! seed; wall-clock measurements only go to the JSON manifests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfmp::data::{self, Dataset, DatasetManifest, LetterShape};
use rfmp::metrics::{self, MetricReport, Pairing};
use rfmp::policy::{self, Checkpoint, TrainedPolicy};
use rfmp::ManifoldPoint;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{DataSource, InitMode, ManifoldChoice, PolicyOverrides, RolloutConfig, RunConfig};
use crate::CliError;

const DATASET_CSV: &str = "dataset.csv";
const DATASET_MANIFEST: &str = "dataset.json";
const CHECKPOINT: &str = "checkpoint.json";
const ROLLOUT_DIR: &str = "rollouts";

const STREAM_DATA: u64 = 11;
const STREAM_ROLLOUT: u64 = 12;
const STREAM_FLOW: u64 = 13;

fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng.set_word_pos(u128::from(index) << 32);
    rng
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    write_file(path, &text)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `# key=value` lines carried by every CSV artifact.
fn csv_meta(cfg: &RunConfig, command: &str, extra: &[(&str, String)]) -> Vec<(String, String)> {
    let mut m = vec![
        ("command".to_string(), command.to_string()),
        ("config_hash".to_string(), cfg.hash()),
        ("seed".to_string(), cfg.seed.to_string()),
    ];
    m.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    m
}

fn header_lines(meta: &[(String, String)]) -> String {
    meta.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
}

fn manifest_base(cfg: &RunConfig, command: &str) -> serde_json::Map<String, serde_json::Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config serializes"));
    m
}

fn build_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let d = &cfg.dataset;
    let mut rng = stream(cfg.seed, STREAM_DATA, 0);
    let raw = match d.source {
        DataSource::Synth => {
            let shape: LetterShape = d.shape.parse()?;
            data::synthesize_letter(shape, d.num_demos, d.demo_len, d.noise, &mut rng)?
        }
        DataSource::Csv => {
            let path = d.path.as_ref().expect("checked in RunConfig::check");
            if !path.exists() {
                return Err(CliError::Io(format!("{}: file not found", path.display())));
            }
            data::load_csv(path)?
        }
    };
    let ds = match (raw.manifold.is_euclidean(), d.manifold) {
        (true, ManifoldChoice::Euclidean) => data::normalize(&raw)?,
        (true, ManifoldChoice::Sphere) => data::project_to_sphere(&data::normalize(&raw)?, d.tangent_radius)?,
        (false, ManifoldChoice::Sphere) => raw,
        (false, ManifoldChoice::Euclidean) => {
            return Err(CliError::Usage("the input CSV is on the sphere but dataset.manifold is euclidean".into()))
        }
    };
    Ok(data::split_dataset(&ds, d.split, &mut rng)?)
}

pub fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = build_dataset(cfg)?;
    let source = match cfg.dataset.source {
        DataSource::Synth => format!("synth:{}", cfg.dataset.shape),
        DataSource::Csv => "csv".to_string(),
    };
    let meta = csv_meta(cfg, "synth", &[("source", source.clone())]);
    let csv = data::dataset_to_csv(&ds, &meta);
    write_file(&cfg.out_dir.join(DATASET_CSV), &csv)?;
    let mut mmeta: BTreeMap<String, String> = meta.into_iter().collect();
    mmeta.insert("csv_sha256".into(), sha256_hex(csv.as_bytes()));
    let manifest = DatasetManifest::from_dataset(&ds, mmeta);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&cfg.out_dir.join(DATASET_MANIFEST), &text)?;
    println!(
        "wrote {} demonstrations of length {} on {} ({} train / {} val / {} test pairs) to {}",
        ds.demos.len(),
        ds.demo_len(),
        ds.manifold,
        ds.split.train.len(),
        ds.split.val.len(),
        ds.split.test.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let csv_path = cfg.out_dir.join(DATASET_CSV);
    let manifest_path = cfg.out_dir.join(DATASET_MANIFEST);
    for p in [&csv_path, &manifest_path] {
        if !p.exists() {
            return Err(CliError::Io(format!("{}: file not found (run `rfmp synth` first)", p.display())));
        }
    }
    let ds = data::load_csv(&csv_path)?;
    let manifest: DatasetManifest = serde_json::from_str(&read_file(&manifest_path)?)
        .map_err(|e| CliError::Schema(format!("{}: {e}", manifest_path.display())))?;
    Ok(manifest.apply(ds)?)
}

fn load_policy(cfg: &RunConfig) -> Result<TrainedPolicy, CliError> {
    let path = cfg.out_dir.join(CHECKPOINT);
    if !path.exists() {
        return Err(CliError::Io(format!("{}: file not found (run `rfmp train` first)", path.display())));
    }
    let ckpt: Checkpoint = serde_json::from_str(&read_file(&path)?)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok(ckpt.into_policy()?)
}

pub fn train(cfg: &RunConfig, resume: bool, log_elapsed: bool) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let pcfg = cfg.policy.resolve(ds.manifold, cfg.seed)?;
    let start = Instant::now();
    let p = if resume {
        let mut p = load_policy(cfg)?;
        let mut expected = p.config.clone();
        expected.epochs = pcfg.epochs;
        if expected != pcfg {
            return Err(CliError::Schema(
                "checkpoint configuration differs from the run configuration (only epochs may change on resume)".into(),
            ));
        }
        if p.manifold != ds.manifold {
            return Err(CliError::Schema("checkpoint manifold differs from the dataset".into()));
        }
        p.config.epochs = pcfg.epochs;
        log::info!("resuming at epoch {} of {}", p.log.len() + 1, pcfg.epochs);
        policy::continue_training(&mut p, &ds, pcfg.epochs)?;
        p
    } else {
        policy::train(&ds, &pcfg)?
    };
    let elapsed = start.elapsed().as_secs_f64();
    write_training_artifacts(cfg, &cfg.out_dir, &p, log_elapsed, elapsed)?;
    let last = p.log.last().expect("at least one epoch");
    println!(
        "trained {} epochs: train loss {:.5}, val loss {:.5}, best epoch {} (val {:.5})",
        last.epoch, last.train_loss, last.val_loss, p.best_epoch, p.best_val_loss
    );
    Ok(())
}

fn write_training_artifacts(
    cfg: &RunConfig,
    dir: &Path,
    p: &TrainedPolicy,
    log_elapsed: bool,
    elapsed: f64,
) -> Result<(), CliError> {
    let mut meta: BTreeMap<String, String> = csv_meta(cfg, "train", &[]).into_iter().collect();
    meta.insert("dataset_manifest".into(), DATASET_MANIFEST.into());
    if let Ok(bytes) = std::fs::read(cfg.out_dir.join(DATASET_MANIFEST)) {
        meta.insert("dataset_manifest_sha256".into(), sha256_hex(&bytes));
    }
    let ckpt = Checkpoint::from_policy(p, meta);
    let text = serde_json::to_string_pretty(&ckpt).expect("checkpoint serializes") + "\n";
    write_file(&dir.join(CHECKPOINT), &text)?;

    let mut log = header_lines(&csv_meta(cfg, "train", &[]));
    log.push_str(if log_elapsed { "epoch,train_loss,val_loss,elapsed_seconds\n" } else { "epoch,train_loss,val_loss\n" });
    for row in &p.log {
        let _ = write!(log, "{},{},{}", row.epoch, row.train_loss, row.val_loss);
        if log_elapsed {
            let _ = write!(log, ",{}", row.elapsed_seconds);
        }
        log.push('\n');
    }
    write_file(&dir.join("train_log.csv"), &log)?;

    let mut m = manifest_base(cfg, "train");
    m.insert("policy".into(), serde_json::to_value(&p.config).expect("policy config serializes"));
    m.insert("num_params".into(), json!(p.net.num_params()));
    m.insert("epochs".into(), json!(p.log.len()));
    m.insert("best_epoch".into(), json!(p.best_epoch));
    m.insert("best_val_loss".into(), json!(p.best_val_loss));
    m.insert("elapsed_seconds".into(), json!(elapsed));
    m.insert(
        "epoch_elapsed_seconds".into(),
        json!(p.log.iter().map(|l| l.elapsed_seconds).collect::<Vec<_>>()),
    );
    write_json(&dir.join("train.json"), &serde_json::Value::Object(m))
}

struct RolloutOutcome {
    demo_index: usize,
    demo_id: u64,
    result: Result<Vec<ManifoldPoint>, String>,
    seconds: f64,
    queries: usize,
}

fn run_rollouts(cfg: &RunConfig, rcfg: &RolloutConfig, p: &TrainedPolicy, ds: &Dataset) -> Vec<RolloutOutcome> {
    let actions = rcfg.num_steps - rcfg.history;
    let queries = actions.div_ceil(p.config.execute);
    ds.demos
        .iter()
        .enumerate()
        .map(|(i, demo)| {
            let mut rng = stream(cfg.seed, STREAM_ROLLOUT, i as u64);
            let start = Instant::now();
            let result = (|| -> Result<Vec<ManifoldPoint>, rfmp::Error> {
                if demo.len() < rcfg.history {
                    return Err(rfmp::Error::InvalidArgument(format!(
                        "demonstration {} is shorter than the initial history",
                        demo.id
                    )));
                }
                let mut hist = demo.points[..rcfg.history].to_vec();
                if rcfg.init == InitMode::Perturbed {
                    hist = policy::perturb_history(&hist, rcfg.perturb_scale, &mut rng)?;
                }
                let tail = policy::rollout(p, &hist, actions, &mut rng)?;
                hist.extend(tail);
                Ok(hist)
            })();
            if let Err(e) = &result {
                log::warn!("rollout {i} failed: {e}");
            }
            RolloutOutcome {
                demo_index: i,
                demo_id: demo.id,
                result: result.map_err(|e| e.to_string()),
                seconds: start.elapsed().as_secs_f64(),
                queries,
            }
        })
        .collect()
}

fn max_manifold_violation(trajs: &[Vec<ManifoldPoint>]) -> f64 {
    trajs
        .iter()
        .flatten()
        .map(|p| match p.kind() {
            rfmp::ManifoldKind::Sphere { .. } => (p.coords().iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs(),
            rfmp::ManifoldKind::Euclidean { .. } => 0.0,
        })
        .fold(0.0, f64::max)
}

fn inference_ms(outcomes: &[RolloutOutcome]) -> f64 {
    let (secs, calls) = outcomes
        .iter()
        .filter(|o| o.result.is_ok())
        .fold((0.0, 0usize), |(s, c), o| (s + o.seconds, c + o.queries));
    if calls == 0 {
        0.0
    } else {
        1e3 * secs / calls as f64
    }
}

pub fn rollout(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let p = load_policy(cfg)?;
    if p.manifold != ds.manifold {
        return Err(CliError::Schema("checkpoint manifold differs from the dataset".into()));
    }
    let dir = cfg.out_dir.join(ROLLOUT_DIR);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    }
    let r = &cfg.rollout;
    let outcomes = run_rollouts(cfg, r, &p, &ds);
    let init = match r.init {
        InitMode::DemoStarts => "demo_starts".to_string(),
        InitMode::Perturbed => "perturbed".to_string(),
    };
    let meta = csv_meta(
        cfg,
        "rollout",
        &[
            ("init", init.clone()),
            ("perturb_scale", if r.init == InitMode::Perturbed { r.perturb_scale.to_string() } else { "0".into() }),
            ("horizon", p.config.horizon.to_string()),
            ("execute", p.config.execute.to_string()),
        ],
    );
    let mut entries = Vec::new();
    let mut ok = Vec::new();
    for o in &outcomes {
        let file = format!("rollout_{:03}.csv", o.demo_index);
        match &o.result {
            Ok(traj) => {
                let csv = data::trajectories_to_csv([(o.demo_id, traj.as_slice())], ds.manifold, &meta);
                write_file(&dir.join(&file), &csv)?;
                entries.push(json!({"index": o.demo_index, "demo_id": o.demo_id, "status": "ok", "file": file, "seconds": o.seconds}));
                ok.push(traj.clone());
            }
            Err(e) => {
                entries.push(json!({"index": o.demo_index, "demo_id": o.demo_id, "status": "failed", "error": e, "seconds": o.seconds}));
            }
        }
    }
    let mut m = manifest_base(cfg, "rollout");
    m.insert("init".into(), json!(init));
    m.insert("perturb_scale".into(), json!(r.perturb_scale));
    m.insert("num_steps".into(), json!(r.num_steps));
    m.insert("history".into(), json!(r.history));
    m.insert("horizon".into(), json!(p.config.horizon));
    m.insert("execute".into(), json!(p.config.execute));
    m.insert("max_manifold_violation".into(), json!(max_manifold_violation(&ok)));
    m.insert("inference_ms_per_query".into(), json!(inference_ms(&outcomes)));
    m.insert("rollouts".into(), json!(entries));
    write_json(&cfg.out_dir.join("rollouts.json"), &serde_json::Value::Object(m))?;
    let failed = outcomes.len() - ok.len();
    println!(
        "wrote {} rollouts ({} failed) to {}; {:.3} ms per inference query",
        ok.len(),
        failed,
        dir.display(),
        inference_ms(&outcomes)
    );
    if ok.is_empty() {
        return Err(CliError::Numerical("every rollout failed".into()));
    }
    Ok(())
}

fn load_trajectories(src: &Path) -> Result<Vec<(u64, Vec<ManifoldPoint>)>, CliError> {
    let files: Vec<PathBuf> = if src.is_dir() {
        let mut f: Vec<PathBuf> = std::fs::read_dir(src)
            .map_err(|e| io_err(src, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        f.sort();
        f
    } else if src.exists() {
        vec![src.to_path_buf()]
    } else {
        return Err(CliError::Io(format!("{}: file not found", src.display())));
    };
    let mut out = Vec::new();
    for f in files {
        let ds = data::load_csv(&f)?;
        out.extend(ds.demos.into_iter().map(|d| (d.id, d.points)));
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("no trajectories found in {}", src.display())));
    }
    Ok(out)
}

/// Pairs rollouts with demonstrations by id (matched) or by minimum DTWD (nearest).
fn score(ds: &Dataset, rolls: &[(u64, Vec<ManifoldPoint>)], pairing: Pairing) -> Result<MetricReport, CliError> {
    if rolls.iter().any(|(_, r)| r.first().is_some_and(|p| p.kind() != ds.manifold)) {
        return Err(CliError::Schema(format!("rollouts are not on the dataset manifold {}", ds.manifold)));
    }
    let trajs: Vec<Vec<ManifoldPoint>> = rolls.iter().map(|(_, r)| r.clone()).collect();
    match pairing {
        Pairing::Matched => {
            let idx = rolls
                .iter()
                .map(|(id, _)| {
                    ds.demos
                        .iter()
                        .position(|d| d.id == *id)
                        .ok_or_else(|| CliError::Schema(format!("rollout id {id} matches no demonstration")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let demos: Vec<Vec<ManifoldPoint>> = idx.iter().map(|&i| ds.demos[i].points.clone()).collect();
            let mut rep = metrics::evaluate_rollouts(&demos, &trajs, Pairing::Matched)?;
            for row in &mut rep.rows {
                row.demo = idx[row.rollout];
            }
            Ok(rep)
        }
        Pairing::Nearest => {
            let demos: Vec<Vec<ManifoldPoint>> = ds.demos.iter().map(|d| d.points.clone()).collect();
            Ok(metrics::evaluate_rollouts(&demos, &trajs, Pairing::Nearest)?)
        }
    }
}

fn pairing_name(p: Pairing) -> &'static str {
    match p {
        Pairing::Matched => "matched",
        Pairing::Nearest => "nearest",
    }
}

fn metric_meta(cfg: &RunConfig, command: &str, pairing: Pairing) -> Vec<(String, String)> {
    csv_meta(
        cfg,
        command,
        &[
            ("pairing", pairing_name(pairing).into()),
            ("dtwd", "geodesic cost / (n + m - 1)".into()),
            ("jerk", "mean squared third difference of ambient coordinates, dt = 1 step".into()),
        ],
    )
}

pub fn eval(cfg: &RunConfig, rollouts: Option<&Path>) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let src = rollouts.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.join(ROLLOUT_DIR));
    let rolls = load_trajectories(&src)?;
    let pairing = match (cfg.eval.pairing, rollouts) {
        (None, None) => recorded_pairing(cfg).unwrap_or_else(|| cfg.pairing()),
        _ => cfg.pairing(),
    };
    let rep = score(&ds, &rolls, pairing)?;
    write_file(&cfg.out_dir.join("metrics.csv"), &rep.to_csv(&metric_meta(cfg, "eval", pairing)))?;
    let demos: Vec<Vec<ManifoldPoint>> = ds.demos.iter().map(|d| d.points.clone()).collect();
    let nn = metrics::demo_nearest_neighbor_dtwd(&demos).ok();
    let mut m = manifest_base(cfg, "eval");
    m.insert("source".into(), json!(src.display().to_string()));
    m.insert("pairing".into(), json!(pairing_name(pairing)));
    m.insert("num_rollouts".into(), json!(rep.rows.len()));
    m.insert("dtwd_mean".into(), json!(rep.dtwd_mean));
    m.insert("dtwd_std".into(), json!(rep.dtwd_std));
    m.insert("jerk_mean".into(), json!(rep.jerk_mean));
    m.insert("jerk_std".into(), json!(rep.jerk_std));
    m.insert("demo_nearest_neighbor_dtwd".into(), json!(nn));
    m.insert("max_manifold_violation".into(), json!(max_manifold_violation(&rolls.iter().map(|r| r.1.clone()).collect::<Vec<_>>())));
    write_json(&cfg.out_dir.join("metrics.json"), &serde_json::Value::Object(m))?;
    println!(
        "DTWD {:.5} ± {:.5}, jerkiness {:.5e} ± {:.5e} over {} rollouts ({})",
        rep.dtwd_mean,
        rep.dtwd_std,
        rep.jerk_mean,
        rep.jerk_std,
        rep.rows.len(),
        pairing_name(pairing)
    );
    Ok(())
}

/// Default pairing for the run's own rollouts, from the init mode they were produced with.
fn recorded_pairing(cfg: &RunConfig) -> Option<Pairing> {
    let text = std::fs::read_to_string(cfg.out_dir.join("rollouts.json")).ok()?;
    let manifest: serde_json::Value = serde_json::from_str(&text).ok()?;
    match manifest["init"].as_str()? {
        "demo_starts" => Some(Pairing::Matched),
        "perturbed" => Some(Pairing::Nearest),
        _ => None,
    }
}

pub fn flow(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let p = load_policy(cfg)?;
    if p.manifold != ds.manifold {
        return Err(CliError::Schema("checkpoint manifold differs from the dataset".into()));
    }
    let f = &cfg.flow;
    if f.num_snapshots < 2 {
        return Err(CliError::Usage("flow.num_snapshots must be at least 2".into()));
    }
    let pairs = if ds.split.train.is_empty() { ds.all_pairs() } else { ds.split.train.clone() };
    let dim = ds.manifold.ambient_dim();
    let meta = csv_meta(cfg, "flow", &[("horizon", p.config.horizon.to_string())]);
    let mut trace = header_lines(&meta);
    trace.push_str("sample,snapshot,t,k");
    let mut obs = header_lines(&meta);
    obs.push_str("sample,demo,tau,c,gap");
    for i in 0..dim {
        let _ = write!(trace, ",x{i}");
        let _ = write!(obs, ",ref_x{i}");
    }
    for i in 0..dim {
        let _ = write!(obs, ",ctx_x{i}");
    }
    trace.push('\n');
    obs.push('\n');
    let mut rng = stream(cfg.seed, STREAM_FLOW, 0);
    for s in 0..f.num_samples {
        let index = pairs[rng.random_range(0..pairs.len())];
        let pair = data::training_pair_at(&ds, index, p.config.horizon, p.config.context_window, &mut rng)?;
        let o = &pair.observation;
        let _ = write!(obs, "{s},{},{},{},{}", index.demo, index.tau, pair.c, o.gap);
        for c in o.reference.coords().iter().chain(o.context.coords()) {
            let _ = write!(obs, ",{c}");
        }
        obs.push('\n');
        for (j, (t, h)) in policy::trace_action(&p, o, f.num_snapshots, &mut rng)?.iter().enumerate() {
            for (k, point) in h.points().iter().enumerate() {
                let _ = write!(trace, "{s},{j},{t},{k}");
                for c in point.coords() {
                    let _ = write!(trace, ",{c}");
                }
                trace.push('\n');
            }
        }
    }
    write_file(&cfg.out_dir.join("flow.csv"), &trace)?;
    write_file(&cfg.out_dir.join("flow_observations.csv"), &obs)?;
    println!("traced {} flows with {} snapshots each", f.num_samples, f.num_snapshots);
    Ok(())
}

pub fn ablate_horizon(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load_dataset(cfg)?;
    let cells = cfg
        .ablation
        .horizons
        .iter()
        .map(|&h| {
            let o = PolicyOverrides { horizon: Some(h), ..cfg.policy.clone() };
            o.resolve(ds.manifold, cfg.seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rcfg = RolloutConfig { init: InitMode::DemoStarts, ..cfg.rollout.clone() };
    let meta = metric_meta(cfg, "ablate-horizon", Pairing::Matched);
    let mut table = header_lines(&meta);
    table.push_str("horizon,execute,status,dtwd_mean,dtwd_std,jerk_mean,jerk_std\n");
    let mut entries = Vec::new();
    for pcfg in cells {
        let (h, e) = (pcfg.horizon, pcfg.execute);
        log::info!("ablation cell T_a={h}, T_e={e}");
        let t0 = Instant::now();
        let trained = policy::train(&ds, &pcfg);
        let train_seconds = t0.elapsed().as_secs_f64();
        let cell = trained.map_err(CliError::from).and_then(|p| {
            let outcomes = run_rollouts(cfg, &rcfg, &p, &ds);
            let ms = inference_ms(&outcomes);
            let mut rolls = Vec::new();
            for o in outcomes {
                match o.result {
                    Ok(t) => rolls.push((o.demo_id, t)),
                    Err(err) => return Err(CliError::Numerical(format!("rollout {} failed: {err}", o.demo_index))),
                }
            }
            let rep = score(&ds, &rolls, Pairing::Matched)?;
            let viol = max_manifold_violation(&rolls.into_iter().map(|r| r.1).collect::<Vec<_>>());
            Ok((p, rep, ms, viol))
        });
        let rollout_seconds = t0.elapsed().as_secs_f64() - train_seconds;
        match cell {
            Ok((p, rep, ms, viol)) => {
                let _ = writeln!(
                    table,
                    "{h},{e},ok,{},{},{},{}",
                    rep.dtwd_mean, rep.dtwd_std, rep.jerk_mean, rep.jerk_std
                );
                write_file(
                    &cfg.out_dir.join(format!("ablation_ta{h}_metrics.csv")),
                    &rep.to_csv(&[meta.clone(), vec![("horizon".into(), h.to_string())]].concat()),
                )?;
                entries.push(json!({
                    "horizon": h, "execute": e, "status": "ok",
                    "dtwd_mean": rep.dtwd_mean, "dtwd_std": rep.dtwd_std,
                    "jerk_mean": rep.jerk_mean, "jerk_std": rep.jerk_std,
                    "best_epoch": p.best_epoch, "best_val_loss": p.best_val_loss,
                    "max_manifold_violation": viol,
                    "train_seconds": train_seconds, "rollout_seconds": rollout_seconds,
                    "inference_ms_per_query": ms,
                }));
            }
            Err(err) => {
                log::warn!("ablation cell T_a={h} failed: {err}");
                let _ = writeln!(table, "{h},{e},failed,,,,");
                entries.push(json!({
                    "horizon": h, "execute": e, "status": "failed", "error": err.to_string(),
                    "train_seconds": train_seconds, "rollout_seconds": rollout_seconds,
                }));
            }
        }
    }
    write_file(&cfg.out_dir.join("ablation.csv"), &table)?;
    let mut m = manifest_base(cfg, "ablate-horizon");
    m.insert("cells".into(), json!(entries));
    write_json(&cfg.out_dir.join("ablation.json"), &serde_json::Value::Object(m))?;
    print!("{}", table.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}
