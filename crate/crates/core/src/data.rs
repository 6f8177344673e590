//! Demonstrations, normalization, synthetic letter trajectories, and the
//! construction of `(action horizon, observation)` training pairs.
//!
//! Index conventions follow the usual 1-based trajectory notation: a pair is
//! identified by a demonstration and a step `τ ∈ {3, …, T_m − 1}`. Its action
//! horizon is `[p_τ, …, p_{τ+T_a−1}]` (clamped to the last point), the
//! reference observation is `p_{τ−1}`, and the context observation is `p_c`
//! with `c` drawn uniformly from `{max(1, τ − w), …, τ − 2}`.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horizon::ActionHorizon;
use crate::manifold::{self, ManifoldKind, ManifoldPoint, TangentVector};

#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub id: u64,
    pub points: Vec<ManifoldPoint>,
    /// Dimension of the raw data the demonstration was built from.
    pub source_dim: usize,
}

impl Demonstration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// 1-based access, matching the pair indexing convention.
    fn at(&self, one_based: usize) -> &ManifoldPoint {
        &self.points[one_based.min(self.points.len()) - 1]
    }
}

/// Affine normalization `(raw − shift) / scale`, optionally followed by the
/// wrap `exp_e(tangent_radius · p)` onto the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: Vec<f64>,
    pub scale: f64,
    pub tangent_radius: Option<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Normalization {
            shift: vec![0.0; dim],
            scale: 1.0,
            tangent_radius: None,
        }
    }

    /// Maps a manifold point back to raw source coordinates.
    pub fn denormalize(&self, p: &ManifoldPoint) -> Result<Vec<f64>> {
        let flat = match (self.tangent_radius, p.kind()) {
            (Some(r), ManifoldKind::Sphere { intrinsic_dim }) => {
                let e = p.kind().origin();
                let v = manifold::log_map(&e, p)?;
                v.coords()[..intrinsic_dim].iter().map(|c| c / r).collect()
            }
            (None, ManifoldKind::Euclidean { .. }) => p.coords().to_vec(),
            _ => return Err(Error::invalid("normalization does not match the point's manifold")),
        };
        if flat.len() != self.shift.len() {
            return Err(Error::invalid("normalization dimension mismatch"));
        }
        Ok(flat
            .iter()
            .zip(&self.shift)
            .map(|(v, s)| v * self.scale + s)
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairIndex {
    /// Position of the demonstration in `Dataset::demos`.
    pub demo: usize,
    /// 1-based prediction step.
    pub tau: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<PairIndex>,
    pub val: Vec<PairIndex>,
    pub test: Vec<PairIndex>,
}

impl SplitAssignment {
    pub fn get(&self, split: Split) -> &[PairIndex] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty() && self.val.is_empty() && self.test.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub demos: Vec<Demonstration>,
    pub manifold: ManifoldKind,
    pub normalization: Normalization,
    pub split: SplitAssignment,
}

impl Dataset {
    /// Wraps demonstrations that all live on `manifold`, with identity normalization.
    pub fn new(demos: Vec<Demonstration>, manifold: ManifoldKind) -> Result<Self> {
        if demos.is_empty() {
            return Err(Error::invalid("dataset has no demonstrations"));
        }
        for d in &demos {
            if d.points.is_empty() {
                return Err(Error::invalid(format!("demonstration {} is empty", d.id)));
            }
            if d.points.iter().any(|p| p.kind() != manifold) {
                return Err(Error::invalid(format!("demonstration {} is not on {manifold}", d.id)));
            }
        }
        let source_dim = demos[0].source_dim;
        Ok(Dataset {
            demos,
            manifold,
            normalization: Normalization::identity(source_dim),
            split: SplitAssignment::default(),
        })
    }

    /// Length `T_m` of the demonstrations (the longest, if they differ).
    pub fn demo_len(&self) -> usize {
        self.demos.iter().map(|d| d.len()).max().unwrap_or(0)
    }

    /// Every `(demo, τ)` pair with a non-empty context range.
    pub fn all_pairs(&self) -> Vec<PairIndex> {
        self.demos
            .iter()
            .enumerate()
            .flat_map(|(demo, d)| (3..d.len()).map(move |tau| PairIndex { demo, tau }))
            .collect()
    }
}

/// Conditioning input `o = [o_{τ−1}, o_c, (τ − c) / T_m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationVector {
    pub reference: ManifoldPoint,
    pub context: ManifoldPoint,
    pub gap: f64,
}

impl ObservationVector {
    pub fn new(reference: ManifoldPoint, context: ManifoldPoint, gap: f64) -> Result<Self> {
        if reference.kind() != context.kind() {
            return Err(Error::invalid("reference and context live on different manifolds"));
        }
        if !(gap > 0.0 && gap <= 1.0) {
            return Err(Error::invalid(format!("observation gap must lie in (0, 1], got {gap}")));
        }
        Ok(ObservationVector { reference, context, gap })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.reference.kind()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.reference.coords().len() + 1);
        v.extend_from_slice(self.reference.coords());
        v.extend_from_slice(self.context.coords());
        v.push(self.gap);
        v
    }

    /// Length of [`ObservationVector::flatten`] on `kind`.
    pub fn flat_len(kind: ManifoldKind) -> usize {
        2 * kind.ambient_dim() + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub index: PairIndex,
    /// 1-based context index.
    pub c: usize,
    pub action_horizon: ActionHorizon,
    pub observation: ObservationVector,
}

/// Admissible 1-based context indices for step `tau`.
pub fn context_range(tau: usize, window: Option<usize>) -> Result<std::ops::RangeInclusive<usize>> {
    if tau < 3 {
        return Err(Error::invalid(format!("step {tau} has no context candidates")));
    }
    let lo = match window {
        Some(w) => tau.saturating_sub(w).max(1),
        None => 1,
    };
    Ok(lo.min(tau - 2)..=tau - 2)
}

/// Builds the pair at `index` with a freshly drawn context index.
pub fn training_pair_at<R: Rng + ?Sized>(
    dataset: &Dataset,
    index: PairIndex,
    horizon: usize,
    window: Option<usize>,
    rng: &mut R,
) -> Result<TrainingPair> {
    if horizon == 0 {
        return Err(Error::invalid("prediction horizon must be at least 1"));
    }
    let demo = dataset
        .demos
        .get(index.demo)
        .ok_or_else(|| Error::invalid(format!("demonstration {} out of range", index.demo)))?;
    let t_m = demo.len();
    if t_m < horizon + 2 {
        return Err(Error::invalid(format!(
            "demonstration {} has {t_m} points, need at least T_a + 2 = {}",
            demo.id,
            horizon + 2
        )));
    }
    if index.tau < 3 || index.tau > t_m {
        return Err(Error::invalid(format!("step {} out of range", index.tau)));
    }
    let range = context_range(index.tau, window)?;
    let c = rng.random_range(range);
    let action_horizon =
        ActionHorizon::new((0..horizon).map(|k| demo.at(index.tau + k).clone()).collect())?;
    let observation = ObservationVector::new(
        demo.at(index.tau - 1).clone(),
        demo.at(c).clone(),
        (index.tau - c) as f64 / t_m as f64,
    )?;
    Ok(TrainingPair {
        index,
        c,
        action_horizon,
        observation,
    })
}

/// Draws a pair uniformly from `split`, then a context index uniformly from its range.
pub fn sample_training_pair<R: Rng + ?Sized>(
    dataset: &Dataset,
    split: Split,
    horizon: usize,
    window: Option<usize>,
    rng: &mut R,
) -> Result<TrainingPair> {
    let pairs = dataset.split.get(split);
    if pairs.is_empty() {
        return Err(Error::invalid(format!("the {split:?} split is empty")));
    }
    let index = pairs[rng.random_range(0..pairs.len())];
    training_pair_at(dataset, index, horizon, window, rng)
}

/// Assigns every `(demo, τ)` pair to train/val/test by a seeded shuffle.
pub fn split_dataset<R: Rng + ?Sized>(dataset: &Dataset, fractions: [f64; 3], rng: &mut R) -> Result<Dataset> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split fractions {fractions:?} must be in [0, 1] and sum to 1")));
    }
    let mut pairs = dataset.all_pairs();
    let n = pairs.len();
    let n_train = (fractions[0] * n as f64).round() as usize;
    let n_val = ((fractions[1] * n as f64).round() as usize).min(n - n_train.min(n));
    let n_test = n.saturating_sub(n_train + n_val);
    for (f, count, name) in [(fractions[0], n_train, "train"), (fractions[1], n_val, "val"), (fractions[2], n_test, "test")] {
        if f > 0.0 && count == 0 {
            return Err(Error::invalid(format!(
                "{n} pairs are too few for a non-empty {name} split"
            )));
        }
    }
    pairs.shuffle(rng);
    let mut test = pairs.split_off(n_train + n_val);
    let mut val = pairs.split_off(n_train);
    let mut train = pairs;
    train.sort();
    val.sort();
    test.sort();
    let mut out = dataset.clone();
    out.split = SplitAssignment { train, val, test };
    Ok(out)
}

/// Centers on the centroid and scales so the largest absolute coordinate is 1.
pub fn normalize(dataset: &Dataset) -> Result<Dataset> {
    let dim = match dataset.manifold {
        ManifoldKind::Euclidean { dim } => dim,
        _ => return Err(Error::invalid("normalization expects raw Euclidean data")),
    };
    let n: usize = dataset.demos.iter().map(|d| d.len()).sum();
    let mut shift = vec![0.0; dim];
    for p in dataset.demos.iter().flat_map(|d| &d.points) {
        for (s, c) in shift.iter_mut().zip(p.coords()) {
            *s += c / n as f64;
        }
    }
    let scale = dataset
        .demos
        .iter()
        .flat_map(|d| &d.points)
        .flat_map(|p| p.coords().iter().zip(&shift).map(|(c, s)| (c - s).abs()))
        .fold(0.0, f64::max);
    if scale < 1e-12 {
        return Err(Error::invalid("data has zero spread and cannot be normalized"));
    }
    let mut out = dataset.clone();
    for d in &mut out.demos {
        for p in &mut d.points {
            let coords = p.coords().iter().zip(&shift).map(|(c, s)| (c - s) / scale).collect();
            *p = ManifoldPoint::new(coords, dataset.manifold)?;
        }
    }
    // Compose with any earlier normalization so denormalize maps to the original source.
    let prev = &dataset.normalization;
    out.normalization = Normalization {
        shift: shift.iter().zip(&prev.shift).map(|(s, p)| s * prev.scale + p).collect(),
        scale: scale * prev.scale,
        tangent_radius: None,
    };
    Ok(out)
}

/// Wraps normalized `R^d` data onto `S^d` through `exp_e(tangent_radius · p)`.
pub fn project_to_sphere(dataset: &Dataset, tangent_radius: f64) -> Result<Dataset> {
    let dim = match dataset.manifold {
        ManifoldKind::Euclidean { dim } => dim,
        _ => return Err(Error::invalid("sphere projection expects Euclidean data")),
    };
    if !(tangent_radius > 0.0 && tangent_radius <= PI / 2.0) {
        return Err(Error::invalid(format!(
            "tangent radius must lie in (0, π/2], got {tangent_radius}"
        )));
    }
    let kind = ManifoldKind::sphere(dim)?;
    let e = kind.origin();
    let mut out = dataset.clone();
    out.manifold = kind;
    for d in &mut out.demos {
        for p in &mut d.points {
            let mut v: Vec<f64> = p.coords().iter().map(|c| c * tangent_radius).collect();
            v.push(0.0);
            *p = manifold::exp_map(&e, &TangentVector::new(v, e.clone())?)?;
        }
    }
    out.normalization.tangent_radius = Some(tangent_radius);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LetterShape {
    S,
    W,
    J,
    L,
    #[serde(rename = "L_mirrored_pair")]
    LMirroredPair,
}

impl std::str::FromStr for LetterShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(LetterShape::S),
            "W" => Ok(LetterShape::W),
            "J" => Ok(LetterShape::J),
            "L" => Ok(LetterShape::L),
            "L_mirrored_pair" => Ok(LetterShape::LMirroredPair),
            other => Err(Error::invalid(format!(
                "unknown shape `{other}` (expected S, W, J, L, or L_mirrored_pair)"
            ))),
        }
    }
}

/// A pen stroke built from straight lines and circular arcs, parametrized by arc length.
enum Piece {
    Line([f64; 2], [f64; 2]),
    /// Center, radius, start angle, end angle (radians).
    Arc([f64; 2], f64, f64, f64),
}

impl Piece {
    fn length(&self) -> f64 {
        match *self {
            Piece::Line(a, b) => ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt(),
            Piece::Arc(_, r, a0, a1) => r * (a1 - a0).abs(),
        }
    }

    fn at(&self, u: f64) -> [f64; 2] {
        match *self {
            Piece::Line(a, b) => [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])],
            Piece::Arc(c, r, a0, a1) => {
                let th = a0 + u * (a1 - a0);
                [c[0] + r * th.cos(), c[1] + r * th.sin()]
            }
        }
    }
}

fn stroke_at(pieces: &[Piece], s: f64) -> [f64; 2] {
    let total: f64 = pieces.iter().map(Piece::length).sum();
    let mut rem = s.clamp(0.0, 1.0) * total;
    for p in pieces {
        let len = p.length();
        if rem <= len {
            return p.at(rem / len);
        }
        rem -= len;
    }
    pieces.last().unwrap().at(1.0)
}

fn letter_stroke(shape: LetterShape) -> Vec<Piece> {
    let deg = PI / 180.0;
    match shape {
        LetterShape::S => vec![
            Piece::Arc([0.0, 0.5], 0.5, 30.0 * deg, 270.0 * deg),
            Piece::Arc([0.0, -0.5], 0.5, 90.0 * deg, -150.0 * deg),
        ],
        LetterShape::J => vec![
            Piece::Line([0.3, 1.0], [0.3, 0.0]),
            Piece::Arc([0.0, 0.0], 0.3, 0.0, -180.0 * deg),
        ],
        LetterShape::L | LetterShape::LMirroredPair => vec![
            Piece::Line([0.25, 1.0], [0.25, 0.2]),
            Piece::Arc([0.45, 0.2], 0.2, 180.0 * deg, 270.0 * deg),
            Piece::Line([0.45, 0.0], [0.9, 0.0]),
        ],
        LetterShape::W => Vec::new(),
    }
}

fn letter_point(shape: LetterShape, pieces: &[Piece], s: f64) -> [f64; 2] {
    match shape {
        LetterShape::W => [2.0 * s - 1.0, 0.5 * (4.0 * PI * s).cos()],
        _ => stroke_at(pieces, s),
    }
}

/// Smooth 2-D letter trajectories, decelerating into a common goal.
///
/// Each demonstration is the letter curve plus a deformation
/// `(1 − s)·n₀ + sin(πs)·n₁` with `n₀, n₁ ~ N(0, noise_scale²·I)`, so that all
/// demonstrations of one shape share the endpoint. `L_mirrored_pair` emits
/// `num_demos` copies of an `L` and of its mirror image about `x = 0`; the two
/// modes start close together at the top of the stroke, 0.5 apart.
pub fn synthesize_letter<R: Rng + ?Sized>(
    shape: LetterShape,
    num_demos: usize,
    t_m: usize,
    noise_scale: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if num_demos == 0 {
        return Err(Error::invalid("num_demos must be at least 1"));
    }
    if t_m < 16 {
        return Err(Error::invalid("T_m must be at least 16"));
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::invalid("noise_scale must be nonnegative"));
    }
    let kind = ManifoldKind::euclidean(2)?;
    let pieces = letter_stroke(shape);
    let mirrors: &[f64] = if shape == LetterShape::LMirroredPair { &[1.0, -1.0] } else { &[1.0] };
    let mut demos = Vec::new();
    for &mirror in mirrors {
        for _ in 0..num_demos {
            let mut noise = [0.0; 4];
            for n in &mut noise {
                *n = noise_scale * rng.sample::<f64, _>(StandardNormal);
            }
            let points = (0..t_m)
                .map(|k| {
                    let u = k as f64 / (t_m - 1) as f64;
                    // Ease-out progress: full speed at the start, at rest at the goal.
                    let s = (0.5 * PI * u).sin();
                    let [x, y] = letter_point(shape, &pieces, s);
                    let (a, b) = (1.0 - s, (PI * s).sin());
                    let x = mirror * x + a * noise[0] + b * noise[1];
                    let y = y + a * noise[2] + b * noise[3];
                    ManifoldPoint::new(vec![x, y], kind)
                })
                .collect::<Result<Vec<_>>>()?;
            demos.push(Demonstration {
                id: demos.len() as u64,
                points,
                source_dim: 2,
            });
        }
    }
    Dataset::new(demos, kind)
}

/// Reads the trajectory CSV format: header `demo_id,t,x0,…,x{d−1}`, with
/// optional leading `# key=value` lines (`manifold=sphere:2` declares ambient
/// sphere coordinates).
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

/// Parses CSV text in the format of [`load_csv`].
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut declared: Option<ManifoldKind> = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
            if k.trim() == "manifold" {
                declared = Some(ManifoldKind::parse_tag(v)?);
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_line = text.lines().take_while(|l| l.starts_with('#')).count() + 1;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { line: header_line, msg: e.to_string() })?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Parse { line: header_line, msg: "missing header".into() });
    }
    if headers.len() < 3 || &headers[0] != "demo_id" || &headers[1] != "t" {
        return Err(Error::Parse {
            line: header_line,
            msg: "header must start with demo_id,t and have at least one coordinate column".into(),
        });
    }
    let dim = headers.len() - 2;
    for (i, h) in headers.iter().skip(2).enumerate() {
        if h != format!("x{i}") {
            return Err(Error::Parse { line: header_line, msg: format!("expected column x{i}, found `{h}`") });
        }
    }
    let kind = match declared {
        Some(k) if k.ambient_dim() != dim => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("declared manifold {k} needs {} columns, file has {dim}", k.ambient_dim()),
            })
        }
        Some(k) => k,
        None => ManifoldKind::euclidean(dim)?,
    };

    // (demo_id, first row line, points)
    let mut demos: Vec<(u64, usize, Vec<ManifoldPoint>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let err = |msg: String| Error::Parse { line, msg };
        if rec.len() != headers.len() {
            return Err(err(format!("expected {} fields, found {}", headers.len(), rec.len())));
        }
        let id: u64 = rec[0].parse().map_err(|_| err(format!("bad demo_id `{}`", &rec[0])))?;
        let t: usize = rec[1].parse().map_err(|_| err(format!("bad timestep `{}`", &rec[1])))?;
        let coords = rec
            .iter()
            .skip(2)
            .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad coordinate `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        let point = ManifoldPoint::new(coords, kind).map_err(|e| err(e.to_string()))?;
        let slot = match demos.iter().position(|d| d.0 == id) {
            Some(i) if i + 1 == demos.len() => i,
            Some(_) => return Err(err(format!("rows of demo {id} are not contiguous"))),
            None => {
                demos.push((id, line, Vec::new()));
                demos.len() - 1
            }
        };
        let pts = &mut demos[slot].2;
        if t < pts.len() {
            return Err(err(format!("duplicated or non-monotone timestep {t} in demo {id}")));
        }
        if t != pts.len() {
            return Err(err(format!("timestep {t} in demo {id} skips {}", pts.len())));
        }
        pts.push(point);
    }
    if demos.is_empty() {
        return Err(Error::Parse { line: header_line + 1, msg: "file contains no data rows".into() });
    }
    let t_m = demos[0].2.len();
    if let Some(d) = demos.iter().find(|d| d.2.len() != t_m) {
        return Err(Error::Parse {
            line: d.1,
            msg: format!("ragged demonstrations: demo {} has {} points, expected {t_m}", d.0, d.2.len()),
        });
    }
    let source_dim = kind.intrinsic_dim();
    Dataset::new(
        demos
            .into_iter()
            .map(|(id, _, points)| Demonstration { id, points, source_dim })
            .collect(),
        kind,
    )
}

/// Renders trajectories as CSV text. `meta` entries become leading `# key=value` lines.
pub fn trajectories_to_csv<'a, I>(trajs: I, kind: ManifoldKind, meta: &[(String, String)]) -> String
where
    I: IntoIterator<Item = (u64, &'a [ManifoldPoint])>,
{
    use std::fmt::Write;
    let mut out = String::new();
    if !kind.is_euclidean() {
        let _ = writeln!(out, "# manifold={}", kind.tag());
    }
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("demo_id,t");
    for i in 0..kind.ambient_dim() {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for (id, pts) in trajs {
        for (t, p) in pts.iter().enumerate() {
            let _ = write!(out, "{id},{t}");
            for c in p.coords() {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn dataset_to_csv(dataset: &Dataset, meta: &[(String, String)]) -> String {
    trajectories_to_csv(
        dataset.demos.iter().map(|d| (d.id, d.points.as_slice())),
        dataset.manifold,
        meta,
    )
}

pub const MANIFEST_SCHEMA: &str = "rfmp.dataset-manifest";
pub const MANIFEST_VERSION: u32 = 1;

/// Sidecar describing how a dataset CSV was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema: String,
    pub version: u32,
    pub manifold: String,
    pub num_demos: usize,
    pub demo_len: usize,
    pub normalization: Normalization,
    pub split: SplitAssignment,
    #[serde(default)]
    pub meta: std::collections::BTreeMap<String, String>,
}

impl DatasetManifest {
    pub fn from_dataset(dataset: &Dataset, meta: std::collections::BTreeMap<String, String>) -> Self {
        DatasetManifest {
            schema: MANIFEST_SCHEMA.into(),
            version: MANIFEST_VERSION,
            manifold: dataset.manifold.tag(),
            num_demos: dataset.demos.len(),
            demo_len: dataset.demo_len(),
            normalization: dataset.normalization.clone(),
            split: dataset.split.clone(),
            meta,
        }
    }

    /// Attaches normalization and split to a dataset loaded from CSV.
    pub fn apply(&self, mut dataset: Dataset) -> Result<Dataset> {
        if self.schema != MANIFEST_SCHEMA || self.version != MANIFEST_VERSION {
            return Err(Error::Schema(format!(
                "unsupported manifest {} v{}",
                self.schema, self.version
            )));
        }
        if ManifoldKind::parse_tag(&self.manifold)? != dataset.manifold {
            return Err(Error::Schema("manifest manifold does not match the CSV".into()));
        }
        if self.num_demos != dataset.demos.len() {
            return Err(Error::Schema("manifest demo count does not match the CSV".into()));
        }
        let valid = |p: &PairIndex| p.demo < dataset.demos.len() && p.tau >= 3 && p.tau < dataset.demos[p.demo].len();
        for s in [&self.split.train, &self.split.val, &self.split.test] {
            if !s.iter().all(valid) {
                return Err(Error::Schema("manifest split refers to missing pairs".into()));
            }
        }
        dataset.normalization = self.normalization.clone();
        dataset.split = self.split.clone();
        Ok(dataset)
    }
}
