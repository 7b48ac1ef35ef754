//! Deterministic desk-scale dataset generator with planted ground truth.
//!
//! Each tracklet draws one class per attribute group; that class's
//! template vector is injected into a few designated "signal" frames and
//! everything else is Gaussian noise. A sidecar file records which frames
//! carry each group's signal, so attention localization can be scored
//! against ground truth.
//!
//! Conflict mode manufactures the feature competition that channel
//! separation and temporal attention are meant to solve: motion/pose and
//! ID-relevant templates become anti-correlated on the same coordinates,
//! each group's signal frame additionally carries a per-group key-frame
//! marker, and the remaining frames receive decoy class templates. The
//! true class is then recoverable only by reading the template that
//! co-occurs with the marker, which frame averaging destroys and
//! per-frame attention preserves.

use crate::data::{format_annotations, write_tracklet_features, AnnotationRecord, TrackletFeatures};
use crate::error::{Error, Result};
use crate::model::derive_seed;
use crate::schema::{AttributeSchema, Channel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Default 3-group schema: one motion/pose-channel group plus two
/// ID-relevant groups with 2 and 4 classes.
pub const SYNTH_SCHEMA: &str = "\
motion|mp|still,walking,running
bag|id|no,yes
top_color|id|red,green,blue,black
";

fn default_schema_text() -> String {
    SYNTH_SCHEMA.to_string()
}

fn default_train() -> usize {
    400
}
fn default_test() -> usize {
    100
}
fn default_frames() -> usize {
    12
}
fn default_d_c() -> usize {
    64
}
fn default_grid() -> usize {
    2
}
fn default_signal_frames() -> usize {
    1
}
fn default_noise_sigma() -> f64 {
    0.1
}
fn default_signal_scale() -> f64 {
    1.0
}

/// Generator parameters. Defaults are the desk-scale benchmark: 400/100
/// tracklets, F=12 frames, 64 channels over a 2×2 grid, one signal frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticSpec {
    #[serde(default = "default_train")]
    pub train_tracklets: usize,
    #[serde(default = "default_test")]
    pub test_tracklets: usize,
    #[serde(default = "default_frames")]
    pub frames: usize,
    #[serde(default = "default_d_c")]
    pub d_c: usize,
    #[serde(default = "default_grid")]
    pub h_g: usize,
    #[serde(default = "default_grid")]
    pub w_g: usize,
    /// Schema text in the standard schema file format.
    #[serde(default = "default_schema_text")]
    pub schema: String,
    /// How many frames carry each group's class template.
    #[serde(default = "default_signal_frames")]
    pub signal_frames: usize,
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma: f64,
    /// Template entry magnitude; templates are ±scale vectors.
    #[serde(default = "default_signal_scale")]
    pub signal_scale: f64,
    /// Fraction of (tracklet, group) labels emitted as `?`.
    #[serde(default)]
    pub unknown_rate: f64,
    /// Anti-correlate motion/pose templates with ID-relevant templates.
    #[serde(default)]
    pub conflict_mode: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            train_tracklets: default_train(),
            test_tracklets: default_test(),
            frames: default_frames(),
            d_c: default_d_c(),
            h_g: default_grid(),
            w_g: default_grid(),
            schema: default_schema_text(),
            signal_frames: default_signal_frames(),
            noise_sigma: default_noise_sigma(),
            signal_scale: default_signal_scale(),
            unknown_rate: 0.0,
            conflict_mode: false,
            seed: 0,
        }
    }
}

/// Everything `generate` wrote, plus the planted templates for oracles.
pub struct GeneratedDataset {
    pub root: PathBuf,
    pub schema_path: PathBuf,
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    pub annotations: PathBuf,
    pub sidecar: PathBuf,
    pub schema: AttributeSchema,
    /// templates[group][class] is the planted d_c-length direction.
    pub templates: Vec<Vec<Vec<f64>>>,
}

/// Entry (i, j) of the Sylvester Hadamard matrix of size `len` (a power
/// of two): ±1 with sign from popcount(i & j).
fn hadamard_row(index: usize, len: usize) -> Vec<f64> {
    (0..len)
        .map(|j| {
            if (index & j).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Fraction of non-signal frames that carry a decoy template per group
/// in conflict mode.
const DECOY_RATE: f64 = 1.0;

/// The planted linear structure: per-class templates, plus per-group
/// key-frame markers in conflict mode.
pub struct SignalDesign {
    /// templates[group][class] is a d_c-length direction.
    pub templates: Vec<Vec<Vec<f64>>>,
    /// Per-group marker added to that group's signal frames
    /// (conflict mode only).
    pub markers: Option<Vec<Vec<f64>>>,
}

/// Class templates: mutually orthogonal ±1 rows (Hadamard when d_c is a
/// power of two and large enough, random ±1 otherwise), scaled to a fixed
/// norm.
///
/// Conflict mode changes three things. The first ID-relevant group's
/// templates become exact negatives of the first motion/pose group's, so
/// the two channels signal on the same coordinates with opposite sign.
/// Each group also gets an orthogonal key-frame marker row, and decoy
/// templates are planted on non-signal frames at render time: the true
/// class is then bound to the marked frame, which frame averaging cannot
/// recover. Negated Sylvester rows never collide with other rows
/// (coordinate 0 flips sign), so every class stays identifiable.
fn build_design(
    schema: &AttributeSchema,
    d_c: usize,
    scale: f64,
    conflict_mode: bool,
    seed: u64,
) -> SignalDesign {
    let class_total: usize = schema.groups().iter().map(|g| g.classes.len()).sum();
    let total = class_total + if conflict_mode { schema.len() } else { 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "templates"));

    let mut rows: Vec<Vec<f64>> = if d_c.is_power_of_two() && total < d_c {
        // Skip row 0 (all ones) so every template is zero-mean.
        let mut indices: Vec<usize> = (1..d_c).collect();
        indices.shuffle(&mut rng);
        indices
            .into_iter()
            .take(total)
            .map(|i| hadamard_row(i, d_c))
            .collect()
    } else {
        (0..total)
            .map(|_| {
                (0..d_c)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect()
    };
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }

    let mut templates: Vec<Vec<Vec<f64>>> = Vec::with_capacity(schema.len());
    let mut next = 0;
    for g in schema.groups() {
        let take = g.classes.len();
        templates.push(rows[next..next + take].to_vec());
        next += take;
    }
    let markers = if conflict_mode {
        Some(rows[next..next + schema.len()].to_vec())
    } else {
        None
    };

    if conflict_mode {
        let mp = schema
            .groups()
            .iter()
            .position(|g| g.channel == Channel::MotionPose);
        let id = schema
            .groups()
            .iter()
            .position(|g| g.channel == Channel::IdRelevant);
        if let (Some(mp_idx), Some(id_idx)) = (mp, id) {
            let mp_templates = templates[mp_idx].clone();
            let pairs = templates[id_idx].len().min(mp_templates.len());
            for c in 0..pairs {
                templates[id_idx][c] = mp_templates[c].iter().map(|v| -v).collect();
            }
        }
    }

    SignalDesign { templates, markers }
}

/// Pick each group's signal frames, disjoint across groups while frames
/// allow it.
fn pick_signal_frames(
    groups: usize,
    frames: usize,
    signal_frames: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<usize>> {
    if groups * signal_frames <= frames {
        let mut order: Vec<usize> = (0..frames).collect();
        order.shuffle(rng);
        (0..groups)
            .map(|g| {
                let mut slot: Vec<usize> =
                    order[g * signal_frames..(g + 1) * signal_frames].to_vec();
                slot.sort_unstable();
                slot
            })
            .collect()
    } else {
        (0..groups)
            .map(|_| {
                let mut slot: Vec<usize> =
                    rand::seq::index::sample(rng, frames, signal_frames.min(frames)).into_vec();
                slot.sort_unstable();
                slot
            })
            .collect()
    }
}

struct TrackletPlan {
    id: String,
    classes: Vec<usize>,
    known: Vec<bool>,
    signal_frames: Vec<Vec<usize>>,
}

fn plan_tracklet(
    id: String,
    spec: &SyntheticSpec,
    schema: &AttributeSchema,
    seed: u64,
) -> TrackletPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes: Vec<usize> = schema
        .groups()
        .iter()
        .map(|g| rng.random_range(0..g.classes.len()))
        .collect();
    let known: Vec<bool> = schema
        .groups()
        .iter()
        .map(|_| rng.random::<f64>() >= spec.unknown_rate)
        .collect();
    let signal_frames = pick_signal_frames(schema.len(), spec.frames, spec.signal_frames, &mut rng);
    TrackletPlan {
        id,
        classes,
        known,
        signal_frames,
    }
}

fn render_features(
    plan: &TrackletPlan,
    spec: &SyntheticSpec,
    design: &SignalDesign,
    seed: u64,
) -> Result<TrackletFeatures> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = spec.h_g * spec.w_g;
    let frame_len = spec.d_c * grid;
    let mut data = vec![0f32; spec.frames * frame_len];

    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| Error::Invalid(format!("noise distribution: {e}")))?;
        for v in data.iter_mut() {
            *v = noise.sample(&mut rng) as f32;
        }
    }

    // Tile a direction across the spatial grid of one frame.
    let inject = |data: &mut [f32], frame: usize, direction: &[f64]| {
        let base = frame * frame_len;
        for (c, &t) in direction.iter().enumerate() {
            for p in 0..grid {
                data[base + c * grid + p] += t as f32;
            }
        }
    };

    for (g, frames) in plan.signal_frames.iter().enumerate() {
        let template = &design.templates[g][plan.classes[g]];
        for &f in frames {
            inject(&mut data, f, template);
            if let Some(markers) = &design.markers {
                inject(&mut data, f, &markers[g]);
            }
        }
    }

    // Conflict mode: unmarked frames carry decoy class templates, so the
    // pooled class statistics are swamped and only the marked frame binds
    // the true class.
    if design.markers.is_some() {
        let marked: std::collections::HashSet<usize> =
            plan.signal_frames.iter().flatten().copied().collect();
        for g in 0..design.templates.len() {
            for f in 0..spec.frames {
                if marked.contains(&f) || rng.random::<f64>() >= DECOY_RATE {
                    continue;
                }
                let class = rng.random_range(0..design.templates[g].len());
                inject(&mut data, f, &design.templates[g][class]);
            }
        }
    }

    TrackletFeatures::new(
        plan.id.clone(),
        spec.frames,
        spec.d_c,
        spec.h_g,
        spec.w_g,
        data,
    )
}

/// Generate the dataset under `out_dir`: feature files, train/test
/// manifests, annotations, the schema file, and the signal-frame sidecar.
/// Byte-identical across runs with the same spec.
pub fn generate(spec: &SyntheticSpec, out_dir: &Path) -> Result<GeneratedDataset> {
    if spec.train_tracklets == 0 || spec.test_tracklets == 0 {
        return Err(Error::Invalid("need at least one train and one test tracklet".into()));
    }
    if spec.frames == 0 || spec.d_c == 0 || spec.h_g == 0 || spec.w_g == 0 {
        return Err(Error::Invalid("dims must be positive".into()));
    }
    if spec.signal_frames == 0 || spec.signal_frames > spec.frames {
        return Err(Error::Invalid(format!(
            "signal_frames must be in 1..=frames, got {} of {}",
            spec.signal_frames, spec.frames
        )));
    }
    if spec.noise_sigma < 0.0 {
        return Err(Error::Invalid("noise_sigma must be nonnegative".into()));
    }
    let schema = AttributeSchema::parse(&spec.schema, Path::new("<synthetic spec>"))?;

    let features_dir = out_dir.join("features");
    std::fs::create_dir_all(&features_dir).map_err(|e| Error::io(&features_dir, e))?;

    let design = build_design(
        &schema,
        spec.d_c,
        spec.signal_scale,
        spec.conflict_mode,
        spec.seed,
    );

    let mut records: Vec<AnnotationRecord> = Vec::new();
    let mut sidecar = String::from("# tracklet_id\tgroup\tsignal_frame_indices\n");
    let mut manifests = (String::new(), String::new());

    for (split, count) in [("train", spec.train_tracklets), ("test", spec.test_tracklets)] {
        for i in 0..count {
            let id = format!("{split}_{i:05}");
            let plan = plan_tracklet(
                id.clone(),
                spec,
                &schema,
                derive_seed(spec.seed, &format!("plan.{id}")),
            );
            let features = render_features(
                &plan,
                spec,
                &design,
                derive_seed(spec.seed, &format!("noise.{id}")),
            )?;
            let rel = format!("features/{id}.tfeat");
            write_tracklet_features(&out_dir.join(&rel), &features)?;

            let manifest = if split == "train" {
                &mut manifests.0
            } else {
                &mut manifests.1
            };
            writeln!(manifest, "{id}\t{rel}").unwrap();

            records.push(AnnotationRecord {
                tracklet_id: id.clone(),
                labels: plan
                    .classes
                    .iter()
                    .zip(&plan.known)
                    .map(|(&c, &known)| if known { Some(c) } else { None })
                    .collect(),
            });

            for (g, group) in schema.groups().iter().enumerate() {
                let frames: Vec<String> =
                    plan.signal_frames[g].iter().map(|f| f.to_string()).collect();
                writeln!(sidecar, "{id}\t{}\t{}", group.name, frames.join(",")).unwrap();
            }
        }
    }

    let schema_path = out_dir.join("schema.txt");
    let train_manifest = out_dir.join("train.manifest");
    let test_manifest = out_dir.join("test.manifest");
    let annotations_path = out_dir.join("annotations.tsv");
    let sidecar_path = out_dir.join("signal_frames.tsv");
    std::fs::write(&schema_path, schema.serialize()).map_err(|e| Error::io(&schema_path, e))?;
    std::fs::write(&train_manifest, &manifests.0).map_err(|e| Error::io(&train_manifest, e))?;
    std::fs::write(&test_manifest, &manifests.1).map_err(|e| Error::io(&test_manifest, e))?;
    std::fs::write(&annotations_path, format_annotations(&records, &schema))
        .map_err(|e| Error::io(&annotations_path, e))?;
    std::fs::write(&sidecar_path, &sidecar).map_err(|e| Error::io(&sidecar_path, e))?;

    Ok(GeneratedDataset {
        root: out_dir.to_path_buf(),
        schema_path,
        train_manifest,
        test_manifest,
        annotations: annotations_path,
        sidecar: sidecar_path,
        schema,
        templates: design.templates,
    })
}

/// Read the sidecar back: (tracklet_id, group) → signal frame indices.
pub fn parse_sidecar(path: &Path) -> Result<HashMap<(String, String), Vec<usize>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(path, idx + 1, "expected 3 tab-separated fields"));
        }
        let frames = fields[2]
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::parse(path, idx + 1, format!("bad frame index '{f}'")))
            })
            .collect::<Result<Vec<usize>>>()?;
        out.insert((fields[0].to_string(), fields[1].to_string()), frames);
    }
    Ok(out)
}
