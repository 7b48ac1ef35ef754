//! The recognition head: channel reduction units, per-attribute temporal
//! attention, weighted frame fusion, per-attribute classifiers, and the
//! ablation variants wiring them together.

use crate::error::{Error, Result};
use crate::schema::{AttributeSchema, Channel};
use crate::tape::{Tape, ValueId};
use crate::tensor::{Real, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"TATR";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Ablation variants: which of the two strategies are enabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Uniform frame averaging, one shared channel unit.
    TemporalPooling,
    /// Uniform frame averaging, separated channel units.
    TemporalPoolingSeparated,
    /// Per-attribute temporal attention, one shared channel unit.
    SharedChannel,
    /// Per-attribute temporal attention, separated channel units.
    Proposed,
}

impl Variant {
    pub fn has_attention(self) -> bool {
        matches!(self, Variant::SharedChannel | Variant::Proposed)
    }

    pub fn separated_channels(self) -> bool {
        matches!(self, Variant::TemporalPoolingSeparated | Variant::Proposed)
    }

    pub fn unit_count(self) -> usize {
        if self.separated_channels() {
            2
        } else {
            1
        }
    }

    /// Stable short name used by the CLI and in report rows.
    pub fn name(self) -> &'static str {
        match self {
            Variant::TemporalPooling => "pool",
            Variant::TemporalPoolingSeparated => "pool-sep",
            Variant::SharedChannel => "shared",
            Variant::Proposed => "proposed",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pool" => Some(Variant::TemporalPooling),
            "pool-sep" => Some(Variant::TemporalPoolingSeparated),
            "shared" => Some(Variant::SharedChannel),
            "proposed" => Some(Variant::Proposed),
            _ => None,
        }
    }

    /// All four variants in ablation-table order.
    pub fn all() -> [Variant; 4] {
        [
            Variant::TemporalPooling,
            Variant::TemporalPoolingSeparated,
            Variant::SharedChannel,
            Variant::Proposed,
        ]
    }

    fn code(self) -> u32 {
        match self {
            Variant::TemporalPooling => 0,
            Variant::TemporalPoolingSeparated => 1,
            Variant::SharedChannel => 2,
            Variant::Proposed => 3,
        }
    }

    fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Variant::TemporalPooling),
            1 => Some(Variant::TemporalPoolingSeparated),
            2 => Some(Variant::SharedChannel),
            3 => Some(Variant::Proposed),
            _ => None,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Structural dimensions of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Frames per training sample.
    pub n: usize,
    /// Feature channel width (2048 for the full-scale backbone).
    pub d_c: usize,
    /// Attention hidden width.
    pub d_a: usize,
}

/// 1×1 convolution over the spatial grid + spatial average pooling.
/// `weight` is input-major: output channel o reads column o.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelUnit<F> {
    pub weight: Tensor<F>, // d_c × d_c
    pub bias: Tensor<F>,   // d_c
}

/// Additive attention scorer: projection → tanh → scalar score per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionModule<F> {
    pub proj_weight: Tensor<F>,  // d_c × d_a
    pub proj_bias: Tensor<F>,    // d_a
    pub score_weight: Tensor<F>, // d_a × 1
    pub score_bias: Tensor<F>,   // 1
}

/// Per-group fully connected classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierHead<F> {
    pub weight: Tensor<F>, // d_c × classes
    pub bias: Tensor<F>,   // classes
}

/// All learnable parameters plus the routing metadata derived from the
/// schema at build time.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F> {
    pub config: ModelConfig,
    /// Index 0 serves motion & pose groups when separated, index 1 the
    /// rest; a single shared unit otherwise.
    pub channel_units: Vec<ChannelUnit<F>>,
    /// One per group for attention variants, empty otherwise.
    pub attention: Vec<AttentionModule<F>>,
    pub heads: Vec<ClassifierHead<F>>,
    pub group_names: Vec<String>,
    pub group_channels: Vec<Channel>,
    pub class_counts: Vec<usize>,
    pub schema_digest: [u8; 32],
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a run seed and a label.
/// Parameter tensors shared between variants (units, heads) draw from the
/// same stream regardless of which other parameters a variant owns,
/// keeping paired runs comparable; evaluation derives per-tracklet
/// streams the same way.
pub(crate) fn derive_seed(seed: u64, name: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(seed ^ h)
}

fn init_tensor<F: Real>(shape: &[usize], fan_in: usize, fan_out: usize, seed: u64) -> Tensor<F> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..shape.iter().product::<usize>())
        .map(|_| F::from_f64(rng.random_range(-limit..limit)))
        .collect();
    Tensor::from_vec(shape, data).expect("init shape")
}

fn unit_label(variant: Variant, idx: usize) -> &'static str {
    if variant.separated_channels() {
        if idx == 0 {
            "mp"
        } else {
            "id"
        }
    } else {
        "shared"
    }
}

/// Build a model with fan-balanced uniform weights and zero biases,
/// deterministic in `seed`.
pub fn build_model<F: Real>(
    schema: &AttributeSchema,
    config: ModelConfig,
    seed: u64,
) -> Result<ModelParams<F>> {
    if schema.is_empty() {
        return Err(Error::Invalid("cannot build a model over an empty schema".into()));
    }
    if config.n == 0 || config.d_c == 0 || config.d_a == 0 {
        return Err(Error::Invalid(format!(
            "model dims must be positive: n={} d_c={} d_a={}",
            config.n, config.d_c, config.d_a
        )));
    }
    let d_c = config.d_c;
    let d_a = config.d_a;

    let channel_units = (0..config.variant.unit_count())
        .map(|u| {
            let label = unit_label(config.variant, u);
            ChannelUnit {
                weight: init_tensor(
                    &[d_c, d_c],
                    d_c,
                    d_c,
                    derive_seed(seed, &format!("unit.{label}.weight")),
                ),
                bias: Tensor::zeros(&[d_c]),
            }
        })
        .collect();

    let attention = if config.variant.has_attention() {
        schema
            .groups()
            .iter()
            .map(|g| AttentionModule {
                proj_weight: init_tensor(
                    &[d_c, d_a],
                    d_c,
                    d_a,
                    derive_seed(seed, &format!("attn.{}.proj_weight", g.name)),
                ),
                proj_bias: Tensor::zeros(&[d_a]),
                score_weight: init_tensor(
                    &[d_a, 1],
                    d_a,
                    1,
                    derive_seed(seed, &format!("attn.{}.score_weight", g.name)),
                ),
                score_bias: Tensor::zeros(&[1]),
            })
            .collect()
    } else {
        Vec::new()
    };

    let heads = schema
        .groups()
        .iter()
        .map(|g| ClassifierHead {
            weight: init_tensor(
                &[d_c, g.classes.len()],
                d_c,
                g.classes.len(),
                derive_seed(seed, &format!("head.{}.weight", g.name)),
            ),
            bias: Tensor::zeros(&[g.classes.len()]),
        })
        .collect();

    Ok(ModelParams {
        config,
        channel_units,
        attention,
        heads,
        group_names: schema.groups().iter().map(|g| g.name.clone()).collect(),
        group_channels: schema.groups().iter().map(|g| g.channel).collect(),
        class_counts: schema.groups().iter().map(|g| g.classes.len()).collect(),
        schema_digest: schema.digest(),
    })
}

impl<F: Real> ModelParams<F> {
    pub fn group_count(&self) -> usize {
        self.heads.len()
    }

    /// Which channel unit serves `group`.
    pub fn unit_index(&self, group: usize) -> usize {
        if self.config.variant.separated_channels()
            && self.group_channels[group] == Channel::IdRelevant
        {
            1
        } else {
            0
        }
    }

    /// Parameter tensors in the fixed declaration order used by the
    /// checkpoint format, the optimizer, and gradient extraction.
    pub fn params(&self) -> Vec<&Tensor<F>> {
        let mut out = Vec::with_capacity(self.param_tensor_count());
        for u in &self.channel_units {
            out.push(&u.weight);
            out.push(&u.bias);
        }
        for a in &self.attention {
            out.push(&a.proj_weight);
            out.push(&a.proj_bias);
            out.push(&a.score_weight);
            out.push(&a.score_bias);
        }
        for h in &self.heads {
            out.push(&h.weight);
            out.push(&h.bias);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<F>> {
        let mut out = Vec::with_capacity(self.param_tensor_count());
        for u in &mut self.channel_units {
            out.push(&mut u.weight);
            out.push(&mut u.bias);
        }
        for a in &mut self.attention {
            out.push(&mut a.proj_weight);
            out.push(&mut a.proj_bias);
            out.push(&mut a.score_weight);
            out.push(&mut a.score_bias);
        }
        for h in &mut self.heads {
            out.push(&mut h.weight);
            out.push(&mut h.bias);
        }
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.param_tensor_count());
        for (i, _) in self.channel_units.iter().enumerate() {
            let label = unit_label(self.config.variant, i);
            out.push(format!("unit.{label}.weight"));
            out.push(format!("unit.{label}.bias"));
        }
        if self.config.variant.has_attention() {
            for name in &self.group_names {
                out.push(format!("attn.{name}.proj_weight"));
                out.push(format!("attn.{name}.proj_bias"));
                out.push(format!("attn.{name}.score_weight"));
                out.push(format!("attn.{name}.score_bias"));
            }
        }
        for name in &self.group_names {
            out.push(format!("head.{name}.weight"));
            out.push(format!("head.{name}.bias"));
        }
        out
    }

    pub fn param_tensor_count(&self) -> usize {
        self.channel_units.len() * 2 + self.attention.len() * 4 + self.heads.len() * 2
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.params().iter().map(|t| t.numel()).collect()
    }

    pub fn total_values(&self) -> usize {
        self.params().iter().map(|t| t.numel()).sum()
    }

    /// Indices (into `params()`) of one channel unit's parameters.
    pub fn unit_param_indices(&self, unit: usize) -> [usize; 2] {
        [unit * 2, unit * 2 + 1]
    }
}

// ── Forward graph ────────────────────────────────────────────────────

/// Tape handles for every parameter, in `params()` order, plus the
/// structured views the forward pass needs.
pub struct TapedModel {
    pub all: Vec<ValueId>,
    unit_w: Vec<ValueId>,
    unit_b: Vec<ValueId>,
    attn: Vec<[ValueId; 4]>,
    head_w: Vec<ValueId>,
    head_b: Vec<ValueId>,
}

/// Register every parameter tensor on the tape.
pub fn register_model<F: Real>(tape: &mut Tape<F>, model: &ModelParams<F>) -> TapedModel {
    let mut unit_w = Vec::new();
    let mut unit_b = Vec::new();
    let mut attn = Vec::new();
    let mut head_w = Vec::new();
    let mut head_b = Vec::new();
    let mut all = Vec::with_capacity(model.param_tensor_count());
    for u in &model.channel_units {
        let w = tape.leaf(&u.weight);
        let b = tape.leaf(&u.bias);
        unit_w.push(w);
        unit_b.push(b);
        all.push(w);
        all.push(b);
    }
    for a in &model.attention {
        let ids = [
            tape.leaf(&a.proj_weight),
            tape.leaf(&a.proj_bias),
            tape.leaf(&a.score_weight),
            tape.leaf(&a.score_bias),
        ];
        attn.push(ids);
        all.extend_from_slice(&ids);
    }
    for h in &model.heads {
        let w = tape.leaf(&h.weight);
        let b = tape.leaf(&h.bias);
        head_w.push(w);
        head_b.push(b);
        all.push(w);
        all.push(b);
    }
    TapedModel {
        all,
        unit_w,
        unit_b,
        attn,
        head_w,
        head_b,
    }
}

/// Transpose one channel-major frame map into a grid-major matrix leaf
/// (grid cells × channels) so the 1×1 convolution becomes a matmul.
fn frame_leaf<F: Real>(
    tape: &mut Tape<F>,
    frame: &[f32],
    d_c: usize,
    grid: usize,
) -> Result<ValueId> {
    if frame.len() != d_c * grid {
        return Err(Error::Invalid(format!(
            "frame has {} values, model expects {}×{}",
            frame.len(),
            d_c,
            grid
        )));
    }
    let mut data = vec![F::zero(); frame.len()];
    for c in 0..d_c {
        for p in 0..grid {
            data[p * d_c + c] = F::from_f32(frame[c * grid + p]);
        }
    }
    tape.leaf_from(&[grid, d_c], data)
}

/// Per-frame 1×1 conv + ReLU + spatial mean, stacked into S (n × d_c).
fn build_unit_s<F: Real>(
    tape: &mut Tape<F>,
    frame_leaves: &[ValueId],
    weight: ValueId,
    bias: ValueId,
) -> Result<ValueId> {
    let mut rows = Vec::with_capacity(frame_leaves.len());
    for &leaf in frame_leaves {
        let mixed = tape.matmul(leaf, weight)?;
        let biased = tape.add_bias_rows(mixed, bias)?;
        let active = tape.relu(biased);
        rows.push(tape.mean_rows(active)?);
    }
    tape.stack_rows(&rows)
}

/// Additive attention over the rows of S: softmax of per-frame scores.
fn build_attention_a<F: Real>(
    tape: &mut Tape<F>,
    s: ValueId,
    ids: &[ValueId; 4],
) -> Result<ValueId> {
    let hidden = tape.matmul(s, ids[0])?;
    let hidden = tape.add_bias_rows(hidden, ids[1])?;
    let hidden = tape.tanh(hidden);
    let scores = tape.matmul(hidden, ids[2])?;
    let scores = tape.add_bias_rows(scores, ids[3])?;
    tape.softmax(scores)
}

/// Forward output handles for one tracklet, per attribute group.
pub struct TrackletForward {
    pub logits: Vec<ValueId>,
    pub attention: Vec<ValueId>,
}

/// Build the forward graph for one tracklet (n frames of channel-major
/// feature maps over an h×w grid). With `uniform_attention` set, every
/// group fuses frames with constant 1/n weights and the attention
/// subgraph is never built — used by pooling variants and by training
/// runs that pin attention at uniform.
pub fn forward_tracklet<F: Real>(
    tape: &mut Tape<F>,
    model: &ModelParams<F>,
    taped: &TapedModel,
    frames: &[&[f32]],
    h_g: usize,
    w_g: usize,
    uniform_attention: bool,
) -> Result<TrackletForward> {
    let n = frames.len();
    if n == 0 {
        return Err(Error::Invalid("forward over zero frames".into()));
    }
    let d_c = model.config.d_c;
    let grid = h_g * w_g;
    if grid == 0 {
        return Err(Error::Invalid("spatial grid must be non-empty".into()));
    }

    let frame_leaves: Vec<ValueId> = frames
        .iter()
        .map(|f| frame_leaf(tape, f, d_c, grid))
        .collect::<Result<_>>()?;

    // S per channel unit, computed once and shared by its groups.
    let mut unit_s = Vec::with_capacity(model.channel_units.len());
    for u in 0..model.channel_units.len() {
        unit_s.push(build_unit_s(
            tape,
            &frame_leaves,
            taped.unit_w[u],
            taped.unit_b[u],
        )?);
    }

    let uniform = if model.config.variant.has_attention() && !uniform_attention {
        None
    } else {
        let w = F::from_f64(1.0 / n as f64);
        Some(tape.leaf(&Tensor::vector(vec![w; n])))
    };

    let mut logits = Vec::with_capacity(model.group_count());
    let mut attention = Vec::with_capacity(model.group_count());
    for g in 0..model.group_count() {
        let s = unit_s[model.unit_index(g)];
        let a = match uniform {
            Some(u) => u,
            None => build_attention_a(tape, s, &taped.attn[g])?,
        };
        let fused = tape.attend(a, s)?;
        let scores = tape.matmul(fused, taped.head_w[g])?;
        let group_logits = tape.add_bias_rows(scores, taped.head_b[g])?;
        logits.push(group_logits);
        attention.push(a);
    }

    Ok(TrackletForward { logits, attention })
}

/// Inference convenience: run one tracklet on a private tape and return
/// per-group logits and attention as plain vectors.
pub fn forward_eval<F: Real>(
    model: &ModelParams<F>,
    frames: &[&[f32]],
    h_g: usize,
    w_g: usize,
) -> Result<(Vec<Vec<F>>, Vec<Vec<F>>)> {
    let mut tape = Tape::new();
    let taped = register_model(&mut tape, model);
    let fwd = forward_tracklet(&mut tape, model, &taped, frames, h_g, w_g, false)?;
    let logits = fwd
        .logits
        .iter()
        .map(|&id| tape.value(id).to_vec())
        .collect();
    let attention = fwd
        .attention
        .iter()
        .map(|&id| tape.value(id).to_vec())
        .collect();
    Ok((logits, attention))
}

// ── Standalone component operations ─────────────────────────────────
// Same tape builders, run on a private tape; used directly by tests and
// anywhere a single component result is wanted.

/// Reduce frame maps to the pooled matrix S (n × d_c).
pub fn channel_reduce<F: Real>(
    frames: &[&[f32]],
    h_g: usize,
    w_g: usize,
    unit: &ChannelUnit<F>,
) -> Result<Tensor<F>> {
    if frames.is_empty() {
        return Err(Error::Invalid("channel_reduce over zero frames".into()));
    }
    let d_c = unit.bias.numel();
    let grid = h_g * w_g;
    let mut tape = Tape::new();
    let w = tape.leaf(&unit.weight);
    let b = tape.leaf(&unit.bias);
    let leaves: Vec<ValueId> = frames
        .iter()
        .map(|f| frame_leaf(&mut tape, f, d_c, grid))
        .collect::<Result<_>>()?;
    let s = build_unit_s(&mut tape, &leaves, w, b)?;
    Tensor::from_vec(&[frames.len(), d_c], tape.value(s).to_vec())
}

/// Attention weights A over the rows of S; nonnegative, sums to 1.
pub fn attention_weights<F: Real>(
    s: &Tensor<F>,
    module: &AttentionModule<F>,
) -> Result<Tensor<F>> {
    if s.numel() == 0 {
        return Err(Error::Invalid("attention over an empty S".into()));
    }
    let mut tape = Tape::new();
    let ids = [
        tape.leaf(&module.proj_weight),
        tape.leaf(&module.proj_bias),
        tape.leaf(&module.score_weight),
        tape.leaf(&module.score_bias),
    ];
    let s_id = tape.leaf(s);
    let a = build_attention_a(&mut tape, s_id, &ids)?;
    Ok(Tensor::vector(tape.value(a).to_vec()))
}

/// Fuse frames: F = Σᵢ Aᵢ·Sᵢ.
pub fn attend<F: Real>(a: &Tensor<F>, s: &Tensor<F>) -> Result<Tensor<F>> {
    let mut tape = Tape::new();
    let a_id = tape.leaf(a);
    let s_id = tape.leaf(s);
    let out = tape.attend(a_id, s_id)?;
    Ok(Tensor::vector(tape.value(out).to_vec()))
}

/// Affine classification of a fused feature vector.
pub fn classify<F: Real>(fused: &Tensor<F>, head: &ClassifierHead<F>) -> Result<Tensor<F>> {
    let mut tape = Tape::new();
    let f_id = tape.leaf(fused);
    let w = tape.leaf(&head.weight);
    let b = tape.leaf(&head.bias);
    let scores = tape.matmul(f_id, w)?;
    let logits = tape.add_bias_rows(scores, b)?;
    Ok(Tensor::vector(tape.value(logits).to_vec()))
}

// ── Checkpoints ──────────────────────────────────────────────────────

/// Write `TATR` checkpoint: config block, schema digest, then parameters
/// in declaration order as little-endian f32.
pub fn save_checkpoint<F: Real>(model: &ModelParams<F>, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(CHECKPOINT_MAGIC).map_err(io_err)?;
    for field in [
        CHECKPOINT_VERSION,
        model.config.variant.code(),
        model.config.n as u32,
        model.config.d_c as u32,
        model.config.d_a as u32,
    ] {
        w.write_all(&field.to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&model.schema_digest).map_err(io_err)?;
    w.write_all(&(model.total_values() as u64).to_le_bytes())
        .map_err(io_err)?;
    for tensor in model.params() {
        for v in tensor.data() {
            w.write_all(&v.as_f32().to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Load a checkpoint against a schema; the stored digest must match.
pub fn load_checkpoint<F: Real>(path: &Path, schema: &AttributeSchema) -> Result<ModelParams<F>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::format(path, "truncated while reading magic"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic {:?}, expected {:?}", magic, CHECKPOINT_MAGIC),
        ));
    }
    let mut u32_buf = [0u8; 4];
    let mut next_u32 = |what: &str| -> Result<u32> {
        r.read_exact(&mut u32_buf)
            .map_err(|_| Error::format(path, format!("truncated while reading {what}")))?;
        Ok(u32::from_le_bytes(u32_buf))
    };
    let version = next_u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version}, expected {CHECKPOINT_VERSION}"),
        ));
    }
    let variant_code = next_u32("variant")?;
    let variant = Variant::from_code(variant_code)
        .ok_or_else(|| Error::format(path, format!("unknown variant code {variant_code}")))?;
    let n = next_u32("n")? as usize;
    let d_c = next_u32("d_c")? as usize;
    let d_a = next_u32("d_a")? as usize;

    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)
        .map_err(|_| Error::format(path, "truncated while reading schema digest"))?;
    if digest != schema.digest() {
        return Err(Error::Digest(format!(
            "checkpoint {} was written against a different schema",
            path.display()
        )));
    }

    let mut u64_buf = [0u8; 8];
    r.read_exact(&mut u64_buf)
        .map_err(|_| Error::format(path, "truncated while reading value count"))?;
    let declared = u64::from_le_bytes(u64_buf) as usize;

    let config = ModelConfig {
        variant,
        n,
        d_c,
        d_a,
    };
    let mut model: ModelParams<F> = build_model(schema, config, 0)?;
    if model.total_values() != declared {
        return Err(Error::format(
            path,
            format!(
                "checkpoint declares {declared} values, schema and config imply {}",
                model.total_values()
            ),
        ));
    }

    for tensor in model.params_mut() {
        for v in tensor.data_mut().iter_mut() {
            let mut f32_buf = [0u8; 4];
            r.read_exact(&mut f32_buf)
                .map_err(|_| Error::format(path, "truncated parameter payload"))?;
            *v = F::from_f32(f32::from_le_bytes(f32_buf));
        }
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(path, "trailing bytes after parameters"));
    }
    Ok(model)
}
