//! Multi-task loss and the training loop.

use crate::adam::{AdamConfig, AdamState};
use crate::data::{sample_batch, Batch, Dataset};
use crate::error::{Error, Result};
use crate::model::{
    build_model, forward_tracklet, register_model, derive_seed, ModelConfig, ModelParams,
    TapedModel, Variant,
};
pub use crate::model::{load_checkpoint, save_checkpoint};
use crate::schema::AttributeSchema;
use crate::tape::{Tape, ValueId};
use crate::tensor::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

/// Training protocol knobs. Defaults follow the reference protocol:
/// K=64 tracklets × n=6 frames, Adam at lr 3e-4.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub k: usize,
    pub n: usize,
    pub d_a: usize,
    pub variant: Variant,
    pub adam: AdamConfig,
    pub steps: usize,
    pub seed: u64,
    /// Global-norm clip; off by default.
    pub grad_clip: Option<f64>,
    /// Optional per-group loss weights (unweighted sum when absent).
    pub group_weights: Option<Vec<f64>>,
    /// Pin attention at uniform: frames are fused with constant 1/n
    /// weights and attention parameters receive no updates.
    pub freeze_attention: bool,
    /// Write periodic checkpoints every this many steps (requires out_dir).
    pub checkpoint_every: Option<usize>,
    /// Where checkpoints and the step log land; in-memory only when unset.
    pub out_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 64,
            n: 6,
            d_a: 256,
            variant: Variant::Proposed,
            adam: AdamConfig::default(),
            steps: 5000,
            seed: 0,
            grad_clip: None,
            group_weights: None,
            freeze_attention: false,
            checkpoint_every: None,
            out_dir: None,
        }
    }
}

/// One optimizer step's record. `group_losses[g]` is `None` when no
/// tracklet in the batch carried a known label for group g.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub step: usize,
    pub total_loss: f64,
    pub group_losses: Vec<Option<f64>>,
    pub wall_ms: f64,
}

/// Per-step loss trace. Serialization omits wall time so identical runs
/// produce identical log files.
#[derive(Clone, Debug, Default)]
pub struct TrainLog {
    pub group_names: Vec<String>,
    pub entries: Vec<StepRecord>,
}

impl TrainLog {
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("# step\ttotal");
        for name in &self.group_names {
            out.push('\t');
            out.push_str(name);
        }
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!("{}\t{:.6}", e.step, e.total_loss));
            for g in &e.group_losses {
                match g {
                    Some(v) => out.push_str(&format!("\t{v:.6}")),
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Loss graph handles for one batch.
pub struct BatchLoss {
    /// Scalar node: batch mean of the per-tracklet sum of group losses.
    pub total: ValueId,
    /// Per-group contribution to `total` (already scaled by 1/K), absent
    /// when the batch has no known label for the group.
    pub group_components: Vec<Option<ValueId>>,
    /// Known-label count per group.
    pub known_counts: Vec<usize>,
}

/// Cross-entropy summed over groups, averaged over batch slots, with
/// unknown labels masked out of both loss and gradient.
pub fn multitask_loss<F: Real>(
    tape: &mut Tape<F>,
    logits: &[Vec<ValueId>],
    labels: &[Vec<Option<usize>>],
    group_weights: Option<&[f64]>,
) -> Result<BatchLoss> {
    let slots = logits.len();
    if slots == 0 || slots != labels.len() {
        return Err(Error::Invalid(format!(
            "multitask_loss over {} logit rows and {} label rows",
            slots,
            labels.len()
        )));
    }
    let groups = logits[0].len();
    if let Some(w) = group_weights {
        if w.len() != groups {
            return Err(Error::Invalid(format!(
                "{} group weights for {} groups",
                w.len(),
                groups
            )));
        }
    }

    let mut per_group: Vec<Vec<ValueId>> = vec![Vec::new(); groups];
    for (slot_logits, slot_labels) in logits.iter().zip(labels) {
        if slot_logits.len() != groups || slot_labels.len() != groups {
            return Err(Error::Invalid("ragged logits/labels in batch".into()));
        }
        for g in 0..groups {
            if let Some(label) = slot_labels[g] {
                per_group[g].push(tape.cross_entropy(slot_logits[g], label)?);
            }
        }
    }

    let inv_k = 1.0 / slots as f64;
    let mut group_components: Vec<Option<ValueId>> = Vec::with_capacity(groups);
    let mut known_counts = Vec::with_capacity(groups);
    let mut total: Option<ValueId> = None;
    for (g, losses) in per_group.iter().enumerate() {
        known_counts.push(losses.len());
        if losses.is_empty() {
            group_components.push(None);
            continue;
        }
        let mut sum = losses[0];
        for &l in &losses[1..] {
            sum = tape.add(sum, l)?;
        }
        let weight = group_weights.map_or(1.0, |w| w[g]);
        let component = tape.scale(sum, inv_k * weight);
        group_components.push(Some(component));
        total = Some(match total {
            Some(t) => tape.add(t, component)?,
            None => component,
        });
    }

    let total = total.ok_or_else(|| {
        Error::Invalid("degenerate batch: every label in every group is unknown".into())
    })?;
    Ok(BatchLoss {
        total,
        group_components,
        known_counts,
    })
}

/// Forward the whole batch and attach the multi-task loss.
pub fn batch_loss<F: Real>(
    tape: &mut Tape<F>,
    model: &ModelParams<F>,
    taped: &TapedModel,
    batch: &Batch,
    group_weights: Option<&[f64]>,
    uniform_attention: bool,
) -> Result<BatchLoss> {
    let mut logits = Vec::with_capacity(batch.k());
    for slot in 0..batch.k() {
        let frames: Vec<&[f32]> = (0..batch.n).map(|i| batch.frame(slot, i)).collect();
        let fwd = forward_tracklet(
            tape,
            model,
            taped,
            &frames,
            batch.h_g,
            batch.w_g,
            uniform_attention,
        )?;
        logits.push(fwd.logits);
    }
    multitask_loss(tape, &logits, &batch.labels, group_weights)
}

fn clip_gradients<F: Real>(grads: &mut [Vec<F>], max_norm: f64) {
    let sq: f64 = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| v.as_f64() * v.as_f64())
        .sum();
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = F::from_f64(max_norm / norm);
        for g in grads.iter_mut() {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
}

/// Run the training loop: sample → forward → loss → backward → Adam.
/// Deterministic in the config seed; writes checkpoints and the step log
/// when `out_dir` is set.
pub fn train<F: Real>(
    train_set: &Dataset,
    schema: &AttributeSchema,
    config: &TrainConfig,
) -> Result<(ModelParams<F>, TrainLog)> {
    if config.adam.lr <= 0.0 {
        return Err(Error::Invalid(format!(
            "learning rate must be positive, got {}",
            config.adam.lr
        )));
    }
    let model_config = ModelConfig {
        variant: config.variant,
        n: config.n,
        d_c: train_set.d_c(),
        d_a: config.d_a,
    };
    let mut model: ModelParams<F> = build_model(schema, model_config, config.seed)?;
    let mut adam = AdamState::new(config.adam, &model.param_sizes());
    let mut sampler = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "batch-sampler"));

    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut log = TrainLog {
        group_names: model.group_names.clone(),
        entries: Vec::with_capacity(config.steps),
    };

    for step in 1..=config.steps {
        let started = Instant::now();
        let batch = sample_batch(train_set, config.k, config.n, &mut sampler)?;

        let mut tape: Tape<F> = Tape::new();
        let taped = register_model(&mut tape, &model);
        let loss = batch_loss(
            &mut tape,
            &model,
            &taped,
            &batch,
            config.group_weights.as_deref(),
            config.freeze_attention,
        )?;

        let total = tape.value(loss.total)[0].as_f64();
        if !total.is_finite() {
            let culprit = loss
                .group_components
                .iter()
                .enumerate()
                .find(|(_, c)| c.is_some_and(|id| !tape.value(id)[0].is_finite()))
                .map(|(g, _)| model.group_names[g].clone())
                .unwrap_or_else(|| "<unknown>".into());
            return Err(Error::Numeric(format!(
                "non-finite loss at step {step}, group '{culprit}'"
            )));
        }

        tape.backward(loss.total)?;
        let mut grads: Vec<Vec<F>> = taped.all.iter().map(|&id| tape.grad_or_zeros(id)).collect();
        if let Some(max_norm) = config.grad_clip {
            clip_gradients(&mut grads, max_norm);
        }

        let group_losses: Vec<Option<f64>> = loss
            .group_components
            .iter()
            .map(|c| c.map(|id| tape.value(id)[0].as_f64()))
            .collect();

        {
            let mut tensors = model.params_mut();
            let mut slices: Vec<&mut [F]> = tensors.iter_mut().map(|t| t.data_mut()).collect();
            adam.step(&mut slices, &grads)?;
        }

        log.entries.push(StepRecord {
            step,
            total_loss: total,
            group_losses,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });

        if let (Some(dir), Some(every)) = (&config.out_dir, config.checkpoint_every) {
            if every > 0 && step % every == 0 && step != config.steps {
                save_checkpoint(&model, &dir.join(format!("checkpoint_{step:06}.tatr")))?;
            }
        }
    }

    if let Some(dir) = &config.out_dir {
        save_checkpoint(&model, &dir.join("checkpoint_final.tatr"))?;
        std::fs::write(dir.join("train_log.txt"), log.serialize())
            .map_err(|e| Error::io(dir.join("train_log.txt"), e))?;
    }

    Ok((model, log))
}
