//! Grouped test protocol, per-attribute metrics, attention reports, and
//! the paired ablation runner.

use crate::data::{split_eval_groups, Dataset, TrackletFeatures};
use crate::error::{Error, Result};
use crate::model::{derive_seed, forward_eval, ModelParams, Variant};
use crate::schema::AttributeSchema;
use crate::tensor::Real;
use crate::training::{train, TrainConfig, TrainLog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Averaged per-group class probabilities for one tracklet.
#[derive(Clone, Debug)]
pub struct TrackletPrediction {
    pub tracklet_id: String,
    /// Per group: probability vector averaged over frame groups.
    pub probs: Vec<Vec<f64>>,
    /// Per group: argmax class, ties broken to the lowest index.
    pub argmax: Vec<usize>,
}

fn softmax_f64(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Split the tracklet's frames into ⌊F/n⌋ random groups, forward each
/// group, and average the per-group softmax probabilities.
pub fn predict_tracklet<F: Real>(
    model: &ModelParams<F>,
    features: &TrackletFeatures,
    n: usize,
    rng: &mut impl Rng,
) -> Result<TrackletPrediction> {
    let frame_groups = split_eval_groups(features.frame_count(), n, rng)?;
    let group_count = model.group_count();
    let mut sums: Vec<Vec<f64>> = model
        .class_counts
        .iter()
        .map(|&c| vec![0.0; c])
        .collect();

    for frame_group in &frame_groups {
        let frames: Vec<&[f32]> = frame_group.iter().map(|&i| features.frame(i)).collect();
        let (logits, _) = forward_eval(model, &frames, features.h_g(), features.w_g())?;
        for g in 0..group_count {
            let raw: Vec<f64> = logits[g].iter().map(|v| v.as_f64()).collect();
            for (acc, p) in sums[g].iter_mut().zip(softmax_f64(&raw)) {
                *acc += p;
            }
        }
    }

    let scale = 1.0 / frame_groups.len() as f64;
    let probs: Vec<Vec<f64>> = sums
        .into_iter()
        .map(|v| v.into_iter().map(|p| p * scale).collect())
        .collect();
    let argmax = probs.iter().map(|p| argmax_lowest(p)).collect();
    Ok(TrackletPrediction {
        tracklet_id: features.tracklet_id.clone(),
        probs,
        argmax,
    })
}

/// Per-group accuracy and macro F1 plus the raw confusion counts.
#[derive(Clone, Debug)]
pub struct GroupMetrics {
    pub name: String,
    pub evaluated: usize,
    pub accuracy: f64,
    pub f1: f64,
    /// Row-major true×predicted counts over the group's classes.
    pub confusion: Vec<usize>,
    pub class_count: usize,
}

impl GroupMetrics {
    pub fn confusion_at(&self, true_class: usize, predicted: usize) -> usize {
        self.confusion[true_class * self.class_count + predicted]
    }
}

/// Per-attribute metrics plus unweighted macro averages over the groups
/// that had at least one evaluated sample.
#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub groups: Vec<GroupMetrics>,
    pub macro_accuracy: f64,
    pub macro_f1: f64,
}

impl MetricsReport {
    /// Text table: `group<TAB>acc%<TAB>f1%<TAB>n_eval` rows and a final
    /// `average` row; groups with no evaluated samples print `-`.
    pub fn serialize(&self) -> String {
        let mut out = String::from("# group\tacc%\tf1%\tn_eval\n");
        for g in &self.groups {
            if g.evaluated == 0 {
                out.push_str(&format!("{}\t-\t-\t0\n", g.name));
            } else {
                out.push_str(&format!(
                    "{}\t{:.2}\t{:.2}\t{}\n",
                    g.name,
                    g.accuracy * 100.0,
                    g.f1 * 100.0,
                    g.evaluated
                ));
            }
        }
        out.push_str(&format!(
            "average\t{:.2}\t{:.2}\t{}\n",
            self.macro_accuracy * 100.0,
            self.macro_f1 * 100.0,
            self.groups.iter().map(|g| g.evaluated).sum::<usize>()
        ));
        out
    }
}

/// Macro F1 over the classes present in the truth or the predictions;
/// classes absent from both are left out of the mean.
fn macro_f1_from_confusion(confusion: &[usize], classes: usize) -> f64 {
    let mut f1_sum = 0.0;
    let mut included = 0usize;
    for c in 0..classes {
        let tp = confusion[c * classes + c];
        let row: usize = (0..classes).map(|p| confusion[c * classes + p]).sum();
        let col: usize = (0..classes).map(|t| confusion[t * classes + c]).sum();
        let fn_ = row - tp;
        let fp = col - tp;
        if tp + fp + fn_ == 0 {
            continue;
        }
        included += 1;
        f1_sum += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
    }
    if included == 0 {
        0.0
    } else {
        f1_sum / included as f64
    }
}

/// Score predictions against labels. Unknown labels are skipped per
/// group; a group with no evaluated samples is excluded from the macro
/// averages. Errors if nothing was evaluable at all.
pub fn compute_metrics(
    predictions: &[TrackletPrediction],
    labels: &HashMap<String, Vec<Option<usize>>>,
    schema: &AttributeSchema,
) -> Result<MetricsReport> {
    let group_count = schema.len();
    let mut confusion: Vec<Vec<usize>> = schema
        .groups()
        .iter()
        .map(|g| vec![0usize; g.classes.len() * g.classes.len()])
        .collect();

    for pred in predictions {
        let Some(label_row) = labels.get(&pred.tracklet_id) else {
            return Err(Error::Invalid(format!(
                "prediction for unlabeled tracklet '{}'",
                pred.tracklet_id
            )));
        };
        if pred.argmax.len() != group_count || label_row.len() != group_count {
            return Err(Error::Invalid(format!(
                "tracklet '{}' has mismatched group counts",
                pred.tracklet_id
            )));
        }
        for g in 0..group_count {
            if let Some(truth) = label_row[g] {
                let classes = schema.group(g).classes.len();
                confusion[g][truth * classes + pred.argmax[g]] += 1;
            }
        }
    }

    let mut groups = Vec::with_capacity(group_count);
    let mut acc_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut scored = 0usize;
    for (g, schema_group) in schema.groups().iter().enumerate() {
        let classes = schema_group.classes.len();
        let evaluated: usize = confusion[g].iter().sum();
        let correct: usize = (0..classes).map(|c| confusion[g][c * classes + c]).sum();
        let (accuracy, f1) = if evaluated == 0 {
            (0.0, 0.0)
        } else {
            (
                correct as f64 / evaluated as f64,
                macro_f1_from_confusion(&confusion[g], classes),
            )
        };
        if evaluated > 0 {
            acc_sum += accuracy;
            f1_sum += f1;
            scored += 1;
        }
        groups.push(GroupMetrics {
            name: schema_group.name.clone(),
            evaluated,
            accuracy,
            f1,
            confusion: std::mem::take(&mut confusion[g]),
            class_count: classes,
        });
    }
    if scored == 0 {
        return Err(Error::Invalid(
            "no group had any evaluated sample; nothing to score".into(),
        ));
    }

    Ok(MetricsReport {
        groups,
        macro_accuracy: acc_sum / scored as f64,
        macro_f1: f1_sum / scored as f64,
    })
}

/// Predict every tracklet and score the dataset. Per-tracklet RNG streams
/// derive from the tracklet id, so results are independent of both
/// iteration order and `threads`.
pub fn evaluate_dataset<F: Real>(
    model: &ModelParams<F>,
    dataset: &Dataset,
    schema: &AttributeSchema,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<(Vec<TrackletPrediction>, MetricsReport)> {
    if model.schema_digest != schema.digest() {
        return Err(Error::Digest(
            "model was built against a different schema".into(),
        ));
    }
    let predict_one = |t: &crate::data::LabeledTracklet| -> Result<TrackletPrediction> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &t.features.tracklet_id));
        predict_tracklet(model, &t.features, n, &mut rng)
    };

    let predictions: Vec<TrackletPrediction> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        pool.install(|| {
            use rayon::prelude::*;
            dataset
                .tracklets()
                .par_iter()
                .map(predict_one)
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        dataset
            .tracklets()
            .iter()
            .map(predict_one)
            .collect::<Result<Vec<_>>>()?
    };

    let labels: HashMap<String, Vec<Option<usize>>> = dataset
        .tracklets()
        .iter()
        .map(|t| (t.features.tracklet_id.clone(), t.labels.clone()))
        .collect();
    let report = compute_metrics(&predictions, &labels, schema)?;
    Ok((predictions, report))
}

/// Attention report: one line per tracklet × frame group × attribute
/// group, `tracklet_id<TAB>group<TAB>w1,...,wn<TAB>frame_indices`.
/// Pooling variants report uniform vectors under a notice header.
pub fn attention_report<F: Real>(
    model: &ModelParams<F>,
    dataset: &Dataset,
    n: usize,
    seed: u64,
) -> Result<String> {
    let mut out = String::from("# tracklet_id\tgroup\tweights\tframe_indices\n");
    if !model.config.variant.has_attention() {
        out.push_str("# notice: pooling variant; attention is uniform by construction\n");
    }
    for t in dataset.tracklets() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &t.features.tracklet_id));
        let frame_groups = split_eval_groups(t.features.frame_count(), n, &mut rng)?;
        for frame_group in &frame_groups {
            let frames: Vec<&[f32]> =
                frame_group.iter().map(|&i| t.features.frame(i)).collect();
            let (_, attention) =
                forward_eval(model, &frames, t.features.h_g(), t.features.w_g())?;
            for (g, weights) in attention.iter().enumerate() {
                let ws: Vec<String> =
                    weights.iter().map(|w| format!("{:.6}", w.as_f64())).collect();
                let ids: Vec<String> = frame_group.iter().map(|i| i.to_string()).collect();
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    t.features.tracklet_id,
                    model.group_names[g],
                    ws.join(","),
                    ids.join(",")
                ));
            }
        }
    }
    Ok(out)
}

/// One ablation row: the variant, its trained model's metrics, and the
/// training trace.
pub struct AblationOutcome<F> {
    pub variant: Variant,
    pub model: ModelParams<F>,
    pub train_log: TrainLog,
    pub report: MetricsReport,
}

/// Train and evaluate all four variants with identical sampling seeds.
pub fn ablate<F: Real>(
    train_set: &Dataset,
    test_set: &Dataset,
    schema: &AttributeSchema,
    base: &TrainConfig,
    eval_seed: u64,
    threads: usize,
) -> Result<Vec<AblationOutcome<F>>> {
    let mut outcomes = Vec::with_capacity(4);
    for variant in Variant::all() {
        let config = TrainConfig {
            variant,
            out_dir: base
                .out_dir
                .as_ref()
                .map(|d| d.join(variant.name())),
            ..base.clone()
        };
        let (model, train_log) = train::<F>(train_set, schema, &config)?;
        let (_, report) = evaluate_dataset(&model, test_set, schema, base.n, eval_seed, threads)?;
        outcomes.push(AblationOutcome {
            variant,
            model,
            train_log,
            report,
        });
    }
    Ok(outcomes)
}

/// Summary table over ablation outcomes: `variant<TAB>acc%<TAB>f1%`.
pub fn ablation_summary<F>(outcomes: &[AblationOutcome<F>]) -> String {
    let mut out = String::from("# variant\tavg_acc%\tavg_f1%\n");
    for o in outcomes {
        out.push_str(&format!(
            "{}\t{:.2}\t{:.2}\n",
            o.variant,
            o.report.macro_accuracy * 100.0,
            o.report.macro_f1 * 100.0
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledTracklet;
    use crate::model::{build_model, ModelConfig};
    use std::path::Path;

    fn small_schema() -> AttributeSchema {
        AttributeSchema::parse(
            "motion|mp|a,b,c\nbag|id|no,yes\n",
            Path::new("<test>"),
        )
        .unwrap()
    }

    fn small_model(seed: u64) -> ModelParams<f64> {
        build_model(
            &small_schema(),
            ModelConfig {
                variant: Variant::Proposed,
                n: 3,
                d_c: 6,
                d_a: 4,
            },
            seed,
        )
        .unwrap()
    }

    fn random_tracklet(id: &str, frames: usize, seed: u64) -> TrackletFeatures {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..frames * 6 * 4)
            .map(|_| rng.random_range(-1.0f32..1.0))
            .collect();
        TrackletFeatures::new(id.to_string(), frames, 6, 2, 2, data).unwrap()
    }

    #[test]
    fn single_group_prediction_matches_forward() {
        let model = small_model(3);
        let features = random_tracklet("t", 3, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pred = predict_tracklet(&model, &features, 3, &mut rng).unwrap();

        // One frame group of all 3 frames; recover its membership with an
        // identically seeded rng.
        let mut rng2 = ChaCha8Rng::seed_from_u64(0);
        let groups = split_eval_groups(3, 3, &mut rng2).unwrap();
        assert_eq!(groups.len(), 1);
        let frames: Vec<&[f32]> = groups[0].iter().map(|&i| features.frame(i)).collect();
        let (logits, _) = forward_eval(&model, &frames, 2, 2).unwrap();
        for g in 0..2 {
            let want = softmax_f64(&logits[g]);
            for (a, b) in pred.probs[g].iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
            let total: f64 = pred.probs[g].iter().sum();
            assert!((total - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_frames_average_to_single_group_result() {
        let model = small_model(3);
        // 6 identical frames, n=3 → two identical groups.
        let one = random_tracklet("t", 1, 9);
        let mut data = Vec::new();
        for _ in 0..6 {
            data.extend_from_slice(one.frame(0));
        }
        let features = TrackletFeatures::new("t".into(), 6, 6, 2, 2, data).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pred = predict_tracklet(&model, &features, 3, &mut rng).unwrap();

        let frames: Vec<&[f32]> = (0..3).map(|_| one.frame(0)).collect();
        let (logits, _) = forward_eval(&model, &frames, 2, 2).unwrap();
        for g in 0..2 {
            let want = softmax_f64(&logits[g]);
            for (a, b) in pred.probs[g].iter().zip(&want) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sixty_frame_prediction_matches_brute_force_average() {
        let model = small_model(7);
        let features = random_tracklet("t", 60, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pred = predict_tracklet(&model, &features, 6, &mut rng).unwrap();

        let mut rng2 = ChaCha8Rng::seed_from_u64(31);
        let groups = split_eval_groups(60, 6, &mut rng2).unwrap();
        assert_eq!(groups.len(), 10);
        for g in 0..2 {
            let mut mean = vec![0.0; model.class_counts[g]];
            for fg in &groups {
                let frames: Vec<&[f32]> = fg.iter().map(|&i| features.frame(i)).collect();
                let (logits, _) = forward_eval(&model, &frames, 2, 2).unwrap();
                for (m, p) in mean.iter_mut().zip(softmax_f64(&logits[g])) {
                    *m += p / 10.0;
                }
            }
            for (a, b) in pred.probs[g].iter().zip(&mean) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    fn pred(id: &str, argmax: Vec<usize>, classes: &[usize]) -> TrackletPrediction {
        let probs = argmax
            .iter()
            .zip(classes)
            .map(|(&a, &c)| {
                let mut p = vec![0.0; c];
                p[a] = 1.0;
                p
            })
            .collect();
        TrackletPrediction {
            tracklet_id: id.to_string(),
            probs,
            argmax,
        }
    }

    #[test]
    fn all_correct_predictions_score_one() {
        let schema = small_schema();
        let classes = [3usize, 2];
        let mut labels = HashMap::new();
        let mut preds = Vec::new();
        for i in 0..6 {
            let l = vec![Some(i % 3), Some(i % 2)];
            labels.insert(format!("t{i}"), l.clone());
            preds.push(pred(&format!("t{i}"), vec![i % 3, i % 2], &classes));
        }
        let report = compute_metrics(&preds, &labels, &schema).unwrap();
        for g in &report.groups {
            assert!((g.accuracy - 1.0).abs() < 1e-12);
            assert!((g.f1 - 1.0).abs() < 1e-12);
        }
        assert!((report.macro_accuracy - 1.0).abs() < 1e-12);
        assert!((report.macro_f1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn binary_confusion_case_matches_oracle() {
        // Two samples: (true 0, pred 0) and (true 1, pred 0).
        // Class 0: TP=1 FP=1 FN=0 → F1 = 2/3. Class 1: TP=0 FN=1 → F1 = 0.
        // Macro F1 = 1/3, accuracy = 1/2.
        let schema = small_schema();
        let classes = [3usize, 2];
        let mut labels = HashMap::new();
        labels.insert("a".to_string(), vec![Some(0), Some(0)]);
        labels.insert("b".to_string(), vec![Some(0), Some(1)]);
        let preds = vec![
            pred("a", vec![0, 0], &classes),
            pred("b", vec![0, 0], &classes),
        ];
        let report = compute_metrics(&preds, &labels, &schema).unwrap();
        let bag = &report.groups[1];
        assert!((bag.accuracy - 0.5).abs() < 1e-12);
        assert!((bag.f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(bag.confusion_at(0, 0), 1);
        assert_eq!(bag.confusion_at(1, 0), 1);
        assert_eq!(bag.confusion_at(1, 1), 0);

        // Accuracy recomputed from the report's own confusion counts.
        let diag: usize = (0..2).map(|c| bag.confusion_at(c, c)).sum();
        assert_eq!(diag as f64 / bag.evaluated as f64, bag.accuracy);
    }

    #[test]
    fn unknown_only_group_is_excluded_from_averages() {
        let schema = small_schema();
        let classes = [3usize, 2];
        let mut labels = HashMap::new();
        labels.insert("a".to_string(), vec![Some(1), None]);
        labels.insert("b".to_string(), vec![Some(1), None]);
        let preds = vec![
            pred("a", vec![1, 0], &classes),
            pred("b", vec![0, 1], &classes),
        ];
        let report = compute_metrics(&preds, &labels, &schema).unwrap();
        assert_eq!(report.groups[1].evaluated, 0);
        assert!((report.macro_accuracy - 0.5).abs() < 1e-12);
        assert!(report.serialize().contains("bag\t-\t-\t0"));
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let schema = small_schema();
        let classes = [3usize, 2];
        let mut labels = HashMap::new();
        let mut preds = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..12 {
            let l = vec![Some(rng.random_range(0..3)), Some(rng.random_range(0..2))];
            labels.insert(format!("t{i}"), l);
            preds.push(pred(
                &format!("t{i}"),
                vec![rng.random_range(0..3), rng.random_range(0..2)],
                &classes,
            ));
        }
        let forward = compute_metrics(&preds, &labels, &schema).unwrap();
        preds.reverse();
        let backward = compute_metrics(&preds, &labels, &schema).unwrap();
        assert_eq!(forward.macro_accuracy, backward.macro_accuracy);
        assert_eq!(forward.macro_f1, backward.macro_f1);
        assert_eq!(forward.serialize(), backward.serialize());
    }

    #[test]
    fn all_unknown_everywhere_errors() {
        let schema = small_schema();
        let classes = [3usize, 2];
        let mut labels = HashMap::new();
        labels.insert("a".to_string(), vec![None, None]);
        let preds = vec![pred("a", vec![0, 0], &classes)];
        assert!(compute_metrics(&preds, &labels, &schema).is_err());
    }

    #[test]
    fn attention_report_rows_sum_to_one() {
        let model = small_model(4);
        let tracklets = (0..3)
            .map(|i| LabeledTracklet {
                features: random_tracklet(&format!("t{i}"), 7, i as u64),
                labels: vec![Some(0), Some(1)],
            })
            .collect();
        let dataset = Dataset::new(tracklets).unwrap();
        let report = attention_report(&model, &dataset, 3, 5).unwrap();
        let mut rows = 0;
        for line in report.lines().filter(|l| !l.starts_with('#')) {
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields.len(), 4);
            let weights: Vec<f64> = fields[2].split(',').map(|w| w.parse().unwrap()).collect();
            assert_eq!(weights.len(), 3);
            let sum: f64 = weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-4);
            rows += 1;
        }
        // 3 tracklets × 2 frame groups (⌊7/3⌋) × 2 attribute groups.
        assert_eq!(rows, 12);
    }

    #[test]
    fn identical_frames_give_uniform_attention_rows() {
        let model = small_model(4);
        let one = random_tracklet("t", 1, 3);
        let mut data = Vec::new();
        for _ in 0..4 {
            data.extend_from_slice(one.frame(0));
        }
        let dataset = Dataset::new(vec![LabeledTracklet {
            features: TrackletFeatures::new("t".into(), 4, 6, 2, 2, data).unwrap(),
            labels: vec![Some(0), Some(0)],
        }])
        .unwrap();
        let report = attention_report(&model, &dataset, 4, 5).unwrap();
        for line in report.lines().filter(|l| !l.starts_with('#')) {
            let weights: Vec<f64> = line.split('\t').nth(2).unwrap()
                .split(',')
                .map(|w| w.parse().unwrap())
                .collect();
            for w in weights {
                assert!((w - 0.25).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn evaluation_is_identical_across_thread_counts() {
        let model = small_model(6);
        let schema = small_schema();
        let tracklets = (0..9)
            .map(|i| LabeledTracklet {
                features: random_tracklet(&format!("t{i}"), 8, 40 + i as u64),
                labels: vec![Some(i % 3), Some(i % 2)],
            })
            .collect();
        let dataset = Dataset::new(tracklets).unwrap();
        let (p1, r1) = evaluate_dataset(&model, &dataset, &schema, 3, 7, 1).unwrap();
        let (p3, r3) = evaluate_dataset(&model, &dataset, &schema, 3, 7, 3).unwrap();
        assert_eq!(r1.serialize(), r3.serialize());
        for (a, b) in p1.iter().zip(&p3) {
            assert_eq!(a.tracklet_id, b.tracklet_id);
            assert_eq!(a.argmax, b.argmax);
            assert_eq!(a.probs, b.probs);
        }
    }

    #[test]
    fn pooling_variant_report_carries_notice() {
        let model: ModelParams<f64> = build_model(
            &small_schema(),
            ModelConfig {
                variant: Variant::TemporalPooling,
                n: 3,
                d_c: 6,
                d_a: 4,
            },
            0,
        )
        .unwrap();
        let dataset = Dataset::new(vec![LabeledTracklet {
            features: random_tracklet("t", 3, 1),
            labels: vec![Some(0), Some(0)],
        }])
        .unwrap();
        let report = attention_report(&model, &dataset, 3, 0).unwrap();
        assert!(report.contains("# notice"));
        assert!(report.contains("0.333333"));
    }
}
