//! Dataset ingestion and sampling: feature files, annotations, manifests,
//! the training-batch sampler, and the evaluation group splitter.

use crate::error::{Error, Result};
use crate::schema::AttributeSchema;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const TFEAT_MAGIC: &[u8; 4] = b"TFEA";
pub const TFEAT_VERSION: u32 = 1;

/// One tracklet as per-frame spatial feature maps.
///
/// Storage is frame-major, then channel-major, then row-major over the
/// spatial grid — exactly the TFEAT payload order.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackletFeatures {
    pub tracklet_id: String,
    frame_count: usize,
    d_c: usize,
    h_g: usize,
    w_g: usize,
    data: Vec<f32>,
}

impl TrackletFeatures {
    pub fn new(
        tracklet_id: String,
        frame_count: usize,
        d_c: usize,
        h_g: usize,
        w_g: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        if frame_count == 0 || d_c == 0 || h_g == 0 || w_g == 0 {
            return Err(Error::Invalid(format!(
                "feature dims must be positive, got F={frame_count} D_c={d_c} H_g={h_g} W_g={w_g}"
            )));
        }
        if data.len() != frame_count * d_c * h_g * w_g {
            return Err(Error::Invalid(format!(
                "feature payload has {} values, dims imply {}",
                data.len(),
                frame_count * d_c * h_g * w_g
            )));
        }
        Ok(TrackletFeatures {
            tracklet_id,
            frame_count,
            d_c,
            h_g,
            w_g,
            data,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    pub fn h_g(&self) -> usize {
        self.h_g
    }

    pub fn w_g(&self) -> usize {
        self.w_g
    }

    pub fn grid(&self) -> usize {
        self.h_g * self.w_g
    }

    pub fn frame_len(&self) -> usize {
        self.d_c * self.h_g * self.w_g
    }

    pub fn frame(&self, idx: usize) -> &[f32] {
        let len = self.frame_len();
        &self.data[idx * len..(idx + 1) * len]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

fn read_u32(reader: &mut impl Read, path: &Path, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|_| Error::format(path, format!("truncated while reading {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

/// Load a TFEAT feature file; the header dims are authoritative.
pub fn load_tracklet_features(path: &Path) -> Result<TrackletFeatures> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::format(path, "truncated while reading magic"))?;
    if &magic != TFEAT_MAGIC {
        return Err(Error::format(
            path,
            format!("bad magic {:?}, expected {:?}", magic, TFEAT_MAGIC),
        ));
    }
    let version = read_u32(&mut reader, path, "version")?;
    if version != TFEAT_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version}, expected {TFEAT_VERSION}"),
        ));
    }
    let frame_count = read_u32(&mut reader, path, "frame count")? as usize;
    let d_c = read_u32(&mut reader, path, "channel dim")? as usize;
    let h_g = read_u32(&mut reader, path, "grid height")? as usize;
    let w_g = read_u32(&mut reader, path, "grid width")? as usize;
    if frame_count == 0 || d_c == 0 || h_g == 0 || w_g == 0 {
        return Err(Error::format(
            path,
            format!("non-positive dims F={frame_count} D_c={d_c} H_g={h_g} W_g={w_g}"),
        ));
    }

    let numel = frame_count * d_c * h_g * w_g;
    let mut bytes = vec![0u8; numel * 4];
    reader.read_exact(&mut bytes).map_err(|_| {
        Error::format(
            path,
            format!("payload shorter than the {numel} values declared by the header"),
        )
    })?;
    let mut probe = [0u8; 1];
    if reader.read(&mut probe).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::format(
            path,
            format!("payload longer than the {numel} values declared by the header"),
        ));
    }

    let mut data = Vec::with_capacity(numel);
    for chunk in bytes.chunks_exact(4) {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() {
            return Err(Error::format(path, "non-finite value in payload"));
        }
        data.push(v);
    }

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TrackletFeatures::new(id, frame_count, d_c, h_g, w_g, data)
}

pub fn write_tracklet_features(path: &Path, features: &TrackletFeatures) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writer.write_all(TFEAT_MAGIC).map_err(io_err)?;
    for dim in [
        TFEAT_VERSION,
        features.frame_count as u32,
        features.d_c as u32,
        features.h_g as u32,
        features.w_g as u32,
    ] {
        writer.write_all(&dim.to_le_bytes()).map_err(io_err)?;
    }
    for v in &features.data {
        writer.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    writer.flush().map_err(io_err)
}

/// Tracklet features paired with one label slot per schema group.
/// `None` marks an unknown label, excluded from loss and metrics.
#[derive(Clone, Debug)]
pub struct LabeledTracklet {
    pub features: TrackletFeatures,
    pub labels: Vec<Option<usize>>,
}

/// One parsed annotation row.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotationRecord {
    pub tracklet_id: String,
    pub labels: Vec<Option<usize>>,
}

/// Render annotation records in the tab-separated file format; the exact
/// inverse of [`parse_annotations`].
pub fn format_annotations(records: &[AnnotationRecord], schema: &AttributeSchema) -> String {
    let mut out = String::from("tracklet_id");
    for g in schema.groups() {
        out.push('\t');
        out.push_str(&g.name);
    }
    out.push('\n');
    for r in records {
        out.push_str(&r.tracklet_id);
        for (g, label) in schema.groups().iter().zip(&r.labels) {
            out.push('\t');
            match label {
                Some(ci) => out.push_str(&g.classes[*ci]),
                None => out.push('?'),
            }
        }
        out.push('\n');
    }
    out
}

/// Parse the tab-separated annotation file. The header must name the
/// schema's groups in schema order; rows carry class names or `?`.
pub fn parse_annotations(path: &Path, schema: &AttributeSchema) -> Result<Vec<AnnotationRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header line"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols.len() != schema.len() + 1 {
        return Err(Error::parse(
            path,
            1,
            format!(
                "header has {} columns, expected tracklet_id + {} groups",
                cols.len(),
                schema.len()
            ),
        ));
    }
    if cols[0] != "tracklet_id" {
        return Err(Error::parse(
            path,
            1,
            format!("first header column is '{}', expected 'tracklet_id'", cols[0]),
        ));
    }
    for (i, g) in schema.groups().iter().enumerate() {
        if cols[i + 1] != g.name {
            return Err(Error::parse(
                path,
                1,
                format!(
                    "header column {} is '{}', schema expects '{}'",
                    i + 2,
                    cols[i + 1],
                    g.name
                ),
            ));
        }
    }

    let mut seen: HashSet<String> = HashSet::new();
    let mut records = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != schema.len() + 1 {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "row has {} columns, expected {}",
                    fields.len(),
                    schema.len() + 1
                ),
            ));
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(Error::parse(path, lineno, "empty tracklet_id"));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate tracklet_id '{id}'"),
            ));
        }
        let mut labels = Vec::with_capacity(schema.len());
        for (g, field) in schema.groups().iter().zip(&fields[1..]) {
            let field = field.trim();
            if field == "?" {
                labels.push(None);
            } else {
                match g.class_index(field) {
                    Some(ci) => labels.push(Some(ci)),
                    None => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("unknown class '{}' for group '{}'", field, g.name),
                        ))
                    }
                }
            }
        }
        records.push(AnnotationRecord {
            tracklet_id: id.to_string(),
            labels,
        });
    }
    Ok(records)
}

/// Parse a dataset manifest: `tracklet_id<TAB>relative/path.tfeat`.
/// Paths resolve relative to the manifest's directory.
pub fn parse_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen: HashSet<String> = HashSet::new();
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 'tracklet_id<TAB>path', got {} fields", fields.len()),
            ));
        }
        let id = fields[0].trim();
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate tracklet_id '{id}'"),
            ));
        }
        entries.push((id.to_string(), base.join(fields[1].trim())));
    }
    if entries.is_empty() {
        return Err(Error::parse(path, 0, "manifest lists no tracklets"));
    }
    Ok(entries)
}

/// An in-memory dataset with uniform feature dimensions.
#[derive(Debug)]
pub struct Dataset {
    tracklets: Vec<LabeledTracklet>,
    d_c: usize,
    h_g: usize,
    w_g: usize,
}

impl Dataset {
    pub fn new(tracklets: Vec<LabeledTracklet>) -> Result<Self> {
        let first = tracklets
            .first()
            .ok_or_else(|| Error::Invalid("dataset is empty".into()))?;
        let (d_c, h_g, w_g) = (
            first.features.d_c(),
            first.features.h_g(),
            first.features.w_g(),
        );
        for t in &tracklets {
            if t.features.d_c() != d_c || t.features.h_g() != h_g || t.features.w_g() != w_g {
                return Err(Error::Invalid(format!(
                    "tracklet '{}' dims {}x{}x{} differ from dataset dims {}x{}x{}",
                    t.features.tracklet_id,
                    t.features.d_c(),
                    t.features.h_g(),
                    t.features.w_g(),
                    d_c,
                    h_g,
                    w_g
                )));
            }
        }
        Ok(Dataset {
            tracklets,
            d_c,
            h_g,
            w_g,
        })
    }

    /// Join a manifest with an annotation file, loading every feature file.
    pub fn load(
        manifest_path: &Path,
        annotations_path: &Path,
        schema: &AttributeSchema,
    ) -> Result<Self> {
        let entries = parse_manifest(manifest_path)?;
        let records = parse_annotations(annotations_path, schema)?;
        let by_id: std::collections::HashMap<&str, &AnnotationRecord> = records
            .iter()
            .map(|r| (r.tracklet_id.as_str(), r))
            .collect();

        let mut tracklets = Vec::with_capacity(entries.len());
        for (id, feature_path) in entries {
            let record = by_id.get(id.as_str()).ok_or_else(|| {
                Error::Invalid(format!(
                    "tracklet '{id}' from manifest has no annotation row"
                ))
            })?;
            let mut features = load_tracklet_features(&feature_path)?;
            features.tracklet_id = id;
            tracklets.push(LabeledTracklet {
                features,
                labels: record.labels.clone(),
            });
        }
        Dataset::new(tracklets)
    }

    pub fn len(&self) -> usize {
        self.tracklets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracklets.is_empty()
    }

    pub fn tracklets(&self) -> &[LabeledTracklet] {
        &self.tracklets
    }

    pub fn tracklet(&self, idx: usize) -> &LabeledTracklet {
        &self.tracklets[idx]
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    pub fn h_g(&self) -> usize {
        self.h_g
    }

    pub fn w_g(&self) -> usize {
        self.w_g
    }
}

/// A sampled training batch: K tracklets × n frames plus labels.
pub struct Batch {
    pub n: usize,
    pub d_c: usize,
    pub h_g: usize,
    pub w_g: usize,
    /// (tracklet index, sampled frame indices), one per batch slot.
    pub picks: Vec<(usize, Vec<usize>)>,
    /// One label slot per schema group, per batch slot.
    pub labels: Vec<Vec<Option<usize>>>,
    /// K·n frames, each d_c·h_g·w_g values, in slot-major order.
    features: Vec<f32>,
}

impl Batch {
    /// Assemble a batch from raw parts; lengths must be consistent.
    pub fn from_parts(
        n: usize,
        d_c: usize,
        h_g: usize,
        w_g: usize,
        picks: Vec<(usize, Vec<usize>)>,
        labels: Vec<Vec<Option<usize>>>,
        features: Vec<f32>,
    ) -> Result<Self> {
        let k = picks.len();
        if labels.len() != k || features.len() != k * n * d_c * h_g * w_g {
            return Err(Error::Invalid(format!(
                "inconsistent batch parts: {k} picks, {} label rows, {} feature values",
                labels.len(),
                features.len()
            )));
        }
        Ok(Batch {
            n,
            d_c,
            h_g,
            w_g,
            picks,
            labels,
            features,
        })
    }

    pub fn k(&self) -> usize {
        self.picks.len()
    }

    pub fn frame_len(&self) -> usize {
        self.d_c * self.h_g * self.w_g
    }

    /// Feature map for frame `i` of batch slot `slot`.
    pub fn frame(&self, slot: usize, i: usize) -> &[f32] {
        let len = self.frame_len();
        let base = (slot * self.n + i) * len;
        &self.features[base..base + len]
    }
}

/// Draw K tracklets then n frames from each, per the training protocol.
/// Tracklets are drawn without replacement unless the dataset is smaller
/// than K; frames are distinct when the tracklet has at least n frames.
pub fn sample_batch(
    dataset: &Dataset,
    k: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Batch> {
    if dataset.is_empty() {
        return Err(Error::Invalid("cannot sample from an empty dataset".into()));
    }
    if k == 0 || n == 0 {
        return Err(Error::Invalid(format!("K and n must be positive, got K={k} n={n}")));
    }

    let tracklet_indices: Vec<usize> = if dataset.len() >= k {
        rand::seq::index::sample(rng, dataset.len(), k).into_vec()
    } else {
        (0..k).map(|_| rng.random_range(0..dataset.len())).collect()
    };

    let frame_len = dataset.d_c() * dataset.h_g() * dataset.w_g();
    let mut picks = Vec::with_capacity(k);
    let mut labels = Vec::with_capacity(k);
    let mut features = Vec::with_capacity(k * n * frame_len);
    for &ti in &tracklet_indices {
        let tracklet = dataset.tracklet(ti);
        let frame_count = tracklet.features.frame_count();
        let frame_indices: Vec<usize> = if frame_count >= n {
            rand::seq::index::sample(rng, frame_count, n).into_vec()
        } else {
            (0..n).map(|_| rng.random_range(0..frame_count)).collect()
        };
        for &fi in &frame_indices {
            features.extend_from_slice(tracklet.features.frame(fi));
        }
        picks.push((ti, frame_indices));
        labels.push(tracklet.labels.clone());
    }

    Ok(Batch {
        n,
        d_c: dataset.d_c(),
        h_g: dataset.h_g(),
        w_g: dataset.w_g(),
        picks,
        labels,
        features,
    })
}

/// Split a tracklet's frames into ⌊F/n⌋ random groups of exactly n.
/// Leftover frames are discarded; a tracklet shorter than n yields one
/// group sampled with replacement.
pub fn split_eval_groups(
    frame_count: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::Invalid("group size n must be positive".into()));
    }
    if frame_count == 0 {
        return Err(Error::Invalid("tracklet has no frames".into()));
    }
    if frame_count < n {
        let group = (0..n).map(|_| rng.random_range(0..frame_count)).collect();
        return Ok(vec![group]);
    }
    let mut order: Vec<usize> = (0..frame_count).collect();
    order.shuffle(rng);
    Ok(order
        .chunks_exact(n)
        .take(frame_count / n)
        .map(|c| c.to_vec())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::path::Path;

    fn random_features(id: &str, f: usize, d_c: usize, h: usize, w: usize, seed: u64) -> TrackletFeatures {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..f * d_c * h * w)
            .map(|_| rng.random_range(-1.0f32..1.0))
            .collect();
        TrackletFeatures::new(id.to_string(), f, d_c, h, w, data).unwrap()
    }

    fn tiny_dataset(num: usize, frames: usize) -> Dataset {
        let tracklets = (0..num)
            .map(|i| LabeledTracklet {
                features: random_features(&format!("t{i}"), frames, 4, 2, 2, i as u64),
                labels: vec![Some(i % 2), None],
            })
            .collect();
        Dataset::new(tracklets).unwrap()
    }

    #[test]
    fn tfeat_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tfeat");
        let original = random_features("t", 3, 8, 2, 3, 42);
        write_tracklet_features(&path, &original).unwrap();
        let loaded = load_tracklet_features(&path).unwrap();
        assert_eq!(loaded.data(), original.data());
        assert_eq!(
            (loaded.frame_count(), loaded.d_c(), loaded.h_g(), loaded.w_g()),
            (3, 8, 2, 3)
        );
    }

    #[test]
    fn tfeat_reduced_dims_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tfeat");
        let original = random_features("t", 2, 512, 2, 2, 1);
        write_tracklet_features(&path, &original).unwrap();
        assert_eq!(load_tracklet_features(&path).unwrap().d_c(), 512);
    }

    #[test]
    fn tfeat_truncation_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tfeat");
        let features = random_features("t", 3, 4, 2, 2, 7);
        write_tracklet_features(&path, &features).unwrap();
        // Chop off the last frame's bytes: header still declares F=3.
        let bytes = std::fs::read(&path).unwrap();
        let frame_bytes = 4 * 2 * 2 * 4;
        std::fs::write(&path, &bytes[..bytes.len() - frame_bytes]).unwrap();
        let err = load_tracklet_features(&path).unwrap_err();
        assert!(err.to_string().contains("shorter"), "{err}");
    }

    #[test]
    fn tfeat_trailing_bytes_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tfeat");
        write_tracklet_features(&path, &random_features("t", 1, 2, 1, 1, 7)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_tracklet_features(&path).is_err());
    }

    #[test]
    fn tfeat_bad_magic_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tfeat");
        write_tracklet_features(&path, &random_features("t", 1, 2, 1, 1, 7)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        let err = load_tracklet_features(&path).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn tfeat_non_finite_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tfeat");
        write_tracklet_features(&path, &random_features("t", 1, 2, 1, 1, 7)).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let nan = f32::NAN.to_le_bytes();
        let off = bytes.len() - 4;
        bytes[off..].copy_from_slice(&nan);
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_tracklet_features(&path).is_err());
    }

    fn write_schema_and_annotations(dir: &Path, rows: &str) -> (AttributeSchema, PathBuf) {
        let schema = AttributeSchema::mars();
        let ann_path = dir.join("ann.tsv");
        let header: Vec<String> = std::iter::once("tracklet_id".to_string())
            .chain(schema.groups().iter().map(|g| g.name.clone()))
            .collect();
        let text = format!("{}\n{}", header.join("\t"), rows);
        std::fs::write(&ann_path, text).unwrap();
        (schema, ann_path)
    }

    #[test]
    fn annotations_partial_row_parses() {
        let dir = tempfile::tempdir().unwrap();
        // gender=female, backpack=yes, everything else unknown.
        let row = "t1\t?\t?\tfemale\t?\t?\t?\t?\t?\t?\tyes\t?\t?\t?\t?";
        let (schema, path) = write_schema_and_annotations(dir.path(), row);
        let records = parse_annotations(&path, &schema).unwrap();
        assert_eq!(records.len(), 1);
        let known: Vec<usize> = records[0]
            .labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|_| i))
            .collect();
        assert_eq!(known.len(), 2);
        assert_eq!(records[0].labels[schema.group_index("gender").unwrap()], Some(1));
        assert_eq!(records[0].labels[schema.group_index("backpack").unwrap()], Some(0));
    }

    #[test]
    fn annotations_purple_top_color_is_class_three() {
        let dir = tempfile::tempdir().unwrap();
        let row = "t1\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\tpurple\t?";
        let (schema, path) = write_schema_and_annotations(dir.path(), row);
        let records = parse_annotations(&path, &schema).unwrap();
        assert_eq!(records[0].labels[schema.group_index("top_color").unwrap()], Some(3));
    }

    #[test]
    fn annotations_unknown_class_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let row = "t1\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\tcrimson\t?";
        let (schema, path) = write_schema_and_annotations(dir.path(), row);
        let err = parse_annotations(&path, &schema).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2") && msg.contains("crimson"), "{msg}");
    }

    #[test]
    fn annotations_duplicate_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let row = "t1\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\nt1\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?";
        let (schema, path) = write_schema_and_annotations(dir.path(), row);
        assert!(parse_annotations(&path, &schema).is_err());
    }

    #[test]
    fn annotations_wrong_column_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let row = "t1\t?\t?";
        let (schema, path) = write_schema_and_annotations(dir.path(), row);
        let err = parse_annotations(&path, &schema).unwrap_err();
        assert!(err.to_string().contains(":2"), "{err}");
    }

    #[test]
    fn manifest_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.manifest");

        std::fs::write(&path, "t1\ta.tfeat\nt1\tb.tfeat\n").unwrap();
        let err = parse_manifest(&path).unwrap_err();
        assert!(err.to_string().contains(":2"), "{err}");

        std::fs::write(&path, "t1 a.tfeat\n").unwrap();
        assert!(parse_manifest(&path).is_err());

        std::fs::write(&path, "# nothing\n").unwrap();
        assert!(parse_manifest(&path).is_err());
    }

    #[test]
    fn dataset_load_requires_annotations_for_every_manifest_id() {
        let dir = tempfile::tempdir().unwrap();
        let features = random_features("t9", 2, 4, 2, 2, 0);
        write_tracklet_features(&dir.path().join("t9.tfeat"), &features).unwrap();
        std::fs::write(dir.path().join("m.manifest"), "t9\tt9.tfeat\n").unwrap();
        let (schema, ann_path) = write_schema_and_annotations(
            dir.path(),
            "other\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?\t?",
        );
        let err = Dataset::load(&dir.path().join("m.manifest"), &ann_path, &schema).unwrap_err();
        assert!(err.to_string().contains("t9"), "{err}");
    }

    #[test]
    fn batch_has_k_times_n_frames() {
        let dataset = tiny_dataset(80, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch = sample_batch(&dataset, 64, 6, &mut rng).unwrap();
        assert_eq!(batch.k(), 64);
        let total_frames: usize = batch.picks.iter().map(|(_, f)| f.len()).sum();
        assert_eq!(total_frames, 384);
        // Without replacement at both levels here.
        let tracklet_set: HashSet<usize> = batch.picks.iter().map(|(t, _)| *t).collect();
        assert_eq!(tracklet_set.len(), 64);
        for (_, frames) in &batch.picks {
            let set: HashSet<usize> = frames.iter().copied().collect();
            assert_eq!(set.len(), 6);
        }
    }

    #[test]
    fn short_tracklet_samples_with_replacement() {
        let dataset = tiny_dataset(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let batch = sample_batch(&dataset, 2, 6, &mut rng).unwrap();
        for (_, frames) in &batch.picks {
            assert_eq!(frames.len(), 6);
            assert!(frames.iter().all(|&f| f < 4));
        }
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let dataset = tiny_dataset(20, 8);
        for seed in [0u64, 1, 99] {
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                let ba = sample_batch(&dataset, 8, 6, &mut a).unwrap();
                let bb = sample_batch(&dataset, 8, 6, &mut b).unwrap();
                assert_eq!(ba.picks, bb.picks);
            }
        }
        // Different seeds diverge.
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        let ba = sample_batch(&dataset, 8, 6, &mut a).unwrap();
        let bb = sample_batch(&dataset, 8, 6, &mut b).unwrap();
        assert_ne!(ba.picks, bb.picks);
    }

    #[test]
    fn empty_dataset_sampling_errors() {
        let err = Dataset::new(vec![]).unwrap_err();
        assert!(err.to_string().contains("empty"));
    }

    #[test]
    fn eval_groups_cover_sixty_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = split_eval_groups(60, 6, &mut rng).unwrap();
        assert_eq!(groups.len(), 10);
        let mut seen = HashSet::new();
        for g in &groups {
            assert_eq!(g.len(), 6);
            for &f in g {
                assert!(f < 60);
                assert!(seen.insert(f), "frame {f} appears twice");
            }
        }
        assert_eq!(seen.len(), 60);
    }

    #[test]
    fn eval_groups_discard_leftover() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = split_eval_groups(7, 6, &mut rng).unwrap();
        assert_eq!(groups.len(), 1);
        let set: HashSet<usize> = groups[0].iter().copied().collect();
        assert_eq!(set.len(), 6);
    }

    #[test]
    fn eval_groups_short_tracklet_resamples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = split_eval_groups(4, 6, &mut rng).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].len(), 6);
        assert!(groups[0].iter().all(|&f| f < 4));
    }

    mod properties {
        use super::*;
        use crate::schema::{AttributeGroup, Channel};
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn eval_groups_are_disjoint_and_exact(
                frame_count in 1usize..200,
                n in 1usize..16,
                seed in 0u64..1000
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let groups = split_eval_groups(frame_count, n, &mut rng).unwrap();
                if frame_count >= n {
                    prop_assert_eq!(groups.len(), frame_count / n);
                    let mut seen = HashSet::new();
                    for g in &groups {
                        prop_assert_eq!(g.len(), n);
                        for &f in g {
                            prop_assert!(f < frame_count);
                            prop_assert!(seen.insert(f));
                        }
                    }
                    prop_assert_eq!(seen.len(), n * (frame_count / n));
                } else {
                    prop_assert_eq!(groups.len(), 1);
                    prop_assert_eq!(groups[0].len(), n);
                    prop_assert!(groups[0].iter().all(|&f| f < frame_count));
                }
            }

            #[test]
            fn schema_round_trip(
                group_specs in proptest::collection::vec(
                    (
                        "[a-z][a-z0-9_]{0,10}",
                        proptest::collection::hash_set("[a-z][a-z0-9-]{0,6}", 2..6),
                        proptest::bool::ANY,
                    ),
                    1..6,
                )
            ) {
                // Dedup group names; drop specs whose names collide.
                let mut seen = HashSet::new();
                let groups: Vec<AttributeGroup> = group_specs
                    .into_iter()
                    .filter(|(name, _, _)| seen.insert(name.clone()))
                    .map(|(name, classes, mp)| AttributeGroup {
                        name,
                        classes: classes.into_iter().collect(),
                        channel: if mp { Channel::MotionPose } else { Channel::IdRelevant },
                    })
                    .collect();
                let schema = AttributeSchema::new(groups).unwrap();
                let text = schema.serialize();
                let back = AttributeSchema::parse(&text, Path::new("<prop>")).unwrap();
                prop_assert_eq!(&back, &schema);
                prop_assert_eq!(back.digest(), schema.digest());
            }
        }
    }
}
