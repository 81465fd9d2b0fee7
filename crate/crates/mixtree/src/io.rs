//! On-disk formats: JSON schemas for trees, tensors, weights, discretizers,
//! and mix specs, plus CSV trial tables for the verification reports.
//! Rationals are encoded as `"p/q"` strings throughout; all maps serialize
//! in sorted order so artifacts are byte-identical across runs.

use std::collections::BTreeMap;
use std::path::Path;

use num::BigUint;
use serde::{Deserialize, Serialize};

use crate::analysis::RankTrialReport;
use crate::decomp::{Discretizers, GridTensorBatch, HybridTree, MixSpec, NodeWeights, SourceTree, WeightSet};
use crate::error::{Error, Result};
use crate::modes::ModeSet;
use crate::scalar::{Scalar, ScalarKind};
use crate::tensor::DenseTensor;
use crate::tree::ModeTree;

/// Serde adapter: arbitrary-precision unsigned integers as decimal strings.
pub mod biguint_string {
    use num::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        BigUint::from_str(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct TreeNodeFile {
    label: Vec<usize>,
    children: Option<(usize, usize)>,
}

/// Tree JSON: `{n, nodes: [{label, children|null}], root}`; ids are array
/// positions, labels sorted.
#[derive(Serialize, Deserialize)]
pub struct TreeFile {
    n: usize,
    nodes: Vec<TreeNodeFile>,
    root: usize,
}

impl TreeFile {
    pub fn from_tree(tree: &ModeTree) -> Self {
        let (n, raw, root) = tree.raw_parts();
        TreeFile {
            n,
            nodes: raw
                .into_iter()
                .map(|(label, children)| TreeNodeFile {
                    label: label.as_slice().to_vec(),
                    children,
                })
                .collect(),
            root,
        }
    }

    pub fn into_tree(self) -> Result<ModeTree> {
        let raw = self
            .nodes
            .into_iter()
            .map(|node| Ok((ModeSet::new(node.label)?, node.children)))
            .collect::<Result<Vec<_>>>()?;
        ModeTree::from_parts(self.n, raw, self.root)
    }
}

/// Tensor JSON: `{dims, scalar: "rational"|"f64", data}`.
#[derive(Serialize, Deserialize)]
pub struct TensorFile {
    pub dims: Vec<usize>,
    pub scalar: String,
    pub data: Vec<Scalar>,
}

impl TensorFile {
    pub fn from_tensor(t: &DenseTensor) -> Self {
        TensorFile {
            dims: t.dims().to_vec(),
            scalar: t.kind().to_string(),
            data: t.data().to_vec(),
        }
    }

    pub fn into_tensor(self) -> Result<DenseTensor> {
        let kind: ScalarKind = self.scalar.parse()?;
        let t = DenseTensor::new(self.dims, self.data)?;
        if t.kind() != kind {
            return Err(Error::Parse(format!(
                "tensor tagged {kind} holds {} entries",
                t.kind()
            )));
        }
        Ok(t)
    }
}

/// Grid-tensor batch artifact; `seed` records the generating randomness.
#[derive(Serialize, Deserialize)]
pub struct BatchFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tensors: Vec<TensorFile>,
}

impl BatchFile {
    pub fn from_batch(batch: &GridTensorBatch, seed: Option<u64>) -> Self {
        BatchFile {
            seed,
            tensors: batch.tensors().iter().map(TensorFile::from_tensor).collect(),
        }
    }

    pub fn into_batch(self) -> Result<GridTensorBatch> {
        GridTensorBatch::new(
            self.tensors
                .into_iter()
                .map(TensorFile::into_tensor)
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct NodeWeightsFile {
    #[serde(rename = "aI")]
    a_left: Vec<Vec<Scalar>>,
    #[serde(rename = "aII")]
    a_right: Vec<Vec<Scalar>>,
}

/// Weights JSON: `{r, nodes: {"<label-as-comma-list>": {aI, aII}}}`.
#[derive(Serialize, Deserialize)]
pub struct WeightsFile {
    r: usize,
    nodes: BTreeMap<String, NodeWeightsFile>,
}

fn parse_label(key: &str) -> Result<ModeSet> {
    let parts = key
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad label component {p:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    ModeSet::new(parts)
}

impl WeightsFile {
    pub fn from_weights(w: &WeightSet) -> Self {
        WeightsFile {
            r: w.r(),
            nodes: w
                .nodes()
                .iter()
                .map(|(label, nw)| {
                    (
                        label.to_string(),
                        NodeWeightsFile {
                            a_left: nw.a_left.clone(),
                            a_right: nw.a_right.clone(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn into_weights(self) -> Result<WeightSet> {
        let nodes = self
            .nodes
            .into_iter()
            .map(|(key, nw)| {
                Ok((
                    parse_label(&key)?,
                    NodeWeights {
                        a_left: nw.a_left,
                        a_right: nw.a_right,
                    },
                ))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        WeightSet::new(self.r, nodes)
    }
}

/// Discretizers JSON: `{vectors: [[..], ..]}`.
#[derive(Serialize, Deserialize)]
pub struct DiscretizersFile {
    pub vectors: Vec<Vec<Scalar>>,
}

impl DiscretizersFile {
    pub fn from_discretizers(d: &Discretizers) -> Self {
        DiscretizersFile {
            vectors: d.vectors().to_vec(),
        }
    }

    pub fn into_discretizers(self) -> Result<Discretizers> {
        Discretizers::new(self.vectors)
    }
}

/// Mix-spec JSON: two tree file paths (resolved relative to the spec file)
/// plus the mixture-node labels.
#[derive(Serialize, Deserialize)]
pub struct MixSpecFile {
    pub tree_a: String,
    pub tree_b: String,
    pub mixture_nodes: Vec<Vec<usize>>,
}

/// Hybrid artifact: the stitched tree plus per-interior-node source tags.
#[derive(Serialize, Deserialize)]
pub struct HybridFile {
    pub tree: TreeFile,
    pub source: BTreeMap<String, SourceTree>,
}

impl HybridFile {
    pub fn from_hybrid(h: &HybridTree) -> Self {
        HybridFile {
            tree: TreeFile::from_tree(h.tree()),
            source: h
                .source()
                .iter()
                .map(|(label, &tag)| (label.to_string(), tag))
                .collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_tree(path: &Path, tree: &ModeTree) -> Result<()> {
    write_json(path, &TreeFile::from_tree(tree))
}

pub fn load_tree(path: &Path) -> Result<ModeTree> {
    read_json::<TreeFile>(path)?.into_tree()
}

pub fn save_weights(path: &Path, weights: &WeightSet) -> Result<()> {
    write_json(path, &WeightsFile::from_weights(weights))
}

pub fn load_weights(path: &Path) -> Result<WeightSet> {
    read_json::<WeightsFile>(path)?.into_weights()
}

pub fn save_discretizers(path: &Path, disc: &Discretizers) -> Result<()> {
    write_json(path, &DiscretizersFile::from_discretizers(disc))
}

pub fn load_discretizers(path: &Path) -> Result<Discretizers> {
    read_json::<DiscretizersFile>(path)?.into_discretizers()
}

pub fn save_batch(path: &Path, batch: &GridTensorBatch, seed: Option<u64>) -> Result<()> {
    write_json(path, &BatchFile::from_batch(batch, seed))
}

pub fn load_batch(path: &Path) -> Result<GridTensorBatch> {
    read_json::<BatchFile>(path)?.into_batch()
}

/// Load a mix spec, resolving the two tree paths relative to the spec file.
pub fn load_mix_spec(path: &Path) -> Result<MixSpec> {
    let file: MixSpecFile = read_json(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let tree_a = load_tree(&base.join(&file.tree_a))?;
    let tree_b = load_tree(&base.join(&file.tree_b))?;
    let labels = file
        .mixture_nodes
        .into_iter()
        .map(ModeSet::new)
        .collect::<Result<Vec<_>>>()?;
    MixSpec::new(tree_a, tree_b, labels)
}

/// One CSV row per (trial, output tensor): seed, rank, and bound flags; the
/// witness rows carry trial index -1.
pub fn write_rank_trials_csv(path: &Path, report: &RankTrialReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
    w.write_record([
        "master_seed",
        "trial",
        "trial_seed",
        "tensor",
        "rank",
        "within_upper",
        "meets_lower",
    ])
    .map_err(|e| Error::Csv(e.to_string()))?;
    for trial in &report.trials {
        for (y, rank) in trial.ranks.iter().enumerate() {
            w.write_record([
                report.seed.to_string(),
                trial.trial.to_string(),
                trial.seed.to_string(),
                y.to_string(),
                rank.to_string(),
                trial.within_upper.to_string(),
                String::new(),
            ])
            .map_err(|e| Error::Csv(e.to_string()))?;
        }
    }
    for (y, rank) in report.witness.ranks.iter().enumerate() {
        w.write_record([
            report.seed.to_string(),
            "-1".to_string(),
            String::new(),
            y.to_string(),
            rank.to_string(),
            String::new(),
            report.witness.meets_lower.to_string(),
        ])
        .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

#[allow(unused)]
fn _assert_biguint_helper_used(v: &BigUint) -> String {
    v.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::BinaryOp;
    use crate::tree::build_baseline_tree;

    #[test]
    fn tree_json_round_trip() {
        let tree = build_baseline_tree(8).unwrap();
        let file = TreeFile::from_tree(&tree);
        let text = serde_json::to_string(&file).unwrap();
        let back: TreeFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_tree().unwrap(), tree);
    }

    #[test]
    fn weights_json_round_trip() {
        let tree = build_baseline_tree(4).unwrap();
        let w = crate::decomp::random_weights(
            &tree,
            2,
            9,
            crate::decomp::WeightDistribution::IntegerUniform { bound: 5 },
        )
        .unwrap();
        let file = WeightsFile::from_weights(&w);
        let text = serde_json::to_string(&file).unwrap();
        let back: WeightsFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_weights().unwrap(), w);
    }

    #[test]
    fn tensor_json_rejects_kind_mismatch() {
        let text = r#"{"dims":[2],"scalar":"f64","data":["1/2","1/3"]}"#;
        let file: TensorFile = serde_json::from_str(text).unwrap();
        assert!(file.into_tensor().is_err());
    }

    #[test]
    fn batch_round_trip_through_disk() {
        let dir = std::env::temp_dir().join(format!("mixtree-io-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let tree = build_baseline_tree(4).unwrap();
        let disc = Discretizers::identity(2, ScalarKind::Rational);
        let w = crate::decomp::random_weights(
            &tree,
            2,
            4,
            crate::decomp::WeightDistribution::IntegerUniform { bound: 3 },
        )
        .unwrap();
        let batch = crate::decomp::tree_decompose(&tree, &w, &disc, BinaryOp::Product).unwrap();
        let path = dir.join("batch.json");
        save_batch(&path, &batch, Some(4)).unwrap();
        let back = load_batch(&path).unwrap();
        assert_eq!(back, batch);
        std::fs::remove_dir_all(&dir).ok();
    }
}
