use serde::{Deserialize, Serialize};

use super::{BoostParams, Ensemble, Node, Tree};
use crate::error::{Error, Result};
use crate::report::{check_schema, SCHEMA_VERSION};

/// On-disk node. Reals are decimal strings so they round-trip exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeDoc {
    Split {
        feature: usize,
        threshold: String,
        left: usize,
        right: usize,
        default_left: bool,
        gain: String,
        cover: String,
    },
    Leaf {
        weight: String,
        cover: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDoc {
    pub schema_version: String,
    pub params: BoostParams,
    pub n_features: usize,
    pub base_score: Vec<String>,
    pub trees: Vec<Vec<NodeDoc>>,
}

fn real(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::invalid(format!("not a decimal number: {s:?}")))
}

impl From<&Node> for NodeDoc {
    fn from(n: &Node) -> Self {
        match *n {
            Node::Split {
                feature,
                threshold,
                left,
                right,
                default_left,
                gain,
                cover,
            } => NodeDoc::Split {
                feature,
                threshold: threshold.to_string(),
                left,
                right,
                default_left,
                gain: gain.to_string(),
                cover: cover.to_string(),
            },
            Node::Leaf { weight, cover } => NodeDoc::Leaf {
                weight: weight.to_string(),
                cover: cover.to_string(),
            },
        }
    }
}

impl NodeDoc {
    fn to_node(&self, n_nodes: usize) -> Result<Node> {
        Ok(match self {
            NodeDoc::Split {
                feature,
                threshold,
                left,
                right,
                default_left,
                gain,
                cover,
            } => {
                if *left >= n_nodes || *right >= n_nodes {
                    return Err(Error::invalid("child index out of range"));
                }
                Node::Split {
                    feature: *feature,
                    threshold: real(threshold)?,
                    left: *left,
                    right: *right,
                    default_left: *default_left,
                    gain: real(gain)?,
                    cover: real(cover)?,
                }
            }
            NodeDoc::Leaf { weight, cover } => {
                let weight = real(weight)?;
                if !weight.is_finite() {
                    return Err(Error::invalid("leaf weight must be finite"));
                }
                Node::Leaf {
                    weight,
                    cover: real(cover)?,
                }
            }
        })
    }
}

impl Ensemble {
    pub fn to_doc(&self) -> EnsembleDoc {
        EnsembleDoc {
            schema_version: SCHEMA_VERSION.into(),
            params: self.params,
            n_features: self.n_features,
            base_score: self.base_score.iter().map(f64::to_string).collect(),
            trees: self.trees.iter().map(|t| t.nodes.iter().map(NodeDoc::from).collect()).collect(),
        }
    }

    pub fn from_doc(doc: &EnsembleDoc) -> Result<Self> {
        check_schema(&doc.schema_version)?;
        let base_score = doc.base_score.iter().map(|s| real(s)).collect::<Result<Vec<f64>>>()?;
        if base_score.len() < 2 || doc.trees.len() % base_score.len() != 0 {
            return Err(Error::invalid("tree count is not a multiple of the class count"));
        }
        let trees = doc
            .trees
            .iter()
            .map(|nodes| {
                if nodes.is_empty() {
                    return Err(Error::invalid("empty tree"));
                }
                let nodes = nodes.iter().map(|n| n.to_node(nodes.len())).collect::<Result<Vec<_>>>()?;
                for n in &nodes {
                    if let Node::Split { feature, .. } = n {
                        if *feature >= doc.n_features {
                            return Err(Error::invalid(format!("split feature {feature} out of range")));
                        }
                    }
                }
                Ok(Tree { nodes })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble {
            params: doc.params,
            n_features: doc.n_features,
            base_score,
            trees,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: EnsembleDoc = serde_json::from_str(s)?;
        Ensemble::from_doc(&doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::train;
    use crate::matrix::RowMatrix;

    #[test]
    fn json_round_trip_is_exact() {
        let v: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 / 7.0 + if i % 9 == 0 { f64::NAN } else { 0.0 }).collect();
        let x = RowMatrix::from_values(2, v);
        let y: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let e = train(&x, &y, &BoostParams { rounds: 5, min_child_weight: 0.1, ..Default::default() }).unwrap();
        let s = e.to_json();
        let back = Ensemble::from_json(&s).unwrap();
        assert_eq!(back, e);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn rejects_bad_documents() {
        let x = RowMatrix::from_values(1, vec![0.0, 1.0, 2.0]);
        let e = train(&x, &[0, 1, 2], &BoostParams { rounds: 1, min_child_weight: 0.0, ..Default::default() }).unwrap();
        let mut doc = e.to_doc();
        doc.schema_version = "9.0".into();
        assert!(Ensemble::from_doc(&doc).is_err());
        let mut doc = e.to_doc();
        doc.trees.pop();
        assert!(Ensemble::from_doc(&doc).is_err());
    }
}
