use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LearnerError, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum HyperParams {
    #[serde(rename = "LR")]
    Lr { lambda: f64 },
    #[serde(rename = "DT")]
    Dt { max_depth: Option<usize>, min_leaf: usize },
    #[serde(rename = "RF")]
    Rf {
        trees: usize,
        max_depth: Option<usize>,
        min_leaf: usize,
    },
    #[serde(rename = "GB")]
    Gb {
        stages: usize,
        shrinkage: f64,
        max_depth: usize,
    },
    #[serde(rename = "MLP")]
    Mlp {
        hidden: Vec<usize>,
        learning_rate: f64,
        epochs: usize,
    },
}

impl HyperParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            HyperParams::Lr { .. } => ModelKind::Lr,
            HyperParams::Dt { .. } => ModelKind::Dt,
            HyperParams::Rf { .. } => ModelKind::Rf,
            HyperParams::Gb { .. } => ModelKind::Gb,
            HyperParams::Mlp { .. } => ModelKind::Mlp,
        }
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |msg: &str| Err(LearnerError::InvalidParams(format!("{self}: {msg}")));
        match self {
            HyperParams::Lr { lambda } if !(lambda.is_finite() && *lambda >= 0.0) => {
                bad("lambda must be finite and >= 0")
            }
            HyperParams::Dt { max_depth, min_leaf } | HyperParams::Rf { max_depth, min_leaf, .. }
                if *min_leaf == 0 || *max_depth == Some(0) =>
            {
                bad("min_leaf and max_depth must be >= 1")
            }
            HyperParams::Rf { trees: 0, .. } => bad("trees must be >= 1"),
            HyperParams::Gb { stages, shrinkage, max_depth }
                if *stages == 0 || *max_depth == 0 || !(*shrinkage > 0.0 && *shrinkage <= 1.0) =>
            {
                bad("stages, max_depth >= 1 and shrinkage in (0, 1]")
            }
            HyperParams::Mlp { hidden, learning_rate, epochs }
                if hidden.is_empty()
                    || hidden.contains(&0)
                    || *epochs == 0
                    || !(*learning_rate > 0.0 && learning_rate.is_finite()) =>
            {
                bad("hidden layers nonempty and positive, epochs >= 1, learning_rate > 0")
            }
            _ => Ok(()),
        }
    }
}

fn depth_str(d: &Option<usize>) -> String {
    d.map_or_else(|| "none".to_string(), |d| d.to_string())
}

impl fmt::Display for HyperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperParams::Lr { lambda } => write!(f, "lambda={lambda}"),
            HyperParams::Dt { max_depth, min_leaf } => {
                write!(f, "max_depth={} min_leaf={min_leaf}", depth_str(max_depth))
            }
            HyperParams::Rf { trees, max_depth, min_leaf } => write!(
                f,
                "trees={trees} max_depth={} min_leaf={min_leaf}",
                depth_str(max_depth)
            ),
            HyperParams::Gb { stages, shrinkage, max_depth } => {
                write!(f, "stages={stages} shrinkage={shrinkage} max_depth={max_depth}")
            }
            HyperParams::Mlp { hidden, learning_rate, epochs } => {
                let h: Vec<String> = hidden.iter().map(|h| h.to_string()).collect();
                write!(f, "hidden=({}) learning_rate={learning_rate} epochs={epochs}", h.join(","))
            }
        }
    }
}

/// Value lists per hyperparameter; cells enumerate the cartesian product
/// with the first-listed parameter varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum HyperGrid {
    #[serde(rename = "LR")]
    Lr { lambda: Vec<f64> },
    #[serde(rename = "DT")]
    Dt {
        max_depth: Vec<Option<usize>>,
        min_leaf: Vec<usize>,
    },
    #[serde(rename = "RF")]
    Rf {
        trees: Vec<usize>,
        max_depth: Vec<Option<usize>>,
        min_leaf: Vec<usize>,
    },
    #[serde(rename = "GB")]
    Gb {
        stages: Vec<usize>,
        shrinkage: Vec<f64>,
        max_depth: Vec<usize>,
    },
    #[serde(rename = "MLP")]
    Mlp {
        hidden: Vec<Vec<usize>>,
        learning_rate: Vec<f64>,
        epochs: Vec<usize>,
    },
}

impl HyperGrid {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => HyperGrid::Lr {
                lambda: vec![0.001, 0.01, 0.1, 1.0],
            },
            ModelKind::Dt => HyperGrid::Dt {
                max_depth: vec![Some(2), Some(3), Some(4), Some(6), Some(8)],
                min_leaf: vec![1, 5, 10],
            },
            ModelKind::Rf => HyperGrid::Rf {
                trees: vec![100, 300],
                max_depth: vec![Some(4), Some(8), None],
                min_leaf: vec![1, 5],
            },
            ModelKind::Gb => HyperGrid::Gb {
                stages: vec![100, 300],
                shrinkage: vec![0.05, 0.1],
                max_depth: vec![1, 2, 3],
            },
            ModelKind::Mlp => HyperGrid::Mlp {
                hidden: vec![vec![16], vec![32], vec![32, 16]],
                learning_rate: vec![0.01, 0.001],
                epochs: vec![500],
            },
        }
    }

    /// A grid holding exactly one cell.
    pub fn single(params: &HyperParams) -> Self {
        match params.clone() {
            HyperParams::Lr { lambda } => HyperGrid::Lr { lambda: vec![lambda] },
            HyperParams::Dt { max_depth, min_leaf } => HyperGrid::Dt {
                max_depth: vec![max_depth],
                min_leaf: vec![min_leaf],
            },
            HyperParams::Rf { trees, max_depth, min_leaf } => HyperGrid::Rf {
                trees: vec![trees],
                max_depth: vec![max_depth],
                min_leaf: vec![min_leaf],
            },
            HyperParams::Gb { stages, shrinkage, max_depth } => HyperGrid::Gb {
                stages: vec![stages],
                shrinkage: vec![shrinkage],
                max_depth: vec![max_depth],
            },
            HyperParams::Mlp { hidden, learning_rate, epochs } => HyperGrid::Mlp {
                hidden: vec![hidden],
                learning_rate: vec![learning_rate],
                epochs: vec![epochs],
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            HyperGrid::Lr { .. } => ModelKind::Lr,
            HyperGrid::Dt { .. } => ModelKind::Dt,
            HyperGrid::Rf { .. } => ModelKind::Rf,
            HyperGrid::Gb { .. } => ModelKind::Gb,
            HyperGrid::Mlp { .. } => ModelKind::Mlp,
        }
    }

    pub fn cells(&self) -> Vec<HyperParams> {
        let mut out = Vec::new();
        match self {
            HyperGrid::Lr { lambda } => {
                out.extend(lambda.iter().map(|&lambda| HyperParams::Lr { lambda }));
            }
            HyperGrid::Dt { max_depth, min_leaf } => {
                for &max_depth in max_depth {
                    for &min_leaf in min_leaf {
                        out.push(HyperParams::Dt { max_depth, min_leaf });
                    }
                }
            }
            HyperGrid::Rf { trees, max_depth, min_leaf } => {
                for &trees in trees {
                    for &max_depth in max_depth {
                        for &min_leaf in min_leaf {
                            out.push(HyperParams::Rf { trees, max_depth, min_leaf });
                        }
                    }
                }
            }
            HyperGrid::Gb { stages, shrinkage, max_depth } => {
                for &stages in stages {
                    for &shrinkage in shrinkage {
                        for &max_depth in max_depth {
                            out.push(HyperParams::Gb { stages, shrinkage, max_depth });
                        }
                    }
                }
            }
            HyperGrid::Mlp { hidden, learning_rate, epochs } => {
                for h in hidden {
                    for &learning_rate in learning_rate {
                        for &epochs in epochs {
                            out.push(HyperParams::Mlp {
                                hidden: h.clone(),
                                learning_rate,
                                epochs,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Replace one parameter's value list from text such as `0.01 0.1`,
    /// `4 8 none` or `16 32,16` (hidden layer sizes joined by commas).
    pub fn set(&mut self, param: &str, values: &str) -> Result<(), LearnerError> {
        let items: Vec<&str> = values.split_whitespace().collect();
        if items.is_empty() {
            return Err(LearnerError::InvalidParams(format!("empty value list for {param}")));
        }
        fn parse_all<T: FromStr>(param: &str, items: &[&str]) -> Result<Vec<T>, LearnerError> {
            items
                .iter()
                .map(|s| {
                    s.parse()
                        .map_err(|_| LearnerError::InvalidParams(format!("{param}: cannot parse {s:?}")))
                })
                .collect()
        }
        fn depths(param: &str, items: &[&str]) -> Result<Vec<Option<usize>>, LearnerError> {
            items
                .iter()
                .map(|s| match *s {
                    "none" => Ok(None),
                    s => parse_all::<usize>(param, &[s]).map(|v| Some(v[0])),
                })
                .collect()
        }
        let kind = self.kind();
        let unknown = || {
            Err(LearnerError::InvalidParams(format!(
                "unknown parameter {param} for {kind}"
            )))
        };
        match (&mut *self, param) {
            (HyperGrid::Lr { lambda }, "lambda") => *lambda = parse_all(param, &items)?,
            (HyperGrid::Dt { max_depth, .. } | HyperGrid::Rf { max_depth, .. }, "max_depth") => {
                *max_depth = depths(param, &items)?
            }
            (HyperGrid::Dt { min_leaf, .. } | HyperGrid::Rf { min_leaf, .. }, "min_leaf") => {
                *min_leaf = parse_all(param, &items)?
            }
            (HyperGrid::Rf { trees, .. }, "trees") => *trees = parse_all(param, &items)?,
            (HyperGrid::Gb { stages, .. }, "stages") => *stages = parse_all(param, &items)?,
            (HyperGrid::Gb { shrinkage, .. }, "shrinkage") => *shrinkage = parse_all(param, &items)?,
            (HyperGrid::Gb { max_depth, .. }, "max_depth") => *max_depth = parse_all(param, &items)?,
            (HyperGrid::Mlp { hidden, .. }, "hidden") => {
                *hidden = items
                    .iter()
                    .map(|s| parse_all(param, &s.split(',').collect::<Vec<_>>()))
                    .collect::<Result<_, _>>()?
            }
            (HyperGrid::Mlp { learning_rate, .. }, "learning_rate") => {
                *learning_rate = parse_all(param, &items)?
            }
            (HyperGrid::Mlp { epochs, .. }, "epochs") => *epochs = parse_all(param, &items)?,
            _ => return unknown(),
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }
}
