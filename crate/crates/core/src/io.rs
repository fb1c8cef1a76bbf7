//! JSON file formats. Bidder, good, signal and cluster indices are 1-based
//! in files and 0-based in memory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadgets::GraphSpec;
use crate::model::{BayesInstance, Instance, KnownInstance, Matrix, SchemeReport, SignalingScheme, PROB_TOL};
use crate::solver_known::ClusterPartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceFile {
    Known {
        n: usize,
        m: usize,
        p: Vec<f64>,
        #[serde(rename = "V")]
        values: Matrix,
    },
    Bayes {
        n: usize,
        m: usize,
        k: usize,
        p: Vec<f64>,
        q: Vec<f64>,
        #[serde(rename = "Vs")]
        values: Vec<Matrix>,
    },
}

fn check_dims(values: &Matrix, n: usize, m: usize, what: &str) -> Result<()> {
    if values.len() != n {
        return Err(Error::Dimension(format!("{what} has {} rows but n = {n}", values.len())));
    }
    if let Some((i, row)) = values.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(Error::Dimension(format!(
            "{what} row {} has {} entries but m = {m}",
            i + 1,
            row.len()
        )));
    }
    Ok(())
}

impl InstanceFile {
    pub fn into_instance(self, tol: f64) -> Result<Instance> {
        match self {
            InstanceFile::Known { n, m, p, values } => {
                if p.len() != m {
                    return Err(Error::Dimension(format!("p has {} entries but m = {m}", p.len())));
                }
                check_dims(&values, n, m, "V")?;
                Ok(Instance::Known(KnownInstance::with_tolerance(p, values, tol)?))
            }
            InstanceFile::Bayes { n, m, k, p, q, values } => {
                if p.len() != m {
                    return Err(Error::Dimension(format!("p has {} entries but m = {m}", p.len())));
                }
                if q.len() != k || values.len() != k {
                    return Err(Error::Dimension(format!(
                        "k = {k} but q has {} entries and Vs has {} matrices",
                        q.len(),
                        values.len()
                    )));
                }
                for (l, v) in values.iter().enumerate() {
                    check_dims(v, n, m, &format!("Vs[{}]", l + 1))?;
                }
                Ok(Instance::Bayes(BayesInstance::with_tolerance(p, q, values, tol)?))
            }
        }
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        match inst {
            Instance::Known(k) => InstanceFile::Known {
                n: k.n(),
                m: k.m(),
                p: k.p().to_vec(),
                values: k.values().clone(),
            },
            Instance::Bayes(b) => InstanceFile::Bayes {
                n: b.n(),
                m: b.m(),
                k: b.k(),
                p: b.p().to_vec(),
                q: b.q().to_vec(),
                values: b.values().to_vec(),
            },
        }
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_with_tolerance(text, PROB_TOL)
}

pub fn parse_instance_with_tolerance(text: &str, tol: f64) -> Result<Instance> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInstance(format!("malformed instance JSON: {e}")))?;
    file.into_instance(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub s: usize,
    pub phi: Matrix,
}

impl From<&SignalingScheme> for SchemeFile {
    fn from(scheme: &SignalingScheme) -> Self {
        Self {
            s: scheme.signals(),
            phi: scheme.rows().clone(),
        }
    }
}

/// Parses a scheme; validity against an instance is checked by the caller.
pub fn parse_scheme(text: &str) -> Result<SignalingScheme> {
    let file: SchemeFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed scheme JSON: {e}")))?;
    if file.s != file.phi.len() {
        return Err(Error::Dimension(format!("s = {} but phi has {} rows", file.s, file.phi.len())));
    }
    Ok(SignalingScheme::new(file.phi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub clusters: Vec<Vec<usize>>,
}

impl From<&ClusterPartition> for PartitionFile {
    fn from(p: &ClusterPartition) -> Self {
        Self {
            clusters: p.clusters().iter().map(|c| c.iter().map(|j| j + 1).collect()).collect(),
        }
    }
}

pub fn parse_partition(text: &str, m: usize) -> Result<ClusterPartition> {
    let file: PartitionFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidPartition(format!("malformed partition JSON: {e}")))?;
    let clusters = file
        .clusters
        .into_iter()
        .map(|c| {
            c.into_iter()
                .map(|j| {
                    j.checked_sub(1)
                        .ok_or_else(|| Error::InvalidPartition("good indices start at 1".into()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ClusterPartition::new(clusters, m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub x: String,
    pub y: String,
}

impl From<&GraphSpec> for GraphFile {
    fn from(g: &GraphSpec) -> Self {
        let name = |v: usize| g.vertices()[v].clone();
        Self {
            vertices: g.vertices().to_vec(),
            edges: g.edges().iter().map(|&(u, v)| (name(u), name(v))).collect(),
            x: name(g.x()),
            y: name(g.y()),
        }
    }
}

pub fn parse_graph(text: &str) -> Result<GraphSpec> {
    let file: GraphFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidGraph(format!("malformed graph JSON: {e}")))?;
    GraphSpec::new(file.vertices, file.edges, &file.x, &file.y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalReportFile {
    pub signal: usize,
    pub contribution: f64,
    /// `[top, second]` per outcome.
    pub labels: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportFile {
    pub revenue: f64,
    pub welfare: f64,
    pub signal_count_after_merge: usize,
    pub per_signal: Vec<SignalReportFile>,
}

impl From<&SchemeReport> for ReportFile {
    fn from(r: &SchemeReport) -> Self {
        Self {
            revenue: r.revenue,
            welfare: r.welfare,
            signal_count_after_merge: r.signal_count_after_merge,
            per_signal: r
                .per_signal
                .iter()
                .map(|s| SignalReportFile {
                    signal: s.signal + 1,
                    contribution: s.contribution,
                    labels: s.labels.pairs().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
                })
                .collect(),
        }
    }
}
