//! JSON file formats: instances, bandit specs, reference laws and CLI
//! configuration. The field-level schema is documented in `docs/schema.md`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fanobound_core::bandit::DEFAULT_TRANSCRIPT_CAP;
use fanobound_core::isdm::Labels;
use fanobound_core::{BanditInstanceSpec, BanditPolicy, FiniteDistribution, FiniteIsdm, LossKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        source: fanobound_core::Error,
    },
}

impl LoadError {
    /// 2 for unreadable or malformed files, 3 for content that parses but
    /// fails validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } => 2,
            Self::Invalid { .. } => 3,
        }
    }
}

/// Parses JSON text, reporting the path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, LoadError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        let message = if field == "." {
            inner.to_string()
        } else {
            format!("field `{field}`: {inner}")
        };
        LoadError::Parse {
            path: origin.to_string(),
            message,
        }
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, LoadError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: origin.clone(),
        source,
    })?;
    parse_json(&text, &origin)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsFile {
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default)]
    pub outcomes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub prior: Vec<f64>,
    pub obs_laws: Vec<Vec<f64>>,
    pub loss: Vec<Vec<f64>>,
    pub l_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelsFile>,
}

impl InstanceFile {
    pub fn into_instance(self) -> fanobound_core::Result<FiniteIsdm> {
        let inst = FiniteIsdm::from_rows(self.prior, self.obs_laws, self.loss, self.l_max)?;
        match self.labels {
            Some(l) => inst.with_labels(Labels {
                models: l.models,
                outcomes: l.outcomes,
            }),
            None => Ok(inst),
        }
    }

    pub fn from_instance(inst: &FiniteIsdm) -> Self {
        let labels = inst.labels();
        Self {
            prior: inst.prior().probs().to_vec(),
            obs_laws: inst.obs_laws().iter().map(|r| r.probs().to_vec()).collect(),
            loss: inst.loss().to_vec(),
            l_max: inst.l_max(),
            labels: (!labels.models.is_empty() || !labels.outcomes.is_empty()).then(|| LabelsFile {
                models: labels.models.clone(),
                outcomes: labels.outcomes.clone(),
            }),
        }
    }
}

pub fn load_instance(path: &Path) -> Result<FiniteIsdm, LoadError> {
    let file: InstanceFile = read_json(path)?;
    file.into_instance().map_err(|source| LoadError::Invalid {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyFile {
    Uniform,
    Fixed { arm: usize },
    Greedy,
    Table { rows: BTreeMap<String, Vec<f64>> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKindFile {
    #[default]
    CumulativeRegret,
}

fn default_cap() -> usize {
    DEFAULT_TRANSCRIPT_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditFile {
    pub arms: usize,
    pub horizon: usize,
    pub reward_alphabet: Vec<f64>,
    pub reward_probs: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
    pub policy: PolicyFile,
    #[serde(default)]
    pub loss_kind: LossKindFile,
    #[serde(default = "default_cap")]
    pub transcript_cap: usize,
}

impl BanditFile {
    pub fn into_spec(self) -> BanditInstanceSpec {
        BanditInstanceSpec {
            arms: self.arms,
            horizon: self.horizon,
            reward_alphabet: self.reward_alphabet,
            reward_probs: self.reward_probs,
            prior: self.prior,
            policy: match self.policy {
                PolicyFile::Uniform => BanditPolicy::Uniform,
                PolicyFile::Fixed { arm } => BanditPolicy::Fixed(arm),
                PolicyFile::Greedy => BanditPolicy::Greedy,
                PolicyFile::Table { rows } => BanditPolicy::Table(rows),
            },
            loss_kind: match self.loss_kind {
                LossKindFile::CumulativeRegret => LossKind::CumulativeRegret,
            },
            transcript_cap: self.transcript_cap,
        }
    }
}

pub fn load_bandit(path: &Path) -> Result<BanditInstanceSpec, LoadError> {
    read_json::<BanditFile>(path).map(BanditFile::into_spec)
}

/// A reference law file: a bare probability array or `{label, probs}`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ReferenceFile {
    Bare(Vec<f64>),
    Labelled { label: String, probs: Vec<f64> },
}

pub fn load_reference(path: &Path) -> Result<(String, FiniteDistribution), LoadError> {
    let origin = path.display().to_string();
    let (label, probs) = match read_json::<ReferenceFile>(path)? {
        ReferenceFile::Bare(p) => (format!("file:{origin}"), p),
        ReferenceFile::Labelled { label, probs } => (label, probs),
    };
    let law = FiniteDistribution::named("reference", probs).map_err(|source| LoadError::Invalid {
        path: origin,
        source,
    })?;
    Ok((label, law))
}

/// Settings file for the CLI; absent fields take the built-in defaults and
/// command-line flags override both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub tolerance: Option<f64>,
    pub t_refine: Option<usize>,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    pub output_format: Option<String>,
    pub candidate_refs: Option<Vec<String>>,
    pub iterations: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trip() {
        let text = r#"{"prior":[0.5,0.5],"obs_laws":[[0.6,0.4],[0.1,0.9]],
            "loss":[[0,1],[1,0]],"l_max":1,"labels":{"models":["a","b"]}}"#;
        let file: InstanceFile = parse_json(text, "mem").unwrap();
        let inst = file.clone().into_instance().unwrap();
        assert_eq!(inst.labels().models, ["a", "b"]);
        assert_eq!(InstanceFile::from_instance(&inst), file);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let text = r#"{"prior":[0.5,0.5],"obs_laws":[[0.6,"x"]],"loss":[],"l_max":1}"#;
        let err = parse_json::<InstanceFile>(text, "mem").unwrap_err();
        assert!(err.to_string().contains("obs_laws[0][1]"), "{err}");
        assert_eq!(err.exit_code(), 2);

        let err = parse_json::<InstanceFile>(r#"{"prior":[1]}"#, "mem").unwrap_err();
        assert!(err.to_string().contains("obs_laws"), "{err}");

        let err = parse_json::<InstanceFile>(
            r#"{"prior":[1],"obs_laws":[[1]],"loss":[[0]],"l_max":1,"extra":2}"#,
            "mem",
        )
        .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn validation_errors_name_the_row() {
        let text = r#"{"prior":[0.5,0.5],"obs_laws":[[0.6,0.4],[0.1,0.8]],"loss":[[0,1],[1,0]],"l_max":1}"#;
        let err = parse_json::<InstanceFile>(text, "mem").unwrap().into_instance().unwrap_err();
        assert!(err.to_string().contains("obs_laws[1]"), "{err}");
    }

    #[test]
    fn bandit_defaults() {
        let text = r#"{"arms":2,"horizon":1,"reward_alphabet":[0,1],
            "reward_probs":[[[0.5,0.5],[0.2,0.8]]],"policy":{"kind":"fixed","arm":1}}"#;
        let spec = parse_json::<BanditFile>(text, "mem").unwrap().into_spec();
        assert_eq!(spec.policy, BanditPolicy::Fixed(1));
        assert_eq!(spec.transcript_cap, DEFAULT_TRANSCRIPT_CAP);
        assert_eq!(spec.prior, None);
        assert!(parse_json::<BanditFile>(&text.replace("fixed", "bogus"), "mem").is_err());
    }

    #[test]
    fn reference_forms() {
        let bare: ReferenceFile = parse_json("[0.5, 0.5]", "mem").unwrap();
        assert_eq!(bare, ReferenceFile::Bare(vec![0.5, 0.5]));
        let named: ReferenceFile = parse_json(r#"{"label":"q","probs":[1,0]}"#, "mem").unwrap();
        assert!(matches!(named, ReferenceFile::Labelled { .. }));
    }
}
