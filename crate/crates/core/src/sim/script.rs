//! Injection scripts: externally scheduled arrivals.

use serde::{Deserialize, Serialize};

use crate::model::{Model, StageId, StageKind};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub step: u64,
    /// Stage path; must name a transfer or create stage.
    pub target: String,
    #[serde(rename = "type")]
    pub thing_type: String,
    pub payload: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Script {
    pub injections: Vec<Injection>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptError {
    #[error("script is not valid JSON: {0}")]
    Json(String),
    #[error("injection {index}: steps must be sorted ascending")]
    Unsorted { index: usize },
    #[error("injection {index}: target {target} does not resolve")]
    BadTarget { index: usize, target: String },
    #[error("injection {index}: target {target} is a {kind} stage; only transfer and create accept injections")]
    WrongKind { index: usize, target: String, kind: String },
}

impl Script {
    pub fn new(injections: Vec<Injection>) -> Result<Script, ScriptError> {
        for (i, pair) in injections.windows(2).enumerate() {
            if pair[1].step < pair[0].step {
                return Err(ScriptError::Unsorted { index: i + 1 });
            }
        }
        Ok(Script { injections })
    }

    pub fn from_json(text: &str) -> Result<Script, ScriptError> {
        let injections: Vec<Injection> =
            serde_json::from_str(text).map_err(|e| ScriptError::Json(e.to_string()))?;
        Script::new(injections)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.injections).expect("script serialization cannot fail")
    }

    /// Check every target against the model and return the resolved stages,
    /// in script order.
    pub fn resolve(&self, model: &Model) -> Result<Vec<StageId>, ScriptError> {
        let mut targets = Vec::with_capacity(self.injections.len());
        for (index, injection) in self.injections.iter().enumerate() {
            let stage = model.lookup_stage(&injection.target).map_err(|_| {
                ScriptError::BadTarget { index, target: injection.target.clone() }
            })?;
            let kind = model.stage(stage).kind;
            if !matches!(kind, StageKind::Transfer | StageKind::Create) {
                return Err(ScriptError::WrongKind {
                    index,
                    target: injection.target.clone(),
                    kind: kind.to_string(),
                });
            }
            targets.push(stage);
        }
        Ok(targets)
    }

    pub fn max_step(&self) -> Option<u64> {
        self.injections.iter().map(|i| i.step).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;

    #[test]
    fn parses_and_resolves() {
        let model = parse_model("machine M { transfer; receive; } flow M.transfer -> M.receive;")
            .unwrap();
        let script = Script::from_json(
            r#"[{"step":1,"target":"M.transfer","type":"customer","payload":"C1"}]"#,
        )
        .unwrap();
        let targets = script.resolve(&model).unwrap();
        assert_eq!(targets.len(), 1);
    }

    #[test]
    fn rejects_unsorted_steps() {
        let err = Script::from_json(
            r#"[{"step":2,"target":"M.transfer","type":"t","payload":null},
                {"step":1,"target":"M.transfer","type":"t","payload":null}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, ScriptError::Unsorted { index: 1 }));
    }

    #[test]
    fn rejects_receive_target() {
        let model = parse_model("machine M { transfer; receive; } flow M.transfer -> M.receive;")
            .unwrap();
        let script = Script::from_json(
            r#"[{"step":0,"target":"M.receive","type":"t","payload":null}]"#,
        )
        .unwrap();
        assert!(matches!(
            script.resolve(&model),
            Err(ScriptError::WrongKind { .. })
        ));
    }
}
