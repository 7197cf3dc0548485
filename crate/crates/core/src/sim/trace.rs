//! Trace records and their JSON Lines form.
//!
//! One record per line, fields always in the order step, kind, element,
//! thing, before, after, so regenerated traces are byte-comparable.

use serde::{Deserialize, Serialize};

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordKind {
    #[serde(rename = "inject")]
    Inject,
    /// An injection bounced off a blocked machine; the thing was not created.
    #[serde(rename = "refused-inject")]
    RefusedInject,
    #[serde(rename = "fire-flow")]
    FireFlow,
    #[serde(rename = "fire-trigger")]
    FireTrigger,
    /// Also the birth record of things made by create stages; `before` is the
    /// inherited input (null for script-made things without one).
    #[serde(rename = "apply-fn")]
    ApplyFn,
    #[serde(rename = "store-write")]
    StoreWrite,
    #[serde(rename = "event")]
    Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub kind: RecordKind,
    /// Stage path, `from->to` flow, `from=>to` trigger, `Machine.store`, or
    /// event id, depending on the kind.
    pub element: String,
    pub thing: Option<u64>,
    pub before: Value,
    pub after: Value,
}

impl TraceRecord {
    pub fn new(
        step: u64,
        kind: RecordKind,
        element: impl Into<String>,
        thing: Option<u64>,
        before: Value,
        after: Value,
    ) -> Self {
        TraceRecord { step, kind, element: element.into(), thing, before, after }
    }
}

/// A finished simulation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serialization cannot fail"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, String> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: TraceRecord = serde_json::from_str(line)
                .map_err(|e| format!("line {}: {e}", i + 1))?;
            records.push(record);
        }
        Ok(Trace { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Steps are non-decreasing and every referenced thing id was introduced
    /// by an earlier inject or apply-fn record.
    pub fn check_internal_order(&self) -> Result<(), String> {
        let mut last_step = 0;
        let mut known = std::collections::HashSet::new();
        for (i, record) in self.records.iter().enumerate() {
            if record.step < last_step {
                return Err(format!("record {i}: step went backwards"));
            }
            last_step = record.step;
            if let Some(thing) = record.thing {
                match record.kind {
                    RecordKind::Inject | RecordKind::ApplyFn => {
                        known.insert(thing);
                    }
                    _ => {
                        if !known.contains(&thing) {
                            return Err(format!(
                                "record {i}: thing {thing} referenced before it was injected or created"
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
