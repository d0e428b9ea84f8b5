//! Reference implementations the criteria compare against. None of these
//! call into the engine.

use std::collections::BTreeSet;

use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Compact JSON with object keys in byte order.
pub fn canonical_json(value: &Value) -> String {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_by(|a, b| a.as_bytes().cmp(b.as_bytes()));
            let fields: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical_json(&map[k])))
                .collect();
            format!("{{{}}}", fields.join(","))
        }
        Value::Array(items) => {
            let items: Vec<String> = items.iter().map(canonical_json).collect();
            format!("[{}]", items.join(","))
        }
        scalar => scalar.to_string(),
    }
}

fn has(list: &Value, field: &str, id: &str) -> bool {
    list.as_array()
        .is_some_and(|items| items.iter().any(|item| item[field] == id))
}

/// Whether a slash-delimited element path names something in the package.
pub fn element_exists(pkg: &Value, path: &str) -> bool {
    let parts: Vec<&str> = path.split('/').collect();
    match parts.as_slice() {
        ["adrs", id] => has(&pkg["adrs"], "id", id),
        ["logical_view", "components", id] => has(&pkg["logical_view"]["components"], "id", id),
        ["physical_view", "nodes", id] => has(&pkg["physical_view"]["nodes"], "id", id),
        ["class_model", "classes", name] => has(&pkg["class_model"]["classes"], "name", name),
        ["deployment_model", "nodes", name] => has(&pkg["deployment_model"]["nodes"], "name", name),
        ["deployment_model", "artifacts", name] => {
            has(&pkg["deployment_model"]["artifacts"], "name", name)
        }
        ["sequence_models", index, rest @ ..] => {
            let Some(model) = index
                .parse::<usize>()
                .ok()
                .and_then(|i| pkg["sequence_models"].get(i))
            else {
                return false;
            };
            match rest {
                [] => true,
                ["participants", name] => has(&model["participants"], "name", name),
                ["messages", seq] => seq.parse::<u64>().is_ok_and(|seq| {
                    model["messages"]
                        .as_array()
                        .is_some_and(|m| m.iter().any(|m| m["seq_index"] == seq))
                }),
                _ => false,
            }
        }
        _ => false,
    }
}

/// Fraction of ASR-tagged requirements with at least one link to an
/// existing element.
pub fn asr_coverage(pkg: &Value) -> (usize, usize) {
    let tagged: BTreeSet<&str> = pkg["asr_tags"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["requirement_id"].as_str().unwrap())
        .collect();
    let links = pkg["traceability_links"].as_array().unwrap();
    let covered = tagged
        .iter()
        .filter(|id| {
            links.iter().any(|l| {
                l["requirement_id"] == **id && element_exists(pkg, l["element"].as_str().unwrap())
            })
        })
        .count();
    (covered, tagged.len())
}

/// Stage that owns a mismatch, per the evaluation rule table.
pub fn expected_stage(kind: &str, requirement_kind: Option<&str>) -> &'static str {
    match (kind, requirement_kind) {
        ("uncovered_asr", Some("non_functional")) => "modeling",
        ("uncovered_asr", _) => "design",
        ("unallocated_component", _) => "modeling",
        ("diagram_inconsistency" | "dangling_reference" | "judged", _) => "design",
        (other, _) => panic!("no rule for {other}"),
    }
}

/// Phase after each journal event, derived from event kinds and payloads.
pub fn phases(lines: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(lines.len());
    let mut phase = String::from("INIT");
    let mut pending: BTreeSet<String> = BTreeSet::new();
    let mut max_rounds = 0;
    for line in lines {
        let event: Value = serde_json::from_str(line).unwrap();
        let p = &event["payload"];
        match event["kind"].as_str().unwrap() {
            "SessionStarted" => {
                phase = "ANALYSIS".into();
                max_rounds = p["config"]["max_rounds"].as_u64().unwrap();
            }
            "AgentTaskCompleted" => match p["role"].as_str().unwrap() {
                "analyst" => {
                    for q in p["artifacts"]["questions"].as_array().unwrap() {
                        if q["status"] == "pending" {
                            pending.insert(q["question_id"].as_str().unwrap().into());
                        }
                    }
                    phase = if pending.is_empty() {
                        "MODELING".into()
                    } else {
                        "AWAIT_CLARIFICATION".into()
                    };
                }
                "modeler" => phase = "DESIGN".into(),
                "designer" => phase = "EVALUATION".into(),
                _ => {}
            },
            "ClarificationAnswered" => {
                pending.remove(p["question_id"].as_str().unwrap());
                if pending.is_empty() {
                    phase = "ANALYSIS".into();
                }
            }
            "EvaluationCompleted" => {
                let verdict = &p["verdict"];
                phase = if verdict["decision"] == "confirmed" {
                    "CONFIRMED".into()
                } else if p["round"].as_u64().unwrap() >= max_rounds {
                    "ABORTED".into()
                } else {
                    let stage = verdict["routed_stage"].as_str().unwrap_or("design");
                    format!("REFINE_{}", stage.to_uppercase())
                };
            }
            "RefinementRouted" => {
                phase = format!("REFINE_{}", p["stage"].as_str().unwrap().to_uppercase())
            }
            "SessionConfirmed" => phase = "CONFIRMED".into(),
            "SessionAborted" => phase = "ABORTED".into(),
            _ => {}
        }
        out.push(phase.clone());
    }
    out
}

/// Counts events of one kind, optionally for one role.
pub fn count_events(lines: &[String], kind: &str, role: Option<&str>) -> usize {
    lines
        .iter()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|e| e["kind"] == kind && role.is_none_or(|r| e["payload"]["role"] == r))
        .count()
}
