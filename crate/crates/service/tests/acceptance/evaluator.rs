use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use maad_core::artifact::parse_package;
use maad_core::evaluator::Evaluator;

use crate::end_to_end::CliRun;
use crate::{oracle, Outcome};

const MUTATIONS: usize = 500;
const SEED: u64 = 0xe7a1_0005;
const THRESHOLD: u8 = 3;

/// A single edit and the one mismatch it must produce.
struct Mutation {
    family: &'static str,
    package: Value,
    kind: &'static str,
    requirement_refs: Vec<String>,
    artifact_refs: Vec<String>,
}

fn severity(kind: &str) -> u8 {
    match kind {
        "dangling_reference" => 4,
        "uncovered_asr" => 3,
        _ => 2,
    }
}

fn arr<'a>(v: &'a mut Value, key: &str) -> &'a mut Vec<Value> {
    v.pointer_mut(key)
        .and_then(Value::as_array_mut)
        .unwrap_or_else(|| panic!("{key} is not an array"))
}

fn strings(v: &Value, pointer: &str, field: &str) -> Vec<String> {
    v.pointer(pointer)
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .map(|x| x[field].as_str().unwrap().to_string())
                .collect()
        })
        .unwrap_or_default()
}

fn requirement_kind<'a>(pkg: &'a Value, id: &str) -> Option<&'a str> {
    pkg["requirement_set"]["requirements"]
        .as_array()?
        .iter()
        .find(|r| r["id"] == id)?["kind"]
        .as_str()
}

fn tagged(pkg: &Value) -> HashSet<String> {
    strings(pkg, "/asr_tags", "requirement_id")
        .into_iter()
        .collect()
}

fn linked(pkg: &Value) -> HashSet<String> {
    strings(pkg, "/traceability_links", "requirement_id")
        .into_iter()
        .collect()
}

fn fresh(rng: &mut ChaCha8Rng, prefix: &str, taken: &HashSet<String>) -> String {
    loop {
        let name = format!("{prefix}{}", rng.random_range(100..100_000));
        if !taken.contains(&name) {
            return name;
        }
    }
}

/// Every name already used by a class, participant, node or artifact.
fn names(pkg: &Value) -> HashSet<String> {
    let mut out: HashSet<String> = strings(pkg, "/class_model/classes", "name")
        .into_iter()
        .chain(strings(pkg, "/deployment_model/nodes", "name"))
        .chain(strings(pkg, "/deployment_model/artifacts", "name"))
        .collect();
    for m in pkg["sequence_models"].as_array().unwrap() {
        for p in m["participants"].as_array().unwrap() {
            out.insert(p["name"].as_str().unwrap().to_string());
        }
    }
    out
}

fn ids(pkg: &Value) -> HashSet<String> {
    strings(pkg, "/logical_view/components", "id")
        .into_iter()
        .chain(strings(pkg, "/physical_view/nodes", "id"))
        .chain(strings(pkg, "/requirement_set/requirements", "id"))
        .chain(strings(pkg, "/adrs", "id"))
        .collect()
}

/// Tagged requirements of `kind` whose only traceability link is at the
/// returned index.
fn sole_links(pkg: &Value, kind: &str) -> Vec<(String, usize)> {
    let links = pkg["traceability_links"].as_array().unwrap();
    tagged(pkg)
        .into_iter()
        .filter(|id| requirement_kind(pkg, id) == Some(kind))
        .filter_map(|id| {
            let at: Vec<usize> = (0..links.len())
                .filter(|i| links[*i]["requirement_id"] == id.as_str())
                .collect();
            (at.len() == 1).then(|| (id, at[0]))
        })
        .collect()
}

fn uncovered(family: &'static str, package: Value, id: &str) -> Mutation {
    Mutation {
        family,
        package,
        kind: "uncovered_asr",
        requirement_refs: vec![id.to_string()],
        artifact_refs: Vec::new(),
    }
}

fn at(family: &'static str, package: Value, kind: &'static str, path: String) -> Mutation {
    Mutation {
        family,
        package,
        kind,
        requirement_refs: Vec::new(),
        artifact_refs: vec![path],
    }
}

const FAMILIES: usize = 15;

fn mutate(base: &Value, rng: &mut ChaCha8Rng) -> Option<Mutation> {
    let mut p = base.clone();
    let tags = tagged(base);
    let links = linked(base);
    let functional_free: Vec<String> = strings(base, "/requirement_set/requirements", "id")
        .into_iter()
        .filter(|id| requirement_kind(base, id) == Some("functional"))
        .filter(|id| !tags.contains(id) && !links.contains(id))
        .collect();
    let untagged: Vec<String> = strings(base, "/requirement_set/requirements", "id")
        .into_iter()
        .filter(|id| !tags.contains(id))
        .collect();
    let requirement_ids = strings(base, "/requirement_set/requirements", "id");
    let mut taken = names(base);
    taken.extend(ids(base));

    Some(match rng.random_range(0..FAMILIES) {
        0 => {
            let target = functional_free.choose(rng)?.clone();
            let tags = arr(&mut p, "/asr_tags");
            let i = rng.random_range(0..tags.len());
            tags[i]["requirement_id"] = json!(target);
            uncovered("retarget ASR tag", p, &target)
        }
        1 => {
            let target = functional_free.choose(rng)?.clone();
            let tags = arr(&mut p, "/asr_tags");
            let i = rng.random_range(0..=tags.len());
            tags.insert(
                i,
                json!({
                    "requirement_id": target,
                    "criticality": rng.random_range(1..=4),
                    "rationale": format!("added rationale {}", rng.random_range(0..10_000)),
                }),
            );
            uncovered("add ASR tag", p, &target)
        }
        2 => {
            let (id, i) = sole_links(base, "non_functional").choose(rng)?.clone();
            arr(&mut p, "/traceability_links").remove(i);
            uncovered("drop sole quality link", p, &id)
        }
        3 => {
            let (id, i) = sole_links(base, "non_functional").choose(rng)?.clone();
            let to = untagged.choose(rng)?.clone();
            arr(&mut p, "/traceability_links")[i]["requirement_id"] = json!(to);
            uncovered("retarget sole quality link", p, &id)
        }
        4 => {
            let m = rng.random_range(0..base["sequence_models"].as_array()?.len());
            let name = fresh(rng, "Ghost", &taken);
            let parts = arr(&mut p, &format!("/sequence_models/{m}/participants"));
            let i = rng.random_range(0..=parts.len());
            parts.insert(i, json!({ "kind": "object", "name": name }));
            at(
                "undeclared participant class",
                p,
                "diagram_inconsistency",
                format!("sequence_models/{m}/participants/{name}"),
            )
        }
        5 => {
            let classes: HashSet<String> = strings(base, "/class_model/classes", "name")
                .into_iter()
                .collect();
            let mut actors = Vec::new();
            for (m, model) in base["sequence_models"].as_array()?.iter().enumerate() {
                for (i, part) in model["participants"].as_array()?.iter().enumerate() {
                    let name = part["name"].as_str()?;
                    if part["kind"] == "actor" && !classes.contains(name) {
                        actors.push((m, i, name.to_string()));
                    }
                }
            }
            let (m, i, name) = actors.choose(rng)?.clone();
            p["sequence_models"][m]["participants"][i]["kind"] = json!("object");
            at(
                "actor demoted to object",
                p,
                "diagram_inconsistency",
                format!("sequence_models/{m}/participants/{name}"),
            )
        }
        6 => {
            let artifacts = arr(&mut p, "/deployment_model/artifacts");
            let i = rng.random_range(0..artifacts.len());
            artifacts[i]["realizes"] = json!(fresh(rng, "cmp-gone-", &taken));
            let name = artifacts[i]["name"].as_str()?.to_string();
            at(
                "artifact realizes unknown component",
                p,
                "diagram_inconsistency",
                format!("deployment_model/artifacts/{name}"),
            )
        }
        7 => {
            let allocations = arr(&mut p, "/physical_view/allocations");
            let i = rng.random_range(0..allocations.len());
            let removed = allocations.remove(i);
            let id = removed["component_id"].as_str()?.to_string();
            if arr(&mut p, "/physical_view/allocations")
                .iter()
                .any(|a| a["component_id"] == id.as_str())
            {
                return None;
            }
            at(
                "drop allocation",
                p,
                "unallocated_component",
                format!("logical_view/components/{id}"),
            )
        }
        8 => {
            let id = fresh(rng, "cmp-new-", &taken);
            let components = arr(&mut p, "/logical_view/components");
            let mut c = components.choose(rng)?.clone();
            c["id"] = json!(id);
            c["name"] = json!(format!("Component {id}"));
            let i = rng.random_range(0..=components.len());
            components.insert(i, c);
            at(
                "add unallocated component",
                p,
                "unallocated_component",
                format!("logical_view/components/{id}"),
            )
        }
        9 => {
            let bogus = fresh(rng, "R-", &taken);
            let adrs = arr(&mut p, "/adrs");
            let i = rng.random_range(0..adrs.len());
            let addresses = adrs[i]["addresses"].as_array_mut()?;
            let j = rng.random_range(0..=addresses.len());
            addresses.insert(j, json!(bogus));
            at(
                "decision addresses unknown requirement",
                p,
                "dangling_reference",
                format!("adrs[{i}].addresses[{j}]"),
            )
        }
        10 => {
            let n = rng.random_range(100..100_000);
            let element = match rng.random_range(0..8) {
                0 => format!("adrs/ADR-{n}"),
                1 => format!("logical_view/components/cmp-gone-{n}"),
                2 => format!("physical_view/nodes/n-gone-{n}"),
                3 => format!("class_model/classes/Ghost{n}"),
                4 => format!("deployment_model/nodes/Ghost{n}"),
                5 => format!("deployment_model/artifacts/ghost_{n}"),
                6 => format!("sequence_models/{n}"),
                _ => format!("sequence_models/0/participants/Ghost{n}"),
            };
            if oracle::element_exists(base, &element) {
                return None;
            }
            let requirement = requirement_ids.choose(rng)?.clone();
            let links = arr(&mut p, "/traceability_links");
            let i = rng.random_range(0..=links.len());
            links.insert(
                i,
                json!({ "requirement_id": requirement, "element": element }),
            );
            at(
                "link to missing element",
                p,
                "dangling_reference",
                format!("traceability_links[{i}].element"),
            )
        }
        11 => {
            let node = fresh(rng, "n-gone-", &taken);
            let allocations = arr(&mut p, "/physical_view/allocations");
            let i = rng.random_range(0..allocations.len());
            allocations[i]["node_id"] = json!(node);
            at(
                "allocation to unknown node",
                p,
                "dangling_reference",
                format!("physical_view.allocations[{i}].node_id"),
            )
        }
        12 => {
            let name = fresh(rng, "Ghost", &taken);
            let m = rng.random_range(0..base["sequence_models"].as_array()?.len());
            let messages = arr(&mut p, &format!("/sequence_models/{m}/messages"));
            let i = rng.random_range(0..messages.len());
            let field = *["from", "to"].choose(rng)?;
            messages[i][field] = json!(name);
            at(
                "message to undeclared participant",
                p,
                "dangling_reference",
                format!("sequence_models[{m}].messages[{i}].{field}"),
            )
        }
        13 => {
            let id = fresh(rng, "cmp-gone-", &taken);
            let relations = arr(&mut p, "/logical_view/relations");
            let i = rng.random_range(0..relations.len());
            let field = *["from_id", "to_id"].choose(rng)?;
            relations[i][field] = json!(id);
            at(
                "relation to unknown component",
                p,
                "dangling_reference",
                format!("logical_view.relations[{i}].{field}"),
            )
        }
        _ => {
            let bogus = fresh(rng, "R-", &taken);
            let risks = arr(&mut p, "/risk_flags");
            let r = rng.random_range(0..risks.len());
            let affected = risks[r]["affected_requirement_ids"].as_array_mut()?;
            let j = rng.random_range(0..=affected.len());
            affected.insert(j, json!(bogus));
            at(
                "risk on unknown requirement",
                p,
                "dangling_reference",
                format!("risk_flags[{r}].affected_requirement_ids[{j}]"),
            )
        }
    })
}

fn check(evaluator: &Evaluator, m: &Mutation) -> Result<(), String> {
    let bytes = serde_json::to_vec(&m.package).unwrap();
    let pkg = parse_package(&bytes).map_err(|e| format!("unparseable: {e}"))?;
    let a = evaluator
        .assess(&pkg, Vec::new(), &[], THRESHOLD)
        .map_err(|e| e.to_string())?;
    let [found] = a.mismatches.as_slice() else {
        let ids: Vec<&str> = a.mismatches.iter().map(|x| x.id.as_str()).collect();
        return Err(format!("{} mismatches {ids:?}", ids.len()));
    };
    let requirement_kind = m
        .requirement_refs
        .first()
        .and_then(|id| requirement_kind(&m.package, id));
    let stage = oracle::expected_stage(m.kind, requirement_kind);
    let key = m
        .requirement_refs
        .first()
        .or(m.artifact_refs.first())
        .unwrap();
    let expected_id = format!("{}:{key}", m.kind);
    let got_stage = a.root_causes[0].stage.as_str();
    if found.kind.as_str() != m.kind
        || found.id != expected_id
        || found.severity != severity(m.kind)
        || found.requirement_refs != m.requirement_refs
        || found.artifact_refs != m.artifact_refs
        || got_stage != stage
        || a.refinements[0].target_stage.as_str() != stage
    {
        return Err(format!(
            "got {} ({}, severity {}, stage {got_stage}), expected {expected_id} (stage {stage})",
            found.id,
            found.kind.as_str(),
            found.severity
        ));
    }
    Ok(())
}

pub fn criterion(run: &CliRun) -> Outcome {
    let base: Value = match serde_json::from_slice(&run.package_bytes) {
        Ok(v) => v,
        Err(e) => return Outcome::check(false, format!("no confirmed package: {e}")),
    };
    let evaluator = Evaluator::default();
    let clean = parse_package(&run.package_bytes)
        .map_err(|e| e.to_string())
        .and_then(|p| {
            evaluator
                .assess(&p, Vec::new(), &[], THRESHOLD)
                .map_err(|e| e.to_string())
        });
    match clean {
        Ok(a) if a.mismatches.is_empty() => {}
        Ok(a) => {
            return Outcome::check(
                false,
                format!("unmutated package has {} mismatches", a.mismatches.len()),
            )
        }
        Err(e) => return Outcome::check(false, e),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut seen = HashSet::new();
    let mut mutations = Vec::with_capacity(MUTATIONS);
    let mut attempts = 0;
    while mutations.len() < MUTATIONS && attempts < MUTATIONS * 100 {
        attempts += 1;
        if let Some(m) = mutate(&base, &mut rng) {
            if seen.insert(oracle::canonical_json(&m.package)) {
                mutations.push(m);
            }
        }
    }
    if mutations.len() < MUTATIONS {
        return Outcome::check(
            false,
            format!("only {} distinct mutations generated", mutations.len()),
        );
    }

    let mut failures = Vec::new();
    let mut families = std::collections::BTreeMap::<&str, usize>::new();
    for (i, m) in mutations.iter().enumerate() {
        *families.entry(m.family).or_default() += 1;
        if let Err(e) = check(&evaluator, m) {
            failures.push(format!("#{i} {}: {e}", m.family));
        }
    }
    let detail = if failures.is_empty() {
        format!(
            "{MUTATIONS} single-edit mutations across {} families each yield exactly the expected mismatch, stage and refs",
            families.len()
        )
    } else {
        format!(
            "{}/{MUTATIONS} mutations misclassified; {}",
            failures.len(),
            failures[..failures.len().min(5)].join("; ")
        )
    };
    Outcome::check(failures.is_empty(), detail)
}
