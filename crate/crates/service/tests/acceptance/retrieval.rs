use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use maad_core::kb::{HashEmbedder, KnowledgeIndex, SourceKind};
use maad_core::Role;

use crate::Outcome;

const SEED: u64 = 0x5ea2_0003;
const CHUNKS: usize = 50;
const QUERIES: usize = 20;
const TOLERANCE: f64 = 1e-6;
const DIMENSION: usize = 64;

const VOCABULARY: [&str; 48] = [
    "availability",
    "latency",
    "throughput",
    "payment",
    "provider",
    "catalog",
    "search",
    "index",
    "order",
    "cart",
    "checkout",
    "customer",
    "email",
    "notification",
    "inventory",
    "stock",
    "replica",
    "failover",
    "cache",
    "queue",
    "broker",
    "gateway",
    "adapter",
    "encryption",
    "token",
    "audit",
    "session",
    "load",
    "balancer",
    "shard",
    "database",
    "schema",
    "tactic",
    "decision",
    "quality",
    "attribute",
    "modifiability",
    "security",
    "timeout",
    "retry",
    "Circuit-Breaker",
    "HTTPS",
    "TLS1.3",
    "p99",
    "SLA",
    "Ünïcode",
    "naïve",
    "café",
];

const ROLES: [Role; 4] = [
    Role::Analyst,
    Role::Modeler,
    Role::Designer,
    Role::Evaluator,
];

struct Doc {
    text: String,
    roles: Vec<Role>,
}

struct Query {
    text: String,
    role: Role,
    k: usize,
}

fn corpus(rng: &mut ChaCha8Rng) -> Vec<Doc> {
    (0..CHUNKS)
        .map(|_| {
            let words: Vec<&str> = (0..rng.random_range(8..60))
                .map(|_| VOCABULARY[rng.random_range(0..VOCABULARY.len())])
                .collect();
            let mut roles: Vec<Role> = ROLES
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.6))
                .collect();
            if roles.is_empty() {
                roles.push(ROLES[rng.random_range(0..ROLES.len())]);
            }
            Doc {
                text: format!("{}.", words.join(" ")),
                roles,
            }
        })
        .collect()
}

fn queries(rng: &mut ChaCha8Rng) -> Vec<Query> {
    (0..QUERIES)
        .map(|i| {
            let words: Vec<String> = (0..rng.random_range(1..8))
                .map(|_| {
                    let w = VOCABULARY[rng.random_range(0..VOCABULARY.len())];
                    if rng.random_bool(0.3) {
                        w.to_uppercase()
                    } else {
                        w.to_string()
                    }
                })
                .collect();
            Query {
                text: words.join(if i % 2 == 0 { " " } else { ", " }),
                role: ROLES[i % ROLES.len()],
                k: rng.random_range(1..=12),
            }
        })
        .collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Token-count histogram over 64 hashed buckets, L2-normalized and stored
/// as f32.
fn embed(text: &str) -> Vec<f32> {
    let mut counts = vec![0f64; DIMENSION];
    let mut token = String::new();
    let mut flush = |token: &mut String| {
        if !token.is_empty() {
            let lower = token.to_lowercase();
            counts[(fnv1a(lower.as_bytes()) % DIMENSION as u64) as usize] += 1.0;
            token.clear();
        }
    };
    for c in text.chars() {
        if c.is_alphanumeric() {
            token.push(c);
        } else {
            flush(&mut token);
        }
    }
    flush(&mut token);
    let norm = counts.iter().map(|x| x * x).sum::<f64>().sqrt();
    counts.iter().map(|x| (x / norm) as f32).collect()
}

fn oracle_search(docs: &[Doc], q: &Query) -> Vec<(String, f64)> {
    let query = embed(&q.text);
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        if !doc.roles.contains(&q.role) {
            continue;
        }
        let v = embed(&doc.text);
        let dot: f64 = query
            .iter()
            .zip(&v)
            .map(|(a, b)| *a as f64 * *b as f64)
            .sum();
        scored.push((i, dot.clamp(0.0, 1.0)));
    }
    // Stable sort keeps ingestion order among equal scores.
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    scored
        .into_iter()
        .take(q.k)
        .map(|(i, s)| (format!("doc{i:04}-000"), s))
        .collect()
}

fn build(docs: &[Doc]) -> KnowledgeIndex {
    let mut kb = KnowledgeIndex::new(Arc::new(HashEmbedder));
    for doc in docs {
        kb.ingest(&doc.text, SourceKind::Literature, &doc.roles)
            .unwrap();
    }
    kb
}

fn results(kb: &KnowledgeIndex, queries: &[Query]) -> Vec<u8> {
    let all: Vec<Vec<(String, f64)>> = queries
        .iter()
        .map(|q| {
            kb.search(&q.text, q.role, q.k)
                .unwrap()
                .into_iter()
                .map(|h| (h.chunk_id, h.score))
                .collect()
        })
        .collect();
    serde_json::to_vec(&all).unwrap()
}

pub fn criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let docs = corpus(&mut rng);
    let queries = queries(&mut rng);

    let first = build(&docs);
    if first.len() != CHUNKS {
        return Outcome::check(false, format!("corpus has {} chunks", first.len()));
    }
    let mut mismatches = Vec::new();
    let mut worst = 0f64;
    let mut compared = 0;
    for (qi, q) in queries.iter().enumerate() {
        let got = first.search(&q.text, q.role, q.k).unwrap();
        let want = oracle_search(&docs, q);
        if got.len() != want.len() {
            mismatches.push(format!(
                "query {qi}: {} hits, oracle {}",
                got.len(),
                want.len()
            ));
            continue;
        }
        for (rank, (hit, (id, score))) in got.iter().zip(&want).enumerate() {
            compared += 1;
            let delta = (hit.score - score).abs();
            worst = worst.max(delta);
            if hit.chunk_id != *id || delta > TOLERANCE {
                mismatches.push(format!(
                    "query {qi} rank {rank}: {} {:.9} vs oracle {id} {score:.9}",
                    hit.chunk_id, hit.score
                ));
            }
        }
    }

    let run_a = results(&first, &queries);
    let run_b = results(&build(&docs), &queries);
    let dir = tempfile::tempdir().unwrap();
    first.save(dir.path()).unwrap();
    let reloaded = KnowledgeIndex::load(dir.path(), Arc::new(HashEmbedder)).unwrap();
    let run_c = results(&reloaded, &queries);
    let identical = run_a == run_b && run_a == run_c;

    let pass = mismatches.is_empty() && identical;
    let mut detail = format!(
        "{compared} ranked hits over {QUERIES} queries match the oracle (max |Δscore| {worst:.1e}); runs byte-identical: {identical}"
    );
    if !mismatches.is_empty() {
        detail = format!(
            "{}; {}",
            mismatches.len(),
            mismatches[..mismatches.len().min(5)].join("; ")
        );
    }
    Outcome::check(pass, detail)
}
