#![allow(dead_code)]

use std::collections::HashMap;

use memcluster::gateway::{
    CallContext, ChatClient, Completion, GatewayError, OracleScript, ScriptedOracle,
};
use memcluster::metrics::LabelVectorPair;
use memcluster::model::Document;

/// n documents round-robined over k gold classes named class_0..class_{k-1}.
pub fn synthetic_corpus(n: usize, k: usize) -> Vec<Document> {
    (0..n)
        .map(|i| {
            let class = format!("class_{}", i % k);
            Document::new(format!("{i:06}"), format!("document {i} about {class}"))
                .unwrap()
                .with_gold(class)
        })
        .collect()
}

pub fn script_for(corpus: &[Document]) -> OracleScript {
    let labeler: HashMap<String, String> = corpus
        .iter()
        .map(|d| (d.id.clone(), d.gold_label.clone().expect("gold label")))
        .collect();
    OracleScript::perfect(labeler)
}

pub fn oracle_for(corpus: &[Document]) -> ScriptedOracle {
    ScriptedOracle::new(script_for(corpus)).unwrap()
}

/// Counts primary completions, for call-budget assertions.
pub struct CountingClient<C> {
    pub inner: C,
    pub calls: usize,
}

impl<C: ChatClient> CountingClient<C> {
    pub fn new(inner: C) -> Self {
        Self { inner, calls: 0 }
    }
}

impl<C: ChatClient> ChatClient for CountingClient<C> {
    fn complete(
        &mut self,
        system_text: &str,
        user_text: &str,
        ctx: &CallContext,
    ) -> Result<Completion, GatewayError> {
        self.calls += 1;
        self.inner.complete(system_text, user_text, ctx)
    }
}

/// Simulates a transport outage after a fixed number of successful calls.
pub struct FailAfter<C> {
    pub inner: C,
    pub remaining: usize,
}

impl<C: ChatClient> ChatClient for FailAfter<C> {
    fn complete(
        &mut self,
        system_text: &str,
        user_text: &str,
        ctx: &CallContext,
    ) -> Result<Completion, GatewayError> {
        if self.remaining == 0 {
            return Err(GatewayError::Transport("simulated outage".into()));
        }
        self.remaining -= 1;
        self.inner.complete(system_text, user_text, ctx)
    }
}

// Independent brute-force metric oracles. These never touch the library's
// contingency/assignment code paths.

/// Best match count over all injective mappings of predicted clusters onto
/// the (padded) class set, by exhaustive permutation.
pub fn acc_oracle(pair: &LabelVectorPair) -> f64 {
    let kp = pair.k_pred();
    let kt = pair.k_true();
    let dim = kp.max(kt);
    let mut counts = vec![vec![0u64; kt]; kp];
    for (&p, &t) in pair.predicted.iter().zip(&pair.truth) {
        counts[p][t] += 1;
    }
    let mut best = 0u64;
    let mut classes: Vec<usize> = (0..dim).collect();
    permute(&mut classes, 0, &mut |perm| {
        let score: u64 = (0..kp).map(|i| if perm[i] < kt { counts[i][perm[i]] } else { 0 }).sum();
        best = best.max(score);
    });
    best as f64 / pair.len() as f64
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Adjusted Rand index by explicit enumeration of all C(n,2) sample pairs.
pub fn ari_oracle(pair: &LabelVectorPair) -> f64 {
    let n = pair.len();
    let (mut same_both, mut same_pred, mut same_truth) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in (i + 1)..n {
            let sp = pair.predicted[i] == pair.predicted[j];
            let st = pair.truth[i] == pair.truth[j];
            if sp {
                same_pred += 1.0;
            }
            if st {
                same_truth += 1.0;
            }
            if sp && st {
                same_both += 1.0;
            }
        }
    }
    let total = (n * (n - 1) / 2) as f64;
    let expected = same_pred * same_truth / total;
    let max = (same_pred + same_truth) / 2.0;
    if (max - expected).abs() < f64::EPSILON {
        let identical = (0..n).all(|i| {
            (0..n).all(|j| {
                (pair.predicted[i] == pair.predicted[j]) == (pair.truth[i] == pair.truth[j])
            })
        });
        return if identical { 1.0 } else { 0.0 };
    }
    (same_both - expected) / (max - expected)
}
