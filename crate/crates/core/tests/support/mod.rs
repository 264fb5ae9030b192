//! Helpers shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod interleave;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dobby_core::backend::{BackendError, ChatBackend};
use dobby_core::chat::{ChatMessage, FunctionDef};
use dobby_core::grounding::{Embedding, EmbeddingError, EmbeddingProvider};
use dobby_core::world::{apply, check_plan, is_applicable, ActionSpec, BehaviorId, WorldState};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const ATOM_POOL: [&str; 8] = ["at:a", "at:b", "at:c", "f:0", "f:1", "f:2", "f:3", "f:4"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub initial: WorldState,
    pub actions: Vec<ActionSpec>,
}

/// At most 8 atoms and 6 actions. Duplicated actions appear now and then.
pub fn random_domain<R: Rng>(rng: &mut R) -> Domain {
    let n_atoms = rng.gen_range(1..=ATOM_POOL.len());
    let mut pool: Vec<&str> = ATOM_POOL.to_vec();
    pool.shuffle(rng);
    pool.truncate(n_atoms);
    let initial = WorldState::from_atoms(pool.iter().filter(|_| rng.gen_bool(0.4)).copied()).unwrap();

    let n_actions = rng.gen_range(1..=6);
    let mut actions: Vec<ActionSpec> = Vec::with_capacity(n_actions);
    for i in 0..n_actions {
        if i > 0 && rng.gen_bool(0.1) {
            let dup = actions[rng.gen_range(0..i)].clone();
            actions.push(dup);
            continue;
        }
        let mut b = ActionSpec::builder(&format!("A{i}"), BehaviorId::new(format!("b:{i}")));
        let mut adds = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            b = b.requires(pool.choose(rng).unwrap());
        }
        if rng.gen_bool(0.3) {
            b = b.requires_not(pool.choose(rng).unwrap());
        }
        for _ in 0..rng.gen_range(0..=2) {
            let a = *pool.choose(rng).unwrap();
            adds.push(a);
            b = b.adds(a);
        }
        for _ in 0..rng.gen_range(0..=2) {
            if rng.gen_bool(0.2) {
                b = b.deletes("at:*");
            } else {
                let d = *pool.choose(rng).unwrap();
                if !adds.contains(&d) {
                    b = b.deletes(d);
                }
            }
        }
        actions.push(b.build().unwrap());
    }
    Domain { initial, actions }
}

/// Outcome of the reference transcription.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Plan(Vec<ActionSpec>),
    NotCapable,
}

/// The greedy procedure written out step by step: while items remain, take
/// the first valid option, append it, update the environment, remove it.
pub fn reference_reorder(initial: &WorldState, sequence: &[ActionSpec]) -> Reference {
    let mut sequence: Vec<ActionSpec> = sequence.to_vec();
    let mut environment = initial.clone();
    let mut plan = Vec::new();
    while !sequence.is_empty() {
        let mut next_action = None;
        for (i, option) in sequence.iter().enumerate() {
            if is_applicable(&environment, option) {
                next_action = Some(i);
                break;
            }
        }
        let Some(i) = next_action else {
            return Reference::NotCapable;
        };
        let action = sequence.remove(i);
        environment = apply(&environment, &action).unwrap();
        plan.push(action);
    }
    Reference::Plan(plan)
}

/// Any valid ordering, found by trying every permutation.
pub fn brute_force_order(initial: &WorldState, actions: &[ActionSpec]) -> Option<Vec<usize>> {
    fn go(
        state: &WorldState,
        actions: &[ActionSpec],
        used: &mut Vec<bool>,
        order: &mut Vec<usize>,
    ) -> bool {
        if order.len() == actions.len() {
            return true;
        }
        for i in 0..actions.len() {
            if used[i] || !is_applicable(state, &actions[i]) {
                continue;
            }
            let next = apply(state, &actions[i]).unwrap();
            used[i] = true;
            order.push(i);
            if go(&next, actions, used, order) {
                return true;
            }
            order.pop();
            used[i] = false;
        }
        false
    }
    let mut used = vec![false; actions.len()];
    let mut order = Vec::new();
    go(initial, actions, &mut used, &mut order).then(|| {
        debug_assert!(check_plan(initial, order.iter().map(|&i| &actions[i])).is_valid());
        order
    })
}

/// Multiset of titles, for permutation checks.
pub fn title_counts(actions: &[ActionSpec]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for a in actions {
        *m.entry(a.title().to_string()).or_default() += 1;
    }
    m
}

/// Wraps a provider and counts calls to `embed`.
pub struct CountingEmbedder<P> {
    pub inner: P,
    pub calls: AtomicUsize,
}

impl<P> CountingEmbedder<P> {
    pub fn new(inner: P) -> Arc<Self> {
        Arc::new(CountingEmbedder {
            inner,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CountingEmbedder<P> {
    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.embed(text)
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
}

/// Chat backend that must never be called.
#[derive(Default)]
pub struct CountingBackend {
    pub calls: AtomicUsize,
}

impl ChatBackend for CountingBackend {
    fn complete(&self, _: &[ChatMessage], _: &[FunctionDef]) -> Result<ChatMessage, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(BackendError::Unavailable("counting backend".into()))
    }
}

pub fn workspace_root() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .unwrap()
        .to_path_buf()
}

/// The lab described by `fixtures/lab`.
pub fn fixture_lab() -> dobby_core::sim::Lab {
    let dir = workspace_root().join("fixtures/lab");
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).unwrap();
    dobby_core::sim::Lab::parse(&read("destinations.txt"), &read("items.txt"), &read("topics.txt"), None).unwrap()
}

pub fn actions(lab: &dobby_core::sim::Lab, titles: &[&str]) -> Vec<ActionSpec> {
    let reg = lab.registry().unwrap();
    titles.iter().map(|t| reg.get(t).unwrap().clone()).collect()
}
