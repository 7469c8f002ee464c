//! Independent oracles and seeded generators shared by the integration tests.
//!
//! Nothing here uses `Partition`: relations are explicit pair sets and the
//! evaluator follows the satisfaction clauses directly.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use masks_core::formula::{AgentId, Atom, ClassLabel, Formula, WorldId};
use masks_core::kripke::{KripkeModel, Partition};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Pairs = BTreeSet<(usize, usize)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A model as plain data: explicit relation pairs per agent.
#[derive(Debug, Clone)]
pub struct BruteModel {
    pub worlds: usize,
    pub relations: BTreeMap<String, Pairs>,
    pub valuation: Vec<BTreeSet<(u32, String)>>,
}

impl BruteModel {
    pub fn holds_atom(&self, w: usize, a: &Atom) -> bool {
        self.valuation[w].contains(&(a.component, a.class.as_str().to_string()))
    }
}

fn subset_of(alive: &[bool]) -> impl Iterator<Item = usize> + '_ {
    alive.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i)
}

/// Satisfaction at `w` in the submodel of `alive` worlds.
pub fn brute_eval(m: &BruteModel, alive: &[bool], w: usize, f: &Formula) -> bool {
    match f {
        Formula::Top => true,
        Formula::Atom(a) => m.holds_atom(w, a),
        Formula::Not(g) => !brute_eval(m, alive, w, g),
        Formula::And(a, b) => brute_eval(m, alive, w, a) && brute_eval(m, alive, w, b),
        Formula::Or(a, b) => brute_eval(m, alive, w, a) || brute_eval(m, alive, w, b),
        Formula::Know(j, g) => {
            let r = &m.relations[j.as_str()];
            subset_of(alive).all(|v| !r.contains(&(w, v)) || brute_eval(m, alive, v, g))
        }
        Formula::Consistent(j, g) => {
            let r = &m.relations[j.as_str()];
            subset_of(alive).any(|v| r.contains(&(w, v)) && brute_eval(m, alive, v, g))
        }
        Formula::Dist(agents, g) => subset_of(alive).all(|v| {
            let related = agents.iter().all(|j| m.relations[j.as_str()].contains(&(w, v)));
            !related || brute_eval(m, alive, v, g)
        }),
        Formula::Every(agents, g) => agents.iter().all(|j| {
            let r = &m.relations[j.as_str()];
            subset_of(alive).all(|v| !r.contains(&(w, v)) || brute_eval(m, alive, v, g))
        }),
        Formula::Announce(psi, phi) => {
            if !brute_eval(m, alive, w, psi) {
                return true;
            }
            let next: Vec<bool> = (0..m.worlds)
                .map(|v| alive[v] && brute_eval(m, alive, v, psi))
                .collect();
            brute_eval(m, &next, w, phi)
        }
    }
}

pub fn brute_satisfies(m: &BruteModel, w: usize, f: &Formula) -> bool {
    brute_eval(m, &vec![true; m.worlds], w, f)
}

pub fn is_equivalence(pairs: &Pairs, n: usize) -> bool {
    let reflexive = (0..n).all(|i| pairs.contains(&(i, i)));
    let symmetric = pairs.iter().all(|&(a, b)| pairs.contains(&(b, a)));
    let transitive = pairs
        .iter()
        .all(|&(a, b)| pairs.iter().filter(|&&(c, _)| c == b).all(|&(_, d)| pairs.contains(&(a, d))));
    reflexive && symmetric && transitive
}

pub fn pairs_from_labels(labels: &[usize]) -> Pairs {
    let n = labels.len();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| labels[i] == labels[j])
        .collect()
}

/// Pair set of an agent in a library model, by pairwise `related` queries.
pub fn model_pairs(model: &KripkeModel, agent: &AgentId) -> Pairs {
    let ws = model.worlds();
    let mut out = Pairs::new();
    for (i, a) in ws.iter().enumerate() {
        for (j, b) in ws.iter().enumerate() {
            if model.related(agent, a, b).unwrap() {
                out.insert((i, j));
            }
        }
    }
    out
}

pub const AGENTS: [&str; 3] = ["A", "B", "C"];
pub const ATOMS: [(u32, &str); 4] = [(0, "c0"), (0, "c1"), (0, "c2"), (1, "c0")];

/// A random model with 1..=max_worlds worlds and 1..=3 agents, in both
/// representations.
pub fn random_model(r: &mut impl Rng, max_worlds: usize) -> (KripkeModel, BruteModel) {
    let n = r.gen_range(1..=max_worlds);
    let n_agents = r.gen_range(1..=AGENTS.len());
    let worlds: Vec<WorldId> = (0..n).map(|i| WorldId::new(format!("w{i}")).unwrap()).collect();
    let valuation: Vec<BTreeSet<(u32, String)>> = (0..n)
        .map(|_| {
            ATOMS
                .iter()
                .filter(|_| r.gen_bool(0.4))
                .map(|&(c, l)| (c, l.to_string()))
                .collect()
        })
        .collect();
    let atoms = valuation
        .iter()
        .map(|v| v.iter().map(|(c, l)| Atom::new(*c, ClassLabel::new(l.clone()).unwrap())).collect())
        .collect();
    let mut model = KripkeModel::new(worlds, atoms).unwrap();
    let mut relations = BTreeMap::new();
    for agent in &AGENTS[..n_agents] {
        let labels: Vec<usize> = (0..n).map(|_| r.gen_range(0..n)).collect();
        model = model
            .with_partition(AgentId::new(*agent).unwrap(), Partition::from_keys(labels.iter().copied()))
            .unwrap();
        relations.insert(agent.to_string(), pairs_from_labels(&labels));
    }
    (
        model,
        BruteModel {
            worlds: n,
            relations,
            valuation,
        },
    )
}

fn random_group(r: &mut impl Rng, agents: &[&str]) -> BTreeSet<AgentId> {
    loop {
        let g: BTreeSet<AgentId> = agents
            .iter()
            .filter(|_| r.gen_bool(0.5))
            .map(|a| AgentId::new(*a).unwrap())
            .collect();
        if !g.is_empty() {
            return g;
        }
    }
}

/// A random formula of depth at most `depth` over `agents` and `classes`
/// (component 0, plus component 1 when `components > 1`).
pub fn random_formula(r: &mut impl Rng, depth: usize, agents: &[&str], classes: &[&str], components: u32) -> Formula {
    if depth == 0 || r.gen_bool(0.2) {
        return if r.gen_bool(0.1) {
            Formula::Top
        } else {
            let class = ClassLabel::new(classes[r.gen_range(0..classes.len())]).unwrap();
            Formula::atom(Atom::new(r.gen_range(0..components), class))
        };
    }
    let d = depth - 1;
    let sub = |r: &mut _| random_formula(r, d, agents, classes, components);
    let agent = |r: &mut dyn rand::RngCore| AgentId::new(agents[r.gen_range(0..agents.len())]).unwrap();
    match r.gen_range(0..8) {
        0 => Formula::not(sub(r)),
        1 => Formula::and(sub(r), sub(r)),
        2 => Formula::or(sub(r), sub(r)),
        3 => Formula::Know(agent(r), Box::new(sub(r))),
        4 => Formula::Consistent(agent(r), Box::new(sub(r))),
        5 => Formula::Dist(random_group(r, agents), Box::new(sub(r))),
        6 => Formula::Every(random_group(r, agents), Box::new(sub(r))),
        _ => Formula::announce(sub(r), sub(r)),
    }
}

/// A random formula without modal operators or announcements.
pub fn random_propositional(r: &mut impl Rng, depth: usize, classes: &[&str]) -> Formula {
    if depth == 0 || r.gen_bool(0.3) {
        return Formula::class(classes[r.gen_range(0..classes.len())]);
    }
    let d = depth - 1;
    match r.gen_range(0..3) {
        0 => Formula::not(random_propositional(r, d, classes)),
        1 => Formula::and(random_propositional(r, d, classes), random_propositional(r, d, classes)),
        _ => Formula::or(random_propositional(r, d, classes), random_propositional(r, d, classes)),
    }
}

/// Agents of a library model as `&str`.
pub fn agent_names(model: &KripkeModel) -> Vec<&str> {
    model.agents().map(AgentId::as_str).collect()
}

/// A union-closed power-set model built from scratch: worlds are the
/// non-empty subsets of `classes` (bit masks, in increasing order), and
/// `S ~ T` for an agent iff `S == T` or every class of `S ∪ T` has the same
/// block label. Returns the model and each agent's pair set over mask order.
pub fn brute_power_set(classes: &[&str], agents: &[(&str, Vec<usize>)]) -> (KripkeModel, BTreeMap<String, Pairs>) {
    let k = classes.len();
    let masks: Vec<u32> = (1..1u32 << k).collect();
    let members = |m: u32| (0..k).filter(move |i| m & (1 << i) != 0);
    let worlds = masks
        .iter()
        .map(|&m| {
            let name: Vec<&str> = members(m).map(|i| classes[i]).collect();
            WorldId::new(format!("w_{}", name.join("_"))).unwrap()
        })
        .collect();
    let valuation = masks
        .iter()
        .map(|&m| members(m).map(|i| Atom::class(classes[i])).collect())
        .collect();
    let mut model = KripkeModel::new(worlds, valuation).unwrap();
    let mut relations = BTreeMap::new();
    for (agent, block_of) in agents {
        let mut pairs = Pairs::new();
        for (i, &a) in masks.iter().enumerate() {
            for (j, &b) in masks.iter().enumerate() {
                let labels: BTreeSet<usize> = members(a | b).map(|c| block_of[c]).collect();
                if a == b || labels.len() == 1 {
                    pairs.insert((i, j));
                }
            }
        }
        // block key of a world = smallest related index
        let keys = (0..masks.len()).map(|i| pairs.iter().find(|&&(x, _)| x == i).map(|&(_, y)| y).unwrap());
        model = model
            .with_partition(AgentId::new(*agent).unwrap(), Partition::from_keys(keys))
            .unwrap();
        relations.insert(agent.to_string(), pairs);
    }
    (model, relations)
}

pub const CLASS_POOL: [&str; 4] = ["c0", "c1", "c2", "c3"];

/// Random class count in 1..=4 and 1..=3 agents with random block labels.
pub fn random_power_set_spec(r: &mut impl Rng) -> (Vec<&'static str>, Vec<(&'static str, Vec<usize>)>) {
    let k = r.gen_range(1..=CLASS_POOL.len());
    let classes = CLASS_POOL[..k].to_vec();
    let n_agents = r.gen_range(1..=AGENTS.len());
    let agents = AGENTS[..n_agents]
        .iter()
        .map(|&a| (a, (0..k).map(|_| r.gen_range(0..k)).collect()))
        .collect();
    (classes, agents)
}

pub fn labels(ls: &[&str]) -> BTreeSet<ClassLabel> {
    ls.iter().map(|&l| ClassLabel::new(l).unwrap()).collect()
}

fn ident() -> impl Strategy<Value = String> {
    prop_oneof![
        8 => "[a-z][a-z0-9_]{0,3}",
        1 => "[0-9]{1,3}",
        1 => prop::sample::select(vec!["T", "F", "K", "D", "E", "KD", "_x"]).prop_map(String::from),
    ]
}

fn agent_strategy() -> impl Strategy<Value = AgentId> {
    "[A-Z][A-Za-z0-9_]{0,2}".prop_map(|s| AgentId::new(s).unwrap())
}

fn group() -> impl Strategy<Value = BTreeSet<AgentId>> {
    prop::collection::btree_set(agent_strategy(), 1..4)
}

/// Arbitrary formulas of depth at most about `depth`.
pub fn formula_strategy(depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => Just(Formula::Top),
        6 => (0u32..3, ident()).prop_map(|(c, l)| Formula::atom(Atom::new(c, ClassLabel::new(l).unwrap()))),
    ];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (agent_strategy(), inner.clone()).prop_map(|(j, f)| Formula::Know(j, Box::new(f))),
            (agent_strategy(), inner.clone()).prop_map(|(j, f)| Formula::Consistent(j, Box::new(f))),
            (group(), inner.clone()).prop_map(|(g, f)| Formula::Dist(g, Box::new(f))),
            (group(), inner.clone()).prop_map(|(g, f)| Formula::Every(g, Box::new(f))),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::announce(a, b)),
        ]
    })
}

/// Knowledge sets for up to 5 agents over a class set of at most 6.
pub fn random_ensemble(r: &mut impl Rng) -> (BTreeSet<ClassLabel>, Vec<BTreeSet<ClassLabel>>) {
    let k = r.gen_range(1..=6);
    let classes: Vec<ClassLabel> = (0..k).map(|i| ClassLabel::new(format!("c{i}")).unwrap()).collect();
    let n = r.gen_range(1..=5);
    let sets = (0..n)
        .map(|_| loop {
            let s: BTreeSet<ClassLabel> = classes.iter().filter(|_| r.gen_bool(0.6)).cloned().collect();
            if !s.is_empty() {
                break s;
            }
        })
        .collect();
    (classes.into_iter().collect(), sets)
}

/// The seeded synthetic ensemble: `n` half-plane mocks with independent flip
/// bands.
pub fn halfplane_mocks(n: usize) -> Vec<masks_core::classifier::MockClassifier> {
    (0..n as u64)
        .map(|i| masks_core::classifier::MockClassifier::HalfplaneNoise {
            seed: 1000 + i,
            band_width: 0.25,
        })
        .collect()
}

pub fn halfplane_spec() -> masks_core::knowledge::PerturbationSpec {
    masks_core::knowledge::PerturbationSpec::epsilon(0.05, masks_core::knowledge::Metric::Linf, 2)
}
