//! S5 Kripke models and the satisfaction relation of public announcement logic.
//!
//! Every accessibility relation is stored as a [`Partition`] of the world
//! indices, so reflexivity, symmetry and transitivity hold by construction.
//! Satisfaction is computed as an extension (the set of worlds where a formula
//! holds), bottom-up, which makes announcements and knowledge operators linear
//! in the model size per subformula.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::{AgentId, Atom, Formula, WorldId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown world {0}")]
    UnknownWorld(WorldId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("empty agent set")]
    EmptyAgentSet,
    #[error("duplicate world {0}")]
    DuplicateWorld(WorldId),
    #[error("duplicate agent {0}")]
    DuplicateAgent(AgentId),
    #[error("world {world} appears in more than one block of agent {agent}")]
    OverlappingBlocks { agent: AgentId, world: WorldId },
    #[error("valuation covers {got} worlds, model has {expected}")]
    ValuationLength { expected: usize, got: usize },
}

/// An equivalence relation over `0..len`, kept in canonical form: blocks are
/// numbered in order of their first member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    block_of: Vec<usize>,
    num_blocks: usize,
}

impl Partition {
    /// Builds a partition from arbitrary block keys, one per element.
    pub fn from_keys<K: Eq + std::hash::Hash>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let block_of: Vec<usize> = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        Partition {
            num_blocks: ids.len(),
            block_of,
        }
    }

    pub fn identity(len: usize) -> Self {
        Partition {
            block_of: (0..len).collect(),
            num_blocks: len,
        }
    }

    pub fn single_block(len: usize) -> Self {
        Partition {
            block_of: vec![0; len],
            num_blocks: usize::from(len > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_of(&self, element: usize) -> usize {
        self.block_of[element]
    }

    pub fn related(&self, a: usize, b: usize) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    /// Blocks as sorted element lists, in canonical block order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks];
        for (e, &b) in self.block_of.iter().enumerate() {
            out[b].push(e);
        }
        out
    }

    /// Common refinement: two elements share a block iff they do in both.
    pub fn meet(&self, other: &Partition) -> Partition {
        assert_eq!(self.len(), other.len(), "partitions over different sets");
        Partition::from_keys(self.block_of.iter().zip(&other.block_of))
    }

    /// Restriction to the elements flagged in `keep`, renumbered densely.
    pub fn restrict(&self, keep: &[bool]) -> Partition {
        Partition::from_keys(
            self.block_of
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(b, _)| *b),
        )
    }

    /// The relation as an explicit set of ordered pairs.
    pub fn pairs(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for block in self.blocks() {
            for &a in &block {
                for &b in &block {
                    out.insert((a, b));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    worlds: Vec<WorldId>,
    index: HashMap<WorldId, usize>,
    agents: Vec<(AgentId, Partition)>,
    valuation: Vec<BTreeSet<Atom>>,
}

impl KripkeModel {
    /// A model without agents. `valuation[i]` belongs to `worlds[i]`.
    pub fn new(worlds: Vec<WorldId>, valuation: Vec<BTreeSet<Atom>>) -> Result<Self, ModelError> {
        if worlds.len() != valuation.len() {
            return Err(ModelError::ValuationLength {
                expected: worlds.len(),
                got: valuation.len(),
            });
        }
        let mut index = HashMap::with_capacity(worlds.len());
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        Ok(KripkeModel {
            worlds,
            index,
            agents: Vec::new(),
            valuation,
        })
    }

    /// Adds an agent whose relation has the given blocks; worlds not listed
    /// form singleton blocks.
    pub fn with_agent<B, W>(self, agent: AgentId, blocks: B) -> Result<Self, ModelError>
    where
        B: IntoIterator<Item = W>,
        W: IntoIterator<Item = WorldId>,
    {
        let n = self.worlds.len();
        // listed worlds keyed (0, block), implicit singletons (1, own index)
        let mut keys: Vec<Option<usize>> = vec![None; n];
        for (b, block) in blocks.into_iter().enumerate() {
            for w in block {
                let i = self.world_index(&w)?;
                if keys[i].is_some() {
                    return Err(ModelError::OverlappingBlocks { agent, world: w });
                }
                keys[i] = Some(b);
            }
        }
        let partition = Partition::from_keys(
            keys.iter()
                .enumerate()
                .map(|(i, k)| k.map_or((1, i), |b| (0, b))),
        );
        self.with_partition(agent, partition)
    }

    pub fn with_partition(mut self, agent: AgentId, partition: Partition) -> Result<Self, ModelError> {
        assert_eq!(partition.len(), self.worlds.len(), "partition size mismatch");
        if self.agents.iter().any(|(a, _)| *a == agent) {
            return Err(ModelError::DuplicateAgent(agent));
        }
        self.agents.push((agent, partition));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn world_index(&self, world: &WorldId) -> Result<usize, ModelError> {
        self.index
            .get(world)
            .copied()
            .ok_or_else(|| ModelError::UnknownWorld(world.clone()))
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentId> {
        self.agents.iter().map(|(a, _)| a)
    }

    pub fn partition(&self, agent: &AgentId) -> Result<&Partition, ModelError> {
        self.agents
            .iter()
            .find(|(a, _)| a == agent)
            .map(|(_, p)| p)
            .ok_or_else(|| ModelError::UnknownAgent(agent.clone()))
    }

    pub fn valuation(&self, world: usize) -> &BTreeSet<Atom> {
        &self.valuation[world]
    }

    pub fn valuation_of(&self, world: &WorldId) -> Result<&BTreeSet<Atom>, ModelError> {
        Ok(&self.valuation[self.world_index(world)?])
    }

    /// Blocks of an agent's relation, as world ids.
    pub fn blocks(&self, agent: &AgentId) -> Result<Vec<Vec<&WorldId>>, ModelError> {
        Ok(self
            .partition(agent)?
            .blocks()
            .into_iter()
            .map(|b| b.into_iter().map(|i| &self.worlds[i]).collect())
            .collect())
    }

    pub fn related(&self, agent: &AgentId, a: &WorldId, b: &WorldId) -> Result<bool, ModelError> {
        let p = self.partition(agent)?;
        Ok(p.related(self.world_index(a)?, self.world_index(b)?))
    }

    /// Sub-model on the flagged worlds, with relations and valuation restricted.
    pub fn restrict(&self, keep: &[bool]) -> KripkeModel {
        assert_eq!(keep.len(), self.len());
        let worlds: Vec<WorldId> = self
            .worlds
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(w, _)| w.clone())
            .collect();
        let index = worlds.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        KripkeModel {
            worlds,
            index,
            agents: self
                .agents
                .iter()
                .map(|(a, p)| (a.clone(), p.restrict(keep)))
                .collect(),
            valuation: self
                .valuation
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(v, _)| v.clone())
                .collect(),
        }
    }

    fn check_agents(&self, formula: &Formula) -> Result<(), ModelError> {
        check_agent_sets(formula)?;
        for agent in formula.agents() {
            self.partition(agent)?;
        }
        Ok(())
    }

    /// The worlds at which `formula` holds, as a flag per world index.
    pub fn extension(&self, formula: &Formula) -> Result<Vec<bool>, ModelError> {
        self.check_agents(formula)?;
        Ok(self.eval(formula))
    }

    fn eval(&self, formula: &Formula) -> Vec<bool> {
        let n = self.len();
        match formula {
            Formula::Top => vec![true; n],
            Formula::Atom(atom) => self.valuation.iter().map(|v| v.contains(atom)).collect(),
            Formula::Not(f) => self.eval(f).into_iter().map(|b| !b).collect(),
            Formula::And(a, b) => zip_with(self.eval(a), self.eval(b), |x, y| x && y),
            Formula::Or(a, b) => zip_with(self.eval(a), self.eval(b), |x, y| x || y),
            Formula::Know(agent, f) => box_over(self.agent_partition(agent), &self.eval(f)),
            Formula::Consistent(agent, f) => {
                let not_f: Vec<bool> = self.eval(f).into_iter().map(|b| !b).collect();
                box_over(self.agent_partition(agent), &not_f)
                    .into_iter()
                    .map(|b| !b)
                    .collect()
            }
            Formula::Dist(agents, f) => {
                let relation = self.meet_unchecked(agents);
                box_over(&relation, &self.eval(f))
            }
            Formula::Every(agents, f) => {
                let inner = self.eval(f);
                agents.iter().fold(vec![true; n], |acc, agent| {
                    zip_with(acc, box_over(self.agent_partition(agent), &inner), |x, y| x && y)
                })
            }
            Formula::Announce(psi, phi) => {
                let survivors = self.eval(psi);
                let updated = self.restrict(&survivors);
                let mut inner = updated.eval(phi).into_iter();
                survivors
                    .iter()
                    .map(|&alive| if alive { inner.next().unwrap() } else { true })
                    .collect()
            }
        }
    }

    fn agent_partition(&self, agent: &AgentId) -> &Partition {
        // agents are validated before evaluation starts and restriction keeps
        // the agent list intact
        self.partition(agent).expect("agent validated")
    }

    fn meet_unchecked(&self, agents: &BTreeSet<AgentId>) -> Partition {
        agents
            .iter()
            .map(|a| self.agent_partition(a).clone())
            .reduce(|acc, p| acc.meet(&p))
            .expect("agent set validated non-empty")
    }
}

fn check_agent_sets(formula: &Formula) -> Result<(), ModelError> {
    match formula {
        Formula::Top | Formula::Atom(_) => Ok(()),
        Formula::Dist(set, f) | Formula::Every(set, f) => {
            if set.is_empty() {
                return Err(ModelError::EmptyAgentSet);
            }
            check_agent_sets(f)
        }
        Formula::Not(f) | Formula::Know(_, f) | Formula::Consistent(_, f) => check_agent_sets(f),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Announce(a, b) => {
            check_agent_sets(a)?;
            check_agent_sets(b)
        }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Necessity over a partition: true at w iff `inner` holds on w's whole block.
fn box_over(relation: &Partition, inner: &[bool]) -> Vec<bool> {
    let mut block_ok = vec![true; relation.num_blocks()];
    for (w, &holds) in inner.iter().enumerate() {
        if !holds {
            block_ok[relation.block_of(w)] = false;
        }
    }
    (0..inner.len()).map(|w| block_ok[relation.block_of(w)]).collect()
}

/// `M, w ⊨ φ`.
pub fn satisfies(model: &KripkeModel, world: &WorldId, formula: &Formula) -> Result<bool, ModelError> {
    let w = model.world_index(world)?;
    Ok(model.extension(formula)?[w])
}

/// The updated model `M^ψ`: only worlds satisfying `psi` remain.
pub fn announce(model: &KripkeModel, psi: &Formula) -> Result<KripkeModel, ModelError> {
    let survivors = model.extension(psi)?;
    Ok(model.restrict(&survivors))
}

/// The intersection of the agents' relations (the distributed-knowledge relation).
pub fn distributed_relation(
    model: &KripkeModel,
    agents: &BTreeSet<AgentId>,
) -> Result<Partition, ModelError> {
    if agents.is_empty() {
        return Err(ModelError::EmptyAgentSet);
    }
    for a in agents {
        model.partition(a)?;
    }
    Ok(model.meet_unchecked(agents))
}
