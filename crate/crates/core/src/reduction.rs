//! Power-set models over a class set and their reduction to singleton worlds.
//!
//! A power-set model has one world per (non-empty) subset of the class set `C`,
//! valued by exactly that subset. Its reduction keeps the `|C|` singleton
//! worlds; relations between composite worlds are read back from the reduced
//! relation with [`lift_relation`].

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{AgentId, Atom, ClassLabel, Formula, WorldId};
use crate::kripke::{satisfies, KripkeModel, ModelError, Partition};

/// Largest class set for which [`PowerSetModel::completion`] enumerates subsets.
pub const MAX_COMPLETION_CLASSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("not a power-set model: {0}")]
    NotPowerSet(String),
    #[error("class {0} has no singleton world")]
    MissingSingletonWorld(ClassLabel),
    #[error("unknown class {0}")]
    UnknownClass(ClassLabel),
    #[error("empty class set")]
    EmptySet,
    #[error("class set of {0} is too large to enumerate")]
    TooLarge(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn class_set(atoms: &BTreeSet<Atom>) -> Option<BTreeSet<ClassLabel>> {
    atoms
        .iter()
        .map(|a| (a.component == 0).then(|| a.class.clone()))
        .collect()
}

/// World name for a subset of classes, e.g. `w_c0_c6`.
pub fn subset_world_id(classes: &BTreeSet<ClassLabel>) -> WorldId {
    let mut name = String::from("w");
    for c in classes {
        name.push('_');
        name.push_str(c.as_str());
    }
    WorldId::new(name).expect("labels are identifiers")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSetModel {
    model: KripkeModel,
    classes: BTreeSet<ClassLabel>,
}

impl PowerSetModel {
    /// Validates that every world is valued by a distinct subset of `classes`
    /// using component-0 atoms only.
    pub fn new(model: KripkeModel, classes: BTreeSet<ClassLabel>) -> Result<Self, ReductionError> {
        let mut seen = BTreeSet::new();
        for (i, w) in model.worlds().iter().enumerate() {
            let set = class_set(model.valuation(i))
                .ok_or_else(|| ReductionError::NotPowerSet(format!("world {w} has a non-zero component atom")))?;
            if let Some(c) = set.iter().find(|c| !classes.contains(*c)) {
                return Err(ReductionError::UnknownClass(c.clone()));
            }
            if !seen.insert(set) {
                return Err(ReductionError::NotPowerSet(format!(
                    "world {w} repeats the valuation of another world"
                )));
            }
        }
        Ok(PowerSetModel { model, classes })
    }

    /// Class set taken as the union of all valuations.
    pub fn from_model(model: KripkeModel) -> Result<Self, ReductionError> {
        let classes = (0..model.len())
            .flat_map(|i| model.valuation(i).iter().map(|a| a.class.clone()))
            .collect();
        Self::new(model, classes)
    }

    /// Full model determined by a reduced one: worlds are the non-empty subsets
    /// of `C` (plus the empty one if asked), and two worlds are related by an
    /// agent iff they are equal or their union lies in one reduced block.
    pub fn completion(reduced: &ReducedModel, include_empty: bool) -> Result<Self, ReductionError> {
        let classes: Vec<&ClassLabel> = reduced.classes.iter().collect();
        if classes.len() > MAX_COMPLETION_CLASSES {
            return Err(ReductionError::TooLarge(classes.len()));
        }
        let first = if include_empty { 0u32 } else { 1 };
        let subsets: Vec<BTreeSet<ClassLabel>> = (first..1u32 << classes.len())
            .map(|mask| {
                classes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, c)| (*c).clone())
                    .collect()
            })
            .collect();
        let worlds = subsets.iter().map(subset_world_id).collect();
        let valuation = subsets
            .iter()
            .map(|s| s.iter().map(|c| Atom::class(c.clone())).collect())
            .collect();
        let mut model = KripkeModel::new(worlds, valuation)?;
        for agent in reduced.model.agents() {
            let rel = reduced.model.partition(agent)?;
            // a subset inside one reduced block joins that block; anything
            // else (spanning blocks, or empty) stays on its own
            let keys = subsets.iter().enumerate().map(|(i, s)| {
                let blocks: BTreeSet<usize> = s
                    .iter()
                    .map(|c| rel.block_of(reduced.model.world_index(&reduced.world_of_class[c]).unwrap()))
                    .collect();
                match blocks.len() {
                    1 => (0, *blocks.first().unwrap()),
                    _ => (1, i),
                }
            });
            model = model.with_partition(agent.clone(), Partition::from_keys(keys))?;
        }
        Self::new(model, reduced.classes.clone())
    }

    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    pub fn classes(&self) -> &BTreeSet<ClassLabel> {
        &self.classes
    }

    /// The world valued by exactly `set`, if present.
    pub fn world_for(&self, set: &BTreeSet<ClassLabel>) -> Option<&WorldId> {
        (0..self.model.len())
            .find(|&i| class_set(self.model.valuation(i)).as_ref() == Some(set))
            .map(|i| &self.model.worlds()[i])
    }
}

/// A model with one singleton-valued world per class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedModel {
    model: KripkeModel,
    classes: BTreeSet<ClassLabel>,
    world_of_class: BTreeMap<ClassLabel, WorldId>,
}

impl ReducedModel {
    pub fn new(model: KripkeModel, classes: BTreeSet<ClassLabel>) -> Result<Self, ReductionError> {
        let mut world_of_class = BTreeMap::new();
        for (i, w) in model.worlds().iter().enumerate() {
            let set = class_set(model.valuation(i)).unwrap_or_default();
            if set.len() != 1 || model.valuation(i).len() != 1 {
                return Err(ReductionError::NotPowerSet(format!(
                    "world {w} is not valued by a single class"
                )));
            }
            let c = set.into_iter().next().unwrap();
            if !classes.contains(&c) {
                return Err(ReductionError::UnknownClass(c));
            }
            if world_of_class.insert(c, w.clone()).is_some() {
                return Err(ReductionError::NotPowerSet(format!("world {w} repeats a class")));
            }
        }
        if let Some(c) = classes.iter().find(|c| !world_of_class.contains_key(*c)) {
            return Err(ReductionError::MissingSingletonWorld(c.clone()));
        }
        Ok(ReducedModel {
            model,
            classes,
            world_of_class,
        })
    }

    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    pub fn into_model(self) -> KripkeModel {
        self.model
    }

    pub fn classes(&self) -> &BTreeSet<ClassLabel> {
        &self.classes
    }

    pub fn world_of(&self, class: &ClassLabel) -> Result<&WorldId, ReductionError> {
        self.world_of_class
            .get(class)
            .ok_or_else(|| ReductionError::UnknownClass(class.clone()))
    }

    /// The reduced model viewed as a (trivial) power-set model.
    pub fn as_power_set(&self) -> PowerSetModel {
        PowerSetModel {
            model: self.model.clone(),
            classes: self.classes.clone(),
        }
    }
}

/// Keeps the singleton-valued worlds, restricting relations and valuation.
pub fn reduce(full: &PowerSetModel) -> Result<ReducedModel, ReductionError> {
    let keep: Vec<bool> = (0..full.model.len())
        .map(|i| full.model.valuation(i).len() == 1)
        .collect();
    ReducedModel::new(full.model.restrict(&keep), full.classes.clone())
}

/// Whether the composite worlds valued by `left` and `right` are related by
/// `agent` in the full model: they are the same world, or every singleton
/// world of `left ∪ right` lies in one block of the reduced relation.
pub fn lift_relation(
    reduced: &ReducedModel,
    agent: &AgentId,
    left: &BTreeSet<ClassLabel>,
    right: &BTreeSet<ClassLabel>,
) -> Result<bool, ReductionError> {
    if left.is_empty() || right.is_empty() {
        return Err(ReductionError::EmptySet);
    }
    let rel = reduced.model.partition(agent)?;
    let mut blocks = BTreeSet::new();
    for c in left.union(right) {
        let w = reduced.model.world_index(reduced.world_of(c)?)?;
        blocks.insert(rel.block_of(w));
    }
    Ok(left == right || blocks.len() == 1)
}

/// Compares `M, w ⊨ θ` with the conjunction of `M^r, w_i ⊨ θ` over the
/// singleton worlds `w_i` of the classes valuing `w`; returns whether the two
/// agree.
pub fn reduction_agrees(
    full: &PowerSetModel,
    reduced: &ReducedModel,
    world: &WorldId,
    formula: &Formula,
) -> Result<bool, ReductionError> {
    let in_full = satisfies(&full.model, world, formula)?;
    let mut in_reduced = true;
    for atom in full.model.valuation_of(world)? {
        let w = reduced.world_of(&atom.class)?;
        in_reduced &= satisfies(&reduced.model, w, formula)?;
    }
    Ok(in_full == in_reduced)
}
