//! Joint model of several classifier systems.
//!
//! Worlds are tuples of component worlds. An agent of component `k` cannot
//! tell two tuples apart when they agree on every other coordinate and the
//! agent's own relation links their `k`-th coordinates. Atoms of component
//! `k` are re-indexed so that each component owns a disjoint index range.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::formula::{Atom, ClassLabel, WorldId};
use crate::kripke::{KripkeModel, ModelError, Partition};

pub const DEFAULT_WORLD_CAP: usize = 1_000_000;

/// Joins component world names, `w3` and `w0` giving `w3_w0`.
pub const WORLD_SEPARATOR: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error("a product needs at least two models, got {0}")]
    TooFewModels(usize),
    #[error("agent {0} appears in more than one component")]
    DuplicateAgentName(crate::formula::AgentId),
    #[error("component model {0} has no worlds")]
    EmptyComponentModel(usize),
    #[error("product would have {worlds} worlds, above the cap of {cap}")]
    TooManyWorlds { worlds: u128, cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductModel {
    model: KripkeModel,
    offsets: Vec<u32>,
    component_classes: Vec<BTreeSet<ClassLabel>>,
}

impl ProductModel {
    pub fn model(&self) -> &KripkeModel {
        &self.model
    }

    pub fn into_model(self) -> KripkeModel {
        self.model
    }

    /// Number of atom components across all factors.
    pub fn components(&self) -> usize {
        self.component_classes.len()
    }

    /// Component index assigned to the first atom component of each factor.
    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    pub fn component_classes(&self) -> &[BTreeSet<ClassLabel>] {
        &self.component_classes
    }
}

fn component_count(model: &KripkeModel) -> u32 {
    (0..model.len())
        .flat_map(|i| model.valuation(i).iter().map(|a| a.component + 1))
        .max()
        .unwrap_or(1)
}

pub fn product(models: &[KripkeModel]) -> Result<ProductModel, ProductError> {
    product_with_cap(models, DEFAULT_WORLD_CAP)
}

pub fn product_with_cap(models: &[KripkeModel], cap: usize) -> Result<ProductModel, ProductError> {
    if models.len() < 2 {
        return Err(ProductError::TooFewModels(models.len()));
    }
    let mut agents = HashSet::new();
    for (k, m) in models.iter().enumerate() {
        if m.is_empty() {
            return Err(ProductError::EmptyComponentModel(k));
        }
        for a in m.agents() {
            if !agents.insert(a.clone()) {
                return Err(ProductError::DuplicateAgentName(a.clone()));
            }
        }
    }
    let total = models.iter().map(|m| m.len() as u128).product::<u128>();
    if total > cap as u128 {
        return Err(ProductError::TooManyWorlds { worlds: total, cap });
    }
    let total = total as usize;

    let mut offsets = Vec::with_capacity(models.len());
    let mut component_classes = Vec::new();
    for m in models {
        let offset = component_classes.len() as u32;
        offsets.push(offset);
        let count = component_count(m);
        let mut classes = vec![BTreeSet::new(); count as usize];
        for i in 0..m.len() {
            for a in m.valuation(i) {
                classes[a.component as usize].insert(a.class.clone());
            }
        }
        component_classes.extend(classes);
    }

    // strides for mixed-radix tuple indices, first factor most significant
    let mut strides = vec![1usize; models.len()];
    for k in (0..models.len() - 1).rev() {
        strides[k] = strides[k + 1] * models[k + 1].len();
    }
    let coord = |t: usize, k: usize| (t / strides[k]) % models[k].len();

    let mut worlds = Vec::with_capacity(total);
    let mut valuation = Vec::with_capacity(total);
    for t in 0..total {
        let mut name = String::new();
        let mut atoms = BTreeSet::new();
        for (k, m) in models.iter().enumerate() {
            let w = coord(t, k);
            if k > 0 {
                name.push_str(WORLD_SEPARATOR);
            }
            name.push_str(m.worlds()[w].as_str());
            atoms.extend(
                m.valuation(w)
                    .iter()
                    .map(|a| Atom::new(a.component + offsets[k], a.class.clone())),
            );
        }
        worlds.push(WorldId::new(name).expect("joined identifiers"));
        valuation.push(atoms);
    }

    let mut joint = KripkeModel::new(worlds, valuation)?;
    for (k, m) in models.iter().enumerate() {
        for agent in m.agents() {
            let rel = m.partition(agent)?;
            let keys = (0..total).map(|t| {
                let c = coord(t, k);
                (rel.block_of(c), t - c * strides[k])
            });
            joint = joint.with_partition(agent.clone(), Partition::from_keys(keys))?;
        }
    }
    Ok(ProductModel {
        model: joint,
        offsets,
        component_classes,
    })
}
