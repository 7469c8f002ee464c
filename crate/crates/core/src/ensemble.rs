//! Aggregating the knowledge of an ensemble of classifiers.
//!
//! [`maska`] intersects the knowledge sets of all classifiers. [`masks`] does
//! the same and, when several candidates remain, builds the epistemic model of
//! the ensemble and applies external knowledge to it as public announcements.
//! The intersection computed by `maska` is exactly the set of worlds that
//! survive announcing every agent's candidate disjunction in that model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::classifier::Classifier;
use crate::formula::{AgentId, Atom, ClassLabel, Formula, WorldId};
use crate::knowledge::{ckc_with, InputPoint, KnowledgeError, KnowledgeSet, PerturbationSpec};
use crate::kripke::{announce, KripkeModel, ModelError};
use crate::par::Execution;
use crate::reduction::{ReducedModel, ReductionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnsembleError {
    #[error("the ensemble has no classifiers")]
    EmptyEnsemble,
    #[error("classifier {classifier}: {source}")]
    Knowledge {
        classifier: usize,
        #[source]
        source: KnowledgeError,
    },
    #[error("agent {0} has an empty knowledge set")]
    EmptyKnowledgeSet(AgentId),
    #[error("class {0} is not in the class set")]
    UnknownClass(ClassLabel),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerificationOutcome {
    Verified(ClassLabel),
    /// Two or more classes remain possible.
    Candidates(BTreeSet<ClassLabel>),
    Inconsistent,
}

impl VerificationOutcome {
    pub fn from_set(set: &BTreeSet<ClassLabel>) -> Self {
        match set.len() {
            0 => VerificationOutcome::Inconsistent,
            1 => VerificationOutcome::Verified(set.first().unwrap().clone()),
            _ => VerificationOutcome::Candidates(set.clone()),
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, VerificationOutcome::Verified(_))
    }

    /// The (verified flag, surviving classes) pair.
    pub fn to_pair(&self) -> (bool, BTreeSet<ClassLabel>) {
        match self {
            VerificationOutcome::Verified(c) => (true, BTreeSet::from([c.clone()])),
            VerificationOutcome::Candidates(s) => (false, s.clone()),
            VerificationOutcome::Inconsistent => (false, BTreeSet::new()),
        }
    }
}

impl fmt::Display for VerificationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerificationOutcome::Verified(c) => write!(f, "verified {c}"),
            VerificationOutcome::Candidates(s) => write!(f, "candidates ({})", s.len()),
            VerificationOutcome::Inconsistent => f.write_str("inconsistent"),
        }
    }
}

/// Knowledge supplied from outside the ensemble, as a formula to announce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSource {
    pub name: String,
    pub knowledge: Formula,
}

impl ExternalSource {
    pub fn new(name: impl Into<String>, knowledge: Formula) -> Self {
        ExternalSource {
            name: name.into(),
            knowledge,
        }
    }
}

/// Name of the `index`-th agent of an ensemble: `A0`, `A1`, ...
pub fn agent_id(index: usize) -> AgentId {
    AgentId::new(format!("A{index}")).expect("identifier")
}

/// Running intersection starting from `universe`; stops at the first empty
/// intersection. Returns the final set and how many sets were consumed.
pub fn intersect_knowledge<'a, I>(universe: &BTreeSet<ClassLabel>, sets: I) -> (BTreeSet<ClassLabel>, usize)
where
    I: IntoIterator<Item = &'a BTreeSet<ClassLabel>>,
{
    let mut acc = universe.clone();
    let mut used = 0;
    for s in sets {
        used += 1;
        acc.retain(|c| s.contains(c));
        if acc.is_empty() {
            break;
        }
    }
    (acc, used)
}

/// Result of the first phase shared by [`maska`] and [`masks`].
struct Aggregation {
    universe: BTreeSet<ClassLabel>,
    knowledge: Vec<KnowledgeSet>,
    surviving: BTreeSet<ClassLabel>,
}

fn aggregate<C: Classifier>(
    exec: Execution,
    classifiers: &[C],
    x0: &InputPoint,
    spec: &PerturbationSpec,
) -> Result<Aggregation, EnsembleError> {
    if classifiers.is_empty() {
        return Err(EnsembleError::EmptyEnsemble);
    }
    let mut universe: BTreeSet<ClassLabel> = classifiers.iter().flat_map(|c| c.class_labels()).collect();
    let mut surviving = universe.clone();
    let mut knowledge = Vec::with_capacity(classifiers.len());
    for (i, c) in classifiers.iter().enumerate() {
        let k = ckc_with(exec, c, x0, spec).map_err(|source| EnsembleError::Knowledge { classifier: i, source })?;
        universe.extend(k.classes.iter().cloned());
        surviving.retain(|class| k.classes.contains(class));
        knowledge.push(k);
        if surviving.is_empty() {
            break;
        }
    }
    Ok(Aggregation {
        universe,
        knowledge,
        surviving,
    })
}

/// Intersects the knowledge sets of all classifiers about `x0`.
pub fn maska<C: Classifier>(
    classifiers: &[C],
    x0: &InputPoint,
    spec: &PerturbationSpec,
) -> Result<(VerificationOutcome, BTreeSet<ClassLabel>), EnsembleError> {
    maska_with(Execution::default(), classifiers, x0, spec)
}

pub fn maska_with<C: Classifier>(
    exec: Execution,
    classifiers: &[C],
    x0: &InputPoint,
    spec: &PerturbationSpec,
) -> Result<(VerificationOutcome, BTreeSet<ClassLabel>), EnsembleError> {
    let agg = aggregate(exec, classifiers, x0, spec)?;
    Ok((VerificationOutcome::from_set(&agg.surviving), agg.surviving))
}

/// The reduced epistemic model of an ensemble: one world per class, and for
/// each agent a single block holding its candidate classes.
pub fn model_from_knowledge(
    knowledge: &BTreeMap<AgentId, BTreeSet<ClassLabel>>,
    classes: &BTreeSet<ClassLabel>,
) -> Result<ReducedModel, EnsembleError> {
    let world = |c: &ClassLabel| WorldId::new(c.as_str()).expect("identifier");
    let worlds = classes.iter().map(world).collect();
    let valuation = classes.iter().map(|c| BTreeSet::from([Atom::class(c.clone())])).collect();
    let mut model = KripkeModel::new(worlds, valuation)?;
    for (agent, candidates) in knowledge {
        if candidates.is_empty() {
            return Err(EnsembleError::EmptyKnowledgeSet(agent.clone()));
        }
        if let Some(c) = candidates.iter().find(|c| !classes.contains(*c)) {
            return Err(EnsembleError::UnknownClass(c.clone()));
        }
        model = model.with_agent(agent.clone(), [candidates.iter().map(world)])?;
    }
    Ok(ReducedModel::new(model, classes.clone())?)
}

/// Announces each source in order.
pub fn apply_sources(model: &KripkeModel, sources: &[ExternalSource]) -> Result<KripkeModel, ModelError> {
    sources
        .iter()
        .try_fold(model.clone(), |m, s| announce(&m, &s.knowledge))
}

/// Classes whose world is still present in a model built by
/// [`model_from_knowledge`].
pub fn surviving_classes(model: &KripkeModel) -> BTreeSet<ClassLabel> {
    (0..model.len())
        .flat_map(|i| model.valuation(i).iter().map(|a| a.class.clone()))
        .collect()
}

/// Ensemble aggregation followed by external knowledge.
///
/// Stops after the intersection when it already verifies the input or is
/// empty. Otherwise each agent publicly announces its candidates in the
/// ensemble model, then every source is announced in order; the classes whose
/// worlds survive decide the outcome. Source order matters for epistemic
/// formulas.
pub fn masks<C: Classifier>(
    classifiers: &[C],
    x0: &InputPoint,
    spec: &PerturbationSpec,
    sources: &[ExternalSource],
) -> Result<(VerificationOutcome, BTreeSet<ClassLabel>), EnsembleError> {
    masks_with(Execution::default(), classifiers, x0, spec, sources)
}

pub fn masks_with<C: Classifier>(
    exec: Execution,
    classifiers: &[C],
    x0: &InputPoint,
    spec: &PerturbationSpec,
    sources: &[ExternalSource],
) -> Result<(VerificationOutcome, BTreeSet<ClassLabel>), EnsembleError> {
    let agg = aggregate(exec, classifiers, x0, spec)?;
    if agg.surviving.len() <= 1 {
        return Ok((VerificationOutcome::from_set(&agg.surviving), agg.surviving));
    }
    let knowledge: BTreeMap<AgentId, BTreeSet<ClassLabel>> = agg
        .knowledge
        .iter()
        .enumerate()
        .map(|(i, k)| (agent_id(i), k.classes.clone()))
        .collect();
    let reduced = model_from_knowledge(&knowledge, &agg.universe)?;
    let mut model = reduced.into_model();
    for candidates in knowledge.values() {
        model = announce(&model, &Formula::any_of(candidates))?;
    }
    let model = apply_sources(&model, sources)?;
    let surviving = surviving_classes(&model);
    Ok((VerificationOutcome::from_set(&surviving), surviving))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::MockClassifier;

    fn labels(ls: &[&str]) -> BTreeSet<ClassLabel> {
        ls.iter().map(|&l| ClassLabel::from(l)).collect()
    }

    fn setup() -> (InputPoint, PerturbationSpec) {
        let x0 = InputPoint::new(vec![0.0]).unwrap();
        let spec = PerturbationSpec::Explicit((1..8).map(|i| vec![i as f64]).collect());
        (x0, spec)
    }

    #[test]
    fn digit_scenario_verifies_zero() {
        let (x0, spec) = setup();
        let agents = [
            MockClassifier::scripted(["0", "6", "8", "9"]),
            MockClassifier::scripted(["0", "2", "4", "6", "8"]),
            MockClassifier::scripted(["0"]),
        ];
        let (outcome, set) = maska(&agents, &x0, &spec).unwrap();
        assert_eq!(outcome, VerificationOutcome::Verified("0".into()));
        assert_eq!(set, labels(&["0"]));
    }

    #[test]
    fn digit_scenario_without_rejecting_six() {
        let (x0, spec) = setup();
        let agents = [
            MockClassifier::scripted(["0", "6", "8", "9"]),
            MockClassifier::scripted(["0", "2", "4", "6", "8"]),
            MockClassifier::scripted(["0", "6"]),
        ];
        let (outcome, _) = maska(&agents, &x0, &spec).unwrap();
        assert_eq!(outcome, VerificationOutcome::Candidates(labels(&["0", "6"])));
    }

    #[test]
    fn singleton_and_disjoint() {
        let (x0, spec) = setup();
        let one = [MockClassifier::Constant("c4".into())];
        assert_eq!(maska(&one, &x0, &spec).unwrap().0, VerificationOutcome::Verified("c4".into()));
        let two = [MockClassifier::Constant("a".into()), MockClassifier::Constant("b".into())];
        let (outcome, set) = maska(&two, &x0, &spec).unwrap();
        assert_eq!(outcome, VerificationOutcome::Inconsistent);
        assert!(set.is_empty());
        assert_eq!(outcome.to_pair(), (false, BTreeSet::new()));
    }

    #[test]
    fn empty_ensemble() {
        let (x0, spec) = setup();
        let none: [MockClassifier; 0] = [];
        assert_eq!(maska(&none, &x0, &spec), Err(EnsembleError::EmptyEnsemble));
    }

    #[test]
    fn failure_names_the_classifier() {
        let (x0, spec) = setup();
        let agents = [MockClassifier::Constant("a".into()), MockClassifier::Quadrant2D];
        assert!(matches!(
            maska(&agents, &x0, &spec),
            Err(EnsembleError::Knowledge { classifier: 1, .. })
        ));
    }

    #[test]
    fn one_agent_model_from_knowledge() {
        let digits: BTreeSet<ClassLabel> = (0..10).map(|d| ClassLabel::new(d.to_string()).unwrap()).collect();
        let k = BTreeMap::from([(AgentId::from("A0"), labels(&["0", "6", "8", "9"]))]);
        let r = model_from_knowledge(&k, &digits).unwrap();
        let blocks = r.model().blocks(&"A0".into()).unwrap();
        assert_eq!(blocks.len(), 7);
        let big: Vec<&str> = blocks.iter().find(|b| b.len() > 1).unwrap().iter().map(|w| w.as_str()).collect();
        assert_eq!(big, ["0", "6", "8", "9"]);
    }

    #[test]
    fn singleton_knowledge_gives_identity_partition() {
        let classes = labels(&["a", "b", "c"]);
        let k = BTreeMap::from([(AgentId::from("X"), labels(&["b"]))]);
        let r = model_from_knowledge(&k, &classes).unwrap();
        assert_eq!(r.model().partition(&"X".into()).unwrap().num_blocks(), 3);
    }

    #[test]
    fn model_from_knowledge_errors() {
        let classes = labels(&["a", "b"]);
        let empty = BTreeMap::from([(AgentId::from("X"), BTreeSet::new())]);
        assert_eq!(
            model_from_knowledge(&empty, &classes),
            Err(EnsembleError::EmptyKnowledgeSet("X".into()))
        );
        let unknown = BTreeMap::from([(AgentId::from("X"), labels(&["z"]))]);
        assert_eq!(
            model_from_knowledge(&unknown, &classes),
            Err(EnsembleError::UnknownClass("z".into()))
        );
    }

    #[test]
    fn masks_uses_external_knowledge() {
        let (x0, spec) = setup();
        let agents = [
            MockClassifier::scripted(["0", "6", "8", "9"]),
            MockClassifier::scripted(["0", "2", "4", "6", "8"]),
        ];
        // "the digit has a closed loop" does not separate 0, 6, 8
        let loop_source = ExternalSource::new("loops", Formula::any_of(&labels(&["0", "6", "8", "9"])));
        let (outcome, set) = masks(&agents, &x0, &spec, std::slice::from_ref(&loop_source)).unwrap();
        assert_eq!(set, labels(&["0", "6", "8"]));
        assert!(matches!(outcome, VerificationOutcome::Candidates(_)));

        let not_eight = ExternalSource::new("no8", Formula::not(Formula::class("8")));
        let not_six = ExternalSource::new("no6", Formula::not(Formula::class("6")));
        let (outcome, _) = masks(&agents, &x0, &spec, &[loop_source, not_eight, not_six]).unwrap();
        assert_eq!(outcome, VerificationOutcome::Verified("0".into()));
    }

    #[test]
    fn masks_can_use_agent_knowledge_in_sources() {
        let (x0, spec) = setup();
        let agents = [
            MockClassifier::scripted(["0", "6", "8", "9"]),
            MockClassifier::scripted(["0", "2", "4", "6", "8"]),
        ];
        // after both announcements A0 still cannot tell 0 from 6 or 8
        let src = ExternalSource::new("k", Formula::consistent("A0", Formula::class("6")));
        let (_, set) = masks(&agents, &x0, &spec, &[src]).unwrap();
        assert_eq!(set, labels(&["0", "6", "8"]));
        let bad = ExternalSource::new("bad", Formula::know("Nobody", Formula::Top));
        assert!(matches!(
            masks(&agents, &x0, &spec, &[bad]),
            Err(EnsembleError::Model(ModelError::UnknownAgent(_)))
        ));
    }

    #[test]
    fn unknown_atoms_in_sources_eliminate_worlds() {
        let (x0, spec) = setup();
        let agents = [MockClassifier::scripted(["0", "6"])];
        let src = ExternalSource::new("zebra", Formula::class("zebra"));
        let (outcome, _) = masks(&agents, &x0, &spec, &[src]).unwrap();
        assert_eq!(outcome, VerificationOutcome::Inconsistent);
    }

    #[test]
    fn intersect_stops_on_empty() {
        let u = labels(&["a", "b", "c"]);
        let sets = [labels(&["a"]), labels(&["b"]), labels(&["a"])];
        let (acc, used) = intersect_knowledge(&u, &sets);
        assert!(acc.is_empty());
        assert_eq!(used, 2);
    }
}
