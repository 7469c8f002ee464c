//! Epistemic model checking for classifier ensembles.
//!
//! Classifiers are treated as agents of an S5 multi-agent system. What a
//! classifier "knows" about an input is the set of classes it emits over a
//! perturbation set; an ensemble pools that knowledge by intersection, and
//! further knowledge enters as public announcements on a Kripke model.

pub mod classifier;
pub mod ensemble;
pub mod experiment;
pub mod formula;
pub mod knowledge;
pub mod kripke;
pub mod mnist;
pub mod model_text;
pub mod nn;
pub mod par;
pub mod parser;
pub mod product;
pub mod reduction;

pub use classifier::{Classifier, ClassifyError, MockClassifier};
pub use ensemble::{maska, masks, model_from_knowledge, EnsembleError, ExternalSource, VerificationOutcome};
pub use experiment::{run_experiment, ExperimentError, ExperimentReport};
pub use formula::{AgentId, Atom, ClassLabel, Formula, IdError, WorldId};
pub use knowledge::{ckc, ImageShape, InputPoint, KnowledgeError, KnowledgeSet, PerturbationSpec};
pub use kripke::{announce, satisfies, KripkeModel, ModelError, Partition};
pub use mnist::{load_mnist, IdxError, LabeledDataset};
pub use model_text::{parse_model, write_model, ModelTextError};
pub use nn::{load_weights, MlpNetwork, WeightsError};
pub use par::Execution;
pub use parser::{parse, ParseError, SourceSpan};
pub use product::{product, ProductError, ProductModel};
pub use reduction::{reduce, PowerSetModel, ReducedModel, ReductionError};
