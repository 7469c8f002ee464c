//! Identifiers, atoms and the formula tree of public announcement logic.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {kind} {value:?}: identifiers are non-empty runs of [A-Za-z0-9_]")]
pub struct IdError {
    pub kind: &'static str,
    pub value: String,
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn validate(kind: &'static str, value: String) -> Result<String, IdError> {
    if !value.is_empty() && value.chars().all(is_ident_char) {
        Ok(value)
    } else {
        Err(IdError { kind, value })
    }
}

macro_rules! ident_newtype {
    ($(#[$meta:meta])* $name:ident, $kind:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Result<Self, IdError> {
                validate($kind, value.into()).map(Self)
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = IdError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        /// Panics on an invalid identifier; intended for literals.
        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                match Self::new(s) {
                    Ok(v) => v,
                    Err(e) => panic!("{e}"),
                }
            }
        }
    };
}

ident_newtype!(
    /// Name of an agent (one classifier of an ensemble).
    AgentId,
    "agent id"
);
ident_newtype!(
    /// An output class of a classifier.
    ClassLabel,
    "class label"
);
ident_newtype!(
    /// Name of a possible world.
    WorldId,
    "world id"
);

/// A propositional variable: "some point of the perturbation set is classified
/// as `class`", for the input attached to the model. `component` selects the
/// classifier system inside a product model and is 0 otherwise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub component: u32,
    pub class: ClassLabel,
}

impl Atom {
    pub fn new(component: u32, class: ClassLabel) -> Self {
        Self { component, class }
    }

    pub fn class(class: impl Into<ClassLabel>) -> Self {
        Self::new(0, class.into())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `T` and `F` are constants in formula syntax; keep the explicit
        // component so the atom reads back as an atom.
        let reserved = matches!(self.class.as_str(), "T" | "F");
        if self.component == 0 && !reserved {
            write!(f, "{}", self.class)
        } else {
            write!(f, "{}:{}", self.component, self.class)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `K_j φ`
    Know(AgentId, Box<Formula>),
    /// `<K_j> φ`, i.e. `~K_j ~φ`
    Consistent(AgentId, Box<Formula>),
    /// Distributed knowledge `D_A φ`.
    Dist(BTreeSet<AgentId>, Box<Formula>),
    /// `E_A φ`, everybody in `A` knows.
    Every(BTreeSet<AgentId>, Box<Formula>),
    /// `[ψ] φ`: after announcing ψ, φ holds.
    Announce(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn bot() -> Self {
        Formula::Not(Box::new(Formula::Top))
    }

    pub fn atom(atom: Atom) -> Self {
        Formula::Atom(atom)
    }

    /// Component-0 atom for `class`.
    pub fn class(class: impl Into<ClassLabel>) -> Self {
        Formula::Atom(Atom::class(class))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn know(agent: impl Into<AgentId>, f: Formula) -> Self {
        Formula::Know(agent.into(), Box::new(f))
    }

    pub fn consistent(agent: impl Into<AgentId>, f: Formula) -> Self {
        Formula::Consistent(agent.into(), Box::new(f))
    }

    pub fn dist<I: IntoIterator<Item = AgentId>>(agents: I, f: Formula) -> Self {
        Formula::Dist(agents.into_iter().collect(), Box::new(f))
    }

    pub fn every<I: IntoIterator<Item = AgentId>>(agents: I, f: Formula) -> Self {
        Formula::Every(agents.into_iter().collect(), Box::new(f))
    }

    pub fn announce(psi: Formula, phi: Formula) -> Self {
        Formula::Announce(Box::new(psi), Box::new(phi))
    }

    /// Left-nested conjunction; `Top` when empty.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::Top)
    }

    /// Left-nested disjunction; `F` when empty.
    pub fn disjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Self {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or_else(Formula::bot)
    }

    /// Disjunction over the component-0 atoms of `classes`.
    pub fn any_of<'a, I: IntoIterator<Item = &'a ClassLabel>>(classes: I) -> Self {
        Formula::disjunction(classes.into_iter().map(|c| Formula::class(c.clone())))
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Top | Formula::Atom(_) => 0,
            Formula::Not(f)
            | Formula::Know(_, f)
            | Formula::Consistent(_, f)
            | Formula::Dist(_, f)
            | Formula::Every(_, f) => 1 + f.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Announce(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// True when no epistemic or dynamic operator occurs.
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::Top | Formula::Atom(_) => true,
            Formula::Not(f) => f.is_propositional(),
            Formula::And(a, b) | Formula::Or(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    /// Every agent mentioned anywhere in the formula.
    pub fn agents(&self) -> BTreeSet<&AgentId> {
        let mut out = BTreeSet::new();
        self.collect_agents(&mut out);
        out
    }

    fn collect_agents<'a>(&'a self, out: &mut BTreeSet<&'a AgentId>) {
        match self {
            Formula::Top | Formula::Atom(_) => {}
            Formula::Not(f) => f.collect_agents(out),
            Formula::Know(a, f) | Formula::Consistent(a, f) => {
                out.insert(a);
                f.collect_agents(out);
            }
            Formula::Dist(set, f) | Formula::Every(set, f) => {
                out.extend(set.iter());
                f.collect_agents(out);
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Announce(a, b) => {
                a.collect_agents(out);
                b.collect_agents(out);
            }
        }
    }

    /// Adds `offset` to the component index of every atom.
    pub fn shift_components(&self, offset: u32) -> Formula {
        let shift = |f: &Formula| Box::new(f.shift_components(offset));
        match self {
            Formula::Top => Formula::Top,
            Formula::Atom(a) => Formula::Atom(Atom::new(a.component + offset, a.class.clone())),
            Formula::Not(f) => Formula::Not(shift(f)),
            Formula::And(a, b) => Formula::And(shift(a), shift(b)),
            Formula::Or(a, b) => Formula::Or(shift(a), shift(b)),
            Formula::Know(j, f) => Formula::Know(j.clone(), shift(f)),
            Formula::Consistent(j, f) => Formula::Consistent(j.clone(), shift(f)),
            Formula::Dist(s, f) => Formula::Dist(s.clone(), shift(f)),
            Formula::Every(s, f) => Formula::Every(s.clone(), shift(f)),
            Formula::Announce(a, b) => Formula::Announce(shift(a), shift(b)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_reject_empty_and_punctuation() {
        assert!(ClassLabel::new("").is_err());
        assert!(AgentId::new("A 0").is_err());
        assert!(WorldId::new("w{0}").is_err());
        assert_eq!(ClassLabel::new("c7").unwrap().as_str(), "c7");
    }

    #[test]
    fn reserved_class_names_keep_component() {
        assert_eq!(Atom::class("T").to_string(), "0:T");
        assert_eq!(Atom::class("c3").to_string(), "c3");
        assert_eq!(Atom::new(1, "c0".into()).to_string(), "1:c0");
    }

    #[test]
    fn empty_junctions() {
        assert_eq!(Formula::conjunction([]), Formula::Top);
        assert_eq!(Formula::disjunction([]), Formula::bot());
    }

    #[test]
    fn shift_touches_only_atoms() {
        let f = Formula::know("A", Formula::or(Formula::class("c0"), Formula::Top));
        let g = f.shift_components(2);
        assert_eq!(
            g,
            Formula::know(
                "A",
                Formula::or(Formula::atom(Atom::new(2, "c0".into())), Formula::Top)
            )
        );
    }
}
