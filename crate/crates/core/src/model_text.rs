//! Line-based text format for Kripke models.
//!
//! ```text
//! # comment
//! worlds: w0 w6 w8 w9
//! agent A0: {w0 w6 w8 w9}
//! val w0: c0 1:c3
//! ```
//!
//! Worlds not listed in any block of an agent are singletons. Worlds without
//! a `val` line have an empty valuation.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::formula::{AgentId, Atom, ClassLabel, WorldId};
use crate::kripke::KripkeModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ModelTextError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ModelTextError {
    ModelTextError {
        line,
        message: message.into(),
    }
}

pub fn parse_atom(token: &str) -> Option<Atom> {
    match token.split_once(':') {
        Some((component, label)) => Some(Atom::new(
            component.parse().ok()?,
            ClassLabel::new(label).ok()?,
        )),
        None => Some(Atom::class(ClassLabel::new(token).ok()?)),
    }
}

fn parse_blocks(line: usize, text: &str) -> Result<Vec<Vec<WorldId>>, ModelTextError> {
    let mut blocks = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('{')
            .ok_or_else(|| err(line, format!("expected '{{' at {rest:?}")))?;
        let close = body
            .find('}')
            .ok_or_else(|| err(line, "unbalanced '{'"))?;
        let block = body[..close]
            .split_whitespace()
            .map(|w| WorldId::new(w).map_err(|e| err(line, e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(block);
        rest = body[close + 1..].trim_start();
    }
    Ok(blocks)
}

pub fn parse_model(text: &str) -> Result<KripkeModel, ModelTextError> {
    let mut worlds: Option<(usize, Vec<WorldId>)> = None;
    let mut agents: Vec<(usize, AgentId, Vec<Vec<WorldId>>)> = Vec::new();
    let mut vals: Vec<(usize, WorldId, BTreeSet<Atom>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, body) = content
            .split_once(':')
            .ok_or_else(|| err(line, "expected 'worlds:', 'agent NAME:' or 'val WORLD:'"))?;
        let mut head_words = head.split_whitespace();
        match (head_words.next(), head_words.next(), head_words.next()) {
            (Some("worlds"), None, None) => {
                if worlds.is_some() {
                    return Err(err(line, "duplicate 'worlds:' line"));
                }
                let ids = body
                    .split_whitespace()
                    .map(|w| WorldId::new(w).map_err(|e| err(line, e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?;
                worlds = Some((line, ids));
            }
            (Some("agent"), Some(name), None) => {
                let agent = AgentId::new(name).map_err(|e| err(line, e.to_string()))?;
                agents.push((line, agent, parse_blocks(line, body)?));
            }
            (Some("val"), Some(world), None) => {
                let world = WorldId::new(world).map_err(|e| err(line, e.to_string()))?;
                let atoms = body
                    .split_whitespace()
                    .map(|t| parse_atom(t).ok_or_else(|| err(line, format!("bad atom {t:?}"))))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                vals.push((line, world, atoms));
            }
            _ => return Err(err(line, format!("unrecognised directive {head:?}"))),
        }
    }

    let (worlds_line, worlds) = worlds.ok_or_else(|| err(1, "missing 'worlds:' line"))?;
    let mut valuation = vec![None; worlds.len()];
    for (line, world, atoms) in vals {
        let i = worlds
            .iter()
            .position(|w| *w == world)
            .ok_or_else(|| err(line, format!("unknown world {world}")))?;
        if valuation[i].replace(atoms).is_some() {
            return Err(err(line, format!("duplicate valuation for {world}")));
        }
    }
    let valuation = valuation.into_iter().map(Option::unwrap_or_default).collect();
    let mut model =
        KripkeModel::new(worlds, valuation).map_err(|e| err(worlds_line, e.to_string()))?;
    for (line, agent, blocks) in agents {
        model = model
            .with_agent(agent, blocks)
            .map_err(|e| err(line, e.to_string()))?;
    }
    Ok(model)
}

/// Writes the model in the text format; only non-singleton blocks are listed.
pub fn write_model(model: &KripkeModel) -> String {
    model.to_string()
}

impl fmt::Display for KripkeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.worlds().iter().map(WorldId::as_str).collect();
        writeln!(f, "worlds: {}", names.join(" "))?;
        for agent in self.agents() {
            write!(f, "agent {agent}:")?;
            for block in self.blocks(agent).expect("own agent") {
                if block.len() > 1 {
                    let names: Vec<&str> = block.iter().map(|w| w.as_str()).collect();
                    write!(f, " {{{}}}", names.join(" "))?;
                }
            }
            writeln!(f)?;
        }
        for (i, world) in self.worlds().iter().enumerate() {
            write!(f, "val {world}:")?;
            for atom in self.valuation(i) {
                write!(f, " {atom}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_AGENT_DIGITS: &str = "\
# classifier A0's view of the digit zero
worlds: w0 w6 w8 w9
agent A0: {w0 w6 w8 w9}
val w0: c0
val w6: c6
val w8: c8
val w9: c9
";

    #[test]
    fn parses_and_writes_back() {
        let m = parse_model(ONE_AGENT_DIGITS).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m.partition(&"A0".into()).unwrap().num_blocks(), 1);
        let text = write_model(&m);
        assert_eq!(parse_model(&text).unwrap(), m);
        assert!(text.starts_with("worlds: w0 w6 w8 w9\nagent A0: {w0 w6 w8 w9}\n"));
    }

    #[test]
    fn implicit_singletons_and_components() {
        let m = parse_model("worlds: a b c\nagent X: {a b}\nagent Y:\nval a: c0 1:c3\n").unwrap();
        assert_eq!(m.partition(&"X".into()).unwrap().num_blocks(), 2);
        assert_eq!(m.partition(&"Y".into()).unwrap().num_blocks(), 3);
        assert!(m.valuation_of(&"a".into()).unwrap().contains(&Atom::new(1, "c3".into())));
        assert!(m.valuation_of(&"b".into()).unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(parse_model("agent A: {a}\n").unwrap_err().line, 1);
        assert_eq!(parse_model("worlds: a\nagent A: {a\n").unwrap_err().line, 2);
        assert_eq!(parse_model("worlds: a\n\nval b: c0\n").unwrap_err().line, 3);
        assert_eq!(parse_model("worlds: a b\nagent A: {a} {a b}\n").unwrap_err().line, 2);
        assert!(parse_model("worlds: a\nval a: 1:\n").is_err());
    }
}
