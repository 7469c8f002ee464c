//! Concrete syntax for [`Formula`].
//!
//! ```text
//! formula := 'T' | 'F' | atom | '~' f | f '&' f | f '|' f
//!          | 'K{' agent '}' f | '<K{' agent '}>' f
//!          | 'D{' agent (',' agent)* '}' f | 'E{' agent (',' agent)* '}' f
//!          | '[' f ']' f | '(' f ')'
//! atom    := [digits ':'] identifier
//! ```
//!
//! Prefix operators bind tightest, then `&`, then `|`; binary operators
//! associate to the left.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::formula::{is_ident_char, AgentId, Atom, ClassLabel, Formula};

/// Byte range `start..end` into the parsed text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at {}..{}", span.start, span.end)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { src: text, pos: 0 };
    let f = p.disjunction()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error(p.pos, text.len(), "expected '&', '|' or end of input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, start: usize, end: usize, message: &str) -> ParseError {
        ParseError {
            span: SourceSpan { start, end },
            message: message.to_string(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    /// Expects `close`; on failure the span runs from `open_at` to the
    /// current position so the unbalanced region is covered.
    fn expect_close(&mut self, close: char, open_at: usize) -> Result<(), ParseError> {
        if self.eat(close) {
            Ok(())
        } else {
            let end = (self.pos + self.peek().map_or(0, char::len_utf8)).min(self.src.len());
            Err(self.error(open_at, end, &format!("expected '{close}'")))
        }
    }

    fn ident(&mut self) -> &'a str {
        self.skip_ws();
        let len = self.rest().find(|c| !is_ident_char(c)).unwrap_or(self.rest().len());
        let word = &self.rest()[..len];
        self.pos += len;
        word
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.conjunction()?;
        while self.eat('|') {
            left = Formula::or(left, self.conjunction()?);
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while self.eat('&') {
            left = Formula::and(left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error(start, start, "expected formula")),
            Some('~') => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.disjunction()?;
                self.expect_close(')', start)?;
                Ok(inner)
            }
            Some('[') => {
                self.pos += 1;
                let psi = self.disjunction()?;
                self.expect_close(']', start)?;
                Ok(Formula::announce(psi, self.unary()?))
            }
            Some('<') => {
                self.pos += 1;
                if !(self.eat('K') && self.rest().starts_with('{')) {
                    return Err(self.error(start, self.pos, "expected '<K{agent}>'"));
                }
                let agent = self.single_agent()?;
                self.expect_close('>', start)?;
                Ok(Formula::Consistent(agent, Box::new(self.unary()?)))
            }
            Some(c) if is_ident_char(c) => self.word(start),
            Some(c) => Err(self.error(start, start + c.len_utf8(), "expected formula")),
        }
    }

    fn word(&mut self, start: usize) -> Result<Formula, ParseError> {
        let word = self.ident();
        let at_brace = self.rest().starts_with('{');
        match word {
            "K" if at_brace => {
                let agent = self.single_agent()?;
                Ok(Formula::Know(agent, Box::new(self.unary()?)))
            }
            "D" if at_brace => {
                let agents = self.agent_list()?;
                Ok(Formula::Dist(agents, Box::new(self.unary()?)))
            }
            "E" if at_brace => {
                let agents = self.agent_list()?;
                Ok(Formula::Every(agents, Box::new(self.unary()?)))
            }
            _ if self.rest().starts_with(':') && word.bytes().all(|b| b.is_ascii_digit()) => {
                let component: u32 = word
                    .parse()
                    .map_err(|_| self.error(start, self.pos, "component index out of range"))?;
                self.pos += 1;
                let label_start = self.pos;
                let label = self.ident();
                if label.is_empty() {
                    return Err(self.error(start, label_start, "expected class label after ':'"));
                }
                Ok(Formula::Atom(Atom::new(component, ClassLabel::new(label).expect("ident"))))
            }
            "T" => Ok(Formula::Top),
            "F" => Ok(Formula::bot()),
            _ => Ok(Formula::class(ClassLabel::new(word).expect("ident"))),
        }
    }

    fn single_agent(&mut self) -> Result<AgentId, ParseError> {
        let open = self.pos;
        let agents = self.agent_list()?;
        if agents.len() != 1 {
            return Err(self.error(open, self.pos, "expected exactly one agent"));
        }
        Ok(agents.into_iter().next().unwrap())
    }

    /// `{a, b, ...}`, cursor on the opening brace.
    fn agent_list(&mut self) -> Result<BTreeSet<AgentId>, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let mut agents = BTreeSet::new();
        loop {
            let at = {
                self.skip_ws();
                self.pos
            };
            let name = self.ident();
            if name.is_empty() {
                if agents.is_empty() && self.eat('}') {
                    return Err(self.error(open, self.pos, "empty agent list"));
                }
                return Err(self.error(open, (at + 1).min(self.src.len()), "expected agent name"));
            }
            agents.insert(AgentId::new(name).expect("ident"));
            if !self.eat(',') {
                break;
            }
        }
        self.expect_close('}', open)?;
        Ok(agents)
    }
}

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        _ => PREC_UNARY,
    }
}

fn agent_set(f: &mut fmt::Formatter<'_>, agents: &BTreeSet<AgentId>) -> fmt::Result {
    let names: Vec<&str> = agents.iter().map(AgentId::as_str).collect();
    write!(f, "{{{}}} ", names.join(","))
}

fn write_formula(f: &mut fmt::Formatter<'_>, formula: &Formula, min_prec: u8) -> fmt::Result {
    let parens = precedence(formula) < min_prec;
    if parens {
        f.write_str("(")?;
    }
    match formula {
        Formula::Top => f.write_str("T")?,
        Formula::Atom(a) => write!(f, "{a}")?,
        Formula::Not(inner) if **inner == Formula::Top => f.write_str("F")?,
        Formula::Not(inner) => {
            f.write_str("~")?;
            write_formula(f, inner, PREC_UNARY)?;
        }
        Formula::And(a, b) => {
            write_formula(f, a, PREC_AND)?;
            f.write_str(" & ")?;
            write_formula(f, b, PREC_UNARY)?;
        }
        Formula::Or(a, b) => {
            write_formula(f, a, PREC_OR)?;
            f.write_str(" | ")?;
            write_formula(f, b, PREC_AND)?;
        }
        Formula::Know(j, inner) => {
            write!(f, "K{{{j}}} ")?;
            write_formula(f, inner, PREC_UNARY)?;
        }
        Formula::Consistent(j, inner) => {
            write!(f, "<K{{{j}}}> ")?;
            write_formula(f, inner, PREC_UNARY)?;
        }
        Formula::Dist(agents, inner) => {
            f.write_str("D")?;
            agent_set(f, agents)?;
            write_formula(f, inner, PREC_UNARY)?;
        }
        Formula::Every(agents, inner) => {
            f.write_str("E")?;
            agent_set(f, agents)?;
            write_formula(f, inner, PREC_UNARY)?;
        }
        Formula::Announce(psi, phi) => {
            f.write_str("[")?;
            write_formula(f, psi, PREC_OR)?;
            f.write_str("] ")?;
            write_formula(f, phi, PREC_UNARY)?;
        }
    }
    if parens {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, PREC_OR)
    }
}

/// Canonical text for `formula`; [`parse`] maps it back to an equal tree.
pub fn print(formula: &Formula) -> String {
    formula.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(label: &str) -> Formula {
        Formula::class(label)
    }

    #[test]
    fn announcement_of_knowledge_over_two_components() {
        let f = parse("[K{B} c3] (0:c3 & 1:c0)").unwrap();
        let expected = Formula::announce(
            Formula::know("B", c("c3")),
            Formula::and(c("c3"), Formula::atom(Atom::new(1, "c0".into()))),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn constants() {
        assert_eq!(parse("T").unwrap(), Formula::Top);
        assert_eq!(parse("F").unwrap(), Formula::bot());
        assert_eq!(parse("0:T").unwrap(), Formula::class("T"));
    }

    #[test]
    fn printing() {
        assert_eq!(print(&Formula::not(Formula::and(c("a"), c("b")))), "~(a & b)");
        assert_eq!(
            print(&Formula::know("A0", Formula::or(c("c0"), c("c6")))),
            "K{A0} (c0 | c6)"
        );
        assert_eq!(print(&Formula::bot()), "F");
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("a | b & c").unwrap(),
            Formula::or(c("a"), Formula::and(c("b"), c("c")))
        );
        assert_eq!(
            parse("a & b & c").unwrap(),
            Formula::and(Formula::and(c("a"), c("b")), c("c"))
        );
        assert_eq!(
            parse("~a & K{X} b").unwrap(),
            Formula::and(Formula::not(c("a")), Formula::know("X", c("b")))
        );
        let right_nested = Formula::or(c("a"), Formula::or(c("b"), c("c")));
        assert_eq!(print(&right_nested), "a | (b | c)");
        assert_eq!(parse(&print(&right_nested)).unwrap(), right_nested);
    }

    #[test]
    fn group_operators() {
        let f = parse("D{B, A} E{A} <K{C}> x").unwrap();
        let expected = Formula::dist(
            ["A".into(), "B".into()],
            Formula::every(["A".into()], Formula::consistent("C", c("x"))),
        );
        assert_eq!(f, expected);
        assert_eq!(print(&f), "D{A,B} E{A} <K{C}> x");
    }

    #[test]
    fn operator_letters_are_atoms_without_brace() {
        assert_eq!(parse("K & D").unwrap(), Formula::and(c("K"), c("D")));
        assert_eq!(parse("30").unwrap(), c("30"));
    }

    fn span_of(text: &str) -> SourceSpan {
        parse(text).unwrap_err().span
    }

    #[test]
    fn malformed_inputs_have_spans() {
        assert_eq!(span_of(""), SourceSpan { start: 0, end: 0 });
        assert_eq!(span_of("   "), SourceSpan { start: 3, end: 3 });
        // unbalanced brace covers from the '{'
        assert_eq!(span_of("K{A0 c0"), SourceSpan { start: 1, end: 6 });
        // unbalanced bracket covers from the '['
        let s = span_of("[c0 c1");
        assert_eq!(s.start, 0);
        assert!(s.end > 3);
        assert_eq!(span_of("D{} c0"), SourceSpan { start: 1, end: 3 });
        assert_eq!(span_of("c0 c1"), SourceSpan { start: 3, end: 5 });
        assert_eq!(span_of("(c0 & c1").start, 0);
        assert!(parse("c0 &").is_err());
        assert!(parse("K{A,B} c0").is_err());
    }
}
