//! Parser for the textual term syntax produced by `Display for Term`:
//!
//! ```text
//! term := I{p,..} | Bot{p,..} | (term + term) | (term ; term)
//!       | cell[tx; tx; ..] | sum{p,..}[{..}: term, ..]
//! tx   := {t,..}:{pre,..}->{post,..} [~{internal,..}]
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::{ConstantKey, Term};
use crate::error::TermError;
use crate::net::{PlaceId, PlaceSet, Process, TransitionId};

pub fn parse_term(src: &str) -> Result<Term, TermError> {
    let mut p = Parser { src, pos: 0 };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(t)
}

impl std::str::FromStr for Term {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> TermError {
        TermError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), TermError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, TermError> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\'')))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.error("expected an identifier"));
        }
        let id = &self.rest()[..len];
        self.pos += len;
        Ok(id)
    }

    fn id_set(&mut self) -> Result<Vec<&'a str>, TermError> {
        self.expect("{")?;
        let mut out = Vec::new();
        if self.eat("}") {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            if self.eat("}") {
                return Ok(out);
            }
            self.expect(",")?;
        }
    }

    fn place_set(&mut self) -> Result<PlaceSet, TermError> {
        Ok(self.id_set()?.into_iter().map(PlaceId::new).collect())
    }

    fn term(&mut self) -> Result<Term, TermError> {
        self.skip_ws();
        if self.eat("(") {
            let a = self.term()?;
            let seq = if self.eat("+") {
                false
            } else if self.eat(";") {
                true
            } else {
                return Err(self.error("expected `+` or `;`"));
            };
            let b = self.term()?;
            self.expect(")")?;
            return Ok(if seq {
                Term::seq(a, b)
            } else {
                Term::par(a, b)
            });
        }
        if self.eat("Bot") {
            return Ok(Term::Dead(self.place_set()?));
        }
        if self.eat("I") {
            return Ok(Term::Identity(self.place_set()?));
        }
        if self.eat("cell") {
            return self.constant();
        }
        if self.eat("sum") {
            return self.sum();
        }
        Err(self.error("expected a term"))
    }

    fn constant(&mut self) -> Result<Term, TermError> {
        self.expect("[")?;
        let mut txs = BTreeSet::new();
        loop {
            let transitions: BTreeSet<TransitionId> =
                self.id_set()?.into_iter().map(TransitionId::new).collect();
            self.expect(":")?;
            let initial_places = self.place_set()?;
            self.expect("->")?;
            let final_places = self.place_set()?;
            let internal_places = if self.eat("~") {
                self.place_set()?
            } else {
                PlaceSet::new()
            };
            txs.insert(Process {
                transitions,
                initial_places,
                final_places,
                internal_places,
            });
            if self.eat("]") {
                break;
            }
            self.expect(";")?;
        }
        Ok(Term::Constant(ConstantKey::new(txs)?))
    }

    fn sum(&mut self) -> Result<Term, TermError> {
        let inputs = self.place_set()?;
        self.expect("[")?;
        let mut branches = BTreeMap::new();
        if !self.eat("]") {
            loop {
                let at = self.pos;
                let m = self.place_set()?;
                self.expect(":")?;
                let t = self.term()?;
                if branches.insert(m, t).is_some() {
                    return Err(TermError::Parse {
                        pos: at,
                        msg: "duplicate sum branch".into(),
                    });
                }
                if self.eat("]") {
                    break;
                }
                self.expect(",")?;
            }
        }
        Ok(Term::Sum { inputs, branches })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_of_every_form() {
        let src = "(sum{p1}[{}: Bot{p4,p5}, {p1}: cell[{a}:{p1}->{p4}; {b}:{p1}->{p5}]] + \
                   (cell[{c}:{p2}->{p6}; {d}:{p2}->{}] ; I{p6}))";
        let t = parse_term(src).unwrap();
        assert_eq!(
            t.to_string(),
            src.split_whitespace().collect::<Vec<_>>().join(" ")
        );
        assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn internal_places_survive() {
        let src = "cell[{t1,t2}:{p,q}->{z}~{x}; {t3}:{p,q}->{w}]";
        let t = parse_term(src).unwrap();
        assert_eq!(t.to_string(), src);
    }

    #[test]
    fn errors_carry_positions() {
        assert!(matches!(
            parse_term("(I{a} * I{b})"),
            Err(TermError::Parse { pos: 6, .. })
        ));
        assert!(matches!(
            parse_term("I{a} junk"),
            Err(TermError::Parse { .. })
        ));
        assert!(matches!(parse_term("cell[]"), Err(TermError::Parse { .. })));
        assert!(matches!(
            parse_term("sum{a}[{}: I{}, {}: I{}]"),
            Err(TermError::Parse { .. })
        ));
    }
}
