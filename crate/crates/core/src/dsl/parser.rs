use std::collections::BTreeSet;

use crate::error::{Error, Location, Result};
use crate::ontology::Ontology;
use crate::semilogic::{
    is_identifier, ActPattern, DbPredicate, Effect, FactPattern, Pattern, RuleKind, Section, Term,
    TransitionRule, Value,
};

use super::lexer::{Spanned, Tok};
use super::{ParseDiagnostic, Severity};

pub(crate) struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    onto: &'a Ontology,
    pub(crate) warnings: Vec<ParseDiagnostic>,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(toks: Vec<Spanned>, onto: &'a Ontology) -> Self {
        Parser {
            toks,
            pos: 0,
            onto,
            warnings: Vec::new(),
        }
    }

    fn peek(&self) -> &Spanned {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn next(&mut self) -> Spanned {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> Location {
        let t = self.peek();
        Location::Source {
            line: t.line,
            column: t.column,
        }
    }

    fn syntax(&self, at: &Spanned, message: impl Into<String>) -> Error {
        Error::Syntax(ParseDiagnostic {
            line: at.line,
            column: at.column,
            message: message.into(),
            severity: Severity::Error,
        })
    }

    fn expect(&mut self, want: Tok) -> Result<Spanned> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(self.syntax(
                &t,
                format!("expected {}, found {}", want.describe(), t.tok.describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Spanned)> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if is_identifier(w) => Ok((w.clone(), t)),
            other => Err(self.syntax(&t, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn keyword(&mut self) -> Result<(String, Spanned)> {
        self.ident("keyword").map(|(w, t)| (w.to_lowercase(), t))
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    pub(crate) fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    /// rule = "rule" ident ":" kind "{" {section} "=>" "{" effect "}" "}"
    pub(crate) fn rule(&mut self, order_index: usize) -> Result<(TransitionRule, Spanned)> {
        let start = self.peek().clone();
        if !self.at_keyword("rule") {
            return Err(self.syntax(
                &start,
                format!("expected `rule`, found {}", start.tok.describe()),
            ));
        }
        self.next();
        let (id, id_tok) = self.ident("rule id")?;
        self.expect(Tok::Colon)?;
        let (kind_word, kind_tok) = self.keyword()?;
        let kind = match kind_word.as_str() {
            "belief" => RuleKind::Belief,
            "action" => RuleKind::Action,
            _ => return Err(self.syntax(&kind_tok, "rule kind must be `belief` or `action`")),
        };
        self.expect(Tok::LBrace)?;

        let mut pre_user = None;
        let mut pre_belief = None;
        let mut pre_prev_action = None;
        let mut pre_db = None;
        let mut seen = BTreeSet::new();
        while self.peek().tok != Tok::Arrow {
            let (kw, kw_tok) = self.keyword()?;
            let section = match kw.as_str() {
                "user" => Section::User,
                "belief" => Section::Belief,
                "prev_action" => Section::PrevAction,
                "db" => Section::Db,
                _ => {
                    return Err(self.syntax(
                        &kw_tok,
                        format!(
                        "unknown section `{kw}`; expected user, belief, prev_action, db or `=>`"
                    ),
                    ))
                }
            };
            if !seen.insert(section) {
                return Err(self.syntax(&kw_tok, format!("section `{kw}` appears twice")));
            }
            self.expect(Tok::LBrace)?;
            match section {
                Section::User => pre_user = Some(self.act_items()?),
                Section::PrevAction => pre_prev_action = Some(self.act_items()?),
                Section::Belief => pre_belief = Some(self.fact_items()?),
                Section::Db => pre_db = Some(self.db_pred(&kw_tok)?),
            }
            self.expect(Tok::RBrace)?;
        }
        self.expect(Tok::Arrow)?;
        self.expect(Tok::LBrace)?;
        let effect = match kind {
            RuleKind::Belief => Effect::Belief(strip(self.fact_items()?)),
            RuleKind::Action => Effect::Action(strip(self.act_items()?)),
        };
        self.expect(Tok::RBrace)?;
        self.expect(Tok::RBrace)?;

        let rule = TransitionRule {
            id,
            pre_user: pre_user.map(|v| self.dedup(v)),
            pre_belief: pre_belief.map(|v| self.dedup(v)),
            pre_prev_action: pre_prev_action.map(|v| self.dedup(v)),
            pre_db,
            effect,
            order_index,
        };
        Ok((rule, id_tok))
    }

    /// Drops exact duplicate precondition items; a section is a set.
    fn dedup<P: Pattern + PartialEq>(&mut self, items: Vec<(P, Spanned)>) -> Vec<P> {
        let mut out: Vec<P> = Vec::with_capacity(items.len());
        for (item, at) in items {
            if out.contains(&item) {
                self.warnings.push(ParseDiagnostic {
                    line: at.line,
                    column: at.column,
                    message: format!("duplicate precondition item `{item}` ignored"),
                    severity: Severity::Warning,
                });
            } else {
                out.push(item);
            }
        }
        out
    }

    fn list<T>(&mut self, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let mut out = Vec::new();
        if self.peek().tok == Tok::RBrace {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.peek().tok == Tok::Comma {
                self.next();
            } else {
                return Ok(out);
            }
        }
    }

    fn act_items(&mut self) -> Result<Vec<(ActPattern, Spanned)>> {
        self.list(|p| {
            let at = p.peek().clone();
            p.act_item().map(|a| (a, at))
        })
    }

    fn fact_items(&mut self) -> Result<Vec<(FactPattern, Spanned)>> {
        self.list(|p| {
            let at = p.peek().clone();
            p.fact_item().map(|f| (f, at))
        })
    }

    /// actitem = ident "(" [ factitem | ident ] ")"
    fn act_item(&mut self) -> Result<ActPattern> {
        let at = self.here();
        let (act, _) = self.keyword()?;
        self.onto.check_act(&act, || at)?;
        self.expect(Tok::LParen)?;
        if self.peek().tok == Tok::RParen {
            self.next();
            return Ok(ActPattern::bare(&act));
        }
        let slot_at = self.here();
        let (slot, _) = self.keyword()?;
        self.onto.check_act_slot(&slot, || slot_at)?;
        let pattern = if self.peek().tok == Tok::LParen {
            self.next();
            let term = self.term()?;
            self.expect(Tok::RParen)?;
            ActPattern::with_term(&act, &slot, term)
        } else {
            ActPattern::with_slot(&act, &slot)
        };
        self.expect(Tok::RParen)?;
        Ok(pattern)
    }

    /// factitem = ident "(" term ")"
    fn fact_item(&mut self) -> Result<FactPattern> {
        let at = self.here();
        let (slot, _) = self.keyword()?;
        self.onto.check_slot(&slot, || at)?;
        self.expect(Tok::LParen)?;
        let term = self.term()?;
        self.expect(Tok::RParen)?;
        Ok(FactPattern::new(&slot, term))
    }

    /// term = "?" ident | value
    fn term(&mut self) -> Result<Term> {
        let t = self.next();
        match &t.tok {
            Tok::Var(name) => Ok(Term::Variable(name.clone())),
            Tok::Word(w) | Tok::Str(w) => match Value::new(w) {
                Ok(v) => Ok(Term::Constant(v)),
                Err(_) => Err(self.syntax(&t, "empty value")),
            },
            other => Err(self.syntax(
                &t,
                format!("expected a value or variable, found {}", other.describe()),
            )),
        }
    }

    /// dbpred = "between" "(" int "," int ")" | "eq" "(" int ")" | "any"
    fn db_pred(&mut self, section: &Spanned) -> Result<DbPredicate> {
        if self.peek().tok == Tok::RBrace {
            return Err(self.syntax(section, "db section needs exactly one predicate"));
        }
        let (name, name_tok) = self.keyword()?;
        let pred = match name.as_str() {
            "any" => DbPredicate::Any,
            "eq" => {
                self.expect(Tok::LParen)?;
                let n = self.int()?;
                self.expect(Tok::RParen)?;
                DbPredicate::Eq(n)
            }
            "between" => {
                self.expect(Tok::LParen)?;
                let lo = self.int()?;
                self.expect(Tok::Comma)?;
                let hi = self.int()?;
                let close = self.expect(Tok::RParen)?;
                if lo > hi {
                    return Err(self.syntax(
                        &close,
                        format!("between({lo},{hi}) has lower bound above upper bound"),
                    ));
                }
                DbPredicate::Between(lo, hi)
            }
            _ => return Err(self.syntax(&name_tok, format!("unknown db predicate `{name}`"))),
        };
        if self.peek().tok == Tok::Comma {
            let t = self.peek().clone();
            return Err(self.syntax(&t, "db section takes exactly one predicate"));
        }
        Ok(pred)
    }

    fn int(&mut self) -> Result<u64> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if !w.is_empty() && w.chars().all(|c| c.is_ascii_digit()) => w
                .parse()
                .map_err(|_| self.syntax(&t, format!("integer `{w}` out of range"))),
            other => Err(self.syntax(
                &t,
                format!(
                    "expected a non-negative integer, found {}",
                    other.describe()
                ),
            )),
        }
    }
}

fn strip<P>(items: Vec<(P, Spanned)>) -> Vec<P> {
    items.into_iter().map(|(p, _)| p).collect()
}
