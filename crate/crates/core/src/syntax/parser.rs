//! Recursive-descent parser for `.flx` source text.
//!
//! Produces statements whose formulas still contain unresolved
//! [`Term::Name`] atoms; name resolution happens in `resolve`.

use super::ast::*;
use super::error::{ErrorKind, SyntaxError};
use super::lexer::{tokenize, Tok, Token};

/// Source positions of the terms of a formula, in `for_each_term` order.
pub(crate) type TermPositions = Vec<(usize, usize)>;

#[derive(Debug, Clone)]
pub(crate) struct Located<T> {
    pub value: T,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Formula {
    pub form: InnerForm,
    pub positions: TermPositions,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct ParsedRuleForm {
    pub modality: Modality,
    pub body: Formula,
    pub reparation: Option<Formula>,
    pub surface: String,
}

#[derive(Debug, Clone)]
pub(crate) enum Stmt {
    Action {
        name: Located<String>,
        outputs: Vec<Located<String>>,
        scope: Option<Located<String>>,
        guard: Option<Formula>,
    },
    Interval {
        name: Located<String>,
        begin: Located<String>,
        end: Option<Located<String>>,
        scope: Option<Located<String>>,
        repeatedly: bool,
    },
    Counter {
        name: Located<String>,
        inc: Vec<Located<String>>,
        dec: Vec<Located<String>>,
        reset: Vec<Located<String>>,
        bound: Option<Located<u32>>,
    },
    Temporal {
        points: Vec<Located<String>>,
    },
    Macro {
        name: Located<String>,
        body: Formula,
    },
    Incompatible {
        left: Formula,
        right: Formula,
    },
    Rule {
        name: Located<String>,
        form: ParsedRuleForm,
        exception_of: Option<Located<String>>,
    },
    Query {
        name: Located<String>,
        form: ParsedRuleForm,
    },
}

const STATEMENT_KEYWORDS: &[&str] =
    &["action", "interval", "counter", "temporal", "macro", "incompatible", "rule", "query"];

const DEONTIC_NAMES: &[&str] = &["O", "F", "P", "OE"];

struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
}

pub(crate) fn parse_statements(src: &str) -> Result<Vec<Stmt>, SyntaxError> {
    let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
    let mut out = Vec::new();
    while p.peek() != &Tok::Eof {
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Parses a lone rule form such as `F[rho](phi)`.
pub(crate) fn parse_rule_form(src: &str) -> Result<ParsedRuleForm, SyntaxError> {
    let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
    let form = p.rule_form()?;
    p.expect_eof()?;
    Ok(form)
}

/// Parses a lone inner formula.
pub(crate) fn parse_formula(src: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

impl<'s> Parser<'s> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let t = self.here();
        SyntaxError::new(
            t.line,
            t.column,
            ErrorKind::Unexpected { expected: expected.to_string(), found: t.tok.describe() },
        )
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, SyntaxError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn expect_eof(&self) -> Result<(), SyntaxError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<Located<String>, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !STATEMENT_KEYWORDS.contains(&s.as_str()) => {
                let t = self.bump();
                Ok(Located { value: s, line: t.line, column: t.column })
            }
            _ => Err(self.error(what)),
        }
    }

    fn ident_list(&mut self, what: &str) -> Result<Vec<Located<String>>, SyntaxError> {
        let mut v = vec![self.ident(what)?];
        while *self.peek() == Tok::Comma {
            self.bump();
            v.push(self.ident(what)?);
        }
        Ok(v)
    }

    fn statement(&mut self) -> Result<Stmt, SyntaxError> {
        let kw = match self.peek() {
            Tok::Ident(s) if STATEMENT_KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.error("a declaration, `rule` or `query`")),
        };
        self.bump();
        match kw.as_str() {
            "action" => self.action(),
            "interval" => self.interval(),
            "counter" => self.counter(),
            "temporal" => {
                self.keyword("actions")?;
                let points = self.ident_list("a time point name")?;
                Ok(Stmt::Temporal { points })
            }
            "macro" => {
                let name = self.ident("a macro name")?;
                self.expect(Tok::Eq)?;
                let body = self.formula()?;
                Ok(Stmt::Macro { name, body })
            }
            "incompatible" => {
                let left = self.formula()?;
                self.expect(Tok::Comma)?;
                let right = self.formula()?;
                Ok(Stmt::Incompatible { left, right })
            }
            "rule" => {
                let name = self.ident("a rule name")?;
                self.expect(Tok::Colon)?;
                let form = self.rule_form()?;
                let exception_of = if self.eat_keyword("exception") {
                    self.keyword("to")?;
                    Some(self.ident("a rule name")?)
                } else {
                    None
                };
                Ok(Stmt::Rule { name, form, exception_of })
            }
            "query" => {
                let name = self.ident("a query name")?;
                self.expect(Tok::Colon)?;
                let form = self.rule_form()?;
                Ok(Stmt::Query { name, form })
            }
            _ => unreachable!(),
        }
    }

    /// `occurs only in scope X`, `occurs only inside X`, `only occurs in scope X`.
    fn scope_clause(&mut self) -> Result<Option<Located<String>>, SyntaxError> {
        if self.eat_keyword("occurs") {
            self.keyword("only")?;
        } else if self.eat_keyword("only") {
            self.keyword("occurs")?;
        } else {
            return Ok(None);
        }
        if self.eat_keyword("inside") {
            return Ok(Some(self.ident("an interval name")?));
        }
        self.keyword("in")?;
        self.eat_keyword("scope");
        Ok(Some(self.ident("an interval name")?))
    }

    fn action(&mut self) -> Result<Stmt, SyntaxError> {
        let name = self.ident("an action name")?;
        let mut outputs = Vec::new();
        if self.eat_keyword("output") {
            self.keyword("values")?;
            self.expect(Tok::LBrace)?;
            outputs = self.ident_list("an output label")?;
            self.expect(Tok::RBrace)?;
        }
        let scope = self.scope_clause()?;
        let guard = if self.eat_keyword("requires") {
            self.keyword("that")?;
            Some(self.formula()?)
        } else {
            None
        };
        Ok(Stmt::Action { name, outputs, scope, guard })
    }

    fn interval(&mut self) -> Result<Stmt, SyntaxError> {
        let name = self.ident("an interval name")?;
        self.keyword("delimited")?;
        self.keyword("by")?;
        if !self.eat_keyword("actions") {
            self.keyword("action")?;
        }
        let begin = self.ident("an action name")?;
        let end = match self.peek() {
            Tok::PlusInf => {
                self.bump();
                None
            }
            Tok::Minus => {
                self.bump();
                if *self.peek() == Tok::PlusInf {
                    self.bump();
                    None
                } else {
                    Some(self.ident("an action name or `+inf`")?)
                }
            }
            _ => return Err(self.error("`-` or `+inf`")),
        };
        let scope = self.scope_clause()?;
        let repeatedly = self.eat_keyword("repeatedly");
        Ok(Stmt::Interval { name, begin, end, scope, repeatedly })
    }

    fn counter(&mut self) -> Result<Stmt, SyntaxError> {
        let name = self.ident("a counter name")?;
        let (mut inc, mut dec, mut reset) = (Vec::new(), Vec::new(), Vec::new());
        let mut bound = None;
        loop {
            let list = if self.eat_keyword("increases") {
                &mut inc
            } else if self.eat_keyword("decreases") {
                &mut dec
            } else if self.eat_keyword("resets") {
                &mut reset
            } else if self.eat_keyword("bound") {
                let t = self.here().clone();
                match self.peek() {
                    Tok::Int(n) => {
                        bound = Some(Located { value: *n, line: t.line, column: t.column });
                        self.bump();
                    }
                    _ => return Err(self.error("an integer bound")),
                }
                continue;
            } else {
                break;
            };
            self.keyword("with")?;
            if !self.eat_keyword("actions") {
                self.eat_keyword("action");
            }
            list.extend(self.ident_list("an action name")?);
        }
        Ok(Stmt::Counter { name, inc, dec, reset, bound })
    }

    fn rule_form(&mut self) -> Result<ParsedRuleForm, SyntaxError> {
        let start = self.here().start;
        let op = match self.peek() {
            Tok::Ident(s) if DEONTIC_NAMES.contains(&s.as_str()) => s.clone(),
            _ => return Err(self.error("a deontic operator (`O`, `F`, `OE` or `P`)")),
        };
        let op_tok = self.bump();
        let modality = match op.as_str() {
            "O" => Modality::Obligation,
            "F" => Modality::Prohibition,
            "OE" => Modality::EventualObligation,
            _ => Modality::Permission,
        };
        let reparation = if *self.peek() == Tok::LBrack {
            match modality {
                Modality::Permission => {
                    return Err(SyntaxError::new(
                        op_tok.line,
                        op_tok.column,
                        ErrorKind::ReparationNotAllowed("a permission"),
                    ))
                }
                Modality::EventualObligation => {
                    return Err(SyntaxError::new(
                        op_tok.line,
                        op_tok.column,
                        ErrorKind::ReparationNotAllowed("an eventual obligation"),
                    ))
                }
                _ => {}
            }
            self.bump();
            let r = self.formula()?;
            self.expect(Tok::RBrack)?;
            Some(r)
        } else {
            None
        };
        self.expect(Tok::LParen)?;
        let body = self.formula()?;
        let close = self.expect(Tok::RParen)?;
        let surface = self.src[start..close.end].to_string();
        Ok(ParsedRuleForm { modality, body, reparation, surface })
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let t = self.here().clone();
        let mut positions = Vec::new();
        let form = self.implies(&mut positions)?;
        Ok(Formula { form, positions, line: t.line, column: t.column })
    }

    fn implies(&mut self, pos: &mut TermPositions) -> Result<InnerForm, SyntaxError> {
        let lhs = self.or(pos)?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies(pos)?;
            return Ok(InnerForm::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self, pos: &mut TermPositions) -> Result<InnerForm, SyntaxError> {
        let mut lhs = self.and(pos)?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.and(pos)?;
            lhs = InnerForm::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self, pos: &mut TermPositions) -> Result<InnerForm, SyntaxError> {
        let mut lhs = self.unary(pos)?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary(pos)?;
            lhs = InnerForm::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self, pos: &mut TermPositions) -> Result<InnerForm, SyntaxError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(InnerForm::not(self.unary(pos)?))
            }
            Tok::Diamond => {
                self.bump();
                Ok(InnerForm::eventually(self.unary(pos)?))
            }
            Tok::DiamondIn(i) => {
                let t = self.bump();
                // the interval name is recorded like a term so it can be resolved with a position
                pos.push((t.line, t.column + 3));
                Ok(InnerForm::eventually_in(i, self.unary(pos)?))
            }
            _ => self.primary(pos),
        }
    }

    fn primary(&mut self, pos: &mut TermPositions) -> Result<InnerForm, SyntaxError> {
        let t = self.here().clone();
        match t.tok.clone() {
            Tok::LParen => {
                self.bump();
                let f = self.implies(pos)?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(InnerForm::Top)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(InnerForm::Bottom)
            }
            Tok::Ident(s)
                if DEONTIC_NAMES.contains(&s.as_str())
                    && matches!(self.peek_at(1), Tok::LParen | Tok::LBrack) =>
            {
                Err(SyntaxError::new(t.line, t.column, ErrorKind::NestedDeontic))
            }
            Tok::Ident(s)
                if (s == "happening" || s == "done") && *self.peek_at(1) == Tok::LParen =>
            {
                self.bump();
                self.bump();
                let a = self.ident("an action name")?;
                self.expect(Tok::RParen)?;
                pos.push((a.line, a.column));
                Ok(InnerForm::Atom(if s == "done" {
                    Term::Done(a.value)
                } else {
                    Term::Happening(a.value)
                }))
            }
            Tok::Ident(s) if !STATEMENT_KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                pos.push((t.line, t.column));
                let op = match self.peek() {
                    Tok::Dot => {
                        self.bump();
                        let label = self.ident("an output label")?;
                        return Ok(InnerForm::Atom(Term::Output { action: s, label: label.value }));
                    }
                    Tok::Eq => CmpOp::Eq,
                    Tok::Lt => CmpOp::Lt,
                    Tok::Le => CmpOp::Le,
                    Tok::Gt => CmpOp::Gt,
                    Tok::Ge => CmpOp::Ge,
                    _ => return Ok(InnerForm::Atom(Term::Name(s))),
                };
                self.bump();
                match self.peek() {
                    Tok::Int(n) => {
                        let value = *n;
                        self.bump();
                        Ok(InnerForm::Atom(Term::Counter { counter: s, op, value }))
                    }
                    _ => Err(self.error("an integer literal")),
                }
            }
            _ => Err(self.error("a formula")),
        }
    }
}
