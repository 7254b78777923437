//! Concrete syntax for the three calculi and for session types, plus the
//! `.picl` source-file format.

use crate::name::Name;
use crate::syntax::cmv::Cmv;
use crate::syntax::mix::{Branch, Mix};
use crate::syntax::pi::{Pi, Prefix};
use crate::syntax::{Calculus, Expr, Label, Pol, Qual, Term, Value, View};
use crate::types::{SessionType, TBranch, TyCtx};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Reserved,
    DuplicateLabel,
    IllFormedType,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Num(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMS: [&str; 18] = ["<+", ">>", "(", ")", "{", "}", "<", ">", "!", "?", ".", "+", "|", ",", ":", "&", "=", ";"];

fn lex(src: &str, line0: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, line0, 1);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'' || chars[i] == '$') {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Spanned { tok: Tok::Ident(text), line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Spanned { tok: Tok::Num(text), line, col: start_col });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Spanned { tok: Tok::Sym(s), line, col: start_col });
            }
            None => {
                return Err(ParseError {
                    kind: ParseErrorKind::Syntax,
                    line,
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 17] = [
    "nu", "new", "lin", "un", "if", "then", "else", "tau", "true", "false", "unit", "not", "and", "or", "end", "bool", "rec",
];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    calculus: Calculus,
    defs: HashMap<String, Vec<Spanned>>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(toks: Vec<Spanned>, calculus: Calculus) -> Parser {
        Parser { toks, pos: 0, calculus, defs: HashMap::new() }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { kind, line: s.line, col: s.col, message: message.into() }
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(self.error(ParseErrorKind::Syntax, format!("expected {wanted}, found {}", self.peek())))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.unexpected(&format!("`{k}`"))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    /// Splice a macro body if the next token names a definition.
    fn expand(&mut self) {
        while let Tok::Ident(s) = self.peek().clone() {
            let Some(body) = self.defs.get(&s).cloned() else { return };
            let here = self.toks[self.pos].clone();
            let mut spliced = vec![Spanned { tok: Tok::Sym("("), ..here.clone() }];
            spliced.extend(body);
            spliced.push(Spanned { tok: Tok::Sym(")"), ..here });
            self.toks.splice(self.pos..self.pos + 1, spliced);
        }
    }

    fn name(&mut self) -> PResult<Name> {
        let n = self.any_name()?;
        if self.calculus == Calculus::CmvPlus && n.is_reserved_text() {
            self.pos -= 1;
            return Err(self.error(ParseErrorKind::Reserved, format!("name `{n}` is reserved for the encoder")));
        }
        Ok(n)
    }

    /// Names in value position skip the reserved check: the encoder renames
    /// them apart, and conditions such as `if v` are common.
    fn any_name(&mut self) -> PResult<Name> {
        let n = match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && !s.contains('$') => Name::parse(&s),
            Tok::Num(s) => Name::parse(&s),
            _ => return self.unexpected("a name"),
        };
        self.bump();
        Ok(n)
    }

    fn label(&mut self) -> PResult<Label> {
        let s = match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => s,
            _ => return self.unexpected("a label"),
        };
        let label = match s.split_once('$') {
            None => Label::new(&s),
            Some((text, tag)) if self.calculus != Calculus::CmvPlus && !text.is_empty() => match tag {
                "snd" => Label::new(text).mangled(Pol::Out),
                "rcv" => Label::new(text).mangled(Pol::In),
                _ => return Err(self.error(ParseErrorKind::Syntax, format!("unknown label tag `${tag}`"))),
            },
            Some(_) => return Err(self.error(ParseErrorKind::Syntax, format!("label `{s}` carries an encoder tag"))),
        };
        self.bump();
        Ok(label)
    }

    fn value(&mut self) -> PResult<Value> {
        if self.eat_kw("true") {
            Ok(Value::True)
        } else if self.eat_kw("false") {
            Ok(Value::False)
        } else if self.eat_kw("unit") {
            Ok(Value::Unit)
        } else {
            Ok(Value::Name(self.any_name()?))
        }
    }

    fn qual(&mut self) -> Option<Qual> {
        if self.eat_kw("lin") {
            Some(Qual::Lin)
        } else if self.eat_kw("un") {
            Some(Qual::Un)
        } else {
            None
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.expr_and()?;
        while self.eat_kw("or") {
            let r = self.expr_and()?;
            e = Expr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn expr_and(&mut self) -> PResult<Expr> {
        let mut e = self.expr_not()?;
        while self.eat_kw("and") {
            let r = self.expr_not()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn expr_not(&mut self) -> PResult<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Not(Box::new(self.expr_not()?)));
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        Ok(Expr::Val(self.value()?))
    }

    // ---- pi ----

    fn pi_par(&mut self) -> PResult<Pi> {
        let mut ps = vec![self.pi_unary()?];
        while self.eat_sym("|") {
            ps.push(self.pi_unary()?);
        }
        Ok(if ps.len() == 1 { ps.pop().unwrap() } else { Pi::Par(ps) })
    }

    fn pi_unary(&mut self) -> PResult<Pi> {
        self.expand();
        if self.is_sym("(") && !matches!(self.peek_at(1), Tok::Ident(s) if s == "nu") {
            // A parenthesised process may start a sum: `(P)` then `+` is not allowed.
            return self.pi_tight();
        }
        let nil = matches!(self.peek(), Tok::Num(n) if n == "0")
            && !matches!(self.peek_at(1), Tok::Sym("!") | Tok::Sym("?"));
        if matches!(self.peek(), Tok::Ident(_) | Tok::Num(_)) && !self.is_kw("nu") && !nil {
            let mut bs = vec![self.pi_summand()?];
            while self.eat_sym("+") {
                self.expand();
                bs.push(self.pi_summand()?);
            }
            return Ok(Pi::Sum(bs));
        }
        self.pi_tight()
    }

    fn pi_tight(&mut self) -> PResult<Pi> {
        self.expand();
        if let Tok::Num(n) = self.peek() {
            if n == "0" && !matches!(self.peek_at(1), Tok::Sym("!") | Tok::Sym("?")) {
                self.bump();
                return Ok(Pi::nil());
            }
        }
        if self.eat_sym("!") {
            return Ok(Pi::Bang(Box::new(self.pi_tight()?)));
        }
        if self.eat_sym("(") {
            if self.eat_kw("nu") {
                let mut names = vec![self.name()?];
                while !self.is_sym(")") {
                    self.eat_sym(",");
                    names.push(self.name()?);
                }
                self.expect_sym(")")?;
                let body = self.pi_par()?;
                return Ok(names.into_iter().rev().fold(body, |acc, n| Pi::Res(n, Box::new(acc))));
            }
            let p = self.pi_par()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        Ok(Pi::Sum(vec![self.pi_summand()?]))
    }

    fn pi_summand(&mut self) -> PResult<(Prefix, Pi)> {
        let pre = if self.eat_kw("tau") {
            Prefix::Tau
        } else {
            let y = self.name()?;
            if self.eat_sym("!") {
                if self.eat_sym("<") {
                    let z = self.name()?;
                    self.expect_sym(">")?;
                    Prefix::Out(y, z)
                } else {
                    Prefix::Out(y.clone(), y)
                }
            } else if self.eat_sym("?") {
                if self.eat_sym("(") {
                    let x = self.name()?;
                    self.expect_sym(")")?;
                    Prefix::In(y, x)
                } else {
                    Prefix::In(y, Name::plain("_"))
                }
            } else {
                return self.unexpected("`!` or `?` after a channel");
            }
        };
        let cont = if self.eat_sym(".") { self.pi_tight()? } else { Pi::nil() };
        Ok((pre, cont))
    }

    // ---- mixed sessions ----

    fn mix_par(&mut self) -> PResult<Mix> {
        let mut ps = vec![self.mix_unary()?];
        while self.eat_sym("|") {
            ps.push(self.mix_unary()?);
        }
        Ok(if ps.len() == 1 { ps.pop().unwrap() } else { Mix::Par(ps) })
    }

    fn mix_unary(&mut self) -> PResult<Mix> {
        self.expand();
        if matches!(self.peek(), Tok::Num(n) if n == "0") {
            self.bump();
            return Ok(Mix::Inact);
        }
        if let Some(q) = self.qual() {
            let x = self.name()?;
            self.expect_sym("(")?;
            let mut bs = Vec::new();
            if !self.is_sym(")") {
                bs.push(self.mix_branch()?);
                while self.eat_sym("+") {
                    bs.push(self.mix_branch()?);
                }
            }
            self.expect_sym(")")?;
            return Ok(Mix::Choice(q, x, bs));
        }
        if self.eat_kw("if") {
            let e = self.expr()?;
            self.expect_kw("then")?;
            let p = self.mix_par()?;
            self.expect_kw("else")?;
            let q = self.mix_par()?;
            return Ok(Mix::If(e, Box::new(p), Box::new(q)));
        }
        if self.eat_sym("(") {
            if self.eat_kw("new") {
                let (x, y, t) = self.res_head()?;
                let body = self.mix_par()?;
                return Ok(Mix::Res(x, y, t, Box::new(body)));
            }
            let p = self.mix_par()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        self.unexpected("a process")
    }

    fn res_head(&mut self) -> PResult<(Name, Name, Option<SessionType>)> {
        let x = self.name()?;
        self.eat_sym(",");
        let y = self.name()?;
        let t = if self.eat_sym(":") { Some(self.ty()?) } else { None };
        self.expect_sym(")")?;
        if x == y {
            return Err(self.error(ParseErrorKind::Syntax, "a restriction binds two distinct endpoints"));
        }
        Ok((x, y, t))
    }

    fn mix_branch(&mut self) -> PResult<Branch> {
        let label = self.label()?;
        let (pol, arg) = if self.eat_sym("!") {
            (Pol::Out, self.value()?)
        } else if self.eat_sym("?") {
            let x = if self.eat_sym("(") {
                let x = self.name()?;
                self.expect_sym(")")?;
                x
            } else {
                self.name()?
            };
            (Pol::In, Value::Name(x))
        } else {
            return self.unexpected("`!` or `?` after a label");
        };
        let cont = if self.eat_sym(".") { self.mix_unary()? } else { Mix::Inact };
        Ok(Branch { label, pol, arg, cont })
    }

    // ---- classic sessions ----

    fn cmv_par(&mut self) -> PResult<Cmv> {
        let mut ps = vec![self.cmv_unary()?];
        while self.eat_sym("|") {
            ps.push(self.cmv_unary()?);
        }
        Ok(if ps.len() == 1 { ps.pop().unwrap() } else { Cmv::Par(ps) })
    }

    fn cmv_cont(&mut self) -> PResult<Cmv> {
        if self.eat_sym(".") {
            self.cmv_unary()
        } else {
            Ok(Cmv::Inact)
        }
    }

    fn cmv_unary(&mut self) -> PResult<Cmv> {
        self.expand();
        if matches!(self.peek(), Tok::Num(n) if n == "0") && !matches!(self.peek_at(1), Tok::Sym("!") | Tok::Sym("<+") | Tok::Sym(">>")) {
            self.bump();
            return Ok(Cmv::Inact);
        }
        if let Some(q) = self.qual() {
            let x = self.name()?;
            self.expect_sym("?")?;
            let y = self.name()?;
            let k = self.cmv_cont()?;
            return Ok(Cmv::In(q, x, y, Box::new(k)));
        }
        if self.eat_kw("if") {
            let e = self.expr()?;
            self.expect_kw("then")?;
            let p = self.cmv_par()?;
            self.expect_kw("else")?;
            let q = self.cmv_par()?;
            return Ok(Cmv::If(e, Box::new(p), Box::new(q)));
        }
        if self.eat_sym("(") {
            if self.eat_kw("new") {
                let (x, y, t) = self.res_head()?;
                let body = self.cmv_par()?;
                return Ok(Cmv::Res(x, y, t, Box::new(body)));
            }
            let p = self.cmv_par()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        let x = self.name()?;
        if self.eat_sym("!") {
            let v = self.value()?;
            let k = self.cmv_cont()?;
            return Ok(Cmv::Out(x, v, Box::new(k)));
        }
        if self.eat_sym("<+") {
            let l = self.label()?;
            let k = self.cmv_cont()?;
            return Ok(Cmv::Sel(x, l, Box::new(k)));
        }
        if self.eat_sym(">>") {
            self.expect_sym("{")?;
            let mut m = BTreeMap::new();
            loop {
                let l = self.label()?;
                self.expect_sym(":")?;
                let p = self.cmv_par()?;
                if m.insert(l.clone(), p).is_some() {
                    return Err(self.error(ParseErrorKind::DuplicateLabel, format!("label `{l}` appears twice in a branching")));
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            return Ok(Cmv::Branch(x, m));
        }
        self.unexpected("`!`, `<+` or `>>` after a channel")
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<SessionType> {
        if self.eat_kw("end") {
            return Ok(SessionType::End);
        }
        if self.eat_kw("unit") {
            return Ok(SessionType::Unit);
        }
        if self.eat_kw("bool") {
            return Ok(SessionType::Bool);
        }
        if self.eat_kw("rec") {
            let v = self.tvar()?;
            self.expect_sym(".")?;
            let body = self.ty()?;
            return Ok(SessionType::Rec(v.into(), Box::new(body)));
        }
        if self.eat_sym("(") {
            let t = self.ty()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        if let Some(q) = self.qual() {
            if self.is_sym("!") || self.is_sym("?") {
                let pol = if self.eat_sym("!") { Pol::Out } else {
                    self.bump();
                    Pol::In
                };
                let payload = self.payload()?;
                self.expect_sym(".")?;
                let cont = self.ty()?;
                return Ok(SessionType::Com(q, pol, Box::new(payload), Box::new(cont)));
            }
            let view = if self.eat_sym("+") {
                View::Int
            } else if self.eat_sym("&") {
                View::Ext
            } else {
                return self.unexpected("`+`, `&`, `!` or `?` after a qualifier");
            };
            self.expect_sym("{")?;
            if self.is_sym("}") {
                return Err(self.error(ParseErrorKind::IllFormedType, "choice types need at least one branch"));
            }
            // Decide between a mixed choice type and a plain labelled one.
            let plain = matches!(self.peek_at(1), Tok::Sym(":"));
            if plain {
                let mut m = BTreeMap::new();
                loop {
                    let l = self.label()?;
                    self.expect_sym(":")?;
                    let t = self.ty()?;
                    if m.insert(l.clone(), t).is_some() {
                        return Err(self.error(ParseErrorKind::DuplicateLabel, format!("label `{l}` appears twice")));
                    }
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym("}")?;
                return Ok(SessionType::Choice(q, view, m));
            }
            let mut bs: Vec<TBranch> = Vec::new();
            loop {
                let label = self.label()?;
                let pol = if self.eat_sym("!") {
                    Pol::Out
                } else if self.eat_sym("?") {
                    Pol::In
                } else {
                    return self.unexpected("`!` or `?` in a branch type");
                };
                let payload = self.payload()?;
                self.expect_sym(".")?;
                let cont = self.ty()?;
                if bs.iter().any(|b| b.label == label && b.pol == pol) {
                    return Err(self.error(ParseErrorKind::DuplicateLabel, format!("branch `{label}{pol}` appears twice")));
                }
                bs.push(TBranch { label, pol, payload, cont });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
            return Ok(SessionType::Mix(q, view, bs));
        }
        Ok(SessionType::Var(self.tvar()?.into()))
    }

    fn payload(&mut self) -> PResult<SessionType> {
        if self.is_sym("(") || self.is_kw("end") || self.is_kw("unit") || self.is_kw("bool") {
            return self.ty();
        }
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => Ok(SessionType::Var(self.tvar()?.into())),
            _ => self.unexpected("an atomic or parenthesised payload type"),
        }
    }

    fn tvar(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && !s.contains('$') => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a type variable"),
        }
    }

    fn term(&mut self) -> PResult<Term> {
        Ok(match self.calculus {
            Calculus::Pi => Term::Pi(self.pi_par()?),
            Calculus::CmvPlus => Term::Mix(self.mix_par()?),
            Calculus::Cmv => Term::Cmv(self.cmv_par()?),
        })
    }
}

fn run<T>(src: &str, calculus: Calculus, f: impl FnOnce(&mut Parser) -> PResult<T>) -> PResult<T> {
    let mut p = Parser::new(lex(src, 1)?, calculus);
    let out = f(&mut p)?;
    p.expect_eof()?;
    Ok(out)
}

pub fn parse(src: &str, calculus: Calculus) -> Result<Term, ParseError> {
    run(src, calculus, |p| p.term())
}

pub fn parse_pi(src: &str) -> Result<Pi, ParseError> {
    run(src, Calculus::Pi, |p| p.pi_par())
}

pub fn parse_mix(src: &str) -> Result<Mix, ParseError> {
    run(src, Calculus::CmvPlus, |p| p.mix_par())
}

pub fn parse_cmv(src: &str) -> Result<Cmv, ParseError> {
    run(src, Calculus::Cmv, |p| p.cmv_par())
}

/// Parse a closed, contractive, well-formed session type.
pub fn parse_type(src: &str) -> Result<SessionType, ParseError> {
    let t = run(src, Calculus::Cmv, |p| p.ty())?;
    t.check_wf().map_err(|m| ParseError { kind: ParseErrorKind::IllFormedType, line: 1, col: 1, message: m })?;
    Ok(t)
}

/// A parsed `.picl` file.
#[derive(Clone, Debug)]
pub struct SourceFile {
    pub calculus: Calculus,
    pub free: TyCtx,
    pub term: Term,
}

/// Parse a `.picl` file. Header lines start with `#`: `#calculus pi|cmv+|cmv`,
/// `#free x : T`, `#def NAME = TERM`. The remaining lines form the term.
/// `default` applies when the file has no `#calculus` line.
pub fn parse_file(src: &str, default: Option<Calculus>) -> Result<SourceFile, ParseError> {
    let mut calculus = default;
    let mut free = Vec::new();
    let mut defs: Vec<(String, String, usize)> = Vec::new();
    let mut body = String::new();
    let mut body_line = None;
    for (i, line) in src.lines().enumerate() {
        let lineno = i + 1;
        let t = line.trim();
        let bad = |m: String| ParseError { kind: ParseErrorKind::Syntax, line: lineno, col: 1, message: m };
        if let Some(rest) = t.strip_prefix("#calculus") {
            calculus = Some(rest.trim().parse().map_err(bad)?);
        } else if let Some(rest) = t.strip_prefix("#free") {
            let (n, ty) = rest.split_once(':').ok_or_else(|| bad("expected `#free name : type`".into()))?;
            free.push((n.trim().to_string(), ty.trim().to_string(), lineno));
        } else if let Some(rest) = t.strip_prefix("#def") {
            let (n, term) = rest.split_once('=').ok_or_else(|| bad("expected `#def NAME = TERM`".into()))?;
            defs.push((n.trim().to_string(), term.trim().to_string(), lineno));
        } else if t.starts_with('#') {
            return Err(bad(format!("unknown directive `{t}`")));
        } else {
            if body_line.is_none() && !t.is_empty() {
                body_line = Some(lineno);
            }
            if body_line.is_some() {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    let calculus = calculus.ok_or(ParseError {
        kind: ParseErrorKind::Syntax,
        line: 1,
        col: 1,
        message: "missing `#calculus` header".into(),
    })?;
    let mut ctx = TyCtx::new();
    for (n, ty, line) in free {
        let name = Name::parse(&n);
        let mut t = parse_type(&ty).map_err(|e| ParseError { line, ..e })?;
        if let SessionType::Var(_) = t {
            t = parse_type(&ty)?;
        }
        ctx = ctx
            .add(&name, &t)
            .map_err(|e| ParseError { kind: ParseErrorKind::Syntax, line, col: 1, message: e.to_string() })?;
    }
    let mut def_toks: HashMap<String, Vec<Spanned>> = HashMap::new();
    for (n, text, line) in defs {
        let mut toks = lex(&text, line)?;
        toks.pop();
        // Expand earlier definitions inside this one.
        let mut expanded = Vec::new();
        for t in toks {
            match &t.tok {
                Tok::Ident(s) if def_toks.contains_key(s) => {
                    expanded.push(Spanned { tok: Tok::Sym("("), ..t.clone() });
                    expanded.extend(def_toks[s].iter().cloned());
                    expanded.push(Spanned { tok: Tok::Sym(")"), ..t });
                }
                _ => expanded.push(t),
            }
        }
        def_toks.insert(n, expanded);
    }
    let mut p = Parser::new(lex(&body, body_line.unwrap_or(1))?, calculus);
    p.defs = def_toks;
    let term = p.term()?;
    p.expect_eof()?;
    let declared: BTreeSet<Name> = ctx.names().cloned().collect();
    if calculus != Calculus::Pi && !declared.is_empty() {
        if let Some(n) = term.free_names().into_iter().find(|n| !declared.contains(n)) {
            return Err(ParseError {
                kind: ParseErrorKind::Syntax,
                line: body_line.unwrap_or(1),
                col: 1,
                message: format!("free name `{n}` is not declared with `#free`"),
            });
        }
    }
    Ok(SourceFile { calculus, free: ctx, term })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::alpha_eq;

    #[test]
    fn pi_examples() {
        let p = parse_pi("a!<z>.0 + b?(x).0").unwrap();
        assert!(matches!(&p, Pi::Sum(bs) if bs.len() == 2));
        assert_eq!(p.to_string(), "a!<z> + b?(x)");
        let q = parse_pi("(nu a) a! | a?.1!").unwrap();
        assert_eq!(q.to_string(), "(nu a) a!<a> | a?(_).1!<1>");
        let r = parse_pi("!(a?(x).x!<x>) | tau.0").unwrap();
        assert!(alpha_eq(&parse_pi(&r.to_string()).unwrap(), &r));
    }

    #[test]
    fn mix_examples() {
        let p = parse_mix("lin x (l!true.0 + l?(z).0)").unwrap();
        match &p {
            Mix::Choice(Qual::Lin, x, bs) => {
                assert_eq!(x.to_string(), "x");
                assert_eq!(bs.len(), 2);
                assert_eq!(bs[1].arg, Value::Name(Name::parse("z")));
            }
            _ => panic!("{p:?}"),
        }
        let q = parse_mix("(new x y) if v then 0 else 0").unwrap();
        assert!(matches!(q, Mix::Res(_, _, None, ref b) if matches!(**b, Mix::If(..))));
        assert_eq!(parse_mix("lin c(l!true)").unwrap_err().kind, ParseErrorKind::Reserved);
    }

    #[test]
    fn cmv_examples() {
        let p = parse_cmv("(new x y : lin !bool.end) x!true | lin y?z.0").unwrap();
        assert_eq!(p.to_string(), "(new x y : lin !bool.end) x!true | lin y?z");
        let e = parse_cmv("y>>{a: 0, a: 0}").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateLabel);
        let sel = parse_cmv("c<+l$snd.d!true").unwrap();
        assert_eq!(sel.to_string(), "c<+l$snd.d!true");
    }

    #[test]
    fn type_examples() {
        assert_eq!(parse_type("end").unwrap(), SessionType::End);
        let t1 = parse_type("lin +{l!bool.end, l?bool.end}").unwrap();
        assert_eq!(t1.to_string(), "lin +{l!bool.end, l?bool.end}");
        assert!(parse_type("rec t. un +{l!bool.t}").is_ok());
        assert!(parse_type("rec t. t").is_err());
        assert!(parse_type("lin +{}").is_err());
        assert!(parse_type("lin +{l!bool.end, l!unit.end}").is_err());
        let c = parse_type("un !(lin &{a: end}).end").unwrap();
        assert_eq!(c.to_string(), "un !(lin &{a: end}).end");
    }

    #[test]
    fn source_files() {
        let src = "#calculus cmv+\n#free o : rec t. un +{done!unit.t}\n#def S = lin o(done!unit)\nS | S\n";
        let f = parse_file(src, None).unwrap();
        assert_eq!(f.calculus, Calculus::CmvPlus);
        assert_eq!(f.term.to_string(), "lin o(done!unit) | lin o(done!unit)");
        assert!(parse_file("#calculus cmv+\n#free o : end\nlin p(l!true)", None).is_err());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_mix("lin x(l!true\n + ").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
