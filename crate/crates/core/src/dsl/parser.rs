//! Recursive-descent parser for `.lr` files.
//!
//! Errors are collected as diagnostics. After an error inside a component
//! body the parser skips to the next `;` or closing `}` of the current body;
//! at top level it skips to the next declaration keyword.

use super::lexer::{lex, Tok, Token};
use crate::diag::{Code, Diagnostic, Span};
use crate::model::{
    Binding, Child, CmpOp, Component, ConditionExpr, ConditionPort, DeviceCall, Endpoint, Expr, FrameValue,
    Level, Owner, ParamType, Parameter, PortKind, Reference, SourceFile, Transition, UpdateBinding, UseDecl,
    Value,
};
use crate::model::BinOp;
use std::path::Path;

const KEYWORDS: &[&str] = &[
    "task", "skill", "action", "component", "use", "uses", "as", "extends", "start", "end", "when", "on",
    "self", "pre", "post", "set", "exec", "until", "yields", "result", "and", "or", "not", "true", "false",
    "frame", "num", "bool", "string", "vec6",
];

pub(crate) fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Marker for an already-reported syntax error.
struct Fail;

type PResult<T> = Result<T, Fail>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

pub fn parse(text: &str, file: impl AsRef<Path>) -> (SourceFile, Vec<Diagnostic>) {
    let file = file.as_ref();
    let (toks, diags) = lex(text, file);
    let mut p = Parser { toks, pos: 0, diags };
    let sf = p.model();
    (sf, p.diags)
}

pub fn parse_condition(text: &str) -> Result<ConditionExpr, Vec<Diagnostic>> {
    let file = Path::new("<condition>");
    let (toks, diags) = lex(text, file);
    let mut p = Parser { toks, pos: 0, diags };
    let res = p.cond();
    if let Ok(c) = &res {
        if !p.at(&Tok::Eof) {
            let t = p.peek().clone();
            p.error(&t.span, format!("unexpected {} after condition", t.tok.describe()));
        } else if p.diags.is_empty() {
            return Ok(c.clone());
        }
    }
    Err(p.diags)
}

pub fn parse_expr(text: &str) -> Result<Expr, Vec<Diagnostic>> {
    let file = Path::new("<expr>");
    let (toks, diags) = lex(text, file);
    let mut p = Parser { toks, pos: 0, diags };
    let res = p.expr();
    if let Ok(e) = &res {
        if !p.at(&Tok::Eof) {
            let t = p.peek().clone();
            p.error(&t.span, format!("unexpected {} after expression", t.tok.describe()));
        } else if p.diags.is_empty() {
            return Ok(e.clone());
        }
    }
    Err(p.diags)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    fn error(&mut self, span: &Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(Code::E000, span.clone(), msg));
    }

    fn unexpected<T>(&mut self, what: &str) -> PResult<T> {
        let t = self.peek().clone();
        self.error(&t.span, format!("expected {what}, found {}", t.tok.describe()));
        Err(Fail)
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if self.at(&t) {
            Ok(self.advance().span)
        } else {
            let what = Tok::describe(&t);
            self.unexpected(&what)
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.advance().span)
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match &self.peek().tok {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                Ok((s, self.advance().span))
            }
            _ => self.unexpected("identifier"),
        }
    }

    /// IDENT ("." IDENT)*
    fn qname(&mut self) -> PResult<(String, Span)> {
        let (mut name, start) = self.ident()?;
        while self.at(&Tok::Dot) {
            self.advance();
            let (seg, _) = self.ident()?;
            name.push('.');
            name.push_str(&seg);
        }
        Ok((name, start.to(&self.prev_span())))
    }

    /// IDENT ("." (IDENT | INT))*, used for channel and EM paths.
    fn path(&mut self) -> PResult<(Vec<String>, Span)> {
        let (first, start) = self.ident()?;
        let mut segs = vec![first];
        while self.at(&Tok::Dot) {
            self.advance();
            match self.peek().tok.clone() {
                Tok::Ident(s) if !is_keyword(&s) => {
                    self.advance();
                    segs.push(s);
                }
                Tok::Number(_, raw) if raw.chars().all(|c| c.is_ascii_digit()) => {
                    self.advance();
                    segs.push(raw);
                }
                _ => return self.unexpected("path segment"),
            }
        }
        Ok((segs, start.to(&self.prev_span())))
    }

    // ---- top level ----

    fn model(&mut self) -> SourceFile {
        let mut sf = SourceFile::default();
        loop {
            if self.at(&Tok::Eof) {
                break;
            }
            let res = if self.at_kw("use") {
                self.use_decl().map(|u| sf.uses.push(u))
            } else if self.at_level_kw() {
                self.component().map(|c| sf.components.push(c))
            } else {
                self.unexpected("`use` or a component declaration")
            };
            if res.is_err() {
                self.sync_top();
            }
        }
        sf
    }

    fn sync_top(&mut self) {
        // Skip at least one token, then stop at the next declaration keyword
        // outside any braces.
        let mut depth = 0i32;
        let mut first = true;
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::Ident(s)
                    if depth <= 0
                        && !first
                        && matches!(s.as_str(), "use" | "task" | "skill" | "action" | "component") =>
                {
                    return
                }
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth -= 1,
                _ => {}
            }
            first = false;
            self.advance();
        }
    }

    fn use_decl(&mut self) -> PResult<UseDecl> {
        let start = self.expect_kw("use")?;
        let path = match self.peek().tok.clone() {
            Tok::Str(s) => {
                self.advance();
                s
            }
            _ => return self.unexpected("string path"),
        };
        self.expect(Tok::Semi)?;
        Ok(UseDecl { path, span: start.to(&self.prev_span()) })
    }

    fn at_level_kw(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if matches!(s.as_str(), "task" | "skill" | "action" | "component"))
    }

    fn level(&mut self) -> PResult<Level> {
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.unexpected("level keyword"),
        };
        self.advance();
        Ok(match kw.as_str() {
            "task" => Level::Task,
            "skill" => Level::Skill,
            "action" => Level::Action,
            "component" => match self.peek().tok.clone() {
                Tok::Number(v, raw) if raw.chars().all(|c| c.is_ascii_digit()) && v <= u32::MAX as f64 => {
                    self.advance();
                    Level::Generic(v as u32)
                }
                _ => return self.unexpected("level number"),
            },
            _ => return self.unexpected("level keyword"),
        })
    }

    fn component(&mut self) -> PResult<Component> {
        let start = self.peek().span.clone();
        let level = self.level()?;
        let (name, _) = self.ident()?;
        let mut comp = Component::new(&name, level);
        if self.at(&Tok::LParen) {
            self.advance();
            loop {
                comp.params.push(self.param()?);
                if self.at(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        if self.at_kw("extends") {
            self.advance();
            comp.extends = Some(self.qname()?.0);
        }
        self.expect(Tok::LBrace)?;
        loop {
            if self.at(&Tok::RBrace) {
                self.advance();
                break;
            }
            if self.at(&Tok::Eof) {
                let span = self.peek().span.clone();
                self.error(&span, format!("unclosed body of `{name}`"));
                break;
            }
            if self.item(&mut comp).is_err() {
                self.sync_item();
            }
        }
        comp.span = start.to(&self.prev_span());
        Ok(comp)
    }

    /// Skip to just after the next `;` of this body, or up to (not past) the
    /// `}` that closes it.
    fn sync_item(&mut self) {
        let mut depth = 0i32;
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => {
                    self.advance();
                    return;
                }
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.advance();
                        return;
                    }
                }
                _ => {}
            }
            self.advance();
        }
    }

    fn param(&mut self) -> PResult<Parameter> {
        let start = self.peek().span.clone();
        let ptype = match &self.peek().tok {
            Tok::Ident(s) => match ParamType::from_keyword(s) {
                Some(t) => t,
                None => return self.unexpected("parameter type"),
            },
            _ => return self.unexpected("parameter type"),
        };
        self.advance();
        let (name, _) = self.ident()?;
        let default = if self.at(&Tok::Assign) {
            self.advance();
            Some(self.literal()?)
        } else {
            None
        };
        Ok(Parameter { name, ptype, default, span: start.to(&self.prev_span()) })
    }

    fn literal(&mut self) -> PResult<Value> {
        match self.peek().tok.clone() {
            Tok::Minus => {
                self.advance();
                match self.peek().tok.clone() {
                    Tok::Number(v, _) => {
                        self.advance();
                        Ok(Value::Num(-v))
                    }
                    _ => self.unexpected("number"),
                }
            }
            Tok::Number(v, _) => {
                self.advance();
                Ok(Value::Num(v))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Value::Str(s))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Value::Bool(s == "true"))
            }
            Tok::LBracket => Ok(Value::Vec(self.num_list()?)),
            Tok::Ident(s) if s == "frame" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let reference = self.string_lit()?;
                self.expect(Tok::Comma)?;
                let span = self.peek().span.clone();
                let list = self.num_list()?;
                if list.len() != 6 {
                    self.error(&span, "frame offset must have 6 entries");
                    return Err(Fail);
                }
                let link = if self.at(&Tok::Comma) {
                    self.advance();
                    Some(self.string_lit()?)
                } else {
                    None
                };
                self.expect(Tok::RParen)?;
                let mut offset = [0.0; 6];
                offset.copy_from_slice(&list);
                Ok(Value::Frame(FrameValue { reference, offset, link }))
            }
            _ => self.unexpected("literal"),
        }
    }

    fn string_lit(&mut self) -> PResult<String> {
        match self.peek().tok.clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("string"),
        }
    }

    fn num_list(&mut self) -> PResult<Vec<f64>> {
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        loop {
            let neg = if self.at(&Tok::Minus) {
                self.advance();
                true
            } else {
                false
            };
            match self.peek().tok.clone() {
                Tok::Number(v, _) => {
                    self.advance();
                    out.push(if neg { -v } else { v });
                }
                _ => return self.unexpected("number"),
            }
            if self.at(&Tok::Comma) {
                self.advance();
            } else {
                break;
            }
        }
        self.expect(Tok::RBracket)?;
        Ok(out)
    }

    fn item(&mut self, comp: &mut Component) -> PResult<()> {
        let kw = match &self.peek().tok {
            Tok::Ident(s) => s.clone(),
            _ => return self.unexpected("declaration"),
        };
        match kw.as_str() {
            "start" | "end" => {
                let port = self.port_decl()?;
                comp.ports.push(port);
            }
            "task" | "skill" | "action" | "component" => {
                let child = self.component()?;
                comp.children.push(Child::Inline(child));
            }
            "uses" => {
                let r = self.ref_decl()?;
                comp.children.push(Child::Reference(r));
            }
            "on" => {
                let t = self.trans_decl()?;
                comp.transitions.push(t);
            }
            "exec" => {
                let span = self.peek().span.clone();
                let e = self.exec_decl()?;
                if comp.exec.is_some() {
                    self.error(&span, "component declares more than one `exec`");
                } else {
                    comp.exec = Some(e);
                }
            }
            _ => return self.unexpected("declaration"),
        }
        Ok(())
    }

    fn port_decl(&mut self) -> PResult<ConditionPort> {
        let start = self.peek().span.clone();
        let kind = if self.at_kw("start") { PortKind::Start } else { PortKind::End };
        self.advance();
        let (name, _) = self.ident()?;
        let guard = if self.at_kw("when") {
            self.advance();
            Some(self.cond()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(ConditionPort { name, kind, guard, span: start.to(&self.prev_span()) })
    }

    fn ref_decl(&mut self) -> PResult<Reference> {
        let start = self.expect_kw("uses")?;
        let (target, _) = self.qname()?;
        self.expect_kw("as")?;
        let (alias, _) = self.ident()?;
        let mut args = Vec::new();
        if self.at(&Tok::LParen) {
            self.advance();
            loop {
                args.push(self.arg_bind()?);
                if self.at(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::Semi)?;
        Ok(Reference { target, alias, args, span: start.to(&self.prev_span()) })
    }

    fn arg_bind(&mut self) -> PResult<Binding> {
        let (name, start) = self.ident()?;
        self.expect(Tok::Assign)?;
        let value = self.expr()?;
        Ok(Binding { name, value, span: start.to(&self.prev_span()) })
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        let owner = if self.at_kw("self") {
            self.advance();
            Owner::SelfRef
        } else {
            Owner::Child(self.ident()?.0)
        };
        self.expect(Tok::Dot)?;
        let (port, _) = self.ident()?;
        Ok(Endpoint { owner, port })
    }

    fn trans_decl(&mut self) -> PResult<Transition> {
        let start = self.expect_kw("on")?;
        let source = self.endpoint()?;
        self.expect(Tok::Arrow)?;
        let target = self.endpoint()?;
        let pre = if self.at_kw("pre") {
            self.advance();
            Some(self.cond()?)
        } else {
            None
        };
        let post = if self.at_kw("post") {
            self.advance();
            Some(self.cond()?)
        } else {
            None
        };
        let mut bindings = Vec::new();
        if self.at_kw("set") {
            self.advance();
            loop {
                bindings.push(self.arg_bind()?);
                if self.at(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(Transition { source, target, pre, post, bindings, span: start.to(&self.prev_span()) })
    }

    fn exec_decl(&mut self) -> PResult<DeviceCall> {
        let start = self.expect_kw("exec")?;
        let (path, pspan) = self.path()?;
        if path.len() != 2 {
            self.error(&pspan, "device call must have the form `device.command(...)`");
            return Err(Fail);
        }
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.at(&Tok::RParen) {
            loop {
                args.push(self.arg_bind()?);
                if self.at(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let stop = if self.at_kw("until") {
            self.advance();
            Some(self.cond()?)
        } else {
            None
        };
        let mut updates = Vec::new();
        if self.at_kw("yields") {
            self.advance();
            loop {
                let (em_path, ustart) = self.path()?;
                self.expect(Tok::ColonAssign)?;
                self.expect_kw("result")?;
                self.expect(Tok::Dot)?;
                let (field, _) = self.ident()?;
                updates.push(UpdateBinding { em_path, field, span: ustart.to(&self.prev_span()) });
                if self.at(&Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(DeviceCall {
            device: path[0].clone(),
            command: path[1].clone(),
            args,
            stop,
            updates,
            span: start.to(&self.prev_span()),
        })
    }

    // ---- conditions: not > and > or ----

    fn cond(&mut self) -> PResult<ConditionExpr> {
        let mut lhs = self.cond_and()?;
        while self.at_kw("or") {
            self.advance();
            let rhs = self.cond_and()?;
            lhs = ConditionExpr::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> PResult<ConditionExpr> {
        let mut lhs = self.cond_not()?;
        while self.at_kw("and") {
            self.advance();
            let rhs = self.cond_not()?;
            lhs = ConditionExpr::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn cond_not(&mut self) -> PResult<ConditionExpr> {
        if self.at_kw("not") {
            self.advance();
            return Ok(ConditionExpr::not(self.cond_not()?));
        }
        self.cond_atom()
    }

    fn cond_atom(&mut self) -> PResult<ConditionExpr> {
        match self.peek().tok.clone() {
            Tok::LParen => {
                self.advance();
                let c = self.cond()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(ConditionExpr::Const(s == "true"))
            }
            Tok::Ident(_) => {
                let (segs, _) = self.path()?;
                let channel = segs.join(".");
                let op = match self.peek().tok {
                    Tok::Lt => CmpOp::Lt,
                    Tok::Le => CmpOp::Le,
                    Tok::Gt => CmpOp::Gt,
                    Tok::Ge => CmpOp::Ge,
                    Tok::EqEq => CmpOp::Eq,
                    Tok::Ne => CmpOp::Ne,
                    _ => return Ok(ConditionExpr::Channel(channel)),
                };
                self.advance();
                let neg = if self.at(&Tok::Minus) {
                    self.advance();
                    true
                } else {
                    false
                };
                match self.peek().tok.clone() {
                    Tok::Number(v, _) => {
                        self.advance();
                        Ok(ConditionExpr::Compare { channel, op, value: if neg { -v } else { v } })
                    }
                    _ => self.unexpected("numeric literal"),
                }
            }
            _ => self.unexpected("condition"),
        }
    }

    // ---- value expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at(&Tok::Minus) {
            self.advance();
            // A minus directly in front of a number literal folds into it.
            if let Tok::Number(v, _) = self.peek().tok.clone() {
                self.advance();
                return Ok(Expr::Num(-v));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().tok.clone() {
            Tok::Number(v, _) => {
                self.advance();
                Ok(Expr::Num(v))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.advance();
                Ok(Expr::Bool(s == "true"))
            }
            Tok::Ident(s) if s == "frame" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let reference = self.expr()?;
                self.expect(Tok::Comma)?;
                let offset = self.expr()?;
                let link = if self.at(&Tok::Comma) {
                    self.advance();
                    Some(Box::new(self.expr()?))
                } else {
                    None
                };
                self.expect(Tok::RParen)?;
                Ok(Expr::Frame { reference: Box::new(reference), offset: Box::new(offset), link })
            }
            Tok::Ident(_) => Ok(Expr::Param(self.ident()?.0)),
            Tok::LBracket => {
                self.advance();
                let mut items = vec![self.expr()?];
                while self.at(&Tok::Comma) {
                    self.advance();
                    items.push(self.expr()?);
                }
                self.expect(Tok::RBracket)?;
                Ok(Expr::List(items))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.unexpected("expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skill_example_parses_clean() {
        let src = "skill S { start s0; end done; action A { start a; end b; exec tool.release() until tool.width >= 0.05; } on self.s0 -> A.a; on A.b -> self.done; }";
        let (sf, d) = parse(src, "s.lr");
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(sf.components.len(), 1);
        let s = &sf.components[0];
        assert_eq!(s.level, Level::Skill);
        assert_eq!(s.children.len(), 1);
        assert_eq!(s.transitions.len(), 2);
        let Child::Inline(a) = &s.children[0] else { panic!() };
        let exec = a.exec.as_ref().unwrap();
        assert_eq!((exec.device.as_str(), exec.command.as_str()), ("tool", "release"));
        assert_eq!(exec.stop, Some(ConditionExpr::compare("tool.width", CmpOp::Ge, 0.05)));
    }

    #[test]
    fn missing_semicolon_recovers() {
        let (sf, d) = parse("task T { start s0 }\nskill S { start a; end b; }", "t.lr");
        assert!(!d.is_empty());
        assert!(d.iter().all(|d| d.code == Code::E000));
        // Both declarations survive recovery.
        assert_eq!(sf.components.len(), 2);
        assert_eq!(sf.components[1].ports.len(), 2);
    }

    #[test]
    fn garbage_between_components_recovers() {
        let (sf, d) = parse("skill A { start a; end b; } ??? 42 skill B { start a; end b; }", "t.lr");
        assert!(!d.is_empty());
        assert_eq!(sf.components.len(), 2);
    }

    #[test]
    fn condition_precedence() {
        let c = parse_condition("a.x < 1 or b.y < 2 and not c.z == 0").unwrap();
        assert_eq!(
            c,
            ConditionExpr::or(
                ConditionExpr::compare("a.x", CmpOp::Lt, 1.0),
                ConditionExpr::and(
                    ConditionExpr::compare("b.y", CmpOp::Lt, 2.0),
                    ConditionExpr::not(ConditionExpr::compare("c.z", CmpOp::Eq, 0.0)),
                ),
            )
        );
    }

    #[test]
    fn condition_torque_threshold() {
        assert_eq!(
            parse_condition("robot.torque.z >= 0.32").unwrap(),
            ConditionExpr::compare("robot.torque.z", CmpOp::Ge, 0.32)
        );
        assert_eq!(parse_condition("true").unwrap(), ConditionExpr::Const(true));
    }

    #[test]
    fn parentheses_override() {
        let c = parse_condition("(a or b) and c").unwrap();
        assert_eq!(
            c,
            ConditionExpr::and(
                ConditionExpr::or(ConditionExpr::Channel("a".into()), ConditionExpr::Channel("b".into())),
                ConditionExpr::Channel("c".into()),
            )
        );
    }

    #[test]
    fn malformed_condition_is_an_error() {
        assert!(parse_condition("a.x >=").is_err());
        assert!(parse_condition("a.x >= b").is_err());
        assert!(parse_condition("and").is_err());
        assert!(parse_condition("a b").is_err());
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_expr("-3.5").unwrap(), Expr::Num(-3.5));
        assert_eq!(parse_expr("-x").unwrap(), Expr::Neg(Box::new(Expr::Param("x".into()))));
        assert_eq!(
            parse_expr("-2 * x").unwrap(),
            Expr::Binary(BinOp::Mul, Box::new(Expr::Num(-2.0)), Box::new(Expr::Param("x".into())))
        );
    }

    #[test]
    fn spans_cover_components() {
        let (sf, _) = parse("\n  skill S {\n start a;\n end b;\n}\n", "t.lr");
        let s = &sf.components[0];
        assert_eq!((s.span.start_line, s.span.start_col), (2, 3));
        assert_eq!(s.span.end_line, 5);
        assert_eq!(s.ports[1].span.start_line, 4);
    }
}
