use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::expr::{Assignment, CmpOp, Expr, IntTy, Ty, Value, VarEnv};
use crate::fbd::{ArithOp, Block, BlockKind, Fbd, Operand};
use crate::model::{validate, ActionBlock, Effect, SfcModel, Transition, VarDecl};
use crate::property::{Formula, Property};

#[derive(Debug, Clone)]
enum Surf {
    Int(u64),
    Bool(bool),
    Ident(String),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Cmp(CmpOp, Box<Node>, Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Not(Box<Node>),
    Step(String),
    Action(String),
    ActionsWithin(BTreeSet<String>),
    StepsWithin(BTreeSet<String>),
}

#[derive(Debug, Clone)]
struct Node {
    kind: Surf,
    line: usize,
    col: usize,
}

impl Node {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col, msg)
    }

    fn has_activity(&self) -> bool {
        match &self.kind {
            Surf::Step(_) | Surf::Action(_) | Surf::ActionsWithin(_) | Surf::StepsWithin(_) => true,
            Surf::Int(_) | Surf::Bool(_) | Surf::Ident(_) => false,
            Surf::Not(a) => a.has_activity(),
            Surf::Add(a, b)
            | Surf::Sub(a, b)
            | Surf::Mul(a, b)
            | Surf::Cmp(_, a, b)
            | Surf::And(a, b)
            | Surf::Or(a, b) => a.has_activity() || b.has_activity(),
        }
    }

    fn to_expr(&self) -> Result<Expr, ParseError> {
        let bx = |n: &Node| n.to_expr().map(Box::new);
        Ok(match &self.kind {
            Surf::Int(v) => Expr::Int(*v),
            Surf::Bool(b) => Expr::Bool(*b),
            Surf::Ident(v) => Expr::Var(v.clone()),
            Surf::Add(a, b) => Expr::Add(bx(a)?, bx(b)?),
            Surf::Sub(a, b) => Expr::Sub(bx(a)?, bx(b)?),
            Surf::Mul(a, b) => match (&a.kind, &b.kind) {
                (Surf::Int(c), _) => Expr::Mul(*c, bx(b)?),
                (_, Surf::Int(c)) => Expr::Mul(*c, bx(a)?),
                _ => return Err(self.err("multiplication requires a constant factor")),
            },
            // Width is fixed later by elaboration.
            Surf::Cmp(op, a, b) => Expr::Cmp(*op, IntTy::U32, bx(a)?, bx(b)?),
            Surf::And(a, b) => Expr::And(bx(a)?, bx(b)?),
            Surf::Or(a, b) => Expr::Or(bx(a)?, bx(b)?),
            Surf::Not(a) => Expr::Not(bx(a)?),
            Surf::Step(_) | Surf::Action(_) | Surf::ActionsWithin(_) | Surf::StepsWithin(_) => {
                return Err(self.err("step/action atoms are only allowed in properties"))
            }
        })
    }

    fn to_bool_expr(&self, env: &VarEnv) -> Result<Expr, ParseError> {
        let e = self.to_expr()?.elaborate(env).map_err(|e| self.err(e.to_string()))?;
        e.check_bool(env).map_err(|e| self.err(e.to_string()))?;
        Ok(e)
    }

    fn to_formula(&self, model: &SfcModel, env: &VarEnv) -> Result<Formula, ParseError> {
        if let Surf::Bool(b) = self.kind {
            return Ok(Formula::Const(b));
        }
        if !self.has_activity() {
            return Ok(Formula::Arith(self.to_bool_expr(env)?));
        }
        let check_step = |s: &String| {
            if model.has_step(s) {
                Ok(())
            } else {
                Err(self.err(format!("unknown step `{s}`")))
            }
        };
        let check_action = |a: &String| {
            if model.has_action(a) {
                Ok(())
            } else {
                Err(self.err(format!("unknown action `{a}`")))
            }
        };
        Ok(match &self.kind {
            Surf::Step(s) => {
                check_step(s)?;
                Formula::Step(s.clone())
            }
            Surf::Action(a) => {
                check_action(a)?;
                Formula::Action(a.clone())
            }
            Surf::ActionsWithin(set) => {
                set.iter().try_for_each(check_action)?;
                Formula::ActionsWithin(set.clone())
            }
            Surf::StepsWithin(set) => {
                set.iter().try_for_each(check_step)?;
                Formula::StepsWithin(set.clone())
            }
            Surf::And(a, b) => Formula::and(a.to_formula(model, env)?, b.to_formula(model, env)?),
            Surf::Or(a, b) => Formula::or(a.to_formula(model, env)?, b.to_formula(model, env)?),
            Surf::Not(a) => Formula::not(a.to_formula(model, env)?),
            _ => return Err(self.err("step/action atoms cannot appear inside arithmetic")),
        })
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0 })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn here(&self, msg: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::new(t.line, t.col, msg)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            Err(self.here(format!("expected {}, found {}", tok.describe(), self.peek().tok.describe())))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.here(format!("expected `{kw}`, found {}", self.peek().tok.describe())))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) => {
                self.bump();
                Ok((s, t.line, t.col))
            }
            other => Err(self.here(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn int(&mut self) -> Result<u64, ParseError> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            ref other => Err(self.here(format!("expected integer, found {}", other.describe()))),
        }
    }

    /// Accepts `kw` or `[kw]`.
    fn flag(&mut self, kw: &str) -> Result<bool, ParseError> {
        if self.eat_kw(kw) {
            return Ok(true);
        }
        if self.peek().tok == Tok::LBracket && matches!(self.peek_at(1), Tok::Ident(s) if s == kw) {
            self.bump();
            self.bump();
            self.expect(Tok::RBracket)?;
            return Ok(true);
        }
        Ok(false)
    }

    fn ident_list(&mut self, open: Tok, close: Tok) -> Result<Vec<(String, usize, usize)>, ParseError> {
        self.expect(open)?;
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            if self.eat(&close) {
                return Ok(out);
            }
            self.expect(Tok::Comma)?;
        }
    }

    // ---- expressions

    fn node(&self, kind: Surf, line: usize, col: usize) -> Node {
        Node { kind, line, col }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.peek().tok == Tok::OrOr {
            self.bump();
            let rhs = self.and_expr()?;
            let (l, c) = (lhs.line, lhs.col);
            lhs = self.node(Surf::Or(Box::new(lhs), Box::new(rhs)), l, c);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.peek().tok == Tok::AndAnd {
            self.bump();
            let rhs = self.not_expr()?;
            let (l, c) = (lhs.line, lhs.col);
            lhs = self.node(Surf::And(Box::new(lhs), Box::new(rhs)), l, c);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Node, ParseError> {
        if self.peek().tok == Tok::Bang {
            let t = self.bump();
            let inner = self.not_expr()?;
            return Ok(self.node(Surf::Not(Box::new(inner)), t.line, t.col));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Node, ParseError> {
        let lhs = self.sum()?;
        let op = match self.peek().tok {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Eq | Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.sum()?;
        let (l, c) = (lhs.line, lhs.col);
        Ok(self.node(Surf::Cmp(op, Box::new(lhs), Box::new(rhs)), l, c))
    }

    fn sum(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let add = match self.peek().tok {
                Tok::Plus => true,
                Tok::Minus => false,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            let (l, c) = (lhs.line, lhs.col);
            let kind =
                if add { Surf::Add(Box::new(lhs), Box::new(rhs)) } else { Surf::Sub(Box::new(lhs), Box::new(rhs)) };
            lhs = self.node(kind, l, c);
        }
    }

    fn product(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.atom()?;
        while self.peek().tok == Tok::Star {
            self.bump();
            let rhs = self.atom()?;
            let (l, c) = (lhs.line, lhs.col);
            lhs = self.node(Surf::Mul(Box::new(lhs), Box::new(rhs)), l, c);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Int(v) => {
                self.bump();
                Ok(self.node(Surf::Int(*v), t.line, t.col))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                let kind = match name.as_str() {
                    "true" => Surf::Bool(true),
                    "false" => Surf::Bool(false),
                    "step" | "action" if self.peek().tok == Tok::LParen => {
                        self.bump();
                        let (id, _, _) = self.ident()?;
                        self.expect(Tok::RParen)?;
                        if name == "step" {
                            Surf::Step(id)
                        } else {
                            Surf::Action(id)
                        }
                    }
                    "actions_within" | "steps_within" if self.peek().tok == Tok::LBrace => {
                        let set: BTreeSet<String> =
                            self.ident_list(Tok::LBrace, Tok::RBrace)?.into_iter().map(|(s, _, _)| s).collect();
                        if name == "actions_within" {
                            Surf::ActionsWithin(set)
                        } else {
                            Surf::StepsWithin(set)
                        }
                    }
                    _ => Surf::Ident(name.clone()),
                };
                Ok(self.node(kind, t.line, t.col))
            }
            other => Err(self.here(format!("expected expression, found {}", other.describe()))),
        }
    }
}

// ---- model documents

struct PendingAction {
    id: String,
    on: Vec<(String, usize, usize)>,
    body: PendingBody,
}

enum PendingBody {
    Stmts(Vec<(String, Node)>),
    Fbd(String, usize, usize),
}

struct PendingTrans {
    sources: Vec<(String, usize, usize)>,
    guard: Node,
    targets: Vec<(String, usize, usize)>,
    priority: Option<u32>,
}

/// Parses a model document and checks it for well-formedness.
pub fn parse_model(src: &str) -> Result<SfcModel, ParseError> {
    let mut p = Parser::new(src)?;
    let mut vars: Vec<VarDecl> = Vec::new();
    let mut steps: Vec<(String, usize, usize)> = Vec::new();
    let mut initial: Vec<String> = Vec::new();
    let mut actions: Vec<PendingAction> = Vec::new();
    let mut trans: Vec<PendingTrans> = Vec::new();
    let mut fbds: Vec<(Fbd, usize, usize)> = Vec::new();

    while p.peek().tok != Tok::Eof {
        if p.eat(&Tok::Semi) {
            continue;
        }
        let t = p.peek().clone();
        let kw = match &t.tok {
            Tok::Ident(s) => s.clone(),
            other => return Err(p.here(format!("expected declaration, found {}", other.describe()))),
        };
        p.bump();
        match kw.as_str() {
            "var" => {
                let (name, l, c) = p.ident()?;
                if vars.iter().any(|v| v.name == name) {
                    return Err(ParseError::new(l, c, format!("duplicate variable `{name}`")));
                }
                p.expect(Tok::Colon)?;
                let (tname, tl, tc) = p.ident()?;
                let ty = Ty::parse(&tname).ok_or_else(|| ParseError::new(tl, tc, format!("unknown type `{tname}`")))?;
                let mut decl = VarDecl { name, ty, is_time: false, init: None };
                loop {
                    if p.flag("time")? {
                        if ty == Ty::Bool {
                            return Err(ParseError::new(l, c, "time flag on boolean variable"));
                        }
                        decl.is_time = true;
                    } else if p.eat(&Tok::Eq) {
                        decl.init = Some(initial_value(&mut p, ty)?);
                    } else {
                        break;
                    }
                }
                vars.push(decl);
            }
            "step" => {
                let (name, l, c) = p.ident()?;
                if steps.iter().any(|s| s.0 == name) {
                    return Err(ParseError::new(l, c, format!("duplicate step `{name}`")));
                }
                if p.flag("initial")? {
                    initial.push(name.clone());
                }
                steps.push((name, l, c));
            }
            "action" => {
                let (id, l, c) = p.ident()?;
                if actions.iter().any(|a| a.id == id) {
                    return Err(ParseError::new(l, c, format!("duplicate action `{id}`")));
                }
                let mut on = Vec::new();
                if p.eat_kw("on") {
                    loop {
                        on.push(p.ident()?);
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                let body = if p.eat_kw("fbd") {
                    let (f, fl, fc) = p.ident()?;
                    PendingBody::Fbd(f, fl, fc)
                } else {
                    p.expect(Tok::LBrace)?;
                    let mut stmts = Vec::new();
                    while !p.eat(&Tok::RBrace) {
                        let (target, _, _) = p.ident()?;
                        p.expect(Tok::Assign)?;
                        let value = p.expr()?;
                        stmts.push((target, value));
                        if !p.eat(&Tok::Semi) && p.peek().tok != Tok::RBrace {
                            return Err(p.here(format!("expected `;`, found {}", p.peek().tok.describe())));
                        }
                    }
                    PendingBody::Stmts(stmts)
                };
                actions.push(PendingAction { id, on, body });
            }
            "trans" => {
                let sources = p.ident_list(Tok::LBrace, Tok::RBrace)?;
                p.expect(Tok::Minus)?;
                p.expect(Tok::LBracket)?;
                let guard = p.expr()?;
                p.expect(Tok::RBracket)?;
                p.expect(Tok::Minus)?;
                p.expect(Tok::Gt)?;
                let targets = p.ident_list(Tok::LBrace, Tok::RBrace)?;
                let priority = if p.eat_kw("prio") {
                    Some(prio(&mut p)?)
                } else if p.peek().tok == Tok::LBracket && matches!(p.peek_at(1), Tok::Ident(s) if s == "prio") {
                    p.bump();
                    p.bump();
                    let v = prio(&mut p)?;
                    p.expect(Tok::RBracket)?;
                    Some(v)
                } else {
                    None
                };
                trans.push(PendingTrans { sources, guard, targets, priority });
            }
            "fbd" => {
                let (name, l, c) = p.ident()?;
                if fbds.iter().any(|f| f.0.name == name) {
                    return Err(ParseError::new(l, c, format!("duplicate fbd `{name}`")));
                }
                fbds.push((parse_fbd_body(&mut p, name)?, l, c));
            }
            _ => return Err(ParseError::new(t.line, t.col, format!("unknown declaration `{kw}`"))),
        }
    }

    let end = p.peek().clone();
    let env: VarEnv = vars.iter().map(|v| (v.name.clone(), v.ty)).collect();
    let has_step = |s: &str| steps.iter().any(|x| x.0 == s);

    let mut model = SfcModel::default();
    for (f, l, c) in &fbds {
        f.check(&env).map_err(|e| ParseError::new(*l, *c, format!("fbd `{}`: {e}", f.name)))?;
    }
    for t in trans {
        for (s, l, c) in t.sources.iter().chain(&t.targets) {
            if !has_step(s) {
                return Err(ParseError::new(*l, *c, format!("unknown step `{s}`")));
            }
        }
        model.transitions.push(Transition {
            sources: t.sources.into_iter().map(|s| s.0).collect(),
            guard: t.guard.to_bool_expr(&env)?,
            targets: t.targets.into_iter().map(|s| s.0).collect(),
            priority: t.priority,
        });
    }
    for (s, _, _) in &steps {
        model.step_actions.insert(s.clone(), Vec::new());
    }
    for a in actions {
        for (s, l, c) in &a.on {
            if !has_step(s) {
                return Err(ParseError::new(*l, *c, format!("unknown step `{s}`")));
            }
            let list = model.step_actions.get_mut(s).unwrap();
            if !list.contains(&a.id) {
                list.push(a.id.clone());
            }
        }
        let effect = match a.body {
            PendingBody::Fbd(name, l, c) => {
                if !fbds.iter().any(|f| f.0.name == name) {
                    return Err(ParseError::new(l, c, format!("unknown fbd `{name}`")));
                }
                Effect::Fbd(name)
            }
            PendingBody::Stmts(stmts) => {
                let mut body = Vec::new();
                for (target, node) in stmts {
                    let ty = *env
                        .get(&target)
                        .ok_or_else(|| node.err(format!("assignment to undeclared variable `{target}`")))?;
                    let value = node.to_expr()?.elaborate(&env).map_err(|e| node.err(e.to_string()))?;
                    value.check_assignable(ty, &env).map_err(|e| node.err(e.to_string()))?;
                    body.push(Assignment { target, value });
                }
                Effect::Assign(body)
            }
        };
        model.actions.push(ActionBlock { id: a.id, effect });
    }
    for list in model.step_actions.values_mut() {
        list.sort();
    }
    model.actions.sort_by(|a, b| a.id.cmp(&b.id));
    vars.sort_by(|a, b| a.name.cmp(&b.name));
    model.vars = vars;
    model.steps = steps.into_iter().map(|s| s.0).collect();
    model.steps.sort();
    initial.sort();
    model.initial = initial;
    let mut fbds: Vec<Fbd> = fbds.into_iter().map(|f| f.0).collect();
    fbds.sort_by(|a, b| a.name.cmp(&b.name));
    model.fbds = fbds;

    let violations = validate(&model);
    if let Some(v) = violations.first() {
        return Err(ParseError::new(end.line, end.col, v.to_string()));
    }
    Ok(model)
}

fn prio(p: &mut Parser) -> Result<u32, ParseError> {
    let v = p.int()?;
    u32::try_from(v).map_err(|_| p.here("priority out of range"))
}

fn initial_value(p: &mut Parser, ty: Ty) -> Result<Value, ParseError> {
    let t = p.peek().clone();
    let v = match (&t.tok, ty) {
        (Tok::Int(v), Ty::Int(w)) if *v <= w.max_value() => Value::Int(w, *v),
        (Tok::Int(v), Ty::Int(w)) => return Err(p.here(format!("initial value {v} out of range for {}", w.name()))),
        (Tok::Ident(s), Ty::Bool) if s == "true" || s == "false" => Value::Bool(s == "true"),
        _ => return Err(p.here(format!("expected initial value of type {ty}"))),
    };
    p.bump();
    Ok(v)
}

fn parse_fbd_body(p: &mut Parser, name: String) -> Result<Fbd, ParseError> {
    p.expect(Tok::LBrace)?;
    let mut blocks: Vec<Block> = Vec::new();
    let mut time_slice = None;
    while !p.eat(&Tok::RBrace) {
        if p.eat_kw("timeslice") {
            let t = p.peek().clone();
            let v = p.int()?;
            if time_slice.is_some() {
                return Err(ParseError::new(t.line, t.col, "duplicate timeslice"));
            }
            if v == 0 {
                return Err(ParseError::new(t.line, t.col, "time slice must be positive"));
            }
            time_slice = Some(u32::try_from(v).map_err(|_| ParseError::new(t.line, t.col, "time slice too large"))?);
        } else {
            p.expect_kw("block")?;
            let (id, l, c) = p.ident()?;
            if blocks.iter().any(|b| b.id == id) {
                return Err(ParseError::new(l, c, format!("duplicate block `{id}`")));
            }
            p.expect(Tok::Eq)?;
            let kind = parse_block_kind(p)?;
            blocks.push(Block { id, kind });
        }
        p.eat(&Tok::Semi);
    }
    let time_slice = time_slice.ok_or_else(|| p.here(format!("fbd `{name}` lacks a timeslice")))?;
    Ok(Fbd { name, blocks, time_slice })
}

fn parse_block_kind(p: &mut Parser) -> Result<BlockKind, ParseError> {
    let (kind, l, c) = p.ident()?;
    let arith = |k: &str| match k {
        "add" => Some(ArithOp::Add),
        "sub" => Some(ArithOp::Sub),
        "mul" => Some(ArithOp::Mul),
        _ => None,
    };
    let cmp = |k: &str| match k {
        "lt" => Some(CmpOp::Lt),
        "le" => Some(CmpOp::Le),
        "eq" => Some(CmpOp::Eq),
        "ne" => Some(CmpOp::Ne),
        "ge" => Some(CmpOp::Ge),
        "gt" => Some(CmpOp::Gt),
        _ => None,
    };
    Ok(match kind.as_str() {
        "read" => BlockKind::Read(p.ident()?.0),
        "write" => {
            let v = p.ident()?.0;
            p.expect(Tok::LParen)?;
            let a = operand(p)?;
            p.expect(Tok::RParen)?;
            BlockKind::Write(v, a)
        }
        "const" => BlockKind::Const(p.int()?),
        "delay" => {
            let ops = operands(p, 1)?;
            BlockKind::Delay(ops[0].clone())
        }
        "mux" => {
            let ops = operands(p, 3)?;
            BlockKind::Mux(ops[0].clone(), ops[1].clone(), ops[2].clone())
        }
        k => {
            if let Some(op) = arith(k) {
                let ops = operands(p, 2)?;
                BlockKind::Arith(op, ops[0].clone(), ops[1].clone())
            } else if let Some(op) = cmp(k) {
                let ops = operands(p, 2)?;
                BlockKind::Cmp(op, ops[0].clone(), ops[1].clone())
            } else {
                return Err(ParseError::new(l, c, format!("unknown block kind `{k}`")));
            }
        }
    })
}

fn operands(p: &mut Parser, n: usize) -> Result<Vec<Operand>, ParseError> {
    p.expect(Tok::LParen)?;
    let mut out = Vec::new();
    for i in 0..n {
        if i > 0 {
            p.expect(Tok::Comma)?;
        }
        out.push(operand(p)?);
    }
    p.expect(Tok::RParen)?;
    Ok(out)
}

fn operand(p: &mut Parser) -> Result<Operand, ParseError> {
    if p.eat_kw("const") {
        return Ok(Operand::Const(p.int()?));
    }
    if let Tok::Int(v) = p.peek().tok {
        p.bump();
        return Ok(Operand::Const(v));
    }
    let (id, _, _) = p.ident()?;
    if p.eat(&Tok::Dot) {
        p.expect_kw("out")?;
    }
    Ok(Operand::Port(id))
}

/// Parses a boolean or integer expression and elaborates it against `env`.
pub fn parse_expr(src: &str, env: &VarEnv) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let node = p.expr()?;
    p.expect(Tok::Eof)?;
    let e = node.to_expr()?.elaborate(env).map_err(|e| node.err(e.to_string()))?;
    e.check(env).map_err(|e| node.err(e.to_string()))?;
    Ok(e)
}

/// Parses a bare property formula such as `x <= 10 && !step(Dead)`.
pub fn parse_formula(src: &str, model: &SfcModel) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let node = p.expr()?;
    p.expect(Tok::Eof)?;
    node.to_formula(model, &model.var_env())
}

/// Parses a property file: a sequence of `invariant NAME : always (F);`.
pub fn parse_properties(src: &str, model: &SfcModel) -> Result<Vec<Property>, ParseError> {
    let mut p = Parser::new(src)?;
    let env = model.var_env();
    let mut out: Vec<Property> = Vec::new();
    let mut names: BTreeMap<String, ()> = BTreeMap::new();
    while p.peek().tok != Tok::Eof {
        p.expect_kw("invariant")?;
        let (name, l, c) = p.ident()?;
        if names.insert(name.clone(), ()).is_some() {
            return Err(ParseError::new(l, c, format!("duplicate invariant `{name}`")));
        }
        p.expect(Tok::Colon)?;
        p.expect_kw("always")?;
        p.expect(Tok::LParen)?;
        let node = p.expr()?;
        p.expect(Tok::RParen)?;
        p.expect(Tok::Semi)?;
        out.push(Property { name, formula: node.to_formula(model, &env)? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical_text;

    const LOOP: &str = "
        var x : int16
        step Init initial
        step Step2
        step Return
        action A_Init on Init { x := x + 1; }
        trans {Init} -[ x < 10 ]-> {Step2}
        trans {Step2} -[ true ]-> {Init}
        trans {Init} -[ x >= 10 ]-> {Return}
    ";

    #[test]
    fn loop_model() {
        let m = parse_model(LOOP).unwrap();
        assert_eq!(m.steps.len(), 3);
        assert_eq!(m.transitions.len(), 3);
        assert_eq!(m.initial, vec!["Init".to_string()]);
        assert_eq!(m.actions_of("Init"), &["A_Init".to_string()]);
        assert_eq!(m.transitions[0].guard, Expr::cmp(CmpOp::Lt, IntTy::U16, Expr::var("x"), Expr::Int(10)));
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn minimal_model() {
        let m = parse_model("step it initial").unwrap();
        assert_eq!(m.steps, vec!["it".to_string()]);
        assert!(m.vars.is_empty() && m.transitions.is_empty());
    }

    #[test]
    fn unknown_step_reported_with_position() {
        let err = parse_model("step A initial\ntrans {A} -[ true ]-> {B}").unwrap_err();
        assert_eq!((err.line, err.col), (2, 24));
        assert!(err.message.contains("unknown step"));
    }

    #[test]
    fn empty_initial_rejected() {
        let err = parse_model("step A").unwrap_err();
        assert!(err.message.contains("empty initial set"));
    }

    #[test]
    fn type_errors() {
        assert!(parse_model("var b : bool\nstep A initial\ntrans {A} -[ b + 1 ]-> {A}").is_err());
        assert!(parse_model("var x : int8\nstep A initial\naction X on A { x := 300; }").is_err());
        assert!(parse_model("var x : int8\nvar y : int16\nstep A initial\ntrans {A} -[ x < y ]-> {A}").is_err());
        assert!(parse_model("var x : int8\nstep A initial\ntrans {A} -[ x * x < 3 ]-> {A}").is_err());
    }

    #[test]
    fn round_trip_is_stable() {
        let m = parse_model(LOOP).unwrap();
        let printed = canonical_text(&m);
        let again = parse_model(&printed).unwrap();
        assert_eq!(m, again);
        assert_eq!(printed, canonical_text(&again));
    }

    #[test]
    fn brackets_optional_on_flags() {
        let a = parse_model("var t : int32 [time]\nstep S [initial]\ntrans {S} -[ t > 3 ]-> {S} [prio 2]").unwrap();
        let b = parse_model("var t : int32 time\nstep S initial\ntrans {S} -[ t > 3 ]-> {S} prio 2").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.transitions[0].priority, Some(2));
        assert!(a.vars[0].is_time);
    }

    #[test]
    fn fbd_declarations() {
        let src = "
            var x : int16
            step S initial
            fbd F1 {
              block b1 = read x
              block b2 = add(b1.out, const 1)
              block b3 = write x (b2.out)
              timeslice 1
            }
            action A on S fbd F1
        ";
        let m = parse_model(src).unwrap();
        assert_eq!(m.fbds.len(), 1);
        assert_eq!(m.written_vars(m.action("A").unwrap()), vec!["x".to_string()]);
        let again = parse_model(&canonical_text(&m)).unwrap();
        assert_eq!(m, again);
        assert!(parse_model(&src.replace("timeslice 1", "timeslice 0")).is_err());
    }

    #[test]
    fn properties() {
        let m = parse_model(LOOP).unwrap();
        let props = parse_properties(
            "invariant safe : always (x <= 10);\n\
             invariant mix : always (x <= 9 || !step(Step2) && actions_within {A_Init});",
            &m,
        )
        .unwrap();
        assert_eq!(props.len(), 2);
        assert_eq!(props[0].to_string(), "invariant safe : always (x <= 10);");
        let again = parse_properties(&format!("{}\n{}", props[0], props[1]), &m).unwrap();
        assert_eq!(props, again);
        assert!(parse_properties("invariant bad : always (step(Nope));", &m).is_err());
        assert!(parse_properties("invariant bad : always (x + step(Init) < 3);", &m).is_err());
    }

    #[test]
    fn multiplication_by_constant() {
        let env: VarEnv = [("x".to_string(), Ty::Int(IntTy::U8))].into_iter().collect();
        assert_eq!(parse_expr("x * 3", &env).unwrap(), Expr::Mul(3, Box::new(Expr::var("x"))));
        assert_eq!(parse_expr("2 * x + 1", &env).unwrap().to_string(), "2 * x + 1");
    }
}
