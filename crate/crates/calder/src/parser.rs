//! Recursive-descent parser producing [`Program`] declarations.
//!
//! Grammar sketch (keywords are plain identifiers in the lexer):
//!
//! ```text
//! document   := (actor | network)*
//! actor      := "actor" ID "(" params ")" ports "==>" ports ":" member* "end"
//! member     := stateVar | function | externFunc | action | priority
//! action     := annot* [ID ":"] "action" inPats "==>" outPats
//!               ["guard" exprs] ["var" varDecls] ["do" stmt*] "end"
//! network    := "network" ID "(" params ")" "==>" ":"
//!               ["entities" (ID "=" ID "(" namedArgs ")" ";")*]
//!               ["structure" (ID "." ID "-->" ID "." ID ";")*] "end"
//! ```

use crate::ast::*;
use crate::diag::{Diagnostic, Pos};
use crate::lexer::{lex, Tok, Token};

pub fn parse_document(file: u32, src: &str) -> Result<Program, Diagnostic> {
    let tokens = lex(file, src)?;
    let mut p = Parser { tokens, at: 0 };
    p.document()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.at + 1).min(self.tokens.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::at(self.pos(), msg.into())
    }

    fn expect(&mut self, tok: Tok) -> Result<(), Diagnostic> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), Diagnostic> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{kw}`, found {}", self.peek().describe())))
        }
    }

    fn ident(&mut self) -> Result<String, Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn document(&mut self) -> Result<Program, Diagnostic> {
        let mut prog = Program::default();
        loop {
            if *self.peek() == Tok::Eof {
                return Ok(prog);
            }
            if self.is_kw("actor") {
                prog.actors.push(self.actor()?);
            } else if self.is_kw("network") {
                prog.networks.push(self.network()?);
            } else {
                return Err(self.err(format!(
                    "expected `actor` or `network`, found {}",
                    self.peek().describe()
                )));
            }
        }
    }

    // ---- types ----

    fn is_type_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "int" || s == "uint" || s == "bool" || s == "List")
    }

    fn type_expr(&mut self) -> Result<Type, Diagnostic> {
        let pos = self.pos();
        let name = self.ident()?;
        match name.as_str() {
            "bool" => Ok(Type::Bool),
            "int" | "uint" => {
                let mut width = 32u8;
                if *self.peek() == Tok::LParen {
                    self.bump();
                    // accept `size=W` or bare `W`
                    if self.is_kw("size") {
                        self.bump();
                        self.expect(Tok::Eq)?;
                    }
                    width = match self.bump() {
                        Tok::Int(v) if (1..=64).contains(&v) => v as u8,
                        _ => {
                            return Err(Diagnostic::at(
                                pos,
                                "integer width must be a literal in 1..=64",
                            ))
                        }
                    };
                    self.expect(Tok::RParen)?;
                }
                Ok(if name == "int" {
                    Type::Int { width }
                } else {
                    Type::Uint { width }
                })
            }
            "List" => {
                self.expect(Tok::LParen)?;
                self.expect_kw("type")?;
                self.expect(Tok::Colon)?;
                let elem = self.type_expr()?;
                self.expect(Tok::Comma)?;
                self.expect_kw("size")?;
                self.expect(Tok::Eq)?;
                let size = match self.bump() {
                    Tok::Int(v) if v > 0 => v as usize,
                    _ => return Err(Diagnostic::at(pos, "list size must be a positive literal")),
                };
                self.expect(Tok::RParen)?;
                Ok(Type::List {
                    elem: Box::new(elem),
                    size,
                })
            }
            other => Err(Diagnostic::at(pos, format!("unknown type `{other}`"))),
        }
    }

    // ---- actors ----

    fn param_list(&mut self) -> Result<Vec<ParamDecl>, Diagnostic> {
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let ty = self.type_expr()?;
                let name = self.ident()?;
                let default = if *self.peek() == Tok::Eq {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                params.push(ParamDecl { name, ty, default });
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(params)
    }

    fn port_list(&mut self, terminator: &Tok) -> Result<Vec<PortDecl>, Diagnostic> {
        let mut ports = Vec::new();
        while self.peek() != terminator {
            let pos = self.pos();
            let ty = self.type_expr()?;
            let name = self.ident()?;
            ports.push(PortDecl { name, ty, pos });
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(ports)
    }

    fn actor(&mut self) -> Result<ActorDecl, Diagnostic> {
        let pos = self.pos();
        self.expect_kw("actor")?;
        let name = self.ident()?;
        let params = self.param_list()?;
        let in_ports = self.port_list(&Tok::FlowsTo)?;
        self.expect(Tok::FlowsTo)?;
        let out_ports = self.port_list(&Tok::Colon)?;
        self.expect(Tok::Colon)?;

        let mut actor = ActorDecl {
            name,
            params,
            in_ports,
            out_ports,
            state_vars: Vec::new(),
            funcs: Vec::new(),
            extern_funcs: Vec::new(),
            actions: Vec::new(),
            priorities: Vec::new(),
            pos,
        };

        loop {
            if self.eat_kw("end") {
                return Ok(actor);
            }
            if *self.peek() == Tok::Eof {
                return Err(self.err("unterminated actor: expected `end`"));
            }
            if self.is_kw("function") {
                actor.funcs.push(self.function()?);
            } else if self.is_kw("external") {
                actor.extern_funcs.push(self.extern_func()?);
            } else if self.is_kw("priority") {
                self.priority_block(&mut actor)?;
            } else if self.is_kw("action")
                || *self.peek() == Tok::At
                || (matches!(self.peek(), Tok::Ident(_)) && *self.peek2() == Tok::Colon)
            {
                actor.actions.push(self.action()?);
            } else if self.is_type_start() {
                actor.state_vars.push(self.state_var()?);
            } else {
                return Err(self.err(format!(
                    "expected actor member, found {}",
                    self.peek().describe()
                )));
            }
        }
    }

    fn state_var(&mut self) -> Result<StateVarDecl, Diagnostic> {
        let pos = self.pos();
        let ty = self.type_expr()?;
        let name = self.ident()?;
        let init = if *self.peek() == Tok::Assign {
            self.bump();
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(StateVarDecl {
            name,
            ty,
            init,
            pos,
        })
    }

    fn function(&mut self) -> Result<FuncDecl, Diagnostic> {
        self.expect_kw("function")?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let ty = self.type_expr()?;
                let pname = self.ident()?;
                params.push((pname, ty));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Arrow)?;
        let ret = self.type_expr()?;
        self.expect(Tok::Colon)?;
        let body = self.expr()?;
        self.expect_kw("end")?;
        Ok(FuncDecl {
            name,
            params,
            ret,
            body,
        })
    }

    fn extern_func(&mut self) -> Result<ExternFuncDecl, Diagnostic> {
        self.expect_kw("external")?;
        self.expect_kw("function")?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let ty = self.type_expr()?;
                let pname = self.ident()?;
                params.push((pname, ty));
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Arrow)?;
        let ret = self.type_expr()?;
        self.expect_kw("end")?;
        Ok(ExternFuncDecl { name, params, ret })
    }

    fn priority_block(&mut self, actor: &mut ActorDecl) -> Result<(), Diagnostic> {
        self.expect_kw("priority")?;
        loop {
            if self.eat_kw("end") {
                return Ok(());
            }
            let mut chain = vec![self.ident()?];
            while *self.peek() == Tok::Gt {
                self.bump();
                chain.push(self.ident()?);
            }
            self.expect(Tok::Semi)?;
            if chain.len() < 2 {
                return Err(self.err("priority chain needs at least two action labels"));
            }
            actor.priorities.push(chain);
        }
    }

    fn action(&mut self) -> Result<ActionDecl, Diagnostic> {
        let pos = self.pos();
        let mut weight = 1u64;
        while *self.peek() == Tok::At {
            self.bump();
            let name = self.ident()?;
            if name != "weight" {
                return Err(self.err(format!(
                    "unknown annotation `@{name}` (only `@weight(n)` is supported)"
                )));
            }
            self.expect(Tok::LParen)?;
            weight = match self.bump() {
                Tok::Int(v) if v >= 0 => v as u64,
                _ => return Err(self.err("@weight takes a nonnegative integer literal")),
            };
            self.expect(Tok::RParen)?;
        }

        let label = if matches!(self.peek(), Tok::Ident(s) if s != "action") {
            let l = self.ident()?;
            self.expect(Tok::Colon)?;
            Some(l)
        } else {
            None
        };
        self.expect_kw("action")?;

        let inputs = self.input_patterns()?;
        self.expect(Tok::FlowsTo)?;
        let outputs = self.output_patterns()?;

        let mut guards = Vec::new();
        if self.eat_kw("guard") {
            loop {
                guards.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let mut locals = Vec::new();
        if self.eat_kw("var") {
            loop {
                let vpos = self.pos();
                let ty = self.type_expr()?;
                let name = self.ident()?;
                let init = if *self.peek() == Tok::Assign {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                locals.push(StateVarDecl {
                    name,
                    ty,
                    init,
                    pos: vpos,
                });
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        let mut body = Vec::new();
        if self.eat_kw("do") {
            while !self.is_kw("end") {
                body.push(self.stmt()?);
            }
        }
        self.expect_kw("end")?;
        Ok(ActionDecl {
            label,
            inputs,
            outputs,
            guards,
            locals,
            body,
            weight,
            pos,
        })
    }

    fn input_patterns(&mut self) -> Result<Vec<InputPattern>, Diagnostic> {
        let mut pats = Vec::new();
        while matches!(self.peek(), Tok::Ident(s) if s != "guard" && s != "var" && s != "do" && s != "end")
        {
            let pos = self.pos();
            let port = self.ident()?;
            self.expect(Tok::Colon)?;
            self.expect(Tok::LBracket)?;
            let mut vars = Vec::new();
            if *self.peek() != Tok::RBracket {
                loop {
                    vars.push(self.ident()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBracket)?;
            pats.push(InputPattern { port, vars, pos });
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(pats)
    }

    fn output_patterns(&mut self) -> Result<Vec<OutputPattern>, Diagnostic> {
        let mut pats = Vec::new();
        while matches!(self.peek(), Tok::Ident(s) if s != "guard" && s != "var" && s != "do" && s != "end")
        {
            let pos = self.pos();
            let port = self.ident()?;
            self.expect(Tok::Colon)?;
            self.expect(Tok::LBracket)?;
            let mut exprs = Vec::new();
            if *self.peek() != Tok::RBracket {
                loop {
                    exprs.push(self.expr()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBracket)?;
            pats.push(OutputPattern { port, exprs, pos });
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        Ok(pats)
    }

    // ---- networks ----

    fn network(&mut self) -> Result<NetworkDecl, Diagnostic> {
        let pos = self.pos();
        self.expect_kw("network")?;
        let name = self.ident()?;
        let params = self.param_list()?;
        self.expect(Tok::FlowsTo)?;
        self.expect(Tok::Colon)?;
        let mut net = NetworkDecl {
            name,
            params,
            entities: Vec::new(),
            connections: Vec::new(),
            pos,
        };
        if self.eat_kw("entities") {
            while !self.is_kw("structure") && !self.is_kw("end") {
                let epos = self.pos();
                let instance = self.ident()?;
                self.expect(Tok::Eq)?;
                let actor = self.ident()?;
                self.expect(Tok::LParen)?;
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        let pname = self.ident()?;
                        self.expect(Tok::Eq)?;
                        let e = self.expr()?;
                        args.push((pname, e));
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                net.entities.push(EntityDecl {
                    instance,
                    actor,
                    args,
                    pos: epos,
                });
            }
        }
        if self.eat_kw("structure") {
            while !self.is_kw("end") {
                let cpos = self.pos();
                let from_inst = self.ident()?;
                self.expect(Tok::Dot)?;
                let from_port = self.ident()?;
                self.expect(Tok::Arrow)?;
                let to_inst = self.ident()?;
                self.expect(Tok::Dot)?;
                let to_port = self.ident()?;
                self.expect(Tok::Semi)?;
                net.connections.push(ConnectionDecl {
                    from: (from_inst, from_port),
                    to: (to_inst, to_port),
                    pos: cpos,
                });
            }
        }
        self.expect_kw("end")?;
        Ok(net)
    }

    // ---- statements ----

    fn stmt(&mut self) -> Result<Stmt, Diagnostic> {
        if self.is_kw("if") {
            self.bump();
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let mut then_body = Vec::new();
            while !self.is_kw("else") && !self.is_kw("end") {
                then_body.push(self.stmt()?);
            }
            let mut else_body = Vec::new();
            if self.eat_kw("else") {
                while !self.is_kw("end") {
                    else_body.push(self.stmt()?);
                }
            }
            self.expect_kw("end")?;
            return Ok(Stmt::If {
                cond,
                then_body,
                else_body,
            });
        }
        if self.is_kw("while") {
            self.bump();
            let cond = self.expr()?;
            self.expect_kw("do")?;
            let mut body = Vec::new();
            while !self.is_kw("end") {
                body.push(self.stmt()?);
            }
            self.expect_kw("end")?;
            return Ok(Stmt::While { cond, body });
        }
        if self.is_kw("foreach") {
            self.bump();
            // optional loop-variable type
            if self.is_type_start() {
                self.type_expr()?;
            }
            let var = self.ident()?;
            self.expect_kw("in")?;
            let from = self.expr()?;
            self.expect(Tok::DotDot)?;
            let to = self.expr()?;
            self.expect_kw("do")?;
            let mut body = Vec::new();
            while !self.is_kw("end") {
                body.push(self.stmt()?);
            }
            self.expect_kw("end")?;
            return Ok(Stmt::Foreach {
                var,
                from,
                to,
                body,
            });
        }
        // assignment or procedure call
        let pos = self.pos();
        let name = self.ident()?;
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Call { name, args, pos })
            }
            Tok::LBracket => {
                self.bump();
                let index = self.expr()?;
                self.expect(Tok::RBracket)?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Assign {
                    target: name,
                    index: Some(index),
                    value,
                    pos,
                })
            }
            Tok::Assign => {
                self.bump();
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Assign {
                    target: name,
                    index: None,
                    value,
                    pos,
                })
            }
            other => Err(self.err(format!(
                "expected `:=`, `[` or `(` after identifier in statement, found {}",
                other.describe()
            ))),
        }
    }

    // ---- expressions (precedence climbing) ----

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.or_expr()
    }

    fn binary_level<F>(&mut self, next: F, ops: &[(Tok, BinOp)]) -> Result<Expr, Diagnostic>
    where
        F: Fn(&mut Self) -> Result<Expr, Diagnostic>,
    {
        let mut lhs = next(self)?;
        'outer: loop {
            for (tok, op) in ops {
                if self.peek() == tok {
                    let pos = self.pos();
                    self.bump();
                    let rhs = next(self)?;
                    lhs = Expr {
                        kind: ExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)),
                        pos,
                    };
                    continue 'outer;
                }
            }
            return Ok(lhs);
        }
    }

    fn or_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.and_expr()?;
        while self.is_kw("or") {
            let pos = self.pos();
            self.bump();
            let rhs = self.and_expr()?;
            lhs = Expr {
                kind: ExprKind::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.bitor_expr()?;
        while self.is_kw("and") {
            let pos = self.pos();
            self.bump();
            let rhs = self.bitor_expr()?;
            lhs = Expr {
                kind: ExprKind::Binary(BinOp::And, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn bitor_expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(Self::bitxor_expr, &[(Tok::Pipe, BinOp::BitOr)])
    }

    fn bitxor_expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(Self::bitand_expr, &[(Tok::Caret, BinOp::BitXor)])
    }

    fn bitand_expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(Self::equality_expr, &[(Tok::Amp, BinOp::BitAnd)])
    }

    fn equality_expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(
            Self::relational_expr,
            &[(Tok::Eq, BinOp::Eq), (Tok::Ne, BinOp::Ne)],
        )
    }

    fn relational_expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(
            Self::shift_expr,
            &[
                (Tok::Le, BinOp::Le),
                (Tok::Ge, BinOp::Ge),
                (Tok::Lt, BinOp::Lt),
                (Tok::Gt, BinOp::Gt),
            ],
        )
    }

    fn shift_expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(
            Self::additive_expr,
            &[(Tok::Shl, BinOp::Shl), (Tok::Shr, BinOp::Shr)],
        )
    }

    fn additive_expr(&mut self) -> Result<Expr, Diagnostic> {
        self.binary_level(
            Self::multiplicative_expr,
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
        )
    }

    fn multiplicative_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => Some(BinOp::Mul),
                Tok::Slash => Some(BinOp::Div),
                Tok::Ident(s) if s == "div" => Some(BinOp::Div),
                Tok::Ident(s) if s == "mod" => Some(BinOp::Mod),
                _ => None,
            };
            match op {
                Some(op) => {
                    let pos = self.pos();
                    self.bump();
                    let rhs = self.unary_expr()?;
                    lhs = Expr {
                        kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                        pos,
                    };
                }
                None => return Ok(lhs),
            }
        }
    }

    fn unary_expr(&mut self) -> Result<Expr, Diagnostic> {
        let pos = self.pos();
        if *self.peek() == Tok::Minus {
            self.bump();
            let e = self.unary_expr()?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Neg, Box::new(e)),
                pos,
            });
        }
        if self.is_kw("not") {
            self.bump();
            let e = self.unary_expr()?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Not, Box::new(e)),
                pos,
            });
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut e = self.primary_expr()?;
        loop {
            match self.peek() {
                Tok::LBracket => {
                    let pos = self.pos();
                    self.bump();
                    let idx = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    e = Expr {
                        kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                        pos,
                    };
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary_expr(&mut self) -> Result<Expr, Diagnostic> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::IntLit(v),
                    pos,
                })
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() != Tok::RBracket {
                    loop {
                        items.push(self.expr()?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                Ok(Expr {
                    kind: ExprKind::ListLit(items),
                    pos,
                })
            }
            Tok::Ident(name) => {
                if name == "true" || name == "false" {
                    self.bump();
                    return Ok(Expr {
                        kind: ExprKind::BoolLit(name == "true"),
                        pos,
                    });
                }
                if name == "if" {
                    self.bump();
                    let cond = self.expr()?;
                    self.expect_kw("then")?;
                    let then_e = self.expr()?;
                    self.expect_kw("else")?;
                    let else_e = self.expr()?;
                    self.expect_kw("end")?;
                    return Ok(Expr {
                        kind: ExprKind::If(Box::new(cond), Box::new(then_e), Box::new(else_e)),
                        pos,
                    });
                }
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if *self.peek() == Tok::Comma {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    return Ok(Expr {
                        kind: ExprKind::Call(name, args),
                        pos,
                    });
                }
                Ok(Expr {
                    kind: ExprKind::Var(name),
                    pos,
                })
            }
            other => Err(self.err(format!("expected expression, found {}", other.describe()))),
        }
    }
}
