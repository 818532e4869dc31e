//! Action-body evaluation: the scope/condition/transition decomposition
//! shared by every backend.
//!
//! Integer arithmetic wraps at the declared width on every store, so software
//! and simulated-hardware executions produce identical token traces.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ast::*;
use crate::diag::Pos;

/// Runtime value: bounded integer, bool, or fixed-size list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Bool(bool),
    List(Vec<Value>),
}

impl Value {
    pub fn as_int(&self) -> Result<i64, String> {
        match self {
            Value::Int(v) => Ok(*v),
            Value::Bool(b) => Ok(*b as i64),
            Value::List(_) => Err("expected scalar, found list".into()),
        }
    }

    pub fn as_bool(&self) -> Result<bool, String> {
        match self {
            Value::Bool(b) => Ok(*b),
            Value::Int(v) => Ok(*v != 0),
            Value::List(_) => Err("expected bool, found list".into()),
        }
    }

    /// Raw wire form of a scalar token.
    pub fn to_token(&self) -> Result<i64, String> {
        self.as_int()
    }

    pub fn from_token(raw: i64, ty: &Type) -> Value {
        match ty {
            Type::Bool => Value::Bool(raw != 0),
            _ => Value::Int(raw),
        }
    }
}

/// Mask a scalar into the representable range of `ty` (two's complement for
/// signed widths, zero-extension for unsigned).
pub fn mask_scalar(v: i64, ty: &Type) -> i64 {
    match ty {
        Type::Int { width } => {
            let w = *width as u32;
            if w >= 64 {
                v
            } else {
                let shift = 64 - w;
                (v << shift) >> shift
            }
        }
        Type::Uint { width } => {
            let w = *width as u32;
            if w >= 64 {
                v
            } else {
                v & ((1i64 << w) - 1)
            }
        }
        Type::Bool => (v != 0) as i64,
        Type::List { .. } => v,
    }
}

/// Coerce a value for storage into a location of type `ty`.
pub fn coerce(v: Value, ty: &Type) -> Result<Value, String> {
    match ty {
        Type::Bool => Ok(Value::Bool(v.as_bool()?)),
        Type::Int { .. } | Type::Uint { .. } => Ok(Value::Int(mask_scalar(v.as_int()?, ty))),
        Type::List { elem, size } => match v {
            Value::List(items) => {
                if items.len() != *size {
                    return Err(format!(
                        "list initializer has {} elements, type needs {size}",
                        items.len()
                    ));
                }
                items
                    .into_iter()
                    .map(|it| coerce(it, elem))
                    .collect::<Result<Vec<_>, _>>()
                    .map(Value::List)
            }
            other => {
                // broadcast a scalar default across the list
                let item = coerce(other, elem)?;
                Ok(Value::List(vec![item; *size]))
            }
        },
    }
}

pub fn default_value(ty: &Type) -> Value {
    match ty {
        Type::Bool => Value::Bool(false),
        Type::Int { .. } | Type::Uint { .. } => Value::Int(0),
        Type::List { elem, size } => Value::List(vec![default_value(elem); *size]),
    }
}

/// An evaluation fault aborts the enclosing run with actor/action attribution.
#[derive(Clone, Debug)]
pub struct EvalFault {
    pub actor: String,
    pub action: Option<String>,
    pub pos: Option<Pos>,
    pub message: String,
}

impl fmt::Display for EvalFault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "evaluation fault in actor `{}`", self.actor)?;
        if let Some(a) = &self.action {
            write!(f, ", action `{a}`")?;
        }
        if let Some(p) = &self.pos {
            write!(f, " at {}:{}", p.line, p.col)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for EvalFault {}

pub type HostFn = Arc<dyn Fn(&[Value]) -> Result<Value, String> + Send + Sync>;

/// Registry of host functions available to `external function` declarations
/// and builtin procedures (`println`).
#[derive(Clone)]
pub struct HostTable {
    funcs: HashMap<String, HostFn>,
}

impl fmt::Debug for HostTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<&String> = self.funcs.keys().collect();
        names.sort();
        f.debug_struct("HostTable").field("funcs", &names).finish()
    }
}

impl HostTable {
    pub fn empty() -> Self {
        HostTable {
            funcs: HashMap::new(),
        }
    }

    /// Table with the default bindings: a deterministic `rand` (pure hash of
    /// its argument) and `println` to stdout.
    pub fn with_defaults() -> Self {
        let mut t = HostTable::empty();
        t.register("rand", |args| {
            let x = args.first().map(|v| v.as_int()).transpose()?.unwrap_or(0);
            Ok(Value::Int(default_rand(x)))
        });
        t.register("println", |args| {
            let line = args
                .iter()
                .map(|v| match v {
                    Value::Int(i) => i.to_string(),
                    Value::Bool(b) => b.to_string(),
                    Value::List(_) => "<list>".to_string(),
                })
                .collect::<Vec<_>>()
                .join(" ");
            println!("{line}");
            Ok(Value::Int(0))
        });
        t
    }

    pub fn register<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&[Value]) -> Result<Value, String> + Send + Sync + 'static,
    {
        self.funcs.insert(name.to_string(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&HostFn> {
        self.funcs.get(name)
    }
}

/// Deterministic stand-in for the host `rand`: a splitmix64 hash truncated to
/// a positive i32 range so it fits any port width >= 31 bits.
pub fn default_rand(x: i64) -> i64 {
    let mut z = (x as u64).wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z = z ^ (z >> 31);
    (z & 0x7fff_ffff) as i64
}

/// Mutable per-instance execution state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActorState {
    pub vars: HashMap<String, Value>,
    /// Controller state id; always names an existing state of the machine.
    pub pc: usize,
    /// EXEC count per action index.
    pub firings: Vec<u64>,
}

/// Everything needed to evaluate expressions for one actor instance.
pub struct EvalCtx<'a> {
    pub actor: &'a ActorDecl,
    pub instance: &'a str,
    pub params: &'a HashMap<String, Value>,
    pub host: &'a HostTable,
}

impl<'a> EvalCtx<'a> {
    fn fault(&self, action: Option<usize>, pos: Option<Pos>, msg: impl Into<String>) -> EvalFault {
        EvalFault {
            actor: self.instance.to_string(),
            action: action.map(|i| self.actor.actions[i].display_name(i)),
            pos,
            message: msg.into(),
        }
    }
}

/// Channel access used during evaluation. Peeks never consume; consumption
/// and production happen only inside EXEC transitions.
pub trait ActorIo {
    fn input_available(&self, port: usize) -> usize;
    fn input_peek(&self, port: usize, offset: usize) -> i64;
    fn input_consume(&mut self, port: usize, count: usize);
    fn output_space(&self, port: usize) -> usize;
    fn output_produce(&mut self, port: usize, value: i64);
}

/// Variable bindings computed by a scope: peeked input tokens plus action
/// locals. Pure with respect to the actor state.
pub type Bindings = HashMap<String, Value>;

pub fn eval_scope(
    ctx: &EvalCtx,
    state: &ActorState,
    action_idx: usize,
    io: &dyn ActorIo,
) -> Result<Bindings, EvalFault> {
    let action = &ctx.actor.actions[action_idx];
    let mut bindings = Bindings::new();
    for pat in &action.inputs {
        let port = ctx
            .actor
            .in_port_index(&pat.port)
            .expect("validated input port");
        let elem = &ctx.actor.in_ports[port].ty;
        if io.input_available(port) < pat.vars.len() {
            return Err(ctx.fault(
                Some(action_idx),
                Some(pat.pos),
                "internal: scope evaluated without sufficient input tokens",
            ));
        }
        for (i, var) in pat.vars.iter().enumerate() {
            bindings.insert(var.clone(), Value::from_token(io.input_peek(port, i), elem));
        }
    }
    for local in &action.locals {
        let v = match &local.init {
            Some(e) => eval_expr(ctx, state, &bindings, e, Some(action_idx))?,
            None => default_value(&local.ty),
        };
        let v =
            coerce(v, &local.ty).map_err(|m| ctx.fault(Some(action_idx), Some(local.pos), m))?;
        bindings.insert(local.name.clone(), v);
    }
    Ok(bindings)
}

/// Evaluate one guard expression of an action under fresh scope bindings.
pub fn eval_guard(
    ctx: &EvalCtx,
    state: &ActorState,
    action_idx: usize,
    guard_idx: usize,
    io: &dyn ActorIo,
) -> Result<bool, EvalFault> {
    let bindings = eval_scope(ctx, state, action_idx, io)?;
    let g = &ctx.actor.actions[action_idx].guards[guard_idx];
    eval_expr(ctx, state, &bindings, g, Some(action_idx))?
        .as_bool()
        .map_err(|m| ctx.fault(Some(action_idx), Some(g.pos), m))
}

/// Fire an action: consume declared inputs, run the body, produce declared
/// outputs, update state variables. Caller guarantees all required conditions
/// hold.
pub fn exec_transition(
    ctx: &EvalCtx,
    state: &mut ActorState,
    action_idx: usize,
    io: &mut dyn ActorIo,
) -> Result<(), EvalFault> {
    let action = &ctx.actor.actions[action_idx];
    let mut bindings = eval_scope(ctx, state, action_idx, io)?;

    // Output expressions see the pre-body environment.
    let mut produced: Vec<(usize, Vec<i64>)> = Vec::with_capacity(action.outputs.len());
    for out in &action.outputs {
        let port = ctx
            .actor
            .out_port_index(&out.port)
            .expect("validated output port");
        let ty = &ctx.actor.out_ports[port].ty;
        let mut tokens = Vec::with_capacity(out.exprs.len());
        for e in &out.exprs {
            let v = eval_expr(ctx, state, &bindings, e, Some(action_idx))?;
            let raw = v
                .to_token()
                .map_err(|m| ctx.fault(Some(action_idx), Some(e.pos), m))?;
            tokens.push(mask_scalar(raw, ty));
        }
        produced.push((port, tokens));
    }

    for pat in &action.inputs {
        let port = ctx.actor.in_port_index(&pat.port).expect("validated");
        io.input_consume(port, pat.vars.len());
    }

    for stmt in &action.body {
        exec_stmt(ctx, state, &mut bindings, stmt, action_idx)?;
    }

    for (port, tokens) in produced {
        for t in tokens {
            io.output_produce(port, t);
        }
    }
    state.firings[action_idx] += 1;
    Ok(())
}

fn exec_stmt(
    ctx: &EvalCtx,
    state: &mut ActorState,
    bindings: &mut Bindings,
    stmt: &Stmt,
    action_idx: usize,
) -> Result<(), EvalFault> {
    match stmt {
        Stmt::Assign {
            target,
            index,
            value,
            pos,
        } => {
            let v = eval_expr(ctx, state, bindings, value, Some(action_idx))?;
            let idx = match index {
                Some(e) => Some(
                    eval_expr(ctx, state, bindings, e, Some(action_idx))?
                        .as_int()
                        .map_err(|m| ctx.fault(Some(action_idx), Some(e.pos), m))?,
                ),
                None => None,
            };
            // locate the variable: action bindings shadow state vars
            let (slot, declared_ty) = if bindings.contains_key(target) {
                (bindings.get_mut(target).unwrap(), None)
            } else if let Some(slot) = state.vars.get_mut(target) {
                let ty = ctx
                    .actor
                    .state_vars
                    .iter()
                    .find(|sv| &sv.name == target)
                    .map(|sv| sv.ty.clone());
                (slot, ty)
            } else {
                return Err(ctx.fault(
                    Some(action_idx),
                    Some(*pos),
                    format!("assignment to unknown variable `{target}`"),
                ));
            };
            match idx {
                None => {
                    *slot = match &declared_ty {
                        Some(ty) => {
                            coerce(v, ty).map_err(|m| ctx.fault(Some(action_idx), Some(*pos), m))?
                        }
                        None => v,
                    };
                }
                Some(i) => match slot {
                    Value::List(items) => {
                        if i < 0 || i as usize >= items.len() {
                            return Err(ctx.fault(
                                Some(action_idx),
                                Some(*pos),
                                format!("index {i} out of bounds for list of {}", items.len()),
                            ));
                        }
                        let elem_ty = declared_ty.and_then(|t| match t {
                            Type::List { elem, .. } => Some(*elem),
                            _ => None,
                        });
                        items[i as usize] = match &elem_ty {
                            Some(ty) => coerce(v, ty)
                                .map_err(|m| ctx.fault(Some(action_idx), Some(*pos), m))?,
                            None => v,
                        };
                    }
                    _ => {
                        return Err(ctx.fault(
                            Some(action_idx),
                            Some(*pos),
                            format!("indexed assignment to non-list `{target}`"),
                        ))
                    }
                },
            }
            Ok(())
        }
        Stmt::If {
            cond,
            then_body,
            else_body,
        } => {
            let c = eval_expr(ctx, state, bindings, cond, Some(action_idx))?
                .as_bool()
                .map_err(|m| ctx.fault(Some(action_idx), Some(cond.pos), m))?;
            let body = if c { then_body } else { else_body };
            for s in body {
                exec_stmt(ctx, state, bindings, s, action_idx)?;
            }
            Ok(())
        }
        Stmt::While { cond, body } => {
            loop {
                let c = eval_expr(ctx, state, bindings, cond, Some(action_idx))?
                    .as_bool()
                    .map_err(|m| ctx.fault(Some(action_idx), Some(cond.pos), m))?;
                if !c {
                    break;
                }
                for s in body {
                    exec_stmt(ctx, state, bindings, s, action_idx)?;
                }
            }
            Ok(())
        }
        Stmt::Foreach {
            var,
            from,
            to,
            body,
        } => {
            let lo = eval_expr(ctx, state, bindings, from, Some(action_idx))?
                .as_int()
                .map_err(|m| ctx.fault(Some(action_idx), Some(from.pos), m))?;
            let hi = eval_expr(ctx, state, bindings, to, Some(action_idx))?
                .as_int()
                .map_err(|m| ctx.fault(Some(action_idx), Some(to.pos), m))?;
            let shadow = bindings.insert(var.clone(), Value::Int(lo));
            let mut i = lo;
            // inclusive range, as in `foreach int i in 0 .. 3`
            while i <= hi {
                bindings.insert(var.clone(), Value::Int(i));
                for s in body {
                    exec_stmt(ctx, state, bindings, s, action_idx)?;
                }
                i += 1;
            }
            match shadow {
                Some(v) => {
                    bindings.insert(var.clone(), v);
                }
                None => {
                    bindings.remove(var);
                }
            }
            Ok(())
        }
        Stmt::Call { name, args, pos } => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_expr(ctx, state, bindings, a, Some(action_idx))?);
            }
            match ctx.host.get(name) {
                Some(f) => {
                    f(&vals).map_err(|m| ctx.fault(Some(action_idx), Some(*pos), m))?;
                    Ok(())
                }
                None => Err(ctx.fault(
                    Some(action_idx),
                    Some(*pos),
                    format!("unknown host procedure `{name}`"),
                )),
            }
        }
    }
}

pub fn eval_expr(
    ctx: &EvalCtx,
    state: &ActorState,
    bindings: &Bindings,
    expr: &Expr,
    action_idx: Option<usize>,
) -> Result<Value, EvalFault> {
    match &expr.kind {
        ExprKind::IntLit(v) => Ok(Value::Int(*v)),
        ExprKind::BoolLit(b) => Ok(Value::Bool(*b)),
        ExprKind::Var(name) => {
            if let Some(v) = bindings.get(name) {
                return Ok(v.clone());
            }
            if let Some(v) = state.vars.get(name) {
                return Ok(v.clone());
            }
            if let Some(v) = ctx.params.get(name) {
                return Ok(v.clone());
            }
            Err(ctx.fault(
                action_idx,
                Some(expr.pos),
                format!("unknown variable `{name}`"),
            ))
        }
        ExprKind::Unary(op, e) => {
            let v = eval_expr(ctx, state, bindings, e, action_idx)?;
            match op {
                UnOp::Neg => {
                    let i = v
                        .as_int()
                        .map_err(|m| ctx.fault(action_idx, Some(expr.pos), m))?;
                    Ok(Value::Int(i.wrapping_neg()))
                }
                UnOp::Not => {
                    let b = v
                        .as_bool()
                        .map_err(|m| ctx.fault(action_idx, Some(expr.pos), m))?;
                    Ok(Value::Bool(!b))
                }
            }
        }
        ExprKind::Binary(op, l, r) => {
            // short-circuit booleans first
            if matches!(op, BinOp::And | BinOp::Or) {
                let lv = eval_expr(ctx, state, bindings, l, action_idx)?
                    .as_bool()
                    .map_err(|m| ctx.fault(action_idx, Some(l.pos), m))?;
                return match (op, lv) {
                    (BinOp::And, false) => Ok(Value::Bool(false)),
                    (BinOp::Or, true) => Ok(Value::Bool(true)),
                    _ => {
                        let rv = eval_expr(ctx, state, bindings, r, action_idx)?
                            .as_bool()
                            .map_err(|m| ctx.fault(action_idx, Some(r.pos), m))?;
                        Ok(Value::Bool(rv))
                    }
                };
            }
            let lv = eval_expr(ctx, state, bindings, l, action_idx)?
                .as_int()
                .map_err(|m| ctx.fault(action_idx, Some(l.pos), m))?;
            let rv = eval_expr(ctx, state, bindings, r, action_idx)?
                .as_int()
                .map_err(|m| ctx.fault(action_idx, Some(r.pos), m))?;
            let out = match op {
                BinOp::Add => Value::Int(lv.wrapping_add(rv)),
                BinOp::Sub => Value::Int(lv.wrapping_sub(rv)),
                BinOp::Mul => Value::Int(lv.wrapping_mul(rv)),
                BinOp::Div => {
                    if rv == 0 {
                        return Err(ctx.fault(action_idx, Some(expr.pos), "division by zero"));
                    }
                    Value::Int(lv.wrapping_div(rv))
                }
                BinOp::Mod => {
                    if rv == 0 {
                        return Err(ctx.fault(action_idx, Some(expr.pos), "modulo by zero"));
                    }
                    Value::Int(lv.wrapping_rem(rv))
                }
                BinOp::Shl => Value::Int(lv.wrapping_shl(rv as u32 & 63)),
                BinOp::Shr => Value::Int(lv.wrapping_shr(rv as u32 & 63)),
                BinOp::BitAnd => Value::Int(lv & rv),
                BinOp::BitOr => Value::Int(lv | rv),
                BinOp::BitXor => Value::Int(lv ^ rv),
                BinOp::Lt => Value::Bool(lv < rv),
                BinOp::Le => Value::Bool(lv <= rv),
                BinOp::Gt => Value::Bool(lv > rv),
                BinOp::Ge => Value::Bool(lv >= rv),
                BinOp::Eq => Value::Bool(lv == rv),
                BinOp::Ne => Value::Bool(lv != rv),
                BinOp::And | BinOp::Or => unreachable!(),
            };
            Ok(out)
        }
        ExprKind::Call(name, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(eval_expr(ctx, state, bindings, a, action_idx)?);
            }
            // local functions shadow external ones
            if let Some(f) = ctx.actor.funcs.iter().find(|f| &f.name == name) {
                if f.params.len() != vals.len() {
                    return Err(ctx.fault(
                        action_idx,
                        Some(expr.pos),
                        format!(
                            "function `{name}` takes {} arguments, got {}",
                            f.params.len(),
                            vals.len()
                        ),
                    ));
                }
                let mut fb = Bindings::new();
                for ((pname, pty), v) in f.params.iter().zip(vals) {
                    let cv =
                        coerce(v, pty).map_err(|m| ctx.fault(action_idx, Some(expr.pos), m))?;
                    fb.insert(pname.clone(), cv);
                }
                let out = eval_expr(ctx, state, &fb, &f.body, action_idx)?;
                return coerce(out, &f.ret).map_err(|m| ctx.fault(action_idx, Some(expr.pos), m));
            }
            if let Some(ef) = ctx.actor.extern_funcs.iter().find(|f| &f.name == name) {
                let host = ctx.host.get(name).ok_or_else(|| {
                    ctx.fault(
                        action_idx,
                        Some(expr.pos),
                        format!("external function `{name}` not registered in the host table"),
                    )
                })?;
                let out = host(&vals).map_err(|m| ctx.fault(action_idx, Some(expr.pos), m))?;
                return coerce(out, &ef.ret).map_err(|m| ctx.fault(action_idx, Some(expr.pos), m));
            }
            if let Some(host) = ctx.host.get(name) {
                return host(&vals).map_err(|m| ctx.fault(action_idx, Some(expr.pos), m));
            }
            Err(ctx.fault(
                action_idx,
                Some(expr.pos),
                format!("unknown function `{name}`"),
            ))
        }
        ExprKind::If(c, t, e) => {
            let cv = eval_expr(ctx, state, bindings, c, action_idx)?
                .as_bool()
                .map_err(|m| ctx.fault(action_idx, Some(c.pos), m))?;
            if cv {
                eval_expr(ctx, state, bindings, t, action_idx)
            } else {
                eval_expr(ctx, state, bindings, e, action_idx)
            }
        }
        ExprKind::ListLit(items) => {
            let mut vals = Vec::with_capacity(items.len());
            for it in items {
                vals.push(eval_expr(ctx, state, bindings, it, action_idx)?);
            }
            Ok(Value::List(vals))
        }
        ExprKind::Index(base, idx) => {
            let b = eval_expr(ctx, state, bindings, base, action_idx)?;
            let i = eval_expr(ctx, state, bindings, idx, action_idx)?
                .as_int()
                .map_err(|m| ctx.fault(action_idx, Some(idx.pos), m))?;
            match b {
                Value::List(items) => {
                    if i < 0 || i as usize >= items.len() {
                        return Err(ctx.fault(
                            action_idx,
                            Some(expr.pos),
                            format!("index {i} out of bounds for list of {}", items.len()),
                        ));
                    }
                    Ok(items[i as usize].clone())
                }
                _ => Err(ctx.fault(action_idx, Some(expr.pos), "indexing a non-list value")),
            }
        }
    }
}

/// Initialize the variable store of a fresh instance: params are already
/// bound; state vars get their initializers (or type defaults).
pub fn init_actor_state(ctx: &EvalCtx) -> Result<ActorState, EvalFault> {
    let mut state = ActorState {
        vars: HashMap::new(),
        pc: 0,
        firings: vec![0; ctx.actor.actions.len()],
    };
    let empty = Bindings::new();
    for sv in &ctx.actor.state_vars {
        let v = match &sv.init {
            Some(e) => eval_expr(ctx, &state, &empty, e, None)?,
            None => default_value(&sv.ty),
        };
        let v = coerce(v, &sv.ty).map_err(|m| ctx.fault(None, Some(sv.pos), m))?;
        state.vars.insert(sv.name.clone(), v);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_document;
    use std::collections::VecDeque;

    /// Simple unbounded test channels.
    pub struct VecIo {
        pub inputs: Vec<VecDeque<i64>>,
        pub outputs: Vec<Vec<i64>>,
        pub out_cap: usize,
    }

    impl VecIo {
        pub fn new(n_in: usize, n_out: usize) -> Self {
            VecIo {
                inputs: (0..n_in).map(|_| VecDeque::new()).collect(),
                outputs: (0..n_out).map(|_| Vec::new()).collect(),
                out_cap: usize::MAX,
            }
        }
    }

    impl ActorIo for VecIo {
        fn input_available(&self, port: usize) -> usize {
            self.inputs[port].len()
        }
        fn input_peek(&self, port: usize, offset: usize) -> i64 {
            self.inputs[port][offset]
        }
        fn input_consume(&mut self, port: usize, count: usize) {
            for _ in 0..count {
                self.inputs[port].pop_front();
            }
        }
        fn output_space(&self, port: usize) -> usize {
            self.out_cap.saturating_sub(self.outputs[port].len())
        }
        fn output_produce(&mut self, port: usize, value: i64) {
            self.outputs[port].push(value);
        }
    }

    fn filter_actor() -> ActorDecl {
        let src = r#"
actor Filter (int param) int(size=32) IN ==> int(size=32) OUT :
  function pred(int t) --> bool : t > param end
  t0: action IN:[t] ==> OUT:[t] guard pred(t) end
  t1: action IN:[t] ==> end
  priority t0 > t1; end
end
"#;
        parse_document(0, src).unwrap().actors.remove(0)
    }

    fn ctx_with<'a>(
        actor: &'a ActorDecl,
        params: &'a HashMap<String, Value>,
        host: &'a HostTable,
    ) -> EvalCtx<'a> {
        EvalCtx {
            actor,
            instance: "filter",
            params,
            host,
        }
    }

    #[test]
    fn scope_binds_peeked_token_without_consuming() {
        let actor = filter_actor();
        let params = HashMap::from([("param".to_string(), Value::Int(5))]);
        let host = HostTable::with_defaults();
        let ctx = ctx_with(&actor, &params, &host);
        let state = init_actor_state(&ctx).unwrap();
        let mut io = VecIo::new(1, 1);
        io.inputs[0].push_back(7);
        let b = eval_scope(&ctx, &state, 0, &io).unwrap();
        assert_eq!(b.get("t"), Some(&Value::Int(7)));
        assert_eq!(io.inputs[0].len(), 1, "peek must not consume");
    }

    #[test]
    fn guard_evaluates_pred_against_param() {
        let actor = filter_actor();
        let params = HashMap::from([("param".to_string(), Value::Int(5))]);
        let host = HostTable::with_defaults();
        let ctx = ctx_with(&actor, &params, &host);
        let state = init_actor_state(&ctx).unwrap();
        let mut io = VecIo::new(1, 1);
        io.inputs[0].push_back(7);
        assert!(eval_guard(&ctx, &state, 0, 0, &io).unwrap());
        io.inputs[0][0] = 3;
        assert!(!eval_guard(&ctx, &state, 0, 0, &io).unwrap());
    }

    #[test]
    fn transition_copies_or_swallows() {
        let actor = filter_actor();
        let params = HashMap::from([("param".to_string(), Value::Int(5))]);
        let host = HostTable::with_defaults();
        let ctx = ctx_with(&actor, &params, &host);
        let mut state = init_actor_state(&ctx).unwrap();
        let mut io = VecIo::new(1, 1);
        io.inputs[0].push_back(7);
        exec_transition(&ctx, &mut state, 0, &mut io).unwrap();
        assert_eq!(io.inputs[0].len(), 0);
        assert_eq!(io.outputs[0], vec![7]);

        io.inputs[0].push_back(3);
        exec_transition(&ctx, &mut state, 1, &mut io).unwrap();
        assert_eq!(io.inputs[0].len(), 0);
        assert_eq!(io.outputs[0], vec![7], "t1 swallows the token");
        assert_eq!(state.firings, vec![1, 1]);
    }

    #[test]
    fn source_emits_pre_increment_value() {
        let src = r#"
actor Source () ==> int(size=32) OUT :
  external function rand(int x) --> int end
  int x := 0;
  action ==> OUT:[rand(x)]
  guard x < 4096
  do
    x := x + 1;
  end
end
"#;
        let actor = parse_document(0, src).unwrap().actors.remove(0);
        let params = HashMap::new();
        let host = HostTable::with_defaults();
        let ctx = EvalCtx {
            actor: &actor,
            instance: "source",
            params: &params,
            host: &host,
        };
        let mut state = init_actor_state(&ctx).unwrap();
        state.vars.insert("x".into(), Value::Int(4095));
        let mut io = VecIo::new(0, 1);
        exec_transition(&ctx, &mut state, 0, &mut io).unwrap();
        assert_eq!(
            io.outputs[0],
            vec![mask_scalar(default_rand(4095), &Type::int(32))]
        );
        assert_eq!(state.vars.get("x"), Some(&Value::Int(4096)));
    }

    #[test]
    fn width_wrapping_on_store() {
        assert_eq!(mask_scalar(255, &Type::int(8)), -1);
        assert_eq!(mask_scalar(256, &Type::int(8)), 0);
        assert_eq!(mask_scalar(255, &Type::Uint { width: 8 }), 255);
        assert_eq!(mask_scalar(256, &Type::Uint { width: 8 }), 0);
        assert_eq!(mask_scalar(i64::MIN, &Type::int(64)), i64::MIN);
    }

    #[test]
    fn division_by_zero_is_a_fault() {
        let src = r#"
actor D () int IN ==> int OUT :
  a: action IN:[t] ==> OUT:[1 / t] end
end
"#;
        let actor = parse_document(0, src).unwrap().actors.remove(0);
        let params = HashMap::new();
        let host = HostTable::with_defaults();
        let ctx = EvalCtx {
            actor: &actor,
            instance: "d",
            params: &params,
            host: &host,
        };
        let mut state = init_actor_state(&ctx).unwrap();
        let mut io = VecIo::new(1, 1);
        io.inputs[0].push_back(0);
        let err = exec_transition(&ctx, &mut state, 0, &mut io).unwrap_err();
        assert!(err.to_string().contains("division by zero"));
        assert!(err.to_string().contains("`d`"));
    }
}
