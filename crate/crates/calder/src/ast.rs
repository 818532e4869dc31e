//! Abstract syntax for the actor-language subset.
//!
//! The subset covers bounded integer and bool scalars, fixed-size lists,
//! guarded actions with per-port token patterns, action priorities, pure
//! local functions, and external functions resolved against a host table.

use serde::{Deserialize, Serialize};

use crate::diag::Pos;

/// Scalar and list types. Integer widths are 1..=64 bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Type {
    Int { width: u8 },
    Uint { width: u8 },
    Bool,
    List { elem: Box<Type>, size: usize },
}

impl Type {
    pub fn int(width: u8) -> Self {
        Type::Int { width }
    }

    /// Width of the scalar carried on a port of this type, in bits.
    pub fn bit_width(&self) -> u8 {
        match self {
            Type::Int { width } | Type::Uint { width } => *width,
            Type::Bool => 1,
            Type::List { elem, .. } => elem.bit_width(),
        }
    }

    pub fn display(&self) -> String {
        match self {
            Type::Int { width } => format!("int(size={width})"),
            Type::Uint { width } => format!("uint(size={width})"),
            Type::Bool => "bool".to_string(),
            Type::List { elem, size } => format!("List(type: {}, size={size})", elem.display()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ExprKind {
    IntLit(i64),
    BoolLit(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Call of a local, external, or builtin function.
    Call(String, Vec<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    ListLit(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Stmt {
    Assign {
        target: String,
        index: Option<Expr>,
        value: Expr,
        pos: Pos,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Foreach {
        var: String,
        from: Expr,
        to: Expr,
        body: Vec<Stmt>,
    },
    /// Procedure-style call of a host function (e.g. `println(t)`), value discarded.
    Call {
        name: String,
        args: Vec<Expr>,
        pos: Pos,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: String,
    pub ty: Type,
    pub pos: Pos,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    pub ty: Type,
    pub default: Option<Expr>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateVarDecl {
    pub name: String,
    pub ty: Type,
    pub init: Option<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuncDecl {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
    pub body: Expr,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExternFuncDecl {
    pub name: String,
    pub params: Vec<(String, Type)>,
    pub ret: Type,
}

/// Token bindings consumed from one input port; the pattern length is the
/// consumption count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputPattern {
    pub port: String,
    pub vars: Vec<String>,
    pub pos: Pos,
}

/// Token expressions produced on one output port; the list length is the
/// production count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputPattern {
    pub port: String,
    pub exprs: Vec<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionDecl {
    pub label: Option<String>,
    pub inputs: Vec<InputPattern>,
    pub outputs: Vec<OutputPattern>,
    pub guards: Vec<Expr>,
    pub locals: Vec<StateVarDecl>,
    pub body: Vec<Stmt>,
    /// Relative cost annotation (`@weight(n)`), default 1. Used by the
    /// hardware cost model only.
    pub weight: u64,
    pub pos: Pos,
}

impl ActionDecl {
    /// Display name: the label if present, else `action@<index>` supplied by caller.
    pub fn display_name(&self, index: usize) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!("action{index}"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActorDecl {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub in_ports: Vec<PortDecl>,
    pub out_ports: Vec<PortDecl>,
    pub state_vars: Vec<StateVarDecl>,
    pub funcs: Vec<FuncDecl>,
    pub extern_funcs: Vec<ExternFuncDecl>,
    pub actions: Vec<ActionDecl>,
    /// Priority chains, each `a > b > c` in source order.
    pub priorities: Vec<Vec<String>>,
    pub pos: Pos,
}

impl ActorDecl {
    pub fn in_port_index(&self, name: &str) -> Option<usize> {
        self.in_ports.iter().position(|p| p.name == name)
    }

    pub fn out_port_index(&self, name: &str) -> Option<usize> {
        self.out_ports.iter().position(|p| p.name == name)
    }

    pub fn action_index(&self, label: &str) -> Option<usize> {
        self.actions
            .iter()
            .position(|a| a.label.as_deref() == Some(label))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntityDecl {
    pub instance: String,
    pub actor: String,
    /// Named constructor arguments.
    pub args: Vec<(String, Expr)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectionDecl {
    pub from: (String, String),
    pub to: (String, String),
    pub pos: Pos,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkDecl {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub entities: Vec<EntityDecl>,
    pub connections: Vec<ConnectionDecl>,
    pub pos: Pos,
}

/// All top-level declarations parsed from one or more documents.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Program {
    pub actors: Vec<ActorDecl>,
    pub networks: Vec<NetworkDecl>,
}
