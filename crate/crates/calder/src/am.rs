//! Lowering actors to single-instruction actor machines.
//!
//! The controller encodes action selection as a state machine over
//! *condition knowledge*: each state remembers, per condition, whether it is
//! known false (0), known true (1), or unknown (X). Three instructions drive
//! it: TEST resolves one unknown condition, EXEC fires an action, WAIT parks
//! the actor until an external event and discards knowledge such an event
//! could invalidate.
//!
//! Knowledge retention rules:
//! - EXEC resets every condition to X (consumption, production, and state
//!   writes can invalidate anything), so every EXEC returns to the initial
//!   all-X state.
//! - WAIT keeps `input-tokens = 1` (tokens leave a port's queue only when
//!   this actor consumes them) and keeps guard values that depend only on
//!   state variables; everything else — absent input, output-space knowledge,
//!   peeked-token guards — resets to X because arrivals and space frees happen
//!   outside the actor.
//!
//! Priority handling: a lower-priority action may fire only when every
//! strictly-higher-priority action is disabled by missing input or a false
//! guard. Known-missing *output space* does not release lower actions; the
//! controller waits for space instead, which keeps bounded-buffer traces
//! identical to the unbounded-buffer semantics for deterministic actors.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ast::{ActionDecl, ActorDecl, Expr, ExprKind};
use crate::graph::priority_order;

pub const MAX_STATES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionKind {
    /// At least `count` tokens available on input port `port`.
    InputTokens { port: usize, count: usize },
    /// At least `count` free slots on every channel of output port `port`.
    OutputSpace { port: usize, count: usize },
    /// Guard `guard_idx` of action `action`.
    Guard { action: usize, guard_idx: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Condition {
    pub kind: ConditionKind,
    /// Changeable by events outside the actor machine.
    pub transient: bool,
}

/// Condition knowledge value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Know {
    False,
    True,
    Unknown,
}

impl Know {
    pub fn symbol(self) -> char {
        match self {
            Know::False => '0',
            Know::True => '1',
            Know::Unknown => 'X',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instruction {
    Test {
        condition: usize,
        if_true: usize,
        if_false: usize,
    },
    Exec {
        action: usize,
        next: usize,
    },
    Wait {
        next: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct State {
    pub knowledge: Vec<Know>,
    pub instruction: Instruction,
}

/// Per-action condition requirements, each sorted by global condition order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionReq {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub guards: Vec<usize>,
    /// All of the above merged, sorted by condition index.
    pub all: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActorMachine {
    pub actor: Arc<ActorDecl>,
    pub conditions: Vec<Condition>,
    pub states: Vec<State>,
    /// Initial state: all conditions unknown. Also every EXEC's successor.
    pub initial: usize,
    pub requirements: Vec<ActionReq>,
    /// Actions in priority-then-declaration order.
    pub linear_order: Vec<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum AmError {
    #[error("actor `{actor}` exceeds the controller state bound of {MAX_STATES} states")]
    StateExplosion { actor: String },
    #[error("actor `{actor}` has a cyclic priority relation")]
    CyclicPriority { actor: String },
}

/// Total order over conditions: input availability first (port declaration
/// order, then count), then output space, then guards (priority rank of the
/// owning action, then declaration order, then guard index). A pure function
/// of the declaration.
pub fn condition_order(actor: &ActorDecl) -> Result<Vec<Condition>, AmError> {
    let linear = priority_order(actor).ok_or_else(|| AmError::CyclicPriority {
        actor: actor.name.clone(),
    })?;
    let rank_of = |action: usize| linear.iter().position(|&a| a == action).unwrap();

    let mut inputs: Vec<(usize, usize)> = Vec::new();
    let mut outputs: Vec<(usize, usize)> = Vec::new();
    for action in &actor.actions {
        for pat in &action.inputs {
            let port = actor.in_port_index(&pat.port).expect("validated");
            if pat.vars.is_empty() {
                continue;
            }
            if !inputs.contains(&(port, pat.vars.len())) {
                inputs.push((port, pat.vars.len()));
            }
        }
        for pat in &action.outputs {
            let port = actor.out_port_index(&pat.port).expect("validated");
            if pat.exprs.is_empty() {
                continue;
            }
            if !outputs.contains(&(port, pat.exprs.len())) {
                outputs.push((port, pat.exprs.len()));
            }
        }
    }
    inputs.sort();
    outputs.sort();

    let mut conditions = Vec::new();
    for (port, count) in inputs {
        conditions.push(Condition {
            kind: ConditionKind::InputTokens { port, count },
            transient: true,
        });
    }
    for (port, count) in outputs {
        conditions.push(Condition {
            kind: ConditionKind::OutputSpace { port, count },
            transient: true,
        });
    }
    let mut guard_owner: Vec<(usize, usize)> = (0..actor.actions.len())
        .flat_map(|a| (0..actor.actions[a].guards.len()).map(move |g| (a, g)))
        .collect();
    guard_owner.sort_by_key(|&(a, g)| (rank_of(a), a, g));
    for (action, guard_idx) in guard_owner {
        conditions.push(Condition {
            kind: ConditionKind::Guard { action, guard_idx },
            transient: guard_reads_tokens(&actor.actions[action], guard_idx),
        });
    }
    Ok(conditions)
}

/// A guard is transient when it (possibly through action locals) reads a
/// variable bound from a peeked input token.
fn guard_reads_tokens(action: &ActionDecl, guard_idx: usize) -> bool {
    let token_vars: HashSet<&str> = action
        .inputs
        .iter()
        .flat_map(|p| p.vars.iter().map(String::as_str))
        .collect();
    if token_vars.is_empty() {
        return false;
    }
    // locals whose initializer (transitively) touches a token var
    let mut tainted: HashSet<&str> = token_vars.clone();
    for local in &action.locals {
        if let Some(init) = &local.init {
            let mut free = HashSet::new();
            free_vars(init, &mut free);
            if free.iter().any(|v| tainted.contains(v.as_str())) {
                tainted.insert(local.name.as_str());
            }
        }
    }
    let mut free = HashSet::new();
    free_vars(&action.guards[guard_idx], &mut free);
    free.iter().any(|v| tainted.contains(v.as_str()))
}

fn free_vars(expr: &Expr, out: &mut HashSet<String>) {
    match &expr.kind {
        ExprKind::IntLit(_) | ExprKind::BoolLit(_) => {}
        ExprKind::Var(name) => {
            out.insert(name.clone());
        }
        ExprKind::Unary(_, e) => free_vars(e, out),
        ExprKind::Binary(_, l, r) => {
            free_vars(l, out);
            free_vars(r, out);
        }
        ExprKind::Call(_, args) => {
            // local-function bodies close over actor scope, not action scope,
            // so only the argument expressions can carry token taint
            for a in args {
                free_vars(a, out);
            }
        }
        ExprKind::If(c, t, e) => {
            free_vars(c, out);
            free_vars(t, out);
            free_vars(e, out);
        }
        ExprKind::ListLit(items) => {
            for i in items {
                free_vars(i, out);
            }
        }
        ExprKind::Index(b, i) => {
            free_vars(b, out);
            free_vars(i, out);
        }
    }
}

fn requirements(actor: &ActorDecl, conditions: &[Condition]) -> Vec<ActionReq> {
    let find = |kind: &ConditionKind| -> usize {
        conditions
            .iter()
            .position(|c| c.kind == *kind)
            .expect("condition present by construction")
    };
    (0..actor.actions.len())
        .map(|ai| {
            let action = &actor.actions[ai];
            let mut inputs = Vec::new();
            for pat in &action.inputs {
                if pat.vars.is_empty() {
                    continue;
                }
                let port = actor.in_port_index(&pat.port).unwrap();
                inputs.push(find(&ConditionKind::InputTokens {
                    port,
                    count: pat.vars.len(),
                }));
            }
            let mut outputs = Vec::new();
            for pat in &action.outputs {
                if pat.exprs.is_empty() {
                    continue;
                }
                let port = actor.out_port_index(&pat.port).unwrap();
                outputs.push(find(&ConditionKind::OutputSpace {
                    port,
                    count: pat.exprs.len(),
                }));
            }
            let mut guards = Vec::new();
            for gi in 0..action.guards.len() {
                guards.push(find(&ConditionKind::Guard {
                    action: ai,
                    guard_idx: gi,
                }));
            }
            inputs.sort_unstable();
            outputs.sort_unstable();
            guards.sort_unstable();
            let mut all: Vec<usize> = inputs
                .iter()
                .chain(&outputs)
                .chain(&guards)
                .copied()
                .collect();
            all.sort_unstable();
            ActionReq {
                inputs,
                outputs,
                guards,
                all,
            }
        })
        .collect()
}

/// What the controller should do in a given knowledge state.
enum Decision {
    Exec(usize),
    Test(usize),
    Wait,
}

fn decide(knowledge: &[Know], linear_order: &[usize], reqs: &[ActionReq]) -> Decision {
    for &a in linear_order {
        let req = &reqs[a];
        // disabled by missing input or false guard: releases priority
        let hard_disabled = req
            .inputs
            .iter()
            .chain(&req.guards)
            .any(|&c| knowledge[c] == Know::False);
        if hard_disabled {
            continue;
        }
        if req.all.iter().all(|&c| knowledge[c] == Know::True) {
            return Decision::Exec(a);
        }
        // highest-priority viable action found; known-missing output space
        // stalls the whole controller rather than releasing lower actions
        if req.outputs.iter().any(|&c| knowledge[c] == Know::False) {
            return Decision::Wait;
        }
        let next_unknown = req
            .all
            .iter()
            .copied()
            .find(|&c| knowledge[c] == Know::Unknown)
            .expect("not enabled, not disabled: some condition is unknown");
        return Decision::Test(next_unknown);
    }
    Decision::Wait
}

fn wait_successor(knowledge: &[Know], conditions: &[Condition]) -> Vec<Know> {
    knowledge
        .iter()
        .zip(conditions)
        .map(|(&k, c)| match (&c.kind, c.transient, k) {
            (ConditionKind::InputTokens { .. }, _, Know::True) => Know::True,
            (ConditionKind::Guard { .. }, false, v) => v,
            _ => Know::Unknown,
        })
        .collect()
}

/// Build the single-instruction actor machine for a validated actor. States
/// are created lazily from the all-X initial state.
pub fn build_siam(actor: &Arc<ActorDecl>) -> Result<ActorMachine, AmError> {
    let conditions = condition_order(actor)?;
    let linear_order = priority_order(actor).ok_or_else(|| AmError::CyclicPriority {
        actor: actor.name.clone(),
    })?;
    let reqs = requirements(actor, &conditions);

    let mut states: Vec<(Vec<Know>, Option<Instruction>)> = Vec::new();
    let mut index: HashMap<Vec<Know>, usize> = HashMap::new();
    let mut queue = VecDeque::new();

    let initial_knowledge = vec![Know::Unknown; conditions.len()];
    index.insert(initial_knowledge.clone(), 0);
    states.push((initial_knowledge, None));
    queue.push_back(0usize);

    while let Some(sid) = queue.pop_front() {
        let knowledge = states[sid].0.clone();
        let mut intern = |k: Vec<Know>,
                          states: &mut Vec<(Vec<Know>, Option<Instruction>)>,
                          queue: &mut VecDeque<usize>|
         -> Result<usize, AmError> {
            if let Some(&id) = index.get(&k) {
                return Ok(id);
            }
            if states.len() >= MAX_STATES {
                return Err(AmError::StateExplosion {
                    actor: actor.name.clone(),
                });
            }
            let id = states.len();
            index.insert(k.clone(), id);
            states.push((k, None));
            queue.push_back(id);
            Ok(id)
        };
        let instr = match decide(&knowledge, &linear_order, &reqs) {
            Decision::Exec(action) => {
                // every EXEC discards all knowledge
                Instruction::Exec { action, next: 0 }
            }
            Decision::Wait => {
                let next = wait_successor(&knowledge, &conditions);
                Instruction::Wait {
                    next: intern(next, &mut states, &mut queue)?,
                }
            }
            Decision::Test(condition) => {
                let mut t = knowledge.clone();
                t[condition] = Know::True;
                let mut f = knowledge.clone();
                f[condition] = Know::False;
                let if_true = intern(t, &mut states, &mut queue)?;
                let if_false = intern(f, &mut states, &mut queue)?;
                Instruction::Test {
                    condition,
                    if_true,
                    if_false,
                }
            }
        };
        states[sid].1 = Some(instr);
    }

    Ok(ActorMachine {
        actor: Arc::clone(actor),
        conditions,
        states: states
            .into_iter()
            .map(|(knowledge, instr)| State {
                knowledge,
                instruction: instr.expect("every created state was processed"),
            })
            .collect(),
        initial: 0,
        requirements: reqs,
        linear_order,
    })
}

impl ActorMachine {
    pub fn knowledge_label(&self, state: usize) -> String {
        self.states[state]
            .knowledge
            .iter()
            .map(|k| k.symbol())
            .collect()
    }

    pub fn condition_label(&self, cond: usize) -> String {
        match &self.conditions[cond].kind {
            ConditionKind::InputTokens { port, count } => {
                format!("tokens({}) >= {count}", self.actor.in_ports[*port].name)
            }
            ConditionKind::OutputSpace { port, count } => {
                format!("space({}) >= {count}", self.actor.out_ports[*port].name)
            }
            ConditionKind::Guard { action, guard_idx } => format!(
                "guard {}#{guard_idx}",
                self.actor.actions[*action].display_name(*action)
            ),
        }
    }

    pub fn instruction_count(&self) -> (usize, usize, usize) {
        let mut tests = 0;
        let mut execs = 0;
        let mut waits = 0;
        for s in &self.states {
            match s.instruction {
                Instruction::Test { .. } => tests += 1,
                Instruction::Exec { .. } => execs += 1,
                Instruction::Wait { .. } => waits += 1,
            }
        }
        (tests, execs, waits)
    }

    /// True when, holding every condition at the ambient value, the controller
    /// starting from `state` performs only TESTs and reaches a WAIT; an EXEC
    /// on the way means the actor can still make progress.
    pub fn is_idle_state(&self, state: usize, ambient: &[bool]) -> bool {
        debug_assert_eq!(ambient.len(), self.conditions.len());
        let mut at = state;
        for _ in 0..=self.conditions.len() {
            match self.states[at].instruction {
                Instruction::Wait { .. } => return true,
                Instruction::Exec { .. } => return false,
                Instruction::Test {
                    condition,
                    if_true,
                    if_false,
                } => {
                    at = if ambient[condition] {
                        if_true
                    } else {
                        if_false
                    };
                }
            }
        }
        unreachable!("TEST paths are bounded by the condition count");
    }

    /// Controller dump in Graphviz dot form, states labeled by knowledge
    /// vector.
    pub fn dump_dot(&self) -> String {
        let mut out = String::new();
        writeln!(out, "digraph \"{}\" {{", self.actor.name).unwrap();
        writeln!(out, "  rankdir=TB;").unwrap();
        for (i, c) in self.conditions.iter().enumerate() {
            writeln!(
                out,
                "  // c{i}: {}{}",
                self.condition_label(i),
                if c.transient { " (transient)" } else { "" }
            )
            .unwrap();
        }
        for (i, s) in self.states.iter().enumerate() {
            let label = self.knowledge_label(i);
            match s.instruction {
                Instruction::Test {
                    condition,
                    if_true,
                    if_false,
                } => {
                    writeln!(
                        out,
                        "  s{i} [shape=diamond,label=\"{label}\\ntest c{condition}\"];"
                    )
                    .unwrap();
                    writeln!(out, "  s{i} -> s{if_true} [label=\"1\"];").unwrap();
                    writeln!(out, "  s{i} -> s{if_false} [label=\"0\"];").unwrap();
                }
                Instruction::Exec { action, next } => {
                    writeln!(
                        out,
                        "  s{i} [shape=box,label=\"{label}\\nexec {}\"];",
                        self.actor.actions[action].display_name(action)
                    )
                    .unwrap();
                    writeln!(out, "  s{i} -> s{next};").unwrap();
                }
                Instruction::Wait { next } => {
                    writeln!(out, "  s{i} [shape=doublecircle,label=\"{label}\\nwait\"];").unwrap();
                    writeln!(out, "  s{i} -> s{next};").unwrap();
                }
            }
        }
        writeln!(out, "}}").unwrap();
        out
    }

    /// Index of the state whose knowledge label matches, for tests.
    pub fn state_by_label(&self, label: &str) -> Option<usize> {
        (0..self.states.len()).find(|&i| self.knowledge_label(i) == label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_document;

    fn actor(src: &str) -> Arc<ActorDecl> {
        Arc::new(parse_document(0, src).unwrap().actors.remove(0))
    }

    fn filter() -> Arc<ActorDecl> {
        actor(
            r#"
actor Filter (int param) int(size=32) IN ==> int(size=32) OUT :
  function pred(int t) --> bool : t > param end
  t0: action IN:[t] ==> OUT:[t] guard pred(t) end
  t1: action IN:[t] ==> end
  priority t0 > t1; end
end
"#,
        )
    }

    #[test]
    fn filter_conditions_are_input_space_guard() {
        let conds = condition_order(&filter()).unwrap();
        assert_eq!(conds.len(), 3);
        assert_eq!(
            conds[0].kind,
            ConditionKind::InputTokens { port: 0, count: 1 }
        );
        assert_eq!(
            conds[1].kind,
            ConditionKind::OutputSpace { port: 0, count: 1 }
        );
        assert_eq!(
            conds[2].kind,
            ConditionKind::Guard {
                action: 0,
                guard_idx: 0
            }
        );
        assert!(conds.iter().all(|c| c.transient));
    }

    /// The Filter controller has the expected shape: seven states, test
    /// order c0 -> c1 -> c2, EXEC t0 from 111, EXEC t1 from 110 only (guard
    /// false), waits at 0XX and 10X, and entry points XXX and 1XX.
    #[test]
    fn filter_controller_shape() {
        let am = build_siam(&filter()).unwrap();
        assert_eq!(am.states.len(), 7);
        let (tests, execs, waits) = am.instruction_count();
        assert_eq!((tests, execs, waits), (3, 2, 2));

        let s = |label: &str| am.state_by_label(label).unwrap();
        assert_eq!(am.knowledge_label(am.initial), "XXX");

        match am.states[s("XXX")].instruction {
            Instruction::Test {
                condition,
                if_true,
                if_false,
            } => {
                assert_eq!(condition, 0);
                assert_eq!(if_true, s("1XX"));
                assert_eq!(if_false, s("0XX"));
            }
            _ => panic!("XXX must test c0"),
        }
        match am.states[s("1XX")].instruction {
            Instruction::Test { condition, .. } => assert_eq!(condition, 1),
            _ => panic!("1XX must test c1"),
        }
        match am.states[s("11X")].instruction {
            Instruction::Test { condition, .. } => assert_eq!(condition, 2),
            _ => panic!("11X must test c2"),
        }
        match am.states[s("111")].instruction {
            Instruction::Exec { action, next } => {
                assert_eq!(action, 0);
                assert_eq!(next, am.initial);
            }
            _ => panic!("111 must exec t0"),
        }
        match am.states[s("110")].instruction {
            Instruction::Exec { action, next } => {
                assert_eq!(action, 1, "t1 fires exactly when the guard is known false");
                assert_eq!(next, am.initial);
            }
            _ => panic!("110 must exec t1"),
        }
        match am.states[s("0XX")].instruction {
            Instruction::Wait { next } => assert_eq!(next, s("XXX")),
            _ => panic!("0XX must wait"),
        }
        match am.states[s("10X")].instruction {
            Instruction::Wait { next } => {
                assert_eq!(next, s("1XX"), "wait keeps the known input token");
            }
            _ => panic!("10X must wait for output space"),
        }
    }

    /// One action, one input token, one output token, no guard: the knowledge
    /// lattice reaches five states carrying 2 TESTs, 1 EXEC, and 2 WAITs.
    #[test]
    fn relay_controller_enumeration() {
        let am = build_siam(&actor(
            r#"
actor Relay () int IN ==> int OUT :
  a: action IN:[t] ==> OUT:[t] end
end
"#,
        ))
        .unwrap();
        assert_eq!(am.conditions.len(), 2);
        assert_eq!(am.states.len(), 5);
        assert_eq!(am.instruction_count(), (2, 1, 2));
    }

    #[test]
    fn zero_action_actor_waits_on_itself() {
        let am = build_siam(&actor("actor Nop () ==> : end")).unwrap();
        assert_eq!(am.states.len(), 1);
        match am.states[0].instruction {
            Instruction::Wait { next } => assert_eq!(next, 0),
            _ => panic!("must wait"),
        }
        assert!(am.is_idle_state(0, &[]));
    }

    #[test]
    fn guard_order_follows_priority_not_declaration() {
        let base = r#"
actor A () int IN ==> :
  lo: action IN:[t] ==> guard t > 1 end
  hi: action IN:[t] ==> guard t > 2 end
  priority hi > lo; end
end
"#;
        let permuted = r#"
actor A () int IN ==> :
  hi: action IN:[t] ==> guard t > 2 end
  lo: action IN:[t] ==> guard t > 1 end
  priority hi > lo; end
end
"#;
        for src in [base, permuted] {
            let a = actor(src);
            let conds = condition_order(&a).unwrap();
            let hi_idx = a.action_index("hi").unwrap();
            let lo_idx = a.action_index("lo").unwrap();
            assert_eq!(
                conds[1].kind,
                ConditionKind::Guard {
                    action: hi_idx,
                    guard_idx: 0
                }
            );
            assert_eq!(
                conds[2].kind,
                ConditionKind::Guard {
                    action: lo_idx,
                    guard_idx: 0
                }
            );
        }
    }

    #[test]
    fn state_guard_is_non_transient_and_survives_wait() {
        let am = build_siam(&actor(
            r#"
actor Source () ==> int OUT :
  int x := 0;
  go: action ==> OUT:[x]
  guard x < 4
  do
    x := x + 1;
  end
end
"#,
        ))
        .unwrap();
        // c0 = space, c1 = guard over state var only
        assert!(am.conditions[0].transient);
        assert!(!am.conditions[1].transient);
        // once the guard is known false the actor parks permanently: X0 waits on itself
        let x0 = am.state_by_label("X0").unwrap();
        match am.states[x0].instruction {
            Instruction::Wait { next } => assert_eq!(next, x0),
            _ => panic!("exhausted source must wait on itself"),
        }
        assert!(am.is_idle_state(x0, &[true, false]));
    }

    #[test]
    fn idle_states_match_filter_figure() {
        let am = build_siam(&filter()).unwrap();
        // no input: parked
        let s0 = am.state_by_label("0XX").unwrap();
        assert!(am.is_idle_state(s0, &[false, true, true]));
        // everything available: progress possible
        let s = am.state_by_label("XXX").unwrap();
        assert!(!am.is_idle_state(s, &[true, true, true]));
        let s111 = am.state_by_label("111").unwrap();
        assert!(!am.is_idle_state(s111, &[true, true, true]));
        // input but no space: parked until space frees
        let s10x = am.state_by_label("10X").unwrap();
        assert!(am.is_idle_state(s10x, &[true, false, true]));
        // after space frees, the wait target (1XX) can reach an EXEC again
        let s1xx = am.state_by_label("1XX").unwrap();
        assert!(!am.is_idle_state(s1xx, &[true, true, true]));
        assert!(am.is_idle_state(s1xx, &[true, false, true]));
    }

    #[test]
    fn knowledge_grows_along_test_paths() {
        let am = build_siam(&filter()).unwrap();
        for s in &am.states {
            if let Instruction::Test {
                condition,
                if_true,
                if_false,
            } = s.instruction
            {
                assert_eq!(s.knowledge[condition], Know::Unknown);
                for &succ in &[if_true, if_false] {
                    let k = &am.states[succ].knowledge;
                    let known = |v: &Vec<Know>| v.iter().filter(|&&x| x != Know::Unknown).count();
                    assert_eq!(known(k), known(&s.knowledge) + 1);
                    // successors differ from the source only in the tested condition
                    for (i, (&a, &b)) in s.knowledge.iter().zip(k.iter()).enumerate() {
                        if i != condition {
                            assert_eq!(a, b);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn multi_token_consumption_yields_single_condition() {
        let am = build_siam(&actor(
            r#"
actor Pair () int IN ==> int OUT :
  a: action IN:[x, y] ==> OUT:[x + y] end
end
"#,
        ))
        .unwrap();
        assert_eq!(
            am.conditions[0].kind,
            ConditionKind::InputTokens { port: 0, count: 2 }
        );
        assert_eq!(am.conditions.len(), 2);
    }

    #[test]
    fn dump_dot_mentions_all_states() {
        let am = build_siam(&filter()).unwrap();
        let dot = am.dump_dot();
        for i in 0..am.states.len() {
            assert!(dot.contains(&format!("s{i} ")));
        }
        assert!(dot.contains("digraph"));
    }
}
