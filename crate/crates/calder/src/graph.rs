//! Flattened, validated dataflow networks.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ast::*;
use crate::diag::{Diagnostic, FileTable};
use crate::eval::{coerce, eval_expr, ActorState, Bindings, EvalCtx, HostTable, Value};
use crate::parser::parse_document;

/// One instantiated actor with its constructor parameters bound to values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub actor: Arc<ActorDecl>,
    pub params: HashMap<String, Value>,
}

/// Endpoint of a connection.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub instance: usize,
    pub port: String,
}

/// A point-to-point channel between two ports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Connection {
    pub source: PortRef,
    pub target: PortRef,
    pub elem_type: Type,
}

/// The compiled program: instances plus channels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub name: String,
    pub instances: Vec<Instance>,
    pub connections: Vec<Connection>,
}

impl NetworkGraph {
    pub fn instance_index(&self, name: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.name == name)
    }

    /// Stable textual key for a connection: `src.PORT->dst.PORT`.
    pub fn connection_key(&self, conn: &Connection) -> String {
        format!(
            "{}.{}->{}.{}",
            self.instances[conn.source.instance].name,
            conn.source.port,
            self.instances[conn.target.instance].name,
            conn.target.port
        )
    }

    pub fn connection_keys(&self) -> Vec<String> {
        self.connections
            .iter()
            .map(|c| self.connection_key(c))
            .collect()
    }
}

/// Parse one or more documents and flatten the named top network.
///
/// Collects as many validation errors as it can after a syntactically valid
/// parse; syntax errors abort the failing document immediately.
pub fn parse_program(
    sources: &[(String, String)],
    top: &str,
) -> Result<NetworkGraph, (FileTable, Vec<Diagnostic>)> {
    let mut files = FileTable::default();
    let mut program = Program::default();
    let mut errors = Vec::new();
    for (idx, (name, text)) in sources.iter().enumerate() {
        files.names.push(name.clone());
        match parse_document(idx as u32, text) {
            Ok(p) => {
                program.actors.extend(p.actors);
                program.networks.extend(p.networks);
            }
            Err(d) => errors.push(d),
        }
    }
    if !errors.is_empty() {
        return Err((files, errors));
    }
    match flatten(&program, top) {
        Ok(g) => Ok(g),
        Err(diags) => Err((files, diags)),
    }
}

/// Flatten `top` against the program's declarations.
pub fn flatten(program: &Program, top: &str) -> Result<NetworkGraph, Vec<Diagnostic>> {
    let mut errors = Vec::new();

    let mut actors: HashMap<&str, Arc<ActorDecl>> = HashMap::new();
    for a in &program.actors {
        if actors
            .insert(a.name.as_str(), Arc::new(a.clone()))
            .is_some()
        {
            errors.push(Diagnostic::at(
                a.pos,
                format!("duplicate actor `{}`", a.name),
            ));
        }
        validate_actor(a, &mut errors);
    }

    let net = match program.networks.iter().find(|n| n.name == top) {
        Some(n) => n,
        None => {
            errors.push(Diagnostic::global(format!("top network `{top}` not found")));
            return Err(errors);
        }
    };

    // network parameters must have defaults: the top network is closed
    let mut net_env: Bindings = Bindings::new();
    let const_actor = ActorDecl {
        name: net.name.clone(),
        params: vec![],
        in_ports: vec![],
        out_ports: vec![],
        state_vars: vec![],
        funcs: vec![],
        extern_funcs: vec![],
        actions: vec![],
        priorities: vec![],
        pos: net.pos,
    };
    let host = HostTable::empty();
    let no_params = HashMap::new();
    let const_ctx = EvalCtx {
        actor: &const_actor,
        instance: &net.name,
        params: &no_params,
        host: &host,
    };
    let const_state = ActorState {
        vars: HashMap::new(),
        pc: 0,
        firings: vec![],
    };
    for p in &net.params {
        match &p.default {
            Some(e) => match eval_expr(&const_ctx, &const_state, &net_env, e, None) {
                Ok(v) => match coerce(v, &p.ty) {
                    Ok(v) => {
                        net_env.insert(p.name.clone(), v);
                    }
                    Err(m) => errors.push(Diagnostic::at(net.pos, m)),
                },
                Err(f) => errors.push(Diagnostic::at(net.pos, f.to_string())),
            },
            None => errors.push(Diagnostic::at(
                net.pos,
                format!(
                    "network parameter `{}` has no default; the top network must be closed",
                    p.name
                ),
            )),
        }
    }

    let mut instances = Vec::new();
    let mut inst_index: HashMap<&str, usize> = HashMap::new();
    for ent in &net.entities {
        if inst_index.contains_key(ent.instance.as_str()) {
            errors.push(Diagnostic::at(
                ent.pos,
                format!("duplicate instance name `{}`", ent.instance),
            ));
            continue;
        }
        let Some(decl) = actors.get(ent.actor.as_str()) else {
            errors.push(Diagnostic::at(
                ent.pos,
                format!("unknown actor `{}`", ent.actor),
            ));
            continue;
        };
        // bind named arguments against declared parameters
        let mut params: HashMap<String, Value> = HashMap::new();
        let mut seen: HashSet<&str> = HashSet::new();
        for (name, expr) in &ent.args {
            let Some(pd) = decl.params.iter().find(|p| &p.name == name) else {
                errors.push(Diagnostic::at(
                    ent.pos,
                    format!("actor `{}` has no parameter `{name}`", decl.name),
                ));
                continue;
            };
            if !seen.insert(name.as_str()) {
                errors.push(Diagnostic::at(
                    ent.pos,
                    format!("parameter `{name}` bound twice"),
                ));
                continue;
            }
            match eval_expr(&const_ctx, &const_state, &net_env, expr, None) {
                Ok(v) => match coerce(v, &pd.ty) {
                    Ok(v) => {
                        params.insert(name.clone(), v);
                    }
                    Err(m) => errors.push(Diagnostic::at(ent.pos, m)),
                },
                Err(f) => errors.push(Diagnostic::at(ent.pos, f.to_string())),
            }
        }
        for pd in &decl.params {
            if params.contains_key(&pd.name) {
                continue;
            }
            match &pd.default {
                Some(e) => match eval_expr(&const_ctx, &const_state, &net_env, e, None) {
                    Ok(v) => match coerce(v, &pd.ty) {
                        Ok(v) => {
                            params.insert(pd.name.clone(), v);
                        }
                        Err(m) => errors.push(Diagnostic::at(ent.pos, m)),
                    },
                    Err(f) => errors.push(Diagnostic::at(ent.pos, f.to_string())),
                },
                None => errors.push(Diagnostic::at(
                    ent.pos,
                    format!(
                        "instance `{}` of `{}`: missing argument for parameter `{}`",
                        ent.instance, decl.name, pd.name
                    ),
                )),
            }
        }
        inst_index.insert(ent.instance.as_str(), instances.len());
        instances.push(Instance {
            name: ent.instance.clone(),
            actor: Arc::clone(decl),
            params,
        });
    }

    let mut connections = Vec::new();
    let mut target_seen: HashSet<(usize, String)> = HashSet::new();
    for conn in &net.connections {
        let (src_i, src_p) = &conn.from;
        let (dst_i, dst_p) = &conn.to;
        let si = inst_index.get(src_i.as_str()).copied();
        let di = inst_index.get(dst_i.as_str()).copied();
        if si.is_none() {
            errors.push(Diagnostic::at(
                conn.pos,
                format!("unknown instance `{src_i}`"),
            ));
        }
        if di.is_none() {
            errors.push(Diagnostic::at(
                conn.pos,
                format!("unknown instance `{dst_i}`"),
            ));
        }
        let sp = si.and_then(|i| {
            let actor = &instances[i].actor;
            let p = actor.out_ports.iter().find(|p| &p.name == src_p);
            if p.is_none() {
                errors.push(Diagnostic::at(
                    conn.pos,
                    format!("actor `{}` has no output port `{src_p}`", actor.name),
                ));
            }
            p
        });
        let dp = di.and_then(|i| {
            let actor = &instances[i].actor;
            let p = actor.in_ports.iter().find(|p| &p.name == dst_p);
            if p.is_none() {
                errors.push(Diagnostic::at(
                    conn.pos,
                    format!("actor `{}` has no input port `{dst_p}`", actor.name),
                ));
            }
            p
        });
        let (Some(si), Some(di), Some(sp), Some(dp)) = (si, di, sp, dp) else {
            continue;
        };
        if sp.ty != dp.ty {
            errors.push(Diagnostic::at(
                conn.pos,
                format!(
                    "port width mismatch on connection {src_i}.{src_p} --> {dst_i}.{dst_p}: {} vs {}",
                    sp.ty.display(),
                    dp.ty.display()
                ),
            ));
            continue;
        }
        if !target_seen.insert((di, dst_p.clone())) {
            errors.push(Diagnostic::at(
                conn.pos,
                format!("input port {dst_i}.{dst_p} has more than one incoming connection"),
            ));
            continue;
        }
        connections.push(Connection {
            source: PortRef {
                instance: si,
                port: src_p.clone(),
            },
            target: PortRef {
                instance: di,
                port: dst_p.clone(),
            },
            elem_type: sp.ty.clone(),
        });
    }

    if errors.is_empty() {
        Ok(NetworkGraph {
            name: net.name.clone(),
            instances,
            connections,
        })
    } else {
        Err(errors)
    }
}

fn validate_actor(actor: &ActorDecl, errors: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for p in &actor.in_ports {
        if !seen.insert(&p.name) {
            errors.push(Diagnostic::at(
                p.pos,
                format!(
                    "duplicate input port `{}` in actor `{}`",
                    p.name, actor.name
                ),
            ));
        }
        if matches!(p.ty, Type::List { .. }) {
            errors.push(Diagnostic::at(p.pos, "port element type must be scalar"));
        }
    }
    let mut seen = HashSet::new();
    for p in &actor.out_ports {
        if !seen.insert(&p.name) {
            errors.push(Diagnostic::at(
                p.pos,
                format!(
                    "duplicate output port `{}` in actor `{}`",
                    p.name, actor.name
                ),
            ));
        }
        if matches!(p.ty, Type::List { .. }) {
            errors.push(Diagnostic::at(p.pos, "port element type must be scalar"));
        }
    }
    // action port references and pattern sanity
    for (i, act) in actor.actions.iter().enumerate() {
        for pat in &act.inputs {
            if actor.in_port_index(&pat.port).is_none() {
                errors.push(Diagnostic::at(
                    pat.pos,
                    format!(
                        "action `{}` reads unknown input port `{}`",
                        act.display_name(i),
                        pat.port
                    ),
                ));
            }
        }
        for pat in &act.outputs {
            if actor.out_port_index(&pat.port).is_none() {
                errors.push(Diagnostic::at(
                    pat.pos,
                    format!(
                        "action `{}` writes unknown output port `{}`",
                        act.display_name(i),
                        pat.port
                    ),
                ));
            }
        }
    }
    // priority labels exist and the relation is acyclic
    for chain in &actor.priorities {
        for label in chain {
            if actor.action_index(label).is_none() {
                errors.push(Diagnostic::at(
                    actor.pos,
                    format!(
                        "priority references unknown action label `{label}` in actor `{}`",
                        actor.name
                    ),
                ));
            }
        }
    }
    if priority_order(actor).is_none() {
        errors.push(Diagnostic::at(
            actor.pos,
            format!("cyclic priority relation in actor `{}`", actor.name),
        ));
    }
}

/// Strict partial order from priority chains, as an edge list of action
/// indices `(higher, lower)`. Unknown labels are skipped (reported elsewhere).
pub fn priority_edges(actor: &ActorDecl) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for chain in &actor.priorities {
        for pair in chain.windows(2) {
            if let (Some(hi), Some(lo)) =
                (actor.action_index(&pair[0]), actor.action_index(&pair[1]))
            {
                edges.push((hi, lo));
            }
        }
    }
    edges
}

/// Linearize actions: topological order of the priority DAG, ties broken by
/// declaration order. Returns `None` on a priority cycle.
pub fn priority_order(actor: &ActorDecl) -> Option<Vec<usize>> {
    let n = actor.actions.len();
    let edges = priority_edges(actor);
    let mut indeg = vec![0usize; n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (hi, lo) in edges {
        adj[hi].push(lo);
        indeg[lo] += 1;
    }
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    while let Some(&next) = ready.iter().min() {
        ready.retain(|&x| x != next);
        order.push(next);
        for &lo in &adj[next] {
            indeg[lo] -= 1;
            if indeg[lo] == 0 {
                ready.push(lo);
            }
        }
    }
    if order.len() == n {
        Some(order)
    } else {
        None
    }
}

/// True when `hi` is strictly above `lo` in the priority partial order.
pub fn outranks(actor: &ActorDecl, hi: usize, lo: usize) -> bool {
    // transitive closure by DFS over the (small) priority DAG
    let edges = priority_edges(actor);
    let mut stack = vec![hi];
    let mut seen = HashSet::new();
    while let Some(x) = stack.pop() {
        for &(h, l) in &edges {
            if h == x {
                if l == lo {
                    return true;
                }
                if seen.insert(l) {
                    stack.push(l);
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{listing1_sources, TOP_FILTER};

    #[test]
    fn flattens_top_filter() {
        let graph = parse_program(&listing1_sources(), TOP_FILTER).unwrap();
        assert_eq!(graph.instances.len(), 3);
        let names: Vec<&str> = graph.instances.iter().map(|i| i.name.as_str()).collect();
        assert_eq!(names, vec!["source", "filter", "sink"]);
        assert_eq!(graph.connections.len(), 2);
        assert_eq!(
            graph.connection_keys(),
            vec!["source.OUT->filter.IN", "filter.OUT->sink.IN"]
        );
        let filter = &graph.instances[1];
        assert_eq!(filter.params.get("param"), Some(&Value::Int(10)));
    }

    #[test]
    fn empty_network_is_valid() {
        let src = "network Empty () ==> : end";
        let graph = parse_program(&[("empty.cal".into(), src.into())], "Empty").unwrap();
        assert!(graph.instances.is_empty());
        assert!(graph.connections.is_empty());
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let src = r#"
actor P () ==> int(size=16) OUT : a: action ==> OUT:[1] end end
actor C () int(size=32) IN ==> : a: action IN:[t] ==> end end
network N () ==> :
  entities p = P(); c = C();
  structure p.OUT --> c.IN;
end
"#;
        let (_files, errs) = parse_program(&[("n.cal".into(), src.into())], "N").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("width mismatch")));
    }

    #[test]
    fn unknown_port_and_instance_reported() {
        let src = r#"
actor A () ==> int OUT : a: action ==> OUT:[1] end end
network N () ==> :
  entities a = A();
  structure a.NOPE --> b.IN;
end
"#;
        let (_files, errs) = parse_program(&[("n.cal".into(), src.into())], "N").unwrap_err();
        assert!(errs
            .iter()
            .any(|d| d.message.contains("unknown instance `b`")));
        assert!(errs
            .iter()
            .any(|d| d.message.contains("no output port `NOPE`")));
    }

    #[test]
    fn cyclic_priority_rejected() {
        let src = r#"
actor A () int IN ==> :
  x: action IN:[t] ==> end
  y: action IN:[t] ==> end
  priority x > y; y > x; end
end
network N () ==> : entities a = A(); end
"#;
        let (_files, errs) = parse_program(&[("n.cal".into(), src.into())], "N").unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("cyclic priority")));
    }

    #[test]
    fn parameter_arity_mismatch_reported() {
        let src = r#"
actor A (int p) ==> int OUT : a: action ==> OUT:[p] end end
network N () ==> : entities a = A(); end
"#;
        let (_files, errs) = parse_program(&[("n.cal".into(), src.into())], "N").unwrap_err();
        assert!(errs
            .iter()
            .any(|d| d.message.contains("missing argument for parameter `p`")));
    }

    #[test]
    fn parsing_is_deterministic() {
        let a = parse_program(&listing1_sources(), TOP_FILTER).unwrap();
        let b = parse_program(&listing1_sources(), TOP_FILTER).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn priority_linearization_follows_chains_then_decl_order() {
        let src = r#"
actor A () int IN ==> :
  c: action IN:[t] ==> end
  a: action IN:[t] ==> end
  b: action IN:[t] ==> end
  priority b > c; end
end
"#;
        let prog = crate::parser::parse_document(0, src).unwrap();
        let order = priority_order(&prog.actors[0]).unwrap();
        // b (idx 2) must precede c (idx 0); a (idx 1) ties by declaration order
        let pos = |i: usize| order.iter().position(|&x| x == i).unwrap();
        assert!(pos(2) < pos(0));
        assert_eq!(order, vec![1, 2, 0]);
    }
}
