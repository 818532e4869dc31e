//! Hardware controller source emission.
//!
//! Emits, per actor machine, a C++-dialect class: an `io_t` struct exposing
//! count/size/peek per port (the FWFT queue interface), one function per
//! scope, condition, and transition, and a top `operator()` switching over
//! `program_counter` so execution continues across invocations. The output
//! is a deterministic text artifact checked structurally and against golden
//! files; no vendor toolchain ever sees it.

use std::fmt::Write as _;

use crate::am::{ActorMachine, ConditionKind, Instruction};
use crate::ast::*;
use crate::graph::NetworkGraph;
use crate::xcf::PartitionPlan;

fn cpp_type(ty: &Type) -> String {
    fn width_up(w: u8) -> u8 {
        match w {
            0..=8 => 8,
            9..=16 => 16,
            17..=32 => 32,
            _ => 64,
        }
    }
    match ty {
        Type::Bool => "bool".into(),
        Type::Int { width } => format!("int{}_t", width_up(*width)),
        Type::Uint { width } => format!("uint{}_t", width_up(*width)),
        Type::List { elem, .. } => cpp_type(elem),
    }
}

fn cpp_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::IntLit(v) => write!(out, "{v}").unwrap(),
        ExprKind::BoolLit(b) => write!(out, "{b}").unwrap(),
        ExprKind::Var(n) => out.push_str(n),
        ExprKind::Unary(op, a) => {
            out.push_str(match op {
                UnOp::Neg => "-(",
                UnOp::Not => "!(",
            });
            cpp_expr(a, out);
            out.push(')');
        }
        ExprKind::Binary(op, l, r) => {
            out.push('(');
            cpp_expr(l, out);
            out.push_str(match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
                BinOp::Mod => " % ",
                BinOp::Shl => " << ",
                BinOp::Shr => " >> ",
                BinOp::BitAnd => " & ",
                BinOp::BitOr => " | ",
                BinOp::BitXor => " ^ ",
                BinOp::Lt => " < ",
                BinOp::Le => " <= ",
                BinOp::Gt => " > ",
                BinOp::Ge => " >= ",
                BinOp::Eq => " == ",
                BinOp::Ne => " != ",
                BinOp::And => " && ",
                BinOp::Or => " || ",
            });
            cpp_expr(r, out);
            out.push(')');
        }
        ExprKind::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                cpp_expr(a, out);
            }
            out.push(')');
        }
        ExprKind::If(c, t, f) => {
            out.push('(');
            cpp_expr(c, out);
            out.push_str(" ? ");
            cpp_expr(t, out);
            out.push_str(" : ");
            cpp_expr(f, out);
            out.push(')');
        }
        ExprKind::ListLit(items) => {
            out.push('{');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                cpp_expr(it, out);
            }
            out.push('}');
        }
        ExprKind::Index(b, i) => {
            cpp_expr(b, out);
            out.push('[');
            cpp_expr(i, out);
            out.push(']');
        }
    }
}

fn cpp_stmts(stmts: &[Stmt], indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    for s in stmts {
        match s {
            Stmt::Assign {
                target,
                index,
                value,
                ..
            } => {
                out.push_str(&pad);
                out.push_str(target);
                if let Some(i) = index {
                    out.push('[');
                    cpp_expr(i, out);
                    out.push(']');
                }
                out.push_str(" = ");
                cpp_expr(value, out);
                out.push_str(";\n");
            }
            Stmt::If {
                cond,
                then_body,
                else_body,
            } => {
                out.push_str(&pad);
                out.push_str("if (");
                cpp_expr(cond, out);
                out.push_str(") {\n");
                cpp_stmts(then_body, indent + 1, out);
                if else_body.is_empty() {
                    out.push_str(&pad);
                    out.push_str("}\n");
                } else {
                    out.push_str(&pad);
                    out.push_str("} else {\n");
                    cpp_stmts(else_body, indent + 1, out);
                    out.push_str(&pad);
                    out.push_str("}\n");
                }
            }
            Stmt::While { cond, body } => {
                out.push_str(&pad);
                out.push_str("while (");
                cpp_expr(cond, out);
                out.push_str(") {\n");
                cpp_stmts(body, indent + 1, out);
                out.push_str(&pad);
                out.push_str("}\n");
            }
            Stmt::Foreach {
                var,
                from,
                to,
                body,
            } => {
                out.push_str(&pad);
                write!(out, "for (int64_t {var} = ").unwrap();
                cpp_expr(from, out);
                write!(out, "; {var} <= ").unwrap();
                cpp_expr(to, out);
                writeln!(out, "; ++{var}) {{").unwrap();
                cpp_stmts(body, indent + 1, out);
                out.push_str(&pad);
                out.push_str("}\n");
            }
            Stmt::Call { name, args, .. } => {
                out.push_str(&pad);
                out.push_str(name);
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    cpp_expr(a, out);
                }
                out.push_str(");\n");
            }
        }
    }
}

/// Emit the hardware controller class for one actor machine. Byte
/// deterministic per input.
pub fn emit_ham(am: &ActorMachine) -> String {
    let actor = &am.actor;
    let class = format!("{}_ham", actor.name.to_lowercase());
    let mut out = String::new();
    writeln!(
        out,
        "// auto-generated hardware controller for actor {}",
        actor.name
    )
    .unwrap();
    writeln!(out, "// do not edit").unwrap();
    writeln!(out, "#include <cstdint>").unwrap();
    writeln!(out, "#include \"fwft_stream.h\"").unwrap();
    out.push('\n');
    for ef in &actor.extern_funcs {
        let args = ef
            .params
            .iter()
            .map(|(n, t)| format!("{} {n}", cpp_type(t)))
            .collect::<Vec<_>>()
            .join(", ");
        writeln!(out, "extern {} {}({});", cpp_type(&ef.ret), ef.name, args).unwrap();
    }
    if !actor.extern_funcs.is_empty() {
        out.push('\n');
    }

    writeln!(out, "class {class} {{").unwrap();
    writeln!(out, "public:").unwrap();

    // FWFT-facing io structure: count/peek per input, size per output
    writeln!(out, "  struct io_t {{").unwrap();
    for p in &actor.in_ports {
        writeln!(out, "    uint32_t {}_count;", p.name).unwrap();
        let max_peek = actor
            .actions
            .iter()
            .flat_map(|a| a.inputs.iter())
            .filter(|pat| pat.port == p.name)
            .map(|pat| pat.vars.len())
            .max()
            .unwrap_or(0);
        if max_peek > 1 {
            writeln!(out, "    {} {}_peek[{max_peek}];", cpp_type(&p.ty), p.name).unwrap();
        } else {
            writeln!(out, "    {} {}_peek;", cpp_type(&p.ty), p.name).unwrap();
        }
    }
    for p in &actor.out_ports {
        writeln!(out, "    uint32_t {}_size;", p.name).unwrap();
        writeln!(out, "    uint32_t {}_count;", p.name).unwrap();
    }
    writeln!(out, "  }};").unwrap();
    out.push('\n');
    writeln!(
        out,
        "  enum class ret_t : uint8_t {{ RETURN_WAIT = 0, RETURN_EXEC = 1 }};"
    )
    .unwrap();
    out.push('\n');

    writeln!(out, "private:").unwrap();
    writeln!(out, "  int32_t program_counter = {};", am.initial).unwrap();
    for p in &actor.params {
        writeln!(out, "  {} {};", cpp_type(&p.ty), p.name).unwrap();
    }
    for sv in &actor.state_vars {
        match &sv.ty {
            Type::List { size, .. } => {
                writeln!(out, "  {} {}[{size}];", cpp_type(&sv.ty), sv.name).unwrap()
            }
            _ => writeln!(out, "  {} {};", cpp_type(&sv.ty), sv.name).unwrap(),
        }
    }
    out.push('\n');

    // local functions
    for f in &actor.funcs {
        let args = f
            .params
            .iter()
            .map(|(n, t)| format!("{} {n}", cpp_type(t)))
            .collect::<Vec<_>>()
            .join(", ");
        write!(
            out,
            "  {} {}({}) {{ return ",
            cpp_type(&f.ret),
            f.name,
            args
        )
        .unwrap();
        cpp_expr(&f.body, &mut out);
        writeln!(out, "; }}").unwrap();
    }
    if !actor.funcs.is_empty() {
        out.push('\n');
    }

    // scopes: peeked token bindings plus action locals, by value
    for (ai, action) in actor.actions.iter().enumerate() {
        let name = action.display_name(ai);
        writeln!(out, "  // pragma: inline").unwrap();
        writeln!(out, "  struct scope_{name}_t {{").unwrap();
        for pat in &action.inputs {
            let ty = &actor.in_ports[actor.in_port_index(&pat.port).unwrap()].ty;
            for v in &pat.vars {
                writeln!(out, "    {} {v};", cpp_type(ty)).unwrap();
            }
        }
        for l in &action.locals {
            writeln!(out, "    {} {};", cpp_type(&l.ty), l.name).unwrap();
        }
        writeln!(out, "  }};").unwrap();
        writeln!(out, "  scope_{name}_t scope_{name}(const io_t &io) {{").unwrap();
        writeln!(out, "    scope_{name}_t s;").unwrap();
        for pat in &action.inputs {
            let max_peek = pat.vars.len();
            for (i, v) in pat.vars.iter().enumerate() {
                if max_peek > 1 {
                    writeln!(out, "    s.{v} = io.{}_peek[{i}];", pat.port).unwrap();
                } else {
                    writeln!(out, "    s.{v} = io.{}_peek;", pat.port).unwrap();
                }
            }
        }
        for l in &action.locals {
            if let Some(init) = &l.init {
                write!(out, "    s.{} = ", l.name).unwrap();
                let mut e = String::new();
                cpp_expr(init, &mut e);
                // locals may read scope bindings
                out.push_str(&scope_qualify(&e, action));
                out.push_str(";\n");
            }
        }
        writeln!(out, "    return s;").unwrap();
        writeln!(out, "  }}").unwrap();
        out.push('\n');
    }

    // conditions
    for (ci, cond) in am.conditions.iter().enumerate() {
        writeln!(out, "  // pragma: inline").unwrap();
        match cond.kind {
            ConditionKind::InputTokens { port, count } => {
                writeln!(
                    out,
                    "  bool condition_{ci}(const io_t &io) {{ return io.{}_count >= {count}; }}",
                    actor.in_ports[port].name
                )
                .unwrap();
            }
            ConditionKind::OutputSpace { port, count } => {
                writeln!(
                    out,
                    "  bool condition_{ci}(const io_t &io) {{ return io.{}_size >= {count}; }}",
                    actor.out_ports[port].name
                )
                .unwrap();
            }
            ConditionKind::Guard { action, guard_idx } => {
                let a = &actor.actions[action];
                let name = a.display_name(action);
                let mut e = String::new();
                cpp_expr(&a.guards[guard_idx], &mut e);
                writeln!(
                    out,
                    "  bool condition_{ci}(const io_t &io) {{ scope_{name}_t s = scope_{name}(io); return {}; }}",
                    scope_qualify(&e, a)
                )
                .unwrap();
            }
        }
    }
    out.push('\n');

    // transitions: consume, run the body, produce
    for (ai, action) in actor.actions.iter().enumerate() {
        let name = action.display_name(ai);
        let mut sig: Vec<String> = vec!["const io_t &io".into()];
        for pat in &action.inputs {
            let ty = &actor.in_ports[actor.in_port_index(&pat.port).unwrap()].ty;
            sig.push(format!("fwft_stream<{}> &{}", cpp_type(ty), pat.port));
        }
        for pat in &action.outputs {
            let ty = &actor.out_ports[actor.out_port_index(&pat.port).unwrap()].ty;
            sig.push(format!("fwft_stream<{}> &{}", cpp_type(ty), pat.port));
        }
        writeln!(out, "  // pragma: inline").unwrap();
        writeln!(out, "  void transition_{name}({}) {{", sig.join(", ")).unwrap();
        writeln!(out, "    scope_{name}_t s = scope_{name}(io);").unwrap();
        for pat in &action.outputs {
            for (i, e) in pat.exprs.iter().enumerate() {
                let mut text = String::new();
                cpp_expr(e, &mut text);
                writeln!(
                    out,
                    "    {} {}_out{i} = {};",
                    cpp_type(&actor.out_ports[actor.out_port_index(&pat.port).unwrap()].ty),
                    pat.port,
                    scope_qualify(&text, action)
                )
                .unwrap();
            }
        }
        for pat in &action.inputs {
            for _ in &pat.vars {
                writeln!(out, "    {}.read();", pat.port).unwrap();
            }
        }
        if !action.body.is_empty() {
            let mut body = String::new();
            cpp_stmts(&action.body, 2, &mut body);
            out.push_str(&scope_qualify_block(&body, action));
        }
        for pat in &action.outputs {
            for (i, _) in pat.exprs.iter().enumerate() {
                writeln!(out, "    {}.write({}_out{i});", pat.port, pat.port).unwrap();
            }
        }
        writeln!(out, "  }}").unwrap();
        out.push('\n');
    }

    // the top controller: switch over program_counter, goto per state
    writeln!(out, "public:").unwrap();
    let mut sig: Vec<String> = vec!["io_t io".into()];
    for p in &actor.in_ports {
        sig.push(format!("fwft_stream<{}> &{}", cpp_type(&p.ty), p.name));
    }
    for p in &actor.out_ports {
        sig.push(format!("fwft_stream<{}> &{}", cpp_type(&p.ty), p.name));
    }
    writeln!(out, "  ret_t operator()({}) {{", sig.join(", ")).unwrap();
    writeln!(out, "    switch (program_counter) {{").unwrap();
    for s in 0..am.states.len() {
        writeln!(out, "      case {s}: goto S{s};").unwrap();
    }
    writeln!(out, "      default: goto S{};", am.initial).unwrap();
    writeln!(out, "    }}").unwrap();
    for (si, state) in am.states.iter().enumerate() {
        writeln!(out, "  S{si}: // {}", am.knowledge_label(si)).unwrap();
        match state.instruction {
            Instruction::Test {
                condition,
                if_true,
                if_false,
            } => {
                writeln!(
                    out,
                    "    if (condition_{condition}(io)) goto S{if_true}; else goto S{if_false};"
                )
                .unwrap();
            }
            Instruction::Exec { action, next } => {
                let a = &actor.actions[action];
                let name = a.display_name(action);
                let mut args: Vec<String> = vec!["io".into()];
                for pat in &a.inputs {
                    args.push(pat.port.clone());
                }
                for pat in &a.outputs {
                    args.push(pat.port.clone());
                }
                writeln!(out, "    transition_{name}({});", args.join(", ")).unwrap();
                writeln!(out, "    program_counter = {next};").unwrap();
                writeln!(out, "    return ret_t::RETURN_EXEC;").unwrap();
            }
            Instruction::Wait { next } => {
                writeln!(out, "    program_counter = {next};").unwrap();
                writeln!(out, "    return ret_t::RETURN_WAIT;").unwrap();
            }
        }
    }
    writeln!(out, "  }}").unwrap();
    writeln!(out, "}};").unwrap();
    out
}

/// Prefix scope-bound names (`t` -> `s.t`) inside an emitted expression.
/// Text-level and deliberately simple: identifiers are replaced on word
/// boundaries.
fn scope_qualify(text: &str, action: &ActionDecl) -> String {
    let mut names: Vec<&str> = action
        .inputs
        .iter()
        .flat_map(|p| p.vars.iter().map(String::as_str))
        .collect();
    names.extend(action.locals.iter().map(|l| l.name.as_str()));
    replace_idents(text, &names)
}

fn scope_qualify_block(text: &str, action: &ActionDecl) -> String {
    scope_qualify(text, action)
}

fn replace_idents(text: &str, names: &[&str]) -> String {
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len()
                && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
            {
                i += 1;
            }
            let word = &text[start..i];
            // skip member accesses like `s.t`
            let preceded_by_dot = start > 0 && bytes[start - 1] == b'.';
            if !preceded_by_dot && names.contains(&word) {
                out.push_str("s.");
            }
            out.push_str(word);
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

/// Emit the structural netlist for the accelerator partition: one actor and
/// one trigger per member, one FWFT queue per connection touching the
/// partition, and input/output stages on the boundary.
pub fn emit_network(graph: &NetworkGraph, plan: &PartitionPlan, default_depth: usize) -> String {
    let member = |name: &str| -> bool {
        plan.accelerator()
            .map(|p| p.members.iter().any(|m| m == name))
            .unwrap_or(false)
    };
    let mut out = String::new();
    writeln!(
        out,
        "// auto-generated accelerator netlist for network {}",
        graph.name
    )
    .unwrap();
    writeln!(out, "network {} {{", graph.name).unwrap();
    let mut members: Vec<&str> = graph
        .instances
        .iter()
        .map(|i| i.name.as_str())
        .filter(|n| member(n))
        .collect();
    members.sort();
    for m in &members {
        let gi = graph.instance_index(m).unwrap();
        let actor = &graph.instances[gi].actor;
        writeln!(out, "  actor {m} class={}_ham", actor.name.to_lowercase()).unwrap();
        writeln!(out, "  trigger trigger_{m} -> {m}").unwrap();
    }
    let mut qi = 0usize;
    for conn in &graph.connections {
        let key = graph.connection_key(conn);
        let src_in = member(&graph.instances[conn.source.instance].name);
        let dst_in = member(&graph.instances[conn.target.instance].name);
        if !src_in && !dst_in {
            continue;
        }
        let depth = plan
            .channel_configs
            .get(&key)
            .and_then(|c| c.depth)
            .unwrap_or(default_depth as u64);
        let width = conn.elem_type.bit_width();
        if !src_in {
            writeln!(out, "  input_stage in_{qi} key={key}").unwrap();
        }
        if !dst_in {
            writeln!(out, "  output_stage out_{qi} key={key}").unwrap();
        }
        writeln!(out, "  queue q{qi} key={key} width={width} depth={depth}").unwrap();
        qi += 1;
    }
    writeln!(out, "}}").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::am::build_siam;
    use crate::testutil::{listing2_xcf, top_filter_graph};
    use crate::xcf::parse_xcf;

    fn filter_ham() -> String {
        let graph = top_filter_graph();
        let gi = graph.instance_index("filter").unwrap();
        let am = build_siam(&graph.instances[gi].actor).unwrap();
        emit_ham(&am)
    }

    #[test]
    fn ham_contains_conditions_transitions_and_switch() {
        let text = filter_ham();
        for needle in [
            "class filter_ham",
            "struct io_t",
            "uint32_t IN_count;",
            "int32_t IN_peek;",
            "uint32_t OUT_size;",
            "bool condition_0",
            "bool condition_1",
            "bool condition_2",
            "transition_t0",
            "transition_t1",
            "scope_t0",
            "switch (program_counter)",
            "ret_t::RETURN_EXEC",
            "ret_t::RETURN_WAIT",
        ] {
            assert!(text.contains(needle), "missing `{needle}` in:\n{text}");
        }
    }

    #[test]
    fn emission_is_deterministic() {
        assert_eq!(filter_ham(), filter_ham());
    }

    #[test]
    fn zero_action_actor_emits_minimal_controller() {
        let prog = crate::parser::parse_document(0, "actor Nop () ==> : end").unwrap();
        let am = build_siam(&std::sync::Arc::new(prog.actors[0].clone())).unwrap();
        let text = emit_ham(&am);
        assert!(text.contains("ret_t::RETURN_WAIT"));
        assert!(!text.contains("RETURN_EXEC;"));
    }

    #[test]
    fn netlist_counts_match_partition() {
        let graph = top_filter_graph();
        let plan = parse_xcf(&listing2_xcf(), &graph).unwrap();
        let text = emit_network(&graph, &plan, 4096);
        assert_eq!(text.matches("\n  actor ").count(), 2);
        assert_eq!(text.matches("\n  trigger ").count(), 2);
        // two connections touch the partition: one internal + one boundary
        assert_eq!(text.matches("\n  queue ").count(), 2);
        assert_eq!(text.matches("\n  output_stage ").count(), 1);
        assert_eq!(text.matches("\n  input_stage ").count(), 0);
        assert!(text.contains("width=32"));
        assert!(text.contains("depth=4096"));
    }

    #[test]
    fn empty_partition_emits_header_only() {
        let graph = top_filter_graph();
        let plan = crate::xcf::PartitionPlan::single_thread(&graph);
        let text = emit_network(&graph, &plan, 64);
        assert!(text.starts_with("// auto-generated accelerator netlist"));
        assert!(!text.contains("  actor "));
        assert!(!text.contains("  queue "));
    }
}
