//! CPLEX-LP emission and a parser for checking it.
//!
//! Every disjunction in the model ors mutually exclusive conjunctions (an
//! actor sits on exactly one partition), so plain sums replace OR variables
//! and only AND auxiliaries are linearized: `y <= e1`, `y <= e2`,
//! `y >= e1 + e2 - 1` with `y` binary. At any integral assignment the
//! auxiliaries are therefore uniquely determined, and the LP objective at
//! that point must equal `evaluate_assignment` exactly.

// index-based loops: the builder walks the d[a][p] matrix with several
// parallel coefficient tables, which reads better with explicit indices
#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;
use std::fmt::Write as _;

use super::MilpInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpConstraint {
    pub name: String,
    pub terms: Vec<(f64, usize)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// A built linear program over indexed variables.
#[derive(Clone, Debug, Default)]
pub struct Lp {
    pub var_names: Vec<String>,
    pub objective: Vec<(f64, usize)>,
    pub constraints: Vec<LpConstraint>,
    pub binaries: Vec<usize>,
}

/// A 0/1-valued linear expression: constant plus signed binary terms.
#[derive(Clone, Debug, Default)]
struct BoolExpr {
    k: f64,
    terms: Vec<(f64, usize)>,
}

impl BoolExpr {
    fn var(v: usize) -> Self {
        BoolExpr {
            k: 0.0,
            terms: vec![(1.0, v)],
        }
    }

    fn not_var(v: usize) -> Self {
        BoolExpr {
            k: 1.0,
            terms: vec![(-1.0, v)],
        }
    }

    fn sum(vars: &[usize]) -> Self {
        BoolExpr {
            k: 0.0,
            terms: vars.iter().map(|&v| (1.0, v)).collect(),
        }
    }
}

struct LpBuilder {
    lp: Lp,
    index: HashMap<String, usize>,
}

impl LpBuilder {
    fn new() -> Self {
        LpBuilder {
            lp: Lp::default(),
            index: HashMap::new(),
        }
    }

    fn var(&mut self, name: String, binary: bool) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.lp.var_names.len();
        self.lp.var_names.push(name.clone());
        self.index.insert(name, i);
        if binary {
            self.lp.binaries.push(i);
        }
        i
    }

    /// Introduce `y = e1 AND e2` via the three standard rows.
    fn and_var(&mut self, name: String, e1: &BoolExpr, e2: &BoolExpr) -> usize {
        let y = self.var(name.clone(), true);
        let mut t1 = vec![(1.0, y)];
        t1.extend(e1.terms.iter().map(|&(c, v)| (-c, v)));
        self.lp.constraints.push(LpConstraint {
            name: format!("{name}_le1"),
            terms: t1,
            cmp: Cmp::Le,
            rhs: e1.k,
        });
        let mut t2 = vec![(1.0, y)];
        t2.extend(e2.terms.iter().map(|&(c, v)| (-c, v)));
        self.lp.constraints.push(LpConstraint {
            name: format!("{name}_le2"),
            terms: t2,
            cmp: Cmp::Le,
            rhs: e2.k,
        });
        let mut t3 = vec![(1.0, y)];
        t3.extend(e1.terms.iter().map(|&(c, v)| (-c, v)));
        t3.extend(e2.terms.iter().map(|&(c, v)| (-c, v)));
        self.lp.constraints.push(LpConstraint {
            name: format!("{name}_ge"),
            terms: t3,
            cmp: Cmp::Ge,
            rhs: e1.k + e2.k - 1.0,
        });
        y
    }
}

/// Variable names for the decision booleans.
pub fn d_name(inst: &MilpInstance, actor: usize, p: usize) -> String {
    format!("d_{}_{}", actor, inst.partition_name(p))
}

/// Build the linear program for an instance.
pub fn build_lp(inst: &MilpInstance) -> Lp {
    let mut b = LpBuilder::new();
    let parts = inst.n_partitions();
    let accel = inst.accel_index();

    // decision variables
    let d: Vec<Vec<usize>> = (0..inst.actors.len())
        .map(|a| {
            (0..parts)
                .map(|p| b.var(d_name(inst, a, p), true))
                .collect()
        })
        .collect();
    let t_exec_max = b.var("t_exec_max".into(), false);
    let t_intra_max = b.var("t_intra_max".into(), false);

    // each actor on exactly one partition; barred placements forced to zero
    for a in 0..inst.actors.len() {
        b.lp.constraints.push(LpConstraint {
            name: format!("assign_{a}"),
            terms: (0..parts).map(|p| (1.0, d[a][p])).collect(),
            cmp: Cmp::Eq,
            rhs: 1.0,
        });
        for p in 0..parts {
            if !inst.allowed(a, p) {
                b.lp.constraints.push(LpConstraint {
                    name: format!("forbid_{a}_{}", inst.partition_name(p)),
                    terms: vec![(1.0, d[a][p])],
                    cmp: Cmp::Eq,
                    rhs: 0.0,
                });
            }
        }
    }

    // thread time rows: t_exec_max >= sum exec * d
    for p in 0..inst.n_threads {
        let mut terms = vec![(1.0, t_exec_max)];
        for a in 0..inst.actors.len() {
            if let Some(e) = inst.exec_thread_ns[a] {
                terms.push((-e, d[a][p]));
            }
        }
        b.lp.constraints.push(LpConstraint {
            name: format!("texec_p{}", p + 1),
            terms,
            cmp: Cmp::Ge,
            rhs: 0.0,
        });
    }

    // accelerator + plink rows and crossing auxiliaries
    let mut yw = Vec::new();
    let mut yr = Vec::new();
    if let Some(acc) = accel {
        let t_hw_max = b.var("t_hw_max".into(), false);
        for a in 0..inst.actors.len() {
            if let Some(e) = inst.exec_accel_ns[a] {
                b.lp.constraints.push(LpConstraint {
                    name: format!("thw_{a}"),
                    terms: vec![(1.0, t_hw_max), (-e, d[a][acc])],
                    cmp: Cmp::Ge,
                    rhs: 0.0,
                });
            }
        }
        for (ci, c) in inst.conns.iter().enumerate() {
            let w = b.and_var(
                format!("yw_{ci}"),
                &BoolExpr::not_var(d[c.src][acc]),
                &BoolExpr::var(d[c.dst][acc]),
            );
            let r = b.and_var(
                format!("yr_{ci}"),
                &BoolExpr::var(d[c.src][acc]),
                &BoolExpr::not_var(d[c.dst][acc]),
            );
            yw.push(w);
            yr.push(r);
        }
        let mut terms = vec![(1.0, t_exec_max), (-1.0, t_hw_max)];
        for (ci, c) in inst.conns.iter().enumerate() {
            terms.push((-c.tau_write_ns, yw[ci]));
            terms.push((-c.tau_read_ns, yr[ci]));
        }
        b.lp.constraints.push(LpConstraint {
            name: "texec_plink".into(),
            terms,
            cmp: Cmp::Ge,
            rhs: 0.0,
        });
        if let Some(m) = inst.max_crossings {
            let mut terms: Vec<(f64, usize)> = yw.iter().map(|&v| (1.0, v)).collect();
            terms.extend(yr.iter().map(|&v| (1.0, v)));
            b.lp.constraints.push(LpConstraint {
                name: "crossing_limit".into(),
                terms,
                cmp: Cmp::Le,
                rhs: m as f64,
            });
        }
    }

    // intra rows: same-thread conjunctions per thread; p1 additionally
    // carries the plink-intra fold for p1<->accel connections
    for p in 0..inst.n_threads {
        let mut terms = vec![(1.0, t_intra_max)];
        for (ci, c) in inst.conns.iter().enumerate() {
            let y = b.and_var(
                format!("yi_{ci}_p{}", p + 1),
                &BoolExpr::var(d[c.src][p]),
                &BoolExpr::var(d[c.dst][p]),
            );
            terms.push((-c.tau_intra_ns, y));
        }
        if p == 0 {
            if let Some(acc) = accel {
                for (ci, c) in inst.conns.iter().enumerate() {
                    let fwd = b.and_var(
                        format!("ypw_{ci}"),
                        &BoolExpr::var(d[c.src][0]),
                        &BoolExpr::var(d[c.dst][acc]),
                    );
                    let rev = b.and_var(
                        format!("ypr_{ci}"),
                        &BoolExpr::var(d[c.src][acc]),
                        &BoolExpr::var(d[c.dst][0]),
                    );
                    terms.push((-c.tau_intra_ns, fwd));
                    terms.push((-c.tau_intra_ns, rev));
                }
            }
        }
        b.lp.constraints.push(LpConstraint {
            name: format!("tintra_p{}", p + 1),
            terms,
            cmp: Cmp::Ge,
            rhs: 0.0,
        });
    }

    // objective: T_exec_max + T_intra_max + inter-core terms
    let mut objective: Vec<(f64, usize)> = vec![(1.0, t_exec_max), (1.0, t_intra_max)];
    for (ci, c) in inst.conns.iter().enumerate() {
        // first sum: q <-> {p1, accel}, once per non-p1 thread q
        // side-1 membership is a sum of exclusive binaries
        let mut side1_src = vec![d[c.src][0]];
        let mut side1_dst = vec![d[c.dst][0]];
        if let Some(acc) = accel {
            side1_src.push(d[c.src][acc]);
            side1_dst.push(d[c.dst][acc]);
        }
        for q in 1..inst.n_threads {
            let ga = b.and_var(
                format!("ga_{ci}_q{}", q + 1),
                &BoolExpr::sum(&side1_src),
                &BoolExpr::var(d[c.dst][q]),
            );
            let gb = b.and_var(
                format!("gb_{ci}_q{}", q + 1),
                &BoolExpr::var(d[c.src][q]),
                &BoolExpr::sum(&side1_dst),
            );
            objective.push((c.tau_inter_ns, ga));
            objective.push((c.tau_inter_ns, gb));
        }
        // second sum: ordered non-p1 thread pairs; the inter-core model
        // counts each unordered pair twice, hence the factor two
        for p in 1..inst.n_threads {
            for q in 1..inst.n_threads {
                if p == q {
                    continue;
                }
                let h = b.and_var(
                    format!("h_{ci}_p{}_q{}", p + 1, q + 1),
                    &BoolExpr::var(d[c.src][p]),
                    &BoolExpr::var(d[c.dst][q]),
                );
                objective.push((2.0 * c.tau_inter_ns, h));
            }
        }
    }
    b.lp.objective = objective;
    b.lp
}

/// Implied value of every LP variable at a fixed assignment: decision
/// booleans from the assignment, AND auxiliaries from their definitions,
/// max variables at their tight lower bounds.
pub fn derived_point(inst: &MilpInstance, assign: &[usize]) -> HashMap<String, f64> {
    let accel = inst.accel_index();
    let on = |a: usize, p: usize| assign[a] == p;
    let on_accel = |a: usize| Some(assign[a]) == accel;
    let mut point = HashMap::new();
    for a in 0..inst.actors.len() {
        for p in 0..inst.n_partitions() {
            point.insert(d_name(inst, a, p), f64::from(u8::from(on(a, p))));
        }
    }
    let bd = super::evaluate_assignment(inst, assign).expect("feasible point");
    point.insert(
        "t_exec_max".into(),
        bd.thread_ns
            .iter()
            .copied()
            .fold(bd.plink_total_ns, f64::max),
    );
    point.insert("t_intra_max".into(), bd.intra_ns);
    if accel.is_some() {
        point.insert("t_hw_max".into(), bd.accel_max_ns);
    }
    for (ci, c) in inst.conns.iter().enumerate() {
        let s_hw = on_accel(c.src);
        let t_hw = on_accel(c.dst);
        if accel.is_some() {
            point.insert(format!("yw_{ci}"), f64::from(u8::from(!s_hw && t_hw)));
            point.insert(format!("yr_{ci}"), f64::from(u8::from(s_hw && !t_hw)));
            point.insert(
                format!("ypw_{ci}"),
                f64::from(u8::from(assign[c.src] == 0 && t_hw)),
            );
            point.insert(
                format!("ypr_{ci}"),
                f64::from(u8::from(s_hw && assign[c.dst] == 0)),
            );
        }
        for p in 0..inst.n_threads {
            point.insert(
                format!("yi_{ci}_p{}", p + 1),
                f64::from(u8::from(
                    !s_hw && !t_hw && assign[c.src] == p && assign[c.dst] == p,
                )),
            );
        }
        let side1_src = assign[c.src] == 0 || s_hw;
        let side1_dst = assign[c.dst] == 0 || t_hw;
        for q in 1..inst.n_threads {
            point.insert(
                format!("ga_{ci}_q{}", q + 1),
                f64::from(u8::from(side1_src && !t_hw && assign[c.dst] == q)),
            );
            point.insert(
                format!("gb_{ci}_q{}", q + 1),
                f64::from(u8::from(!s_hw && assign[c.src] == q && side1_dst)),
            );
        }
        for p in 1..inst.n_threads {
            for q in 1..inst.n_threads {
                if p == q {
                    continue;
                }
                point.insert(
                    format!("h_{ci}_p{}_q{}", p + 1, q + 1),
                    f64::from(u8::from(
                        !s_hw && !t_hw && assign[c.src] == p && assign[c.dst] == q,
                    )),
                );
            }
        }
    }
    point
}

fn write_terms(out: &mut String, terms: &[(f64, usize)], names: &[String]) {
    let mut first = true;
    for &(coef, var) in terms {
        if coef == 0.0 {
            continue;
        }
        let mag = coef.abs();
        if first {
            if coef < 0.0 {
                out.push_str("- ");
            }
            first = false;
        } else if coef < 0.0 {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if mag == 1.0 {
            out.push_str(&names[var]);
        } else {
            write!(out, "{mag} {}", names[var]).unwrap();
        }
    }
    if first {
        out.push('0');
    }
}

/// Render the program in the CPLEX-LP dialect.
pub fn format_lp(lp: &Lp, comment: &str) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        writeln!(out, "\\ {line}").unwrap();
    }
    out.push_str("Minimize\n obj: ");
    write_terms(&mut out, &lp.objective, &lp.var_names);
    out.push_str("\nSubject To\n");
    for c in &lp.constraints {
        write!(out, " {}: ", c.name).unwrap();
        write_terms(&mut out, &c.terms, &lp.var_names);
        writeln!(out, " {} {}", c.cmp.symbol(), c.rhs).unwrap();
    }
    out.push_str("Binaries\n");
    for chunk in lp.binaries.chunks(8) {
        out.push(' ');
        let names: Vec<&str> = chunk.iter().map(|&v| lp.var_names[v].as_str()).collect();
        out.push_str(&names.join(" "));
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

/// Emit the LP text for an instance.
pub fn emit_lp(inst: &MilpInstance) -> String {
    let mut comment = String::from("partition model\nactors:");
    for (i, a) in inst.actors.iter().enumerate() {
        write!(comment, " {i}={a}").unwrap();
    }
    format_lp(&build_lp(inst), &comment)
}

// ---------------------------------------------------------------------------
// parser

#[derive(Clone, Debug)]
pub struct ParsedConstraint {
    pub name: Option<String>,
    pub terms: Vec<(f64, String)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ParsedLp {
    pub minimize: bool,
    pub objective: Vec<(f64, String)>,
    pub constraints: Vec<ParsedConstraint>,
    pub binaries: Vec<String>,
}

impl ParsedLp {
    pub fn objective_at(&self, point: &HashMap<String, f64>) -> Result<f64, String> {
        eval_terms(&self.objective, point)
    }

    /// Verify every constraint holds at the point, within `tol`.
    pub fn check_feasible(&self, point: &HashMap<String, f64>, tol: f64) -> Result<(), String> {
        for c in &self.constraints {
            let lhs = eval_terms(&c.terms, point)?;
            let ok = match c.cmp {
                Cmp::Le => lhs <= c.rhs + tol,
                Cmp::Ge => lhs >= c.rhs - tol,
                Cmp::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                return Err(format!(
                    "constraint {} violated: {lhs} {} {}",
                    c.name.as_deref().unwrap_or("?"),
                    c.cmp.symbol(),
                    c.rhs
                ));
            }
        }
        Ok(())
    }
}

fn eval_terms(terms: &[(f64, String)], point: &HashMap<String, f64>) -> Result<f64, String> {
    let mut sum = 0.0;
    for (coef, name) in terms {
        let v = point
            .get(name)
            .ok_or_else(|| format!("no value for variable `{name}`"))?;
        sum += coef * v;
    }
    Ok(sum)
}

/// Parse the CPLEX-LP subset this crate emits (objective, constraints,
/// optional Bounds which are ignored, Binaries, End).
pub fn parse_lp(text: &str) -> Result<ParsedLp, String> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Start,
        Objective,
        Constraints,
        Bounds,
        Binaries,
        Done,
    }
    let mut lp = ParsedLp::default();
    let mut section = Section::Start;
    // constraints can wrap across lines until a comparison appears
    let mut pending = String::new();
    let flush = |buf: &mut String, lp: &mut ParsedLp, section: Section| -> Result<(), String> {
        let line = buf.trim().to_string();
        buf.clear();
        if line.is_empty() {
            return Ok(());
        }
        match section {
            Section::Objective => {
                let body = match line.split_once(':') {
                    Some((_, b)) => b,
                    None => &line,
                };
                lp.objective = parse_linear(body)?;
                Ok(())
            }
            Section::Constraints => {
                let (name, body) = match line.split_once(':') {
                    Some((n, b)) => (Some(n.trim().to_string()), b.to_string()),
                    None => (None, line.clone()),
                };
                let (cmp, pos, len) = find_cmp(&body)
                    .ok_or_else(|| format!("constraint without comparison: {line}"))?;
                let lhs = &body[..pos];
                let rhs: f64 = body[pos + len..]
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad rhs in: {line}"))?;
                lp.constraints.push(ParsedConstraint {
                    name,
                    terms: parse_linear(lhs)?,
                    cmp,
                    rhs,
                });
                Ok(())
            }
            _ => Ok(()),
        }
    };

    for raw in text.lines() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let new_section = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some((Section::Objective, true)),
            "maximize" | "maximise" | "max" => Some((Section::Objective, false)),
            "subject to" | "st" | "s.t." | "such that" => Some((Section::Constraints, lp.minimize)),
            "bounds" => Some((Section::Bounds, lp.minimize)),
            "binaries" | "binary" | "bin" => Some((Section::Binaries, lp.minimize)),
            "generals" | "general" | "gen" => Some((Section::Binaries, lp.minimize)),
            "end" => Some((Section::Done, lp.minimize)),
            _ => None,
        };
        if let Some((next, minimize)) = new_section {
            flush(&mut pending, &mut lp, section)?;
            lp.minimize = minimize;
            section = next;
            continue;
        }
        match section {
            Section::Start => return Err(format!("content before objective sense: {line}")),
            Section::Objective => {
                pending.push(' ');
                pending.push_str(line);
            }
            Section::Constraints => {
                pending.push(' ');
                pending.push_str(line);
                if find_cmp(&pending).is_some() {
                    flush(&mut pending, &mut lp, section)?;
                }
            }
            Section::Bounds => {}
            Section::Binaries => {
                lp.binaries
                    .extend(line.split_whitespace().map(str::to_string));
            }
            Section::Done => {}
        }
    }
    flush(&mut pending, &mut lp, section)?;
    Ok(lp)
}

fn find_cmp(s: &str) -> Option<(Cmp, usize, usize)> {
    if let Some(p) = s.find("<=") {
        return Some((Cmp::Le, p, 2));
    }
    if let Some(p) = s.find(">=") {
        return Some((Cmp::Ge, p, 2));
    }
    if let Some(p) = s.find('=') {
        return Some((Cmp::Eq, p, 1));
    }
    None
}

/// Parse `[+-] [coef [*]] name` sequences.
fn parse_linear(s: &str) -> Result<Vec<(f64, String)>, String> {
    let mut terms = Vec::new();
    let toks: Vec<String> = tokenize(s);
    let mut i = 0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while i < toks.len() {
        let t = &toks[i];
        match t.as_str() {
            "+" => {}
            "-" => {
                sign = -sign;
            }
            "*" => {}
            _ => {
                if let Ok(v) = t.parse::<f64>() {
                    coef = Some(coef.unwrap_or(1.0) * v);
                } else if t == "0" {
                    coef = None;
                } else {
                    terms.push((sign * coef.unwrap_or(1.0), t.clone()));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
        i += 1;
    }
    if let Some(c) = coef {
        if c != 0.0 {
            return Err(format!("dangling coefficient {c} in `{s}`"));
        }
    }
    Ok(terms)
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '+' | '-' | '*' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
