//! Shared fixtures and generators used by unit, integration, and acceptance
//! tests. Public so the `tests/` targets can reach them.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::eval::{HostTable, Value};
use crate::graph::{parse_program, NetworkGraph};

pub const TOP_FILTER: &str = "TopFilter";

pub const TOP_FILTER_CAL: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../samples/top_filter.cal"
));

pub const TOP_FILTER_XCF: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../samples/top_filter.xcf"
));

pub fn listing1_sources() -> Vec<(String, String)> {
    vec![("top_filter.cal".to_string(), TOP_FILTER_CAL.to_string())]
}

pub fn listing2_xcf() -> String {
    TOP_FILTER_XCF.to_string()
}

pub fn top_filter_graph() -> NetworkGraph {
    parse_program(&listing1_sources(), TOP_FILTER).unwrap()
}

/// Host table whose `println` collects into a shared vector instead of
/// printing, so tests can observe the sink.
pub fn collecting_host() -> (HostTable, Arc<Mutex<Vec<i64>>>) {
    let collected = Arc::new(Mutex::new(Vec::new()));
    let mut host = HostTable::with_defaults();
    let sink = Arc::clone(&collected);
    host.register("println", move |args| {
        let mut out = sink.lock().unwrap();
        for a in args {
            out.push(a.as_int()?);
        }
        Ok(Value::Int(0))
    });
    (host, collected)
}

/// Configuration for [`generate_network`].
#[derive(Clone, Debug)]
pub struct GenConfig {
    pub seed: u64,
    /// Source emits this many tokens.
    pub tokens: u64,
    pub shape: NetShape,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetShape {
    /// source -> stage* -> sink
    Pipeline { stages: usize },
    /// source -> split (2 ports) -> 2 parallel stages -> merge (2 ports) -> sink
    Diamond,
    /// source -> credit loop between two actors -> sink (bounded cycle)
    Cycle,
}

/// Emit the source text of a deterministic network. All actors make their
/// firing choices from token values and internal state only, never from
/// availability timing, so every fair schedule yields the same channel
/// traces.
pub fn generate_network(cfg: &GenConfig) -> (String, String) {
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut src = String::new();
    let tokens = cfg.tokens;
    let mul = rng.gen_range(3..=9) * 2 + 1; // odd multiplier
    let add = rng.gen_range(1..=1000);

    src.push_str(&format!(
        r#"
actor Gen () ==> int(size=32) OUT :
  int x := 0;
  emit: action ==> OUT:[(x * {mul} + {add}) & 2147483647]
  guard x < {tokens}
  do
    x := x + 1;
  end
end

actor Map (int k) int(size=32) IN ==> int(size=32) OUT :
  work: action IN:[t] ==> OUT:[(t * {mul} + k) & 2147483647] end
end

actor Drop (int cut) int(size=32) IN ==> int(size=32) OUT :
  keep: action IN:[t] ==> OUT:[t]
  guard (t & 3) != cut
  end
  toss: action IN:[t] ==>
  end
  priority keep > toss; end
end

actor Consume () int(size=32) IN ==> :
  int seen := 0;
  take: action IN:[t] ==>
  do
    seen := seen + 1;
  end
end
"#
    ));

    let mut entities = Vec::new();
    let mut structure = Vec::new();
    match cfg.shape {
        NetShape::Pipeline { stages } => {
            entities.push("g = Gen();".to_string());
            let mut prev = ("g".to_string(), "OUT".to_string());
            for i in 0..stages {
                let kind = if i.is_multiple_of(2) { "Map" } else { "Drop" };
                let name = format!("s{i}");
                if kind == "Map" {
                    entities.push(format!("{name} = Map(k = {});", rng.gen_range(1..100)));
                } else {
                    entities.push(format!("{name} = Drop(cut = {});", rng.gen_range(0..4)));
                }
                structure.push(format!("{}.{} --> {name}.IN;", prev.0, prev.1));
                prev = (name, "OUT".to_string());
            }
            entities.push("c = Consume();".to_string());
            structure.push(format!("{}.{} --> c.IN;", prev.0, prev.1));
        }
        NetShape::Diamond => {
            src.push_str(
                r#"
actor Split () int(size=32) IN ==> int(size=32) A, int(size=32) B :
  toa: action IN:[t] ==> A:[t]
  guard (t & 1) = 0
  end
  tob: action IN:[t] ==> B:[t]
  guard (t & 1) != 0
  end
  priority toa > tob; end
end

actor Merge () int(size=32) A, int(size=32) B ==> int(size=32) OUT :
  both: action A:[x], B:[y] ==> OUT:[x + y] end
end
"#,
            );
            entities.push("g = Gen();".to_string());
            entities.push("sp = Split();".to_string());
            entities.push(format!("la = Map(k = {});", rng.gen_range(1..100)));
            entities.push(format!("lb = Map(k = {});", rng.gen_range(1..100)));
            entities.push("m = Merge();".to_string());
            entities.push("c = Consume();".to_string());
            structure.push("g.OUT --> sp.IN;".into());
            structure.push("sp.A --> la.IN;".into());
            structure.push("sp.B --> lb.IN;".into());
            structure.push("la.OUT --> m.A;".into());
            structure.push("lb.OUT --> m.B;".into());
            structure.push("m.OUT --> c.IN;".into());
        }
        NetShape::Cycle => {
            // One token circulates through Pong at a time; a state flag keeps
            // the read order independent of arrival timing, so the cycle is
            // deterministic under any schedule.
            src.push_str(&format!(
                r#"
actor Ping () int(size=32) FRESH, int(size=32) BACK ==> int(size=32) LOOP, int(size=32) DONE :
  int mode := 0;
  inject: action FRESH:[t] ==> LOOP:[t]
  guard mode = 0
  do
    mode := 1;
  end
  recirc: action BACK:[t] ==> LOOP:[t + 1]
  guard mode = 1, (t mod {mul}) != 0
  end
  retire: action BACK:[t] ==> DONE:[t]
  guard mode = 1
  do
    mode := 0;
  end
  priority recirc > retire; end
end

actor Pong () int(size=32) IN ==> int(size=32) OUT :
  bounce: action IN:[t] ==> OUT:[t + 3] end
end
"#
            ));
            entities.push("g = Gen();".to_string());
            entities.push("ping = Ping();".to_string());
            entities.push("pong = Pong();".to_string());
            entities.push("c = Consume();".to_string());
            structure.push("g.OUT --> ping.FRESH;".into());
            structure.push("ping.LOOP --> pong.IN;".into());
            structure.push("pong.OUT --> ping.BACK;".into());
            structure.push("ping.DONE --> c.IN;".into());
        }
    }

    src.push_str("\nnetwork GenNet () ==> :\n  entities\n");
    for e in &entities {
        src.push_str(&format!("    {e}\n"));
    }
    src.push_str("  structure\n");
    for s in &structure {
        src.push_str(&format!("    {s}\n"));
    }
    src.push_str("end\n");
    ("GenNet".to_string(), src)
}

/// Bind every generated network's parameters: plain defaults, no host calls.
pub fn generated_graph(cfg: &GenConfig) -> NetworkGraph {
    let (top, src) = generate_network(cfg);
    parse_program(&[("gen.cal".to_string(), src)], &top).unwrap()
}

/// Random MILP instance for solver and encoder checks: bounded exec times,
/// random connections, occasionally a crossing limit.
pub fn random_milp_instance(
    seed: u64,
    n_actors: usize,
    n_threads: usize,
    accel: bool,
) -> crate::milp::MilpInstance {
    use crate::milp::{ConnData, MilpInstance};
    let mut rng = StdRng::seed_from_u64(seed);
    let actors: Vec<String> = (0..n_actors).map(|i| format!("a{i}")).collect();
    let exec_thread_ns: Vec<Option<f64>> = (0..n_actors)
        .map(|_| Some(rng.gen_range(10.0..500.0f64).round()))
        .collect();
    let exec_accel_ns: Vec<Option<f64>> = (0..n_actors)
        .map(|_| {
            if accel && rng.gen_bool(0.9) {
                Some(rng.gen_range(5.0..300.0f64).round())
            } else {
                None
            }
        })
        .collect();
    let mut conns = Vec::new();
    for _ in 0..rng.gen_range(0..=n_actors * 2) {
        let src = rng.gen_range(0..n_actors);
        let dst = rng.gen_range(0..n_actors);
        conns.push(ConnData {
            key: format!("c{}", conns.len()),
            src,
            dst,
            tokens: rng.gen_range(0..10_000),
            tau_write_ns: rng.gen_range(0.0..200.0f64).round(),
            tau_read_ns: rng.gen_range(0.0..200.0f64).round(),
            tau_intra_ns: rng.gen_range(0.0..50.0f64).round(),
            tau_inter_ns: rng.gen_range(0.0..150.0f64).round(),
        });
    }
    MilpInstance {
        actors,
        n_threads,
        use_accel: accel,
        exec_thread_ns,
        exec_accel_ns,
        conns,
        max_crossings: if accel && seed.is_multiple_of(3) {
            Some(2)
        } else {
            None
        },
        ns_per_cycle: 1.0,
    }
}

/// Convenience: value map for instantiating test actors directly.
pub fn params(pairs: &[(&str, i64)]) -> HashMap<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), Value::Int(*v)))
        .collect()
}

/// Random valid plan: instances spread over `n_threads` software threads
/// plus, optionally, a random nonempty accelerator subset.
pub fn random_plan(
    graph: &NetworkGraph,
    rng: &mut StdRng,
    n_threads: usize,
    use_accel: bool,
) -> crate::xcf::PartitionPlan {
    use crate::xcf::{Partition, PartitionKind, PartitionPlan};
    let mut partitions: Vec<Partition> = (0..n_threads)
        .map(|i| Partition {
            id: format!("p{}", i + 1),
            kind: PartitionKind::Software,
            codegen: None,
            members: vec![],
            settings: vec![],
        })
        .collect();
    let accel_at = if use_accel {
        partitions.push(Partition {
            id: "accel".into(),
            kind: PartitionKind::Accelerator,
            codegen: None,
            members: vec![],
            settings: vec![],
        });
        Some(n_threads)
    } else {
        None
    };
    for inst in &graph.instances {
        let choice = match accel_at {
            Some(acc) if rng.gen_bool(0.4) => acc,
            _ => rng.gen_range(0..n_threads),
        };
        partitions[choice].members.push(inst.name.clone());
    }
    // an accelerator partition must not be empty to mean anything; fall back
    // to software when the draw left it bare
    if let Some(acc) = accel_at {
        if partitions[acc].members.is_empty() {
            let inst = graph.instances[rng.gen_range(0..graph.instances.len())]
                .name
                .clone();
            for p in partitions.iter_mut() {
                p.members.retain(|m| m != &inst);
            }
            partitions[acc].members.push(inst);
        }
    }
    PartitionPlan {
        network: graph.name.clone(),
        partitions,
        channel_configs: Default::default(),
    }
}

/// Stand-alone channel fixture implementing [`crate::eval::ActorIo`] for
/// driving single controllers directly: one queue per input port with
/// settable contents, one token sink per output port with settable space.
pub struct BufferIo {
    pub inputs: Vec<std::collections::VecDeque<i64>>,
    pub outputs: Vec<Vec<i64>>,
    pub space: Vec<usize>,
}

impl BufferIo {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        BufferIo {
            inputs: (0..n_in).map(|_| Default::default()).collect(),
            outputs: (0..n_out).map(|_| Vec::new()).collect(),
            space: vec![usize::MAX; n_out],
        }
    }
}

impl crate::eval::ActorIo for BufferIo {
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
        self.space[port]
    }

    fn output_produce(&mut self, port: usize, value: i64) {
        self.outputs[port].push(value);
        self.space[port] = self.space[port].saturating_sub(1);
    }
}
