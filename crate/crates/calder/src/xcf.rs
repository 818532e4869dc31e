//! Partition plans and their XML configuration (XCF) form.
//!
//! An XCF assigns every actor instance to exactly one partition (software
//! thread or the single accelerator partition) and optionally configures
//! per-connection FIFO depths (`size`, in tokens) and boundary buffer sizes
//! (`buffer-size`, in bytes).
//!
//! The XML subset is deliberately small: elements, attributes, self-closing
//! tags, comments, and an optional declaration. Unrecognized per-partition
//! settings are preserved as opaque key/value pairs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::NetworkGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionKind {
    Software,
    Accelerator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub id: String,
    pub kind: PartitionKind,
    pub codegen: Option<String>,
    pub members: Vec<String>,
    /// Opaque per-partition settings, preserved in order.
    pub settings: Vec<(String, String)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// FIFO depth in tokens.
    pub depth: Option<u64>,
    /// Boundary buffer size in bytes (only meaningful on crossings).
    pub boundary_bytes: Option<u64>,
}

/// Key form mirrors [`NetworkGraph::connection_key`]: `src.PORT->dst.PORT`.
pub type ChannelKey = String;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub network: String,
    pub partitions: Vec<Partition>,
    pub channel_configs: BTreeMap<ChannelKey, ChannelConfig>,
}

impl PartitionPlan {
    /// Default plan: one software thread running every instance.
    pub fn single_thread(graph: &NetworkGraph) -> Self {
        PartitionPlan {
            network: graph.name.clone(),
            partitions: vec![Partition {
                id: "default".into(),
                kind: PartitionKind::Software,
                codegen: None,
                members: graph.instances.iter().map(|i| i.name.clone()).collect(),
                settings: vec![],
            }],
            channel_configs: BTreeMap::new(),
        }
    }

    pub fn software_partitions(&self) -> impl Iterator<Item = &Partition> {
        self.partitions
            .iter()
            .filter(|p| p.kind == PartitionKind::Software)
    }

    pub fn accelerator(&self) -> Option<&Partition> {
        self.partitions
            .iter()
            .find(|p| p.kind == PartitionKind::Accelerator)
    }

    pub fn partition_of(&self, instance: &str) -> Option<&Partition> {
        self.partitions
            .iter()
            .find(|p| p.members.iter().any(|m| m == instance))
    }

    /// Checks the plan invariants against a graph: total assignment, no
    /// duplicates, at most one accelerator, strictly positive sizes.
    pub fn validate(&self, graph: &NetworkGraph) -> Result<(), XcfError> {
        let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
        for p in &self.partitions {
            for m in &p.members {
                if graph.instance_index(m).is_none() {
                    return Err(XcfError::UnknownInstance(m.clone()));
                }
                if let Some(prev) = seen.insert(m, &p.id) {
                    return Err(XcfError::DuplicateAssignment {
                        instance: m.clone(),
                        first: prev.to_string(),
                        second: p.id.clone(),
                    });
                }
            }
        }
        for inst in &graph.instances {
            if !seen.contains_key(inst.name.as_str()) {
                return Err(XcfError::Unassigned(inst.name.clone()));
            }
        }
        if self
            .partitions
            .iter()
            .filter(|p| p.kind == PartitionKind::Accelerator)
            .count()
            > 1
        {
            return Err(XcfError::MultipleAccelerators);
        }
        for (key, cfg) in &self.channel_configs {
            if cfg.depth == Some(0) || cfg.boundary_bytes == Some(0) {
                return Err(XcfError::NonPositiveSize(key.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum XcfError {
    #[error("malformed XML: {0}")]
    Malformed(String),
    #[error("XCF names unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("instance `{instance}` assigned to both `{first}` and `{second}`")]
    DuplicateAssignment {
        instance: String,
        first: String,
        second: String,
    },
    #[error("instance `{0}` not assigned to any partition")]
    Unassigned(String),
    #[error("more than one accelerator partition")]
    MultipleAccelerators,
    #[error("channel config for `{0}` must be strictly positive")]
    NonPositiveSize(String),
    #[error("XCF attribute `{0}` is not a positive integer")]
    BadNumber(String),
}

/// Parse an XCF document against an already-validated graph. Instances the
/// document does not mention are appended to a software partition named
/// `default` (created if absent).
pub fn parse_xcf(doc: &str, graph: &NetworkGraph) -> Result<PartitionPlan, XcfError> {
    let root = xml::parse(doc).map_err(XcfError::Malformed)?;
    if root.name != "configuration" {
        return Err(XcfError::Malformed(format!(
            "expected root element `configuration`, found `{}`",
            root.name
        )));
    }
    let network = root.attr("network").unwrap_or(&graph.name).to_string();
    let mut plan = PartitionPlan {
        network,
        partitions: Vec::new(),
        channel_configs: BTreeMap::new(),
    };
    for child in &root.children {
        match child.name.as_str() {
            "partition" => {
                let id = child
                    .attr("id")
                    .ok_or_else(|| XcfError::Malformed("partition without id".into()))?
                    .to_string();
                let kind = match child.attr("kind") {
                    Some("accelerator") | Some("hardware") => PartitionKind::Accelerator,
                    Some("software") | None => PartitionKind::Software,
                    Some(other) => {
                        return Err(XcfError::Malformed(format!(
                            "unknown partition kind `{other}`"
                        )))
                    }
                };
                let codegen = child.attr("codegen").map(str::to_string);
                let mut settings: Vec<(String, String)> = child
                    .attrs
                    .iter()
                    .filter(|(k, _)| !matches!(k.as_str(), "id" | "kind" | "codegen"))
                    .cloned()
                    .collect();
                let mut members = Vec::new();
                for item in &child.children {
                    match item.name.as_str() {
                        "instance" => {
                            let name = item.attr("name").ok_or_else(|| {
                                XcfError::Malformed("instance without name".into())
                            })?;
                            members.push(name.to_string());
                        }
                        "option" => {
                            let k = item.attr("key").unwrap_or_default().to_string();
                            let v = item.attr("value").unwrap_or_default().to_string();
                            settings.push((k, v));
                        }
                        other => {
                            return Err(XcfError::Malformed(format!(
                                "unexpected element `{other}` in partition"
                            )))
                        }
                    }
                }
                plan.partitions.push(Partition {
                    id,
                    kind,
                    codegen,
                    members,
                    settings,
                });
            }
            "connections" => {
                for item in &child.children {
                    if item.name != "connection" {
                        return Err(XcfError::Malformed(format!(
                            "unexpected element `{}` in connections",
                            item.name
                        )));
                    }
                    let s = item.attr("source").unwrap_or_default();
                    let sp = item.attr("source-port").unwrap_or_default();
                    let t = item.attr("target").unwrap_or_default();
                    let tp = item.attr("target-port").unwrap_or_default();
                    let key = format!("{s}.{sp}->{t}.{tp}");
                    let mut cfg = ChannelConfig::default();
                    if let Some(v) = item.attr("size") {
                        cfg.depth = Some(
                            v.parse::<u64>()
                                .ok()
                                .filter(|&n| n > 0)
                                .ok_or_else(|| XcfError::BadNumber("size".into()))?,
                        );
                    }
                    if let Some(v) = item.attr("buffer-size") {
                        cfg.boundary_bytes = Some(
                            v.parse::<u64>()
                                .ok()
                                .filter(|&n| n > 0)
                                .ok_or_else(|| XcfError::BadNumber("buffer-size".into()))?,
                        );
                    }
                    plan.channel_configs.insert(key, cfg);
                }
            }
            other => {
                return Err(XcfError::Malformed(format!(
                    "unexpected element `{other}` in configuration"
                )))
            }
        }
    }

    // duplicate detection before defaulting
    let mut assigned: BTreeMap<&str, &str> = BTreeMap::new();
    for p in &plan.partitions {
        for m in &p.members {
            if graph.instance_index(m).is_none() {
                return Err(XcfError::UnknownInstance(m.clone()));
            }
            if let Some(prev) = assigned.insert(m.as_str(), p.id.as_str()) {
                return Err(XcfError::DuplicateAssignment {
                    instance: m.clone(),
                    first: prev.to_string(),
                    second: p.id.clone(),
                });
            }
        }
    }
    let missing: Vec<String> = graph
        .instances
        .iter()
        .map(|i| i.name.clone())
        .filter(|n| !assigned.contains_key(n.as_str()))
        .collect();
    if !missing.is_empty() {
        if let Some(p) = plan
            .partitions
            .iter_mut()
            .find(|p| p.id == "default" && p.kind == PartitionKind::Software)
        {
            p.members.extend(missing);
        } else {
            plan.partitions.push(Partition {
                id: "default".into(),
                kind: PartitionKind::Software,
                codegen: None,
                members: missing,
                settings: vec![],
            });
        }
    }
    plan.validate(graph)?;
    Ok(plan)
}

/// Serialize a plan; `parse_xcf(emit_xcf(p), g)` equals `p` structurally for
/// every valid plan.
pub fn emit_xcf(plan: &PartitionPlan) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<configuration network=\"{}\">\n",
        xml::escape(&plan.network)
    ));
    for p in &plan.partitions {
        let kind = match p.kind {
            PartitionKind::Software => "software",
            PartitionKind::Accelerator => "accelerator",
        };
        out.push_str(&format!(
            "  <partition id=\"{}\" kind=\"{kind}\"",
            xml::escape(&p.id)
        ));
        if let Some(cg) = &p.codegen {
            out.push_str(&format!(" codegen=\"{}\"", xml::escape(cg)));
        }
        if p.members.is_empty() && p.settings.is_empty() {
            out.push_str("/>\n");
            continue;
        }
        out.push_str(">\n");
        for (k, v) in &p.settings {
            out.push_str(&format!(
                "    <option key=\"{}\" value=\"{}\"/>\n",
                xml::escape(k),
                xml::escape(v)
            ));
        }
        for m in &p.members {
            out.push_str(&format!("    <instance name=\"{}\"/>\n", xml::escape(m)));
        }
        out.push_str("  </partition>\n");
    }
    if !plan.channel_configs.is_empty() {
        out.push_str("  <connections>\n");
        for (key, cfg) in &plan.channel_configs {
            let (src, rest) = key.split_once("->").unwrap_or((key.as_str(), ""));
            let (s, sp) = src.split_once('.').unwrap_or((src, ""));
            let (t, tp) = rest.split_once('.').unwrap_or((rest, ""));
            out.push_str(&format!(
                "    <connection source=\"{}\" source-port=\"{}\" target=\"{}\" target-port=\"{}\"",
                xml::escape(s),
                xml::escape(sp),
                xml::escape(t),
                xml::escape(tp)
            ));
            if let Some(d) = cfg.depth {
                out.push_str(&format!(" size=\"{d}\""));
            }
            if let Some(b) = cfg.boundary_bytes {
                out.push_str(&format!(" buffer-size=\"{b}\""));
            }
            out.push_str("/>\n");
        }
        out.push_str("  </connections>\n");
    }
    out.push_str("</configuration>\n");
    out
}

/// Minimal XML reader for the XCF subset.
mod xml {
    pub struct Element {
        pub name: String,
        pub attrs: Vec<(String, String)>,
        pub children: Vec<Element>,
    }

    impl Element {
        pub fn attr(&self, name: &str) -> Option<&str> {
            self.attrs
                .iter()
                .find(|(k, _)| k == name)
                .map(|(_, v)| v.as_str())
        }
    }

    pub fn escape(s: &str) -> String {
        s.replace('&', "&amp;")
            .replace('<', "&lt;")
            .replace('>', "&gt;")
            .replace('"', "&quot;")
    }

    fn unescape(s: &str) -> String {
        s.replace("&lt;", "<")
            .replace("&gt;", ">")
            .replace("&quot;", "\"")
            .replace("&apos;", "'")
            .replace("&amp;", "&")
    }

    pub fn parse(text: &str) -> Result<Element, String> {
        let mut p = P {
            b: text.as_bytes(),
            i: 0,
        };
        p.skip_misc()?;
        let root = p.element()?;
        p.skip_misc()?;
        if p.i < p.b.len() {
            return Err("trailing content after root element".into());
        }
        Ok(root)
    }

    struct P<'a> {
        b: &'a [u8],
        i: usize,
    }

    impl P<'_> {
        fn skip_ws(&mut self) {
            while self.i < self.b.len() && self.b[self.i].is_ascii_whitespace() {
                self.i += 1;
            }
        }

        /// Skip whitespace, comments and the `<?xml ...?>` declaration.
        fn skip_misc(&mut self) -> Result<(), String> {
            loop {
                self.skip_ws();
                if self.rest().starts_with("<?") {
                    match self.rest().find("?>") {
                        Some(n) => self.i += n + 2,
                        None => return Err("unterminated declaration".into()),
                    }
                } else if self.rest().starts_with("<!--") {
                    match self.rest().find("-->") {
                        Some(n) => self.i += n + 3,
                        None => return Err("unterminated comment".into()),
                    }
                } else {
                    return Ok(());
                }
            }
        }

        fn rest(&self) -> &str {
            std::str::from_utf8(&self.b[self.i..]).unwrap_or("")
        }

        fn name(&mut self) -> Result<String, String> {
            let start = self.i;
            while self.i < self.b.len() {
                let c = self.b[self.i] as char;
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == ':' {
                    self.i += 1;
                } else {
                    break;
                }
            }
            if self.i == start {
                return Err(format!("expected name at byte {}", self.i));
            }
            Ok(std::str::from_utf8(&self.b[start..self.i])
                .unwrap()
                .to_string())
        }

        fn element(&mut self) -> Result<Element, String> {
            if self.i >= self.b.len() || self.b[self.i] != b'<' {
                return Err(format!("expected `<` at byte {}", self.i));
            }
            self.i += 1;
            let name = self.name()?;
            let mut attrs = Vec::new();
            loop {
                self.skip_ws();
                if self.rest().starts_with("/>") {
                    self.i += 2;
                    return Ok(Element {
                        name,
                        attrs,
                        children: vec![],
                    });
                }
                if self.rest().starts_with('>') {
                    self.i += 1;
                    break;
                }
                let key = self.name()?;
                self.skip_ws();
                if !self.rest().starts_with('=') {
                    return Err(format!("expected `=` after attribute `{key}`"));
                }
                self.i += 1;
                self.skip_ws();
                let quote = *self
                    .b
                    .get(self.i)
                    .filter(|&&c| c == b'"' || c == b'\'')
                    .ok_or_else(|| format!("expected quoted value for `{key}`"))?;
                self.i += 1;
                let start = self.i;
                while self.i < self.b.len() && self.b[self.i] != quote {
                    self.i += 1;
                }
                if self.i >= self.b.len() {
                    return Err(format!("unterminated attribute value for `{key}`"));
                }
                let value = unescape(std::str::from_utf8(&self.b[start..self.i]).unwrap());
                self.i += 1;
                attrs.push((key, value));
            }
            // children until matching close tag; bare text is ignored
            let mut children = Vec::new();
            loop {
                // skip text content and comments
                while self.i < self.b.len() && self.b[self.i] != b'<' {
                    self.i += 1;
                }
                if self.rest().starts_with("<!--") {
                    match self.rest().find("-->") {
                        Some(n) => {
                            self.i += n + 3;
                            continue;
                        }
                        None => return Err("unterminated comment".into()),
                    }
                }
                if self.rest().starts_with("</") {
                    self.i += 2;
                    let close = self.name()?;
                    if close != name {
                        return Err(format!("mismatched close tag `{close}` for `{name}`"));
                    }
                    self.skip_ws();
                    if !self.rest().starts_with('>') {
                        return Err("expected `>` after close tag".into());
                    }
                    self.i += 1;
                    return Ok(Element {
                        name,
                        attrs,
                        children,
                    });
                }
                if self.i >= self.b.len() {
                    return Err(format!("unterminated element `{name}`"));
                }
                children.push(self.element()?);
            }
        }
    }
}
