//! Versioned on-disk form of a compiled program: the flattened network plus
//! every instance's actor machine. Incompatible versions refuse to load.

use serde::{Deserialize, Serialize};

use crate::am::ActorMachine;
use crate::graph::NetworkGraph;

pub const BUNDLE_FORMAT: &str = "calder-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct Bundle {
    pub format: String,
    pub version: u32,
    pub graph: NetworkGraph,
    /// Actor machines keyed by instance name.
    pub machines: Vec<(String, ActorMachine)>,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("not a {BUNDLE_FORMAT} document")]
    WrongFormat,
    #[error("bundle version {0} is not supported (this build reads version {BUNDLE_VERSION})")]
    WrongVersion(u32),
    #[error("malformed bundle: {0}")]
    Malformed(String),
}

impl Bundle {
    pub fn new(graph: NetworkGraph, machines: Vec<(String, ActorMachine)>) -> Self {
        Bundle {
            format: BUNDLE_FORMAT.to_string(),
            version: BUNDLE_VERSION,
            graph,
            machines,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bundle serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        // probe the header first so version errors beat field mismatches
        #[derive(Deserialize)]
        struct Header {
            format: Option<String>,
            version: Option<u32>,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| BundleError::Malformed(e.to_string()))?;
        match header.format.as_deref() {
            Some(BUNDLE_FORMAT) => {}
            _ => return Err(BundleError::WrongFormat),
        }
        match header.version {
            Some(BUNDLE_VERSION) => {}
            Some(v) => return Err(BundleError::WrongVersion(v)),
            None => return Err(BundleError::WrongFormat),
        }
        serde_json::from_str(text).map_err(|e| BundleError::Malformed(e.to_string()))
    }

    pub fn machine(&self, instance: &str) -> Option<&ActorMachine> {
        self.machines
            .iter()
            .find(|(name, _)| name == instance)
            .map(|(_, m)| m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::build_machines;
    use crate::testutil::top_filter_graph;

    fn make_bundle() -> Bundle {
        let graph = top_filter_graph();
        let machines = build_machines(&graph).unwrap();
        let machines = graph
            .instances
            .iter()
            .map(|i| {
                (
                    i.name.clone(),
                    std::sync::Arc::try_unwrap(machines[&i.name].clone())
                        .unwrap_or_else(|arc| (*arc).clone()),
                )
            })
            .collect();
        Bundle::new(graph, machines)
    }

    #[test]
    fn round_trips_through_json() {
        let b = make_bundle();
        let text = b.to_json();
        let back = Bundle::from_json(&text).unwrap();
        assert_eq!(back.graph.instances.len(), 3);
        assert_eq!(back.machines.len(), 3);
        let am = back.machine("filter").unwrap();
        assert_eq!(am.states.len(), 7);
    }

    #[test]
    fn wrong_version_refused() {
        let mut b = make_bundle();
        b.version = 99;
        let text = b.to_json();
        assert!(matches!(
            Bundle::from_json(&text),
            Err(BundleError::WrongVersion(99))
        ));
    }

    #[test]
    fn wrong_format_refused() {
        assert!(matches!(
            Bundle::from_json("{\"format\": \"other\", \"version\": 1}"),
            Err(BundleError::WrongFormat)
        ));
        assert!(matches!(
            Bundle::from_json("not json"),
            Err(BundleError::Malformed(_))
        ));
    }
}
