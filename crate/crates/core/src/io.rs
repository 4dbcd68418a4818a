//! Instance files: a sectioned network file (NODES, ARCS) and a demands
//! file, both comma-separated with header rows. Nodes are referenced by
//! label; internal dense ids are an implementation detail.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::network::{build_network, Arc, BuildError, Demand, DemandSet, Network, Node, NodeId};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{file}:{line}: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: unknown node label {label:?}")]
    UnknownLabel {
        file: String,
        line: usize,
        label: String,
    },
    #[error("invalid instance: {0}")]
    Build(#[from] BuildError),
    #[error("{file}: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
}

fn malformed(file: &str, line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Malformed {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        file: path.display().to_string(),
        source,
    })
}

fn parse_number<S: Scalar>(
    file: &str,
    line: usize,
    field: &str,
    raw: &str,
) -> Result<S, LoadError> {
    let value: f64 = raw.trim().parse().map_err(|_| {
        malformed(
            file,
            line,
            format!("field {field:?}: not a number: {raw:?}"),
        )
    })?;
    if !value.is_finite() {
        return Err(malformed(
            file,
            line,
            format!("field {field:?}: must be finite"),
        ));
    }
    Ok(S::from_f64_lossy(value))
}

/// Parses the sectioned network file.
pub fn load_network<S: Scalar>(path: &Path) -> Result<Network<S>, LoadError> {
    let file = path.display().to_string();
    let text = read(path)?;
    let mut nodes: Vec<Node> = Vec::new();
    let mut labels: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut arcs: Vec<Arc<S>> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Start,
        Nodes,
        Arcs,
    }
    let mut section = Section::Start;
    let mut expect_header = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "NODES" => {
                if section != Section::Start {
                    return Err(malformed(&file, line_no, "unexpected NODES section"));
                }
                section = Section::Nodes;
                expect_header = true;
                continue;
            }
            "ARCS" => {
                if section != Section::Nodes {
                    return Err(malformed(&file, line_no, "ARCS section must follow NODES"));
                }
                section = Section::Arcs;
                expect_header = true;
                continue;
            }
            _ => {}
        }
        if expect_header {
            let expected = match section {
                Section::Nodes => "id,label",
                Section::Arcs => "from,to,cost,capacity",
                Section::Start => unreachable!(),
            };
            if line != expected {
                return Err(malformed(
                    &file,
                    line_no,
                    format!("expected header {expected:?}, found {line:?}"),
                ));
            }
            expect_header = false;
            continue;
        }
        match section {
            Section::Start => {
                return Err(malformed(&file, line_no, "expected NODES section header"));
            }
            Section::Nodes => {
                let mut parts = line.splitn(2, ',');
                let id_raw = parts.next().unwrap_or("");
                let label_raw = parts.next().unwrap_or("");
                let id: NodeId = id_raw.trim().parse().map_err(|_| {
                    malformed(
                        &file,
                        line_no,
                        format!("field \"id\": not an integer: {id_raw:?}"),
                    )
                })?;
                let label = label_raw.trim();
                let label = if label.is_empty() {
                    id.to_string()
                } else {
                    label.to_string()
                };
                if labels.insert(label.clone(), id).is_some() {
                    return Err(malformed(
                        &file,
                        line_no,
                        format!("duplicate node label {label:?}"),
                    ));
                }
                nodes.push(Node { id, label });
            }
            Section::Arcs => {
                let parts: Vec<&str> = line.split(',').collect();
                if parts.len() != 4 {
                    return Err(malformed(
                        &file,
                        line_no,
                        format!(
                            "expected 4 fields from,to,cost,capacity, found {}",
                            parts.len()
                        ),
                    ));
                }
                let from = resolve_label(&file, line_no, &labels, parts[0])?;
                let to = resolve_label(&file, line_no, &labels, parts[1])?;
                let cost = parse_number::<S>(&file, line_no, "cost", parts[2])?;
                let capacity = if parts[3].trim().is_empty() {
                    S::infinity()
                } else {
                    parse_number::<S>(&file, line_no, "capacity", parts[3])?
                };
                arcs.push(Arc::new(from, to, cost, capacity));
            }
        }
    }
    if section == Section::Start {
        return Err(malformed(&file, 1, "missing NODES section"));
    }
    nodes.sort_by_key(|n| n.id);
    Network::build(nodes, arcs).map_err(LoadError::from)
}

fn resolve_label(
    file: &str,
    line: usize,
    labels: &BTreeMap<String, NodeId>,
    raw: &str,
) -> Result<NodeId, LoadError> {
    let label = raw.trim();
    labels
        .get(label)
        .copied()
        .ok_or_else(|| LoadError::UnknownLabel {
            file: file.to_string(),
            line,
            label: label.to_string(),
        })
}

/// Parses the demands file against an already-loaded network. Zero-volume
/// rows are omitted; the shadow price column is optional.
pub fn load_demands<S: Scalar>(path: &Path, net: &Network<S>) -> Result<Vec<Demand<S>>, LoadError> {
    let file = path.display().to_string();
    let text = read(path)?;
    let mut labels: BTreeMap<String, NodeId> = BTreeMap::new();
    for node in net.nodes() {
        labels.insert(node.label.clone(), node.id);
    }
    let mut demands = Vec::new();
    let mut saw_header = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != "origin,destination,volume"
                && line != "origin,destination,volume,shadow_price"
            {
                return Err(malformed(
                    &file,
                    line_no,
                    "expected header \"origin,destination,volume[,shadow_price]\"",
                ));
            }
            saw_header = true;
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(malformed(
                &file,
                line_no,
                format!("expected 3 or 4 fields, found {}", parts.len()),
            ));
        }
        let origin = resolve_label(&file, line_no, &labels, parts[0])?;
        let destination = resolve_label(&file, line_no, &labels, parts[1])?;
        let volume = parse_number::<S>(&file, line_no, "volume", parts[2])?;
        if volume < S::zero() {
            return Err(malformed(
                &file,
                line_no,
                "field \"volume\": must be non-negative",
            ));
        }
        if volume == S::zero() {
            continue;
        }
        let shadow_price = match parts.get(3) {
            Some(raw) if !raw.trim().is_empty() => {
                Some(parse_number::<S>(&file, line_no, "shadow_price", raw)?)
            }
            _ => None,
        };
        demands.push(Demand {
            origin,
            destination,
            volume,
            shadow_price,
        });
    }
    if !saw_header {
        return Err(malformed(&file, 1, "missing demands header"));
    }
    Ok(demands)
}

/// Loads and validates a full instance.
pub fn load_instance<S: Scalar>(
    network_path: &Path,
    demands_path: &Path,
) -> Result<crate::network::Instance<S>, LoadError> {
    let net = load_network::<S>(network_path)?;
    let demands = load_demands::<S>(demands_path, &net)?;
    build_network(net.nodes().to_vec(), net.arcs().to_vec(), demands).map_err(LoadError::from)
}

fn format_scalar<S: Scalar>(v: S) -> String {
    format!("{}", v.as_f64())
}

/// Canonical text form of a network, reloadable by [`load_network`].
pub fn network_to_string<S: Scalar>(net: &Network<S>) -> String {
    let mut out = String::from("NODES\nid,label\n");
    for node in net.nodes() {
        let _ = writeln!(out, "{},{}", node.id, node.label);
    }
    out.push_str("ARCS\nfrom,to,cost,capacity\n");
    for arc in net.arcs() {
        if arc.is_virtual {
            continue;
        }
        let capacity = if arc.capacity.is_finite() {
            format_scalar(arc.capacity)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            net.label(arc.from),
            net.label(arc.to),
            format_scalar(arc.cost),
            capacity
        );
    }
    out
}

/// Canonical text form of a demand set.
pub fn demands_to_string<S: Scalar>(net: &Network<S>, demands: &DemandSet<S>) -> String {
    let mut out = String::from("origin,destination,volume,shadow_price\n");
    for demand in demands.all() {
        let price = demand.shadow_price.map(format_scalar).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            net.label(demand.origin),
            net.label(demand.destination),
            format_scalar(demand.volume),
            price
        );
    }
    out
}
