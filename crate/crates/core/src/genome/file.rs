//! Text formats for trained networks.
//!
//! The network file is key-value text:
//!
//! ```text
//! format = qsnn-network/1
//! topology = 3 2 1
//! scheme = integer
//! synapses.1.1 = 1,1 4,4 -3,1
//! synapses.1.2 = 3,8 -3,1 4,1
//! synapses.2.1 = 3,1 3,3
//! ```
//!
//! `synapses.<pair>.<post>` lists `weight,delay_ms` for every presynaptic
//! neuron of that row (1-based indices). Blank lines and `#` comments are
//! ignored on input; output is canonical so a read/write cycle reproduces
//! canonical files byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use super::{QuantScheme, WEIGHT_OFFSET};
use crate::error::{Error, Result};
use crate::srm::{neuron_labels, QuantizedNetwork, Synapse, SynapseMatrix, Topology};

const NETWORK_FORMAT: &str = "qsnn-network/1";

fn parse_topology(s: &str, line: usize) -> Result<Topology> {
    let sizes = s
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(line, format!("bad layer size '{t}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    Topology::new(sizes).map_err(|e| Error::parse(line, e.to_string()))
}

fn parse_cell(cell: &str, line: usize) -> Result<Synapse> {
    let (w, d) = cell
        .split_once(',')
        .ok_or_else(|| Error::parse(line, format!("expected 'weight,delay', got '{cell}'")))?;
    let weight = w
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("bad weight '{w}'")))?;
    let delay_ms = d
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("bad delay '{d}'")))?;
    Ok(Synapse { weight, delay_ms })
}

fn assemble(
    topology: Topology,
    scheme: QuantScheme,
    mut rows: BTreeMap<(usize, usize), (usize, Vec<Synapse>)>,
) -> Result<QuantizedNetwork> {
    let mut layers = Vec::new();
    for (l, (pre, post)) in topology.layer_pairs().enumerate() {
        let mut data = Vec::with_capacity(pre * post);
        for j in 0..post {
            let (line, row) = rows.remove(&(l, j)).ok_or_else(|| {
                Error::shape(format!("missing synapses for pair {} row {}", l + 1, j + 1))
            })?;
            if row.len() != pre {
                return Err(Error::parse(
                    line,
                    format!("expected {pre} synapses, got {}", row.len()),
                ));
            }
            for s in &row {
                scheme.encode_weight(s.weight)?;
                scheme.encode_delay(s.delay_ms)?;
            }
            data.extend(row);
        }
        layers.push(SynapseMatrix::new(post, pre, data)?);
    }
    if let Some(((l, j), (line, _))) = rows.into_iter().next() {
        return Err(Error::parse(
            line,
            format!("row {} of pair {} is outside the topology", j + 1, l + 1),
        ));
    }
    QuantizedNetwork::new(topology, scheme, layers)
}

pub fn parse_network(text: &str) -> Result<QuantizedNetwork> {
    let mut format = None;
    let mut topology = None;
    let mut scheme = None;
    let mut rows = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::parse(line, "expected 'key = value'"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "format" => {
                if value != NETWORK_FORMAT {
                    return Err(Error::parse(line, format!("unsupported format '{value}'")));
                }
                format = Some(());
            }
            "topology" => topology = Some(parse_topology(value, line)?),
            "scheme" => {
                scheme = Some(
                    value
                        .parse::<QuantScheme>()
                        .map_err(|e| Error::parse(line, e.to_string()))?,
                )
            }
            k if k.starts_with("synapses.") => {
                let idx: Vec<_> = k["synapses.".len()..].split('.').collect();
                let parsed: Option<Vec<usize>> = idx.iter().map(|s| s.parse().ok()).collect();
                let (l, j) = match parsed.as_deref() {
                    Some([l, j]) if *l >= 1 && *j >= 1 => (l - 1, j - 1),
                    _ => return Err(Error::parse(line, format!("bad synapse key '{k}'"))),
                };
                let row = value
                    .split_whitespace()
                    .map(|c| parse_cell(c, line))
                    .collect::<Result<Vec<_>>>()?;
                if rows.insert((l, j), (line, row)).is_some() {
                    return Err(Error::parse(line, format!("duplicate key '{k}'")));
                }
            }
            other => return Err(Error::parse(line, format!("unknown key '{other}'"))),
        }
    }
    format.ok_or_else(|| Error::parse(0, "missing 'format' line"))?;
    let topology = topology.ok_or_else(|| Error::parse(0, "missing 'topology'"))?;
    let scheme = scheme.ok_or_else(|| Error::parse(0, "missing 'scheme'"))?;
    assemble(topology, scheme, rows)
}

pub fn write_network<W: Write>(mut w: W, net: &QuantizedNetwork) -> io::Result<()> {
    writeln!(w, "format = {NETWORK_FORMAT}")?;
    writeln!(w, "topology = {}", net.topology())?;
    writeln!(w, "scheme = {}", net.scheme())?;
    for (l, m) in net.layers().iter().enumerate() {
        for j in 0..m.post() {
            write!(w, "synapses.{}.{} =", l + 1, j + 1)?;
            for s in m.row(j) {
                write!(w, " {},{}", s.weight, s.delay_ms)?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Writes the network as labelled `(weight, delay)` matrices, one block per
/// layer pair with presynaptic neurons as columns:
///
/// ```text
/// topology<TAB>3 5 1
/// scheme<TAB>decimal
///
/// <TAB>B<TAB>I1<TAB>I2
/// H1<TAB>0, 2<TAB>-1, 5<TAB>2, 6
/// ..
/// ```
pub fn write_table_text<W: Write>(mut w: W, net: &QuantizedNetwork) -> io::Result<()> {
    let labels = neuron_labels(net.topology());
    writeln!(w, "topology\t{}", net.topology())?;
    writeln!(w, "scheme\t{}", net.scheme())?;
    for (l, m) in net.layers().iter().enumerate() {
        writeln!(w)?;
        for label in &labels[l] {
            write!(w, "\t{label}")?;
        }
        writeln!(w)?;
        for (j, post_label) in labels[l + 1].iter().enumerate() {
            write!(w, "{post_label}")?;
            for s in m.row(j) {
                write!(w, "\t{}, {}", s.weight, s.delay_ms)?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn parse_table_text(text: &str) -> Result<QuantizedNetwork> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("missing '{key}' line")))?;
        match l.split_once('\t') {
            Some((k, v)) if k == key => Ok((n, v.to_string())),
            _ => Err(Error::parse(n, format!("expected '{key}<TAB>value'"))),
        }
    };
    let (tl, topo_text) = header("topology")?;
    let (sl, scheme_text) = header("scheme")?;
    let topology = parse_topology(&topo_text, tl)?;
    let scheme = scheme_text
        .parse::<QuantScheme>()
        .map_err(|e| Error::parse(sl, e.to_string()))?;
    let labels = neuron_labels(&topology);

    let rest: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .skip(2)
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut rows = BTreeMap::new();
    let mut cursor = rest.iter();
    for (l, (_, post)) in topology.layer_pairs().enumerate() {
        let &(hl, head) = cursor
            .next()
            .ok_or_else(|| Error::shape(format!("missing block for layer pair {}", l + 1)))?;
        let cols: Vec<_> = head.split('\t').skip(1).collect();
        if cols != labels[l] {
            return Err(Error::parse(hl, "column labels do not match the topology"));
        }
        for (j, label) in labels[l + 1].iter().take(post).enumerate() {
            let &(rl, row) = cursor
                .next()
                .ok_or_else(|| Error::shape(format!("layer pair {} is missing rows", l + 1)))?;
            let mut cells = row.split('\t');
            if cells.next() != Some(label.as_str()) {
                return Err(Error::parse(rl, format!("expected row '{label}'")));
            }
            let syn = cells
                .map(|c| parse_cell(c, rl))
                .collect::<Result<Vec<_>>>()?;
            rows.insert((l, j), (rl, syn));
        }
    }
    if let Some(&(n, _)) = cursor.next() {
        return Err(Error::parse(n, "unexpected trailing content"));
    }
    assemble(topology, scheme, rows)
}

fn c_array<T: std::fmt::Display>(out: &mut String, ty: &str, name: &str, len: &str, values: &[T]) {
    let _ = writeln!(out, "static const {ty} {name}[{len}] = {{");
    for chunk in values.chunks(16) {
        let items: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "    {},", items.join(", "));
    }
    let _ = writeln!(out, "}};");
}

/// Emits a C source fragment with the network as flat integer arrays for an
/// integer-only target.
///
/// Synapses follow chromosome order: layer pair by layer pair, then
/// postsynaptic neuron, then presynaptic neuron. Weights are stored as
/// 3-bit level indices and recovered with
/// `weight = (QSNN_WEIGHT_OFFSET - level) / QSNN_WEIGHT_DIVISOR`;
/// delays are stored directly in ms.
pub fn write_static_array_source<W: Write>(mut w: W, net: &QuantizedNetwork) -> Result<()> {
    let scheme = net.scheme();
    let levels: Vec<u8> = net
        .synapses()
        .map(|s| scheme.encode_weight(s.weight))
        .collect::<Result<_>>()?;
    let delays: Vec<u8> = net.synapses().map(|s| s.delay_ms as u8).collect();
    let sizes = net.topology().layer_sizes();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "/* Quantized spiking network: topology [{}], {} weights.",
        net.topology(),
        scheme
    );
    let _ = writeln!(
        out,
        " * Synapse order: layer pair, then postsynaptic neuron, then presynaptic neuron."
    );
    let _ = writeln!(
        out,
        " * weight = (QSNN_WEIGHT_OFFSET - level) / QSNN_WEIGHT_DIVISOR */"
    );
    let _ = writeln!(out, "#include <stdint.h>");
    let _ = writeln!(out);
    let _ = writeln!(out, "#define QSNN_NUM_LAYERS {}", sizes.len());
    let _ = writeln!(out, "#define QSNN_NUM_SYNAPSES {}", levels.len());
    let _ = writeln!(out, "#define QSNN_WEIGHT_OFFSET {WEIGHT_OFFSET}");
    let _ = writeln!(
        out,
        "#define QSNN_WEIGHT_DIVISOR {}",
        scheme.weight_divisor()
    );
    let _ = writeln!(out);
    c_array(
        &mut out,
        "uint16_t",
        "qsnn_topology",
        "QSNN_NUM_LAYERS",
        sizes,
    );
    c_array(
        &mut out,
        "uint8_t",
        "qsnn_weight_level",
        "QSNN_NUM_SYNAPSES",
        &levels,
    );
    c_array(
        &mut out,
        "uint8_t",
        "qsnn_delay_ms",
        "QSNN_NUM_SYNAPSES",
        &delays,
    );
    w.write_all(out.as_bytes())?;
    Ok(())
}
