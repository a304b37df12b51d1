use std::io::{self, Write};

use super::{MembraneTrace, Topology};

/// Display names for every neuron, layer by layer: `B, I1, I2, ..` for the
/// inputs (the first input is the bias), `H1, H2, ..` for a single hidden
/// layer (`H1.1, H1.2, ..` when there are several) and `O1, ..` for outputs.
pub fn neuron_labels(topology: &Topology) -> Vec<Vec<String>> {
    let sizes = topology.layer_sizes();
    let last = sizes.len() - 1;
    let hidden_layers = sizes.len().saturating_sub(2);
    sizes
        .iter()
        .enumerate()
        .map(|(l, &n)| {
            (0..n)
                .map(|j| match l {
                    0 if j == 0 => "B".to_string(),
                    0 => format!("I{j}"),
                    l if l == last => format!("O{}", j + 1),
                    _ if hidden_layers == 1 => format!("H{}", j + 1),
                    l => format!("H{l}.{}", j + 1),
                })
                .collect()
        })
        .collect()
}

/// Number of decimals needed to print multiples of `dt` exactly.
pub(crate) fn time_decimals(dt: f64) -> usize {
    (0..=9)
        .find(|&d| {
            let scaled = dt * 10f64.powi(d as i32);
            (scaled - scaled.round()).abs() < 1e-9
        })
        .unwrap_or(9)
}

/// Writes sampled potentials as a tab-separated table followed by the spike
/// events.
///
/// ```text
/// time_ms  u_<label1>  u_<label2> ..      one row per grid sample
/// <blank line>
/// neuron   spike_ms                      one row per spike, neurons in column order
/// ```
///
/// All traces must share the same grid.
pub fn write_trace_table<W: Write>(
    mut w: W,
    labels: &[String],
    traces: &[&MembraneTrace],
    dt_ms: f64,
) -> io::Result<()> {
    assert_eq!(labels.len(), traces.len(), "one label per trace");
    let td = time_decimals(dt_ms);
    write!(w, "time_ms")?;
    for l in labels {
        write!(w, "\tu_{l}")?;
    }
    writeln!(w)?;
    let rows = traces.first().map_or(0, |t| t.grid.len());
    for k in 0..rows {
        write!(w, "{:.td$}", traces[0].grid[k])?;
        for tr in traces {
            write!(w, "\t{:.9}", tr.u[k])?;
        }
        writeln!(w)?;
    }
    writeln!(w)?;
    writeln!(w, "neuron\tspike_ms")?;
    for (l, tr) in labels.iter().zip(traces) {
        for t in tr.spikes.times() {
            writeln!(w, "{l}\t{t:.td$}")?;
        }
    }
    Ok(())
}
