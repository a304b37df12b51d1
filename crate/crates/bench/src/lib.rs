//! Fixtures shared by the benchmarks.

use qsnn::tasks::{iris_encode, parse_iris, xor_patterns, GrfConfig, XorVariant, IRIS_DATA};
use qsnn::{QuantScheme, SimParams, SpikeTask, Topology};

pub const MISS_PENALTY: f64 = 100.0;

/// Standard XOR on a [3 5 1] network.
pub fn xor_task(scheme: QuantScheme) -> SpikeTask {
    let topology = Topology::new(vec![3, 5, 1]).expect("valid topology");
    SpikeTask::new(
        topology,
        scheme,
        SimParams::default(),
        xor_patterns(XorVariant::Standard),
        MISS_PENALTY,
    )
    .expect("valid task")
}

/// All 150 iris samples on a [33 8 1] network.
pub fn iris_task(scheme: QuantScheme) -> SpikeTask {
    let params = SimParams {
        theta: match scheme {
            QuantScheme::Decimal => 3.0,
            QuantScheme::Integer => 6.0,
        },
        ..SimParams::default()
    };
    let samples = parse_iris(IRIS_DATA).expect("bundled data parses");
    let patterns = iris_encode(&samples, &GrfConfig::default(), params.dt_ms).expect("encodable");
    let topology = Topology::new(vec![33, 8, 1]).expect("valid topology");
    SpikeTask::new(topology, scheme, params, patterns, MISS_PENALTY).expect("valid task")
}
