//! Python bindings: `import spreadlink_py`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spreadlink::config::SessionConfig;
use spreadlink::dtmf::DtmfCodec;
use spreadlink::gateway::GatewayMessage;
use spreadlink::jam::{fit_double_exponential, parse_table, Direction, DWELL_TABLE_CSV};
use spreadlink::pulse::{self, PULSE_SAMPLE_RATE};
use spreadlink::session::{Session, ERASURE_MARKER};
use spreadlink::SampleBuffer;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// DTMF samples for `text`, framed with silence after every symbol.
#[pyfunction]
#[pyo3(signature = (text, sample_rate = 8000.0))]
fn encode_text(text: &str, sample_rate: f64) -> PyResult<Vec<f64>> {
    let buf = DtmfCodec::default().encode_text(text, sample_rate).map_err(value_err)?;
    Ok(buf.samples().to_vec())
}

/// Decoded text; erased symbols become U+FFFD.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate = 8000.0))]
fn decode_samples(samples: Vec<f64>, sample_rate: f64) -> String {
    DtmfCodec::default()
        .decode_stream(&SampleBuffer::new(samples, sample_rate))
        .text_with(ERASURE_MARKER)
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bit_string(s: &str) -> PyResult<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(value_err(format!("not a bit: {other:?}"))),
        })
        .collect()
}

/// The 14-bit handshake frame as a string of '0' and '1', start bit first.
#[pyfunction]
#[pyo3(signature = (src, dst, ack = false))]
fn handshake_bits(src: u8, dst: u8, ack: bool) -> PyResult<String> {
    let code = pulse::build_code(src, dst, ack).map_err(value_err)?;
    Ok(bit_string(&pulse::serialize_bits(&code)))
}

/// The responder's reply to a received frame.
#[pyfunction]
fn handshake_reply(bits: &str) -> PyResult<String> {
    let code = pulse::parse_hard_bits(&parse_bit_string(bits)?).map_err(value_err)?;
    Ok(bit_string(&pulse::serialize_bits(&code.reply())))
}

/// Pulse waveform for a bit string at the codec's 100 kHz rate.
#[pyfunction]
fn encode_pulses(bits: &str) -> PyResult<Vec<f64>> {
    let train = pulse::encode_pulses(&parse_bit_string(bits)?, PULSE_SAMPLE_RATE).map_err(value_err)?;
    Ok(train.samples.samples().to_vec())
}

/// Bits recovered from a pulse waveform; erasures are 'x'.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate = PULSE_SAMPLE_RATE))]
fn recover_pulses(samples: Vec<f64>, sample_rate: f64) -> PyResult<String> {
    let bits = pulse::recover_bits(&SampleBuffer::new(samples, sample_rate)).map_err(value_err)?;
    Ok(bits
        .iter()
        .map(|b| match b.bit() {
            Some(true) => '1',
            Some(false) => '0',
            None => 'x',
        })
        .collect())
}

/// Sends `text` from node A to node B and runs the session to completion.
///
/// `config` holds `key = value` lines applied over the defaults. Returns a
/// dict with the received text, the trace log and link counters.
#[pyfunction]
#[pyo3(signature = (text, seed = 1, jammer = false, config = None, limit_s = 120.0))]
fn run_chat<'py>(
    py: Python<'py>,
    text: &str,
    seed: u64,
    jammer: bool,
    config: Option<&str>,
    limit_s: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = match config {
        Some(c) => SessionConfig::parse(c).map_err(value_err)?,
        None => SessionConfig::default(),
    };
    cfg.seed = seed;
    cfg.phy.jammer.enabled |= jammer;
    let (a, b) = (cfg.node_a, cfg.node_b);
    let mut s = Session::new(cfg).map_err(value_err)?;
    s.send_text(a, text).map_err(value_err)?;
    let quiet = py.detach(|| s.run_until_quiet((limit_s * 1e6) as u64));
    if let Some(f) = s.failure() {
        return Err(PyRuntimeError::new_err(f.to_string()));
    }
    let stats_a = s.stats(a).map_err(value_err)?;
    let stats_b = s.stats(b).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("received", s.received(b).map_err(value_err)?)?;
    d.set_item("trace", s.trace_text())?;
    d.set_item("completed", quiet)?;
    d.set_item("hops", stats_a.hops + stats_b.hops)?;
    d.set_item("retransmissions", stats_a.retransmissions)?;
    d.set_item("duplicates", stats_b.duplicates)?;
    d.set_item("elapsed_s", s.now_us() as f64 * 1e-6)?;
    Ok(d)
}

/// Fits the double-exponential model to the increasing-power column of a
/// dwell-time CSV (the bundled table when `csv` is None).
#[pyfunction]
#[pyo3(signature = (csv = None))]
fn fit_table<'py>(py: Python<'py>, csv: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let rows = parse_table(csv.unwrap_or(DWELL_TABLE_CSV)).map_err(value_err)?;
    let data: Vec<_> = rows
        .iter()
        .flat_map(|r| r.measurements())
        .filter(|m| m.direction == Direction::Increasing)
        .collect();
    let fit = fit_double_exponential(&data).map_err(value_err)?;
    let c = fit.coefficients;
    let d = PyDict::new(py);
    for (k, v) in [("y0", c.y0), ("x0", c.x0), ("a1", c.a1), ("t1", c.t1), ("a2", c.a2), ("t2", c.t2)] {
        d.set_item(k, v)?;
    }
    d.set_item("rms", fit.rms)?;
    d.set_item("residuals", fit.residuals.clone())?;
    d.set_item("iterations", fit.iterations)?;
    Ok(d)
}

/// Parses one gateway protocol line and returns it re-serialized.
#[pyfunction]
fn normalize_gateway_line(line: &str) -> PyResult<String> {
    Ok(GatewayMessage::from_line(line).map_err(PyValueError::new_err)?.to_line())
}

#[pymodule]
pub fn spreadlink_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(encode_text, m)?)?;
    m.add_function(wrap_pyfunction!(decode_samples, m)?)?;
    m.add_function(wrap_pyfunction!(handshake_bits, m)?)?;
    m.add_function(wrap_pyfunction!(handshake_reply, m)?)?;
    m.add_function(wrap_pyfunction!(encode_pulses, m)?)?;
    m.add_function(wrap_pyfunction!(recover_pulses, m)?)?;
    m.add_function(wrap_pyfunction!(run_chat, m)?)?;
    m.add_function(wrap_pyfunction!(fit_table, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_gateway_line, m)?)?;
    m.add("PROTOCOL_VERSION", spreadlink::gateway::PROTOCOL_VERSION)?;
    Ok(())
}
