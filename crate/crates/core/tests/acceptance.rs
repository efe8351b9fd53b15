//! One line per acceptance criterion. Exits non-zero if any criterion
//! fails.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spreadlink::config::SessionConfig;
use spreadlink::dtmf::{DtmfCodec, DtmfTable, DEFAULT_SAMPLE_RATE, TONE_AMPLITUDE};
use spreadlink::jam::{
    evaluate_fit, fit_double_exponential, parse_table, run_sweep_experiment, Direction, SweepSettings, DWELL_TABLE_CSV,
};
use spreadlink::link::{LinkConfig, LinkController};
use spreadlink::pulse::{
    build_code, encode_pulses, parse_bits, pulse_edges, recover_bits, render_edges, serialize_bits, HandshakeCode,
    PULSE_AMPLITUDE, PULSE_SAMPLE_RATE,
};
use spreadlink::session::Session;
use spreadlink::SampleBuffer;

/// Signal-to-noise ratio for the noisy DTMF pass, dB.
const DTMF_SNR_DB: f64 = 20.0;
/// Edge jitter for the PRT pass: 4 samples of 10 µs.
const PRT_JITTER_SAMPLES: i64 = 4;
const ARQ_PATTERN_BITS: u32 = 10;
const PRIORITY_STEPS: usize = 10_000;
const FIT_RMS_BOUND_DB: f64 = 0.5;
/// Slack allowed between the fit and the grid oracle's optimum.
const ORACLE_SLACK_DB: f64 = 1e-3;
const TREND_DWELLS: [f64; 4] = [0.1, 0.2, 0.5, 1.0];
const TREND_STEP_DB: f64 = 0.5;
const ANTI_JAM_CHARS: usize = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn check(name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = budget.is_none_or(|b| took <= b);
    let pass = o.pass && in_time;
    let limit = budget.map(|b| format!(" / {:.0?}", b)).unwrap_or_default();
    println!(
        "{} {name}: {} [{:.2?}{limit}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took
    );
    pass
}

fn character_table_round_trip() -> Outcome {
    let table = DtmfTable::standard();
    let text: String = table.entries().iter().map(|e| e.character).collect();
    let codec = DtmfCodec::default();
    let clean = codec.encode_text(&text, DEFAULT_SAMPLE_RATE).unwrap();
    // two tones of amplitude a carry a^2 of signal power while sounding
    let sigma = (TONE_AMPLITUDE.powi(2) / 10f64.powf(DTMF_SNR_DB / 10.0)).sqrt();
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let noisy = SampleBuffer::new(
        clean.iter().map(|v| v + noise.sample(&mut rng)).collect(),
        clean.sample_rate(),
    );
    let errors = |buf: &SampleBuffer| {
        let out = codec.decode_stream(buf).text_with('\u{fffd}');
        let wrong = text.chars().zip(out.chars()).filter(|(a, b)| a != b).count();
        wrong + text.chars().count().abs_diff(out.chars().count())
    };
    let (e_clean, e_noisy) = (errors(&clean), errors(&noisy));
    outcome(
        e_clean == 0 && e_noisy == 0,
        format!(
            "{} table characters plus space, {e_clean} errors clean, {e_noisy} errors at {DTMF_SNR_DB} dB SNR",
            text.chars().filter(|&c| c != ' ').count()
        ),
    )
}

fn bit_string(code: &HandshakeCode) -> String {
    serialize_bits(code).iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn golden(src: u8, dst: u8, ack: bool) -> String {
    include_str!("../assets/handshake_vectors.txt")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().collect::<Vec<_>>())
        .find(|f| f.len() == 4 && f[..3] == [src.to_string(), dst.to_string(), (ack as u8).to_string()])
        .map(|f| f[3].to_string())
        .expect("golden vector present")
}

fn handshake_vector() -> Outcome {
    let mut a = LinkController::new(8, LinkConfig::default()).unwrap();
    let mut b = LinkController::new(1, LinkConfig::default()).unwrap();
    let req = a.initiate(1).unwrap();
    let Some(rep) = b.on_handshake(&req) else {
        return outcome(false, "node 1 did not reply".into());
    };
    let (got_req, got_rep) = (bit_string(&req), bit_string(&rep));
    let ok = got_req == golden(8, 1, false) && got_rep == golden(1, 8, true) && &got_req[1..7] == "001000"
        && &got_req[7..13] == "000001";
    outcome(ok, format!("request {got_req}, reply {got_rep}"))
}

fn jittered(bits: &[bool], rng: &mut ChaCha8Rng) -> SampleBuffer {
    let j = PRT_JITTER_SAMPLES;
    let (edges, len) = pulse_edges(bits, PULSE_SAMPLE_RATE).unwrap();
    let moved: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(r, f)| {
            let r = (r as i64 + j + rng.random_range(-j..=j)) as usize;
            let f = (f as i64 + j + rng.random_range(-j..=j)) as usize;
            (r, f.max(r + 1))
        })
        .collect();
    render_edges(&moved, len + 2 * j as usize + 1, PULSE_SAMPLE_RATE, PULSE_AMPLITUDE)
}

fn prt_codec() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut cases = 0;
    let mut failures = 0;
    for src in 1..=63 {
        for dst in 1..=63 {
            for ack in [false, true] {
                let code = build_code(src, dst, ack).unwrap();
                let bits = serialize_bits(&code);
                let clean = encode_pulses(&bits, PULSE_SAMPLE_RATE).unwrap().samples;
                for analog in [clean, jittered(&bits, &mut rng)] {
                    let back = recover_bits(&analog).ok().and_then(|b| parse_bits(&b).ok());
                    failures += (back != Some(code)) as usize;
                }
                cases += 1;
            }
        }
    }
    outcome(
        failures == 0 && cases == 3969 * 2,
        format!("{cases} codes, clean and with ±{}0 µs jitter, {failures} failures", PRT_JITTER_SAMPLES),
    )
}

fn arq_exactly_once() -> Outcome {
    let payloads = ["p0", "p1", "p2", "p3", "p4"];
    let patterns = 1u32 << ARQ_PATTERN_BITS;
    let bad = (0..patterns)
        .filter(|&l| common::arq_exchange(&payloads, l, ARQ_PATTERN_BITS) != payloads)
        .count();
    outcome(bad == 0, format!("{patterns} loss patterns on 5 frames, {bad} violations"))
}

fn priority_rule() -> Outcome {
    let (violations, voice, data) = common::priority_violations(PRIORITY_STEPS, 10);
    outcome(
        violations == 0 && voice > 0 && data > 0,
        format!("{PRIORITY_STEPS} steps, {data} data and {voice} voice frames, {violations} violations"),
    )
}

fn measured_fit() -> Outcome {
    let data: Vec<_> = parse_table(DWELL_TABLE_CSV)
        .unwrap()
        .iter()
        .flat_map(|r| r.measurements())
        .filter(|m| m.direction == Direction::Increasing)
        .collect();
    let xs: Vec<f64> = data.iter().map(|m| m.dwell_time).collect();
    let ys: Vec<f64> = data.iter().map(|m| m.jam_power).collect();
    let oracle = common::grid_oracle(&xs, &ys);
    let fit = match fit_double_exponential(&data) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let curve: Vec<f64> = (0..=900)
        .map(|i| evaluate_fit(&fit.coefficients, 0.1 + 0.001 * i as f64))
        .collect();
    let decreasing = curve.windows(2).all(|w| w[1] < w[0]);
    outcome(
        fit.rms <= FIT_RMS_BOUND_DB && oracle <= FIT_RMS_BOUND_DB && fit.rms <= oracle + ORACLE_SLACK_DB && decreasing,
        format!(
            "rms {:.4} dB (oracle {:.4}, bound {FIT_RMS_BOUND_DB}), strictly decreasing on [0.1, 1.0]: {decreasing}",
            fit.rms, oracle
        ),
    )
}

fn simulated_trend() -> Outcome {
    let settings = SweepSettings::default();
    match run_sweep_experiment(&settings, &TREND_DWELLS, TREND_STEP_DB) {
        Ok(ms) => {
            let column = |d: Direction| -> Vec<f64> {
                ms.iter().filter(|m| m.direction == d).map(|m| m.jam_power).collect()
            };
            let inc = column(Direction::Increasing);
            let dec = column(Direction::Decreasing);
            let ok = inc.windows(2).all(|w| w[1] <= w[0]);
            outcome(
                ok,
                format!("dwell {TREND_DWELLS:?} s: increasing {inc:?} dBm, decreasing {dec:?} dBm"),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn anti_jam() -> Outcome {
    let text: String = "ANTI-JAM TEST 0123456789 the quick brown fox. "
        .chars()
        .cycle()
        .take(ANTI_JAM_CHARS)
        .collect();
    let mut cfg = SessionConfig::default();
    cfg.phy.jammer.enabled = true;
    cfg.phy.jammer.start_s = 0.1;
    let margin = cfg.phy.jammer.power_dbm - cfg.phy.signal_dbm - 10.0 * (cfg.phy.pn().unwrap().len() as f64).log10();
    let mut s = Session::new(cfg).unwrap();
    s.send_text(8, &text).unwrap();
    let quiet = s.run_until_quiet(120_000_000);
    let got = s.received(1).unwrap();
    let lost = text.chars().count().saturating_sub(got.chars().count());
    let dup = s.stats(1).unwrap().duplicates;
    let hops = s.trace().iter().filter(|e| e.event == "hop").count();
    outcome(
        quiet && got == text && hops >= 1 && margin > 0.0,
        format!(
            "jammer {margin:+.1} dB over the despread signal, {} characters delivered, {lost} lost, \
             {dup} duplicate frames discarded, {hops} hops, {:.1} s simulated",
            got.chars().count(),
            s.now_us() as f64 * 1e-6
        ),
    )
}

fn determinism() -> Outcome {
    let mut cfg = SessionConfig {
        seed: 2024,
        voice_interval_us: 20_000,
        ..SessionConfig::default()
    };
    cfg.phy.jammer.enabled = true;
    cfg.phy.jammer.start_s = 0.2;
    let run = || {
        let mut s = Session::new(cfg.clone()).unwrap();
        s.send_text(8, "DETERMINISM 0123456789").unwrap();
        s.send_text_at(1, 300_000, "ECHO").unwrap();
        s.run_until(5_000_000);
        s.trace_text()
    };
    let (a, b) = (run(), run());
    outcome(
        a == b && !a.is_empty(),
        format!("{} trace lines, {} bytes, identical: {}", a.lines().count(), a.len(), a == b),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        check("character table round trip", Some(secs(5)), character_table_round_trip),
        check("handshake vector 8 -> 1", Some(secs(1)), handshake_vector),
        check("PRT codec", Some(secs(30)), prt_codec),
        check("ARQ exactly-once", None, arq_exactly_once),
        check("voice/data priority", None, priority_rule),
        check("dwell table fit", Some(secs(5)), measured_fit),
        check("simulated dwell trend", Some(secs(120)), simulated_trend),
        check("anti-jam chat", Some(secs(60)), anti_jam),
        check("determinism", None, determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
