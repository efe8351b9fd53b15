#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spreadlink::link::{Frame, LinkConfig, LinkController};

pub fn connected_pair() -> (LinkController, LinkController) {
    let mut a = LinkController::new(8, LinkConfig::default()).unwrap();
    let mut b = LinkController::new(1, LinkConfig::default()).unwrap();
    let req = a.initiate(1).unwrap();
    let rep = b.on_handshake(&req).unwrap();
    a.on_handshake(&rep);
    (a, b)
}

/// Drives a stop-and-wait exchange of `payloads` over an abstract link.
/// Bit `i` of `losses` drops the `i`-th transmission (DATA or ACK); after
/// `pattern_len` transmissions nothing more is lost. Returns what the
/// receiver delivered.
pub fn arq_exchange(payloads: &[&str], losses: u32, pattern_len: u32) -> Vec<String> {
    let (mut a, mut b) = connected_pair();
    for p in payloads {
        a.queues.data.push_back(p.to_string());
    }
    let mut delivered = Vec::new();
    let mut tx = 0u32;
    let mut lost = || {
        let l = tx < pattern_len && (losses >> tx) & 1 == 1;
        tx += 1;
        l
    };
    let mut pending: Option<Frame> = None;
    for _ in 0..10_000 {
        let frame = match pending.take() {
            Some(f) => f,
            None => match a.next_frame().unwrap() {
                Some(f) => f,
                None => break,
            },
        };
        let ack = if lost() {
            None
        } else {
            let out = b.on_frame(&frame);
            delivered.extend(out.delivered);
            out.reply.filter(|_| !lost())
        };
        match ack {
            Some(ack) => {
                a.on_frame(&ack);
            }
            None => pending = a.on_timeout().retransmit,
        }
    }
    delivered
}

/// Random offers, arbitration and acknowledgements. Returns the number of
/// arbitration steps at which VOICE left while DATA was queued.
pub fn priority_violations(steps: usize, seed: u64) -> (usize, usize, usize) {
    let (mut a, _) = connected_pair();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut voice_sent = 0;
    let mut data_sent = 0;
    for _ in 0..steps {
        if rng.random_bool(0.3) {
            a.queues.data.push_back("x".into());
        }
        if rng.random_bool(0.6) {
            a.queues.voice.push_back(vec![0; 8]);
        }
        if a.outstanding().is_some() && rng.random_bool(0.5) {
            let seq = a.state().tx_seq;
            a.on_ack(seq);
        }
        let data_waiting = !a.queues.data.is_empty() || a.outstanding().is_some();
        match a.next_frame().unwrap() {
            Some(Frame::Voice { .. }) => {
                voice_sent += 1;
                if data_waiting {
                    violations += 1;
                }
            }
            Some(Frame::Data { .. }) => data_sent += 1,
            _ => {}
        }
    }
    (violations, voice_sent, data_sent)
}

/// Solves the 3x3 system `m x = v` by Cramer's rule.
fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = v[r];
        }
        *o = det(mc) / d;
    }
    Some(out)
}

/// Best RMS over a coarse (t1, t2) grid, with y0, A1, A2 from linear least
/// squares at x0 = 0.
pub fn grid_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let grid: Vec<f64> = (1..=200).map(|i| 0.01 * i as f64).collect();
    let mut best = f64::INFINITY;
    for (i, &t1) in grid.iter().enumerate() {
        for &t2 in &grid[i + 1..] {
            let rows: Vec<[f64; 3]> = xs.iter().map(|&x| [1.0, (-x / t1).exp(), (-x / t2).exp()]).collect();
            let mut m = [[0.0; 3]; 3];
            let mut v = [0.0; 3];
            for (r, &y) in rows.iter().zip(ys) {
                for a in 0..3 {
                    v[a] += r[a] * y;
                    for b in 0..3 {
                        m[a][b] += r[a] * r[b];
                    }
                }
            }
            let Some(c) = solve3(m, v) else { continue };
            let sse: f64 = rows
                .iter()
                .zip(ys)
                .map(|(r, &y)| (y - (c[0] * r[0] + c[1] * r[1] + c[2] * r[2])).powi(2))
                .sum();
            best = best.min((sse / xs.len() as f64).sqrt());
        }
    }
    best
}
