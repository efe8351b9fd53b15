use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spreadlink::phy::*;
use spreadlink::pulse::build_code;
use spreadlink::signal::dbm_to_linear;
use spreadlink::SampleBuffer;

const CHIP_RATE: f64 = 1.27e6;

fn parked_state(active: usize, jam_channel: usize, jam_dbm: f64, noise_dbm: f64) -> ChannelState {
    let plan = ChannelPlan::default();
    let jammer = SweepJammer {
        dwell_time: 10.0,
        power_dbm: jam_dbm,
        sweep_order: vec![jam_channel],
        enabled: true,
        start_time: 0.0,
        seed: 99,
        tone_period: 0.0,
    };
    ChannelState::new(plan, active, noise_dbm, Some(jammer)).unwrap()
}

/// Chip-level path: spread, scale to `signal_dbm`, pass through the
/// channel, despread.
fn chip_level(bits: &[bool], pn: &PnSequence, signal_dbm: f64, st: &ChannelState, t: f64, rng: &mut ChaCha8Rng) -> Despread {
    let s = dbm_to_linear(signal_dbm).sqrt();
    let chips: Vec<f64> = spread(bits, pn).iter().map(|c| c * s).collect();
    let rx = channel_transmit(&SampleBuffer::new(chips, CHIP_RATE), st, t, rng);
    despread(&rx, pn).unwrap()
}

#[test]
fn m_sequence_autocorrelation_all_lags() {
    for d in [5, 6, 7] {
        let pn = PnSequence::m_sequence(d).unwrap();
        let n = pn.len();
        assert_eq!(pn.autocorrelation(0), n as f64);
        for lag in 1..n {
            assert_eq!(pn.autocorrelation(lag), -1.0, "degree {d} lag {lag}");
        }
    }
}

#[test]
fn fsk_ber_at_10db_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bits: Vec<bool> = (0..10_000).map(|_| rng.random()).collect();
    let tx = fsk_modulate(&bits, 2400.0, 1200.0, 1250.0, 100_000.0).unwrap();
    // unit-amplitude sinusoid carries 0.5; 10 dB below that
    let noise = Normal::new(0.0, (0.05f64).sqrt()).unwrap();
    let rx = SampleBuffer::new(tx.iter().map(|x| x + noise.sample(&mut rng)).collect(), tx.sample_rate());
    let out = fsk_demodulate(&rx, 2400.0, 1200.0, 1250.0).unwrap();
    let errors = out.iter().zip(&bits).filter(|(s, &b)| s.bit != Some(b)).count();
    assert!(errors < 10, "{errors} errors in 10^4 bits");
}

#[test]
fn jammer_elsewhere_matches_no_jammer() {
    let pn = PnSequence::m_sequence(7).unwrap();
    let bits: Vec<bool> = (0..64).map(|i| i % 3 == 0).collect();
    let elsewhere = parked_state(3, 9, 0.0, -50.0);
    let mut none = elsewhere.clone();
    none.jammer = None;
    let a = chip_level(&bits, &pn, -30.0, &elsewhere, 0.0, &mut ChaCha8Rng::seed_from_u64(5));
    let b = chip_level(&bits, &pn, -30.0, &none, 0.0, &mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(a, b);
    assert_eq!(a.bits, bits);
}

#[test]
fn parked_high_power_jammer_collapses_margin() {
    let pn = PnSequence::m_sequence(7).unwrap();
    let bits: Vec<bool> = (0..64).map(|i| i % 2 == 0).collect();
    let clean = chip_level(&bits, &pn, -30.0, &parked_state(3, 9, 0.0, -50.0), 0.0, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(clean.margins.iter().all(|&m| m > 0.9));
    let jammed = chip_level(&bits, &pn, -30.0, &parked_state(3, 3, -10.0, -50.0), 0.0, &mut ChaCha8Rng::seed_from_u64(1));
    assert!(jammed.margins.iter().all(|&m| m < 0.35), "{:?}", jammed.margins);
}

#[test]
fn jam_below_processing_gain_keeps_bits() {
    // jammer as strong as the signal: margin drops, bits survive
    let pn = PnSequence::m_sequence(7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let bits: Vec<bool> = (0..500).map(|_| rng.random()).collect();
    let d = chip_level(&bits, &pn, -30.0, &parked_state(3, 3, -30.0, -50.0), 0.0, &mut rng);
    assert_eq!(d.bits, bits);
    let mean = d.margins.iter().sum::<f64>() / d.margins.len() as f64;
    assert!(mean < 0.8 && mean > 0.5, "{mean}");
}

#[test]
fn ber_non_decreasing_in_jam_power() {
    let pn = PnSequence::m_sequence(7).unwrap();
    let mut last = 0.0;
    let mut fast = CorrelatorChannel::new(pn, CHIP_RATE);
    for p in (-24..=0).step_by(3) {
        let st = parked_state(3, 3, p as f64, -50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut errors = 0usize;
        let mut total = 0usize;
        // many visits so the tone frequency is averaged over
        for visit in 0..40u64 {
            let mut st = st.clone();
            st.jammer.as_mut().unwrap().seed = visit;
            let bits: Vec<bool> = (0..500).map(|_| rng.random()).collect();
            let got = fast.transmit(&bits, -30.0, &st, 0.0, &mut rng).bits;
            errors += got.iter().zip(&bits).filter(|(a, b)| a != b).count();
            total += bits.len();
        }
        let ber = errors as f64 / total as f64;
        // three standard errors of slack
        let slack = 3.0 * (last * (1.0 - last) / total as f64).sqrt();
        assert!(ber + slack >= last, "BER fell from {last} to {ber} at {p} dBm");
        last = ber;
    }
    assert!(last > 0.05);
}

#[test]
fn fast_path_agrees_with_chip_level() {
    let pn = PnSequence::m_sequence(7).unwrap();
    let mut fast = CorrelatorChannel::new(pn.clone(), CHIP_RATE);
    for jam in [f64::NEG_INFINITY, -30.0, -18.0, -12.0] {
        let mut st = parked_state(3, 3, jam, -50.0);
        if jam == f64::NEG_INFINITY {
            st.jammer = None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bits: Vec<bool> = (0..2000).map(|_| rng.random()).collect();
        let slow = chip_level(&bits, &pn, -30.0, &st, 0.0, &mut rng);
        let fast_out = fast.transmit(&bits, -30.0, &st, 0.0, &mut rng);
        let (fbits, fmargins) = (fast_out.bits, fast_out.margins);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ms, mf) = (mean(&slow.margins), mean(&fmargins));
        assert!((ms - mf).abs() < 0.02, "jam {jam}: chip {ms} fast {mf}");
        let err = |got: &[bool]| got.iter().zip(&bits).filter(|(a, b)| a != b).count() as f64 / 2000.0;
        assert!((err(&slow.bits) - err(&fbits)).abs() < 0.03, "jam {jam}");
        let (es, ef) = (mean(&slow.energies), mean(&fast_out.energies));
        assert!((es - ef).abs() < 0.05 * es, "jam {jam}: energy {es} vs {ef}");
    }
}

#[test]
fn handshake_radio_survives_noise() {
    let r = HandshakeRadio::default();
    let plan = ChannelPlan::default();
    let st = ChannelState::new(plan, 0, -50.0, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let code = build_code(rng.random_range(1..=63), rng.random_range(1..=63), rng.random()).unwrap();
        let rx = channel_transmit(&r.transmit(&code).unwrap(), &st, 0.0, &mut rng);
        assert_eq!(r.receive(&rx), Ok(code));
    }
}

#[test]
fn handshake_radio_fails_under_strong_jam() {
    let r = HandshakeRadio::default();
    let st = parked_state(0, 0, -10.0, -50.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let code = build_code(8, 1, false).unwrap();
    let rx = channel_transmit(&r.transmit(&code).unwrap(), &st, 0.0, &mut rng);
    assert_ne!(r.receive(&rx), Ok(code));
}

proptest! {
    #[test]
    fn dsss_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..64), degree in 5u32..=7) {
        let pn = PnSequence::m_sequence(degree).unwrap();
        let d = despread(&spread(&bits, &pn), &pn).unwrap();
        prop_assert_eq!(d.bits, bits);
        prop_assert!(d.margins.iter().all(|m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn fsk_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..40)) {
        let tx = fsk_modulate(&bits, 2400.0, 1200.0, 1250.0, 100_000.0).unwrap();
        let got: Vec<Option<bool>> = fsk_demodulate(&tx, 2400.0, 1200.0, 1250.0).unwrap().iter().map(|s| s.bit).collect();
        prop_assert_eq!(got, bits.iter().map(|&b| Some(b)).collect::<Vec<_>>());
    }
}
