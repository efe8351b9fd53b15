mod common;

use proptest::prelude::*;
use spreadlink::link::*;
use spreadlink::pulse::build_code;

#[test]
fn arq_every_loss_pattern_of_length_ten() {
    let payloads = ["a", "b", "c", "d", "e"];
    for losses in 0..(1u32 << 10) {
        let got = common::arq_exchange(&payloads, losses, 10);
        assert_eq!(got, payloads, "loss pattern {losses:010b}");
    }
}

#[test]
fn arq_survives_long_bursts() {
    let payloads = ["1", "2", "3"];
    assert_eq!(common::arq_exchange(&payloads, u32::MAX, 25), payloads);
}

#[test]
fn voice_never_preempts_data() {
    let (violations, voice, data) = common::priority_violations(10_000, 1);
    assert_eq!(violations, 0);
    assert!(voice > 100 && data > 100, "voice {voice} data {data}");
}

#[test]
fn voice_is_not_retransmitted() {
    let (mut a, _) = common::connected_pair();
    a.queues.voice.push_back(vec![1, 2]);
    assert!(matches!(a.next_frame(), Ok(Some(Frame::Voice { .. }))));
    assert_eq!(a.on_timeout(), TimeoutOutcome::default());
    assert_eq!(a.next_frame(), Ok(None));
}

#[test]
fn diversion_disabled_never_hops() {
    let cfg = LinkConfig {
        diversion: false,
        ..LinkConfig::default()
    };
    let mut a = LinkController::new(8, cfg.clone()).unwrap();
    let mut b = LinkController::new(1, cfg).unwrap();
    let rep = b.on_handshake(&a.initiate(1).unwrap()).unwrap();
    a.on_handshake(&rep);
    a.queues.data.push_back("x".into());
    a.next_frame().unwrap();
    for _ in 0..9 {
        assert_eq!(a.on_timeout().hop, None);
    }
    assert_eq!(a.on_jam_detected(), None);
    assert_eq!(a.phase(), Phase::Connected);
}

#[test]
fn hop_lists_resync_by_cycling() {
    // one end hops twice, the other not at all: the lagging sender keeps
    // hopping every three timeouts and meets it again
    let (mut a, mut b) = common::connected_pair();
    b.on_jam_detected();
    b.on_jam_detected();
    a.queues.data.push_back("x".into());
    a.next_frame().unwrap();
    let mut timeouts = 0;
    while a.channel() != b.channel() {
        a.on_timeout();
        timeouts += 1;
        assert!(timeouts <= 3 * 26);
    }
    assert_eq!(timeouts, 6);
}

proptest! {
    #[test]
    fn handshake_safety(a in 1u8..=63, b in 1u8..=63, c in 1u8..=63) {
        prop_assume!(a != b && c != b);
        let mut na = LinkController::new(a, LinkConfig::default()).unwrap();
        let mut nb = LinkController::new(b, LinkConfig::default()).unwrap();
        let req = na.initiate(b).unwrap();
        let rep = nb.on_handshake(&req).unwrap();
        prop_assert_eq!(rep.src(), req.dst());
        prop_assert_eq!(rep.dst(), req.src());
        prop_assert!(rep.ack());
        na.on_handshake(&rep);
        prop_assert_eq!(na.phase(), Phase::Connected);
        prop_assert_eq!(nb.phase(), Phase::Connected);
        prop_assert_eq!(na.channel(), nb.channel());
        // a third node addressed by nobody stays put
        let mut nc = LinkController::new(c, LinkConfig::default()).unwrap();
        let before = nc.state().clone();
        prop_assert_eq!(nc.on_handshake(&build_code(a, b, false).unwrap()), None);
        prop_assert_eq!(nc.on_handshake(&rep.reply()), None);
        prop_assert_eq!(nc.state(), &before);
    }

    #[test]
    fn address_check(addr in 1u8..=63, src in 1u8..=63, dst in 1u8..=63, ack: bool) {
        prop_assume!(dst != addr);
        let mut n = LinkController::new(addr, LinkConfig::default()).unwrap();
        let before = n.state().clone();
        prop_assert_eq!(n.on_handshake(&build_code(src, dst, ack).unwrap()), None);
        prop_assert_eq!(n.state(), &before);
    }

    #[test]
    fn priority_random_seeds(seed: u64) {
        prop_assert_eq!(common::priority_violations(500, seed).0, 0);
    }

    #[test]
    fn frame_bits_round_trip(text in "[a-zA-Z0-9 ,.!?]{1,31}", seq: bool) {
        let f = Frame::Data { seq, text };
        prop_assert_eq!(Frame::from_bits(&f.to_bits().unwrap()).unwrap(), f);
    }
}
