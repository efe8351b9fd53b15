use spreadlink::gateway::GatewayMessage;

fn keys(line: &str) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert!(!line.contains('\n'));
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn field_order_is_pinned() {
    let cases = [
        (GatewayMessage::Hello { ts: 0.0, version: 1 }, "kind ts version"),
        (
            GatewayMessage::ChatText {
                ts: 1.5,
                from: 8,
                to: Some(1),
                text: "a\nb".into(),
            },
            "kind ts from to text",
        ),
        (
            GatewayMessage::VoiceMarker {
                ts: 0.0,
                from: 1,
                to: 8,
                bytes: 8,
            },
            "kind ts from to bytes",
        ),
        (
            GatewayMessage::LinkEvent {
                ts: 0.0,
                node: 8,
                event: "hop".into(),
                old: "connected".into(),
                new: "connected".into(),
                channel: 3,
            },
            "kind ts node event old new channel",
        ),
        (
            GatewayMessage::JammerCommand {
                ts: 0.0,
                enabled: Some(true),
                dwell_s: Some(0.1),
                power_dbm: Some(-5.0),
            },
            "kind ts enabled dwell_s power_dbm",
        ),
        (
            GatewayMessage::SpectrumSnapshot {
                ts: 0.0,
                channels: vec![-50.0, -30.0],
                active: 1,
                jammed: None,
            },
            "kind ts channels active jammed",
        ),
        (
            GatewayMessage::Error {
                ts: 0.0,
                message: "x".into(),
            },
            "kind ts message",
        ),
    ];
    for (msg, expected) in cases {
        let line = msg.to_line();
        // serde_json keeps insertion order only with preserve_order, so
        // read the key order straight from the text
        let order: Vec<&str> = expected.split(' ').collect();
        let mut pos = 0;
        for k in &order {
            let at = line[pos..].find(&format!("\"{k}\":")).unwrap_or_else(|| panic!("{k} in {line}"));
            pos += at + 1;
        }
        let mut sorted = keys(&line);
        sorted.sort();
        let mut want: Vec<String> = order.iter().map(|s| s.to_string()).collect();
        want.sort();
        assert_eq!(sorted, want);
        assert!(line.starts_with(&format!("{{\"kind\":\"{}\",\"ts\":", msg.kind())));
        assert_eq!(GatewayMessage::from_line(&line).unwrap(), msg);
    }
}

#[test]
fn optional_keys_are_omitted() {
    let m = GatewayMessage::JammerCommand {
        ts: 0.0,
        enabled: Some(false),
        dwell_s: None,
        power_dbm: None,
    };
    assert_eq!(m.to_line(), r#"{"kind":"jammer_command","ts":0.0,"enabled":false}"#);
    let c = GatewayMessage::from_line(r#"{"kind":"chat_text","from":8,"text":"hi"}"#).unwrap();
    assert_eq!(
        c,
        GatewayMessage::ChatText {
            ts: 0.0,
            from: 8,
            to: None,
            text: "hi".into()
        }
    );
}

#[test]
fn rejects_unknown_keys_and_kinds() {
    assert!(GatewayMessage::from_line(r#"{"kind":"hello","ts":0,"version":1,"extra":2}"#).is_err());
    assert!(GatewayMessage::from_line(r#"{"kind":"warp","ts":0}"#).is_err());
    assert!(GatewayMessage::from_line(r#"{"ts":0}"#).is_err());
}
