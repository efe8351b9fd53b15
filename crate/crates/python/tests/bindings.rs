use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<R>(f: impl FnOnce(&Bound<'_, PyModule>) -> R) -> R {
    static INIT: std::sync::Once = std::sync::Once::new();
    INIT.call_once(|| {
        use spreadlink_py::spreadlink_py;
        pyo3::append_to_inittab!(spreadlink_py);
        Python::initialize();
    });
    Python::attach(|py| f(&py.import("spreadlink_py").unwrap()))
}

#[test]
fn module_round_trips() {
    with_module(|m| {
        let samples: Vec<f64> = m.call_method1("encode_text", ("Hi 5",)).unwrap().extract().unwrap();
        let text: String = m.call_method1("decode_samples", (samples,)).unwrap().extract().unwrap();
        assert_eq!(text, "Hi 5");

        let bits: String = m.getattr("handshake_bits").unwrap().call1((8, 1)).unwrap().extract().unwrap();
        assert_eq!(bits, "10010000000010");
        let reply: String = m.getattr("handshake_reply").unwrap().call1((bits.as_str(),)).unwrap().extract().unwrap();
        assert_eq!(reply, "10000010010001");
        let wave: Vec<f64> = m.getattr("encode_pulses").unwrap().call1((reply.as_str(),)).unwrap().extract().unwrap();
        let back: String = m.getattr("recover_pulses").unwrap().call1((wave,)).unwrap().extract().unwrap();
        assert_eq!(back, reply);

        assert!(m.getattr("handshake_bits").unwrap().call1((0, 1)).is_err());
        assert!(m.getattr("encode_text").unwrap().call1(("\u{e9}",)).is_err());

        let fit = m.getattr("fit_table").unwrap().call0().unwrap();
        let fit = fit.cast::<PyDict>().unwrap();
        let rms: f64 = fit.get_item("rms").unwrap().unwrap().extract().unwrap();
        assert!(rms <= 0.5);

        let chat = m.getattr("run_chat").unwrap().call1(("hello",)).unwrap();
        let chat = chat.cast::<PyDict>().unwrap();
        let got: String = chat.get_item("received").unwrap().unwrap().extract().unwrap();
        assert_eq!(got, "hello");

        let line: String = m
            .getattr("normalize_gateway_line")
            .unwrap()
            .call1((r#"{"text":"hi","from":8,"kind":"chat_text"}"#,))
            .unwrap()
            .extract()
            .unwrap();
        assert_eq!(line, r#"{"kind":"chat_text","ts":0.0,"from":8,"text":"hi"}"#);
    });
}
