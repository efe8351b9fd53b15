use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spreadlink::config::SessionConfig;
use spreadlink::dtmf::{DtmfCodec, DEFAULT_SAMPLE_RATE};
use spreadlink::gateway::{serve, ServeOptions};
use spreadlink::jam::{
    fit_double_exponential, fit_report, parse_table, plot_data, sweep, write_table, Direction, ExperimentError,
    JamMeasurement, SweepSettings,
    TableRow, DWELL_TABLE_CSV,
};
use spreadlink::session::{Session, SessionEvent, ERASURE_MARKER};
use spreadlink::wav::{read_wav, write_wav};

#[derive(Parser)]
#[command(name = "spreadlink", version, about = "Simulated spread-spectrum chat link")]
struct Cli {
    /// Session config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chat between the two simulated nodes. Each input line is sent from
    /// node A, or from another node with an `@<address> ` prefix.
    Chat(ChatArgs),
    /// Render text as a DTMF WAV file.
    Encode(EncodeArgs),
    /// Decode a DTMF WAV file to text.
    Decode(DecodeArgs),
    /// Measure required jamming power against dwell time and fit the decay model.
    Experiment(ExperimentArgs),
    /// Expose a live session to consoles over TCP.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ChatArgs {
    /// Send this text from node A instead of reading stdin.
    #[arg(long)]
    send: Option<String>,
    /// Enable the sweep jammer before the session starts.
    #[arg(long)]
    jammer: bool,
    /// Print every trace line, not just link events.
    #[arg(long)]
    verbose: bool,
    /// Write the full event trace to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulated seconds allowed per input line.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
}

#[derive(Args)]
struct EncodeArgs {
    /// Text to encode.
    #[arg(conflicts_with = "input")]
    text: Option<String>,
    /// Read the text from a file (one trailing newline is dropped).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: f64,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    /// Write the text here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Dwell times in seconds.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.5,0.7,1.0")]
    dwell: Vec<f64>,
    /// Power step of the search, dB.
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Jammed airtime per power step, seconds.
    #[arg(long, default_value_t = 50.0)]
    exposure: f64,
    /// Skip the simulation and fit a table instead; without a path the
    /// bundled table is used.
    #[arg(long, value_name = "CSV")]
    fit_only: Option<Option<PathBuf>>,
    /// Directory for table.csv, fit.txt and fit_curve.csv; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Simulated seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
}

enum Failure {
    Usage(String),
    Handshake(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Handshake(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Handshake(m) | Failure::Io(m) => m,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spreadlink: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<SessionConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => SessionConfig::load(p).map_err(|e| match e {
            spreadlink::config::ConfigError::Io(io) => Failure::Io(format!("{}: {io}", p.display())),
            other => Failure::Usage(format!("{}: {other}", p.display())),
        })?,
        None => SessionConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Chat(a) => chat(cfg, a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Experiment(a) => experiment(cfg, a),
        Command::Serve(a) => {
            let opts = ServeOptions {
                speed: a.speed,
                ..ServeOptions::default()
            };
            if !(a.speed > 0.0) {
                return Err(Failure::Usage(format!("speed must be positive, got {}", a.speed)));
            }
            eprintln!("serving on {}:{}", a.host, a.port);
            serve(cfg, (a.host.as_str(), a.port), opts).map_err(|e| Failure::Io(format!("{}:{}: {e}", a.host, a.port)))
        }
    }
}

const QUIET_EVENTS: [&str; 6] = ["data_tx", "data_rx", "ack_rx", "voice_tx", "voice_rx", "handshake_rx"];

fn chat(mut cfg: SessionConfig, a: ChatArgs) -> Result<(), Failure> {
    if a.jammer {
        cfg.phy.jammer.enabled = true;
    }
    let node_a = cfg.node_a;
    let mut session = Session::new(cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    let lines: Vec<String> = match &a.send {
        Some(t) => vec![t.clone()],
        None => io::stdin()
            .lock()
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Io(format!("stdin: {e}")))?,
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let limit = (a.timeout * 1e6) as u64;
    let mut result = Ok(());
    for line in lines {
        let (from, text) = match line.strip_prefix('@').and_then(|r| r.split_once(' ')) {
            Some((addr, rest)) => match addr.parse::<u8>() {
                Ok(n) => (n, rest.to_string()),
                Err(_) => (node_a, line.clone()),
            },
            None => (node_a, line.clone()),
        };
        if let Err(e) = session.send_text(from, &text) {
            eprintln!("spreadlink: {e}");
            continue;
        }
        session.run_until_quiet(session.now_us() + limit);
        let mut delivered: Vec<(u8, String)> = Vec::new();
        for e in session.take_events() {
            match e {
                SessionEvent::Trace(t) if a.verbose || !QUIET_EVENTS.contains(&t.event) => {
                    let _ = writeln!(out, "* {t}");
                }
                SessionEvent::Delivered { node, text, .. } => match delivered.last_mut() {
                    Some((n, s)) if *n == node => s.push_str(&text),
                    _ => delivered.push((node, text)),
                },
                _ => {}
            }
        }
        for (node, text) in delivered {
            let _ = writeln!(out, "{node} < {text}");
        }
        if let Some(f) = session.failure() {
            result = Err(Failure::Handshake(f.to_string()));
            break;
        }
    }
    if let Some(p) = &a.out {
        std::fs::write(p, session.trace_text()).map_err(io_err(p))?;
    }
    result
}

fn encode(a: EncodeArgs) -> Result<(), Failure> {
    let text = match (&a.text, &a.input) {
        (Some(t), None) => t.clone(),
        (None, Some(p)) => {
            let mut t = std::fs::read_to_string(p).map_err(io_err(p))?;
            if t.ends_with('\n') {
                t.pop();
                if t.ends_with('\r') {
                    t.pop();
                }
            }
            t
        }
        _ => return Err(Failure::Usage("give either TEXT or --input".into())),
    };
    let buf = DtmfCodec::default()
        .encode_text(&text, a.sample_rate)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    write_wav(&a.out, &buf).map_err(|e| Failure::Io(format!("{}: {e}", a.out.display())))
}

fn decode(a: DecodeArgs) -> Result<(), Failure> {
    let buf = read_wav(&a.input).map_err(|e| Failure::Io(format!("{}: {e}", a.input.display())))?;
    let stream = DtmfCodec::default().decode_stream(&buf);
    for i in stream.erasures() {
        if let Err(e) = &stream.symbols[i].value {
            eprintln!("symbol {i} erased: {e}");
        }
    }
    let text = stream.text_with(ERASURE_MARKER);
    match &a.out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn experiment(cfg: SessionConfig, a: ExperimentArgs) -> Result<(), Failure> {
    let rows = match &a.fit_only {
        Some(path) => {
            let text = match path {
                Some(p) => std::fs::read_to_string(p).map_err(io_err(p))?,
                None => DWELL_TABLE_CSV.to_string(),
            };
            parse_table(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => {
            if a.dwell.is_empty() {
                return Err(Failure::Usage("empty dwell list".into()));
            }
            if let Some(d) = a.dwell.iter().find(|d| !(**d > 0.0)) {
                return Err(Failure::Usage(format!("dwell time must be positive, got {d}")));
            }
            if !(a.step > 0.0) || !(a.exposure > 0.0) {
                return Err(Failure::Usage("step and exposure must be positive".into()));
            }
            let mut session = cfg;
            session.phy.fast = true;
            session.phy.jammer.enabled = true;
            let settings = SweepSettings {
                session,
                exposure_s: a.exposure,
                ..SweepSettings::default()
            };
            sweep(&settings, &a.dwell, a.step)
                .into_iter()
                .zip(&a.dwell)
                .map(|([inc, dec], &d)| {
                    let keep = |r: Result<JamMeasurement, ExperimentError>| match r {
                        Ok(m) => Some(m.jam_power),
                        Err(e) => {
                            eprintln!("warning: {e}");
                            None
                        }
                    };
                    TableRow {
                        dwell_s: d,
                        increasing: keep(inc),
                        decreasing: keep(dec),
                    }
                })
                .collect()
        }
    };
    let table = write_table(&rows);
    let data: Vec<_> = rows
        .iter()
        .flat_map(|r| r.measurements())
        .filter(|m| m.direction == Direction::Increasing)
        .collect();
    let (report, curve) = match fit_double_exponential(&data) {
        Ok(fit) => {
            let lo = rows.iter().map(|r| r.dwell_s).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r.dwell_s).fold(f64::NEG_INFINITY, f64::max);
            (fit_report(&fit, &data), Some(plot_data(&fit, lo, hi, 91)))
        }
        Err(e) => (format!("fit skipped: {e}\n"), None),
    };
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            let write = |name: &str, body: &str| {
                let p = dir.join(name);
                std::fs::write(&p, body).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
            };
            write("table.csv", &table)?;
            write("fit.txt", &report)?;
            if let Some(c) = &curve {
                write("fit_curve.csv", c)?;
            }
            print!("{report}");
        }
        None => print!("{table}\n{report}"),
    }
    Ok(())
}
