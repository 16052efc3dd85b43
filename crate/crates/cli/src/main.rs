//! `dice-sim`: replay traces through the dice model, generate rolls, check
//! them for uniformity, and encode or decode UART frames.
//!
//! Exit status: 0 success, 1 I/O error, 2 usage or validation error,
//! 3 analysis failure (chi-square reject, UART framing error).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;

use dice_sim::device::{SampleSource, SyntheticAdc};
use dice_sim::stats::{modulo_bias, tally, uniformity_report, Alpha};
use dice_sim::trace::{emit_uart_log, emit_waveform};
use dice_sim::uart::{decode_stream, encode_frame, Diagnostic};
use dice_sim::{
    emit_log, face_of, parse_trace, replay, xorshift_step, LogFormat, PrngMode, PrngState,
    ReplayConfig, SeedRegister, TiltMode, DICE_SIDES,
};

/// Extra simulated time after the last trace event when `--duration-us` is absent.
const DEFAULT_TAIL_US: u64 = 2_000_000;

#[derive(Parser)]
#[command(name = "dice-sim", version, about = "FPGA digital dice simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace and write the run log, UART byte log and TX waveform.
    Simulate(SimulateArgs),
    /// Print dice rolls as CSV.
    Rolls(RollsArgs),
    /// Chi-square check of a roll file, or the exact modulo bias of a dice.
    Stats(StatsArgs),
    /// 8N1 frame codec.
    #[command(subcommand)]
    Uart(UartCommand),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "stateless")]
    mode: PrngMode,
    #[arg(long, default_value = "faithful")]
    tilt: TiltMode,
    /// Simulated time in microseconds (default: last event + 2 s).
    #[arg(long)]
    duration_us: Option<u64>,
    #[arg(long, default_value = "csv")]
    format: LogFormat,
}

#[derive(Args)]
struct RollsArgs {
    #[arg(long)]
    sides: u8,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value = "feedback")]
    mode: PrngMode,
    /// Feedback: the starting register. Stateless: the synthetic ADC seed.
    #[arg(long, default_value = "1", value_parser = parse_u32)]
    seed: u32,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// CSV of faces; the last column of each row is read.
    #[arg(long, requires = "sides")]
    rolls: Option<PathBuf>,
    #[arg(long)]
    sides: Option<u32>,
    #[arg(long, default_value = "0.001")]
    alpha: Alpha,
    /// Print the exact bias report for `d=N`.
    #[arg(long, value_parser = parse_bias)]
    bias: Option<u64>,
    /// Word width for `--bias`.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..=64))]
    bits: u32,
    #[arg(long, default_value_t = 50)]
    width: usize,
}

#[derive(Subcommand)]
enum UartCommand {
    /// Hex bytes to a string of line levels, start bit first.
    Encode {
        #[arg(required = true)]
        bytes: Vec<String>,
    },
    /// Line levels (one character per bit period) to hex bytes.
    Decode {
        #[arg(required = true)]
        bits: Vec<String>,
    },
}

enum Failure {
    Io(String),
    Usage(String),
    Analysis(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Analysis(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Usage(m) | Failure::Analysis(m) => m,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn parse_u32(s: &str) -> Result<u32, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("`{s}`: {e}"))
}

fn parse_bias(s: &str) -> Result<u64, String> {
    let n = s.strip_prefix("d=").unwrap_or(s);
    match n.parse::<u64>() {
        Ok(d) if d >= 1 => Ok(d),
        _ => Err(format!("expected d=N with N >= 1, got `{s}`")),
    }
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn simulate(args: SimulateArgs, out: &mut String) -> CmdResult {
    let text = read_file(&args.trace)?;
    let events =
        parse_trace(&text).map_err(|e| Failure::Usage(format!("{}: {e}", args.trace.display())))?;
    let last = events.last().map_or(0, |e| e.t_us);
    let duration_us = args.duration_us.unwrap_or(last + DEFAULT_TAIL_US);
    let config = ReplayConfig::new(duration_us)
        .with_prng(args.mode)
        .with_tilt(args.tilt);
    let log = replay(&events, &config).map_err(|e| Failure::Usage(e.to_string()))?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let log_name = match args.format {
        LogFormat::Csv => "log.csv",
        LogFormat::Jsonl => "log.jsonl",
    };
    write_atomic(&args.out.join(log_name), &emit_log(&log, args.format))?;
    write_atomic(&args.out.join("uart.csv"), &emit_uart_log(&log))?;
    write_atomic(&args.out.join("wave.csv"), &emit_waveform(&log))?;

    let _ = writeln!(
        out,
        "{} settled roll(s), {} UART byte(s) over {} us; logs in {}",
        log.settled_rolls.len(),
        log.uart_bytes.len(),
        duration_us,
        args.out.display()
    );
    for r in &log.settled_rolls {
        let _ = writeln!(out, "  t={} us d{} -> {}", r.t_us, r.diceval, r.out);
    }
    Ok(())
}

fn rolls(args: RollsArgs, out: &mut String) -> CmdResult {
    if !DICE_SIDES.contains(&args.sides) {
        return Err(Failure::Usage(format!(
            "unsupported dice d{} (expected one of {DICE_SIDES:?})",
            args.sides
        )));
    }
    let mut csv = String::from("face\n");
    match args.mode {
        PrngMode::Feedback => {
            let mut prng = PrngState::feedback(args.seed)
                .map_err(|e| Failure::Usage(format!("seed {}: {e}", args.seed)))?;
            for _ in 0..args.count {
                let rand = prng
                    .next_rand(SeedRegister::default())
                    .map_err(|e| Failure::Usage(e.to_string()))?;
                let _ = writeln!(csv, "{}", face_of(rand, args.sides));
            }
        }
        PrngMode::Stateless => {
            // one ADC sample shifted in per roll, as at each HZ10 tick
            let mut adc = SyntheticAdc::new(args.seed);
            let mut seed = SeedRegister::default();
            for _ in 0..args.count {
                seed = seed.shift(adc.next_sample());
                let _ = writeln!(csv, "{}", face_of(xorshift_step(seed.value()), args.sides));
            }
        }
    }
    match &args.out {
        Some(path) => write_atomic(path, &csv),
        None => {
            out.push_str(&csv);
            Ok(())
        }
    }
}

fn read_faces(path: &Path) -> Result<Vec<u64>, Failure> {
    let text = read_file(path)?;
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        match field.parse::<u64>() {
            Ok(v) => faces.push(v),
            // a leading header row
            Err(_) if faces.is_empty() && field.chars().any(|c| c.is_ascii_alphabetic()) => {}
            Err(_) => {
                return Err(Failure::Usage(format!(
                    "{}: line {}: `{field}` is not a face value",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(faces)
}

fn stats(args: StatsArgs, out: &mut String) -> CmdResult {
    if args.rolls.is_none() && args.bias.is_none() {
        return Err(Failure::Usage(
            "nothing to do: pass --rolls or --bias".into(),
        ));
    }
    if let Some(d) = args.bias {
        let report = modulo_bias(d, args.bits);
        out.push_str(&report.summary());
        out.push_str(&report.to_csv());
    }
    let Some(path) = args.rolls else {
        return Ok(());
    };
    let sides = args.sides.expect("clap enforces --sides with --rolls");
    if sides == 0 {
        return Err(Failure::Usage("--sides must be at least 1".into()));
    }
    let faces = read_faces(&path)?;
    let hist = tally(&faces, sides).map_err(|e| Failure::Usage(e.to_string()))?;
    out.push_str(&hist.to_csv());
    out.push('\n');
    out.push_str(&hist.ascii_chart(args.width));
    let report = uniformity_report(&hist, args.alpha).map_err(|e| Failure::Usage(e.to_string()))?;
    let verdict = format!(
        "chi-square {:.3} df {} critical {:.3} at alpha {}",
        report.statistic, report.df, report.critical, args.alpha
    );
    if report.pass {
        let _ = writeln!(out, "{verdict}: PASS");
        Ok(())
    } else {
        let _ = writeln!(out, "{verdict}: FAIL");
        Err(Failure::Analysis(format!("{verdict}: not uniform")))
    }
}

fn parse_hex_bytes(words: &[String]) -> Result<Vec<u8>, Failure> {
    let mut bytes = Vec::new();
    for tok in words.iter().flat_map(|w| w.split([' ', ',', '\t'])) {
        if tok.is_empty() {
            continue;
        }
        let hex = tok
            .strip_prefix("0x")
            .or_else(|| tok.strip_prefix("0X"))
            .unwrap_or(tok);
        let byte = (!hex.is_empty() && hex.len() <= 2)
            .then(|| u8::from_str_radix(hex, 16).ok())
            .flatten()
            .ok_or_else(|| Failure::Usage(format!("`{tok}` is not a hex byte")))?;
        bytes.push(byte);
    }
    Ok(bytes)
}

fn parse_bits(words: &[String]) -> Result<Vec<bool>, Failure> {
    let mut bits = Vec::new();
    for c in words.iter().flat_map(|w| w.chars()) {
        match c {
            '0' => bits.push(false),
            '1' => bits.push(true),
            '_' | ' ' | '\t' => {}
            other => return Err(Failure::Usage(format!("`{other}` is not a bit"))),
        }
    }
    if bits.is_empty() {
        return Err(Failure::Usage("no bits given".into()));
    }
    Ok(bits)
}

fn uart(cmd: UartCommand, out: &mut String) -> CmdResult {
    match cmd {
        UartCommand::Encode { bytes } => {
            let line: String = parse_hex_bytes(&bytes)?
                .into_iter()
                .flat_map(encode_frame)
                .map(|b| if b { '1' } else { '0' })
                .collect();
            let _ = writeln!(out, "{line}");
            Ok(())
        }
        UartCommand::Decode { bits } => {
            let result = decode_stream(&parse_bits(&bits)?);
            let hex: Vec<String> = result.bytes().iter().map(|b| format!("{b:02X}")).collect();
            let _ = writeln!(out, "{}", hex.join(" "));
            if result.diagnostics.is_empty() {
                return Ok(());
            }
            for d in &result.diagnostics {
                match d {
                    Diagnostic::Framing { offset } => {
                        eprintln!("framing error: stop bit low in frame at bit {offset}")
                    }
                    Diagnostic::Truncated { offset } => {
                        eprintln!("truncated frame at bit {offset}")
                    }
                }
            }
            Err(Failure::Analysis(format!(
                "{} bad frame(s)",
                result.diagnostics.len()
            )))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // help and version exit 0, bad usage exits 2
        Err(e) => e.exit(),
    };
    let mut out = String::new();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, &mut out),
        Command::Rolls(a) => rolls(a, &mut out),
        Command::Stats(a) => stats(a, &mut out),
        Command::Uart(c) => uart(c, &mut out),
    };
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout
        .write_all(out.as_bytes())
        .and_then(|()| stdout.flush())
    {
        // a closed pipe downstream (`| head`) is not a failure
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("dice-sim: stdout: {e}");
            return ExitCode::from(1);
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("dice-sim: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
