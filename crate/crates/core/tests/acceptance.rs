//! Acceptance criteria. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; exits nonzero if any criterion fails.

mod common;

use std::panic;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dice_sim::device::{selection_update, SelectionState, TiltMode, TiltState};
use dice_sim::display::render_word;
use dice_sim::prng::{xorshift_inverse, xorshift_step, PrngState, SeedRegister};
use dice_sim::stats::{chi_square, modulo_bias, tally};
use dice_sim::timing::{Domain, Edge, Scheduler};
use dice_sim::trace::{emit_log, emit_uart_log, replay, LogFormat, ReplayConfig, RunLog};
use dice_sim::uart::{decode_stream, encode_frame, payload_pack, Diagnostic, TxFsm, UartTxState};
use dice_sim::{face_of, PrngMode};

use common::{bitvec_xorshift, cycle_stepping_ticks, d20_scenario};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($msg)+)),
        }
    };
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    if elapsed.as_secs_f64() < limit_s {
        Ok(())
    } else {
        Err(format!(
            "took {:.3}s, limit {limit_s}s",
            elapsed.as_secs_f64()
        ))
    }
}

fn c1_xorshift_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut inputs: Vec<u32> = (0..100_000).map(|_| rng.gen()).collect();
    inputs.extend([0, 1, 0x8000_0000, 0xFFFF_FFFF]);
    let mismatches = inputs
        .iter()
        .filter(|&&x| xorshift_step(x) != bitvec_xorshift(x))
        .count();
    ensure!(mismatches == 0, "{mismatches} mismatches");
    ensure!(
        xorshift_step(1) == 0x0000_0201,
        "step(1) = {:#010x}",
        xorshift_step(1)
    );
    ensure!(
        xorshift_step(0x8000_0000) == 0x8104_0800,
        "step(0x80000000) wrong"
    );
    within(start.elapsed(), 1.0)?;
    Ok(format!("{} inputs, 0 mismatches", inputs.len()))
}

fn c2_bijectivity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut failures = 0usize;
    for _ in 0..1_000_000 {
        let x: u32 = rng.gen();
        if xorshift_inverse(xorshift_step(x)) != x {
            failures += 1;
        }
    }
    ensure!(failures == 0, "{failures} round-trip failures");
    let mut nonlinear = 0usize;
    for _ in 0..10_000 {
        let (a, b): (u32, u32) = (rng.gen(), rng.gen());
        if xorshift_step(a ^ b) != xorshift_step(a) ^ xorshift_step(b) {
            nonlinear += 1;
        }
    }
    ensure!(nonlinear == 0, "{nonlinear} linearity failures");
    within(start.elapsed(), 5.0)?;
    Ok("1e6 round trips, 1e4 linear pairs".into())
}

fn feedback_faces(sides: u8, n: usize, seed: u32) -> Vec<u32> {
    let mut prng = PrngState::feedback(seed).expect("nonzero seed");
    (0..n)
        .map(|_| face_of(prng.next_rand(SeedRegister(0)).expect("seeded"), sides))
        .collect()
}

fn uniformity_csv(sides: u8) -> String {
    let faces = feedback_faces(sides, 200_000, 1);
    tally(&faces, u32::from(sides)).expect("in range").to_csv()
}

fn c3_uniformity() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (sides, critical) in [(20u8, 43.82), (6u8, 20.52)] {
        let faces = feedback_faces(sides, 200_000, 1);
        let h = tally(&faces, u32::from(sides)).map_err(|e| e.to_string())?;
        let chi = chi_square(&h).map_err(|e| e.to_string())?;
        ensure!(chi.df == u32::from(sides) - 1, "df {}", chi.df);
        ensure!(
            chi.statistic < critical,
            "d{sides}: chi-square {:.3} >= {critical}",
            chi.statistic
        );
        notes.push(format!("d{sides} chi2={:.3}<{critical}", chi.statistic));
    }
    within(start.elapsed(), 5.0)?;
    Ok(notes.join(", "))
}

fn c4_modulo_bias() -> Outcome {
    let start = Instant::now();
    for sides in [2u8, 4, 6, 8, 10, 12, 20, 100] {
        let faces: Vec<u32> = (0..=u16::MAX)
            .map(|w| u32::from(w) % u32::from(sides) + 1)
            .collect();
        let h = tally(&faces, u32::from(sides)).map_err(|e| e.to_string())?;
        let report = modulo_bias(u64::from(sides), 16);
        let analytic: Vec<u64> = report.preimages.iter().map(|&c| c as u64).collect();
        ensure!(
            h.counts == analytic,
            "d{sides}: brute force {:?} != analytic {:?}",
            h.counts,
            analytic
        );
    }
    let d6 = modulo_bias(6, 32);
    ensure!(d6.remainder == 4, "d6 remainder {}", d6.remainder);
    ensure!(
        d6.preimages[..4].iter().all(|&c| c == 715_827_883)
            && d6.preimages[4..].iter().all(|&c| c == 715_827_882),
        "d6 preimages {:?}",
        d6.preimages
    );
    let d20 = modulo_bias(20, 32);
    ensure!(
        d20.remainder == 16 && d20.quotient == 214_748_364,
        "d20 r/q"
    );
    ensure!(
        d20.preimages[..16].iter().all(|&c| c == 214_748_365)
            && d20.preimages[16..].iter().all(|&c| c == 214_748_364),
        "d20 preimages {:?}",
        d20.preimages
    );
    within(start.elapsed(), 5.0)?;
    Ok("8 dice x 2^16 words exact; d6/d20 at 32 bits exact".into())
}

fn c5_tilt_debounce() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for window in 0u16..1024 {
        for sample in [false, true] {
            let before = TiltState {
                tiltlog: window,
                sumtilt: 0,
                upright: false,
            };
            let mut after = before;
            after.update(sample, TiltMode::Faithful);
            let expected = window.count_ones() >= 7;
            ensure!(
                after.upright == expected,
                "window {window:010b} sample {sample}"
            );
            ensure!(
                u32::from(after.sumtilt) == window.count_ones(),
                "sumtilt {window:010b}"
            );
            ensure!(
                after.tiltlog == ((window << 1) | u16::from(sample)) & 0x3FF,
                "shift {window:010b}"
            );
            checked += 1;
        }
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("{checked} window/sample pairs"))
}

fn c6_selection_fsm() -> Outcome {
    let mut s = SelectionState::default();
    ensure!(
        s.dselect == 0 && s.diceval == 2 && s.keepon,
        "reset state {s:?}"
    );
    let mut visited = Vec::new();
    for _ in 0..8 {
        s = selection_update(s, true, true, false);
        visited.push(s.diceval);
    }
    ensure!(
        visited == [4, 6, 8, 10, 12, 20, 100, 2],
        "visited {visited:?}"
    );
    ensure!(s.dselect == 0, "dselect {} after 8 presses", s.dselect);
    let down = selection_update(SelectionState::default(), true, false, true);
    ensure!(
        down.dselect == 7 && down.diceval == 100,
        "down from 0: {down:?}"
    );
    let both = selection_update(SelectionState::default(), true, true, true);
    ensure!(!both.keepon, "both buttons left keepon set");
    Ok("up x8 cycles 4..100,2; down wraps to d100; both clears keepon".into())
}

fn c7_uart() -> Outcome {
    let start = Instant::now();
    for byte in 0..=255u8 {
        let mut tx = UartTxState::new();
        let mut bits = vec![tx.step(true, byte).tx];
        while tx.fsm != TxFsm::Idle {
            bits.push(tx.step(false, 0).tx);
        }
        ensure!(
            bits.len() == 10,
            "byte {byte:#04x}: frame of {} periods",
            bits.len()
        );
        ensure!(
            bits == encode_frame(byte),
            "byte {byte:#04x}: frame mismatch"
        );
        let decoded = decode_stream(&bits);
        ensure!(
            decoded.bytes() == [byte] && decoded.diagnostics.is_empty(),
            "byte {byte:#04x} decoded as {decoded:?}"
        );
    }
    let mut line = vec![true; 4];
    let mut frame = encode_frame(0x16);
    frame[9] = false;
    line.extend(frame);
    line.extend([true; 4]);
    let decoded = decode_stream(&line);
    let framing = decoded
        .diagnostics
        .iter()
        .filter(|d| matches!(d, Diagnostic::Framing { .. }))
        .count();
    ensure!(
        framing == 1 && decoded.diagnostics.len() == 1,
        "diagnostics {:?}",
        decoded.diagnostics
    );
    within(start.elapsed(), 1.0)?;
    Ok("256 round trips, 10-period frames, 1 framing error on bad stop".into())
}

fn c8_timing() -> Outcome {
    let start = Instant::now();
    let mut s = Scheduler::new();
    let events = s.advance(12_000_000);
    let periods = |d: Domain| {
        events
            .iter()
            .filter(|e| e.domain == d && e.edge == Edge::Falling)
            .count()
    };
    ensure!(
        periods(Domain::Hz1000) == 1000,
        "HZ1000 {} periods",
        periods(Domain::Hz1000)
    );
    ensure!(
        periods(Domain::Hz500) == 500,
        "HZ500 {} periods",
        periods(Domain::Hz500)
    );
    ensure!(
        periods(Domain::Hz10) == 9,
        "HZ10 {} periods",
        periods(Domain::Hz10)
    );
    for d in Domain::ALL {
        let toggles = events.iter().filter(|e| e.domain == d).count() as u64;
        ensure!(
            toggles == 12_000_000 / d.half_period(),
            "{d}: {toggles} toggles"
        );
    }
    let oracle = cycle_stepping_ticks(1_000_000);
    let fast = Scheduler::new().advance(1_000_000);
    ensure!(
        fast == oracle,
        "event-driven and cycle-stepping ticks differ"
    );
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "HZ1000=1000 HZ500=500 HZ10=9 periods; {} ticks match oracle",
        oracle.len()
    ))
}

fn scenario_log() -> Result<(RunLog, common::ScenarioTimes), String> {
    let (events, times) = d20_scenario();
    let cfg = ReplayConfig::new(times.duration_us).with_prng(PrngMode::Feedback);
    let log = replay(&events, &cfg).map_err(|e| e.to_string())?;
    Ok((log, times))
}

fn level_at(changes: &[dice_sim::trace::LevelChange], t_us: u64) -> bool {
    changes
        .iter()
        .take_while(|c| c.t_us <= t_us)
        .last()
        .map(|c| c.level)
        .unwrap_or(false)
}

fn c9_end_to_end() -> Outcome {
    let (log, times) = scenario_log()?;
    ensure!(
        log.settled_rolls.len() == 1,
        "settled rolls {:?}",
        log.settled_rolls
    );
    let roll = log.settled_rolls[0];
    ensure!(roll.diceval == 20, "diceval {}", roll.diceval);
    ensure!((1..=20).contains(&roll.out), "out {}", roll.out);
    ensure!(
        roll.t_us > times.shake_end,
        "roll settled at {} before shake ended",
        roll.t_us
    );

    let final_state = log.final_state.ok_or("no final state")?;
    let shown = log.display_words.last().ok_or("no display words")?;
    let text = render_word(shown.word);
    ensure!(
        text == format!("{:>3} ", roll.out),
        "display `{text}` for roll {}",
        roll.out
    );
    ensure!(
        text.starts_with(' '),
        "display `{text}` lacks leading blank"
    );
    ensure!(
        final_state.device.bcd == shown.word,
        "final bcd differs from last logged word"
    );

    let held = final_state.device.roll.held;
    let expected_byte = payload_pack(held[1], held[2]);
    let last_byte = log.uart_bytes.last().ok_or("no UART bytes")?.byte;
    ensure!(
        last_byte == expected_byte,
        "last UART byte {last_byte:#04x} != {expected_byte:#04x}"
    );

    // colon lit (dp = 0) from shortly after the shake starts until it ends
    let fell = log
        .dp_edges
        .iter()
        .find(|c| c.t_us >= times.shake_start && !c.level)
        .ok_or("dp never fell during the shake")?;
    ensure!(
        fell.t_us < times.shake_start + 1_000_000,
        "dp fell late at {}",
        fell.t_us
    );
    for t in (fell.t_us..times.shake_end).step_by(10_000) {
        ensure!(!level_at(&log.dp_edges, t), "dp high at {t} during shake");
    }
    ensure!(level_at(&log.dp_edges, roll.t_us), "dp low when settled");
    ensure!(
        level_at(&log.dp_edges, times.duration_us),
        "dp low at end of run"
    );

    let edges: Vec<_> = log.onpin_edges.iter().skip(1).collect();
    ensure!(!edges.is_empty(), "onpin never toggled");
    for pair in edges.windows(2) {
        let gap = pair[1].t_us - pair[0].t_us;
        ensure!(gap == 5_000_200, "onpin interval {gap} us");
    }
    ensure!(
        edges
            .iter()
            .filter(|e| e.t_us < times.both_press_us)
            .count()
            >= 2,
        "expected at least two toggles before the both-button press"
    );
    let last = edges.last().unwrap();
    ensure!(!last.level, "onpin ends high");
    ensure!(
        last.t_us > times.both_press_us && last.t_us <= times.both_press_us + 5_000_200,
        "onpin forced low at {} (press at {})",
        last.t_us,
        times.both_press_us
    );
    ensure!(
        !final_state.device.power.onsig && !final_state.device.selection.keepon,
        "power state"
    );
    Ok(format!(
        "roll {} of d20 at {} us; display `{text}`; UART {last_byte:02X}; {} onpin edges",
        roll.out,
        roll.t_us,
        edges.len()
    ))
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for run in 0..2 {
        let (log, _) = scenario_log()?;
        let outputs = [
            ("log.csv", emit_log(&log, LogFormat::Csv)),
            ("log.jsonl", emit_log(&log, LogFormat::Jsonl)),
            ("uart.csv", emit_uart_log(&log)),
            ("hist_d20.csv", uniformity_csv(20)),
            ("hist_d6.csv", uniformity_csv(6)),
        ];
        let mut paths = Vec::new();
        for (name, text) in outputs {
            let path = dir.path().join(format!("run{run}_{name}"));
            std::fs::write(&path, text).map_err(|e| e.to_string())?;
            paths.push(path);
        }
        files.push(paths);
    }
    for (a, b) in files[0].iter().zip(&files[1]) {
        let x = std::fs::read(a).map_err(|e| e.to_string())?;
        let y = std::fs::read(b).map_err(|e| e.to_string())?;
        ensure!(x == y, "{} differs between runs", a.display());
    }
    Ok(format!(
        "{} output files byte-identical across reruns",
        files[0].len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 xorshift oracle equivalence", c1_xorshift_oracle),
        ("2 bijectivity and linearity", c2_bijectivity),
        (
            "3 uniformity d20/d6 (feedback, seed 1, N=200000)",
            c3_uniformity,
        ),
        ("4 modulo-bias exactness", c4_modulo_bias),
        ("5 tilt debounce (1024 windows x 2)", c5_tilt_debounce),
        ("6 selection FSM", c6_selection_fsm),
        ("7 UART framing", c7_uart),
        ("8 timing dividers", c8_timing),
        ("9 end-to-end d20 scenario", c9_end_to_end),
        ("10 determinism", c10_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
