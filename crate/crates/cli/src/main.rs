use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use heartflock::analysis::{normalize_confusion, read_counts_csv, write_rates_csv};
use heartflock::physio::{assess_offline, read_rr_csv, AssessmentRecord, WindowConfig};
use heartflock::render::{encode_ppm, render_frame, Aesthetics, Background, Palette, TrailBuffer};
use heartflock::service::server::{self, ServerConfig};
use heartflock::service::{read_log, replay, SessionConfig, SessionOverrides};
use heartflock::trajectory::{read_records, write_record, TrajectoryRecord};
use heartflock::{config_for, init_flock, Bounds, Emotion};

/// Exit status 2: the command was well-formed but its data was not.
struct DataError(String);

impl<E: std::fmt::Display> From<E> for DataError {
    fn from(e: E) -> Self {
        DataError(e.to_string())
    }
}

type Outcome = Result<(), DataError>;

#[derive(Parser, Debug)]
#[command(
    name = "heartflock",
    version,
    about = "Emotion-driven boids: simulate, render, classify and stream"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a flock under one emotion and write trajectory records.
    Simulate {
        #[arg(long, default_value = "joy", value_parser = parse_emotion)]
        emotion: Emotion,
        /// Records to write; the first is the initial state.
        #[arg(long, default_value_t = 100)]
        frames: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Flock size.
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// World size, WIDTHxHEIGHT.
        #[arg(long, default_value = "800x600", value_parser = parse_bounds)]
        bounds: (f64, f64),
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw trajectory records as PPM frames.
    Render {
        #[arg(long)]
        traj: PathBuf,
        /// Trail points kept per boid, 0-100; 100 keeps the whole path.
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u8).range(0..=100))]
        stroke_length: u8,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        stroke_width: u32,
        #[arg(long, default_value = "warm", value_parser = parse_palette)]
        palette: Palette,
        #[arg(long, default_value = "dark", value_parser = parse_background)]
        bg: Background,
        /// Image size, WIDTHxHEIGHT.
        #[arg(long, default_value = "800x600", value_parser = parse_size)]
        size: (u32, u32),
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Assess emotions from RR intervals (CSV: person_id,timestamp_ms,rr_ms).
    Classify {
        #[arg(long)]
        rr: PathBuf,
        /// Window length in seconds.
        #[arg(long, default_value_t = 60.0, value_parser = positive)]
        window: f64,
        /// Window hop in seconds.
        #[arg(long, default_value_t = 5.0, value_parser = positive)]
        hop: f64,
        /// NDJSON output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Host a live session over TCP (newline-delimited JSON).
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        #[arg(long, default_value_t = 30.0, value_parser = positive)]
        tick_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "joy", value_parser = parse_emotion)]
        emotion: Emotion,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Log inbound messages here for `replay`.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Re-run a recorded session and print its outbound stream.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Minimum ticks to run; the log may extend this.
        #[arg(long, default_value_t = 0)]
        ticks: u64,
        #[arg(long, default_value_t = 30.0, value_parser = positive)]
        tick_rate: f64,
        #[arg(long, default_value = "joy", value_parser = parse_emotion)]
        emotion: Emotion,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Outbound lines go here; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Column-normalize an 8x8 emotion count table.
    Normalize {
        #[arg(long)]
        input: PathBuf,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_emotion(s: &str) -> Result<Emotion, String> {
    heartflock::parse_emotion(s).map_err(|e| e.to_string())
}

fn parse_palette(s: &str) -> Result<Palette, String> {
    s.parse().map_err(|e: heartflock::render::RenderError| e.to_string())
}

fn parse_background(s: &str) -> Result<Background, String> {
    s.parse().map_err(|e: heartflock::render::RenderError| e.to_string())
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("bad dimension {v:?}"));
    Ok((parse(w)?, parse(h)?))
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = parse_pair::<f64>(s)?;
    Bounds::new(w, h).map_err(|e| e.to_string())?;
    Ok((w, h))
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = parse_pair::<u32>(s)?;
    if w == 0 || h == 0 {
        return Err("image size must be positive".into());
    }
    Ok((w, h))
}

fn profile_table() -> String {
    let mut t = String::from(
        "Emotion profiles (S separation, M alignment, K cohesion, R perception, r separation range, V max speed):\n",
    );
    t.push_str("  emotion          S     M     K     R     r     V\n");
    for e in Emotion::ALL {
        let p = e.profile();
        t.push_str(&format!(
            "  {:<13} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5}\n",
            e.name(),
            p.separation,
            p.alignment,
            p.cohesion,
            p.perception_range,
            p.separation_range,
            p.max_speed
        ));
    }
    t
}

/// Writes to a file only once the whole payload exists, so failures leave
/// nothing behind.
fn emit(out: Option<&Path>, payload: &[u8]) -> Outcome {
    match out {
        Some(path) => fs::write(path, payload).map_err(|e| DataError(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(payload)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| DataError(format!("{}: {e}", path.display())))
}

fn simulate(emotion: Emotion, frames: u64, seed: u64, n: usize, bounds: (f64, f64), out: Option<&Path>) -> Outcome {
    let config = config_for(emotion, n);
    let mut state = init_flock(&config, Bounds::new(bounds.0, bounds.1)?, seed)?;
    let mut buf = Vec::new();
    for k in 0..frames {
        if k > 0 {
            state = state.step(&config, 1.0)?;
        }
        write_record(&mut buf, &TrajectoryRecord::from_state(&state))?;
    }
    emit(out, &buf)
}

fn render(traj: &Path, aesthetics: Aesthetics, size: (u32, u32), outdir: &Path) -> Outcome {
    aesthetics.validate()?;
    let records = read_records(open(traj)?)?;
    fs::create_dir_all(outdir).map_err(|e| DataError(format!("{}: {e}", outdir.display())))?;
    let Some(first) = records.first() else {
        return Ok(());
    };
    let mut trails = TrailBuffer::new(first.boids.len(), first.bounds());
    for (k, record) in records.iter().enumerate() {
        if record.bounds != first.bounds {
            return Err(DataError(format!(
                "record {}: world bounds changed mid-trajectory",
                k + 1
            )));
        }
        trails.push_positions(&record.positions(), &aesthetics)?;
        let frame = render_frame(&trails, &aesthetics, size.0, size.1)?;
        let path = outdir.join(format!("frame_{k:06}.ppm"));
        fs::write(&path, encode_ppm(&frame)).map_err(|e| DataError(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn seconds_to_ms(secs: f64) -> i64 {
    (secs * 1000.0).round() as i64
}

fn classify(rr: &Path, window: f64, hop: f64, out: Option<&Path>) -> Outcome {
    let config = WindowConfig {
        window_ms: seconds_to_ms(window),
        hop_ms: seconds_to_ms(hop),
        ..WindowConfig::default()
    };
    let rows = read_rr_csv(open(rr)?)?;
    let reports = assess_offline(rows, config)?;
    let mut buf = Vec::new();
    for r in &reports {
        serde_json::to_writer(&mut buf, &AssessmentRecord::from(r))?;
        buf.push(b'\n');
    }
    emit(out, &buf)
}

fn session_config(seed: u64, emotion: Emotion, n: u64, tick_rate: f64) -> Result<SessionConfig, DataError> {
    let overrides = SessionOverrides {
        flock_size: Some(n as usize),
        seed: Some(seed),
        tick_rate: Some(tick_rate),
        initial_emotion: Some(emotion.name().to_string()),
        ..SessionOverrides::default()
    };
    Ok(overrides.resolve()?)
}

fn serve(bind: SocketAddr, session: SessionConfig, record: Option<PathBuf>) -> Outcome {
    let handle = server::start(ServerConfig { bind, session, record })?;
    let flag = handle.shutdown_flag();
    ctrlc::set_handler(move || flag.store(true, std::sync::atomic::Ordering::SeqCst))?;
    eprintln!("listening on {}", handle.local_addr());
    let summary = handle.wait()?;
    eprintln!(
        "stopped after {} ticks, {} inbound messages",
        summary.ticks, summary.messages
    );
    Ok(())
}

fn replay_log(log: &Path, config: SessionConfig, ticks: u64, out: Option<&Path>) -> Outcome {
    let records = read_log(open(log)?)?;
    let result = replay(config, &records, ticks)?;
    let mut buf = Vec::new();
    for line in &result.lines {
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    emit(out, &buf)?;
    eprintln!("ticks {}", result.ticks);
    eprintln!("stream-sha256 {}", result.stream_hash);
    eprintln!("trajectory-sha256 {}", result.trajectory_hash);
    Ok(())
}

fn normalize(input: &Path, output: Option<&Path>) -> Outcome {
    let counts = read_counts_csv(open(input)?)?;
    let normalized = normalize_confusion(&counts)?;
    for e in &normalized.empty_columns {
        eprintln!("warning: column {e} has no counts; left as zeros");
    }
    let mut buf = Vec::new();
    write_rates_csv(&mut buf, &normalized.rates)?;
    emit(output, &buf)
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Simulate {
            emotion,
            frames,
            seed,
            n,
            bounds,
            out,
        } => simulate(emotion, frames, seed, n as usize, bounds, out.as_deref()),
        Command::Render {
            traj,
            stroke_length,
            stroke_width,
            palette,
            bg,
            size,
            outdir,
        } => {
            let aesthetics = Aesthetics {
                stroke_length,
                stroke_width,
                background: bg,
                palette,
            };
            render(&traj, aesthetics, size, &outdir)
        }
        Command::Classify { rr, window, hop, out } => classify(&rr, window, hop, out.as_deref()),
        Command::Serve {
            port,
            host,
            tick_rate,
            seed,
            emotion,
            n,
            record,
        } => serve(
            SocketAddr::new(host, port),
            session_config(seed, emotion, n, tick_rate)?,
            record,
        ),
        Command::Replay {
            log,
            seed,
            ticks,
            tick_rate,
            emotion,
            n,
            out,
        } => replay_log(
            &log,
            session_config(seed, emotion, n, tick_rate)?,
            ticks,
            out.as_deref(),
        ),
        Command::Normalize { input, output } => normalize(&input, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let table = profile_table();
    let command = Cli::command()
        .after_help(table.clone())
        .mut_subcommand("simulate", |c| c.after_help(table.clone()))
        .mut_subcommand("serve", |c| c.after_help(table.clone()));
    let cli = match command.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(DataError(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
