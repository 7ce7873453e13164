//! Command-line front end.
//!
//! Exit codes: 0 success, 1 diagnostics with errors (or an unreadable or
//! invalid input file), 2 usage error, 3 a run ended with a non-Success
//! outcome.

use crate::compiler::{emit_dot, flatten};
use crate::diag::{has_errors, Diagnostic};
use crate::engine::{init_run, read_jsonl, summary, validate_trace, Limits};
use crate::model::{load, FsSources, Model, Profile};
use crate::world::load_world;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUN_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lightrocks", version, about = "Parse, validate, compile and run skill-based robot programs")]
struct Cli {
    /// Extra directories searched for modules and includes. `LR_PATH`
    /// (colon separated) is searched after these.
    #[arg(short = 'I', long = "path", global = true)]
    path: Vec<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse a file and print a summary of its components.
    Parse { file: PathBuf },
    /// Resolve and validate a program.
    Validate {
        file: PathBuf,
        #[arg(long, default_value = "standard")]
        profile: Profile,
    },
    /// Flatten a component tree into one self-contained definition.
    Compile {
        file: PathBuf,
        #[arg(long)]
        root: String,
        /// Write the flattened model here instead of standard output.
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
        /// Also write a Graphviz rendering.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Execute a component against the simulated rig.
    Run {
        file: PathBuf,
        #[arg(long)]
        root: String,
        #[arg(long)]
        world: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "max-ticks", default_value_t = Limits::default().max_ticks)]
        max_ticks: u64,
        #[arg(long, default_value_t = Limits::default().dt)]
        dt: f64,
        /// Write the JSONL trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a JSONL trace.
    Trace {
        file: PathBuf,
        /// Print per-instance entry counts and stop reasons.
        #[arg(long)]
        summary: bool,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn diags(&mut self, diags: &[Diagnostic]) {
        for d in diags {
            let _ = writeln!(self.err, "{d}");
        }
    }

    fn fail(&mut self, msg: impl std::fmt::Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        EXIT_DIAGNOSTICS
    }
}

fn search_path(file: &Path, extra: &[PathBuf]) -> Vec<PathBuf> {
    let mut dirs = vec![file.parent().map(Path::to_path_buf).unwrap_or_default()];
    dirs.extend(extra.iter().cloned());
    if let Ok(p) = std::env::var("LR_PATH") {
        dirs.extend(std::env::split_paths(&p));
    }
    dirs
}

fn load_checked(io: &mut Io, file: &Path, extra: &[PathBuf], profile: Profile) -> Result<Model, i32> {
    let (model, diags) = load(file, &search_path(file, extra), &FsSources, profile);
    io.diags(&diags);
    if has_errors(&diags) {
        Err(EXIT_DIAGNOSTICS)
    } else {
        Ok(model)
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { out, err };
    match dispatch(&mut io, cli) {
        Ok(code) | Err(code) => code,
    }
}

fn dispatch(io: &mut Io, cli: Cli) -> Result<i32, i32> {
    match cli.cmd {
        Cmd::Parse { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| io.fail(format!("{}: {e}", file.display())))?;
            let (sf, diags) = crate::dsl::parse(&text, &file);
            io.diags(&diags);
            for c in &sf.components {
                let mut counts = [0usize; 3];
                c.walk(&mut |d| {
                    if !std::ptr::eq(d, c) {
                        counts[if d.is_leaf() { 0 } else { 1 }] += 1;
                    }
                });
                counts[2] = c.transitions.len();
                let _ = writeln!(
                    io.out,
                    "{} {}: {} ports, {} children ({} inline leaves, {} inline composites), {} transitions",
                    c.level.keyword(),
                    c.name,
                    c.ports.len(),
                    c.children.len(),
                    counts[0],
                    counts[1],
                    counts[2]
                );
            }
            Ok(if has_errors(&diags) { EXIT_DIAGNOSTICS } else { EXIT_OK })
        }
        Cmd::Validate { file, profile } => {
            load_checked(io, &file, &cli.path, profile)?;
            Ok(EXIT_OK)
        }
        Cmd::Compile { file, root, out, dot } => {
            let model = load_checked(io, &file, &cli.path, Profile::Standard)?;
            let flat = flatten(&model, &root).map_err(|d| {
                io.diags(&d);
                EXIT_DIAGNOSTICS
            })?;
            let text = flat.to_text();
            match &out {
                Some(p) => std::fs::write(p, &text).map_err(|e| io.fail(format!("{}: {e}", p.display())))?,
                None if dot.is_none() => {
                    let _ = io.out.write_all(text.as_bytes());
                }
                None => {}
            }
            if let Some(p) = &dot {
                std::fs::write(p, emit_dot(&flat)).map_err(|e| io.fail(format!("{}: {e}", p.display())))?;
            }
            Ok(EXIT_OK)
        }
        Cmd::Run { file, root, world, seed, max_ticks, dt, trace } => {
            if !(dt > 0.0 && dt.is_finite()) {
                let _ = writeln!(io.err, "error: --dt must be a positive number");
                return Err(EXIT_USAGE);
            }
            let model = load_checked(io, &file, &cli.path, Profile::Standard)?;
            let wtext = std::fs::read_to_string(&world).map_err(|e| io.fail(format!("{}: {e}", world.display())))?;
            let w = load_world(&wtext).map_err(|e| io.fail(format!("{}: {e}", world.display())))?;
            let mut st = init_run(&model, &root, &w, seed, Limits { max_ticks, dt }).map_err(|e| io.fail(e))?;
            let outcome = match &trace {
                Some(p) => {
                    let f = std::fs::File::create(p).map_err(|e| io.fail(format!("{}: {e}", p.display())))?;
                    let mut w = std::io::BufWriter::new(f);
                    let r = st.run_streaming(&mut w);
                    w.flush().map_err(|e| io.fail(e))?;
                    r
                }
                None => st.run_streaming(std::io::sink()),
            }
            .map_err(|e| io.fail(e))?;
            let _ = writeln!(io.out, "{outcome}");
            if let Some(m) = &outcome.message {
                let _ = writeln!(io.err, "{m}");
            }
            Ok(if outcome.status == crate::engine::Status::Success { EXIT_OK } else { EXIT_RUN_FAILED })
        }
        Cmd::Trace { file, summary: want_summary } => {
            let text = std::fs::read_to_string(&file).map_err(|e| io.fail(format!("{}: {e}", file.display())))?;
            let events = read_jsonl(&text).map_err(|e| io.fail(format!("{}: {e}", file.display())))?;
            validate_trace(&events).map_err(|e| io.fail(format!("{}: {e}", file.display())))?;
            if want_summary {
                let _ = write!(io.out, "{}", summary(&events));
            }
            Ok(EXIT_OK)
        }
    }
}
