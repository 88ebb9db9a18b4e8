use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use quanty_hall::adversary::{threshold_p, AttackKind, AttackPolicy, PairQubit};
use quanty_hall::bell::protocol_max;
use quanty_hall::figures::{sweep, write_csv};
use quanty_hall::session::{
    key_hex, run_session, write_summary, write_transcript, BellMode, SessionConfig, SessionOutput,
    SessionSummary,
};
use quanty_hall::verify::{run_checks_with, BellOperators, VerifyOptions};
use quanty_hall::{Error, Protocol};

/// Quanty-Hall key distribution simulator.
#[derive(Parser)]
#[command(name = "quanty-hall", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// 16-round unattacked qutrit session.
    Demo {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Transcript file (JSON lines).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a session with an optional eavesdropper.
    Session(SessionArgs),
    /// Bell value against attack probability as CSV.
    Sweep {
        #[arg(long, value_enum, default_value_t = ProtocolArg::Qutrit)]
        protocol: ProtocolArg,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 1.0)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        /// CSV file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every published constant.
    Verify {
        /// Rounds in the statistical session check.
        #[arg(long, default_value_t = 100_000)]
        rounds: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Write both figure CSVs into a directory.
    Figures {
        #[arg(long, default_value = "figures")]
        dir: PathBuf,
        #[arg(long, default_value_t = 101)]
        steps: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Qutrit,
    Qubit,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Qutrit => Protocol::Qutrit,
            ProtocolArg::Qubit => Protocol::Qubit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    None,
    IrFirst,
    IrSecond,
    DoubleIr,
    SingleQubit,
}

#[derive(Clone, Copy, ValueEnum)]
enum BellArg {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum QubitArg {
    A0,
    A1,
}

impl From<QubitArg> for PairQubit {
    fn from(q: QubitArg) -> Self {
        match q {
            QubitArg::A0 => PairQubit::A0,
            QubitArg::A1 => PairQubit::A1,
        }
    }
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long, value_enum, default_value_t = ProtocolArg::Qutrit)]
    protocol: ProtocolArg,
    #[arg(long, default_value_t = 1000)]
    rounds: usize,
    /// Security threshold; 2.5 is an arbitrary hardened default above the bound of 2.
    #[arg(long, default_value_t = 2.5)]
    chi: f64,
    #[arg(long, value_enum, default_value_t = AttackArg::None)]
    attack: AttackArg,
    /// Per-round attack probability.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Per-round channel dephasing probability.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// First qubit Eve reads in a single-qubit attack.
    #[arg(long, value_enum, default_value_t = QubitArg::A0)]
    first: QubitArg,
    /// Second qubit Eve reads in a single-qubit attack.
    #[arg(long, value_enum, default_value_t = QubitArg::A1)]
    second: QubitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BellArg::Exact)]
    bell: BellArg,
    /// Readings per round in sampled Bell mode.
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    /// Transcript file (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary document (JSON).
    #[arg(long)]
    summary: Option<PathBuf>,
}

impl SessionArgs {
    fn config(&self) -> Result<SessionConfig, Error> {
        let kind = match self.attack {
            AttackArg::None => AttackKind::None,
            AttackArg::IrFirst => AttackKind::IrFirstLeg,
            AttackArg::IrSecond => AttackKind::IrSecondLeg,
            AttackArg::DoubleIr => AttackKind::DoubleIr,
            AttackArg::SingleQubit => AttackKind::SingleQubitIr {
                first: self.first.into(),
                second: self.second.into(),
            },
        };
        let p = if matches!(kind, AttackKind::None) {
            0.0
        } else {
            self.p
        };
        let mode = match self.bell {
            BellArg::Exact => BellMode::Exact,
            BellArg::Sampled => BellMode::Sampled { shots: self.shots },
        };
        SessionConfig::new(self.protocol.into(), self.rounds, self.chi, self.seed)?
            .with_attack(AttackPolicy::new(kind, p, self.noise)?)?
            .with_bell_mode(mode)
    }
}

enum Failure {
    Usage(Error),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(path)?))
}

fn report(cfg: &SessionConfig, out: &SessionOutput) {
    let r = &out.result;
    println!("protocol        {}", cfg.protocol);
    println!("rounds          {}", cfg.n_rounds);
    println!("key (alice)     {}", key_hex(&r.key_alice));
    println!("key (bob)       {}", key_hex(&r.key_bob));
    println!("keys agree      {}", r.keys_agree());
    println!("mean bell       {:.12}", r.mean_bell);
    println!("quantum max     {:.12}", protocol_max(cfg.protocol));
    println!("chi             {}", cfg.chi.value());
    println!("verdict         {}", r.verdict);
    println!("eve knows       {:.4}", r.eve_known_fraction);
}

fn session(cfg: &SessionConfig, out: Option<&Path>, summary: Option<&Path>) -> Result<(), Failure> {
    let run = run_session(cfg)?;
    report(cfg, &run);
    if let Some(path) = out {
        let mut w = create(path)?;
        write_transcript(&mut w, &run.transcript)?;
        w.flush()?;
    }
    if let Some(path) = summary {
        let doc = SessionSummary {
            config: cfg.clone(),
            result: run.result,
        };
        let mut w = create(path)?;
        write_summary(&mut w, &doc)?;
        w.flush()?;
    }
    Ok(())
}

fn sweep_to<W: Write>(
    w: W,
    protocol: Protocol,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<(), Failure> {
    let rows = sweep(protocol, from, to, steps)?;
    write_csv(w, &rows)?;
    if let Some(c) = rows.iter().find(|r| r.crossing) {
        eprintln!("{protocol}: bell value reaches 2 at p = {:.12}", c.p);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Demo { seed, out } => {
            let cfg = SessionConfig::new(Protocol::Qutrit, 16, 2.5, seed)?;
            session(&cfg, out.as_deref(), None)
        }
        Command::Session(args) => {
            let cfg = args.config()?;
            session(&cfg, args.out.as_deref(), args.summary.as_deref())
        }
        Command::Sweep {
            protocol,
            from,
            to,
            steps,
            out,
        } => match out {
            Some(path) => {
                let mut w = create(&path)?;
                sweep_to(&mut w, protocol.into(), from, to, steps)?;
                Ok(w.flush()?)
            }
            None => sweep_to(io::stdout().lock(), protocol.into(), from, to, steps),
        },
        Command::Verify { rounds, seed } => {
            if rounds == 0 {
                return Err(Error::InvalidConfig("rounds must be at least 1".into()).into());
            }
            let opts = VerifyOptions {
                session_rounds: rounds,
                seed,
            };
            let report = run_checks_with(&BellOperators::standard(), &opts)?;
            println!("{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
        Command::Figures { dir, steps } => {
            std::fs::create_dir_all(&dir)?;
            for (protocol, name) in [
                (Protocol::Qutrit, "i3_vs_p.csv"),
                (Protocol::Qubit, "f6_vs_p.csv"),
            ] {
                let path = dir.join(name);
                let mut w = create(&path)?;
                sweep_to(&mut w, protocol, 0.0, 1.0, steps)?;
                w.flush()?;
                println!("wrote {}", path.display());
            }
            for protocol in [Protocol::Qutrit, Protocol::Qubit] {
                println!("{protocol} threshold p = {:.12}", threshold_p(protocol)?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
