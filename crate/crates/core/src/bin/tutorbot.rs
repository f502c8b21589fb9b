use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tutorbot::augment::{augment_corpus, parse_levels, read_manifest, SnrSpec};
use tutorbot::decoder::{AsrNode, Recognizer, RecognizerConfig, Source};
use tutorbot::dialogue::{Dialogue, DialogueNode, DialogueNodeConfig, KinectStub};
use tutorbot::evalkit::{build_report, load_logs, pair_sessions, read_gold_tsv, write_gold_tsv, Vocabulary, DEFAULT_TOLERANCE};
use tutorbot::gateway::{Gateway, GatewayConfig, DEFAULT_GATEWAY_PORT};
use tutorbot::grammar::{compile_grammar, parse_jsgf, GrammarLibrary, Lexicon};
use tutorbot::portnet::{Broker, BROKER_PORT_ENV, DEFAULT_BROKER_PORT};
use tutorbot::simulator::{generate_session, write_timeline, EosDelay, SessionConfig};
use tutorbot::dialogue::Script;

#[derive(Parser)]
#[command(name = "tutorbot", version, about = "Spoken tutoring interaction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct BrokerPort {
    /// Broker TCP port.
    #[arg(long, env = BROKER_PORT_ENV, default_value_t = DEFAULT_BROKER_PORT)]
    broker_port: u16,
}

impl BrokerPort {
    fn addr(self) -> String {
        format!("127.0.0.1:{}", self.broker_port)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the port broker.
    Broker {
        #[command(flatten)]
        port: BrokerPort,
    },
    /// Mix a noise recording into every WAV of a manifest at several SNRs.
    Augment {
        #[arg(long)]
        noise: PathBuf,
        /// Comma-separated SNR levels in dB.
        #[arg(long, default_value = "5,10,20")]
        levels: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        manifest: PathBuf,
    },
    /// Evaluation reports.
    Evalkit {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Run one closed-loop synthetic session and write its timeline, gold
    /// annotation, recognizer record and log.
    Simulate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per-word substitution probability.
        #[arg(long, default_value_t = 0.0)]
        confusion: f64,
        #[arg(long, default_value_t = 0.0)]
        disfluency: f64,
        /// End-of-speech message delay: `fixed:S` or `uniform:MIN,MAX`.
        #[arg(long, default_value = "uniform:0.3,0.7")]
        eos: String,
        /// Recognizer read-back in seconds.
        #[arg(long, default_value_t = 0.5)]
        readback: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a recorded session and print the results.
    Replay {
        record: PathBuf,
        /// Write a recognizer log into this directory.
        #[arg(long)]
        log_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        readback: f64,
    },
    /// Compile a JSGF grammar and print the FST in text form.
    CompileGrammar {
        grammar: PathBuf,
        /// Do not add the silence alternative.
        #[arg(long)]
        no_silence: bool,
        /// Check every word against this lexicon.
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Bridge the session topics to operator consoles over WebSocket.
    Gateway {
        #[command(flatten)]
        port: BrokerPort,
        #[arg(long, default_value_t = DEFAULT_GATEWAY_PORT)]
        gateway_port: u16,
    },
    /// Run the recognizer node.
    Asr {
        #[command(flatten)]
        port: BrokerPort,
        #[arg(long)]
        log_dir: Option<PathBuf>,
        /// Record every input for later replay.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Run the dialogue manager node with the stub motion tracker.
    Dialogue {
        #[command(flatten)]
        port: BrokerPort,
        /// Speed-up factor for speech and timers.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Score recognizer logs against gold transcriptions.
    Report {
        /// Gold TSV file, or a directory of them (one per session).
        #[arg(long)]
        gold: PathBuf,
        /// Directory of recognizer logs.
        #[arg(long)]
        logs: PathBuf,
        /// Boundary tolerance in seconds.
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Broker { port } => {
            let broker = Broker::start(&format!("0.0.0.0:{}", port.broker_port))?;
            eprintln!("broker listening on {}", broker.addr());
            broker.join();
        }
        Command::Augment {
            noise,
            levels,
            seed,
            out,
            manifest,
        } => {
            let spec = SnrSpec {
                levels: parse_levels(&levels)?,
                seed,
            };
            let inputs = read_manifest(&manifest)?;
            let report = augment_corpus(&inputs, &noise, &spec, &out)?;
            println!("wrote {} files to {}", report.outputs.len(), out.display());
            for (path, e) in &report.errors {
                eprintln!("skipped {}: {e}", path.display());
            }
            if !report.errors.is_empty() {
                std::process::exit(1);
            }
        }
        Command::Evalkit {
            command:
                EvalCommand::Report {
                    gold,
                    logs,
                    tolerance,
                    json,
                },
        } => evalkit_report(&gold, &logs, tolerance, json.as_deref())?,
        Command::Simulate {
            seed,
            confusion,
            disfluency,
            eos,
            readback,
            out,
        } => {
            let mut config = SessionConfig::new(seed);
            config.confusion_prob = confusion;
            config.disfluency_prob = disfluency;
            config.eos_delay = parse_eos(&eos)?;
            config.recognizer.readback = readback;
            std::fs::create_dir_all(&out)?;
            let label = config.label.clone();
            let config = config
                .with_record(out.join(format!("{label}.record.jsonl")))
                .with_log_dir(out.join("logs"));
            let session = generate_session(&config)?;
            write_timeline(&out.join(format!("{label}.timeline.jsonl")), &session.timeline)?;
            write_gold_tsv(&out.join(format!("{label}.tsv")), &session.gold.rows())?;
            println!(
                "{label}: final state {}, {} answers, {} results, {:.1} s",
                session.final_state,
                session.gold.segments.len(),
                session.results.len(),
                session.duration
            );
        }
        Command::Replay {
            record,
            log_dir,
            readback,
        } => {
            let config = RecognizerConfig {
                readback,
                log_dir,
                ring_capacity: 3000,
                ..RecognizerConfig::default()
            };
            let mut rec = Recognizer::new(config, GrammarLibrary::builtin())?;
            rec.select_source(Source::File(record))?;
            for r in rec.pump()? {
                println!("{:8.2} {:8.2}  {:<8} {}", r.segment.start, r.segment.end, r.grammar_id, r.text());
            }
        }
        Command::CompileGrammar {
            grammar,
            no_silence,
            lexicon,
        } => {
            let text = std::fs::read_to_string(&grammar).with_context(|| grammar.display().to_string())?;
            let mut fst = compile_grammar(&parse_jsgf(&text)?, !no_silence)?;
            if let Some(path) = lexicon {
                let lex = Lexicon::parse(&std::fs::read_to_string(&path)?)?;
                for (_, word) in fst.symbols().words() {
                    if word != tutorbot::SILENCE {
                        lex.lookup(word)?;
                    }
                }
                fst = fst.with_lexicon(&lex);
            }
            print!("{}", fst.to_text());
        }
        Command::Gateway { port, gateway_port } => {
            let mut config = GatewayConfig::new(port.addr());
            config.bind = format!("0.0.0.0:{gateway_port}");
            let gateway = Gateway::start(&config, GrammarLibrary::builtin())?;
            eprintln!("gateway listening on {}", gateway.addr());
            gateway.join();
        }
        Command::Asr { port, log_dir, record } => {
            let config = RecognizerConfig {
                log_dir,
                record_path: record,
                ..RecognizerConfig::default()
            };
            let rec = Recognizer::new(config, GrammarLibrary::builtin())?;
            AsrNode::connect(&port.addr(), rec)?.run(&AtomicBool::new(false))?;
        }
        Command::Dialogue { port, time_scale, seed } => {
            let mut config = DialogueNodeConfig::new(port.addr());
            config.time_scale = time_scale;
            let mut node = DialogueNode::connect(config, Dialogue::builtin(), KinectStub::new(seed))?;
            let end = node.run(&AtomicBool::new(false))?;
            println!("interaction ended in {end}");
        }
    }
    Ok(())
}

fn parse_eos(text: &str) -> Result<EosDelay> {
    let num = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad number '{s}'"));
    if let Some(s) = text.strip_prefix("fixed:") {
        return Ok(EosDelay::fixed(num(s)?));
    }
    if let Some((a, b)) = text.strip_prefix("uniform:").and_then(|r| r.split_once(',')) {
        return Ok(EosDelay::uniform(num(a)?, num(b)?));
    }
    bail!("expected fixed:S or uniform:MIN,MAX, got '{text}'")
}

fn evalkit_report(gold: &Path, logs: &Path, tolerance: f64, json: Option<&Path>) -> Result<()> {
    let files: Vec<PathBuf> = if gold.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(gold)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        v.sort();
        v
    } else {
        vec![gold.to_path_buf()]
    };
    if files.is_empty() {
        bail!("no gold files in {}", gold.display());
    }
    let logged = load_logs(logs)?;
    let mut sessions = Vec::new();
    for f in &files {
        let label = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        sessions.push(pair_sessions(&label, &read_gold_tsv(f)?, &logged));
    }
    let report = build_report(&sessions, &Vocabulary::from_script(&Script::builtin()), tolerance)?;
    print!("{}", report.to_table());
    if let Some(path) = json {
        std::fs::write(path, report.to_json())?;
    }
    Ok(())
}
