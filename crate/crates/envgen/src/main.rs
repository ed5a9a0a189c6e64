//! Command-line front end: the extraction/simulation/generation pipeline
//! as subcommands over the documented file formats.
//!
//! Exit codes: 0 on success, 1 when violations were recorded, 2 on usage,
//! parse, or validation errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use envgen::config::ProjectConfig;
use envgen::emit;
use envgen::error::{Error, Result};
use envgen::facts::{load_facts, serialize_facts, FactRecord};
use envgen::graph::{build_graph, to_dot, CodeGraph};
use envgen::minic::parse_minic;
use envgen::oil::{parse_oil, OilConfig};
use envgen::property::Property;
use envgen::scenario::{
    batch, gen_end_level, gen_root_level, parse_bindings, parse_paths, parse_scenario, replay,
    serialize_scenario, BatchParams, BindingTable, Level, PathTable, ReplayContext,
};
use envgen::sim::ExternalConstraintTable;
use envgen::slicer::{parse_slice, serialize_slice, slice, ElfMode, SliceResult};

#[derive(Parser)]
#[command(
    name = "envgen",
    version,
    about = "Property-based environment generation and replay for OSEK/VDX-style kernels"
)]
struct Cli {
    /// Project configuration file (key=value).
    #[arg(long, global = true, default_value = "project.cfg")]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract facts from the configured kernel source (or re-serialize a
    /// facts file) into the line-oriented facts format.
    Ingest {
        /// Output facts file.
        #[arg(long)]
        out: PathBuf,
        /// Also dump the entity/relation graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Slice the kernel for a property: target variables, end-level and
    /// root-level functions, reduced target, internal constraints.
    Slice {
        /// Property expression, e.g. "tpl_fifo_rw[tpl_h_prio].size > 0".
        #[arg(long)]
        property: String,
        /// Override the configured end-level mode.
        #[arg(long)]
        mode: Option<String>,
        /// Output report file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random scenario.
    Gen {
        /// root | end
        #[arg(long)]
        level: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum (root) or exact (end) number of calls.
        #[arg(long, default_value_t = 100)]
        len: usize,
        /// Slice report (required for end-level generation).
        #[arg(long)]
        slice: Option<PathBuf>,
        /// Output scenario file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a scenario against the simulator and report violations.
    Replay {
        scenario: PathBuf,
        /// Override the activation counter width.
        #[arg(long)]
        counter_bits: Option<u32>,
        /// Write the execution trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the coverage curve CSV here.
        #[arg(long)]
        coverage: Option<PathBuf>,
        /// Stop at the first violation instead of continuing.
        #[arg(long)]
        halt: bool,
    },
    /// Generate and replay n scenarios, aggregating coverage and violations.
    Batch {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "root")]
        level: String,
        #[arg(long, default_value_t = 100)]
        len: usize,
        /// Slice report (required for end-level batches).
        #[arg(long)]
        slice: Option<PathBuf>,
        /// Directory for coverage.csv and summary.tsv.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Emit a verification artifact from a slice report or scenario.
    Emit {
        /// nondet | concrete | manifest
        #[arg(long)]
        style: String,
        #[arg(long)]
        slice: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Loop bound for the nondeterministic harness.
        #[arg(long, default_value_t = 2)]
        unwind: u32,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Workspace {
    project: ProjectConfig,
}

impl Workspace {
    fn load(path: &Path) -> Result<Workspace> {
        Ok(Workspace {
            project: ProjectConfig::load(path)?,
        })
    }

    fn facts(&self) -> Result<Vec<FactRecord>> {
        if let Some(kernel) = &self.project.kernel {
            let text = std::fs::read_to_string(kernel)?;
            return parse_minic(&text, &kernel.display().to_string());
        }
        if let Some(facts) = &self.project.facts {
            return load_facts(facts);
        }
        Err(Error::Config(
            "config names neither a kernel source nor a facts file".into(),
        ))
    }

    fn graph(&self) -> Result<CodeGraph> {
        build_graph(&self.facts()?)
    }

    fn oil(&self) -> Result<OilConfig> {
        let path = self
            .project
            .oil
            .as_ref()
            .ok_or_else(|| Error::Config("config names no oil file".into()))?;
        let text = std::fs::read_to_string(path)?;
        let mut cfg = parse_oil(&text, &path.display().to_string())?;
        if let Some(bits) = self.project.counter_bits {
            cfg.counter_bits = bits;
        }
        Ok(cfg)
    }

    fn bindings(&self) -> Result<BindingTable> {
        let path = self
            .project
            .bindings
            .as_ref()
            .ok_or_else(|| Error::Config("config names no binding table".into()))?;
        let text = std::fs::read_to_string(path)?;
        parse_bindings(&text, &path.display().to_string())
    }

    fn paths(&self) -> Result<Option<PathTable>> {
        match &self.project.coverage_paths {
            None => Ok(None),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Ok(Some(parse_paths(&text, &path.display().to_string())?))
            }
        }
    }

    fn mode(&self, flag: &Option<String>) -> Result<ElfMode> {
        match flag {
            Some(m) => ElfMode::parse(m),
            None => Ok(self.project.mode),
        }
    }
}

fn load_slice(path: &Option<PathBuf>) -> Result<SliceResult> {
    let path = path
        .as_ref()
        .ok_or_else(|| Error::Config("--slice <report> is required here".into()))?;
    let text = std::fs::read_to_string(path)?;
    parse_slice(&text, &path.display().to_string())
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let ws = Workspace::load(&cli.config)?;
    match cli.command {
        Command::Ingest { out, dot } => {
            let facts = ws.facts()?;
            std::fs::write(&out, serialize_facts(&facts))?;
            eprintln!("wrote {} fact(s) to {}", facts.len(), out.display());
            if let Some(dot_path) = dot {
                let g = build_graph(&facts)?;
                std::fs::write(&dot_path, to_dot(&g))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Slice {
            property,
            mode,
            out,
        } => {
            let g = ws.graph()?;
            let mode = ws.mode(&mode)?;
            let p = Property::new(property);
            let sr = slice(&p, &g, &ExternalConstraintTable::standard(), mode)?;
            write_or_print(&out, &serialize_slice(&sr))?;
            if !sr.elf.is_empty() && sr.rlf.is_empty() {
                eprintln!("warning: no API reaches any end-level function");
            }
            for w in &sr.unknown_identifiers {
                eprintln!("warning: unknown identifier {w}");
            }
            eprintln!(
                "{} end-level, {} root-level, {} abstract function(s), {} constraint(s)",
                sr.elf.len(),
                sr.rlf.len(),
                sr.abstract_fns.len(),
                sr.internal_constraints.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen {
            level,
            seed,
            len,
            slice,
            out,
        } => {
            let level = Level::parse(&level)?;
            let oil = ws.oil()?;
            let gen = match level {
                Level::Root => gen_root_level(&oil, seed, len)?,
                Level::End => {
                    let sr = load_slice(&slice)?;
                    let bindings = ws.bindings()?;
                    gen_end_level(
                        &sr.elf,
                        &sr.internal_constraints,
                        seed,
                        len,
                        &bindings,
                        &oil,
                    )?
                }
            };
            std::fs::write(&out, serialize_scenario(&gen.scenario))?;
            if gen.stuck {
                eprintln!("generation stuck: no candidate passed the preconditions");
            }
            if gen.deadlocked {
                eprintln!("generation deadlocked: no admissible candidate");
            }
            eprintln!(
                "wrote {} call(s), complete={}",
                gen.scenario.calls.len(),
                gen.scenario.complete
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay {
            scenario,
            counter_bits,
            trace,
            coverage,
            halt,
        } => {
            let text = std::fs::read_to_string(&scenario)?;
            let scn = parse_scenario(&text, &scenario.display().to_string())?;
            let oil = ws.oil()?;
            let graph = ws.graph().ok();
            let paths = ws.paths()?;
            let bindings = ws.bindings().ok();
            let mut ctx = ReplayContext::new(&oil);
            ctx.graph = graph.as_ref();
            ctx.paths = paths.as_ref();
            ctx.bindings = bindings.as_ref();
            ctx.counter_bits = counter_bits;
            ctx.halt_on_violation = halt;
            let result = replay(&scn, &ctx)?;
            if let Some(path) = trace {
                std::fs::write(path, result.final_state.export_trace())?;
            }
            if let Some(path) = coverage {
                std::fs::write(path, result.coverage.to_csv())?;
            }
            for (idx, v) in &result.precondition_violations {
                println!(
                    "call {idx}: precondition violation: {}: {} ({})",
                    v.api, v.reason, v.rule
                );
            }
            for (idx, v) in &result.monitor_violations {
                println!("call {idx}: monitor {}: {}", v.monitor, v.detail);
            }
            println!(
                "replayed {} call(s): {} precondition violation(s), {} monitor violation(s)",
                scn.calls.len(),
                result.precondition_violations.len(),
                result.monitor_violations.len()
            );
            Ok(if result.violation_count() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Batch {
            n,
            seed,
            level,
            len,
            slice,
            out_dir,
        } => {
            let level = Level::parse(&level)?;
            let oil = ws.oil()?;
            let graph = ws.graph().ok();
            let paths = ws.paths()?;
            let bindings = ws.bindings().ok();
            let sr = match level {
                Level::End => Some(load_slice(&slice)?),
                Level::Root => None,
            };
            let mut ctx = ReplayContext::new(&oil);
            ctx.graph = graph.as_ref();
            ctx.paths = paths.as_ref();
            ctx.bindings = bindings.as_ref();
            let params = BatchParams {
                level,
                seed0: seed,
                n,
                max_len: len,
            };
            let report = batch(&params, &ctx, sr.as_ref())?;
            std::fs::create_dir_all(&out_dir)?;
            std::fs::write(out_dir.join("coverage.csv"), report.coverage.to_csv())?;
            std::fs::write(out_dir.join("summary.tsv"), report.summary())?;
            // observational columns stay on stderr so report files are
            // byte-reproducible
            for r in &report.runs {
                eprintln!(
                    "seed {}\tcalls {}\twall {:?}\tpeak_mem {} kB",
                    r.seed, r.calls, r.wall, r.peak_mem_kb
                );
            }
            println!(
                "{} run(s), {} violation(s), final coverage {:.3}/{:.3}/{:.3}",
                report.runs.len(),
                report.total_violations(),
                report.coverage.function_ratio,
                report.coverage.edge_ratio,
                report.coverage.row_ratio
            );
            Ok(if report.total_violations() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Emit {
            style,
            slice,
            scenario,
            unwind,
            out,
        } => {
            let text = match style.as_str() {
                "nondet" => emit::emit_nondet_harness(&load_slice(&slice)?, unwind)?,
                "manifest" => emit::emit_abstraction_manifest(&load_slice(&slice)?),
                "concrete" => {
                    let path = scenario.ok_or_else(|| {
                        Error::Config("--scenario <file> is required for concrete".into())
                    })?;
                    let text = std::fs::read_to_string(&path)?;
                    emit::emit_concrete_harness(&parse_scenario(
                        &text,
                        &path.display().to_string(),
                    )?)
                }
                other => {
                    return Err(Error::Config(format!(
                        "style must be nondet, concrete, or manifest, got {other:?}"
                    )))
                }
            };
            write_or_print(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
