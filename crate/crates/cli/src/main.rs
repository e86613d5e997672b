//! `ttsynth`: synthesize place/transition nets from labelled nets, traces,
//! state graphs and runs.
//!
//! Exit codes: 0 success, 1 a check did not pass, 2 usage, parse or
//! validation error (no output written), 3 region enumeration truncated
//! (output still written).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ttsynth_core::convert::{
    run_to_labelled_net, state_graph_to_labelled_net, trace_to_labelled_net,
};
use ttsynth_core::io::{
    export_dot, parse_pnml, parse_run, parse_state_graph, parse_traces, region_table_json,
    region_table_text, write_pnml, write_pnml_document, write_synthesis_pnml, PnmlDocument,
};
use ttsynth_core::regions::{enumerate_minimal_regions, Mode, RegionProblem};
use ttsynth_core::semantics::{is_enabled, Enablement};
use ttsynth_core::synthesis::synthesize;
use ttsynth_core::{LabelledNet, Specification};

#[derive(Parser)]
#[command(
    name = "ttsynth",
    version,
    about = "Petri net synthesis from labelled nets via token-trail regions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Synthesis,
    Discovery,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Synthesis => Mode::Synthesis,
            ModeArg::Discovery => Mode::Discovery,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct ProblemArgs {
    /// Largest token count per place in a region.
    #[arg(short, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Synthesis)]
    mode: ModeArg,
    /// Stop after this many regions.
    #[arg(long)]
    max_regions: Option<usize>,
    /// Input files: .pnml, .traces, .sg or .run. Together they form one specification.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a net from the inputs.
    Synth {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Print the minimal regions of the inputs.
    Regions {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Check that a model can simulate every net of the given specifications.
    Check {
        #[arg(long)]
        model: PathBuf,
        /// Largest token count tried per trail component.
        #[arg(long)]
        bound: Option<u64>,
        #[arg(required = true)]
        specs: Vec<PathBuf>,
    },
    /// Convert an input to PNML. Several traces give several numbered files.
    Convert {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// A labelled net read from a file, with its final place if one was marked.
struct Loaded {
    net: LabelledNet,
    final_place: Option<String>,
}

fn load(path: &Path) -> Result<Vec<Loaded>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or_default();
    let plain = |net| Loaded {
        net,
        final_place: None,
    };
    let nets = match ext {
        "pnml" => {
            let doc = parse_pnml(&text).with_context(|| path.display().to_string())?;
            for w in &doc.warnings {
                eprintln!("warning: {}: {w}", path.display());
            }
            vec![Loaded {
                net: doc.net,
                final_place: doc.final_place,
            }]
        }
        "traces" => parse_traces(&text)
            .and_then(|ts| {
                ts.iter()
                    .map(|t| Ok(plain(trace_to_labelled_net(t)?)))
                    .collect::<Result<Vec<_>, ttsynth_core::io::IoError>>()
            })
            .with_context(|| path.display().to_string())?,
        "sg" => {
            let sg = parse_state_graph(&text).with_context(|| path.display().to_string())?;
            vec![plain(state_graph_to_labelled_net(&sg)?)]
        }
        "run" => {
            let run = parse_run(&text).with_context(|| path.display().to_string())?;
            vec![plain(
                run_to_labelled_net(&run).with_context(|| path.display().to_string())?,
            )]
        }
        _ => bail!(
            "{}: unrecognized extension (expected .pnml, .traces, .sg or .run)",
            path.display()
        ),
    };
    Ok(nets)
}

fn specification(paths: &[PathBuf]) -> Result<Specification> {
    let mut loaded = Vec::new();
    for p in paths {
        loaded.extend(load(p)?);
    }
    if loaded.is_empty() {
        bail!("empty specification: the inputs contain no nets");
    }
    // Remember final places by index, since ingestion may rename places.
    let finals: Vec<Option<usize>> = loaded
        .iter()
        .map(|l| {
            l.final_place
                .as_ref()
                .and_then(|p| l.net.net().place_idx(p))
        })
        .collect();
    let mut spec = Specification::new(loaded.into_iter().map(|l| l.net).collect())?;
    for (i, idx) in finals.into_iter().enumerate() {
        if let Some(idx) = idx {
            let id = spec.nets()[i].net().places()[idx].clone();
            spec.set_final_place(i, id)?;
        }
    }
    Ok(spec)
}

fn problem(args: &ProblemArgs) -> Result<RegionProblem> {
    let mut p =
        RegionProblem::new(specification(&args.inputs)?, args.k).with_mode(args.mode.into());
    p.max_regions = args.max_regions;
    Ok(p)
}

/// Writes through a temporary file in the target directory, so a failed run
/// never leaves a partial artifact.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path)
        .map_err(|e| anyhow!("writing {}: {}", path.display(), e.error))?;
    Ok(())
}

fn numbered(path: &Path, i: usize) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}-{i}.{ext}"),
        None => format!("{stem}-{i}"),
    };
    path.with_file_name(name)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Synth {
            problem: args,
            out,
            dot,
        } => {
            let result = synthesize(&problem(&args)?)?;
            let pnml = write_synthesis_pnml(&result);
            let dot_text = dot
                .as_ref()
                .map(|_| export_dot(&LabelledNet::identity(result.net.clone())));
            write_atomic(&out, &pnml)?;
            if let (Some(path), Some(text)) = (dot, dot_text) {
                write_atomic(&path, &text)?;
            }
            eprintln!(
                "regions: {}, places: {}",
                result.regions_found,
                result.places.len()
            );
            if result.truncated {
                eprintln!("warning: region enumeration stopped at the --max-regions cap");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Regions {
            problem: args,
            format,
        } => {
            let p = problem(&args)?;
            let found = enumerate_minimal_regions(&p)?;
            let places = p.spec.places();
            let table = match format {
                Format::Text => region_table_text(&places, &found.regions),
                Format::Json => region_table_json(&places, &found.regions, found.truncated),
            };
            print!("{table}");
            if found.truncated {
                eprintln!("warning: region enumeration stopped at the --max-regions cap");
                return Ok(3);
            }
            Ok(0)
        }
        Command::Check {
            model,
            bound,
            specs,
        } => {
            let model_net = load(&model)?
                .pop()
                .filter(|_| model.extension().is_some_and(|e| e == "pnml"))
                .ok_or_else(|| anyhow!("{}: the model must be a .pnml file", model.display()))?;
            let model_net = model_net
                .net
                .to_model()
                .with_context(|| model.display().to_string())?;
            let spec = specification(&specs)?;
            let mut all_enabled = true;
            for (i, net) in spec.nets().iter().enumerate() {
                match is_enabled(&model_net, net, bound)? {
                    Enablement::Enabled(trails) => {
                        for (place, _) in trails {
                            println!("net {}: place {place}: token trail found", i + 1);
                        }
                    }
                    Enablement::NotShownWithinBound { place } => {
                        all_enabled = false;
                        println!("net {}: place {place}: no token trail within bound", i + 1);
                    }
                }
            }
            Ok(if all_enabled { 0 } else { 1 })
        }
        Command::Convert { input, out } => {
            let loaded = load(&input)?;
            let texts: Vec<String> = loaded
                .iter()
                .map(|l| match &l.final_place {
                    Some(f) => write_pnml_document(&PnmlDocument {
                        net: l.net.clone(),
                        final_place: Some(f.clone()),
                        warnings: vec![],
                    }),
                    None => write_pnml(&l.net),
                })
                .collect();
            match texts.as_slice() {
                [] => bail!("{}: nothing to convert", input.display()),
                [only] => write_atomic(&out, only)?,
                many => {
                    for (i, text) in many.iter().enumerate() {
                        write_atomic(&numbered(&out, i + 1), text)?;
                    }
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
