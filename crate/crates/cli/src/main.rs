//! `nhdss`: store files under super-node storage codes, repair lost shards
//! and reproduce the bandwidth and availability tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nhdss_core::availability::{sweep, sweep_csv};
use nhdss_core::bounds::{case_study_table, render_json, render_text};
use nhdss_core::store::{self, Store, StoreConfig};
use nhdss_core::{Error, NodeId, SchemeId};

const EXIT_DATA: u8 = 2;
const EXIT_CONFORMANCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "nhdss", version, about = "Super-node storage codes: encode, repair, restore, analyse")]
struct Cli {
    /// Seed for coefficient and projection searches.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a file into shards plus a manifest.
    Encode {
        file: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: SchemeId,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: Option<u32>,
        /// Symbols per block.
        #[arg(long)]
        block_symbols: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the original file from the shards present.
    Restore {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate lost shards; `--node 1,2` repairs two nodes.
    Repair {
        manifest: PathBuf,
        /// Node ids or labels (`s2`, `p1`, `super`), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        node: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Constraint, plan and MDS conformance report plus shard health.
    Check {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Availability sweep of the super-node layout against one block per node.
    Avail {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        chi: Vec<f64>,
    },
    /// Bandwidth comparison for a file of the given size.
    Bench {
        #[arg(long, default_value_t = 48)]
        file_symbols: u64,
        #[arg(long, default_value_t = 3)]
        k: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Also store such a file and meter real repairs.
        #[arg(long)]
        measure: bool,
    },
}

fn parse_scheme(s: &str) -> Result<SchemeId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Data(Error),
    Conformance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Conformance(msg)) => {
            eprintln!("conformance failure: {msg}");
            ExitCode::from(EXIT_CONFORMANCE)
        }
    }
}

fn resolve_node(store: &Store, name: &str) -> Result<NodeId, Error> {
    let layout = &store.instance.layout;
    if let Ok(id) = name.parse::<NodeId>() {
        layout.blocks(id)?;
        return Ok(id);
    }
    if name == "super" {
        return Ok(layout.super_node());
    }
    layout.by_label(name).ok_or_else(|| Error::InvalidParams(format!("unknown node '{name}'")))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Encode {
            file,
            scheme,
            k,
            q,
            block_symbols,
            out,
        } => {
            let config = StoreConfig {
                scheme,
                k,
                q,
                block_symbols,
                seed: cli.seed,
            };
            let m = store::store_file(&file, &config, &out)?;
            println!(
                "stored {} bytes as {} stripes of {} symbols over {} nodes (scheme {}, GF({}))",
                m.file_length,
                m.stripe_count,
                m.stripe_symbols(),
                m.h,
                m.scheme,
                m.q
            );
            println!("manifest: {}", out.join(store::MANIFEST_FILE).display());
        }
        Command::Restore { manifest, out } => {
            let n = store::restore_file(&manifest, &out)?;
            println!("restored {n} bytes to {}", out.display());
        }
        Command::Repair { manifest, node, format } => {
            let store = Store::open(&manifest)?;
            let ids = node
                .iter()
                .map(|n| resolve_node(&store, n.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            let report = store.repair(&ids)?;
            match format {
                Format::Json => println!("{}", to_json(&report)),
                Format::Text => {
                    let labels: Vec<&str> = ids.iter().map(|&i| store.instance.layout.label(i)).collect();
                    let method = report.method.map_or("none".to_string(), |m| format!("{m:?}").to_lowercase());
                    println!(
                        "repaired {} by {method} over {} stripes",
                        labels.join(", "),
                        report.stripes
                    );
                    println!(
                        "gamma = {} symbols, measured {} bytes, single-failure bound {}",
                        report.gamma, report.measured_bytes, report.bound
                    );
                    for (n, c) in &report.measured_per_node {
                        println!("  {} sent {c}", store.instance.layout.label(*n));
                    }
                }
            }
        }
        Command::Check { manifest, format } => {
            let store = Store::open(&manifest)?;
            let report = store.check();
            match format {
                Format::Json => println!("{}", to_json(&report)),
                Format::Text => {
                    print!("{}", report.constraints);
                    for (n, s) in &report.shards {
                        println!("  shard {}: {s:?}", store.instance.layout.label(*n));
                    }
                }
            }
            if !report.conforms() {
                return Err(Failure::Conformance("constraint report has failures".into()));
            }
        }
        Command::Avail { k, p, chi } => {
            let rows = sweep(k, p, &chi)?;
            print!("{}", sweep_csv(&rows));
        }
        Command::Bench {
            file_symbols,
            k,
            format,
            measure,
        } => {
            let rows = case_study_table(file_symbols, k)?;
            match format {
                Format::Text => print!("{}", render_text(&rows)),
                Format::Json => println!("{}", render_json(&rows)),
            }
            if measure {
                let measured = measure_repairs(file_symbols, k as usize, cli.seed)?;
                match format {
                    Format::Text => {
                        println!();
                        println!("measured repairs ({file_symbols}-symbol file)");
                        for m in &measured {
                            println!("{:<10} {:<8} gamma={} measured={}", m.scheme, m.failure, m.gamma, m.measured);
                        }
                    }
                    Format::Json => println!("{}", to_json(&measured)),
                }
            }
        }
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct Measured {
    scheme: String,
    failure: String,
    gamma: u64,
    measured: u64,
}

/// Stores a file of `symbols` digits under each scheme that supports `k`
/// and meters one- and two-node repairs.
fn measure_repairs(symbols: u64, k: usize, seed: u64) -> Result<Vec<Measured>, Error> {
    let tmp = std::env::temp_dir().join(format!("nhdss-bench-{}", std::process::id()));
    let mut out = Vec::new();
    for scheme in [SchemeId::A, SchemeId::B, SchemeId::C] {
        let config = StoreConfig {
            seed,
            ..StoreConfig::new(scheme, k)
        };
        let Ok((q, _)) = config.resolve() else { continue };
        let d = store::digits_per_byte(q) as u64;
        if !symbols.is_multiple_of(d) {
            continue;
        }
        let bytes: Vec<u8> = (0..symbols / d).map(|i| (i * 37 % 251) as u8).collect();
        let dir = tmp.join(scheme.to_string());
        store::store_bytes(&bytes, &config, &dir)?;
        let st = Store::open(&dir.join(store::MANIFEST_FILE))?;
        let mut patterns = vec![vec![1]];
        if scheme != SchemeId::B {
            patterns.push(vec![1, 2]);
        }
        for p in patterns {
            let r = st.repair(&p)?;
            out.push(Measured {
                scheme: format!("Scheme {scheme}"),
                failure: format!("{}-node", p.len()),
                gamma: r.gamma,
                measured: r.measured_bytes,
            });
        }
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok(out)
}
