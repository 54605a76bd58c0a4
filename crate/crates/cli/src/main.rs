use std::fs;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pattern_forge_core::{
    CodePattern, PatternFile, PatternId, Session, TargetKind, VoteDirection, LINT_MIN_SUPPORT,
};

#[derive(Parser)]
#[command(name = "pattern-forge", version, about = "Learn, inspect and apply HTML code patterns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on FILE and print the learned patterns of every kind.
    Learn {
        file: PathBuf,
        /// Write one CSV training table per kind into this directory.
        #[arg(long)]
        tables: Option<PathBuf>,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print completions for the cursor at LINE:COL (1-based).
    Complete {
        file: PathBuf,
        #[arg(long)]
        line: usize,
        #[arg(long)]
        col: usize,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Report pattern violations. Exits with 1 when there are any.
    Lint {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        patterns: Option<PathBuf>,
        /// Ignore learned patterns seen fewer times than this.
        #[arg(long, default_value_t = LINT_MIN_SUPPORT)]
        min_support: usize,
    },
    /// Print the pattern tables of one kind.
    Patterns {
        file: PathBuf,
        #[arg(long)]
        kind: TargetKind,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Apply votes to patterns learned from FILE and write the pattern file.
    Export {
        file: PathBuf,
        out: PathBuf,
        /// Upvote these pattern ids first.
        #[arg(long, value_delimiter = ',')]
        up: Vec<String>,
        /// Downvote these pattern ids first.
        #[arg(long, value_delimiter = ',')]
        down: Vec<String>,
        /// Start from this pattern file.
        #[arg(long)]
        patterns: Option<PathBuf>,
    },
    /// Check a pattern file against FILE and show how each pattern fares there.
    Import { file: PathBuf, patterns_file: PathBuf },
    /// Run the HTTP/JSON session service.
    Serve {
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
}

type CliResult = Result<ExitCode, String>;

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn open(file: &Path, patterns: Option<&Path>) -> Result<Session, String> {
    let mut session = Session::new(read(file)?);
    if let Some(p) = patterns {
        let pf = PatternFile::from_json(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?;
        session.import(&pf).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(session)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn pattern_line(p: &CodePattern) -> String {
    format!(
        "{} {:<11} support={} confidence={:.2}  {}",
        p.id,
        format!("{:?}", p.state).to_lowercase(),
        p.support,
        p.confidence,
        p.rule()
    )
}

fn learn(file: &Path, tables: Option<&Path>, patterns: Option<&Path>, json: bool) -> CliResult {
    let mut s = open(file, patterns)?;
    if let Some(dir) = tables {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        for kind in TargetKind::ALL {
            let path = dir.join(format!("{kind}.csv"));
            fs::write(&path, s.table(kind).to_csv()).map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    let listings: Vec<_> = TargetKind::ALL.into_iter().map(|k| s.patterns(k)).collect();
    if json {
        println!("{}", to_json(&listings));
        return Ok(ExitCode::SUCCESS);
    }
    for listing in listings {
        println!("# {}", listing.kind);
        for p in listing
            .prioritized
            .iter()
            .chain(listing.standard.iter().flat_map(|g| &g.members))
            .chain(&listing.blacklisted)
        {
            println!("{}", pattern_line(p));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn complete(file: &Path, line: usize, col: usize, patterns: Option<&Path>, json: bool) -> CliResult {
    let mut s = open(file, patterns)?;
    let list = s.completions(line, col).map_err(|e| e.to_string())?;
    if json {
        println!("{}", to_json(&list));
        return Ok(ExitCode::SUCCESS);
    }
    match list.target_kind {
        None => println!("no completion at {line}:{col}"),
        Some(kind) => println!("{kind} completions for {:?}", list.typed_prefix),
    }
    for item in &list.items {
        let origin = format!("{:?}", item.origin).to_lowercase();
        println!("  {:<24} {:.2} {origin}", item.label, item.confidence);
    }
    if let Some(p) = &list.current_pattern {
        println!("current pattern: {} {}", p.id, p.rule());
    }
    Ok(ExitCode::SUCCESS)
}

fn lint(file: &Path, json: bool, patterns: Option<&Path>, min_support: usize) -> CliResult {
    let mut s = open(file, patterns)?;
    let sites = s.lint(min_support);
    if json {
        println!("{}", to_json(&sites));
    } else {
        for site in &sites {
            println!("{site}");
        }
    }
    Ok(if sites.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn patterns(file: &Path, kind: TargetKind, patterns: Option<&Path>, json: bool) -> CliResult {
    let mut s = open(file, patterns)?;
    let listing = s.patterns(kind);
    if json {
        println!("{}", to_json(&listing));
        return Ok(ExitCode::SUCCESS);
    }
    println!("prioritized:");
    for p in &listing.prioritized {
        println!("  {}", pattern_line(p));
    }
    println!("standard:");
    for group in &listing.standard {
        println!("  {}", pattern_line(group.primary()));
        for alt in group.alternatives() {
            println!("    {}", pattern_line(alt));
        }
    }
    println!("blacklisted:");
    for p in &listing.blacklisted {
        println!("  {}", pattern_line(p));
    }
    Ok(ExitCode::SUCCESS)
}

fn export(file: &Path, out: &Path, up: &[String], down: &[String], patterns: Option<&Path>) -> CliResult {
    let mut s = open(file, patterns)?;
    s.learn();
    let votes = up
        .iter()
        .map(|id| (id, VoteDirection::Up))
        .chain(down.iter().map(|id| (id, VoteDirection::Down)));
    for (id, direction) in votes {
        let state = s
            .vote(&PatternId::from(id.as_str()), direction)
            .map_err(|e| e.to_string())?;
        eprintln!("{id}: {}", format!("{state:?}").to_lowercase());
    }
    let file = s.export();
    fs::write(out, file.to_json() + "\n").map_err(|e| format!("{}: {e}", out.display()))?;
    eprintln!(
        "wrote {} prioritized and {} blacklisted patterns to {}",
        file.prioritized.len(),
        file.blacklisted.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn import(file: &Path, patterns_file: &Path) -> CliResult {
    let mut s = open(file, Some(patterns_file))?;
    s.learn();
    for kind in TargetKind::ALL {
        let listing = s.patterns(kind);
        for p in listing.prioritized.iter().chain(&listing.blacklisted) {
            println!("{}", pattern_line(p));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve(host: IpAddr, port: u16) -> CliResult {
    let addr = SocketAddr::new(host, port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    eprintln!("listening on http://{addr}");
    runtime
        .block_on(pattern_forge_server::serve(addr))
        .map_err(|e| format!("{addr}: {e}"))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Learn { file, tables, patterns, json } => learn(file, tables.as_deref(), patterns.as_deref(), *json),
        Command::Complete { file, line, col, patterns, json } => complete(file, *line, *col, patterns.as_deref(), *json),
        Command::Lint { file, json, patterns, min_support } => lint(file, *json, patterns.as_deref(), *min_support),
        Command::Patterns { file, kind, patterns: p, json } => patterns(file, *kind, p.as_deref(), *json),
        Command::Export { file, out, up, down, patterns } => export(file, out, up, down, patterns.as_deref()),
        Command::Import { file, patterns_file } => import(file, patterns_file),
        Command::Serve { port, host } => serve(*host, *port),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
