//! oddq: co-degree decompositions, Kikuchi matrices, even covers and
//! refutation certificates for q-query normal-form codes.

mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::builder::TypedValueParser;
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use oddq::certificate::{decomposition_certificate, even_cover_search, verify, Certificate, SearchMode};
use oddq::codes::{hadamard, odd_parity_code, random_matchings, NormalLDC};
use oddq::decompose::{certify_piece, decompose, Piece};
use oddq::goodindex::{all_good_indices, find_good_index, is_good_index, GammaSequence};
use oddq::hypergraph::Hypergraph;
use oddq::kikuchi::{build_signed, heavy_threshold, prune_heavy, DEFAULT_VERTEX_CAP};
use oddq::refute::{brute_force_val, build_xor, refute, resolve_ell, RefuteConfig, DEFAULT_BRUTE_FORCE_CAP};
use oddq::sparse::{spectral_norm, PowerIterationConfig};

#[derive(Parser)]
#[command(
    name = "oddq",
    version,
    about = "Spectral refutation toolkit for q-query normal-form codes",
    after_help = "EXAMPLES:\n\
                  \n  oddq corpus hadamard --k 3 --out h3.txt\
                  \n  oddq evencover --in h3.txt --mode kernel\
                  \n  oddq corpus random --n 16 --k 8 --q 3 --size 5 --seed 1 --out r.txt\
                  \n  oddq refute --in r.txt --b random --seed 7 --out cert.json\
                  \n  oddq verify --cert cert.json --in r.txt"
)]
struct Cli {
    /// Worker threads (defaults to available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Caps {
    /// Largest Kikuchi vertex count N = C(2n, ell) allowed
    #[arg(long, env = "ODDQ_KIKUCHI_CAP", default_value_t = DEFAULT_VERTEX_CAP, value_parser = positive_u128)]
    kikuchi_cap: u128,
    /// Largest n for brute-force evaluation of val
    #[arg(long, env = "ODDQ_BRUTE_FORCE_CAP", default_value_t = DEFAULT_BRUTE_FORCE_CAP, value_parser = clap::value_parser!(u64).range(1..=40).map(|v| v as usize))]
    brute_force_cap: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a hypergraph file
    Parse {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Co-degree profile, exponents and good indices
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        /// Write a histogram of t-set co-degrees as SVG
        #[arg(long)]
        hist: Option<PathBuf>,
        /// Subset size for the histogram
        #[arg(long, default_value_t = 1)]
        t: usize,
    },
    /// Evaluate the good-index conditions on an exponent sequence
    Goodindex {
        /// Comma-separated gamma_1,...,gamma_q
        #[arg(long, required_unless_present = "input")]
        gammas: Option<String>,
        #[arg(long, requires = "gammas")]
        q: Option<usize>,
        /// Take the exponents from a hypergraph instead
        #[arg(long = "in", conflicts_with = "gammas")]
        input: Option<PathBuf>,
    },
    /// Approximate strong regularity decomposition
    Decompose {
        #[arg(long = "in")]
        input: PathBuf,
        /// Drop pieces below eta |H| / |T| edges
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the signed Kikuchi matrix of one piece
    Kikuchi {
        #[arg(long = "in")]
        input: PathBuf,
        /// Piece as `decomposition.json#index`; defaults to the largest piece
        #[arg(long)]
        piece: Option<String>,
        /// Level, or `auto`
        #[arg(long, default_value = "auto")]
        ell: String,
        /// `random` or a file of +1/-1 signs
        #[arg(long, default_value = "random")]
        b: String,
        /// Comma-separated colors in L; random when omitted
        #[arg(long)]
        left: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Heavy-vertex constant W
        #[arg(long, default_value_t = 2.0)]
        w: f64,
        /// Coordinate dump of the matrix
        #[arg(long)]
        out: Option<PathBuf>,
        /// Histogram of unsigned vertex degrees as SVG
        #[arg(long)]
        hist: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Search for a weak rainbow even cover
    Evencover {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Kernel)]
        mode: Mode,
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Level for walk mode, or `auto`
        #[arg(long, default_value = "auto")]
        ell: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify an upper bound on val(Psi_b)
    Refute {
        #[arg(long = "in")]
        input: PathBuf,
        /// `random` or a file of +1/-1 signs
        #[arg(long, default_value = "random")]
        b: String,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        /// Level, or `auto`
        #[arg(long, default_value = "auto")]
        ell: String,
        /// Sampled splits per piece when exact enumeration is too large
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
        samples: usize,
        /// Enumerate every split when 2^colors is at most this
        #[arg(long, default_value_t = 256)]
        exact_split_limit: u64,
        #[arg(long, default_value_t = 2.0)]
        w: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-piece bound against exact value, as SVG
        #[arg(long)]
        scatter: Option<PathBuf>,
        #[command(flatten)]
        caps: Caps,
    },
    /// Generate corpus hypergraphs with a JSON sidecar
    Corpus {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Hypergraph text file; the sidecar goes next to it as .json
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-derive a certificate from its JSON and the hypergraph
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Kernel,
    Walk,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Hadamard,
    OddParity,
    Random,
}

/// Bad flag values; reported with status 2 like clap's own errors.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn positive_u128(s: &str) -> Result<u128, String> {
    match s.parse::<u128>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> Result<Hypergraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Hypergraph::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        // a closed pipe (`| head`) is not an error worth reporting
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Writes to `out` when given, otherwise prints.
fn emit<T: Serialize>(out: Option<&Path>, v: &T) -> Result<()> {
    match out {
        Some(p) => write_json(p, v),
        None => print_json(v),
    }
}

fn parse_ell(s: &str) -> Result<Option<usize>> {
    if s == "auto" {
        return Ok(None);
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(usage(format!("--ell must be `auto` or a positive integer, got `{s}`"))),
        Ok(v) => Ok(Some(v)),
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--eta must lie in (0, 1), got {eta}")))
    }
}

fn random_signs(k: usize, rng: &mut impl Rng) -> Vec<i8> {
    (0..k).map(|_| if rng.gen() { 1 } else { -1 }).collect()
}

/// `random` draws from `rng`; anything else is a file of signs, either a
/// JSON array or whitespace/comma separated.
fn load_signs(spec: &str, k: usize, rng: &mut impl Rng) -> Result<Vec<i8>> {
    if spec == "random" {
        return Ok(random_signs(k, rng));
    }
    let text = fs::read_to_string(spec).with_context(|| format!("reading signs from {spec}"))?;
    let b: Vec<i8> = match serde_json::from_str(&text) {
        Ok(b) => b,
        Err(_) => text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<i8>().with_context(|| format!("bad sign `{t}`")))
            .collect::<Result<_>>()?,
    };
    if b.len() != k || b.iter().any(|&s| s != 1 && s != -1) {
        bail!("{spec}: expected {k} signs in {{+1, -1}}, got {:?}", b);
    }
    Ok(b)
}

/// Resolves `file.json#i`, or the largest piece of a fresh decomposition.
fn select_piece(h: &Hypergraph, spec: Option<&str>) -> Result<(usize, Piece)> {
    let Some(spec) = spec else {
        let d = decompose(h)?;
        return d
            .pieces
            .into_iter()
            .enumerate()
            .rev()
            .max_by_key(|(_, p)| p.len())
            .context("decomposition has no pieces");
    };
    let (path, idx) = spec.rsplit_once('#').unwrap_or((spec, "0"));
    let idx: usize = idx.parse().map_err(|_| usage(format!("bad piece index in `{spec}`")))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let d = match Certificate::parse(&text)?.0 {
        Certificate::Decomposition(c) => c.decomposition,
        Certificate::Refutation(c) => c.decomposition,
        Certificate::EvenCover(_) => bail!("{path} holds an even-cover report, not a decomposition"),
    };
    if d.source_hash != h.content_hash() {
        bail!("{path} was computed for a different hypergraph");
    }
    let n = d.pieces.len();
    let piece = d.pieces.into_iter().nth(idx).ok_or_else(|| usage(format!("piece {idx} out of range ({n} pieces)")))?;
    Ok((idx, piece))
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Parse { input } => {
            let h = load(&input)?;
            let report = h.validate_matchings();
            print_json(&json!({
                "q": h.q(),
                "n": h.n(),
                "k": h.k(),
                "edges": h.len(),
                "colors_present": h.colors_present().len(),
                "content_hash": h.content_hash(),
                "valid_matchings": report.is_valid(),
                "matching_report": report,
            }))?;
        }
        Command::Profile { input, hist, t } => {
            let h = load(&input)?;
            if t == 0 || t > h.q() {
                return Err(usage(format!("--t must lie in 1..={}", h.q())));
            }
            let profile = h.co_degree_profile();
            let gamma = GammaSequence::from_profile(&profile, h.n()).ok();
            let selected = gamma.as_ref().map(find_good_index);
            let good = gamma.as_ref().map(all_good_indices);
            print_json(&json!({
                "q": h.q(),
                "n": h.n(),
                "edges": h.len(),
                "profile": profile,
                "gamma": gamma.as_ref().map(|g| g.values().to_vec()),
                "selected_index": selected,
                "good_indices": good,
            }))?;
            if let Some(path) = hist {
                let mut counts: Vec<usize> = h.t_set_counts(t).into_values().collect();
                counts.sort_unstable();
                let mut bars: Vec<(u64, u64)> = Vec::new();
                for c in counts {
                    match bars.last_mut() {
                        Some(b) if b.0 == c as u64 => b.1 += 1,
                        _ => bars.push((c as u64, 1)),
                    }
                }
                let title = format!("co-degrees of {t}-sets ({} edges)", h.len());
                fs::write(&path, svg::histogram(&title, "co-degree", &bars))?;
            }
        }
        Command::Goodindex { gammas, q, input } => {
            let g = match (gammas, input) {
                (Some(csv), _) => {
                    let vals: Vec<f64> = csv
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| usage(format!("--gammas: {e}")))?;
                    let q = q.unwrap_or(vals.len());
                    GammaSequence::new(q, vals).map_err(|e| usage(e.to_string()))?
                }
                (None, Some(path)) => {
                    let h = load(&path)?;
                    GammaSequence::from_profile(&h.co_degree_profile(), h.n())?
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            let reports: Vec<_> = (1..=g.q()).map(|t| is_good_index(&g, t)).collect();
            print_json(&json!({
                "gamma": g.values(),
                "selected_index": find_good_index(&g),
                "good_indices": all_good_indices(&g),
                "reports": reports,
            }))?;
        }
        Command::Decompose { input, eta, out } => {
            if let Some(eta) = eta {
                check_eta(eta)?;
            }
            let h = load(&input)?;
            let cert = decomposition_certificate(&h, eta)?;
            emit(out.as_deref(), &cert)?;
            if out.is_some() {
                let sizes: Vec<usize> = cert.decomposition.pieces.iter().map(Piece::len).collect();
                println!("{} pieces {:?}, {} leftover", sizes.len(), sizes, cert.decomposition.leftover.len());
            }
        }
        Command::Kikuchi {
            input,
            piece,
            ell,
            b,
            left,
            seed,
            w,
            out,
            hist,
            caps,
        } => {
            let h = load(&input)?;
            let ell = resolve_ell(h.n(), h.q(), parse_ell(&ell)?, caps.kikuchi_cap)?;
            let (index, piece) = select_piece(&h, piece.as_deref())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = load_signs(&b, h.k(), &mut rng)?;
            let left: Vec<bool> = match left {
                None => (0..h.k()).map(|_| rng.gen()).collect(),
                Some(list) => {
                    let mut v = vec![false; h.k()];
                    for c in list.split(',').filter(|s| !s.trim().is_empty()) {
                        let c: usize = c.trim().parse().map_err(|_| usage(format!("bad color `{c}` in --left")))?;
                        *v.get_mut(c).ok_or_else(|| usage(format!("color {c} out of range")))? = true;
                    }
                    v
                }
            };
            let kb = build_signed(&piece, &h, &b, &left, ell, caps.kikuchi_cap)?;
            let bracket = spectral_norm(kb.matrix(), &PowerIterationConfig { seed, ..Default::default() });
            let d_t = certify_piece(&piece, &h).d_t;
            let threshold = heavy_threshold(ell, h.n(), h.q(), piece.t, d_t, w);
            let (_, prune) = prune_heavy(&kb, threshold);
            let left_colors: Vec<usize> = (0..h.k()).filter(|&i| left[i]).collect();
            print_json(&json!({
                "piece": index,
                "t": piece.t,
                "ell": ell,
                "D": kb.d.to_string(),
                "N": kb.num_vertices.to_string(),
                "touched_vertices": kb.vertices().len(),
                "matching_edges": kb.raw_edges(),
                "nnz": kb.matrix().nnz(),
                "left": left_colors,
                "spectral": bracket,
                "prune": prune,
            }))?;
            if let Some(path) = out {
                let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                kb.write_dump(std::io::BufWriter::new(f))?;
            }
            if let Some(path) = hist {
                let table = kb.degree_table();
                let mut per_vertex = vec![0u64; kb.vertices().len()];
                for degs in table.values() {
                    for (m, &d) in per_vertex.iter_mut().zip(degs) {
                        *m = (*m).max(d);
                    }
                }
                let max = per_vertex.iter().copied().max().unwrap_or(0);
                let mut bars: Vec<(u64, u64)> = (0..=max).map(|d| (d, 0)).collect();
                for d in per_vertex {
                    bars[d as usize].1 += 1;
                }
                let title = format!("max over colors of Kikuchi degree (ell={ell}, t={})", piece.t);
                fs::write(&path, svg::histogram(&title, "degree", &bars))?;
            }
        }
        Command::Evencover {
            input,
            mode,
            budget,
            seed,
            ell,
            out,
        } => {
            let h = load(&input)?;
            let mode = match mode {
                Mode::Kernel => SearchMode::Kernel,
                Mode::Walk => SearchMode::Walk,
            };
            let report = even_cover_search(&h, mode, budget, seed, parse_ell(&ell)?)?;
            emit(out.as_deref(), &report)?;
            if out.is_some() {
                match &report.certificate {
                    Some(c) => println!(
                        "weak rainbow even cover: {} edges, rainbow color {:?}",
                        c.edge_indices.len(),
                        c.rainbow_color
                    ),
                    None => println!("no weak rainbow even cover found (budget {budget})"),
                }
            }
        }
        Command::Refute {
            input,
            b,
            eta,
            ell,
            samples,
            exact_split_limit,
            w,
            seed,
            out,
            scatter,
            caps,
        } => {
            check_eta(eta)?;
            if w.is_nan() || w <= 0.0 {
                return Err(usage("--w must be positive"));
            }
            let h = load(&input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = load_signs(&b, h.k(), &mut rng)?;
            let cfg = RefuteConfig {
                eta,
                ell: parse_ell(&ell)?,
                samples,
                exact_split_limit,
                vertex_cap: caps.kikuchi_cap,
                brute_force_cap: caps.brute_force_cap,
                w,
                seed,
            };
            let cert = refute(&h, &b, &cfg)?;
            emit(out.as_deref(), &cert)?;
            if out.is_some() {
                println!(
                    "bound {:.4} on val (|H| = {}), exact {}, sound {}",
                    cert.bound,
                    h.len(),
                    cert.brute_force_val.map_or("n/a".into(), |v| v.to_string()),
                    cert.sound
                );
            }
            if let Some(path) = scatter {
                let mut points = Vec::new();
                if h.n() <= caps.brute_force_cap {
                    for pb in &cert.pieces {
                        let sub = cert.decomposition.pieces[pb.index].hypergraph(&h);
                        let exact = brute_force_val(&build_xor(&sub, &b)?, caps.brute_force_cap)?;
                        points.push((exact as f64, pb.val_sq_bound.sqrt()));
                    }
                }
                let svg = svg::scatter("per-piece bound against exact value", "exact val", "certified bound", &points);
                fs::write(&path, svg)?;
            }
            if !cert.sound {
                eprintln!("bound falls below the exact value");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Corpus {
            family,
            k,
            q,
            n,
            size,
            seed,
            out,
        } => {
            let code: NormalLDC = match family {
                Family::Hadamard => hadamard(k).map_err(|e| usage(e.to_string()))?,
                Family::OddParity => odd_parity_code(k, q.unwrap_or(3)).map_err(|e| usage(e.to_string()))?,
                Family::Random => {
                    let (Some(n), Some(q)) = (n, q) else {
                        return Err(usage("random corpus needs --n and --q"));
                    };
                    let size = size.unwrap_or(n / q.max(1));
                    random_matchings(n, k, q, size, seed).map_err(|e| usage(e.to_string()))?
                }
            };
            let text = code.hypergraph.to_text();
            let sidecar = json!({
                "schema_version": 1,
                "params": code.params,
                "content_hash": code.hypergraph.content_hash(),
                "edges": code.hypergraph.len(),
                "delta": code.delta(),
                "has_encoder": code.encoder.is_some(),
            });
            match out {
                Some(path) => {
                    fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
                    write_json(&path.with_extension("json"), &sidecar)?;
                }
                None => print!("{text}"),
            }
        }
        Command::Verify { cert, input } => {
            let h = load(&input)?;
            let json = fs::read_to_string(&cert).with_context(|| format!("reading {}", cert.display()))?;
            let audit = verify(&json, &h)?;
            let failed = audit.checks.iter().filter(|c| !c.pass).count();
            println!(
                "{} certificate: {} checks, {failed} failed, {} field discrepancies",
                audit.kind,
                audit.checks.len(),
                audit.diffs.len()
            );
            if !audit.pass() {
                for f in audit.failures() {
                    println!("  {f}");
                }
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
