mod input;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use howson::bounds::bound_row;
use howson::chains::{cefr_chain, fix_chain, Chain, ChainReport, Stabilization};
use howson::dynamics::{fixed_search, periodic_search, Endomorphism, SearchBudget};
use howson::experiment::{confluence_suite, hnc_suite, rsa_suite, showvf_suite, ExperimentConfig, SuiteReport};
use howson::extension::{ExtensionData, FiniteGroupTable};
use howson::vfsub::{close_subgroup, intersection_report, SubgroupReport, ZakharovConfig};
use howson::{Alphabet, StallingsAutomaton};

use input::{InputError, Source, VfSource};

/// Subgroups of free and free-by-finite groups: folding, membership,
/// intersections, rank bounds, chains and dynamics.
#[derive(Parser)]
#[command(name = "howson", version)]
struct Cli {
    /// Alphabet: a size (`3`) or names (`a,b,c`). Inferred from the input
    /// when omitted.
    #[arg(long, global = true)]
    alphabet: Option<String>,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write the resulting automaton as Graphviz DOT.
    #[arg(long, global = true, value_name = "FILE")]
    dot: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fold a subgroup and print its automaton's size and canonical form.
    Fold { subgroup: String },
    /// Test membership of a word (exit 1 when not a member).
    Member { subgroup: String, word: String },
    /// Rank of a subgroup.
    Rank { subgroup: String },
    /// Free basis read off a spanning tree.
    Basis { subgroup: String },
    /// Index in the ambient free group.
    Index { subgroup: String },
    /// Intersection of two subgroups.
    Intersect { left: String, right: String },
    /// Subgroups of a free-by-finite group: closure, intersection and bounds.
    Vf {
        /// Subgroup file or inline `(word, q); (word, q)` list.
        left: String,
        right: Option<String>,
        /// Extension file; otherwise taken from an `extension` line.
        #[arg(long)]
        extension: Option<PathBuf>,
        /// Test membership of an element `(word, q)` in the first subgroup.
        #[arg(long)]
        member: Option<String>,
        /// Longest F-part tried in the torsion search.
        #[arg(long, default_value_t = 3)]
        zak_len: usize,
        /// Candidate budget of the torsion search.
        #[arg(long, default_value_t = 200_000)]
        zak_budget: u64,
    },
    /// Table of rank bounds over a parameter grid.
    Bounds {
        #[arg(long, default_value = "2..4")]
        n1: String,
        #[arg(long, default_value = "2..4")]
        n2: String,
        #[arg(long, default_value = "1..3")]
        m: String,
    },
    /// Ascending chains and where they stabilize.
    Chain {
        /// Chain file: stages separated by `---` lines.
        file: Option<String>,
        /// Build the strictly ascending rank-4 chain with this many stages.
        #[arg(long, conflicts_with_all = ["file", "fix"])]
        cefr: Option<usize>,
        /// Endomorphism file: chain of fixed subgroups of φ^{m!}.
        #[arg(long, conflicts_with = "file")]
        fix: Option<String>,
        #[arg(long, default_value_t = 4)]
        k_max: u64,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// Fixed and periodic words of an endomorphism.
    Dynamics {
        /// File with lines `a -> word`.
        endomorphism: String,
        /// Also approximate Fix(φ^N).
        #[arg(long)]
        power: Option<u64>,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long, default_value_t = 6)]
        k_max: u64,
        /// Compare the rank of the periodic approximation with this bound.
        #[arg(long)]
        m_bound: Option<u64>,
    },
    /// Seeded random experiments (exit 1 on any violation).
    Experiment {
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 2)]
        alphabet_size: usize,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = 2)]
        min_gens: usize,
        #[arg(long, default_value_t = 4)]
        max_gens: usize,
        /// Extension for the showvf suite (default: F × C2).
        #[arg(long)]
        extension: Option<PathBuf>,
        /// Fold orders per generator set in the confluence suite.
        #[arg(long, default_value_t = 5)]
        orders: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Hnc,
    Showvf,
    Rsa,
    Confluence,
}

type Outcome = Result<ExitCode, InputError>;

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn write_dot(path: Option<&Path>, automaton: &StallingsAutomaton) -> Result<(), InputError> {
    if let Some(path) = path {
        fs::write(path, automaton.to_dot()).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn load_subgroups(alphabet: Option<&str>, args: &[&str], extra: &[&str]) -> Result<(Alphabet, Vec<StallingsAutomaton>), InputError> {
    let sources = args.iter().map(|a| Source::load(a)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&Source> = sources.iter().collect();
    let alphabet = input::resolve_alphabet(alphabet, &refs, extra)?;
    let subgroups = sources
        .iter()
        .map(|s| input::subgroup(&alphabet, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((alphabet, subgroups))
}

fn run(cli: Cli) -> Outcome {
    let alphabet_flag = cli.alphabet.as_deref();
    let dot = cli.dot.as_deref();
    match cli.command {
        Command::Fold { subgroup } => {
            let (_, mut s) = load_subgroups(alphabet_flag, &[&subgroup], &[])?;
            let s = s.remove(0);
            write_dot(dot, &s)?;
            if cli.json {
                print_json(&json!({
                    "vertices": s.vertex_count(),
                    "edges": s.edge_count(),
                    "rank": s.rank(),
                    "canonical_form": s.canonical_form().to_hex(),
                }));
            } else {
                println!("vertices {}", s.vertex_count());
                println!("edges {}", s.edge_count());
                println!("rank {}", s.rank());
                println!("canonical {}", s.canonical_form().to_hex());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Member { subgroup, word } => {
            let (alphabet, mut s) = load_subgroups(alphabet_flag, &[&subgroup], &[&word])?;
            let s = s.remove(0);
            let w = input::parse_word(&alphabet, &word, "word")?;
            let member = s.member(&w).map_err(|e| InputError(e.to_string()))?;
            write_dot(dot, &s)?;
            if cli.json {
                print_json(&json!({ "word": alphabet.format(&w), "member": member }));
            } else {
                println!("{member}");
            }
            Ok(if member { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Rank { subgroup } => {
            let (_, mut s) = load_subgroups(alphabet_flag, &[&subgroup], &[])?;
            let s = s.remove(0);
            write_dot(dot, &s)?;
            if cli.json {
                print_json(&json!({ "rank": s.rank() }));
            } else {
                println!("{}", s.rank());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Basis { subgroup } => {
            let (alphabet, mut s) = load_subgroups(alphabet_flag, &[&subgroup], &[])?;
            let s = s.remove(0);
            write_dot(dot, &s)?;
            let basis: Vec<String> = s.basis().iter().map(|w| alphabet.format(w)).collect();
            if cli.json {
                print_json(&json!({ "basis": basis, "rank": s.rank() }));
            } else {
                for b in basis {
                    println!("{b}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Index { subgroup } => {
            let (_, mut s) = load_subgroups(alphabet_flag, &[&subgroup], &[])?;
            let s = s.remove(0);
            write_dot(dot, &s)?;
            let index = s.index().to_string();
            if cli.json {
                print_json(&json!({ "index": index }));
            } else {
                println!("{index}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Intersect { left, right } => {
            let (alphabet, s) = load_subgroups(alphabet_flag, &[&left, &right], &[])?;
            let both = s[0].intersect(&s[1]).map_err(|e| InputError(e.to_string()))?;
            write_dot(dot, &both)?;
            let basis: Vec<String> = both.basis().iter().map(|w| alphabet.format(w)).collect();
            if cli.json {
                print_json(&json!({ "basis": basis, "rank": both.rank() }));
            } else {
                for b in &basis {
                    println!("{b}");
                }
                println!("rank {}", both.rank());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Vf {
            left,
            right,
            extension,
            member,
            zak_len,
            zak_budget,
        } => {
            let left = VfSource::load(&left)?;
            let right = right.as_deref().map(VfSource::load).transpose()?;
            let path = extension
                .or_else(|| left.extension.clone())
                .or_else(|| right.as_ref().and_then(|r| r.extension.clone()))
                .ok_or_else(|| InputError("no extension given: use --extension or an `extension` line".into()))?;
            let data = input::load_extension(&path)?;
            let vf = |e: howson::vfsub::VfError| InputError(e.to_string());
            let h1 = close_subgroup(&data, &left.elements(&data)?).map_err(vf)?;
            write_dot(dot, h1.k_aut())?;
            if let Some(x) = member {
                let x = data.parse_element(&x).map_err(|e| InputError(format!("--member: {e}")))?;
                let answer = h1.submember(&x);
                if cli.json {
                    print_json(&json!({ "element": data.format_element(&x), "member": answer }));
                } else {
                    println!("{answer}");
                }
                return Ok(if answer { ExitCode::SUCCESS } else { ExitCode::from(1) });
            }
            let Some(right) = right else {
                let report = SubgroupReport::new(&h1);
                if cli.json {
                    print_json(&report);
                } else {
                    print_subgroup("H", &report);
                }
                return Ok(ExitCode::SUCCESS);
            };
            let h2 = close_subgroup(&data, &right.elements(&data)?).map_err(vf)?;
            let config = ZakharovConfig {
                max_len: zak_len,
                budget: zak_budget,
            };
            let report = intersection_report(&h1, &h2, &config).map_err(vf)?;
            if cli.json {
                print_json(&report);
            } else {
                print_subgroup("H1", &report.left);
                print_subgroup("H2", &report.right);
                println!("K = H1 & H2 & F: rank {}, basis [{}]", report.k_rank, report.k_basis.join(", "));
                for layer in &report.layers {
                    match &layer.witness {
                        Some(w) => println!("layer {}: nonempty, witness {w}", layer.q),
                        None => println!("layer {}: empty", layer.q),
                    }
                }
                println!("H1 & H2 = <{}>", report.intersection.generators.join(", "));
                match report.exact_rank {
                    Some(r) => println!("rank {r} (exact)"),
                    None => println!("rank <= {}", report.rank_upper_bound),
                }
                let show = |x: &Option<String>| x.clone().unwrap_or_else(|| "-".into());
                println!("virtually free bound {}", show(&report.bounds.showvf));
                match report.zakharov_n {
                    Some(n) => println!("Zakharov n = {n} (bounded search)"),
                    None => println!("Zakharov n: {}", show(&report.zakharov_note)),
                }
                println!("Zakharov bounds {} / {}", show(&report.bounds.zakharov_first), show(&report.bounds.zakharov_second));
                if !report.boho.pass {
                    println!("BOUND VIOLATED");
                }
            }
            Ok(if report.boho.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Bounds { n1, n2, m } => {
            let mut rows = Vec::new();
            for &a in &input::parse_range("n1", &n1)? {
                for &b in &input::parse_range("n2", &n2)? {
                    for &c in &input::parse_range("m", &m)? {
                        rows.push(bound_row(a, b, c).map_err(|e| InputError(e.to_string()))?);
                    }
                }
            }
            if cli.json {
                print_json(&rows);
            } else {
                println!("{:>3} {:>3} {:>3} {:>8} {:>8} {:>6} {:>8} {:>8} {:>6} {:>10}", "n1", "n2", "m", "howson", "hneumann", "hnc", "vf", "zak", "vf<zak", "nil(c=2)");
                for r in rows {
                    println!(
                        "{:>3} {:>3} {:>3} {:>8} {:>8} {:>6} {:>8} {:>8} {:>6} {:>10}",
                        r.n1,
                        r.n2,
                        r.m,
                        r.howson,
                        r.hneumann,
                        r.hnc,
                        r.showvf,
                        r.zak_second,
                        r.showvf_beats_zak,
                        r.shnil_class2.unwrap_or_else(|| "-".into())
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Chain {
            file,
            cefr,
            fix,
            k_max,
            max_len,
        } => {
            let chain_err = |e: howson::chains::ChainError| InputError(e.to_string());
            let chain = if let Some(n) = cefr {
                cefr_chain(n).map_err(chain_err)?
            } else if let Some(path) = fix {
                let phi = load_endomorphism(alphabet_flag, &path)?;
                fix_chain(&phi, k_max, &SearchBudget::new(max_len)).map_err(chain_err)?
            } else if let Some(path) = file {
                let text = input::read_file(Path::new(&path))?;
                let alphabet = input::resolve_alphabet(alphabet_flag, &[], &[&text])?;
                Chain::parse(&alphabet, &text).map_err(|e| InputError(format!("{path}: {e}")))?
            } else {
                return Err(InputError("give a chain file, --cefr N or --fix FILE".into()));
            };
            if let Some(path) = dot {
                for (i, stage) in chain.stages().iter().enumerate() {
                    write_dot(Some(&stage_path(path, i + 1)), &stage.automaton)?;
                }
            }
            let report = ChainReport::new(&chain).map_err(chain_err)?;
            if cli.json {
                print_json(&report);
            } else {
                for s in &report.stages {
                    let flag = if s.unresolved > 0 { format!(", {} unresolved", s.unresolved) } else { String::new() };
                    println!("stage {}: v={} e={} rank {}{flag}", s.stage, s.vertices, s.edges, s.rank);
                }
                match report.stabilization {
                    Stabilization::At(t) => println!("stabilizes at stage {t}"),
                    Stabilization::NotWithin(n) => println!("no stabilization within {n} stages"),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Dynamics {
            endomorphism,
            power,
            max_len,
            k_max,
            m_bound,
        } => {
            let phi = load_endomorphism(alphabet_flag, &endomorphism)?;
            let alphabet = phi.alphabet().clone();
            let budget = SearchBudget::new(max_len);
            let dyn_err = |e: howson::dynamics::DynamicsError| InputError(e.to_string());
            let fixed = power.map(|n| fixed_search(&phi, n, &budget)).transpose().map_err(dyn_err)?;
            let report = periodic_search(&phi, k_max, &budget, m_bound).map_err(dyn_err)?;
            let automaton = fixed.as_ref().map_or(&report.approximation.automaton, |f| &f.automaton);
            write_dot(dot, automaton)?;
            let summary = report.summary(&alphabet);
            let fixed_json = fixed.as_ref().map(|f| {
                json!({
                    "power": power,
                    "basis": f.automaton.basis().iter().map(|w| alphabet.format(w)).collect::<Vec<_>>(),
                    "rank": f.automaton.rank(),
                    "unresolved": f.unresolved,
                    "under_approximation": true,
                })
            });
            if cli.json {
                print_json(&json!({ "fixed": fixed_json, "periodic": summary }));
            } else {
                if let (Some(n), Some(f)) = (power, &fixed) {
                    let basis: Vec<String> = f.automaton.basis().iter().map(|w| alphabet.format(w)).collect();
                    println!("Fix(phi^{n}) contains <{}> (rank {}, {} unresolved)", basis.join(", "), f.automaton.rank(), f.unresolved);
                }
                println!("periodic words found: {} (length <= {max_len}, period <= {k_max})", summary.found.len());
                for p in summary.found.iter().take(20) {
                    println!("  {}  period {}", p.word, p.period);
                }
                if summary.found.len() > 20 {
                    println!("  ...");
                }
                println!("Per(phi) contains <{}> (rank {})", summary.basis.join(", "), summary.rank);
                println!("lcm of periods {}", summary.r_phi_estimate);
                if let (Some(m), Some(ok)) = (summary.m_bound, summary.m_check_pass) {
                    println!("rank <= {m}: {ok}");
                }
            }
            Ok(match summary.m_check_pass {
                Some(false) => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            })
        }
        Command::Experiment {
            suite,
            trials,
            alphabet_size,
            max_len,
            min_gens,
            max_gens,
            extension,
            orders,
        } => {
            let mut config = ExperimentConfig::new(cli.seed, trials, alphabet_size, max_len);
            config.min_generators = min_gens;
            config.max_generators = max_gens;
            let exp = |e: howson::experiment::ExperimentError| InputError(e.to_string());
            let violations = match suite {
                Suite::Hnc => emit(cli.json, hnc_suite(&config).map_err(exp)?),
                Suite::Rsa => emit(cli.json, rsa_suite(&config).map_err(exp)?),
                Suite::Confluence => emit(cli.json, confluence_suite(&config, orders).map_err(exp)?),
                Suite::Showvf => {
                    let data = match extension {
                        Some(path) => input::load_extension(&path)?,
                        None => {
                            if alphabet_size == 0 {
                                return Err(InputError("--alphabet-size must be positive".into()));
                            }
                            ExtensionData::direct_product(Alphabet::standard(alphabet_size), FiniteGroupTable::cyclic(2))
                        }
                    };
                    config.alphabet_size = data.alphabet().size();
                    emit(cli.json, showvf_suite(&config, &data).map_err(exp)?)
                }
            };
            Ok(if violations == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn emit<R: Serialize>(json: bool, report: SuiteReport<R>) -> usize {
    if json {
        print_json(&report);
    } else {
        println!(
            "suite {}: {} trials, {} violations (seed {})",
            report.suite,
            report.records.len(),
            report.violations,
            report.config.seed
        );
    }
    report.violations
}

fn print_subgroup(name: &str, r: &SubgroupReport) {
    println!("{name} = <{}>", r.generators.join(", "));
    println!("  image in Q: {:?}", r.qh);
    for rep in &r.reps {
        println!("  rep over {}: {} = product of generators {:?}", rep.q, rep.element, rep.witness);
    }
    println!("  {name} & F: rank {}, basis [{}]", r.k_rank, r.k_basis.join(", "));
}

fn stage_path(path: &Path, stage: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "dot".into());
    path.with_file_name(format!("{stem}.{stage}.{ext}"))
}

fn load_endomorphism(alphabet: Option<&str>, path: &str) -> Result<Endomorphism, InputError> {
    let text = input::read_file(Path::new(path))?;
    let alphabet = input::resolve_alphabet(alphabet, &[], &[&text.replace("->", " ")])?;
    Endomorphism::parse(&alphabet, &text).map_err(|e| InputError(format!("{path}: {e}")))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
