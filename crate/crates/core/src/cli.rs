//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 broken invariant
//! found by an `--assert` check. Machine output goes to standard output,
//! messages to standard error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cover_tree::CoverTree;
use crate::datasets::{self, TreeParams};
use crate::error::Error;
use crate::io::{self, fmt_float};
use crate::kde::{fit_sigmoid, kde_approx, kde_exact};
use crate::knn::{knn_approx, knn_exact, knn_exact_checked, KnnResult};
use crate::mergegram::{bottleneck, mergegram, pd0_from_spanning_tree, Dendrogram};
use crate::metric::{self, MetricSpace, Query, DEFAULT_AXIOM_CAP, DEFAULT_TOLERANCE};
use crate::mst::{mst_prim, mst_singletree_boruvka_with, rho_of, MstOptions};
use crate::skeleton::{full_pipeline, PipelineParams};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "METRIC_FOREST_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "metric-forest",
    version,
    about = "Cover trees, MSTs and their invariants on finite metric spaces"
)]
struct Cli {
    /// Worker threads for batch queries.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Run the slow self-checks of k-NN and MST and fail with exit code 3
    /// on a violation.
    #[arg(long = "assert", global = true)]
    check: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SpaceArgs {
    /// Point cloud CSV, one point per row.
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    input: Option<PathBuf>,
    /// Distance matrix CSV, n rows of n values.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Input files start with a header row.
    #[arg(long)]
    header: bool,
    /// Insert points into the cover tree in a seeded random order.
    #[arg(long)]
    shuffle: bool,
    /// Drop repeated rows of a point cloud, keeping the first; output ids
    /// refer to the remaining rows.
    #[arg(long, conflicts_with = "matrix")]
    dedup: bool,
    /// Seed; defaults to $METRIC_FOREST_SEED or 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// k nearest neighbors: CSV (query, rank, ref, distance).
    Knn {
        /// Reference points.
        #[arg(
            long = "ref",
            conflicts_with = "matrix",
            required_unless_present = "matrix"
        )]
        reference: Option<PathBuf>,
        /// Query points; with --matrix, every point is queried by id.
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        query: Option<PathBuf>,
        /// Distance matrix instead of point files.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        /// Allowed relative error; exact search when absent.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        header: bool,
    },
    /// Minimum spanning tree: CSV (a, b, length).
    Mst {
        #[command(flatten)]
        space: SpaceArgs,
        /// Use the quadratic Prim oracle instead of the cover tree.
        #[arg(long)]
        oracle: bool,
        /// Write a JSON summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Mergegram of the single-linkage dendrogram: CSV (birth, death).
    Mergegram {
        #[command(flatten)]
        space: SpaceArgs,
        /// Print the 0D persistence diagram instead.
        #[arg(long)]
        pd0: bool,
        /// Halve every scale.
        #[arg(long)]
        half_scale: bool,
    },
    /// 0D persistence diagram: CSV (birth, death).
    Pd0 {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        half_scale: bool,
    },
    /// Bottleneck distance between two diagram CSVs.
    Bottleneck {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Diagram files start with a header row.
        #[arg(long)]
        header: bool,
    },
    /// Sigmoid kernel density: CSV (query, f).
    Kde {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        t: f64,
        /// Per-point error of the tree-pruned estimate; exact when absent.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        header: bool,
    },
    /// Tree skeleton of a noisy cloud: writes edges.csv, vertices.csv and
    /// report.json.
    Skeletonize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        iters: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        header: bool,
    },
    /// Generate a dataset.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Point or vertex count.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Block exponent of the two separated sets.
        #[arg(long, default_value_t = 3)]
        k: u32,
        /// Spoke count of a star.
        #[arg(long, default_value_t = 4)]
        edges: usize,
        /// Angle between consecutive star spokes.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        angle: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, default_value_t = 1.5)]
        l_max: f64,
        #[arg(long, default_value_t = 0.5)]
        l_min: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
        theta: f64,
        #[arg(long, default_value_t = 0.3)]
        width: f64,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Tree JSON to sample from (eps-sample).
        #[arg(long)]
        tree: Option<PathBuf>,
        /// Comma-separated coordinates (line).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// Metric statistics as JSON.
    Stats {
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Check the metric axioms and cover-tree invariants; exit 2 on failure.
    Verify {
        #[command(flatten)]
        space: SpaceArgs,
        /// Largest n for the exhaustive triangle check.
        #[arg(long, default_value_t = DEFAULT_AXIOM_CAP)]
        cap: usize,
    },
    /// Timing harness: CSV (suite, n, wall_seconds, rounds, rho, ok).
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, value_delimiter = ',', default_value = "100,1000")]
        sizes: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Leave the wall-time column empty so output is reproducible.
        #[arg(long)]
        no_time: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Line,
    Uniform,
    Star,
    SensibleTree,
    EpsSample,
    TwoSets,
    Tube,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Suite {
    Knn,
    Mst,
}

enum Failure {
    Usage(String),
    Data(Error),
    /// Report for standard output with exit code 2.
    Rejected(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = stdout.write_all(text.as_bytes());
            } else {
                let _ = stderr.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match execute(cli) {
        Ok(out) => match stdout.write_all(out.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                2
            }
        },
        Err(Failure::Rejected(out)) => {
            let _ = stdout.write_all(out.as_bytes());
            let _ = writeln!(stderr, "error: verification failed");
            2
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "usage error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Invariant(_) => 3,
                _ => 2,
            }
        }
    }
}

fn default_seed(seed: Option<u64>) -> CliResult<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .or_else(|_| usage(format!("{SEED_ENV} is not an unsigned integer: {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn load_space(args: &SpaceArgs) -> CliResult<MetricSpace> {
    match (&args.input, &args.matrix) {
        (Some(p), None) => {
            let mut pts = io::read_points(p, args.header)?;
            if args.dedup {
                pts = dedup_rows(pts);
            }
            Ok(MetricSpace::from_points(&pts)?)
        }
        (None, Some(m)) => Ok(MetricSpace::from_matrix(&io::read_rows(m, args.header)?)?),
        _ => usage("give exactly one of --input and --matrix"),
    }
}

fn dedup_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut seen = std::collections::HashSet::new();
    // `+ 0.0` maps -0.0 to 0.0 so both spellings count as one point.
    rows.into_iter()
        .filter(|r| seen.insert(r.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>()))
        .collect()
}

fn build_tree<'a>(space: &'a MetricSpace, args: &SpaceArgs) -> CliResult<CoverTree<'a>> {
    if args.shuffle {
        let order = datasets::shuffled_order(space.len(), default_seed(args.seed)?);
        Ok(CoverTree::build_with_order(space, &order)?)
    } else {
        Ok(CoverTree::build(space)?)
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Failure::Data(Error::Parse(e.to_string())))
}

fn execute(cli: Cli) -> CliResult<String> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Knn {
            reference,
            query,
            matrix,
            k,
            epsilon,
            header,
        } => {
            if k == 0 {
                return usage("--k must be at least 1");
            }
            if let Some(e) = epsilon {
                if !(e > 0.0) {
                    return usage("--epsilon must be positive");
                }
            }
            let (space, qpoints) = match (matrix, reference, query) {
                (Some(m), _, _) => (MetricSpace::from_matrix(&io::read_rows(&m, header)?)?, None),
                (None, Some(r), Some(q)) => (
                    MetricSpace::from_points(&io::read_points(&r, header)?)?,
                    Some(io::read_points(&q, header)?),
                ),
                _ => return usage("give --matrix, or both --ref and --query"),
            };
            let tree = CoverTree::build(&space)?;
            let queries: Vec<Query<'_>> = match &qpoints {
                Some(ps) => ps.iter().map(|p| Query::Point(p)).collect(),
                None => (0..space.len()).map(Query::Id).collect(),
            };
            let check = cli.check;
            let results: Vec<KnnResult> =
                crate::knn::parallel_map(&queries, threads, |q| match epsilon {
                    Some(e) => knn_approx(&tree, q, k, e),
                    None if check => knn_exact_checked(&tree, q, k),
                    None => knn_exact(&tree, q, k),
                })?;
            let mut out = String::from("query,rank,ref,distance\n");
            for (qi, res) in results.iter().enumerate() {
                for (rank, nb) in res.neighbors.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{qi},{},{},{}",
                        rank + 1,
                        nb.id,
                        fmt_float(nb.distance)
                    );
                }
            }
            Ok(out)
        }
        Command::Mst {
            space: args,
            oracle,
            summary,
        } => {
            let space = load_space(&args)?;
            let (tree, rounds) = if oracle {
                (mst_prim(&space), None)
            } else {
                let ct = build_tree(&space, &args)?;
                let out = mst_singletree_boruvka_with(
                    &ct,
                    MstOptions {
                        check: cli.check,
                        trace: false,
                    },
                )?;
                (out.tree, Some(out.rounds))
            };
            if let Some(path) = summary {
                let st = if space.len() >= 2 {
                    Some(metric::stats(&space)?)
                } else {
                    None
                };
                let s = MstSummary {
                    n: space.len(),
                    weight: tree.total_weight,
                    rounds,
                    rho: rho_of(&tree).ok(),
                    aspect_ratio: st.as_ref().map(|s| s.aspect_ratio),
                    expansion_constant: st.as_ref().map(|s| s.expansion_constant),
                };
                std::fs::write(&path, to_json(&s)?)?;
            }
            let mut edges = tree.edges.clone();
            edges.sort_by_key(|x| x.key());
            Ok(io::format_edges(&edges))
        }
        Command::Mergegram {
            space: args,
            pd0,
            half_scale,
        } => {
            let space = load_space(&args)?;
            let ct = build_tree(&space, &args)?;
            let mst = mst_singletree_boruvka_with(
                &ct,
                MstOptions {
                    check: cli.check,
                    trace: false,
                },
            )?
            .tree;
            let d = if pd0 {
                pd0_from_spanning_tree(&mst)
            } else {
                mergegram(&Dendrogram::from_spanning_tree(space.len(), &mst)?)
            };
            Ok(io::format_diagram(&if half_scale {
                d.scaled(0.5)
            } else {
                d
            }))
        }
        Command::Pd0 {
            space: args,
            half_scale,
        } => {
            let space = load_space(&args)?;
            let ct = build_tree(&space, &args)?;
            let mst = mst_singletree_boruvka_with(
                &ct,
                MstOptions {
                    check: cli.check,
                    trace: false,
                },
            )?
            .tree;
            let d = pd0_from_spanning_tree(&mst);
            Ok(io::format_diagram(&if half_scale {
                d.scaled(0.5)
            } else {
                d
            }))
        }
        Command::Bottleneck { a, b, header } => {
            let da = io::parse_diagram(&std::fs::read_to_string(&a)?, header)?;
            let db = io::parse_diagram(&std::fs::read_to_string(&b)?, header)?;
            Ok(format!("{}\n", fmt_float(bottleneck(&da, &db))))
        }
        Command::Kde {
            reference,
            query,
            r,
            t,
            epsilon,
            header,
        } => {
            let kernel = fit_sigmoid(r, t).or_else(|e| usage(e.to_string()))?;
            let space = MetricSpace::from_points(&io::read_points(&reference, header)?)?;
            let qs = io::read_points(&query, header)?;
            let queries: Vec<Query<'_>> = qs.iter().map(|p| Query::Point(p)).collect();
            let f = match epsilon {
                Some(e) if e > 0.0 => {
                    kde_approx(&kernel, &CoverTree::build(&space)?, &queries, e, threads)?
                }
                Some(_) => return usage("--epsilon must be positive"),
                None => kde_exact(&kernel, &space, &queries)?,
            };
            let mut out = String::from("query,f\n");
            for (i, v) in f.iter().enumerate() {
                let _ = writeln!(out, "{i},{}", fmt_float(*v));
            }
            Ok(out)
        }
        Command::Skeletonize {
            input,
            k,
            r,
            t,
            delta,
            eta,
            iters,
            out,
            header,
        } => {
            if k == 0 || !(delta > 0.0) || !(eta > 0.0) {
                return usage("need --k >= 1, --delta > 0 and --eta > 0");
            }
            let cloud = io::read_points(&input, header)?;
            let params = PipelineParams {
                k,
                r,
                t,
                delta,
                eta,
                iters,
                kde_epsilon: None,
                threads,
            };
            let res = full_pipeline(&cloud, params, None)?;
            std::fs::create_dir_all(&out)?;
            let tree = &res.optimized;
            let mut edges = String::from("a,b\n");
            for &(a, b) in &tree.edges {
                let _ = writeln!(edges, "{a},{b}");
            }
            write_file(&out.join("edges.csv"), &edges)?;
            write_file(&out.join("vertices.csv"), &io::format_rows(&tree.vertices))?;
            write_file(&out.join("report.json"), &to_json(&res.report)?)?;
            to_json(&res.report)
        }
        Command::Gen {
            family,
            out,
            seed,
            n,
            dim,
            k,
            edges,
            angle,
            length,
            l_max,
            l_min,
            theta,
            width,
            epsilon,
            tree,
            values,
        } => {
            let seed = default_seed(seed)?;
            let text = match family {
                Family::Line => {
                    if values.is_empty() {
                        return usage("--values is required for the line family");
                    }
                    gen_line_checked(&values)?
                }
                Family::Uniform => io::format_rows(&datasets::gen_uniform_cloud(n, dim, seed)),
                Family::Star => {
                    io::tree_to_json(
                        &datasets::gen_star(edges, angle, length)
                            .or_else(|e| usage(e.to_string()))?,
                    )? + "\n"
                }
                Family::SensibleTree => {
                    let p = TreeParams {
                        n_vertices: n,
                        l_max,
                        l_min,
                        theta,
                        width,
                    };
                    io::tree_to_json(&datasets::gen_sensible_tree(p, seed)?)? + "\n"
                }
                Family::EpsSample => {
                    let Some(path) = tree else {
                        return usage("--tree is required for eps-sample");
                    };
                    let t = io::tree_from_json(&std::fs::read_to_string(path)?)?;
                    io::format_rows(&datasets::gen_eps_sample(&t, n, epsilon, seed)?)
                }
                Family::TwoSets => io::format_rows(
                    &datasets::gen_two_separated_sets(k)
                        .or_else(|e| usage(e.to_string()))?
                        .to_matrix(),
                ),
                Family::Tube => io::format_rows(&datasets::gen_tube(n, epsilon, seed)?),
            };
            match out {
                Some(p) => {
                    write_file(&p, &text)?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
        Command::Stats { space: args } => {
            let space = load_space(&args)?;
            to_json(&metric::stats(&space)?)
        }
        Command::Verify { space: args, cap } => {
            let space = load_space(&args)?;
            let axioms = metric::verify_metric_axioms(&space, cap, DEFAULT_TOLERANCE)?;
            let tree = if axioms.all_ok() {
                Some(build_tree(&space, &args)?.verify())
            } else {
                None
            };
            let ok = axioms.all_ok() && tree.as_ref().is_some_and(|t| t.all_ok());
            let text = to_json(&VerifyReport { ok, axioms, tree })?;
            if ok {
                Ok(text)
            } else {
                Err(Failure::Rejected(text))
            }
        }
        Command::Bench {
            suite,
            sizes,
            seed,
            dim,
            no_time,
        } => {
            let seed = default_seed(seed)?;
            bench(suite, &sizes, seed, dim, no_time, cli.check)
        }
    }
}

fn gen_line_checked(values: &[f64]) -> CliResult<String> {
    datasets::gen_line_cloud(values)?;
    Ok(io::format_rows(
        &values.iter().map(|&v| vec![v]).collect::<Vec<_>>(),
    ))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct MstSummary {
    n: usize,
    weight: f64,
    rounds: Option<usize>,
    rho: Option<f64>,
    aspect_ratio: Option<f64>,
    expansion_constant: Option<f64>,
}

#[derive(Serialize)]
struct VerifyReport {
    ok: bool,
    axioms: metric::AxiomReport,
    tree: Option<crate::cover_tree::TreeReport>,
}

fn bench(
    suite: Suite,
    sizes: &[usize],
    seed: u64,
    dim: usize,
    no_time: bool,
    check: bool,
) -> CliResult<String> {
    if sizes.is_empty() || sizes.contains(&0) || dim == 0 {
        return usage("--sizes must list positive counts and --dim must be positive");
    }
    let mut out = String::from("suite,n,wall_seconds,rounds,rho,ok\n");
    for &n in sizes {
        let pts = datasets::gen_uniform_cloud(n, dim, seed);
        let space = MetricSpace::from_points(&pts)?;
        let start = Instant::now();
        let (rounds, rho, ok) = match suite {
            Suite::Mst => {
                let tree = CoverTree::build(&space)?;
                let res = mst_singletree_boruvka_with(
                    &tree,
                    MstOptions {
                        check,
                        trace: false,
                    },
                )?;
                let bound = (n as f64).log2().ceil() as usize + 1;
                let ok = res.tree.is_spanning_tree(n) && res.rounds <= bound;
                (
                    res.rounds.to_string(),
                    rho_of(&res.tree).map(fmt_float).unwrap_or_default(),
                    ok,
                )
            }
            Suite::Knn => {
                let tree = CoverTree::build(&space)?;
                let mut ok = true;
                for p in 0..n {
                    let res = knn_exact(&tree, Query::Id(p), 5.min(n))?;
                    ok &= res.neighbors.first().map(|nb| nb.id) == Some(p);
                }
                (String::new(), String::new(), ok)
            }
        };
        let secs = start.elapsed().as_secs_f64();
        let time = if no_time {
            String::new()
        } else {
            format!("{secs:.6}")
        };
        let name = match suite {
            Suite::Knn => "knn",
            Suite::Mst => "mst",
        };
        let _ = writeln!(out, "{name},{n},{time},{rounds},{rho},{ok}");
    }
    Ok(out)
}
