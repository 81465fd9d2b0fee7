//! Command-line front end: builds trees, runs decompositions and the
//! brute-force oracle, and drives the verification suites. All randomized
//! commands take an explicit seed and write it into their artifacts;
//! identical invocations produce byte-identical outputs.
//!
//! Exit codes: 0 success, 1 failed check (oracle mismatch, bound violation,
//! replication mismatch), 2 usage or input errors.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mixtree::analysis::{
    derive_seed, genericity_check, separation_report, verify_hybrid_replication,
    verify_rank_bounds,
};
use mixtree::decomp::{
    enumerate_hybrids, lower_bound_weights, random_weights, tree_decompose, Discretizers, MixSpec,
    WeightDistribution,
};
use mixtree::io;
use mixtree::network::{dilation_profile, grid_tensor_bruteforce};
use mixtree::rank::{matrix_rank, RankMode, DEFAULT_NUMERIC_TOLERANCE};
use mixtree::scalar::{BinaryOp, ScalarKind};
use mixtree::tree::{
    build_baseline_tree, build_bit_split_tree, build_even_odd_swap_tree, build_k_group_swap_tree,
    rank_bounds, ModeTree,
};
use mixtree::{parse_index_spec, ModeSet};

#[derive(Parser)]
#[command(
    name = "mixtree",
    version,
    about = "Mode-tree tensor decompositions, mixtures, and matricization-rank analysis"
)]
struct Cli {
    /// Scalar kind for generated values: rational | f64
    #[arg(long, global = true, default_value = "rational")]
    scalar: String,

    /// Worker threads for trial/grid parallelism (0 = automatic); output is
    /// independent of this setting
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mode-tree construction
    Tree {
        #[command(subcommand)]
        command: TreeCommand,
    },
    /// Tiling of an index set by a tree
    Tiling(TilingArgs),
    /// Matricization-rank bounds for a tree and index set
    Bounds(BoundsArgs),
    /// Run a tree decomposition and write the grid tensors
    Grid(GridArgs),
    /// Matricization rank of stored tensors
    Rank(RankArgs),
    /// Enumerate the hybrid trees of a mix spec
    Hybrids(HybridsArgs),
    /// Compare the decomposition against the exhaustive forward-pass oracle
    Oracle(OracleArgs),
    /// Verification suites
    Verify {
        #[command(subcommand)]
        command: VerifyCommand,
    },
    /// Desk-scale expressive-efficiency separation report
    Separation(SeparationArgs),
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Build a tree and write it as JSON
    Build(TreeBuildArgs),
}

#[derive(Args)]
struct TreeBuildArgs {
    /// baseline | even-odd | k-group | bit-split
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    /// Group size for --kind k-group
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated 0-based bit positions for --kind bit-split
    #[arg(long)]
    bit_order: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TilingArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    index_set: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    index_set: String,
    #[arg(long)]
    r: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Weights file; mutually exclusive with --seed
    #[arg(long, conflicts_with = "seed")]
    weights: Option<PathBuf>,
    /// Seed for random weights
    #[arg(long)]
    seed: Option<u64>,
    /// Integer weight bound for seeded rational weights
    #[arg(long, default_value_t = 5)]
    bound: i64,
    #[arg(long)]
    r: Option<usize>,
    /// Discretizers file; identity discretizers (M = r) when absent
    #[arg(long)]
    disc: Option<PathBuf>,
    /// product | relu-sum
    #[arg(long, default_value = "product")]
    g: String,
    #[arg(long)]
    out: PathBuf,
    /// Also write the weights used
    #[arg(long)]
    save_weights: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    /// Tensor or batch JSON
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    index_set: String,
    /// exact | numeric
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value_t = DEFAULT_NUMERIC_TOLERANCE)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HybridsArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    /// product | relu-sum
    #[arg(long, default_value = "product")]
    g: String,
    #[arg(long)]
    seed: u64,
    /// Number of discretizers (defaults to r)
    #[arg(long)]
    m: Option<usize>,
    /// baseline | even-odd | k-group
    #[arg(long, default_value = "baseline")]
    kind: String,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Mixed decomposition replicates every hybrid tree exactly
    Claim1(VerifyClaim1Args),
    /// Matricization ranks respect the tiling bounds
    Theorem1(VerifyTheorem1Args),
    /// Rank statistics over random weight draws
    Generic(VerifyGenericArgs),
}

#[derive(Args)]
struct VerifyClaim1Args {
    /// Mix-spec JSON; mutually exclusive with --n/--k
    #[arg(long, conflicts_with_all = ["n", "k"])]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Dilation-swap group size for the built-in spec (default 2)
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    r_mix: usize,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// product | relu-sum
    #[arg(long, default_value = "product")]
    g: String,
    /// Check a single hybrid by enumeration index
    #[arg(long)]
    hybrid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyTheorem1Args {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    index_set: String,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Must be product; other operators are outside the bounds' scope
    #[arg(long, default_value = "product")]
    g: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyGenericArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    index_set: String,
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Integer weight bound (>= 3)
    #[arg(long, default_value_t = 5)]
    bound: i64,
    /// Include the explicit lower-bound construction as trial 0
    #[arg(long)]
    include_witness: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SeparationArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r_mix: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    configure_threads(cli.threads)?;
    let kind: ScalarKind = cli
        .scalar
        .parse()
        .map_err(|e| anyhow!("bad --scalar: {e}"))?;
    match cli.command {
        Command::Tree {
            command: TreeCommand::Build(args),
        } => tree_build(args),
        Command::Tiling(args) => tiling_cmd(args),
        Command::Bounds(args) => bounds_cmd(args),
        Command::Grid(args) => grid_cmd(args, kind),
        Command::Rank(args) => rank_cmd(args),
        Command::Hybrids(args) => hybrids_cmd(args),
        Command::Oracle(args) => oracle_cmd(args, kind),
        Command::Verify { command } => match command {
            VerifyCommand::Claim1(args) => verify_claim1_cmd(args),
            VerifyCommand::Theorem1(args) => verify_theorem1_cmd(args),
            VerifyCommand::Generic(args) => verify_generic_cmd(args),
        },
        Command::Separation(args) => separation_cmd(args),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) -> Result<()> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("building thread pool")?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: usize) -> Result<()> {
    if threads > 1 {
        eprintln!("note: built without the parallel feature; running sequentially");
    }
    Ok(())
}

fn load_tree(path: &Path) -> Result<ModeTree> {
    io::load_tree(path).with_context(|| format!("loading tree {}", path.display()))
}

fn parse_g(g: &str) -> Result<BinaryOp> {
    g.parse().map_err(|e| anyhow!("bad --g: {e}"))
}

fn parse_set(spec: &str) -> Result<ModeSet> {
    parse_index_spec(spec).map_err(|e| anyhow!("bad --index-set: {e}"))
}

fn tree_build(args: TreeBuildArgs) -> Result<i32> {
    let tree = match args.kind.as_str() {
        "baseline" => build_baseline_tree(args.n)?,
        "even-odd" | "evenodd" => build_even_odd_swap_tree(args.n)?,
        "k-group" => {
            let k = args.k.ok_or_else(|| anyhow!("--kind k-group needs --k"))?;
            build_k_group_swap_tree(args.n, k)?
        }
        "bit-split" => {
            let spec = args
                .bit_order
                .ok_or_else(|| anyhow!("--kind bit-split needs --bit-order"))?;
            let order = spec
                .split(',')
                .map(|p| p.trim().parse::<usize>().context("bad bit position"))
                .collect::<Result<Vec<_>>>()?;
            build_bit_split_tree(args.n, &order)?
        }
        other => bail!("unknown tree kind {other:?}"),
    };
    io::save_tree(&args.out, &tree)?;
    let profile = dilation_profile(&tree)?;
    println!(
        "built {} tree over 1..{} ({} nodes), dilations {:?}, wrote {}",
        args.kind,
        args.n,
        tree.node_count(),
        profile.layers(),
        args.out.display()
    );
    Ok(0)
}

fn tiling_cmd(args: TilingArgs) -> Result<i32> {
    let tree = load_tree(&args.tree)?;
    let index_set = parse_set(&args.index_set)?;
    let tiling = mixtree::tree::tiling(&tree, &index_set)?;
    let members: Vec<String> = tiling.members().iter().map(|m| m.to_string()).collect();
    println!(
        "tiling of {{{index_set}}}: {} members: {}",
        tiling.size(),
        members.join(" | ")
    );
    if let Some(out) = args.out {
        io::write_json(&out, &tiling)?;
    }
    Ok(0)
}

fn bounds_cmd(args: BoundsArgs) -> Result<i32> {
    let tree = load_tree(&args.tree)?;
    let index_set = parse_set(&args.index_set)?;
    let report = rank_bounds(&tree, &index_set, args.r)?;
    println!(
        "index set {{{index_set}}}: |tiling(I)| = {}, |tiling(Ic)| = {}, sibling pairs = {}",
        report.tiling_size, report.complement_tiling_size, report.lower_exponent
    );
    println!("lower = {}, upper = {}", report.lower, report.upper);
    if let Some(out) = args.out {
        io::write_json(&out, &report)?;
    }
    Ok(0)
}

fn grid_cmd(args: GridArgs, kind: ScalarKind) -> Result<i32> {
    let tree = load_tree(&args.tree)?;
    let g = parse_g(&args.g)?;
    let (weights, seed_used) = match (&args.weights, args.seed) {
        (Some(path), _) => (
            io::load_weights(path).with_context(|| format!("loading {}", path.display()))?,
            None,
        ),
        (None, Some(seed)) => {
            let r = args
                .r
                .ok_or_else(|| anyhow!("--seed needs --r to size the weights"))?;
            let dist = match kind {
                ScalarKind::Rational => WeightDistribution::IntegerUniform { bound: args.bound },
                ScalarKind::F64 => WeightDistribution::UnitFloat,
            };
            (random_weights(&tree, r, seed, dist)?, Some(seed))
        }
        (None, None) => bail!("grid needs --weights FILE or --seed S"),
    };
    let disc = match &args.disc {
        Some(path) => {
            io::load_discretizers(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => Discretizers::identity(weights.r(), kind),
    };
    let batch = tree_decompose(&tree, &weights, &disc, g)?;
    io::save_batch(&args.out, &batch, seed_used)?;
    if let Some(path) = &args.save_weights {
        io::save_weights(path, &weights)?;
    }
    println!(
        "decomposed: {} tensors of dims {:?}, wrote {}",
        batch.count(),
        batch.dims(),
        args.out.display()
    );
    Ok(0)
}

fn rank_cmd(args: RankArgs) -> Result<i32> {
    let index_set = parse_set(&args.index_set)?;
    let mode = match args.mode.as_str() {
        "exact" => RankMode::Exact,
        "numeric" => RankMode::Numeric {
            tolerance: args.tolerance,
        },
        other => bail!("unknown rank mode {other:?}"),
    };
    // accept either a batch artifact or a single tensor file
    let tensors = match io::load_batch(&args.input) {
        Ok(batch) => batch.into_tensors(),
        Err(_) => {
            let file: io::TensorFile = io::read_json(&args.input)?;
            vec![file.into_tensor()?]
        }
    };
    let mut ranks = Vec::new();
    for t in &tensors {
        let m = t.matricize(&index_set)?;
        ranks.push(matrix_rank(&m, mode)?);
    }
    println!("ranks w.r.t. {{{index_set}}}: {ranks:?}");
    if let Some(out) = args.out {
        io::write_json(&out, &serde_json::json!({ "index_set": index_set, "ranks": ranks }))?;
    }
    Ok(0)
}

fn hybrids_cmd(args: HybridsArgs) -> Result<i32> {
    let spec = io::load_mix_spec(&args.spec)?;
    let sequences = mixtree::decomp::choice_sequence_count(&spec);
    let hybrids = enumerate_hybrids(&spec)?;
    println!(
        "{} choice sequences, {} distinct hybrid trees",
        sequences,
        hybrids.len()
    );
    if let Some(out) = args.out {
        let files: Vec<io::HybridFile> = hybrids.iter().map(io::HybridFile::from_hybrid).collect();
        io::write_json(
            &out,
            &serde_json::json!({
                "choice_sequences": sequences,
                "distinct": hybrids.len(),
                "hybrids": files,
            }),
        )?;
    }
    Ok(0)
}

fn oracle_tree(kind: &str, n: usize, k: Option<usize>) -> Result<ModeTree> {
    Ok(match kind {
        "baseline" => build_baseline_tree(n)?,
        "even-odd" | "evenodd" => build_even_odd_swap_tree(n)?,
        "k-group" => build_k_group_swap_tree(n, k.ok_or_else(|| anyhow!("--kind k-group needs --k"))?)?,
        other => bail!("unknown tree kind {other:?}"),
    })
}

fn oracle_cmd(args: OracleArgs, kind: ScalarKind) -> Result<i32> {
    let tree = oracle_tree(&args.kind, args.n, args.k)?;
    let g = parse_g(&args.g)?;
    let m = args.m.unwrap_or(args.r);
    for trial in 0..args.trials {
        let trial_seed = derive_seed(args.seed, trial as u64);
        let (weights, disc) = match kind {
            ScalarKind::Rational => (
                random_weights(
                    &tree,
                    args.r,
                    trial_seed,
                    WeightDistribution::IntegerUniform { bound: 5 },
                )?,
                Discretizers::random_integer(m, args.r, 3, derive_seed(trial_seed, 1))?,
            ),
            ScalarKind::F64 => {
                let weights =
                    random_weights(&tree, args.r, trial_seed, WeightDistribution::UnitFloat)?;
                let mut rng_disc = Vec::new();
                for i in 0..m {
                    let w = random_weights(
                        &tree,
                        args.r,
                        derive_seed(trial_seed, 100 + i as u64),
                        WeightDistribution::UnitFloat,
                    )?;
                    let first = w.nodes().values().next().expect("interior node");
                    rng_disc.push(first.a_left[0].clone());
                }
                (weights, Discretizers::new(rng_disc)?)
            }
        };
        let dec = tree_decompose(&tree, &weights, &disc, g)?;
        let brute = grid_tensor_bruteforce(&tree, &weights, &disc, g)?;
        if let Some((y, idx)) = dec.first_difference(&brute, dec.count()) {
            let idx1: Vec<usize> = idx.iter().map(|d| d + 1).collect();
            println!(
                "oracle: MISMATCH at trial {trial}, tensor y={}, index {:?}",
                y + 1,
                idx1
            );
            return Ok(1);
        }
        println!(
            "oracle trial {trial}: decomposition matches brute force on {} entries (seed {trial_seed})",
            dec.count() * dec.get(0).len()
        );
    }
    Ok(0)
}

fn builtin_spec(n: usize, k: usize) -> Result<MixSpec> {
    let tree_a = build_baseline_tree(n)?;
    let tree_b = build_k_group_swap_tree(n, k)?;
    let levels = n.trailing_zeros() as usize;
    if levels <= k {
        bail!("need log2(n) > k for mixture nodes to exist");
    }
    let mixture = tree_a
        .labels_at_depth(levels - k)
        .into_iter()
        .filter(|label| tree_b.is_interior(label))
        .collect();
    Ok(MixSpec::new(tree_a, tree_b, mixture)?)
}

fn verify_claim1_cmd(args: VerifyClaim1Args) -> Result<i32> {
    if args.r_mix % 2 != 0 || args.r_mix == 0 {
        bail!("--r-mix must be even and positive");
    }
    let spec = match &args.spec {
        Some(path) => io::load_mix_spec(path)?,
        None => {
            let n = args.n.ok_or_else(|| anyhow!("need --spec FILE or --n"))?;
            builtin_spec(n, args.k.unwrap_or(2))?
        }
    };
    let g = parse_g(&args.g)?;
    let r_h = args.r_mix / 2;
    let hybrids = enumerate_hybrids(&spec)?;
    let selected: Vec<usize> = match args.hybrid {
        Some(i) if i < hybrids.len() => vec![i],
        Some(i) => bail!("--hybrid {i} out of range (0..{})", hybrids.len()),
        None => (0..hybrids.len()).collect(),
    };
    let mut all_pass = true;
    let mut reports = Vec::new();
    for &i in &selected {
        let report = verify_hybrid_replication(
            &spec,
            &hybrids[i],
            r_h,
            args.trials,
            derive_seed(args.seed, i as u64),
            g,
        )?;
        if report.pass {
            println!("hybrid {i}: PASS ({} trials)", report.trials);
        } else {
            all_pass = false;
            println!(
                "hybrid {i}: FAIL, first counterexample {:?}",
                report.first_counterexample
            );
        }
        reports.push(report);
    }
    if let Some(out) = args.out {
        io::write_json(
            &out,
            &serde_json::json!({
                "seed": args.seed,
                "r_mix": args.r_mix,
                "g": g,
                "hybrids_checked": selected,
                "reports": reports,
            }),
        )?;
    }
    println!(
        "replication check: {} ({} hybrids, {} trials each)",
        if all_pass { "PASS" } else { "FAIL" },
        selected.len(),
        args.trials
    );
    Ok(if all_pass { 0 } else { 1 })
}

fn verify_theorem1_cmd(args: VerifyTheorem1Args) -> Result<i32> {
    let tree = load_tree(&args.tree)?;
    let index_set = parse_set(&args.index_set)?;
    let g = parse_g(&args.g)?;
    let report = verify_rank_bounds(
        &tree,
        &args.tree.display().to_string(),
        &index_set,
        args.r,
        args.trials,
        args.seed,
        g,
    )?;
    println!(
        "bounds: lower = {}, upper = {} (exponents {} / {})",
        report.bounds.lower,
        report.bounds.upper,
        report.bounds.lower_exponent,
        report.bounds.upper_exponent
    );
    for t in &report.trials {
        println!(
            "trial {} (seed {}): ranks {:?}{}",
            t.trial,
            t.seed,
            t.ranks,
            if t.within_upper { "" } else { "  UPPER BOUND VIOLATED" }
        );
    }
    println!(
        "witness: ranks {:?}, meets lower bound: {}{}",
        report.witness.ranks,
        report.witness.meets_lower,
        if report.witness.degenerate {
            " (degenerate instance)"
        } else {
            ""
        }
    );
    if let Some(out) = &args.out {
        io::write_json(out, &report)?;
    }
    if let Some(csv) = &args.csv {
        io::write_rank_trials_csv(csv, &report)?;
    }
    let pass = report.hard_pass();
    println!("rank-bound check: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}

fn verify_generic_cmd(args: VerifyGenericArgs) -> Result<i32> {
    if args.bound < 3 {
        bail!("--bound must be >= 3");
    }
    let tree = load_tree(&args.tree)?;
    let index_set = parse_set(&args.index_set)?;
    let bounds = rank_bounds(&tree, &index_set, args.r as u64)?;
    let disc = Discretizers::identity(args.r, ScalarKind::Rational);
    let witness = if args.include_witness {
        Some(lower_bound_weights(&tree, &index_set, args.r)?)
    } else {
        None
    };
    let tree_ref = &tree;
    let disc_ref = &disc;
    let witness_ref = &witness;
    let report = genericity_check(
        move |trial, seed| {
            if trial == 0 {
                if let Some(w) = witness_ref {
                    return tree_decompose(tree_ref, &w.weights, disc_ref, BinaryOp::Product);
                }
            }
            let weights = random_weights(
                tree_ref,
                args.r,
                seed,
                WeightDistribution::IntegerUniform { bound: args.bound },
            )?;
            tree_decompose(tree_ref, &weights, disc_ref, BinaryOp::Product)
        },
        &index_set,
        args.trials,
        args.seed,
    )?;
    println!(
        "ranks over {} trials: distinct {:?}, modal {} (fraction {:.3})",
        report.trials, report.distinct_ranks, report.modal_rank, report.fraction_at_modal
    );
    let within = report
        .ranks_per_trial
        .iter()
        .flatten()
        .all(|&rk| bounds.admits(rk));
    if let Some(out) = &args.out {
        io::write_json(out, &report)?;
    }
    if !within {
        println!("UPPER BOUND VIOLATED (bound {})", bounds.upper);
        return Ok(1);
    }
    Ok(0)
}

fn separation_cmd(args: SeparationArgs) -> Result<i32> {
    let report = separation_report(args.k, args.n, args.r_mix, args.trials, args.seed)?;
    println!(
        "mixed achievable rank (via hybrid, r = {}): {}",
        report.r_tree, report.mixed_achievable_rank
    );
    println!(
        "individual tree upper bounds at r = {}: {} and {}",
        report.r_tree, report.tree_a_bounds.upper, report.tree_b_bounds.upper
    );
    println!(
        "summation bound: {} (measured sums: {:?})",
        report.summation_bound, report.summation_ranks
    );
    println!(
        "minimal r matching the mixed rank: {} (tree A), {} (tree B)",
        report.minimal_r_matching_a, report.minimal_r_matching_b
    );
    println!(
        "size lower-bound exponent {:.6}; bound {:.6}",
        report.corollary_exponent, report.corollary_bound
    );
    if report.degenerate {
        println!("degenerate instance (k <= 1 or no mixture nodes): no separation claimed");
    }
    println!(
        "separation: {}",
        if report.separated() { "ESTABLISHED" } else { "not established" }
    );
    if let Some(out) = &args.out {
        io::write_json(out, &report)?;
    }
    if let Some(csv) = &args.csv {
        io::write_rank_trials_csv(csv, &report.hybrid_report)?;
    }
    let hard_ok = report.hybrid_report.hard_pass() && report.summation_within_bound;
    Ok(if hard_ok { 0 } else { 1 })
}
