//! The `cramer`, `asym`, `conjugate` and `check` subcommands.

use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use maxitive::analysis::{
    check_mldp, check_mlp_with_tol, is_weakly_maxitive, minimal_rate, BoundReport,
    MaxitivityWitness, INTEGRAL_TOL,
};
use maxitive::asymptotics::{log_rate_estimate, CapacitySequence, LimsupEstimate, Query};
use maxitive::convex::{dual_grid, fenchel_conjugate_nonneg, suggested_mu_max, ConjugateResult, Grid1D};
use maxitive::cramer::{default_schedule, tail_tolerance, verify_monotone_cramer, SampleModel};
use maxitive::ext::parse_token;
use maxitive::generate::random_increasing;
use maxitive::numeric::derive_seed;
use maxitive::{Concentration, ExtReal, IncreasingFn, Subset};

use crate::grid::{parse_float_grid, parse_schedule};
use crate::table::{Cell, Table};
use crate::{config, json_bytes, read_file, require_seed, CliResult, Format, GlobalOpts, Outcome};
use crate::{EXIT_OK, EXIT_VIOLATION};

fn parse_model(s: &str) -> CliResult<SampleModel> {
    Ok(s.parse::<SampleModel>()?)
}

#[derive(Debug, Args, Clone)]
pub struct CramerArgs {
    /// `bernoulli:P`, `gaussian:MEAN,VAR`, `exponential:RATE` or
    /// `finite:X=P,...`.
    #[arg(long)]
    pub model: String,
    /// Thresholds as `LO:HI:STEP` or a comma list.
    #[arg(long)]
    pub a_grid: String,
    #[arg(long, default_value_t = 2000)]
    pub n_max: u64,
    /// Monte Carlo trials per (a, n); 0 disables simulation.
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
}

#[derive(Serialize)]
struct CramerJson {
    report: Option<maxitive::cramer::RateReport>,
    simulated: Vec<SimRow>,
}

#[derive(Serialize, Clone)]
struct SimRow {
    a: f64,
    n: u64,
    estimate: ExtReal,
    lower: ExtReal,
    upper: ExtReal,
    hits: u64,
    trials: u64,
}

/// Exact tails when the model has them, simulated hit frequencies when
/// `--trials` is positive.
pub fn run_cramer(global: &GlobalOpts, args: &CramerArgs) -> CliResult<Outcome> {
    let model = parse_model(&args.model)?;
    let grid = parse_float_grid(&args.a_grid)?;
    if args.n_max == 0 {
        return config("--n-max must be positive");
    }
    if !model.has_exact_tail() && args.trials == 0 {
        return config(format!("{model} has no exact tail; pass --trials and --seed"));
    }
    let seed = if args.trials > 0 {
        Some(require_seed(global, "simulation")?)
    } else {
        None
    };
    let ns = default_schedule(args.n_max);
    let report = if model.has_exact_tail() {
        Some(verify_monotone_cramer(&model, &grid, args.n_max)?)
    } else {
        None
    };
    let mut sims: Vec<SimRow> = Vec::new();
    if let Some(seed) = seed {
        for (ai, &a) in grid.iter().enumerate() {
            for &n in &ns {
                let cell = derive_seed(derive_seed(seed, ai as u64), n);
                let e = model.empirical_j(a, n, args.trials, cell)?;
                sims.push(SimRow {
                    a,
                    n,
                    estimate: e.estimate,
                    lower: e.lower,
                    upper: e.upper,
                    hits: e.hits,
                    trials: e.trials,
                });
            }
        }
    }
    let tol = global.tol.unwrap_or_else(|| tail_tolerance(&model, args.n_max));
    let passes = match &report {
        Some(r) => r.points.iter().all(|p| p.gap <= tol && p.upper_bound_ok && p.open_limit_ok),
        None => true,
    };
    let status = if passes { EXIT_OK } else { EXIT_VIOLATION };
    let output = match global.format.unwrap_or(Format::Csv) {
        Format::Json => json_bytes(&CramerJson {
            report,
            simulated: sims,
        }),
        Format::Csv => {
            let mut header = vec!["a", "n", "log_tail_over_n", "rate_ref", "gap"];
            if seed.is_some() {
                header.extend(["mc_estimate", "mc_lower", "mc_upper"]);
            }
            let mut t = Table::new(&header);
            for (ai, &a) in grid.iter().enumerate() {
                let rate = model.reference_rate(a).unwrap_or_else(|| model.monotone_cramer_rate(a));
                for (ni, &n) in ns.iter().enumerate() {
                    let sim = seed.map(|_| &sims[ai * ns.len() + ni]);
                    let tail = match &report {
                        Some(r) => r.points[ai].trace[ni].1,
                        None => sim.expect("simulation present").estimate,
                    };
                    let gap = tail.gap(-rate).abs();
                    let mut row: Vec<Cell> =
                        vec![a.into(), n.into(), tail.into(), rate.into(), gap.into()];
                    if let Some(s) = sim {
                        row.extend([s.estimate.into(), s.lower.into(), s.upper.into()]);
                    }
                    t.row(row);
                }
            }
            t.into_bytes()
        }
    };
    Ok(Outcome { status, output })
}

#[derive(Debug, Args, Clone)]
pub struct AsymArgs {
    /// A sample model, or several joined by `|` for the maximum of their
    /// laws.
    #[arg(long)]
    pub model: String,
    /// `a=VALUE` for `[a, inf)` or `a>VALUE` for `(a, inf)`.
    #[arg(long)]
    pub set: String,
    /// `START:END:STEP` or a comma list.
    #[arg(long)]
    pub schedule: String,
    /// Simulate with this many trials per n instead of exact tails.
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    /// Expected limit; the run fails when the estimate is further than
    /// `--tol` (default 0.005) from it.
    #[arg(long, allow_hyphen_values = true)]
    pub expect: Option<f64>,
}

#[derive(Serialize)]
struct AsymJson<'a> {
    sequence: String,
    set: String,
    estimate: &'a LimsupEstimate,
    expected: Option<f64>,
}

pub fn run_asym(global: &GlobalOpts, args: &AsymArgs) -> CliResult<Outcome> {
    let models: Vec<SampleModel> = args.model.split('|').map(parse_model).collect::<CliResult<_>>()?;
    let query = Query::parse(args.set.trim())?;
    let schedule = parse_schedule(&args.schedule)?;
    let seq = if args.trials > 0 {
        if models.len() != 1 {
            return config("simulation takes a single model");
        }
        CapacitySequence::MonteCarlo {
            model: models[0].clone(),
            trials: args.trials,
            seed: require_seed(global, "simulation")?,
        }
    } else if models.len() == 1 {
        CapacitySequence::exact(&models[0])?
    } else {
        if let Some(m) = models.iter().find(|m| !m.has_exact_tail()) {
            return config(format!("{m} has no exact tail"));
        }
        CapacitySequence::MaxOfMeasures { components: models }
    };
    let est = log_rate_estimate(&seq, &query, &schedule)?;
    let status = match args.expect {
        Some(x) if est.value.gap(ExtReal::of(x)).abs() > global.tol.unwrap_or(0.005) => EXIT_VIOLATION,
        _ => EXIT_OK,
    };
    let output = match global.format.unwrap_or(Format::Csv) {
        Format::Json => json_bytes(&AsymJson {
            sequence: format!("{seq:?}"),
            set: query.to_string(),
            estimate: &est,
            expected: args.expect,
        }),
        Format::Csv => {
            let mut t = Table::new(&["n", "log_mu", "rate_trace"]);
            for &(n, v) in &est.trace {
                t.row(vec![n.into(), v.scale(n as f64).into(), v.into()]);
            }
            t.into_bytes()
        }
    };
    Ok(Outcome { status, output })
}

#[derive(Debug, Args, Clone)]
pub struct ConjugateArgs {
    /// CSV with header `x,I`; `inf` marks points outside the domain.
    #[arg(long)]
    pub input: PathBuf,
    /// Largest dual point; defaults to the steepest slope of the input.
    #[arg(long)]
    pub mu_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub mu_points: usize,
    /// Equally spaced dual grid instead of the default geometric one.
    #[arg(long)]
    pub linear: bool,
}

/// Reads `x,I` rows; the header line is optional.
pub fn read_rate_csv(text: &str) -> CliResult<Grid1D> {
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 2 {
            return config(format!("line {}: expected two columns", k + 1));
        }
        let x = parts[0].trim().parse::<f64>();
        let v = parse_token(parts[1]);
        match (x, v) {
            (Ok(x), Some(v)) => {
                knots.push(x);
                values.push(v);
            }
            _ if k == 0 && knots.is_empty() => continue,
            _ => return config(format!("line {}: bad row {line:?}", k + 1)),
        }
    }
    if knots.is_empty() {
        return config("rate file has no rows");
    }
    Ok(Grid1D::new(knots, values)?)
}

pub fn run_conjugate(global: &GlobalOpts, args: &ConjugateArgs) -> CliResult<Outcome> {
    let grid = read_rate_csv(&read_file(&args.input)?)?;
    let mu_max = match args.mu_max {
        Some(m) if m > 0.0 && m.is_finite() => m,
        Some(m) => return config(format!("--mu-max {m} must be positive")),
        None => suggested_mu_max(&grid).unwrap_or(1.0),
    };
    if args.mu_points < 2 {
        return config("--mu-points must be at least 2");
    }
    let mus = if args.linear {
        maxitive::convex::linspace(0.0, mu_max, args.mu_points)?
    } else {
        dual_grid(mu_max, args.mu_points)?
    };
    let conj: ConjugateResult = fenchel_conjugate_nonneg(&grid, &mus)?;
    let output = match global.format.unwrap_or(Format::Csv) {
        Format::Json => json_bytes(&conj),
        Format::Csv => {
            let mut t = Table::new(&["mu", "I_star", "argmax_x"]);
            for ((&mu, &v), arg) in conj.mu_knots.iter().zip(&conj.values).zip(&conj.argmax) {
                t.row(vec![mu.into(), v.into(), arg.map(|k| grid.knots()[k]).into()]);
            }
            t.into_bytes()
        }
    };
    Ok(Outcome {
        status: EXIT_OK,
        output,
    })
}

#[derive(Debug, Args, Clone)]
pub struct CheckArgs {
    /// Concentration JSON (`poset`, `upsets`, `values`).
    #[arg(long)]
    pub input: PathBuf,
    /// Random increasing test functions on top of the up-set steps; needs
    /// `--seed` when positive.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub weakly_maxitive: bool,
    #[serde(rename = "I_min")]
    pub i_min: Vec<ExtReal>,
    pub mldp: BoundReport<Subset>,
    pub mlp_sampled: MlpSampled,
    pub witnesses: Witnesses,
}

#[derive(Debug, Serialize)]
pub struct MlpSampled {
    pub functions: usize,
    pub bounds: BoundReport<usize>,
}

#[derive(Debug, Serialize)]
pub struct Witnesses {
    pub maxitivity: Option<MaxitivityWitness>,
    pub mldp_upper: Option<Subset>,
    pub mlp_upper: Option<Vec<ExtReal>>,
}

/// Classification of a concentration against its minimal rate.
pub fn check_concentration(j: &Concentration, samples: usize, seed: u64, tol: f64) -> CliResult<CheckReport> {
    let space = j.space();
    let weak = is_weakly_maxitive(j);
    let i_min = minimal_rate(j);
    let mldp = check_mldp(j, &i_min);
    let mut fns: Vec<IncreasingFn> = j
        .family()
        .iter()
        .filter(|a| !a.is_empty())
        .map(|a| IncreasingFn::step(space, a, 0.0, f64::NEG_INFINITY))
        .collect::<maxitive::Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fns.extend((0..samples).map(|_| random_increasing(&mut rng, space)));
    let bounds = check_mlp_with_tol(j, &i_min, &fns, tol)?;
    let mlp_upper = bounds
        .upper_witness
        .map(|k| fns[k].values().iter().map(|&v| ExtReal::of(v)).collect());
    Ok(CheckReport {
        weakly_maxitive: weak.verdict,
        i_min: i_min.values().to_vec(),
        witnesses: Witnesses {
            maxitivity: weak.witness,
            mldp_upper: mldp.upper_witness,
            mlp_upper,
        },
        mldp,
        mlp_sampled: MlpSampled {
            functions: fns.len(),
            bounds,
        },
    })
}

pub fn run_check(global: &GlobalOpts, args: &CheckArgs) -> CliResult<Outcome> {
    if global.format == Some(Format::Csv) {
        return config("check writes JSON only");
    }
    let j = Concentration::from_json(&read_file(&args.input)?)?;
    let seed = if args.samples > 0 {
        require_seed(global, "sampling")?
    } else {
        0
    };
    let report = check_concentration(&j, args.samples, seed, global.tol.unwrap_or(INTEGRAL_TOL))?;
    // the upper bound for I_min fails exactly when J is not weakly maxitive
    let consistent = report.mldp.upper_ok == report.weakly_maxitive
        && report.mldp.lower_ok
        && report.mlp_sampled.bounds.upper_ok == report.mldp.upper_ok;
    Ok(Outcome {
        status: if consistent { EXIT_OK } else { EXIT_VIOLATION },
        output: json_bytes(&report),
    })
}
