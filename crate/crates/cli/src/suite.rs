//! Seeded suite over random finite preorders and concentrations.
//!
//! Each instance draws its own generator from `derive_seed(seed, index)`, so
//! the report does not depend on the number of worker threads.

use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use maxitive::analysis::{
    check_mldp, check_mlp_with_tol, is_completely_maxitive, is_tight, is_weakly_maxitive,
    minimal_rate, rate_minimality_check, weakly_maxitive_by_covers, MaxitivityWitness,
    INTEGRAL_TOL,
};
use maxitive::generate::{
    random_bounded_increasing, random_concentration, random_increasing, random_maxitive,
    random_preorder, random_rate,
};
use maxitive::nonlinear::{representation_gap_with, simple_staircase, staircase_chain, FunctionalModel};
use maxitive::numeric::derive_seed;
use maxitive::{Concentration, ExtReal, FinitePreorder, IncreasingFn, RateFunction};

use crate::{config, json_bytes, read_file, require_seed, CliResult, Format, GlobalOpts, Outcome};

/// Staircase resolutions checked on every instance.
pub const STAIRCASE_STEPS: usize = 64;
const STAIRCASE_RANGE: (f64, f64) = (-3.0, 3.0);
const TIGHTNESS_EPS: [f64; 3] = [0.05, 0.5, 2.0];
const EXAMPLE_LIMIT: usize = 5;

#[derive(Debug, Args, Clone)]
pub struct FiniteArgs {
    /// Number of random (preorder, concentration) pairs.
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    /// Largest preorder size drawn.
    #[arg(long, default_value_t = 6)]
    pub max_size: usize,
    /// Random increasing functions per instance.
    #[arg(long, default_value_t = 100)]
    pub fns: usize,
    /// Largest size on which the brute-force cover oracle runs.
    #[arg(long, default_value_t = 5)]
    pub cover_max: usize,
    /// Fixed preorder in text form (`n`, then `x <= y` lines).
    #[arg(long)]
    pub poset: Option<PathBuf>,
    /// Concentration JSON to classify alongside the random instances.
    #[arg(long)]
    pub planted: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub count: usize,
    pub max_size: usize,
    pub fns: usize,
    pub cover_max: usize,
    pub tol: f64,
    pub poset: Option<FinitePreorder>,
    pub planted: Option<Concentration>,
}

impl SuiteConfig {
    pub fn new(seed: u64, count: usize) -> Self {
        SuiteConfig {
            seed,
            count,
            max_size: 6,
            fns: 100,
            cover_max: 5,
            tol: INTEGRAL_TOL,
            poset: None,
            planted: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counts {
    pub instances: usize,
    pub weakly_maxitive: usize,
    pub not_weakly_maxitive: usize,
    pub cover_crosschecked: usize,
    pub recovery_checked: usize,
    pub equivalence_checks: usize,
    pub uniqueness_checked: usize,
    pub uniqueness_on_sample: usize,
    pub minimality_checked: usize,
    pub tightness_checked: usize,
    pub representation_instances: usize,
    pub representation_functions: usize,
    pub staircase_checks: usize,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.instances += o.instances;
        self.weakly_maxitive += o.weakly_maxitive;
        self.not_weakly_maxitive += o.not_weakly_maxitive;
        self.cover_crosschecked += o.cover_crosschecked;
        self.recovery_checked += o.recovery_checked;
        self.equivalence_checks += o.equivalence_checks;
        self.uniqueness_checked += o.uniqueness_checked;
        self.uniqueness_on_sample += o.uniqueness_on_sample;
        self.minimality_checked += o.minimality_checked;
        self.tightness_checked += o.tightness_checked;
        self.representation_instances += o.representation_instances;
        self.representation_functions += o.representation_functions;
        self.staircase_checks += o.staircase_checks;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WorstGaps {
    /// `max |phi_J(f) - sup{f - I_min}|` over weakly maxitive instances.
    pub laplace_minimal_rate: f64,
    /// `max |phi_J(f) - phi_{J^phi}(f)|`.
    pub representation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub instance: usize,
    pub check: &'static str,
    pub detail: String,
    pub witness: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example {
    pub instance: usize,
    pub poset: maxitive::preorder::PreorderDoc,
    pub witness: Option<MaxitivityWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedReport {
    pub classification: &'static str,
    pub weakly_maxitive: bool,
    pub witness: Option<MaxitivityWitness>,
    pub i_min: Vec<ExtReal>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub max_size: usize,
    pub fns_per_instance: usize,
    pub tol: f64,
    pub counts: Counts,
    pub worst_gaps: WorstGaps,
    pub violations: Vec<Violation>,
    /// A few instances classified as not weakly maxitive, with witnesses.
    pub not_maxitive_examples: Vec<Example>,
    pub planted: Option<PlantedReport>,
    pub passed: bool,
}

#[derive(Default)]
struct InstanceOutcome {
    counts: Counts,
    gaps: WorstGaps,
    violations: Vec<Violation>,
    example: Option<Example>,
}

impl InstanceOutcome {
    fn fail(&mut self, instance: usize, check: &'static str, detail: String, witness: Value) {
        self.violations.push(Violation {
            instance,
            check,
            detail,
            witness,
        });
    }
}

pub fn classify(j: &Concentration) -> PlantedReport {
    let m = is_weakly_maxitive(j);
    PlantedReport {
        classification: if m.verdict {
            "weakly maxitive"
        } else {
            "not weakly maxitive"
        },
        weakly_maxitive: m.verdict,
        witness: m.witness,
        i_min: minimal_rate(j).values().to_vec(),
    }
}

/// Runs the suite. Instances are evaluated in parallel and merged in index
/// order.
pub fn finite_suite(cfg: &SuiteConfig) -> SuiteReport {
    let outcomes: Vec<InstanceOutcome> = (0..cfg.count)
        .into_par_iter()
        .map(|i| {
            let mut out = InstanceOutcome::default();
            if let Err(e) = run_instance(cfg, i, &mut out) {
                out.fail(i, "internal_error", e.to_string(), Value::Null);
            }
            out
        })
        .collect();
    let mut counts = Counts::default();
    let mut gaps = WorstGaps::default();
    let mut violations = Vec::new();
    let mut examples = Vec::new();
    for o in outcomes {
        counts.add(&o.counts);
        gaps.laplace_minimal_rate = gaps.laplace_minimal_rate.max(o.gaps.laplace_minimal_rate);
        gaps.representation = gaps.representation.max(o.gaps.representation);
        violations.extend(o.violations);
        if let Some(e) = o.example {
            if examples.len() < EXAMPLE_LIMIT {
                examples.push(e);
            }
        }
    }
    SuiteReport {
        seed: cfg.seed,
        max_size: cfg.max_size,
        fns_per_instance: cfg.fns,
        tol: cfg.tol,
        counts,
        worst_gaps: gaps,
        passed: violations.is_empty(),
        violations,
        not_maxitive_examples: examples,
        planted: cfg.planted.as_ref().map(classify),
    }
}

fn ext_vec(v: &[f64]) -> Vec<ExtReal> {
    v.iter().map(|&x| ExtReal::of(x)).collect()
}

fn run_instance(cfg: &SuiteConfig, i: usize, out: &mut InstanceOutcome) -> maxitive::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, i as u64));
    let space = match &cfg.poset {
        Some(p) => p.clone(),
        None => {
            let n = rng.random_range(1..=cfg.max_size);
            let density = rng.random_range(0.1..0.6);
            random_preorder(&mut rng, n, density)
        }
    };
    let j = if rng.random_bool(0.5) {
        random_maxitive(&mut rng, &space)
    } else {
        random_concentration(&mut rng, &space)
    };
    let poset_json = || json!(maxitive::preorder::PreorderDoc::from(&space));
    let j_json = || serde_json::to_value(j.to_doc()).expect("serializes");
    out.counts.instances = 1;

    // weak maxitivity: principal criterion, cover oracle, complete maxitivity
    let weak = is_weakly_maxitive(&j);
    if weak.verdict {
        out.counts.weakly_maxitive = 1;
    } else {
        out.counts.not_weakly_maxitive = 1;
        out.example = Some(Example {
            instance: i,
            poset: (&space).into(),
            witness: weak.witness.clone(),
        });
    }
    if space.size() <= cfg.cover_max {
        out.counts.cover_crosschecked = 1;
        let cover = weakly_maxitive_by_covers(&j);
        if cover.verdict != weak.verdict {
            out.fail(
                i,
                "principal_vs_cover",
                format!("principal {} but cover oracle {}", weak.verdict, cover.verdict),
                json!({"concentration": j_json(), "principal": weak.witness, "cover": cover.witness}),
            );
        }
    }
    if is_completely_maxitive(&j)? != weak.verdict {
        out.fail(i, "complete_vs_weak", "verdicts differ".into(), j_json());
    }

    // recovery of J from I_min
    let i_min = minimal_rate(&j);
    // without weak maxitivity inf I_min can be positive, and then J(I_min)
    // is not a concentration at all
    let recovered = Concentration::from_rate(space.clone(), &i_min).ok();
    let same = recovered.as_ref().is_some_and(|r| r.values() == j.values());
    out.counts.recovery_checked = 1;
    if same != weak.verdict {
        out.fail(
            i,
            "recovery",
            format!("J == J(I_min) is {same} but weak maxitivity is {}", weak.verdict),
            json!({"concentration": j_json(), "recovered": recovered.map(|r| r.values().to_vec())}),
        );
    }

    // set-level bounds against integral-level bounds, both directions
    let family = space.enumerate_up_sets()?;
    let mut tests: Vec<IncreasingFn> = family
        .iter()
        .filter(|a| !a.is_empty())
        .map(|a| IncreasingFn::step(&space, a, 0.0, f64::NEG_INFINITY))
        .collect::<maxitive::Result<_>>()?;
    tests.extend((0..cfg.fns).map(|_| random_increasing(&mut rng, &space)));
    let random = random_rate(&mut rng, space.size());
    for (label, rate) in [("minimal", &i_min), ("random", &random)] {
        let set = check_mldp(&j, rate);
        let integral = check_mlp_with_tol(&j, rate, &tests, cfg.tol)?;
        out.counts.equivalence_checks += 1;
        if set.lower_ok != integral.lower_ok || set.upper_ok != integral.upper_ok {
            let w = integral
                .lower_witness
                .or(integral.upper_witness)
                .map(|k| ext_vec(tests[k].values()));
            out.fail(
                i,
                "bounds_vs_integral_bounds",
                format!(
                    "{label} rate: set bounds ({}, {}) but integral bounds ({}, {})",
                    set.lower_ok, set.upper_ok, integral.lower_ok, integral.upper_ok
                ),
                json!({"concentration": j_json(), "rate": rate.values(), "set": set, "function": w}),
            );
        }
        if label == "minimal" {
            if !set.lower_ok || set.upper_ok != weak.verdict {
                out.fail(
                    i,
                    "minimal_rate_bounds",
                    format!(
                        "lower bound {} and upper bound {} with weak maxitivity {}",
                        set.lower_ok, set.upper_ok, weak.verdict
                    ),
                    json!({"concentration": j_json(), "set": set}),
                );
            }
            if weak.verdict && integral.both_ok() {
                let worst = (-integral.worst_gap_lower.get())
                    .max(-integral.worst_gap_upper.get())
                    .max(0.0);
                out.gaps.laplace_minimal_rate = out.gaps.laplace_minimal_rate.max(worst);
            }
        }
    }

    // an increasing rate satisfying both bounds equals I_min
    let inc = RateFunction::new(space.increasing_envelope(&random.as_f64())?)?;
    let j_inc = Concentration::from_rate(space.clone(), &inc)?;
    out.counts.uniqueness_checked = 1;
    let bounds = check_mldp(&j_inc, &inc);
    if !bounds.both_ok() || minimal_rate(&j_inc) != inc {
        out.fail(
            i,
            "uniqueness",
            "increasing rate with both bounds differs from I_min".into(),
            json!({"rate": inc.values(), "minimal": minimal_rate(&j_inc).values(), "bounds": bounds}),
        );
    }
    if check_mldp(&j, &inc).both_ok() {
        out.counts.uniqueness_on_sample = 1;
        if minimal_rate(&j) != inc {
            out.fail(
                i,
                "uniqueness",
                "increasing rate with both bounds differs from I_min".into(),
                json!({"concentration": j_json(), "rate": inc.values()}),
            );
        }
    }

    // envelope comparison with I_min
    let report = rate_minimality_check(&j, &random)?;
    if !report.precondition_flagged {
        out.counts.minimality_checked = 1;
        if !report.holds() {
            out.fail(
                i,
                "minimality",
                "envelope comparison with I_min fails".into(),
                json!({"concentration": j_json(), "rate": random.values(), "report": report}),
            );
        }
    }

    let tight = is_tight(&j, &TIGHTNESS_EPS)?;
    out.counts.tightness_checked = 1;
    if !tight.tight {
        out.fail(i, "tightness", "K = E fails".into(), json!({"failures": tight.failures}));
    }

    // representation: J^{phi_J} recovers phi_J
    let psi = FunctionalModel::WrappedMaxitive(j.clone());
    let induced = psi.induced_concentration()?;
    if weak.verdict {
        out.counts.representation_instances = 1;
        let (lo, hi) = STAIRCASE_RANGE;
        let mut fns = Vec::with_capacity(cfg.fns);
        for k in 0..cfg.fns {
            if k % 2 == 0 {
                fns.push(random_increasing(&mut rng, &space));
            } else {
                let f = random_bounded_increasing(&mut rng, &space, lo, hi);
                let n = rng.random_range(1..=STAIRCASE_STEPS);
                fns.push(IncreasingFn::new(&space, simple_staircase(&f, lo, hi, n)?.lower)?);
            }
        }
        out.counts.representation_functions = fns.len();
        let gap = representation_gap_with(&psi, &induced, &fns)?;
        out.gaps.representation = gap;
        if induced.values() != j.values() || !(gap <= cfg.tol) {
            out.fail(
                i,
                "representation",
                format!("representation gap {gap:e}"),
                json!({"concentration": j_json(), "induced": induced.values()}),
            );
        }
    }

    // staircase sandwich and chain for N = 1..64
    let (lo, hi) = STAIRCASE_RANGE;
    let f = random_bounded_increasing(&mut rng, &space, lo, hi);
    for n in 1..=STAIRCASE_STEPS {
        out.counts.staircase_checks += 1;
        let ok = match staircase_chain(&psi, &j, &f, lo, hi, n) {
            Ok(c) => c.holds,
            Err(_) => false,
        };
        if !ok {
            out.fail(
                i,
                "staircase",
                format!("sandwich or chain fails at N = {n}"),
                json!({"poset": poset_json(), "f": f.values()}),
            );
        }
    }
    Ok(())
}

pub fn run_finite(global: &GlobalOpts, args: &FiniteArgs) -> CliResult<Outcome> {
    if global.format == Some(Format::Csv) {
        return config("finite writes JSON only");
    }
    let seed = require_seed(global, "finite")?;
    if args.count == 0 {
        return config("--count must be positive");
    }
    if args.max_size == 0 || args.max_size > 12 {
        return config("--max-size must be between 1 and 12");
    }
    let mut cfg = SuiteConfig::new(seed, args.count);
    cfg.max_size = args.max_size;
    cfg.fns = args.fns;
    cfg.cover_max = args.cover_max;
    if let Some(t) = global.tol {
        if !(t >= 0.0 && t.is_finite()) {
            return config("--tol must be finite and nonnegative");
        }
        cfg.tol = t;
    }
    if let Some(path) = &args.poset {
        let p = FinitePreorder::parse(&read_file(path)?)?;
        if p.size() > cfg.max_size {
            return config(format!(
                "poset has {} elements, above --max-size {}",
                p.size(),
                cfg.max_size
            ));
        }
        cfg.poset = Some(p);
    }
    if let Some(path) = &args.planted {
        cfg.planted = Some(Concentration::from_json(&read_file(path)?)?);
    }
    let report = finite_suite(&cfg);
    Ok(Outcome {
        status: if report.passed {
            crate::EXIT_OK
        } else {
            crate::EXIT_VIOLATION
        },
        output: json_bytes(&report),
    })
}
