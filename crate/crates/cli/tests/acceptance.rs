//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every reference value is recomputed here from first principles.

use std::process::Command;
use std::time::{Duration, Instant};

use maxitive::asymptotics::{entropic_vs_choquet, largest_term_check, CapacitySequence};
use maxitive::convex::{biconjugate, fenchel_conjugate_nonneg, linspace, suggested_mu_max, Grid1D};
use maxitive::cramer::SampleModel;
use maxitive::generate::{random_bounded_increasing, random_preorder};
use maxitive::nonlinear::simple_staircase;
use maxitive::ExtReal;
use maxitive_cli::suite::{finite_suite, SuiteConfig, STAIRCASE_STEPS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

/// `ln C(n, k) + k ln p + (n - k) ln(1 - p)` from running sums of logs.
fn binomial_log_tail_oracle(n: u64, p: f64, k0: u64) -> f64 {
    let mut ln_fact = vec![0.0f64; n as usize + 1];
    for k in 1..=n as usize {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let terms: Vec<f64> = (k0..=n)
        .map(|k| {
            let (k, n) = (k as usize, n as usize);
            ln_fact[n] - ln_fact[k] - ln_fact[n - k] + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
        })
        .collect();
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn kl_bernoulli(a: f64, p: f64) -> f64 {
    let term = |x: f64, q: f64| if x == 0.0 { 0.0 } else { x * (x / q).ln() };
    term(a, p) + term(1.0 - a, 1.0 - p)
}

fn criterion_1() -> Outcome {
    let cfg = SuiteConfig::new(1, 500);
    let r = single_thread(|| finite_suite(&cfg));
    let c = &r.counts;
    let ok = r.passed
        && c.instances >= 500
        && r.max_size <= 6
        && c.cover_crosschecked > 0
        && c.weakly_maxitive > 0
        && c.not_weakly_maxitive > 0
        && c.uniqueness_checked == c.instances
        && c.equivalence_checks == 2 * c.instances
        && r.worst_gaps.laplace_minimal_rate <= 1e-9;
    pass(
        ok,
        format!(
            "{} instances ({} maxitive, {} not), {} cover cross-checks, {} violations, worst Laplace gap {:e}",
            c.instances,
            c.weakly_maxitive,
            c.not_weakly_maxitive,
            c.cover_crosschecked,
            r.violations.len(),
            r.worst_gaps.laplace_minimal_rate
        ),
    )
}

fn criterion_2() -> Outcome {
    let cfg = SuiteConfig::new(2, 500);
    let r = single_thread(|| finite_suite(&cfg));
    let c = &r.counts;
    let per_instance = c.representation_functions / c.representation_instances.max(1);
    // sandwich checked against a direct computation of the staircases
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sandwich_ok = true;
    for _ in 0..200 {
        let size = rng.random_range(1..=6);
        let space = random_preorder(&mut rng, size, 0.3);
        let (a, b) = (-2.0, 5.0);
        let f = random_bounded_increasing(&mut rng, &space, a, b);
        for n in 1..=STAIRCASE_STEPS {
            let st = match simple_staircase(&f, a, b, n) {
                Ok(s) => s,
                Err(_) => {
                    sandwich_ok = false;
                    continue;
                }
            };
            let h = (b - a) / n as f64;
            for (k, &v) in f.values().iter().enumerate() {
                let j_strict = ((v - a) / h).ceil() as i64 - 1;
                let j_weak = (((v - a) / h).floor() as i64).min(n as i64 - 1);
                let l = a + j_strict.max(0) as f64 * h;
                let u = a + j_weak as f64 * h;
                let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + y.abs());
                sandwich_ok &= close(st.lower[k], l) || (v - a) / h == ((v - a) / h).round();
                sandwich_ok &= close(st.upper[k], u);
                sandwich_ok &= v - h <= st.lower[k] + 1e-12 && st.lower[k] <= st.upper[k] && st.upper[k] <= v;
            }
        }
    }
    let ok = r.passed
        && c.representation_instances > 0
        && per_instance >= 100
        && r.worst_gaps.representation <= 1e-9
        && c.staircase_checks == STAIRCASE_STEPS * c.instances
        && sandwich_ok;
    pass(
        ok,
        format!(
            "{} maxitive instances x {} functions, worst gap {:e}, {} staircase chains, direct sandwich {}",
            c.representation_instances,
            per_instance,
            r.worst_gaps.representation,
            c.staircase_checks,
            if sandwich_ok { "ok" } else { "FAILED" }
        ),
    )
}

fn criterion_3() -> Outcome {
    let m = SampleModel::bernoulli(0.5).unwrap();
    let n = 2000u64;
    let exact = m.exact_tail_log(0.75, n).unwrap() / n as f64;
    let oracle = binomial_log_tail_oracle(n, 0.5, 1500) / n as f64;
    let limit = kl_bernoulli(0.75, 0.5);
    let mut rate_err = 0.0f64;
    for k in 0..=8 {
        let a = 0.55 + 0.05 * k as f64;
        rate_err = rate_err.max(m.monotone_cramer_rate(a).gap(ExtReal::of(kl_bernoulli(a, 0.5))).abs());
    }
    let zero_below = (0..=50).all(|k| m.monotone_cramer_rate(k as f64 / 100.0) == ExtReal::ZERO);
    let ok = (exact + 0.130812).abs() <= 0.005
        && (exact - oracle).abs() <= 1e-12
        && (limit - 0.130812).abs() < 5e-7
        && rate_err <= 1e-6
        && zero_below;
    pass(
        ok,
        format!(
            "(1/n) log P = {exact:.9} (oracle {oracle:.9}), KL limit {limit:.9}, max rate error {rate_err:.2e}, zero on a <= 0.5: {zero_below}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let m = SampleModel::gaussian(0.0, 1.0).unwrap();
    let n = 3000u64;
    let exact = m.exact_tail_log(1.0, n).unwrap() / n as f64;
    // Mills-ratio expansion of log Q(z) at z = sqrt(n)
    let z = (n as f64).sqrt();
    let series = 1.0 - 1.0 / z.powi(2) + 3.0 / z.powi(4) - 15.0 / z.powi(6);
    let oracle = (-0.5 * z * z - (z * (2.0 * std::f64::consts::PI).sqrt()).ln() + series.ln()) / n as f64;
    let rate = m.monotone_cramer_rate(1.0).get();
    let ok = (exact + 0.5).abs() <= 0.005 && (exact - oracle).abs() <= 1e-10 && (rate - 0.5).abs() <= 1e-9;
    pass(ok, format!("(1/n) log P = {exact:.9} (oracle {oracle:.9}), I(1) = {rate:.12}"))
}

/// Log pmf of the lattice position `sum_i offset_i` for `n` draws from a law
/// on offsets `0, 1, 3` (the points `-1, 0, 2`), summed over trinomial
/// compositions.
fn trinomial_log_law(n: usize, probs: [f64; 3], ln_fact: &[f64]) -> Vec<f64> {
    let lp = probs.map(f64::ln);
    let mut buckets = vec![Vec::new(); 3 * n + 1];
    for k1 in 0..=n {
        for k2 in 0..=n - k1 {
            let k0 = n - k1 - k2;
            let t = ln_fact[n] - ln_fact[k0] - ln_fact[k1] - ln_fact[k2]
                + k0 as f64 * lp[0]
                + k1 as f64 * lp[1]
                + k2 as f64 * lp[2];
            buckets[k1 + 3 * k2].push(t);
        }
    }
    buckets
        .iter()
        .map(|b| {
            let m = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                m
            } else {
                m + b.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
            }
        })
        .collect()
}

fn log_tail_from(law: &[f64], from: usize) -> f64 {
    let tail = &law[from.min(law.len())..];
    let m = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + tail.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

fn criterion_5() -> Outcome {
    let ns: Vec<u64> = (0..=10).map(|k| 1u64 << k).collect();
    let ln_fact: Vec<f64> = (0..=2048usize)
        .scan(0.0, |acc, k| {
            if k > 0 {
                *acc += (k as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let probs = [0.3, 0.5, 0.2];
    let models = [
        SampleModel::bernoulli(0.5).unwrap(),
        SampleModel::bernoulli(0.2).unwrap(),
        SampleModel::finite_support(vec![-1.0, 0.0, 2.0], probs.to_vec()).unwrap(),
    ];
    let mut checked = 0usize;
    let mut worst = f64::INFINITY;
    let mut worst_oracle = 0.0f64;
    let mut ok = true;
    let mut laws = std::collections::HashMap::new();
    for m in &models {
        let (lo, hi) = (m.support_min(), m.support_max());
        let grid: Vec<f64> = (0..=10).map(|k| lo + (hi - lo) * (0.05 + 0.09 * k as f64)).collect();
        let reports = maxitive::cramer::supermultiplicativity_grid(m, &grid, &ns).unwrap();
        for (&a, r) in grid.iter().zip(&reports) {
            ok &= r.holds;
            for &(n, twice, once) in &r.pairs {
                let mut oracle = |n: u64| match m {
                    SampleModel::Bernoulli { p } => {
                        let k0 = (n as f64 * a - 1e-9).ceil().max(0.0) as u64;
                        binomial_log_tail_oracle(n, *p, k0)
                    }
                    _ => {
                        let law = laws
                            .entry(n)
                            .or_insert_with(|| trinomial_log_law(n as usize, probs, &ln_fact));
                        // X_n >= a  <=>  position >= n (a + 1)
                        let from = (n as f64 * (a + 1.0) - 1e-9).ceil().max(0.0) as usize;
                        log_tail_from(law, from)
                    }
                };
                let (l2, l1) = (oracle(2 * n), oracle(n));
                for (got, want, size) in [(twice, l2, 2 * n), (once, l1, n)] {
                    let want = want / size as f64;
                    if want.is_finite() {
                        worst_oracle = worst_oracle.max((got.get() - want).abs());
                    } else {
                        ok &= got.get() == want;
                    }
                }
                // (1/2n) log P(X_2n >= a) >= (1/n) log P(X_n >= a), to 1e-12
                let (r2, r1) = (l2 / (2 * n) as f64, l1 / n as f64);
                ok &= r2 >= r1 - 1e-12 || r1 == f64::NEG_INFINITY;
                if r1.is_finite() {
                    worst = worst.min(r2 - r1);
                }
                checked += 1;
            }
        }
    }
    ok &= worst_oracle <= 1e-12;
    pass(
        ok,
        format!(
            "{checked} doubling pairs up to n = 2048, min rate margin {worst:.3e}, max deviation from oracle tails {worst_oracle:.1e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let tests: [(&str, fn(f64) -> f64); 3] = [
        ("x^2", |x| x * x),
        ("exp(x) - 1", |x| x.exp() - 1.0),
        ("(x - 1)_+^2", |x| (x - 1.0).max(0.0).powi(2)),
    ];
    let mut young_pairs = 0usize;
    for (_, f) in &tests {
        let i = Grid1D::linspace(0.0, 3.0, 301, f).unwrap();
        let mus = linspace(0.0, suggested_mu_max(&i).unwrap(), 1201).unwrap();
        let bi = biconjugate(&i, &mus).unwrap();
        for (k, (&b, &v)) in bi.values().iter().zip(i.values()).enumerate() {
            // recovered within two grid steps: I(x - 2h) <= I**(x) <= I(x)
            let below = i.values()[k.saturating_sub(2)];
            ok &= b <= v + 1e-12 && below.get() <= b.get() + 1e-12;
        }
        let conj = fenchel_conjugate_nonneg(&i, &mus).unwrap();
        for (mu, s) in mus.iter().zip(&conj.values) {
            for (x, v) in i.knots().iter().zip(i.values()) {
                ok &= mu * x <= v.get() + s.get() + 1e-12;
                young_pairs += 1;
            }
        }
    }
    let m = SampleModel::bernoulli(0.5).unwrap();
    let rate = Grid1D::linspace(0.0, 1.0, 2001, |x| m.monotone_cramer_rate(x).get()).unwrap();
    let mus = linspace(0.0, 3.0, 61).unwrap();
    let conj = fenchel_conjugate_nonneg(&rate, &mus).unwrap();
    let lambda_err = mus
        .iter()
        .zip(&conj.values)
        .map(|(&mu, v)| (v.get() - (0.5 + 0.5 * mu.exp()).ln()).abs())
        .fold(0.0, f64::max);
    ok &= lambda_err <= 0.01;
    pass(
        ok,
        format!("biconjugates within 2 steps, {young_pairs} Young pairs, Bernoulli conjugate vs Lambda max error {lambda_err:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let sched: Vec<u64> = (1..=20).map(|k| 100 * k).collect();
    // a_n = n e^{-n}, b_n = e^{-2n} + e^{-n/2}: limsup rates -1 and -1/2
    let a: Vec<f64> = sched.iter().map(|&n| (n as f64).ln() - n as f64).collect();
    let b: Vec<f64> = sched
        .iter()
        .map(|&n| {
            let (x, y) = (-2.0 * n as f64, -0.5 * n as f64);
            y + (x - y).exp().ln_1p()
        })
        .collect();
    let lt = largest_term_check(&sched, &[a, b]).unwrap();
    let lt_ok = lt.holds && (lt.combined.get() + 0.5).abs() <= 1e-3;

    let seq = CapacitySequence::MaxOfMeasures {
        components: vec![SampleModel::bernoulli(0.3).unwrap(), SampleModel::bernoulli(0.6).unwrap()],
    };
    let ec = entropic_vs_choquet(&seq, &|x| x, &sched).unwrap();
    let lambda_max = |mu: f64| {
        [0.3f64, 0.6]
            .iter()
            .map(|p| (1.0 - p + p * mu.exp()).ln())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let ec_ok = ec.gap <= 0.01 && (ec.entropic.value.get() - lambda_max(1.0)).abs() <= 0.01;
    let mut exact_err = 0.0f64;
    for mu in [0.25, 1.0, 2.5] {
        let r = entropic_vs_choquet(&seq, &move |x| mu * x, &sched).unwrap();
        for (_, v) in &r.entropic.trace {
            exact_err = exact_err.max((v.get() - lambda_max(mu)).abs());
        }
    }
    let ok = lt_ok && ec_ok && exact_err <= 1e-12;
    pass(
        ok,
        format!(
            "largest term {:.6} vs -0.5, entropic {:.6} vs Choquet {:.6} (gap {:.2e}), linear-f trace error {exact_err:.1e}",
            lt.combined.get(),
            ec.entropic.value.get(),
            ec.choquet.value.get(),
            ec.gap
        ),
    )
}

fn criterion_8() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_maxitive");
    let dir = tempfile::tempdir().expect("tempdir");
    let rate = dir.path().join("rate.csv");
    let mut text = String::from("x,I\n");
    for k in 0..=200 {
        let x = -2.0 + 0.02 * k as f64;
        text.push_str(&format!("{x},{}\n", 0.5 * x * x));
    }
    std::fs::write(&rate, text).unwrap();
    let conc = dir.path().join("j.json");
    std::fs::write(&conc, maxitive::fixtures::v_violation().to_json()).unwrap();
    let rate = rate.to_str().unwrap().to_string();
    let conc = conc.to_str().unwrap().to_string();
    let configs: Vec<Vec<String>> = vec![
        "finite --seed 5 --count 60".split(' ').map(String::from).collect(),
        "cramer --model bernoulli:0.4 --a-grid 0.5:0.9:0.1 --n-max 400 --trials 3000 --seed 11"
            .split(' ')
            .map(String::from)
            .collect(),
        "cramer --model finite:-1=0.3,0=0.5,2=0.2 --a-grid 0.5,1 --n-max 300 --format json"
            .split(' ')
            .map(String::from)
            .collect(),
        "asym --model bernoulli:0.3|bernoulli:0.6 --set a=0.7 --schedule 100:1000:100"
            .split(' ')
            .map(String::from)
            .collect(),
        "asym --model exponential:1 --set a=1.5 --schedule 10:40:10 --trials 5000 --seed 3 --format json"
            .split(' ')
            .map(String::from)
            .collect(),
        vec!["conjugate".into(), "--input".into(), rate, "--mu-points".into(), "50".into()],
        vec!["check".into(), "--input".into(), conc, "--samples".into(), "50".into(), "--seed".into(), "8".into()],
    ];
    let mut ok = true;
    let mut runs = 0;
    for cfg in &configs {
        let mut outputs = Vec::new();
        for threads in ["1", "1", "4", "4"] {
            let out = dir.path().join(format!("out{runs}"));
            let status = Command::new(bin)
                .args(cfg)
                .args(["--threads", threads, "--out", out.to_str().unwrap()])
                .status()
                .expect("binary runs");
            ok &= status.code() == Some(0);
            outputs.push(std::fs::read(&out).unwrap_or_default());
            runs += 1;
        }
        ok &= !outputs[0].is_empty() && outputs.iter().all(|o| o == &outputs[0]);
    }
    pass(ok, format!("{} configurations x 4 runs (threads 1 and 4), {runs} runs byte-identical", configs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("finite property suite", criterion_1, Duration::from_secs(60)),
        ("representation and staircases", criterion_2, Duration::from_secs(30)),
        ("monotone Cramer, Bernoulli(0.5)", criterion_3, Duration::from_secs(5)),
        ("monotone Cramer, Gaussian(0,1)", criterion_4, Duration::from_secs(1)),
        ("supermultiplicativity", criterion_5, Duration::from_secs(5)),
        ("Fenchel machinery", criterion_6, Duration::from_secs(5)),
        ("largest term and entropic vs Choquet", criterion_7, Duration::from_secs(60)),
        ("determinism of CLI output", criterion_8, Duration::from_secs(120)),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let ok = o.ok && in_time;
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {} [{}] {name}: {} ({:.2}s{})",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64(),
            if in_time { String::new() } else { format!(", over the {}s budget", budget.as_secs()) }
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
