//! Acceptance suite: one PASS/FAIL line per criterion and a summary line.
//! Exits non-zero on a failure only when `UPPNC_ACCEPTANCE_STRICT` is set, so the
//! report can run as part of the ordinary test run.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uppnc::cli::{bench, BenchClass, BenchRecord};
use uppnc::curves::{add_jump, equivalent, make_rate_latency, Curve};
use uppnc::flowcontrol::{
    approx_equivalent, delay_bound, exact_equivalent, per_node_approx, per_node_exact, Analyzer, ArrivalSpec,
    NodeSpec, PipelineOptions, TandemSpec,
};
use uppnc::minimize::minimize_with_report;
use uppnc::minplus::{convolution, minimum};
use uppnc::numerics::{int, rat, Rational};
use uppnc::oracles::{
    conv_oracle_eval, random_curve, random_equal_rate_pair, random_staircase_pair, random_times, RandomCurveSpec,
    StaircaseSpec,
};
use uppnc::subadd::{conv_optimized, sac, sac_rate_latency_jump, self_conv_min, ConvOptions};
use uppnc::{ExtendedRational as Ext, Result};

/// Element-count slack for representation-boundary conventions.
const CARDINALITY_TOLERANCE: usize = 2;
const APPROX_PIPELINE_LIMIT: Duration = Duration::from_secs(1);
const HOMOGENEOUS_MAX_NODES: usize = 6;
const STAIRCASE_PAIRS: usize = 200;
const STAIRCASE_BUDGET: Duration = Duration::from_secs(600);
const CLASS_TRIALS: usize = 25;
const DOMINANCE_MIN_SPEEDUP: f64 = 100.0;
const INCOMPARABLE_MAX_MEDIAN_RATIO: f64 = 0.9;
const INCOMPARABLE_MIN_SHARE_NOT_SLOWER: f64 = 0.8;
const REFERENCE_RAW_PRODUCT: usize = 270;
const REFERENCE_MINIMIZED_PRODUCT: usize = 42;
const RANDOM_MINIMIZE_CURVES: usize = 100;
const SUBADDITIVITY_PAIRS: usize = 10_000;
const PROPERTY_PAIRS: usize = 50;
const CLOSED_FORM_TRIPLES: usize = 50;
const ORACLE_PAIRS: usize = 100;
const ORACLE_TIMES: usize = 200;

type Outcome = Result<(bool, String)>;

fn within(actual: usize, expected: usize) -> bool {
    actual.abs_diff(expected) <= CARDINALITY_TOLERANCE
}

fn tandem(nodes: &[(i64, i64)], windows: &[i64]) -> TandemSpec {
    TandemSpec::new(
        nodes.iter().map(|&(r, t)| NodeSpec::new(int(r), int(t)).unwrap()).collect(),
        windows.iter().map(|&w| Ext::from_int(w)).collect(),
    )
    .unwrap()
}

fn exact_tandem() -> TandemSpec {
    tandem(&[(8, 5), (11, 7), (12, 4), (1, 5)], &[3, 7, 3])
}

fn approx_tandem() -> TandemSpec {
    tandem(&[(21, 15), (30, 17), (7, 27), (21, 20)], &[23, 29, 20])
}

fn homogeneous(n: usize) -> TandemSpec {
    let windows = (0..n - 1).map(|k| Ext::from_int(13 + 2 * k as i64)).collect();
    TandemSpec::homogeneous(NodeSpec::new(int(16), int(2)).unwrap(), windows).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn exact_pipeline_cardinalities() -> Outcome {
    let mut a = Analyzer::default();
    let start = Instant::now();
    let curve = a.exact_equivalent(&exact_tandem())?;
    let elapsed = start.elapsed();
    let closures: Vec<(usize, usize)> = a
        .records
        .iter()
        .filter(|r| r.operation.starts_with("sac") && r.operation != "sac_closed")
        .map(|r| (r.operands[0], r.result_cardinality))
        .collect();
    let shape = closures.len() == 2 && within(closures[0].0, 10) && within(closures[0].1, 10)
        && within(closures[1].0, 14) && within(closures[1].1, 6);
    // the unminimized pipeline describes the same function
    let mut plain = Analyzer::new(PipelineOptions { minimize: false, ..Default::default() });
    let same = equivalent(&plain.exact_equivalent(&exact_tandem())?, &curve)?;
    Ok((shape && same, format!("closures {closures:?}, unminimized run equivalent: {same}, {elapsed:?}")))
}

fn approx_pipeline_cardinalities() -> Outcome {
    let mut a = Analyzer::default();
    let start = Instant::now();
    a.approx_equivalent(&approx_tandem())?;
    let elapsed = start.elapsed();
    let factors: Vec<usize> =
        a.records.iter().filter(|r| r.operation == "sac_closed").map(|r| r.result_cardinality).collect();
    let products: Vec<(Vec<usize>, usize)> = a
        .records
        .iter()
        .filter(|r| r.operation == "conv_sac")
        .map(|r| (r.operands.clone(), r.result_cardinality))
        .collect();
    let ok = factors.len() == 3
        && factors.iter().all(|&n| within(n, 6))
        && products.len() == 2
        && within(products[0].1, 42)
        && within(products[1].0[0], 42)
        && within(products[1].0[1], 6)
        && within(products[1].1, 6)
        && elapsed < APPROX_PIPELINE_LIMIT;
    Ok((ok, format!("factors {factors:?}, products {products:?}, {elapsed:?}")))
}

fn homogeneous_equality() -> Outcome {
    let mut verdicts = Vec::new();
    for n in 2..=HOMOGENEOUS_MAX_NODES {
        let t = homogeneous(n);
        verdicts.push(equivalent(&exact_equivalent(&t)?, &approx_equivalent(&t)?)?);
    }
    Ok((verdicts.iter().all(|v| *v), format!("n = 2..={HOMOGENEOUS_MAX_NODES}: {verdicts:?}")))
}

fn first_node_gap() -> Outcome {
    let t = tandem(&[(16, 2), (16, 2), (16, 2)], &[20, 13]);
    let e = per_node_exact(&t, 1)?;
    let a = per_node_approx(&t, 1)?;
    let horizon = std::cmp::max(e.horizon(), a.horizon()) * int(3);
    let times = random_times(&mut ChaCha8Rng::seed_from_u64(4), &horizon, 1000);
    let above = times.iter().all(|s| e.eval(s) >= a.eval(s));
    let strict = times.iter().filter(|s| e.eval(s) > a.eval(s)).count();
    let end_to_end = equivalent(&exact_equivalent(&t)?, &approx_equivalent(&t)?)?;
    Ok((above && strict > 0 && end_to_end, format!("strictly above at {strict}/1000 samples, end-to-end equal: {end_to_end}")))
}

fn optimized_convolution_correctness() -> Outcome {
    let spec = StaircaseSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut agree = 0;
    for k in 0..STAIRCASE_PAIRS {
        let (f, g) = if k % 2 == 0 { random_equal_rate_pair(&mut rng, &spec) } else { random_staircase_pair(&mut rng, &spec) };
        let (fast, _) = conv_optimized(&f, &g, &ConvOptions::default())?;
        if equivalent(&fast, &convolution(&f, &g)?)? {
            agree += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = agree == STAIRCASE_PAIRS && elapsed < STAIRCASE_BUDGET;
    Ok((ok, format!("{agree}/{STAIRCASE_PAIRS} equivalent in {elapsed:?}")))
}

fn trials(class: BenchClass, seed: u64) -> Result<Vec<(BenchRecord, BenchRecord)>> {
    let rows = bench(seed, CLASS_TRIALS, Some(class), &StaircaseSpec::default())?;
    Ok(rows.chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect())
}

fn speedup_direction() -> Outcome {
    let dominance = trials(BenchClass::Dominance, 61)?;
    let free = dominance.iter().all(|(_, o)| o.elementary_convolutions == 0 && o.equivalent);
    let speedup = median(
        dominance.iter().map(|(b, o)| b.elapsed.as_secs_f64() / o.elapsed.as_secs_f64().max(1e-9)).collect(),
    );
    let incomparable = trials(BenchClass::Neither, 62)?;
    let ratios: Vec<f64> =
        incomparable.iter().map(|(b, o)| o.elapsed.as_secs_f64() / b.elapsed.as_secs_f64().max(1e-9)).collect();
    let not_slower = ratios.iter().filter(|r| **r <= 1.0).count() as f64 / ratios.len() as f64;
    let ratio = median(ratios);
    let exact = incomparable.iter().all(|(_, o)| o.equivalent);

    let spec = StaircaseSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(63);
    let mut bound_holds = true;
    for _ in 0..CLASS_TRIALS {
        let (f, g) = random_equal_rate_pair(&mut rng, &spec);
        let out = self_conv_min(&f, &g)?;
        let n = out.cut_cardinality as u64;
        bound_holds &= out.pairs <= (n * n - n) / 2 + n;
    }
    let ok = free
        && speedup >= DOMINANCE_MIN_SPEEDUP
        && ratio <= INCOMPARABLE_MAX_MEDIAN_RATIO
        && not_slower >= INCOMPARABLE_MIN_SHARE_NOT_SLOWER
        && exact
        && bound_holds;
    Ok((
        ok,
        format!(
            "dominance: no convolutions {free}, median speedup {speedup:.0}x; incomparable: median ratio {ratio:.2}, \
             {:.0}% not slower; pair bound {bound_holds}",
            not_slower * 100.0
        ),
    ))
}

fn check_minimization(f: &Curve) -> Result<bool> {
    let (m, report) = minimize_with_report(f)?;
    let ratio = f.period() / m.period();
    let (again, _) = minimize_with_report(&m)?;
    Ok(equivalent(&m, f)? && ratio.is_integer() && again == m && report.period_ratio() as usize >= 1)
}

fn minimization_suite() -> Outcome {
    let mut curves = Vec::new();
    for t in [exact_tandem(), approx_tandem(), homogeneous(3)] {
        let mut a = Analyzer::default();
        a.exact_equivalent(&t)?;
        a.approx_equivalent(&t)?;
        curves.extend(a.raw_results);
    }
    let pipeline = curves.len();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let spec = RandomCurveSpec { allow_negative: true, allow_plus_inf: true, ..Default::default() };
    curves.extend((0..RANDOM_MINIMIZE_CURVES).map(|_| random_curve(&mut rng, &spec)));
    let mut failures = 0;
    for f in &curves {
        if !check_minimization(f)? {
            failures += 1;
        }
    }
    // product of the first two closed-form factors of the approximate pipeline
    let factor = |r: i64, th: i64, w: i64| sac_rate_latency_jump(&int(r), &int(th), &Ext::from_int(w));
    let raw = convolution(&factor(21, 32, 23)?, &factor(7, 44, 29)?)?;
    let (m, _) = minimize_with_report(&raw)?;
    let reduced = within(raw.cardinality(), REFERENCE_RAW_PRODUCT) && within(m.cardinality(), REFERENCE_MINIMIZED_PRODUCT);
    Ok((
        failures == 0 && reduced,
        format!(
            "{pipeline} pipeline + {RANDOM_MINIMIZE_CURVES} random curves, {failures} failures; product {} -> {} \
             (reference {REFERENCE_RAW_PRODUCT} -> {REFERENCE_MINIMIZED_PRODUCT})",
            raw.cardinality(),
            m.cardinality()
        ),
    ))
}

/// Nonnegative random curves small enough for quick closures.
fn closure_inputs(count: usize) -> Vec<Curve> {
    let spec = RandomCurveSpec { max_breakpoints: 3, denominators: vec![1, 2], ..Default::default() };
    (0u64..)
        .map(|seed| random_curve(&mut ChaCha8Rng::seed_from_u64(seed), &spec))
        .filter(|f| f.cardinality() <= 6)
        .take(count)
        .collect()
}

fn closure_suite() -> Outcome {
    let zero = Rational::from_integer(0.into());
    let inputs = closure_inputs(2 * PROPERTY_PAIRS);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let per_curve = SUBADDITIVITY_PAIRS.div_ceil(inputs.len());
    let (mut origin, mut below, mut subadditive, mut idempotent, mut pairs_checked) = (true, true, true, true, 0);
    let mut closures = Vec::with_capacity(inputs.len());
    for f in &inputs {
        let c = sac(f)?;
        origin &= c.eval(&zero) == Ext::zero();
        let horizon = f.horizon() * int(3);
        below &= random_times(&mut rng, &horizon, 50).iter().all(|t| *t == zero || c.eval(t) <= f.eval(t));
        let us = random_times(&mut rng, &horizon, per_curve);
        let ss = random_times(&mut rng, &horizon, per_curve);
        for (u, s) in us.iter().zip(&ss) {
            subadditive &= c.eval(&(u + s)) <= &c.eval(u) + &c.eval(s);
            pairs_checked += 1;
        }
        idempotent &= equivalent(&convolution(&c, &c)?, &c)?;
        closures.push(c);
    }
    let mut distributes = 0;
    for (k, pair) in inputs.chunks(2).enumerate() {
        let lhs = sac(&minimum(&pair[0], &pair[1])?)?;
        if equivalent(&lhs, &convolution(&closures[2 * k], &closures[2 * k + 1])?)? {
            distributes += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(89);
    let mut closed_agree = 0;
    for _ in 0..CLOSED_FORM_TRIPLES {
        use rand::Rng;
        let mut q = |lo: i64, hi: i64| {
            let den = [1, 2, 3, 4][rng.gen_range(0..4)];
            rat(rng.gen_range(lo * den..=hi * den), den)
        };
        let (r, th, w) = (q(1, 40), q(0, 6), Ext::Finite(q(0, 60)));
        let closed = sac_rate_latency_jump(&r, &th, &w)?;
        let general = sac(&add_jump(&make_rate_latency(&r, &th)?, &w)?)?;
        if equivalent(&closed, &general)? {
            closed_agree += 1;
        }
    }
    let ok = origin
        && below
        && subadditive
        && idempotent
        && pairs_checked >= SUBADDITIVITY_PAIRS
        && distributes == PROPERTY_PAIRS
        && closed_agree == CLOSED_FORM_TRIPLES;
    Ok((
        ok,
        format!(
            "zero at origin {origin}, below input {below}, sub-additive on {pairs_checked} pairs {subadditive}, \
             idempotent {idempotent}, minimum rule {distributes}/{PROPERTY_PAIRS}, closed form {closed_agree}/{CLOSED_FORM_TRIPLES}"
        ),
    ))
}

fn oracle_gate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let spec = RandomCurveSpec::default();
    let mut mismatches = 0;
    for _ in 0..ORACLE_PAIRS {
        let f = random_curve(&mut rng, &spec);
        let g = random_curve(&mut rng, &spec);
        let h = convolution(&f, &g)?;
        let horizon = (f.horizon() + g.horizon()) * int(2);
        for t in random_times(&mut rng, &horizon, ORACLE_TIMES) {
            if h.eval(&t) != conv_oracle_eval(&f, &g, &t)? {
                mismatches += 1;
            }
        }
    }
    let delay = delay_bound(&ArrivalSpec::new(int(2), int(3))?, &make_rate_latency(&int(16), &int(2))?)?;
    let ok = mismatches == 0 && delay == Ext::Finite(rat(17, 8));
    Ok((ok, format!("{mismatches} mismatches over {} samples, delay bound {delay}", ORACLE_PAIRS * ORACLE_TIMES)))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("exact pipeline cardinalities", exact_pipeline_cardinalities),
        ("approximate pipeline cardinalities", approx_pipeline_cardinalities),
        ("homogeneous tandems: exact equals approximate", homogeneous_equality),
        ("first-node gap with equal end-to-end curves", first_node_gap),
        ("optimized convolution on staircase pairs", optimized_convolution_correctness),
        ("speedup direction and pair bound", speedup_direction),
        ("minimization suite", minimization_suite),
        ("closure suite", closure_suite),
        ("oracle gate", oracle_gate),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {detail} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("UPPNC_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
