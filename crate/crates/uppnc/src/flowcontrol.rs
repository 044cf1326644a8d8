//! Flow-controlled tandems: equivalent service curves and delay/backlog bounds.

use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};

use crate::curves::{add_jump, equivalent, make_rate_latency, make_token_bucket, Curve, Element};
use crate::error::{Error, Result};
use crate::minimize::minimize;
use crate::minplus::{convolution, set_deadline};
use crate::numerics::{ceil_int, ExtendedRational, PlusInf, Rational};
use crate::subadd::{conv_optimized, sac, sac_rate_latency_jump, Branch, ConvOptions};

type Ext = ExtendedRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSpec {
    pub rate: Rational,
    pub latency: Rational,
}

impl NodeSpec {
    pub fn new(rate: Rational, latency: Rational) -> Result<Self> {
        if !rate.is_positive() || latency.is_negative() {
            return Err(Error::InvalidArgument(format!("bad node: rate {rate}, latency {latency}")));
        }
        Ok(NodeSpec { rate, latency })
    }

    pub fn service_curve(&self) -> Curve {
        make_rate_latency(&self.rate, &self.latency).expect("validated node")
    }
}

/// Nodes in tandem order; `windows[k]` sits in front of node `k + 2` (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TandemSpec {
    pub nodes: Vec<NodeSpec>,
    pub windows: Vec<Ext>,
}

impl TandemSpec {
    pub fn new(nodes: Vec<NodeSpec>, windows: Vec<Ext>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("a tandem needs at least one node".into()));
        }
        if windows.len() + 1 != nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes need {} windows, got {}",
                nodes.len(),
                nodes.len() - 1,
                windows.len()
            )));
        }
        if windows.iter().any(|w| !matches!(w, PlusInf) && *w <= Ext::zero()) {
            return Err(Error::InvalidArgument("windows must be positive".into()));
        }
        Ok(TandemSpec { nodes, windows })
    }

    /// Same rate-latency node repeated, windows given in order.
    pub fn homogeneous(node: NodeSpec, windows: Vec<Ext>) -> Result<Self> {
        TandemSpec::new(vec![node; windows.len() + 1], windows)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Window in front of node `i` (1-based, `i >= 2`).
    pub fn window_before(&self, i: usize) -> &Ext {
        &self.windows[i - 2]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrivalSpec {
    pub sigma: Rational,
    pub rho: Rational,
}

impl ArrivalSpec {
    pub fn new(sigma: Rational, rho: Rational) -> Result<Self> {
        if sigma.is_negative() || rho.is_negative() {
            return Err(Error::InvalidArgument("arrival parameters must be nonnegative".into()));
        }
        Ok(ArrivalSpec { sigma, rho })
    }

    pub fn curve(&self) -> Curve {
        make_token_bucket(&self.sigma, &self.rho).expect("validated arrival")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineOptions {
    pub minimize: bool,
    pub conv: ConvOptions,
    /// Wall-clock budget per pipeline step.
    pub step_budget: Option<Duration>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { minimize: true, conv: ConvOptions::default(), step_budget: None }
    }
}

/// One pipeline step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgressRecord {
    pub operation: String,
    pub operands: Vec<usize>,
    pub raw_cardinality: usize,
    pub result_cardinality: usize,
    pub branch: Option<Branch>,
    pub elapsed: Duration,
}

impl ProgressRecord {
    pub const CSV_HEADER: &'static str = "operation,operands,raw,result,branch,elapsed_ns";

    pub fn csv_row(&self) -> String {
        let ops: Vec<String> = self.operands.iter().map(usize::to_string).collect();
        format!(
            "{},{},{},{},{},{}",
            self.operation,
            ops.join(" "),
            self.raw_cardinality,
            self.result_cardinality,
            self.branch.map(|b| b.to_string()).unwrap_or_default(),
            self.elapsed.as_nanos()
        )
    }
}

/// `Some((R, theta))` when `f` is a rate-latency curve.
pub fn as_rate_latency(f: &Curve) -> Result<Option<(Rational, Rational)>> {
    let m = minimize(f)?;
    let Some(rate) = m.rho().finite().cloned() else {
        return Ok(None);
    };
    if !rate.is_positive() {
        return Ok(None);
    }
    let latency = m.transient().clone();
    let candidate = make_rate_latency(&rate, &latency)?;
    Ok(equivalent(&m, &candidate)?.then_some((rate, latency)))
}

/// Runs the pipelines, recording each step.
#[derive(Debug, Default)]
pub struct Analyzer {
    pub options: PipelineOptions,
    pub records: Vec<ProgressRecord>,
    /// Step results before minimization, parallel to `records`.
    pub raw_results: Vec<Curve>,
}

impl Analyzer {
    pub fn new(options: PipelineOptions) -> Self {
        Analyzer { options, records: Vec::new(), raw_results: Vec::new() }
    }

    fn step<F>(&mut self, operation: &str, operands: &[&Curve], body: F) -> Result<Curve>
    where
        F: FnOnce(&PipelineOptions) -> Result<(Curve, Option<Branch>)>,
    {
        let start = Instant::now();
        set_deadline(self.options.step_budget.map(|b| start + b));
        let outcome = body(&self.options).and_then(|(raw, branch)| {
            let result = if self.options.minimize { minimize(&raw)? } else { raw.clone() };
            Ok((raw, result, branch))
        });
        set_deadline(None);
        let (raw, result, branch) = outcome?;
        self.records.push(ProgressRecord {
            operation: operation.to_string(),
            operands: operands.iter().map(|c| c.cardinality()).collect(),
            raw_cardinality: raw.cardinality(),
            result_cardinality: result.cardinality(),
            branch,
            elapsed: start.elapsed(),
        });
        self.raw_results.push(raw);
        Ok(result)
    }

    fn conv(&mut self, f: &Curve, g: &Curve) -> Result<Curve> {
        self.step("conv", &[f, g], |_| Ok((convolution(f, g)?, None)))
    }

    /// Convolution of two sub-additive curves with value 0 at 0.
    fn conv_subadditive(&mut self, f: &Curve, g: &Curve) -> Result<Curve> {
        self.step("conv_sac", &[f, g], |o| {
            let (c, trace) = conv_optimized(f, g, &o.conv)?;
            Ok((c, Some(trace.branch)))
        })
    }

    /// Closure of `f + W`, closed form when `f` is rate-latency.
    fn closure_with_window(&mut self, f: &Curve, w: &Ext) -> Result<Curve> {
        if let Some((r, th)) = as_rate_latency(f)? {
            let operand = add_jump(f, w)?;
            return self.step("sac_closed", &[&operand], |_| Ok((sac_rate_latency_jump(&r, &th, w)?, None)));
        }
        let jumped = add_jump(f, w)?;
        let operand = if self.options.minimize { minimize(&jumped)? } else { jumped };
        self.step("sac", &[&operand], |_| Ok((sac(&operand)?, None)))
    }

    /// `beta_i^eq` for every node, index 0 holding node 1.
    pub fn exact_per_node(&mut self, tandem: &TandemSpec) -> Result<Vec<Curve>> {
        let n = tandem.len();
        let mut eq: Vec<Curve> = Vec::with_capacity(n);
        eq.push(tandem.nodes[n - 1].service_curve());
        for i in (1..n).rev() {
            let beta = tandem.nodes[i - 1].service_curve();
            let next = eq.last().unwrap().clone();
            let inner = self.conv(&beta, &next)?;
            let closure = self.closure_with_window(&inner, tandem.window_before(i + 1))?;
            eq.push(self.conv(&beta, &closure)?);
        }
        eq.reverse();
        Ok(eq)
    }

    pub fn per_node_exact(&mut self, tandem: &TandemSpec, i: usize) -> Result<Curve> {
        check_index(tandem, i, tandem.len())?;
        Ok(self.exact_per_node(tandem)?.swap_remove(i - 1))
    }

    pub fn exact_equivalent(&mut self, tandem: &TandemSpec) -> Result<Curve> {
        // the last entry is beta_n itself
        let per_node = self.exact_per_node(tandem)?;
        let mut acc = per_node[0].clone();
        for next in &per_node[1..] {
            acc = self.conv(&acc, next)?;
        }
        Ok(acc)
    }

    /// Closed-form factor `SAC(beta_j (x) beta_{j+1} + W_{j+1})`, `j` 1-based.
    fn approx_factor(&mut self, tandem: &TandemSpec, j: usize) -> Result<Curve> {
        let (a, b) = (&tandem.nodes[j - 1], &tandem.nodes[j]);
        let rate = std::cmp::min(&a.rate, &b.rate).clone();
        let latency = &a.latency + &b.latency;
        let w = tandem.window_before(j + 1).clone();
        let operand = add_jump(&make_rate_latency(&rate, &latency)?, &w)?;
        self.step("sac_closed", &[&operand], |_| Ok((sac_rate_latency_jump(&rate, &latency, &w)?, None)))
    }

    fn factor_product(&mut self, tandem: &TandemSpec, from: usize) -> Result<Curve> {
        let mut acc = self.approx_factor(tandem, from)?;
        for j in from + 1..tandem.len() {
            let factor = self.approx_factor(tandem, j)?;
            acc = self.conv_subadditive(&acc, &factor)?;
        }
        Ok(acc)
    }

    pub fn per_node_approx(&mut self, tandem: &TandemSpec, i: usize) -> Result<Curve> {
        check_index(tandem, i, tandem.len() - 1)?;
        let product = self.factor_product(tandem, i)?;
        self.conv(&tandem.nodes[i - 1].service_curve(), &product)
    }

    pub fn approx_equivalent(&mut self, tandem: &TandemSpec) -> Result<Curve> {
        let rate = tandem.nodes.iter().map(|n| &n.rate).min().unwrap().clone();
        let latency: Rational = tandem.nodes.iter().map(|n| &n.latency).sum();
        let chain = make_rate_latency(&rate, &latency)?;
        if tandem.len() == 1 {
            return Ok(chain);
        }
        let product = self.factor_product(tandem, 1)?;
        self.conv(&chain, &product)
    }
}

fn check_index(tandem: &TandemSpec, i: usize, max: usize) -> Result<()> {
    if i == 0 || i > max {
        return Err(Error::InvalidArgument(format!("node index {i} outside 1..={max} for {} nodes", tandem.len())));
    }
    Ok(())
}

pub fn per_node_exact(tandem: &TandemSpec, i: usize) -> Result<Curve> {
    Analyzer::default().per_node_exact(tandem, i)
}

pub fn exact_equivalent(tandem: &TandemSpec) -> Result<Curve> {
    Analyzer::default().exact_equivalent(tandem)
}

pub fn per_node_approx(tandem: &TandemSpec, i: usize) -> Result<Curve> {
    Analyzer::default().per_node_approx(tandem, i)
}

pub fn approx_equivalent(tandem: &TandemSpec) -> Result<Curve> {
    Analyzer::default().approx_equivalent(tandem)
}

/// Cut of `beta` long enough to contain the first period after the transient twice.
fn service_window(beta: &Curve) -> Result<Vec<Element>> {
    let hi = beta.transient() + beta.period() * Rational::from_integer(2.into());
    Ok(beta.cut_range(&Rational::zero(), &hi, true)?.into_elements())
}

fn require_service(beta: &Curve) -> Result<()> {
    let elements = service_window(beta)?;
    let mut last = Ext::zero();
    for e in &elements {
        let (first, end) = match e {
            Element::Point(p) => (p.value.clone(), p.value.clone()),
            Element::Segment(s) => {
                if s.slope.is_negative() {
                    return Err(Error::Precondition("service curve decreases".into()));
                }
                (s.left_limit.clone(), s.right_limit())
            }
        };
        if first < last || first.is_minus_inf() {
            return Err(Error::Precondition("service curve must be nonnegative and nondecreasing".into()));
        }
        last = end;
    }
    if beta.rho() < Ext::zero() {
        return Err(Error::Precondition("service curve decreases in the long run".into()));
    }
    Ok(())
}

/// First time `beta` reaches `y`: `inf { t : beta(t) >= y }`, or `> y` when `strict`.
fn first_reach(beta: &Curve, y: &Rational, strict: bool) -> Result<Ext> {
    let above = |v: &Ext| if strict { *v > Ext::Finite(y.clone()) } else { *v >= Ext::Finite(y.clone()) };
    let mut hi = beta.transient() + beta.period() * Rational::from_integer(2.into());
    if let Some(c) = beta.increment().is_positive().then(|| beta.increment()) {
        if let Ext::Finite(start) = beta.eval(beta.transient()) {
            let periods = ceil_int(&((y - start) / c)).max(0.into());
            hi += Rational::from_integer(periods) * beta.period();
        }
    }
    for e in beta.cut_range(&Rational::zero(), &hi, true)?.elements() {
        match e {
            Element::Point(p) => {
                if above(&p.value) {
                    return Ok(Ext::Finite(p.time.clone()));
                }
            }
            Element::Segment(s) => {
                if above(&s.left_limit) {
                    return Ok(Ext::Finite(s.start.clone()));
                }
                if s.slope.is_positive() {
                    let v0 = s.left_limit.expect_finite();
                    let x = &s.start + (y - v0) / &s.slope;
                    if x < s.end {
                        return Ok(Ext::Finite(x));
                    }
                }
            }
        }
    }
    // bounded service that never exceeds y
    Ok(PlusInf)
}

/// Horizontal deviation between `gamma_{sigma,rho}` and `beta`.
///
/// The delay of the bit arriving at `s > 0` is `first_reach(sigma + rho s) - s`, affine in
/// the arrival level between consecutive levels reached by `beta` at its breakpoints. Past
/// the transient each period raises the level by `c` and the reach time by `d`, while
/// the arrival time grows by `c / rho >= d`: the delay cannot grow after the first
/// period, so levels taken from `[0, T + 2d]` suffice.
pub fn delay_bound(alpha: &ArrivalSpec, beta: &Curve) -> Result<Ext> {
    require_service(beta)?;
    let rho_b = beta.rho();
    if Ext::Finite(alpha.rho.clone()) > rho_b {
        return Ok(PlusInf);
    }
    let sigma = &alpha.sigma;
    let reach = first_reach(beta, sigma, true)?;
    let mut best = reach;
    if alpha.rho.is_zero() || best.is_plus_inf() {
        return Ok(best);
    }
    let mut levels: Vec<Rational> = Vec::new();
    for e in service_window(beta)? {
        let vals = match &e {
            Element::Point(p) => vec![p.value.clone()],
            Element::Segment(s) => vec![s.left_limit.clone(), s.right_limit()],
        };
        levels.extend(vals.into_iter().filter_map(|v| v.finite().cloned()).filter(|v| v > sigma));
    }
    levels.sort();
    levels.dedup();
    for y in levels {
        let arrival = (&y - sigma) / &alpha.rho;
        for strict in [false, true] {
            let d = first_reach(beta, &y, strict)?.add_rat(&-&arrival);
            if d > best {
                best = d;
            }
        }
    }
    Ok(best)
}

/// Vertical deviation `sup_t gamma(t) - beta(t)`, scanned over breakpoints of one
/// transient and one period; afterwards the gap changes by `rho d - c <= 0` per period.
pub fn backlog_bound(alpha: &ArrivalSpec, beta: &Curve) -> Result<Ext> {
    require_service(beta)?;
    if Ext::Finite(alpha.rho.clone()) > beta.rho() {
        return Ok(PlusInf);
    }
    let gamma = |t: &Rational| Ext::Finite(&alpha.sigma + &alpha.rho * t);
    let mut best = Ext::zero();
    let mut consider = |a: Ext, b: Ext| {
        if b.is_plus_inf() {
            return;
        }
        let gap = &a - &b;
        if gap > best {
            best = gap;
        }
    };
    for e in service_window(beta)? {
        match &e {
            Element::Point(p) if p.time.is_positive() => consider(gamma(&p.time), p.value.clone()),
            Element::Point(_) => {}
            Element::Segment(s) => {
                consider(gamma(&s.start), s.left_limit.clone());
                consider(gamma(&s.end), s.right_limit());
            }
        }
    }
    Ok(best)
}

/// First sampled abscissa where two curves differ, with both values.
pub fn first_divergence(f: &Curve, g: &Curve) -> Result<Option<(Rational, Ext, Ext)>> {
    let hi = std::cmp::max(f.horizon(), g.horizon()) * Rational::from_integer(2.into())
        + crate::numerics::rat_lcm(f.period(), g.period())?;
    let a = f.cut_range(&Rational::zero(), &hi, false)?.merge_well_formed();
    let b = g.cut_range(&Rational::zero(), &hi, false)?.merge_well_formed();
    for (x, y) in crate::curves::refine(&a, &b) {
        if x != y {
            let t = match &x {
                Element::Point(p) => p.time.clone(),
                Element::Segment(s) => (&s.start + &s.end) / Rational::from_integer(2.into()),
            };
            return Ok(Some((t.clone(), f.eval(&t), g.eval(&t))));
        }
    }
    Ok(None)
}

/// Sampled check that a curve is a valid equivalent service curve.
pub fn is_service_curve(f: &Curve) -> bool {
    f.eval(&Rational::zero()) == Ext::zero() && require_service(f).is_ok()
}

/// Convenience for tests and the CLI: `n` copies of `beta_{R,theta}` with the given windows.
pub fn rate_latency_tandem(rate: &Rational, latency: &Rational, windows: Vec<Ext>) -> Result<TandemSpec> {
    TandemSpec::homogeneous(NodeSpec::new(rate.clone(), latency.clone())?, windows)
}
