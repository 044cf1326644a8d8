//! Sub-additive closure, dominance tests and the convolution shortcuts that
//! apply to sub-additive operands.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::curves::{
    add_jump, equal_from, equivalent, make_delta_zero, make_rate_latency, make_zero, refine,
    restrict_support, Curve, Element, Sequence,
};
use crate::error::{Error, Result};
use crate::minimize::minimize;
use crate::minplus::{
    bump_elementary, check_budget, convolution, counters, elementary_piece, envelope_over,
    minimum, pointwise_min, self_convolve_sequence, tail_crossing_bound,
};
use crate::numerics::{ceil_int, floor_int, rat_lcm, ExtendedRational, Rational, PlusInf};

type Ext = ExtendedRational;

/// Closure of `t -> W + R [t - theta]^+` (and 0 at the origin).
pub fn sac_rate_latency_jump(rate: &Rational, latency: &Rational, window: &Ext) -> Result<Curve> {
    if !rate.is_positive() {
        return Err(Error::InvalidArgument("rate must be positive".into()));
    }
    if latency.is_negative() {
        return Err(Error::InvalidArgument("latency must be nonnegative".into()));
    }
    let w = match window {
        PlusInf => return Ok(make_delta_zero()),
        Ext::Finite(w) if !w.is_negative() => w.clone(),
        _ => return Err(Error::InvalidArgument("window must be nonnegative".into())),
    };
    let base = make_rate_latency(rate, latency)?;
    if latency.is_zero() {
        return add_jump(&base, &Ext::Finite(w));
    }
    if w.is_zero() {
        return Ok(make_zero());
    }
    if w >= rate * latency {
        // already sub-additive: the jump pays for any latency overlap
        return add_jump(&base, &Ext::Finite(w));
    }
    // staircase: ramp of length W/R at the start of every step
    let ramp = &w / rate;
    let zero = Rational::zero();
    let wv = Ext::Finite(w.clone());
    let el = vec![
        Element::point(zero.clone(), Ext::zero()),
        Element::segment(zero, latency.clone(), wv.clone(), Rational::zero()),
        Element::point(latency.clone(), wv.clone()),
        Element::segment(latency.clone(), latency + &ramp, wv, rate.clone()),
    ];
    Curve::assemble(Sequence::new(el)?, ramp, latency.clone(), w)
}

/// Tuning for the general closure algorithm.
#[derive(Clone, Debug)]
pub struct SacConfig {
    /// Maximum number of horizon doublings.
    pub doubling_limit: u32,
    /// Maximum number of squarings on one horizon.
    pub squaring_limit: u32,
    /// Periods tried per horizon.
    pub max_candidates: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig { doubling_limit: 20, squaring_limit: 64, max_candidates: 64 }
    }
}

/// Sub-additive closure `inf_n f^(n)`.
pub fn sac(f: &Curve) -> Result<Curve> {
    sac_with(f, &SacConfig::default())
}

pub fn sac_with(f: &Curve, cfg: &SacConfig) -> Result<Curve> {
    let zero = Rational::zero();
    if f.eval(&zero) < Ext::zero() {
        return Err(Error::Precondition("closure of a curve negative at 0 diverges to -inf".into()));
    }
    if f.has_minus_inf() {
        return Err(Error::Precondition("closure input takes the value -inf".into()));
    }
    let g = minimize(&minimum(f, &make_delta_zero())?)?;
    if equivalent(&convolution(&g, &g)?, &g)? {
        return Ok(g);
    }
    let two = Rational::from_integer(2.into());
    let mut horizon = std::cmp::max(&two * (g.transient() + g.period()), Rational::one());
    let mut known: Option<Sequence> = None;
    for _ in 0..cfg.doubling_limit {
        check_budget()?;
        let mut h = g.cut_range(&zero, &horizon, false)?.merge_well_formed();
        if let Some(prev) = &known {
            h = pointwise_min(&h, &extend_plus_inf(prev, &horizon));
        }
        let mut squarings = 0;
        loop {
            check_budget()?;
            let sq = self_convolve_sequence(&h, &zero, &horizon)?.merge_well_formed();
            if sq == h {
                break;
            }
            h = sq;
            squarings += 1;
            if squarings > cfg.squaring_limit {
                return Err(Error::Divergence(format!(
                    "no fixpoint after {} squarings on [0, {})",
                    cfg.squaring_limit, horizon
                )));
            }
        }
        let mut tried: Vec<String> = Vec::new();
        for candidate in closure_candidates(&h, &horizon, cfg.max_candidates)? {
            let candidate = minimize(&candidate)?;
            let text = candidate.to_text();
            if tried.contains(&text) {
                continue;
            }
            tried.push(text);
            if certify_closure(&candidate, &g, &horizon)? {
                return Ok(candidate);
            }
        }
        known = Some(h);
        horizon = &horizon * &two;
    }
    Err(Error::Divergence(format!("no periodic pattern certified after {} doublings", cfg.doubling_limit)))
}

fn extend_plus_inf(s: &Sequence, hi: &Rational) -> Sequence {
    let mut el = s.elements().to_vec();
    el.push(Element::point(s.end().clone(), PlusInf));
    el.push(Element::segment(s.end().clone(), hi.clone(), PlusInf, Rational::zero()));
    Sequence::new(el).expect("extension tiles the domain")
}

/// Ultimately affine candidate from the last segment, then periodic candidates
/// from distances between the last breakpoint and earlier ones.
fn closure_candidates(h: &Sequence, horizon: &Rational, limit: usize) -> Result<Vec<Curve>> {
    let points: Vec<(&Rational, &Ext)> = h
        .elements()
        .iter()
        .filter_map(|e| match e {
            Element::Point(p) => Some((&p.time, &p.value)),
            _ => None,
        })
        .collect();
    let (last_t, last_v) = *points.last().unwrap();
    let mut out = Vec::new();
    let ua = affine_tail_candidate(h, last_t)?;
    let long_tail = (horizon - last_t) * Rational::from_integer(4.into()) >= *horizon;
    if long_tail {
        out.push(ua.clone());
    }
    let three = Rational::from_integer(3.into());
    for &(t, v) in points.iter().rev().skip(1).take(limit) {
        check_budget()?;
        let d = last_t - t;
        if &d * &three > *horizon {
            break;
        }
        let c = match (last_v, v) {
            (Ext::Finite(a), Ext::Finite(b)) => a - b,
            (PlusInf, PlusInf) => Rational::zero(),
            _ => continue,
        };
        // the pattern must hold over the upper half of the horizon, and at least two periods
        let start = std::cmp::min(horizon - &three * &d, horizon / Rational::from_integer(2.into()));
        let a = h.restrict(&start, &(horizon - &d), false)?.merge_well_formed();
        let b = h
            .restrict(&(&start + &d), horizon, false)?
            .translate(&-&d, &-&c)
            .merge_well_formed();
        if a != b {
            continue;
        }
        let seq = h.restrict(&Rational::zero(), &(&start + &d), false)?;
        out.push(Curve::assemble(seq, start, d, c)?);
    }
    if !long_tail {
        out.push(ua);
    }
    Ok(out)
}

fn affine_tail_candidate(h: &Sequence, last_t: &Rational) -> Result<Curve> {
    let Some(Element::Segment(tail)) = h.elements().last() else {
        unreachable!("sequences over half-open domains end with a segment")
    };
    let one = Rational::one();
    let mut el = h.restrict(&Rational::zero(), last_t, true)?.into_elements();
    // the point at `last_t` may sit off the line, so the period starts one unit later
    let mid = last_t + &one;
    let end = &mid + &one;
    let at_mid = tail.value_at(&mid);
    el.push(Element::segment(last_t.clone(), mid.clone(), tail.left_limit.clone(), tail.slope.clone()));
    el.push(Element::point(mid.clone(), at_mid.clone()));
    el.push(Element::segment(mid.clone(), end, at_mid, tail.slope.clone()));
    let c = if tail.left_limit.is_finite() { tail.slope.clone() } else { Rational::zero() };
    Curve::assemble(Sequence::new(el)?, mid, one, c)
}

/// `F` agrees with the closure on `[0, horizon[`; these checks extend the agreement
/// to all `t`. Sub-additivity and `F <= g` make `F` a minorant of the closure.
/// For `t >= X`, `F(t) >= min(g(t), inf_{s in S} F(s) + F(t - s))` with `S` inside
/// `[0, X]` lets induction on `t` show `F` is also above it. Splits cost at least
/// `F(0+)`, so when that is positive `S = ]0, X]`. Otherwise `S = [delta, X]` and
/// the result may be extended by one piece of at most `delta` on the initial
/// slope of `F`, which keeps every induction step at least `delta` long.
fn certify_closure(candidate: &Curve, g: &Curve, horizon: &Rational) -> Result<bool> {
    let outcome = (|| -> Result<bool> {
        let two = Rational::from_integer(2.into());
        let x = candidate.transient() + &two * candidate.period();
        if x >= *horizon {
            return Ok(false);
        }
        if !equivalent(&minimum(candidate, g)?, candidate)? {
            return Ok(false);
        }
        // sub-additivity reduces to pairs below T + d, already inside the horizon
        let inside = &two * (candidate.transient() + candidate.period()) <= *horizon;
        if !inside && !equivalent(&convolution(candidate, candidate)?, candidate)? {
            return Ok(false);
        }
        let zero = Rational::zero();
        let (start, ramp_slope) = if candidate.eval_right(&zero) > Ext::zero() {
            (zero, None)
        } else {
            // splits of length `delta` must reach across every affine piece below X
            let cut = candidate.cut_range(&zero, &x, false)?.merge_well_formed();
            let segments: Vec<_> = cut
                .elements()
                .iter()
                .filter_map(|e| match e {
                    Element::Segment(s) => Some(s),
                    _ => None,
                })
                .collect();
            let shortest = segments
                .iter()
                .map(|s| s.length())
                .min()
                .expect("a cut over a nonempty range holds a segment");
            let slope = segments[0].slope.clone();
            (std::cmp::min(shortest, candidate.period().clone()) / &two, Some(slope))
        };
        let window = restrict_window(candidate, &start, &x)?;
        let mut reach = minimum(g, &convolution(&window, candidate)?)?;
        if let Some(slope) = ramp_slope {
            // one trailing split of at most `delta`, anchored at least `delta` lower
            reach = minimum(&reach, &restrict_support(candidate, &x)?)?;
            reach = convolution(&reach, &ramp(&slope, &start)?)?;
        }
        equal_from(&minimum(candidate, &reach)?, &reach, &x)
    })();
    match outcome {
        Err(Error::BudgetExceeded) => Err(Error::BudgetExceeded),
        Err(_) => Ok(false),
        ok => ok,
    }
}

/// `slope * t` on `[0, len]`, `+inf` beyond.
fn ramp(slope: &Rational, len: &Rational) -> Result<Curve> {
    let zero = Rational::zero();
    let one = Rational::one();
    let el = vec![
        Element::point(zero.clone(), Ext::zero()),
        Element::segment(zero.clone(), len.clone(), Ext::zero(), slope.clone()),
        Element::point(len.clone(), Ext::from(slope * len)),
        Element::segment(len.clone(), len + &one, PlusInf, zero.clone()),
        Element::point(len + &one, PlusInf),
        Element::segment(len + &one, len + &one + &one, PlusInf, zero.clone()),
    ];
    Curve::assemble(Sequence::new(el)?, len + &one, one, zero)
}

/// `f` on `]a, b]`, `+inf` elsewhere (including at `a`).
fn restrict_window(f: &Curve, a: &Rational, b: &Rational) -> Result<Curve> {
    let zero = Rational::zero();
    let one = Rational::one();
    let mut el = vec![Element::point(zero.clone(), PlusInf)];
    if a.is_positive() {
        el.push(Element::segment(zero.clone(), a.clone(), PlusInf, zero.clone()));
        el.push(Element::point(a.clone(), PlusInf));
    }
    el.extend(f.cut_range(a, b, true)?.into_elements().into_iter().skip(1));
    let b1 = b + &one;
    el.push(Element::segment(b.clone(), b1.clone(), PlusInf, zero.clone()));
    el.push(Element::point(b1.clone(), PlusInf));
    el.push(Element::segment(b1.clone(), &b1 + &one, PlusInf, zero.clone()));
    Curve::assemble(Sequence::new(el)?, b1, one, zero)
}

/// Outcome of [`check_dominance`]. "First" is `f`, "second" is `g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DominanceRelation {
    /// `f >= g` everywhere.
    FirstDominates,
    /// `g >= f` everywhere.
    SecondDominates,
    /// `g >= f` from `t_star` on.
    AsymptoticSecondOverFirst(Rational),
    /// `f >= g` from `t_star` on.
    AsymptoticFirstOverSecond(Rational),
    Incomparable,
}

/// `Some(f <= g)` by a direct sweep, `None` when no finite scan range is known.
fn lies_below(f: &Curve, g: &Curve) -> Result<Option<bool>> {
    let (rf, rg) = (f.rho(), g.rho());
    if !rf.is_finite() || !rg.is_finite() {
        return Ok(None);
    }
    if rf > rg {
        return Ok(Some(false));
    }
    let (end, closed) = if rf == rg {
        // f - g repeats with the joint period once both transients are over
        let joint = rat_lcm(f.period(), g.period())?;
        (std::cmp::max(f.transient(), g.transient()) + joint, false)
    } else {
        match tail_crossing_bound(f, g)?.t_bar {
            Ext::Finite(t) => (t, true),
            _ => return Ok(None),
        }
    };
    let zero = Rational::zero();
    let a = f.cut_range(&zero, &end, closed)?;
    let b = g.cut_range(&zero, &end, closed)?;
    for (x, y) in refine(&a, &b) {
        let below = match (&x, &y) {
            (Element::Point(p), Element::Point(q)) => p.value <= q.value,
            (Element::Segment(s), Element::Segment(t)) => s.left_limit <= t.left_limit && s.right_limit() <= t.right_limit(),
            _ => unreachable!("refined sequences are aligned"),
        };
        if !below {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

pub fn check_dominance(f: &Curve, g: &Curve) -> Result<DominanceRelation> {
    let g_below = lies_below(g, f)?;
    if g_below == Some(true) {
        return Ok(DominanceRelation::FirstDominates);
    }
    let f_below = lies_below(f, g)?;
    if f_below == Some(true) {
        return Ok(DominanceRelation::SecondDominates);
    }
    let m = minimum(f, g)?;
    if g_below.is_none() && equivalent(g, &m)? {
        return Ok(DominanceRelation::FirstDominates);
    }
    if f_below.is_none() && equivalent(f, &m)? {
        return Ok(DominanceRelation::SecondDominates);
    }
    let t_star = m.transient().clone();
    let tail_f = equal_from(&m, f, &t_star)?;
    let tail_g = equal_from(&m, g, &t_star)?;
    Ok(match (tail_f, tail_g) {
        (true, false) => DominanceRelation::AsymptoticSecondOverFirst(t_star),
        (false, true) => DominanceRelation::AsymptoticFirstOverSecond(t_star),
        _ => DominanceRelation::Incomparable,
    })
}

fn require_zero_at_origin(f: &Curve, name: &str) -> Result<()> {
    if f.eval(&Rational::zero()) != Ext::zero() {
        return Err(Error::Precondition(format!("{name} must be 0 at the origin")));
    }
    Ok(())
}

/// `f (x) g = f` for sub-additive `f` and `g >= f` with `g(0) = 0`.
pub fn conv_dominance(f: &Curve, g: &Curve) -> Result<Curve> {
    require_zero_at_origin(g, "g")?;
    match check_dominance(f, g)? {
        DominanceRelation::SecondDominates | DominanceRelation::FirstDominates
            if equivalent(&minimum(f, g)?, f)? =>
        {
            Ok(f.clone())
        }
        _ => Err(Error::Precondition("g does not dominate f".into())),
    }
}

/// `f (x) g = (f (x) g_a) min f` where `g_a` is `g` restricted to `[0, t_star[`.
pub fn conv_asymptotic(f: &Curve, g: &Curve, t_star: &Rational) -> Result<Curve> {
    require_zero_at_origin(f, "f")?;
    require_zero_at_origin(g, "g")?;
    if f.has_minus_inf() {
        return Err(Error::Precondition("f must be finite from below".into()));
    }
    if !equal_from(&minimum(f, g)?, f, t_star)? {
        return Err(Error::Precondition("g is not above f after t_star".into()));
    }
    if !t_star.is_positive() {
        return Ok(f.clone());
    }
    let head = restrict_support(g, t_star)?;
    minimum(&convolution(f, &head)?, f)
}

/// Elements of `s` that coincide with `other` over their whole domain.
fn coincides(s: &Sequence, other: &Sequence) -> Vec<bool> {
    let mut out = vec![true; s.len()];
    let pieces = refine(s, other);
    let mut idx = 0usize;
    for (a, b) in pieces {
        // advance to the element of `s` that contains this piece
        while !contains_piece(&s.elements()[idx], &a) {
            idx += 1;
        }
        if a != b {
            out[idx] = false;
        }
    }
    out
}

fn contains_piece(e: &Element, piece: &Element) -> bool {
    match (e, piece) {
        (Element::Point(p), Element::Point(q)) => p.time == q.time,
        (Element::Segment(s), Element::Point(q)) => s.start < q.time && q.time < s.end,
        (Element::Segment(s), Element::Segment(q)) => s.start <= q.start && q.end <= s.end,
        (Element::Point(_), Element::Segment(_)) => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Color {
    F,
    G,
    Both,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredElement {
    pub element: Element,
    pub color: Color,
}

fn skip_pair(a: Color, b: Color) -> bool {
    use Color::*;
    matches!((a, b), (F, F) | (G, G) | (Both, F | G | Both) | (F | G, Both))
}

/// Colors of the elements of `min(f, g)` cut over `[0, end[`.
pub fn color_elements(h: &Sequence, f: &Curve, g: &Curve) -> Result<Vec<ColoredElement>> {
    let zero = Rational::zero();
    let sf = f.cut_range(&zero, h.end(), h.closed_end())?;
    let sg = g.cut_range(&zero, h.end(), h.closed_end())?;
    let (in_f, in_g) = (coincides(h, &sf), coincides(h, &sg));
    Ok(h.elements()
        .iter()
        .enumerate()
        .map(|(i, e)| ColoredElement {
            element: e.clone(),
            color: match (in_f[i], in_g[i]) {
                (true, true) => Color::Both,
                (true, false) => Color::F,
                (false, true) => Color::G,
                (false, false) => Color::Neither,
            },
        })
        .collect())
}

/// Result of [`self_conv_min`] with the number of element pairs convolved.
#[derive(Clone, Debug)]
pub struct SelfConvOutcome {
    pub curve: Curve,
    pub pairs: u64,
    /// Cardinality of the cut of `min(f, g)` the pairs are drawn from.
    pub cut_cardinality: usize,
}

/// `f (x) g = (f min g) (x) (f min g)` for sub-additive `f`, `g` with value 0 at 0,
/// convolving each unordered pair once and skipping same-color pairs.
pub fn self_conv_min(f: &Curve, g: &Curve) -> Result<SelfConvOutcome> {
    require_zero_at_origin(f, "f")?;
    require_zero_at_origin(g, "g")?;
    let h = minimize(&minimum(f, g)?)?;
    let two = Rational::from_integer(2.into());
    let zero = Rational::zero();
    let th = h.transient();
    let t = th * &two + h.period();
    let end = &t + h.period();
    let sh = h.cut_range(&zero, &end, false)?.merge_well_formed();
    let colored = color_elements(&sh, f, g)?;
    let mut own = sh.elements().to_vec();
    own.push(Element::point(end.clone(), PlusInf));
    let mut leaves = vec![Sequence::new(own)?];
    let mut pairs = 0u64;
    for (i, a) in colored.iter().enumerate() {
        check_budget()?;
        if a.element.start() + a.element.start() >= end {
            break;
        }
        for b in &colored[i..] {
            if a.element.start() + b.element.start() >= end {
                break;
            }
            if skip_pair(a.color, b.color) {
                continue;
            }
            pairs += 1;
            if let Some(piece) = elementary_piece(&a.element, &b.element, &end) {
                leaves.push(piece);
            }
        }
    }
    bump_elementary(pairs);
    let seq = envelope_over(leaves, &zero, &end)?;
    let curve = Curve::assemble(seq, t, h.period().clone(), h.increment().clone())?;
    Ok(SelfConvOutcome { curve, pairs, cut_cardinality: sh.len() })
}

/// Which shortcut [`conv_optimized`] took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Dominance,
    Asymptotic,
    SelfConvolution,
    Direct,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Dominance => "dominance",
            Branch::Asymptotic => "asymptotic",
            Branch::SelfConvolution => "selfconv",
            Branch::Direct => "direct",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvOptions {
    pub dominance: bool,
    pub asymptotic: bool,
    pub selfconv: bool,
}

impl Default for ConvOptions {
    fn default() -> Self {
        ConvOptions { dominance: true, asymptotic: true, selfconv: true }
    }
}

impl ConvOptions {
    pub fn none() -> Self {
        ConvOptions { dominance: false, asymptotic: false, selfconv: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvTrace {
    pub branch: Branch,
    pub elementary_convolutions: u64,
    pub operand_cardinalities: (usize, usize),
    pub result_cardinality: usize,
}

/// Number of elements of `cut(f, [0, end[)` without materializing it.
pub fn cut_cardinality(f: &Curve, end: &Rational) -> usize {
    let horizon = f.horizon();
    let seq = f.sequence();
    let count_upto = |x: &Rational| -> usize {
        // elements of the stored sequence intersecting [0, x[
        match seq.locate(x) {
            Some(i) => i + usize::from(!seq.elements()[i].is_point()),
            None => seq.len(),
        }
    };
    if *end <= horizon {
        return count_upto(end);
    }
    let per = f.cardinality() - f.periodic_index();
    let over = (end - f.transient()) / f.period();
    let k = floor_int(&over);
    let k_usize: usize = k.clone().try_into().unwrap_or(usize::MAX / 4);
    let rem = end - Rational::from_integer(k) * f.period();
    let partial = if rem == *f.transient() { 0 } else { count_upto(&rem) - f.periodic_index() };
    f.periodic_index() + k_usize.saturating_mul(per) + partial
}

fn asymptotic_is_cheaper(f: &Curve, g: &Curve, t_star: &Rational) -> Result<bool> {
    let two = Rational::from_integer(2.into());
    let lcm = rat_lcm(f.period(), g.period())?;
    let thm2 = cut_cardinality(f, &(t_star + f.transient() + &two * f.period())) + cut_cardinality(g, t_star);
    let direct = cut_cardinality(f, &(f.transient() + &two * &lcm)) + cut_cardinality(g, &(g.transient() + &two * &lcm));
    Ok(thm2 <= direct)
}

/// Convolution of two sub-additive curves with value 0 at 0, using the cheapest
/// applicable shortcut.
pub fn conv_optimized(f: &Curve, g: &Curve, opts: &ConvOptions) -> Result<(Curve, ConvTrace)> {
    let before = counters().elementary_convolutions;
    let (curve, branch) = dispatch(f, g, opts)?;
    let trace = ConvTrace {
        branch,
        elementary_convolutions: counters().elementary_convolutions - before,
        operand_cardinalities: (f.cardinality(), g.cardinality()),
        result_cardinality: curve.cardinality(),
    };
    Ok((curve, trace))
}

fn dispatch(f: &Curve, g: &Curve, opts: &ConvOptions) -> Result<(Curve, Branch)> {
    use DominanceRelation::*;
    if opts.dominance || opts.asymptotic {
        match check_dominance(f, g)? {
            FirstDominates if opts.dominance => return Ok((g.clone(), Branch::Dominance)),
            SecondDominates if opts.dominance => return Ok((f.clone(), Branch::Dominance)),
            AsymptoticSecondOverFirst(t) if opts.asymptotic => {
                if asymptotic_is_cheaper(f, g, &t)? {
                    return Ok((conv_asymptotic(f, g, &t)?, Branch::Asymptotic));
                }
                return Ok((convolution(f, g)?, Branch::Direct));
            }
            AsymptoticFirstOverSecond(t) if opts.asymptotic => {
                if asymptotic_is_cheaper(g, f, &t)? {
                    return Ok((conv_asymptotic(g, f, &t)?, Branch::Asymptotic));
                }
                return Ok((convolution(f, g)?, Branch::Direct));
            }
            _ => {}
        }
    }
    if opts.selfconv {
        return Ok((self_conv_min(f, g)?.curve, Branch::SelfConvolution));
    }
    Ok((convolution(f, g)?, Branch::Direct))
}

/// Sampled sub-additivity check on the given `(u, s)` pairs.
pub fn is_subadditive_on(f: &Curve, pairs: &[(Rational, Rational)]) -> bool {
    pairs.iter().all(|(u, s)| f.eval(&(u + s)) <= &f.eval(u) + &f.eval(s))
}

/// Smallest `n` with `n * step >= x`, used to size horizons.
pub fn steps_to_cover(x: &Rational, step: &Rational) -> num_bigint::BigInt {
    ceil_int(&(x / step))
}
