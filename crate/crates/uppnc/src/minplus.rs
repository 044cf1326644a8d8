//! Minimum, elementary convolutions, lower envelopes and full convolution of curves.

use std::cell::Cell;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::curves::{clip_into, refine, Curve, Element, Interval, Point, Segment, Sequence};
use crate::error::{Error, Result};
use crate::numerics::{rat_lcm, ExtendedRational, Rational, MinusInf, PlusInf};

type Ext = ExtendedRational;

/// Instrumentation counters for the calling thread.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub elementary_convolutions: u64,
    pub envelope_intervals: u64,
}

thread_local! {
    static ELEMENTARY: Cell<u64> = const { Cell::new(0) };
    static INTERVALS: Cell<u64> = const { Cell::new(0) };
    static DEADLINE: Cell<Option<Instant>> = const { Cell::new(None) };
}

static PARALLEL: AtomicBool = AtomicBool::new(false);

pub fn counters() -> Counters {
    Counters {
        elementary_convolutions: ELEMENTARY.with(Cell::get),
        envelope_intervals: INTERVALS.with(Cell::get),
    }
}

pub fn reset_counters() {
    ELEMENTARY.with(|c| c.set(0));
    INTERVALS.with(|c| c.set(0));
}

pub(crate) fn bump_elementary(n: u64) {
    ELEMENTARY.with(|c| c.set(c.get() + n));
}

fn bump_intervals(n: u64) {
    INTERVALS.with(|c| c.set(c.get() + n));
}

/// Enables rayon-backed evaluation of elementary convolutions and envelope merges.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

pub fn parallel_enabled() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Sets the deadline after which long-running operations on this thread fail
/// with [`Error::BudgetExceeded`].
pub fn set_deadline(deadline: Option<Instant>) {
    DEADLINE.with(|d| d.set(deadline));
}

pub fn deadline() -> Option<Instant> {
    DEADLINE.with(Cell::get)
}

pub(crate) fn check_deadline(deadline: Option<Instant>) -> Result<()> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(Error::BudgetExceeded),
        _ => Ok(()),
    }
}

pub fn check_budget() -> Result<()> {
    check_deadline(deadline())
}

/// Bound on the last crossing of two curves with different long-run slopes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailCrossingBound {
    /// `sup (f1(t) - rho1 t)` over the periodic part of the flatter curve.
    pub upper_intercept: Ext,
    /// `inf (f2(t) - rho2 t)` over the periodic part of the steeper curve.
    pub lower_intercept: Ext,
    pub t_bar: Ext,
}

/// Extremes of `f(t) - rho t` over `[T, T + d[` (including the limit at `T + d`).
fn periodic_intercepts(f: &Curve, rho: &Rational) -> (Ext, Ext) {
    let mut lo = PlusInf;
    let mut hi = MinusInf;
    let mut visit = |v: Ext, t: &Rational| {
        let w = v.add_rat(&-(rho * t));
        if w < lo {
            lo = w.clone();
        }
        if w > hi {
            hi = w;
        }
    };
    for e in f.periodic_elements() {
        match e {
            Element::Point(p) => visit(p.value.clone(), &p.time),
            Element::Segment(s) => {
                visit(s.left_limit.clone(), &s.start);
                visit(s.right_limit(), &s.end);
            }
        }
    }
    (lo, hi)
}

/// Crossing bound for `f1` with `rho1 < rho2` of `f2`.
pub fn tail_crossing_bound(f1: &Curve, f2: &Curve) -> Result<TailCrossingBound> {
    let (r1, r2) = match (f1.rho(), f2.rho()) {
        (Ext::Finite(a), Ext::Finite(b)) if a < b => (a, b),
        _ => return Err(Error::InvalidArgument("tail crossing needs finite rho1 < rho2".into())),
    };
    let (_, upper) = periodic_intercepts(f1, &r1);
    let (lower, _) = periodic_intercepts(f2, &r2);
    let floor = std::cmp::max(f1.transient(), f2.transient()).clone();
    let t_bar = match (&upper, &lower) {
        (Ext::Finite(m1), Ext::Finite(m2)) => {
            Ext::Finite(std::cmp::max(floor, (m1 - m2) / (&r2 - &r1)))
        }
        (MinusInf, _) | (_, PlusInf) => Ext::Finite(floor),
        _ => PlusInf,
    };
    Ok(TailCrossingBound { upper_intercept: upper, lower_intercept: lower, t_bar })
}

/// Pointwise minimum of two segments sharing their domain.
pub(crate) fn min_segments(a: &Segment, b: &Segment, out: &mut Vec<Element>) {
    let pick = |s: &Segment, out: &mut Vec<Element>| out.push(Element::Segment(s.clone()));
    match (&a.left_limit, &b.left_limit) {
        (MinusInf, _) | (_, PlusInf) => return pick(a, out),
        (_, MinusInf) | (PlusInf, _) => return pick(b, out),
        _ => {}
    }
    let d0 = a.left_limit.expect_finite() - b.left_limit.expect_finite();
    let d1 = a.right_limit().expect_finite() - b.right_limit().expect_finite();
    if !d0.is_positive() && !d1.is_positive() {
        if d0.is_zero() && d1.is_zero() && b.slope < a.slope {
            return pick(b, out);
        }
        return pick(a, out);
    }
    if !d0.is_negative() && !d1.is_negative() {
        return pick(b, out);
    }
    // strict sign change: a single crossing inside the domain
    let x = &a.start + (-&d0) / (&a.slope - &b.slope);
    let (first, second) = if d0.is_negative() { (a, b) } else { (b, a) };
    out.push(Element::Segment(first.restrict(&a.start, &x)));
    out.push(Element::point(x.clone(), first.value_at(&x)));
    out.push(Element::Segment(second.restrict(&x, &a.end)));
}

/// Pointwise minimum of two sequences over the same domain.
pub fn pointwise_min(a: &Sequence, b: &Sequence) -> Sequence {
    let pieces = refine(a, b);
    bump_intervals(pieces.len() as u64);
    let mut out = Vec::with_capacity(pieces.len());
    for (x, y) in pieces {
        match (x, y) {
            (Element::Point(p), Element::Point(q)) => {
                out.push(Element::point(p.time, std::cmp::min(p.value, q.value)))
            }
            (Element::Segment(s), Element::Segment(t)) => min_segments(&s, &t, &mut out),
            _ => unreachable!("refinement pairs pieces of the same kind"),
        }
    }
    Sequence::from_raw(crate::curves::merge_elements(out.into_iter(), None))
}

fn finite_rho(f: &Curve) -> Option<Rational> {
    f.rho().finite().cloned()
}

/// `h(t) = min(f(t), g(t))`.
pub fn minimum(f: &Curve, g: &Curve) -> Result<Curve> {
    let (t, d, c) = minimum_parameters(f, g)?;
    let end = &t + &d;
    let zero = Rational::zero();
    let a = f.cut_range(&zero, &end, false)?;
    let b = g.cut_range(&zero, &end, false)?;
    Curve::assemble(pointwise_min(&a, &b), t, d, c)
}

fn minimum_parameters(f: &Curve, g: &Curve) -> Result<(Rational, Rational, Rational)> {
    let tmax = std::cmp::max(f.transient(), g.transient()).clone();
    let one = Rational::from_integer(1.into());
    if f.is_ultimately_minus_inf() || g.is_ultimately_minus_inf() {
        return Ok((tmax, one, Rational::zero()));
    }
    if f.is_ultimately_plus_inf() && g.is_ultimately_plus_inf() {
        return Ok((tmax, one, Rational::zero()));
    }
    if f.is_ultimately_plus_inf() {
        return Ok((tmax, g.period().clone(), g.increment().clone()));
    }
    if g.is_ultimately_plus_inf() {
        return Ok((tmax, f.period().clone(), f.increment().clone()));
    }
    let (rf, rg) = (finite_rho(f).unwrap(), finite_rho(g).unwrap());
    if rf == rg {
        let d = rat_lcm(f.period(), g.period())?;
        let c = &rf * &d;
        return Ok((tmax, d, c));
    }
    let (lo, hi) = if rf < rg { (f, g) } else { (g, f) };
    let bound = tail_crossing_bound(lo, hi)?;
    match bound.t_bar {
        Ext::Finite(t) => Ok((t, lo.period().clone(), lo.increment().clone())),
        _ => Err(Error::NotPlain(
            "infinite values in the periodic parts prevent a finite last crossing".into(),
        )),
    }
}

fn infinity_clash(a: &Element, b: &Element) -> bool {
    (a.is_plus_inf() && b.is_minus_inf()) || (a.is_minus_inf() && b.is_plus_inf())
}

/// Convolution of two elements.
pub fn elementary_convolution(e1: &Element, e2: &Element) -> Result<Vec<Element>> {
    if infinity_clash(e1, e2) {
        return Err(Error::InfinityClash);
    }
    bump_elementary(1);
    Ok(elementary_raw(e1, e2))
}

fn elementary_raw(e1: &Element, e2: &Element) -> Vec<Element> {
    let zero = Rational::zero();
    match (e1, e2) {
        (Element::Point(p), Element::Point(q)) => {
            vec![Element::point(&p.time + &q.time, &p.value + &q.value)]
        }
        (Element::Point(p), seg @ Element::Segment(_)) | (seg @ Element::Segment(_), Element::Point(p)) => {
            match &p.value {
                Ext::Finite(v) => vec![seg.shifted(&p.time, v)],
                inf => {
                    let Element::Segment(s) = seg else { unreachable!() };
                    vec![Element::segment(&s.start + &p.time, &s.end + &p.time, inf.clone(), zero)]
                }
            }
        }
        (Element::Segment(a), Element::Segment(b)) => {
            let start = &a.start + &b.start;
            let end = &a.end + &b.end;
            let v = &a.left_limit + &b.left_limit;
            if !v.is_finite() || a.slope == b.slope {
                return vec![Element::segment(start, end, v, a.slope.clone())];
            }
            let (flat, steep) = if a.slope < b.slope { (a, b) } else { (b, a) };
            let knee = &start + flat.length();
            let knee_value = v.add_rat(&(&flat.slope * flat.length()));
            vec![
                Element::segment(start, knee.clone(), v, flat.slope.clone()),
                Element::point(knee.clone(), knee_value.clone()),
                Element::segment(knee, end, knee_value, steep.slope.clone()),
            ]
        }
    }
}

/// A member list for one piece of the envelope domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalOfOverlap {
    pub domain: Interval,
    /// Indices into the element list passed to [`overlap_intervals`].
    pub members: Vec<usize>,
}

fn boundary_times(elements: &[Element]) -> Vec<Rational> {
    let mut times: Vec<Rational> =
        elements.iter().flat_map(|e| [e.start().clone(), e.end().clone()]).collect();
    times.sort();
    times.dedup();
    times
}

/// Point-sized and open intervals between consecutive element boundaries, each
/// with the elements defined on all of it. Point and open intervals alternate.
pub fn overlap_intervals(elements: &[Element]) -> Vec<IntervalOfOverlap> {
    let times = boundary_times(elements);
    let n = times.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); 2 * n - 1];
    let index = |t: &Rational| times.binary_search(t).expect("boundary collected");
    for (i, e) in elements.iter().enumerate() {
        match e {
            Element::Point(p) => members[2 * index(&p.time)].push(i),
            Element::Segment(s) => {
                for slot in &mut members[2 * index(&s.start) + 1..2 * index(&s.end)] {
                    slot.push(i);
                }
            }
        }
    }
    members
        .into_iter()
        .enumerate()
        .map(|(k, members)| {
            let domain = if k % 2 == 0 {
                Interval::point(times[k / 2].clone())
            } else {
                Interval {
                    lower: times[k / 2].clone().into(),
                    upper: times[k / 2 + 1].clone().into(),
                    lower_closed: false,
                    upper_closed: false,
                }
            };
            IntervalOfOverlap { domain, members }
        })
        .collect()
}

/// Lower envelope of affine pieces over `]x0, x1[`, sweeping crossings left to right.
fn envelope_lines(x0: &Rational, x1: &Rational, lines: &[&Segment], out: &mut Vec<Element>) {
    if lines.iter().any(|s| s.left_limit.is_minus_inf()) {
        out.push(Element::segment(x0.clone(), x1.clone(), MinusInf, Rational::zero()));
        return;
    }
    let finite: Vec<(Rational, &Rational)> = lines
        .iter()
        .filter_map(|s| s.value_at(x0).finite().cloned().map(|v| (v, &s.slope)))
        .collect();
    if finite.is_empty() {
        out.push(Element::segment(x0.clone(), x1.clone(), PlusInf, Rational::zero()));
        return;
    }
    let value = |(v, s): &(Rational, &Rational), x: &Rational| v + *s * (x - x0);
    let mut cur = (0..finite.len())
        .min_by(|&i, &j| (&finite[i].0, finite[i].1).cmp(&(&finite[j].0, finite[j].1)))
        .unwrap();
    let mut x = x0.clone();
    loop {
        let mut next: Option<(Rational, usize)> = None;
        for (j, line) in finite.iter().enumerate() {
            if line.1 >= finite[cur].1 {
                continue;
            }
            let xc = x0 + (&line.0 - &finite[cur].0) / (finite[cur].1 - line.1);
            if xc <= x || xc >= *x1 {
                continue;
            }
            let better = match &next {
                None => true,
                Some((bx, bj)) => xc < *bx || (xc == *bx && line.1 < finite[*bj].1),
            };
            if better {
                next = Some((xc, j));
            }
        }
        let line = &finite[cur];
        match next {
            None => {
                out.push(Element::segment(x.clone(), x1.clone(), value(line, &x).into(), line.1.clone()));
                return;
            }
            Some((xc, j)) => {
                out.push(Element::segment(x.clone(), xc.clone(), value(line, &x).into(), line.1.clone()));
                out.push(Element::point(xc.clone(), value(line, &xc).into()));
                x = xc;
                cur = j;
            }
        }
    }
}

/// Lower envelope of a list of elements, computed interval by interval.
/// Uncovered parts of the hull of the element domains are `+inf`.
pub fn lower_envelope(elements: &[Element]) -> Result<Sequence> {
    if elements.is_empty() {
        return Err(Error::InvalidArgument("lower envelope of no elements".into()));
    }
    let intervals = overlap_intervals(elements);
    bump_intervals(intervals.len() as u64);
    let mut out = Vec::with_capacity(intervals.len());
    let last = intervals.len() - 1;
    for (k, iv) in intervals.iter().enumerate() {
        let lower = iv.domain.lower.expect_finite();
        if k % 2 == 0 {
            let value = iv
                .members
                .iter()
                .map(|&i| elements[i].value_at(lower))
                .min()
                .unwrap_or(PlusInf);
            if k == last && iv.members.is_empty() {
                break;
            }
            out.push(Element::Point(Point::new(lower.clone(), value)));
        } else {
            let lines: Vec<&Segment> = iv
                .members
                .iter()
                .map(|&i| match &elements[i] {
                    Element::Segment(s) => s,
                    Element::Point(_) => unreachable!("points only cover point intervals"),
                })
                .collect();
            envelope_lines(lower, iv.domain.upper.expect_finite(), &lines, &mut out);
        }
    }
    Ok(Sequence::from_raw(crate::curves::merge_elements(out.into_iter(), None)))
}

/// `+inf`-padded closed-domain sequence built from arbitrary tiling elements.
fn closed_piece(elements: Vec<Element>) -> Sequence {
    let mut el = Vec::with_capacity(elements.len() + 2);
    if !elements[0].is_point() {
        el.push(Element::point(elements[0].start().clone(), PlusInf));
    }
    let tail = elements.last().unwrap().clone();
    el.extend(elements);
    if !tail.is_point() {
        el.push(Element::point(tail.end().clone(), PlusInf));
    }
    Sequence::from_raw(el)
}

fn pad_to(s: &Sequence, lo: &Rational, hi: &Rational) -> Sequence {
    let mut el = Vec::with_capacity(s.len() + 4);
    if lo < s.start() {
        el.push(Element::point(lo.clone(), PlusInf));
        el.push(Element::segment(lo.clone(), s.start().clone(), PlusInf, Rational::zero()));
    }
    el.extend_from_slice(s.elements());
    if s.end() < hi {
        el.push(Element::segment(s.end().clone(), hi.clone(), PlusInf, Rational::zero()));
        el.push(Element::point(hi.clone(), PlusInf));
    }
    Sequence::from_raw(el)
}

/// Minimum of two closed-domain partial functions, `+inf` outside their domains.
fn min_closed(a: &Sequence, b: &Sequence) -> Sequence {
    let lo = std::cmp::min(a.start(), b.start()).clone();
    let hi = std::cmp::max(a.end(), b.end()).clone();
    pointwise_min(&pad_to(a, &lo, &hi), &pad_to(b, &lo, &hi))
}

fn reduce_tree(mut leaves: Vec<Sequence>, deadline: Option<Instant>, parallel: bool) -> Result<Sequence> {
    if leaves.len() == 1 {
        return Ok(leaves.pop().unwrap());
    }
    check_deadline(deadline)?;
    let right = leaves.split_off(leaves.len() / 2);
    let (l, r) = if parallel && right.len() > 8 {
        rayon::join(|| reduce_tree(leaves, deadline, true), || reduce_tree(right, deadline, true))
    } else {
        (reduce_tree(leaves, deadline, false), reduce_tree(right, deadline, false))
    };
    Ok(min_closed(&l?, &r?))
}

/// Merges closed-domain partial sequences into their lower envelope over `[lo, hi[`.
pub(crate) fn envelope_over(leaves: Vec<Sequence>, lo: &Rational, hi: &Rational) -> Result<Sequence> {
    let frame = Sequence::from_raw(vec![
        Element::point(lo.clone(), PlusInf),
        Element::segment(lo.clone(), hi.clone(), PlusInf, Rational::zero()),
        Element::point(hi.clone(), PlusInf),
    ]);
    let mut all = Vec::with_capacity(leaves.len() + 1);
    all.push(frame);
    all.extend(leaves);
    let merged = reduce_tree(all, deadline(), parallel_enabled())?;
    merged.restrict(lo, hi, false)
}

/// Closed-domain partial sequence for `e1 (x) e2`, clipped at `hi`; `None` when irrelevant.
pub(crate) fn elementary_piece(e1: &Element, e2: &Element, hi: &Rational) -> Option<Sequence> {
    if e1.is_plus_inf() || e2.is_plus_inf() || e1.start() + e2.start() >= *hi {
        return None;
    }
    let raw = elementary_raw(e1, e2);
    let start = raw[0].start().clone();
    let mut clipped = Vec::with_capacity(raw.len() + 1);
    clip_into(&mut clipped, raw.into_iter(), &start, hi, true);
    if clipped.is_empty() {
        return None;
    }
    Some(closed_piece(clipped))
}

/// Row of partial results for one element of the first operand against a whole sequence.
fn row_pieces(e: &Element, b: &[Element], hi: &Rational) -> Vec<Sequence> {
    match e {
        Element::Point(p) if p.value.is_finite() => {
            // translation of b: a single tiling piece
            let v = p.value.expect_finite();
            let shifted: Vec<Element> = b
                .iter()
                .take_while(|x| &p.time + x.start() < *hi)
                .map(|x| x.shifted(&p.time, v))
                .collect();
            if shifted.is_empty() {
                return Vec::new();
            }
            let start = shifted[0].start().clone();
            let mut clipped = Vec::new();
            clip_into(&mut clipped, shifted.into_iter(), &start, hi, true);
            vec![closed_piece(clipped)]
        }
        _ => b.iter().filter_map(|x| elementary_piece(e, x, hi)).collect(),
    }
}

fn relevant_pairs(a: &Sequence, b: &Sequence, hi: &Rational, upper_triangle: bool) -> u64 {
    let (ea, eb) = (a.elements(), b.elements());
    (0..ea.len())
        .filter(|&i| !ea[i].is_plus_inf())
        .map(|i| {
            let from = if upper_triangle { i } else { 0 };
            eb[from..]
                .iter()
                .take_while(|y| ea[i].start() + y.start() < *hi)
                .filter(|y| !y.is_plus_inf())
                .count() as u64
        })
        .sum()
}

fn check_clash(a: &Sequence, b: &Sequence) -> Result<()> {
    let has = |s: &Sequence, f: fn(&Element) -> bool| s.elements().iter().any(f);
    if (has(a, Element::is_plus_inf) && has(b, Element::is_minus_inf))
        || (has(a, Element::is_minus_inf) && has(b, Element::is_plus_inf))
    {
        return Err(Error::InfinityClash);
    }
    Ok(())
}

/// Envelope of all elementary convolutions of `a` and `b`, restricted to `[lo, hi[`.
/// Exact wherever every decomposition of `t` falls inside the two domains.
pub fn convolve_sequences(a: &Sequence, b: &Sequence, lo: &Rational, hi: &Rational) -> Result<Sequence> {
    check_clash(a, b)?;
    convolve_rows(a, b, lo, hi, false)
}

/// `a (x) a` over `[lo, hi[`, convolving each unordered pair of elements once.
pub fn self_convolve_sequence(a: &Sequence, lo: &Rational, hi: &Rational) -> Result<Sequence> {
    check_clash(a, a)?;
    convolve_rows(a, a, lo, hi, true)
}

fn convolve_rows(a: &Sequence, b: &Sequence, lo: &Rational, hi: &Rational, upper_triangle: bool) -> Result<Sequence> {
    bump_elementary(relevant_pairs(a, b, hi, upper_triangle));
    let deadline = deadline();
    let build = |(i, e): (usize, &Element)| -> Result<Vec<Sequence>> {
        check_deadline(deadline)?;
        if e.is_plus_inf() {
            return Ok(Vec::new());
        }
        let from = if upper_triangle { i } else { 0 };
        Ok(row_pieces(e, &b.elements()[from..], hi))
    };
    let rows: Vec<Vec<Sequence>> = if parallel_enabled() {
        a.elements().par_iter().enumerate().map(build).collect::<Result<_>>()?
    } else {
        a.elements().iter().enumerate().map(build).collect::<Result<_>>()?
    };
    envelope_over(rows.into_iter().flatten().collect(), lo, hi)
}

/// Curve that is `+inf` on `[0, lo[` and equals `prefix` on `[lo, T + d[`.
fn curve_from_prefix(prefix: Sequence, t: Rational, d: Rational, c: Rational) -> Result<Curve> {
    let seq = prefix.prepend_plus_inf(&Rational::zero());
    Curve::assemble(seq, t, d, c)
}

/// `(f (x) g)(t) = inf_{0 <= s <= t} f(s) + g(t - s)`.
pub fn convolution(f: &Curve, g: &Curve) -> Result<Curve> {
    check_clash(f.sequence(), g.sequence())?;
    let zero = Rational::zero();
    if let (Some(rf), Some(rg)) = (finite_rho(f), finite_rho(g)) {
        if rf == rg {
            let d = rat_lcm(f.period(), g.period())?;
            let t = f.transient() + g.transient() + &d;
            let hi = &t + &d;
            let a = f.cut_range(&zero, &hi, false)?;
            let b = g.cut_range(&zero, &hi, false)?;
            let seq = convolve_sequences(&a, &b, &zero, &hi)?;
            let c = &rf * &d;
            return Curve::assemble(seq, t, d, c);
        }
    }
    let mut partials = Vec::with_capacity(4);
    if let Some(p) = transient_transient(f, g)? {
        partials.push(p);
    }
    if let Some(p) = transient_periodic(f, g)? {
        partials.push(p);
    }
    if let Some(p) = transient_periodic(g, f)? {
        partials.push(p);
    }
    if let Some(p) = periodic_periodic(f, g)? {
        partials.push(p);
    }
    let mut iter = partials.into_iter();
    let Some(mut acc) = iter.next() else {
        return Ok(crate::curves::make_plus_inf());
    };
    for p in iter {
        check_budget()?;
        acc = minimum(&acc, &p)?;
    }
    Ok(acc)
}

fn transient_transient(f: &Curve, g: &Curve) -> Result<Option<Curve>> {
    let (tf, tg) = (f.transient(), g.transient());
    if tf.is_zero() || tg.is_zero() {
        return Ok(None);
    }
    let zero = Rational::zero();
    let a = f.cut_range(&zero, tf, false)?;
    let b = g.cut_range(&zero, tg, false)?;
    let end = tf + tg;
    let seq = convolve_sequences(&a, &b, &zero, &end)?;
    let one = Rational::from_integer(1.into());
    let mut el = seq.into_elements();
    el.push(Element::point(end.clone(), PlusInf));
    el.push(Element::segment(end.clone(), &end + &one, PlusInf, zero.clone()));
    Ok(Some(Curve::assemble(Sequence::new(el)?, end, one, zero)?))
}

/// `f_t (x) g_p`: pseudo-periodic from `T_f + T_g` with the period of `g`.
fn transient_periodic(f: &Curve, g: &Curve) -> Result<Option<Curve>> {
    let tf = f.transient();
    if tf.is_zero() || g.is_ultimately_plus_inf() {
        return Ok(None);
    }
    let zero = Rational::zero();
    let a = f.cut_range(&zero, tf, false)?;
    let tg = g.transient();
    let t = tf + tg;
    let hi = &t + g.period();
    let b = g.cut_range(tg, &hi, false)?;
    let seq = convolve_sequences(&a, &b, tg, &hi)?;
    let (d, c) = if g.is_ultimately_minus_inf() {
        (g.period().clone(), zero)
    } else {
        (g.period().clone(), g.increment().clone())
    };
    Ok(Some(curve_from_prefix(seq, t, d, c)?))
}

/// `f_p (x) g_p`.
fn periodic_periodic(f: &Curve, g: &Curve) -> Result<Option<Curve>> {
    if f.is_ultimately_plus_inf() || g.is_ultimately_plus_inf() {
        return Ok(None);
    }
    let (tf, tg) = (f.transient(), g.transient());
    let d = rat_lcm(f.period(), g.period())?;
    let lo = tf + tg;
    let hi = &lo + &d + &d;
    let a = f.cut_range(tf, &(tf + &d + &d), false)?;
    let b = g.cut_range(tg, &(tg + &d + &d), false)?;
    let seq = convolve_sequences(&a, &b, &lo, &hi)?;
    let c = match std::cmp::min(f.rho(), g.rho()) {
        Ext::Finite(r) => r * &d,
        _ => Rational::zero(),
    };
    Ok(Some(curve_from_prefix(seq, &lo + &d, d, c)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{equivalent, make_delta_zero, make_rate_latency, make_token_bucket};
    use crate::numerics::{int, rat};

    fn e(s: &str) -> Ext {
        s.parse().unwrap()
    }

    fn rl(r: i64, t: i64) -> Curve {
        make_rate_latency(&int(r), &int(t)).unwrap()
    }

    #[test]
    fn minimum_of_rate_latencies() {
        let (f, g) = (rl(8, 5), rl(11, 7));
        let b = tail_crossing_bound(&f, &g).unwrap();
        assert_eq!(b.t_bar, Ext::Finite(rat(37, 3)));
        let m = minimum(&f, &g).unwrap();
        assert_eq!(m.eval(&int(10)), e("33"));
        assert_eq!(m.eval(&int(15)), e("80"));
        assert!(equivalent(&minimum(&f, &f).unwrap(), &f).unwrap());
        assert!(equivalent(&minimum(&f, &make_delta_zero()).unwrap(), &f).unwrap());
    }

    #[test]
    fn elementary_examples() {
        let p = |t, v| Element::point(int(t), Ext::from_int(v));
        assert_eq!(elementary_convolution(&p(1, 2), &p(3, 4)).unwrap(), vec![p(4, 6)]);
        let s1 = Element::segment(int(0), int(2), e("0"), int(1));
        let s2 = Element::segment(int(0), int(3), e("0"), int(2));
        let r = elementary_convolution(&s1, &s2).unwrap();
        let seq = closed_piece(r);
        assert_eq!(seq.eval(&int(1)).unwrap(), e("1"));
        assert_eq!(seq.eval(&int(4)).unwrap(), e("6"));
        assert_eq!(seq.eval_left(&int(5)).unwrap(), e("8"));
        assert_eq!(elementary_convolution(&p(0, 0), &s2).unwrap(), vec![s2.clone()]);
        let inf = Element::segment(int(0), int(1), PlusInf, int(0));
        let minf = Element::point(int(0), MinusInf);
        assert_eq!(elementary_convolution(&inf, &minf), Err(Error::InfinityClash));
    }

    #[test]
    fn envelope_of_crossing_segments() {
        let a = Element::segment(int(0), int(4), e("0"), int(1));
        let b = Element::segment(int(0), int(4), e("4"), int(-1));
        let env = lower_envelope(&[a.clone(), b]).unwrap();
        assert_eq!(env.eval(&int(1)).unwrap(), e("1"));
        assert_eq!(env.eval(&int(3)).unwrap(), e("1"));
        assert_eq!(env.eval(&int(2)).unwrap(), e("2"));
        assert_eq!(env.len(), 4);
        let single = lower_envelope(&[Element::point(int(1), e("3"))]).unwrap();
        assert_eq!(single.len(), 1);
        let with_inf = lower_envelope(&[a.clone(), Element::segment(int(0), int(4), PlusInf, int(0))]).unwrap();
        assert_eq!(with_inf.elements()[1], a);
        assert!(lower_envelope(&[]).is_err());
    }

    #[test]
    fn rate_latency_convolution() {
        let h = convolution(&rl(8, 5), &rl(11, 7)).unwrap();
        assert!(equivalent(&h, &rl(8, 12)).unwrap());
        let f = make_token_bucket(&int(2), &int(3)).unwrap();
        assert!(equivalent(&convolution(&f, &make_delta_zero()).unwrap(), &f).unwrap());
        assert!(equivalent(&convolution(&make_delta_zero(), &f).unwrap(), &f).unwrap());
    }

    #[test]
    fn counters_track_elementary_work() {
        reset_counters();
        convolution(&rl(8, 5), &rl(8, 3)).unwrap();
        assert!(counters().elementary_convolutions > 0);
        reset_counters();
        assert_eq!(counters(), Counters::default());
    }

    #[test]
    fn expired_deadline_aborts() {
        set_deadline(Some(Instant::now()));
        let r = convolution(&rl(8, 5), &rl(11, 7));
        set_deadline(None);
        assert_eq!(r, Err(Error::BudgetExceeded));
    }
}
