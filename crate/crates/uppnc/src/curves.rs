//! Ultimately pseudo-periodic piecewise-affine functions.
//!
//! A [`Curve`] stores a [`Sequence`] over `[0, T + d[` together with the
//! transient length `T`, period `d` and increment `c`; beyond `T` the function
//! satisfies `f(t + d) = f(t) + c`. Sequences alternate points and open
//! segments and always start with a point.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::{
    floor_int, format_rational, int, parse_rational, rat_lcm, ExtendedRational,
    Rational, MinusInf, PlusInf,
};

type Ext = ExtendedRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Point {
    pub time: Rational,
    pub value: Ext,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub start: Rational,
    pub end: Rational,
    /// Value approached at `start` from the right.
    pub left_limit: Ext,
    pub slope: Rational,
}

impl Point {
    pub fn new(time: Rational, value: Ext) -> Self {
        Point { time, value }
    }
}

impl Segment {
    /// Builds a segment; an infinite segment gets slope 0.
    pub fn new(start: Rational, end: Rational, left_limit: Ext, slope: Rational) -> Self {
        debug_assert!(start < end, "segment must have positive length");
        let slope = if left_limit.is_finite() { slope } else { Rational::zero() };
        Segment { start, end, left_limit, slope }
    }

    pub fn constant(start: Rational, end: Rational, value: Ext) -> Self {
        Segment::new(start, end, value, Rational::zero())
    }

    pub fn length(&self) -> Rational {
        &self.end - &self.start
    }

    /// Value of the supporting line at `t`; at the ends this is the one-sided limit.
    pub fn value_at(&self, t: &Rational) -> Ext {
        match &self.left_limit {
            Ext::Finite(v) => Ext::Finite(v + &self.slope * (t - &self.start)),
            inf => inf.clone(),
        }
    }

    /// Value approached at `end` from the left.
    pub fn right_limit(&self) -> Ext {
        self.value_at(&self.end)
    }

    /// The same line restricted to `]a, b[`.
    pub fn restrict(&self, a: &Rational, b: &Rational) -> Segment {
        Segment::new(a.clone(), b.clone(), self.value_at(a), self.slope.clone())
    }

    pub fn same_line(&self, other: &Segment) -> bool {
        self.slope == other.slope && self.value_at(&other.start) == other.left_limit
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    Point(Point),
    Segment(Segment),
}

impl Element {
    pub fn point(time: Rational, value: Ext) -> Self {
        Element::Point(Point::new(time, value))
    }

    pub fn segment(start: Rational, end: Rational, left_limit: Ext, slope: Rational) -> Self {
        Element::Segment(Segment::new(start, end, left_limit, slope))
    }

    pub fn start(&self) -> &Rational {
        match self {
            Element::Point(p) => &p.time,
            Element::Segment(s) => &s.start,
        }
    }

    pub fn end(&self) -> &Rational {
        match self {
            Element::Point(p) => &p.time,
            Element::Segment(s) => &s.end,
        }
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Element::Point(_))
    }

    /// True when the element is `+inf` on its whole domain.
    pub fn is_plus_inf(&self) -> bool {
        match self {
            Element::Point(p) => p.value.is_plus_inf(),
            Element::Segment(s) => s.left_limit.is_plus_inf(),
        }
    }

    pub fn is_minus_inf(&self) -> bool {
        match self {
            Element::Point(p) => p.value.is_minus_inf(),
            Element::Segment(s) => s.left_limit.is_minus_inf(),
        }
    }

    pub fn shifted(&self, dt: &Rational, dv: &Rational) -> Element {
        match self {
            Element::Point(p) => Element::point(&p.time + dt, p.value.add_rat(dv)),
            Element::Segment(s) => Element::Segment(Segment {
                start: &s.start + dt,
                end: &s.end + dt,
                left_limit: s.left_limit.add_rat(dv),
                slope: s.slope.clone(),
            }),
        }
    }

    /// Value at `t`, which must lie in the element's (closure of) domain.
    pub fn value_at(&self, t: &Rational) -> Ext {
        match self {
            Element::Point(p) => p.value.clone(),
            Element::Segment(s) => s.value_at(t),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Point(p) => write!(f, "P {} {}", format_rational(&p.time), p.value),
            Element::Segment(s) => write!(
                f,
                "S {} {} {} {}",
                format_rational(&s.start),
                format_rational(&s.end),
                s.left_limit,
                format_rational(&s.slope)
            ),
        }
    }
}

/// Alternating points and open segments tiling `[start, end[`, or `[start, end]`
/// when the last element is a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    elements: Vec<Element>,
}

impl Sequence {
    pub fn new(elements: Vec<Element>) -> Result<Self> {
        let s = Sequence { elements };
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn from_raw(elements: Vec<Element>) -> Self {
        let s = Sequence { elements };
        debug_assert!(s.validate().is_ok(), "{:?}", s.validate());
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSequence(m));
        if self.elements.is_empty() {
            return bad("empty".into());
        }
        for (i, e) in self.elements.iter().enumerate() {
            if (i % 2 == 0) != e.is_point() {
                return bad(format!("element {i} breaks the point/segment alternation"));
            }
            if let Element::Segment(s) = e {
                if s.start >= s.end {
                    return bad(format!("segment {i} has empty domain"));
                }
                if s.left_limit.is_infinite() && !s.slope.is_zero() {
                    return bad(format!("infinite segment {i} has nonzero slope"));
                }
                if s.start != *self.elements[i - 1].start() {
                    return bad(format!("gap before segment {i}"));
                }
                if let Some(next) = self.elements.get(i + 1) {
                    if next.start() != &s.end {
                        return bad(format!("gap after segment {i}"));
                    }
                }
            }
        }
        if self.elements[0].start().is_negative() {
            return bad("negative start".into());
        }
        Ok(())
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<Element> {
        self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn start(&self) -> &Rational {
        self.elements[0].start()
    }

    pub fn end(&self) -> &Rational {
        self.elements.last().unwrap().end()
    }

    /// Whether the domain includes its right end.
    pub fn closed_end(&self) -> bool {
        self.elements.last().unwrap().is_point()
    }

    pub fn contains(&self, t: &Rational) -> bool {
        t >= self.start() && (t < self.end() || (self.closed_end() && t == self.end()))
    }

    fn point_count(&self) -> usize {
        self.elements.len().div_ceil(2)
    }

    fn point_time(&self, k: usize) -> &Rational {
        self.elements[2 * k].start()
    }

    /// Index of the last point with time <= t (or < t when `strict`).
    fn last_point_before(&self, t: &Rational, strict: bool) -> Option<usize> {
        let n = self.point_count();
        let idx = if strict {
            partition(n, |k| self.point_time(k) < t)
        } else {
            partition(n, |k| self.point_time(k) <= t)
        };
        idx.checked_sub(1)
    }

    /// Index of the element whose domain contains `t`.
    pub fn locate(&self, t: &Rational) -> Option<usize> {
        let k = self.last_point_before(t, false)?;
        if self.point_time(k) == t {
            return Some(2 * k);
        }
        match self.elements.get(2 * k + 1) {
            Some(Element::Segment(s)) if t < &s.end => Some(2 * k + 1),
            _ => None,
        }
    }

    pub fn eval(&self, t: &Rational) -> Option<Ext> {
        self.locate(t).map(|i| self.elements[i].value_at(t))
    }

    /// Limit from the left at `t`.
    pub fn eval_left(&self, t: &Rational) -> Option<Ext> {
        let k = self.last_point_before(t, true)?;
        match self.elements.get(2 * k + 1) {
            Some(Element::Segment(s)) if t <= &s.end => Some(s.value_at(t)),
            _ => None,
        }
    }

    /// Limit from the right at `t`.
    pub fn eval_right(&self, t: &Rational) -> Option<Ext> {
        let k = self.last_point_before(t, false)?;
        match self.elements.get(2 * k + 1) {
            Some(Element::Segment(s)) if t < &s.end => Some(s.value_at(t)),
            _ => None,
        }
    }

    pub fn translate(&self, dt: &Rational, dv: &Rational) -> Sequence {
        Sequence { elements: self.elements.iter().map(|e| e.shifted(dt, dv)).collect() }
    }

    /// Merges collinear segment-point-segment triplets.
    pub fn merge_well_formed(&self) -> Sequence {
        self.merge_keeping(None)
    }

    /// Like [`Sequence::merge_well_formed`] but never removes the point at `keep`.
    pub fn merge_keeping(&self, keep: Option<&Rational>) -> Sequence {
        Sequence { elements: merge_elements(self.elements.iter().cloned(), keep) }
    }

    /// Restriction to `[a, b[` (or `[a, b]`); `a` must lie in the domain.
    pub fn restrict(&self, a: &Rational, b: &Rational, closed_end: bool) -> Result<Sequence> {
        let i = self
            .locate(a)
            .ok_or_else(|| Error::InvalidArgument("restriction starts outside the domain".into()))?;
        let mut out = Vec::new();
        clip_into(&mut out, self.elements[i..].iter().cloned(), a, b, closed_end);
        let s = Sequence { elements: out };
        s.validate()?;
        Ok(s)
    }

    /// Same function with a point at `t` (splitting a segment if needed).
    pub fn split_at(&self, t: &Rational) -> Sequence {
        match self.locate(t) {
            Some(i) if !self.elements[i].is_point() => {
                let Element::Segment(s) = &self.elements[i] else { unreachable!() };
                let mut el = Vec::with_capacity(self.len() + 2);
                el.extend_from_slice(&self.elements[..i]);
                el.push(Element::Segment(s.restrict(&s.start, t)));
                el.push(Element::point(t.clone(), s.value_at(t)));
                el.push(Element::Segment(s.restrict(t, &s.end)));
                el.extend_from_slice(&self.elements[i + 1..]);
                Sequence { elements: el }
            }
            _ => self.clone(),
        }
    }

    /// Sequence over `[lo, end[` that is `+inf` on `[lo, start[` and `self` afterwards.
    pub fn prepend_plus_inf(&self, lo: &Rational) -> Sequence {
        if lo >= self.start() {
            return self.clone();
        }
        let mut el = Vec::with_capacity(self.len() + 2);
        el.push(Element::point(lo.clone(), PlusInf));
        el.push(Element::segment(lo.clone(), self.start().clone(), PlusInf, Rational::zero()));
        el.extend_from_slice(&self.elements);
        Sequence { elements: el }
    }

    /// CSV rows with columns `t,kind,value,left_limit,slope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,kind,value,left_limit,slope\n");
        for e in &self.elements {
            match e {
                Element::Point(p) => {
                    out.push_str(&format!("{},point,{},,\n", format_rational(&p.time), p.value))
                }
                Element::Segment(s) => out.push_str(&format!(
                    "{},segment,,{},{}\n",
                    format_rational(&s.start),
                    s.left_limit,
                    format_rational(&s.slope)
                )),
            }
        }
        out
    }

    /// Inverse of [`Sequence::to_csv`]; the last segment ends at `end`.
    pub fn from_csv(text: &str, end: &Rational) -> Result<Sequence> {
        let mut el: Vec<Element> = Vec::new();
        for (no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::ParseLine { line: no + 1, msg: msg.to_string() };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let t = parse_rational(cols[0])?;
            if let Some(Element::Segment(s)) = el.last_mut() {
                s.end = t.clone();
            }
            match cols[1] {
                "point" => el.push(Element::point(t, cols[2].parse()?)),
                // the end is patched in when the next element arrives
                "segment" => el.push(Element::Segment(Segment {
                    start: t.clone(),
                    end: t,
                    left_limit: cols[3].parse()?,
                    slope: parse_rational(cols[4])?,
                })),
                _ => return Err(bad("unknown element kind")),
            }
        }
        if let Some(Element::Segment(s)) = el.last_mut() {
            s.end = end.clone();
        }
        Sequence::new(el)
    }
}

fn partition(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Appends elements of a tiling stream, clipped to `[a, b[` or `[a, b]`.
/// The first streamed element must contain `a`.
pub(crate) fn clip_into(
    out: &mut Vec<Element>,
    stream: impl Iterator<Item = Element>,
    a: &Rational,
    b: &Rational,
    closed_end: bool,
) {
    let mut first = true;
    for e in stream {
        match e {
            Element::Point(p) => {
                if p.time > *b || (p.time == *b && !closed_end) {
                    return;
                }
                let done = p.time == *b;
                out.push(Element::Point(p));
                if done {
                    return;
                }
            }
            Element::Segment(s) => {
                let start = if first && s.start < *a {
                    out.push(Element::point(a.clone(), s.value_at(a)));
                    a.clone()
                } else {
                    s.start.clone()
                };
                if s.end > *b {
                    if start < *b {
                        out.push(Element::Segment(s.restrict(&start, b)));
                    }
                    if closed_end {
                        out.push(Element::point(b.clone(), s.value_at(b)));
                    }
                    return;
                }
                out.push(Element::Segment(s.restrict(&start, &s.end)));
            }
        }
        first = false;
    }
}

pub(crate) fn merge_elements(
    input: impl Iterator<Item = Element>,
    keep: Option<&Rational>,
) -> Vec<Element> {
    let mut out: Vec<Element> = Vec::new();
    for e in input {
        if let Element::Segment(next) = &e {
            let n = out.len();
            if n >= 2 {
                if let (Element::Segment(prev), Element::Point(p)) = (&out[n - 2], &out[n - 1]) {
                    let mergeable = Some(&p.time) != keep
                        && prev.slope == next.slope
                        && prev.right_limit() == p.value
                        && p.value == next.left_limit;
                    if mergeable {
                        let end = next.end.clone();
                        out.pop();
                        if let Some(Element::Segment(prev)) = out.last_mut() {
                            prev.end = end;
                        }
                        continue;
                    }
                }
            }
        }
        out.push(e);
    }
    out
}

/// A bounded interval with open/closed ends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lower: Ext,
    pub upper: Ext,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Interval {
    /// `[a, b[`
    pub fn closed_open(a: Rational, b: Rational) -> Self {
        Interval { lower: a.into(), upper: b.into(), lower_closed: true, upper_closed: false }
    }

    /// `[a, b]`
    pub fn closed(a: Rational, b: Rational) -> Self {
        Interval { lower: a.into(), upper: b.into(), lower_closed: true, upper_closed: true }
    }

    pub fn point(a: Rational) -> Self {
        Interval::closed(a.clone(), a)
    }
}

/// `(S, T, d, c)`: the sequence over `[0, T + d[`, transient `T`, period `d`, increment `c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    seq: Sequence,
    transient: Rational,
    period: Rational,
    increment: Rational,
    periodic_index: usize,
}

impl Curve {
    pub fn new(seq: Sequence, transient: Rational, period: Rational, increment: Rational) -> Result<Self> {
        seq.validate()?;
        if !period.is_positive() {
            return Err(Error::InvalidArgument("period must be positive".into()));
        }
        if transient.is_negative() {
            return Err(Error::InvalidArgument("transient must be nonnegative".into()));
        }
        if !seq.start().is_zero() || seq.closed_end() || *seq.end() != &transient + &period {
            return Err(Error::InvalidSequence(format!(
                "sequence must cover [0, T + d[ = [0, {}[",
                format_rational(&(&transient + &period))
            )));
        }
        let periodic_index = seq
            .locate(&transient)
            .filter(|&i| seq.elements[i].is_point())
            .ok_or_else(|| Error::InvalidSequence("no point at T".into()))?;
        Ok(Curve { seq, transient, period, increment, periodic_index })
    }

    /// Builds a curve from any sequence covering `[0, T + d[`, inserting the point at `T`
    /// and merging redundant points.
    pub fn assemble(seq: Sequence, transient: Rational, period: Rational, increment: Rational) -> Result<Self> {
        let seq = seq.split_at(&transient).merge_keeping(Some(&transient));
        Curve::new(seq, transient, period, increment)
    }

    pub fn from_elements(
        elements: Vec<Element>,
        transient: Rational,
        period: Rational,
        increment: Rational,
    ) -> Result<Self> {
        Curve::new(Sequence::new(elements)?, transient, period, increment)
    }

    pub fn sequence(&self) -> &Sequence {
        &self.seq
    }

    pub fn elements(&self) -> &[Element] {
        self.seq.elements()
    }

    pub fn transient(&self) -> &Rational {
        &self.transient
    }

    pub fn period(&self) -> &Rational {
        &self.period
    }

    pub fn increment(&self) -> &Rational {
        &self.increment
    }

    /// Number of elements in the stored sequence.
    pub fn cardinality(&self) -> usize {
        self.seq.len()
    }

    /// Index of the point at `T`.
    pub fn periodic_index(&self) -> usize {
        self.periodic_index
    }

    pub fn periodic_elements(&self) -> &[Element] {
        &self.seq.elements()[self.periodic_index..]
    }

    pub fn transient_elements(&self) -> &[Element] {
        &self.seq.elements()[..self.periodic_index]
    }

    /// End of the stored sequence, `T + d`.
    pub fn horizon(&self) -> Rational {
        &self.transient + &self.period
    }

    pub fn is_ultimately_plus_inf(&self) -> bool {
        self.periodic_elements().iter().all(Element::is_plus_inf)
    }

    pub fn is_ultimately_minus_inf(&self) -> bool {
        self.periodic_elements().iter().all(Element::is_minus_inf)
    }

    /// Long-run slope `c / d`, or an infinity for ultimately infinite curves.
    pub fn rho(&self) -> Ext {
        if self.is_ultimately_plus_inf() {
            PlusInf
        } else if self.is_ultimately_minus_inf() {
            MinusInf
        } else {
            Ext::Finite(&self.increment / &self.period)
        }
    }

    pub fn has_plus_inf(&self) -> bool {
        self.elements().iter().any(Element::is_plus_inf)
    }

    pub fn has_minus_inf(&self) -> bool {
        self.elements().iter().any(Element::is_minus_inf)
    }

    /// Reduces `t >= T` to `(k, t - k d)` with the remainder in `[T, T + d[`.
    fn reduce(&self, t: &Rational) -> (BigInt, Rational) {
        let k = floor_int(&((t - &self.transient) / &self.period));
        let r = t - Rational::from_integer(k.clone()) * &self.period;
        (k, r)
    }

    fn lift(&self, v: Ext, k: &BigInt) -> Ext {
        if k.is_zero() {
            v
        } else {
            v.add_rat(&(Rational::from_integer(k.clone()) * &self.increment))
        }
    }

    pub fn eval(&self, t: &Rational) -> Ext {
        assert!(!t.is_negative(), "eval at negative time");
        if *t < self.horizon() {
            return self.seq.eval(t).expect("time within stored domain");
        }
        let (k, r) = self.reduce(t);
        self.lift(self.seq.eval(&r).expect("reduced time in period"), &k)
    }

    /// `f(t-)` for `t > 0`.
    pub fn eval_left(&self, t: &Rational) -> Ext {
        assert!(t.is_positive(), "left limit needs t > 0");
        if *t <= self.horizon() {
            return self.seq.eval_left(t).expect("time within stored domain");
        }
        let (mut k, mut r) = self.reduce(t);
        if r == self.transient {
            k -= 1;
            r += &self.period;
        }
        self.lift(self.seq.eval_left(&r).expect("reduced time in period"), &k)
    }

    /// `f(t+)`.
    pub fn eval_right(&self, t: &Rational) -> Ext {
        assert!(!t.is_negative(), "eval at negative time");
        if *t < self.horizon() {
            return self.seq.eval_right(t).expect("time within stored domain");
        }
        let (k, r) = self.reduce(t);
        self.lift(self.seq.eval_right(&r).expect("reduced time in period"), &k)
    }

    /// Elements of the infinite extension, starting from the one containing `a`.
    fn stream_from(&self, a: &Rational) -> impl Iterator<Item = Element> + '_ {
        let (mut k, r) = if *a < self.horizon() {
            (BigInt::zero(), a.clone())
        } else {
            self.reduce(a)
        };
        let mut idx = self.seq.locate(&r).expect("start within stored domain");
        let n = self.seq.len();
        std::iter::from_fn(move || {
            if idx == n {
                idx = self.periodic_index;
                k += 1;
            }
            let e = &self.seq.elements[idx];
            idx += 1;
            Some(if k.is_zero() {
                e.clone()
            } else {
                let kr = Rational::from_integer(k.clone());
                e.shifted(&(&kr * &self.period), &(&kr * &self.increment))
            })
        })
    }

    /// Sequence over `[a, b[`, or `[a, b]` when `closed_end`.
    pub fn cut_range(&self, a: &Rational, b: &Rational, closed_end: bool) -> Result<Sequence> {
        if a.is_negative() {
            return Err(Error::InvalidArgument("cut below 0".into()));
        }
        if a > b || (a == b && !closed_end) {
            return Err(Error::InvalidArgument("empty cut interval".into()));
        }
        let mut out = Vec::new();
        clip_into(&mut out, self.stream_from(a), a, b, closed_end);
        Ok(Sequence::from_raw(out))
    }

    pub fn cut(&self, interval: &Interval) -> Result<Sequence> {
        let (a, b) = match (interval.lower.finite(), interval.upper.finite()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Unbounded),
        };
        if !interval.lower_closed {
            return Err(Error::InvalidArgument("cuts start with a point; lower bound must be closed".into()));
        }
        self.cut_range(a, b, interval.upper_closed)
    }

    /// Same function with another valid `(T, d, c)`; the caller guarantees validity.
    pub fn reparametrize(&self, transient: Rational, period: Rational, increment: Rational) -> Result<Curve> {
        let end = &transient + &period;
        let seq = self.cut_range(&Rational::zero(), &end, false)?;
        Curve::assemble(seq, transient, period, increment)
    }

    /// Stored sequence with redundant points removed, keeping the point at `T`.
    pub fn merged(&self) -> Curve {
        let seq = self.seq.merge_keeping(Some(&self.transient));
        Curve::new(seq, self.transient.clone(), self.period.clone(), self.increment.clone())
            .expect("merging preserves validity")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "upp T={} d={} c={}\n",
            format_rational(&self.transient),
            format_rational(&self.period),
            format_rational(&self.increment)
        );
        for e in self.elements() {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Curve> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::ParseLine { line: 1, msg: "empty curve file".into() })?;
        let perr = |line: usize, msg: String| Error::ParseLine { line, msg };
        let mut words = header.split_whitespace();
        if words.next() != Some("upp") {
            return Err(perr(hl, "expected header 'upp T=.. d=.. c=..'".into()));
        }
        let mut params = [None, None, None];
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| perr(hl, format!("bad parameter {w:?}")))?;
            let slot = match k {
                "T" => 0,
                "d" => 1,
                "c" => 2,
                _ => return Err(perr(hl, format!("unknown parameter {k:?}"))),
            };
            params[slot] = Some(parse_rational(v).map_err(|e| perr(hl, e.to_string()))?);
        }
        let [Some(t), Some(d), Some(c)] = params else {
            return Err(perr(hl, "header needs T, d and c".into()));
        };
        let mut elements = Vec::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let r = |s: &str| parse_rational(s).map_err(|e| perr(ln, e.to_string()));
            let x = |s: &str| s.parse::<Ext>().map_err(|e| perr(ln, e.to_string()));
            match f.as_slice() {
                ["P", t, v] => elements.push(Element::point(r(t)?, x(v)?)),
                ["S", a, b, v, s] => {
                    let (a, b) = (r(a)?, r(b)?);
                    if a >= b {
                        return Err(perr(ln, "segment with empty domain".into()));
                    }
                    elements.push(Element::segment(a, b, x(v)?, r(s)?))
                }
                _ => return Err(perr(ln, format!("unrecognized element {line:?}"))),
            }
        }
        Curve::from_elements(elements, t, d, c)
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn zero() -> Rational {
    Rational::zero()
}

fn one() -> Rational {
    Rational::one()
}

/// `R [t - theta]^+`.
pub fn make_rate_latency(rate: &Rational, latency: &Rational) -> Result<Curve> {
    if !rate.is_positive() {
        return Err(Error::InvalidArgument("rate must be positive".into()));
    }
    if latency.is_negative() {
        return Err(Error::InvalidArgument("latency must be nonnegative".into()));
    }
    let z = Ext::zero;
    let mut el = vec![Element::point(zero(), z())];
    if latency.is_positive() {
        el.push(Element::segment(zero(), latency.clone(), z(), zero()));
        el.push(Element::point(latency.clone(), z()));
    }
    el.push(Element::segment(latency.clone(), latency + one(), z(), rate.clone()));
    Curve::from_elements(el, latency.clone(), one(), rate.clone())
}

/// `0` at the origin, `sigma + rho t` afterwards.
pub fn make_token_bucket(sigma: &Rational, rho: &Rational) -> Result<Curve> {
    if sigma.is_negative() || rho.is_negative() {
        return Err(Error::InvalidArgument("token bucket parameters must be nonnegative".into()));
    }
    if sigma.is_zero() {
        let el = vec![Element::point(zero(), Ext::zero()), Element::segment(zero(), one(), Ext::zero(), rho.clone())];
        return Curve::from_elements(el, zero(), one(), rho.clone());
    }
    // the jump at 0 is not repeated, so the periodic part starts after it
    let el = vec![
        Element::point(zero(), Ext::zero()),
        Element::segment(zero(), one(), sigma.into(), rho.clone()),
        Element::point(one(), (sigma + rho).into()),
        Element::segment(one(), int(2), (sigma + rho).into(), rho.clone()),
    ];
    Curve::from_elements(el, one(), one(), rho.clone())
}

/// `0` at the origin, `+inf` afterwards.
pub fn make_delta_zero() -> Curve {
    let el = vec![
        Element::point(zero(), Ext::zero()),
        Element::segment(zero(), one(), PlusInf, zero()),
        Element::point(one(), PlusInf),
        Element::segment(one(), int(2), PlusInf, zero()),
    ];
    Curve::from_elements(el, one(), one(), zero()).expect("valid constant")
}

/// The constant function 0.
pub fn make_zero() -> Curve {
    let el = vec![Element::point(zero(), Ext::zero()), Element::segment(zero(), one(), Ext::zero(), zero())];
    Curve::from_elements(el, zero(), one(), zero()).expect("valid constant")
}

/// `+inf` everywhere, including the origin.
pub fn make_plus_inf() -> Curve {
    let el = vec![Element::point(zero(), PlusInf), Element::segment(zero(), one(), PlusInf, zero())];
    Curve::from_elements(el, zero(), one(), zero()).expect("valid constant")
}

/// `f` on `[0, t_end[`, `+inf` from `t_end` on.
pub fn restrict_support(f: &Curve, t_end: &Rational) -> Result<Curve> {
    if !t_end.is_positive() {
        return Ok(make_plus_inf());
    }
    let mut el = f.cut_range(&zero(), t_end, false)?.into_elements();
    el.push(Element::point(t_end.clone(), PlusInf));
    el.push(Element::segment(t_end.clone(), t_end + one(), PlusInf, zero()));
    Curve::from_elements(el, t_end.clone(), one(), zero())
}

/// `g(0) = 0`, `g(t) = f(t) + w` for `t > 0`.
pub fn add_jump(f: &Curve, w: &Ext) -> Result<Curve> {
    if f.eval(&zero()) != Ext::zero() {
        return Err(Error::Precondition("add_jump needs f(0) = 0".into()));
    }
    let w = match w {
        PlusInf => return Ok(make_delta_zero()),
        MinusInf => return Err(Error::InvalidArgument("jump must be nonnegative".into())),
        Ext::Finite(w) if w.is_negative() => {
            return Err(Error::InvalidArgument("jump must be nonnegative".into()))
        }
        Ext::Finite(w) => w,
    };
    let base = if f.transient().is_zero() && w.is_positive() {
        // unroll one period so the origin stays outside the periodic part
        f.reparametrize(f.period().clone(), f.period().clone(), f.increment().clone())?
    } else {
        f.clone()
    };
    let el = base
        .elements()
        .iter()
        .enumerate()
        .map(|(i, e)| if i == 0 { e.clone() } else { e.shifted(&zero(), w) })
        .collect();
    Curve::from_elements(el, base.transient().clone(), base.period().clone(), base.increment().clone())
}

pub fn eval(f: &Curve, t: &Rational) -> Ext {
    f.eval(t)
}

pub fn cut(f: &Curve, interval: &Interval) -> Result<Sequence> {
    f.cut(interval)
}

pub fn merge_well_formed(s: &Sequence) -> Sequence {
    s.merge_well_formed()
}

/// Pieces of the common refinement of two sequences over the same domain.
pub(crate) fn refine(a: &Sequence, b: &Sequence) -> Vec<(Element, Element)> {
    debug_assert_eq!(a.start(), b.start());
    debug_assert_eq!(a.end(), b.end());
    let (ea, eb) = (a.elements(), b.elements());
    let (mut i, mut j) = (0usize, 0usize);
    let mut out = Vec::with_capacity(ea.len() + eb.len());
    // invariant: ea[i], eb[j] both contain the current piece
    let mut cursor = a.start().clone();
    let mut at_point = true;
    loop {
        if at_point {
            let pa = match &ea[i] {
                Element::Point(p) => p.value.clone(),
                Element::Segment(s) => s.value_at(&cursor),
            };
            let pb = match &eb[j] {
                Element::Point(p) => p.value.clone(),
                Element::Segment(s) => s.value_at(&cursor),
            };
            out.push((Element::point(cursor.clone(), pa), Element::point(cursor.clone(), pb)));
            if ea[i].is_point() {
                i += 1;
            }
            if eb[j].is_point() {
                j += 1;
            }
            if i >= ea.len() || j >= eb.len() {
                break;
            }
            at_point = false;
        } else {
            let (Element::Segment(sa), Element::Segment(sb)) = (&ea[i], &eb[j]) else {
                unreachable!("open pieces lie inside segments")
            };
            let next = std::cmp::min(&sa.end, &sb.end).clone();
            out.push((Element::Segment(sa.restrict(&cursor, &next)), Element::Segment(sb.restrict(&cursor, &next))));
            if sa.end == next {
                i += 1;
            }
            if sb.end == next {
                j += 1;
            }
            cursor = next;
            if i >= ea.len() || j >= eb.len() {
                break;
            }
            at_point = true;
        }
    }
    out
}

fn piece_clash(x: &Element, y: &Element) -> bool {
    (x.is_plus_inf() && y.is_minus_inf()) || (x.is_minus_inf() && y.is_plus_inf())
}

/// Whether two sequences over the same domain describe the same function.
pub fn sequences_equal(a: &Sequence, b: &Sequence) -> Result<bool> {
    if a.start() != b.start() || a.end() != b.end() || a.closed_end() != b.closed_end() {
        return Err(Error::InvalidArgument("sequences cover different domains".into()));
    }
    let mut equal = true;
    for (x, y) in refine(a, b) {
        if piece_clash(&x, &y) {
            return Err(Error::InfinityClash);
        }
        equal &= x == y;
    }
    Ok(equal)
}

/// Whether `f(t) = g(t)` for all `t >= 0`.
pub fn equivalent(f: &Curve, g: &Curve) -> Result<bool> {
    equal_from(f, g, &zero())
}

/// Whether `f(t) = g(t)` for all `t >= from`.
pub fn equal_from(f: &Curve, g: &Curve, from: &Rational) -> Result<bool> {
    let lcm = rat_lcm(f.period(), g.period())?;
    let start = std::cmp::max(std::cmp::max(f.transient(), g.transient()), from).clone();
    let end = start + lcm;
    let a = f.cut_range(from, &end, false)?.merge_well_formed();
    let b = g.cut_range(from, &end, false)?.merge_well_formed();
    if a == b {
        return Ok(true);
    }
    sequences_equal(&a, &b)
}
