//! Representation minimization: shortest period, then shortest transient.

use num_traits::{ToPrimitive, Zero};

use crate::curves::{refine, Curve, Element};
use crate::error::Result;
use crate::numerics::{factorize, floor_int, Rational};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MinimizationReport {
    pub original_cardinality: usize,
    pub minimized_cardinality: usize,
    /// Breakpoints of the input in `]T, T + d]`.
    pub breakpoint_count: u64,
    pub factors_tested: Vec<(u64, bool)>,
    pub periods_removed: u64,
    pub transient_segments_removed: u64,
}

impl MinimizationReport {
    pub const CSV_HEADER: &'static str =
        "original_cardinality,minimized_cardinality,breakpoints,factors_tested,periods_removed,transient_segments_removed";

    pub fn csv_row(&self) -> String {
        let factors: Vec<String> = self
            .factors_tested
            .iter()
            .map(|(p, ok)| format!("{p}{}", if *ok { "+" } else { "-" }))
            .collect();
        format!(
            "{},{},{},{},{},{}",
            self.original_cardinality,
            self.minimized_cardinality,
            self.breakpoint_count,
            factors.join(" "),
            self.periods_removed,
            self.transient_segments_removed
        )
    }

    /// Product of the accepted factors: input period over output period.
    pub fn period_ratio(&self) -> u64 {
        self.factors_tested.iter().filter(|(_, ok)| *ok).map(|(p, _)| p).product()
    }
}

/// Breakpoints in `]T, T + d]`, judged on the periodic extension.
pub fn count_breakpoints(f: &Curve) -> Result<u64> {
    let t = f.transient();
    let d = f.period();
    let hi = t + d;
    let seq = f.cut_range(t, &(&hi + d), false)?.merge_well_formed();
    Ok(seq
        .elements()
        .iter()
        .filter(|e| e.is_point() && e.start() > t && *e.start() <= hi)
        .count() as u64)
}

/// Whether `f(t + s) = f(t) + v` for all `t >= T`, checked over one period.
fn shift_invariant(f: &Curve, s: &Rational, v: &Rational) -> Result<bool> {
    let t = f.transient();
    let hi = t + f.period();
    let base = f.cut_range(t, &hi, false)?.merge_well_formed();
    let moved = f
        .cut_range(&(t + s), &(&hi + s), false)?
        .translate(&-s, &-v)
        .merge_well_formed();
    Ok(base == moved)
}

pub fn minimize_period(f: &Curve) -> Result<(Curve, MinimizationReport)> {
    let mut report = MinimizationReport {
        original_cardinality: f.cardinality(),
        ..Default::default()
    };
    let b = count_breakpoints(f)?;
    report.breakpoint_count = b;
    let one = Rational::from_integer(1.into());
    if b == 0 {
        let c = f.rho().finite().cloned().unwrap_or_else(Rational::zero);
        let g = if *f.period() == one && *f.increment() == c {
            f.clone()
        } else {
            f.reparametrize(f.transient().clone(), one, c)?
        };
        report.minimized_cardinality = g.cardinality();
        return Ok((g, report));
    }
    let mut primes = factorize(b)?;
    primes.dedup();
    let mut multiplicity: Vec<(u64, u32)> = Vec::new();
    let mut rest = b;
    for p in primes {
        let mut m = 0;
        while rest % p == 0 {
            rest /= p;
            m += 1;
        }
        multiplicity.push((p, m));
    }
    let mut g = f.clone();
    for (p, m) in multiplicity {
        let pr = Rational::from_integer(p.into());
        for _ in 0..m {
            crate::minplus::check_budget()?;
            let s = g.period() / &pr;
            let v = g.increment() / &pr;
            let ok = shift_invariant(&g, &s, &v)?;
            report.factors_tested.push((p, ok));
            if !ok {
                break;
            }
            g = g.reparametrize(g.transient().clone(), s, v)?;
        }
    }
    report.minimized_cardinality = g.cardinality();
    Ok((g, report))
}

/// Smallest `T'` with `f(t + d) = f(t) + c` for all `t >= T'`, or the first boundary
/// after the infimum when it is not attained.
fn shortest_transient(f: &Curve) -> Result<Rational> {
    let t = f.transient();
    if t.is_zero() {
        return Ok(t.clone());
    }
    let zero = Rational::zero();
    let d = f.period();
    let own = f.cut_range(&zero, t, false)?;
    let shifted = f.cut_range(d, &(t + d), false)?.translate(&-d, &-f.increment());
    let pieces = refine(&own, &shifted);
    let mut candidate = t.clone();
    for (a, b) in pieces.iter().rev() {
        if a == b {
            if a.is_point() {
                candidate = a.start().clone();
            }
            continue;
        }
        return Ok(match a {
            // equality holds on ]u, candidate[ but fails at u
            Element::Point(_) => candidate,
            Element::Segment(s) => s.end.clone(),
        });
    }
    Ok(zero)
}

pub fn minimize_transient(f: &Curve) -> Result<(Curve, MinimizationReport)> {
    let mut report = MinimizationReport {
        original_cardinality: f.cardinality(),
        ..Default::default()
    };
    let t_new = shortest_transient(f)?;
    if t_new == *f.transient() {
        report.minimized_cardinality = f.cardinality();
        return Ok((f.clone(), report));
    }
    let gap = f.transient() - &t_new;
    let k = floor_int(&(&gap / f.period()));
    report.periods_removed = k.to_u64().unwrap_or(u64::MAX);
    let partial_end = f.transient() - Rational::from_integer(k) * f.period();
    if partial_end > t_new {
        let leftover = f.cut_range(&t_new, &partial_end, false)?.merge_well_formed();
        report.transient_segments_removed =
            leftover.elements().iter().filter(|e| !e.is_point()).count() as u64;
    }
    let g = f.reparametrize(t_new, f.period().clone(), f.increment().clone())?;
    report.minimized_cardinality = g.cardinality();
    Ok((g, report))
}

/// Merge, shortest period, shortest transient, merge.
pub fn minimize_with_report(f: &Curve) -> Result<(Curve, MinimizationReport)> {
    let merged = f.merged();
    let (p, rp) = minimize_period(&merged)?;
    let (t, rt) = minimize_transient(&p)?;
    let out = t.merged();
    let report = MinimizationReport {
        original_cardinality: f.cardinality(),
        minimized_cardinality: out.cardinality(),
        breakpoint_count: rp.breakpoint_count,
        factors_tested: rp.factors_tested,
        periods_removed: rt.periods_removed,
        transient_segments_removed: rt.transient_segments_removed,
    };
    Ok((out, report))
}

pub fn minimize(f: &Curve) -> Result<Curve> {
    minimize_with_report(f).map(|(g, _)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{equivalent, make_rate_latency, Element};
    use crate::numerics::{int, rat, ExtendedRational};

    fn e(s: &str) -> ExtendedRational {
        s.parse().unwrap()
    }

    /// Unit staircase `ceil(t)` stored with period `k`.
    fn unit_staircase(k: i64) -> Curve {
        let mut el = vec![Element::point(int(0), e("0"))];
        for i in 0..=k {
            el.push(Element::segment(int(i), int(i + 1), Ext::from_int(i + 1), int(0)));
            if i < k {
                el.push(Element::point(int(i + 1), Ext::from_int(i + 1)));
            }
        }
        Curve::from_elements(el, int(1), int(k), int(k)).unwrap()
    }

    type Ext = ExtendedRational;

    #[test]
    fn breakpoint_counts() {
        assert_eq!(count_breakpoints(&make_rate_latency(&int(16), &int(2)).unwrap()).unwrap(), 0);
        assert_eq!(count_breakpoints(&unit_staircase(3)).unwrap(), 3);
    }

    #[test]
    fn period_reduction() {
        let s = unit_staircase(3);
        let (m, rep) = minimize_period(&s).unwrap();
        assert_eq!(m.period(), &int(1));
        assert_eq!(m.increment(), &int(1));
        assert_eq!(rep.factors_tested, vec![(3, true)]);
        assert!(equivalent(&m, &s).unwrap());
        let (again, rep2) = minimize_period(&m).unwrap();
        assert_eq!(again, m);
        assert!(rep2.factors_tested.iter().all(|(_, ok)| !ok));

        let line = Curve::from_elements(
            vec![Element::point(int(0), e("0")), Element::segment(int(0), int(7), e("0"), int(3))],
            int(0),
            int(7),
            int(21),
        )
        .unwrap();
        let (m, _) = minimize_period(&line).unwrap();
        assert_eq!((m.period(), m.increment()), (&int(1), &int(3)));
    }

    #[test]
    fn transient_reduction() {
        let b = make_rate_latency(&int(16), &int(2)).unwrap();
        let long = b.reparametrize(int(4), int(1), int(16)).unwrap();
        let (m, rep) = minimize_transient(&long).unwrap();
        assert_eq!(m.transient(), &int(2));
        assert_eq!(rep.periods_removed, 2);
        let (same, _) = minimize_transient(&m).unwrap();
        assert_eq!(same, m);
    }

    #[test]
    fn staircase_transient_moves_inside_a_period() {
        // 20 on ]0,2], slope 16 up to 40 at 13/4, 40 on ]13/4,4], ...
        let el = vec![
            Element::point(int(0), e("0")),
            Element::segment(int(0), int(2), e("20"), int(0)),
            Element::point(int(2), e("20")),
            Element::segment(int(2), rat(13, 4), e("20"), int(16)),
            Element::point(rat(13, 4), e("40")),
            Element::segment(rat(13, 4), int(4), e("40"), int(0)),
        ];
        let f = Curve::from_elements(el, int(2), int(2), int(20)).unwrap();
        let m = minimize(&f).unwrap();
        assert_eq!(m.transient(), &rat(5, 4));
        assert!(equivalent(&m, &f).unwrap());
        assert_eq!(minimize(&m).unwrap(), m);
    }

    #[test]
    fn non_minimal_minimum_result() {
        let b = make_rate_latency(&int(3), &int(5)).unwrap();
        let padded = b.reparametrize(int(7), int(1), int(3)).unwrap();
        assert_eq!(minimize(&padded).unwrap().transient(), &int(5));
    }

    #[test]
    fn report_row() {
        let (_, rep) = minimize_with_report(&unit_staircase(6)).unwrap();
        assert_eq!(rep.period_ratio(), 6);
        assert!(rep.csv_row().starts_with(&format!("{},", rep.original_cardinality)));
    }
}
