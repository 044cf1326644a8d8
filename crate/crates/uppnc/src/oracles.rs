//! Brute-force evaluators used to validate the algebra, and random curve generators.
//!
//! `conv_oracle_eval` relies on `s -> f(s) + g(t - s)` being affine between
//! consecutive breakpoints of either operand: the infimum over `[0, t]` is reached
//! (possibly as a one-sided limit) at a breakpoint or at an end of the interval.
//!
//! `sac_oracle_eval` minimizes `f(s_1) + ... + f(s_n)` with `sum s_i = t`. Once each
//! `s_i` is assigned to an element of `f`, the objective is affine over a box cut by
//! one hyperplane, so the infimum sits at a vertex: every `s_i` but one sits at an
//! end of its element (as a one-sided limit), and the remaining one absorbs the
//! rest of `t`. The search enumerates sums of breakpoints, tracking on which side
//! the accumulated limits approach their sum so that only realizable limits count.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::Rng;

use crate::curves::{Curve, Element};
use crate::error::{Error, Result};
use crate::numerics::{ExtendedRational, Rational, MinusInf, PlusInf};

type Ext = ExtendedRational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub sample_count: usize,
    pub horizon_periods: usize,
    /// The closure search visits at most `2^sac_doubling_limit` partial sums.
    pub sac_doubling_limit: u32,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { sample_count: 200, horizon_periods: 3, sac_doubling_limit: 20, seed: 1 }
    }
}

/// Breakpoint abscissas of `f` in `[0, t]`, including both ends.
fn breakpoints_upto(f: &Curve, t: &Rational) -> Result<Vec<Rational>> {
    let seq = f.cut_range(&Rational::zero(), t, true)?.merge_well_formed();
    Ok(seq.elements().iter().filter(|e| e.is_point()).map(|e| e.start().clone()).collect())
}

fn sum(a: &Ext, b: &Ext) -> Result<Ext> {
    a.checked_add(b)
}

/// `inf_{0 <= s <= t} f(s) + g(t - s)` by exhaustive candidate scan.
pub fn conv_oracle_eval(f: &Curve, g: &Curve, t: &Rational) -> Result<Ext> {
    if t.is_negative() {
        return Err(Error::InvalidArgument("negative time".into()));
    }
    let mut cands = breakpoints_upto(f, t)?;
    cands.extend(breakpoints_upto(g, t)?.into_iter().map(|b| t - b));
    cands.sort();
    cands.dedup();
    let mut best = PlusInf;
    for s in &cands {
        let u = t - s;
        let mut vals = vec![sum(&f.eval(s), &g.eval(&u))?];
        if s < t {
            vals.push(sum(&f.eval_right(s), &g.eval_left(&u))?);
        }
        if s.is_positive() {
            vals.push(sum(&f.eval_left(s), &g.eval_right(&u))?);
        }
        for v in vals {
            if v < best {
                best = v;
            }
        }
    }
    Ok(best)
}

/// Outcome of the closure oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SacOracleValue {
    pub value: Ext,
    /// False when the search hit its state limit before exhausting all sums.
    pub stabilized: bool,
}

/// How the accumulated sum approaches its nominal position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Exact,
    Below,
    Above,
    Free,
}

impl Side {
    const ALL: [Side; 4] = [Side::Exact, Side::Below, Side::Above, Side::Free];

    fn idx(self) -> usize {
        self as usize
    }

    fn combine(self, other: Side) -> Side {
        match (self, other) {
            (Side::Exact, s) | (s, Side::Exact) => s,
            (Side::Below, Side::Below) => Side::Below,
            (Side::Above, Side::Above) => Side::Above,
            _ => Side::Free,
        }
    }
}

/// `inf_n f^(n)(t)` computed exactly by a search over sums of breakpoints.
pub fn sac_oracle_eval(f: &Curve, t: &Rational, cfg: &OracleConfig) -> Result<SacOracleValue> {
    if t.is_negative() {
        return Err(Error::InvalidArgument("negative time".into()));
    }
    let zero = Rational::zero();
    let f0 = f.eval(&zero);
    if f0 < Ext::zero() {
        return Err(Error::Precondition("closure of a curve negative at 0 diverges".into()));
    }
    if t.is_zero() {
        return Ok(SacOracleValue { value: Ext::zero(), stabilized: true });
    }
    let f0p = f.eval_right(&zero);
    if f0p < Ext::zero() {
        return Ok(SacOracleValue { value: MinusInf, stabilized: true });
    }
    let mut atoms: Vec<(Rational, Ext, Side)> = Vec::new();
    for p in breakpoints_upto(f, t)? {
        if p.is_zero() {
            continue;
        }
        atoms.push((p.clone(), f.eval(&p), Side::Exact));
        atoms.push((p.clone(), f.eval_left(&p), Side::Below));
        atoms.push((p.clone(), f.eval_right(&p), Side::Above));
    }
    atoms.retain(|a| !a.1.is_plus_inf());
    if atoms.iter().any(|a| a.1.is_minus_inf()) || f.has_minus_inf() {
        // any reachable -inf piece drags every longer sum down with it
        return Ok(SacOracleValue { value: naive_minus_inf(f, t, &atoms)?, stabilized: true });
    }
    let remainder = |r: &Rational, side: Side| -> Ext {
        if r.is_zero() {
            return match side {
                Side::Exact | Side::Free => Ext::zero(),
                Side::Below => f0p.clone(),
                Side::Above => PlusInf,
            };
        }
        match side {
            Side::Exact => f.eval(r),
            Side::Below => f.eval_right(r),
            Side::Above => f.eval_left(r),
            Side::Free => std::cmp::min(std::cmp::min(f.eval(r), f.eval_left(r)), f.eval_right(r)),
        }
    };
    let limit = 1usize << cfg.sac_doubling_limit.min(40);
    let mut states: BTreeMap<Rational, [Ext; 4]> = BTreeMap::new();
    let mut start = [PlusInf, PlusInf, PlusInf, PlusInf];
    start[Side::Exact.idx()] = Ext::zero();
    states.insert(zero.clone(), start);
    let mut best = PlusInf;
    let mut visited = 0usize;
    let mut stabilized = true;
    while let Some((x, mut vals)) = states.pop_first() {
        visited += 1;
        if visited > limit {
            stabilized = false;
            break;
        }
        // zero-length pieces only change the approach side
        if f0p.is_finite() {
            let (e, b) = (vals[Side::Exact.idx()].clone(), vals[Side::Below.idx()].clone());
            relax(&mut vals, Side::Above, e.checked_add(&f0p)?);
            relax(&mut vals, Side::Free, b.checked_add(&f0p)?);
            let a = vals[Side::Above.idx()].clone();
            relax(&mut vals, Side::Above, a);
        }
        let r = t - &x;
        for side in Side::ALL {
            let v = &vals[side.idx()];
            if v.is_plus_inf() {
                continue;
            }
            let total = v.checked_add(&remainder(&r, side))?;
            if total < best {
                best = total;
            }
            for (p, pv, ps) in &atoms {
                let nx = &x + p;
                if nx > *t {
                    continue;
                }
                let entry = states.entry(nx).or_insert_with(|| [PlusInf, PlusInf, PlusInf, PlusInf]);
                relax(entry, side.combine(*ps), v.checked_add(pv)?);
            }
        }
    }
    Ok(SacOracleValue { value: best, stabilized })
}

fn relax(vals: &mut [Ext; 4], side: Side, v: Ext) {
    if v < vals[side.idx()] {
        vals[side.idx()] = v;
    }
}

/// With `-inf` values present the closure is `-inf` wherever such a piece fits.
fn naive_minus_inf(f: &Curve, t: &Rational, atoms: &[(Rational, Ext, Side)]) -> Result<Ext> {
    if f.eval(t).is_minus_inf() || f.eval_left(t).is_minus_inf() {
        return Ok(MinusInf);
    }
    if atoms.iter().any(|(p, v, _)| v.is_minus_inf() && p <= t) {
        return Ok(MinusInf);
    }
    Err(Error::Precondition("closure oracle does not support this -inf layout".into()))
}

/// Parameters for [`random_curve`].
#[derive(Clone, Debug)]
pub struct RandomCurveSpec {
    pub max_breakpoints: usize,
    pub max_time: i64,
    pub max_value: i64,
    /// Denominators used for breakpoints and values.
    pub denominators: Vec<i64>,
    pub allow_negative: bool,
    pub allow_plus_inf: bool,
    /// Force `f(0) = 0`.
    pub zero_at_origin: bool,
}

impl Default for RandomCurveSpec {
    fn default() -> Self {
        RandomCurveSpec {
            max_breakpoints: 5,
            max_time: 6,
            max_value: 10,
            denominators: vec![1, 2, 3],
            allow_negative: false,
            allow_plus_inf: false,
            zero_at_origin: false,
        }
    }
}

fn random_rational<R: Rng>(rng: &mut R, lo: i64, hi: i64, dens: &[i64]) -> Rational {
    let d = dens[rng.gen_range(0..dens.len())];
    Rational::new(rng.gen_range(lo * d..=hi * d).into(), d.into())
}

/// A random curve with finite period; the transient may be empty.
pub fn random_curve<R: Rng>(rng: &mut R, spec: &RandomCurveSpec) -> Curve {
    let dens = &spec.denominators;
    let one = Rational::from_integer(1.into());
    let transient = if rng.gen_bool(0.3) {
        Rational::zero()
    } else {
        random_rational(rng, 0, spec.max_time, dens)
    };
    let mut period = random_rational(rng, 0, spec.max_time, dens);
    if period.is_zero() {
        period = one.clone();
    }
    let end = &transient + &period;
    let mut cuts: Vec<Rational> = (0..rng.gen_range(0..=spec.max_breakpoints))
        .map(|_| random_rational(rng, 0, spec.max_time * 2, dens))
        .filter(|x| x.is_positive() && *x < end)
        .collect();
    cuts.push(Rational::zero());
    cuts.push(transient.clone());
    cuts.sort();
    cuts.dedup();
    let lo = if spec.allow_negative { -spec.max_value } else { 0 };
    let value = |rng: &mut R, allow_inf: bool| -> Ext {
        if allow_inf && rng.gen_bool(0.15) {
            PlusInf
        } else {
            Ext::Finite(random_rational(rng, lo, spec.max_value, dens))
        }
    };
    let mut el = Vec::new();
    for (i, x) in cuts.iter().enumerate() {
        let in_transient = *x < transient;
        let v = if i == 0 && spec.zero_at_origin { Ext::zero() } else { value(rng, spec.allow_plus_inf && in_transient) };
        el.push(Element::point(x.clone(), v));
        let next = cuts.get(i + 1).cloned().unwrap_or_else(|| end.clone());
        let slope = random_rational(rng, lo.min(-2).max(lo), 4, &[1, 2]);
        el.push(Element::segment(x.clone(), next, value(rng, spec.allow_plus_inf && in_transient), slope));
    }
    let increment = random_rational(rng, lo, spec.max_value, dens);
    Curve::from_elements(el, transient, period, increment).expect("generated curve is valid")
}

/// Integer parameters for [`random_staircase_pair`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaircaseSpec {
    pub min_param: i64,
    pub max_param: i64,
    /// Pairs whose joint period exceeds this many copies of the shorter period are
    /// redrawn, which keeps direct convolutions within a few seconds.
    pub max_period_ratio: i64,
}

impl Default for StaircaseSpec {
    fn default() -> Self {
        StaircaseSpec { min_param: 1, max_param: 1000, max_period_ratio: 24 }
    }
}

/// Closure of `beta_{R,theta} + h` for integer `R`, `theta`, `h` drawn from `spec`.
pub fn random_staircase<R: Rng>(rng: &mut R, spec: &StaircaseSpec) -> Curve {
    let mut draw = || Rational::from_integer(rng.gen_range(spec.min_param..=spec.max_param).into());
    let (r, theta, h) = (draw(), draw(), draw());
    crate::subadd::sac_rate_latency_jump(&r, &theta, &Ext::Finite(h)).expect("positive parameters")
}

fn short_joint_period(f: &Curve, g: &Curve, spec: &StaircaseSpec) -> bool {
    let joint = crate::numerics::rat_lcm(f.period(), g.period()).expect("finite periods");
    let shorter = std::cmp::min(f.period(), g.period());
    joint <= shorter * Rational::from_integer(spec.max_period_ratio.into())
}

/// Two staircases whose joint period respects `spec.max_period_ratio`.
pub fn random_staircase_pair<R: Rng>(rng: &mut R, spec: &StaircaseSpec) -> (Curve, Curve) {
    loop {
        let f = random_staircase(rng, spec);
        let g = random_staircase(rng, spec);
        if short_joint_period(&f, &g, spec) {
            return (f, g);
        }
    }
}

/// Two staircases, steps of `h_i` every `theta_i`, with equal long-run rates
/// `h_1 / theta_1 = h_2 / theta_2`.
pub fn random_equal_rate_pair<R: Rng>(rng: &mut R, spec: &StaircaseSpec) -> (Curve, Curve) {
    let (lo, hi) = (spec.min_param, spec.max_param);
    loop {
        let (t1, t2) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
        let common = num_integer::gcd(t1, t2);
        let (a, b) = (t1 / common, t2 / common);
        let k_max = hi / a.max(b);
        if k_max < 1 {
            continue;
        }
        let k = rng.gen_range(1..=k_max);
        let (h1, h2) = (k * a, k * b);
        if h1 < lo || h2 < lo {
            continue;
        }
        let stair = |rng: &mut R, theta: i64, h: i64| {
            // a rate high enough that the closure is a staircase
            let r = rng.gen_range((h / theta + 1).max(lo)..=hi.max(h / theta + 1));
            let q = |x: i64| Rational::from_integer(x.into());
            crate::subadd::sac_rate_latency_jump(&q(r), &q(theta), &Ext::Finite(q(h))).expect("positive parameters")
        };
        let f = stair(rng, t1, h1);
        let g = stair(rng, t2, h2);
        if short_joint_period(&f, &g, spec) {
            return (f, g);
        }
    }
}

/// Random sample times in `[0, horizon[`, mixing grid points and odd fractions.
pub fn random_times<R: Rng>(rng: &mut R, horizon: &Rational, count: usize) -> Vec<Rational> {
    (0..count)
        .map(|_| {
            let den: i64 = [1, 2, 3, 7, 13][rng.gen_range(0..5)];
            let scaled = horizon * Rational::from_integer(den.into());
            let max = crate::numerics::floor_int(&scaled);
            let max: i64 = i64::try_from(max).unwrap_or(i64::MAX).max(1);
            Rational::new(rng.gen_range(0..max).into(), den.into())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{add_jump, make_delta_zero, make_rate_latency, make_token_bucket};
    use crate::numerics::int;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(s: &str) -> Ext {
        s.parse().unwrap()
    }

    #[test]
    fn convolution_oracle_examples() {
        let f = make_rate_latency(&int(8), &int(5)).unwrap();
        let g = make_rate_latency(&int(11), &int(7)).unwrap();
        assert_eq!(conv_oracle_eval(&f, &g, &int(12)).unwrap(), e("0"));
        assert_eq!(conv_oracle_eval(&f, &g, &int(14)).unwrap(), e("16"));
        let d = make_delta_zero();
        for t in [0, 3, 9] {
            assert_eq!(conv_oracle_eval(&f, &d, &int(t)).unwrap(), f.eval(&int(t)));
        }
    }

    #[test]
    fn closure_oracle_examples() {
        let cfg = OracleConfig::default();
        let b = make_rate_latency(&int(16), &int(2)).unwrap();
        let j = add_jump(&b, &e("20")).unwrap();
        assert_eq!(sac_oracle_eval(&j, &int(3), &cfg).unwrap().value, e("36"));
        assert_eq!(sac_oracle_eval(&j, &int(4), &cfg).unwrap().value, e("40"));
        assert_eq!(sac_oracle_eval(&b, &int(10), &cfg).unwrap().value, e("0"));
        let g = make_token_bucket(&int(2), &int(3)).unwrap();
        for t in [0, 1, 5] {
            assert_eq!(sac_oracle_eval(&g, &int(t), &cfg).unwrap().value, g.eval(&int(t)));
        }
    }

    #[test]
    fn random_curves_are_valid_and_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let spec = RandomCurveSpec { allow_plus_inf: true, ..Default::default() };
            assert_eq!(random_curve(&mut a, &spec), random_curve(&mut b, &spec));
        }
    }
}
