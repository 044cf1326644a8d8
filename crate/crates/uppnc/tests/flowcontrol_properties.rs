use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uppnc::curves::{equivalent, Curve};
use uppnc::flowcontrol::{
    delay_bound, Analyzer, ArrivalSpec, NodeSpec, TandemSpec, approx_equivalent, exact_equivalent, per_node_approx,
    per_node_exact, rate_latency_tandem,
};
use uppnc::numerics::{int, rat, Rational};
use uppnc::oracles::random_times;
use uppnc::subadd::Branch;
use uppnc::ExtendedRational as Ext;

fn tandem(nodes: &[(i64, i64)], windows: &[i64]) -> TandemSpec {
    TandemSpec::new(
        nodes.iter().map(|&(r, t)| NodeSpec::new(int(r), int(t)).unwrap()).collect(),
        windows.iter().map(|&w| Ext::from_int(w)).collect(),
    )
    .unwrap()
}

fn random_tandem(rng: &mut ChaCha8Rng) -> TandemSpec {
    let n = rng.gen_range(2..=3);
    let nodes: Vec<(i64, i64)> = (0..n).map(|_| (rng.gen_range(1..=12), rng.gen_range(0..=6))).collect();
    let windows: Vec<i64> = (1..n).map(|_| rng.gen_range(1..=30)).collect();
    tandem(&nodes, &windows)
}

fn horizon_of(curves: &[&Curve]) -> Rational {
    curves.iter().map(|c| c.horizon()).max().unwrap() * int(3) + int(1)
}

fn assert_service_shape(f: &Curve, times: &[Rational]) {
    assert_eq!(f.eval(&int(0)), Ext::zero());
    let mut sorted = times.to_vec();
    sorted.sort();
    let values: Vec<Ext> = sorted.iter().map(|t| f.eval(t)).collect();
    assert!(values.iter().all(|v| *v >= Ext::zero()), "{f}");
    assert!(values.windows(2).all(|w| w[0] <= w[1]), "{f}");
}

#[test]
fn exact_pipeline_steps_on_four_node_tandem() {
    let t = tandem(&[(8, 5), (11, 7), (12, 4), (1, 5)], &[3, 7, 3]);
    let mut a = Analyzer::default();
    a.exact_equivalent(&t).unwrap();
    let closures: Vec<(usize, usize)> = a
        .records
        .iter()
        .filter(|r| r.operation == "sac")
        .map(|r| (r.operands[0], r.result_cardinality))
        .collect();
    assert_eq!(closures, vec![(10, 10), (14, 6)]);
}

#[test]
fn approximate_pipeline_steps_on_four_node_tandem() {
    let t = tandem(&[(21, 15), (30, 17), (7, 27), (21, 20)], &[23, 29, 20]);
    let mut a = Analyzer::default();
    a.approx_equivalent(&t).unwrap();
    let factors: Vec<usize> =
        a.records.iter().filter(|r| r.operation == "sac_closed").map(|r| r.result_cardinality).collect();
    assert_eq!(factors, vec![6, 6, 6]);
    let products: Vec<(Vec<usize>, usize, Option<Branch>)> = a
        .records
        .iter()
        .filter(|r| r.operation == "conv_sac")
        .map(|r| (r.operands.clone(), r.result_cardinality, r.branch))
        .collect();
    assert_eq!(products[0].0, vec![6, 6]);
    assert_eq!(products[0].1, 42);
    assert_eq!((products[1].0.clone(), products[1].1), (vec![42, 6], 6));
}

#[test]
fn exact_dominates_approximate_on_random_tandems() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..8 {
        let t = random_tandem(&mut rng);
        let exact = exact_equivalent(&t).unwrap();
        let approx = approx_equivalent(&t).unwrap();
        let times = random_times(&mut rng, &horizon_of(&[&exact, &approx]), 60);
        for s in &times {
            assert!(exact.eval(s) >= approx.eval(s), "t = {s}\n{t:?}");
        }
        assert_service_shape(&exact, &times);
        assert_service_shape(&approx, &times);
        for i in 1..t.len() {
            let e = per_node_exact(&t, i).unwrap();
            let a = per_node_approx(&t, i).unwrap();
            for s in random_times(&mut rng, &horizon_of(&[&e, &a]), 40) {
                assert!(e.eval(&s) >= a.eval(&s), "node {i}, t = {s}\n{t:?}");
            }
        }
        let alpha = ArrivalSpec::new(int(2), rat(1, 10)).unwrap();
        assert!(delay_bound(&alpha, &exact).unwrap() <= delay_bound(&alpha, &approx).unwrap());
    }
}

#[test]
fn homogeneous_tandems_agree() {
    let node = NodeSpec::new(int(16), int(2)).unwrap();
    for n in 2..=4usize {
        let windows = (0..n - 1).map(|k| Ext::from_int(13 + 2 * k as i64)).collect();
        let t = TandemSpec::homogeneous(node.clone(), windows).unwrap();
        assert!(equivalent(&exact_equivalent(&t).unwrap(), &approx_equivalent(&t).unwrap()).unwrap(), "n = {n}");
    }
}

#[test]
fn first_node_gap_without_end_to_end_gap() {
    let t = rate_latency_tandem(&int(16), &int(2), vec![Ext::from_int(20), Ext::from_int(13)]).unwrap();
    let e = per_node_exact(&t, 1).unwrap();
    let a = per_node_approx(&t, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let times = random_times(&mut rng, &horizon_of(&[&e, &a]), 400);
    assert!(times.iter().all(|s| e.eval(s) >= a.eval(s)));
    assert!(times.iter().any(|s| e.eval(s) > a.eval(s)));
    assert!(equivalent(&exact_equivalent(&t).unwrap(), &approx_equivalent(&t).unwrap()).unwrap());
}

#[test]
fn open_windows_leave_the_chain() {
    let t = rate_latency_tandem(&int(16), &int(2), vec![Ext::PlusInf]).unwrap();
    let chain = uppnc::curves::make_rate_latency(&int(16), &int(4)).unwrap();
    assert!(equivalent(&exact_equivalent(&t).unwrap(), &chain).unwrap());
    assert!(equivalent(&approx_equivalent(&t).unwrap(), &chain).unwrap());
}
