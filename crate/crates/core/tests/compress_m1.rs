mod common;

use locc_core::compress::{
    caratheodory_stage, compress_protocol_m1, conditional_success, equalize, matrix_sum_split, OutcomeStats,
    Tolerances,
};
use locc_core::generate::{ginibre, random_instrument_kraus, uniform_int, RandomTreeConfig};
use locc_core::numerics::{sqrt_psd, ComplexMatrix};
use locc_core::quantum::{CpMap, MultipartiteSpace};
use locc_core::tree::{evaluate_success, validate_tree, width_report, Edge, Node, ProtocolTree, VertexId};

fn wide_root(root: (usize, usize)) -> RandomTreeConfig {
    RandomTreeConfig {
        rounds: 2,
        root_outcomes: root,
        outcomes: (2, 6),
        labels: 4,
        first_party: None,
    }
}

#[test]
fn split_identities_on_random_pairs() {
    let mut rng = common::rng(30);
    for i in 0..200 {
        let n = uniform_int(&mut rng, 1, 6);
        let (rx, ry) = (uniform_int(&mut rng, n, 6), uniform_int(&mut rng, 1, 6));
        let mut x = ginibre(&mut rng, rx, n);
        let mut y = ginibre(&mut rng, ry, n);
        if i % 2 == 0 {
            let zero_col = uniform_int(&mut rng, 0, n - 1);
            x = ComplexMatrix::from_fn(rx, n, |r, c| if c == zero_col { Default::default() } else { x[(r, c)] });
            y = ComplexMatrix::from_fn(ry, n, |r, c| if c == zero_col { Default::default() } else { y[(r, c)] });
        }
        let (cm, dm) = matrix_sum_split(&x, &y).unwrap();
        let root = sqrt_psd(&(&x.gram() + &y.gram())).unwrap();
        assert!(cm.matmul(&root).distance(&x) <= 1e-9);
        assert!(dm.matmul(&root).distance(&y) <= 1e-9);
        assert!((&cm.gram() + &dm.gram()).distance(&ComplexMatrix::identity(n)) <= 1e-9);
    }
}

#[test]
fn bell_outcomes_are_reached_half_the_time_and_succeed() {
    let (tree, ens) = common::bell_instance();
    for v in [VertexId(1), VertexId(4)] {
        let c = conditional_success(&tree, v, &ens).unwrap();
        assert!((c.prob - 0.5).abs() <= 1e-12);
        assert!((c.success.unwrap() - 1.0).abs() <= 1e-12);
    }
    let root = conditional_success(&tree, VertexId(0), &ens).unwrap();
    assert!((root.prob - 1.0).abs() <= 1e-12);
}

#[test]
fn zero_edge_is_flagged() {
    let space = MultipartiteSpace::new(vec![2]).unwrap();
    let root = Node::measure(
        0,
        vec![
            Edge::new(CpMap::from_kraus(ComplexMatrix::identity(2)), Node::leaf(0)),
            Edge::new(CpMap::from_kraus(ComplexMatrix::zeros(2, 2)), Node::leaf(0)),
        ],
    );
    let tree = ProtocolTree::new(space.clone(), root);
    let ens = locc_core::quantum::Ensemble::new(
        space,
        vec![locc_core::quantum::EnsembleMember { weight: 1.0, state: common::basis(2, 0) }],
    )
    .unwrap();
    let id = conditional_success(&tree, VertexId(1), &ens).unwrap();
    assert_eq!((id.prob, id.success), (1.0, Some(1.0)));
    let zero = conditional_success(&tree, VertexId(2), &ens).unwrap();
    assert_eq!((zero.prob, zero.success), (0.0, None));
}

#[test]
fn children_of_root_decompose_total_success() {
    for seed in 0..20u64 {
        let (tree, ens) = common::random_instance(seed, vec![2, 2], &wide_root((3, 6)), 3);
        let total = evaluate_success(&tree, &ens, false).unwrap().success;
        let mut sum = 0.0;
        for v in tree.vertices().iter().filter(|v| v.depth == 1) {
            let c = conditional_success(&tree, v.id, &ens).unwrap();
            sum += c.prob * c.success.unwrap_or(0.0);
        }
        assert!((sum - total).abs() <= 1e-10);
    }
}

#[test]
fn six_outcome_qubit_povm_reduces_to_four() {
    let mut rng = common::rng(31);
    for _ in 0..20 {
        let kraus = random_instrument_kraus(&mut rng, 2, 2, 6);
        let stats: Vec<OutcomeStats> = kraus
            .into_iter()
            .map(|k| OutcomeStats { kraus: k, prob: 1.0 / 6.0, success: Some(0.5) })
            .collect();
        let eq = equalize(&stats, 0.5, &Tolerances::default()).unwrap();
        assert_eq!(eq.len(), 6);
        let kept = caratheodory_stage(eq, 2, &Tolerances::default()).unwrap();
        assert!(kept.len() <= 4);
        let sum = kept.iter().fold(ComplexMatrix::zeros(2, 2), |acc, o| &acc + &o.kraus.gram());
        assert!(sum.distance(&ComplexMatrix::identity(2)) <= 1e-8);
    }
}

#[test]
fn equalized_pieces_recombine_elements() {
    let mut rng = common::rng(32);
    for _ in 0..50 {
        let n = uniform_int(&mut rng, 2, 8);
        let kraus = random_instrument_kraus(&mut rng, 3, 3, n);
        let q: Vec<f64> = kraus.iter().map(|k| k.gram().trace_re() / 3.0).collect();
        let t: Vec<f64> = (0..n).map(|_| locc_core::generate::uniform(&mut rng)).collect();
        let target: f64 = q.iter().zip(&t).map(|(a, b)| a * b).sum();
        let stats: Vec<OutcomeStats> = kraus
            .iter()
            .zip(q.iter().zip(&t))
            .map(|(k, (&q, &t))| OutcomeStats { kraus: k.clone(), prob: q, success: Some(t) })
            .collect();
        let eq = equalize(&stats, target, &Tolerances::default()).unwrap();
        assert!(eq.len() <= n);
        let total: f64 = eq.iter().map(|o| o.prob * o.success.unwrap()).sum();
        assert!((total - target).abs() <= 1e-12);
        for o in &eq {
            assert!((o.success.unwrap() - target).abs() <= 1e-8);
            let pieces = o
                .second_stage
                .iter()
                .fold(ComplexMatrix::zeros(3, 3), |acc, p| &acc + &kraus[p.outcome].gram().scale(p.scale));
            assert!(pieces.distance(&o.kraus.gram()) <= 1e-9);
            if let Some((cm, dm)) = o.second_stage_split(&kraus).unwrap() {
                let (p1, p2) = (o.second_stage[0], o.second_stage[1]);
                assert!(cm.matmul(&o.kraus).distance(&kraus[p1.outcome].scale(p1.scale.sqrt())) <= 1e-9);
                assert!(dm.matmul(&o.kraus).distance(&kraus[p2.outcome].scale(p2.scale.sqrt())) <= 1e-9);
            }
        }
    }
}

fn check_compression(tree: &ProtocolTree, ens: &locc_core::quantum::Ensemble) -> ProtocolTree {
    let before = evaluate_success(tree, ens, false).unwrap().success;
    let out = compress_protocol_m1(tree, ens).unwrap();
    let after = evaluate_success(&out, ens, false).unwrap().success;
    assert!((before - after).abs() <= 1e-7, "{before} vs {after}");
    assert!(validate_tree(&out).is_empty());
    let w = width_report(&out);
    assert!(w.within(&out, false, |d| 2 * d * d));
    assert_eq!(out.depth(), tree.depth());
    out
}

#[test]
fn twelve_outcome_two_qubit_root() {
    for seed in 0..10u64 {
        let (tree, ens) = common::random_instance(seed, vec![2, 2], &wide_root((12, 12)), 4);
        let out = check_compression(&tree, &ens);
        assert!(out.root().edges().len() <= 8);
        assert!(out.leaf_count() <= 64);
    }
}

#[test]
fn compression_is_stable_on_its_output() {
    for seed in 40..45u64 {
        let config = RandomTreeConfig { first_party: Some(0), ..wide_root((10, 16)) };
        let (tree, ens) = common::random_instance(seed, vec![2, 3], &config, 3);
        let once = check_compression(&tree, &ens);
        assert!(once.root().edges().len() <= 8);
        let twice = check_compression(&once, &ens);
        assert_eq!(width_report(&once), width_report(&twice));
    }
}

#[test]
fn slim_bell_protocol_keeps_success() {
    let (tree, ens) = common::bell_instance();
    let out = check_compression(&tree, &ens);
    assert!((evaluate_success(&out, &ens, false).unwrap().success - 1.0).abs() <= 1e-10);
    assert_eq!(width_report(&out), width_report(&tree));
}

#[test]
fn unreachable_branches_are_compressed_too() {
    // Root projects onto |0⟩ or |1⟩ of a qubit; the ensemble lives on |0⟩ only,
    // so the |1⟩ branch is never reached but carries a 12-outcome measurement.
    let space = MultipartiteSpace::new(vec![2]).unwrap();
    let mut rng = common::rng(33);
    let wide = |rng: &mut rand_chacha::ChaCha8Rng| {
        let kraus = random_instrument_kraus(rng, 2, 2, 12);
        Node::measure(
            0,
            kraus
                .into_iter()
                .enumerate()
                .map(|(i, k)| Edge::new(CpMap::from_kraus(k), Node::leaf(i % 2)))
                .collect(),
        )
    };
    let root = Node::measure(
        0,
        vec![
            Edge::new(CpMap::from_kraus(common::basis(2, 0)), wide(&mut rng)),
            Edge::new(CpMap::from_kraus(common::basis(2, 1)), wide(&mut rng)),
        ],
    );
    let tree = ProtocolTree::new(space.clone(), root);
    let ens = locc_core::quantum::Ensemble::new(
        space,
        vec![
            locc_core::quantum::EnsembleMember { weight: 0.5, state: common::basis(2, 0) },
            locc_core::quantum::EnsembleMember { weight: 0.5, state: ComplexMatrix::identity(2).scale(0.5) },
        ],
    )
    .unwrap();
    check_compression(&tree, &ens);
}
