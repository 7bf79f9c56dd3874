mod common;

use adaptive_consensus::graph::{
    lambda_min_shifted, lemma1_certificate, quadratic_form_expansion, zero_tolerance,
    GainMatrix, GraphTopology,
};
use common::{char_poly_eigenvalues_3x3, jacobi_eigenvalues, random_connected_edges, to_rows, SplitMix};
use proptest::prelude::*;

#[test]
fn line_and_complete_spectra_match_char_poly() {
    let line = GraphTopology::line(3).unwrap();
    let oracle = char_poly_eigenvalues_3x3([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]);
    for (a, b) in line.laplacian_spectrum().iter().zip(oracle) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    for (a, b) in oracle.iter().zip([0.0, 1.0, 3.0]) {
        assert!((a - b).abs() < 1e-10);
    }

    let k3 = GraphTopology::complete(3).unwrap();
    let oracle = char_poly_eigenvalues_3x3([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]]);
    for ((a, b), c) in k3.laplacian_spectrum().iter().zip(oracle).zip([0.0, 3.0, 3.0]) {
        assert!((a - b).abs() < 1e-10);
        assert!((b - c).abs() < 1e-7);
    }
}

#[test]
fn default_gains_lambda_min_matches_oracles() {
    let g = GraphTopology::line(3).unwrap();
    let k = GainMatrix::new(vec![5.0, 5.0, 0.0]).unwrap();
    let oracle = char_poly_eigenvalues_3x3([[6.0, -1.0, 0.0], [-1.0, 7.0, -1.0], [0.0, -1.0, 1.0]]);
    let jac = jacobi_eigenvalues(to_rows(&(g.laplacian() + k.to_matrix())));
    let cert = lemma1_certificate(&g, &k).unwrap();
    assert!((cert.lambda_min - oracle[0]).abs() < 1e-10);
    assert!((cert.lambda_min - jac[0]).abs() < 1e-10);
    assert!((cert.lambda_min - 0.832_604_45).abs() < 1e-8);
    assert!(cert.positive_definite);
}

/// Every graph on up to 5 nodes, by edge subset.
#[test]
fn exhaustive_small_graphs() {
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (1..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &e)| e)
                .collect();
            let g = GraphTopology::new(n, &edges).unwrap();
            check_laplacian_structure(&g);
            let spectrum = g.laplacian_spectrum();
            assert!(spectrum[0].abs() < zero_tolerance(n));
            let lambda2 = spectrum.get(1).copied().unwrap_or(f64::INFINITY);
            assert_eq!(g.is_connected(), n == 1 || lambda2 > 1e-8, "{edges:?}");
        }
    }
}

fn check_laplacian_structure(g: &GraphTopology) {
    let n = g.node_count();
    let l = g.laplacian_int();
    for i in 0..n {
        assert_eq!(l[i].iter().sum::<i64>(), 0, "L * 1 must vanish");
        assert_eq!(l[i][i], g.degree(i + 1).unwrap() as i64);
        for j in 0..n {
            assert_eq!(l[i][j], l[j][i]);
            if i != j {
                assert!(l[i][j] == 0 || l[i][j] == -1);
                assert_eq!(l[i][j] == -1, g.are_adjacent(i + 1, j + 1));
            }
        }
    }
    let a = g.adjacency();
    for i in 0..n {
        assert_eq!(a[(i, i)], 0.0);
        let row: f64 = (0..n).map(|j| a[(i, j)]).sum();
        assert_eq!(row as usize, g.degree(i + 1).unwrap());
    }
}

#[test]
fn lemma1_randomized_1000_cases() {
    let mut rng = SplitMix(0x5EED_0001);
    for case in 0..1000 {
        let n = 2 + rng.below(7);
        let extra = rng.below(n * 2);
        let g = GraphTopology::new(n, &random_connected_edges(&mut rng, n, extra)).unwrap();
        assert!(g.is_connected());
        let mut k: Vec<f64> = (0..n)
            .map(|_| if rng.uniform() < 0.5 { 0.0 } else { rng.range(0.0, 10.0) })
            .collect();
        let pinned = rng.below(n);
        k[pinned] = k[pinned].max(rng.range(1e-3, 10.0));
        let k = GainMatrix::new(k).unwrap();
        let cert = lemma1_certificate(&g, &k).unwrap();
        assert!(cert.lambda_min > 0.0, "case {case}: {}", cert.lambda_min);
        assert!(cert.positive_definite);
        let oracle = jacobi_eigenvalues(to_rows(&(g.laplacian() + k.to_matrix())));
        assert!((cert.lambda_min - oracle[0]).abs() < 1e-9);

        let zero = GainMatrix::new(vec![0.0; n]).unwrap();
        assert!(lambda_min_shifted(&g, &zero).unwrap().abs() < 1e-10);
    }
}

#[test]
fn single_unit_pin_on_random_six_node_graph() {
    let mut rng = SplitMix(42);
    for _ in 0..50 {
        let g = GraphTopology::new(6, &random_connected_edges(&mut rng, 6, 4)).unwrap();
        let mut k = vec![0.0; 6];
        k[0] = 1.0;
        let k = GainMatrix::new(k).unwrap();
        let cert = lemma1_certificate(&g, &k).unwrap();
        let oracle = jacobi_eigenvalues(to_rows(&(g.laplacian() + k.to_matrix())));
        assert!(cert.positive_definite);
        assert!(oracle[0] > 0.0);
        assert!((cert.lambda_min - oracle[0]).abs() < 1e-10);
    }
}

#[test]
fn rayleigh_expansion_at_minimizer() {
    let mut rng = SplitMix(7);
    for _ in 0..200 {
        let n = 2 + rng.below(7);
        let g = GraphTopology::new(n, &random_connected_edges(&mut rng, n, n)).unwrap();
        // K_1 has one nonzero entry
        let mut k = vec![0.0; n];
        k[rng.below(n)] = rng.range(0.1, 5.0);
        let k1 = GainMatrix::new(k).unwrap();
        let cert = lemma1_certificate(&g, &k1).unwrap();
        let x = &cert.eigenvector;
        let unit: f64 = x.iter().map(|v| v * v).sum();
        assert!((unit - 1.0).abs() < 1e-12);
        let expansion = quadratic_form_expansion(&g, &k1, x).unwrap();
        assert!((expansion - cert.lambda_min).abs() < 1e-8);
    }
}

#[test]
fn spectrum_sorted_and_connectivity_agrees_up_to_64_nodes() {
    let mut rng = SplitMix(99);
    for n in [10, 20, 40, 64] {
        let g = GraphTopology::new(n, &random_connected_edges(&mut rng, n, n)).unwrap();
        let s = g.laplacian_spectrum();
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
        assert!(s[0].abs() < zero_tolerance(n));
        assert!(s[1] > 1e-8);
        // drop the tree edge to the last node: disconnected
        let edges: Vec<_> = g.edges().into_iter().filter(|&(_, j)| j != n).collect();
        let cut = GraphTopology::new(n, &edges).unwrap();
        assert!(!cut.is_connected());
        assert!(cut.laplacian_spectrum()[1].abs() < zero_tolerance(n));
    }
}

fn connected_graph() -> impl Strategy<Value = GraphTopology> {
    (2usize..=8, any::<u64>(), 0usize..12).prop_map(|(n, seed, extra)| {
        let mut rng = SplitMix(seed);
        GraphTopology::new(n, &random_connected_edges(&mut rng, n, extra)).unwrap()
    })
}

proptest! {
    #[test]
    fn laplacian_invariants(g in connected_graph()) {
        check_laplacian_structure(&g);
        let l = g.laplacian();
        let ones = nalgebra::DVector::from_element(g.node_count(), 1.0);
        prop_assert_eq!((l * ones).norm(), 0.0);
        prop_assert!(g.algebraic_connectivity() > 1e-8);
    }

    #[test]
    fn lemma1_holds_for_nonnegative_gains(
        g in connected_graph(),
        raw in proptest::collection::vec(0.0f64..5.0, 8),
        pin in 0usize..8,
    ) {
        let n = g.node_count();
        let mut k: Vec<f64> = raw[..n].to_vec();
        k[pin % n] += 0.01;
        let k = GainMatrix::new(k).unwrap();
        let cert = lemma1_certificate(&g, &k).unwrap();
        prop_assert!(cert.lambda_min > 0.0);
        prop_assert!(cert.positive_definite);
    }
}
