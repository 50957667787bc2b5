use nalgebra::{DMatrix, DVector};
use platoon::constraint::ConstraintBox;
use platoon::graph::{ring_adjacency, square_offsets, FormationGraph};
use platoon::rbf::RbfNetwork;
use platoon::setm::{SetmConfig, SetmState};
use platoon::Vec2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vec2() -> impl Strategy<Value = Vec2> {
    (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn square() -> FormationGraph {
    FormationGraph::new(ring_adjacency(4), square_offsets(12.0)).unwrap()
}

proptest! {
    #[test]
    fn formation_error_is_translation_invariant(
        p in prop::collection::vec(vec2(), 4),
        shift in vec2(),
    ) {
        let g = square();
        let moved: Vec<Vec2> = p.iter().map(|q| q + shift).collect();
        let a = g.formation_error(&p).unwrap();
        let b = g.formation_error(&moved).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn formation_error_vanishes_at_any_translate_of_the_offsets(shift in vec2(), gap in 1.0..50.0f64) {
        let g = FormationGraph::new(ring_adjacency(4), square_offsets(gap)).unwrap();
        let p: Vec<Vec2> = g.offsets().iter().map(|o| o + shift).collect();
        for z in g.formation_error(&p).unwrap() {
            prop_assert!(z.norm() < 1e-9);
        }
    }

    #[test]
    fn stacked_error_equals_laplacian_product(
        weights in prop::collection::vec(0.1..3.0f64, 6),
        p in prop::collection::vec(vec2(), 4),
        o in prop::collection::vec(vec2(), 4),
    ) {
        // Complete graph on four vertices with random symmetric weights.
        let mut adj = vec![vec![0.0; 4]; 4];
        let mut k = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                adj[i][j] = weights[k];
                adj[j][i] = weights[k];
                k += 1;
            }
        }
        let g = FormationGraph::new(adj, o.clone()).unwrap();
        let l = g.build_laplacian().laplacian;
        let z = g.formation_error(&p).unwrap();
        for axis in 0..2 {
            let d = DVector::from_iterator(4, p.iter().zip(&o).map(|(pi, oi)| pi[axis] - oi[axis]));
            let stacked = &l * d;
            for i in 0..4 {
                prop_assert!((stacked[i] - z[i][axis]).abs() < 1e-9 * (1.0 + stacked[i].abs()));
            }
        }
    }

    #[test]
    fn mapping_round_trips(lo in -50.0..50.0f64, width in 0.5..60.0f64, frac in 1e-6..0.999_999f64) {
        let b = ConstraintBox::new(lo, lo + width, 0.01 * width).unwrap();
        let x = lo + frac * width;
        let m = b.forward(x).unwrap();
        prop_assert!((b.inverse(m.s) - x).abs() <= 1e-12 * (1.0 + lo.abs() + width));
    }

    #[test]
    fn mapping_is_increasing(lo in -50.0..50.0f64, width in 0.5..60.0f64, a in 0.001..0.999f64, b in 0.001..0.999f64) {
        prop_assume!((a - b).abs() > 1e-9);
        let cb = ConstraintBox::new(lo, lo + width, 0.01 * width).unwrap();
        let (x, y) = (lo + a.min(b) * width, lo + a.max(b) * width);
        prop_assert!(cb.forward(x).unwrap().s < cb.forward(y).unwrap().s);
        prop_assert!(cb.forward(x).unwrap().gamma >= cb.min_gamma() - 1e-12);
    }

    #[test]
    fn inverse_stays_inside_for_any_s(s in -1e6..1e6f64) {
        let b = ConstraintBox::new(0.0, 24.0, 0.05).unwrap();
        let x = b.inverse(s);
        prop_assert!((0.0..=24.0).contains(&x));
    }

    #[test]
    fn projection_lands_in_shrunk_box(x in -1e3..1e3f64) {
        let b = ConstraintBox::new(4.0, 30.0, 0.05).unwrap();
        let p = b.project(x);
        prop_assert!((4.05..=29.95).contains(&p));
        prop_assert!(b.forward(p).is_ok());
    }

    #[test]
    fn network_output_is_linear_in_weights(
        w1 in prop::collection::vec(-5.0..5.0f64, 5),
        w2 in prop::collection::vec(-5.0..5.0f64, 5),
        a in -3.0..3.0f64,
        x in 0.0..24.0f64,
    ) {
        let mut net = RbfNetwork::grid(&[(0.0, 24.0)], 5, 6.0, 1, 1.0, 0.1).unwrap();
        let eval = |net: &mut RbfNetwork, w: &[f64]| {
            net.set_weights(DMatrix::from_column_slice(5, 1, w)).unwrap();
            net.approximate(&[x])[0]
        };
        let combined: Vec<f64> = w1.iter().zip(&w2).map(|(p, q)| p + a * q).collect();
        let lhs = eval(&mut net, &combined);
        let rhs = eval(&mut net, &w1) + a * eval(&mut net, &w2);
        prop_assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn leakage_keeps_weights_below_bound(
        zs in prop::collection::vec(-2.0..2.0f64, 200..400),
        xs in prop::collection::vec(0.0..24.0f64, 400),
        gain in 0.1..10.0f64,
        leakage in 0.1..2.0f64,
    ) {
        let mut net = RbfNetwork::grid(&[(0.0, 24.0)], 5, 6.0, 1, gain, leakage).unwrap();
        let z_max = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
        // Euler step of W' = G phi z - sigma W with |phi| <= sqrt(K).
        let bound = gain * 5f64.sqrt() * z_max / leakage;
        for (z, x) in zs.iter().zip(&xs) {
            net.update_weights(&[*x], &[*z], 0.01).unwrap();
            prop_assert!(net.weight_norm() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn trigger_never_fires_twice_at_one_instant(z in prop::collection::vec(-1.0..1.0f64, 1..50)) {
        let cfg = SetmConfig::new(0.05, 0.5, 0.1).unwrap();
        let mut s = SetmState::new();
        for (k, zk) in z.iter().enumerate() {
            let t = k as f64 * 1e-3;
            if s.fires(&cfg, *zk) {
                let (_, branch) = cfg.switched_sigma(*zk);
                s.on_trigger(t, *zk, -*zk, branch).unwrap();
                // Right after a trigger the measurement error is zero.
                prop_assert_eq!(s.measurement_error(*zk), 0.0);
                prop_assert!(!s.fires(&cfg, *zk));
            }
        }
        prop_assert!(s.intervals().all(|d| d >= 1e-3 * (1.0 - 1e-9)));
    }

    #[test]
    fn switched_sigma_picks_branch_by_magnitude(z in -10.0..10.0f64) {
        let cfg = SetmConfig::new(0.05, 0.5, 0.1).unwrap();
        let (sigma, _) = cfg.switched_sigma(z);
        prop_assert_eq!(sigma, if z.abs() >= 0.1 { 0.05 } else { 0.5 });
    }
}

/// Smallest nonzero Laplacian eigenvalue, computed from the raw adjacency.
fn lambda2(adj: &[Vec<f64>]) -> f64 {
    let n = adj.len();
    let l = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            adj[i].iter().sum()
        } else {
            -adj[i][j]
        }
    });
    let mut ev: Vec<f64> = l.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev[1]
}

#[test]
fn graph_search_agrees_with_spectrum_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut connected = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=9);
        let p: f64 = rng.gen_range(0.05..0.6);
        let mut adj = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    let w = rng.gen_range(0.1..2.0);
                    adj[i][j] = w;
                    adj[j][i] = w;
                }
            }
        }
        let spectral = lambda2(&adj) > 1e-9;
        let built = FormationGraph::new(adj, vec![Vec2::zeros(); n]);
        assert_eq!(built.is_ok(), spectral);
        connected += spectral as usize;
    }
    // Both outcomes must actually be exercised.
    assert!(connected > 100 && connected < 900, "{connected}");
}
