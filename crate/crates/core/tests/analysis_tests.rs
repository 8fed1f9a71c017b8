//! Nodal-partition, field-comparison, and convergence-ladder oracles. The
//! nodal code is cross-checked against a breadth-first reimplementation, the
//! comparison metrics against closed forms, and the ladders against the
//! lattice dispersion relation.

use std::collections::VecDeque;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use latticewave_core::analysis::{
    compare_fields, convergence_study, mean_cosine, nodal_domains, paired_densities, pearson,
    ConvergenceGeometry, GraphField, Reference,
};
use latticewave_core::billiard::{build_billiard_grid, BilliardGeometry};
use latticewave_core::dual::expand_interior;
use latticewave_core::graph::build::{build_chain, build_square_lattice};
use latticewave_core::spectral::adjacency_eigen_path;
use latticewave_core::MetricGraph;

fn plain_square(side: f64) -> BilliardGeometry {
    BilliardGeometry {
        side,
        disc: None,
        ports: Vec::new(),
    }
}

#[test]
fn constant_field_is_one_domain() {
    let g = build_square_lattice(5, 5, 0.25, |_| 0.0).unwrap();
    let values = vec![0.7; g.n_vertices()];
    let part = nodal_domains(&g, &values, 0.0);
    assert_eq!(part.count, 1);
    for v in 0..g.n_vertices() {
        assert_eq!(part.labels[v], Some(0));
        assert_eq!(part.sign_map[v], 1);
    }
}

#[test]
fn checkerboard_isolates_every_vertex() {
    let g = build_square_lattice(5, 5, 0.25, |_| 0.0).unwrap();
    let values: Vec<f64> = g
        .vertices
        .iter()
        .map(|v| {
            let i = (v.pos[0] / 0.25).round() as i64;
            let j = (v.pos[1] / 0.25).round() as i64;
            if (i + j) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    // lattice neighbors always alternate parity, so nothing merges
    let part = nodal_domains(&g, &values, 0.0);
    assert_eq!(part.count, g.n_vertices());
}

#[test]
fn labels_follow_ascending_vertex_ids_and_the_zero_tolerance() {
    let g = build_chain(5, 1.0, |_| 0.0).unwrap();
    let part = nodal_domains(&g, &[1.0, -1.0, 1.0, 0.0, 1.0], 0.0);
    assert_eq!(part.count, 4);
    assert_eq!(
        part.labels,
        vec![Some(0), Some(1), Some(2), None, Some(3)]
    );
    assert_eq!(part.sign_map, vec![1, -1, 1, 0, 1]);

    // an explicit tolerance zeroes out small values…
    let g3 = build_chain(3, 1.0, |_| 0.0).unwrap();
    let strict = nodal_domains(&g3, &[1.0, 0.05, -1.0], 0.1);
    assert_eq!(strict.sign_map, vec![1, 0, -1]);
    assert_eq!(strict.labels, vec![Some(0), None, Some(1)]);
    // …which the default (1e-12 of the max) treats as a real sign
    let loose = nodal_domains(&g3, &[1.0, 0.05, -1.0], 0.0);
    assert_eq!(loose.sign_map, vec![1, 1, -1]);
    assert_eq!(loose.count, 2);
    assert_eq!(loose.labels, vec![Some(0), Some(0), Some(1)]);
}

/// Breadth-first reference partition over the same sign convention.
fn bfs_partition(graph: &MetricGraph, signs: &[i8]) -> (Vec<Option<usize>>, usize) {
    let n = graph.n_vertices();
    let mut adj = vec![Vec::new(); n];
    for e in &graph.edges {
        adj[e.j].push(e.n);
        adj[e.n].push(e.j);
    }
    let mut labels = vec![None; n];
    let mut count = 0usize;
    for start in 0..n {
        if signs[start] == 0 || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(count);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if signs[w] == signs[v] && labels[w].is_none() {
                    labels[w] = Some(count);
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }
    (labels, count)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn partition_matches_a_breadth_first_oracle(
        // 5×6 grid minus the four edgeless corner points
        raw in proptest::collection::vec(prop_oneof![Just(-1.0f64), Just(0.0f64), Just(1.0f64)], 26)
    ) {
        let g = build_square_lattice(5, 6, 0.5, |_| 0.0).unwrap();
        prop_assert_eq!(g.n_vertices(), raw.len());
        let part = nodal_domains(&g, &raw, 0.0);
        let signs: Vec<i8> = raw.iter().map(|&v| {
            if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 }
        }).collect();
        prop_assert_eq!(&part.sign_map, &signs);
        let (labels, count) = bfs_partition(&g, &signs);
        prop_assert_eq!(part.count, count);
        prop_assert_eq!(part.labels, labels);
    }
}

#[test]
fn eigenmode_nodal_counts_follow_the_mode_numbers() {
    // product modes (p, p) are non-degenerate and split the square into p²
    // sign cells separated by zero lines that land exactly on vertices
    let g = build_square_lattice(11, 11, 0.1, |_| 0.0).unwrap();
    let modes = adjacency_eigen_path(&g, 7).unwrap();
    let domains = |idx: usize, mult: usize| {
        assert_eq!(modes[idx].multiplicity, mult, "cluster {idx}");
        let full = expand_interior(&g, &modes[idx].vertex_vector);
        let reals: Vec<f64> = full.iter().map(|z| z.re).collect();
        nodal_domains(&g, &reals, 0.0).count
    };
    assert_eq!(domains(0, 1), 1); // (1,1)
    assert_eq!(domains(2, 1), 4); // (2,2)
    assert_eq!(domains(6, 1), 9); // (3,3)
}

#[test]
fn pearson_closed_forms() {
    let xs = [0.3, 1.8, -0.7, 2.2, 0.0, -1.4];
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
    assert!((pearson(&xs, &ys) - 1.0).abs() <= 1e-14);
    let neg: Vec<f64> = xs.iter().map(|x| -0.5 * x + 1.0).collect();
    assert!((pearson(&xs, &neg) + 1.0).abs() <= 1e-14);
    assert!((pearson(&xs, &xs) - 1.0).abs() <= 1e-15);

    // symmetric in its arguments, bit for bit
    let other = [1.0, 0.2, 0.5, -2.0, 0.8, 0.1];
    assert_eq!(pearson(&xs, &other), pearson(&other, &xs));

    // a constant series has no variance to correlate against
    let flat = [2.0; 6];
    assert_eq!(pearson(&flat, &other), 0.0);
}

#[test]
fn mean_cosine_closed_forms() {
    let a = [[1.0, 0.0], [0.0, 2.0], [3.0, 3.0]];
    let same = mean_cosine(&a, &a).unwrap();
    assert!((same - 1.0).abs() <= 1e-15);
    let reversed: Vec<[f64; 2]> = a.iter().map(|v| [-v[0], -v[1]]).collect();
    assert!((mean_cosine(&a, &reversed).unwrap() + 1.0).abs() <= 1e-15);
    let perp: Vec<[f64; 2]> = a.iter().map(|v| [-v[1], v[0]]).collect();
    assert!(mean_cosine(&a, &perp).unwrap().abs() <= 1e-15);

    // zero vectors on either side drop the pair instead of polluting the mean
    let b = [[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
    let c = [[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]];
    assert_eq!(mean_cosine(&b, &c).unwrap(), 1.0);
    let zeros = [[0.0, 0.0]; 3];
    assert!(mean_cosine(&zeros, &a).is_none());
    assert!(mean_cosine(&[], &[]).is_none());
}

#[test]
fn ground_modes_of_lattice_and_billiard_agree() {
    let g = build_square_lattice(11, 11, 0.1, |_| 0.0).unwrap();
    let mode = adjacency_eigen_path(&g, 1).unwrap().remove(0);
    let field = GraphField::from_eigen(&g, &mode);

    let grid = build_billiard_grid(&plain_square(1.0), 41).unwrap();
    let billiard_mode = &latticewave_core::billiard::solve_closed_modes(&grid, 1).unwrap()[0];
    let carried = grid.with_real_values(&billiard_mode.field, billiard_mode.energy);

    let report = compare_fields(&field, &carried).unwrap();
    // both sides sample the same sine product at these vertices
    assert!(
        report.correlation >= 1.0 - 1e-8,
        "correlation {}",
        report.correlation
    );
    assert!(report.rms_residual <= 1e-6);
    assert!(report.current_alignment.is_none());
    assert_eq!(report.n_points, g.n_vertices());
    assert!(report.graph_max > 0.0 && report.billiard_max > 0.0);

    // the paired series behind the report are symmetric under pearson
    let (xs, ys) = paired_densities(&field, &carried).unwrap();
    assert_eq!(xs.len(), g.n_vertices());
    assert_eq!(pearson(&xs, &ys), pearson(&ys, &xs));
}

#[test]
fn geometry_guards_reject_mismatched_inputs() {
    let grid = build_billiard_grid(&plain_square(0.5), 21).unwrap();

    // lattice spilling outside the billiard square
    let g = build_square_lattice(11, 11, 0.1, |_| 0.0).unwrap();
    let values = vec![Complex64::ONE; g.n_vertices()];
    let field = GraphField {
        graph: &g,
        values,
        currents: None,
    };
    let err = compare_fields(&field, &grid).unwrap_err().to_string();
    assert!(err.contains("geometry mismatch"), "unexpected error: {err}");

    // a chain has no plane embedding to compare against
    let chain = build_chain(5, 0.1, |_| 0.0).unwrap();
    let field = GraphField {
        graph: &chain,
        values: vec![Complex64::ONE; chain.n_vertices()],
        currents: None,
    };
    assert!(compare_fields(&field, &grid).is_err());

    // identically-zero fields carry no comparable structure
    let small = build_square_lattice(3, 3, 0.25, |_| 0.0).unwrap();
    let field = GraphField {
        graph: &small,
        values: vec![Complex64::ZERO; small.n_vertices()],
        currents: None,
    };
    assert!(compare_fields(&field, &grid).is_err());
}

#[test]
fn current_alignment_closed_forms() {
    // billiard carrying a rightward plane wave: its current field points
    // along +x at every interior node
    let mut grid = build_billiard_grid(&plain_square(1.0), 21).unwrap();
    for iy in 0..grid.n {
        for ix in 0..grid.n {
            let idx = grid.node(ix, iy);
            grid.values[idx] = Complex64::new(0.0, 3.0 * ix as f64 * grid.h).exp();
        }
    }

    let g = build_square_lattice(6, 6, 0.2, |_| 0.0).unwrap();
    let with_currents = |dir: [f64; 2]| {
        let field = GraphField {
            graph: &g,
            values: vec![Complex64::ONE; g.n_vertices()],
            currents: Some(vec![dir; g.n_vertices()]),
        };
        compare_fields(&field, &grid).unwrap()
    };

    let right = with_currents([2.0, 0.0]);
    assert_eq!(right.current_alignment, Some(1.0));
    // flat unit densities on both sides leave nothing to correlate
    assert_eq!(right.correlation, 0.0);
    assert_eq!(with_currents([-1.0, 0.0]).current_alignment, Some(-1.0));
    assert_eq!(with_currents([0.0, 1.5]).current_alignment, Some(0.0));

    // control: random directions wash the alignment out
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let random: Vec<[f64; 2]> = (0..g.n_vertices())
        .map(|_| {
            let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            [theta.cos(), theta.sin()]
        })
        .collect();
    let field = GraphField {
        graph: &g,
        values: vec![Complex64::ONE; g.n_vertices()],
        currents: Some(random),
    };
    let report = compare_fields(&field, &grid).unwrap();
    let alignment = report.current_alignment.unwrap();
    assert!(
        alignment.abs() < 0.3,
        "random control should decorrelate, got {alignment}"
    );
}

#[test]
fn exact_geometries_report_roundoff_instead_of_an_order() {
    let spacings = [0.25, 0.125, 0.0625];
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;

    let chain = convergence_study(ConvergenceGeometry::Chain, &spacings, Reference::Analytic)
        .unwrap();
    assert_eq!(chain.reference, pi2);
    for e in &chain.energies {
        assert!((e - pi2).abs() <= 1e-10);
    }
    assert!(chain.observed_order.is_none());
    assert!(chain.note.as_deref().unwrap().contains("roundoff"));

    let square = convergence_study(
        ConvergenceGeometry::UnitSquare,
        &spacings,
        Reference::Analytic,
    )
    .unwrap();
    for e in &square.energies {
        assert!((e - 2.0 * pi2).abs() <= 1e-9);
    }
    assert!(square.observed_order.is_none());
    assert!(square.note.as_deref().unwrap().contains("roundoff"));
    for eps in &square.eps_residual {
        assert!(*eps <= 1e-10);
    }
}

#[test]
fn anisotropic_rectangle_converges_at_second_order() {
    let spacings = [0.25, 0.125, 0.0625];
    let geometry = ConvergenceGeometry::Rectangle {
        width: 1.0,
        height: 2.0,
    };
    let report = convergence_study(geometry, &spacings, Reference::Analytic).unwrap();

    let pi = std::f64::consts::PI;
    assert!((report.reference - pi * pi * 1.25).abs() <= 1e-12);
    // energies obey the lattice dispersion relation exactly
    for (&ell, &e) in spacings.iter().zip(&report.energies) {
        let mean = ((pi * ell).cos() + (pi * ell / 2.0).cos()) / 2.0;
        let k = mean.acos() / ell;
        assert!((e - 2.0 * k * k).abs() <= 1e-9 * e.abs());
    }
    for w in report.errors.windows(2) {
        assert!(w[1] < w[0], "errors must shrink: {:?}", report.errors);
    }
    let order = report.observed_order.expect("clean second-order data");
    assert!((1.7..=2.3).contains(&order), "observed order {order}");
    assert!(report.note.is_none());
    // the lattice ground vector is the sampled sine product here
    for eps in &report.eps_residual {
        assert!(*eps <= 1e-9);
    }

    // self-referencing ladder: Richardson from the two finest rungs lands
    // far closer to the analytic value than any single rung
    let extrapolated =
        convergence_study(geometry, &spacings, Reference::Extrapolated).unwrap();
    assert!((extrapolated.reference - pi * pi * 1.25).abs() <= 2e-4);
}

#[test]
fn triangular_fill_only_reaches_first_order() {
    let spacings = [0.25, 0.125, 0.0625, 0.03125];
    let report = convergence_study(
        ConvergenceGeometry::Triangular,
        &spacings,
        Reference::Analytic,
    )
    .unwrap();
    for w in report.errors.windows(2) {
        assert!(w[1] < w[0], "errors must shrink: {:?}", report.errors);
    }
    // the sawtooth boundary of the triangular fill tracks the square only
    // to O(ℓ), so the ladder cannot show second order
    let order = report.observed_order.expect("monotone ladder");
    assert!((0.6..=1.4).contains(&order), "observed order {order}");
    // the in-cell ground-state deviation is real here, not roundoff
    assert!(report.eps_residual.iter().all(|&e| e > 1e-3));
}

#[test]
fn convergence_input_guards() {
    let geometry = ConvergenceGeometry::UnitSquare;
    assert!(convergence_study(geometry, &[0.25, 0.125], Reference::Analytic).is_err());
    assert!(
        convergence_study(geometry, &[0.125, 0.125, 0.0625], Reference::Analytic).is_err()
    );
    assert!(convergence_study(geometry, &[0.0625, 0.125, 0.25], Reference::Analytic).is_err());
    // 0.3 does not tile the unit extent
    assert!(convergence_study(geometry, &[0.5, 0.3, 0.25], Reference::Analytic).is_err());
    let bad = ConvergenceGeometry::Rectangle {
        width: -1.0,
        height: 2.0,
    };
    assert!(convergence_study(bad, &[0.25, 0.125, 0.0625], Reference::Analytic).is_err());
}
