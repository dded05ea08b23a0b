use std::collections::BTreeMap;
use std::io::Write;

use kacz_core::problems::{
    generate, parse_matrix_market, read_matrix_market, write_matrix_market, MatrixSource, ProblemSpec, SolutionSpec,
};
use kacz_core::{solve, RowMatrix, SelectionRule, SolveStatus, StopCriteria};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MK9: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mk9-b3.mtx");

/// A deliberately simple reader for `coordinate real|integer general` files:
/// sums nothing, keeps the last value seen, and drops zeros at the end.
fn naive_read(text: &str) -> (usize, usize, BTreeMap<(usize, usize), f64>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let dims: Vec<usize> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    let mut map = BTreeMap::new();
    for l in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        let i: usize = t[0].parse().unwrap();
        let j: usize = t[1].parse().unwrap();
        let v: f64 = t[2].parse().unwrap();
        map.insert((i - 1, j - 1), v);
    }
    map.retain(|_, v| *v != 0.0);
    (dims[0], dims[1], map)
}

fn entries_of(a: &RowMatrix) -> BTreeMap<(usize, usize), f64> {
    let mut map = BTreeMap::new();
    for i in 0..a.nrows() {
        for (j, v) in a.row(i).iter() {
            if v != 0.0 {
                map.insert((i, j), v);
            }
        }
    }
    map
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reader_agrees_with_naive_reader(
        m in 1usize..12,
        n in 1usize..12,
        cells in prop::collection::btree_map((0usize..12, 0usize..12), prop_oneof![3 => -5i32..=5, 1 => Just(0)], 1..40),
    ) {
        let cells: BTreeMap<_, _> = cells.into_iter().filter(|((i, j), _)| *i < m && *j < n).collect();
        prop_assume!(!cells.is_empty());
        let mut text = format!("%%MatrixMarket matrix coordinate real general\n% generated\n{m} {n} {}\n", cells.len());
        for ((i, j), v) in &cells {
            text.push_str(&format!("{} {} {}\n", i + 1, j + 1, *v as f64 * 0.25));
        }
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();

        let (nm, nn, expected) = naive_read(&text);
        let data = parse_matrix_market(f.path()).unwrap();
        prop_assert_eq!((data.nrows, data.ncols), (nm, nn));
        let got: BTreeMap<_, _> = data.entries.iter().map(|&(i, j, v)| ((i, j), v)).collect();
        prop_assert_eq!(&got, &expected);
        prop_assert_eq!(data.explicit_zeros, cells.values().filter(|v| **v == 0).count());

        if expected.is_empty() {
            prop_assert!(data.to_matrix_filtered().is_err());
            return Ok(());
        }
        let (a, dropped) = data.to_matrix_filtered().unwrap();
        prop_assert_eq!(a.nrows() + dropped.len(), m);
        prop_assert_eq!(a.nnz(), expected.len());
    }
}

#[test]
fn generation_is_deterministic_and_consistent() {
    let sources = [
        MatrixSource::GaussianDense { m: 30, n: 7 },
        MatrixSource::UniformDense { m: 9, n: 21 },
        MatrixSource::SparseNormal { m: 50, n: 40, density: 0.1 },
        MatrixSource::SparseUniform { m: 40, n: 50, density: 0.3 },
        MatrixSource::Identity { n: 6 },
    ];
    for source in sources {
        let spec = ProblemSpec::new(source.clone(), 99);
        let p = generate(&spec).unwrap();
        let q = generate(&spec).unwrap();
        assert_eq!(p.a.to_dense(), q.a.to_dense(), "{source:?}");
        assert_eq!(p.x_star, q.x_star);
        assert_eq!(p.b, q.b);
        // b is defined by the product, so the residual at x⋆ is exactly zero
        let r = p.a.residual(&p.b, &p.x_star);
        assert!(r.iter().all(|&v| v == 0.0), "{source:?}");
        assert!((0..p.a.nrows()).all(|i| p.a.row_sq_norm(i) > 0.0));
    }
}

#[test]
fn gaussian_entries_have_unit_normal_moments() {
    let p = generate(&ProblemSpec::new(MatrixSource::GaussianDense { m: 1000, n: 1000 }, 2024)).unwrap();
    let d = p.a.to_dense();
    let count = d.len() as f64;
    let mean = d.iter().sum::<f64>() / count;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    assert!(mean.abs() <= 0.02, "mean {mean}");
    assert!((var - 1.0).abs() <= 0.05, "variance {var}");
}

#[test]
fn sparse_density_is_respected() {
    let expected = 500.0 * 5000.0 * 0.2;
    for seed in 0..5 {
        let p = generate(&ProblemSpec::new(MatrixSource::SparseUniform { m: 500, n: 5000, density: 0.2 }, seed)).unwrap();
        let nnz = p.a.nnz() as f64;
        assert!((nnz - expected).abs() <= 0.05 * expected, "seed {seed}: {nnz}");
        assert!(p.a.to_dense().iter().all(|&v| (0.0..1.0).contains(&v)));
    }
    let p = generate(&ProblemSpec::new(MatrixSource::SparseNormal { m: 200, n: 100, density: 0.2 }, 1)).unwrap();
    assert!((p.a.nnz() as f64 - 4000.0).abs() <= 200.0);
}

#[test]
fn zero_solution_converges_immediately() {
    let spec = ProblemSpec::new(MatrixSource::GaussianDense { m: 20, n: 5 }, 0)
        .with_solution(SolutionSpec::Provided(vec![0.0; 5]));
    let p = generate(&spec).unwrap();
    assert!(p.b.iter().all(|&v| v == 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let stop = StopCriteria::new(1e-10, kacz_core::Metric::Rr, None).unwrap();
    let rep = solve(SelectionRule::Grmk, &p.a, &p.b, &[0.0; 5], &stop, &mut rng, None).unwrap();
    assert_eq!((rep.iterations, rep.status), (0, SolveStatus::Converged));
}

#[test]
fn written_files_read_back() {
    let p = generate(&ProblemSpec::new(MatrixSource::SparseNormal { m: 30, n: 20, density: 0.2 }, 5)).unwrap();
    let f = tempfile::NamedTempFile::new().unwrap();
    write_matrix_market(f.path(), &p.a, None).unwrap();
    let text = std::fs::read_to_string(f.path()).unwrap();
    let (m, n, naive) = naive_read(&text);
    assert_eq!((m, n), (30, 20));
    assert_eq!(naive, entries_of(&p.a));
    assert_eq!(read_matrix_market(f.path()).unwrap().to_dense(), p.a.to_dense());
}

/// Independent construction of the matching-complex boundary matrix:
/// rows are the 4-matchings of K9, columns the 3-matchings, and each row has
/// `(-1)^p` in the column of the face obtained by deleting its `p`-th edge.
fn matching_complex_boundary() -> (usize, usize, BTreeMap<(usize, usize), f64>) {
    let edges: Vec<(usize, usize)> = (0..9).flat_map(|i| (i + 1..9).map(move |j| (i, j))).collect();
    fn extend(edges: &[(usize, usize)], start: usize, used: u16, cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for e in start..edges.len() {
            let (a, b) = edges[e];
            if used & (1 << a) == 0 && used & (1 << b) == 0 {
                cur.push(e);
                extend(edges, e + 1, used | 1 << a | 1 << b, cur, k, out);
                cur.pop();
            }
        }
    }
    let (mut m4, mut m3) = (Vec::new(), Vec::new());
    extend(&edges, 0, 0, &mut Vec::new(), 4, &mut m4);
    extend(&edges, 0, 0, &mut Vec::new(), 3, &mut m3);
    let col: BTreeMap<Vec<usize>, usize> = m3.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let mut map = BTreeMap::new();
    for (i, matching) in m4.iter().enumerate() {
        for p in 0..4 {
            let mut face = matching.clone();
            face.remove(p);
            map.insert((i, col[&face]), if p % 2 == 0 { 1.0 } else { -1.0 });
        }
    }
    (m4.len(), m3.len(), map)
}

#[test]
fn matching_complex_fixture_matches_construction() {
    let (m, n, expected) = matching_complex_boundary();
    assert_eq!((m, n, expected.len()), (945, 1260, 3780));
    let a = read_matrix_market(MK9).unwrap();
    assert_eq!((a.nrows(), a.ncols(), a.nnz()), (945, 1260, 3780));
    assert_eq!(entries_of(&a), expected);
    // every row has four ±1 entries
    assert!(a.row_sq_norms().iter().all(|&v| v == 4.0));
}
