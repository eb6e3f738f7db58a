//! Hashimoto (non-backtracking) matrices and spectra.
//!
//! `H_G` is the adjacency matrix of the oriented line graph: rows and
//! columns are indexed by directed edges, with a 1 in `(e1, e2)` exactly
//! when `head(e1) = tail(e2)` and `inv(e1) != e2`. The Perron-Frobenius
//! eigenvalue `mu_1(G)` of `H_G` drives every growth bound in the library.

use crate::error::{Error, Result};
use crate::graph::{DirEdgeId, Graph};
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;

/// 0/1 matrix indexed by the directed edges of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct HashimotoMatrix {
    pub index: Vec<DirEdgeId>,
    pub entries: DMatrix<f64>,
}

/// Builds `H_G`. `Line(G)` is recoverable as the support digraph.
pub fn hashimoto(g: &Graph) -> HashimotoMatrix {
    let n = g.n_dir_edges();
    let mut entries = DMatrix::zeros(n, n);
    for e1 in 0..n as u32 {
        for &e2 in g.out_edges(g.head(e1)) {
            if g.inv(e1) != e2 {
                entries[(e1 as usize, e2 as usize)] = 1.0;
            }
        }
    }
    HashimotoMatrix {
        index: (0..n as u32).collect(),
        entries,
    }
}

/// Vertex-indexed adjacency matrix; `(v1, v2)` counts directed edges
/// from `v1` to `v2`.
pub fn adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.n_vertices();
    let mut m = DMatrix::zeros(n, n);
    for e in 0..g.n_dir_edges() as u32 {
        m[(g.tail(e) as usize, g.head(e) as usize)] += 1.0;
    }
    m
}

/// Successor lists of the oriented line graph (sparse form of `H_G`).
pub fn line_graph_successors(g: &Graph) -> Vec<Vec<DirEdgeId>> {
    (0..g.n_dir_edges() as u32)
        .map(|e1| {
            g.out_edges(g.head(e1))
                .iter()
                .copied()
                .filter(|&e2| g.inv(e1) != e2)
                .collect()
        })
        .collect()
}

pub const DEFAULT_MU1_TOL: f64 = 1e-10;
const MU1_ITERATION_CAP: usize = 100_000;

/// Spectral radius of `H_G` to relative tolerance `tol`.
///
/// Strongly connected components of the line digraph are handled one at a
/// time; on each component, power iteration runs on `H + I` (primitive on
/// an SCC), with Collatz-Wielandt brackets giving a certified interval.
pub fn mu1(g: &Graph, tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    if g.n_dir_edges() == 0 {
        return Ok(0.0);
    }
    let succ = line_graph_successors(g);
    let sccs = strongly_connected_components(&succ);
    let mut best: f64 = 0.0;
    for scc in &sccs {
        if scc.len() == 1 {
            let v = scc[0];
            // trivial SCC contributes only via a self-transition
            if succ[v].contains(&(v as u32)) {
                best = best.max(1.0);
            }
            continue;
        }
        best = best.max(scc_spectral_radius(&succ, scc, tol)?);
    }
    Ok(best)
}

/// Power iteration on `(H + I)` restricted to one SCC.
fn scc_spectral_radius(succ: &[Vec<DirEdgeId>], scc: &[usize], tol: f64) -> Result<f64> {
    let n = scc.len();
    let mut local = vec![usize::MAX; succ.len()];
    for (i, &v) in scc.iter().enumerate() {
        local[v] = i;
    }
    let adj: Vec<Vec<usize>> = scc
        .iter()
        .map(|&v| {
            succ[v]
                .iter()
                .filter_map(|&w| {
                    let lw = local[w as usize];
                    (lw != usize::MAX).then_some(lw)
                })
                .collect()
        })
        .collect();
    let mut v = vec![1.0f64; n];
    let mut last = (0.0f64, f64::INFINITY);
    for _ in 0..MU1_ITERATION_CAP {
        let mut next = v.clone(); // the +I term
        for i in 0..n {
            for &j in &adj[i] {
                next[i] += v[j];
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..n {
            let ratio = next[i] / v[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut next {
            *x /= norm;
        }
        v = next;
        if hi - lo <= tol * hi {
            return Ok(((lo + hi) / 2.0 - 1.0).max(0.0));
        }
        last = (lo, hi);
    }
    Err(Error::NonConvergence {
        lo: last.0 - 1.0,
        hi: last.1 - 1.0,
    })
}

fn strongly_connected_components(succ: &[Vec<DirEdgeId>]) -> Vec<Vec<usize>> {
    // iterative Tarjan
    let n = succ.len();
    let mut index = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0u32;
    let mut comps = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != u32::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut ei)) = call.last_mut() {
            if *ei < succ[v].len() {
                let w = succ[v][*ei] as usize;
                *ei += 1;
                if index[w] == u32::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

pub const DENSE_EIGEN_CAP: usize = 512;

/// All eigenvalues, with multiplicity, of a real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if m.nrows() > DENSE_EIGEN_CAP {
        return Err(Error::InvalidInput(format!(
            "dense eigensolver capped at dimension {DENSE_EIGEN_CAP}"
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = m.clone().complex_eigenvalues();
    Ok(ev.iter().map(|c| Complex64::new(c.re, c.im)).collect())
}

/// Eigenvalues of a complex square matrix via complex Schur decomposition.
pub fn eigenvalues_complex(m: &DMatrix<Complex<f64>>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if m.nrows() > DENSE_EIGEN_CAP {
        return Err(Error::InvalidInput(format!(
            "dense eigensolver capped at dimension {DENSE_EIGEN_CAP}"
        )));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(1e-13, 100_000)
        .ok_or(Error::NonConvergence {
            lo: f64::NAN,
            hi: f64::NAN,
        })?;
    let (_, t) = schur.unpack();
    Ok((0..m.nrows())
        .map(|k| Complex64::new(t[(k, k)].re, t[(k, k)].im))
        .collect())
}

/// Is `G` a `(>=nu, <r)`-tangle: connected, `mu_1(G) >= nu` (to tolerance),
/// and `ord(G) < r`?
pub fn is_tangle(g: &Graph, nu: f64, r: i64, tol: f64) -> Result<bool> {
    if g.is_empty() || !g.is_connected() {
        return Ok(false);
    }
    if g.order_of() >= r {
        return Ok(false);
    }
    Ok(mu1(g, tol)? >= nu - tol * (1.0 + nu))
}

/// CSV export, row-major, directed edge names in the header.
pub fn matrix_to_csv(g: &Graph, m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let names: Vec<&str> = (0..g.n_dir_edges() as u32).map(|e| g.edge_name(e)).collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashimoto_of_cycle_is_two_disjoint_cycles() {
        let g = Graph::cycle(3);
        let h = hashimoto(&g);
        assert_eq!(h.entries.nrows(), 6);
        for e in 0..6 {
            let row: f64 = (0..6).map(|j| h.entries[(e, j)]).sum();
            assert_eq!(row, 1.0); // permutation-like
        }
        let ev = eigenvalues(&h.entries).unwrap();
        // two copies of the cube roots of unity
        let mut near_one = 0;
        for v in &ev {
            assert!((v.norm() - 1.0).abs() < 1e-9);
            if (v - Complex64::new(1.0, 0.0)).norm() < 1e-9 {
                near_one += 1;
            }
        }
        assert_eq!(near_one, 2);
    }

    #[test]
    fn hashimoto_of_half_loop_is_zero() {
        let g = Graph::half_loop_bouquet(1);
        let h = hashimoto(&g);
        assert_eq!(h.entries.nrows(), 1);
        assert_eq!(h.entries[(0, 0)], 0.0);
        assert_eq!(mu1(&g, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn hashimoto_of_bouquet_row_sums() {
        let g = Graph::bouquet(2);
        let h = hashimoto(&g);
        assert_eq!(h.entries.nrows(), 4);
        for e in 0..4 {
            let row: f64 = (0..4).map(|j| h.entries[(e, j)]).sum();
            assert_eq!(row, 3.0);
        }
    }

    #[test]
    fn mu1_values() {
        assert!((mu1(&Graph::cycle(5), 1e-10).unwrap() - 1.0).abs() < 1e-9);
        // bouquet of m whole-loops: 2m - 1
        assert!((mu1(&Graph::bouquet(2), 1e-10).unwrap() - 3.0).abs() < 1e-9);
        assert!((mu1(&Graph::bouquet(3), 1e-10).unwrap() - 5.0).abs() < 1e-9);
        // theta is 3-regular: d - 1 = 2
        assert!((mu1(&Graph::theta(), 1e-10).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mu1_matches_dense_eigenvalues() {
        for g in [Graph::theta(), Graph::bouquet(2), Graph::cycle(4)] {
            let h = hashimoto(&g);
            let dense: f64 = eigenvalues(&h.entries)
                .unwrap()
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            assert!((mu1(&g, 1e-10).unwrap() - dense).abs() < 1e-8);
        }
    }

    #[test]
    fn mu1_of_disjoint_union_is_max() {
        // theta plus a separate 3-cycle
        let mut names = vec!["u".into(), "v".into()];
        let mut edges = Vec::new();
        for i in 0..3 {
            let fwd = 2 * i as u32;
            edges.push((format!("s{i}"), 0, 1, fwd + 1));
            edges.push((format!("s{i}'"), 1, 0, fwd));
        }
        for i in 0..3u32 {
            names.push(format!("c{i}"));
            let base = 6 + 2 * i;
            edges.push((format!("e{i}"), 2 + i, 2 + (i + 1) % 3, base + 1));
            edges.push((format!("e{i}'"), 2 + (i + 1) % 3, 2 + i, base));
        }
        let g = Graph::new(names, edges).unwrap();
        assert!((mu1(&g, 1e-10).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_trivial_and_k4() {
        let one = DMatrix::from_row_slice(1, 1, &[5.0]);
        let ev = eigenvalues(&one).unwrap();
        assert_eq!(ev.len(), 1);
        assert!((ev[0] - Complex64::new(5.0, 0.0)).norm() < 1e-12);

        // K4 is 3-regular: largest Hashimoto eigenvalue is 2
        let mut names = Vec::new();
        let mut edges = Vec::new();
        for i in 0..4 {
            names.push(format!("v{i}"));
        }
        let mut id = 0u32;
        for i in 0..4u32 {
            for j in (i + 1)..4u32 {
                edges.push((format!("e{i}{j}"), i, j, id + 1));
                edges.push((format!("e{j}{i}"), j, i, id));
                id += 2;
            }
        }
        let k4 = Graph::new(names, edges).unwrap();
        let h = hashimoto(&k4);
        let top = eigenvalues(&h.entries)
            .unwrap()
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        assert!((top - 2.0).abs() < 1e-8);
    }

    #[test]
    fn complex_schur_probe() {
        let i = Complex::new(0.0, 1.0);
        let m = DMatrix::<Complex<f64>>::from_row_slice(
            2,
            2,
            &[Complex::new(1.0, 0.0), i, Complex::new(0.0, 0.0), Complex::new(0.0, 2.0)],
        );
        let ev = eigenvalues_complex(&m).unwrap();
        let mut found1 = false;
        let mut found2i = false;
        for v in ev {
            if (v - Complex64::new(1.0, 0.0)).norm() < 1e-9 {
                found1 = true;
            }
            if (v - Complex64::new(0.0, 2.0)).norm() < 1e-9 {
                found2i = true;
            }
        }
        assert!(found1 && found2i);
    }

    #[test]
    fn tangles() {
        // bouquet of 2 whole-loops: mu1 = 3, ord = 1
        assert!(is_tangle(&Graph::bouquet(2), 2.0, 2, 1e-10).unwrap());
        // cycles have mu1 = 1
        assert!(!is_tangle(&Graph::cycle(4), 1.1, 5, 1e-10).unwrap());
        // theta has ord 1, not < 1
        assert!(!is_tangle(&Graph::theta(), 1.0, 1, 1e-10).unwrap());
    }

    #[test]
    fn pruned_connected_mu1_vs_chi() {
        use num_rational::Rational64;
        for g in [
            Graph::cycle(3),
            Graph::cycle(7),
            Graph::theta(),
            Graph::bouquet(1),
            Graph::bouquet(2),
            Graph::half_loop_bouquet(2),
            Graph::half_loop_bouquet(3),
            Graph::banana(4),
        ] {
            assert!(g.is_pruned() && g.is_connected());
            let gt = mu1(&g, 1e-10).unwrap() > 1.0 + 1e-9;
            let neg = g.euler_char() < Rational64::new(0, 1);
            assert_eq!(gt, neg, "graph with chi {}", g.euler_char());
        }
    }
}
