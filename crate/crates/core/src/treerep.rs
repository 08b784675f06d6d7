//! Hyperbolic realizations of simplicial trees with cosh d(Ψx, Ψy) = λ^{d(x,y)}.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::quadspace::{acosh_clamped, gram_realize, hdist, HPoint, QuadSpace};

/// Finite tree with unit edge lengths and its integer path metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricTree {
    pub m: usize,
    pub edges: Vec<(usize, usize)>,
    pub dist: Vec<Vec<usize>>,
}

impl MetricTree {
    /// Requires exactly m − 1 edges forming a connected graph on 0..m.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return invalid("a tree needs at least one vertex");
        }
        if edges.len() != m - 1 {
            return invalid(format!("a tree on {m} vertices has {} edges, got {}", m - 1, edges.len()));
        }
        let mut adj = vec![Vec::new(); m];
        for &(u, v) in edges {
            if u >= m || v >= m {
                return invalid(format!("edge ({u}, {v}) references a vertex outside 0..{m}"));
            }
            if u == v {
                return invalid(format!("self-loop at vertex {u}"));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut dist = Vec::with_capacity(m);
        for source in 0..m {
            let mut d = vec![usize::MAX; m];
            d[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if d[y] == usize::MAX {
                        d[y] = d[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            if d.contains(&usize::MAX) {
                return invalid("edge list is not connected");
            }
            dist.push(d);
        }
        Ok(Self { m, edges: edges.to_vec(), dist })
    }

    /// Edge-list text: one "u v" pair per line, 0-indexed; blank lines and `#` comments are
    /// skipped. An empty list is the single-vertex tree.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("line {}: '{s}' is not a vertex index", lineno + 1)))
            };
            if fields.len() != 2 {
                return invalid(format!("line {}: expected \"u v\", got '{line}'", lineno + 1));
            }
            edges.push((parse(fields[0])?, parse(fields[1])?));
        }
        let m = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(1);
        Self::from_edges(m, &edges)
    }

    pub fn path(m: usize) -> Result<Self> {
        let edges: Vec<_> = (1..m).map(|i| (i - 1, i)).collect();
        Self::from_edges(m, &edges)
    }

    pub fn star(leaves: usize) -> Result<Self> {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Self::from_edges(leaves + 1, &edges)
    }

    /// Uniform random recursive tree: vertex i attaches to a uniform earlier vertex.
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<Self> {
        let edges: Vec<_> = (1..m).map(|i| (rng.gen_range(0..i), i)).collect();
        Self::from_edges(m, &edges)
    }

    /// Relabels vertex x as perm[x].
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: perm.len() });
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::from_edges(self.m, &edges)
    }

    /// For every quadruple the two largest of the three pair sums coincide.
    pub fn satisfies_four_point(&self) -> bool {
        let d = &self.dist;
        let m = self.m;
        for x in 0..m {
            for y in x..m {
                for z in y..m {
                    for w in z..m {
                        let mut s = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
                        s.sort_unstable();
                        if s[1] != s[2] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

fn check_lambda(lam: f64) -> Result<()> {
    if !(lam > 1.0 && lam.is_finite()) {
        return invalid(format!("λ = {lam} must exceed 1"));
    }
    Ok(())
}

/// G_xy = λ^{d(x,y)}.
pub fn tree_gram(tree: &MetricTree, lam: f64) -> Result<DMatrix<f64>> {
    check_lambda(lam)?;
    Ok(DMatrix::from_fn(tree.m, tree.m, |x, y| lam.powi(tree.dist[x][y] as i32)))
}

#[derive(Debug, Clone)]
pub struct TreeEmbedding {
    pub space: QuadSpace,
    pub points: Vec<HPoint>,
    /// Gram eigenvalues in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub positive_count: usize,
    /// max |hdist(Ψx, Ψy) − arccosh(λ^{d(x,y)})|.
    pub max_distance_error: f64,
    /// max |B(Ψx, Ψy) − λ^{d(x,y)}| / λ^{d(x,y)}.
    pub max_gram_error: f64,
}

/// Realizes the tree on the hyperboloid of an index-1 form. Fails with an invariant error
/// unless the Gram matrix has exactly one positive eigenvalue.
pub fn tree_embed(tree: &MetricTree, lam: f64) -> Result<TreeEmbedding> {
    let gram = tree_gram(tree, lam)?;
    let real = gram_realize(&gram, 1).map_err(|e| match e {
        Error::SignatureExceeded { positive, .. } => {
            Error::Invariant(format!("tree Gram matrix at λ = {lam} has {positive} positive eigenvalues, expected exactly 1"))
        }
        other => other,
    })?;
    if real.positive_count != 1 {
        return Err(Error::Invariant(format!(
            "tree Gram matrix at λ = {lam} has {} positive eigenvalues, expected exactly 1",
            real.positive_count
        )));
    }
    let sheet = real.vectors[0][0].signum();
    if real.vectors.iter().any(|v| v[0].signum() != sheet) {
        return Err(Error::Invariant("realized points do not lie on a single sheet".into()));
    }
    let points = real
        .vectors
        .iter()
        .map(|v| HPoint::new(&real.space, v.as_slice()))
        .collect::<Result<Vec<_>>>()?;
    let mut max_distance_error: f64 = 0.0;
    let mut max_gram_error: f64 = 0.0;
    for x in 0..tree.m {
        for y in x..tree.m {
            let target = gram[(x, y)];
            let b = real.space.bform(points[x].coords().as_slice(), points[y].coords().as_slice())?;
            max_gram_error = max_gram_error.max((b - target).abs() / target);
            let d = hdist(&real.space, &points[x], &points[y])?;
            max_distance_error = max_distance_error.max((d - acosh_clamped(target)?).abs());
        }
    }
    Ok(TreeEmbedding {
        space: real.space,
        points,
        eigenvalues: real.eigenvalues,
        positive_count: real.positive_count,
        max_distance_error,
        max_gram_error,
    })
}

/// Gram matrix B(Ψx, Ψy) of a realization.
pub fn realized_gram(emb: &TreeEmbedding) -> Result<DMatrix<f64>> {
    let m = emb.points.len();
    let mut g = DMatrix::zeros(m, m);
    for x in 0..m {
        for y in 0..m {
            g[(x, y)] = emb.space.bform(emb.points[x].coords().as_slice(), emb.points[y].coords().as_slice())?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gram_examples() {
        let single = MetricTree::from_edges(1, &[]).unwrap();
        assert_eq!(tree_gram(&single, 2.0).unwrap(), DMatrix::from_element(1, 1, 1.0));
        let pair = MetricTree::path(2).unwrap();
        assert_eq!(tree_gram(&pair, 2.0).unwrap(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        let path = MetricTree::path(3).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0]);
        assert_eq!(tree_gram(&path, 2.0).unwrap(), expected);
        assert!(tree_gram(&path, 1.0).is_err());
        assert!(tree_gram(&path, 0.5).is_err());
    }

    #[test]
    fn embed_examples() {
        let pair = MetricTree::path(2).unwrap();
        let emb = tree_embed(&pair, 2.0).unwrap();
        assert_eq!(emb.positive_count, 1);
        assert!((emb.eigenvalues[0] - 3.0).abs() < 1e-12 && (emb.eigenvalues[1] + 1.0).abs() < 1e-12);
        let d = hdist(&emb.space, &emb.points[0], &emb.points[1]).unwrap();
        assert!((d - 2f64.acosh()).abs() < 1e-12);
        let star = MetricTree::star(4).unwrap();
        for &lam in &[1.1, 2.0, 5.0] {
            let emb = tree_embed(&star, lam).unwrap();
            assert_eq!(emb.positive_count, 1);
            assert!(emb.max_distance_error < 1e-8);
        }
    }

    #[test]
    fn random_trees_certified() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = rng.gen_range(1..=12);
            let tree = MetricTree::random(m, &mut rng).unwrap();
            assert!(tree.satisfies_four_point());
            for &lam in &[1.5, 3.0] {
                let emb = tree_embed(&tree, lam).unwrap();
                assert_eq!(emb.positive_count, 1);
                assert!(emb.max_distance_error < 1e-8, "{}", emb.max_distance_error);
            }
        }
    }

    #[test]
    fn path_metric_concave_increasing() {
        let path = MetricTree::path(8).unwrap();
        let emb = tree_embed(&path, 2.0).unwrap();
        let d: Vec<f64> = (0..8).map(|k| hdist(&emb.space, &emb.points[0], &emb.points[k]).unwrap()).collect();
        for w in d.windows(3) {
            assert!(w[1] > w[0] && w[2] > w[1]);
            assert!(w[2] - w[1] <= w[1] - w[0] + 1e-12);
        }
    }

    #[test]
    fn permutation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let tree = MetricTree::random(9, &mut rng).unwrap();
        let mut perm: Vec<usize> = (0..9).collect();
        perm.shuffle(&mut rng);
        let moved = tree.permuted(&perm).unwrap();
        let g = tree_gram(&tree, 2.0).unwrap();
        let gp = tree_gram(&moved, 2.0).unwrap();
        for x in 0..9 {
            for y in 0..9 {
                assert_eq!(g[(x, y)], gp[(perm[x], perm[y])]);
            }
        }
        let rp = realized_gram(&tree_embed(&moved, 2.0).unwrap()).unwrap();
        let r = realized_gram(&tree_embed(&tree, 2.0).unwrap()).unwrap();
        for x in 0..9 {
            for y in 0..9 {
                assert!((r[(x, y)] - rp[(perm[x], perm[y])]).abs() < 1e-9 * r[(x, y)]);
            }
        }
    }

    #[test]
    fn edge_list_parsing() {
        let tree = MetricTree::parse_edge_list("# star\n0 1\n0 2\n\n0 3\n").unwrap();
        assert_eq!(tree.m, 4);
        assert_eq!(tree.dist[1][2], 2);
        assert!(MetricTree::parse_edge_list("0 1\n1 2\n2 0\n").is_err());
        assert!(MetricTree::parse_edge_list("0 1\n2 3\n").is_err());
        assert!(MetricTree::parse_edge_list("0 x\n").is_err());
        assert_eq!(MetricTree::parse_edge_list("").unwrap().m, 1);
    }
}
