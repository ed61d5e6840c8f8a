use num_complex::Complex64;

use crate::error::{PronyError, Result};
use crate::linalg::{eigenvalues, ComplexMatrix};

/// Roots of `Σ coeffs[i] x^i` (lowest degree first) as companion-matrix eigenvalues.
///
/// Trailing zero coefficients are dropped, so the degree is that of the
/// highest nonzero coefficient.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = coeffs
        .iter()
        .rposition(|z| *z != Complex64::new(0.0, 0.0))
        .ok_or_else(|| PronyError::InvalidInput("zero polynomial".into()))?;
    if degree == 0 {
        return Err(PronyError::InvalidInput(
            "constant polynomial has no roots".into(),
        ));
    }
    let lead = coeffs[degree];
    let mut companion = ComplexMatrix::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    eigenvalues(&companion)
}

/// Nodes estimated from noise-scattered roots.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// One node per multiplicity slot, in the order of the requested multiplicities.
    pub nodes: Vec<Complex64>,
    /// Largest distance of a root from the mean of its group.
    pub max_spread: f64,
}

/// Groups `roots` into clusters of sizes `multiplicities` and averages each group.
///
/// Clusters are grown by repeatedly merging the two closest cluster means,
/// never exceeding the largest multiplicity. If that fails to reproduce the
/// requested size multiset, an exhaustive search over size-constrained
/// partitions is tried for small inputs.
pub fn cluster_roots(
    roots: &[Complex64],
    multiplicities: &[usize],
    tol: f64,
) -> Result<Clustering> {
    let total: usize = multiplicities.iter().sum();
    if roots.len() != total {
        return Err(PronyError::InvalidInput(format!(
            "{} roots for total multiplicity {total}",
            roots.len()
        )));
    }
    let mut wanted: Vec<usize> = multiplicities.to_vec();
    wanted.sort_unstable();

    let mut groups = agglomerate(roots, multiplicities.len(), wanted[wanted.len() - 1]);
    let mut sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    sizes.sort_unstable();
    if sizes != wanted {
        match exhaustive_partition(roots, &wanted) {
            Some(g) => groups = g,
            None => {
                return Err(PronyError::Clustering {
                    reason: format!("could not form groups of sizes {wanted:?}"),
                    partition: sizes,
                })
            }
        }
    }

    let means: Vec<Complex64> = groups.iter().map(|g| mean(roots, g)).collect();
    let max_spread = groups
        .iter()
        .zip(&means)
        .flat_map(|(g, mu)| g.iter().map(move |&i| (roots[i] - mu).norm()))
        .fold(0.0, f64::max);
    if !(max_spread <= tol) {
        return Err(PronyError::Clustering {
            reason: format!("cluster spread {max_spread:e} exceeds tolerance {tol:e}"),
            partition: groups.iter().map(Vec::len).collect(),
        });
    }

    // hand each multiplicity slot a group of matching size
    let mut taken = vec![false; groups.len()];
    let nodes = multiplicities
        .iter()
        .map(|&l| {
            let k = (0..groups.len())
                .find(|&k| !taken[k] && groups[k].len() == l)
                .expect("size multisets agree");
            taken[k] = true;
            means[k]
        })
        .collect();
    Ok(Clustering { nodes, max_spread })
}

fn mean(roots: &[Complex64], group: &[usize]) -> Complex64 {
    group.iter().map(|&i| roots[i]).sum::<Complex64>() / group.len() as f64
}

fn agglomerate(roots: &[Complex64], target: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = (0..roots.len()).map(|i| vec![i]).collect();
    while groups.len() > target {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                if groups[a].len() + groups[b].len() > cap {
                    continue;
                }
                let d = (mean(roots, &groups[a]) - mean(roots, &groups[b])).norm();
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let merged = groups.swap_remove(b);
        groups[a].extend(merged);
    }
    groups
}

const EXHAUSTIVE_LIMIT: usize = 12;

/// Minimizes the total squared distance to group means over all partitions
/// with the given group sizes.
fn exhaustive_partition(roots: &[Complex64], sizes: &[usize]) -> Option<Vec<Vec<usize>>> {
    if roots.len() > EXHAUSTIVE_LIMIT {
        return None;
    }
    struct Search<'a> {
        roots: &'a [Complex64],
        best_cost: f64,
        best: Option<Vec<Vec<usize>>>,
    }
    fn cost(roots: &[Complex64], g: &[usize]) -> f64 {
        let mu = mean(roots, g);
        g.iter().map(|&i| (roots[i] - mu).norm_sqr()).sum()
    }
    fn choose(
        s: &mut Search,
        remaining: Vec<usize>,
        sizes: &[usize],
        groups: &mut Vec<Vec<usize>>,
        acc: f64,
    ) {
        if acc >= s.best_cost {
            return;
        }
        let Some((&size, rest_sizes)) = sizes.split_first() else {
            s.best_cost = acc;
            s.best = Some(groups.clone());
            return;
        };
        // the first remaining root always joins the current group, which
        // removes the permutation symmetry between equal-sized groups only
        // partially; that is fine at this size
        let (first, others) = remaining.split_first().expect("sizes sum to root count");
        for combo in combinations(others, size - 1) {
            let mut g = vec![*first];
            g.extend(&combo);
            let left: Vec<usize> = others.iter().copied().filter(|i| !combo.contains(i)).collect();
            let c = cost(s.roots, &g);
            groups.push(g);
            choose(s, left, rest_sizes, groups, acc + c);
            groups.pop();
        }
    }
    fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![Vec::new()];
        }
        if items.len() < k {
            return Vec::new();
        }
        let mut out = Vec::new();
        for (i, &x) in items.iter().enumerate() {
            for mut tail in combinations(&items[i + 1..], k - 1) {
                tail.insert(0, x);
                out.push(tail);
            }
        }
        out
    }

    let mut best: Option<Vec<Vec<usize>>> = None;
    let mut best_cost = f64::INFINITY;
    // distinct orderings of the group sizes
    let mut orders: Vec<Vec<usize>> = Vec::new();
    permute_unique(&mut sizes.to_vec(), 0, &mut orders);
    for order in orders {
        let mut s = Search {
            roots,
            best_cost,
            best: None,
        };
        choose(&mut s, (0..roots.len()).collect(), &order, &mut Vec::new(), 0.0);
        if s.best.is_some() && s.best_cost < best_cost {
            best_cost = s.best_cost;
            best = s.best;
        }
    }
    best
}

fn permute_unique(items: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if start == items.len() {
        out.push(items.clone());
        return;
    }
    let mut used = Vec::new();
    for i in start..items.len() {
        if used.contains(&items[i]) {
            continue;
        }
        used.push(items[i]);
        items.swap(start, i);
        permute_unique(items, start + 1, out);
        items.swap(start, i);
    }
}
