use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::Mrp;
use crate::error::{LstdError, Result};
use crate::linalg::{solve_vec, Matrix, Singularity, Vector};

/// Transition probabilities at or below this count as absent edges.
pub const EDGE_TOL: f64 = 1e-15;

/// Recurrent-class membership of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateClass {
    /// Member of the recurrent class with this index. Classes are numbered
    /// by their lowest state index.
    Recurrent(usize),
    Transient,
}

impl StateClass {
    pub fn is_transient(self) -> bool {
        matches!(self, StateClass::Transient)
    }
}

/// Recurrent-class labels for the chain with transition matrix `p`. A
/// strongly connected component is recurrent iff no edge leaves it.
pub fn recurrent_classes_of(p: &Matrix) -> Vec<StateClass> {
    let n = p.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..p.ncols().min(n) {
            if p[(i, j)] > EDGE_TOL {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut component = vec![0usize; n];
    let sccs = tarjan_scc(&graph);
    for (c, members) in sccs.iter().enumerate() {
        for node in members {
            component[node.index()] = c;
        }
    }
    let closed: Vec<bool> = sccs
        .iter()
        .enumerate()
        .map(|(c, members)| {
            members.iter().all(|node| {
                let i = node.index();
                (0..n).all(|j| p[(i, j)] <= EDGE_TOL || component[j] == c)
            })
        })
        .collect();

    // Renumber closed components in order of their lowest state.
    let mut relabel: Vec<Option<usize>> = vec![None; sccs.len()];
    let mut next = 0;
    let mut labels = Vec::with_capacity(n);
    for &c in component.iter().take(n) {
        if closed[c] {
            let id = *relabel[c].get_or_insert_with(|| {
                next += 1;
                next - 1
            });
            labels.push(StateClass::Recurrent(id));
        } else {
            labels.push(StateClass::Transient);
        }
    }
    labels
}

pub fn recurrent_classes(mrp: &Mrp) -> Vec<StateClass> {
    recurrent_classes_of(mrp.transition())
}

/// Stationary state weights `ξ` of one recurrent class: a left unit
/// eigenvector of the transition matrix, zero outside the class.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryWeights {
    weights: Vector,
    classes: Vec<StateClass>,
    class: usize,
}

impl StationaryWeights {
    /// Wraps user-supplied weights after checking that they are a
    /// probability vector, invariant under `p`, and zero on transient states.
    /// Useful when the chain has many stationary distributions.
    pub fn from_vector(weights: Vector, p: &Matrix) -> Result<Self> {
        let n = p.nrows();
        if weights.len() != n {
            return Err(LstdError::InvalidArgument(format!(
                "weights have length {}, expected {n}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(LstdError::InvalidArgument("weights must be finite and >= 0".into()));
        }
        if (weights.sum() - 1.0).abs() > 1e-12 {
            return Err(LstdError::InvalidArgument(format!("weights sum to {}", weights.sum())));
        }
        let drift = (p.tr_mul(&weights) - &weights).amax();
        if drift > 1e-10 {
            return Err(LstdError::InvalidArgument(format!(
                "weights are not invariant under the chain (drift {drift:.3e})"
            )));
        }
        let classes = recurrent_classes_of(p);
        if classes.iter().zip(weights.iter()).any(|(c, w)| c.is_transient() && *w != 0.0) {
            return Err(LstdError::InvalidArgument("weights put mass on transient states".into()));
        }
        let class = classes
            .iter()
            .zip(weights.iter())
            .find_map(|(c, w)| match c {
                StateClass::Recurrent(id) if *w > 0.0 => Some(*id),
                _ => None,
            })
            .unwrap_or(0);
        Ok(Self { weights, classes, class })
    }

    pub fn weights(&self) -> &Vector {
        &self.weights
    }

    /// `Ξ = diag(ξ)`.
    pub fn diag(&self) -> Matrix {
        Matrix::from_diagonal(&self.weights)
    }

    pub fn classes(&self) -> &[StateClass] {
        &self.classes
    }

    /// Index of the recurrent class the weights are supported on.
    pub fn class(&self) -> usize {
        self.class
    }

    pub fn states(&self) -> usize {
        self.weights.len()
    }

    /// True when every state carries positive weight.
    pub fn is_positive(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0)
    }
}

/// Stationary weights of recurrent class `class` (default: the class of the
/// lowest-index recurrent state) of the chain `p`.
///
/// The class block is closed, so its stationary vector solves
/// `ξᵀ(I - P_c) = 0, Σξ = 1`, which has a unique solution for an irreducible
/// block whether or not it is periodic. That vector is also the Cesàro limit
/// of the visit frequencies.
pub fn stationary_distribution(p: &Matrix, class: Option<usize>) -> Result<StationaryWeights> {
    let classes = recurrent_classes_of(p);
    let count = classes
        .iter()
        .filter_map(|c| match c {
            StateClass::Recurrent(id) => Some(id + 1),
            StateClass::Transient => None,
        })
        .max()
        .unwrap_or(0);
    let class = class.unwrap_or(0);
    if class >= count {
        return Err(LstdError::InvalidArgument(format!(
            "recurrent class {class} requested, chain has {count}"
        )));
    }
    let members: Vec<usize> = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == StateClass::Recurrent(class))
        .map(|(i, _)| i)
        .collect();
    let m = members.len();
    // (I - P_c)ᵀ with the last equation replaced by the normalization.
    let mut system = Matrix::zeros(m, m);
    for (a, &i) in members.iter().enumerate() {
        for (b, &j) in members.iter().enumerate() {
            let identity = if a == b { 1.0 } else { 0.0 };
            system[(b, a)] = identity - p[(i, j)];
        }
    }
    for a in 0..m {
        system[(m - 1, a)] = 1.0;
    }
    let mut rhs = Vector::zeros(m);
    rhs[m - 1] = 1.0;
    let (local, _) = solve_vec(&system, &rhs, Singularity::System)
        .map_err(|e| LstdError::Numeric(format!("stationary solve failed: {e}")))?;

    let mut weights = Vector::zeros(p.nrows());
    for (a, &i) in members.iter().enumerate() {
        weights[i] = local[a].max(0.0);
    }
    let total = weights.sum();
    weights /= total;
    Ok(StationaryWeights { weights, classes, class })
}

pub fn stationary_weights(mrp: &Mrp, class: Option<usize>) -> Result<StationaryWeights> {
    stationary_distribution(mrp.transition(), class)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, data.len() / rows, data)
    }

    /// Power iteration on the lazy chain `(I + P)/2` restricted to the
    /// states of `members`; the lazy chain shares the stationary vector and
    /// is aperiodic, so plain iteration converges.
    fn power_iteration(p: &Matrix, members: &[usize]) -> Vector {
        let n = p.nrows();
        let mut x = Vector::zeros(n);
        for &i in members {
            x[i] = 1.0 / members.len() as f64;
        }
        let lazy = (Matrix::identity(n, n) + p) * 0.5;
        for _ in 0..20_000 {
            let next = lazy.tr_mul(&x);
            if (&next - &x).amax() < 1e-15 {
                return next;
            }
            x = next;
        }
        x
    }

    #[test]
    fn classes_of_small_chains() {
        let c = recurrent_classes_of(&m(2, &[0.5, 0.5, 0.5, 0.5]));
        assert_eq!(c, vec![StateClass::Recurrent(0); 2]);
        let c = recurrent_classes_of(&m(2, &[0.9, 0.1, 0.0, 1.0]));
        assert_eq!(c, vec![StateClass::Transient, StateClass::Recurrent(0)]);
        let c = recurrent_classes_of(&Matrix::identity(3, 3));
        assert_eq!(
            c,
            vec![StateClass::Recurrent(0), StateClass::Recurrent(1), StateClass::Recurrent(2)]
        );
    }

    #[test]
    fn symmetric_and_periodic_chains() {
        let w = stationary_distribution(&m(2, &[0.5, 0.5, 0.5, 0.5]), None).unwrap();
        assert!((w.weights() - Vector::from_vec(vec![0.5, 0.5])).amax() < 1e-15);
        let w = stationary_distribution(&m(2, &[0.0, 1.0, 1.0, 0.0]), None).unwrap();
        assert!((w.weights() - Vector::from_vec(vec![0.5, 0.5])).amax() < 1e-15);
    }

    #[test]
    fn transient_state_gets_zero_weight() {
        let p = m(3, &[0.9, 0.1, 0.0, 0.0, 0.5, 0.5, 0.0, 0.5, 0.5]);
        let oracle = power_iteration(&p, &[1, 2]);
        assert!((oracle[1] - 0.5).abs() < 1e-12 && (oracle[2] - 0.5).abs() < 1e-12);
        let w = stationary_distribution(&p, None).unwrap();
        assert_eq!(w.weights()[0], 0.0);
        assert!((w.weights() - &oracle).amax() < 1e-12);
        assert_eq!(w.classes()[0], StateClass::Transient);
    }

    #[test]
    fn class_selector_picks_support() {
        let p = Matrix::identity(3, 3);
        let w = stationary_distribution(&p, Some(2)).unwrap();
        assert_eq!(w.weights().as_slice(), &[0.0, 0.0, 1.0]);
        assert!(stationary_distribution(&p, Some(3)).is_err());
    }

    #[test]
    fn user_weights_are_validated() {
        let p = Matrix::identity(2, 2);
        assert!(StationaryWeights::from_vector(Vector::from_vec(vec![0.3, 0.7]), &p).is_ok());
        let q = m(2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(StationaryWeights::from_vector(Vector::from_vec(vec![0.3, 0.7]), &q).is_err());
    }
}
