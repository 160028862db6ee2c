//! Constrained minimization of an indefinite quadratic over a product of
//! balls.
//!
//! The quadratic is diagonalized, `v = D' mu`. Each concave term
//! `theta_l v_l^2` (`theta_l < 0`) is replaced on its range `[lo_l, hi_l]`
//! by the piecewise-linear interpolant on `m` uniform segments, which
//! underestimates it. The resulting mixed-binary program (one segment
//! selector per concave coordinate) is solved by branch-and-bound over
//! segment ranges. Every node is a convex QP with the chord of its range.

mod constraints;
mod qp;
mod relax;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::debug;
use nalgebra::DVector;

pub use constraints::{bound_box_for_v, stability_ball, stability_residual, BallConstraint, ConstraintSet};
pub use relax::{
    build_relaxation, diagonalize, diagonalize_form, DiagonalizedProblem, PiecewiseGrid, RelaxedInstance,
};

use crate::error::{Error, Result};
use crate::qfp::{InnerSolution, InnerSolver, ParametricQfp, QuadraticForm};
use qp::{NodeQp, QpOutcome};
use relax::chord;

/// Default number of segments per concave coordinate.
pub const DEFAULT_SEGMENTS: usize = 16;
/// Default stability margin.
pub const DEFAULT_EPS3: f64 = 0.001;
/// Default cap on explored branch-and-bound nodes.
pub const DEFAULT_NODE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    pub node_limit: usize,
    /// Stop as soon as the sign of the optimum relative to `±sign_tol` is
    /// certain, or the bound gap drops below `sign_tol / 10`.
    pub sign_tol: Option<f64>,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            node_limit: DEFAULT_NODE_LIMIT,
            sign_tol: None,
        }
    }
}

/// Solution of the relaxed program.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    /// Relaxation minimizer in `v` and `mu = D v`.
    pub v: DVector<f64>,
    pub mu: DVector<f64>,
    /// Lambda weights and selected segment of each concave coordinate.
    pub zeta: Vec<Vec<f64>>,
    pub nu: Vec<usize>,
    /// Relaxed objective at `v` (the relaxation optimum on completion).
    pub relaxed_value: f64,
    /// Best exact objective among all node solutions, and its point.
    pub best_value: f64,
    pub best_mu: DVector<f64>,
    /// Lowest outstanding node bound when the search stopped.
    pub lower_bound: f64,
    pub nodes: usize,
    /// True when the search stopped on a sign certificate.
    pub early_exit: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    lb: f64,
    ranges: Vec<(usize, usize)>,
    v: DVector<f64>,
}

impl Eq for Node {}

impl Ord for Node {
    // Max-heap order: the smallest bound (then the lexicographically smallest
    // segment pattern) comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb).then_with(|| other.ranges.cmp(&self.ranges))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Tree<'a> {
    inst: &'a RelaxedInstance,
    qp: NodeQp,
}

impl Tree<'_> {
    /// Node QP with the chord over each concave range.
    fn solve_node(&self, ranges: &[(usize, usize)]) -> Result<Option<Node>> {
        let dp = &self.inst.dp;
        let grid = &self.inst.grid;
        let n = dp.dim();
        let mut quad = vec![0.0; n];
        let mut lin = dp.theta2.clone();
        let mut constant = dp.theta3;
        let mut boxes = Vec::with_capacity(dp.t);
        for (l, &(s0, s1)) in ranges.iter().enumerate() {
            let (a, b) = (grid.breakpoint(l, s0), grid.breakpoint(l, s1 + 1));
            let (k, c) = chord(dp.theta1[l], a, b);
            lin[l] += k;
            constant += c;
            boxes.push((l, a, b));
        }
        for (l, q) in quad.iter_mut().enumerate().skip(dp.t) {
            *q = dp.theta1[l];
        }
        match self.qp.solve(&quad, &lin, &boxes)? {
            QpOutcome::Infeasible => Ok(None),
            QpOutcome::Solved(v) => {
                let lb = (0..n).map(|l| quad[l].max(0.0) * v[l] * v[l]).sum::<f64>() + lin.dot(&v) + constant;
                Ok(Some(Node {
                    lb,
                    ranges: ranges.to_vec(),
                    v,
                }))
            }
        }
    }

    /// Concave coordinate with the largest gap between the interpolant and
    /// the node chord at the node solution.
    fn branch_coordinate(&self, node: &Node) -> Option<(usize, f64)> {
        let dp = &self.inst.dp;
        let grid = &self.inst.grid;
        let mut best: Option<(usize, f64)> = None;
        for (l, &(s0, s1)) in node.ranges.iter().enumerate() {
            if s0 == s1 {
                continue;
            }
            let x = node.v[l];
            let s = grid.segment_of(l, x).clamp(s0, s1);
            let (kp, cp) = chord(dp.theta1[l], grid.breakpoint(l, s), grid.breakpoint(l, s + 1));
            let (kn, cn) = chord(dp.theta1[l], grid.breakpoint(l, s0), grid.breakpoint(l, s1 + 1));
            let gap = (kp * x + cp) - (kn * x + cn);
            if best.is_none_or(|(_, g)| gap > g) {
                best = Some((l, gap));
            }
        }
        best
    }
}

/// Global minimum of the relaxation over the constraint set.
pub fn solve_relaxed(inst: &RelaxedInstance, set: &ConstraintSet, opts: BnbOptions) -> Result<RelaxedSolution> {
    let dp = &inst.dp;
    if set.dim() != dp.dim() {
        return Err(Error::dim("constraint set and problem differ in dimension"));
    }
    let tree = Tree {
        inst,
        qp: NodeQp::new(set, &dp.d)?,
    };
    let m = inst.grid.m;
    let root_ranges = vec![(0, m - 1); dp.t];
    let root = tree
        .solve_node(&root_ranges)?
        .ok_or_else(|| Error::Infeasible("constraint set is empty".into()))?;

    let scale = 1.0 + dp.theta3.abs() + dp.theta2.amax() + dp.theta1.amax();
    let resolve_tol = 1e-12 * scale;

    let mut heap = BinaryHeap::new();
    heap.push(root);
    let mut nodes = 1usize;
    let mut incumbent: Option<(f64, DVector<f64>)> = None;
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut early_exit = false;

    while let Some(node) = heap.pop() {
        lower_bound = node.lb;
        let ub = incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
        if node.lb >= ub - resolve_tol {
            lower_bound = ub;
            heap.clear();
            break;
        }
        // Exact and relaxed values at a feasible point.
        let mut mu = dp.to_mu(&node.v);
        set.pull_inside(&mut mu);
        let v = dp.to_v(&mu);
        let f_true = dp.eval(&v);
        if best.as_ref().is_none_or(|b| f_true < b.0) {
            best = Some((f_true, mu.clone()));
        }
        let f_relax = inst.eval(&v);
        if incumbent.as_ref().is_none_or(|i| f_relax < i.0) {
            incumbent = Some((f_relax, v.clone()));
        }
        if let Some(tol) = opts.sign_tol {
            let ub = incumbent.as_ref().map_or(f64::INFINITY, |i| i.0);
            let best_true = best.as_ref().map_or(f64::INFINITY, |b| b.0);
            if node.lb > tol || best_true < -tol || ub - node.lb <= 0.1 * tol {
                early_exit = true;
                break;
            }
        }
        match tree.branch_coordinate(&node) {
            Some((l, gap)) if gap > resolve_tol => {
                let (s0, s1) = node.ranges[l];
                let mid = (s0 + s1) / 2;
                for half in [(s0, mid), (mid + 1, s1)] {
                    let mut ranges = node.ranges.clone();
                    ranges[l] = half;
                    nodes += 1;
                    if nodes > opts.node_limit {
                        return Err(Error::NodeLimit(opts.node_limit));
                    }
                    if let Some(child) = tree.solve_node(&ranges)? {
                        heap.push(child);
                    }
                }
            }
            _ => {}
        }
    }
    if heap.is_empty() && !early_exit {
        lower_bound = lower_bound.min(incumbent.as_ref().map_or(lower_bound, |i| i.0));
    }
    let (relaxed_value, v) = incumbent.ok_or_else(|| Error::Infeasible("no feasible node".into()))?;
    let (best_value, best_mu) = best.expect("best is set together with the incumbent");
    let nu = (0..dp.t).map(|l| inst.grid.segment_of(l, v[l])).collect();
    debug!("branch-and-bound: {nodes} nodes, relaxed optimum {relaxed_value}");
    Ok(RelaxedSolution {
        mu: dp.to_mu(&v),
        zeta: inst.zeta_for(&v),
        nu,
        v,
        relaxed_value,
        best_value,
        best_mu,
        lower_bound,
        nodes,
        early_exit,
    })
}

/// Builds the relaxation of a quadratic form over a constraint set with `m`
/// segments per concave coordinate.
pub fn relax_form(f: &QuadraticForm, set: &ConstraintSet, m: usize) -> Result<RelaxedInstance> {
    let dp = diagonalize_form(f);
    let boxes = bound_box_for_v(set, &dp.d)?;
    let grid = PiecewiseGrid::new(boxes[..dp.t].to_vec(), m)?;
    build_relaxation(dp, grid)
}

/// `M(gamma)` over a constraint set via the relaxation. The reported value
/// and minimizer are the best exact objective found.
#[derive(Debug, Clone)]
pub struct ConstrainedInner {
    pub set: ConstraintSet,
    pub m: usize,
    pub node_limit: usize,
}

impl ConstrainedInner {
    pub fn new(set: ConstraintSet, m: usize) -> Self {
        ConstrainedInner {
            set,
            m,
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

impl InnerSolver for ConstrainedInner {
    fn solve(&self, p: &ParametricQfp, gamma: f64, sign_tol: Option<f64>) -> Result<InnerSolution> {
        let inst = relax_form(&p.parametrized(gamma), &self.set, self.m)?;
        let sol = solve_relaxed(
            &inst,
            &self.set,
            BnbOptions {
                node_limit: self.node_limit,
                sign_tol,
            },
        )?;
        // best_value >= M(gamma), and on a sign certificate it carries the sign
        Ok(InnerSolution::Bounded {
            value: sol.best_value,
            minimizer: sol.best_mu,
        })
    }
}
