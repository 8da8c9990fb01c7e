//! Branch-and-bound over binary variables on top of the bounded simplex.
//!
//! Node selection is best-bound with plunging: after branching, the search
//! keeps diving into the LP-suggested child (warm-started — it differs from
//! its parent by one bound, so the parent basis is a few pivots away),
//! backtracking through the banked siblings when a dive dead-ends, and only
//! returns to the global best-bound heap when the whole dive is exhausted.
//! Plunging is what actually finds incumbents: pure best-bound expands an
//! exponential frontier before reaching any integer-feasible leaf. Heap pops
//! reuse the current basis too (any basis is a valid phase-1 start), with a
//! periodic cold solve to flush accumulated tableau drift. Branching picks
//! the most fractional binary; ties and node ordering break by index, so the
//! search is deterministic. Nodes whose relaxation cannot beat the incumbent
//! by more than the gap tolerance are pruned, and the weakest such discarded
//! bound is what the final gap is reported against.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::model::{
    Certificate, ObjSense, OptModel, SolveResult, SolveStatus, VarKind,
};
use crate::simplex::{
    violated_empty_row, RawOutcome, SimplexOptions, SolveError, Workspace,
};

/// Options for [`solve_mip`]. Defaults: 3600 s time limit, 1% relative gap,
/// integrality tolerance `1e-6`. Set `gap_tol` to ~1e-9 to force proven
/// optimality.
#[derive(Debug, Clone)]
pub struct BBOptions {
    pub time_limit_s: f64,
    /// Relative optimality gap at which the search may stop early.
    pub gap_tol: f64,
    /// How far from 0/1 a binary may sit and still count as integral.
    pub int_tol: f64,
    pub simplex: SimplexOptions,
}

impl Default for BBOptions {
    fn default() -> Self {
        BBOptions {
            time_limit_s: 3600.0,
            gap_tol: 0.01,
            int_tol: 1e-6,
            simplex: SimplexOptions::default(),
        }
    }
}

/// Per-binary branching state.
const FREE: u8 = 0;
const FIX0: u8 = 1;
const FIX1: u8 = 2;

struct Node {
    fixes: Vec<u8>,
    /// Parent relaxation value, internal minimize form (a valid bound).
    bound: f64,
    id: u64,
}

/// Max-heap adapter: "greatest" = smallest bound, then smallest id.
struct HeapNode(Node);

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.0.bound == other.0.bound && self.0.id == other.0.id
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

struct Incumbent {
    /// Internal minimize-form objective.
    obj: f64,
    /// Structural values, binaries snapped to exact 0/1.
    values: Vec<f64>,
}

/// Solves a mixed binary-continuous model by LP-based branch-and-bound.
/// Models without binaries collapse to a single LP solve.
pub fn solve_mip(model: &OptModel, opts: &BBOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    model.validate()?;

    if let Some((name, residual)) = violated_empty_row(model) {
        return Ok(finish(
            model,
            None,
            f64::INFINITY,
            SolveStatus::Infeasible,
            Some(Certificate::InfeasibleResidual(residual)),
            vec![format!("empty row '{name}' is infeasible")],
            0,
            0,
            start,
        ));
    }

    let deadline = if opts.time_limit_s.is_finite() {
        Some(start + Duration::from_secs_f64(opts.time_limit_s.max(0.0)))
    } else {
        None
    };

    let binaries: Vec<usize> = model
        .vars()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(id, _)| id.index())
        .collect();
    let orig_bounds: Vec<(f64, f64)> = binaries
        .iter()
        .map(|&j| {
            let v = model.var(crate::model::VarId(j));
            (v.lower, v.upper)
        })
        .collect();

    let mut ws = Workspace::new(model);
    let mut nodes_evaluated: u64 = 0;
    let mut next_id: u64 = 1;
    let mut incumbent: Option<Incumbent> = None;
    let mut heap: BinaryHeap<HeapNode> = BinaryHeap::new();
    let mut discarded_min = f64::INFINITY;
    let mut notes: Vec<String> = Vec::new();

    // (node, warm) pairs; the root is a cold solve.
    let mut pending: Option<(Node, bool)> = Some((
        Node {
            fixes: vec![FREE; binaries.len()],
            bound: f64::NEG_INFINITY,
            id: 0,
        },
        false,
    ));
    // Banked siblings of the current dive, deepest last.
    let mut dive: Vec<Node> = Vec::new();
    // Consecutive infeasible nodes since the last feasible relaxation.
    let mut dead_streak: u32 = 0;

    let timed_out = 'search: loop {
        let (node, warm) = match pending.take() {
            Some(nw) => nw,
            None => match dive.pop() {
                Some(n) => (n, true),
                None => match heap.pop() {
                    Some(HeapNode(n)) => (n, true),
                    None => break 'search false,
                },
            },
        };
        if let Some(dl) = deadline {
            if Instant::now() >= dl {
                // Put the node back so its bound counts as open.
                heap.push(HeapNode(node));
                break 'search true;
            }
        }
        // Prune against the incumbent before spending an LP on it.
        if let Some(inc) = &incumbent {
            if cannot_improve(node.bound, inc.obj, model, opts) {
                if node.bound < inc.obj {
                    discarded_min = discarded_min.min(node.bound);
                }
                continue;
            }
        }

        // Apply this node's branching state. A warm dive child differs from
        // what the workspace already holds by a single bound, but setting
        // the full vector is cheap and keeps cold pops identical.
        for (k, &j) in binaries.iter().enumerate() {
            let (lo, hi) = match node.fixes[k] {
                FIX0 => (0.0, 0.0),
                FIX1 => (1.0, 1.0),
                _ => orig_bounds[k],
            };
            ws.set_var_bounds(j, lo, hi);
        }

        // Every 64th node resolves cold: long warm chains on a dense tableau
        // accumulate roundoff that a fresh factorization clears.
        let outcome = ws.solve(warm && nodes_evaluated % 64 != 0, &opts.simplex, deadline);
        nodes_evaluated += 1;

        match outcome {
            RawOutcome::Infeasible { .. } => {
                // Fixing binaries out of dependency order can doom whole
                // subtrees (common in layered embeddings); once a dive keeps
                // dying, hand its banked siblings to the heap and move on.
                dead_streak += 1;
                if dead_streak >= 16 {
                    for n in dive.drain(..) {
                        heap.push(HeapNode(n));
                    }
                    dead_streak = 0;
                }
                continue;
            }
            RawOutcome::Unbounded { ray } => {
                // Binaries are boxed, so the ray lives entirely in the
                // continuous part and survives any integral fixing.
                notes.push("a node relaxation is unbounded".to_string());
                let named = ray
                    .iter()
                    .map(|&(j, d)| (col_name(model, &ws, j), d))
                    .collect();
                return Ok(finish(
                    model,
                    None,
                    f64::NEG_INFINITY,
                    SolveStatus::Unbounded,
                    Some(Certificate::UnboundedRay(named)),
                    notes,
                    nodes_evaluated,
                    ws.iterations,
                    start,
                ));
            }
            RawOutcome::IterationLimit => {
                notes.push("iteration limit reached".to_string());
                heap.push(HeapNode(node));
                break 'search true;
            }
            RawOutcome::Deadline => {
                heap.push(HeapNode(node));
                break 'search true;
            }
            RawOutcome::Optimal => {
                dead_streak = 0;
            }
        }

        let bound = ws.raw_objective();
        if let Some(inc) = &incumbent {
            if cannot_improve(bound, inc.obj, model, opts) {
                if bound < inc.obj {
                    discarded_min = discarded_min.min(bound);
                }
                continue;
            }
        }

        // Most-fractional binary, ties by lowest index.
        let mut branch: Option<(usize, f64)> = None;
        for (k, &j) in binaries.iter().enumerate() {
            if node.fixes[k] != FREE {
                continue;
            }
            let v = ws.value_of(j);
            let dist = (v - v.round()).abs();
            if dist > opts.int_tol && branch.as_ref().map_or(true, |&(_, d)| dist > d) {
                branch = Some((k, dist));
            }
        }

        let Some((k, _)) = branch else {
            // Integer feasible: candidate incumbent.
            if incumbent.as_ref().map_or(true, |inc| bound < inc.obj - 1e-12) {
                incumbent = Some(snapshot_incumbent(&ws, model, bound));
            }
            continue;
        };

        let toward_one = ws.value_of(binaries[k]) >= 0.5;

        // One shot of sequential rounding from the root relaxation. Pure
        // best-bound never completes an assignment on larger models, and
        // most-fractional dives can wander; rounding binaries in creation
        // order follows the constraints' dependency structure instead and
        // gives the search an incumbent to prune against from node one.
        if node.id == 0 {
            if let Some(inc) = sequential_rounding(&mut ws, model, &binaries, opts, deadline) {
                if incumbent.as_ref().map_or(true, |cur| inc.obj < cur.obj - 1e-12) {
                    incumbent = Some(inc);
                }
            }
            if let Some(inc) = &incumbent {
                if cannot_improve(bound, inc.obj, model, opts) {
                    if bound < inc.obj {
                        discarded_min = discarded_min.min(bound);
                    }
                    continue;
                }
            }
        }
        let mut near = node.fixes.clone();
        near[k] = if toward_one { FIX1 } else { FIX0 };
        let mut far = node.fixes;
        far[k] = if toward_one { FIX0 } else { FIX1 };
        let near_node = Node {
            fixes: near,
            bound,
            id: next_id,
        };
        let far_node = Node {
            fixes: far,
            bound,
            id: next_id + 1,
        };
        next_id += 2;

        // Plunge into the LP-suggested side, bank the other for backtracking.
        dive.push(far_node);
        pending = Some((near_node, true));
    };

    // Timeout can leave banked siblings behind; they are open nodes and must
    // count toward the proven bound.
    for n in dive {
        heap.push(HeapNode(n));
    }

    // Global bound: incumbent vs everything still open or gap-discarded.
    let mut open_min = discarded_min;
    if let Some(HeapNode(n)) = heap.peek() {
        open_min = open_min.min(n.bound);
    }
    // Heap is ordered by bound, so peek is the heap minimum; pending is
    // always consumed before this point.
    let bound_int = match &incumbent {
        Some(inc) => inc.obj.min(open_min),
        None => open_min,
    };

    let (status, certificate) = if timed_out {
        notes.push("time limit reached".to_string());
        (SolveStatus::TimeLimit, None)
    } else if incumbent.is_none() {
        (SolveStatus::Infeasible, None)
    } else {
        (SolveStatus::Optimal, None) // refined against the gap below
    };

    Ok(finish_with_gap(
        model,
        incumbent,
        bound_int,
        status,
        certificate,
        notes,
        nodes_evaluated,
        ws.iterations,
        start,
    ))
}

/// Captures the workspace's current (integral) solution as an incumbent,
/// binaries snapped to exact 0/1 and continuous values clamped to bounds.
fn snapshot_incumbent(ws: &Workspace, model: &OptModel, obj: f64) -> Incumbent {
    let values = (0..ws.num_struct())
        .map(|j| {
            let v = model.var(crate::model::VarId(j));
            let raw = ws.value_of(j).clamp(v.lower, v.upper);
            if v.kind == VarKind::Binary {
                raw.round()
            } else {
                raw
            }
        })
        .collect();
    Incumbent { obj, values }
}

/// Primal heuristic: starting from the relaxation currently held in `ws`
/// (assumed optimal), repeatedly fix the lowest-indexed fractional binary to
/// its LP-suggested side — flipping once if that side is infeasible — and
/// re-solve until every binary is integral or the attempt dead-ends.
///
/// Creation order is dependency order in layered models (an embedding's
/// binaries appear input-side first), so each fix constrains only values the
/// earlier fixes already pinned down; in practice this walks straight to an
/// integer-feasible point. The workspace's variable bounds are left dirty;
/// callers reset bounds per node anyway.
fn sequential_rounding(
    ws: &mut Workspace,
    model: &OptModel,
    binaries: &[usize],
    opts: &BBOptions,
    deadline: Option<Instant>,
) -> Option<Incumbent> {
    loop {
        let mut pick: Option<(usize, f64)> = None;
        for &j in binaries {
            let v = ws.value_of(j);
            if (v - v.round()).abs() > opts.int_tol {
                pick = Some((j, v));
                break;
            }
        }
        let Some((j, v)) = pick else {
            return Some(snapshot_incumbent(ws, model, ws.raw_objective()));
        };
        let side = if v >= 0.5 { 1.0 } else { 0.0 };
        ws.set_var_bounds(j, side, side);
        match ws.solve(true, &opts.simplex, deadline) {
            RawOutcome::Optimal => continue,
            RawOutcome::Infeasible { .. } => {
                let flip = 1.0 - side;
                ws.set_var_bounds(j, flip, flip);
                match ws.solve(true, &opts.simplex, deadline) {
                    RawOutcome::Optimal => continue,
                    _ => return None,
                }
            }
            _ => return None,
        }
    }
}

/// True when the node bound cannot improve on the incumbent by more than the
/// gap tolerance (both arguments in internal minimize form).
fn cannot_improve(bound: f64, inc_obj: f64, model: &OptModel, opts: &BBOptions) -> bool {
    let sign = sense_sign(model);
    let inc_user = sign * inc_obj + model.objective_constant();
    let slack = opts.gap_tol * inc_user.abs().max(1e-9);
    inc_obj - bound <= slack
}

fn sense_sign(model: &OptModel) -> f64 {
    if model.sense() == ObjSense::Minimize {
        1.0
    } else {
        -1.0
    }
}

fn col_name(model: &OptModel, ws: &Workspace, j: usize) -> String {
    if j < ws.num_struct() {
        model.var(crate::model::VarId(j)).name.clone()
    } else {
        format!(
            "row:{}",
            model.con(crate::model::ConId(j - ws.num_struct())).name
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    model: &OptModel,
    incumbent: Option<Incumbent>,
    bound_int: f64,
    status: SolveStatus,
    certificate: Option<Certificate>,
    notes: Vec<String>,
    bb_nodes: u64,
    simplex_iterations: u64,
    start: Instant,
) -> SolveResult {
    let sign = sense_sign(model);
    let constant = model.objective_constant();
    let (objective, primal) = match &incumbent {
        Some(inc) => {
            let mut primal = std::collections::BTreeMap::new();
            for (id, v) in model.vars() {
                primal.insert(v.name.clone(), inc.values[id.index()]);
            }
            (sign * inc.obj + constant, primal)
        }
        None => {
            let obj = match status {
                SolveStatus::Unbounded => sign * f64::NEG_INFINITY,
                _ => sign * f64::INFINITY,
            };
            (obj, Default::default())
        }
    };
    let best_bound = if bound_int.is_finite() {
        sign * bound_int + constant
    } else if incumbent.is_some() && bound_int == f64::INFINITY {
        // No open node and nothing discarded: the incumbent is the bound.
        objective
    } else {
        sign * bound_int
    };
    let gap = match status {
        SolveStatus::Optimal | SolveStatus::GapReached => {
            SolveResult::relative_gap(objective, best_bound)
        }
        _ => f64::INFINITY,
    };
    SolveResult {
        status,
        objective,
        best_bound,
        gap,
        primal,
        simplex_iterations,
        bb_nodes,
        wall_time_s: start.elapsed().as_secs_f64(),
        certificate,
        notes,
    }
}

/// Like [`finish`], but refines an Optimal claim into GapReached when the
/// proven bound is meaningfully short of the incumbent.
#[allow(clippy::too_many_arguments)]
fn finish_with_gap(
    model: &OptModel,
    incumbent: Option<Incumbent>,
    bound_int: f64,
    status: SolveStatus,
    certificate: Option<Certificate>,
    notes: Vec<String>,
    bb_nodes: u64,
    simplex_iterations: u64,
    start: Instant,
) -> SolveResult {
    let mut res = finish(
        model,
        incumbent,
        bound_int,
        status,
        certificate,
        notes,
        bb_nodes,
        simplex_iterations,
        start,
    );
    if res.status == SolveStatus::Optimal {
        res.gap = SolveResult::relative_gap(res.objective, res.best_bound);
        if res.gap > 1e-9 {
            res.status = SolveStatus::GapReached;
        }
    } else if res.status == SolveStatus::TimeLimit && !res.primal.is_empty() {
        // An incumbent plus an honest bound still defines a gap.
        res.gap = SolveResult::relative_gap(res.objective, res.best_bound);
    }
    res
}
