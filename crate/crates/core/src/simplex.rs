//! Bounded-variable two-phase primal simplex.
//!
//! Solves `min cᵀx` subject to sparse rows `Ax {≤,=,≥} b` and per-variable
//! bounds `l ≤ x ≤ u` (either side may be infinite; `l = u` fixes a
//! variable). Maximize models are negated on entry and the sign restored in
//! the result. Bounds are handled implicitly — they never enlarge the basis.
//!
//! Internals, in brief: every row gets a logical column (slack with sense-
//! appropriate bounds), so a basis always exists and the cold start is the
//! identity. Phase 1 minimizes the total bound violation of the basic
//! variables (a composite objective that needs no artificial columns and
//! works from *any* starting basis, which is what makes warm starts in
//! branch-and-bound cheap). Phase 2 is ordinary bounded-variable pricing
//! with bound flips. Pricing is Dantzig's rule, switching to Bland's rule
//! after a run of degenerate pivots to break cycles. The basis inverse is
//! kept explicitly, column-major, updated in product form; values are
//! refreshed periodically and the solve restarts from the identity basis if
//! drift is ever detected.
//!
//! Determinism: identical model and options produce the identical pivot
//! sequence, iteration count, and primal values. All ties break by lowest
//! index.

use std::time::Instant;

use thiserror::Error;

use crate::model::{
    Certificate, ModelError, ObjSense, OptModel, Sense, SolveResult, SolveStatus, VarKind,
};

/// Options for [`solve_lp`]. Defaults: feasibility and optimality tolerances
/// `1e-7`, iteration limit `1_000_000`, Bland's rule after `1000` consecutive
/// degenerate pivots.
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iterations: u64,
    /// Consecutive degenerate pivots tolerated before anti-cycling (Bland's
    /// rule) engages.
    pub stall_threshold: u64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            max_iterations: 1_000_000,
            stall_threshold: 1000,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("binary variable '{0}' in an LP solve; relax it or use the MIP solver")]
    BinaryInLp(String),
}

/// Entries smaller than this never serve as pivots.
const PIVOT_TOL: f64 = 1e-9;
/// A step shorter than this counts as a degenerate pivot.
const DEGEN_STEP: f64 = 1e-12;
/// Iterations between value refreshes / drift checks.
const REFRESH_EVERY: u64 = 256;
/// Deadline polls happen every this many iterations.
const DEADLINE_POLL: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(u32),
    AtLower,
    AtUpper,
    /// Nonbasic with both bounds infinite; rests at zero.
    Free,
}

/// Outcome of a raw workspace solve, in internal minimize form.
#[derive(Debug, Clone)]
pub(crate) enum RawOutcome {
    Optimal,
    Infeasible {
        residual: f64,
    },
    /// Improving ray: (column, direction) pairs, entering column first.
    Unbounded {
        ray: Vec<(usize, f64)>,
    },
    IterationLimit,
    Deadline,
}

/// One simplex instance over a fixed constraint matrix. Bounds may be edited
/// between solves (that is how branch-and-bound drives it); the matrix may
/// not. Lives in this module so the pivoting internals stay private.
pub(crate) struct Workspace {
    m: usize,
    n_struct: usize,
    /// Total columns: structural then logical.
    n: usize,
    /// Sparse columns; logical column for row i is a single (i, 1.0).
    cols: Vec<Vec<(u32, f64)>>,
    pub(crate) lower: Vec<f64>,
    pub(crate) upper: Vec<f64>,
    /// Internal (minimize-form) costs, logicals zero.
    cost: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<u32>,
    state: Vec<VarState>,
    x: Vec<f64>,
    /// Column-major basis inverse: `binv[j*m + i] = B⁻¹[i][j]`.
    binv: Vec<f64>,
    pub(crate) iterations: u64,
    // scratch buffers, allocated once
    ftran: Vec<f64>,
    duals: Vec<f64>,
    cb: Vec<f64>,
}

impl Workspace {
    /// Builds a workspace from a validated model. Binary variables are
    /// treated as continuous within their current bounds (the MIP solver
    /// tightens them); [`solve_lp`] rejects them before getting here.
    pub(crate) fn new(model: &OptModel) -> Workspace {
        let m = model.num_cons();
        let n_struct = model.num_vars();
        let n = n_struct + m;
        let minimize = model.sense() == ObjSense::Minimize;

        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (row, con) in model.cons().enumerate() {
            for &(j, coeff) in &con.terms {
                if coeff != 0.0 {
                    cols[j].push((row as u32, coeff));
                }
            }
            cols[n_struct + row].push((row as u32, 1.0));
        }

        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut cost = vec![0.0; n];
        for (id, v) in model.vars() {
            lower.push(v.lower);
            upper.push(v.upper);
            let c = model.objective_coeff(id);
            cost[id.index()] = if minimize { c } else { -c };
        }
        let mut rhs = Vec::with_capacity(m);
        for con in model.cons() {
            rhs.push(con.rhs);
            let (lo, hi) = match con.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lower.push(lo);
            upper.push(hi);
        }

        let mut ws = Workspace {
            m,
            n_struct,
            n,
            cols,
            lower,
            upper,
            cost,
            rhs,
            basis: Vec::new(),
            state: vec![VarState::Free; n],
            x: vec![0.0; n],
            binv: Vec::new(),
            iterations: 0,
            ftran: vec![0.0; m],
            duals: vec![0.0; m],
            cb: vec![0.0; m],
        };
        ws.reset_basis();
        ws
    }

    pub(crate) fn num_struct(&self) -> usize {
        self.n_struct
    }

    pub(crate) fn value_of(&self, j: usize) -> f64 {
        self.x[j]
    }

    /// Internal minimize-form objective over structural columns.
    pub(crate) fn raw_objective(&self) -> f64 {
        (0..self.n_struct).map(|j| self.cost[j] * self.x[j]).sum()
    }

    pub(crate) fn set_var_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        debug_assert!(j < self.n_struct && lo <= hi);
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    /// Cold start: logical basis (identity inverse), structurals at the
    /// finite bound nearest zero.
    fn reset_basis(&mut self) {
        self.basis = (0..self.m).map(|i| (self.n_struct + i) as u32).collect();
        self.binv = vec![0.0; self.m * self.m];
        for i in 0..self.m {
            self.binv[i * self.m + i] = 1.0;
        }
        for j in 0..self.n {
            self.state[j] = self.initial_state(j);
        }
        for i in 0..self.m {
            self.state[self.n_struct + i] = VarState::Basic(i as u32);
        }
        self.snap_nonbasics();
    }

    fn initial_state(&self, j: usize) -> VarState {
        let (l, u) = (self.lower[j], self.upper[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if l.abs() <= u.abs() {
                    VarState::AtLower
                } else {
                    VarState::AtUpper
                }
            }
            (true, false) => VarState::AtLower,
            (false, true) => VarState::AtUpper,
            (false, false) => VarState::Free,
        }
    }

    /// Re-pins every nonbasic variable to the bound its state names; heals
    /// states invalidated by bound edits.
    fn snap_nonbasics(&mut self) {
        for j in 0..self.n {
            match self.state[j] {
                VarState::Basic(_) => {}
                VarState::AtLower if self.lower[j].is_finite() => self.x[j] = self.lower[j],
                VarState::AtUpper if self.upper[j].is_finite() => self.x[j] = self.upper[j],
                VarState::Free
                    if !self.lower[j].is_finite() && !self.upper[j].is_finite() =>
                {
                    self.x[j] = 0.0
                }
                _ => {
                    self.state[j] = self.initial_state(j);
                    self.x[j] = match self.state[j] {
                        VarState::AtLower => self.lower[j],
                        VarState::AtUpper => self.upper[j],
                        _ => 0.0,
                    };
                }
            }
        }
    }

    /// `b − N x_N` over nonbasic columns with nonzero values.
    fn effective_rhs(&self) -> Vec<f64> {
        let mut beff = self.rhs.clone();
        for j in 0..self.n {
            if !matches!(self.state[j], VarState::Basic(_)) && self.x[j] != 0.0 {
                let xj = self.x[j];
                for &(row, a) in &self.cols[j] {
                    beff[row as usize] -= a * xj;
                }
            }
        }
        beff
    }

    /// Recomputes basic values `x_B = B⁻¹ (b − N x_N)`.
    fn refresh_basics(&mut self) {
        let beff = self.effective_rhs();
        let m = self.m;
        let mut xb = vec![0.0; m];
        for (j, &bj) in beff.iter().enumerate() {
            if bj != 0.0 {
                let col = &self.binv[j * m..(j + 1) * m];
                for i in 0..m {
                    xb[i] += bj * col[i];
                }
            }
        }
        for i in 0..m {
            self.x[self.basis[i] as usize] = xb[i];
        }
    }

    /// `‖B x_B − beff‖∞`: detects basis-inverse drift.
    fn basis_residual(&self) -> f64 {
        let beff = self.effective_rhs();
        let mut resid = beff;
        for i in 0..self.m {
            let j = self.basis[i] as usize;
            let xj = self.x[j];
            if xj != 0.0 {
                for &(row, a) in &self.cols[j] {
                    resid[row as usize] -= a * xj;
                }
            }
        }
        resid.iter().fold(0.0, |acc, r| acc.max(r.abs()))
    }

    /// `w = B⁻¹ a_q` into the ftran scratch buffer.
    fn ftran(&mut self, q: usize) {
        let m = self.m;
        self.ftran[..m].fill(0.0);
        for &(row, a) in &self.cols[q] {
            let col = &self.binv[row as usize * m..(row as usize + 1) * m];
            let w = &mut self.ftran[..m];
            for i in 0..m {
                w[i] += a * col[i];
            }
        }
    }

    /// `y = cbᵀ B⁻¹` into the duals scratch buffer.
    fn btran(&mut self) {
        let m = self.m;
        for j in 0..m {
            let col = &self.binv[j * m..(j + 1) * m];
            let mut acc = 0.0;
            for i in 0..m {
                acc += self.cb[i] * col[i];
            }
            self.duals[j] = acc;
        }
    }

    fn reduced_cost(&self, q: usize, phase1: bool) -> f64 {
        let base = if phase1 { 0.0 } else { self.cost[q] };
        let mut dot = 0.0;
        for &(row, a) in &self.cols[q] {
            dot += self.duals[row as usize] * a;
        }
        base - dot
    }

    /// Product-form update after `entering` replaces basis position `r`;
    /// `self.ftran` must hold `w = B⁻¹ a_entering`.
    fn pivot_update(&mut self, r: usize, entering: usize) {
        let m = self.m;
        let wr = self.ftran[r];
        debug_assert!(wr.abs() > PIVOT_TOL);
        for j in 0..m {
            let col = &mut self.binv[j * m..(j + 1) * m];
            let piv = col[r] / wr;
            if piv != 0.0 {
                for (i, w) in self.ftran[..m].iter().enumerate() {
                    col[i] -= w * piv;
                }
                col[r] = piv;
            }
        }
        let leaving = self.basis[r] as usize;
        self.basis[r] = entering as u32;
        self.state[entering] = VarState::Basic(r as u32);
        debug_assert!(leaving != entering);
        let _ = leaving; // caller sets the leaving variable's state
    }

    /// Runs phase 1 then phase 2 from the current (warm) or a reset (cold)
    /// basis. `opts.max_iterations` counts across both phases of this call.
    pub(crate) fn solve(
        &mut self,
        warm: bool,
        opts: &SimplexOptions,
        deadline: Option<Instant>,
    ) -> RawOutcome {
        if !warm {
            self.reset_basis();
        } else {
            self.snap_nonbasics();
        }
        self.refresh_basics();

        let budget = opts.max_iterations;
        let mut used = 0u64;
        let mut restarts = 0u8;
        loop {
            let out = self.run_phases(opts, deadline, &mut used, budget);
            // Drift check: a conclusive answer must describe the true model.
            if matches!(out, RawOutcome::Optimal | RawOutcome::Infeasible { .. }) {
                self.refresh_basics();
                if self.basis_residual() > 100.0 * opts.feas_tol && restarts < 2 {
                    restarts += 1;
                    self.reset_basis();
                    self.refresh_basics();
                    continue;
                }
            }
            return out;
        }
    }

    fn run_phases(
        &mut self,
        opts: &SimplexOptions,
        deadline: Option<Instant>,
        used: &mut u64,
        budget: u64,
    ) -> RawOutcome {
        match self.iterate(true, opts, deadline, used, budget) {
            PhaseEnd::Done => {}
            PhaseEnd::Stopped(out) => return out,
        }
        if self.total_violation(opts.feas_tol) > opts.feas_tol {
            return RawOutcome::Infeasible {
                residual: self.total_violation(opts.feas_tol),
            };
        }
        match self.iterate(false, opts, deadline, used, budget) {
            PhaseEnd::Done => RawOutcome::Optimal,
            PhaseEnd::Stopped(out) => out,
        }
    }

    fn total_violation(&self, tol: f64) -> f64 {
        let mut w = 0.0;
        for i in 0..self.m {
            let j = self.basis[i] as usize;
            let v = self.x[j];
            if v < self.lower[j] - tol {
                w += self.lower[j] - v;
            } else if v > self.upper[j] + tol {
                w += v - self.upper[j];
            }
        }
        w
    }

    /// Main pivot loop for one phase. Phase 1 minimizes total bound
    /// violation of the basics; phase 2 minimizes cost.
    fn iterate(
        &mut self,
        phase1: bool,
        opts: &SimplexOptions,
        deadline: Option<Instant>,
        used: &mut u64,
        budget: u64,
    ) -> PhaseEnd {
        let m = self.m;
        let mut bland = false;
        let mut stall: u64 = 0;

        loop {
            if phase1 && self.total_violation(opts.feas_tol) <= opts.feas_tol {
                return PhaseEnd::Done;
            }
            if *used >= budget {
                return PhaseEnd::Stopped(RawOutcome::IterationLimit);
            }
            if let Some(dl) = deadline {
                if *used % DEADLINE_POLL == 0 && Instant::now() >= dl {
                    return PhaseEnd::Stopped(RawOutcome::Deadline);
                }
            }
            if *used > 0 && *used % REFRESH_EVERY == 0 {
                self.refresh_basics();
            }

            // Pricing. Phase 1 prices against the violation subgradient.
            if phase1 {
                for i in 0..m {
                    let j = self.basis[i] as usize;
                    let v = self.x[j];
                    self.cb[i] = if v < self.lower[j] - opts.feas_tol {
                        -1.0
                    } else if v > self.upper[j] + opts.feas_tol {
                        1.0
                    } else {
                        0.0
                    };
                }
            } else {
                for i in 0..m {
                    self.cb[i] = self.cost[self.basis[i] as usize];
                }
            }
            self.btran();

            let mut entering: Option<(usize, f64, f64)> = None; // (col, σ, score)
            for j in 0..self.n {
                if matches!(self.state[j], VarState::Basic(_)) || self.lower[j] == self.upper[j]
                {
                    continue;
                }
                let d = self.reduced_cost(j, phase1);
                let (sigma, improving) = match self.state[j] {
                    VarState::AtLower => (1.0, d < -opts.opt_tol),
                    VarState::AtUpper => (-1.0, d > opts.opt_tol),
                    VarState::Free => (if d > 0.0 { -1.0 } else { 1.0 }, d.abs() > opts.opt_tol),
                    VarState::Basic(_) => unreachable!(),
                };
                if !improving {
                    continue;
                }
                if bland {
                    entering = Some((j, sigma, d.abs()));
                    break;
                }
                let score = d.abs();
                if entering.map_or(true, |(_, _, best)| score > best) {
                    entering = Some((j, sigma, score));
                }
            }
            let Some((q, sigma, _)) = entering else {
                return PhaseEnd::Done; // phase optimum
            };

            self.ftran(q);
            *used += 1;
            self.iterations += 1;

            // Ratio test: first breakpoint along the direction. For a basic
            // variable the breakpoint is the bound it would exit through if
            // feasible, or — phase 1 only — the violated bound it is moving
            // toward (moving further away has no breakpoint: the violation
            // grows linearly with no kink).
            let own_range = self.upper[q] - self.lower[q];
            let t_own = if own_range.is_finite() {
                own_range
            } else {
                f64::INFINITY
            };
            const TO_LOWER: u32 = 0;
            const TO_UPPER: u32 = 1;
            let mut min_cap = f64::INFINITY;
            let mut leaving: Option<(usize, f64, u32, f64)> = None; // (pos, |w|, flag, cap)
            for i in 0..m {
                let w = self.ftran[i];
                if w.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[i] as usize;
                let rate = -sigma * w; // dx_j/dt
                let v = self.x[j];
                let (l, u) = (self.lower[j], self.upper[j]);
                let below = v < l - opts.feas_tol;
                let above = v > u + opts.feas_tol;
                let (cap, flag) = if rate > 0.0 {
                    if below {
                        ((l - v) / rate, TO_LOWER)
                    } else if above || !u.is_finite() {
                        continue;
                    } else {
                        (((u - v) / rate).max(0.0), TO_UPPER)
                    }
                } else if above {
                    ((u - v) / rate, TO_UPPER)
                } else if below || !l.is_finite() {
                    continue;
                } else {
                    (((l - v) / rate).max(0.0), TO_LOWER)
                };
                debug_assert!(cap >= 0.0);
                if cap < min_cap {
                    min_cap = cap;
                }
                let tied = cap <= min_cap + 1e-12;
                let wins = match leaving {
                    None => tied,
                    Some((pos, best_w, _, best_cap)) => {
                        if best_cap > min_cap + 1e-12 {
                            tied // previous holder fell out of the tie set
                        } else if !tied {
                            false
                        } else if bland {
                            self.basis[i] < self.basis[pos]
                        } else {
                            w.abs() > best_w
                        }
                    }
                };
                if wins {
                    leaving = Some((i, w.abs(), flag, cap));
                }
            }

            if min_cap.is_infinite() && t_own.is_infinite() {
                if phase1 {
                    // A negative phase-1 slope always has a breakpoint; none
                    // found means the violation set was purely numerical.
                    return PhaseEnd::Done;
                }
                let mut ray = vec![(q, sigma)];
                for i in 0..m {
                    let w = self.ftran[i];
                    if w.abs() > PIVOT_TOL {
                        ray.push((self.basis[i] as usize, -sigma * w));
                    }
                }
                return PhaseEnd::Stopped(RawOutcome::Unbounded { ray });
            }

            let flip = t_own <= min_cap + 1e-12;
            let t_star = if flip { t_own } else { min_cap };

            if t_star <= DEGEN_STEP {
                stall += 1;
                if stall >= opts.stall_threshold {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }

            // Move all basic values along the direction.
            for i in 0..m {
                let w = self.ftran[i];
                if w != 0.0 {
                    let j = self.basis[i] as usize;
                    self.x[j] -= sigma * t_star * w;
                }
            }
            if flip {
                // The entering variable crosses its own range; no pivot.
                if sigma > 0.0 {
                    self.state[q] = VarState::AtUpper;
                    self.x[q] = self.upper[q];
                } else {
                    self.state[q] = VarState::AtLower;
                    self.x[q] = self.lower[q];
                }
            } else {
                let (r, _, flag, _) = leaving.expect("finite min_cap implies a leaving variable");
                self.x[q] += sigma * t_star;
                let leaving_col = self.basis[r] as usize;
                self.pivot_update(r, q);
                // Snap the leaving variable exactly onto its breakpoint bound.
                if flag == TO_LOWER {
                    self.state[leaving_col] = VarState::AtLower;
                    self.x[leaving_col] = self.lower[leaving_col];
                } else {
                    self.state[leaving_col] = VarState::AtUpper;
                    self.x[leaving_col] = self.upper[leaving_col];
                }
            }
        }
    }

    /// Column name for certificates: structural name or `row:{con}`.
    fn col_name(&self, model: &OptModel, j: usize) -> String {
        if j < self.n_struct {
            model.var(crate::model::VarId(j)).name.clone()
        } else {
            format!("row:{}", model.con(crate::model::ConId(j - self.n_struct)).name)
        }
    }
}

enum PhaseEnd {
    Done,
    Stopped(RawOutcome),
}

/// Pre-check rows with no terms: `0 ⟨sense⟩ rhs` either holds or the model is
/// trivially infeasible. Returns the name of the first violated empty row.
pub(crate) fn violated_empty_row(model: &OptModel) -> Option<(String, f64)> {
    for con in model.cons() {
        if con.terms.iter().all(|&(_, c)| c == 0.0) {
            let ok = match con.sense {
                Sense::Le => 0.0 <= con.rhs,
                Sense::Ge => 0.0 >= con.rhs,
                Sense::Eq => con.rhs == 0.0,
            };
            if !ok {
                return Some((con.name.clone(), con.rhs.abs()));
            }
        }
    }
    None
}

/// Maps a finished workspace onto the public result type, restoring the
/// model's objective sense.
pub(crate) fn extract_result(
    model: &OptModel,
    ws: &Workspace,
    outcome: &RawOutcome,
    wall_time_s: f64,
    bb_nodes: u64,
) -> SolveResult {
    let sign = if model.sense() == ObjSense::Minimize {
        1.0
    } else {
        -1.0
    };
    let mut notes = Vec::new();
    let (status, objective, best_bound, certificate, primal) = match outcome {
        RawOutcome::Optimal => {
            let mut primal = std::collections::BTreeMap::new();
            let mut raw = 0.0;
            for (id, v) in model.vars() {
                let val = ws.value_of(id.index()).clamp(v.lower, v.upper);
                raw += ws.cost[id.index()] * val;
                primal.insert(v.name.clone(), val);
            }
            let obj = sign * raw + model.objective_constant();
            (SolveStatus::Optimal, obj, obj, None, primal)
        }
        RawOutcome::Infeasible { residual } => (
            SolveStatus::Infeasible,
            f64::INFINITY * sign,
            f64::INFINITY * sign,
            Some(Certificate::InfeasibleResidual(*residual)),
            Default::default(),
        ),
        RawOutcome::Unbounded { ray } => {
            let named = ray
                .iter()
                .map(|&(j, d)| (ws.col_name(model, j), d))
                .collect();
            (
                SolveStatus::Unbounded,
                f64::NEG_INFINITY * sign,
                f64::NEG_INFINITY * sign,
                Some(Certificate::UnboundedRay(named)),
                Default::default(),
            )
        }
        RawOutcome::IterationLimit | RawOutcome::Deadline => {
            notes.push(
                if matches!(outcome, RawOutcome::IterationLimit) {
                    "iteration limit reached".to_string()
                } else {
                    "time limit reached".to_string()
                },
            );
            (
                SolveStatus::TimeLimit,
                f64::INFINITY * sign,
                f64::NEG_INFINITY * sign,
                None,
                Default::default(),
            )
        }
    };
    let gap = match status {
        SolveStatus::Optimal => 0.0,
        _ => f64::INFINITY,
    };
    SolveResult {
        status,
        objective,
        best_bound,
        gap,
        primal,
        simplex_iterations: ws.iterations,
        bb_nodes,
        wall_time_s,
        certificate,
        notes,
    }
}

/// Solves a pure LP. Binary variables are rejected — relax them to bounds or
/// use [`crate::branch_bound::solve_mip`].
pub fn solve_lp(model: &OptModel, opts: &SimplexOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    model.validate()?;
    if let Some((id, v)) = model.vars().find(|(_, v)| v.kind == VarKind::Binary) {
        let _ = id;
        return Err(SolveError::BinaryInLp(v.name.clone()));
    }
    if let Some((name, residual)) = violated_empty_row(model) {
        let mut res = SolveResult {
            status: SolveStatus::Infeasible,
            objective: f64::INFINITY,
            best_bound: f64::INFINITY,
            gap: f64::INFINITY,
            primal: Default::default(),
            simplex_iterations: 0,
            bb_nodes: 0,
            wall_time_s: start.elapsed().as_secs_f64(),
            certificate: Some(Certificate::InfeasibleResidual(residual)),
            notes: vec![format!("empty row '{name}' is infeasible")],
        };
        if model.sense() == ObjSense::Maximize {
            res.objective = f64::NEG_INFINITY;
            res.best_bound = f64::NEG_INFINITY;
        }
        return Ok(res);
    }
    let mut ws = Workspace::new(model);
    let outcome = ws.solve(false, opts, None);
    Ok(extract_result(
        model,
        &ws,
        &outcome,
        start.elapsed().as_secs_f64(),
        0,
    ))
}
