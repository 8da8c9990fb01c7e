//! Solver-independent LP/MIP intermediate representation.
//!
//! An [`OptModel`] owns variables (continuous or binary, each with bounds and
//! a unique name), sparse linear constraints, and one linear objective. The
//! built-in solvers ([`crate::simplex`], [`crate::branch_bound`]) consume it
//! directly; [`OptModel::write_lp_text`] exports a deterministic LP-format
//! text for cross-checking against external solvers.
//!
//! Construction is strict: bad names, non-finite numbers, and inverted bounds
//! are rejected at insertion time with the offender named, so a model that
//! reaches a solver is structurally sound. The one deliberate exception is an
//! empty constraint row, which is accepted and detected as trivially
//! feasible/infeasible at solve time.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Handle to a variable of the model that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint of the model that created it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConId(pub(crate) usize);

impl ConId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// Constraint sense: `terms ⟨sense⟩ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate variable name '{0}'")]
    DuplicateVariable(String),
    #[error("invalid name '{0}': must be non-empty and contain no whitespace, ':', or ','")]
    BadName(String),
    #[error("variable '{name}': invalid bounds [{lower}, {upper}]")]
    BadBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("binary variable '{name}': bounds [{lower}, {upper}] not within [0, 1]")]
    BadBinaryBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("constraint '{con}': non-finite coefficient {value} on variable '{var}'")]
    NonFiniteCoefficient { con: String, var: String, value: f64 },
    #[error("constraint '{0}': non-finite right-hand side {1}")]
    NonFiniteRhs(String, f64),
    #[error("unknown variable id {0} (not created by this model)")]
    UnknownVariable(usize),
    #[error("objective: non-finite coefficient {value} on variable '{var}'")]
    NonFiniteObjective { var: String, value: f64 },
    #[error("objective: non-finite constant {0}")]
    NonFiniteConstant(f64),
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

impl VarDef {
    /// A fixed variable has no freedom to move.
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone)]
pub struct ConDef {
    pub name: String,
    /// Sorted by variable index, one entry per variable (duplicates coalesced).
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Linear optimization model: variables, constraints, one objective.
#[derive(Debug, Clone)]
pub struct OptModel {
    sense: ObjSense,
    vars: Vec<VarDef>,
    cons: Vec<ConDef>,
    obj_terms: Vec<f64>, // dense, one slot per variable
    obj_constant: f64,
    name_index: HashMap<String, usize>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.contains(|c: char| c.is_whitespace() || c == ':' || c == ',')
}

/// Sums duplicate variable indices and sorts by index. Exact summation order
/// is ascending insertion order within each index, so the result is
/// deterministic for a given term list.
fn coalesce(terms: &[(VarId, f64)]) -> Vec<(usize, f64)> {
    let mut sorted: Vec<(usize, f64)> = terms.iter().map(|&(v, c)| (v.0, c)).collect();
    sorted.sort_by_key(|&(i, _)| i);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(sorted.len());
    for (i, c) in sorted {
        match out.last_mut() {
            Some((j, acc)) if *j == i => *acc += c,
            _ => out.push((i, c)),
        }
    }
    out
}

impl OptModel {
    pub fn new(sense: ObjSense) -> OptModel {
        OptModel {
            sense,
            vars: Vec::new(),
            cons: Vec::new(),
            obj_terms: Vec::new(),
            obj_constant: 0.0,
            name_index: HashMap::new(),
        }
    }

    pub fn sense(&self) -> ObjSense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_cons(&self) -> usize {
        self.cons.len()
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id.0]
    }

    pub fn vars(&self) -> impl Iterator<Item = (VarId, &VarDef)> {
        self.vars.iter().enumerate().map(|(i, v)| (VarId(i), v))
    }

    pub fn con(&self, id: ConId) -> &ConDef {
        &self.cons[id.0]
    }

    pub fn cons(&self) -> impl Iterator<Item = &ConDef> {
        self.cons.iter()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.name_index.get(name).copied().map(VarId)
    }

    /// Objective coefficient of `v` (0 if never set).
    pub fn objective_coeff(&self, v: VarId) -> f64 {
        self.obj_terms.get(v.0).copied().unwrap_or(0.0)
    }

    pub fn objective_constant(&self) -> f64 {
        self.obj_constant
    }

    /// Adds a variable; names must be unique within the model. The first
    /// variable gets handle index 0. Bounds may be infinite on either side
    /// for continuous variables; binary bounds must stay within [0, 1]
    /// (fixing a binary via `[1, 1]` is allowed).
    pub fn add_variable(
        &mut self,
        name: &str,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId, ModelError> {
        if !valid_name(name) {
            return Err(ModelError::BadName(name.to_string()));
        }
        if self.name_index.contains_key(name) {
            return Err(ModelError::DuplicateVariable(name.to_string()));
        }
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY
            || upper == f64::NEG_INFINITY
        {
            return Err(ModelError::BadBounds {
                name: name.to_string(),
                lower,
                upper,
            });
        }
        if kind == VarKind::Binary && (!(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper))
        {
            return Err(ModelError::BadBinaryBounds {
                name: name.to_string(),
                lower,
                upper,
            });
        }
        let id = self.vars.len();
        self.vars.push(VarDef {
            name: name.to_string(),
            lower,
            upper,
            kind,
        });
        self.obj_terms.push(0.0);
        self.name_index.insert(name.to_string(), id);
        Ok(VarId(id))
    }

    /// Tightens or replaces the bounds of an existing variable.
    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        let def = self
            .vars
            .get(v.0)
            .ok_or(ModelError::UnknownVariable(v.0))?;
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY
            || upper == f64::NEG_INFINITY
        {
            return Err(ModelError::BadBounds {
                name: def.name.clone(),
                lower,
                upper,
            });
        }
        if def.kind == VarKind::Binary && (!(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper)) {
            return Err(ModelError::BadBinaryBounds {
                name: def.name.clone(),
                lower,
                upper,
            });
        }
        let def = &mut self.vars[v.0];
        def.lower = lower;
        def.upper = upper;
        Ok(())
    }

    /// Adds a constraint `Σ terms ⟨sense⟩ rhs`. Duplicate variables in the
    /// term list are coalesced by summation. An empty term list is accepted;
    /// the solvers detect such rows as trivially feasible or infeasible.
    pub fn add_constraint(
        &mut self,
        name: &str,
        terms: &[(VarId, f64)],
        sense: Sense,
        rhs: f64,
    ) -> Result<ConId, ModelError> {
        if !valid_name(name) {
            return Err(ModelError::BadName(name.to_string()));
        }
        for &(v, c) in terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(ModelError::NonFiniteCoefficient {
                    con: name.to_string(),
                    var: self.vars[v.0].name.clone(),
                    value: c,
                });
            }
        }
        if !rhs.is_finite() {
            return Err(ModelError::NonFiniteRhs(name.to_string(), rhs));
        }
        let id = self.cons.len();
        self.cons.push(ConDef {
            name: name.to_string(),
            terms: coalesce(terms),
            sense,
            rhs,
        });
        Ok(ConId(id))
    }

    /// Adds `coeff` to the objective coefficient of `v` (accumulative, so
    /// penalty terms can be layered onto an existing objective).
    pub fn add_objective_term(&mut self, v: VarId, coeff: f64) -> Result<(), ModelError> {
        if v.0 >= self.vars.len() {
            return Err(ModelError::UnknownVariable(v.0));
        }
        if !coeff.is_finite() {
            return Err(ModelError::NonFiniteObjective {
                var: self.vars[v.0].name.clone(),
                value: coeff,
            });
        }
        self.obj_terms[v.0] += coeff;
        Ok(())
    }

    pub fn set_objective_constant(&mut self, c: f64) -> Result<(), ModelError> {
        if !c.is_finite() {
            return Err(ModelError::NonFiniteConstant(c));
        }
        self.obj_constant = c;
        Ok(())
    }

    /// Full structural check. Insertion already enforces these invariants;
    /// `validate` exists so deserialized or hand-assembled models can be
    /// checked in one place. Errors name the offending variable/constraint.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for v in &self.vars {
            if !valid_name(&v.name) {
                return Err(ModelError::BadName(v.name.clone()));
            }
            if seen.insert(&v.name, ()).is_some() {
                return Err(ModelError::DuplicateVariable(v.name.clone()));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::BadBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.kind == VarKind::Binary
                && (!(0.0..=1.0).contains(&v.lower) || !(0.0..=1.0).contains(&v.upper))
            {
                return Err(ModelError::BadBinaryBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for c in &self.cons {
            for &(i, coeff) in &c.terms {
                if i >= self.vars.len() {
                    return Err(ModelError::UnknownVariable(i));
                }
                if !coeff.is_finite() {
                    return Err(ModelError::NonFiniteCoefficient {
                        con: c.name.clone(),
                        var: self.vars[i].name.clone(),
                        value: coeff,
                    });
                }
            }
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFiniteRhs(c.name.clone(), c.rhs));
            }
        }
        for (i, &c) in self.obj_terms.iter().enumerate() {
            if !c.is_finite() {
                return Err(ModelError::NonFiniteObjective {
                    var: self.vars[i].name.clone(),
                    value: c,
                });
            }
        }
        if !self.obj_constant.is_finite() {
            return Err(ModelError::NonFiniteConstant(self.obj_constant));
        }
        Ok(())
    }

    pub fn binary_vars(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    /// Deterministic LP-format text export. Identical models produce
    /// byte-identical text: variables and constraints appear in insertion
    /// order and numbers are printed as shortest-round-trip decimals.
    pub fn write_lp_text(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ netlift LP export v1\n");
        out.push_str(match self.sense {
            ObjSense::Minimize => "Minimize\n",
            ObjSense::Maximize => "Maximize\n",
        });
        let obj: Vec<(usize, f64)> = self
            .obj_terms
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(i, &c)| (i, c))
            .collect();
        out.push_str(" obj:");
        if obj.is_empty() && self.obj_constant == 0.0 {
            out.push_str(" 0");
        } else {
            let mut first = true;
            for (i, c) in obj {
                self.push_term(&mut out, first, c, Some(&self.vars[i].name));
                first = false;
            }
            if self.obj_constant != 0.0 {
                self.push_term(&mut out, first, self.obj_constant, None);
            }
        }
        out.push('\n');
        out.push_str("Subject To\n");
        for c in &self.cons {
            let _ = write!(out, " {}:", c.name);
            if c.terms.is_empty() {
                out.push_str(" 0");
            } else {
                let mut first = true;
                for &(i, coeff) in &c.terms {
                    self.push_term(&mut out, first, coeff, Some(&self.vars[i].name));
                    first = false;
                }
            }
            let _ = write!(out, " {} {}\n", c.sense.symbol(), c.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            let line = match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) if v.lower == v.upper => format!(" {} = {}\n", v.name, v.lower),
                (true, true) => format!(" {} <= {} <= {}\n", v.lower, v.name, v.upper),
                (true, false) => format!(" {} >= {}\n", v.name, v.lower),
                (false, true) => format!(" {} <= {}\n", v.name, v.upper),
                (false, false) => format!(" {} free\n", v.name),
            };
            out.push_str(&line);
        }
        let binaries: Vec<&str> = self
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n ");
            out.push_str(&binaries.join(" "));
            out.push('\n');
        }
        out.push_str("End\n");
        out
    }

    /// Appends ` c name`, ` + c name`, ` - c name` with unit coefficients
    /// elided; `name = None` appends a bare constant.
    fn push_term(&self, out: &mut String, first: bool, c: f64, name: Option<&str>) {
        let mag = c.abs();
        if first {
            if c < 0.0 {
                out.push_str(" -");
            }
        } else if c < 0.0 {
            out.push_str(" -");
        } else {
            out.push_str(" +");
        }
        match name {
            Some(n) if mag == 1.0 => {
                let _ = write!(out, " {n}");
            }
            Some(n) => {
                let _ = write!(out, " {mag} {n}");
            }
            None => {
                let _ = write!(out, " {mag}");
            }
        }
    }
}

/// Solver outcome vocabulary shared by the LP and MIP engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Search finished: LP optimal basis, or MIP tree exhausted.
    Optimal,
    Infeasible,
    Unbounded,
    /// Wall-clock or iteration limit hit (see [`SolveResult::notes`]).
    TimeLimit,
    /// MIP stopped early with the relative gap under tolerance but open
    /// nodes remaining.
    GapReached,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::GapReached => "gap_reached",
        }
    }
}

/// Certificate for a conclusive negative answer.
#[derive(Debug, Clone)]
pub enum Certificate {
    /// Improving ray: variable-name → direction component (nonzero entries).
    UnboundedRay(Vec<(String, f64)>),
    /// Smallest total bound violation the first phase could reach.
    InfeasibleResidual(f64),
}

/// Result of an LP or MIP solve, in the model's original sense (a maximize
/// model gets maximize objectives back, whatever the engine did internally).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Incumbent objective. Infinite when no incumbent exists (`Infeasible`,
    /// or a limit hit before any feasible point was found).
    pub objective: f64,
    /// Proven bound on the optimum (equals `objective` for LP optima).
    pub best_bound: f64,
    /// `|objective − best_bound| / max(|objective|, 1e-9)`.
    pub gap: f64,
    /// Variable name → value at the incumbent; empty when there is none.
    pub primal: std::collections::BTreeMap<String, f64>,
    pub simplex_iterations: u64,
    pub bb_nodes: u64,
    pub wall_time_s: f64,
    pub certificate: Option<Certificate>,
    /// Free-form diagnostic notes (e.g. `"iteration limit reached"`).
    pub notes: Vec<String>,
}

impl SolveResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.primal.get(name).copied()
    }

    pub(crate) fn relative_gap(objective: f64, best_bound: f64) -> f64 {
        if !objective.is_finite() || !best_bound.is_finite() {
            return f64::INFINITY;
        }
        (objective - best_bound).abs() / objective.abs().max(1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (OptModel, VarId, VarId) {
        let mut m = OptModel::new(ObjSense::Minimize);
        let x = m.add_variable("x", 0.0, 10.0, VarKind::Continuous).unwrap();
        let y = m.add_variable("y", 0.0, f64::INFINITY, VarKind::Continuous).unwrap();
        (m, x, y)
    }

    #[test]
    fn first_variable_gets_index_zero() {
        let (m, x, y) = small();
        assert_eq!(x.index(), 0);
        assert_eq!(y.index(), 1);
        assert_eq!(m.num_vars(), 2);
    }

    #[test]
    fn duplicate_name_rejected_and_named() {
        let (mut m, _, _) = small();
        let err = m
            .add_variable("x", 0.0, 1.0, VarKind::Continuous)
            .unwrap_err();
        assert!(matches!(err, ModelError::DuplicateVariable(ref n) if n == "x"));
    }

    #[test]
    fn binary_bounds_checked() {
        let mut m = OptModel::new(ObjSense::Minimize);
        assert!(m.add_variable("d", 0.0, 1.0, VarKind::Binary).is_ok());
        assert!(m.add_variable("e", 1.0, 1.0, VarKind::Binary).is_ok());
        let err = m.add_variable("f", -1.0, 1.0, VarKind::Binary).unwrap_err();
        assert!(matches!(err, ModelError::BadBinaryBounds { .. }));
    }

    #[test]
    fn inverted_and_nan_bounds_rejected() {
        let mut m = OptModel::new(ObjSense::Minimize);
        assert!(m
            .add_variable("a", 2.0, 1.0, VarKind::Continuous)
            .is_err());
        assert!(m
            .add_variable("b", f64::NAN, 1.0, VarKind::Continuous)
            .is_err());
        assert!(m
            .add_variable("c", f64::INFINITY, f64::INFINITY, VarKind::Continuous)
            .is_err());
    }

    #[test]
    fn duplicate_terms_coalesce_by_summation() {
        let (mut m, x, _) = small();
        let c = m
            .add_constraint("c0", &[(x, 1.0), (x, 2.0)], Sense::Le, 5.0)
            .unwrap();
        assert_eq!(m.con(c).terms, vec![(0, 3.0)]);
    }

    #[test]
    fn empty_row_accepted() {
        let (mut m, _, _) = small();
        let c = m.add_constraint("void", &[], Sense::Le, -1.0).unwrap();
        assert!(m.con(c).terms.is_empty());
        assert!(m.validate().is_ok());
    }

    #[test]
    fn nan_coefficient_rejected_naming_offender() {
        let (mut m, x, _) = small();
        let err = m
            .add_constraint("c0", &[(x, f64::NAN)], Sense::Le, 1.0)
            .unwrap_err();
        match err {
            ModelError::NonFiniteCoefficient { con, var, .. } => {
                assert_eq!(con, "c0");
                assert_eq!(var, "x");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn foreign_var_id_rejected() {
        let (mut m, _, _) = small();
        let err = m
            .add_constraint("c0", &[(VarId(99), 1.0)], Sense::Le, 1.0)
            .unwrap_err();
        assert!(matches!(err, ModelError::UnknownVariable(99)));
    }

    #[test]
    fn objective_terms_accumulate() {
        let (mut m, x, _) = small();
        m.add_objective_term(x, 1.5).unwrap();
        m.add_objective_term(x, 0.5).unwrap();
        assert_eq!(m.objective_coeff(x), 2.0);
    }

    #[test]
    fn lp_text_contains_expected_lines() {
        let mut m = OptModel::new(ObjSense::Minimize);
        let x = m.add_variable("x", 0.0, 10.0, VarKind::Continuous).unwrap();
        m.add_objective_term(x, 1.0).unwrap();
        m.add_constraint("c0", &[(x, 1.0)], Sense::Ge, 1.0).unwrap();
        let text = m.write_lp_text();
        assert!(text.contains("Minimize"), "{text}");
        assert!(text.contains("x >= 1"), "{text}");
        assert!(text.contains("0 <= x <= 10"), "{text}");
    }

    #[test]
    fn lp_text_binary_section_and_determinism() {
        let mut m = OptModel::new(ObjSense::Maximize);
        let x = m.add_variable("x", 0.0, 4.0, VarKind::Continuous).unwrap();
        let d = m.add_variable("d", 0.0, 1.0, VarKind::Binary).unwrap();
        m.add_objective_term(x, 2.5).unwrap();
        m.add_constraint("link", &[(x, 1.0), (d, -4.0)], Sense::Le, 0.0)
            .unwrap();
        let a = m.write_lp_text();
        let b = m.write_lp_text();
        assert_eq!(a, b);
        assert!(a.contains("Maximize"));
        assert!(a.contains("Binaries\n d\n"), "{a}");
        assert!(a.contains("link: x - 4 d <= 0"), "{a}");
    }

    #[test]
    fn lp_text_free_and_fixed_bounds() {
        let mut m = OptModel::new(ObjSense::Minimize);
        m.add_variable("f", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous)
            .unwrap();
        m.add_variable("g", 3.0, 3.0, VarKind::Continuous).unwrap();
        let text = m.write_lp_text();
        assert!(text.contains(" f free\n"));
        assert!(text.contains(" g = 3\n"));
    }

    #[test]
    fn validate_passes_on_built_model() {
        let (mut m, x, y) = small();
        m.add_constraint("c0", &[(x, 1.0), (y, -1.0)], Sense::Eq, 0.0)
            .unwrap();
        m.add_objective_term(y, 1.0).unwrap();
        assert!(m.validate().is_ok());
    }
}
