//! Exact solver for bounded integer linear programs.
//!
//! Solving runs in two stages. Branch and bound over exact rational LP
//! relaxations finds the optimal objective value; a second pass then picks,
//! among all optimal points, the lexicographically greatest assignment in
//! variable declaration order. Each search node first tightens variable
//! bounds by interval propagation over the integer domains.

mod simplex;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::Verdict;
use simplex::{solve_lp, LpOutcome, LpRow};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IlpError {
    #[error("duplicate variable '{0}'")]
    DuplicateVariable(String),
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("variable '{id}' has empty domain [{lower}, {upper}]")]
    EmptyDomain { id: String, lower: i64, upper: i64 },
    #[error("coefficient magnitudes too large for exact bound checks in {0}")]
    TooLarge(String),
    #[error("assignment has {got} values, model has {expected} variables")]
    AssignmentLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: String,
    pub lower: i64,
    pub upper: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

/// `Σ coefficient · variable (relation) rhs`. Terms on the same variable are
/// merged; zero coefficients are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub name: String,
    terms: BTreeMap<VarId, i64>,
    pub relation: Relation,
    pub rhs: i64,
}

impl LinearConstraint {
    pub fn new(
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, i64)>,
        relation: Relation,
        rhs: i64,
    ) -> Self {
        let mut merged: BTreeMap<VarId, i64> = BTreeMap::new();
        for (v, a) in terms {
            *merged.entry(v).or_insert(0) += a;
        }
        merged.retain(|_, a| *a != 0);
        Self {
            name: name.into(),
            terms: merged,
            relation,
            rhs,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.terms.iter().map(|(&v, &a)| (v, a))
    }

    fn holds(&self, values: &[i64]) -> bool {
        let lhs: i128 = self
            .terms()
            .map(|(v, a)| a as i128 * values[v.0] as i128)
            .sum();
        let rhs = self.rhs as i128;
        match self.relation {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }
}

/// Bounded integer variables, linear constraints and a linear objective to
/// minimize. An empty objective makes the model a pure feasibility problem.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IlpModel {
    variables: Vec<Variable>,
    index: HashMap<String, VarId>,
    constraints: Vec<LinearConstraint>,
    objective: BTreeMap<VarId, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<i64>,
    pub objective_value: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Optimal(Solution),
    Infeasible,
}

impl SolveOutcome {
    pub fn optimal(self) -> Option<Solution> {
        match self {
            SolveOutcome::Optimal(s) => Some(s),
            SolveOutcome::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignmentViolation {
    Bounds { variable: String, value: i64 },
    Constraint { index: usize, name: String },
}

// Every activity must fit in i128 with headroom so propagation stays exact.
const MAGNITUDE_LIMIT: i128 = i128::MAX / 4;

fn max_activity<'a>(
    terms: impl Iterator<Item = (VarId, i64)> + 'a,
    vars: &[Variable],
) -> Option<i128> {
    let mut total: i128 = 0;
    for (v, a) in terms {
        let var = &vars[v.0];
        let m = (a as i128)
            .abs()
            .checked_mul((var.lower as i128).abs().max((var.upper as i128).abs()))?;
        total = total.checked_add(m)?;
        if total > MAGNITUDE_LIMIT {
            return None;
        }
    }
    Some(total)
}

impl IlpModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every variable must be bounded on both sides.
    pub fn add_variable(
        &mut self,
        id: impl Into<String>,
        lower: i64,
        upper: i64,
    ) -> Result<VarId, IlpError> {
        let id = id.into();
        if lower > upper {
            return Err(IlpError::EmptyDomain { id, lower, upper });
        }
        if self.index.contains_key(&id) {
            return Err(IlpError::DuplicateVariable(id));
        }
        let v = VarId(self.variables.len());
        self.index.insert(id.clone(), v);
        self.variables.push(Variable { id, lower, upper });
        Ok(v)
    }

    pub fn var(&self, id: &str) -> Option<VarId> {
        self.index.get(id).copied()
    }

    pub fn require_var(&self, id: &str) -> Result<VarId, IlpError> {
        self.var(id)
            .ok_or_else(|| IlpError::UnknownVariable(id.to_string()))
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.objective.iter().map(|(&v, &a)| (v, a))
    }

    pub fn add_constraint(&mut self, c: LinearConstraint) -> Result<(), IlpError> {
        if let Some((v, _)) = c.terms().find(|(v, _)| v.0 >= self.variables.len()) {
            return Err(IlpError::UnknownVariable(format!("#{}", v.0)));
        }
        let act = max_activity(c.terms(), &self.variables).filter(|a| {
            a.checked_add((c.rhs as i128).abs())
                .is_some_and(|s| s <= MAGNITUDE_LIMIT)
        });
        if act.is_none() {
            return Err(IlpError::TooLarge(c.name));
        }
        self.constraints.push(c);
        Ok(())
    }

    /// Replaces the objective (to be minimized).
    pub fn set_objective(
        &mut self,
        terms: impl IntoIterator<Item = (VarId, i64)>,
    ) -> Result<(), IlpError> {
        let mut merged: BTreeMap<VarId, i64> = BTreeMap::new();
        for (v, a) in terms {
            if v.0 >= self.variables.len() {
                return Err(IlpError::UnknownVariable(format!("#{}", v.0)));
            }
            *merged.entry(v).or_insert(0) += a;
        }
        merged.retain(|_, a| *a != 0);
        if max_activity(merged.iter().map(|(&v, &a)| (v, a)), &self.variables).is_none() {
            return Err(IlpError::TooLarge("objective".into()));
        }
        self.objective = merged;
        Ok(())
    }

    pub fn objective_value(&self, values: &[i64]) -> BigInt {
        self.objective()
            .map(|(v, a)| BigInt::from(a) * BigInt::from(values[v.0]))
            .sum()
    }

    /// Checks bounds, then constraints in insertion order.
    pub fn check_assignment(
        &self,
        values: &[i64],
    ) -> Result<Verdict<AssignmentViolation>, IlpError> {
        if values.len() != self.variables.len() {
            return Err(IlpError::AssignmentLength {
                expected: self.variables.len(),
                got: values.len(),
            });
        }
        for (var, &x) in self.variables.iter().zip(values) {
            if x < var.lower || x > var.upper {
                return Ok(Verdict::Invalid(AssignmentViolation::Bounds {
                    variable: var.id.clone(),
                    value: x,
                }));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.holds(values) {
                return Ok(Verdict::Invalid(AssignmentViolation::Constraint {
                    index: i,
                    name: c.name.clone(),
                }));
            }
        }
        Ok(Verdict::Valid)
    }

    /// Same as [`IlpModel::check_assignment`] for an assignment keyed by
    /// variable id. Missing variables are an error.
    pub fn check_named(
        &self,
        a: &BTreeMap<String, i64>,
    ) -> Result<Verdict<AssignmentViolation>, IlpError> {
        let values = self
            .variables
            .iter()
            .map(|v| {
                a.get(&v.id)
                    .copied()
                    .ok_or_else(|| IlpError::UnknownVariable(v.id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.check_assignment(&values)
    }

    pub fn solve(&self) -> SolveOutcome {
        let mut search = Search::new(self);
        let root: Vec<(i64, i64)> = self.variables.iter().map(|v| (v.lower, v.upper)).collect();
        let objective: Vec<(usize, i64)> = self.objective().map(|(v, a)| (v.0, a)).collect();
        let Some((mut best, best_obj)) = search.branch_and_bound(root.clone(), &objective, None)
        else {
            return SolveOutcome::Infeasible;
        };

        // Lexicographic tie-break among optimal points.
        if !objective.is_empty() {
            search.rows.push(Row {
                terms: objective.iter().map(|&(j, a)| (j, a as i128)).collect(),
                relation: Relation::Eq,
                rhs: best_obj,
            });
        }
        let mut bounds = root;
        for i in 0..self.variables.len() {
            if best[i] < bounds[i].1 {
                let target = [(i, -1i64)];
                let incumbent = (best.clone(), -(best[i] as i128));
                if let Some((improved, _)) =
                    search.branch_and_bound(bounds.clone(), &target, Some(incumbent))
                {
                    best = improved;
                }
            }
            bounds[i] = (best[i], best[i]);
        }
        let objective_value = self.objective_value(&best);
        SolveOutcome::Optimal(Solution {
            values: best,
            objective_value,
        })
    }
}

impl fmt::Display for IlpModel {
    /// LP-style text dump for inspection.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_terms =
            |f: &mut fmt::Formatter<'_>, terms: &mut dyn Iterator<Item = (VarId, i64)>| {
                let mut any = false;
                for (v, a) in terms {
                    let sign = if a < 0 { '-' } else { '+' };
                    write!(f, " {sign} {} {}", a.unsigned_abs(), self.variables[v.0].id)?;
                    any = true;
                }
                if !any {
                    write!(f, " 0")?;
                }
                Ok(())
            };
        writeln!(f, "minimize")?;
        write!(f, "  obj:")?;
        write_terms(f, &mut self.objective())?;
        writeln!(f)?;
        writeln!(f, "subject to")?;
        for c in &self.constraints {
            write!(f, "  {}:", c.name)?;
            write_terms(f, &mut c.terms())?;
            writeln!(f, " {} {}", c.relation, c.rhs)?;
        }
        writeln!(f, "bounds")?;
        for v in &self.variables {
            writeln!(f, "  {} <= {} <= {}", v.lower, v.id, v.upper)?;
        }
        writeln!(f, "general")?;
        for v in &self.variables {
            writeln!(f, "  {}", v.id)?;
        }
        writeln!(f, "end")
    }
}

#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, i128)>,
    relation: Relation,
    rhs: i128,
}

struct Search {
    rows: Vec<Row>,
}

type Bounds = Vec<(i64, i64)>;

impl Search {
    fn new(model: &IlpModel) -> Self {
        let rows = model
            .constraints
            .iter()
            .map(|c| Row {
                terms: c.terms().map(|(v, a)| (v.0, a as i128)).collect(),
                relation: c.relation,
                rhs: c.rhs as i128,
            })
            .collect();
        Self { rows }
    }

    /// Tightens bounds to a fixpoint. Returns false if some row cannot be
    /// satisfied within the bounds.
    fn propagate(&self, bounds: &mut Bounds) -> bool {
        for _ in 0..64 {
            let mut changed = false;
            for row in &self.rows {
                let sides: &[i128] = match row.relation {
                    Relation::Le => &[1],
                    Relation::Ge => &[-1],
                    Relation::Eq => &[1, -1],
                };
                for &s in sides {
                    // s·(a·x) <= s·rhs
                    let rhs = s * row.rhs;
                    let min_terms: Vec<i128> = row
                        .terms
                        .iter()
                        .map(|&(j, a)| {
                            let a = s * a;
                            (a * bounds[j].0 as i128).min(a * bounds[j].1 as i128)
                        })
                        .collect();
                    let min_act: i128 = min_terms.iter().sum();
                    if min_act > rhs {
                        return false;
                    }
                    for (k, &(j, a)) in row.terms.iter().enumerate() {
                        let a = s * a;
                        let slack = rhs - (min_act - min_terms[k]);
                        let (lo, hi) = bounds[j];
                        if a > 0 {
                            let cap = Integer::div_floor(&slack, &a);
                            if cap < hi as i128 {
                                if cap < lo as i128 {
                                    return false;
                                }
                                bounds[j].1 = cap as i64;
                                changed = true;
                            }
                        } else {
                            let floor = Integer::div_ceil(&-slack, &-a);
                            if floor > lo as i128 {
                                if floor > hi as i128 {
                                    return false;
                                }
                                bounds[j].0 = floor as i64;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        true
    }

    /// LP relaxation restricted to the variables that are not yet fixed.
    fn relax(
        &self,
        bounds: &Bounds,
        objective: &[(usize, i64)],
    ) -> Option<(Vec<BigRational>, BigRational)> {
        let free: Vec<usize> = (0..bounds.len())
            .filter(|&j| bounds[j].0 < bounds[j].1)
            .collect();
        let mut col = vec![usize::MAX; bounds.len()];
        for (c, &j) in free.iter().enumerate() {
            col[j] = c;
        }
        let mut rows = Vec::new();
        for row in &self.rows {
            let mut rhs = BigInt::from(row.rhs);
            let mut terms = Vec::new();
            for &(j, a) in &row.terms {
                rhs -= BigInt::from(a) * BigInt::from(bounds[j].0);
                if col[j] != usize::MAX {
                    terms.push((col[j], BigInt::from(a)));
                }
            }
            if terms.is_empty() {
                let ok = match row.relation {
                    Relation::Le => !rhs.is_negative(),
                    Relation::Ge => !rhs.is_positive(),
                    Relation::Eq => rhs.is_zero(),
                };
                if !ok {
                    return None;
                }
                continue;
            }
            rows.push(LpRow {
                terms,
                relation: row.relation,
                rhs,
            });
        }
        let upper: Vec<BigInt> = free
            .iter()
            .map(|&j| BigInt::from(bounds[j].1 - bounds[j].0))
            .collect();
        let mut cost = vec![BigInt::zero(); free.len()];
        let mut offset = BigInt::zero();
        for &(j, a) in objective {
            offset += BigInt::from(a) * BigInt::from(bounds[j].0);
            if col[j] != usize::MAX {
                cost[col[j]] = BigInt::from(a);
            }
        }
        match solve_lp(&upper, &rows, &cost) {
            LpOutcome::Infeasible => None,
            LpOutcome::Optimal { values, objective } => {
                let mut full: Vec<BigRational> = bounds
                    .iter()
                    .map(|b| BigRational::from_integer(b.0.into()))
                    .collect();
                for (c, &j) in free.iter().enumerate() {
                    full[j] += &values[c];
                }
                Some((full, objective + BigRational::from_integer(offset)))
            }
        }
    }

    /// Depth-first branch and bound minimizing `objective`. Branches on the
    /// first fractional variable, floor side first. `incumbent` seeds the
    /// search; the returned point is strictly better than it or is it.
    fn branch_and_bound(
        &self,
        root: Bounds,
        objective: &[(usize, i64)],
        mut incumbent: Option<(Vec<i64>, i128)>,
    ) -> Option<(Vec<i64>, i128)> {
        let lower_limit: i128 = objective
            .iter()
            .map(|&(j, a)| (a as i128 * root[j].0 as i128).min(a as i128 * root[j].1 as i128))
            .sum();
        let mut stack = vec![root];
        while let Some(mut bounds) = stack.pop() {
            if incumbent.as_ref().is_some_and(|(_, z)| *z <= lower_limit) {
                break;
            }
            if !self.propagate(&mut bounds) {
                continue;
            }
            let Some((values, lp_obj)) = self.relax(&bounds, objective) else {
                continue;
            };
            if let Some((_, z)) = &incumbent {
                if lp_obj.ceil().to_integer() >= BigInt::from(*z) {
                    continue;
                }
            }
            match values.iter().position(|v| !v.is_integer()) {
                Some(j) => {
                    let floor = values[j]
                        .floor()
                        .to_integer()
                        .to_i64()
                        .expect("within bounds");
                    let mut up = bounds.clone();
                    up[j].0 = floor + 1;
                    let mut down = bounds;
                    down[j].1 = floor;
                    stack.push(up);
                    stack.push(down);
                }
                None => {
                    let point: Vec<i64> = values
                        .iter()
                        .map(|v| v.to_integer().to_i64().expect("within bounds"))
                        .collect();
                    let z: i128 = objective
                        .iter()
                        .map(|&(j, a)| a as i128 * point[j] as i128)
                        .sum();
                    incumbent = Some((point, z));
                }
            }
        }
        incumbent
    }
}
