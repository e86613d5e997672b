//! Token-trail regions: markings over all places of a specification in which
//! equally labelled transitions have the same rise and every net starts with
//! the same initial token sum.
//!
//! Minimal regions up to a bound `k` are enumerated by repeatedly solving a
//! minimum-sum ILP and blocking every region found so far.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ilp::{IlpError, IlpModel, LinearConstraint, Relation, SolveOutcome, VarId};
use crate::net::{LabelledNet, Marking, NetError, Specification};
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Ilp(#[from] IlpError),
    #[error("no unique final place in net {net}")]
    NoUniqueFinalPlace { net: usize },
    #[error("bound k must be at least 1")]
    ZeroBound,
    #[error("cannot block the all-zero region")]
    ZeroRegion,
    #[error("value {0} too large for the solver")]
    TooLarge(u64),
}

pub type Result<T, E = RegionError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Synthesis,
    /// Additionally forces every net's final place to stay empty.
    Discovery,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Synthesis => "synthesis",
            Mode::Discovery => "discovery",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub marking: Marking,
    pub k: u64,
}

impl Region {
    pub fn new(marking: Marking, k: u64) -> Self {
        Self { marking, k }
    }

    pub fn get(&self, place: &str) -> u64 {
        self.marking.get(place)
    }

    pub fn is_zero(&self) -> bool {
        self.marking.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RegionProblem {
    pub spec: Specification,
    pub k: u64,
    pub mode: Mode,
    pub max_regions: Option<usize>,
}

impl RegionProblem {
    pub fn new(spec: Specification, k: u64) -> Self {
        Self {
            spec,
            k,
            mode: Mode::Synthesis,
            max_regions: None,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_regions(mut self, cap: usize) -> Self {
        self.max_regions = Some(cap);
        self
    }
}

/// The region ILP plus the bookkeeping needed to extend it.
#[derive(Debug, Clone)]
pub struct RegionIlp {
    pub model: IlpModel,
    /// One variable per specification place, in ingestion order.
    pub place_vars: Vec<VarId>,
    places: Vec<String>,
    k: u64,
    blocks: usize,
}

impl RegionIlp {
    pub fn places(&self) -> &[String] {
        &self.places
    }

    fn region_from(&self, values: &[i64]) -> Region {
        let marking = self
            .places
            .iter()
            .zip(&self.place_vars)
            .map(|(p, v)| (p.clone(), values[v.0] as u64))
            .collect();
        Region::new(marking, self.k)
    }
}

fn to_i64(v: u64) -> Result<i64> {
    i64::try_from(v).map_err(|_| RegionError::TooLarge(v))
}

/// Linear rise expression of transition `t` over the place variables.
fn rise_terms(
    net: &LabelledNet,
    t: usize,
    var_of: &BTreeMap<&str, VarId>,
) -> Result<Vec<(VarId, i64)>> {
    let pnet = net.net();
    let mut terms = Vec::new();
    for &(p, w) in pnet.post_arcs(t) {
        terms.push((var_of[pnet.places()[p].as_str()], to_i64(w)?));
    }
    for &(p, w) in pnet.pre_arcs(t) {
        terms.push((var_of[pnet.places()[p].as_str()], -to_i64(w)?));
    }
    Ok(terms)
}

fn initial_terms(net: &LabelledNet, var_of: &BTreeMap<&str, VarId>) -> Result<Vec<(VarId, i64)>> {
    net.initial()
        .iter()
        .map(|(p, c)| Ok((var_of[p.as_str()], to_i64(c)?)))
        .collect()
}

/// Final place of each net: an explicit override, otherwise the unique place
/// without outgoing arcs.
pub fn discovery_final_places(spec: &Specification) -> Result<BTreeMap<usize, String>> {
    let mut out = BTreeMap::new();
    for (i, net) in spec.nets().iter().enumerate() {
        let place = match spec.final_overrides().get(&i) {
            Some(p) => p.clone(),
            None => match net.net().sink_places().as_slice() {
                [p] => net.net().places()[*p].clone(),
                _ => return Err(RegionError::NoUniqueFinalPlace { net: i + 1 }),
            },
        };
        out.insert(i, place);
    }
    Ok(out)
}

pub fn build_base_model(problem: &RegionProblem) -> Result<RegionIlp> {
    if problem.k == 0 {
        return Err(RegionError::ZeroBound);
    }
    let spec = &problem.spec;
    let k = to_i64(problem.k)?;
    let places = spec.places();
    let mut model = IlpModel::new();
    let place_vars: Vec<VarId> = places
        .iter()
        .map(|p| model.add_variable(format!("p:{p}"), 0, k))
        .collect::<Result<_, _>>()?;
    let var_of: BTreeMap<&str, VarId> = places
        .iter()
        .map(String::as_str)
        .zip(place_vars.iter().copied())
        .collect();
    let nets = spec.nets();

    for label in spec.alphabet() {
        let carriers = spec.transitions_with_label(&label);
        let (n0, t0) = carriers[0];
        let first = rise_terms(&nets[n0], t0, &var_of)?;
        for &(n, t) in &carriers[1..] {
            let other = rise_terms(&nets[n], t, &var_of)?;
            let terms = first
                .iter()
                .copied()
                .chain(other.into_iter().map(|(v, a)| (v, -a)));
            let name = format!(
                "rise:{}={}",
                nets[n0].net().transitions()[t0],
                nets[n].net().transitions()[t]
            );
            model.add_constraint(LinearConstraint::new(name, terms, Relation::Eq, 0))?;
        }
    }

    let pivot = initial_terms(&nets[0], &var_of)?;
    for (i, net) in nets.iter().enumerate().skip(1) {
        let other = initial_terms(net, &var_of)?;
        let terms = pivot
            .iter()
            .copied()
            .chain(other.into_iter().map(|(v, a)| (v, -a)));
        model.add_constraint(LinearConstraint::new(
            format!("initial:1={}", i + 1),
            terms,
            Relation::Eq,
            0,
        ))?;
    }

    if problem.mode == Mode::Discovery {
        for (i, place) in discovery_final_places(spec)? {
            let c = LinearConstraint::new(
                format!("final:{}", i + 1),
                [(var_of[place.as_str()], 1)],
                Relation::Eq,
                0,
            );
            model.add_constraint(c)?;
        }
    }
    Ok(RegionIlp {
        model,
        place_vars,
        places,
        k: problem.k,
        blocks: 0,
    })
}

/// Requires a nonzero region and minimizes its token sum.
pub fn add_seek_constraints(ilp: &mut RegionIlp) -> Result<()> {
    let terms: Vec<(VarId, i64)> = ilp.place_vars.iter().map(|&v| (v, 1)).collect();
    ilp.model.add_constraint(LinearConstraint::new(
        "nonzero",
        terms.iter().copied(),
        Relation::Ge,
        1,
    ))?;
    ilp.model.set_objective(terms)?;
    Ok(())
}

/// Excludes every region that is not strictly below `found` in some
/// positive component.
pub fn add_blocking(ilp: &mut RegionIlp, found: &Region) -> Result<()> {
    if found.is_zero() {
        return Err(RegionError::ZeroRegion);
    }
    let r = ilp.blocks;
    let k = to_i64(ilp.k)?;
    let mut selectors = Vec::new();
    for (place, &pv) in ilp.places.iter().zip(&ilp.place_vars) {
        let s = to_i64(found.get(place))?;
        if s == 0 {
            continue;
        }
        let x = ilp.model.add_variable(format!("x:{r}:{place}"), 0, 1)?;
        ilp.model.add_constraint(LinearConstraint::new(
            format!("block:{r}:{place}:lo"),
            [(pv, 1), (x, k)],
            Relation::Ge,
            s,
        ))?;
        ilp.model.add_constraint(LinearConstraint::new(
            format!("block:{r}:{place}:hi"),
            [(pv, 1), (x, k)],
            Relation::Le,
            k - 1 + s,
        ))?;
        selectors.push((x, 1));
    }
    ilp.model.add_constraint(LinearConstraint::new(
        format!("block:{r}"),
        selectors,
        Relation::Ge,
        1,
    ))?;
    ilp.blocks += 1;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub regions: Vec<Region>,
    /// The region cap was hit; more minimal regions may exist.
    pub truncated: bool,
}

pub fn enumerate_minimal_regions(problem: &RegionProblem) -> Result<Enumeration> {
    let mut ilp = build_base_model(problem)?;
    add_seek_constraints(&mut ilp)?;
    let mut regions = Vec::new();
    loop {
        if problem.max_regions.is_some_and(|cap| regions.len() >= cap) {
            let truncated = ilp.model.solve() != SolveOutcome::Infeasible;
            return Ok(Enumeration { regions, truncated });
        }
        match ilp.model.solve() {
            SolveOutcome::Infeasible => {
                return Ok(Enumeration {
                    regions,
                    truncated: false,
                })
            }
            SolveOutcome::Optimal(s) => {
                let region = ilp.region_from(&s.values);
                add_blocking(&mut ilp, &region)?;
                regions.push(region);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionCondition {
    Bound,
    /// Equally labelled transitions must have the same rise.
    SameRise,
    /// All nets must start with the same initial token sum.
    InitialSum,
}

impl fmt::Display for RegionCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionCondition::Bound => "bound",
            RegionCondition::SameRise => "(IV) same rise",
            RegionCondition::InitialSum => "(V) initial sum",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionViolation {
    pub condition: RegionCondition,
    pub witness: String,
}

/// Rise of transition `t` of `net` under a marking over specification places.
pub fn transition_rise(net: &LabelledNet, r: &Marking, t: usize) -> Result<i128> {
    let pnet = net.net();
    let sum = |arcs: &[(usize, u64)]| {
        arcs.iter()
            .try_fold(0i128, |acc, &(p, w)| {
                (w as i128)
                    .checked_mul(r.get(&pnet.places()[p]) as i128)
                    .and_then(|v| acc.checked_add(v))
            })
            .ok_or(RegionError::Net(NetError::Overflow))
    };
    Ok(sum(pnet.post_arcs(t))? - sum(pnet.pre_arcs(t))?)
}

/// Initial token sum of net `net` under a marking over specification places.
pub fn initial_sum(net: &LabelledNet, r: &Marking) -> Result<i128> {
    net.initial()
        .iter()
        .try_fold(0i128, |acc, (p, c)| {
            (c as i128)
                .checked_mul(r.get(p) as i128)
                .and_then(|v| acc.checked_add(v))
        })
        .ok_or(RegionError::Net(NetError::Overflow))
}

/// Checks the bound, then same-rise, then equal initial sums, without
/// consulting the ILP.
pub fn verify_region(spec: &Specification, r: &Region) -> Result<Verdict<RegionViolation>> {
    let places = spec.places();
    if let Some(p) = r.marking.support().find(|p| !places.contains(p)) {
        return Err(NetError::UnknownPlace(p.clone()).into());
    }
    if let Some((p, _)) = r.marking.iter().find(|&(_, c)| c > r.k) {
        return Ok(Verdict::Invalid(RegionViolation {
            condition: RegionCondition::Bound,
            witness: p.clone(),
        }));
    }
    let nets = spec.nets();
    for label in spec.alphabet() {
        let carriers = spec.transitions_with_label(&label);
        let (n0, t0) = carriers[0];
        let first = transition_rise(&nets[n0], &r.marking, t0)?;
        for &(n, t) in &carriers[1..] {
            if transition_rise(&nets[n], &r.marking, t)? != first {
                return Ok(Verdict::Invalid(RegionViolation {
                    condition: RegionCondition::SameRise,
                    witness: format!(
                        "{} vs {}",
                        nets[n0].net().transitions()[t0],
                        nets[n].net().transitions()[t]
                    ),
                }));
            }
        }
    }
    let pivot = initial_sum(&nets[0], &r.marking)?;
    for (i, net) in nets.iter().enumerate().skip(1) {
        if initial_sum(net, &r.marking)? != pivot {
            return Ok(Verdict::Invalid(RegionViolation {
                condition: RegionCondition::InitialSum,
                witness: format!("net 1 vs net {}", i + 1),
            }));
        }
    }
    Ok(Verdict::Valid)
}
