//! MAX-k-SAT as a z-only multilinear energy.
//!
//! Each clause contributes `H_i = −1 + Π_j ½(1 − s_j z_j)` (minus one unless
//! every literal is false), so `−H_tot(z)` counts satisfied clauses at every
//! `z ∈ {±1}^N`. The energy is stored in correlation form `C = −H`:
//! `C(z) = constant + Σ_S coeffs[S] Π_{j∈S} z_j`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qstate::BlochTensor;
use crate::tensor_norm::OptimizerConfig;
use crate::{Error, Result};

pub const MAX_CLAUSE_LEN: usize = 8;
pub const BRUTEFORCE_MAX_VARS: usize = 24;
/// Dense Bloch embedding is limited to this many variables (`4^N` storage).
pub const BLOCH_MAX_VARS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn from_dimacs(value: i64) -> Self {
        Literal { var: value.unsigned_abs() as usize, negated: value < 0 }
    }

    /// `+1` for a positive literal, `−1` for a negated one.
    pub fn sign(&self) -> f64 {
        if self.negated { -1.0 } else { 1.0 }
    }

    pub fn is_true(&self, assignment: &[bool]) -> bool {
        assignment[self.var - 1] != self.negated
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatInstance {
    num_vars: usize,
    clauses: Vec<Vec<Literal>>,
}

impl SatInstance {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        if num_vars < 1 {
            return Err(Error::Argument("an instance needs at least one variable".into()));
        }
        for (i, clause) in clauses.iter().enumerate() {
            for (j, lit) in clause.iter().enumerate() {
                if lit.var < 1 || lit.var > num_vars {
                    return Err(Error::Argument(format!(
                        "clause {}: variable {} outside 1..={num_vars}",
                        i + 1,
                        lit.var
                    )));
                }
                if clause[..j].iter().any(|l| l.var == lit.var) {
                    return Err(Error::Argument(format!(
                        "clause {}: variable {} appears twice",
                        i + 1,
                        lit.var
                    )));
                }
            }
        }
        Ok(Self { num_vars, clauses })
    }

    /// Builds from DIMACS-style signed integers.
    pub fn from_signed(num_vars: usize, clauses: &[&[i64]]) -> Result<Self> {
        Self::new(
            num_vars,
            clauses
                .iter()
                .map(|c| c.iter().map(|&v| Literal::from_dimacs(v)).collect())
                .collect(),
        )
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    pub fn satisfied_count(&self, assignment: &[bool]) -> Result<usize> {
        if assignment.len() != self.num_vars {
            return Err(Error::Argument(format!(
                "assignment has {} entries, expected {}",
                assignment.len(),
                self.num_vars
            )));
        }
        Ok(self
            .clauses
            .iter()
            .filter(|c| c.iter().any(|l| l.is_true(assignment)))
            .count())
    }

    /// DIMACS CNF: `c` comment lines, one `p cnf V M` header, clauses of
    /// nonzero integers each terminated by `0`. A `%` line ends the input.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if line.starts_with('p') {
                if header.is_some() {
                    return Err(Error::Parse(format!("line {}: second header", lineno + 1)));
                }
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(Error::Parse(format!("line {}: expected `p cnf V M`", lineno + 1)));
                }
                let v = parts[2].parse().map_err(|_| Error::Parse(format!("bad variable count {:?}", parts[2])))?;
                let m = parts[3].parse().map_err(|_| Error::Parse(format!("bad clause count {:?}", parts[3])))?;
                header = Some((v, m));
                continue;
            }
            if header.is_none() {
                return Err(Error::Parse(format!("line {}: clause before header", lineno + 1)));
            }
            for token in line.split_whitespace() {
                let value: i64 = token
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad literal {token:?}", lineno + 1)))?;
                if value == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(Literal::from_dimacs(value));
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        let (num_vars, num_clauses) = header.ok_or_else(|| Error::Parse("missing `p cnf` header".into()))?;
        if clauses.len() != num_clauses {
            return Err(Error::Parse(format!(
                "header declares {num_clauses} clauses, found {}",
                clauses.len()
            )));
        }
        Self::new(num_vars, clauses).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let v = lit.var as i64;
                write!(out, "{} ", if lit.negated { -v } else { v }).unwrap();
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Uniform random k-SAT: each clause draws `k` distinct variables and signs.
pub fn random_ksat(num_vars: usize, num_clauses: usize, k: usize, rng: &mut impl Rng) -> Result<SatInstance> {
    if k > num_vars {
        return Err(Error::Argument(format!("k = {k} exceeds {num_vars} variables")));
    }
    let clauses = (0..num_clauses)
        .map(|_| {
            let vars = rand::seq::index::sample(rng, num_vars, k);
            vars.iter()
                .map(|v| Literal { var: v + 1, negated: rng.random_bool(0.5) })
                .collect()
        })
        .collect();
    SatInstance::new(num_vars, clauses)
}

/// `C(z) = constant + Σ_S coeffs[S] Π_{j∈S} z_j`, the energy being `H = −C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTensor {
    pub num_vars: usize,
    pub constant: f64,
    /// Keys are ascending 1-based variable sets; exact zeros are dropped.
    pub coeffs: BTreeMap<Vec<usize>, f64>,
}

impl EnergyTensor {
    fn empty(num_vars: usize) -> Self {
        Self { num_vars, constant: 0.0, coeffs: BTreeMap::new() }
    }

    fn add(&mut self, key: Vec<usize>, value: f64) {
        if key.is_empty() {
            self.constant += value;
        } else {
            *self.coeffs.entry(key).or_insert(0.0) += value;
        }
    }

    fn prune(mut self) -> Self {
        self.coeffs.retain(|_, v| *v != 0.0);
        self
    }

    /// Constant of `H` (the negated `constant`).
    pub fn energy_constant(&self) -> f64 {
        -self.constant
    }

    /// `C` at a spin assignment, without validation.
    fn correlation(&self, z: &[f64]) -> f64 {
        self.constant
            + self
                .coeffs
                .iter()
                .map(|(s, c)| c * s.iter().map(|&j| z[j - 1]).product::<f64>())
                .sum::<f64>()
    }
}

fn check_clause_lengths(instance: &SatInstance) -> Result<()> {
    match instance.clauses.iter().map(Vec::len).max() {
        Some(k) if k > MAX_CLAUSE_LEN => Err(Error::ResourceLimit(format!(
            "clause of length {k} exceeds the {MAX_CLAUSE_LEN}-literal expansion limit"
        ))),
        _ => Ok(()),
    }
}

/// Falsifying-assignment expansion: per clause of length `k`, the constant
/// gains `1 − 2^{-k}` and each nonempty subset `S` gains `−2^{-k} Π_{j∈S}(−s_j)`.
pub fn encode(instance: &SatInstance) -> Result<EnergyTensor> {
    check_clause_lengths(instance)?;
    let mut t = EnergyTensor::empty(instance.num_vars);
    for clause in &instance.clauses {
        let k = clause.len();
        let w = 0.5f64.powi(k as i32);
        t.add(Vec::new(), 1.0);
        for mask in 0u32..(1 << k) {
            let mut key = Vec::new();
            let mut sign = 1.0;
            for (j, lit) in clause.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    key.push(lit.var);
                    sign *= -lit.sign();
                }
            }
            key.sort_unstable();
            t.add(key, -w * sign);
        }
    }
    Ok(t.prune())
}

/// Satisfying-assignment expansion: `−H_i = Σ_{x satisfies C_i} Π_j ½(1 + x_j z_j)`.
/// Same polynomial as [`encode`] with `2^k − 1` terms per clause.
pub fn encode_satisfying_sum(instance: &SatInstance) -> Result<EnergyTensor> {
    check_clause_lengths(instance)?;
    let mut t = EnergyTensor::empty(instance.num_vars);
    for clause in &instance.clauses {
        let k = clause.len();
        let w = 0.5f64.powi(k as i32);
        for x in 0u32..(1 << k) {
            // bit j set: variable of literal j is true
            let satisfies = clause
                .iter()
                .enumerate()
                .any(|(j, lit)| (x >> j & 1 == 1) != lit.negated);
            if !satisfies {
                continue;
            }
            for mask in 0u32..(1 << k) {
                let mut key = Vec::new();
                let mut sign = 1.0;
                for (j, lit) in clause.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        key.push(lit.var);
                        if x >> j & 1 == 0 {
                            sign = -sign;
                        }
                    }
                }
                key.sort_unstable();
                t.add(key, w * sign);
            }
        }
    }
    Ok(t.prune())
}

/// `H(z)` for `z ∈ {±1}^N`; `−H` is the number of satisfied clauses.
pub fn eval_energy(t: &EnergyTensor, assignment: &[i8]) -> Result<f64> {
    if assignment.len() != t.num_vars {
        return Err(Error::Argument(format!(
            "assignment has {} entries, expected {}",
            assignment.len(),
            t.num_vars
        )));
    }
    if assignment.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::Argument("assignment entries must be ±1".into()));
    }
    let z: Vec<f64> = assignment.iter().map(|&s| s as f64).collect();
    Ok(-t.correlation(&z))
}

pub fn spins_of(assignment: &[bool]) -> Vec<i8> {
    assignment.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BruteForceResult {
    pub max_satisfied: usize,
    /// Every maximizing assignment, ordered by the binary number whose bit
    /// `j − 1` is variable `j`.
    pub maximizers: Vec<Vec<bool>>,
}

fn assignment_of(mask: u32, num_vars: usize) -> Vec<bool> {
    (0..num_vars).map(|j| mask >> j & 1 == 1).collect()
}

/// Exhaustive scan over `2^N` assignments by direct clause evaluation.
pub fn solve_bruteforce(instance: &SatInstance) -> Result<BruteForceResult> {
    let nv = instance.num_vars;
    if nv > BRUTEFORCE_MAX_VARS {
        return Err(Error::ResourceLimit(format!(
            "exhaustive search is limited to {BRUTEFORCE_MAX_VARS} variables, got {nv}"
        )));
    }
    let masks: Vec<(u32, u32)> = instance
        .clauses
        .iter()
        .map(|c| {
            c.iter().fold((0, 0), |(pos, neg), l| {
                let bit = 1u32 << (l.var - 1);
                if l.negated { (pos, neg | bit) } else { (pos | bit, neg) }
            })
        })
        .collect();
    let count = |x: u32| masks.iter().filter(|&&(p, n)| x & p != 0 || !x & n != 0).count();
    const CHUNK: u32 = 1 << 14;
    let total: u64 = 1 << nv;
    let chunks = total.div_ceil(CHUNK as u64) as u32;
    let (best, winners) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = ((c as u64 + 1) * CHUNK as u64).min(total) as u32;
            let mut best = 0;
            let mut winners = Vec::new();
            for x in start..end {
                let s = count(x);
                if s > best {
                    best = s;
                    winners.clear();
                }
                if s == best {
                    winners.push(x);
                }
            }
            (best, winners)
        })
        .reduce(
            || (0, Vec::new()),
            |a, b| match a.0.cmp(&b.0) {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => {
                    let mut w = a.1;
                    w.extend(b.1);
                    (a.0, w)
                }
            },
        );
    let mut winners = winners;
    winners.sort_unstable();
    Ok(BruteForceResult {
        max_satisfied: best,
        maximizers: winners.into_iter().map(|x| assignment_of(x, nv)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TensorSolveResult {
    /// Satisfied clauses at `assignment`; a lower bound on the optimum.
    pub max_satisfied: usize,
    pub assignment: Vec<bool>,
    pub restart_index: usize,
}

// Sign updates z_i ← sign(∂C/∂z_i) in index order until a full pass changes nothing.
fn sign_descent(t: &EnergyTensor, incidence: &[Vec<(&Vec<usize>, f64)>], mut z: Vec<f64>, max_iterations: usize) -> Vec<f64> {
    for _ in 0..max_iterations {
        let mut changed = false;
        for i in 0..t.num_vars {
            let field: f64 = incidence[i]
                .iter()
                .map(|(s, c)| c * s.iter().filter(|&&j| j != i + 1).map(|&j| z[j - 1]).product::<f64>())
                .sum();
            let next = if field > 0.0 {
                1.0
            } else if field < 0.0 {
                -1.0
            } else {
                z[i]
            };
            if next != z[i] {
                z[i] = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    z
}

/// Mean-field maximization of `C` with every `Θ_i` pinned to `±ẑ`, so each
/// site update is the sign of its local field. Starts are all-true,
/// all-false, then `config.restarts` random assignments (start `r` seeded
/// with `seed + r`); the best wins, ties to the earliest start.
pub fn solve_via_tensor(instance: &SatInstance, config: &OptimizerConfig) -> Result<TensorSolveResult> {
    config.validate()?;
    let t = encode(instance)?;
    let nv = instance.num_vars;
    let mut incidence: Vec<Vec<(&Vec<usize>, f64)>> = vec![Vec::new(); nv];
    for (s, &c) in &t.coeffs {
        for &j in s {
            incidence[j - 1].push((s, c));
        }
    }
    let mut starts = vec![vec![1.0; nv], vec![-1.0; nv]];
    starts.extend((0..config.restarts).map(|r| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
        (0..nv).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
    }));
    let results: Vec<(usize, Vec<bool>)> = starts
        .into_par_iter()
        .map(|z| {
            let z = sign_descent(&t, &incidence, z, config.max_iterations);
            let assignment: Vec<bool> = z.iter().map(|&v| v > 0.0).collect();
            let sat = instance.satisfied_count(&assignment).expect("length matches");
            (sat, assignment)
        })
        .collect();
    let (index, (sat, assignment)) = results
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1 .0 > best.1 .0 { cur } else { best })
        .expect("at least two starts");
    Ok(TensorSolveResult { max_satisfied: sat, assignment, restart_index: index })
}

/// Embeds the monomials as a Bloch-style tensor (digit 3 on `S`, 0 elsewhere).
/// The constant is returned separately since the all-zero index is excluded.
pub fn to_bloch_tensor(t: &EnergyTensor) -> Result<(BlochTensor, f64)> {
    if t.num_vars > BLOCH_MAX_VARS {
        return Err(Error::ResourceLimit(format!(
            "dense embedding is limited to {BLOCH_MAX_VARS} variables"
        )));
    }
    let mut n = BlochTensor::zeros(t.num_vars);
    for (s, &c) in &t.coeffs {
        let mut digits = vec![0; t.num_vars];
        for &j in s {
            digits[j - 1] = 3;
        }
        n.set_digits(&digits, c);
    }
    Ok((n, t.constant))
}
