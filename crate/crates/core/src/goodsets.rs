//! Good sets: (q+1)-sets of pencil labels (α, u, v) whose pairwise ratios
//! `u/v` and conic parameters `α^{1−q}uv` are all distinct, their plane
//! model in PG(2,q²), exhaustive enumeration, and closed-form counts.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field_tower::{Fe, Field, LambdaSystem};
use crate::proj_geometry::Point2;

/// A pencil label: `α = Λ[alpha_idx]`, `u = ω^u_pow`, `v = ω^v_pow`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Candidate {
    pub alpha_idx: usize,
    pub u_pow: usize,
    pub v_pow: usize,
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(α{}, ω^{}, ω^{})", self.alpha_idx, self.u_pow, self.v_pow)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoodSetError {
    #[error("expected {expected} candidates, got {got}")]
    WrongCardinality { expected: usize, got: usize },
    #[error("candidate {0} appears twice")]
    DuplicateTriple(Candidate),
    #[error("candidate {0} is not a label in 𝓘 × 𝒰 × 𝒰")]
    InvalidCandidate(Candidate),
    #[error("not a good set: {0}")]
    NotGood(Violation),
    #[error("matrix is not in the group generated by diagonal unit matrices and the swap")]
    NotInG1,
}

/// Which pairwise condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// `u_i v_j − v_i u_j = 0`: both points lie on the same line s_c.
    RepeatedRatio,
    /// `α_i u_i (α_j v_j)^q − (α_i v_i)^q α_j u_j = 0`: same conic bundle.
    RepeatedConic,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::RepeatedRatio => write!(f, "repeated ratio u/v"),
            Condition::RepeatedConic => write!(f, "repeated conic parameter"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub first: Candidate,
    pub second: Candidate,
    pub condition: Condition,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} between {} and {}", self.condition, self.first, self.second)
    }
}

/// q+1 candidates in canonical (sorted) order. Goodness is not implied by
/// the type; use [`check_good`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct GoodSet {
    entries: Vec<Candidate>,
}

impl GoodSet {
    pub fn from_unchecked(mut entries: Vec<Candidate>) -> GoodSet {
        entries.sort();
        GoodSet { entries }
    }

    /// Sorts and validates the candidates.
    pub fn new(lambda: &LambdaSystem, entries: Vec<Candidate>) -> Result<GoodSet, GoodSetError> {
        match check_good(lambda, &entries)? {
            None => Ok(GoodSet::from_unchecked(entries)),
            Some(v) => Err(GoodSetError::NotGood(v)),
        }
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    /// Replaces every label `(α,u,v)` with `N(α) = −1` by whichever of it and
    /// `(α,−u,−v)` has the smaller u exponent. Both labels give the same
    /// pencil up to τ_η and hence the same parallelism.
    pub fn flip_canonical(&self, lambda: &LambdaSystem) -> GoodSet {
        let q = lambda.q();
        let half = (q + 1) / 2;
        let entries = self
            .entries
            .iter()
            .map(|c| {
                if q % 2 == 1 && lambda.has_norm_minus_one(c.alpha_idx) && c.u_pow >= half {
                    flip(lambda, *c)
                } else {
                    *c
                }
            })
            .collect();
        GoodSet::from_unchecked(entries)
    }
}

/// `(α,u,v) ↦ (α,−u,−v)` (odd q).
pub fn flip(lambda: &LambdaSystem, c: Candidate) -> Candidate {
    let q = lambda.q();
    let half = (q + 1) / 2;
    Candidate { alpha_idx: c.alpha_idx, u_pow: (c.u_pow + half) % (q + 1), v_pow: (c.v_pow + half) % (q + 1) }
}

fn unit(f: &Field, pow: usize) -> Fe {
    f.exp(pow * (f.q() - 1))
}

fn validate(lambda: &LambdaSystem, cands: &[Candidate]) -> Result<(), GoodSetError> {
    let q = lambda.q();
    if cands.len() != q + 1 {
        return Err(GoodSetError::WrongCardinality { expected: q + 1, got: cands.len() });
    }
    for c in cands {
        if !lambda.in_i(c.alpha_idx) || c.u_pow > q || c.v_pow > q {
            return Err(GoodSetError::InvalidCandidate(*c));
        }
    }
    let mut seen = HashSet::new();
    for c in cands {
        if !seen.insert(*c) {
            return Err(GoodSetError::DuplicateTriple(*c));
        }
    }
    Ok(())
}

/// The two pairwise conditions, evaluated literally in GF(q²). Returns the
/// first violating pair in input order.
pub fn check_good(lambda: &LambdaSystem, cands: &[Candidate]) -> Result<Option<Violation>, GoodSetError> {
    validate(lambda, cands)?;
    let f = lambda.field();
    let vals: Vec<(Fe, Fe, Fe)> =
        cands.iter().map(|c| (lambda.alpha(c.alpha_idx), unit(f, c.u_pow), unit(f, c.v_pow))).collect();
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let (ai, ui, vi) = vals[i];
            let (aj, uj, vj) = vals[j];
            let ratio = f.sub(f.mul(ui, vj), f.mul(vi, uj));
            let v = |condition| Some(Violation { first: cands[i], second: cands[j], condition });
            if ratio.is_zero() {
                return Ok(v(Condition::RepeatedRatio));
            }
            let lhs = f.mul(f.mul(ai, ui), f.frob(f.mul(aj, vj)));
            let rhs = f.mul(f.frob(f.mul(ai, vi)), f.mul(aj, uj));
            if f.sub(lhs, rhs).is_zero() {
                return Ok(v(Condition::RepeatedConic));
            }
        }
    }
    Ok(None)
}

pub fn is_good(lambda: &LambdaSystem, cands: &[Candidate]) -> Result<bool, GoodSetError> {
    Ok(check_good(lambda, cands)?.is_none())
}

/// `ε(α,u,v) = (1, αu, αv)`.
pub fn epsilon_point(lambda: &LambdaSystem, c: &Candidate) -> Point2 {
    let f = lambda.field();
    let a = lambda.alpha(c.alpha_idx);
    Point2::new(f, [Fe::ONE, f.mul(a, unit(f, c.u_pow)), f.mul(a, unit(f, c.v_pow))]).unwrap()
}

pub fn epsilon(lambda: &LambdaSystem, gs: &GoodSet) -> Vec<Point2> {
    gs.entries.iter().map(|c| epsilon_point(lambda, c)).collect()
}

/// Inverse of ε on the point set 𝒵.
pub fn epsilon_inverse(lambda: &LambdaSystem, p: &Point2) -> Option<Candidate> {
    let f = lambda.field();
    let [x0, x1, x2] = p.coords();
    if x0 != Fe::ONE || x1.is_zero() || x2.is_zero() {
        return None;
    }
    lambda.i_set().iter().find_map(|&i| {
        let a = lambda.alpha(i);
        let u = f.unit_index(f.div(x1, a))?;
        let v = f.unit_index(f.div(x2, a))?;
        Some(Candidate { alpha_idx: i, u_pow: u, v_pow: v })
    })
}

/// The plane model: 𝒵_α, the lines `s_c: X2 = c X3` and the conics
/// `C_{αb}: α^{q+1} b X1² − X2 X3 = 0`.
pub struct PlaneModel<'a> {
    lambda: &'a LambdaSystem,
}

impl<'a> PlaneModel<'a> {
    pub fn new(lambda: &'a LambdaSystem) -> Self {
        PlaneModel { lambda }
    }

    /// 𝒵_α for `alpha_idx`, in (u, v) exponent order.
    pub fn z_points(&self, alpha_idx: usize) -> Vec<Point2> {
        let q = self.lambda.q();
        (0..=q)
            .flat_map(|u| (0..=q).map(move |v| (u, v)))
            .map(|(u, v)| epsilon_point(self.lambda, &Candidate { alpha_idx, u_pow: u, v_pow: v }))
            .collect()
    }

    pub fn on_line(&self, p: &Point2, c: Fe) -> bool {
        let f = self.lambda.field();
        let [_, x2, x3] = p.coords();
        x2 == f.mul(c, x3)
    }

    pub fn on_conic(&self, p: &Point2, alpha_idx: usize, b: Fe) -> bool {
        let f = self.lambda.field();
        let [x1, x2, x3] = p.coords();
        let n = self.lambda.norm(alpha_idx);
        f.sub(f.mul(f.mul(n, b), f.mul(x1, x1)), f.mul(x2, x3)).is_zero()
    }

    /// Whether the point lies on the bundle `𝒞_b = ∪_{α∈𝓘} C_{αb}`.
    pub fn on_bundle(&self, p: &Point2, b: Fe) -> bool {
        self.lambda.i_set().iter().any(|&a| self.on_conic(p, a, b))
    }

    /// `|s_c ∩ C_{αb} ∩ 𝒵_β|` for all α, β ∈ 𝓘 (rows α, columns β, both
    /// in 𝓘 order).
    pub fn intersection_profile(&self, c: Fe, b: Fe) -> Vec<Vec<usize>> {
        let i_set = self.lambda.i_set();
        i_set
            .iter()
            .map(|&a| {
                i_set
                    .iter()
                    .map(|&beta| {
                        self.z_points(beta).iter().filter(|p| self.on_line(p, c) && self.on_conic(p, a, b)).count()
                    })
                    .collect()
            })
            .collect()
    }
}

/// The geometric form of goodness: every line `s_c` and every bundle `𝒞_b`
/// (c, b ∈ 𝒰) meets `ε(cands)` exactly once.
pub fn is_good_geometric(lambda: &LambdaSystem, cands: &[Candidate]) -> Result<bool, GoodSetError> {
    validate(lambda, cands)?;
    let f = lambda.field();
    let model = PlaneModel::new(lambda);
    let pts: Vec<Point2> = cands.iter().map(|c| epsilon_point(lambda, c)).collect();
    let circle = f.unit_circle();
    let lines_ok = circle.iter().all(|&c| pts.iter().filter(|p| model.on_line(p, c)).count() == 1);
    let bundles_ok = circle.iter().all(|&b| pts.iter().filter(|p| model.on_bundle(p, b)).count() == 1);
    Ok(lines_ok && bundles_ok)
}

/// Which candidates the enumeration may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateFilter {
    All,
    /// Drop labels with `N(α) = −1`.
    ExcludeNormMinusOne,
}

#[derive(Clone, Copy, Debug)]
struct SlotCandidate {
    cand: Candidate,
    conic: u8,
}

/// Exhaustive search for good sets. Slot k holds the labels on the line
/// `s_c` with `c = ω^k`; a good set takes one label per slot with pairwise
/// distinct conic parameters.
pub struct GoodSetSearch {
    q: usize,
    slots: Vec<Vec<SlotCandidate>>,
}

impl GoodSetSearch {
    pub fn new(lambda: &LambdaSystem, filter: CandidateFilter) -> GoodSetSearch {
        let f = lambda.field();
        let q = lambda.q();
        let mut slots = vec![Vec::new(); q + 1];
        for &a in lambda.i_set() {
            if filter == CandidateFilter::ExcludeNormMinusOne && lambda.has_norm_minus_one(a) {
                continue;
            }
            let alpha = lambda.alpha(a);
            let twist = f.div(alpha, f.frob(alpha));
            for u_pow in 0..=q {
                for v_pow in 0..=q {
                    let (u, v) = (unit(f, u_pow), unit(f, v_pow));
                    let c = f.unit_index(f.div(u, v)).unwrap();
                    let b = f.unit_index(f.mul(twist, f.mul(u, v))).unwrap();
                    slots[c].push(SlotCandidate { cand: Candidate { alpha_idx: a, u_pow, v_pow }, conic: b as u8 });
                }
            }
        }
        GoodSetSearch { q, slots }
    }

    /// Number of candidate labels per slot.
    pub fn slot_sizes(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.len()).collect()
    }

    /// `W[c][b]`: labels on `s_c` with conic parameter `ω^b`.
    pub fn weight_matrix(&self) -> Vec<Vec<u64>> {
        self.slots
            .iter()
            .map(|s| {
                let mut row = vec![0u64; self.q + 1];
                for sc in s {
                    row[sc.conic as usize] += 1;
                }
                row
            })
            .collect()
    }

    fn count_from(&self, slot: usize, used: u32) -> u64 {
        let last = self.slots.len() - 1;
        if slot == last {
            return self.slots[slot].iter().filter(|sc| used & (1 << sc.conic) == 0).count() as u64;
        }
        self.slots[slot]
            .iter()
            .filter(|sc| used & (1 << sc.conic) == 0)
            .map(|sc| self.count_from(slot + 1, used | (1 << sc.conic)))
            .sum()
    }

    fn pool(jobs: usize) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
    }

    /// Exhaustive backtracking count; subtrees under the first slot are
    /// distributed over `jobs` workers.
    pub fn count(&self, jobs: usize) -> u64 {
        let first = &self.slots[0];
        let run = || first.par_iter().map(|sc| self.count_from(1, 1 << sc.conic)).sum::<u64>();
        if jobs <= 1 {
            first.iter().map(|sc| self.count_from(1, 1 << sc.conic)).sum()
        } else {
            Self::pool(jobs).install(run)
        }
    }

    fn visit(&self, slot: usize, used: u32, stack: &mut Vec<Candidate>, limit: usize, out: &mut Vec<GoodSet>) -> bool {
        if out.len() >= limit {
            return false;
        }
        if slot == self.slots.len() {
            out.push(GoodSet::from_unchecked(stack.clone()));
            return true;
        }
        for sc in &self.slots[slot] {
            if used & (1 << sc.conic) != 0 {
                continue;
            }
            stack.push(sc.cand);
            let go_on = self.visit(slot + 1, used | (1 << sc.conic), stack, limit, out);
            stack.pop();
            if !go_on {
                return false;
            }
        }
        true
    }

    fn subtree(&self, first: &SlotCandidate, limit: usize) -> Vec<GoodSet> {
        let mut out = Vec::new();
        let mut stack = vec![first.cand];
        self.visit(1, 1 << first.conic, &mut stack, limit, &mut out);
        out
    }

    /// Good sets in search order, at most `limit`. The order does not
    /// depend on `jobs`.
    pub fn collect(&self, jobs: usize, limit: Option<usize>) -> Vec<GoodSet> {
        let mut all = Vec::new();
        self.for_each(jobs, limit, |gs| all.push(gs.clone()));
        all
    }

    /// Calls `sink` on each good set in search order. With several jobs the
    /// first-slot subtrees are computed in parallel batches and emitted in
    /// slot order.
    pub fn for_each(&self, jobs: usize, limit: Option<usize>, mut sink: impl FnMut(&GoodSet)) {
        let limit = limit.unwrap_or(usize::MAX);
        let mut emitted = 0usize;
        let first = &self.slots[0];
        if jobs <= 1 {
            for sc in first {
                for gs in self.subtree(sc, limit - emitted) {
                    sink(&gs);
                    emitted += 1;
                }
                if emitted >= limit {
                    return;
                }
            }
            return;
        }
        let pool = Self::pool(jobs);
        for batch in first.chunks(jobs) {
            let remaining = limit - emitted;
            let parts: Vec<Vec<GoodSet>> =
                pool.install(|| batch.par_iter().map(|sc| self.subtree(sc, remaining)).collect());
            for gs in parts.into_iter().flatten() {
                if emitted >= limit {
                    return;
                }
                sink(&gs);
                emitted += 1;
            }
        }
    }
}

/// The permanent of the slot-by-conic weight matrix, by dynamic programming
/// over sets of used conic parameters. Independent of the backtracking.
pub fn count_by_permanent(lambda: &LambdaSystem, filter: CandidateFilter) -> BigUint {
    let w = GoodSetSearch::new(lambda, filter).weight_matrix();
    let n = w.len();
    let mut dp = vec![0u128; 1 << n];
    dp[0] = 1;
    for mask in 0usize..(1 << n) {
        let row = mask.count_ones() as usize;
        if dp[mask] == 0 || row == n {
            continue;
        }
        for (b, &weight) in w[row].iter().enumerate() {
            if mask & (1 << b) == 0 && weight > 0 {
                dp[mask | (1 << b)] += dp[mask] * weight as u128;
            }
        }
    }
    BigUint::from(dp[(1 << n) - 1])
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

fn binomial(n: usize, k: usize) -> BigUint {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Sizes of 𝓘, 𝓘₁, 𝓘₂ restricted by the filter.
pub fn filtered_sizes(lambda: &LambdaSystem, filter: CandidateFilter) -> (usize, usize, usize) {
    let keep = |i: &&usize| filter == CandidateFilter::All || !lambda.has_norm_minus_one(**i);
    (
        lambda.i_set().iter().filter(keep).count(),
        lambda.i1().iter().filter(keep).count(),
        lambda.i2().iter().filter(keep).count(),
    )
}

/// Exact number of good sets as a closed form, summing over how many
/// conic parameters of each sign are matched within 𝓘₁:
/// even q: `|𝓘|^{q+1}(q+1)!`; odd q with n = (q+1)/2:
/// `(n!)² Σ_h C(n,h)² (2|𝓘₁|)^{2h} (2|𝓘₂|)^{2(n−h)}`.
pub fn count_closed_form(lambda: &LambdaSystem, filter: CandidateFilter) -> BigUint {
    let q = lambda.q();
    let (i, i1, i2) = filtered_sizes(lambda, filter);
    if q % 2 == 0 {
        return BigUint::from(i).pow(q as u32 + 1) * factorial(q + 1);
    }
    let n = (q + 1) / 2;
    let x = BigUint::from(2 * i1);
    let y = BigUint::from(2 * i2);
    let sum = (0..=n).fold(BigUint::zero(), |acc, h| {
        let c = binomial(n, h);
        acc + &c * &c * x.pow(2 * h as u32) * y.pow(2 * (n - h) as u32)
    });
    factorial(n) * factorial(n) * sum
}

/// Closed forms as printed in the literature this toolkit checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountFormula {
    /// Even q: `|𝓘|^{q+1}(q+1)!` with `|𝓘| = (q−2)/2`.
    AllEven,
    /// Even q, the printed simplification `((q−1)/2)^{q+1}(q+1)!`.
    AllEvenSimplified,
    /// Odd q: `(|𝓘₁||𝓘₂|)^{(q+1)/2} ∏_{i=0}^{(q−1)/2}(q+1−2i)²`.
    AllOdd,
    /// Odd q, the printed case split by q mod 4.
    AllOddSimplified,
    /// Odd q, labels with `N(α) ≠ −1` only, printed case split by q mod 4.
    ExcludeMinusOneOdd,
}

impl CountFormula {
    pub fn name(self) -> &'static str {
        match self {
            CountFormula::AllEven => "even |I|^(q+1)(q+1)!",
            CountFormula::AllEvenSimplified => "even ((q-1)/2)^(q+1)(q+1)!",
            CountFormula::AllOdd => "odd (|I1||I2|)^((q+1)/2) prod",
            CountFormula::AllOddSimplified => "odd by q mod 4",
            CountFormula::ExcludeMinusOneOdd => "odd, no norm -1, by q mod 4",
        }
    }

    pub fn applies_to(self, q: usize) -> bool {
        match self {
            CountFormula::AllEven | CountFormula::AllEvenSimplified => q % 2 == 0,
            _ => q % 2 == 1,
        }
    }

    /// The enumeration the formula claims to count.
    pub fn filter(self) -> CandidateFilter {
        match self {
            CountFormula::ExcludeMinusOneOdd => CandidateFilter::ExcludeNormMinusOne,
            _ => CandidateFilter::All,
        }
    }

    pub fn all() -> [CountFormula; 5] {
        [
            CountFormula::AllEven,
            CountFormula::AllEvenSimplified,
            CountFormula::AllOdd,
            CountFormula::AllOddSimplified,
            CountFormula::ExcludeMinusOneOdd,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("formula {formula:?} needs {parity} q, got q = {q}")]
pub struct ParityMismatch {
    pub formula: CountFormula,
    pub parity: &'static str,
    pub q: usize,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn odd_product(q: usize) -> BigRational {
    (0..=(q - 1) / 2).fold(BigRational::one(), |acc, i| {
        let t = rat((q + 1 - 2 * i) as i64, 1);
        acc * &t * &t
    })
}

fn rpow(x: BigRational, e: usize) -> BigRational {
    num_traits::pow(x, e)
}

/// Evaluates a printed count formula exactly (it need not be an integer).
pub fn count_formula(q: usize, formula: CountFormula) -> Result<BigRational, ParityMismatch> {
    if !formula.applies_to(q) {
        let parity = if q % 2 == 0 { "odd" } else { "even" };
        return Err(ParityMismatch { formula, parity, q });
    }
    let qi = q as i64;
    let fact = BigRational::from_integer(factorial(q + 1).into());
    let half = (q + 1) / 2;
    Ok(match formula {
        CountFormula::AllEven => rpow(rat(qi - 2, 2), q + 1) * fact,
        CountFormula::AllEvenSimplified => rpow(rat(qi - 1, 2), q + 1) * fact,
        CountFormula::AllOdd => {
            let (i1, i2) = if q % 4 == 1 { ((qi - 1) / 4, (qi - 1) / 4) } else { ((qi - 3) / 4, (qi + 1) / 4) };
            rpow(rat(i1 * i2, 1), half) * odd_product(q)
        }
        CountFormula::AllOddSimplified => {
            let base = if q % 4 == 1 { rpow(rat(qi - 1, 4), q + 1) } else { rpow(rat((qi + 1) * (qi - 3), 16), half) };
            base * odd_product(q)
        }
        CountFormula::ExcludeMinusOneOdd => {
            let base = if q % 4 == 1 { rpow(rat((qi - 5) * (qi - 1), 16), half) } else { rpow(rat(qi - 3, 4), q + 1) };
            base * odd_product(q)
        }
    })
}

/// Renders a rational as an integer when it is one.
pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `∏_{i=0}^{(q−1)/2}(q+1−2i)²` against `(q²−1)^{(q+1)/2}` for odd q.
pub fn product_vs_power(q: usize) -> (BigUint, BigUint) {
    let prod = (0..=(q - 1) / 2).fold(BigUint::one(), |acc, i| {
        let t = BigUint::from(q + 1 - 2 * i);
        acc * &t * &t
    });
    let power = BigUint::from(q * q - 1).pow((q as u32 + 1) / 2);
    (prod, power)
}

/// An element of G₁ = ⟨H, δ⟩ acting on PG(2,q²): `diag(1, ω^u, ω^v)`,
/// followed by the swap of the last two coordinates when `swap` is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct G1Element {
    pub u_pow: usize,
    pub v_pow: usize,
    pub swap: bool,
}

impl G1Element {
    pub const DELTA: G1Element = G1Element { u_pow: 0, v_pow: 0, swap: true };

    /// Recognizes a 3×3 matrix (up to scalar) as an element of G₁.
    pub fn from_matrix(f: &Field, m: [[Fe; 3]; 3]) -> Result<G1Element, GoodSetError> {
        let s = f.inv(m[0][0]).ok_or(GoodSetError::NotInG1)?;
        let m = m.map(|r| r.map(|x| f.mul(x, s)));
        let z = Fe::ZERO;
        if m[0][1] != z || m[0][2] != z || m[1][0] != z || m[2][0] != z {
            return Err(GoodSetError::NotInG1);
        }
        let unit_of = |x: Fe| f.unit_index(x).ok_or(GoodSetError::NotInG1);
        if m[1][2] == z && m[2][1] == z {
            return Ok(G1Element { u_pow: unit_of(m[1][1])?, v_pow: unit_of(m[2][2])?, swap: false });
        }
        if m[1][1] == z && m[2][2] == z {
            // [[1,0,0],[0,0,x],[0,y,0]] = swap ∘ diag(1, y, x)
            return Ok(G1Element { u_pow: unit_of(m[2][1])?, v_pow: unit_of(m[1][2])?, swap: true });
        }
        Err(GoodSetError::NotInG1)
    }

    pub fn apply(&self, q: usize, c: Candidate) -> Candidate {
        let u = (c.u_pow + self.u_pow) % (q + 1);
        let v = (c.v_pow + self.v_pow) % (q + 1);
        if self.swap {
            Candidate { alpha_idx: c.alpha_idx, u_pow: v, v_pow: u }
        } else {
            Candidate { alpha_idx: c.alpha_idx, u_pow: u, v_pow: v }
        }
    }
}

/// `ε^{-1}(ε(P)^g)`.
pub fn apply_g1(lambda: &LambdaSystem, gs: &GoodSet, g: G1Element) -> Result<GoodSet, GoodSetError> {
    let q = lambda.q();
    GoodSet::new(lambda, gs.entries.iter().map(|c| g.apply(q, *c)).collect())
}

/// The dual set `(α,u,v) ↦ (α,v,u)`.
pub fn dual(lambda: &LambdaSystem, gs: &GoodSet) -> Result<GoodSet, GoodSetError> {
    apply_g1(lambda, gs, G1Element::DELTA)
}

/// `{(α, u, v₀) : u ∈ 𝒰}` for fixed α ∈ 𝓘 and v₀ ∈ 𝒰.
pub fn beutelspacher(lambda: &LambdaSystem, alpha_idx: usize, v_pow: usize) -> Result<GoodSet, GoodSetError> {
    let q = lambda.q();
    GoodSet::new(lambda, (0..=q).map(|u| Candidate { alpha_idx, u_pow: u, v_pow }).collect())
}

/// Total good-set count as a `u64`, exposed for reports.
pub fn to_u64(x: &BigUint) -> Option<u64> {
    x.to_u64()
}
