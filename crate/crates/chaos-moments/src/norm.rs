//! The chaos norm: `sup sum_I a_I prod_r (1 + v^(r)_{i_r})` over budget
//! sets, by block-coordinate ascent with multi-start.
//!
//! Holding every block but one fixed, the objective is linear in the free
//! block's `(1 + v_i)` with nonnegative coefficients, so each block update
//! is a global separable maximization (`linear_max_over_budget`). Restarts
//! from seeded random feasible points guard against block-level local
//! maxima; the zero point is always included as a start. The flattened
//! variant optimizes `d * k` layers whose budget exponents are composed
//! with `t^k`, and is additionally seeded with the lifted single-layer
//! solution `v_{i,l} = w_i^(1/k)`, which realizes the flattening lower
//! bound exactly.

use rand::Rng;
use serde::Serialize;

use crate::budget::{linear_max_over_budget, BudgetSet};
use crate::error::{Error, Result};
use crate::exec;
use crate::stats::{chunk_rng, derive_seed, exp_draw};
use crate::tensor::CoefficientTensor;

/// Relative improvement threshold that stops the ascent sweeps.
const ASCENT_TOL: f64 = 1e-8;
const MAX_SWEEPS: u32 = 500;
/// Entries per accumulation chunk; fixed so parallel and sequential builds
/// sum in the same order.
const ENTRY_CHUNK: usize = 8192;
/// Base seed for the solver's internal restart streams.
const SOLVER_SEED: u64 = 0x5eed_ba5e_0f_c4a0;

/// Brute-force oracle caps.
pub const ORACLE_MAX_SIDE: usize = 4;
pub const ORACLE_MAX_ORDER: usize = 2;
pub const ORACLE_MAX_GRID: usize = 50;

/// Solver outcome: the value, one maximizer per block (slot-major, then
/// layer), and convergence diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct NormResult {
    pub value: f64,
    pub maximizers: Vec<Vec<f64>>,
    pub iterations: u32,
    pub restarts_used: u32,
    pub converged: bool,
}

struct LayeredProblem<'a> {
    tensor: &'a CoefficientTensor,
    /// One budget set per slot; every layer of a slot shares it.
    budgets: Vec<BudgetSet>,
    layers: usize,
}

impl<'a> LayeredProblem<'a> {
    fn order(&self) -> usize {
        self.tensor.order()
    }

    fn side(&self) -> usize {
        self.tensor.side()
    }

    fn blocks(&self) -> usize {
        self.order() * self.layers
    }

    /// `phi[s][i] = prod_l (1 + v[s,l][i])`.
    fn slot_factors(&self, v: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.order())
            .map(|s| {
                (0..self.side())
                    .map(|i| {
                        (0..self.layers)
                            .map(|l| 1.0 + v[s * self.layers + l][i])
                            .product()
                    })
                    .collect()
            })
            .collect()
    }

    fn objective_from_factors(&self, phi: &[Vec<f64>]) -> f64 {
        let entries = self.tensor.entries();
        let d = self.order();
        let n = self.side();
        let chunks = entries.len().div_ceil(ENTRY_CHUNK);
        let partials = exec::map_range(chunks, |c| {
            let lo = c * ENTRY_CHUNK;
            let hi = (lo + ENTRY_CHUNK).min(entries.len());
            let mut idx = vec![0usize; d];
            let mut acc = 0.0f64;
            for (off, &a) in entries[lo..hi].iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let mut f = lo + off;
                for slot in (0..d).rev() {
                    idx[slot] = f % n;
                    f /= n;
                }
                let mut term = a;
                for (s, phi_s) in phi.iter().enumerate() {
                    term *= phi_s[idx[s]];
                }
                acc += term;
            }
            acc
        });
        partials.iter().sum()
    }

    fn objective(&self, v: &[Vec<f64>]) -> f64 {
        self.objective_from_factors(&self.slot_factors(v))
    }

    /// Coefficients of the linear subproblem for block `(r, l)`:
    /// `c[i] = sum_{I: i_r = i} a_I prod_{s != r} phi_s(i_s) * psi(i)` where
    /// `psi` multiplies slot `r`'s remaining layers.
    fn block_coefficients(&self, v: &[Vec<f64>], r: usize, l: usize) -> Vec<f64> {
        let n = self.side();
        let d = self.order();
        let phi = self.slot_factors(v);
        let psi: Vec<f64> = (0..n)
            .map(|i| {
                (0..self.layers)
                    .filter(|&l2| l2 != l)
                    .map(|l2| 1.0 + v[r * self.layers + l2][i])
                    .product()
            })
            .collect();
        let entries = self.tensor.entries();
        let chunks = entries.len().div_ceil(ENTRY_CHUNK);
        let partials = exec::map_range(chunks, |c| {
            let lo = c * ENTRY_CHUNK;
            let hi = (lo + ENTRY_CHUNK).min(entries.len());
            let mut idx = vec![0usize; d];
            let mut acc = vec![0.0f64; n];
            for (off, &a) in entries[lo..hi].iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let mut f = lo + off;
                for slot in (0..d).rev() {
                    idx[slot] = f % n;
                    f /= n;
                }
                let mut term = a;
                for (s, phi_s) in phi.iter().enumerate() {
                    if s != r {
                        term *= phi_s[idx[s]];
                    }
                }
                let i = idx[r];
                acc[i] += term * psi[i];
            }
            acc
        });
        let mut c = vec![0.0f64; n];
        for part in partials {
            for (ci, pi) in c.iter_mut().zip(part) {
                *ci += pi;
            }
        }
        c
    }

    fn ascend(&self, start: Vec<Vec<f64>>) -> Result<(f64, Vec<Vec<f64>>, u32, bool)> {
        let mut v = start;
        let mut obj = self.objective(&v);
        let mut converged = false;
        let mut sweeps = 0;
        for _ in 0..MAX_SWEEPS {
            sweeps += 1;
            for r in 0..self.order() {
                for l in 0..self.layers {
                    let c = self.block_coefficients(&v, r, l);
                    let (_, vstar) = linear_max_over_budget(&c, &self.budgets[r])?;
                    v[r * self.layers + l] = vstar;
                }
            }
            let new_obj = self.objective(&v);
            if new_obj - obj <= ASCENT_TOL * obj.abs().max(1e-300) {
                obj = new_obj.max(obj);
                converged = true;
                break;
            }
            obj = new_obj;
        }
        Ok((obj, v, sweeps, converged))
    }

    fn zero_start(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.side()]; self.blocks()]
    }

    /// Random feasible start: per block, budgets drawn from a flat Dirichlet
    /// over the simplex `sum b_i = p`, mapped through the exponent inverses.
    fn random_start(&self, restart: u64) -> Vec<Vec<f64>> {
        let mut rng = chunk_rng(derive_seed(SOLVER_SEED, 7), restart);
        let n = self.side();
        (0..self.blocks())
            .map(|b| {
                let slot = b / self.layers;
                let p = self.budgets[slot].budget();
                let g: Vec<f64> = (0..n).map(|_| exp_draw(&mut rng)).collect();
                let total: f64 = g.iter().sum();
                if total <= 0.0 || p == 0.0 {
                    return vec![0.0; n];
                }
                (0..n)
                    .map(|i| self.budgets[slot].exponent(i).inverse(p * g[i] / total))
                    .collect()
            })
            .collect()
    }

    fn solve(&self, restarts: u32, extra_starts: Vec<Vec<Vec<f64>>>) -> Result<NormResult> {
        let mut starts = vec![self.zero_start()];
        starts.extend(extra_starts);
        for ri in 0..restarts {
            starts.push(self.random_start(ri as u64));
        }
        let outcomes = starts
            .into_iter()
            .map(|s| self.ascend(s))
            .collect::<Result<Vec<_>>>()?;
        let restarts_used = outcomes.len() as u32;
        let mut best = None;
        for (value, v, iters, conv) in outcomes {
            let better = match &best {
                None => true,
                Some((bv, _, _, _)) => value > *bv,
            };
            if better {
                best = Some((value, v, iters, conv));
            }
        }
        let (value, v, iterations, converged) = best.expect("at least the zero start ran");
        Ok(NormResult {
            value,
            maximizers: v,
            iterations,
            restarts_used,
            converged,
        })
    }
}

fn validate_budgets(a: &CoefficientTensor, budgets: &[BudgetSet]) -> Result<()> {
    if budgets.len() != a.order() {
        return Err(Error::InvalidParameter(format!(
            "need one budget set per slot: tensor order {} vs {} budget sets",
            a.order(),
            budgets.len()
        )));
    }
    for (r, b) in budgets.iter().enumerate() {
        if b.dim() != a.side() {
            return Err(Error::InvalidParameter(format!(
                "budget set {r} has dimension {} but tensor side is {}",
                b.dim(),
                a.side()
            )));
        }
    }
    Ok(())
}

fn require_undecoupled(a: &CoefficientTensor) -> Result<()> {
    if a.order() >= 2 && !(a.is_symmetric() && a.is_tetrahedral()) {
        return Err(Error::NotTetrahedral(
            "undecoupled form needs a symmetric tensor with zero generalized diagonal".into(),
        ));
    }
    Ok(())
}

/// Norm of the decoupled chaos: each slot has its own budget set.
pub fn chaos_norm_decoupled(
    a: &CoefficientTensor,
    budgets: &[BudgetSet],
    restarts: u32,
) -> Result<NormResult> {
    validate_budgets(a, budgets)?;
    let problem = LayeredProblem {
        tensor: a,
        budgets: budgets.to_vec(),
        layers: 1,
    };
    problem.solve(restarts, Vec::new())
}

/// Norm of the undecoupled chaos: independent maximizer vectors sharing a
/// single budget set. Requires a symmetric tensor with zero generalized
/// diagonal for orders >= 2.
pub fn chaos_norm_undecoupled(
    a: &CoefficientTensor,
    b: &BudgetSet,
    restarts: u32,
) -> Result<NormResult> {
    require_undecoupled(a)?;
    let budgets = vec![b.clone(); a.order()];
    chaos_norm_decoupled(a, &budgets, restarts)
}

/// Flattened norm: `k` layers per slot, each layer constrained by the
/// composed exponents `N_i(v^k)` at the same budget. Seeded with the lifted
/// single-layer solution, so the computed value never falls below the
/// computed plain norm.
pub fn flattened_norm(
    a: &CoefficientTensor,
    budgets: &[BudgetSet],
    k: u32,
    restarts: u32,
) -> Result<NormResult> {
    validate_budgets(a, budgets)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let base = chaos_norm_decoupled(a, budgets, restarts)?;
    let lifted: Vec<Vec<f64>> = base
        .maximizers
        .iter()
        .map(|w| {
            let lift: Vec<f64> = w.iter().map(|&wi| wi.powf(1.0 / k as f64)).collect();
            vec![lift; k as usize]
        })
        .reduce(|mut acc, mut block| {
            acc.append(&mut block);
            acc
        })
        .unwrap_or_default();
    let composed = budgets
        .iter()
        .map(|b| b.composed_with_power(k))
        .collect::<Result<Vec<_>>>()?;
    let problem = LayeredProblem {
        tensor: a,
        budgets: composed,
        layers: k as usize,
    };
    problem.solve(restarts, vec![lifted])
}

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: usize, parts: usize) -> Vec<Vec<u16>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if parts == 1 {
            prefix.push(total as u16);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in 0..=total {
            prefix.push(x as u16);
            rec(total - x, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Exact integer-budget allocation: `max sum_j c_j tab[j][x_j]` over
/// `sum x_j <= g`. Dynamic programming over coordinates; enumerates the
/// same set as explicit composition search.
fn integer_allocation_max(c: &[f64], tab: &[Vec<f64>], g: usize) -> f64 {
    let mut dp = vec![0.0f64; g + 1];
    for (j, cj) in c.iter().enumerate() {
        let prev = dp.clone();
        for u in 0..=g {
            let mut best = f64::NEG_INFINITY;
            for x in 0..=u {
                let cand = prev[u - x] + cj * tab[j][x];
                if cand > best {
                    best = cand;
                }
            }
            dp[u] = best;
        }
    }
    dp[g]
}

/// Exhaustive oracle: every per-coordinate budget allocation on the simplex
/// grid `{0, p/g, ..., p}` is visited (the trailing block through an exact
/// integer DP). Capped to desk scale.
pub fn brute_force_norm(
    a: &CoefficientTensor,
    budgets: &[BudgetSet],
    grid_points: usize,
) -> Result<f64> {
    validate_budgets(a, budgets)?;
    let n = a.side();
    let d = a.order();
    if n > ORACLE_MAX_SIDE || d > ORACLE_MAX_ORDER || grid_points > ORACLE_MAX_GRID {
        return Err(Error::TooLarge(format!(
            "oracle caps are side <= {ORACLE_MAX_SIDE}, order <= {ORACLE_MAX_ORDER}, grid <= {ORACLE_MAX_GRID}; got ({n}, {d}, {grid_points})"
        )));
    }
    if grid_points == 0 {
        return Err(Error::InvalidParameter("grid_points must be >= 1".into()));
    }
    let g = grid_points;
    let tabs: Vec<Vec<Vec<f64>>> = budgets
        .iter()
        .map(|b| {
            (0..n)
                .map(|i| {
                    (0..=g)
                        .map(|j| b.exponent(i).inverse(b.budget() * j as f64 / g as f64))
                        .collect()
                })
                .collect()
        })
        .collect();
    match d {
        1 => {
            let comps = compositions(g, n);
            let vals = exec::map_slice(&comps, |alloc| {
                let mut total = 0.0;
                for i in 0..n {
                    total += a.entries()[i] * (1.0 + tabs[0][i][alloc[i] as usize]);
                }
                total
            });
            Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
        }
        2 => {
            let comps = compositions(g, n);
            let vals = exec::map_slice(&comps, |alloc| {
                let u: Vec<f64> = (0..n).map(|i| tabs[0][i][alloc[i] as usize]).collect();
                let mut c = vec![0.0f64; n];
                for i in 0..n {
                    let w = 1.0 + u[i];
                    for j in 0..n {
                        c[j] += a.get(&[i, j]) * w;
                    }
                }
                let base: f64 = c.iter().sum();
                base + integer_allocation_max(&c, &tabs[1], g)
            });
            Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
        }
        _ => unreachable!("capped above"),
    }
}

/// Exhaustive oracle for the flattened norm, order-1 tensors only: all
/// layer allocations are enumerated jointly.
pub fn brute_force_flattened(
    b_vec: &CoefficientTensor,
    budget: &BudgetSet,
    k: u32,
    grid_points: usize,
) -> Result<f64> {
    if b_vec.order() != 1 {
        return Err(Error::TooLarge("flattened oracle covers order 1 only".into()));
    }
    let n = b_vec.side();
    if n > 3 || k > 2 || grid_points > ORACLE_MAX_GRID {
        return Err(Error::TooLarge(format!(
            "flattened oracle caps are side <= 3, k <= 2, grid <= {ORACLE_MAX_GRID}; got ({n}, {k}, {grid_points})"
        )));
    }
    let composed = budget.composed_with_power(k)?;
    let g = grid_points;
    let tab: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..=g)
                .map(|j| composed.exponent(i).inverse(budget.budget() * j as f64 / g as f64))
                .collect()
        })
        .collect();
    let comps = compositions(g, n);
    let layers = k as usize;
    // Mixed-radix walk over one composition choice per layer.
    let total: usize = comps.len().pow(layers as u32);
    let vals = exec::map_range(total, |mut code| {
        let mut picks = vec![0usize; layers];
        for p in picks.iter_mut() {
            *p = code % comps.len();
            code /= comps.len();
        }
        let mut value = 0.0;
        for i in 0..n {
            let mut factor = 1.0;
            for &pick in &picks {
                factor *= 1.0 + tab[i][comps[pick][i] as usize];
            }
            value += b_vec.entries()[i] * factor;
        }
        value
    });
    Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Flattening audit across random instances.
#[derive(Debug, Clone, Serialize)]
pub struct FlattenCheckReport {
    pub trials: u32,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
}

/// For `trials` random dense tensors of the given shape, compare the
/// flattened norm against the plain norm. The lifted-start construction
/// makes every ratio at least 1 up to arithmetic noise; the maximum ratio
/// is reported for comparison across seeds.
pub fn flatten_equiv_check(
    order: usize,
    side: usize,
    budget_template: &BudgetSet,
    k: u32,
    restarts: u32,
    trials: u32,
    seed: u64,
) -> Result<FlattenCheckReport> {
    let mut ratios = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let mut rng = chunk_rng(derive_seed(seed, 0xF1A7), trial as u64);
        let entries: Vec<f64> = (0..side.pow(order as u32))
            .map(|_| rng.gen::<f64>())
            .collect();
        let a = CoefficientTensor::new(order, side, entries, false, false)?;
        let budgets = vec![budget_template.clone(); order];
        let plain = chaos_norm_decoupled(&a, &budgets, restarts)?;
        let flat = flattened_norm(&a, &budgets, k, restarts)?;
        let ratio = if plain.value == 0.0 {
            1.0
        } else {
            flat.value / plain.value
        };
        ratios.push(ratio);
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FlattenCheckReport {
        trials,
        min_ratio,
        max_ratio,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::ExponentFn;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn linear_budget(n: usize, p: f64) -> BudgetSet {
        BudgetSet::uniform(n, ExponentFn::power(1.0).unwrap(), p).unwrap()
    }

    #[test]
    fn scalar_instance_is_one_plus_budget() {
        let a = CoefficientTensor::from_vector(&[1.0]).unwrap();
        let r = chaos_norm_decoupled(&a, &[linear_budget(1, 5.0)], 2).unwrap();
        assert_relative_eq!(r.value, 6.0, max_relative = 1e-9);
        assert!(r.converged);
    }

    #[test]
    fn rank_one_tensor_factorizes() {
        let a = CoefficientTensor::new(2, 2, vec![1.0; 4], true, false).unwrap();
        let budgets = vec![linear_budget(2, 2.0), linear_budget(2, 2.0)];
        let r = chaos_norm_decoupled(&a, &budgets, 4).unwrap();
        assert_relative_eq!(r.value, 16.0, max_relative = 1e-9);
    }

    #[test]
    fn order_one_norm_is_sum_plus_linear_max() {
        let b = [0.7, 2.0, 0.1];
        let a = CoefficientTensor::from_vector(&b).unwrap();
        let budget = linear_budget(3, 2.5);
        let r = chaos_norm_decoupled(&a, &[budget.clone()], 3).unwrap();
        let (lin, _) = linear_max_over_budget(&b, &budget).unwrap();
        let total: f64 = b.iter().sum();
        assert_relative_eq!(r.value, total + lin, max_relative = 1e-9);
    }

    #[test]
    fn undecoupled_pair_example() {
        // a_{12} = a_{21} = 1, N(t) = t, p = 2: supremum is 10.
        let a = CoefficientTensor::new(2, 2, vec![0.0, 1.0, 1.0, 0.0], true, true).unwrap();
        let b = linear_budget(2, 2.0);
        let r = chaos_norm_undecoupled(&a, &b, 4).unwrap();
        assert_relative_eq!(r.value, 10.0, max_relative = 1e-9);
        let oracle = brute_force_norm(&a, &[b.clone(), b.clone()], 50).unwrap();
        assert_relative_eq!(oracle, 10.0, max_relative = 1e-6);
    }

    #[test]
    fn undecoupled_requires_tetrahedral_symmetric() {
        let a = CoefficientTensor::new(2, 2, vec![1.0, 1.0, 1.0, 1.0], false, false).unwrap();
        let b = linear_budget(2, 2.0);
        assert!(matches!(
            chaos_norm_undecoupled(&a, &b, 1),
            Err(Error::NotTetrahedral(_))
        ));
    }

    #[test]
    fn zero_tensor_has_zero_norm_and_homogeneity_holds() {
        let a = CoefficientTensor::new(2, 2, vec![0.0; 4], true, true).unwrap();
        let b = linear_budget(2, 2.0);
        assert_eq!(chaos_norm_undecoupled(&a, &b, 2).unwrap().value, 0.0);

        let t = CoefficientTensor::random_sparse(2, 3, 0.8, 5).unwrap();
        let budgets = vec![linear_budget(3, 2.0), linear_budget(3, 2.0)];
        let v1 = chaos_norm_decoupled(&t, &budgets, 4).unwrap().value;
        let v3 = chaos_norm_decoupled(&t.scaled(3.5).unwrap(), &budgets, 4)
            .unwrap()
            .value;
        assert_relative_eq!(v3, 3.5 * v1, max_relative = 1e-10);
    }

    #[test]
    fn maximizers_are_feasible() {
        let t = CoefficientTensor::random_sparse(2, 4, 0.6, 11).unwrap();
        let budgets = vec![
            BudgetSet::uniform(4, ExponentFn::power(0.5).unwrap(), 3.0).unwrap(),
            BudgetSet::uniform(4, ExponentFn::power(2.0).unwrap(), 3.0).unwrap(),
        ];
        let r = chaos_norm_decoupled(&t, &budgets, 4).unwrap();
        for (slot, v) in r.maximizers.iter().enumerate() {
            assert!(budgets[slot].slack(v) >= -1e-9, "slack {}", budgets[slot].slack(v));
        }
    }

    #[test]
    fn integer_dp_matches_explicit_enumeration() {
        use rand::{Rng, SeedableRng};
        for seed in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..4);
            let g = rng.gen_range(1..9);
            let c: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let tab: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let mut t: Vec<f64> = (0..=g).map(|_| rng.gen::<f64>() * 3.0).collect();
                    t.sort_by(f64::total_cmp);
                    t
                })
                .collect();
            let dp = integer_allocation_max(&c, &tab, g);
            let mut best = f64::NEG_INFINITY;
            for alloc in compositions(g, n) {
                let v: f64 = (0..n).map(|i| c[i] * tab[i][alloc[i] as usize]).sum();
                best = best.max(v);
            }
            assert_relative_eq!(dp, best, max_relative = 1e-12);
        }
    }

    #[test]
    fn oracle_monotone_in_budget_and_reduces_to_linear_for_d1() {
        let a = CoefficientTensor::from_vector(&[3.0, 1.0]).unwrap();
        let b1 = linear_budget(2, 2.0);
        let b2 = linear_budget(2, 4.0);
        let v1 = brute_force_norm(&a, &[b1.clone()], 40).unwrap();
        let v2 = brute_force_norm(&a, &[b2], 40).unwrap();
        assert!(v2 >= v1 - 1e-12);
        let (lin, _) = linear_max_over_budget(&[3.0, 1.0], &b1).unwrap();
        assert_relative_eq!(v1, 4.0 + lin, max_relative = 1e-9);

        let big = CoefficientTensor::random_sparse(2, 5, 0.5, 3).unwrap();
        assert!(matches!(
            brute_force_norm(&big, &[linear_budget(5, 1.0), linear_budget(5, 1.0)], 10),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn ascent_tracks_oracle_on_random_small_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for trial in 0..12u64 {
            let n = rng.gen_range(2..4);
            let d = rng.gen_range(1..3);
            let alpha = [1.0, 0.5, 2.0][rng.gen_range(0..3)];
            let p = [1.0, 2.0, 4.0][rng.gen_range(0..3)];
            let a = CoefficientTensor::random_sparse(d, n, 0.8, 1000 + trial).unwrap();
            let budgets: Vec<BudgetSet> = (0..d)
                .map(|_| BudgetSet::uniform(n, ExponentFn::power(alpha).unwrap(), p).unwrap())
                .collect();
            let ascent = chaos_norm_decoupled(&a, &budgets, 8).unwrap();
            let oracle = brute_force_norm(&a, &budgets, 50).unwrap();
            if oracle == 0.0 {
                assert_eq!(ascent.value, 0.0);
                continue;
            }
            let ratio = ascent.value / oracle;
            assert!(
                (0.95..=1.0001).contains(&ratio),
                "trial {trial}: ascent {} vs oracle {} (ratio {ratio})",
                ascent.value,
                oracle
            );
        }
    }

    #[test]
    fn flattened_k1_equals_plain_norm() {
        let a = CoefficientTensor::random_sparse(2, 3, 0.9, 21).unwrap();
        let budgets = vec![linear_budget(3, 2.0), linear_budget(3, 2.0)];
        let plain = chaos_norm_decoupled(&a, &budgets, 4).unwrap();
        let flat = flattened_norm(&a, &budgets, 1, 4).unwrap();
        assert_relative_eq!(flat.value, plain.value, max_relative = 1e-9);
    }

    #[test]
    fn flattened_matches_brute_force_on_pair() {
        // d = 1, n = 2, k = 2, N(t) = t, p = 1, b = (1, 1): the optimum is
        // 2 (1 + 1/sqrt(2))^2 = 3 + 2 sqrt(2).
        let b_vec = CoefficientTensor::from_vector(&[1.0, 1.0]).unwrap();
        let budget = linear_budget(2, 1.0);
        let oracle = brute_force_flattened(&b_vec, &budget, 2, 50).unwrap();
        let expected = 3.0 + 2.0 * 2f64.sqrt();
        assert!(oracle <= expected + 1e-9 && oracle >= 0.995 * expected, "oracle {oracle}");
        let flat = flattened_norm(&b_vec, &[budget], 2, 8).unwrap();
        assert_relative_eq!(flat.value, expected, max_relative = 1e-6);
        assert!(flat.value >= oracle - 1e-9);
    }

    #[test]
    fn flatten_check_ratios_are_at_least_one() {
        let budget = linear_budget(2, 1.0);
        let rep = flatten_equiv_check(1, 2, &budget, 2, 4, 10, 77).unwrap();
        assert!(rep.min_ratio >= 1.0 - 1e-6, "min {}", rep.min_ratio);
        assert!(rep.max_ratio <= 2.0 + 1e-6, "max {}", rep.max_ratio);
        let k1 = flatten_equiv_check(1, 2, &budget, 1, 2, 6, 78).unwrap();
        assert!((k1.min_ratio - 1.0).abs() < 1e-6 && (k1.max_ratio - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn norm_monotone_in_budget_and_coefficients(
            seed in 0u64..5000,
            p in 0.5f64..4.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..4usize);
            let a = CoefficientTensor::random_sparse(2, n, 0.7, seed).unwrap();
            let budgets: Vec<BudgetSet> =
                (0..2).map(|_| linear_budget(n, p)).collect();
            let doubled: Vec<BudgetSet> =
                (0..2).map(|_| linear_budget(n, 2.0 * p)).collect();
            let v = chaos_norm_decoupled(&a, &budgets, 3).unwrap().value;
            let v2 = chaos_norm_decoupled(&a, &doubled, 3).unwrap().value;
            prop_assert!(v2 >= v - 1e-9 * v.abs().max(1.0));

            // Raising one coefficient never lowers the value.
            let mut entries = a.entries().to_vec();
            let bump = rng.gen_range(0..entries.len());
            entries[bump] += 1.0;
            let a_up = CoefficientTensor::new(2, n, entries, false, false).unwrap();
            let vu = chaos_norm_decoupled(&a_up, &budgets, 3).unwrap().value;
            prop_assert!(vu >= v - 1e-9 * v.abs().max(1.0));
        }
    }
}
