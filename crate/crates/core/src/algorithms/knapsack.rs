//! The per-step program shared by the combined algorithm and the greedy knapsack rule:
//! minimize `o·p` subject to `a·p ≤ h` over the simplex (or the sub-simplex when idling
//! is allowed).

use alloc::vec::Vec;
use nalgebra::DVector;

use crate::math;

const TOL: f64 = 1e-12;

/// A support of at most two arms with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub weights: DVector<f64>,
    pub value: f64,
}

/// Exact solution by enumerating basic solutions: one constraint besides the simplex
/// means an optimal vertex uses at most two arms (counting idle as an arm with
/// `o = a = 0`). Ties keep the first candidate found (lowest indices).
pub fn solve_single_constraint(scores: &[f64], usage: &[f64], cap: f64, allow_idle: bool) -> Option<Mixture> {
    let m = scores.len();
    let mut o: Vec<f64> = scores.to_vec();
    let mut a: Vec<f64> = usage.to_vec();
    if allow_idle {
        o.push(0.0);
        a.push(0.0);
    }
    let n = o.len();
    let mut best: Option<(f64, usize, usize, f64)> = None;
    let mut consider = |value: f64, i: usize, k: usize, wi: f64| {
        if best.is_none_or(|b| value < b.0 - TOL) {
            best = Some((value, i, k, wi));
        }
    };
    for i in 0..n {
        if a[i] <= cap + TOL {
            consider(o[i], i, i, 1.0);
        }
    }
    for i in 0..n {
        for k in 0..n {
            if a[i] < cap - TOL && a[k] > cap + TOL {
                let wi = (a[k] - cap) / (a[k] - a[i]);
                consider(wi * o[i] + (1.0 - wi) * o[k], i, k, wi);
            }
        }
    }
    let (value, i, k, wi) = best?;
    let mut weights = DVector::zeros(m);
    if i < m {
        weights[i] += wi;
    }
    if k < m && k != i {
        weights[k] += 1.0 - wi;
    }
    Some(Mixture { weights, value })
}

/// Fractional-knapsack rule: among arms with positive usage, take the best
/// reward-to-usage ratio at the largest probability that keeps `a·p ≤ cap`; arms with
/// nonpositive usage are playable with probability one, and the best of them wins
/// whenever its reward is at least the ratio choice's.
pub fn greedy_ratio(rewards: &[f64], usage: &[f64], cap: f64) -> Mixture {
    let m = rewards.len();
    let free = math::argmax((0..m).map(|i| if usage[i] <= 0.0 { rewards[i] } else { f64::NEG_INFINITY }))
        .filter(|&i| usage[i] <= 0.0);
    let ratio = math::argmax((0..m).map(|i| if usage[i] > 0.0 { rewards[i] / usage[i] } else { f64::NEG_INFINITY }))
        .filter(|&i| usage[i] > 0.0);
    let mut weights = DVector::zeros(m);
    let ratio_pick = ratio.map(|i| {
        let p = (cap.max(0.0) / usage[i]).min(1.0);
        (i, p, rewards[i] * p)
    });
    match (free, ratio_pick) {
        (Some(i), Some((_, _, v))) if rewards[i] >= v => weights[i] = 1.0,
        (Some(i), None) => weights[i] = 1.0,
        (_, Some((i, p, _))) => weights[i] = p,
        (None, None) => {}
    }
    let value = -weights.dot(&DVector::from_column_slice(rewards));
    Mixture { weights, value }
}
