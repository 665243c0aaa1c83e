use serde::{Deserialize, Serialize};

use crate::queueing::TrafficEstimate;

/// Servers assigned to each class. Always sums to the cluster size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationVector {
    servers: Vec<u32>,
}

impl AllocationVector {
    pub fn new(servers: Vec<u32>) -> Self {
        Self { servers }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.servers
    }

    pub fn get(&self, class: usize) -> u32 {
        self.servers[class]
    }

    pub fn total(&self) -> u32 {
        self.servers.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    /// Moves one server from `from` to `to`. Panics if `from` has none.
    pub fn transfer(&mut self, from: usize, to: usize) {
        assert!(self.servers[from] > 0, "class {from} has no server to give");
        self.servers[from] -= 1;
        self.servers[to] += 1;
    }

    /// Splits `total` as evenly as possible, remainder to the lowest indices.
    pub fn even(classes: usize, total: u32) -> Self {
        let m = classes as u32;
        let base = total / m;
        let extra = (total % m) as usize;
        Self {
            servers: (0..classes)
                .map(|i| base + u32::from(i < extra))
                .collect(),
        }
    }
}

// Quotas within this distance are treated as ties, so that scaling every
// weight by the same constant cannot flip a floor or a remainder ordering.
const QUOTA_TOL: f64 = 1e-9;

/// "Offered Loads" allocation: servers in proportion to `alpha_i * lambda_i * b_i`.
///
/// Floors of the quotas first, then leftovers by largest fractional remainder,
/// and finally every loaded class that ended with zero servers borrows one
/// from the largest pool (if that pool can spare it).
pub fn offered_loads_allocation(
    estimates: &[TrafficEstimate],
    alphas: &[f64],
    total: u32,
) -> AllocationVector {
    assert_eq!(estimates.len(), alphas.len());
    let m = estimates.len();
    assert!(m > 0, "at least one class required");
    let weights: Vec<f64> = estimates
        .iter()
        .zip(alphas)
        .map(|(e, a)| (a * e.offered_load()).max(0.0))
        .collect();
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return AllocationVector::even(m, total);
    }

    let quotas: Vec<f64> = weights
        .iter()
        .map(|w| f64::from(total) * w / sum)
        .collect();
    let mut servers: Vec<u32> = quotas
        .iter()
        .map(|q| (q + QUOTA_TOL).floor() as u32)
        .collect();
    let assigned: u32 = servers.iter().sum();
    let leftover = total.saturating_sub(assigned) as usize;

    let mut order: Vec<usize> = (0..m).collect();
    let rem = |i: usize| quotas[i] - f64::from(servers[i]);
    order.sort_by(|&a, &b| {
        let (ra, rb) = (rem(a), rem(b));
        if (ra - rb).abs() <= QUOTA_TOL {
            a.cmp(&b)
        } else {
            rb.total_cmp(&ra)
        }
    });
    for &i in order.iter().take(leftover) {
        servers[i] += 1;
    }

    for i in 0..m {
        if weights[i] > 0.0 && servers[i] == 0 {
            let donor = (0..m)
                .filter(|&j| servers[j] >= 2)
                .max_by(|&a, &b| servers[a].cmp(&servers[b]).then(b.cmp(&a)));
            if let Some(j) = donor {
                servers[j] -= 1;
                servers[i] += 1;
            }
        }
    }
    AllocationVector { servers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(load: f64) -> TrafficEstimate {
        TrafficEstimate {
            class: 0,
            lambda_hat: load,
            b_hat: 1.0,
            ca2_hat: 1.0,
            cs2_hat: 1.0,
            delta_hat: 0.0,
        }
    }

    fn loads(l: &[f64]) -> Vec<TrafficEstimate> {
        l.iter().copied().map(est).collect()
    }

    #[test]
    fn table1_largest_remainder() {
        let a = offered_loads_allocation(&loads(&[5.0, 2.0, 4.0, 5.0]), &[1.0; 4], 20);
        assert_eq!(a.as_slice(), &[6, 3, 5, 6]);
    }

    #[test]
    fn zero_load_even_split() {
        let a = offered_loads_allocation(&loads(&[0.0; 4]), &[1.0; 4], 20);
        assert_eq!(a.as_slice(), &[5, 5, 5, 5]);
        let a = offered_loads_allocation(&loads(&[0.0; 3]), &[1.0; 3], 20);
        assert_eq!(a.as_slice(), &[7, 7, 6]);
    }

    #[test]
    fn single_class_takes_everything() {
        let a = offered_loads_allocation(&loads(&[3.7]), &[1.0], 20);
        assert_eq!(a.as_slice(), &[20]);
    }

    #[test]
    fn loaded_class_gets_at_least_one() {
        let a = offered_loads_allocation(&loads(&[100.0, 0.1, 0.0]), &[1.0; 3], 5);
        assert_eq!(a.as_slice(), &[4, 1, 0]);
    }

    #[test]
    fn alpha_shifts_servers() {
        let a = offered_loads_allocation(&loads(&[1.0, 1.0]), &[3.0, 1.0], 8);
        assert_eq!(a.as_slice(), &[6, 2]);
    }

    #[test]
    fn transfer_moves_one() {
        let mut a = AllocationVector::new(vec![2, 3]);
        a.transfer(1, 0);
        assert_eq!(a.as_slice(), &[3, 2]);
    }

    proptest! {
        #[test]
        fn sums_to_total(l in proptest::collection::vec(0.0..20.0f64, 1..8), n in 1u32..64) {
            let alphas = vec![1.0; l.len()];
            let a = offered_loads_allocation(&loads(&l), &alphas, n);
            prop_assert_eq!(a.total(), n);
        }

        #[test]
        fn alpha_scale_invariant(l in proptest::collection::vec(0.0..20.0f64, 1..8),
                                 al in proptest::collection::vec(0.1..5.0f64, 8),
                                 s in 0.01..100.0f64, n in 1u32..64) {
            let m = l.len();
            let alphas: Vec<f64> = al[..m].to_vec();
            let scaled: Vec<f64> = alphas.iter().map(|a| a * s).collect();
            let e = loads(&l);
            prop_assert_eq!(offered_loads_allocation(&e, &alphas, n), offered_loads_allocation(&e, &scaled, n));
        }
    }
}
