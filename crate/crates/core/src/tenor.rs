//! The fixed tenor grid `0 = T_0 < T_1 < ... < T_N` on which every discrete
//! forward rate, spread and account lives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used when matching an externally supplied time to a grid node.
pub const NODE_TOLERANCE: f64 = 1e-9;

/// Strictly increasing grid of year fractions starting at zero.
///
/// Bucket `m` is the accrual period `[T_m, T_{m+1}]` of length `delta_m`,
/// for `m` in `0..n_buckets()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TenorStructure {
    nodes: Vec<f64>,
    accruals: Vec<f64>,
}

impl TenorStructure {
    /// Builds a grid from its node times. The first node must be exactly zero.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput(
                "tenor structure needs at least two nodes".into(),
            ));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "first tenor node must be 0, got {}",
                nodes[0]
            )));
        }
        if let Some(bad) = nodes.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite tenor node {bad}")));
        }
        let accruals: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(m) = accruals.iter().position(|&d| d <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "tenor nodes not strictly increasing at index {}: {} >= {}",
                m + 1,
                nodes[m],
                nodes[m + 1]
            )));
        }
        Ok(Self { nodes, accruals })
    }

    /// Regular grid `0, step, 2 step, ..., n step`.
    pub fn uniform(n_buckets: usize, step: f64) -> Result<Self> {
        Self::new((0..=n_buckets).map(|k| k as f64 * step).collect())
    }

    /// Number of buckets `N*` (one less than the number of nodes).
    pub fn n_buckets(&self) -> usize {
        self.accruals.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn accruals(&self) -> &[f64] {
        &self.accruals
    }

    /// Node time `T_k`. Panics if `k > N*`.
    pub fn node(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Final node `T_{N*}`.
    pub fn horizon(&self) -> f64 {
        *self.nodes.last().expect("non-empty grid")
    }

    /// Accrual `delta_m = T_{m+1} - T_m` of bucket `m`.
    pub fn accrual(&self, m: usize) -> Result<f64> {
        self.accruals.get(m).copied().ok_or_else(|| {
            Error::Domain(format!(
                "bucket index {m} out of range 0..{}",
                self.n_buckets()
            ))
        })
    }

    /// `q(t) = min{n : T_n >= t}`, so that `T_{q(t)-1} < t <= T_{q(t)}`.
    ///
    /// Comparison is exact: `q(T_n) = n`.
    pub fn q_index(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(self.nodes.partition_point(|&node| node < t))
    }

    /// Index of the node within [`NODE_TOLERANCE`] of `t`, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let k = self.nodes.partition_point(|&node| node < t - NODE_TOLERANCE);
        (k < self.nodes.len() && (self.nodes[k] - t).abs() <= NODE_TOLERANCE).then_some(k)
    }

    /// Like [`node_index`](Self::node_index) but an error when `t` is off-grid.
    pub fn require_node(&self, t: f64) -> Result<usize> {
        self.node_index(t)
            .ok_or_else(|| Error::Ingestion(format!("maturity {t} is not a tenor node")))
    }
}

impl TryFrom<Vec<f64>> for TenorStructure {
    type Error = Error;

    fn try_from(nodes: Vec<f64>) -> Result<Self> {
        Self::new(nodes)
    }
}

impl From<TenorStructure> for Vec<f64> {
    fn from(ts: TenorStructure) -> Self {
        ts.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(nodes: &[f64]) -> TenorStructure {
        TenorStructure::new(nodes.to_vec()).unwrap()
    }

    #[test]
    fn q_index_examples() {
        let ts = grid(&[0.0, 0.5, 1.0]);
        assert_eq!(ts.q_index(0.0).unwrap(), 0);
        assert_eq!(ts.q_index(0.5).unwrap(), 1);
        assert_eq!(ts.q_index(0.7).unwrap(), 2);
        assert_eq!(ts.q_index(1.0).unwrap(), 2);
    }

    #[test]
    fn q_index_rejects_out_of_range() {
        let ts = grid(&[0.0, 0.5, 1.0]);
        assert!(matches!(ts.q_index(-1e-9), Err(Error::Domain(_))));
        assert!(matches!(ts.q_index(1.0 + 1e-12), Err(Error::Domain(_))));
        assert!(ts.q_index(f64::NAN).is_err());
    }

    #[test]
    fn accrual_examples() {
        let ts = grid(&[0.0, 0.5, 1.0]);
        assert_eq!(ts.accrual(0).unwrap(), 0.5);
        assert_eq!(ts.accrual(1).unwrap(), 0.5);
        assert!(ts.accrual(2).is_err());
        assert_eq!(grid(&[0.0, 0.25, 1.0]).accrual(1).unwrap(), 0.75);
    }

    #[test]
    fn construction_checks() {
        assert!(TenorStructure::new(vec![0.0]).is_err());
        assert!(TenorStructure::new(vec![0.1, 0.5]).is_err());
        assert!(TenorStructure::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TenorStructure::new(vec![0.0, 0.5, 0.4]).is_err());
        assert!(TenorStructure::new(vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn node_lookup_tolerates_rounding() {
        let ts = TenorStructure::uniform(10, 0.1).unwrap();
        assert_eq!(ts.node_index(0.1 + 0.2), Some(3));
        assert_eq!(ts.node_index(0.35), None);
        assert!(matches!(ts.require_node(0.35), Err(Error::Ingestion(_))));
    }

    #[test]
    fn serde_validates() {
        let ts: TenorStructure = serde_json::from_str("[0.0, 0.5, 1.0]").unwrap();
        assert_eq!(ts.n_buckets(), 2);
        assert!(serde_json::from_str::<TenorStructure>("[0.0, 1.0, 0.5]").is_err());
    }

    fn arb_grid() -> impl Strategy<Value = TenorStructure> {
        prop::collection::vec(0.01f64..2.0, 1..12).prop_map(|steps| {
            let mut nodes = vec![0.0];
            for s in steps {
                nodes.push(nodes.last().unwrap() + s);
            }
            TenorStructure::new(nodes).unwrap()
        })
    }

    proptest! {
        #[test]
        fn q_index_brackets_nodes(ts in arb_grid(), frac in 1e-9f64..=1.0) {
            for m in 0..ts.n_buckets() {
                prop_assert_eq!(ts.q_index(ts.node(m)).unwrap(), m);
                let t = ts.node(m) + frac * ts.accrual(m).unwrap();
                let t = t.min(ts.node(m + 1));
                prop_assert_eq!(ts.q_index(t).unwrap(), m + 1);
            }
        }

        #[test]
        fn accruals_sum_to_horizon(ts in arb_grid()) {
            let total: f64 = ts.accruals().iter().sum();
            prop_assert!((total - ts.horizon()).abs() <= 1e-12 * ts.horizon().max(1.0));
        }
    }
}
