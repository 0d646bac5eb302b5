use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ModelManifold;

pub const DEFAULT_NODES: usize = 2048;

/// Strictly increasing positive radii, geometric by default so that both the
/// neighbourhood of the pole and the far field are resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Parameter("a radial grid needs at least two nodes".into()));
        }
        if !(nodes[0] > 0.0) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter(
                "radial grid nodes must be positive and strictly increasing".into(),
            ));
        }
        Ok(RadialGrid { nodes })
    }

    /// `count` nodes with constant ratio from `r_min` to `r_max`.
    pub fn geometric(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) || count < 2 {
            return Err(Error::Parameter(format!(
                "invalid geometric grid ({r_min}, {r_max}, {count})"
            )));
        }
        let ratio = (r_max / r_min).powf(1.0 / (count - 1) as f64);
        let mut nodes: Vec<f64> = (0..count).map(|i| r_min * ratio.powi(i as i32)).collect();
        nodes[count - 1] = r_max;
        Self::new(nodes)
    }

    /// The default grid on a model: 2048 nodes from `1e-6 r_max` to `r_max`.
    pub fn default_for(m: &ModelManifold) -> Result<Self> {
        Self::geometric(1e-6 * m.r_max(), m.r_max(), DEFAULT_NODES)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}
