use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockRole {
    Weight,
    Bias,
}

/// One contiguous `rows x cols` block (row-major) inside a [`ParamVector`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockInfo {
    pub network: String,
    pub layer: String,
    pub role: BlockRole,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl BlockInfo {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self) -> String {
        let role = match self.role {
            BlockRole::Weight => "weight",
            BlockRole::Bias => "bias",
        };
        format!("{}/{}/{}", self.network, self.layer, role)
    }
}

/// Flat parameter array with a layout table mapping named blocks to extents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    #[serde(skip)]
    values: Vec<f64>,
    layout: Vec<BlockInfo>,
}

impl ParamVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a block; returns its index in the layout.
    pub fn push(&mut self, network: &str, layer: &str, role: BlockRole, data: Array2<f64>) -> usize {
        let (rows, cols) = data.dim();
        self.layout.push(BlockInfo {
            network: network.to_string(),
            layer: layer.to_string(),
            role,
            offset: self.values.len(),
            rows,
            cols,
        });
        self.values.extend(data.iter().copied());
        self.layout.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[BlockInfo] {
        &self.layout
    }

    pub fn view(&self, block: usize) -> ArrayView2<'_, f64> {
        let b = &self.layout[block];
        ArrayView2::from_shape((b.rows, b.cols), &self.values[b.offset..b.offset + b.len()])
            .expect("layout extent")
    }

    pub fn block(&self, block: usize) -> Array2<f64> {
        self.view(block).to_owned()
    }

    pub fn find(&self, network: &str, layer: &str, role: BlockRole) -> Option<usize> {
        self.layout.iter().position(|b| b.network == network && b.layer == layer && b.role == role)
    }

    /// Which block owns flat index `i`.
    pub fn block_of(&self, i: usize) -> Option<&BlockInfo> {
        self.layout.iter().find(|b| (b.offset..b.offset + b.len()).contains(&i))
    }

    /// Replace the values wholesale (checkpoint restore).
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::Dimension(format!(
                "parameter payload has {} values, layout needs {}",
                values.len(),
                self.values.len()
            )));
        }
        self.values = values;
        Ok(())
    }

    /// Rebuild from a layout table and payload, checking exact coverage.
    pub fn from_parts(layout: Vec<BlockInfo>, values: Vec<f64>) -> Result<Self> {
        let pv = ParamVector { values, layout };
        pv.validate()?;
        Ok(pv)
    }

    /// The layout must tile the value array with no gaps or overlaps.
    pub fn validate(&self) -> Result<()> {
        let mut next = 0;
        for b in &self.layout {
            if b.offset != next {
                return Err(Error::Dimension(format!("block {} starts at {}, expected {}", b.label(), b.offset, next)));
            }
            next += b.len();
        }
        if next != self.values.len() {
            return Err(Error::Dimension(format!("layout covers {next} values, array has {}", self.values.len())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn layout_tiles_the_array() {
        let mut pv = ParamVector::new();
        pv.push("g", "l0", BlockRole::Weight, array![[1.0, 2.0], [3.0, 4.0]]);
        let b = pv.push("g", "l0", BlockRole::Bias, array![[5.0], [6.0]]);
        pv.validate().unwrap();
        assert_eq!(pv.len(), 6);
        assert_eq!(pv.block(b), array![[5.0], [6.0]]);
        assert_eq!(pv.block_of(4).unwrap().role, BlockRole::Bias);
        assert_eq!(pv.find("g", "l0", BlockRole::Weight), Some(0));
        assert!(ParamVector::from_parts(pv.layout().to_vec(), vec![0.0; 5]).is_err());
    }
}
