//! Domain types: layers, kernels, patterns, hardware configuration, feature maps.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Boolean support mask of one convolution kernel, row-major.
///
/// The pattern size is the number of `true` entries; the all-zero pattern
/// (size 0) is a valid value. Ordering is lexicographic over the mask with
/// `false < true`, which is the tie-break order used throughout.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    mask: Vec<bool>,
}

impl Pattern {
    pub fn new(mask: Vec<bool>) -> Self {
        Pattern { mask }
    }

    /// All-zero pattern over a `kernel_area`-element kernel.
    pub fn zero(kernel_area: usize) -> Self {
        Pattern { mask: vec![false; kernel_area] }
    }

    /// All-ones (dense) pattern.
    pub fn dense(kernel_area: usize) -> Self {
        Pattern { mask: vec![true; kernel_area] }
    }

    /// Pattern with `true` exactly at the given row-major positions.
    pub fn from_positions(kernel_area: usize, positions: &[usize]) -> Self {
        let mut mask = vec![false; kernel_area];
        for &p in positions {
            mask[p] = true;
        }
        Pattern { mask }
    }

    /// Support of a kernel: `true` wherever the weight is nonzero.
    pub fn support_of(kernel: &[i32]) -> Self {
        Pattern { mask: kernel.iter().map(|&w| w != 0).collect() }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of kernel positions (K·K).
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// Pattern size: count of `true` entries.
    pub fn size(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_zero(&self) -> bool {
        self.mask.iter().all(|&b| !b)
    }

    pub fn get(&self, pos: usize) -> bool {
        self.mask[pos]
    }

    /// Row-major indexes of the `true` entries, in order.
    pub fn positions(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// True iff every `true` entry of `self` is also `true` in `other`.
    pub fn is_subset_of(&self, other: &Pattern) -> bool {
        self.mask.iter().zip(other.mask.iter()).all(|(&a, &b)| !a || b)
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern(")?;
        for &b in &self.mask {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        write!(f, ")")
    }
}

// Serialized as a compact "0101…" string so assignments stay readable in reports.
impl Serialize for Pattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let s: String = self.mask.iter().map(|&b| if b { '1' } else { '0' }).collect();
        serializer.serialize_str(&s)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Pattern;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a string of '0' and '1'")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> std::result::Result<Pattern, E> {
                let mask = s
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(E::custom(format!("unexpected character '{other}'"))),
                    })
                    .collect::<std::result::Result<Vec<bool>, E>>()?;
                Ok(Pattern { mask })
            }
        }
        deserializer.deserialize_str(V)
    }
}

/// One convolution layer's weights in signed fixed-point, stored row-major
/// in (out_channel, in_channel, kernel_row, kernel_col) order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerWeights {
    pub name: String,
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    weights: Vec<i32>,
}

impl LayerWeights {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        out_channels: usize,
        in_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        padding: usize,
        weights: Vec<i32>,
        weight_bits: u32,
    ) -> Result<Self> {
        let name = name.into();
        if out_channels == 0 || in_channels == 0 || kernel_h == 0 || kernel_w == 0 {
            return Err(Error::InvalidDimension(format!(
                "layer '{name}': channel and kernel dimensions must be positive"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidDimension(format!(
                "layer '{name}': stride must be positive"
            )));
        }
        let expected = out_channels * in_channels * kernel_h * kernel_w;
        if weights.len() != expected {
            return Err(Error::InvalidDimension(format!(
                "layer '{name}': expected {expected} weights, got {}",
                weights.len()
            )));
        }
        let lo = -(1i64 << (weight_bits - 1));
        let hi = (1i64 << (weight_bits - 1)) - 1;
        for &w in &weights {
            if (w as i64) < lo || (w as i64) > hi {
                return Err(Error::WeightOutOfRange { value: w as i64, weight_bits });
            }
        }
        Ok(LayerWeights {
            name,
            out_channels,
            in_channels,
            kernel_h,
            kernel_w,
            stride,
            padding,
            weights,
        })
    }

    pub fn kernel_area(&self) -> usize {
        self.kernel_h * self.kernel_w
    }

    pub fn kernel_count(&self) -> usize {
        self.out_channels * self.in_channels
    }

    pub fn weight_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[i32] {
        &self.weights
    }

    /// The K·K weights of kernel (out_channel, in_channel), row-major.
    pub fn kernel(&self, out_channel: usize, in_channel: usize) -> &[i32] {
        let kk = self.kernel_area();
        let base = (out_channel * self.in_channels + in_channel) * kk;
        &self.weights[base..base + kk]
    }

    pub(crate) fn kernel_mut(&mut self, out_channel: usize, in_channel: usize) -> &mut [i32] {
        let kk = self.kernel_area();
        let base = (out_channel * self.in_channels + in_channel) * kk;
        &mut self.weights[base..base + kk]
    }

    pub fn weight(&self, out_channel: usize, in_channel: usize, row: usize, col: usize) -> i32 {
        self.kernel(out_channel, in_channel)[row * self.kernel_w + col]
    }

    pub fn support(&self, out_channel: usize, in_channel: usize) -> Pattern {
        Pattern::support_of(self.kernel(out_channel, in_channel))
    }

    pub fn zero_weight_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w == 0).count()
    }

    pub fn nonzero_weight_count(&self) -> usize {
        self.weights.len() - self.zero_weight_count()
    }

    /// Fraction of zero weights in [0, 1].
    pub fn sparsity(&self) -> f64 {
        self.zero_weight_count() as f64 / self.weights.len() as f64
    }

    /// Spatial output size for a given input size, or an error when the
    /// window never fits.
    pub fn output_size(&self, in_h: usize, in_w: usize) -> Result<(usize, usize)> {
        let oh = (in_h + 2 * self.padding).checked_sub(self.kernel_h);
        let ow = (in_w + 2 * self.padding).checked_sub(self.kernel_w);
        match (oh, ow) {
            (Some(oh), Some(ow)) => Ok((oh / self.stride + 1, ow / self.stride + 1)),
            _ => Err(Error::DimensionMismatch(format!(
                "layer '{}': {}x{} kernel does not fit a {in_h}x{in_w} input with padding {}",
                self.name, self.kernel_h, self.kernel_w, self.padding
            ))),
        }
    }
}

/// Per-layer candidate pattern list plus the pattern id assigned to every
/// (out_channel, in_channel) kernel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternAssignment {
    candidates: Vec<Pattern>,
    /// Pattern ids in (out_channel, in_channel) row-major order.
    ids: Vec<usize>,
}

impl PatternAssignment {
    pub fn new(candidates: Vec<Pattern>, ids: Vec<usize>) -> Self {
        debug_assert!(ids.iter().all(|&id| id < candidates.len()));
        PatternAssignment { candidates, ids }
    }

    pub fn candidates(&self) -> &[Pattern] {
        &self.candidates
    }

    pub fn id_of(&self, out_channel: usize, in_channel: usize, in_channels: usize) -> usize {
        self.ids[out_channel * in_channels + in_channel]
    }

    pub fn pattern_of(&self, out_channel: usize, in_channel: usize, in_channels: usize) -> &Pattern {
        &self.candidates[self.id_of(out_channel, in_channel, in_channels)]
    }

    /// Every kernel's nonzero support must sit inside its assigned mask.
    pub fn validate_against(&self, layer: &LayerWeights) -> Result<()> {
        if self.ids.len() != layer.kernel_count() {
            return Err(Error::DimensionMismatch(format!(
                "assignment covers {} kernels, layer has {}",
                self.ids.len(),
                layer.kernel_count()
            )));
        }
        for o in 0..layer.out_channels {
            for i in 0..layer.in_channels {
                let support = layer.support(o, i);
                let mask = self.pattern_of(o, i, layer.in_channels);
                if !support.is_subset_of(mask) {
                    return Err(Error::SupportOutsideMask { out_channel: o, in_channel: i });
                }
            }
        }
        Ok(())
    }

    /// Fraction of kernels assigned to the all-zero pattern.
    pub fn zero_kernel_ratio(&self) -> f64 {
        if self.ids.is_empty() {
            return 0.0;
        }
        let zeros = self
            .ids
            .iter()
            .filter(|&&id| self.candidates[id].is_zero())
            .count();
        zeros as f64 / self.ids.len() as f64
    }

    /// Assignment that keeps every kernel's existing support as its pattern.
    pub fn identity_of(layer: &LayerWeights) -> Self {
        let mut candidates: Vec<Pattern> = Vec::new();
        let mut ids = Vec::with_capacity(layer.kernel_count());
        for o in 0..layer.out_channels {
            for i in 0..layer.in_channels {
                let support = layer.support(o, i);
                let id = match candidates.iter().position(|p| *p == support) {
                    Some(id) => id,
                    None => {
                        candidates.push(support);
                        candidates.len() - 1
                    }
                };
                ids.push(id);
            }
        }
        PatternAssignment { candidates, ids }
    }
}

/// Resolved or deferred index width for stored output-channel indexes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexBits {
    Auto,
    Fixed(u8),
}

/// Crossbar, OU and converter parameters of the modeled accelerator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub ou_rows: usize,
    pub ou_cols: usize,
    pub crossbar_rows: usize,
    pub crossbar_cols: usize,
    pub bits_per_cell: u32,
    pub weight_bits: u32,
    /// Cells occupied per stored weight; pure area multiplier, cancels in
    /// every efficiency ratio.
    pub cells_per_weight: u64,
    /// Energy per ADC conversion (one bitline readout).
    pub e_adc_pj: f64,
    /// Energy per DAC conversion (one wordline drive).
    pub e_dac_pj: f64,
    /// Energy per OU activation.
    pub e_ou_pj: f64,
    pub index_bits: IndexBits,
    /// When set, OU energy scales with the fraction of cells a partial tile
    /// actually activates instead of charging the full OU price.
    pub ou_energy_scales_with_cells: bool,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        HardwareConfig {
            ou_rows: 9,
            ou_cols: 8,
            crossbar_rows: 512,
            crossbar_cols: 512,
            bits_per_cell: 4,
            weight_bits: 16,
            cells_per_weight: 1,
            e_adc_pj: 1.67,
            e_dac_pj: 0.0182,
            e_ou_pj: 4.8,
            index_bits: IndexBits::Auto,
            ou_energy_scales_with_cells: false,
        }
    }
}

impl HardwareConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ou_rows == 0 || self.ou_cols == 0 || self.crossbar_rows == 0 || self.crossbar_cols == 0 {
            return Err(Error::InvalidConfig("OU and crossbar dimensions must be positive".into()));
        }
        if self.ou_rows > self.crossbar_rows || self.ou_cols > self.crossbar_cols {
            return Err(Error::InvalidConfig(format!(
                "OU {}x{} does not fit crossbar {}x{}",
                self.ou_rows, self.ou_cols, self.crossbar_rows, self.crossbar_cols
            )));
        }
        if self.bits_per_cell == 0 || self.weight_bits == 0 || self.cells_per_weight == 0 {
            return Err(Error::InvalidConfig("bit widths and cells per weight must be positive".into()));
        }
        if self.weight_bits > 32 {
            return Err(Error::InvalidConfig("weight_bits above 32 is not supported".into()));
        }
        if self.e_adc_pj < 0.0 || self.e_dac_pj < 0.0 || self.e_ou_pj < 0.0 {
            return Err(Error::InvalidConfig("energies must be non-negative".into()));
        }
        if let IndexBits::Fixed(bits) = self.index_bits {
            if bits == 0 || bits > 32 {
                return Err(Error::InvalidConfig(format!("index_bits {bits} outside 1..=32")));
            }
        }
        Ok(())
    }

    /// Index width in bits for a layer with `out_channels` outputs.
    /// Auto resolves to ceil(log2(out_channels)), at least 1.
    pub fn resolved_index_bits(&self, out_channels: usize) -> u32 {
        match self.index_bits {
            IndexBits::Fixed(bits) => bits as u32,
            IndexBits::Auto => {
                let bits = usize::BITS - (out_channels.max(1) - 1).leading_zeros();
                bits.max(1)
            }
        }
    }
}

/// One input activation map, C×H×W row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    data: Vec<i32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<i32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidDimension("feature map dimensions must be positive".into()));
        }
        if data.len() != channels * height * width {
            return Err(Error::InvalidDimension(format!(
                "feature map expects {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(FeatureMap { channels, height, width, data })
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn at(&self, channel: usize, y: usize, x: usize) -> i32 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    /// Value at a possibly-padded coordinate; zero outside the real map.
    pub fn at_padded(&self, channel: usize, y: isize, x: isize) -> i32 {
        if y < 0 || x < 0 || y >= self.height as isize || x >= self.width as isize {
            0
        } else {
            self.at(channel, y as usize, x as usize)
        }
    }
}

/// Accumulated convolution outputs, O×H×W row-major, wide enough for exact
/// integer sums.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    data: Vec<i64>,
}

impl OutputMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        OutputMap { channels, height, width, data: vec![0; channels * height * width] }
    }

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    pub fn at(&self, channel: usize, y: usize, x: usize) -> i64 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    pub(crate) fn set(&mut self, channel: usize, y: usize, x: usize, value: i64) {
        self.data[(channel * self.height + y) * self.width + x] = value;
    }

    pub(crate) fn add(&mut self, channel: usize, y: usize, x: usize, value: i64) {
        self.data[(channel * self.height + y) * self.width + x] += value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_size_counts_true_entries() {
        let p = Pattern::from_positions(9, &[0, 4, 8]);
        assert_eq!(p.size(), 3);
        assert_eq!(p.positions(), vec![0, 4, 8]);
        assert!(!p.is_zero());
        assert!(Pattern::zero(9).is_zero());
        assert_eq!(Pattern::zero(9).size(), 0);
    }

    #[test]
    fn pattern_ordering_is_lexicographic() {
        let a = Pattern::new(vec![false, true, true]);
        let b = Pattern::new(vec![true, false, false]);
        assert!(a < b);
    }

    #[test]
    fn layer_rejects_wrong_weight_count() {
        let err = LayerWeights::new("l", 2, 1, 3, 3, 1, 0, vec![0; 17], 16).unwrap_err();
        assert!(matches!(err, Error::InvalidDimension(_)));
    }

    #[test]
    fn layer_rejects_out_of_range_weight() {
        let mut w = vec![0i32; 9];
        w[3] = 40_000;
        let err = LayerWeights::new("l", 1, 1, 3, 3, 1, 0, w, 16).unwrap_err();
        assert!(matches!(err, Error::WeightOutOfRange { .. }));
    }

    #[test]
    fn sparsity_counts_zeros() {
        let layer = LayerWeights::new("l", 1, 1, 2, 2, 1, 0, vec![1, 0, 0, 2], 16).unwrap();
        assert_eq!(layer.sparsity(), 0.5);
        let dense = LayerWeights::new("d", 1, 1, 2, 2, 1, 0, vec![1, 2, 3, 4], 16).unwrap();
        assert_eq!(dense.sparsity(), 0.0);
        let zero = LayerWeights::new("z", 1, 1, 2, 2, 1, 0, vec![0; 4], 16).unwrap();
        assert_eq!(zero.sparsity(), 1.0);
    }

    #[test]
    fn resolved_index_bits_matches_log2() {
        let hw = HardwareConfig::default();
        assert_eq!(hw.resolved_index_bits(512), 9);
        assert_eq!(hw.resolved_index_bits(16), 4);
        assert_eq!(hw.resolved_index_bits(17), 5);
        assert_eq!(hw.resolved_index_bits(1), 1);
        assert!(hw.resolved_index_bits(512) <= 9);
    }

    #[test]
    fn hardware_config_validates_ou_fit() {
        let hw = HardwareConfig { ou_rows: 600, ..HardwareConfig::default() };
        assert!(hw.validate().is_err());
        assert!(HardwareConfig::default().validate().is_ok());
    }

    #[test]
    fn identity_assignment_keeps_supports() {
        let layer = LayerWeights::new(
            "l",
            2,
            1,
            2,
            2,
            1,
            0,
            vec![1, 0, 0, 2, 0, 3, 0, 0],
            16,
        )
        .unwrap();
        let asg = PatternAssignment::identity_of(&layer);
        assert_eq!(asg.candidates().len(), 2);
        asg.validate_against(&layer).unwrap();
        assert_eq!(asg.pattern_of(0, 0, 1), &Pattern::from_positions(4, &[0, 3]));
    }

    #[test]
    fn pattern_serde_roundtrip() {
        let p = Pattern::from_positions(9, &[1, 7]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "\"010000010\"");
        let back: Pattern = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
