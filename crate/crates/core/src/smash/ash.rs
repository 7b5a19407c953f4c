use serde::{Deserialize, Serialize};

use crate::hulk::InstanceTrace;
use crate::scnn::{Network, SpikeRecord, PIXEL_LAYER};
use crate::{Error, Result};

/// Bits spent on one explicit `(x, y, feature, tick)` spike record.
pub const RECORD_BITS: usize = 64;

/// Binary feature x tick matrix, bit-packed row-major into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AshMatrix {
    pub rows: usize,
    pub cols: usize,
    pub words: Vec<u64>,
}

impl AshMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            words: vec![0; (rows * cols).div_ceil(64)],
        }
    }

    pub fn from_support(rows: usize, cols: usize, support: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(rows, cols);
        for (r, c) in support {
            m.set(r, c);
        }
        m
    }

    pub fn bits(&self) -> usize {
        self.rows * self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        let i = row * self.cols + col;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize) {
        assert!(
            row < self.rows && col < self.cols,
            "bit ({row}, {col}) outside {}x{}",
            self.rows,
            self.cols
        );
        let i = row * self.cols + col;
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Set bits as `(row, col)`, row-major.
    pub fn support(&self) -> Vec<(usize, usize)> {
        (0..self.bits())
            .filter(|&i| self.words[i / 64] >> (i % 64) & 1 == 1)
            .map(|i| (i / self.cols, i % self.cols))
            .collect()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension(format!(
                "ASH matrices {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn union_with(&mut self, other: &Self) -> Result<()> {
        self.check(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    /// Rows as strings of `0`/`1`, one per feature map.
    pub fn to_rows(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect())
            .collect()
    }
}

/// Binary Jaccard index: `|a AND b| / |a OR b|`, 0 when both are empty.
pub fn similarity(a: &AshMatrix, b: &AshMatrix) -> Result<f64> {
    a.check(b)?;
    let (mut and, mut or) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        and += (x & y).count_ones();
        or += (x | y).count_ones();
    }
    Ok(if or == 0 { 0.0 } else { f64::from(and) / f64::from(or) })
}

/// Row assignment: classification maps first, then each lower conv layer,
/// ending with the first conv layer. Pixels have no row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AshLayout {
    /// Row offset per layer id (index 0, the pixel layer, is unused).
    pub offsets: Vec<usize>,
    pub rows: usize,
    pub ticks: usize,
}

impl AshLayout {
    /// `features[l]` is the map count of layer id `l`; `features[0]` is ignored.
    pub fn from_features(features: &[u16], ticks: u8) -> Self {
        let mut offsets = vec![0; features.len()];
        let mut row = 0;
        for l in (1..features.len()).rev() {
            offsets[l] = row;
            row += usize::from(features[l]);
        }
        Self {
            offsets,
            rows: row,
            ticks: usize::from(ticks),
        }
    }

    pub fn of(network: &Network) -> Self {
        Self::from_features(&network.config.layer_features(), network.config.ticks)
    }

    pub fn row(&self, record: &SpikeRecord) -> Option<usize> {
        (record.layer != PIXEL_LAYER).then(|| self.offsets[usize::from(record.layer)] + usize::from(record.feature))
    }
}

/// Bit `(row, tick)` is set iff the trace holds a spike of that feature map
/// at that tick; locations are discarded.
pub fn ash_hash(trace: &InstanceTrace, layout: &AshLayout) -> AshMatrix {
    let mut m = AshMatrix::new(layout.rows, layout.ticks);
    for r in trace.feature_records() {
        if let Some(row) = layout.row(r) {
            m.set(row, usize::from(r.tick));
        }
    }
    m
}

/// Size saved by the ASH matrix relative to one 64-bit record per feature
/// spike; negative when the trace is smaller than the matrix.
pub fn compression_ratio(trace: &InstanceTrace, layout: &AshLayout) -> f64 {
    let explicit = trace.feature_records().count() * RECORD_BITS;
    if explicit == 0 {
        return 0.0;
    }
    1.0 - (layout.rows * layout.ticks) as f64 / explicit as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support_jaccard(a: &AshMatrix, b: &AshMatrix) -> f64 {
        let sa: std::collections::BTreeSet<_> = a.support().into_iter().collect();
        let sb: std::collections::BTreeSet<_> = b.support().into_iter().collect();
        let union = sa.union(&sb).count();
        if union == 0 {
            0.0
        } else {
            sa.intersection(&sb).count() as f64 / union as f64
        }
    }

    #[test]
    fn hand_counted_jaccard() {
        let a = AshMatrix::from_support(5, 2, [(1, 0), (2, 0), (3, 1)]);
        let b = AshMatrix::from_support(5, 2, [(2, 0), (3, 1), (4, 1)]);
        assert_eq!(similarity(&a, &b).unwrap(), 0.5);
        assert_eq!(similarity(&a, &a).unwrap(), 1.0);
        assert_eq!(similarity(&AshMatrix::new(5, 2), &AshMatrix::new(5, 2)).unwrap(), 0.0);
        assert_eq!(support_jaccard(&a, &b), 0.5);
    }

    #[test]
    fn disjoint_is_zero_and_mismatch_errors() {
        let a = AshMatrix::from_support(41, 10, [(0, 0)]);
        let b = AshMatrix::from_support(41, 10, [(1, 0)]);
        assert_eq!(similarity(&a, &b).unwrap(), 0.0);
        assert!(similarity(&a, &AshMatrix::new(40, 10)).is_err());
    }

    #[test]
    fn face_layout_rows() {
        let layout = AshLayout::from_features(&[1, 4, 36, 1], 10);
        assert_eq!(layout.rows, 41);
        assert_eq!(layout.row(&SpikeRecord::new(3, 0, 0, 0, 0)), Some(0));
        assert_eq!(layout.row(&SpikeRecord::new(2, 0, 0, 18, 3)), Some(19));
        assert_eq!(layout.row(&SpikeRecord::new(1, 0, 0, 3, 3)), Some(40));
        assert_eq!(layout.row(&SpikeRecord::new(0, 0, 0, 0, 3)), None);
    }

    #[test]
    fn hash_sets_feature_tick_bits() {
        let layout = AshLayout::from_features(&[1, 4, 36, 1], 10);
        let trace = InstanceTrace {
            id: 0,
            source: SpikeRecord::new(3, 4, 4, 0, 0),
            layers: vec![
                vec![SpikeRecord::new(0, 1, 1, 0, 0)],
                vec![SpikeRecord::new(1, 2, 2, 1, 2)],
                vec![
                    SpikeRecord::new(2, 3, 3, 18, 3),
                    SpikeRecord::new(2, 5, 3, 18, 5),
                    SpikeRecord::new(2, 6, 3, 18, 5),
                ],
                vec![SpikeRecord::new(3, 4, 4, 0, 0)],
            ],
            pixels: vec![(1, 1)],
        };
        let m = ash_hash(&trace, &layout);
        assert_eq!(m.support(), vec![(0, 0), (19, 3), (19, 5), (38, 2)]);
    }

    proptest::proptest! {
        #[test]
        fn logical_form_equals_set_jaccard(
            a in proptest::collection::vec(proptest::bool::ANY, 410),
            b in proptest::collection::vec(proptest::bool::ANY, 410),
        ) {
            let ma = AshMatrix::from_support(41, 10, (0..410).filter(|&i| a[i]).map(|i| (i / 10, i % 10)));
            let mb = AshMatrix::from_support(41, 10, (0..410).filter(|&i| b[i]).map(|i| (i / 10, i % 10)));
            let s = similarity(&ma, &mb).unwrap();
            proptest::prop_assert_eq!(s, support_jaccard(&ma, &mb));
            proptest::prop_assert_eq!(s, similarity(&mb, &ma).unwrap());
            proptest::prop_assert!((0.0..=1.0).contains(&s));
        }
    }
}
