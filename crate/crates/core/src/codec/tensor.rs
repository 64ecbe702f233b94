use std::io::{Read, Write};

use super::CodecError;

pub const CHANNELS: usize = 3;
pub const POINTS: usize = 128;
pub const COMPONENTS: usize = 3;
pub const TENSOR_LEN: usize = CHANNELS * POINTS * COMPONENTS;

pub const PCT_MAGIC: &[u8; 8] = b"PCCDPCT1";

/// Channel indices.
pub const POSITIONS: usize = 0;
pub const ELEMENTS: usize = 1;
pub const LATTICE: usize = 2;

/// A 3 (channel) × 128 (point) × 3 (component) array stored channel-major,
/// point-major, component-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudTensor {
    data: Vec<f64>,
}

impl Default for PointCloudTensor {
    fn default() -> Self {
        Self::zeros()
    }
}

impl PointCloudTensor {
    pub fn zeros() -> Self {
        PointCloudTensor { data: vec![0.0; TENSOR_LEN] }
    }

    pub fn filled(v: f64) -> Self {
        PointCloudTensor { data: vec![v; TENSOR_LEN] }
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self, CodecError> {
        if data.len() != TENSOR_LEN {
            return Err(CodecError::ShapeMismatch { expected: TENSOR_LEN, found: data.len() });
        }
        Ok(PointCloudTensor { data })
    }

    #[inline]
    pub fn index(channel: usize, point: usize, component: usize) -> usize {
        debug_assert!(channel < CHANNELS && point < POINTS && component < COMPONENTS);
        (channel * POINTS + point) * COMPONENTS + component
    }

    #[inline]
    pub fn get(&self, channel: usize, point: usize, component: usize) -> f64 {
        self.data[Self::index(channel, point, component)]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, point: usize, component: usize, v: f64) {
        self.data[Self::index(channel, point, component)] = v;
    }

    pub fn row(&self, channel: usize, point: usize) -> [f64; 3] {
        let i = Self::index(channel, point, 0);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_row(&mut self, channel: usize, point: usize, v: [f64; 3]) {
        let i = Self::index(channel, point, 0);
        self.data[i..i + 3].copy_from_slice(&v);
    }

    /// The 128×3 block of one channel.
    pub fn channel(&self, channel: usize) -> &[f64] {
        let n = POINTS * COMPONENTS;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PointCloudTensor { data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        PointCloudTensor { data: self.data.iter().zip(&other.data).map(|(&x, &y)| f(x, y)).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `.pct` encoding: magic, three u32 dims, 1152 f64 values, all little-endian.
    pub fn to_pct_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 12 + TENSOR_LEN * 8);
        out.extend_from_slice(PCT_MAGIC);
        for d in [CHANNELS, POINTS, COMPONENTS] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_pct_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let expected = 8 + 12 + TENSOR_LEN * 8;
        if bytes.len() < 8 || &bytes[..8] != PCT_MAGIC {
            return Err(CodecError::BadMagic);
        }
        if bytes.len() < 20 {
            return Err(CodecError::Truncated { expected, found: bytes.len() });
        }
        let dim = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap());
        let dims = [dim(0), dim(1), dim(2)];
        if dims != [CHANNELS as u32, POINTS as u32, COMPONENTS as u32] {
            return Err(CodecError::BadDims(dims));
        }
        if bytes.len() != expected {
            return Err(CodecError::Truncated { expected, found: bytes.len() });
        }
        let data = bytes[20..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(PointCloudTensor { data })
    }

    pub fn write_pct<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.to_pct_bytes())
    }

    pub fn read_pct<R: Read>(mut r: R) -> Result<Self, crate::Error> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Ok(Self::from_pct_bytes(&buf)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        assert_eq!(PointCloudTensor::index(0, 0, 0), 0);
        assert_eq!(PointCloudTensor::index(0, 1, 0), 3);
        assert_eq!(PointCloudTensor::index(1, 0, 0), 384);
        assert_eq!(PointCloudTensor::index(2, 127, 2), TENSOR_LEN - 1);
    }

    #[test]
    fn pct_header_is_exact() {
        let mut t = PointCloudTensor::zeros();
        t.set(0, 0, 1, 0.5);
        let b = t.to_pct_bytes();
        assert_eq!(b.len(), 20 + 1152 * 8);
        assert_eq!(&b[..8], b"PCCDPCT1");
        assert_eq!(&b[8..20], &[3, 0, 0, 0, 128, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&b[28..36], &0.5f64.to_le_bytes());
    }

    #[test]
    fn pct_rejects_corruption() {
        let b = PointCloudTensor::zeros().to_pct_bytes();
        assert!(matches!(PointCloudTensor::from_pct_bytes(&b[..100]), Err(CodecError::Truncated { .. })));
        let mut bad = b.clone();
        bad[0] = b'X';
        assert_eq!(PointCloudTensor::from_pct_bytes(&bad), Err(CodecError::BadMagic));
        let mut bad = b.clone();
        bad[8] = 4;
        assert_eq!(PointCloudTensor::from_pct_bytes(&bad), Err(CodecError::BadDims([4, 128, 3])));
        assert!(PointCloudTensor::from_vec(vec![0.0; 10]).is_err());
    }

    proptest! {
        #[test]
        fn pct_round_trip(v in prop::collection::vec(-1e6f64..1e6, TENSOR_LEN)) {
            let t = PointCloudTensor::from_vec(v).unwrap();
            let back = PointCloudTensor::from_pct_bytes(&t.to_pct_bytes()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
