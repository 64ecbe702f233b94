use std::collections::VecDeque;

use crate::crystal::{frac_distance, Vec3};

use super::CodecError;

/// Label assigned to points that belong to no cluster.
pub const NOISE: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DbscanParams {
    /// Neighbourhood radius in fractional units.
    pub eps: f64,
    /// Minimum neighbourhood size (the point itself included) of a core point.
    pub min_pts: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams { eps: 0.05, min_pts: 3 }
    }
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self, CodecError> {
        let p = DbscanParams { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if !(self.eps > 0.0) || self.min_pts < 1 {
            return Err(CodecError::InvalidDbscanParams { eps: self.eps, min_pts: self.min_pts });
        }
        Ok(())
    }
}

/// DBSCAN over fractional coordinates with the minimum-image metric.
///
/// Labels are contiguous from 0 in order of discovery (input order); noise is
/// [`NOISE`].
pub fn dbscan_periodic(points: &[Vec3], p: &DbscanParams) -> Vec<i32> {
    let n = points.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| frac_distance(&points[i], &points[j]) <= p.eps).collect())
        .collect();

    let mut labels: Vec<Option<i32>> = vec![None; n];
    let mut next = 0;
    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        if neighbours[i].len() < p.min_pts {
            labels[i] = Some(NOISE);
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = Some(cluster);
        let mut queue: VecDeque<usize> = neighbours[i].iter().copied().collect();
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                Some(NOISE) => labels[j] = Some(cluster),
                Some(_) => continue,
                None => {
                    labels[j] = Some(cluster);
                    if neighbours[j].len() >= p.min_pts {
                        queue.extend(neighbours[j].iter().copied());
                    }
                }
            }
        }
    }
    labels.into_iter().map(|l| l.unwrap_or(NOISE)).collect()
}
