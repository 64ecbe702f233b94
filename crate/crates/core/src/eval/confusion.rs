/// Counts of (original site count, predicted site count) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    /// `counts[i - 1][j - 1]` = pairs with `i` original and `j` predicted sites.
    pub counts: Vec<Vec<usize>>,
    /// Pairs with no decoded prediction (zero predicted sites). They count
    /// towards the total as misses.
    pub undecoded: usize,
}

impl ConfusionMatrix {
    pub fn size(&self) -> usize {
        self.counts.len()
    }

    /// Entry for 1-based atom counts; zero outside the observed range.
    pub fn get(&self, original: usize, predicted: usize) -> usize {
        if original == 0 || predicted == 0 {
            return 0;
        }
        self.counts
            .get(original - 1)
            .and_then(|r| r.get(predicted - 1))
            .copied()
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum::<usize>() + self.undecoded
    }

    pub fn trace(&self) -> usize {
        (0..self.size()).map(|i| self.counts[i][i]).sum()
    }

    /// trace / total; zero for an empty matrix.
    pub fn diagonal_fraction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => self.trace() as f64 / t as f64,
        }
    }
}

/// Builds the matrix from (original, predicted) site counts. Its size is the
/// largest count observed on either axis.
pub fn atom_count_confusion(pairs: &[(usize, usize)]) -> ConfusionMatrix {
    let n = pairs.iter().map(|&(o, p)| o.max(p)).max().unwrap_or(0);
    let mut counts = vec![vec![0; n]; n];
    let mut undecoded = 0;
    for &(o, p) in pairs {
        if o > 0 && p > 0 {
            counts[o - 1][p - 1] += 1;
        } else {
            undecoded += 1;
        }
    }
    ConfusionMatrix { counts, undecoded }
}
