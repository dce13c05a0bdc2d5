use serde::{Deserialize, Serialize};

/// Running mean and variance of observation features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    mean: Vec<f64>,
    var: Vec<f64>,
    count: f64,
    frozen: bool,
}

const CLIP: f64 = 10.0;

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 1e-4,
            frozen: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn unfreeze(&mut self) {
        self.frozen = false;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Merges a batch of rows into the statistics unless frozen.
    pub fn update(&mut self, rows: &[Vec<f64>]) {
        if self.frozen || rows.is_empty() {
            return;
        }
        let n = rows.len() as f64;
        for j in 0..self.dim() {
            let bm = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let bv = rows.iter().map(|r| (r[j] - bm).powi(2)).sum::<f64>() / n;
            let delta = bm - self.mean[j];
            let total = self.count + n;
            self.mean[j] += delta * n / total;
            let m2 = self.var[j] * self.count + bv * n + delta * delta * self.count * n / total;
            self.var[j] = m2 / total;
        }
        self.count += n;
    }

    /// Normalizes a vector whose length is a multiple of the feature
    /// dimension, chunk by chunk.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                let j = i % d;
                ((v - self.mean[j]) / (self.var[j] + 1e-8).sqrt()).clamp(-CLIP, CLIP)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracks_batch_statistics() {
        let mut n = RunningNorm::new(1);
        let rows: Vec<Vec<f64>> = (0..1000).map(|i| vec![(i % 10) as f64]).collect();
        n.update(&rows[..500]);
        n.update(&rows[500..]);
        assert!((n.mean[0] - 4.5).abs() < 1e-3);
        assert!((n.var[0] - 8.25).abs() < 1e-2);
    }

    #[test]
    fn frozen_ignores_updates() {
        let mut n = RunningNorm::new(2);
        n.freeze();
        n.update(&[vec![5.0, 5.0]]);
        assert_eq!(n.normalize(&[1.0, 2.0, 3.0, 4.0]).len(), 4);
        assert_eq!(n.mean, vec![0.0, 0.0]);
    }
}
