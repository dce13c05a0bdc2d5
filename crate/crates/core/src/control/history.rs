use std::collections::VecDeque;

/// Concatenation of each agent's `k` most recent observations, oldest
/// first, zero-padded until `k` observations have been seen.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryStack {
    k: usize,
    base_dim: usize,
    frames: Vec<VecDeque<Vec<f64>>>,
}

impl HistoryStack {
    pub fn new(k: usize, base_dim: usize) -> Self {
        Self {
            k: k.max(1),
            base_dim,
            frames: Vec::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn output_dim(&self) -> usize {
        self.k * self.base_dim
    }

    pub fn reset(&mut self, n_agents: usize) {
        self.frames = vec![VecDeque::with_capacity(self.k); n_agents];
    }

    /// Pushes one observation per agent and returns the stacked inputs.
    pub fn push(&mut self, obs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        if self.frames.len() != obs.len() {
            self.reset(obs.len());
        }
        obs.iter()
            .zip(&mut self.frames)
            .map(|(o, q)| {
                if q.len() == self.k {
                    q.pop_front();
                }
                q.push_back(o.clone());
                let mut out = vec![0.0; (self.k - q.len()) * self.base_dim];
                for f in q.iter() {
                    out.extend_from_slice(f);
                }
                out
            })
            .collect()
    }
}
