use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: [f64; 3],
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub done: bool,
}

/// One fixed-capacity ring of transitions per agent.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    rings: Vec<Vec<Transition>>,
    heads: Vec<usize>,
    inserted: usize,
}

impl ReplayBuffer {
    pub fn new(n_agents: usize, capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            rings: vec![Vec::new(); n_agents],
            heads: vec![0; n_agents],
            inserted: 0,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.rings.len()
    }

    /// Total transitions ever inserted, across agents.
    pub fn inserted(&self) -> usize {
        self.inserted
    }

    /// Transitions currently stored for one agent.
    pub fn len(&self, agent: usize) -> usize {
        self.rings[agent].len()
    }

    pub fn is_empty(&self) -> bool {
        self.rings.iter().all(Vec::is_empty)
    }

    pub fn push(&mut self, agent: usize, t: Transition) {
        let ring = &mut self.rings[agent];
        if ring.len() < self.capacity {
            ring.push(t);
        } else {
            ring[self.heads[agent]] = t;
        }
        self.heads[agent] = (self.heads[agent] + 1) % self.capacity;
        self.inserted += 1;
    }

    /// Draws `batch` distinct transitions uniformly from the rings of
    /// `agents`. Fails until `learner_start` transitions have been inserted.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        agents: &[usize],
        batch: usize,
        learner_start: usize,
        rng: &mut R,
    ) -> Result<Vec<&Transition>> {
        if self.inserted < learner_start {
            return Err(Error::LearnerNotStarted {
                have: self.inserted,
                need: learner_start,
            });
        }
        let sizes: Vec<usize> = agents.iter().map(|&a| self.rings[a].len()).collect();
        let total: usize = sizes.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput("replay buffer"));
        }
        let k = batch.min(total);
        Ok(sample(rng, total, k)
            .into_iter()
            .map(|mut idx| {
                let mut r = 0;
                while idx >= sizes[r] {
                    idx -= sizes[r];
                    r += 1;
                }
                &self.rings[agents[r]][idx]
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(r: f64) -> Transition {
        Transition {
            obs: vec![r],
            action: [0.5; 3],
            reward: r,
            next_obs: vec![r],
            done: false,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(1, 3);
        for i in 0..5 {
            b.push(0, tr(i as f64));
        }
        assert_eq!(b.len(0), 3);
        assert_eq!(b.inserted(), 5);
        let mut rewards: Vec<f64> = b.rings[0].iter().map(|t| t.reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn sampling_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut b = ReplayBuffer::new(2, 100);
        for i in 0..10 {
            b.push(i % 2, tr(i as f64));
        }
        assert!(matches!(b.sample(&[0, 1], 4, 20, &mut rng), Err(Error::LearnerNotStarted { have: 10, need: 20 })));
        let s = b.sample(&[0, 1], 10, 10, &mut rng).unwrap();
        let mut seen: Vec<f64> = s.iter().map(|t| t.reward).collect();
        seen.sort_by(f64::total_cmp);
        seen.dedup();
        assert_eq!(seen.len(), 10);
        let only_one = b.sample(&[1], 10, 10, &mut rng).unwrap();
        assert!(only_one.iter().all(|t| t.reward as usize % 2 == 1));
    }
}
