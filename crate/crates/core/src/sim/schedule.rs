use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum ScheduleRule {
    Constant { m: usize },
    Cyclic { pattern: Vec<usize> },
    /// Uniform draws from the admissible set with a recorded seed.
    Random { seed: u64 },
}

/// An admissible control-horizon sequence generator: every emitted `m_i`
/// lies in `set`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonSchedule {
    pub set: Vec<usize>,
    #[serde(flatten)]
    pub rule: ScheduleRule,
}

impl HorizonSchedule {
    pub fn constant(m: usize) -> Result<Self> {
        Self::new(vec![m], ScheduleRule::Constant { m })
    }

    pub fn cyclic(pattern: Vec<usize>) -> Result<Self> {
        let mut set = pattern.clone();
        set.sort_unstable();
        set.dedup();
        Self::new(set, ScheduleRule::Cyclic { pattern })
    }

    pub fn random(set: Vec<usize>, seed: u64) -> Result<Self> {
        Self::new(set, ScheduleRule::Random { seed })
    }

    pub fn new(mut set: Vec<usize>, rule: ScheduleRule) -> Result<Self> {
        set.sort_unstable();
        set.dedup();
        let s = HorizonSchedule { set, rule };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.set.is_empty() || self.set[0] == 0 {
            return Err(Error::InvalidQuery("control-horizon set must be nonempty and positive".into()));
        }
        let inside = |m: &usize| self.set.binary_search(m).is_ok();
        match &self.rule {
            ScheduleRule::Constant { m } if !inside(m) => {
                Err(Error::InvalidQuery(format!("m = {m} not in the admissible set")))
            }
            ScheduleRule::Cyclic { pattern } if pattern.is_empty() || !pattern.iter().all(inside) => {
                Err(Error::InvalidQuery("cyclic pattern empty or outside the admissible set".into()))
            }
            _ => Ok(()),
        }
    }

    /// `m* = max M`.
    pub fn max_horizon(&self) -> usize {
        *self.set.last().expect("validated schedule")
    }

    pub fn seed(&self) -> Option<u64> {
        match self.rule {
            ScheduleRule::Random { seed } => Some(seed),
            _ => None,
        }
    }

    /// The first `len` control horizons `m_0, m_1, …`.
    pub fn sequence(&self, len: usize) -> Vec<usize> {
        match &self.rule {
            ScheduleRule::Constant { m } => vec![*m; len],
            ScheduleRule::Cyclic { pattern } => pattern.iter().copied().cycle().take(len).collect(),
            ScheduleRule::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..len)
                    .map(|_| *self.set.choose(&mut rng).expect("validated schedule"))
                    .collect()
            }
        }
    }
}

/// `σ(k) = Σ_{j<k} m_j`; needs `k ≤ seq.len()`.
pub fn sigma(seq: &[usize], k: usize) -> usize {
    seq[..k].iter().sum()
}

/// `σ(0), …, σ(seq.len())`.
pub fn transmission_times(seq: &[usize]) -> Vec<usize> {
    std::iter::once(0)
        .chain(seq.iter().scan(0, |acc, m| {
            *acc += m;
            Some(*acc)
        }))
        .collect()
}

/// `φ(n) = max{σ(k) : σ(k) ≤ n}`, or `None` if `n` lies beyond the prefix.
pub fn phi(seq: &[usize], n: usize) -> Option<usize> {
    let times = transmission_times(seq);
    if n > *times.last().unwrap() {
        return None;
    }
    times.into_iter().take_while(|t| *t <= n).last()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bookkeeping_examples() {
        let seq = [2, 1, 3];
        assert_eq!(transmission_times(&seq), vec![0, 2, 3, 6]);
        assert_eq!(sigma(&seq, 2), 3);
        assert_eq!(phi(&seq, 4), Some(3));
        assert_eq!(phi(&seq, 0), Some(0));
        assert_eq!(phi(&seq, 6), Some(6));
        assert_eq!(phi(&seq, 7), None);
        let ones = [1; 10];
        for n in 0..=10 {
            assert_eq!(sigma(&ones, n.min(10)), n);
            assert_eq!(phi(&ones, n), Some(n));
        }
        assert_eq!(phi(&[], 0), Some(0));
    }

    #[test]
    fn generators_stay_admissible() {
        let r = HorizonSchedule::random(vec![1, 2, 3], 7).unwrap();
        let s = r.sequence(200);
        assert!(s.iter().all(|m| (1..=3).contains(m)));
        assert!((1..=3).all(|m| s.contains(&m)));
        assert_eq!(s, r.sequence(200));
        assert_eq!(r.seed(), Some(7));
        assert_eq!(HorizonSchedule::cyclic(vec![2, 1]).unwrap().sequence(5), vec![2, 1, 2, 1, 2]);
        assert_eq!(HorizonSchedule::constant(3).unwrap().max_horizon(), 3);
        assert!(HorizonSchedule::constant(0).is_err());
        assert!(HorizonSchedule::new(vec![1, 2], ScheduleRule::Constant { m: 3 }).is_err());
    }
}
