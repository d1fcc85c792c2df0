use rand::{Rng, RngCore};

use super::{Environment, StateKey, Transition};
use crate::error::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainState {
    pub position: usize,
    pub steps: usize,
}

/// A corridor of `length` cells. `RIGHT` advances, `LEFT` retreats (the
/// first cell is a wall). Entering the last cell ends the episode with
/// reward 1; running out of `length` steps ends it with reward 0.
///
/// With `random_start` the episode begins in a uniformly drawn cell other
/// than the goal, otherwise in cell 0.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    length: usize,
    discount: f64,
    random_start: bool,
    // optimal values indexed by [steps][position]
    optimal: Vec<Vec<f64>>,
}

impl ChainMdp {
    pub fn new(length: usize, discount: f64, random_start: bool) -> Result<Self> {
        if length < 2 {
            return Err(Error::domain("chain needs at least two cells"));
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::domain(format!(
                "discount must be in (0, 1], got {discount}"
            )));
        }
        let mut env = Self {
            length,
            discount,
            random_start,
            optimal: Vec::new(),
        };
        env.optimal = env.solve_optimal_values();
        Ok(env)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn goal(&self) -> usize {
        self.length - 1
    }

    /// Backward induction over the step counter.
    fn solve_optimal_values(&self) -> Vec<Vec<f64>> {
        let mut values = vec![vec![0.0; self.length]; self.length + 1];
        for steps in (0..self.length).rev() {
            for position in 0..self.goal() {
                let state = ChainState { position, steps };
                values[steps][position] = [LEFT, RIGHT]
                    .iter()
                    .map(|&a| {
                        let t = self.transition(&state, a);
                        let future = if t.terminal {
                            0.0
                        } else {
                            values[t.next_state.steps][t.next_state.position]
                        };
                        t.reward + self.discount * future
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        }
        values
    }

    fn transition(&self, state: &ChainState, action: usize) -> Transition<ChainState> {
        let position = if action == RIGHT {
            state.position + 1
        } else {
            state.position.saturating_sub(1)
        };
        let next_state = ChainState {
            position,
            steps: state.steps + 1,
        };
        let reached = position == self.goal();
        Transition {
            next_state,
            reward: if reached { 1.0 } else { 0.0 },
            terminal: reached || next_state.steps >= self.length,
        }
    }

    /// Optimal discounted return from `state`.
    pub fn optimal_value(&self, state: &ChainState) -> f64 {
        if state.position >= self.goal() || state.steps >= self.length {
            return 0.0;
        }
        self.optimal[state.steps][state.position]
    }

    /// Expected optimal return over the start distribution.
    pub fn optimal_return(&self) -> f64 {
        let starts: Vec<usize> = if self.random_start {
            (0..self.goal()).collect()
        } else {
            vec![0]
        };
        starts
            .iter()
            .map(|&position| self.optimal_value(&ChainState { position, steps: 0 }))
            .sum::<f64>()
            / starts.len() as f64
    }
}

impl Environment for ChainMdp {
    type State = ChainState;

    fn num_actions(&self) -> usize {
        2
    }

    fn initial_state(&self, rng: &mut dyn RngCore) -> ChainState {
        let position = if self.random_start {
            rng.random_range(0..self.goal())
        } else {
            0
        };
        ChainState { position, steps: 0 }
    }

    fn step(&self, state: &ChainState, action: usize) -> Result<Transition<ChainState>> {
        if action > RIGHT {
            return Err(Error::domain_at(
                action,
                "chain actions are 0 (left) and 1 (right)",
            ));
        }
        if state.position >= self.goal() || state.steps >= self.length {
            return Err(Error::Logic("chain episode already finished".into()));
        }
        Ok(self.transition(state, action))
    }

    fn state_key(&self, state: &ChainState) -> StateKey {
        (state.steps * self.length + state.position) as StateKey
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn value_estimate(&self, state: &ChainState) -> f64 {
        self.optimal_value(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walking_right_reaches_goal() {
        let env = ChainMdp::new(4, 0.9, false).unwrap();
        let mut s = ChainState {
            position: 0,
            steps: 0,
        };
        let mut ret = 0.0;
        let mut discount = 1.0;
        loop {
            let t = env.step(&s, RIGHT).unwrap();
            ret += discount * t.reward;
            discount *= env.discount();
            s = t.next_state;
            if t.terminal {
                break;
            }
        }
        assert_eq!(s.position, 3);
        assert!((ret - 0.81).abs() < 1e-12);
        assert!(
            (env.optimal_value(&ChainState {
                position: 0,
                steps: 0
            }) - 0.81)
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn episodes_are_capped_at_length() {
        let env = ChainMdp::new(3, 1.0, false).unwrap();
        let mut s = ChainState {
            position: 0,
            steps: 0,
        };
        for step in 1..=3 {
            let t = env.step(&s, LEFT).unwrap();
            assert_eq!(t.terminal, step == 3);
            s = t.next_state;
        }
        assert!(env.step(&s, RIGHT).is_err());
    }

    #[test]
    fn optimal_values_match_closed_form() {
        // from (p, t) the goal is d = L−1−p steps away; reachable iff t + d ≤ L
        let env = ChainMdp::new(10, 0.95, true).unwrap();
        for steps in 0..10 {
            for position in 0..9 {
                let d = 9 - position;
                let expected = if steps + d <= 10 {
                    0.95f64.powi(d as i32 - 1)
                } else {
                    0.0
                };
                let v = env.optimal_value(&ChainState { position, steps });
                assert!(
                    (v - expected).abs() < 1e-12,
                    "({position}, {steps}): {v} vs {expected}"
                );
            }
        }
    }
}
