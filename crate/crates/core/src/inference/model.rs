use crate::ipomdp::PolicyDistribution;

/// Policy evaluations spent by an inference call. `lower` counts
/// goal-conditioned evaluations of the modeled lower agents, `upper` counts
/// evaluations of the upper agent's policy, and `nested` counts the lower
/// hypotheses each of those evaluations had to weigh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComputeCounter {
    pub lower: u64,
    pub upper: u64,
    pub nested: u64,
}

impl ComputeCounter {
    pub fn total(&self) -> u64 {
        self.lower + self.upper + self.nested
    }

    pub fn add(&mut self, other: &ComputeCounter) {
        self.lower += other.lower;
        self.upper += other.upper;
        self.nested += other.nested;
    }
}

/// A recorded episode viewed as a two-level goal inference problem.
///
/// The lower agents act on their own goal (a lower hypothesis fixes all of
/// them). The upper agent acts on its goal and on its belief over lower
/// hypotheses; that belief is itself built from the lower agents' actions.
/// Step `tau` ranges over recorded action steps; a prefix of length `n`
/// contains steps `0..n`.
pub trait NestedGoalModel {
    /// Number of recorded action steps.
    fn steps(&self) -> usize;

    fn lower_size(&self) -> usize;

    fn upper_size(&self) -> usize;

    /// Probability of the lower agents' recorded actions at `tau` under
    /// lower hypothesis `h`.
    fn lower_likelihood(&self, tau: usize, h: usize) -> f64;

    /// The upper agent's action distribution at `tau` (`0..=steps`) given its
    /// belief, as `(lower hypothesis, weight)` pairs summing to one, and its
    /// goal.
    fn upper_policy(&self, tau: usize, belief: &[(usize, f64)], goal: usize) -> PolicyDistribution;

    /// The upper agent's recorded action at `tau`.
    fn upper_action(&self, tau: usize) -> usize;

    fn upper_likelihood(&self, tau: usize, belief: &[(usize, f64)], goal: usize) -> f64 {
        self.upper_policy(tau, belief, goal).prob(self.upper_action(tau))
    }
}
