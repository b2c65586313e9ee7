use crate::data::Dataset;
use crate::model::BayesianNetwork;
use crate::rng::{categorical, seeded, Rng};

/// Draws `n` i.i.d. rows by forward sampling in topological order.
pub fn ancestral_sample(net: &BayesianNetwork, n: usize, seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    let mut sampler = ForwardSampler::new(net);
    let mut columns = vec![Vec::with_capacity(n); net.len()];
    let mut row = vec![0; net.len()];
    for _ in 0..n {
        sampler.draw(&mut rng, &mut row);
        for (col, &v) in columns.iter_mut().zip(&row) {
            col.push(v as u16);
        }
    }
    Dataset::from_columns_unchecked(net.vars().clone(), columns, n)
}

/// Reusable forward sampler; draws one full assignment at a time.
pub struct ForwardSampler<'a> {
    net: &'a BayesianNetwork,
    order: Vec<usize>,
}

impl<'a> ForwardSampler<'a> {
    pub fn new(net: &'a BayesianNetwork) -> Self {
        ForwardSampler { net, order: net.dag().topological_order() }
    }

    pub fn draw(&mut self, rng: &mut Rng, row: &mut [usize]) {
        for &node in &self.order {
            row[node] = categorical(rng, self.net.conditional_in(node, row));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{increment, Cpd, Dag, Representation, VariableTable};

    #[test]
    fn zero_rows() {
        let net = fixtures::alarm_sound_network(Representation::Tree);
        assert!(ancestral_sample(&net, 0, 1).is_empty());
    }

    #[test]
    fn deterministic_network() {
        let vars = VariableTable::binary(2);
        let dag = Dag::new(vec![vec![], vec![0]]).unwrap();
        let net = BayesianNetwork::new(
            vars,
            dag,
            vec![Cpd::table(vec![vec![0.0, 1.0]]), Cpd::table(vec![vec![1.0, 0.0], vec![1.0, 0.0]])],
        )
        .unwrap();
        let ds = ancestral_sample(&net, 50, 9);
        assert!(ds.rows().all(|r| r == vec![1, 0]));
    }

    #[test]
    fn same_seed_same_rows() {
        let net = fixtures::alarm_sound_network(Representation::Default);
        assert_eq!(ancestral_sample(&net, 500, 42), ancestral_sample(&net, 500, 42));
        assert_ne!(ancestral_sample(&net, 500, 42), ancestral_sample(&net, 500, 43));
    }

    #[test]
    fn fair_coin_frequency() {
        let net = BayesianNetwork::new(
            VariableTable::binary(1),
            Dag::empty(1),
            vec![Cpd::table(vec![vec![0.5, 0.5]])],
        )
        .unwrap();
        for seed in [1, 2, 3] {
            let p = ancestral_sample(&net, 100_000, seed).empirical_prob(&[(0, 1)]).unwrap();
            assert!((0.494..=0.506).contains(&p), "{p}");
        }
    }

    #[test]
    fn empirical_joint_matches_network() {
        let net = fixtures::alarm_sound_network(Representation::Tree);
        let ds = ancestral_sample(&net, 1_000_000, 5);
        let cards = net.vars().cardinalities();
        let mut freq = std::collections::HashMap::new();
        for r in ds.rows() {
            *freq.entry(r).or_insert(0usize) += 1;
        }
        let mut u = vec![0; cards.len()];
        let mut tv = 0.0;
        loop {
            let p = net.joint_log_prob(&u).exp2();
            let q = *freq.get(&u).unwrap_or(&0) as f64 / ds.len() as f64;
            tv += (p - q).abs();
            if !increment(&mut u, &cards) {
                break;
            }
        }
        assert!(tv / 2.0 < 0.005, "total variation {}", tv / 2.0);
    }
}
