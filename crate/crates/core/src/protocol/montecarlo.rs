use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::Node;
use super::{Mode, Pipeline, RunReport, Tally};
use crate::error::{Result, SimError};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

/// Trials per parallel work item.
const CHUNK: u64 = 4096;

/// Samples `trials` independent events. Trial `i` draws from its own ChaCha8
/// stream `i` under `seed`, so results do not depend on scheduling.
pub fn monte_carlo(pipeline: &Pipeline, trials: u64, seed: u64, execution: Execution) -> Result<RunReport> {
    if trials == 0 {
        return Err(SimError::InvalidParameter("trials must be at least 1".into()));
    }
    let tree = pipeline.tree()?;
    let tally = match execution {
        Execution::Serial => run_range(&tree, seed, 0, trials),
        Execution::Parallel => {
            let chunks = trials.div_ceil(CHUNK);
            (0..chunks)
                .into_par_iter()
                .map(|c| run_range(&tree, seed, c * CHUNK, ((c + 1) * CHUNK).min(trials)))
                .reduce(Tally::default, Tally::add)
        }
    };
    Ok(report_from_counts(tally, seed))
}

fn run_range(tree: &Node, seed: u64, start: u64, end: u64) -> Tally<u64> {
    let mut t = Tally::<u64>::default();
    for i in start..end {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let leaf = tree.sample(&mut rng);
        match leaf.kept {
            None => {
                t.discarded += 1;
                t.same_mode_double += leaf.same_mode_double as u64;
            }
            Some(pairs) => {
                let correct = match leaf.fidelity {
                    f if f >= 1.0 => true,
                    f if f <= 0.0 => false,
                    f => rng.gen::<f64>() < f,
                };
                if correct {
                    t.kept_correct += 1;
                } else {
                    t.kept_erroneous += 1;
                }
                t.kept_pairs += pairs as u64;
            }
        }
    }
    t
}

fn report_from_counts(c: Tally<u64>, seed: u64) -> RunReport {
    let n = c.trials();
    let nf = n as f64;
    let kept = c.kept_correct + c.kept_erroneous;
    let fidelity = (kept > 0).then(|| c.kept_correct as f64 / kept as f64);
    let yield_ = kept as f64 / nf;
    let se = |p: f64, m: u64| (m >= 2).then(|| (p * (1.0 - p) / m as f64).sqrt());
    RunReport {
        fidelity,
        yield_,
        fidelity_se: fidelity.and_then(|f| se(f, kept)),
        yield_se: se(yield_, n),
        probabilities: Tally {
            kept_correct: c.kept_correct as f64 / nf,
            kept_erroneous: c.kept_erroneous as f64 / nf,
            discarded: c.discarded as f64 / nf,
            kept_pairs: c.kept_pairs as f64 / nf,
            same_mode_double: c.same_mode_double as f64 / nf,
        },
        counts: Some(c),
        mode: Mode::MonteCarlo { trials: n, seed },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_report() {
        let p = Pipeline::Stage2 { fidelity: 0.8 };
        let a = monte_carlo(&p, 20_000, 7, Execution::Parallel).unwrap();
        let b = monte_carlo(&p, 20_000, 7, Execution::Parallel).unwrap();
        let c = monte_carlo(&p, 20_000, 7, Execution::Serial).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_ne!(a.counts, monte_carlo(&p, 20_000, 8, Execution::Serial).unwrap().counts);
    }

    #[test]
    fn stage2_within_three_standard_errors() {
        let n = 100_000;
        let r = monte_carlo(&Pipeline::Stage2 { fidelity: 0.8 }, n, 0, Execution::Parallel).unwrap();
        let (f, y) = (0.64 / 0.68, 0.68);
        let se_f = (f * (1.0 - f) / (n as f64 * y)).sqrt();
        let se_y = (y * (1.0 - y) / n as f64).sqrt();
        assert!((r.fidelity.unwrap() - f).abs() <= 3.0 * se_f);
        assert!((r.yield_ - y).abs() <= 3.0 * se_y);
        assert!(r.fidelity_se.is_some() && r.yield_se.is_some());
    }

    #[test]
    fn single_trial_has_undefined_errors() {
        let r = monte_carlo(&Pipeline::Stage2 { fidelity: 0.8 }, 1, 3, Execution::Serial).unwrap();
        assert_eq!(r.counts.unwrap().trials(), 1);
        assert_eq!((r.fidelity_se, r.yield_se), (None, None));
        assert!(monte_carlo(&Pipeline::Stage2 { fidelity: 0.8 }, 0, 3, Execution::Serial).is_err());
    }
}
