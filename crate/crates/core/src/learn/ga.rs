//! Genetic feature-subset selection.
//!
//! Individuals are feature bitmasks. Each generation keeps the `elitism`
//! best individuals unchanged and fills the rest with children of
//! tournament-selected parents via two-point crossover followed by per-bit
//! random replacement (a mutated bit is redrawn uniformly, so it flips with
//! probability one half).

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, kfold_split, scaled_svm_predict};
use super::svm::SvmParams;
use super::{apply_mask, LearnError};

pub type Mask = Vec<bool>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub mutation_rate: f64,
    pub elitism: usize,
    /// Stop after this many generations without improvement.
    pub stagnation_limit: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self { population: 200, generations: 50, tournament_size: 3, mutation_rate: 0.01, elitism: 2, stagnation_limit: 10, seed: 0 }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: String| Err(LearnError::InvalidParameter(m));
        if self.population < 2 || self.population % 2 != 0 {
            return bad(format!("population must be even and at least 2, got {}", self.population));
        }
        if self.elitism > self.population {
            return bad(format!("elitism {} exceeds population {}", self.elitism, self.population));
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation rate {} outside [0, 1]", self.mutation_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_mask: Mask,
    pub best_fitness: f64,
    /// Best-so-far fitness after initialisation and after each generation.
    pub trace: Vec<f64>,
}

/// Children of a two-point crossover with cut points `a <= b`: the first
/// child is `p1[..a] ++ p2[a..b] ++ p1[b..]`, the second its complement.
pub fn two_point_crossover(p1: &[bool], p2: &[bool], a: usize, b: usize) -> (Mask, Mask) {
    assert!(a <= b && b <= p1.len() && p1.len() == p2.len(), "bad crossover cut points");
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    c1[a..b].copy_from_slice(&p2[a..b]);
    c2[a..b].copy_from_slice(&p1[a..b]);
    (c1, c2)
}

/// Redraws each bit with probability `rate`.
pub fn mutate<R: Rng>(mask: &mut [bool], rate: f64, rng: &mut R) {
    for bit in mask.iter_mut() {
        if rng.random::<f64>() < rate {
            *bit = rng.random();
        }
    }
}

fn tournament<R: Rng>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Maximises `fitness` over masks of `n_features` bits. All-zero masks
/// score 0 without calling `fitness`; each distinct mask is scored once.
pub fn ga_select<F>(n_features: usize, cfg: &GaConfig, mut fitness: F) -> Result<GaResult, LearnError>
where
    F: FnMut(&[bool]) -> Result<f64, LearnError>,
{
    cfg.validate()?;
    if n_features < 2 {
        return Err(LearnError::InvalidParameter(format!("need at least 2 features, got {n_features}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache: HashMap<Mask, f64> = HashMap::new();
    let mut score = |m: &Mask| -> Result<f64, LearnError> {
        if let Some(&f) = cache.get(m) {
            return Ok(f);
        }
        let f = if m.iter().any(|&b| b) { fitness(m)? } else { 0.0 };
        cache.insert(m.clone(), f);
        Ok(f)
    };

    let mut pop: Vec<Mask> = (0..cfg.population).map(|_| (0..n_features).map(|_| rng.random()).collect()).collect();
    let mut fit: Vec<f64> = pop.iter().map(&mut score).collect::<Result<_, _>>()?;
    let first = argmax(&fit);
    let (mut best_mask, mut best_fitness) = (pop[first].clone(), fit[first]);
    let mut trace = vec![best_fitness];
    let mut stagnant = 0;

    for _ in 0..cfg.generations {
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let mut next: Vec<Mask> = order[..cfg.elitism].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < cfg.population {
            let p1 = &pop[tournament(&fit, cfg.tournament_size, &mut rng)];
            let p2 = &pop[tournament(&fit, cfg.tournament_size, &mut rng)];
            let mut cuts = [rng.random_range(0..=n_features), rng.random_range(0..=n_features)];
            cuts.sort_unstable();
            let (mut c1, mut c2) = two_point_crossover(p1, p2, cuts[0], cuts[1]);
            mutate(&mut c1, cfg.mutation_rate, &mut rng);
            mutate(&mut c2, cfg.mutation_rate, &mut rng);
            next.push(c1);
            if next.len() < cfg.population {
                next.push(c2);
            }
        }
        pop = next;
        fit = pop.iter().map(&mut score).collect::<Result<_, _>>()?;
        let i = argmax(&fit);
        if fit[i] > best_fitness {
            best_fitness = fit[i];
            best_mask = pop[i].clone();
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        trace.push(best_fitness);
        if stagnant >= cfg.stagnation_limit {
            break;
        }
    }
    if !best_mask.iter().any(|&b| b) {
        return Err(LearnError::DegenerateMask);
    }
    Ok(GaResult { best_mask, best_fitness, trace })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
}

/// Fitness as inner 3-fold cross-validated accuracy of a scaled SVM on the
/// masked columns of the training rows.
pub fn cv_fitness<'a>(x: &'a [Vec<f64>], y: &'a [i32], params: SvmParams, seed: u64) -> impl FnMut(&[bool]) -> Result<f64, LearnError> + 'a {
    move |mask: &[bool]| {
        let masked: Vec<Vec<f64>> = x.iter().map(|r| apply_mask(r, mask)).collect();
        let plan = kfold_split(masked.len(), 3, seed)?;
        let dim = mask.iter().filter(|&&b| b).count();
        let params = match params.kernel {
            super::Kernel::Rbf { .. } => SvmParams { kernel: super::Kernel::rbf_default(dim), ..params },
            super::Kernel::Linear => params,
        };
        Ok(cross_validate(&masked, y, &plan, |a, b, t| scaled_svm_predict(a, b, t, &params))?.mean_accuracy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Mask {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn crossover_definition() {
        let (a, b) = two_point_crossover(&bits("11111111"), &bits("00000000"), 2, 5);
        assert_eq!(a, bits("11000111"));
        assert_eq!(b, bits("00111000"));
    }

    #[test]
    fn mutation_rates_at_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = bits("10101010");
        mutate(&mut m, 0.0, &mut rng);
        assert_eq!(m, bits("10101010"));
        // at rate 1 every bit is redrawn, so about half change
        let mut flips = 0;
        for _ in 0..200 {
            let mut m = bits("10101010");
            mutate(&mut m, 1.0, &mut rng);
            flips += m.iter().zip(bits("10101010")).filter(|(a, b)| *a != b).count();
        }
        assert!((700..900).contains(&flips), "{flips}");
    }

    #[test]
    fn popcount_converges_and_trace_is_monotone() {
        let cfg = GaConfig { seed: 3, ..Default::default() };
        let r = ga_select(20, &cfg, |m| Ok(m.iter().filter(|&&b| b).count() as f64)).unwrap();
        assert_eq!(r.best_mask, vec![true; 20]);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r, ga_select(20, &cfg, |m| Ok(m.iter().filter(|&&b| b).count() as f64)).unwrap());
    }

    #[test]
    fn zero_masks_score_zero() {
        let cfg = GaConfig { population: 4, generations: 1, ..Default::default() };
        let r = ga_select(2, &cfg, |m| {
            assert!(m.iter().any(|&b| b));
            Ok(1.0)
        });
        assert!(r.is_ok());
    }

    #[test]
    fn rejects_odd_population() {
        let cfg = GaConfig { population: 201, ..Default::default() };
        assert!(matches!(ga_select(5, &cfg, |_| Ok(0.0)), Err(LearnError::InvalidParameter(_))));
    }
}
