//! Buyer-type sequences fixed before a run starts.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::AdversarySpec;
use crate::error::{PricingError, Result};

/// Generates the whole sequence of `horizon` types. Takes no learner input,
/// so the sequence cannot react to the seller.
pub fn adversary_sequence(spec: &AdversarySpec, num_types: usize, horizon: u64, seed: u64) -> Result<Vec<usize>> {
    if num_types == 0 {
        return Err(PricingError::InvalidParameter("at least one type is required".into()));
    }
    let len = usize::try_from(horizon).map_err(|_| PricingError::InvalidParameter("horizon too large".into()))?;
    let check = |i: usize| {
        if i >= num_types {
            Err(PricingError::InvalidParameter(format!(
                "type {i} out of range for {num_types} types"
            )))
        } else {
            Ok(i)
        }
    };
    match spec {
        AdversarySpec::Constant { type_index } => {
            check(*type_index)?;
            Ok(vec![*type_index; len])
        }
        AdversarySpec::Periodic { pattern } => {
            if pattern.is_empty() {
                return Err(PricingError::InvalidParameter("empty pattern".into()));
            }
            for &i in pattern {
                check(i)?;
            }
            Ok((0..len).map(|t| pattern[t % pattern.len()]).collect())
        }
        AdversarySpec::Block { blocks, types } => {
            if *blocks == 0 {
                return Err(PricingError::InvalidParameter("blocks must be at least 1".into()));
            }
            let order: Vec<usize> = match types {
                Some(t) if !t.is_empty() => t.iter().map(|&i| check(i)).collect::<Result<_>>()?,
                Some(_) => return Err(PricingError::InvalidParameter("empty block types".into())),
                None => (0..num_types).collect(),
            };
            // round t (0-based) falls in block floor(t * blocks / T)
            Ok((0..len)
                .map(|t| {
                    let b = (t as u128 * *blocks as u128 / len as u128) as usize;
                    order[b % order.len()]
                })
                .collect())
        }
        AdversarySpec::Random { segment, seed: own } => {
            if *segment == 0 {
                return Err(PricingError::InvalidParameter("segment must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(own.unwrap_or(seed));
            let mut out = Vec::with_capacity(len);
            while out.len() < len {
                let weights: Vec<f64> = (0..num_types).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let dist = WeightedIndex::new(&weights).expect("positive weights");
                let n = (*segment).min(len - out.len());
                out.extend((0..n).map(|_| dist.sample(&mut rng)));
            }
            Ok(out)
        }
    }
}
