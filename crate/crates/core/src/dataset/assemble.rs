use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sample::{build_sample_in, Sample};
use super::streams::DynamicStreams;
use super::{DataError, DatasetParams};
use crate::roadgraph::{build_subgraph, RoadId, RoadNetwork, Subgraph};

/// Rejection-sampling budget per requested negative.
const NEGATIVE_ATTEMPTS_PER_SAMPLE: usize = 1000;

/// Balanced dataset: one positive per usable accident (anchored `k` minutes
/// before it) and as many negatives at random accident-free windows.
///
/// Positives come first in accident order, negatives follow in draw order.
pub fn assemble_dataset(
    net: &RoadNetwork,
    streams: &DynamicStreams,
    params: &DatasetParams,
    seed: u64,
) -> Result<Vec<Sample>, DataError> {
    params.validate()?;
    streams.check_matches(net)?;
    let (n, k) = (params.seq_num, params.interval);
    let earliest = (n - 1) * k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut positives: Vec<(RoadId, usize)> = streams
        .accidents
        .iter()
        .filter(|a| a.minute >= earliest + k)
        .map(|a| (a.road, a.minute - k))
        .collect();
    if positives.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    if let Some(cap) = params.max_positives {
        if positives.len() > cap {
            positives.shuffle(&mut rng);
            positives.truncate(cap);
            positives.sort_by_key(|&(road, t)| (t, road));
        }
    }

    // Anchors t with t - (n-1)k >= 0 and t + k < minutes.
    if streams.minutes < earliest + k + 1 {
        return Err(DataError::InvalidParams("streams shorter than one window".into()));
    }
    let anchor_span = streams.minutes - k - earliest;
    let mut taken: HashSet<(RoadId, usize)> = positives.iter().copied().collect();
    let mut negatives = Vec::with_capacity(positives.len());
    let budget = NEGATIVE_ATTEMPTS_PER_SAMPLE * positives.len();
    let mut attempts = 0;
    while negatives.len() < positives.len() {
        if attempts == budget {
            return Err(DataError::InvalidParams(format!(
                "found only {} accident-free windows after {budget} draws",
                negatives.len()
            )));
        }
        attempts += 1;
        let road = net.road(rng.random_range(0..net.len())).id;
        let t = earliest + rng.random_range(0..anchor_span);
        if !streams.has_accident(road, t, t + k) && taken.insert((road, t)) {
            negatives.push((road, t));
        }
    }

    let mut subgraphs: BTreeMap<RoadId, Subgraph> = BTreeMap::new();
    for &(road, _) in positives.iter().chain(&negatives) {
        if let std::collections::btree_map::Entry::Vacant(e) = subgraphs.entry(road) {
            e.insert(build_subgraph(net, road, params.khop, params.filter)?);
        }
    }
    let jobs: Vec<(RoadId, usize)> = positives.into_iter().chain(negatives).collect();
    jobs.par_iter()
        .map(|(road, t)| build_sample_in(net, streams, &subgraphs[road], *t, n, k))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Stratified 8:1:1 split. Validation and test each get `round(N/10)`
/// samples with the class mix of the whole set; every split is shuffled.
pub fn split_dataset(samples: Vec<Sample>, seed: u64) -> Result<Split, DataError> {
    const MIN: usize = 10;
    let total = samples.len();
    if total < MIN {
        return Err(DataError::TooFewSamples { needed: MIN, got: total });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<Sample>, Vec<Sample>) = samples.into_iter().partition(|s| s.label == 1);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let held = (total as f64 / 10.0).round() as usize;
    let pos_share = |size: usize| ((size * pos.len()) as f64 / total as f64).round() as usize;
    let (val_pos, test_pos) = (pos_share(held), pos_share(held));
    let (val_neg, test_neg) = (held - val_pos, held - test_pos);

    let take = |from: &mut Vec<Sample>, count: usize| from.drain(..count.min(from.len())).collect::<Vec<_>>();
    let mut val = take(&mut pos, val_pos);
    val.extend(take(&mut neg, val_neg));
    let mut test = take(&mut pos, test_pos);
    test.extend(take(&mut neg, test_neg));
    let mut train = pos;
    train.append(&mut neg);

    train.shuffle(&mut rng);
    val.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok(Split { train, val, test })
}
