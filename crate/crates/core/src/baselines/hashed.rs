use std::sync::atomic::{AtomicU32, AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::{Error, Result};

use super::{check_two_classes, class_index, class_label, fnv1a64};

/// Training options for the hashed bag-of-n-grams classifier.
#[derive(Debug, Clone)]
pub struct HashedTrainOptions {
    /// Hash bucket count B. At least 2; 2^16 or more avoids most collisions.
    pub buckets: usize,
    /// Embedding dimension d.
    pub dim: usize,
    /// Include word n-grams up to this length (1 = unigrams only).
    pub word_ngrams: usize,
    pub epochs: usize,
    pub lr: f64,
    /// With more than one thread, updates are lock-free and the result is
    /// not bit-deterministic. One thread is fully deterministic given the
    /// seed.
    pub threads: usize,
    pub seed: u64,
}

impl Default for HashedTrainOptions {
    fn default() -> Self {
        HashedTrainOptions {
            buckets: 1 << 16,
            dim: 16,
            word_ngrams: 2,
            epochs: 10,
            lr: 0.1,
            threads: 4,
            seed: 42,
        }
    }
}

/// Linear classifier over hashed word and word-n-gram features: the document
/// vector is the mean of the feature embeddings, followed by a 2-class
/// softmax.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HashedBagNgram {
    buckets: usize,
    dim: usize,
    word_ngrams: usize,
    /// buckets x dim, row-major.
    embeddings: Vec<f32>,
    /// dim x 2, row-major.
    output: Vec<f32>,
}

impl HashedBagNgram {
    /// Feature buckets of a document: every token, then every n-gram of
    /// length 2..=word_ngrams (tokens joined with a space), hashed with
    /// FNV-1a 64 and reduced mod B.
    pub fn features_of(tokens: &[String], word_ngrams: usize, buckets: usize) -> Vec<u32> {
        let mut feats = Vec::new();
        for t in tokens {
            feats.push((fnv1a64(t.as_bytes()) % buckets as u64) as u32);
        }
        let mut joined = String::new();
        for n in 2..=word_ngrams {
            if tokens.len() < n {
                break;
            }
            for window in tokens.windows(n) {
                joined.clear();
                for (i, t) in window.iter().enumerate() {
                    if i > 0 {
                        joined.push(' ');
                    }
                    joined.push_str(t);
                }
                feats.push((fnv1a64(joined.as_bytes()) % buckets as u64) as u32);
            }
        }
        feats
    }

    fn features(&self, tokens: &[String]) -> Vec<u32> {
        Self::features_of(tokens, self.word_ngrams, self.buckets)
    }

    pub fn embedding_row(&self, bucket: u32) -> &[f32] {
        let start = bucket as usize * self.dim;
        &self.embeddings[start..start + self.dim]
    }

    /// dim x 2 output weights, row-major.
    pub fn output_weights(&self) -> &[f32] {
        &self.output
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn hidden(&self, feats: &[u32]) -> Vec<f32> {
        let mut h = vec![0.0f32; self.dim];
        if feats.is_empty() {
            return h;
        }
        for &f in feats {
            let row = self.embedding_row(f);
            for (hd, &rd) in h.iter_mut().zip(row) {
                *hd += rd;
            }
        }
        let inv = 1.0 / feats.len() as f32;
        for hd in h.iter_mut() {
            *hd *= inv;
        }
        h
    }

    fn softmax_of(&self, h: &[f32]) -> [f64; 2] {
        let mut logits = [0.0f64; 2];
        for (d, &hd) in h.iter().enumerate() {
            logits[0] += hd as f64 * self.output[d * 2] as f64;
            logits[1] += hd as f64 * self.output[d * 2 + 1] as f64;
        }
        let m = logits[0].max(logits[1]);
        let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
        let z = e[0] + e[1];
        [e[0] / z, e[1] / z]
    }

    /// Predicted label and its probability.
    pub fn predict(&self, tokens: &crate::textproc::TokenSeq) -> (Label, f64) {
        let feats = self.features(tokens.tokens());
        let p = self.softmax_of(&self.hidden(&feats));
        let best = if p[1] > p[0] { 1 } else { 0 };
        (class_label(best), p[best])
    }
}

/// f32 matrix with relaxed atomic updates. With concurrent writers this is
/// hogwild-style: lost updates are tolerated by contract.
struct AtomicMat {
    data: Vec<AtomicU32>,
}

impl AtomicMat {
    fn from_f32(values: Vec<f32>) -> AtomicMat {
        AtomicMat {
            data: values
                .into_iter()
                .map(|v| AtomicU32::new(v.to_bits()))
                .collect(),
        }
    }

    #[inline]
    fn get(&self, i: usize) -> f32 {
        f32::from_bits(self.data[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn sub(&self, i: usize, delta: f32) {
        let v = self.get(i) - delta;
        self.data[i].store(v.to_bits(), Ordering::Relaxed);
    }

    fn into_f32(self) -> Vec<f32> {
        self.data
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect()
    }
}

struct TrainShared<'a> {
    embeddings: &'a AtomicMat,
    output: &'a AtomicMat,
    progress: &'a AtomicUsize,
    total_steps: usize,
    dim: usize,
    lr: f64,
}

fn sgd_step(shared: &TrainShared, feats: &[u32], target: usize) {
    let dim = shared.dim;
    let mut h = vec![0.0f32; dim];
    for &f in feats {
        let base = f as usize * dim;
        for (d, hd) in h.iter_mut().enumerate() {
            *hd += shared.embeddings.get(base + d);
        }
    }
    let inv = 1.0 / feats.len() as f32;
    for hd in h.iter_mut() {
        *hd *= inv;
    }

    let mut logits = [0.0f64; 2];
    let mut w_old = vec![0.0f32; dim * 2];
    for d in 0..dim {
        w_old[d * 2] = shared.output.get(d * 2);
        w_old[d * 2 + 1] = shared.output.get(d * 2 + 1);
        logits[0] += h[d] as f64 * w_old[d * 2] as f64;
        logits[1] += h[d] as f64 * w_old[d * 2 + 1] as f64;
    }
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let z = e[0] + e[1];
    let p = [e[0] / z, e[1] / z];

    let done = shared.progress.fetch_add(1, Ordering::Relaxed);
    let rate = shared.lr * (1.0 - done as f64 / shared.total_steps as f64);

    let grad = [
        (p[0] - if target == 0 { 1.0 } else { 0.0 }) as f32,
        (p[1] - if target == 1 { 1.0 } else { 0.0 }) as f32,
    ];
    let rate32 = rate as f32;
    let mut grad_h = vec![0.0f32; dim];
    for d in 0..dim {
        grad_h[d] = grad[0] * w_old[d * 2] + grad[1] * w_old[d * 2 + 1];
        shared.output.sub(d * 2, rate32 * grad[0] * h[d]);
        shared.output.sub(d * 2 + 1, rate32 * grad[1] * h[d]);
    }
    let scale = rate32 * inv;
    for &f in feats {
        let base = f as usize * dim;
        for (d, &gh) in grad_h.iter().enumerate() {
            shared.embeddings.sub(base + d, scale * gh);
        }
    }
}

fn run_worker(
    shared: &TrainShared,
    examples: &[(Vec<u32>, usize)],
    shard: &[usize],
    epochs: usize,
    rng_seed: u64,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut order: Vec<usize> = shard.to_vec();
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (feats, target) = &examples[i];
            sgd_step(shared, feats, *target);
        }
    }
}

/// Train the hashed classifier. Returns the model and warnings (one per
/// skipped empty document).
pub fn train_hashed_linear(
    docs: &[crate::textproc::TokenSeq],
    y: &[Label],
    opts: &HashedTrainOptions,
) -> Result<(HashedBagNgram, Vec<String>)> {
    if docs.len() != y.len() {
        return Err(Error::BadParameter(format!(
            "{} documents but {} labels",
            docs.len(),
            y.len()
        )));
    }
    if opts.buckets < 2 {
        return Err(Error::BadParameter(format!(
            "bucket count must be at least 2, got {}",
            opts.buckets
        )));
    }
    if opts.dim < 2 {
        return Err(Error::BadParameter(format!(
            "embedding dimension must be at least 2, got {}",
            opts.dim
        )));
    }
    if opts.word_ngrams < 1 {
        return Err(Error::BadParameter(
            "word_ngrams must be at least 1".to_string(),
        ));
    }
    if opts.epochs < 1 || opts.threads < 1 {
        return Err(Error::BadParameter(
            "epochs and threads must be at least 1".to_string(),
        ));
    }
    if opts.lr < 0.0 {
        return Err(Error::BadParameter(format!(
            "learning rate must be non-negative, got {}",
            opts.lr
        )));
    }
    check_two_classes(y)?;

    let mut warnings = Vec::new();
    let mut examples: Vec<(Vec<u32>, usize)> = Vec::with_capacity(docs.len());
    for (i, (doc, label)) in docs.iter().zip(y).enumerate() {
        if doc.is_empty() {
            warnings.push(format!("training document {i} is empty; skipped"));
            continue;
        }
        examples.push((
            HashedBagNgram::features_of(doc.tokens(), opts.word_ngrams, opts.buckets),
            class_index(*label),
        ));
    }
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bound = 1.0 / opts.dim as f32;
    let init: Vec<f32> = (0..opts.buckets * opts.dim)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let embeddings = AtomicMat::from_f32(init);
    let output = AtomicMat::from_f32(vec![0.0; opts.dim * 2]);
    let progress = AtomicUsize::new(0);
    let shared = TrainShared {
        embeddings: &embeddings,
        output: &output,
        progress: &progress,
        total_steps: examples.len() * opts.epochs,
        dim: opts.dim,
        lr: opts.lr,
    };

    let indices: Vec<usize> = (0..examples.len()).collect();
    if opts.threads == 1 {
        run_worker(&shared, &examples, &indices, opts.epochs, opts.seed);
    } else {
        let n_threads = opts.threads.min(examples.len());
        let chunk = examples.len().div_ceil(n_threads);
        std::thread::scope(|scope| {
            for (tid, shard) in indices.chunks(chunk).enumerate() {
                let shared = &shared;
                let examples = &examples;
                let seed = opts
                    .seed
                    .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(tid as u64 + 1));
                scope.spawn(move || run_worker(shared, examples, shard, opts.epochs, seed));
            }
        });
    }

    Ok((
        HashedBagNgram {
            buckets: opts.buckets,
            dim: opts.dim,
            word_ngrams: opts.word_ngrams,
            embeddings: embeddings.into_f32(),
            output: output.into_f32(),
        },
        warnings,
    ))
}

/// Deterministic single-threaded training with an explicit visit schedule
/// (one index list per epoch). Test hook: the learner depends only on the
/// sequence of visited examples.
#[cfg(test)]
pub(crate) fn train_hashed_with_schedule(
    docs: &[crate::textproc::TokenSeq],
    y: &[Label],
    opts: &HashedTrainOptions,
    schedule: &[Vec<usize>],
) -> Result<HashedBagNgram> {
    check_two_classes(y)?;
    let examples: Vec<(Vec<u32>, usize)> = docs
        .iter()
        .zip(y)
        .map(|(doc, label)| {
            (
                HashedBagNgram::features_of(doc.tokens(), opts.word_ngrams, opts.buckets),
                class_index(*label),
            )
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let bound = 1.0 / opts.dim as f32;
    let init: Vec<f32> = (0..opts.buckets * opts.dim)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    let embeddings = AtomicMat::from_f32(init);
    let output = AtomicMat::from_f32(vec![0.0; opts.dim * 2]);
    let progress = AtomicUsize::new(0);
    let shared = TrainShared {
        embeddings: &embeddings,
        output: &output,
        progress: &progress,
        total_steps: schedule.iter().map(|e| e.len()).sum(),
        dim: opts.dim,
        lr: opts.lr,
    };
    for epoch in schedule {
        for &i in epoch {
            let (feats, target) = &examples[i];
            sgd_step(&shared, feats, *target);
        }
    }
    Ok(HashedBagNgram {
        buckets: opts.buckets,
        dim: opts.dim,
        word_ngrams: opts.word_ngrams,
        embeddings: embeddings.into_f32(),
        output: output.into_f32(),
    })
}
