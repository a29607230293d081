use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{independent_components, AugmentationConfig, Detector};
use crate::agent::{Augment, ReplayBuffer};
use crate::envsim::{FactoredState, Mechanism};
use crate::rng::StreamRng;
use crate::{Error, Result};

/// One recorded interaction `(s, a, r, s', done)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition<S> {
    pub s: S,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: S,
    pub done: bool,
}

/// Row of the optional augmentation audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub episode: usize,
    pub trigger_r: f64,
    pub d: usize,
    pub partner_index: usize,
    pub oracle_valid: bool,
}

fn swap_component<R: Rng + ?Sized>(
    mech: &Mechanism,
    t1: &Transition<FactoredState>,
    t2: &Transition<FactoredState>,
    detector: Detector,
    rng: &mut R,
) -> Result<Option<(Transition<FactoredState>, usize)>> {
    let same = t1.s.same_schema(&t2.s)
        && t1.s_next.same_schema(&t2.s_next)
        && t1.s.same_schema(&t1.s_next)
        && t1.a.len() == t2.a.len();
    if !same {
        return Err(Error::Schema("transitions to swap do not share a schema".into()));
    }
    let m1 = independent_components(mech, &t1.s, &t1.a, detector)?;
    let m2 = independent_components(mech, &t2.s, &t2.a, detector)?;
    let shared = m1.intersection(&m2);
    if shared.is_empty() {
        return Ok(None);
    }
    let d = shared.indices()[rng.random_range(0..shared.indices().len())];
    // Independent components are category slots; the action is monolithic and
    // is never swapped.
    if d >= t1.s.slots.len() || t1.s.slots[d].is_empty() || t2.s.slots[d].is_empty() {
        return Ok(None);
    }
    let mut g = t1.clone();
    g.s.slots[d] = t2.s.slots[d].clone();
    g.s_next.slots[d] = t2.s_next.slots[d].clone();
    Ok(Some((g, d)))
}

/// Counterfactual transition: `t1` with one component that is independent of
/// the action in both transitions replaced, in `s` and `s'`, by `t2`'s value.
/// The reward is carried over from `t1`.
pub fn counterfactual_swap<R: Rng + ?Sized>(
    mech: &Mechanism,
    t1: &Transition<FactoredState>,
    t2: &Transition<FactoredState>,
    detector: Detector,
    rng: &mut R,
) -> Result<Option<Transition<FactoredState>>> {
    Ok(swap_component(mech, t1, t2, detector, rng)?.map(|(t, _)| t))
}

/// Appends counterfactual partners of `new` to `buffer` when `new.r >= threshold`.
///
/// Partners are drawn without replacement from stored transitions that also
/// reach the threshold. The newest stored entry is skipped when it is `new`
/// itself. Returns the number of appended transitions.
#[allow(clippy::too_many_arguments)]
pub fn augment_buffer<R: Rng + ?Sized>(
    buffer: &mut ReplayBuffer<FactoredState>,
    new: &Transition<FactoredState>,
    threshold: f64,
    mech: &Mechanism,
    cfg: &AugmentationConfig,
    rng: &mut R,
    episode: usize,
    mut audit: Option<&mut Vec<AuditEntry>>,
) -> Result<usize> {
    if new.r < threshold {
        return Ok(0);
    }
    let n = buffer.len();
    let newest_is_new = n > 0 && buffer.get(n - 1) == new;
    let eligible: Vec<usize> = (0..n)
        .filter(|&i| !(newest_is_new && i == n - 1) && buffer.get(i).r >= threshold)
        .collect();
    if eligible.is_empty() {
        return Ok(0);
    }
    let k = cfg.pairs_per_trigger.min(eligible.len());
    let picks = rand::seq::index::sample(rng, eligible.len(), k).into_vec();
    let mut generated = Vec::with_capacity(k);
    for p in picks {
        let partner_index = eligible[p];
        let partner = buffer.get(partner_index);
        if let Some((g, d)) = swap_component(mech, new, partner, cfg.detector, rng)? {
            debug_assert!(g.r >= threshold);
            if let Some(log) = audit.as_deref_mut() {
                log.push(AuditEntry {
                    episode,
                    trigger_r: new.r,
                    d,
                    partner_index,
                    oracle_valid: mech.counterfactual_check(&g)?,
                });
            }
            generated.push(g);
        }
    }
    let count = generated.len();
    for g in generated {
        buffer.push(g);
    }
    Ok(count)
}

/// Replay-buffer augmentation bound to one simulator, with its own random
/// stream.
#[derive(Debug, Clone)]
pub struct Augmenter {
    mechanism: Arc<Mechanism>,
    config: AugmentationConfig,
    rng: StreamRng,
    audit: Option<Vec<AuditEntry>>,
}

impl Augmenter {
    pub fn new(mechanism: Arc<Mechanism>, config: AugmentationConfig, rng: StreamRng) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            mechanism,
            config,
            rng,
            audit: None,
        })
    }

    pub fn with_audit(mut self) -> Self {
        self.audit = Some(Vec::new());
        self
    }

    pub fn config(&self) -> &AugmentationConfig {
        &self.config
    }

    pub fn audit(&self) -> Option<&[AuditEntry]> {
        self.audit.as_deref()
    }

    pub fn rng(&self) -> &StreamRng {
        &self.rng
    }

    pub fn set_rng(&mut self, rng: StreamRng) {
        self.rng = rng;
    }

    pub fn write_audit_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for e in self.audit.iter().flatten() {
            w.serialize(e)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

impl Augment<FactoredState> for Augmenter {
    fn augment(
        &mut self,
        buffer: &mut ReplayBuffer<FactoredState>,
        new: &Transition<FactoredState>,
        threshold: f64,
        episode: usize,
    ) -> Result<usize> {
        augment_buffer(
            buffer,
            new,
            threshold,
            &self.mechanism,
            &self.config,
            &mut self.rng,
            episode,
            self.audit.as_mut(),
        )
    }

    fn threshold(&self, episode: usize) -> f64 {
        super::adaptive_threshold(episode, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envsim::{EnvConfig, RecEnv};
    use rand::SeedableRng;

    fn setup() -> (RecEnv, Vec<Transition<FactoredState>>) {
        let mut env = RecEnv::new(EnvConfig {
            categories: 4,
            num_items: 16,
            base_offset: 0.0,
            ..Default::default()
        })
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut out = Vec::new();
        for _ in 0..4 {
            let mut s = env.reset();
            for _ in 0..12 {
                let a: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
                let o = env.step(&s, &a).unwrap();
                out.push(Transition {
                    s: s.clone(),
                    a,
                    r: o.reward,
                    s_next: o.next_state.clone(),
                    done: o.done,
                });
                s = o.next_state;
            }
        }
        (env, out)
    }

    #[test]
    fn swap_with_itself_is_identity() {
        let (env, ts) = setup();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for t in &ts {
            if let Some(g) = counterfactual_swap(env.mechanism(), t, t, Detector::Oracle, &mut rng).unwrap() {
                assert_eq!(&g, t);
            }
        }
    }

    #[test]
    fn disjoint_independent_sets_give_none() {
        let (env, ts) = setup();
        let cfg1 = EnvConfig {
            categories: 1,
            num_items: 4,
            ..Default::default()
        };
        let mut env1 = RecEnv::new(cfg1).unwrap();
        let s = env1.reset();
        let a = s.interest_obs.clone();
        let o = env1.step(&s, &a).unwrap();
        let t = Transition {
            s,
            a,
            r: o.reward,
            s_next: o.next_state,
            done: o.done,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            counterfactual_swap(env1.mechanism(), &t, &t, Detector::Oracle, &mut rng).unwrap(),
            None
        );
        // Different schema.
        assert!(counterfactual_swap(env.mechanism(), &ts[0], &t, Detector::Oracle, &mut rng).is_err());
    }

    #[test]
    fn swaps_do_not_mutate_inputs_and_pass_the_check() {
        let (env, ts) = setup();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let snapshot = ts.clone();
        let mut made = 0;
        for i in 0..ts.len() {
            for j in 0..ts.len() {
                if let Some(g) =
                    counterfactual_swap(env.mechanism(), &ts[i], &ts[j], Detector::Oracle, &mut rng).unwrap()
                {
                    assert!(env.counterfactual_check(&g).unwrap());
                    assert_eq!(g.r, ts[i].r);
                    made += 1;
                }
            }
        }
        assert!(made > 100);
        assert_eq!(ts, snapshot);
    }

    #[test]
    fn below_threshold_or_no_partner_appends_nothing() {
        let (env, ts) = setup();
        let cfg = AugmentationConfig::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut buf = ReplayBuffer::new(1000);
        for t in ts.iter().filter(|t| t.r == 0.0) {
            buf.push(t.clone());
        }
        let zero = ts.iter().find(|t| t.r == 0.0).unwrap();
        assert_eq!(augment_buffer(&mut buf, zero, 1.0, env.mechanism(), &cfg, &mut rng, 0, None).unwrap(), 0);
        let click = ts.iter().find(|t| t.r == 1.0).unwrap();
        buf.push(click.clone());
        assert_eq!(augment_buffer(&mut buf, click, 1.0, env.mechanism(), &cfg, &mut rng, 0, None).unwrap(), 0);
    }

    #[test]
    fn growth_is_bounded_by_pairs_per_trigger() {
        let (env, ts) = setup();
        let cfg = AugmentationConfig {
            pairs_per_trigger: 2,
            ..Default::default()
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut buf = ReplayBuffer::new(10_000);
        let mut log = Vec::new();
        for t in &ts {
            buf.push(t.clone());
            let before = buf.len();
            let n = augment_buffer(&mut buf, t, 1.0, env.mechanism(), &cfg, &mut rng, 0, Some(&mut log)).unwrap();
            assert!(n <= 2);
            assert_eq!(buf.len(), before + n);
        }
        assert!(log.iter().all(|e| e.oracle_valid && e.trigger_r == 1.0));
    }
}
