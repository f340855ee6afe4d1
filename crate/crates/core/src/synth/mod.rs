//! Synthetic cohorts with known trait → feature links.
//!
//! Each participant gets trait scores drawn from fitted marginals and, per
//! video, a mean emotion mixture. A planted link fixes one emotion's mean
//! to `base + β·z + ε`, where `z` is the standardized trait and
//! `ε ~ N(0, σ)`; the remaining emotions are rescaled to keep the mixture
//! on the simplex. Frames are Dirichlet draws around that mean.

mod marginal;
mod recovery;

pub use marginal::{Marginal, Shape, TraitDist};
pub use recovery::{verify_recovery, LinkRecovery, RecoveryInputs, RecoveryScore, RecoveryThresholds};

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::{
    assemble_cohort, Cohort, EmotionFrame, EmotionKind, EmotionScores, EmotionStream, FrameFormat, FrameLogWriter,
    FrameRecord, TraitFamily, TraitKind, TraitRow, TraitTable, VideoId,
};
use crate::error::{Error, Result};
use crate::features::{FeatureKey, FEATURE_COUNT};
use crate::report::{check_schema, SCHEMA_VERSION};
use crate::util::{derive_seed, fingerprint_ids};

const TRAITS: u64 = 1;
const PARTICIPANT: u64 = 2;
const FRAMES: u64 = 3;

/// Room left for the unplanted emotions when checking planted maxima.
const SIMPLEX_MARGIN: f64 = 0.05;
/// Noise allowance, in σ, for the analytic simplex check.
const NOISE_SPAN: f64 = 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedLink {
    #[serde(rename = "trait")]
    pub trait_kind: TraitKind,
    pub feature: FeatureKey,
    pub beta: f64,
    pub sigma: f64,
}

impl PlantedLink {
    /// Population correlation between the feature and the trait.
    pub fn implied_rho(&self) -> f64 {
        let d = (self.beta * self.beta + self.sigma * self.sigma).sqrt();
        if d == 0.0 {
            0.0
        } else {
            self.beta / d
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Missingness {
    pub big_five: f64,
    pub dospert: f64,
    pub schwartz: f64,
    pub haidt: f64,
    /// Per (participant, video) probability that the stream is absent.
    pub video: f64,
}

impl Missingness {
    pub fn family(&self, f: TraitFamily) -> f64 {
        match f {
            TraitFamily::BigFive => self.big_five,
            TraitFamily::Dospert => self.dospert,
            TraitFamily::Schwartz => self.schwartz,
            TraitFamily::Haidt => self.haidt,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraitSpec {
    #[serde(rename = "trait")]
    pub trait_kind: TraitKind,
    #[serde(flatten)]
    pub dist: TraitDist,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub n_participants: usize,
    pub traits: Vec<TraitSpec>,
    #[serde(default)]
    pub links: Vec<PlantedLink>,
    pub hz: f64,
    /// Seconds per video, in video order.
    pub durations_s: Vec<f64>,
    #[serde(default)]
    pub missingness: Missingness,
    /// Dirichlet concentration of frames around the video mean; 0 disables jitter.
    pub jitter_concentration: f64,
    /// Dirichlet concentration of a participant's mixture around the video base.
    pub baseline_concentration: f64,
    pub seed: u64,
}

/// Default per-video durations (seconds); 9 min 22 s in total.
pub fn default_durations() -> Vec<f64> {
    (0..VideoId::COUNT).map(|i| if i < 7 { 38.0 } else { 37.0 }).collect()
}

/// Reference trait rows as generator targets.
pub fn reference_traits() -> Vec<TraitSpec> {
    TraitKind::ALL
        .iter()
        .map(|&t| {
            let r = t.reference_stats();
            TraitSpec {
                trait_kind: t,
                dist: TraitDist {
                    mean: r.mean,
                    sd: r.sd,
                    min: r.min,
                    max: r.max,
                },
            }
        })
        .collect()
}

/// The emotion each video mostly elicits in the generator.
pub fn dominant_emotion(v: VideoId) -> EmotionKind {
    use EmotionKind::*;
    const DOMINANT: [EmotionKind; 15] = [
        Happy, Happy, Surprised, Happy, Disgusted, Fearful, Angry, Fearful, Fearful, Fearful, Angry, Sad, Sad, Sad,
        Surprised,
    ];
    DOMINANT[v.index()]
}

/// Population mean mixture for a video: mostly neutral, one dominant emotion.
pub fn base_mixture(v: VideoId) -> EmotionScores {
    let mut m = [0.06; EmotionKind::COUNT];
    m[EmotionKind::Neutral.index()] = 0.55;
    m[dominant_emotion(v).index()] = 0.15;
    m
}

/// One link per trait at the given slope and noise, each on its own
/// non-neutral feature.
pub fn one_link_per_trait(beta: f64, sigma: f64) -> Vec<PlantedLink> {
    use EmotionKind::*;
    const EMOTIONS: [EmotionKind; 6] = [Angry, Disgusted, Fearful, Happy, Sad, Surprised];
    TraitKind::ALL
        .iter()
        .enumerate()
        .map(|(i, &t)| PlantedLink {
            trait_kind: t,
            feature: FeatureKey::new(
                EMOTIONS[i % EMOTIONS.len()],
                VideoId::new((i % VideoId::COUNT) as u8 + 1).expect("1..=15"),
            ),
            beta,
            sigma,
        })
        .collect()
}

impl PlantSpec {
    /// Desk-scale preset: 500 participants, no links, no missingness.
    pub fn desk(seed: u64) -> Self {
        PlantSpec {
            n_participants: 500,
            traits: reference_traits(),
            links: Vec::new(),
            hz: 30.0,
            durations_s: default_durations(),
            missingness: Missingness::default(),
            jitter_concentration: 100.0,
            baseline_concentration: 200.0,
            seed,
        }
    }

    /// Study-sized preset: 85 participants with survey dropout that leaves
    /// about 80 Big Five and 65 other-instrument completions.
    pub fn paper_scale(seed: u64) -> Self {
        PlantSpec {
            n_participants: 85,
            missingness: Missingness {
                big_five: 5.0 / 85.0,
                dospert: 20.0 / 85.0,
                schwartz: 20.0 / 85.0,
                haidt: 20.0 / 85.0,
                video: 0.02,
            },
            ..PlantSpec::desk(seed)
        }
    }

    pub fn trait_dist(&self, t: TraitKind) -> TraitDist {
        self.traits
            .iter()
            .find(|s| s.trait_kind == t)
            .map(|s| s.dist)
            .expect("validated spec lists every trait")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_participants == 0 {
            return Err(Error::invalid("n_participants must be >= 1"));
        }
        for t in TraitKind::ALL {
            let n = self.traits.iter().filter(|s| s.trait_kind == t).count();
            if n != 1 {
                return Err(Error::invalid(format!("trait {} listed {n} times", t.key())));
            }
        }
        for s in &self.traits {
            s.dist.validate()?;
        }
        if !(self.hz > 0.0 && self.hz.is_finite()) {
            return Err(Error::invalid("hz must be positive"));
        }
        if self.durations_s.len() != VideoId::COUNT || self.durations_s.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::invalid("durations_s needs 15 positive values"));
        }
        let m = &self.missingness;
        for p in [m.big_five, m.dospert, m.schwartz, m.haidt, m.video] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::invalid(format!("missingness {p} outside [0, 1)")));
            }
        }
        if !(self.jitter_concentration >= 0.0) || !(self.baseline_concentration > 0.0) {
            return Err(Error::invalid("concentrations must be positive (jitter may be 0)"));
        }
        for (i, l) in self.links.iter().enumerate() {
            if !l.beta.is_finite() || !(l.sigma >= 0.0) || !l.sigma.is_finite() {
                return Err(Error::invalid(format!("link {i} needs finite beta and sigma >= 0")));
            }
            if l.feature.emotion == EmotionKind::Neutral {
                return Err(Error::invalid(format!("link {i}: neutral absorbs the rescaling and cannot be planted")));
            }
        }
        self.check_simplex()
    }

    /// Worst-case planted means over the trait supports and ±6σ of noise
    /// must stay inside the simplex with room for the other emotions.
    fn check_simplex(&self) -> Result<()> {
        for v in VideoId::all() {
            let base = base_mixture(v);
            let mut total_hi = 0.0;
            for e in EmotionKind::ALL {
                let key = FeatureKey::new(e, v);
                let on: Vec<(usize, &PlantedLink)> =
                    self.links.iter().enumerate().filter(|(_, l)| l.feature == key).collect();
                if on.is_empty() {
                    continue;
                }
                let (mut lo, mut hi) = (base[e.index()], base[e.index()]);
                let mut var = 0.0;
                for (_, l) in &on {
                    let d = self.trait_dist(l.trait_kind);
                    let (a, b) = (l.beta * d.z(d.min), l.beta * d.z(d.max));
                    lo += a.min(b);
                    hi += a.max(b);
                    var += l.sigma * l.sigma;
                }
                lo -= NOISE_SPAN * var.sqrt();
                hi += NOISE_SPAN * var.sqrt();
                total_hi += hi;
                if lo < 0.0 || hi > 1.0 - SIMPLEX_MARGIN || total_hi > 1.0 - SIMPLEX_MARGIN {
                    let (idx, _) = on[0];
                    return Err(Error::PlantRejected {
                        link: idx,
                        feature: key.name(),
                        detail: format!("planted mean may range over [{lo:.4}, {hi:.4}]"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkTruth {
    #[serde(flatten)]
    pub link: PlantedLink,
    pub implied_rho: f64,
}

/// What the generator actually drew.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: String,
    pub cohort_fingerprint: String,
    pub seed: u64,
    pub participants: Vec<String>,
    /// Every drawn score, `traits[participant][trait]`, including
    /// families later withheld.
    pub traits: Vec<Vec<f64>>,
    /// `families_observed[participant][family]`.
    pub families_observed: Vec<Vec<bool>>,
    /// Mean emotion mixture per participant and feature before frame
    /// jitter; `None` where the stream was withheld.
    pub means: Vec<Vec<Option<f64>>>,
    pub links: Vec<LinkTruth>,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ground truth serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: GroundTruth = serde_json::from_str(s)?;
        check_schema(&g.schema_version)?;
        Ok(g)
    }
}

/// A generated cohort. Frames are produced on demand from the stored
/// means, so large frame rates do not need to fit in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCohort {
    pub spec: PlantSpec,
    pub traits: TraitTable,
    pub truth: GroundTruth,
}

fn participant_id(i: usize) -> String {
    format!("s{:04}", i + 1)
}

struct Participant {
    traits: Vec<f64>,
    families: Vec<bool>,
    means: Vec<Option<f64>>,
}

fn draw_participant(spec: &PlantSpec, i: usize, traits: Vec<f64>) -> Result<Participant> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[PARTICIPANT, i as u64]));
    let mut families: Vec<bool> = TraitFamily::ALL
        .iter()
        .map(|f| rand::Rng::random::<f64>(&mut rng) >= spec.missingness.family(*f))
        .collect();
    if !families.iter().any(|f| *f) {
        // keep every participant joinable
        families[0] = true;
    }
    let mut present: Vec<bool> = (0..VideoId::COUNT)
        .map(|_| rand::Rng::random::<f64>(&mut rng) >= spec.missingness.video)
        .collect();
    if !present.iter().any(|p| *p) {
        present[0] = true;
    }

    let mut means = vec![None; FEATURE_COUNT];
    for v in VideoId::all() {
        let base = base_mixture(v);
        let alpha = base.map(|b| b * spec.baseline_concentration);
        let dir = Dirichlet::new(alpha).map_err(|e| Error::invalid(format!("baseline mixture: {e}")))?;
        let mut mix: EmotionScores = dir.sample(&mut rng);

        let mut planted = [None::<f64>; EmotionKind::COUNT];
        for l in spec.links.iter().filter(|l| l.feature.video == v) {
            let d = spec.trait_dist(l.trait_kind);
            let z = d.z(traits[l.trait_kind.index()]);
            let eps = if l.sigma > 0.0 {
                Normal::new(0.0, l.sigma).expect("sigma > 0").sample(&mut rng)
            } else {
                0.0
            };
            let e = l.feature.emotion.index();
            let cur = planted[e].unwrap_or(base[e]);
            planted[e] = Some(cur + l.beta * z + eps);
        }
        if planted.iter().any(Option::is_some) {
            let fixed: f64 = planted
                .iter_mut()
                .flatten()
                .map(|p| {
                    *p = p.clamp(1e-9, 1.0 - SIMPLEX_MARGIN);
                    *p
                })
                .sum();
            let free: f64 = (0..EmotionKind::COUNT).filter(|e| planted[*e].is_none()).map(|e| mix[e]).sum();
            let scale = (1.0 - fixed) / free;
            for e in 0..EmotionKind::COUNT {
                mix[e] = planted[e].unwrap_or(mix[e] * scale);
            }
        }
        if present[v.index()] {
            for e in EmotionKind::ALL {
                means[FeatureKey::new(e, v).index()] = Some(mix[e.index()]);
            }
        }
    }
    Ok(Participant {
        traits,
        families,
        means,
    })
}

/// Draws a synthetic cohort from `spec`.
pub fn plant_cohort(spec: &PlantSpec) -> Result<SynthCohort> {
    spec.validate()?;
    let n = spec.n_participants;
    // one stratified column per trait, so marginals match their targets closely
    let columns: Vec<Vec<f64>> = TraitKind::ALL
        .par_iter()
        .map(|&t| {
            let m = Marginal::fit(&spec.trait_dist(t))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[TRAITS, t.index() as u64]));
            Ok(m.sample_stratified(n, &mut rng))
        })
        .collect::<Result<_>>()?;
    let people: Vec<Participant> = (0..n)
        .into_par_iter()
        .map(|i| draw_participant(spec, i, columns.iter().map(|c| c[i]).collect()))
        .collect::<Result<_>>()?;

    let participants: Vec<String> = (0..n).map(participant_id).collect();
    let mut table = TraitTable::default();
    for (id, p) in participants.iter().zip(&people) {
        let mut row = TraitRow::default();
        for t in TraitKind::ALL {
            let fi = TraitFamily::ALL.iter().position(|f| *f == t.family()).expect("known family");
            if p.families[fi] {
                row.set(t, Some(p.traits[t.index()]));
            }
        }
        table.rows.insert(id.clone(), row);
    }
    let truth = GroundTruth {
        schema_version: SCHEMA_VERSION.into(),
        cohort_fingerprint: fingerprint_ids(participants.iter().map(String::as_str)),
        seed: spec.seed,
        traits: people.iter().map(|p| p.traits.clone()).collect(),
        families_observed: people.iter().map(|p| p.families.clone()).collect(),
        means: people.into_iter().map(|p| p.means).collect(),
        participants,
        links: spec
            .links
            .iter()
            .map(|l| LinkTruth {
                link: *l,
                implied_rho: l.implied_rho(),
            })
            .collect(),
    };
    Ok(SynthCohort {
        spec: spec.clone(),
        traits: table,
        truth,
    })
}

impl SynthCohort {
    pub fn len(&self) -> usize {
        self.truth.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean_mixture(&self, i: usize, v: VideoId) -> Option<EmotionScores> {
        let row = &self.truth.means[i];
        let mut m = [0.0; EmotionKind::COUNT];
        for e in EmotionKind::ALL {
            m[e.index()] = row[FeatureKey::new(e, v).index()]?;
        }
        Some(m)
    }

    /// Frames for participant `i` watching `v`; `None` if withheld.
    pub fn stream(&self, i: usize, v: VideoId) -> Option<EmotionStream> {
        let mean = self.mean_mixture(i, v)?;
        let n_frames = ((self.spec.durations_s[v.index()] * self.spec.hz).round() as usize).max(1);
        let step = 1000.0 / self.spec.hz;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.spec.seed, &[FRAMES, i as u64, v.get() as u64]));
        let jitter = (self.spec.jitter_concentration > 0.0).then(|| {
            Dirichlet::new(mean.map(|m| (m * self.spec.jitter_concentration).max(1e-6)))
                .expect("positive concentration")
        });
        let frames = (0..n_frames)
            .map(|f| EmotionFrame {
                timestamp_ms: (f as f64 * step).round() as u64,
                scores: jitter.as_ref().map_or(mean, |d| d.sample(&mut rng)),
            })
            .collect();
        Some(EmotionStream {
            participant_id: self.truth.participants[i].clone(),
            video_id: v,
            frames,
        })
    }

    /// All present streams in (participant, video) order.
    pub fn streams(&self) -> impl Iterator<Item = EmotionStream> + '_ {
        (0..self.len()).flat_map(move |i| VideoId::all().filter_map(move |v| self.stream(i, v)))
    }

    /// Streams the frame log to `sink` one video at a time.
    pub fn write_frames<W: Write>(&self, sink: W, format: FrameFormat) -> Result<()> {
        let mut w = FrameLogWriter::new(sink, format)?;
        for s in self.streams() {
            for frame in s.frames {
                w.write(&FrameRecord {
                    participant_id: s.participant_id.clone(),
                    video_id: s.video_id,
                    frame,
                })?;
            }
        }
        w.finish()?;
        Ok(())
    }

    /// Materializes every stream and joins it with the trait table.
    pub fn cohort(&self) -> Result<Cohort> {
        let streams: Vec<EmotionStream> = (0..self.len())
            .into_par_iter()
            .flat_map_iter(|i| VideoId::all().filter_map(move |v| self.stream(i, v)).collect::<Vec<_>>())
            .collect();
        assemble_cohort(streams, self.traits.clone()).map(|(c, _)| c)
    }
}
