//! Acceptance checks. Prints one `[PASS]`/`[FAIL]`/`[SKIP]` line per
//! criterion and exits non-zero when any check fails.

use std::collections::{BTreeMap, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use revstream_core::drift::{chi2_pvalue, Adwin, DetectorSignal, Eddm, GramVector, WindowAction, WindowConfig, WindowState};
use revstream_core::eval::{compare_detectors, DetectorKind, Pipeline, PipelineConfig, StepOutcome};
use revstream_core::explain::{feature_relevance, model_paths, replay, trace_paths, Direction};
use revstream_core::ingest::{read_events, write_events, IngestOptions};
use revstream_core::learners::{HoeffdingTree, HyperParams, ModelKind, TreeOptions};
use revstream_core::profiles::IncrementalStat;
use revstream_core::synth::{threshold_stream, vocabulary_flip_stream, FlipConfig};
use revstream_core::textfeat::{flesch_score, mcalpine_eflaw, WordGramRow};
use revstream_core::{DatasetProfile, Label, RawEvent};
use revstream_service::{replay_path, ServiceConfig, ServiceState};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- stats

fn incremental_stat_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seq in 0..1000 {
        let len = rng.gen_range(1..=200);
        let scale = 10f64.powi(rng.gen_range(-3..6));
        let xs: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
        let mut s = IncrementalStat::default();
        for &x in &xs {
            s.update(x).map_err(|e| e.to_string())?;
        }
        let mean = xs.iter().sum::<f64>() / len as f64;
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * scale.max(1.0);
        ensure((s.avg - mean).abs() <= tol && s.max == max, || format!("sequence {seq}: avg {} vs {mean}, max {} vs {max}", s.avg, s.max))?;
    }
    Ok("1000 sequences".into())
}

// ------------------------------------------------------------- chi-square

fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma Q(a, x): series below a + 1,
/// Lentz continued fraction above.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let lead = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let (mut sum, mut term, mut ap) = (1.0 / a, 1.0 / a, a);
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        1.0 - sum * lead.exp()
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        lead.exp() * h
    }
}

/// 2×V homogeneity test with the sparse-column rule and p = 1 when fewer
/// than two columns survive or a row is empty.
fn chi2_reference(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> f64 {
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let cols: Vec<(f64, f64)> = keys
        .into_iter()
        .map(|k| (*a.get(k).unwrap_or(&0) as f64, *b.get(k).unwrap_or(&0) as f64))
        .filter(|(x, y)| *x >= 6.0 || *y >= 6.0)
        .collect();
    let ra: f64 = cols.iter().map(|c| c.0).sum();
    let rb: f64 = cols.iter().map(|c| c.1).sum();
    if cols.len() < 2 || ra == 0.0 || rb == 0.0 {
        return 1.0;
    }
    let n = ra + rb;
    let stat: f64 = cols
        .iter()
        .map(|&(x, y)| {
            let ex = ra * (x + y) / n;
            let ey = rb * (x + y) / n;
            (x - ex).powi(2) / ex + (y - ey).powi(2) / ey
        })
        .sum();
    gamma_q((cols.len() - 1) as f64 / 2.0, stat / 2.0)
}

fn chi_square_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for t in 0..500 {
        let v = rng.gen_range(2..=50);
        let skew = rng.gen_bool(0.5);
        let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
        for j in 0..v {
            let base = rng.gen_range(6..200u64);
            a.insert(format!("g{j}"), base);
            let other = if skew { rng.gen_range(6..200u64) } else { (base + rng.gen_range(0..6)).max(6) };
            b.insert(format!("g{j}"), other);
        }
        let got = chi2_pvalue(&GramVector(a.clone()), &GramVector(b.clone()));
        let want = chi2_reference(&a, &b);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-6, || format!("table {t} (V={v}): {got} vs {want}"))?;
    }
    Ok(format!("500 tables, max |Δp| = {worst:.1e}"))
}

// ------------------------------------------------------------- window law

struct ReferenceWindow {
    n: usize,
    k: usize,
    p: Vec<BTreeMap<String, u64>>,
    ca: VecDeque<BTreeMap<String, u64>>,
    actual: Vec<Label>,
    predicted: Vec<Label>,
    acc_p: f64,
}

fn accuracy(actual: &[Label], predicted: &[Label]) -> f64 {
    if actual.is_empty() {
        return 0.0;
    }
    actual.iter().zip(predicted).filter(|(a, p)| a == p).count() as f64 / actual.len() as f64
}

fn sum_rows<'a>(rows: impl Iterator<Item = &'a BTreeMap<String, u64>>) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for r in rows {
        for (g, c) in r {
            *out.entry(g.clone()).or_insert(0) += c;
        }
    }
    out
}

impl ReferenceWindow {
    /// Returns (p, aad, drift, width after).
    fn analyse(&mut self, row: BTreeMap<String, u64>, actual: Label, predicted: Label) -> (f64, f64, bool, usize) {
        if self.k < self.n {
            self.p.push(row.clone());
        }
        self.ca.push_back(row);
        let (mut p_value, mut aad, mut drift) = (1.0, 0.0, false);
        self.k += 1;
        if self.k == self.n {
            self.acc_p = accuracy(&self.actual, &self.predicted);
        }
        if self.k >= self.n {
            let ca_vector = sum_rows(self.ca.iter());
            let p_vector = sum_rows(self.p.iter());
            p_value = chi2_reference(&p_vector, &ca_vector);
            let len = self.ca.len();
            let from = self.actual.len().saturating_sub(len);
            let acc_ca = accuracy(&self.actual[from..], &self.predicted[from..]);
            aad = (self.acc_p - acc_ca).abs();
            let mut drop = if p_value <= 0.1 {
                2
            } else if p_value < 0.5 {
                1
            } else {
                0
            };
            drop = drop.min(self.ca.len() - 1);
            for _ in 0..drop {
                self.ca.pop_front();
            }
            while self.ca.len() > 2000 {
                self.ca.pop_front();
            }
            if p_value <= 0.05 && aad >= 0.05 {
                drift = true;
                self.p = self.ca.iter().cloned().collect();
                let from = self.actual.len().saturating_sub(self.p.len());
                self.acc_p = accuracy(&self.actual[from..], &self.predicted[from..]);
            }
        }
        self.actual.push(actual);
        self.predicted.push(predicted);
        (p_value, aad, drift, self.ca.len())
    }
}

fn window_band_law() -> Check {
    let cfg = WindowConfig::default();
    let mut ws = WindowState::new(cfg);
    let mut reference = ReferenceWindow { n: cfg.cold_start, k: 0, p: vec![], ca: VecDeque::new(), actual: vec![], predicted: vec![], acc_p: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let vocab: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let (mut drifts, mut prev_width) = (0, 0usize);
    for step in 0..10_000usize {
        let phase = (step / 1500) % 4;
        let offset = phase * 8;
        let mut row = BTreeMap::new();
        for _ in 0..rng.gen_range(1..6) {
            let w = &vocab[(offset + rng.gen_range(0..12)) % vocab.len()];
            *row.entry(w.clone()).or_insert(0u64) += 1;
        }
        let err_rate = [0.05, 0.3, 0.1, 0.45][phase];
        let actual = if rng.gen_bool(0.5) { Label::Spam } else { Label::NonSpam };
        let predicted = if rng.gen_bool(err_rate) { actual.flipped() } else { actual };
        let gram_row: WordGramRow = row.iter().map(|(g, c)| (g.clone(), *c as u32)).collect();

        let got = ws.observe(gram_row, actual, predicted);
        let (p, aad, drift, width) = reference.analyse(row, actual, predicted);
        ensure((got.p_value - p).abs() <= 1e-9, || format!("step {step}: p {} vs {p}", got.p_value))?;
        ensure((got.aad - aad).abs() <= 1e-12, || format!("step {step}: aad {} vs {aad}", got.aad))?;
        ensure(got.drift == drift && got.w_after == width, || {
            format!("step {step}: drift/width ({}, {}) vs ({drift}, {width})", got.drift, got.w_after)
        })?;
        ensure(got.warmup || got.aad == (got.acc_p - got.acc_ca).abs(), || format!("step {step}: aad not |acc_p - acc_ca|"))?;
        ensure(got.drift == (got.p_value <= 0.05 && got.aad >= 0.05) || got.warmup, || format!("step {step}: drift rule"))?;
        ensure(width <= 2000, || format!("step {step}: width {width}"))?;
        if !got.warmup && step > 0 {
            let delta = width as i64 - prev_width as i64;
            ensure((-1..=1).contains(&delta), || format!("step {step}: width changed by {delta}"))?;
            let expected = match got.action {
                WindowAction::Shrink => -1,
                WindowAction::Hold => 0,
                WindowAction::Grow => 1,
                WindowAction::Reset => delta,
            };
            ensure(delta == expected || width == 1 || width == 2000, || format!("step {step}: {:?} but Δ={delta}", got.action))?;
        }
        drifts += usize::from(drift);
        prev_width = width;
    }
    ensure(drifts > 0, || "the synthetic stream never drifted".into())?;
    Ok(format!("10000 steps identical, {drifts} drifts"))
}

// ---------------------------------------------------------------- learners

fn learner_sanity() -> Check {
    let data = threshold_stream(10_000, 42);
    let mut tree = HoeffdingTree::new(HyperParams::default(), TreeOptions::default(), 42);
    let mut correct = 0;
    for (i, (x, y)) in data.iter().enumerate() {
        if i >= 9_000 && tree.predict_proba_one(x).label == *y {
            correct += 1;
        }
        tree.learn_one(x, *y);
    }
    let acc = correct as f64 / 1000.0;
    ensure(acc >= 0.95, || format!("accuracy {acc:.3} over the last 1000"))?;
    Ok(format!("last-1000 accuracy {acc:.3}"))
}

fn accuracy_from(outs: &[StepOutcome]) -> f64 {
    outs.iter().filter(|o| o.correct == Some(true)).count() as f64 / outs.len().max(1) as f64
}

fn drift_adaptation_benefit() -> Check {
    let flip = FlipConfig { seed: 1, ..FlipConfig::default() };
    let events = vocabulary_flip_stream(&flip);
    let base = PipelineConfig { model: ModelKind::Htc, seed: 1, ..Default::default() };

    let mut frozen = Pipeline::new(PipelineConfig { detector: DetectorKind::None, ..base.clone() });
    frozen.run(&events[..flip.flip_at]);
    frozen.set_frozen(true);
    let static_acc = accuracy_from(&frozen.run(&events[flip.flip_at..]));
    ensure(static_acc <= 0.60, || format!("static post-flip accuracy {static_acc:.3} > 0.60"))?;

    let mut off = Pipeline::new(PipelineConfig { detector: DetectorKind::None, ..base.clone() });
    let off_acc = accuracy_from(&off.run(&events)[flip.flip_at..]);
    let mut on = Pipeline::new(PipelineConfig { detector: DetectorKind::Proposed, ..base });
    let on_acc = accuracy_from(&on.run(&events)[flip.flip_at..]);
    let first = on.drifts().iter().map(|d| d.sample_index as usize).find(|&i| i >= flip.flip_at);
    ensure(on_acc - off_acc >= 0.05, || format!("post-flip {on_acc:.3} vs {off_acc:.3} without detection"))?;
    let lag = first.map(|i| i - flip.flip_at);
    ensure(lag.is_some_and(|l| l <= 1500), || format!("first post-flip drift lag {lag:?}"))?;
    Ok(format!(
        "post-flip {:.1}% vs {:.1}% (static {:.1}%), first drift {} samples after flip",
        on_acc * 100.0,
        off_acc * 100.0,
        static_acc * 100.0,
        lag.unwrap_or_default()
    ))
}

// ------------------------------------------------------- reference detectors

/// ADWIN over the raw window: bucket sizes follow the exponential
/// histogram, statistics are recomputed from the stored values.
struct ReferenceAdwin {
    values: VecDeque<f64>,
    /// Bucket sizes, oldest first.
    buckets: VecDeque<usize>,
    tick: u64,
}

impl ReferenceAdwin {
    fn new() -> Self {
        Self { values: VecDeque::new(), buckets: VecDeque::new(), tick: 0 }
    }

    fn compress(&mut self) {
        let mut size = 1;
        loop {
            let idx: Vec<usize> = (0..self.buckets.len()).filter(|&i| self.buckets[i] == size).collect();
            if idx.len() <= 5 {
                break;
            }
            let (a, b) = (idx[0], idx[1]);
            self.buckets[a] = 2 * size;
            self.buckets.remove(b);
            size *= 2;
        }
    }

    fn update(&mut self, x: f64) -> bool {
        self.values.push_back(x);
        self.buckets.push_back(1);
        self.compress();
        self.tick += 1;
        if self.tick % 32 != 0 || self.values.len() <= 10 {
            return false;
        }
        let mut change = false;
        'again: loop {
            let w = self.values.len();
            let mean = self.values.iter().sum::<f64>() / w as f64;
            let var = self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w as f64;
            let dd = (2.0 * (w as f64).ln() / 0.002).ln();
            let mut n0 = 0;
            for (bi, &size) in self.buckets.iter().enumerate() {
                if bi + 1 == self.buckets.len() {
                    break;
                }
                n0 += size;
                let n1 = w - n0;
                if n0 < 5 || n1 < 5 {
                    continue;
                }
                let s0: f64 = self.values.iter().take(n0).sum();
                let s1: f64 = self.values.iter().skip(n0).sum();
                let m = 1.0 / (n0 as f64 - 4.0) + 1.0 / (n1 as f64 - 4.0);
                let eps = (2.0 * m * var * dd).sqrt() + 2.0 / 3.0 * dd * m;
                if (s0 / n0 as f64 - s1 / n1 as f64).abs() > eps {
                    change = true;
                    let oldest = self.buckets.pop_front().expect("bucket");
                    for _ in 0..oldest {
                        self.values.pop_front();
                    }
                    continue 'again;
                }
            }
            break;
        }
        change
    }
}

/// EDDM with distances kept explicitly and moments recomputed each error.
struct ReferenceEddm {
    n: u64,
    last: u64,
    distances: Vec<f64>,
    max_m2s: f64,
    warning: bool,
}

impl ReferenceEddm {
    fn new() -> Self {
        Self { n: 0, last: 0, distances: vec![], max_m2s: 0.0, warning: false }
    }

    fn observe(&mut self, error: bool) -> DetectorSignal {
        self.n += 1;
        if !error {
            return if self.warning { DetectorSignal::Warning } else { DetectorSignal::Normal };
        }
        self.distances.push((self.n - self.last) as f64);
        self.last = self.n;
        let k = self.distances.len() as f64;
        let mean = self.distances.iter().sum::<f64>() / k;
        let sd = (self.distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / k).sqrt();
        let m2s = mean + 2.0 * sd;
        if self.n < 30 {
            return DetectorSignal::Normal;
        }
        if m2s > self.max_m2s {
            self.max_m2s = m2s;
            self.warning = false;
            return DetectorSignal::Normal;
        }
        let enough = self.distances.len() > 30;
        if enough && m2s / self.max_m2s < 0.9 {
            *self = Self::new();
            DetectorSignal::Drift
        } else if enough && m2s / self.max_m2s < 0.95 {
            self.warning = true;
            DetectorSignal::Warning
        } else {
            self.warning = false;
            DetectorSignal::Normal
        }
    }
}

fn correctness_stream(seed: u64, len: usize) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut err = 0.1;
    (0..len)
        .map(|i| {
            if i % 1000 == 0 {
                err = [0.05, 0.4, 0.15, 0.6, 0.02][(i / 1000) % 5];
            }
            !rng.gen_bool(err)
        })
        .collect()
}

fn detector_comparison() -> Check {
    let mut adwin_cuts = 0;
    let mut eddm_drifts = 0;
    for seed in 0..4 {
        let stream = correctness_stream(seed, 5000);
        let (mut a, mut ra) = (Adwin::default(), ReferenceAdwin::new());
        let (mut e, mut re) = (Eddm::new(), ReferenceEddm::new());
        for (i, &ok) in stream.iter().enumerate() {
            let x = f64::from(u8::from(ok));
            let (got, want) = (a.update(x), ra.update(x));
            ensure(got == want && a.width() == ra.values.len(), || {
                format!("ADWIN seed {seed} step {i}: ({got}, {}) vs ({want}, {})", a.width(), ra.values.len())
            })?;
            adwin_cuts += usize::from(got);
            let (gs, ws) = (e.observe(!ok), re.observe(!ok));
            ensure(gs == ws, || format!("EDDM seed {seed} step {i}: {gs:?} vs {ws:?}"))?;
            eddm_drifts += usize::from(gs == DetectorSignal::Drift);
        }
    }
    ensure(adwin_cuts > 0 && eddm_drifts > 0, || format!("degenerate traces ({adwin_cuts} cuts, {eddm_drifts} drifts)"))?;

    let events = vocabulary_flip_stream(&FlipConfig { n: 4000, flip_at: 2000, seed: 2, ..FlipConfig::default() });
    let base = PipelineConfig { model: ModelKind::Htc, seed: 2, ..Default::default() };
    let synthetic = compare_detectors(&base, &events).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    write_events(&mut csv, &events).map_err(|e| e.to_string())?;
    let loaded = read_events(csv.as_slice(), DatasetProfile::Yelp, IngestOptions::default()).map_err(|e| e.to_string())?;
    let from_csv = compare_detectors(&base, &loaded.events).map_err(|e| e.to_string())?;
    let detectors: Vec<DetectorKind> = synthetic.rows.iter().map(|r| r.detector).collect();
    ensure(detectors == DetectorKind::ALL, || format!("rows {detectors:?}"))?;
    for (a, b) in synthetic.rows.iter().zip(&from_csv.rows) {
        ensure(a.confusion == b.confusion && a.drifts_total == b.drifts_total, || format!("{} differs after CSV round trip", a.detector))?;
    }
    if let Ok(path) = std::env::var("REVSTREAM_COMPARE_CSV") {
        let rep = revstream_core::ingest::read_events_path(path.as_ref(), DatasetProfile::Yelp, IngestOptions::default())
            .map_err(|e| e.to_string())?;
        compare_detectors(&base, &rep.events).map_err(|e| e.to_string())?;
    }
    let cells: Vec<String> = synthetic.rows.iter().map(|r| format!("{} {:.1}%/{}", r.detector, r.accuracy * 100.0, r.drifts_total)).collect();
    Ok(format!("traces identical ({adwin_cuts} ADWIN cuts, {eddm_drifts} EDDM drifts); {}", cells.join(", ")))
}

// ------------------------------------------------------------------ purity

fn prequential_purity() -> Check {
    let events = vocabulary_flip_stream(&FlipConfig { n: 500, flip_at: 250, seed: 9, ..FlipConfig::default() });
    let mut cfg = PipelineConfig { model: ModelKind::Arfc, seed: 9, ..Default::default() };
    cfg.window.cold_start = 100;
    cfg.params.n_trees = 5;
    cfg.grid = Some(vec![cfg.params]);
    let run = |evs: &[RawEvent]| -> Vec<(Label, u64, u64)> {
        let mut p = Pipeline::new(cfg.clone());
        p.run(evs).iter().map(|o| (o.prediction.label, o.prediction.proba.nonspam.to_bits(), o.prediction.proba.spam.to_bits())).collect()
    };
    let original = run(&events);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cuts: Vec<usize> = (0..25).map(|_| rng.gen_range(0..events.len())).collect();
    cuts.extend([0, events.len() - 1]);
    for &t in &cuts {
        let mut permuted = events.clone();
        let mut labels: Vec<Option<Label>> = permuted[t..].iter().map(|e| e.label).collect();
        labels.shuffle(&mut rng);
        for l in labels.iter_mut() {
            if rng.gen_bool(0.5) {
                *l = l.map(Label::flipped);
            }
        }
        for (e, l) in permuted[t..].iter_mut().zip(labels) {
            e.label = l;
        }
        let again = run(&permuted);
        ensure(again[..=t] == original[..=t], || format!("prediction at or before {t} changed"))?;
    }
    Ok(format!("{} cut points, predictions bit-identical", cuts.len()))
}

// ------------------------------------------------------------ explanations

fn explanation_fidelity() -> Check {
    let events = vocabulary_flip_stream(&FlipConfig { n: 1000, flip_at: 600, seed: 4, ..FlipConfig::default() });
    let mut cfg = PipelineConfig { model: ModelKind::Arfc, seed: 4, ..Default::default() };
    cfg.params.grace_period = 50;
    let mut p = Pipeline::new(cfg);
    let mut failures = Vec::new();
    let (mut steps_seen, mut greater_seen) = (0usize, 0usize);
    for e in &events {
        p.step_inspect(e, |model, x, _| {
            let trees = model.export_trees();
            let paths = trace_paths(&trees, x);
            let own = model_paths(model, x);
            for ((path, tree), mine) in paths.iter().zip(&trees).zip(&own) {
                if !replay(path, tree, x) || path.leaf_id != mine.leaf_id {
                    failures.push(e.event_id.clone());
                }
            }
            let mut brute: BTreeMap<&str, usize> = BTreeMap::new();
            for path in &paths {
                for s in &path.steps {
                    steps_seen += 1;
                    if s.direction == Direction::Greater {
                        greater_seen += 1;
                        *brute.entry(s.feature_key.as_str()).or_default() += 1;
                    }
                }
            }
            let ranked = feature_relevance(&paths, 1);
            let as_map: BTreeMap<&str, usize> = ranked.iter().map(|r| (r.feature_key.as_str(), r.count)).collect();
            let sorted = ranked.windows(2).all(|w| (w[0].count, &w[1].feature_key) >= (w[1].count, &w[0].feature_key));
            if as_map != brute || !sorted {
                failures.push(format!("{} relevance", e.event_id));
            }
        });
    }
    ensure(failures.is_empty(), || format!("{} failures, first {:?}", failures.len(), failures.first()))?;
    ensure(steps_seen > 0 && greater_seen < steps_seen, || "paths never exercised both directions".into())?;
    Ok(format!("1000 predictions, {steps_seen} steps replayed ({greater_seen} greater)"))
}

// ------------------------------------------------------------- readability

fn readability_oracles() -> Check {
    // (text, words, sentences, syllables, words of ≤ 3 letters), counted by hand.
    let fixtures: [(&str, f64, f64, f64, f64); 10] = [
        ("The cat sat.", 3.0, 1.0, 3.0, 3.0),
        ("The cat sat on the mat.", 6.0, 1.0, 6.0, 6.0),
        ("I like green apples. They taste sweet.", 7.0, 2.0, 8.0, 1.0),
        ("Readability matters.", 2.0, 1.0, 7.0, 0.0),
        ("Go!", 1.0, 1.0, 1.0, 1.0),
        ("The table is stable. Really?", 5.0, 2.0, 8.0, 2.0),
        ("We walked home", 3.0, 1.0, 4.0, 1.0),
        ("Yes. No. Maybe.", 3.0, 3.0, 3.0, 2.0),
        ("Beautiful queues everywhere.", 3.0, 1.0, 8.0, 0.0),
        ("A cat, a dog, and a bird ran home.", 9.0, 1.0, 9.0, 7.0),
    ];
    for (text, w, s, syl, mini) in fixtures {
        let flesch = 206.835 - 1.015 * (w / s) - 84.6 * (syl / w);
        let eflaw = (w + mini) / s;
        let (f, e) = (flesch_score(text), mcalpine_eflaw(text));
        ensure((f - flesch).abs() < 1e-9 && (e - eflaw).abs() < 1e-12, || format!("{text:?}: ({f}, {e}) vs ({flesch}, {eflaw})"))?;
    }
    ensure((flesch_score("The cat sat.") - 119.19).abs() < 1e-9, || "The cat sat. != 119.19".into())?;
    ensure(mcalpine_eflaw("The cat sat on the mat.") == 12.0, || "EFLAW != 12.0".into())?;
    Ok("10 fixtures".into())
}

// ----------------------------------------------------------------- service

fn service_replay_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("journal.ndjson");
    let mut events = vocabulary_flip_stream(&FlipConfig { n: 500, flip_at: 250, seed: 8, ..FlipConfig::default() });
    for e in events.iter_mut().skip(3).step_by(40) {
        e.label = None;
    }
    let mut cfg = ServiceConfig::default();
    cfg.pipeline.window.cold_start = 100;
    let live = revstream_service::start(cfg, events, Some(&log), None, None).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let mut rx = live.app.snapshots.clone();
        rx.wait_for(|s| s.finished).await.map(|_| ()).map_err(|e| e.to_string())
    })?;
    let send = |cmd: revstream_service::Command| live.writer.commands.send(cmd).map_err(|e| e.to_string());
    for (id, correct) in [("s00003", true), ("s00123", false), ("s00480", false)] {
        let (tx, rx) = tokio::sync::oneshot::channel();
        send(revstream_service::Command::Feedback { event_id: id.into(), correct, moderator_id: Some("qa".into()), reply: tx })?;
        rt.block_on(rx).map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
    }
    let snap = live.app.snapshots.borrow().clone();
    if !snap.alerts.is_empty() {
        let (tx, rx) = tokio::sync::oneshot::channel();
        send(revstream_service::Command::Ack { alert_id: 0, reply: tx })?;
        rt.block_on(rx).map_err(|e| e.to_string())?.map_err(|e| e.to_string())?;
    }
    let snap = live.app.snapshots.borrow().clone();
    let live_metrics = serde_json::to_vec(&snap.metrics).map_err(|e| e.to_string())?;
    let live_export = serde_json::to_vec(&snap.export()).map_err(|e| e.to_string())?;
    drop(snap);
    let app = live.app.clone();
    live.writer.shutdown().map_err(|e| e.to_string())?;
    drop(app);

    let replayed: ServiceState = replay_path(&log).map_err(|e| e.to_string())?;
    let rs = replayed.snapshot(true);
    ensure(serde_json::to_vec(&rs.metrics).map_err(|e| e.to_string())? == live_metrics, || "/metrics differs".into())?;
    ensure(serde_json::to_vec(&rs.export()).map_err(|e| e.to_string())? == live_export, || "/export differs".into())?;
    Ok(format!("500 events, {} bytes of export identical, {} alerts", live_export.len(), rs.alerts.len()))
}

// -------------------------------------------------------------------- main

fn main() {
    let checks: Vec<(&str, Duration, fn() -> Check)> = vec![
        ("incremental-stat oracle", Duration::from_secs(1), incremental_stat_oracle),
        ("chi-square oracle", Duration::from_secs(5), chi_square_oracle),
        ("window band law vs straight-line reference", Duration::from_secs(30), window_band_law),
        ("learner sanity (HTC on x > 0.5)", Duration::from_secs(10), learner_sanity),
        ("drift-adaptation benefit", Duration::from_secs(60), drift_adaptation_benefit),
        ("detector comparison harness", Duration::from_secs(60), detector_comparison),
        ("prequential purity", Duration::from_secs(10), prequential_purity),
        ("explanation fidelity", Duration::from_secs(10), explanation_fidelity),
        ("readability oracles", Duration::from_secs(1), readability_oracles),
        ("service replay determinism", Duration::from_secs(30), service_replay_determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in checks {
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = t0.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > budget => Err(format!("{detail}; took {took:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({took:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name} ({took:.2?}): {why}");
            }
        }
    }
    match std::env::var("REVSTREAM_YELP_CSV") {
        Ok(path) => println!("[SKIP] Yelp spam-F replication: run scripts/replicate_yelp.sh {path} (long-running, outside CI)"),
        Err(_) => println!("[SKIP] Yelp spam-F replication: needs the public Yelp CSV; see scripts/replicate_yelp.sh"),
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
