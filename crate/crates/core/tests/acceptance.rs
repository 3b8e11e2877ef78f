//! End-to-end acceptance criteria. Runs as a plain binary so every criterion
//! prints one PASS/FAIL line; exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tracklet_refine::connector::{apply_spatial_gate, build_matrix, connect, tracklet_distance};
use tracklet_refine::formats::{decode_sequence, encode_sequence};
use tracklet_refine::metrics::{evaluate, DEFAULT_IOU_MIN};
use tracklet_refine::splitter::{dbscan, split_all};
use tracklet_refine::synth::{
    apply_swaps, generate, inject_cutoff, inject_cutoff_from, inject_mixup, Provenance,
    ScenarioParams, Swap,
};
use tracklet_refine::{
    normalize_embedding, refine, temporal_overlap, BoundingBox, BoxObservation, Embedding,
    RefineConfig, TrackSet, Tracklet,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Embedding {
    loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        if let Ok(e) = normalize_embedding(&v) {
            if v.iter().any(|x| x.abs() > 1e-3) {
                return e;
            }
        }
    }
}

fn obs(frame: u32, left: f64, top: f64, width: f64, height: f64) -> BoxObservation {
    BoxObservation {
        frame,
        bbox: BoundingBox::new(left, top, width, height).unwrap(),
        confidence: 0.75,
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Random track set: up to 12 tracklets with random spans (possibly with
/// frame gaps), positions and appearance.
fn random_trackset(rng: &mut ChaCha8Rng) -> TrackSet {
    let dim = rng.random_range(2..=8);
    let count = rng.random_range(1..=12);
    let protos: Vec<Embedding> = (0..4).map(|_| random_unit(rng, dim)).collect();
    let tracklets = (0..count)
        .map(|i| {
            let start = rng.random_range(1..80u32);
            let len = rng.random_range(1..25u32);
            let (mut x, mut y) = (rng.random_range(0.0..1800.0), rng.random_range(0.0..1000.0));
            let proto = protos[rng.random_range(0..protos.len())].clone();
            let mut pairs = Vec::new();
            for f in start..start + len {
                if !rng.random_bool(0.85) {
                    continue;
                }
                x += rng.random_range(-15.0..15.0);
                y += rng.random_range(-10.0..10.0);
                let e = if rng.random_bool(0.5) {
                    proto.clone()
                } else {
                    random_unit(rng, dim)
                };
                pairs.push((obs(f, round2(x), round2(y), 40.0, 90.0), e));
            }
            let pairs = if pairs.is_empty() {
                vec![(obs(start, round2(x), round2(y), 40.0, 90.0), proto.clone())]
            } else {
                pairs
            };
            Tracklet::new(i as u32 + 1, pairs).unwrap()
        })
        .collect();
    TrackSet::new("random", tracklets).unwrap()
}

/// Multiset of (frame, box bits, confidence bits, embedding bits).
fn observation_multiset(ts: &TrackSet) -> Vec<(u32, [u64; 5], Vec<u32>)> {
    let mut v: Vec<_> = ts
        .rows()
        .into_iter()
        .map(|(_, o, e)| {
            let b = o.bbox;
            (
                o.frame,
                [
                    b.left().to_bits(),
                    b.top().to_bits(),
                    b.width().to_bits(),
                    b.height().to_bits(),
                    o.confidence.to_bits(),
                ],
                e.raw().iter().map(|x| x.to_bits()).collect(),
            )
        })
        .collect();
    v.sort();
    v
}

fn one_box_per_frame_and_id(ts: &TrackSet) -> bool {
    let mut seen = BTreeSet::new();
    ts.rows()
        .into_iter()
        .all(|(id, o, _)| seen.insert((o.frame, id)))
}

/// Each output track covers one identity and each identity one output track.
fn exact_partition(prov: &Provenance, gt: &TrackSet, out: &TrackSet) -> Result<(), String> {
    let purity = prov.purity(out);
    let mut owner: BTreeMap<u32, u32> = BTreeMap::new();
    for (id, gts) in &purity {
        ensure(gts.len() == 1, || {
            format!("track {id} mixes identities {gts:?}")
        })?;
        if let Some(prev) = owner.insert(gts[0], *id) {
            return Err(format!(
                "identity {} split over tracks {prev} and {id}",
                gts[0]
            ));
        }
    }
    ensure(owner.len() == gt.len(), || {
        format!("{} identities recovered of {}", owner.len(), gt.len())
    })
}

/// Provenance of `out` relative to `input`: each observation of `out` traced
/// by (frame, box) to the track that held it in `input`, then through `prov`.
fn carry(prov: &Provenance, input: &TrackSet, out: &TrackSet) -> Provenance {
    let mut holder: BTreeMap<(u32, [u64; 4]), u32> = BTreeMap::new();
    for t in input.tracklets() {
        for o in t.observations() {
            holder.insert((o.frame, box_key(&o.bbox)), t.id());
        }
    }
    let gt = out
        .tracklets()
        .iter()
        .flat_map(|t| {
            t.observations().iter().map(|o| {
                let src = holder[&(o.frame, box_key(&o.bbox))];
                (o.frame, t.id(), prov.gt_of(o.frame, src).unwrap())
            })
        })
        .collect::<Vec<_>>();
    Provenance::from_triples(gt)
}

fn box_key(b: &BoundingBox) -> [u64; 4] {
    [
        b.left().to_bits(),
        b.top().to_bits(),
        b.width().to_bits(),
        b.height().to_bits(),
    ]
}

// ---------------------------------------------------------------------------

fn brute_force_distance(a: &Tracklet, b: &Tracklet) -> f64 {
    let mut total = 0.0;
    for x in a.embeddings() {
        for y in b.embeddings() {
            let dot: f64 = x.unit().iter().zip(y.unit()).map(|(p, q)| p * q).sum();
            total += 1.0 - dot;
        }
    }
    total / (a.len() * b.len()) as f64
}

fn criterion_factorization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let dim = rng.random_range(1..=16);
        let na = rng.random_range(1..=20);
        let nb = rng.random_range(1..=20);
        let a = Tracklet::new(
            1,
            (0..na)
                .map(|f| (obs(f, 0.0, 0.0, 1.0, 1.0), random_unit(&mut rng, dim)))
                .collect(),
        )
        .unwrap();
        let b = Tracklet::new(
            2,
            (0..nb)
                .map(|f| (obs(100 + f, 0.0, 0.0, 1.0, 1.0), random_unit(&mut rng, dim)))
                .collect(),
        )
        .unwrap();
        let fast = tracklet_distance(&a, &b).map_err(|e| e.to_string())?;
        let exact = brute_force_distance(&a, &b).clamp(0.0, 1.0);
        worst = worst.max((fast - exact).abs());
    }
    ensure(worst <= 1e-6, || format!("max abs error {worst:e}"))?;
    within(Duration::from_secs(5), start)?;
    Ok(format!("max abs error {worst:.2e} over 1000 pairs"))
}

/// Reference DBSCAN: cores by neighbor count, clusters as connected
/// components of the core ε-graph numbered by smallest core index, each border
/// point given to the lowest-numbered component with a core in reach.
fn reference_dbscan(points: &[Embedding], eps: f64, min_samples: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let d = |i: usize, j: usize| {
        1.0 - points[i]
            .unit()
            .iter()
            .zip(points[j].unit())
            .map(|(p, q)| p * q)
            .sum::<f64>()
    };
    let near = |i: usize, j: usize| d(i, j) <= eps;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_samples)
        .collect();
    let mut component = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if !core[i] || component[i] != usize::MAX {
            continue;
        }
        let mut stack = vec![i];
        component[i] = next;
        while let Some(p) = stack.pop() {
            for q in 0..n {
                if core[q] && component[q] == usize::MAX && near(p, q) {
                    component[q] = next;
                    stack.push(q);
                }
            }
        }
        next += 1;
    }
    (0..n)
        .map(|i| {
            if core[i] {
                Some(component[i])
            } else {
                (0..n)
                    .filter(|&j| core[j] && near(i, j))
                    .map(|j| component[j])
                    .min()
            }
        })
        .collect()
}

fn criterion_dbscan() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut clustered = 0;
    for case in 0..500 {
        let dim = rng.random_range(1..=8);
        let n = rng.random_range(1..=50);
        let centers: Vec<Embedding> = (0..rng.random_range(1..=4))
            .map(|_| random_unit(&mut rng, dim))
            .collect();
        let spread = rng.random_range(0.05f32..0.8);
        let points: Vec<Embedding> = (0..n)
            .map(|_| {
                let c = &centers[rng.random_range(0..centers.len())];
                loop {
                    let v: Vec<f32> = c
                        .raw()
                        .iter()
                        .map(|x| x + rng.random_range(-spread..spread))
                        .collect();
                    if let Ok(e) = normalize_embedding(&v) {
                        break e;
                    }
                }
            })
            .collect();
        let eps = rng.random_range(0.1..=1.0);
        let s = rng.random_range(2..=6);
        let got = dbscan(&points, eps, s);
        let want = reference_dbscan(&points, eps, s);
        ensure(got.labels == want, || {
            format!(
                "case {case}: labels differ\n got {:?}\nwant {want:?}",
                got.labels
            )
        })?;
        clustered += usize::from(got.num_clusters > 1);
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!(
        "500 sets identical to reference ({clustered} with 2+ clusters)"
    ))
}

fn default_config() -> RefineConfig {
    RefineConfig::new(5, 0.6, 3, 0.4, 1.0).unwrap()
}

fn criterion_cutoff_recovery() -> Outcome {
    let start = Instant::now();
    let params = ScenarioParams {
        num_identities: 10,
        frames: 200,
        embed_dim: 32,
        min_prototype_angle: 90f64.to_radians(),
        noise_angle_max: 10f64.to_radians(),
        rng_seed: 31,
        ..ScenarioParams::default()
    };
    let gt = generate(&params).map_err(|e| e.to_string())?;
    let (corrupted, prov) = inject_cutoff(&gt, 0.05, 32).map_err(|e| e.to_string())?;
    let before = evaluate(&gt, &corrupted, DEFAULT_IOU_MIN).idf1;
    ensure(before < 1.0, || format!("corruption left IDF1 at {before}"))?;
    let (refined, summary) = refine(&corrupted, &default_config()).map_err(|e| e.to_string())?;
    exact_partition(&carry(&prov, &corrupted, &refined), &gt, &refined)?;
    let after = evaluate(&gt, &refined, DEFAULT_IOU_MIN).idf1;
    ensure(after == 1.0, || format!("IDF1 after refine {after}"))?;
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{} fragments -> {} tracks, IDF1 {before:.4} -> {after:.4}",
        summary.input, summary.after_connect
    ))
}

fn criterion_mixup_repair() -> Outcome {
    let start = Instant::now();
    let params = ScenarioParams {
        rng_seed: 41,
        ..ScenarioParams::default()
    };
    let gt = generate(&params).map_err(|e| e.to_string())?;
    let swaps = [
        Swap {
            frame: 60,
            a: 1,
            b: 2,
        },
        Swap {
            frame: 140,
            a: 3,
            b: 4,
        },
    ];
    let (mixed, prov) = apply_swaps(&gt, &swaps).map_err(|e| e.to_string())?;
    let impure = prov.purity(&mixed).values().filter(|g| g.len() > 1).count();
    ensure(impure == 4, || {
        format!("expected 4 mixed tracks, got {impure}")
    })?;

    let split = split_all(&mixed, &default_config()).map_err(|e| e.to_string())?;
    let split_prov = carry(&prov, &mixed, &split);
    let still_mixed: Vec<_> = split_prov
        .purity(&split)
        .into_iter()
        .filter(|(_, g)| g.len() > 1)
        .collect();
    ensure(still_mixed.is_empty(), || {
        format!("impure after split: {still_mixed:?}")
    })?;

    let (refined, _) = refine(&mixed, &default_config()).map_err(|e| e.to_string())?;
    exact_partition(&carry(&prov, &mixed, &refined), &gt, &refined)?;
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{} tracks after split, all pure; refine recovers {} identities",
        split.len(),
        refined.len()
    ))
}

fn corrupted_scenario(seed: u64) -> (TrackSet, TrackSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ScenarioParams {
        num_identities: rng.random_range(2..=6),
        frames: rng.random_range(10..=60),
        embed_dim: rng.random_range(6..=16),
        noise_angle_max: rng.random_range(0.0..30f64).to_radians(),
        min_prototype_angle: rng.random_range(40.0..90f64).to_radians(),
        rng_seed: seed,
        ..ScenarioParams::default()
    };
    let gt = generate(&params).unwrap();
    let (mixed, prov) = inject_mixup(&gt, rng.random_range(0.0..0.05), seed + 1).unwrap();
    let (cut, _) = inject_cutoff_from(&mixed, &prov, rng.random_range(0.0..0.2), seed + 2).unwrap();
    (gt, cut)
}

fn criterion_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..100u64 {
        let (_, corrupted) = corrupted_scenario(1000 + case);
        let cfg = RefineConfig::new(
            rng.random_range(1..=6),
            rng.random_range(0.1..1.0),
            rng.random_range(1..=4),
            rng.random_range(0.1..0.9),
            rng.random_range(0.3..=1.0),
        )
        .unwrap();
        let (refined, _) = refine(&corrupted, &cfg).map_err(|e| e.to_string())?;
        ensure(
            observation_multiset(&refined) == observation_multiset(&corrupted),
            || format!("case {case}: observation multiset changed"),
        )?;
        ensure(one_box_per_frame_and_id(&refined), || {
            format!("case {case}: duplicate (frame, id)")
        })?;
    }
    Ok("100 corrupted scenarios conserved".into())
}

fn criterion_spatial_gate() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..100 {
        let ts = random_trackset(&mut rng);
        let m = build_matrix(&ts).map_err(|e| e.to_string())?;
        ensure(apply_spatial_gate(&m, &ts, 1.0) == m, || {
            format!("case {case}: beta=1 changed the matrix")
        })?;
    }

    // horizontal center extent is 1000 (anchors at x=0 and x=1000); the pair
    // exits at x=100 and re-enters at x=800, 700 > 0.5 * 1000
    let e = normalize_embedding(&[1.0, 0.0, 0.0]).unwrap();
    let other = normalize_embedding(&[0.0, 1.0, 0.0]).unwrap();
    let track = |id: u32, frames: std::ops::RangeInclusive<u32>, cx: f64, emb: &Embedding| {
        Tracklet::new(
            id,
            frames
                .map(|f| (obs(f, cx - 20.0, 500.0, 40.0, 80.0), emb.clone()))
                .collect(),
        )
        .unwrap()
    };
    let ts = TrackSet::new(
        "adversarial",
        vec![
            track(1, 1..=20, 100.0, &e),
            track(2, 30..=50, 800.0, &e),
            track(3, 1..=50, 20.0, &other),
            track(4, 1..=50, 1020.0, &other),
        ],
    )
    .unwrap();
    let half = RefineConfig::new(5, 0.6, 3, 0.4, 0.5).unwrap();
    let gated = connect(&ts, &half).map_err(|e| e.to_string())?;
    ensure(gated.len() == 4, || {
        format!("beta=0.5 merged the far pair ({} tracks)", gated.len())
    })?;
    let open = connect(&ts, &default_config()).map_err(|e| e.to_string())?;
    ensure(open.len() == 3, || {
        format!("beta=1 should merge the pair ({} tracks)", open.len())
    })?;
    Ok("beta=1 inert on 100 sets; far pair blocked at beta=0.5".into())
}

fn criterion_temporal_exclusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut merges = 0;
    for case in 0..200 {
        let ts = random_trackset(&mut rng);
        let alpha = rng.random_range(0.2..1.0);
        let cfg = RefineConfig::new(5, 0.6, 3, alpha, 1.0).unwrap();
        let out = connect(&ts, &cfg).map_err(|e| e.to_string())?;
        let mut source_of = BTreeMap::new();
        for t in ts.tracklets() {
            for o in t.observations() {
                source_of.insert((o.frame, box_key(&o.bbox)), t.id());
            }
        }
        for t in out.tracklets() {
            let sources: BTreeSet<u32> = t
                .observations()
                .iter()
                .map(|o| source_of[&(o.frame, box_key(&o.bbox))])
                .collect();
            merges += sources.len() - 1;
            let sources: Vec<&Tracklet> = sources.iter().map(|id| ts.get(*id).unwrap()).collect();
            for i in 0..sources.len() {
                for j in i + 1..sources.len() {
                    ensure(!temporal_overlap(sources[i], sources[j]), || {
                        format!(
                            "case {case}: {} and {} overlap but were merged",
                            sources[i].id(),
                            sources[j].id()
                        )
                    })?;
                }
            }
        }
    }
    ensure(merges > 0, || "no merges exercised".into())?;
    Ok(format!(
        "200 random sets, {merges} merges, none across overlapping spans"
    ))
}

fn criterion_ablation() -> Outcome {
    let start = Instant::now();
    let gt = generate(&ScenarioParams {
        rng_seed: 81,
        ..ScenarioParams::default()
    })
    .map_err(|e| e.to_string())?;
    let swaps = [
        Swap {
            frame: 50,
            a: 1,
            b: 2,
        },
        Swap {
            frame: 100,
            a: 3,
            b: 4,
        },
        Swap {
            frame: 150,
            a: 5,
            b: 6,
        },
    ];
    let (mixed, prov) = apply_swaps(&gt, &swaps).map_err(|e| e.to_string())?;
    let (corrupted, _) = inject_cutoff_from(&mixed, &prov, 0.05, 82).map_err(|e| e.to_string())?;
    let base = evaluate(&gt, &corrupted, DEFAULT_IOU_MIN).idf1;
    let connector_only = default_config().with_split(false);
    let (c_only, _) = refine(&corrupted, &connector_only).map_err(|e| e.to_string())?;
    let (both, _) = refine(&corrupted, &default_config()).map_err(|e| e.to_string())?;
    let idf1_c = evaluate(&gt, &c_only, DEFAULT_IOU_MIN).idf1;
    let idf1_sc = evaluate(&gt, &both, DEFAULT_IOU_MIN).idf1;
    ensure(idf1_c > base, || {
        format!("connector only {idf1_c:.4} <= corrupted {base:.4}")
    })?;
    ensure(idf1_sc >= idf1_c, || {
        format!("split+connect {idf1_sc:.4} < connector only {idf1_c:.4}")
    })?;
    within(Duration::from_secs(20), start)?;
    Ok(format!(
        "IDF1 corrupted {base:.4}, connector {idf1_c:.4}, splitter+connector {idf1_sc:.4}"
    ))
}

fn criterion_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..100 {
        let ts = random_trackset(&mut rng);
        let r = evaluate(&ts, &ts, DEFAULT_IOU_MIN);
        ensure(r.idf1 == 1.0 && r.id_switches == 0 && r.mota == 1.0, || {
            format!("case {case}: self-evaluation {r:?}")
        })?;
    }
    let e = normalize_embedding(&[1.0]).unwrap();
    let track = |id: u32, frames: std::ops::RangeInclusive<u32>| {
        Tracklet::new(
            id,
            frames
                .map(|f| (obs(f, 10.0, 10.0, 50.0, 100.0), e.clone()))
                .collect(),
        )
        .unwrap()
    };
    let gt = TrackSet::new("gt", vec![track(1, 1..=10)]).unwrap();
    let pred = TrackSet::new("pred", vec![track(1, 1..=5), track(2, 6..=10)]).unwrap();
    let r = evaluate(&gt, &pred, DEFAULT_IOU_MIN);
    ensure(r.idf1 == 0.5 && r.id_switches == 1, || {
        format!("fragmentation example gave {r:?}")
    })?;
    Ok("self-evaluation perfect on 100 sets; fragmentation IDF1 = 0.5".into())
}

fn criterion_io_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..100 {
        let ts = {
            let base = random_trackset(&mut rng);
            // arbitrary-precision boxes and confidences
            let tracklets = base
                .tracklets()
                .iter()
                .map(|t| {
                    let pairs = t
                        .pairs()
                        .map(|(o, e)| {
                            let b = o.bbox;
                            let jitter = rng.random_range(0.0..0.01);
                            let mut o = obs(
                                o.frame,
                                b.left() + jitter,
                                b.top() - jitter,
                                b.width() + jitter,
                                b.height(),
                            );
                            o.confidence = rng.random_range(0.0..1.0);
                            (o, e.clone())
                        })
                        .collect();
                    Tracklet::new(t.id(), pairs).unwrap()
                })
                .collect();
            base.with_tracklets(tracklets).unwrap()
        };
        let (text, bytes) = encode_sequence(&ts);
        let back =
            decode_sequence("random", &text, &bytes).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back.ids() == ts.ids(), || {
            format!("case {case}: ids differ")
        })?;
        for (a, b) in ts.tracklets().iter().zip(back.tracklets()) {
            ensure(a.len() == b.len(), || {
                format!("case {case}: lengths differ")
            })?;
            for ((oa, ea), (ob, eb)) in a.pairs().zip(b.pairs()) {
                let (ba, bb) = (oa.bbox, ob.bbox);
                let same_boxes = [
                    (ba.left(), bb.left()),
                    (ba.top(), bb.top()),
                    (ba.width(), bb.width()),
                    (ba.height(), bb.height()),
                    (oa.confidence, ob.confidence),
                ]
                .iter()
                .all(|&(x, y)| {
                    format!("{x:.2}") == format!("{y:.2}") && (x - y).abs() <= 0.005 + 1e-9
                });
                ensure(oa.frame == ob.frame && same_boxes, || {
                    format!("case {case}: box differs beyond 2 decimals")
                })?;
                let bits = |e: &Embedding| e.raw().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                ensure(bits(ea) == bits(eb), || {
                    format!("case {case}: embedding bits differ")
                })?;
            }
        }
        let (text2, bytes2) = encode_sequence(&back);
        ensure(text2 == text && bytes2 == bytes, || {
            format!("case {case}: second round trip not stable")
        })?;
    }
    Ok("100 sets round-trip (boxes at 2 decimals, embeddings bit-exact)".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "1 distance factorization vs double sum",
            criterion_factorization,
        ),
        ("2 DBSCAN vs reference", criterion_dbscan),
        ("3 cut-off recovery", criterion_cutoff_recovery),
        ("4 mix-up repair", criterion_mixup_repair),
        ("5 conservation", criterion_conservation),
        ("6 spatial gate", criterion_spatial_gate),
        ("7 temporal exclusion", criterion_temporal_exclusion),
        ("8 ablation direction", criterion_ablation),
        ("9 metrics self-consistency", criterion_metrics),
        ("10 I/O round trips", criterion_io_round_trip),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{took:.2?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} [{took:.2?}]");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
