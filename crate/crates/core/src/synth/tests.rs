use super::*;

fn quiet() -> NoiseModel {
    NoiseModel::none()
}

fn clip(label: ActivityLabel, seed: u64, noise: &NoiseModel) -> Clip {
    let scene = SceneConfig { seed, ..Default::default() };
    synthesize_clip(label, 10.0, &scene, &AnimalModel::default(), noise, &RadarConfig::default()).unwrap()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

#[test]
fn same_seed_same_clip() {
    let noise = NoiseModel::moderate(&SceneConfig::default(), &RadarConfig::default());
    let a = clip(ActivityLabel::Eating, 5, &noise);
    let b = clip(ActivityLabel::Eating, 5, &noise);
    assert_eq!(a, b);
    assert_ne!(a.frames, clip(ActivityLabel::Eating, 6, &noise).frames);
    assert_eq!(a.frames.len(), 300);
    a.validate().unwrap();
}

#[test]
fn lying_returns_stay_low() {
    for seed in 0..3 {
        let c = clip(ActivityLabel::Lying, seed, &quiet());
        let top = c.frames.iter().flat_map(|f| &f.points).map(|p| p.z).fold(f64::MIN, f64::max);
        assert!(top <= -0.25, "seed {seed}: top {top}");
    }
}

#[test]
fn walking_crosses_the_scene() {
    for seed in 0..4 {
        let scene = SceneConfig { seed, ..Default::default() };
        let c = synthesize_clip(
            ActivityLabel::Walking,
            5.0,
            &scene,
            &AnimalModel::default(),
            &quiet(),
            &RadarConfig::default(),
        )
        .unwrap();
        // Per-second centroids.
        let per_sec: Vec<f64> =
            c.frames.chunks(30).map(|ch| mean(ch.iter().flat_map(|f| &f.points).map(|p| p.x))).collect();
        let steps: Vec<f64> = per_sec.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(steps.iter().all(|&d| d > 0.0) || steps.iter().all(|&d| d < 0.0), "seed {seed}: {per_sec:?}");
        let first = mean(c.frames[0].points.iter().map(|p| p.x));
        let last = mean(c.frames.last().unwrap().points.iter().map(|p| p.x));
        assert!((last - first).abs() >= 2.5, "seed {seed}: {first} -> {last}");
    }
}

#[test]
fn background_is_exactly_the_clutter() {
    let scene = SceneConfig::default();
    let clutter = clutter_layout(7, &scene, &RadarConfig::default());
    let noise = NoiseModel { static_clutter_points: clutter.clone(), ..NoiseModel::none() };
    let bg = synthesize_background(1.0, &scene, &noise, &RadarConfig::default()).unwrap();
    assert!(bg.is_background());
    assert_eq!(bg.frames.len(), 30);
    for f in &bg.frames {
        assert_eq!(f.points, clutter);
    }
}

#[test]
fn outlier_count_tracks_rate() {
    let noise = NoiseModel { outlier_rate: 2.0, ..NoiseModel::none() };
    let total: usize = (0..10)
        .map(|seed| clip(ActivityLabel::Standing, seed, &noise).meta[META_OUTLIERS].as_array().unwrap().len())
        .sum();
    let avg = total as f64 / 10.0;
    assert!((avg - 600.0).abs() <= 120.0, "{avg}");
}

#[test]
fn outlier_tags_point_at_outliers() {
    let noise = NoiseModel { outlier_rate: 3.0, ..NoiseModel::none() };
    let c = clip(ActivityLabel::Sitting, 2, &noise);
    let tags = c.meta[META_OUTLIERS].as_array().unwrap();
    assert!(!tags.is_empty());
    for t in tags {
        let f = t[0].as_u64().unwrap() as usize;
        let k = t[1].as_u64().unwrap() as usize;
        assert!(k < c.frames[f].len());
    }
    // Outliers come last in each frame.
    let with_none = clip(ActivityLabel::Sitting, 2, &quiet());
    for (a, b) in c.frames.iter().zip(&with_none.frames) {
        assert_eq!(&a.points[..b.len()], &b.points[..]);
    }
}

#[test]
fn default_dataset_size() {
    let spec = DatasetSpec::default();
    assert!(spec.clips_per_label.values().all(|&n| n == 44));
    let total = spec.total_duration();
    assert!((1980.0..=2200.0).contains(&total), "{total}");
}

#[test]
fn dataset_sessions_are_unique_and_seeded() {
    let spec = DatasetSpec { clip_duration: 1.0, walking_duration: 1.0, ..DatasetSpec::uniform(3) };
    let radar = RadarConfig::default();
    let scene = SceneConfig::default();
    let a = synthesize_dataset(&spec, &scene, &AnimalModel::default(), &quiet(), &radar, 9).unwrap();
    let b = synthesize_dataset(&spec, &scene, &AnimalModel::default(), &quiet(), &radar, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 15);
    let ids: std::collections::BTreeSet<_> = a.iter().map(|c| c.session_id.as_str()).collect();
    assert_eq!(ids.len(), 15);
    assert!(ids.contains("walking-002"));
    let c = synthesize_dataset(&spec, &scene, &AnimalModel::default(), &quiet(), &radar, 10).unwrap();
    assert_ne!(a[0].frames, c[0].frames);
}

#[test]
fn postures_differ_in_height() {
    let h = |label| mean((0..3).flat_map(|s| clip(label, s, &quiet()).frames).flat_map(|f| f.points).map(|p| p.z));
    let lying = h(ActivityLabel::Lying);
    let sitting = h(ActivityLabel::Sitting);
    let standing = h(ActivityLabel::Standing);
    let eating = h(ActivityLabel::Eating);
    assert!(lying + 0.1 < sitting, "{lying} {sitting}");
    assert!(lying + 0.1 < standing);
    assert!(eating < standing, "{eating} {standing}");
}

#[test]
fn points_stay_in_extent_plus_three_sigma() {
    let scene = SceneConfig::default();
    let noise = NoiseModel::high(&scene, &RadarConfig::default());
    let pad = 3.0 * noise.jitter_sigma + 1e-12;
    let e = scene.extent;
    for label in ActivityLabel::ALL {
        for seed in 0..2 {
            let c = clip(label, seed, &noise);
            for p in c.frames.iter().flat_map(|f| &f.points) {
                assert!(p.x >= e.x.lo - pad && p.x <= e.x.hi + pad, "{label} {p:?}");
                assert!(p.y >= e.y.lo - pad && p.y <= e.y.hi + pad, "{label} {p:?}");
                assert!(p.z >= e.z.lo - pad && p.z <= e.z.hi + pad, "{label} {p:?}");
                assert!(p.intensity >= 0.0 && p.velocity.is_finite());
            }
        }
    }
}

#[test]
fn body_ranges_are_quantized_without_jitter() {
    let c = clip(ActivityLabel::Standing, 1, &quiet());
    let dr = range_resolution(&RadarConfig::default()).unwrap();
    for p in c.frames.iter().flat_map(|f| &f.points) {
        let k = p.y / dr;
        assert!((k - k.round()).abs() < 1e-6, "{}", p.y);
    }
}

#[test]
fn bad_configs_rejected() {
    let scene = SceneConfig { points_per_frame: 0.0, ..Default::default() };
    let err =
        synthesize_clip(ActivityLabel::Lying, 1.0, &scene, &AnimalModel::default(), &quiet(), &RadarConfig::default());
    assert!(matches!(err, Err(SynthError::Config(_))));
    let animal = AnimalModel { part_weights: PartWeights { torso: 0.9, ..Default::default() }, ..Default::default() };
    assert!(synthesize_clip(
        ActivityLabel::Lying,
        1.0,
        &SceneConfig::default(),
        &animal,
        &quiet(),
        &RadarConfig::default()
    )
    .is_err());
    let noise = NoiseModel { dropout_prob: 1.5, ..NoiseModel::none() };
    assert!(synthesize_background(1.0, &SceneConfig::default(), &noise, &RadarConfig::default()).is_err());
}
