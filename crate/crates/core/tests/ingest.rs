use cfpp_core::fixtures::{generate_paired_set, FixtureConfig};
use cfpp_core::trajectory::{
    load_recording_paths, normalize_direction, write_recording, RecordingPaths,
};
use proptest::prelude::*;

fn small_config(noise: f64) -> FixtureConfig {
    FixtureConfig {
        scenes_per_recording: 2,
        scene_duration_s: 12.0,
        accel_noise: noise,
        ..FixtureConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn csv_round_trip_preserves_tracks(seed in any::<u64>(), noise in 0.0..0.5_f64) {
        let dir = tempfile::tempdir().unwrap();
        for bundle in generate_paired_set(&small_config(noise), 1, seed) {
            let paths = RecordingPaths::in_dir(dir.path(), &format!("{:02}", bundle.meta.recording_id));
            write_recording(&bundle, &paths, &["round trip".to_string()]).unwrap();
            let back = load_recording_paths(&paths).unwrap();
            prop_assert_eq!(&back.meta, &bundle.meta);
            prop_assert_eq!(back.tracks.len(), bundle.tracks.len());
            for (a, b) in back.tracks.iter().zip(&bundle.tracks) {
                prop_assert_eq!((a.vehicle_id, a.length, a.width), (b.vehicle_id, b.length, b.width));
                prop_assert_eq!(a.frames.len(), b.frames.len());
                for (fa, fb) in a.frames.iter().zip(&b.frames) {
                    prop_assert_eq!((fa.frame, fa.lane_id, fa.preceding_id, fa.following_id), (fb.frame, fb.lane_id, fb.preceding_id, fb.following_id));
                    prop_assert_eq!((fa.speed, fa.accel, fa.y), (fb.speed, fb.accel, fb.y));
                    // x passes through the corner/front-bumper conversion
                    prop_assert!((fa.x - fb.x).abs() <= 1e-9 * fb.x.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn normalize_direction_is_idempotent(seed in any::<u64>()) {
        for bundle in generate_paired_set(&small_config(0.2), 1, seed) {
            let once = normalize_direction(bundle).unwrap();
            for t in &once.tracks {
                prop_assert!(t.mean_speed() > 0.0);
            }
            let twice = normalize_direction(once.clone()).unwrap();
            prop_assert_eq!(twice, once);
        }
    }
}

#[test]
fn tracks_are_contiguous_and_finite() {
    for bundle in generate_paired_set(&FixtureConfig::default(), 2, 5) {
        for t in &bundle.tracks {
            assert!(t.length > 0.0);
            for w in t.frames.windows(2) {
                assert_eq!(w[1].frame, w[0].frame + 1);
            }
            assert!(t
                .frames
                .iter()
                .all(|f| f.speed.is_finite() && f.x.is_finite()));
        }
    }
}
