//! Georegistration and tracking properties.

use proptest::prelude::*;
use taf_twin::ingest::{
    export_object_list, ingest, load_calibrations, load_detections, merge_detections,
    project_point, CalibrationPair, CalibrationSet, Detection, FusedPoint, IngestParams, Tracker,
    TrackerParams, WorldDetection,
};
use taf_twin::model::{wgs84_to_mercator, GeoAnchor, ParticipantClass};

/// Independent reference: apply a row-major 3x3 matrix.
fn apply(h: &[f64; 9], p: [f64; 2]) -> [f64; 2] {
    let w = h[6] * p[0] + h[7] * p[1] + h[8];
    [
        (h[0] * p[0] + h[1] * p[1] + h[2]) / w,
        (h[3] * p[0] + h[4] * p[1] + h[5]) / w,
    ]
}

fn calib_from(h: &[f64; 9], pixels: &[[f64; 2]]) -> CalibrationSet {
    let pairs = pixels
        .iter()
        .map(|&p| {
            let q = apply(h, p);
            CalibrationPair {
                u: p[0],
                v: p[1],
                x: q[0],
                y: q[1],
            }
        })
        .collect();
    CalibrationSet::new("cam", pairs).unwrap()
}

fn homography() -> impl Strategy<Value = [f64; 9]> {
    (
        0.2..3.0f64,
        -0.5..0.5f64,
        -0.5..0.5f64,
        0.2..3.0f64,
        -1e3..1e3f64,
        -1e3..1e3f64,
        -1e-3..1e-3f64,
        -1e-3..1e-3f64,
    )
        .prop_map(|(a, b, d, e, c, f, g, h)| [a, b, c, d, e, f, g, h, 1.0])
}

fn pixels() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec(
        (0.0..400.0f64, 0.0..300.0f64).prop_map(|(u, v)| [u, v]),
        30..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn homography_is_recovered(h in homography(), px in pixels(), q in (0.0..400.0f64, 0.0..300.0f64)) {
        let c = calib_from(&h, &px);
        let got = project_point(&c, [q.0, q.1]).unwrap();
        let want = apply(&h, [q.0, q.1]);
        prop_assert!((got[0] - want[0]).abs() < 1e-6 && (got[1] - want[1]).abs() < 1e-6, "{got:?} vs {want:?}");
    }

    #[test]
    fn merge_is_permutation_invariant(
        pts in prop::collection::vec((0usize..3, 0usize..2, -5.0..5.0f64, -5.0..5.0f64), 0..25),
        seed in any::<u64>(),
    ) {
        let dets: Vec<WorldDetection> = pts.iter().map(|&(cam, class, x, y)| WorldDetection {
            camera_id: format!("cam{cam}"),
            class: [ParticipantClass::Car, ParticipantClass::Pedestrian][class],
            point: [x, y],
        }).collect();
        let mut shuffled = dets.clone();
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(merge_detections(&dets, 1.5), merge_detections(&shuffled, 1.5));
    }
}

#[test]
fn mercator_scale_coordinates() {
    let (x0, y0) = wgs84_to_mercator(49.0069, 8.4037)
        .map(|(y, x)| (x, y))
        .unwrap();
    let h = [0.05, 0.01, y0, -0.004, -0.06, x0, 1e-5, 2e-5, 1.0];
    let px: Vec<[f64; 2]> = (0..36)
        .map(|i| [(i % 6) as f64 * 300.0 + 17.0, (i / 6) as f64 * 170.0 + 9.0])
        .collect();
    let c = calib_from(&h, &px);
    for q in [[640.0, 360.0], [100.0, 800.0], [1500.0, 50.0]] {
        let got = project_point(&c, q).unwrap();
        let want = apply(&h, q);
        assert!(
            (got[0] - want[0]).abs() < 1e-6 && (got[1] - want[1]).abs() < 1e-6,
            "{got:?} vs {want:?}"
        );
    }
}

/// Two ground planes meeting at u = 200: the left half of the image is a
/// plain scaling, the right half tilts away. A single global homography
/// cannot fit both; the local fit is exact wherever the seven nearest pairs
/// come from one plane.
#[test]
fn local_fit_beats_global_on_two_planes() {
    let left = [0.1, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 1.0];
    let right = [0.1, 0.0, 0.0, 0.0, 0.1, 0.0, 2e-4, 0.0, 1.0 - 2e-4 * 200.0];
    let world = |p: [f64; 2]| {
        if p[0] < 200.0 {
            apply(&left, p)
        } else {
            apply(&right, p)
        }
    };
    let mut pairs = Vec::new();
    for i in 0..=20 {
        for j in 0..=10 {
            let p = [i as f64 * 20.0, j as f64 * 30.0];
            let q = world(p);
            pairs.push(CalibrationPair {
                u: p[0],
                v: p[1],
                x: q[0],
                y: q[1],
            });
        }
    }
    let c = CalibrationSet::new("cam", pairs).unwrap();
    let global = c.global_homography().unwrap();
    let queries: Vec<[f64; 2]> = [50.0, 90.0, 130.0, 270.0, 310.0, 350.0]
        .iter()
        .flat_map(|&u| [75.0, 150.0, 225.0].map(|v| [u, v]))
        .collect();
    let err = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let local_max = queries
        .iter()
        .map(|&q| err(project_point(&c, q).unwrap(), world(q)))
        .fold(0.0, f64::max);
    let global_max = queries
        .iter()
        .map(|&q| err(global.apply(q).unwrap(), world(q)))
        .fold(0.0, f64::max);
    assert!(local_max < 1e-6, "local {local_max}");
    assert!(global_max > 0.1, "global {global_max}");
    assert!(local_max < global_max);
}

#[test]
fn parallel_tracks_keep_ids() {
    let params = TrackerParams {
        gate_m: 2.0,
        max_missed: 3,
    };
    let mut tr = Tracker::new(params);
    let car = |x: f64, y: f64| FusedPoint {
        class: ParticipantClass::Car,
        point: [x, y],
        cameras: vec!["a".into()],
    };
    for k in 0..100 {
        let x = k as f64 * 1.2;
        // lateral separation 4.5 m > 2 * gate, with small opposite wobble
        let wobble = if k % 2 == 0 { 0.3 } else { -0.3 };
        tr.step(k as f64 * 0.1, &[car(x, wobble), car(x, 4.5 - wobble)]);
    }
    let tracks = tr.into_tracks();
    assert_eq!(tracks.len(), 2);
    for t in &tracks {
        assert_eq!(t.history.len(), 100);
        let side = t.history[0].position[1] > 2.0;
        assert!(
            t.history.iter().all(|p| (p.position[1] > 2.0) == side),
            "track {} swapped",
            t.id
        );
    }
}

#[test]
fn end_to_end_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let anchor = GeoAnchor {
        origin_lat: 49.0,
        origin_lon: 8.4,
        origin_alt: 0.0,
    };
    let (x0, y0) = wgs84_to_mercator(anchor.origin_lat, anchor.origin_lon).unwrap();
    let k = 1.0 / anchor.scale();
    // both cameras see the ground as a scaled copy of pixel space, offset differently
    let cam = |id: &str, du: f64| {
        let pairs: Vec<CalibrationPair> = (0..30)
            .map(|i| {
                let (u, v) = ((i % 6) as f64 * 40.0, (i / 6) as f64 * 40.0);
                CalibrationPair {
                    u,
                    v,
                    x: x0 + (u - du) * 0.1 * k,
                    y: y0 + v * 0.1 * k,
                }
            })
            .collect();
        CalibrationSet {
            camera_id: id.into(),
            pairs,
        }
    };
    let calibs = vec![cam("north", 0.0), cam("south", 10.0)];
    let calib_path = dir.path().join("calib.json");
    std::fs::write(&calib_path, serde_json::to_string(&calibs).unwrap()).unwrap();
    let mut lines = String::new();
    for f in 0..10 {
        let t = f as f64 * 0.1;
        let u = 20.0 + f as f64 * 10.0;
        for (cam, du) in [("north", 0.0), ("south", 10.0)] {
            let d = Detection {
                camera_id: cam.into(),
                t,
                u: u + du,
                v: 50.0,
                class: ParticipantClass::Car,
            };
            lines.push_str(&serde_json::to_string(&d).unwrap());
            lines.push('\n');
        }
    }
    let det_path = dir.path().join("det.jsonl");
    std::fs::write(&det_path, lines).unwrap();

    let calibs = load_calibrations(&calib_path).unwrap();
    let dets = load_detections(&det_path).unwrap();
    let tracks = ingest(&calibs, &dets, &anchor, &IngestParams::default()).unwrap();
    assert_eq!(tracks.len(), 1);
    let t = &tracks[0];
    assert_eq!(t.history.len(), 10);
    for p in &t.history {
        assert!((p.speed - 10.0).abs() < 1e-6, "{}", p.speed);
        assert!(p.yaw.abs() < 1e-6);
        assert_eq!(p.cameras, 2);
    }
    assert!((t.history[0].position[0] - 2.0).abs() < 1e-6);
    assert!((t.history[0].position[1] - 5.0).abs() < 1e-6);

    let mut csv = Vec::new();
    export_object_list(&tracks, &anchor, &mut csv).unwrap();
    let mut r = csv::Reader::from_reader(csv.as_slice());
    let first = r.records().next().unwrap().unwrap();
    let lat: f64 = first[3].parse().unwrap();
    let lon: f64 = first[4].parse().unwrap();
    let back = anchor
        .geo_to_enu(taf_twin::model::GeoPoint { lat, lon, alt: 0.0 })
        .unwrap();
    assert!((back[0] - 2.0).abs() < 1e-3 && (back[1] - 5.0).abs() < 1e-3);
}
