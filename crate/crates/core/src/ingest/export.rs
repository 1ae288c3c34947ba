//! Object-list CSV in the layout of the reference dataset.
//!
//! Core columns: `id,timestamp,class,lat,lon,x,y,z,yaw,yaw_rate,speed,v_rel,
//! length,width,height`. Extension columns follow: `source`, `n_cameras` and
//! `missed`. `x`/`y`/`z` are local ENU meters, `lat`/`lon` WGS-84 degrees,
//! `v_rel` the speed relative to the static infrastructure sensor.

use std::io::Write;

use super::tracking::Track;
use crate::model::{GeoAnchor, Source};

pub const CORE_COLUMNS: [&str; 15] = [
    "id",
    "timestamp",
    "class",
    "lat",
    "lon",
    "x",
    "y",
    "z",
    "yaw",
    "yaw_rate",
    "speed",
    "v_rel",
    "length",
    "width",
    "height",
];
pub const EXTENSION_COLUMNS: [&str; 3] = ["source", "n_cameras", "missed"];

/// Writes one row per track point, ordered by timestamp then id.
pub fn export_object_list<W: Write>(
    tracks: &[Track],
    anchor: &GeoAnchor,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CORE_COLUMNS.iter().chain(EXTENSION_COLUMNS.iter()))?;
    let mut rows: Vec<(&Track, usize)> = tracks
        .iter()
        .flat_map(|t| (0..t.history.len()).map(move |i| (t, i)))
        .collect();
    rows.sort_by(|a, b| {
        a.0.history[a.1]
            .t
            .total_cmp(&b.0.history[b.1].t)
            .then(a.0.id.cmp(&b.0.id))
    });
    for (track, i) in rows {
        let p = &track.history[i];
        let geo = anchor.enu_to_geo([p.position[0], p.position[1], 0.0]);
        let dims = track.class.default_dimensions();
        let missed = if i + 1 == track.history.len() {
            track.missed
        } else {
            0
        };
        w.write_record([
            track.id.to_string(),
            p.t.to_string(),
            track.class.as_str().to_string(),
            format!("{:.9}", geo.lat),
            format!("{:.9}", geo.lon),
            p.position[0].to_string(),
            p.position[1].to_string(),
            "0".to_string(),
            p.yaw.to_string(),
            p.yaw_rate.to_string(),
            p.speed.to_string(),
            p.speed.to_string(),
            dims.length.to_string(),
            dims.width.to_string(),
            dims.height.to_string(),
            Source::Perception.as_str().to_string(),
            p.cameras.to_string(),
            missed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::fusion::FusedPoint;
    use crate::ingest::tracking::{Tracker, TrackerParams};
    use crate::model::ParticipantClass;

    fn csv_of(tracks: &[Track]) -> String {
        let mut buf = Vec::new();
        export_object_list(
            tracks,
            &GeoAnchor {
                origin_lat: 49.0,
                origin_lon: 8.4,
                origin_alt: 0.0,
            },
            &mut buf,
        )
        .unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn east_track(frames: usize) -> Vec<Track> {
        let mut tr = Tracker::new(TrackerParams::default());
        for k in 0..frames {
            let p = FusedPoint {
                class: ParticipantClass::Car,
                point: [k as f64, 2.0],
                cameras: vec!["a".into()],
            };
            tr.step(k as f64 * 0.1, &[p]);
        }
        tr.into_tracks()
    }

    #[test]
    fn empty_is_header_only() {
        let text = csv_of(&[]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with(
            "id,timestamp,class,lat,lon,x,y,z,yaw,yaw_rate,speed,v_rel,length,width,height,"
        ));
    }

    #[test]
    fn one_track_two_rows() {
        let text = csv_of(&east_track(2));
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.starts_with("1,")));
    }

    #[test]
    fn eastbound_yaw_and_speed() {
        let text = csv_of(&east_track(4));
        let mut r = csv::Reader::from_reader(text.as_bytes());
        for rec in r.records() {
            let rec = rec.unwrap();
            assert_eq!(rec[8].parse::<f64>().unwrap(), 0.0);
            assert!((rec[10].parse::<f64>().unwrap() - 10.0).abs() < 1e-9);
            assert_eq!(&rec[2], "car");
            assert_eq!(rec.len(), 18);
        }
    }
}
