use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};

use crate::evaluation::to_euler;
use crate::geometry::canonical_quaternion;
use crate::rotation_estimation::{RotationTrajectory, TrajectoryEntry};
use crate::{Error, Result};

const EULER_NOTE: &str = "# euler: intrinsic Z-Y-X, R = Rz(yaw) * Ry(pitch) * Rx(roll), radians";
const HEADER: &str = "t,roll,pitch,yaw,qx,qy,qz,qw,nc,fallback";

pub fn trajectory_csv_string(traj: &RotationTrajectory) -> String {
    let mut out = String::new();
    out.push_str(EULER_NOTE);
    out.push('\n');
    out.push_str(HEADER);
    out.push('\n');
    for e in &traj.entries {
        let (roll, pitch, yaw) = to_euler(&e.rotation);
        let q = canonical_quaternion(UnitQuaternion::from_rotation_matrix(&e.rotation));
        writeln!(
            out,
            "{:.9},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{},{}",
            e.t,
            roll,
            pitch,
            yaw,
            q.i,
            q.j,
            q.k,
            q.w,
            e.nc,
            u8::from(e.fallback)
        )
        .unwrap();
    }
    out
}

/// Write `t,roll,pitch,yaw,qx,qy,qz,qw` rows, followed by the per-pair
/// correspondence count and fallback flag.
pub fn write_trajectory_csv(traj: &RotationTrajectory, path: &Path) -> Result<()> {
    if traj.entries.is_empty() {
        return Err(Error::Empty("trajectory".into()));
    }
    std::fs::write(path, trajectory_csv_string(traj)).map_err(|e| Error::io(path, e))
}

/// Read a trajectory CSV. The trailing `nc,fallback` columns are optional.
pub fn read_trajectory_csv(path: &Path) -> Result<RotationTrajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut entries = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_header {
            if !HEADER.starts_with(&fields.join(",")) || fields.len() < 8 {
                return Err(perr(n, format!("unexpected header {line:?}")));
            }
            seen_header = true;
            continue;
        }
        if fields.len() != 8 && fields.len() != 10 {
            return Err(perr(
                n,
                format!("expected 8 or 10 fields, found {}", fields.len()),
            ));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k]
                .parse::<f64>()
                .map_err(|_| perr(n, format!("invalid number {:?}", fields[k])))
        };
        let q = Quaternion::new(num(7)?, num(4)?, num(5)?, num(6)?);
        if q.norm() < 0.5 {
            return Err(perr(n, "degenerate quaternion".into()));
        }
        let rotation: Rotation3<f64> = UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        let (nc, fallback) = if fields.len() == 10 {
            let nc = fields[8]
                .parse()
                .map_err(|_| perr(n, format!("invalid nc {:?}", fields[8])))?;
            (nc, fields[9] == "1" || fields[9] == "true")
        } else {
            (0, false)
        };
        entries.push(TrajectoryEntry {
            t: num(0)?,
            rotation,
            nc,
            fallback,
        });
    }
    if !seen_header {
        return Err(perr(1, "missing header".into()));
    }
    Ok(RotationTrajectory { entries })
}

/// One line series for the Euler-angle overlay plot: `(t, [roll, pitch, yaw])`.
#[derive(Clone, Debug)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, [f64; 3])>,
}

const PALETTE: [&str; 6] = [
    "#222222", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
];

/// Three stacked panels (roll, pitch, yaw) sharing the time axis.
pub fn render_svg_plot(series: &[PlotSeries]) -> String {
    const W: f64 = 900.0;
    const PANEL_H: f64 = 200.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const GAP: f64 = 40.0;
    let height = TOP + 3.0 * (PANEL_H + GAP);

    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, _) in all {
        t_min = t_min.min(*t);
        t_max = t_max.max(*t);
    }
    if !t_min.is_finite() {
        t_min = 0.0;
        t_max = 1.0;
    }
    if t_max - t_min < 1e-9 {
        t_max = t_min + 1.0;
    }
    let plot_w = W - LEFT - RIGHT;
    let sx = |t: f64| LEFT + (t - t_min) / (t_max - t_min) * plot_w;

    let mut out = String::new();
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{height}" viewBox="0 0 {W} {height}">
<rect width="100%" height="100%" fill="white"/>"#
    )
    .unwrap();
    for (k, s) in series.iter().enumerate() {
        writeln!(
            out,
            r#"<text x="{:.1}" y="20" font-family="sans-serif" font-size="12" fill="{}">{}</text>"#,
            LEFT + 150.0 * k as f64,
            PALETTE[k % PALETTE.len()],
            escape(&s.label)
        )
        .unwrap();
    }
    for (axis, name) in ["roll", "pitch", "yaw"].iter().enumerate() {
        let y0 = TOP + axis as f64 * (PANEL_H + GAP);
        let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in series {
            for (_, v) in &s.points {
                v_min = v_min.min(v[axis]);
                v_max = v_max.max(v[axis]);
            }
        }
        if !v_min.is_finite() {
            v_min = -1.0;
            v_max = 1.0;
        }
        if v_max - v_min < 1e-6 {
            v_min -= 0.5;
            v_max += 0.5;
        }
        let sy = |v: f64| y0 + PANEL_H - (v - v_min) / (v_max - v_min) * PANEL_H;
        writeln!(
            out,
            r##"<rect x="{LEFT}" y="{y0}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#999999"/>
<text x="10" y="{:.1}" font-family="sans-serif" font-size="12">{name} [rad]</text>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10">{v_max:.3}</text>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10">{v_min:.3}</text>"##,
            y0 + PANEL_H / 2.0,
            LEFT - 45.0,
            y0 + 10.0,
            LEFT - 45.0,
            y0 + PANEL_H,
        )
        .unwrap();
        for (k, s) in series.iter().enumerate() {
            if s.points.is_empty() {
                continue;
            }
            out.push_str(r#"<polyline fill="none" stroke-width="1.2" stroke=""#);
            out.push_str(PALETTE[k % PALETTE.len()]);
            out.push_str(r#"" points=""#);
            for (i, (t, v)) in s.points.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{:.2},{:.2}", sx(*t), sy(v[axis])).unwrap();
            }
            out.push_str("\"/>\n");
        }
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10">t = {t_min:.3} s</text>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10">t = {t_max:.3} s</text>
</svg>"#,
        LEFT,
        height - 8.0,
        W - RIGHT - 80.0,
        height - 8.0,
    )
    .unwrap();
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn write_svg_plot(series: &[PlotSeries], path: &Path) -> Result<()> {
    std::fs::write(path, render_svg_plot(series)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{exp_so3, geodesic_distance};
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn traj(rots: &[Vector3<f64>]) -> RotationTrajectory {
        RotationTrajectory {
            entries: rots
                .iter()
                .enumerate()
                .map(|(i, w)| TrajectoryEntry {
                    t: i as f64 * 0.04,
                    rotation: exp_so3(w),
                    nc: i * 3,
                    fallback: i % 2 == 1,
                })
                .collect(),
        }
    }

    proptest! {
        #[test]
        fn csv_round_trip(ws in prop::collection::vec(
            (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 1..20)) {
            let rots: Vec<_> = ws.iter().map(|&(a, b, c)| Vector3::new(a, b, c)).collect();
            let t = traj(&rots);
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("t.csv");
            write_trajectory_csv(&t, &p).unwrap();
            let back = read_trajectory_csv(&p).unwrap();
            prop_assert_eq!(back.entries.len(), t.entries.len());
            for (a, b) in t.entries.iter().zip(&back.entries) {
                prop_assert!(geodesic_distance(&a.rotation, &b.rotation) < 1e-9);
                prop_assert!((a.t - b.t).abs() < 1e-9);
                prop_assert_eq!(a.nc, b.nc);
                prop_assert_eq!(a.fallback, b.fallback);
            }
        }
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = RotationTrajectory { entries: vec![] };
        assert!(write_trajectory_csv(&t, &dir.path().join("x.csv")).is_err());
    }

    #[test]
    fn unwritable_path_errors() {
        let t = traj(&[Vector3::zeros()]);
        assert!(write_trajectory_csv(&t, Path::new("/nonexistent/dir/t.csv")).is_err());
    }

    #[test]
    fn accepts_eight_column_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "t,roll,pitch,yaw,qx,qy,qz,qw\n0.5,0,0,0,0,0,0,1\n").unwrap();
        let t = read_trajectory_csv(&p).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.entries[0].t, 0.5);
    }

    #[test]
    fn svg_is_deterministic() {
        let s = vec![
            PlotSeries {
                label: "gt".into(),
                points: vec![(0.0, [0.0, 0.1, 0.2]), (1.0, [0.1, 0.2, 0.3])],
            },
            PlotSeries {
                label: "est <eas>".into(),
                points: vec![(0.0, [0.0, 0.1, 0.2]), (1.0, [0.2, 0.1, 0.4])],
            },
        ];
        let a = render_svg_plot(&s);
        assert_eq!(a, render_svg_plot(&s));
        assert!(a.starts_with("<?xml"));
        assert!(a.contains("version=\"1.1\""));
        assert_eq!(a.matches("<polyline").count(), 6);
        assert!(a.contains("est &lt;eas&gt;"));
    }
}
