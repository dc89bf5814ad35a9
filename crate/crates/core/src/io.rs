//! Artifact formats: JSON and CSV with 17 significant digits, written
//! atomically.

use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::duality::Transmission;
use crate::dynamics::NodeTrajectory;
use crate::torus::{toroidal_delta, NodeSet};

/// `x` with 17 significant digits, enough to round-trip any double.
pub fn fmt17(x: f64) -> String { format!("{x:.16e}") }

/// JSON formatter writing every float through [`fmt17`]; non-finite values
/// become `null`.
#[derive(Copy, Clone, Debug, Default)]
pub struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt17(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with [`Sig17`] floats and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// On-disk form of a [`NodeSet`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSetRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub theta: [f64; 2],
    pub nodes: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub centroid: [f64; 2],
}

impl From<&NodeSet> for NodeSetRecord {
    fn from(s: &NodeSet) -> Self {
        Self {
            n: s.geometry.n(),
            theta: [s.geometry.theta1(), s.geometry.theta2()],
            nodes: s.nodes.iter().map(|p| [p.x, p.p]).collect(),
            residuals: s.residuals.clone(),
            centroid: [s.centroid.x, s.centroid.p],
        }
    }
}

/// CSV with header `t,node_index,x,p,vx,vp`. Velocities are central
/// differences of the tracked positions (one-sided at the ends) and are left
/// empty when `with_velocity` is false or the trajectory has one frame.
pub fn trajectory_csv(traj: &NodeTrajectory, with_velocity: bool) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "node_index", "x", "p", "vx", "vp"])?;
    let frames = traj.frames.len();
    for (f, frame) in traj.frames.iter().enumerate() {
        let g = frame.geometry;
        for (i, node) in frame.nodes.iter().enumerate() {
            let (mut vx, mut vp) = (String::new(), String::new());
            if with_velocity && frames > 1 {
                let (a, b) = (f.saturating_sub(1), (f + 1).min(frames - 1));
                let (dx, dp) = toroidal_delta(&g, traj.frames[a].nodes[i], traj.frames[b].nodes[i]);
                let dt = traj.times[b] - traj.times[a];
                vx = fmt17(dx / dt);
                vp = fmt17(dp / dt);
            }
            w.write_record([fmt17(traj.times[f]), i.to_string(), fmt17(node.x), fmt17(node.p), vx, vp])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ASCII"))
}

/// CSV with header `E,X,h,T,reflection_R,unitarity_defect`.
pub fn transmission_csv(rows: &[Transmission]) -> csv::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["E", "X", "h", "T", "reflection_R", "unitarity_defect"])?;
    for r in rows {
        w.write_record(
            [r.energy, r.half_window, r.step, r.transmission, r.reflection, r.unitarity_defect].map(fmt17),
        )?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("ASCII"))
}

/// Write through a temporary file in the target directory and rename it into
/// place, so `path` never holds a partial artifact.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
