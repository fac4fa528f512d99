//! ASCII skeleton files:
//!
//! ```text
//! skeleton v1
//! <joints> <bones>
//! x y z          (one line per joint)
//! i j            (one line per bone)
//! joint_index    (one line per bound surface vertex, to end of file)
//! ```

use std::path::Path;

use crate::geometry::Vec3;
use crate::real::format_exact;
use crate::skeleton::CurveSkeleton;
use crate::{Error, Real, Result};

pub fn format_skeleton<T: Real>(skel: &CurveSkeleton<T>) -> String {
    let mut s = format!("skeleton v1\n{} {}\n", skel.joints.len(), skel.bones.len());
    for p in &skel.joints {
        let [x, y, z] = p.to_f64();
        s.push_str(&format!("{} {} {}\n", format_exact(x), format_exact(y), format_exact(z)));
    }
    for [i, j] in &skel.bones {
        s.push_str(&format!("{i} {j}\n"));
    }
    for j in &skel.bind {
        s.push_str(&format!("{j}\n"));
    }
    s
}

pub fn parse_skeleton<T: Real>(text: &str) -> Result<CurveSkeleton<T>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
    let (ln, header) = lines.next().ok_or_else(|| err(0, "empty skeleton file"))?;
    if header.trim() != "skeleton v1" {
        return Err(err(ln, "expected header 'skeleton v1'"));
    }
    let (ln, counts) = lines.next().ok_or_else(|| err(ln + 1, "missing counts line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(ln, "bad count")))
        .collect::<Result<_>>()?;
    let [nj, nb] = counts[..] else {
        return Err(err(ln, "expected '<joints> <bones>'"));
    };
    let mut joints = Vec::with_capacity(nj);
    let mut last = ln;
    for _ in 0..nj {
        let (ln, l) = lines.next().ok_or_else(|| err(last + 1, "missing joint line"))?;
        last = ln;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln, "bad coordinate")))
            .collect::<Result<_>>()?;
        let [x, y, z] = v[..] else {
            return Err(err(ln, "expected three coordinates"));
        };
        joints.push(Vec3::from_f64([x, y, z]));
    }
    let mut bones = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = lines.next().ok_or_else(|| err(last + 1, "missing bone line"))?;
        last = ln;
        let v: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln, "bad joint index")))
            .collect::<Result<_>>()?;
        let [i, j] = v[..] else {
            return Err(err(ln, "expected two joint indices"));
        };
        bones.push([i, j]);
    }
    let mut bind = Vec::new();
    for (ln, l) in lines {
        bind.push(l.trim().parse().map_err(|_| err(ln, "bad bind index"))?);
    }
    CurveSkeleton::new(joints, bones, bind)
}

pub fn load_skeleton<T: Real>(path: impl AsRef<Path>) -> Result<CurveSkeleton<T>> {
    parse_skeleton(&std::fs::read_to_string(path)?)
}

pub fn write_skeleton<T: Real>(skel: &CurveSkeleton<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_skeleton(skel))?;
    Ok(())
}
