use herdsim_core::integrate::SimulationResult;
use herdsim_core::{Trajectory, Vec2};
use std::fmt::Write;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;
const MAX_POINTS: usize = 4000;
const FOLLOWER_COLORS: [&str; 6] = ["#b2182b", "#2166ac", "#1b7837", "#762a83", "#e08214", "#35978f"];

/// Draws the target path (dashed), the leader path and every follower path
/// in a square viewport fitted to the data with equal axis scales.
pub fn render_svg(result: &SimulationResult, traj: &Trajectory) -> String {
    let target: Vec<Vec2> = (0..=400).map(|i| traj.eval(i as f64 / 400.0).expect("trajectory validated").0).collect();
    let stride = result.samples.len().div_ceil(MAX_POINTS).max(1);
    let picked: Vec<_> = result
        .samples
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i + 1 == result.samples.len())
        .map(|(_, s)| s)
        .collect();
    let leader: Vec<Vec2> = picked.iter().map(|s| s.leader).collect();
    let followers: Vec<Vec<Vec2>> = (0..result.params.followers)
        .map(|i| picked.iter().map(|s| s.followers[i].position()).collect())
        .collect();

    let all = target.iter().chain(&leader).chain(followers.iter().flatten()).filter(|p| p.x.is_finite() && p.y.is_finite());
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in all {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let span = (hi - lo).max().max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let center = (lo + hi) * 0.5;
    let map = |p: &Vec2| ((p.x - center.x) * scale + SIZE / 2.0, SIZE / 2.0 - (p.y - center.y) * scale);

    let polyline = |pts: &[Vec2], style: &str| {
        let mut s = String::from("<polyline fill=\"none\" ");
        s.push_str(style);
        s.push_str(" points=\"");
        for p in pts.iter().filter(|p| p.x.is_finite() && p.y.is_finite()) {
            let (x, y) = map(p);
            let _ = write!(s, "{x:.2},{y:.2} ");
        }
        s.push_str("\"/>\n");
        s
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    svg.push_str(&polyline(&leader, "stroke=\"#999999\" stroke-width=\"0.5\""));
    svg.push_str(&polyline(&target, "stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\""));
    for (i, path) in followers.iter().enumerate() {
        let color = FOLLOWER_COLORS[i % FOLLOWER_COLORS.len()];
        svg.push_str(&polyline(path, &format!("stroke=\"{color}\" stroke-width=\"1.2\"")));
    }
    svg.push_str("</svg>\n");
    svg
}
