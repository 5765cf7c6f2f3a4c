use super::{DynamicsError, Result, Vec2, TWO_PI};
use serde::{Deserialize, Serialize};

/// Target curve `gamma: [0, 1] -> R^2`, evaluable together with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// `radius * (cos 2 pi turns theta, sin 2 pi turns theta)`.
    Circle { radius: f64, turns: f64 },
    /// `(ax cos 2 pi fx theta + drift_x theta, ay sin 2 pi fy theta + drift_y theta)`.
    Lissajous {
        ax: f64,
        fx: f64,
        ay: f64,
        fy: f64,
        #[serde(default)]
        drift: [f64; 2],
    },
    /// Monotone cubic Hermite interpolation through knots.
    Waypoints(Waypoints),
}

impl Trajectory {
    /// The constant curve at the origin.
    pub fn stationary() -> Self {
        Trajectory::Lissajous { ax: 0.0, fx: 0.0, ay: 0.0, fy: 0.0, drift: [0.0, 0.0] }
    }

    /// Returns `(gamma(theta), gamma'(theta))`.
    pub fn eval(&self, theta: f64) -> Result<(Vec2, Vec2)> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(DynamicsError::OutOfDomain { theta });
        }
        Ok(match self {
            Trajectory::Circle { radius, turns } => {
                let w = TWO_PI * turns;
                let (s, c) = (w * theta).sin_cos();
                (Vec2::new(c, s) * *radius, Vec2::new(-s, c) * (radius * w))
            }
            Trajectory::Lissajous { ax, fx, ay, fy, drift } => {
                let (wx, wy) = (TWO_PI * fx, TWO_PI * fy);
                let (sx, cx) = (wx * theta).sin_cos();
                let (sy, cy) = (wy * theta).sin_cos();
                (
                    Vec2::new(ax * cx + drift[0] * theta, ay * sy + drift[1] * theta),
                    Vec2::new(-ax * wx * sx + drift[0], ay * wy * cy + drift[1]),
                )
            }
            Trajectory::Waypoints(w) => w.eval(theta),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match self {
            Trajectory::Circle { radius, turns } if !finite(&[*radius, *turns]) => {
                Err(DynamicsError::InvalidTrajectory("circle parameters must be finite".into()))
            }
            Trajectory::Lissajous { ax, fx, ay, fy, drift }
                if !finite(&[*ax, *fx, *ay, *fy, drift[0], drift[1]]) =>
            {
                Err(DynamicsError::InvalidTrajectory("lissajous parameters must be finite".into()))
            }
            Trajectory::Waypoints(w) => Waypoints::new(w.knots.clone()).map(|_| ()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Knot {
    pub theta: f64,
    pub point: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointsRaw {
    knots: Vec<Knot>,
}

/// Knots with Fritsch-Carlson tangents, one set per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WaypointsRaw")]
pub struct Waypoints {
    knots: Vec<Knot>,
    #[serde(skip)]
    tangents: Vec<[f64; 2]>,
}

impl TryFrom<WaypointsRaw> for Waypoints {
    type Error = DynamicsError;
    fn try_from(raw: WaypointsRaw) -> Result<Self> {
        Waypoints::new(raw.knots)
    }
}

impl Waypoints {
    pub fn new(knots: Vec<Knot>) -> Result<Self> {
        let bad = |msg: String| Err(DynamicsError::InvalidTrajectory(msg));
        if knots.len() < 2 {
            return bad(format!("need at least 2 waypoints, got {}", knots.len()));
        }
        if knots.iter().any(|k| !(k.theta.is_finite() && k.point.iter().all(|v| v.is_finite()))) {
            return bad("waypoints must be finite".into());
        }
        if knots[0].theta != 0.0 || knots[knots.len() - 1].theta != 1.0 {
            return bad("waypoint theta must start at 0 and end at 1".into());
        }
        if knots.windows(2).any(|w| w[1].theta <= w[0].theta) {
            return bad("waypoint theta must be strictly increasing".into());
        }
        let xs: Vec<f64> = knots.iter().map(|k| k.point[0]).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.point[1]).collect();
        let thetas: Vec<f64> = knots.iter().map(|k| k.theta).collect();
        let mx = fritsch_carlson(&thetas, &xs);
        let my = fritsch_carlson(&thetas, &ys);
        let tangents = mx.into_iter().zip(my).map(|(a, b)| [a, b]).collect();
        Ok(Self { knots, tangents })
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    fn eval(&self, theta: f64) -> (Vec2, Vec2) {
        let n = self.knots.len();
        // index of the interval [k, k+1] containing theta
        let k = self.knots.partition_point(|kn| kn.theta <= theta).saturating_sub(1).min(n - 2);
        let (a, b) = (&self.knots[k], &self.knots[k + 1]);
        let h = b.theta - a.theta;
        let s = (theta - a.theta) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let (ma, mb) = (self.tangents[k], self.tangents[k + 1]);
        let mut p = [0.0; 2];
        let mut dp = [0.0; 2];
        for c in 0..2 {
            p[c] = h00 * a.point[c] + h10 * h * ma[c] + h01 * b.point[c] + h11 * h * mb[c];
            dp[c] = d00 * a.point[c] + d10 * ma[c] + d01 * b.point[c] + d11 * mb[c];
        }
        (Vec2::new(p[0], p[1]), Vec2::new(dp[0], dp[1]))
    }
}

/// Monotonicity-preserving tangents (Fritsch & Carlson, 1980).
fn fritsch_carlson(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let secants: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / (t[k + 1] - t[k])).collect();
    let mut m = vec![0.0; n];
    m[0] = secants[0];
    m[n - 1] = secants[n - 2];
    for k in 1..n - 1 {
        let (d0, d1) = (secants[k - 1], secants[k]);
        m[k] = if d0 * d1 > 0.0 { 0.5 * (d0 + d1) } else { 0.0 };
    }
    for k in 0..n - 1 {
        let d = secants[k];
        if d == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / d;
        let b = m[k + 1] / d;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m[k] = tau * a * d;
            m[k + 1] = tau * b * d;
        }
    }
    m
}
