//! Piecewise-linear annealing trajectories `s(t)` on `[0, tau]`, time in microseconds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Forward,
    Reverse,
    ReversePause,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Forward => "forward",
            ProtocolKind::Reverse => "reverse",
            ProtocolKind::ReversePause => "reverse_pause",
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(ProtocolKind::Forward),
            "reverse" => Ok(ProtocolKind::Reverse),
            "reverse_pause" => Ok(ProtocolKind::ReversePause),
            other => Err(Error::Parameter(format!("unknown protocol '{other}'"))),
        }
    }
}

pub const DEFAULT_S_TURN: f64 = 0.5;
pub const DEFAULT_PAUSE_FRACTION: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub kind: ProtocolKind,
    /// Lowest annealing parameter reached by the reverse protocols.
    pub s_turn: f64,
    /// Share of `tau` spent paused at `s_turn`, centred on `tau / 2`.
    pub pause_fraction: f64,
}

impl Protocol {
    pub fn new(kind: ProtocolKind) -> Self {
        Protocol {
            kind,
            s_turn: DEFAULT_S_TURN,
            pause_fraction: DEFAULT_PAUSE_FRACTION,
        }
    }

    /// `s_turn = 1` is accepted and yields the constant schedule `s = 1`.
    pub fn check(&self) -> Result<()> {
        if !(self.s_turn > 0.0 && self.s_turn <= 1.0) {
            return Err(Error::Parameter(format!(
                "s_turn must lie in (0, 1], got {}",
                self.s_turn
            )));
        }
        if !(self.pause_fraction > 0.0 && self.pause_fraction < 1.0) {
            return Err(Error::Parameter(format!(
                "pause_fraction must lie in (0, 1), got {}",
                self.pause_fraction
            )));
        }
        Ok(())
    }
}

/// Breakpoints `(t, s)`; `t` strictly increasing from 0 to `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Schedule {
    points: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for Schedule {
    type Error = Error;
    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        Schedule::from_points(points)
    }
}

impl From<Schedule> for Vec<(f64, f64)> {
    fn from(s: Schedule) -> Self {
        s.points
    }
}

impl Schedule {
    /// Accepts any breakpoint list that passes [`validate`].
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        let problems = validate_points(&points);
        if !problems.is_empty() {
            return Err(Error::Parameter(problems.join("; ")));
        }
        Ok(Schedule { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn tau(&self) -> f64 {
        self.points.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// Largest `|ds/dt|` over all segments.
    pub fn max_slope(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_s(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        eval(self, t)
    }

    /// Evaluation with `t` clamped into `[0, tau]`.
    pub(crate) fn at(&self, t: f64) -> f64 {
        eval(self, t.clamp(0.0, self.tau())).expect("clamped time is in range")
    }
}

/// Builds the breakpoint list for `protocol` with total time `tau`.
///
/// * forward: `(0,0) -> (tau,1)`
/// * reverse: `(0,1) -> (tau/2, s_turn) -> (tau,1)`
/// * reverse_pause: ramps to `s_turn`, holds for `pause_fraction * tau`
///   centred on `tau/2`, ramps back to 1.
pub fn build(protocol: &Protocol, tau: f64) -> Result<Schedule> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    protocol.check()?;
    let st = protocol.s_turn;
    let points = match protocol.kind {
        ProtocolKind::Forward => vec![(0.0, 0.0), (tau, 1.0)],
        ProtocolKind::Reverse => vec![(0.0, 1.0), (tau / 2.0, st), (tau, 1.0)],
        ProtocolKind::ReversePause => {
            let ramp = (1.0 - protocol.pause_fraction) / 2.0;
            let (t1, t2) = if protocol.pause_fraction == DEFAULT_PAUSE_FRACTION {
                // keep the plateau edges bit-identical to tau/3 and 2tau/3
                (tau / 3.0, 2.0 * tau / 3.0)
            } else {
                (tau * ramp, tau - tau * ramp)
            };
            vec![(0.0, 1.0), (t1, st), (t2, st), (tau, 1.0)]
        }
    };
    Schedule::from_points(points)
}

/// Linear interpolation between enclosing breakpoints, exact at breakpoints.
pub fn eval(schedule: &Schedule, t: f64) -> Result<f64> {
    let pts = &schedule.points;
    let tau = schedule.tau();
    if !(0.0..=tau).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {tau}]")));
    }
    let k = pts.partition_point(|p| p.0 < t);
    if k < pts.len() && pts[k].0 == t {
        return Ok(pts[k].1);
    }
    let (t0, s0) = pts[k - 1];
    let (t1, s1) = pts[k];
    if s0 == s1 {
        return Ok(s0);
    }
    Ok(s0 + (s1 - s0) * (t - t0) / (t1 - t0))
}

/// Human-readable list of invariant violations; empty when well formed.
pub fn validate(schedule: &Schedule) -> Vec<String> {
    validate_points(&schedule.points)
}

pub fn validate_points(points: &[(f64, f64)]) -> Vec<String> {
    let mut out = Vec::new();
    if points.len() < 2 {
        out.push(format!(
            "need at least two breakpoints, got {}",
            points.len()
        ));
        return out;
    }
    if points[0].0 != 0.0 {
        out.push(format!(
            "first breakpoint must be at t = 0, got {}",
            points[0].0
        ));
    }
    for (k, w) in points.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            out.push(format!(
                "breakpoint {} at t = {} does not follow t = {}",
                k + 1,
                w[1].0,
                w[0].0
            ));
        }
    }
    for (k, &(t, s)) in points.iter().enumerate() {
        if !t.is_finite() {
            out.push(format!("breakpoint {k} has non-finite time"));
        }
        if !(0.0..=1.0).contains(&s) {
            out.push(format!("breakpoint {k} has s = {s} outside [0, 1]"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(kind: ProtocolKind, tau: f64) -> Schedule {
        build(&Protocol::new(kind), tau).unwrap()
    }

    #[test]
    fn reverse_examples() {
        let s = sched(ProtocolKind::Reverse, 100.0);
        assert_eq!(s.eval(50.0).unwrap(), 0.5);
        assert_eq!(s.eval(0.0).unwrap(), 1.0);
        assert_eq!(s.eval(100.0).unwrap(), 1.0);
        assert_eq!(s.eval(25.0).unwrap(), 0.75);
    }

    #[test]
    fn pause_plateau() {
        let s = sched(ProtocolKind::ReversePause, 300.0);
        for k in 0..=100 {
            assert_eq!(s.eval(100.0 + k as f64).unwrap(), 0.5);
        }
        assert_eq!(s.eval(150.0).unwrap(), 0.5);
    }

    #[test]
    fn forward_ramp() {
        let s = sched(ProtocolKind::Forward, 2.0);
        assert_eq!(s.eval(0.0).unwrap(), 0.0);
        assert_eq!(s.eval(1.0).unwrap(), 0.5);
        assert_eq!(s.eval(2.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_out_of_domain() {
        let s = sched(ProtocolKind::Reverse, 10.0);
        assert!(matches!(s.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(s.eval(10.5), Err(Error::Domain(_))));
    }

    #[test]
    fn build_rejects_bad_tau_and_protocol() {
        assert!(build(&Protocol::new(ProtocolKind::Reverse), 0.0).is_err());
        assert!(build(&Protocol::new(ProtocolKind::Reverse), -3.0).is_err());
        let p = Protocol {
            s_turn: 0.0,
            ..Protocol::new(ProtocolKind::Reverse)
        };
        assert!(build(&p, 1.0).is_err());
    }

    #[test]
    fn custom_pause_fraction_is_centred() {
        let p = Protocol {
            pause_fraction: 0.5,
            ..Protocol::new(ProtocolKind::ReversePause)
        };
        let s = build(&p, 8.0).unwrap();
        assert_eq!(
            s.points(),
            &[(0.0, 1.0), (2.0, 0.5), (6.0, 0.5), (8.0, 1.0)]
        );
    }

    #[test]
    fn validation_reports() {
        assert!(validate(&sched(ProtocolKind::Reverse, 20.0)).is_empty());
        assert_eq!(
            validate_points(&[(0.0, 1.0), (1.0, 1.2), (2.0, 1.0)]).len(),
            1
        );
        assert_eq!(
            validate_points(&[(0.0, 1.0), (2.0, 0.5), (1.0, 1.0)]).len(),
            1
        );
    }

    #[test]
    fn json_is_list_of_pairs() {
        let s = sched(ProtocolKind::Reverse, 4.0);
        assert_eq!(
            serde_json::to_string(&s).unwrap(),
            "[[0.0,1.0],[2.0,0.5],[4.0,1.0]]"
        );
        assert!(serde_json::from_str::<Schedule>("[[0,1],[1,1.5]]").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn kind() -> impl Strategy<Value = ProtocolKind> {
            prop_oneof![
                Just(ProtocolKind::Forward),
                Just(ProtocolKind::Reverse),
                Just(ProtocolKind::ReversePause)
            ]
        }

        proptest! {
            #[test]
            fn built_schedules_validate(k in kind(), tau in 2.0f64..2000.0) {
                prop_assert!(validate(&sched(k, tau)).is_empty());
            }

            #[test]
            fn reverse_protocols_span_one_to_turn(
                pause in any::<bool>(),
                tau in 2.0f64..2000.0,
                st in 0.05f64..0.95,
            ) {
                let kind = if pause { ProtocolKind::ReversePause } else { ProtocolKind::Reverse };
                let s = build(&Protocol { s_turn: st, ..Protocol::new(kind) }, tau).unwrap();
                prop_assert_eq!(s.eval(0.0).unwrap(), 1.0);
                prop_assert_eq!(s.eval(tau).unwrap(), 1.0);
                prop_assert_eq!(s.min_s(), st);
            }

            #[test]
            fn eval_is_lipschitz(
                k in kind(),
                tau in 2.0f64..2000.0,
                u in 0.0f64..1.0,
                eps in 1e-9f64..1e-2,
            ) {
                let s = sched(k, tau);
                let t = u * (tau - eps);
                let d = (s.eval(t + eps).unwrap() - s.eval(t).unwrap()).abs();
                prop_assert!(d <= s.max_slope() * eps * (1.0 + 1e-9) + 1e-15);
            }
        }
    }
}
