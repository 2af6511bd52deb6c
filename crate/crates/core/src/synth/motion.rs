//! Procedural stick-figure motion.
//!
//! A figure is a kinematic chain driven by sinusoidal angle channels. Angles
//! are in radians measured from straight down; positive values swing the
//! limb toward the facing direction. Lengths are fractions of the figure's
//! height `H`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{GrarError, Result};
use crate::pose::NUM_JOINTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Idle,
    Walk,
    Run,
    Jump,
    Wave,
}

pub const ALL_ACTIONS: [Action; 5] = [Action::Idle, Action::Walk, Action::Run, Action::Jump, Action::Wave];

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Idle => "idle",
            Action::Walk => "walk",
            Action::Run => "run",
            Action::Jump => "jump",
            Action::Wave => "wave",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Action {
    type Err = GrarError;

    fn from_str(s: &str) -> Result<Self> {
        ALL_ACTIONS
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| GrarError::Config(format!("unknown action '{s}' (expected idle, walk, run, jump or wave)")))
    }
}

/// `offset + amplitude * sin(2 pi cycle + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl Wave {
    pub const fn new(offset: f64, amplitude: f64, phase: f64) -> Self {
        Wave {
            offset,
            amplitude,
            phase,
        }
    }

    pub fn at(&self, cycle: f64) -> f64 {
        self.offset + self.amplitude * (TAU * cycle + self.phase).sin()
    }
}

/// Angle channels of the figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    LeftShoulder,
    RightShoulder,
    /// Relative to the upper arm.
    LeftElbow,
    RightElbow,
    LeftHip,
    RightHip,
    /// Relative to the thigh; negative bends the shin backwards.
    LeftKnee,
    RightKnee,
    /// Torso tilt toward the facing direction.
    Lean,
    /// Upward displacement of the pelvis, in units of `H`.
    Bounce,
}

pub const NUM_CHANNELS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpec {
    pub action: Action,
    pub period_frames: u32,
    /// Indexed by [`Channel`].
    pub waves: [Wave; NUM_CHANNELS],
    /// Per-joint positional noise as a fraction of `H`.
    pub noise_sigma: f64,
}

const TORSO: f64 = 0.30;
const SHOULDER_HALF: f64 = 0.10;
const HIP_HALF: f64 = 0.07;
const UPPER_ARM: f64 = 0.15;
const FOREARM: f64 = 0.14;
const THIGH: f64 = 0.23;
const SHIN: f64 = 0.23;
const NECK_TO_NOSE: f64 = 0.10;

impl ActionSpec {
    pub fn preset(action: Action) -> Self {
        let w = Wave::new;
        let waves = match action {
            Action::Idle => [
                w(0.25, 0.25, 0.0),
                w(0.05, 0.08, PI),
                w(0.40, 0.40, 0.0),
                w(0.10, 0.05, 0.0),
                w(0.06, 0.08, 0.0),
                w(-0.06, 0.08, 0.0),
                w(0.0, 0.05, 0.0),
                w(0.0, 0.05, PI),
                w(0.0, 0.08, PI / 2.0),
                w(0.0, 0.0, 0.0),
            ],
            Action::Walk => [
                w(0.0, 0.45, PI),
                w(0.0, 0.45, 0.0),
                w(0.10, 0.10, PI),
                w(0.10, 0.10, 0.0),
                w(0.0, 0.50, 0.0),
                w(0.0, 0.50, PI),
                w(-0.35, 0.35, PI / 2.0),
                w(-0.35, 0.35, -PI / 2.0),
                w(0.0, 0.0, 0.0),
                w(0.0, 0.01, 0.0),
            ],
            Action::Run => [
                w(0.10, 0.80, PI),
                w(0.10, 0.80, 0.0),
                w(1.80, 0.20, PI),
                w(1.80, 0.20, 0.0),
                w(0.30, 0.75, 0.0),
                w(0.30, 0.75, PI),
                w(-1.10, 0.60, PI / 2.0),
                w(-1.10, 0.60, -PI / 2.0),
                w(0.35, 0.03, 0.0),
                w(0.03, 0.03, 0.0),
            ],
            Action::Jump => [
                w(2.40, 0.50, 0.0),
                w(2.40, 0.50, 0.0),
                w(0.20, 0.10, 0.0),
                w(0.20, 0.10, 0.0),
                w(0.50, 0.40, 0.0),
                w(0.50, 0.40, 0.0),
                w(-0.90, 0.60, 0.0),
                w(-0.90, 0.60, 0.0),
                w(0.05, 0.05, 0.0),
                w(0.12, 0.12, 0.0),
            ],
            Action::Wave => [
                w(0.10, 0.10, 0.0),
                w(2.40, 0.35, 0.0),
                w(0.10, 0.05, 0.0),
                w(0.40, 0.90, 0.0),
                w(0.03, 0.02, 0.0),
                w(-0.03, 0.02, 0.0),
                w(0.0, 0.0, 0.0),
                w(0.0, 0.0, 0.0),
                w(0.0, 0.04, 0.0),
                w(0.0, 0.0, 0.0),
            ],
        };
        let period_frames = match action {
            Action::Idle => 48,
            Action::Walk => 24,
            Action::Run => 14,
            Action::Jump => 20,
            Action::Wave => 16,
        };
        ActionSpec {
            action,
            period_frames,
            waves,
            noise_sigma: 0.01,
        }
    }

    pub fn wave(&self, c: Channel) -> Wave {
        self.waves[c as usize]
    }

    pub fn validate(&self) -> Result<()> {
        if self.period_frames < 4 {
            return Err(GrarError::Config(format!(
                "period {} is below 4 frames",
                self.period_frames
            )));
        }
        for (i, w) in self.waves.iter().enumerate() {
            let reach = w.offset.abs() + w.amplitude.abs();
            let limit = if i == Channel::Bounce as usize { 0.5 } else { PI };
            if !reach.is_finite() || reach > limit {
                return Err(GrarError::Config(format!("channel {i} reaches {reach}, limit {limit}")));
            }
        }
        if !(0.0..=0.1).contains(&self.noise_sigma) {
            return Err(GrarError::Config(format!(
                "noise sigma {} outside [0, 0.1]",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Placement and build of one figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub height: f64,
    /// Facing `-x` instead of `+x`.
    pub mirrored: bool,
    /// Pelvis centre when not bouncing.
    pub pelvis: (f64, f64),
    /// Multiplies every channel's amplitude.
    pub amplitude_scale: f64,
}

fn dir(angle: f64) -> (f64, f64) {
    (angle.sin(), angle.cos())
}

fn add(p: (f64, f64), len: f64, d: (f64, f64)) -> (f64, f64) {
    (p.0 + len * d.0, p.1 + len * d.1)
}

/// COCO-ordered joint positions at `cycle` (fraction of the period).
pub fn skeleton(spec: &ActionSpec, body: &Body, cycle: f64) -> [(f64, f64); NUM_JOINTS] {
    let h = body.height;
    let ch = |c: Channel| {
        let w = spec.wave(c);
        Wave {
            amplitude: w.amplitude * body.amplitude_scale,
            ..w
        }
        .at(cycle)
    };
    let pelvis = (body.pelvis.0, body.pelvis.1 - ch(Channel::Bounce) * h);
    let lean = ch(Channel::Lean);
    // torso points up: angle pi from straight down, tilted by lean
    let up = dir(PI - lean);
    let neck = add(pelvis, TORSO * h, up);
    let nose = add(neck, NECK_TO_NOSE * h, up);
    let side = (up.1.abs(), 0.0);

    let mut j = [(0.0, 0.0); NUM_JOINTS];
    j[0] = nose;
    j[1] = (nose.0 + 0.025 * h, nose.1 - 0.02 * h);
    j[2] = (nose.0 - 0.025 * h, nose.1 - 0.02 * h);
    j[3] = (nose.0 + 0.05 * h, nose.1 - 0.005 * h);
    j[4] = (nose.0 - 0.05 * h, nose.1 - 0.005 * h);

    let arm = |shoulder: (f64, f64), sh: f64, el: f64| {
        let elbow = add(shoulder, UPPER_ARM * h, dir(sh));
        (elbow, add(elbow, FOREARM * h, dir(sh + el)))
    };
    let leg = |hip: (f64, f64), hp: f64, kn: f64| {
        let knee = add(hip, THIGH * h, dir(hp));
        (knee, add(knee, SHIN * h, dir(hp + kn)))
    };

    j[5] = add(neck, SHOULDER_HALF * h, side);
    j[6] = add(neck, -SHOULDER_HALF * h, side);
    (j[7], j[9]) = arm(j[5], ch(Channel::LeftShoulder), ch(Channel::LeftElbow));
    (j[8], j[10]) = arm(j[6], ch(Channel::RightShoulder), ch(Channel::RightElbow));
    j[11] = add(pelvis, HIP_HALF * h, side);
    j[12] = add(pelvis, -HIP_HALF * h, side);
    (j[13], j[15]) = leg(j[11], ch(Channel::LeftHip), ch(Channel::LeftKnee));
    (j[14], j[16]) = leg(j[12], ch(Channel::RightHip), ch(Channel::RightKnee));

    if body.mirrored {
        for p in j.iter_mut() {
            p.0 = 2.0 * pelvis.0 - p.0;
        }
    }
    j
}
