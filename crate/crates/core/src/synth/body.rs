//! Procedural quadruped body made of ellipsoids and capsules, posed per
//! activity. Body coordinates: `x` nose-ward, `y` lateral, `z` up from the
//! floor, in meters for a 1.10 m long, 0.75 m tall dog.

use std::f64::consts::TAU;

use crate::pointcloud::ActivityLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Group {
    Torso,
    Head,
    Legs,
    Tail,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::Torso, Group::Head, Group::Legs, Group::Tail];

    /// Relative reflectivity.
    pub fn reflectivity(self) -> f64 {
        match self {
            Group::Torso => 6.0,
            Group::Head => 4.0,
            Group::Legs => 2.5,
            Group::Tail => 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Prim {
    /// Ellipsoid surface; `pitch` tilts the x axis up (radians).
    Ellipsoid { center: [f64; 3], radii: [f64; 3], pitch: f64 },
    /// Segment with a round cross-section.
    Capsule { a: [f64; 3], b: [f64; 3], radius: f64 },
}

impl Prim {
    /// Deterministic surface point for uniform parameters `u` in `[0, 1)`.
    pub fn sample(&self, u: [f64; 3]) -> [f64; 3] {
        let cz = 2.0 * u[1] - 1.0;
        let s = (1.0 - cz * cz).max(0.0).sqrt();
        let phi = TAU * u[2];
        let dir = [s * phi.cos(), s * phi.sin(), cz];
        match *self {
            Prim::Ellipsoid { center, radii, pitch } => {
                let local = [radii[0] * dir[0], radii[1] * dir[1], radii[2] * dir[2]];
                let (sp, cp) = pitch.sin_cos();
                [
                    center[0] + cp * local[0] - sp * local[2],
                    center[1] + local[1],
                    center[2] + sp * local[0] + cp * local[2],
                ]
            }
            Prim::Capsule { a, b, radius } => {
                let t = u[0];
                [
                    a[0] + t * (b[0] - a[0]) + radius * dir[0],
                    a[1] + t * (b[1] - a[1]) + radius * dir[1],
                    a[2] + t * (b[2] - a[2]) + radius * dir[2],
                ]
            }
        }
    }
}

/// Per-clip random pose parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Motion {
    pub label: ActivityLabel,
    /// +1 nose toward +x, -1 toward -x.
    pub facing: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub length_scale: f64,
    pub height_scale: f64,
    pub breath_hz: f64,
    pub breath_phase: f64,
    /// Chewing head bob for eating, gait frequency for walking.
    pub cycle_hz: f64,
    pub cycle_phase: f64,
    /// Walking speed (m/s), zero otherwise.
    pub speed: f64,
    pub wag_hz: f64,
}

/// Highest body-frame z of any lying return.
pub(crate) const LYING_CEILING: f64 = 0.24;

pub(crate) struct Pose {
    pub parts: Vec<(Group, Prim)>,
}

impl Pose {
    #[cfg(test)]
    pub fn group(&self, g: Group) -> impl Iterator<Item = &Prim> {
        self.parts.iter().filter(move |(pg, _)| *pg == g).map(|(_, p)| p)
    }
}

fn ell(center: [f64; 3], radii: [f64; 3]) -> Prim {
    Prim::Ellipsoid { center, radii, pitch: 0.0 }
}

fn cap(a: [f64; 3], b: [f64; 3], radius: f64) -> Prim {
    Prim::Capsule { a, b, radius }
}

fn standing_legs(swing: [f64; 4], lift: [f64; 4]) -> Vec<(Group, Prim)> {
    let hips = [(0.28, 0.08), (0.28, -0.08), (-0.28, 0.08), (-0.28, -0.08)];
    hips.iter()
        .enumerate()
        .map(|(k, &(hx, hy))| (Group::Legs, cap([hx, hy, 0.45], [hx + swing[k], hy, 0.03 + lift[k]], 0.03)))
        .collect()
}

/// Body-frame pose at time `t`.
pub(crate) fn pose(m: &Motion, t: f64) -> Pose {
    let breath = 1.0 + 0.03 * (TAU * m.breath_hz * t + m.breath_phase).sin();
    let mut parts = Vec::with_capacity(9);
    match m.label {
        ActivityLabel::Standing | ActivityLabel::Walking => {
            let (swing, lift, bob) = if m.label == ActivityLabel::Walking {
                let ph = TAU * m.cycle_hz * t + m.cycle_phase;
                // Diagonal pairs move together.
                let s = [ph.sin(), -ph.sin(), -ph.sin(), ph.sin()];
                let lift = s.map(|v| 0.04 * v.max(0.0));
                (s.map(|v| 0.12 * v), lift, 0.02 * (2.0 * ph).sin())
            } else {
                ([0.0; 4], [0.0; 4], 0.0)
            };
            parts.push((Group::Torso, ell([0.0, 0.0, 0.55 + bob], [0.38, 0.13, 0.14 * breath])));
            parts.push((Group::Head, cap([0.32, 0.0, 0.62 + bob], [0.45, 0.0, 0.76 + bob], 0.05)));
            parts.push((Group::Head, ell([0.52, 0.0, 0.80 + bob], [0.11, 0.07, 0.07])));
            parts.extend(standing_legs(swing, lift));
            parts.push((Group::Tail, cap([-0.38, 0.0, 0.60], [-0.55, 0.0, 0.70], 0.02)));
        }
        ActivityLabel::Eating => {
            let ph = TAU * m.cycle_hz * t + m.cycle_phase;
            let head = [0.50 + 0.03 * ph.cos(), 0.0, 0.10 + 0.05 * ph.sin()];
            parts.push((Group::Torso, ell([0.0, 0.0, 0.55], [0.38, 0.13, 0.14 * breath])));
            parts.push((Group::Head, cap([0.32, 0.0, 0.60], [head[0] - 0.04, 0.0, head[2] + 0.08], 0.05)));
            parts.push((Group::Head, ell(head, [0.11, 0.07, 0.07])));
            parts.extend(standing_legs([0.0; 4], [0.0; 4]));
            parts.push((Group::Tail, cap([-0.38, 0.0, 0.60], [-0.55, 0.0, 0.68], 0.02)));
        }
        ActivityLabel::Sitting => {
            parts.push((
                Group::Torso,
                Prim::Ellipsoid { center: [-0.08, 0.0, 0.40], radii: [0.30, 0.13, 0.14 * breath], pitch: 0.8 },
            ));
            parts.push((Group::Head, cap([0.12, 0.0, 0.62], [0.18, 0.0, 0.78], 0.05)));
            parts.push((Group::Head, ell([0.22, 0.0, 0.84], [0.11, 0.07, 0.07])));
            parts.push((Group::Legs, cap([0.14, 0.08, 0.50], [0.16, 0.08, 0.03], 0.03)));
            parts.push((Group::Legs, cap([0.14, -0.08, 0.50], [0.16, -0.08, 0.03], 0.03)));
            parts.push((Group::Legs, cap([-0.34, 0.11, 0.08], [-0.06, 0.11, 0.10], 0.04)));
            parts.push((Group::Legs, cap([-0.34, -0.11, 0.08], [-0.06, -0.11, 0.10], 0.04)));
            parts.push((Group::Tail, cap([-0.36, 0.0, 0.05], [-0.60, 0.0, 0.03], 0.02)));
        }
        ActivityLabel::Lying => {
            parts.push((Group::Torso, ell([0.0, 0.0, 0.11], [0.40, 0.15, 0.085 * breath])));
            parts.push((Group::Head, cap([0.33, 0.0, 0.12], [0.43, 0.0, 0.14], 0.04)));
            parts.push((Group::Head, ell([0.52, 0.0, 0.12], [0.10, 0.07, 0.06])));
            parts.push((Group::Legs, cap([0.30, 0.08, 0.03], [0.60, 0.08, 0.03], 0.025)));
            parts.push((Group::Legs, cap([0.30, -0.08, 0.03], [0.60, -0.08, 0.03], 0.025)));
            parts.push((Group::Legs, cap([-0.30, 0.15, 0.04], [-0.05, 0.17, 0.04], 0.03)));
            parts.push((Group::Legs, cap([-0.30, -0.15, 0.04], [-0.05, -0.17, 0.04], 0.03)));
            parts.push((Group::Tail, cap([-0.40, 0.0, 0.04], [-0.65, 0.0, 0.02], 0.02)));
        }
    }
    Pose { parts }
}

impl Motion {
    /// Body-frame point to radar-frame position at time `t`.
    pub fn to_world(&self, body: [f64; 3], t: f64, floor_z: f64) -> [f64; 3] {
        let mut z = body[2];
        if self.label == ActivityLabel::Lying {
            z = z.min(LYING_CEILING / self.height_scale);
        }
        [
            self.centroid_x(t) + self.facing * body[0] * self.length_scale,
            self.center_y + body[1] * self.length_scale,
            floor_z + z.max(0.0) * self.height_scale,
        ]
    }

    pub fn centroid_x(&self, t: f64) -> f64 {
        self.center_x + self.facing * self.speed * t
    }

    /// Center of the detached tail-wag cluster at time `t` (radar frame).
    pub fn wag_center(&self, t: f64, floor_z: f64) -> [f64; 3] {
        let ph = TAU * self.wag_hz * t;
        let base_z = match self.label {
            ActivityLabel::Lying => 0.10,
            ActivityLabel::Sitting => 0.15,
            _ => 0.62,
        };
        self.to_world([-0.82, 0.15 * ph.sin(), base_z + 0.05 * ph.cos()], t, floor_z)
    }
}
