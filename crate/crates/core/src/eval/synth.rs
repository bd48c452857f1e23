//! Ray-cast pinhole renderer for box-cluttered corridors.
//!
//! World frame: `X` right, `Y` up, `Z` along the corridor. The camera sits at
//! `(0, camera_height, 0)` pitched down by `pitch` radians. The corridor is a
//! closed box: floor `Y = 0`, ceiling `Y = wall_height`, side walls at
//! `X = ±half_width`, end wall at `Z = length`. Boxes stand on the floor.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::raster::{DepthMap, FreeSpaceMask, RgbImage};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    /// Footprint center on the floor.
    pub x: f64,
    pub z: f64,
    pub width: f64,
    pub length: f64,
    pub height: f64,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Focal length in pixels.
    pub focal: f64,
    pub camera_height: f64,
    pub pitch: f64,
    pub half_width: f64,
    pub length: f64,
    pub wall_height: f64,
    /// Side walls run from the camera to this distance; the floor continues
    /// past them up to the end wall.
    pub wall_length: f64,
    pub boxes: Vec<BoxSpec>,
    pub floor_color: [u8; 3],
    pub left_wall_color: [u8; 3],
    pub right_wall_color: [u8; 3],
    pub ceiling_color: [u8; 3],
    pub end_color: [u8; 3],
    /// Uniform per-pixel noise amplitudes, RGB units. Walls, ceiling and
    /// end wall share `wall_noise`.
    pub floor_noise: f64,
    pub wall_noise: f64,
    pub box_noise: f64,
    /// Amplitude of the floor tile pattern, RGB units.
    pub floor_tiles: f64,
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 160,
            height: 120,
            focal: 110.0,
            camera_height: 1.9,
            pitch: 0.85,
            half_width: 0.6,
            length: 60.0,
            wall_height: 2.6,
            wall_length: 1.2,
            boxes: Vec::new(),
            floor_color: [96, 92, 110],
            left_wall_color: [214, 206, 184],
            right_wall_color: [176, 196, 214],
            ceiling_color: [236, 236, 240],
            end_color: [150, 170, 196],
            floor_noise: 2.0,
            wall_noise: 4.0,
            box_noise: 28.0,
            floor_tiles: 12.0,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    Floor,
    LeftWall,
    RightWall,
    Ceiling,
    EndWall,
    Box(usize),
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub rgb: RgbImage,
    pub depth: DepthMap,
    pub truth: FreeSpaceMask,
    pub surfaces: Vec<Surface>,
    pub spec: SceneSpec,
}

const BOX_PALETTE: [[u8; 3]; 6] = [
    [178, 120, 64],
    [196, 52, 44],
    [52, 128, 70],
    [40, 84, 168],
    [210, 170, 40],
    [120, 60, 140],
];

impl SceneSpec {
    /// A default corridor holding between `min_boxes` and `max_boxes` boxes
    /// placed at random between the side walls.
    pub fn random_corridor(rng_seed: u64, min_boxes: usize, max_boxes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5eed_c0de);
        let mut spec = SceneSpec {
            rng_seed,
            camera_height: rng.random_range(1.8..2.0),
            pitch: rng.random_range(0.82..0.88),
            half_width: rng.random_range(0.55..0.65),
            wall_length: rng.random_range(1.1..1.3),
            ..Default::default()
        };
        let n = rng.random_range(min_boxes..=max_boxes.max(min_boxes));
        let mut palette = BOX_PALETTE.to_vec();
        for _ in 0..n {
            let width = rng.random_range(0.45..0.75);
            let color = palette.remove(rng.random_range(0..palette.len()));
            spec.boxes.push(BoxSpec {
                x: rng.random_range(-1.0..=1.0) * (spec.half_width - width / 2.0),
                z: rng.random_range(0.7..1.6),
                width,
                length: rng.random_range(0.45..0.75),
                height: rng.random_range(0.4..1.0),
                color,
            });
        }
        spec
    }

    /// `count` independent scenes with 1 to 3 boxes, named `scene_000`, ...
    pub fn corridor_batch(count: usize, base_seed: u64) -> Vec<(String, SceneSpec)> {
        (0..count)
            .map(|i| {
                let seed = base_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i as u64);
                (format!("scene_{i:03}"), Self::random_corridor(seed, 1, 3))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.width < 8 || self.height < 8 {
            return bad(format!("image must be at least 8x8, got {}x{}", self.width, self.height));
        }
        for (name, v) in [
            ("focal", self.focal),
            ("camera_height", self.camera_height),
            ("half_width", self.half_width),
            ("length", self.length),
            ("wall_height", self.wall_height),
            ("wall_length", self.wall_length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.camera_height >= self.wall_height {
            return bad("camera must sit below the ceiling".into());
        }
        let half_fov = (self.height as f64 / 2.0 / self.focal).atan();
        if !(self.pitch >= 0.0) || self.pitch + half_fov >= std::f64::consts::FRAC_PI_2 {
            return bad(format!("pitch {} leaves the forward hemisphere", self.pitch));
        }
        if ![self.floor_noise, self.wall_noise, self.box_noise, self.floor_tiles].iter().all(|&a| a >= 0.0) {
            return bad("texture amplitudes must be non-negative".into());
        }
        for (i, b) in self.boxes.iter().enumerate() {
            if !(b.width > 0.0 && b.length > 0.0 && b.height > 0.0) {
                return bad(format!("box {i} has a non-positive size"));
            }
            if b.z - b.length / 2.0 <= 0.0 {
                return bad(format!("box {i} reaches behind the camera"));
            }
        }
        let cam = Camera::new(self);
        let bottom = cam.ray(self.width as f64 / 2.0, self.height as f64 - 0.5);
        match cam.floor_hit(bottom) {
            Some(t) if t * bottom[2] < self.length => Ok(()),
            _ => bad("floor is not visible".into()),
        }
    }
}

struct Camera {
    origin: [f64; 3],
    cx: f64,
    cy: f64,
    focal: f64,
    cos_p: f64,
    sin_p: f64,
}

impl Camera {
    fn new(s: &SceneSpec) -> Self {
        Self {
            origin: [0.0, s.camera_height, 0.0],
            cx: s.width as f64 / 2.0,
            cy: s.height as f64 / 2.0,
            focal: s.focal,
            cos_p: s.pitch.cos(),
            sin_p: s.pitch.sin(),
        }
    }

    /// World direction through image point `(u, v)`, scaled so a ray
    /// parameter `t` equals camera-frame depth.
    fn ray(&self, u: f64, v: f64) -> [f64; 3] {
        let dx = (u - self.cx) / self.focal;
        let dy = (v - self.cy) / self.focal;
        [dx, -dy * self.cos_p - self.sin_p, self.cos_p - dy * self.sin_p]
    }

    fn floor_hit(&self, d: [f64; 3]) -> Option<f64> {
        (d[1] < 0.0).then(|| -self.origin[1] / d[1])
    }
}

/// Entry parameter of the ray into an axis-aligned box and the axis of the
/// entered face, if it hits.
fn slab(o: [f64; 3], d: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> Option<(f64, usize)> {
    let (mut t0, mut t1, mut axis) = (0.0f64, f64::INFINITY, 2);
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a] < lo[a] || o[a] > hi[a] {
                return None;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo[a] - o[a]) / d[a], (hi[a] - o[a]) / d[a]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        if ta > t0 {
            t0 = ta;
            axis = a;
        }
        t1 = t1.min(tb);
    }
    (t0 <= t1 && t0 > 0.0).then_some((t0, axis))
}

/// Brightness offset of a box face lit from above, by face axis.
const FACE_SHADE: [f64; 3] = [-40.0, 40.0, 0.0];

/// Nearest hit: depth, surface and face shading.
fn cast(s: &SceneSpec, cam: &Camera, d: [f64; 3]) -> (f64, Surface, f64) {
    let o = cam.origin;
    let mut best = (f64::INFINITY, Surface::EndWall, 0.0);
    let mut offer = |t: f64, surf: Surface, shade: f64| {
        if t > 0.0 && t < best.0 {
            best = (t, surf, shade);
        }
    };
    if let Some(t) = cam.floor_hit(d) {
        offer(t, Surface::Floor, 0.0);
    }
    if d[1] > 0.0 {
        offer((s.wall_height - o[1]) / d[1], Surface::Ceiling, 0.0);
    }
    let side = if d[0] < 0.0 {
        Some(((-s.half_width - o[0]) / d[0], Surface::LeftWall))
    } else if d[0] > 0.0 {
        Some(((s.half_width - o[0]) / d[0], Surface::RightWall))
    } else {
        None
    };
    if let Some((t, surf)) = side {
        let (y, z) = (o[1] + t * d[1], o[2] + t * d[2]);
        if z <= s.wall_length && y <= s.wall_height {
            offer(t, surf, 0.0);
        }
    }
    if d[2] > 0.0 {
        offer((s.length - o[2]) / d[2], Surface::EndWall, 0.0);
    }
    for (i, b) in s.boxes.iter().enumerate() {
        let lo = [b.x - b.width / 2.0, 0.0, b.z - b.length / 2.0];
        let hi = [b.x + b.width / 2.0, b.height, b.z + b.length / 2.0];
        if let Some((t, axis)) = slab(o, d, lo, hi) {
            offer(t, Surface::Box(i), FACE_SHADE[axis]);
        }
    }
    best
}

/// Analytic floor depth at pixel `(x, y)`, ignoring occluders.
pub fn floor_depth(s: &SceneSpec, x: usize, y: usize) -> Option<f64> {
    let cam = Camera::new(s);
    cam.floor_hit(cam.ray(x as f64 + 0.5, y as f64 + 0.5))
}

/// Renders the scene. `rng_seed` drives the texture noise only.
pub fn generate_scene(spec: &SceneSpec, rng_seed: u64) -> Result<SyntheticScene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let cam = Camera::new(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rgb = Vec::with_capacity(w * h * 3);
    let mut depth = Vec::with_capacity(w * h);
    let mut surfaces = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let d = cam.ray(x as f64 + 0.5, y as f64 + 0.5);
            let (t, surf, face) = cast(spec, &cam, d);
            let (base, noise) = match surf {
                Surface::Floor => (spec.floor_color, spec.floor_noise),
                Surface::LeftWall => (spec.left_wall_color, spec.wall_noise),
                Surface::RightWall => (spec.right_wall_color, spec.wall_noise),
                Surface::Ceiling => (spec.ceiling_color, spec.wall_noise),
                Surface::EndWall => (spec.end_color, spec.wall_noise),
                Surface::Box(i) => (spec.boxes[i].color, spec.box_noise),
            };
            let mut shade = face + rng.random_range(-1.0..=1.0) * noise;
            if surf == Surface::Floor {
                let (px, pz) = (cam.origin[0] + t * d[0], cam.origin[2] + t * d[2]);
                let tile = ((px / 0.6).floor() + (pz / 0.6).floor()) as i64;
                shade += if tile.rem_euclid(2) == 0 { spec.floor_tiles } else { -spec.floor_tiles };
            }
            for c in base {
                rgb.push((c as f64 + shade).round().clamp(0.0, 255.0) as u8);
            }
            depth.push(t as f32);
            surfaces.push(surf);
        }
    }
    Ok(SyntheticScene {
        rgb: RgbImage::new(w, h, rgb)?,
        depth: DepthMap::new(w, h, depth)?,
        truth: FreeSpaceMask::new(w, h, surfaces.iter().map(|&s| s == Surface::Floor).collect())?,
        surfaces,
        spec: SceneSpec { rng_seed, ..spec.clone() },
    })
}

/// Writes `rgb.png`, `depth.png` (16-bit millimeters), `truth.png` and
/// `scene.json` into `dir`.
pub fn write_scene(scene: &SyntheticScene, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::io::save_image(&scene.rgb, dir.join("rgb.png"))?;
    crate::io::save_depth_png(&scene.depth, dir.join("depth.png"))?;
    crate::io::save_mask(&scene.truth, dir.join("truth.png"))?;
    let spec = dir.join("scene.json");
    let json = serde_json::to_string_pretty(&scene.spec).expect("spec serializes");
    std::fs::write(&spec, json + "\n").map_err(|e| Error::io(&spec, e))
}
