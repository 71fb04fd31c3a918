//! Labelled synthetic indoor scenes with known ground truth.

use alloc::vec::Vec;

use nalgebra::Unit;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;

use crate::geom::{PlaneParams, Point3, PointCloud, UnitVector3, Vec3};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SurfaceLabel {
    Wall,
    Ceiling,
    Floor,
    Object,
    Noise,
}

impl SurfaceLabel {
    pub fn is_structural(self) -> bool {
        matches!(self, Self::Wall | Self::Ceiling | Self::Floor)
    }
}

/// Side of a room, named by compass direction with `+y` as north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WallSide {
    South,
    East,
    North,
    West,
}

impl WallSide {
    pub const ALL: [WallSide; 4] = [WallSide::South, WallSide::East, WallSide::North, WallSide::West];

    fn opposite(self) -> Self {
        match self {
            Self::South => Self::North,
            Self::North => Self::South,
            Self::East => Self::West,
            Self::West => Self::East,
        }
    }
}

/// Axis-aligned room. The roof rises along `+y` when `roof_pitch_deg > 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoomSpec {
    pub min: [f64; 2],
    pub max: [f64; 2],
    #[cfg_attr(feature = "serde", serde(default))]
    pub floor_z: f64,
    pub height: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub roof_pitch_deg: f64,
    /// Exact ceiling point count instead of the density-derived one.
    #[cfg_attr(feature = "serde", serde(default))]
    pub ceiling_points: Option<usize>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub floor_points: Option<usize>,
}

impl RoomSpec {
    pub fn new(min: [f64; 2], max: [f64; 2], height: f64) -> Self {
        Self {
            min,
            max,
            floor_z: 0.0,
            height,
            roof_pitch_deg: 0.0,
            ceiling_points: None,
            floor_points: None,
        }
    }

    pub fn floor_area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    fn top_z(&self) -> f64 {
        self.floor_z + self.height + self.roof_pitch_deg.to_radians().tan() * (self.max[1] - self.min[1])
    }
}

/// Restricts one wall of a room to `keep` (absolute coordinates along the
/// wall: `x` for south/north walls, `y` for east/west walls).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WallTrim {
    pub room: usize,
    pub side: WallSide,
    pub keep: [f64; 2],
}

/// Box resting in a room, sampled on its top and four sides.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxObject {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

/// `count` points drawn uniformly from the box `[min, max]`, all with
/// `normal`. A flat box gives a planted planar patch.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointPatch {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub count: usize,
    pub normal: [f64; 3],
    pub label: SurfaceLabel,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SceneSpec {
    pub rooms: Vec<RoomSpec>,
    /// Copies of the room layout stacked vertically.
    pub stories: usize,
    pub slab_thickness: f64,
    /// Points per square metre.
    pub density: f64,
    /// Isotropic Gaussian noise (m).
    pub noise_sigma: f64,
    pub seed: u64,
    pub objects: Vec<BoxObject>,
    pub trims: Vec<WallTrim>,
    pub patches: Vec<PointPatch>,
    /// Uniform clutter points in the scene bounds.
    pub noise_points: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            rooms: Vec::new(),
            stories: 1,
            slab_thickness: 0.3,
            density: 1000.0,
            noise_sigma: 0.0,
            seed: 0,
            objects: Vec::new(),
            trims: Vec::new(),
            patches: Vec::new(),
            noise_points: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.rooms.is_empty() {
            return bad("scene needs at least one room");
        }
        for r in &self.rooms {
            let ok = r.max[0] > r.min[0]
                && r.max[1] > r.min[1]
                && r.height > 0.0
                && (0.0..80.0).contains(&r.roof_pitch_deg)
                && r.min.iter().chain(&r.max).chain([&r.floor_z, &r.height]).all(|v| v.is_finite());
            if !ok {
                return bad("rooms need positive finite extents, height and a pitch in [0, 80)");
            }
        }
        if !(self.density > 0.0 && self.noise_sigma >= 0.0 && self.slab_thickness >= 0.0 && self.stories >= 1) {
            return bad("density must be positive, sigma and slab thickness non-negative, stories >= 1");
        }
        for t in &self.trims {
            if t.room >= self.rooms.len() || !(t.keep[1] > t.keep[0]) {
                return bad("wall trim references a missing room or an empty interval");
            }
        }
        for o in &self.objects {
            if (0..3).any(|k| !(o.max[k] > o.min[k])) {
                return bad("objects need positive extents");
            }
        }
        for (i, a) in self.rooms.iter().enumerate() {
            for (j, b) in self.rooms.iter().enumerate().skip(i + 1) {
                let ox = a.max[0].min(b.max[0]) - a.min[0].max(b.min[0]);
                let oy = a.max[1].min(b.max[1]) - a.min[1].max(b.min[1]);
                let oz = a.top_z().min(b.top_z()) - a.floor_z.max(b.floor_z);
                if ox > 1e-9 && oy > 1e-9 && oz > 1e-9 {
                    return Err(Error::OverlappingRooms(i, j));
                }
            }
        }
        Ok(())
    }
}

/// One generated surface with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSurface {
    /// Plane with its normal pointing into the room (out of objects).
    pub plane: PlaneParams,
    pub label: SurfaceLabel,
    /// Room index and story, for room surfaces.
    pub room: Option<(usize, usize)>,
    pub side: Option<WallSide>,
    pub area: f64,
    pub num_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub cloud: PointCloud,
    pub labels: Vec<SurfaceLabel>,
    /// Generating surface of each point; `None` for patches and noise.
    pub surface_of: Vec<Option<usize>>,
    pub surfaces: Vec<GroundTruthSurface>,
    /// Floor area of every room on every story, story-major.
    pub room_areas: Vec<f64>,
}

impl SyntheticScene {
    pub fn surfaces_with(&self, label: SurfaceLabel) -> impl Iterator<Item = &GroundTruthSurface> {
        self.surfaces.iter().filter(move |s| s.label == label)
    }

    pub fn indices_with(&self, label: SurfaceLabel) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }
}

/// Planar patch `origin + s·e1 + t·e2` over `s ∈ [s0, s1]`,
/// `t ∈ [t0, min(t1, top(s))]`.
#[derive(Debug, Clone)]
struct Patch {
    origin: Point3,
    e1: Vec3,
    e2: Vec3,
    s: [f64; 2],
    t: [f64; 2],
    /// `t <= c + k s` when present.
    top: Option<(f64, f64)>,
    normal: UnitVector3,
    count: Option<usize>,
    truth: GroundTruthSurface,
}

impl Patch {
    fn t_max(&self, s: f64) -> f64 {
        match self.top {
            Some((c, k)) => (c + k * s).min(self.t[1]),
            None => self.t[1],
        }
    }

    fn area(&self) -> f64 {
        match self.top {
            None => (self.s[1] - self.s[0]) * (self.t[1] - self.t[0]),
            Some(_) => {
                // top(s) is linear and stays inside [t0, t1] by construction
                let h0 = self.t_max(self.s[0]) - self.t[0];
                let h1 = self.t_max(self.s[1]) - self.t[0];
                0.5 * (h0 + h1) * (self.s[1] - self.s[0])
            }
        }
    }

    fn sample(&self, n: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<(Point3, UnitVector3)> {
        let noise = Normal::new(0.0, sigma.max(0.0)).expect("sigma is finite");
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let s = rng.random_range(self.s[0]..=self.s[1]);
            let t = rng.random_range(self.t[0]..=self.t[1]);
            if t > self.t_max(s) {
                continue;
            }
            let mut p = self.origin + self.e1 * s + self.e2 * t;
            if sigma > 0.0 {
                p += Vec3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng));
            }
            out.push((p, self.normal));
        }
        out
    }
}

fn subtract(pieces: Vec<[f64; 2]>, cut: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for [a, b] in pieces {
        if cut[1] <= a || cut[0] >= b {
            out.push([a, b]);
            continue;
        }
        if cut[0] > a {
            out.push([a, cut[0]]);
        }
        if cut[1] < b {
            out.push([cut[1], b]);
        }
    }
    out.retain(|p| p[1] - p[0] > 1e-9);
    out
}

/// Line coordinate, interval along the wall and inward normal of a side.
fn side_geometry(r: &RoomSpec, side: WallSide) -> (f64, [f64; 2], Vec3) {
    match side {
        WallSide::South => (r.min[1], [r.min[0], r.max[0]], Vec3::y()),
        WallSide::North => (r.max[1], [r.min[0], r.max[0]], -Vec3::y()),
        WallSide::West => (r.min[0], [r.min[1], r.max[1]], Vec3::x()),
        WallSide::East => (r.max[0], [r.min[1], r.max[1]], -Vec3::x()),
    }
}

fn unit(v: Vec3) -> UnitVector3 {
    Unit::new_normalize(v)
}

fn room_patches(spec: &SceneSpec, story: usize, story_offset: f64) -> Vec<Patch> {
    let mut out = Vec::new();
    for (ri, r) in spec.rooms.iter().enumerate() {
        let z0 = r.floor_z + story_offset;
        let tan = r.roof_pitch_deg.to_radians().tan();
        let depth = r.max[1] - r.min[1];
        let width = r.max[0] - r.min[0];
        let room = Some((ri, story));
        for side in WallSide::ALL {
            let (line, span, normal) = side_geometry(r, side);
            let mut pieces = alloc::vec![span];
            for (oi, o) in spec.rooms.iter().enumerate().take(ri) {
                let (oline, ospan, _) = side_geometry(o, side.opposite());
                if (oline - line).abs() < 1e-9 && o.floor_z == r.floor_z {
                    pieces = subtract(pieces, ospan);
                }
                let _ = oi;
            }
            for t in spec.trims.iter().filter(|t| t.room == ri && t.side == side) {
                pieces = pieces
                    .into_iter()
                    .filter_map(|[a, b]| {
                        let (a, b) = (a.max(t.keep[0]), b.min(t.keep[1]));
                        (b - a > 1e-9).then_some([a, b])
                    })
                    .collect();
            }
            for [a, b] in pieces {
                let (origin, e1, top, t1) = match side {
                    WallSide::South => (Point3::new(0.0, line, z0), Vec3::x(), None, r.height),
                    WallSide::North => (Point3::new(0.0, line, z0), Vec3::x(), None, r.height + tan * depth),
                    WallSide::West | WallSide::East => {
                        let top = (tan > 0.0).then_some((r.height - tan * r.min[1], tan));
                        (Point3::new(line, 0.0, z0), Vec3::y(), top, r.height + tan * depth)
                    }
                };
                let mut p = Patch {
                    origin,
                    e1,
                    e2: Vec3::z(),
                    s: [a, b],
                    t: [0.0, t1],
                    top,
                    normal: unit(normal),
                    count: None,
                    truth: GroundTruthSurface {
                        plane: PlaneParams::from_point_normal(&(origin + e1 * a), &unit(normal)),
                        label: SurfaceLabel::Wall,
                        room,
                        side: Some(side),
                        area: 0.0,
                        num_points: 0,
                    },
                };
                p.truth.area = p.area();
                out.push(p);
            }
        }
        let floor_origin = Point3::new(r.min[0], r.min[1], z0);
        let mut floor = Patch {
            origin: floor_origin,
            e1: Vec3::x(),
            e2: Vec3::y(),
            s: [0.0, width],
            t: [0.0, depth],
            top: None,
            normal: unit(Vec3::z()),
            count: r.floor_points,
            truth: GroundTruthSurface {
                plane: PlaneParams::from_point_normal(&floor_origin, &unit(Vec3::z())),
                label: SurfaceLabel::Floor,
                room,
                side: None,
                area: 0.0,
                num_points: 0,
            },
        };
        floor.truth.area = floor.area();
        out.push(floor);

        let pitch = r.roof_pitch_deg.to_radians();
        let roof_origin = Point3::new(r.min[0], r.min[1], z0 + r.height);
        let e2 = Vec3::new(0.0, pitch.cos(), pitch.sin());
        let inward = unit(Vec3::new(0.0, pitch.sin(), -pitch.cos()));
        let mut ceiling = Patch {
            origin: roof_origin,
            e1: Vec3::x(),
            e2,
            s: [0.0, width],
            t: [0.0, depth / pitch.cos()],
            top: None,
            normal: inward,
            count: r.ceiling_points,
            truth: GroundTruthSurface {
                plane: PlaneParams::from_point_normal(&roof_origin, &inward),
                label: SurfaceLabel::Ceiling,
                room,
                side: None,
                area: 0.0,
                num_points: 0,
            },
        };
        ceiling.truth.area = ceiling.area();
        out.push(ceiling);
    }
    out
}

/// Origin, in-plane axes, extents along them, outward normal.
type BoxFace = (Point3, Vec3, Vec3, [f64; 2], [f64; 2], Vec3);

fn object_patches(o: &BoxObject) -> Vec<Patch> {
    let [x0, y0, z0] = o.min;
    let [x1, y1, z1] = o.max;
    let faces: [BoxFace; 5] = [
        (Point3::new(x0, y0, z1), Vec3::x(), Vec3::y(), [0.0, x1 - x0], [0.0, y1 - y0], Vec3::z()),
        (Point3::new(x0, y0, z0), Vec3::x(), Vec3::z(), [0.0, x1 - x0], [0.0, z1 - z0], -Vec3::y()),
        (Point3::new(x0, y1, z0), Vec3::x(), Vec3::z(), [0.0, x1 - x0], [0.0, z1 - z0], Vec3::y()),
        (Point3::new(x0, y0, z0), Vec3::y(), Vec3::z(), [0.0, y1 - y0], [0.0, z1 - z0], -Vec3::x()),
        (Point3::new(x1, y0, z0), Vec3::y(), Vec3::z(), [0.0, y1 - y0], [0.0, z1 - z0], Vec3::x()),
    ];
    faces
        .into_iter()
        .map(|(origin, e1, e2, s, t, n)| {
            let mut p = Patch {
                origin,
                e1,
                e2,
                s,
                t,
                top: None,
                normal: unit(n),
                count: None,
                truth: GroundTruthSurface {
                    plane: PlaneParams::from_point_normal(&origin, &unit(n)),
                    label: SurfaceLabel::Object,
                    room: None,
                    side: None,
                    area: 0.0,
                    num_points: 0,
                },
            };
            p.truth.area = p.area();
            p
        })
        .collect()
}

/// Samples every surface of `spec`.
///
/// Walls, floors and ceilings get `round(area · density)` points unless a
/// room overrides its ceiling or floor count. A wall segment shared with an
/// earlier room's opposite wall is sampled only once. Normals point into
/// rooms and out of objects. Each surface draws from its own ChaCha stream,
/// so output is identical for a given seed regardless of threading.
pub fn generate_scene(spec: &SceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let story_height = spec.rooms.iter().map(|r| r.top_z() - r.floor_z).fold(0.0, f64::max) + spec.slab_thickness;
    let mut patches = Vec::new();
    for story in 0..spec.stories {
        patches.extend(room_patches(spec, story, story as f64 * story_height));
    }
    for o in &spec.objects {
        patches.extend(object_patches(o));
    }
    let counts: Vec<usize> = patches
        .iter()
        .map(|p| p.count.unwrap_or_else(|| (p.truth.area * spec.density).round() as usize))
        .collect();
    let sampled = par::map_range(patches.len(), |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64 + 1);
        patches[k].sample(counts[k], spec.noise_sigma, &mut rng)
    });

    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut labels = Vec::new();
    let mut surface_of = Vec::new();
    let mut surfaces = Vec::with_capacity(patches.len());
    for (k, (patch, pts)) in patches.into_iter().zip(sampled).enumerate() {
        let mut truth = patch.truth;
        truth.num_points = pts.len();
        for (p, n) in pts {
            points.push(p);
            normals.push(n);
            labels.push(truth.label);
            surface_of.push(Some(k));
        }
        surfaces.push(truth);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);
    for patch in &spec.patches {
        let n = unit(Vec3::from(patch.normal));
        for _ in 0..patch.count {
            let p = Point3::new(
                lerp(&mut rng, patch.min[0], patch.max[0]),
                lerp(&mut rng, patch.min[1], patch.max[1]),
                lerp(&mut rng, patch.min[2], patch.max[2]),
            );
            points.push(p);
            normals.push(n);
            labels.push(patch.label);
            surface_of.push(None);
        }
    }
    if spec.noise_points > 0 {
        let bounds = crate::geom::Aabb::from_points(&points);
        let (lo, hi) = if bounds.is_empty() {
            (Point3::origin(), Point3::new(1.0, 1.0, 1.0))
        } else {
            (bounds.min, bounds.max)
        };
        for _ in 0..spec.noise_points {
            let p = Point3::new(lerp(&mut rng, lo.x, hi.x), lerp(&mut rng, lo.y, hi.y), lerp(&mut rng, lo.z, hi.z));
            let dir = loop {
                let v = Vec3::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                );
                if v.norm() > 1e-6 {
                    break unit(v);
                }
            };
            points.push(p);
            normals.push(dir);
            labels.push(SurfaceLabel::Noise);
            surface_of.push(None);
        }
    }

    let mut room_areas = Vec::new();
    for _ in 0..spec.stories {
        room_areas.extend(spec.rooms.iter().map(RoomSpec::floor_area));
    }
    Ok(SyntheticScene {
        cloud: PointCloud::new(points, Some(normals))?,
        labels,
        surface_of,
        surfaces,
        room_areas,
    })
}

fn lerp(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    if b > a {
        rng.random_range(a..=b)
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single_room() -> SceneSpec {
        SceneSpec {
            rooms: vec![RoomSpec::new([0.0, 0.0], [4.0, 3.0], 2.8)],
            ..Default::default()
        }
    }

    #[test]
    fn single_room_counts() {
        let s = generate_scene(&single_room()).unwrap();
        assert_eq!(s.surfaces.len(), 6);
        let walls = s.indices_with(SurfaceLabel::Wall).len();
        assert_eq!(walls, 2 * 4 * 2800 + 2 * 3 * 2800);
        assert_eq!(s.indices_with(SurfaceLabel::Ceiling).len(), 12000);
        assert_eq!(s.room_areas, vec![12.0]);
    }

    #[test]
    fn shared_wall_is_sampled_once() {
        let spec = SceneSpec {
            rooms: vec![
                RoomSpec::new([0.0, 0.0], [4.0, 3.0], 2.8),
                RoomSpec::new([0.0, 3.0], [2.0, 6.0], 2.8),
            ],
            density: 100.0,
            ..Default::default()
        };
        let s = generate_scene(&spec).unwrap();
        assert_eq!(s.surfaces.len(), 11);
        let on_y3 = s
            .cloud
            .points
            .iter()
            .zip(&s.labels)
            .filter(|(p, l)| **l == SurfaceLabel::Wall && (p.y - 3.0).abs() < 1e-9)
            .count();
        assert_eq!(on_y3, (4.0 * 2.8 * 100.0f64).round() as usize);
    }

    #[test]
    fn partial_overlap_keeps_the_remainder() {
        let spec = SceneSpec {
            rooms: vec![
                RoomSpec::new([0.0, 0.0], [2.0, 3.0], 2.8),
                RoomSpec::new([0.0, 3.0], [4.0, 6.0], 2.8),
            ],
            density: 50.0,
            ..Default::default()
        };
        let s = generate_scene(&spec).unwrap();
        let south_b: Vec<_> = s
            .surfaces
            .iter()
            .filter(|t| t.room == Some((1, 0)) && t.side == Some(WallSide::South))
            .collect();
        assert_eq!(south_b.len(), 1);
        assert!((south_b[0].area - 2.0 * 2.8).abs() < 1e-9);
    }

    #[test]
    fn roof_pitch() {
        let mut spec = single_room();
        spec.rooms[0].roof_pitch_deg = 20.0;
        spec.density = 200.0;
        let s = generate_scene(&spec).unwrap();
        let roof = s.surfaces_with(SurfaceLabel::Ceiling).next().unwrap();
        let tilt = roof.plane.normal().z.abs().acos().to_degrees();
        assert!((tilt - 20.0).abs() < 1e-6);
        let tan = 20f64.to_radians().tan();
        for (p, l) in s.cloud.points.iter().zip(&s.labels) {
            if *l == SurfaceLabel::Wall {
                assert!(p.z <= 2.8 + tan * p.y + 1e-9);
            }
        }
        let west = s.surfaces.iter().find(|t| t.side == Some(WallSide::West)).unwrap();
        assert!((west.area - (3.0 * 2.8 + 0.5 * 3.0 * 3.0 * tan)).abs() < 1e-9);
    }

    #[test]
    fn labels_match_their_planes() {
        let mut spec = single_room();
        spec.objects.push(BoxObject {
            min: [1.0, 1.0, 0.0],
            max: [1.5, 1.8, 0.7],
        });
        spec.density = 200.0;
        let s = generate_scene(&spec).unwrap();
        let normals = s.cloud.normals.as_ref().unwrap();
        for (i, p) in s.cloud.points.iter().enumerate() {
            let t = &s.surfaces[s.surface_of[i].unwrap()];
            assert!(t.plane.signed_distance(p).abs() < 1e-9);
            assert_eq!(t.label, s.labels[i]);
            assert!(normals[i].dot(t.plane.normal()) > 0.999);
        }
        // wall normals face the room centre
        for (i, p) in s.cloud.points.iter().enumerate() {
            if s.labels[i] == SurfaceLabel::Wall {
                let to_centre = Point3::new(2.0, 1.5, p.z) - p;
                assert!(normals[i].dot(&to_centre) > 0.0);
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let mut spec = single_room();
        spec.noise_sigma = 0.01;
        spec.noise_points = 100;
        spec.density = 100.0;
        assert_eq!(generate_scene(&spec).unwrap(), generate_scene(&spec).unwrap());
        let mut other = spec.clone();
        other.seed = 1;
        assert_ne!(generate_scene(&spec).unwrap().cloud, generate_scene(&other).unwrap().cloud);
    }

    #[test]
    fn overlapping_rooms_are_rejected() {
        let spec = SceneSpec {
            rooms: vec![
                RoomSpec::new([0.0, 0.0], [4.0, 3.0], 2.8),
                RoomSpec::new([3.0, 2.0], [5.0, 5.0], 2.8),
            ],
            ..Default::default()
        };
        assert_eq!(generate_scene(&spec), Err(Error::OverlappingRooms(0, 1)));
    }

    #[test]
    fn stories_and_patches() {
        let mut spec = single_room();
        spec.stories = 2;
        spec.density = 20.0;
        spec.rooms[0].ceiling_points = Some(60);
        spec.patches.push(PointPatch {
            min: [4.0, 1.4, 2.8],
            max: [5.0, 3.0, 2.8],
            count: 40,
            normal: [0.0, 0.0, -1.0],
            label: SurfaceLabel::Noise,
        });
        let s = generate_scene(&spec).unwrap();
        assert_eq!(s.surfaces.len(), 12);
        assert_eq!(s.indices_with(SurfaceLabel::Ceiling).len(), 120);
        assert_eq!(s.indices_with(SurfaceLabel::Noise).len(), 40);
        let top_floor = s.surfaces.iter().filter(|t| t.label == SurfaceLabel::Floor).map(|t| -t.plane.d()).fold(0.0, f64::max);
        assert!((top_floor - 3.1).abs() < 1e-9);
        assert_eq!(s.room_areas.len(), 2);
    }

    #[test]
    fn trims_shorten_walls() {
        let mut spec = single_room();
        spec.trims.push(WallTrim {
            room: 0,
            side: WallSide::West,
            keep: [0.2, 3.0],
        });
        let s = generate_scene(&spec).unwrap();
        let west = s.surfaces.iter().find(|t| t.side == Some(WallSide::West)).unwrap();
        assert!((west.area - 2.8 * 2.8).abs() < 1e-9);
    }
}
