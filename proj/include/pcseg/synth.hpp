#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcseg/point_cloud.hpp"

namespace pcseg {

struct Primitive {
  enum class Shape { Plane, Box, Sphere };
  Shape shape = Shape::Plane;
  Vec3 center = Vec3::Zero();
  Vec3 rotation_deg = Vec3::Zero();  // applied as Rz * Ry * Rx
  Vec3 size = Vec3::Ones();          // plane: x/y extent; box: x/y/z extent
  double radius = 0.5;               // sphere
  ClassId class_id = 0;
  std::int32_t instance = 0;
  double density = 1000.0;           // points per square meter
  double noise = 0.0;                // sigma along the surface normal (m)
  std::optional<Vec3> color;         // [0, 1]

  double area() const;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::uint64_t seed = 0;

  /// Throws Bounds on non-positive densities or sizes, negative noise, or a
  /// repeated instance id.
  void validate() const;
};

/// Points per primitive are Poisson distributed around density * area and
/// spread uniformly over the surface, then displaced along the analytic
/// normal by Gaussian noise. The cloud carries normals, gt classes and
/// instances, and colors when every primitive has one.
PointCloud generate(const SceneSpec& spec);

/// Scene files: top-level "seed = N", then one "[plane]", "[box]" or
/// "[sphere]" section per primitive.
SceneSpec parse_scene_spec(std::string_view text);
SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string to_text(const SceneSpec& spec);

/// Built-in scenes: "two-planes" (floor and wall meeting at a right angle),
/// "parallel-planes" (1 m apart), "single-plane" and "five-primitives".
SceneSpec preset_scene(std::string_view name, std::uint64_t seed = 0);

}  // namespace pcseg
