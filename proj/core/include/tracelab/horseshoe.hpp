#pragma once

// Survivor sets of the cat map that avoid sup-norm boxes around the preimages
// of the singular points, their Cantor sections along eigenlines through a
// periodic anchor, and their images on S_0.

#include <string>
#include <vector>

#include "tracelab/cantor.hpp"
#include "tracelab/maps.hpp"

namespace tracelab {

/// Preimages under the factor map of the four singular points of S_0.
std::vector<TorusPoint> singular_preimages();

struct AvoidanceSpec {
  double epsilon = 0.02;
  std::vector<TorusPoint> centers = singular_preimages();
  int depth = 14;

  /// epsilon in (0, 1/2), at least one center, depth >= 1.
  void validate() const;
};

enum class LineDirection { Stable, Unstable };
std::string_view to_string(LineDirection d) noexcept;

/// Unit eigenvector of the cat map along the given direction.
std::array<double, 2> eigen_direction(LineDirection d);

struct SurvivorSection {
  TorusPoint anchor;
  LineDirection direction = LineDirection::Stable;
  double half_length = 0.5;          // the segment is s in [-half_length, half_length]
  CantorPresentation presentation;   // in s, the signed arclength from the anchor
  std::vector<Interval> survivors;   // closed surviving intervals, left to right
  AvoidanceSpec spec;
  double gap_mass = 0.0;             // total excluded length inside the hull
  double previous_gap_mass = 0.0;    // same at depth - 1
  std::vector<std::string> warnings;

  TorusPoint point(double s) const;
  bool survives(double s) const;
};

/// Throws EverythingDies when no interval of positive length survives.
SurvivorSection survivor_section(const TorusPoint& anchor, LineDirection direction, const AvoidanceSpec& spec,
                                 double half_length = 0.5);

struct ThicknessRow {
  double epsilon = 0.0;
  double tau = 0.0;
  std::size_t survivors = 0;
  std::string error;  // set when the row failed
};

struct ThicknessTable {
  std::vector<ThicknessRow> rows;
  bool nondecreasing = true;  // tau never drops as epsilon decreases
};

ThicknessTable thickness_vs_epsilon(const std::vector<double>& eps_list, const TorusPoint& anchor,
                                    LineDirection direction, int depth);

struct ProjectedSurvivors {
  std::vector<TorusPoint> torus;  // survivor samples pushed `shift` steps along the expanding direction
  std::vector<Point3> points;     // their images on S_0
  int shift = 0;                  // signed cat-map power applied to the section samples
  double pushforward_radius = 0.0;
};

/// Samples a uniform grid of `samples` positions across the segment, keeps the
/// survivors, moves them depth steps in the expanding direction and maps them by F.
ProjectedSurvivors project_survivors(const SurvivorSection& section, std::size_t samples);

/// Smallest distance from F of the boundary of an epsilon box around each
/// center to the image of that center.
double pushforward_radius(const std::vector<TorusPoint>& centers, double epsilon);

}  // namespace tracelab
