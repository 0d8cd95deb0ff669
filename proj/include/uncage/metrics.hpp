#pragma once

#include <vector>

#include "uncage/synthmgt.hpp"
#include "uncage/types.hpp"

namespace uncage {

struct MetricThresholds {
  // Fraction of an object's planted region area it must reach, anywhere on
  // the grid, to count as present.
  double min_coverage = 0.3;
  // Fraction of foreign tokens among a region's non-background cells above
  // which the region counts as mixed.
  double mixture = 0.2;
};

struct ObjectReport {
  int entity = 0;
  long long cells = 0;          // cells carrying this object's tokens, grid-wide
  long long wrong_variant = 0;  // of those, cells with the borrowed attribute
  bool missing = false;
  double leakage = 0.0;  // wrong_variant / cells, 0 when the object is absent
  bool leakage_vacuous = false;
  double mixture_fraction = 0.0;  // foreign share of non-background region cells
  bool mixed = false;
  bool mixture_vacuous = false;  // region held no non-background cells
};

struct FidelityReport {
  std::vector<ObjectReport> objects;
  double missing_rate = 0.0;       // fraction of objects missing
  double attribute_leakage = 0.0;  // mean leakage over objects present
  bool leakage_vacuous = false;    // no object present anywhere
  double object_mixture = 0.0;     // fraction of regions flagged mixed
  bool mixture_vacuous = false;    // every region empty of non-background
};

// Objects whose token count falls below theta_min times their region area.
std::vector<bool> missing_object(const IntGrid& grid, const SceneSpec& scene, double theta_min);

// Share of wrong-attribute cells among each object's tokens, averaged over
// the objects that appear at all. Sets *vacuous when none appear.
double attribute_leakage(const IntGrid& grid, const SceneSpec& scene, bool* vacuous = nullptr);

// Fraction of planted regions whose non-background cells contain more than
// theta_mix foreign-object tokens. Sets *vacuous when every region is empty.
double object_mixture(const IntGrid& grid, const SceneSpec& scene, double theta_mix,
                      bool* vacuous = nullptr);

FidelityReport evaluate_fidelity(const IntGrid& grid, const SceneSpec& scene,
                                 const MetricThresholds& thresholds = {});

}  // namespace uncage
