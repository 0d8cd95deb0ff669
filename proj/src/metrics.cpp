#include "uncage/metrics.hpp"

#include <stdexcept>

namespace uncage {
namespace {

void check_grid(const IntGrid& grid, const SceneSpec& scene) {
  if (grid.rows() != scene.height || grid.cols() != scene.width)
    throw std::invalid_argument("metrics: grid does not match scene size");
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    if (grid(i) < 0 || grid(i) >= scene.vocab_size())
      throw std::invalid_argument("metrics: token id outside scene vocabulary");
}

}  // namespace

FidelityReport evaluate_fidelity(const IntGrid& grid, const SceneSpec& scene,
                                 const MetricThresholds& thresholds) {
  check_grid(grid, scene);
  const int n = static_cast<int>(scene.entities.size());
  FidelityReport report;
  if (n == 0) {
    report.leakage_vacuous = true;
    report.mixture_vacuous = true;
    return report;
  }

  int missing = 0, mixed = 0, present = 0, occupied_regions = 0;
  double leakage_sum = 0.0;
  for (int e = 0; e < n; ++e) {
    ObjectReport obj;
    obj.entity = e;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (scene.token_entity(grid(i)) != e) continue;
      ++obj.cells;
      if (scene.is_wrong_variant(grid(i))) ++obj.wrong_variant;
    }
    const auto region = scene.region_cells(e);
    obj.missing = static_cast<double>(obj.cells) <
                  thresholds.min_coverage * static_cast<double>(region.size());
    if (obj.cells > 0) {
      obj.leakage = static_cast<double>(obj.wrong_variant) / static_cast<double>(obj.cells);
      leakage_sum += obj.leakage;
      ++present;
    } else {
      obj.leakage_vacuous = true;
    }

    long long non_bg = 0, foreign = 0;
    for (const Position& p : region) {
      const int entity = scene.token_entity(grid(p.row, p.col));
      if (entity < 0) continue;
      ++non_bg;
      if (entity != e) ++foreign;
    }
    if (non_bg > 0) {
      obj.mixture_fraction = static_cast<double>(foreign) / static_cast<double>(non_bg);
      obj.mixed = obj.mixture_fraction > thresholds.mixture;
      ++occupied_regions;
    } else {
      obj.mixture_vacuous = true;
    }

    if (obj.missing) ++missing;
    if (obj.mixed) ++mixed;
    report.objects.push_back(obj);
  }

  report.missing_rate = static_cast<double>(missing) / n;
  report.object_mixture = static_cast<double>(mixed) / n;
  report.mixture_vacuous = occupied_regions == 0;
  if (present > 0) {
    report.attribute_leakage = leakage_sum / present;
  } else {
    report.leakage_vacuous = true;
  }
  return report;
}

std::vector<bool> missing_object(const IntGrid& grid, const SceneSpec& scene, double theta_min) {
  MetricThresholds th;
  th.min_coverage = theta_min;
  const FidelityReport report = evaluate_fidelity(grid, scene, th);
  std::vector<bool> out;
  for (const ObjectReport& obj : report.objects) out.push_back(obj.missing);
  return out;
}

double attribute_leakage(const IntGrid& grid, const SceneSpec& scene, bool* vacuous) {
  const FidelityReport report = evaluate_fidelity(grid, scene, {});
  if (vacuous) *vacuous = report.leakage_vacuous;
  return report.attribute_leakage;
}

double object_mixture(const IntGrid& grid, const SceneSpec& scene, double theta_mix,
                      bool* vacuous) {
  MetricThresholds th;
  th.mixture = theta_mix;
  const FidelityReport report = evaluate_fidelity(grid, scene, th);
  if (vacuous) *vacuous = report.mixture_vacuous;
  return report.object_mixture;
}

}  // namespace uncage
