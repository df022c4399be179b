#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "featmap/pipeline.hpp"

namespace featmap {

std::vector<double> linspace(double from, double to, int samples);

/// Evaluates independent copies of the model with design entry `param` set
/// to each value and the other entries at their initial values.
std::vector<Evaluation> sweep_evaluations(const Model& model, int param, std::span<const double> values,
                                          int threads = 0);

/// Sum of 4 mu (1 - mu) over the elements.
double total_grayness(std::span<const double> mu);

// ---------------------------------------------------------------------------
// H-shape: 40 x 40 unit elements, solid strips in rows 0-3 and 36-39, a
// vertical bar four elements wide whose left edge sits at x = s (design
// entry 0), bottom edge clamped, load (1, -1) at the top-left node.

Model hshape_model(const BoundaryModel& boundary, const Quadrature& quadrature, const MaterialModel& material);

struct HShapeConfig {
  BoundaryModel boundary{BoundaryKind::exact, 1.0, 6.5, 1e-6};
  Quadrature quadrature{QuadratureKind::quasi_analytic, 0};
  MaterialModel material;
  double s_from = 16.0;
  double s_to = 19.0;
  int samples = 61;
  int threads = 0;
};

struct HShapeRow {
  double s = 0.0;
  double compliance = 0.0;
  double gray_left = 0.0;   // rows 4-35, elements left of the bar's center line
  double gray_right = 0.0;  // rows 4-35, elements right of it
  double volume = 0.0;
};

std::vector<HShapeRow> run_hshape_sweep(const HShapeConfig& config);
void write_hshape_csv(const std::filesystem::path& path, std::span<const HShapeRow> rows);

// ---------------------------------------------------------------------------
// Four-bar local minima: L x L square on an n x n grid; fixed vertical bars
// at x = 0, L/2, L and a horizontal bar along the top, all hyperellipses of
// width L/10; a moving vertical bar at x = h (design entry 0 is its x offset,
// so h = offset). Bottom edge clamped, downward loads 1 at x = 0.7 L and
// 0.3 at x = 0.25 L on the top edge.

/// Element-centroid membership combined by a true maximum of densities.
MappingConfig binary_mapping();
Model localmin_model(int n, const MappingConfig& mapping);

/// Strict interior minima after merging runs of equal values (relative
/// tolerance rel_tol). Returns the first index of each minimal run.
std::vector<int> detect_minima(std::span<const double> values, double rel_tol = 1e-9);

struct LocalMinConfig {
  int n = 80;
  int samples = 201;
  MappingConfig mapping = binary_mapping();
  int threads = 0;
};

struct LocalMinResult {
  std::vector<double> h_over_l;
  std::vector<double> compliance;
  std::vector<int> minima;  // sample indices
};

LocalMinResult run_localmin_sweep(const LocalMinConfig& config);
/// localmin.csv (h_over_L,J,minimum) and localmin_minima.csv
/// (index,h_over_L,J,rank) where rank 1 is the best minimum.
void write_localmin_csv(const std::filesystem::path& dir, const LocalMinResult& result);

// ---------------------------------------------------------------------------
// Three-bar field demo on an n x n grid.

struct Panel {
  std::string name;
  std::vector<double> values;  // one per element
  bool density = false;        // values already in [0, 1]
};

/// Two axis-aligned bars and a diagonal one (index 2), as offset-surface
/// bars or as hyperellipses of exponent 6.
std::vector<Feature> threebar_features(bool hyperellipse, int n = 48);

struct ThreeBarConfig {
  int n = 48;
  std::vector<double> alphas{1.0, 0.8, 0.6, 0.1, 0.0};
  int threads = 0;
};

std::vector<Panel> run_threebar_demo(const ThreeBarConfig& config);

/// <name>.csv (ex,ey,value) and <name>.pgm per panel. Non-density panels
/// are scaled linearly from their [min, max] to [0, 1] for the image.
void write_panels(const std::filesystem::path& dir, const Grid& grid, std::span<const Panel> panels);

}  // namespace featmap
