#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "featmap/combine.hpp"
#include "featmap/fea.hpp"
#include "featmap/geometry.hpp"
#include "featmap/mapping.hpp"
#include "featmap/material.hpp"

namespace featmap {

/// Elements whose density is fixed regardless of the features.
enum class Passive : std::int8_t { design = 0, solid = 1, empty = 2 };

/// Everything needed to go from a design vector to a compliance value.
struct Model {
  Grid grid;
  std::vector<Feature> features;
  DesignVector design;
  MappingConfig mapping;
  MaterialModel material;
  std::vector<int> fixed_dofs;
  Eigen::VectorXd loads;
  std::vector<Passive> passive;  // empty or one entry per element

  /// Everything except the analysis data (supports and loads).
  void validate_mapping() const;
  void validate() const;
  FeaProblem fea_problem() const;
  int num_slots() const { return static_cast<int>(features.size()) * kSlots; }
};

struct Evaluation {
  std::vector<Feature> features;
  DensityField density;
  std::vector<double> mu;
  Solution solution;
  double compliance = 0.0;
  double volume = 0.0;
  bool has_gradients = false;
  std::vector<double> compliance_drho;
  std::vector<double> compliance_slots;  // indexed by global_slot
  std::vector<double> volume_slots;
  std::vector<double> compliance_grad;  // per design parameter
  std::vector<double> volume_grad;
};

/// Applies passive overrides to a density field (partials cleared there).
void apply_passive(DensityField& field, std::span<const Passive> passive, double rho_min);

class Pipeline {
 public:
  explicit Pipeline(Model model, int threads = 0);

  const Model& model() const { return model_; }
  int threads() const { return threads_; }

  DensityField density(std::span<const double> s, bool jacobian) const;
  /// Maps, solves and optionally differentiates compliance and volume.
  Evaluation evaluate(std::span<const double> s, bool gradients);
  double compliance(std::span<const double> s);

  std::vector<double> initial_design() const;
  std::vector<double> lower() const;
  std::vector<double> upper() const;
  /// `relative` times the natural scale of each parameter.
  std::vector<double> fd_steps(double relative = 1e-4) const;
  std::vector<std::string> labels() const;

 private:
  Model model_;
  FeaSolver solver_;
  int threads_;
};

/// Natural scale of a parameter: l_el for lengths, 1 for angles and sizes.
double natural_scale(const Model& model, const DesignParam& p);

}  // namespace featmap
