#include "featmap/pipeline.hpp"

#include "featmap/errors.hpp"
#include "featmap/sensitivity.hpp"

namespace featmap {

void Model::validate_mapping() const {
  grid.validate();
  if (features.empty()) throw ValidationError("at least one feature is required");
  for (const auto& f : features) featmap::validate(f);
  design.validate(features);
  mapping.validate();
  material.validate();
  if (!passive.empty() && static_cast<int>(passive.size()) != grid.num_elements())
    throw ValidationError("passive mask must have one entry per element");
}

void Model::validate() const {
  validate_mapping();
  fea_problem().validate();
}

FeaProblem Model::fea_problem() const {
  FeaProblem p;
  p.grid = grid;
  p.fixed_dofs = fixed_dofs;
  p.loads = loads;
  p.material = material;
  return p;
}

void apply_passive(DensityField& field, std::span<const Passive> passive, double rho_min) {
  for (std::size_t e = 0; e < passive.size(); ++e) {
    if (passive[e] == Passive::design) continue;
    field.rho[e] = passive[e] == Passive::solid ? 1.0 : rho_min;
    if (field.has_jacobian) field.jacobian[e].clear();
  }
}

double natural_scale(const Model& model, const DesignParam& p) {
  if (p.slot == kSizeSlot) return 1.0;
  if (p.slot == 4 && kind_of(model.features[p.feature]) == ShapeKind::hyperellipse) return 1.0;
  return model.grid.l_el;
}

Pipeline::Pipeline(Model model, int threads)
    : model_((model.validate(), std::move(model))), solver_(model_.fea_problem()), threads_(threads) {}

DensityField Pipeline::density(std::span<const double> s, bool jacobian) const {
  auto features = model_.design.apply(model_.features, s);
  DensityField field = map_features(features, model_.grid, model_.mapping, jacobian, threads_);
  apply_passive(field, model_.passive, model_.mapping.boundary.rho_min);
  return field;
}

Evaluation Pipeline::evaluate(std::span<const double> s, bool gradients) {
  Evaluation ev;
  ev.features = model_.design.apply(model_.features, s);
  ev.density = map_features(ev.features, model_.grid, model_.mapping, gradients, threads_);
  apply_passive(ev.density, model_.passive, model_.mapping.boundary.rho_min);
  const int ne = model_.grid.num_elements();
  ev.mu.resize(ne);
  for (int e = 0; e < ne; ++e) ev.mu[e] = interpolate(model_.material, ev.density.rho[e]).mu;
  ev.solution = solver_.solve(ev.mu, ev.density.rho);
  ev.compliance = ev.solution.compliance;
  ev.volume = ev.solution.volume;
  if (!gradients) return ev;
  ev.has_gradients = true;
  ev.compliance_drho = density_sensitivity(solver_, ev.solution, model_.material, ev.density.rho, {});
  auto dv = density_sensitivity(solver_, ev.solution, model_.material, ev.density.rho, {ResponseKind::volume});
  ev.compliance_slots = shape_sensitivity(ev.compliance_drho, ev.density, model_.num_slots());
  ev.volume_slots = shape_sensitivity(dv, ev.density, model_.num_slots());
  ev.compliance_grad = model_.design.gather(ev.compliance_slots);
  ev.volume_grad = model_.design.gather(ev.volume_slots);
  return ev;
}

double Pipeline::compliance(std::span<const double> s) { return evaluate(s, false).compliance; }

std::vector<double> Pipeline::initial_design() const { return model_.design.values(model_.features); }

std::vector<double> Pipeline::lower() const {
  std::vector<double> v;
  for (const auto& p : model_.design.params()) v.push_back(p.lower);
  return v;
}

std::vector<double> Pipeline::upper() const {
  std::vector<double> v;
  for (const auto& p : model_.design.params()) v.push_back(p.upper);
  return v;
}

std::vector<double> Pipeline::fd_steps(double relative) const {
  std::vector<double> v;
  for (const auto& p : model_.design.params()) v.push_back(relative * natural_scale(model_, p));
  return v;
}

std::vector<std::string> Pipeline::labels() const {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < model_.design.size(); ++i) v.push_back(model_.design.label(i, model_.features));
  return v;
}

}  // namespace featmap
