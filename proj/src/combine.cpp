#include "featmap/combine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "featmap/errors.hpp"

namespace featmap {

std::string_view strategy_name(CombineStrategy s) {
  switch (s) {
    case CombineStrategy::combine_then_map: return "combine_then_map";
    case CombineStrategy::map_then_combine_density: return "map_then_combine_density";
    case CombineStrategy::map_then_combine_heaviside: return "map_then_combine_heaviside";
  }
  return "";
}

std::optional<CombineStrategy> parse_strategy(std::string_view name) {
  for (auto s : {CombineStrategy::combine_then_map, CombineStrategy::map_then_combine_density,
                 CombineStrategy::map_then_combine_heaviside})
    if (strategy_name(s) == name) return s;
  return std::nullopt;
}

std::string_view extremum_name(ExtremumKind k) {
  switch (k) {
    case ExtremumKind::true_max: return "true_max";
    case ExtremumKind::ks: return "ks";
    case ExtremumKind::pnorm: return "pnorm";
    case ExtremumKind::r_union: return "r_union";
    case ExtremumKind::product_indicator: return "product_indicator";
  }
  return "";
}

std::optional<ExtremumKind> parse_extremum(std::string_view name) {
  for (auto k : {ExtremumKind::true_max, ExtremumKind::ks, ExtremumKind::pnorm, ExtremumKind::r_union,
                 ExtremumKind::product_indicator})
    if (extremum_name(k) == name) return k;
  return std::nullopt;
}

void CombineSpec::validate() const {
  if ((extremum == ExtremumKind::ks || extremum == ExtremumKind::pnorm) && !(p > 0.0 && std::isfinite(p)))
    throw ValidationError("aggregation parameter p must be positive");
  if (!(size_penalty >= 1.0) || !std::isfinite(size_penalty))
    throw ValidationError("size penalty exponent must be >= 1");
}

double ks_aggregate(std::span<const double> v, double p, std::span<double> partials) {
  if (v.empty()) throw ValidationError("cannot aggregate an empty set");
  double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(p * (x - m));
  if (!partials.empty())
    for (std::size_t i = 0; i < v.size(); ++i) partials[i] = std::exp(p * (v[i] - m)) / s;
  return m + std::log(s) / p;
}

double pnorm_aggregate(std::span<const double> v, double p, std::span<double> partials) {
  if (v.empty()) throw ValidationError("cannot aggregate an empty set");
  double m = 0.0;
  for (double x : v) {
    if (x < 0.0) throw ValidationError("pnorm aggregation needs nonnegative inputs");
    m = std::max(m, x);
  }
  if (m == 0.0) {
    if (!partials.empty()) std::fill(partials.begin(), partials.end(), 0.0);
    return 0.0;
  }
  double s = 0.0;
  for (double x : v) s += std::pow(x / m, p);
  double r = m * std::pow(s, 1.0 / p);
  if (!partials.empty())
    for (std::size_t i = 0; i < v.size(); ++i) partials[i] = std::pow(v[i] / r, p - 1.0);
  return r;
}

double r_boolean(RBoolean op, double f1, double f2, double* df1, double* df2) {
  double n = std::hypot(f1, f2);
  double sign = op == RBoolean::union_op ? 1.0 : -1.0;
  if (df1 && df2) {
    if (n > 0.0) {
      *df1 = 1.0 + sign * f1 / n;
      *df2 = 1.0 + sign * f2 / n;
    } else {
      *df1 = 1.0;
      *df2 = 1.0;
    }
  }
  return f1 + f2 + sign * n;
}

double smooth_extremum(ExtremumKind kind, std::span<const double> v, double p, std::span<double> partials) {
  if (v.empty()) throw ValidationError("cannot aggregate an empty set");
  if (!partials.empty() && partials.size() != v.size()) throw ValidationError("partials size mismatch");
  switch (kind) {
    case ExtremumKind::true_max: {
      auto it = std::max_element(v.begin(), v.end());
      if (!partials.empty()) {
        std::fill(partials.begin(), partials.end(), 0.0);
        partials[it - v.begin()] = 1.0;
      }
      return *it;
    }
    case ExtremumKind::ks: return ks_aggregate(v, p, partials);
    case ExtremumKind::pnorm: return pnorm_aggregate(v, p, partials);
    case ExtremumKind::r_union: {
      double acc = v[0];
      if (!partials.empty()) partials[0] = 1.0;
      for (std::size_t i = 1; i < v.size(); ++i) {
        double da, db;
        acc = r_boolean(RBoolean::union_op, acc, v[i], &da, &db);
        if (!partials.empty()) {
          for (std::size_t j = 0; j < i; ++j) partials[j] *= da;
          partials[i] = db;
        }
      }
      return acc;
    }
    case ExtremumKind::product_indicator: {
      double prod = 1.0;
      for (double x : v) prod *= x;
      if (!partials.empty()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          double others = 1.0;
          for (std::size_t j = 0; j < v.size(); ++j)
            if (j != i) others *= v[j];
          partials[i] = others;
        }
      }
      return prod;
    }
  }
  return 0.0;
}

double effective_density(double rho, double alpha, double size_penalty) {
  return std::pow(alpha, size_penalty) * rho;
}

std::vector<double> effective_density(std::span<const double> rho, double alpha, double size_penalty) {
  std::vector<double> out(rho.size());
  double s = std::pow(alpha, size_penalty);
  for (std::size_t i = 0; i < rho.size(); ++i) out[i] = s * rho[i];
  return out;
}

CombinedField::CombinedField(std::span<const Feature> features, FieldKind kind, ExtremumKind extremum, double p)
    : kind_(kind), extremum_(extremum), p_(p) {
  if (features.empty()) throw ValidationError("at least one feature is required");
  if (extremum == ExtremumKind::pnorm || extremum == ExtremumKind::product_indicator)
    throw ValidationError(std::string("extremum '") + std::string(extremum_name(extremum)) +
                          "' cannot combine implicit values");
  for (std::size_t i = 0; i < features.size(); ++i) {
    fields_.emplace_back(features[i], static_cast<int>(i), kind);
    lipschitz_.push_back(fields_.back().lipschitz());
  }
}

double CombinedField::value(const Vec2& x) const {
  if (fields_.size() == 1) return fields_[0].value(x);
  double buf[16];
  std::vector<double> heap;
  double* v = buf;
  if (fields_.size() > 16) {
    heap.resize(fields_.size());
    v = heap.data();
  }
  for (std::size_t i = 0; i < fields_.size(); ++i) v[i] = fields_[i].value(x);
  return smooth_extremum(extremum_, std::span<const double>(v, fields_.size()), p_);
}

void CombinedField::sample(const Vec2& x, PointSample& out) const {
  const std::size_t n = fields_.size();
  if (n == 1) {
    fields_[0].sample(x, out);
    return;
  }
  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = fields_[i].value(x);
  out.value = smooth_extremum(extremum_, v, p_, w);
  out.d.clear();
  out.differentiable = true;
  if (extremum_ == ExtremumKind::true_max) {
    double top = out.value;
    int ties = 0;
    for (double vi : v)
      if (vi == top) ++ties;
    if (ties > 1) out.differentiable = false;
  }
  PointSample fi;
  for (std::size_t i = 0; i < n; ++i) {
    if (w[i] == 0.0) continue;
    fields_[i].sample(x, fi);
    accumulate(out.d, fi.d, w[i]);
    out.differentiable = out.differentiable && fi.differentiable;
  }
}

bool CombinedField::distance_argument() const {
  return kind_ == FieldKind::signed_distance &&
         (extremum_ == ExtremumKind::true_max || extremum_ == ExtremumKind::ks);
}

bool CombinedField::lipschitz() const {
  if (extremum_ != ExtremumKind::true_max && extremum_ != ExtremumKind::ks) return false;
  return std::all_of(lipschitz_.begin(), lipschitz_.end(), [](bool b) { return b; });
}

void MappingConfig::validate() const {
  boundary.validate();
  quadrature.validate();
  combine.validate();
  const auto ext = combine.extremum;
  if (combine.strategy == CombineStrategy::combine_then_map) {
    if (ext == ExtremumKind::pnorm)
      throw ValidationError("pnorm needs nonnegative inputs and is only available for map_then_combine strategies");
    if (boundary.kind == BoundaryKind::circ_sample && ext == ExtremumKind::r_union)
      throw ValidationError("circ_sample needs a signed distance; an r_union combination is not one");
  } else {
    if (ext == ExtremumKind::r_union || ext == ExtremumKind::product_indicator)
      throw ValidationError(std::string("extremum '") + std::string(extremum_name(ext)) +
                            "' is only available for combine_then_map");
  }
  if (boundary.kind == BoundaryKind::circ_sample && argument != FieldKind::signed_distance)
    throw ValidationError("circ_sample needs the signed_distance argument");
}

namespace {

Quadrature point_rule(const MappingConfig& c) {
  if (c.boundary.kind == BoundaryKind::circ_sample) return {QuadratureKind::newton_cotes, 0};
  return c.quadrature;
}

// Per-feature Heaviside values combined at each sample point.
DensityField map_heaviside_level(std::span<const Feature> features, const Grid& grid, const MappingConfig& c,
                                 bool jacobian, int threads) {
  const std::size_t n = features.size();
  std::vector<FeatureField> fields;
  std::vector<double> scale(n), dscale(n);
  const bool product = c.combine.extremum == ExtremumKind::product_indicator;
  for (std::size_t i = 0; i < n; ++i) {
    fields.emplace_back(features[i], static_cast<int>(i), c.argument);
    if (product) {
      scale[i] = 1.0;
      dscale[i] = 0.0;
    } else {
      double a = features[i].size, pa = c.combine.size_penalty;
      scale[i] = std::pow(a, pa);
      dscale[i] = a > 0.0 ? pa * std::pow(a, pa - 1.0) : (pa == 1.0 ? 1.0 : 0.0);
    }
  }
  auto integrand = [&](const Vec2& x, bool partials, PointSample& out) {
    std::vector<double> v(n), w(n), dh(n), hv(n);
    std::vector<PointSample> ps(partials ? n : 0);
    for (std::size_t i = 0; i < n; ++i) {
      HeavisideValue h;
      if (partials) {
        fields[i].sample(x, ps[i]);
        h = heaviside_eval(c.boundary, ps[i].value);
      } else {
        h = heaviside_eval(c.boundary, fields[i].value(x));
      }
      v[i] = scale[i] * h.value;
      hv[i] = h.value;
      dh[i] = h.derivative;
      if (partials) ps[i].differentiable = ps[i].differentiable && h.differentiable;
    }
    out.value = n == 1 ? v[0] : smooth_extremum(c.combine.extremum, v, c.combine.p, w);
    if (n == 1) w[0] = 1.0;
    if (!partials) return;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      if (dh[i] != 0.0) {
        accumulate(out.d, ps[i].d, w[i] * scale[i] * dh[i]);
        if (!ps[i].differentiable) out.differentiable = false;
      }
      if (!product && dscale[i] != 0.0)
        accumulate(out.d, global_slot(static_cast<int>(i), kSizeSlot), w[i] * dscale[i] * hv[i]);
    }
  };
  return integrate_points(grid, point_rule(c), integrand, c.boundary.rho_min, jacobian, threads);
}

}  // namespace

DensityField combine_densities(std::span<const DensityField> fields, std::span<const double> alphas,
                               std::span<const int> feature_indices, const CombineSpec& spec, double rho_min) {
  if (fields.empty()) throw ValidationError("at least one density field is required");
  if (alphas.size() != fields.size() || feature_indices.size() != fields.size())
    throw ValidationError("one size variable and index per field is required");
  const std::size_t n = fields.size();
  const Grid& grid = fields[0].grid;
  const int ne = grid.num_elements();
  bool jac = true;
  for (const auto& f : fields) {
    if (f.grid.nx != grid.nx || f.grid.ny != grid.ny) throw ValidationError("density fields must share a grid");
    jac = jac && f.has_jacobian;
  }
  DensityField out;
  out.grid = grid;
  out.rho.assign(ne, rho_min);
  out.has_jacobian = jac;
  if (jac) out.jacobian.assign(ne, {});
  std::vector<double> scale(n), dscale(n);
  for (std::size_t i = 0; i < n; ++i) {
    scale[i] = std::pow(alphas[i], spec.size_penalty);
    dscale[i] = alphas[i] > 0.0 ? spec.size_penalty * std::pow(alphas[i], spec.size_penalty - 1.0)
                                : (spec.size_penalty == 1.0 ? 1.0 : 0.0);
    out.nondifferentiable += fields[i].nondifferentiable;
  }
  std::vector<double> v(n), w(n);
  for (int e = 0; e < ne; ++e) {
    for (std::size_t i = 0; i < n; ++i) v[i] = scale[i] * fields[i].rho[e];
    double r = n == 1 ? v[0] : smooth_extremum(spec.extremum, v, spec.p, w);
    if (n == 1) w[0] = 1.0;
    bool clamped = false;
    if (r > 1.0 + 1e-12) {
      ++out.overshoot;
      clamped = true;
    }
    if (r < rho_min) clamped = true;
    out.rho[e] = std::clamp(r, rho_min, 1.0);
    if (!jac || clamped) continue;
    SparsePartials d;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == 0.0) continue;
      accumulate(d, fields[i].jacobian[e], w[i] * scale[i]);
      if (dscale[i] != 0.0) accumulate(d, global_slot(feature_indices[i], kSizeSlot), w[i] * dscale[i] * fields[i].rho[e]);
    }
    std::sort(d.begin(), d.end());
    out.jacobian[e] = std::move(d);
  }
  return out;
}

DensityField map_features(std::span<const Feature> features, const Grid& grid, const MappingConfig& c,
                          bool jacobian, int threads) {
  c.validate();
  grid.validate();
  if (features.empty()) throw ValidationError("at least one feature is required");
  for (const auto& f : features) validate(f);
  if (jacobian && !c.boundary.differentiable())
    throw NotDifferentiableError("the exact Heaviside has no density derivative; choose a smooth boundary model");

  switch (c.combine.strategy) {
    case CombineStrategy::combine_then_map: {
      if (c.combine.extremum == ExtremumKind::product_indicator)
        return map_heaviside_level(features, grid, c, jacobian, threads);
      CombinedField field(features, c.argument, c.combine.extremum, c.combine.p);
      return map_field(field, grid, c.boundary, c.quadrature, jacobian, threads);
    }
    case CombineStrategy::map_then_combine_density: {
      std::vector<DensityField> per;
      std::vector<double> alphas;
      std::vector<int> idx;
      for (std::size_t i = 0; i < features.size(); ++i) {
        FeatureField f(features[i], static_cast<int>(i), c.argument);
        per.push_back(map_field(f, grid, c.boundary, c.quadrature, jacobian, threads));
        alphas.push_back(features[i].size);
        idx.push_back(static_cast<int>(i));
      }
      return combine_densities(per, alphas, idx, c.combine, c.boundary.rho_min);
    }
    case CombineStrategy::map_then_combine_heaviside:
      return map_heaviside_level(features, grid, c, jacobian, threads);
  }
  throw ValidationError("unknown combination strategy");
}

}  // namespace featmap
