#include "gsca/penalties.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gsca/linalg.hpp"

namespace gsca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_eta(double eta) {
  if (!(eta >= 0.0)) throw std::invalid_argument("penalty argument must be nonnegative");
}

bool is_nuclear(const PenaltySpec& spec) {
  return spec.family == PenaltyFamily::Nuclear ||
         (spec.family == PenaltyFamily::Lq && spec.hyper == 1.0);
}

}  // namespace

double default_hyper(PenaltyFamily family) {
  switch (family) {
    case PenaltyFamily::Lq: return 0.1;
    case PenaltyFamily::Scad: return 5.0;
    case PenaltyFamily::Gdp: return 1.0;
    case PenaltyFamily::Nuclear: return 1.0;
  }
  return 1.0;
}

PenaltySpec PenaltySpec::make(PenaltyFamily family, double lambda, std::optional<double> hyper) {
  PenaltySpec spec{family, lambda, hyper.value_or(default_hyper(family))};
  spec.validate();
  return spec;
}

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("lambda must be finite and nonnegative");
  switch (family) {
    case PenaltyFamily::Nuclear: break;
    case PenaltyFamily::Lq:
      if (!(hyper > 0.0 && hyper <= 1.0)) throw std::invalid_argument("Lq needs 0 < q <= 1");
      break;
    case PenaltyFamily::Scad:
      if (!(hyper > 2.0) || !std::isfinite(hyper))
        throw std::invalid_argument("SCAD needs gamma > 2");
      break;
    case PenaltyFamily::Gdp:
      if (!(hyper > 0.0) || !std::isfinite(hyper))
        throw std::invalid_argument("GDP needs gamma > 0");
      break;
  }
}

std::string PenaltySpec::label() const {
  std::ostringstream os;
  switch (family) {
    case PenaltyFamily::Nuclear: os << "L1"; break;
    case PenaltyFamily::Lq: os << 'L' << hyper; break;
    case PenaltyFamily::Scad: os << "SCAD(" << hyper << ')'; break;
    case PenaltyFamily::Gdp: os << "GDP(" << hyper << ')'; break;
  }
  return os.str();
}

PenaltyFamily parse_penalty_family(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "nuclear" || lower == "l1") return PenaltyFamily::Nuclear;
  if (lower == "lq") return PenaltyFamily::Lq;
  if (lower == "scad") return PenaltyFamily::Scad;
  if (lower == "gdp") return PenaltyFamily::Gdp;
  throw std::invalid_argument("unknown penalty family '" + name +
                              "' (expected nuclear, lq, scad or gdp)");
}

std::string to_string(PenaltyFamily family) {
  switch (family) {
    case PenaltyFamily::Nuclear: return "nuclear";
    case PenaltyFamily::Lq: return "lq";
    case PenaltyFamily::Scad: return "scad";
    case PenaltyFamily::Gdp: return "gdp";
  }
  return "unknown";
}

bool is_convex(const PenaltySpec& spec) {
  return spec.family == PenaltyFamily::Nuclear ||
         (spec.family == PenaltyFamily::Lq && spec.hyper == 1.0);
}

double penalty_value(const PenaltySpec& spec, double eta) {
  check_eta(eta);
  const double lambda = spec.lambda;
  const double gamma = spec.hyper;
  switch (spec.family) {
    case PenaltyFamily::Nuclear: return lambda * eta;
    case PenaltyFamily::Lq: return lambda * std::pow(eta, spec.hyper);
    case PenaltyFamily::Scad:
      if (eta <= lambda) return lambda * eta;
      if (eta <= gamma * lambda)
        return (-eta * eta + 2.0 * gamma * lambda * eta - lambda * lambda) / (2.0 * (gamma - 1.0));
      return lambda * lambda * (gamma + 1.0) / 2.0;
    case PenaltyFamily::Gdp: return lambda * std::log1p(eta / gamma);
  }
  return 0.0;
}

double supergradient(const PenaltySpec& spec, double eta) {
  check_eta(eta);
  const double lambda = spec.lambda;
  const double gamma = spec.hyper;
  if (is_nuclear(spec)) return lambda;
  switch (spec.family) {
    case PenaltyFamily::Nuclear: return lambda;
    case PenaltyFamily::Lq:
      if (eta == 0.0) return kInf;
      return lambda * spec.hyper * std::pow(eta, spec.hyper - 1.0);
    case PenaltyFamily::Scad:
      if (eta <= lambda) return lambda;
      if (eta <= gamma * lambda) return (gamma * lambda - eta) / (gamma - 1.0);
      return 0.0;
    case PenaltyFamily::Gdp: return lambda / (gamma + eta);
  }
  return 0.0;
}

VectorXd supergradients(const PenaltySpec& spec, const VectorXd& etas) {
  VectorXd out(etas.size());
  for (Index r = 0; r < etas.size(); ++r) out[r] = supergradient(spec, etas[r]);
  return out;
}

double spectral_penalty(const PenaltySpec& spec, const VectorXd& singular_values) {
  double total = 0.0;
  for (Index r = 0; r < singular_values.size(); ++r)
    total += penalty_value(spec, singular_values[r]);
  return total;
}

SvtResult weighted_svt(const MatrixXd& m, const VectorXd& weights, double step) {
  if (!(step >= 0.0)) throw std::invalid_argument("SVT step must be nonnegative");
  const Index n = std::min(m.rows(), m.cols());
  if (weights.size() < n)
    throw std::invalid_argument("fewer weights than singular values");
  for (Index r = 0; r < n; ++r)
    if (!(weights[r] >= 0.0)) throw std::invalid_argument("SVT weights must be nonnegative");

  SpectralShrink res = spectral_shrink(m, [&](Index r, double s) {
    const double threshold = step == 0.0 ? 0.0 : step * weights[r];
    return std::isinf(threshold) ? 0.0 : std::max(s - threshold, 0.0);
  });
  return SvtResult{std::move(res.matrix), std::move(res.values)};
}

double scalar_prox(const PenaltySpec& spec, double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("scalar_prox needs z >= 0");
  const auto objective = [&](double eta) {
    return 0.5 * (z - eta) * (z - eta) + penalty_value(spec, eta);
  };
  if (z == 0.0) return 0.0;

  // The penalty is nondecreasing, so the minimizer lies in [0, z].
  const double step = 1e-4 * std::max(1.0, z);
  const auto n = static_cast<long>(std::ceil(z / step));
  double best_eta = 0.0;
  double best_val = objective(0.0);
  for (long k = 1; k <= n; ++k) {
    const double eta = std::min(z, static_cast<double>(k) * step);
    const double val = objective(eta);
    if (val < best_val) {
      best_val = val;
      best_eta = eta;
    }
  }

  double lo = std::max(0.0, best_eta - step);
  double hi = std::min(z, best_eta + step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - inv_phi * (hi - lo);
  double b = lo + inv_phi * (hi - lo);
  double fa = objective(a);
  double fb = objective(b);
  for (int it = 0; it < 80 && hi - lo > 1e-13 * std::max(1.0, z); ++it) {
    if (fa < fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - inv_phi * (hi - lo);
      fa = objective(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + inv_phi * (hi - lo);
      fb = objective(b);
    }
  }
  const double refined = 0.5 * (lo + hi);
  // Golden section assumes unimodality near the grid optimum; keep the grid
  // point if refinement did not improve on it.
  return objective(refined) <= best_val ? refined : best_eta;
}

}  // namespace gsca
