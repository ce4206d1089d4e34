#include "prefopt/influence.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace prefopt {

double if_weight(const LossSpec& spec, double g, double beta) {
  spec.validate();
  if (!std::isfinite(g)) throw std::invalid_argument("margin must be finite");
  switch (spec.variant) {
    case LossVariant::DPO:
      return sigmoid(-g);
    case LossVariant::CDPO:
      return (1.0 - spec.c) * sigmoid(-g) + spec.c * sigmoid(g);
    case LossVariant::RDPO:
      return ((1.0 - spec.c) * sigmoid(-g) + spec.c * sigmoid(g)) / (1.0 - 2.0 * spec.c);
    case LossVariant::IPO:
      return std::abs(2.0 * (g / beta - 0.5 / beta));
    case LossVariant::DRDPO:
      return sigmoid(-g);
    case LossVariant::HOLDER:
      return sigmoid_pow(g, spec.gamma) * sigmoid(-g);
  }
  return 0.0;
}

IFCurve if_curve(const LossSpec& spec, double g_min, double g_max, int n_points, double beta) {
  if (!(g_min < g_max)) throw std::invalid_argument("g_min must be below g_max");
  if (n_points < 2) throw std::invalid_argument("need at least 2 grid points");
  IFCurve curve;
  curve.spec = spec;
  curve.divergent = spec.variant == LossVariant::IPO;
  curve.grid.resize(n_points);
  curve.weights.resize(n_points);
  double h = (g_max - g_min) / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    curve.grid[i] = g_min + h * i;
    curve.weights[i] = if_weight(spec, curve.grid[i], beta);
  }
  return curve;
}

bool redescending_check(const LossSpec& spec, double g_probe, double tol, double beta) {
  if (g_probe > -20.0) throw std::invalid_argument("probe margin must be <= -20");
  return if_weight(spec, g_probe, beta) < tol;
}

void write_curve(const IFCurve& curve, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    char header[160];
    std::snprintf(header, sizeof header,
                  "# variant=%s c=%g beta_prime=%g gamma=%g phi=%s divergent=%d\n",
                  variant_name(curve.spec.variant).c_str(), curve.spec.c, curve.spec.beta_prime,
                  curve.spec.gamma, curve.spec.phi == HolderPhi::DP ? "dp" : "ps",
                  curve.divergent ? 1 : 0);
    out << header << "# g weight\n";
    char line[80];
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g %.17g\n", curve.grid[i], curve.weights[i]);
      out << line;
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

}  // namespace prefopt
