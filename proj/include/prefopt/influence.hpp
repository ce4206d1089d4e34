#pragma once

#include <vector>

#include "prefopt/objectives.hpp"

namespace prefopt {

/// Sampled influence weights over a margin grid. `divergent` marks
/// variants whose weight grows without bound (IPO).
struct IFCurve {
  LossSpec spec;
  std::vector<double> grid;
  std::vector<double> weights;
  bool divergent = false;
};

/// Per-sample scalar multiplying the gradient direction:
///   DPO       sigma(-g)
///   cDPO      (1-c) sigma(-g) + c sigma(g)
///   R-DPO     [(1-c) sigma(-g) + c sigma(g)] / (1-2c)
///   IPO       |2 (g/beta - 1/(2 beta))|
///   Dr. DPO   sigma(-g)            (point-mass batch weight)
///   Holder    sigma(g)^gamma sigma(-g)
double if_weight(const LossSpec& spec, double g, double beta = 0.1);

IFCurve if_curve(const LossSpec& spec, double g_min, double g_max, int n_points, double beta = 0.1);

/// True iff the weight has redescended below tol at the probe margin.
bool redescending_check(const LossSpec& spec, double g_probe, double tol, double beta = 0.1);

void write_curve(const IFCurve& curve, const std::string& path);

}  // namespace prefopt
