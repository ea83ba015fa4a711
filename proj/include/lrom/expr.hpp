#pragma once

#include "lrom/geometry.hpp"

#include <functional>
#include <string>

namespace lrom::expr {

/// Parses expressions of the form "0.3", "mu0", "mu0 + 0.2", "0.5*mu1",
/// i.e. sums of terms affine in the parameter components. Anything else
/// (products of parameters, unknown symbols) is a config error.
geometry::AffineExpr parse_affine(const std::string& text, Index n_params);

/// Parses 2D polynomial source expressions such as "1", "2*x*y", "x^2 - y".
std::function<double(double, double)> parse_xy_poly(const std::string& text);

}  // namespace lrom::expr
