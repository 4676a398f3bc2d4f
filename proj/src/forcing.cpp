#include "ns2d/forcing.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include "ns2d/errors.hpp"

namespace ns2d {

AdmissibilityParams validate_params(double p, double q) {
  if (!(p >= 4.0 / 3.0)) {
    throw ConfigError("admissibility: p >= 4/3 violated (p = " + std::to_string(p) + ")");
  }
  if (!(p < 2.0)) {
    throw ConfigError("admissibility: p < 2 violated (p = " + std::to_string(p) + ")");
  }
  const double bound = 2.0 * p / (p - 1.0);
  if (!(q > bound)) {
    throw ConfigError("admissibility: q > 2p/(p-1) violated (q = " + std::to_string(q) +
                      ", 2p/(p-1) = " + std::to_string(bound) + ")");
  }
  return AdmissibilityParams{p, q, p / (p - 1.0)};
}

// ---------------------------------------------------------------------------

struct ForceSpec::Node {
  struct Regular {
    FieldBuilder builder;
  };
  struct Point {
    std::array<double, 2> x0;
    Amplitude amplitude;
  };
  struct Scaled {
    double factor;
    std::shared_ptr<const Node> inner;
  };
  struct Sum {
    std::vector<std::shared_ptr<const Node>> terms;
  };
  std::variant<Regular, Point, Scaled, Sum> v;
};

namespace force_detail {

using FNode = ForceSpec::Node;

std::shared_ptr<const FNode> make_node(std::variant<FNode::Regular, FNode::Point,
                                                    FNode::Scaled, FNode::Sum> v) {
  auto node = std::make_shared<FNode>();
  node->v = std::move(v);
  return node;
}

bool node_is_zero(const FNode& n) {
  if (const auto* s = std::get_if<FNode::Scaled>(&n.v)) {
    return s->factor == 0.0 || node_is_zero(*s->inner);
  }
  if (const auto* s = std::get_if<FNode::Sum>(&n.v)) {
    for (const auto& t : s->terms) {
      if (!node_is_zero(*t)) return false;
    }
    return true;
  }
  return false;
}

bool node_has_point(const FNode& n) {
  if (std::holds_alternative<FNode::Point>(n.v)) return true;
  if (const auto* s = std::get_if<FNode::Scaled>(&n.v)) return node_has_point(*s->inner);
  if (const auto* s = std::get_if<FNode::Sum>(&n.v)) {
    for (const auto& t : s->terms) {
      if (node_has_point(*t)) return true;
    }
  }
  return false;
}

void check_point_interior(const Grid& g, const std::array<double, 2>& x0) {
  const double margin = 2.0 * g.h;
  if (!(x0[0] >= margin && x0[0] <= 1.0 - margin && x0[1] >= margin &&
        x0[1] <= 1.0 - margin)) {
    throw PreconditionError("point force at (" + std::to_string(x0[0]) + ", " +
                            std::to_string(x0[1]) + ") closer than 2h to the boundary at n=" +
                            std::to_string(g.n));
  }
}

// Bilinear interpolation of the staggered components at an interior point.
double interp_u(const VelocityField& y, double h, double x, double yy) {
  const int n = y.n;
  double gx = x / h;         // u-lattice x index
  double gy = yy / h - 0.5;  // u-lattice y index
  int i0 = static_cast<int>(std::floor(gx));
  int j0 = static_cast<int>(std::floor(gy));
  i0 = std::max(0, std::min(n - 1, i0));
  j0 = std::max(0, std::min(n - 2, j0));
  const double tx = gx - i0, ty = gy - j0;
  return (1 - tx) * (1 - ty) * y.u_at(i0, j0) + tx * (1 - ty) * y.u_at(i0 + 1, j0) +
         (1 - tx) * ty * y.u_at(i0, j0 + 1) + tx * ty * y.u_at(i0 + 1, j0 + 1);
}

double interp_v(const VelocityField& y, double h, double x, double yy) {
  const int n = y.n;
  double gx = x / h - 0.5;
  double gy = yy / h;
  int i0 = static_cast<int>(std::floor(gx));
  int j0 = static_cast<int>(std::floor(gy));
  i0 = std::max(0, std::min(n - 2, i0));
  j0 = std::max(0, std::min(n - 1, j0));
  const double tx = gx - i0, ty = gy - j0;
  return (1 - tx) * (1 - ty) * y.v_at(i0, j0) + tx * (1 - ty) * y.v_at(i0 + 1, j0) +
         (1 - tx) * ty * y.v_at(i0, j0 + 1) + tx * ty * y.v_at(i0 + 1, j0 + 1);
}

void node_moments(const FNode& n, const StokesEigenbasis& B, double t,
                  std::vector<double>& out) {
  const Grid& g = B.grid;
  if (const auto* r = std::get_if<FNode::Regular>(&n.v)) {
    VelocityField f = r->builder(g, t);
    for (int j = 0; j < B.k; ++j) out[j] += inner_L2(g, f, B.modes[j]);
    return;
  }
  if (const auto* p = std::get_if<FNode::Point>(&n.v)) {
    check_point_interior(g, p->x0);
    const auto amp = p->amplitude(t);
    for (int j = 0; j < B.k; ++j) {
      out[j] += amp[0] * interp_u(B.modes[j], g.h, p->x0[0], p->x0[1]) +
                amp[1] * interp_v(B.modes[j], g.h, p->x0[0], p->x0[1]);
    }
    return;
  }
  if (const auto* s = std::get_if<FNode::Scaled>(&n.v)) {
    std::vector<double> inner(B.k, 0.0);
    node_moments(*s->inner, B, t, inner);
    for (int j = 0; j < B.k; ++j) out[j] += s->factor * inner[j];
    return;
  }
  const auto& sum = std::get<FNode::Sum>(n.v);
  for (const auto& term : sum.terms) node_moments(*term, B, t, out);
}

void node_centers(const FNode& n, const Grid& g, double t, double factor,
                  ScalarField& fx, ScalarField& fy) {
  if (const auto* r = std::get_if<FNode::Regular>(&n.v)) {
    VelocityField f = r->builder(g, t);
    for (int i = 0; i < g.n; ++i) {
      for (int j = 0; j < g.n; ++j) {
        fx.at(i, j) += factor * 0.5 * (f.u_at(i, j) + f.u_at(i + 1, j));
        fy.at(i, j) += factor * 0.5 * (f.v_at(i, j) + f.v_at(i, j + 1));
      }
    }
    return;
  }
  if (const auto* p = std::get_if<FNode::Point>(&n.v)) {
    check_point_interior(g, p->x0);
    const auto amp = p->amplitude(t);
    // bilinear discrete delta over the four surrounding cell centers
    const double gx = p->x0[0] / g.h - 0.5, gy = p->x0[1] / g.h - 0.5;
    const int i0 = std::max(0, std::min(g.n - 2, static_cast<int>(std::floor(gx))));
    const int j0 = std::max(0, std::min(g.n - 2, static_cast<int>(std::floor(gy))));
    const double tx = gx - i0, ty = gy - j0;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const int ii[4] = {i0, i0 + 1, i0, i0 + 1};
    const int jj[4] = {j0, j0, j0 + 1, j0 + 1};
    const double ih2 = 1.0 / (g.h * g.h);
    for (int c = 0; c < 4; ++c) {
      fx.at(ii[c], jj[c]) += factor * amp[0] * w[c] * ih2;
      fy.at(ii[c], jj[c]) += factor * amp[1] * w[c] * ih2;
    }
    return;
  }
  if (const auto* s = std::get_if<FNode::Scaled>(&n.v)) {
    node_centers(*s->inner, g, t, factor * s->factor, fx, fy);
    return;
  }
  const auto& sum = std::get<FNode::Sum>(n.v);
  for (const auto& term : sum.terms) node_centers(*term, g, t, factor, fx, fy);
}

void node_faces(const FNode& n, const Grid& g, double t, double factor, VelocityField& out) {
  if (const auto* r = std::get_if<FNode::Regular>(&n.v)) {
    VelocityField f = r->builder(g, t);
    for (size_t i = 0; i < out.u.size(); ++i) out.u[i] += factor * f.u[i];
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += factor * f.v[i];
    return;
  }
  if (const auto* p = std::get_if<FNode::Point>(&n.v)) {
    check_point_interior(g, p->x0);
    const auto amp = p->amplitude(t);
    const double ih2 = 1.0 / (g.h * g.h);
    {  // u faces
      const double gx = p->x0[0] / g.h, gy = p->x0[1] / g.h - 0.5;
      const int i0 = std::max(0, std::min(g.n - 1, static_cast<int>(std::floor(gx))));
      const int j0 = std::max(0, std::min(g.n - 2, static_cast<int>(std::floor(gy))));
      const double tx = gx - i0, ty = gy - j0;
      out.u_at(i0, j0) += factor * amp[0] * (1 - tx) * (1 - ty) * ih2;
      out.u_at(i0 + 1, j0) += factor * amp[0] * tx * (1 - ty) * ih2;
      out.u_at(i0, j0 + 1) += factor * amp[0] * (1 - tx) * ty * ih2;
      out.u_at(i0 + 1, j0 + 1) += factor * amp[0] * tx * ty * ih2;
    }
    {  // v faces
      const double gx = p->x0[0] / g.h - 0.5, gy = p->x0[1] / g.h;
      const int i0 = std::max(0, std::min(g.n - 2, static_cast<int>(std::floor(gx))));
      const int j0 = std::max(0, std::min(g.n - 1, static_cast<int>(std::floor(gy))));
      const double tx = gx - i0, ty = gy - j0;
      out.v_at(i0, j0) += factor * amp[1] * (1 - tx) * (1 - ty) * ih2;
      out.v_at(i0 + 1, j0) += factor * amp[1] * tx * (1 - ty) * ih2;
      out.v_at(i0, j0 + 1) += factor * amp[1] * (1 - tx) * ty * ih2;
      out.v_at(i0 + 1, j0 + 1) += factor * amp[1] * tx * ty * ih2;
    }
    return;
  }
  if (const auto* s = std::get_if<FNode::Scaled>(&n.v)) {
    node_faces(*s->inner, g, t, factor * s->factor, out);
    return;
  }
  const auto& sum = std::get<FNode::Sum>(n.v);
  for (const auto& term : sum.terms) node_faces(*term, g, t, factor, out);
}

}  // namespace force_detail

ForceSpec ForceSpec::zero() {
  ForceSpec f;
  f.node_ = force_detail::make_node(force_detail::FNode::Sum{});
  return f;
}

ForceSpec ForceSpec::regular(FieldBuilder builder) {
  ForceSpec f;
  f.node_ = force_detail::make_node(force_detail::FNode::Regular{std::move(builder)});
  return f;
}

ForceSpec ForceSpec::point(std::array<double, 2> x0, Amplitude amplitude) {
  ForceSpec f;
  f.node_ = force_detail::make_node(force_detail::FNode::Point{x0, std::move(amplitude)});
  return f;
}

ForceSpec ForceSpec::scaled(double factor, ForceSpec inner) {
  ForceSpec f;
  f.node_ = force_detail::make_node(force_detail::FNode::Scaled{factor, inner.node_});
  return f;
}

ForceSpec ForceSpec::sum(std::vector<ForceSpec> terms) {
  ForceSpec f;
  force_detail::FNode::Sum s;
  s.terms.reserve(terms.size());
  for (auto& t : terms) s.terms.push_back(t.node_);
  f.node_ = force_detail::make_node(std::move(s));
  return f;
}

bool ForceSpec::is_zero() const { return node_ == nullptr || force_detail::node_is_zero(*node_); }

bool ForceSpec::has_point() const { return node_ != nullptr && force_detail::node_has_point(*node_); }

std::vector<double> ForceSpec::moments(const StokesEigenbasis& B, double t) const {
  std::vector<double> out(B.k, 0.0);
  if (node_) force_detail::node_moments(*node_, B, t, out);
  return out;
}

void ForceSpec::eval_on_centers(const Grid& g, double t, ScalarField& fx,
                                ScalarField& fy) const {
  fx = ScalarField(g);
  fy = ScalarField(g);
  if (node_) force_detail::node_centers(*node_, g, t, 1.0, fx, fy);
}

VelocityField ForceSpec::eval_on_faces(const Grid& g, double t) const {
  VelocityField out(g);
  if (node_) force_detail::node_faces(*node_, g, t, 1.0, out);
  return out;
}

std::vector<double> force_moments(const ForceSpec& F, const StokesEigenbasis& B, double t) {
  return F.moments(B, t);
}

double dual_norm_estimate(const ForceSpec& F, const Grid& g, double t, double p) {
  if (!(p > 1.0 && p <= 4.0)) {
    throw ConfigError("dual_norm_estimate requires p in (1, 4], got " + std::to_string(p));
  }
  ScalarField fx, fy;
  F.eval_on_centers(g, t, fx, fy);
  ScalarField Wx = solve_poisson_dirichlet(g, fx);
  ScalarField Wy = solve_poisson_dirichlet(g, fy);

  // |grad W|^2 at centers from face-located differences; Dirichlet walls enter
  // through ghost reflection (value -inside).
  const int n = g.n;
  const double ih = 1.0 / g.h;
  auto gradsq = [&](const ScalarField& W, int i, int j) {
    auto gx = [&](int a, int b) {  // d/dx at vertical face (a, b), a = 0..n
      const double right = (a <= n - 1) ? W.at(a, b) : -W.at(a - 1, b);
      const double left = (a >= 1) ? W.at(a - 1, b) : -W.at(a, b);
      return (right - left) * ih;
    };
    auto gy = [&](int a, int b) {
      const double top = (b <= n - 1) ? W.at(a, b) : -W.at(a, b - 1);
      const double bot = (b >= 1) ? W.at(a, b - 1) : -W.at(a, b);
      return (top - bot) * ih;
    };
    const double x0 = gx(i, j), x1 = gx(i + 1, j);
    const double y0 = gy(i, j), y1 = gy(i, j + 1);
    return 0.5 * (x0 * x0 + x1 * x1) + 0.5 * (y0 * y0 + y1 * y1);
  };
  double acc = 0.0;
  const double half_p = 0.5 * p;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = gradsq(Wx, i, j) + gradsq(Wy, i, j);
      acc += std::pow(s, half_p);
    }
  }
  return std::pow(acc * g.h * g.h, 1.0 / p);
}

}  // namespace ns2d
