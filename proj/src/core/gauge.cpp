#include "pathctl/gauge.hpp"

#include "pathctl/error.hpp"

#include <algorithm>
#include <cmath>

namespace pathctl {

void GaugeParams::validate() const {
  require(m >= 1 && m <= kMaxM, ErrorKind::InvalidArgument, "gauge: m must lie in [1, 6]");
  require(std::isfinite(M), ErrorKind::InvalidArgument, "gauge: M must be finite");
}

namespace {

// |x|^{2k} from the squared norm.
double even_power(double sq, int k) { return k == 0 ? 1.0 : std::pow(sq, k); }

double endpoint_gap_sq(const Path& p, const Path& q) { return (p.endpoint() - q.endpoint()).squaredNorm(); }

}  // namespace

double s_m(const Path& p, const Path& q, const GaugeParams& g) {
  g.validate();
  const double sup = sup_distance(p, q);
  if (sup == 0.0) return 0.0;
  const double n2m = even_power(sup * sup, g.m);
  const double e2m = even_power(endpoint_gap_sq(p, q), g.m);
  // sup >= endpoint gap, so a negative difference is rounding only.
  const double diff = std::max(0.0, n2m - e2m);
  return diff * diff * diff / (n2m * n2m);
}

double upsilon(const Path& p, const Path& q, const GaugeParams& g) {
  return s_m(p, q, g) + g.M * even_power(endpoint_gap_sq(p, q), g.m);
}

double upsilon_bar(const Path& p, const Path& q, const GaugeParams& g) {
  const double gap = (static_cast<double>(p.t_index()) - static_cast<double>(q.t_index())) * p.dt();
  return upsilon(p, q, g) + gap * gap;
}

double upsilon_norm(const Path& p, const GaugeParams& g) {
  return upsilon(p, Path::zero(p.dim(), p.t_index(), p.dt()), g);
}

BranchInfo classify_branch(const Path& p, const Path& anchor) {
  require(anchor.t_index() <= p.t_index(), ErrorKind::OutOfRange, "gauge: anchor time after path time");
  BranchInfo info{GaugeBranch::Singular, std::sqrt(endpoint_gap_sq(p, anchor)), sup_distance_before_end(p, anchor)};
  const double sup = std::max(info.endpoint_gap, info.interior_sup);
  if (sup < kSingularThreshold) return info;
  if (info.endpoint_gap > info.interior_sup) {
    info.branch = GaugeBranch::EndpointDominant;
  } else if (info.endpoint_gap == info.interior_sup) {
    info.branch = GaugeBranch::Tie;
  } else {
    info.branch = GaugeBranch::InteriorDominant;
  }
  return info;
}

Vector grad_s(const Path& p, const Path& anchor, const GaugeParams& g) {
  g.validate();
  const BranchInfo info = classify_branch(p, anchor);
  Vector out = Vector::Zero(static_cast<Eigen::Index>(p.dim()));
  if (info.branch != GaugeBranch::InteriorDominant) return out;

  const int m = g.m;
  const Vector e = p.endpoint() - anchor.endpoint();
  const double e_sq = e.squaredNorm();
  const double n2m = even_power(info.interior_sup * info.interior_sup, m);
  const double gap = n2m - even_power(e_sq, m);
  out = (-6.0 * m * gap * gap * even_power(e_sq, m - 1) / (n2m * n2m)) * e;
  return out;
}

Matrix hess_s(const Path& p, const Path& anchor, const GaugeParams& g) {
  g.validate();
  const BranchInfo info = classify_branch(p, anchor);
  const auto d = static_cast<Eigen::Index>(p.dim());
  Matrix out = Matrix::Zero(d, d);
  if (info.branch != GaugeBranch::InteriorDominant) return out;

  const int m = g.m;
  const Vector e = p.endpoint() - anchor.endpoint();
  const double e_sq = e.squaredNorm();
  const double n2m = even_power(info.interior_sup * info.interior_sup, m);
  const double n4m = n2m * n2m;
  const double gap = n2m - even_power(e_sq, m);
  const Matrix outer = e * e.transpose();

  out += (24.0 * m * m * gap * even_power(e_sq, 2 * m - 2) / n4m) * outer;
  if (m >= 2) out -= (12.0 * m * (m - 1) * gap * gap * even_power(e_sq, m - 2) / n4m) * outer;
  out -= (6.0 * m * gap * gap * even_power(e_sq, m - 1) / n4m) * Matrix::Identity(d, d);
  return 0.5 * (out + out.transpose());
}

Vector grad_power(const Path& p, const Vector& a, int m) {
  require(m >= 1, ErrorKind::InvalidArgument, "grad_power: m must be >= 1");
  const Vector e = p.endpoint() - a;
  return (2.0 * m * even_power(e.squaredNorm(), m - 1)) * e;
}

Matrix hess_power(const Path& p, const Vector& a, int m) {
  require(m >= 1, ErrorKind::InvalidArgument, "hess_power: m must be >= 1");
  const Vector e = p.endpoint() - a;
  const double e_sq = e.squaredNorm();
  const auto d = e.size();
  Matrix out = (2.0 * m * even_power(e_sq, m - 1)) * Matrix::Identity(d, d);
  if (m >= 2) out += (4.0 * m * (m - 1) * even_power(e_sq, m - 2)) * (e * e.transpose());
  return out;
}

Vector grad_upsilon(const Path& p, const Path& anchor, const GaugeParams& g) {
  return grad_s(p, anchor, g) + g.M * grad_power(p, anchor.endpoint(), g.m);
}

Matrix hess_upsilon(const Path& p, const Path& anchor, const GaugeParams& g) {
  return hess_s(p, anchor, g) + g.M * hess_power(p, anchor.endpoint(), g.m);
}

double subadditivity_gap(const Path& p, const Path& q, const GaugeParams& g) {
  require_comparable(p, q);
  require(p.t_index() == q.t_index(), ErrorKind::InvalidArgument, "subadditivity_gap: paths must share their time");
  const Path sum(p.values() + q.values(), p.dt());
  return std::ldexp(upsilon_norm(p, g) + upsilon_norm(q, g), 2 * g.m - 1) - upsilon_norm(sum, g);
}

PathFunctional upsilon_functional(const Path& anchor, const GaugeParams& g) {
  g.validate();
  PathFunctional f;
  f.eval = [anchor, g](const Path& p) { return upsilon(p, anchor, g); };
  f.analytic_dt = [](const Path&) { return 0.0; };
  f.analytic_dx = [anchor, g](const Path& p) { return grad_upsilon(p, anchor, g); };
  f.analytic_dxx = [anchor, g](const Path& p) { return hess_upsilon(p, anchor, g); };
  return f;
}

PathFunctional upsilon_bar_functional(const Path& anchor, const GaugeParams& g) {
  PathFunctional f = upsilon_functional(anchor, g);
  f.eval = [anchor, g](const Path& p) { return upsilon_bar(p, anchor, g); };
  f.analytic_dt = [anchor](const Path& p) { return 2.0 * (p.time() - anchor.time()); };
  return f;
}

PathFunctional power_functional(const Vector& a, int m) {
  PathFunctional f;
  f.eval = [a, m](const Path& p) { return even_power((p.endpoint() - a).squaredNorm(), m); };
  f.analytic_dt = [](const Path&) { return 0.0; };
  f.analytic_dx = [a, m](const Path& p) { return grad_power(p, a, m); };
  f.analytic_dxx = [a, m](const Path& p) { return hess_power(p, a, m); };
  return f;
}

}  // namespace pathctl
