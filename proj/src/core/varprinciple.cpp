#include "pathctl/varprinciple.hpp"

#include "pathctl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pathctl {

CandidateSet::CandidateSet(std::vector<Path> items) : items_(std::move(items)) {
  require(!items_.empty(), ErrorKind::InvalidArgument, "candidate set must be nonempty");
  for (const Path& p : items_) require_comparable(items_.front(), p);
}

double DeltaSequence::operator[](std::size_t i) const { return base * std::pow(ratio, static_cast<double>(i)); }

double DeltaSequence::tail_from(std::size_t i) const { return (*this)[i] / (1.0 - ratio); }

namespace {

void validate(const DeltaSequence& deltas, double eps) {
  require(eps > 0.0, ErrorKind::InvalidArgument, "borwein_preiss: eps must be positive");
  require(deltas.base > 0.0, ErrorKind::InvalidArgument, "borwein_preiss: delta_0 must be positive");
  require(deltas.ratio > 0.0 && deltas.ratio < 1.0, ErrorKind::InvalidArgument,
          "borwein_preiss: delta ratio must lie in (0, 1)");
}

// Deterministic order: earlier time first, then lexicographic on values.
bool earlier(const Path& a, const Path& b) { return lexicographic_less(a, b); }

}  // namespace

std::size_t pick_start(const Objective& f, const CandidateSet& domain, double eps) {
  double sup = -std::numeric_limits<double>::infinity();
  std::vector<double> values(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    values[i] = f(domain[i]);
    require(std::isfinite(values[i]), ErrorKind::NonFinite, "pick_start: objective is not finite on the domain");
    sup = std::max(sup, values[i]);
  }
  std::size_t best = domain.size();
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (values[i] < sup - eps) continue;
    if (best == domain.size() || earlier(domain[i], domain[best])) best = i;
  }
  return best;
}

BPResult borwein_preiss(const Objective& f, const GaugeFunction& rho, double eps, const Path& start,
                        const CandidateSet& domain, const BPOptions& options) {
  const DeltaSequence& deltas = options.deltas;
  validate(deltas, eps);
  require_comparable(start, domain[0]);

  const std::size_t n = domain.size();
  std::vector<double> fv(n);
  double sup_later = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    fv[i] = f(domain[i]);
    require(std::isfinite(fv[i]), ErrorKind::NonFinite, "borwein_preiss: objective is not finite (unbounded above?)");
    if (domain[i].t_index() >= start.t_index()) sup_later = std::max(sup_later, fv[i]);
  }
  const double f_start = f(start);
  require(std::isfinite(f_start), ErrorKind::NonFinite, "borwein_preiss: objective is not finite at start");
  require(f_start >= sup_later - eps, ErrorKind::Contract,
          "borwein_preiss: start is not an eps-maximizer over later candidates");

  // acc[i] = sum_k delta_k rho(p_i, gamma^k) over the trajectory so far.
  std::vector<double> acc(n, 0.0);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < n; ++i) {
    if (domain[i].t_index() < start.t_index()) continue;
    acc[i] = deltas[0] * rho(domain[i], start);
    if (fv[i] - acc[i] >= f_start) members.push_back(i);
  }
  require(!members.empty(), ErrorKind::Contract, "borwein_preiss: B_0 is empty");

  BPResult result;
  result.trajectory.push_back(start);
  result.set_sizes.push_back(members.size());

  bool final_round = options.rule == SelectionRule::Exact;
  for (std::size_t round = 1;; ++round) {
    const Path& last = result.trajectory.back();
    const bool collapsed = std::all_of(members.begin(), members.end(), [&](std::size_t i) { return domain[i] == last; });
    if (collapsed) break;

    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t i : members) sup = std::max(sup, fv[i] - acc[i]);
    const double slack = final_round ? 0.0 : deltas[round] * eps / (std::ldexp(1.0, static_cast<int>(round)) * deltas[0]);

    std::size_t chosen = n;
    for (std::size_t i : members) {
      const double g = fv[i] - acc[i];
      if (g < sup - slack) continue;
      if (chosen == n) {
        chosen = i;
      } else if (final_round) {
        const double gc = fv[chosen] - acc[chosen];
        if (g > gc || (g == gc && earlier(domain[i], domain[chosen]))) chosen = i;
      } else if (earlier(domain[i], domain[chosen])) {
        chosen = i;
      }
    }
    const Path& pick = domain[chosen];
    const double threshold = fv[chosen] - acc[chosen];
    const double weight = deltas[round];

    std::vector<std::size_t> next;
    for (std::size_t i : members) {
      if (domain[i].t_index() < pick.t_index()) continue;
      acc[i] += weight * rho(domain[i], pick);
      if (fv[i] - acc[i] >= threshold) next.push_back(i);
    }
    members = std::move(next);
    result.trajectory.push_back(pick);
    result.set_sizes.push_back(members.size());

    const double bound = eps / (std::ldexp(1.0, static_cast<int>(round)) * deltas[0]);
    if (bound < options.diameter_floor || round >= options.max_rounds) final_round = true;
    require(round < options.max_rounds + 16, ErrorKind::Divergence, "borwein_preiss: sets failed to collapse");
  }

  result.optimum = result.trajectory.back();
  result.tail_weight = deltas.tail_from(result.trajectory.size());
  for (std::size_t k = 0; k < result.trajectory.size(); ++k)
    result.perturbation_value += deltas[k] * rho(result.trajectory[k], result.optimum);
  return result;
}

double perturbed_objective(const BPResult& result, const Objective& f, const GaugeFunction& rho,
                           const DeltaSequence& deltas, const Path& p) {
  double penalty = 0.0;
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) penalty += deltas[k] * rho(result.trajectory[k], p);
  penalty += result.tail_weight * rho(result.optimum, p);
  return f(p) - penalty;
}

bool verify_bp(const BPResult& result, const Objective& f, const GaugeFunction& rho, const DeltaSequence& deltas,
               double eps, const Path& start, const CandidateSet& domain, double tol) {
  const auto& traj = result.trajectory;
  if (traj.empty() || !(traj.front() == start) || !(traj.back() == result.optimum)) return false;

  // (i): distance bounds and monotone times.
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (i > 0 && traj[i].t_index() < traj[i - 1].t_index()) return false;
    const double bound = eps / (std::ldexp(1.0, static_cast<int>(i)) * deltas[0]);
    if (rho(traj[i], result.optimum) > bound + tol) return false;
  }

  // (ii)
  const double best = perturbed_objective(result, f, rho, deltas, result.optimum);
  if (best < f(start) - tol) return false;

  // (iii): strict maximality over later-or-equal-time candidates.
  for (const Path& p : domain.items()) {
    if (p.t_index() < result.optimum.t_index() || p == result.optimum) continue;
    if (!(perturbed_objective(result, f, rho, deltas, p) < best)) return false;
  }
  return true;
}

}  // namespace pathctl
