#pragma once

#include "pathctl/path.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace pathctl {

using Objective = std::function<double(const Path&)>;
using GaugeFunction = std::function<double(const Path&, const Path&)>;

/// Finite surrogate for [t, T] x Lambda^t. All members share dt and d.
class CandidateSet {
 public:
  explicit CandidateSet(std::vector<Path> items);

  const std::vector<Path>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const Path& operator[](std::size_t i) const { return items_[i]; }

 private:
  std::vector<Path> items_;
};

/// delta_i = base * ratio^i.
struct DeltaSequence {
  double base = 1.0;
  double ratio = 0.5;

  double operator[](std::size_t i) const;
  /// sum_{k >= i} delta_k
  double tail_from(std::size_t i) const;
};

enum class SelectionRule {
  Exact,              // argmax of the current perturbed objective
  EarliestWithinSlack // earliest-time point within the round's slack of the sup
};

struct BPOptions {
  DeltaSequence deltas;
  SelectionRule rule = SelectionRule::EarliestWithinSlack;
  double diameter_floor = 1e-12;
  std::size_t max_rounds = 64;
};

struct BPResult {
  Path optimum;
  /// gamma^0 = start, gamma^1, ..., gamma^N = optimum. Later terms of the
  /// series repeat the optimum and are summarized by `tail_weight`.
  std::vector<Path> trajectory;
  double tail_weight = 0.0;
  /// sum_k delta_k rho(gamma^k, optimum) (the tail contributes 0).
  double perturbation_value = 0.0;
  /// |B_0|, |B_1|, ..., nested and ending at 1.
  std::vector<std::size_t> set_sizes;
};

/// Constructive Borwein-Preiss principle on a finite candidate set: selects
/// gamma^i inside B_{i-1} within slack delta_i eps / (2^i delta_0), shrinks the
/// sets, and finishes with an exact round once the rho-diameter bound drops
/// below the floor. Throws Contract if `start` violates f(start) >= sup f - eps
/// or B_0 is empty.
BPResult borwein_preiss(const Objective& f, const GaugeFunction& rho, double eps, const Path& start,
                        const CandidateSet& domain, const BPOptions& options = {});

/// f(p) - sum_k delta_k rho(gamma^k, p) including the tail.
double perturbed_objective(const BPResult& result, const Objective& f, const GaugeFunction& rho,
                           const DeltaSequence& deltas, const Path& p);

/// Independent check of the three conclusions of the principle on the
/// candidate set: distance bounds with non-decreasing times, the value
/// inequality, and strict maximality over later-or-equal-time candidates.
bool verify_bp(const BPResult& result, const Objective& f, const GaugeFunction& rho, const DeltaSequence& deltas,
               double eps, const Path& start, const CandidateSet& domain, double tol = 1e-10);

/// Earliest-time candidate (lexicographic tie-break) with f >= sup f - eps.
std::size_t pick_start(const Objective& f, const CandidateSet& domain, double eps);

}  // namespace pathctl
