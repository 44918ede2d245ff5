#pragma once

// Bregman divergences D(p, q) = phi(p) - phi(q) - <grad phi(q), p - q> for
// the three potentials the CL objective is built from.

#include <span>
#include <vector>

namespace clref::bregman {

enum class PotentialKind { neg_entropy, squared_norm, fisher_quadratic };

/// Tolerance on |sum(p) - 1| for simplex inputs. Inputs inside it are
/// renormalized, inputs outside are rejected.
inline constexpr double kSimplexTolerance = 1e-9;

class Potential {
 public:
  /// phi(p) = sum p_i log p_i on the probability simplex.
  static Potential neg_entropy();
  /// phi(p) = ||p||^2.
  static Potential squared_norm();
  /// phi(t) = 1/2 t^T diag(F) t, with F >= 0.
  static Potential fisher_quadratic(std::vector<double> fisher);

  PotentialKind kind() const { return kind_; }
  const std::vector<double>& fisher() const { return fisher_; }

  double value(std::span<const double> p) const;
  std::vector<double> gradient(std::span<const double> p) const;

 private:
  explicit Potential(PotentialKind kind, std::vector<double> fisher = {})
      : kind_(kind), fisher_(std::move(fisher)) {}
  PotentialKind kind_;
  std::vector<double> fisher_;
};

/// Evaluates the Bregman definition literally. Returns +infinity under
/// neg_entropy when q has a zero where p does not.
double divergence(const Potential& phi, std::span<const double> p, std::span<const double> q);

/// sum p_i log(p_i / q_i), with 0 log 0 = 0; +infinity if q_i = 0 < p_i.
double kl_discrete(std::span<const double> p, std::span<const double> q);

/// -sum p_i log p_i.
double entropy(std::span<const double> p);

/// Checks nonnegativity and |sum - 1| <= kSimplexTolerance, then
/// renormalizes. Throws ContractError otherwise.
std::vector<double> to_simplex(std::span<const double> p);

}  // namespace clref::bregman
