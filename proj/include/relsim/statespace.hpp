#pragma once

// Product state spaces X = X_I x X_M x X_D (optionally m-fold with pairwise
// separation between actors), uniform sampling, and the reflecting
// perturbation kernel D(x, r).
//
// A point is stored flat: for each actor, the coordinates of every component
// in declaration order. Interval blocks contribute one coordinate per
// dimension, an n-sphere contributes n + 1, a discrete block one value.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "relsim/rng.hpp"

namespace relsim {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  /// lo == hi is only accepted when this is set.
  bool degenerate = false;
};

struct IntervalBlock {
  std::vector<Interval> dims;
};

/// Unit n-sphere embedded in R^{n+1}.
struct SphereBlock {
  std::size_t n = 1;
};

/// Ordered finite set; perturbation radius is measured in index distance.
struct DiscreteBlock {
  std::vector<double> values;
};

using Component = std::variant<IntervalBlock, SphereBlock, DiscreteBlock>;

struct NamedComponent {
  std::string name;
  Component component;
};

/// |x^i_J - x^j_J| > r_ij for all actor pairs i != j, J = `coords` (indices into
/// one actor's coordinates), Euclidean distance.
struct SeparationConstraint {
  std::vector<std::size_t> coords;
  /// actors x actors, row-major, symmetric, zero diagonal ignored.
  std::vector<double> radii;

  double radius(std::size_t i, std::size_t j, std::size_t actors) const {
    return radii[i * actors + j];
  }
};

class StatePoint {
 public:
  StatePoint() = default;
  explicit StatePoint(std::vector<double> coords) : coords_(std::move(coords)) {}

  std::size_t size() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }
  std::span<double> coords() noexcept { return coords_; }

  friend bool operator==(const StatePoint&, const StatePoint&) = default;

 private:
  std::vector<double> coords_;
};

/// One radius per component (shared across actors). Discrete radii may be +inf
/// (full uniform resample).
struct PerturbationRadii {
  std::vector<double> per_component;

  static PerturbationRadii zeros(std::size_t components) {
    return PerturbationRadii{std::vector<double>(components, 0.0)};
  }
  friend bool operator==(const PerturbationRadii&, const PerturbationRadii&) = default;
};

class StateSpace {
 public:
  StateSpace() = default;
  /// Throws ConfigError when an invariant is violated.
  StateSpace(std::vector<NamedComponent> components, std::size_t actors = 1,
             std::vector<SeparationConstraint> separation = {});

  const std::vector<NamedComponent>& components() const noexcept { return components_; }
  std::size_t actors() const noexcept { return actors_; }
  const std::vector<SeparationConstraint>& separation() const noexcept { return separation_; }
  bool constrained() const noexcept { return !separation_.empty(); }

  /// Coordinates per actor and in total.
  std::size_t actor_dim() const noexcept { return actor_dim_; }
  std::size_t dim() const noexcept { return actor_dim_ * actors_; }
  /// Offset of component c inside one actor's coordinates.
  std::size_t offset(std::size_t component) const { return offsets_[component]; }
  std::size_t width(std::size_t component) const;

  /// Indices of interval coordinates (actor 0).
  std::vector<std::size_t> interval_coords() const;

  /// Human-readable reason `x` is not an element of the space, or nullopt.
  std::optional<std::string> violation(const StatePoint& x, double sphere_tol = 1e-12) const;
  bool contains(const StatePoint& x, double sphere_tol = 1e-12) const {
    return !violation(x, sphere_tol).has_value();
  }
  /// Strict separation between every actor pair.
  bool separated(const StatePoint& x) const;
  bool separated_actor(const StatePoint& x, std::size_t actor) const;

  void validate(const PerturbationRadii& r) const;

  friend bool operator==(const StateSpace& a, const StateSpace& b);

 private:
  std::vector<NamedComponent> components_;
  std::size_t actors_ = 1;
  std::vector<SeparationConstraint> separation_;
  std::vector<std::size_t> offsets_;
  std::size_t actor_dim_ = 0;
};

struct SamplingOptions {
  /// Metropolis steps after the first feasible point under separation.
  std::size_t burn_in = 200;
  /// Rejection attempts for the first feasible point.
  std::size_t max_initial_attempts = 1'000'000;
  /// Rejections tolerated per constrained perturbation.
  std::size_t retry_cap = 10'000;
};

// ---- primitive kernels ----------------------------------------------------

/// Endpoint of the billiard trajectory x + t*delta, t in [0, 1], in [lo, hi].
double reflect_interval(double x, double delta, double lo, double hi);

/// Batched reflect_interval (SIMD-dispatched), x updated in place.
void reflect_interval_batch(std::span<double> x, std::span<const double> delta, double lo,
                            double hi);

/// Acceptance rule for a raw draw q in [-1,1]^{n+1}: accepted iff
/// 1e-6 < |q| < 1, in which case the normalized vector is returned.
std::optional<std::vector<double>> accept_sphere_draw(std::span<const double> raw);

/// Uniform point on S^n by acceptance-rejection in the enclosing cube.
std::vector<double> sample_sphere_uniform(std::size_t n, RandomStream& rng);

// ---- sampling and perturbation ---------------------------------------------

/// Uniform draw on the A1 base space (all actors independent, no constraints).
StatePoint sample_uniform_base(const StateSpace& space, RandomStream& rng);

/// Uniform draw on the space. Dispatches to sample_uniform_constrained when
/// separation constraints are present.
StatePoint sample_uniform(const StateSpace& space, RandomStream& rng,
                          const SamplingOptions& options = {});

struct ConstrainedSample {
  StatePoint point;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t initial_attempts = 0;
};

/// Metropolis chain on the m-fold product with independent uniform proposals,
/// rejecting proposals that violate separation; returns the state after
/// `burn_in` steps. Throws ConstraintError when no feasible start is found.
ConstrainedSample sample_uniform_constrained(const StateSpace& space, std::size_t burn_in,
                                             RandomStream& rng,
                                             const SamplingOptions& options = {});

/// Draw from D(x, r). Throws ConstraintError when separation cannot be
/// restored within options.retry_cap redraws.
StatePoint perturb(const StatePoint& x, const PerturbationRadii& r, const StateSpace& space,
                   RandomStream& rng, const SamplingOptions& options = {});

/// Index of `value` in the block's ordered value list, or nullopt.
std::optional<std::size_t> discrete_index(const DiscreteBlock& block, double value);

}  // namespace relsim
