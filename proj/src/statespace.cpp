#include "relsim/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relsim/errors.hpp"
#include "relsim/kernels.hpp"

namespace relsim {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t component_width(const Component& c) {
  return std::visit(Overloaded{[](const IntervalBlock& b) { return b.dims.size(); },
                               [](const SphereBlock& s) { return s.n + 1; },
                               [](const DiscreteBlock&) { return std::size_t{1}; }},
                    c);
}

bool equal_components(const Component& a, const Component& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ia = std::get_if<IntervalBlock>(&a)) {
    const auto& ib = std::get<IntervalBlock>(b);
    if (ia->dims.size() != ib.dims.size()) return false;
    for (std::size_t d = 0; d < ia->dims.size(); ++d) {
      if (ia->dims[d].lo != ib.dims[d].lo || ia->dims[d].hi != ib.dims[d].hi ||
          ia->dims[d].degenerate != ib.dims[d].degenerate) {
        return false;
      }
    }
    return true;
  }
  if (const auto* sa = std::get_if<SphereBlock>(&a)) return sa->n == std::get<SphereBlock>(b).n;
  return std::get<DiscreteBlock>(a).values == std::get<DiscreteBlock>(b).values;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void perturb_actor(std::span<const double> in, std::span<double> out,
                   const PerturbationRadii& r, const StateSpace& space, RandomStream& rng) {
  const auto& comps = space.components();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const double radius = r.per_component[c];
    const std::size_t off = space.offset(c);
    std::visit(
        Overloaded{
            [&](const IntervalBlock& b) {
              for (std::size_t d = 0; d < b.dims.size(); ++d) {
                const double x = in[off + d];
                if (radius == 0.0) {
                  out[off + d] = x;
                  continue;
                }
                const double delta = rng.uniform(-radius, radius);
                out[off + d] = reflect_interval(x, delta, b.dims[d].lo, b.dims[d].hi);
              }
            },
            [&](const SphereBlock& s) {
              const std::size_t k = s.n + 1;
              if (radius == 0.0) {
                std::copy_n(in.begin() + off, k, out.begin() + off);
                return;
              }
              std::vector<double> q(k);
              for (;;) {
                for (std::size_t d = 0; d < k; ++d) q[d] = in[off + d] + rng.uniform(-radius, radius);
                const double nq = norm(q);
                if (nq > 1e-12 && std::isfinite(nq)) {
                  for (std::size_t d = 0; d < k; ++d) out[off + d] = q[d] / nq;
                  return;
                }
              }
            },
            [&](const DiscreteBlock& b) {
              const double x = in[off];
              if (radius == 0.0) {
                out[off] = x;
                return;
              }
              const std::size_t n = b.values.size();
              const auto idx = discrete_index(b, x);
              if (!idx) throw ConfigError("perturb: discrete value not in its set");
              std::size_t first = 0;
              std::size_t last = n - 1;
              if (std::isfinite(radius) && radius < static_cast<double>(n)) {
                const auto reach = static_cast<std::size_t>(std::floor(radius));
                first = *idx >= reach ? *idx - reach : 0;
                last = std::min(n - 1, *idx + reach);
              }
              out[off] = b.values[first + rng.below(last - first + 1)];
            }},
        comps[c].component);
  }
}

void sample_actor(std::span<double> out, const StateSpace& space, RandomStream& rng) {
  const auto& comps = space.components();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const std::size_t off = space.offset(c);
    std::visit(Overloaded{[&](const IntervalBlock& b) {
                            for (std::size_t d = 0; d < b.dims.size(); ++d) {
                              out[off + d] = rng.uniform(b.dims[d].lo, b.dims[d].hi);
                            }
                          },
                          [&](const SphereBlock& s) {
                            const auto q = sample_sphere_uniform(s.n, rng);
                            std::copy(q.begin(), q.end(), out.begin() + off);
                          },
                          [&](const DiscreteBlock& b) {
                            out[off] = b.values[rng.below(b.values.size())];
                          }},
               comps[c].component);
  }
}

double separation_distance(const StatePoint& x, const SeparationConstraint& sc, std::size_t i,
                           std::size_t j, std::size_t actor_dim) {
  double s = 0.0;
  for (std::size_t c : sc.coords) {
    const double d = x[i * actor_dim + c] - x[j * actor_dim + c];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

StateSpace::StateSpace(std::vector<NamedComponent> components, std::size_t actors,
                       std::vector<SeparationConstraint> separation)
    : components_(std::move(components)), actors_(actors), separation_(std::move(separation)) {
  if (components_.empty()) throw ConfigError("state space needs at least one component");
  if (actors_ == 0) throw ConfigError("state space needs at least one actor");
  for (auto& nc : components_) {
    if (auto* b = std::get_if<IntervalBlock>(&nc.component)) {
      if (b->dims.empty()) throw ConfigError("interval block '" + nc.name + "' has no dimensions");
      for (const auto& iv : b->dims) {
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
          throw ConfigError("interval block '" + nc.name + "' has non-finite bounds");
        }
        if (iv.lo > iv.hi || (iv.lo == iv.hi && !iv.degenerate)) {
          throw ConfigError("interval block '" + nc.name +
                            "' needs lo < hi (zero width only when flagged degenerate)");
        }
      }
    } else if (auto* s = std::get_if<SphereBlock>(&nc.component)) {
      if (s->n < 1) throw ConfigError("sphere '" + nc.name + "' needs dimension n >= 1");
    } else {
      auto& d = std::get<DiscreteBlock>(nc.component);
      if (d.values.empty()) throw ConfigError("discrete block '" + nc.name + "' is empty");
      std::sort(d.values.begin(), d.values.end());
      if (std::adjacent_find(d.values.begin(), d.values.end()) != d.values.end()) {
        throw ConfigError("discrete block '" + nc.name + "' has duplicate values");
      }
    }
    offsets_.push_back(actor_dim_);
    actor_dim_ += component_width(nc.component);
  }
  if (!separation_.empty() && actors_ < 2) {
    throw ConfigError("separation constraints need at least two actors");
  }
  for (const auto& sc : separation_) {
    if (sc.coords.empty()) throw ConfigError("separation constraint with no coordinates");
    for (std::size_t c : sc.coords) {
      if (c >= actor_dim_) throw ConfigError("separation coordinate out of range");
    }
    if (sc.radii.size() != actors_ * actors_) {
      throw ConfigError("separation radii must be an actors x actors matrix");
    }
    for (std::size_t i = 0; i < actors_; ++i) {
      for (std::size_t j = 0; j < actors_; ++j) {
        const double r = sc.radius(i, j, actors_);
        if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("separation radii must be >= 0");
        if (r != sc.radius(j, i, actors_)) throw ConfigError("separation radii must be symmetric");
      }
    }
  }
}

std::size_t StateSpace::width(std::size_t component) const {
  return component_width(components_.at(component).component);
}

std::vector<std::size_t> StateSpace::interval_coords() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < components_.size(); ++c) {
    if (const auto* b = std::get_if<IntervalBlock>(&components_[c].component)) {
      for (std::size_t d = 0; d < b->dims.size(); ++d) out.push_back(offsets_[c] + d);
    }
  }
  return out;
}

std::optional<std::string> StateSpace::violation(const StatePoint& x, double sphere_tol) const {
  if (x.size() != dim()) {
    return "expected " + std::to_string(dim()) + " coordinates, got " + std::to_string(x.size());
  }
  for (std::size_t a = 0; a < actors_; ++a) {
    const std::size_t base = a * actor_dim_;
    for (std::size_t c = 0; c < components_.size(); ++c) {
      const std::size_t off = base + offsets_[c];
      const auto& nc = components_[c];
      if (const auto* b = std::get_if<IntervalBlock>(&nc.component)) {
        for (std::size_t d = 0; d < b->dims.size(); ++d) {
          const double v = x[off + d];
          if (!(v >= b->dims[d].lo && v <= b->dims[d].hi)) {
            std::ostringstream os;
            os << nc.name << "[" << d << "] = " << v << " outside [" << b->dims[d].lo << ", "
               << b->dims[d].hi << "]";
            return os.str();
          }
        }
      } else if (const auto* s = std::get_if<SphereBlock>(&nc.component)) {
        const double n = norm(x.coords().subspan(off, s->n + 1));
        if (!(std::abs(n - 1.0) <= sphere_tol)) {
          std::ostringstream os;
          os << nc.name << " has norm " << n;
          return os.str();
        }
      } else {
        if (!discrete_index(std::get<DiscreteBlock>(nc.component), x[off])) {
          return nc.name + " value not in its set";
        }
      }
    }
  }
  if (!separated(x)) return "separation constraint violated";
  return std::nullopt;
}

bool StateSpace::separated(const StatePoint& x) const {
  for (std::size_t a = 1; a < actors_; ++a) {
    if (!separated_actor(x, a)) return false;
  }
  return true;
}

bool StateSpace::separated_actor(const StatePoint& x, std::size_t actor) const {
  for (const auto& sc : separation_) {
    for (std::size_t other = 0; other < actors_; ++other) {
      if (other == actor) continue;
      if (!(separation_distance(x, sc, actor, other, actor_dim_) > sc.radius(actor, other, actors_))) {
        return false;
      }
    }
  }
  return true;
}

void StateSpace::validate(const PerturbationRadii& r) const {
  if (r.per_component.size() != components_.size()) {
    throw ConfigError("perturbation radii: expected " + std::to_string(components_.size()) +
                      " entries, got " + std::to_string(r.per_component.size()));
  }
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const double v = r.per_component[c];
    if (!(v >= 0.0)) throw ConfigError("perturbation radii must be >= 0");
    if (std::isinf(v) && !std::holds_alternative<DiscreteBlock>(components_[c].component)) {
      throw ConfigError("only discrete components accept an infinite radius");
    }
  }
}

bool operator==(const StateSpace& a, const StateSpace& b) {
  if (a.actors_ != b.actors_ || a.components_.size() != b.components_.size()) return false;
  for (std::size_t c = 0; c < a.components_.size(); ++c) {
    if (a.components_[c].name != b.components_[c].name) return false;
    if (!equal_components(a.components_[c].component, b.components_[c].component)) return false;
  }
  if (a.separation_.size() != b.separation_.size()) return false;
  for (std::size_t s = 0; s < a.separation_.size(); ++s) {
    if (a.separation_[s].coords != b.separation_[s].coords ||
        a.separation_[s].radii != b.separation_[s].radii) {
      return false;
    }
  }
  return true;
}

double reflect_interval(double x, double delta, double lo, double hi) {
  return kernels::reflect_one(x, delta, lo, hi);
}

void reflect_interval_batch(std::span<double> x, std::span<const double> delta, double lo,
                            double hi) {
  kernels::reflect(x, delta, lo, hi);
}

std::optional<std::vector<double>> accept_sphere_draw(std::span<const double> raw) {
  const double n = norm(raw);
  if (!(n > 1e-6 && n < 1.0)) return std::nullopt;
  std::vector<double> q(raw.begin(), raw.end());
  for (double& v : q) v /= n;
  return q;
}

std::vector<double> sample_sphere_uniform(std::size_t n, RandomStream& rng) {
  if (n < 1) throw ConfigError("sphere dimension must be >= 1");
  std::vector<double> raw(n + 1);
  for (;;) {
    for (double& v : raw) v = rng.uniform(-1.0, 1.0);
    if (auto q = accept_sphere_draw(raw)) return *std::move(q);
  }
}

StatePoint sample_uniform_base(const StateSpace& space, RandomStream& rng) {
  std::vector<double> coords(space.dim());
  for (std::size_t a = 0; a < space.actors(); ++a) {
    sample_actor(std::span<double>(coords).subspan(a * space.actor_dim(), space.actor_dim()),
                 space, rng);
  }
  return StatePoint(std::move(coords));
}

StatePoint sample_uniform(const StateSpace& space, RandomStream& rng,
                          const SamplingOptions& options) {
  if (!space.constrained()) return sample_uniform_base(space, rng);
  return sample_uniform_constrained(space, options.burn_in, rng, options).point;
}

ConstrainedSample sample_uniform_constrained(const StateSpace& space, std::size_t burn_in,
                                             RandomStream& rng, const SamplingOptions& options) {
  ConstrainedSample out;
  if (!space.constrained()) {
    out.point = sample_uniform_base(space, rng);
    return out;
  }
  for (;;) {
    if (out.initial_attempts >= options.max_initial_attempts) {
      throw ConstraintError("no feasible initial point after " +
                            std::to_string(out.initial_attempts) + " uniform draws");
    }
    ++out.initial_attempts;
    StatePoint candidate = sample_uniform_base(space, rng);
    if (space.separated(candidate)) {
      out.point = std::move(candidate);
      break;
    }
  }
  // Independent uniform proposals are symmetric, so Metropolis acceptance
  // reduces to the feasibility indicator.
  for (std::size_t step = 0; step < burn_in; ++step) {
    StatePoint proposal = sample_uniform_base(space, rng);
    ++out.proposals;
    if (space.separated(proposal)) {
      out.point = std::move(proposal);
      ++out.accepted;
    }
  }
  return out;
}

StatePoint perturb(const StatePoint& x, const PerturbationRadii& r, const StateSpace& space,
                   RandomStream& rng, const SamplingOptions& options) {
  if (r.per_component.size() != space.components().size()) {
    throw ConfigError("perturb: radii do not match the space");
  }
  const std::size_t ad = space.actor_dim();
  std::vector<double> out(x.size());
  auto draw = [&] {
    for (std::size_t a = 0; a < space.actors(); ++a) {
      perturb_actor(x.coords().subspan(a * ad, ad), std::span<double>(out).subspan(a * ad, ad), r,
                    space, rng);
    }
  };
  draw();
  if (space.constrained()) {
    // Redrawing only the offending actor can dead-end (another actor's new
    // position may leave it no feasible spot within reach), so the whole
    // joint perturbation is redrawn instead.
    std::size_t retries = 0;
    while (!space.separated(StatePoint(out))) {
      if (++retries > options.retry_cap) {
        throw ConstraintError("perturb: separation retry cap exceeded");
      }
      draw();
    }
  }
  return StatePoint(std::move(out));
}

std::optional<std::size_t> discrete_index(const DiscreteBlock& block, double value) {
  const auto it = std::lower_bound(block.values.begin(), block.values.end(), value);
  if (it == block.values.end() || *it != value) return std::nullopt;
  return static_cast<std::size_t>(it - block.values.begin());
}

}  // namespace relsim
