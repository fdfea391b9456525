#pragma once

// Factories for the model families studied with this toolkit.

#include <cmath>
#include <cstddef>

#include "nhl/lattice.hpp"

namespace nhl {

// Open chain with nearest-neighbour hopping t and gain i*g on site 1.
inline ModelSpec gain_chain(std::size_t L, double t, double g) {
  ModelSpec s;
  s.L = L;
  s.boundary = Boundary::Open;
  s.hoppings.set(1, t);
  if (g != 0.0) s.perturbations.push_back({1, 1, cplx{0.0, g}});
  return s;
}

// Parameters of the flux ring: L sites, hopping t, flux theta per bond and
// the boundary potential g e^{i phi} |1><1| + g e^{-i phi} |L><L|.
struct FluxRingParams {
  std::size_t L = 100;
  double t = 1.0;
  double g = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

inline ModelSpec flux_ring(const FluxRingParams& p) {
  ModelSpec s;
  s.L = p.L;
  s.boundary = Boundary::Periodic;
  s.hoppings.set(1, p.t);
  s.flux_theta = p.theta;
  if (p.g != 0.0) {
    s.perturbations.push_back({1, 1, std::polar(p.g, p.phi)});
    s.perturbations.push_back({p.L, p.L, std::polar(p.g, -p.phi)});
  }
  return s;
}

enum class EdgePotential {
  Antisymmetric,  // i g (|1><1| - |L><L|)
  Symmetric,      // g (|1><2| + |L><L-1|)
};

// Open chain with hoppings t1, t2 and an edge potential.
inline ModelSpec nnn_chain(std::size_t L, double t1, double t2, double g,
                           EdgePotential kind = EdgePotential::Antisymmetric) {
  ModelSpec s;
  s.L = L;
  s.boundary = Boundary::Open;
  s.hoppings.set(1, t1);
  if (t2 != 0.0) s.hoppings.set(2, t2);
  if (g != 0.0) {
    if (kind == EdgePotential::Antisymmetric) {
      s.perturbations.push_back({1, 1, cplx{0.0, g}});
      s.perturbations.push_back({L, L, cplx{0.0, -g}});
    } else {
      s.perturbations.push_back({1, 2, cplx{g}});
      s.perturbations.push_back({L, L - 1, cplx{g}});
    }
  }
  return s;
}

}  // namespace nhl
