#include "rieszlab/quadrature.hpp"

#include "rieszlab/core.hpp"

namespace rieszlab::quad {

namespace {

template <unsigned N>
GaussRule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  GaussRule r;
  // Boost stores the nonnegative half; for odd N the first entry is the origin.
  const bool odd = (N % 2) == 1;
  for (std::size_t i = x.size(); i-- > 0;) {
    if (odd && i == 0) continue;
    r.nodes.push_back(-x[i]);
    r.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.nodes.push_back(x[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const GaussRule r8 = make_rule<8>();
  static const GaussRule r16 = make_rule<16>();
  static const GaussRule r20 = make_rule<20>();
  static const GaussRule r32 = make_rule<32>();
  switch (n) {
    case 8: return r8;
    case 16: return r16;
    case 20: return r20;
    case 32: return r32;
    default: throw ParameterError("unsupported Gauss-Legendre order " + std::to_string(n));
  }
}

}  // namespace rieszlab::quad
