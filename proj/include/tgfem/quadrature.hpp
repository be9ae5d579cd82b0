#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tgfem/errors.hpp"

namespace tgfem {

/// Symmetric quadrature on the reference triangle in barycentric
/// coordinates. Weights are normalised to sum to one, so a physical integral
/// is `area * sum_q w_q f(x_q)`.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

namespace detail {

class RuleBuilder {
public:
  explicit RuleBuilder(int degree) { rule_.degree = degree; }

  // Weights below are quoted against the reference area 1/2 and doubled here.
  RuleBuilder &centroid(double w) { return add({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, w); }

  RuleBuilder &orbit3(double a, double w) {
    const double b = 1.0 - 2.0 * a;
    return add({a, a, b}, w).add({a, b, a}, w).add({b, a, a}, w);
  }

  RuleBuilder &cyclic3(double a, double b, double c, double w) {
    return add({a, b, c}, w).add({c, a, b}, w).add({b, c, a}, w);
  }

  RuleBuilder &orbit6(double a, double b, double w) {
    const double c = 1.0 - a - b;
    return add({a, b, c}, w).add({b, a, c}, w).add({a, c, b}, w).add({c, a, b}, w).add({b, c, a}, w).add({c, b, a}, w);
  }

  [[nodiscard]] QuadratureRule build() const { return rule_; }

private:
  RuleBuilder &add(std::array<double, 3> p, double w) {
    rule_.points.push_back(p);
    rule_.weights.push_back(2.0 * w);
    return *this;
  }

  QuadratureRule rule_;
};

inline std::vector<QuadratureRule> make_triangle_rules() {
  std::vector<QuadratureRule> r;
  r.push_back(RuleBuilder(1).centroid(0.5).build());
  r.push_back(RuleBuilder(2).orbit3(1. / 6., 1. / 6.).build());
  r.push_back(RuleBuilder(3).centroid(-0.28125).orbit3(0.2, 25. / 96.).build());
  r.push_back(RuleBuilder(4)
                  .orbit3(0.091576213509770743460, 0.054975871827660933819)
                  .orbit3(0.44594849091596488632, 0.11169079483900573285)
                  .build());
  r.push_back(RuleBuilder(5)
                  .centroid(0.1125)
                  .orbit3(0.10128650732345633880, 0.062969590272413576298)
                  .orbit3(0.47014206410511508977, 0.066197076394253090369)
                  .build());
  r.push_back(RuleBuilder(6)
                  .orbit3(0.063089014491502228340, 0.025422453185103408460)
                  .orbit3(0.24928674517091042129, 0.058393137863189683013)
                  .orbit6(0.053145049844816947353, 0.31035245103378440542, 0.041425537809186787597)
                  .build());
  r.push_back(RuleBuilder(7)
                  .cyclic3(0.062382265094402118174, 0.067517867073916085443,
                           1.0 - 0.062382265094402118174 - 0.067517867073916085443, 0.026517028157436251429)
                  .cyclic3(0.055225456656926611737, 0.32150249385198182267,
                           1.0 - 0.055225456656926611737 - 0.32150249385198182267, 0.043881408714446055037)
                  .cyclic3(0.034324302945097146470, 0.66094919618673565761, 0.30472650086816719592,
                           0.028775042784981585738)
                  .cyclic3(0.51584233435359177926, 0.27771616697639178257, 0.20644149867001643817,
                           0.067493187009802774463)
                  .build());
  r.push_back(RuleBuilder(8)
                  .centroid(0.0721578038388935841255455552445323)
                  .orbit3(0.170569307751760206622293501491464, 0.0516086852673591251408957751460645)
                  .orbit3(0.0505472283170309754584235505965989, 0.0162292488115990401554629641708902)
                  .orbit3(0.459292588292723156028815514494169, 0.0475458171336423123969480521942921)
                  .orbit6(0.008394777409957605337213834539296, 0.263112829634638113421785786284643,
                          0.0136151570872174971324223450369544)
                  .build());
  // orbit3 takes the repeated coordinate; the 3b-style entries quote the odd one out.
  auto odd = [](double b) { return 0.5 * (1.0 - b); };
  r.push_back(RuleBuilder(9)
                  .centroid(0.0485678981413994169096209912536443)
                  .orbit3(odd(0.020634961602524744433), 0.0156673501135695352684274156436046)
                  .orbit3(odd(0.12582081701412672546), 0.0389137705023871396583696781497019)
                  .orbit3(0.188203535619032730240961280467335, 0.0398238694636051265164458871320226)
                  .orbit3(0.0447295133944527098651065899662763, 0.0127888378293490156308393992794999)
                  .orbit6(0.0368384120547362836348175987833851, 0.2219629891607656956751025276931919,
                          0.0216417696886446886446886446886446)
                  .build());
  r.push_back(RuleBuilder(10)
                  .centroid(0.0454089951913767900476432975500142)
                  .orbit3(odd(0.028844733232685245264984935583748), 0.0183629788782333523585030359456832)
                  .orbit3(0.109481575485037054795458631340522, 0.0226605297177639673913028223692986)
                  .orbit6(0.141707219414879954756683250476361, 0.307939838764120950165155022930631,
                          0.0363789584227100543021575883096803)
                  .orbit6(0.025003534762686386073988481007746, 0.246672560639902693917276465411176,
                          0.0141636212655287424183685307910495)
                  .orbit6(0.0095408154002994575801528096228873, 0.0668032510122002657735402127620247,
                          4.71083348186641172996373548344341E-03)
                  .build());
  return r;
}

} // namespace detail

inline constexpr int kMaxTriangleDegree = 10;
inline constexpr int kDefaultTriangleDegree = 5;

/// Rule exact for polynomials of total degree `degree` (1..10).
[[nodiscard]] inline const QuadratureRule &triangle_rule(int degree = kDefaultTriangleDegree) {
  static const std::vector<QuadratureRule> rules = detail::make_triangle_rules();
  if (degree < 1 || degree > kMaxTriangleDegree) {
    throw Error("triangle quadrature degree must be in [1, " + std::to_string(kMaxTriangleDegree) + "], got " +
                std::to_string(degree));
  }
  return rules[static_cast<std::size_t>(degree - 1)];
}

/// Two-point Gauss rule on [0, 1]; weights sum to one.
struct EdgeRule {
  std::array<double, 2> points;
  std::array<double, 2> weights;
};

[[nodiscard]] inline EdgeRule gauss2_edge_rule() {
  const double d = 0.5 / std::sqrt(3.0);
  return {{0.5 - d, 0.5 + d}, {0.5, 0.5}};
}

} // namespace tgfem
