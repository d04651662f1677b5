#include "spsafe/cbf.hpp"

#include <algorithm>
#include <cmath>

namespace spsafe {

AffineConstraint constraint_coeffs(const Barrier& bar, const ReducedAffine& model,
                                   const Vec& x) {
  const Vec gh = bar.grad_h(x);
  const Vec d = model.drift(x);
  const Mat B = model.input(x);
  if (d.size() != gh.size() || B.rows() != gh.size())
    throw ContractViolation("constraint_coeffs: model/gradient size mismatch");
  AffineConstraint c;
  c.a = B.transpose() * gh;
  c.b = gh.dot(d) + bar.alpha(bar.h(x)) - bar.eta;
  return c;
}

ControlSample safe_filter_hard(const AffineConstraint& c, const Vec& u_des) {
  if (c.a.size() != u_des.size())
    throw ContractViolation("safe_filter_hard: input size mismatch");
  const double n2 = c.a.squaredNorm();
  const double margin = c.a.dot(u_des) + c.b;
  if (margin >= 0.0) return {u_des, false};
  if (n2 == 0.0) return {u_des, true};  // no feasible direction
  return {u_des - (margin / n2) * c.a, false};
}

double softplus(double s, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("softplus: sigma must be positive");
  // log1p form on the branch where the exponent is nonpositive.
  if (s > 0.0) return s + std::log1p(std::exp(-sigma * s)) / sigma;
  return std::log1p(std::exp(sigma * s)) / sigma;
}

ControlSample safe_filter_smooth(const AffineConstraint& c, const Vec& u_des,
                                 double sigma) {
  if (c.a.size() != u_des.size())
    throw ContractViolation("safe_filter_smooth: input size mismatch");
  if (!(sigma > 0.0)) throw DomainError("safe_filter_smooth: sigma must be positive");
  const double n2 = c.a.squaredNorm();
  if (n2 == 0.0) return {u_des, c.b < 0.0};
  const double margin = c.a.dot(u_des) + c.b;
  return {u_des + (softplus(-margin, sigma) / n2) * c.a, false};
}

std::pair<double, Vec> hocbf_lift(const PositionMargin& m, double gamma,
                                  const Vec& q, const Vec& omega) {
  if (q.size() != omega.size())
    throw ContractViolation("hocbf_lift: q/omega size mismatch");
  const Vec g = m.grad(q);
  const double val = g.dot(omega) + gamma * m.value(q);
  Vec grad(2 * q.size());
  grad.head(q.size()) = m.hess(q) * omega + gamma * g;
  grad.tail(q.size()) = g;
  return {val, std::move(grad)};
}

double lse_aggregate(const std::vector<double>& vals, double rho) {
  if (vals.empty()) throw ContractViolation("lse_aggregate: empty value list");
  if (!(rho > 0.0)) throw DomainError("lse_aggregate: rho must be positive");
  const double mn = *std::min_element(vals.begin(), vals.end());
  double s = 0.0;
  for (double v : vals) s += std::exp(-rho * (v - mn));
  return mn - std::log(s) / rho;
}

Vec lse_gradient(const std::vector<double>& vals, const std::vector<Vec>& grads,
                 double rho) {
  if (vals.empty() || vals.size() != grads.size())
    throw ContractViolation("lse_gradient: value/gradient list mismatch");
  if (!(rho > 0.0)) throw DomainError("lse_gradient: rho must be positive");
  const double mn = *std::min_element(vals.begin(), vals.end());
  double s = 0.0;
  Vec acc = Vec::Zero(grads[0].size());
  for (std::size_t j = 0; j < vals.size(); ++j) {
    const double w = std::exp(-rho * (vals[j] - mn));
    s += w;
    acc += w * grads[j];
  }
  return acc / s;  // weights sum to one
}

}  // namespace spsafe
