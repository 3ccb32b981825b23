#include "stripspec/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "stripspec/error.hpp"

namespace stripspec {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

HardyVector difference(HardyVector a, const HardyVector& b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] -= b[k];
  return a;
}

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("semigroup time must be finite and >= 0, got " + fmt(t));
}

}  // namespace

SemigroupState::SemigroupState(const SpectralDecomposition& d, int modes, GridSpec growth_grid) {
  if (d.basis != Basis::L2 || !d.hermitian)
    throw DomainError("semigroup needs eigenpairs of a Hermitian L2-basis Galerkin matrix");
  if (d.pairs.empty()) throw DomainError("semigroup needs at least one eigenpair");
  int trusted = 0;
  while (trusted < static_cast<int>(d.pairs.size()) && d.pairs[static_cast<std::size_t>(trusted)].trusted) ++trusted;
  const int M = modes > 0 ? modes : trusted;
  if (M > static_cast<int>(d.pairs.size())) throw ConfigError("mode cap exceeds the number of computed eigenpairs");
  domain_ = d.pairs.front().psi.front().domain();
  for (int n = 0; n < M; ++n) {
    lambda_.push_back(d.pairs[static_cast<std::size_t>(n)].lambda.real());
    psi_.push_back(d.pairs[static_cast<std::size_t>(n)].psi);
  }
  min_rayleigh_ = *std::min_element(lambda_.begin(), lambda_.end());
  shift_ = std::max(0.0, 1.0 - min_rayleigh_) + 1.0;
  beta_ = std::numeric_limits<double>::infinity();
  for (int m = std::max(1, M / 2); m < M; ++m) beta_ = std::min(beta_, lambda_[static_cast<std::size_t>(m)] / (double(m) * m));
  if (!(beta_ > 0.0) || !std::isfinite(beta_)) beta_ = 0.0;
  envelope_ = growth_fit(growth_samples(d, domain_.half_height(), growth_grid, M));
}

CVector SemigroupState::coefficients(const HardyVector& f) const {
  CVector c(modes());
  for (int n = 0; n < modes(); ++n) c(n) = l2_inner(f, psi_[static_cast<std::size_t>(n)]);
  return c;
}

HardyVector SemigroupState::synthesize(const CVector& c) const {
  HardyVector out;
  for (const auto& f : psi_.front()) out.emplace_back(f.domain(), f.order());
  for (int n = 0; n < modes(); ++n)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c(n) * psi_[static_cast<std::size_t>(n)][k];
  return out;
}

HardyVector SemigroupState::evolve(const HardyVector& f, double t, bool shifted) const {
  check_time(t);
  CVector c = coefficients(f);
  const double mu = shifted ? shift_ : 0.0;
  for (int n = 0; n < modes(); ++n) c(n) *= std::exp(-t * (lambda_[static_cast<std::size_t>(n)] + mu));
  return synthesize(c);
}

double SemigroupState::tail_bound(const HardyVector& f, double t) const {
  check_time(t);
  const HardyVector rest = difference(f, synthesize(coefficients(f)));
  if (t == 0.0) return h_norm(rest);
  const double r = l2_norm(rest);
  if (r == 0.0) return 0.0;
  if (beta_ == 0.0) return std::numeric_limits<double>::infinity();
  // sum over m >= M of C1 r max_{lambda >= beta m^2} exp(C2 sqrt(lambda) - t lambda)
  const double C2 = envelope_.C2;
  const double peak = C2 > 0.0 ? C2 * C2 / (4.0 * t) : 0.0;
  auto log_term = [&](double m) {
    const double s = std::sqrt(beta_) * m;
    if (C2 > 0.0 && s < C2 / (2.0 * t)) return peak;
    return C2 * s - t * s * s;
  };
  if (std::log(r * envelope_.C1) + peak > 700.0) return std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (long m = modes();; ++m) {
    const double lt = log_term(static_cast<double>(m));
    const double term = std::exp(lt);
    sum += term;
    const bool past_peak = std::sqrt(beta_) * m >= C2 / (2.0 * t);
    if (past_peak && term <= 1e-17 * sum) break;
    if (m > modes() + 50'000'000L) return std::numeric_limits<double>::infinity();
  }
  return envelope_.C1 * r * sum;
}

HardyVector random_test_function(StripDomain dom, int K, int order, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  HardyVector f;
  for (int k = 0; k < K; ++k) {
    HardyFunction c(dom, order);
    for (int n = -order; n <= order; ++n) c.at(n) = cplx{g(rng), g(rng)} / (1.0 + double(n) * n);
    f.push_back(std::move(c));
  }
  const double s = 1.0 / h_norm(f);
  for (auto& c : f) c *= s;
  return f;
}

SemigroupLaw semigroup_law(const SemigroupState& st, const HardyVector& f, double t, double s) {
  const HardyVector a = st.evolve(f, t + s);
  const HardyVector b = st.evolve(st.evolve(f, s), t);
  return {h_norm(difference(a, b)), t, s};
}

ContinuityProbe continuity_probe(const SemigroupState& st, const HardyVector& f, const std::vector<double>& ladder) {
  if (ladder.empty()) throw ConfigError("continuity ladder is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0)) throw ConfigError("continuity ladder must be positive");
    if (i && !(ladder[i] < ladder[i - 1])) throw ConfigError("continuity ladder must decrease strictly");
  }
  ContinuityProbe out;
  out.projection_defect = st.tail_bound(f, 0.0);
  out.decreasing = true;
  for (double t : ladder) {
    const HardyVector d = difference(st.evolve(f, t), f);
    out.rows.push_back({t, h_norm(d), l2_norm(d), st.tail_bound(f, t)});
    if (out.rows.size() > 1 && !(out.rows.back().norm_H < out.rows[out.rows.size() - 2].norm_H)) out.decreasing = false;
  }
  out.final_value = out.rows.back().norm_H;
  return out;
}

ContractionReport contraction_check(const SemigroupState& st, const std::vector<HardyVector>& samples,
                                    const std::vector<double>& times) {
  ContractionReport out{0.0, 0.0, 0.0, false};
  for (const auto& f : samples) {
    const double fl = l2_norm(f), fh = h_norm(f);
    for (double t : times) {
      const HardyVector g = st.evolve(f, t, true);
      out.max_ratio_L = std::max(out.max_ratio_L, l2_norm(g) / fl);
      out.max_ratio_H = std::max(out.max_ratio_H, h_norm(g) / fh);
      out.max_ratio_L_unshifted = std::max(out.max_ratio_L_unshifted, l2_norm(st.evolve(f, t)) / fl);
    }
  }
  out.pass = out.max_ratio_L <= 1.0 + 1e-8;
  return out;
}

AnnihilatorProbe annihilator_probe(const ConformalMap& map, const CollisionWitness& wit, double T,
                                   const std::vector<double>& times, int M, std::uint64_t seed) {
  AnnihilatorProbe out{};
  out.times = times;
  const StripDomain dom(T);
  const int Nk = static_cast<int>(690.0 / (2.0 * T));
  out.h_norm = h_norm(eval_kernel(wit.z1, dom, Nk).g - eval_kernel(wit.z2, dom, Nk).g);
  const cplx w1 = map(wit.z1), w2 = map(wit.z2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> a(static_cast<std::size_t>(M));
  for (auto& x : a) x = {g(rng), g(rng)};
  for (double t : times) {
    check_time(t);
    cplx inner = 0.0;
    double scale = 0.0;
    for (int m = 0; m < M; ++m) {
      const double n = eigen_index(m);
      const cplx c = a[static_cast<std::size_t>(m)] * std::exp(-t * kI * n * map.c1());
      const cplx p1 = std::exp(kI * n * w1), p2 = std::exp(kI * n * w2);
      inner += c * (p1 - p2);
      scale += std::abs(c) * std::abs(p1);
    }
    out.max_inner = std::max(out.max_inner, std::abs(inner) / scale);
  }
  return out;
}

void write_evolution_csv(std::ostream& out, const ContinuityProbe& p, const std::string& config_hash) {
  out << "t,norm_H,norm_L,tail_bound,config_hash\n";
  for (const auto& r : p.rows)
    out << fmt(r.t) << ',' << fmt(r.norm_H) << ',' << fmt(r.norm_L) << ',' << fmt(r.tail_bound) << ',' << config_hash
        << '\n';
}

}  // namespace stripspec
