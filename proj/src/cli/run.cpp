#include "cli/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cli/report.hpp"
#include "stripspec/completeness.hpp"
#include "stripspec/config.hpp"
#include "stripspec/error.hpp"
#include "stripspec/galerkin.hpp"
#include "stripspec/locate.hpp"
#include "stripspec/semigroup.hpp"

namespace stripspec::cli {

namespace {

using json = nlohmann::json;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Finite doubles only; NaN and infinities go into the manifest as strings.
json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

const json& run_section(const json& cfg) {
  static const json empty = json::object();
  return cfg.contains("run") ? cfg.at("run") : empty;
}

template <class T>
T param(const json& cfg, const char* key, T fallback) {
  const json& r = run_section(cfg);
  if (!r.contains(key)) return fallback;
  try {
    return r.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run.") + key + ": " + e.what());
  }
}

double positive(const json& cfg, const char* key, double fallback) {
  const double v = param<double>(cfg, key, fallback);
  if (!(v > 0.0)) throw ConfigError(std::string("run.") + key + " must be positive");
  return v;
}

GridSpec grid_param(const json& cfg, const char* key, GridSpec fallback) {
  const auto v = param<std::vector<int>>(cfg, key, {fallback.nx, fallback.ny});
  if (v.size() != 2 || v[0] < 1 || v[1] < 1) throw ConfigError(std::string("run.") + key + " must be [nx, ny] >= 1");
  return {v[0], v[1]};
}

Rectangle rect_param(const json& cfg) {
  const auto v = param<std::vector<double>>(cfg, "rectangle", {});
  if (v.size() != 4 || !(v[1] > v[0]) || !(v[3] > v[2]))
    throw ConfigError("run.rectangle must be [re0, re1, im0, im1] with re0 < re1 and im0 < im1");
  return {v[0], v[1], v[2], v[3]};
}

Basis basis_param(const json& cfg) {
  const auto b = param<std::string>(cfg, "basis", "L2");
  if (b == "L2") return Basis::L2;
  if (b == "H2") return Basis::H2;
  throw ConfigError("run.basis must be \"L2\" or \"H2\"");
}

std::vector<double> ladder_param(const json& cfg, const char* key, std::vector<double> fallback) {
  return param<std::vector<double>>(cfg, key, std::move(fallback));
}

int keep_of(const json& cfg) { return run_section(cfg).at("keep").get<int>(); }
std::uint64_t seed_of(const json& cfg) { return run_section(cfg).at("seed").get<std::uint64_t>(); }

// Runs the jobs on up to `threads` threads; results keep their submission order.
template <class R>
std::vector<R> run_jobs(std::vector<std::function<R()>> jobs, int threads) {
  std::vector<R> out;
  if (threads <= 1) {
    for (auto& j : jobs) out.push_back(j());
    return out;
  }
  std::vector<std::future<R>> fut;
  std::size_t next = 0;
  std::vector<std::optional<R>> slot(jobs.size());
  while (next < jobs.size()) {
    fut.clear();
    const std::size_t first = next;
    for (int t = 0; t < threads && next < jobs.size(); ++t, ++next) fut.push_back(std::async(std::launch::async, jobs[next]));
    for (std::size_t k = 0; k < fut.size(); ++k) slot[first + k] = fut[k].get();
  }
  for (auto& s : slot) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------- spectrum

void cmd_spectrum(const json& cfg, Report& rep, int) {
  const auto oc = parse_operator_config(cfg);
  const Basis basis = basis_param(cfg);
  const auto d = spectrum(assemble(oc.op, basis, oc.N), keep_of(cfg));
  {
    auto f = rep.open("spectrum.csv");
    write_spectrum_csv(f, d, rep.hash());
  }
  auto& diag = rep.diagnostics();
  diag["basis"] = basis == Basis::L2 ? "L2" : "H2";
  diag["N"] = oc.N;
  diag["hermitian"] = d.hermitian;
  diag["max_trusted_residual"] = num(d.max_residual());
  diag["selfadjoint_defect"] = num(selfadjoint_defect(oc.op, oc.N).defect);
  if (d.hermitian) {
    const auto w = weyl_bounds(d, param<int>(cfg, "weyl_m_max", 40));
    diag["weyl"] = {{"beta1_sq", num(w.beta1_sq)}, {"beta2_sq", num(w.beta2_sq)}, {"m_max", w.m_max}, {"pass", w.pass}};
  }
  const auto samples =
      growth_samples(d, oc.op.domain().half_height(), grid_param(cfg, "growth_grid", {64, 9}), param<int>(cfg, "growth_modes", 40));
  const auto fit = growth_fit(samples);
  {
    auto f = rep.open("growth.csv");
    f << "cluster,sqrt_lambda,log_max,log_envelope,config_hash\n";
    for (const auto& s : samples)
      f << s.cluster << ',' << fmt(s.sqrt_lambda) << ',' << fmt(s.log_max) << ','
        << fmt(std::log(fit.C1) + fit.C2 * s.sqrt_lambda) << ',' << rep.hash() << '\n';
  }
  diag["growth"] = {{"C1", num(fit.C1)}, {"C2", num(fit.C2)}, {"samples", fit.samples}, {"max_excess", num(fit.max_excess)}};
}

// --------------------------------------------------------------- monodromy

LocateOptions locate_options(const json& cfg) {
  LocateOptions o;
  o.tol = positive(cfg, "newton_tol", o.tol);
  o.boundary_floor = positive(cfg, "boundary_floor", o.boundary_floor);
  o.max_depth = param<int>(cfg, "max_depth", o.max_depth);
  o.max_dilations = param<int>(cfg, "max_dilations", o.max_dilations);
  o.ode.rtol = positive(cfg, "ode_rtol", o.ode.rtol);
  o.ode.atol = positive(cfg, "ode_atol", o.ode.atol);
  return o;
}

void cmd_monodromy(const json& cfg, Report& rep, int) {
  const auto oc = parse_operator_config(cfg);
  const auto r = locate_eigenvalues(oc.op, rect_param(cfg), locate_options(cfg));
  {
    auto f = rep.open("scan.csv");
    write_scan_csv(f, r, rep.hash());
  }
  {
    auto f = rep.open("eigenvalues.csv");
    write_located_csv(f, r, rep.hash());
  }
  auto& diag = rep.diagnostics();
  diag["total_count"] = r.total_count;
  diag["distinct"] = r.eigenvalues.size();
  diag["conserved"] = r.conserved;
  diag["searched"] = {r.searched.re0, r.searched.re1, r.searched.im0, r.searched.im1};

  const auto radii = ladder_param(cfg, "gronwall_radii", {1.0, 10.0, 100.0, 1000.0});
  const int angles = param<int>(cfg, "gronwall_angles", 8);
  const double pre_min = param<double>(cfg, "preconditioned_min_radius", 100.0);
  auto f = rep.open("gronwall.csv");
  f << "re_lambda,im_lambda,log_norm,ratio,gronwall_bound,preconditioned_bound,config_hash\n";
  double worst = 0.0;
  for (double rad : radii)
    for (int k = 0; k < angles; ++k) {
      const cplx lam = std::polar(rad, kTwoPi * (k + 0.5) / angles);
      const auto U = transfer_matrix(oc.op, lam, kTwoPi);
      double pre = std::numeric_limits<double>::quiet_NaN();
      // below the turning points the Liouville frame is singular and the bound is useless
      if (oc.op.order() == 2 && rad >= pre_min) pre = preconditioned_gronwall(oc.op, lam, kTwoPi);
      const double ratio = U.log_norm / (1.0 + std::sqrt(rad));
      worst = std::max(worst, ratio);
      f << fmt(lam.real()) << ',' << fmt(lam.imag()) << ',' << fmt(U.log_norm) << ',' << fmt(ratio) << ','
        << fmt(U.gronwall_bound) << ',' << fmt(pre) << ',' << rep.hash() << '\n';
    }
  diag["max_growth_ratio"] = num(worst);
}

// -------------------------------------------------------------- crosscheck

void cmd_crosscheck(const json& cfg, Report& rep, int threads) {
  const auto oc = parse_operator_config(cfg);
  const Rectangle rect = rect_param(cfg);
  const int keep = keep_of(cfg);
  const auto opt = locate_options(cfg);
  std::vector<std::function<std::vector<cplx>()>> jobs;
  auto inside = [&](const SpectralDecomposition& d) {
    std::vector<cplx> v;
    for (cplx x : d.eigenvalues())
      if (rect.contains(x)) v.push_back(x);
    return v;
  };
  jobs.push_back([&] { return inside(spectrum(assemble(oc.op, Basis::L2, oc.N), keep)); });
  jobs.push_back([&] { return inside(spectrum(assemble(oc.op, Basis::H2, oc.N), keep)); });
  jobs.push_back([&] { return locate_eigenvalues(oc.op, rect, opt).expanded(); });
  jobs.push_back([&] {
    const auto a = spectrum(assemble(oc.op, Basis::L2, 2 * oc.N), 1).eigenvalues();
    return std::vector<cplx>{a.front()};
  });
  const auto res = run_jobs(std::move(jobs), threads);
  const auto &l2 = res[0], &h2 = res[1], &mono = res[2];
  const std::size_t n = std::min({l2.size(), h2.size(), mono.size()});
  double worst = 0.0;
  {
    auto f = rep.open("agreement.csv");
    f << "index,re_galerkin_l2,im_galerkin_l2,re_galerkin_h2,im_galerkin_h2,re_monodromy,im_monodromy,max_abs_diff,"
         "config_hash\n";
    for (std::size_t k = 0; k < n; ++k) {
      const double d = std::max({std::abs(l2[k] - h2[k]), std::abs(l2[k] - mono[k]), std::abs(h2[k] - mono[k])});
      worst = std::max(worst, d);
      f << k << ',' << fmt(l2[k].real()) << ',' << fmt(l2[k].imag()) << ',' << fmt(h2[k].real()) << ','
        << fmt(h2[k].imag()) << ',' << fmt(mono[k].real()) << ',' << fmt(mono[k].imag()) << ',' << fmt(d) << ','
        << rep.hash() << '\n';
    }
  }
  auto& diag = rep.diagnostics();
  diag["counts"] = {{"galerkin_l2", l2.size()}, {"galerkin_h2", h2.size()}, {"monodromy", mono.size()}};
  diag["max_abs_diff"] = num(worst);
  if (!l2.empty()) diag["lowest_doubling_change"] = num(std::abs(res[3][0] - spectrum(assemble(oc.op, Basis::L2, oc.N), 1).eigenvalues()[0]));
  if (l2.size() != mono.size() || h2.size() != mono.size())
    throw NumericalError("eigenvalue counts in the rectangle differ: Galerkin L2 " + std::to_string(l2.size()) +
                         ", H2 " + std::to_string(h2.size()) + ", monodromy " + std::to_string(mono.size()));
}

// ------------------------------------------------------------ completeness

json witness_json(const CollisionWitness& w) {
  return {{"z1", {w.z1.real(), w.z1.imag()}}, {"z2", {w.z2.real(), w.z2.imag()}}, {"k", w.k},
          {"residual", num(w.residual)},      {"separation", num(w.separation)}};
}

void threshold_part(const json& cfg, Report& rep, const std::vector<std::pair<double, ConformalMap>>& maps,
                    double T_default_max) {
  const auto ladder = param<std::vector<double>>(cfg, "ladder", {0.25, T_default_max, 20.0});
  if (ladder.size() != 3) throw ConfigError("run.ladder must be [T_min, T_max, steps]");
  const GridSpec grid = grid_param(cfg, "grid", {256, 64});
  const double resolution = positive(cfg, "resolution", 1e-3);
  const double polish = positive(cfg, "polish_tol", 1e-10);
  auto f = rep.open("atlas.csv");
  json rows = json::array();
  bool header = true;
  for (const auto& [a, map] : maps) {
    const auto s = threshold_scan(map, ladder[0], ladder[1], static_cast<int>(ladder[2]), grid, resolution, polish);
    std::ostringstream os;
    write_atlas_csv(os, a, s, rep.hash());
    std::string body = os.str();
    if (!header) body = body.substr(body.find('\n') + 1);
    header = false;
    f << body;
    bool cert_ok = true;
    for (const auto& r : s.rows) cert_ok = cert_ok && !(r.certificate && r.found);
    json row = {{"a", num(a)}, {"T_star", s.T_star ? num(*s.T_star) : json(nullptr)}, {"certificate_consistent", cert_ok}};
    if (s.refined) row["T_star_refined"] = {{"T", num(s.refined->T)}, {"converged", s.refined->converged}, {"witness", witness_json(s.refined->witness)}};
    rows.push_back(row);
  }
  rep.diagnostics()["threshold"] = rows;
}

void cmd_completeness(const json& cfg, Report& rep, int) {
  auto& diag = rep.diagnostics();
  const double T = cfg.at("T").get<double>();
  const StripDomain dom(T);
  if (cfg.contains("family")) {
    const auto& fam = cfg.at("family");
    if (fam.value("kind", std::string()) != "exp_cos") throw ConfigError("family.kind must be \"exp_cos\"");
    std::vector<double> amps;
    if (fam.at("a").is_array()) amps = fam.at("a").get<std::vector<double>>();
    else amps.push_back(fam.at("a").get<double>());
    if (amps.empty()) throw ConfigError("family.a is empty");
    std::vector<std::pair<double, ConformalMap>> maps;
    for (double a : amps) maps.emplace_back(a, ConformalMap::exp_cos(a, dom));
    diag["period_defect"] = num(maps.front().second.period_defect());
    threshold_part(cfg, rep, maps, T);
    const double aw = param<double>(cfg, "witness_a", amps.front());
    const auto primary = std::find(amps.begin(), amps.end(), aw);
    if (primary == amps.end()) throw ConfigError("run.witness_a must be one of family.a");
    const ConformalMap& wmap = maps[static_cast<std::size_t>(primary - amps.begin())].second;

    const double Tw = positive(cfg, "witness_T", std::min(1.5, T));
    const auto c = collision_search(wmap, Tw, grid_param(cfg, "grid", {256, 64}), positive(cfg, "polish_tol", 1e-10));
    if (c.witness) {
      const auto w = witness_span_check(wmap, *c.witness, Tw, param<int>(cfg, "span_modes", 60), 50);
      SpanResiduals table;
      table.r = {w.residuals};
      auto f = rep.open("residuals.csv");
      write_residual_csv(f, table, rep.hash());
      diag["witness"] = witness_json(*c.witness);
      diag["witness"]["T"] = Tw;
      diag["witness"]["a"] = aw;
      diag["witness"]["nosep"] = num(w.nosep);
      diag["witness"]["h_norm"] = num(w.h_norm);
      diag["witness"]["max_deviation"] = num(w.max_deviation);
      diag["witness"]["annihilator"] = num(w.annihilator);
      diag["witness"]["gram_rank"] = w.rank;
    } else {
      diag["witness"] = nullptr;
    }
    return;
  }

  const auto oc = parse_operator_config(cfg);
  const auto& L = oc.op;
  if (L.order() == 1) {
    if (L.size() != 1) throw ConfigError("completeness for first-order operators needs K = 1");
    const HardyFunction p1 = L.standard_coeff(1)(0, 0);
    const HardyFunction p0 = L.standard_coeff(0)(0, 0);
    ConformalMap map(p1);
    std::vector<std::pair<double, ConformalMap>> maps{{std::numeric_limits<double>::quiet_NaN(), map}};
    threshold_part(cfg, rep, maps, T);
    const bool unit = p1.order() == 0 || h_norm(p1 - HardyFunction::constant(dom, p1[0], p1.order())) == 0.0;
    if (unit && p1[0] == cplx(1.0) && h_norm(p0) > 0.0) {
      // D - i phi' with phi' = i p0
      if (std::abs(p0[0]) > 1e-14) throw ConfigError("similarity example needs a zero-mean zeroth-order coefficient");
      HardyFunction phi(dom, p0.order());
      for (int n = -p0.order(); n <= p0.order(); ++n)
        if (n != 0) phi.at(n) = p0[n] / double(n);
      const auto s = similarity_example_check(phi, param<int>(cfg, "similarity_range", 10), oc.N);
      diag["similarity"] = {{"max_sine", num(s.max_sine)}, {"max_eig_error", num(s.max_eig_error)}, {"N", s.N}};
    }
    return;
  }

  const int modes = param<int>(cfg, "span_modes", 40);
  const int J = param<int>(cfg, "tests", 5);
  const auto d = spectrum(assemble(L, Basis::H2, oc.N), modes);
  std::vector<HardyVector> psi, tests;
  for (const auto& p : d.pairs) psi.push_back(p.psi);
  for (int m = 0; m < J; ++m) {
    HardyVector t;
    for (int k = 0; k < L.size(); ++k)
      t.push_back(k == 0 ? HardyFunction::exponential(dom, eigen_index(m)) : HardyFunction(dom, 0));
    tests.push_back(t);
  }
  const auto r = span_residuals(psi, tests);
  auto f = rep.open("residuals.csv");
  write_residual_csv(f, r, rep.hash());
  double last = 0.0;
  for (const auto& row : r.r) last = std::max(last, row.back());
  diag["span"] = {{"max_final_residual", num(last)}, {"max_increase", num(r.max_increase)}, {"rank", r.rank.back()}, {"modes", modes}};
}

// ------------------------------------------------------------------ evolve

void cmd_evolve(const json& cfg, Report& rep, int threads) {
  const auto oc = parse_operator_config(cfg);
  const auto d = spectrum(assemble(oc.op, Basis::L2, oc.N), keep_of(cfg));
  const SemigroupState st(d, param<int>(cfg, "modes", 0));
  const auto dom = oc.op.domain();
  const std::uint64_t seed = seed_of(cfg);
  const int order = param<int>(cfg, "f_order", 8);
  const auto f = random_test_function(dom, oc.op.size(), order, seed);
  std::vector<double> ladder = ladder_param(cfg, "ladder", {});
  if (ladder.empty())
    for (int k = 2; k <= 8; ++k) ladder.push_back(std::pow(10.0, -0.5 * k));
  const auto p = continuity_probe(st, f, ladder);
  {
    auto out = rep.open("evolution.csv");
    write_evolution_csv(out, p, rep.hash());
  }
  std::vector<std::function<ContractionReport()>> jobs;
  const std::vector<double> times{0.0, 0.01, 0.1, 1.0};
  for (int s = 1; s <= 4; ++s)
    jobs.push_back([&, s] { return contraction_check(st, {random_test_function(dom, oc.op.size(), order, seed + s)}, times); });
  double rl = 0.0, rh = 0.0;
  for (const auto& c : run_jobs(std::move(jobs), threads)) rl = std::max(rl, c.max_ratio_L), rh = std::max(rh, c.max_ratio_H);
  auto& diag = rep.diagnostics();
  diag["modes"] = st.modes();
  diag["shift"] = num(st.shift());
  diag["semigroup_law_error"] = num(semigroup_law(st, f, 0.1, 0.1).error);
  diag["continuity"] = {{"decreasing", p.decreasing}, {"final", num(p.final_value)}, {"projection_defect", num(p.projection_defect)}};
  diag["contraction"] = {{"max_ratio_L", num(rl)}, {"max_ratio_H", num(rh)}, {"pass", rl <= 1.0 + 1e-8}};
}

// ------------------------------------------------------------------ kernel

void cmd_kernel(const json& cfg, Report& rep, int threads) {
  const double T = cfg.at("T").get<double>();
  const StripDomain dom(T);
  const int N = param<int>(cfg, "kernel_order", 16);
  const int samples = param<int>(cfg, "samples", 100), points = param<int>(cfg, "points", 20);
  const int pairs = param<int>(cfg, "pairs", 200);
  check_truncation(N, T);
  std::mt19937_64 rng(seed_of(cfg));
  std::uniform_real_distribution<double> ux(0.0, kTwoPi), uy(-0.95 * T, 0.95 * T);
  std::vector<cplx> pts;
  for (int p = 0; p < points; ++p) pts.emplace_back(ux(rng), uy(rng));
  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < samples; ++s) seeds.push_back(rng());

  std::vector<KernelElement> kernels;
  for (cplx w : pts) kernels.push_back(eval_kernel(w, dom, N));
  std::vector<std::function<std::vector<double>()>> jobs;
  for (int s = 0; s < samples; ++s)
    jobs.push_back([&, s] {
      const HardyFunction f = random_test_function(dom, 1, N, seeds[static_cast<std::size_t>(s)])[0];
      std::vector<double> err;
      for (std::size_t p = 0; p < pts.size(); ++p) err.push_back(std::abs(h_inner(f, kernels[p].g) - evaluate(f, pts[p])));
      err.push_back(h_norm(f));
      return err;
    });
  const auto errs = run_jobs(std::move(jobs), threads);
  double worst = 0.0;
  {
    auto f = rep.open("kernel.csv");
    f << "sample,point,re_w,im_w,abs_error,rel_error,config_hash\n";
    for (int s = 0; s < samples; ++s)
      for (int p = 0; p < points; ++p) {
        const double e = errs[static_cast<std::size_t>(s)][static_cast<std::size_t>(p)];
        const double rel = e / errs[static_cast<std::size_t>(s)].back();
        worst = std::max(worst, rel);
        f << s << ',' << p << ',' << fmt(pts[static_cast<std::size_t>(p)].real()) << ','
          << fmt(pts[static_cast<std::size_t>(p)].imag()) << ',' << fmt(e) << ',' << fmt(rel) << ',' << rep.hash() << '\n';
      }
  }
  int printed = 0, sharp = 0;
  {
    auto f = rep.open("continuity.csv");
    f << "re_v,im_v,re_w,im_w,norm_sq,bound,sharp_bound,config_hash\n";
    for (int k = 0; k < pairs; ++k) {
      const cplx v(ux(rng), uy(rng));
      const cplx w = v + cplx(0.1 * (ux(rng) / kTwoPi - 0.5), 0.0) + cplx(0.0, 0.05 * uy(rng) / T);
      if (!dom.contains(w)) continue;
      const double d2 = std::pow(h_norm(eval_kernel(v, dom, N).g - eval_kernel(w, dom, N).g), 2);
      const double b = kernel_continuity_bound(v, w, T), bs = kernel_continuity_bound_sharp(v, w, T);
      printed += d2 > b;
      sharp += d2 > bs;
      f << fmt(v.real()) << ',' << fmt(v.imag()) << ',' << fmt(w.real()) << ',' << fmt(w.imag()) << ',' << fmt(d2) << ','
        << fmt(b) << ',' << fmt(bs) << ',' << rep.hash() << '\n';
    }
  }
  auto& diag = rep.diagnostics();
  diag["max_rel_error"] = num(worst);
  diag["continuity_violations"] = {{"printed", printed}, {"sharp", sharp}};
}

using Handler = void (*)(const json&, Report&, int);

Handler handler(const std::string& c) {
  if (c == "spectrum") return cmd_spectrum;
  if (c == "monodromy") return cmd_monodromy;
  if (c == "crosscheck") return cmd_crosscheck;
  if (c == "completeness") return cmd_completeness;
  if (c == "evolve") return cmd_evolve;
  if (c == "kernel") return cmd_kernel;
  throw ConfigError("unknown command \"" + c + "\"");
}

}  // namespace

json resolve_config(const RunOptions& opt) {
  json cfg = read_json_file(opt.config);
  if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
  if (opt.n_trunc) cfg["N"] = *opt.n_trunc;
  if (opt.strip_height) cfg["T"] = *opt.strip_height;
  if (!cfg.contains("T")) throw ConfigError("config needs a strip half-height T");
  json& r = cfg["run"];
  if (r.is_null()) r = json::object();
  if (!r.is_object()) throw ConfigError("run must be an object");
  if (opt.keep) r["keep"] = *opt.keep;
  if (!r.contains("keep")) r["keep"] = 40;
  if (opt.seed) r["seed"] = *opt.seed;
  if (!r.contains("seed")) r["seed"] = 1;
  try {
    if (r.at("keep").get<int>() < 1) throw ConfigError("keep must be at least 1");
    (void)r.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run: ") + e.what());
  }
  cfg["command"] = opt.command;
  return cfg;
}

int run(const RunOptions& opt) {
  std::optional<Report> rep;
  auto report_error = [&](ErrorKind kind, const std::string& msg) {
    std::cerr << error_record(kind, msg).dump() << '\n';
    if (rep) return rep->fail(kind, msg);
    std::error_code ec;
    std::filesystem::create_directories(opt.out, ec);
    std::ofstream f(opt.out / "error.json", std::ios::binary);
    if (f) f << error_record(kind, msg).dump(2) << '\n';
    return exit_code(kind);
  };
  try {
    if (opt.threads < 1) throw ConfigError("threads must be at least 1");
    const Handler h = handler(opt.command);
    const json cfg = resolve_config(opt);
    rep.emplace(opt.out, opt.command, cfg);
    rep->diagnostics()["threads"] = opt.threads;
    h(cfg, *rep, opt.threads);
    rep->finish();
    return 0;
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_error(ErrorKind::Validation, std::string("config: ") + e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorKind::Numerical, e.what());
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Spectral computations for periodic differential operators on a strip"};
  RunOptions opt;
  std::vector<std::string> names(std::begin(kCommands), std::end(kCommands));
  app.add_option("command", opt.command, "spectrum | monodromy | crosscheck | completeness | evolve | kernel")
      ->required()
      ->check(CLI::IsMember(names));
  app.add_option("--config", opt.config, "operator or experiment JSON")->envname("SPECTRA_CONFIG")->required();
  app.add_option("--out", opt.out, "output directory")->envname("SPECTRA_OUT");
  app.add_option("--n-trunc", opt.n_trunc, "Fourier truncation order N")->envname("SPECTRA_N_TRUNC");
  app.add_option("--strip-height", opt.strip_height, "strip half-height T")->envname("SPECTRA_STRIP_HEIGHT");
  app.add_option("--keep", opt.keep, "number of eigenvalues kept")->envname("SPECTRA_KEEP");
  app.add_option("--seed", opt.seed, "random seed")->envname("SPECTRA_SEED");
  app.add_option("--threads", opt.threads, "worker threads")->envname("SPECTRA_THREADS");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << error_record(ErrorKind::Validation, e.what()).dump() << '\n';
    return exit_code(ErrorKind::Validation);
  }
  return run(opt);
}

}  // namespace stripspec::cli
