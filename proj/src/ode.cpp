#include "stripspec/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stripspec/error.hpp"

namespace stripspec {

namespace {

// Dormand-Prince 8(5,3) tableau (Hairer, Norsett & Wanner).
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;

constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

constexpr double kSafe = 0.9;
constexpr double kMinScale = 0.333;
constexpr double kMaxScale = 6.0;

// sqrt(sum_k |e_k / sc_k|^2), scaled so that large transfer matrices do not overflow the squares.
double scaled_norm(const CMatrix& e, const CMatrix& y0, const CMatrix& y1, const OdeOptions& opt) {
  std::vector<double> r(static_cast<std::size_t>(e.size()));
  double m = 0.0;
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    const double sc = opt.atol + opt.rtol * std::max(std::abs(y0(k)), std::abs(y1(k)));
    r[static_cast<std::size_t>(k)] = std::abs(e(k)) / sc;
    m = std::max(m, r[static_cast<std::size_t>(k)]);
  }
  if (!(m > 0.0) || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : r) s += (x / m) * (x / m);
  return m * std::sqrt(s);
}

double rms(const CMatrix& v, const CMatrix& y, const OdeOptions& opt) {
  return scaled_norm(v, y, y, opt) / std::sqrt(static_cast<double>(v.size()));
}

// Hairer's starting step.
double initial_step(const OdeRhs& f, double t, const CMatrix& y, const CMatrix& k1, double span, const OdeOptions& opt,
                    long& evals) {
  const double d0 = rms(y, y, opt), d1 = rms(k1, y, opt);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  const CMatrix y1 = y + h0 * k1;
  const CMatrix k2 = f(t + h0, y1);
  ++evals;
  const double d2 = rms(k2 - k1, y, opt) / h0;
  const double m = std::max(d1, d2);
  const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / 8.0);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

OdeResult integrate_dop853(const OdeRhs& f, double t0, double t1, CMatrix y0, const OdeOptions& opt,
                           const std::vector<double>& stops, const OdeObserver& observer) {
  if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw ConfigError("ODE tolerances must be positive");
  OdeResult res;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  std::vector<double> marks;
  for (double s : stops)
    if (dir * (s - t0) > 0.0 && dir * (t1 - s) > 0.0) marks.push_back(s);
  marks.push_back(t1);
  std::sort(marks.begin(), marks.end(), [dir](double a, double b) { return dir * a < dir * b; });
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  CMatrix y = std::move(y0);
  if (span == 0.0) {
    if (observer) observer(t1, y);
    res.y = std::move(y);
    return res;
  }
  double t = t0;
  CMatrix k1 = f(t, y);
  res.evaluations = 1;
  double h = initial_step(f, t, y, k1, span, opt, res.evaluations);
  bool last_rejected = false;
  std::size_t next = 0;

  while (next < marks.size()) {
    if (res.steps + res.rejected >= opt.max_steps) {
      throw BudgetError("ODE step budget of " + std::to_string(opt.max_steps) + " exhausted at t = " + std::to_string(t));
    }
    const double target = marks[next];
    bool clipped = false;
    double hs = h;
    if (hs >= std::abs(target - t)) {
      hs = std::abs(target - t);
      clipped = true;
    }
    if (hs < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      throw NumericalError("ODE step size underflow at t = " + std::to_string(t));
    }
    const double hd = dir * hs;

    const CMatrix k2 = f(t + c2 * hd, y + hd * (a21 * k1));
    const CMatrix k3 = f(t + c3 * hd, y + hd * (a31 * k1 + a32 * k2));
    const CMatrix k4 = f(t + c4 * hd, y + hd * (a41 * k1 + a43 * k3));
    const CMatrix k5 = f(t + c5 * hd, y + hd * (a51 * k1 + a53 * k3 + a54 * k4));
    const CMatrix k6 = f(t + c6 * hd, y + hd * (a61 * k1 + a64 * k4 + a65 * k5));
    const CMatrix k7 = f(t + c7 * hd, y + hd * (a71 * k1 + a74 * k4 + a75 * k5 + a76 * k6));
    const CMatrix k8 = f(t + c8 * hd, y + hd * (a81 * k1 + a84 * k4 + a85 * k5 + a86 * k6 + a87 * k7));
    const CMatrix k9 = f(t + c9 * hd, y + hd * (a91 * k1 + a94 * k4 + a95 * k5 + a96 * k6 + a97 * k7 + a98 * k8));
    const CMatrix k10 =
        f(t + c10 * hd, y + hd * (a101 * k1 + a104 * k4 + a105 * k5 + a106 * k6 + a107 * k7 + a108 * k8 + a109 * k9));
    const CMatrix k11 = f(t + c11 * hd, y + hd * (a111 * k1 + a114 * k4 + a115 * k5 + a116 * k6 + a117 * k7 +
                                                  a118 * k8 + a119 * k9 + a1110 * k10));
    const CMatrix k12 = f(t + hd, y + hd * (a121 * k1 + a124 * k4 + a125 * k5 + a126 * k6 + a127 * k7 + a128 * k8 +
                                            a129 * k9 + a1210 * k10 + a1211 * k11));
    res.evaluations += 11;

    const CMatrix bsum = b1 * k1 + b6 * k6 + b7 * k7 + b8 * k8 + b9 * k9 + b10 * k10 + b11 * k11 + b12 * k12;
    CMatrix ynew = y + hd * bsum;

    const CMatrix e3 = bsum - e31 * k1 - e32 * k9 - e33 * k12;
    const CMatrix e5 = e51 * k1 + e56 * k6 + e57 * k7 + e58 * k8 + e59 * k9 + e510 * k10 + e511 * k11 + e512 * k12;
    const double err3 = scaled_norm(e3, y, ynew, opt);
    const double err5 = scaled_norm(e5, y, ynew, opt);
    const double denom = std::hypot(err5, 0.1 * err3);
    double err = denom > 0.0 ? hs * err5 * (err5 / denom) / std::sqrt(static_cast<double>(y.size())) : 0.0;
    if (std::isnan(err) || !ynew.allFinite()) throw NumericalError("non-finite ODE state at t = " + std::to_string(t));
    if (std::isinf(err)) err = std::numeric_limits<double>::max();

    double scale = err == 0.0 ? kMaxScale : std::clamp(kSafe * std::pow(err, -0.125), kMinScale, kMaxScale);
    if (err <= 1.0) {
      ++res.steps;
      double ymax = 0.0;
      for (Eigen::Index k = 0; k < ynew.size(); ++k) ymax = std::max(ymax, std::abs(ynew(k)));
      res.error_estimate += err * (opt.atol + opt.rtol * ymax);
      t = clipped ? target : t + hd;
      y = std::move(ynew);
      k1 = f(t, y);
      ++res.evaluations;
      if (last_rejected) scale = std::min(scale, 1.0);
      last_rejected = false;
      // a clipped step says nothing about the natural step length
      h = clipped ? std::max(h, hs * scale) : hs * scale;
      if (clipped) {
        if (observer) observer(t, y);
        ++next;
      }
    } else {
      ++res.rejected;
      last_rejected = true;
      h = hs * std::max(kSafe * std::pow(err, -0.125), kMinScale);
    }
  }
  res.y = std::move(y);
  return res;
}

double integrate_smooth(const std::function<double(double)>& f, double a, double b, double rtol) {
  static const double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  auto gauss = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi), hh = 0.5 * (hi - lo);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += w[k] * (f(mid - hh * x[k]) + f(mid + hh * x[k]));
    return hh * s;
  };
  // Local bisection: norms of matrix functions have kinks where singular
  // values cross, so global refinement wastes most of its work on smooth parts.
  double scale = 0.0;
  const int coarse = 16;
  std::vector<double> whole(coarse);
  for (int p = 0; p < coarse; ++p) {
    whole[static_cast<std::size_t>(p)] = gauss(a + (b - a) * p / coarse, a + (b - a) * (p + 1) / coarse);
    scale += std::abs(whole[static_cast<std::size_t>(p)]);
  }
  const double tol = rtol * std::max(scale, 1e-300);
  std::function<double(double, double, double, double, int)> refine = [&](double lo, double hi, double est, double t,
                                                                          int depth) {
    const double mid = 0.5 * (lo + hi);
    const double l = gauss(lo, mid), r = gauss(mid, hi);
    if (std::abs(l + r - est) <= t || depth >= 40) return l + r;
    return refine(lo, mid, l, 0.5 * t, depth + 1) + refine(mid, hi, r, 0.5 * t, depth + 1);
  };
  double s = 0.0;
  for (int p = 0; p < coarse; ++p)
    s += refine(a + (b - a) * p / coarse, a + (b - a) * (p + 1) / coarse, whole[static_cast<std::size_t>(p)],
                tol / coarse, 0);
  return s;
}

}  // namespace stripspec
