// Acceptance suite. Prints one "criterion N: PASS|FAIL ..." line per
// criterion; `acceptance --only N` runs a single one.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace sepdict;
using namespace sepdict::fixtures;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sepdict_acceptance";
  fs::create_directories(dir);
  return dir / name;
}

int cli_run(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "sepdict");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome certified_gap() {
  SyntheticSpec spec;
  spec.t = 200;
  spec.seed = 1;
  const SyntheticData d = generate(spec);
  Outcome o{true, ""};
  for (double lambda : {0.85, 0.95}) {
    const OracleSolution oracle = global_optimum(d.data, lambda);
    SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.init_seed = 1;
    cfg.max_seconds = 300.0;
    Clock clock;
    RunRecord rec;
    std::string note;
    try {
      rec = solve(d.data, cfg, oracle.objective_star).second;
    } catch (const StallError& e) {
      rec = e.record;
      note = " stalled";
    }
    const double secs = clock.seconds();
    const RoundRecord& last = rec.rounds.back();
    const double rel_gap = std::abs(last.objective - oracle.objective_star) / oracle.objective_star;
    const double cap = 0.2 * static_cast<double>(oracle.r_tilde);
    const bool ok = rec.certified && rel_gap <= 1e-3 && static_cast<double>(last.r1) <= cap &&
                    static_cast<double>(last.r2) <= cap && secs <= 300.0;
    o.pass = o.pass && ok;
    o.detail += "[lambda=" + fmt(lambda) + " certified=" + (rec.certified ? "yes" : "no") + note +
                " rounds=" + std::to_string(rec.rounds.size()) + " rel_gap=" + fmt(rel_gap) +
                " r1=" + std::to_string(last.r1) + " r2=" + std::to_string(last.r2) +
                " r_tilde=" + std::to_string(oracle.r_tilde) + " c=" + fmt(last.report.c) + " secs=" + fmt(secs) +
                "] ";
  }
  return o;
}

Outcome zero_threshold() {
  const fs::path data = scratch("zero.sdt"), model = scratch("zero_model");
  if (cli_run({"synth", "--out", data.string(), "--t", "50", "--seed", "2"}) != 0) return {false, "synth failed"};
  const Tensor3 s = io::load_sdt(data);
  const double lambda = 1.01 * max_singular_value(s);
  std::string out;
  const int learn = cli_run({"learn", "--data", data.string(), "--lambda", csv::real(lambda), "--seed", "2",
                             "--out-model", model.string()},
                            &out);
  const int cert = cli_run({"certify", "--data", data.string(), "--model", model.string(), "--lambda", csv::real(lambda)});
  const double cmax = learn == 0 ? io::load_model(model).coef.flat().cwiseAbs().maxCoeff() : -1.0;
  return {learn == 0 && cert == 0 && out.rfind("certified", 0) == 0 && cmax >= 0.0 && cmax <= 1e-10,
          "learn exit=" + std::to_string(learn) + " certify exit=" + std::to_string(cert) + " max|c|=" + fmt(cmax)};
}

Outcome oracle_dominance() {
  Rng rng(3);
  double worst = std::numeric_limits<double>::infinity();
  int n = 0;
  for (int k = 0; k < 20; ++k) {
    const Index g = random_dim(rng, 1, 6), v = random_dim(rng, 1, 7), t = random_dim(rng, 1, 4);
    const Tensor3 s = rng.normal_tensor(g, v, t);
    const double lambda = rng.uniform(0.1, 2.0);
    const double star = global_optimum(s, lambda).objective_star;
    for (int j = 0; j < 5; ++j) {
      Model m = random_model(rng, g, v, t, random_dim(rng, 1, 4), random_dim(rng, 1, 4));
      m.coef *= rng.uniform(0.0, 1.0);
      // One model per tensor is pushed to a local minimum so the bound is tested near tightness.
      if (j == 0) m = descend(s, m, lambda, DescentConfig{.max_iters = 5000, .rel_tol = 1e-12});
      worst = std::min(worst, objective(s, m, lambda) - star);
      ++n;
    }
  }
  return {n == 100 && worst >= -1e-9, std::to_string(n) + " models, min(objective - objective_star)=" + fmt(worst)};
}

Outcome certificate_soundness() {
  int accepted = 0, flipped = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const Index g = random_dim(rng, 2, 6), v = random_dim(rng, 2, 7), t = random_dim(rng, 1, 4);
    const Tensor3 s = rng.normal_tensor(g, v, t);
    const double lambda = rng.uniform(0.2, 0.8) * max_singular_value(s);
    const fs::path data = scratch("sound.sdt"), model = scratch("sound_model");
    io::save_sdt(data, s);
    Model m = explicit_factorization(s, lambda, true);
    io::save_model(model, m);
    const std::vector<std::string> args{"certify", "--data", data.string(), "--model", model.string(), "--lambda",
                                        csv::real(lambda)};
    if (cli_run(args) == 0) ++accepted;
    // The largest coefficient is the largest shrunk singular value over all slices.
    Index best = 0;
    for (Index k = 0; k < m.coef.size(); ++k)
      if (std::abs(m.coef.data()[k]) > std::abs(m.coef.data()[best])) best = k;
    m.coef.data()[best] *= 1.1;
    io::save_model(model, m);
    if (cli_run(args) == 3) ++flipped;
  }
  return {accepted == 20 && flipped == 20,
          "accepted " + std::to_string(accepted) + "/20, rejected after corruption " + std::to_string(flipped) + "/20"};
}

Outcome gradient_suite() {
  Clock clock;
  Rng rng(5);
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Index g = random_dim(rng, 1, 6), v = random_dim(rng, 1, 7), t = random_dim(rng, 1, 4);
    const Tensor3 s = rng.normal_tensor(g, v, t);
    Model m = random_model(rng, g, v, t, random_dim(rng, 1, 4), random_dim(rng, 1, 4));
    const auto fd = [&](double& x) {
      const double x0 = x;
      x = x0 + h;
      const double fp = loss(s, m);
      x = x0 - h;
      const double fm = loss(s, m);
      x = x0;
      return (fp - fm) / (2.0 * h);
    };
    const Matrix gg = grad_gamma(s, m), gp = grad_psi(s, m);
    const Tensor3 gc = grad_coef(s, m);
    for (Index i = 0; i < gg.size(); ++i) worst = std::max(worst, rel_err(gg.data()[i], fd(m.gamma.data()[i])));
    for (Index i = 0; i < gp.size(); ++i) worst = std::max(worst, rel_err(gp.data()[i], fd(m.psi.data()[i])));
    for (Index i = 0; i < gc.size(); ++i) worst = std::max(worst, rel_err(gc.data()[i], fd(m.coef.data()[i])));
  }
  const double secs = clock.seconds();
  return {worst <= 1e-5 && secs <= 30.0, "max rel err=" + fmt(worst) + " secs=" + fmt(secs)};
}

Outcome descent_monotone() {
  Rng rng(6);
  double worst_rise = -std::numeric_limits<double>::infinity();
  int sweeps = 0;
  for (int k = 0; k < 10; ++k) {
    const Index g = random_dim(rng, 2, 8), v = random_dim(rng, 2, 9), t = random_dim(rng, 1, 6);
    const Tensor3 s = rng.normal_tensor(g, v, t);
    Model m = random_model(rng, g, v, t, random_dim(rng, 1, 4), random_dim(rng, 1, 4));
    const double lambda = rng.uniform(0.05, 1.0);
    // One sweep per call, so exact fixed points do not end the run early.
    const DescentConfig one{.max_iters = 1, .rel_tol = 1e-300, .nesterov = false};
    double prev = objective(s, m, lambda);
    for (int it = 0; it < 1000; ++it) {
      m = descend(s, m, lambda, one);
      const double f = objective(s, m, lambda);
      worst_rise = std::max(worst_rise, f - prev);
      prev = f;
      ++sweeps;
    }
  }
  return {worst_rise <= 1e-10 && sweeps == 10000,
          "max increase=" + fmt(worst_rise) + " over " + std::to_string(sweeps) + " sweeps"};
}

Outcome escape_descent() {
  Rng rng(7);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 10; ++k) {
    const Index g = random_dim(rng, 2, 8), v = random_dim(rng, 2, 9), t = random_dim(rng, 1, 5);
    const Tensor3 s = rng.normal_tensor(g, v, t);
    const double lambda = rng.uniform(0.2, 0.9) * max_singular_value(s);
    const Model z = Model::zeros(g, v, t);
    const CertificateReport r = check(s, z, lambda);
    if (!r.proposal) return {false, "no escape proposed at instance " + std::to_string(k)};
    worst = std::min(worst, objective(s, z, lambda) - objective(s, apply_escape(z, r), lambda));
  }
  return {worst > 1e-8, "min decrease=" + fmt(worst)};
}

// Minimizer of 0.5||y - x||^2 + lambda ||y||_* by subgradient descent with
// steps 1/k, which converges because the objective is 1-strongly convex.
Matrix sv_shrink_subgradient(const Matrix& y, double lambda, int iters) {
  Matrix x = y;
  for (int k = 1; k <= iters; ++k) {
    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Index r = 0;
    while (r < svd.singularValues().size() && svd.singularValues()(r) > 1e-12) ++r;
    const Matrix sub = svd.matrixU().leftCols(r) * svd.matrixV().leftCols(r).transpose();
    x -= (1.0 / k) * (x - y + lambda * sub);
  }
  return x;
}

Outcome prox_oracles() {
  Rng rng(8);
  int bad_l2 = 0, bad_abs = 0, bad_tau = 0, bad_sv = 0;
  for (int k = 0; k < 100; ++k) {
    // prox_l2: the minimizer is a*x with a in [0, 1]; ternary search over a.
    const Vector x = rng.normal_matrix(random_dim(rng, 1, 6), 1);
    const double tau = 2.0 * rng.uniform();
    const auto phi = [&](double a) { return 0.5 * ((a - 1.0) * x).squaredNorm() + tau * a * x.norm(); };
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      (phi(m1) <= phi(m2) ? hi : lo) = phi(m1) <= phi(m2) ? m2 : m1;
    }
    if ((prox_l2(x, tau) - 0.5 * (lo + hi) * x).norm() > 1e-7 * std::max(1.0, x.norm())) ++bad_l2;

    // prox_abs: grid search with spacing 1e-5.
    const double a = rng.uniform(-4.0, 4.0), t_abs = rng.uniform(0.0, 3.0);
    double best = 0.0, best_val = 0.5 * a * a;
    for (int i = -500000; i <= 500000; ++i) {
      const double y = i * 1e-5;
      const double val = 0.5 * (y - a) * (y - a) + t_abs * std::abs(y);
      if (val < best_val) best_val = val, best = y;
    }
    if (std::abs(prox_abs(a, t_abs) - best) > 1e-5) ++bad_abs;

    // global_step_tau: grid search with spacing 2e-5 over [-4, 4].
    const Index g = random_dim(rng, 1, 5), v = random_dim(rng, 1, 5);
    const Matrix s = rng.normal_matrix(g, v), xs = rng.normal_matrix(g, v), e = rng.normal_matrix(g, v);
    const double lam = rng.uniform(0.0, 3.0);
    const auto f = [&](double t) { return 0.5 * (s - xs - t * e).squaredNorm() + lam * std::abs(t); };
    double tbest = 0.0, fbest = f(0.0);
    for (int i = -200000; i <= 200000; ++i)
      if (f(i * 2e-5) < fbest) fbest = f(i * 2e-5), tbest = i * 2e-5;
    const double t_star = global_step_tau(s, xs, e, lam);
    if (std::abs(t_star - tbest) > 2e-5 || f(t_star) > fbest + 1e-12) ++bad_tau;

    // sv_shrink: subgradient oracle plus objective comparison.
    const Matrix y = rng.normal_matrix(random_dim(rng, 1, 6), random_dim(rng, 1, 6));
    const double ls = rng.uniform(0.05, 2.0);
    const Matrix shrunk = sv_shrink(y, ls), ref = sv_shrink_subgradient(y, ls, 20000);
    const auto fy = [&](const Matrix& z) { return 0.5 * (z - y).squaredNorm() + ls * nuclear_norm(z); };
    if ((shrunk - ref).norm() > 1e-2 * std::max(1.0, y.norm()) || fy(shrunk) > fy(ref) + 1e-12) ++bad_sv;
  }
  return {bad_l2 + bad_abs + bad_tau + bad_sv == 0,
          "mismatches prox_l2=" + std::to_string(bad_l2) + " prox_abs=" + std::to_string(bad_abs) +
              " global_step_tau=" + std::to_string(bad_tau) + " sv_shrink=" + std::to_string(bad_sv) + " of 100 each"};
}

// Piecewise-constant slice: every pixel carries a sum of angular profiles
// selected by the spatial regions it falls in.
VolumeSlice2D phantom_slice(Index g, Index w, Index h) {
  Matrix profiles(g, 3);
  for (Index k = 0; k < 3; ++k) profiles.col(k) = detail::angular_atom(g, k).normalized();
  VolumeSlice2D img(g, w, h);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      Vector px = 0.3 * profiles.col(0);
      if (x >= w / 3 && x < w / 3 + w / 4) px += profiles.col(1);
      const double dx = x - 0.65 * w, dy = y - 0.5 * h;
      if (dx * dx + dy * dy <= 0.08 * w * h) px += 0.8 * profiles.col(2);
      if (y < h / 4) px += 0.5 * profiles.col(1);
      img.slice(y).col(x) = px;
    }
  return img;
}

Outcome denoising() {
  Clock clock;
  const Index g = 15, w = 24, h = 24, p = 4;
  const VolumeSlice2D clean = phantom_slice(g, w, h);
  const double noise_var = clean.squared_norm() / static_cast<double>(clean.size()) / 10.0;
  Rng rng(9);
  VolumeSlice2D noisy = clean;
  for (Index k = 0; k < noisy.size(); ++k) noisy.data()[k] += std::sqrt(noise_var) * rng.normal();
  const double snr = 10.0 * std::log10(clean.squared_norm() / (noisy.flat() - clean.flat()).squaredNorm());

  const PatchSet train = extract_patches(clean, p, 200, 9);
  SolverConfig cfg;
  cfg.lambda = 1.0;
  cfg.init_seed = 9;
  cfg.max_outer_rounds = 20;
  cfg.max_seconds = 240.0;
  Model dict;
  try {
    dict = solve(train.patches, cfg).first;
  } catch (const StallError& e) {
    dict = e.record.final_model;
  }
  const double before = psnr(clean, noisy);
  SweepPoint best{0.0, -std::numeric_limits<double>::infinity()};
  for (const auto& pt : lambda_sweep(noisy, clean, dict.gamma, dict.psi, log_grid(0.01, 1.0, 5), p, 2))
    if (pt.psnr > best.psnr) best = pt;
  const double secs = clock.seconds();
  return {best.psnr >= before + 1.0 && secs <= 600.0,
          "snr=" + fmt(snr) + "dB r1=" + std::to_string(dict.r1()) + " r2=" + std::to_string(dict.r2()) +
              " psnr noisy=" + fmt(before) + " best=" + fmt(best.psnr) + " at lambda=" + fmt(best.lambda) +
              " secs=" + fmt(secs)};
}

Outcome determinism() {
  const fs::path data = scratch("det.sdt");
  if (cli_run({"synth", "--out", data.string(), "--g", "6", "--v", "16", "--t", "20", "--seed", "10"}) != 0)
    return {false, "synth failed"};
  std::vector<std::string> logs;
  std::vector<std::string> models;
  for (const char* threads : {"1", "1", "4", "4"}) {
    const fs::path model = scratch("det_model"), log = scratch("det_log.csv");
    fs::remove_all(model);
    fs::remove(log);
    const int code = cli_run({"--threads", threads, "learn", "--data", data.string(), "--lambda", "0.3", "--seed", "10",
                              "--max-rounds", "30", "--out-model", model.string(), "--log", log.string()});
    if (code != 0 && code != 2) return {false, "learn exit " + std::to_string(code)};
    logs.push_back(slurp(log));
    models.push_back(slurp(model / "gamma.sdt") + slurp(model / "psi.sdt") + slurp(model / "coef.sdt"));
  }
  bool same = !logs[0].empty();
  for (std::size_t k = 1; k < logs.size(); ++k) same = same && logs[k] == logs[0] && models[k] == models[0];
  return {same, "4 runs at threads 1,1,4,4: " + std::string(same ? "byte-identical" : "differ") +
                    " (log " + std::to_string(logs[0].size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int k = 1; k + 1 < argc; ++k)
    if (std::string(argv[k]) == "--only") only = std::atoi(argv[k + 1]);

  const std::vector<std::function<Outcome()>> criteria{
      certified_gap, zero_threshold, oracle_dominance, certificate_soundness, gradient_suite,
      descent_monotone, escape_descent, prox_oracles, denoising, determinism};
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "usage: acceptance [--only N]\n";
    return 1;
  }
  bool all = true;
  for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) {
    if (only && n != only) continue;
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
