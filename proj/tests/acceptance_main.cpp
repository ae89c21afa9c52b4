// Acceptance gate: one self-contained check per acceptance criterion, each
// printing exactly one PASS/FAIL line.  Criteria that exercise the command
// line spawn the real binary (path passed via --atelab); the rest drive the
// library directly.
//
//   acceptance --atelab <path-to-binary> [--only K] [--scratch DIR]
//
// Exit code 0 iff every selected criterion passes.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "atelab/asymptotics.hpp"
#include "atelab/core_model.hpp"
#include "atelab/errors.hpp"
#include "atelab/estimators.hpp"
#include "atelab/experiments.hpp"
#include "atelab/rng.hpp"

namespace fs = std::filesystem;
using namespace atelab;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Context {
  std::string atelab_path;
  fs::path scratch;
  std::vector<std::string> notes;  // appended to the PASS/FAIL line

  void note(const std::string& text) { notes.push_back(text); }
};

struct SpawnResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SpawnResult spawn(Context& ctx, const std::string& args) {
  static int counter = 0;
  const fs::path out_file = ctx.scratch / ("spawn" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      ctx.atelab_path + " " + args + " >" + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  SpawnResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_file);
  return result;
}

// Parse "t,r,se" rows of a table CSV into t -> (r, se).
std::map<double, std::pair<double, double>> parse_table(const std::string& csv) {
  std::map<double, std::pair<double, double>> rows;
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#') continue;
    const std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
    rows[std::stod(line.substr(0, c1))] = {std::stod(line.substr(c1 + 1, c2 - c1 - 1)),
                                           std::stod(line.substr(c2 + 1))};
  }
  return rows;
}

bool check_table(Context& ctx, const std::string& family,
                 const std::vector<std::pair<double, double>>& anchors) {
  const fs::path dir = ctx.scratch / ("table_" + family);
  const SpawnResult run = spawn(
      ctx, "reproduce-tables --family " + family + " --output-dir " + dir.string());
  if (run.exit_code != 0) {
    ctx.note("subcommand exited " + std::to_string(run.exit_code));
    return false;
  }
  const auto rows = parse_table(slurp(dir / ("table_" + family + ".csv")));
  bool ok = true;
  for (const auto& [t, want] : anchors) {
    const auto it = rows.find(t);
    if (it == rows.end()) {
      ctx.note("missing row t=" + std::to_string(t));
      ok = false;
      continue;
    }
    const double got = it->second.first;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "t=%g r=%.4f target=%.4f", t, got, want);
    ctx.note(buf);
    if (std::fabs(got - want) > 0.02) ok = false;
  }
  return ok;
}

bool criterion_1(Context& ctx) {
  return check_table(ctx, "uniform", {{2.0, 0.8302}, {1.0, 0.9022}, {0.5, 0.9652}});
}

bool criterion_2(Context& ctx) {
  return check_table(ctx, "normal", {{1.0, 0.8445}, {0.5, 0.9141}, {0.25, 0.9708}});
}

bool criterion_3(Context& ctx) {
  bool ok = true;
  const std::vector<std::pair<CovariateDist, std::vector<double>>> grids = {
      {CovariateDist::UniformMinus1To1, {2.0, 1.0, 0.5}},
      {CovariateDist::StandardNormal, {1.0, 0.5, 0.25}},
  };
  std::uint64_t stream = 0;
  for (const auto& [dist, ts] : grids) {
    for (double t : ts) {
      DgpConfig config;
      config.covariate_dist = dist;
      config.t = t;
      config.theta = 0.0;
      const RThetaPoint point =
          r_theta_detail(config, 1000000, derive_stream(20260816, 300 + stream++));
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s t=%g r=%.4f se=%.4f",
                    dist == CovariateDist::UniformMinus1To1 ? "uniform" : "normal",
                    t, point.r, point.std_error);
      ctx.note(buf);
      if (std::fabs(point.r - 1.0) > 3.0 * point.std_error) ok = false;
    }
  }
  return ok;
}

bool criterion_4(Context& ctx) {
  Rng rng(derive_stream(20260816, 999));
  int violations = 0;
  const int trials = 100;
  for (int i = 0; i < trials; ++i) {
    DgpConfig config;
    config.covariate_dist = rng.bernoulli(0.5) ? CovariateDist::UniformMinus1To1
                                               : CovariateDist::StandardNormal;
    config.t = rng.uniform(0.1, 2.0);
    config.theta = rng.uniform(0.0, 2.0 * kPi);
    const std::uint64_t seed = derive_stream(20260816, 4000 + static_cast<std::uint64_t>(i));
    const std::uint64_t draws = 100000;
    const PopulationModel model = make_population_model(config, draws, seed);
    const MomentEstimate bound = efficiency_bound(model, draws, seed);
    const MomentEstimate ipw = asyvar_ipw_known(model, draws, seed);
    const MomentEstimate imp = asyvar_imp_known(model, draws, seed);
    const MomentEstimate gain = lm_gain(model, draws, seed);
    auto tol2 = [](const MomentEstimate& a, const MomentEstimate& b) {
      return 3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    };
    const bool ok = bound.value <= ipw.value + tol2(bound, ipw) &&
                    bound.value <= imp.value + tol2(bound, imp) &&
                    gain.value >= -3.0 * gain.std_error &&
                    gain.value <= ipw.value - bound.value + tol2(gain, ipw) +
                                      3.0 * bound.std_error;
    if (!ok) ++violations;
  }
  ctx.note(std::to_string(trials) + " random designs, " +
           std::to_string(violations) + " ordering violations");
  return violations == 0;
}

bool criterion_5(Context& ctx) {
  bool ok = true;
  const std::vector<std::string> runs = {
      "covariate-effects --dist uniform --t 1 --theta 1.5707963267948966 "
      "--draws 300000",
      "covariate-effects --dist normal --t 0.5 --theta 0.78539816339744828 "
      "--draws 300000",
  };
  int index = 0;
  for (const std::string& args : runs) {
    const fs::path dir = ctx.scratch / ("cov" + std::to_string(index++));
    const SpawnResult run = spawn(ctx, args + " --output-dir " + dir.string());
    ctx.note("run " + std::to_string(index) + " exit=" + std::to_string(run.exit_code));
    if (run.exit_code != 0) ok = false;
  }
  return ok;
}

// --- criterion 6: brute-force micro oracles --------------------------------

Sample make_sample(const std::vector<int>& d, const std::vector<double>& y,
                   const std::vector<double>& x) {
  Sample sample;
  for (std::size_t i = 0; i < d.size(); ++i)
    sample.units.push_back(Unit{d[i], y[i], CovariateVector{{x[i]}, std::nullopt}});
  return sample;
}

bool close_rel(double got, double want, double rel = 1e-10) {
  return std::fabs(got - want) <= rel * std::max(1.0, std::fabs(want));
}

bool criterion_6(Context& ctx) {
  bool ok = true;
  auto expect = [&](bool cond, const std::string& what) {
    if (!cond) {
      ctx.note("mismatch: " + what);
      ok = false;
    }
  };

  const PropensityFunction half{[](const CovariateVector&) { return 0.5; }, 1e-6};

  // Normalized weighting contrast vs its defining formula.
  {
    const Sample s = make_sample({1, 0}, {2.0, 1.0}, {0.0, 0.0});
    expect(close_rel(ipw_known(s, half).estimate, 1.0), "two-unit weighting contrast");
  }
  {
    const Sample s = make_sample({1, 1, 0}, {4.0, 1.0, 0.0}, {0.0, 1.0, 2.0});
    const PropensityFunction ps{[](const CovariateVector& x) {
                                  if (x.values[0] == 0.0) return 0.8;
                                  if (x.values[0] == 1.0) return 0.2;
                                  return 0.5;
                                },
                                1e-6};
    double tn = 0, td = 0, cn = 0, cd = 0;
    for (const Unit& u : s.units) {
      const double p = ps.eval(u.x);
      if (u.d) {
        tn += u.y / p;
        td += 1 / p;
      } else {
        cn += u.y / (1 - p);
        cd += 1 / (1 - p);
      }
    }
    expect(close_rel(ipw_known(s, ps).estimate, tn / td - cn / cd),
           "three-unit weighting contrast");
  }

  // Imputation, both modes, against direct cell enumeration on two cells.
  {
    const Sample s = make_sample({1, 0, 0, 1, 1, 0}, {5, 2, 4, 7, 3, 1},
                                 {1, 1, 1, 2, 2, 2});
    const PropensityFunction ps{
        [](const CovariateVector& x) { return x.values[0] == 1.0 ? 0.4 : 0.6; }, 1e-6};
    double want_known = 0.0, want_est = 0.0;
    for (const Unit& u : s.units) {
      double dy = 0, cy = 0, dsum = 0;
      int count = 0;
      for (const Unit& v : s.units) {
        if (v.x.values[0] != u.x.values[0]) continue;
        ++count;
        dy += v.d * v.y;
        cy += (1 - v.d) * v.y;
        dsum += v.d;
      }
      const double p = ps.eval(u.x), q = dsum / count;
      want_known += (dy / count) / p - (cy / count) / (1 - p);
      want_est += (dy / count) / q - (cy / count) / (1 - q);
    }
    want_known /= static_cast<double>(s.n());
    want_est /= static_cast<double>(s.n());
    expect(close_rel(imputation_known(s, ps).estimate, want_known),
           "known-propensity imputation");
    expect(close_rel(imputation_estimated(s).estimate, want_est),
           "estimated imputation");
  }

  // KPS with zero regressions: the unnormalized weighting sum.
  {
    const Sample s = make_sample({1, 1, 0, 0}, {3, 1, 2, 0}, {0, 0, 0, 0});
    OutcomeRegressionStrategy zero;
    zero.predict_treated = [](const CovariateVector&) { return 0.0; };
    zero.predict_control = [](const CovariateVector&) { return 0.0; };
    double want = 0.0;
    for (const Unit& u : s.units) want += u.d ? u.y / 0.5 : -u.y / 0.5;
    want /= static_cast<double>(s.n());
    expect(close_rel(kps(s, half, zero).estimate, want), "zero-regression correction");

    // Cell-mean regressions on the balanced single cell reproduce the
    // imputation value, and both match the full display evaluated by hand.
    const auto reg = fit_outcome_regression(s, OutcomeRegressionKind::CellMeans);
    const double bt = (3.0 + 1.0) / 2.0, bc = (2.0 + 0.0) / 2.0;
    double want_kps = 0.0;
    for (const Unit& u : s.units) {
      const double base = u.d ? u.y / 0.5 : -u.y / 0.5;
      want_kps += base - (u.d - 0.5) * (bt / 0.5 - bc / 0.5);
    }
    want_kps /= static_cast<double>(s.n());
    expect(close_rel(kps(s, half, reg).estimate, want_kps), "cell-mean correction");
    expect(close_rel(kps(s, half, reg).estimate,
                     imputation_known(s, half).estimate),
           "correction equals imputation on the balanced cell");
  }

  // Constant covariates collapse the linear modification to plain weighting.
  {
    const Sample s = make_sample({1, 0, 1, 0}, {2, 1, 4, 2}, {3, 3, 3, 3});
    expect(close_rel(lm(s, half).estimate, ipw_known(s, half).estimate),
           "constant-covariate fallback");
  }
  return ok;
}

bool criterion_7(Context& ctx) {
  DgpConfig config;
  config.theta = kPi / 2.0;
  const VarianceCheck ipw =
      finite_sample_variance_check(config, "ipw_known", 4000, 2000, 20260816);
  const VarianceCheck lm_check =
      finite_sample_variance_check(config, "lm", 4000, 2000, 20260816);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "ratio ipw=%.3f lm=%.3f, n*var ipw=%.3f lm=%.3f",
                ipw.ratio, lm_check.ratio, ipw.n_times_variance,
                lm_check.n_times_variance);
  ctx.note(buf);
  return ipw.ratio >= 0.9 && ipw.ratio <= 1.1 && lm_check.ratio >= 0.9 &&
         lm_check.ratio <= 1.1 &&
         lm_check.replication_variance < ipw.replication_variance;
}

bool criterion_8(Context& ctx) {
  DgpConfig config;
  config.a1 = 1.0;
  config.theta = kPi / 2.0;
  const double truth = dgp_true_ate(config);
  auto rmse = [&](const ReplicationResult& r) {
    double s = 0.0;
    for (double v : r.estimates) s += (v - truth) * (v - truth);
    return std::sqrt(s / static_cast<double>(r.estimates.size()));
  };
  const auto small = run_replications(config, {"ipw_known", "lm"}, 1000, 2000,
                                      derive_stream(20260816, 81));
  const auto large = run_replications(config, {"ipw_known", "lm"}, 4000, 2000,
                                      derive_stream(20260816, 82));
  bool ok = true;
  for (std::size_t e = 0; e < 2; ++e) {
    const double ratio = rmse(large[e]) / rmse(small[e]);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s rmse ratio=%.3f",
                  small[e].estimator_name.c_str(), ratio);
    ctx.note(buf);
    if (ratio < 0.4 || ratio > 0.6) ok = false;
  }
  return ok;
}

bool criterion_9(Context& ctx) {
  DgpConfig low;
  low.theta = kPi / 2.0;
  DgpConfig high = low;
  high.sigma_t = 2.0;
  high.sigma_c = 2.0;
  const RThetaPoint a = r_theta_detail(low, 300000, derive_stream(20260816, 91));
  const RThetaPoint b = r_theta_detail(high, 300000, derive_stream(20260816, 92));
  const double tol =
      3.0 * std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "r(1,1)=%.4f r(2,2)=%.4f tol=%.4f", a.r, b.r, tol);
  ctx.note(buf);
  return std::fabs(a.r - b.r) <= tol;
}

bool criterion_10(Context& ctx) {
  const fs::path fixture = ctx.scratch / "fixture.csv";
  {
    std::ofstream out(fixture, std::ios::binary);
    out << "d,y,x1\n1,2,0.5\n0,1,-0.5\n1,3,0.25\n0,2,-0.25\n";
  }
  const std::vector<std::string> commands = {
      "estimate --input " + fixture.string() +
          " --estimator lm --propensity logistic:0,0",
      "asymptotics --theta 0.6 --draws 20000",
      "reproduce-tables --family uniform --draws 4000 --theta-grid 8",
      "reproduce-curves --family uniform --draws 4000 --theta-grid 8",
      "covariate-effects --theta 1.5707963267948966 --draws 20000",
      "replications --a1 1 --n 100 --reps 20",
  };
  bool ok = true;
  int index = 0;
  for (const std::string& command : commands) {
    const fs::path dir_a = ctx.scratch / ("det" + std::to_string(index) + "a");
    const fs::path dir_b = ctx.scratch / ("det" + std::to_string(index) + "b");
    const SpawnResult a = spawn(ctx, command + " --output-dir " + dir_a.string());
    const SpawnResult b = spawn(ctx, command + " --output-dir " + dir_b.string());
    bool same = a.exit_code == b.exit_code && a.out == b.out;
    std::size_t files = 0;
    if (fs::exists(dir_a)) {
      for (const auto& entry : fs::directory_iterator(dir_a)) {
        ++files;
        const fs::path twin = dir_b / entry.path().filename();
        if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) same = false;
      }
    }
    const std::string verb = command.substr(0, command.find(' '));
    ctx.note(verb + (same ? " ok" : " MISMATCH") +
             (files ? " (" + std::to_string(files) + " files)" : ""));
    if (!same) ok = false;
    ++index;
  }
  return ok;
}

struct Criterion {
  int id;
  const char* label;
  std::function<bool(Context&)> run;
  bool needs_binary;
};

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.scratch = fs::temp_directory_path() / "atelab_acceptance";
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--atelab" && i + 1 < argc) ctx.atelab_path = argv[++i];
    else if (arg == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
    else if (arg == "--scratch" && i + 1 < argc) ctx.scratch = argv[++i];
    else {
      std::cerr << "usage: acceptance --atelab PATH [--only K] [--scratch DIR]\n";
      return 2;
    }
  }
  fs::create_directories(ctx.scratch);

  const std::vector<Criterion> criteria = {
      {1, "uniform-table values within 0.02 of 0.8302 / 0.9022 / 0.9652",
       criterion_1, true},
      {2, "normal-table values within 0.02 of 0.8445 / 0.9141 / 0.9708",
       criterion_2, true},
      {3, "equal-slope anchor: R(0, t) = 1 within 3 SE on all six designs",
       criterion_3, false},
      {4, "variance orderings hold on 100 randomized designs at 3 SE",
       criterion_4, false},
      {5, "covariate-effect flags all pass on both reference designs",
       criterion_5, true},
      {6, "micro-scale estimates equal brute-force formula evaluation (1e-10)",
       criterion_6, false},
      {7, "n*variance/asymptotic in [0.9, 1.1] at n=4000; modified < weighting",
       criterion_7, false},
      {8, "quadrupling n halves the RMSE (ratio in [0.4, 0.6])", criterion_8, false},
      {9, "R unchanged when noise doubles (3 SE)", criterion_9, false},
      {10, "byte-identical outputs across repeated seeded runs", criterion_10, true},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    ctx.notes.clear();
    bool ok = false;
    std::string error;
    if (criterion.needs_binary && ctx.atelab_path.empty()) {
      error = "needs --atelab PATH";
    } else {
      try {
        ok = criterion.run(ctx);
      } catch (const std::exception& e) {
        error = e.what();
      }
    }
    std::string detail;
    for (const std::string& note : ctx.notes) detail += "; " + note;
    if (!error.empty()) detail += "; error: " + error;
    std::printf("%s [%d] %s%s\n", ok ? "PASS" : "FAIL", criterion.id,
                criterion.label, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
