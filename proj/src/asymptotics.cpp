#include "atelab/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "atelab/errors.hpp"
#include "atelab/linalg.hpp"

namespace atelab {

namespace {

// Stream keys: every operation draws from its own substream of the caller's
// seed, so results are independent across operations and bit-stable
// regardless of evaluation order.
constexpr std::uint64_t kStreamCache = 1;
constexpr std::uint64_t kStreamBound = 2;
constexpr std::uint64_t kStreamImp = 3;
constexpr std::uint64_t kStreamIpw = 4;
constexpr std::uint64_t kStreamGain = 5;
constexpr std::uint64_t kStreamCompareBase = 10;

void require_caches(const PopulationModel& model) {
  if (model.cache_draws == 0)
    throw ValidationError(
        "population model caches missing: call cache_population_means first");
}

struct Welford {
  double mean = 0.0, m2 = 0.0;
  std::uint64_t count = 0;
  void add(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }
  double variance() const {
    return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
  double se_of_mean() const {
    return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  }
};

}  // namespace

double CoordinateMarginal::draw(Rng& rng) const {
  switch (kind) {
    case Kind::UniformMinus1To1:
      return 2.0 * rng.uniform01() - 1.0;
    case Kind::StandardNormal:
      return rng.normal();
    case Kind::FiniteUniform: {
      const std::size_t m = support.size();
      std::size_t idx = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(m));
      if (idx >= m) idx = m - 1;
      return support[idx];
    }
  }
  throw std::logic_error("unreachable marginal kind");
}

double CoordinateMarginal::mean() const {
  switch (kind) {
    case Kind::UniformMinus1To1:
    case Kind::StandardNormal:
      return 0.0;
    case Kind::FiniteUniform: {
      double s = 0.0;
      for (double v : support) s += v;
      return s / static_cast<double>(support.size());
    }
  }
  throw std::logic_error("unreachable marginal kind");
}

GaussRule CoordinateMarginal::expectation_rule(int order) const {
  switch (kind) {
    case Kind::UniformMinus1To1: {
      GaussRule rule = gauss_legendre(order);
      for (double& w : rule.weights) w *= 0.5;  // density 1/2 on [-1, 1]
      return rule;
    }
    case Kind::StandardNormal:
      return gauss_hermite_standard_normal(order);
    case Kind::FiniteUniform: {
      GaussRule rule;
      rule.nodes = support;
      rule.weights.assign(support.size(), 1.0 / static_cast<double>(support.size()));
      return rule;
    }
  }
  throw std::logic_error("unreachable marginal kind");
}

void cache_population_means(PopulationModel& model, std::uint64_t draws,
                            std::uint64_t seed) {
  if (draws == 0) throw ValidationError("cache_population_means: draws must be >= 1");
  Rng rng(derive_stream(seed, kStreamCache));
  const std::size_t dim = static_cast<std::size_t>(model.dim);
  std::vector<double> x(dim);
  Welford wt, wc, wdiff;
  std::vector<Welford> wx(dim);
  double cross_m2 = 0.0;  // co-moment of (beta_t, beta_c)
  for (std::uint64_t it = 0; it < draws; ++it) {
    model.sample_x(rng, x);
    const double bt = model.beta_t(x);
    const double bc = model.beta_c(x);
    const double dt = bt - wt.mean;  // deviation from the pre-update mean
    wt.add(bt);
    wc.add(bc);
    cross_m2 += dt * (bc - wc.mean);  // post-update mean: standard co-moment update
    wdiff.add(bt - bc);
    for (std::size_t k = 0; k < dim; ++k) wx[k].add(x[k]);
  }
  model.beta_t_bar = {wt.mean, wt.se_of_mean(), draws};
  model.beta_c_bar = {wc.mean, wc.se_of_mean(), draws};
  model.beta = {wdiff.mean, wdiff.se_of_mean(), draws};
  model.mean_x.resize(dim);
  model.mean_x_se.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    model.mean_x[k] = wx[k].mean;
    model.mean_x_se[k] = wx[k].se_of_mean();
  }
  model.cov_beta_bars =
      draws > 1 ? cross_m2 / static_cast<double>(draws - 1) / static_cast<double>(draws)
                : 0.0;
  model.cache_draws = draws;
}

MomentEstimate efficiency_bound(const PopulationModel& model, std::uint64_t draws,
                                std::uint64_t seed) {
  if (draws == 0) throw ValidationError("efficiency_bound: draws must be >= 1");
  require_caches(model);
  Rng rng(derive_stream(seed, kStreamBound));
  const double beta = model.beta.value;
  std::vector<double> x(static_cast<std::size_t>(model.dim));
  Welford acc;
  double sum_beta_dev = 0.0;
  for (std::uint64_t it = 0; it < draws; ++it) {
    model.sample_x(rng, x);
    const double p = model.p(x);
    const double dev = model.beta_t(x) - model.beta_c(x) - beta;
    acc.add(model.var_t(x) / p + model.var_c(x) / (1.0 - p) + dev * dev);
    sum_beta_dev += dev;
  }
  // Sensitivity to the cached beta (near zero at the optimum, kept anyway).
  const double d_beta = -2.0 * sum_beta_dev / static_cast<double>(draws);
  const double se = std::sqrt(acc.se_of_mean() * acc.se_of_mean() +
                              d_beta * d_beta * model.beta.std_error * model.beta.std_error);
  return {acc.mean, se, draws};
}

MomentEstimate asyvar_imp_known(const PopulationModel& model, std::uint64_t draws,
                                std::uint64_t seed) {
  if (draws == 0) throw ValidationError("asyvar_imp_known: draws must be >= 1");
  require_caches(model);
  Rng rng(derive_stream(seed, kStreamImp));
  std::vector<double> x(static_cast<std::size_t>(model.dim));
  Welford acc;
  for (std::uint64_t it = 0; it < draws; ++it) {
    model.sample_x(rng, x);
    const double p = model.p(x);
    const double bt = model.beta_t(x);
    const double bc = model.beta_c(x);
    acc.add((model.var_t(x) + bt * bt) / p + (model.var_c(x) + bc * bc) / (1.0 - p));
  }
  const double beta = model.beta.value;
  const double d_beta = -2.0 * beta;  // sensitivity of the -beta^2 term
  const double se = std::sqrt(acc.se_of_mean() * acc.se_of_mean() +
                              d_beta * d_beta * model.beta.std_error * model.beta.std_error);
  return {acc.mean - beta * beta, se, draws};
}

MomentEstimate asyvar_ipw_known(const PopulationModel& model, std::uint64_t draws,
                                std::uint64_t seed) {
  if (draws == 0) throw ValidationError("asyvar_ipw_known: draws must be >= 1");
  require_caches(model);
  Rng rng(derive_stream(seed, kStreamIpw));
  const double bt_bar = model.beta_t_bar.value;
  const double bc_bar = model.beta_c_bar.value;
  std::vector<double> x(static_cast<std::size_t>(model.dim));
  Welford acc;
  double sens_t = 0.0, sens_c = 0.0;  // d/d(bt_bar), d/d(bc_bar)
  for (std::uint64_t it = 0; it < draws; ++it) {
    model.sample_x(rng, x);
    const double p = model.p(x);
    const double dev_t = model.beta_t(x) - bt_bar;
    const double dev_c = model.beta_c(x) - bc_bar;
    acc.add((model.var_t(x) + dev_t * dev_t) / p +
            (model.var_c(x) + dev_c * dev_c) / (1.0 - p));
    sens_t += -2.0 * dev_t / p;
    sens_c += -2.0 * dev_c / (1.0 - p);
  }
  sens_t /= static_cast<double>(draws);
  sens_c /= static_cast<double>(draws);
  const double vt = model.beta_t_bar.std_error * model.beta_t_bar.std_error;
  const double vc = model.beta_c_bar.std_error * model.beta_c_bar.std_error;
  const double cache_var = sens_t * sens_t * vt + sens_c * sens_c * vc +
                           2.0 * sens_t * sens_c * model.cov_beta_bars;
  const double se =
      std::sqrt(acc.se_of_mean() * acc.se_of_mean() + std::max(0.0, cache_var));
  return {acc.mean, se, draws};
}

MomentEstimate lm_gain(const PopulationModel& model, std::uint64_t draws,
                       std::uint64_t seed) {
  if (draws == 0) throw ValidationError("lm_gain: draws must be >= 1");
  require_caches(model);
  Rng rng(derive_stream(seed, kStreamGain));
  const int dim = model.dim;
  const double bt_bar = model.beta_t_bar.value;
  const double bc_bar = model.beta_c_bar.value;
  const Eigen::Map<const Eigen::VectorXd> mu(model.mean_x.data(), dim);

  const std::uint64_t block_count = std::min<std::uint64_t>(256, draws);
  const std::uint64_t base = draws / block_count, extra = draws % block_count;

  Eigen::MatrixXd a_total = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b_total = Eigen::VectorXd::Zero(dim);
  std::vector<Eigen::MatrixXd> a_block(block_count);
  std::vector<Eigen::VectorXd> b_block(block_count);
  // Sensitivity accumulators for the cached means:
  //   w = E[(X-mu) h],  u_t = E[(X-mu)/p],  u_c = E[(X-mu)/(1-p)],  g_bar = E[g].
  Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd ut_sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd uc_sum = Eigen::VectorXd::Zero(dim);
  double g_sum = 0.0;

  std::vector<double> x(static_cast<std::size_t>(dim));
  Eigen::VectorXd dev(dim);
  for (std::uint64_t blk = 0; blk < block_count; ++blk) {
    const std::uint64_t size = base + (blk < extra ? 1 : 0);
    Eigen::MatrixXd a_sum = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd b_sum = Eigen::VectorXd::Zero(dim);
    for (std::uint64_t it = 0; it < size; ++it) {
      model.sample_x(rng, x);
      for (int k = 0; k < dim; ++k)
        dev(k) = x[static_cast<std::size_t>(k)] - mu(k);
      const double p = model.p(x);
      const double h = 1.0 / (p * (1.0 - p));
      const double g = (model.beta_t(x) - bt_bar) / p + (model.beta_c(x) - bc_bar) / (1.0 - p);
      a_sum.noalias() += dev * dev.transpose() * h;
      b_sum.noalias() += dev * g;
      w_sum.noalias() += dev * h;
      ut_sum.noalias() += dev / p;
      uc_sum.noalias() += dev / (1.0 - p);
      g_sum += g;
    }
    a_total += a_sum;
    b_total += b_sum;
    a_block[blk] = a_sum / static_cast<double>(size);
    b_block[blk] = b_sum / static_cast<double>(size);
  }

  const double nd = static_cast<double>(draws);
  const Eigen::MatrixXd a = a_total / nd;
  const Eigen::VectorXd b = b_total / nd;
  const Eigen::VectorXd alpha = pinv_solve(a, b);
  const double gain = b.dot(alpha);

  // Block spread of the linearized scalar h_k = 2 alpha.b_k - alpha.A_k alpha.
  Welford blocks;
  for (std::uint64_t blk = 0; blk < block_count; ++blk)
    blocks.add(2.0 * alpha.dot(b_block[blk]) - alpha.dot(a_block[blk] * alpha));
  double var_gain = block_count > 1
                        ? blocks.variance() / static_cast<double>(block_count)
                        : 0.0;

  // Propagated uncertainty of the cached means (delta method):
  //   d gain / d bt_bar = -2 alpha.u_t, d gain / d bc_bar = -2 alpha.u_c,
  //   d gain / d mu_j   =  2 alpha_j (w.alpha - g_bar).
  const Eigen::VectorXd w = w_sum / nd;
  const double d_bt = -2.0 * alpha.dot(ut_sum / nd);
  const double d_bc = -2.0 * alpha.dot(uc_sum / nd);
  const double vt = model.beta_t_bar.std_error * model.beta_t_bar.std_error;
  const double vc = model.beta_c_bar.std_error * model.beta_c_bar.std_error;
  var_gain += std::max(0.0, d_bt * d_bt * vt + d_bc * d_bc * vc +
                                2.0 * d_bt * d_bc * model.cov_beta_bars);
  const double mu_factor = w.dot(alpha) - g_sum / nd;
  for (int k = 0; k < dim; ++k) {
    const double d_mu = 2.0 * alpha(k) * mu_factor;
    var_gain += d_mu * d_mu * model.mean_x_se[static_cast<std::size_t>(k)] *
                model.mean_x_se[static_cast<std::size_t>(k)];
  }
  return {gain, std::sqrt(var_gain), draws};
}

CovariateProjection marginalize(const PopulationModel& model,
                                const std::vector<int>& kept_indices,
                                int quadrature_nodes) {
  if (!model.coordinate_marginals)
    throw UnsupportedModel(
        "marginalize requires a model with independent coordinates");
  if (quadrature_nodes < 1)
    throw ValidationError("marginalize: quadrature node count must be >= 1");
  std::vector<int> kept = kept_indices;
  std::sort(kept.begin(), kept.end());
  if (kept.empty() || std::unique(kept.begin(), kept.end()) != kept.end() ||
      kept.front() < 0 || kept.back() >= model.dim)
    throw ValidationError("marginalize: kept indices must be a nonempty subset");

  std::vector<int> dropped;
  for (int k = 0; k < model.dim; ++k)
    if (!std::binary_search(kept.begin(), kept.end(), k)) dropped.push_back(k);

  // Tensor grid over the dropped coordinates: rows of dropped-values with a
  // product weight each (a single all-kept "row" of weight 1 when nothing is
  // dropped).
  struct Projection {
    std::vector<int> kept, dropped;
    int parent_dim = 0;
    std::vector<std::vector<double>> grid_values;  // [point][dropped coord]
    std::vector<double> grid_weights;
    std::function<double(const std::vector<double>&)> p, beta_t, beta_c, var_t, var_c;

    double integrate(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<double>& x_kept) const {
      std::vector<double> x(static_cast<std::size_t>(parent_dim));
      for (std::size_t j = 0; j < kept.size(); ++j)
        x[static_cast<std::size_t>(kept[j])] = x_kept[j];
      double acc = 0.0;
      for (std::size_t g = 0; g < grid_weights.size(); ++g) {
        for (std::size_t j = 0; j < dropped.size(); ++j)
          x[static_cast<std::size_t>(dropped[j])] = grid_values[g][j];
        acc += grid_weights[g] * f(x);
      }
      return acc;
    }
    // Law of total variance: E[var | kept] + E[mean^2 | kept] - E[mean | kept]^2.
    double total_variance(const std::function<double(const std::vector<double>&)>& var,
                          const std::function<double(const std::vector<double>&)>& mean,
                          const std::vector<double>& x_kept) const {
      std::vector<double> x(static_cast<std::size_t>(parent_dim));
      for (std::size_t j = 0; j < kept.size(); ++j)
        x[static_cast<std::size_t>(kept[j])] = x_kept[j];
      double acc = 0.0, mean_acc = 0.0;
      for (std::size_t g = 0; g < grid_weights.size(); ++g) {
        for (std::size_t j = 0; j < dropped.size(); ++j)
          x[static_cast<std::size_t>(dropped[j])] = grid_values[g][j];
        const double m = mean(x);
        acc += grid_weights[g] * (var(x) + m * m);
        mean_acc += grid_weights[g] * m;
      }
      return std::max(0.0, acc - mean_acc * mean_acc);
    }
  };

  auto proj = std::make_shared<Projection>();
  proj->kept = kept;
  proj->dropped = dropped;
  proj->parent_dim = model.dim;
  proj->p = model.p;
  proj->beta_t = model.beta_t;
  proj->beta_c = model.beta_c;
  proj->var_t = model.var_t;
  proj->var_c = model.var_c;
  proj->grid_values.push_back({});
  proj->grid_weights.push_back(1.0);
  for (int d : dropped) {
    const GaussRule rule =
        (*model.coordinate_marginals)[static_cast<std::size_t>(d)].expectation_rule(
            quadrature_nodes);
    std::vector<std::vector<double>> new_values;
    std::vector<double> new_weights;
    for (std::size_t g = 0; g < proj->grid_weights.size(); ++g)
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        std::vector<double> row = proj->grid_values[g];
        row.push_back(rule.nodes[i]);
        new_values.push_back(std::move(row));
        new_weights.push_back(proj->grid_weights[g] * rule.weights[i]);
      }
    proj->grid_values = std::move(new_values);
    proj->grid_weights = std::move(new_weights);
  }

  CovariateProjection result;
  result.kept_indices = kept;
  PopulationModel& projected = result.model;
  projected.dim = static_cast<int>(kept.size());

  std::vector<CoordinateMarginal> kept_marginals;
  for (int k : kept)
    kept_marginals.push_back((*model.coordinate_marginals)[static_cast<std::size_t>(k)]);
  projected.coordinate_marginals = kept_marginals;
  projected.sample_x = [kept_marginals](Rng& rng, std::vector<double>& x) {
    for (std::size_t j = 0; j < kept_marginals.size(); ++j)
      x[j] = kept_marginals[j].draw(rng);
  };
  projected.p = [proj](const std::vector<double>& x) { return proj->integrate(proj->p, x); };
  projected.beta_t = [proj](const std::vector<double>& x) {
    return proj->integrate(proj->beta_t, x);
  };
  projected.beta_c = [proj](const std::vector<double>& x) {
    return proj->integrate(proj->beta_c, x);
  };
  projected.var_t = [proj](const std::vector<double>& x) {
    return proj->total_variance(proj->var_t, proj->beta_t, x);
  };
  projected.var_c = [proj](const std::vector<double>& x) {
    return proj->total_variance(proj->var_c, proj->beta_c, x);
  };

  // Population means are invariant under projection; the covariate cache is
  // the kept subset.
  projected.beta_t_bar = model.beta_t_bar;
  projected.beta_c_bar = model.beta_c_bar;
  projected.beta = model.beta;
  projected.cov_beta_bars = model.cov_beta_bars;
  projected.cache_draws = model.cache_draws;
  for (int k : kept) {
    if (!model.mean_x.empty())
      projected.mean_x.push_back(model.mean_x[static_cast<std::size_t>(k)]);
    if (!model.mean_x_se.empty())
      projected.mean_x_se.push_back(model.mean_x_se[static_cast<std::size_t>(k)]);
  }
  return result;
}

CovariateSetComparison compare_covariate_sets(const PopulationModel& model,
                                              std::uint64_t draws, std::uint64_t seed) {
  if (model.dim != 3)
    throw ValidationError(
        "compare_covariate_sets expects the 3-coordinate "
        "(instrument, confounder, outcome-predictor) layout");
  require_caches(model);

  const PopulationModel& full = model;
  const PopulationModel drop_c = marginalize(model, {0, 1}).model;
  const PopulationModel drop_i = marginalize(model, {1, 2}).model;
  const PopulationModel* models[3] = {&full, &drop_c, &drop_i};

  CovariateSetComparison cmp;
  for (int s = 0; s < 3; ++s) {
    const std::uint64_t set_seed = derive_stream(seed, kStreamCompareBase + static_cast<std::uint64_t>(s));
    cmp.bound[static_cast<std::size_t>(s)] = efficiency_bound(*models[s], draws, set_seed);
    cmp.asyvar_imp[static_cast<std::size_t>(s)] = asyvar_imp_known(*models[s], draws, set_seed);
    cmp.asyvar_ipw[static_cast<std::size_t>(s)] = asyvar_ipw_known(*models[s], draws, set_seed);
  }

  auto combined = [](const MomentEstimate& a, const MomentEstimate& b) {
    return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
  };
  auto flag_equal = [&](const std::string& name, const MomentEstimate& reduced,
                        const MomentEstimate& full_value) {
    const double tol = 3.0 * combined(reduced, full_value);
    const double diff = reduced.value - full_value.value;
    cmp.flags.push_back({name, diff, tol, std::abs(diff) <= tol});
  };
  auto flag_not_larger = [&](const std::string& name, const MomentEstimate& reduced,
                             const MomentEstimate& full_value) {
    const double tol = 3.0 * combined(reduced, full_value);
    const double diff = reduced.value - full_value.value;
    cmp.flags.push_back({name, diff, tol, diff <= tol});
  };
  auto flag_not_smaller = [&](const std::string& name, const MomentEstimate& reduced,
                              const MomentEstimate& full_value) {
    const double tol = 3.0 * combined(reduced, full_value);
    const double diff = reduced.value - full_value.value;
    cmp.flags.push_back({name, diff, tol, diff >= -tol});
  };

  const auto kDropC = static_cast<std::size_t>(CovariateSet::DropOutcomePredictor);
  const auto kDropI = static_cast<std::size_t>(CovariateSet::DropInstrument);
  const auto kFull = static_cast<std::size_t>(CovariateSet::Full);
  flag_not_smaller("bound_not_smaller_dropping_c", cmp.bound[kDropC], cmp.bound[kFull]);
  flag_equal("imp_unchanged_dropping_c", cmp.asyvar_imp[kDropC], cmp.asyvar_imp[kFull]);
  flag_equal("ipw_unchanged_dropping_c", cmp.asyvar_ipw[kDropC], cmp.asyvar_ipw[kFull]);
  flag_not_larger("bound_not_larger_dropping_i", cmp.bound[kDropI], cmp.bound[kFull]);
  flag_not_larger("imp_not_larger_dropping_i", cmp.asyvar_imp[kDropI], cmp.asyvar_imp[kFull]);
  flag_not_larger("ipw_not_larger_dropping_i", cmp.asyvar_ipw[kDropI], cmp.asyvar_ipw[kFull]);
  return cmp;
}

}  // namespace atelab
