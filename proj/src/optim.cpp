#include "hermnet/optim.hpp"

#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "hermnet/rng.hpp"

namespace hermnet {

void SearchSpace::validate() const {
  if (dims.empty()) throw std::invalid_argument("SearchSpace: no dimensions");
  for (const auto& d : dims)
    if (!(d.lower < d.upper))
      throw std::invalid_argument("SearchSpace: lower bound must be below upper bound");
}

Eigen::VectorXd SearchSpace::materialize(const Eigen::VectorXd& position) const {
  Eigen::VectorXd out = position;
  for (int d = 0; d < size(); ++d) {
    const auto& dim = dims[static_cast<size_t>(d)];
    out(d) = std::clamp(out(d), dim.lower, dim.upper);
    if (dim.integer) out(d) = std::round(out(d));
  }
  return out;
}

namespace {

std::vector<double> evaluate_population(const SearchSpace& space, const FitnessFn& fitness,
                                        const Eigen::MatrixXd& positions, int threads) {
  const int pop = static_cast<int>(positions.rows());
  std::vector<double> values(static_cast<size_t>(pop));
  auto eval_one = [&](int i) {
    const double v = fitness(space.materialize(positions.row(i).transpose()));
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  if (threads <= 1) {
    for (int i = 0; i < pop; ++i) values[static_cast<size_t>(i)] = eval_one(i);
    return values;
  }
  // merged by particle index, so the schedule cannot change the result
  std::vector<std::future<void>> workers;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t)
    workers.push_back(std::async(std::launch::async, [&]() {
      for (int i = next.fetch_add(1); i < pop; i = next.fetch_add(1))
        values[static_cast<size_t>(i)] = eval_one(i);
    }));
  for (auto& w : workers) w.get();
  return values;
}

using GenerationHook = std::function<void(int gen, const std::vector<double>& fit,
                                          const Eigen::MatrixXd& positions)>;

MinimizeResult swarm_run(const SearchSpace& space, const FitnessFn& fitness, int iterations,
                         int population, uint64_t seed, const MpsogsaParams& params, int threads,
                         const Eigen::VectorXd* first_particle, const GenerationHook& hook) {
  space.validate();
  if (iterations < 1) throw std::invalid_argument("minimize: budget must be at least 1");
  if (population < 2) throw std::invalid_argument("minimize: population must be at least 2");

  const int dim = space.size();
  Rng rng(mix_seed(seed, 0x70736f677361ull));
  constexpr double kForceEps = 1e-12;

  Eigen::MatrixXd positions(population, dim);
  Eigen::MatrixXd velocities = Eigen::MatrixXd::Zero(population, dim);
  for (int i = 0; i < population; ++i)
    for (int d = 0; d < dim; ++d)
      positions(i, d) = rng.uniform(space.dims[static_cast<size_t>(d)].lower,
                                    space.dims[static_cast<size_t>(d)].upper);
  if (first_particle != nullptr) positions.row(0) = first_particle->transpose();

  MinimizeResult result;
  result.best_fitness = std::numeric_limits<double>::infinity();
  result.best_position = space.materialize(positions.row(0).transpose());

  for (int it = 0; it < iterations; ++it) {
    const std::vector<double> fit = evaluate_population(space, fitness, positions, threads);

    // strict improvement keeps the earliest candidate on ties
    for (int i = 0; i < population; ++i)
      if (fit[static_cast<size_t>(i)] < result.best_fitness) {
        result.best_fitness = fit[static_cast<size_t>(i)];
        result.best_position = space.materialize(positions.row(i).transpose());
      }
    result.history.push_back(result.best_fitness);
    if (hook) hook(it, fit, positions);

    if (it + 1 == iterations) break;

    // gravitational masses from normalized fitness; failed particles get none
    double best = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    for (double f : fit)
      if (std::isfinite(f)) {
        best = std::min(best, f);
        worst = std::max(worst, f);
      }
    Eigen::VectorXd mass(population);
    if (!std::isfinite(best) || worst == best) {
      mass.setConstant(1.0 / population);
    } else {
      double total = 0.0;
      for (int i = 0; i < population; ++i) {
        const double f = fit[static_cast<size_t>(i)];
        mass(i) = std::isfinite(f) ? (worst - f) / (worst - best) : 0.0;
        total += mass(i);
      }
      mass /= (total > 0.0 ? total : 1.0);
    }

    const double t_frac = static_cast<double>(it) / iterations;
    const double g = params.g0 * std::exp(-params.alpha * t_frac);
    const double w = params.w_start + (params.w_end - params.w_start) * t_frac;

    Eigen::MatrixXd accel = Eigen::MatrixXd::Zero(population, dim);
    for (int i = 0; i < population; ++i)
      for (int j = 0; j < population; ++j) {
        if (j == i) continue;
        const Eigen::VectorXd diff = (positions.row(j) - positions.row(i)).transpose();
        const double pull = g * mass(j) / (diff.norm() + kForceEps);
        accel.row(i) += (rng.uniform() * pull) * diff.transpose();
      }

    for (int i = 0; i < population; ++i)
      for (int d = 0; d < dim; ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        velocities(i, d) = w * velocities(i, d) + params.c1 * r1 * accel(i, d) +
                           params.c2 * r2 * (result.best_position(d) - positions(i, d));
        positions(i, d) = std::clamp(positions(i, d) + velocities(i, d),
                                     space.dims[static_cast<size_t>(d)].lower,
                                     space.dims[static_cast<size_t>(d)].upper);
      }
  }
  return result;
}

}  // namespace

MinimizeResult minimize(const SearchSpace& space, const FitnessFn& fitness, int iterations,
                        int population, uint64_t seed, const MpsogsaParams& params, int threads) {
  return swarm_run(space, fitness, iterations, population, seed, params, threads, nullptr, {});
}

double esn_validation_rmse(const Eigen::MatrixXd& series, const ChronoSplit& split,
                           const DeepEsnConfig& template_config, int depth, int width,
                           Eigen::MatrixXd* states_window, int snapshot_window) {
  DeepEsnConfig cfg = template_config;
  cfg.layer_sizes.assign(static_cast<size_t>(depth), width);
  // reservoir seed tied to the candidate so repeat evaluations agree
  cfg.seed = mix_seed(template_config.seed,
                      (static_cast<uint64_t>(depth) << 32) | static_cast<uint64_t>(width));
  try {
    const TrainedEsn model = train_esn(cfg, series.topRows(split.train_end));
    const Eigen::MatrixXd preds = predict(model, series.topRows(split.val_end));
    const int val_rows = split.val_end - split.train_end;
    if (preds.rows() < val_rows) return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd val_pred = preds.bottomRows(val_rows);
    const Eigen::MatrixXd val_obs = series.middleRows(split.train_end, val_rows);
    const double rmse = std::sqrt((val_pred - val_obs).array().square().mean());

    if (states_window != nullptr) {
      const auto states = run_states(model.reservoir, series.topRows(split.train_end));
      const Eigen::MatrixXd& top = states.back();
      const Eigen::Index rows = std::min<Eigen::Index>(snapshot_window, top.rows());
      *states_window = top.topRows(rows);
    }
    return std::isfinite(rmse) ? rmse : std::numeric_limits<double>::infinity();
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

EvolveResult evolve_esn(const Eigen::MatrixXd& series, const ChronoSplit& split,
                        const DeepEsnConfig& template_config, int min_depth, int max_depth,
                        int min_width, int max_width, int generations, int population,
                        uint64_t seed, int snapshot_window, int threads) {
  if (min_depth < 1 || min_depth > max_depth || min_width < 1 || min_width > max_width)
    throw std::invalid_argument("evolve_esn: invalid depth/width bounds");

  SearchSpace space;
  space.dims = {{static_cast<double>(min_depth), static_cast<double>(max_depth), true},
                {static_cast<double>(min_width), static_cast<double>(max_width), true}};
  if (min_depth == max_depth) space.dims[0].upper += 0.5;
  if (min_width == max_width) space.dims[1].upper += 0.5;

  auto fitness = [&](const Eigen::VectorXd& pos) {
    return esn_validation_rmse(series, split, template_config, static_cast<int>(pos(0)),
                               static_cast<int>(pos(1)));
  };

  Eigen::VectorXd start(2);
  start(0) = std::clamp(static_cast<double>(template_config.num_layers()), space.dims[0].lower,
                        space.dims[0].upper);
  start(1) = std::clamp(static_cast<double>(template_config.layer_sizes[0]), space.dims[1].lower,
                        space.dims[1].upper);

  EvolveResult result;
  auto hook = [&](int gen, const std::vector<double>& fit, const Eigen::MatrixXd& positions) {
    int gen_best = 0;
    for (size_t i = 1; i < fit.size(); ++i)
      if (fit[i] < fit[static_cast<size_t>(gen_best)]) gen_best = static_cast<int>(i);
    GenerationRecord record;
    record.generation = gen;
    record.generation_best_fitness = fit[static_cast<size_t>(gen_best)];
    record.generation_best_position = space.materialize(positions.row(gen_best).transpose());
    if (std::isfinite(record.generation_best_fitness))
      esn_validation_rmse(series, split, template_config,
                          static_cast<int>(record.generation_best_position(0)),
                          static_cast<int>(record.generation_best_position(1)),
                          &record.generation_best_states, snapshot_window);
    result.generations.push_back(std::move(record));
  };

  MinimizeResult mins = swarm_run(space, fitness, generations, population, seed, MpsogsaParams{},
                                  threads, &start, hook);
  if (!std::isfinite(mins.best_fitness))
    throw std::runtime_error("evolve_esn: every candidate failed to train");

  result.history = std::move(mins.history);
  for (size_t g = 0; g < result.generations.size(); ++g)
    result.generations[g].best_fitness = result.history[g];

  const int best_depth = static_cast<int>(mins.best_position(0));
  const int best_width = static_cast<int>(mins.best_position(1));
  result.best_config = template_config;
  result.best_config.layer_sizes.assign(static_cast<size_t>(best_depth), best_width);
  result.best_config.seed = mix_seed(template_config.seed, (static_cast<uint64_t>(best_depth) << 32) |
                                                               static_cast<uint64_t>(best_width));
  result.best_val_rmse = mins.best_fitness;
  return result;
}

}  // namespace hermnet
