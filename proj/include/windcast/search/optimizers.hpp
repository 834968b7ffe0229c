#pragma once

// Population optimizers over a SearchSpace: SaDE, canonical DE/rand/1/bin,
// grey wolf optimizer, and uniform random search. Every optimizer keeps the
// best-so-far fitness non-increasing and never exceeds its evaluation budget.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "windcast/error.hpp"
#include "windcast/rng.hpp"
#include "windcast/search/evaluator.hpp"
#include "windcast/search/local_search.hpp"

namespace windcast::search {

namespace detail {

/// `count` distinct indices from [0, n) excluding `avoid`.
inline std::vector<std::size_t> pick_distinct(Rng& rng, std::size_t n, std::size_t avoid, std::size_t count) {
  std::vector<std::size_t> out;
  while (out.size() < count) {
    const std::size_t r = uniform_index(rng, n);
    if (r == avoid || std::find(out.begin(), out.end(), r) != out.end()) continue;
    out.push_back(r);
  }
  return out;
}

inline Genome binomial_crossover(const Genome& target, const Genome& mutant, double cr, Rng& rng) {
  Genome trial = target;
  const std::size_t forced = uniform_index(rng, target.size());
  for (std::size_t j = 0; j < target.size(); ++j)
    if (j == forced || uniform01(rng) < cr) trial[j] = mutant[j];
  return trial;
}

inline std::vector<Candidate> initial_population(const SearchSpace& space, Evaluator& ev, std::size_t np, Rng& rng,
                                                 const std::vector<Genome>& seeds) {
  std::vector<Genome> genomes = seeds;
  while (genomes.size() < np) genomes.push_back(space.random_genome(rng));
  genomes.resize(np);
  auto pop = ev.evaluate(genomes);
  if (pop.size() < np)
    throw Error(ErrorKind::parameter, "budget is smaller than the population size");
  if (std::all_of(pop.begin(), pop.end(), [](const Candidate& c) { return c.failed; }))
    throw Error(ErrorKind::initialization, "every member of the initial population failed to evaluate");
  return pop;
}

inline TraceRow snapshot(int gen, const std::vector<Candidate>& pop, const Evaluator& ev) {
  TraceRow r;
  r.generation = gen;
  r.best = pop[best_index(pop)].fitness;
  r.mean = finite_mean(pop);
  r.evaluations = ev.used();
  return r;
}

inline SearchTrace finish(std::string name, std::vector<TraceRow> rows, Candidate best, const Evaluator& ev) {
  SearchTrace t;
  t.algorithm = std::move(name);
  t.rows = std::move(rows);
  t.best = std::move(best);
  t.evaluations = ev.used();
  t.failures = ev.failures();
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SaDE

enum class Strategy { rand_1 = 1, current_to_best_1 = 2 };

struct SadeOptions {
  std::size_t np = 20;
  int max_gens = 100;
  std::size_t budget = 2000;
  std::uint64_t seed = 1;
  int learning_period = 50;   // N_f
  int cr_hold = 5;            // generations each individual keeps its CR
  int crm_period = 25;        // generations between CRm refreshes
  int local_period = 20;      // N_s
  LocalSearchMode local_search = LocalSearchMode::coordinate;
  std::size_t bfgs_evals = 60;
  double f_mean = 0.5;
  double f_sd = 0.3;
  double cr_sd = 0.1;
  double initial_crm = 0.5;
  double initial_p1 = 0.5;
  std::vector<Genome> initial_population;  // optional seeds, padded randomly
  int jobs = 1;
};

/// F ~ Normal(mean, sd), redrawn until it falls in (0, 2].
inline double sample_f(Rng& rng, double mean = 0.5, double sd = 0.3) {
  for (;;) {
    const double f = gaussian(rng, mean, sd);
    if (f > 0.0 && f <= 2.0) return f;
  }
}

inline double sample_cr(Rng& rng, double crm, double sd = 0.1) {
  return std::clamp(gaussian(rng, crm, sd), 0.0, 1.0);
}

/// Strategy probability from the success/failure counters of the last
/// learning period, floored to [0.05, 0.95]; 0/0 leaves `current` unchanged.
inline double update_strategy_probability(double ns1, double nf1, double ns2, double nf2, double current) {
  const double num = ns1 * (ns2 + nf2);
  const double den = ns2 * (ns1 + nf1) + num;
  if (den == 0.0) return current;
  return std::clamp(num / den, 0.05, 0.95);
}

inline SearchTrace sade_optimize(const SearchSpace& space, FitnessFn fn, const SadeOptions& o) {
  space.validate();
  if (o.np < 5) throw Error(ErrorKind::parameter, "SaDE needs a population of at least 5");
  if (o.budget < o.np) throw Error(ErrorKind::parameter, "budget must be at least the population size");
  Evaluator ev(space, std::move(fn), o.budget, o.jobs);
  Rng rng = make_rng(o.seed, 0x5ADE);
  auto pop = detail::initial_population(space, ev, o.np, rng, o.initial_population);

  double p1 = o.initial_p1;
  double crm = o.initial_crm;
  double ns1 = 0, nf1 = 0, ns2 = 0, nf2 = 0;
  std::vector<double> cr_memory;
  std::vector<double> cr(o.np, 0.0);

  std::vector<TraceRow> rows;
  TraceRow r0 = detail::snapshot(0, pop, ev);
  r0.p1 = p1;
  r0.crm = crm;
  rows.push_back(r0);

  for (int gen = 1; gen <= o.max_gens && !ev.exhausted(); ++gen) {
    if ((gen - 1) % o.cr_hold == 0)
      for (double& c : cr) c = sample_cr(rng, crm, o.cr_sd);
    const std::size_t best = best_index(pop);

    std::vector<Genome> trials(o.np);
    std::vector<Strategy> used(o.np);
    for (std::size_t i = 0; i < o.np; ++i) {
      used[i] = uniform01(rng) < p1 ? Strategy::rand_1 : Strategy::current_to_best_1;
      const double f = sample_f(rng, o.f_mean, o.f_sd);
      Genome mutant(space.size());
      if (used[i] == Strategy::rand_1) {
        const auto r = detail::pick_distinct(rng, o.np, i, 3);
        for (std::size_t j = 0; j < space.size(); ++j)
          mutant[j] = pop[r[0]].genome[j] + f * (pop[r[1]].genome[j] - pop[r[2]].genome[j]);
      } else {
        const auto r = detail::pick_distinct(rng, o.np, i, 2);
        for (std::size_t j = 0; j < space.size(); ++j)
          mutant[j] = pop[i].genome[j] + f * (pop[best].genome[j] - pop[i].genome[j]) +
                      f * (pop[r[0]].genome[j] - pop[r[1]].genome[j]);
      }
      trials[i] = detail::binomial_crossover(pop[i].genome, mutant, cr[i], rng);
    }

    const auto offspring = ev.evaluate(trials);
    for (std::size_t i = 0; i < offspring.size(); ++i) {
      const bool success = offspring[i].fitness < pop[i].fitness;
      if (used[i] == Strategy::rand_1) (success ? ns1 : nf1) += 1;
      else (success ? ns2 : nf2) += 1;
      if (success) {
        pop[i] = offspring[i];
        cr_memory.push_back(cr[i]);
      }
    }

    if (gen % o.learning_period == 0) {
      p1 = update_strategy_probability(ns1, nf1, ns2, nf2, p1);
      ns1 = nf1 = ns2 = nf2 = 0;
    }
    bool refreshed = false;
    if (gen % o.crm_period == 0 && gen < o.max_gens) {
      if (!cr_memory.empty()) {
        double s = 0.0;
        for (double c : cr_memory) s += c;
        crm = s / static_cast<double>(cr_memory.size());
        refreshed = true;
      }
      cr_memory.clear();
    }
    if (o.local_search != LocalSearchMode::off && gen % o.local_period == 0 && !ev.exhausted()) {
      const std::size_t b = best_index(pop);
      const Candidate refined = local_search(o.local_search, pop[b], pop, ev, o.bfgs_evals);
      if (refined.fitness < pop[b].fitness) pop[b] = refined;
    }

    TraceRow row = detail::snapshot(gen, pop, ev);
    row.p1 = p1;
    row.crm = crm;
    row.crm_refreshed = refreshed;
    rows.push_back(row);
  }
  const Candidate best = pop[best_index(pop)];
  return detail::finish("sade", std::move(rows), best, ev);
}

// ---------------------------------------------------------------------------
// Canonical DE/rand/1/bin

struct DeOptions {
  std::size_t np = 20;
  double f = 0.5;
  double cr = 0.9;
  int max_gens = 100;
  std::size_t budget = 2000;
  std::uint64_t seed = 1;
  std::vector<Genome> initial_population;
  int jobs = 1;
};

inline SearchTrace de_optimize(const SearchSpace& space, FitnessFn fn, const DeOptions& o) {
  space.validate();
  if (o.np < 4) throw Error(ErrorKind::parameter, "DE/rand/1 needs a population of at least 4");
  if (o.budget < o.np) throw Error(ErrorKind::parameter, "budget must be at least the population size");
  Evaluator ev(space, std::move(fn), o.budget, o.jobs);
  Rng rng = make_rng(o.seed, 0xDE);
  auto pop = detail::initial_population(space, ev, o.np, rng, o.initial_population);
  std::vector<TraceRow> rows{detail::snapshot(0, pop, ev)};

  for (int gen = 1; gen <= o.max_gens && !ev.exhausted(); ++gen) {
    std::vector<Genome> trials(o.np);
    for (std::size_t i = 0; i < o.np; ++i) {
      const auto r = detail::pick_distinct(rng, o.np, i, 3);
      Genome mutant(space.size());
      for (std::size_t j = 0; j < space.size(); ++j)
        mutant[j] = pop[r[0]].genome[j] + o.f * (pop[r[1]].genome[j] - pop[r[2]].genome[j]);
      trials[i] = detail::binomial_crossover(pop[i].genome, mutant, o.cr, rng);
    }
    const auto offspring = ev.evaluate(trials);
    for (std::size_t i = 0; i < offspring.size(); ++i)
      if (offspring[i].fitness < pop[i].fitness) pop[i] = offspring[i];
    rows.push_back(detail::snapshot(gen, pop, ev));
  }
  const Candidate best = pop[best_index(pop)];
  return detail::finish("de", std::move(rows), best, ev);
}

// ---------------------------------------------------------------------------
// Grey wolf optimizer

struct GwoOptions {
  std::size_t pack_size = 20;
  int max_iters = 100;
  std::size_t budget = 2000;
  std::uint64_t seed = 1;
  int jobs = 1;
};

/// New position of one wolf given the three leaders and coefficient `a`.
inline Genome gwo_move(const Genome& x, const Genome& alpha, const Genome& beta, const Genome& delta, double a,
                       Rng& rng) {
  Genome out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    double sum = 0.0;
    for (const Genome* leader : {&alpha, &beta, &delta}) {
      const double big_a = 2.0 * a * uniform01(rng) - a;
      const double big_c = 2.0 * uniform01(rng);
      const double dist = std::abs(big_c * (*leader)[j] - x[j]);
      sum += (*leader)[j] - big_a * dist;
    }
    out[j] = sum / 3.0;
  }
  return out;
}

inline SearchTrace gwo_optimize(const SearchSpace& space, FitnessFn fn, const GwoOptions& o) {
  space.validate();
  if (o.pack_size < 3) throw Error(ErrorKind::parameter, "GWO needs a pack of at least 3 wolves");
  if (o.budget < o.pack_size) throw Error(ErrorKind::parameter, "budget must be at least the pack size");
  Evaluator ev(space, std::move(fn), o.budget, o.jobs);
  Rng rng = make_rng(o.seed, 0x6A0);
  auto pack = detail::initial_population(space, ev, o.pack_size, rng, {});

  // Leaders are the three best positions ever evaluated (elitist).
  std::vector<Candidate> leaders;
  auto update_leaders = [&](const std::vector<Candidate>& wolves) {
    for (const auto& w : wolves) leaders.push_back(w);
    std::stable_sort(leaders.begin(), leaders.end(),
                     [](const Candidate& a, const Candidate& b) { return a.fitness < b.fitness; });
    leaders.resize(std::min<std::size_t>(3, leaders.size()));
  };
  update_leaders(pack);

  auto row_for = [&](int gen) {
    TraceRow r;
    r.generation = gen;
    r.best = leaders.front().fitness;
    r.mean = finite_mean(pack);
    r.evaluations = ev.used();
    return r;
  };
  std::vector<TraceRow> rows{row_for(0)};

  for (int t = 0; t < o.max_iters && !ev.exhausted(); ++t) {
    const double a = o.max_iters > 1 ? 2.0 * (1.0 - static_cast<double>(t) / (o.max_iters - 1)) : 0.0;
    std::vector<Genome> moved(pack.size());
    for (std::size_t i = 0; i < pack.size(); ++i)
      moved[i] = gwo_move(pack[i].genome, leaders[0].genome, leaders[1].genome, leaders[2].genome, a, rng);
    auto next = ev.evaluate(moved);
    for (std::size_t i = 0; i < next.size(); ++i) pack[i] = next[i];
    update_leaders(next);
    rows.push_back(row_for(t + 1));
  }
  return detail::finish("gwo", std::move(rows), leaders.front(), ev);
}

// ---------------------------------------------------------------------------
// Random search

struct RandomSearchOptions {
  std::size_t batch = 20;  // evaluations per trace row
  std::size_t budget = 2000;
  std::uint64_t seed = 1;
  int jobs = 1;
};

inline SearchTrace random_search(const SearchSpace& space, FitnessFn fn, const RandomSearchOptions& o) {
  space.validate();
  if (o.batch < 1) throw Error(ErrorKind::parameter, "batch must be >= 1");
  Evaluator ev(space, std::move(fn), o.budget, o.jobs);
  Rng rng = make_rng(o.seed, 0x7A4D);
  std::optional<Candidate> best;
  std::vector<TraceRow> rows;
  for (int gen = 0; !ev.exhausted(); ++gen) {
    std::vector<Genome> gs(std::min(o.batch, ev.remaining()));
    for (auto& g : gs) g = space.random_genome(rng);
    const auto batch = ev.evaluate(gs);
    for (const auto& c : batch)
      if (!best || c.fitness < best->fitness) best = c;
    TraceRow r;
    r.generation = gen;
    r.best = best->fitness;
    r.mean = finite_mean(batch);
    r.evaluations = ev.used();
    rows.push_back(r);
  }
  if (!best) throw Error(ErrorKind::parameter, "random search needs a budget of at least 1");
  return detail::finish("random", std::move(rows), *best, ev);
}

}  // namespace windcast::search
