#pragma once

// Budgeted fitness evaluation and the per-generation search trace.

#include <cmath>
#include <functional>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "windcast/error.hpp"
#include "windcast/search/space.hpp"

namespace windcast::search {

inline constexpr double kFailed = std::numeric_limits<double>::infinity();

/// Fitness of the decoded values of a genome; lower is better.
using FitnessFn = std::function<double(const std::vector<double>& values)>;

struct Candidate {
  Genome genome;
  std::vector<double> values;  // decoded
  double fitness = kFailed;
  bool failed = false;
};

/// Counts every call against a fixed budget. Exceptions and non-finite
/// results mark the candidate failed (+inf) instead of aborting the search.
class Evaluator {
 public:
  Evaluator(const SearchSpace& space, FitnessFn fn, std::size_t budget, int jobs = 1)
      : space_(space), fn_(std::move(fn)), budget_(budget), jobs_(std::max(1, jobs)) {}

  std::size_t used() const { return used_; }
  std::size_t remaining() const { return budget_ - used_; }
  std::size_t budget() const { return budget_; }
  std::size_t failures() const { return failures_; }
  bool exhausted() const { return used_ >= budget_; }
  const SearchSpace& space() const { return space_; }

  /// Evaluates as many of `genomes` as the budget allows, in order.
  std::vector<Candidate> evaluate(const std::vector<Genome>& genomes) {
    const std::size_t n = std::min(genomes.size(), remaining());
    std::vector<Candidate> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      out[k].genome = space_.reflect(genomes[k]);
      out[k].values = space_.decode_values(out[k].genome);
    }
    auto run = [this](const std::vector<double>& values) {
      try {
        const double f = fn_(values);
        return std::isfinite(f) ? f : kFailed;
      } catch (const std::exception&) {
        return kFailed;
      }
    };
    if (jobs_ > 1 && n > 1) {
      for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(jobs_)) {
        const std::size_t stop = std::min(n, start + static_cast<std::size_t>(jobs_));
        std::vector<std::future<double>> futs;
        for (std::size_t k = start; k < stop; ++k)
          futs.push_back(std::async(std::launch::async, run, std::cref(out[k].values)));
        for (std::size_t k = start; k < stop; ++k) out[k].fitness = futs[k - start].get();
      }
    } else {
      for (auto& c : out) c.fitness = run(c.values);
    }
    for (auto& c : out) {
      c.failed = !std::isfinite(c.fitness);
      if (c.failed) ++failures_;
    }
    used_ += n;
    return out;
  }

  std::optional<Candidate> evaluate_one(const Genome& g) {
    auto r = evaluate(std::vector<Genome>{g});
    if (r.empty()) return std::nullopt;
    return r.front();
  }

 private:
  SearchSpace space_;
  FitnessFn fn_;
  std::size_t budget_;
  int jobs_;
  std::size_t used_ = 0;
  std::size_t failures_ = 0;
};

struct TraceRow {
  int generation = 0;
  double best = kFailed;
  double mean = kFailed;  // over non-failed members
  std::optional<double> p1;
  std::optional<double> crm;
  bool crm_refreshed = false;
  std::size_t evaluations = 0;  // cumulative
};

struct SearchTrace {
  std::string algorithm;
  std::vector<TraceRow> rows;
  Candidate best;
  std::size_t evaluations = 0;
  std::size_t failures = 0;
};

inline double finite_mean(const std::vector<Candidate>& pop) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& c : pop)
    if (!c.failed) {
      s += c.fitness;
      ++n;
    }
  return n > 0 ? s / static_cast<double>(n) : kFailed;
}

inline std::size_t best_index(const std::vector<Candidate>& pop) {
  std::size_t b = 0;
  for (std::size_t i = 1; i < pop.size(); ++i)
    if (pop[i].fitness < pop[b].fitness) b = i;
  return b;
}

inline void write_trace_csv(std::ostream& out, const SearchTrace& t) {
  out << "generation,best,mean,p1,CRm,evals\n" << std::setprecision(17);
  auto num = [&](double v) {
    if (std::isfinite(v)) out << v; else out << "inf";
  };
  for (const auto& r : t.rows) {
    out << r.generation << ',';
    num(r.best);
    out << ',';
    num(r.mean);
    out << ',';
    if (r.p1) out << *r.p1;
    out << ',';
    if (r.crm) out << *r.crm;
    out << ',' << r.evaluations << '\n';
  }
}

inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const SearchTrace& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json j{{"generation", r.generation},
                     {"best", finite_or_null(r.best)},
                     {"mean", finite_or_null(r.mean)},
                     {"evals", r.evaluations}};
    if (r.p1) j["p1"] = *r.p1;
    if (r.crm) {
      j["CRm"] = *r.crm;
      j["CRm_refreshed"] = r.crm_refreshed;
    }
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"algorithm", t.algorithm},
                        {"evaluations", t.evaluations},
                        {"failures", t.failures},
                        {"best", {{"fitness", finite_or_null(t.best.fitness)},
                                  {"genome", t.best.genome},
                                  {"values", t.best.values}}},
                        {"generations", std::move(rows)}};
}

}  // namespace windcast::search
