#include "sassopt/anneal.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "sassopt/depgraph.hpp"

namespace sassopt {

double feedback(double t0, double t_prev, double t_curr) {
  if (!(t0 > 0)) throw InvalidBaseline(t0);
  return (t_prev - t_curr) / t0;
}

bool accept_move(double delta_e, double temperature, const std::function<double()>& draw) {
  if (delta_e < 0) return true;
  return draw() < std::exp(-delta_e / temperature);
}

void AnnealConfig::validate() const {
  if (!(t_max > 0) || !(t_min > 0)) throw std::invalid_argument("temperatures must be positive");
  if (t_min > t_max) throw std::invalid_argument("t_min must not exceed t_max");
  if (!(cooling > 1)) throw std::invalid_argument("cooling factor must be > 1");
  if (measure_reps < 3) throw std::invalid_argument("measure_reps must be >= 3");
  if (max_consecutive_failures < 1) throw std::invalid_argument("max_consecutive_failures must be >= 1");
}

std::size_t AnnealConfig::iterations() const {
  if (t_max <= t_min) return 0;
  double x = std::log(t_max / t_min) / std::log(cooling);
  // log(100)/log(10) lands a hair above 2; snap such ties back.
  double r = std::round(x);
  if (std::abs(x - r) < 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

double AnnealConfig::temperature_at(std::size_t iteration) const {
  return t_max / std::pow(cooling, static_cast<double>(iteration));
}

std::string_view to_string(StepOutcome o) {
  switch (o) {
    case StepOutcome::Accepted: return "accepted";
    case StepOutcome::Rejected: return "rejected";
    case StepOutcome::IllegalMove: return "illegal_move";
    case StepOutcome::TestFailed: return "test_failed";
    case StepOutcome::MeasureFailed: return "measure_failed";
  }
  return "?";
}

std::string StepRecord::to_json() const {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["action"] = {{"candidate", action.candidate}, {"direction", to_string(action.direction)}};
  j["energy"] = energy ? nlohmann::ordered_json(*energy) : nlohmann::ordered_json(nullptr);
  j["R"] = feedback;
  j["accepted"] = accepted;
  j["temperature"] = temperature;
  j["outcome"] = to_string(outcome);
  j["current_energy"] = current_energy;
  j["best_energy"] = best_energy;
  return j.dump();
}

std::size_t AnnealState::accepted_count() const {
  std::size_t n = 0;
  for (const auto& r : history) n += r.accepted;
  return n;
}

std::string AnnealState::history_jsonl() const {
  std::string out;
  for (const auto& r : history) {
    out += r.to_json();
    out += '\n';
  }
  return out;
}

AnnealState anneal(const Kernel& k0, CostBackend& backend, const StepTester& tester,
                   const AnnealConfig& cfg) {
  cfg.validate();
  if (candidates(k0).empty()) throw NoCandidates();

  AnnealState st;
  st.current = k0;
  st.best = k0;
  CostSample base = backend.measure(k0, cfg.measure_reps);
  if (!(base.time > 0)) throw InvalidBaseline(base.time);
  st.t0 = base.time;
  st.unit = base.unit;
  st.current_time = st.best_time = base.time;
  st.temperature = cfg.t_max;

  Rng rng(cfg.seed);
  const MoveOptions mopts{cfg.unsafe_moves};
  DepGraph graph = build(st.current);
  CandidateSet cs = candidates(st.current);
  int failures_in_row = 0;

  const std::size_t n = cfg.iterations();
  st.history.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    StepRecord rec;
    rec.iteration = i;
    rec.temperature = st.temperature;
    rec.action = sample_action(cs, rng);

    MoveResult moved = apply(st.current, graph, rec.action, mopts);
    if (auto* k = std::get_if<Kernel>(&moved)) {
      if (tester && !tester(*k)) {
        rec.outcome = StepOutcome::TestFailed;
      } else {
        std::optional<double> t;
        try {
          t = backend.measure(*k, cfg.measure_reps).time;
          failures_in_row = 0;
        } catch (const MeasurementFailed& e) {
          rec.outcome = StepOutcome::MeasureFailed;
          if (++failures_in_row >= cfg.max_consecutive_failures) {
            st.aborted = true;
            st.abort_reason = e.what();
          }
        }
        if (t) {
          const double e_cur = st.current_time / st.t0;
          const double e_new = *t / st.t0;
          rec.energy = e_new;
          rec.feedback = feedback(st.t0, st.current_time, *t);
          rec.accepted = accept_move(e_new - e_cur, st.temperature, [&] { return uniform_real(rng); });
          rec.outcome = rec.accepted ? StepOutcome::Accepted : StepOutcome::Rejected;
          if (rec.accepted) {
            st.current = std::move(*k);
            st.current_time = *t;
            graph = build(st.current);
            cs = candidates(st.current);
            if (st.current_time < st.best_time) {
              st.best = st.current;
              st.best_time = st.current_time;
            }
          }
        }
      }
    } else {
      rec.outcome = StepOutcome::IllegalMove;
    }

    rec.current_energy = st.current_time / st.t0;
    rec.best_energy = st.best_time / st.t0;
    st.history.push_back(rec);
    st.temperature /= cfg.cooling;
    if (st.aborted) break;
  }
  return st;
}

}  // namespace sassopt
