#include "shuttle/experiment.hpp"

#include "shuttle/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace shuttle {

TransportExperiment::TransportExperiment(ExperimentConfig config)
    : config_(std::move(config)), model_(config_.trap_model()) {
  config_.validate();
  const auto& t = config_.transport;
  base_ = generate_base_solutions(model_, t.x_a_um * units::um, t.x_b_um * units::um, t.base_count,
                                  config_.base_frequency());
  idle_a_ = base_.voltages.col(0);
}

std::vector<double> TransportExperiment::nominal_offsets() const {
  const int k = config_.transport.offset_count;
  const double period = 1.0 / config_.base_frequency();
  std::vector<double> out;
  for (int i = 0; i < k; ++i) out.push_back(period * i / k);
  return out;
}

std::vector<double> TransportExperiment::realised_offsets() const {
  const double T = config_.sample_period();
  const double hold = config_.transport.hold_us * units::us;
  const auto n_hold = std::llround(hold / T);
  std::vector<double> out;
  for (double o : nominal_offsets()) out.push_back(double(std::llround((hold + o) / T) - n_hold) * T);
  return out;
}

Waveform TransportExperiment::forward(const OptState& state) const {
  ++syntheses_;
  return synthesize_forward(state, base_, config_.transport.t_f_us * units::us, config_.sample_period());
}

Waveform TransportExperiment::timeline(const Waveform& fwd, double offset) const {
  Waveform trip = assemble_roundtrip(fwd, config_.transport.hold_us * units::us, offset);
  trip = decimate_zoh(trip, config_.electronics.decimation_factor);
  const double T = config_.sample_period();
  const auto pre = static_cast<Eigen::Index>(std::llround(config_.transport.preroll_us * units::us / T));
  const auto post = static_cast<Eigen::Index>(std::llround(config_.transport.settle_us * units::us / T));

  Waveform w = trip;
  w.samples.resize(trip.channels(), pre + trip.length() + post);
  if (pre > 0) w.samples.leftCols(pre) = idle_a_.replicate(1, pre);
  w.samples.middleCols(pre, trip.length()) = trip.samples;
  if (post > 0) w.samples.rightCols(post) = idle_a_.replicate(1, post);
  w.markers = {pre + trip.markers.forward_end, pre + trip.markers.hold_end,
               pre + trip.markers.reverse_end};
  return w;
}

Waveform TransportExperiment::deliver(const Waveform& commanded) const {
  Waveform w = commanded;
  if (config_.electronics.fir_enabled) w = apply_digital_fir(w, config_.fir_band());
  const AnalogSpec analog = config_.analog_spec();
  if (config_.electronics.analog_enabled) return apply_analog_chain(w, analog);
  // Keep the integration grid identical with and without the analog model.
  return upsample_zoh(w, analog.oversample);
}

IonState TransportExperiment::initial_ion() const {
  return at_rest_in_well(model_, idle_a_, base_.positions(0));
}

double TransportExperiment::heating_window(double realised_offset) const {
  const auto& t = config_.transport;
  return (2.0 * t.t_f_us + t.hold_us) * units::us + realised_offset;
}

TransportResult TransportExperiment::simulate(const Waveform& commanded, double realised_offset,
                                              MotionTrace* keep_trace, Waveform* keep_delivered) const {
  ++simulations_;
  Waveform delivered = deliver(commanded);
  const double dt = delivered.sample_period / config_.transport.integrator_substeps;
  MotionTrace trace = integrate_motion(model_, delivered, initial_ion(), dt);
  TransportResult r = final_excitation(trace, model_, delivered.samples.col(delivered.length() - 1),
                                       config_.ion.prepared_nbar);
  r = add_background_heating(r, config_.ion.heating_rate_per_s, heating_window(realised_offset));
  r.hold_offset = realised_offset;
  if (keep_trace) *keep_trace = std::move(trace);
  if (keep_delivered) *keep_delivered = std::move(delivered);
  return r;
}

OffsetRun TransportExperiment::run_offset(const OptState& state, double nominal_offset) const {
  OffsetRun out;
  const Waveform fwd = forward(state);
  out.commanded = timeline(fwd, nominal_offset);
  const double T = config_.sample_period();
  const double hold = config_.transport.hold_us * units::us;
  out.offset = double(std::llround((hold + nominal_offset) / T) - std::llround(hold / T)) * T;
  out.result = simulate(out.commanded, out.offset, &out.trace, &out.delivered);
  return out;
}

std::vector<TransportResult> TransportExperiment::run_forward(const Waveform& fwd) const {
  const auto nominal = nominal_offsets();
  const auto realised = realised_offsets();
  std::vector<TransportResult> out;
  out.reserve(nominal.size());
  for (std::size_t i = 0; i < nominal.size(); ++i)
    out.push_back(simulate(timeline(fwd, nominal[i]), realised[i], nullptr, nullptr));
  return out;
}

std::vector<TransportResult> TransportExperiment::run(const OptState& state) const {
  return run_forward(forward(state));
}

std::vector<TransportResult> run_transport_experiment(const OptState& state,
                                                     const TransportExperiment& experiment) {
  return experiment.run(state);
}

double worst_excitation(const OptRecord& record) {
  double worst = -std::numeric_limits<double>::infinity();
  for (double e : record.excitation) worst = std::max(worst, e);
  return record.excitation.empty() ? std::numeric_limits<double>::infinity() : worst;
}

ClosedLoopObjective::ClosedLoopObjective(const TransportExperiment& experiment, int stage,
                                         Measurement measurement, int first_index)
    : experiment_(experiment),
      stage_(stage),
      params_(experiment.config().sideband_params(stage)),
      bands_(experiment.config().sideband_bands(params_)),
      weights_(experiment.config().loss_weights()),
      measurement_(measurement),
      next_index_(first_index) {}

double ClosedLoopObjective::operator()(const OptState& state) { return evaluate(state).total; }

OptRecord ClosedLoopObjective::evaluate(const OptState& state) {
  const auto start = std::chrono::steady_clock::now();
  OptRecord rec;
  rec.eval_index = next_index_++;
  rec.stage = stage_;
  rec.state = state;

  const ConstraintPolicy policy = experiment_.policy();
  if (!state.all_finite()) {
    rec.state_penalty = true;
    rec.total = kSentinelLoss;
  } else if (const double p = state_penalty(state, policy); p > 0.0) {
    rec.state_penalty = true;
    rec.total = p;
  } else {
    const Waveform fwd = experiment_.forward(state);
    const BudgetCheck budget = check_voltage_budget(fwd, policy);
    if (!budget.ok) {
      rec.budget_penalty = true;
      rec.total = budget.penalty;
    } else {
      try {
        const auto results = experiment_.run_forward(fwd);
        Measurement m = measurement_;
        m.seed = measurement_.seed + 0x9e3779b97f4a7c15ULL * std::uint64_t(rec.eval_index + 1);
        const LossValue loss = loss_function(results, params_, bands_, weights_, m);
        rec.per_offset = loss.per_offset;
        for (const auto& r : results) rec.excitation.push_back(r.total_quanta());
        rec.total = std::isfinite(loss.total) ? loss.total : kSentinelLoss;
      } catch (const IonLost&) {
        rec.ion_lost = true;
        rec.total = kSentinelLoss;
      } catch (const NoWellFound&) {
        rec.ion_lost = true;
        rec.total = kSentinelLoss;
      }
    }
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  records_.push_back(rec);
  if (listener_) listener_(rec);
  return rec;
}

ScheduleResult two_stage_schedule(const TransportExperiment& experiment, const OptState& x0,
                                  std::function<void(const OptRecord&)> listener) {
  const ExperimentConfig& cfg = experiment.config();
  const Measurement measurement{cfg.sideband.shots, cfg.sideband.seed};
  const Eigen::Index n_f = x0.n_f();
  const NelderMeadConfig nm = cfg.nelder_mead(n_f, x0.n_t());

  ScheduleResult out;
  OptState start = x0;
  for (int stage = 1; stage <= 2; ++stage) {
    ClosedLoopObjective objective(experiment, stage, measurement, int(out.history.size()));
    objective.set_listener(listener);
    const Objective flat = [&](const Eigen::VectorXd& x) {
      return objective(OptState::unflatten(x, n_f));
    };
    const NelderMeadResult res = nelder_mead_run(flat, start.flatten(), nm);
    out.stages.push_back({start, OptState::unflatten(res.best, n_f), res.best_value});
    out.history.insert(out.history.end(), objective.records().begin(), objective.records().end());
    start = out.stages.back().best;
  }
  return out;
}

OptRecord evaluate_state(const TransportExperiment& experiment, const OptState& state, int stage) {
  ClosedLoopObjective objective(experiment, stage, Measurement{});
  return objective.evaluate(state);
}

DecimationStudy run_decimation_study(const ExperimentConfig& config, int factor,
                                     std::function<void(int, const OptRecord&)> listener) {
  if (factor < 1) throw ConfigError("decimation factor must be >= 1");
  auto arm = [&](int f) {
    ExperimentConfig c = config;
    c.electronics.decimation_factor = f;
    const TransportExperiment exp(c);
    DecimationArm a;
    a.factor = f;
    std::function<void(const OptRecord&)> l;
    if (listener) l = [&](const OptRecord& r) { listener(f, r); };
    a.schedule = two_stage_schedule(exp, c.initial_state(), l);
    a.final_eval = evaluate_state(exp, a.schedule.best(), 2);
    return a;
  };
  DecimationStudy s;
  s.full_rate = arm(1);
  s.decimated = arm(factor);
  return s;
}

}  // namespace shuttle
