#pragma once

#include "shuttle/config.hpp"
#include "shuttle/dynamics.hpp"
#include "shuttle/optimizer.hpp"
#include "shuttle/sidebands.hpp"
#include "shuttle/waveform.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace shuttle {

/// Loss returned for states whose simulation loses the ion or produces
/// non-finite output. Dominates loss_upper_bound for any cutoff <= kMaxFockCutoff.
inline constexpr double kSentinelLoss = 1.0e6;

/// Everything produced for one hold offset; used by dumps and diagnostics.
struct OffsetRun {
  double offset = 0.0;  // s, as realised on the DAC grid
  Waveform commanded;   // preroll | round trip | settle, DAC rate
  Waveform delivered;   // after the filter chain
  MotionTrace trace;
  TransportResult result;
};

/// The simulated testbed: base solutions, waveform timeline, electronics and
/// ion dynamics for one configuration.
class TransportExperiment {
 public:
  explicit TransportExperiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }
  const TrapModel& model() const { return model_; }
  const BaseSolutionSet& base() const { return base_; }
  ConstraintPolicy policy() const { return config_.constraint_policy(); }

  /// k T_axial / K for k = 0..K-1 at the base frequency.
  std::vector<double> nominal_offsets() const;
  /// Offsets after rounding to whole DAC samples.
  std::vector<double> realised_offsets() const;

  Waveform forward(const OptState& state) const;
  /// preroll at x_A | [fwd | hold + offset | reversed fwd], decimated | settle at x_A.
  Waveform timeline(const Waveform& fwd, double offset) const;
  Waveform deliver(const Waveform& commanded) const;

  /// Transport, round-trip heating and the final-well excitation for one offset.
  OffsetRun run_offset(const OptState& state, double nominal_offset) const;
  std::vector<TransportResult> run(const OptState& state) const;
  /// Same, for an already synthesized forward stage.
  std::vector<TransportResult> run_forward(const Waveform& fwd) const;

  /// Ion at rest in the idle well at x_A.
  IonState initial_ion() const;
  /// Time from the start of transport until the ion is probed.
  double heating_window(double realised_offset) const;

  std::uint64_t syntheses() const { return syntheses_; }
  std::uint64_t simulations() const { return simulations_; }

 private:
  TransportResult simulate(const Waveform& commanded, double realised_offset,
                           MotionTrace* keep_trace, Waveform* keep_delivered) const;

  ExperimentConfig config_;
  TrapModel model_;
  BaseSolutionSet base_;
  Eigen::VectorXd idle_a_;
  mutable std::uint64_t syntheses_ = 0;
  mutable std::uint64_t simulations_ = 0;
};

/// Per-offset results, offsets are realised values.
std::vector<TransportResult> run_transport_experiment(const OptState& state,
                                                     const TransportExperiment& experiment);

/// One objective evaluation as logged.
struct OptRecord {
  int eval_index = 0;  // global, strictly increasing
  int stage = 1;
  OptState state;
  std::vector<std::pair<double, double>> per_offset;  // (offset s, loss)
  std::vector<double> excitation;                      // total quanta per offset
  double total = 0.0;
  bool state_penalty = false;
  bool budget_penalty = false;
  bool ion_lost = false;
  double wall_seconds = 0.0;
};

/// Worst-offset total excitation, or +inf when empty.
double worst_excitation(const OptRecord& record);

/// The closed-loop cost: constraint checks first, then the simulated
/// measurement and the sideband loss.
class ClosedLoopObjective {
 public:
  ClosedLoopObjective(const TransportExperiment& experiment, int stage, Measurement measurement,
                      int first_index = 0);

  double operator()(const OptState& state);
  OptRecord evaluate(const OptState& state);

  const std::vector<OptRecord>& records() const { return records_; }
  const SidebandParams& params() const { return params_; }
  void set_listener(std::function<void(const OptRecord&)> listener) { listener_ = std::move(listener); }

 private:
  const TransportExperiment& experiment_;
  int stage_;
  SidebandParams params_;
  SidebandBands bands_;
  LossWeights weights_;
  Measurement measurement_;
  int next_index_;
  std::vector<OptRecord> records_;
  std::function<void(const OptRecord&)> listener_;
};

struct StageOutcome {
  OptState start;
  OptState best;
  double best_value = 0.0;
};

struct ScheduleResult {
  std::vector<StageOutcome> stages;
  std::vector<OptRecord> history;
  OptState best() const { return stages.back().best; }
};

/// Stage 1 with the first probe pair, stage 2 warm-started from its best with
/// the second pair. `listener` sees every record as it is produced.
ScheduleResult two_stage_schedule(const TransportExperiment& experiment, const OptState& x0,
                                  std::function<void(const OptRecord&)> listener = {});

/// Exact stage-`stage` evaluation of a state without touching any schedule.
OptRecord evaluate_state(const TransportExperiment& experiment, const OptState& state, int stage);

struct DecimationArm {
  int factor = 1;
  ScheduleResult schedule;
  OptRecord final_eval;  // stage-2 exact evaluation of the final state
};

struct DecimationStudy {
  DecimationArm full_rate;
  DecimationArm decimated;
};

/// Identical two-stage optimizations with and without DAC decimation.
DecimationStudy run_decimation_study(const ExperimentConfig& config, int factor,
                                     std::function<void(int factor, const OptRecord&)> listener = {});

}  // namespace shuttle
