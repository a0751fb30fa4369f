#pragma once

#include "shuttle/config.hpp"
#include "shuttle/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace shuttle::io {

inline constexpr int kFormatVersion = 1;

/// Tab-separated base set: one row per solution, position_um then V_0..V_{N-1}.
void write_base_solutions(const std::filesystem::path& path, const BaseSolutionSet& set);
BaseSolutionSet read_base_solutions(const std::filesystem::path& path);

/// One row per sample: time_ns, then one column per electrode. Stage
/// markers and the sample period go in '#' header lines.
void write_waveform(const std::filesystem::path& path, const Waveform& w, const std::string& label);

/// time_us, position_um, velocity_m_s, well_um, frequency_mhz; every
/// `stride`-th sample boundary.
void write_trajectory(const std::filesystem::path& path, const TrapModel& model, const Waveform& delivered,
                      const MotionTrace& trace, int stride = 8);

void write_scan(const std::filesystem::path& path, const std::vector<SidebandScan>& scans,
                const std::vector<double>& offsets);

/// Append-only evaluation log. Columns: eval, stage, total_loss, worst_quanta,
/// state_penalty, budget_penalty, ion_lost, wall_s, f_1..f_nf, b_1..b_nt,
/// then loss_h0..loss_h{K-1}.
class HistoryLog {
 public:
  HistoryLog(const std::filesystem::path& path, Eigen::Index n_f, Eigen::Index n_t, int offsets);
  void append(const OptRecord& record);

 private:
  std::ofstream out_;
  int offsets_;
};

void write_state(const std::filesystem::path& path, const OptState& state, double loss);
OptState read_state(const std::filesystem::path& path);

/// manifest.json: command, config hash, seed, format version.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const ExperimentConfig& config);

/// Simple tab-separated table with a header row.
void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, const std::string& comment = {});

/// Creates the directory (and parents); throws IoError on failure.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace shuttle::io
