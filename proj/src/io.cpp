#include "shuttle/io.hpp"

#include "shuttle/errors.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace shuttle::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void check(const std::ostream& out, const std::filesystem::path& path) {
  if (!out) throw IoError("write failed for " + path.string());
}

std::string version_line() { return "# shuttle-format " + std::to_string(kFormatVersion); }

}  // namespace

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_base_solutions(const std::filesystem::path& path, const BaseSolutionSet& set) {
  auto out = open_out(path);
  out << version_line() << "\n# frequency_mhz " << set.frequency / units::MHz << "\nposition_um";
  for (int e = 0; e < set.electrodes(); ++e) out << "\tV" << e;
  out << '\n';
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    out << set.positions(i) / units::um;
    for (int e = 0; e < set.electrodes(); ++e) out << '\t' << set.voltages(e, i);
    out << '\n';
  }
  check(out, path);
}

BaseSolutionSet read_base_solutions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  double freq = 0.0;
  int version = -1;
  std::vector<std::vector<double>> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (line[0] == '#') {
      std::string hash, key;
      ss >> hash >> key;
      if (key == "shuttle-format") ss >> version;
      if (key == "frequency_mhz") ss >> freq;
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError(path.string() + ": ragged row in base-solution file");
    rows.push_back(std::move(row));
  }
  if (version != kFormatVersion) throw IoError(path.string() + ": unsupported or missing format version");
  if (rows.size() < 2 || rows.front().size() < 2) throw IoError(path.string() + ": no solutions");
  BaseSolutionSet set;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto ne = static_cast<Eigen::Index>(rows.front().size()) - 1;
  set.positions.resize(n);
  set.voltages.resize(ne, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    set.positions(i) = rows[i][0] * units::um;
    for (Eigen::Index e = 0; e < ne; ++e) set.voltages(e, i) = rows[i][e + 1];
  }
  set.frequency = freq * units::MHz;
  set.spacing = (set.positions(n - 1) - set.positions(0)) / double(n - 1);
  return set;
}

void write_waveform(const std::filesystem::path& path, const Waveform& w, const std::string& label) {
  auto out = open_out(path);
  out << version_line() << "\n# waveform " << label << "\n# sample_period_ns " << w.sample_period / units::ns
      << "\n# channels " << w.channels() << "\n# forward_end " << w.markers.forward_end
      << "\n# hold_end " << w.markers.hold_end << "\n# reverse_end " << w.markers.reverse_end
      << "\n# filtered " << w.filtered << "\n# decimated " << w.decimated << "\ntime_ns";
  for (Eigen::Index c = 0; c < w.channels(); ++c) out << "\tV" << c;
  out << '\n';
  for (Eigen::Index k = 0; k < w.length(); ++k) {
    out << double(k) * w.sample_period / units::ns;
    for (Eigen::Index c = 0; c < w.channels(); ++c) out << '\t' << w.samples(c, k);
    out << '\n';
  }
  check(out, path);
}

void write_trajectory(const std::filesystem::path& path, const TrapModel& model, const Waveform& delivered,
                      const MotionTrace& trace, int stride) {
  auto out = open_out(path);
  out << version_line() << "\ntime_us\tposition_um\tvelocity_m_s\twell_um\tfrequency_mhz\n";
  stride = std::max(stride, 1);
  double guess = trace.positions(0);
  for (Eigen::Index k = 0; k < trace.times.size(); k += stride) {
    const Eigen::Index col = std::min<Eigen::Index>(k, delivered.length() - 1);
    double well = std::nan(""), freq = std::nan("");
    try {
      const WellProperties wp = well_properties(model, delivered.samples.col(col), guess);
      well = wp.position;
      freq = wp.frequency;
      guess = wp.position;
    } catch (const NoWellFound&) {
      guess = trace.positions(k);
    }
    out << trace.times(k) / units::us << '\t' << trace.positions(k) / units::um << '\t'
        << trace.velocities(k) << '\t' << well / units::um << '\t' << freq / units::MHz << '\n';
  }
  check(out, path);
}

void write_scan(const std::filesystem::path& path, const std::vector<SidebandScan>& scans,
                const std::vector<double>& offsets) {
  auto out = open_out(path);
  out << version_line() << "\noffset_ns\torder\tdetuning_kHz\texcitation\n";
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const auto& s = scans[i];
    for (Eigen::Index j = 0; j < s.detunings.size(); ++j)
      out << offsets[i] / units::ns << '\t' << s.order << '\t' << s.detunings(j) / kTwoPi / units::kHz
          << '\t' << s.excitation(j) << '\n';
  }
  check(out, path);
}

HistoryLog::HistoryLog(const std::filesystem::path& path, Eigen::Index n_f, Eigen::Index n_t, int offsets)
    : offsets_(offsets) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_ = open_out(path, std::ios::app);
  if (fresh) {
    out_ << "eval\tstage\ttotal_loss\tworst_quanta\tstate_penalty\tbudget_penalty\tion_lost\twall_s";
    for (Eigen::Index i = 0; i < n_f; ++i) out_ << "\tf" << i + 1 << "_mhz";
    for (Eigen::Index i = 0; i < n_t; ++i) out_ << "\tb" << i + 1;
    for (int h = 0; h < offsets; ++h) out_ << "\tloss_h" << h;
    out_ << '\n';
  }
}

void HistoryLog::append(const OptRecord& r) {
  const double worst = worst_excitation(r);
  out_ << r.eval_index << '\t' << r.stage << '\t' << r.total << '\t'
       << (std::isfinite(worst) ? worst : std::nan("")) << '\t' << r.state_penalty << '\t'
       << r.budget_penalty << '\t' << r.ion_lost << '\t' << r.wall_seconds;
  for (Eigen::Index i = 0; i < r.state.n_f(); ++i) out_ << '\t' << r.state.freq_points_mhz(i);
  for (Eigen::Index i = 0; i < r.state.n_t(); ++i) out_ << '\t' << r.state.traj_points(i);
  for (int h = 0; h < offsets_; ++h)
    out_ << '\t' << (h < int(r.per_offset.size()) ? r.per_offset[h].second : std::nan(""));
  out_ << '\n';
  out_.flush();
  if (!out_) throw IoError("history log write failed");
}

void write_state(const std::filesystem::path& path, const OptState& state, double loss) {
  nlohmann::json j;
  j["format"] = kFormatVersion;
  j["freq_points_mhz"] = std::vector<double>(state.freq_points_mhz.begin(), state.freq_points_mhz.end());
  j["traj_points"] = std::vector<double>(state.traj_points.begin(), state.traj_points.end());
  j["loss"] = loss;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  check(out, path);
}

OptState read_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open state file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format").get<int>() != kFormatVersion) throw IoError(path.string() + ": unsupported format");
    const auto f = j.at("freq_points_mhz").get<std::vector<double>>();
    const auto b = j.at("traj_points").get<std::vector<double>>();
    return {Eigen::Map<const Eigen::VectorXd>(f.data(), Eigen::Index(f.size())),
            Eigen::Map<const Eigen::VectorXd>(b.data(), Eigen::Index(b.size()))};
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed state file: " + e.what());
  }
}

void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const ExperimentConfig& config) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config_hash(config);
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = hash.str();
  j["seed"] = config.sideband.seed;
  j["shots"] = config.sideband.shots;
  j["format_version"] = kFormatVersion;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                       "." + std::to_string(EIGEN_MINOR_VERSION);
  j["config"] = nlohmann::json::parse(serialize_config(config));
  auto out = open_out(dir / "manifest.json");
  out << j.dump(2) << '\n';
  check(out, dir / "manifest.json");
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, const std::string& comment) {
  auto out = open_out(path);
  out << version_line() << '\n';
  if (!comment.empty()) out << "# " << comment << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "\t" : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
    out << '\n';
  }
  check(out, path);
}

}  // namespace shuttle::io
