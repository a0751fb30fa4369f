#include "shuttle/config.hpp"

#include "shuttle/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace shuttle {

using nlohmann::json;

std::string to_string(OptimizationMode mode) {
  switch (mode) {
    case OptimizationMode::trajectory: return "trajectory";
    case OptimizationMode::axial: return "axial";
    case OptimizationMode::both: return "both";
  }
  return "axial";
}

OptimizationMode parse_mode(const std::string& text) {
  if (text == "trajectory") return OptimizationMode::trajectory;
  if (text == "axial") return OptimizationMode::axial;
  if (text == "both") return OptimizationMode::both;
  throw ConfigError("optimizer.mode: expected trajectory|axial|both, got '" + text + "'");
}

namespace {

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be rejected.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw ConfigError(path_ + "/" + key + ": wrong type (" + it->dump() + ")");
    }
  }

  void read_optional(const char* key, std::optional<double>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    if (!it->is_number()) throw ConfigError(path_ + "/" + key + ": expected a number or null");
    out = it->get<double>();
  }

  Block child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return Block(empty(), path_ + "/" + key);
    return Block(*it, path_ + "/" + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + "/" + it.key() + ": unknown key");
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_pair(Block b, ProbePair& p) {
  b.read("t1_us", p.t1_us);
  b.read("t2_us", p.t2_us);
  b.finish();
}

json pair_json(const ProbePair& p) { return {{"t1_us", p.t1_us}, {"t2_us", p.t2_us}}; }

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  ExperimentConfig c;
  Block top(root, "");
  {
    Block b = top.child("trap");
    b.read("electrode_count", c.trap.electrode_count);
    b.read("pitch_um", c.trap.pitch_um);
    b.read("ion_height_um", c.trap.ion_height_um);
    b.finish();
  }
  {
    Block b = top.child("ion");
    b.read("mass_amu", c.ion.mass_amu);
    b.read("charge_e", c.ion.charge_e);
    b.read("prepared_nbar", c.ion.prepared_nbar);
    b.read("heating_rate_per_s", c.ion.heating_rate_per_s);
    b.finish();
  }
  {
    Block b = top.child("transport");
    auto& t = c.transport;
    b.read("x_a_um", t.x_a_um);
    b.read("x_b_um", t.x_b_um);
    b.read("t_f_us", t.t_f_us);
    b.read("hold_us", t.hold_us);
    b.read("offset_count", t.offset_count);
    b.read("base_count", t.base_count);
    b.read("base_frequency_mhz", t.base_frequency_mhz);
    b.read("preroll_us", t.preroll_us);
    b.read("settle_us", t.settle_us);
    b.read("integrator_substeps", t.integrator_substeps);
    b.finish();
  }
  {
    Block b = top.child("electronics");
    auto& e = c.electronics;
    b.read("sample_period_ns", e.sample_period_ns);
    b.read("fir_enabled", e.fir_enabled);
    b.read("fir_pass_mhz", e.fir_pass_mhz);
    b.read("fir_stop_mhz", e.fir_stop_mhz);
    b.read("fir_atten_db", e.fir_atten_db);
    b.read("analog_enabled", e.analog_enabled);
    b.read("analog_order", e.analog_order);
    b.read("analog_cutoff_mhz", e.analog_cutoff_mhz);
    b.read("analog_oversample", e.analog_oversample);
    b.read("decimation_factor", e.decimation_factor);
    b.read("study_decimation_factor", e.study_decimation_factor);
    b.finish();
  }
  {
    Block b = top.child("sideband");
    auto& s = c.sideband;
    b.read("g0_khz", s.g0_khz);
    b.read_optional("lamb_dicke", s.lamb_dicke);
    b.read("wavelength_nm", s.wavelength_nm);
    read_pair(b.child("stage1"), s.stage1);
    read_pair(b.child("stage2"), s.stage2);
    b.read("band_width_factor", s.band_width_factor);
    b.read("band_points", s.band_points);
    b.read("fock_cutoff", s.fock_cutoff);
    b.read("shots", s.shots);
    b.read("seed", s.seed);
    b.read("alpha1_per_khz", s.alpha1_per_khz);
    b.read("alpha2_per_khz", s.alpha2_per_khz);
    b.finish();
  }
  {
    Block b = top.child("optimizer");
    auto& o = c.optimizer;
    std::string mode = to_string(o.mode);
    b.read("mode", mode);
    o.mode = parse_mode(mode);
    b.read("n_t", o.n_t);
    b.read("n_f", o.n_f);
    b.read("reflection", o.reflection);
    b.read("expansion", o.expansion);
    b.read("contraction", o.contraction);
    b.read("shrink", o.shrink);
    b.read("freq_step_mhz", o.freq_step_mhz);
    b.read("traj_step", o.traj_step);
    b.read("evals_per_stage", o.evals_per_stage);
    b.finish();
  }
  {
    Block b = top.child("constraints");
    auto& k = c.constraints;
    b.read("freq_min_mhz", k.freq_min_mhz);
    b.read("freq_max_mhz", k.freq_max_mhz);
    b.read("voltage_budget_v", k.voltage_budget_v);
    b.read("freq_penalty_scale", k.freq_penalty_scale);
    b.read("freq_penalty_sharpness_per_mhz", k.freq_penalty_sharpness_per_mhz);
    b.read("voltage_penalty_scale", k.voltage_penalty_scale);
    b.read("voltage_penalty_sharpness_per_v", k.voltage_penalty_sharpness_per_v);
    b.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["trap"] = {{"electrode_count", c.trap.electrode_count},
               {"pitch_um", c.trap.pitch_um},
               {"ion_height_um", c.trap.ion_height_um}};
  j["ion"] = {{"mass_amu", c.ion.mass_amu},
              {"charge_e", c.ion.charge_e},
              {"prepared_nbar", c.ion.prepared_nbar},
              {"heating_rate_per_s", c.ion.heating_rate_per_s}};
  const auto& t = c.transport;
  j["transport"] = {{"x_a_um", t.x_a_um},
                    {"x_b_um", t.x_b_um},
                    {"t_f_us", t.t_f_us},
                    {"hold_us", t.hold_us},
                    {"offset_count", t.offset_count},
                    {"base_count", t.base_count},
                    {"base_frequency_mhz", t.base_frequency_mhz},
                    {"preroll_us", t.preroll_us},
                    {"settle_us", t.settle_us},
                    {"integrator_substeps", t.integrator_substeps}};
  const auto& e = c.electronics;
  j["electronics"] = {{"sample_period_ns", e.sample_period_ns},
                      {"fir_enabled", e.fir_enabled},
                      {"fir_pass_mhz", e.fir_pass_mhz},
                      {"fir_stop_mhz", e.fir_stop_mhz},
                      {"fir_atten_db", e.fir_atten_db},
                      {"analog_enabled", e.analog_enabled},
                      {"analog_order", e.analog_order},
                      {"analog_cutoff_mhz", e.analog_cutoff_mhz},
                      {"analog_oversample", e.analog_oversample},
                      {"decimation_factor", e.decimation_factor},
                      {"study_decimation_factor", e.study_decimation_factor}};
  const auto& s = c.sideband;
  j["sideband"] = {{"g0_khz", s.g0_khz},
                   {"lamb_dicke", s.lamb_dicke ? json(*s.lamb_dicke) : json(nullptr)},
                   {"wavelength_nm", s.wavelength_nm},
                   {"stage1", pair_json(s.stage1)},
                   {"stage2", pair_json(s.stage2)},
                   {"band_width_factor", s.band_width_factor},
                   {"band_points", s.band_points},
                   {"fock_cutoff", s.fock_cutoff},
                   {"shots", s.shots},
                   {"seed", s.seed},
                   {"alpha1_per_khz", s.alpha1_per_khz},
                   {"alpha2_per_khz", s.alpha2_per_khz}};
  const auto& o = c.optimizer;
  j["optimizer"] = {{"mode", to_string(o.mode)},
                    {"n_t", o.n_t},
                    {"n_f", o.n_f},
                    {"reflection", o.reflection},
                    {"expansion", o.expansion},
                    {"contraction", o.contraction},
                    {"shrink", o.shrink},
                    {"freq_step_mhz", o.freq_step_mhz},
                    {"traj_step", o.traj_step},
                    {"evals_per_stage", o.evals_per_stage}};
  const auto& k = c.constraints;
  j["constraints"] = {{"freq_min_mhz", k.freq_min_mhz},
                      {"freq_max_mhz", k.freq_max_mhz},
                      {"voltage_budget_v", k.voltage_budget_v},
                      {"freq_penalty_scale", k.freq_penalty_scale},
                      {"freq_penalty_sharpness_per_mhz", k.freq_penalty_sharpness_per_mhz},
                      {"voltage_penalty_scale", k.voltage_penalty_scale},
                      {"voltage_penalty_sharpness_per_v", k.voltage_penalty_sharpness_per_v}};
  return j.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ExperimentConfig::validate() const {
  require(trap.electrode_count >= 3, "/trap/electrode_count", "need at least 3 electrodes");
  require(trap.pitch_um > 0.0, "/trap/pitch_um", "must be positive");
  require(trap.ion_height_um > 0.0, "/trap/ion_height_um", "must be positive");
  require(ion.mass_amu > 0.0, "/ion/mass_amu", "must be positive");
  require(ion.charge_e > 0.0, "/ion/charge_e", "must be positive");
  require(ion.prepared_nbar >= 0.0, "/ion/prepared_nbar", "must be non-negative");
  require(ion.heating_rate_per_s >= 0.0, "/ion/heating_rate_per_s", "must be non-negative");
  require(transport.x_a_um != transport.x_b_um, "/transport/x_b_um", "must differ from x_a_um");
  const double span = 0.5 * trap.electrode_count * trap.pitch_um;
  require(std::abs(transport.x_a_um) < span && std::abs(transport.x_b_um) < span, "/transport",
          "path endpoints must lie over the electrode array");
  require(transport.t_f_us > 0.0, "/transport/t_f_us", "must be positive");
  require(transport.hold_us >= 0.0, "/transport/hold_us", "must be non-negative");
  require(transport.offset_count >= 1, "/transport/offset_count", "must be >= 1");
  require(transport.base_count >= 2, "/transport/base_count", "must be >= 2");
  require(transport.base_frequency_mhz > 0.0, "/transport/base_frequency_mhz", "must be positive");
  require(transport.preroll_us >= 0.0, "/transport/preroll_us", "must be non-negative");
  require(transport.settle_us >= 0.0, "/transport/settle_us", "must be non-negative");
  require(transport.integrator_substeps >= 1, "/transport/integrator_substeps", "must be >= 1");
  require(electronics.sample_period_ns > 0.0, "/electronics/sample_period_ns", "must be positive");
  require(electronics.fir_pass_mhz > 0.0 && electronics.fir_pass_mhz < electronics.fir_stop_mhz,
          "/electronics/fir_pass_mhz", "must be positive and below fir_stop_mhz");
  require(electronics.fir_stop_mhz < 0.5e3 / electronics.sample_period_ns, "/electronics/fir_stop_mhz",
          "must be below the DAC Nyquist frequency");
  require(electronics.fir_atten_db > 0.0, "/electronics/fir_atten_db", "must be positive");
  require(electronics.analog_order >= 2 && electronics.analog_order % 2 == 0,
          "/electronics/analog_order", "must be an even order >= 2");
  require(electronics.analog_cutoff_mhz > 0.0, "/electronics/analog_cutoff_mhz", "must be positive");
  require(electronics.analog_oversample >= 4, "/electronics/analog_oversample", "must be >= 4");
  require(electronics.decimation_factor >= 1, "/electronics/decimation_factor", "must be >= 1");
  require(electronics.study_decimation_factor >= 1, "/electronics/study_decimation_factor",
          "must be >= 1");
  require(sideband.g0_khz > 0.0, "/sideband/g0_khz", "must be positive");
  require(!sideband.lamb_dicke || *sideband.lamb_dicke > 0.0, "/sideband/lamb_dicke", "must be positive");
  require(sideband.wavelength_nm > 0.0, "/sideband/wavelength_nm", "must be positive");
  for (const auto* p : {&sideband.stage1, &sideband.stage2})
    require(p->t1_us > 0.0 && p->t2_us > 0.0, "/sideband/stage", "probe times must be positive");
  require(sideband.band_width_factor > 0.0, "/sideband/band_width_factor", "must be positive");
  require(sideband.band_points >= 2, "/sideband/band_points", "must be >= 2");
  require(sideband.fock_cutoff >= 2, "/sideband/fock_cutoff", "must be >= 2");
  require(sideband.shots >= 0, "/sideband/shots", "must be >= 0 (0 = exact)");
  require(sideband.alpha1_per_khz > 0.0, "/sideband/alpha1_per_khz", "must be positive");
  require(sideband.alpha2_per_khz > 0.0, "/sideband/alpha2_per_khz", "must be positive");
  require(optimizer.n_t >= 0, "/optimizer/n_t", "must be >= 0");
  require(optimizer.n_f >= 0, "/optimizer/n_f", "must be >= 0");
  require(active_n_f() + active_n_t() >= 1, "/optimizer", "mode leaves no parameters to optimize");
  require(optimizer.freq_step_mhz > 0.0, "/optimizer/freq_step_mhz", "must be positive");
  require(optimizer.traj_step > 0.0, "/optimizer/traj_step", "must be positive");
  require(optimizer.evals_per_stage >= 1, "/optimizer/evals_per_stage", "must be >= 1");
  try {
    nelder_mead(active_n_f(), active_n_t()).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("/optimizer: ") + e.what());
  }
  require(constraints.freq_min_mhz > 0.0 && constraints.freq_min_mhz < constraints.freq_max_mhz,
          "/constraints/freq_min_mhz", "must be positive and below freq_max_mhz");
  require(constraints.voltage_budget_v > 0.0, "/constraints/voltage_budget_v", "must be positive");
  require(constraints.freq_penalty_scale > 0.0 && constraints.voltage_penalty_scale > 0.0,
          "/constraints", "penalty scales must be positive");
  require(constraints.freq_penalty_sharpness_per_mhz > 0.0 &&
              constraints.voltage_penalty_sharpness_per_v > 0.0,
          "/constraints", "penalty sharpness must be positive");
}

TrapModel ExperimentConfig::trap_model() const {
  TrapModel m;
  m.geometry = ElectrodeGeometry::uniform(trap.electrode_count, trap.pitch_um * units::um,
                                          trap.ion_height_um * units::um);
  m.ion_mass = ion.mass_amu * kAtomicMassUnit;
  m.ion_charge = ion.charge_e * kElementaryCharge;
  return m;
}

ConstraintPolicy ExperimentConfig::constraint_policy() const {
  const auto& k = constraints;
  return {k.freq_min_mhz,       k.freq_max_mhz,
          k.voltage_budget_v,   k.freq_penalty_scale,
          k.freq_penalty_sharpness_per_mhz, k.voltage_penalty_scale,
          k.voltage_penalty_sharpness_per_v};
}

FirBand ExperimentConfig::fir_band() const {
  return {electronics.fir_pass_mhz * units::MHz, electronics.fir_stop_mhz * units::MHz,
          electronics.fir_atten_db};
}

AnalogSpec ExperimentConfig::analog_spec() const {
  return {electronics.analog_order, electronics.analog_cutoff_mhz * units::MHz,
          electronics.analog_oversample};
}

double ExperimentConfig::lamb_dicke() const {
  if (sideband.lamb_dicke) return *sideband.lamb_dicke;
  return lamb_dicke_parameter(sideband.wavelength_nm * units::nm, ion.mass_amu * kAtomicMassUnit,
                              base_frequency());
}

SidebandParams ExperimentConfig::sideband_params(int stage) const {
  const ProbePair& pair = stage == 2 ? sideband.stage2 : sideband.stage1;
  SidebandParams p;
  p.carrier_coupling = kTwoPi * sideband.g0_khz * units::kHz;
  p.lamb_dicke = lamb_dicke();
  p.trap_frequency = kTwoPi * base_frequency();
  p.probe_time_1 = pair.t1_us * units::us;
  p.probe_time_2 = pair.t2_us * units::us;
  p.fock_cutoff = sideband.fock_cutoff;
  return p;
}

SidebandBands ExperimentConfig::sideband_bands(const SidebandParams& params) const {
  return default_bands(params, sideband.band_width_factor, sideband.band_points);
}

NelderMeadConfig ExperimentConfig::nelder_mead(Eigen::Index n_f, Eigen::Index n_t) const {
  NelderMeadConfig cfg;
  cfg.reflection = optimizer.reflection;
  cfg.expansion = optimizer.expansion;
  cfg.contraction = optimizer.contraction;
  cfg.shrink = optimizer.shrink;
  cfg.max_evals = optimizer.evals_per_stage;
  cfg.seed = sideband.seed;
  cfg.initial_step.resize(n_f + n_t);
  cfg.initial_step.head(n_f).setConstant(optimizer.freq_step_mhz);
  cfg.initial_step.tail(n_t).setConstant(optimizer.traj_step);
  return cfg;
}

Eigen::Index ExperimentConfig::active_n_f() const {
  return optimizer.mode == OptimizationMode::trajectory ? 0 : optimizer.n_f;
}

Eigen::Index ExperimentConfig::active_n_t() const {
  return optimizer.mode == OptimizationMode::axial ? 0 : optimizer.n_t;
}

OptState ExperimentConfig::initial_state() const {
  return {Eigen::VectorXd::Constant(active_n_f(), transport.base_frequency_mhz),
          minimal_ramp_points(active_n_t())};
}

}  // namespace shuttle
