#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nifsim/power.hpp"

namespace nifsim {

/// Raised on malformed configuration input (CLI exit code 2).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised on file-system failures (CLI exit code 4).
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DemandSource { Random, RandomZeroBound, File };

/// Experiment-level configuration: the radio constants plus run control.
struct RunConfig {
  RadioConfig radio;
  SchedulerMode mode = SchedulerMode::Nif;
  bool zf = false;
  int realizations = 1;
  std::uint64_t seed = 1;
  bool strict = false;
  int workers = 0;  // 0 = hardware default
  std::string out_dir = ".";
  DemandSource d_source = DemandSource::Random;
  std::string d_file;
  std::vector<double> eps_list;       // graph-stats sweep; empty = radio.epsilon only
  std::vector<double> pmax_list_dBm;  // simulate feasibility sweep; empty = off
  int max_cycle_len = 8;
};

namespace detail {

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size()) throw config_error("bad numeric list entry: " + item);
    out.push_back(v);
  }
  return out;
}

inline std::string format_double_list(const std::vector<double>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ',';
    out << xs[i];
  }
  return out.str();
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw config_error("bad boolean for " + key + ": " + v);
}

}  // namespace detail

/// Applies one `key = value` line. Keys mirror the radio constant names.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "K") cfg.radio.K = std::stoi(value);
    else if (key == "U") cfg.radio.U = std::stoi(value);
    else if (key == "N_RF") cfg.radio.N_RF = std::stoi(value);
    else if (key == "N") cfg.radio.N = std::stoi(value);
    else if (key == "N_t") cfg.radio.N_t = std::stoi(value);
    else if (key == "g_min_dB") cfg.radio.g_min = db_to_lin(std::stod(value));
    else if (key == "fc_GHz") cfg.radio.fc_GHz = std::stod(value);
    else if (key == "W_Hz") cfg.radio.W_Hz = std::stod(value);
    else if (key == "radius_m") cfg.radio.radius_m = std::stod(value);
    else if (key == "Pmax_dBm") cfg.radio.Pmax_dBm = std::stod(value);
    else if (key == "P0_dBm") cfg.radio.P0_dBm = std::stod(value);
    else if (key == "noise_figure_dB") cfg.radio.noise_figure_dB = std::stod(value);
    else if (key == "epsilon") cfg.radio.epsilon = std::stod(value);
    else if (key == "eta") cfg.radio.eta = std::stod(value);
    else if (key == "periods") cfg.radio.periods = std::stoi(value);
    else if (key == "mode") cfg.mode = scheduler_mode_from_string(value);
    else if (key == "zf") cfg.zf = detail::parse_bool(value, key);
    else if (key == "realizations") cfg.realizations = std::stoi(value);
    else if (key == "seed") cfg.seed = std::stoull(value);
    else if (key == "strict") cfg.strict = detail::parse_bool(value, key);
    else if (key == "workers") cfg.workers = std::stoi(value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "d_source") {
      if (value == "random") cfg.d_source = DemandSource::Random;
      else if (value == "random-zero-bound") cfg.d_source = DemandSource::RandomZeroBound;
      else if (value == "file") cfg.d_source = DemandSource::File;
      else throw config_error("bad d_source: " + value);
    }
    else if (key == "d_file") cfg.d_file = value;
    else if (key == "eps_list") cfg.eps_list = detail::parse_double_list(value);
    else if (key == "pmax_list_dBm") cfg.pmax_list_dBm = detail::parse_double_list(value);
    else if (key == "max_cycle_len") cfg.max_cycle_len = std::stoi(value);
    else throw config_error("unknown config key: " + key);
  } catch (const config_error&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw config_error("bad value for " + key + ": " + value + " (" + e.what() + ")");
  } catch (const std::out_of_range&) {
    throw config_error("value out of range for " + key + ": " + value);
  }
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error("config line " + std::to_string(line_no) + ": empty key");
    apply_config_entry(cfg, key, value);
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "K = " << cfg.radio.K << '\n'
      << "U = " << cfg.radio.U << '\n'
      << "N_RF = " << cfg.radio.N_RF << '\n'
      << "N = " << cfg.radio.N << '\n'
      << "N_t = " << cfg.radio.N_t << '\n'
      << "g_min_dB = " << lin_to_db(cfg.radio.g_min) << '\n'
      << "fc_GHz = " << cfg.radio.fc_GHz << '\n'
      << "W_Hz = " << cfg.radio.W_Hz << '\n'
      << "radius_m = " << cfg.radio.radius_m << '\n'
      << "Pmax_dBm = " << cfg.radio.Pmax_dBm << '\n'
      << "P0_dBm = " << cfg.radio.P0_dBm << '\n'
      << "noise_figure_dB = " << cfg.radio.noise_figure_dB << '\n'
      << "epsilon = " << cfg.radio.epsilon << '\n'
      << "eta = " << cfg.radio.eta << '\n'
      << "periods = " << cfg.radio.periods << '\n'
      << "mode = " << to_string(cfg.mode) << '\n'
      << "zf = " << (cfg.zf ? "true" : "false") << '\n'
      << "realizations = " << cfg.realizations << '\n'
      << "seed = " << cfg.seed << '\n'
      << "strict = " << (cfg.strict ? "true" : "false") << '\n'
      << "workers = " << cfg.workers << '\n'
      << "out = " << cfg.out_dir << '\n';
  out << "d_source = "
      << (cfg.d_source == DemandSource::Random
              ? "random"
              : cfg.d_source == DemandSource::RandomZeroBound ? "random-zero-bound" : "file")
      << '\n';
  if (!cfg.d_file.empty()) out << "d_file = " << cfg.d_file << '\n';
  if (!cfg.eps_list.empty()) out << "eps_list = " << detail::format_double_list(cfg.eps_list) << '\n';
  if (!cfg.pmax_list_dBm.empty())
    out << "pmax_list_dBm = " << detail::format_double_list(cfg.pmax_list_dBm) << '\n';
  out << "max_cycle_len = " << cfg.max_cycle_len << '\n';
  return out.str();
}

}  // namespace nifsim
