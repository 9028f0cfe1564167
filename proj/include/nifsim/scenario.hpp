#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nifsim/util.hpp"

namespace nifsim {

/// Radio-level constants of one experiment. Defaults follow the standard
/// 7-cell mmWave setup used throughout the test suites.
struct RadioConfig {
  int K = 7;          ///< cells
  int U = 8;          ///< users per cell
  int N_RF = 4;       ///< RF chains per BS
  int N = 16;         ///< time slots per scheduling period
  int N_t = 16;       ///< BS antennas; the codebook has 2*N_t beams
  double g_min = 0.251188643150958;  ///< side-lobe linear gain (-6 dB)
  double fc_GHz = 28.0;
  double W_Hz = 250e6;
  double radius_m = 100.0;  ///< cell circumradius
  double Pmax_dBm = 24.0;   ///< per-RF-chain max transmit power
  double P0_dBm = 24.0;     ///< reference-signal power
  double noise_figure_dB = 6.0;
  double epsilon = 0.08;  ///< interference-graph threshold
  double eta = 0.2;       ///< initial-interference strength
  int periods = 20;       ///< scheduling periods per run

  int num_beams() const { return 2 * N_t; }
  int num_users() const { return K * U; }
  double pmax_watt() const { return dbm_to_watt(Pmax_dBm); }
  double p0_watt() const { return dbm_to_watt(P0_dBm); }

  void validate() const {
    if (K < 1) throw std::invalid_argument("config: K must be >= 1");
    if (U < 0) throw std::invalid_argument("config: U must be >= 0");
    if (N_RF < 1) throw std::invalid_argument("config: N_RF must be >= 1");
    if (N < 1) throw std::invalid_argument("config: N must be >= 1");
    if (N_t < 2 || (N_t & (N_t - 1)) != 0)
      throw std::invalid_argument("config: N_t must be a power of two >= 2");
    if (!(g_min > 0.0 && g_min < 1.0))
      throw std::invalid_argument("config: g_min must be in (0, 1)");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw std::invalid_argument("config: epsilon must be in (0, 1)");
    if (!(eta >= 0.0)) throw std::invalid_argument("config: eta must be >= 0");
    if (!(fc_GHz > 0.0 && W_Hz > 0.0 && radius_m > 0.0))
      throw std::invalid_argument("config: fc_GHz, W_Hz, radius_m must be positive");
    if (periods < 1) throw std::invalid_argument("config: periods must be >= 1");
  }
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

/// Center cell plus one hexagonal ring. Only K in {1, 7} have a built-in
/// layout; other cell counts must supply coordinates explicitly.
inline std::vector<Vec2> build_hex_layout(int K, double radius_m) {
  if (radius_m <= 0.0) throw std::invalid_argument("build_hex_layout: radius must be positive");
  if (K == 1) return {Vec2{0.0, 0.0}};
  if (K == 7) {
    std::vector<Vec2> layout{Vec2{0.0, 0.0}};
    const double dist = std::sqrt(3.0) * radius_m;
    for (int j = 0; j < 6; ++j) {
      const double ang = j * M_PI / 3.0;
      layout.push_back(Vec2{dist * std::cos(ang), dist * std::sin(ang)});
    }
    return layout;
  }
  throw std::invalid_argument("build_hex_layout: K=" + std::to_string(K) +
                              " has no built-in layout; pass coordinates explicitly");
}

/// Point-in-hexagon test for a pointy-top hexagon of circumradius R centered
/// at c (edges face the six neighbor directions 0, 60, ..., 300 degrees).
inline bool hex_contains(const Vec2& c, double radius_m, const Vec2& p) {
  const double px = p.x - c.x, py = p.y - c.y;
  const double apothem = std::sqrt(3.0) / 2.0 * radius_m + 1e-9;
  static const double axes[3][2] = {{1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}, {-0.5, std::sqrt(3.0) / 2.0}};
  for (const auto& n : axes) {
    if (std::abs(px * n[0] + py * n[1]) > apothem) return false;
  }
  return true;
}

/// U uniform points in each cell's hexagon by rejection from the [-R, R]^2 box.
inline std::vector<std::vector<Vec2>> drop_users(const std::vector<Vec2>& layout, int U,
                                                 double radius_m, Rng& rng) {
  std::vector<std::vector<Vec2>> users(layout.size());
  for (std::size_t k = 0; k < layout.size(); ++k) {
    users[k].reserve(U);
    for (int u = 0; u < U; ++u) {
      Vec2 p;
      do {
        p.x = layout[k].x + rng.uniform(-radius_m, radius_m);
        p.y = layout[k].y + rng.uniform(-radius_m, radius_m);
      } while (!hex_contains(layout[k], radius_m, p));
      users[k].push_back(p);
    }
  }
  return users;
}

/// 3GPP urban-macro path loss, dB. d in meters, fc in GHz.
inline double path_loss_db(double d_m, bool los, double fc_GHz) {
  if (d_m <= 0.0) throw std::domain_error("path_loss_db: distance must be positive");
  if (los) return 32.4 + 20.0 * std::log10(d_m) + 20.0 * std::log10(fc_GHz);
  return 13.54 + 39.08 * std::log10(d_m) + 20.0 * std::log10(fc_GHz);
}

/// LoS probability of a remote link. The closed form exceeds 1 below ~18 m,
/// so the result is clamped into [0, 1].
inline double los_probability(double d_m) {
  if (d_m <= 0.0) throw std::domain_error("los_probability: distance must be positive");
  const double raw = 18.0 / d_m + std::exp(-(d_m / 63.0) * (1.0 - 18.0 / d_m));
  return std::clamp(raw, 0.0, 1.0);
}

/// Thermal noise power over bandwidth W_Hz with the given receiver noise figure.
inline double noise_power_dbm(double W_Hz, double noise_figure_dB) {
  if (W_Hz <= 0.0) throw std::domain_error("noise_power_dbm: bandwidth must be positive");
  return -174.0 + 10.0 * std::log10(W_Hz) + noise_figure_dB;
}

inline double noise_power_watt(const RadioConfig& cfg) {
  return dbm_to_watt(noise_power_dbm(cfg.W_Hz, cfg.noise_figure_dB));
}

namespace detail {

/// Boresight position of beam b on the sin(theta) axis, together with the
/// half-plane the main lobe lives in. Beams are indexed counter-clockwise:
/// b in [N_t/2, 3N_t/2-1] point into the back half-plane (cos(theta) <= 0),
/// the rest into the front one. The two meridian beams (|sin| = 1) straddle
/// both half-planes.
struct BeamGeometry {
  double boresight_sin;
  bool back_half;
};

inline BeamGeometry beam_geometry(int b, int N_t) {
  BeamGeometry g{};
  if (b >= N_t / 2 && b <= 3 * N_t / 2 - 1) {
    g.back_half = true;
    g.boresight_sin = 2.0 * (N_t - b) / N_t;
  } else {
    g.back_half = false;
    double s = 2.0 * b / N_t;
    if (b >= 3 * N_t / 2) s -= 4.0;
    g.boresight_sin = s;
  }
  return g;
}

}  // namespace detail

/// Directional power gain of DFT-codebook beam b at azimuth theta (radians).
/// Inside the main lobe (bounded by the two adjacent Dirichlet nulls at
/// sin(theta) = boresight +- 2/N_t) the gain follows the Dirichlet-kernel
/// ratio peaking at N_t; everywhere else it is the side-lobe floor g_min,
/// which also floors the in-lobe tails so the gain never drops below it.
inline double beam_gain(int b, double theta, int N_t, double g_min) {
  if (b < 0 || b >= 2 * N_t) throw std::domain_error("beam_gain: beam index out of range");
  const auto geo = detail::beam_geometry(b, N_t);
  const double sin_t = std::sin(theta);
  const double cos_t = std::cos(theta);
  const double half_width = 2.0 / N_t;

  bool in_lobe;
  if (std::abs(geo.boresight_sin) == 1.0) {
    in_lobe = std::abs(sin_t - geo.boresight_sin) <= half_width;
  } else {
    const bool plane_ok = geo.back_half ? (cos_t <= 0.0) : (cos_t >= 0.0);
    in_lobe = plane_ok && std::abs(sin_t - geo.boresight_sin) <= half_width;
  }
  if (!in_lobe) return g_min;

  const double x = sin_t - geo.boresight_sin;
  const double den = std::sin(M_PI * x / 2.0);
  if (std::abs(den) < 1e-8) return static_cast<double>(N_t);  // removable singularity
  const double num = std::sin(N_t * M_PI * x / 2.0);
  return std::max((num * num) / (den * den) / N_t, g_min);
}

/// Azimuth of the main-lobe peak of beam b, in [0, 2*pi).
inline double beam_boresight_azimuth(int b, int N_t) {
  if (b < 0 || b >= 2 * N_t) throw std::domain_error("beam_boresight_azimuth: beam index out of range");
  const auto geo = detail::beam_geometry(b, N_t);
  double theta = std::asin(geo.boresight_sin);
  if (geo.back_half) theta = M_PI - theta;
  if (theta < 0.0) theta += 2.0 * M_PI;
  return theta;
}

/// Beam with maximum gain toward the user; ties go to the lowest index.
inline int select_serving_beam(const Vec2& bs_pos, const Vec2& user_pos, int N_t, double g_min) {
  const double dx = user_pos.x - bs_pos.x;
  const double dy = user_pos.y - bs_pos.y;
  if (std::hypot(dx, dy) < 1e-9)
    throw std::domain_error("select_serving_beam: coincident BS and user positions");
  const double theta = std::atan2(dy, dx);
  int best = 0;
  double best_gain = -1.0;
  for (int b = 0; b < 2 * N_t; ++b) {
    const double g = beam_gain(b, theta, N_t, g_min);
    if (g > best_gain) {
      best_gain = g;
      best = b;
    }
  }
  return best;
}

/// Per-user rate requirements gamma_{k,u} in bits/s.
struct RateRequirements {
  std::vector<std::vector<double>> gamma;  // K x U

  double at(int k, int u) const { return gamma[k][u]; }
  /// Flat view indexed by node id k*U+u.
  std::vector<double> flat() const {
    std::vector<double> out;
    for (const auto& row : gamma) out.insert(out.end(), row.begin(), row.end());
    return out;
  }
};

/// gamma = W * N_RF * X / U with X ~ U(1, 4) i.i.d. per user.
inline RateRequirements gen_rate_requirements(const RadioConfig& cfg, Rng& rng) {
  RateRequirements rr;
  rr.gamma.assign(cfg.K, std::vector<double>(cfg.U, 0.0));
  for (int k = 0; k < cfg.K; ++k) {
    for (int u = 0; u < cfg.U; ++u) {
      const double x = 1.0 + 3.0 * rng.uniform01();
      rr.gamma[k][u] = cfg.W_Hz * cfg.N_RF * x / cfg.U;
    }
  }
  return rr;
}

/// One immutable network realization: geometry, per-link path losses,
/// serving beams and the beam-gain cache used by both the interference graph
/// and the SINR evaluation.
struct NetworkScenario {
  RadioConfig config;
  std::uint64_t rng_seed = 0;
  std::vector<Vec2> bs_pos;                       // K
  std::vector<std::vector<Vec2>> user_pos;        // K x U
  std::vector<std::vector<std::uint8_t>> los_flag;  // K x (K*U): BS k vs global user
  std::vector<std::vector<double>> path_loss_lin;   // K x (K*U), linear channel gain
  std::vector<std::vector<int>> serving_beam;       // K x U
  // gain_cache[i][j]: gain of the beam serving node i, evaluated at the
  // azimuth from i's BS to node j. Diagonal = local serving gain.
  std::vector<std::vector<double>> gain_cache;

  int node(int k, int u) const { return k * config.U + u; }
  int cell_of(int node_id) const { return node_id / config.U; }
  int user_of(int node_id) const { return node_id % config.U; }
  const Vec2& pos_of(int node_id) const {
    return user_pos[cell_of(node_id)][user_of(node_id)];
  }
  double noise_watt() const { return noise_power_watt(config); }
  /// Local channel gain alpha_{k,u} = L^k_{k,u} * G^{k,u}_{k,u}.
  double local_gain(int node_id) const {
    return path_loss_lin[cell_of(node_id)][node_id] * gain_cache[node_id][node_id];
  }

  static NetworkScenario generate(const RadioConfig& cfg, std::uint64_t seed) {
    return generate(cfg, seed, build_hex_layout(cfg.K, cfg.radius_m));
  }

  static NetworkScenario generate(const RadioConfig& cfg, std::uint64_t seed,
                                  std::vector<Vec2> layout) {
    cfg.validate();
    if (static_cast<int>(layout.size()) != cfg.K)
      throw std::invalid_argument("NetworkScenario: layout size does not match K");
    NetworkScenario s;
    s.config = cfg;
    s.rng_seed = seed;
    s.bs_pos = std::move(layout);
    Rng rng(seed);
    s.user_pos = drop_users(s.bs_pos, cfg.U, cfg.radius_m, rng);

    const int n = cfg.num_users();
    s.los_flag.assign(cfg.K, std::vector<std::uint8_t>(n, 0));
    s.path_loss_lin.assign(cfg.K, std::vector<double>(n, 0.0));
    // Serving links are always LoS; remote links draw LoS/NLoS once per
    // realization and stay fixed for all periods.
    for (int k = 0; k < cfg.K; ++k) {
      for (int j = 0; j < n; ++j) {
        const int cell_j = j / std::max(cfg.U, 1);
        const Vec2& p = s.user_pos[cell_j][j % std::max(cfg.U, 1)];
        double d = distance(s.bs_pos[k], p);
        if (d < 1e-6) d = 1e-6;  // degenerate co-location guard
        bool los;
        if (k == cell_j) {
          los = true;
        } else {
          los = rng.uniform01() < los_probability(d);
        }
        s.los_flag[k][j] = los ? 1 : 0;
        s.path_loss_lin[k][j] = db_to_lin(-path_loss_db(d, los, cfg.fc_GHz));
      }
    }

    s.serving_beam.assign(cfg.K, std::vector<int>(cfg.U, 0));
    for (int k = 0; k < cfg.K; ++k) {
      for (int u = 0; u < cfg.U; ++u) {
        s.serving_beam[k][u] =
            select_serving_beam(s.bs_pos[k], s.user_pos[k][u], cfg.N_t, cfg.g_min);
      }
    }

    s.gain_cache.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
      const int ki = i / cfg.U;
      const int beam = s.serving_beam[ki][i % cfg.U];
      for (int j = 0; j < n; ++j) {
        const Vec2& p = s.pos_of(j);
        const double dx = p.x - s.bs_pos[ki].x;
        const double dy = p.y - s.bs_pos[ki].y;
        double theta;
        if (std::hypot(dx, dy) < 1e-9) {
          theta = beam_boresight_azimuth(beam, cfg.N_t);  // co-located: boresight hit
        } else {
          theta = std::atan2(dy, dx);
        }
        s.gain_cache[i][j] = beam_gain(beam, theta, cfg.N_t, cfg.g_min);
      }
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// JSON serialization (positions in meters, losses in dB, gains linear)
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const RadioConfig& c) {
  return nlohmann::json{{"K", c.K},
                        {"U", c.U},
                        {"N_RF", c.N_RF},
                        {"N", c.N},
                        {"N_t", c.N_t},
                        {"g_min", c.g_min},
                        {"fc_GHz", c.fc_GHz},
                        {"W_Hz", c.W_Hz},
                        {"radius_m", c.radius_m},
                        {"Pmax_dBm", c.Pmax_dBm},
                        {"P0_dBm", c.P0_dBm},
                        {"noise_figure_dB", c.noise_figure_dB},
                        {"epsilon", c.epsilon},
                        {"eta", c.eta},
                        {"periods", c.periods}};
}

inline RadioConfig radio_config_from_json(const nlohmann::json& j) {
  RadioConfig c;
  c.K = j.at("K").get<int>();
  c.U = j.at("U").get<int>();
  c.N_RF = j.at("N_RF").get<int>();
  c.N = j.at("N").get<int>();
  c.N_t = j.at("N_t").get<int>();
  c.g_min = j.at("g_min").get<double>();
  c.fc_GHz = j.at("fc_GHz").get<double>();
  c.W_Hz = j.at("W_Hz").get<double>();
  c.radius_m = j.at("radius_m").get<double>();
  c.Pmax_dBm = j.at("Pmax_dBm").get<double>();
  c.P0_dBm = j.at("P0_dBm").get<double>();
  c.noise_figure_dB = j.at("noise_figure_dB").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.eta = j.at("eta").get<double>();
  c.periods = j.at("periods").get<int>();
  return c;
}

inline nlohmann::json to_json(const NetworkScenario& s) {
  nlohmann::json j;
  j["config"] = to_json(s.config);
  j["rng_seed"] = s.rng_seed;
  auto pts = nlohmann::json::array();
  for (const auto& p : s.bs_pos) pts.push_back({p.x, p.y});
  j["bs_pos"] = pts;
  auto cells = nlohmann::json::array();
  for (const auto& cell : s.user_pos) {
    auto arr = nlohmann::json::array();
    for (const auto& p : cell) arr.push_back({p.x, p.y});
    cells.push_back(arr);
  }
  j["user_pos"] = cells;
  j["los_flag"] = s.los_flag;
  auto losses = nlohmann::json::array();
  for (const auto& row : s.path_loss_lin) {
    auto arr = nlohmann::json::array();
    for (double lin : row) arr.push_back(-lin_to_db(lin));  // store as dB loss
    losses.push_back(arr);
  }
  j["path_loss_dB"] = losses;
  j["serving_beam"] = s.serving_beam;
  j["gain_cache"] = s.gain_cache;
  return j;
}

inline NetworkScenario scenario_from_json(const nlohmann::json& j) {
  NetworkScenario s;
  s.config = radio_config_from_json(j.at("config"));
  s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& p : j.at("bs_pos")) s.bs_pos.push_back(Vec2{p.at(0), p.at(1)});
  for (const auto& cell : j.at("user_pos")) {
    std::vector<Vec2> row;
    for (const auto& p : cell) row.push_back(Vec2{p.at(0), p.at(1)});
    s.user_pos.push_back(std::move(row));
  }
  s.los_flag = j.at("los_flag").get<std::vector<std::vector<std::uint8_t>>>();
  for (const auto& row : j.at("path_loss_dB")) {
    std::vector<double> lin_row;
    for (double loss_db : row) lin_row.push_back(db_to_lin(-loss_db));
    s.path_loss_lin.push_back(std::move(lin_row));
  }
  s.serving_beam = j.at("serving_beam").get<std::vector<std::vector<int>>>();
  s.gain_cache = j.at("gain_cache").get<std::vector<std::vector<double>>>();
  return s;
}

}  // namespace nifsim
