#include "staralloc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace staralloc {

void SystemConfig::validate() const {
  if (num_subchannels < 1) throw std::invalid_argument("num_subchannels must be positive");
  if (num_users < 1) throw std::invalid_argument("num_users must be positive");
  if (num_users != 2 * num_subchannels)
    throw std::invalid_argument("num_users must equal 2 * num_subchannels");
  if (num_elements < 1) throw std::invalid_argument("num_elements must be >= 1");
  if (!(p_max > 0.0)) throw std::invalid_argument("p_max must be positive");
  if (!(qos_rate >= 0.0)) throw std::invalid_argument("qos_rate must be non-negative");
  if (!(noise_power > 0.0)) throw std::invalid_argument("noise_power must be positive");
  if (!(pathloss_ref > 0.0)) throw std::invalid_argument("pathloss_ref must be positive");
  if (!(rician_ap_surface >= 0.0) || !(rician_surface_user >= 0.0))
    throw std::invalid_argument("Rician factors must be non-negative");
  if (!(user_radius > 0.0)) throw std::invalid_argument("user_radius must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key + ": '" + value + "'");
  }
  if (trim(value.substr(pos)) != "")
    throw std::invalid_argument("config: trailing characters for " + key + ": '" + value + "'");
  return v;
}

Vec3 parse_vec3(const std::string& key, std::string value) {
  for (auto& c : value)
    if (c == ',') c = ' ';
  std::istringstream is(value);
  Vec3 v;
  if (!(is >> v.x() >> v.y() >> v.z()))
    throw std::invalid_argument("config: " + key + " needs three coordinates");
  std::string rest;
  if (is >> rest)
    throw std::invalid_argument("config: " + key + " has trailing characters");
  return v;
}

}  // namespace

SystemConfig parse_config(const std::string& text) {
  SystemConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "num_subchannels") cfg.num_subchannels = static_cast<int>(parse_double(key, value));
    else if (key == "num_users") cfg.num_users = static_cast<int>(parse_double(key, value));
    else if (key == "num_elements") cfg.num_elements = static_cast<int>(parse_double(key, value));
    else if (key == "p_max") cfg.p_max = parse_double(key, value);
    else if (key == "qos_rate") cfg.qos_rate = parse_double(key, value);
    else if (key == "noise_power") cfg.noise_power = parse_double(key, value);
    else if (key == "pathloss_ref") cfg.pathloss_ref = parse_double(key, value);
    else if (key == "pathloss_ref_db") cfg.pathloss_ref = db_to_linear(parse_double(key, value));
    else if (key == "exponent_ap_surface") cfg.exponent_ap_surface = parse_double(key, value);
    else if (key == "exponent_surface_user") cfg.exponent_surface_user = parse_double(key, value);
    else if (key == "rician_ap_surface") cfg.rician_ap_surface = parse_double(key, value);
    else if (key == "rician_ap_surface_db") cfg.rician_ap_surface = db_to_linear(parse_double(key, value));
    else if (key == "rician_surface_user") cfg.rician_surface_user = parse_double(key, value);
    else if (key == "rician_surface_user_db") cfg.rician_surface_user = db_to_linear(parse_double(key, value));
    else if (key == "surface_center") cfg.surface_center = parse_vec3(key, value);
    else if (key == "user_radius") cfg.user_radius = parse_double(key, value);
    else if (key == "rng_seed") cfg.rng_seed = static_cast<std::uint64_t>(parse_double(key, value));
    else if (key == "tolerance") cfg.tolerance = parse_double(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace staralloc
